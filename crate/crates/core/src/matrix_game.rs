//! Finite two-person zero-sum games: payoff matrices, mixed strategies and
//! solvers.
//!
//! The row player maximizes and the column player minimizes. A solution is
//! certified by its saddle gap: the spread between the best pure reply to the
//! column strategy and the worst pure reply to the row strategy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;

/// Tolerance used when checking that a strategy sums to one.
pub const MASS_TOL: f64 = 1e-12;

/// Default certification tolerance for [`solve_exact`].
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PayoffMatrixDoc", into = "PayoffMatrixDoc")]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    row_labels: Option<Vec<f64>>,
    col_labels: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PayoffMatrixDoc {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row_labels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    col_labels: Option<Vec<f64>>,
}

impl TryFrom<PayoffMatrixDoc> for PayoffMatrix {
    type Error = Error;

    fn try_from(doc: PayoffMatrixDoc) -> Result<Self> {
        if doc.entries.len() != doc.rows {
            return Err(Error::input(format!(
                "payoff matrix declares {} rows but has {}",
                doc.rows,
                doc.entries.len()
            )));
        }
        if let Some(bad) = doc.entries.iter().position(|r| r.len() != doc.cols) {
            return Err(Error::input(format!(
                "payoff matrix row {bad} does not have {} entries",
                doc.cols
            )));
        }
        let game = PayoffMatrix::new(doc.entries)?;
        game.with_labels(doc.row_labels, doc.col_labels)
    }
}

impl From<PayoffMatrix> for PayoffMatrixDoc {
    fn from(game: PayoffMatrix) -> Self {
        PayoffMatrixDoc {
            rows: game.rows,
            cols: game.cols,
            entries: (0..game.rows).map(|i| game.row(i).to_vec()).collect(),
            row_labels: game.row_labels,
            col_labels: game.col_labels,
        }
    }
}

fn check_labels(labels: &[f64], len: usize, which: &str) -> Result<()> {
    if labels.len() != len {
        return Err(Error::input(format!(
            "{which} labels have length {} but the game has {len}",
            labels.len()
        )));
    }
    if labels.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
        return Err(Error::input(format!("{which} labels must lie in [0, 1]")));
    }
    if labels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input(format!(
            "{which} labels must be strictly increasing"
        )));
    }
    Ok(())
}

impl PayoffMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::input("payoff matrix must have at least one row and column"));
        }
        if entries.iter().any(|r| r.len() != cols) {
            return Err(Error::input("payoff matrix rows have unequal lengths"));
        }
        Self::from_flat(rows, cols, entries.into_iter().flatten().collect())
    }

    /// Builds a matrix from row-major entries.
    pub fn from_flat(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::input("payoff matrix must have at least one row and column"));
        }
        if entries.len() != rows * cols {
            return Err(Error::input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "payoff entry ({}, {}) is not finite",
                k / cols,
                k % cols
            )));
        }
        Ok(PayoffMatrix {
            rows,
            cols,
            entries,
            row_labels: None,
            col_labels: None,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let entries = (0..rows * cols).map(|k| f(k / cols.max(1), k % cols.max(1))).collect();
        Self::from_flat(rows, cols, entries)
    }

    pub fn with_labels(
        mut self,
        row_labels: Option<Vec<f64>>,
        col_labels: Option<Vec<f64>>,
    ) -> Result<Self> {
        if let Some(l) = &row_labels {
            check_labels(l, self.rows, "row")?;
        }
        if let Some(l) = &col_labels {
            check_labels(l, self.cols, "column")?;
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_labels(&self) -> Option<&[f64]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[f64]> {
        self.col_labels.as_deref()
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The same game seen from the column player's side: `-Aᵀ`.
    pub fn negated_transpose(&self) -> PayoffMatrix {
        let entries = (0..self.rows * self.cols)
            .map(|k| -self.get(k % self.rows, k / self.rows))
            .collect();
        PayoffMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
        }
    }

    pub fn is_skew_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j) == -self.get(j, i)))
    }

    /// Expected payoff of each pure row against a column strategy, `A τ`.
    pub fn row_payoffs(&self, tau: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(tau).map(|(a, t)| a * t).sum())
            .collect()
    }

    /// Expected payoff of each pure column against a row strategy, `σᵀ A`.
    pub fn col_payoffs(&self, sigma: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &s) in sigma.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += s * a;
            }
        }
        out
    }
}

/// A probability vector over a finite set of pure strategies, optionally tied
/// to grid coordinates in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<f64>>,
}

impl MixedStrategy {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("a mixed strategy needs at least one weight"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::input("mixed-strategy weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::input(format!(
                "mixed-strategy mass is {total}, expected 1"
            )));
        }
        Ok(MixedStrategy {
            weights,
            grid: None,
        })
    }

    /// Clips negative round-off and rescales to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        weights.iter_mut().for_each(|w| *w = w.max(0.0));
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::input("cannot normalize a strategy with zero mass"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(MixedStrategy {
            weights,
            grid: None,
        })
    }

    pub fn pure(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::input(format!("pure strategy {index} out of range 0..{len}")));
        }
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Ok(MixedStrategy { weights: w, grid: None })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::input("a mixed strategy needs at least one weight"));
        }
        Ok(MixedStrategy {
            weights: vec![1.0 / len as f64; len],
            grid: None,
        })
    }

    /// Attaches grid coordinates (one per weight, strictly increasing in `[0, 1]`).
    pub fn with_grid(mut self, grid: Vec<f64>) -> Result<Self> {
        check_labels(&grid, self.weights.len(), "strategy grid")?;
        self.grid = Some(grid);
        Ok(self)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grid(&self) -> Option<&[f64]> {
        self.grid.as_deref()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Mass sitting on grid point 0, when the strategy lives on a grid that
    /// starts at 0.
    pub fn atom_at_zero(&self) -> Option<f64> {
        match self.grid.as_deref() {
            Some([first, ..]) if *first == 0.0 => Some(self.weights[0]),
            _ => None,
        }
    }

    /// Indices whose weight exceeds `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > tol).collect()
    }

    /// Cumulative distribution over the index order.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w;
                acc.min(1.0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Exact,
    FictitiousPlay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    pub row_strategy: MixedStrategy,
    pub col_strategy: MixedStrategy,
    /// Guaranteed payoff of `row_strategy` against every pure column.
    pub lower: f64,
    /// Worst payoff `col_strategy` concedes to any pure row.
    pub upper: f64,
    /// Saddle gap `upper - lower`.
    pub residual: f64,
    pub method: SolveMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

fn check_dims(game: &PayoffMatrix, sigma: &MixedStrategy, tau: &MixedStrategy) -> Result<()> {
    if sigma.len() != game.rows() || tau.len() != game.cols() {
        return Err(Error::input(format!(
            "strategy sizes ({}, {}) do not match a {}x{} game",
            sigma.len(),
            tau.len(),
            game.rows(),
            game.cols()
        )));
    }
    Ok(())
}

/// The bilinear form `Σ σ(x) τ(y) Ψ(x, y)`.
pub fn expected_payoff(game: &PayoffMatrix, sigma: &MixedStrategy, tau: &MixedStrategy) -> Result<f64> {
    check_dims(game, sigma, tau)?;
    let raw: f64 = game
        .col_payoffs(sigma.weights())
        .iter()
        .zip(tau.weights())
        .map(|(c, t)| c * t)
        .sum();
    Ok(raw.clamp(game.min_entry(), game.max_entry()))
}

/// Pure-strategy security levels `(max_x min_y Ψ, min_y max_x Ψ)`.
pub fn saddle_bounds(game: &PayoffMatrix) -> (f64, f64) {
    let maximin = (0..game.rows())
        .map(|i| game.row(i).iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let minimax = (0..game.cols())
        .map(|j| (0..game.rows()).map(|i| game.get(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    (maximin, minimax)
}

fn certify(
    game: &PayoffMatrix,
    row: Vec<f64>,
    col: Vec<f64>,
    method: SolveMethod,
    iterations: Option<usize>,
) -> Result<GameSolution> {
    let mut row_strategy = MixedStrategy::normalized(row)?;
    let mut col_strategy = MixedStrategy::normalized(col)?;
    if let Some(l) = game.row_labels() {
        row_strategy = row_strategy.with_grid(l.to_vec())?;
    }
    if let Some(l) = game.col_labels() {
        col_strategy = col_strategy.with_grid(l.to_vec())?;
    }
    let lower = game
        .col_payoffs(row_strategy.weights())
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let upper = game
        .row_payoffs(col_strategy.weights())
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let value = (0.5 * (lower + upper)).clamp(game.min_entry(), game.max_entry());
    Ok(GameSolution {
        value,
        row_strategy,
        col_strategy,
        lower,
        upper,
        residual: (upper - lower).max(0.0),
        method,
        iterations,
    })
}

/// Solves the game by linear programming without checking the saddle gap.
fn solve_lp(game: &PayoffMatrix) -> Result<GameSolution> {
    // The packing tableau is rows × (rows + cols); keep the short side as rows.
    if game.rows() > game.cols() {
        let flipped = solve_lp(&game.negated_transpose())?;
        return certify(
            game,
            flipped.col_strategy.weights().to_vec(),
            flipped.row_strategy.weights().to_vec(),
            SolveMethod::Exact,
            flipped.iterations,
        );
    }
    let shift = 1.0 - game.min_entry();
    let shifted: Vec<f64> = game.entries.iter().map(|v| v + shift).collect();
    let sol = lp::solve_packing(&shifted, game.rows(), game.cols())?;
    certify(game, sol.dual, sol.primal, SolveMethod::Exact, Some(sol.pivots))
}

/// Solves a matrix game exactly (simplex on the standard LP formulation).
///
/// The returned strategies satisfy the saddle inequalities against every pure
/// strategy within `tol`; a gap larger than `tol` is reported as an error.
pub fn solve_exact(game: &PayoffMatrix, tol: f64) -> Result<GameSolution> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::input("solver tolerance must be positive"));
    }
    let (maximin, minimax) = saddle_bounds(game);
    if maximin == minimax {
        // Pure saddle point: skip the LP.
        let i = (0..game.rows())
            .find(|&i| game.row(i).iter().copied().fold(f64::INFINITY, f64::min) == maximin)
            .unwrap_or(0);
        let j = (0..game.cols())
            .find(|&j| (0..game.rows()).map(|r| game.get(r, j)).fold(f64::NEG_INFINITY, f64::max) == minimax)
            .unwrap_or(0);
        let mut row = vec![0.0; game.rows()];
        let mut col = vec![0.0; game.cols()];
        row[i] = 1.0;
        col[j] = 1.0;
        return certify(game, row, col, SolveMethod::Exact, Some(0));
    }
    let solution = solve_lp(game)?;
    if solution.residual > tol {
        return Err(Error::Degenerate(format!(
            "exact solve left a saddle gap of {:.3e} (tolerance {tol:.1e})",
            solution.residual
        )));
    }
    Ok(solution)
}

/// Brown–Robinson fictitious play.
///
/// Both players best-respond simultaneously to the opponent's empirical
/// frequencies; ties go to the lowest index. The reported strategies are the
/// empirical mixtures that achieved the tightest lower and upper bounds, so
/// `residual` is a genuine saddle gap for them.
pub fn solve_fictitious_play(game: &PayoffMatrix, max_iterations: usize, tol: f64) -> Result<GameSolution> {
    if max_iterations == 0 {
        return Err(Error::input("fictitious play needs at least one iteration"));
    }
    let (m, n) = (game.rows(), game.cols());
    // Cumulative payoff of each pure row against the column history, and of
    // each pure column against the row history.
    let mut row_totals = vec![0.0; m];
    let mut col_totals = vec![0.0; n];
    let mut row_counts = vec![0u64; m];
    let mut col_counts = vec![0u64; n];

    let mut best_lower = f64::NEG_INFINITY;
    let mut best_upper = f64::INFINITY;
    let mut best_row = vec![0u64; m];
    let mut best_col = vec![0u64; n];

    let mut i = 0;
    let mut iterations = 0;
    for t in 1..=max_iterations {
        iterations = t;
        row_counts[i] += 1;
        for (c, a) in col_totals.iter_mut().zip(game.row(i)) {
            *c += a;
        }
        let j = argmin(&col_totals);
        col_counts[j] += 1;
        for (r, total) in row_totals.iter_mut().enumerate() {
            *total += game.get(r, j);
        }

        let scale = t as f64;
        let lower = col_totals[j] / scale;
        let next_i = argmax(&row_totals);
        let upper = row_totals[next_i] / scale;
        if lower > best_lower {
            best_lower = lower;
            best_row.copy_from_slice(&row_counts);
        }
        if upper < best_upper {
            best_upper = upper;
            best_col.copy_from_slice(&col_counts);
        }
        if best_upper - best_lower <= tol {
            break;
        }
        i = next_i;
    }

    let to_weights = |counts: &[u64]| counts.iter().map(|&c| c as f64).collect::<Vec<_>>();
    certify(
        game,
        to_weights(&best_row),
        to_weights(&best_col),
        SolveMethod::FictitiousPlay,
        Some(iterations),
    )
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = k;
        }
    }
    best
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = k;
        }
    }
    best
}

/// Solves a game whose matrix is too large to materialize by growing
/// restricted subgames with best responses (the double-oracle scheme).
///
/// `payoff(i, j)` is evaluated lazily; memory is proportional to the size of
/// the generated subgame. Best responses are found by full enumeration of
/// each player's pure strategies, in parallel, with lowest-index tie breaks.
pub fn solve_by_strategy_generation<F>(rows: usize, cols: usize, payoff: F, tol: f64) -> Result<GameSolution>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    if rows == 0 || cols == 0 {
        return Err(Error::input("game must have at least one strategy per player"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::input("solver tolerance must be positive"));
    }
    let mut row_set = vec![0usize];
    let first_col = (0..cols)
        .map(|j| payoff(0, j))
        .enumerate()
        .fold((0, f64::INFINITY), |b, (j, v)| if v < b.1 { (j, v) } else { b })
        .0;
    let mut col_set = vec![first_col];
    let mut sub: Vec<Vec<f64>> = vec![vec![payoff(0, first_col)]];

    let mut rounds = 0;
    loop {
        rounds += 1;
        let restricted = solve_lp(&PayoffMatrix::new(sub.clone())?)?;
        let sigma: Vec<(usize, f64)> = row_set
            .iter()
            .zip(restricted.row_strategy.weights())
            .filter(|(_, &w)| w > 0.0)
            .map(|(&r, &w)| (r, w))
            .collect();
        let tau: Vec<(usize, f64)> = col_set
            .iter()
            .zip(restricted.col_strategy.weights())
            .filter(|(_, &w)| w > 0.0)
            .map(|(&c, &w)| (c, w))
            .collect();

        let (best_row, upper) = (0..rows)
            .into_par_iter()
            .map(|i| (i, tau.iter().map(|&(j, w)| w * payoff(i, j)).sum::<f64>()))
            .reduce(|| (usize::MAX, f64::NEG_INFINITY), |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a }
            });
        let (best_col, lower) = (0..cols)
            .into_par_iter()
            .map(|j| (j, sigma.iter().map(|&(i, w)| w * payoff(i, j)).sum::<f64>()))
            .reduce(|| (usize::MAX, f64::INFINITY), |a, b| {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a }
            });

        let add_row = upper - restricted.value > 0.5 * tol && !row_set.contains(&best_row);
        let add_col = restricted.value - lower > 0.5 * tol && !col_set.contains(&best_col);
        if upper - lower <= tol || !(add_row || add_col) {
            let mut row = vec![0.0; rows];
            for &(i, w) in &sigma {
                row[i] = w;
            }
            let mut col = vec![0.0; cols];
            for &(j, w) in &tau {
                col[j] = w;
            }
            let row_strategy = MixedStrategy::normalized(row)?;
            let col_strategy = MixedStrategy::normalized(col)?;
            return Ok(GameSolution {
                value: 0.5 * (lower + upper),
                row_strategy,
                col_strategy,
                lower,
                upper,
                residual: (upper - lower).max(0.0),
                method: SolveMethod::Exact,
                iterations: Some(rounds),
            });
        }
        if add_row {
            row_set.push(best_row);
            let new_row = col_set.iter().map(|&j| payoff(best_row, j)).collect();
            sub.push(new_row);
        }
        if add_col {
            col_set.push(best_col);
            for (r, row) in row_set.iter().zip(sub.iter_mut()) {
                row.push(payoff(*r, best_col));
            }
        }
    }
}
