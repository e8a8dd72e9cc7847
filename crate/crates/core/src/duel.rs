//! Silent duels: two players with a fixed number of attempts on `[0, 1]`,
//! monotone accuracy functions, and no knowledge of the opponent's misses.
//!
//! Payoff law: a hit by player 1 scores +1, a hit by player 2 scores -1, a
//! simultaneous mutual hit or mutual survival scores 0; shots are independent
//! and the first hit ends the duel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_game::{self, MixedStrategy, PayoffMatrix};

/// Largest number of pure-strategy pairs [`discretize_duel`] will materialize.
pub const MAX_MATRIX_PAIRS: u128 = 10_000_000;

/// Largest number of pure strategies per player [`solve_duel`] will enumerate.
pub const MAX_PURE_STRATEGIES: u128 = 2_000_000;

/// Mass below this (relative to a unit total) is treated as solver noise when
/// extracting supports.
pub const ATOM_TOL: f64 = 1e-6;

/// Matrices up to this many entries are solved directly by the simplex; larger
/// duels go through strategy generation.
const DIRECT_SOLVE_PAIRS: u128 = 1_000_000;

const TRIALS_PER_STREAM: usize = 8192;

/// Hit probability as a function of firing time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AccuracyFunction {
    Identity,
    Power { k: f64 },
    /// Piecewise-linear interpolation through `(t, probability)` points.
    Table { points: Vec<[f64; 2]> },
}

impl AccuracyFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            AccuracyFunction::Identity => Ok(()),
            AccuracyFunction::Power { k } => {
                if k.is_finite() && *k > 0.0 {
                    Ok(())
                } else {
                    Err(Error::input(format!("power accuracy needs k > 0, got {k}")))
                }
            }
            AccuracyFunction::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::input("accuracy table needs at least two points"));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::input("accuracy table entries must be finite"));
                }
                if points[0] != [0.0, 0.0] || points[points.len() - 1] != [1.0, 1.0] {
                    return Err(Error::input(
                        "accuracy table must start at (0, 0) and end at (1, 1)",
                    ));
                }
                for w in points.windows(2) {
                    if w[1][0] <= w[0][0] {
                        return Err(Error::input("accuracy table times must be strictly increasing"));
                    }
                    if w[1][1] < w[0][1] {
                        return Err(Error::input("accuracy table must be nondecreasing"));
                    }
                }
                if points.iter().any(|p| !(0.0..=1.0).contains(&p[1])) {
                    return Err(Error::input("accuracy table probabilities must lie in [0, 1]"));
                }
                Ok(())
            }
        }
    }

    /// Probability that a single attempt at time `t` succeeds.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            AccuracyFunction::Identity => t,
            AccuracyFunction::Power { k } => t.powf(*k),
            AccuracyFunction::Table { points } => {
                let k = points.partition_point(|p| p[0] <= t);
                if k == 0 {
                    return points[0][1];
                }
                if k == points.len() {
                    return points[k - 1][1];
                }
                let ([t0, v0], [t1, v1]) = (points[k - 1], points[k]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelSpec {
    /// Attempts available to player 1.
    pub m: usize,
    /// Attempts available to player 2.
    pub n: usize,
    pub p: AccuracyFunction,
    pub q: AccuracyFunction,
}

impl DuelSpec {
    pub fn new(m: usize, n: usize, p: AccuracyFunction, q: AccuracyFunction) -> Result<Self> {
        let spec = DuelSpec { m, n, p, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn symmetric_one_shot() -> Self {
        DuelSpec {
            m: 1,
            n: 1,
            p: AccuracyFunction::Identity,
            q: AccuracyFunction::Identity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::input("each player needs at least one attempt"));
        }
        self.p.validate()?;
        self.q.validate()
    }
}

/// Nondecreasing firing times in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeVector(Vec<f64>);

impl TimeVector {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite() || !(0.0..=1.0).contains(t)) {
            return Err(Error::input("firing times must lie in [0, 1]"));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::input("firing times must be nondecreasing"));
        }
        Ok(TimeVector(times))
    }

    /// Sorts the times first.
    pub fn sorted(mut times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| t.is_nan()) {
            return Err(Error::input("firing times must lie in [0, 1]"));
        }
        times.sort_by(f64::total_cmp);
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for TimeVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TimeVector::new(v)
    }
}

impl From<TimeVector> for Vec<f64> {
    fn from(v: TimeVector) -> Self {
        v.0
    }
}

/// Shots grouped by firing instant: `(time key, player-1 shots, player-2 shots)`.
fn group_events<T: PartialOrd + Copy>(x: &[T], y: &[T]) -> Vec<(T, u32, u32)> {
    let mut out: Vec<(T, u32, u32)> = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j >= y.len() || (i < x.len() && x[i] <= y[j]);
        let t = if take_x { x[i] } else { y[j] };
        let (a, b) = if take_x { (1, 0) } else { (0, 1) };
        if take_x {
            i += 1;
        } else {
            j += 1;
        }
        match out.last_mut() {
            Some(last) if last.0 == t => {
                last.1 += a;
                last.2 += b;
            }
            _ => out.push((t, a, b)),
        }
    }
    out
}

/// Event sweep over sorted shot lists. `p`/`q` map a time key to hit probability.
fn sweep<T: PartialOrd + Copy>(x: &[T], y: &[T], p: impl Fn(T) -> f64, q: impl Fn(T) -> f64) -> f64 {
    let mut live = 1.0;
    let mut gain = 0.0;
    for (t, a, b) in group_events(x, y) {
        let hit1 = if a == 0 { 0.0 } else { 1.0 - (1.0 - p(t)).powi(a as i32) };
        let hit2 = if b == 0 { 0.0 } else { 1.0 - (1.0 - q(t)).powi(b as i32) };
        gain += live * (hit1 * (1.0 - hit2) - hit2 * (1.0 - hit1));
        live *= (1.0 - hit1) * (1.0 - hit2);
        if live == 0.0 {
            break;
        }
    }
    gain
}

fn check_lengths(spec: &DuelSpec, x: &TimeVector, y: &TimeVector) -> Result<()> {
    if x.len() != spec.m || y.len() != spec.n {
        return Err(Error::input(format!(
            "time vectors have lengths ({}, {}) but the duel allows ({}, {}) attempts",
            x.len(),
            y.len(),
            spec.m,
            spec.n
        )));
    }
    Ok(())
}

/// Expected gain to player 1 when the players fire at the given times.
pub fn duel_payoff(spec: &DuelSpec, x: &TimeVector, y: &TimeVector) -> Result<f64> {
    spec.validate()?;
    check_lengths(spec, x, y)?;
    Ok(sweep(x.times(), y.times(), |t| spec.p.eval(t), |t| spec.q.eval(t)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Monte Carlo estimate of [`duel_payoff`].
///
/// Trials are split into fixed-size streams; stream `k` draws from ChaCha8
/// seeded with `seed` on stream number `k`, so the result depends only on
/// `(seed, trials)` and not on how the streams are scheduled.
pub fn simulate_duel(
    spec: &DuelSpec,
    x: &TimeVector,
    y: &TimeVector,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    spec.validate()?;
    check_lengths(spec, x, y)?;
    if trials == 0 {
        return Err(Error::input("simulation needs at least one trial"));
    }
    let events: Vec<(f64, f64, u32, f64, u32)> = group_events(x.times(), y.times())
        .into_iter()
        .map(|(t, a, b)| (t, spec.p.eval(t), a, spec.q.eval(t), b))
        .collect();

    let streams = trials.div_ceil(TRIALS_PER_STREAM);
    let partials: Vec<(f64, f64)> = (0..streams)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = TRIALS_PER_STREAM.min(trials - k * TRIALS_PER_STREAM);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..count {
                let outcome = play_once(&events, &mut rng);
                sum += outcome;
                sum_sq += outcome * outcome;
            }
            (sum, sum_sq)
        })
        .collect();

    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = trials as f64;
    let estimate = sum / n;
    let stderr = if trials > 1 {
        let var = ((sum_sq - n * estimate * estimate) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        estimate,
        stderr,
        trials,
    })
}

fn play_once(events: &[(f64, f64, u32, f64, u32)], rng: &mut impl Rng) -> f64 {
    for &(_, p, a, q, b) in events {
        let mut hit1 = false;
        for _ in 0..a {
            hit1 |= rng.random::<f64>() < p;
        }
        let mut hit2 = false;
        for _ in 0..b {
            hit2 |= rng.random::<f64>() < q;
        }
        match (hit1, hit2) {
            (true, false) => return 1.0,
            (false, true) => return -1.0,
            (true, true) => return 0.0,
            (false, false) => {}
        }
    }
    0.0
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Uniform grid on `[0, 1]` including both endpoints.
pub fn uniform_grid(grid_n: usize) -> Vec<f64> {
    let last = (grid_n - 1) as f64;
    (0..grid_n).map(|i| i as f64 / last).collect()
}

/// Strictly increasing `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Pure strategies of a discretized duel: sorted sets of distinct grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct DuelGrid {
    pub grid: Vec<f64>,
    pub p1: Vec<Vec<usize>>,
    pub p2: Vec<Vec<usize>>,
}

impl DuelGrid {
    pub fn new(spec: &DuelSpec, grid_n: usize) -> Result<Self> {
        spec.validate()?;
        if grid_n < 2 {
            return Err(Error::input("duel grid needs at least two points"));
        }
        if spec.m > grid_n || spec.n > grid_n {
            return Err(Error::input(format!(
                "a {grid_n}-point grid cannot hold {} distinct firing times",
                spec.m.max(spec.n)
            )));
        }
        if grid_n as u128 > MAX_PURE_STRATEGIES {
            return Err(Error::Resource(format!(
                "grid of {grid_n} points exceeds the limit of {MAX_PURE_STRATEGIES}"
            )));
        }
        let (c1, c2) = (binomial(grid_n, spec.m), binomial(grid_n, spec.n));
        if c1 > MAX_PURE_STRATEGIES || c2 > MAX_PURE_STRATEGIES {
            return Err(Error::Resource(format!(
                "duel has {c1} x {c2} pure strategies (limit {MAX_PURE_STRATEGIES} per player); \
                 use a smaller grid or Monte Carlo evaluation"
            )));
        }
        Ok(DuelGrid {
            grid: uniform_grid(grid_n),
            p1: combinations(grid_n, spec.m),
            p2: combinations(grid_n, spec.n),
        })
    }

    pub fn times(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.grid[i]).collect()
    }
}

/// Payoff evaluator over grid-index strategies with accuracies tabulated once.
struct GridPayoff<'a> {
    grid: &'a DuelGrid,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl<'a> GridPayoff<'a> {
    fn new(spec: &DuelSpec, grid: &'a DuelGrid) -> Self {
        GridPayoff {
            p: grid.grid.iter().map(|&t| spec.p.eval(t)).collect(),
            q: grid.grid.iter().map(|&t| spec.q.eval(t)).collect(),
            grid,
        }
    }

    fn eval(&self, row: usize, col: usize) -> f64 {
        sweep(&self.grid.p1[row], &self.grid.p2[col], |k| self.p[k], |k| self.q[k]).clamp(-1.0, 1.0)
    }
}

/// Payoff matrix over all pure time vectors on a `grid_n`-point uniform grid.
///
/// One-shot players get their grid coordinates as labels.
pub fn discretize_duel(spec: &DuelSpec, grid_n: usize) -> Result<PayoffMatrix> {
    spec.validate()?;
    if grid_n >= 2 {
        let pairs = binomial(grid_n, spec.m).saturating_mul(binomial(grid_n, spec.n));
        if pairs > MAX_MATRIX_PAIRS {
            return Err(Error::Resource(format!(
                "discretized duel would have {pairs} pure-strategy pairs (limit {MAX_MATRIX_PAIRS}); \
                 use a smaller grid or Monte Carlo evaluation"
            )));
        }
    }
    let grid = DuelGrid::new(spec, grid_n)?;
    let payoff = GridPayoff::new(spec, &grid);
    let game = PayoffMatrix::from_fn(grid.p1.len(), grid.p2.len(), |i, j| payoff.eval(i, j))?;
    game.with_labels(
        (spec.m == 1).then(|| grid.grid.clone()),
        (spec.n == 1).then(|| grid.grid.clone()),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelSolution {
    pub value: f64,
    /// Saddle gap of the returned strategies.
    pub residual: f64,
    /// Marginal distribution of player 1's firing times over the grid.
    pub p1_density: MixedStrategy,
    pub p2_density: MixedStrategy,
    /// Lower end `a` of the support interval `[a, 1]`.
    pub support_p1: f64,
    pub support_p2: f64,
    pub grid_n: usize,
    /// Player 1's optimal mixture over time vectors (positive weights only).
    pub p1_mix: Vec<(Vec<f64>, f64)>,
    pub p2_mix: Vec<(Vec<f64>, f64)>,
}

fn marginal_density(grid: &DuelGrid, tuples: &[Vec<usize>], weights: &[f64], shots: usize) -> Result<MixedStrategy> {
    let mut density = vec![0.0; grid.grid.len()];
    for (tuple, &w) in tuples.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for &k in tuple {
            density[k] += w / shots as f64;
        }
    }
    MixedStrategy::normalized(density)?.with_grid(grid.grid.clone())
}

fn mixture(grid: &DuelGrid, tuples: &[Vec<usize>], weights: &[f64]) -> Vec<(Vec<f64>, f64)> {
    tuples
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > ATOM_TOL)
        .map(|(t, &w)| (grid.times(t), w))
        .collect()
}

/// Lower edge of the smallest interval `[a, 1]` holding all mass above `tol`.
pub fn support_lower_edge(density: &MixedStrategy, tol: f64) -> f64 {
    let grid = density.grid();
    density
        .support(tol)
        .first()
        .map_or(1.0, |&k| grid.map_or(k as f64 / (density.len() - 1).max(1) as f64, |g| g[k]))
}

/// Solves the discretized silent duel.
pub fn solve_duel(spec: &DuelSpec, grid_n: usize) -> Result<DuelSolution> {
    let grid = DuelGrid::new(spec, grid_n)?;
    let payoff = GridPayoff::new(spec, &grid);
    let pairs = (grid.p1.len() as u128) * (grid.p2.len() as u128);
    let solution = if pairs <= DIRECT_SOLVE_PAIRS {
        let game = PayoffMatrix::from_fn(grid.p1.len(), grid.p2.len(), |i, j| payoff.eval(i, j))?;
        matrix_game::solve_exact(&game, matrix_game::EXACT_TOL)?
    } else {
        let sol = matrix_game::solve_by_strategy_generation(
            grid.p1.len(),
            grid.p2.len(),
            |i, j| payoff.eval(i, j),
            matrix_game::EXACT_TOL,
        )?;
        if sol.residual > matrix_game::EXACT_TOL {
            return Err(Error::Degenerate(format!(
                "strategy generation stalled with saddle gap {:.3e}",
                sol.residual
            )));
        }
        sol
    };

    let p1_density = marginal_density(&grid, &grid.p1, solution.row_strategy.weights(), spec.m)?;
    let p2_density = marginal_density(&grid, &grid.p2, solution.col_strategy.weights(), spec.n)?;
    Ok(DuelSolution {
        value: solution.value.clamp(-1.0, 1.0),
        residual: solution.residual,
        support_p1: support_lower_edge(&p1_density, ATOM_TOL),
        support_p2: support_lower_edge(&p2_density, ATOM_TOL),
        p1_mix: mixture(&grid, &grid.p1, solution.row_strategy.weights()),
        p2_mix: mixture(&grid, &grid.p2, solution.col_strategy.weights()),
        p1_density,
        p2_density,
        grid_n,
    })
}
