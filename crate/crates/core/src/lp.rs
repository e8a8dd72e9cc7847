//! Dense primal simplex for the packing LP behind matrix-game solving.
//!
//! Solves `max 1ᵀy  s.t.  B y ≤ 1, y ≥ 0` for a strictly positive `B`. The
//! slack basis is feasible from the start, so no phase one is needed, and the
//! dual `min 1ᵀx  s.t.  Bᵀx ≥ 1, x ≥ 0` is recovered from the final basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const REDUCED_COST_EPS: f64 = 1e-12;
const PIVOT_EPS: f64 = 1e-11;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 40;

pub(crate) struct PackingSolution {
    /// Optimal `y`, one entry per column of `B`.
    pub primal: Vec<f64>,
    /// Optimal `x`, one entry per row of `B`.
    pub dual: Vec<f64>,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    width: usize,
    cells: Vec<f64>,
    /// Reduced costs for every variable, plus the negated objective at the end.
    reduced: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(b: &[f64], rows: usize, cols: usize) -> Self {
        let width = cols + rows + 1;
        let mut cells = vec![0.0; rows * width];
        for r in 0..rows {
            let row = &mut cells[r * width..(r + 1) * width];
            row[..cols].copy_from_slice(&b[r * cols..(r + 1) * cols]);
            row[cols + r] = 1.0;
            row[width - 1] = 1.0;
        }
        let mut reduced = vec![0.0; width];
        reduced[..cols].iter_mut().for_each(|d| *d = 1.0);
        Tableau {
            rows,
            cols,
            width,
            cells,
            reduced,
            basis: (cols..cols + rows).collect(),
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let candidates = self.reduced[..self.width - 1].iter().enumerate();
        if bland {
            candidates
                .filter(|(_, &d)| d > REDUCED_COST_EPS)
                .map(|(j, _)| j)
                .next()
        } else {
            candidates
                .filter(|(_, &d)| d > REDUCED_COST_EPS)
                .fold(None, |best: Option<(usize, f64)>, (j, &d)| match best {
                    Some((_, bd)) if bd >= d => best,
                    _ => Some((j, d)),
                })
                .map(|(j, _)| j)
        }
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, col);
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-13 * (1.0 + bratio.abs());
                    if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        let pivot_row: Vec<f64> = {
            let row = &mut self.cells[pr * w..(pr + 1) * w];
            row.iter_mut().for_each(|v| *v *= inv);
            row[pc] = 1.0;
            row.to_vec()
        };
        let nonzero: Vec<usize> = (0..w).filter(|&c| pivot_row[c] != 0.0).collect();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let row = &mut self.cells[r * w..(r + 1) * w];
            let f = row[pc];
            if f == 0.0 {
                continue;
            }
            for &c in &nonzero {
                row[c] -= f * pivot_row[c];
            }
            row[pc] = 0.0;
        }
        let f = self.reduced[pc];
        if f != 0.0 {
            for &c in &nonzero {
                self.reduced[c] -= f * pivot_row[c];
            }
            self.reduced[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }
}

/// Solves the packing LP for a row-major, strictly positive `rows × cols` matrix.
pub(crate) fn solve_packing(b: &[f64], rows: usize, cols: usize) -> Result<PackingSolution> {
    debug_assert_eq!(b.len(), rows * cols);
    let mut t = Tableau::new(b, rows, cols);
    let max_pivots = 50 * (rows + cols) + 1000;
    let mut pivots = 0;
    let mut streak = 0;
    loop {
        let Some(pc) = t.entering(streak >= DEGENERATE_STREAK) else {
            break;
        };
        let Some(pr) = t.leaving(pc) else {
            return Err(Error::Degenerate(
                "packing LP reported unbounded; payoff shift failed".into(),
            ));
        };
        if t.rhs(pr) <= 1e-14 {
            streak += 1;
        } else {
            streak = 0;
        }
        t.pivot(pr, pc);
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Degenerate(format!(
                "simplex exceeded {max_pivots} pivots (cycling suspected)"
            )));
        }
    }

    let (primal, dual) = refine_from_basis(b, &t).unwrap_or_else(|| tableau_solution(&t));
    Ok(PackingSolution {
        primal,
        dual,
        pivots,
    })
}

fn tableau_solution(t: &Tableau) -> (Vec<f64>, Vec<f64>) {
    let mut primal = vec![0.0; t.cols];
    for (r, &var) in t.basis.iter().enumerate() {
        if var < t.cols {
            primal[var] = t.rhs(r).max(0.0);
        }
    }
    let dual = (0..t.rows)
        .map(|i| (-t.reduced[t.cols + i]).max(0.0))
        .collect();
    (primal, dual)
}

/// Recomputes the basic solution from the original data with a fresh LU
/// factorization, removing round-off accumulated over many tableau pivots.
fn refine_from_basis(b: &[f64], t: &Tableau) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = t.rows;
    let n = t.cols;
    let basis_matrix = DMatrix::from_fn(m, m, |i, k| {
        let var = t.basis[k];
        if var < n {
            b[i * n + var]
        } else if var - n == i {
            1.0
        } else {
            0.0
        }
    });
    let lu = basis_matrix.clone().lu();
    let y_basic = lu.solve(&nalgebra::DVector::from_element(m, 1.0))?;
    let cost = nalgebra::DVector::from_fn(m, |k, _| if t.basis[k] < n { 1.0 } else { 0.0 });
    let x = basis_matrix.transpose().lu().solve(&cost)?;

    let feasible = y_basic.iter().chain(x.iter()).all(|v| v.is_finite() && *v >= -1e-9);
    if !feasible {
        return None;
    }
    let mut primal = vec![0.0; n];
    for (k, &var) in t.basis.iter().enumerate() {
        if var < n {
            primal[var] = y_basic[k].max(0.0);
        }
    }
    let dual = x.iter().map(|v| v.max(0.0)).collect();
    Some((primal, dual))
}
