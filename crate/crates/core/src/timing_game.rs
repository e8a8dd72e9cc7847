//! Symmetric games of timing on `[0, 1]`.
//!
//! A kernel is given by its upper triangle `A(x, y)` for `x ≤ y`; the full
//! kernel is `K(x, y) = A(x, y)` for `x < y`, `0` on the diagonal and
//! `-A(y, x)` for `x > y`, so `K(x, y) = -K(y, x)` holds bit for bit on the
//! grid. Such games have value zero and both players share optimal strategies.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::duel::{uniform_grid, MAX_MATRIX_PAIRS};
use crate::error::{Error, Result};
use crate::matrix_game::{self, MixedStrategy, PayoffMatrix};

/// Mass above this counts as part of a strategy's support.
pub const SUPPORT_TOL: f64 = 1e-6;

const MONOTONE_TOL: f64 = 1e-12;

type UpperFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// The upper-triangle function `A(x, y)`, `x ≤ y`.
#[derive(Clone)]
pub struct UpperTriangle {
    f: Arc<UpperFn>,
    label: String,
}

impl UpperTriangle {
    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        UpperTriangle {
            f: Arc::new(f),
            label: label.into(),
        }
    }

    /// `A(x, y) = x - y + xy`, the one-shot silent duel with linear accuracy.
    pub fn duel() -> Self {
        Self::from_fn("duel", |x, y| x - y + x * y)
    }

    /// `A(x, y) = c0 + cx·x + cy·y + cxy·xy`.
    pub fn affine(cx: f64, cy: f64, cxy: f64, c0: f64) -> Self {
        Self::from_fn(format!("affine({cx}, {cy}, {cxy}, {c0})"), move |x, y| {
            c0 + cx * x + cy * y + cxy * x * y
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for UpperTriangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UpperTriangle").field("label", &self.label).finish()
    }
}

/// JSON form of the built-in upper-triangle functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpperSpec {
    Duel,
    Affine { cx: f64, cy: f64, cxy: f64, c0: f64 },
}

impl UpperSpec {
    pub fn build(&self) -> UpperTriangle {
        match *self {
            UpperSpec::Duel => UpperTriangle::duel(),
            UpperSpec::Affine { cx, cy, cxy, c0 } => UpperTriangle::affine(cx, cy, cxy, c0),
        }
    }
}

/// `{"A": {...}, "grid_n": 201}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(rename = "A")]
    pub upper: UpperSpec,
    pub grid_n: usize,
}

impl KernelSpec {
    pub fn build(&self) -> Result<TimingKernel> {
        build_kernel(self.upper.build(), self.grid_n)
    }
}

#[derive(Debug, Clone)]
pub struct TimingKernel {
    grid: Vec<f64>,
    upper: UpperTriangle,
    matrix: PayoffMatrix,
}

impl TimingKernel {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn grid_n(&self) -> usize {
        self.grid.len()
    }

    pub fn matrix(&self) -> &PayoffMatrix {
        &self.matrix
    }

    pub fn upper(&self) -> &UpperTriangle {
        &self.upper
    }

    /// `A(x, y)`, the upper-triangle function evaluated off grid.
    pub fn upper_at(&self, x: f64, y: f64) -> f64 {
        self.upper.eval(x, y)
    }
}

/// Realizes `K` on a uniform grid of `grid_n` points.
pub fn build_kernel(upper: UpperTriangle, grid_n: usize) -> Result<TimingKernel> {
    if grid_n < 3 {
        return Err(Error::input("timing kernel needs at least three grid points"));
    }
    if (grid_n as u128).pow(2) > MAX_MATRIX_PAIRS {
        return Err(Error::Resource(format!(
            "a {grid_n}-point kernel exceeds {MAX_MATRIX_PAIRS} matrix entries"
        )));
    }
    let grid = uniform_grid(grid_n);
    let mut entries = vec![0.0; grid_n * grid_n];
    for i in 0..grid_n {
        for j in i + 1..grid_n {
            let a = upper.eval(grid[i], grid[j]);
            if !a.is_finite() {
                return Err(Error::input(format!(
                    "A({}, {}) = {a} is not finite",
                    grid[i], grid[j]
                )));
            }
            entries[i * grid_n + j] = a;
            entries[j * grid_n + i] = -a;
        }
    }
    let matrix = PayoffMatrix::from_flat(grid_n, grid_n, entries)?
        .with_labels(Some(grid.clone()), Some(grid.clone()))?;
    Ok(TimingKernel { grid, upper, matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotEvaluated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub status: CheckStatus,
    /// The extreme grid quantity the verdict rests on.
    pub witness: Option<f64>,
}

impl ConditionCheck {
    fn from(pass: bool, witness: f64) -> Self {
        ConditionCheck {
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            witness: Some(witness),
        }
    }
}

/// Advisory checks of the regularity conditions on `A`, evaluated on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Smallest forward difference of `A` along `x` (must be > 0).
    pub strictly_increasing_in_x: ConditionCheck,
    /// Largest forward difference of `A` along `y` (must be < 0).
    pub strictly_decreasing_in_y: ConditionCheck,
    /// `A_x ≥ 0` on the triangle.
    pub nonnegative_x_slope: ConditionCheck,
    /// `A_y ≤ 0` on the triangle.
    pub nonpositive_y_slope: ConditionCheck,
    /// Ratio of the largest neighbour jump on the halved grid to that on the
    /// kernel grid; near 0.5 for continuous `A`, near 1 across a jump.
    pub continuity: ConditionCheck,
    /// Zero sets of the partial derivatives containing no segments; not
    /// observable on a grid.
    pub no_linear_intervals: ConditionCheck,
}

impl ValidationReport {
    pub fn all_evaluated_pass(&self) -> bool {
        [
            self.strictly_increasing_in_x,
            self.strictly_decreasing_in_y,
            self.nonnegative_x_slope,
            self.nonpositive_y_slope,
            self.continuity,
        ]
        .iter()
        .all(|c| c.status == CheckStatus::Pass)
    }
}

/// Largest jump between grid neighbours of `A` on `x ≤ y`.
fn max_neighbour_jump(upper: &UpperTriangle, grid: &[f64]) -> f64 {
    let n = grid.len();
    let mut jump: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            let here = upper.eval(grid[i], grid[j]);
            if i < j {
                jump = jump.max((upper.eval(grid[i + 1], grid[j]) - here).abs());
            }
            if j + 1 < n {
                jump = jump.max((upper.eval(grid[i], grid[j + 1]) - here).abs());
            }
        }
    }
    jump
}

pub fn validate_kernel(kernel: &TimingKernel) -> ValidationReport {
    let grid = kernel.grid();
    let n = grid.len();
    let a = |i: usize, j: usize| kernel.upper_at(grid[i], grid[j]);

    let mut min_dx = f64::INFINITY;
    let mut max_dy = f64::NEG_INFINITY;
    for j in 0..n {
        for i in 0..j {
            min_dx = min_dx.min(a(i + 1, j) - a(i, j));
        }
    }
    for i in 0..n {
        for j in i..n - 1 {
            max_dy = max_dy.max(a(i, j + 1) - a(i, j));
        }
    }

    let coarse = max_neighbour_jump(kernel.upper(), grid);
    let fine = max_neighbour_jump(kernel.upper(), &uniform_grid(2 * n - 1));
    let ratio = if coarse > 0.0 { fine / coarse } else { 0.0 };

    ValidationReport {
        strictly_increasing_in_x: ConditionCheck::from(min_dx > MONOTONE_TOL, min_dx),
        strictly_decreasing_in_y: ConditionCheck::from(max_dy < -MONOTONE_TOL, max_dy),
        nonnegative_x_slope: ConditionCheck::from(min_dx >= -MONOTONE_TOL, min_dx),
        nonpositive_y_slope: ConditionCheck::from(max_dy <= MONOTONE_TOL, max_dy),
        continuity: ConditionCheck::from(fine <= 0.75 * coarse + MONOTONE_TOL, ratio),
        no_linear_intervals: ConditionCheck {
            status: CheckStatus::NotEvaluated,
            witness: None,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    PureAt1,
    PureAt0,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryClass {
    pub class: BoundaryKind,
    /// `A(1, 1)` when the class is `pure_at_1`, otherwise `A(0, 1)`.
    pub witness: f64,
}

/// Pure at 1 if `A(1,1) ≤ 0`, else pure at 0 if `A(0,1) ≥ 0`, else interior.
pub fn classify_boundary(kernel: &TimingKernel) -> BoundaryClass {
    let a11 = kernel.upper_at(1.0, 1.0);
    if a11 <= 0.0 {
        return BoundaryClass {
            class: BoundaryKind::PureAt1,
            witness: a11,
        };
    }
    let a01 = kernel.upper_at(0.0, 1.0);
    BoundaryClass {
        class: if a01 >= 0.0 {
            BoundaryKind::PureAt0
        } else {
            BoundaryKind::Interior
        },
        witness: a01,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSolution {
    pub value: f64,
    pub strategy: MixedStrategy,
    /// Smallest support point away from 0.
    pub support_lo: f64,
    pub has_zero_atom: bool,
    pub zero_atom_mass: f64,
    pub residual_guarantee: f64,
    pub residual_pairing: f64,
    pub saddle_gap: f64,
}

/// Solves the discretized game; both players share the returned strategy.
pub fn solve_timing(kernel: &TimingKernel) -> Result<TimingSolution> {
    let sol = matrix_game::solve_exact(kernel.matrix(), matrix_game::EXACT_TOL)?;
    let strategy = sol.row_strategy;
    let residuals = verify_optimality(kernel, &strategy)?;
    let zero_atom_mass = strategy.weights()[0];
    let support_lo = strategy
        .support(SUPPORT_TOL)
        .into_iter()
        .find(|&k| k > 0)
        .map_or(0.0, |k| kernel.grid()[k]);
    Ok(TimingSolution {
        value: sol.value,
        support_lo,
        has_zero_atom: zero_atom_mass > SUPPORT_TOL,
        zero_atom_mass,
        residual_guarantee: residuals.guarantee,
        residual_pairing: residuals.pairing,
        saddle_gap: sol.residual,
        strategy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityResiduals {
    /// `max(0, -min_y V(y))` with `V(y) = Σ_x K(x, y) F(x)`.
    pub guarantee: f64,
    /// `|Σ_y V(y) F(y)|`.
    pub pairing: f64,
}

/// Residuals of the necessary optimality conditions for a candidate `F`.
pub fn verify_optimality(kernel: &TimingKernel, strategy: &MixedStrategy) -> Result<OptimalityResiduals> {
    if strategy.len() != kernel.grid_n() {
        return Err(Error::input(format!(
            "strategy has {} weights but the kernel grid has {} points",
            strategy.len(),
            kernel.grid_n()
        )));
    }
    let v = kernel.matrix().col_payoffs(strategy.weights());
    let min_v = v.iter().copied().fold(f64::INFINITY, f64::min);
    let pairing: f64 = v.iter().zip(strategy.weights()).map(|(a, b)| a * b).sum();
    Ok(OptimalityResiduals {
        guarantee: (-min_v).max(0.0),
        pairing: pairing.abs(),
    })
}

/// `b`: smallest grid point with `A(b, b) ≥ 0`.
pub fn basic_interval_start(kernel: &TimingKernel) -> Option<f64> {
    kernel
        .grid()
        .iter()
        .copied()
        .find(|&x| kernel.upper_at(x, x) >= 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Grid points carrying mass above the tolerance, excluding an atom at 0.
    pub support_points: Vec<f64>,
    pub has_zero_atom: bool,
    pub basic_interval_lo: Option<f64>,
    /// Whether the support lies in `[b, 1]` (advisory).
    pub within_basic_interval: bool,
}

pub fn spectrum(strategy: &MixedStrategy, kernel: &TimingKernel, atom_tol: f64) -> Result<Spectrum> {
    if !(atom_tol.is_finite() && atom_tol > 0.0) {
        return Err(Error::input("atom tolerance must be positive"));
    }
    if strategy.len() != kernel.grid_n() {
        return Err(Error::input("strategy and kernel grid sizes differ"));
    }
    let grid = kernel.grid();
    let has_zero_atom = strategy.weights()[0] > atom_tol;
    let support_points: Vec<f64> = strategy
        .support(atom_tol)
        .into_iter()
        .filter(|&k| k > 0)
        .map(|k| grid[k])
        .collect();
    let b = basic_interval_start(kernel);
    let within = match (b, support_points.first()) {
        (Some(b), Some(&lo)) => lo >= b,
        (Some(_), None) => true,
        (None, _) => false,
    };
    Ok(Spectrum {
        support_points,
        has_zero_atom,
        basic_interval_lo: b,
        within_basic_interval: within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duel_kernel_entries() {
        let k = build_kernel(UpperTriangle::duel(), 5).unwrap();
        assert_eq!(k.matrix().get(1, 3), 0.25 - 0.75 + 0.1875);
        assert_eq!(k.matrix().get(1, 3), -0.3125);
        assert_eq!(k.matrix().get(3, 1), 0.3125);
        assert!(k.matrix().is_skew_symmetric());
        for i in 0..5 {
            assert_eq!(k.matrix().get(i, i), 0.0);
        }
    }

    #[test]
    fn non_finite_upper_is_rejected() {
        let bad = UpperTriangle::from_fn("log", |x, _| x.ln());
        assert!(matches!(build_kernel(bad, 5), Err(Error::Input(_))));
        assert!(build_kernel(UpperTriangle::duel(), 2).is_err());
    }

    #[test]
    fn validation_of_the_duel_kernel() {
        let r = validate_kernel(&build_kernel(UpperTriangle::duel(), 21).unwrap());
        assert!(r.all_evaluated_pass(), "{r:?}");
        assert_eq!(r.no_linear_intervals.status, CheckStatus::NotEvaluated);
    }

    #[test]
    fn validation_flags_increasing_in_y() {
        let r = validate_kernel(&build_kernel(UpperTriangle::from_fn("x+y", |x, y| x + y), 11).unwrap());
        assert_eq!(r.strictly_decreasing_in_y.status, CheckStatus::Fail);
        assert_eq!(r.nonpositive_y_slope.status, CheckStatus::Fail);
        assert_eq!(r.strictly_increasing_in_x.status, CheckStatus::Pass);
    }

    #[test]
    fn validation_of_a_constant() {
        let r = validate_kernel(&build_kernel(UpperTriangle::from_fn("c", |_, _| 0.3), 11).unwrap());
        assert_eq!(r.strictly_increasing_in_x.status, CheckStatus::Fail);
        assert_eq!(r.strictly_decreasing_in_y.status, CheckStatus::Fail);
        assert_eq!(r.nonnegative_x_slope.status, CheckStatus::Pass);
        assert_eq!(r.nonpositive_y_slope.status, CheckStatus::Pass);
    }

    #[test]
    fn validation_detects_a_jump() {
        let step = UpperTriangle::from_fn("step", |x, y| x - y + if x > 0.5 { 1.0 } else { 0.0 });
        let r = validate_kernel(&build_kernel(step, 21).unwrap());
        assert_eq!(r.continuity.status, CheckStatus::Fail);
    }

    #[test]
    fn boundary_classes() {
        let k = |u| build_kernel(u, 11).unwrap();
        let c = classify_boundary(&k(UpperTriangle::affine(1.0, -1.0, 0.0, -0.5)));
        assert_eq!((c.class, c.witness), (BoundaryKind::PureAt1, -0.5));
        let c = classify_boundary(&k(UpperTriangle::affine(1.0, -1.0, 0.0, 2.0)));
        assert_eq!((c.class, c.witness), (BoundaryKind::PureAt0, 1.0));
        let c = classify_boundary(&k(UpperTriangle::duel()));
        assert_eq!((c.class, c.witness), (BoundaryKind::Interior, -1.0));
    }

    #[test]
    fn duel_kernel_solution() {
        let k = build_kernel(UpperTriangle::duel(), 201).unwrap();
        let s = solve_timing(&k).unwrap();
        assert!(s.value.abs() <= 1e-9);
        assert!(!s.has_zero_atom);
        assert!((s.support_lo - 1.0 / 3.0).abs() <= 0.02, "{}", s.support_lo);
        assert!(s.residual_guarantee <= 1e-6);
        assert!(s.residual_pairing <= 1e-12);
    }

    #[test]
    fn pure_at_one_kernel_solution() {
        for n in [5, 21, 60] {
            let k = build_kernel(UpperTriangle::affine(1.0, -1.0, 0.0, -0.5), n).unwrap();
            let s = solve_timing(&k).unwrap();
            assert!(s.strategy.weights()[n - 1] >= 1.0 - 1e-6);
            assert!(s.value.abs() <= 1e-9);
        }
    }

    #[test]
    fn pairing_vanishes_for_any_strategy() {
        let k = build_kernel(UpperTriangle::duel(), 31).unwrap();
        let w: Vec<f64> = (0..31).map(|i| ((i * 37 % 11) as f64).sqrt()).collect();
        let f = MixedStrategy::normalized(w).unwrap();
        assert!(verify_optimality(&k, &f).unwrap().pairing <= 1e-12);
    }

    #[test]
    fn pure_at_zero_is_far_from_optimal_on_the_duel_kernel() {
        let k = build_kernel(UpperTriangle::duel(), 201).unwrap();
        let f = MixedStrategy::pure(201, 0).unwrap();
        let r = verify_optimality(&k, &f).unwrap();
        // V(y) = K(0, y) = A(0, y) = -y, so the residual is 1.
        assert!((r.guarantee - 1.0).abs() < 1e-12);
        assert!(verify_optimality(&k, &MixedStrategy::pure(5, 0).unwrap()).is_err());
    }

    #[test]
    fn spectrum_of_pure_one() {
        let k = build_kernel(UpperTriangle::duel(), 11).unwrap();
        let s = spectrum(&MixedStrategy::pure(11, 10).unwrap(), &k, 1e-6).unwrap();
        assert_eq!(s.support_points, vec![1.0]);
        assert!(!s.has_zero_atom);
        assert_eq!(s.basic_interval_lo, Some(0.0));
        assert!(s.within_basic_interval);
    }

    #[test]
    fn kernel_spec_json() {
        let doc = r#"{"A":{"kind":"affine","cx":1,"cy":-1,"cxy":1,"c0":0},"grid_n":11}"#;
        let spec: KernelSpec = serde_json::from_str(doc).unwrap();
        let a = spec.build().unwrap();
        let b = KernelSpec { upper: UpperSpec::Duel, grid_n: 11 }.build().unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }
}
