//! The Lagrangian decision equation
//!
//! ```text
//! TOSG(d; α, β, γ) = ASWD(d) + α(PTI(d) - PTIc) + β(TM(d) - TMc) + γ(GAA(d) - GAAc)
//! ```
//!
//! solved as an equality-constrained stationarity problem by Newton's method
//! on the KKT system. The functional forms of the objective and constraints
//! are not prescribed anywhere, so the built-ins (affine and diagonal
//! quadratic objectives, coordinate and affine constraints) are placeholders
//! with user coefficients; any [`SmoothFunction`] can be plugged in.
//!
//! Risk enters through the constraint targets:
//! `target = baseline · (1 + pa·(1 - pi·pn))`. That composition is a modelling
//! choice of this crate, not an established formula.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::MitigatingRiskParams;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;

/// A twice-differentiable scalar function of the decision vector.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, d: &[f64]) -> f64;
    fn gradient(&self, d: &[f64]) -> Vec<f64>;
    fn hessian(&self, d: &[f64]) -> DMatrix<f64>;
}

/// Built-in objectives. `quadratic` is `Σ qᵢdᵢ² + cᵢdᵢ`; `affine` is `cᵀd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    Affine { c: Vec<f64> },
    Quadratic { q: Vec<f64>, c: Vec<f64> },
}

impl ObjectiveSpec {
    pub fn dim(&self) -> usize {
        match self {
            ObjectiveSpec::Affine { c } | ObjectiveSpec::Quadratic { c, .. } => c.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ObjectiveSpec::Affine { c } if finite(c) => Ok(()),
            ObjectiveSpec::Quadratic { q, c } if q.len() != c.len() => Err(Error::input(format!(
                "quadratic objective has {} q and {} c coefficients",
                q.len(),
                c.len()
            ))),
            ObjectiveSpec::Quadratic { q, c } if finite(q) && finite(c) => Ok(()),
            _ => Err(Error::input("objective coefficients must be finite")),
        }
    }
}

impl SmoothFunction for ObjectiveSpec {
    fn value(&self, d: &[f64]) -> f64 {
        match self {
            ObjectiveSpec::Affine { c } => dot(c, d),
            ObjectiveSpec::Quadratic { q, c } => {
                q.iter().zip(c).zip(d).map(|((q, c), x)| q * x * x + c * x).sum()
            }
        }
    }

    fn gradient(&self, d: &[f64]) -> Vec<f64> {
        match self {
            ObjectiveSpec::Affine { c } => c.clone(),
            ObjectiveSpec::Quadratic { q, c } => {
                q.iter().zip(c).zip(d).map(|((q, c), x)| 2.0 * q * x + c).collect()
            }
        }
    }

    fn hessian(&self, d: &[f64]) -> DMatrix<f64> {
        match self {
            ObjectiveSpec::Affine { .. } => DMatrix::zeros(d.len(), d.len()),
            ObjectiveSpec::Quadratic { q, .. } => {
                DMatrix::from_diagonal(&DVector::from_iterator(q.len(), q.iter().map(|q| 2.0 * q)))
            }
        }
    }
}

/// Built-in constraints: `coord` is `d[index]`; `affine` is `aᵀd + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    Coord { index: usize },
    Affine { a: Vec<f64>, #[serde(default)] b: f64 },
}

impl ConstraintSpec {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ConstraintSpec::Coord { index } if *index < dim => Ok(()),
            ConstraintSpec::Coord { index } => Err(Error::input(format!(
                "constraint index {index} out of range for dimension {dim}"
            ))),
            ConstraintSpec::Affine { a, .. } if a.len() != dim => Err(Error::input(format!(
                "affine constraint has {} coefficients, expected {dim}",
                a.len()
            ))),
            ConstraintSpec::Affine { a, b } if a.iter().all(|x| x.is_finite()) && b.is_finite() => Ok(()),
            ConstraintSpec::Affine { .. } => Err(Error::input("constraint coefficients must be finite")),
        }
    }
}

impl SmoothFunction for ConstraintSpec {
    fn value(&self, d: &[f64]) -> f64 {
        match self {
            ConstraintSpec::Coord { index } => d[*index],
            ConstraintSpec::Affine { a, b } => dot(a, d) + b,
        }
    }

    fn gradient(&self, d: &[f64]) -> Vec<f64> {
        match self {
            ConstraintSpec::Coord { index } => {
                let mut g = vec![0.0; d.len()];
                g[*index] = 1.0;
                g
            }
            ConstraintSpec::Affine { a, .. } => a.clone(),
        }
    }

    fn hessian(&self, d: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(d.len(), d.len())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Problem document: `{"objective": ..., "constraints": [c, c, c], "targets": [..3]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TosgProblemSpec {
    pub objective: ObjectiveSpec,
    pub constraints: Vec<ConstraintSpec>,
    pub targets: [f64; 3],
    /// Newton starting point; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
}

impl TosgProblemSpec {
    pub fn build(&self) -> Result<TosgProblem> {
        build_problem(&self.objective, &self.constraints, self.targets)
    }
}

/// Validates built-in specs and assembles a problem.
pub fn build_problem(
    objective: &ObjectiveSpec,
    constraints: &[ConstraintSpec],
    targets: [f64; 3],
) -> Result<TosgProblem> {
    objective.validate()?;
    let dim = objective.dim();
    let [pti, tm, gaa] = constraints else {
        return Err(Error::input(format!(
            "expected exactly three constraints (PTI, TM, GAA), got {}",
            constraints.len()
        )));
    };
    for c in constraints {
        c.validate(dim)?;
    }
    TosgProblem::new(
        dim,
        Arc::new(objective.clone()),
        [Arc::new(pti.clone()), Arc::new(tm.clone()), Arc::new(gaa.clone())],
        targets,
    )
}

#[derive(Clone)]
pub struct TosgProblem {
    dim: usize,
    objective: Arc<dyn SmoothFunction>,
    constraints: [Arc<dyn SmoothFunction>; 3],
    targets: [f64; 3],
}

impl fmt::Debug for TosgProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TosgProblem")
            .field("dim", &self.dim)
            .field("targets", &self.targets)
            .finish_non_exhaustive()
    }
}

impl TosgProblem {
    /// Constraints are ordered PTI, TM, GAA.
    pub fn new(
        dim: usize,
        objective: Arc<dyn SmoothFunction>,
        constraints: [Arc<dyn SmoothFunction>; 3],
        targets: [f64; 3],
    ) -> Result<Self> {
        if dim < 3 {
            return Err(Error::input(format!("decision dimension {dim} is below 3")));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::input("constraint targets must be finite"));
        }
        Ok(TosgProblem {
            dim,
            objective,
            constraints,
            targets,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn targets(&self) -> [f64; 3] {
        self.targets
    }

    pub fn with_targets(mut self, targets: [f64; 3]) -> Result<Self> {
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::input("constraint targets must be finite"));
        }
        self.targets = targets;
        Ok(self)
    }

    pub fn objective(&self) -> &dyn SmoothFunction {
        self.objective.as_ref()
    }

    pub fn constraint(&self, k: usize) -> &dyn SmoothFunction {
        self.constraints[k].as_ref()
    }

    fn check_dim(&self, d: &[f64]) -> Result<()> {
        if d.len() != self.dim {
            return Err(Error::input(format!(
                "decision vector has length {}, expected {}",
                d.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `PTI(d) - PTIc`, `TM(d) - TMc`, `GAA(d) - GAAc`.
    pub fn constraint_gaps(&self, d: &[f64]) -> Result<[f64; 3]> {
        self.check_dim(d)?;
        Ok(std::array::from_fn(|k| self.constraints[k].value(d) - self.targets[k]))
    }

    /// `∇ASWD + α∇PTI + β∇TM + γ∇GAA`.
    pub fn lagrangian_gradient(&self, d: &[f64], multipliers: [f64; 3]) -> Result<Vec<f64>> {
        self.check_dim(d)?;
        let mut g = self.objective.gradient(d);
        for (c, m) in self.constraints.iter().zip(multipliers) {
            for (gi, ci) in g.iter_mut().zip(c.gradient(d)) {
                *gi += m * ci;
            }
        }
        Ok(g)
    }
}

pub fn tosg_value(problem: &TosgProblem, d: &[f64], multipliers: [f64; 3]) -> Result<f64> {
    let gaps = problem.constraint_gaps(d)?;
    Ok(problem.objective.value(d) + dot(&multipliers, &gaps))
}

/// `targetᵢ = baselineᵢ · (1 + pa·(1 - pi·pn))` for PTI, TM and GAA in turn.
pub fn constraint_targets_from_risk(
    risk_p: &MitigatingRiskParams,
    risk_t: &MitigatingRiskParams,
    risk_g: &MitigatingRiskParams,
    baselines: [f64; 3],
) -> Result<[f64; 3]> {
    if baselines.iter().any(|b| !b.is_finite()) {
        return Err(Error::input("baselines must be finite"));
    }
    let normalized = [risk_p.normalized()?, risk_t.normalized()?, risk_g.normalized()?];
    Ok(std::array::from_fn(|k| baselines[k] * (1.0 + normalized[k])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TosgSolution {
    pub d_star: Vec<f64>,
    /// `(α, β, γ)`.
    pub multipliers: [f64; 3],
    pub tosg_value: f64,
    pub stationarity_residual: f64,
    pub feasibility_residual: f64,
    pub iterations: usize,
}

fn residuals(problem: &TosgProblem, d: &[f64], mult: [f64; 3]) -> Result<(Vec<f64>, [f64; 3], f64, f64)> {
    let grad = problem.lagrangian_gradient(d, mult)?;
    let gaps = problem.constraint_gaps(d)?;
    let stationarity = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    let feasibility = gaps.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    Ok((grad, gaps, stationarity, feasibility))
}

pub fn solve_tosg(problem: &TosgProblem, tol: f64, max_iter: usize) -> Result<TosgSolution> {
    solve_tosg_from(problem, &vec![0.0; problem.dim], tol, max_iter)
}

/// Newton iteration on the KKT system from `start`, multipliers starting at 0.
pub fn solve_tosg_from(problem: &TosgProblem, start: &[f64], tol: f64, max_iter: usize) -> Result<TosgSolution> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::input(format!("tolerance {tol} must be positive")));
    }
    problem.check_dim(start)?;
    if start.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("start point must be finite"));
    }
    let n = problem.dim;
    let mut d = start.to_vec();
    let mut mult = [0.0; 3];
    let mut iterations = 0;
    loop {
        let (grad, gaps, stationarity, feasibility) = residuals(problem, &d, mult)?;
        if !(stationarity.is_finite() && feasibility.is_finite()) {
            return Err(Error::Degenerate("KKT residuals became non-finite".into()));
        }
        if stationarity <= tol && feasibility <= tol {
            return Ok(TosgSolution {
                tosg_value: tosg_value(problem, &d, mult)?,
                d_star: d,
                multipliers: mult,
                stationarity_residual: stationarity,
                feasibility_residual: feasibility,
                iterations,
            });
        }
        if iterations == max_iter {
            return Err(Error::NonConvergence {
                iterations,
                stationarity,
                feasibility,
            });
        }

        let mut hess = problem.objective.hessian(&d);
        let mut kkt = DMatrix::zeros(n + 3, n + 3);
        for (k, c) in problem.constraints.iter().enumerate() {
            if mult[k] != 0.0 {
                hess += c.hessian(&d) * mult[k];
            }
            for (j, g) in c.gradient(&d).into_iter().enumerate() {
                kkt[(n + k, j)] = g;
                kkt[(j, n + k)] = g;
            }
        }
        kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
        let rhs = DVector::from_iterator(n + 3, grad.iter().chain(&gaps).map(|v| -v));
        let step = kkt
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| {
                Error::Degenerate("singular KKT system (dependent constraint gradients or flat objective)".into())
            })?;
        for (x, s) in d.iter_mut().zip(step.iter()) {
            *x += s;
        }
        for k in 0..3 {
            mult[k] += step[n + k];
        }
        iterations += 1;
    }
}
