//! End-to-end decision flow: risk scores, constraint targets, the Lagrangian
//! solve, imbedding of the decision score into a timing kernel, and the
//! optimal timing interval.
//!
//! The imbedding is the additive potential `K'(x, y) = K(x, y) + λ(g(x) - g(y))`,
//! the simplest additive form that keeps the kernel skew-symmetric. It is an
//! interpretation of this crate; nothing fixes the mechanism.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::risk::{risk_mitigating, MitigatingRiskParams};
use crate::timing_game::{
    build_kernel, classify_boundary, solve_timing, validate_kernel, BoundaryClass, KernelSpec,
    TimingKernel, TimingSolution, UpperTriangle, ValidationReport,
};
use crate::tosg_decision::{
    build_problem, constraint_targets_from_risk, solve_tosg_from, tosg_value, ConstraintSpec,
    ObjectiveSpec, TosgProblem, TosgSolution, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

pub const REPORT_FORMAT: &str = "tosg-protocol-report/1";

/// `K'(x, y) = K(x, y) + λ(g(x) - g(y))` on the kernel's own grid.
pub fn imbed_objective(
    kernel: &TimingKernel,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lambda: f64,
) -> Result<TimingKernel> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::input(format!("imbedding weight {lambda} must be finite and nonnegative")));
    }
    if let Some(&x) = kernel.grid().iter().find(|&&x| !g(x).is_finite()) {
        return Err(Error::input(format!("score function is not finite at {x}")));
    }
    if lambda == 0.0 {
        return Ok(kernel.clone());
    }
    let base = kernel.upper().clone();
    let label = format!("{} + {lambda}·(g(x) - g(y))", base.label());
    let upper = UpperTriangle::from_fn(label, move |x, y| base.eval(x, y) + lambda * (g(x) - g(y)));
    build_kernel(upper, kernel.grid_n())
}

/// Piecewise-linear interpolation of values on a uniform grid over `[0, 1]`.
fn interpolate(values: Arc<Vec<f64>>) -> impl Fn(f64) -> f64 + Send + Sync {
    move |t| {
        let last = values.len() - 1;
        let s = t.clamp(0.0, 1.0) * last as f64;
        let k = (s.floor() as usize).min(last - 1);
        let w = s - k as f64;
        values[k] * (1.0 - w) + values[k + 1] * w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskInputs {
    pub pti: MitigatingRiskParams,
    pub tm: MitigatingRiskParams,
    pub gaa: MitigatingRiskParams,
}

/// How the decision score `g` on `[0, 1]` is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreSpec {
    /// `tosg_value` along `d(t) = (1 - t)·d₀ + t·d*`, rescaled to `[0, 1]` on the grid.
    #[default]
    DecisionPath,
    /// User-supplied values on the kernel grid, linearly interpolated.
    Table { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub risk: RiskInputs,
    pub baselines: [f64; 3],
    pub objective: ObjectiveSpec,
    pub constraints: Vec<ConstraintSpec>,
    /// Newton start and path origin `d₀`; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    pub kernel: KernelSpec,
    pub lambda: f64,
    #[serde(default)]
    pub score: ScoreSpec,
    /// Recorded in the provenance; the current stages draw no random numbers.
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

impl ProtocolConfig {
    /// Lowercase hex SHA-256 of the sorted-key, whitespace-free JSON form.
    pub fn canonical_hash(&self) -> Result<String> {
        let canonical = serde_json::to_string(&serde_json::to_value(self)?)?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Risk,
    Targets,
    Solve,
    Score,
    Imbed,
    Timing,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Risk => "risk",
            Stage::Targets => "targets",
            Stage::Solve => "solve",
            Stage::Score => "score",
            Stage::Imbed => "imbed",
            Stage::Timing => "timing",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    /// `g` on the kernel grid.
    pub values: Vec<f64>,
    /// Range of the raw path values before rescaling; absent for tables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSummary {
    pub upper: String,
    pub grid_n: usize,
    pub lambda: f64,
    pub boundary: BoundaryClass,
    pub validation: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
}

/// Stage results in flow order; a failed run leaves later fields empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub format: String,
    pub provenance: Provenance,
    pub risk_scores: Option<[f64; 3]>,
    pub targets: Option<[f64; 3]>,
    pub decision: Option<TosgSolution>,
    pub score: Option<ScoreSummary>,
    pub kernel: Option<KernelSummary>,
    pub timing: Option<TimingSolution>,
    pub optimal_timing_interval: Option<[f64; 2]>,
    pub decision_score: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct ProtocolError {
    pub stage: Stage,
    #[source]
    pub source: Error,
    pub partial: Box<ProtocolReport>,
}

struct Run {
    report: ProtocolReport,
}

impl Run {
    fn stage<T>(&mut self, stage: Stage, r: Result<T>) -> Result<T, ProtocolError> {
        r.map_err(|source| ProtocolError {
            stage,
            source,
            partial: Box::new(self.report.clone()),
        })
    }
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolReport, ProtocolError> {
    let mut run = Run {
        report: ProtocolReport {
            format: REPORT_FORMAT.into(),
            provenance: Provenance {
                config_sha256: String::new(),
                seed: config.seed,
            },
            risk_scores: None,
            targets: None,
            decision: None,
            score: None,
            kernel: None,
            timing: None,
            optimal_timing_interval: None,
            decision_score: None,
        },
    };
    let hash = run.stage(Stage::Config, config.canonical_hash())?;
    run.report.provenance.config_sha256 = hash;
    let base = run.stage(Stage::Config, check_config(config))?;

    let risk = &config.risk;
    let scores = run.stage(
        Stage::Risk,
        (|| Ok([risk_mitigating(&risk.pti)?, risk_mitigating(&risk.tm)?, risk_mitigating(&risk.gaa)?]))(),
    )?;
    run.report.risk_scores = Some(scores);

    let targets = run.stage(
        Stage::Targets,
        constraint_targets_from_risk(&risk.pti, &risk.tm, &risk.gaa, config.baselines),
    )?;
    run.report.targets = Some(targets);

    let problem = run.stage(Stage::Solve, build_problem(&config.objective, &config.constraints, targets))?;
    let start = config.start.clone().unwrap_or_else(|| vec![0.0; problem.dim()]);
    let decision = run.stage(Stage::Solve, solve_tosg_from(&problem, &start, config.tol, config.max_iter))?;
    run.report.decision = Some(decision.clone());

    let (g, summary) = run.stage(Stage::Score, score_function(config, &problem, &start, &decision, base.grid()))?;
    run.report.score = Some(summary);

    let kernel = run.stage(Stage::Imbed, imbed_objective(&base, g, config.lambda))?;
    run.report.kernel = Some(KernelSummary {
        upper: kernel.upper().label().to_string(),
        grid_n: kernel.grid_n(),
        lambda: config.lambda,
        boundary: classify_boundary(&kernel),
        validation: validate_kernel(&kernel),
    });

    let timing = run.stage(Stage::Timing, solve_timing(&kernel))?;
    run.report.optimal_timing_interval = Some([timing.support_lo, 1.0]);
    run.report.timing = Some(timing);
    run.report.decision_score = Some(decision.tosg_value);
    Ok(run.report)
}

fn check_config(config: &ProtocolConfig) -> Result<TimingKernel> {
    if !(config.lambda.is_finite() && config.lambda >= 0.0) {
        return Err(Error::input(format!("lambda = {} must be finite and nonnegative", config.lambda)));
    }
    if config.kernel.grid_n < 3 {
        return Err(Error::input("kernel grid_n must be at least 3"));
    }
    if let ScoreSpec::Table { values } = &config.score {
        if values.len() != config.kernel.grid_n {
            return Err(Error::input(format!(
                "score table has {} values but grid_n is {}",
                values.len(),
                config.kernel.grid_n
            )));
        }
    }
    config.kernel.build()
}

type ScoreFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn score_function(
    config: &ProtocolConfig,
    problem: &TosgProblem,
    start: &[f64],
    decision: &TosgSolution,
    grid: &[f64],
) -> Result<(ScoreFn, ScoreSummary)> {
    match &config.score {
        ScoreSpec::Table { values } => {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::input("score table values must be finite"));
            }
            let g = interpolate(Arc::new(values.clone()));
            Ok((
                Arc::new(g),
                ScoreSummary {
                    values: values.clone(),
                    raw_range: None,
                },
            ))
        }
        ScoreSpec::DecisionPath => {
            let problem = problem.clone();
            let d0 = start.to_vec();
            let d1 = decision.d_star.clone();
            let mult = decision.multipliers;
            let raw = move |t: f64| {
                let d: Vec<f64> = d0.iter().zip(&d1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
                tosg_value(&problem, &d, mult).unwrap_or(f64::NAN)
            };
            let on_grid: Vec<f64> = grid.iter().map(|&t| raw(t)).collect();
            if on_grid.iter().any(|v| !v.is_finite()) {
                return Err(Error::Degenerate("decision score is not finite along the path".into()));
            }
            let lo = on_grid.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = on_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            let flat = span <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
            let rescale = move |v: f64| if flat { 0.0 } else { (v - lo) / span };
            let values = on_grid.iter().map(|&v| rescale(v)).collect();
            Ok((
                Arc::new(move |t| rescale(raw(t))),
                ScoreSummary {
                    values,
                    raw_range: Some([lo, hi]),
                },
            ))
        }
    }
}
