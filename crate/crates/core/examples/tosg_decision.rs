//! Risk-adjusted constraint targets and the Lagrangian decision solve.

use std::sync::Arc;

use nalgebra::DMatrix;
use tosg::risk::{risk_economic, risk_mitigating, EconomicRiskParams, MitigatingRiskParams};
use tosg::tosg_decision::{
    build_problem, constraint_targets_from_risk, solve_tosg, ConstraintSpec, ObjectiveSpec, SmoothFunction,
    TosgProblem,
};

/// `-Σ log(1 + dᵢ²)`, a non-quadratic objective.
struct LogPenalty;

impl SmoothFunction for LogPenalty {
    fn value(&self, d: &[f64]) -> f64 {
        -d.iter().map(|x| (1.0 + x * x).ln()).sum::<f64>()
    }

    fn gradient(&self, d: &[f64]) -> Vec<f64> {
        d.iter().map(|x| -2.0 * x / (1.0 + x * x)).collect()
    }

    fn hessian(&self, d: &[f64]) -> DMatrix<f64> {
        let diag = d.iter().map(|x| -2.0 * (1.0 - x * x) / (1.0 + x * x).powi(2));
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d.len(), diag))
    }
}

fn main() -> tosg::Result<()> {
    let economic = EconomicRiskParams { threat: 2.0, vulnerability: 0.5, cost: 10.0 };
    println!("economic risk {}", risk_economic(&economic)?);

    let pti = MitigatingRiskParams::worst_case(0.8, 0.9, 100.0);
    let tm = MitigatingRiskParams { pa: 0.5, pi: 0.6, pn: 0.5, ce: 20.0 };
    let gaa = MitigatingRiskParams::zero();
    println!("mitigating risks {} {} {}", risk_mitigating(&pti)?, risk_mitigating(&tm)?, risk_mitigating(&gaa)?);

    let targets = constraint_targets_from_risk(&pti, &tm, &gaa, [1.0, 2.0, 3.0])?;
    println!("targets {targets:?}");

    let coords = [0, 1, 2].map(|index| ConstraintSpec::Coord { index });
    let problem = build_problem(&ObjectiveSpec::Quadratic { q: vec![-1.0; 3], c: vec![0.0; 3] }, &coords, targets)?;
    let sol = solve_tosg(&problem, 1e-10, 50)?;
    println!("quadratic: d* {:?}, multipliers {:?}, value {:.6}", sol.d_star, sol.multipliers, sol.tosg_value);

    let plugged = TosgProblem::new(
        3,
        Arc::new(LogPenalty),
        coords.map(|c| Arc::new(c) as Arc<dyn SmoothFunction>),
        targets,
    )?;
    let sol = solve_tosg(&plugged, 1e-10, 50)?;
    println!("log penalty: multipliers {:?} after {} Newton steps", sol.multipliers, sol.iterations);
    Ok(())
}
