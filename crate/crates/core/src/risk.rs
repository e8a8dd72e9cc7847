//! Risk scores used to set decision-constraint targets.
//!
//! Units are abstract; both scores are dimensionless and nonnegative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `RISK = T · V · C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomicRiskParams {
    /// Threat frequency, events per unit time.
    pub threat: f64,
    pub vulnerability: f64,
    pub cost: f64,
}

/// `RISK = Pa · (1 - Pi·Pn) · Ce`, where `Pi·Pn` is the system effectiveness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigatingRiskParams {
    /// Attack probability; 1.0 (the worst case) unless intelligence says otherwise.
    #[serde(default = "worst_case_pa")]
    pub pa: f64,
    /// Interruption probability.
    pub pi: f64,
    /// Neutralization probability.
    pub pn: f64,
    /// Consequence.
    pub ce: f64,
}

fn worst_case_pa() -> f64 {
    1.0
}

impl MitigatingRiskParams {
    /// Parameters with the worst-case attack probability `pa = 1`.
    pub fn worst_case(pi: f64, pn: f64, ce: f64) -> Self {
        MitigatingRiskParams { pa: 1.0, pi, pn, ce }
    }

    /// The params of a constraint that carries no risk.
    pub fn zero() -> Self {
        MitigatingRiskParams { pa: 0.0, pi: 0.0, pn: 0.0, ce: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        probability("pa", self.pa)?;
        probability("pi", self.pi)?;
        probability("pn", self.pn)?;
        nonnegative("ce", self.ce)
    }

    /// `pa · (1 - pi·pn)`, the score divided by `ce`. Lies in `[0, 1]` and is
    /// defined even when `ce = 0`.
    pub fn normalized(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.pa * (1.0 - self.pi * self.pn))
    }
}

impl EconomicRiskParams {
    pub fn validate(&self) -> Result<()> {
        nonnegative("threat", self.threat)?;
        probability("vulnerability", self.vulnerability)?;
        nonnegative("cost", self.cost)
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::input(format!("{name} = {v} is not a probability")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{name} = {v} must be finite and nonnegative")))
    }
}

pub fn risk_economic(params: &EconomicRiskParams) -> Result<f64> {
    params.validate()?;
    Ok(params.threat * params.vulnerability * params.cost)
}

pub fn risk_mitigating(params: &MitigatingRiskParams) -> Result<f64> {
    Ok(params.normalized()? * params.ce)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn economic_examples() {
        let r = |threat, vulnerability, cost| {
            risk_economic(&EconomicRiskParams { threat, vulnerability, cost }).unwrap()
        };
        assert_eq!(r(0.0, 0.9, 100.0), 0.0);
        assert_eq!(r(1.0, 1.0, 37.5), 37.5);
        assert_eq!(r(2.0, 0.5, 10.0), 10.0);
    }

    #[test]
    fn mitigating_examples() {
        let r = |p| risk_mitigating(&p).unwrap();
        assert_eq!(r(MitigatingRiskParams::worst_case(1.0, 1.0, 50.0)), 0.0);
        assert!((r(MitigatingRiskParams::worst_case(0.8, 0.9, 100.0)) - 28.0).abs() < 1e-12);
        assert_eq!(r(MitigatingRiskParams { pa: 0.0, pi: 0.1, pn: 0.2, ce: 9.0 }), 0.0);
    }

    #[test]
    fn pa_defaults_to_worst_case() {
        let p: MitigatingRiskParams = serde_json::from_str(r#"{"pi":0.5,"pn":0.5,"ce":4}"#).unwrap();
        assert_eq!(p.pa, 1.0);
        assert_eq!(risk_mitigating(&p).unwrap(), 3.0);
    }

    #[test]
    fn invalid_params() {
        let bad = [
            MitigatingRiskParams { pa: 1.1, pi: 0.0, pn: 0.0, ce: 1.0 },
            MitigatingRiskParams { pa: 1.0, pi: -0.1, pn: 0.0, ce: 1.0 },
            MitigatingRiskParams { pa: 1.0, pi: 0.0, pn: f64::NAN, ce: 1.0 },
            MitigatingRiskParams { pa: 1.0, pi: 0.0, pn: 0.0, ce: -1.0 },
            MitigatingRiskParams { pa: 1.0, pi: 0.0, pn: 0.0, ce: f64::INFINITY },
        ];
        for p in bad {
            assert!(matches!(risk_mitigating(&p), Err(Error::Input(_))), "{p:?}");
        }
        let e = EconomicRiskParams { threat: -1.0, vulnerability: 0.5, cost: 1.0 };
        assert!(risk_economic(&e).is_err());
    }
}
