use serde_json::Value;
use tosg::protocol_pipeline::{run_protocol, ProtocolConfig, ProtocolReport, Stage};
use tosg::risk::MitigatingRiskParams;
use tosg::timing_game::{build_kernel, solve_timing, UpperTriangle};

const CONFIG: &str = include_str!("fixtures/protocol_config.json");
const GOLDEN: &str = include_str!("fixtures/protocol_report.json");

fn fixture() -> ProtocolConfig {
    serde_json::from_str(CONFIG).unwrap()
}

fn assert_close(got: &Value, want: &Value, path: &str) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{path}: {a} vs {b}");
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}: length");
            for (k, (x, y)) in a.iter().zip(b).enumerate() {
                assert_close(x, y, &format!("{path}[{k}]"));
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>(), "{path}: keys");
            for (k, x) in a {
                assert_close(x, &b[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(got, want, "{path}"),
    }
}

#[test]
fn report_matches_golden_file() {
    let report = run_protocol(&fixture()).unwrap();
    let got = serde_json::to_value(&report).unwrap();
    let want: Value = serde_json::from_str(GOLDEN).unwrap();
    assert_close(&got, &want, "report");
}

#[test]
fn golden_report_recomputed_by_hand() {
    let report: ProtocolReport = serde_json::from_str(GOLDEN).unwrap();

    // Risk: pa·(1 - pi·pn)·ce per constraint.
    let risks = [1.0 * (1.0 - 0.8 * 0.9) * 100.0, 0.5 * (1.0 - 0.6 * 0.5) * 20.0, 0.2 * 1.0 * 5.0];
    let targets = [1.0 * 1.28, 2.0 * 1.35, 3.0 * 1.2];
    for k in 0..3 {
        assert!((report.risk_scores.unwrap()[k] - risks[k]).abs() < 1e-12);
        assert!((report.targets.unwrap()[k] - targets[k]).abs() < 1e-12);
    }

    // Stationarity: -2d₀ + 0.5 + α = 0, -2d₁ + β = 0, -2d₂ + γ = 0, -d₃ + 1 + γ = 0,
    // with d₀ = 1.28, d₁ = 2.7, d₂ + d₃ = 3.6, so d₂ = 2.6/3 and γ = 2d₂.
    let d2 = 2.6 / 3.0;
    let d_star = [1.28, 2.7, d2, 3.6 - d2];
    let mult = [2.0 * 1.28 - 0.5, 5.4, 2.0 * d2];
    let decision = report.decision.as_ref().unwrap();
    for k in 0..4 {
        assert!((decision.d_star[k] - d_star[k]).abs() < 1e-12);
    }
    for k in 0..3 {
        assert!((decision.multipliers[k] - mult[k]).abs() < 1e-12);
    }
    let aswd = |d: &[f64; 4]| -d[0] * d[0] - d[1] * d[1] - d[2] * d[2] - 0.5 * d[3] * d[3] + 0.5 * d[0] + d[3];
    assert!((report.decision_score.unwrap() - aswd(&d_star)).abs() < 1e-12);

    // Score along d(t) = t·d*, rescaled to [0, 1] over the 101-point grid.
    let raw = |t: f64| {
        let d = d_star.map(|v| t * v);
        let gaps = [d[0] - targets[0], d[1] - targets[1], d[2] + d[3] - targets[2]];
        aswd(&d) + mult[0] * gaps[0] + mult[1] * gaps[1] + mult[2] * gaps[2]
    };
    let grid: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
    let raw_grid: Vec<f64> = grid.iter().map(|&t| raw(t)).collect();
    let lo = raw_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let g: Vec<f64> = raw_grid.iter().map(|v| (v - lo) / (hi - lo)).collect();
    let score = report.score.as_ref().unwrap();
    for (a, b) in score.values.iter().zip(&g) {
        assert!((a - b).abs() < 1e-12);
    }

    // The reported strategy is optimal in K' = x - y + xy + λ(g(x) - g(y)).
    let kernel = |i: usize, j: usize| {
        let upper = |i: usize, j: usize| grid[i] - grid[j] + grid[i] * grid[j] + 0.25 * (g[i] - g[j]);
        match i.cmp(&j) {
            std::cmp::Ordering::Less => upper(i, j),
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => -upper(j, i),
        }
    };
    let timing = report.timing.as_ref().unwrap();
    let f = timing.strategy.weights();
    for j in 0..101 {
        let v: f64 = (0..101).map(|i| kernel(i, j) * f[i]).sum();
        assert!(v >= -1e-9, "column {j}: {v}");
    }
    let first = (1..101).find(|&k| f[k] > 1e-6).unwrap();
    assert_eq!(report.optimal_timing_interval, Some([grid[first], 1.0]));
    assert!((report.kernel.as_ref().unwrap().boundary.witness - (-1.0 + 0.25 * (g[0] - g[100]))).abs() < 1e-12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = fixture();
    let a = serde_json::to_string_pretty(&run_protocol(&config).unwrap()).unwrap();
    let b = serde_json::to_string_pretty(&run_protocol(&config).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_risk_and_no_imbedding_pass_through() {
    let mut config = fixture();
    let zero = MitigatingRiskParams::zero();
    config.risk.pti = zero;
    config.risk.tm = zero;
    config.risk.gaa = zero;
    config.lambda = 0.0;
    let report = run_protocol(&config).unwrap();
    assert_eq!(report.targets, Some(config.baselines));
    let base = solve_timing(&build_kernel(UpperTriangle::duel(), 101).unwrap()).unwrap();
    assert_eq!(report.optimal_timing_interval, Some([base.support_lo, 1.0]));
}

#[test]
fn vanishing_imbedding_weight() {
    let mut config = fixture();
    let base = solve_timing(&build_kernel(UpperTriangle::duel(), 101).unwrap()).unwrap().support_lo;
    let edges: Vec<f64> = [0.5, 0.25, 0.125, 0.0]
        .iter()
        .map(|&lambda| {
            config.lambda = lambda;
            run_protocol(&config).unwrap().optimal_timing_interval.unwrap()[0]
        })
        .collect();
    assert!((edges[3] - base).abs() <= 0.01 + 1e-12, "{edges:?} vs {base}");
    assert!((edges[2] - base).abs() <= (edges[0] - base).abs(), "{edges:?}");
}

#[test]
fn config_hash_tracks_content() {
    let config = fixture();
    let report = run_protocol(&config).unwrap();
    assert_eq!(report.provenance.config_sha256, config.canonical_hash().unwrap());
    assert_eq!(report.provenance.seed, 2024);
    let mut other = config.clone();
    other.seed = 2025;
    assert_ne!(other.canonical_hash().unwrap(), report.provenance.config_sha256);
}

#[test]
fn failures_name_their_stage() {
    let mut config = fixture();
    config.constraints[2] = serde_json::from_str(r#"{"kind":"coord","index":0}"#).unwrap();
    let err = run_protocol(&config).unwrap_err();
    assert_eq!(err.stage, Stage::Solve);
    assert!(err.partial.risk_scores.is_some() && err.partial.targets.is_some());
    assert!(err.partial.decision.is_none() && err.partial.timing.is_none());
    assert!(err.to_string().starts_with("solve stage failed"));
}
