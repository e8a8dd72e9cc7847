//! The full decision pipeline on the bundled sample configuration.

use tosg::protocol_pipeline::{run_protocol, ProtocolConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/protocol.json");
    let mut config: ProtocolConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;

    for lambda in [0.0, 0.125, 0.25, 0.5, 1.0] {
        config.lambda = lambda;
        let report = run_protocol(&config)?;
        let [a, b] = report.optimal_timing_interval.expect("completed run");
        println!("lambda {lambda:<5} interval [{a:.3}, {b}]  decision score {:.6}", report.decision_score.unwrap_or(f64::NAN));
    }

    config.lambda = 0.25;
    let report = run_protocol(&config)?;
    println!("risk scores {:?}", report.risk_scores);
    println!("targets {:?}", report.targets);
    println!("config sha256 {}", report.provenance.config_sha256);
    Ok(())
}
