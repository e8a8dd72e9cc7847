//! Exact duel payoffs against seeded Monte Carlo estimates.

use tosg::duel::{duel_payoff, simulate_duel, AccuracyFunction, DuelSpec, TimeVector};

fn main() -> tosg::Result<()> {
    let spec = DuelSpec::new(
        2,
        3,
        AccuracyFunction::Power { k: 2.0 },
        AccuracyFunction::Table { points: vec![[0.0, 0.0], [0.5, 0.3], [1.0, 1.0]] },
    )?;
    let x = TimeVector::new(vec![0.5, 0.9])?;
    let y = TimeVector::new(vec![0.3, 0.6, 0.9])?;
    let exact = duel_payoff(&spec, &x, &y)?;
    println!("exact payoff {exact:.6}");
    for trials in [1_000, 100_000, 1_000_000] {
        let mc = simulate_duel(&spec, &x, &y, trials, 42)?;
        let z = (mc.estimate - exact) / mc.stderr;
        println!("{trials:>9} trials: {:.6} ± {:.6} (z = {z:+.2})", mc.estimate, mc.stderr);
    }
    Ok(())
}
