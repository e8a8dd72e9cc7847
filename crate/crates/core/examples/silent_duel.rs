//! Discretized silent duels: the classical one-shot duel and a 2-vs-1 variant.

use tosg::duel::{solve_duel, AccuracyFunction, DuelSpec};

fn main() -> tosg::Result<()> {
    let sol = solve_duel(&DuelSpec::symmetric_one_shot(), 201)?;
    println!("one shot each: value {:.2e}, support starts at {}", sol.value, sol.support_p1);

    // Mass per 0.1-wide bin against the continuous density 1/(4t³) on [1/3, 1].
    let weights = sol.p1_density.weights();
    let grid = sol.p1_density.grid().expect("duel densities carry their grid");
    for bin in 3..10 {
        let (lo, hi) = (bin as f64 / 10.0, (bin + 1) as f64 / 10.0);
        let mass: f64 = grid
            .iter()
            .zip(weights)
            .filter(|(&t, _)| t >= lo && (t < hi || hi == 1.0))
            .map(|(_, w)| w)
            .sum();
        let a = lo.max(1.0 / 3.0);
        let classical = 0.125 * (1.0 / (a * a) - 1.0 / (hi * hi));
        println!("  [{lo:.1}, {hi:.1}) mass {mass:.4}  continuous {classical:.4}");
    }

    let two_vs_one = DuelSpec::new(2, 1, AccuracyFunction::Identity, AccuracyFunction::Identity)?;
    let sol = solve_duel(&two_vs_one, 41)?;
    println!("two shots vs one: value {:.4}, player 1 mixes over {} firing plans", sol.value, sol.p1_mix.len());
    for (times, w) in sol.p1_mix.iter().take(5) {
        println!("  {times:?} with weight {w:.4}");
    }
    Ok(())
}
