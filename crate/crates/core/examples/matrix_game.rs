//! Exact and fictitious-play solutions of small zero-sum games.

use tosg::matrix_game::{solve_exact, solve_fictitious_play, PayoffMatrix, EXACT_TOL};

fn main() -> tosg::Result<()> {
    // No saddle point; value (ad - bc) / (a + d - b - c) = (12 - 2) / 10 = 1.
    let game = PayoffMatrix::new(vec![vec![3.0, -1.0], vec![-2.0, 4.0]])?;
    let exact = solve_exact(&game, EXACT_TOL)?;
    println!("exact value {:.6}", exact.value);
    println!("  row mix {:?}", exact.row_strategy.weights());
    println!("  col mix {:?}", exact.col_strategy.weights());

    let fp = solve_fictitious_play(&game, 100_000, 1e-4)?;
    println!(
        "fictitious play value {:.6} in [{:.6}, {:.6}] after {:?} iterations",
        fp.value, fp.lower, fp.upper, fp.iterations
    );

    let rps = PayoffMatrix::new(vec![
        vec![0.0, -1.0, 1.0],
        vec![1.0, 0.0, -1.0],
        vec![-1.0, 1.0, 0.0],
    ])?;
    let sol = solve_exact(&rps, EXACT_TOL)?;
    println!("rock-paper-scissors value {:.1e}, mix {:?}", sol.value, sol.row_strategy.weights());
    Ok(())
}
