//! The aiming-and-evasion game: value, game tree and an ε-optimal marksman.

use tosg::game_tree::{
    epsilon_strategy, evader_reach_probs, evaluate_tree, evasion_tree_on_grid, solve_evasion_game,
};

fn main() -> tosg::Result<()> {
    let sol = solve_evasion_game(1e-12)?;
    println!("x* = {:.9}, value = {:.9}", sol.x_star, sol.value);
    println!("reach probabilities at x*: {:?}", sol.reach_probs);

    for x in [0.0, 0.25, sol.x_star, 0.75] {
        let p = evader_reach_probs(x)?;
        println!("x = {x:.3}: (1-x)² = {:.4}, x = {:.4}, x(1-x) = {:.4}", p[0], p[1], p[2]);
    }

    // Evader picks x from a grid, marksman answers: the tree value approaches V from above.
    for n in [11, 101, 1001] {
        println!("tree on {n} evader choices: {:.6}", evaluate_tree(&evasion_tree_on_grid(n)?)?);
    }

    let eps = epsilon_strategy(1e-4, 11)?;
    println!(
        "marksman mix {:?} guarantees {:.6} (grid {})",
        eps.marksman_mix.weights(),
        eps.guaranteed,
        eps.grid_n
    );
    Ok(())
}
