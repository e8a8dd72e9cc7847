//! Minimax game trees and the aiming-and-evasion game.
//!
//! The evader picks a parameter `x ∈ [0, 1]` that sets its chances of reaching
//! three positions, `(1-x)²`, `x` and `x(1-x)`; the marksman then fires at one
//! position. The marksman maximizes the hit probability, the evader minimizes
//! it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_game::{self, MixedStrategy, PayoffMatrix};

const PROB_SUM_TOL: f64 = 1e-12;

/// Reach probabilities closer than this count as tied for the marksman.
const TIE_TOL: f64 = 1e-12;

/// Largest evader grid [`epsilon_strategy`] will refine to.
pub const EPSILON_GRID_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameTree {
    Leaf { payoff: f64 },
    Max { children: Vec<GameTree> },
    Min { children: Vec<GameTree> },
    Chance { children: Vec<GameTree>, probs: Vec<f64> },
}

impl GameTree {
    pub fn leaf(payoff: f64) -> Self {
        GameTree::Leaf { payoff }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GameTree::Leaf { payoff } => {
                if payoff.is_finite() {
                    Ok(())
                } else {
                    Err(Error::input("leaf payoff must be finite"))
                }
            }
            GameTree::Max { children } | GameTree::Min { children } => {
                if children.is_empty() {
                    return Err(Error::input("decision node without children"));
                }
                children.iter().try_for_each(GameTree::validate)
            }
            GameTree::Chance { children, probs } => {
                if children.is_empty() {
                    return Err(Error::input("chance node without children"));
                }
                if probs.len() != children.len() {
                    return Err(Error::input(format!(
                        "chance node has {} children but {} probabilities",
                        children.len(),
                        probs.len()
                    )));
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::input("chance probabilities must be nonnegative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::input(format!(
                        "chance probabilities sum to {total}, expected 1"
                    )));
                }
                children.iter().try_for_each(GameTree::validate)
            }
        }
    }

    fn backward_induction(&self) -> f64 {
        match self {
            GameTree::Leaf { payoff } => *payoff,
            GameTree::Max { children } => children
                .iter()
                .map(GameTree::backward_induction)
                .fold(f64::NEG_INFINITY, f64::max),
            GameTree::Min { children } => children
                .iter()
                .map(GameTree::backward_induction)
                .fold(f64::INFINITY, f64::min),
            GameTree::Chance { children, probs } => children
                .iter()
                .zip(probs)
                .map(|(c, p)| p * c.backward_induction())
                .sum(),
        }
    }

    /// Number of leaves below (and including) this node.
    pub fn leaf_count(&self) -> usize {
        match self {
            GameTree::Leaf { .. } => 1,
            GameTree::Max { children } | GameTree::Min { children } | GameTree::Chance { children, .. } => {
                children.iter().map(GameTree::leaf_count).sum()
            }
        }
    }
}

/// Minimax value by backward induction.
pub fn evaluate_tree(tree: &GameTree) -> Result<f64> {
    tree.validate()?;
    Ok(tree.backward_induction())
}

fn check_unit(x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::input(format!("evader parameter {x} is outside [0, 1]")))
    }
}

/// Probabilities of the evader reaching positions 1, 2 and 3.
pub fn evader_reach_probs(x: f64) -> Result<[f64; 3]> {
    check_unit(x)?;
    let stay = 1.0 - x;
    Ok([stay * stay, x, x * stay])
}

/// The marksman's best position (1-based) against a known `x`, with its hit
/// probability. Near-ties go to the lower position.
pub fn marksman_best(x: f64) -> Result<(usize, f64)> {
    let probs = evader_reach_probs(x)?;
    let mut best = 0;
    for k in 1..3 {
        if probs[k] > probs[best] + TIE_TOL {
            best = k;
        }
    }
    Ok((best + 1, probs[best]))
}

/// The marksman's decision for a fixed evader parameter, as a tree.
pub fn evasion_tree(x: f64) -> Result<GameTree> {
    let children = evader_reach_probs(x)?.into_iter().map(GameTree::leaf).collect();
    Ok(GameTree::Max { children })
}

/// Evader choosing among `grid_n` uniform values of `x`, marksman replying.
pub fn evasion_tree_on_grid(grid_n: usize) -> Result<GameTree> {
    if grid_n < 2 {
        return Err(Error::input("evader grid needs at least two points"));
    }
    let children = (0..grid_n)
        .map(|k| evasion_tree(k as f64 / (grid_n - 1) as f64))
        .collect::<Result<_>>()?;
    Ok(GameTree::Min { children })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvasionSolution {
    pub x_star: f64,
    pub value: f64,
    pub marksman_position: usize,
    pub reach_probs: [f64; 3],
    pub bisection_steps: usize,
}

/// Evader's optimal parameter: bisection on the crossing `(1-x)² = x`, where
/// the largest reach probability is smallest.
pub fn solve_evasion_game(tol: f64) -> Result<EvasionSolution> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::input("tolerance must be positive"));
    }
    let gap = |x: f64| (1.0 - x) * (1.0 - x) - x;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut steps = 0;
    while hi - lo > tol && steps < 200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let x_star = 0.5 * (lo + hi);
    let (position, value) = marksman_best(x_star)?;
    Ok(EvasionSolution {
        x_star,
        value,
        marksman_position: position,
        reach_probs: evader_reach_probs(x_star)?,
        bisection_steps: steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStrategy {
    /// Mixture over positions 1, 2, 3.
    pub marksman_mix: MixedStrategy,
    /// Hit probability the mixture secures against every `x ∈ [0, 1]`.
    pub guaranteed: f64,
    /// Value of the discretized game the mixture was computed from.
    pub discrete_value: f64,
    pub grid_n: usize,
    /// `(grid_n, best guarantee so far)` for each grid of the refinement.
    pub refinements: Vec<(usize, f64)>,
}

/// Worst-case hit probability of a position mixture over the whole interval.
pub fn guaranteed_hit_probability(mix: &[f64; 3]) -> f64 {
    // σ1(1-x)² + σ2 x + σ3 x(1-x) = σ1 + (σ2 + σ3 - 2σ1) x + (σ1 - σ3) x².
    let c0 = mix[0];
    let c1 = mix[1] + mix[2] - 2.0 * mix[0];
    let c2 = mix[0] - mix[2];
    let f = |x: f64| c0 + x * (c1 + x * c2);
    let mut worst = f(0.0).min(f(1.0));
    if c2 > 0.0 {
        let vertex = -c1 / (2.0 * c2);
        if (0.0..=1.0).contains(&vertex) {
            worst = worst.min(f(vertex));
        }
    }
    worst
}

fn solve_discrete_evasion(grid_n: usize) -> Result<(MixedStrategy, f64)> {
    let game = PayoffMatrix::from_fn(3, grid_n, |i, j| {
        let x = j as f64 / (grid_n - 1) as f64;
        let stay = 1.0 - x;
        [stay * stay, x, x * stay][i]
    })?;
    let sol = matrix_game::solve_exact(&game, matrix_game::EXACT_TOL)?;
    Ok((sol.row_strategy, sol.value))
}

/// A marksman mixture within `epsilon` of the game value.
///
/// Solves the game with the evader restricted to a uniform grid, refining the
/// grid (`n → 2n - 1`) until a mixture's guarantee against the unrestricted
/// evader reaches `V - epsilon`. A finer grid does not always give a better
/// guarantee, so the best mixture seen so far is kept.
pub fn epsilon_strategy(epsilon: f64, grid_n: usize) -> Result<EpsilonStrategy> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::input("epsilon must be positive"));
    }
    if grid_n < 11 {
        return Err(Error::input("evader grid needs at least 11 points"));
    }
    let target = solve_evasion_game(1e-15)?.value - epsilon;
    let mut n = grid_n.min(EPSILON_GRID_CAP);
    let mut best: Option<EpsilonStrategy> = None;
    let mut refinements = Vec::new();
    loop {
        let (mix, discrete_value) = solve_discrete_evasion(n)?;
        let w = mix.weights();
        let guaranteed = guaranteed_hit_probability(&[w[0], w[1], w[2]]);
        if best.as_ref().is_none_or(|b| guaranteed > b.guaranteed) {
            best = Some(EpsilonStrategy {
                marksman_mix: mix,
                guaranteed,
                discrete_value,
                grid_n: n,
                refinements: Vec::new(),
            });
        }
        let mut current = best.clone().expect("set above");
        refinements.push((n, current.guaranteed));
        if current.guaranteed >= target {
            current.refinements = refinements;
            return Ok(current);
        }
        if n >= EPSILON_GRID_CAP {
            return Err(Error::Resource(format!(
                "evader grid cap {EPSILON_GRID_CAP} reached with guarantee {} < {target}",
                current.guaranteed
            )));
        }
        n = (2 * n - 1).min(EPSILON_GRID_CAP);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - √5) / 2

    #[test]
    fn single_leaf() {
        assert_eq!(evaluate_tree(&GameTree::leaf(0.7)).unwrap(), 0.7);
    }

    #[test]
    fn max_over_leaves() {
        let t = GameTree::Max {
            children: vec![GameTree::leaf(0.2), GameTree::leaf(0.9)],
        };
        assert_eq!(evaluate_tree(&t).unwrap(), 0.9);
    }

    #[test]
    fn mixed_node_kinds() {
        let t = GameTree::Min {
            children: vec![
                GameTree::Max {
                    children: vec![GameTree::leaf(1.0), GameTree::leaf(3.0)],
                },
                GameTree::Chance {
                    children: vec![GameTree::leaf(4.0), GameTree::leaf(0.0)],
                    probs: vec![0.5, 0.5],
                },
            ],
        };
        assert_eq!(evaluate_tree(&t).unwrap(), 2.0);
    }

    #[test]
    fn malformed_trees() {
        let empty = GameTree::Max { children: vec![] };
        assert!(matches!(evaluate_tree(&empty), Err(Error::Input(_))));
        let bad_probs = GameTree::Chance {
            children: vec![GameTree::leaf(1.0), GameTree::leaf(0.0)],
            probs: vec![0.6, 0.6],
        };
        assert!(evaluate_tree(&bad_probs).is_err());
        let short = GameTree::Chance {
            children: vec![GameTree::leaf(1.0)],
            probs: vec![0.5, 0.5],
        };
        assert!(evaluate_tree(&short).is_err());
    }

    #[test]
    fn tree_json_shape() {
        let doc = r#"{"kind":"min","children":[
            {"kind":"max","children":[{"kind":"leaf","payoff":1},{"kind":"leaf","payoff":3}]},
            {"kind":"chance","probs":[0.5,0.5],"children":[{"kind":"leaf","payoff":4},{"kind":"leaf","payoff":0}]}
        ]}"#;
        let t: GameTree = serde_json::from_str(doc).unwrap();
        assert_eq!(evaluate_tree(&t).unwrap(), 2.0);
        assert_eq!(t.leaf_count(), 4);
    }

    #[test]
    fn reach_probabilities_at_endpoints() {
        assert_eq!(evader_reach_probs(0.0).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(evader_reach_probs(1.0).unwrap(), [0.0, 1.0, 0.0]);
        let p = evader_reach_probs(0.382).unwrap();
        let expected = [0.381924, 0.382, 0.236076];
        for k in 0..3 {
            assert!((p[k] - expected[k]).abs() < 1e-12);
        }
        assert!(evader_reach_probs(1.2).is_err());
        assert!(evader_reach_probs(f64::NAN).is_err());
    }

    #[test]
    fn marksman_choices() {
        assert_eq!(marksman_best(0.0).unwrap(), (1, 1.0));
        assert_eq!(marksman_best(0.9).unwrap(), (2, 0.9));
        let (pos, prob) = marksman_best(GOLDEN).unwrap();
        assert_eq!(pos, 1);
        assert!((prob - GOLDEN).abs() < 1e-12);
        assert!(marksman_best(-0.1).is_err());
    }

    #[test]
    fn evasion_value_is_the_fixed_point() {
        let sol = solve_evasion_game(1e-9).unwrap();
        assert!((sol.x_star - GOLDEN).abs() <= 1e-9);
        assert!((sol.value - sol.x_star).abs() <= 1e-9);
        assert!((sol.value - (1.0 - sol.x_star).powi(2)).abs() <= 1e-9);
        assert!((sol.value - 0.382).abs() < 5e-4);
    }

    #[test]
    fn evasion_optimum_beats_a_grid_sweep() {
        let sol = solve_evasion_game(1e-12).unwrap();
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            let worst = evader_reach_probs(x).unwrap().into_iter().fold(0.0, f64::max);
            assert!(sol.value <= worst + 1e-12);
        }
    }

    #[test]
    fn grid_tree_upper_bounds_the_value() {
        let v = evaluate_tree(&evasion_tree_on_grid(1001).unwrap()).unwrap();
        assert!(v >= GOLDEN - 1e-12);
        assert!(v - GOLDEN < 1e-3);
    }

    #[test]
    fn epsilon_strategy_meets_its_guarantee() {
        let s = epsilon_strategy(0.01, 11).unwrap();
        assert!(s.guaranteed >= 0.372);
        assert!(s.guaranteed <= GOLDEN + 1e-9);
        let loose = epsilon_strategy(0.5, 11).unwrap();
        assert_eq!(loose.grid_n, 11);
        assert_eq!(loose.refinements.len(), 1);
        assert!(loose.guaranteed <= GOLDEN + 1e-9);
    }

    #[test]
    fn guarantee_of_continuous_optimum() {
        // Equalizing mixture: σ1 = 1/(3 - 2V), σ2 = 1 - σ1, σ3 = 0 makes the
        // quadratic touch V at its minimum x = V.
        let s1 = 1.0 / (3.0 - 2.0 * GOLDEN);
        let g = guaranteed_hit_probability(&[s1, 1.0 - s1, 0.0]);
        assert!((g - GOLDEN).abs() < 1e-12);
        assert_eq!(guaranteed_hit_probability(&[0.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn refinement_keeps_the_best_guarantee() {
        // The raw grid-161 mixture guards the continuum worse than grid 81's.
        let s = epsilon_strategy(1e-9, 11).unwrap();
        assert!(s.guaranteed >= GOLDEN - 1e-9);
        assert!(s.refinements.windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(s.refinements.len() > 3);
    }

    #[test]
    fn epsilon_input_checks() {
        assert!(epsilon_strategy(0.0, 11).is_err());
        assert!(epsilon_strategy(0.01, 5).is_err());
    }
}
