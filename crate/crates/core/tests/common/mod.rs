#![allow(dead_code)]

use rand::Rng;
use tosg::duel::{AccuracyFunction, DuelSpec, TimeVector};
use tosg::matrix_game::PayoffMatrix;
use tosg::timing_game::UpperTriangle;

/// A random `A(x, y)` increasing in `x` and decreasing in `y`.
pub fn random_monotone_upper(rng: &mut impl Rng) -> UpperTriangle {
    match rng.random_range(0..3) {
        0 => {
            let cx = rng.random_range(0.1..2.0);
            let cy = -rng.random_range(0.1..2.0);
            let cxy = rng.random_range(-0.9..0.9) * f64::min(cx, -cy);
            let c0 = rng.random_range(-1.0..1.0);
            UpperTriangle::affine(cx, cy, cxy, c0)
        }
        1 => {
            // P(x) - Q(y) + c·P(x)Q(y) with power accuracies and |c| ≤ 1.
            let (a, b) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0));
            let c = rng.random_range(-1.0..=1.0);
            UpperTriangle::from_fn("power duel", move |x: f64, y: f64| {
                let (p, q) = (x.powf(a), y.powf(b));
                p - q + c * p * q
            })
        }
        _ => {
            let (s, t) = (rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
            let c0 = rng.random_range(-1.0..1.0);
            UpperTriangle::from_fn("arctan", move |x: f64, y: f64| s * x.atan() - t * y * y + c0)
        }
    }
}

pub fn random_game(rng: &mut impl Rng, max_dim: usize) -> PayoffMatrix {
    let rows = rng.random_range(1..=max_dim);
    let cols = rng.random_range(1..=max_dim);
    PayoffMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn random_accuracy(rng: &mut impl Rng) -> AccuracyFunction {
    match rng.random_range(0..3) {
        0 => AccuracyFunction::Identity,
        1 => AccuracyFunction::Power { k: rng.random_range(0.3..4.0) },
        _ => {
            let mut knots: Vec<f64> = (0..rng.random_range(1..4)).map(|_| rng.random_range(0.05..0.95)).collect();
            knots.sort_by(f64::total_cmp);
            knots.dedup();
            let mut points = vec![[0.0, 0.0]];
            let mut v = 0.0;
            for t in knots {
                v = rng.random_range(v..=1.0);
                points.push([t, v]);
            }
            points.push([1.0, 1.0]);
            AccuracyFunction::Table { points }
        }
    }
}

pub fn random_times(rng: &mut impl Rng, len: usize) -> TimeVector {
    // Occasionally snap to a coarse grid so simultaneous shots get exercised.
    let coarse = rng.random_bool(0.3);
    let times = (0..len)
        .map(|_| {
            let t: f64 = rng.random();
            if coarse { (t * 4.0).round() / 4.0 } else { t }
        })
        .collect();
    TimeVector::sorted(times).unwrap()
}

pub fn random_duel(rng: &mut impl Rng, max_shots: usize) -> (DuelSpec, TimeVector, TimeVector) {
    let m = rng.random_range(1..=max_shots);
    let n = rng.random_range(1..=max_shots);
    let spec = DuelSpec::new(m, n, random_accuracy(rng), random_accuracy(rng)).unwrap();
    let x = random_times(rng, m);
    let y = random_times(rng, n);
    (spec, x, y)
}

/// Error-free transformation `a + b = s + e`.
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Compensated sum: exact up to a final rounding for short, same-signed inputs.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut err = 0.0;
    for &v in values {
        let (t, e) = two_sum(s, v);
        s = t;
        err += e;
    }
    s + err
}
