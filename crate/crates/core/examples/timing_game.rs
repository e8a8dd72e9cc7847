//! Symmetric games of timing: kernel checks, solution and spectrum.

use tosg::timing_game::{
    build_kernel, classify_boundary, solve_timing, spectrum, validate_kernel, UpperTriangle,
};

fn main() -> tosg::Result<()> {
    let kernel = build_kernel(UpperTriangle::duel(), 201)?;
    let report = validate_kernel(&kernel);
    println!("duel kernel conditions hold on the grid: {}", report.all_evaluated_pass());
    println!("boundary: {:?}", classify_boundary(&kernel));

    let sol = solve_timing(&kernel)?;
    println!(
        "value {:.1e}, support [{}, 1], nonnegativity residual {:.1e}",
        sol.value, sol.support_lo, sol.residual_guarantee
    );
    let spec = spectrum(&sol.strategy, &kernel, 1e-6)?;
    println!("{} support points, atom at 0: {}", spec.support_points.len(), spec.has_zero_atom);

    // A user kernel: accuracy P(t) = t² for both sides.
    let noisy = UpperTriangle::from_fn("t² duel", |x, y| {
        let (p, q) = (x * x, y * y);
        p - q + p * q
    });
    let kernel = build_kernel(noisy, 101)?;
    let sol = solve_timing(&kernel)?;
    println!("t² duel: support starts at {}, zero atom {}", sol.support_lo, sol.has_zero_atom);

    let late = build_kernel(UpperTriangle::affine(1.0, -1.0, 0.0, -0.5), 21)?;
    let sol = solve_timing(&late)?;
    println!("{:?}: mass at 1 = {}", classify_boundary(&late).class, sol.strategy.weights()[20]);
    Ok(())
}
