//! Radial solves and asymptotic classification.
//!
//! Integrates the fundamental branch toward the origin and classifies it,
//! then solves a Dirichlet problem against the exact Hardy power and
//! reports the reproduction error.

use plaplace::exponents::solve_gamma;
use plaplace::potential::Potential;
use plaplace::radial::{bvp_dirichlet, classify_asymptotics, ivp_solve};
use plaplace::{Params, Zeta};

fn main() -> plaplace::Result<()> {
    // Fundamental solution of the p-Laplacian toward 0 (p < d).
    let params = Params::new(2.0, 3)?;
    let g = params.mu_exponent();
    let sol = ivp_solve(&params, &Potential::zero(), 1.0, 1.0, g, 1e-3)?;
    let report = classify_asymptotics(&sol, Zeta::Origin, &params)?;
    println!(
        "fundamental branch toward 0: class {:?}, exponent {:?} (expected {g})",
        report.class, report.exponent
    );

    // Dirichlet reproduction of the Hardy power solution.
    let lambda = 0.125;
    let pair = solve_gamma(lambda, &params)?;
    let potential = Potential::hardy(lambda);
    let (r_lo, r_hi) = (1.0, 10.0);
    let sol = bvp_dirichlet(
        &params,
        &potential,
        r_lo,
        r_hi,
        1.0,
        r_hi.powf(pair.gamma_minus),
        2048,
    )?;
    let worst = sol
        .grid
        .iter()
        .zip(&sol.v)
        .map(|(&r, &v)| (v - r.powf(pair.gamma_minus)).abs() / r.powf(pair.gamma_minus))
        .fold(0.0f64, f64::max);
    println!(
        "Dirichlet solve vs exact power r^{:.6}: max relative error {worst:.2e}",
        pair.gamma_minus
    );
    Ok(())
}
