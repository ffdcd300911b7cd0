//! Inversion transform, weighted operator residuals, condenser capacity
//! and flux constants.

use plaplace::num::log_grid;
use plaplace::potential::Potential;
use plaplace::radial::{ivp_solve, RadialProfile};
use plaplace::variational::{
    flux_closed_form_power, flux_constant, kelvin_radial, randomized_cutoffs, weighted_capacity,
    weighted_residual, WeightedOperatorSpec,
};
use plaplace::Params;

fn main() -> plaplace::Result<()> {
    // K maps the p-harmonic fundamental branch to the weighted equation.
    let params = Params::new(3.0, 2)?;
    let mu = params.mu_exponent();
    let sol = ivp_solve(
        &params,
        &Potential::zero(),
        0.1,
        0.1f64.powf(mu),
        mu * 0.1f64.powf(mu - 1.0),
        10.0,
    )?;
    let transported = kelvin_radial(&sol.profile());
    let spec = WeightedOperatorSpec::from_kelvin(&params);
    println!(
        "transported solution: weighted residual {:.2e} (beta = {})",
        weighted_residual(&transported, &spec),
        spec.beta
    );

    // Capacity: closed form vs convex minimization.
    let cap = weighted_capacity(&params, spec.beta, 0.5, 8.0, 4096)?;
    println!(
        "weighted capacity: closed {:.10e}, numerical {:.10e}, gap {:.2e}",
        cap.closed_form, cap.numerical, cap.relative_gap
    );

    // Flux constants across five randomized cutoffs.
    let alpha = spec.alpha();
    let grid = log_grid(0.01, 1.0, 4096);
    let profile = RadialProfile::from_fn(grid.clone(), |r| {
        (r.powf(alpha), alpha * r.powf(alpha - 1.0))
    });
    let cutoffs = randomized_cutoffs(&grid, 0.01, 1.0, 5, 42);
    let rep = flux_constant(&profile, &cutoffs, &spec)?;
    println!(
        "flux constants: values {:?}, spread {:.2e}, closed form {:.10}",
        rep.values
            .iter()
            .map(|v| format!("{v:.10}"))
            .collect::<Vec<_>>(),
        rep.max_relative_spread,
        flux_closed_form_power(&spec, alpha)
    );
    Ok(())
}
