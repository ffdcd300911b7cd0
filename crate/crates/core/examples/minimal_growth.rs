//! Minimal-growth solutions by annulus exhaustion.
//!
//! The exhaustion holds unit data at the anchor and near-zero data on a
//! geometrically receding far boundary; the fitted power converges to
//! gamma_- (zeta = 0) or gamma_+ (zeta = infinity).

use plaplace::exponents::{hardy_constant, solve_gamma};
use plaplace::potential::Potential;
use plaplace::radial::minimal_growth_exhaustion;
use plaplace::{Params, Zeta};

fn main() -> plaplace::Result<()> {
    let params = Params::new(2.0, 3)?;
    let lambda = 0.5 * hardy_constant(&params);
    let pair = solve_gamma(lambda, &params)?;
    let potential = Potential::hardy(lambda);
    for (zeta, expect) in [
        (Zeta::Origin, pair.gamma_minus),
        (Zeta::Infinity, pair.gamma_plus),
    ] {
        let res = minimal_growth_exhaustion(&params, &potential, zeta, 1.0, 24)?;
        println!(
            "zeta = {zeta}: fitted exponent {:+.6} (target {expect:+.6}, {} stages, error {:.2e})",
            res.exponent,
            res.stage_exponents.len(),
            (res.exponent - expect).abs()
        );
    }
    Ok(())
}
