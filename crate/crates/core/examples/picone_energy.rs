//! Energy functional and Picone Lagrangian decay.
//!
//! Below the Hardy constant every profile has nonnegative energy; above
//! it a wide enough log-cutoff of the critical power goes negative. On a
//! sector, the Picone integral of cutoff separable solutions decays as
//! the cutoff widens.

use plaplace::annulus::{Domain2, PolarField};
use plaplace::exponents::{hardy_constant, sector_exponents};
use plaplace::potential::Potential;
use plaplace::scenario::taper_profile;
use plaplace::variational::{energy, picone_polar};
use plaplace::Params;
use std::f64::consts::PI;

fn main() -> plaplace::Result<()> {
    let params = Params::new(2.0, 3)?;
    let ch = hardy_constant(&params);
    let gamma = params.gamma_star();
    for factor in [1.0, 1.2] {
        let potential = Potential::hardy(factor * ch);
        let mut best = f64::INFINITY;
        for k in 1..=8 {
            let s1 = 4.0 * k as f64;
            best = best.min(energy(
                &params,
                &potential,
                &taper_profile(gamma, s1, s1 + 2.0, 128),
            ));
        }
        println!("lambda = {factor} c_H: most negative energy over the cutoff scan = {best:.6e}");
    }

    // Picone decay on the half plane.
    let aperture = PI;
    let exps = sector_exponents(2.0, aperture)?;
    let params2 = Params::new(2.0, 2)?;
    for k in [8.0, 32.0, 128.0] {
        let domain = Domain2::Sector {
            r_lo: 1.0,
            r_hi: 2.0 * k,
            aperture,
        };
        let u0 = PolarField::separable(
            domain,
            params2,
            384,
            48,
            exps.beta_singular,
            &exps.profile_singular,
        )?;
        let mut cut = u0.clone();
        for (i, &r) in u0.r_grid.iter().enumerate() {
            let chi = if r <= k {
                1.0
            } else {
                ((2.0 * k - r) / k).max(0.0)
            };
            for j in 0..u0.n_theta() {
                cut.values[i * u0.n_theta() + j] *= chi;
            }
        }
        let res = picone_polar(&cut, &u0)?;
        println!(
            "picone integral at k = {k:>5}: {:.6e} (min pointwise {:.1e})",
            res.integral, res.min_pointwise
        );
    }
    Ok(())
}
