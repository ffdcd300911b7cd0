//! Planar solves, Harnack quotient profiles and the regular-point probe.
//!
//! Two solutions of the same Hardy-type equation with different outer
//! data: the sphere-wise ratio M_r/m_r stays bounded and decreases toward
//! the singular point, and the quotient settles at a finite limit.

use plaplace::annulus::{
    critical_set_diagnostics, regular_point_probe, solve_dirichlet_2d, BoundaryData, Domain2,
};
use plaplace::exponents::hardy_constant;
use plaplace::potential::Potential;
use plaplace::{Params, Zeta};

fn main() -> plaplace::Result<()> {
    let params = Params::new(2.5, 2)?;
    let lambda = 0.5 * hardy_constant(&params);
    let potential = Potential::hardy(lambda);
    let domain = Domain2::Annulus {
        r_lo: 2e-3,
        r_hi: 1.0,
    };
    let nt = 24;
    let solve = |inner: f64, m: f64, amp: f64| {
        let data = BoundaryData::from_fns(&domain, nt, |_| inner, |th| 1.0 + amp * (m * th).cos());
        solve_dirichlet_2d(&params, &potential, domain, &data, 128, nt)
    };
    let u = solve(1.0, 2.0, 0.3)?;
    let v = solve(0.5, 3.0, -0.2)?;
    println!("solver residuals: {:.2e}, {:.2e}", u.residual, v.residual);

    let probe = regular_point_probe(&u, &v, Zeta::Origin)?;
    let h = &probe.harnack;
    println!(
        "harnack: uniform bound {:.4}, ratio at inner {:.6}, outer {:.6}",
        h.uniform_bound,
        h.ratio_r[0],
        h.ratio_r[h.ratio_r.len() - 1]
    );
    println!(
        "probe: limit class {:?}, limit {:?} ({})",
        probe.limit_class, probe.limit_value, probe.status
    );

    let diag = critical_set_diagnostics(&u);
    println!(
        "critical set: {}/{} nodes, complement components {}",
        diag.n_critical, diag.n_nodes, diag.complement_components
    );
    Ok(())
}
