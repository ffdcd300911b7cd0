//! Energy functional, Picone Lagrangian, the inversion transform
//! `K[u](x) = u(x/|x|^2)`, the weighted operator it conjugates the
//! p-Laplacian to, weighted condenser capacity, and cutoff-independent flux
//! constants.
//!
//! The transform `K` maps p-harmonic functions to solutions of the weighted
//! equation `-div(|x|^beta |grad v|^{p-2} grad v) = 0` with `beta = 2(p-d)`.
//! With `alpha = (p - d - beta)/(p - 1)` the weighted condenser capacity of
//! `B_r` in `B_R` has the closed form
//!
//! ```text
//! cap_{p,beta}(B_r, B_R) = omega_{d-1} |alpha|^{p-1} |r^alpha - R^alpha|^{1-p},
//! ```
//!
//! recovered from the explicit radial minimizer affine in `t^alpha`; the
//! convex discrete minimization below serves as its independent oracle.
//! For `beta = 2(p-d)` the exponent identity `alpha = (d-p)/(p-1)` holds,
//! matching the power solution `|x|^alpha` of the weighted equation.

use serde::{Deserialize, Serialize};

use crate::annulus::PolarField;
use crate::error::{Error, Result};
use crate::num::{phi_p, phi_p_deriv, simpson_log, unit_sphere_area, SplitMix64};
use crate::potential::Potential;
use crate::radial::{RadialProfile, FLUX_DELTA};
use crate::Params;

/// Energy `Q(u) = omega_{d-1} int (|u'|^p + V |u|^p) r^{d-1} dr` of a radial
/// profile by composite Simpson on its (log-spaced) grid.
pub fn energy(params: &Params, potential: &Potential, profile: &RadialProfile) -> f64 {
    let p = params.p;
    let d = params.df();
    let f: Vec<f64> = profile
        .r
        .iter()
        .zip(profile.u.iter().zip(&profile.du))
        .map(|(&r, (&u, &du))| {
            let v = potential.eval_radial(params, r);
            (du.abs().powf(p) + v * u.abs().powf(p)) * r.powf(d - 1.0)
        })
        .collect();
    unit_sphere_area(params.d) * simpson_log(&profile.r, &f)
}

/// Pointwise Picone Lagrangian and its weighted integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiconeResult {
    pub lagrangian: Vec<f64>,
    pub integral: f64,
    /// Most negative pointwise value (rounding scale when all is well:
    /// the Lagrangian is nonnegative by Young's inequality).
    pub min_pointwise: f64,
}

#[inline]
fn picone_pointwise(p: f64, uk: f64, duk2: f64, u: f64, du2: f64, dot: f64) -> f64 {
    // L = (1/p) [ |grad uk|^p + (p-1)(uk/u)^p |grad u|^p
    //            - p (uk/u)^{p-1} (grad uk . grad u) |grad u|^{p-2} ]
    let gk = duk2.sqrt();
    let gu = du2.sqrt();
    let t = uk / u;
    (gk.powf(p) + (p - 1.0) * t.powf(p) * gu.powf(p)
        - p * t.powf(p - 1.0) * dot * if gu > 0.0 { gu.powf(p - 2.0) } else { 0.0 })
        / p
}

/// Picone Lagrangian of a radial pair on a shared grid, integrated with the
/// surface-measure weight `omega_{d-1} r^{d-1}`.
///
/// `u_pos` must be positive wherever `u_test` is nonzero.
pub fn picone_radial(
    params: &Params,
    u_test: &RadialProfile,
    u_pos: &RadialProfile,
) -> Result<PiconeResult> {
    if u_test.r.len() != u_pos.r.len() {
        return Err(Error::precondition(
            "picone needs profiles on a shared grid",
        ));
    }
    let p = params.p;
    let mut lagrangian = Vec::with_capacity(u_test.r.len());
    let mut min_pointwise = f64::INFINITY;
    for i in 0..u_test.r.len() {
        let (uk, duk) = (u_test.u[i], u_test.du[i]);
        let (u, du) = (u_pos.u[i], u_pos.du[i]);
        if uk != 0.0 && u <= 0.0 {
            return Err(Error::precondition(format!(
                "picone: positive profile vanishes at r = {} inside the test support",
                u_test.r[i]
            )));
        }
        let l = if uk == 0.0 && duk == 0.0 {
            0.0
        } else {
            picone_pointwise(p, uk, duk * duk, u, du * du, duk * du)
        };
        min_pointwise = min_pointwise.min(l);
        lagrangian.push(l);
    }
    let d = params.df();
    let f: Vec<f64> = u_test
        .r
        .iter()
        .zip(&lagrangian)
        .map(|(&r, &l)| l * r.powf(d - 1.0))
        .collect();
    let integral = unit_sphere_area(params.d) * simpson_log(&u_test.r, &f);
    Ok(PiconeResult {
        lagrangian,
        integral,
        min_pointwise,
    })
}

/// Picone Lagrangian of a planar pair on a shared polar grid, integrated
/// with the area measure `r dr dtheta` (d = 2). Gradients are taken from
/// central differences of the fields.
pub fn picone_polar(u_test: &PolarField, u_pos: &PolarField) -> Result<PiconeResult> {
    if u_test.r_grid.len() != u_pos.r_grid.len() || u_test.n_theta() != u_pos.n_theta() {
        return Err(Error::precondition("picone needs fields on a shared grid"));
    }
    let p = u_test.params.p;
    let nt = u_test.n_theta();
    let nr = u_test.n_r();
    let grads = |f: &PolarField| -> (Vec<f64>, Vec<f64>) {
        // derivatives wrt s = ln r and theta, central differences
        let mut gs = vec![0.0; nr * nt];
        let mut gt = vec![0.0; nr * nt];
        let ds = (f.r_grid[1] / f.r_grid[0]).ln();
        let dt = f.theta_grid[1] - f.theta_grid[0];
        let periodic = f.domain.is_periodic();
        for i in 0..nr {
            for j in 0..nt {
                let (im, ip) = (i.saturating_sub(1), (i + 1).min(nr - 1));
                gs[i * nt + j] = (f.at(ip, j) - f.at(im, j)) / (ds * (ip - im).max(1) as f64);
                let (jm, jp) = if periodic {
                    ((j + nt - 1) % nt, (j + 1) % nt)
                } else {
                    (j.saturating_sub(1), (j + 1).min(nt - 1))
                };
                let steps = if periodic { 2 } else { (jp + nt - jm) % nt };
                gt[i * nt + j] = (f.at(i, jp) - f.at(i, jm)) / (dt * steps.max(1) as f64);
            }
        }
        (gs, gt)
    };
    let (ks, kt) = grads(u_test);
    let (us, ut) = grads(u_pos);
    let mut lagrangian = vec![0.0; nr * nt];
    let mut min_pointwise = f64::INFINITY;
    for i in 0..nr {
        let r = u_test.r_grid[i];
        for j in 0..nt {
            let k = i * nt + j;
            let uk = u_test.values[k];
            let u = u_pos.values[k];
            // |grad|^2 = (us^2 + ut^2)/r^2 in polar coordinates
            let duk2 = (ks[k] * ks[k] + kt[k] * kt[k]) / (r * r);
            let du2 = (us[k] * us[k] + ut[k] * ut[k]) / (r * r);
            let dot = (ks[k] * us[k] + kt[k] * ut[k]) / (r * r);
            if uk != 0.0 && u <= 0.0 {
                return Err(Error::precondition(
                    "picone: positive field vanishes inside the test support",
                ));
            }
            let l = if uk == 0.0 {
                0.0
            } else {
                picone_pointwise(p, uk, duk2, u, du2, dot)
            };
            min_pointwise = min_pointwise.min(l);
            lagrangian[k] = l;
        }
    }
    // integral over the sector/annulus: sum over theta, Simpson in log r.
    let dt = u_test.theta_grid[1] - u_test.theta_grid[0];
    let mut radial_density = vec![0.0; nr];
    for i in 0..nr {
        let mut acc = 0.0;
        for j in 0..nt {
            // trapezoid in theta (endpoints halved on sectors)
            let wj = if !u_test.domain.is_periodic() && (j == 0 || j == nt - 1) {
                0.5
            } else {
                1.0
            };
            acc += wj * lagrangian[i * nt + j];
        }
        radial_density[i] = acc * dt * u_test.r_grid[i];
    }
    let integral = simpson_log(&u_test.r_grid, &radial_density);
    Ok(PiconeResult {
        lagrangian,
        integral,
        min_pointwise,
    })
}

// ---------------------------------------------------------------------------
// inversion transform
// ---------------------------------------------------------------------------

/// Radial inversion transform `K[u](r) = u(1/r)`, with the chain-rule
/// derivative `-u'(1/r)/r^2`. The grid maps to the reciprocal annulus.
pub fn kelvin_radial(profile: &RadialProfile) -> RadialProfile {
    let n = profile.r.len();
    let mut r = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut du = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let rho = 1.0 / profile.r[i];
        r.push(rho);
        u.push(profile.u[i]);
        du.push(-profile.du[i] * profile.r[i] * profile.r[i]);
    }
    RadialProfile { r, u, du }
}

/// Planar inversion transform `K[u](r, theta) = u(1/r, theta)`.
pub fn kelvin_polar(field: &PolarField) -> PolarField {
    let nr = field.n_r();
    let nt = field.n_theta();
    let r_grid: Vec<f64> = field.r_grid.iter().rev().map(|&r| 1.0 / r).collect();
    let mut values = Vec::with_capacity(nr * nt);
    for i in (0..nr).rev() {
        for j in 0..nt {
            values.push(field.at(i, j));
        }
    }
    let (r_lo, r_hi) = (r_grid[0], r_grid[nr - 1]);
    let domain = match field.domain {
        crate::annulus::Domain2::Annulus { .. } => crate::annulus::Domain2::Annulus { r_lo, r_hi },
        crate::annulus::Domain2::Sector { aperture, .. } => crate::annulus::Domain2::Sector {
            r_lo,
            r_hi,
            aperture,
        },
    };
    let mut out = PolarField {
        domain,
        params: field.params,
        r_grid,
        theta_grid: field.theta_grid.clone(),
        values,
        grad_mag: Vec::new(),
        critical_set_mask: Vec::new(),
        residual: 0.0,
        epsilon_final: 0.0,
    };
    out.refresh_gradient();
    out
}

// ---------------------------------------------------------------------------
// weighted operator
// ---------------------------------------------------------------------------

/// The weighted operator `-div(|x|^beta |grad v|^{p-2} grad v)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightedOperatorSpec {
    pub beta: f64,
    pub params: Params,
}

impl WeightedOperatorSpec {
    /// The inversion-conjugate weight `beta = 2(p - d)`.
    pub fn from_kelvin(params: &Params) -> WeightedOperatorSpec {
        WeightedOperatorSpec {
            beta: 2.0 * (params.p - params.df()),
            params: *params,
        }
    }

    pub fn new(beta: f64, params: &Params) -> WeightedOperatorSpec {
        WeightedOperatorSpec {
            beta,
            params: *params,
        }
    }

    /// Capacity exponent `alpha = (p - d - beta)/(p - 1)`.
    pub fn alpha(&self) -> f64 {
        (self.params.p - self.params.df() - self.beta) / (self.params.p - 1.0)
    }
}

/// Max-norm finite-difference residual of the radial weighted equation
/// `(r^{beta+d-1} |v'|^{p-2} v')' = 0` on the interior of the profile grid,
/// normalized by the flux scale.
///
/// In the log variable the flux is `z(s) = e^{(beta+d-p)s} phi_p(v_s)`,
/// constant exactly on solutions; the residual is the largest jump of `z`
/// between adjacent midpoints relative to `max |z|`.
pub fn weighted_residual(profile: &RadialProfile, spec: &WeightedOperatorSpec) -> f64 {
    let p = spec.params.p;
    let c = spec.beta + spec.params.df() - p;
    let n = profile.r.len();
    if n < 3 {
        return f64::NAN;
    }
    let ds = (profile.r[1] / profile.r[0]).ln();
    let z: Vec<f64> = (0..n - 1)
        .map(|i| {
            let sm = 0.5 * (profile.r[i].ln() + profile.r[i + 1].ln());
            (c * sm).exp() * phi_p((profile.u[i + 1] - profile.u[i]) / ds, p)
        })
        .collect();
    let zmax = z.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if zmax == 0.0 {
        return 0.0;
    }
    z.windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
        / zmax
}

// ---------------------------------------------------------------------------
// weighted capacity
// ---------------------------------------------------------------------------

/// Closed-form vs numerically minimized weighted condenser capacity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CapacityResult {
    pub closed_form: f64,
    pub numerical: f64,
    /// Exponent `(p - d - beta)/(p - 1)` used by both routes.
    pub alpha: f64,
    pub relative_gap: f64,
}

/// Weighted p-capacity of `B_r` in `B_R` with respect to `|x|^beta`:
/// closed form against the convex discrete minimization of
/// `omega_{d-1} int t^{beta+d-1} |theta'|^p dt` over radial profiles with
/// `theta(r) = 1`, `theta(R) = 0`, on a log grid with `n` intervals.
pub fn weighted_capacity(
    params: &Params,
    beta: f64,
    r: f64,
    big_r: f64,
    n: usize,
) -> Result<CapacityResult> {
    if !(0.0 < r && r < big_r) {
        return Err(Error::domain(format!(
            "capacity needs 0 < r < R, got ({r}, {big_r})"
        )));
    }
    let spec = WeightedOperatorSpec::new(beta, params);
    let alpha = spec.alpha();
    if alpha.abs() < 1e-12 {
        return Err(Error::domain(
            "alpha = (p-d-beta)/(p-1) = 0: logarithmic (conformal) capacity not covered",
        ));
    }
    let p = params.p;
    let omega = unit_sphere_area(params.d);
    let closed_form =
        omega * alpha.abs().powf(p - 1.0) * (r.powf(alpha) - big_r.powf(alpha)).abs().powf(1.0 - p);

    // Discrete minimization: J(theta) = sum_f e^{c s_f} |dtheta/ds|^p ds,
    // c = beta + d - p, by damped Newton on the tridiagonal system.
    let n = n.max(16);
    let grid = crate::num::log_grid(r, big_r, n);
    let ds = (big_r / r).ln() / n as f64;
    let c = beta + params.df() - p;
    let w_face: Vec<f64> = (0..n)
        .map(|i| (c * 0.5 * (grid[i].ln() + grid[i + 1].ln())).exp())
        .collect();
    // Initial profile affine in t^alpha (the continuum minimizer).
    let ra = r.powf(alpha);
    let rb = big_r.powf(alpha);
    let mut theta: Vec<f64> = grid
        .iter()
        .map(|&t| (t.powf(alpha) - rb) / (ra - rb))
        .collect();
    theta[0] = 1.0;
    theta[n] = 0.0;

    let objective = |th: &[f64]| -> f64 {
        (0..n)
            .map(|i| w_face[i] * ((th[i + 1] - th[i]) / ds).abs().powf(p) * ds)
            .sum::<f64>()
    };
    let gradient = |th: &[f64], g: &mut [f64]| {
        for i in 1..n {
            let zl = w_face[i - 1] * phi_p((th[i] - th[i - 1]) / ds, p);
            let zr = w_face[i] * phi_p((th[i + 1] - th[i]) / ds, p);
            g[i - 1] = p * (zl - zr);
        }
    };
    let mut grad = vec![0.0; n - 1];
    let mut delta = vec![0.0; n - 1];
    let (mut lower, mut diag, mut upper) = (vec![0.0; n - 1], vec![0.0; n - 1], vec![0.0; n - 1]);
    let mut obj = objective(&theta);
    gradient(&theta, &mut grad);
    let gscale = (p / ds) * w_face.iter().fold(0.0f64, |m, &x| m.max(x));
    for _iter in 0..100 {
        let gnorm = grad.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        if gnorm < 1e-13 * gscale.max(1e-300) {
            break;
        }
        for i in 1..n {
            let hl =
                p * phi_p_deriv((theta[i] - theta[i - 1]) / ds, p, FLUX_DELTA) * w_face[i - 1] / ds;
            let hr =
                p * phi_p_deriv((theta[i + 1] - theta[i]) / ds, p, FLUX_DELTA) * w_face[i] / ds;
            diag[i - 1] = hl + hr;
            if i >= 2 {
                lower[i - 1] = -hl;
            }
            if i <= n - 2 {
                upper[i - 1] = -hr;
            }
        }
        solve_capacity_tridiag(&lower, &diag, &upper, &grad, &mut delta);
        let mut alpha_step = 1.0f64;
        let mut accepted = false;
        for _ in 0..50 {
            let trial: Vec<f64> = (0..=n)
                .map(|i| {
                    if i == 0 || i == n {
                        theta[i]
                    } else {
                        theta[i] - alpha_step * delta[i - 1]
                    }
                })
                .collect();
            let tobj = objective(&trial);
            if tobj <= obj {
                theta = trial;
                obj = tobj;
                accepted = true;
                break;
            }
            alpha_step *= 0.5;
        }
        if !accepted {
            break; // at the discrete minimum up to rounding
        }
        gradient(&theta, &mut grad);
    }
    let numerical = omega * obj;
    Ok(CapacityResult {
        closed_form,
        numerical,
        alpha,
        relative_gap: (closed_form - numerical).abs() / closed_form,
    })
}

fn solve_capacity_tridiag(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], x: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
}

// ---------------------------------------------------------------------------
// flux constants
// ---------------------------------------------------------------------------

/// Flux integrals `k = int grad(theta) . |x|^beta |grad v|^{p-2} grad v dx`
/// for a family of cutoffs, with their spread.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxReport {
    pub values: Vec<f64>,
    /// (max - min) / |mean| over the cutoff family.
    pub max_relative_spread: f64,
}

/// Closed-form flux constant of the power solution `v = r^alpha` under the
/// weighted operator: `-omega_{d-1} |alpha|^{p-2} alpha` (positive for the
/// singular branch `alpha < 0`).
pub fn flux_closed_form_power(spec: &WeightedOperatorSpec, alpha: f64) -> f64 {
    -unit_sphere_area(spec.params.d) * alpha.abs().powf(spec.params.p - 2.0) * alpha
}

/// Flux integral for each cutoff: `omega_{d-1} int theta'(r) r^{beta}
/// |v'|^{p-2} v' r^{d-1} dr`. Cutoffs must be 1 near the inner edge, 0 near
/// the outer edge, smooth in between, sampled on the profile's grid.
pub fn flux_constant(
    profile: &RadialProfile,
    cutoffs: &[RadialProfile],
    spec: &WeightedOperatorSpec,
) -> Result<FluxReport> {
    if cutoffs.is_empty() {
        return Err(Error::precondition("flux needs at least one cutoff"));
    }
    let p = spec.params.p;
    let d = spec.params.df();
    let omega = unit_sphere_area(spec.params.d);
    let mut values = Vec::with_capacity(cutoffs.len());
    for cut in cutoffs {
        if cut.r.len() != profile.r.len() {
            return Err(Error::precondition("cutoffs must share the profile grid"));
        }
        let n = cut.u.len();
        if (cut.u[0] - 1.0).abs() > 1e-12 || cut.u[n - 1].abs() > 1e-12 {
            return Err(Error::precondition(
                "cutoffs must equal 1 near the inner boundary and 0 near the outer",
            ));
        }
        let f: Vec<f64> = (0..profile.r.len())
            .map(|i| {
                let r = profile.r[i];
                cut.du[i] * r.powf(spec.beta) * phi_p(profile.du[i], p) * r.powf(d - 1.0)
            })
            .collect();
        values.push(omega * simpson_log(&profile.r, &f));
    }
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(FluxReport {
        values,
        max_relative_spread: (hi - lo) / mean.abs().max(1e-300),
    })
}

/// A smooth step in log r: 1 for `r <= r_on`, 0 for `r >= r_off`, joined by
/// the C^2 "smootherstep" polynomial in between, sampled on `grid`.
pub fn smooth_step_cutoff(grid: &[f64], r_on: f64, r_off: f64) -> RadialProfile {
    let (s_on, s_off) = (r_on.ln(), r_off.ln());
    RadialProfile::from_fn(grid.to_vec(), |r| {
        let s = r.ln();
        if s <= s_on {
            (1.0, 0.0)
        } else if s >= s_off {
            (0.0, 0.0)
        } else {
            let t = (s - s_on) / (s_off - s_on);
            let v = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
            let dv_dt = -(30.0 * t * t - 60.0 * t * t * t + 30.0 * t * t * t * t);
            // d/dr = (1/r) d/ds
            (v, dv_dt / (s_off - s_on) / r)
        }
    })
}

/// A deterministic family of `count` randomized smooth steps inside the
/// annulus `(r_inner, r_outer)`, all 1 near the inner edge and 0 near the
/// outer edge. The seed makes the family reproducible.
pub fn randomized_cutoffs(
    grid: &[f64],
    r_inner: f64,
    r_outer: f64,
    count: usize,
    seed: u64,
) -> Vec<RadialProfile> {
    let mut rng = SplitMix64::new(seed);
    let span = (r_outer / r_inner).ln();
    (0..count)
        .map(|_| {
            // Transition window at a random place covering 20-60% of the span.
            let width = span * rng.uniform(0.2, 0.6);
            let start = rng.uniform(0.1, 0.9 - width / span * 0.9) * span;
            let r_on = r_inner * (0.02 * span + start).exp();
            let r_off = (r_on.ln() + width).exp().min(r_outer * 0.98);
            smooth_step_cutoff(grid, r_on, r_off)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::hardy_constant;
    use crate::num::log_grid;
    use crate::potential::Potential;
    use std::f64::consts::PI;

    fn pr(p: f64, d: u32) -> Params {
        Params::new(p, d).unwrap()
    }

    /// u = r^gamma tapered to zero in log r: plateau on [e^{-s1}, e^{s1}],
    /// linear log-ramps reaching 0 at [e^{-s2}, e^{s2}].
    fn taper_profile(gamma: f64, s1: f64, s2: f64, n_per_unit: usize) -> RadialProfile {
        let n = ((2.0 * s2) * n_per_unit as f64).ceil() as usize;
        let grid = log_grid((-s2).exp(), s2.exp(), n.max(64));
        RadialProfile::from_fn(grid, |r| {
            let s = r.ln();
            let (eta, deta_ds) = if s.abs() <= s1 {
                (1.0, 0.0)
            } else if s.abs() >= s2 {
                (0.0, 0.0)
            } else {
                ((s2 - s.abs()) / (s2 - s1), -s.signum() / (s2 - s1))
            };
            let u = r.powf(gamma) * eta;
            let du = gamma * r.powf(gamma - 1.0) * eta + r.powf(gamma) * deta_ds / r;
            (u, du)
        })
    }

    #[test]
    fn energy_nonnegative_up_to_hardy_constant() {
        let params = pr(2.0, 3);
        let ch = hardy_constant(&params);
        // V = 0: energy of anything is >= 0.
        let prof = taper_profile(-0.3, 2.0, 4.0, 256);
        assert!(energy(&params, &Potential::zero(), &prof) >= 0.0);
        // At the critical coupling, the ground-state power with cutoffs
        // stays nonnegative.
        let gs = params.gamma_star();
        let prof = taper_profile(gs, 3.0, 6.0, 256);
        let e = energy(&params, &Potential::hardy(ch), &prof);
        assert!(e >= -1e-12, "critical energy {e}");
    }

    #[test]
    fn energy_goes_negative_above_hardy_constant() {
        // lambda = 1.2 c_H: a wide enough log-cutoff of r^{gamma_*} has
        // negative energy. Grid search over plateau widths.
        let params = pr(2.0, 3);
        let lambda = 1.2 * hardy_constant(&params);
        let potential = Potential::hardy(lambda);
        let gs = params.gamma_star();
        let found = (1..=8).any(|k| {
            let s1 = 4.0 * k as f64;
            let e = energy(&params, &potential, &taper_profile(gs, s1, s1 + 2.0, 128));
            e < 0.0
        });
        assert!(found, "no negative-energy profile found in the cutoff scan");
    }

    #[test]
    fn energy_critical_scaling_for_hardy() {
        // u_s(r) = u(r/s) has energy s^{d-p} times the original when V is
        // the Hardy potential (exact scaling covariance).
        let params = pr(2.5, 3);
        let potential = Potential::hardy(0.01);
        let base = taper_profile(-0.4, 1.5, 3.0, 256);
        let e0 = energy(&params, &potential, &base);
        for s in [0.5, 2.0, 7.3] {
            let scaled = RadialProfile {
                r: base.r.iter().map(|&r| r * s).collect(),
                u: base.u.clone(),
                du: base.du.iter().map(|&d| d / s).collect(),
            };
            let e = energy(&params, &potential, &scaled);
            let expect = s.powf(params.df() - params.p) * e0;
            assert!(
                (e - expect).abs() <= 1e-10 * expect.abs().max(1e-10),
                "s={s}: {e} vs {expect}"
            );
        }
    }

    #[test]
    fn picone_vanishes_on_proportional_pairs() {
        let params = pr(3.0, 2);
        let grid = log_grid(0.5, 8.0, 512);
        let upos = RadialProfile::from_fn(grid.clone(), |r| (r.powf(0.7), 0.7 * r.powf(-0.3)));
        let res = picone_radial(&params, &upos, &upos).unwrap();
        assert!(res.integral.abs() < 1e-12);
        assert!(res.lagrangian.iter().all(|&l| l.abs() < 1e-14));
        // homogeneity: L(c u, u) = 0
        let scaled = RadialProfile {
            r: grid.clone(),
            u: upos.u.iter().map(|&x| 2.5 * x).collect(),
            du: upos.du.iter().map(|&x| 2.5 * x).collect(),
        };
        let res = picone_radial(&params, &scaled, &upos).unwrap();
        assert!(res.integral.abs() < 1e-11, "integral {}", res.integral);
    }

    #[test]
    fn picone_is_pointwise_nonnegative() {
        let params = pr(2.5, 3);
        let grid = log_grid(0.5, 8.0, 512);
        let upos = RadialProfile::from_fn(grid.clone(), |r| (r.powf(-0.4), -0.4 * r.powf(-1.4)));
        let utest = RadialProfile::from_fn(grid.clone(), |r| {
            let s = r.ln();
            let v = (1.0 - (s / 2.0).powi(2)).max(0.0);
            (
                v * r.powf(0.3),
                0.3 * v * r.powf(-0.7) - s.signum().max(0.0) * 0.0,
            )
        });
        let res = picone_radial(&params, &utest, &upos).unwrap();
        assert!(res.min_pointwise >= -1e-12, "min {}", res.min_pointwise);
        assert!(res.integral >= -1e-12);
        // positive profile with a zero inside the test support errors
        let bad = RadialProfile::from_fn(grid, |r| ((r - 2.0).max(0.0), 1.0));
        assert!(picone_radial(&params, &utest, &bad).is_err());
    }

    #[test]
    fn picone_sector_cutoff_decay() {
        // On a 2-D sector with p = d = 2 the Picone integral of
        // (chi_k u0, u0) over |x| > 1 decays like k^{2 beta_0}.
        let aperture = PI;
        let exps = crate::exponents::sector_exponents(2.0, aperture).unwrap();
        let params = pr(2.0, 2);
        let integral_at = |k: f64| -> f64 {
            let domain = crate::annulus::Domain2::Sector {
                r_lo: 1.0,
                r_hi: 2.0 * k,
                aperture,
            };
            let beta0 = exps.beta_singular;
            let phi = &exps.profile_singular;
            let interp = |t: f64| -> f64 {
                let h = phi.theta[1] - phi.theta[0];
                let x = (t / h).clamp(0.0, (phi.theta.len() - 1) as f64);
                let kk = (x.floor() as usize).min(phi.theta.len() - 2);
                let w = x - kk as f64;
                phi.phi[kk] * (1.0 - w) + phi.phi[kk + 1] * w
            };
            let u0 = PolarField::from_fn(domain, params, 384, 48, |r, t| r.powf(beta0) * interp(t))
                .unwrap();
            let cut = PolarField::from_fn(domain, params, 384, 48, |r, t| {
                let chi = if r <= k { 1.0 } else { (2.0 * k - r) / k };
                chi * r.powf(beta0) * interp(t)
            })
            .unwrap();
            picone_polar(&cut, &u0).unwrap().integral
        };
        let i8 = integral_at(8.0);
        let i128 = integral_at(128.0);
        assert!(i8 > 0.0 && i128 > 0.0);
        assert!(i128 < i8 / 10.0, "decay too slow: {i8} -> {i128}");
    }

    #[test]
    fn kelvin_involution_and_power_mapping() {
        let params = pr(3.0, 2);
        // alpha = (d-p)/(p-1) = -1/2: r^{-alpha} = r^{1/2} maps to r^{-1/2}.
        let alpha = (params.df() - params.p) / (params.p - 1.0);
        let prof = RadialProfile::power(-alpha, 0.1, 10.0, 512);
        let k = kelvin_radial(&prof);
        for (i, &r) in k.r.iter().enumerate() {
            assert!(
                (k.u[i] - r.powf(alpha)).abs() < 1e-10 * r.powf(alpha),
                "r={r}"
            );
        }
        // involution
        let back = kelvin_radial(&k);
        for i in 0..prof.r.len() {
            assert!((back.r[i] - prof.r[i]).abs() < 1e-12 * prof.r[i]);
            assert_eq!(back.u[i], prof.u[i]);
            assert!((back.du[i] - prof.du[i]).abs() < 1e-12 * prof.du[i].abs().max(1e-300));
        }
        // constants stay constants
        let c = RadialProfile::from_fn(log_grid(0.5, 2.0, 64), |_| (3.0, 0.0));
        let kc = kelvin_radial(&c);
        assert!(kc.u.iter().all(|&v| v == 3.0));
    }

    #[test]
    fn weighted_residual_on_exact_and_transported_solutions() {
        let params = pr(3.0, 2);
        let spec = WeightedOperatorSpec::from_kelvin(&params);
        let alpha = (params.df() - params.p) / (params.p - 1.0);
        // exact power solution of the weighted equation
        let prof = RadialProfile::power(alpha, 0.1, 10.0, 1024);
        assert!(weighted_residual(&prof, &spec) < 1e-8);
        // constants are exact solutions
        let c = RadialProfile::from_fn(log_grid(0.1, 10.0, 256), |_| (2.0, 0.0));
        assert_eq!(weighted_residual(&c, &spec), 0.0);
        // transported p-harmonic solution from the initial value solver
        let mu = params.mu_exponent();
        let sol = crate::radial::ivp_solve(
            &params,
            &Potential::zero(),
            0.1,
            0.1f64.powf(mu),
            mu * 0.1f64.powf(mu - 1.0),
            10.0,
        )
        .unwrap();
        let k = kelvin_radial(&sol.profile());
        let res = weighted_residual(&k, &spec);
        assert!(res < 1e-6, "transported residual {res}");
        // conjugacy: the transported residual stays within 10x of the
        // solution's residual under the plain (unweighted) operator.
        let plain = WeightedOperatorSpec::new(0.0, &params);
        let res_plain = weighted_residual(&sol.profile(), &plain);
        assert!(
            res <= 10.0 * res_plain + 1e-15,
            "{res} vs plain {res_plain}"
        );
    }

    #[test]
    fn capacity_newtonian_and_oracle_agreement() {
        // p = 2, beta = 0, d = 3: classical condenser capacity.
        let params = pr(2.0, 3);
        let cap = weighted_capacity(&params, 0.0, 1.0, 4.0, 2048).unwrap();
        let newtonian = 4.0 * PI / (1.0 - 0.25);
        assert!(
            (cap.closed_form - newtonian).abs() < 1e-8 * newtonian,
            "{} vs {newtonian}",
            cap.closed_form
        );
        assert!(cap.relative_gap < 1e-4, "gap {}", cap.relative_gap);

        // p > d with the inversion weight beta = 2(p-d).
        let params = pr(3.0, 2);
        let beta = 2.0 * (params.p - params.df());
        let cap = weighted_capacity(&params, beta, 0.5, 8.0, 4096).unwrap();
        assert!(cap.relative_gap < 1e-4, "gap {}", cap.relative_gap);
        // alpha consistency: for beta = 2(p-d), alpha = (d-p)/(p-1).
        assert!((cap.alpha - (params.df() - params.p) / (params.p - 1.0)).abs() < 1e-14);

        // monotonicity: nonincreasing in R, nondecreasing in r.
        let params = pr(2.5, 3);
        let mut prev = f64::INFINITY;
        for big_r in [2.0, 4.0, 8.0, 16.0] {
            let c = weighted_capacity(&params, 1.0, 1.0, big_r, 512).unwrap();
            assert!(c.closed_form <= prev && c.numerical <= prev * 1.0001);
            prev = c.closed_form;
        }
        // nondecreasing in the inner radius
        let mut prev = 0.0;
        for r in [0.25, 0.5, 1.0, 1.5] {
            let c = weighted_capacity(&params, 1.0, r, 8.0, 512).unwrap();
            assert!(c.closed_form >= prev && c.numerical >= prev * 0.9999);
            prev = c.closed_form;
        }
        // algebraic limit R -> infinity for alpha < 0
        let spec = WeightedOperatorSpec::new(1.0, &params);
        let alpha = spec.alpha();
        assert!(alpha < 0.0);
        let c = weighted_capacity(&params, 1.0, 1.0, 1e12, 512).unwrap();
        let limit = unit_sphere_area(params.d)
            * alpha.abs().powf(params.p - 1.0)
            * 1.0f64.powf(-alpha * (params.p - 1.0));
        assert!((c.closed_form - limit).abs() < 1e-3 * limit);

        // the conformal case alpha = 0 is excluded
        let params = pr(2.0, 3);
        assert!(weighted_capacity(&params, -1.0, 1.0, 2.0, 64).is_err());
    }

    #[test]
    fn flux_is_cutoff_independent_for_powers() {
        let params = pr(3.0, 2);
        let spec = WeightedOperatorSpec::from_kelvin(&params);
        let alpha = (params.df() - params.p) / (params.p - 1.0); // -1/2
        let grid = log_grid(0.01, 1.0, 4096);
        let prof = RadialProfile::from_fn(grid.clone(), |r| {
            (r.powf(alpha), alpha * r.powf(alpha - 1.0))
        });
        // two hand-picked cutoffs
        let cuts = vec![
            smooth_step_cutoff(&grid, 0.02, 0.5),
            smooth_step_cutoff(&grid, 0.05, 0.9),
        ];
        let rep = flux_constant(&prof, &cuts, &spec).unwrap();
        let exact = flux_closed_form_power(&spec, alpha);
        assert!(exact > 0.0);
        for &v in &rep.values {
            assert!((v - exact).abs() < 1e-8 * exact.abs(), "{v} vs {exact}");
        }
        // five seeded random cutoffs: spread under 1e-7
        let cuts = randomized_cutoffs(&grid, 0.01, 1.0, 5, 42);
        let rep = flux_constant(&prof, &cuts, &spec).unwrap();
        assert!(
            rep.max_relative_spread < 1e-7,
            "spread {}",
            rep.max_relative_spread
        );
        // constant profile: zero flux for every cutoff
        let c = RadialProfile::from_fn(grid.clone(), |_| (1.0, 0.0));
        let rep = flux_constant(&c, &cuts, &spec).unwrap();
        assert!(rep.values.iter().all(|&v| v.abs() < 1e-14));
    }
}
