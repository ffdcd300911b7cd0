//! Radial reduction of `-lap_p(u) + V |u|^{p-2} u = 0`.
//!
//! With `u(x) = v(|x|)` and the flux variable
//! `w(r) = r^{d-1} phi_p(v'(r))`, `phi_p(s) = |s|^{p-2} s`, the equation is
//! the first-order system
//!
//! ```text
//! v' = phi_p^{-1}( w / r^{d-1} ),      w' = r^{d-1} V(r) phi_p(v),
//! ```
//!
//! which this module integrates in the log variable `s = ln r` (power
//! solutions are linear in log-log, so log-spaced grids keep everything
//! well scaled). Besides initial value solves it provides:
//!
//! - Dirichlet problems on annuli by monotone shooting with a damped-Newton
//!   finite-difference fallback (and the FD path on its own, whose error is
//!   tied to the grid);
//! - minimal-growth solutions by exhaustion over geometrically growing
//!   annuli with near-zero far-side data;
//! - asymptotic classification near 0 or infinity against the span of
//!   `{1, r^{(p-d)/(p-1)}}` (plus `log r` when p = d);
//! - quotient profiles of two radial solutions and their generalized limit;
//! - the scaling `w_sigma(x) = v(sigma x)/sigma^alpha` and a limit check for
//!   nonnegative potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Params;
use crate::num::{linfit, log_grid, nodes_per_decade, phi_p};
use crate::potential::Potential;
use crate::Zeta;

/// Regularization floor for the inverse flux map (non-Lipschitz for p > 2).
pub const FLUX_DELTA: f64 = 1e-14;
/// Default grid resolution (nodes per decade of radius).
pub const NODES_PER_DECADE: usize = 256;
/// Relative tolerance of the adaptive initial-value integrator.
pub const IVP_RTOL: f64 = 1e-10;
/// Exhaustion: stage radius ratio and the stop threshold on the fitted
/// exponent movement between stages.
pub const STAGE_RATIO: f64 = 4.0;
pub const STAGE_FIT_STOP: f64 = 1e-4;
/// Near-zero boundary data factor for the exhaustion far side.
pub const EXHAUSTION_EPS: f64 = 1e-8;
/// Relative residual threshold above which an asymptotic fit is reported
/// as undetermined.
pub const FIT_RESIDUAL_TOL: f64 = 1e-3;

/// Inverse flux map `phi_p^{-1}(t) = sign(t) |t|^{(2-p)/(p-1)} |t|`,
/// regularized with `FLUX_DELTA` so the slope stays finite at degenerate
/// points (`v' = 0`, p > 2). The perturbation sits below solver tolerance.
#[inline]
pub fn flux_to_slope(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    t.signum() * (t.abs() + FLUX_DELTA).powf((2.0 - p) / (p - 1.0)) * t.abs()
}

/// A positive radial solution on a log-spaced grid with its flux variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSolution {
    /// Strictly increasing radii.
    pub grid: Vec<f64>,
    /// Solution values, positive on the grid.
    pub v: Vec<f64>,
    /// Flux `w(r) = r^{d-1} phi_p(v')`.
    pub w: Vec<f64>,
    pub params: Params,
    /// The potential the solution was computed against.
    pub potential: Potential,
    /// Radius where positivity failed and integration stopped, if it did.
    pub truncated_at: Option<f64>,
}

impl RadialSolution {
    /// Pointwise slope `v'(r)` recovered from the flux variable.
    pub fn slope(&self, i: usize) -> f64 {
        let r = self.grid[i];
        flux_to_slope(self.w[i] / r.powf(self.params.df() - 1.0), self.params.p)
    }

    /// View as a sampled profile with derivatives.
    pub fn profile(&self) -> RadialProfile {
        let du = (0..self.grid.len()).map(|i| self.slope(i)).collect();
        RadialProfile {
            r: self.grid.clone(),
            u: self.v.clone(),
            du,
        }
    }

    /// Value at radius `r` by power-law (log-log linear) interpolation.
    pub fn value_at(&self, r: f64) -> Option<f64> {
        let n = self.grid.len();
        if r < self.grid[0] * (1.0 - 1e-12) || r > self.grid[n - 1] * (1.0 + 1e-12) {
            return None;
        }
        let idx = match self.grid.binary_search_by(|a| a.partial_cmp(&r).unwrap()) {
            Ok(i) => return Some(self.v[i]),
            Err(i) => i.clamp(1, n - 1),
        };
        let (r0, r1) = (self.grid[idx - 1], self.grid[idx]);
        let (v0, v1) = (self.v[idx - 1], self.v[idx]);
        let t = (r / r0).ln() / (r1 / r0).ln();
        if v0 > 0.0 && v1 > 0.0 {
            Some((v0.ln() * (1.0 - t) + v1.ln() * t).exp())
        } else {
            Some(v0 * (1.0 - t) + v1 * t)
        }
    }
}

/// A sampled radial function with derivative values (not necessarily a
/// solution of anything).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl RadialProfile {
    pub fn from_fn(r: Vec<f64>, mut f: impl FnMut(f64) -> (f64, f64)) -> RadialProfile {
        let mut u = Vec::with_capacity(r.len());
        let mut du = Vec::with_capacity(r.len());
        for &x in &r {
            let (a, b) = f(x);
            u.push(a);
            du.push(b);
        }
        RadialProfile { r, u, du }
    }

    /// Pure power `r^alpha` on a log grid.
    pub fn power(alpha: f64, r_lo: f64, r_hi: f64, n: usize) -> RadialProfile {
        RadialProfile::from_fn(log_grid(r_lo, r_hi, n), |x| {
            (x.powf(alpha), alpha * x.powf(alpha - 1.0))
        })
    }
}

// ---------------------------------------------------------------------------
// initial value solver
// ---------------------------------------------------------------------------

struct RadialSystem<'a> {
    params: &'a Params,
    potential: &'a Potential,
}

impl RadialSystem<'_> {
    /// Right-hand side in the log variable: y = (v, w),
    /// dv/ds = r phi_p^{-1}(w r^{1-d}), dw/ds = r^d V(r) phi_p(v).
    #[inline]
    fn rhs(&self, s: f64, y: [f64; 2]) -> [f64; 2] {
        let d = self.params.df();
        let r = s.exp();
        let slope = flux_to_slope(y[1] / r.powf(d - 1.0), self.params.p);
        let vr = self.potential.eval_radial(self.params, r);
        [r * slope, r.powf(d) * vr * phi_p(y[0], self.params.p)]
    }

    fn rk4(&self, s: f64, y: [f64; 2], h: f64) -> [f64; 2] {
        let k1 = self.rhs(s, y);
        let k2 = self.rhs(
            s + 0.5 * h,
            [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]],
        );
        let k3 = self.rhs(
            s + 0.5 * h,
            [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]],
        );
        let k4 = self.rhs(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }

    /// One adaptive step by RK4 with step doubling; returns (y_next, error).
    fn rk4_double(&self, s: f64, y: [f64; 2], h: f64) -> ([f64; 2], f64) {
        let big = self.rk4(s, y, h);
        let half = self.rk4(s, y, 0.5 * h);
        let fine = self.rk4(s + 0.5 * h, half, 0.5 * h);
        let mut err: f64 = 0.0;
        let mut out = [0.0; 2];
        for i in 0..2 {
            // local extrapolation (5th order estimate)
            out[i] = fine[i] + (fine[i] - big[i]) / 15.0;
            let scale = y[i].abs().max(fine[i].abs()).max(1e-300);
            err = err.max((fine[i] - big[i]).abs() / 15.0 / scale);
        }
        (out, err)
    }
}

/// Integrate the radial system from `r0` toward `r_end` (either direction)
/// starting at `v(r0) = v0 > 0` with slope `v'(r0) = slope0`.
///
/// Adaptive step-doubled RK4 at relative tolerance `IVP_RTOL`, sampled onto
/// a log grid at `NODES_PER_DECADE`. Integration halts with a partial
/// solution when `v` reaches 0 (the solution leaves the positive cone).
pub fn ivp_solve(
    params: &Params,
    potential: &Potential,
    r0: f64,
    v0: f64,
    slope0: f64,
    r_end: f64,
) -> Result<RadialSolution> {
    if !(r0 > 0.0 && r_end > 0.0 && r0 != r_end) {
        return Err(Error::domain("ivp_solve needs positive distinct r0, r_end"));
    }
    if !(v0 > 0.0) {
        return Err(Error::domain("ivp_solve needs v0 > 0"));
    }
    let sys = RadialSystem { params, potential };
    let n = nodes_per_decade(r0.min(r_end), r0.max(r_end), NODES_PER_DECADE, 32);
    let grid = log_grid(r0.min(r_end), r0.max(r_end), n);
    let inward = r_end < r0;
    // Node order in integration direction.
    let order: Vec<usize> = if inward {
        (0..=n).rev().collect()
    } else {
        (0..=n).collect()
    };

    let d = params.df();
    let w0 = r0.powf(d - 1.0) * phi_p(slope0, params.p);
    let mut y = [v0, w0];
    let mut s = r0.ln();
    let mut out_v = vec![f64::NAN; n + 1];
    let mut out_w = vec![f64::NAN; n + 1];
    out_v[order[0]] = v0;
    out_w[order[0]] = w0;

    let span = (r_end / r0).ln(); // signed
    let mut h = span.signum() * (span.abs() / (4.0 * n as f64)).max(1e-8);
    let mut truncated_at = None;
    let mut reached = 1usize; // nodes recorded

    'nodes: for k in 1..=n {
        let target = grid[order[k]].ln();
        loop {
            let remaining = target - s;
            if remaining.abs() < 1e-14 {
                break;
            }
            if h.abs() > remaining.abs() {
                h = remaining;
            }
            let (y_new, err) = sys.rk4_double(s, y, h);
            if err <= IVP_RTOL {
                if y_new[0] <= 0.0 {
                    truncated_at = Some((s + h).exp());
                    break 'nodes;
                }
                s += h;
                y = y_new;
                let grow = (IVP_RTOL / err.max(1e-300)).powf(0.2).min(4.0);
                h *= 0.9 * grow;
            } else {
                h *= 0.9 * (IVP_RTOL / err).powf(0.25).max(0.1);
                if h.abs() < 1e-15 * s.abs().max(1.0) {
                    return Err(Error::numeric(
                        "step size underflow in radial integration",
                        s.exp(),
                    ));
                }
            }
        }
        out_v[order[k]] = y[0];
        out_w[order[k]] = y[1];
        reached += 1;
    }

    // Keep the contiguous portion actually integrated.
    let (grid, v, w) = if reached == n + 1 {
        (grid, out_v, out_w)
    } else if inward {
        let from = n + 1 - reached;
        (
            grid[from..].to_vec(),
            out_v[from..].to_vec(),
            out_w[from..].to_vec(),
        )
    } else {
        (
            grid[..reached].to_vec(),
            out_v[..reached].to_vec(),
            out_w[..reached].to_vec(),
        )
    };
    Ok(RadialSolution {
        grid,
        v,
        w,
        params: *params,
        potential: potential.clone(),
        truncated_at,
    })
}

// ---------------------------------------------------------------------------
// Dirichlet problems on annuli
// ---------------------------------------------------------------------------

/// Fixed-step RK4 pass over an explicit log grid; returns node values and
/// the index after which positivity failed (if it did).
fn integrate_on_grid(
    sys: &RadialSystem,
    grid: &[f64],
    v0: f64,
    w0: f64,
) -> (Vec<f64>, Vec<f64>, Option<usize>) {
    let n = grid.len();
    let mut v = vec![f64::NAN; n];
    let mut w = vec![f64::NAN; n];
    v[0] = v0;
    w[0] = w0;
    let mut y = [v0, w0];
    for i in 1..n {
        let s0 = grid[i - 1].ln();
        let h = (grid[i] / grid[i - 1]).ln();
        y = sys.rk4(s0, y, h);
        if !y[0].is_finite() || y[0] <= 0.0 {
            return (v, w, Some(i));
        }
        v[i] = y[0];
        w[i] = y[1];
    }
    (v, w, None)
}

/// Dirichlet solve by monotone shooting in the initial slope (bisection),
/// falling back to the finite-difference Newton path when shooting cannot
/// reach the requested accuracy (wide annuli amplify the growing mode).
///
/// `n` is the number of log-grid intervals; the reported solution lives on
/// that grid and its accuracy is tied to it.
pub fn bvp_dirichlet(
    params: &Params,
    potential: &Potential,
    r_lo: f64,
    r_hi: f64,
    a: f64,
    b: f64,
    n: usize,
) -> Result<RadialSolution> {
    check_bvp_inputs(r_lo, r_hi, a, b)?;
    let grid = log_grid(r_lo, r_hi, n.max(8));
    let sys = RadialSystem { params, potential };
    let d = params.df();

    // Endpoint map of the shooting problem. Positivity loss counts as -inf
    // (shot too low) and numeric overflow as +inf (shot too high), keeping
    // the map monotone for bracketing.
    let shoot = |slope: f64| -> f64 {
        let w0 = r_lo.powf(d - 1.0) * phi_p(slope, params.p);
        let (v, _, died) = integrate_on_grid(&sys, &grid, a, w0);
        match died {
            Some(i) => {
                let last = v[i - 1];
                if last.is_finite() && last <= b {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }
            None => *v.last().unwrap(),
        }
    };

    // Power-law connection as the slope seed.
    let g0 = (b / a).ln() / (r_hi / r_lo).ln();
    let seed = a * g0 / r_lo;
    let step0 = seed.abs().max(a / r_lo) * 0.5;
    let mut lo = seed - step0;
    let mut hi = seed + step0;
    let mut k: i32 = 0;
    let bracket_ok = loop {
        let f_lo = shoot(lo);
        let f_hi = shoot(hi);
        if f_lo <= b && b <= f_hi {
            break true;
        }
        if f_lo > b {
            lo -= step0 * 2f64.powi(k.min(200));
        }
        if f_hi < b {
            hi += step0 * 2f64.powi(k.min(200));
        }
        k += 1;
        if k > 120 {
            break false;
        }
    };
    if !bracket_ok {
        return Err(Error::Solvability(format!(
            "no positive solution bracketed on [{r_lo}, {r_hi}] with data ({a}, {b}); \
             the annulus may not admit one"
        )));
    }

    let mut flo = shoot(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = shoot(mid);
        if fm < b {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let _ = flo;
    let slope = 0.5 * (lo + hi);
    let w0 = r_lo.powf(d - 1.0) * phi_p(slope, params.p);
    let (v, w, died) = integrate_on_grid(&sys, &grid, a, w0);
    let end_err = if died.is_some() {
        f64::INFINITY
    } else {
        (v.last().unwrap() - b).abs() / b.max(1e-300)
    };
    // Shooting loses precision across wide annuli; the global FD path takes
    // over whenever the matched endpoint is not trustworthy.
    if end_err > 1e-7 {
        return bvp_dirichlet_fd(params, potential, r_lo, r_hi, a, b, n);
    }
    let mut v = v;
    *v.last_mut().unwrap() = b;
    Ok(RadialSolution {
        grid,
        v,
        w,
        params: *params,
        potential: potential.clone(),
        truncated_at: None,
    })
}

fn check_bvp_inputs(r_lo: f64, r_hi: f64, a: f64, b: f64) -> Result<()> {
    if !(0.0 < r_lo && r_lo < r_hi) {
        return Err(Error::domain(format!(
            "annulus needs 0 < r_lo < r_hi, got ({r_lo}, {r_hi})"
        )));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "boundary data must be positive, got ({a}, {b})"
        )));
    }
    Ok(())
}

/// Dirichlet solve by damped Newton on the flux-form finite-difference
/// discretization (second order in the grid). Unknowns are interior nodal
/// values; the Jacobian is tridiagonal.
pub fn bvp_dirichlet_fd(
    params: &Params,
    potential: &Potential,
    r_lo: f64,
    r_hi: f64,
    a: f64,
    b: f64,
    n: usize,
) -> Result<RadialSolution> {
    bvp_dirichlet_fd_seeded(params, potential, r_lo, r_hi, a, b, n, None)
}

/// FD Newton with an explicit initial iterate (interior values included;
/// boundary entries are overwritten by the data). `None` seeds with the
/// power-law interpolation of the boundary data.
#[allow(clippy::too_many_arguments)]
pub fn bvp_dirichlet_fd_seeded(
    params: &Params,
    potential: &Potential,
    r_lo: f64,
    r_hi: f64,
    a: f64,
    b: f64,
    n: usize,
    seed: Option<Vec<f64>>,
) -> Result<RadialSolution> {
    check_bvp_inputs(r_lo, r_hi, a, b)?;
    let n = n.max(8);
    let grid = log_grid(r_lo, r_hi, n);
    let p = params.p;
    let d = params.df();
    let ds = (r_hi / r_lo).ln() / n as f64;
    let s: Vec<f64> = grid.iter().map(|r| r.ln()).collect();
    // Face weights e^{(d-p) s_{i+1/2}} and nodal source factors e^{d s_i} V_i.
    let face_w: Vec<f64> = (0..n)
        .map(|i| ((d - p) * 0.5 * (s[i] + s[i + 1])).exp())
        .collect();
    let source: Vec<f64> = (0..=n)
        .map(|i| (d * s[i]).exp() * potential.eval_radial(params, grid[i]))
        .collect();

    // Geometric (power-law) interpolation of the boundary data as the seed.
    let mut v: Vec<f64> = match seed {
        Some(seed) if seed.len() == n + 1 && seed.iter().all(|&x| x > 0.0) => seed,
        _ => (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                a * (b / a).powf(t)
            })
            .collect(),
    };
    v[0] = a;
    v[n] = b;

    // Regularized odd power (t^2 + e^2)^{(p-2)/2} t and its derivative;
    // for p > 2 the plain map has a degenerate derivative at t = 0, which
    // stalls Newton whenever an iterate has flat spots. An epsilon
    // continuation 1e-2 -> 1e-14 (warm started) removes the degeneracy and
    // perturbs the final equation well below discretization error.
    let geps = |t: f64, e: f64| (t * t + e * e).powf((p - 2.0) / 2.0) * t;
    let geps_d =
        |t: f64, e: f64| (t * t + e * e).powf((p - 4.0) / 2.0) * ((p - 1.0) * t * t + e * e);

    let residual = |v: &[f64], e: f64, out: &mut [f64]| -> f64 {
        // Returns the 2-norm of the per-node residual scales alongside
        // filling the residuals themselves.
        let mut s2 = 0.0;
        for i in 1..n {
            let zr = face_w[i] * geps((v[i + 1] - v[i]) / ds, e);
            let zl = face_w[i - 1] * geps((v[i] - v[i - 1]) / ds, e);
            let zero_order = source[i] * geps(v[i], e);
            out[i - 1] = (zr - zl) / ds - zero_order;
            let sc = (zr.abs() + zl.abs()) / ds + zero_order.abs();
            s2 += sc * sc;
        }
        s2.sqrt().max(1e-300)
    };

    let mut res = vec![0.0; n - 1];
    let mut res_new = vec![0.0; n - 1];
    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (mut lower, mut diag, mut upper) = (vec![0.0; n - 1], vec![0.0; n - 1], vec![0.0; n - 1]);
    let mut delta = vec![0.0; n - 1];

    let mut eps_list = vec![];
    if p != 2.0 {
        let mut e = 1e-2;
        while e > 2e-14 {
            eps_list.push(e);
            e *= 1e-2;
        }
    }
    eps_list.push(1e-14);

    let mut rnorm = f64::INFINITY;
    let mut snorm = 1.0;
    for &eps in &eps_list {
        snorm = residual(&v, eps, &mut res);
        rnorm = norm(&res);
        for _iter in 0..200 {
            if rnorm <= 3e-14 * snorm {
                break;
            }
            for i in 1..n {
                let sl_r = (v[i + 1] - v[i]) / ds;
                let sl_l = (v[i] - v[i - 1]) / ds;
                let dzr = face_w[i] * geps_d(sl_r, eps) / ds;
                let dzl = face_w[i - 1] * geps_d(sl_l, eps) / ds;
                diag[i - 1] = (-dzr - dzl) / ds - source[i] * geps_d(v[i], eps);
                upper[i - 1] = dzr / ds;
                lower[i - 1] = dzl / ds;
            }
            solve_tridiag(&lower, &diag, &upper, &res, &mut delta);
            // delta solves J delta = res, so the Newton step is -delta.
            let mut alpha = 1.0f64;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = (0..=n)
                    .map(|i| {
                        if i == 0 || i == n {
                            v[i]
                        } else {
                            v[i] - alpha * delta[i - 1]
                        }
                    })
                    .collect();
                if trial[1..n].iter().any(|&x| x <= 0.0) {
                    alpha *= 0.5;
                    continue;
                }
                let sn = residual(&trial, eps, &mut res_new);
                let rn = norm(&res_new);
                if rn < rnorm * (1.0 - 1e-4 * alpha) || rn < 3e-14 * sn {
                    v = trial;
                    std::mem::swap(&mut res, &mut res_new);
                    rnorm = rn;
                    snorm = sn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break; // stagnation at this eps stage; the next one restarts
            }
        }
    }
    // Relative convergence, with an absolute floor anchored to the boundary
    // data: in regions where the radial weight decays many orders the flux
    // scale collapses and a purely relative test becomes unattainable.
    let face_w_max = face_w.iter().fold(0.0f64, |m, &x| m.max(x));
    let ref_scale = a.max(b) * face_w_max / ds;
    if rnorm > 1e-9 * snorm && rnorm > 1e-12 * ref_scale {
        return Err(Error::numeric(
            format!("FD Newton did not converge: residual {rnorm:.3e} (scale {snorm:.3e})"),
            r_lo,
        ));
    }

    // Nodal flux reconstructed from face fluxes (second-order average).
    let z: Vec<f64> = (0..n)
        .map(|i| face_w[i] * phi_p((v[i + 1] - v[i]) / ds, p))
        .collect();
    let mut w = vec![0.0; n + 1];
    w[0] = z[0] - 0.5 * ds * source[0] * phi_p(v[0], p) * 0.0;
    for i in 1..n {
        w[i] = 0.5 * (z[i - 1] + z[i]);
    }
    w[0] = z[0] - (w[1] - z[0]);
    w[n] = z[n - 1] + (z[n - 1] - w[n - 1]);
    Ok(RadialSolution {
        grid,
        v,
        w,
        params: *params,
        potential: potential.clone(),
        truncated_at: None,
    })
}

/// Thomas algorithm for a tridiagonal solve `J x = rhs`.
fn solve_tridiag(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], x: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut dv = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    dv[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        dv[i] = (rhs[i] - lower[i] * dv[i - 1]) / m;
    }
    x[n - 1] = dv[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dv[i] - c[i] * x[i + 1];
    }
}

// ---------------------------------------------------------------------------
// minimal growth by exhaustion
// ---------------------------------------------------------------------------

/// Result of the exhaustion construction: the final stage profile
/// (normalized to 1 at the anchor) and the fitted power exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustionResult {
    pub solution: RadialSolution,
    pub exponent: f64,
    /// Fitted exponent after each stage (diagnostics / stop history).
    pub stage_exponents: Vec<f64>,
}

/// Construct the positive solution of minimal growth away from `zeta` by
/// solving Dirichlet problems on geometrically growing annuli with
/// near-zero data on the far side and unit data at `r_anchor`.
///
/// For `zeta = 0` the annuli are `[r_anchor, 4^k r_anchor]` with data
/// `(1, eps_k)`; the far-side zero is approximated by
/// `eps_k = 1e-8 * (power extrapolation of the previous stage)`, to which
/// the limit is insensitive by comparison. The fitted exponent is the
/// log-log slope over the fixed window one decade wide next to the anchor
/// (on the side toward the far boundary); stages stop when it moves less
/// than `STAGE_FIT_STOP`.
pub fn minimal_growth_exhaustion(
    params: &Params,
    potential: &Potential,
    zeta: Zeta,
    r_anchor: f64,
    n_stages: usize,
) -> Result<ExhaustionResult> {
    if !(r_anchor > 0.0) {
        return Err(Error::domain("exhaustion needs r_anchor > 0"));
    }
    if n_stages < 2 {
        return Err(Error::domain("exhaustion needs at least 2 stages"));
    }
    let mut stage_exponents: Vec<f64> = Vec::new();
    let mut best: Option<RadialSolution> = None;
    for k in 1..=n_stages {
        let ratio = STAGE_RATIO.powi(k as i32);
        let (r_lo, r_hi, a, b) = match zeta {
            Zeta::Origin => {
                let far = r_anchor * ratio;
                let fit = stage_exponents.last().copied().unwrap_or(0.0);
                let eps = EXHAUSTION_EPS * ratio.powf(fit).min(1.0).max(1e-250);
                (r_anchor, far, 1.0, eps)
            }
            Zeta::Infinity => {
                let far = r_anchor / ratio;
                let fit = stage_exponents.last().copied().unwrap_or(0.0);
                let eps = EXHAUSTION_EPS * (1.0 / ratio).powf(fit).min(1.0).max(1e-250);
                (far, r_anchor, eps, 1.0)
            }
        };
        let n = nodes_per_decade(r_lo, r_hi, NODES_PER_DECADE, 64);
        // Continuation in the far-side datum: start from the layer-free
        // value on the fitted power (where the power profile itself is an
        // excellent Newton seed) and walk the datum down to the near-zero
        // target, warm-starting each sub-solve. The final boundary layer is
        // steep, and Newton from a cold start does not reach it reliably
        // for p far from 2.
        let fit_prev = stage_exponents.last().copied().unwrap_or(0.0);
        let grid = log_grid(r_lo, r_hi, n);
        let power_seed: Vec<f64> = grid
            .iter()
            .map(|&r| (r / r_anchor).powf(fit_prev).max(1e-280))
            .collect();
        let (far_natural, far_target) = match zeta {
            Zeta::Origin => ((r_hi / r_anchor).powf(fit_prev), b),
            Zeta::Infinity => ((r_lo / r_anchor).powf(fit_prev), a),
        };
        let solve_with_far = |far: f64, seed: Vec<f64>| -> Result<RadialSolution> {
            match zeta {
                Zeta::Origin => {
                    bvp_dirichlet_fd_seeded(params, potential, r_lo, r_hi, a, far, n, Some(seed))
                }
                Zeta::Infinity => {
                    bvp_dirichlet_fd_seeded(params, potential, r_lo, r_hi, far, b, n, Some(seed))
                }
            }
        };
        let stage_err = |e: Error, hist: &[f64]| {
            Error::numeric(
                format!("exhaustion stage {k} failed ({e}); history {hist:?}"),
                k as f64,
            )
        };
        let mut cur_log = far_natural.max(far_target).ln();
        let target_log = far_target.ln();
        let mut step = -2.0 * std::f64::consts::LN_10;
        let mut sol = solve_with_far(cur_log.exp(), power_seed)
            .map_err(|e| stage_err(e, &stage_exponents))?;
        let mut guard = 0;
        while cur_log > target_log + 1e-12 {
            let next_log = (cur_log + step).max(target_log);
            match solve_with_far(next_log.exp(), sol.v.clone()) {
                Ok(next) => {
                    sol = next;
                    cur_log = next_log;
                    step = (step * 1.5).max(-4.0 * std::f64::consts::LN_10);
                }
                Err(e) => {
                    step *= 0.5;
                    if step.abs() < 1e-3 {
                        return Err(stage_err(e, &stage_exponents));
                    }
                }
            }
            guard += 1;
            if guard > 400 {
                return Err(stage_err(
                    Error::numeric("datum continuation did not reach the target", cur_log.exp()),
                    &stage_exponents,
                ));
            }
        }
        // Fit window: one decade adjacent to the anchor, toward the far side.
        let (w_lo, w_hi) = match zeta {
            Zeta::Origin => (r_anchor, r_anchor * 10.0),
            Zeta::Infinity => (r_anchor / 10.0, r_anchor),
        };
        let fit = fit_loglog_slope(&sol, w_lo, w_hi)?;
        let stop = stage_exponents
            .last()
            .map(|prev| (prev - fit).abs() < STAGE_FIT_STOP)
            .unwrap_or(false);
        stage_exponents.push(fit);
        best = Some(sol);
        if stop {
            break;
        }
    }
    let exponent = *stage_exponents.last().unwrap();
    let converged = stage_exponents
        .windows(2)
        .last()
        .map(|w| (w[1] - w[0]).abs() < STAGE_FIT_STOP)
        .unwrap_or(false);
    if !converged {
        return Err(Error::numeric(
            format!(
                "exhaustion did not settle within {n_stages} stages; history {stage_exponents:?}"
            ),
            n_stages as f64,
        ));
    }
    Ok(ExhaustionResult {
        solution: best.unwrap(),
        exponent,
        stage_exponents,
    })
}

/// Log-log slope of a solution over `[w_lo, w_hi]` (least squares).
fn fit_loglog_slope(sol: &RadialSolution, w_lo: f64, w_hi: f64) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &r) in sol.grid.iter().enumerate() {
        if r >= w_lo * (1.0 - 1e-12) && r <= w_hi * (1.0 + 1e-12) && sol.v[i] > 0.0 {
            xs.push(r.ln());
            ys.push(sol.v[i].ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::precondition(
            "fit window contains too few grid points",
        ));
    }
    Ok(linfit(&xs, &ys).1)
}

// ---------------------------------------------------------------------------
// asymptotic classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoticClass {
    /// The solution approaches a finite positive limit.
    BoundedLimit,
    /// The solution behaves like `C r^kappa`, `kappa = (p-d)/(p-1)`.
    Power,
    /// The solution behaves like `C log r` (only for p = d).
    Log,
    /// The fit residual exceeded the threshold.
    Undetermined,
}

/// Classification of a radial solution near 0 or infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub zeta: Zeta,
    pub class: AsymptoticClass,
    /// Measured exponent (power class only).
    pub exponent: Option<f64>,
    /// Leading coefficient of the dominant term.
    pub constant: f64,
    /// Relative max-norm residual of the two-term fit on the window.
    pub residual: f64,
}

/// Least-squares classification of the tail of `sol` toward `zeta` against
/// `span{1, r^{(p-d)/(p-1)}}` (`span{1, log r}` when p = d) on the last 1.5
/// decades. The dominant term at the `zeta` end decides the class; for the
/// power class the exponent is re-measured by a log-log slope fit.
pub fn classify_asymptotics(
    sol: &RadialSolution,
    zeta: Zeta,
    params: &Params,
) -> Result<AsymptoticsReport> {
    let n = sol.grid.len();
    let span = (sol.grid[n - 1] / sol.grid[0]).log10();
    if span < 2.0 {
        return Err(Error::precondition(format!(
            "classification needs at least two decades toward zeta, grid spans {span:.2}"
        )));
    }
    let window = 1.5f64;
    let (w_lo, w_hi) = match zeta {
        Zeta::Origin => (sol.grid[0], sol.grid[0] * 10f64.powf(window)),
        Zeta::Infinity => (sol.grid[n - 1] / 10f64.powf(window), sol.grid[n - 1]),
    };
    let mut rs = Vec::new();
    let mut vs = Vec::new();
    for (i, &r) in sol.grid.iter().enumerate() {
        if r >= w_lo * (1.0 - 1e-12) && r <= w_hi * (1.0 + 1e-12) {
            rs.push(r);
            vs.push(sol.v[i]);
        }
    }
    let conformal = params.is_conformal();
    let kappa = params.mu_exponent();
    let basis: Vec<f64> = rs
        .iter()
        .map(|&r| if conformal { r.ln() } else { r.powf(kappa) })
        .collect();
    let ones = vec![1.0; rs.len()];
    let (c_const, c_var) = crate::num::fit2(&ones, &basis, &vs);
    // Residual of the two-term fit, relative to the solution scale.
    let vmax = vs.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1e-300);
    let residual = rs
        .iter()
        .zip(&vs)
        .zip(&basis)
        .map(|((_, &v), &b)| (v - (c_const + c_var * b)).abs())
        .fold(0.0f64, f64::max)
        / vmax;

    // Dominance at the zeta end of the window.
    let r_end = match zeta {
        Zeta::Origin => rs[0],
        Zeta::Infinity => rs[rs.len() - 1],
    };
    let t_const = c_const.abs();
    let t_var = (c_var
        * if conformal {
            r_end.ln()
        } else {
            r_end.powf(kappa)
        })
    .abs();

    if residual > FIT_RESIDUAL_TOL {
        return Ok(AsymptoticsReport {
            zeta,
            class: AsymptoticClass::Undetermined,
            exponent: None,
            constant: c_const,
            residual,
        });
    }
    if t_var > 10.0 * t_const {
        if conformal {
            return Ok(AsymptoticsReport {
                zeta,
                class: AsymptoticClass::Log,
                exponent: None,
                constant: c_var,
                residual,
            });
        }
        // Re-measure the exponent directly in log-log.
        let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = vs.iter().map(|v| v.abs().max(1e-300).ln()).collect();
        let (_, slope) = linfit(&xs, &ys);
        return Ok(AsymptoticsReport {
            zeta,
            class: AsymptoticClass::Power,
            exponent: Some(slope),
            constant: c_var,
            residual,
        });
    }
    Ok(AsymptoticsReport {
        zeta,
        class: AsymptoticClass::BoundedLimit,
        exponent: None,
        constant: c_const,
        residual,
    })
}

// ---------------------------------------------------------------------------
// quotients
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitClass {
    Finite,
    Zero,
    Infinite,
    Undetermined,
}

/// Sphere-wise quotient `u/v` of two radial solutions (inf = sup in the
/// radial case) and its generalized limit toward `zeta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientProfile {
    pub radii: Vec<f64>,
    /// Sphere-wise infimum of u/v (equals the supremum radially).
    pub m: Vec<f64>,
    /// Sphere-wise supremum of u/v.
    pub big_m: Vec<f64>,
    pub limit_class: LimitClass,
    /// Limit value when the class is finite.
    pub limit_value: Option<f64>,
    /// The quotient tail is monotone along dyadic radii toward zeta.
    pub eventually_monotone: bool,
}

/// Slope/oscillation thresholds for calling a quotient limit.
const QUOTIENT_SLOPE_TOL: f64 = 1e-3;
const QUOTIENT_OSC_TOL: f64 = 1e-2;

/// Quotient of two positive radial solutions, classified toward `zeta`.
/// `v` is resampled onto the grid of `u` (power interpolation); the
/// quotient is analyzed on the overlap of the two domains.
pub fn quotient_profile(
    u: &RadialSolution,
    v: &RadialSolution,
    zeta: Zeta,
) -> Result<QuotientProfile> {
    let mut radii = Vec::new();
    let mut q = Vec::new();
    for (i, &r) in u.grid.iter().enumerate() {
        if let Some(vv) = v.value_at(r) {
            if vv > 0.0 && u.v[i] > 0.0 {
                radii.push(r);
                q.push(u.v[i] / vv);
            }
        }
    }
    if radii.len() < 16 {
        return Err(Error::precondition(
            "quotient needs at least 16 shared radii with both solutions positive",
        ));
    }

    // Orient toward zeta: t grows as r -> zeta.
    let oriented = |r: f64| match zeta {
        Zeta::Origin => -r.ln(),
        Zeta::Infinity => r.ln(),
    };
    // Last decade toward zeta.
    let t_end = match zeta {
        Zeta::Origin => oriented(radii[0]),
        Zeta::Infinity => oriented(radii[radii.len() - 1]),
    };
    let t_cut = t_end - std::f64::consts::LN_10;
    let mut ts = Vec::new();
    let mut lnq = Vec::new();
    let mut tail_vals = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let t = oriented(r);
        if t >= t_cut {
            ts.push(t);
            lnq.push(q[i].ln());
            tail_vals.push(q[i]);
        }
    }
    let (_, slope) = linfit(&ts, &lnq);
    let q_hi = tail_vals.iter().fold(f64::MIN, |m, &x| m.max(x));
    let q_lo = tail_vals.iter().fold(f64::MAX, |m, &x| m.min(x));
    let mean = tail_vals.iter().sum::<f64>() / tail_vals.len() as f64;
    let osc = (q_hi - q_lo) / mean.abs().max(1e-300);

    let limit_class = if slope > QUOTIENT_SLOPE_TOL {
        LimitClass::Infinite
    } else if slope < -QUOTIENT_SLOPE_TOL {
        LimitClass::Zero
    } else if osc < QUOTIENT_OSC_TOL {
        LimitClass::Finite
    } else {
        LimitClass::Undetermined
    };

    // Eventual monotonicity along dyadic radii toward zeta.
    let dyadic = dyadic_samples(&radii, &q, zeta, 8);
    let eventually_monotone = dyadic.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs())
        || dyadic.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs());

    Ok(QuotientProfile {
        radii,
        m: q.clone(),
        big_m: q,
        limit_class,
        limit_value: (limit_class == LimitClass::Finite).then_some(mean),
        eventually_monotone,
    })
}

/// Values of `q` sampled at (up to) `count` dyadic radii marching toward
/// `zeta`, earliest first.
fn dyadic_samples(radii: &[f64], q: &[f64], zeta: Zeta, count: usize) -> Vec<f64> {
    let n = radii.len();
    let mut out = Vec::new();
    let (start, end) = match zeta {
        Zeta::Origin => (radii[n - 1], radii[0]),
        Zeta::Infinity => (radii[0], radii[n - 1]),
    };
    let decades = (start / end).abs().max(end / start).log2().abs();
    let steps = (decades.floor() as usize).min(count.max(2) * 4);
    for k in 0..=steps {
        let target = match zeta {
            Zeta::Origin => start / 2f64.powi(k as i32),
            Zeta::Infinity => start * 2f64.powi(k as i32),
        };
        // nearest grid index (radii increasing)
        let idx = match radii.binary_search_by(|a| a.partial_cmp(&target).unwrap()) {
            Ok(i) => i,
            Err(i) => i.min(n - 1),
        };
        out.push(q[idx]);
    }
    let keep = out.len().min(count);
    out[out.len() - keep..].to_vec()
}

// ---------------------------------------------------------------------------
// scaling and limits
// ---------------------------------------------------------------------------

/// Scaling `w_sigma(r) = v(sigma r) / sigma^alpha`: the solution transported
/// to the grid `grid/sigma` with values and flux rescaled exactly.
pub fn veron_rescale(u: &RadialSolution, sigma: f64, alpha: f64) -> Result<RadialSolution> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!(
            "rescale needs sigma > 0, got {sigma}"
        )));
    }
    let p = u.params.p;
    let d = u.params.df();
    let grid: Vec<f64> = u.grid.iter().map(|&r| r / sigma).collect();
    let v: Vec<f64> = u.v.iter().map(|&x| x / sigma.powf(alpha)).collect();
    // v_new'(r') = sigma^{1-alpha} v'(sigma r'), so
    // w_new = (r')^{d-1} phi_p(v_new') = w * sigma^{(1-alpha)(p-1)-(d-1)}.
    let wf = sigma.powf((1.0 - alpha) * (p - 1.0) - (d - 1.0));
    let w: Vec<f64> = u.w.iter().map(|&x| x * wf).collect();
    Ok(RadialSolution {
        grid,
        v,
        w,
        params: u.params,
        potential: u.potential.scale(sigma, &u.params),
        truncated_at: u.truncated_at.map(|r| r / sigma),
    })
}

/// Limit report for a solution of an equation with nonnegative potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitReport {
    pub limit_class: LimitClass,
    pub limit_value: Option<f64>,
    /// Oscillation of u over dyadic annuli marching toward zeta.
    pub oscillations: Vec<f64>,
    /// Minimum of u over the same annuli.
    pub minima: Vec<f64>,
}

/// Check numerically that `u` tends to a (possibly infinite) limit toward
/// `zeta`: the oscillation over dyadic annuli shrinks, or the minima diverge
/// monotonically. Requires `V >= 0` on the solution's domain (sampled).
pub fn nonneg_limit_check(
    u: &RadialSolution,
    potential: &Potential,
    zeta: Zeta,
) -> Result<LimitReport> {
    let params = u.params;
    for &r in u.grid.iter().step_by(7) {
        if potential.eval_radial(&params, r) < -1e-12 {
            return Err(Error::precondition(format!(
                "nonnegative-potential check: V({r}) < 0"
            )));
        }
    }
    // Dyadic annuli toward zeta.
    let n = u.grid.len();
    let mut oscillations = Vec::new();
    let mut minima = Vec::new();
    let mut means = Vec::new();
    let total_doublings = (u.grid[n - 1] / u.grid[0]).log2().floor() as usize;
    for k in 0..total_doublings {
        let (lo, hi) = match zeta {
            Zeta::Origin => {
                let hi = u.grid[n - 1] / 2f64.powi(k as i32);
                (hi / 2.0, hi)
            }
            Zeta::Infinity => {
                let lo = u.grid[0] * 2f64.powi(k as i32);
                (lo, lo * 2.0)
            }
        };
        let vals: Vec<f64> = u
            .grid
            .iter()
            .zip(&u.v)
            .filter(|&(&r, _)| r >= lo && r <= hi)
            .map(|(_, &v)| v)
            .collect();
        if vals.len() < 4 {
            continue;
        }
        let vmax = vals.iter().fold(f64::MIN, |m, &x| m.max(x));
        let vmin = vals.iter().fold(f64::MAX, |m, &x| m.min(x));
        oscillations.push(vmax - vmin);
        minima.push(vmin);
        means.push(0.5 * (vmax + vmin));
    }
    if oscillations.len() < 3 {
        return Err(Error::precondition("solution spans too few dyadic annuli"));
    }
    let k = minima.len();
    let last_ratio = minima[k - 1] / minima[k - 2].max(1e-300);
    let growing_tail = minima.windows(2).rev().take(3).all(|w| w[1] >= w[0]);
    let osc_first = oscillations[0];
    let osc_last = oscillations[k - 1];
    let scale = means[k - 1].abs().max(1e-300);

    let limit_class = if growing_tail && last_ratio > 1.02 {
        LimitClass::Infinite
    } else if osc_last <= 0.5 * osc_first || osc_last < 1e-9 * scale {
        LimitClass::Finite
    } else {
        LimitClass::Undetermined
    };
    Ok(LimitReport {
        limit_class,
        limit_value: (limit_class == LimitClass::Finite).then(|| means[k - 1]),
        oscillations,
        minima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{fundamental_solution, solve_gamma};

    fn pr(p: f64, d: u32) -> Params {
        Params::new(p, d).unwrap()
    }

    fn max_rel_err_vs_power(sol: &RadialSolution, coeff: f64, alpha: f64) -> f64 {
        sol.grid
            .iter()
            .zip(&sol.v)
            .map(|(&r, &v)| (v - coeff * r.powf(alpha)).abs() / (coeff * r.powf(alpha)))
            .fold(0.0, f64::max)
    }

    #[test]
    fn ivp_tracks_hardy_power_solution() {
        // Exact oracle: v = r^{gamma_-} solves the Hardy radial equation.
        for (p, d, lam_frac) in [(2.0, 3u32, 0.5), (3.0, 2, 0.5), (1.5, 3, 0.25)] {
            let params = pr(p, d);
            let ch = crate::exponents::hardy_constant(&params);
            let lambda = ch * lam_frac;
            let pair = solve_gamma(lambda, &params).unwrap();
            let g = pair.gamma_minus;
            let potential = Potential::hardy(lambda);
            let r0 = 1.0;
            let sol = ivp_solve(&params, &potential, r0, 1.0, g, 10.0).unwrap();
            assert!(sol.truncated_at.is_none());
            let err = max_rel_err_vs_power(&sol, 1.0, g);
            assert!(err < 1e-8, "p={p} d={d}: err {err}");
        }
    }

    #[test]
    fn ivp_zero_potential_cases() {
        let params = pr(2.5, 3);
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 2.0, 0.0, 100.0).unwrap();
        for &v in &sol.v {
            assert!((v - 2.0).abs() < 1e-12);
        }
        // log branch for p = d
        let params = pr(3.0, 3);
        let r0 = 2.0;
        let sol = ivp_solve(&params, &Potential::zero(), r0, r0.ln(), 1.0 / r0, 200.0).unwrap();
        for (&r, &v) in sol.grid.iter().zip(&sol.v) {
            assert!((v - r.ln()).abs() < 1e-9, "r={r}: {v} vs {}", r.ln());
        }
    }

    #[test]
    fn ivp_halts_on_positivity_loss() {
        let params = pr(2.0, 3);
        // Strong downward slope crosses zero inside the interval.
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 1.0, -3.0, 10.0).unwrap();
        assert!(sol.truncated_at.is_some());
        assert!(sol.v.iter().all(|&v| v > 0.0));
        assert!(sol.grid.len() < 300);
    }

    #[test]
    fn ivp_integrates_inward_too() {
        let params = pr(2.0, 3);
        let potential = Potential::hardy(0.1);
        let pair = solve_gamma(0.1, &params).unwrap();
        let g = pair.gamma_plus;
        let sol = ivp_solve(&params, &potential, 1.0, 1.0, g, 0.01).unwrap();
        assert!(sol.grid.windows(2).all(|w| w[1] > w[0]));
        let err = max_rel_err_vs_power(&sol, 1.0, g);
        assert!(err < 1e-8, "err {err}");
    }

    #[test]
    fn bvp_reproduces_power_oracle() {
        let params = pr(2.0, 3);
        let lambda = 0.125;
        let pair = solve_gamma(lambda, &params).unwrap();
        let g = pair.gamma_minus;
        let potential = Potential::hardy(lambda);
        let (r_lo, r_hi) = (1.0, 10.0);
        let sol = bvp_dirichlet(&params, &potential, r_lo, r_hi, 1.0, r_hi.powf(g), 2048).unwrap();
        let err = max_rel_err_vs_power(&sol, 1.0, g);
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn bvp_zero_potential_trivia() {
        let params = pr(3.0, 2);
        // equal endpoints force the constant
        let sol = bvp_dirichlet(&params, &Potential::zero(), 1.0, 4.0, 2.0, 2.0, 256).unwrap();
        for &v in &sol.v {
            assert!((v - 2.0).abs() < 1e-10);
        }
        // fundamental-solution data reproduces mu_p
        let params = pr(2.0, 4);
        let (r_lo, r_hi) = (0.5, 5.0);
        let mu = |r: f64| fundamental_solution(&params, r).unwrap();
        let sol = bvp_dirichlet(
            &params,
            &Potential::zero(),
            r_lo,
            r_hi,
            mu(r_lo),
            mu(r_hi),
            1024,
        )
        .unwrap();
        for (&r, &v) in sol.grid.iter().zip(&sol.v).step_by(50) {
            assert!((v - mu(r)).abs() / mu(r).abs() < 1e-7, "r={r}");
        }
    }

    #[test]
    fn bvp_fd_grid_order_is_at_least_two() {
        // FD error against the exact Hardy power halves (at least) per
        // doubling; it is O(h^2) so the factor is near 4. d is chosen away
        // from p (at p = d the Hardy constant vanishes and the oracle
        // degenerates to the constant).
        for p in [1.5, 2.0, 3.0, 4.5] {
            let d = if p == 3.0 { 2 } else { 3 };
            let params = pr(p, d);
            let ch = crate::exponents::hardy_constant(&params);
            let lambda = 0.5 * ch;
            let pair = solve_gamma(lambda, &params).unwrap();
            let g = pair.gamma_minus;
            let potential = Potential::hardy(lambda);
            let (r_lo, r_hi) = (1.0, 10.0);
            let mut prev = f64::INFINITY;
            for n in [256usize, 512, 1024] {
                let sol = bvp_dirichlet_fd(&params, &potential, r_lo, r_hi, 1.0, r_hi.powf(g), n)
                    .unwrap();
                let err = max_rel_err_vs_power(&sol, 1.0, g);
                assert!(err < prev / 2.0, "p={p} n={n}: err {err} vs prev {prev}");
                prev = err;
            }
        }
    }

    #[test]
    fn bvp_solvability_error_for_supercritical() {
        let params = pr(2.0, 3);
        // lambda far above c_H = 1/4: no positive solution on a wide annulus.
        let potential = Potential::hardy(40.0);
        let res = bvp_dirichlet(&params, &potential, 0.01, 100.0, 1.0, 1.0, 512);
        assert!(
            matches!(res, Err(Error::Solvability(_)) | Err(Error::Numeric { .. })),
            "expected failure, got {res:?}"
        );
    }

    #[test]
    fn shooting_consistency_with_ivp() {
        let params = pr(2.5, 3);
        let lambda = 0.5 * crate::exponents::hardy_constant(&params);
        let potential = Potential::hardy(lambda);
        let pair = solve_gamma(lambda, &params).unwrap();
        let g = pair.gamma_plus;
        let sol = bvp_dirichlet(&params, &potential, 1.0, 10.0, 1.0, 10f64.powf(g), 2048).unwrap();
        // Re-integrate from the left endpoint data of the BVP solution.
        let slope0 = sol.slope(0);
        let re = ivp_solve(&params, &potential, 1.0, sol.v[0], slope0, 10.0).unwrap();
        for (&r, &v) in sol.grid.iter().zip(&sol.v).step_by(97) {
            let vv = re.value_at(r).unwrap();
            assert!((vv - v).abs() / v < 1e-8, "r={r}: {vv} vs {v}");
        }
    }

    #[test]
    fn wcp_monotonicity_in_boundary_data() {
        // Raising the outer datum raises the whole solution.
        let cases = [
            (pr(2.0, 3), Potential::hardy(0.1)),
            (pr(3.0, 2), Potential::zero()),
            (
                pr(1.5, 3),
                Potential::zero().with_shell(1.0, 3.0, 0.5, -1.0),
            ),
        ];
        for (params, potential) in &cases {
            for (a, b) in [(1.0, 0.5), (1.0, 1.0), (0.3, 2.0)] {
                let low = bvp_dirichlet(params, potential, 0.5, 5.0, a, b, 512).unwrap();
                let high = bvp_dirichlet(params, potential, 0.5, 5.0, a, b * 1.5, 512).unwrap();
                for i in 0..low.v.len() {
                    assert!(
                        high.v[i] >= low.v[i] - 1e-9 * low.v[i],
                        "p={} i={i}",
                        params.p
                    );
                }
            }
        }
    }

    #[test]
    fn exhaustion_recovers_minimal_growth_exponents() {
        // V = 0, p < d, zeta = 0: exponent (p-d)/(p-1).
        let params = pr(2.0, 3);
        let res =
            minimal_growth_exhaustion(&params, &Potential::zero(), Zeta::Origin, 1.0, 18).unwrap();
        assert!(
            (res.exponent - params.mu_exponent()).abs() < 1e-3,
            "exponent {} vs {}",
            res.exponent,
            params.mu_exponent()
        );
        // Hardy lambda < c_H: gamma_- at zeta = 0, gamma_+ at zeta = inf.
        let lambda = 0.125;
        let pair = solve_gamma(lambda, &params).unwrap();
        let potential = Potential::hardy(lambda);
        let res = minimal_growth_exhaustion(&params, &potential, Zeta::Origin, 1.0, 18).unwrap();
        assert!(
            (res.exponent - pair.gamma_minus).abs() < 1e-3,
            "zeta=0: {} vs {}",
            res.exponent,
            pair.gamma_minus
        );
        let res = minimal_growth_exhaustion(&params, &potential, Zeta::Infinity, 1.0, 18).unwrap();
        assert!(
            (res.exponent - pair.gamma_plus).abs() < 1e-3,
            "zeta=inf: {} vs {}",
            res.exponent,
            pair.gamma_plus
        );
    }

    #[test]
    fn classify_fundamental_solution_and_friends() {
        // mu_p, p < d, toward 0: power with exponent (p-d)/(p-1).
        let params = pr(2.0, 3);
        let g = params.mu_exponent();
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 1.0, g, 1e-3).unwrap();
        let rep = classify_asymptotics(&sol, Zeta::Origin, &params).unwrap();
        assert_eq!(rep.class, AsymptoticClass::Power);
        assert!((rep.exponent.unwrap() - g).abs() < 1e-4, "{:?}", rep);

        // constant: bounded limit.
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 3.0, 0.0, 1e3).unwrap();
        let rep = classify_asymptotics(&sol, Zeta::Infinity, &params).unwrap();
        assert_eq!(rep.class, AsymptoticClass::BoundedLimit);
        assert!((rep.constant - 3.0).abs() < 1e-9);

        // p = d: log branch toward infinity.
        let params = pr(2.0, 2);
        let sol = ivp_solve(&params, &Potential::zero(), 2.0, 2f64.ln(), 0.5, 1e3).unwrap();
        let rep = classify_asymptotics(&sol, Zeta::Infinity, &params).unwrap();
        assert_eq!(rep.class, AsymptoticClass::Log);

        // too short a grid is a precondition error
        let params = pr(2.0, 3);
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 1.0, 0.0, 5.0).unwrap();
        assert!(classify_asymptotics(&sol, Zeta::Origin, &params).is_err());
    }

    #[test]
    fn quotient_trichotomy_on_power_pairs() {
        let params = pr(2.0, 3);
        let lambda = 0.125;
        let pair = solve_gamma(lambda, &params).unwrap();
        let potential = Potential::hardy(lambda);
        let mk = |g: f64| ivp_solve(&params, &potential, 1.0, 1.0, g, 1e-3).unwrap();
        let u_minus = mk(pair.gamma_minus);
        let u_plus = mk(pair.gamma_plus);
        // r^{gamma_-} / r^{gamma_+} -> infinity toward 0 (exponent gap).
        let qp = quotient_profile(&u_minus, &u_plus, Zeta::Origin).unwrap();
        assert_eq!(qp.limit_class, LimitClass::Infinite);
        // u / u = 1.
        let qp = quotient_profile(&u_minus, &u_minus, Zeta::Origin).unwrap();
        assert_eq!(qp.limit_class, LimitClass::Finite);
        assert!((qp.limit_value.unwrap() - 1.0).abs() < 1e-9);
        // u / (2 u) -> 1/2: finite, comparable solutions.
        let mut doubled = u_minus.clone();
        for v in &mut doubled.v {
            *v *= 2.0;
        }
        let qp = quotient_profile(&u_minus, &doubled, Zeta::Origin).unwrap();
        assert_eq!(qp.limit_class, LimitClass::Finite);
        assert!((qp.limit_value.unwrap() - 0.5).abs() < 1e-9);
        // and the reverse order gives zero class
        let qp = quotient_profile(&u_plus, &u_minus, Zeta::Origin).unwrap();
        assert_eq!(qp.limit_class, LimitClass::Zero);
    }

    #[test]
    fn quotient_monotone_for_exhaustion_pairs() {
        let params = pr(2.0, 3);
        let lambda = 0.125;
        let potential = Potential::hardy(lambda);
        let res = minimal_growth_exhaustion(&params, &potential, Zeta::Origin, 1.0, 14).unwrap();
        let pair = solve_gamma(lambda, &params).unwrap();
        let exact = ivp_solve(
            &params,
            &potential,
            1.0,
            1.0,
            pair.gamma_minus,
            *res.solution.grid.last().unwrap(),
        )
        .unwrap();
        let qp = quotient_profile(&res.solution, &exact, Zeta::Infinity).unwrap();
        assert!(qp.eventually_monotone);
        assert_ne!(qp.limit_class, LimitClass::Undetermined);
    }

    #[test]
    fn veron_rescale_cases() {
        let params = pr(2.0, 3);
        let alpha = -1.0;
        let u = ivp_solve(&params, &Potential::zero(), 1.0, 1.0, alpha, 100.0).unwrap();
        // r^alpha is a fixed point.
        let w = veron_rescale(&u, 0.25, alpha).unwrap();
        for (&r, &v) in w.grid.iter().zip(&w.v).step_by(41) {
            assert!((v - r.powf(alpha)).abs() / r.powf(alpha) < 1e-7, "r={r}");
        }
        // sigma = 1 is the identity.
        let w = veron_rescale(&u, 1.0, alpha).unwrap();
        assert_eq!(w.grid, u.grid);
        assert_eq!(w.v, u.v);
        // u = c + r^alpha: rescaled by sigma -> r^alpha on compacts.
        let c = 5.0;
        let u2 = RadialSolution {
            grid: u.grid.clone(),
            v: u.grid.iter().map(|&r| c + r.powf(alpha)).collect(),
            w: u.w.clone(),
            params,
            potential: Potential::zero(),
            truncated_at: None,
        };
        let mut worst_prev = f64::INFINITY;
        for sigma in [0.1, 0.01, 0.001] {
            let w = veron_rescale(&u2, sigma, alpha).unwrap();
            // compare on the fixed compact [10, 100]
            let worst = w
                .grid
                .iter()
                .zip(&w.v)
                .filter(|&(&r, _)| (10.0..=100.0).contains(&r))
                .map(|(&r, &v)| (v - r.powf(alpha)).abs() / r.powf(alpha))
                .fold(0.0f64, f64::max);
            assert!(worst < worst_prev);
            worst_prev = worst;
        }
        assert!(worst_prev < 1e-2);
        assert!(veron_rescale(&u, -1.0, alpha).is_err());
    }

    #[test]
    fn nonneg_limit_check_cases() {
        let params = pr(2.0, 3);
        // constant with V = 0: finite limit.
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 2.0, 0.0, 1e3).unwrap();
        let rep = nonneg_limit_check(&sol, &Potential::zero(), Zeta::Infinity).unwrap();
        assert_eq!(rep.limit_class, LimitClass::Finite);
        assert!((rep.limit_value.unwrap() - 2.0).abs() < 1e-9);

        // p > d, u = r^{(p-d)/(p-1)} toward infinity: infinite limit.
        let params = pr(3.0, 2);
        let g = params.mu_exponent();
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 1.0, g, 1e3).unwrap();
        let rep = nonneg_limit_check(&sol, &Potential::zero(), Zeta::Infinity).unwrap();
        assert_eq!(rep.limit_class, LimitClass::Infinite);

        // V >= 0 shell potential: oscillation decays across dyadic annuli.
        let params = pr(2.0, 3);
        let potential = Potential::zero().with_shell(1.0, 2.0, 0.5, -2.0);
        let sol = ivp_solve(&params, &potential, 1.0, 1.0, 0.1, 1e3).unwrap();
        let rep = nonneg_limit_check(&sol, &potential, Zeta::Infinity).unwrap();
        assert_ne!(rep.limit_class, LimitClass::Undetermined);

        // negative potential violates the precondition.
        let rep = nonneg_limit_check(&sol, &Potential::hardy(0.5), Zeta::Infinity);
        assert!(matches!(rep, Err(Error::Precondition(_))));
    }
}
