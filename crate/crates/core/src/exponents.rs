//! Exponent algebra for the radial Hardy-type model and separable
//! plane-sector solutions.
//!
//! The radial model `-lap_p(u) - lambda |u|^{p-2} u / |x|^p = 0` admits power
//! solutions `|x|^gamma` exactly when `gamma` solves the scalar equation
//! `F(gamma) = lambda` with
//!
//! ```text
//! F(gamma) = -gamma |gamma|^{p-2} [ gamma (p-1) + d - p ].
//! ```
//!
//! `F` increases up to the critical exponent `gamma_* = (p-d)/p`, where it
//! attains the Hardy constant `c_H = |(p-d)/p|^p`, and decreases beyond it,
//! so for every coupling `lambda < c_H` there are exactly two roots
//! `gamma_- < gamma_* < gamma_+`; at `lambda = c_H` they coalesce.
//!
//! For the plane sector of aperture `theta_0`, separable solutions
//! `u = r^beta phi(theta)` of the p-Laplace equation lead to the angular ODE
//!
//! ```text
//! ((beta^2 phi^2 + phi'^2)^{(p-2)/2} phi')'
//!     + beta [beta (p-1) + 2 - p] (beta^2 phi^2 + phi'^2)^{(p-2)/2} phi = 0,
//! ```
//! obtained by substituting the separable form into the polar p-Laplacian.
//! Shooting from `phi(0) = 0`, `phi'(0) = 1` and matching the first zero of
//! `phi` to the aperture yields the regular exponent `beta_inf > 0` and the
//! singular one `beta_0 < 0`. For p = 2 this reduces to `phi'' + beta^2 phi = 0`
//! and `beta = pi / theta_0`, which the tests pin down.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{bisect_refine, phi_p};

/// Root tolerance for the gamma solver (bisection limit near the fold).
pub const GAMMA_XTOL: f64 = 1e-8;
/// Two roots closer than this are reported as the degenerate double root.
pub const DEGENERATE_GAP: f64 = 1e-6;
/// Aperture-matching tolerance of the sector shooting solver.
pub const SECTOR_BETA_XTOL: f64 = 1e-12;

/// The pair `(p, d)` governing every formula in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Exponent of the p-Laplacian, `p > 1`.
    pub p: f64,
    /// Spatial dimension, `d >= 2`.
    pub d: u32,
}

impl Params {
    pub fn new(p: f64, d: u32) -> Result<Params> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::domain(format!("p must be finite and > 1, got {p}")));
        }
        if d < 2 {
            return Err(Error::domain(format!("d must be >= 2, got {d}")));
        }
        Ok(Params { p, d })
    }

    #[inline]
    pub fn df(&self) -> f64 {
        self.d as f64
    }

    /// Critical exponent `gamma_* = (p - d)/p`.
    #[inline]
    pub fn gamma_star(&self) -> f64 {
        (self.p - self.df()) / self.p
    }

    /// Exponent of the fundamental solution, `(p - d)/(p - 1)` (p != d).
    #[inline]
    pub fn mu_exponent(&self) -> f64 {
        (self.p - self.df()) / (self.p - 1.0)
    }

    /// True when p equals the dimension (conformal case, logarithmic
    /// fundamental solution).
    #[inline]
    pub fn is_conformal(&self) -> bool {
        self.p == self.df()
    }
}

/// The two power exponents solving `F(gamma) = lambda`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentPair {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    /// Set when the coupling sits at the Hardy constant and the roots
    /// coalesce at `gamma_*`.
    pub degenerate: bool,
}

/// Hardy constant `c_H = |(p-d)/p|^p`, the largest coupling for which the
/// radial model admits a positive solution.
pub fn hardy_constant(params: &Params) -> f64 {
    params.gamma_star().abs().powf(params.p)
}

/// The characteristic function `F(gamma) = -gamma |gamma|^{p-2} [gamma (p-1) + d - p]`.
pub fn characteristic(gamma: f64, params: &Params) -> f64 {
    -phi_p(gamma, params.p) * (gamma * (params.p - 1.0) + params.df() - params.p)
}

/// Derivative `F'(gamma) = -p (p-1) |gamma|^{p-2} (gamma - gamma_*)`.
pub fn characteristic_deriv(gamma: f64, params: &Params) -> f64 {
    let p = params.p;
    -p * (p - 1.0) * gamma.abs().powf(p - 2.0) * (gamma - params.gamma_star())
}

/// Solve `F(gamma) = lambda` for the two exponents bracketing `gamma_*`.
///
/// Bracketed bisection with secant refinement, then Newton polish away from
/// the fold. Near `lambda = c_H` the root is a double root and Newton
/// degrades, so the bisection result with `GAMMA_XTOL` stands and the pair is
/// declared degenerate when the gap falls under `DEGENERATE_GAP`.
pub fn solve_gamma(lambda: f64, params: &Params) -> Result<ExponentPair> {
    let ch = hardy_constant(params);
    let gs = params.gamma_star();
    let scale = ch.abs().max(1.0);
    if lambda > ch + 1e-12 * scale {
        return Err(Error::domain(format!(
            "supercritical coupling, no positive solution: lambda = {lambda} > c_H = {ch}"
        )));
    }
    if lambda >= ch - 1e-13 * scale {
        return Ok(ExponentPair {
            gamma_minus: gs,
            gamma_plus: gs,
            degenerate: true,
        });
    }

    let g = |x: f64| characteristic(x, params) - lambda;
    let root_on = |side: f64| -> Result<f64> {
        // F(gamma_*) = c_H > lambda, F -> -inf on both ends; grow the bracket
        // geometrically until the far endpoint is below lambda.
        let mut delta = 0.25 * gs.abs().max(1.0);
        let mut far = gs + side * delta;
        let mut tries = 0;
        while g(far) > 0.0 {
            delta *= 2.0;
            far = gs + side * delta;
            tries += 1;
            if tries > 200 {
                return Err(Error::numeric("gamma bracket expansion failed", far));
            }
        }
        let (a, b) = if side < 0.0 { (far, gs) } else { (gs, far) };
        let mut root = bisect_refine(&g, a, b, GAMMA_XTOL, 200);
        // Newton polish; harmless near the fold because steps that leave the
        // bracket or fail to descend are rejected.
        for _ in 0..8 {
            let f = g(root);
            let df = characteristic_deriv(root, params);
            if df.abs() < 1e-300 {
                break;
            }
            let next = root - f / df;
            if !(next > a && next < b) || g(next).abs() >= f.abs() {
                break;
            }
            root = next;
        }
        Ok(root)
    };

    let gamma_minus = root_on(-1.0)?;
    let gamma_plus = root_on(1.0)?;
    if gamma_plus - gamma_minus < DEGENERATE_GAP {
        return Ok(ExponentPair {
            gamma_minus: gs,
            gamma_plus: gs,
            degenerate: true,
        });
    }
    Ok(ExponentPair {
        gamma_minus,
        gamma_plus,
        degenerate: false,
    })
}

/// Fundamental solution `mu_p(r)` of the p-Laplacian with the normalization
/// constant fixed to 1: `r^{(p-d)/(p-1)}` for p != d and `log r` for p = d.
pub fn fundamental_solution(params: &Params, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!(
            "fundamental solution needs r > 0, got {r}"
        )));
    }
    if params.is_conformal() {
        Ok(r.ln())
    } else {
        Ok(r.powf(params.mu_exponent()))
    }
}

/// Angular profile `phi(theta)` of a separable sector solution, sampled on a
/// uniform grid with its derivative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngularProfile {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

/// Separable exponents and profiles on a plane sector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorExponents {
    /// Aperture `theta_0` of the sector, in (0, 2 pi].
    pub aperture: f64,
    /// Regular exponent `beta_inf > 0` (solution vanishing at the vertex).
    pub beta_regular: f64,
    /// Singular exponent `beta_0 < 0` (solution blowing up at the vertex).
    pub beta_singular: f64,
    pub profile_regular: AngularProfile,
    pub profile_singular: AngularProfile,
}

/// Right-hand side of the angular ODE in explicit form,
/// `phi'' = -phi [ (p-2) beta^2 phi'^2 + beta c (beta^2 phi^2 + phi'^2) ]
///          / [ beta^2 phi^2 + (p-1) phi'^2 ]`
/// with `c = beta (p-1) + 2 - p`.
#[inline]
fn angular_rhs(phi: f64, dphi: f64, beta: f64, p: f64) -> f64 {
    let c = beta * (p - 1.0) + 2.0 - p;
    let e = beta * beta * phi * phi + dphi * dphi;
    let den = beta * beta * phi * phi + (p - 1.0) * dphi * dphi;
    -phi * ((p - 2.0) * beta * beta * dphi * dphi + beta * c * e) / den
}

#[inline]
fn rk4_step(phi: f64, dphi: f64, h: f64, beta: f64, p: f64) -> (f64, f64) {
    let f = |y: f64, dy: f64| (dy, angular_rhs(y, dy, beta, p));
    let (k1, l1) = f(phi, dphi);
    let (k2, l2) = f(phi + 0.5 * h * k1, dphi + 0.5 * h * l1);
    let (k3, l3) = f(phi + 0.5 * h * k2, dphi + 0.5 * h * l2);
    let (k4, l4) = f(phi + h * k3, dphi + h * l3);
    (
        phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4),
        dphi + h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4),
    )
}

/// First positive zero of the shooting solution `phi(theta; beta)`, or None
/// if `phi` stays positive up to `theta_cap`.
fn first_zero(beta: f64, p: f64, theta_cap: f64) -> Option<f64> {
    // Step resolves the oscillation scale 1/|beta| as well as the aperture.
    let h = (std::f64::consts::PI / beta.abs()).min(theta_cap) / 4096.0;
    let mut theta = 0.0;
    let mut phi = 0.0;
    let mut dphi = 1.0;
    while theta < theta_cap {
        let (phi_new, dphi_new) = rk4_step(phi, dphi, h, beta, p);
        if phi_new <= 0.0 {
            // Bisect inside the final step with partial RK4 steps.
            let mut lo = 0.0;
            let mut hi = h;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let (pm, _) = rk4_step(phi, dphi, mid, beta, p);
                if pm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(theta + 0.5 * (lo + hi));
        }
        phi = phi_new;
        dphi = dphi_new;
        theta += h;
    }
    None
}

/// Solve the aperture-matching problem `Theta(beta) = theta_0` on one sign of
/// `beta`, seeded by continuation in p from the explicit p = 2 value.
fn solve_beta(p: f64, aperture: f64, sign: f64) -> Result<f64> {
    let theta_cap = 8.0 * aperture.max(1.0);
    let p2_seed = std::f64::consts::PI / aperture;
    let mut seed = p2_seed;
    // Continuation path 2 -> p in steps of at most 0.1 keeps the bracket on
    // the fundamental mode (phi with no interior zero).
    let n_steps = ((p - 2.0).abs() / 0.1).ceil().max(1.0) as usize;
    for k in 1..=n_steps {
        let pk = 2.0 + (p - 2.0) * k as f64 / n_steps as f64;
        let gap_k =
            |b: f64| first_zero(sign * b, pk, theta_cap).unwrap_or(f64::INFINITY) - aperture;
        // Expand a bracket around the previous solution.
        let mut lo = seed / 1.25;
        let mut hi = seed * 1.25;
        let mut tries = 0;
        while gap_k(lo) < 0.0 {
            // Theta(lo) < aperture: shrink beta further.
            lo /= 1.5;
            tries += 1;
            if tries > 80 || lo < 1e-8 {
                return Err(Error::numeric(
                    format!("sector shooting failed to bracket (p={pk}, aperture={aperture}, sign={sign}): lower edge exhausted"),
                    lo,
                ));
            }
        }
        tries = 0;
        while gap_k(hi) > 0.0 {
            hi *= 1.5;
            tries += 1;
            if tries > 80 {
                return Err(Error::numeric(
                    format!("sector shooting failed to bracket (p={pk}, aperture={aperture}, sign={sign}): upper edge exhausted"),
                    hi,
                ));
            }
        }
        seed = bisect_refine(gap_k, lo, hi, SECTOR_BETA_XTOL * seed.max(1.0), 200);
    }
    Ok(sign * seed)
}

/// Sample the shooting trajectory at `beta` on a uniform grid over the
/// aperture; the endpoint is the matched zero and is stored as exactly 0.
fn sample_profile(beta: f64, p: f64, aperture: f64, n: usize) -> AngularProfile {
    let h = aperture / n as f64;
    let mut theta = Vec::with_capacity(n + 1);
    let mut phi = Vec::with_capacity(n + 1);
    let mut dphi = Vec::with_capacity(n + 1);
    let (mut y, mut dy) = (0.0, 1.0);
    theta.push(0.0);
    phi.push(0.0);
    dphi.push(1.0);
    for i in 1..=n {
        let (yn, dyn_) = rk4_step(y, dy, h, beta, p);
        y = yn;
        dy = dyn_;
        theta.push(i as f64 * h);
        phi.push(y);
        dphi.push(dy);
    }
    // The matched aperture is the first zero; pin the endpoint.
    phi[n] = 0.0;
    AngularProfile { theta, phi, dphi }
}

/// Separable sector exponents for the p-Laplacian on a plane sector of the
/// given aperture: the unique `beta_inf > 0` and `beta_0 < 0` whose angular
/// profile first vanishes exactly at the aperture while positive inside.
pub fn sector_exponents(p: f64, aperture: f64) -> Result<SectorExponents> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::domain(format!("p must be > 1, got {p}")));
    }
    if !(aperture > 0.0 && aperture <= 2.0 * std::f64::consts::PI) {
        return Err(Error::domain(format!(
            "aperture must lie in (0, 2 pi], got {aperture}"
        )));
    }
    let beta_regular = solve_beta(p, aperture, 1.0)?;
    let beta_singular = solve_beta(p, aperture, -1.0)?;
    let n = 4096;
    let profile_regular = sample_profile(beta_regular, p, aperture, n);
    let profile_singular = sample_profile(beta_singular, p, aperture, n);
    for prof in [&profile_regular, &profile_singular] {
        if prof.phi[1..n].iter().any(|&v| v <= 0.0) {
            return Err(Error::numeric(
                "sector profile lost positivity inside the aperture",
                aperture,
            ));
        }
    }
    Ok(SectorExponents {
        aperture,
        beta_regular,
        beta_singular,
        profile_regular,
        profile_singular,
    })
}

/// Max-norm residual of the angular ODE on a sampled profile, normalized by
/// the scale of `phi''`. Uses 4th-order central differences of `phi'` on the
/// interior, so exact trajectories sit at the integrator/difference floor.
pub fn angular_ode_residual(profile: &AngularProfile, p: f64, beta: f64) -> f64 {
    let n = profile.theta.len();
    if n < 7 {
        return f64::NAN;
    }
    let h = profile.theta[1] - profile.theta[0];
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 2..n - 2 {
        let dd = (-profile.dphi[i + 2] + 8.0 * profile.dphi[i + 1] - 8.0 * profile.dphi[i - 1]
            + profile.dphi[i - 2])
            / (12.0 * h);
        let rhs = angular_rhs(profile.phi[i], profile.dphi[i], beta, p);
        worst = worst.max((dd - rhs).abs());
        scale = scale.max(rhs.abs());
    }
    worst / scale.max(1.0)
}
