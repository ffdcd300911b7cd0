//! Planar (d = 2) finite-difference solver for
//! `-lap_p(u) + V |u|^{p-2} u = 0` on annuli and sectors, in polar
//! coordinates.
//!
//! In the variables `(s, theta)` with `s = ln r` the equation becomes
//!
//! ```text
//! -d/ds( w G u_s ) - d/dtheta( w G u_theta ) + r^2 V phi_p(u) = 0,
//! w(s) = e^{(2-p)s},  G = (u_s^2 + u_theta^2 + eps^2)^{(p-2)/2},
//! ```
//!
//! discretized with a flux-form stencil on a grid log-spaced in r and
//! uniform in theta, the flux regularized by `eps` and solved by damped
//! Newton with continuation `eps = 1e-2 -> 1e-8` in decade steps (each
//! stage warm-started from the previous one). The linear systems use
//! BiCGSTAB with diagonal preconditioning on the analytically assembled
//! sparse Jacobian; everything is sequential and deterministic.
//!
//! On top of the solver: sphere-wise Harnack quotient profiles, a
//! regular-point probe for the limit of `u/v`, separable-solution checks on
//! sectors, and critical-set diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{AngularProfile, SectorExponents};
use crate::expr::Expr;
use crate::num::{log_grid, phi_p};
use crate::potential::Potential;
use crate::Params;
use crate::Zeta;

/// Continuation schedule for the flux regularization.
pub const EPS_START: f64 = 1e-2;
pub const EPS_FINAL: f64 = 1e-8;
/// Target scaled max-norm residual of a converged solve.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Critical-set threshold: a node is critical when `r |grad u| < delta |u|`
/// with this delta (relative local field scale).
pub const DELTA_CRIT: f64 = 1e-6;
/// A "finite limit" in the regular-point probe needs the sphere-wise ratio
/// within `1 + RATIO_TOL` over the last decade and still shrinking.
pub const RATIO_TOL: f64 = 1e-2;

/// Computational domain: full annulus (theta periodic) or sector of the
/// given aperture with zero Dirichlet data on the two rays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain2 {
    Annulus { r_lo: f64, r_hi: f64 },
    Sector { r_lo: f64, r_hi: f64, aperture: f64 },
}

impl Domain2 {
    pub fn radii(&self) -> (f64, f64) {
        match *self {
            Domain2::Annulus { r_lo, r_hi } | Domain2::Sector { r_lo, r_hi, .. } => (r_lo, r_hi),
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Domain2::Annulus { .. })
    }

    pub fn angle_span(&self) -> f64 {
        match *self {
            Domain2::Annulus { .. } => std::f64::consts::TAU,
            Domain2::Sector { aperture, .. } => aperture,
        }
    }

    fn validate(&self) -> Result<()> {
        let (r_lo, r_hi) = self.radii();
        if !(0.0 < r_lo && r_lo < r_hi) {
            return Err(Error::domain(format!(
                "domain needs 0 < r_lo < r_hi, got ({r_lo}, {r_hi})"
            )));
        }
        if let Domain2::Sector { aperture, .. } = *self {
            if !(aperture > 0.0 && aperture <= std::f64::consts::TAU) {
                return Err(Error::domain(format!(
                    "sector aperture must lie in (0, 2 pi], got {aperture}"
                )));
            }
        }
        Ok(())
    }
}

/// Dirichlet data on the two circles, sampled on the theta grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryData {
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
}

impl BoundaryData {
    /// Sample closures `f(theta)` on the node set of `domain` with
    /// `n_theta` angular intervals.
    pub fn from_fns(
        domain: &Domain2,
        n_theta: usize,
        inner: impl Fn(f64) -> f64,
        outer: impl Fn(f64) -> f64,
    ) -> BoundaryData {
        let thetas = theta_nodes(domain, n_theta);
        BoundaryData {
            inner: thetas.iter().map(|&t| inner(t)).collect(),
            outer: thetas.iter().map(|&t| outer(t)).collect(),
        }
    }

    /// Evaluate whitelisted expressions (variables `r`, `theta`) on the
    /// circles of `domain`.
    pub fn from_exprs(
        domain: &Domain2,
        n_theta: usize,
        inner: &Expr,
        outer: &Expr,
    ) -> BoundaryData {
        let (r_lo, r_hi) = domain.radii();
        BoundaryData::from_fns(
            domain,
            n_theta,
            |t| inner.eval(r_lo, t),
            |t| outer.eval(r_hi, t),
        )
    }

    /// Radial traces from a radial solution (constant in theta).
    pub fn radial(domain: &Domain2, n_theta: usize, inner: f64, outer: f64) -> BoundaryData {
        BoundaryData::from_fns(domain, n_theta, |_| inner, |_| outer)
    }
}

/// Theta nodes: sector grids carry both endpoints, periodic grids do not.
pub fn theta_nodes(domain: &Domain2, n_theta: usize) -> Vec<f64> {
    match domain {
        Domain2::Annulus { .. } => {
            let h = std::f64::consts::TAU / n_theta as f64;
            (0..n_theta).map(|j| j as f64 * h).collect()
        }
        Domain2::Sector { aperture, .. } => {
            let h = aperture / n_theta as f64;
            (0..=n_theta).map(|j| j as f64 * h).collect()
        }
    }
}

/// A positive discrete solution on a polar grid, with its gradient and
/// critical-set diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolarField {
    pub domain: Domain2,
    pub params: Params,
    /// Log-spaced radii (n_r + 1 nodes).
    pub r_grid: Vec<f64>,
    /// Theta nodes (periodic: n_theta; sector: n_theta + 1).
    pub theta_grid: Vec<f64>,
    /// Row-major values, `values[i * n_theta_nodes + j]`.
    pub values: Vec<f64>,
    /// `|grad u|` per node (central differences).
    pub grad_mag: Vec<f64>,
    /// Nodes where `r |grad u| < DELTA_CRIT |u|`.
    pub critical_set_mask: Vec<bool>,
    /// Scaled max-norm residual reached by the solver (0 for analytic fields).
    pub residual: f64,
    /// Final flux regularization (0 for analytic fields).
    pub epsilon_final: f64,
}

impl PolarField {
    #[inline]
    pub fn n_r(&self) -> usize {
        self.r_grid.len()
    }

    #[inline]
    pub fn n_theta(&self) -> usize {
        self.theta_grid.len()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_theta() + j]
    }

    /// Build a field from an analytic function `f(r, theta)` on the grid of
    /// `domain` (n_r radial and n_theta angular intervals).
    pub fn from_fn(
        domain: Domain2,
        params: Params,
        n_r: usize,
        n_theta: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<PolarField> {
        domain.validate()?;
        let (r_lo, r_hi) = domain.radii();
        let r_grid = log_grid(r_lo, r_hi, n_r.max(4));
        let thetas = theta_nodes(&domain, n_theta.max(4));
        let mut values = Vec::with_capacity(r_grid.len() * thetas.len());
        for &r in &r_grid {
            for &t in &thetas {
                values.push(f(r, t));
            }
        }
        let mut field = PolarField {
            domain,
            params,
            r_grid,
            theta_grid: thetas,
            values,
            grad_mag: Vec::new(),
            critical_set_mask: Vec::new(),
            residual: 0.0,
            epsilon_final: 0.0,
        };
        field.refresh_gradient();
        Ok(field)
    }

    /// Separable field `r^beta phi(theta)` from an angular profile.
    pub fn separable(
        domain: Domain2,
        params: Params,
        n_r: usize,
        n_theta: usize,
        beta: f64,
        profile: &AngularProfile,
    ) -> Result<PolarField> {
        let phi = |t: f64| -> f64 {
            // linear interpolation on the (fine, uniform) profile grid
            let h = profile.theta[1] - profile.theta[0];
            let x = (t / h).clamp(0.0, (profile.theta.len() - 1) as f64);
            let k = (x.floor() as usize).min(profile.theta.len() - 2);
            let w = x - k as f64;
            profile.phi[k] * (1.0 - w) + profile.phi[k + 1] * w
        };
        PolarField::from_fn(domain, params, n_r, n_theta, |r, t| r.powf(beta) * phi(t))
    }

    /// Recompute the gradient magnitude and critical-set mask from values.
    /// The mask compares the scale-free gradient `r |grad u|` against
    /// `DELTA_CRIT` times the local field scale `|u|`.
    pub fn refresh_gradient(&mut self) {
        let geo = Geometry::of(self);
        let nt = self.n_theta();
        let nr = self.n_r();
        self.grad_mag = vec![0.0; nr * nt];
        self.critical_set_mask = vec![false; nr * nt];
        for i in 0..nr {
            for j in 0..nt {
                let us = geo.us_central(&self.values, i, j);
                let ut = geo.ut_central(&self.values, i, j);
                let r = self.r_grid[i];
                let scaled = (us * us + ut * ut).sqrt(); // = r |grad u|
                self.grad_mag[i * nt + j] = scaled / r;
                self.critical_set_mask[i * nt + j] =
                    scaled < DELTA_CRIT * self.values[i * nt + j].abs();
            }
        }
    }

    /// Max relative gap to another field on shared interior nodes.
    pub fn relative_gap(&self, other: &PolarField) -> f64 {
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, &x| m.max(x.abs()))
            .max(1e-300);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            / scale
    }
}

/// Grid geometry and finite-difference helpers shared by the residual, the
/// Jacobian and the diagnostics.
struct Geometry {
    nr: usize,
    nt: usize,
    ds: f64,
    dt: f64,
    periodic: bool,
}

impl Geometry {
    fn of(field: &PolarField) -> Geometry {
        let nr = field.n_r();
        let nt = field.n_theta();
        Geometry {
            nr,
            nt,
            ds: (field.r_grid[1] / field.r_grid[0]).ln(),
            dt: field.theta_grid[1] - field.theta_grid[0],
            periodic: field.domain.is_periodic(),
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nt + j
    }

    /// theta neighbor with wrap on periodic grids; None past a sector ray.
    #[inline]
    fn jn(&self, j: usize, step: isize) -> Option<usize> {
        let nt = self.nt as isize;
        let jj = j as isize + step;
        if self.periodic {
            Some(jj.rem_euclid(nt) as usize)
        } else if (0..nt).contains(&jj) {
            Some(jj as usize)
        } else {
            None
        }
    }

    /// Central difference in s (one-sided at the radial boundary rows).
    fn us_central(&self, u: &[f64], i: usize, j: usize) -> f64 {
        if i == 0 {
            (u[self.idx(1, j)] - u[self.idx(0, j)]) / self.ds
        } else if i == self.nr - 1 {
            (u[self.idx(i, j)] - u[self.idx(i - 1, j)]) / self.ds
        } else {
            (u[self.idx(i + 1, j)] - u[self.idx(i - 1, j)]) / (2.0 * self.ds)
        }
    }

    /// Central difference in theta (one-sided at sector rays).
    fn ut_central(&self, u: &[f64], i: usize, j: usize) -> f64 {
        match (self.jn(j, -1), self.jn(j, 1)) {
            (Some(jm), Some(jp)) => (u[self.idx(i, jp)] - u[self.idx(i, jm)]) / (2.0 * self.dt),
            (None, Some(jp)) => (u[self.idx(i, jp)] - u[self.idx(i, j)]) / self.dt,
            (Some(jm), None) => (u[self.idx(i, j)] - u[self.idx(i, jm)]) / self.dt,
            (None, None) => 0.0,
        }
    }
}

// ---------------------------------------------------------------------------
// the nonlinear solver
// ---------------------------------------------------------------------------

struct Discretization {
    geo: Geometry,
    /// e^{(2-p) s} at nodes and s-faces.
    w_node: Vec<f64>,
    w_face: Vec<f64>,
    /// r^2 V(r, theta) phi_p factor coefficients at nodes.
    source: Vec<f64>,
    p: f64,
    /// interior unknown index per node (usize::MAX for boundary nodes).
    unknown_of_node: Vec<usize>,
    node_of_unknown: Vec<usize>,
}

impl Discretization {
    fn new(field: &PolarField, potential: &Potential) -> Discretization {
        let geo = Geometry::of(field);
        let p = field.params.p;
        let w_node: Vec<f64> = field
            .r_grid
            .iter()
            .map(|&r| r.ln())
            .map(|s| ((2.0 - p) * s).exp())
            .collect();
        let w_face: Vec<f64> = (0..geo.nr - 1)
            .map(|i| {
                let sm = 0.5 * (field.r_grid[i].ln() + field.r_grid[i + 1].ln());
                ((2.0 - p) * sm).exp()
            })
            .collect();
        let mut source = vec![0.0; geo.nr * geo.nt];
        for i in 0..geo.nr {
            let r = field.r_grid[i];
            for j in 0..geo.nt {
                let v = potential
                    .evaluate(&field.params, r, Some(field.theta_grid[j]))
                    .unwrap_or(0.0);
                source[geo.idx(i, j)] = r * r * v;
            }
        }
        let mut unknown_of_node = vec![usize::MAX; geo.nr * geo.nt];
        let mut node_of_unknown = Vec::new();
        for i in 1..geo.nr - 1 {
            for j in 0..geo.nt {
                if !geo.periodic && (j == 0 || j == geo.nt - 1) {
                    continue;
                }
                unknown_of_node[geo.idx(i, j)] = node_of_unknown.len();
                node_of_unknown.push(geo.idx(i, j));
            }
        }
        Discretization {
            geo,
            w_node,
            w_face,
            source,
            p,
            unknown_of_node,
            node_of_unknown,
        }
    }

    /// Average of the transverse theta-derivative on an s-face (i+1/2, j).
    #[inline]
    fn ub_sface(&self, u: &[f64], i: usize, j: usize) -> f64 {
        0.5 * (self.geo.ut_central(u, i, j) + self.geo.ut_central(u, i + 1, j))
    }

    /// Average of the transverse s-derivative on a theta-face (i, j+1/2),
    /// where jp is the node across the face.
    #[inline]
    fn ub_tface(&self, u: &[f64], i: usize, j: usize, jp: usize) -> f64 {
        0.5 * (self.geo.us_central(u, i, j) + self.geo.us_central(u, i, jp))
    }

    /// Residual at every interior unknown; returns the scaled max norm.
    ///
    /// Scaling: each nodal residual is divided by its local flux scale
    /// floored at 1e-3 of the global flux scale. The floor matters: where
    /// the solution is locally flat the local scale collapses and the raw
    /// cancellation noise eps_machine/ds^2 would dominate any tolerance.
    fn residual(&self, u: &[f64], eps: f64, out: &mut [f64]) -> f64 {
        let g = &self.geo;
        let p = self.p;
        let e2 = eps * eps;
        let mut locals = vec![0.0f64; out.len()];
        let mut global: f64 = 0.0;
        for (k, &node) in self.node_of_unknown.iter().enumerate() {
            let i = node / g.nt;
            let j = node % g.nt;
            let mut flux_scale = 0.0;

            // s-faces (i±1/2, j)
            let mut fs = [0.0f64; 2];
            for (which, ii) in [(0usize, i - 1), (1usize, i)] {
                let us = (u[g.idx(ii + 1, j)] - u[g.idx(ii, j)]) / g.ds;
                let ub = self.ub_sface(u, ii, j);
                let gg = (us * us + ub * ub + e2).powf((p - 2.0) / 2.0);
                fs[which] = self.w_face[ii] * gg * us;
                flux_scale += fs[which].abs() / g.ds;
            }
            // theta-faces (i, j±1/2)
            let mut ft = [0.0f64; 2];
            for (which, step) in [(0usize, -1isize), (1usize, 1isize)] {
                if let Some(jp) = g.jn(j, step) {
                    let sign = step as f64;
                    let ut = sign * (u[g.idx(i, jp)] - u[g.idx(i, j)]) / g.dt;
                    let ub = self.ub_tface(u, i, j, jp);
                    let gg = (ut * ut + ub * ub + e2).powf((p - 2.0) / 2.0);
                    ft[which] = self.w_node[i] * gg * ut;
                    flux_scale += ft[which].abs() / g.dt;
                }
            }
            let zero_order = self.source[node] * phi_p(u[node], p);
            out[k] = -(fs[1] - fs[0]) / g.ds - (ft[1] - ft[0]) / g.dt + zero_order;
            locals[k] = flux_scale + zero_order.abs();
            global = global.max(locals[k]);
        }
        let floor = 1e-3 * global + 1e-300;
        let mut worst: f64 = 0.0;
        for k in 0..out.len() {
            worst = worst.max(out[k].abs() / (locals[k] + floor));
        }
        worst
    }

    /// Assemble the Jacobian in CSR form (9-point stencil).
    fn jacobian(&self, u: &[f64], eps: f64) -> Csr {
        let g = &self.geo;
        let p = self.p;
        let e2 = eps * eps;
        let n = self.node_of_unknown.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(12); n];

        // Stencil contributions of the theta-average at (ii, jj) used by an
        // s-face: d ut_central(ii, jj) / d u[...]
        let ut_stencil = |ii: usize, jj: usize, into: &mut Vec<(usize, f64)>| match (
            g.jn(jj, -1),
            g.jn(jj, 1),
        ) {
            (Some(jm), Some(jp)) => {
                into.push((g.idx(ii, jp), 1.0 / (2.0 * g.dt)));
                into.push((g.idx(ii, jm), -1.0 / (2.0 * g.dt)));
            }
            (None, Some(jp)) => {
                into.push((g.idx(ii, jp), 1.0 / g.dt));
                into.push((g.idx(ii, jj), -1.0 / g.dt));
            }
            (Some(jm), None) => {
                into.push((g.idx(ii, jj), 1.0 / g.dt));
                into.push((g.idx(ii, jm), -1.0 / g.dt));
            }
            (None, None) => {}
        };
        let us_stencil = |ii: usize, jj: usize, into: &mut Vec<(usize, f64)>| {
            if ii == 0 {
                into.push((g.idx(1, jj), 1.0 / g.ds));
                into.push((g.idx(0, jj), -1.0 / g.ds));
            } else if ii == g.nr - 1 {
                into.push((g.idx(ii, jj), 1.0 / g.ds));
                into.push((g.idx(ii - 1, jj), -1.0 / g.ds));
            } else {
                into.push((g.idx(ii + 1, jj), 1.0 / (2.0 * g.ds)));
                into.push((g.idx(ii - 1, jj), -1.0 / (2.0 * g.ds)));
            }
        };

        let mut scratch: Vec<(usize, f64)> = Vec::with_capacity(8);
        for (k, &node) in self.node_of_unknown.iter().enumerate() {
            let i = node / g.nt;
            let j = node % g.nt;
            let add = |col_node: usize, val: f64, rows: &mut Vec<Vec<(usize, f64)>>| {
                let uk = self.unknown_of_node[col_node];
                if uk != usize::MAX && val != 0.0 {
                    rows[k].push((uk, val));
                }
            };

            // s-faces: F = w_face * G(q) * us, q = us^2 + ub^2 + e2.
            // dF/dx = w [ (p-2) q^{(p-4)/2} (us dus + ub dub) us + G dus ].
            for (sgn, ii) in [(1.0f64, i), (-1.0f64, i - 1)] {
                let us = (u[g.idx(ii + 1, j)] - u[g.idx(ii, j)]) / g.ds;
                let ub = self.ub_sface(u, ii, j);
                let q = us * us + ub * ub + e2;
                let gg = q.powf((p - 2.0) / 2.0);
                let dg_dq = 0.5 * (p - 2.0) * q.powf((p - 4.0) / 2.0);
                let coef = -sgn / g.ds; // residual carries -(F_r - F_l)/ds
                                        // dus terms
                for (col, dus) in [(g.idx(ii + 1, j), 1.0 / g.ds), (g.idx(ii, j), -1.0 / g.ds)] {
                    let dfd = self.w_face[ii] * (2.0 * dg_dq * us * dus * us + gg * dus);
                    add(col, coef * dfd, &mut rows);
                }
                // dub terms: ub = (ut_central(ii,j) + ut_central(ii+1,j))/2
                scratch.clear();
                ut_stencil(ii, j, &mut scratch);
                ut_stencil(ii + 1, j, &mut scratch);
                for &(col, d) in &scratch {
                    let dub = 0.5 * d;
                    let dfd = self.w_face[ii] * 2.0 * dg_dq * ub * dub * us;
                    add(col, coef * dfd, &mut rows);
                }
            }
            // theta-faces: F = w_node[i] * G * ut.
            for (sgn, step) in [(1.0f64, 1isize), (-1.0f64, -1isize)] {
                if let Some(jp) = g.jn(j, step) {
                    let dirsign = step as f64;
                    let ut = dirsign * (u[g.idx(i, jp)] - u[g.idx(i, j)]) / g.dt;
                    let ub = self.ub_tface(u, i, j, jp);
                    let q = ut * ut + ub * ub + e2;
                    let gg = q.powf((p - 2.0) / 2.0);
                    let dg_dq = 0.5 * (p - 2.0) * q.powf((p - 4.0) / 2.0);
                    let coef = -sgn / g.dt;
                    for (col, dut) in [
                        (g.idx(i, jp), dirsign / g.dt),
                        (g.idx(i, j), -dirsign / g.dt),
                    ] {
                        let dfd = self.w_node[i] * (2.0 * dg_dq * ut * dut * ut + gg * dut);
                        add(col, coef * dfd, &mut rows);
                    }
                    scratch.clear();
                    us_stencil(i, j, &mut scratch);
                    us_stencil(i, jp, &mut scratch);
                    for &(col, d) in &scratch {
                        let dub = 0.5 * d;
                        let dfd = self.w_node[i] * 2.0 * dg_dq * ub * dub * ut;
                        add(col, coef * dfd, &mut rows);
                    }
                }
            }
            // zero-order term
            let du = (p - 1.0) * (u[node].abs() + 1e-300).powf(p - 2.0);
            add(node, self.source[node] * du, &mut rows);
        }
        Csr::from_rows(rows)
    }
}

/// Minimal CSR matrix with a BiCGSTAB solver (diagonal preconditioning).
struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    inv_diag: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut inv_diag = vec![1.0; n];
        row_ptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            // merge duplicate columns
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                if c == r && v.abs() > 1e-300 {
                    inv_diag[r] = 1.0 / v;
                }
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Csr {
            n,
            row_ptr,
            cols,
            vals,
            inv_diag,
        }
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    /// Largest |col - row| over all entries.
    fn half_bandwidth(&self) -> usize {
        let mut hb = 0usize;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                hb = hb.max(self.cols[k].abs_diff(r));
            }
        }
        hb
    }

    /// Direct banded LU solve (no pivoting; near-degenerate pivots get a
    /// tiny shift). Exact and deterministic; used whenever the band fits in
    /// memory comfortably.
    fn solve_banded(&self, rhs: &[f64], x: &mut [f64]) -> bool {
        let n = self.n;
        let hb = self.half_bandwidth();
        let width = 2 * hb + 1;
        if n.saturating_mul(width) > 32_000_000 {
            return false;
        }
        // band[r][hb + (c - r)] = A[r][c]
        let mut band = vec![0.0f64; n * width];
        let mut scale = 0.0f64;
        for r in 0..n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                band[r * width + (hb + c) - r] = self.vals[k];
                scale = scale.max(self.vals[k].abs());
            }
        }
        let tiny = 1e-14 * scale.max(1e-300);
        let mut b = rhs.to_vec();
        for k in 0..n {
            let mut piv = band[k * width + hb];
            if piv.abs() < tiny {
                piv = if piv >= 0.0 { tiny } else { -tiny };
                band[k * width + hb] = piv;
            }
            let i_end = (k + hb).min(n - 1);
            for i in k + 1..=i_end {
                // entry A[i][k] sits at band[i][hb + k - i]
                let a_ik = band[i * width + hb + k - i];
                if a_ik == 0.0 {
                    continue;
                }
                let m = a_ik / piv;
                band[i * width + hb + k - i] = 0.0;
                let j_end = (k + hb).min(n - 1);
                for j in k + 1..=j_end {
                    let a_kj = band[k * width + hb + j - k];
                    if a_kj != 0.0 {
                        band[i * width + hb + j - i] -= m * a_kj;
                    }
                }
                b[i] -= m * b[k];
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            let j_end = (i + hb).min(n - 1);
            for j in i + 1..=j_end {
                acc -= band[i * width + hb + j - i] * x[j];
            }
            x[i] = acc / band[i * width + hb];
        }
        x.iter().all(|v| v.is_finite())
    }

    /// BiCGSTAB with Jacobi preconditioning. Returns the achieved relative
    /// residual (best effort; callers treat the step as a descent direction).
    fn bicgstab(&self, rhs: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> f64 {
        let n = self.n;
        let mut r = vec![0.0; n];
        self.matvec(x, &mut r);
        for i in 0..n {
            r[i] = rhs[i] - r[i];
        }
        let r0 = r.clone();
        let norm0: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let mut rho = 1.0f64;
        let mut alpha = 1.0f64;
        let mut omega = 1.0f64;
        let mut v = vec![0.0; n];
        let mut pvec = vec![0.0; n];
        let mut best = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm0;
        let mut best_x = x.to_vec();
        let (mut s, mut t, mut phat, mut shat) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for _ in 0..max_iter {
            let rho_new: f64 = r0.iter().zip(&r).map(|(a, b)| a * b).sum();
            if !rho_new.is_finite() || rho_new.abs() < 1e-300 {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                pvec[i] = r[i] + beta * (pvec[i] - omega * v[i]);
            }
            for i in 0..n {
                phat[i] = pvec[i] * self.inv_diag[i];
            }
            self.matvec(&phat, &mut v);
            let denom: f64 = r0.iter().zip(&v).map(|(a, b)| a * b).sum();
            if !denom.is_finite() || denom.abs() < 1e-300 {
                break;
            }
            alpha = rho / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            let snorm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            if snorm / norm0 < rel_tol {
                for i in 0..n {
                    x[i] += alpha * phat[i];
                }
                return snorm / norm0;
            }
            for i in 0..n {
                shat[i] = s[i] * self.inv_diag[i];
            }
            self.matvec(&shat, &mut t);
            let tt: f64 = t.iter().map(|v| v * v).sum();
            if !tt.is_finite() || tt < 1e-300 {
                break;
            }
            omega = t.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / tt;
            for i in 0..n {
                x[i] += alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
            }
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm0;
            if !rn.is_finite() {
                break;
            }
            if rn < best {
                best = rn;
                best_x.copy_from_slice(x);
            }
            if rn < rel_tol {
                return rn;
            }
            if omega.abs() < 1e-300 {
                break;
            }
        }
        x.copy_from_slice(&best_x);
        best
    }
}

/// Solve the Dirichlet problem on `domain` with the given boundary data and
/// grid sizes (`n_r`, `n_theta` intervals). Sector rays carry zero data.
///
/// Damped Newton under epsilon continuation; converged solves have scaled
/// max-norm residual below `RESIDUAL_TOL` at `eps = EPS_FINAL` (the final
/// eps is recorded on the field). Negative iterates are projected onto a
/// small positive floor; persistent violation is an error.
pub fn solve_dirichlet_2d(
    params: &Params,
    potential: &Potential,
    domain: Domain2,
    data: &BoundaryData,
    n_r: usize,
    n_theta: usize,
) -> Result<PolarField> {
    solve_dirichlet_2d_eps(params, potential, domain, data, n_r, n_theta, EPS_FINAL)
}

/// Same as [`solve_dirichlet_2d`] with an explicit final regularization
/// (used by the continuation-stability checks).
pub fn solve_dirichlet_2d_eps(
    params: &Params,
    potential: &Potential,
    domain: Domain2,
    data: &BoundaryData,
    n_r: usize,
    n_theta: usize,
    eps_final: f64,
) -> Result<PolarField> {
    domain.validate()?;
    if params.d != 2 {
        return Err(Error::domain("the planar solver needs d = 2"));
    }
    let mut field = PolarField::from_fn(domain, *params, n_r, n_theta, |_, _| 1.0)?;
    let nt = field.n_theta();
    let nr = field.n_r();
    if data.inner.len() != nt || data.outer.len() != nt {
        return Err(Error::precondition(format!(
            "boundary data must carry {nt} theta samples (got {}, {})",
            data.inner.len(),
            data.outer.len()
        )));
    }
    let interior_positive = |tr: &[f64]| -> bool {
        let js: Box<dyn Iterator<Item = usize>> = if domain.is_periodic() {
            Box::new(0..nt)
        } else {
            Box::new(1..nt - 1)
        };
        let mut js = js;
        js.all(|j| tr[j] > 0.0)
    };
    if !interior_positive(&data.inner) || !interior_positive(&data.outer) {
        return Err(Error::precondition(
            "boundary data must be positive on the circles (zero allowed on sector rays only)",
        ));
    }

    // Initial iterate: power interpolation between the circles; sector rays
    // and their neighborhood blend toward zero through the data itself.
    for i in 0..nr {
        let t = i as f64 / (nr - 1) as f64;
        for j in 0..nt {
            let a = data.inner[j].max(1e-300);
            let b = data.outer[j].max(1e-300);
            field.values[i * nt + j] = a.powf(1.0 - t) * b.powf(t);
        }
    }
    // Impose boundary data exactly.
    for j in 0..nt {
        field.values[j] = data.inner[j];
        field.values[(nr - 1) * nt + j] = data.outer[j];
    }
    if !domain.is_periodic() {
        for i in 0..nr {
            field.values[i * nt] = 0.0;
            field.values[i * nt + nt - 1] = 0.0;
        }
    }

    let disc = Discretization::new(&field, potential);
    let n_unknowns = disc.node_of_unknown.len();
    if n_unknowns == 0 {
        return Err(Error::domain("grid too small: no interior nodes"));
    }
    let mut res = vec![0.0; n_unknowns];
    let mut res_trial = vec![0.0; n_unknowns];
    let mut delta = vec![0.0; n_unknowns];
    let u_scale = field
        .values
        .iter()
        .fold(0.0f64, |m, &x| m.max(x.abs()))
        .max(1e-300);
    let floor = 1e-12 * u_scale;

    // eps continuation in decade steps, warm-started.
    let mut eps_schedule = Vec::new();
    let mut e = EPS_START;
    while e > eps_final * 1.0000001 {
        eps_schedule.push(e);
        e *= 0.1;
    }
    eps_schedule.push(eps_final);

    let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut scaled = f64::INFINITY;
    for &eps in &eps_schedule {
        let mut projections = 0usize;
        scaled = disc.residual(&field.values, eps, &mut res);
        let mut r2 = norm2(&res);
        for _newton in 0..80 {
            if scaled < RESIDUAL_TOL {
                break;
            }
            let jac = disc.jacobian(&field.values, eps);
            for d in delta.iter_mut() {
                *d = 0.0;
            }
            // Banded LU is exact and cheap while the band fits; BiCGSTAB
            // covers larger grids.
            if !jac.solve_banded(&res, &mut delta) {
                for d in delta.iter_mut() {
                    *d = 0.0;
                }
                jac.bicgstab(&res, &mut delta, 1e-10, 2000 + 4 * n_unknowns);
            }
            // Armijo backtracking on the residual 2-norm; the scaled max
            // norm is only the convergence criterion.
            let mut alpha = 1.0f64;
            let mut accepted = false;
            for _back in 0..50 {
                let mut trial = field.values.clone();
                let mut projected = false;
                for (k, &node) in disc.node_of_unknown.iter().enumerate() {
                    let v = trial[node] - alpha * delta[k];
                    if v <= 0.0 {
                        trial[node] = floor;
                        projected = true;
                    } else {
                        trial[node] = v;
                    }
                }
                if projected {
                    projections += 1;
                    if projections > 400 {
                        return Err(Error::numeric(
                            "planar Newton kept leaving the positive cone",
                            eps,
                        ));
                    }
                }
                let trial_scaled = disc.residual(&trial, eps, &mut res_trial);
                let trial_r2 = norm2(&res_trial);
                if trial_r2 < r2 * (1.0 - 1e-4 * alpha) || trial_scaled < RESIDUAL_TOL {
                    field.values = trial;
                    std::mem::swap(&mut res, &mut res_trial);
                    scaled = trial_scaled;
                    r2 = trial_r2;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break; // stagnation at this eps; try the next stage anyway
            }
        }
    }
    if scaled > RESIDUAL_TOL {
        return Err(Error::numeric(
            format!("planar Newton stagnated at scaled residual {scaled:.3e}"),
            eps_final,
        ));
    }
    field.residual = scaled;
    field.epsilon_final = eps_final;
    field.refresh_gradient();
    Ok(field)
}

/// Scaled max-norm residual of an arbitrary field under the discrete
/// operator (with the field's own regularization; analytic fields use a
/// tiny eps). Useful to check separable solutions against the solver's
/// discretization.
pub fn discrete_residual(field: &PolarField, potential: &Potential, eps: f64) -> f64 {
    let disc = Discretization::new(field, potential);
    let mut out = vec![0.0; disc.node_of_unknown.len()];
    disc.residual(&field.values, eps, &mut out)
}

// ---------------------------------------------------------------------------
// Harnack quotients and regular-point probes
// ---------------------------------------------------------------------------

/// Sphere-wise extrema of the quotient of two positive fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarnackReport {
    pub radii: Vec<f64>,
    /// Sphere-wise infimum m_r of u/v.
    pub m_r: Vec<f64>,
    /// Sphere-wise supremum M_r of u/v.
    pub big_m_r: Vec<f64>,
    /// ratio_r = M_r / m_r (>= 1).
    pub ratio_r: Vec<f64>,
    /// Largest ratio over the probed range (the measured Harnack constant).
    pub uniform_bound: f64,
    /// m_r (resp. M_r) is monotone over the tail toward zeta.
    pub m_eventually_monotone: bool,
    pub big_m_eventually_monotone: bool,
    pub limit_class: crate::radial::LimitClass,
}

/// Sphere-wise inf/sup of `u/v` with eventual-monotonicity flags and the
/// generalized limit class toward `zeta`.
pub fn harnack_profile(u: &PolarField, v: &PolarField, zeta: Zeta) -> Result<HarnackReport> {
    if u.r_grid.len() != v.r_grid.len() || u.n_theta() != v.n_theta() {
        return Err(Error::precondition(
            "harnack profile needs fields on the same grid",
        ));
    }
    let nt = u.n_theta();
    let interior: Vec<usize> = if u.domain.is_periodic() {
        (0..nt).collect()
    } else {
        (1..nt - 1).collect()
    };
    let mut m_r = Vec::with_capacity(u.n_r());
    let mut big_m_r = Vec::with_capacity(u.n_r());
    for i in 0..u.n_r() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &j in &interior {
            let vv = v.at(i, j);
            if vv <= 0.0 {
                return Err(Error::precondition(
                    "quotient needs v > 0 on interior nodes",
                ));
            }
            let q = u.at(i, j) / vv;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        m_r.push(lo);
        big_m_r.push(hi);
    }
    let ratio_r: Vec<f64> = m_r.iter().zip(&big_m_r).map(|(&m, &mm)| mm / m).collect();
    let uniform_bound = ratio_r.iter().fold(1.0f64, |a, &b| a.max(b));

    // Tail monotonicity along the radius ordering toward zeta.
    let tail = (u.n_r() / 2).max(2);
    let tail_of = |vals: &[f64]| -> Vec<f64> {
        match zeta {
            Zeta::Origin => vals.iter().take(tail).rev().copied().collect(),
            Zeta::Infinity => vals.iter().skip(vals.len() - tail).copied().collect(),
        }
    };
    let mono = |vals: &[f64]| -> bool {
        vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10))
            || vals.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-10))
    };
    let m_tail = tail_of(&m_r);
    let mm_tail = tail_of(&big_m_r);

    // Limit class from the geometric mean of the quotient.
    let geo: Vec<f64> = m_r
        .iter()
        .zip(&big_m_r)
        .map(|(&a, &b)| (a * b).sqrt())
        .collect();
    let limit_class = quotient_limit_class(&u.r_grid, &geo, &ratio_r, zeta);

    Ok(HarnackReport {
        radii: u.r_grid.clone(),
        m_r,
        big_m_r,
        ratio_r,
        uniform_bound,
        m_eventually_monotone: mono(&m_tail),
        big_m_eventually_monotone: mono(&mm_tail),
        limit_class,
    })
}

/// Generalized-limit verdict for a sphere-wise quotient.
///
/// Divergence of the quotient's magnitude decides zero/infinite: the value
/// at the zeta end is compared against the mid-domain value (factor 10).
/// Otherwise a finite limit needs the sphere-wise ratio to collapse to 1
/// within `RATIO_TOL` over the last decade while still shrinking: the
/// uniform-Harnack squeeze that makes the limit exist. Any finite run only
/// supports trends, so everything else stays undetermined.
fn quotient_limit_class(
    radii: &[f64],
    q: &[f64],
    ratio: &[f64],
    zeta: Zeta,
) -> crate::radial::LimitClass {
    use crate::radial::LimitClass;
    let n = radii.len();
    if n < 8 {
        return LimitClass::Undetermined;
    }
    let (i_end, i_far) = match zeta {
        Zeta::Origin => (0usize, n - 1),
        Zeta::Infinity => (n - 1, 0usize),
    };
    let i_mid = n / 2;
    let growth = q[i_end] / q[i_mid].max(1e-300);
    if growth > 10.0 {
        return LimitClass::Infinite;
    }
    if growth < 0.1 {
        return LimitClass::Zero;
    }
    // Ratio tail over the last decade toward zeta.
    let r_end = radii[i_end];
    let in_tail = |r: f64| match zeta {
        Zeta::Origin => r <= r_end * 10.0,
        Zeta::Infinity => r >= r_end / 10.0,
    };
    let tail_ok = radii
        .iter()
        .zip(ratio)
        .filter(|&(&r, _)| in_tail(r))
        .all(|(_, &x)| x <= 1.0 + RATIO_TOL);
    let shrinking = ratio[i_end] <= ratio[i_far] * (1.0 + 1e-12);
    if tail_ok && shrinking {
        LimitClass::Finite
    } else {
        LimitClass::Undetermined
    }
}

/// Regular-point probe verdict with the supporting profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub zeta: Zeta,
    pub limit_class: crate::radial::LimitClass,
    /// Limit estimate when finite.
    pub limit_value: Option<f64>,
    /// M_r / m_r at the zeta end.
    pub final_ratio: f64,
    /// The ratio is still shrinking toward zeta across the last decade.
    pub ratio_shrinking: bool,
    pub harnack: HarnackReport,
    /// Evidence status: a finite computation supports trends, not limits.
    pub status: String,
}

/// Decide among {finite, zero, infinite, undetermined} for the quotient
/// u/v toward `zeta`. A finite limit requires `M_r/m_r -> 1` within
/// `1 + RATIO_TOL` over the last decade, still shrinking.
pub fn regular_point_probe(u: &PolarField, v: &PolarField, zeta: Zeta) -> Result<ProbeReport> {
    use crate::radial::LimitClass;
    let harnack = harnack_profile(u, v, zeta)?;
    let n = harnack.radii.len();
    let (final_ratio, first_ratio, q_end) = match zeta {
        Zeta::Origin => (
            harnack.ratio_r[0],
            harnack.ratio_r[n - 1],
            (harnack.m_r[0] * harnack.big_m_r[0]).sqrt(),
        ),
        Zeta::Infinity => (
            harnack.ratio_r[n - 1],
            harnack.ratio_r[0],
            (harnack.m_r[n - 1] * harnack.big_m_r[n - 1]).sqrt(),
        ),
    };
    let ratio_shrinking = final_ratio <= first_ratio * (1.0 + 1e-12);
    let mut limit_class = harnack.limit_class;
    if limit_class == LimitClass::Finite && !(final_ratio <= 1.0 + RATIO_TOL && ratio_shrinking) {
        limit_class = LimitClass::Undetermined;
    }
    let status = format!(
        "evidence over [{:.3e}, {:.3e}]: finite runs support trends, not limits",
        harnack.radii[0],
        harnack.radii[n - 1]
    );
    Ok(ProbeReport {
        zeta,
        limit_class,
        limit_value: (limit_class == LimitClass::Finite).then_some(q_end),
        final_ratio,
        ratio_shrinking,
        harnack,
        status,
    })
}

// ---------------------------------------------------------------------------
// separable-solution checks and critical sets
// ---------------------------------------------------------------------------

/// Two-route check of separable sector solutions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorCheckReport {
    /// Scaled residual of `r^beta phi(theta)` under the discrete operator,
    /// for the regular and singular exponents.
    pub residual_regular: f64,
    pub residual_singular: f64,
    /// Max relative gap between the regular ansatz and a full 2-D solve
    /// with the ansatz's boundary trace.
    pub solve_gap: f64,
}

/// Evaluate `u = r^beta phi(theta)` on the sector grid for both exponents
/// and report the discrete residuals, then solve the Dirichlet problem with
/// the regular ansatz's trace and report the field-vs-ansatz gap.
pub fn sector_separable_check(
    exps: &SectorExponents,
    p: f64,
    r_lo: f64,
    r_hi: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<SectorCheckReport> {
    let params = Params::new(p, 2)?;
    let domain = Domain2::Sector {
        r_lo,
        r_hi,
        aperture: exps.aperture,
    };
    let reg = PolarField::separable(
        domain,
        params,
        n_r,
        n_theta,
        exps.beta_regular,
        &exps.profile_regular,
    )?;
    let sing = PolarField::separable(
        domain,
        params,
        n_r,
        n_theta,
        exps.beta_singular,
        &exps.profile_singular,
    )?;
    let zero = Potential::zero();
    let residual_regular = discrete_residual(&reg, &zero, 1e-12);
    let residual_singular = discrete_residual(&sing, &zero, 1e-12);

    let nt = reg.n_theta();
    let data = BoundaryData {
        inner: (0..nt).map(|j| reg.at(0, j)).collect(),
        outer: (0..nt).map(|j| reg.at(reg.n_r() - 1, j)).collect(),
    };
    let solved = solve_dirichlet_2d(&params, &zero, domain, &data, n_r, n_theta)?;
    let solve_gap = solved.relative_gap(&reg);
    Ok(SectorCheckReport {
        residual_regular,
        residual_singular,
        solve_gap,
    })
}

/// Critical-set diagnostics of a field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalSetReport {
    pub n_nodes: usize,
    pub n_critical: usize,
    /// Connected components of the complement of the critical set
    /// (4-neighbor connectivity, theta wraps on annuli).
    pub complement_components: usize,
    /// The critical set touches the domain boundary.
    pub touches_boundary: bool,
}

/// Mask statistics, connectivity of the nondegeneracy set and boundary
/// contact, computed from the field's critical-set mask.
pub fn critical_set_diagnostics(field: &PolarField) -> CriticalSetReport {
    let nr = field.n_r();
    let nt = field.n_theta();
    let periodic = field.domain.is_periodic();
    let mask = &field.critical_set_mask;
    let n_critical = mask.iter().filter(|&&m| m).count();

    // BFS over the complement.
    let mut seen = vec![false; nr * nt];
    let mut components = 0usize;
    let mut stack = Vec::new();
    for start in 0..nr * nt {
        if mask[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(node) = stack.pop() {
            let i = node / nt;
            let j = node % nt;
            let mut push = |ii: isize, jj: isize| {
                if ii < 0 || ii >= nr as isize {
                    return;
                }
                let jj = if periodic {
                    jj.rem_euclid(nt as isize)
                } else {
                    if jj < 0 || jj >= nt as isize {
                        return;
                    }
                    jj
                };
                let k = ii as usize * nt + jj as usize;
                if !mask[k] && !seen[k] {
                    seen[k] = true;
                    stack.push(k);
                }
            };
            push(i as isize - 1, j as isize);
            push(i as isize + 1, j as isize);
            push(i as isize, j as isize - 1);
            push(i as isize, j as isize + 1);
        }
    }
    let touches_boundary = (0..nt).any(|j| mask[j] || mask[(nr - 1) * nt + j])
        || (!periodic && (0..nr).any(|i| mask[i * nt] || mask[i * nt + nt - 1]));
    CriticalSetReport {
        n_nodes: nr * nt,
        n_critical,
        complement_components: components,
        touches_boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p2() -> Params {
        Params::new(2.0, 2).unwrap()
    }

    #[test]
    fn harmonic_r_cos_theta_on_annulus() {
        // p = 2: u = r cos(theta) + 3 is harmonic (shifted to stay positive).
        let params = p2();
        let domain = Domain2::Annulus {
            r_lo: 0.5,
            r_hi: 2.0,
        };
        let exact = |r: f64, t: f64| r * t.cos() + 3.0;
        let data = BoundaryData::from_fns(&domain, 64, |t| exact(0.5, t), |t| exact(2.0, t));
        let field = solve_dirichlet_2d(&params, &Potential::zero(), domain, &data, 48, 64).unwrap();
        let oracle = PolarField::from_fn(domain, params, 48, 64, exact).unwrap();
        let gap = field.relative_gap(&oracle);
        assert!(gap < 2e-4, "gap {gap}");
        assert!(field.residual < RESIDUAL_TOL);
    }

    #[test]
    fn separable_harmonic_on_sector() {
        // p = 2, quarter plane: u = r^2 sin(2 theta).
        let params = p2();
        let domain = Domain2::Sector {
            r_lo: 1.0,
            r_hi: 4.0,
            aperture: PI / 2.0,
        };
        let exact = |r: f64, t: f64| r.powf(2.0) * (2.0 * t).sin();
        let data = BoundaryData::from_fns(&domain, 48, |t| exact(1.0, t), |t| exact(4.0, t));
        let field = solve_dirichlet_2d(&params, &Potential::zero(), domain, &data, 48, 48).unwrap();
        let oracle = PolarField::from_fn(domain, params, 48, 48, exact).unwrap();
        let gap = field.relative_gap(&oracle);
        assert!(gap < 5e-4, "gap {gap}");
    }

    #[test]
    fn cross_solver_agreement_with_radial() {
        // Radial Hardy problem solved by both the 1-D and the 2-D paths.
        let params = p2();
        let lambda = 0.5 * crate::exponents::hardy_constant(&params);
        let potential = Potential::hardy(lambda);
        let (r_lo, r_hi) = (1.0, 8.0);
        let radial =
            crate::radial::bvp_dirichlet(&params, &potential, r_lo, r_hi, 1.0, 0.5, 1024).unwrap();
        let domain = Domain2::Annulus { r_lo, r_hi };
        let data = BoundaryData::radial(&domain, 32, 1.0, 0.5);
        let field = solve_dirichlet_2d(&params, &potential, domain, &data, 96, 32).unwrap();
        let mut worst: f64 = 0.0;
        for (i, &r) in field.r_grid.iter().enumerate() {
            let v1 = radial.value_at(r).unwrap();
            for j in 0..field.n_theta() {
                worst = worst.max((field.at(i, j) - v1).abs() / v1);
            }
        }
        assert!(worst < 1e-3, "cross-solver gap {worst}");
    }

    #[test]
    fn p_three_sector_solves_and_matches_separable() {
        let exps = crate::exponents::sector_exponents(3.0, PI / 2.0).unwrap();
        let rep = sector_separable_check(&exps, 3.0, 1.0, 4.0, 64, 64).unwrap();
        assert!(
            rep.residual_regular < 1e-3,
            "residual {}",
            rep.residual_regular
        );
        assert!(rep.solve_gap < 1e-3, "gap {}", rep.solve_gap);
    }

    #[test]
    fn rotational_equivariance_on_annulus() {
        let params = Params::new(3.0, 2).unwrap();
        let domain = Domain2::Annulus {
            r_lo: 1.0,
            r_hi: 4.0,
        };
        let nt = 32;
        let bump = |t: f64| 2.0 + (t).cos();
        let data = BoundaryData::from_fns(&domain, nt, bump, |_| 1.0);
        let field = solve_dirichlet_2d(&params, &Potential::zero(), domain, &data, 40, nt).unwrap();
        // Rotate boundary data by 3 grid steps.
        let shift = 3usize;
        let rot = |tr: &[f64]| -> Vec<f64> { (0..nt).map(|j| tr[(j + nt - shift) % nt]).collect() };
        let data_rot = BoundaryData {
            inner: rot(&data.inner),
            outer: rot(&data.outer),
        };
        let field_rot =
            solve_dirichlet_2d(&params, &Potential::zero(), domain, &data_rot, 40, nt).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..field.n_r() {
            for j in 0..nt {
                let a = field.at(i, j);
                let b = field_rot.at(i, (j + shift) % nt);
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-7, "equivariance gap {worst}");
    }

    #[test]
    fn discrete_wcp_raising_data_raises_solution() {
        let params = p2();
        let domain = Domain2::Annulus {
            r_lo: 1.0,
            r_hi: 4.0,
        };
        let data = BoundaryData::from_fns(&domain, 24, |t| 1.0 + 0.2 * t.sin(), |_| 1.0);
        let lifted = BoundaryData {
            inner: data.inner.iter().map(|v| v * 1.3).collect(),
            outer: data.outer.iter().map(|v| v + 0.1).collect(),
        };
        let potential = Potential::hardy(0.1);
        let low = solve_dirichlet_2d(&params, &potential, domain, &data, 32, 24).unwrap();
        let high = solve_dirichlet_2d(&params, &potential, domain, &lifted, 32, 24).unwrap();
        for k in 0..low.values.len() {
            assert!(high.values[k] >= low.values[k] - 1e-8);
        }
    }

    #[test]
    fn harnack_and_probe_on_perturbed_radial_data() {
        // Hardy potential, two angularly perturbed data on the outer circle
        // and radial data on the inner one (solutions near a singular point
        // carry no data there): the quotient flattens toward the origin.
        let params = p2();
        let lambda = 0.5 * crate::exponents::hardy_constant(&params);
        let potential = Potential::hardy(lambda);
        let domain = Domain2::Annulus {
            r_lo: 2e-3,
            r_hi: 1.0,
        };
        let nt = 24;
        let mk = |inner: f64, amp: f64| {
            let data =
                BoundaryData::from_fns(&domain, nt, |_| inner, |t| 1.0 + amp * (2.0 * t).cos());
            solve_dirichlet_2d(&params, &potential, domain, &data, 128, nt).unwrap()
        };
        let u = mk(1.0, 0.3);
        let v = mk(0.5, -0.2);
        let rep = harnack_profile(&u, &v, Zeta::Origin).unwrap();
        assert!(rep.uniform_bound < 3.0, "bound {}", rep.uniform_bound);
        // ratio decreases toward the singular point
        assert!(rep.ratio_r[0] < rep.ratio_r[rep.ratio_r.len() - 1]);
        let probe = regular_point_probe(&u, &v, Zeta::Origin).unwrap();
        assert!(probe.ratio_shrinking);
        // spherically symmetric potential, perturbed data: finite limit.
        assert_eq!(probe.limit_class, crate::radial::LimitClass::Finite);

        // identical fields: ratio identically 1, finite limit.
        let rep = harnack_profile(&u, &u, Zeta::Origin).unwrap();
        assert!((rep.uniform_bound - 1.0).abs() < 1e-12);
        let probe = regular_point_probe(&u, &u, Zeta::Origin).unwrap();
        assert_eq!(probe.limit_class, crate::radial::LimitClass::Finite);

        // doubled field: finite limit 2.
        let mut w = u.clone();
        for x in &mut w.values {
            *x *= 2.0;
        }
        let probe = regular_point_probe(&w, &u, Zeta::Origin).unwrap();
        assert_eq!(probe.limit_class, crate::radial::LimitClass::Finite);
        assert!((probe.limit_value.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn probe_separates_opposite_sector_exponents() {
        let exps = crate::exponents::sector_exponents(2.0, PI / 2.0).unwrap();
        let params = p2();
        let domain = Domain2::Sector {
            r_lo: 1e-2,
            r_hi: 1.0,
            aperture: PI / 2.0,
        };
        let u = PolarField::separable(
            domain,
            params,
            96,
            32,
            exps.beta_singular,
            &exps.profile_singular,
        )
        .unwrap();
        let v = PolarField::separable(
            domain,
            params,
            96,
            32,
            exps.beta_regular,
            &exps.profile_regular,
        )
        .unwrap();
        let probe = regular_point_probe(&u, &v, Zeta::Origin).unwrap();
        assert_eq!(probe.limit_class, crate::radial::LimitClass::Infinite);
    }

    #[test]
    fn critical_set_cases() {
        let params = p2();
        let domain = Domain2::Annulus {
            r_lo: 1.0,
            r_hi: 4.0,
        };
        // radial power: no critical points
        let f = PolarField::from_fn(domain, params, 24, 24, |r, _| r.powf(1.5)).unwrap();
        let rep = critical_set_diagnostics(&f);
        assert_eq!(rep.n_critical, 0);
        assert_eq!(rep.complement_components, 1);
        // constant: everything is critical
        let f = PolarField::from_fn(domain, params, 24, 24, |_, _| 2.0).unwrap();
        let rep = critical_set_diagnostics(&f);
        assert_eq!(rep.n_critical, rep.n_nodes);
        assert!(rep.touches_boundary);
        // separable profile: empty critical set
        let exps = crate::exponents::sector_exponents(2.0, PI).unwrap();
        let sec = Domain2::Sector {
            r_lo: 1.0,
            r_hi: 4.0,
            aperture: PI,
        };
        let f = PolarField::separable(
            sec,
            params,
            24,
            24,
            exps.beta_regular,
            &exps.profile_regular,
        )
        .unwrap();
        let rep = critical_set_diagnostics(&f);
        assert_eq!(rep.n_critical, 0);
    }

    #[test]
    fn eps_continuation_is_stable() {
        for p in [1.5, 3.0] {
            let params = Params::new(p, 2).unwrap();
            let domain = Domain2::Annulus {
                r_lo: 1.0,
                r_hi: 4.0,
            };
            let data = BoundaryData::from_fns(&domain, 24, |t| 2.0 + t.sin(), |_| 1.0);
            let a =
                solve_dirichlet_2d_eps(&params, &Potential::zero(), domain, &data, 32, 24, 1e-8)
                    .unwrap();
            let b =
                solve_dirichlet_2d_eps(&params, &Potential::zero(), domain, &data, 32, 24, 5e-9)
                    .unwrap();
            let gap = a.relative_gap(&b);
            assert!(gap < 1e-6, "p={p}: eps sensitivity {gap}");
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for (p, periodic) in [(3.0, true), (1.5, true), (3.0, false)] {
            let params = Params::new(p, 2).unwrap();
            let domain = if periodic {
                Domain2::Annulus {
                    r_lo: 1.0,
                    r_hi: 2.0,
                }
            } else {
                Domain2::Sector {
                    r_lo: 1.0,
                    r_hi: 2.0,
                    aperture: 1.0,
                }
            };
            let mut field = PolarField::from_fn(domain, params, 6, 6, |r, t| {
                2.0 + 0.3 * r * (t + 0.2).sin() + 0.1 * r * r
            })
            .unwrap();
            field.refresh_gradient();
            let potential = Potential::hardy(0.05);
            let disc = Discretization::new(&field, &potential);
            let n = disc.node_of_unknown.len();
            let eps = 1e-2;
            let jac = disc.jacobian(&field.values, eps);
            let mut base = vec![0.0; n];
            disc.residual(&field.values, eps, &mut base);
            let h = 1e-7;
            for col in 0..n {
                let node = disc.node_of_unknown[col];
                let mut pert = field.values.clone();
                pert[node] += h;
                let mut rp = vec![0.0; n];
                disc.residual(&pert, eps, &mut rp);
                for row in 0..n {
                    let fd = (rp[row] - base[row]) / h;
                    let mut an = 0.0;
                    for k in jac.row_ptr[row]..jac.row_ptr[row + 1] {
                        if jac.cols[k] == col {
                            an = jac.vals[k];
                        }
                    }
                    assert!(
                        (fd - an).abs() < 1e-4 * (1.0 + fd.abs().max(an.abs())),
                        "p={p} periodic={periodic} J[{row},{col}]: fd {fd} vs analytic {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = p2();
        let domain = Domain2::Annulus {
            r_lo: 1.0,
            r_hi: 4.0,
        };
        let data = BoundaryData::radial(&domain, 16, 1.0, 0.0); // zero on a circle
        assert!(matches!(
            solve_dirichlet_2d(&params, &Potential::zero(), domain, &data, 16, 16),
            Err(Error::Precondition(_))
        ));
        let params3 = Params::new(2.0, 3).unwrap();
        let data = BoundaryData::radial(&domain, 16, 1.0, 1.0);
        assert!(solve_dirichlet_2d(&params3, &Potential::zero(), domain, &data, 16, 16).is_err());
    }
}
