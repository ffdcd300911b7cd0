//! Numerical toolkit for quasilinear equations of p-Laplacian type,
//! `-lap_p(u) + V |u|^{p-2} u = 0`, with potentials carrying a Fuchsian-type
//! singularity (`|x|^p |V(x)|` bounded near the singular point).
//!
//! The crate computes and cross-checks the concrete objects attached to such
//! equations:
//!
//! - **Exponents** ([`exponents`]): the Hardy constant `c_H = |(p-d)/p|^p`,
//!   the two power exponents `gamma_-(lambda) < gamma_* < gamma_+(lambda)`
//!   solving the scalar characteristic equation, the fundamental solution of
//!   the p-Laplacian, and separable plane-sector exponents `beta_0 < 0 < beta_inf`
//!   obtained by angular shooting.
//! - **Potentials and dilation** ([`potential`]): a structured radial
//!   potential model (Hardy term, power shells, sampled remainder, optional
//!   angular factor), the scaling `V_R(x) = R^p V(R x)`, weak-star probes of
//!   dilation limits against smooth bump tests, detection of weak Fuchsian
//!   singularities and the `L^q` integrability criterion.
//! - **Radial solving** ([`radial`]): initial value and Dirichlet problems
//!   for the radial reduction, minimal-growth solutions by annulus
//!   exhaustion, asymptotic classification (bounded limit / power / log),
//!   quotient profiles, scaling limits and limit checks for nonnegative
//!   potentials.
//! - **Variational identities** ([`variational`]): the energy functional,
//!   the Picone Lagrangian, the inversion (Kelvin-type) transform
//!   `K[u](x) = u(x/|x|^2)` and the weighted operator it produces, weighted
//!   condenser capacity in closed form against convex minimization, and flux
//!   constants that are invariant across cutoff choices.
//! - **Planar solver** ([`annulus`]): a finite-difference Newton solver in
//!   polar coordinates for annuli and sectors (d = 2), sphere-wise Harnack
//!   quotient profiles, regular-point probes, separable-solution checks and
//!   critical-set diagnostics.
//! - **Scenarios and reports** ([`scenario`], [`acceptance`]): a small text
//!   scenario format, deterministic CSV/JSON artifact emission, and the
//!   `verify` suite that runs every shipped acceptance check.
//!
//! Everything is pure computation on immutable inputs; solves are
//! independent and safe to run concurrently. The `plaplace` binary is a thin
//! wrapper over [`scenario::run`] and [`acceptance::verify_suite`]; each
//! runnable example under `examples/` exercises one capability end to end.

pub mod error;
pub mod expr;
pub mod num;

pub mod acceptance;
pub mod annulus;
pub mod exponents;
pub mod potential;
pub mod radial;
pub mod scenario;
pub mod variational;

pub use error::{Error, Result};
pub use exponents::Params;

/// The singular point a computation looks at: the origin or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zeta {
    #[serde(rename = "0")]
    Origin,
    #[serde(rename = "inf")]
    Infinity,
}

impl std::fmt::Display for Zeta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Zeta::Origin => write!(f, "0"),
            Zeta::Infinity => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Zeta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Zeta> {
        match s.trim() {
            "0" | "origin" | "zero" => Ok(Zeta::Origin),
            "inf" | "infinity" | "oo" => Ok(Zeta::Infinity),
            other => Err(Error::Usage(format!(
                "zeta must be 0 or inf, got '{other}'"
            ))),
        }
    }
}
