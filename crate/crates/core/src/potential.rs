//! Structured radial potentials, the Fuchsian bound, the dilation
//! `V_R(x) = R^p V(R x)`, weak-star probes of dilation limits, weak
//! Fuchsian certification and the `L^q` integrability criterion.
//!
//! A potential is a sum of three structured parts, optionally multiplied by
//! a bounded angular factor for planar (d = 2) use:
//!
//! ```text
//! V(r, theta) = [ -lambda r^{-p} + sum_k a_k r^{s_k} 1_{[lo_k, hi_k)}(r) + table(r) ] * g(theta)
//! ```
//!
//! The structure is closed under dilation, which makes the scaling map exact:
//! the Hardy term is a fixed point, a shell `(lo, hi, a, s)` maps to
//! `(lo/R, hi/R, a R^{p+s}, s)`, and a sampled table rescales pointwise.
//!
//! Weak-star limits along a dilation sequence are undecidable from finitely
//! many tests, so the probe reports evidence: integrals of the scaled
//! potential against a fixed family of smooth radial bumps supported in
//! `[2^-3, 2^3]`, compared with the candidate limit at tolerance 1e-6.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Params;
use crate::expr::Expr;
use crate::num::{log_grid, simpson_log, unit_sphere_area};
use crate::Zeta;

/// Probe window (in units of r) on which candidates are compared: `[2^-3, 2^3]`.
pub const PROBE_WINDOW: (f64, f64) = (0.125, 8.0);
/// Evidence tolerance for weak-star deviations and zero-candidate tests.
pub const WEAKSTAR_TOL: f64 = 1e-6;

/// One radial piece `a * r^s` active on `[r_lo, r_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub r_lo: f64,
    pub r_hi: f64,
    pub amplitude: f64,
    pub power: f64,
}

/// Sampled radial values, interpolated piecewise-linearly in log r and
/// extended by zero outside the tabulated range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledTable {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<SampledTable> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::domain(
                "sampled table needs >= 2 matched (r, V) pairs",
            ));
        }
        if radii.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
            return Err(Error::domain(
                "sampled radii must be positive and strictly increasing",
            ));
        }
        Ok(SampledTable { radii, values })
    }

    fn eval(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r < self.radii[0] || r > self.radii[n - 1] {
            return 0.0;
        }
        let idx = match self.radii.binary_search_by(|a| a.partial_cmp(&r).unwrap()) {
            Ok(i) => return self.values[i],
            Err(i) => i,
        };
        let (r0, r1) = (self.radii[idx - 1], self.radii[idx]);
        let t = (r / r0).ln() / (r1 / r0).ln();
        self.values[idx - 1] * (1.0 - t) + self.values[idx] * t
    }
}

/// Structured radial potential, optionally with an angular factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Potential {
    /// Coefficient `lambda` of the Hardy term `-lambda |x|^{-p}`.
    pub hardy_coeff: f64,
    pub shells: Vec<Shell>,
    pub sampled: Option<SampledTable>,
    /// Bounded factor `g(theta)` multiplying the radial part (d = 2 only);
    /// absent means 1.
    pub angular: Option<Expr>,
}

impl Potential {
    /// The zero potential (pure p-Laplace equation).
    pub fn zero() -> Potential {
        Potential::default()
    }

    /// Pure Hardy potential `-lambda |x|^{-p}`.
    pub fn hardy(lambda: f64) -> Potential {
        Potential {
            hardy_coeff: lambda,
            ..Potential::default()
        }
    }

    pub fn with_shell(mut self, r_lo: f64, r_hi: f64, amplitude: f64, power: f64) -> Potential {
        self.shells.push(Shell {
            r_lo,
            r_hi,
            amplitude,
            power,
        });
        self
    }

    pub fn with_sampled(mut self, table: SampledTable) -> Potential {
        self.sampled = Some(table);
        self
    }

    pub fn with_angular(mut self, g: Expr) -> Potential {
        self.angular = Some(g);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.shells {
            if !(s.r_lo < s.r_hi) || s.r_lo < 0.0 {
                return Err(Error::domain(format!(
                    "shell needs 0 <= r_lo < r_hi, got [{}, {})",
                    s.r_lo, s.r_hi
                )));
            }
        }
        Ok(())
    }

    /// Radial factor of the potential at `r`.
    pub fn eval_radial(&self, params: &Params, r: f64) -> f64 {
        let mut v = 0.0;
        if self.hardy_coeff != 0.0 {
            v -= self.hardy_coeff * r.powf(-params.p);
        }
        for s in &self.shells {
            if r >= s.r_lo && r < s.r_hi {
                v += s.amplitude * r.powf(s.power);
            }
        }
        if let Some(t) = &self.sampled {
            v += t.eval(r);
        }
        v
    }

    /// Value at `(r, theta)`. Without `theta` the angular factor counts as 1.
    pub fn evaluate(&self, params: &Params, r: f64, theta: Option<f64>) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!(
                "potential evaluation needs r > 0, got {r}"
            )));
        }
        let g = match (&self.angular, theta) {
            (Some(expr), Some(t)) => expr.eval(r, t),
            _ => 1.0,
        };
        Ok(self.eval_radial(params, r) * g)
    }

    /// Largest |g| over a theta grid (1 when no angular factor).
    fn angular_bound(&self) -> f64 {
        match &self.angular {
            None => 1.0,
            Some(g) => (0..256)
                .map(|j| g.eval(1.0, j as f64 * std::f64::consts::TAU / 256.0).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Estimate of the Fuchsian constant `sup r^p |V|` over a union of
    /// annuli, sampled on `grid_n` log-spaced nodes per annulus (plus every
    /// shell and table breakpoint).
    pub fn fuchsian_bound_on(
        &self,
        params: &Params,
        annuli: &[(f64, f64)],
        grid_n: usize,
    ) -> Result<f64> {
        let gmax = self.angular_bound();
        let mut worst: f64 = 0.0;
        for &(r_lo, r_hi) in annuli {
            if !(0.0 < r_lo && r_lo < r_hi) {
                return Err(Error::domain(format!(
                    "annulus needs 0 < r_lo < r_hi, got ({r_lo}, {r_hi})"
                )));
            }
            let mut probe = |r: f64| {
                let v = self.eval_radial(params, r).abs() * gmax;
                worst = worst.max(r.powf(params.p) * v);
            };
            for r in log_grid(r_lo, r_hi, grid_n.max(8)) {
                probe(r);
            }
            // Shell edges are jump points; sample just inside each.
            for s in &self.shells {
                for edge in [s.r_lo, s.r_hi] {
                    let inside = edge.clamp(r_lo, r_hi).max(s.r_lo * (1.0 + 1e-12));
                    if inside > 0.0 && inside >= r_lo && inside <= r_hi {
                        probe(inside.min(s.r_hi * (1.0 - 1e-12)).max(r_lo));
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Single-annulus Fuchsian bound.
    pub fn fuchsian_bound(
        &self,
        params: &Params,
        r_lo: f64,
        r_hi: f64,
        grid_n: usize,
    ) -> Result<f64> {
        self.fuchsian_bound_on(params, &[(r_lo, r_hi)], grid_n)
    }

    /// Exact structural rescaling `V_R(x) = R^p V(R x)`.
    ///
    /// Hardy coefficient is a fixed point; a shell `(lo, hi, a, s)` maps to
    /// `(lo/R, hi/R, a R^{p+s}, s)`; the sampled table rescales pointwise.
    pub fn scale(&self, radius: f64, params: &Params) -> Potential {
        let p = params.p;
        let shells = self
            .shells
            .iter()
            .map(|s| Shell {
                r_lo: s.r_lo / radius,
                r_hi: s.r_hi / radius,
                amplitude: s.amplitude * radius.powf(p + s.power),
                power: s.power,
            })
            .collect();
        let sampled = self.sampled.as_ref().map(|t| SampledTable {
            radii: t.radii.iter().map(|&r| r / radius).collect(),
            values: t.values.iter().map(|&v| v * radius.powf(p)).collect(),
        });
        Potential {
            hardy_coeff: self.hardy_coeff,
            shells,
            sampled,
            angular: self.angular.clone(),
        }
    }

    /// Radial breakpoints (shell edges, table nodes) inside `[a, b]`,
    /// used to split quadratures at discontinuities.
    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = vec![a, b];
        for s in &self.shells {
            for e in [s.r_lo, s.r_hi] {
                if e > a && e < b {
                    pts.push(e);
                }
            }
        }
        if let Some(t) = &self.sampled {
            for &r in &t.radii {
                if r > a && r < b {
                    pts.push(r);
                }
            }
        }
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15 * y.abs());
        pts
    }

    /// True when the radial part is below `tol` in the `sup r^p |V|` sense on
    /// the probe window.
    pub fn is_negligible_on_window(&self, params: &Params, tol: f64) -> bool {
        self.fuchsian_bound(params, PROBE_WINDOW.0, PROBE_WINDOW.1, 512)
            .map(|b| b < tol)
            .unwrap_or(false)
    }
}

/// Monotone sequence of dilation radii converging to 0 or infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DilationSequence {
    pub radii: Vec<f64>,
    pub zeta: Zeta,
}

impl DilationSequence {
    pub fn new(radii: Vec<f64>, zeta: Zeta) -> Result<DilationSequence> {
        if radii.len() < 2 {
            return Err(Error::domain("dilation sequence needs at least 2 radii"));
        }
        let ok = match zeta {
            Zeta::Origin => radii.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0),
            Zeta::Infinity => radii.windows(2).all(|w| w[1] > w[0] && w[0] > 0.0),
        };
        if !ok {
            return Err(Error::domain(
                "dilation radii must be strictly monotone toward zeta",
            ));
        }
        Ok(DilationSequence { radii, zeta })
    }

    /// Geometric sequence `r0 * ratio^k`, k = 0..n.
    pub fn geometric(r0: f64, ratio: f64, n: usize, zeta: Zeta) -> Result<DilationSequence> {
        let radii = (0..n).map(|k| r0 * ratio.powi(k as i32)).collect();
        DilationSequence::new(radii, zeta)
    }
}

/// Smooth radial bump term in log r: amplitude * exp(1 - 1/(1 - x^2)) with
/// x = (ln r - ln center)/half_width, supported on
/// [center e^{-half_width}, center e^{half_width}].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BumpTerm {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl BumpTerm {
    fn eval(&self, r: f64) -> f64 {
        let x = (r / self.center).ln() / self.half_width;
        if x.abs() >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - 1.0 / (1.0 - x * x)).exp()
    }

    fn support(&self) -> (f64, f64) {
        (
            self.center * (-self.half_width).exp(),
            self.center * self.half_width.exp(),
        )
    }
}

/// Compactly supported radial test profile: a sum of smooth bumps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestProfile {
    pub terms: Vec<BumpTerm>,
}

impl TestProfile {
    pub fn bump(center: f64, half_width: f64) -> TestProfile {
        TestProfile {
            terms: vec![BumpTerm {
                center,
                half_width,
                amplitude: 1.0,
            }],
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(r)).sum()
    }

    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for t in &self.terms {
            let (a, b) = t.support();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    /// The canonical family: ten smooth bumps whose supports tile the probe
    /// window `[2^-3, 2^3]`.
    pub fn default_family() -> Vec<TestProfile> {
        let (w_lo, w_hi) = PROBE_WINDOW;
        let span = (w_hi / w_lo).ln();
        let n = 10;
        let half_width = span / n as f64;
        (0..n)
            .map(|k| {
                let center = w_lo * ((k as f64 + 0.5) * span / n as f64 + half_width * 0.0).exp();
                TestProfile::bump(center.min(w_hi * (-half_width).exp()), half_width)
            })
            .collect()
    }
}

/// Integral `omega_{d-1} * int V(r) phi(r) r^{d-1} dr` over the profile
/// support, split at the potential's radial breakpoints. When an angular
/// factor is present (d = 2) the exact theta integral of g replaces the full
/// angle `omega_1 = 2 pi`. `nodes_per_unit` is the quadrature resolution per
/// unit of log r, so accuracy does not depend on how pieces are cut.
pub fn integrate_against(
    potential: &Potential,
    params: &Params,
    test: &TestProfile,
    nodes_per_unit: usize,
) -> f64 {
    let (a, b) = test.support();
    let angle = match &potential.angular {
        None => unit_sphere_area(params.d),
        Some(g) => {
            // d = 2 only; trapezoid over the full circle (periodic, so
            // spectrally accurate for smooth g).
            let n = 512;
            let h = std::f64::consts::TAU / n as f64;
            (0..n).map(|j| g.eval(1.0, j as f64 * h)).sum::<f64>() * h
        }
    };
    let pts = potential.breakpoints(a, b);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi / lo - 1.0 < 1e-14 {
            continue;
        }
        let mut n = ((hi / lo).ln() * nodes_per_unit as f64).ceil() as usize;
        n = n.clamp(32, 100_000);
        if n % 2 == 1 {
            n += 1;
        }
        let grid = log_grid(lo, hi, n);
        // Evaluate shells half-open: bias the node into the piece interior
        // so the integrand is smooth on each subinterval.
        let f: Vec<f64> = grid
            .iter()
            .map(|&r| {
                let rr = r.clamp(lo * (1.0 + 1e-15), hi * (1.0 - 1e-15));
                potential.eval_radial(params, rr) * test.eval(r) * r.powf(params.df() - 1.0)
            })
            .collect();
        total += simpson_log(&grid, &f);
    }
    angle * total
}

/// Deviations of `int V_{R_n} phi` from `int W phi` for one test profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeTrace {
    pub test_support: (f64, f64),
    pub deviations: Vec<f64>,
    pub converged: bool,
}

/// Evidence report of a weak-star probe along a dilation sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakstarReport {
    pub traces: Vec<ProbeTrace>,
    /// Every test's deviations settle under `WEAKSTAR_TOL` by the tail.
    pub converged: bool,
    /// Deviations stay under tolerance along the whole sequence (the
    /// candidate already matches every dilate: a dilation fixed point
    /// when the candidate is the potential itself).
    pub identically_zero: bool,
}

/// Probe whether `V_{R_n} -> candidate` in the weak-star sense against the
/// given test profiles: for each n and each test, compute
/// `int V_{R_n} phi dx` by radial quadrature (surface-measure weight
/// `r^{d-1}`) and report the deviation from `int candidate phi dx`.
/// Convergence is declared when the deviation tail sits below `WEAKSTAR_TOL`.
pub fn weakstar_probe(
    potential: &Potential,
    seq: &DilationSequence,
    candidate: &Potential,
    tests: &[TestProfile],
    params: &Params,
) -> Result<WeakstarReport> {
    if tests.is_empty() {
        return Err(Error::precondition(
            "weak-star probe needs at least one test profile",
        ));
    }
    let mut traces = Vec::with_capacity(tests.len());
    let mut all_converged = true;
    let mut all_zero = true;
    for test in tests {
        let (a, b) = test.support();
        if !(a > 0.0 && b.is_finite()) {
            return Err(Error::precondition(
                "test profiles must be compactly supported in an annulus 0 < a < |x| < b",
            ));
        }
        let target = integrate_against(candidate, params, test, 256);
        let scale = target.abs().max(1.0);
        let deviations: Vec<f64> = seq
            .radii
            .iter()
            .map(|&rn| {
                let scaled = potential.scale(rn, params);
                (integrate_against(&scaled, params, test, 256) - target).abs() / scale
            })
            .collect();
        // Tail rule: final deviation under tolerance and no larger than the
        // head (deviations are shrinking along the sequence).
        let last = *deviations.last().unwrap();
        let first = deviations[0];
        let converged = last < WEAKSTAR_TOL && (last <= first || first < WEAKSTAR_TOL);
        all_converged &= converged;
        all_zero &= deviations.iter().all(|&d| d < WEAKSTAR_TOL);
        traces.push(ProbeTrace {
            test_support: (a, b),
            deviations,
            converged,
        });
    }
    Ok(WeakstarReport {
        traces,
        converged: all_converged,
        identically_zero: all_zero,
    })
}

/// Structural guess for the weak-star limit of `V_{R_n}` on the probe
/// window: dilate by the last two radii, compare pointwise on the window,
/// and return the pruned restriction when they agree. `None` means the
/// dilates have not stabilized (no structural limit detected).
pub fn structural_dilation_limit(
    potential: &Potential,
    seq: &DilationSequence,
    params: &Params,
) -> Option<Potential> {
    let n = seq.radii.len();
    let prev = potential.scale(seq.radii[n - 2], params);
    let last = potential.scale(seq.radii[n - 1], params);
    let (w_lo, w_hi) = PROBE_WINDOW;
    let grid = log_grid(w_lo, w_hi, 1024);
    let agree = grid.iter().all(|&r| {
        let a = prev.eval_radial(params, r);
        let b = last.eval_radial(params, r);
        (a - b).abs() <= WEAKSTAR_TOL * (a.abs().max(b.abs()).max(1.0))
    });
    if !agree {
        return None;
    }
    // Prune the last dilate down to the probe window.
    let shells = last
        .shells
        .iter()
        .filter(|s| s.r_hi > w_lo && s.r_lo < w_hi)
        .filter(|s| {
            let r_at = |r: f64| s.amplitude.abs() * r.powf(s.power);
            r_at(s.r_lo.max(w_lo)).max(r_at(s.r_hi.min(w_hi))) > 1e-14
        })
        .copied()
        .collect();
    let sampled = last.sampled.as_ref().and_then(|t| {
        let pairs: Vec<(f64, f64)> = t
            .radii
            .iter()
            .zip(&t.values)
            .filter(|&(&r, _)| r >= w_lo / 2.0 && r <= w_hi * 2.0)
            .map(|(&r, &v)| (r, v))
            .collect();
        if pairs.len() < 2 || pairs.iter().all(|&(_, v)| v.abs() < 1e-14) {
            None
        } else {
            Some(SampledTable {
                radii: pairs.iter().map(|p| p.0).collect(),
                values: pairs.iter().map(|p| p.1).collect(),
            })
        }
    });
    Some(Potential {
        hardy_coeff: last.hardy_coeff,
        shells,
        sampled,
        angular: last.angular.clone(),
    })
}

/// One stage of the weak Fuchsian iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub zeta: Zeta,
    pub converged: bool,
    /// The stage candidate equals the stage input on the probe window:
    /// the potential is a fixed point of this dilation.
    pub fixed_point: bool,
    /// Fuchsian-type bound of the stage candidate on the probe window.
    pub candidate_bound: f64,
    pub probe: WeakstarReport,
}

/// Outcome of the finite-dilation weak Fuchsian test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakFuchsianReport {
    pub stages: Vec<StageReport>,
    /// Number of dilation stages actually applied.
    pub m_used: usize,
    /// True when the final candidate is the zero potential within tolerance.
    pub certified: bool,
}

/// Iterate dilation limits along the given sequences (at most 3) and report
/// whether the final limiting potential is zero, i.e. whether finitely many
/// dilations reduce the equation to the pure p-Laplacian.
pub fn weak_fuchsian_check(
    potential: &Potential,
    seqs: &[DilationSequence],
    params: &Params,
) -> Result<WeakFuchsianReport> {
    if seqs.is_empty() || seqs.len() > 3 {
        return Err(Error::precondition(
            "weak Fuchsian check takes 1 to 3 dilation sequences",
        ));
    }
    let tests = TestProfile::default_family();
    let mut current = potential.clone();
    let mut stages = Vec::new();
    let mut certified = false;
    for seq in seqs {
        let candidate = match structural_dilation_limit(&current, seq, params) {
            Some(c) => c,
            None => {
                // No structural limit: probe against zero as a last resort
                // and report the failure honestly.
                let probe = weakstar_probe(&current, seq, &Potential::zero(), &tests, params)?;
                let converged = probe.converged;
                stages.push(StageReport {
                    zeta: seq.zeta,
                    converged,
                    fixed_point: false,
                    candidate_bound: 0.0,
                    probe,
                });
                if converged {
                    certified = true;
                    break;
                }
                return Ok(WeakFuchsianReport {
                    m_used: stages.len(),
                    stages,
                    certified: false,
                });
            }
        };
        let probe = weakstar_probe(&current, seq, &candidate, &tests, params)?;
        let fixed_point = potentials_agree_on_window(&current, &candidate, params);
        let candidate_bound =
            candidate.fuchsian_bound(params, PROBE_WINDOW.0, PROBE_WINDOW.1, 512)?;
        let converged = probe.converged;
        stages.push(StageReport {
            zeta: seq.zeta,
            converged,
            fixed_point,
            candidate_bound,
            probe,
        });
        if !converged {
            return Ok(WeakFuchsianReport {
                m_used: stages.len(),
                stages,
                certified: false,
            });
        }
        if candidate.hardy_coeff == 0.0 && candidate.is_negligible_on_window(params, WEAKSTAR_TOL) {
            certified = true;
            break;
        }
        if fixed_point {
            // Dilating again along the same kind of sequence cannot make
            // progress; stop and report the fixed point.
            break;
        }
        current = candidate;
    }
    Ok(WeakFuchsianReport {
        m_used: stages.len(),
        stages,
        certified,
    })
}

fn potentials_agree_on_window(a: &Potential, b: &Potential, params: &Params) -> bool {
    let grid = log_grid(PROBE_WINDOW.0, PROBE_WINDOW.1, 1024);
    grid.iter().all(|&r| {
        let va = a.eval_radial(params, r);
        let vb = b.eval_radial(params, r);
        (va - vb).abs() <= WEAKSTAR_TOL * va.abs().max(vb.abs()).max(1.0)
    })
}

/// Evidence report for the `L^q` weak Fuchsian criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LqReport {
    pub q: f64,
    pub zeta: Zeta,
    /// `q > d/p` for zeta = 0, `1 <= q < d/p` for zeta = infinity.
    pub exponent_ok: bool,
    /// The quadrature evidence says the L^q norm is finite.
    pub finite: bool,
    /// Estimated q-th power of the norm (meaningful when finite).
    pub norm_q_estimate: f64,
    /// Per-decade increments of the integral, innermost (or outermost) last.
    pub decade_increments: Vec<f64>,
    pub certified: bool,
}

/// Estimate the `L^q` norm of V on the unit ball (zeta = 0) or on the
/// exterior of the unit ball (zeta = infinity) by per-decade quadrature, and
/// test the integrability exponent condition that certifies a weak Fuchsian
/// singularity.
pub fn lq_criterion(
    potential: &Potential,
    q: f64,
    params: &Params,
    zeta: Zeta,
) -> Result<LqReport> {
    if !(q >= 1.0) {
        return Err(Error::precondition(format!(
            "L^q criterion needs q >= 1, got {q}"
        )));
    }
    let dp = params.df() / params.p;
    let exponent_ok = match zeta {
        Zeta::Origin => q > dp,
        Zeta::Infinity => q < dp,
    };
    let gmax = potential.angular_bound();
    let n_decades = 14usize;
    let mut increments = Vec::with_capacity(n_decades);
    for k in 0..n_decades {
        let (lo, hi) = match zeta {
            Zeta::Origin => (10f64.powi(-(k as i32 + 1)), 10f64.powi(-(k as i32))),
            Zeta::Infinity => (10f64.powi(k as i32), 10f64.powi(k as i32 + 1)),
        };
        let pts = potential.breakpoints(lo, hi);
        let mut inc = 0.0;
        for w in pts.windows(2) {
            if w[1] / w[0] - 1.0 < 1e-14 {
                continue;
            }
            let grid = log_grid(w[0], w[1], 128);
            let f: Vec<f64> = grid
                .iter()
                .map(|&r| {
                    let rr = r.clamp(w[0] * (1.0 + 1e-15), w[1] * (1.0 - 1e-15));
                    (potential.eval_radial(params, rr).abs() * gmax).powf(q)
                        * r.powf(params.df() - 1.0)
                })
                .collect();
            inc += simpson_log(&grid, &f);
        }
        increments.push(unit_sphere_area(params.d) * inc);
    }
    let total: f64 = increments.iter().sum();
    // Convergence evidence: increments toward zeta must decay geometrically
    // (or vanish). A flat or growing tail marks a divergent integral.
    let tail: Vec<f64> = increments.iter().rev().take(4).copied().collect();
    let finite = if total == 0.0 {
        true
    } else {
        let mut ok = true;
        for w in tail.windows(2) {
            // w[0] is closer to zeta than w[1]
            if w[0] > 0.95 * w[1] && w[0] > 1e-300 {
                ok = false;
            }
        }
        ok && tail[0] < 1e-3 * total.max(1e-300)
    };
    Ok(LqReport {
        q,
        zeta,
        exponent_ok,
        finite,
        norm_q_estimate: total,
        decade_increments: increments,
        certified: exponent_ok && finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(p: f64, d: u32) -> Params {
        Params::new(p, d).unwrap()
    }

    /// Shell cascade with rapidly separating radii R_{k+1}/R_k -> 0:
    /// V = r^{-p} on [R_k, 2 R_k), zero between, R_k = 10^{-k(k+1)/2}.
    fn shell_cascade(params: &Params, n: usize) -> (Potential, Vec<f64>) {
        let mut v = Potential::zero();
        let mut radii = Vec::new();
        for k in 1..=n {
            let rk = 10f64.powf(-((k * (k + 1) / 2) as f64));
            v = v.with_shell(rk, 2.0 * rk, 1.0, -params.p);
            radii.push(rk);
        }
        (v, radii)
    }

    #[test]
    fn evaluate_examples() {
        let params = pr(2.0, 3);
        let v = Potential::hardy(1.0);
        assert!((v.evaluate(&params, 2.0, None).unwrap() + 0.25).abs() < 1e-15);
        assert_eq!(Potential::zero().evaluate(&params, 1.0, None).unwrap(), 0.0);
        let v = Potential::zero().with_shell(1.0, 2.0, 1.0, -params.p);
        let expect = 1.5f64.powf(-params.p);
        assert!((v.evaluate(&params, 1.5, None).unwrap() - expect).abs() < 1e-15);
        // half-open: active at r_lo, inactive at r_hi
        assert!(v.evaluate(&params, 1.0, None).unwrap() > 0.0);
        assert_eq!(v.evaluate(&params, 2.0, None).unwrap(), 0.0);
        assert!(v.evaluate(&params, 0.0, None).is_err());
    }

    #[test]
    fn fuchsian_bound_examples() {
        let params = pr(2.5, 3);
        let v = Potential::hardy(0.7);
        let b = v.fuchsian_bound(&params, 0.01, 100.0, 256).unwrap();
        assert!((b - 0.7).abs() < 1e-12);

        let (shells, _) = shell_cascade(&params, 6);
        let b = shells.fuchsian_bound(&params, 1e-13, 1.0, 4096).unwrap();
        assert!((b - 1.0).abs() < 1e-6, "cascade bound {b}");

        // bounded potential near zero: bound shrinks like r_hi^p
        let v = Potential::zero().with_shell(0.0, 1.0, 3.0, 0.0);
        let b = v.fuchsian_bound(&params, 1e-6, 1e-3, 256).unwrap();
        assert!(b <= 3.0 * 1e-3f64.powf(params.p) * 1.0000001);
    }

    #[test]
    fn scale_is_exact_on_structure() {
        let params = pr(2.0, 3);
        // Hardy is a fixed point.
        let v = Potential::hardy(0.3);
        let s = v.scale(17.0, &params);
        assert_eq!(s.hardy_coeff, 0.3);
        // Shell (R, 2R, 1, -p) scaled by R lands on (1, 2, 1, -p).
        let rn = 1e-7;
        let v = Potential::zero().with_shell(rn, 2.0 * rn, 1.0, -params.p);
        let s = v.scale(rn, &params);
        assert!((s.shells[0].r_lo - 1.0).abs() < 1e-12);
        assert!((s.shells[0].r_hi - 2.0).abs() < 1e-12);
        assert!((s.shells[0].amplitude - 1.0).abs() < 1e-9);
        // Zero potential stays zero.
        let z = Potential::zero().scale(3.0, &params);
        assert_eq!(z.eval_radial(&params, 1.0), 0.0);
    }

    #[test]
    fn scale_composition_matches_pointwise() {
        let params = pr(3.0, 2);
        let v = Potential::hardy(0.1)
            .with_shell(0.5, 4.0, 2.0, -1.0)
            .with_sampled(SampledTable::new(vec![0.2, 1.0, 5.0], vec![1.0, -2.0, 0.5]).unwrap());
        for (rr, ss) in [(2.0, 3.0), (0.3, 0.7), (10.0, 0.05)] {
            let a = v.scale(rr, &params).scale(ss, &params);
            let b = v.scale(rr * ss, &params);
            for r in log_grid(0.01, 100.0, 64) {
                let va = a.eval_radial(&params, r);
                let vb = b.eval_radial(&params, r);
                assert!(
                    (va - vb).abs() <= 1e-12 * va.abs().max(vb.abs()).max(1.0),
                    "r={r}: {va} vs {vb}"
                );
            }
        }
    }

    #[test]
    fn fuchsian_bound_invariant_under_dilation() {
        let params = pr(2.0, 4);
        let pots = [
            Potential::hardy(0.4),
            Potential::zero().with_shell(0.2, 3.0, 1.5, -2.0),
            Potential::hardy(0.1).with_shell(1.0, 2.0, 1.0, -1.0),
        ];
        for v in &pots {
            for &radius in &[0.1, 0.5, 2.0, 10.0] {
                let lhs = v
                    .scale(radius, &params)
                    .fuchsian_bound(&params, 0.125, 8.0, 1024)
                    .unwrap();
                let rhs = v
                    .fuchsian_bound(&params, 0.125 * radius, 8.0 * radius, 1024)
                    .unwrap();
                assert!(lhs <= rhs + 1e-12, "R={radius}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn weakstar_hardy_is_fixed_point() {
        let params = pr(2.0, 3);
        let v = Potential::hardy(0.2);
        let seq = DilationSequence::geometric(0.1, 0.1, 6, Zeta::Origin).unwrap();
        let rep = weakstar_probe(&v, &seq, &v, &TestProfile::default_family(), &params).unwrap();
        assert!(rep.converged);
        assert!(rep.identically_zero);
        for t in &rep.traces {
            for &d in &t.deviations {
                assert!(d < 1e-12, "deviation {d}");
            }
        }
    }

    #[test]
    fn weakstar_shell_cascade_reaches_single_shell_then_zero() {
        let params = pr(2.0, 3);
        let (v, radii) = shell_cascade(&params, 7);
        let seq = DilationSequence::new(radii.clone(), Zeta::Origin).unwrap();
        let candidate = Potential::zero().with_shell(1.0, 2.0, 1.0, -params.p);
        let rep = weakstar_probe(
            &v,
            &seq,
            &candidate,
            &TestProfile::default_family(),
            &params,
        )
        .unwrap();
        assert!(rep.converged, "traces: {:?}", rep.traces);
        // Second dilation of the candidate along the same radii: candidate 0.
        let rep2 = weakstar_probe(
            &candidate,
            &seq,
            &Potential::zero(),
            &TestProfile::default_family(),
            &params,
        )
        .unwrap();
        assert!(rep2.converged);
    }

    #[test]
    fn weakstar_probe_is_linear_in_the_test() {
        let params = pr(2.0, 3);
        let v = Potential::hardy(0.2).with_shell(0.5, 2.0, 1.0, -1.0);
        let seq = DilationSequence::geometric(1.0, 0.5, 4, Zeta::Origin).unwrap();
        let t1 = TestProfile::bump(0.5, 0.4);
        let t2 = TestProfile::bump(2.0, 0.5);
        let sum = TestProfile {
            terms: vec![t1.terms[0], t2.terms[0]],
        };
        let zero = Potential::zero();
        for &rn in &seq.radii {
            let scaled = v.scale(rn, &params);
            let i1 = integrate_against(&scaled, &params, &t1, 256);
            let i2 = integrate_against(&scaled, &params, &t2, 256);
            let i12 = integrate_against(&scaled, &params, &sum, 256);
            assert!(
                (i12 - (i1 + i2)).abs() < 1e-8 * (i1.abs() + i2.abs()).max(1.0),
                "linearity broke: {i12} vs {}",
                i1 + i2
            );
        }
        let _ = zero;
    }

    #[test]
    fn weak_fuchsian_verdicts() {
        let params = pr(2.0, 3);
        // r^p V -> 0 at the origin: certified with one dilation.
        let v = Potential::zero().with_shell(0.0, 1.0, 1.0, -1.0); // r^{-1}, p = 2
        let seq = DilationSequence::geometric(1e-2, 1e-2, 5, Zeta::Origin).unwrap();
        let rep = weak_fuchsian_check(&v, &[seq.clone()], &params).unwrap();
        assert!(rep.certified, "stages: {:?}", rep.stages.len());
        assert_eq!(rep.m_used, 1);

        // Shell cascade: certified with two dilations.
        let (v, radii) = shell_cascade(&params, 7);
        let seq1 = DilationSequence::new(radii, Zeta::Origin).unwrap();
        let seq2 = DilationSequence::geometric(1e-3, 1e-3, 4, Zeta::Origin).unwrap();
        let rep = weak_fuchsian_check(&v, &[seq1, seq2], &params).unwrap();
        assert!(rep.certified);
        assert_eq!(rep.m_used, 2);

        // Hardy: a dilation fixed point, never certified.
        let v = Potential::hardy(0.2);
        let seqs = [
            DilationSequence::geometric(0.1, 0.1, 5, Zeta::Origin).unwrap(),
            DilationSequence::geometric(0.2, 0.1, 5, Zeta::Origin).unwrap(),
        ];
        let rep = weak_fuchsian_check(&v, &seqs, &params).unwrap();
        assert!(!rep.certified);
        assert!(rep.stages[0].fixed_point);
    }

    #[test]
    fn lq_criterion_verdicts() {
        let params = pr(2.0, 3);
        let dp = params.df() / params.p; // 1.5
                                         // V = r^{-p + eps} near zero with q slightly above d/p: certified.
                                         // Independent 1-D oracle: the integral of r^{(-p+eps) q + d - 1}
                                         // converges iff (p - eps) q < d.
        let eps = 0.4;
        let v = Potential::zero().with_shell(0.0, 1.0, 1.0, -params.p + eps);
        let q = dp + 0.1;
        assert!(
            (params.p - eps) * q < params.df(),
            "test setup must converge"
        );
        let rep = lq_criterion(&v, q, &params, Zeta::Origin).unwrap();
        assert!(rep.exponent_ok && rep.finite && rep.certified, "{rep:?}");
        // Oracle value of the full integral for comparison.
        let expo = (-params.p + eps) * q + params.df() - 1.0;
        let oracle = unit_sphere_area(params.d) / (expo + 1.0);
        assert!(
            (rep.norm_q_estimate - oracle).abs() < 1e-3 * oracle,
            "estimate {} vs oracle {oracle}",
            rep.norm_q_estimate
        );

        // Hardy at the origin: scale invariance forces divergence for q >= d/p.
        let v = Potential::hardy(1.0);
        let rep = lq_criterion(&v, dp + 0.2, &params, Zeta::Origin).unwrap();
        assert!(rep.exponent_ok && !rep.finite && !rep.certified);

        // Zero potential: trivially certified.
        let rep = lq_criterion(&Potential::zero(), dp + 0.2, &params, Zeta::Origin).unwrap();
        assert!(rep.certified);

        // At infinity the exponent condition flips. V = r^{-p-1} decays fast
        // enough that |V|^q r^{d-1} = r^{-1.6} is integrable at infinity.
        let v = Potential::zero().with_shell(1.0, f64::INFINITY, 1.0, -params.p - 1.0);
        let rep = lq_criterion(&v, 1.2, &params, Zeta::Infinity).unwrap();
        assert!(rep.exponent_ok, "q=1.2 < d/p=1.5");
        assert!(rep.finite && rep.certified, "{rep:?}");
        // while r^{-p-0.5} gives exactly r^{-1}: log-divergent, not certified.
        let v = Potential::zero().with_shell(1.0, f64::INFINITY, 1.0, -params.p - 0.5);
        let rep = lq_criterion(&v, 1.2, &params, Zeta::Infinity).unwrap();
        assert!(rep.exponent_ok && !rep.finite && !rep.certified);

        assert!(lq_criterion(&Potential::zero(), 0.5, &params, Zeta::Origin).is_err());
    }

    #[test]
    fn sampled_table_interpolates_in_log_r() {
        let t = SampledTable::new(vec![1.0, 10.0], vec![0.0, 2.0]).unwrap();
        let v = Potential::zero().with_sampled(t);
        let params = pr(2.0, 3);
        // midpoint in log r
        let mid = 10f64.powf(0.5);
        assert!((v.eval_radial(&params, mid) - 1.0).abs() < 1e-12);
        assert_eq!(v.eval_radial(&params, 0.5), 0.0);
        assert_eq!(v.eval_radial(&params, 20.0), 0.0);
        assert!(SampledTable::new(vec![1.0, 0.5], vec![0.0, 1.0]).is_err());
    }
}
