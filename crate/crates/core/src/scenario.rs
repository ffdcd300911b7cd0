//! Scenario files, task dispatch, deterministic artifacts and plot-data
//! emission.
//!
//! A scenario is a flat `key = value` text file with an optional
//! `[potential]` block (repeated `shell = r_lo r_hi amplitude power` lines,
//! a `hardy = lambda` coefficient, `sample = r v` pairs and an `angular`
//! expression). Numeric values go through the whitelisted expression
//! grammar, so `pi/2` and `1e-3` both work. Example:
//!
//! ```text
//! name = hardy-exponents
//! task = exponents
//! p = 2
//! d = 3
//! lambda_min = -2
//! lambda_count = 41
//!
//! [potential]
//! hardy = 0.125
//! shell = 1 2 1 -2
//! ```
//!
//! Running a scenario executes one library operation family, writes CSV and
//! JSON artifacts into the output directory and returns a [`RunRecord`]
//! carrying the resolved configuration, a summary and the embedded checks.
//! Identical scenario + tool version produce byte-identical artifacts; the
//! wall time is reported on the console only, never written into artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annulus::{
    critical_set_diagnostics, harnack_profile, regular_point_probe, sector_separable_check,
    solve_dirichlet_2d, BoundaryData, Domain2, PolarField,
};
use crate::error::{Error, Result};
use crate::exponents::{
    characteristic, hardy_constant, sector_exponents, solve_gamma, ExponentPair, SectorExponents,
};
use crate::expr::Expr;
use crate::num::log_grid;
use crate::potential::{
    lq_criterion, weak_fuchsian_check, DilationSequence, LqReport, Potential, SampledTable,
    WeakFuchsianReport,
};
use crate::radial::{
    bvp_dirichlet, classify_asymptotics, ivp_solve, minimal_growth_exhaustion, quotient_profile,
    AsymptoticsReport, ExhaustionResult, QuotientProfile, RadialProfile, RadialSolution,
};
use crate::variational::{
    flux_closed_form_power, flux_constant, kelvin_radial, picone_polar, randomized_cutoffs,
    weighted_capacity, weighted_residual, CapacityResult, FluxReport, WeightedOperatorSpec,
};
use crate::{Params, Zeta};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Artifact format selector for profile exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Radial solve mode shared by several tasks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RadialMode {
    Ivp {
        r0: f64,
        v0: f64,
        slope0: f64,
        r_end: f64,
    },
    Bvp {
        r_lo: f64,
        r_hi: f64,
        a: f64,
        b: f64,
        n: usize,
    },
}

/// Dilation sequence specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SeqSpec {
    Geometric { r0: f64, ratio: f64, count: usize },
    Explicit { radii: Vec<f64> },
}

impl SeqSpec {
    fn build(&self, zeta: Zeta) -> Result<DilationSequence> {
        match self {
            SeqSpec::Geometric { r0, ratio, count } => {
                DilationSequence::geometric(*r0, *ratio, *count, zeta)
            }
            SeqSpec::Explicit { radii } => DilationSequence::new(radii.clone(), zeta),
        }
    }
}

/// Everything a task needs, resolved and serializable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum Task {
    Exponents {
        p: f64,
        d: u32,
        lambdas: Vec<f64>,
    },
    SolveRadial {
        p: f64,
        d: u32,
        potential: Potential,
        #[serde(flatten)]
        mode: RadialMode,
        /// When set, also compute the quotient against `r^alpha`.
        quotient_power: Option<f64>,
    },
    Classify {
        p: f64,
        d: u32,
        potential: Potential,
        #[serde(flatten)]
        mode: RadialMode,
        zeta: Zeta,
        expected_class: Option<String>,
    },
    MinimalGrowth {
        p: f64,
        d: u32,
        potential: Potential,
        zeta: Zeta,
        r_anchor: f64,
        n_stages: usize,
        expected_exponent: Option<f64>,
    },
    Dilate {
        p: f64,
        d: u32,
        potential: Potential,
        zeta: Zeta,
        sequences: Vec<SeqSpec>,
        expected_certified: Option<bool>,
        expected_m: Option<usize>,
    },
    LqCheck {
        p: f64,
        d: u32,
        potential: Potential,
        q: f64,
        zeta: Zeta,
        expected_certified: Option<bool>,
    },
    Energy {
        p: f64,
        d: u32,
        potential: Potential,
        gamma: f64,
        plateau: f64,
        ramp: f64,
        /// widen the plateau geometrically until the energy turns negative
        scan_negative: bool,
    },
    Picone {
        p: f64,
        aperture: f64,
        ks: Vec<f64>,
        n_r: usize,
        n_theta: usize,
    },
    Kelvin {
        p: f64,
        d: u32,
        r_lo: f64,
        r_hi: f64,
    },
    Capacity {
        p: f64,
        d: u32,
        beta: f64,
        r: f64,
        big_r: f64,
        n: usize,
    },
    Flux {
        p: f64,
        d: u32,
        beta: Option<f64>,
        alpha: Option<f64>,
        r_lo: f64,
        r_hi: f64,
        count: usize,
    },
    Solve2d {
        p: f64,
        potential: Potential,
        domain: Domain2,
        inner: Expr,
        outer: Expr,
        n_r: usize,
        n_theta: usize,
    },
    Harnack {
        p: f64,
        potential: Potential,
        domain: Domain2,
        inner1: Expr,
        outer1: Expr,
        inner2: Expr,
        outer2: Expr,
        n_r: usize,
        n_theta: usize,
        zeta: Zeta,
    },
    Probe {
        p: f64,
        potential: Potential,
        domain: Domain2,
        inner1: Expr,
        outer1: Expr,
        inner2: Expr,
        outer2: Expr,
        n_r: usize,
        n_theta: usize,
        zeta: Zeta,
        expected_class: Option<String>,
    },
    Sector {
        p: f64,
        aperture: f64,
        check_2d: bool,
        r_lo: f64,
        r_hi: f64,
        n_r: usize,
        n_theta: usize,
    },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Exponents { .. } => "exponents",
            Task::SolveRadial { .. } => "solve-radial",
            Task::Classify { .. } => "classify",
            Task::MinimalGrowth { .. } => "minimal-growth",
            Task::Dilate { .. } => "dilate",
            Task::LqCheck { .. } => "lq-check",
            Task::Energy { .. } => "energy",
            Task::Picone { .. } => "picone",
            Task::Kelvin { .. } => "kelvin",
            Task::Capacity { .. } => "capacity",
            Task::Flux { .. } => "flux",
            Task::Solve2d { .. } => "solve-2d",
            Task::Harnack { .. } => "harnack",
            Task::Probe { .. } => "probe",
            Task::Sector { .. } => "sector",
        }
    }
}

/// A resolved scenario: name, task, output format, seed and tolerance
/// overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(flatten)]
    pub task: Task,
    pub format: Format,
    pub seed: u64,
    pub tols: BTreeMap<String, f64>,
}

impl Scenario {
    /// Tolerance by name, from the override table or the built-in default.
    pub fn tol(&self, name: &str) -> f64 {
        self.tols
            .get(name)
            .copied()
            .unwrap_or_else(|| default_tol(name))
    }
}

/// Built-in tolerance registry (override with `tol.<name>` in scenarios or
/// `--tol name=value` on the command line).
pub fn default_tol(name: &str) -> f64 {
    match name {
        "gamma_residual" => 1e-10,
        "exponent" => 1e-3,
        "fit_residual" => 1e-3,
        "capacity_gap" => 1e-4,
        "flux_spread" => 1e-7,
        "kelvin_residual" => 1e-6,
        "sector_gap" => 1e-3,
        "sector_p2" => 1e-8,
        "harnack_final_ratio" => 1.02,
        "picone_decay" => 10.0,
        "weakstar" => 1e-6,
        _ => 1e-8,
    }
}

/// One embedded check of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub target: String,
    pub measured: String,
    pub pass: bool,
}

/// Typed result payload kept for plot-data emission.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "payload", rename_all = "kebab-case")]
pub enum Payload {
    Exponents {
        lambdas: Vec<f64>,
        pairs: Vec<ExponentPair>,
    },
    Radial {
        solution: RadialSolution,
    },
    Quotient {
        quotient: QuotientProfile,
    },
    Asymptotics {
        report: AsymptoticsReport,
        solution: RadialSolution,
    },
    Exhaustion {
        result: ExhaustionResult,
    },
    WeakFuchsian {
        report: WeakFuchsianReport,
    },
    Lq {
        report: LqReport,
    },
    Energy {
        values: Vec<(f64, f64)>,
    },
    Picone {
        ks: Vec<f64>,
        integrals: Vec<f64>,
    },
    Kelvin {
        residual_plain: f64,
        residual_weighted: f64,
        involution_gap: f64,
    },
    Capacity {
        result: CapacityResult,
    },
    Flux {
        report: FluxReport,
        closed_form: Option<f64>,
    },
    Field {
        field: PolarField,
    },
    Harnack {
        report: crate::annulus::HarnackReport,
    },
    Probe {
        report: crate::annulus::ProbeReport,
    },
    Sector {
        exponents: SectorExponents,
        check: Option<crate::annulus::SectorCheckReport>,
    },
}

/// Re-runnable record of one scenario execution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario_name: String,
    pub tool_version: String,
    /// The full resolved configuration; re-running it reproduces the summary.
    pub config: Scenario,
    pub summary: serde_json::Value,
    pub checks: Vec<CheckOutcome>,
    pub payload: Payload,
    /// Wall time of the run in seconds. Console diagnostics only: excluded
    /// from serialized artifacts so identical runs stay byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

// ---------------------------------------------------------------------------
// scenario file parsing
// ---------------------------------------------------------------------------

struct RawScenario {
    keys: BTreeMap<String, (usize, String)>,
    shells: Vec<(usize, String)>,
    samples: Vec<(usize, String)>,
    seqs: Vec<(usize, String)>,
    hardy: Option<(usize, String)>,
    angular: Option<(usize, String)>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col: 1,
        msg: msg.into(),
    }
}

fn split_kv(line: &str, lineno: usize) -> Result<(String, String)> {
    let mut it = line.splitn(2, '=');
    let key = it.next().unwrap().trim().to_string();
    let val = it
        .next()
        .ok_or_else(|| parse_err(lineno, format!("expected 'key = value', got '{line}'")))?
        .trim()
        .to_string();
    if key.is_empty() || val.is_empty() {
        return Err(parse_err(lineno, "empty key or value"));
    }
    Ok((key, val))
}

fn parse_raw(text: &str) -> Result<RawScenario> {
    let mut raw = RawScenario {
        keys: BTreeMap::new(),
        shells: Vec::new(),
        samples: Vec::new(),
        seqs: Vec::new(),
        hardy: None,
        angular: None,
    };
    let mut in_potential = false;
    for (i, full) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = full.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            match line {
                "[potential]" => in_potential = true,
                "[scenario]" => in_potential = false,
                other => return Err(parse_err(lineno, format!("unknown section {other}"))),
            }
            continue;
        }
        let (key, val) = split_kv(line, lineno)?;
        if in_potential {
            match key.as_str() {
                "hardy" => raw.hardy = Some((lineno, val)),
                "shell" => raw.shells.push((lineno, val)),
                "sample" => raw.samples.push((lineno, val)),
                "angular" => raw.angular = Some((lineno, val)),
                other => {
                    return Err(parse_err(
                        lineno,
                        format!("unknown potential key '{other}'"),
                    ))
                }
            }
        } else if key == "seq" {
            raw.seqs.push((lineno, val));
        } else if raw.keys.insert(key.clone(), (lineno, val)).is_some() {
            return Err(parse_err(lineno, format!("duplicate key '{key}'")));
        }
    }
    Ok(raw)
}

fn num(raw: &RawScenario, key: &str) -> Result<Option<f64>> {
    match raw.keys.get(key) {
        None => Ok(None),
        Some((lineno, v)) => Expr::parse_const(v)
            .map(Some)
            .map_err(|e| parse_err(*lineno, format!("key '{key}': {e}"))),
    }
}

fn num_req(raw: &RawScenario, key: &str) -> Result<f64> {
    num(raw, key)?.ok_or_else(|| parse_err(0, format!("missing required key '{key}'")))
}

fn int(raw: &RawScenario, key: &str, default: usize) -> Result<usize> {
    Ok(num(raw, key)?
        .map(|v| v.round() as usize)
        .unwrap_or(default))
}

fn text(raw: &RawScenario, key: &str) -> Option<String> {
    raw.keys.get(key).map(|(_, v)| v.clone())
}

fn floats(lineno: usize, s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|tok| {
            Expr::parse_const(tok).map_err(|e| parse_err(lineno, format!("number '{tok}': {e}")))
        })
        .collect()
}

fn build_potential(raw: &RawScenario) -> Result<Potential> {
    let mut pot = Potential::zero();
    if let Some((lineno, v)) = &raw.hardy {
        pot.hardy_coeff =
            Expr::parse_const(v).map_err(|e| parse_err(*lineno, format!("hardy: {e}")))?;
    }
    for (lineno, line) in &raw.shells {
        let f = floats(*lineno, line)?;
        if f.len() != 4 {
            return Err(parse_err(*lineno, "shell needs: r_lo r_hi amplitude power"));
        }
        pot = pot.with_shell(f[0], f[1], f[2], f[3]);
    }
    if !raw.samples.is_empty() {
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in &raw.samples {
            let f = floats(*lineno, line)?;
            if f.len() != 2 {
                return Err(parse_err(*lineno, "sample needs: r value"));
            }
            radii.push(f[0]);
            values.push(f[1]);
        }
        pot = pot.with_sampled(SampledTable::new(radii, values)?);
    }
    if let Some((lineno, v)) = &raw.angular {
        let expr = Expr::parse(v).map_err(|e| parse_err(*lineno, format!("angular: {e}")))?;
        pot = pot.with_angular(expr);
    }
    pot.validate()?;
    Ok(pot)
}

fn build_domain(raw: &RawScenario) -> Result<Domain2> {
    let r_lo = num_req(raw, "r_lo")?;
    let r_hi = num_req(raw, "r_hi")?;
    match num(raw, "aperture")? {
        Some(a) => Ok(Domain2::Sector {
            r_lo,
            r_hi,
            aperture: a,
        }),
        None => Ok(Domain2::Annulus { r_lo, r_hi }),
    }
}

fn build_expr(raw: &RawScenario, key: &str) -> Result<Expr> {
    let (lineno, v) = raw
        .keys
        .get(key)
        .ok_or_else(|| parse_err(0, format!("missing required key '{key}'")))?;
    Expr::parse(v).map_err(|e| parse_err(*lineno, format!("key '{key}': {e}")))
}

fn build_zeta(raw: &RawScenario) -> Result<Zeta> {
    match text(raw, "zeta") {
        None => Err(parse_err(0, "missing required key 'zeta' (0 or inf)")),
        Some(s) => s.parse(),
    }
}

fn build_radial_mode(raw: &RawScenario) -> Result<RadialMode> {
    match text(raw, "mode").as_deref() {
        Some("ivp") => Ok(RadialMode::Ivp {
            r0: num_req(raw, "r0")?,
            v0: num_req(raw, "v0")?,
            slope0: num_req(raw, "slope0")?,
            r_end: num_req(raw, "r_end")?,
        }),
        Some("bvp") | None => Ok(RadialMode::Bvp {
            r_lo: num_req(raw, "r_lo")?,
            r_hi: num_req(raw, "r_hi")?,
            a: num_req(raw, "a")?,
            b: num_req(raw, "b")?,
            n: int(raw, "n", 2048)?,
        }),
        Some(other) => Err(parse_err(
            0,
            format!("mode must be ivp or bvp, got '{other}'"),
        )),
    }
}

/// Parse a scenario file.
pub fn parse_scenario(text_input: &str) -> Result<Scenario> {
    let raw = parse_raw(text_input)?;
    let name = text(&raw, "name").ok_or_else(|| parse_err(0, "missing required key 'name'"))?;
    let task_kind =
        text(&raw, "task").ok_or_else(|| parse_err(0, "missing required key 'task'"))?;
    let p = || num_req(&raw, "p");
    let d = || -> Result<u32> { Ok(num_req(&raw, "d")? as u32) };

    let task = match task_kind.as_str() {
        "exponents" => {
            let pv = p()?;
            let dv = d()?;
            let params = Params::new(pv, dv)?;
            let ch = hardy_constant(&params);
            let lambdas = match num(&raw, "lambda")? {
                Some(l) => vec![l],
                None => {
                    let lo = num(&raw, "lambda_min")?.unwrap_or(ch - 2.0);
                    let hi = num(&raw, "lambda_max")?.unwrap_or(ch);
                    let count = int(&raw, "lambda_count", 41)?.max(2);
                    (0..count)
                        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
                        .collect()
                }
            };
            Task::Exponents {
                p: pv,
                d: dv,
                lambdas,
            }
        }
        "solve-radial" => Task::SolveRadial {
            p: p()?,
            d: d()?,
            potential: build_potential(&raw)?,
            mode: build_radial_mode(&raw)?,
            quotient_power: num(&raw, "quotient_power")?,
        },
        "classify" => Task::Classify {
            p: p()?,
            d: d()?,
            potential: build_potential(&raw)?,
            mode: build_radial_mode(&raw)?,
            zeta: build_zeta(&raw)?,
            expected_class: text(&raw, "expected_class"),
        },
        "minimal-growth" => Task::MinimalGrowth {
            p: p()?,
            d: d()?,
            potential: build_potential(&raw)?,
            zeta: build_zeta(&raw)?,
            r_anchor: num(&raw, "r_anchor")?.unwrap_or(1.0),
            n_stages: int(&raw, "n_stages", 24)?,
            expected_exponent: num(&raw, "expected_exponent")?,
        },
        "dilate" => {
            let zeta = build_zeta(&raw)?;
            let mut sequences = Vec::new();
            for (lineno, line) in &raw.seqs {
                let mut parts = line.split_whitespace();
                let kind = parts.next().unwrap_or("");
                let rest: String = parts.collect::<Vec<_>>().join(" ");
                let f = floats(*lineno, &rest)?;
                match kind {
                    "geometric" if f.len() == 3 => sequences.push(SeqSpec::Geometric {
                        r0: f[0],
                        ratio: f[1],
                        count: f[2].round() as usize,
                    }),
                    "explicit" if f.len() >= 2 => sequences.push(SeqSpec::Explicit { radii: f }),
                    _ => {
                        return Err(parse_err(
                            *lineno,
                            "seq needs: 'geometric r0 ratio count' or 'explicit r1 r2 ...'",
                        ))
                    }
                }
            }
            if sequences.is_empty() {
                return Err(parse_err(0, "dilate needs at least one 'seq = ...' line"));
            }
            Task::Dilate {
                p: p()?,
                d: d()?,
                potential: build_potential(&raw)?,
                zeta,
                sequences,
                expected_certified: text(&raw, "expected_certified")
                    .map(|s| s == "true" || s == "yes"),
                expected_m: num(&raw, "expected_m")?.map(|v| v.round() as usize),
            }
        }
        "lq-check" => Task::LqCheck {
            p: p()?,
            d: d()?,
            potential: build_potential(&raw)?,
            q: num_req(&raw, "q")?,
            zeta: build_zeta(&raw)?,
            expected_certified: text(&raw, "expected_certified").map(|s| s == "true" || s == "yes"),
        },
        "energy" => Task::Energy {
            p: p()?,
            d: d()?,
            potential: build_potential(&raw)?,
            gamma: num_req(&raw, "gamma")?,
            plateau: num(&raw, "plateau")?.unwrap_or(4.0),
            ramp: num(&raw, "ramp")?.unwrap_or(2.0),
            scan_negative: text(&raw, "scan_negative").as_deref() == Some("true"),
        },
        "picone" => {
            let ks = match raw.keys.get("ks") {
                Some((lineno, v)) => floats(*lineno, v)?,
                None => vec![8.0, 16.0, 32.0, 64.0, 128.0],
            };
            Task::Picone {
                p: p()?,
                aperture: num(&raw, "aperture")?.unwrap_or(std::f64::consts::PI),
                ks,
                n_r: int(&raw, "n_r", 384)?,
                n_theta: int(&raw, "n_theta", 48)?,
            }
        }
        "kelvin" => Task::Kelvin {
            p: p()?,
            d: d()?,
            r_lo: num(&raw, "r_lo")?.unwrap_or(0.1),
            r_hi: num(&raw, "r_hi")?.unwrap_or(10.0),
        },
        "capacity" => Task::Capacity {
            p: p()?,
            d: d()?,
            beta: num(&raw, "beta")?.unwrap_or(0.0),
            r: num_req(&raw, "r")?,
            big_r: num_req(&raw, "R")?,
            n: int(&raw, "n", 4096)?,
        },
        "flux" => Task::Flux {
            p: p()?,
            d: d()?,
            beta: num(&raw, "beta")?,
            alpha: num(&raw, "alpha")?,
            r_lo: num(&raw, "r_lo")?.unwrap_or(0.01),
            r_hi: num(&raw, "r_hi")?.unwrap_or(1.0),
            count: int(&raw, "count", 5)?,
        },
        "solve-2d" => Task::Solve2d {
            p: p()?,
            potential: build_potential(&raw)?,
            domain: build_domain(&raw)?,
            inner: build_expr(&raw, "inner")?,
            outer: build_expr(&raw, "outer")?,
            n_r: int(&raw, "n_r", 128)?,
            n_theta: int(&raw, "n_theta", 128)?,
        },
        "harnack" | "probe" => {
            let common = (
                p()?,
                build_potential(&raw)?,
                build_domain(&raw)?,
                build_expr(&raw, "inner1")?,
                build_expr(&raw, "outer1")?,
                build_expr(&raw, "inner2")?,
                build_expr(&raw, "outer2")?,
                int(&raw, "n_r", 128)?,
                int(&raw, "n_theta", 32)?,
                build_zeta(&raw)?,
            );
            if task_kind == "harnack" {
                Task::Harnack {
                    p: common.0,
                    potential: common.1,
                    domain: common.2,
                    inner1: common.3,
                    outer1: common.4,
                    inner2: common.5,
                    outer2: common.6,
                    n_r: common.7,
                    n_theta: common.8,
                    zeta: common.9,
                }
            } else {
                Task::Probe {
                    p: common.0,
                    potential: common.1,
                    domain: common.2,
                    inner1: common.3,
                    outer1: common.4,
                    inner2: common.5,
                    outer2: common.6,
                    n_r: common.7,
                    n_theta: common.8,
                    zeta: common.9,
                    expected_class: text(&raw, "expected_class"),
                }
            }
        }
        "sector" => Task::Sector {
            p: p()?,
            aperture: num_req(&raw, "aperture")?,
            check_2d: text(&raw, "check_2d").as_deref() == Some("true"),
            r_lo: num(&raw, "r_lo")?.unwrap_or(1.0),
            r_hi: num(&raw, "r_hi")?.unwrap_or(4.0),
            n_r: int(&raw, "n_r", 64)?,
            n_theta: int(&raw, "n_theta", 64)?,
        },
        other => return Err(parse_err(0, format!("unknown task '{other}'"))),
    };

    let mut tols = BTreeMap::new();
    for (key, (lineno, v)) in &raw.keys {
        if let Some(tname) = key.strip_prefix("tol.") {
            let value = Expr::parse_const(v)
                .map_err(|e| parse_err(*lineno, format!("tolerance '{key}': {e}")))?;
            tols.insert(tname.to_string(), value);
        }
    }
    let format = match text(&raw, "format").as_deref() {
        Some("json") => Format::Json,
        _ => Format::Csv,
    };
    let seed = num(&raw, "seed")?.map(|v| v as u64).unwrap_or(0);
    Ok(Scenario {
        name,
        task,
        format,
        seed,
        tols,
    })
}

/// Load and parse a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text_input = fs::read_to_string(path)?;
    parse_scenario(&text_input)
}

// ---------------------------------------------------------------------------
// artifact writers
// ---------------------------------------------------------------------------

/// Format a float with 17 significant digits (lossless double round-trip).
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt17(v));
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    fs::write(path, buf)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// running
// ---------------------------------------------------------------------------

struct Ctx<'a> {
    scenario: &'a Scenario,
    out_dir: PathBuf,
    checks: Vec<CheckOutcome>,
}

impl Ctx<'_> {
    fn check(&mut self, name: &str, target: String, measured: String, pass: bool) {
        self.checks.push(CheckOutcome {
            name: name.to_string(),
            target,
            measured,
            pass,
        });
    }

    fn check_le(&mut self, name: &str, measured: f64, bound: f64) {
        self.check(
            name,
            format!("<= {bound:.3e}"),
            format!("{measured:.6e}"),
            measured <= bound,
        );
    }
}

/// Execute a scenario: run the task, write artifacts under
/// `out_dir/<scenario name>/`, and return the record. The record itself is
/// written as `record.json`. Exit-status semantics live in the binary: the
/// caller fails with a check error when `all_pass` is false.
pub fn run(scenario: &Scenario, out_root: &Path) -> Result<RunRecord> {
    let started = std::time::Instant::now();
    let out_dir = out_root.join(&scenario.name);
    fs::create_dir_all(&out_dir)?;
    let mut ctx = Ctx {
        scenario,
        out_dir: out_dir.clone(),
        checks: Vec::new(),
    };
    let (summary, payload) = dispatch(&mut ctx)?;
    let record = RunRecord {
        scenario_name: scenario.name.clone(),
        tool_version: TOOL_VERSION.to_string(),
        config: scenario.clone(),
        summary,
        checks: ctx.checks,
        payload,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_json(&out_dir.join("record.json"), &record)?;
    Ok(record)
}

fn dispatch(ctx: &mut Ctx) -> Result<(serde_json::Value, Payload)> {
    let sc = ctx.scenario;
    match &sc.task {
        Task::Exponents { p, d, lambdas } => {
            let params = Params::new(*p, *d)?;
            let ch = hardy_constant(&params);
            let mut pairs = Vec::with_capacity(lambdas.len());
            let mut worst_residual: f64 = 0.0;
            let mut ordered = true;
            for &lambda in lambdas {
                let pair = solve_gamma(lambda, &params)?;
                if !pair.degenerate {
                    let scale = lambda.abs().max(1.0);
                    worst_residual = worst_residual
                        .max((characteristic(pair.gamma_minus, &params) - lambda).abs() / scale)
                        .max((characteristic(pair.gamma_plus, &params) - lambda).abs() / scale);
                }
                ordered &= pair.gamma_minus <= params.gamma_star() + 1e-12
                    && params.gamma_star() <= pair.gamma_plus + 1e-12;
                pairs.push(pair);
            }
            ctx.check_le(
                "characteristic_residual",
                worst_residual,
                sc.tol("gamma_residual"),
            );
            ctx.check(
                "exponent_ordering",
                "gamma_- <= gamma_* <= gamma_+".into(),
                format!("{ordered}"),
                ordered,
            );
            write_csv(
                &ctx.out_dir.join("exponents.csv"),
                "lambda,gamma_minus,gamma_plus,degenerate",
                lambdas.iter().zip(&pairs).map(|(&l, pr)| {
                    vec![
                        l,
                        pr.gamma_minus,
                        pr.gamma_plus,
                        if pr.degenerate { 1.0 } else { 0.0 },
                    ]
                }),
            )?;
            let summary = serde_json::json!({
                "hardy_constant": ch,
                "gamma_star": params.gamma_star(),
                "count": lambdas.len(),
                "worst_residual": worst_residual,
            });
            Ok((
                summary,
                Payload::Exponents {
                    lambdas: lambdas.clone(),
                    pairs,
                },
            ))
        }

        Task::SolveRadial {
            p,
            d,
            potential,
            mode,
            quotient_power,
        } => {
            let params = Params::new(*p, *d)?;
            let solution = run_radial_mode(&params, potential, mode)?;
            export_radial(&ctx.out_dir, &solution, sc.format)?;
            ctx.check(
                "positive",
                "v > 0 on grid".into(),
                format!("{}", solution.v.iter().all(|&v| v > 0.0)),
                solution.v.iter().all(|&v| v > 0.0),
            );
            let summary = serde_json::json!({
                "grid_points": solution.grid.len(),
                "r_first": solution.grid[0],
                "r_last": solution.grid[solution.grid.len() - 1],
                "truncated_at": solution.truncated_at,
            });
            if let Some(alpha) = quotient_power {
                let power = reference_power(&params, potential, &solution, *alpha)?;
                let q = quotient_profile(&solution, &power, Zeta::Infinity)?;
                write_csv(
                    &ctx.out_dir.join("quotient.csv"),
                    "log10_r,quotient",
                    q.radii.iter().zip(&q.m).map(|(&r, &m)| vec![r.log10(), m]),
                )?;
                return Ok((summary, Payload::Quotient { quotient: q }));
            }
            Ok((summary, Payload::Radial { solution }))
        }

        Task::Classify {
            p,
            d,
            potential,
            mode,
            zeta,
            expected_class,
        } => {
            let params = Params::new(*p, *d)?;
            let solution = run_radial_mode(&params, potential, mode)?;
            let report = classify_asymptotics(&solution, *zeta, &params)?;
            ctx.check_le("fit_residual", report.residual, sc.tol("fit_residual"));
            if let Some(expect) = expected_class {
                let got = serde_json::to_value(report.class)?
                    .as_str()
                    .unwrap()
                    .to_string();
                ctx.check("class", expect.clone(), got.clone(), &got == expect);
            }
            export_radial(&ctx.out_dir, &solution, sc.format)?;
            write_json(&ctx.out_dir.join("classification.json"), &report)?;
            let summary = serde_json::to_value(&report)?;
            Ok((summary, Payload::Asymptotics { report, solution }))
        }

        Task::MinimalGrowth {
            p,
            d,
            potential,
            zeta,
            r_anchor,
            n_stages,
            expected_exponent,
        } => {
            let params = Params::new(*p, *d)?;
            let result =
                minimal_growth_exhaustion(&params, potential, *zeta, *r_anchor, *n_stages)?;
            if let Some(expect) = expected_exponent {
                ctx.check_le(
                    "exponent_error",
                    (result.exponent - expect).abs(),
                    sc.tol("exponent"),
                );
            }
            export_radial(&ctx.out_dir, &result.solution, sc.format)?;
            write_json(
                &ctx.out_dir.join("exhaustion.json"),
                &serde_json::json!({
                    "exponent": result.exponent,
                    "stage_exponents": result.stage_exponents,
                }),
            )?;
            let summary = serde_json::json!({
                "exponent": result.exponent,
                "stages": result.stage_exponents.len(),
            });
            Ok((summary, Payload::Exhaustion { result }))
        }

        Task::Dilate {
            p,
            d,
            potential,
            zeta,
            sequences,
            expected_certified,
            expected_m,
        } => {
            let params = Params::new(*p, *d)?;
            let seqs: Vec<DilationSequence> = sequences
                .iter()
                .map(|s| s.build(*zeta))
                .collect::<Result<_>>()?;
            let report = weak_fuchsian_check(potential, &seqs, &params)?;
            if let Some(expect) = expected_certified {
                ctx.check(
                    "certified",
                    format!("{expect}"),
                    format!("{}", report.certified),
                    report.certified == *expect,
                );
            }
            if let Some(expect) = expected_m {
                ctx.check(
                    "dilations_used",
                    format!("{expect}"),
                    format!("{}", report.m_used),
                    report.m_used == *expect,
                );
            }
            write_json(&ctx.out_dir.join("dilation.json"), &report)?;
            let summary = serde_json::json!({
                "certified": report.certified,
                "m_used": report.m_used,
                "fixed_point": report.stages.first().map(|s| s.fixed_point),
            });
            Ok((summary, Payload::WeakFuchsian { report }))
        }

        Task::LqCheck {
            p,
            d,
            potential,
            q,
            zeta,
            expected_certified,
        } => {
            let params = Params::new(*p, *d)?;
            let report = lq_criterion(potential, *q, &params, *zeta)?;
            if let Some(expect) = expected_certified {
                ctx.check(
                    "certified",
                    format!("{expect}"),
                    format!("{}", report.certified),
                    report.certified == *expect,
                );
            }
            write_json(&ctx.out_dir.join("lq.json"), &report)?;
            let summary = serde_json::to_value(&report)?;
            Ok((summary, Payload::Lq { report }))
        }

        Task::Energy {
            p,
            d,
            potential,
            gamma,
            plateau,
            ramp,
            scan_negative,
        } => {
            let params = Params::new(*p, *d)?;
            let mut values = Vec::new();
            let mut found_negative = false;
            let widths: Vec<f64> = if *scan_negative {
                (1..=8).map(|k| plateau * k as f64).collect()
            } else {
                vec![*plateau]
            };
            for s1 in widths {
                let prof = taper_profile(*gamma, s1, s1 + ramp, 128);
                let e = crate::variational::energy(&params, potential, &prof);
                found_negative |= e < 0.0;
                values.push((s1, e));
            }
            if *scan_negative {
                ctx.check(
                    "negative_energy_found",
                    "true".into(),
                    format!("{found_negative}"),
                    found_negative,
                );
            } else {
                ctx.check(
                    "nonnegative",
                    ">= -1e-12".into(),
                    format!("{:.6e}", values[0].1),
                    values[0].1 >= -1e-12,
                );
            }
            write_csv(
                &ctx.out_dir.join("energy.csv"),
                "plateau_halfwidth_log,energy",
                values.iter().map(|&(s, e)| vec![s, e]),
            )?;
            let summary = serde_json::json!({
                "values": values,
                "found_negative": found_negative,
            });
            Ok((summary, Payload::Energy { values }))
        }

        Task::Picone {
            p,
            aperture,
            ks,
            n_r,
            n_theta,
        } => {
            let exps = sector_exponents(*p, *aperture)?;
            let params = Params::new(*p, 2)?;
            let beta0 = exps.beta_singular;
            let mut integrals = Vec::with_capacity(ks.len());
            for &k in ks {
                let domain = Domain2::Sector {
                    r_lo: 1.0,
                    r_hi: 2.0 * k,
                    aperture: *aperture,
                };
                let u0 = PolarField::separable(
                    domain,
                    params,
                    *n_r,
                    *n_theta,
                    beta0,
                    &exps.profile_singular,
                )?;
                let mut cut = u0.clone();
                for (i, &r) in u0.r_grid.clone().iter().enumerate() {
                    let chi = if r <= k {
                        1.0
                    } else {
                        ((2.0 * k - r) / k).max(0.0)
                    };
                    for j in 0..u0.n_theta() {
                        cut.values[i * u0.n_theta() + j] *= chi;
                    }
                }
                integrals.push(picone_polar(&cut, &u0)?.integral);
            }
            let decay = integrals.first().copied().unwrap_or(0.0)
                / integrals.last().copied().unwrap_or(1.0).max(1e-300);
            ctx.check(
                "picone_decay_factor",
                format!(">= {}", sc.tol("picone_decay")),
                format!("{decay:.3}"),
                decay >= sc.tol("picone_decay"),
            );
            write_csv(
                &ctx.out_dir.join("picone.csv"),
                "k,integral",
                ks.iter().zip(&integrals).map(|(&k, &v)| vec![k, v]),
            )?;
            let summary = serde_json::json!({
                "beta_singular": beta0,
                "integrals": integrals,
                "decay_factor": decay,
            });
            Ok((
                summary,
                Payload::Picone {
                    ks: ks.clone(),
                    integrals,
                },
            ))
        }

        Task::Kelvin { p, d, r_lo, r_hi } => {
            let params = Params::new(*p, *d)?;
            let mu = params.mu_exponent();
            let sol = ivp_solve(
                &params,
                &Potential::zero(),
                *r_lo,
                r_lo.powf(mu),
                mu * r_lo.powf(mu - 1.0),
                *r_hi,
            )?;
            let profile = sol.profile();
            let transported = kelvin_radial(&profile);
            let spec = WeightedOperatorSpec::from_kelvin(&params);
            let residual_weighted = weighted_residual(&transported, &spec);
            let plain_spec = WeightedOperatorSpec::new(0.0, &params);
            let residual_plain = weighted_residual(&profile, &plain_spec);
            let back = kelvin_radial(&transported);
            let involution_gap = profile
                .r
                .iter()
                .zip(&back.r)
                .map(|(&a, &b)| (a - b).abs() / a)
                .fold(0.0f64, f64::max)
                .max(
                    profile
                        .u
                        .iter()
                        .zip(&back.u)
                        .map(|(&a, &b)| (a - b).abs() / a.abs().max(1e-300))
                        .fold(0.0, f64::max),
                );
            ctx.check_le(
                "weighted_residual",
                residual_weighted,
                sc.tol("kelvin_residual"),
            );
            ctx.check_le("involution_gap", involution_gap, 1e-12);
            let summary = serde_json::json!({
                "beta": spec.beta,
                "residual_plain": residual_plain,
                "residual_weighted": residual_weighted,
                "involution_gap": involution_gap,
            });
            write_json(&ctx.out_dir.join("kelvin.json"), &summary)?;
            Ok((
                summary,
                Payload::Kelvin {
                    residual_plain,
                    residual_weighted,
                    involution_gap,
                },
            ))
        }

        Task::Capacity {
            p,
            d,
            beta,
            r,
            big_r,
            n,
        } => {
            let params = Params::new(*p, *d)?;
            let result = weighted_capacity(&params, *beta, *r, *big_r, *n)?;
            ctx.check_le("capacity_gap", result.relative_gap, sc.tol("capacity_gap"));
            write_json(&ctx.out_dir.join("capacity.json"), &result)?;
            let summary = serde_json::to_value(result)?;
            Ok((summary, Payload::Capacity { result }))
        }

        Task::Flux {
            p,
            d,
            beta,
            alpha,
            r_lo,
            r_hi,
            count,
        } => {
            let params = Params::new(*p, *d)?;
            let spec = match beta {
                Some(b) => WeightedOperatorSpec::new(*b, &params),
                None => WeightedOperatorSpec::from_kelvin(&params),
            };
            let a = alpha.unwrap_or(spec.alpha());
            let grid = log_grid(*r_lo, *r_hi, 4096);
            let profile =
                RadialProfile::from_fn(grid.clone(), |rr| (rr.powf(a), a * rr.powf(a - 1.0)));
            let cutoffs = randomized_cutoffs(&grid, *r_lo, *r_hi, (*count).max(2), sc.seed);
            let report = flux_constant(&profile, &cutoffs, &spec)?;
            let closed = flux_closed_form_power(&spec, a);
            ctx.check_le(
                "flux_spread",
                report.max_relative_spread,
                sc.tol("flux_spread"),
            );
            ctx.check_le(
                "flux_vs_closed_form",
                report
                    .values
                    .iter()
                    .map(|&v| (v - closed).abs() / closed.abs().max(1e-300))
                    .fold(0.0, f64::max),
                1e-7,
            );
            write_json(&ctx.out_dir.join("flux.json"), &report)?;
            let summary = serde_json::json!({
                "alpha": a,
                "beta": spec.beta,
                "values": report.values,
                "closed_form": closed,
                "max_relative_spread": report.max_relative_spread,
            });
            Ok((
                summary,
                Payload::Flux {
                    report,
                    closed_form: Some(closed),
                },
            ))
        }

        Task::Solve2d {
            p,
            potential,
            domain,
            inner,
            outer,
            n_r,
            n_theta,
        } => {
            let params = Params::new(*p, 2)?;
            let data = BoundaryData::from_exprs(domain, *n_theta, inner, outer);
            let field = solve_dirichlet_2d(&params, potential, *domain, &data, *n_r, *n_theta)?;
            ctx.check_le(
                "solver_residual",
                field.residual,
                crate::annulus::RESIDUAL_TOL,
            );
            export_field(&ctx.out_dir, &field, sc.format)?;
            let diag = critical_set_diagnostics(&field);
            write_json(&ctx.out_dir.join("critical_set.json"), &diag)?;
            let summary = serde_json::json!({
                "residual": field.residual,
                "epsilon_final": field.epsilon_final,
                "critical_nodes": diag.n_critical,
                "complement_components": diag.complement_components,
            });
            Ok((summary, Payload::Field { field }))
        }

        Task::Harnack {
            p,
            potential,
            domain,
            inner1,
            outer1,
            inner2,
            outer2,
            n_r,
            n_theta,
            zeta,
        } => {
            let (u, v) = solve_pair(
                *p, potential, domain, inner1, outer1, inner2, outer2, *n_r, *n_theta,
            )?;
            let report = harnack_profile(&u, &v, *zeta)?;
            // Measured one octave inside the zeta-side circle: the boundary
            // row itself is pinned by the Dirichlet data.
            let final_ratio = match zeta {
                Zeta::Origin => {
                    let i = report
                        .radii
                        .iter()
                        .position(|&r| r >= 2.0 * report.radii[0])
                        .unwrap_or(0);
                    report.ratio_r[i]
                }
                Zeta::Infinity => {
                    let n = report.radii.len();
                    let i = report
                        .radii
                        .iter()
                        .rposition(|&r| r <= 0.5 * report.radii[n - 1])
                        .unwrap_or(n - 1);
                    report.ratio_r[i]
                }
            };
            ctx.check_le("final_ratio", final_ratio, sc.tol("harnack_final_ratio"));
            ctx.check(
                "tail_monotone",
                "m_r and M_r eventually monotone".into(),
                format!(
                    "{}",
                    report.m_eventually_monotone && report.big_m_eventually_monotone
                ),
                report.m_eventually_monotone && report.big_m_eventually_monotone,
            );
            write_csv(
                &ctx.out_dir.join("harnack.csv"),
                "log10_r,m_r,M_r,ratio",
                (0..report.radii.len()).map(|i| {
                    vec![
                        report.radii[i].log10(),
                        report.m_r[i],
                        report.big_m_r[i],
                        report.ratio_r[i],
                    ]
                }),
            )?;
            let summary = serde_json::json!({
                "uniform_bound": report.uniform_bound,
                "final_ratio": final_ratio,
                "limit_class": report.limit_class,
            });
            Ok((summary, Payload::Harnack { report }))
        }

        Task::Probe {
            p,
            potential,
            domain,
            inner1,
            outer1,
            inner2,
            outer2,
            n_r,
            n_theta,
            zeta,
            expected_class,
        } => {
            let (u, v) = solve_pair(
                *p, potential, domain, inner1, outer1, inner2, outer2, *n_r, *n_theta,
            )?;
            let report = regular_point_probe(&u, &v, *zeta)?;
            if let Some(expect) = expected_class {
                let got = serde_json::to_value(report.limit_class)?
                    .as_str()
                    .unwrap()
                    .to_string();
                ctx.check("limit_class", expect.clone(), got.clone(), &got == expect);
            }
            write_json(&ctx.out_dir.join("probe.json"), &report)?;
            let summary = serde_json::json!({
                "limit_class": report.limit_class,
                "final_ratio": report.final_ratio,
                "ratio_shrinking": report.ratio_shrinking,
                "status": report.status,
            });
            Ok((summary, Payload::Probe { report }))
        }

        Task::Sector {
            p,
            aperture,
            check_2d,
            r_lo,
            r_hi,
            n_r,
            n_theta,
        } => {
            let exps = sector_exponents(*p, *aperture)?;
            if (*p - 2.0).abs() < 1e-14 {
                let expect = std::f64::consts::PI / aperture;
                ctx.check_le(
                    "p2_closed_form",
                    (exps.beta_regular - expect).abs(),
                    sc.tol("sector_p2"),
                );
            }
            let check = if *check_2d {
                let rep = sector_separable_check(&exps, *p, *r_lo, *r_hi, *n_r, *n_theta)?;
                ctx.check_le("solve_gap", rep.solve_gap, sc.tol("sector_gap"));
                Some(rep)
            } else {
                None
            };
            write_csv(
                &ctx.out_dir.join("sector_profile.csv"),
                "theta,phi_regular,phi_singular",
                (0..exps.profile_regular.theta.len()).map(|i| {
                    vec![
                        exps.profile_regular.theta[i],
                        exps.profile_regular.phi[i],
                        exps.profile_singular.phi[i],
                    ]
                }),
            )?;
            let summary = serde_json::json!({
                "beta_regular": exps.beta_regular,
                "beta_singular": exps.beta_singular,
                "aperture": aperture,
                "solve_gap": check.as_ref().map(|c| c.solve_gap),
            });
            Ok((
                summary,
                Payload::Sector {
                    exponents: exps,
                    check,
                },
            ))
        }
    }
}

fn run_radial_mode(
    params: &Params,
    potential: &Potential,
    mode: &RadialMode,
) -> Result<RadialSolution> {
    match mode {
        RadialMode::Ivp {
            r0,
            v0,
            slope0,
            r_end,
        } => ivp_solve(params, potential, *r0, *v0, *slope0, *r_end),
        RadialMode::Bvp {
            r_lo,
            r_hi,
            a,
            b,
            n,
        } => bvp_dirichlet(params, potential, *r_lo, *r_hi, *a, *b, *n),
    }
}

/// A pure power solution sampled on the same grid (for quotients).
fn reference_power(
    params: &Params,
    potential: &Potential,
    like: &RadialSolution,
    alpha: f64,
) -> Result<RadialSolution> {
    let grid = like.grid.clone();
    let p = params.p;
    let d = params.df();
    let v: Vec<f64> = grid.iter().map(|&r| r.powf(alpha)).collect();
    let w: Vec<f64> = grid
        .iter()
        .map(|&r| r.powf(d - 1.0) * crate::num::phi_p(alpha * r.powf(alpha - 1.0), p))
        .collect();
    Ok(RadialSolution {
        grid,
        v,
        w,
        params: *params,
        potential: potential.clone(),
        truncated_at: None,
    })
}

fn solve_pair(
    p: f64,
    potential: &Potential,
    domain: &Domain2,
    inner1: &Expr,
    outer1: &Expr,
    inner2: &Expr,
    outer2: &Expr,
    n_r: usize,
    n_theta: usize,
) -> Result<(PolarField, PolarField)> {
    let params = Params::new(p, 2)?;
    let d1 = BoundaryData::from_exprs(domain, n_theta, inner1, outer1);
    let d2 = BoundaryData::from_exprs(domain, n_theta, inner2, outer2);
    let u = solve_dirichlet_2d(&params, potential, *domain, &d1, n_r, n_theta)?;
    let v = solve_dirichlet_2d(&params, potential, *domain, &d2, n_r, n_theta)?;
    Ok((u, v))
}

/// Taper profile `r^gamma eta(ln r)` with plateau `[-s1, s1]` and linear
/// log-ramps hitting zero at `[-s2, s2]`.
pub fn taper_profile(gamma: f64, s1: f64, s2: f64, n_per_unit: usize) -> RadialProfile {
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

fn export_radial(dir: &Path, sol: &RadialSolution, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(
            &dir.join("solution.csv"),
            "r,v,w",
            (0..sol.grid.len()).map(|i| vec![sol.grid[i], sol.v[i], sol.w[i]]),
        ),
        Format::Json => write_json(&dir.join("solution.json"), sol),
    }
}

fn export_field(dir: &Path, field: &PolarField, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(
            &dir.join("field.csv"),
            "r,theta,u",
            (0..field.n_r()).flat_map(|i| {
                let field = &field;
                (0..field.n_theta())
                    .map(move |j| vec![field.r_grid[i], field.theta_grid[j], field.at(i, j)])
            }),
        ),
        Format::Json => write_json(&dir.join("field.json"), field),
    }
}

// ---------------------------------------------------------------------------
// plot-data emission
// ---------------------------------------------------------------------------

/// Plot manifest describing the emitted columns and the statement the plot
/// illustrates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlotManifest {
    pub file: String,
    pub x_axis: String,
    pub y_axes: Vec<String>,
    pub claim: String,
}

/// Write plot-ready CSV (log-radius columns precomputed) plus a JSON
/// manifest for the record's payload. Returns the emitted file names.
pub fn emit_plotdata(record: &RunRecord, out_dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out_dir)?;
    let mut emitted = Vec::new();
    let manifest = |m: PlotManifest| -> Result<()> {
        let path = out_dir.join(format!("{}.manifest.json", m.file));
        write_json(&path, &m)?;
        Ok(())
    };
    match &record.payload {
        Payload::Quotient { quotient } => {
            let file = "quotient_plot.csv";
            write_csv(
                &out_dir.join(file),
                "log10_r,quotient",
                quotient
                    .radii
                    .iter()
                    .zip(&quotient.m)
                    .map(|(&r, &q)| vec![r.log10(), q]),
            )?;
            manifest(PlotManifest {
                file: file.into(),
                x_axis: "log10_r".into(),
                y_axes: vec!["quotient".into()],
                claim: "the quotient of two positive solutions approaches a (possibly zero or \
                        infinite) limit toward the singular point"
                    .into(),
            })?;
            emitted.push(file.to_string());
        }
        Payload::Harnack { report } => {
            let file = "harnack_plot.csv";
            write_csv(
                &out_dir.join(file),
                "log10_r,m_r,M_r,ratio",
                (0..report.radii.len()).map(|i| {
                    vec![
                        report.radii[i].log10(),
                        report.m_r[i],
                        report.big_m_r[i],
                        report.ratio_r[i],
                    ]
                }),
            )?;
            manifest(PlotManifest {
                file: file.into(),
                x_axis: "log10_r".into(),
                y_axes: vec!["m_r".into(), "M_r".into(), "ratio".into()],
                claim: "sphere-wise sup/inf of the quotient of two positive solutions stays \
                        bounded by one constant across radii (uniform Harnack inequality)"
                    .into(),
            })?;
            emitted.push(file.to_string());
        }
        Payload::Asymptotics { report, solution } => {
            let file = "asymptotics_plot.csv";
            let params = solution.params;
            let basis = |r: f64| -> f64 {
                if params.is_conformal() {
                    r.ln()
                } else {
                    r.powf(params.mu_exponent())
                }
            };
            let coeff = report.constant;
            write_csv(
                &out_dir.join(file),
                "log10_r,solution,fitted_term",
                solution
                    .grid
                    .iter()
                    .zip(&solution.v)
                    .map(|(&r, &v)| vec![r.log10(), v, coeff * basis(r)]),
            )?;
            manifest(PlotManifest {
                file: file.into(),
                x_axis: "log10_r".into(),
                y_axes: vec!["solution".into(), "fitted_term".into()],
                claim: "near an isolated singularity a positive solution either has a finite \
                        limit or follows the fundamental-solution profile (power, or log when \
                        p = d)"
                    .into(),
            })?;
            emitted.push(file.to_string());
        }
        Payload::Radial { solution } => {
            let file = "radial_plot.csv";
            write_csv(
                &out_dir.join(file),
                "log10_r,v,w",
                (0..solution.grid.len())
                    .map(|i| vec![solution.grid[i].log10(), solution.v[i], solution.w[i]]),
            )?;
            manifest(PlotManifest {
                file: file.into(),
                x_axis: "log10_r".into(),
                y_axes: vec!["v".into(), "w".into()],
                claim: "radial solution and its flux variable".into(),
            })?;
            emitted.push(file.to_string());
        }
        Payload::Field { field } => {
            let file = "field_plot.csv";
            write_csv(
                &out_dir.join(file),
                "r,theta,u",
                (0..field.n_r()).flat_map(|i| {
                    let field = &field;
                    (0..field.n_theta())
                        .map(move |j| vec![field.r_grid[i], field.theta_grid[j], field.at(i, j)])
                }),
            )?;
            manifest(PlotManifest {
                file: file.into(),
                x_axis: "r".into(),
                y_axes: vec!["theta".into(), "u".into()],
                claim: "positive solution of the planar equation on an annulus or sector".into(),
            })?;
            emitted.push(file.to_string());
        }
        Payload::Exponents { lambdas, pairs } => {
            let file = "exponents_plot.csv";
            write_csv(
                &out_dir.join(file),
                "lambda,gamma_minus,gamma_plus",
                lambdas
                    .iter()
                    .zip(pairs)
                    .map(|(&l, pr)| vec![l, pr.gamma_minus, pr.gamma_plus]),
            )?;
            manifest(PlotManifest {
                file: file.into(),
                x_axis: "lambda".into(),
                y_axes: vec!["gamma_minus".into(), "gamma_plus".into()],
                claim: "the two power exponents coalesce at the critical coupling (the Hardy \
                        constant), where the equation becomes critical"
                    .into(),
            })?;
            emitted.push(file.to_string());
        }
        other => {
            return Err(Error::Usage(format!(
                "no plot emission for payload kind '{}'",
                serde_json::to_value(other)
                    .ok()
                    .and_then(|v| v.get("payload").cloned())
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "unknown".into())
            )));
        }
    }
    Ok(emitted)
}
