//! The `verify` suite: every shipped acceptance criterion, run in order
//! with one pass/fail line per criterion.
//!
//! Each criterion pins its tolerance and runtime budget in code. Tolerances
//! can be overridden by name (`--tol c7_capacity_gap=1e-6`), which is how
//! the forced-failure path is exercised. The suite is deterministic; a
//! dedicated criterion runs the artifact-producing scenarios twice and
//! byte-compares the outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::annulus::{
    harnack_profile, sector_separable_check, solve_dirichlet_2d, BoundaryData, Domain2, PolarField,
};
use crate::error::Result;
use crate::exponents::{characteristic, hardy_constant, sector_exponents, solve_gamma};
use crate::num::log_grid;
use crate::potential::{weak_fuchsian_check, DilationSequence, Potential};
use crate::radial::{
    bvp_dirichlet_fd, classify_asymptotics, ivp_solve, minimal_growth_exhaustion, AsymptoticClass,
};
use crate::scenario::{parse_scenario, run};
use crate::variational::{
    flux_constant, kelvin_radial, picone_polar, randomized_cutoffs, weighted_capacity,
    weighted_residual, WeightedOperatorSpec,
};
use crate::{Params, Zeta};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub target: String,
    pub measured: String,
    pub pass: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
}

/// Summary of a full verification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySummary {
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
}

struct Tols<'a>(&'a BTreeMap<String, f64>);

impl Tols<'_> {
    fn get(&self, name: &str, default: f64) -> f64 {
        self.0.get(name).copied().unwrap_or(default)
    }
}

fn pd(p: f64, d: u32) -> Params {
    Params::new(p, d).unwrap()
}

/// Run the full acceptance suite, printing one line per criterion.
/// Artifacts of the determinism criterion go under `out_root`.
pub fn verify_suite(out_root: &Path, tols: &BTreeMap<String, f64>) -> Result<VerifySummary> {
    let t = Tols(tols);
    let mut criteria: Vec<CriterionResult> = Vec::new();
    let mut run_criterion =
        |id: usize,
         name: &str,
         budget: f64,
         f: &mut dyn FnMut() -> Result<(String, String, bool)>| {
            let started = Instant::now();
            let outcome = f();
            let seconds = started.elapsed().as_secs_f64();
            let (target, measured, mut pass) = match outcome {
                Ok(v) => v,
                Err(e) => ("no error".to_string(), format!("error: {e}"), false),
            };
            pass &= seconds <= budget;
            let row = CriterionResult {
                id,
                name: name.to_string(),
                target,
                measured,
                pass,
                seconds,
                budget_seconds: budget,
            };
            println!(
                "[{}] criterion {:2} {:<22} target {:<34} measured {:<40} ({:.2}s / {:.0}s)",
                if row.pass { "PASS" } else { "FAIL" },
                row.id,
                row.name,
                row.target,
                row.measured,
                row.seconds,
                row.budget_seconds
            );
            criteria.push(row);
        };

    // 1. Exponent algebra on a grid of 50 (p, d, lambda) triples.
    run_criterion(1, "exponent-algebra", 1.0, &mut || {
        let tol = t.get("c1_residual", 1e-10);
        let ps = [1.5, 2.0, 2.5, 3.0, 4.5];
        let ds = [2u32, 5];
        let mut count = 0;
        let mut worst: f64 = 0.0;
        let mut ordered = true;
        for &p in &ps {
            for &d in &ds {
                let params = pd(p, d);
                let ch = hardy_constant(&params);
                for j in 0..5 {
                    let lambda = ch - (0.05 + 0.45 * j as f64);
                    let pair = solve_gamma(lambda, &params)?;
                    worst = worst
                        .max((characteristic(pair.gamma_minus, &params) - lambda).abs())
                        .max((characteristic(pair.gamma_plus, &params) - lambda).abs());
                    ordered &= pair.gamma_minus <= params.gamma_star()
                        && params.gamma_star() <= pair.gamma_plus;
                    if p == 2.0 {
                        let disc = ((d as f64 - 2.0).powi(2) - 4.0 * lambda).sqrt();
                        let lo = 0.5 * (-(d as f64 - 2.0) - disc);
                        let hi = 0.5 * (-(d as f64 - 2.0) + disc);
                        worst = worst
                            .max((pair.gamma_minus - lo).abs())
                            .max((pair.gamma_plus - hi).abs());
                    }
                    count += 1;
                }
            }
        }
        Ok((
            format!("|F(g)-lambda| < {tol:.0e}, ordered, n=50"),
            format!("worst {worst:.2e}, ordered {ordered}, n={count}"),
            worst < tol && ordered && count == 50,
        ))
    });

    // 2. Critical coalescence at lambda = c_H.
    run_criterion(2, "critical-coalescence", 1.0, &mut || {
        let tol = t.get("c2_coalescence", 1e-6);
        let mut worst: f64 = 0.0;
        for &p in &[1.5, 2.0, 3.0, 4.5] {
            for &d in &[2u32, 3, 5] {
                let params = pd(p, d);
                let pair = solve_gamma(hardy_constant(&params), &params)?;
                let gs = params.gamma_star();
                worst = worst
                    .max((pair.gamma_minus - gs).abs())
                    .max((pair.gamma_plus - gs).abs());
            }
        }
        Ok((
            format!("|g± - (p-d)/p| < {tol:.0e}"),
            format!("worst {worst:.2e}"),
            worst < tol,
        ))
    });

    // 3. Radial solver order on the finite-difference route.
    run_criterion(3, "radial-solver-order", 10.0, &mut || {
        let tol = t.get("c3_final_error", 1e-6);
        let params = pd(2.0, 3);
        let lambda = 0.5 * hardy_constant(&params);
        let g = solve_gamma(lambda, &params)?.gamma_minus;
        let potential = Potential::hardy(lambda);
        let (r_lo, r_hi) = (1.0, 10.0);
        let mut errs = Vec::new();
        for n in [512usize, 1024, 2048, 4096] {
            let sol = bvp_dirichlet_fd(&params, &potential, r_lo, r_hi, 1.0, r_hi.powf(g), n)?;
            let err = sol
                .grid
                .iter()
                .zip(&sol.v)
                .map(|(&r, &v)| (v - r.powf(g)).abs() / r.powf(g))
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        let factors_ok = errs.windows(2).all(|w| w[1] <= w[0] / 2.0);
        let final_err = *errs.last().unwrap();
        let err_list = errs
            .iter()
            .map(|e| format!("{e:.2e}"))
            .collect::<Vec<_>>()
            .join(" ");
        Ok((
            format!("factor >= 2 per doubling, final < {tol:.0e}"),
            format!("errors [{err_list}]"),
            factors_ok && final_err < tol,
        ))
    });

    // 4. Minimal-growth exhaustion recovers gamma_-/gamma_+.
    run_criterion(4, "minimal-growth", 60.0, &mut || {
        let tol = t.get("c4_exponent", 1e-3);
        let mut worst: f64 = 0.0;
        for &(p, d) in &[(2.0, 3u32), (3.0, 2), (2.5, 3)] {
            let params = pd(p, d);
            let ch = hardy_constant(&params);
            for lambda in [0.0, 0.5 * ch] {
                let pair = solve_gamma(lambda, &params)?;
                let potential = Potential::hardy(lambda);
                let res0 = minimal_growth_exhaustion(&params, &potential, Zeta::Origin, 1.0, 26)?;
                worst = worst.max((res0.exponent - pair.gamma_minus).abs());
                let res1 = minimal_growth_exhaustion(&params, &potential, Zeta::Infinity, 1.0, 26)?;
                worst = worst.max((res1.exponent - pair.gamma_plus).abs());
            }
        }
        Ok((
            format!("|fit - gamma| < {tol:.0e}"),
            format!("worst {worst:.2e}"),
            worst < tol,
        ))
    });

    // 5. Asymptotic classification.
    run_criterion(5, "asymptotic-classes", 5.0, &mut || {
        let tol = t.get("c5_exponent", 1e-4);
        let mut ok = true;
        let mut notes = Vec::new();
        // p < d toward 0: power with exponent (p-d)/(p-1).
        let params = pd(2.0, 3);
        let g = params.mu_exponent();
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 1.0, g, 1e-3)?;
        let rep = classify_asymptotics(&sol, Zeta::Origin, &params)?;
        let e1 = rep.exponent.map(|e| (e - g).abs()).unwrap_or(f64::INFINITY);
        ok &= rep.class == AsymptoticClass::Power && e1 < tol;
        notes.push(format!("p<d pow err {e1:.1e}"));
        // p > d toward infinity.
        let params = pd(3.0, 2);
        let g = params.mu_exponent();
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 1.0, g, 1e3)?;
        let rep = classify_asymptotics(&sol, Zeta::Infinity, &params)?;
        let e2 = rep.exponent.map(|e| (e - g).abs()).unwrap_or(f64::INFINITY);
        ok &= rep.class == AsymptoticClass::Power && e2 < tol;
        notes.push(format!("p>d pow err {e2:.1e}"));
        // p = d: log class.
        let params = pd(2.0, 2);
        let sol = ivp_solve(&params, &Potential::zero(), 2.0, 2f64.ln(), 0.5, 1e3)?;
        let rep = classify_asymptotics(&sol, Zeta::Infinity, &params)?;
        ok &= rep.class == AsymptoticClass::Log;
        notes.push(format!("p=d log {:?}", rep.class));
        // constants: bounded limit.
        let params = pd(2.5, 3);
        let sol = ivp_solve(&params, &Potential::zero(), 1.0, 2.0, 0.0, 1e3)?;
        let rep = classify_asymptotics(&sol, Zeta::Infinity, &params)?;
        ok &= rep.class == AsymptoticClass::BoundedLimit;
        notes.push(format!("const {:?}", rep.class));
        Ok((
            format!("classes match, exponent err < {tol:.0e}"),
            notes.join("; "),
            ok,
        ))
    });

    // 6. Kelvin conjugacy.
    run_criterion(6, "kelvin-conjugacy", 5.0, &mut || {
        let tol = t.get("c6_residual", 1e-6);
        let mut worst_res: f64 = 0.0;
        let mut worst_inv: f64 = 0.0;
        for &(p, d) in &[(1.5, 3u32), (2.0, 3), (2.5, 4), (3.0, 2), (4.5, 2)] {
            let params = pd(p, d);
            let mu = params.mu_exponent();
            let sol = ivp_solve(
                &params,
                &Potential::zero(),
                0.1,
                0.1f64.powf(mu),
                mu * 0.1f64.powf(mu - 1.0),
                10.0,
            )?;
            let profile = sol.profile();
            let k = kelvin_radial(&profile);
            let spec = WeightedOperatorSpec::from_kelvin(&params);
            worst_res = worst_res.max(weighted_residual(&k, &spec));
            let back = kelvin_radial(&k);
            for i in 0..profile.r.len() {
                worst_inv = worst_inv
                    .max((back.r[i] - profile.r[i]).abs() / profile.r[i])
                    .max((back.u[i] - profile.u[i]).abs() / profile.u[i].abs().max(1e-300));
            }
        }
        Ok((
            format!("residual < {tol:.0e}, involution < 1e-12"),
            format!("residual {worst_res:.2e}, involution {worst_inv:.2e}"),
            worst_res < tol && worst_inv < 1e-12,
        ))
    });

    // 7. Capacity oracle agreement.
    run_criterion(7, "capacity-oracle", 20.0, &mut || {
        let tol = t.get("c7_capacity_gap", 1e-4);
        let cases: [(f64, u32, f64, f64, f64); 10] = [
            (2.0, 3, 0.0, 1.0, 4.0),
            (2.0, 3, 0.0, 0.5, 8.0),
            (3.0, 2, 2.0, 0.5, 8.0),  // beta = 2(p-d), p > d
            (4.5, 2, 5.0, 1.0, 16.0), // beta = 2(p-d), p > d
            (2.5, 3, 1.0, 1.0, 10.0),
            (1.5, 3, 0.0, 1.0, 4.0),
            (3.0, 3, 1.5, 1.0, 4.0),
            (2.0, 5, 0.0, 1.0, 4.0),
            (2.5, 2, 1.0, 0.25, 4.0),
            (4.5, 3, 3.0, 1.0, 8.0),
        ];
        let mut worst: f64 = 0.0;
        for &(p, d, beta, r, big_r) in &cases {
            let cap = weighted_capacity(&pd(p, d), beta, r, big_r, 4096)?;
            worst = worst.max(cap.relative_gap);
        }
        // Newtonian closed form.
        let cap = weighted_capacity(&pd(2.0, 3), 0.0, 1.0, 4.0, 4096)?;
        let newtonian = 4.0 * std::f64::consts::PI / (1.0 - 0.25);
        let newt_err = (cap.closed_form - newtonian).abs() / newtonian;
        Ok((
            format!("gap < {tol:.0e} (10 cases), newtonian < 1e-8"),
            format!("worst gap {worst:.2e}, newtonian {newt_err:.2e}"),
            worst < tol && newt_err < 1e-8,
        ))
    });

    // 8. Flux invariance across cutoffs.
    run_criterion(8, "flux-invariance", 5.0, &mut || {
        let tol = t.get("c8_spread", 1e-7);
        let params = pd(3.0, 2);
        let spec = WeightedOperatorSpec::from_kelvin(&params);
        let alpha = spec.alpha();
        let grid = log_grid(0.01, 1.0, 4096);
        let profile = crate::radial::RadialProfile::from_fn(grid.clone(), |r| {
            (r.powf(alpha), alpha * r.powf(alpha - 1.0))
        });
        let cutoffs = randomized_cutoffs(&grid, 0.01, 1.0, 5, 20240801);
        let rep = flux_constant(&profile, &cutoffs, &spec)?;
        Ok((
            format!("spread < {tol:.0e} over 5 cutoffs"),
            format!("spread {:.2e}", rep.max_relative_spread),
            rep.max_relative_spread < tol,
        ))
    });

    // 9. Dilation engine: shell cascade and the Hardy fixed point.
    run_criterion(9, "dilation-engine", 5.0, &mut || {
        let params = pd(2.0, 3);
        let mut cascade = Potential::zero();
        let mut radii = Vec::new();
        for k in 1..=7u32 {
            let rk = 10f64.powf(-((k * (k + 1) / 2) as f64));
            cascade = cascade.with_shell(rk, 2.0 * rk, 1.0, -params.p);
            radii.push(rk);
        }
        let seqs = [
            DilationSequence::new(radii, Zeta::Origin)?,
            DilationSequence::geometric(1e-3, 1e-3, 4, Zeta::Origin)?,
        ];
        let rep = weak_fuchsian_check(&cascade, &seqs, &params)?;
        let cascade_ok = rep.certified && rep.m_used == 2;

        let hardy = Potential::hardy(0.2);
        let seqs = [
            DilationSequence::geometric(0.1, 0.1, 5, Zeta::Origin)?,
            DilationSequence::geometric(0.05, 0.1, 5, Zeta::Origin)?,
        ];
        let rep_h = weak_fuchsian_check(&hardy, &seqs, &params)?;
        let hardy_ok = !rep_h.certified && rep_h.stages[0].fixed_point;
        Ok((
            "cascade certified with m=2; Hardy reported as fixed point".into(),
            format!(
                "cascade certified={} m={}, hardy fixed_point={} certified={}",
                rep.certified, rep.m_used, rep_h.stages[0].fixed_point, rep_h.certified
            ),
            cascade_ok && hardy_ok,
        ))
    });

    // 10. Sector exponents: closed forms and the two-route check.
    run_criterion(10, "sector-exponents", 120.0, &mut || {
        let tol_p2 = t.get("c10_p2", 1e-8);
        let tol_gap = t.get("c10_gap", 1e-3);
        let mut worst_p2: f64 = 0.0;
        use std::f64::consts::PI;
        for theta0 in [PI / 4.0, PI / 2.0, PI, 1.5 * PI] {
            let exps = sector_exponents(2.0, theta0)?;
            worst_p2 = worst_p2.max((exps.beta_regular - PI / theta0).abs());
        }
        let mut worst_half: f64 = 0.0;
        for p in [1.5, 3.0, 4.5] {
            let exps = sector_exponents(p, PI)?;
            worst_half = worst_half.max((exps.beta_regular - 1.0).abs());
        }
        let exps = sector_exponents(3.0, PI / 2.0)?;
        let rep = sector_separable_check(&exps, 3.0, 1.0, 4.0, 96, 96)?;
        Ok((
            format!("p2 < {tol_p2:.0e}, half-plane < {tol_p2:.0e}, 2-D gap < {tol_gap:.0e}"),
            format!(
                "p2 {worst_p2:.2e}, half-plane {worst_half:.2e}, gap {:.2e}",
                rep.solve_gap
            ),
            worst_p2 < tol_p2 && worst_half < tol_p2 && rep.solve_gap < tol_gap,
        ))
    });

    // 11. Harnack / regularity probes over three decades. The coupling is
    // a genuine subcritical Hardy one (p = 2.5, d = 2); the two solutions
    // carry different angular perturbations on the outer circle and radial
    // data of different levels at the inner circle (solutions near a
    // singular point carry no data there, so nothing pins the quotient on
    // the approach). The final ratio is measured one octave inside the
    // inner circle, away from the data-pinned row.
    run_criterion(11, "harnack-probes", 120.0, &mut || {
        let tol_ratio = t.get("c11_final_ratio", 1.02);
        let params = pd(2.5, 2);
        let lambda = 0.5 * hardy_constant(&params);
        let potential = Potential::hardy(lambda);
        let domain = Domain2::Annulus {
            r_lo: 1e-3,
            r_hi: 1.0,
        };
        let nt = 24;
        let solve = |inner: f64, m: f64, amp: f64| -> Result<PolarField> {
            let data =
                BoundaryData::from_fns(&domain, nt, |_| inner, |th| 1.0 + amp * (m * th).cos());
            solve_dirichlet_2d(&params, &potential, domain, &data, 210, nt)
        };
        let u = solve(1.0, 2.0, 0.3)?;
        let v = solve(0.5, 3.0, -0.2)?;
        let rep = harnack_profile(&u, &v, Zeta::Origin)?;
        let n_r = rep.radii.len();
        let probe_idx = rep.radii.iter().position(|&r| r >= 2e-3).unwrap_or(0);
        let final_ratio = rep.ratio_r[probe_idx];
        let decreasing = final_ratio <= rep.ratio_r[n_r - 1];
        let mono = rep.m_eventually_monotone && rep.big_m_eventually_monotone;
        Ok((
            format!("m_r/M_r monotone tails, ratio decreasing, final < {tol_ratio}"),
            format!(
                "ratio at 2e-3 {final_ratio:.6}, decreasing {decreasing}, monotone {mono}, bound {:.3}",
                rep.uniform_bound
            ),
            mono && decreasing && final_ratio < tol_ratio,
        ))
    });

    // 12. Picone cutoff decay on a sector with p = d = 2.
    run_criterion(12, "picone-decay", 30.0, &mut || {
        let factor_target = t.get("c12_decay", 10.0);
        let aperture = std::f64::consts::PI;
        let exps = sector_exponents(2.0, aperture)?;
        let params = pd(2.0, 2);
        let beta0 = exps.beta_singular;
        let integral_at = |k: f64| -> Result<f64> {
            let domain = Domain2::Sector {
                r_lo: 1.0,
                r_hi: 2.0 * k,
                aperture,
            };
            let u0 = PolarField::separable(domain, params, 384, 48, beta0, &exps.profile_singular)?;
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
            Ok(picone_polar(&cut, &u0)?.integral)
        };
        let i8 = integral_at(8.0)?;
        let i128 = integral_at(128.0)?;
        let factor = i8 / i128.max(1e-300);
        Ok((
            format!("decrease >= {factor_target}x from k=8 to k=128"),
            format!("{i8:.3e} -> {i128:.3e} (factor {factor:.1})"),
            i8 > 0.0 && i128 >= 0.0 && factor >= factor_target,
        ))
    });

    // 13. Determinism: the artifact-producing scenarios, run twice,
    // byte-compare the outputs.
    run_criterion(13, "determinism", 360.0 - 0.0, &mut || {
        let scenarios = [
            "name = det-exponents\ntask = exponents\np = 2\nd = 3\nlambda_min = -1\nlambda_count = 21\n",
            "name = det-capacity\ntask = capacity\np = 3\nd = 2\nbeta = 2\nr = 0.5\nR = 8\nn = 2048\n",
            "name = det-flux\ntask = flux\np = 3\nd = 2\nseed = 7\ncount = 5\n",
            "name = det-classify\ntask = classify\np = 2\nd = 3\nmode = ivp\nr0 = 1\nv0 = 1\nslope0 = -1\nr_end = 1e-3\nzeta = 0\nexpected_class = power\n",
        ];
        let d1 = out_root.join("determinism-a");
        let d2 = out_root.join("determinism-b");
        for d in [&d1, &d2] {
            let _ = fs::remove_dir_all(d);
            fs::create_dir_all(d)?;
        }
        let mut identical = true;
        let mut compared = 0usize;
        for text in &scenarios {
            let sc = parse_scenario(text)?;
            let rec1 = run(&sc, &d1)?;
            let rec2 = run(&sc, &d2)?;
            if !(rec1.all_pass() && rec2.all_pass()) {
                return Ok((
                    "all runs pass".into(),
                    format!("scenario {} had failing checks", sc.name),
                    false,
                ));
            }
            let dir1 = d1.join(&sc.name);
            for entry in fs::read_dir(&dir1)? {
                let entry = entry?;
                let name = entry.file_name();
                let a = fs::read(entry.path())?;
                let b = fs::read(d2.join(&sc.name).join(&name))?;
                identical &= a == b;
                compared += 1;
            }
        }
        Ok((
            "byte-identical artifacts across reruns".into(),
            format!("{compared} artifacts compared, identical = {identical}"),
            identical && compared > 0,
        ))
    });

    let all_pass = criteria.iter().all(|c| c.pass);
    println!(
        "verify: {}/{} criteria passed",
        criteria.iter().filter(|c| c.pass).count(),
        criteria.len()
    );
    Ok(VerifySummary { criteria, all_pass })
}
