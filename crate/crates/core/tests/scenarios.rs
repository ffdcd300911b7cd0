//! Every shipped scenario parses, runs, and passes its embedded checks;
//! plus the discrete comparison-principle check on the planar scenario
//! configurations.

use std::fs;
use std::path::{Path, PathBuf};

use plaplace::annulus::{solve_dirichlet_2d, BoundaryData, Domain2};
use plaplace::potential::Potential;
use plaplace::scenario::{load_scenario, run};
use plaplace::Params;

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn every_shipped_scenario_passes() {
    let out = std::env::temp_dir().join(format!("plaplace-scn-{}", std::process::id()));
    let _ = fs::remove_dir_all(&out);
    let mut names = Vec::new();
    let mut entries: Vec<_> = fs::read_dir(scenario_dir())
        .expect("scenarios directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    entries.sort();
    assert!(entries.len() >= 15, "expected the full scenario library");
    for path in entries {
        let sc = load_scenario(&path)
            .unwrap_or_else(|e| panic!("{} failed to parse: {e}", path.display()));
        let record =
            run(&sc, &out).unwrap_or_else(|e| panic!("{} failed to run: {e}", path.display()));
        assert!(
            record.all_pass(),
            "{}: failing checks {:?}",
            path.display(),
            record.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
        );
        names.push(record.scenario_name);
    }
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn discrete_comparison_principle_on_planar_scenarios() {
    // Raising the boundary data pointwise raises the whole solution, for
    // the three shipped planar configurations.
    let cases = [
        (
            "solve-2d-harmonic",
            2.0,
            Potential::zero(),
            Domain2::Annulus {
                r_lo: 0.5,
                r_hi: 2.0,
            },
        ),
        (
            "harnack-hardy",
            2.5,
            Potential::hardy(0.0089442719099991598),
            Domain2::Annulus {
                r_lo: 0.05,
                r_hi: 1.0,
            },
        ),
        (
            "sector-quarter",
            3.0,
            Potential::zero(),
            Domain2::Sector {
                r_lo: 1.0,
                r_hi: 4.0,
                aperture: std::f64::consts::FRAC_PI_2,
            },
        ),
    ];
    for (name, p, potential, domain) in cases {
        let params = Params::new(p, 2).unwrap();
        let nt = 20;
        let data = match domain {
            Domain2::Annulus { .. } => {
                BoundaryData::from_fns(&domain, nt, |t| 1.0 + 0.2 * t.sin(), |_| 1.0)
            }
            Domain2::Sector { .. } => BoundaryData::from_fns(
                &domain,
                nt,
                |t| t.sin().max(0.0),
                |t| 2.0 * t.sin().max(0.0),
            ),
        };
        let lifted = BoundaryData {
            inner: data.inner.iter().map(|v| v * 1.25 + 0.01).collect(),
            outer: data.outer.iter().map(|v| v * 1.25 + 0.01).collect(),
        };
        // sector rays must stay at zero
        let (data, lifted) = match domain {
            Domain2::Sector { .. } => {
                let fix = |mut d: BoundaryData| {
                    d.inner[0] = 0.0;
                    d.outer[0] = 0.0;
                    let n = d.inner.len();
                    d.inner[n - 1] = 0.0;
                    d.outer[n - 1] = 0.0;
                    d
                };
                (fix(data), fix(lifted))
            }
            _ => (data, lifted),
        };
        let low = solve_dirichlet_2d(&params, &potential, domain, &data, 28, nt).unwrap();
        let high = solve_dirichlet_2d(&params, &potential, domain, &lifted, 28, nt).unwrap();
        for k in 0..low.values.len() {
            assert!(
                high.values[k] >= low.values[k] - 1e-8,
                "{name}: comparison principle violated at node {k}"
            );
        }
    }
}
