//! Dilation limits of potentials and weak Fuchsian certification.
//!
//! The shell cascade needs two dilations to reach the zero potential; the
//! Hardy potential is a fixed point of every dilation and never certifies.
//! The L^q criterion separates the two as well.

use plaplace::potential::{lq_criterion, weak_fuchsian_check, DilationSequence, Potential};
use plaplace::{Params, Zeta};

fn main() -> plaplace::Result<()> {
    let params = Params::new(2.0, 3)?;

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
    println!(
        "shell cascade: certified = {}, dilations used = {}",
        rep.certified, rep.m_used
    );

    let hardy = Potential::hardy(0.2);
    let seqs = [
        DilationSequence::geometric(0.1, 0.1, 5, Zeta::Origin)?,
        DilationSequence::geometric(0.05, 0.1, 5, Zeta::Origin)?,
    ];
    let rep = weak_fuchsian_check(&hardy, &seqs, &params)?;
    println!(
        "hardy potential: certified = {}, fixed point = {}",
        rep.certified, rep.stages[0].fixed_point
    );

    let q = 1.7;
    for (name, v) in [
        ("hardy", Potential::hardy(1.0)),
        (
            "r^-1.6 shell",
            Potential::zero().with_shell(0.0, 1.0, 1.0, -1.6),
        ),
    ] {
        let rep = lq_criterion(&v, q, &params, Zeta::Origin)?;
        println!(
            "L^{q} criterion for {name}: finite = {}, certified = {}",
            rep.finite, rep.certified
        );
    }
    Ok(())
}
