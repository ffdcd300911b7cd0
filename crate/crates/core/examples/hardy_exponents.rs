//! Power exponents of the radial Hardy model.
//!
//! For each coupling lambda <= c_H the equation admits the two power
//! solutions r^{gamma_-} and r^{gamma_+}; the exponents coalesce at the
//! Hardy constant. Run with `cargo run --example hardy_exponents`.

use plaplace::exponents::{characteristic, hardy_constant, solve_gamma};
use plaplace::Params;

fn main() -> plaplace::Result<()> {
    let params = Params::new(2.5, 3)?;
    let ch = hardy_constant(&params);
    println!(
        "p = {}, d = {}: c_H = {ch:.12}, gamma_* = {:.12}",
        params.p,
        params.d,
        params.gamma_star()
    );
    println!(
        "{:>12} {:>14} {:>14} {:>11}",
        "lambda", "gamma_-", "gamma_+", "residual"
    );
    for k in 0..=10 {
        let lambda = ch * (1.0 - k as f64 / 10.0) - 0.02 * k as f64;
        let pair = solve_gamma(lambda, &params)?;
        let res = (characteristic(pair.gamma_minus, &params) - lambda)
            .abs()
            .max((characteristic(pair.gamma_plus, &params) - lambda).abs());
        println!(
            "{lambda:>12.6} {:>14.9} {:>14.9} {res:>11.2e}{}",
            pair.gamma_minus,
            pair.gamma_plus,
            if pair.degenerate {
                "  (degenerate)"
            } else {
                ""
            }
        );
    }
    Ok(())
}
