//! Small numerical helpers shared across the crate: the odd power map
//! `phi_p` and its inverse, log-spaced grids, composite Simpson quadrature,
//! least squares line fits, sphere areas and a tiny deterministic RNG.

/// Odd power map `phi_p(s) = |s|^{p-2} s = sign(s) |s|^{p-1}`.
///
/// Evaluates to 0 at `s = 0` for every `p > 1`, which is the continuous
/// extension (the raw `|s|^{p-2}` factor alone would be infinite for p < 2).
#[inline]
pub fn phi_p(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(p - 1.0)
    }
}

/// Inverse of [`phi_p`]: `phi_p_inv(t) = sign(t) |t|^{1/(p-1)}`.
#[inline]
pub fn phi_p_inv(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * t.abs().powf(1.0 / (p - 1.0))
    }
}

/// Derivative `d phi_p / ds = (p-1) |s|^{p-2}`, regularized at `s = 0` with
/// the floor `delta` so Newton solvers keep a finite, nonzero slope.
#[inline]
pub fn phi_p_deriv(s: f64, p: f64, delta: f64) -> f64 {
    (p - 1.0) * (s.abs() + delta).powf(p - 2.0)
}

/// Surface area of the unit sphere `S^{d-1}` in `R^d`: `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(d: u32) -> f64 {
    use std::f64::consts::PI;
    // Gamma(d/2) by the recurrence Gamma(x+1) = x Gamma(x) starting from
    // Gamma(1) = 1 or Gamma(1/2) = sqrt(pi).
    let mut gamma;
    let mut x;
    if d % 2 == 0 {
        gamma = 1.0;
        x = 1.0;
    } else {
        gamma = PI.sqrt();
        x = 0.5;
    }
    while x < d as f64 / 2.0 - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(d as f64 / 2.0) / gamma
}

/// Strictly increasing log-spaced grid from `r_lo` to `r_hi` with exactly
/// `n + 1` nodes (`n` uniform intervals in log r). Endpoints are exact.
pub fn log_grid(r_lo: f64, r_hi: f64, n: usize) -> Vec<f64> {
    assert!(r_lo > 0.0 && r_hi > r_lo && n >= 1);
    let s_lo = r_lo.ln();
    let s_hi = r_hi.ln();
    let mut g: Vec<f64> = (0..=n)
        .map(|i| (s_lo + (s_hi - s_lo) * i as f64 / n as f64).exp())
        .collect();
    g[0] = r_lo;
    g[n] = r_hi;
    g
}

/// Node count for the default resolution of `per_decade` points per decade,
/// always at least `min_n` intervals and always even (Simpson-friendly).
pub fn nodes_per_decade(r_lo: f64, r_hi: f64, per_decade: usize, min_n: usize) -> usize {
    let decades = (r_hi / r_lo).log10();
    let mut n = (decades * per_decade as f64).ceil() as usize;
    if n < min_n {
        n = min_n;
    }
    if n % 2 == 1 {
        n += 1;
    }
    n
}

/// Composite Simpson rule for `f` sampled on a log-spaced grid `r`,
/// integrating `f(r) dr` via the substitution `s = ln r`.
///
/// The grid must be uniform in log r. With an odd interval count the last
/// three intervals are handled by the 3/8 rule.
pub fn simpson_log(r: &[f64], f: &[f64]) -> f64 {
    assert_eq!(r.len(), f.len());
    let n = r.len() - 1;
    assert!(n >= 2, "need at least 3 nodes");
    let h = (r[n] / r[0]).ln() / n as f64;
    // g(s) = f(e^s) e^s
    let g = |i: usize| f[i] * r[i];
    let mut total = 0.0;
    let pairs_end = if n % 2 == 0 { n } else { n - 3 };
    let mut i = 0;
    while i + 2 <= pairs_end {
        total += h / 3.0 * (g(i) + 4.0 * g(i + 1) + g(i + 2));
        i += 2;
    }
    if n % 2 == 1 {
        let j = n - 3;
        total += 3.0 * h / 8.0 * (g(j) + 3.0 * g(j + 1) + 3.0 * g(j + 2) + g(j + 3));
    }
    total
}

/// Ordinary least squares line `y = a + b x`; returns `(a, b)`.
pub fn linfit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    (a, b)
}

/// Least squares fit of `y` against two basis columns `u`, `v`
/// (2x2 normal equations); returns the coefficients `(cu, cv)`.
pub fn fit2(u: &[f64], v: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut uu, mut uv, mut vv, mut uy, mut vy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        uu += u[i] * u[i];
        uv += u[i] * v[i];
        vv += v[i] * v[i];
        uy += u[i] * y[i];
        vy += v[i] * y[i];
    }
    let det = uu * vv - uv * uv;
    if det.abs() < 1e-300 {
        // Degenerate basis: project on the larger column alone.
        if uu >= vv {
            return (uy / uu.max(1e-300), 0.0);
        }
        return (0.0, vy / vv.max(1e-300));
    }
    ((vv * uy - uv * vy) / det, (uu * vy - uv * uy) / det)
}

/// Bracketed root finding: bisection refined by secant steps, for a
/// continuous `f` with `f(a)` and `f(b)` of opposite sign.
///
/// Returns the abscissa where `|b - a|` fell below `xtol` (absolute).
pub fn bisect_refine<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    max_iter: usize,
) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    assert!(
        fa == 0.0 || fb == 0.0 || (fa < 0.0) != (fb < 0.0),
        "bisect_refine: endpoints do not bracket a sign change"
    );
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    for it in 0..max_iter {
        // Every third step: secant proposal, kept only if inside the bracket.
        let mid = if it % 3 == 2 && (fb - fa).abs() > 1e-300 {
            let s = b - fb * (b - a) / (fb - fa);
            if s > a.min(b) && s < a.max(b) {
                s
            } else {
                0.5 * (a + b)
            }
        } else {
            0.5 * (a + b)
        };
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
        if (b - a).abs() < xtol {
            break;
        }
    }
    0.5 * (a + b)
}

/// Deterministic 64-bit generator (splitmix64). Used only where a scenario
/// explicitly requests randomized inputs; the seed always comes from the
/// scenario so every run is reproducible.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phi_p_roundtrip_and_zero() {
        for &p in &[1.5, 2.0, 3.0, 4.5] {
            assert_eq!(phi_p(0.0, p), 0.0);
            assert_eq!(phi_p_inv(0.0, p), 0.0);
            for &s in &[-2.0, -0.3, 0.7, 5.0] {
                let t = phi_p(s, p);
                assert!((phi_p_inv(t, p) - s).abs() < 1e-12 * s.abs().max(1.0));
            }
        }
        // p = 2 is the identity
        assert!((phi_p(3.5, 2.0) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-12);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_powers_on_log_grid() {
        // integral_1^e4 of r^2 dr = (e^12 - 1)/3
        let r = log_grid(1.0, (4.0f64).exp(), 512);
        let f: Vec<f64> = r.iter().map(|&x| x * x).collect();
        let exact = ((12.0f64).exp() - 1.0) / 3.0;
        let got = simpson_log(&r, &f);
        assert!(
            (got - exact).abs() / exact < 1e-8,
            "got {got}, exact {exact}"
        );
        // odd interval count goes through the 3/8 branch
        let r = log_grid(1.0, (4.0f64).exp(), 513);
        let f: Vec<f64> = r.iter().map(|&x| x * x).collect();
        let got = simpson_log(&r, &f);
        assert!((got - exact).abs() / exact < 1e-8);
    }

    #[test]
    fn linfit_recovers_line() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&t| 2.5 - 0.75 * t).collect();
        let (a, b) = linfit(&x, &y);
        assert!((a - 2.5).abs() < 1e-12);
        assert!((b + 0.75).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let root = bisect_refine(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200);
        assert!((root - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..10 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let u = SplitMix64::new(7).next_f64();
        assert!((0.0..1.0).contains(&u));
    }
}
