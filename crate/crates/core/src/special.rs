//! Log-space special functions and 1-D quadrature.

use std::f64::consts::PI;

pub use statrs::function::gamma::ln_gamma;

/// ln ω_n, the log-volume of the Euclidean unit ball in R^n.
pub fn ln_ball_volume(n: f64) -> f64 {
    0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0)
}

/// ω_n, the volume of the Euclidean unit ball in R^n.
pub fn ball_volume(n: usize) -> f64 {
    ln_ball_volume(n as f64).exp()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((ball_volume(2) - PI).abs() < 1e-14);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((ball_volume(4) - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_polynomials_and_trig() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::sin, 0.0, PI, 1e-11);
        assert!((v - 2.0).abs() < 1e-10);
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-10), 0.0);
    }
}
