//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 50;

/// `∫_a^b f` to absolute tolerance `tol`, by recursive bisection with Richardson correction.
///
/// `a > b` is allowed and yields the negated integral.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::validation("integration limits must be finite"));
    }
    if !(tol > 0.0) {
        return Err(Error::validation("tolerance must be positive"));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);

    struct Segment {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    }

    let mut total = 0.0;
    let mut stack = vec![Segment {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        depth: 0,
    }];
    while let Some(s) = stack.pop() {
        let m = 0.5 * (s.a + s.b);
        let lm = 0.5 * (s.a + m);
        let rm = 0.5 * (m + s.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(s.a, m, s.fa, flm, s.fm);
        let right = simpson(m, s.b, s.fm, frm, s.fb);
        let delta = left + right - s.whole;
        if delta.abs() <= 15.0 * s.tol || s.depth >= MAX_DEPTH {
            if !delta.is_finite() {
                return Err(Error::validation("integrand is not finite"));
            }
            total += left + right + delta / 15.0;
            continue;
        }
        let half = 0.5 * s.tol;
        stack.push(Segment {
            a: m,
            b: s.b,
            fa: s.fm,
            fm: frm,
            fb: s.fb,
            whole: right,
            tol: half,
            depth: s.depth + 1,
        });
        stack.push(Segment {
            a: s.a,
            b: m,
            fa: s.fa,
            fm: flm,
            fb: s.fm,
            whole: left,
            tol: half,
            depth: s.depth + 1,
        });
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_exact() {
        let v = adaptive_simpson(|x| x * x * x - x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_negate() {
        let a = adaptive_simpson(f64::sin, 0.0, 1.0, 1e-12).unwrap();
        let b = adaptive_simpson(f64::sin, 1.0, 0.0, 1e-12).unwrap();
        assert!((a + b).abs() < 1e-14);
        assert!((a - (1.0 - 1f64.cos())).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand() {
        // ∫_0^10 cos(x) dx = sin(10)
        let v = adaptive_simpson(f64::cos, 0.0, 10.0, 1e-12).unwrap();
        assert!((v - 10f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(adaptive_simpson(f64::cos, 0.0, f64::INFINITY, 1e-6).is_err());
        assert!(adaptive_simpson(f64::cos, 0.0, 1.0, 0.0).is_err());
    }
}
