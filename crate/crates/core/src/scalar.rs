//! One-dimensional bracketing: grid scans for sign changes and Brent's method.

use crate::error::{Error, Result};

/// Sign changes of `f` on a uniform grid of `samples` points over `[lo, hi]`.
///
/// Returns the bracketing cells and the full `(x, f(x))` trace. Non-finite
/// samples break brackets instead of producing spurious ones.
pub fn scan_sign_changes<F>(f: F, lo: f64, hi: f64, samples: usize) -> (Vec<(f64, f64)>, Vec<(f64, f64)>)
where
    F: Fn(f64) -> f64,
{
    let n = samples.max(2);
    let trace: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            (x, f(x))
        })
        .collect();
    let mut brackets = Vec::new();
    for w in trace.windows(2) {
        let (a, fa) = w[0];
        let (b, fb) = w[1];
        if !fa.is_finite() || !fb.is_finite() {
            continue;
        }
        if fa == 0.0 {
            brackets.push((a, a));
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            brackets.push((a, b));
        }
    }
    if let Some(&(x, fx)) = trace.last() {
        if fx == 0.0 {
            brackets.push((x, x));
        }
    }
    (brackets, trace)
}

/// Brent's method on a bracket with `f(lo)·f(hi) ≤ 0`.
///
/// `xtol` is an absolute tolerance on the root location.
pub fn brent<F>(f: F, lo: f64, hi: f64, xtol: f64, name: &str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::NoSignChange {
            indicator: name.to_string(),
            lo,
            hi,
            trace: vec![(lo, fa), (hi, fb)],
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::NotConverged {
        what: "brent",
        iterations: 200,
        residual: fb.abs(),
    })
}

/// Scans `[lo, hi]` and refines every sign change with Brent's method.
pub fn all_roots<F>(f: F, lo: f64, hi: f64, samples: usize, xtol: f64, name: &str) -> Result<(Vec<f64>, Vec<(f64, f64)>)>
where
    F: Fn(f64) -> f64,
{
    let (brackets, trace) = scan_sign_changes(&f, lo, hi, samples);
    let mut roots = Vec::with_capacity(brackets.len());
    for (a, b) in brackets {
        let r = if a == b { a } else { brent(&f, a, b, xtol, name)? };
        if roots.last().map_or(true, |&last: &f64| r != last) {
            roots.push(r);
        }
    }
    Ok((roots, trace))
}
