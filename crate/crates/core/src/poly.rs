//! Real-coefficient polynomials: evaluation, Taylor shifts, Descartes sign
//! counts, cubic discriminants and root extraction.
//!
//! Roots of degree ≤ 4 come from closed forms (quadratic formula, Cardano /
//! trigonometric cubic, Ferrari via the resolvent cubic) followed by Newton
//! polishing. Higher degrees, and quartics whose closed form polishes badly,
//! use simultaneous Aberth–Ehrlich iteration.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual accepted after polishing:
/// `|p(r)| ≤ ROOT_TOL · max|aᵢ| · max(1, |r|)^deg`.
pub const ROOT_TOL: f64 = 1e-10;

/// Real roots closer than `CLUSTER_SEP · max(1, |r|)` are reported once with
/// their combined multiplicity.
pub const CLUSTER_SEP: f64 = 1e-7;

/// Polynomial with real coefficients in ascending degree order.
///
/// Trailing zeros are trimmed, so the zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

/// A real root together with its conditioning diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: usize,
    /// Set when several numerically coincident roots were merged.
    pub clustered: bool,
    /// `|p(value)|` after polishing.
    pub residual: f64,
}

impl RealPolynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        RealPolynomial { coeffs }
    }

    pub fn zero() -> Self {
        RealPolynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    /// `a·x + b`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(vec![b, a])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Self::constant(1.0), |acc, &r| &acc * &Self::linear(1.0, -r))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `xⁱ` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Largest coefficient magnitude.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    fn eval_complex_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    /// Coefficients of `p(s + x)`, by repeated synthetic division.
    pub fn taylor_shift(&self, s: f64) -> Self {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                a[j] += s * a[j + 1];
            }
        }
        Self::new(a)
    }

    /// Strict sign alternations in the nonzero coefficients.
    pub fn sign_changes(&self) -> usize {
        let signs: Vec<bool> = self
            .coeffs
            .iter()
            .filter(|c| **c != 0.0)
            .map(|c| *c > 0.0)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Residual bound used to accept a root at `r`.
    pub fn root_tolerance(&self, r: f64) -> f64 {
        let deg = self.degree().unwrap_or(0) as i32;
        ROOT_TOL * self.scale() * r.abs().max(1.0).powi(deg)
    }

    /// `Δ = 18abcd − 4b³d + b²c² − 4ac³ − 27a²d²` for `ax³ + bx² + cx + d`.
    pub fn cubic_discriminant(&self) -> Result<f64> {
        match self.degree() {
            Some(3) => {}
            other => {
                return Err(Error::DegreeMismatch {
                    expected: 3,
                    actual: other.unwrap_or(0),
                })
            }
        }
        let (d, c, b, a) = (self.coeffs[0], self.coeffs[1], self.coeffs[2], self.coeffs[3]);
        Ok(18.0 * a * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c
            - 4.0 * a * c.powi(3)
            - 27.0 * a * a * d * d)
    }

    /// All complex roots, with multiplicity, unordered.
    pub fn complex_roots(&self) -> Result<Vec<Complex64>> {
        let deg = match self.degree() {
            None => return Err(Error::ZeroPolynomial),
            Some(d) => d,
        };
        // roots at zero are exact
        let zeros = self.coeffs.iter().take_while(|c| **c == 0.0).count();
        let reduced = Self::new(self.coeffs[zeros..].to_vec());
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
        let a = &reduced.coeffs;
        let closed = match deg - zeros {
            0 => Vec::new(),
            1 => vec![Complex64::new(-a[0] / a[1], 0.0)],
            2 => quadratic_roots(a[2], a[1], a[0]).to_vec(),
            3 => cubic_roots(a[2] / a[3], a[1] / a[3], a[0] / a[3]).to_vec(),
            4 => quartic_roots(a[3] / a[4], a[2] / a[4], a[1] / a[4], a[0] / a[4]).to_vec(),
            _ => aberth(&reduced, None),
        };
        let mut polished: Vec<Complex64> = closed.iter().map(|&z| reduced.polish(z)).collect();
        let bad = polished
            .iter()
            .any(|&z| reduced.eval_complex(z).norm() > 10.0 * reduced.root_tolerance(z.norm()));
        if bad && reduced.degree().unwrap_or(0) >= 3 {
            let refined = aberth(&reduced, Some(polished.clone()));
            let worst = |rs: &[Complex64]| {
                rs.iter()
                    .map(|&z| reduced.eval_complex(z).norm() / reduced.root_tolerance(z.norm()))
                    .fold(0.0_f64, f64::max)
            };
            if worst(&refined) < worst(&polished) {
                polished = refined;
            }
        }
        roots.extend(polished);
        Ok(roots)
    }

    /// Newton polishing in the complex plane; keeps the best iterate.
    fn polish(&self, z0: Complex64) -> Complex64 {
        let mut z = z0;
        let mut best = z0;
        let mut best_res = self.eval_complex(z0).norm();
        for _ in 0..12 {
            let (p, dp) = self.eval_complex_with_derivative(z);
            if dp.norm() == 0.0 || p.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            z -= step;
            let res = self.eval_complex(z).norm();
            if res < best_res {
                best_res = res;
                best = z;
            }
            if step.norm() <= 1e-16 * z.norm().max(1e-300) {
                break;
            }
        }
        // snap conjugate-symmetric noise on real roots
        if best.im != 0.0 && best.im.abs() <= 1e-15 * best.re.abs() {
            let r = Complex64::new(best.re, 0.0);
            if self.eval_complex(r).norm() <= best_res {
                best = r;
            }
        }
        best
    }

    /// Real roots, ascending, optionally restricted to a closed interval.
    ///
    /// Numerically coincident roots (including complex pairs whose imaginary
    /// separation is below the cluster threshold) are merged and flagged.
    pub fn real_roots(&self, interval: Option<(f64, f64)>) -> Result<Vec<RealRoot>> {
        let roots = self.complex_roots()?;
        let mut reals: Vec<(f64, usize)> = Vec::new();
        for z in &roots {
            let sep = CLUSTER_SEP * z.re.abs().max(1.0);
            if z.im == 0.0 {
                reals.push((z.re, 1));
            } else if z.im > 0.0 && 2.0 * z.im < sep {
                // conjugate partner is merged with this one
                reals.push((z.re, 2));
            } else if z.im < 0.0 && 2.0 * z.im.abs() < sep {
                continue;
            }
        }
        let mut polished: Vec<(f64, usize)> = reals
            .into_iter()
            .map(|(r, m)| if m == 1 { (self.polish_real(r), m) } else { (r, m) })
            .collect();
        polished.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut merged: Vec<RealRoot> = Vec::new();
        for (r, m) in polished {
            if let Some(last) = merged.last_mut() {
                if (r - last.value).abs() < CLUSTER_SEP * r.abs().max(1.0) {
                    let total = last.multiplicity + m;
                    last.value = (last.value * last.multiplicity as f64 + r * m as f64) / total as f64;
                    last.multiplicity = total;
                    last.clustered = true;
                    last.residual = self.eval(last.value).abs();
                    continue;
                }
            }
            merged.push(RealRoot {
                value: r,
                multiplicity: m,
                clustered: m > 1,
                residual: self.eval(r).abs(),
            });
        }
        if let Some((lo, hi)) = interval {
            merged.retain(|r| r.value >= lo && r.value <= hi);
        }
        Ok(merged)
    }

    /// Plain real values of [`real_roots`](Self::real_roots).
    pub fn real_root_values(&self, interval: Option<(f64, f64)>) -> Result<Vec<f64>> {
        Ok(self.real_roots(interval)?.into_iter().map(|r| r.value).collect())
    }

    fn polish_real(&self, x0: f64) -> f64 {
        let mut x = x0;
        let mut best = x0;
        let mut best_res = self.eval(x0).abs();
        for _ in 0..12 {
            let (p, dp) = self.eval_with_derivative(x);
            if dp == 0.0 || p == 0.0 {
                break;
            }
            let step = p / dp;
            x -= step;
            let res = self.eval(x).abs();
            if res < best_res {
                best_res = res;
                best = x;
            }
            if step.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
        best
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Roots of the monic cubic `x³ + a x² + b x + c`.
fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a.powi(3) / 27.0 - a * b / 3.0 + c;
    let half_disc = q * q / 4.0 + p.powi(3) / 27.0;
    if half_disc < 0.0 {
        // three distinct real roots, trigonometric form
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        std::array::from_fn(|k| Complex64::new(m * (theta - tau * k as f64).cos() - shift, 0.0))
    } else {
        let s = half_disc.sqrt();
        let big = -q.signum() * (q.abs() / 2.0 + s).cbrt();
        let small = if big != 0.0 { -p / (3.0 * big) } else { 0.0 };
        let t1 = big + small;
        let re = -t1 / 2.0 - shift;
        let im = 3.0_f64.sqrt() / 2.0 * (big - small);
        [
            Complex64::new(t1 - shift, 0.0),
            Complex64::new(re, im.abs()),
            Complex64::new(re, -im.abs()),
        ]
    }
}

/// Roots of the monic quartic `x⁴ + a x³ + b x² + c x + d` via the depressed
/// quartic and its resolvent cubic.
fn quartic_roots(a: f64, b: f64, c: f64, d: f64) -> [Complex64; 4] {
    let shift = a / 4.0;
    let a2 = a * a;
    let p = b - 3.0 * a2 / 8.0;
    let q = c - a * b / 2.0 + a2 * a / 8.0;
    let r = d - a * c / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;
    let scale = 1.0 + p.abs() + r.abs().sqrt();
    let ys: [Complex64; 4] = if q.abs() <= 1e-14 * scale.powf(1.5) {
        // biquadratic: y⁴ + p y² + r
        let w = quadratic_roots(1.0, p, r);
        let r1 = w[0].sqrt();
        let r2 = w[1].sqrt();
        [r1, -r1, r2, -r2]
    } else {
        // resolvent m³ + p m² + (p²/4 − r) m − q²/8 = 0 has a positive real root
        let res = cubic_roots(p, p * p / 4.0 - r, -q * q / 8.0);
        let m = res
            .iter()
            .filter(|z| z.im == 0.0)
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let m = polish_resolvent(p, r, q, m.max(f64::MIN_POSITIVE));
        let s = (2.0 * m).sqrt();
        let t = q / (2.0 * s);
        let u = quadratic_roots(1.0, -s, p / 2.0 + m + t);
        let v = quadratic_roots(1.0, s, p / 2.0 + m - t);
        [u[0], u[1], v[0], v[1]]
    };
    ys.map(|y| y - shift)
}

fn polish_resolvent(p: f64, r: f64, q: f64, mut m: f64) -> f64 {
    for _ in 0..4 {
        let f = ((m + p) * m + (p * p / 4.0 - r)) * m - q * q / 8.0;
        let df = (3.0 * m + 2.0 * p) * m + (p * p / 4.0 - r);
        if df == 0.0 {
            break;
        }
        let next = m - f / df;
        if !(next > 0.0) {
            break;
        }
        m = next;
    }
    m
}

/// Simultaneous Aberth–Ehrlich iteration.
fn aberth(poly: &RealPolynomial, init: Option<Vec<Complex64>>) -> Vec<Complex64> {
    let n = poly.degree().unwrap_or(0);
    let lead = poly.leading();
    let mut z = init.unwrap_or_else(|| {
        let bound = 1.0
            + poly.coeffs[..n]
                .iter()
                .map(|c| (c / lead).abs())
                .fold(0.0_f64, f64::max);
        let radius = bound.min(1e6) * 0.5;
        (0..n)
            .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
            .collect()
    });
    for _ in 0..500 {
        let mut converged = true;
        for i in 0..n {
            let (p, dp) = poly.eval_complex_with_derivative(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !w.re.is_finite() || !w.im.is_finite() {
                continue;
            }
            z[i] -= w;
            if w.norm() > 1e-15 * z[i].norm().max(1e-300) {
                converged = false;
            }
        }
        if converged {
            break;
        }
    }
    z
}

impl fmt::Display for RealPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if *c == 0.0 {
                continue;
            }
            if !first {
                f.write_str(if *c < 0.0 { " - " } else { " + " })?;
            } else if *c < 0.0 {
                f.write_str("-")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", c.abs())?,
                1 => write!(f, "{}·x", c.abs())?,
                _ => write!(f, "{}·x^{i}", c.abs())?,
            }
        }
        Ok(())
    }
}

impl Add for &RealPolynomial {
    type Output = RealPolynomial;
    fn add(self, o: &RealPolynomial) -> RealPolynomial {
        let n = self.coeffs.len().max(o.coeffs.len());
        RealPolynomial::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
}

impl Sub for &RealPolynomial {
    type Output = RealPolynomial;
    fn sub(self, o: &RealPolynomial) -> RealPolynomial {
        let n = self.coeffs.len().max(o.coeffs.len());
        RealPolynomial::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
}

impl Mul for &RealPolynomial {
    type Output = RealPolynomial;
    fn mul(self, o: &RealPolynomial) -> RealPolynomial {
        if self.is_zero() || o.is_zero() {
            return RealPolynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RealPolynomial::new(out)
    }
}

impl Mul<f64> for &RealPolynomial {
    type Output = RealPolynomial;
    fn mul(self, s: f64) -> RealPolynomial {
        RealPolynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

impl Neg for &RealPolynomial {
    type Output = RealPolynomial;
    fn neg(self) -> RealPolynomial {
        self * -1.0
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RealPolynomial {
            type Output = RealPolynomial;
            fn $m(self, o: RealPolynomial) -> RealPolynomial {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Mul<f64> for RealPolynomial {
    type Output = RealPolynomial;
    fn mul(self, s: f64) -> RealPolynomial {
        &self * s
    }
}
