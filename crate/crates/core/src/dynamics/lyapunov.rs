//! Hopf normal-form coefficient and the largest Lyapunov exponent.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrate::{solve, Control, SolverOptions, Tolerances};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::stability::eigenvalues;

type CVec = nalgebra::Vector4<Complex64>;
type CMat = nalgebra::Matrix4<Complex64>;

fn complex_matrix(a: &Matrix4<f64>) -> CMat {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Null vector of `A − μI` for an eigenvalue `μ`, by inverse iteration.
fn eigenvector(a: &CMat, mu: Complex64) -> Result<CVec> {
    let shift = mu + Complex64::new(1e-10, 1e-10) * mu.norm().max(1.0);
    let m = a - CMat::identity() * shift;
    let lu = m.lu();
    let mut x = CVec::from_element(Complex64::new(1.0, 0.3));
    for _ in 0..4 {
        x = lu.solve(&x).ok_or(Error::Singular("eigenvector inverse iteration"))?;
        let n = x.norm();
        x /= Complex64::new(n, 0.0);
    }
    Ok(x)
}

fn dot(p: &CVec, q: &CVec) -> Complex64 {
    // ⟨p, q⟩ = p̄ᵀ q
    p.iter().zip(q.iter()).map(|(a, b)| a.conj() * b).sum()
}

fn bilinear(params: &ModelParams, u: &CVec, w: &CVec) -> CVec {
    let a = [u[0], u[1], u[2], u[3]];
    let b = [w[0], w[1], w[2], w[3]];
    CVec::from(params.second_derivative(&a, &b))
}

/// Critical eigen-data and normal-form coefficient at a Hopf point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfNormalForm {
    pub omega: f64,
    /// Real part of the critical pair, a check on the location.
    pub real_part: f64,
    /// `Aq = iωq`, `|q| = 1`.
    pub q: [Complex64; 4],
    /// `Aᵀp = −iωp`, `⟨p, q⟩ = 1`.
    pub p: [Complex64; 4],
    /// First Lyapunov coefficient; positive means subcritical.
    pub l1: f64,
}

/// Tolerance on `|Re μ| / |Im μ|` for accepting a pair as pure imaginary.
pub const PURE_IMAGINARY_TOL: f64 = 1e-5;

/// First Lyapunov coefficient at an equilibrium with a pure imaginary pair,
/// by projection onto the critical eigenvectors:
///
/// `l₁ = Re[⟨p, C(q,q,q̄)⟩ − 2⟨p, B(q, A⁻¹B(q,q̄))⟩ + ⟨p, B(q̄, (2iω − A)⁻¹B(q,q))⟩] / (2ω)`.
///
/// The field is quadratic, so `C` vanishes identically.
pub fn first_lyapunov_coefficient(params: &ModelParams, eq: &State) -> Result<HopfNormalForm> {
    let j = params.jacobian_array(&eq.as_array());
    let a = Matrix4::from_fn(|r, c| j[r][c]);
    let pair = eigenvalues(&a)?
        .into_iter()
        .filter(|z| z.im > 0.0)
        .min_by(|x, y| x.re.abs().total_cmp(&y.re.abs()))
        .ok_or_else(|| Error::Precondition("no complex eigenvalue pair".into()))?;
    if pair.re.abs() > PURE_IMAGINARY_TOL * pair.im {
        return Err(Error::Precondition(format!(
            "eigenvalue pair {}±{}i is not pure imaginary",
            pair.re, pair.im
        )));
    }
    let omega = pair.im;
    let ac = complex_matrix(&a);
    let mut q = eigenvector(&ac, Complex64::new(0.0, omega))?;
    q /= Complex64::new(q.norm(), 0.0);
    let mut pv = eigenvector(&ac.transpose(), Complex64::new(0.0, -omega))?;
    let s = dot(&pv, &q);
    pv /= s.conj();
    let qbar = q.map(|z| z.conj());
    let bqqb = bilinear(params, &q, &qbar);
    let bqq = bilinear(params, &q, &q);
    let h11 = ac.lu().solve(&bqqb).ok_or(Error::Singular("Jacobian at Hopf point"))?;
    let m20 = CMat::identity() * Complex64::new(0.0, 2.0 * omega) - ac;
    let h20 = m20.lu().solve(&bqq).ok_or(Error::Singular("2iω − A"))?;
    let c = -dot(&pv, &bilinear(params, &q, &h11)) * 2.0 + dot(&pv, &bilinear(params, &qbar, &h20));
    Ok(HopfNormalForm {
        omega,
        real_part: pair.re,
        q: [q[0], q[1], q[2], q[3]],
        p: [pv[0], pv[1], pv[2], pv[3]],
        l1: c.re / (2.0 * omega),
    })
}

/// Benettin estimate with its running trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    /// `(t, running estimate)` after each renormalization past the transient.
    pub trace: Vec<(f64, f64)>,
    /// Spread of the running estimate over the last quarter of the trace.
    pub spread: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    pub tol: Tolerances,
    /// Time between tangent renormalizations.
    pub interval: f64,
    /// Time excluded from the average.
    pub transient: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions {
            tol: Tolerances::default(),
            interval: 1.0,
            transient: 0.0,
        }
    }
}

/// Largest Lyapunov exponent by tangent-vector renormalization over
/// `horizon`. Errors if the orbit leaves Ω.
pub fn largest_lyapunov_exponent(params: &ModelParams, init: State, horizon: f64, opts: &LyapunovOptions) -> Result<LyapunovEstimate> {
    params.validate()?;
    if !(horizon > opts.transient && opts.interval > 0.0) {
        return Err(Error::Precondition("horizon must exceed the transient".into()));
    }
    let bounds = params.domain_bounds();
    let rhs = |_: f64, y: &[f64; 8]| -> [f64; 8] {
        let s = [y[0], y[1], y[2], y[3]];
        let f = params.field(&s);
        let j = params.jacobian_array(&s);
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&f);
        for r in 0..4 {
            out[4 + r] = (0..4).map(|k| j[r][k] * y[4 + k]).sum();
        }
        out
    };
    let mut y = [0.0; 8];
    y[..4].copy_from_slice(&init.as_array());
    let w0 = Vector4::new(1.0, 1.0, 1.0, 1.0).normalize();
    y[4..].copy_from_slice(w0.as_slice());
    let sopts = SolverOptions::with_tol(opts.tol);
    let mut t = 0.0;
    let mut log_sum = 0.0;
    let mut trace = Vec::new();
    let slack = 1e-6 * init.max_abs().max(1.0);
    while t < horizon - 1e-12 {
        let t_next = (t + opts.interval).min(horizon);
        let s = solve(&rhs, t, y, t_next, &sopts, |_| Control::Continue).into_result()?;
        y = s.y;
        let st = State::new(y[0], y[1], y[2], y[3]);
        if !bounds.contains(&st, slack) {
            return Err(Error::EscapedDomain { t: t_next });
        }
        let n = (y[4] * y[4] + y[5] * y[5] + y[6] * y[6] + y[7] * y[7]).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NonFinite {
                what: "tangent vector",
                value: y[4..].to_vec(),
            });
        }
        for v in &mut y[4..] {
            *v /= n;
        }
        if t_next > opts.transient {
            log_sum += n.ln();
            trace.push((t_next, log_sum / (t_next - opts.transient)));
        }
        t = t_next;
    }
    let value = trace.last().map(|x| x.1).unwrap_or(f64::NAN);
    let q = trace.len() * 3 / 4;
    let spread = trace[q..].iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max)
        - trace[q..].iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    Ok(LyapunovEstimate { value, trace, spread })
}
