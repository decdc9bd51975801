//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use virodyn::{Clearance, ModelParams, State};

pub fn linear(b: f64) -> ModelParams {
    ModelParams {
        lambda: 0.36,
        k: 1.0,
        beta: 0.11,
        gamma: 1.0,
        b,
        delta: 0.2,
        beta_y: 0.48,
        beta_v: 0.16,
        beta_z: 0.6,
        c: 0.036,
        epsilon: Clearance::Linear,
    }
}

pub fn quadratic(b: f64) -> ModelParams {
    ModelParams {
        lambda: 1.0,
        k: 1.0,
        beta: 43.5,
        gamma: 1.0 / 128.0,
        b,
        delta: 0.5,
        beta_y: 1.0,
        beta_v: 1.0,
        beta_z: 1.0,
        c: 1.0,
        epsilon: Clearance::Quadratic,
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Positive parameters spread over a few decades, either clearance.
pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    ModelParams {
        lambda: log_uniform(rng, 0.1, 3.0),
        k: log_uniform(rng, 0.5, 5.0),
        beta: log_uniform(rng, 0.05, 50.0),
        gamma: log_uniform(rng, 0.01, 2.0),
        b: log_uniform(rng, 1.5, 60.0),
        delta: log_uniform(rng, 0.05, 2.0),
        beta_y: log_uniform(rng, 0.1, 2.0),
        beta_v: log_uniform(rng, 0.05, 2.0),
        beta_z: log_uniform(rng, 0.1, 2.0),
        c: log_uniform(rng, 0.02, 2.0),
        epsilon: if rng.gen_bool(0.5) { Clearance::Linear } else { Clearance::Quadratic },
    }
}

/// A point of the forward-invariant region: `x + y ≤ K`, `v ≤ bγK/δ`, and
/// for linear clearance `y + z/ρ ≤ βbγK²/(δσ)` with `σ = min(γ, c)`, for
/// quadratic clearance `z ≤ β_z K / c`. The virus-only reduction starts at
/// `z = 0`.
pub fn invariant_start<R: Rng>(rng: &mut R, p: &ModelParams) -> State {
    let s: f64 = rng.gen();
    let x = p.k * rng.gen::<f64>() * s;
    let y = (p.k - x) * rng.gen::<f64>();
    let v = p.b * p.gamma * p.k / p.delta * rng.gen::<f64>();
    let z = match p.epsilon {
        // virus-only reduction: no immune coupling
        Clearance::Linear if p.beta_y == 0.0 => 0.0,
        Clearance::Linear => {
            let rho = p.beta_z / p.beta_y;
            let w = p.beta * p.b * p.gamma * p.k * p.k / (p.delta * p.gamma.min(p.c));
            rho * (w - y).max(0.0) * rng.gen::<f64>()
        }
        Clearance::Quadratic => p.beta_z * p.k / p.c * rng.gen::<f64>(),
    };
    State::new(x, y, v, z)
}

fn field(p: &ModelParams, s: &Vector4<f64>) -> Vector4<f64> {
    Vector4::from(p.field(&[s[0], s[1], s[2], s[3]]))
}

/// Central differences of the vector field.
pub fn fd_jacobian(p: &ModelParams, s: &State, h: f64) -> Matrix4<f64> {
    let u = Vector4::from(s.as_array());
    let mut j = Matrix4::zeros();
    for c in 0..4 {
        let mut e = Vector4::zeros();
        e[c] = h;
        let d = (field(p, &(u + e)) - field(p, &(u - e))) / (2.0 * h);
        j.set_column(c, &d);
    }
    j
}

/// Newton on the vector field with a finite-difference Jacobian, from each
/// point of a uniform grid over the box `[0, K]² × [0, v_cap] × [0, z_cap]`.
/// Returns distinct nonnegative zeros with tiny residual.
pub fn grid_newton_equilibria(p: &ModelParams, per_axis: usize) -> Vec<State> {
    let bounds = p.domain_bounds();
    let caps = [p.k, p.k, bounds.v_cap.min(1e3), bounds.z_cap.min(1e3)];
    let mut found: Vec<State> = Vec::new();
    let n = per_axis;
    for idx in 0..n.pow(4) {
        let mut u = Vector4::zeros();
        let mut r = idx;
        for c in 0..4 {
            let i = r % n;
            r /= n;
            u[c] = caps[c] * (i as f64 + 0.5) / n as f64;
        }
        // degenerate zeros (singular Jacobian) converge slowly or not at all;
        // only quadratically settled iterates count
        let mut converged = false;
        for _ in 0..60 {
            let f = field(p, &u);
            let scale = u.amax().max(1.0);
            let j = fd_jacobian(p, &State::new(u[0], u[1], u[2], u[3]), 1e-7 * scale);
            let Some(step) = j.lu().solve(&f) else { break };
            u -= step;
            if !u.iter().all(|c| c.is_finite()) || u.amax() > 1e6 {
                break;
            }
            if step.amax() <= 1e-12 * scale {
                converged = true;
                break;
            }
        }
        let s = State::new(u[0], u[1], u[2], u[3]);
        let res = field(p, &u).amax();
        let scale = u.amax().max(1.0);
        if converged
            && s.is_finite()
            && res <= 1e-10 * scale
            && s.as_array().iter().all(|&c| c >= -1e-9 * scale)
            && !found.iter().any(|q| q.distance(&s) <= 1e-6 * scale)
        {
            found.push(s);
        }
    }
    found
}

/// Roots of `μ⁴ + a₁μ³ + a₂μ² + a₃μ + a₄` from the companion matrix.
pub fn companion_roots(a: [f64; 4]) -> Vec<num_complex::Complex64> {
    let m = nalgebra::DMatrix::from_row_slice(
        4,
        4,
        &[-a[0], -a[1], -a[2], -a[3], 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    );
    m.complex_eigenvalues().iter().copied().collect()
}
