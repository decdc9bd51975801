//! Limit cycles: Poincaré period estimate, single shooting with a flow
//! orthogonality phase condition, and Floquet multipliers.

use nalgebra::{DMatrix, Matrix4, Matrix5, Vector4, Vector5};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrate::{integrate, solve, Control, Orbit, Sampling, SolverOptions, Tolerances};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Param, State};
use crate::stability::eigenvalues;

/// Flow endpoint with its first-order sensitivities.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSensitivity {
    pub end: State,
    /// `∂φ/∂u₀` (the monodromy matrix when the flow time is a period).
    pub jacobian: Matrix4<f64>,
    /// `∂φ/∂param`, zero when no parameter was requested.
    pub param_sens: Vector4<f64>,
    /// Vector field at the endpoint, `∂φ/∂T`.
    pub field_end: Vector4<f64>,
    pub min: State,
    pub max: State,
    /// `∫ div f dt` along the flow.
    pub divergence_integral: f64,
}

/// Integrates state, variational matrix and parameter sensitivity together.
pub fn flow_with_sensitivity(p: &ModelParams, u: State, t: f64, tol: Tolerances, param: Option<Param>) -> Result<FlowSensitivity> {
    let rhs = |_: f64, y: &[f64; 25]| -> [f64; 25] {
        let s = [y[0], y[1], y[2], y[3]];
        let f = p.field(&s);
        let j = p.jacobian_array(&s);
        let mut out = [0.0; 25];
        out[..4].copy_from_slice(&f);
        // variational block Φ, row-major at 4..20
        for r in 0..4 {
            for c in 0..4 {
                out[4 + 4 * r + c] = (0..4).map(|k| j[r][k] * y[4 + 4 * k + c]).sum();
            }
        }
        let dp = param.map(|q| p.field_param_derivative(q, &s)).unwrap_or([0.0; 4]);
        for r in 0..4 {
            out[20 + r] = (0..4).map(|k| j[r][k] * y[20 + k]).sum::<f64>() + dp[r];
        }
        out[24] = j[0][0] + j[1][1] + j[2][2] + j[3][3];
        out
    };
    let mut y0 = [0.0; 25];
    y0[..4].copy_from_slice(&u.as_array());
    for i in 0..4 {
        y0[4 + 5 * i] = 1.0;
    }
    let mut lo = u.as_array();
    let mut hi = lo;
    let opts = SolverOptions::with_tol(tol);
    let s = solve(&rhs, 0.0, y0, t, &opts, |st| {
        for i in 0..4 {
            lo[i] = lo[i].min(st.y1[i]);
            hi[i] = hi[i].max(st.y1[i]);
        }
        Control::Continue
    })
    .into_result()?;
    let y = s.y;
    let end = State::new(y[0], y[1], y[2], y[3]);
    Ok(FlowSensitivity {
        end,
        jacobian: Matrix4::from_fn(|r, c| y[4 + 4 * r + c]),
        param_sens: Vector4::new(y[20], y[21], y[22], y[23]),
        field_end: Vector4::from(p.field(&end.as_array())),
        min: State::from_array(lo),
        max: State::from_array(hi),
        divergence_integral: y[24],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleStability {
    Stable,
    Unstable,
}

/// A periodic orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub params: ModelParams,
    pub anchor: State,
    pub period: f64,
    /// One period sampled uniformly, `(t, state)`.
    pub samples: Vec<(f64, State)>,
    /// Sorted by descending modulus.
    pub floquet: Vec<Complex64>,
    pub stability: CycleStability,
    /// False when shooting failed and the Poincaré estimate is returned.
    pub refined: bool,
    /// `‖φ(anchor, period) − anchor‖∞`.
    pub residual: f64,
    pub min: State,
    pub max: State,
    pub divergence_integral: f64,
}

impl Cycle {
    /// The multiplier closest to 1.
    pub fn trivial_multiplier(&self) -> Complex64 {
        self.floquet
            .iter()
            .copied()
            .min_by(|a, b| (a - 1.0).norm().total_cmp(&(b - 1.0).norm()))
            .unwrap_or(Complex64::new(f64::NAN, 0.0))
    }

    /// All multipliers but the trivial one.
    pub fn nontrivial_multipliers(&self) -> Vec<Complex64> {
        let t = self.trivial_multiplier();
        let mut skipped = false;
        self.floquet
            .iter()
            .copied()
            .filter(|z| {
                if !skipped && *z == t {
                    skipped = true;
                    false
                } else {
                    true
                }
            })
            .collect()
    }

    pub fn amplitude(&self) -> f64 {
        (self.max - self.min).max_abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    /// Tolerances for plain simulation.
    pub tol: Tolerances,
    /// Tighter tolerances for shooting and monodromy.
    pub shooting_tol: Tolerances,
    /// How long to look for Poincaré returns.
    pub search_time: f64,
    pub max_newton: usize,
    pub newton_tol: f64,
    /// Points per period in [`Cycle::samples`].
    pub samples: usize,
    /// Segments for the multiplier computation.
    pub segments: usize,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            tol: Tolerances::default(),
            shooting_tol: Tolerances { abs: 1e-13, rel: 1e-12 },
            search_time: 3000.0,
            max_newton: 50,
            newton_tol: 1e-10,
            samples: 400,
            segments: 8,
        }
    }
}

/// Section crossings `(t, state)` of the hyperplane `n·(y − a) = 0` in the
/// direction of `n`, located on the dense output.
pub fn poincare_returns(p: &ModelParams, a: State, n: Vector4<f64>, horizon: f64, tol: Tolerances, max_returns: usize) -> Result<Vec<(f64, State)>> {
    let g = |y: &[f64; 4]| (0..4).map(|i| n[i] * (y[i] - a.as_array()[i])).sum::<f64>();
    let field = |_: f64, y: &[f64; 4]| p.field(y);
    let mut out = Vec::new();
    let scale = n.norm() * a.max_abs().max(1e-3);
    solve(&field, 0.0, a.as_array(), horizon, &SolverOptions::with_tol(tol), |st| {
        let (g0, g1) = (g(&st.y0), g(&st.y1));
        if g0 < 0.0 && g1 >= 0.0 {
            // bisection on the interpolant
            let (mut lo, mut hi) = (st.t0, st.t1);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if g(&st.interpolate(mid)) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo) <= 1e-14 * hi.abs().max(1.0) {
                    break;
                }
            }
            let t = 0.5 * (lo + hi);
            if t > 1e-9 * horizon || g0 < -1e-12 * scale {
                out.push((t, State::from_array(st.interpolate(t))));
            }
        }
        if out.len() >= max_returns {
            Control::Stop
        } else {
            Control::Continue
        }
    })
    .into_result()?;
    Ok(out)
}

/// Period estimate from an orbit: anchor at the maximum of `x` over the
/// second half of `seed`, section normal to the flow there.
pub fn poincare_estimate(p: &ModelParams, seed: &Orbit, opts: &CycleOptions) -> Result<(State, f64)> {
    let tail = seed.tail(seed.times[0] + 0.5 * (seed.last_time() - seed.times[0]));
    let a = tail
        .states
        .iter()
        .copied()
        .max_by(|u, w| u.x.total_cmp(&w.x))
        .ok_or_else(|| Error::NoRecurrence("empty seed orbit".into()))?;
    let span = (tail.stats.max - tail.stats.min).max_abs();
    let n = Vector4::from(p.field(&a.as_array()));
    if span <= 1e-8 * a.max_abs().max(1.0) || n.norm() <= 1e-12 {
        return Err(Error::NoRecurrence("seed orbit is stationary".into()));
    }
    let returns = poincare_returns(p, a, n, opts.search_time, opts.tol, 200)?;
    let scale = span.max(1e-12);
    if let Some((t, _)) = returns.iter().find(|(_, s)| s.distance(&a) <= 0.05 * scale) {
        return Ok((a, *t));
    }
    match returns.len() {
        0 => Err(Error::NoRecurrence(format!("no section return within t = {}", opts.search_time))),
        1 => Ok((returns[0].1, returns[0].0)),
        k => {
            let (t1, s1) = returns[k - 1];
            let (t0, _) = returns[k - 2];
            Ok((s1, t1 - t0))
        }
    }
}

/// Outcome of a shooting solve.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootingResult {
    pub anchor: State,
    pub period: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sensitivity: FlowSensitivity,
}

/// Newton on `(u, T)`: `φ(u, T) − u = 0` with `f(u₀)·(u − u₀) = 0`.
pub fn shoot(p: &ModelParams, u0: State, t0: f64, opts: &CycleOptions) -> Result<ShootingResult> {
    let n0 = Vector4::from(p.field(&u0.as_array()));
    if n0.norm() == 0.0 {
        return Err(Error::NoRecurrence("anchor is an equilibrium".into()));
    }
    let mut u = u0;
    let mut t = t0;
    let mut fs = flow_with_sensitivity(p, u, t, opts.shooting_tol, None)?;
    let residual = |fs: &FlowSensitivity, u: &State| (fs.end - *u).max_abs();
    let mut res = residual(&fs, &u);
    for it in 0..opts.max_newton {
        if res <= opts.newton_tol * u.max_abs().max(1.0) {
            return Ok(ShootingResult {
                anchor: u,
                period: t,
                residual: res,
                iterations: it,
                converged: true,
                sensitivity: fs,
            });
        }
        let mut m = Matrix5::zeros();
        let mut rhs = Vector5::zeros();
        let diff = Vector4::from((fs.end - u).as_array());
        let du0 = Vector4::from((u - u0).as_array());
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] = fs.jacobian[(r, c)] - if r == c { 1.0 } else { 0.0 };
            }
            m[(r, 4)] = fs.field_end[r];
            m[(4, r)] = n0[r];
            rhs[r] = -diff[r];
        }
        rhs[4] = -n0.dot(&du0);
        let delta = m.lu().solve(&rhs).ok_or(Error::Singular("shooting Newton system"))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let un = u + State::new(delta[0], delta[1], delta[2], delta[3]) * lambda;
            let tn = t + lambda * delta[4];
            if tn > 0.0 && un.is_finite() {
                if let Ok(f2) = flow_with_sensitivity(p, un, tn, opts.shooting_tol, None) {
                    let r2 = residual(&f2, &un);
                    if r2 < res || lambda < 0.02 {
                        u = un;
                        t = tn;
                        fs = f2;
                        res = r2;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let converged = res <= opts.newton_tol * u.max_abs().max(1.0);
    Ok(ShootingResult {
        anchor: u,
        period: t,
        residual: res,
        iterations: opts.max_newton,
        converged,
        sensitivity: fs,
    })
}

/// Floquet multipliers of the product `M_{m−1}⋯M_0` of segment Jacobians.
///
/// The eigenvalues of the block-cyclic lift with blocks `M_i` are the m-th
/// roots of the multipliers. Their spread is the m-th root of the spread of
/// the multipliers, so expanding and contracting directions of a saddle
/// cycle are resolved together. Sorted by descending modulus.
pub fn floquet_multipliers(segments: &[Matrix4<f64>]) -> Result<Vec<Complex64>> {
    let m = segments.len();
    if m == 0 {
        return Err(Error::Precondition("no segment Jacobians".into()));
    }
    if m == 1 {
        return multipliers(&segments[0]);
    }
    let n = 4 * m;
    let mut lift = DMatrix::<f64>::zeros(n, n);
    for (i, s) in segments.iter().enumerate() {
        let r = 4 * ((i + 1) % m);
        lift.view_mut((r, 4 * i), (4, 4)).copy_from(s);
    }
    if lift.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "segment Jacobians",
            value: lift.iter().copied().filter(|v| !v.is_finite()).collect(),
        });
    }
    let mut powers: Vec<Complex64> = lift.complex_eigenvalues().iter().map(|l| l.powu(m as u32)).collect();
    let mut out = Vec::with_capacity(4);
    while out.len() < 4 && !powers.is_empty() {
        let lead = powers.iter().copied().fold(Complex64::new(0.0, 0.0), |a, z| if z.norm() > a.norm() { z } else { a });
        let scale = lead.norm().max(f64::MIN_POSITIVE);
        powers.sort_by(|a, b| ((a - lead).norm() / scale).total_cmp(&((b - lead).norm() / scale)));
        let take = m.min(powers.len());
        let cluster: Vec<Complex64> = powers.drain(..take).collect();
        out.push(cluster.iter().sum::<Complex64>() / take as f64);
    }
    out.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    Ok(out)
}

pub(crate) fn multipliers(m: &Matrix4<f64>) -> Result<Vec<Complex64>> {
    let mut e = eigenvalues(m)?;
    e.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    Ok(e)
}

pub(crate) fn stability_of(floquet: &[Complex64]) -> CycleStability {
    let trivial = floquet
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
        .map(|(i, _)| i);
    let inside = floquet
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != trivial)
        .all(|(_, z)| z.norm() < 1.0);
    if inside {
        CycleStability::Stable
    } else {
        CycleStability::Unstable
    }
}

/// Builds a [`Cycle`] record from a converged (or best-effort) anchor.
pub fn assemble_cycle(p: &ModelParams, anchor: State, period: f64, fs: &FlowSensitivity, refined: bool, opts: &CycleOptions) -> Result<Cycle> {
    let m = opts.segments.max(1);
    let mut blocks = Vec::with_capacity(m);
    let mut u = anchor;
    for _ in 0..m {
        let seg = flow_with_sensitivity(p, u, period / m as f64, opts.shooting_tol, None)?;
        blocks.push(seg.jacobian);
        u = seg.end;
    }
    let floquet = floquet_multipliers(&blocks)?;
    let dt = period / opts.samples.max(1) as f64;
    let orbit = integrate(p, anchor, (0.0, period), opts.shooting_tol, Sampling::Every(dt))?;
    orbit.check()?;
    let samples: Vec<(f64, State)> = orbit.times.iter().copied().zip(orbit.states.iter().copied()).take(opts.samples.max(1)).collect();
    let mut min = fs.min;
    let mut max = fs.max;
    for (_, s) in &samples {
        let (a, b) = (s.as_array(), (min.as_array(), max.as_array()));
        min = State::from_array(std::array::from_fn(|i| a[i].min(b.0[i])));
        max = State::from_array(std::array::from_fn(|i| a[i].max(b.1[i])));
    }
    Ok(Cycle {
        params: *p,
        anchor,
        period,
        samples,
        stability: stability_of(&floquet),
        floquet,
        refined,
        residual: (fs.end - anchor).max_abs(),
        min,
        max,
        divergence_integral: fs.divergence_integral,
    })
}

/// Locates a limit cycle near the tail of `seed`.
///
/// Errors with `NoRecurrence` when the seed does not oscillate. When
/// shooting fails to converge the Poincaré estimate is returned with
/// `refined = false`.
pub fn find_limit_cycle(p: &ModelParams, seed: &Orbit, opts: &CycleOptions) -> Result<Cycle> {
    p.validate()?;
    let (a, t) = poincare_estimate(p, seed, opts)?;
    let shot = shoot(p, a, t, opts)?;
    if shot.converged {
        assemble_cycle(p, shot.anchor, shot.period, &shot.sensitivity, true, opts)
    } else {
        let fs = flow_with_sensitivity(p, a, t, opts.shooting_tol, None)?;
        assemble_cycle(p, a, t, &fs, false, opts)
    }
}
