//! Pseudo-arclength continuation of limit cycles in one parameter.
//!
//! Unknowns are `X = (u₁..u_m, T/T_s, p)`: multiple-shooting nodes along
//! the cycle, the period over a fixed scale `T_s`, and the free parameter.
//! The corrector solves the matching conditions, a phase condition on `u₁`
//! against the previous point, and the arclength constraint. Several
//! segments keep saddle cycles with strongly expanding directions solvable.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rayon::prelude::*;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cycle::{floquet_multipliers, flow_with_sensitivity, stability_of, Cycle, CycleOptions, CycleStability, FlowSensitivity};
use super::integrate::flow;
use super::lyapunov::{first_lyapunov_coefficient, HopfNormalForm};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Param, State};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub cycle: CycleOptions,
    /// Initial arclength step.
    pub ds: f64,
    pub ds_max: f64,
    /// Consecutive step halvings before the branch is abandoned.
    pub max_halvings: usize,
    pub max_points: usize,
    pub max_corrector: usize,
    /// Parameter interval; leaving it ends the branch.
    pub range: (f64, f64),
    /// Branch ends when the cycle shrinks below this size.
    pub min_amplitude: f64,
    pub max_period: f64,
    /// Hopf starts: distance of the first cycle from the equilibrium.
    pub hopf_radius: f64,
    /// Multiple-shooting segments per period.
    pub segments: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            cycle: CycleOptions::default(),
            ds: 2e-3,
            ds_max: 0.05,
            max_halvings: 8,
            max_points: 2000,
            max_corrector: 10,
            range: (f64::NEG_INFINITY, f64::INFINITY),
            min_amplitude: 1e-6,
            max_period: 1e4,
            hopf_radius: 1e-3,
            segments: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclePoint {
    pub value: f64,
    pub period: f64,
    pub anchor: State,
    pub min: State,
    pub max: State,
    pub floquet: Vec<Complex64>,
    pub stability: CycleStability,
    pub residual: f64,
    pub arclength: f64,
}

impl CyclePoint {
    pub fn amplitude(&self) -> f64 {
        (self.max - self.min).max_abs()
    }
}

/// Why a branch stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum BranchEnd {
    MaxPoints,
    LeftRange { value: f64 },
    Collapsed { value: f64 },
    LongPeriod { value: f64, period: f64 },
    StepFailure { value: f64, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleBranch {
    pub param: Param,
    pub points: Vec<CyclePoint>,
    /// Limit points of cycles, where the branch turns in the parameter.
    pub folds: Vec<CyclePoint>,
    pub end: BranchEnd,
}

struct Frame {
    param: Param,
    base: ModelParams,
    t_scale: f64,
    segments: usize,
}

type Vx = DVector<f64>;

struct Eval {
    /// Per-segment flows.
    flows: Vec<FlowSensitivity>,
}

impl Eval {
    fn bounds(&self) -> (State, State) {
        let mut lo = self.flows[0].min.as_array();
        let mut hi = self.flows[0].max.as_array();
        for f in &self.flows[1..] {
            let (a, b) = (f.min.as_array(), f.max.as_array());
            for i in 0..4 {
                lo[i] = lo[i].min(a[i]);
                hi[i] = hi[i].max(b[i]);
            }
        }
        (State::from_array(lo), State::from_array(hi))
    }
}

impl Frame {
    fn dim(&self) -> usize {
        4 * self.segments + 2
    }

    fn value(&self, x: &Vx) -> f64 {
        x[self.dim() - 1]
    }

    fn period(&self, x: &Vx) -> f64 {
        x[self.dim() - 2] * self.t_scale
    }

    fn node(&self, x: &Vx, i: usize) -> State {
        let k = 4 * (i % self.segments);
        State::new(x[k], x[k + 1], x[k + 2], x[k + 3])
    }

    /// Cyclic shift of the node block so node `r` comes first.
    fn rotate(&self, v: &Vx, r: usize) -> Vx {
        let n = 4 * self.segments;
        let mut out = v.clone();
        for i in 0..n {
            out[i] = v[(i + 4 * r) % n];
        }
        out
    }

    /// Moves the anchor to the node where the flow is fastest. The phase
    /// condition pins the cycle through `f(u₁)`; left alone, `u₁` drifts
    /// into slow stretches where that pin goes soft.
    fn reanchor(&self, mut s: Solved) -> Result<Solved> {
        let p = self.params_at(&s.x);
        let speed = |i: usize| Vector4::from(p.field(&self.node(&s.x, i).as_array())).norm();
        let r = (0..self.segments).max_by(|&a, &b| speed(a).total_cmp(&speed(b))).unwrap_or(0);
        if r != 0 {
            s.x = self.rotate(&s.x, r);
            s.ev.flows.rotate_left(r);
            let w = self.rotate(&s.tangent, r);
            let t = self.tangent(&s.ev, &self.phase_at(&s.x), &w)?;
            s.tangent = if t.dot(&w) < 0.0 { -t } else { t };
        }
        Ok(s)
    }

    fn params_at(&self, x: &Vx) -> ModelParams {
        self.base.with(self.param, self.value(x))
    }

    fn evaluate(&self, x: &Vx, opts: &CycleOptions) -> Result<Eval> {
        let p = self.params_at(x);
        if x[self.dim() - 2] <= 0.0 || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                what: "continuation unknowns",
                value: x.iter().copied().collect(),
            });
        }
        p.validate()?;
        let h = self.period(x) / self.segments as f64;
        let flows = (0..self.segments)
            .into_par_iter()
            .map(|i| flow_with_sensitivity(&p, self.node(x, i), h, opts.shooting_tol, Some(self.param)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Eval { flows })
    }

    /// Matching residuals `φ(u_i, T/m) − u_{i+1}`.
    fn mismatch(&self, x: &Vx, ev: &Eval) -> Vx {
        let mut g = Vx::zeros(4 * self.segments);
        for (i, f) in ev.flows.iter().enumerate() {
            let d = (f.end - self.node(x, i + 1)).as_array();
            for r in 0..4 {
                g[4 * i + r] = d[r];
            }
        }
        g
    }

    /// Jacobian of matching and phase rows, bordered by `w`.
    fn matrix(&self, ev: &Eval, phase: &Vector4<f64>, w: &Vx) -> DMatrix<f64> {
        let (m, n) = (self.segments, self.dim());
        let mut j = DMatrix::zeros(n, n);
        let h = self.t_scale / m as f64;
        for (i, f) in ev.flows.iter().enumerate() {
            let next = (i + 1) % m;
            for r in 0..4 {
                for c in 0..4 {
                    j[(4 * i + r, 4 * i + c)] += f.jacobian[(r, c)];
                }
                j[(4 * i + r, 4 * next + r)] -= 1.0;
                j[(4 * i + r, n - 2)] = h * f.field_end[r];
                j[(4 * i + r, n - 1)] = f.param_sens[r];
            }
        }
        for c in 0..4 {
            j[(n - 2, c)] = phase[c];
        }
        for c in 0..n {
            j[(n - 1, c)] = w[c];
        }
        j
    }

    fn phase_at(&self, x: &Vx) -> Vector4<f64> {
        Vector4::from(self.params_at(x).field(&self.node(x, 0).as_array()))
    }

    fn tangent(&self, ev: &Eval, phase: &Vector4<f64>, w: &Vx) -> Result<Vx> {
        let n = self.dim();
        let mut e = Vx::zeros(n);
        e[n - 1] = 1.0;
        let t = self
            .matrix(ev, phase, w)
            .lu()
            .solve(&e)
            .ok_or(Error::Singular("continuation tangent"))?;
        Ok(t.normalize())
    }
}

struct Solved {
    x: Vx,
    ev: Eval,
    tangent: Vx,
    iterations: usize,
    residual: f64,
}

/// Newton on matching, `phase·(u₁ − u_ref) = 0` and `w·(X − X_pred) = 0`.
fn correct(frame: &Frame, pred: &Vx, w: &Vx, u_ref: State, phase: &Vector4<f64>, opts: &ContinuationOptions) -> Result<Solved> {
    let n = frame.dim();
    let mut x = pred.clone();
    let mut last_res = f64::INFINITY;
    for it in 0..=opts.max_corrector {
        let ev = frame.evaluate(&x, &opts.cycle)?;
        let mis = frame.mismatch(&x, &ev);
        let res = mis.amax();
        let u = frame.node(&x, 0);
        let g_phase = phase.dot(&Vector4::from((u - u_ref).as_array()));
        let g_arc = w.dot(&(&x - pred));
        let scale = x.rows(0, n - 2).amax().max(1.0);
        if res <= opts.cycle.newton_tol * scale && g_phase.abs() <= 1e-10 * phase.norm() * scale && g_arc.abs() <= 1e-10 {
            let tangent = frame.tangent(&ev, phase, w)?;
            let tangent = if tangent.dot(w) < 0.0 { -tangent } else { tangent };
            return Ok(Solved {
                x,
                ev,
                tangent,
                iterations: it,
                residual: res,
            });
        }
        if it == opts.max_corrector || (it > 2 && res > 2.0 * last_res) {
            break;
        }
        last_res = res;
        let mut g = Vx::zeros(n);
        g.rows_mut(0, n - 2).copy_from(&mis);
        g[n - 2] = g_phase;
        g[n - 1] = g_arc;
        let dx = frame
            .matrix(&ev, phase, w)
            .lu()
            .solve(&(-g))
            .ok_or(Error::Singular("continuation corrector"))?;
        x += dx;
    }
    Err(Error::NotConverged {
        what: "cycle corrector",
        iterations: opts.max_corrector,
        residual: last_res,
    })
}

fn point_of(frame: &Frame, s: &Solved, arclength: f64) -> Result<CyclePoint> {
    let blocks: Vec<Matrix4<f64>> = s.ev.flows.iter().map(|f| f.jacobian).collect();
    let floquet = floquet_multipliers(&blocks)?;
    let (min, max) = s.ev.bounds();
    Ok(CyclePoint {
        value: frame.value(&s.x),
        period: frame.period(&s.x),
        anchor: frame.node(&s.x, 0),
        min,
        max,
        stability: stability_of(&floquet),
        floquet,
        residual: s.residual,
        arclength,
    })
}

/// Fold refinement: zero of the tangent's parameter component along the
/// arclength from `prev`, by Illinois regula falsi.
fn refine_fold(frame: &Frame, prev: &Solved, ds: f64, g_end: f64, opts: &ContinuationOptions) -> Result<Solved> {
    let k = frame.dim() - 1;
    let u_ref = frame.node(&prev.x, 0);
    let phase = frame.phase_at(&prev.x);
    let eval = |s: f64| correct(frame, &(&prev.x + &prev.tangent * s), &prev.tangent, u_ref, &phase, opts);
    let (mut a, mut fa) = (0.0, prev.tangent[k]);
    let (mut b, mut fb) = (ds, g_end);
    let mut side = 0;
    let mut best = None;
    for _ in 0..60 {
        let s = (a * fb - b * fa) / (fb - fa);
        let sol = eval(s)?;
        let fs = sol.tangent[k];
        best = Some(sol);
        if fs.abs() < 1e-12 || (b - a).abs() < 1e-12 * ds {
            break;
        }
        if fs.signum() == fb.signum() {
            b = s;
            fb = fs;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = s;
            fa = fs;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    best.ok_or_else(|| Error::Precondition("fold refinement made no evaluation".into()))
}

fn run(frame: Frame, first: Solved, opts: &ContinuationOptions) -> Result<CycleBranch> {
    let k = frame.dim() - 1;
    let mut points = vec![point_of(&frame, &first, 0.0)?];
    let mut folds = Vec::new();
    let mut prev = first;
    let mut arclength = 0.0;
    let mut ds = opts.ds;
    let mut halvings = 0;
    let end = loop {
        if points.len() >= opts.max_points {
            break BranchEnd::MaxPoints;
        }
        let pred = &prev.x + &prev.tangent * ds;
        let u_ref = frame.node(&prev.x, 0);
        let phase = frame.phase_at(&prev.x);
        let attempt = correct(&frame, &pred, &prev.tangent, u_ref, &phase, opts).and_then(|s| {
            if s.tangent.dot(&prev.tangent) < 0.9 {
                return Err(Error::Precondition("tangent turned too far".into()));
            }
            Ok(s)
        });
        let sol = match attempt {
            Ok(s) => s,
            Err(e) => {
                halvings += 1;
                if halvings > opts.max_halvings {
                    break BranchEnd::StepFailure {
                        value: frame.value(&prev.x),
                        message: e.to_string(),
                    };
                }
                ds *= 0.5;
                continue;
            }
        };
        halvings = 0;
        let pt = point_of(&frame, &sol, arclength + ds)?;
        let (t0, t1) = (prev.tangent[k], sol.tangent[k]);
        if t0 != 0.0 && t1 != 0.0 && t0.signum() != t1.signum() {
            if let Ok(f) = refine_fold(&frame, &prev, ds, t1, opts) {
                let s = arclength + (&f.x - &prev.x).norm();
                let fp = point_of(&frame, &f, s)?;
                // through a Hopf point the branch retraces itself with the
                // amplitude dipping to zero; at a limit point it keeps changing
                let last = points.last().map_or(f64::INFINITY, CyclePoint::amplitude);
                if fp.amplitude() < last && fp.amplitude() < pt.amplitude() {
                    break BranchEnd::Collapsed { value: fp.value };
                }
                folds.push(fp);
            }
        }
        arclength += ds;
        if sol.iterations <= 3 {
            ds = (ds * 1.5).min(opts.ds_max);
        } else if sol.iterations >= 6 {
            ds *= 0.5;
        }
        let (value, amplitude, period) = (pt.value, pt.amplitude(), pt.period);
        points.push(pt);
        prev = frame.reanchor(sol)?;
        if value < opts.range.0 || value > opts.range.1 {
            break BranchEnd::LeftRange { value };
        }
        if amplitude < opts.min_amplitude {
            break BranchEnd::Collapsed { value };
        }
        if period > opts.max_period {
            break BranchEnd::LongPeriod { value, period };
        }
    };
    Ok(CycleBranch {
        param: frame.param,
        points,
        folds,
        end,
    })
}

fn pack(nodes: &[State], period_scaled: f64, value: f64) -> Vx {
    let mut x = Vx::zeros(4 * nodes.len() + 2);
    for (i, s) in nodes.iter().enumerate() {
        x.rows_mut(4 * i, 4).copy_from_slice(&s.as_array());
    }
    x[4 * nodes.len()] = period_scaled;
    x[4 * nodes.len() + 1] = value;
    x
}

/// Continues the branch through a known cycle. `direction` picks the sign
/// of the initial parameter change.
pub fn continue_cycle(cycle: &Cycle, param: Param, direction: f64, opts: &ContinuationOptions) -> Result<CycleBranch> {
    let frame = Frame {
        param,
        base: cycle.params,
        t_scale: cycle.period,
        segments: opts.segments.max(1),
    };
    let h = cycle.period / frame.segments as f64;
    let mut nodes = vec![cycle.anchor];
    for i in 1..frame.segments {
        let last = nodes[i - 1];
        nodes.push(flow(&cycle.params, last, 0.0, h, opts.cycle.shooting_tol)?);
    }
    let x = pack(&nodes, 1.0, cycle.params.get(param));
    let n = frame.dim();
    let phase = frame.phase_at(&x);
    let mut e = Vx::zeros(n);
    e[n - 1] = 1.0;
    // converge at fixed parameter first
    let fixed = correct(&frame, &x, &e, cycle.anchor, &phase, opts)?;
    let t = frame.tangent(&fixed.ev, &phase, &e)?;
    let t = if direction < 0.0 { -t } else { t };
    let first = Solved { tangent: t, ..fixed };
    run(frame, first, opts)
}

/// Hopf data at the start of a branch together with the branch itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfBranch {
    pub normal_form: HopfNormalForm,
    pub branch: CycleBranch,
}

/// Starts the cycle branch born at a Hopf point of `eq` (which must be an
/// equilibrium of `params` with a pure imaginary pair) and continues it.
///
/// The first cycle is sought on the hyperplane through
/// `eq + 2r·Re(q e^{iωt})` orthogonal to the critical mode, with the
/// parameter free.
pub fn continue_from_hopf(params: &ModelParams, eq: State, param: Param, opts: &ContinuationOptions) -> Result<HopfBranch> {
    let nf = first_lyapunov_coefficient(params, &eq)?;
    let m = opts.segments.max(1);
    let frame = Frame {
        param,
        base: *params,
        t_scale: 2.0 * std::f64::consts::PI / nf.omega,
        segments: m,
    };
    let r = opts.hopf_radius;
    let mode: Vec<State> = (0..m)
        .map(|i| {
            let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / m as f64);
            State::from_array(std::array::from_fn(|k| (nf.q[k] * rot).re))
        })
        .collect();
    let nodes: Vec<State> = mode.iter().map(|d| eq + *d * (2.0 * r)).collect();
    let x0 = pack(&nodes, 1.0, params.get(param));
    let mut w = pack(&mode, 0.0, 0.0);
    w /= w.norm();
    let phase = frame.phase_at(&x0);
    let first = correct(&frame, &x0, &w, nodes[0], &phase, opts)?;
    let branch = run(frame, first, opts)?;
    Ok(HopfBranch { normal_form: nf, branch })
}
