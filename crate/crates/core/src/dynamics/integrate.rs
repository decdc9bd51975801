//! Dormand–Prince 5(4) with PI step-size control and fifth-order dense
//! output, on fixed-size arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, State};

/// Local error tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { abs: 1e-10, rel: 1e-8 }
    }
}

impl Tolerances {
    pub fn new(abs: f64, rel: f64) -> Result<Self> {
        if !(abs > 0.0 && rel > 0.0 && abs.is_finite() && rel.is_finite()) {
            return Err(Error::Precondition(format!("tolerances must be positive, got {abs}, {rel}")));
        }
        Ok(Tolerances { abs, rel })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Tolerances {
            abs: self.abs * factor,
            rel: self.rel * factor,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Settings shared by all integrations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: Tolerances,
    pub max_steps: usize,
    /// Largest step magnitude; `∞` for none.
    pub h_max: f64,
    /// Leading components projected onto `[0, ∞)` after each accepted
    /// forward step, so stiff decays cannot overshoot below zero.
    pub nonnegative: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: Tolerances::default(),
            max_steps: 2_000_000,
            h_max: f64::INFINITY,
            nonnegative: 0,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: Tolerances) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

/// One accepted step, with its continuous extension.
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    /// Dense output at `t` within the step.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let r = &self.rcont;
        std::array::from_fn(|i| r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i]))))
    }
}

/// Returned by a step observer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// How an integration ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Termination {
    Completed,
    Stopped { t: f64 },
    StepUnderflow { t: f64 },
    TooManySteps { t: f64 },
    NonFinite { t: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveSummary<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    pub termination: Termination,
}

impl<const N: usize> SolveSummary<N> {
    /// Converts abnormal terminations into errors.
    pub fn into_result(self) -> Result<Self> {
        match self.termination {
            Termination::Completed | Termination::Stopped { .. } => Ok(self),
            Termination::StepUnderflow { t } => Err(Error::StepUnderflow { t }),
            Termination::TooManySteps { .. } => Err(Error::TooManySteps(self.accepted + self.rejected)),
            Termination::NonFinite { .. } => Err(Error::NonFinite {
                what: "integration state",
                value: self.y.to_vec(),
            }),
        }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

fn initial_step<const N: usize, F>(f: &F, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64, tol: &Tolerances, h_max: f64) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let sk = |i: usize, y: &[f64; N]| tol.abs + tol.rel * y[i].abs();
    let rms = |v: &[f64; N], y: &[f64; N]| ((0..N).map(|i| (v[i] / sk(i, y)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let dnf = rms(f0, y0);
    let dny = rms(y0, y0);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * dny / dnf };
    h = h.min(h_max);
    let y1 = axpy(y0, dir * h, &[(1.0, f0)]);
    let f1 = f(t0 + dir * h, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let der2 = rms(&diff, y0) / h;
    let der12 = der2.max(dnf);
    let h1 = if der12 <= 1e-15 {
        (1e-6_f64).max(h * 1e-3)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(h_max)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction), calling
/// `observer` after every accepted step.
pub fn solve<const N: usize, F, O>(f: &F, t0: f64, y0: [f64; N], t1: f64, opts: &SolverOptions, mut observer: O) -> SolveSummary<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&Step<N>) -> Control,
{
    let mut summary = SolveSummary {
        t: t0,
        y: y0,
        accepted: 0,
        rejected: 0,
        termination: Termination::Completed,
    };
    if t1 == t0 {
        return summary;
    }
    let dir = (t1 - t0).signum();
    let tol = opts.tol;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(f, t, &y, &k1, dir, &tol, opts.h_max);
    let mut facold = 1e-4_f64;
    let mut last_rejected = false;
    loop {
        if summary.accepted + summary.rejected >= opts.max_steps {
            summary.termination = Termination::TooManySteps { t };
            break;
        }
        let remaining = (t1 - t) * dir;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h < 1e-14 * t.abs().max(1.0) && !last {
            summary.termination = Termination::StepUnderflow { t };
            break;
        }
        let hs = dir * h;
        let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let ysti = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let t_new = if last { t1 } else { t + hs };
        let k6 = f(t_new, &ysti);
        let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t_new, &y_new);
        let mut err = 0.0;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            err += (e / sk).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            if h < 1e-14 * t.abs().max(1.0) {
                summary.termination = Termination::NonFinite { t };
                break;
            }
            h *= 0.1;
            summary.rejected += 1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = (h / fac).min(opts.h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            facold = err.max(1e-4);
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
            let rcont = [
                y,
                ydiff,
                bspl,
                std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                }),
            ];
            let mut step = Step {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                rcont,
            };
            summary.accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            if dir > 0.0 && y[..opts.nonnegative].iter().any(|&v| v < 0.0) {
                for v in &mut y[..opts.nonnegative] {
                    *v = v.max(0.0);
                }
                k1 = f(t, &y);
                step.y1 = y;
            }
            summary.t = t;
            summary.y = y;
            if y.iter().any(|v| !v.is_finite()) {
                summary.termination = Termination::NonFinite { t };
                break;
            }
            if observer(&step) == Control::Stop {
                summary.termination = Termination::Stopped { t };
                break;
            }
            if last {
                break;
            }
            h = h_new;
            last_rejected = false;
        } else {
            h /= (1.0 / FAC_MIN).min(fac11 / SAFE);
            summary.rejected += 1;
            last_rejected = true;
        }
    }
    summary
}

/// Per-component extent and domain diagnostics of an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitStats {
    pub min: State,
    pub max: State,
    /// Recorded states outside Ω inflated by the slack used.
    pub domain_violations: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// A time-stamped trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub stats: OrbitStats,
    pub termination: Termination,
}

impl Orbit {
    pub fn last(&self) -> State {
        *self.states.last().expect("orbit has at least the initial state")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("orbit has at least one time")
    }

    pub fn is_complete(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// `Ok` for completed orbits, otherwise the abort reason.
    pub fn check(&self) -> Result<&Self> {
        match self.termination {
            Termination::Completed | Termination::Stopped { .. } => Ok(self),
            Termination::StepUnderflow { t } => Err(Error::StepUnderflow { t }),
            Termination::TooManySteps { .. } => Err(Error::TooManySteps(self.stats.accepted_steps + self.stats.rejected_steps)),
            Termination::NonFinite { .. } => Err(Error::NonFinite {
                what: "orbit",
                value: self.last().as_array().to_vec(),
            }),
        }
    }

    /// Sub-orbit with `t ≥ t_from`.
    pub fn tail(&self, t_from: f64) -> Orbit {
        let start = self.times.partition_point(|&t| t < t_from);
        let mut o = self.clone();
        o.times = self.times[start..].to_vec();
        o.states = self.states[start..].to_vec();
        o.stats.min = extent(&o.states, f64::min);
        o.stats.max = extent(&o.states, f64::max);
        o
    }
}

fn extent(states: &[State], pick: fn(f64, f64) -> f64) -> State {
    let init = if pick(0.0, 1.0) == 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    let a = states.iter().fold([init; 4], |acc, s| {
        let v = s.as_array();
        std::array::from_fn(|i| pick(acc[i], v[i]))
    });
    State::from_array(a)
}

/// Which states an [`integrate`] call records.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Every accepted step.
    Steps,
    /// Uniform grid with the given spacing (dense output).
    Every(f64),
}

/// Integrates the model from `init` over `t_span`.
///
/// Numerical aborts (step underflow, step budget, overflow) return the
/// partial orbit with the reason in [`Orbit::termination`].
pub fn integrate(p: &ModelParams, init: State, t_span: (f64, f64), tol: Tolerances, sampling: Sampling) -> Result<Orbit> {
    p.validate()?;
    if !init.is_finite() {
        return Err(Error::NonFinite {
            what: "initial state",
            value: init.as_array().to_vec(),
        });
    }
    Tolerances::new(tol.abs, tol.rel)?;
    let (t0, t1) = t_span;
    let bounds = p.domain_bounds();
    let slack = 10.0 * tol.abs + tol.rel * init.max_abs().max(1.0);
    let mut times = vec![t0];
    let mut states = vec![init];
    let dir = (t1 - t0).signum();
    let mut next_sample = match sampling {
        Sampling::Every(dt) if dt > 0.0 => t0 + dir * dt,
        _ => f64::NAN,
    };
    let field = |_: f64, y: &[f64; 4]| p.field(y);
    let opts = SolverOptions {
        nonnegative: 4,
        ..SolverOptions::with_tol(tol)
    };
    let summary = solve(&field, t0, init.as_array(), t1, &opts, |step| {
        match sampling {
            Sampling::Steps => {
                times.push(step.t1);
                states.push(State::from_array(step.y1));
            }
            Sampling::Every(dt) => {
                let mut k = ((next_sample - t0) / (dir * dt)).round();
                while (step.t1 - next_sample) * dir >= -1e-12 * dt {
                    let ts = next_sample;
                    let s = if (step.t1 - ts).abs() <= 1e-12 * dt { step.y1 } else { step.interpolate(ts) };
                    times.push(ts);
                    states.push(State::from_array(s));
                    k += 1.0;
                    next_sample = t0 + dir * k * dt;
                }
            }
        }
        Control::Continue
    });
    if let Sampling::Every(_) = sampling {
        if summary.termination == Termination::Completed && times.last() != Some(&t1) {
            times.push(t1);
            states.push(State::from_array(summary.y));
        }
    }
    let violations = states.iter().filter(|s| !bounds.contains(s, slack)).count();
    Ok(Orbit {
        stats: OrbitStats {
            min: extent(&states, f64::min),
            max: extent(&states, f64::max),
            domain_violations: violations,
            accepted_steps: summary.accepted,
            rejected_steps: summary.rejected,
        },
        times,
        states,
        termination: summary.termination,
    })
}

/// Endpoint of the flow from `init` over `[t0, t1]`.
pub fn flow(p: &ModelParams, init: State, t0: f64, t1: f64, tol: Tolerances) -> Result<State> {
    let field = |_: f64, y: &[f64; 4]| p.field(y);
    let s = solve(&field, t0, init.as_array(), t1, &SolverOptions::with_tol(tol), |_| Control::Continue).into_result()?;
    Ok(State::from_array(s.y))
}
