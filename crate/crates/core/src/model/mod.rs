//! The unified four-compartment tumor/virus/immune model.
//!
//! ```text
//! x' = λ x (1 - (x+y)/K) - β x v
//! y' = β x v - γ y - β_y y z
//! v' = b γ y - β x v - δ v - β_v v z
//! z' = z (β_z y - c z^ε),   ε ∈ {0, 1}
//! ```
//!
//! `x` uninfected tumor cells, `y` infected tumor cells, `v` free virus,
//! `z` innate immune cells. Setting `β_y = β_v = 0` and dropping `z` gives the
//! three-compartment virus model (see [`reduced`]).

mod format;
pub mod reduced;

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use format::{params_from_entries, params_from_kv, params_to_kv, parse_kv, KvEntry};
pub use reduced::{reduce_3d, Reduced3d};

/// Default absolute tolerance for fixed-point residuals.
pub const FIXED_POINT_TOL: f64 = 1e-9;

/// Exponent of the immune clearance term `c z^ε`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Clearance {
    /// ε = 0: clearance `c z`.
    Linear,
    /// ε = 1: clearance `c z²`.
    Quadratic,
}

impl Clearance {
    pub fn exponent(self) -> u8 {
        match self {
            Clearance::Linear => 0,
            Clearance::Quadratic => 1,
        }
    }
}

impl TryFrom<u8> for Clearance {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, String> {
        match value {
            0 => Ok(Clearance::Linear),
            1 => Ok(Clearance::Quadratic),
            other => Err(format!("epsilon must be 0 or 1, got {other}")),
        }
    }
}

impl From<Clearance> for u8 {
    fn from(c: Clearance) -> u8 {
        c.exponent()
    }
}

/// Rate constants of the model plus the clearance switch.
///
/// `beta_z` is stored directly; the proliferation ratio `ρ = β_z / β_y` is
/// derived on demand by [`ModelParams::rho`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub beta: f64,
    pub gamma: f64,
    pub b: f64,
    pub delta: f64,
    pub beta_y: f64,
    pub beta_v: f64,
    pub beta_z: f64,
    pub c: f64,
    pub epsilon: Clearance,
}

/// Names of the scalar parameters, used for sweeps and text formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "K")]
    K,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "delta")]
    Delta,
    #[serde(rename = "beta_y")]
    BetaY,
    #[serde(rename = "beta_v")]
    BetaV,
    #[serde(rename = "beta_z")]
    BetaZ,
    #[serde(rename = "c")]
    C,
}

impl Param {
    pub const ALL: [Param; 10] = [
        Param::Lambda,
        Param::K,
        Param::Beta,
        Param::Gamma,
        Param::B,
        Param::Delta,
        Param::BetaY,
        Param::BetaV,
        Param::BetaZ,
        Param::C,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Lambda => "lambda",
            Param::K => "K",
            Param::Beta => "beta",
            Param::Gamma => "gamma",
            Param::B => "b",
            Param::Delta => "delta",
            Param::BetaY => "beta_y",
            Param::BetaV => "beta_v",
            Param::BetaZ => "beta_z",
            Param::C => "c",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "param",
                reason: format!("unknown parameter name `{s}`"),
            })
    }
}

impl ModelParams {
    /// Three-compartment virus model: no immune response, `K = γ = 1`.
    pub fn virus_only(lambda: f64, beta: f64, delta: f64, b: f64) -> Self {
        ModelParams {
            lambda,
            k: 1.0,
            beta,
            gamma: 1.0,
            b,
            delta,
            beta_y: 0.0,
            beta_v: 0.0,
            beta_z: 1.0,
            c: 1.0,
            epsilon: Clearance::Linear,
        }
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Lambda => self.lambda,
            Param::K => self.k,
            Param::Beta => self.beta,
            Param::Gamma => self.gamma,
            Param::B => self.b,
            Param::Delta => self.delta,
            Param::BetaY => self.beta_y,
            Param::BetaV => self.beta_v,
            Param::BetaZ => self.beta_z,
            Param::C => self.c,
        }
    }

    pub fn set(&mut self, p: Param, value: f64) {
        let slot = match p {
            Param::Lambda => &mut self.lambda,
            Param::K => &mut self.k,
            Param::Beta => &mut self.beta,
            Param::Gamma => &mut self.gamma,
            Param::B => &mut self.b,
            Param::Delta => &mut self.delta,
            Param::BetaY => &mut self.beta_y,
            Param::BetaV => &mut self.beta_v,
            Param::BetaZ => &mut self.beta_z,
            Param::C => &mut self.c,
        };
        *slot = value;
    }

    /// Copy with one parameter replaced.
    pub fn with(&self, p: Param, value: f64) -> Self {
        let mut q = *self;
        q.set(p, value);
        q
    }

    pub fn with_b(&self, b: f64) -> Self {
        self.with(Param::B, b)
    }

    pub fn validate(&self) -> Result<()> {
        for p in Param::ALL {
            let v = self.get(p);
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: p.name(),
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        let positive = [
            (Param::K, self.k),
            (Param::Beta, self.beta),
            (Param::Gamma, self.gamma),
            (Param::BetaZ, self.beta_z),
        ];
        for (p, v) in positive {
            if v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: p.name(),
                    reason: format!("must be > 0, got {v}"),
                });
            }
        }
        if self.b < 1.0 {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: format!("burst size must be >= 1, got {}", self.b),
            });
        }
        for p in [Param::Lambda, Param::Delta, Param::BetaY, Param::BetaV, Param::C] {
            if self.get(p) < 0.0 {
                return Err(Error::InvalidParameter {
                    name: p.name(),
                    reason: format!("must be >= 0, got {}", self.get(p)),
                });
            }
        }
        Ok(())
    }

    /// `ρ = β_z / β_y`; `None` when `β_y = 0`.
    pub fn rho(&self) -> Option<f64> {
        (self.beta_y != 0.0).then(|| self.beta_z / self.beta_y)
    }

    /// Immune threshold `y_e = c / β_z` at which `z' = 0` for ε = 0.
    pub fn immune_threshold(&self) -> f64 {
        self.c / self.beta_z
    }

    /// `R₀ = β K b / (β K + δ)`.
    pub fn r0(&self) -> f64 {
        self.beta * self.k * self.b / (self.beta * self.k + self.delta)
    }

    /// Burst size at which `R₀ = 1`: `b₀ = 1 + δ / (β K)`.
    pub fn critical_burst(&self) -> f64 {
        1.0 + self.delta / (self.beta * self.k)
    }

    /// `c z^ε` with the convention `0⁰ = 1`.
    #[inline]
    fn clearance(&self, z: f64) -> f64 {
        match self.epsilon {
            Clearance::Linear => self.c,
            Clearance::Quadratic => self.c * z,
        }
    }

    /// Unchecked vector field on raw arrays; the integrators call this.
    #[inline]
    pub fn field(&self, s: &[f64; 4]) -> [f64; 4] {
        let [x, y, v, z] = *s;
        let infection = self.beta * x * v;
        [
            self.lambda * x * (1.0 - (x + y) / self.k) - infection,
            infection - self.gamma * y - self.beta_y * y * z,
            self.b * self.gamma * y - infection - self.delta * v - self.beta_v * v * z,
            z * (self.beta_z * y - self.clearance(z)),
        ]
    }

    /// Analytic Jacobian on raw arrays.
    pub fn jacobian_array(&self, s: &[f64; 4]) -> [[f64; 4]; 4] {
        let [x, y, v, z] = *s;
        let (l, k, be, g) = (self.lambda, self.k, self.beta, self.gamma);
        let zz = match self.epsilon {
            Clearance::Linear => self.beta_z * y - self.c,
            Clearance::Quadratic => self.beta_z * y - 2.0 * self.c * z,
        };
        [
            [l - l * (2.0 * x + y) / k - be * v, -l * x / k, -be * x, 0.0],
            [be * v, -g - self.beta_y * z, be * x, -self.beta_y * y],
            [-be * v, self.b * g, -be * x - self.delta - self.beta_v * z, -self.beta_v * v],
            [0.0, self.beta_z * z, 0.0, zz],
        ]
    }

    /// Symmetric bilinear form `B(u, w) = D²f·(u, w)`. The field is quadratic,
    /// so this is independent of the base point and all higher derivatives vanish.
    pub fn second_derivative<T>(&self, u: &[T; 4], w: &[T; 4]) -> [T; 4]
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Mul<T, Output = T>,
    {
        let sym = |i: usize, j: usize| u[i] * w[j] + u[j] * w[i];
        let (l, k, be) = (self.lambda, self.k, self.beta);
        let xv = sym(0, 2);
        let yz = sym(1, 3);
        let vz = sym(2, 3);
        let f1 = (u[0] * w[0] * 2.0 + sym(0, 1)) * (-l / k) - xv * be;
        let f2 = xv * be - yz * self.beta_y;
        let f3 = xv * (-be) - vz * self.beta_v;
        let f4 = match self.epsilon {
            Clearance::Linear => yz * self.beta_z,
            Clearance::Quadratic => yz * self.beta_z - u[3] * w[3] * (2.0 * self.c),
        };
        [f1, f2, f3, f4]
    }

    /// Partial derivative of the field with respect to one parameter.
    pub fn field_param_derivative(&self, p: Param, s: &[f64; 4]) -> [f64; 4] {
        let [x, y, v, z] = *s;
        match p {
            Param::Lambda => [x * (1.0 - (x + y) / self.k), 0.0, 0.0, 0.0],
            Param::K => [self.lambda * x * (x + y) / (self.k * self.k), 0.0, 0.0, 0.0],
            Param::Beta => [-x * v, x * v, -x * v, 0.0],
            Param::Gamma => [0.0, -y, self.b * y, 0.0],
            Param::B => [0.0, 0.0, self.gamma * y, 0.0],
            Param::Delta => [0.0, 0.0, -v, 0.0],
            Param::BetaY => [0.0, -y * z, 0.0, 0.0],
            Param::BetaV => [0.0, 0.0, -v * z, 0.0],
            Param::BetaZ => [0.0, 0.0, 0.0, z * y],
            Param::C => {
                let zc = match self.epsilon {
                    Clearance::Linear => z,
                    Clearance::Quadratic => z * z,
                };
                [0.0, 0.0, 0.0, -zc]
            }
        }
    }

    /// Rescales to `K = γ = 1`; see [`Rescaled`].
    pub fn rescale(&self) -> Rescaled {
        let (k, g) = (self.k, self.gamma);
        let c = match self.epsilon {
            Clearance::Linear => self.c / g,
            Clearance::Quadratic => self.c * k / g,
        };
        Rescaled {
            params: ModelParams {
                lambda: self.lambda / g,
                k: 1.0,
                beta: self.beta * k / g,
                gamma: 1.0,
                b: self.b,
                delta: self.delta / g,
                beta_y: self.beta_y * k / g,
                beta_v: self.beta_v * k / g,
                beta_z: self.beta_z * k / g,
                c,
                epsilon: self.epsilon,
            },
            state_scale: k,
            time_scale: g,
        }
    }

    /// Bounds of the absorbing domain Ω.
    pub fn domain_bounds(&self) -> DomainBounds {
        let k = self.k;
        let mut unbounded = false;
        let v_cap = if self.delta > 0.0 {
            self.b * self.gamma * k / self.delta
        } else {
            unbounded = true;
            f64::INFINITY
        };
        let z_cap = match self.epsilon {
            Clearance::Linear => {
                let sigma = self.gamma.min(self.c);
                match self.rho() {
                    Some(rho) if self.delta > 0.0 && sigma > 0.0 => {
                        rho * self.beta * self.b * self.gamma * k * k / (self.delta * sigma)
                    }
                    _ => {
                        unbounded = true;
                        f64::INFINITY
                    }
                }
            }
            Clearance::Quadratic => {
                if self.c > 0.0 {
                    self.beta_z * k / self.c
                } else {
                    unbounded = true;
                    f64::INFINITY
                }
            }
        };
        DomainBounds {
            xy_cap: k,
            v_cap,
            z_cap,
            unbounded,
        }
    }

    /// Membership in Ω (closed set, all components nonnegative).
    pub fn in_domain(&self, s: &State) -> bool {
        self.domain_bounds().contains(s, 0.0)
    }
}

/// Parameters rescaled to `K = γ = 1` together with the maps back.
///
/// Original variables are `x = K·x̃` and original time is `t = τ / γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub params: ModelParams,
    pub state_scale: f64,
    pub time_scale: f64,
}

impl Rescaled {
    pub fn state_to_original(&self, s: &State) -> State {
        *s * self.state_scale
    }

    pub fn state_from_original(&self, s: &State) -> State {
        *s * (1.0 / self.state_scale)
    }

    pub fn time_to_original(&self, tau: f64) -> f64 {
        tau / self.time_scale
    }

    pub fn time_from_original(&self, t: f64) -> f64 {
        t * self.time_scale
    }

    /// Eigenvalues scale like rates: `μ_original = γ μ̃`.
    pub fn rate_to_original(&self, rate: f64) -> f64 {
        rate * self.time_scale
    }
}

/// Caps of the positively invariant domain
/// `Ω = {x + y ≤ K, v ≤ bγK/δ, z ≤ ζ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBounds {
    pub xy_cap: f64,
    pub v_cap: f64,
    pub z_cap: f64,
    /// Set when a degenerate rate (δ = 0, c = 0, β_y = 0 with ε = 0) makes a cap infinite.
    pub unbounded: bool,
}

impl DomainBounds {
    /// Membership in Ω inflated by `slack` on every constraint.
    pub fn contains(&self, s: &State, slack: f64) -> bool {
        s.as_array().iter().all(|&c| c >= -slack)
            && s.x + s.y <= self.xy_cap + slack
            && s.v <= self.v_cap + slack
            && s.z <= self.z_cap + slack
    }
}

/// A point `(x, y, v, z)` of phase space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub z: f64,
}

impl State {
    pub const ORIGIN: State = State::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, v: f64, z: f64) -> Self {
        State { x, y, v, z }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        State::new(a[0], a[1], a[2], a[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.v, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.as_array().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn distance(&self, other: &State) -> f64 {
        (*self - *other).norm()
    }
}

impl Add for State {
    type Output = State;
    fn add(self, o: State) -> State {
        State::new(self.x + o.x, self.y + o.y, self.v + o.v, self.z + o.z)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, o: State) -> State {
        State::new(self.x - o.x, self.y - o.y, self.v - o.v, self.z - o.z)
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, a: f64) -> State {
        State::new(self.x * a, self.y * a, self.v * a, self.z * a)
    }
}

/// Time derivative of the state, with input validation.
pub fn vector_field(p: &ModelParams, s: &State) -> Result<State> {
    p.validate()?;
    if !s.is_finite() {
        return Err(Error::NonFinite {
            what: "state",
            value: s.as_array().to_vec(),
        });
    }
    Ok(State::from_array(p.field(&s.as_array())))
}

/// Jacobian matrix of the vector field at `s`.
pub fn jacobian(p: &ModelParams, s: &State) -> Result<Matrix4<f64>> {
    p.validate()?;
    if !s.is_finite() {
        return Err(Error::NonFinite {
            what: "state",
            value: s.as_array().to_vec(),
        });
    }
    let j = p.jacobian_array(&s.as_array());
    Ok(Matrix4::from_fn(|r, c| j[r][c]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn immune_linear() -> ModelParams {
        ModelParams {
            lambda: 0.36,
            k: 1.0,
            beta: 0.11,
            gamma: 1.0,
            b: 9.5,
            delta: 0.2,
            beta_y: 0.48,
            beta_v: 0.16,
            beta_z: 0.6,
            c: 0.036,
            epsilon: Clearance::Linear,
        }
    }

    fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
        ModelParams {
            lambda: rng.gen_range(0.1..2.0),
            k: rng.gen_range(0.5..3.0),
            beta: rng.gen_range(0.05..2.0),
            gamma: rng.gen_range(0.1..2.0),
            b: rng.gen_range(1.0..40.0),
            delta: rng.gen_range(0.05..2.0),
            beta_y: rng.gen_range(0.0..1.0),
            beta_v: rng.gen_range(0.0..1.0),
            beta_z: rng.gen_range(0.1..1.0),
            c: rng.gen_range(0.01..1.0),
            epsilon: if rng.gen_bool(0.5) { Clearance::Linear } else { Clearance::Quadratic },
        }
    }

    #[test]
    fn origin_is_fixed() {
        let d = vector_field(&immune_linear(), &State::ORIGIN).unwrap();
        assert_eq!(d, State::ORIGIN);
    }

    #[test]
    fn carrying_capacity_is_fixed() {
        let mut p = immune_linear();
        p.k = 1.0;
        p.gamma = 1.0;
        let d = vector_field(&p, &State::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(d, State::ORIGIN);
    }

    #[test]
    fn immune_equilibrium_residual() {
        let s = State::new(0.453156, 0.06, 1.59331, 0.67437);
        let d = vector_field(&immune_linear(), &s).unwrap();
        assert!(d.max_abs() < 1e-5, "{d:?}");
    }

    #[test]
    fn non_finite_state_rejected() {
        let err = vector_field(&immune_linear(), &State::new(f64::NAN, 0.0, 0.0, 0.0));
        assert!(matches!(err, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = immune_linear();
        p.b = 0.5;
        assert!(p.validate().is_err());
        p = immune_linear();
        p.k = 0.0;
        assert!(p.validate().is_err());
        assert!(serde_json::from_str::<Clearance>("2").is_err());
    }

    #[test]
    fn jacobian_at_origin_is_diagonal() {
        let p = immune_linear();
        let j = jacobian(&p, &State::ORIGIN).unwrap();
        assert_eq!(j[(0, 0)], p.lambda);
        assert_eq!(j[(1, 1)], -p.gamma);
        assert_eq!(j[(2, 2)], -p.delta);
        assert_eq!(j[(3, 3)], -p.c);
        assert_eq!(j[(2, 1)], p.b * p.gamma);
    }

    #[test]
    fn jacobian_singular_at_capacity_for_quadratic_clearance() {
        let mut p = immune_linear();
        p.epsilon = Clearance::Quadratic;
        p.k = 2.0;
        let j = jacobian(&p, &State::new(p.k, 0.0, 0.0, 0.0)).unwrap();
        for c in 0..4 {
            assert_eq!(j[(3, c)], 0.0);
        }
        assert_abs_diff_eq!(j.determinant(), 0.0);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_params(&mut rng);
            let s = State::new(
                rng.gen_range(0.0..p.k),
                rng.gen_range(0.0..p.k),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
            );
            let j = p.jacobian_array(&s.as_array());
            for col in 0..4 {
                let h = 1e-6 * (1.0 + s.as_array()[col].abs());
                let mut sp = s.as_array();
                let mut sm = s.as_array();
                sp[col] += h;
                sm[col] -= h;
                let (fp, fm) = (p.field(&sp), p.field(&sm));
                for row in 0..4 {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    assert!((fd - j[row][col]).abs() <= 1e-6 * (1.0 + j[row][col].abs()));
                }
            }
        }
    }

    #[test]
    fn essential_nonnegativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = random_params(&mut rng);
            for i in 0..4 {
                let mut s: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..2.0));
                s[i] = 0.0;
                assert!(p.field(&s)[i] >= 0.0);
            }
        }
    }

    #[test]
    fn second_derivative_is_base_point_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_params(&mut rng);
        let s: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
        let u: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let w: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        // polarization identity holds exactly for a quadratic field
        let add = |a: &[f64; 4], b: &[f64; 4]| std::array::from_fn::<f64, 4, _>(|i| a[i] + b[i]);
        let f = |a: &[f64; 4]| p.field(a);
        let su = add(&s, &u);
        let sw = add(&s, &w);
        let suw = add(&su, &w);
        let b = p.second_derivative(&u, &w);
        for i in 0..4 {
            let pol = f(&suw)[i] - f(&su)[i] - f(&sw)[i] + f(&s)[i];
            assert!((pol - b[i]).abs() < 1e-12, "{i}: {pol} vs {}", b[i]);
        }
    }

    #[test]
    fn param_derivative_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_params(&mut rng);
        let s: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
        for q in Param::ALL {
            let h = 1e-6 * (1.0 + p.get(q).abs());
            let fp = p.with(q, p.get(q) + h).field(&s);
            let fm = p.with(q, p.get(q) - h).field(&s);
            let d = p.field_param_derivative(q, &s);
            for i in 0..4 {
                assert!(((fp[i] - fm[i]) / (2.0 * h) - d[i]).abs() < 1e-7, "{q} {i}");
            }
        }
    }

    #[test]
    fn rescale_identity_and_r0_invariance() {
        let p = immune_linear();
        let r = p.rescale();
        assert_eq!(r.params, p);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let q = random_params(&mut rng);
            let r = q.rescale();
            assert!((r.params.r0() - q.r0()).abs() < 1e-12 * q.r0().max(1.0));
        }
    }

    #[test]
    fn rescaled_field_is_conjugate() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let q = random_params(&mut rng);
            let r = q.rescale();
            let s = State::new(0.3, 0.2, 0.7, 0.4) * q.k;
            let f = State::from_array(q.field(&s.as_array()));
            let st = r.state_from_original(&s);
            let ft = State::from_array(r.params.field(&st.as_array()));
            // dx/dt = K γ dx̃/dτ
            let back = ft * (r.state_scale * r.time_scale);
            assert!((back - f).max_abs() < 1e-12 * (1.0 + f.max_abs()));
        }
    }

    #[test]
    fn domain_bounds_case_split() {
        let mut p = immune_linear();
        p.epsilon = Clearance::Quadratic;
        let bounds = p.domain_bounds();
        assert_abs_diff_eq!(bounds.z_cap, p.beta_z * p.k / p.c, epsilon = 1e-14);
        assert!(p.in_domain(&State::new(p.k, 0.0, 0.0, 0.0)));
        assert!(!p.in_domain(&State::new(p.k, 0.1, 0.0, 0.0)));

        let lin = immune_linear();
        let rho = lin.beta_z / lin.beta_y;
        let expected = rho * lin.beta * lin.b * lin.gamma / (lin.delta * lin.gamma.min(lin.c));
        assert_abs_diff_eq!(lin.domain_bounds().z_cap, expected, epsilon = 1e-9);
        assert!(!lin.domain_bounds().unbounded);

        let mut degenerate = lin;
        degenerate.delta = 0.0;
        let d = degenerate.domain_bounds();
        assert!(d.unbounded && d.v_cap.is_infinite());
        let mut degenerate = lin;
        degenerate.beta_y = 0.0;
        assert!(degenerate.domain_bounds().z_cap.is_infinite());
    }

    #[test]
    fn param_names_round_trip() {
        for p in Param::ALL {
            assert_eq!(p.name().parse::<Param>().unwrap(), p);
        }
        assert!("mu".parse::<Param>().is_err());
    }
}
