//! Equilibria of the full and reduced models.
//!
//! Boundary points (`z = 0` or `x = 0`) are closed form. Interior points
//! solve a cubic: in `v` for linear immune clearance (after rescaling to
//! `K = γ = 1`) and in `y` for quadratic clearance.

use std::fmt;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Clearance, ModelParams, State};
use crate::poly::RealPolynomial;
use crate::scalar;

/// Positivity margin for interior feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EquilibriumTag {
    /// Origin.
    E0,
    /// Tumor at carrying capacity, no infection.
    EK,
    /// Coexistence of tumor and virus without immune cells.
    Estar,
    /// Boundary point with `x = 0` and negative immune density.
    EN,
    Interior,
}

/// Name of an interior branch. Roots of the interior cubic are ordered by
/// their real parts; three real roots are minus < im < plus, and a lone real
/// root is `EPlus` when the complex pair lies to its left, else `EMinus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InteriorBranch {
    #[serde(rename = "E_minus")]
    EMinus,
    #[serde(rename = "E_im")]
    EIm,
    #[serde(rename = "E_plus")]
    EPlus,
}

impl fmt::Display for EquilibriumTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumTag::E0 => "E0",
            EquilibriumTag::EK => "EK",
            EquilibriumTag::Estar => "Estar",
            EquilibriumTag::EN => "EN",
            EquilibriumTag::Interior => "interior",
        })
    }
}

impl fmt::Display for InteriorBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InteriorBranch::EMinus => "E_minus",
            InteriorBranch::EIm => "E_im",
            InteriorBranch::EPlus => "E_plus",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub tag: EquilibriumTag,
    #[serde(rename = "sub_tag", skip_serializing_if = "Option::is_none", default)]
    pub branch: Option<InteriorBranch>,
    pub point: State,
    pub feasible: bool,
    /// Max-norm of the vector field at `point`.
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl Equilibrium {
    fn new(p: &ModelParams, tag: EquilibriumTag, point: State) -> Self {
        let residual = State::from_array(p.field(&point.as_array())).max_abs();
        let feasible = point.as_array().iter().all(|&c| c >= -FEASIBILITY_TOL)
            && p.domain_bounds().contains(&point, 1e-9 * point.max_abs().max(1.0));
        Equilibrium {
            tag,
            branch: None,
            point,
            feasible,
            residual,
            note: None,
        }
    }

    /// Short label such as `Estar` or `E_im`.
    pub fn label(&self) -> String {
        match self.branch {
            Some(b) => b.to_string(),
            None => self.tag.to_string(),
        }
    }
}

/// All equilibria for one parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub params: ModelParams,
    pub equilibria: Vec<Equilibrium>,
    pub notes: Vec<String>,
}

impl EquilibriumSet {
    pub fn feasible(&self) -> impl Iterator<Item = &Equilibrium> {
        self.equilibria.iter().filter(|e| e.feasible)
    }

    pub fn find(&self, tag: EquilibriumTag) -> Option<&Equilibrium> {
        self.equilibria.iter().find(|e| e.tag == tag)
    }

    pub fn interior(&self, branch: InteriorBranch) -> Option<&Equilibrium> {
        self.equilibria.iter().find(|e| e.branch == Some(branch))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("equilibrium set serializes")
    }
}

/// `R₀ = βKb / (βK + δ)`.
pub fn basic_reproduction_number(p: &ModelParams) -> f64 {
    p.r0()
}

/// `b₀ = 1 + δ / (βK)`, the burst size with `R₀ = 1`.
pub fn critical_burst(p: &ModelParams) -> f64 {
    p.critical_burst()
}

/// The immune-free coexistence point `E*` for any `b ≠ 1`; it has negative
/// coordinates when `R₀ < 1`.
pub fn virus_equilibrium(p: &ModelParams) -> State {
    let x = p.delta / (p.beta * (p.b - 1.0));
    let y = p.lambda * (1.0 - x / p.k) / (p.lambda / p.k + p.beta * p.gamma * (p.b - 1.0) / p.delta);
    let v = p.gamma * (p.b - 1.0) * y / p.delta;
    State::new(x, y, v, 0.0)
}

/// `E₀`, `E_K`, `E*` (when `b > 1`) and the always-infeasible `E_N`.
pub fn boundary_equilibria(p: &ModelParams) -> Vec<Equilibrium> {
    let mut out = vec![
        Equilibrium::new(p, EquilibriumTag::E0, State::ORIGIN),
        Equilibrium::new(p, EquilibriumTag::EK, State::new(p.k, 0.0, 0.0, 0.0)),
    ];
    if p.b > 1.0 {
        let mut e = Equilibrium::new(p, EquilibriumTag::Estar, virus_equilibrium(p));
        if p.r0() < 1.0 {
            e.note = Some("R0 < 1: outside the nonnegative orthant".into());
        }
        out.push(e);
    }
    if let Some(s) = negative_immune_point(p) {
        let mut e = Equilibrium::new(p, EquilibriumTag::EN, s);
        e.feasible = false;
        e.note = Some("negative immune density".into());
        out.push(e);
    }
    out
}

fn negative_immune_point(p: &ModelParams) -> Option<State> {
    if p.beta_y <= 0.0 {
        return None;
    }
    let z = -p.gamma / p.beta_y;
    let denom = p.delta - p.beta_v * p.gamma / p.beta_y;
    if denom == 0.0 {
        return None;
    }
    let y = match p.epsilon {
        Clearance::Linear => p.immune_threshold(),
        Clearance::Quadratic => p.c * z / p.beta_z,
    };
    let v = p.b * p.gamma * y / denom;
    Some(State::new(0.0, y, v, z))
}

/// The interior cubic: `P(v)` of the rescaled system for ε = 0, `Q(y)` for
/// ε = 1. Returns `None` in degenerate settings (no immune coupling, λ = 0
/// or c = 0) where interior points do not reduce to a single polynomial.
pub fn interior_cubic(p: &ModelParams) -> Option<RealPolynomial> {
    match p.epsilon {
        Clearance::Linear => linear_cubic(&p.rescale().params),
        Clearance::Quadratic => quadratic_cubic(p),
    }
}

/// `P(v) = βv·h·g − y_e(g + β_y f)` with `K = γ = 1`, where
/// `h = 1 − y_e − βv/λ`, `g = β_y y_e + β_v v`, `f = y_e(b − 1) − δv`.
fn linear_cubic(q: &ModelParams) -> Option<RealPolynomial> {
    if q.lambda <= 0.0 || (q.beta_y == 0.0 && q.beta_v == 0.0) {
        return None;
    }
    let ye = q.immune_threshold();
    let h = RealPolynomial::linear(-q.beta / q.lambda, 1.0 - ye);
    let g = RealPolynomial::linear(q.beta_v, q.beta_y * ye);
    let f = RealPolynomial::linear(-q.delta, ye * (q.b - 1.0));
    let bv = RealPolynomial::linear(q.beta, 0.0);
    let poly = &(&(&bv * &h) * &g) - &(&(&g + &(&f * q.beta_y)) * ye);
    (!poly.is_zero()).then_some(poly)
}

struct QuadraticParts {
    f: RealPolynomial,
    g: RealPolynomial,
    h: RealPolynomial,
}

fn quadratic_parts(p: &ModelParams) -> QuadraticParts {
    QuadraticParts {
        f: RealPolynomial::linear(-p.beta_y * p.beta_z, p.c * p.gamma * (p.b - 1.0)),
        g: RealPolynomial::linear(p.beta_v * p.beta_z, p.delta * p.c),
        h: RealPolynomial::linear(p.beta_z * p.beta_y / p.c, p.gamma),
    }
}

/// `Q(y) = λfg(1 − y/K) − λhg²/(βK) − βyf²`.
fn quadratic_cubic(p: &ModelParams) -> Option<RealPolynomial> {
    if p.c <= 0.0 {
        return None;
    }
    let QuadraticParts { f, g, h } = quadratic_parts(p);
    let one_minus = RealPolynomial::linear(-1.0 / p.k, 1.0);
    let term1 = &(&(&f * &g) * &one_minus) * p.lambda;
    let term2 = &(&h * &(&g * &g)) * (p.lambda / (p.beta * p.k));
    let term3 = &(&RealPolynomial::x() * &(&f * &f)) * p.beta;
    let poly = &(&term1 - &term2) - &term3;
    (!poly.is_zero()).then_some(poly)
}

/// Real roots of the interior cubic with their branch names.
fn tagged_roots(poly: &RealPolynomial) -> Result<Vec<(f64, InteriorBranch)>> {
    let reals = poly.real_roots(None)?;
    let deg = poly.degree().unwrap_or(0);
    let mut out = Vec::new();
    if deg == 3 {
        let total: usize = reals.iter().map(|r| r.multiplicity).sum();
        if total >= 3 {
            let order = [InteriorBranch::EMinus, InteriorBranch::EIm, InteriorBranch::EPlus];
            let mut idx = 0;
            for r in &reals {
                out.push((r.value, order[idx.min(2)]));
                idx += r.multiplicity;
            }
        } else if let Some(r) = reals.first() {
            let pair_re = poly
                .complex_roots()?
                .iter()
                .filter(|z| z.im != 0.0)
                .map(|z| z.re)
                .next()
                .unwrap_or(f64::NEG_INFINITY);
            let tag = if pair_re < r.value {
                InteriorBranch::EPlus
            } else {
                InteriorBranch::EMinus
            };
            out.push((r.value, tag));
        }
    } else {
        // degenerate (lower-degree) reductions: name from the top down
        let order = [InteriorBranch::EPlus, InteriorBranch::EIm, InteriorBranch::EMinus];
        for (i, r) in reals.iter().rev().enumerate() {
            out.push((r.value, order[i.min(2)]));
        }
        out.reverse();
    }
    Ok(out)
}

/// A few Newton steps on the full field; keeps the best point.
pub fn polish_equilibrium(p: &ModelParams, s: State) -> State {
    let res = |s: &State| State::from_array(p.field(&s.as_array())).max_abs();
    let mut best = s;
    let mut best_res = res(&s);
    let mut cur = s;
    for _ in 0..6 {
        let f = Vector4::from(p.field(&cur.as_array()));
        let ja = p.jacobian_array(&cur.as_array());
        let j = Matrix4::from_fn(|r, c| ja[r][c]);
        let Some(dx) = j.lu().solve(&f) else { break };
        cur = cur - State::new(dx[0], dx[1], dx[2], dx[3]);
        let r = res(&cur);
        if !r.is_finite() {
            break;
        }
        if r < best_res {
            best_res = r;
            best = cur;
        } else {
            break;
        }
    }
    best
}

/// Interior equilibria for linear immune clearance (ε = 0).
///
/// All have `y = y_e = c/β_z`. Only feasible points (`x, v, z > 0`) are
/// returned; when `y_e ≥ K` there are none.
pub fn interior_equilibria_eps0(p: &ModelParams) -> Result<Vec<Equilibrium>> {
    if p.epsilon != Clearance::Linear {
        return Err(Error::Precondition("linear clearance (epsilon = 0) required".into()));
    }
    let scaled = p.rescale();
    let q = scaled.params;
    let ye = q.immune_threshold();
    if ye >= 1.0 {
        return Ok(Vec::new());
    }
    let Some(poly) = linear_cubic(&q) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for (v, branch) in tagged_roots(&poly)? {
        let x = 1.0 - ye - v * q.beta / q.lambda;
        let g = q.beta_y * ye + q.beta_v * v;
        if g == 0.0 {
            continue;
        }
        let z = (ye * (q.b - 1.0) - q.delta * v) / g;
        if x <= FEASIBILITY_TOL || v <= FEASIBILITY_TOL || z <= FEASIBILITY_TOL {
            continue;
        }
        let point = polish_equilibrium(p, scaled.state_to_original(&State::new(x, ye, v, z)));
        let mut e = Equilibrium::new(p, EquilibriumTag::Interior, point);
        e.branch = Some(branch);
        out.push(e);
    }
    Ok(out)
}

/// Interior equilibria for quadratic immune clearance (ε = 1), from the roots
/// of `Q(y)` in `(0, y_b)`, `y_b = cγ(b − 1)/(β_y β_z)`.
pub fn interior_equilibria_eps1(p: &ModelParams) -> Result<Vec<Equilibrium>> {
    if p.epsilon != Clearance::Quadratic {
        return Err(Error::Precondition("quadratic clearance (epsilon = 1) required".into()));
    }
    let Some(poly) = quadratic_cubic(p) else {
        return Ok(Vec::new());
    };
    let y_b = if p.beta_y * p.beta_z > 0.0 {
        p.c * p.gamma * (p.b - 1.0) / (p.beta_y * p.beta_z)
    } else {
        f64::INFINITY
    };
    let QuadraticParts { f, g, h } = quadratic_parts(p);
    let mut out = Vec::new();
    for (y, branch) in tagged_roots(&poly)? {
        if y <= FEASIBILITY_TOL || y >= y_b {
            continue;
        }
        let (fy, gy, hy) = (f.eval(y), g.eval(y), h.eval(y));
        if fy.abs() <= FEASIBILITY_TOL || gy == 0.0 {
            // x would be singular: boundary-degenerate root
            continue;
        }
        let point = State::new(hy * gy / (p.beta * fy), y, y * fy / gy, y * p.beta_z / p.c);
        if point.x <= FEASIBILITY_TOL || point.v <= FEASIBILITY_TOL {
            continue;
        }
        let mut e = Equilibrium::new(p, EquilibriumTag::Interior, polish_equilibrium(p, point));
        e.branch = Some(branch);
        out.push(e);
    }
    Ok(out)
}

pub fn interior_equilibria(p: &ModelParams) -> Result<Vec<Equilibrium>> {
    match p.epsilon {
        Clearance::Linear => interior_equilibria_eps0(p),
        Clearance::Quadratic => interior_equilibria_eps1(p),
    }
}

/// Every equilibrium (boundary and interior) for `p`.
pub fn equilibria(p: &ModelParams) -> Result<EquilibriumSet> {
    p.validate()?;
    let mut notes = Vec::new();
    if p.b <= 1.0 {
        notes.push("b <= 1: Estar undefined".to_string());
    }
    let mut all = boundary_equilibria(p);
    all.extend(interior_equilibria(p)?);
    Ok(EquilibriumSet {
        params: *p,
        equilibria: all,
        notes,
    })
}

/// Burst sizes `(b₁, b₂)` between which `y*(b) > y_e` (ε = 0), from the
/// rescaled closed form. `None` when the radicand `λ(c − β_z)² − 4cβ_z` is
/// negative.
pub fn immune_window(p: &ModelParams) -> Option<(f64, f64)> {
    let q = p.rescale().params;
    let (l, be, c, d, bz) = (q.lambda, q.beta, q.c, q.delta, q.beta_z);
    let rad = l * (c - bz).powi(2) - 4.0 * c * bz;
    if rad < 0.0 || c <= 0.0 {
        return None;
    }
    let base = 2.0 * be * c - c * d * l + d * l * bz;
    let spread = d * l.sqrt() * rad.sqrt();
    let den = 2.0 * be * c;
    Some(((base - spread) / den, (base + spread) / den))
}

/// Discriminant of the monic interior cubic at burst size `b`; NaN where the
/// cubic degenerates.
pub fn interior_discriminant(p: &ModelParams, b: f64) -> f64 {
    interior_cubic(&p.with_b(b))
        .filter(|c| c.degree() == Some(3))
        .map(|c| {
            let monic = &c * (1.0 / c.leading());
            monic.cubic_discriminant().unwrap_or(f64::NAN)
        })
        .unwrap_or(f64::NAN)
}

/// Scan settings for [`fold_parameters`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldScan {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl Default for FoldScan {
    fn default() -> Self {
        FoldScan {
            lo: 1.0,
            hi: 200.0,
            samples: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub roots: Vec<f64>,
    /// `(b, Δ(b))` samples from the scan.
    pub trace: Vec<(f64, f64)>,
}

/// Burst sizes where two interior equilibria collide: zeros of the interior
/// cubic's discriminant in `b`.
pub fn fold_parameters(p: &ModelParams, scan: FoldScan) -> Result<FoldReport> {
    let (roots, trace) = scalar::all_roots(
        |b| interior_discriminant(p, b),
        scan.lo,
        scan.hi,
        scan.samples,
        1e-12,
        "discriminant",
    )?;
    Ok(FoldReport { roots, trace })
}
