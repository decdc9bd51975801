//! Scalar indicators whose zeros are the critical parameter values, and
//! their refinement.

use serde::{Deserialize, Serialize};

use crate::equilibria::{boundary_equilibria, equilibria, interior_discriminant, virus_equilibrium, EquilibriumTag, InteriorBranch};
use crate::error::{Error, Result};
use crate::model::{Clearance, ModelParams, Param, State};
use crate::scalar;
use crate::stability::classify_state;

/// Imaginary parts below this do not count as an oscillatory pair.
pub const MIN_PAIR_FREQUENCY: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    /// `R₀ = 1`: E* leaves E_K.
    Transcritical,
    /// A complex pair of the tracked equilibrium crosses the imaginary axis.
    Hopf,
    /// Two interior equilibria collide: the interior cubic's discriminant
    /// vanishes.
    Fold,
    /// An interior equilibrium meets E*: `y* = y_e` for linear clearance,
    /// `y* = y_b` for quadratic clearance.
    WindowEdge,
}

impl CriticalKind {
    pub fn name(self) -> &'static str {
        match self {
            CriticalKind::Transcritical => "transcritical",
            CriticalKind::Hopf => "hopf",
            CriticalKind::Fold => "fold",
            CriticalKind::WindowEdge => "window_edge",
        }
    }
}

/// Identifies an equilibrium across parameter values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchKey {
    pub tag: EquilibriumTag,
    pub branch: Option<InteriorBranch>,
}

impl BranchKey {
    pub const EK: BranchKey = BranchKey {
        tag: EquilibriumTag::EK,
        branch: None,
    };
    pub const ESTAR: BranchKey = BranchKey {
        tag: EquilibriumTag::Estar,
        branch: None,
    };

    pub fn interior(branch: InteriorBranch) -> Self {
        BranchKey {
            tag: EquilibriumTag::Interior,
            branch: Some(branch),
        }
    }

    pub fn label(&self) -> String {
        match self.branch {
            Some(b) => b.to_string(),
            None => self.tag.to_string(),
        }
    }
}

/// Feasible equilibrium matching `key`, if present at `p`.
pub fn equilibrium_at(p: &ModelParams, key: BranchKey) -> Option<State> {
    if key.tag != EquilibriumTag::Interior {
        return boundary_equilibria(p)
            .into_iter()
            .find(|e| e.feasible && e.tag == key.tag)
            .map(|e| e.point);
    }
    equilibria(p)
        .ok()?
        .feasible()
        .find(|e| e.tag == key.tag && e.branch == key.branch)
        .map(|e| e.point)
}

/// `y` at E*, NaN for `b ≤ 1`.
fn estar_y(p: &ModelParams) -> f64 {
    if p.b <= 1.0 {
        return f64::NAN;
    }
    virus_equilibrium(p).y
}

/// `y_b = cγ(b − 1)/(β_y β_z)`, the upper end of feasible interior `y` for
/// quadratic clearance.
pub fn quadratic_y_bound(p: &ModelParams) -> f64 {
    p.c * p.gamma * (p.b - 1.0) / (p.beta_y * p.beta_z)
}

/// Real part of the complex pair with the largest real part, NaN when the
/// spectrum has no pair with `Im > MIN_PAIR_FREQUENCY`.
pub fn leading_pair_real_part(p: &ModelParams, s: &State) -> f64 {
    classify_state(p, s)
        .ok()
        .and_then(|r| {
            r.eigenvalues
                .iter()
                .filter(|z| z.im > MIN_PAIR_FREQUENCY)
                .map(|z| z.re)
                .reduce(f64::max)
        })
        .unwrap_or(f64::NAN)
}

/// The indicator of `kind` at `param = value`; NaN where undefined.
/// `key` selects the equilibrium for Hopf and is ignored otherwise.
pub fn critical_indicator(p: &ModelParams, param: Param, kind: CriticalKind, key: BranchKey, value: f64) -> f64 {
    let q = p.with(param, value);
    if q.validate().is_err() {
        return f64::NAN;
    }
    match kind {
        CriticalKind::Transcritical => q.r0() - 1.0,
        CriticalKind::Fold => {
            // the discriminant is a function of b; other parameters enter through q
            interior_discriminant(&q, q.b)
        }
        CriticalKind::WindowEdge => match q.epsilon {
            Clearance::Linear => estar_y(&q) - q.immune_threshold(),
            Clearance::Quadratic => estar_y(&q) - quadratic_y_bound(&q),
        },
        CriticalKind::Hopf => match equilibrium_at(&q, key) {
            Some(s) => leading_pair_real_part(&q, &s),
            None => f64::NAN,
        },
    }
}

/// A located critical value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub kind: CriticalKind,
    pub value: f64,
    /// Branch label the point belongs to.
    pub branch: String,
    /// Frequency of the critical pair at a Hopf point.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omega: Option<f64>,
}

const BRACKET_SAMPLES: usize = 16;

/// Refines the zero of the `kind` indicator inside `bracket` to `1e-8`
/// relative. Errors with the sampled trace when the indicator keeps its sign.
/// Hopf points also require a pair with nonzero frequency at the root.
pub fn locate_critical(p: &ModelParams, param: Param, kind: CriticalKind, key: BranchKey, bracket: (f64, f64)) -> Result<CriticalPoint> {
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Precondition(format!("empty bracket [{lo}, {hi}]")));
    }
    let f = |v: f64| critical_indicator(p, param, kind, key, v);
    let (brackets, trace) = scalar::scan_sign_changes(f, lo, hi, BRACKET_SAMPLES);
    let Some(&(a, b)) = brackets.first() else {
        return Err(Error::NoSignChange {
            indicator: kind.name().to_string(),
            lo,
            hi,
            trace,
        });
    };
    let xtol = 1e-10 * a.abs().max(b.abs()).max(1.0);
    let value = scalar::brent(f, a, b, xtol, kind.name())?;
    let branch = match kind {
        CriticalKind::Transcritical => BranchKey::EK.label(),
        CriticalKind::WindowEdge => BranchKey::ESTAR.label(),
        CriticalKind::Fold => "interior".to_string(),
        CriticalKind::Hopf => key.label(),
    };
    let omega = if kind == CriticalKind::Hopf {
        let q = p.with(param, value);
        let s = equilibrium_at(&q, key).ok_or_else(|| Error::Precondition(format!("{} vanished at the Hopf point", key.label())))?;
        let w = classify_state(&q, &s)?
            .eigenvalues
            .iter()
            .filter(|z| z.im > 0.0)
            .min_by(|x, y| x.re.abs().total_cmp(&y.re.abs()))
            .map(|z| z.im)
            .unwrap_or(0.0);
        if w <= MIN_PAIR_FREQUENCY {
            return Err(Error::Precondition(format!("degenerate Hopf crossing at {value}: |Im| = {w}")));
        }
        Some(w)
    } else {
        None
    };
    Ok(CriticalPoint { kind, value, branch, omega })
}
