//! Routh–Hurwitz tests for monic cubics and quartics.

use serde::{Deserialize, Serialize};

/// Outcome of a Routh–Hurwitz test. Each margin must be strictly positive
/// for all roots to lie in the open left half-plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouthHurwitz {
    pub stable: bool,
    pub margins: Vec<(String, f64)>,
}

impl RouthHurwitz {
    fn from_margins(margins: Vec<(&str, f64)>) -> Self {
        RouthHurwitz {
            stable: margins.iter().all(|(_, m)| *m > 0.0),
            margins: margins.into_iter().map(|(n, m)| (n.to_string(), m)).collect(),
        }
    }

    /// Smallest margin.
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min)
    }
}

/// `μ³ + a₁μ² + a₂μ + a₃`: stable iff `a₁ > 0`, `a₃ > 0`, `a₁a₂ − a₃ > 0`.
pub fn routh_hurwitz3(a1: f64, a2: f64, a3: f64) -> RouthHurwitz {
    RouthHurwitz::from_margins(vec![("a1", a1), ("a3", a3), ("a1*a2-a3", a1 * a2 - a3)])
}

/// `μ⁴ + a₁μ³ + a₂μ² + a₃μ + a₄`, with `a₁ = −Tr`, `a₂ = M₂`, `a₃ = −M₃`,
/// `a₄ = Det` in principal-minor terms. Stable iff those four are positive
/// and `a₁a₂a₃ − a₃² − a₁²a₄ = Tr(M₂M₃ − Tr·Det) − M₃² > 0`.
pub fn routh_hurwitz4(a1: f64, a2: f64, a3: f64, a4: f64) -> RouthHurwitz {
    RouthHurwitz::from_margins(vec![
        ("-tr", a1),
        ("m2", a2),
        ("-m3", a3),
        ("det", a4),
        ("hurwitz3", a1 * a2 * a3 - a3 * a3 - a1 * a1 * a4),
    ])
}

/// Dispatches on the coefficient count (orders 1 to 4).
pub fn routh_hurwitz(a: &[f64]) -> Option<RouthHurwitz> {
    match *a {
        [a1] => Some(RouthHurwitz::from_margins(vec![("a1", a1)])),
        [a1, a2] => Some(RouthHurwitz::from_margins(vec![("a1", a1), ("a2", a2)])),
        [a1, a2, a3] => Some(routh_hurwitz3(a1, a2, a3)),
        [a1, a2, a3, a4] => Some(routh_hurwitz4(a1, a2, a3, a4)),
        _ => None,
    }
}
