//! Local stability: eigenvalues, Routh–Hurwitz tests and per-equilibrium
//! classification.

mod eigen;
mod routh;
mod virus;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use eigen::{characteristic_coefficients, characteristic_polynomial, eigenvalues, sort_eigenvalues};
pub use routh::{routh_hurwitz, routh_hurwitz3, routh_hurwitz4, RouthHurwitz};
pub use virus::{
    locate_bh, phi_denominator, phi_polynomial, shifted_phi, stability_function_h, virus_char_coefficients,
    virus_hopf_burst, HopfPoint, HopfTest,
};

use crate::equilibria::{Equilibrium, EquilibriumTag};
use crate::error::Result;
use crate::model::{jacobian, Clearance, ModelParams, State};

/// `|Re μ|` below this counts as zero.
pub const HYPERBOLIC_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Stable,
    Unstable,
    NonHyperbolic,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Stable => "stable",
            Classification::Unstable => "unstable",
            Classification::NonHyperbolic => "non_hyperbolic",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Sorted by descending real part.
    pub eigenvalues: Vec<Complex64>,
    pub classification: Classification,
    pub rh_verdict: Option<RouthHurwitz>,
    pub leading_real_part: f64,
    /// Number of eigenvalues with real part above the tolerance.
    pub unstable_dim: usize,
    /// Locally attracting in the nonnegative orthant. Differs from
    /// `classification == Stable` only for non-hyperbolic points whose
    /// center direction is known to contract.
    pub attracting: bool,
    pub notes: Vec<String>,
}

impl StabilityReport {
    pub fn from_eigenvalues(eigenvalues: Vec<Complex64>, tol: f64) -> Self {
        let leading = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let unstable_dim = eigenvalues.iter().filter(|z| z.re > tol).count();
        let classification = if unstable_dim > 0 {
            Classification::Unstable
        } else if leading < -tol {
            Classification::Stable
        } else {
            Classification::NonHyperbolic
        };
        StabilityReport {
            eigenvalues,
            classification,
            rh_verdict: None,
            leading_real_part: leading,
            unstable_dim,
            attracting: classification == Classification::Stable,
            notes: Vec::new(),
        }
    }

    pub fn is_stable(&self) -> bool {
        self.classification == Classification::Stable
    }

    /// Leading complex pair (positive imaginary part), if any.
    pub fn leading_pair(&self) -> Option<Complex64> {
        self.eigenvalues.iter().copied().find(|z| z.im > 0.0)
    }
}

/// Eigenvalue-based report at an arbitrary state.
pub fn classify_state(p: &ModelParams, s: &State) -> Result<StabilityReport> {
    let j = jacobian(p, s)?;
    let mut report = StabilityReport::from_eigenvalues(eigenvalues(&j)?, HYPERBOLIC_TOL);
    report.rh_verdict = routh_hurwitz(&characteristic_coefficients(&j));
    Ok(report)
}

/// Report for a tagged equilibrium, adding the structural facts known for
/// boundary points.
pub fn classify(p: &ModelParams, eq: &Equilibrium) -> Result<StabilityReport> {
    let mut r = classify_state(p, &eq.point)?;
    match eq.tag {
        EquilibriumTag::E0 => r.notes.push("saddle: growth direction x is unstable".into()),
        EquilibriumTag::EK => {
            if p.epsilon == Clearance::Quadratic {
                r.notes.push("zero eigenvalue from the z row (singular Jacobian)".into());
                let rest_stable = r
                    .eigenvalues
                    .iter()
                    .filter(|z| !(z.re == 0.0 && z.im == 0.0))
                    .all(|z| z.re < -HYPERBOLIC_TOL);
                if rest_stable && p.r0() < 1.0 {
                    // z' = -c z^2 near E_K: algebraic decay along the center direction
                    r.attracting = true;
                    r.notes.push("locally stable (non-hyperbolic, Lyapunov-Malkin)".into());
                }
            } else {
                r.notes.push(format!("stable iff R0 < 1 (R0 = {})", p.r0()));
            }
        }
        EquilibriumTag::Estar => {
            let z_rate = match p.epsilon {
                Clearance::Linear => p.beta_z * eq.point.y - p.c,
                Clearance::Quadratic => p.beta_z * eq.point.y,
            };
            r.notes.push(format!("immune-direction eigenvalue {z_rate}"));
        }
        EquilibriumTag::EN => r.notes.push("outside the domain".into()),
        EquilibriumTag::Interior => {}
    }
    Ok(r)
}
