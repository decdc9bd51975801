//! Partition of the `(b, β)` plane by stable-attractor signature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::critical::{critical_indicator, BranchKey, CriticalKind};
use super::linspace;
use crate::equilibria::{equilibria, interior_discriminant, EquilibriumTag, InteriorBranch};
use crate::error::{Error, Result};
use crate::model::{Clearance, ModelParams, Param};
use crate::scalar;
use crate::stability::classify;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionLabel {
    #[serde(rename = "EK_only")]
    EKOnly,
    #[serde(rename = "Estar_only")]
    EstarOnly,
    #[serde(rename = "Eim_only")]
    EimOnly,
    /// E* and E_im both stable.
    #[serde(rename = "bistable")]
    Bistable,
    /// E* the only stable point, past the last interior fold.
    #[serde(rename = "Estar_above_fold")]
    EstarAboveFold,
    /// No stable equilibrium while the infection persists.
    #[serde(rename = "cycle")]
    Cycle,
    #[serde(rename = "other")]
    Other,
}

impl RegionLabel {
    pub fn name(self) -> &'static str {
        match self {
            RegionLabel::EKOnly => "EK_only",
            RegionLabel::EstarOnly => "Estar_only",
            RegionLabel::EimOnly => "Eim_only",
            RegionLabel::Bistable => "bistable",
            RegionLabel::EstarAboveFold => "Estar_above_fold",
            RegionLabel::Cycle => "cycle",
            RegionLabel::Other => "other",
        }
    }
}

/// Zero set of one indicator, sampled column by column as `(b, β)` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMap2D {
    pub b_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    /// `labels[j][i]` is the cell at `(b_grid[i], beta_grid[j])`.
    pub labels: Vec<Vec<RegionLabel>>,
    pub boundary_curves: Vec<BoundaryCurve>,
}

impl RegionMap2D {
    pub fn label_at(&self, b: f64, beta: f64) -> Option<RegionLabel> {
        let nearest = |grid: &[f64], x: f64| {
            grid.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
                .map(|(i, _)| i)
        };
        Some(self.labels[nearest(&self.beta_grid, beta)?][nearest(&self.b_grid, b)?])
    }
}

/// Largest zero of the interior discriminant in `b` on `[lo, hi]`.
fn last_fold(p: &ModelParams, lo: f64, hi: f64, samples: usize) -> Option<f64> {
    scalar::all_roots(|b| interior_discriminant(p, b), lo, hi, samples, 1e-10, "discriminant")
        .ok()
        .and_then(|(roots, _)| roots.last().copied())
}

/// Label of one parameter point. `fold` is the last interior fold of its
/// column, if any.
pub fn classify_cell(p: &ModelParams, fold: Option<f64>) -> Result<RegionLabel> {
    let set = equilibria(p)?;
    let mut ek = false;
    let mut estar = false;
    let mut interior = Vec::new();
    for e in set.feasible() {
        if !classify(p, e)?.attracting {
            continue;
        }
        match e.tag {
            EquilibriumTag::EK => ek = true,
            EquilibriumTag::Estar => estar = true,
            EquilibriumTag::Interior => interior.push(e.branch),
            _ => {}
        }
    }
    let im_only = interior.len() == 1 && interior[0] == Some(InteriorBranch::EIm);
    Ok(match (ek, estar, interior.len()) {
        (false, false, 0) if p.r0() > 1.0 => RegionLabel::Cycle,
        (true, false, 0) => RegionLabel::EKOnly,
        (false, true, 0) => match fold {
            Some(f) if p.b > f => RegionLabel::EstarAboveFold,
            _ => RegionLabel::EstarOnly,
        },
        (false, false, 1) if im_only => RegionLabel::EimOnly,
        (false, true, 1) if im_only => RegionLabel::Bistable,
        _ => RegionLabel::Other,
    })
}

/// Labels a `b × β` grid (linear clearance only) and samples the boundary
/// curves `R₀ = 1`, `y* = y_e`, the interior discriminant and the Hopf
/// condition on E*, each by root finding along `b` in every `β` column.
pub fn region_map(p: &ModelParams, b_range: (f64, f64), beta_range: (f64, f64), resolution: (usize, usize)) -> Result<RegionMap2D> {
    if p.epsilon != Clearance::Linear {
        return Err(Error::Precondition("region map requires linear clearance".into()));
    }
    let (nb, nbeta) = resolution;
    if nb < 2 || nbeta < 2 {
        return Err(Error::InvalidParameter {
            name: "resolution",
            reason: format!("need at least 2 points per axis, got {nb}x{nbeta}"),
        });
    }
    if !(b_range.0 < b_range.1 && beta_range.0 < beta_range.1) {
        return Err(Error::InvalidParameter {
            name: "range",
            reason: "ranges must be increasing".into(),
        });
    }
    let b_grid = linspace(b_range.0, b_range.1, nb);
    let beta_grid = linspace(beta_range.0, beta_range.1, nbeta);
    for &beta in &beta_grid {
        for b in [b_range.0, b_range.1] {
            p.with(Param::Beta, beta).with_b(b).validate()?;
        }
    }
    let samples = (4 * nb).max(64);
    let rows: Vec<(Vec<RegionLabel>, Vec<Vec<f64>>)> = beta_grid
        .par_iter()
        .map(|&beta| -> Result<(Vec<RegionLabel>, Vec<Vec<f64>>)> {
            let q = p.with(Param::Beta, beta);
            let fold = last_fold(&q, b_range.0, b_range.1, samples);
            let labels = b_grid
                .iter()
                .map(|&b| classify_cell(&q.with_b(b), fold))
                .collect::<Result<Vec<_>>>()?;
            let curves = CURVES
                .iter()
                .map(|&(_, kind, key)| {
                    scalar::all_roots(
                        |b| critical_indicator(&q, Param::B, kind, key, b),
                        b_range.0,
                        b_range.1,
                        samples,
                        1e-10,
                        kind.name(),
                    )
                    .map(|(r, _)| r)
                    .unwrap_or_default()
                })
                .collect();
            Ok((labels, curves))
        })
        .collect::<Result<_>>()?;
    let mut labels = Vec::with_capacity(nbeta);
    let mut boundary_curves: Vec<BoundaryCurve> = CURVES
        .iter()
        .map(|(name, _, _)| BoundaryCurve {
            name: name.to_string(),
            points: Vec::new(),
        })
        .collect();
    for ((row, curves), &beta) in rows.into_iter().zip(&beta_grid) {
        labels.push(row);
        for (k, roots) in curves.into_iter().enumerate() {
            boundary_curves[k].points.extend(roots.into_iter().map(|b| (b, beta)));
        }
    }
    Ok(RegionMap2D {
        b_grid,
        beta_grid,
        labels,
        boundary_curves,
    })
}

const CURVES: [(&str, CriticalKind, BranchKey); 4] = [
    ("R0_eq_1", CriticalKind::Transcritical, BranchKey::EK),
    ("ystar_eq_ye", CriticalKind::WindowEdge, BranchKey::ESTAR),
    ("discriminant_zero", CriticalKind::Fold, BranchKey::EK),
    ("hopf_estar", CriticalKind::Hopf, BranchKey::ESTAR),
];
