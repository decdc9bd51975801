//! Equilibrium branches over a swept parameter, their critical points, and
//! the two-parameter region map.

mod critical;
mod region;

pub use critical::{
    critical_indicator, equilibrium_at, leading_pair_real_part, locate_critical, quadratic_y_bound, BranchKey, CriticalKind,
    CriticalPoint, MIN_PAIR_FREQUENCY,
};
pub use region::{classify_cell, region_map, BoundaryCurve, RegionLabel, RegionMap2D};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{equilibria, Equilibrium, EquilibriumTag};
use crate::error::{Error, Result};
use crate::model::{Clearance, ModelParams, Param};
use crate::stability::{classify, StabilityReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub value: f64,
    pub equilibrium: Equilibrium,
    pub stability: StabilityReport,
}

/// A continuous family of equilibria, sorted by parameter value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub label: String,
    pub key: BranchKey,
    pub points: Vec<BranchPoint>,
}

/// A feasibility boundary drawn alongside the branches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainCurve {
    pub name: String,
    /// State component the curve is expressed in.
    pub coordinate: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub param: Param,
    pub grid: Vec<f64>,
    pub branches: Vec<Branch>,
    pub critical_points: Vec<CriticalPoint>,
    pub domain_curves: Vec<DomainCurve>,
    pub warnings: Vec<String>,
}

impl BifurcationDiagram {
    pub fn branch(&self, label: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }

    pub fn critical(&self, kind: CriticalKind) -> impl Iterator<Item = &CriticalPoint> {
        self.critical_points.iter().filter(move |c| c.kind == kind)
    }
}

fn validate_grid(p: &ModelParams, param: Param, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "empty".into(),
        });
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "values must be finite and strictly increasing".into(),
        });
    }
    for &v in grid {
        p.with(param, v).validate()?;
    }
    Ok(())
}

fn group(tag: EquilibriumTag) -> u8 {
    match tag {
        EquilibriumTag::Interior => 3,
        EquilibriumTag::Estar => 2,
        EquilibriumTag::EK => 1,
        _ => 0,
    }
}

struct Open {
    branch: Branch,
    closed: bool,
}

impl Open {
    /// Largest accepted jump: ten secant steps, with a floor for branches
    /// that do not move.
    fn threshold(&self) -> f64 {
        let pts = &self.branch.points;
        let last = &pts[pts.len() - 1].equilibrium.point;
        if pts.len() < 2 {
            return f64::INFINITY;
        }
        let step = last.distance(&pts[pts.len() - 2].equilibrium.point);
        (10.0 * step).max(1e-6 * (1.0 + last.max_abs()))
    }
}

fn link(grid: &[f64], columns: Vec<Vec<(Equilibrium, StabilityReport)>>, warnings: &mut Vec<String>) -> Vec<Branch> {
    let mut open: Vec<Open> = Vec::new();
    for (&value, column) in grid.iter().zip(columns) {
        let mut pairs = Vec::new();
        for (i, o) in open.iter().enumerate().filter(|(_, o)| !o.closed) {
            let last = &o.branch.points[o.branch.points.len() - 1].equilibrium;
            for (j, (e, _)) in column.iter().enumerate() {
                if group(e.tag) == group(last.tag) {
                    pairs.push((last.point.distance(&e.point), i, j));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used_branch = vec![false; open.len()];
        let mut used_point = vec![false; column.len()];
        let mut assign = vec![None; column.len()];
        for &(d, i, j) in &pairs {
            if used_branch[i] || used_point[j] {
                continue;
            }
            let thr = open[i].threshold();
            if d <= thr {
                used_branch[i] = true;
                used_point[j] = true;
                assign[j] = Some(i);
            } else {
                warnings.push(format!(
                    "branch {} split at {value}: jump {d:e} exceeds {thr:e}",
                    open[i].branch.label
                ));
                used_branch[i] = true;
            }
        }
        for (i, o) in open.iter_mut().enumerate() {
            if !o.closed && !assign.contains(&Some(i)) {
                o.closed = true;
            }
        }
        for (j, (e, s)) in column.into_iter().enumerate() {
            let point = BranchPoint {
                value,
                equilibrium: e,
                stability: s,
            };
            match assign[j] {
                Some(i) => open[i].branch.points.push(point),
                None => {
                    let key = BranchKey {
                        tag: point.equilibrium.tag,
                        branch: point.equilibrium.branch,
                    };
                    let base = key.label();
                    let n = open.iter().filter(|o| o.branch.key.label() == base).count();
                    let label = if n == 0 { base } else { format!("{base}#{}", n + 1) };
                    open.push(Open {
                        branch: Branch {
                            label,
                            key,
                            points: vec![point],
                        },
                        closed: false,
                    });
                }
            }
        }
    }
    open.into_iter().map(|o| o.branch).collect()
}

/// Branch labels ending or starting strictly inside `(a, b)`.
fn branches_changing(branches: &[Branch], a: f64, b: f64) -> Vec<String> {
    branches
        .iter()
        .filter(|br| br.key.tag == EquilibriumTag::Interior)
        .filter(|br| {
            let first = br.points[0].value;
            let last = br.points[br.points.len() - 1].value;
            (first > a && first <= b) || (last >= a && last < b)
        })
        .map(|br| br.label.clone())
        .collect()
}

/// Equilibria and their stability at every grid value, linked into branches,
/// with critical points refined between grid cells.
///
/// A branch whose next point lies further than the linking threshold is
/// split, with a warning.
pub fn sweep_branches(p: &ModelParams, param: Param, grid: &[f64]) -> Result<BifurcationDiagram> {
    validate_grid(p, param, grid)?;
    let columns: Vec<Vec<(Equilibrium, StabilityReport)>> = grid
        .par_iter()
        .map(|&v| -> Result<Vec<(Equilibrium, StabilityReport)>> {
            let q = p.with(param, v);
            let set = equilibria(&q)?;
            set.feasible()
                .map(|e| classify(&q, e).map(|s| (e.clone(), s)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let branches = link(grid, columns, &mut warnings);
    let mut critical_points = Vec::new();

    for kind in [CriticalKind::Transcritical, CriticalKind::WindowEdge, CriticalKind::Fold] {
        let values: Vec<f64> = grid
            .par_iter()
            .map(|&v| critical_indicator(p, param, kind, BranchKey::EK, v))
            .collect();
        for i in 0..grid.len().saturating_sub(1) {
            let (fa, fb) = (values[i], values[i + 1]);
            if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
                continue;
            }
            match locate_critical(p, param, kind, BranchKey::EK, (grid[i], grid[i + 1])) {
                Ok(mut c) => {
                    if kind == CriticalKind::Fold {
                        let names = branches_changing(&branches, grid[i], grid[i + 1]);
                        if !names.is_empty() {
                            c.branch = names.join("/");
                        }
                    }
                    critical_points.push(c);
                }
                Err(e) => warnings.push(format!("{} in [{}, {}]: {e}", kind.name(), grid[i], grid[i + 1])),
            }
        }
    }

    for br in &branches {
        for w in br.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let ra = leading_pair(&a.stability);
            let rb = leading_pair(&b.stability);
            if let (Some(ra), Some(rb)) = (ra, rb) {
                if ra.signum() != rb.signum() {
                    let key = BranchKey {
                        tag: a.equilibrium.tag,
                        branch: a.equilibrium.branch,
                    };
                    match locate_critical(p, param, CriticalKind::Hopf, key, (a.value, b.value)) {
                        Ok(mut c) => {
                            c.branch = br.label.clone();
                            critical_points.push(c);
                        }
                        Err(e) => warnings.push(format!("hopf on {} in [{}, {}]: {e}", br.label, a.value, b.value)),
                    }
                }
            }
        }
    }
    // a branch born or lost inside a cell has no grid bracket there; sample
    // the partial cell instead (E* is born at b₀, often just before a Hopf)
    for br in &branches {
        let key = br.key;
        let first = br.points[0].value;
        let last = br.points[br.points.len() - 1].value;
        let i = grid.partition_point(|&g| g < first);
        let j = grid.partition_point(|&g| g <= last);
        let mut cells = Vec::new();
        if i > 0 {
            cells.push((grid[i - 1], first));
        }
        if j < grid.len() {
            cells.push((last, grid[j]));
        }
        for (lo, hi) in cells {
            let xs: Vec<f64> = (0..=EDGE_SAMPLES).map(|k| lo + (hi - lo) * k as f64 / EDGE_SAMPLES as f64).collect();
            let fs: Vec<f64> = xs.iter().map(|&x| critical_indicator(p, param, CriticalKind::Hopf, key, x)).collect();
            for k in 0..EDGE_SAMPLES {
                if fs[k].is_finite() && fs[k + 1].is_finite() && fs[k].signum() != fs[k + 1].signum() {
                    match locate_critical(p, param, CriticalKind::Hopf, key, (xs[k], xs[k + 1])) {
                        Ok(mut c) => {
                            c.branch = br.label.clone();
                            critical_points.push(c);
                        }
                        Err(e) => warnings.push(format!("hopf on {} in [{}, {}]: {e}", br.label, xs[k], xs[k + 1])),
                    }
                }
            }
        }
    }
    critical_points.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.kind.cmp(&b.kind)));

    for br in &branches {
        for w in br.points.windows(2) {
            if w[0].stability.attracting != w[1].stability.attracting
                && !critical_points.iter().any(|c| c.value >= w[0].value && c.value <= w[1].value)
            {
                warnings.push(format!(
                    "stability of {} changes in [{}, {}] without a located critical point",
                    br.label, w[0].value, w[1].value
                ));
            }
        }
    }

    let domain_curves = domain_curves(p, param, grid);
    Ok(BifurcationDiagram {
        param,
        grid: grid.to_vec(),
        branches,
        critical_points,
        domain_curves,
        warnings,
    })
}

const EDGE_SAMPLES: usize = 16;

fn leading_pair(s: &StabilityReport) -> Option<f64> {
    s.eigenvalues
        .iter()
        .filter(|z| z.im > MIN_PAIR_FREQUENCY)
        .map(|z| z.re)
        .reduce(f64::max)
}

/// `v ≥ 0` bounds interior `x` by `K − y_e` for linear clearance; quadratic
/// clearance bounds interior `y` by `y_b`.
fn domain_curves(p: &ModelParams, param: Param, grid: &[f64]) -> Vec<DomainCurve> {
    let (name, coordinate, f): (&str, &str, fn(&ModelParams) -> f64) = match p.epsilon {
        Clearance::Linear => ("v_nonnegative", "x", |q| q.k - q.immune_threshold()),
        Clearance::Quadratic => ("y_bound", "y", quadratic_y_bound),
    };
    vec![DomainCurve {
        name: name.into(),
        coordinate: coordinate.into(),
        points: grid.iter().map(|&v| (v, f(&p.with(param, v)))).collect(),
    }]
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
