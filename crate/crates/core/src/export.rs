//! Flat tables for orbits, cycles, branches and maps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bifurcation::{BifurcationDiagram, RegionMap2D};
use crate::dynamics::{Cycle, CycleBranch, CyclePoint, Orbit};
use crate::equilibria::EquilibriumSet;
use crate::stability::classify;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    /// Numbers with 17 significant digits, `NaN`/`inf` spelled out.
    fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "NaN".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

const STATE: [&str; 4] = ["x", "y", "v", "z"];

fn state_cells(s: &crate::model::State) -> Vec<Cell> {
    s.as_array().iter().map(|&v| Cell::Num(v)).collect()
}

pub fn orbit_table(o: &Orbit) -> Table {
    let mut t = Table::new(&["t", "x", "y", "v", "z"]);
    for (time, s) in o.times.iter().zip(&o.states) {
        let mut row = vec![Cell::Num(*time)];
        row.extend(state_cells(s));
        t.push(row);
    }
    t
}

/// One period of a cycle, `t` from the anchor.
pub fn cycle_table(c: &Cycle) -> Table {
    let mut t = Table::new(&["t", "x", "y", "v", "z"]);
    for (time, s) in &c.samples {
        let mut row = vec![Cell::Num(*time)];
        row.extend(state_cells(s));
        t.push(row);
    }
    t
}

/// Continuation points and located limit points of cycles, one row each.
pub fn cycle_branch_table(b: &CycleBranch) -> Table {
    let mut cols = vec!["kind", b.param.name(), "period"];
    let mm: Vec<String> = STATE.iter().flat_map(|c| [format!("{c}_min"), format!("{c}_max")]).collect();
    cols.extend(mm.iter().map(String::as_str));
    cols.extend(["stability", "max_nontrivial_multiplier"]);
    let mut t = Table::new(&cols);
    let mut row = |kind: &str, p: &CyclePoint| {
        let mut r = vec![Cell::from(kind), Cell::Num(p.value), Cell::Num(p.period)];
        let (lo, hi) = (p.min.as_array(), p.max.as_array());
        for i in 0..4 {
            r.push(Cell::Num(lo[i]));
            r.push(Cell::Num(hi[i]));
        }
        r.push(Cell::from(match p.stability {
            crate::dynamics::CycleStability::Stable => "stable",
            crate::dynamics::CycleStability::Unstable => "unstable",
        }));
        let trivial = p
            .floquet
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
            .map(|(i, _)| i);
        let m = p
            .floquet
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != trivial)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max);
        r.push(Cell::Num(m));
        t.push(r);
    };
    for p in &b.points {
        row("point", p);
    }
    for p in &b.folds {
        row("LPC", p);
    }
    t
}

/// Long format: one row per (parameter value, branch).
pub fn diagram_table(d: &BifurcationDiagram) -> Table {
    let mut t = Table::new(&[d.param.name(), "branch", "sub_tag", "x", "y", "v", "z", "stability", "leading_real_part"]);
    let mut rows: Vec<(f64, usize, Vec<Cell>)> = Vec::new();
    for (k, br) in d.branches.iter().enumerate() {
        for p in &br.points {
            let mut r = vec![
                Cell::Num(p.value),
                Cell::from(br.label.as_str()),
                Cell::from(p.equilibrium.branch.map(|b| b.to_string()).unwrap_or_default()),
            ];
            r.extend(state_cells(&p.equilibrium.point));
            r.push(Cell::from(if p.stability.attracting { "stable".to_string() } else { p.stability.classification.to_string() }));
            r.push(Cell::Num(p.stability.leading_real_part));
            rows.push((p.value, k, r));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    t.rows = rows.into_iter().map(|r| r.2).collect();
    t
}

pub fn critical_table(d: &BifurcationDiagram) -> Table {
    let mut t = Table::new(&["kind", d.param.name(), "branch", "omega"]);
    for c in &d.critical_points {
        t.push(vec![
            Cell::from(c.kind.name()),
            Cell::Num(c.value),
            Cell::from(c.branch.as_str()),
            Cell::Num(c.omega.unwrap_or(f64::NAN)),
        ]);
    }
    t
}

pub fn domain_curve_table(d: &BifurcationDiagram) -> Table {
    let mut t = Table::new(&["curve", d.param.name(), "coordinate", "value"]);
    for c in &d.domain_curves {
        for &(p, v) in &c.points {
            t.push(vec![Cell::from(c.name.as_str()), Cell::Num(p), Cell::from(c.coordinate.as_str()), Cell::Num(v)]);
        }
    }
    t
}

pub fn region_table(m: &RegionMap2D) -> Table {
    let mut t = Table::new(&["b", "beta", "label"]);
    for (j, row) in m.labels.iter().enumerate() {
        for (i, l) in row.iter().enumerate() {
            t.push(vec![Cell::Num(m.b_grid[i]), Cell::Num(m.beta_grid[j]), Cell::from(l.name())]);
        }
    }
    t
}

pub fn boundary_table(m: &RegionMap2D) -> Table {
    let mut t = Table::new(&["curve", "b", "beta"]);
    for c in &m.boundary_curves {
        for &(b, beta) in &c.points {
            t.push(vec![Cell::from(c.name.as_str()), Cell::Num(b), Cell::Num(beta)]);
        }
    }
    t
}

/// Feasible equilibria with their classification.
pub fn equilibria_table(set: &EquilibriumSet) -> Table {
    let mut t = Table::new(&["tag", "sub_tag", "x", "y", "v", "z", "residual", "stability", "leading_real_part"]);
    for e in set.feasible() {
        let mut r = vec![Cell::from(e.tag.to_string()), Cell::from(e.branch.map(|b| b.to_string()).unwrap_or_default())];
        r.extend(state_cells(&e.point));
        r.push(Cell::Num(e.residual));
        match classify(&set.params, e) {
            Ok(s) => {
                r.push(Cell::from(if s.attracting { "stable".to_string() } else { s.classification.to_string() }));
                r.push(Cell::Num(s.leading_real_part));
            }
            Err(_) => {
                r.push(Cell::from("unknown"));
                r.push(Cell::Num(f64::NAN));
            }
        }
        t.push(r);
    }
    t
}
