//! Executes a scenario and turns its results into named artifacts.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use virodyn::bifurcation::{equilibrium_at, locate_critical, region_map, sweep_branches, BranchKey, CriticalKind};
use virodyn::dynamics::{
    continue_from_hopf, find_limit_cycle, integrate, largest_lyapunov_exponent, ContinuationOptions, CycleOptions,
    LyapunovOptions, Sampling, Tolerances,
};
use virodyn::equilibria::equilibria;
use virodyn::export::{self, Table};

use crate::config::{Analysis, ScenarioConfig};

/// One output: a table when the result is tabular, and its structured form.
pub struct Artifact {
    pub stem: String,
    pub table: Option<Table>,
    pub value: Value,
}

impl Artifact {
    fn table(stem: impl Into<String>, table: Table, value: impl Serialize) -> Result<Self> {
        Ok(Artifact {
            stem: stem.into(),
            table: Some(table),
            value: serde_json::to_value(value)?,
        })
    }

    fn summary(stem: impl Into<String>, value: Value) -> Self {
        Artifact {
            stem: stem.into(),
            table: None,
            value,
        }
    }
}

/// Runs `cfg`, handing each artifact to `emit` as soon as it exists so a
/// later failure leaves the earlier ones on disk.
pub fn execute(cfg: &ScenarioConfig, tol: Tolerances, emit: &mut dyn FnMut(Artifact) -> Result<()>) -> Result<()> {
    let p = &cfg.params;
    match &cfg.analysis {
        Analysis::Sweep { param, grid } | Analysis::CriticalPoints { param, grid } => {
            let d = sweep_branches(p, *param, grid).context("sweep failed")?;
            for w in &d.warnings {
                log::warn!("{w}");
            }
            if matches!(cfg.analysis, Analysis::Sweep { .. }) {
                emit(Artifact::table("branches", export::diagram_table(&d), &d.branches)?)?;
                emit(Artifact::table("domain", export::domain_curve_table(&d), &d.domain_curves)?)?;
            }
            emit(Artifact::table("critical", export::critical_table(&d), &d.critical_points)?)?;
            emit(Artifact::summary("warnings", json!(d.warnings)))?;
        }
        Analysis::RegionMap {
            b_range,
            beta_range,
            resolution,
        } => {
            let m = region_map(p, *b_range, *beta_range, *resolution).context("region map failed")?;
            emit(Artifact::table("regions", export::region_table(&m), &m)?)?;
            emit(Artifact::table("boundaries", export::boundary_table(&m), &m.boundary_curves)?)?;
        }
        Analysis::Equilibria => {
            let set = equilibria(p)?;
            emit(Artifact::table("equilibria", export::equilibria_table(&set), &set)?)?;
        }
        Analysis::Integrate { inits, t_end, dt, lyapunov } => {
            emit_equilibria(p, emit)?;
            for (i, init) in inits.iter().enumerate() {
                let o = integrate(p, *init, (0.0, *t_end), tol, Sampling::Every(*dt))?;
                o.check().with_context(|| format!("orbit {} failed", i + 1))?;
                emit(Artifact::table(format!("orbit_{}", i + 1), export::orbit_table(&o), &o)?)?;
            }
            if let (Some(h), Some(init)) = (lyapunov, inits.first()) {
                let opts = LyapunovOptions { tol, ..Default::default() };
                let est = largest_lyapunov_exponent(p, *init, *h, &opts)?;
                emit(Artifact::summary("lyapunov", serde_json::to_value(&est)?))?;
            }
        }
        Analysis::Cycle { inits, t_end, dt } => {
            emit_equilibria(p, emit)?;
            let mut orbits = Vec::new();
            for (i, init) in inits.iter().enumerate() {
                let o = integrate(p, *init, (0.0, *t_end), tol, Sampling::Every(*dt))?;
                o.check().with_context(|| format!("orbit {} failed", i + 1))?;
                emit(Artifact::table(format!("orbit_{}", i + 1), export::orbit_table(&o), &o)?)?;
                orbits.push(o);
            }
            let opts = CycleOptions { tol, ..Default::default() };
            let c = find_limit_cycle(p, &orbits[0], &opts).context("cycle search failed")?;
            emit(Artifact::table("cycle", export::cycle_table(&c), &c.samples)?)?;
            emit(Artifact::summary(
                "cycle_summary",
                json!({
                    "period": c.period,
                    "anchor": c.anchor,
                    "refined": c.refined,
                    "residual": c.residual,
                    "stability": c.stability,
                    "floquet": c.floquet.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    "min": c.min,
                    "max": c.max,
                }),
            ))?;
        }
        Analysis::CycleBranch {
            param,
            branch,
            hopf_bracket,
            range,
            max_period,
            max_points,
            ds_max,
        } => {
            let key = BranchKey::interior(*branch);
            let hopf = locate_critical(p, *param, CriticalKind::Hopf, key, *hopf_bracket).context("Hopf point not found")?;
            let q = p.with(*param, hopf.value);
            let eq = equilibrium_at(&q, key).with_context(|| format!("{} missing at the Hopf point", key.label()))?;
            let mut opts = ContinuationOptions {
                range: *range,
                max_period: *max_period,
                max_points: *max_points,
                ds_max: *ds_max,
                ..Default::default()
            };
            opts.cycle.tol = tol;
            let hb = continue_from_hopf(&q, eq, *param, &opts).context("cycle continuation failed")?;
            if hb.branch.folds.is_empty() {
                log::info!("no limit point of cycles on the branch (end: {:?})", hb.branch.end);
            }
            emit(Artifact::table("cycle_branch", export::cycle_branch_table(&hb.branch), &hb.branch)?)?;
            emit(Artifact::summary(
                "hopf",
                json!({
                    "value": hopf.value,
                    "omega": hb.normal_form.omega,
                    "first_lyapunov_coefficient": hb.normal_form.l1,
                    "equilibrium": eq,
                    "branch_end": hb.branch.end,
                    "limit_points": hb.branch.folds.iter().map(|f| f.value).collect::<Vec<_>>(),
                }),
            ))?;
        }
    }
    Ok(())
}

fn emit_equilibria(p: &virodyn::ModelParams, emit: &mut dyn FnMut(Artifact) -> Result<()>) -> Result<()> {
    let set = equilibria(p)?;
    emit(Artifact::table("equilibria", export::equilibria_table(&set), &set)?)
}
