//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits 0 after reporting, so known reds stay visible without breaking the
//! workspace test run; set `VIRODYN_ACCEPTANCE_STRICT=1` to exit 1 on any FAIL.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use virodyn::bifurcation::{equilibrium_at, linspace, locate_critical, sweep_branches, BranchKey, CriticalKind};
use virodyn::dynamics::*;
use virodyn::equilibria::{critical_burst, equilibria, fold_parameters, immune_window, virus_equilibrium, FoldScan};
use virodyn::stability::{classify, classify_state, locate_bh, phi_polynomial, routh_hurwitz4, shifted_phi, virus_hopf_burst, HopfTest};
use virodyn::{jacobian, EquilibriumTag, InteriorBranch, ModelParams, Param, State};
use virodyn_cli::presets::PRESETS;

#[derive(Default)]
struct Criterion {
    failures: Vec<String>,
}

impl Criterion {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn near(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, || format!("{name} = {got} not within {tol:e} of {want}"));
    }
}

fn virus_3d(b: f64) -> ModelParams {
    ModelParams::virus_only(0.36, 0.11, 0.44, b)
}

/// Every wanted eigenvalue has a computed one within `tol`; `(re, im)` pairs
/// with `im > 0` stand for the conjugate pair.
fn spectrum_matches(got: &[Complex64], want: &[(f64, f64)], tol: f64) -> bool {
    let mut all = Vec::new();
    for &(re, im) in want {
        all.push(Complex64::new(re, im));
        if im != 0.0 {
            all.push(Complex64::new(re, -im));
        }
    }
    all.len() == got.len() && all.iter().all(|w| got.iter().any(|z| (z - w).norm() <= tol))
}

fn state_near(got: &State, want: [f64; 4], tol: f64) -> bool {
    got.as_array().iter().zip(want).all(|(g, w)| (g - w).abs() <= tol)
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::default();
    let p = virus_3d(28.0);
    c.check(critical_burst(&p) == 5.0, || format!("b0 = {}", critical_burst(&p)));
    match locate_bh(&p, (20.0, 35.0), HopfTest::VirusBlock) {
        Ok(h) => c.near("b_H from H(b)", h.b, 27.7664, 1e-3),
        Err(e) => c.check(false, || format!("H(b) root: {e}")),
    }
    match virus_hopf_burst(&p) {
        Ok(Some(b)) => c.near("b_H from Phi", b, 27.7664, 1e-3),
        other => c.check(false, || format!("Phi root: {other:?}")),
    }
    let e = virus_equilibrium(&p);
    c.check(state_near(&e, [0.148148, 0.0431317, 2.64672, 0.0], 1e-4), || format!("E* = {e:?}"));
    let r = classify_state(&p, &e).unwrap();
    let block: Vec<Complex64> = r.eigenvalues.iter().copied().filter(|z| (z.re - (p.beta_z * e.y - p.c)).abs() > 1e-9 || z.im != 0.0).collect();
    c.check(spectrum_matches(&block, &[(-1.51022, 0.0), (0.000296187, 0.298909)], 1e-4), || format!("E* spectrum {:?}", r.eigenvalues));
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut pattern = 0;
    let mut root_count = 0;
    let mut first_bad = None;
    for _ in 0..100_000 {
        // (0, 5]
        let mut draw = || 5.0 * (1.0 - rng.gen::<f64>());
        let (l, be, d) = (draw(), draw(), draw());
        let p = ModelParams::virus_only(l, be, d, 2.0);
        let s = shifted_phi(&p);
        if s.coeff(3) > 0.0 && s.coeff(2) < 0.0 {
            pattern += 1;
            first_bad.get_or_insert((l, be, d));
        }
        let b0 = p.critical_burst();
        let above = phi_polynomial(&p)
            .real_root_values(Some((b0, f64::INFINITY)))
            .map(|r| r.into_iter().filter(|&b| b > b0).count())
            .unwrap_or(0);
        if above != 1 {
            root_count += 1;
            first_bad.get_or_insert((l, be, d));
        }
    }
    c.check(pattern == 0, || format!("{pattern} draws with B3 > 0 and B2 < 0"));
    c.check(root_count == 0, || format!("{root_count} draws without exactly one root above b0, first {first_bad:?}"));
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::default();
    let p = linear(5.0);
    c.check(p.immune_threshold() == 0.06, || format!("y_e = {}", p.immune_threshold()));
    c.near("b0", critical_burst(&p), 2.81818, 1e-5);
    let (b1, b2) = immune_window(&p).unwrap();
    c.near("b1", b1, 3.58676, 1e-4);
    c.near("b2", b2, 8.66779, 1e-4);
    let d = sweep_branches(&p, Param::B, &linspace(1.5, 25.0, 400)).unwrap();
    let edges: Vec<f64> = d.critical(CriticalKind::WindowEdge).map(|x| x.value).collect();
    for b in [b1, b2] {
        c.check(edges.iter().any(|&e| (e - b).abs() <= 1e-6), || format!("crossing y* = y_e near {b} not found in {edges:?}"));
    }
    let folds = fold_parameters(&p, FoldScan::default()).unwrap().roots;
    c.check(folds.len() == 1, || format!("folds {folds:?}"));
    c.near("b2*", folds[0], 10.2462, 1e-3);
    let hopf: Vec<f64> = d.critical(CriticalKind::Hopf).map(|x| x.value).collect();
    c.check(hopf.len() == 1, || format!("Hopf values {hopf:?}"));
    c.near("b_H", hopf[0], 19.01210747136, 1e-6);

    let q = linear(9.5);
    let set = equilibria(&q).unwrap();
    let star = classify(&q, set.find(EquilibriumTag::Estar).unwrap()).unwrap();
    let im = classify(&q, set.interior(InteriorBranch::EIm).unwrap()).unwrap();
    c.check(star.is_stable() && im.is_stable(), || "E* and E_im not both stable at b = 9.5".into());
    c.check(
        spectrum_matches(&star.eigenvalues, &[(-1.25014, 0.0), (-0.0251954, 0.21128), (-0.0022767, 0.0)], 1e-4),
        || format!("E* spectrum {:?}", star.eigenvalues),
    );
    c.check(
        spectrum_matches(&im.eigenvalues, &[(-1.69595, 0.0), (-0.0714416, 0.218669), (-0.00574855, 0.0)], 1e-4),
        || format!("E_im spectrum {:?}", im.eigenvalues),
    );

    let r = linear(23.0);
    let o = integrate(&r, State::new(0.25, 0.05, 1.0, 0.5), (0.0, 3000.0), Tolerances::default(), Sampling::Steps).unwrap();
    match find_limit_cycle(&r, &o, &CycleOptions::default()) {
        Ok(cy) => {
            c.check(cy.refined, || "b = 23 cycle unrefined".into());
            c.near("period at b = 23", cy.period, 32.613, 0.05);
        }
        Err(e) => c.check(false, || format!("b = 23 cycle: {e}")),
    }
    c
}

type Quoted = (InteriorBranch, [f64; 4], &'static [(f64, f64)]);

fn criterion_4() -> Criterion {
    let mut c = Criterion::default();
    use InteriorBranch::*;
    let tables: [(f64, Vec<Quoted>); 4] = [
        (27.0, vec![(EPlus, [0.746349, 0.198681, 0.001264, 0.198681], &[(-33.4248, 0.0), (-0.6914, 0.0), (-0.1001, 0.1725)])]),
        (
            29.5,
            vec![
                (EPlus, [0.713936, 0.217452, 0.001577, 0.217452], &[(-32.0654, 0.0), (-0.6453, 0.0), (-0.1098, 0.1890)]),
                (EIm, [0.018264, 0.121499, 0.019776, 0.121499], &[(-1.9185, 0.0), (0.1893, 0.0), (0.0221, 0.0654)]),
                (EMinus, [0.011907, 0.099053, 0.020438, 0.099053], &[(-1.5443, 0.0), (0.1167, 0.1115), (-0.0238, 0.0)]),
            ],
        ),
        (
            42.0,
            vec![
                (EPlus, [0.494238, 0.308421, 0.004537, 0.308421], &[(-22.81, 0.0), (-0.1575, 0.2758), (-0.3016, 0.0)]),
                (EIm, [0.145387, 0.284118, 0.0131148, 0.284118], &[(-7.8605, 0.0), (-0.1167, 0.2540), (0.2641, 0.0)]),
                (EMinus, [0.002285, 0.042969, 0.021948, 0.042969], &[(-0.8425, 0.0), (0.0687, 0.1676), (-0.0333, 0.0)]),
            ],
        ),
        (50.0, vec![(EMinus, [0.001469, 0.033937, 0.022175, 0.033937], &[(-0.7580, 0.0), (0.0557, 0.1632), (-0.0284, 0.0)])]),
    ];
    for (b, rows) in &tables {
        let p = quadratic(*b);
        let set = equilibria(&p).unwrap();
        let count = set.feasible().filter(|e| e.tag == EquilibriumTag::Interior).count();
        c.check(count == rows.len(), || format!("b = {b}: {count} interior equilibria, quoted {}", rows.len()));
        for (branch, coords, spectrum) in rows {
            let Some(e) = set.interior(*branch) else {
                c.check(false, || format!("b = {b}: {branch} missing"));
                continue;
            };
            c.check(state_near(&e.point, *coords, 1e-3), || format!("b = {b}: {branch} = {:?}", e.point));
            let r = classify(&p, e).unwrap();
            c.check(spectrum_matches(&r.eigenvalues, spectrum, 1e-2), || format!("b = {b}: {branch} spectrum {:?}", r.eigenvalues));
        }
    }

    let folds = fold_parameters(&quadratic(30.0), FoldScan::default()).unwrap().roots;
    c.check(folds.len() == 2, || format!("folds {folds:?}"));
    if folds.len() == 2 {
        c.near("first fold", folds[0], 29.361, 1e-2);
        c.near("second fold", folds[1], 45.9232, 1e-2);
    }

    let key = BranchKey::interior(EIm);
    let p = quadratic(29.9);
    match locate_critical(&p, Param::B, CriticalKind::Hopf, key, (29.5, 30.5)) {
        Ok(h) => {
            let bh = h.value;
            c.near("Hopf on E_im", bh, 29.903443, 1e-3);
            let ph = p.with_b(bh);
            let eq = equilibrium_at(&ph, key).unwrap();
            let opts = ContinuationOptions {
                range: (29.0, 45.0),
                max_period: 300.0,
                max_points: 1500,
                ds_max: 0.5,
                ..ContinuationOptions::default()
            };
            match continue_from_hopf(&ph, eq, Param::B, &opts) {
                Ok(hb) => {
                    let l1 = hb.normal_form.l1;
                    c.check(l1 > 0.0, || format!("l1 = {l1} not positive"));
                    c.check((l1 - 0.818234).abs() <= 0.2 * 0.818234, || format!("l1 = {l1} not within 20% of 0.818234"));
                    let folds: Vec<f64> = hb.branch.folds.iter().map(|f| f.value).collect();
                    c.check(folds.iter().any(|&f| (f - 30.854713).abs() <= 0.05), || {
                        format!("no cycle fold near 30.854713 (folds {folds:?}, branch end {:?})", hb.branch.end)
                    });
                    c.check(folds.iter().any(|&f| f >= bh && f <= bh + 1e-2), || {
                        format!("no cycle fold in [{bh}, {}] (folds {folds:?})", bh + 1e-2)
                    });
                }
                Err(e) => c.check(false, || format!("cycle branch: {e}")),
            }
        }
        Err(e) => c.check(false, || format!("Hopf on E_im: {e}")),
    }

    let p = quadratic(42.0);
    let tol = Tolerances::default();
    let to_eq = integrate(&p, State::new(0.05, 0.05, 0.0043, 0.1954), (0.0, 3000.0), tol, Sampling::Steps).unwrap();
    c.check(state_near(&to_eq.last(), [0.494238, 0.308421, 0.004537, 0.308421], 1e-3), || {
        format!("b = 42 second start ends at {:?}", to_eq.last())
    });
    let to_cycle = integrate(&p, State::new(0.9, 0.01, 0.01, 0.01), (0.0, 3000.0), tol, Sampling::Steps).unwrap();
    match find_limit_cycle(&p, &to_cycle, &CycleOptions::default()) {
        Ok(cy) => c.check(cy.refined && cy.stability == CycleStability::Stable, || format!("b = 42 cycle {:?}", cy.stability)),
        Err(e) => c.check(false, || format!("b = 42 first start: {e}")),
    }
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::default();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut escaped = 0;
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let s = invariant_start(&mut rng, &p);
        match integrate(&p, s, (0.0, 200.0), Tolerances::default(), Sampling::Steps) {
            Ok(o) if o.is_complete() && o.stats.domain_violations == 0 => {}
            _ => escaped += 1,
        }
    }
    c.check(escaped == 0, || format!("{escaped} of 100 orbits left the invariant region or aborted"));

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..256 {
        let p = random_params(&mut rng);
        let s = invariant_start(&mut rng, &p);
        let j = jacobian(&p, &s).unwrap();
        let fd = fd_jacobian(&p, &s, 1e-5 * s.max_abs().max(1.0));
        worst = worst.max((j - fd).amax() / j.amax().max(1.0));
    }
    c.check(worst <= 1e-6, || format!("Jacobian vs finite differences: {worst:e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut checked, mut disagree) = (0, 0);
    while checked < 1000 {
        let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..4.0));
        let lead = companion_roots(a).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if lead.abs() < 1e-9 {
            continue;
        }
        checked += 1;
        if routh_hurwitz4(a[0], a[1], a[2], a[3]).stable != (lead < 0.0) {
            disagree += 1;
        }
    }
    c.check(disagree == 0, || format!("Routh-Hurwitz disagrees on {disagree} of 1000"));

    let cases = [
        (virus_3d(28.0), State::new(0.9, 0.01, 0.5, 0.0), 20000.0),
        (linear(23.0), State::new(0.25, 0.05, 1.0, 0.5), 3000.0),
        (quadratic(42.0), State::new(0.9, 0.01, 0.01, 0.01), 3000.0),
    ];
    for (p, s, t) in cases {
        let o = integrate(&p, s, (0.0, t), Tolerances::default(), Sampling::Steps).unwrap();
        match find_limit_cycle(&p, &o, &CycleOptions::default()) {
            Ok(cy) if cy.refined => {
                let m = cy.trivial_multiplier();
                c.check((m - 1.0).norm() <= 1e-4, || format!("trivial multiplier {m} at b = {}", p.b));
            }
            Ok(_) => c.check(false, || format!("cycle at b = {} unrefined", p.b)),
            Err(e) => c.check(false, || format!("cycle at b = {}: {e}", p.b)),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut missing = 0;
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let ours: Vec<State> = equilibria(&p).unwrap().feasible().map(|e| e.point).collect();
        for s in grid_newton_equilibria(&p, 5) {
            let tol = 1e-6 * s.max_abs().max(1.0);
            if !ours.iter().any(|q| q.distance(&s) <= tol) {
                missing += 1;
            }
        }
    }
    c.check(missing == 0, || format!("{missing} oracle equilibria missing"));
    c
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::default();
    let root = std::env::temp_dir().join(format!("virodyn-acceptance-{}", std::process::id()));
    let runs = [root.join("a"), root.join("b")];
    for p in PRESETS {
        for dir in &runs {
            let out = Command::new(env!("CARGO_BIN_EXE_virodyn"))
                .args(["run", p.name, "--out", dir.to_str().unwrap()])
                .env_remove("VIRO_OUT_DIR")
                .output()
                .unwrap();
            c.check(out.status.success(), || format!("{} failed: {}", p.name, String::from_utf8_lossy(&out.stderr).trim()));
        }
        let (a, b) = (runs[0].join(p.name), runs[1].join(p.name));
        if a.is_dir() && b.is_dir() {
            let (fa, fb) = (data_files(&a), data_files(&b));
            c.check(!fa.is_empty() && fa == fb, || format!("{} differs between runs", p.name));
        }
    }
    let _ = fs::remove_dir_all(&root);
    c
}

fn main() {
    let criteria: [(u32, fn() -> Criterion, Option<Duration>); 6] = [
        (1, criterion_1, Some(Duration::from_secs(1))),
        (2, criterion_2, Some(Duration::from_secs(30))),
        (3, criterion_3, None),
        (4, criterion_4, None),
        (5, criterion_5, Some(Duration::from_secs(120))),
        (6, criterion_6, None),
    ];
    let mut failed = 0;
    for (n, run, budget) in criteria {
        let start = Instant::now();
        let mut c = run();
        let took = start.elapsed();
        if let Some(b) = budget {
            c.check(took <= b, || format!("took {took:.2?}, budget {b:?}"));
        }
        let verdict = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {n}: {verdict} ({took:.2?})");
        for f in &c.failures {
            println!("    {f}");
        }
        failed += !c.failures.is_empty() as usize;
    }
    if failed > 0 && std::env::var_os("VIRODYN_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
