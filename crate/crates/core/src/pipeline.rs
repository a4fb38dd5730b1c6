//! Runs the tasks of a scenario in dependency order and collects a report.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;

use crate::complex::{self, ExactMatrix, Field};
use crate::flow::{self, Census, Flow, PointId, TrajectoryConfig};
use crate::groupoid::{inventory, ActionGroupoid};
use crate::morse::{self, CriticalOrbit, SearchConfig};
use crate::report::*;
use crate::sampling::{random_orthogonal, rng};
use crate::scenario::{Prepared, Scenario, ScenarioError, Task};
use crate::symmetry::Symmetry;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
    /// Adds wall-clock timings (breaks byte-identical output).
    pub timing: bool,
    /// Overrides the scenario task list.
    pub tasks: Option<Vec<Task>>,
}

struct Ctx<'a> {
    p: &'a Prepared,
    seed: u64,
    search: SearchConfig,
    traj: TrajectoryConfig,
    report: Report,
    timing: BTreeMap<String, u128>,
}

/// Flow census for one adjacent pair, kept for the complex stage.
struct PairData {
    hi: usize,
    lo: usize,
    census: Census,
}

impl Ctx<'_> {
    fn check(&mut self, name: &str, measured: Option<f64>, threshold: Option<f64>, pass: bool, detail: impl Into<String>) {
        self.report.checks.push(Check {
            name: name.into(),
            measured,
            threshold,
            pass,
            detail: detail.into(),
        });
    }

    fn fail(&mut self, name: &str, detail: impl ToString) {
        self.check(name, None, None, false, detail.to_string());
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.report.diagnostics.push(msg.into());
    }

    fn gpd(&self) -> &ActionGroupoid {
        &self.p.groupoid
    }

    fn timed<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let t = Instant::now();
        let out = f(self);
        self.timing.insert(name.into(), t.elapsed().as_millis());
        out
    }
}

fn search_config(s: &Scenario, seed: u64) -> SearchConfig {
    let mut c = SearchConfig {
        seed,
        ..SearchConfig::default()
    };
    if let Some(t) = s.tolerances.critical_tol {
        c.newton_tol = t;
    }
    if let Some(t) = s.tolerances.nondeg_tol {
        c.nondeg_tol = t;
    }
    if let Some(n) = s.tolerances.n_starts {
        c.n_starts = n;
    }
    c
}

fn trajectory_config(s: &Scenario) -> TrajectoryConfig {
    let mut c = TrajectoryConfig::default();
    let t = &s.tolerances;
    if let Some(v) = t.flow_step {
        c.h = v;
    }
    if let Some(v) = t.max_time {
        c.max_time = v;
    }
    if let Some(v) = t.capture_radius {
        c.capture_radius = v;
    }
    if let Some(v) = t.critical_tol {
        c.critical_tol = v;
    }
    c
}

fn echo(s: &Scenario, gpd: &ActionGroupoid, tasks: &[Task], seed: u64) -> ScenarioEcho {
    ScenarioEcho {
        name: s.name.clone(),
        ambient_dim: s.ambient_dim,
        manifold_dim: s.manifold_dim(),
        constraints: s.constraints.clone(),
        function: s.function.clone(),
        symmetry: s.symmetry_label(),
        group_order: match gpd.symmetry() {
            Symmetry::Finite(k) => Some(k.order()),
            Symmetry::Torus(_) => None,
        },
        torus_rank: match gpd.symmetry() {
            Symmetry::Torus(t) => Some(t.rank()),
            Symmetry::Finite(_) => None,
        },
        tasks: tasks
            .iter()
            .map(|t| serde_json::to_value(t).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .collect(),
        seed,
    }
}

fn orbit_rows(orbits: &[CriticalOrbit]) -> Vec<OrbitRow> {
    orbits
        .iter()
        .enumerate()
        .map(|(id, o)| OrbitRow {
            id,
            representative: o.representative.iter().copied().collect(),
            value: o.value,
            index: o.index,
            stacky_index: o.stacky_index,
            orbit_dim: o.orbit_dim,
            orbit_size: o.orbit_size,
            isotropy_order: o.isotropy.order(),
            isotropy_dim: o.isotropy.dim(),
            normal_spectrum: o.spectrum.clone(),
            nondegenerate: o.nondegenerate,
            orientable: o.orientable,
            gradient_norm: o.gradient_norm,
        })
        .collect()
}

/// Loads, validates and runs a scenario file.
pub fn run_path(path: &std::path::Path, opts: &RunOptions) -> Result<Report, ScenarioError> {
    let s = Scenario::load(path)?;
    run_scenario(&s, opts)
}

pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<Report, ScenarioError> {
    let p = s.prepare()?;
    Ok(run_prepared(&p, opts))
}

pub fn run_prepared(p: &Prepared, opts: &RunOptions) -> Report {
    let s = &p.scenario;
    let seed = opts.seed.or(s.seed).unwrap_or(0);
    let mut tasks = opts.tasks.clone().unwrap_or_else(|| s.tasks.clone());
    tasks.sort();
    tasks.dedup();
    let report = Report {
        schema: SCHEMA_VERSION.into(),
        scenario: echo(s, &p.groupoid, &tasks, seed),
        critical_orbits: None,
        morse_polynomial: None,
        flow: None,
        witten: Vec::new(),
        total_cohomology: None,
        double_complex: None,
        inequalities: Vec::new(),
        checks: Vec::new(),
        references: ReferenceEcho {
            poincare: s.references.poincare.clone(),
            betti: s.references.betti.clone(),
            provenance: s.references.provenance.clone(),
        },
        diagnostics: Vec::new(),
        timing_ms: None,
        trajectories: Vec::new(),
    };
    let mut ctx = Ctx {
        p,
        seed,
        search: search_config(s, seed),
        traj: trajectory_config(s),
        report,
        timing: BTreeMap::new(),
    };
    if tasks.is_empty() {
        return finish(ctx, opts);
    }
    let wants = |t: Task| tasks.contains(&t);
    let verify = wants(Task::Verify);
    let need_complex = wants(Task::Complex) || wants(Task::Inequalities) || verify;
    let need_flow = wants(Task::Flow) || need_complex;

    let Some(orbits) = ctx.timed("analyze", analyze) else {
        return finish(ctx, opts);
    };
    let pairs = if need_flow {
        ctx.timed("flow", |c| run_flow(c, &orbits, verify))
    } else {
        None
    };
    let mut computed_poincare = None;
    if need_complex {
        computed_poincare = ctx.timed("complex", |c| run_complex(c, &orbits, pairs.as_deref()));
    }
    if wants(Task::Inequalities) || verify {
        inequalities(&mut ctx, computed_poincare);
    }
    if verify {
        ctx.timed("verify", |c| run_verify(c, &orbits));
    }
    finish(ctx, opts)
}

fn finish(mut ctx: Ctx, opts: &RunOptions) -> Report {
    if opts.timing {
        ctx.report.timing_ms = Some(ctx.timing);
    }
    ctx.report
}

fn analyze(ctx: &mut Ctx) -> Option<Vec<CriticalOrbit>> {
    let gpd = ctx.gpd().clone();
    let f = &ctx.p.function;
    let m = gpd.manifold();
    let samples = m.sample_points(100, ctx.seed);
    let mut r = rng(ctx.seed);
    match gpd.symmetry().preflight(m, &samples, &mut r, 1e-8) {
        Ok(worst) => ctx.check("action_preserves_manifold", Some(worst), Some(1e-8), true, ""),
        Err(e) => {
            ctx.fail("action_preserves_manifold", e);
            return None;
        }
    }
    match gpd.check_basic(f, 100, ctx.seed) {
        Ok(b) => {
            ctx.check("basic_function", Some(b.max_deviation), Some(crate::groupoid::BASIC_TOL), b.pass, "");
            if !b.pass {
                ctx.note("function is not constant along orbits; critical search skipped");
                return None;
            }
        }
        Err(e) => {
            ctx.fail("basic_function", e);
            return None;
        }
    }
    let orbits = match morse::find_critical_orbits(&gpd, f, &ctx.search) {
        Ok(o) => o,
        Err(e) => {
            ctx.fail("critical_search", e);
            return None;
        }
    };
    ctx.report.critical_orbits = Some(orbit_rows(&orbits));
    for (i, o) in orbits.iter().enumerate() {
        if !o.nondegenerate {
            ctx.note(format!("orbit {i} is degenerate and is excluded from polynomial and complex stages"));
        }
    }
    let dim = ctx.p.scenario.manifold_dim();
    match morse::morse_polynomial(gpd.symmetry(), &orbits, dim + 1) {
        Ok(m) => ctx.report.morse_polynomial = Some(m),
        Err(e) => ctx.note(format!("morse polynomial not computed: {e}")),
    }
    Some(orbits)
}

fn adjacent_pairs(orbits: &[CriticalOrbit]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (hi, a) in orbits.iter().enumerate() {
        for (lo, b) in orbits.iter().enumerate() {
            if a.nondegenerate && b.nondegenerate && a.index == b.index + 1 {
                out.push((hi, lo));
            }
        }
    }
    out
}

fn census_pairs(flow: &Flow, orbits: &[CriticalOrbit]) -> Result<Vec<PairData>, flow::FlowError> {
    adjacent_pairs(orbits)
        .into_iter()
        .map(|(hi, lo)| {
            let census = flow::enumerate_flow_lines(flow, orbits, hi, lo, true)?;
            Ok(PairData { hi, lo, census })
        })
        .collect()
}

fn run_flow(ctx: &mut Ctx, orbits: &[CriticalOrbit], verify: bool) -> Option<Vec<PairData>> {
    let gpd = ctx.gpd().clone();
    let f = ctx.p.function.clone();
    let flow = Flow::new(&gpd, &f, orbits, ctx.traj.clone());
    let Symmetry::Finite(group) = gpd.symmetry() else {
        ctx.note("flow-line enumeration needs a finite symmetry group; skipped");
        return None;
    };
    if orbits.iter().any(|o| o.orbit_dim > 0) {
        ctx.note("flow-line enumeration needs isolated critical orbits; skipped");
        return None;
    }
    let pairs = match census_pairs(&flow, orbits) {
        Ok(p) => p,
        Err(e) => {
            ctx.fail("flow_census", e);
            return None;
        }
    };
    let mut rows = Vec::new();
    for pd in &pairs {
        let c = &pd.census;
        let all = flow::saturate_lines(group, orbits, &c.lines, 10.0 * ctx.traj.shoot_radius);
        let classes = flow::moduli_quotient(group, &all, 10.0 * ctx.traj.shoot_radius);
        let signs: Vec<i8> = c.lines.iter().filter_map(|l| l.sign).collect();
        let signed = (orbits[pd.hi].orientable && orbits[pd.lo].orientable).then(|| signs.iter().map(|s| *s as i64).sum());
        if c.elsewhere > 0 {
            ctx.note(format!(
                "{} seeds from the pair ({}, {}) ended at other critical points",
                c.elsewhere, pd.hi, pd.lo
            ));
        }
        for (k, l) in c.lines.iter().enumerate() {
            ctx.report.trajectories.push(TrajectoryRecord {
                upper: pd.hi,
                lower: pd.lo,
                line: k,
                points: l.points.iter().map(|p| p.iter().copied().collect()).collect(),
            });
        }
        rows.push(FlowPair {
            upper: pd.hi,
            lower: pd.lo,
            lines: c.lines.len(),
            signs,
            signed_count: signed,
            mod2_count: (c.lines.len() % 2) as i64,
            classes: classes.len(),
            class_sizes: classes.iter().map(|c| c.len()).collect(),
            unresolved: c.unresolved,
            elsewhere: c.elsewhere,
            flagged: c.lines.iter().filter(|l| l.flagged).count(),
        });
    }
    let flagged: usize = rows.iter().map(|r| r.flagged).sum();
    ctx.check("flow_signs_resolved", Some(flagged as f64), Some(0.0), flagged == 0, "");
    let lagrange = rows
        .iter()
        .all(|r| r.class_sizes.iter().all(|s| group.order() % s == 0));
    ctx.check("moduli_class_sizes_divide_order", None, None, lagrange, "");
    ctx.report.flow = Some(FlowCensus {
        step: ctx.traj.h,
        pairs: rows,
    });
    if verify {
        let halved = Flow::new(&gpd, &f, orbits, ctx.traj.halved());
        match census_pairs(&halved, orbits) {
            Ok(fine) => {
                let key = |p: &PairData| {
                    let mut v: Vec<(PointId, Option<i8>)> = p.census.lines.iter().map(|l| (l.omega, l.sign)).collect();
                    v.sort();
                    v
                };
                let changed = pairs.iter().zip(&fine).filter(|(a, b)| key(a) != key(b)).count();
                ctx.check("step_refinement_stability", Some(changed as f64), Some(0.0), changed == 0, "");
            }
            Err(e) => ctx.fail("step_refinement_stability", e),
        }
    }
    Some(pairs)
}

fn run_complex(ctx: &mut Ctx, orbits: &[CriticalOrbit], pairs: Option<&[PairData]>) -> Option<Vec<i64>> {
    let gpd = ctx.gpd().clone();
    let dim = ctx.p.scenario.manifold_dim();
    let Symmetry::Finite(group) = gpd.symmetry() else {
        ctx.note("complex stage needs a finite symmetry group; skipped");
        return None;
    };
    let Some(pairs) = pairs else {
        ctx.note("complex stage skipped: no flow census");
        return None;
    };
    let orbit_count = |hi: usize, lo: usize, signed: bool| -> i64 {
        pairs
            .iter()
            .find(|p| p.hi == hi && p.lo == lo)
            .map_or(0, |p| {
                p.census
                    .lines
                    .iter()
                    .map(|l| if signed { l.sign.unwrap_or(0) as i64 } else { 1 })
                    .sum()
            })
    };
    let mut q_betti = None;
    for field in [Field::Z2, Field::Q] {
        let gens: Vec<(String, usize)> = orbits
            .iter()
            .enumerate()
            .filter(|(_, o)| o.nondegenerate && (field == Field::Z2 || o.orientable))
            .map(|(i, o)| (format!("o{i}"), o.index))
            .collect();
        let ids: Vec<usize> = orbits
            .iter()
            .enumerate()
            .filter(|(_, o)| o.nondegenerate && (field == Field::Z2 || o.orientable))
            .map(|(i, _)| i)
            .collect();
        let counts = |a: usize, b: usize| orbit_count(ids[a], ids[b], field == Field::Q);
        match complex::build_witten_complex(field, &gens, &counts, dim) {
            Ok(c) => {
                let betti = c.homology_ranks().unwrap_or_default();
                let chi_gen = c.euler_characteristic();
                let chi_betti: i64 = betti
                    .iter()
                    .enumerate()
                    .map(|(k, b)| if k % 2 == 0 { *b as i64 } else { -(*b as i64) })
                    .sum();
                let name = if field == Field::Q { "Q" } else { "Z2" };
                ctx.check(&format!("witten_{name}_squared_zero"), None, None, true, "");
                ctx.check(&format!("witten_{name}_euler_characteristic"), Some(chi_gen as f64), None, chi_gen == chi_betti, "");
                if field == Field::Q {
                    q_betti = Some(betti.clone());
                }
                ctx.report.witten.push(WittenSummary {
                    field: name.into(),
                    dims: c.dims(),
                    betti,
                    euler_characteristic: chi_gen,
                });
            }
            Err(e) => ctx.fail("witten_complex", e),
        }
    }
    // Nerve double complex over ℚ on the critical points of orientable orbits.
    let n_max = ctx.p.scenario.n_max.unwrap_or(dim + 1);
    let mut crit: Vec<Vec<(usize, usize)>> = vec![Vec::new(); dim + 1];
    for (i, o) in orbits.iter().enumerate() {
        if o.nondegenerate && o.orientable && o.index <= dim {
            for j in 0..o.points.len() {
                crit[o.index].push((i, j));
            }
        }
    }
    let locate = |orbit: usize, p: &DVector<f64>| -> usize {
        orbits[orbit]
            .points
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - p).norm().total_cmp(&(*b - p).norm()))
            .map_or(0, |(j, _)| j)
    };
    let act: Vec<Vec<Vec<usize>>> = crit
        .iter()
        .map(|pts| {
            (0..group.order())
                .map(|g| {
                    pts.iter()
                        .map(|&(o, j)| {
                            let moved = group.act(g, &orbits[o].points[j]);
                            let k = locate(o, &moved);
                            pts.iter().position(|&x| x == (o, k)).expect("orbit closed under the group")
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut witten = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut m = ExactMatrix::zeros(crit[i + 1].len(), crit[i].len());
        for pd in pairs {
            let (ho, lo) = (pd.hi, pd.lo);
            if orbits[ho].index != i + 1 || !crit[i + 1].iter().any(|c| c.0 == ho) || !crit[i].iter().any(|c| c.0 == lo) {
                continue;
            }
            match flow::point_counts(group, orbits, ho, lo, &pd.census.lines, true) {
                Ok(counts) => {
                    for (p, row) in counts.iter().enumerate() {
                        for (q, &n) in row.iter().enumerate() {
                            let r = crit[i + 1].iter().position(|&c| c == (ho, p)).expect("listed");
                            let c = crit[i].iter().position(|&c| c == (lo, q)).expect("listed");
                            m.add_to(r, c, n);
                        }
                    }
                }
                Err(e) => {
                    ctx.fail("point_counts", e);
                    return None;
                }
            }
        }
        witten.push(m);
    }
    let simplicial = act.iter().all(|a| complex::check_simplicial_identities(group, a, n_max.min(3)));
    ctx.check("simplicial_identities", None, None, simplicial, "");
    match complex::build_nerve_double_complex(Field::Q, group, &act, &witten, n_max) {
        Ok(dc) => {
            let checks = dc.checks().expect("rational entries");
            ctx.check("double_complex_identities", None, None, checks.pass(), "");
            match dc.total_cohomology(dim) {
                Ok(t) => {
                    if group.order() == 1 {
                        let same = q_betti.as_ref() == Some(&t);
                        ctx.check("trivial_group_total_matches_witten", None, None, same, "");
                    }
                    ctx.report.total_cohomology = Some(t);
                }
                Err(e) => ctx.fail("total_cohomology", e),
            }
            ctx.report.double_complex = Some(DoubleComplexSummary {
                n_max,
                grid_dims: dc.grid_dims(),
                checks,
            });
        }
        Err(e) => ctx.fail("double_complex_identities", e),
    }
    let computed = ctx
        .report
        .total_cohomology
        .clone()
        .or(q_betti)
        .map(|b| b.into_iter().map(|x| x as i64).collect::<Vec<i64>>());
    if let (Some(reference), Some(c)) = (ctx.p.scenario.references.betti.clone(), computed.clone()) {
        let pass = pad(&reference, c.len()) == pad(&c, reference.len());
        ctx.check("betti_matches_reference", None, None, pass, format!("computed {c:?}, reference {reference:?}"));
    }
    computed
}

fn pad(v: &[i64], n: usize) -> Vec<i64> {
    let mut out = v.to_vec();
    if out.len() < n {
        out.resize(n, 0);
    }
    out
}

fn inequalities(ctx: &mut Ctx, computed: Option<Vec<i64>>) {
    let Some(m) = ctx.report.morse_polynomial.clone() else {
        ctx.note("Morse inequalities skipped: no Morse polynomial");
        return;
    };
    let mut targets = Vec::new();
    if let Some(p) = ctx.p.scenario.references.poincare.clone() {
        targets.push(("reference".to_string(), p));
    }
    if let Some(p) = computed {
        targets.push(("computed".to_string(), p));
    }
    for (against, p) in targets {
        let r = morse::check_morse_inequalities(&m, &p);
        ctx.check(&format!("morse_inequalities_{against}"), None, None, r.pass, "");
        ctx.report.inequalities.push(Inequalities {
            against,
            poincare: p,
            report: r,
        });
    }
}

fn worst<T>(items: impl IntoIterator<Item = Result<f64, T>>) -> Result<f64, T> {
    let mut w: f64 = 0.0;
    for i in items {
        w = w.max(i?);
    }
    Ok(w)
}

fn band_for(orbits: &[CriticalOrbit], given: Option<[f64; 2]>) -> Option<(f64, f64)> {
    if let Some([a, b]) = given {
        return Some((a, b));
    }
    let mut values: Vec<f64> = orbits.iter().map(|o| o.value).collect();
    values.sort_by(f64::total_cmp);
    values
        .windows(2)
        .filter(|w| w[1] - w[0] > 1e-6)
        .max_by(|a, b| (a[1] - a[0]).total_cmp(&(b[1] - b[0])))
        .map(|w| {
            let gap = w[1] - w[0];
            (w[0] + 0.2 * gap, w[1] - 0.2 * gap)
        })
}

fn run_verify(ctx: &mut Ctx, orbits: &[CriticalOrbit]) {
    let gpd = ctx.gpd().clone();
    let f = ctx.p.function.clone();
    let m = gpd.manifold();
    let crit_tol = ctx.search.newton_tol;

    match gpd.check_axioms(20, ctx.seed) {
        Ok(a) => ctx.check("groupoid_axioms", None, None, a.pass(), ""),
        Err(e) => ctx.fail("groupoid_axioms", e),
    }
    let points = m.sample_points(100, ctx.seed ^ 0x5eed);
    let tangency = worst(points.iter().map(|x| -> Result<f64, crate::geometry::GeometryError> {
        let g = m.riemannian_gradient(&f, x)?;
        let p = m.tangent_projector(x)?.matrix;
        Ok((&g - p * &g).norm())
    }));
    match tangency {
        Ok(t) => ctx.check("gradient_tangency", Some(t), Some(1e-10), t < 1e-10, ""),
        Err(e) => ctx.fail("gradient_tangency", e),
    }
    let projector = worst(points.iter().map(|x| -> Result<f64, crate::geometry::GeometryError> {
        let p = m.tangent_projector(x)?.matrix;
        let j = m.jacobian(x)?;
        let idem = (&p * &p - &p).norm() / 1e-10;
        let sym = (&p - p.transpose()).norm() / 1e-12;
        let ann = (&p * j.transpose()).norm() / 1e-8;
        Ok(idem.max(sym).max(ann))
    }));
    match projector {
        Ok(t) => ctx.check("tangent_projector", Some(t), Some(1.0), t < 1.0, "worst ratio to tolerance"),
        Err(e) => ctx.fail("tangent_projector", e),
    }

    let fd = worst(orbits.iter().map(|o| morse::hessian_fd_error(&gpd, &f, &o.representative)));
    match fd {
        Ok(e) => ctx.check("hessian_finite_difference", Some(e), Some(1e-4), e < 1e-4, ""),
        Err(e) => ctx.fail("hessian_finite_difference", e),
    }
    match worst(orbits.iter().map(|o| morse::check_hessian_normal_invariance(&gpd, o))) {
        Ok(e) => ctx.check("normal_hessian_invariance", Some(e), Some(1e-8), e < 1e-8, ""),
        Err(e) => ctx.fail("normal_hessian_invariance", e),
    }
    match worst(orbits.iter().map(|o| morse::saturation_defect(&gpd, &f, o))) {
        Ok(e) => ctx.check("critical_set_saturated", Some(e), Some(10.0 * crit_tol), e < 10.0 * crit_tol, ""),
        Err(e) => ctx.fail("critical_set_saturated", e),
    }
    match worst(orbits.iter().map(|o| morse::spectrum_orbit_deviation(&gpd, &f, o, &ctx.search))) {
        Ok(e) => ctx.check("index_constant_on_orbits", Some(e), Some(1e-6), e < 1e-6, ""),
        Err(e) => ctx.fail("index_constant_on_orbits", e),
    }
    let radii = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let mut min_slope = f64::INFINITY;
    let mut local_ok = true;
    for o in orbits.iter().filter(|o| o.nondegenerate) {
        match morse::verify_local_model(&gpd, &f, o, &radii, ctx.seed) {
            Ok(fit) => {
                local_ok &= fit.pass;
                if let Some(s) = fit.slope {
                    min_slope = min_slope.min(s);
                }
            }
            Err(e) => {
                ctx.fail("local_model_exponent", e);
                local_ok = false;
            }
        }
    }
    ctx.check(
        "local_model_exponent",
        min_slope.is_finite().then_some(min_slope),
        Some(2.7),
        local_ok,
        "",
    );

    let flow = Flow::new(&gpd, &f, orbits, ctx.traj.clone());
    match flow::check_flow_equivariance(&flow, 6, 0.5, ctx.seed) {
        Ok(e) => ctx.check("flow_equivariance", Some(e), Some(1e-6), e < 1e-6, ""),
        Err(e) => ctx.fail("flow_equivariance", e),
    }
    match band_for(orbits, ctx.p.scenario.band) {
        Some((a, b)) => match flow::check_noncritical_retraction(&flow, orbits, a, b, 10, ctx.seed) {
            Ok(r) => ctx.check(
                "noncritical_retraction",
                Some(r.worst_time),
                Some(r.time_budget),
                r.pass,
                format!("band [{a:.4}, {b:.4}], {} samples", r.samples),
            ),
            Err(e) => ctx.fail("noncritical_retraction", e),
        },
        None => ctx.note("no non-critical band available"),
    }

    if gpd.symmetry().is_finite() || orbits.iter().all(|o| o.orbit_dim == 0) {
        let base = inventory(orbits);
        let mut r = rng(ctx.seed.wrapping_add(99));
        let mut equal = true;
        for _ in 0..5 {
            let q = random_orthogonal(&mut r, m.ambient_dim());
            let other = gpd.conjugate(&q);
            let g = f.compose_linear(&q.transpose());
            match morse::find_critical_orbits(&other, &g, &ctx.search) {
                Ok(o) => equal &= inventory(&o) == base,
                Err(_) => equal = false,
            }
        }
        ctx.check("conjugation_invariance", None, None, equal, "5 random orthogonal conjugations");
    }
    if let Some(m_t) = &ctx.report.morse_polynomial {
        let at_one: i64 = m_t.iter().sum();
        let orientable = orbits.iter().filter(|o| o.orientable && o.nondegenerate).count() as i64;
        ctx.check("morse_polynomial_at_one", Some(at_one as f64), None, at_one == orientable, "");
    }
}
