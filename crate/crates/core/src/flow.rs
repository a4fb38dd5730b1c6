//! Negative gradient flow: RK4 with reprojection, endpoint limits, flow-line
//! enumeration by unstable/stable sphere shooting, sign transport.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, Expression};
use crate::geometry::GeometryError;
use crate::groupoid::ActionGroupoid;
use crate::linalg::orthonormalize_ordered;
use crate::morse::CriticalOrbit;
use crate::sampling::rng;
use crate::symmetry::{GroupElement, Symmetry, SymmetryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("f moved against the flow by {amount:e} at t = {time}")]
    NotMonotone { time: f64, amount: f64 },
    #[error("reprojection residual {residual:e} exceeds tolerance")]
    Reprojection { residual: f64 },
    #[error("interval [{a}, {b}] contains the critical value {value}")]
    CriticalValueInBand { a: f64, b: f64, value: f64 },
    #[error("flow lines need {0}")]
    Unsupported(String),
    #[error("{unresolved} of {shots} shooting seeds were not captured")]
    Unresolved { unresolved: usize, shots: usize },
    #[error("orbit counts are not equivariant at ({hi}, {lo})")]
    InconsistentCounts { hi: usize, lo: usize },
}

#[derive(Clone, Debug)]
pub struct TrajectoryConfig {
    pub h: f64,
    pub max_time: f64,
    pub capture_radius: f64,
    pub reprojection_tol: f64,
    pub critical_tol: f64,
    pub monotone_slack: f64,
    pub shoot_radius: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            h: 1e-3,
            max_time: 200.0,
            capture_radius: 1e-3,
            reprojection_tol: 1e-10,
            critical_tol: 1e-8,
            monotone_slack: 1e-12,
            shoot_radius: 1e-3,
        }
    }
}

impl TrajectoryConfig {
    pub fn halved(&self) -> Self {
        TrajectoryConfig {
            h: self.h / 2.0,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PointId {
    pub orbit: usize,
    pub point: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    Capture,
    Level(f64),
    Time(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum End {
    Captured(PointId),
    Level,
    Time,
    Timeout,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub values: Vec<f64>,
    pub end: End,
}

impl Trajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.points.last().expect("non-empty trajectory")
    }

    pub fn captured(&self) -> Option<PointId> {
        match self.end {
            End::Captured(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowLine {
    pub seed: DVector<f64>,
    /// Descending-ordered sample of the trajectory.
    pub points: Vec<DVector<f64>>,
    pub alpha: PointId,
    pub omega: PointId,
    pub sign: Option<i8>,
    pub sign_det: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Census {
    pub lines: Vec<FlowLine>,
    pub shots: usize,
    pub unresolved: usize,
    pub elsewhere: usize,
}

struct Target {
    id: PointId,
    point: DVector<f64>,
    continuous: bool,
}

/// RK4 integrator for `∓grad f` bound to a critical inventory.
pub struct Flow<'a> {
    gpd: &'a ActionGroupoid,
    f: &'a Expression,
    cfg: TrajectoryConfig,
    targets: Vec<Target>,
}

impl<'a> Flow<'a> {
    pub fn new(gpd: &'a ActionGroupoid, f: &'a Expression, orbits: &[CriticalOrbit], cfg: TrajectoryConfig) -> Self {
        let mut targets = Vec::new();
        for (i, o) in orbits.iter().enumerate() {
            if o.points.is_empty() {
                targets.push(Target {
                    id: PointId { orbit: i, point: 0 },
                    point: o.representative.clone(),
                    continuous: true,
                });
            }
            for (j, p) in o.points.iter().enumerate() {
                targets.push(Target {
                    id: PointId { orbit: i, point: j },
                    point: p.clone(),
                    continuous: false,
                });
            }
        }
        Flow { gpd, f, cfg, targets }
    }

    pub fn config(&self) -> &TrajectoryConfig {
        &self.cfg
    }

    fn field(&self, x: &DVector<f64>, sign: f64) -> Result<DVector<f64>, FlowError> {
        Ok(self.gpd.manifold().riemannian_gradient(self.f, x)? * (-sign))
    }

    /// One reprojected RK4 step of length `h`; `sign = 1` descends.
    pub fn step(&self, x: &DVector<f64>, h: f64, sign: f64) -> Result<DVector<f64>, FlowError> {
        let k1 = self.field(x, sign)?;
        let k2 = self.field(&(x + &k1 * (h / 2.0)), sign)?;
        let k3 = self.field(&(x + &k2 * (h / 2.0)), sign)?;
        let k4 = self.field(&(x + &k3 * h), sign)?;
        let y = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let m = self.gpd.manifold();
        let y = m.project(&y)?;
        let residual = m.residual(&y)?.norm();
        if residual >= self.cfg.reprojection_tol {
            return Err(FlowError::Reprojection { residual });
        }
        Ok(y)
    }

    fn capture(&self, x: &DVector<f64>, grad_norm: f64) -> Option<PointId> {
        if grad_norm >= 10.0 * self.cfg.critical_tol {
            return None;
        }
        let sym = self.gpd.symmetry();
        self.targets
            .iter()
            .find(|t| {
                let d = if t.continuous {
                    sym.orbit_distance(&t.point, x)
                } else {
                    (&t.point - x).norm()
                };
                d < self.cfg.capture_radius
            })
            .map(|t| t.id)
    }

    pub fn integrate(&self, x: &DVector<f64>, sign: f64, stop: Stop) -> Result<Trajectory, FlowError> {
        let m = self.gpd.manifold();
        let h = self.cfg.h;
        let mut t = 0.0;
        let mut y = x.clone();
        let mut fy = self.f.eval(y.as_slice())?;
        let mut traj = Trajectory {
            times: vec![0.0],
            points: vec![y.clone()],
            values: vec![fy],
            end: End::Timeout,
        };
        let horizon = match stop {
            Stop::Time(tau) => tau,
            _ => self.cfg.max_time,
        };
        let steps = (horizon / h).round() as usize;
        for k in 0..=steps {
            match stop {
                Stop::Capture => {
                    let g = m.riemannian_gradient(self.f, &y)?.norm();
                    if let Some(id) = self.capture(&y, g) {
                        traj.end = End::Captured(id);
                        return Ok(traj);
                    }
                }
                Stop::Level(a) if sign * (fy - a) <= 0.0 => {
                    traj.end = End::Level;
                    return Ok(traj);
                }
                Stop::Time(_) if k == steps => {
                    traj.end = End::Time;
                    return Ok(traj);
                }
                _ => {}
            }
            if k == steps {
                break;
            }
            let next = self.step(&y, h, sign)?;
            let fn_ = self.f.eval(next.as_slice())?;
            let against = sign * (fn_ - fy);
            if against > self.cfg.monotone_slack {
                return Err(FlowError::NotMonotone { time: t, amount: against });
            }
            t += h;
            y = next;
            fy = fn_;
            traj.times.push(t);
            traj.points.push(y.clone());
            traj.values.push(fy);
        }
        Ok(traj)
    }

    /// `(ω, α)` from the descending and ascending flows.
    pub fn endpoint_limits(&self, x: &DVector<f64>) -> Result<(Option<PointId>, Option<PointId>), FlowError> {
        let omega = self.integrate(x, 1.0, Stop::Capture)?.captured();
        let alpha = self.integrate(x, -1.0, Stop::Capture)?.captured();
        Ok((omega, alpha))
    }

    /// Directional finite-difference Jacobian of the time-`h` map applied
    /// to the columns of `frame`.
    fn push_frame(&self, y: &DVector<f64>, frame: &DMatrix<f64>) -> Result<DMatrix<f64>, FlowError> {
        let delta = 1e-6;
        let h = self.cfg.h;
        let mut out = DMatrix::zeros(frame.nrows(), frame.ncols());
        for (j, col) in frame.column_iter().enumerate() {
            let c = col.into_owned();
            let plus = self.step(&(y + &c * delta), h, 1.0)?;
            let minus = self.step(&(y - &c * delta), h, 1.0)?;
            out.set_column(j, &((plus - minus) / (2.0 * delta)));
        }
        Ok(out)
    }

    /// Carries `frame` along descending-ordered `points` by the linearized
    /// flow and compares it with `(flow direction) ⊕ lower` at the last point.
    pub fn transport_sign(
        &self,
        points: &[DVector<f64>],
        frame: &DMatrix<f64>,
        lower: &DMatrix<f64>,
    ) -> Result<(i8, f64), FlowError> {
        let m = self.gpd.manifold();
        let first = &points[0];
        let p0 = m.tangent_projector(first)?.matrix;
        let Some(mut t) = orthonormalize_ordered(&(p0 * frame), 1e-10) else {
            return Ok((1, 0.0));
        };
        for w in points.windows(2) {
            let pushed = self.push_frame(&w[0], &t)?;
            let p = m.tangent_projector(&w[1])?.matrix;
            match orthonormalize_ordered(&(p * pushed), 1e-12) {
                Some(next) => t = next,
                None => return Ok((1, 0.0)),
            }
        }
        let end = points.last().expect("non-empty");
        let p = m.tangent_projector(end)?.matrix;
        let dir = -m.riemannian_gradient(self.f, end)?;
        let mut b = DMatrix::zeros(end.len(), 1 + lower.ncols());
        b.set_column(0, &dir);
        for (j, c) in lower.column_iter().enumerate() {
            b.set_column(j + 1, &(&p * c));
        }
        let Some(b) = orthonormalize_ordered(&b, 1e-12) else {
            return Ok((1, 0.0));
        };
        let det = (b.transpose() * t).determinant();
        Ok((if det >= 0.0 { 1 } else { -1 }, det))
    }
}

/// The frame `g·F` of `ν₋` at the orbit point `point`.
fn frame_at(sym: &Symmetry, orbit: &CriticalOrbit, point: usize, negative: bool) -> Result<DMatrix<f64>, FlowError> {
    let g = sym.matrix(&orbit.point_elements[point])?;
    let f = if negative { orbit.negative_frame() } else { orbit.positive_frame() };
    Ok(g * f)
}

fn first_within(points: &[DVector<f64>], target: &DVector<f64>, radius: f64) -> usize {
    points
        .iter()
        .position(|p| (p - target).norm() < radius)
        .unwrap_or(points.len() - 1)
}

fn subsample(points: &[DVector<f64>], max: usize) -> Vec<DVector<f64>> {
    let stride = points.len().div_ceil(max).max(1);
    let mut out: Vec<DVector<f64>> = points.iter().step_by(stride).cloned().collect();
    if let Some(last) = points.last() {
        if out.last() != Some(last) {
            out.push(last.clone());
        }
    }
    out
}

fn hausdorff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let one = |a: &[DVector<f64>], b: &[DVector<f64>]| {
        a.iter()
            .map(|p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Flow lines from the representative of `orbits[hi]` to any point of
/// `orbits[lo]`. Shoots from the unstable 0-sphere of `hi` when its index
/// is 1, otherwise backwards from the stable 0-sphere of `lo`.
pub fn enumerate_flow_lines(
    flow: &Flow,
    orbits: &[CriticalOrbit],
    hi: usize,
    lo: usize,
    with_signs: bool,
) -> Result<Census, FlowError> {
    let gpd = flow.gpd;
    let sym = gpd.symmetry();
    let (oh, ol) = (&orbits[hi], &orbits[lo]);
    let Symmetry::Finite(group) = sym else {
        return Err(FlowError::Unsupported("a finite symmetry group".into()));
    };
    if oh.orbit_dim > 0 || ol.orbit_dim > 0 || !oh.nondegenerate || !ol.nondegenerate {
        return Err(FlowError::Unsupported("isolated nondegenerate critical points".into()));
    }
    if oh.index != ol.index + 1 {
        return Err(FlowError::Unsupported("adjacent indices".into()));
    }
    let m = gpd.manifold();
    let eps = flow.cfg.shoot_radius;
    let radius = flow.cfg.capture_radius;
    let forward = oh.index == 1;
    let backward = oh.spectrum.len() - ol.index == 1;
    if !forward && !backward {
        return Err(FlowError::Unsupported(
            "an unstable 0-sphere at the upper point or a stable 0-sphere at the lower one".into(),
        ));
    }
    let (base, dir) = if forward {
        (&oh.representative, oh.negative_frame().column(0).into_owned())
    } else {
        (&ol.representative, ol.positive_frame().column(0).into_owned())
    };
    let seeds: Vec<DVector<f64>> = [1.0, -1.0]
        .iter()
        .map(|s| m.retract(base, &(&dir * (s * eps))))
        .collect::<Result<_, _>>()?;
    let sign = if forward { 1.0 } else { -1.0 };
    let shots: Vec<Result<Option<FlowLine>, FlowError>> = seeds
        .par_iter()
        .map(|seed| {
            let traj = flow.integrate(seed, sign, Stop::Capture)?;
            let Some(end) = traj.captured() else {
                return Ok(None);
            };
            let wanted = if forward { lo } else { hi };
            if end.orbit != wanted {
                return Ok(Some(FlowLine {
                    seed: seed.clone(),
                    points: Vec::new(),
                    alpha: end,
                    omega: end,
                    sign: None,
                    sign_det: 0.0,
                    flagged: false,
                }));
            }
            // Descending-ordered path from near the upper point to the
            // arrival near the lower one.
            let (path, alpha, omega) = if forward {
                let target = &ol.points[end.point];
                let k = first_within(&traj.points, target, radius);
                (traj.points[..=k].to_vec(), PointId { orbit: hi, point: 0 }, end)
            } else {
                let target = &oh.points[end.point];
                let k = first_within(&traj.points, target, radius);
                let mut p = traj.points[..=k].to_vec();
                p.reverse();
                (p, end, PointId { orbit: lo, point: 0 })
            };
            let (s, det) = if with_signs {
                let upper = frame_at(sym, oh, alpha.point, true)?;
                let lower = frame_at(sym, ol, omega.point, true)?;
                let (s, det) = flow.transport_sign(&path, &upper, &lower)?;
                (Some(s), det)
            } else {
                (None, 0.0)
            };
            Ok(Some(FlowLine {
                seed: seed.clone(),
                points: subsample(&path, 400),
                alpha,
                omega,
                sign: s,
                sign_det: det,
                flagged: with_signs && det.abs() < 1e-6,
            }))
        })
        .collect();
    let mut census = Census {
        shots: seeds.len(),
        ..Census::default()
    };
    for shot in shots {
        match shot? {
            None => census.unresolved += 1,
            Some(line) if line.points.is_empty() => census.elsewhere += 1,
            Some(line) => {
                // Backward lines start at an arbitrary upper point; move them
                // to start at the representative.
                let line = if line.alpha.point != 0 {
                    let g = group.inverse(match oh.point_elements[line.alpha.point] {
                        GroupElement::Finite(i) => i,
                        _ => unreachable!(),
                    });
                    translate_line(group, orbits, &line, g)
                } else {
                    line
                };
                let duplicate = census.lines.iter().any(|l| {
                    l.alpha == line.alpha && l.omega == line.omega && hausdorff(&l.points, &line.points) < 10.0 * eps
                });
                if !duplicate {
                    census.lines.push(line);
                }
            }
        }
    }
    if census.unresolved * 100 > census.shots {
        return Err(FlowError::Unresolved {
            unresolved: census.unresolved,
            shots: census.shots,
        });
    }
    Ok(census)
}

fn point_index(orbit: &CriticalOrbit, p: &DVector<f64>) -> usize {
    orbit
        .points
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - p).norm().total_cmp(&(*b - p).norm()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// `g·line`, endpoints re-identified among the orbit points.
pub fn translate_line(group: &crate::symmetry::FiniteGroup, orbits: &[CriticalOrbit], line: &FlowLine, g: usize) -> FlowLine {
    let a = group.act(g, &orbits[line.alpha.orbit].points[line.alpha.point]);
    let o = group.act(g, &orbits[line.omega.orbit].points[line.omega.point]);
    FlowLine {
        seed: group.act(g, &line.seed),
        points: line.points.iter().map(|p| group.act(g, p)).collect(),
        alpha: PointId {
            orbit: line.alpha.orbit,
            point: point_index(&orbits[line.alpha.orbit], &a),
        },
        omega: PointId {
            orbit: line.omega.orbit,
            point: point_index(&orbits[line.omega.orbit], &o),
        },
        ..line.clone()
    }
}

/// All group translates of `lines`, deduplicated.
pub fn saturate_lines(group: &crate::symmetry::FiniteGroup, orbits: &[CriticalOrbit], lines: &[FlowLine], tol: f64) -> Vec<FlowLine> {
    let mut out: Vec<FlowLine> = Vec::new();
    for line in lines {
        for g in 0..group.order() {
            let t = translate_line(group, orbits, line, g);
            if !out.iter().any(|l| l.alpha == t.alpha && l.omega == t.omega && hausdorff(&l.points, &t.points) < tol) {
                out.push(t);
            }
        }
    }
    out
}

/// Classes of lines under the group; each class lists line indices.
pub fn moduli_quotient(group: &crate::symmetry::FiniteGroup, lines: &[FlowLine], tol: f64) -> Vec<Vec<usize>> {
    let mut class_of: Vec<Option<usize>> = vec![None; lines.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..lines.len() {
        if class_of[i].is_some() {
            continue;
        }
        let c = classes.len();
        class_of[i] = Some(c);
        let mut members = vec![i];
        for g in 0..group.order() {
            let moved: Vec<DVector<f64>> = lines[i].points.iter().map(|p| group.act(g, p)).collect();
            for j in i + 1..lines.len() {
                if class_of[j].is_none() && hausdorff(&moved, &lines[j].points) < tol {
                    class_of[j] = Some(c);
                    members.push(j);
                }
            }
        }
        classes.push(members);
    }
    classes
}

/// Signed (or unsigned) counts `n(p, q)` between all points of two orbits,
/// extended from the representative by `n(gp, gq) = n(p, q)`.
pub fn point_counts(
    group: &crate::symmetry::FiniteGroup,
    orbits: &[CriticalOrbit],
    hi: usize,
    lo: usize,
    lines: &[FlowLine],
    signed: bool,
) -> Result<Vec<Vec<i64>>, FlowError> {
    let (oh, ol) = (&orbits[hi], &orbits[lo]);
    let mut from_rep = vec![0i64; ol.points.len()];
    for l in lines.iter().filter(|l| l.alpha == PointId { orbit: hi, point: 0 } && l.omega.orbit == lo) {
        from_rep[l.omega.point] += if signed { l.sign.unwrap_or(1) as i64 } else { 1 };
    }
    let mut counts: Vec<Vec<Option<i64>>> = vec![vec![None; ol.points.len()]; oh.points.len()];
    for g in 0..group.order() {
        let p = point_index(oh, &group.act(g, &oh.representative));
        for (q, &n) in from_rep.iter().enumerate() {
            let gq = point_index(ol, &group.act(g, &ol.points[q]));
            match counts[p][gq] {
                None => counts[p][gq] = Some(n),
                Some(old) if old == n => {}
                Some(_) => return Err(FlowError::InconsistentCounts { hi, lo }),
            }
        }
    }
    Ok(counts.into_iter().map(|r| r.into_iter().map(|c| c.unwrap_or(0)).collect()).collect())
}

/// `max ‖Φ_τ(g·x) − g·Φ_τ(x)‖` over sampled points and elements.
pub fn check_flow_equivariance(flow: &Flow, samples: usize, tau: f64, seed: u64) -> Result<f64, FlowError> {
    let gpd = flow.gpd;
    let sym = gpd.symmetry();
    let points = gpd.manifold().sample_points(samples, seed);
    let mut r = rng(seed.wrapping_add(2));
    let elements = sym.sample_elements(&mut r, 2);
    let worst = points
        .par_iter()
        .map(|x| -> Result<f64, FlowError> {
            let base = flow.integrate(x, 1.0, Stop::Time(tau))?;
            let mut worst: f64 = 0.0;
            for g in &elements {
                let gx = sym.act(g, x)?;
                let moved = flow.integrate(&gx, 1.0, Stop::Time(tau))?;
                worst = worst.max((moved.last() - sym.act(g, base.last())?).norm());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct RetractionReport {
    pub samples: usize,
    pub time_budget: f64,
    pub worst_time: f64,
    pub pass: bool,
}

/// Every sampled point with `f ∈ [a, b]` must flow below `a` within
/// `10 (b − a) / min ‖grad f‖²` (estimated on the band).
pub fn check_noncritical_retraction(
    flow: &Flow,
    orbits: &[CriticalOrbit],
    a: f64,
    b: f64,
    samples: usize,
    seed: u64,
) -> Result<RetractionReport, FlowError> {
    if let Some(o) = orbits.iter().find(|o| o.value >= a && o.value <= b) {
        return Err(FlowError::CriticalValueInBand { a, b, value: o.value });
    }
    let m = flow.gpd.manifold();
    let band: Vec<DVector<f64>> = m
        .sample_points(samples * 10, seed)
        .into_iter()
        .filter(|x| flow.f.eval(x.as_slice()).is_ok_and(|v| v >= a && v <= b))
        .take(samples)
        .collect();
    let mut min_g2 = f64::INFINITY;
    for x in &band {
        min_g2 = min_g2.min(m.riemannian_gradient(flow.f, x)?.norm_squared());
    }
    let time_budget = if band.is_empty() { 0.0 } else { 10.0 * (b - a) / min_g2 };
    let times = band
        .par_iter()
        .map(|x| -> Result<Option<f64>, FlowError> {
            let traj = flow.integrate(x, 1.0, Stop::Level(a))?;
            Ok((traj.end == End::Level).then(|| *traj.times.last().expect("non-empty")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pass = times.iter().all(|t| t.is_some_and(|t| t <= time_budget));
    let worst_time = times.iter().map(|t| t.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    Ok(RetractionReport {
        samples: band.len(),
        time_budget,
        worst_time,
        pass,
    })
}
