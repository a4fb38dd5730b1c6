//! Finite orthogonal matrix groups and integer-weight torus actions on ℝ^N.

use std::collections::HashMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::expr::{ExprError, Expression};
use crate::geometry::LevelSetManifold;
use crate::linalg::{numerical_rank, sorted_symmetric_eigen};

pub const DEFAULT_GROUP_CAP: usize = 512;
pub const DEDUP_TOL: f64 = 1e-8;
const MATRIX_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("generator {index} is not orthogonal (defect {defect:e})")]
    NotOrthogonal { index: usize, defect: f64 },
    #[error("generator {index} is {rows}x{cols}, expected {dim}x{dim}")]
    Shape {
        index: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("group closure exceeded the cap of {cap} elements")]
    CapExceeded { cap: usize },
    #[error("generator {index} is not skew-symmetric (defect {defect:e})")]
    NotSkew { index: usize, defect: f64 },
    #[error("generators {a} and {b} do not commute (defect {defect:e})")]
    NotCommuting { a: usize, b: usize, defect: f64 },
    #[error("generator {index} has non-integer frequency {value}")]
    NonIntegerFrequency { index: usize, value: f64 },
    #[error("generator {index} is not periodic with period 2π (defect {defect:e})")]
    NotPeriodic { index: usize, defect: f64 },
    #[error("isotropy at the given point is not a subgroup; tolerance too loose")]
    NotSubgroup,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("preset `{name}` needs ambient dimension ≥ {min}")]
    PresetDimension { name: String, min: usize },
    #[error("action does not preserve the manifold: residual {residual:e} at sample {sample}")]
    DoesNotPreserve { sample: usize, residual: f64 },
    #[error("element kind does not match the symmetry")]
    ElementKind,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

fn snap(m: &mut DMatrix<f64>) {
    for c in m.iter_mut() {
        for target in [-1.0, 0.0, 1.0] {
            if (*c - target).abs() < 1e-14 {
                *c = target;
            }
        }
    }
}

fn plane_rotation(dim: usize, angle: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(dim, dim);
    let (s, c) = angle.sin_cos();
    m[(0, 0)] = c;
    m[(0, 1)] = -s;
    m[(1, 0)] = s;
    m[(1, 1)] = c;
    snap(&mut m);
    m
}

/// Lookup key for approximate matrix equality: entries rounded to 1e-6.
fn key(m: &DMatrix<f64>) -> Vec<i64> {
    m.iter().map(|c| (c * 1e6).round() as i64).collect()
}

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    dim: usize,
    elements: Vec<DMatrix<f64>>,
    table: Vec<Vec<usize>>,
    inverses: Vec<usize>,
}

impl FiniteGroup {
    /// Smallest set containing the identity and `generators` closed under
    /// products. The identity has index 0.
    pub fn close(dim: usize, generators: &[DMatrix<f64>], cap: usize) -> Result<Self, SymmetryError> {
        for (index, g) in generators.iter().enumerate() {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(SymmetryError::Shape {
                    index,
                    rows: g.nrows(),
                    cols: g.ncols(),
                    dim,
                });
            }
            let defect = crate::linalg::orthogonality_defect(g);
            if defect >= 1e-10 {
                return Err(SymmetryError::NotOrthogonal { index, defect });
            }
        }
        let mut elements = vec![DMatrix::identity(dim, dim)];
        let mut index: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        index.insert(key(&elements[0]), vec![0]);
        let find = |elements: &[DMatrix<f64>], index: &HashMap<Vec<i64>, Vec<usize>>, m: &DMatrix<f64>| {
            if let Some(c) = index.get(&key(m)) {
                for &i in c {
                    if (&elements[i] - m).amax() < MATRIX_TOL {
                        return Some(i);
                    }
                }
            }
            elements.iter().position(|e| (e - m).amax() < MATRIX_TOL)
        };
        let mut frontier = 0;
        while frontier < elements.len() {
            let current = elements[frontier].clone();
            frontier += 1;
            for g in generators {
                let mut p = g * &current;
                snap(&mut p);
                if find(&elements, &index, &p).is_none() {
                    if elements.len() >= cap {
                        return Err(SymmetryError::CapExceeded { cap });
                    }
                    index.entry(key(&p)).or_default().push(elements.len());
                    elements.push(p);
                }
            }
        }
        let n = elements.len();
        let mut table = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let p = &elements[i] * &elements[j];
                table[i][j] = find(&elements, &index, &p).ok_or(SymmetryError::NotSubgroup)?;
            }
        }
        let inverses = (0..n)
            .map(|i| (0..n).find(|&j| table[i][j] == 0).ok_or(SymmetryError::NotSubgroup))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FiniteGroup {
            dim,
            elements,
            table,
            inverses,
        })
    }

    pub fn trivial(dim: usize) -> Self {
        FiniteGroup::close(dim, &[], 1).expect("identity group")
    }

    /// Rotations by multiples of 2π/n in the (x1, x2) plane.
    pub fn cyclic_z(dim: usize, n: usize) -> Result<Self, SymmetryError> {
        if dim < 2 {
            return Err(SymmetryError::PresetDimension {
                name: format!("cyclic_z {n}"),
                min: 2,
            });
        }
        FiniteGroup::close(dim, &[plane_rotation(dim, TAU / n.max(1) as f64)], DEFAULT_GROUP_CAP)
    }

    pub fn antipodal(dim: usize) -> Self {
        FiniteGroup::close(dim, &[-DMatrix::identity(dim, dim)], 2).expect("order 2")
    }

    /// Symmetries of the regular n-gon in the (x1, x2) plane; order 2n.
    pub fn dihedral(dim: usize, n: usize) -> Result<Self, SymmetryError> {
        if dim < 2 {
            return Err(SymmetryError::PresetDimension {
                name: format!("dihedral {n}"),
                min: 2,
            });
        }
        let mut flip = DMatrix::identity(dim, dim);
        flip[(1, 1)] = -1.0;
        FiniteGroup::close(
            dim,
            &[plane_rotation(dim, TAU / n.max(1) as f64), flip],
            DEFAULT_GROUP_CAP,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[DMatrix<f64>] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &DMatrix<f64> {
        &self.elements[i]
    }

    /// Index of `g_i g_j`.
    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.table[i][j]
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.inverses[i]
    }

    pub fn act(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.elements[i] * x
    }

    /// Elements fixing `x` within `tol`, checked to form a subgroup.
    pub fn isotropy(&self, x: &DVector<f64>, tol: f64) -> Result<Vec<usize>, SymmetryError> {
        let h: Vec<usize> = (0..self.order())
            .filter(|&i| (self.act(i, x) - x).norm() < tol)
            .collect();
        for &a in &h {
            if !h.contains(&self.inverse(a)) {
                return Err(SymmetryError::NotSubgroup);
            }
            for &b in &h {
                if !h.contains(&self.mul(a, b)) {
                    return Err(SymmetryError::NotSubgroup);
                }
            }
        }
        Ok(h)
    }

    /// Distinct points `g·x` paired with the first element producing each,
    /// starting with `(x, identity)`.
    pub fn orbit_points(&self, x: &DVector<f64>) -> Vec<(DVector<f64>, usize)> {
        let mut out: Vec<(DVector<f64>, usize)> = Vec::new();
        for i in 0..self.order() {
            let y = self.act(i, x);
            if !out.iter().any(|(p, _)| (p - &y).norm() < DEDUP_TOL) {
                out.push((y, i));
            }
        }
        out
    }

    /// `(1/|K|) Σ_g f(g·x)` as an expression.
    pub fn haar_average(&self, f: &Expression) -> Result<Expression, SymmetryError> {
        let terms = self.elements.iter().map(|g| f.compose_linear(g)).collect();
        Ok(Expression::weighted_sum(terms, 1.0 / self.order() as f64)?)
    }

    /// `QKQ⁻¹` with the same element numbering.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> FiniteGroup {
        let qt = q.transpose();
        FiniteGroup {
            elements: self.elements.iter().map(|g| q * g * &qt).collect(),
            ..self.clone()
        }
    }
}

/// One rotation plane of a torus action: orthonormal `u, v` with
/// `A_i u = n_i v` for each generator.
#[derive(Clone, Debug)]
pub struct RotationPlane {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub frequencies: Vec<i64>,
}

#[derive(Clone, Debug)]
pub struct TorusAction {
    dim: usize,
    generators: Vec<DMatrix<f64>>,
    planes: Vec<RotationPlane>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn int_det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    match n {
        0 => 1,
        1 => m[0][0],
        _ => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect())
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * int_det(&minor)
            })
            .sum(),
    }
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    if n < r {
        return vec![];
    }
    let mut out = combinations(n - 1, r);
    for mut c in combinations(n - 1, r - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

impl TorusAction {
    pub fn new(dim: usize, generators: Vec<DMatrix<f64>>) -> Result<Self, SymmetryError> {
        for (index, a) in generators.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(SymmetryError::Shape {
                    index,
                    rows: a.nrows(),
                    cols: a.ncols(),
                    dim,
                });
            }
            let defect = (a + a.transpose()).norm();
            if defect >= 1e-12 {
                return Err(SymmetryError::NotSkew { index, defect });
            }
        }
        for a in 0..generators.len() {
            for b in a + 1..generators.len() {
                let defect = (&generators[a] * &generators[b] - &generators[b] * &generators[a]).norm();
                if defect >= 1e-10 {
                    return Err(SymmetryError::NotCommuting { a, b, defect });
                }
            }
        }
        // A generic combination separates the joint rotation planes.
        let mut s = DMatrix::zeros(dim, dim);
        for (a, p) in generators.iter().zip([2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0]) {
            s += a * p.sqrt();
        }
        let (vals, vecs) = sorted_symmetric_eigen(&(-(&s * &s)));
        let mut planes: Vec<RotationPlane> = Vec::new();
        for (k, &lambda) in vals.iter().enumerate().rev() {
            if lambda < 1e-10 {
                break;
            }
            let mut u = vecs.column(k).into_owned();
            for p in &planes {
                let du = p.u.dot(&u);
                let dv = p.v.dot(&u);
                u.axpy(-du, &p.u, 1.0);
                u.axpy(-dv, &p.v, 1.0);
            }
            if u.norm() < 0.5 {
                continue;
            }
            u.normalize_mut();
            let su = &s * &u;
            let v = su.normalize();
            let mut frequencies = Vec::with_capacity(generators.len());
            for (index, a) in generators.iter().enumerate() {
                let value = v.dot(&(a * &u));
                let n = value.round();
                if (value - n).abs() > 1e-6 {
                    return Err(SymmetryError::NonIntegerFrequency { index, value });
                }
                frequencies.push(n as i64);
            }
            planes.push(RotationPlane { u, v, frequencies });
        }
        let action = TorusAction {
            dim,
            generators,
            planes,
        };
        for (index, a) in action.generators.iter().enumerate() {
            let mut rebuilt = DMatrix::zeros(dim, dim);
            for p in &action.planes {
                rebuilt += (&p.v * p.u.transpose() - &p.u * p.v.transpose()) * p.frequencies[index] as f64;
            }
            let defect = (rebuilt - a).norm();
            if defect >= 1e-8 {
                return Err(SymmetryError::NotPeriodic { index, defect });
            }
        }
        Ok(action)
    }

    /// The circle rotating the (x1, x2) plane with unit speed.
    pub fn rotation_z(dim: usize) -> Result<Self, SymmetryError> {
        if dim < 2 {
            return Err(SymmetryError::PresetDimension {
                name: "rotation_z".into(),
                min: 2,
            });
        }
        let mut a = DMatrix::zeros(dim, dim);
        a[(0, 1)] = -1.0;
        a[(1, 0)] = 1.0;
        TorusAction::new(dim, vec![a])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn planes(&self) -> &[RotationPlane] {
        &self.planes
    }

    /// `exp(Σ θ_i A_i)`, assembled blockwise.
    pub fn matrix(&self, theta: &[f64]) -> DMatrix<f64> {
        let mut r = DMatrix::identity(self.dim, self.dim);
        for p in &self.planes {
            let phi: f64 = theta.iter().zip(&p.frequencies).map(|(t, n)| t * *n as f64).sum();
            let (s, c) = phi.sin_cos();
            let uu = &p.u * p.u.transpose() + &p.v * p.v.transpose();
            let vu = &p.v * p.u.transpose() - &p.u * p.v.transpose();
            r += uu * (c - 1.0) + vu * s;
        }
        r
    }

    pub fn act(&self, theta: &[f64], x: &DVector<f64>) -> DVector<f64> {
        self.matrix(theta) * x
    }

    /// Columns `A_i x`.
    pub fn fundamental_vectors(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.rank());
        for (i, a) in self.generators.iter().enumerate() {
            out.set_column(i, &(a * x));
        }
        out
    }

    /// Continuous isotropy dimension `m − rank[A_1x … A_mx]` and the order of
    /// the component group of the stabilizer.
    pub fn isotropy(&self, x: &DVector<f64>, tol: f64) -> (usize, u64) {
        let active: Vec<&RotationPlane> = self
            .planes
            .iter()
            .filter(|p| p.u.dot(x).hypot(p.v.dot(x)) > tol)
            .collect();
        let m = self.rank();
        let rank = numerical_rank(&self.fundamental_vectors(x), 1e-9);
        let freq: Vec<Vec<i64>> = (0..m)
            .map(|i| active.iter().map(|p| p.frequencies[i]).collect())
            .collect();
        let mut g = 0;
        for rows in combinations(m, rank) {
            for cols in combinations(active.len(), rank) {
                let sub: Vec<Vec<i64>> = rows.iter().map(|&r| cols.iter().map(|&c| freq[r][c]).collect()).collect();
                g = gcd(g, int_det(&sub));
            }
        }
        (m - rank, g.max(1) as u64)
    }

    /// Trapezoid-rule average over a `q^m` angle grid.
    pub fn haar_average(&self, f: &Expression, q: usize) -> Result<Expression, SymmetryError> {
        let m = self.rank();
        let total = q.pow(m as u32);
        let mut terms = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let theta: Vec<f64> = (0..m)
                .map(|_| {
                    let j = rest % q;
                    rest /= q;
                    TAU * j as f64 / q as f64
                })
                .collect();
            terms.push(f.compose_linear(&self.matrix(&theta)));
        }
        Ok(Expression::weighted_sum(terms, 1.0 / total as f64)?)
    }

    /// Distance from `y` to the orbit of `x`: coarse angle grid, then
    /// Gauss–Newton on the angles.
    pub fn orbit_distance(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let m = self.rank();
        if m == 0 {
            return (x - y).norm();
        }
        let q = 24usize;
        let mut best = (f64::INFINITY, vec![0.0; m]);
        for flat in 0..q.pow(m as u32) {
            let mut rest = flat;
            let theta: Vec<f64> = (0..m)
                .map(|_| {
                    let j = rest % q;
                    rest /= q;
                    TAU * j as f64 / q as f64
                })
                .collect();
            let d = (self.act(&theta, x) - y).norm();
            if d < best.0 {
                best = (d, theta);
            }
        }
        let mut theta = best.1;
        let mut dist = best.0;
        for _ in 0..30 {
            let gx = self.act(&theta, x);
            let r = &gx - y;
            let j = self.fundamental_vectors(&gx);
            let jtj = j.transpose() * &j;
            let rhs = j.transpose() * &r;
            let Some(step) = jtj.svd(true, true).solve(&rhs, 1e-12).ok() else {
                break;
            };
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t - s).collect();
            let d = (self.act(&cand, x) - y).norm();
            if d < dist {
                dist = d;
                theta = cand;
            } else {
                break;
            }
            if step.norm() < 1e-14 {
                break;
            }
        }
        dist
    }

    pub fn conjugate(&self, q: &DMatrix<f64>) -> TorusAction {
        let qt = q.transpose();
        TorusAction {
            dim: self.dim,
            generators: self.generators.iter().map(|a| q * a * &qt).collect(),
            planes: self
                .planes
                .iter()
                .map(|p| RotationPlane {
                    u: q * &p.u,
                    v: q * &p.v,
                    frequencies: p.frequencies.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement {
    Finite(usize),
    Torus(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Isotropy {
    Finite(Vec<usize>),
    Torus { dim: usize, finite_part: u64 },
}

impl Isotropy {
    /// Number of elements for finite isotropy; `None` when continuous.
    pub fn order(&self) -> Option<usize> {
        match self {
            Isotropy::Finite(h) => Some(h.len()),
            Isotropy::Torus { dim: 0, finite_part } => Some(*finite_part as usize),
            Isotropy::Torus { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Isotropy::Finite(_) => 0,
            Isotropy::Torus { dim, .. } => *dim,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Symmetry {
    Finite(FiniteGroup),
    Torus(TorusAction),
}

impl Symmetry {
    pub fn trivial(dim: usize) -> Self {
        Symmetry::Finite(FiniteGroup::trivial(dim))
    }

    /// Named presets: `trivial`, `antipodal`, `cyclic_z n`, `dihedral n`,
    /// `rotation_z`.
    pub fn preset(name: &str, dim: usize) -> Result<Self, SymmetryError> {
        let parts: Vec<&str> = name.split_whitespace().collect();
        let arg = |i: usize| -> Result<usize, SymmetryError> {
            parts
                .get(i)
                .and_then(|s| s.parse().ok())
                .filter(|n| *n >= 1)
                .ok_or_else(|| SymmetryError::UnknownPreset(name.to_string()))
        };
        match parts.as_slice() {
            ["trivial"] => Ok(Symmetry::trivial(dim)),
            ["antipodal"] => Ok(Symmetry::Finite(FiniteGroup::antipodal(dim))),
            ["cyclic_z", _] => Ok(Symmetry::Finite(FiniteGroup::cyclic_z(dim, arg(1)?)?)),
            ["dihedral", _] => Ok(Symmetry::Finite(FiniteGroup::dihedral(dim, arg(1)?)?)),
            ["rotation_z"] => Ok(Symmetry::Torus(TorusAction::rotation_z(dim)?)),
            _ => Err(SymmetryError::UnknownPreset(name.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Symmetry::Finite(g) => g.dim(),
            Symmetry::Torus(t) => t.dim(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Symmetry::Finite(_))
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            Symmetry::Finite(_) => GroupElement::Finite(0),
            Symmetry::Torus(t) => GroupElement::Torus(vec![0.0; t.rank()]),
        }
    }

    pub fn matrix(&self, g: &GroupElement) -> Result<DMatrix<f64>, SymmetryError> {
        match (self, g) {
            (Symmetry::Finite(k), GroupElement::Finite(i)) => Ok(k.element(*i).clone()),
            (Symmetry::Torus(t), GroupElement::Torus(theta)) if theta.len() == t.rank() => Ok(t.matrix(theta)),
            _ => Err(SymmetryError::ElementKind),
        }
    }

    pub fn act(&self, g: &GroupElement, x: &DVector<f64>) -> Result<DVector<f64>, SymmetryError> {
        Ok(self.matrix(g)? * x)
    }

    /// `hg`.
    pub fn compose(&self, h: &GroupElement, g: &GroupElement) -> Result<GroupElement, SymmetryError> {
        match (self, h, g) {
            (Symmetry::Finite(k), GroupElement::Finite(a), GroupElement::Finite(b)) => Ok(GroupElement::Finite(k.mul(*a, *b))),
            (Symmetry::Torus(_), GroupElement::Torus(a), GroupElement::Torus(b)) if a.len() == b.len() => {
                Ok(GroupElement::Torus(a.iter().zip(b).map(|(x, y)| (x + y).rem_euclid(TAU)).collect()))
            }
            _ => Err(SymmetryError::ElementKind),
        }
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement, SymmetryError> {
        match (self, g) {
            (Symmetry::Finite(k), GroupElement::Finite(a)) => Ok(GroupElement::Finite(k.inverse(*a))),
            (Symmetry::Torus(_), GroupElement::Torus(a)) => Ok(GroupElement::Torus(a.iter().map(|t| (-t).rem_euclid(TAU)).collect())),
            _ => Err(SymmetryError::ElementKind),
        }
    }

    /// All elements of a finite group; a seeded sample of `count` angle
    /// vectors for a torus.
    pub fn sample_elements<R: Rng>(&self, r: &mut R, count: usize) -> Vec<GroupElement> {
        match self {
            Symmetry::Finite(k) => (0..k.order()).map(GroupElement::Finite).collect(),
            Symmetry::Torus(t) => (0..count)
                .map(|_| GroupElement::Torus((0..t.rank()).map(|_| r.random_range(0.0..TAU)).collect()))
                .collect(),
        }
    }

    pub fn isotropy(&self, x: &DVector<f64>, tol: f64) -> Result<Isotropy, SymmetryError> {
        match self {
            Symmetry::Finite(k) => Ok(Isotropy::Finite(k.isotropy(x, tol)?)),
            Symmetry::Torus(t) => {
                let (dim, finite_part) = t.isotropy(x, tol);
                Ok(Isotropy::Torus { dim, finite_part })
            }
        }
    }

    pub fn orbit_distance(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        match self {
            Symmetry::Finite(k) => (0..k.order())
                .map(|i| (k.act(i, x) - y).norm())
                .fold(f64::INFINITY, f64::min),
            Symmetry::Torus(t) => t.orbit_distance(x, y),
        }
    }

    pub fn haar_average(&self, f: &Expression) -> Result<Expression, SymmetryError> {
        match self {
            Symmetry::Finite(k) => k.haar_average(f),
            Symmetry::Torus(t) => t.haar_average(f, 16),
        }
    }

    pub fn conjugate(&self, q: &DMatrix<f64>) -> Symmetry {
        match self {
            Symmetry::Finite(k) => Symmetry::Finite(k.conjugate(q)),
            Symmetry::Torus(t) => Symmetry::Torus(t.conjugate(q)),
        }
    }

    /// Checks `‖c(g·x)‖ < tol` on sampled manifold points and group elements.
    pub fn preflight<R: Rng>(
        &self,
        m: &LevelSetManifold,
        points: &[DVector<f64>],
        r: &mut R,
        tol: f64,
    ) -> Result<f64, SymmetryError> {
        let elements = self.sample_elements(r, 8);
        let mut worst: f64 = 0.0;
        for (sample, x) in points.iter().enumerate() {
            for g in &elements {
                let y = self.act(g, x)?;
                let residual = m.residual(&y).map(|c| c.norm()).unwrap_or(f64::INFINITY);
                if !(residual < tol) {
                    return Err(SymmetryError::DoesNotPreserve { sample, residual });
                }
                worst = worst.max(residual);
            }
        }
        Ok(worst)
    }
}
