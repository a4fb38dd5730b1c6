//! Critical orbits of basic functions: search, classification, local model,
//! Morse polynomials and inequalities.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExprError, Expression};
use crate::geometry::GeometryError;
use crate::groupoid::{ActionGroupoid, GroupoidError, FIX_TOL};
use crate::linalg::{fit_slope, sorted_symmetric_eigen};
use crate::sampling::{rng, Halton};
use crate::symmetry::{GroupElement, Isotropy, Symmetry, SymmetryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorseError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("no critical points found from {starts} starts")]
    NoCandidates { starts: usize },
    #[error("Hessian does not vanish along the orbit (|H(v, ·)| = {defect:e})")]
    KernelContainment { defect: f64 },
    #[error("negative and positive normal spectrum not separated (gap {gap:e})")]
    IllSeparated { gap: f64 },
    #[error("Morse polynomials need a finite symmetry group")]
    TorusPolynomial,
    #[error("retraction failed at radius {radius}")]
    Retraction { radius: f64 },
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub n_starts: usize,
    pub seed: u64,
    pub gd_steps: usize,
    pub newton_tol: f64,
    pub newton_iters: usize,
    pub nondeg_tol: f64,
    pub cluster_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_starts: 48,
            seed: 0,
            gd_steps: 400,
            newton_tol: 1e-8,
            newton_iters: 60,
            nondeg_tol: 1e-6,
            cluster_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CriticalOrbit {
    pub representative: DVector<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub orbit_dim: usize,
    /// `None` for positive-dimensional orbits.
    pub orbit_size: Option<usize>,
    /// Orbit points with the element carrying the representative there;
    /// the representative comes first. Empty for positive-dimensional orbits.
    pub points: Vec<DVector<f64>>,
    pub point_elements: Vec<GroupElement>,
    pub isotropy: Isotropy,
    pub normal_frame: DMatrix<f64>,
    pub normal_hessian: DMatrix<f64>,
    pub spectrum: Vec<f64>,
    /// Eigenvectors of the normal Hessian in normal-frame coordinates.
    pub eigenvectors: DMatrix<f64>,
    pub index: usize,
    pub stacky_index: i64,
    pub nondegenerate: bool,
    pub orientable: bool,
}

impl CriticalOrbit {
    /// Oriented basis of `ν₋` at the representative, as ambient columns.
    pub fn negative_frame(&self) -> DMatrix<f64> {
        &self.normal_frame * self.eigenvectors.columns(0, self.index)
    }

    /// Oriented basis of `ν₊` at the representative.
    pub fn positive_frame(&self) -> DMatrix<f64> {
        let r = self.spectrum.len();
        &self.normal_frame * self.eigenvectors.columns(self.index, r - self.index)
    }

    pub fn quadratic_model(&self) -> QuadraticModel {
        QuadraticModel {
            base: self.representative.clone(),
            value: self.value,
            eigenvalues: self.spectrum.clone(),
            frame: &self.normal_frame * &self.eigenvectors,
        }
    }
}

/// `c + ½ Σ μᵢ ⟨eᵢ, v⟩²` for normal vectors `v`.
#[derive(Clone, Debug)]
pub struct QuadraticModel {
    pub base: DVector<f64>,
    pub value: f64,
    pub eigenvalues: Vec<f64>,
    pub frame: DMatrix<f64>,
}

impl QuadraticModel {
    pub fn eval(&self, v: &DVector<f64>) -> f64 {
        let c = self.frame.transpose() * v;
        self.value + 0.5 * self.eigenvalues.iter().zip(c.iter()).map(|(m, x)| m * x * x).sum::<f64>()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalModelFit {
    pub radii: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub remainder: Vec<i64>,
    pub exact: bool,
    pub nonnegative: bool,
    pub lacunary: bool,
    pub pass: bool,
}

fn riemannian_newton(
    gpd: &ActionGroupoid,
    f: &Expression,
    x0: &DVector<f64>,
    cfg: &SearchConfig,
) -> Option<(DVector<f64>, f64)> {
    let m = gpd.manifold();
    let mut x = x0.clone();
    let mut gnorm = m.riemannian_gradient(f, &x).ok()?.norm();
    for _ in 0..cfg.newton_iters {
        if gnorm < 1e-13 {
            break;
        }
        let g = m.riemannian_gradient(f, &x).ok()?;
        let h = m.riemannian_hessian(f, &x).ok()?;
        let rhs = -(h.frame.transpose() * &g);
        let xi = h.matrix.clone().svd(true, true).solve(&rhs, 1e-10).ok()?;
        let mut step = &h.frame * xi;
        let len = step.norm();
        if len > 0.5 {
            step *= 0.5 / len;
        }
        let y = m.retract(&x, &step).ok()?;
        let gy = m.riemannian_gradient(f, &y).ok()?.norm();
        if !(gy.is_finite()) {
            return None;
        }
        x = y;
        let stalled = gy >= gnorm && gnorm < cfg.newton_tol;
        gnorm = gy;
        if stalled {
            break;
        }
    }
    (gnorm < cfg.newton_tol).then_some((x, gnorm))
}

/// Armijo-backtracked gradient steps with retraction; `sign = 1` descends.
fn gradient_walk(gpd: &ActionGroupoid, f: &Expression, x0: &DVector<f64>, sign: f64, steps: usize) -> Option<DVector<f64>> {
    let m = gpd.manifold();
    let mut x = x0.clone();
    let mut fx = sign * f.eval(x.as_slice()).ok()?;
    let mut t = 0.5;
    for _ in 0..steps {
        let g = m.riemannian_gradient(f, &x).ok()?;
        let gg = g.norm_squared();
        if gg < 1e-16 {
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let step = &g * (-sign * t);
            if let Ok(y) = m.retract(&x, &step) {
                if let Ok(fy) = f.eval(y.as_slice()) {
                    if sign * fy <= fx - 1e-4 * t * gg {
                        x = y;
                        fx = sign * fy;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        t = (t * 2.0).min(1.0);
    }
    Some(x)
}

fn lex_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() > 1e-9 {
            return x < y;
        }
    }
    false
}

/// Multistart search: each projected Halton seed yields up to three
/// candidates (raw Newton, descent then Newton, ascent then Newton), which
/// are clustered into group orbits and classified.
pub fn find_critical_orbits(
    gpd: &ActionGroupoid,
    f: &Expression,
    cfg: &SearchConfig,
) -> Result<Vec<CriticalOrbit>, MorseError> {
    let m = gpd.manifold();
    let seeds: Vec<DVector<f64>> = Halton::new(m.ambient_dim(), m.box_half_width, cfg.seed)
        .take(cfg.n_starts * 4)
        .filter_map(|x| m.project(&x).ok())
        .take(cfg.n_starts)
        .collect();
    let candidates: Vec<(DVector<f64>, f64)> = seeds
        .par_iter()
        .map(|s| {
            let mut out = Vec::with_capacity(3);
            out.extend(riemannian_newton(gpd, f, s, cfg));
            for sign in [1.0, -1.0] {
                if let Some(y) = gradient_walk(gpd, f, s, sign, cfg.gd_steps) {
                    out.extend(riemannian_newton(gpd, f, &y, cfg));
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if candidates.is_empty() {
        return Err(MorseError::NoCandidates { starts: seeds.len() });
    }
    let sym = gpd.symmetry();
    let mut reps: Vec<(DVector<f64>, f64)> = Vec::new();
    for (x, _) in candidates {
        let value = f.eval(x.as_slice())?;
        let known = reps
            .iter()
            .any(|(r, v)| (v - value).abs() < 1e-6 && sym.orbit_distance(r, &x) < cfg.cluster_tol);
        if !known {
            reps.push((x, value));
        }
    }
    let mut orbits = reps
        .into_iter()
        .map(|(x, _)| {
            let x = match sym {
                Symmetry::Finite(k) => k
                    .orbit_points(&x)
                    .into_iter()
                    .map(|(p, _)| p)
                    .fold(x.clone(), |best, p| if lex_less(&p, &best) { p } else { best }),
                Symmetry::Torus(_) => x,
            };
            classify(gpd, f, &x, cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    orbits.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.index.cmp(&b.index))
            .then(a.orbit_size.cmp(&b.orbit_size))
    });
    Ok(orbits)
}

fn finite_isotropy_elements(sym: &Symmetry, iso: &Isotropy) -> Vec<GroupElement> {
    match (sym, iso) {
        (Symmetry::Finite(_), Isotropy::Finite(h)) => h.iter().map(|&i| GroupElement::Finite(i)).collect(),
        (Symmetry::Torus(t), Isotropy::Torus { dim: 0, finite_part }) if t.rank() == 1 => (0..*finite_part)
            .map(|j| GroupElement::Torus(vec![std::f64::consts::TAU * j as f64 / *finite_part as f64]))
            .collect(),
        // Connected isotropy, or a component group not enumerated here:
        // treated as orientation-preserving.
        _ => vec![sym.identity()],
    }
}

/// Full classification of the critical orbit through `x`.
pub fn classify(gpd: &ActionGroupoid, f: &Expression, x: &DVector<f64>, cfg: &SearchConfig) -> Result<CriticalOrbit, MorseError> {
    let m = gpd.manifold();
    let sym = gpd.symmetry();
    let value = f.eval(x.as_slice())?;
    let gradient_norm = m.riemannian_gradient(f, x)?.norm();
    let isotropy = sym.isotropy(x, FIX_TOL)?;
    let orbit = gpd.orbit_tangent_frame(x)?;
    let frame = gpd.normal_frame(x)?;
    let hess = m.riemannian_hessian(f, x)?;
    let kernel_defect = if orbit.ncols() > 0 { (&hess.ambient * &orbit).amax() } else { 0.0 };
    if kernel_defect > 1e-6 {
        return Err(MorseError::KernelContainment { defect: kernel_defect });
    }
    let h = frame.columns.transpose() * &hess.ambient * &frame.columns;
    let h = (&h + h.transpose()) * 0.5;
    let (spectrum, eigenvectors) = sorted_symmetric_eigen(&h);
    let index = spectrum.iter().filter(|&&mu| mu < 0.0).count();
    let nondegenerate = spectrum.iter().all(|mu| mu.abs() > cfg.nondeg_tol);
    let (points, point_elements) = match sym {
        Symmetry::Finite(k) => k
            .orbit_points(x)
            .into_iter()
            .map(|(p, i)| (p, GroupElement::Finite(i)))
            .unzip(),
        Symmetry::Torus(_) if orbit.ncols() == 0 => (vec![x.clone()], vec![sym.identity()]),
        Symmetry::Torus(_) => (Vec::new(), Vec::new()),
    };
    let orbit_size = (orbit.ncols() == 0).then_some(points.len());
    let mut orbit_out = CriticalOrbit {
        representative: x.clone(),
        value,
        gradient_norm,
        orbit_dim: orbit.ncols(),
        orbit_size,
        points,
        point_elements,
        stacky_index: index as i64 - isotropy.dim() as i64,
        isotropy,
        normal_frame: frame.columns.clone(),
        normal_hessian: h,
        spectrum,
        eigenvectors,
        index,
        nondegenerate,
        orientable: true,
    };
    orbit_out.orientable = negative_orientability(gpd, &orbit_out)?;
    Ok(orbit_out)
}

/// Whether every finite isotropy element acts on `ν₋` with positive
/// determinant.
pub fn negative_orientability(gpd: &ActionGroupoid, orbit: &CriticalOrbit) -> Result<bool, MorseError> {
    let lambda = orbit.index;
    if lambda == 0 {
        return Ok(true);
    }
    if lambda < orbit.spectrum.len() {
        let gap = orbit.spectrum[lambda] - orbit.spectrum[lambda - 1];
        if gap < 1e-8 {
            return Err(MorseError::IllSeparated { gap });
        }
    }
    let frame = crate::groupoid::NormalFrame {
        base: orbit.representative.clone(),
        columns: orbit.normal_frame.clone(),
    };
    let neg = orbit.eigenvectors.columns(0, lambda).into_owned();
    for g in finite_isotropy_elements(gpd.symmetry(), &orbit.isotropy) {
        let r = gpd.normal_representation(&g, &frame)?;
        let restricted = neg.transpose() * r * &neg;
        if restricted.determinant() <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `max_g ‖RᵀHR − H‖` over enumerable isotropy elements.
pub fn check_hessian_normal_invariance(gpd: &ActionGroupoid, orbit: &CriticalOrbit) -> Result<f64, MorseError> {
    let frame = crate::groupoid::NormalFrame {
        base: orbit.representative.clone(),
        columns: orbit.normal_frame.clone(),
    };
    let h = &orbit.normal_hessian;
    let mut worst: f64 = 0.0;
    for g in finite_isotropy_elements(gpd.symmetry(), &orbit.isotropy) {
        let r = gpd.normal_representation(&g, &frame)?;
        worst = worst.max((r.transpose() * h * &r - h).norm());
    }
    Ok(worst)
}

/// Fits `log e(r)` against `log r` where `e(r)` is the worst deviation of
/// `f ∘ retract` from the quadratic model over random normal vectors.
pub fn verify_local_model(
    gpd: &ActionGroupoid,
    f: &Expression,
    orbit: &CriticalOrbit,
    radii: &[f64],
    seed: u64,
) -> Result<LocalModelFit, MorseError> {
    let m = gpd.manifold();
    let model = orbit.quadratic_model();
    let r_dim = orbit.normal_frame.ncols();
    let mut r = rng(seed);
    let dirs: Vec<DVector<f64>> = (0..8)
        .map(|_| {
            let c = crate::sampling::random_unit_vector(&mut r, r_dim.max(1));
            &orbit.normal_frame * c.rows(0, r_dim)
        })
        .collect();
    let mut errors = Vec::with_capacity(radii.len());
    for &radius in radii {
        let mut worst: f64 = 0.0;
        for d in &dirs {
            let v = d * radius;
            let y = m.retract(&orbit.representative, &v).map_err(|_| MorseError::Retraction { radius })?;
            worst = worst.max((f.eval(y.as_slice())? - model.eval(&v)).abs());
        }
        errors.push(worst);
    }
    let scale = orbit.value.abs().max(1.0);
    if errors.iter().all(|e| *e <= 1e-13 * scale) {
        return Ok(LocalModelFit {
            radii: radii.to_vec(),
            errors,
            slope: None,
            pass: true,
        });
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(1e-300).ln()).collect();
    let slope = fit_slope(&xs, &ys);
    Ok(LocalModelFit {
        radii: radii.to_vec(),
        errors,
        slope: Some(slope),
        pass: slope >= 2.7,
    })
}

/// Coefficients of `Σ t^λ` over orientable nondegenerate orbits, padded to
/// `len`.
pub fn morse_polynomial(sym: &Symmetry, orbits: &[CriticalOrbit], len: usize) -> Result<Vec<i64>, MorseError> {
    if !sym.is_finite() {
        return Err(MorseError::TorusPolynomial);
    }
    let mut out = vec![0i64; len];
    for o in orbits.iter().filter(|o| o.orientable && o.nondegenerate) {
        if o.index >= out.len() {
            out.resize(o.index + 1, 0);
        }
        out[o.index] += 1;
    }
    Ok(out)
}

/// Divides `M − P` by `1 + t` exactly.
pub fn check_morse_inequalities(m: &[i64], p: &[i64]) -> InequalityReport {
    let n = m.len().max(p.len());
    let d: Vec<i64> = (0..n)
        .map(|k| m.get(k).copied().unwrap_or(0) - p.get(k).copied().unwrap_or(0))
        .collect();
    let mut remainder = vec![0i64; n.saturating_sub(1)];
    let exact = if n == 0 {
        true
    } else {
        for k in 0..remainder.len() {
            remainder[k] = d[k] - if k > 0 { remainder[k - 1] } else { 0 };
        }
        let last = remainder.last().copied().unwrap_or(0);
        d[n - 1] == last
    };
    while remainder.len() > 1 && remainder.last() == Some(&0) {
        remainder.pop();
    }
    let nonnegative = remainder.iter().all(|c| *c >= 0);
    let lacunary = m.windows(2).all(|w| w[0] == 0 || w[1] == 0);
    InequalityReport {
        remainder,
        exact,
        nonnegative,
        lacunary,
        pass: exact && nonnegative,
    }
}

/// Normal spectra at up to three orbit points, transported frames aside;
/// returns the worst deviation from the representative's spectrum.
pub fn spectrum_orbit_deviation(gpd: &ActionGroupoid, f: &Expression, orbit: &CriticalOrbit, cfg: &SearchConfig) -> Result<f64, MorseError> {
    let mut others: Vec<DVector<f64>> = orbit.points.iter().skip(1).take(2).cloned().collect();
    if let Symmetry::Torus(t) = gpd.symmetry() {
        if orbit.orbit_dim > 0 {
            let mut r = rng(11);
            for _ in 0..2 {
                let theta: Vec<f64> = (0..t.rank()).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
                others.push(t.act(&theta, &orbit.representative));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for y in others {
        let c = classify(gpd, f, &y, cfg)?;
        for (a, b) in c.spectrum.iter().zip(&orbit.spectrum) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Largest gradient norm over all group translates of the representative.
pub fn saturation_defect(gpd: &ActionGroupoid, f: &Expression, orbit: &CriticalOrbit) -> Result<f64, MorseError> {
    let m = gpd.manifold();
    let sym = gpd.symmetry();
    let mut r = rng(17);
    let mut worst: f64 = 0.0;
    for g in sym.sample_elements(&mut r, 16) {
        let y = sym.act(&g, &orbit.representative)?;
        worst = worst.max(m.riemannian_gradient(f, &y)?.norm());
    }
    Ok(worst)
}

/// Relative Frobenius distance between the Riemannian Hessian and the
/// central finite-difference Hessian of `f ∘ retract` in the tangent chart.
pub fn hessian_fd_error(gpd: &ActionGroupoid, f: &Expression, x: &DVector<f64>) -> Result<f64, MorseError> {
    let m = gpd.manifold();
    let h = m.riemannian_hessian(f, x)?;
    let q = &h.frame;
    let d = q.ncols();
    let step = 1e-4;
    let eval = |u: &DVector<f64>| -> Result<f64, MorseError> {
        let y = m.retract(x, &(q * u))?;
        Ok(f.eval(y.as_slice())?)
    };
    let mut fd = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut u = DVector::zeros(d);
                u[i] += si * step;
                u[j] += sj * step;
                acc += w * eval(&u)?;
            }
            fd[(i, j)] = acc / (4.0 * step * step);
            fd[(j, i)] = fd[(i, j)];
        }
    }
    Ok((fd - &h.matrix).norm() / h.matrix.norm().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LevelSetManifold;

    fn sphere(preset: &str, f: &str) -> (ActionGroupoid, Expression) {
        let m = LevelSetManifold::parse(3, &["x1^2+x2^2+x3^2-1"]).unwrap();
        let g = ActionGroupoid::new(m, Symmetry::preset(preset, 3).unwrap()).unwrap();
        (g, Expression::parse(f, 3).unwrap())
    }

    #[test]
    fn inequality_examples() {
        let r = check_morse_inequalities(&[1, 0, 1], &[1, 0, 1]);
        assert!(r.pass && r.lacunary);
        assert_eq!(r.remainder, vec![0]);
        let r = check_morse_inequalities(&[1, 1, 1], &[1]);
        assert!(r.pass);
        assert_eq!(r.remainder, vec![0, 1]);
        let r = check_morse_inequalities(&[1, 1], &[1, 0, 1]);
        assert!(!r.exact && !r.pass);
    }

    #[test]
    fn height_on_sphere() {
        let (g, f) = sphere("trivial", "x3");
        let orbits = find_critical_orbits(&g, &f, &SearchConfig::default()).unwrap();
        assert_eq!(orbits.len(), 2);
        assert!((orbits[0].value + 1.0).abs() < 1e-8);
        assert_eq!(orbits[0].index, 0);
        assert!((orbits[1].value - 1.0).abs() < 1e-8);
        assert_eq!(orbits[1].index, 2);
        assert_eq!(morse_polynomial(g.symmetry(), &orbits, 3).unwrap(), vec![1, 0, 1]);
    }

    #[test]
    fn rp2_orbits() {
        let (g, f) = sphere("antipodal", "x3^2+0.1*x1^2");
        let orbits = find_critical_orbits(&g, &f, &SearchConfig::default()).unwrap();
        let summary: Vec<(usize, Option<usize>, bool)> = orbits.iter().map(|o| (o.index, o.orbit_size, o.orientable)).collect();
        assert_eq!(summary, vec![(0, Some(2), true), (1, Some(2), true), (2, Some(2), true)]);
        assert!((orbits[1].value - 0.1).abs() < 1e-10);
    }

    #[test]
    fn z3_poles_are_orientable_fixed_points() {
        let (g, f) = sphere("cyclic_z 3", "x3");
        let orbits = find_critical_orbits(&g, &f, &SearchConfig::default()).unwrap();
        assert_eq!(orbits.len(), 2);
        for o in &orbits {
            assert_eq!(o.isotropy.order(), Some(3));
            assert!(o.orientable);
            assert!(check_hessian_normal_invariance(&g, o).unwrap() < 1e-12);
        }
    }

    #[test]
    fn reflection_makes_saddle_non_orientable() {
        let m = LevelSetManifold::parse(3, &["x1^2+x2^2+x3^2-1"]).unwrap();
        let flip = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, -1.0, 1.0]));
        let k = crate::symmetry::FiniteGroup::close(3, &[flip], 8).unwrap();
        let g = ActionGroupoid::new(m, Symmetry::Finite(k)).unwrap();
        let f = Expression::parse("x3^2+0.1*x1^2", 3).unwrap();
        let orbits = find_critical_orbits(&g, &f, &SearchConfig::default()).unwrap();
        let saddle = orbits.iter().find(|o| o.index == 1).unwrap();
        assert_eq!(saddle.isotropy.order(), Some(2));
        assert!(!saddle.orientable);
    }

    #[test]
    fn moment_map_fixed_points_have_even_index() {
        let (g, f) = sphere("rotation_z", "x3");
        let orbits = find_critical_orbits(&g, &f, &SearchConfig::default()).unwrap();
        assert_eq!(orbits.len(), 2);
        assert_eq!(orbits.iter().map(|o| o.index).collect::<Vec<_>>(), vec![0, 2]);
        assert!(orbits.iter().all(|o| o.orbit_dim == 0 && o.isotropy.dim() == 1));
        assert!(matches!(morse_polynomial(g.symmetry(), &orbits, 3), Err(MorseError::TorusPolynomial)));
    }

    #[test]
    fn local_model_slope() {
        let (g, f) = sphere("trivial", "x3");
        let orbits = find_critical_orbits(&g, &f, &SearchConfig::default()).unwrap();
        let fit = verify_local_model(&g, &f, &orbits[1], &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3], 3).unwrap();
        assert!(fit.pass, "{fit:?}");
    }

    #[test]
    fn exact_quadratic_model_in_flat_space() {
        let m = LevelSetManifold::new(2, vec![]).unwrap();
        let g = ActionGroupoid::new(m, Symmetry::trivial(2)).unwrap();
        let f = Expression::parse("x1^2-3*x2^2", 2).unwrap();
        let o = classify(&g, &f, &DVector::zeros(2), &SearchConfig::default()).unwrap();
        assert_eq!(o.index, 1);
        let fit = verify_local_model(&g, &f, &o, &[1e-1, 1e-2, 1e-3], 1).unwrap();
        assert!(fit.pass);
        assert!(fit.errors.iter().all(|e| *e < 1e-15));
    }
}
