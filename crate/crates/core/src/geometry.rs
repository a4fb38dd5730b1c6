//! Compact manifolds presented as regular level sets `{c(x) = 0}` in ℝ^N,
//! carrying the induced Euclidean metric.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{ExprError, Expression};
use crate::linalg::pivoted_orthonormal_basis;
use crate::sampling::Halton;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("constraint {index} has dimension {got}, expected {expected}")]
    ConstraintDimension {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("{constraints} constraints leave no manifold in ℝ^{dim}")]
    NoDimension { constraints: usize, dim: usize },
    #[error("constraint Jacobian rank-deficient (smallest singular value {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },
    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("vector has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
}

/// `M = {x ∈ ℝ^N : c_1(x) = … = c_k(x) = 0}`.
#[derive(Clone, Debug)]
pub struct LevelSetManifold {
    dim: usize,
    constraints: Vec<Expression>,
    pub regularity_tol: f64,
    pub projection_tol: f64,
    pub max_projection_iters: usize,
    /// Half-width of the ambient box used when sampling seeds.
    pub box_half_width: f64,
}

/// Orthogonal projector onto `T_xM`.
#[derive(Clone, Debug)]
pub struct TangentProjector {
    pub base: DVector<f64>,
    pub matrix: DMatrix<f64>,
}

/// Riemannian Hessian at a point, both as a form in an orthonormal tangent
/// frame and as the ambient operator `P(∇²f − Σλᵢ∇²cᵢ)P`.
#[derive(Clone, Debug)]
pub struct RiemannianHessian {
    pub frame: DMatrix<f64>,
    pub matrix: DMatrix<f64>,
    pub ambient: DMatrix<f64>,
}

/// Constraint values and Jacobian at a point.
struct Linearization {
    values: DVector<f64>,
    jacobian: DMatrix<f64>,
}

impl LevelSetManifold {
    pub fn new(dim: usize, constraints: Vec<Expression>) -> Result<Self, GeometryError> {
        for (index, c) in constraints.iter().enumerate() {
            if c.dim() != dim {
                return Err(GeometryError::ConstraintDimension {
                    index,
                    got: c.dim(),
                    expected: dim,
                });
            }
        }
        if constraints.len() >= dim {
            return Err(GeometryError::NoDimension {
                constraints: constraints.len(),
                dim,
            });
        }
        Ok(LevelSetManifold {
            dim,
            constraints,
            regularity_tol: 1e-8,
            projection_tol: 1e-12,
            max_projection_iters: 60,
            box_half_width: 2.0,
        })
    }

    pub fn parse(dim: usize, constraints: &[&str]) -> Result<Self, GeometryError> {
        let exprs = constraints
            .iter()
            .map(|t| Expression::parse(t, dim))
            .collect::<Result<Vec<_>, _>>()?;
        LevelSetManifold::new(dim, exprs)
    }

    pub fn with_box(mut self, half_width: f64) -> Self {
        self.box_half_width = half_width;
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn codim(&self) -> usize {
        self.constraints.len()
    }

    pub fn dim(&self) -> usize {
        self.dim - self.constraints.len()
    }

    pub fn constraints(&self) -> &[Expression] {
        &self.constraints
    }

    /// The manifold `Q·M`, cut out by `c ∘ Qᵀ`.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> LevelSetManifold {
        let qt = q.transpose();
        LevelSetManifold {
            constraints: self.constraints.iter().map(|c| c.compose_linear(&qt)).collect(),
            ..self.clone()
        }
    }

    fn check_len(&self, x: &DVector<f64>) -> Result<(), GeometryError> {
        if x.len() != self.dim {
            return Err(GeometryError::Length {
                got: x.len(),
                expected: self.dim,
            });
        }
        Ok(())
    }

    pub fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        self.check_len(x)?;
        let vals = self
            .constraints
            .iter()
            .map(|c| c.eval(x.as_slice()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DVector::from_vec(vals))
    }

    fn linearize(&self, x: &DVector<f64>) -> Result<Linearization, GeometryError> {
        let k = self.constraints.len();
        let mut values = DVector::zeros(k);
        let mut jacobian = DMatrix::zeros(k, self.dim);
        for (i, c) in self.constraints.iter().enumerate() {
            let j = c.eval_jet1(x.as_slice())?;
            values[i] = j.value;
            jacobian.set_row(i, &j.gradient.transpose());
        }
        Ok(Linearization { values, jacobian })
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, GeometryError> {
        self.check_len(x)?;
        Ok(self.linearize(x)?.jacobian)
    }

    /// `(JJᵀ)⁻¹` after checking that the smallest singular value of `J`
    /// exceeds the regularity tolerance.
    fn gram_inverse(&self, j: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
        let k = j.nrows();
        if k == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let gram = j * j.transpose();
        let sigma_min = if k == 1 {
            gram[(0, 0)].sqrt()
        } else {
            j.clone()
                .svd(false, false)
                .singular_values
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        };
        if !(sigma_min > self.regularity_tol) {
            return Err(GeometryError::RankDeficient { sigma_min });
        }
        gram.try_inverse()
            .ok_or(GeometryError::RankDeficient { sigma_min })
    }

    /// Gauss–Newton projection `y ← y − Jᵀ(JJᵀ)⁻¹c(y)` with step halving.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        self.check_len(x)?;
        if self.constraints.is_empty() {
            return Ok(x.clone());
        }
        let mut y = x.clone();
        let mut lin = self.linearize(&y)?;
        let mut res = lin.values.norm();
        for _ in 0..self.max_projection_iters {
            if res < self.projection_tol {
                return Ok(self.polish(y, lin, res));
            }
            let ginv = self.gram_inverse(&lin.jacobian)?;
            let step = lin.jacobian.transpose() * (ginv * &lin.values);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let cand = &y - &step * t;
                if let Ok(cl) = self.linearize(&cand) {
                    let r = cl.values.norm();
                    if r < res || r < self.projection_tol {
                        y = cand;
                        lin = cl;
                        res = r;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res < self.projection_tol {
            Ok(self.polish(y, lin, res))
        } else {
            Err(GeometryError::NoConvergence {
                iterations: self.max_projection_iters,
                residual: res,
            })
        }
    }

    /// Extra full Newton steps below tolerance, down to roundoff.
    fn polish(&self, mut y: DVector<f64>, mut lin: Linearization, mut res: f64) -> DVector<f64> {
        for _ in 0..2 {
            if res == 0.0 {
                break;
            }
            let Ok(ginv) = self.gram_inverse(&lin.jacobian) else { break };
            let cand = &y - lin.jacobian.transpose() * (ginv * &lin.values);
            match self.linearize(&cand) {
                Ok(cl) if cl.values.norm() < res => {
                    res = cl.values.norm();
                    y = cand;
                    lin = cl;
                }
                _ => break,
            }
        }
        y
    }

    pub fn tangent_projector(&self, x: &DVector<f64>) -> Result<TangentProjector, GeometryError> {
        self.check_len(x)?;
        let j = self.linearize(x)?.jacobian;
        Ok(TangentProjector {
            base: x.clone(),
            matrix: self.projector_from_jacobian(&j)?,
        })
    }

    fn projector_from_jacobian(&self, j: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
        let n = self.dim;
        if j.nrows() == 0 {
            return Ok(DMatrix::identity(n, n));
        }
        let ginv = self.gram_inverse(j)?;
        let p = DMatrix::identity(n, n) - j.transpose() * ginv * j;
        Ok((&p + p.transpose()) * 0.5)
    }

    /// Orthonormal basis of `T_xM` (N × dim M), from the projector's
    /// columns by pivoted Gram–Schmidt.
    pub fn tangent_frame(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, GeometryError> {
        let p = self.tangent_projector(x)?;
        Ok(pivoted_orthonormal_basis(&p.matrix, 1e-10, self.dim()))
    }

    pub fn riemannian_gradient(
        &self,
        f: &Expression,
        x: &DVector<f64>,
    ) -> Result<DVector<f64>, GeometryError> {
        self.check_len(x)?;
        let g = f.eval_jet1(x.as_slice())?.gradient;
        if self.constraints.is_empty() {
            return Ok(g);
        }
        let j = self.linearize(x)?.jacobian;
        let ginv = self.gram_inverse(&j)?;
        let lambda = ginv * (&j * &g);
        Ok(g - j.transpose() * lambda)
    }

    pub fn riemannian_hessian(
        &self,
        f: &Expression,
        x: &DVector<f64>,
    ) -> Result<RiemannianHessian, GeometryError> {
        self.check_len(x)?;
        let jf = f.eval_jet2(x.as_slice())?;
        let mut lagrangian = jf.hessian.clone();
        let mut jac = DMatrix::zeros(self.constraints.len(), self.dim);
        let mut hess_c = Vec::with_capacity(self.constraints.len());
        for (i, c) in self.constraints.iter().enumerate() {
            let jc = c.eval_jet2(x.as_slice())?;
            jac.set_row(i, &jc.gradient.transpose());
            hess_c.push(jc.hessian);
        }
        if !self.constraints.is_empty() {
            let ginv = self.gram_inverse(&jac)?;
            let lambda = ginv * (&jac * &jf.gradient);
            for (l, h) in lambda.iter().zip(&hess_c) {
                lagrangian -= h * *l;
            }
        }
        let p = self.projector_from_jacobian(&jac)?;
        let frame = pivoted_orthonormal_basis(&p, 1e-10, self.dim());
        let matrix = frame.transpose() * &lagrangian * &frame;
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let ambient = &p * &lagrangian * &p;
        let ambient = (&ambient + ambient.transpose()) * 0.5;
        Ok(RiemannianHessian {
            frame,
            matrix,
            ambient,
        })
    }

    /// Orthographic retraction: the point `x + v + Jᵀ(x)μ` on `M`, found by
    /// Newton iteration in `μ`, so the correction stays in the normal space
    /// at `x`. Falls back to `project(x + v)`. `R_x(0) = x` exactly.
    pub fn retract(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        self.check_len(x)?;
        self.check_len(v)?;
        if v.iter().all(|c| *c == 0.0) || self.constraints.is_empty() {
            return Ok(x + v);
        }
        let base_t = self.linearize(x)?.jacobian.transpose();
        let shifted = x + v;
        let mut mu = DVector::zeros(self.codim());
        for _ in 0..self.max_projection_iters {
            let y = &shifted + &base_t * &mu;
            let Ok(lin) = self.linearize(&y) else { break };
            let Some(inv) = (&lin.jacobian * &base_t).try_inverse() else {
                break;
            };
            let res = lin.values.norm();
            if res < self.projection_tol {
                // Polish to roundoff along the same normal directions.
                let mut best = (y, res);
                let mut inv = inv;
                let mut vals = lin.values;
                for _ in 0..2 {
                    if best.1 == 0.0 {
                        break;
                    }
                    mu -= inv * vals;
                    let cand = &shifted + &base_t * &mu;
                    let Ok(cl) = self.linearize(&cand) else { break };
                    if cl.values.norm() >= best.1 {
                        break;
                    }
                    best = (cand, cl.values.norm());
                    let Some(next) = (&cl.jacobian * &base_t).try_inverse() else { break };
                    inv = next;
                    vals = cl.values;
                }
                return Ok(best.0);
            }
            mu -= inv * lin.values;
        }
        self.project(&shifted)
    }

    /// `−grad f` at a possibly off-manifold point, using the constraint
    /// Jacobian there. This is the vector field integrated by the flow.
    pub fn descent_field(&self, f: &Expression, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        Ok(-self.riemannian_gradient(f, x)?)
    }

    /// Up to `count` on-manifold points from projected Halton seeds.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(count);
        for x in Halton::new(self.dim, self.box_half_width, seed).take(count * 20) {
            if out.len() >= count {
                break;
            }
            if let Ok(y) = self.project(&x) {
                if self.tangent_projector(&y).is_ok() {
                    out.push(y);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere() -> LevelSetManifold {
        LevelSetManifold::parse(3, &["x1^2+x2^2+x3^2-1"]).unwrap()
    }

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(c)
    }

    #[test]
    fn radial_projection() {
        let s = sphere();
        let y = s.project(&v(&[0.0, 0.0, 2.0])).unwrap();
        assert!((y - v(&[0.0, 0.0, 1.0])).norm() < 1e-12);
        let y = s.project(&v(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(y, v(&[0.0, 0.0, 1.0]));
    }

    #[test]
    fn torus_projection_residual() {
        let t = LevelSetManifold::parse(3, &["(sqrt(x1^2+x2^2)-2)^2+x3^2-1"]).unwrap();
        let y = t.project(&v(&[3.1, 0.0, 0.05])).unwrap();
        assert!(t.residual(&y).unwrap().norm() < 1e-10);
    }

    #[test]
    fn projector_examples() {
        let s = sphere();
        let p = s.tangent_projector(&v(&[0.0, 0.0, 1.0])).unwrap().matrix;
        let want = DMatrix::from_diagonal(&v(&[1.0, 1.0, 0.0]));
        assert!((p - want).norm() < 1e-15);
        let p = s.tangent_projector(&v(&[1.0, 0.0, 0.0])).unwrap().matrix;
        let want = DMatrix::from_diagonal(&v(&[0.0, 1.0, 1.0]));
        assert!((p - want).norm() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let s = sphere();
        let f = Expression::parse("x3", 3).unwrap();
        let g = s.riemannian_gradient(&f, &v(&[1.0, 0.0, 0.0])).unwrap();
        assert!((g - v(&[0.0, 0.0, 1.0])).norm() < 1e-15);
        let g = s.riemannian_gradient(&f, &v(&[0.0, 0.0, 1.0])).unwrap();
        assert!(g.norm() < 1e-15);
    }

    #[test]
    fn hessian_of_height_at_poles() {
        let s = sphere();
        let f = Expression::parse("x3", 3).unwrap();
        let north = s.riemannian_hessian(&f, &v(&[0.0, 0.0, 1.0])).unwrap();
        assert!((north.matrix + DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
        let south = s.riemannian_hessian(&f, &v(&[0.0, 0.0, -1.0])).unwrap();
        assert!((south.matrix - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn retract_examples() {
        let s = sphere();
        let x = v(&[0.0, 0.0, 1.0]);
        assert_eq!(s.retract(&x, &v(&[0.0, 0.0, 0.0])).unwrap(), x);
        let eps: f64 = 1e-2;
        let y = s.retract(&x, &v(&[eps, 0.0, 0.0])).unwrap();
        let want = v(&[eps, 0.0, (1.0 - eps * eps).sqrt()]);
        assert!((y - want).norm() < 1e-10);
    }

    #[test]
    fn rank_deficiency_detected() {
        let s = sphere();
        assert!(matches!(
            s.tangent_projector(&v(&[0.0, 0.0, 0.0])),
            Err(GeometryError::RankDeficient { .. })
        ));
    }

    #[test]
    fn too_many_constraints() {
        assert!(matches!(
            LevelSetManifold::parse(1, &["x1"]),
            Err(GeometryError::NoDimension { .. })
        ));
    }
}
