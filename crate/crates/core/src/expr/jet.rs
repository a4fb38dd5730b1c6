//! Forward propagation of (value, gradient, Hessian) through a syntax tree.

use nalgebra::{DMatrix, DVector};

use super::{ExprError, Func, Node, MAX_DIM};

/// Value and gradient of a scalar field at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet1 {
    pub value: f64,
    pub gradient: DVector<f64>,
}

/// Value, gradient and (exactly symmetric) Hessian at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Arithmetic needed by the tree walker. `n` is the active dimension.
trait Dual: Sized {
    fn constant(c: f64, n: usize) -> Self;
    fn variable(i: usize, x: f64, n: usize) -> Self;
    fn value(&self) -> f64;
    fn add(&self, o: &Self, n: usize) -> Self;
    fn sub(&self, o: &Self, n: usize) -> Self;
    fn mul(&self, o: &Self, n: usize) -> Self;
    /// φ(self) given φ, φ', φ'' at self.value().
    fn chain(&self, d0: f64, d1: f64, d2: f64, n: usize) -> Self;
    fn finite(&self, n: usize) -> bool;
}

impl Dual for f64 {
    fn constant(c: f64, _: usize) -> Self {
        c
    }
    fn variable(_: usize, x: f64, _: usize) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self, _: usize) -> Self {
        self + o
    }
    fn sub(&self, o: &Self, _: usize) -> Self {
        self - o
    }
    fn mul(&self, o: &Self, _: usize) -> Self {
        self * o
    }
    fn chain(&self, d0: f64, _: f64, _: f64, _: usize) -> Self {
        d0
    }
    fn finite(&self, _: usize) -> bool {
        self.is_finite()
    }
}

#[derive(Clone, Copy)]
struct D1 {
    v: f64,
    g: [f64; MAX_DIM],
}

impl Dual for D1 {
    fn constant(c: f64, _: usize) -> Self {
        D1 {
            v: c,
            g: [0.0; MAX_DIM],
        }
    }
    fn variable(i: usize, x: f64, _: usize) -> Self {
        let mut g = [0.0; MAX_DIM];
        g[i] = 1.0;
        D1 { v: x, g }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn add(&self, o: &Self, n: usize) -> Self {
        let mut r = *self;
        r.v += o.v;
        for i in 0..n {
            r.g[i] += o.g[i];
        }
        r
    }
    fn sub(&self, o: &Self, n: usize) -> Self {
        let mut r = *self;
        r.v -= o.v;
        for i in 0..n {
            r.g[i] -= o.g[i];
        }
        r
    }
    fn mul(&self, o: &Self, n: usize) -> Self {
        let mut r = D1::constant(self.v * o.v, n);
        for i in 0..n {
            r.g[i] = self.v * o.g[i] + o.v * self.g[i];
        }
        r
    }
    fn chain(&self, d0: f64, d1: f64, _: f64, n: usize) -> Self {
        let mut r = D1::constant(d0, n);
        for i in 0..n {
            r.g[i] = d1 * self.g[i];
        }
        r
    }
    fn finite(&self, n: usize) -> bool {
        self.v.is_finite() && self.g[..n].iter().all(|g| g.is_finite())
    }
}

#[derive(Clone, Copy)]
struct D2 {
    v: f64,
    g: [f64; MAX_DIM],
    h: [[f64; MAX_DIM]; MAX_DIM],
}

impl Dual for D2 {
    fn constant(c: f64, _: usize) -> Self {
        D2 {
            v: c,
            g: [0.0; MAX_DIM],
            h: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }
    fn variable(i: usize, x: f64, n: usize) -> Self {
        let mut r = D2::constant(x, n);
        r.g[i] = 1.0;
        r
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn add(&self, o: &Self, n: usize) -> Self {
        let mut r = *self;
        r.v += o.v;
        for i in 0..n {
            r.g[i] += o.g[i];
            for j in 0..n {
                r.h[i][j] += o.h[i][j];
            }
        }
        r
    }
    fn sub(&self, o: &Self, n: usize) -> Self {
        let mut r = *self;
        r.v -= o.v;
        for i in 0..n {
            r.g[i] -= o.g[i];
            for j in 0..n {
                r.h[i][j] -= o.h[i][j];
            }
        }
        r
    }
    fn mul(&self, o: &Self, n: usize) -> Self {
        let (a, b) = (self, o);
        let mut r = D2::constant(a.v * b.v, n);
        for i in 0..n {
            r.g[i] = a.v * b.g[i] + b.v * a.g[i];
            for j in i..n {
                let hij = a.v * b.h[i][j]
                    + b.v * a.h[i][j]
                    + (a.g[i] * b.g[j] + b.g[i] * a.g[j]);
                r.h[i][j] = hij;
                r.h[j][i] = hij;
            }
        }
        r
    }
    fn chain(&self, d0: f64, d1: f64, d2: f64, n: usize) -> Self {
        let mut r = D2::constant(d0, n);
        for i in 0..n {
            r.g[i] = d1 * self.g[i];
            for j in i..n {
                let hij = d1 * self.h[i][j] + d2 * self.g[i] * self.g[j];
                r.h[i][j] = hij;
                r.h[j][i] = hij;
            }
        }
        r
    }
    fn finite(&self, n: usize) -> bool {
        self.v.is_finite()
            && self.g[..n].iter().all(|g| g.is_finite())
            && self.h[..n].iter().all(|row| row[..n].iter().all(|h| h.is_finite()))
    }
}

fn domain(node: usize, what: impl Into<String>) -> ExprError {
    ExprError::Domain {
        node,
        what: what.into(),
    }
}

/// Walks `node` in preorder; `id` is the preorder index of `node`.
fn walk<D: Dual>(node: &Node, x: &[f64], n: usize, id: &mut usize) -> Result<D, ExprError> {
    let here = *id;
    *id += 1;
    let out = match node {
        Node::Var(i) => D::variable(*i, x[*i], n),
        Node::Const(c) => D::constant(*c, n),
        Node::Add(a, b) => {
            let a = walk::<D>(a, x, n, id)?;
            let b = walk::<D>(b, x, n, id)?;
            a.add(&b, n)
        }
        Node::Sub(a, b) => {
            let a = walk::<D>(a, x, n, id)?;
            let b = walk::<D>(b, x, n, id)?;
            a.sub(&b, n)
        }
        Node::Mul(a, b) => {
            let a = walk::<D>(a, x, n, id)?;
            let b = walk::<D>(b, x, n, id)?;
            a.mul(&b, n)
        }
        Node::Div(a, b) => {
            let a = walk::<D>(a, x, n, id)?;
            let b = walk::<D>(b, x, n, id)?;
            let u = b.value();
            if u == 0.0 {
                return Err(domain(here, "division by zero"));
            }
            let recip = b.chain(1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u), n);
            a.mul(&recip, n)
        }
        Node::Pow(a, k) => {
            let a = walk::<D>(a, x, n, id)?;
            let u = a.value();
            let k = *k;
            if k == 0 {
                D::constant(1.0, n)
            } else {
                if k < 0 && u == 0.0 {
                    return Err(domain(here, "zero raised to a negative power"));
                }
                let kf = k as f64;
                let d0 = u.powi(k);
                let d1 = if k == 1 { 1.0 } else { kf * u.powi(k - 1) };
                let d2 = match k {
                    1 => 0.0,
                    2 => 2.0,
                    _ => kf * (kf - 1.0) * u.powi(k - 2),
                };
                a.chain(d0, d1, d2, n)
            }
        }
        Node::Neg(a) => {
            let a = walk::<D>(a, x, n, id)?;
            a.chain(-a.value(), -1.0, 0.0, n)
        }
        Node::Func(func, a) => {
            let a = walk::<D>(a, x, n, id)?;
            let u = a.value();
            match func {
                Func::Sin => a.chain(u.sin(), u.cos(), -u.sin(), n),
                Func::Cos => a.chain(u.cos(), -u.sin(), -u.cos(), n),
                Func::Exp => {
                    let e = u.exp();
                    a.chain(e, e, e, n)
                }
                Func::Sqrt => {
                    if u < 0.0 {
                        return Err(domain(here, format!("sqrt of negative value {u}")));
                    }
                    let s = u.sqrt();
                    a.chain(s, 0.5 / s, -0.25 / (s * u), n)
                }
            }
        }
    };
    if !out.finite(n) {
        return Err(domain(here, "non-finite value or derivative"));
    }
    Ok(out)
}

pub(super) fn eval_value(root: &Node, x: &[f64]) -> Result<f64, ExprError> {
    let mut id = 0;
    walk::<f64>(root, x, x.len(), &mut id)
}

pub(super) fn eval_jet1(root: &Node, x: &[f64], n: usize) -> Result<Jet1, ExprError> {
    let mut id = 0;
    let d = walk::<D1>(root, x, n, &mut id)?;
    Ok(Jet1 {
        value: d.v,
        gradient: DVector::from_row_slice(&d.g[..n]),
    })
}

pub(super) fn eval_jet2(root: &Node, x: &[f64], n: usize) -> Result<Jet2, ExprError> {
    let mut id = 0;
    let d = walk::<D2>(root, x, n, &mut id)?;
    let hessian = DMatrix::from_fn(n, n, |i, j| if i <= j { d.h[i][j] } else { d.h[j][i] });
    Ok(Jet2 {
        value: d.v,
        gradient: DVector::from_row_slice(&d.g[..n]),
        hessian,
    })
}

#[cfg(test)]
mod tests {
    use super::super::Expression;
    use super::*;

    #[test]
    fn height_function_jet() {
        let e = Expression::parse("x3", 3).unwrap();
        let j = e.eval_jet2(&[0.3, -0.2, 0.9]).unwrap();
        assert_eq!(j.gradient.as_slice(), &[0.0, 0.0, 1.0]);
        assert!(j.hessian.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn polynomial_jet() {
        let e = Expression::parse("x3^2+0.1*x1^2", 3).unwrap();
        assert!((e.eval(&[1.0, 0.0, 0.0]).unwrap() - 0.1).abs() < 1e-15);
        let j = e.eval_jet2(&[1.0, 0.0, 0.0]).unwrap();
        assert!((j.gradient[0] - 0.2).abs() < 1e-15);
        assert_eq!(j.gradient[1], 0.0);
        assert_eq!(j.gradient[2], 0.0);
        let diag = [0.2, 0.0, 2.0];
        for i in 0..3 {
            for k in 0..3 {
                let want = if i == k { diag[i] } else { 0.0 };
                assert!((j.hessian[(i, k)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn value_examples() {
        let e = Expression::parse("x3", 3).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0, 1.0]).unwrap(), 1.0);
        let s = Expression::parse("x1^2+x2^2+x3^2-1", 3).unwrap();
        assert_eq!(s.eval(&[0.0, 0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors_carry_node() {
        let e = Expression::parse("1 + sqrt(x1)", 1).unwrap();
        match e.eval(&[-1.0]).unwrap_err() {
            ExprError::Domain { node, .. } => assert_eq!(node, 2),
            other => panic!("{other:?}"),
        }
        let e = Expression::parse("1 / (x1 - 1)", 1).unwrap();
        assert!(matches!(e.eval(&[1.0]), Err(ExprError::Domain { node: 0, .. })));
        // value is fine at 0 but the derivative of sqrt is not
        let e = Expression::parse("sqrt(x1)", 1).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 0.0);
        assert!(e.eval_jet1(&[0.0]).is_err());
    }

    #[test]
    fn wrong_point_length() {
        let e = Expression::parse("x1", 2).unwrap();
        assert!(matches!(
            e.eval(&[1.0]),
            Err(ExprError::PointLength { got: 1, expected: 2 })
        ));
    }
}
