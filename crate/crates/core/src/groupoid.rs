//! The action groupoid `K⋉M`: arrows `(g, x)` from `x` to `g·x`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{ExprError, Expression};
use crate::geometry::{GeometryError, LevelSetManifold};
use crate::linalg::{orthogonality_defect, pivoted_orthonormal_basis};
use crate::morse::{self, CriticalOrbit, MorseError, SearchConfig};
use crate::sampling::rng;
use crate::symmetry::{GroupElement, Symmetry, SymmetryError};

pub const BASIC_TOL: f64 = 1e-8;
pub const FIX_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupoidError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("symmetry acts on ℝ^{symmetry} but the manifold lives in ℝ^{manifold}")]
    DimensionMismatch { symmetry: usize, manifold: usize },
    #[error("arrows are not composable")]
    NotComposable,
    #[error("element does not fix the base point (moved by {distance:e})")]
    NotIsotropy { distance: f64 },
    #[error("normal frame has rank {got}, expected {expected}")]
    FrameRank { got: usize, expected: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arrow {
    pub element: GroupElement,
    pub source: DVector<f64>,
    pub target: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct NormalFrame {
    pub base: DVector<f64>,
    pub columns: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasicReport {
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub samples: usize,
    pub units: bool,
    pub associativity: bool,
    pub inverses: bool,
}

impl AxiomReport {
    pub fn pass(&self) -> bool {
        self.units && self.associativity && self.inverses
    }
}

/// One row of a critical inventory, compared exactly between presentations.
/// Values are compared after rounding to 1e-8.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct InventoryRow {
    pub value_e8: i64,
    pub index: usize,
    pub orbit_size: Option<usize>,
    pub isotropy_order: Option<usize>,
    pub orientable: bool,
}

pub fn inventory(orbits: &[CriticalOrbit]) -> Vec<InventoryRow> {
    let mut rows: Vec<InventoryRow> = orbits
        .iter()
        .map(|o| InventoryRow {
            value_e8: (o.value * 1e8).round() as i64,
            index: o.index,
            orbit_size: o.orbit_size,
            isotropy_order: o.isotropy.order(),
            orientable: o.orientable,
        })
        .collect();
    rows.sort();
    rows
}

#[derive(Clone, Debug)]
pub struct PresentationCheck {
    pub original: Vec<InventoryRow>,
    pub conjugated: Vec<InventoryRow>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ActionGroupoid {
    manifold: LevelSetManifold,
    symmetry: Symmetry,
}

impl ActionGroupoid {
    pub fn new(manifold: LevelSetManifold, symmetry: Symmetry) -> Result<Self, GroupoidError> {
        if manifold.ambient_dim() != symmetry.dim() {
            return Err(GroupoidError::DimensionMismatch {
                symmetry: symmetry.dim(),
                manifold: manifold.ambient_dim(),
            });
        }
        Ok(ActionGroupoid { manifold, symmetry })
    }

    pub fn manifold(&self) -> &LevelSetManifold {
        &self.manifold
    }

    pub fn symmetry(&self) -> &Symmetry {
        &self.symmetry
    }

    pub fn arrow(&self, g: GroupElement, x: &DVector<f64>) -> Result<Arrow, GroupoidError> {
        let target = self.symmetry.act(&g, x)?;
        Ok(Arrow {
            element: g,
            source: x.clone(),
            target,
        })
    }

    pub fn unit(&self, x: &DVector<f64>) -> Arrow {
        Arrow {
            element: self.symmetry.identity(),
            source: x.clone(),
            target: x.clone(),
        }
    }

    /// `h ∘ g`, defined when `s(h) = t(g)`.
    pub fn compose(&self, h: &Arrow, g: &Arrow) -> Result<Arrow, GroupoidError> {
        if h.source != g.target {
            return Err(GroupoidError::NotComposable);
        }
        Ok(Arrow {
            element: self.symmetry.compose(&h.element, &g.element)?,
            source: g.source.clone(),
            target: h.target.clone(),
        })
    }

    pub fn inverse(&self, g: &Arrow) -> Result<Arrow, GroupoidError> {
        Ok(Arrow {
            element: self.symmetry.inverse(&g.element)?,
            source: g.target.clone(),
            target: g.source.clone(),
        })
    }

    fn same_element(&self, a: &GroupElement, b: &GroupElement) -> bool {
        match (a, b) {
            (GroupElement::Finite(i), GroupElement::Finite(j)) => i == j,
            (GroupElement::Torus(s), GroupElement::Torus(t)) => s.iter().zip(t).all(|(x, y)| {
                let d = (x - y).rem_euclid(std::f64::consts::TAU);
                d.min(std::f64::consts::TAU - d) < 1e-12
            }),
            _ => false,
        }
    }

    /// Units, associativity and inverses on sampled composable triples.
    pub fn check_axioms(&self, samples: usize, seed: u64) -> Result<AxiomReport, GroupoidError> {
        let points = self.manifold.sample_points(samples, seed);
        let mut r = rng(seed);
        let elements = self.symmetry.sample_elements(&mut r, 3 * samples.max(1));
        let mut report = AxiomReport {
            samples: points.len(),
            units: true,
            associativity: true,
            inverses: true,
        };
        for (i, x) in points.iter().enumerate() {
            let pick = |k: usize| elements[(7 * i + 3 * k) % elements.len()].clone();
            let a = self.arrow(pick(0), x)?;
            let b = self.arrow(pick(1), &a.target)?;
            let c = self.arrow(pick(2), &b.target)?;
            let ua = self.compose(&self.unit(&a.target), &a)?;
            let au = self.compose(&a, &self.unit(&a.source))?;
            report.units &= ua == a && au == a;
            report.units &= self.unit(x).source == *x && self.unit(x).target == *x;
            let left = self.compose(&self.compose(&c, &b)?, &a)?;
            let right = self.compose(&c, &self.compose(&b, &a)?)?;
            report.associativity &= left.source == right.source
                && left.target == right.target
                && self.same_element(&left.element, &right.element);
            let inv = self.inverse(&a)?;
            let twice = self.inverse(&inv)?;
            report.inverses &= inv.source == a.target
                && inv.target == a.source
                && twice.source == a.source
                && twice.target == a.target
                && self.same_element(&twice.element, &a.element);
            let loop_ = self.compose(&inv, &a)?;
            report.inverses &= loop_.source == a.source
                && loop_.target == a.source
                && self.same_element(&loop_.element, &self.symmetry.identity());
        }
        Ok(report)
    }

    /// `max |f(t(g,x)) − f(s(g,x))|` over sampled arrows.
    pub fn check_basic(&self, f: &Expression, samples: usize, seed: u64) -> Result<BasicReport, GroupoidError> {
        let points = self.manifold.sample_points(samples, seed);
        let mut r = rng(seed.wrapping_add(1));
        let elements = self.symmetry.sample_elements(&mut r, 16);
        let mut max_deviation: f64 = 0.0;
        for x in &points {
            let fx = f.eval(x.as_slice())?;
            for g in &elements {
                let y = self.symmetry.act(g, x)?;
                max_deviation = max_deviation.max((f.eval(y.as_slice())? - fx).abs());
            }
        }
        Ok(BasicReport {
            max_deviation,
            pass: max_deviation < BASIC_TOL,
        })
    }

    /// Orthonormal basis of `T_x𝒪` (empty for finite groups).
    pub fn orbit_tangent_frame(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, GroupoidError> {
        let n = self.manifold.ambient_dim();
        match &self.symmetry {
            Symmetry::Finite(_) => Ok(DMatrix::zeros(n, 0)),
            Symmetry::Torus(t) => {
                let p = self.manifold.tangent_projector(x)?.matrix;
                let xi = p * t.fundamental_vectors(x);
                Ok(pivoted_orthonormal_basis(&xi, 1e-8, t.rank()))
            }
        }
    }

    pub fn normal_frame(&self, x: &DVector<f64>) -> Result<NormalFrame, GroupoidError> {
        let p = self.manifold.tangent_projector(x)?.matrix;
        let orbit = self.orbit_tangent_frame(x)?;
        let expected = self.manifold.dim() - orbit.ncols();
        let complement = &p - &orbit * orbit.transpose();
        let columns = pivoted_orthonormal_basis(&complement, 1e-8, expected);
        if columns.ncols() != expected {
            return Err(GroupoidError::FrameRank {
                got: columns.ncols(),
                expected,
            });
        }
        Ok(NormalFrame {
            base: x.clone(),
            columns,
        })
    }

    /// Coordinates of `g·(frame columns)` in the frame; `g` must fix the base.
    pub fn normal_representation(&self, g: &GroupElement, frame: &NormalFrame) -> Result<DMatrix<f64>, GroupoidError> {
        let m = self.symmetry.matrix(g)?;
        let distance = (&m * &frame.base - &frame.base).norm();
        if distance >= FIX_TOL {
            return Err(GroupoidError::NotIsotropy { distance });
        }
        Ok(frame.columns.transpose() * m * &frame.columns)
    }

    /// The presentation `(Q·M, QKQ⁻¹)`.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> ActionGroupoid {
        ActionGroupoid {
            manifold: self.manifold.conjugate(q),
            symmetry: self.symmetry.conjugate(q),
        }
    }

    /// Compares critical inventories of `(M, K, f)` and `(Q·M, QKQ⁻¹, f∘Q⁻¹)`.
    pub fn conjugate_presentation_check(
        &self,
        f: &Expression,
        q: &DMatrix<f64>,
        search: &SearchConfig,
    ) -> Result<PresentationCheck, MorseError> {
        debug_assert!(orthogonality_defect(q) < 1e-10);
        let original = inventory(&morse::find_critical_orbits(self, f, search)?);
        let other = self.conjugate(q);
        let g = f.compose_linear(&q.transpose());
        let conjugated = inventory(&morse::find_critical_orbits(&other, &g, search)?);
        let pass = original == conjugated;
        Ok(PresentationCheck {
            original,
            conjugated,
            pass,
        })
    }
}
