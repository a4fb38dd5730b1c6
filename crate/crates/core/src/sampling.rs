//! Deterministic point sources: shifted Halton sequences and seeded RNGs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = inv;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// Halton sequence in `[-half_width, half_width]^dim` with a
/// Cranley–Patterson rotation drawn from `seed`.
pub struct Halton {
    dim: usize,
    half_width: f64,
    shift: Vec<f64>,
    next: u64,
}

impl Halton {
    pub fn new(dim: usize, half_width: f64, seed: u64) -> Self {
        assert!(dim <= PRIMES.len());
        let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
        let shift = (0..dim).map(|_| r.random::<f64>()).collect();
        Halton {
            dim,
            half_width,
            shift,
            next: 1,
        }
    }
}

impl Iterator for Halton {
    type Item = DVector<f64>;

    fn next(&mut self) -> Option<DVector<f64>> {
        let i = self.next;
        self.next += 1;
        Some(DVector::from_fn(self.dim, |k, _| {
            let u = (radical_inverse(i, PRIMES[k]) + self.shift[k]).fract();
            (2.0 * u - 1.0) * self.half_width
        }))
    }
}

pub fn random_unit_vector<R: Rng>(r: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Rotation by `angle` about the unit `axis` in ℝ³.
pub fn axis_rotation(axis: &DVector<f64>, angle: f64) -> DMatrix<f64> {
    let a = axis / axis.norm();
    let k = DMatrix::from_row_slice(3, 3, &[0.0, -a[2], a[1], a[2], 0.0, -a[0], -a[1], a[0], 0.0]);
    DMatrix::identity(3, 3) + &k * angle.sin() + &k * &k * (1.0 - angle.cos())
}

/// A random orthogonal matrix: a random-axis rotation in ℝ³, otherwise the
/// sign-fixed Q factor of a random matrix.
pub fn random_orthogonal<R: Rng>(r: &mut R, dim: usize) -> DMatrix<f64> {
    if dim == 3 {
        let axis = random_unit_vector(r, 3);
        let angle = r.random_range(0.0..std::f64::consts::TAU);
        return axis_rotation(&axis, angle);
    }
    let m = DMatrix::from_fn(dim, dim, |_, _| r.random_range(-1.0..1.0));
    let qr = m.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..dim {
        if rr[(j, j)] < 0.0 {
            let c = -q.column(j).into_owned();
            q.set_column(j, &c);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthogonality_defect;

    #[test]
    fn halton_is_deterministic_and_bounded() {
        let a: Vec<_> = Halton::new(3, 2.0, 7).take(50).collect();
        let b: Vec<_> = Halton::new(3, 2.0, 7).take(50).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.iter().all(|c| c.abs() <= 2.0)));
        let c: Vec<_> = Halton::new(3, 2.0, 8).take(50).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut r = rng(3);
        for dim in [2, 3, 4] {
            let q = random_orthogonal(&mut r, dim);
            assert!(orthogonality_defect(&q) < 1e-12);
        }
    }
}
