//! Cochain complexes over ℤ/2 and ℚ with exact arithmetic: the Witten
//! complex of a flow census and the truncated nerve double complex of a
//! finite group action.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::symmetry::FiniteGroup;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("matrix of degree {degree} is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    Shape {
        degree: usize,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("consecutive differentials do not compose to zero at degree {0}")]
    NotComplex(usize),
    #[error("double complex identity `{0}` fails")]
    DoubleComplex(&'static str),
    #[error("degree {degree} needs a truncation of at least {need} nerve levels, have {have}")]
    Truncation { degree: usize, need: usize, have: usize },
    #[error("ℤ/2 coefficients need integer entries")]
    NonIntegerEntry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Field {
    #[serde(rename = "Z2")]
    Z2,
    #[serde(rename = "Q")]
    Q,
}

/// Dense matrix with exact rational entries. Over ℤ/2 entries are read
/// modulo 2.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

fn parity(x: &BigRational) -> Result<bool, ComplexError> {
    if !x.is_integer() {
        return Err(ComplexError::NonIntegerEntry);
    }
    Ok((x.numer() % BigInt::from(2)) != BigInt::zero())
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExactMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        ExactMatrix {
            rows,
            cols,
            data: entries.iter().map(|&e| BigRational::from_integer(e.into())).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ExactMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigRational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigRational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: i64) {
        let e = &mut self.data[r * self.cols + c];
        *e += BigRational::from_integer(v.into());
    }

    pub fn mul(&self, other: &ExactMatrix) -> ExactMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = ExactMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ExactMatrix) -> ExactMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ExactMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: i64) -> ExactMatrix {
        let s = BigRational::from_integer(s.into());
        ExactMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * &s).collect(),
        }
    }

    pub fn is_zero_in(&self, field: Field) -> Result<bool, ComplexError> {
        match field {
            Field::Q => Ok(self.data.iter().all(|e| e.is_zero())),
            Field::Z2 => {
                for e in &self.data {
                    if parity(e)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Rank by bit elimination (ℤ/2) or fraction-free Bareiss elimination
    /// on integers (ℚ, rows cleared of denominators first).
    pub fn rank(&self, field: Field) -> Result<usize, ComplexError> {
        match field {
            Field::Z2 => self.rank_z2(),
            Field::Q => Ok(self.rank_q()),
        }
    }

    fn rank_z2(&self) -> Result<usize, ComplexError> {
        let words = self.cols.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut bits = vec![0u64; words];
            for c in 0..self.cols {
                if parity(self.get(r, c))? {
                    bits[c / 64] |= 1 << (c % 64);
                }
            }
            rows.push(bits);
        }
        let mut rank = 0;
        for c in 0..self.cols {
            let (w, b) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & b != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] & b != 0 {
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
        }
        Ok(rank)
    }

    fn rank_q(&self) -> usize {
        let mut m: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                let lcm = row
                    .iter()
                    .fold(BigInt::one(), |acc, e| num_integer::Integer::lcm(&acc, e.denom()));
                row.iter().map(|e| (e * BigRational::from_integer(lcm.clone())).to_integer()).collect()
            })
            .collect();
        let mut rank = 0;
        let mut prev = BigInt::one();
        for c in 0..self.cols {
            let Some(p) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
                continue;
            };
            m.swap(rank, p);
            for r in rank + 1..m.len() {
                for k in c + 1..self.cols {
                    let v = &m[rank][c] * &m[r][k] - &m[r][c] * &m[rank][k];
                    m[r][k] = v / &prev;
                }
                m[r][c] = BigInt::zero();
            }
            prev = m[rank][c].abs();
            if prev.is_zero() {
                prev = BigInt::one();
            }
            rank += 1;
        }
        rank
    }

    /// Nonzero entries as `(row, col, numerator, denominator)`.
    pub fn sparse_entries(&self) -> Vec<(usize, usize, String, String)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let e = self.get(r, c);
                if !e.is_zero() {
                    out.push((r, c, e.numer().to_string(), e.denom().to_string()));
                }
            }
        }
        out
    }
}

/// `C^0 → C^1 → …`, `differentials[k] : C^k → C^{k+1}` stored as
/// `dim C^{k+1} × dim C^k`.
#[derive(Clone, Debug)]
pub struct ChainComplexOverField {
    pub field: Field,
    pub labels: Vec<Vec<String>>,
    pub differentials: Vec<ExactMatrix>,
}

#[derive(Serialize)]
pub struct ComplexDump {
    pub field: Field,
    pub generators: Vec<Vec<String>>,
    pub differentials: Vec<Vec<(usize, usize, String, String)>>,
}

impl ChainComplexOverField {
    pub fn new(field: Field, labels: Vec<Vec<String>>, differentials: Vec<ExactMatrix>) -> Result<Self, ComplexError> {
        for (k, d) in differentials.iter().enumerate() {
            let want_rows = labels.get(k + 1).map_or(0, |l| l.len());
            let want_cols = labels.get(k).map_or(0, |l| l.len());
            if d.rows() != want_rows || d.cols() != want_cols {
                return Err(ComplexError::Shape {
                    degree: k,
                    rows: d.rows(),
                    cols: d.cols(),
                    want_rows,
                    want_cols,
                });
            }
        }
        for k in 1..differentials.len() {
            if !differentials[k].mul(&differentials[k - 1]).is_zero_in(field)? {
                return Err(ComplexError::NotComplex(k - 1));
            }
        }
        Ok(ChainComplexOverField {
            field,
            labels,
            differentials,
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.len()).collect()
    }

    /// `b_k = dim C^k − rank d_k − rank d_{k−1}`.
    pub fn homology_ranks(&self) -> Result<Vec<usize>, ComplexError> {
        let ranks = self
            .differentials
            .iter()
            .map(|d| d.rank(self.field))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self
            .labels
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let out = ranks.get(k).copied().unwrap_or(0);
                let inc = if k > 0 { ranks.get(k - 1).copied().unwrap_or(0) } else { 0 };
                l.len() - out - inc
            })
            .collect())
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.labels
            .iter()
            .enumerate()
            .map(|(k, l)| if k % 2 == 0 { l.len() as i64 } else { -(l.len() as i64) })
            .sum()
    }

    pub fn dump(&self) -> ComplexDump {
        ComplexDump {
            field: self.field,
            generators: self.labels.clone(),
            differentials: self.differentials.iter().map(|d| d.sparse_entries()).collect(),
        }
    }
}

/// Generators graded by index with `counts[(upper, lower)]` the (signed)
/// number of lines from `upper` to `lower`.
pub fn build_witten_complex(
    field: Field,
    generators: &[(String, usize)],
    counts: &dyn Fn(usize, usize) -> i64,
    top: usize,
) -> Result<ChainComplexOverField, ComplexError> {
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); top + 1];
    let mut ids: Vec<Vec<usize>> = vec![Vec::new(); top + 1];
    for (i, (name, deg)) in generators.iter().enumerate() {
        if *deg <= top {
            labels[*deg].push(name.clone());
            ids[*deg].push(i);
        }
    }
    let differentials = (0..top)
        .map(|k| {
            let mut d = ExactMatrix::zeros(ids[k + 1].len(), ids[k].len());
            for (r, &hi) in ids[k + 1].iter().enumerate() {
                for (c, &lo) in ids[k].iter().enumerate() {
                    d.add_to(r, c, counts(hi, lo));
                }
            }
            d
        })
        .collect();
    ChainComplexOverField::new(field, labels, differentials)
}

/// Nerve elements `(g_1, …, g_n; x)` flattened with `x` fastest.
fn nerve_len(order: usize, n: usize, points: usize) -> usize {
    order.pow(n as u32) * points
}

fn decode(mut idx: usize, order: usize, n: usize, points: usize) -> (Vec<usize>, usize) {
    let x = idx % points;
    idx /= points;
    let mut g = Vec::with_capacity(n);
    for _ in 0..n {
        g.push(idx % order);
        idx /= order;
    }
    (g, x)
}

fn encode(g: &[usize], x: usize, order: usize, points: usize) -> usize {
    let mut idx = 0;
    for &e in g.iter().rev() {
        idx = idx * order + e;
    }
    idx * points + x
}

/// Face `d_k` of the nerve of `K⋉Crit`; `act[g][x]` is the index of `g·x`.
pub fn face(group: &FiniteGroup, act: &[Vec<usize>], g: &[usize], x: usize, k: usize) -> (Vec<usize>, usize) {
    let n = g.len();
    if k == 0 {
        (g[1..].to_vec(), act[g[0]][x])
    } else if k == n {
        (g[..n - 1].to_vec(), x)
    } else {
        let mut out = Vec::with_capacity(n - 1);
        out.extend_from_slice(&g[..k - 1]);
        out.push(group.mul(g[k], g[k - 1]));
        out.extend_from_slice(&g[k + 1..]);
        (out, x)
    }
}

/// Checks `d_i d_j = d_{j−1} d_i` for `i < j` on every nerve element up to
/// level `n_max`.
pub fn check_simplicial_identities(group: &FiniteGroup, act: &[Vec<usize>], n_max: usize) -> bool {
    let points = act.first().map_or(0, |r| r.len());
    for n in 2..=n_max {
        for idx in 0..nerve_len(group.order(), n, points) {
            let (g, x) = decode(idx, group.order(), n, points);
            for j in 1..=n {
                for i in 0..j {
                    let (a, ax) = face(group, act, &g, x, j);
                    let lhs = face(group, act, &a, ax, i);
                    let (b, bx) = face(group, act, &g, x, i);
                    let rhs = face(group, act, &b, bx, j - 1);
                    if lhs != rhs {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// The grid `C^{n,i}` = functions on `K^n × Crit_i`, `0 ≤ n ≤ n_max`.
#[derive(Clone, Debug)]
pub struct MorseDoubleComplex {
    pub field: Field,
    pub n_max: usize,
    pub group_order: usize,
    /// Number of critical points per Morse degree.
    pub crit: Vec<usize>,
    /// `delta_bar[i][n] : C^{n,i} → C^{n+1,i}`, `n < n_max`.
    pub delta_bar: Vec<Vec<ExactMatrix>>,
    /// `partial[n][i] : C^{n,i} → C^{n,i+1}`.
    pub partial: Vec<Vec<ExactMatrix>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoubleComplexChecks {
    pub delta_bar_squared_zero: bool,
    pub partial_squared_zero: bool,
    pub commute: bool,
    pub total_squared_zero: bool,
}

impl DoubleComplexChecks {
    pub fn pass(&self) -> bool {
        self.delta_bar_squared_zero && self.partial_squared_zero && self.commute && self.total_squared_zero
    }
}

/// `act[i][g][x]` gives the index of `g·x` within `Crit_i`;
/// `witten[i]` is the point-level `Crit_{i+1} × Crit_i` count matrix.
pub fn build_nerve_double_complex(
    field: Field,
    group: &FiniteGroup,
    act: &[Vec<Vec<usize>>],
    witten: &[ExactMatrix],
    n_max: usize,
) -> Result<MorseDoubleComplex, ComplexError> {
    let order = group.order();
    let crit: Vec<usize> = act.iter().map(|a| a.first().map_or(0, |r| r.len())).collect();
    let delta_bar: Vec<Vec<ExactMatrix>> = crit
        .iter()
        .enumerate()
        .map(|(i, &pts)| {
            (0..n_max)
                .map(|n| {
                    let rows = nerve_len(order, n + 1, pts);
                    let cols = nerve_len(order, n, pts);
                    let mut m = ExactMatrix::zeros(rows, cols);
                    for r in 0..rows {
                        let (g, x) = decode(r, order, n + 1, pts);
                        for k in 0..=n + 1 {
                            let (h, y) = face(group, &act[i], &g, x, k);
                            m.add_to(r, encode(&h, y, order, pts), if k % 2 == 0 { 1 } else { -1 });
                        }
                    }
                    m
                })
                .collect()
        })
        .collect();
    let partial: Vec<Vec<ExactMatrix>> = (0..=n_max)
        .map(|n| {
            (0..crit.len().saturating_sub(1))
                .map(|i| {
                    let blocks = order.pow(n as u32);
                    let (lo, hi) = (crit[i], crit[i + 1]);
                    let mut m = ExactMatrix::zeros(blocks * hi, blocks * lo);
                    for b in 0..blocks {
                        for p in 0..hi {
                            for q in 0..lo {
                                let e = witten[i].get(p, q);
                                if !e.is_zero() {
                                    m.set(b * hi + p, b * lo + q, e.clone());
                                }
                            }
                        }
                    }
                    m
                })
                .collect()
        })
        .collect();
    let dc = MorseDoubleComplex {
        field,
        n_max,
        group_order: order,
        crit,
        delta_bar,
        partial,
    };
    let checks = dc.checks()?;
    if !checks.delta_bar_squared_zero {
        return Err(ComplexError::DoubleComplex("δ̄² = 0"));
    }
    if !checks.partial_squared_zero {
        return Err(ComplexError::DoubleComplex("∂² = 0"));
    }
    if !checks.commute {
        return Err(ComplexError::DoubleComplex("∂δ̄ = δ̄∂"));
    }
    if !checks.total_squared_zero {
        return Err(ComplexError::DoubleComplex("d_T² = 0"));
    }
    Ok(dc)
}

impl MorseDoubleComplex {
    pub fn dim(&self, n: usize, i: usize) -> usize {
        nerve_len(self.group_order, n, self.crit[i])
    }

    pub fn grid_dims(&self) -> Vec<Vec<usize>> {
        (0..=self.n_max)
            .map(|n| (0..self.crit.len()).map(|i| self.dim(n, i)).collect())
            .collect()
    }

    pub fn checks(&self) -> Result<DoubleComplexChecks, ComplexError> {
        let f = self.field;
        let mut out = DoubleComplexChecks {
            delta_bar_squared_zero: true,
            partial_squared_zero: true,
            commute: true,
            total_squared_zero: true,
        };
        for row in &self.delta_bar {
            for w in row.windows(2) {
                out.delta_bar_squared_zero &= w[1].mul(&w[0]).is_zero_in(f)?;
            }
        }
        for col in &self.partial {
            for w in col.windows(2) {
                out.partial_squared_zero &= w[1].mul(&w[0]).is_zero_in(f)?;
            }
        }
        for n in 0..self.n_max {
            for i in 0..self.crit.len().saturating_sub(1) {
                let a = self.delta_bar[i + 1][n].mul(&self.partial[n][i]);
                let b = self.partial[n + 1][i].mul(&self.delta_bar[i][n]);
                out.commute &= a.add(&b.scale(-1)).is_zero_in(f)?;
            }
        }
        let top = self.n_max + self.crit.len();
        for d in 1..top {
            let a = self.total_differential(d - 1);
            let b = self.total_differential(d);
            out.total_squared_zero &= b.mul(&a).is_zero_in(f)?;
        }
        Ok(out)
    }

    fn blocks(&self, d: usize) -> Vec<(usize, usize, usize)> {
        let mut offset = 0;
        let mut out = Vec::new();
        for n in 0..=self.n_max.min(d) {
            let i = d - n;
            if i < self.crit.len() {
                out.push((n, i, offset));
                offset += self.dim(n, i);
            }
        }
        out
    }

    fn total_dim(&self, d: usize) -> usize {
        self.blocks(d).iter().map(|&(n, i, _)| self.dim(n, i)).sum()
    }

    /// `d_T = δ̄ + (−1)^n ∂` from total degree `d` to `d + 1`.
    pub fn total_differential(&self, d: usize) -> ExactMatrix {
        let src = self.blocks(d);
        let dst = self.blocks(d + 1);
        let mut m = ExactMatrix::zeros(self.total_dim(d + 1), self.total_dim(d));
        let place = |m: &mut ExactMatrix, block: &ExactMatrix, r0: usize, c0: usize, s: i64| {
            for r in 0..block.rows() {
                for c in 0..block.cols() {
                    let e = block.get(r, c);
                    if !e.is_zero() {
                        m.set(r0 + r, c0 + c, e * BigRational::from_integer(s.into()));
                    }
                }
            }
        };
        for &(n, i, c0) in &src {
            for &(n2, i2, r0) in &dst {
                if n2 == n + 1 && i2 == i {
                    place(&mut m, &self.delta_bar[i][n], r0, c0, 1);
                }
                if n2 == n && i2 == i + 1 {
                    place(&mut m, &self.partial[n][i], r0, c0, if n % 2 == 0 { 1 } else { -1 });
                }
            }
        }
        m
    }

    /// Betti numbers of the total complex in degrees `0..=up_to`.
    pub fn total_cohomology(&self, up_to: usize) -> Result<Vec<usize>, ComplexError> {
        if self.n_max < up_to + 1 {
            return Err(ComplexError::Truncation {
                degree: up_to,
                need: up_to + 1,
                have: self.n_max,
            });
        }
        let ranks = (0..=up_to)
            .map(|d| self.total_differential(d).rank(self.field))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..=up_to)
            .map(|d| self.total_dim(d) - ranks[d] - if d > 0 { ranks[d - 1] } else { 0 })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        let m = ExactMatrix::from_i64(3, 3, &[2, 4, 6, 1, 2, 3, 0, 1, 1]);
        assert_eq!(m.rank(Field::Q).unwrap(), 2);
        assert_eq!(m.rank(Field::Z2).unwrap(), 2);
        let m = ExactMatrix::from_i64(2, 2, &[2, 0, 0, 2]);
        assert_eq!(m.rank(Field::Q).unwrap(), 2);
        assert_eq!(m.rank(Field::Z2).unwrap(), 0);
        assert_eq!(ExactMatrix::zeros(0, 4).rank(Field::Q).unwrap(), 0);
    }

    #[test]
    fn homology_examples() {
        let zero = ChainComplexOverField::new(Field::Q, vec![vec![], vec![]], vec![ExactMatrix::zeros(0, 0)]).unwrap();
        assert_eq!(zero.homology_ranks().unwrap(), vec![0, 0]);
        let id = ChainComplexOverField::new(
            Field::Q,
            vec![vec!["a".into()], vec!["b".into()]],
            vec![ExactMatrix::identity(1)],
        )
        .unwrap();
        assert_eq!(id.homology_ranks().unwrap(), vec![0, 0]);
        let s2 = build_witten_complex(Field::Q, &[("min".into(), 0), ("max".into(), 2)], &|_, _| 0, 2).unwrap();
        assert_eq!(s2.homology_ranks().unwrap(), vec![1, 0, 1]);
        assert_eq!(s2.euler_characteristic(), 2);
    }

    #[test]
    fn non_complex_rejected() {
        let d0 = ExactMatrix::from_i64(1, 1, &[1]);
        let d1 = ExactMatrix::from_i64(1, 1, &[1]);
        let labels = vec![vec!["a".into()], vec!["b".into()], vec!["c".into()]];
        assert_eq!(
            ChainComplexOverField::new(Field::Q, labels.clone(), vec![d0.clone(), d1.clone()]).unwrap_err(),
            ComplexError::NotComplex(0)
        );
        let two = ExactMatrix::from_i64(1, 1, &[2]);
        assert!(ChainComplexOverField::new(Field::Z2, labels, vec![two, d1]).is_ok());
    }

    #[test]
    fn trivial_group_collapses_to_witten() {
        let k = FiniteGroup::trivial(3);
        let act = vec![vec![vec![0]], vec![], vec![vec![0]]];
        let witten = vec![ExactMatrix::zeros(0, 1), ExactMatrix::zeros(1, 0)];
        let dc = build_nerve_double_complex(Field::Q, &k, &act, &witten, 3).unwrap();
        assert_eq!(dc.total_cohomology(2).unwrap(), vec![1, 0, 1]);
    }

    #[test]
    fn free_z2_orbit_has_one_class() {
        let k = FiniteGroup::antipodal(3);
        let act = vec![vec![vec![0, 1], vec![1, 0]]];
        let dc = build_nerve_double_complex(Field::Q, &k, &act, &[], 3).unwrap();
        assert_eq!(dc.grid_dims(), vec![vec![2], vec![4], vec![8], vec![16]]);
        assert_eq!(dc.total_cohomology(2).unwrap(), vec![1, 0, 0]);
        assert!(check_simplicial_identities(&k, &act[0], 3));
        assert!(matches!(dc.total_cohomology(3), Err(ComplexError::Truncation { .. })));
    }
}
