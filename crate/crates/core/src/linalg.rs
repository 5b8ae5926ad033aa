//! Symmetric tridiagonal and dense matrices with direct solvers.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix dimension must be positive")]
    EmptyMatrix,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is singular to working precision (column {column})")]
    Singular { column: usize },
}

/// Symmetric tridiagonal matrix; the single off-diagonal is shared by both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl BandedMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self, LinalgError> {
        if diag.is_empty() {
            return Err(LinalgError::EmptyMatrix);
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: diag.len() - 1,
                got: offdiag.len(),
            });
        }
        Ok(Self { diag, offdiag })
    }

    /// Constant diagonal and off-diagonal.
    pub fn constant(dim: usize, diag: f64, offdiag: f64) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        Ok(Self {
            diag: vec![diag; dim],
            offdiag: vec![offdiag; dim - 1],
        })
    }

    pub fn identity(dim: usize) -> Result<Self, LinalgError> {
        Self::constant(dim, 1.0, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Entry `(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i + 1 == j {
            self.offdiag[i]
        } else if j + 1 == i {
            self.offdiag[j]
        } else {
            0.0
        }
    }

    /// `y = M x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n, "vector length does not match matrix dimension");
        assert_eq!(y.len(), n, "output length does not match matrix dimension");
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// Entrywise sum; dimensions must agree.
    pub fn add(&self, other: &BandedMatrix) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Ok(Self {
            diag: zip(&self.diag, &other.diag),
            offdiag: zip(&self.offdiag, &other.offdiag),
        })
    }

    /// `factor · M`
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|v| factor * v).collect(),
            offdiag: self.offdiag.iter().map(|v| factor * v).collect(),
        }
    }

    /// `LDLᵀ` factorization; every pivot must be strictly positive.
    pub fn factor(&self) -> Result<TridiagonalFactor, LinalgError> {
        let n = self.dim();
        let mut pivots = Vec::with_capacity(n);
        let mut multipliers = Vec::with_capacity(n.saturating_sub(1));
        let mut d = self.diag[0];
        for i in 0..n {
            if i > 0 {
                let l = self.offdiag[i - 1] / pivots[i - 1];
                multipliers.push(l);
                d = self.diag[i] - l * self.offdiag[i - 1];
            }
            if !(d > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { index: i, pivot: d });
            }
            pivots.push(d);
        }
        Ok(TridiagonalFactor {
            pivots,
            multipliers,
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }
}

/// Reusable `LDLᵀ` factor of a symmetric positive definite tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalFactor {
    pivots: Vec<f64>,
    multipliers: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n, "right-hand side length does not match factor");
        for i in 1..n {
            x[i] -= self.multipliers[i - 1] * x[i - 1];
        }
        for (xi, d) in x.iter_mut().zip(&self.pivots) {
            *xi /= d;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.multipliers[i] * x[i + 1];
        }
    }
}

/// The second-difference matrix `tridiag(-1, 2, -1)`.
pub fn second_difference_matrix(dim: usize) -> Result<BandedMatrix, LinalgError> {
    BandedMatrix::constant(dim, 2.0, -1.0)
}

/// `alpha · I + beta · M`
pub fn shift_scale(m: &BandedMatrix, alpha: f64, beta: f64) -> BandedMatrix {
    BandedMatrix {
        diag: m.diag.iter().map(|v| alpha + beta * v).collect(),
        offdiag: m.offdiag.iter().map(|v| beta * v).collect(),
    }
}

/// One-shot factor and solve of an SPD tridiagonal system.
pub fn banded_factor_solve(m: &BandedMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    check_len(m.dim(), b.len())?;
    Ok(m.factor()?.solve(b))
}

/// Square dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            check_len(dim, row.len())?;
            entries.extend_from_slice(row);
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.dim + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(
            x.len(),
            self.dim,
            "vector length does not match matrix dimension"
        );
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gaussian elimination with partial pivoting.
    ///
    /// A pivot at or below `1e-14 · ‖J‖_∞` is reported as singular. Zero
    /// multipliers are skipped, so banded input factors in `O(n²)`.
    pub fn factor(&self) -> Result<DenseLu, LinalgError> {
        let n = self.dim;
        if n == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        let tol = 1e-14 * self.norm_inf();
        let mut lu = self.entries.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tol) {
                return Err(LinalgError::Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            let (upper, lower) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..];
            for i in k + 1..n {
                let row = &mut lower[(i - k - 1) * n..(i - k) * n];
                if row[k] == 0.0 {
                    continue;
                }
                let l = row[k] / pivot;
                row[k] = l;
                for j in k + 1..n {
                    row[j] -= l * pivot_row[j];
                }
            }
        }
        Ok(DenseLu { dim: n, lu, perm })
    }
}

/// Packed `PA = LU` factors.
#[derive(Debug, Clone)]
pub struct DenseLu {
    dim: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        assert_eq!(b.len(), n, "right-hand side length does not match factor");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(u, v)| u * v)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// One-shot dense solve with partial pivoting.
pub fn dense_factor_solve(j: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    check_len(j.dim(), b.len())?;
    Ok(j.factor()?.solve(b))
}

/// `max |v_i|`, zero for an empty vector.
pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖a - b‖_∞`
pub fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn check_len(expected: usize, got: usize) -> Result<(), LinalgError> {
    if expected != got {
        return Err(LinalgError::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    #[test]
    fn second_difference_examples() {
        let a = second_difference_matrix(3).unwrap();
        assert_eq!(a.diag(), &[2.0, 2.0, 2.0]);
        assert_eq!(a.offdiag(), &[-1.0, -1.0]);

        let a = second_difference_matrix(1).unwrap();
        assert_eq!(a.diag(), &[2.0]);
        assert!(a.offdiag().is_empty());

        let a = second_difference_matrix(5).unwrap();
        assert_eq!(a.apply(&[1.0; 5])[2], 0.0);

        assert_eq!(second_difference_matrix(0), Err(LinalgError::EmptyMatrix));
    }

    #[test]
    fn shift_scale_examples() {
        let a = second_difference_matrix(3).unwrap();
        let m = shift_scale(&a, 1.0, 0.25 * 0.5);
        assert_eq!(m.diag(), &[1.25, 1.25, 1.25]);
        assert_eq!(m.offdiag(), &[-0.125, -0.125]);

        assert_eq!(shift_scale(&a, 0.0, 1.0), a);

        let a2 = second_difference_matrix(2).unwrap();
        assert_eq!(
            shift_scale(&a2, 1.0, 0.0),
            BandedMatrix::identity(2).unwrap()
        );
    }

    #[test]
    fn banded_solve_examples() {
        let b = vec![3.0, -1.0, 4.5];
        let x = banded_factor_solve(&BandedMatrix::identity(3).unwrap(), &b).unwrap();
        assert_eq!(x, b);

        let m = BandedMatrix::new(vec![2.0, 2.0], vec![-1.0]).unwrap();
        let x = banded_factor_solve(&m, &[1.0, 1.0]).unwrap();
        assert!(inf_norm_diff(&x, &[1.0, 1.0]) < 1e-15);

        let a = second_difference_matrix(4).unwrap();
        let rhs = a.apply(&[1.0, 2.0, 3.0, 4.0]);
        let x = banded_factor_solve(&a, &rhs).unwrap();
        assert!(inf_norm_diff(&x, &[1.0, 2.0, 3.0, 4.0]) < 1e-13);
    }

    #[test]
    fn banded_rejects_indefinite() {
        let m = BandedMatrix::new(vec![1.0, 1.0], vec![2.0]).unwrap();
        assert!(matches!(
            m.factor(),
            Err(LinalgError::NotPositiveDefinite { index: 1, .. })
        ));
        let m = BandedMatrix::new(vec![-1.0], vec![]).unwrap();
        assert!(m.factor().is_err());
        assert!(banded_factor_solve(&BandedMatrix::identity(2).unwrap(), &[1.0]).is_err());
    }

    #[test]
    fn second_difference_positive_definite_large() {
        let a = second_difference_matrix(10_000).unwrap();
        let f = a.factor().unwrap();
        assert!(f.pivots().iter().all(|&p| p > 0.0));

        let mut rng = StdRng::seed_from_u64(7);
        let m = shift_scale(&a, 1.0, 0.25);
        let b: Vec<f64> = (0..10_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = banded_factor_solve(&m, &b).unwrap();
        assert!(inf_norm_diff(&m.apply(&x), &b) <= 1e-10 * inf_norm(&b));
    }

    #[test]
    fn dense_solve_examples() {
        let b = vec![1.0, -2.0, 3.0];
        assert_eq!(
            dense_factor_solve(&DenseMatrix::identity(3), &b).unwrap(),
            b
        );

        let swap = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            dense_factor_solve(&swap, &[3.0, 7.0]).unwrap(),
            vec![7.0, 3.0]
        );
    }

    #[test]
    fn dense_random_well_conditioned() {
        let mut rng = StdRng::seed_from_u64(42);
        let n = 50;
        let mut j = DenseMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                j.set(r, c, rng.gen_range(-1.0..1.0));
            }
            // diagonal dominance keeps the condition number modest
            j.set(r, r, j.get(r, r) + n as f64);
        }
        let x_star: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b = j.apply(&x_star);
        let x = dense_factor_solve(&j, &b).unwrap();
        assert!(inf_norm_diff(&x, &x_star) <= 1e-8 * inf_norm(&x_star));
        assert!(inf_norm_diff(&j.apply(&x), &b) <= 1e-8 * inf_norm(&b));
    }

    #[test]
    fn dense_singular_detected() {
        let j = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            j.factor(),
            Err(LinalgError::Singular { column: 1 })
        ));
        assert!(matches!(
            DenseMatrix::zeros(3).factor(),
            Err(LinalgError::Singular { column: 0 })
        ));
    }

    #[test]
    fn inf_norm_examples() {
        assert_eq!(inf_norm(&[1.0, -3.0, 2.0]), 3.0);
        assert_eq!(inf_norm(&[]), 0.0);
        assert_eq!(inf_norm(&[-5.0]), 5.0);
    }

    fn spd_tridiagonal() -> impl Strategy<Value = (BandedMatrix, Vec<f64>)> {
        (1usize..=50).prop_flat_map(|n| {
            (
                prop::collection::vec(-1.0f64..1.0, n.saturating_sub(1)),
                prop::collection::vec(0.1f64..3.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            )
                .prop_map(|(off, extra, b)| {
                    let n = b.len();
                    // strict diagonal dominance with positive diagonal implies SPD
                    let diag = (0..n)
                        .map(|i| {
                            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
                            let right = if i + 1 < n { off[i].abs() } else { 0.0 };
                            left + right + extra[i]
                        })
                        .collect();
                    (BandedMatrix::new(diag, off).unwrap(), b)
                })
        })
    }

    proptest! {
        #[test]
        fn banded_and_dense_agree((m, b) in spd_tridiagonal()) {
            let xb = banded_factor_solve(&m, &b).unwrap();
            let xd = dense_factor_solve(&m.to_dense(), &b).unwrap();
            let scale = inf_norm(&xd).max(f64::MIN_POSITIVE);
            prop_assert!(inf_norm_diff(&xb, &xd) <= 1e-9 * scale);
        }

        #[test]
        fn shift_scale_is_linear(
            n in 1usize..20,
            a1 in -8i32..8, a2 in -8i32..8, b1 in -8i32..8, b2 in -8i32..8,
        ) {
            let m = second_difference_matrix(n).unwrap();
            let (a1, a2, b1, b2) = (a1 as f64, a2 as f64, b1 as f64, b2 as f64);
            let lhs = shift_scale(&m, a1 + a2, b1 + b2);
            let rhs = shift_scale(&m, a1, b1).add(&shift_scale(&m, a2, b2)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
