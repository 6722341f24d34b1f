//! Dense row-major complex matrices.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Dense complex matrix with row-major storage.
///
/// Values are immutable in practice: every operation returns a new matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                context: "matrix entries",
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(ComplexMatrix { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            entries: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::ShapeMismatch {
                    context: "matrix row length",
                    expected: cols,
                    got: r.len(),
                });
            }
            entries.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, entries)
    }

    /// Rank-1 matrix `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "matrix addition")?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "matrix subtraction")?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn scale(&self, factor: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                context: "matrix product",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row = k * other.cols;
                for j in 0..other.cols {
                    out.entries[i * other.cols + j] += a * other.entries[row + j];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self[(i, i)]).sum()
    }

    /// Matrix–vector product.
    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::ShapeMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let row = i * self.cols;
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.entries[row + j] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Max-norm of `A - A†`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Max-norm of `A†A - I`.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let gram = self.dagger().mul(self).expect("square product");
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let expected = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                worst = worst.max((gram[(i, j)] - expected).norm());
            }
        }
        worst
    }

    /// Max of the idempotence residual `‖P² - P‖_max` and the hermiticity
    /// residual.
    pub fn projector_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let sq = self.mul(self).expect("square product");
        let idem = sq.sub(self).expect("same shape").max_abs();
        idem.max(self.hermiticity_residual())
    }

    /// Max-norm of the commutator `AB - BA`.
    pub fn commutator_max(&self, other: &Self) -> Result<f64> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        Ok(ab.sub(&ba)?.max_abs())
    }

    /// Kronecker product `self ⊗ other` with the second index varying
    /// fastest. Errors when the result would exceed `dim_cap` rows or
    /// columns.
    pub fn kron(&self, other: &Self, dim_cap: usize) -> Result<Self> {
        let rows = self.rows.checked_mul(other.rows);
        let cols = self.cols.checked_mul(other.cols);
        let (rows, cols) = match (rows, cols) {
            (Some(r), Some(c)) if r <= dim_cap && c <= dim_cap => (r, c),
            _ => {
                return Err(Error::Capacity {
                    what: "tensor product dimension",
                    requested: self
                        .rows
                        .saturating_mul(other.rows)
                        .max(self.cols.saturating_mul(other.cols)),
                    cap: dim_cap,
                })
            }
        };
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Entrywise max distance to `other`, infinite on shape mismatch.
    pub fn max_distance(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                context,
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// `|index⟩` as a dense vector.
pub fn basis_vector(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[index] = C64::new(1.0, 0.0);
    v
}

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
}

/// Common 2x2 matrices used across tests and scenario builders.
pub mod pauli {
    use super::{C64, ComplexMatrix};

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .expect("2x2")
    }

    pub fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        ])
        .expect("2x2")
    }

    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
        ])
        .expect("2x2")
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_rows(&[
            vec![C64::new(h, 0.0), C64::new(h, 0.0)],
            vec![C64::new(h, 0.0), C64::new(-h, 0.0)],
        ])
        .expect("2x2")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn product_and_dagger() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(2.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let ad = a.dagger();
        assert_eq!(ad[(0, 1)], c(2.0, 0.0));
        assert_eq!(ad[(1, 0)], c(0.0, -1.0));
        let prod = a.mul(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(prod, a);
    }

    #[test]
    fn kron_identity_case() {
        let i2 = ComplexMatrix::identity(2);
        let i4 = i2.kron(&i2, 4096).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_basis_projector() {
        let p0 = ComplexMatrix::outer(&basis_vector(2, 0), &basis_vector(2, 0));
        let p1 = ComplexMatrix::outer(&basis_vector(2, 1), &basis_vector(2, 1));
        let p01 = p0.kron(&p1, 4096).unwrap();
        let expected = ComplexMatrix::outer(&basis_vector(4, 1), &basis_vector(4, 1));
        assert!(p01.max_distance(&expected) == 0.0);
    }

    #[test]
    fn kron_sigma_x_squares_to_identity() {
        // direct 4x4 multiplication oracle
        let sx = pauli::sigma_x();
        let xx = sx.kron(&sx, 4096).unwrap();
        let sq = xx.mul(&xx).unwrap();
        assert!(sq.max_distance(&ComplexMatrix::identity(4)) < 1e-14);
    }

    #[test]
    fn kron_respects_dim_cap() {
        let big = ComplexMatrix::identity(128);
        let err = big.kron(&ComplexMatrix::identity(64), 4096);
        assert!(matches!(err, Err(Error::Capacity { .. })));
        // 64 * 64 = 4096 sits exactly at the default cap
        assert!(ComplexMatrix::identity(64)
            .kron(&ComplexMatrix::identity(64), 4096)
            .is_ok());
    }

    #[test]
    fn residuals_flag_structure() {
        let sx = pauli::sigma_x();
        assert!(sx.hermiticity_residual() < 1e-15);
        assert!(sx.unitarity_residual() < 1e-15);
        // sigma_x is not idempotent
        assert!(sx.projector_residual() > 0.5);
        let p0 = ComplexMatrix::outer(&basis_vector(2, 0), &basis_vector(2, 0));
        assert!(p0.projector_residual() < 1e-15);
    }

    #[test]
    fn commutator_of_paulis() {
        let sx = pauli::sigma_x();
        let sz = pauli::sigma_z();
        assert!(sx.commutator_max(&sz).unwrap() > 1.9);
        assert!(sx.commutator_max(&sx).unwrap() < 1e-15);
    }
}
