//! State vectors on tensor-product spaces, density operators, partial
//! traces and unitary evolution.

use crate::error::{Error, Result};
use crate::linalg::eig_hermitian;
use crate::matrix::{C64, ComplexMatrix, inner, vec_norm};
use crate::policy::NumericPolicy;
use crate::tensor::{ravel, total_dim, unravel};

/// Normalized pure state carrying its factor dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>, policy: &NumericPolicy) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput(
                "factor dimensions must be positive".into(),
            ));
        }
        let total = total_dim(&dims);
        if total > policy.dim_cap {
            return Err(Error::Capacity {
                what: "state dimension",
                requested: total,
                cap: policy.dim_cap,
            });
        }
        if amplitudes.len() != total {
            return Err(Error::ShapeMismatch {
                context: "state amplitudes",
                expected: total,
                got: amplitudes.len(),
            });
        }
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > policy.norm_tol {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { dims, amplitudes })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dims: Vec<usize>, index: usize, policy: &NumericPolicy) -> Result<Self> {
        let total = total_dim(&dims);
        if index >= total {
            return Err(Error::IndexOutOfRange {
                index,
                limit: total,
            });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); total];
        amplitudes[index] = C64::new(1.0, 0.0);
        PureState::new(dims, amplitudes, policy)
    }

    /// Product state from one normalized vector per factor.
    pub fn from_factors(factors: &[Vec<C64>], policy: &NumericPolicy) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("need at least one factor".into()));
        }
        let dims: Vec<usize> = factors.iter().map(|f| f.len()).collect();
        let mut amplitudes = vec![C64::new(1.0, 0.0)];
        for f in factors {
            let mut next = Vec::with_capacity(amplitudes.len() * f.len());
            for a in &amplitudes {
                for b in f {
                    next.push(a * b);
                }
            }
            amplitudes = next;
        }
        PureState::new(dims, amplitudes, policy)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn total_dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub(crate) fn from_raw_unchecked(dims: Vec<usize>, amplitudes: Vec<C64>) -> Self {
        PureState { dims, amplitudes }
    }
}

/// Density operator with validated trace and hermiticity. Positivity is
/// checked wherever the spectrum is actually computed.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix, policy: &NumericPolicy) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotDensity {
                reason: format!("matrix is {}x{}", matrix.rows(), matrix.cols()),
            });
        }
        let herm = matrix.hermiticity_residual();
        if herm > policy.hermitian_tol {
            return Err(Error::NotDensity {
                reason: format!("hermiticity residual {herm:.3e}"),
            });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > policy.trace_tol || tr.im.abs() > policy.trace_tol {
            return Err(Error::NotDensity {
                reason: format!("trace {} + {}i", tr.re, tr.im),
            });
        }
        Ok(DensityOperator {
            dim: matrix.rows(),
            matrix,
        })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let m = ComplexMatrix::outer(psi.amplitudes(), psi.amplitudes());
        DensityOperator {
            dim: psi.total_dim(),
            matrix: m,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Most negative eigenvalue, for positivity checks.
    pub fn min_eigenvalue(&self, policy: &NumericPolicy) -> Result<f64> {
        let eig = eig_hermitian(&self.matrix, policy)?;
        Ok(*eig
            .values
            .last()
            .expect("density operator has at least one eigenvalue"))
    }
}

/// Reduced density operator on the kept factors, original factor order.
pub fn partial_trace(
    rho: &DensityOperator,
    dims: &[usize],
    keep: &[usize],
    policy: &NumericPolicy,
) -> Result<DensityOperator> {
    if total_dim(dims) != rho.dim() {
        return Err(Error::ShapeMismatch {
            context: "partial trace dims",
            expected: rho.dim(),
            got: total_dim(dims),
        });
    }
    if keep.is_empty() {
        return Err(Error::InvalidInput("keep set must be nonempty".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::InvalidInput("keep set contains duplicates".into()));
    }
    if let Some(&last) = keep_sorted.last() {
        if last >= dims.len() {
            return Err(Error::IndexOutOfRange {
                index: last,
                limit: dims.len(),
            });
        }
    }
    let traced: Vec<usize> = (0..dims.len())
        .filter(|f| !keep_sorted.contains(f))
        .collect();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&f| dims[f]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&f| dims[f]).collect();
    let kept_total = total_dim(&kept_dims);
    let traced_total = total_dim(&traced_dims);

    let mut out = ComplexMatrix::zeros(kept_total, kept_total);
    let mut full_row = vec![0usize; dims.len()];
    let mut full_col = vec![0usize; dims.len()];
    for r in 0..kept_total {
        let rm = unravel(r, &kept_dims);
        for c in 0..kept_total {
            let cm = unravel(c, &kept_dims);
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..traced_total {
                let em = unravel(e, &traced_dims);
                for (pos, &f) in keep_sorted.iter().enumerate() {
                    full_row[f] = rm[pos];
                    full_col[f] = cm[pos];
                }
                for (pos, &f) in traced.iter().enumerate() {
                    full_row[f] = em[pos];
                    full_col[f] = em[pos];
                }
                acc += rho.matrix()[(ravel(&full_row, dims), ravel(&full_col, dims))];
            }
            out[(r, c)] = acc;
        }
    }
    DensityOperator::new(out, policy)
}

/// Applies a unitary to a state vector.
pub fn evolve(psi: &PureState, u: &ComplexMatrix, policy: &NumericPolicy) -> Result<PureState> {
    if u.rows() != psi.total_dim() || !u.is_square() {
        return Err(Error::ShapeMismatch {
            context: "evolution unitary",
            expected: psi.total_dim(),
            got: u.rows(),
        });
    }
    let res = u.unitarity_residual();
    if res > policy.unitary_tol {
        return Err(Error::NotUnitary { residual: res });
    }
    let amplitudes = u.matvec(psi.amplitudes())?;
    PureState::new(psi.dims().to_vec(), amplitudes, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{basis_vector, pauli};
    use crate::rng::SplitMix64;

    fn policy() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn bell(policy: &NumericPolicy) -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(
            vec![2, 2],
            vec![
                C64::new(h, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(h, 0.0),
            ],
            policy,
        )
        .unwrap()
    }

    #[test]
    fn rejects_unnormalized() {
        let p = policy();
        let err = PureState::new(vec![2], vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], &p);
        assert!(matches!(err, Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let p = policy();
        // |0⟩⟨0| ⊗ ρ_β, trace out β, recover |0⟩⟨0|
        let rho_b = DensityOperator::new(
            ComplexMatrix::from_rows(&[
                vec![C64::new(0.25, 0.0), C64::new(0.1, 0.05)],
                vec![C64::new(0.1, -0.05), C64::new(0.75, 0.0)],
            ])
            .unwrap(),
            &p,
        )
        .unwrap();
        let p0 = ComplexMatrix::outer(&basis_vector(2, 0), &basis_vector(2, 0));
        let full = DensityOperator::new(p0.kron(rho_b.matrix(), p.dim_cap).unwrap(), &p).unwrap();
        let reduced = partial_trace(&full, &[2, 2], &[0], &p).unwrap();
        assert!(reduced.matrix().max_distance(&p0) < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let p = policy();
        let rho = DensityOperator::from_pure(&bell(&p));
        let reduced = partial_trace(&rho, &[2, 2], &[0], &p).unwrap();
        let expected = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        assert!(reduced.matrix().max_distance(&expected) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace_on_random_states() {
        // property check over seeded samples
        let p = policy();
        let mut rng = SplitMix64::new(0x0b5e55ed);
        for _ in 0..100 {
            let psi = PureState::new(vec![2, 2, 2], rng.unit_vector(8), &p).unwrap();
            let rho = DensityOperator::from_pure(&psi);
            let keep: Vec<usize> = match rng.next_index(3) {
                0 => vec![0],
                1 => vec![1, 2],
                _ => vec![0, 2],
            };
            let reduced = partial_trace(&rho, &[2, 2, 2], &keep, &p).unwrap();
            let tr = reduced.matrix().trace();
            assert!((tr.re - 1.0).abs() <= 1e-12 && tr.im.abs() <= 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let p = policy();
        let rho = DensityOperator::from_pure(&bell(&p));
        assert!(matches!(
            partial_trace(&rho, &[2, 3], &[0], &p),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn evolve_identity_and_flip() {
        let p = policy();
        let zero = PureState::basis(vec![2], 0, &p).unwrap();
        let same = evolve(&zero, &ComplexMatrix::identity(2), &p).unwrap();
        assert_eq!(same.amplitudes()[0], C64::new(1.0, 0.0));
        let one = evolve(&zero, &pauli::sigma_x(), &p).unwrap();
        assert!((one.amplitudes()[1] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn evolve_rejects_non_unitary() {
        let p = policy();
        let zero = PureState::basis(vec![2], 0, &p).unwrap();
        let bad = ComplexMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            evolve(&zero, &bad, &p),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn evolve_preserves_norm_and_inner_products() {
        let p = policy();
        let u = pauli::sigma_x().kron(&ComplexMatrix::identity(2), p.dim_cap).unwrap();
        let psi = evolve(&bell(&p), &u, &p).unwrap();
        assert!((psi.norm() - 1.0).abs() <= 1e-12);
        let mut rng = SplitMix64::new(31);
        let a = PureState::new(vec![2, 2], rng.unit_vector(4), &p).unwrap();
        let b = PureState::new(vec![2, 2], rng.unit_vector(4), &p).unwrap();
        let before = a.inner(&b);
        let after = evolve(&a, &u, &p).unwrap().inner(&evolve(&b, &u, &p).unwrap());
        assert!((before - after).norm() <= 1e-10);
    }
}
