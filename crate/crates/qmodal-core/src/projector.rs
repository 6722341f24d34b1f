//! Exhaustive families of mutually orthogonal projectors (PVMs).

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::policy::NumericPolicy;

/// A complete set of mutually orthogonal projectors on one space.
///
/// Construction validates idempotence, hermiticity, pairwise orthogonality
/// and completeness against the supplied policy, so a value of this type
/// can be trusted downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorFamily {
    dim: usize,
    projectors: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl ProjectorFamily {
    pub fn new(
        dim: usize,
        projectors: Vec<ComplexMatrix>,
        labels: Vec<String>,
        policy: &NumericPolicy,
    ) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::InvalidFamily {
                reason: "family must contain at least one projector".into(),
            });
        }
        if labels.len() != projectors.len() {
            return Err(Error::InvalidFamily {
                reason: format!(
                    "{} labels for {} projectors",
                    labels.len(),
                    projectors.len()
                ),
            });
        }
        for (k, p) in projectors.iter().enumerate() {
            if !p.is_square() || p.rows() != dim {
                return Err(Error::InvalidFamily {
                    reason: format!("projector {k} is {}x{}, expected {dim}", p.rows(), p.cols()),
                });
            }
            let herm = p.hermiticity_residual();
            if herm > policy.hermitian_tol {
                return Err(Error::InvalidFamily {
                    reason: format!("projector {k} hermiticity residual {herm:.3e}"),
                });
            }
            let idem = p.mul(p)?.sub(p)?.max_abs();
            if idem > policy.projector_tol {
                return Err(Error::InvalidFamily {
                    reason: format!("projector {k} idempotence residual {idem:.3e}"),
                });
            }
        }
        for i in 0..projectors.len() {
            for j in (i + 1)..projectors.len() {
                let cross = projectors[i].mul(&projectors[j])?.max_abs();
                if cross > policy.orthogonality_tol {
                    return Err(Error::InvalidFamily {
                        reason: format!("projectors {i},{j} overlap ({cross:.3e})"),
                    });
                }
            }
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for p in &projectors {
            sum = sum.add(p)?;
        }
        let comp = sum.max_distance(&ComplexMatrix::identity(dim));
        if comp > policy.completeness_tol {
            return Err(Error::InvalidFamily {
                reason: format!("completeness residual {comp:.3e}"),
            });
        }
        Ok(ProjectorFamily {
            dim,
            projectors,
            labels,
        })
    }

    /// Family with stringified index labels.
    pub fn with_index_labels(
        dim: usize,
        projectors: Vec<ComplexMatrix>,
        policy: &NumericPolicy,
    ) -> Result<Self> {
        let labels = (0..projectors.len()).map(|i| i.to_string()).collect();
        Self::new(dim, projectors, labels, policy)
    }

    /// The trivial family `{I}`.
    pub fn trivial(dim: usize, policy: &NumericPolicy) -> Result<Self> {
        Self::new(
            dim,
            vec![ComplexMatrix::identity(dim)],
            vec!["identity".into()],
            policy,
        )
    }

    /// Computational-basis family `{|k⟩⟨k|}`.
    pub fn computational(dim: usize, policy: &NumericPolicy) -> Result<Self> {
        let projectors = (0..dim)
            .map(|k| {
                let v = crate::matrix::basis_vector(dim, k);
                ComplexMatrix::outer(&v, &v)
            })
            .collect();
        Self::with_index_labels(dim, projectors, policy)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projector(&self, k: usize) -> &ComplexMatrix {
        &self.projectors[k]
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Worst structural residual over the family: idempotence, hermiticity,
    /// pairwise orthogonality and completeness.
    pub fn structural_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.projectors {
            worst = worst.max(p.projector_residual());
        }
        for i in 0..self.projectors.len() {
            for j in (i + 1)..self.projectors.len() {
                if let Ok(prod) = self.projectors[i].mul(&self.projectors[j]) {
                    worst = worst.max(prod.max_abs());
                }
            }
        }
        let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
        for p in &self.projectors {
            sum = sum.add(p).expect("same shape");
        }
        worst.max(sum.max_distance(&ComplexMatrix::identity(self.dim)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{C64, basis_vector};

    #[test]
    fn computational_family_is_valid() {
        let policy = NumericPolicy::default();
        let fam = ProjectorFamily::computational(3, &policy).unwrap();
        assert_eq!(fam.len(), 3);
        assert!(fam.structural_residual() < 1e-15);
    }

    #[test]
    fn incomplete_family_is_rejected() {
        let policy = NumericPolicy::default();
        let p0 = ComplexMatrix::outer(&basis_vector(2, 0), &basis_vector(2, 0));
        let err = ProjectorFamily::with_index_labels(2, vec![p0], &policy);
        assert!(matches!(err, Err(Error::InvalidFamily { .. })));
    }

    #[test]
    fn overlapping_family_is_rejected() {
        let policy = NumericPolicy::default();
        let p0 = ComplexMatrix::outer(&basis_vector(2, 0), &basis_vector(2, 0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = vec![C64::new(h, 0.0), C64::new(h, 0.0)];
        let pp = ComplexMatrix::outer(&plus, &plus);
        let err = ProjectorFamily::with_index_labels(2, vec![p0, pp], &policy);
        assert!(matches!(err, Err(Error::InvalidFamily { .. })));
    }

    #[test]
    fn non_idempotent_member_is_rejected() {
        let policy = NumericPolicy::default();
        let half = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        let err = ProjectorFamily::with_index_labels(2, vec![half.clone(), half], &policy);
        assert!(matches!(err, Err(Error::InvalidFamily { .. })));
    }
}
