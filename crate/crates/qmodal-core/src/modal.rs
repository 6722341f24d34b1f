//! Single-time property assignment.
//!
//! The definite-valued projectors of a subsystem come from the biorthogonal
//! decomposition of the total pure state (or, for a mixed subsystem state,
//! from the spectral resolution of its density operator), with nearly equal
//! weights merged into multi-dimensional projectors. Joint probabilities
//! over disjoint subsystems are plain expectation values of commuting
//! projector products.

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, svd};
use crate::matrix::{C64, ComplexMatrix, inner};
use crate::policy::NumericPolicy;
use crate::projector::ProjectorFamily;
use crate::state::{DensityOperator, PureState};
use crate::tensor::{embed, ravel, total_dim, unravel};

/// Clusters weights (sorted descending) into degeneracy groups.
///
/// Adjacent weights land in one group when `|w_i - w_j| ≤ tol·max(w_i, 1)`;
/// the relation is closed transitively along the sorted order.
pub fn merge_degenerate(weights: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..weights.len() {
        let adjacent = match groups.last() {
            Some(group) => {
                let prev = weights[*group.last().expect("nonempty group")];
                (prev - weights[i]).abs() <= tol * prev.max(1.0)
            }
            None => false,
        };
        if adjacent {
            groups.last_mut().expect("nonempty").push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}

/// Biorthogonal decomposition of a pure state across one bipartition.
#[derive(Debug, Clone)]
pub struct SchmidtResult {
    /// Coefficients, real nonnegative by convention, descending.
    pub coefficients: Vec<C64>,
    /// Squared coefficients, descending.
    pub weights: Vec<f64>,
    /// Orthonormal vectors on the left side of the cut.
    pub left_states: Vec<Vec<C64>>,
    /// Orthonormal vectors on the right side of the cut.
    pub right_states: Vec<Vec<C64>>,
    /// Index sets of weight-degenerate terms.
    pub merge_groups: Vec<Vec<usize>>,
    /// One merged projector per group on the left space, completed with a
    /// zero-weight remainder projector when the terms do not span it.
    pub merged_projectors: ProjectorFamily,
    /// Index of the remainder projector within `merged_projectors`, if one
    /// was appended.
    pub remainder: Option<usize>,
    /// Factors (ascending) forming the left side of the cut.
    pub left_factors: Vec<usize>,
    /// Factors (ascending) forming the right side of the cut.
    pub right_factors: Vec<usize>,
    /// Norm of `ψ - Σ c_i ψ_i^α ⊗ ψ_i^β`.
    pub reconstruction_residual: f64,
}

impl SchmidtResult {
    /// Number of retained terms.
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }
}

fn reshape_to_matrix(
    psi: &PureState,
    left: &[usize],
    right: &[usize],
    left_dims: &[usize],
    right_dims: &[usize],
) -> ComplexMatrix {
    let dims = psi.dims();
    let rows = total_dim(left_dims);
    let cols = total_dim(right_dims);
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (n, amp) in psi.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let multi = unravel(n, dims);
        let lm: Vec<usize> = left.iter().map(|&f| multi[f]).collect();
        let rm: Vec<usize> = right.iter().map(|&f| multi[f]).collect();
        m[(ravel(&lm, left_dims), ravel(&rm, right_dims))] = *amp;
    }
    m
}

/// Schmidt decomposition of `psi` across the cut given by `left_factors`
/// (the complement forms the right side), with degeneracy merging.
pub fn schmidt_decompose(
    psi: &PureState,
    left_factors: &[usize],
    policy: &NumericPolicy,
) -> Result<SchmidtResult> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > policy.norm_tol {
        return Err(Error::NotNormalized { norm });
    }
    let n_factors = psi.dims().len();
    let mut left = left_factors.to_vec();
    left.sort_unstable();
    left.dedup();
    if left.len() != left_factors.len() {
        return Err(Error::InvalidCut {
            reason: "left factor set contains duplicates".into(),
        });
    }
    if let Some(&last) = left.last() {
        if last >= n_factors {
            return Err(Error::IndexOutOfRange {
                index: last,
                limit: n_factors,
            });
        }
    }
    let right: Vec<usize> = (0..n_factors).filter(|f| !left.contains(f)).collect();
    if left.is_empty() || right.is_empty() {
        return Err(Error::InvalidCut {
            reason: "both sides of the cut must be nonempty".into(),
        });
    }
    let left_dims: Vec<usize> = left.iter().map(|&f| psi.dims()[f]).collect();
    let right_dims: Vec<usize> = right.iter().map(|&f| psi.dims()[f]).collect();
    let left_dim = total_dim(&left_dims);
    let right_dim = total_dim(&right_dims);
    if left_dim == 1 || right_dim == 1 {
        return Err(Error::InvalidCut {
            reason: "cut has a trivial (dimension-1) side".into(),
        });
    }

    let m = reshape_to_matrix(psi, &left, &right, &left_dims, &right_dims);
    let dec = svd(&m);

    let mut coefficients: Vec<C64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut left_states: Vec<Vec<C64>> = Vec::new();
    let mut right_states: Vec<Vec<C64>> = Vec::new();
    for (k, &sigma) in dec.singular.iter().enumerate() {
        let w = sigma * sigma;
        if w < policy.rank_cutoff {
            continue;
        }
        coefficients.push(C64::new(sigma, 0.0));
        weights.push(w);
        left_states.push((0..left_dim).map(|i| dec.left[(i, k)]).collect::<Vec<C64>>());
        // ψ = Σ σ_k u_k ⊗ conj(v_k)
        right_states.push(
            (0..right_dim)
                .map(|i| dec.right[(i, k)].conj())
                .collect::<Vec<C64>>(),
        );
    }
    if coefficients.is_empty() {
        return Err(Error::InvalidInput(
            "state has no Schmidt terms above cutoff".into(),
        ));
    }

    let merge_groups = merge_degenerate(&weights, policy.degeneracy_tol);

    let mut projectors = Vec::with_capacity(merge_groups.len() + 1);
    let mut labels = Vec::with_capacity(merge_groups.len() + 1);
    for (g, group) in merge_groups.iter().enumerate() {
        let mut p = ComplexMatrix::zeros(left_dim, left_dim);
        for &i in group {
            p = p.add(&ComplexMatrix::outer(&left_states[i], &left_states[i]))?;
        }
        projectors.push(p);
        labels.push(format!("g{g}"));
    }
    let mut sum = ComplexMatrix::zeros(left_dim, left_dim);
    for p in &projectors {
        sum = sum.add(p)?;
    }
    let rest = ComplexMatrix::identity(left_dim).sub(&sum)?;
    let remainder = if rest.max_abs() > policy.completeness_tol {
        projectors.push(rest);
        labels.push("rest".into());
        Some(projectors.len() - 1)
    } else {
        None
    };
    let merged_projectors = ProjectorFamily::new(left_dim, projectors, labels, policy)?;

    // reconstruction residual of the kept terms
    let mut rec = vec![C64::new(0.0, 0.0); psi.total_dim()];
    let dims = psi.dims();
    for k in 0..coefficients.len() {
        let c = coefficients[k];
        let mut multi = vec![0usize; dims.len()];
        for (li, lv) in left_states[k].iter().enumerate() {
            let lm = unravel(li, &left_dims);
            for (pos, &f) in left.iter().enumerate() {
                multi[f] = lm[pos];
            }
            for (ri, rv) in right_states[k].iter().enumerate() {
                let rm = unravel(ri, &right_dims);
                for (pos, &f) in right.iter().enumerate() {
                    multi[f] = rm[pos];
                }
                rec[ravel(&multi, dims)] += c * lv * rv;
            }
        }
    }
    let reconstruction_residual = rec
        .iter()
        .zip(psi.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();

    Ok(SchmidtResult {
        coefficients,
        weights,
        left_states,
        right_states,
        merge_groups,
        merged_projectors,
        remainder,
        left_factors: left,
        right_factors: right,
        reconstruction_residual,
    })
}

/// Definite-valued family of one system with its probability distribution.
#[derive(Debug, Clone)]
pub struct ModalState {
    /// Factor the assignment refers to, when derived from a larger state.
    pub target_factor: Option<usize>,
    /// Merged eigenprojectors, a complete family.
    pub definite_family: ProjectorFamily,
    /// Probability of each family member holding, aligned with the family.
    pub probabilities: Vec<f64>,
    /// Marks members retained only for completeness (numerically zero
    /// probability).
    pub weight_zero: Vec<bool>,
}

/// Property assignment from the spectral resolution of a density operator.
pub fn spectral_modal(rho: &DensityOperator, policy: &NumericPolicy) -> Result<ModalState> {
    let eig = eig_hermitian(rho.matrix(), policy)?;
    if let Some(&min) = eig.values.last() {
        if min < -policy.psd_tol {
            return Err(Error::NotDensity {
                reason: format!("negative eigenvalue {min:.3e}"),
            });
        }
    }
    let groups = merge_degenerate(&eig.values, policy.degeneracy_tol);
    let dim = rho.dim();
    let mut projectors = Vec::with_capacity(groups.len());
    let mut labels = Vec::with_capacity(groups.len());
    let mut probabilities = Vec::with_capacity(groups.len());
    for (g, group) in groups.iter().enumerate() {
        let mut p = ComplexMatrix::zeros(dim, dim);
        let mut prob = 0.0;
        for &i in group {
            let v = eig.vector(i);
            p = p.add(&ComplexMatrix::outer(&v, &v))?;
            prob += eig.values[i];
        }
        projectors.push(p);
        labels.push(format!("e{g}"));
        probabilities.push(prob.max(0.0));
    }
    let weight_zero = probabilities
        .iter()
        .map(|&p| p <= policy.rank_cutoff)
        .collect();
    let definite_family = ProjectorFamily::new(dim, projectors, labels, policy)?;
    Ok(ModalState {
        target_factor: None,
        definite_family,
        probabilities,
        weight_zero,
    })
}

/// Property assignment of one factor of a pure total state: partial trace
/// followed by the spectral rule.
pub fn modal_state_of_factor(
    psi: &PureState,
    factor: usize,
    policy: &NumericPolicy,
) -> Result<ModalState> {
    let rho = crate::state::partial_trace(
        &DensityOperator::from_pure(psi),
        psi.dims(),
        &[factor],
        policy,
    )?;
    let mut state = spectral_modal(&rho, policy)?;
    state.target_factor = Some(factor);
    Ok(state)
}

/// Outcome of a definite-valued membership test.
#[derive(Debug, Clone)]
pub struct DefiniteTest {
    /// Whether the observable lies in the commutative span of the family.
    pub definite: bool,
    /// Expansion coefficients when definite.
    pub coefficients: Option<Vec<f64>>,
    /// Max-norm residual of the best expansion.
    pub residual: f64,
    /// Largest commutator norm with any family member.
    pub max_commutator: f64,
}

/// Tests whether `a = Σ_l a_l P_l` with real coefficients over the family.
pub fn is_definite_valued(
    a: &ComplexMatrix,
    family: &ProjectorFamily,
    policy: &NumericPolicy,
) -> Result<DefiniteTest> {
    if !a.is_square() || a.rows() != family.dim() {
        return Err(Error::ShapeMismatch {
            context: "definite-valued test",
            expected: family.dim(),
            got: a.rows(),
        });
    }
    let herm = a.hermiticity_residual();
    if herm > policy.hermitian_tol {
        return Err(Error::NotHermitian { residual: herm });
    }
    let mut coefficients = Vec::with_capacity(family.len());
    let mut expansion = ComplexMatrix::zeros(a.rows(), a.cols());
    for p in family.projectors() {
        let rank = p.trace().re;
        let coeff = if rank.abs() > 1e-14 {
            p.mul(a)?.trace().re / rank
        } else {
            0.0
        };
        coefficients.push(coeff);
        expansion = expansion.add(&p.scale(C64::new(coeff, 0.0)))?;
    }
    let residual = expansion.sub(a)?.max_abs();
    let mut max_commutator = 0.0f64;
    for p in family.projectors() {
        max_commutator = max_commutator.max(a.commutator_max(p)?);
    }
    let definite =
        residual <= policy.reconstruction_tol && max_commutator <= policy.reconstruction_tol;
    Ok(DefiniteTest {
        definite,
        coefficients: if definite { Some(coefficients) } else { None },
        residual,
        max_commutator,
    })
}

/// A projector acting on a set of factors of a larger state.
#[derive(Debug, Clone)]
pub struct Assignment {
    /// Factors the projector acts on, ascending.
    pub factors: Vec<usize>,
    /// Projector on the joint space of those factors.
    pub projector: ComplexMatrix,
}

impl Assignment {
    pub fn new(factors: Vec<usize>, projector: ComplexMatrix) -> Self {
        Assignment { factors, projector }
    }
}

/// Joint probability that every listed projector holds, `⟨Ψ|P^α P^β …|Ψ⟩`.
///
/// The factor sets must be pairwise disjoint so the embedded projectors
/// commute and the expression is a probability.
pub fn joint_probability_single_time(
    psi: &PureState,
    assignments: &[Assignment],
    policy: &NumericPolicy,
) -> Result<f64> {
    let mut seen = vec![false; psi.dims().len()];
    for a in assignments {
        for &f in &a.factors {
            if f >= seen.len() {
                return Err(Error::IndexOutOfRange {
                    index: f,
                    limit: seen.len(),
                });
            }
            if seen[f] {
                return Err(Error::OverlappingFactors { factor: f });
            }
            seen[f] = true;
        }
    }
    let mut v = psi.amplitudes().to_vec();
    for a in assignments {
        let res = a.projector.projector_residual();
        if res > policy.projector_tol {
            return Err(Error::NotProjector { residual: res });
        }
        let embedded = embed(&a.projector, psi.dims(), &a.factors, policy)?;
        v = embedded.matvec(&v)?;
    }
    let raw = inner(psi.amplitudes(), &v);
    if raw.im.abs() > 1e-12 || raw.re < -1e-12 || raw.re > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "joint probability fell outside [0,1]: {} + {}i",
            raw.re, raw.im
        )));
    }
    Ok(raw.re.clamp(0.0, 1.0))
}
