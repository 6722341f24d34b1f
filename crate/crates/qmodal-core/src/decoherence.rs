//! Scenario factory for environment-record ("memory") dynamics.
//!
//! Each step is a measurement-like interaction: a unitary that correlates
//! a pointer basis of the system with fresh, mutually orthogonal states of
//! a dedicated record factor, and acts as the identity on every earlier
//! record. Applying all steps to a product initial state produces the
//! canonical memory form `Σ c_{i,j,…} |ψ_{i,j,…}⟩|Φ_{i,j,…}⟩` with
//! orthonormal record states.

use crate::error::{Error, Result};
use crate::matrix::{C64, ComplexMatrix, basis_vector, inner};
use crate::policy::NumericPolicy;
use crate::state::{PureState, evolve};
use crate::tensor::{embed, total_dim};

/// Pointer bases of one interaction step.
#[derive(Debug, Clone)]
pub enum StepBasis {
    /// One basis for every branch (ordinary premeasurement).
    Uniform(Vec<Vec<C64>>),
    /// One basis per first-step outcome; the step conditions on the first
    /// record factor.
    PerBranch(Vec<Vec<Vec<C64>>>),
}

/// A prepared chain of recording interactions.
#[derive(Debug, Clone)]
pub struct RecordingScenario {
    pub system_dim: usize,
    pub pointer_bases: Vec<StepBasis>,
    pub record_dims: Vec<usize>,
    /// System and record factors: `[system_dim, record_dims…]`, system
    /// first, one record factor per step.
    pub dims: Vec<usize>,
    pub initial_state: PureState,
    pub step_unitaries: Vec<ComplexMatrix>,
}

impl RecordingScenario {
    pub fn steps(&self) -> usize {
        self.step_unitaries.len()
    }

    /// Cumulative unitary from the origin through `upto_step` steps.
    pub fn unitary_from_origin(&self, upto_step: usize, policy: &NumericPolicy) -> Result<ComplexMatrix> {
        if upto_step > self.steps() {
            return Err(Error::IndexOutOfRange {
                index: upto_step,
                limit: self.steps() + 1,
            });
        }
        let dim = total_dim(&self.dims);
        if dim > policy.dim_cap {
            return Err(Error::Capacity {
                what: "scenario dimension",
                requested: dim,
                cap: policy.dim_cap,
            });
        }
        let mut u = ComplexMatrix::identity(dim);
        for step in &self.step_unitaries[..upto_step] {
            u = step.mul(&u)?;
        }
        Ok(u)
    }
}

fn check_orthonormal_basis(
    basis: &[Vec<C64>],
    dim: usize,
    tol: f64,
    what: &str,
) -> Result<()> {
    if basis.len() != dim {
        return Err(Error::IncompleteBasis {
            reason: format!("{what}: {} vectors for dimension {dim}", basis.len()),
        });
    }
    for (i, v) in basis.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::IncompleteBasis {
                reason: format!("{what}: vector {i} has length {}", v.len()),
            });
        }
        for (j, w) in basis.iter().enumerate() {
            let d = inner(v, w);
            let expected = if i == j { 1.0 } else { 0.0 };
            if (d - C64::new(expected, 0.0)).norm() > tol {
                return Err(Error::IncompleteBasis {
                    reason: format!("{what}: vectors {i},{j} fail orthonormality"),
                });
            }
        }
    }
    Ok(())
}

/// Cyclic-shift permutation `|r⟩ → |r + amount mod dim⟩`.
fn shift_matrix(dim: usize, amount: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        m[((r + amount) % dim, r)] = C64::new(1.0, 0.0);
    }
    m
}

/// Unitary on the full space that writes the value of `basis` on factor
/// `src` into factor `tgt` as a cyclic shift of its ready state:
/// `Σ_j |β_j⟩⟨β_j|_src ⊗ Shift_j_tgt`. The cyclic-shift completion makes
/// the step unitary on the whole space, deterministically.
pub fn correlate_unitary(
    dims: &[usize],
    src: usize,
    tgt: usize,
    basis: &[Vec<C64>],
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    if src == tgt {
        return Err(Error::InvalidInput(
            "record source and target must differ".into(),
        ));
    }
    check_orthonormal_basis(basis, dims[src], policy.orthogonality_tol, "pointer basis")?;
    let full = total_dim(dims);
    let mut u = ComplexMatrix::zeros(full, full);
    for (j, vector) in basis.iter().enumerate() {
        let p = embed(&ComplexMatrix::outer(vector, vector), dims, &[src], policy)?;
        let w = embed(&shift_matrix(dims[tgt], j % dims[tgt]), dims, &[tgt], policy)?;
        u = u.add(&p.mul(&w)?)?;
    }
    Ok(u)
}

/// As [`correlate_unitary`] but with an arbitrary unitary applied to the
/// target for each source basis value.
pub fn conditional_unitary(
    dims: &[usize],
    src: usize,
    tgt: usize,
    basis: &[Vec<C64>],
    target_ops: &[ComplexMatrix],
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    if src == tgt {
        return Err(Error::InvalidInput(
            "control and target factors must differ".into(),
        ));
    }
    check_orthonormal_basis(basis, dims[src], policy.orthogonality_tol, "control basis")?;
    if target_ops.len() != basis.len() {
        return Err(Error::InvalidInput(format!(
            "{} target operations for {} control values",
            target_ops.len(),
            basis.len()
        )));
    }
    let full = total_dim(dims);
    let mut u = ComplexMatrix::zeros(full, full);
    for (j, vector) in basis.iter().enumerate() {
        let op = &target_ops[j];
        let res = op.unitarity_residual();
        if res > policy.unitary_tol {
            return Err(Error::NotUnitary { residual: res });
        }
        if op.rows() != dims[tgt] {
            return Err(Error::ShapeMismatch {
                context: "conditional target operation",
                expected: dims[tgt],
                got: op.rows(),
            });
        }
        let p = embed(&ComplexMatrix::outer(vector, vector), dims, &[src], policy)?;
        let w = embed(op, dims, &[tgt], policy)?;
        u = u.add(&p.mul(&w)?)?;
    }
    Ok(u)
}

/// Builds the consecutive measurement-like chain: step `k` records the
/// pointer basis `pointer_bases[k]` of the system into record factor `k+1`.
pub fn build_measurement_chain(
    system_dim: usize,
    pointer_bases: &[Vec<Vec<C64>>],
    initial_system: &[C64],
    policy: &NumericPolicy,
) -> Result<RecordingScenario> {
    if pointer_bases.is_empty() {
        return Err(Error::InvalidInput("need at least one step".into()));
    }
    if initial_system.len() != system_dim {
        return Err(Error::ShapeMismatch {
            context: "initial system vector",
            expected: system_dim,
            got: initial_system.len(),
        });
    }
    let record_dims = vec![system_dim; pointer_bases.len()];
    let mut dims = vec![system_dim];
    dims.extend_from_slice(&record_dims);
    let total = total_dim(&dims);
    if total > policy.dim_cap {
        return Err(Error::Capacity {
            what: "scenario dimension",
            requested: total,
            cap: policy.dim_cap,
        });
    }
    let mut factors = vec![initial_system.to_vec()];
    for &d in &record_dims {
        factors.push(basis_vector(d, 0));
    }
    let initial_state = PureState::from_factors(&factors, policy)?;
    let mut step_unitaries = Vec::with_capacity(pointer_bases.len());
    for (k, basis) in pointer_bases.iter().enumerate() {
        check_orthonormal_basis(basis, system_dim, policy.orthogonality_tol, "pointer basis")?;
        step_unitaries.push(correlate_unitary(&dims, 0, k + 1, basis, policy)?);
    }
    Ok(RecordingScenario {
        system_dim,
        pointer_bases: pointer_bases.iter().cloned().map(StepBasis::Uniform).collect(),
        record_dims,
        dims,
        initial_state,
        step_unitaries,
    })
}

/// Two-step chain whose second interaction conditions on the first record:
/// branch `i` is measured in its own basis `per_branch_bases[i]`.
pub fn build_branch_dependent_chain(
    system_dim: usize,
    first_basis: &[Vec<C64>],
    per_branch_bases: &[Vec<Vec<C64>>],
    initial_system: &[C64],
    policy: &NumericPolicy,
) -> Result<RecordingScenario> {
    check_orthonormal_basis(first_basis, system_dim, policy.orthogonality_tol, "first basis")?;
    if per_branch_bases.len() != system_dim {
        return Err(Error::IncompleteBasis {
            reason: format!(
                "{} per-branch bases for {} first-step outcomes",
                per_branch_bases.len(),
                system_dim
            ),
        });
    }
    for (i, basis) in per_branch_bases.iter().enumerate() {
        check_orthonormal_basis(
            basis,
            system_dim,
            policy.orthogonality_tol,
            &format!("branch {i} basis"),
        )?;
    }
    if initial_system.len() != system_dim {
        return Err(Error::ShapeMismatch {
            context: "initial system vector",
            expected: system_dim,
            got: initial_system.len(),
        });
    }
    let record_dims = vec![system_dim, system_dim];
    let dims = vec![system_dim, system_dim, system_dim];
    let total = total_dim(&dims);
    if total > policy.dim_cap {
        return Err(Error::Capacity {
            what: "scenario dimension",
            requested: total,
            cap: policy.dim_cap,
        });
    }
    let initial_state = PureState::from_factors(
        &[
            initial_system.to_vec(),
            basis_vector(system_dim, 0),
            basis_vector(system_dim, 0),
        ],
        policy,
    )?;
    let u1 = correlate_unitary(&dims, 0, 1, first_basis, policy)?;
    // second step: Σ_{i,j} |β_{i,j}⟩⟨β_{i,j}|_sys ⊗ |i⟩⟨i|_rec1 ⊗ Shift_j_rec2
    let full = total_dim(&dims);
    let mut u2 = ComplexMatrix::zeros(full, full);
    for (i, basis) in per_branch_bases.iter().enumerate() {
        let rec1 = basis_vector(system_dim, i);
        let cond = embed(&ComplexMatrix::outer(&rec1, &rec1), &dims, &[1], policy)?;
        for (j, vector) in basis.iter().enumerate() {
            let p = embed(&ComplexMatrix::outer(vector, vector), &dims, &[0], policy)?;
            let w = embed(&shift_matrix(system_dim, j), &dims, &[2], policy)?;
            u2 = u2.add(&p.mul(&cond)?.mul(&w)?)?;
        }
    }
    let res = u2.unitarity_residual();
    if res > policy.unitary_tol {
        return Err(Error::NotUnitary { residual: res });
    }
    Ok(RecordingScenario {
        system_dim,
        pointer_bases: vec![
            StepBasis::Uniform(first_basis.to_vec()),
            StepBasis::PerBranch(per_branch_bases.to_vec()),
        ],
        record_dims,
        dims,
        initial_state,
        step_unitaries: vec![u1, u2],
    })
}

/// State after applying the first `upto_step` interactions.
pub fn scenario_total_state(
    scenario: &RecordingScenario,
    upto_step: usize,
    policy: &NumericPolicy,
) -> Result<PureState> {
    if upto_step > scenario.steps() {
        return Err(Error::IndexOutOfRange {
            index: upto_step,
            limit: scenario.steps() + 1,
        });
    }
    let mut psi = scenario.initial_state.clone();
    for step in &scenario.step_unitaries[..upto_step] {
        psi = evolve(&psi, step, policy)?;
    }
    Ok(psi)
}

/// Record states of the full chain, one per surviving outcome tuple, used
/// to verify record orthonormality. Returns pairs of (amplitude, record
/// part) for tuples with nonzero amplitude.
pub fn record_overlap_residual(
    scenario: &RecordingScenario,
    policy: &NumericPolicy,
) -> Result<f64> {
    // Expand the final state in the record-factor computational basis and
    // check that distinct record values never share system support other
    // than through orthogonal record tags. Equivalent check: the Gram
    // matrix of the conditional system vectors indexed by record value is
    // diagonal.
    let psi = scenario_total_state(scenario, scenario.steps(), policy)?;
    let sys_dim = scenario.system_dim;
    let rec_total: usize = scenario.record_dims.iter().product();
    let mut conditional: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); sys_dim]; rec_total];
    for (n, amp) in psi.amplitudes().iter().enumerate() {
        let s = n / rec_total;
        let r = n % rec_total;
        conditional[r][s] = *amp;
    }
    let mut worst = 0.0f64;
    for a in 0..rec_total {
        for b in (a + 1)..rec_total {
            worst = worst.max(inner(&conditional[a], &conditional[b]).norm());
        }
    }
    Ok(worst)
}
