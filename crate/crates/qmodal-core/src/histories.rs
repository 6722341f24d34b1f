//! Multi-time histories: Heisenberg projector chains, history
//! probabilities, the decoherence functional, and consistency checks.
//!
//! A history family fixes a complete projector family at each of several
//! times, together with the unitary from the origin to that time. The
//! probability of one history is the squared norm of the projector chain
//! applied to the total state; the family supports a joint (Kolmogorov)
//! distribution exactly when every off-diagonal decoherence-functional
//! entry vanishes. Numerically the condition is never exact, so verdicts
//! carry the measured maximum violation and the tolerance they were judged
//! at.

use rayon::prelude::*;

use crate::decoherence::{self, StepBasis};
use crate::error::{Error, Result};
use crate::linalg::matrix_exponential_unitary;
use crate::matrix::{C64, ComplexMatrix, basis_vector, inner};
use crate::policy::NumericPolicy;
use crate::projector::ProjectorFamily;
use crate::state::PureState;
use crate::tensor::{TupleIter, embed};

/// A complete projector family at one time, with the unitary from the
/// origin to that time. Projectors are given in the Schrödinger picture at
/// their own time; the engine conjugates them into Heisenberg form.
#[derive(Debug, Clone)]
pub struct TimedFamily {
    pub time: f64,
    pub family: ProjectorFamily,
    pub unitary_from_origin: ComplexMatrix,
}

impl TimedFamily {
    pub fn new(
        time: f64,
        family: ProjectorFamily,
        unitary_from_origin: ComplexMatrix,
        policy: &NumericPolicy,
    ) -> Result<Self> {
        if unitary_from_origin.rows() != family.dim() || !unitary_from_origin.is_square() {
            return Err(Error::ShapeMismatch {
                context: "timed family unitary",
                expected: family.dim(),
                got: unitary_from_origin.rows(),
            });
        }
        let res = unitary_from_origin.unitarity_residual();
        if res > policy.unitary_tol {
            return Err(Error::NotUnitary { residual: res });
        }
        Ok(TimedFamily {
            time,
            family,
            unitary_from_origin,
        })
    }
}

/// A total state with an ordered list of timed families on its space.
#[derive(Debug, Clone)]
pub struct HistoryFamily {
    pub state: PureState,
    pub timed_families: Vec<TimedFamily>,
}

impl HistoryFamily {
    pub fn new(state: PureState, timed_families: Vec<TimedFamily>) -> Result<Self> {
        if timed_families.is_empty() {
            return Err(Error::InvalidInput(
                "history family needs at least one time".into(),
            ));
        }
        for tf in &timed_families {
            if tf.family.dim() != state.total_dim() {
                return Err(Error::ShapeMismatch {
                    context: "timed family dimension",
                    expected: state.total_dim(),
                    got: tf.family.dim(),
                });
            }
        }
        for w in timed_families.windows(2) {
            if w[0].time >= w[1].time {
                return Err(Error::InvalidInput(
                    "time labels must be strictly increasing".into(),
                ));
            }
        }
        Ok(HistoryFamily {
            state,
            timed_families,
        })
    }

    /// Family sizes per time.
    pub fn shape(&self) -> Vec<usize> {
        self.timed_families.iter().map(|tf| tf.family.len()).collect()
    }

    fn check_indices(&self, indices: &[usize]) -> Result<()> {
        if indices.len() != self.timed_families.len() {
            return Err(Error::ShapeMismatch {
                context: "history index tuple",
                expected: self.timed_families.len(),
                got: indices.len(),
            });
        }
        for (k, &i) in indices.iter().enumerate() {
            let limit = self.timed_families[k].family.len();
            if i >= limit {
                return Err(Error::IndexOutOfRange { index: i, limit });
            }
        }
        Ok(())
    }

    /// Heisenberg projector for family `k`, member `i`.
    fn heisenberg(&self, k: usize, i: usize) -> Result<ComplexMatrix> {
        let tf = &self.timed_families[k];
        heisenberg_projector(tf.family.projector(i), &tf.unitary_from_origin)
    }

    /// `P_{i_n}(t_n) … P_{i_1}(t_1) |Ψ⟩`.
    fn chain_vector(&self, indices: &[usize]) -> Result<Vec<C64>> {
        let mut v = self.state.amplitudes().to_vec();
        for (k, &i) in indices.iter().enumerate() {
            v = self.heisenberg(k, i)?.matvec(&v)?;
        }
        Ok(v)
    }
}

/// `U† P U` without re-validating the inputs beyond shape; used on
/// already-validated family members.
fn conjugate(p: &ComplexMatrix, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    u.dagger().mul(p)?.mul(u)
}

/// Heisenberg form `U† P U` of a projector, with validation.
pub fn heisenberg_projector(p: &ComplexMatrix, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let policy = NumericPolicy::default();
    let pres = p.projector_residual();
    if pres > policy.projector_tol {
        return Err(Error::NotProjector { residual: pres });
    }
    let ures = u.unitarity_residual();
    if ures > policy.unitary_tol {
        return Err(Error::NotUnitary { residual: ures });
    }
    conjugate(p, u)
}

/// Probability of a single history, `‖P_{i_n}(t_n)…P_{i_1}(t_1)|Ψ⟩‖²`.
pub fn history_probability(hf: &HistoryFamily, indices: &[usize]) -> Result<f64> {
    hf.check_indices(indices)?;
    let v = hf.chain_vector(indices)?;
    let p: f64 = v.iter().map(|e| e.norm_sqr()).sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Decoherence functional
/// `⟨Ψ|P_{i_1}(t_1)…P_{i_n}(t_n)·P_{i'_n}(t_n)…P_{i'_1}(t_1)|Ψ⟩`.
pub fn decoherence_functional(
    hf: &HistoryFamily,
    indices: &[usize],
    indices_primed: &[usize],
) -> Result<C64> {
    hf.check_indices(indices)?;
    hf.check_indices(indices_primed)?;
    let a = hf.chain_vector(indices)?;
    let b = hf.chain_vector(indices_primed)?;
    Ok(inner(&a, &b))
}

/// Exhaustive history distribution with its decoherence verdict.
#[derive(Debug, Clone)]
pub struct HistoryProbabilityTable {
    /// Family sizes per time; tuples are mixed-radix over this shape.
    pub shape: Vec<usize>,
    /// Diagonal probabilities in lexicographic tuple order.
    pub probabilities: Vec<f64>,
    /// `|Σ probabilities - 1|`.
    pub normalization_residual: f64,
    /// Largest `|D(x,y)|` over mismatched tuple pairs.
    pub max_offdiagonal: f64,
    /// Tolerance the verdict was judged at.
    pub tol: f64,
    pub consistent: bool,
}

impl HistoryProbabilityTable {
    /// Probability of one tuple.
    pub fn probability(&self, indices: &[usize]) -> Result<f64> {
        if indices.len() != self.shape.len() {
            return Err(Error::ShapeMismatch {
                context: "table lookup",
                expected: self.shape.len(),
                got: indices.len(),
            });
        }
        let mut flat = 0usize;
        for (i, (&ix, &s)) in indices.iter().zip(&self.shape).enumerate() {
            if ix >= s {
                return Err(Error::IndexOutOfRange { index: i, limit: s });
            }
            flat = flat * s + ix;
        }
        Ok(self.probabilities[flat])
    }

    /// Tuples in the same order as `probabilities`.
    pub fn tuples(&self) -> TupleIter {
        TupleIter::new(&self.shape)
    }
}

/// All chain vectors of the family, lexicographic tuple order, sharing
/// prefix work across tuples.
fn all_chain_vectors(hf: &HistoryFamily, policy: &NumericPolicy) -> Result<Vec<Vec<C64>>> {
    let shape = hf.shape();
    let count = TupleIter::count_tuples(&shape);
    if count > policy.history_cap {
        return Err(Error::Capacity {
            what: "history tuples",
            requested: count,
            cap: policy.history_cap,
        });
    }
    // Heisenberg projectors per (time, member)
    let mut heisenberg: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(shape.len());
    for (k, tf) in hf.timed_families.iter().enumerate() {
        let mut row = Vec::with_capacity(shape[k]);
        for i in 0..shape[k] {
            row.push(conjugate(tf.family.projector(i), &tf.unitary_from_origin)?);
        }
        heisenberg.push(row);
    }
    let mut layer = vec![hf.state.amplitudes().to_vec()];
    for k in 0..shape.len() {
        let mut next = Vec::with_capacity(layer.len() * shape[k]);
        for v in &layer {
            for h in &heisenberg[k] {
                next.push(h.matvec(v)?);
            }
        }
        layer = next;
    }
    Ok(layer)
}

fn table_from_chains(chains: &[Vec<C64>], shape: Vec<usize>, tol: f64, parallel: bool) -> HistoryProbabilityTable {
    let probabilities: Vec<f64> = chains
        .iter()
        .map(|v| v.iter().map(|e| e.norm_sqr()).sum::<f64>().clamp(0.0, 1.0))
        .collect();
    let total: f64 = probabilities.iter().sum();
    let normalization_residual = (total - 1.0).abs();
    let n = chains.len();
    let pair_max = |x: usize| -> f64 {
        let mut worst = 0.0f64;
        for y in (x + 1)..n {
            worst = worst.max(inner(&chains[x], &chains[y]).norm());
        }
        worst
    };
    let max_offdiagonal = if parallel {
        (0..n).into_par_iter().map(pair_max).reduce(|| 0.0, f64::max)
    } else {
        (0..n).map(pair_max).fold(0.0, f64::max)
    };
    HistoryProbabilityTable {
        shape,
        probabilities,
        normalization_residual,
        max_offdiagonal,
        tol,
        consistent: max_offdiagonal <= tol,
    }
}

/// Enumerates every history of the family, fills the probability table and
/// measures the worst off-diagonal decoherence-functional entry.
pub fn check_consistency(
    hf: &HistoryFamily,
    tol: f64,
    policy: &NumericPolicy,
) -> Result<HistoryProbabilityTable> {
    let chains = all_chain_vectors(hf, policy)?;
    Ok(table_from_chains(&chains, hf.shape(), tol, false))
}

/// As [`check_consistency`], evaluating tuple pairs on the rayon pool. The
/// reduction is a plain maximum, so the result is identical to the
/// sequential path.
pub fn check_consistency_parallel(
    hf: &HistoryFamily,
    tol: f64,
    policy: &NumericPolicy,
) -> Result<HistoryProbabilityTable> {
    let chains = all_chain_vectors(hf, policy)?;
    Ok(table_from_chains(&chains, hf.shape(), tol, true))
}

/// Sum of the full decoherence matrix, `Σ_{x,y} D(x,y)`; equals 1 up to
/// rounding because each family is complete.
pub fn decoherence_matrix_sum(hf: &HistoryFamily, policy: &NumericPolicy) -> Result<C64> {
    let chains = all_chain_vectors(hf, policy)?;
    let mut total: Vec<C64> = vec![C64::new(0.0, 0.0); hf.state.total_dim()];
    for v in &chains {
        for (t, e) in total.iter_mut().zip(v) {
            *t += e;
        }
    }
    Ok(inner(&total, &total))
}

/// Largest violation of `Σ_dropped P(tuple) = P(shortened tuple)` when the
/// timed family at `drop_time` is removed.
pub fn marginalization_check(
    table: &HistoryProbabilityTable,
    hf: &HistoryFamily,
    drop_time: usize,
) -> Result<f64> {
    if hf.timed_families.len() == 1 {
        return Err(Error::SingleTime);
    }
    if drop_time >= hf.timed_families.len() {
        return Err(Error::IndexOutOfRange {
            index: drop_time,
            limit: hf.timed_families.len(),
        });
    }
    if table.shape != hf.shape() {
        return Err(Error::ShapeMismatch {
            context: "table shape",
            expected: hf.shape().iter().product(),
            got: table.shape.iter().product(),
        });
    }
    let mut shortened = hf.timed_families.clone();
    shortened.remove(drop_time);
    let short_hf = HistoryFamily::new(hf.state.clone(), shortened)?;
    let reduced_shape = short_hf.shape();
    let mut residual = 0.0f64;
    for reduced in TupleIter::new(&reduced_shape) {
        let mut summed = 0.0;
        for d in 0..table.shape[drop_time] {
            let mut full = reduced.clone();
            full.insert(drop_time, d);
            summed += table.probability(&full)?;
        }
        let direct = history_probability(&short_hf, &reduced)?;
        residual = residual.max((summed - direct).abs());
    }
    Ok(residual)
}

/// The closed-qubit versus dilated-system contrast scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KentVariant {
    /// Closed qubit, z families at `t₁ = Δ` and `t₂ = 2Δ`, precession
    /// `exp(-i σ_x t)` — the families do not commute with the dynamics and
    /// no record survives, so the decoherence condition fails.
    NaivePrecessing,
    /// Same construction with `exp(-i σ_z t)`: the evolution commutes with
    /// the families, history values evolve deterministically and the
    /// condition holds.
    NaiveCommuting,
    /// The qubit dilated with one fresh record factor per time; the same
    /// σ_x precession runs between recordings. Records stay orthogonal, so
    /// the condition holds to rounding.
    Dilated,
}

/// Builds the requested scenario with time spacing `delta_t`.
pub fn kent_scenario(
    variant: KentVariant,
    delta_t: f64,
    policy: &NumericPolicy,
) -> Result<HistoryFamily> {
    match variant {
        KentVariant::NaivePrecessing | KentVariant::NaiveCommuting => {
            let h = match variant {
                KentVariant::NaivePrecessing => crate::matrix::pauli::sigma_x(),
                _ => crate::matrix::pauli::sigma_z(),
            };
            let state = PureState::basis(vec![2], 0, policy)?;
            let family = ProjectorFamily::computational(2, policy)?;
            let u1 = matrix_exponential_unitary(&h, delta_t, policy)?;
            let u2 = matrix_exponential_unitary(&h, 2.0 * delta_t, policy)?;
            HistoryFamily::new(
                state,
                vec![
                    TimedFamily::new(delta_t, family.clone(), u1, policy)?,
                    TimedFamily::new(2.0 * delta_t, family, u2, policy)?,
                ],
            )
        }
        KentVariant::Dilated => {
            let dims = vec![2usize, 2, 2];
            let state = PureState::basis(dims.clone(), 0, policy)?;
            let z_basis = vec![basis_vector(2, 0), basis_vector(2, 1)];
            let precess = embed(
                &matrix_exponential_unitary(&crate::matrix::pauli::sigma_x(), delta_t, policy)?,
                &dims,
                &[0],
                policy,
            )?;
            let record1 = decoherence::correlate_unitary(&dims, 0, 1, &z_basis, policy)?;
            let record2 = decoherence::correlate_unitary(&dims, 0, 2, &z_basis, policy)?;
            let u1 = record1.mul(&precess)?;
            let u2 = record2.mul(&precess)?.mul(&u1)?;
            let sys_family = ProjectorFamily::computational(2, policy)?;
            let embedded: Vec<ComplexMatrix> = (0..2)
                .map(|i| embed(sys_family.projector(i), &dims, &[0], policy))
                .collect::<Result<_>>()?;
            let family = ProjectorFamily::with_index_labels(8, embedded, policy)?;
            HistoryFamily::new(
                state,
                vec![
                    TimedFamily::new(delta_t, family.clone(), u1, policy)?,
                    TimedFamily::new(2.0 * delta_t, family, u2, policy)?,
                ],
            )
        }
    }
}

/// HistoryFamily of a recording scenario: the pointer family of step `k`
/// (conditioned on earlier records for branch-dependent steps), embedded on
/// the full space, at time `k`.
pub fn history_family_from_scenario(
    scenario: &decoherence::RecordingScenario,
    policy: &NumericPolicy,
) -> Result<HistoryFamily> {
    let dims = &scenario.dims;
    let full: usize = dims.iter().product();
    let mut timed = Vec::with_capacity(scenario.steps());
    for (k, basis) in scenario.pointer_bases.iter().enumerate() {
        let projectors: Vec<ComplexMatrix> = match basis {
            StepBasis::Uniform(vectors) => vectors
                .iter()
                .map(|v| embed(&ComplexMatrix::outer(v, v), dims, &[0], policy))
                .collect::<Result<_>>()?,
            StepBasis::PerBranch(branches) => {
                // member j: Σ_i |β_{i,j}⟩⟨β_{i,j}| ⊗ |i⟩⟨i| on the first
                // record factor
                let outcomes = branches
                    .iter()
                    .map(|b| b.len())
                    .max()
                    .unwrap_or(0);
                let mut members = Vec::with_capacity(outcomes);
                for j in 0..outcomes {
                    let mut p = ComplexMatrix::zeros(full, full);
                    for (i, branch) in branches.iter().enumerate() {
                        if j >= branch.len() {
                            continue;
                        }
                        let sys =
                            embed(&ComplexMatrix::outer(&branch[j], &branch[j]), dims, &[0], policy)?;
                        let tag = basis_vector(dims[1], i);
                        let rec = embed(&ComplexMatrix::outer(&tag, &tag), dims, &[1], policy)?;
                        p = p.add(&sys.mul(&rec)?)?;
                    }
                    members.push(p);
                }
                // complete with the remainder of unused record values
                let mut sum = ComplexMatrix::zeros(full, full);
                for m in &members {
                    sum = sum.add(m)?;
                }
                let rest = ComplexMatrix::identity(full).sub(&sum)?;
                if rest.max_abs() > policy.completeness_tol {
                    members.push(rest);
                }
                members
            }
        };
        let family = ProjectorFamily::with_index_labels(full, projectors, policy)?;
        let unitary = scenario.unitary_from_origin(k + 1, policy)?;
        timed.push(TimedFamily::new((k + 1) as f64, family, unitary, policy)?);
    }
    HistoryFamily::new(scenario.initial_state.clone(), timed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::pauli;
    use crate::rng::SplitMix64;

    fn policy() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn z_basis() -> Vec<Vec<C64>> {
        vec![basis_vector(2, 0), basis_vector(2, 1)]
    }

    fn x_basis() -> Vec<Vec<C64>> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![
            vec![C64::new(h, 0.0), C64::new(h, 0.0)],
            vec![C64::new(h, 0.0), C64::new(-h, 0.0)],
        ]
    }

    fn plus() -> Vec<C64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![C64::new(h, 0.0), C64::new(h, 0.0)]
    }

    #[test]
    fn heisenberg_projector_basics() {
        let p0 = ComplexMatrix::outer(&basis_vector(2, 0), &basis_vector(2, 0));
        let same = heisenberg_projector(&p0, &ComplexMatrix::identity(2)).unwrap();
        assert!(same.max_distance(&p0) < 1e-15);
        let flipped = heisenberg_projector(&p0, &pauli::sigma_x()).unwrap();
        let p1 = ComplexMatrix::outer(&basis_vector(2, 1), &basis_vector(2, 1));
        assert!(flipped.max_distance(&p1) < 1e-15);
    }

    #[test]
    fn heisenberg_projector_preserves_rank() {
        // rank via eigenvalue count oracle
        let p = policy();
        let mut rng = SplitMix64::new(0xabcd);
        for _ in 0..10 {
            let h = rng.hermitian(4);
            let eig = crate::linalg::eig_hermitian(&h, &p).unwrap();
            // rank-2 projector from the top eigenvectors
            let mut proj = ComplexMatrix::zeros(4, 4);
            for k in 0..2 {
                let v = eig.vector(k);
                proj = proj.add(&ComplexMatrix::outer(&v, &v)).unwrap();
            }
            let u = matrix_exponential_unitary(&rng.hermitian(4), 0.7, &p).unwrap();
            let rotated = heisenberg_projector(&proj, &u).unwrap();
            let spec = crate::linalg::eig_hermitian(&rotated, &p).unwrap();
            let rank = spec.values.iter().filter(|&&v| v > 0.5).count();
            assert_eq!(rank, 2);
        }
    }

    #[test]
    fn single_time_reduces_to_born_rule() {
        let p = policy();
        let hf = kent_scenario(KentVariant::NaivePrecessing, 0.3, &p).unwrap();
        let single = HistoryFamily::new(hf.state.clone(), vec![hf.timed_families[0].clone()]).unwrap();
        let prob0 = history_probability(&single, &[0]).unwrap();
        // Born rule at t₁: |⟨0|U(t₁)|0⟩|² = cos²(0.3)
        assert!((prob0 - 0.3f64.cos().powi(2)).abs() < 1e-12);
        let table = check_consistency(&single, 1e-10, &p).unwrap();
        assert!(table.consistent);
        assert!(table.normalization_residual < 1e-12);
    }

    #[test]
    fn repeated_projector_is_deterministic() {
        // P(t₂) = U†P(t₁)U with matching indices: the same Heisenberg
        // projector twice, so the probability equals the single-time value
        let p = policy();
        let family = ProjectorFamily::computational(2, &p).unwrap();
        let state = PureState::new(vec![2], plus(), &p).unwrap();
        let u1 = matrix_exponential_unitary(&pauli::sigma_x(), 0.4, &p).unwrap();
        // choose the t₂ family so that U₂†P'U₂ = U₁†PU₁
        let u2 = matrix_exponential_unitary(&pauli::sigma_x(), 0.9, &p).unwrap();
        let v = u2.mul(&u1.dagger()).unwrap();
        let rotated: Vec<ComplexMatrix> = (0..2)
            .map(|i| v.mul(family.projector(i)).unwrap().mul(&v.dagger()).unwrap())
            .collect();
        let rotated_family = ProjectorFamily::with_index_labels(2, rotated, &p).unwrap();
        let hf = HistoryFamily::new(
            state.clone(),
            vec![
                TimedFamily::new(0.4, family.clone(), u1.clone(), &p).unwrap(),
                TimedFamily::new(0.9, rotated_family, u2, &p).unwrap(),
            ],
        )
        .unwrap();
        let single = HistoryFamily::new(
            state,
            vec![TimedFamily::new(0.4, family, u1, &p).unwrap()],
        )
        .unwrap();
        for i in 0..2 {
            let twice = history_probability(&hf, &[i, i]).unwrap();
            let once = history_probability(&single, &[i]).unwrap();
            assert!((twice - once).abs() < 1e-12);
            // mismatched indices never fire
            assert!(history_probability(&hf, &[i, 1 - i]).unwrap() < 1e-12);
        }
    }

    #[test]
    fn diagonal_matches_history_probability() {
        let p = policy();
        let hf = kent_scenario(KentVariant::NaivePrecessing, 0.6, &p).unwrap();
        for ix in TupleIter::new(&hf.shape()) {
            let d = decoherence_functional(&hf, &ix, &ix).unwrap();
            let prob = history_probability(&hf, &ix).unwrap();
            assert!((d.re - prob).abs() < 1e-12);
            assert!(d.im.abs() < 1e-12);
        }
    }

    #[test]
    fn decoherence_functional_is_hermitian() {
        let p = policy();
        let hf = kent_scenario(KentVariant::NaivePrecessing, 0.6, &p).unwrap();
        let tuples: Vec<Vec<usize>> = TupleIter::new(&hf.shape()).collect();
        for x in &tuples {
            for y in &tuples {
                let dxy = decoherence_functional(&hf, x, y).unwrap();
                let dyx = decoherence_functional(&hf, y, x).unwrap();
                assert!((dxy - dyx.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kent_naive_precessing_is_inconsistent() {
        // closed-form 2x2 oracle: with t₁ = Δ, t₂ = 2Δ the largest
        // off-diagonal magnitude is sin²(2Δ)/4
        let p = policy();
        let delta = std::f64::consts::FRAC_PI_4;
        let hf = kent_scenario(KentVariant::NaivePrecessing, delta, &p).unwrap();
        let table = check_consistency(&hf, 1e-10, &p).unwrap();
        assert!(!table.consistent);
        assert!(table.max_offdiagonal > 0.1);
        let oracle = (2.0 * delta).sin().powi(2) / 4.0;
        assert!((table.max_offdiagonal - oracle).abs() < 1e-12);
    }

    #[test]
    fn kent_naive_commuting_is_consistent() {
        let p = policy();
        let hf = kent_scenario(KentVariant::NaiveCommuting, std::f64::consts::FRAC_PI_4, &p).unwrap();
        let table = check_consistency(&hf, 1e-10, &p).unwrap();
        assert!(table.consistent);
        assert!(table.normalization_residual <= 1e-10);
    }

    #[test]
    fn kent_dilated_is_consistent_to_rounding() {
        let p = policy();
        let hf = kent_scenario(KentVariant::Dilated, std::f64::consts::FRAC_PI_4, &p).unwrap();
        let table = check_consistency(&hf, 1e-12, &p).unwrap();
        assert!(table.consistent);
        assert!(table.max_offdiagonal <= 1e-12);
        assert!(table.normalization_residual <= 1e-10);
    }

    #[test]
    fn measurement_chain_histories_are_consistent() {
        let p = policy();
        let s = decoherence::build_measurement_chain(2, &[z_basis(), x_basis()], &plus(), &p).unwrap();
        let hf = history_family_from_scenario(&s, &p).unwrap();
        let table = check_consistency(&hf, 1e-12, &p).unwrap();
        assert!(table.consistent);
        // sequential Lüders-rule oracle: all four outcomes at 1/4
        for ix in TupleIter::new(&hf.shape()) {
            assert!((table.probability(&ix).unwrap() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn off_diagonal_detected_without_environment() {
        // bare qubit precessing between z families: closed-form oracle
        let p = policy();
        let hf = kent_scenario(KentVariant::NaivePrecessing, 0.5, &p).unwrap();
        let d = decoherence_functional(&hf, &[0, 0], &[1, 0]).unwrap();
        let c = 0.5f64.cos();
        let s = 0.5f64.sin();
        assert!((d.norm() - c * c * s * s).abs() < 1e-12);
        assert!(d.norm() > 1e-3);
    }

    #[test]
    fn marginalization_of_consistent_family() {
        let p = policy();
        let s = decoherence::build_measurement_chain(2, &[z_basis(), x_basis()], &plus(), &p).unwrap();
        let hf = history_family_from_scenario(&s, &p).unwrap();
        let table = check_consistency(&hf, 1e-10, &p).unwrap();
        for drop in 0..2 {
            let residual = marginalization_check(&table, &hf, drop).unwrap();
            assert!(residual <= 1e-10, "drop {drop}: residual {residual}");
        }
    }

    #[test]
    fn marginalization_flags_inconsistent_family() {
        let p = policy();
        let hf = kent_scenario(KentVariant::NaivePrecessing, std::f64::consts::FRAC_PI_4, &p).unwrap();
        let table = check_consistency(&hf, 1e-10, &p).unwrap();
        let residual = marginalization_check(&table, &hf, 0).unwrap();
        assert!(residual > 0.01);
    }

    #[test]
    fn marginalization_rejects_single_time() {
        let p = policy();
        let hf = kent_scenario(KentVariant::NaivePrecessing, 0.3, &p).unwrap();
        let single = HistoryFamily::new(hf.state.clone(), vec![hf.timed_families[0].clone()]).unwrap();
        let table = check_consistency(&single, 1e-10, &p).unwrap();
        assert!(matches!(
            marginalization_check(&table, &single, 0),
            Err(Error::SingleTime)
        ));
    }

    #[test]
    fn trivial_family_insertion_is_invisible() {
        let p = policy();
        let hf = kent_scenario(KentVariant::NaivePrecessing, 0.5, &p).unwrap();
        let trivial = ProjectorFamily::trivial(2, &p).unwrap();
        let u_mid = matrix_exponential_unitary(&pauli::sigma_x(), 0.75, &p).unwrap();
        let mut families = hf.timed_families.clone();
        families.insert(
            1,
            TimedFamily::new(0.75, trivial, u_mid, &p).unwrap(),
        );
        let padded = HistoryFamily::new(hf.state.clone(), families).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let a = history_probability(&hf, &[i, j]).unwrap();
                let b = history_probability(&padded, &[i, 0, j]).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_decoherence_matrix_sums_to_one() {
        let p = policy();
        for variant in [
            KentVariant::NaivePrecessing,
            KentVariant::NaiveCommuting,
            KentVariant::Dilated,
        ] {
            let hf = kent_scenario(variant, 0.37, &p).unwrap();
            let total = decoherence_matrix_sum(&hf, &p).unwrap();
            assert!((total.re - 1.0).abs() < 1e-9);
            assert!(total.im.abs() < 1e-9);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let p = policy();
        let hf = kent_scenario(KentVariant::Dilated, 0.4, &p).unwrap();
        let seq = check_consistency(&hf, 1e-10, &p).unwrap();
        let par = check_consistency_parallel(&hf, 1e-10, &p).unwrap();
        assert_eq!(seq.max_offdiagonal.to_bits(), par.max_offdiagonal.to_bits());
        assert_eq!(seq.probabilities, par.probabilities);
    }

    #[test]
    fn capacity_cap_is_enforced() {
        let p = NumericPolicy {
            history_cap: 3,
            ..NumericPolicy::default()
        };
        let hf = kent_scenario(KentVariant::NaivePrecessing, 0.4, &p).unwrap();
        assert!(matches!(
            check_consistency(&hf, 1e-10, &p),
            Err(Error::Capacity { .. })
        ));
    }
}
