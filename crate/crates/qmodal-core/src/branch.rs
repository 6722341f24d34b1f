//! Branch trees: per-branch biorthogonal decompositions across successive
//! interactions, branch-relative property assignment, and reinterference
//! detection.
//!
//! Each interaction unitary is applied to every leaf separately; the
//! resulting branch state is decomposed across the system|environment cut
//! and one child is attached per surviving term. Distinct branches remain
//! meaningful only while their environment states stay orthogonal, so
//! cross-path overlaps are measured after every step rather than assumed.

use crate::error::{Error, Result};
use crate::histories::{HistoryFamily, TimedFamily};
use crate::matrix::{C64, ComplexMatrix, inner, vec_norm};
use crate::modal::schmidt_decompose;
use crate::policy::NumericPolicy;
use crate::projector::ProjectorFamily;
use crate::state::{PureState, evolve};
use crate::tensor::assemble_product_vector;

/// One branch: a product of a system state and an environment state,
/// reached along `path`, carrying the accumulated amplitude.
#[derive(Debug, Clone)]
pub struct BranchNode {
    pub path: Vec<usize>,
    pub amplitude: C64,
    pub system_state: Vec<C64>,
    pub environment_state: Vec<C64>,
    pub children: Vec<BranchNode>,
}

impl BranchNode {
    fn leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Cross-path environment overlap report.
#[derive(Debug, Clone)]
pub struct ReinterferenceReport {
    /// Largest `|⟨E_p|E_q⟩|` over distinct leaf paths.
    pub max_overlap: f64,
    /// Leaf path pairs whose overlap exceeded the tolerance of the check
    /// that produced this report.
    pub offending: Vec<(Vec<usize>, Vec<usize>)>,
}

/// Branch tree over a fixed system factor of a tensor-product space.
#[derive(Debug, Clone)]
pub struct BranchTree {
    pub root: BranchNode,
    /// Number of interactions applied so far.
    pub depth: usize,
    /// Norm distance between the leaf resummation and the evolved state.
    pub reconstruction_residual: f64,
    dims: Vec<usize>,
    system_factor: usize,
    environment_factors: Vec<usize>,
    initial_state: PureState,
    evolved_state: PureState,
    interactions: Vec<ComplexMatrix>,
    /// Set when any decomposition step saw a cross-path environment overlap
    /// above the policy's reinterference tolerance.
    pub reinterference_flag: bool,
}

impl BranchTree {
    /// Starts a tree from a product state across the system|environment
    /// cut. The root is the pre-interaction branch with path `()`.
    pub fn new(initial: &PureState, system_factor: usize, policy: &NumericPolicy) -> Result<Self> {
        if initial.dims().len() < 2 {
            return Err(Error::InvalidInput(
                "branch tree needs a system factor and at least one environment factor".into(),
            ));
        }
        if system_factor >= initial.dims().len() {
            return Err(Error::IndexOutOfRange {
                index: system_factor,
                limit: initial.dims().len(),
            });
        }
        let dec = schmidt_decompose(initial, &[system_factor], policy)?;
        if dec.rank() != 1 {
            return Err(Error::InvalidInput(format!(
                "pre-interaction state must be a product across the cut (Schmidt rank {})",
                dec.rank()
            )));
        }
        let environment_factors: Vec<usize> = (0..initial.dims().len())
            .filter(|&f| f != system_factor)
            .collect();
        let root = BranchNode {
            path: Vec::new(),
            amplitude: dec.coefficients[0],
            system_state: dec.left_states[0].clone(),
            environment_state: dec.right_states[0].clone(),
            children: Vec::new(),
        };
        Ok(BranchTree {
            root,
            depth: 0,
            reconstruction_residual: 0.0,
            dims: initial.dims().to_vec(),
            system_factor,
            environment_factors,
            initial_state: initial.clone(),
            evolved_state: initial.clone(),
            interactions: Vec::new(),
            reinterference_flag: false,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn system_factor(&self) -> usize {
        self.system_factor
    }

    pub fn initial_state(&self) -> &PureState {
        &self.initial_state
    }

    pub fn evolved_state(&self) -> &PureState {
        &self.evolved_state
    }

    pub fn interactions(&self) -> &[ComplexMatrix] {
        &self.interactions
    }

    /// Leaves in canonical order (depth-first, children already sorted by
    /// weight at construction).
    pub fn leaves(&self) -> Vec<&BranchNode> {
        let mut out = Vec::new();
        collect_leaves(&self.root, &mut out);
        out
    }

    /// Nodes at an exact depth.
    pub fn nodes_at_depth(&self, depth: usize) -> Vec<&BranchNode> {
        let mut out = Vec::new();
        collect_at_depth(&self.root, depth, &mut out);
        out
    }

    /// Full product vector of one node on the total space.
    pub fn node_total_vector(&self, node: &BranchNode) -> Result<Vec<C64>> {
        assemble_product_vector(
            &self.dims,
            &[self.system_factor],
            &node.system_state,
            &self.environment_factors,
            &node.environment_state,
        )
    }
}

fn collect_leaves<'a>(node: &'a BranchNode, out: &mut Vec<&'a BranchNode>) {
    if node.leaf() {
        out.push(node);
    } else {
        for child in &node.children {
            collect_leaves(child, out);
        }
    }
}

fn collect_at_depth<'a>(node: &'a BranchNode, depth: usize, out: &mut Vec<&'a BranchNode>) {
    if node.path.len() == depth {
        out.push(node);
        return;
    }
    for child in &node.children {
        collect_at_depth(child, depth, out);
    }
}

/// Applies one interaction: evolves every leaf separately, decomposes each
/// resulting branch state across the cut, and attaches one child per
/// surviving term. Environment orthogonality across the new leaves is
/// measured; violations raise the tree's reinterference flag.
pub fn branch_decompose(
    tree: &BranchTree,
    interaction: &ComplexMatrix,
    policy: &NumericPolicy,
) -> Result<BranchTree> {
    let total = tree.evolved_state.total_dim();
    if interaction.rows() != total || !interaction.is_square() {
        return Err(Error::ShapeMismatch {
            context: "interaction unitary",
            expected: total,
            got: interaction.rows(),
        });
    }
    let ures = interaction.unitarity_residual();
    if ures > policy.unitary_tol {
        return Err(Error::NotUnitary { residual: ures });
    }

    let mut next = tree.clone();
    next.evolved_state = evolve(&tree.evolved_state, interaction, policy)?;
    next.interactions.push(interaction.clone());
    next.depth += 1;

    let mut leaf_budget = 0usize;
    grow(
        &mut next.root,
        tree,
        interaction,
        policy,
        &mut leaf_budget,
    )?;

    // reconstruction: leaves must re-sum to the evolved total state
    let mut resum = vec![C64::new(0.0, 0.0); total];
    for leaf in next.leaves() {
        let v = assemble_product_vector(
            &next.dims,
            &[next.system_factor],
            &leaf.system_state,
            &next.environment_factors,
            &leaf.environment_state,
        )?;
        for (acc, e) in resum.iter_mut().zip(&v) {
            *acc += leaf.amplitude * e;
        }
    }
    let diff: Vec<C64> = resum
        .iter()
        .zip(next.evolved_state.amplitudes())
        .map(|(a, b)| a - b)
        .collect();
    next.reconstruction_residual = vec_norm(&diff);

    let report = detect_reinterference(&next, policy.reinterference_tol);
    if report.max_overlap > policy.reinterference_tol {
        next.reinterference_flag = true;
    }
    Ok(next)
}

fn grow(
    node: &mut BranchNode,
    tree: &BranchTree,
    interaction: &ComplexMatrix,
    policy: &NumericPolicy,
    leaf_budget: &mut usize,
) -> Result<()> {
    if !node.children.is_empty() {
        for child in &mut node.children {
            grow(child, tree, interaction, policy, leaf_budget)?;
        }
        return Ok(());
    }
    let leaf_vector = assemble_product_vector(
        &tree.dims,
        &[tree.system_factor],
        &node.system_state,
        &tree.environment_factors,
        &node.environment_state,
    )?;
    let evolved = interaction.matvec(&leaf_vector)?;
    let branch_state = PureState::from_raw_unchecked(tree.dims.clone(), evolved);
    let dec = schmidt_decompose(&branch_state, &[tree.system_factor], policy)?;
    let mut children = Vec::with_capacity(dec.rank());
    for (m, coeff) in dec.coefficients.iter().enumerate() {
        let mut path = node.path.clone();
        path.push(m);
        children.push(BranchNode {
            path,
            amplitude: node.amplitude * coeff,
            system_state: dec.left_states[m].clone(),
            environment_state: dec.right_states[m].clone(),
            children: Vec::new(),
        });
    }
    *leaf_budget += children.len();
    if *leaf_budget > policy.leaf_cap {
        return Err(Error::Capacity {
            what: "branch leaves",
            requested: *leaf_budget,
            cap: policy.leaf_cap,
        });
    }
    node.children = children;
    Ok(())
}

/// Largest cross-path environment overlap over distinct leaves, with the
/// pairs exceeding `tol`.
pub fn detect_reinterference(tree: &BranchTree, tol: f64) -> ReinterferenceReport {
    let leaves = tree.leaves();
    let mut max_overlap = 0.0f64;
    let mut offending = Vec::new();
    for i in 0..leaves.len() {
        for j in (i + 1)..leaves.len() {
            let overlap = inner(&leaves[i].environment_state, &leaves[j].environment_state).norm();
            max_overlap = max_overlap.max(overlap);
            if overlap > tol {
                offending.push((leaves[i].path.clone(), leaves[j].path.clone()));
            }
        }
    }
    ReinterferenceReport {
        max_overlap,
        offending,
    }
}

/// Properties carried by one branch: the system and environment projectors
/// of its states and the probability of the branch being realized.
#[derive(Debug, Clone)]
pub struct BranchProperty {
    pub path: Vec<usize>,
    pub system_projector: ComplexMatrix,
    pub environment_projector: ComplexMatrix,
    pub probability: f64,
}

/// Per-leaf property assignment; probabilities are squared leaf amplitudes
/// and sum to 1.
pub fn branch_properties(tree: &BranchTree) -> Vec<BranchProperty> {
    tree.leaves()
        .into_iter()
        .map(|leaf| BranchProperty {
            path: leaf.path.clone(),
            system_projector: ComplexMatrix::outer(&leaf.system_state, &leaf.system_state),
            environment_projector: ComplexMatrix::outer(
                &leaf.environment_state,
                &leaf.environment_state,
            ),
            probability: leaf.amplitude.norm_sqr(),
        })
        .collect()
}

/// History family of the tree: at each depth `k`, one rank-1 projector per
/// branch onto its realized system⊗environment state, completed with the
/// orthogonal remainder so the family is exhaustive. Refuses trees whose
/// environment records overlap beyond `tol`.
pub fn branch_history_family(
    tree: &BranchTree,
    tol: f64,
    policy: &NumericPolicy,
) -> Result<HistoryFamily> {
    if tree.depth == 0 {
        return Err(Error::InvalidInput(
            "tree has no interactions to build histories from".into(),
        ));
    }
    let report = detect_reinterference(tree, tol);
    if report.max_overlap > tol {
        return Err(Error::Reinterference {
            max_overlap: report.max_overlap,
            tol,
        });
    }
    let total = tree.initial_state.total_dim();
    let mut timed = Vec::with_capacity(tree.depth);
    let mut unitary = ComplexMatrix::identity(total);
    for depth in 1..=tree.depth {
        unitary = tree.interactions[depth - 1].mul(&unitary)?;
        let nodes = tree.nodes_at_depth(depth);
        let mut projectors = Vec::with_capacity(nodes.len() + 1);
        let mut labels = Vec::with_capacity(nodes.len() + 1);
        let mut sum = ComplexMatrix::zeros(total, total);
        for node in nodes {
            let v = tree.node_total_vector(node)?;
            let p = ComplexMatrix::outer(&v, &v);
            sum = sum.add(&p)?;
            projectors.push(p);
            labels.push(
                node.path
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join("."),
            );
        }
        let rest = ComplexMatrix::identity(total).sub(&sum)?;
        if rest.max_abs() > policy.completeness_tol {
            projectors.push(rest);
            labels.push("rest".into());
        }
        let family = ProjectorFamily::new(total, projectors, labels, policy)?;
        timed.push(TimedFamily::new(depth as f64, family, unitary.clone(), policy)?);
    }
    HistoryFamily::new(tree.initial_state.clone(), timed)
}
