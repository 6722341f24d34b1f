//! Multi-index bookkeeping for tensor-product spaces.
//!
//! Factor order convention: for dims `[d_0, …, d_{k-1}]` the global index is
//! row-major, `n = i_0·(d_1⋯d_{k-1}) + … + i_{k-1}`, i.e. the last factor
//! varies fastest. [`ComplexMatrix::kron`] follows the same convention.

use crate::error::{Error, Result};
use crate::matrix::{C64, ComplexMatrix};
use crate::policy::NumericPolicy;

/// Row-major strides for the given factor dimensions.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Total dimension `∏ dims`.
pub fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Flattens a multi-index.
pub fn ravel(multi: &[usize], dims: &[usize]) -> usize {
    debug_assert_eq!(multi.len(), dims.len());
    let mut idx = 0usize;
    for (m, d) in multi.iter().zip(dims) {
        debug_assert!(m < d);
        idx = idx * d + m;
    }
    idx
}

/// Expands a flat index into per-factor indices.
pub fn unravel(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut multi = vec![0usize; dims.len()];
    for k in (0..dims.len()).rev() {
        multi[k] = index % dims[k];
        index /= dims[k];
    }
    multi
}

/// Kronecker product `a ⊗ b` with the policy's dimension cap.
pub fn tensor_product(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    a.kron(b, policy.dim_cap)
}

/// Validates a factor subset: strictly increasing, in range, nonempty.
fn check_factors(factors: &[usize], n_factors: usize) -> Result<()> {
    if factors.is_empty() {
        return Err(Error::InvalidInput("factor set must be nonempty".into()));
    }
    for w in factors.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidInput(
                "factor set must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&last) = factors.last() {
        if last >= n_factors {
            return Err(Error::IndexOutOfRange {
                index: last,
                limit: n_factors,
            });
        }
    }
    Ok(())
}

/// Embeds `op`, acting on the listed factors (ascending order), into the
/// full space with identity on all other factors.
pub fn embed(
    op: &ComplexMatrix,
    dims: &[usize],
    factors: &[usize],
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    check_factors(factors, dims.len())?;
    let sub_dims: Vec<usize> = factors.iter().map(|&f| dims[f]).collect();
    let sub_dim = total_dim(&sub_dims);
    if !op.is_square() || op.rows() != sub_dim {
        return Err(Error::ShapeMismatch {
            context: "embedded operator",
            expected: sub_dim,
            got: op.rows(),
        });
    }
    let full = total_dim(dims);
    if full > policy.dim_cap {
        return Err(Error::Capacity {
            what: "embedding dimension",
            requested: full,
            cap: policy.dim_cap,
        });
    }
    let complement: Vec<usize> = (0..dims.len()).filter(|f| !factors.contains(f)).collect();
    let comp_dims: Vec<usize> = complement.iter().map(|&f| dims[f]).collect();
    let comp_dim = total_dim(&comp_dims);

    let mut out = ComplexMatrix::zeros(full, full);
    let mut full_row = vec![0usize; dims.len()];
    let mut full_col = vec![0usize; dims.len()];
    for r_sub in 0..sub_dim {
        let r_multi = unravel(r_sub, &sub_dims);
        for c_sub in 0..sub_dim {
            let v = op[(r_sub, c_sub)];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let c_multi = unravel(c_sub, &sub_dims);
            for e in 0..comp_dim {
                let e_multi = unravel(e, &comp_dims);
                for (pos, &f) in factors.iter().enumerate() {
                    full_row[f] = r_multi[pos];
                    full_col[f] = c_multi[pos];
                }
                for (pos, &f) in complement.iter().enumerate() {
                    full_row[f] = e_multi[pos];
                    full_col[f] = e_multi[pos];
                }
                out[(ravel(&full_row, dims), ravel(&full_col, dims))] = v;
            }
        }
    }
    Ok(out)
}

/// Assembles the product vector whose restriction to `factors_a` is `a` and
/// to the complementary `factors_b` is `b`. The two factor lists must be
/// disjoint and cover `0..dims.len()`.
pub fn assemble_product_vector(
    dims: &[usize],
    factors_a: &[usize],
    a: &[C64],
    factors_b: &[usize],
    b: &[C64],
) -> Result<Vec<C64>> {
    let mut seen = vec![false; dims.len()];
    for &f in factors_a.iter().chain(factors_b) {
        if f >= dims.len() || seen[f] {
            return Err(Error::InvalidInput(
                "product-vector factors must partition the factor list".into(),
            ));
        }
        seen[f] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidInput(
            "product-vector factors must cover every factor".into(),
        ));
    }
    let dims_a: Vec<usize> = factors_a.iter().map(|&f| dims[f]).collect();
    let dims_b: Vec<usize> = factors_b.iter().map(|&f| dims[f]).collect();
    if a.len() != total_dim(&dims_a) || b.len() != total_dim(&dims_b) {
        return Err(Error::ShapeMismatch {
            context: "product-vector parts",
            expected: total_dim(&dims_a) * total_dim(&dims_b),
            got: a.len() * b.len(),
        });
    }
    let full = total_dim(dims);
    let mut out = vec![C64::new(0.0, 0.0); full];
    let mut multi = vec![0usize; dims.len()];
    for (ia, va) in a.iter().enumerate() {
        let ma = unravel(ia, &dims_a);
        for (pos, &f) in factors_a.iter().enumerate() {
            multi[f] = ma[pos];
        }
        for (ib, vb) in b.iter().enumerate() {
            let mb = unravel(ib, &dims_b);
            for (pos, &f) in factors_b.iter().enumerate() {
                multi[f] = mb[pos];
            }
            out[ravel(&multi, dims)] = va * vb;
        }
    }
    Ok(out)
}

/// Iterator over all tuples of a mixed-radix shape, in lexicographic order.
pub struct TupleIter {
    shape: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl TupleIter {
    pub fn new(shape: &[usize]) -> Self {
        let next = if shape.iter().any(|&s| s == 0) {
            None
        } else {
            Some(vec![0; shape.len()])
        };
        TupleIter {
            shape: shape.to_vec(),
            next,
        }
    }

    /// Number of tuples, `∏ shape`.
    pub fn count_tuples(shape: &[usize]) -> usize {
        shape.iter().product()
    }
}

impl Iterator for TupleIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.clone()?;
        let mut succ = current.clone();
        let mut k = self.shape.len();
        loop {
            if k == 0 {
                self.next = None;
                break;
            }
            k -= 1;
            succ[k] += 1;
            if succ[k] < self.shape[k] {
                self.next = Some(succ);
                break;
            }
            succ[k] = 0;
        }
        Some(current)
    }
}
