//! Dense complex Hermitian eigendecomposition, SVD, and unitary
//! exponentials.
//!
//! Both decompositions are cyclic Jacobi variants: deterministic sweep
//! order, no pivot randomness, quadratic convergence at desk scale. This
//! keeps results bit-for-bit reproducible across runs, which the rest of
//! the crate relies on for serialized output.
//!
//! Phase convention: every returned eigen/singular vector is scaled so its
//! largest-magnitude entry is real and positive; ties pick the lowest
//! index. Eigenvalues and singular values are sorted descending, ties
//! broken by the pre-sort index.

use crate::error::{Error, Result};
use crate::matrix::{C64, ComplexMatrix};
use crate::policy::NumericPolicy;

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix: `A = V diag(values) V†`.
#[derive(Debug, Clone)]
pub struct EigHermitian {
    /// Real eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as matrix columns, aligned with `values`.
    pub vectors: ComplexMatrix,
}

impl EigHermitian {
    /// Column `k` as a vector.
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.rows()).map(|i| self.vectors[(i, k)]).collect()
    }

    /// Max-norm residual of `A - V diag(values) V†`.
    pub fn reconstruction_residual(&self, a: &ComplexMatrix) -> f64 {
        let n = self.vectors.rows();
        let mut rec = ComplexMatrix::zeros(n, n);
        for k in 0..self.values.len() {
            let v = self.vector(k);
            let p = ComplexMatrix::outer(&v, &v).scale(C64::new(self.values[k], 0.0));
            rec = rec.add(&p).expect("same shape");
        }
        rec.max_distance(a)
    }
}

/// The small-magnitude root of `t² - 2τt - 1 = 0`, the stable Jacobi
/// tangent choice.
fn jacobi_tangent(tau: f64) -> f64 {
    if tau >= 0.0 {
        -1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        1.0 / (-tau + (1.0 + tau * tau).sqrt())
    }
}

/// Applies the deterministic phase convention to a vector in place:
/// largest-magnitude entry becomes real positive (ties: lowest index).
/// Returns the applied phase factor.
fn fix_phase(v: &mut [C64]) -> C64 {
    let mut best = 0usize;
    let mut best_norm = 0.0f64;
    for (i, e) in v.iter().enumerate() {
        let n = e.norm();
        if n > best_norm {
            best_norm = n;
            best = i;
        }
    }
    if best_norm == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let factor = v[best].conj() / C64::new(best_norm, 0.0);
    for e in v.iter_mut() {
        *e *= factor;
    }
    factor
}

/// Hermitian eigendecomposition via cyclic complex Jacobi rotations.
pub fn eig_hermitian(a: &ComplexMatrix, policy: &NumericPolicy) -> Result<EigHermitian> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch {
            context: "eigendecomposition input",
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let res = a.hermiticity_residual();
    if res > policy.hermitian_tol {
        return Err(Error::NotHermitian { residual: res });
    }
    let n = a.rows();

    // Work on the Hermitian part so tiny input asymmetry cannot drift.
    let mut w = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = (a[(i, j)] + a[(j, i)].conj()) * C64::new(0.5, 0.0);
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = w.max_abs().max(1.0);
    let stop = 1e-14 * scale;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(w[(p, q)].norm());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let app = w[(p, p)].re;
                let aqq = w[(q, q)].re;
                let phase = apq / C64::new(r, 0.0);
                let tau = (aqq - app) / (2.0 * r);
                let t = jacobi_tangent(tau);
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phase * C64::new(s, 0.0); // s·e^{iφ}
                // Columns: W ← W·J with J = [[c, -s·e^{iφ}], [s·e^{-iφ}, c]]
                for k in 0..n {
                    let wkp = w[(k, p)];
                    let wkq = w[(k, q)];
                    w[(k, p)] = wkp * C64::new(c, 0.0) + wkq * sp.conj();
                    w[(k, q)] = wkq * C64::new(c, 0.0) - wkp * sp;
                }
                // Rows: W ← J†·W
                for k in 0..n {
                    let wpk = w[(p, k)];
                    let wqk = w[(q, k)];
                    w[(p, k)] = wpk * C64::new(c, 0.0) + wqk * sp;
                    w[(q, k)] = wqk * C64::new(c, 0.0) - wpk * sp.conj();
                }
                // Accumulate eigenvectors: V ← V·J
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * C64::new(c, 0.0) + vkq * sp.conj();
                    v[(k, q)] = vkq * C64::new(c, 0.0) - vkp * sp;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let raw: Vec<f64> = (0..n).map(|i| w[(i, i)].re).collect();
    order.sort_by(|&i, &j| {
        raw[j]
            .partial_cmp(&raw[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(raw[src]);
        let mut col: Vec<C64> = (0..n).map(|k| v[(k, src)]).collect();
        fix_phase(&mut col);
        for k in 0..n {
            vectors[(k, dst)] = col[k];
        }
    }
    Ok(EigHermitian { values, vectors })
}

/// Thin singular value decomposition `M = Σ σ_i u_i v_i†`.
///
/// Returns `cols(M)` triples, including numerically-zero singular values
/// whose left vectors are zero columns; callers apply their own rank
/// cutoff.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Singular values, descending.
    pub singular: Vec<f64>,
    /// Left singular vectors (columns, `rows(M) × cols(M)`).
    pub left: ComplexMatrix,
    /// Right singular vectors (columns, `cols(M) × cols(M)`).
    pub right: ComplexMatrix,
}

/// One-sided (Hestenes) Jacobi SVD on the columns of `m`.
pub fn svd(m: &ComplexMatrix) -> Svd {
    let rows = m.rows();
    let cols = m.cols();
    let mut g: Vec<Vec<C64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m[(i, j)]).collect())
        .collect();
    let mut v: Vec<Vec<C64>> = (0..cols)
        .map(|j| {
            let mut col = vec![C64::new(0.0, 0.0); cols];
            col[j] = C64::new(1.0, 0.0);
            col
        })
        .collect();

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let app: f64 = g[p].iter().map(|e| e.norm_sqr()).sum();
                let aqq: f64 = g[q].iter().map(|e| e.norm_sqr()).sum();
                let apq: C64 = g[p].iter().zip(&g[q]).map(|(a, b)| a.conj() * b).sum();
                let r = apq.norm();
                if r <= 1e-15 * (app.sqrt() * aqq.sqrt()).max(1e-300) {
                    continue;
                }
                rotated = true;
                let phase = apq / C64::new(r, 0.0);
                let tau = (aqq - app) / (2.0 * r);
                let t = jacobi_tangent(tau);
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phase * C64::new(s, 0.0);
                for k in 0..rows {
                    let gkp = g[p][k];
                    let gkq = g[q][k];
                    g[p][k] = gkp * C64::new(c, 0.0) + gkq * sp.conj();
                    g[q][k] = gkq * C64::new(c, 0.0) - gkp * sp;
                }
                for k in 0..cols {
                    let vkp = v[p][k];
                    let vkq = v[q][k];
                    v[p][k] = vkp * C64::new(c, 0.0) + vkq * sp.conj();
                    v[q][k] = vkq * C64::new(c, 0.0) - vkp * sp;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = g
        .iter()
        .map(|col| col.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let mut singular = Vec::with_capacity(cols);
    let mut left = ComplexMatrix::zeros(rows, cols);
    let mut right = ComplexMatrix::zeros(cols, cols);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        singular.push(sigma);
        let mut u: Vec<C64> = if sigma > 0.0 {
            g[src].iter().map(|e| e / C64::new(sigma, 0.0)).collect()
        } else {
            vec![C64::new(0.0, 0.0); rows]
        };
        let factor = fix_phase(&mut u);
        // keep M = Σ σ u v†: multiplying u by f requires v ← v·f
        let w: Vec<C64> = v[src].iter().map(|e| e * factor).collect();
        for k in 0..rows {
            left[(k, dst)] = u[k];
        }
        for k in 0..cols {
            right[(k, dst)] = w[k];
        }
    }
    Svd { singular, left, right }
}

/// `exp(-i h t)` for Hermitian `h`, computed through the spectral
/// resolution.
pub fn matrix_exponential_unitary(
    h: &ComplexMatrix,
    t: f64,
    policy: &NumericPolicy,
) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(h, policy)?;
    let n = h.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let v = eig.vector(k);
        let phase = C64::from_polar(1.0, -eig.values[k] * t);
        let p = ComplexMatrix::outer(&v, &v).scale(phase);
        out = out.add(&p)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{basis_vector, inner, pauli};
    use crate::rng::SplitMix64;

    #[test]
    fn sigma_z_spectrum() {
        let policy = NumericPolicy::default();
        let eig = eig_hermitian(&pauli::sigma_z(), &policy).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] + 1.0).abs() < 1e-14);
        let v0 = eig.vector(0);
        let v1 = eig.vector(1);
        assert!((v0[0].re - 1.0).abs() < 1e-14 && v0[1].norm() < 1e-14);
        assert!((v1[1].re - 1.0).abs() < 1e-14 && v1[0].norm() < 1e-14);
    }

    #[test]
    fn degenerate_spectrum() {
        let policy = NumericPolicy::default();
        let half = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        let eig = eig_hermitian(&half, &policy).unwrap();
        assert_eq!(eig.values.len(), 2);
        assert!((eig.values[0] - 0.5).abs() < 1e-15);
        assert!((eig.values[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        // reconstruction oracle on a seeded random 8x8
        let policy = NumericPolicy::default();
        let mut rng = SplitMix64::new(0x5eed_0001);
        let a = rng.hermitian(8);
        let eig = eig_hermitian(&a, &policy).unwrap();
        assert!(eig.reconstruction_residual(&a) <= 1e-9);
        // orthonormal columns
        for i in 0..8 {
            for j in 0..8 {
                let d = inner(&eig.vector(i), &eig.vector(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((d - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let policy = NumericPolicy::default();
        let m = ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            eig_hermitian(&m, &policy),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn eig_is_bitwise_reproducible() {
        let policy = NumericPolicy::default();
        let mut rng = SplitMix64::new(42);
        let a = rng.hermitian(6);
        let e1 = eig_hermitian(&a, &policy).unwrap();
        let e2 = eig_hermitian(&a, &policy).unwrap();
        for (x, y) in e1.values.iter().zip(&e2.values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for i in 0..6 {
            for j in 0..6 {
                let a = e1.vectors[(i, j)];
                let b = e2.vectors[(i, j)];
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }

    #[test]
    fn svd_reconstructs_random_matrix() {
        let mut rng = SplitMix64::new(7);
        let m = rng.complex_matrix(5, 3);
        let dec = svd(&m);
        let mut rec = ComplexMatrix::zeros(5, 3);
        for k in 0..3 {
            let u: Vec<C64> = (0..5).map(|i| dec.left[(i, k)]).collect();
            let v: Vec<C64> = (0..3).map(|i| dec.right[(i, k)]).collect();
            rec = rec
                .add(&ComplexMatrix::outer(&u, &v).scale(C64::new(dec.singular[k], 0.0)))
                .unwrap();
        }
        assert!(rec.max_distance(&m) < 1e-12);
        assert!(dec.singular.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_handles_wide_and_rank_deficient() {
        // 2x3 rank-1
        let u = basis_vector(2, 0);
        let v = vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.0),
        ];
        let m = ComplexMatrix::outer(&u, &v);
        let dec = svd(&m);
        assert!((dec.singular[0] - 1.0).abs() < 1e-12);
        assert!(dec.singular[1].abs() < 1e-12);
        assert!(dec.singular[2].abs() < 1e-12);
    }

    #[test]
    fn expm_identity_at_zero_time() {
        let policy = NumericPolicy::default();
        let u = matrix_exponential_unitary(&pauli::sigma_x(), 0.0, &policy).unwrap();
        assert!(u.max_distance(&ComplexMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn expm_sigma_z_closed_form() {
        // closed-form diagonal oracle: exp(-i σ_z t) = diag(e^{-it}, e^{it})
        let policy = NumericPolicy::default();
        for &t in &[0.25f64, std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
            let u = matrix_exponential_unitary(&pauli::sigma_z(), t, &policy).unwrap();
            let expected = ComplexMatrix::from_rows(&[
                vec![C64::from_polar(1.0, -t), C64::new(0.0, 0.0)],
                vec![C64::new(0.0, 0.0), C64::from_polar(1.0, t)],
            ])
            .unwrap();
            assert!(u.max_distance(&expected) < 1e-12);
            assert!(u.unitarity_residual() < 1e-10);
        }
        // at t = π/2 this is diag(-i, i)
        let u = matrix_exponential_unitary(
            &pauli::sigma_z(),
            std::f64::consts::FRAC_PI_2,
            &policy,
        )
        .unwrap();
        assert!((u[(0, 0)] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((u[(1, 1)] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn expm_sigma_x_quarter_turn() {
        // 2x2 closed form: exp(-i σ_x π/2)|0⟩ = -i|1⟩
        let policy = NumericPolicy::default();
        let u = matrix_exponential_unitary(
            &pauli::sigma_x(),
            std::f64::consts::FRAC_PI_2,
            &policy,
        )
        .unwrap();
        let out = u.matvec(&basis_vector(2, 0)).unwrap();
        assert!(out[0].norm() < 1e-12);
        assert!((out[1] - C64::new(0.0, -1.0)).norm() < 1e-12);
    }
}
