//! Dense complex-matrix primitives: tensor products, conjugate transpose,
//! commutators, partial trace, and a self-contained Hermitian eigensolver.
//!
//! Everything here operates on [`CMat`] (`ndarray::Array2<Complex64>`).
//! Matrices are small (4 to a few tens on a side), so dense storage and
//! O(n³) algorithms are the right tool.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Square complex matrix used for all operators and states.
pub type CMat = Array2<C64>;

/// Identity matrix of the given dimension.
pub fn identity(dim: usize) -> CMat {
    Array2::eye(dim)
}

/// Kronecker product with row-major block convention:
/// `tensor(a, b)[i·p + k, j·q + l] = a[i, j] · b[k, l]`
/// where `b` is p×q. The first factor varies slowest.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    ndarray::linalg::kron(a, b)
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// Commutator `a·b − b·a`. Errors on dimension mismatch.
pub fn commutator(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "commutator of {:?} and {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.dot(b) - b.dot(a))
}

/// Matrix trace.
pub fn trace(a: &CMat) -> C64 {
    a.diag().sum()
}

/// Largest entry-wise magnitude of `a − a†`.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut defect = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let d = (a[[i, j]] - a[[j, i]].conj()).norm();
            if d > defect {
                defect = d;
            }
        }
    }
    defect
}

/// Hermitian part `(a + a†)/2`.
pub fn hermitize(a: &CMat) -> CMat {
    (a + &dagger(a)).mapv(|z| 0.5 * z)
}

/// True iff every entry is finite (no NaN/Inf in either component).
pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Partial trace of `joint` over the factors NOT listed in `keep`.
///
/// `dims` lists the factor dimensions in tensor order (first factor slowest,
/// matching [`tensor`]); `keep` lists the factor indices to retain, and the
/// reduced matrix keeps them in their original order.
pub fn partial_trace(joint: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if joint.nrows() != total || joint.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace: joint is {:?} but factor dims {:?} give {}",
            joint.dim(),
            dims,
            total
        )));
    }
    if keep.is_empty() {
        return Err(Error::InvalidParameter(
            "partial_trace: keep set must be non-empty".into(),
        ));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidParameter(format!(
            "partial_trace: keep index out of range for {} factors",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !keep.contains(f)).collect();

    // Strides of each factor inside the flattened joint index.
    let mut strides = vec![1usize; dims.len()];
    for f in (0..dims.len().saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * dims[f + 1];
    }

    let kept_dims: Vec<usize> = keep.iter().map(|&f| dims[f]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&f| dims[f]).collect();
    let dim_keep: usize = kept_dims.iter().product();
    let dim_traced: usize = traced_dims.iter().product();

    // Flattened index offset of a multi-index over the given factors.
    let offset = |factors: &[usize], factor_dims: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for (f, &d) in factors.iter().zip(factor_dims).rev() {
            off += (idx % d) * strides[*f];
            idx /= d;
        }
        off
    };

    let mut out: CMat = Array2::zeros((dim_keep, dim_keep));
    for r in 0..dim_keep {
        let r_off = offset(&keep, &kept_dims, r);
        for c in 0..dim_keep {
            let c_off = offset(&keep, &kept_dims, c);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dim_traced {
                let t_off = offset(&traced, &traced_dims, t);
                acc += joint[[r_off + t_off, c_off + t_off]];
            }
            out[[r, c]] = acc;
        }
    }
    Ok(out)
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(mat: &CMat) -> Vec<f64> {
    eigh(mat).0
}

/// Jacobi rotation parameters (c, s, phase) zeroing the pivot of the
/// Hermitian 2×2 block [[app, apq], [apq*, aqq]].
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let abs_apq = apq.norm();
    let phase = apq / abs_apq;
    let tau = (aqq - app) / (2.0 * abs_apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        1.0 / (tau - (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c, phase)
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues ascending and the matching orthonormal
/// eigenvectors as columns.
///
/// Pivots are skipped only when small relative to their diagonal pair,
/// which preserves the high relative accuracy Jacobi offers for small
/// eigenvalues of positive-semidefinite inputs.
pub fn eigh(mat: &CMat) -> (Vec<f64>, CMat) {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "eigh requires a square matrix");
    let mut a = hermitize(mat);
    let mut v = identity(n);
    if n == 1 {
        return (vec![a[[0, 0]].re], v);
    }

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                let abs_apq = apq.norm();
                if abs_apq == 0.0 {
                    continue;
                }
                let gate =
                    f64::EPSILON * (a[[p, p]].re.abs() * a[[q, q]].re.abs()).sqrt();
                if abs_apq <= gate {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(a[[p, p]].re, a[[q, q]].re, apq);

                // A <- U† A U with U[p,p]=U[q,q]=c, U[p,q]=s·phase,
                // U[q,p]=−s·phase*; chosen to zero A[p,q].
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * phase.conj() * akq;
                    a[[k, q]] = s * phase * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * phase * aqk;
                    a[[q, k]] = s * phase.conj() * apk + c * aqk;
                }
                a[[p, q]] = C64::new(0.0, 0.0);
                a[[q, p]] = C64::new(0.0, 0.0);
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * phase.conj() * vkq;
                    v[[k, q]] = s * phase * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors: CMat = Array2::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, new_col]] = v[[k, old_col]];
        }
    }
    (values, vectors)
}

/// Singular values of a square complex matrix, descending, by one-sided
/// Jacobi (Hestenes) column orthogonalization.
///
/// Singular values come out as column norms, so small ones are obtained
/// with absolute accuracy near machine epsilon times the matrix scale —
/// no squaring through a Gram matrix.
pub fn svd_values(mat: &CMat) -> Vec<f64> {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "svd_values requires a square matrix");
    let mut a = mat.clone();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                // Gram data of the column pair.
                let mut hpp = 0.0_f64;
                let mut hqq = 0.0_f64;
                let mut hpq = C64::new(0.0, 0.0);
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    hpp += akp.norm_sqr();
                    hqq += akq.norm_sqr();
                    hpq += akp.conj() * akq;
                }
                let abs_hpq = hpq.norm();
                if abs_hpq == 0.0 || abs_hpq <= f64::EPSILON * (hpp * hqq).sqrt() {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(hpp, hqq, hpq);
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * phase.conj() * akq;
                    a[[k, q]] = s * phase * akp + c * akq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut values: Vec<f64> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| a[[k, j]].norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rng: &mut impl Rng, n: usize) -> CMat {
        Array2::from_shape_fn((n, n), |_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMat {
        let g = random_matrix(rng, n);
        hermitize(&g)
    }

    pub(crate) fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn tensor_of_identities() {
        let i2 = identity(2);
        assert_eq!(tensor(&i2, &i2), identity(4));
    }

    #[test]
    fn tensor_sigma_z_with_identity() {
        let sz = ndarray::array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        let out = tensor(&sz, &identity(2));
        let diag: Vec<f64> = out.diag().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn tensor_entry_formula_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 2);
        let t = tensor(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert_eq!(t[[i * 2 + k, j * 2 + l]], a[[i, j]] * b[[k, l]]);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_associativity_exact_on_integer_entries() {
        // Small-integer entries keep every product exact in f64, so
        // associativity holds bit-for-bit.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gen = |rng: &mut ChaCha8Rng| {
            Array2::from_shape_fn((2, 2), |_| {
                c(rng.gen_range(-4..=4) as f64, rng.gen_range(-4..=4) as f64)
            })
        };
        for _ in 0..20 {
            let a = gen(&mut rng);
            let b = gen(&mut rng);
            let d = gen(&mut rng);
            assert_eq!(tensor(&tensor(&a, &b), &d), tensor(&a, &tensor(&b, &d)));
        }
    }

    #[test]
    fn dagger_identity_and_involution() {
        assert_eq!(dagger(&identity(3)), identity(3));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 4);
        assert_eq!(dagger(&dagger(&a)), a);
    }

    #[test]
    fn dagger_of_lowering_is_raising() {
        // {|e⟩, |g⟩} ordering: lowering |g⟩⟨e| has its 1 at [1, 0].
        let lower = ndarray::array![[c(0.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let raise = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        assert_eq!(dagger(&lower), raise);
    }

    #[test]
    fn commutator_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 4);
        let zero: CMat = Array2::zeros((4, 4));
        assert_eq!(commutator(&a, &a).unwrap(), zero);
        assert_eq!(commutator(&identity(4), &a).unwrap(), zero);

        let raise = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        let lower = dagger(&raise);
        let sz = ndarray::array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        assert_eq!(commutator(&raise, &lower).unwrap(), sz);
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let a = identity(2);
        let b = identity(3);
        assert!(matches!(
            commutator(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn commutator_trace_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let a = random_matrix(&mut rng, 4);
            let rho = random_hermitian(&mut rng, 4);
            let tr = trace(&commutator(&a, &rho).unwrap());
            assert!(tr.norm() < 1e-12, "cyclicity violated: {tr}");
        }
    }

    #[test]
    fn partial_trace_recovers_product_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &n in &[2usize, 3] {
            let mut a = random_hermitian(&mut rng, 4);
            let ta = trace(&a);
            a.mapv_inplace(|z| z / ta);
            let mut b = random_hermitian(&mut rng, n);
            let tb = trace(&b);
            b.mapv_inplace(|z| z / tb);

            let joint = tensor(&a, &b);
            let red_a = partial_trace(&joint, &[4, n], &[0]).unwrap();
            let red_b = partial_trace(&joint, &[4, n], &[1]).unwrap();
            assert!(max_abs_diff(&red_a, &a) < 1e-12);
            assert!(max_abs_diff(&red_b, &b) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_bell_state_with_vacuum() {
        // (|eg⟩+|ge⟩)/√2 ⊗ |0⟩⟨0| traced over the field leaves the X matrix
        // with ρ22=ρ33=ρ23=1/2.
        let mut atoms: CMat = Array2::zeros((4, 4));
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            atoms[[i, j]] = c(0.5, 0.0);
        }
        let mut vacuum: CMat = Array2::zeros((3, 3));
        vacuum[[0, 0]] = c(1.0, 0.0);
        let joint = tensor(&atoms, &vacuum);
        let reduced = partial_trace(&joint, &[4, 3], &[0]).unwrap();
        assert!(max_abs_diff(&reduced, &atoms) < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let mut joint = random_hermitian(&mut rng, 12);
            let tj = trace(&joint);
            joint.mapv_inplace(|z| z / tj);
            let reduced = partial_trace(&joint, &[4, 3], &[0]).unwrap();
            assert!((trace(&reduced) - trace(&joint)).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let joint = identity(6);
        assert!(partial_trace(&joint, &[4, 2], &[0]).is_err());
        assert!(partial_trace(&joint, &[2, 3], &[]).is_err());
        assert!(partial_trace(&joint, &[2, 3], &[2]).is_err());
    }

    #[test]
    fn eigh_diagonalizes_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for &n in &[2usize, 4, 9, 17] {
            let a = random_hermitian(&mut rng, n);
            let (values, vectors) = eigh(&a);
            // Sorted ascending.
            assert!(values.windows(2).all(|w| w[0] <= w[1]));
            // Eigenvalue sum equals the trace.
            let sum: f64 = values.iter().sum();
            assert_abs_diff_eq!(sum, trace(&a).re, epsilon = 1e-10);
            // A·V = V·diag.
            let av = a.dot(&vectors);
            let mut vd = vectors.clone();
            for (j, &ev) in values.iter().enumerate() {
                for i in 0..n {
                    vd[[i, j]] *= ev;
                }
            }
            assert!(max_abs_diff(&av, &vd) < 1e-10 * (n as f64));
            // V unitary.
            let vtv = dagger(&vectors).dot(&vectors);
            assert!(max_abs_diff(&vtv, &identity(n)) < 1e-12 * (n as f64));
        }
    }

    #[test]
    fn eigh_known_spectrum() {
        // σx has eigenvalues ±1.
        let sx = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let vals = eigvalsh(&sx);
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-14);
        // σy (complex entries) too.
        let sy = ndarray::array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let vals = eigvalsh(&sy);
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn svd_values_match_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &n in &[2usize, 4, 7] {
            let a = random_matrix(&mut rng, n);
            let sigma = svd_values(&a);
            assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
            // σ² are the eigenvalues of A†A.
            let mut gram_eigs = eigvalsh(&dagger(&a).dot(&a));
            gram_eigs.reverse();
            for (s, ev) in sigma.iter().zip(&gram_eigs) {
                assert_abs_diff_eq!(s * s, ev.max(0.0), epsilon = 1e-10);
            }
            // Frobenius norm is preserved.
            let fro: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            let sum_sq: f64 = sigma.iter().map(|s| s * s).sum();
            assert_abs_diff_eq!(fro, sum_sq, epsilon = 1e-10 * fro.max(1.0));
        }
    }

    #[test]
    fn svd_values_of_unitary_are_ones() {
        // σy⊗σy is real orthogonal: all singular values are 1.
        let sy = ndarray::array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let y = tensor(&sy, &sy);
        for s in svd_values(&y) {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn svd_values_resolve_tiny_singular_values() {
        // diag(1, 1e-13) rotated by a dense unitary: the tiny value must be
        // recovered with absolute error near machine epsilon.
        let tiny = 1e-13;
        let theta = 0.7_f64;
        let (cs, sn) = (theta.cos(), theta.sin());
        let u = ndarray::array![[c(cs, 0.0), c(-sn, 0.0)], [c(sn, 0.0), c(cs, 0.0)]];
        let d = ndarray::array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(tiny, 0.0)]];
        let a = u.dot(&d).dot(&dagger(&u));
        let sigma = svd_values(&a);
        assert_abs_diff_eq!(sigma[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sigma[1], tiny, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn tensor_dims_multiply(n in 1usize..4, m in 1usize..4) {
            let t = tensor(&identity(n), &identity(m));
            prop_assert_eq!(t.nrows(), n * m);
            prop_assert_eq!(t, identity(n * m));
        }

        #[test]
        fn hermitize_kills_defect(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, 4);
            let h = hermitize(&a);
            prop_assert!(hermiticity_defect(&h) < 1e-15);
        }
    }
}
