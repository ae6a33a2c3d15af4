//! Solver, orthonormalization, compression and singular value properties on random inputs.

use edgerom::linalg::{
    extremal_singular_values_dense, extremal_singular_values_with, factorize, greedy_compress, m_orthonormalize,
    SvdMethod,
};
use edgerom::sparse::{norm2, Csr};
use edgerom::c64;
use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cplx(rng: &mut ChaCha8Rng) -> c64 {
    c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random sparse, diagonally dominant matrix.
fn random_sparse(n: usize, per_row: usize, rng: &mut ChaCha8Rng) -> Csr<c64> {
    let mut t = Vec::new();
    for i in 0..n {
        let mut off = 0.0;
        for _ in 0..per_row {
            let j = rng.random_range(0..n);
            if j != i {
                let v = cplx(rng);
                off += v.norm();
                t.push((i, j, v));
            }
        }
        t.push((i, i, c64::new(off + 1.0 + rng.random_range(0.0..1.0), rng.random_range(-1.0..1.0))));
    }
    Csr::from_triplets(n, n, &t)
}

/// Random symmetric positive definite sparse Gram matrix.
fn random_gram(n: usize, rng: &mut ChaCha8Rng) -> Csr<f64> {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 4.0 + rng.random_range(0.0..2.0)));
        if i + 1 < n {
            let v = rng.random_range(-1.0..1.0);
            t.push((i, i + 1, v));
            t.push((i + 1, i, v));
        }
    }
    Csr::from_triplets(n, n, &t)
}

fn gram_entry(g: &Csr<f64>, a: &[c64], b: &[c64]) -> c64 {
    let gb: Vec<c64> = g.to_complex().mul_vec(b);
    a.iter().zip(&gb).map(|(x, y)| x.conj() * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sparse_solves_have_small_residuals(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sparse(200, 6, &mut rng);
        let b: Vec<c64> = (0..200).map(|_| cplx(&mut rng)).collect();
        let x = factorize(&a).unwrap().solve(&b);
        let r: Vec<c64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        prop_assert!(norm2(&r) < 1e-10 * norm2(&b));
    }

    #[test]
    fn orthonormalized_vectors_have_identity_gram(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 80;
        let g = random_gram(n, &mut rng);
        let v = Mat::from_fn(n, 50, |_, _| cplx(&mut rng));
        let q = m_orthonormalize(v.as_ref(), &g);
        prop_assert_eq!(q.ncols(), 50);
        for i in 0..q.ncols() {
            for j in 0..q.ncols() {
                let e = gram_entry(&g, q.col_as_slice(i), q.col_as_slice(j));
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((e - c64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn greedy_recovers_the_rank_of_low_rank_snapshots(seed in any::<u64>(), rank in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 60;
        let g = random_gram(n, &mut rng);
        let factors = Mat::from_fn(n, rank, |_, _| cplx(&mut rng));
        let mix = Mat::from_fn(rank, 50, |_, _| cplx(&mut rng));
        let snaps = &factors * &mix;
        let res = greedy_compress(snaps.as_ref(), &g, 1e-12, 100).unwrap();
        prop_assert_eq!(res.size(), rank);
        prop_assert!(*res.errors.last().unwrap() < 1e-12);
        prop_assert!(res.errors[rank - 1] > 1e-12);
        prop_assert!(res.errors.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
}

#[test]
fn singular_values_match_the_dense_oracle_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let n = rng.random_range(20..=300);
        let a = random_sparse(n, 4, &mut rng);
        let g = random_gram(n, &mut rng);
        // oracle: symmetric square root of M through its eigendecomposition
        let gd = Mat::from_fn(n, n, |i, j| g.to_dense()[(i, j)].re);
        let evd = gd.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let s = evd.S().column_vector();
        let u = evd.U();
        let m_inv_half = Mat::from_fn(n, n, |i, j| (0..n).map(|k| u[(i, k)] * u[(j, k)] / s[k].sqrt()).sum::<f64>());
        let m_inv_half = Mat::from_fn(n, n, |i, j| c64::new(m_inv_half[(i, j)], 0.0));
        let b = &m_inv_half * a.to_dense() * &m_inv_half;
        let sv = b.singular_values().unwrap();
        let (lo, hi) = (sv[n - 1], sv[0]);
        for method in [SvdMethod::Dense, SvdMethod::Iterative] {
            let p = extremal_singular_values_with(&a, &g, method).unwrap();
            assert!((p.min - lo).abs() <= 1e-8 * lo, "case {case} {method:?}: min {} vs {lo}", p.min);
            assert!((p.max - hi).abs() <= 1e-8 * hi, "case {case} {method:?}: max {} vs {hi}", p.max);
        }
        let d = extremal_singular_values_dense(a.to_dense().as_ref(), g.to_dense().as_ref()).unwrap();
        assert!((d.min - lo).abs() <= 1e-8 * lo);
    }
}
