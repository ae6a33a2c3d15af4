//! Complex sparse factorizations, Gram-matrix orthonormalization, greedy snapshot compression
//! and extremal generalized singular values.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::{Mat, MatRef, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparse::{norm2, Csr};
use crate::{c64, Error, Result};

/// Relative M-norm below which a vector is treated as linearly dependent.
pub const DROP_TOL: f64 = 1e-12;

/// Systems up to this dimension use the dense generalized-SVD path.
pub const DENSE_SVD_LIMIT: usize = 800;

const SINGULAR_RESIDUAL: f64 = 1e-6;

/// Sparse LU factorization of a square complex matrix, reusable for many right-hand sides.
pub struct Factorization {
    lu: Lu<usize, c64>,
    n: usize,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

pub fn factorize(a: &Csr<c64>) -> Result<Factorization> {
    factorize_with_context(a, "sparse LU")
}

/// Like [`factorize`], with a context string carried into the singularity error.
pub fn factorize_with_context(a: &Csr<c64>, context: &str) -> Result<Factorization> {
    if a.nrows != a.ncols {
        return Err(Error::InvalidInput(format!("cannot factorize a {}x{} matrix", a.nrows, a.ncols)));
    }
    let n = a.nrows;
    let singular = |residual: f64| Error::SingularFactorization { context: context.to_string(), residual };
    if n == 0 {
        return Err(Error::InvalidInput("cannot factorize an empty matrix".into()));
    }
    let mat = a.to_faer()?;
    let symbolic = match SymbolicLu::try_new(mat.symbolic()) {
        Ok(s) => s,
        Err(e) => return Err(Error::InvalidInput(format!("symbolic LU failed: {e:?}"))),
    };
    let lu = match Lu::try_new_with_symbolic(symbolic, mat.as_ref()) {
        Ok(lu) => lu,
        Err(LuError::SymbolicSingular { .. }) => return Err(singular(f64::INFINITY)),
        Err(e) => return Err(Error::InvalidInput(format!("numeric LU failed: {e:?}"))),
    };
    let fact = Factorization { lu, n };
    // A zero pivot shows up as a non-finite or inaccurate probe solve.
    let probe: Vec<c64> = (0..n)
        .map(|k| c64::new(1.0 + (k % 7) as f64 / 7.0, ((3 * k) % 5) as f64 / 5.0 - 0.4))
        .collect();
    let x = fact.solve(&probe);
    let ax = a.mul_vec(&x);
    let res: Vec<c64> = ax.iter().zip(&probe).map(|(u, v)| u - v).collect();
    let rel = norm2(&res) / norm2(&probe);
    if !rel.is_finite() || rel > SINGULAR_RESIDUAL {
        return Err(singular(rel));
    }
    Ok(fact)
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[c64]) -> Vec<c64> {
        assert_eq!(b.len(), self.n);
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        x.col_as_slice(0).to_vec()
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[c64]) -> Vec<c64> {
        assert_eq!(b.len(), self.n);
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_adjoint_in_place(x.as_mut());
        x.col_as_slice(0).to_vec()
    }

    pub fn solve_many(&self, mut b: Mat<c64>) -> Mat<c64> {
        assert_eq!(b.nrows(), self.n);
        if b.ncols() > 0 {
            self.lu.solve_in_place(b.as_mut());
        }
        b
    }
}

fn gram_dot(mx: &[c64], y: &[c64]) -> c64 {
    // (Mx)^H y = x^H M y for Hermitian M
    mx.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn m_norm(gram: &Csr<f64>, x: &[c64]) -> f64 {
    gram.form(x, x).re.max(0.0).sqrt()
}

/// Rotates `v` so that its first non-negligible entry is real and positive.
pub fn normalize_phase(v: &mut [c64]) {
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return;
    }
    if let Some(p) = v.iter().find(|z| z.norm() > 1e-8 * vmax).copied() {
        let rot = p.conj() / p.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Incrementally built M-orthonormal set.
struct OrthoBasis<'a> {
    gram: &'a Csr<f64>,
    vectors: Vec<Vec<c64>>,
    gram_vectors: Vec<Vec<c64>>,
}

impl<'a> OrthoBasis<'a> {
    fn new(gram: &'a Csr<f64>) -> Self {
        Self { gram, vectors: Vec::new(), gram_vectors: Vec::new() }
    }

    fn project_out(&self, v: &mut [c64]) {
        for (b, mb) in self.vectors.iter().zip(&self.gram_vectors) {
            let c = gram_dot(mb, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }

    /// Orthonormalizes `v` against the set; returns false if it is numerically dependent.
    fn try_push(&mut self, mut v: Vec<c64>, reference_norm: f64) -> bool {
        if reference_norm <= 0.0 {
            return false;
        }
        self.project_out(&mut v);
        self.project_out(&mut v);
        let nv = m_norm(self.gram, &v);
        if !(nv > DROP_TOL * reference_norm) {
            return false;
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
        normalize_phase(&mut v);
        self.gram_vectors.push(self.gram.mul_vec(&v));
        self.vectors.push(v);
        true
    }

    fn into_mat(self, n: usize) -> Mat<c64> {
        Mat::from_fn(n, self.vectors.len(), |i, j| self.vectors[j][i])
    }
}

/// M-orthonormalizes the columns of `vs` (Gram-Schmidt with re-orthogonalization).
/// Columns whose remainder has relative M-norm below [`DROP_TOL`] are discarded.
pub fn m_orthonormalize(vs: MatRef<'_, c64>, gram: &Csr<f64>) -> Mat<c64> {
    let n = vs.nrows();
    assert_eq!(gram.nrows, n);
    let mut basis = OrthoBasis::new(gram);
    for j in 0..vs.ncols() {
        let v: Vec<c64> = (0..n).map(|i| vs[(i, j)]).collect();
        let nv = m_norm(gram, &v);
        basis.try_push(v, nv);
    }
    basis.into_mat(n)
}

/// Output of a greedy compression.
#[derive(Clone, Debug)]
pub struct GreedyResult {
    /// M-orthonormal basis, columns in selection order.
    pub basis: Mat<c64>,
    /// `errors[k]`: maximum relative projection error with the first `k` basis vectors.
    pub errors: Vec<f64>,
    /// Snapshot index picked at each step.
    pub picked: Vec<usize>,
}

impl GreedyResult {
    pub fn size(&self) -> usize {
        self.basis.ncols()
    }
}

/// Greedy compression with errors measured relative to each snapshot's own M-norm.
///
/// Snapshots with M-norm below [`DROP_TOL`] times the largest one are treated as zero.
pub fn greedy_compress(snapshots: MatRef<'_, c64>, gram: &Csr<f64>, tol: f64, max_size: usize) -> Result<GreedyResult> {
    let norms: Vec<f64> = (0..snapshots.ncols())
        .map(|j| m_norm(gram, &col(snapshots, j)))
        .collect();
    let top = norms.iter().copied().fold(0.0, f64::max);
    let reference: Vec<f64> = norms
        .iter()
        .map(|&v| if v > DROP_TOL * top { v } else { f64::INFINITY })
        .collect();
    greedy_compress_relative_to(snapshots, &reference, gram, tol, max_size)
}

/// Greedy compression with the error of snapshot `k` measured relative to `reference_norms[k]`.
///
/// At every step the snapshot with the largest relative M-norm projection error is
/// orthonormalized into the basis. Stops once the largest error is `<= tol` or the basis
/// reaches `max_size`.
pub fn greedy_compress_relative_to(
    snapshots: MatRef<'_, c64>,
    reference_norms: &[f64],
    gram: &Csr<f64>,
    tol: f64,
    max_size: usize,
) -> Result<GreedyResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("greedy tolerance must be positive, got {tol}")));
    }
    let n = snapshots.nrows();
    let count = snapshots.ncols();
    assert_eq!(reference_norms.len(), count);
    assert_eq!(gram.nrows, n);

    let mut residuals: Vec<Vec<c64>> = (0..count).map(|j| col(snapshots, j)).collect();
    let rel = |r: &[c64], k: usize| -> f64 {
        let refn = reference_norms[k];
        if refn.is_infinite() || refn <= 0.0 {
            0.0
        } else {
            m_norm(gram, r) / refn
        }
    };
    let mut errs: Vec<f64> = residuals.iter().enumerate().map(|(k, r)| rel(r, k)).collect();
    let max_err = |e: &[f64]| e.iter().copied().fold(0.0, f64::max);

    let mut basis = OrthoBasis::new(gram);
    let mut errors = vec![max_err(&errs)];
    let mut picked = Vec::new();
    while *errors.last().unwrap() > tol && basis.vectors.len() < max_size.min(count) {
        let (k, _) = errs
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (k, &e)| if e > best.1 { (k, e) } else { best });
        let norm_k = m_norm(gram, &residuals[k]) / errs[k].max(f64::MIN_POSITIVE);
        if !basis.try_push(residuals[k].clone(), norm_k) {
            // remainder is rounding noise; nothing left to gain from this snapshot
            errs[k] = 0.0;
            residuals[k].iter_mut().for_each(|z| *z = c64::new(0.0, 0.0));
            *errors.last_mut().unwrap() = max_err(&errs);
            continue;
        }
        picked.push(k);
        let (b, mb) = (basis.vectors.last().unwrap(), basis.gram_vectors.last().unwrap());
        for (j, r) in residuals.iter_mut().enumerate() {
            if errs[j] == 0.0 {
                continue;
            }
            let c = gram_dot(mb, r);
            for (x, y) in r.iter_mut().zip(b) {
                *x -= c * y;
            }
            errs[j] = rel(r, j);
        }
        errors.push(max_err(&errs));
    }
    Ok(GreedyResult { basis: basis.into_mat(n), errors, picked })
}

fn col(m: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Smallest and largest generalized singular values of a matrix in an M-geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularPair {
    /// Inf-sup constant.
    pub min: f64,
    /// Continuity constant.
    pub max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SvdMethod {
    /// Dense up to [`DENSE_SVD_LIMIT`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// Extremal generalized singular values of `a` with respect to the Hermitian positive definite
/// `gram`, i.e. square roots of the extremal eigenvalues of `A^H M^-1 A x = lambda M x`.
pub fn extremal_singular_values(a: &Csr<c64>, gram: &Csr<f64>) -> Result<SingularPair> {
    extremal_singular_values_with(a, gram, SvdMethod::Auto)
}

pub fn extremal_singular_values_with(a: &Csr<c64>, gram: &Csr<f64>, method: SvdMethod) -> Result<SingularPair> {
    let n = a.nrows;
    if a.ncols != n || gram.nrows != n || gram.ncols != n || n == 0 {
        return Err(Error::InvalidInput("singular values need square matrices of equal, positive size".into()));
    }
    let dense = match method {
        SvdMethod::Auto => n <= DENSE_SVD_LIMIT,
        SvdMethod::Dense => true,
        SvdMethod::Iterative => false,
    };
    if dense {
        extremal_singular_values_dense(a.to_dense().as_ref(), gram.to_dense().as_ref())
    } else {
        extremal_singular_values_lanczos(a, gram)
    }
}

/// Dense path: with `M = L L^H`, the values are the singular values of `L^-1 A L^-H`.
pub fn extremal_singular_values_dense(a: MatRef<'_, c64>, gram: MatRef<'_, c64>) -> Result<SingularPair> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || gram.nrows() != n || gram.ncols() != n {
        return Err(Error::InvalidInput("singular values need square matrices of equal, positive size".into()));
    }
    let llt = gram.llt(Side::Lower).map_err(|e| Error::Dense(format!("Gram matrix not positive definite: {e:?}")))?;
    let l = llt.L();
    let mut x = a.to_owned();
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut y = x.adjoint().to_owned();
    l.solve_lower_triangular_in_place(y.as_mut());
    let s = y.singular_values().map_err(|e| Error::Dense(format!("svd failed: {e:?}")))?;
    Ok(SingularPair { min: s[n - 1], max: s[0] })
}

const LANCZOS_TOL: f64 = 1e-10;
const LANCZOS_MAX_ITER: usize = 800;
const LANCZOS_CHECK_EVERY: usize = 5;
/// Relative change of the Ritz value between checks below which it counts as settled.
/// Spectra that accumulate at the top (curl modes approaching the Gram scaling) drive the
/// residual down slowly while the Ritz value, a lower bound of the eigenvalue, stops moving.
const LANCZOS_STAGNATION: f64 = 1e-11;
/// Residual a settled Ritz value must still meet.
const LANCZOS_LOOSE_TOL: f64 = 1e-5;

fn extremal_singular_values_lanczos(a: &Csr<c64>, gram: &Csr<f64>) -> Result<SingularPair> {
    let a_lu = factorize_with_context(a, "operator of singular value problem")?;
    let m_lu = factorize_with_context(&gram.to_complex(), "Gram matrix")?;
    let a_adj = adjoint(a);
    // gamma^2 = lambda_max(M^-1 A^H M^-1 A)
    let gamma2 = lanczos_max_eigenvalue(|x| m_lu.solve(&a_adj.mul_vec(&m_lu.solve(&a.mul_vec(x)))), gram)?;
    // beta^-2 = lambda_max(A^-1 M A^-H M)
    let inv_beta2 = lanczos_max_eigenvalue(|x| a_lu.solve(&gram.mul_vec(&a_lu.solve_adjoint(&gram.mul_vec(x)))), gram)?;
    Ok(SingularPair { min: 1.0 / inv_beta2.sqrt(), max: gamma2.sqrt() })
}

fn adjoint(a: &Csr<c64>) -> Csr<c64> {
    let trip: Vec<(usize, usize, c64)> =
        (0..a.nrows).flat_map(|r| a.row(r).map(move |(c, v)| (c, r, v.conj()))).collect();
    Csr::from_triplets(a.ncols, a.nrows, &trip)
}

/// Largest eigenvalue of an operator that is self-adjoint in the M-inner product, by Lanczos
/// with full re-orthogonalization.
pub fn lanczos_max_eigenvalue(op: impl Fn(&[c64]) -> Vec<c64>, gram: &Csr<f64>) -> Result<f64> {
    let n = gram.nrows;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_705e);
    let mut q: Vec<c64> = (0..n).map(|_| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let nq = m_norm(gram, &q);
    q.iter_mut().for_each(|z| *z /= nq);

    let mut qs: Vec<Vec<c64>> = Vec::new();
    let mut mqs: Vec<Vec<c64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let max_iter = LANCZOS_MAX_ITER.min(n);
    let mut last_theta = f64::NAN;
    let mut stagnant = 0;
    let mut residual = f64::INFINITY;
    for k in 0..max_iter {
        let mq = gram.mul_vec(&q);
        let mut w = op(&q);
        let a_k = gram_dot(&mq, &w).re;
        qs.push(q);
        mqs.push(mq);
        alpha.push(a_k);
        for _ in 0..2 {
            for (qj, mqj) in qs.iter().zip(&mqs) {
                let c = gram_dot(mqj, &w);
                for (x, y) in w.iter_mut().zip(qj) {
                    *x -= c * y;
                }
            }
        }
        let b_k = m_norm(gram, &w);

        let m = k + 1;
        let exhausted = m == n || b_k <= 1e-14 * alpha.iter().fold(0.0f64, |s, a| s.max(a.abs()));
        // The tridiagonal eigenproblem is the dominant cost for long runs, so only look every few steps.
        if m < LANCZOS_CHECK_EVERY || m % LANCZOS_CHECK_EVERY == 0 || exhausted || m == max_iter {
            let (theta, s_last) = tridiagonal_top(&alpha, &beta)?;
            residual = (b_k * s_last).abs();
            log::trace!("lanczos step {m}: theta {theta:e} residual {residual:e}");
            let scale = theta.abs().max(f64::MIN_POSITIVE);
            if residual <= LANCZOS_TOL * scale || exhausted {
                return Ok(theta);
            }
            // Clustered spectra: the Ritz value settles long before its residual does.
            if (theta - last_theta).abs() <= LANCZOS_STAGNATION * scale && residual <= LANCZOS_LOOSE_TOL * scale {
                stagnant += 1;
                if stagnant >= 4 {
                    return Ok(theta);
                }
            } else {
                stagnant = 0;
            }
            last_theta = theta;
        }
        beta.push(b_k);
        q = w.into_iter().map(|z| z / b_k).collect();
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// Largest eigenvalue of the symmetric tridiagonal matrix and the last entry of its eigenvector.
fn tridiagonal_top(alpha: &[f64], beta: &[f64]) -> Result<(f64, f64)> {
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 || j == i + 1 {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let evd = t.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Dense(format!("tridiagonal eigensolver failed: {e:?}")))?;
    Ok((evd.S().column_vector()[m - 1], evd.U()[(m - 1, m - 1)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_diag(d: &[f64]) -> Csr<f64> {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Csr::from_triplets(d.len(), d.len(), &t)
    }

    #[test]
    fn identity_and_diagonal_solves() {
        let id = Csr::<c64>::identity(5);
        let f = factorize(&id).unwrap();
        let b: Vec<c64> = (0..5).map(|k| c64::new(k as f64, 1.0)).collect();
        assert_eq!(f.solve(&b), b);
        let a = Csr::from_triplets(2, 2, &[(0, 0, c64::new(2.0, 0.0)), (1, 1, c64::new(0.0, 1.0))]);
        let x = factorize(&a).unwrap().solve(&[c64::new(2.0, 0.0), c64::new(0.0, 1.0)]);
        assert!((x[0] - c64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Csr::from_triplets(
            2,
            2,
            &[(0, 0, c64::new(1.0, 0.0)), (0, 1, c64::new(2.0, 0.0)), (1, 0, c64::new(2.0, 0.0)), (1, 1, c64::new(4.0, 0.0))],
        );
        assert!(matches!(factorize(&a), Err(Error::SingularFactorization { .. })));
    }

    #[test]
    fn duplicated_vector_gives_one_output() {
        let m = real_diag(&[1.0, 2.0, 3.0]);
        let v = Mat::from_fn(3, 2, |i, _| c64::new(i as f64 + 1.0, 0.5));
        assert_eq!(m_orthonormalize(v.as_ref(), &m).ncols(), 1);
    }

    #[test]
    fn orthonormal_input_is_kept() {
        let m = real_diag(&[4.0, 1.0]);
        let v = Mat::from_fn(2, 2, |i, j| if i == j { c64::new(if i == 0 { 0.5 } else { 1.0 }, 0.0) } else { c64::new(0.0, 0.0) });
        let out = m_orthonormalize(v.as_ref(), &m);
        for i in 0..2 {
            for j in 0..2 {
                assert!((out[(i, j)] - v[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn greedy_on_equal_snapshots() {
        let m = real_diag(&[1.0, 1.0, 2.0]);
        let s = Mat::from_fn(3, 4, |i, _| c64::new(1.0 + i as f64, -1.0));
        let g = greedy_compress(s.as_ref(), &m, 1e-10, 10).unwrap();
        assert_eq!(g.size(), 1);
        assert_eq!(g.errors.len(), 2);
        assert!((g.errors[0] - 1.0).abs() < 1e-15);
        assert!(g.errors[1] < 1e-14);
    }

    #[test]
    fn greedy_on_orthonormal_set_keeps_everything() {
        let m = real_diag(&[1.0, 2.0, 3.0, 4.0]);
        let s = Mat::from_fn(4, 4, |i, j| if i == j { c64::new(1.0 / m.get(i, i).sqrt(), 0.0) } else { c64::new(0.0, 0.0) });
        let g = greedy_compress(s.as_ref(), &m, 1e-12, 10).unwrap();
        assert_eq!(g.size(), 4);
        assert!(greedy_compress(s.as_ref(), &m, 0.0, 10).is_err());
    }

    #[test]
    fn small_singular_value_cases() {
        let m = real_diag(&[1.0, 2.0, 5.0]);
        let p = extremal_singular_values(&m.to_complex(), &m).unwrap();
        assert!((p.min - 1.0).abs() < 1e-12 && (p.max - 1.0).abs() < 1e-12);
        let two_m = Csr { values: m.values.iter().map(|v| c64::new(2.0 * v, 0.0)).collect(), ..m.to_complex() };
        let p = extremal_singular_values(&two_m, &m).unwrap();
        assert!((p.min - 2.0).abs() < 1e-12 && (p.max - 2.0).abs() < 1e-12);
        let a = real_diag(&[1.0, 3.0]).to_complex();
        for method in [SvdMethod::Dense, SvdMethod::Iterative] {
            let p = extremal_singular_values_with(&a, &Csr::identity(2), method).unwrap();
            assert!((p.min - 1.0).abs() < 1e-10 && (p.max - 3.0).abs() < 1e-10, "{method:?}: {p:?}");
        }
    }
}
