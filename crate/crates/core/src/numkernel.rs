//! Dense complex linear-algebra kernels.
//!
//! Everything here works on [`CMat`] (a `nalgebra` dynamic matrix of
//! `Complex64`). Decompositions come back in a deterministic normal form:
//! singular values sorted descending, eigenvalues sorted by descending
//! modulus, eigenvectors scaled to unit norm with their first non-negligible
//! component real and positive.
//!
//! Matrices vectorize column-major: entry `(r, c)` of an `R x C` matrix sits
//! at position `r + c * R`.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{invalid, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default numerical-rank threshold, relative to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative size below which an eigenvector component counts as zero when
/// fixing its phase.
const PHASE_ZERO: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_finite(m: &CMat, what: &str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        invalid(format!("{what}: matrix has non-finite entries"))
    }
}

/// Thin singular value decomposition `M = U diag(sigma) Vh`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub vh: CMat,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `tol * sigma_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let smax = self.sigma_max();
        if smax == 0.0 {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > tol * smax).count()
    }

    pub fn reconstruct(&self) -> CMat {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * &self.vh
    }
}

pub fn svd(m: &CMat) -> Result<Svd> {
    ensure_finite(m, "svd")?;
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(Svd {
            u: CMat::zeros(r, 0),
            sigma: Vec::new(),
            vh: CMat::zeros(0, c),
        });
    }
    // nalgebra's bidiagonal QR occasionally returns factors that do not
    // reproduce the input, so every result is checked and retried with a
    // looser convergence threshold.
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let budget = SVD_RECON_TOL * scale * r.max(c) as f64;
    let mut worst = 0.0f64;
    for factor in SVD_EPS_FACTORS {
        let Some(dec) = SVD::try_new(m.clone(), true, true, f64::EPSILON * factor, 0) else {
            continue;
        };
        let out = Svd {
            u: dec.u.expect("u requested"),
            sigma: dec.singular_values.iter().map(|s| s.max(0.0)).collect(),
            vh: dec.v_t.expect("v_t requested"),
        };
        let err = (out.reconstruct() - m).norm();
        if err <= budget {
            return Ok(out);
        }
        worst = worst.max(err);
    }
    jacobi_svd(m).ok_or_else(|| {
        crate::Error::InvalidInput(format!("svd failed: reconstruction error {worst:.3e} exceeds {budget:.3e}"))
    })
}

const SVD_EPS_FACTORS: [f64; 3] = [5.0, 37.0, 211.0];
const SVD_RECON_TOL: f64 = 1e-10;

/// One-sided (Hestenes) Jacobi SVD; slower than the bidiagonal QR but
/// unconditionally accurate.
fn jacobi_svd(m: &CMat) -> Option<Svd> {
    if m.nrows() < m.ncols() {
        let t = jacobi_svd(&m.adjoint())?;
        return Some(Svd {
            u: t.vh.adjoint(),
            sigma: t.sigma,
            vh: t.u.adjoint(),
        });
    }
    let (r, k) = m.shape();
    let mut a = m.clone();
    let mut v = CMat::identity(k, k);
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * k as f64 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for (mat, rows) in [(&mut a, r), (&mut v, k)] {
                    for i in 0..rows {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] / phase;
                        mat[(i, p)] = xp * cs - xq * sn;
                        mat[(i, q)] = xp * sn + xq * cs;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let mut order: Vec<(usize, f64)> = (0..k).map(|j| (j, a.column(j).norm())).collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));
    let smax = order.first().map_or(0.0, |x| x.1);
    let mut u = CMat::zeros(r, k);
    let mut vh = CMat::zeros(k, k);
    let mut sigma = Vec::with_capacity(k);
    let mut filled = 0;
    for (dst, &(src, s)) in order.iter().enumerate() {
        vh.set_row(dst, &v.column(src).adjoint());
        if s > f64::EPSILON * smax * k as f64 && s > 0.0 {
            u.set_column(dst, &a.column(src).unscale(s));
            filled = dst + 1;
            sigma.push(s);
        } else {
            sigma.push(0.0);
        }
    }
    // complete U with an orthonormal basis of the remaining directions
    let mut next = filled;
    for e in 0..r {
        if next == k {
            break;
        }
        let mut x = CVec::zeros(r);
        x[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for j in 0..next {
                let proj = u.column(j).dotc(&x);
                x -= u.column(j) * proj;
            }
        }
        let nx = x.norm();
        if nx > 1e-8 {
            u.set_column(next, &x.unscale(nx));
            next += 1;
        }
    }
    Some(Svd { u, sigma, vh })
}

const JACOBI_SWEEPS: usize = 100;

/// Right eigenpairs of a general square matrix.
#[derive(Clone, Debug)]
pub struct Eig {
    pub values: Vec<C64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: CMat,
}

impl Eig {
    pub fn spectral_radius(&self) -> f64 {
        self.values.first().map(|v| v.norm()).unwrap_or(0.0)
    }
}

pub fn eig(m: &CMat) -> Result<Eig> {
    if !m.is_square() {
        return invalid(format!("eig: matrix is {}x{}, not square", m.nrows(), m.ncols()));
    }
    ensure_finite(m, "eig")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Eig {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        });
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| crate::Error::InvalidInput("schur iteration failed".into()))?;
    let (q, t) = schur.unpack();

    let tnorm = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let smin = tnorm * f64::EPSILON;

    let mut values = Vec::with_capacity(n);
    let mut vectors = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        // Back-substitution on the upper-triangular factor.
        let mut y = CVec::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                s += t[(j, l)] * y[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < smin {
                denom = C64::new(smin, 0.0);
            }
            y[j] = -s / denom;
        }
        let mut v = &q * y;
        normalize_phase(&mut v);
        values.push(lambda);
        vectors.set_column(k, &v);
    }

    let order = modulus_order(&values);
    let values_sorted: Vec<C64> = order.iter().map(|&i| values[i]).collect();
    let mut vectors_sorted = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors_sorted.set_column(dst, &vectors.column(src));
    }
    Ok(Eig {
        values: values_sorted,
        vectors: vectors_sorted,
    })
}

/// Indices sorting `values` by descending modulus. Runs of moduli equal to
/// within a relative 1e-12 are ordered by real part, then imaginary part,
/// both descending.
fn modulus_order(values: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].norm().total_cmp(&values[a].norm()));
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tie = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end - 1]].norm() - values[idx[end]].norm() <= tie {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| {
            values[b]
                .re
                .total_cmp(&values[a].re)
                .then(values[b].im.total_cmp(&values[a].im))
        });
        start = end;
    }
    idx
}

/// Unit 2-norm, first non-negligible component real-positive.
pub fn normalize_phase(v: &mut CVec) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    v.unscale_mut(norm);
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|z| z.norm() > PHASE_ZERO * vmax).copied() {
        let phase = first / first.norm();
        v.iter_mut().for_each(|z| *z /= phase);
    }
}

/// Eigenpairs of a Hermitian matrix, ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn eigh(m: &CMat) -> Result<Eigh> {
    if !m.is_square() {
        return invalid("eigh: matrix is not square");
    }
    ensure_finite(m, "eigh")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Eigh {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        });
    }
    let herm = (m + m.adjoint()).unscale(2.0);
    let dec = SymmetricEigen::try_new(herm, f64::EPSILON, 0)
        .ok_or_else(|| crate::Error::InvalidInput("hermitian eigensolver failed".into()))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let values = idx.iter().map(|&i| dec.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        let mut v: CVec = dec.eigenvectors.column(src).into_owned();
        normalize_phase(&mut v);
        vectors.set_column(dst, &v);
    }
    Ok(Eigh { values, vectors })
}

/// Orthonormal basis for the span of `vectors`, with numerical rank decided
/// relative to the largest singular value of the stacked vectors.
pub fn orthonormal_basis(vectors: &[CVec], tol: f64) -> Result<Vec<CVec>> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return invalid("orthonormal_basis: vectors have different dimensions");
    }
    let m = CMat::from_columns(vectors);
    let s = svd(&m)?;
    let rank = s.rank(tol);
    Ok((0..rank).map(|j| s.u.column(j).into_owned()).collect())
}

/// Cosine of the (minimal) angle between two subspaces given by orthonormal
/// bases: the largest singular value of `U^dagger W`.
pub fn subspace_cosine(basis_u: &[CVec], basis_w: &[CVec]) -> Result<f64> {
    if basis_u.is_empty() || basis_w.is_empty() {
        return Ok(0.0);
    }
    let dim = basis_u[0].len();
    if basis_u.iter().chain(basis_w).any(|v| v.len() != dim) {
        return invalid("subspace_cosine: ambient dimensions differ");
    }
    let u = CMat::from_columns(basis_u);
    let w = CMat::from_columns(basis_w);
    let s = svd(&(u.adjoint() * w))?;
    Ok(s.sigma_max().min(1.0))
}

/// Moore-Penrose pseudoinverse, discarding singular values below
/// `tol * sigma_max`.
pub fn pinv(m: &CMat, tol: f64) -> Result<CMat> {
    let s = svd(m)?;
    let rank = s.rank(tol);
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for j in 0..rank {
        let v = s.vh.row(j).adjoint();
        let u = s.u.column(j).adjoint();
        out += (v * u).unscale(s.sigma[j]);
    }
    Ok(out)
}

/// Orthonormal basis of `{x : M x = 0}` at relative tolerance `tol`.
pub fn null_space(m: &CMat, tol: f64) -> Result<Vec<CVec>> {
    null_space_below(m, |s| tol * s.sigma_max())
}

/// Orthonormal basis of the right singular vectors whose singular values are
/// at most `threshold` (an absolute bound, for operators known to scale with
/// something other than their own largest singular value).
pub fn null_space_abs(m: &CMat, threshold: f64) -> Result<Vec<CVec>> {
    null_space_below(m, |_| threshold)
}

fn null_space_below(m: &CMat, threshold: impl Fn(&Svd) -> f64) -> Result<Vec<CVec>> {
    let (r, c) = m.shape();
    if c == 0 {
        return Ok(Vec::new());
    }
    let padded = if r < c {
        let mut p = CMat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let s = svd(&padded)?;
    let cut = threshold(&s);
    let rank = s.sigma.iter().filter(|&&x| x > cut).count();
    Ok((rank..c)
        .map(|j| {
            let mut v: CVec = s.vh.row(j).adjoint();
            normalize_phase(&mut v);
            v
        })
        .collect())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> Result<f64> {
    Ok(svd(m)?.sigma_max())
}

pub fn vec_col(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvec_col(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Matrix of the linear map `f: M_{rows x cols} -> M_{r' x c'}` acting on
/// column-major vectorizations.
pub fn superoperator(rows: usize, cols: usize, f: impl Fn(&CMat) -> CMat) -> CMat {
    let n = rows * cols;
    let mut columns = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = CMat::zeros(rows, cols);
        e[(k % rows, k / rows)] = C64::new(1.0, 0.0);
        columns.push(vec_col(&f(&e)));
    }
    CMat::from_columns(&columns)
}

/// Hermitian square root of a positive semidefinite matrix; negative
/// eigenvalues from round-off are clamped to zero.
pub fn psd_sqrt(m: &CMat) -> Result<CMat> {
    let e = eigh(m)?;
    let n = m.nrows();
    let mut d = CMat::zeros(n, n);
    for (k, &lam) in e.values.iter().enumerate() {
        d[(k, k)] = C64::new(lam.max(0.0).sqrt(), 0.0);
    }
    Ok(&e.vectors * d * e.vectors.adjoint())
}

/// 2-norm condition number; infinite for singular matrices.
pub fn condition_number(m: &CMat) -> Result<f64> {
    let s = svd(m)?;
    let smin = s.sigma.last().copied().unwrap_or(0.0);
    if smin == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(s.sigma_max() / smin)
    }
}

pub fn frobenius(m: &CMat) -> f64 {
    m.norm()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_matrix, seeded};

    fn m2(a: [[f64; 2]; 2]) -> CMat {
        CMat::from_fn(2, 2, |i, j| c(a[i][j], 0.0))
    }

    #[test]
    fn svd_identity_and_nilpotent() {
        let s = svd(&identity(2)).unwrap();
        assert!((s.sigma[0] - 1.0).abs() < 1e-15 && (s.sigma[1] - 1.0).abs() < 1e-15);
        let s = svd(&m2([[0.0, 1.0], [0.0, 0.0]])).unwrap();
        assert!((s.sigma[0] - 1.0).abs() < 1e-15);
        assert!(s.sigma[1].abs() < 1e-15);
        assert_eq!(s.rank(DEFAULT_RANK_TOL), 1);
    }

    #[test]
    fn svd_reconstructs_random_3x2() {
        let mut rng = seeded(7);
        let m = random_matrix(&mut rng, 3, 2);
        let s = svd(&m).unwrap();
        assert!((s.reconstruct() - &m).norm() <= 1e-12);
        assert!((s.u.adjoint() * &s.u - identity(2)).norm() < 1e-12);
        assert!((&s.vh * s.vh.adjoint() - identity(2)).norm() < 1e-12);
        assert!(s.sigma[0] >= s.sigma[1]);
    }

    #[test]
    fn jacobi_svd_matches_qr_svd() {
        let mut rng = seeded(8);
        let low_rank = random_matrix(&mut rng, 6, 2) * random_matrix(&mut rng, 2, 5);
        for m in [random_matrix(&mut rng, 5, 3), random_matrix(&mut rng, 3, 5), random_matrix(&mut rng, 40, 30), low_rank] {
            let j = jacobi_svd(&m).unwrap();
            let k = m.nrows().min(m.ncols());
            assert!((j.reconstruct() - &m).norm() < 1e-12 * m.norm());
            assert!((j.u.adjoint() * &j.u - identity(k)).norm() < 1e-12);
            assert!((&j.vh * j.vh.adjoint() - identity(k)).norm() < 1e-12);
            let q = svd(&m).unwrap();
            for (a, b) in j.sigma.iter().zip(&q.sigma) {
                assert!((a - b).abs() < 1e-12 * q.sigma_max());
            }
        }
    }

    #[test]
    fn svd_of_rank_one_oblique_projector() {
        // a rank-one v f^T with |v| = 1 has a single singular value |f|
        let mut rng = seeded(9);
        let v = random_matrix(&mut rng, 64, 1).normalize();
        let f = random_matrix(&mut rng, 1, 64);
        let s = svd(&(&v * &f)).unwrap();
        assert!((s.sigma[0] - f.norm()).abs() < 1e-12 * f.norm());
        assert_eq!(s.rank(DEFAULT_RANK_TOL), 1);
    }

    #[test]
    fn svd_rejects_nan() {
        let mut m = identity(2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(svd(&m), Err(crate::Error::InvalidInput(_))));
    }

    #[test]
    fn eig_small_cases() {
        let e = eig(&m2([[2.0, 0.0], [0.0, 1.0]])).unwrap();
        assert!((e.values[0] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((e.values[1] - c(1.0, 0.0)).norm() < 1e-14);
        let e = eig(&m2([[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert!((e.values[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((e.values[1] - c(-1.0, 0.0)).norm() < 1e-14);
        // first component real-positive
        assert!(e.vectors[(0, 0)].re > 0.0 && e.vectors[(0, 0)].im.abs() < 1e-15);
    }

    #[test]
    fn eig_trace_identity_and_residuals() {
        let mut rng = seeded(11);
        let m = random_matrix(&mut rng, 4, 4);
        let e = eig(&m).unwrap();
        let sum: C64 = e.values.iter().sum();
        assert!((sum - m.trace()).norm() < 1e-10);
        let mnorm = spectral_norm(&m).unwrap();
        for k in 0..4 {
            let v = e.vectors.column(k).into_owned();
            let r = (&m * &v - v.scale(1.0) * e.values[k]).norm();
            assert!(r <= 1e-8 * mnorm * v.norm());
        }
    }

    #[test]
    fn eig_rejects_non_square() {
        assert!(eig(&CMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn orthonormal_basis_cases() {
        let v = |a: f64, b: f64| CVec::from_vec(vec![c(a, 0.0), c(b, 0.0)]);
        let b = orthonormal_basis(&[v(1.0, 0.0), v(2.0, 0.0)], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0][0].norm() - 1.0).abs() < 1e-14 && b[0][1].norm() < 1e-14);
        let b = orthonormal_basis(&[v(1.0, 0.0), v(0.0, 1.0)], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(b.len(), 2);
        assert!(b[0].dotc(&b[1]).norm() < 1e-14);
        assert!(orthonormal_basis(&[], DEFAULT_RANK_TOL).unwrap().is_empty());
    }

    #[test]
    fn orthonormal_basis_five_in_c3() {
        let mut rng = seeded(3);
        let vs: Vec<CVec> = (0..5).map(|_| random_matrix(&mut rng, 3, 1).column(0).into_owned()).collect();
        // oracle: rank of stacked matrix via svd
        let oracle = svd(&CMat::from_columns(&vs)).unwrap().rank(DEFAULT_RANK_TOL);
        assert_eq!(oracle, 3);
        assert_eq!(orthonormal_basis(&vs, DEFAULT_RANK_TOL).unwrap().len(), 3);
    }

    #[test]
    fn subspace_cosine_cases() {
        let e1 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let e2 = CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let d = CVec::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]).unscale(2f64.sqrt());
        assert!(subspace_cosine(std::slice::from_ref(&e1), std::slice::from_ref(&e2)).unwrap().abs() < 1e-15);
        assert!((subspace_cosine(std::slice::from_ref(&e1), std::slice::from_ref(&e1)).unwrap() - 1.0).abs() < 1e-15);
        let cs = subspace_cosine(std::slice::from_ref(&e1), &[d]).unwrap();
        assert!((cs - 0.5f64.sqrt()).abs() < 1e-14);
        let e3 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(subspace_cosine(&[e1], &[e3]).is_err());
    }

    #[test]
    fn pinv_and_null_space() {
        let m = m2([[1.0, 2.0], [2.0, 4.0]]);
        let p = pinv(&m, DEFAULT_RANK_TOL).unwrap();
        assert!((&m * &p * &m - &m).norm() < 1e-12);
        let ns = null_space(&m, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(ns.len(), 1);
        assert!((&m * &ns[0]).norm() < 1e-12);
        // wide matrix
        let w = CMat::from_row_slice(1, 3, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(null_space(&w, DEFAULT_RANK_TOL).unwrap().len(), 2);
    }

    #[test]
    fn superoperator_matches_kron_convention() {
        let mut rng = seeded(5);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        // vec(B X A^T) = (A kron B) vec(X) in column-major order
        let s = superoperator(3, 3, |x| &b * x * a.transpose());
        assert!((s - kron(&a, &b)).norm() < 1e-12);
    }
}
