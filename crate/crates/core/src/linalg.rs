//! Dense complex linear algebra: Hermitian eigensolver, pseudoinverse,
//! functional calculus and subspace bases.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tol::{EIG_TOL, INTERSECTION_GAP, SYM_TOL};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

const MAX_SWEEPS: usize = 100_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real matrix lifted to complex entries, row-major input.
pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols);
    ComplexMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c(x, 0.0)))
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| c(x, 0.0)),
    ))
}

pub fn check_finite(m: &ComplexMatrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite(i, j));
            }
        }
    }
    Ok(())
}

pub fn fro(m: &ComplexMatrix) -> f64 {
    m.norm()
}

/// Operator 2-norm, from the top eigenvalue of the smaller Gram matrix.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    let top = hermitian_part(&gram)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0, f64::max);
    top.max(0.0).sqrt()
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `Re(e^{-i alpha} T)` in the operator sense.
pub fn rotated_real_part(t: &ComplexMatrix, alpha: f64) -> ComplexMatrix {
    let w = C64::from_polar(1.0, -alpha);
    let r = t * w;
    (&r + r.adjoint()).scale(0.5)
}

#[derive(Clone, Debug)]
pub struct HermEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the matching orthonormal eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl HermEig {
    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `V diag(f(lambda)) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let v = f(lam);
            if !v.is_finite() {
                return Err(Error::DomainError(lam));
            }
            scaled.column_mut(j).scale_mut(v);
        }
        let out = scaled * self.eigenvectors.adjoint();
        debug_assert_eq!(out.nrows(), n);
        Ok(hermitian_part(&out))
    }

    /// Orthonormal basis of eigenvectors whose eigenvalues satisfy `keep`.
    pub fn select(&self, keep: impl Fn(f64) -> bool) -> ComplexMatrix {
        let cols: Vec<usize> = (0..self.eigenvalues.len())
            .filter(|&j| keep(self.eigenvalues[j]))
            .collect();
        self.eigenvectors.select_columns(cols.iter())
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::BadDims(format!(
            "{}x{} is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let asymmetry = fro(&(m - m.adjoint()));
    if asymmetry > SYM_TOL * fro(m).max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEig> {
    check_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermEig {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let se = SymmetricEigen::try_new(hermitian_part(m), f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::NoConvergence("hermitian eigensolver"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    Ok(HermEig {
        eigenvalues: order.iter().map(|&i| se.eigenvalues[i]).collect(),
        eigenvectors: se.eigenvectors.select_columns(order.iter()),
    })
}

/// Eigenvalues only, ascending.
pub fn herm_eigvals(m: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    if m.is_empty() {
        return Ok(vec![]);
    }
    let mut v: Vec<f64> = hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Largest eigenvalue and a unit eigenvector.
pub fn top_eigenpair(m: &ComplexMatrix) -> Result<(f64, ComplexVector)> {
    let e = herm_eig(m)?;
    let j = e.eigenvalues.len() - 1;
    Ok((e.eigenvalues[j], e.eigenvectors.column(j).into_owned()))
}

/// Singular triplets with `sigma > cut`, in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub sigma: Vec<f64>,
    /// Left singular vectors as columns.
    pub u: ComplexMatrix,
    /// Right singular vectors as columns.
    pub v: ComplexMatrix,
}

/// Singular value decomposition read off the Hermitian embedding
/// `[[0, M], [M*, 0]]`, whose eigenpairs are `(+-sigma, (u; +-v)/sqrt 2)`.
/// Only triplets with `sigma > rank_tol * sigma_max` are returned.
pub fn svd(m: &ComplexMatrix, rank_tol: f64) -> Svd {
    let (r, k) = m.shape();
    if m.is_empty() {
        return Svd {
            sigma: vec![],
            u: ComplexMatrix::zeros(r, 0),
            v: ComplexMatrix::zeros(k, 0),
        };
    }
    let zr = ComplexMatrix::zeros(r, r);
    let zk = ComplexMatrix::zeros(k, k);
    let e = herm_eig(&block2(&zr, m, &m.adjoint(), &zk)).expect("embedding is Hermitian");
    let smax = e.max().max(0.0);
    let keep: Vec<usize> = (0..r + k)
        .rev()
        .take(r.min(k))
        .filter(|&j| smax > 0.0 && e.eigenvalues[j] > rank_tol * smax)
        .collect();
    let s2 = std::f64::consts::SQRT_2;
    let mut u = ComplexMatrix::zeros(r, keep.len());
    let mut v = ComplexMatrix::zeros(k, keep.len());
    for (col, &j) in keep.iter().enumerate() {
        let x = e.eigenvectors.column(j);
        u.set_column(col, &(x.rows(0, r) * c(s2, 0.0)));
        v.set_column(col, &(x.rows(r, k) * c(s2, 0.0)));
    }
    Svd {
        sigma: keep.iter().map(|&j| e.eigenvalues[j]).collect(),
        u,
        v,
    }
}

/// Moore-Penrose inverse; singular values at or below `rank_tol * sigma_max`
/// are treated as zero. Hermitian input goes through its eigendecomposition.
pub fn moore_penrose(m: &ComplexMatrix, rank_tol: f64) -> ComplexMatrix {
    assert!(rank_tol > 0.0, "rank_tol must be positive");
    if m.is_empty() {
        return ComplexMatrix::zeros(m.ncols(), m.nrows());
    }
    if m.is_square() && fro(&(m - m.adjoint())) <= SYM_TOL * fro(m) {
        let e = herm_eig(m).expect("checked Hermitian");
        let cut = rank_tol * e.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        return e
            .apply(|x| if x.abs() > cut { 1.0 / x } else { 0.0 })
            .expect("finite reciprocals");
    }
    let d = svd(m, rank_tol);
    let mut vs = d.v.clone();
    for (j, s) in d.sigma.iter().enumerate() {
        vs.column_mut(j).scale_mut(1.0 / s);
    }
    vs * d.u.adjoint()
}

pub fn func_calculus(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    herm_eig(m)?.apply(f)
}

/// Square root of a positive semidefinite matrix. Eigenvalues below
/// `rank_tol * lambda_max` are set to zero so that roundoff in a
/// rank-deficient input does not reappear as spurious `sqrt(eps)` modes.
pub fn sqrt_psd(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    let e = herm_eig(m)?;
    let cut = rank_tol * e.max().abs();
    e.apply(|x| {
        if x <= cut {
            if x < -cut.max(EIG_TOL) {
                f64::NAN
            } else {
                0.0
            }
        } else {
            x.sqrt()
        }
    })
}

/// `|M| = (M* M)^{1/2}`.
pub fn abs(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    sqrt_psd(&(m.adjoint() * m), rank_tol)
}

pub fn positive_part(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    func_calculus(m, |x| x.max(0.0))
}

pub fn negative_part(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    func_calculus(m, |x| (-x).max(0.0))
}

/// `l(t) = sqrt(t^2 - t)`, clamped to zero just below 1.
pub fn ell(t: f64) -> f64 {
    (t * t - t).max(0.0).sqrt()
}

/// `l(D)` for Hermitian `D >= I`.
pub fn ell_matrix(d: &ComplexMatrix) -> Result<ComplexMatrix> {
    func_calculus(d, |t| {
        if t < 1.0 - 1e-9 && t > 1e-9 {
            f64::NAN
        } else {
            ell(t)
        }
    })
}

/// Orthonormal basis for the column space.
pub fn range_basis(m: &ComplexMatrix, rank_tol: f64) -> ComplexMatrix {
    let u = svd(m, rank_tol).u;
    // Re-orthonormalize; the embedding returns u up to O(eps / gap).
    if u.ncols() == 0 {
        return u;
    }
    u.qr().q()
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `u`.
pub fn orth_complement(u: &ComplexMatrix) -> ComplexMatrix {
    let n = u.nrows();
    if u.ncols() == 0 {
        return identity(n);
    }
    let e = herm_eig(&(identity(n) - u * u.adjoint())).expect("projector is Hermitian");
    e.select(|x| x > 0.5)
}

pub fn kernel_basis(m: &ComplexMatrix, rank_tol: f64) -> ComplexMatrix {
    orth_complement(&range_basis(&m.adjoint(), rank_tol))
}

/// Orthogonal projection onto the span of orthonormal columns.
pub fn projector(u: &ComplexMatrix) -> ComplexMatrix {
    u * u.adjoint()
}

/// Basis of the intersection of two subspaces given by orthonormal bases:
/// eigenvectors of `P1 P2 P1` at eigenvalue 1 (within the gap threshold).
pub fn intersection(u1: &ComplexMatrix, u2: &ComplexMatrix) -> ComplexMatrix {
    let n = u1.nrows();
    if u1.ncols() == 0 || u2.ncols() == 0 {
        return ComplexMatrix::zeros(n, 0);
    }
    let p1 = projector(u1);
    let p2 = projector(u2);
    let e = herm_eig(&hermitian_part(&(&p1 * p2 * &p1))).expect("product is Hermitian");
    e.select(|x| x >= 1.0 - INTERSECTION_GAP)
}

/// Block-diagonal direct sum.
pub fn direct_sum(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

/// `[[a, b], [c, d]]` from four blocks with compatible shapes.
pub fn block2(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    d: &ComplexMatrix,
) -> ComplexMatrix {
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    let mut out = ComplexMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((0, c1), (r1, c2)).copy_from(b);
    out.view_mut((r1, 0), (r2, c1)).copy_from(c);
    out.view_mut((r1, c1), (r2, c2)).copy_from(d);
    out
}

pub fn hstack(parts: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows = parts.first().map_or(0, |p| p.nrows());
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut j = 0;
    for p in parts {
        out.view_mut((0, j), (rows, p.ncols())).copy_from(p);
        j += p.ncols();
    }
    out
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// phases of `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let qr = gaussian(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    let g = gaussian(rng, n, 1);
    let v = g.column(0).into_owned();
    let nv = v.norm();
    v / c(nv, 0.0)
}

/// `<T x, x>` for a unit vector `x`.
pub fn quadratic_form(t: &ComplexMatrix, x: &ComplexVector) -> C64 {
    x.dotc(&(t * x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        fro(&(a - b))
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = herm_eig(&identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
        assert!(close(&(e.eigenvectors.adjoint() * &e.eigenvectors), &identity(2)) < 1e-14);
        let e = herm_eig(&diag_real(&[3.0, -1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 3.0]);
    }

    #[test]
    fn eig_two_by_two() {
        let m = from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = herm_eig(&m).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-14);
        let rec = &e.eigenvectors * diag_real(&e.eigenvalues) * e.eigenvectors.adjoint();
        assert!(close(&rec, &m) < 1e-13);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn pinv_examples() {
        let p = moore_penrose(&diag_real(&[2.0, 0.0]), 1e-10);
        assert!(close(&p, &diag_real(&[0.5, 0.0])) < 1e-15);
        let m = from_real(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let p = moore_penrose(&m, 1e-10);
        assert!(close(&p, &from_real(2, 2, &[0.5, 0.0, 0.5, 0.0])) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = haar_unitary(&mut rng, 5);
        assert!(close(&moore_penrose(&u, 1e-10), &u.adjoint()) < 1e-13);
        assert_eq!(
            moore_penrose(&ComplexMatrix::zeros(2, 3), 1e-10),
            ComplexMatrix::zeros(3, 2)
        );
    }

    #[test]
    fn functional_calculus_examples() {
        let s = func_calculus(&diag_real(&[4.0, 9.0]), f64::sqrt).unwrap();
        assert!(close(&s, &diag_real(&[2.0, 3.0])) < 1e-14);
        let p = positive_part(&diag_real(&[2.0, -3.0])).unwrap();
        assert!(close(&p, &diag_real(&[2.0, 0.0])) < 1e-14);
        let l = ell_matrix(&diag_real(&[1.0, 2.0])).unwrap();
        assert!(close(&l, &diag_real(&[0.0, 2f64.sqrt()])) < 1e-14);
        assert!(matches!(
            func_calculus(&diag_real(&[-1.0]), f64::sqrt),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn subspace_examples() {
        let r = range_basis(&diag_real(&[1.0, 0.0]), 1e-10);
        assert_eq!(r.ncols(), 1);
        assert!((r[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert_eq!(kernel_basis(&identity(3), 1e-10).ncols(), 0);
        let q = from_real(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let i = intersection(&range_basis(&q, 1e-10), &range_basis(&q.adjoint(), 1e-10));
        assert_eq!(i.ncols(), 0);
        let p1 = projector(&range_basis(&q, 1e-10));
        let p2 = projector(&range_basis(&q.adjoint(), 1e-10));
        let top = herm_eigvals(&(&p1 * p2 * &p1)).unwrap()[1];
        assert!((top - 0.5).abs() < 1e-14);
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (r, k) in [(7, 4), (4, 7), (6, 6)] {
            let m = gaussian(&mut rng, r, k);
            let d = svd(&m, 1e-12);
            assert_eq!(d.sigma.len(), r.min(k));
            let rec = &d.u * diag_real(&d.sigma) * d.v.adjoint();
            assert!(close(&rec, &m) < 1e-13);
            assert!((spectral_norm(&m) - d.sigma[0]).abs() < 1e-13);
            let p = moore_penrose(&m, 1e-10);
            assert!(close(&(&m * &p * &m), &m) < 1e-12);
            assert!(close(&(&p * &m * &p), &p) < 1e-12);
        }
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(&mut rng, 7);
        assert!(close(&(u.adjoint() * &u), &identity(7)) < 1e-13);
    }

    #[test]
    fn direct_sum_and_blocks() {
        let a = diag_real(&[1.0]);
        let b = diag_real(&[2.0, 3.0]);
        assert_eq!(direct_sum(&[&a, &b]), diag_real(&[1.0, 2.0, 3.0]));
        let z = ComplexMatrix::zeros(1, 1);
        assert_eq!(block2(&a, &z, &z, &a), identity(2));
    }
}
