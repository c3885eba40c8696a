//! Unitary reduction of a non-projection idempotent to
//! `I_{H1} (+) 0_{H4} (+) [[D, -l(D)], [l(D), I - D]]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::idempotent::Idempotent;
use crate::io;
use crate::linalg::{
    self, c, diag_real, direct_sum, ell, hstack, identity, intersection, orth_complement,
    range_basis, spectral_norm, ComplexMatrix,
};
use crate::tol::{RANK_TOL, SPLIT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub h1: usize,
    pub h4: usize,
    pub h5: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CanonicalForm {
    #[serde(with = "io::matrix")]
    pub v: ComplexMatrix,
    pub dims: Dims,
    #[serde(with = "io::matrix")]
    pub d: ComplexMatrix,
}

/// `[[D, -l(D)], [l(D), I - D]]` for a Hermitian `D >= I`.
pub fn reduced_block(d: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = d.nrows();
    let l = linalg::ell_matrix(d)?;
    Ok(linalg::block2(d, &(-&l), &l, &(identity(h) - d)))
}

impl CanonicalForm {
    pub fn d_norm(&self) -> f64 {
        spectral_norm(&self.d)
    }

    /// Eigenvalues of `D`, ascending.
    pub fn d_spectrum(&self) -> Vec<f64> {
        linalg::herm_eigvals(&self.d).expect("D is Hermitian")
    }

    /// `I_{h1} (+) 0_{h4} (+) [[D, -l(D)], [l(D), I - D]]`.
    pub fn q_blocks(&self) -> Result<ComplexMatrix> {
        let Dims { h1, h4, .. } = self.dims;
        Ok(direct_sum(&[
            &identity(h1),
            &ComplexMatrix::zeros(h4, h4),
            &reduced_block(&self.d)?,
        ]))
    }

    /// `I_{h1} (+) 0_{h4} (+) I_{h5} (+) 0_{h5}`.
    pub fn m_blocks(&self) -> ComplexMatrix {
        let Dims { h1, h4, h5 } = self.dims;
        let mut diag = vec![1.0; h1];
        diag.extend(std::iter::repeat_n(0.0, h4));
        diag.extend(std::iter::repeat_n(1.0, h5));
        diag.extend(std::iter::repeat_n(0.0, h5));
        diag_real(&diag)
    }

    /// `V* (blocks) V`.
    pub fn conjugate_back(&self, blocks: &ComplexMatrix) -> ComplexMatrix {
        self.v.adjoint() * blocks * &self.v
    }
}

/// Block form, SVD of the off-diagonal block split at `SPLIT_TOL`, then the
/// unitary symmetry `W` on each nonzero singular pair.
pub fn canonical_form(q: &Idempotent) -> Result<CanonicalForm> {
    let bf = q.block_form();
    let (k1, k2) = (bf.u1.ncols(), bf.u2.ncols());
    let svd = linalg::svd(&bf.a, SPLIT_TOL);
    let h5 = svd.sigma.len();
    if h5 == 0 || svd.sigma[0] <= SPLIT_TOL {
        return Err(Error::IsProjection);
    }
    let (x_nz, y_nz) = (&svd.u, &svd.v);
    let x_rest = orth_complement(x_nz);
    let y_rest = orth_complement(y_nz);
    let (h1, h4) = (k1 - h5, k2 - h5);
    debug_assert_eq!(x_rest.ncols(), h1);
    debug_assert_eq!(y_rest.ncols(), h4);

    let e = hstack(&[
        &(&bf.u1 * x_rest),
        &(&bf.u2 * y_rest),
        &(&bf.u1 * x_nz),
        &(&bf.u2 * y_nz),
    ]);

    let mut w = ComplexMatrix::zeros(2 * h5, 2 * h5);
    let mut dvals = Vec::with_capacity(h5);
    for (i, &sigma) in svd.sigma.iter().enumerate() {
        let b = (1.0 + sigma * sigma).sqrt();
        let d = 0.5 * (1.0 + b);
        let p = (d / b).sqrt();
        let s = ((d - 1.0) / b).sqrt();
        w[(i, i)] = c(p, 0.0);
        w[(i, h5 + i)] = c(s, 0.0);
        w[(h5 + i, i)] = c(s, 0.0);
        w[(h5 + i, h5 + i)] = c(-p, 0.0);
        dvals.push(d);
    }
    let v = direct_sum(&[&identity(h1 + h4), &w]) * e.adjoint();
    Ok(CanonicalForm {
        v,
        dims: Dims { h1, h4, h5 },
        d: diag_real(&dvals),
    })
}

#[derive(Clone, Debug)]
pub struct Subspaces {
    pub h1: ComplexMatrix,
    pub h4: ComplexMatrix,
    pub h5: ComplexMatrix,
    pub h6: ComplexMatrix,
}

impl Subspaces {
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (
            self.h1.ncols(),
            self.h4.ncols(),
            self.h5.ncols(),
            self.h6.ncols(),
        )
    }
}

/// `H1 = R(Q) n R(Q*)`, `H4 = N(Q) n N(Q*)`, `H5 = R(m Q (I - m))`,
/// `H6 = R((I - m) Q m)`.
pub fn invariant_subspaces(q: &Idempotent) -> Result<Subspaces> {
    let qm = q.matrix();
    let n = q.n();
    let m = q.matched_projection()?;
    let mc = identity(n) - &m;
    let rq = range_basis(qm, RANK_TOL);
    let rqs = range_basis(&qm.adjoint(), RANK_TOL);
    Ok(Subspaces {
        h1: intersection(&rq, &rqs),
        h4: intersection(&orth_complement(&rqs), &orth_complement(&rq)),
        h5: range_basis(&(&m * qm * &mc), RANK_TOL),
        h6: range_basis(&(&mc * qm * &m), RANK_TOL),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenTransfer {
    pub holds: bool,
    /// `|D| <= 1 + tol`: the statement is vacuous there.
    pub degenerate: bool,
    pub residual: f64,
}

/// Compares the top eigenspace of `D` with the `l(|D|)`-eigenspace of `l(D)`.
pub fn verify_eigen_transfer(d: &ComplexMatrix, tol: f64) -> Result<EigenTransfer> {
    let e = linalg::herm_eig(d)?;
    let top = e.max();
    if top <= 1.0 + tol {
        return Ok(EigenTransfer {
            holds: true,
            degenerate: true,
            residual: 0.0,
        });
    }
    let p1 = linalg::projector(&e.select(|x| x >= top - tol));
    let l = linalg::ell_matrix(d)?;
    let el = linalg::herm_eig(&l)?;
    let target = ell(top);
    let p2 = linalg::projector(&el.select(|x| (x - target).abs() <= tol));
    let residual = spectral_norm(&(p1 - p2));
    Ok(EigenTransfer {
        holds: residual <= tol.max(1e-9),
        degenerate: false,
        residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DaChain {
    pub a: f64,
    /// Smallest eigenvalue of `D_a = (D - aI)/|D - aI|`.
    pub da_min: f64,
    /// Smallest eigenvalue of the intertwining factor.
    pub factor_min: f64,
    /// `|D_a - l(D)/l(d) - A (dI - D)|`.
    pub identity_residual: f64,
}

/// `D_a - l(D)/l(d) = A (dI - D)` with
/// `A = [(d-a)^2 l(d)^2 (D_a + l(D)/l(d))]^{-1} [(a^2 - 2da + d) D + a^2 (d-1) I]`.
pub fn da_chain(d: &ComplexMatrix, a: f64) -> Result<DaChain> {
    let h = d.nrows();
    let e = linalg::herm_eig(d)?;
    let dn = e.max();
    if !(dn > 1.0 && a < dn / (2.0 * dn - 1.0)) {
        return Err(Error::BadParam(format!(
            "need |D| > 1 and a < d/(2d-1), got a = {a}"
        )));
    }
    let shifted = d - identity(h) * c(a, 0.0);
    let da = &shifted / c(spectral_norm(&shifted), 0.0);
    let ld = linalg::ell_matrix(d)? / c(ell(dn), 0.0);
    let lhs = &da - &ld;
    let denom = (&da + &ld) * c((dn - a).powi(2) * ell(dn).powi(2), 0.0);
    let numer = d * c(a * a - 2.0 * dn * a + dn, 0.0) + identity(h) * c(a * a * (dn - 1.0), 0.0);
    let factor = denom
        .try_inverse()
        .ok_or(Error::NoConvergence("inverse of D_a + l(D)/l(d)"))?
        * numer;
    let rhs = &factor * (identity(h) * c(dn, 0.0) - d);
    Ok(DaChain {
        a,
        da_min: linalg::herm_eigvals(&da)?[0],
        factor_min: linalg::herm_eigvals(&linalg::hermitian_part(&factor))?[0],
        identity_residual: spectral_norm(&(lhs - rhs)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idempotent::random_idempotent;
    use crate::linalg::{fro, from_real};

    fn q11() -> Idempotent {
        Idempotent::validate(from_real(2, 2, &[1.0, 1.0, 0.0, 0.0])).unwrap()
    }

    #[test]
    fn two_by_two_example() {
        let cf = canonical_form(&q11()).unwrap();
        assert_eq!(
            cf.dims,
            Dims {
                h1: 0,
                h4: 0,
                h5: 1
            }
        );
        assert!((cf.d[(0, 0)].re - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-14);
        let rec = cf.conjugate_back(&cf.q_blocks().unwrap());
        assert!(fro(&(rec - q11().matrix())) < 1e-13);
        assert!((2.0 * cf.d_norm() - 1.0 - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn direct_sum_example() {
        let q = direct_sum(&[
            &from_real(2, 2, &[1.0, 1.0, 0.0, 0.0]),
            &diag_real(&[1.0, 0.0]),
        ]);
        let q = Idempotent::validate(q).unwrap();
        let cf = canonical_form(&q).unwrap();
        assert_eq!(
            cf.dims,
            Dims {
                h1: 1,
                h4: 1,
                h5: 1
            }
        );
        assert!((cf.d[(0, 0)].re - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-14);
        assert_eq!(invariant_subspaces(&q).unwrap().dims(), (1, 1, 1, 1));
    }

    #[test]
    fn refuses_projections() {
        let p = Idempotent::validate(diag_real(&[1.0, 0.0])).unwrap();
        assert!(matches!(canonical_form(&p), Err(Error::IsProjection)));
    }

    #[test]
    fn random_reconstruction() {
        let q = random_idempotent(9, 4, 2.0, 17).unwrap();
        let cf = canonical_form(&q).unwrap();
        let v = &cf.v;
        assert!(fro(&(v.adjoint() * v - identity(9))) < 1e-12);
        assert!(fro(&(cf.conjugate_back(&cf.q_blocks().unwrap()) - q.matrix())) < 1e-11);
        let m = q.matched_projection().unwrap();
        assert!(fro(&(cf.conjugate_back(&cf.m_blocks()) - m)) < 1e-11);
        assert!((q.norm() - (2.0 * cf.d_norm() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn eigen_transfer_examples() {
        let t = verify_eigen_transfer(&diag_real(&[1.0, 2.0]), 1e-10).unwrap();
        assert!(t.holds && !t.degenerate);
        let t = verify_eigen_transfer(&diag_real(&[1.0, 1.0 + 1e-12]), 1e-10).unwrap();
        assert!(t.degenerate);
    }

    #[test]
    fn da_chain_on_diagonal() {
        let d = diag_real(&[1.0, 1.3, 2.0]);
        let ch = da_chain(&d, 0.2).unwrap();
        assert!(ch.da_min > 0.0 && ch.factor_min > 0.0);
        assert!(ch.identity_residual < 1e-13);
        assert!(da_chain(&d, 0.9).is_err());
    }
}
