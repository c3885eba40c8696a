//! Idempotents, their blocked form and the matched projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{
    self, block2, c, fro, hstack, identity, moore_penrose, orth_complement, range_basis,
    spectral_norm, sqrt_psd, ComplexMatrix,
};
use crate::tol::{idem_tol, PENCIL_COND_CAP, RANK_TOL};

/// A validated square matrix with `Q^2 = Q` up to a recorded defect.
#[derive(Clone, Debug)]
pub struct Idempotent {
    q: ComplexMatrix,
    defect: f64,
    norm: f64,
    is_projection: bool,
}

impl Idempotent {
    /// Validate against the default scale-aware tolerance.
    pub fn validate(q: ComplexMatrix) -> Result<Self> {
        Self::validate_with(q, None)
    }

    pub fn validate_with(q: ComplexMatrix, tol: Option<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::BadDims(format!(
                "{}x{} is not square",
                q.nrows(),
                q.ncols()
            )));
        }
        linalg::check_finite(&q)?;
        let norm = spectral_norm(&q);
        let tol = tol.unwrap_or_else(|| idem_tol(norm));
        let defect = spectral_norm(&(&q * &q - &q));
        if defect > tol {
            return Err(Error::NotIdempotent { defect, tol });
        }
        let is_projection = spectral_norm(&(&q - q.adjoint())) <= tol;
        Ok(Idempotent {
            q,
            defect,
            norm,
            is_projection,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.q
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_projection(&self) -> bool {
        self.is_projection
    }

    /// Rank, read off the trace (exact for idempotents up to roundoff).
    pub fn rank(&self) -> usize {
        self.q.trace().re.round().max(0.0) as usize
    }

    /// `Q*`, again an idempotent with the same norm and defect.
    pub fn adjoint(&self) -> Idempotent {
        Idempotent {
            q: self.q.adjoint(),
            ..self.clone()
        }
    }

    /// `I - Q`.
    pub fn complement(&self) -> Idempotent {
        let q = identity(self.n()) - &self.q;
        let norm = if self.n() == 0 {
            0.0
        } else {
            spectral_norm(&q)
        };
        Idempotent {
            q,
            norm,
            ..self.clone()
        }
    }

    pub fn block_form(&self) -> BlockForm {
        BlockForm::new(self)
    }

    /// `m(Q) = 1/2 (|Q*| + Q*) |Q*|^+ (|Q*| + I)^{-1} (|Q*| + Q)`.
    pub fn matched_projection(&self) -> Result<ComplexMatrix> {
        let n = self.n();
        let q = &self.q;
        let qs = q.adjoint();
        let x = sqrt_psd(&(q * &qs), RANK_TOL)?;
        let x_pinv = moore_penrose(&x, RANK_TOL);
        let shifted = &x + identity(n);
        let inv = shifted
            .cholesky()
            .ok_or(Error::NoConvergence("cholesky of |Q*| + I"))?
            .inverse();
        let m = (&x + &qs) * x_pinv * inv * (&x + q);
        Ok(linalg::hermitian_part(&m.scale(0.5)))
    }

    /// `m(Q)` evaluated through the blocked form, `U m_blk U*`.
    pub fn matched_projection_blocked(&self) -> Result<ComplexMatrix> {
        let bf = self.block_form();
        let u = bf.unitary();
        Ok(&u * matched_block(&bf.a)? * u.adjoint())
    }

    fn pencil_inverse(&self) -> Result<ComplexMatrix> {
        let n = self.n();
        let pencil = &self.q + self.q.adjoint() - identity(n);
        let inv = pencil
            .try_inverse()
            .ok_or(Error::SingularPencil(f64::INFINITY))?;
        let cond = spectral_norm(&inv);
        if !cond.is_finite() || cond > PENCIL_COND_CAP {
            return Err(Error::SingularPencil(cond));
        }
        Ok(inv)
    }

    /// `P_{R(Q)} = Q (Q + Q* - I)^{-1}`.
    pub fn range_projection(&self) -> Result<ComplexMatrix> {
        Ok(linalg::hermitian_part(&(&self.q * self.pencil_inverse()?)))
    }

    /// `P_{N(Q)} = (Q - I)(Q + Q* - I)^{-1}`.
    pub fn null_projection(&self) -> Result<ComplexMatrix> {
        let n = self.n();
        Ok(linalg::hermitian_part(
            &((&self.q - identity(n)) * self.pencil_inverse()?),
        ))
    }

    /// `[P (2m - I) P]^+ P (2m - I)` with `P = P_{R(Q)}`; recovers `Q`.
    pub fn reconstruct_from_matched(&self) -> Result<ComplexMatrix> {
        let n = self.n();
        let p = self.range_projection()?;
        let s = self.matched_projection()?.scale(2.0) - identity(n);
        let ps = &p * s;
        Ok(moore_penrose(&(&ps * &p), RANK_TOL) * ps)
    }
}

impl Serialize for Idempotent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IdempotentJson {
            schema: io::SCHEMA,
            n: self.n(),
            rank: self.rank(),
            defect: self.defect,
            norm: self.norm,
            is_projection: self.is_projection,
            matrix: io::matrix_rows(&self.q),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Idempotent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = IdempotentJson::deserialize(d)?;
        let q = io::matrix_from_rows(&raw.matrix).map_err(D::Error::custom)?;
        Idempotent::validate(q).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct IdempotentJson {
    #[serde(default)]
    schema: u32,
    #[serde(default)]
    n: usize,
    #[serde(default)]
    rank: usize,
    #[serde(default)]
    defect: f64,
    #[serde(default)]
    norm: f64,
    #[serde(default)]
    is_projection: bool,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Parse an idempotent from JSON: either the metadata object or a bare matrix.
pub fn read_idempotent(text: &str) -> Result<Idempotent> {
    Idempotent::validate(io::read_matrix_json(text)?)
}

/// Coordinates `K1 = R(Q)`, `K2 = N(Q*)` in which `Q = [[I, A], [0, 0]]`.
#[derive(Clone, Debug)]
pub struct BlockForm {
    pub u1: ComplexMatrix,
    pub u2: ComplexMatrix,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
}

impl BlockForm {
    fn new(q: &Idempotent) -> Self {
        let u1 = range_basis(&q.q, RANK_TOL);
        let u2 = orth_complement(&u1);
        let a = u1.adjoint() * &q.q * &u2;
        let k = u1.ncols();
        let b = sqrt_psd(&(identity(k) + &a * a.adjoint()), RANK_TOL)
            .expect("I + AA* is positive definite");
        BlockForm { u1, u2, a, b }
    }

    /// `[U1 U2]`.
    pub fn unitary(&self) -> ComplexMatrix {
        hstack(&[&self.u1, &self.u2])
    }

    /// `[[I, A], [0, 0]]`.
    pub fn blocked_q(&self) -> ComplexMatrix {
        blocked_idempotent(&self.a)
    }
}

/// `[[I, A], [0, 0]]` for a `k x (n-k)` block `A`.
pub fn blocked_idempotent(a: &ComplexMatrix) -> ComplexMatrix {
    let (k, m) = a.shape();
    block2(
        &identity(k),
        a,
        &ComplexMatrix::zeros(m, k),
        &ComplexMatrix::zeros(m, m),
    )
}

/// Matched projection of `[[I, A], [0, 0]]`:
/// `1/2 [[(B+I)B^{-1}, B^{-1}A], [A*B^{-1}, A*(B(B+I))^{-1}A]]`, `B = (I+AA*)^{1/2}`.
pub fn matched_block(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let k = a.nrows();
    let e = linalg::herm_eig(&(identity(k) + a * a.adjoint()))?;
    let b = e.apply(f64::sqrt)?;
    let b_inv = e.apply(|x| 1.0 / x.sqrt())?;
    let bb_inv = e.apply(|x| 1.0 / (x.sqrt() * (x.sqrt() + 1.0)))?;
    let top_left = (b + identity(k)) * &b_inv;
    let top_right = &b_inv * a;
    let bottom_left = a.adjoint() * &b_inv;
    let bottom_right = a.adjoint() * bb_inv * a;
    let m = block2(&top_left, &top_right, &bottom_left, &bottom_right).scale(0.5);
    Ok(linalg::hermitian_part(&m))
}

/// `W* [[I, A], [0, 0]] W` with Haar `W` and a Gaussian `A` rescaled to `|A| = a`.
pub fn random_idempotent(n: usize, k: usize, a: f64, seed: u64) -> Result<Idempotent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_idempotent_with(&mut rng, n, k, a)
}

pub fn random_idempotent_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    a: f64,
) -> Result<Idempotent> {
    if k == 0 || k >= n {
        return Err(Error::BadDims(format!("rank {k} must lie in 1..{n}")));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::BadParam(format!(
            "skew magnitude {a} must be finite and >= 0"
        )));
    }
    let mut block = linalg::gaussian(rng, k, n - k);
    let s = spectral_norm(&block);
    block *= c(if s > 0.0 { a / s } else { 0.0 }, 0.0);
    let w = linalg::haar_unitary(rng, n);
    let q = w.adjoint() * blocked_idempotent(&block) * &w;
    Idempotent::validate(q)
}

/// Frobenius distance, used for matrix comparisons in checks.
pub fn residual(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    fro(&(a - b))
}
