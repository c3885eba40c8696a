//! Extremal and intermediate distances from projections to an idempotent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::idempotent::{blocked_idempotent, matched_block, Idempotent};
use crate::io;
use crate::linalg::{self, block2, c, identity, spectral_norm, ComplexMatrix};
use crate::tol::idem_tol;

/// Bracket-finding scan resolution along each path leg.
pub const SCAN_SAMPLES: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub min_dist: f64,
    pub max_dist: f64,
    pub lambda_q: f64,
    pub mu_q: f64,
    #[serde(with = "io::matrix")]
    pub witness_min: ComplexMatrix,
    #[serde(with = "io::matrix")]
    pub witness_max: ComplexMatrix,
}

/// `1/2 (|Q| - 1 + sqrt(|Q|^2 - 1))`. The zero idempotent is a projection
/// and is treated as having norm 1.
pub fn min_distance_formula(norm: f64) -> f64 {
    let norm = norm.max(1.0);
    0.5 * (norm - 1.0 + (norm * norm - 1.0).max(0.0).sqrt())
}

fn check(what: &'static str, residual: f64, tol: f64) -> Result<()> {
    if residual <= tol {
        Ok(())
    } else {
        Err(Error::Verification {
            what,
            residual,
            tol,
        })
    }
}

/// Closed-form minimum distance, cross-checked against `|m(Q) - Q|`.
pub fn min_distance(q: &Idempotent) -> Result<f64> {
    let closed = min_distance_formula(q.norm());
    let direct = spectral_norm(&(q.matched_projection()? - q.matrix()));
    check("min distance", (closed - direct).abs(), idem_tol(q.norm()))?;
    Ok(closed)
}

/// `1 + min`, cross-checked against `|I - m(Q) - Q|`.
pub fn max_distance(q: &Idempotent) -> Result<f64> {
    let closed = 1.0 + min_distance_formula(q.norm());
    let n = q.n();
    let direct = spectral_norm(&(identity(n) - q.matched_projection()? - q.matrix()));
    check("max distance", (closed - direct).abs(), idem_tol(q.norm()))?;
    Ok(closed)
}

/// `(lambda_Q, mu_Q) = (|P_R(Q) - Q|, |I - P_R(Q) - Q|)`.
pub fn lambda_mu(q: &Idempotent) -> Result<(f64, f64)> {
    let p = q.range_projection()?;
    let lambda = spectral_norm(&(&p - q.matrix()));
    let mu = spectral_norm(&(identity(q.n()) - &p - q.matrix()));
    Ok((lambda, mu))
}

pub fn distance_report(q: &Idempotent) -> Result<DistanceReport> {
    let min_dist = min_distance(q)?;
    let max_dist = max_distance(q)?;
    let (lambda_q, mu_q) = lambda_mu(q)?;
    let m = q.matched_projection()?;
    Ok(DistanceReport {
        min_dist,
        max_dist,
        lambda_q,
        mu_q,
        witness_max: identity(q.n()) - &m,
        witness_min: m,
    })
}

/// `1 + a^2 + a sqrt(1 + a^2)`.
pub fn sqp_norm_formula(a: f64) -> f64 {
    1.0 + a * a + a * (1.0 + a * a).sqrt()
}

/// `(P - Q)*(P - Q) + (I - P - Q)*(I - P - Q)`.
pub fn sqp_from_projection(q: &ComplexMatrix, p: &ComplexMatrix) -> ComplexMatrix {
    let n = q.nrows();
    let x = p - q;
    let y = identity(n) - p - q;
    x.adjoint() * x + y.adjoint() * y
}

/// `S = I - Q - Q* + 2 Q*Q`, checked against three random projections and
/// against the closed-form norm.
pub fn sqp_invariant(q: &Idempotent, seed: u64) -> Result<ComplexMatrix> {
    let n = q.n();
    let qm = q.matrix();
    let s = identity(n) - qm - qm.adjoint() + (qm.adjoint() * qm).scale(2.0);
    let tol = idem_tol(q.norm());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..3 {
        let p = random_projection(&mut rng, n);
        check(
            "S independent of P",
            linalg::fro(&(sqp_from_projection(qm, &p) - &s)),
            tol,
        )?;
    }
    let a = spectral_norm(&q.block_form().a);
    check(
        "norm of S",
        (spectral_norm(&s) - sqp_norm_formula(a)).abs(),
        tol,
    )?;
    Ok(s)
}

/// `V diag(I_k, 0) V*` with Haar `V` and uniform rank `k` in `0..=n`.
pub fn random_projection<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let k = rng.random_range(0..=n);
    let v = linalg::haar_unitary(rng, n);
    let vk = v.columns(0, k);
    vk * vk.adjoint()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtremalityReport {
    pub samples: usize,
    pub min_dist: f64,
    pub max_dist: f64,
    pub smallest_seen: f64,
    pub largest_seen: f64,
    pub violations: usize,
}

/// Samples random projections and records how close they come to the
/// extremal distances.
pub fn monte_carlo_extremality(
    q: &Idempotent,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ExtremalityReport> {
    let min_dist = min_distance(q)?;
    let max_dist = max_distance(q)?;
    let n = q.n();
    let dists: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let p = random_projection(&mut rng, n);
            spectral_norm(&(p - q.matrix()))
        })
        .collect();
    let violations = dists
        .iter()
        .filter(|&&x| x < min_dist - tol || x > max_dist + tol)
        .count();
    Ok(ExtremalityReport {
        samples,
        min_dist,
        max_dist,
        smallest_seen: dists.iter().copied().fold(f64::INFINITY, f64::min),
        largest_seen: dists.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        violations,
    })
}

/// Rotation family on `E1 (+) E2` with `dim E1 = k1 <= k2 = dim E2`: the
/// first `k1` basis vectors of `E2` are rotated against `E1` by angle
/// `pi t / 2`, and the projection onto the next `j` basis vectors of `E2`
/// is added.
fn rotation_family(k1: usize, k2: usize, t: f64, j: usize) -> ComplexMatrix {
    let (s, co) = (std::f64::consts::FRAC_PI_2 * t).sin_cos();
    let mut p = ComplexMatrix::zeros(k1 + k2, k1 + k2);
    for i in 0..k1 {
        p[(i, i)] = c(co * co, 0.0);
        p[(i, k1 + i)] = c(s * co, 0.0);
        p[(k1 + i, i)] = c(s * co, 0.0);
        p[(k1 + i, k1 + i)] = c(s * s, 0.0);
    }
    for i in 0..j {
        p[(2 * k1 + i, 2 * k1 + i)] = c(1.0, 0.0);
    }
    p
}

/// Reorder `(E2, E1)` block coordinates to `(E1, E2)`.
fn swap_blocks(m: &ComplexMatrix, k2: usize) -> ComplexMatrix {
    let n = m.nrows();
    let k1 = n - k2;
    let perm: Vec<usize> = (k2..n).chain(0..k2).collect();
    debug_assert_eq!(perm.len(), k1 + k2);
    let rows = m.select_rows(perm.iter());
    rows.select_columns(perm.iter())
}

type Leg<'a> = Box<dyn Fn(f64) -> Result<ComplexMatrix> + Sync + 'a>;

/// Projection `P` with `| |P - Q| - alpha | <= dist_tol`, built along the
/// three-leg path `m(Q) -> P_R(Q) -> I - P_R(Q) -> I - m(Q)`.
pub fn projection_at_distance(q: &Idempotent, alpha: f64, dist_tol: f64) -> Result<ComplexMatrix> {
    let min = min_distance_formula(q.norm());
    let max = 1.0 + min;
    if !(alpha >= min - dist_tol && alpha <= max + dist_tol) {
        return Err(Error::OutOfRange { alpha, min, max });
    }
    let bf = q.block_form();
    let k1 = bf.u1.ncols();
    let k2 = bf.u2.ncols();
    let a = bf.a.clone();
    let qb = blocked_idempotent(&a);
    let n = k1 + k2;

    let mut legs: Vec<Leg> = Vec::new();
    // m(Q_s) with the off-diagonal block scaled by s, from P_R(Q) to m(Q).
    legs.push(Box::new(|s: f64| matched_block(&(&a * c(1.0 - s, 0.0)))));
    // Rotations from K1 towards K2, one leg per added K3 direction.
    let (small, large) = (k1.min(k2), k1.max(k2));
    for j in 0..=(large - small) {
        legs.push(Box::new(move |t: f64| {
            let p = rotation_family(small, large, t, j);
            Ok(if k1 <= k2 {
                p
            } else {
                identity(n) - swap_blocks(&p, k2)
            })
        }));
    }
    // m(R_s) for the idempotents R_s = [[0, 0], [-s A*, I]] from P_K2 to I - m(Q).
    legs.push(Box::new(|s: f64| {
        let m = matched_block(&(a.adjoint() * c(-s, 0.0)))?;
        Ok(swap_blocks(&m, k2))
    }));

    let dist = |p: &ComplexMatrix| spectral_norm(&(p - &qb));
    let u = bf.unitary();
    let lift = |p: ComplexMatrix| linalg::hermitian_part(&(&u * p * u.adjoint()));

    // Legs whose endpoints bracket alpha first, then any leg with an interior bracket.
    let mut order: Vec<(usize, bool)> = Vec::new();
    for (i, leg) in legs.iter().enumerate() {
        let (lo, hi) = (dist(&leg(0.0)?), dist(&leg(1.0)?));
        if (lo - alpha).abs() <= dist_tol {
            return Ok(lift(leg(0.0)?));
        }
        if (hi - alpha).abs() <= dist_tol {
            return Ok(lift(leg(1.0)?));
        }
        order.push((i, (lo - alpha) * (hi - alpha) < 0.0));
    }
    order.sort_by_key(|&(_, brackets)| !brackets);
    for (i, _) in order {
        if let Some(p) = solve_on_leg(&legs[i], &dist, alpha, dist_tol)? {
            return Ok(lift(p));
        }
    }
    Err(Error::NoConvergence(
        "no path leg brackets the target distance",
    ))
}

fn solve_on_leg(
    leg: &Leg,
    dist: &dyn Fn(&ComplexMatrix) -> f64,
    alpha: f64,
    dist_tol: f64,
) -> Result<Option<ComplexMatrix>> {
    let mut prev_s = 0.0;
    let mut prev_f = dist(&leg(0.0)?) - alpha;
    for i in 1..=SCAN_SAMPLES {
        let s = i as f64 / SCAN_SAMPLES as f64;
        let p = leg(s)?;
        let f = dist(&p) - alpha;
        if f.abs() <= dist_tol {
            return Ok(Some(p));
        }
        if prev_f * f < 0.0 {
            let (mut lo, mut hi, mut flo) = (prev_s, s, prev_f);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let p = leg(mid)?;
                let fm = dist(&p) - alpha;
                if fm.abs() <= dist_tol {
                    return Ok(Some(p));
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-16 {
                    break;
                }
            }
            return Err(Error::NoConvergence("bisection on path leg"));
        }
        prev_s = s;
        prev_f = f;
    }
    Ok(None)
}

/// The regression instance `Q = [[I2, A], [0, 0]]`, `A = diag(a, 0)`, and
/// the projection `P = m(Q) + e4 e4*` whose distance to `Q` is 1.
pub fn distance_example(a: f64) -> (Idempotent, ComplexMatrix) {
    let block = linalg::diag_real(&[a, 0.0]);
    let q = Idempotent::validate(blocked_idempotent(&block)).expect("blocked form is idempotent");
    let mut p = q.matched_projection().expect("matched projection");
    p[(3, 3)] += c(1.0, 0.0);
    (q, p)
}

/// Cross-block helper exposed for tests: `[[X, 0], [0, Y]]`.
pub fn block_diag(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    block2(
        x,
        &ComplexMatrix::zeros(x.nrows(), y.ncols()),
        &ComplexMatrix::zeros(y.nrows(), x.ncols()),
        y,
    )
}
