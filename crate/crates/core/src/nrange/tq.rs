//! The probe operator `T_Q = m(Q) + m(Q) Q`, its elliptical numerical range
//! and the closedness criterion.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridOperator;
use crate::idempotent::Idempotent;
use crate::linalg::{self, ell, spectral_norm, ComplexMatrix, C64};
use crate::tol;

use super::ellipse::EllipseParams;
use super::support::{angles, numerical_radius, SupportEngine};

pub const TQ_TOL: f64 = 1e-7;

pub fn tq_operator(q: &Idempotent) -> Result<ComplexMatrix> {
    if q.is_projection() {
        return Err(Error::IsProjection);
    }
    let m = q.matched_projection()?;
    Ok(&m + &m * q.matrix())
}

/// Center `(c, 0)` and semi-axes `a = sqrt(2d^2 + d + 1)/2`, `b = l(d)/2`
/// with `d = (|Q| + 1)/2`, `c = (d + 1)/2`.
pub fn tq_ellipse_params(norm: f64) -> EllipseParams {
    let d = 0.5 * (norm + 1.0);
    EllipseParams::aligned(
        0.5 * (d + 1.0),
        0.0,
        0.5 * (2.0 * d * d + d + 1.0).sqrt(),
        0.5 * ell(d),
    )
}

/// The open ellipse bounding `W(T_{Q_r})`: center `(r+3)/4`,
/// `a^2 = (r^2+3r+4)/8`, `b^2 = (r^2-1)/16`.
pub fn corollary_ellipse(r: f64) -> EllipseParams {
    EllipseParams::aligned(
        0.25 * (r + 3.0),
        0.0,
        ((r * r + 3.0 * r + 4.0) / 8.0).sqrt(),
        ((r * r - 1.0) / 16.0).sqrt(),
    )
}

/// `min` over the forced candidate pairs `(0, 2)` and `(0, d + 1)` of
/// `|(T - e1)(T - e2)|`; zero iff `T` is quadratic.
pub fn quadratic_defect(t: &ComplexMatrix, d: f64) -> f64 {
    let n = t.nrows();
    let id = ComplexMatrix::identity(n, n);
    [2.0, d + 1.0]
        .iter()
        .map(|&e| spectral_norm(&(t * (t - &id * C64::new(e, 0.0)))))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, Serialize)]
pub struct TqReport {
    pub ellipse: EllipseParams,
    pub d: f64,
    pub norm_t: f64,
    pub radius: f64,
    /// `max_alpha |h_ellipse - h_W(T)|` over 256 angles.
    pub support_mismatch: f64,
    pub quadratic_defect: f64,
    /// `T_Q` can only be quadratic when the identity summand is absent and
    /// `D` is scalar.
    pub expect_quadratic: bool,
}

impl TqReport {
    pub fn norm_residual(&self) -> f64 {
        (self.norm_t - 2.0 * self.ellipse.a).abs()
    }

    pub fn radius_residual(&self) -> f64 {
        (self.radius - (self.ellipse.a + self.ellipse.x0)).abs()
    }

    pub fn non_quadratic(&self) -> bool {
        self.quadratic_defect > TQ_TOL
    }
}

pub fn tq_report(q: &Idempotent) -> Result<TqReport> {
    let t = tq_operator(q)?;
    let ellipse = tq_ellipse_params(q.norm());
    let d = 0.5 * (q.norm() + 1.0);
    let engine = SupportEngine::new(&t);
    let support_mismatch = angles(256)
        .par_iter()
        .map(|&a| (engine.support(a) - ellipse.support(a)).abs())
        .reduce(|| 0.0, f64::max);
    let radius = numerical_radius(|a| engine.support(a));
    let cf = crate::canonical::canonical_form(q)?;
    let spec = cf.d_spectrum();
    let spread = spec.iter().fold(0.0f64, |m, &s| m.max((s - d).abs()));
    Ok(TqReport {
        ellipse,
        d,
        norm_t: spectral_norm(&t),
        radius,
        support_mismatch,
        quadratic_defect: quadratic_defect(&t, d),
        expect_quadratic: cf.dims.h1 == 0 && spread <= tol::SPLIT_TOL * d,
    })
}

/// The ellipse of `W(T_Q)`, verified against `|T_Q| = 2a`, `w(T_Q) = a + c`
/// and the sampled support of `T_Q`.
pub fn tq_ellipse(q: &Idempotent) -> Result<EllipseParams> {
    let rep = tq_report(q)?;
    let checks = [
        ("norm of T_Q", rep.norm_residual()),
        ("numerical radius of T_Q", rep.radius_residual()),
        ("support of T_Q", rep.support_mismatch),
    ];
    for (what, residual) in checks {
        if residual > TQ_TOL {
            return Err(Error::Verification {
                what,
                residual,
                tol: TQ_TOL,
            });
        }
    }
    if rep.non_quadratic() == rep.expect_quadratic {
        return Err(Error::Verification {
            what: "quadratic defect of T_Q",
            residual: rep.quadratic_defect,
            tol: TQ_TOL,
        });
    }
    Ok(rep.ellipse)
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosednessReport {
    pub closed: bool,
    pub ellipse: EllipseParams,
    /// Matrix case: `max_alpha |h_ellipse - Re(<Tx,x> e^{-i alpha})|` over
    /// boundary witnesses. Grid case: smallest distance from the closure's
    /// support to the support attainable by vectors of the model.
    pub boundary_gap: f64,
    pub max_gap: f64,
    pub mesh_h: Option<f64>,
}

/// Finite dimensions: the top eigenvalue is always attained, so the
/// ellipse boundary is reached by eigenvector witnesses.
pub fn closedness_matrix(q: &Idempotent, n_angles: usize) -> Result<ClosednessReport> {
    let t = tq_operator(q)?;
    let ellipse = tq_ellipse_params(q.norm());
    let engine = SupportEngine::new(&t);
    let gaps: Vec<f64> = angles(n_angles)
        .par_iter()
        .map(|&a| {
            let (_, x) = engine.support_with_witness(a);
            let z = linalg::quadratic_form(&t, &x);
            (ellipse.support(a) - (z * C64::from_polar(1.0, -a)).re).abs()
        })
        .collect();
    let gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(ClosednessReport {
        closed: gap <= tol::INTERSECTION_GAP,
        ellipse,
        boundary_gap: gap,
        max_gap: gap,
        mesh_h: None,
    })
}

/// `T_{Q_r}` on a grid. The closure is the ellipse with `d` the right end of
/// the mesh; a continuum grid attains only cell-averaged supports, so the
/// gap stays positive and shrinks with the mesh.
pub fn closedness_grid(qr: &GridOperator, n_angles: usize) -> Result<ClosednessReport> {
    let t = qr.tq()?;
    let ellipse = tq_ellipse_params(2.0 * qr.d - 1.0);
    let gaps: Vec<f64> = angles(n_angles)
        .par_iter()
        .map(|&a| {
            let reach = if qr.continuum {
                t.witness_support(a)
            } else {
                t.support(a)
            };
            ellipse.support(a) - reach
        })
        .collect();
    let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let max = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ClosednessReport {
        closed: !qr.continuum && max.abs() <= tol::INTERSECTION_GAP,
        ellipse,
        boundary_gap: min,
        max_gap: max,
        mesh_h: Some(qr.mesh_h()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::distance_example;
    use crate::grid::make_qr;

    #[test]
    fn sqrt2_example() {
        let e = tq_ellipse_params(2f64.sqrt());
        assert!((e.b - 0.25).abs() < 1e-15);
        assert!((e.x0 - (3.0 + 2f64.sqrt()) / 4.0).abs() < 1e-15);
        assert!((e.a - 1.13152).abs() < 1e-5);
        let d = 0.5 * (1.0 + 2f64.sqrt());
        assert!(
            (e.support(0.0) - (0.5 * (d + 1.0) + 0.5 * (2.0 * d * d + d + 1.0).sqrt())).abs()
                < 1e-14
        );
    }

    #[test]
    fn corollary_at_three() {
        let e = corollary_ellipse(3.0);
        assert!((e.x0 - 1.5).abs() < 1e-15);
        assert!((e.a * e.a - 2.75).abs() < 1e-14 && (e.b * e.b - 0.5).abs() < 1e-14);
        let f = tq_ellipse_params(3.0);
        assert!(
            (e.a - f.a).abs() < 1e-14 && (e.b - f.b).abs() < 1e-14 && (e.x0 - f.x0).abs() < 1e-14
        );
    }

    #[test]
    fn example_matrix_ellipse() {
        let (q, _) = distance_example(1.0);
        let e = tq_ellipse(&q).unwrap();
        assert!((e.a - tq_ellipse_params(q.norm()).a).abs() < 1e-15);
        let rep = closedness_matrix(&q, 64).unwrap();
        assert!(rep.closed, "{}", rep.boundary_gap);
    }

    #[test]
    fn projection_rejected() {
        let q = Idempotent::validate(linalg::diag_real(&[1.0, 0.0])).unwrap();
        assert!(matches!(tq_operator(&q), Err(Error::IsProjection)));
    }

    #[test]
    fn grid_gap_shrinks() {
        let g1 = closedness_grid(&make_qr(3.0, 50).unwrap(), 64).unwrap();
        let g2 = closedness_grid(&make_qr(3.0, 200).unwrap(), 64).unwrap();
        assert!(!g1.closed && g1.boundary_gap > 0.0 && g2.boundary_gap > 0.0);
        assert!(g2.max_gap < g1.max_gap);
    }
}
