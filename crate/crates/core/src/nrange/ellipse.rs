//! Elliptical disks: support functions, boundary points, the 2x2
//! elliptical range and a symmetric least-squares fit.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::grid::Block;
use crate::linalg::{c, C64};

/// `(x - x0)^2 / a^2 + (y - y0)^2 / b^2 <= 1` after rotating by `-phi`
/// about the center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EllipseParams {
    pub x0: f64,
    pub y0: f64,
    pub a: f64,
    pub b: f64,
    /// Direction of the `a` axis; 0 for axis-aligned ellipses.
    pub phi: f64,
    pub degenerate: bool,
}

impl EllipseParams {
    pub fn aligned(x0: f64, y0: f64, a: f64, b: f64) -> Self {
        EllipseParams {
            x0,
            y0,
            a,
            b,
            phi: 0.0,
            degenerate: a * b == 0.0,
        }
    }

    pub fn center(&self) -> C64 {
        c(self.x0, self.y0)
    }

    fn radial(&self, beta: f64) -> f64 {
        let (s, co) = beta.sin_cos();
        (self.a * self.a * co * co + self.b * self.b * s * s).sqrt()
    }

    /// `x0 cos(alpha) + y0 sin(alpha) + sqrt(a^2 cos^2 + b^2 sin^2)` in the
    /// frame of the `a` axis.
    pub fn support(&self, alpha: f64) -> f64 {
        let (s, co) = alpha.sin_cos();
        self.x0 * co + self.y0 * s + self.radial(alpha - self.phi)
    }

    /// The boundary point where the support in direction `alpha` is attained:
    /// `z = center + (a^2 cos + i b^2 sin) / sqrt(a^2 cos^2 + b^2 sin^2)`.
    pub fn boundary_point(&self, alpha: f64) -> C64 {
        let beta = alpha - self.phi;
        let r = self.radial(beta);
        if r == 0.0 {
            return self.center();
        }
        let (s, co) = beta.sin_cos();
        let local = c(self.a * self.a * co / r, self.b * self.b * s / r);
        self.center() + local * C64::from_polar(1.0, self.phi)
    }
}

/// Elliptical range of a 2x2 matrix: foci at the eigenvalues, minor axis
/// `sqrt(tr(M*M) - |l1|^2 - |l2|^2)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FocalEllipse {
    #[serde(with = "crate::io::complex")]
    pub focus1: C64,
    #[serde(with = "crate::io::complex")]
    pub focus2: C64,
    pub minor_axis: f64,
}

impl FocalEllipse {
    pub fn params(&self) -> EllipseParams {
        let center = 0.5 * (self.focus1 + self.focus2);
        let half_focal = 0.5 * (self.focus2 - self.focus1).norm();
        let b = 0.5 * self.minor_axis;
        let a = (b * b + half_focal * half_focal).sqrt();
        let phi = if half_focal > 0.0 {
            (self.focus2 - self.focus1).arg()
        } else {
            0.0
        };
        EllipseParams {
            x0: center.re,
            y0: center.im,
            a,
            b,
            phi,
            degenerate: a * b == 0.0,
        }
    }
}

pub fn ellipse_2x2(m: &Block) -> FocalEllipse {
    let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let root = (half_tr * half_tr - det).sqrt();
    let (l1, l2) = (half_tr - root, half_tr + root);
    let minor2 = m.norm_squared() - l1.norm_sqr() - l2.norm_sqr();
    FocalEllipse {
        focus1: l1,
        focus2: l2,
        minor_axis: minor2.max(0.0).sqrt(),
    }
}

/// Least-squares fit of `x0 cos + sqrt(a^2 cos^2 + b^2 sin^2)` (center on
/// the real axis, axis-aligned) to support samples, by Gauss-Newton.
pub fn fit_symmetric_ellipse(samples: &[(f64, f64)]) -> EllipseParams {
    let at = |alpha: f64| {
        samples
            .iter()
            .min_by(|x, y| (x.0 - alpha).abs().total_cmp(&(y.0 - alpha).abs()))
            .map_or(0.0, |s| s.1)
    };
    let (h0, hpi) = (at(0.0), at(std::f64::consts::PI));
    let mut p = Vector3::new(
        0.5 * (h0 - hpi),
        0.5 * (h0 + hpi),
        at(std::f64::consts::FRAC_PI_2),
    );
    for _ in 0..100 {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for &(alpha, h) in samples {
            let (s, co) = alpha.sin_cos();
            let rad = (p[1] * p[1] * co * co + p[2] * p[2] * s * s)
                .sqrt()
                .max(1e-300);
            let resid = p[0] * co + rad - h;
            let j = Vector3::new(co, p[1] * co * co / rad, p[2] * s * s / rad);
            jtj += j * j.transpose();
            jtr += j * resid;
        }
        let Some(step) = (jtj + Matrix3::identity() * 1e-14)
            .try_inverse()
            .map(|m| m * jtr)
        else {
            break;
        };
        p -= step;
        if step.norm() < 1e-15 * (1.0 + p.norm()) {
            break;
        }
    }
    EllipseParams::aligned(p[0], 0.0, p[1].abs(), p[2].abs())
}
