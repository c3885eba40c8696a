//! The non-elliptical probe `S_r`: exact support, endpoint regimes, the
//! ellipse-fit residual and the neither-closed-nor-open evidence.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::make_sr;

use super::ellipse::{fit_symmetric_ellipse, EllipseParams};
use super::support::{angles, scan_max};

pub const SR_TOL: f64 = 1e-10;

fn check(r: f64) -> Result<f64> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::BadParam(format!("r = {r} must exceed 1")));
    }
    Ok(0.5 * (r + 1.0))
}

/// Support of `W(f_t)` for the `S_r` block:
/// `(dt - 2d + 1) cos + sqrt((t-1)(d-t) + [2(d-1) t cos]^2) / 2`.
pub fn sr_per_t(t: f64, d: f64, alpha: f64) -> f64 {
    let co = alpha.cos();
    let w = 2.0 * (d - 1.0) * t * co;
    (d * t - 2.0 * d + 1.0) * co + 0.5 * (((t - 1.0) * (d - t)).max(0.0) + w * w).sqrt()
}

/// `max_{t in [1, d]}` of [`sr_per_t`] and the maximizing `t`.
pub fn sr_support_argmax(r: f64, alpha: f64) -> Result<(f64, f64)> {
    let d = check(r)?;
    Ok(scan_max(
        |t| sr_per_t(t, d, alpha),
        1.0,
        d,
        400,
        SR_TOL * (d - 1.0),
    ))
}

pub fn sr_support_exact(r: f64, alpha: f64) -> Result<f64> {
    Ok(sr_support_argmax(r, alpha)?.1)
}

/// `cos(alpha)` at or above which the maximum sits at `t = d`.
pub fn regime_a_threshold(d: f64) -> f64 {
    2f64.sqrt() / (4.0 * (d * (2.0 * d - 1.0)).sqrt())
}

/// `cos(alpha)` at or below which the maximum sits at `t = 1`.
pub const REGIME_B_THRESHOLD: f64 = -0.353_553_390_593_273_8;

#[derive(Clone, Debug, Serialize)]
pub struct SrDiagnostics {
    pub r: f64,
    pub d: f64,
    pub mesh: usize,
    pub mesh_h: f64,
    pub alpha1: f64,
    /// Regime (a): largest deviation from `(2d-1)(d-1) cos` and from `t = d`.
    pub regime_a_value_err: f64,
    pub regime_a_argmax_err: f64,
    /// Regime (b): largest deviation from `2(1-d) cos` and from `t = 1`.
    pub regime_b_value_err: f64,
    pub regime_b_argmax_err: f64,
    pub fit: EllipseParams,
    pub fit_residual: f64,
    pub nonellipse_floor: f64,
    /// `s = (2d-1)(d-1)`, the rightmost point of the closure.
    pub s: f64,
    /// `s - (support reachable at alpha = 0)`; positive at every mesh.
    pub s_gap: f64,
    pub h_pi: f64,
    pub h_pi_err: f64,
    pub grid_mismatch: f64,
}

impl SrDiagnostics {
    pub fn not_ellipse(&self) -> bool {
        self.fit_residual > self.nonellipse_floor
    }

    pub fn regimes_hold(&self) -> bool {
        self.regime_a_value_err <= SR_TOL * (1.0 + self.s)
            && self.regime_b_value_err <= SR_TOL * (1.0 + self.s)
            && self.regime_a_argmax_err <= 1e-6 * (self.d - 1.0)
            && self.regime_b_argmax_err <= 1e-6 * (self.d - 1.0)
    }
}

pub fn sr_diagnostics(r: f64, n: usize, n_angles: usize) -> Result<SrDiagnostics> {
    let d = check(r)?;
    let grid = make_sr(r, n)?;
    let thr_a = regime_a_threshold(d);
    let alpha1 = thr_a.acos();
    let sweep = angles(n_angles);
    let exact: Vec<(f64, f64)> = sweep
        .par_iter()
        .map(|&a| sr_support_argmax(r, a))
        .collect::<Result<_>>()?;

    let (mut a_val, mut a_arg, mut b_val, mut b_arg) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (&alpha, &(t, h)) in sweep.iter().zip(&exact) {
        let co = alpha.cos();
        if co >= thr_a {
            a_val = a_val.max((h - (2.0 * d - 1.0) * (d - 1.0) * co).abs());
            a_arg = a_arg.max(d - t);
        } else if co <= REGIME_B_THRESHOLD {
            b_val = b_val.max((h - 2.0 * (1.0 - d) * co).abs());
            b_arg = b_arg.max(t - 1.0);
        }
    }

    let samples: Vec<(f64, f64)> = [0.0, FRAC_PI_2, PI, 0.5 * alpha1]
        .iter()
        .map(|&a| Ok((a, sr_support_exact(r, a)?)))
        .collect::<Result<_>>()?;
    let fit = fit_symmetric_ellipse(&samples);
    let fit_residual = sweep
        .iter()
        .zip(&exact)
        .map(|(&a, &(_, h))| (fit.support(a) - h).abs())
        .fold(0.0, f64::max);

    let grid_mismatch = sweep
        .par_iter()
        .zip(&exact)
        .map(|(&a, &(_, h))| (grid.support(a) - h).abs())
        .reduce(|| 0.0, f64::max);

    let s = (2.0 * d - 1.0) * (d - 1.0);
    let h_pi = sr_support_exact(r, PI)?;
    Ok(SrDiagnostics {
        r,
        d,
        mesh: n,
        mesh_h: grid.mesh_h(),
        alpha1,
        regime_a_value_err: a_val,
        regime_a_argmax_err: a_arg,
        regime_b_value_err: b_val,
        regime_b_argmax_err: b_arg,
        fit,
        fit_residual,
        nonellipse_floor: 1e-3 * (d - 1.0),
        s,
        s_gap: s - grid.witness_support(0.0),
        h_pi,
        h_pi_err: (h_pi - 2.0 * (d - 1.0)).abs(),
        grid_mismatch,
    })
}
