//! Constructive interior attainment: a unit `x` with `<Tx, x> = z` for a
//! target `z` inside the numerical range.

use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix, ComplexVector, C64};

use super::support::SupportEngine;

/// Given `x`, `y` with real values `p = <Tx,x> > 0 > q = <Ty,y>`, returns a
/// unit vector in their span with `<Tv, v> = 0`.
fn combine_real(
    t: &ComplexMatrix,
    x: &ComplexVector,
    y: &ComplexVector,
    p: f64,
    q: f64,
) -> ComplexVector {
    let beta = x.dotc(&(t * y));
    let gamma = y.dotc(&(t * x));
    let diff = beta - gamma.conj();
    let theta = if diff.norm() > 0.0 { -diff.arg() } else { 0.0 };
    let e = C64::from_polar(1.0, theta);
    let cross = (e * beta + e.conj() * gamma).re;
    // q s^2 + cross s + p = 0 has exactly one positive root since p q < 0
    let disc = (cross * cross - 4.0 * p * q).sqrt();
    let s = if cross >= 0.0 {
        -(cross + disc) / (2.0 * q)
    } else {
        2.0 * p / (disc - cross)
    };
    let v = x + y * (e * s);
    let n = v.norm();
    v / c(n, 0.0)
}

/// Unit vector with `<Tv, v> = w` where `w` lies on the open segment
/// between `<Tx,x>` and `<Ty,y>`.
fn on_segment(t: &ComplexMatrix, x: &ComplexVector, y: &ComplexVector, w: C64) -> ComplexVector {
    let (a, b) = (linalg::quadratic_form(t, x), linalg::quadratic_form(t, y));
    let rot = C64::from_polar(1.0, -(b - a).arg());
    let shifted = (t - ComplexMatrix::identity(t.nrows(), t.ncols()) * w) * rot;
    let (p, q) = (((a - w) * rot).re, ((b - w) * rot).re);
    if p >= 0.0 {
        return x.clone();
    }
    if q <= 0.0 {
        return y.clone();
    }
    combine_real(&shifted, y, x, q, p)
}

/// Crossing of the ray `{s > 0} * dir` with a closed polygon containing 0:
/// returns the edge index and the crossing point.
fn ray_crossing(poly: &[C64], dir: C64) -> Option<(usize, C64)> {
    let k = poly.len();
    let rot = dir.conj() / dir.norm();
    let mut best: Option<(usize, C64, f64)> = None;
    for j in 0..k {
        let (a, b) = (poly[j] * rot, poly[(j + 1) % k] * rot);
        if (a.im > 0.0 && b.im > 0.0) || (a.im < 0.0 && b.im < 0.0) {
            continue;
        }
        // an edge lying on the line contributes its endpoints
        let params: &[f64] = if a.im == b.im {
            &[0.0, 1.0]
        } else {
            &[a.im / (a.im - b.im)]
        };
        for &s in params {
            let x = a.re + s * (b.re - a.re);
            if x > 0.0 && best.as_ref().is_none_or(|bst| x > bst.2) {
                let p = poly[j] + (poly[(j + 1) % k] - poly[j]) * s;
                best = Some((j, p, x));
            }
        }
    }
    best.map(|(j, p, _)| (j, p))
}

/// Finds a unit `x` with `|<Tx, x> - z| <= tol`. Boundary witnesses at a
/// doubling number of directions span an inscribed polygon; once it
/// contains `z`, exact 2-vector combinations reach a point on each side of
/// `z` along one line and then `z` itself.
pub fn attain(t: &ComplexMatrix, z: C64, tol: f64) -> Result<ComplexVector> {
    let n = t.nrows();
    let shifted = t - ComplexMatrix::identity(n, n) * z;
    let engine = SupportEngine::new(&shifted);
    let mut m = 8;
    while m <= 4096 {
        let mut pts = Vec::with_capacity(m);
        let mut wit = Vec::with_capacity(m);
        for k in 0..m {
            let alpha = std::f64::consts::TAU * k as f64 / m as f64;
            let (_, x) = engine.support_with_witness(alpha);
            pts.push(linalg::quadratic_form(&shifted, &x));
            wit.push(x);
        }
        if let Some(v) = try_polygon(&shifted, &pts, &wit) {
            let got = linalg::quadratic_form(t, &v);
            if (got - z).norm() <= tol {
                return Ok(v);
            }
        }
        m *= 2;
    }
    Err(Error::NoConvergence("interior attainment"))
}

fn try_polygon(t: &ComplexMatrix, pts: &[C64], wit: &[ComplexVector]) -> Option<ComplexVector> {
    if let Some(j) = pts.iter().position(|p| p.norm() == 0.0) {
        return Some(wit[j].clone());
    }
    // a direction through a polygon vertex keeps the line generic
    let dir = pts
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let k = pts.len();
    let (j1, p1) = ray_crossing(pts, dir)?;
    let (j2, p2) = ray_crossing(pts, -dir)?;
    let v1 = on_segment(t, &wit[j1], &wit[(j1 + 1) % k], p1);
    let v2 = on_segment(t, &wit[j2], &wit[(j2 + 1) % k], p2);
    let rot = dir.conj() / dir.norm();
    let tr = t * rot;
    let (r1, r2) = (
        (linalg::quadratic_form(&tr, &v1)).re,
        (linalg::quadratic_form(&tr, &v2)).re,
    );
    if !(r1 > 0.0 && r2 < 0.0) {
        return None;
    }
    // the imaginary parts are zero up to rounding; absorb them into the line
    Some(combine_real(&tr, &v1, &v2, r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, from_real, gaussian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_segment() {
        let t = diag_real(&[0.0, 1.0, 3.0]);
        let x = attain(&t, c(0.7, 0.0), 1e-12).unwrap();
        assert!((x.norm() - 1.0).abs() < 1e-12);
        assert!((linalg::quadratic_form(&t, &x) - c(0.7, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn nilpotent_disk() {
        let t = from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        for z in [c(0.0, 0.0), c(0.2, -0.3), c(-0.45, 0.1)] {
            let x = attain(&t, z, 1e-12).unwrap();
            assert!((linalg::quadratic_form(&t, &x) - z).norm() < 1e-12, "{z}");
        }
    }

    #[test]
    fn random_interior_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let t = gaussian(&mut rng, 6, 6);
            // centroid of the trace is always interior for non-normal T
            let z = t.trace() / c(6.0, 0.0);
            let x = attain(&t, z, 1e-10).unwrap();
            assert!((linalg::quadratic_form(&t, &x) - z).norm() < 1e-10);
        }
    }

    #[test]
    fn outside_target_fails() {
        let t = diag_real(&[0.0, 1.0]);
        assert!(attain(&t, c(2.0, 0.0), 1e-9).is_err());
    }
}
