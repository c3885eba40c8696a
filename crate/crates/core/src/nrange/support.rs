//! Support function `h(alpha) = lambda_max(Re(e^{-i alpha} T))` of the
//! numerical range, with witnesses and boundary tracing.

use rayon::prelude::*;
use serde::Serialize;

use crate::grid::{block_support, block_to_matrix, GridOperator};
use crate::linalg::{self, c, rotated_real_part, ComplexMatrix, ComplexVector, C64};

use super::ellipse::{ellipse_2x2, EllipseParams};

/// `m` equally spaced angles in `[0, 2 pi)`.
pub fn angles(m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| std::f64::consts::TAU * k as f64 / m as f64)
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportProfile {
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
    /// Boundary points `z_alpha` with `Re(z_alpha e^{-i alpha}) = h(alpha)`.
    #[serde(serialize_with = "serialize_points")]
    pub points: Vec<C64>,
    #[serde(skip)]
    pub witnesses: Option<Vec<ComplexVector>>,
}

fn serialize_points<S: serde::Serializer>(pts: &[C64], s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<[f64; 2]> = pts.iter().map(|z| [z.re, z.im]).collect();
    serde::Serialize::serialize(&v, s)
}

/// Dense support evaluation that first splits `T` into the connected
/// components of the sparsity pattern of `T + T*` (a permuted block
/// diagonal), then solves one Hermitian eigenproblem per component.
#[derive(Clone, Debug)]
pub struct SupportEngine {
    n: usize,
    components: Vec<(Vec<usize>, ComplexMatrix)>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl SupportEngine {
    pub fn new(t: &ComplexMatrix) -> Self {
        assert!(t.is_square(), "support of a non-square matrix");
        let n = t.nrows();
        let mut parent: Vec<usize> = (0..n).collect();
        for j in 0..n {
            for i in 0..n {
                if i != j && t[(i, j)] != c(0.0, 0.0) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = find(&mut parent, i);
            groups[r].push(i);
        }
        let components = groups
            .into_iter()
            .filter(|g| !g.is_empty())
            .map(|g| {
                let sub = t.select_rows(g.iter()).select_columns(g.iter());
                (g, sub)
            })
            .collect();
        SupportEngine { n, components }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// `h(alpha)` only.
    pub fn support(&self, alpha: f64) -> f64 {
        self.components
            .iter()
            .map(|(_, sub)| {
                let h = rotated_real_part(sub, alpha);
                if h.nrows() == 1 {
                    h[(0, 0)].re
                } else {
                    h.symmetric_eigenvalues().max()
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `h(alpha)` and a unit vector attaining it.
    pub fn support_with_witness(&self, alpha: f64) -> (f64, ComplexVector) {
        let mut best: Option<(f64, usize, ComplexVector)> = None;
        for (k, (_, sub)) in self.components.iter().enumerate() {
            let (v, x) = linalg::top_eigenpair(&rotated_real_part(sub, alpha))
                .expect("rotated real part is Hermitian");
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, k, x));
            }
        }
        let (v, k, x) = best.expect("non-empty matrix");
        let mut full = ComplexVector::zeros(self.n);
        for (pos, &i) in self.components[k].0.iter().enumerate() {
            full[i] = x[pos];
        }
        (v, full)
    }
}

/// Top eigenvalue of `Re(e^{-i alpha} T)` and its unit eigenvector.
pub fn support_function(t: &ComplexMatrix, alpha: f64) -> (f64, ComplexVector) {
    SupportEngine::new(t).support_with_witness(alpha)
}

/// Support values, witnesses and boundary points of `W(T)`.
pub fn matrix_profile(t: &ComplexMatrix, angles: &[f64]) -> SupportProfile {
    let engine = SupportEngine::new(t);
    let rows: Vec<(f64, ComplexVector)> = angles
        .par_iter()
        .map(|&a| engine.support_with_witness(a))
        .collect();
    let points = rows
        .iter()
        .map(|(_, x)| linalg::quadratic_form(t, x))
        .collect();
    SupportProfile {
        angles: angles.to_vec(),
        values: rows.iter().map(|r| r.0).collect(),
        points,
        witnesses: Some(rows.into_iter().map(|r| r.1).collect()),
    }
}

pub fn boundary_points(t: &ComplexMatrix, angles: &[f64]) -> Vec<C64> {
    matrix_profile(t, angles).points
}

/// Boundary point of the grid range in direction `alpha`, taken from the
/// summand (zero, scalar slot or block) that attains the support.
pub fn grid_boundary_point(f: &GridOperator, alpha: f64) -> C64 {
    let rot = C64::from_polar(1.0, -alpha);
    let mut best = (0.0, c(0.0, 0.0));
    let s = (rot * f.scalar_slot).re;
    if s > best.0 {
        best = (s, f.scalar_slot);
    }
    let i = f.support_argmax(alpha);
    if let Some(b) = f.blocks.get(i) {
        if block_support(b, alpha) > best.0 {
            let m = block_to_matrix(b);
            let (_, x) = linalg::top_eigenpair(&rotated_real_part(&m, alpha))
                .expect("rotated real part is Hermitian");
            best.1 = linalg::quadratic_form(&m, &x);
        }
    }
    best.1
}

pub fn grid_profile(f: &GridOperator, angles: &[f64]) -> SupportProfile {
    SupportProfile {
        angles: angles.to_vec(),
        values: angles.par_iter().map(|&a| f.support(a)).collect(),
        points: angles
            .par_iter()
            .map(|&a| grid_boundary_point(f, a))
            .collect(),
        witnesses: None,
    }
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Maximize `f` on `[lo, hi]`: dense scan, then golden-section refinement
/// around the best sample; endpoints are always candidates.
pub fn scan_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize, tol: f64) -> (f64, f64) {
    let step = (hi - lo) / samples as f64;
    let mut best = (lo, f(lo));
    for k in 1..=samples {
        let x = if k == samples {
            hi
        } else {
            lo + step * k as f64
        };
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let (a, b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let refined = golden_max(&f, a, b, tol);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

/// `w = max_alpha h(alpha)` for any support function.
pub fn numerical_radius(h: impl Fn(f64) -> f64) -> f64 {
    scan_max(h, 0.0, std::f64::consts::TAU, 360, 1e-12).1
}

/// `max_alpha (Re(z e^{-i alpha}) - h(alpha))`: positive iff `z` lies
/// outside the closed convex set with support `h`.
pub fn support_excess(h: impl Fn(f64) -> f64, z: C64) -> f64 {
    let g = |a: f64| (z * C64::from_polar(1.0, -a)).re - h(a);
    scan_max(g, 0.0, std::f64::consts::TAU, 720, 1e-12).1
}

#[derive(Clone, Debug, Serialize)]
pub struct OperatorRangeReport {
    pub angles: Vec<f64>,
    /// `max(0, Re(e^{-i alpha} scalar), max_t h_{W(f_t)}(alpha))` from ellipses.
    pub ellipse_profile: Vec<f64>,
    /// Support of the dense block-diagonal assembly.
    pub direct_profile: Vec<f64>,
    pub max_mismatch: f64,
}

/// Support of the grid operator's range computed two ways: per-block
/// elliptical ranges maximized over the mesh, and dense eigenvalues of the
/// assembled block-diagonal matrix.
pub fn operator_elliptical_range(f: &GridOperator, angles: &[f64]) -> OperatorRangeReport {
    let ellipses: Vec<EllipseParams> = f.blocks.iter().map(|b| ellipse_2x2(b).params()).collect();
    let ellipse_profile: Vec<f64> = angles
        .iter()
        .map(|&a| {
            let s = (C64::from_polar(1.0, -a) * f.scalar_slot).re;
            ellipses
                .iter()
                .map(|e| e.support(a))
                .fold(s.max(0.0), f64::max)
        })
        .collect();
    let engine = SupportEngine::new(&f.assemble());
    let direct_profile: Vec<f64> = angles.par_iter().map(|&a| engine.support(a)).collect();
    let max_mismatch = ellipse_profile
        .iter()
        .zip(&direct_profile)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    OperatorRangeReport {
        angles: angles.to_vec(),
        ellipse_profile,
        direct_profile,
        max_mismatch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_qr, GridOperator};
    use crate::linalg::{diag_real, from_real, identity};

    #[test]
    fn identity_and_nilpotent() {
        assert!((support_function(&identity(3), 0.0).0 - 1.0).abs() < 1e-15);
        let n = from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        for k in 0..16 {
            assert!((support_function(&n, k as f64 * 0.4).0 - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_support_is_kept() {
        let t = diag_real(&[-2.0, -3.0]);
        assert!((support_function(&t, 0.0).0 + 2.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_boundary_is_a_segment() {
        let pts = boundary_points(&diag_real(&[0.0, 1.0]), &angles(16));
        for z in pts {
            assert!(z.im.abs() < 1e-14 && z.re >= -1e-14 && z.re <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn engine_splits_block_diagonal() {
        let g = make_qr(3.0, 6).unwrap();
        let e = SupportEngine::new(&g.assemble());
        // scalar slot, zero summand, the diagonal block at t = 1 (two 1x1), six 2x2 blocks
        assert_eq!(e.component_count(), 2 + 2 + 6);
        let (v, x) = e.support_with_witness(0.3);
        let m = g.assemble();
        let z = linalg::quadratic_form(&m, &x);
        assert!(((z * C64::from_polar(1.0, -0.3)).re - v).abs() < 1e-13);
    }

    #[test]
    fn elliptical_range_agrees_on_qr() {
        let g = make_qr(2.5, 40).unwrap();
        let rep = operator_elliptical_range(&g, &angles(64));
        assert!(rep.max_mismatch < 1e-12);
        let single = GridOperator {
            mesh: vec![1.5],
            blocks: vec![g.blocks[20]],
            ..g.clone()
        };
        let rep = operator_elliptical_range(&single, &angles(32));
        assert!(rep.max_mismatch < 1e-12);
    }

    #[test]
    fn radius_and_excess() {
        let t = diag_real(&[1.0, -2.0]);
        let w = numerical_radius(|a| support_function(&t, a).0);
        assert!((w - 2.0).abs() < 1e-12);
        let h = |a: f64| support_function(&t, a).0;
        assert!(support_excess(h, c(0.5, 0.0)) < 0.0);
        assert!(support_excess(h, c(0.5, 0.1)) > 0.0);
    }
}
