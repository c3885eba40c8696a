//! Sampled model of `C (+) 0 (+) M_2(C[1, d])`: a scalar slot, a zero
//! summand, and one 2x2 block `f_t` per mesh point `t` in `[1, d]`.

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::idempotent::Idempotent;
use crate::io;
use crate::linalg::{self, c, ell, ComplexMatrix, C64};

pub type Block = Matrix2<C64>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshSpacing {
    #[default]
    Uniform,
    Chebyshev,
}

impl std::str::FromStr for MeshSpacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(MeshSpacing::Uniform),
            "chebyshev" => Ok(MeshSpacing::Chebyshev),
            _ => Err(Error::Unknown {
                kind: "mesh spacing",
                name: s.to_string(),
            }),
        }
    }
}

/// `N + 1` points from 1 to `d` inclusive.
pub fn mesh(d: f64, n: usize, spacing: MeshSpacing) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            match spacing {
                MeshSpacing::Uniform => 1.0 + (d - 1.0) * s,
                MeshSpacing::Chebyshev => {
                    1.0 + (d - 1.0) * 0.5 * (1.0 - (std::f64::consts::PI * s).cos())
                }
            }
        })
        .collect();
    pts[0] = 1.0;
    pts[n] = d;
    pts
}

#[derive(Clone, Debug)]
pub struct GridOperator {
    pub d: f64,
    pub mesh: Vec<f64>,
    pub scalar_slot: C64,
    pub blocks: Vec<Block>,
    /// True for a multiplication operator on `L^2[1, d]` (no point spectrum
    /// inside the blocks); false for an honest finite matrix.
    pub continuum: bool,
}

fn check_r(r: f64, n: usize) -> Result<f64> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::BadParam(format!("r = {r} must exceed 1")));
    }
    if n < 2 {
        return Err(Error::BadParam(format!("mesh size {n} must be at least 2")));
    }
    Ok(0.5 * (r + 1.0))
}

/// Spectral norm of a 2x2 block.
pub fn block_norm(f: &Block) -> f64 {
    let fro2 = f.norm_squared();
    let det = f.determinant().norm();
    (0.5 * (fro2 + (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt())).sqrt()
}

/// Largest eigenvalue of the Hermitian matrix `Re(e^{-i alpha} f)`.
pub fn block_support(f: &Block, alpha: f64) -> f64 {
    let w = C64::from_polar(1.0, -alpha);
    let a = (w * f[(0, 0)]).re;
    let d = (w * f[(1, 1)]).re;
    let b = 0.5 * (w * f[(0, 1)] + (w * f[(1, 0)]).conj());
    0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt()
}

pub fn block_to_matrix(f: &Block) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[f[(0, 0)], f[(0, 1)], f[(1, 0)], f[(1, 1)]])
}

pub fn matrix_to_block(m: &ComplexMatrix) -> Block {
    Block::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

fn real_block(a: f64, b: f64, cc: f64, d: f64) -> Block {
    Block::new(c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0))
}

/// `[[D, -l(D)], [l(D), 1 - D]]` at a scalar value `D`.
pub fn idempotent_block(dv: f64) -> Block {
    let l = ell(dv);
    real_block(dv, -l, l, 1.0 - dv)
}

impl GridOperator {
    pub fn from_fn(
        d: f64,
        mesh: Vec<f64>,
        scalar_slot: C64,
        continuum: bool,
        f: impl Fn(f64) -> Block + Sync,
    ) -> Self {
        let blocks = mesh.par_iter().map(|&t| f(t)).collect();
        GridOperator {
            d,
            mesh,
            scalar_slot,
            blocks,
            continuum,
        }
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    /// Largest gap between consecutive mesh points.
    pub fn mesh_h(&self) -> f64 {
        self.mesh
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// `max(|scalar_slot|, max_t |f_t|)`.
    pub fn grid_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(block_norm)
            .fold(self.scalar_slot.norm(), f64::max)
    }

    /// Same mesh, blocks and scalar slot mapped pointwise.
    pub fn map(
        &self,
        scalar: impl Fn(C64) -> C64,
        f: impl Fn(&Block) -> Block + Sync + Send,
    ) -> Self {
        GridOperator {
            d: self.d,
            mesh: self.mesh.clone(),
            scalar_slot: scalar(self.scalar_slot),
            blocks: self.blocks.par_iter().map(f).collect(),
            continuum: self.continuum,
        }
    }

    /// Pointwise defect `max_t |f_t^2 - f_t|` together with the scalar slot.
    pub fn idempotency_defect(&self) -> f64 {
        let s = self.scalar_slot;
        self.blocks
            .iter()
            .map(|f| block_norm(&(f * f - f)))
            .fold((s * s - s).norm(), f64::max)
    }

    /// Matched projection applied to the scalar slot and to every block.
    pub fn matched(&self) -> Result<GridOperator> {
        let blocks: Result<Vec<Block>> = self
            .blocks
            .par_iter()
            .map(|f| {
                let q = Idempotent::validate(block_to_matrix(f))?;
                Ok(matrix_to_block(&q.matched_projection()?))
            })
            .collect();
        let s = self.scalar_slot;
        // A scalar idempotent is 0 or 1 and is its own matched projection.
        if (s * s - s).norm() > 1e-9 {
            return Err(Error::NotIdempotent {
                defect: (s * s - s).norm(),
                tol: 1e-9,
            });
        }
        Ok(GridOperator {
            blocks: blocks?,
            ..self.clone()
        })
    }

    /// `I - F`; the zero summand becomes an identity summand, which only
    /// contributes the eigenvalue 1 to every spectral test below and is
    /// therefore not stored.
    pub fn complement(&self) -> GridOperator {
        self.map(|s| c(1.0, 0.0) - s, |f| Block::identity() - f)
    }

    /// `T = m(F) + m(F) F` pointwise.
    pub fn tq(&self) -> Result<GridOperator> {
        let m = self.matched()?;
        let blocks = m
            .blocks
            .iter()
            .zip(&self.blocks)
            .map(|(mt, f)| mt + mt * f)
            .collect();
        let s = m.scalar_slot + m.scalar_slot * self.scalar_slot;
        Ok(GridOperator {
            scalar_slot: s,
            blocks,
            ..self.clone()
        })
    }

    /// `scalar (+) [0] (+) f_{t_0} (+) ... (+) f_{t_N}` as a dense matrix.
    pub fn assemble(&self) -> ComplexMatrix {
        let n = 2 + 2 * self.blocks.len();
        let mut m = ComplexMatrix::zeros(n, n);
        m[(0, 0)] = self.scalar_slot;
        for (i, f) in self.blocks.iter().enumerate() {
            let k = 2 + 2 * i;
            m.view_mut((k, k), (2, 2)).copy_from(&block_to_matrix(f));
        }
        m
    }

    /// Support of the numerical range: the zero summand, the scalar slot and
    /// the top eigenvalue of `Re(e^{-i alpha} f_t)` over the mesh.
    pub fn support(&self, alpha: f64) -> f64 {
        let s = (C64::from_polar(1.0, -alpha) * self.scalar_slot).re;
        self.blocks
            .iter()
            .map(|f| block_support(f, alpha))
            .fold(s.max(0.0), f64::max)
    }

    /// Support reachable by unit vectors of the continuum model: a vector
    /// of `L^2[1, d]` cannot concentrate on a single `t`, so each cell
    /// `[t_{i-1}, t_i]` contributes its averaged block.
    pub fn witness_support(&self, alpha: f64) -> f64 {
        let s = (C64::from_polar(1.0, -alpha) * self.scalar_slot).re;
        self.blocks
            .windows(2)
            .map(|w| block_support(&((w[0] + w[1]) * c(0.5, 0.0)), alpha))
            .fold(s.max(0.0), f64::max)
    }

    /// Mesh index attaining the block part of the support.
    pub fn support_argmax(&self, alpha: f64) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, f) in self.blocks.iter().enumerate() {
            let v = block_support(f, alpha);
            if v > best.1 {
                best = (i, v);
            }
        }
        best.0
    }
}

/// `Q_r = 1 (+) 0 (+) [[D0, -l(D0)], [l(D0), I - D0]]`, `D0(t) = t` on `[1, (r+1)/2]`.
pub fn make_qr(r: f64, n: usize) -> Result<GridOperator> {
    make_qr_with(r, n, MeshSpacing::Uniform)
}

pub fn make_qr_with(r: f64, n: usize, spacing: MeshSpacing) -> Result<GridOperator> {
    let d = check_r(r, n)?;
    Ok(GridOperator::from_fn(
        d,
        mesh(d, n, spacing),
        c(1.0, 0.0),
        true,
        idempotent_block,
    ))
}

/// `D1(t) = 1` on `[1, (d+1)/2]` and `2t - d` beyond.
pub fn d1(t: f64, d: f64) -> f64 {
    if t <= 0.5 * (d + 1.0) {
        1.0
    } else {
        2.0 * t - d
    }
}

/// The alternative universal idempotent built on `D1`.
pub fn make_q_r_alt(r: f64, n: usize) -> Result<GridOperator> {
    let d = check_r(r, n)?;
    Ok(GridOperator::from_fn(
        d,
        mesh(d, n, MeshSpacing::Uniform),
        c(1.0, 0.0),
        true,
        |t| idempotent_block(d1(t, d)),
    ))
}

/// The `S_r` block at `t`:
/// `[[t - (2d-1), sqrt((t-1)(d-t))], [0, (2d-1)(t-1)]]`.
pub fn sr_block(t: f64, d: f64) -> Block {
    real_block(
        t - (2.0 * d - 1.0),
        ((t - 1.0) * (d - t)).max(0.0).sqrt(),
        0.0,
        (2.0 * d - 1.0) * (t - 1.0),
    )
}

/// `S_r = 2(1 - d) (+) 0 (+) f(D0)`.
pub fn make_sr(r: f64, n: usize) -> Result<GridOperator> {
    make_sr_with(r, n, MeshSpacing::Uniform)
}

pub fn make_sr_with(r: f64, n: usize, spacing: MeshSpacing) -> Result<GridOperator> {
    let d = check_r(r, n)?;
    Ok(GridOperator::from_fn(
        d,
        mesh(d, n, spacing),
        c(2.0 * (1.0 - d), 0.0),
        true,
        |t| sr_block(t, d),
    ))
}

/// Membership test for `C*{Q_r}`: `f12(1) = f21(1) = f22(1) = 0` and
/// `scalar = f11(1)`. Vacuous when the mesh does not contain `t = 1`.
pub fn in_cstar_qr(f: &GridOperator, tol: f64) -> bool {
    let Some(i) = f.mesh.iter().position(|&t| (t - 1.0).abs() <= 1e-14) else {
        return true;
    };
    let b = &f.blocks[i];
    b[(0, 1)].norm() <= tol
        && b[(1, 0)].norm() <= tol
        && b[(1, 1)].norm() <= tol
        && (f.scalar_slot - b[(0, 0)]).norm() <= tol
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    UniversalWithinMesh,
    Inconclusive,
    NotUniversal,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniversalReport {
    pub verdict: Verdict,
    /// `d = (|Q| + 1)/2`.
    pub d: f64,
    /// Largest gap of the spectrum of `A = m Q m + I - m` inside `[1, d]`.
    pub max_gap: f64,
    pub mesh_h: Option<f64>,
    pub spectrum: Vec<f64>,
}

pub enum UniversalInput<'a> {
    Matrix(&'a Idempotent),
    Grid(&'a GridOperator),
}

fn largest_gap(spectrum: &[f64], d: f64) -> f64 {
    let mut pts: Vec<f64> = spectrum.iter().copied().filter(|x| x.is_finite()).collect();
    pts.push(1.0);
    pts.push(d);
    pts.sort_by(f64::total_cmp);
    pts.windows(2)
        .filter(|w| w[0] >= 1.0 - 1e-12 && w[1] <= d + 1e-12)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max)
}

fn a_operator(q: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    let n = q.nrows();
    linalg::hermitian_part(&(m * q * m + linalg::identity(n) - m))
}

/// Spectrum of `A = m(Q) Q m(Q) + I - m(Q)` against the interval `[1, d]`.
pub fn universal_check(input: UniversalInput) -> Result<UniversalReport> {
    match input {
        UniversalInput::Matrix(q) => {
            let m = q.matched_projection()?;
            let spectrum = linalg::herm_eigvals(&a_operator(q.matrix(), &m))?;
            let d = 0.5 * (q.norm() + 1.0);
            Ok(UniversalReport {
                verdict: Verdict::NotUniversal,
                d,
                max_gap: largest_gap(&spectrum, d),
                mesh_h: None,
                spectrum,
            })
        }
        UniversalInput::Grid(f) => {
            let m = f.matched()?;
            let mut spectrum = vec![1.0];
            for (mt, ft) in m.blocks.iter().zip(&f.blocks) {
                let a = a_operator(&block_to_matrix(ft), &block_to_matrix(mt));
                spectrum.extend(linalg::herm_eigvals(&a)?);
            }
            spectrum.sort_by(f64::total_cmp);
            let d = 0.5 * (f.grid_norm() + 1.0);
            let max_gap = largest_gap(&spectrum, d);
            let h = f.mesh_h();
            let verdict = if !f.continuum {
                Verdict::NotUniversal
            } else if max_gap <= 2.0 * h + 1e-12 {
                Verdict::UniversalWithinMesh
            } else if max_gap <= 0.1 * (d - 1.0) {
                Verdict::Inconclusive
            } else {
                Verdict::NotUniversal
            };
            Ok(UniversalReport {
                verdict,
                d,
                max_gap,
                mesh_h: Some(h),
                spectrum,
            })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplementReport {
    pub q: UniversalReport,
    pub complement: UniversalReport,
    /// Largest difference between the sorted spectra of `A` and `B`.
    pub spectrum_mismatch: f64,
    pub agree: bool,
}

/// Universality of `Q` and of `I - Q` must agree, and `B` (built from
/// `I - Q`) shares the spectrum of `A`.
pub fn complement_check(input: UniversalInput) -> Result<ComplementReport> {
    let (q, complement) = match input {
        UniversalInput::Matrix(q) => {
            let qc = q.complement();
            (
                universal_check(UniversalInput::Matrix(q))?,
                universal_check(UniversalInput::Matrix(&qc))?,
            )
        }
        UniversalInput::Grid(f) => {
            let fc = f.complement();
            (
                universal_check(UniversalInput::Grid(f))?,
                universal_check(UniversalInput::Grid(&fc))?,
            )
        }
    };
    let spectrum_mismatch = if q.spectrum.len() == complement.spectrum.len() {
        q.spectrum
            .iter()
            .zip(&complement.spectrum)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let agree = q.verdict == complement.verdict;
    Ok(ComplementReport {
        q,
        complement,
        spectrum_mismatch,
        agree,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DistinguishReport {
    pub mesh_points: usize,
    /// Mesh points where `l(D(t))`, read from the `(2,1)` entry, is below tol.
    pub kernel_first: usize,
    pub kernel_second: usize,
    pub distinguished: bool,
}

fn kernel_count(f: &GridOperator, tol: f64) -> usize {
    f.blocks.iter().filter(|b| b[(1, 0)].norm() <= tol).count()
}

/// Mesh-kernel sizes of `l(D)` for two idempotent grids; unitarily
/// equivalent models would have equal counts.
pub fn distinguish(first: &GridOperator, second: &GridOperator, tol: f64) -> DistinguishReport {
    let kernel_first = kernel_count(first, tol);
    let kernel_second = kernel_count(second, tol);
    DistinguishReport {
        mesh_points: first.len(),
        kernel_first,
        kernel_second,
        distinguished: kernel_first != kernel_second,
    }
}

impl Serialize for GridOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridJson {
            schema: io::SCHEMA,
            d: self.d,
            mesh: self.mesh.clone(),
            scalar_slot: [self.scalar_slot.re, self.scalar_slot.im],
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    [
                        [[b[(0, 0)].re, b[(0, 0)].im], [b[(0, 1)].re, b[(0, 1)].im]],
                        [[b[(1, 0)].re, b[(1, 0)].im], [b[(1, 1)].re, b[(1, 1)].im]],
                    ]
                })
                .collect(),
            continuum: self.continuum,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridOperator {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let g = GridJson::deserialize(de)?;
        if g.mesh.len() != g.blocks.len() {
            return Err(D::Error::custom("mesh and blocks differ in length"));
        }
        if g.mesh.windows(2).any(|w| w[1] <= w[0]) {
            return Err(D::Error::custom("mesh must be strictly ascending"));
        }
        let z = |p: [f64; 2]| c(p[0], p[1]);
        Ok(GridOperator {
            d: g.d,
            mesh: g.mesh,
            scalar_slot: z(g.scalar_slot),
            blocks: g
                .blocks
                .into_iter()
                .map(|b| Block::new(z(b[0][0]), z(b[0][1]), z(b[1][0]), z(b[1][1])))
                .collect(),
            continuum: g.continuum,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    #[serde(default)]
    schema: u32,
    d: f64,
    mesh: Vec<f64>,
    scalar_slot: [f64; 2],
    blocks: Vec<[[[f64; 2]; 2]; 2]>,
    #[serde(default)]
    continuum: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Block, b: &Block) -> f64 {
        (a - b).norm()
    }

    #[test]
    fn qr_blocks() {
        let g = make_qr(3.0, 10).unwrap();
        assert_eq!(g.d, 2.0);
        assert_eq!(g.grid_norm(), 3.0);
        assert!(close(&g.blocks[0], &real_block(1.0, 0.0, 0.0, 0.0)) == 0.0);
        let s = 2f64.sqrt();
        assert!(close(&g.blocks[10], &real_block(2.0, -s, s, -1.0)) < 1e-15);
        assert!(g.idempotency_defect() < 1e-14);
        assert!(make_qr(1.0, 10).is_err());
        assert!(make_qr(3.0, 1).is_err());
    }

    #[test]
    fn sr_blocks() {
        assert!(close(&sr_block(1.0, 2.0), &real_block(-2.0, 0.0, 0.0, 0.0)) == 0.0);
        assert!(close(&sr_block(2.0, 2.0), &real_block(-1.0, 0.0, 0.0, 3.0)) == 0.0);
        assert!(close(&sr_block(1.5, 2.0), &real_block(-1.5, 0.5, 0.0, 1.5)) < 1e-16);
        assert_eq!(make_sr(3.0, 4).unwrap().scalar_slot, c(-2.0, 0.0));
    }

    #[test]
    fn membership() {
        assert!(in_cstar_qr(&make_qr(3.0, 8).unwrap(), 1e-12));
        assert!(in_cstar_qr(&make_sr(3.0, 8).unwrap(), 1e-12));
        let id = make_qr(3.0, 8)
            .unwrap()
            .map(|_| c(1.0, 0.0), |_| Block::identity());
        assert!(!in_cstar_qr(&id, 1e-12));
        let inner = GridOperator::from_fn(2.0, vec![1.25, 1.5, 2.0], c(0.0, 0.0), true, |_| {
            Block::identity()
        });
        assert!(in_cstar_qr(&inner, 1e-12));
    }

    #[test]
    fn matched_grid() {
        let m = make_qr(3.0, 20).unwrap().matched().unwrap();
        let e11 = real_block(1.0, 0.0, 0.0, 0.0);
        assert!(m.blocks.iter().all(|b| close(b, &e11) < 1e-12));
        assert_eq!(m.scalar_slot, c(1.0, 0.0));
    }

    #[test]
    fn d1_values() {
        assert_eq!(d1(1.4, 2.0), 1.0);
        assert!((d1(1.8, 2.0) - 1.6).abs() < 1e-15);
    }

    #[test]
    fn universality_of_both_models() {
        let g = make_qr(3.0, 1000).unwrap();
        let rep = universal_check(UniversalInput::Grid(&g)).unwrap();
        assert_eq!(rep.verdict, Verdict::UniversalWithinMesh);
        assert!((rep.max_gap - 1e-3).abs() < 1e-12);
        let alt = make_q_r_alt(3.0, 1000).unwrap();
        let rep = universal_check(UniversalInput::Grid(&alt)).unwrap();
        assert_eq!(rep.verdict, Verdict::UniversalWithinMesh);
        let cmp = complement_check(UniversalInput::Grid(&g)).unwrap();
        assert!(cmp.agree && cmp.spectrum_mismatch < 1e-12);
    }

    #[test]
    fn kernel_counts() {
        let rep = distinguish(
            &make_qr(3.0, 100).unwrap(),
            &make_q_r_alt(3.0, 100).unwrap(),
            1e-12,
        );
        assert_eq!(rep.kernel_first, 1);
        assert!(rep.kernel_second >= 50);
        assert!(rep.distinguished);
    }

    #[test]
    fn json_roundtrip() {
        let g = make_sr(2.0, 5).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: GridOperator = serde_json::from_str(&text).unwrap();
        assert_eq!(back.mesh.len(), 6);
        assert!((back.blocks[3] - g.blocks[3]).norm() < 1e-15);
    }
}
