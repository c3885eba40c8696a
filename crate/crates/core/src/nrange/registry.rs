//! Named numerical-range models behind one trait, looked up by name.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{make_qr, make_sr, GridOperator};
use crate::linalg::{ComplexMatrix, C64};

use super::ellipse::ellipse_2x2;
use super::sr::{sr_diagnostics, sr_support_exact};
use super::support::{grid_boundary_point, numerical_radius, SupportEngine};
use super::tq::corollary_ellipse;
use crate::grid::matrix_to_block;

pub trait RangeModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn support(&self, alpha: f64) -> f64;
    fn boundary_point(&self, alpha: f64) -> C64;
    /// Metadata emitted ahead of the polyline.
    fn header(&self) -> Result<Value>;
    /// Optional reference value per angle (an exact support, say).
    fn exact(&self, _alpha: f64) -> Option<f64> {
        None
    }
}

pub struct ProfileRow {
    pub alpha: f64,
    pub h: f64,
    pub point: C64,
    pub exact: Option<f64>,
}

pub fn profile(model: &dyn RangeModel, angles: &[f64]) -> Vec<ProfileRow> {
    angles
        .par_iter()
        .map(|&alpha| ProfileRow {
            alpha,
            h: model.support(alpha),
            point: model.boundary_point(alpha),
            exact: model.exact(alpha),
        })
        .collect()
}

pub struct MatrixModel {
    t: ComplexMatrix,
    engine: SupportEngine,
}

impl MatrixModel {
    pub fn new(t: ComplexMatrix) -> Self {
        let engine = SupportEngine::new(&t);
        MatrixModel { t, engine }
    }
}

impl RangeModel for MatrixModel {
    fn name(&self) -> &'static str {
        "matrix"
    }

    fn support(&self, alpha: f64) -> f64 {
        self.engine.support(alpha)
    }

    fn boundary_point(&self, alpha: f64) -> C64 {
        let (_, x) = self.engine.support_with_witness(alpha);
        crate::linalg::quadratic_form(&self.t, &x)
    }

    fn header(&self) -> Result<Value> {
        let mut h = json!({
            "model": self.name(),
            "n": self.t.nrows(),
            "numerical_radius": numerical_radius(|a| self.engine.support(a)),
        });
        if self.t.nrows() == 2 {
            h["ellipse"] = serde_json::to_value(ellipse_2x2(&matrix_to_block(&self.t)).params())?;
        }
        Ok(h)
    }
}

/// `T_{Q_r}` sampled on a grid.
pub struct TqQrModel {
    r: f64,
    t: GridOperator,
}

impl TqQrModel {
    pub fn new(r: f64, mesh: usize) -> Result<Self> {
        Ok(TqQrModel {
            r,
            t: make_qr(r, mesh)?.tq()?,
        })
    }
}

impl RangeModel for TqQrModel {
    fn name(&self) -> &'static str {
        "tq-qr"
    }

    fn support(&self, alpha: f64) -> f64 {
        self.t.support(alpha)
    }

    fn boundary_point(&self, alpha: f64) -> C64 {
        grid_boundary_point(&self.t, alpha)
    }

    fn header(&self) -> Result<Value> {
        Ok(json!({
            "model": self.name(),
            "r": self.r,
            "mesh": self.t.len() - 1,
            "mesh_h": self.t.mesh_h(),
            "ellipse": serde_json::to_value(corollary_ellipse(self.r))?,
            "closed": false,
        }))
    }
}

/// `S_r` sampled on a grid, with the exact support alongside.
pub struct SrModel {
    r: f64,
    mesh: usize,
    grid: GridOperator,
}

impl SrModel {
    pub fn new(r: f64, mesh: usize) -> Result<Self> {
        Ok(SrModel {
            r,
            mesh,
            grid: make_sr(r, mesh)?,
        })
    }
}

impl RangeModel for SrModel {
    fn name(&self) -> &'static str {
        "sr"
    }

    fn support(&self, alpha: f64) -> f64 {
        self.grid.support(alpha)
    }

    fn boundary_point(&self, alpha: f64) -> C64 {
        grid_boundary_point(&self.grid, alpha)
    }

    fn header(&self) -> Result<Value> {
        let diag = sr_diagnostics(self.r, self.mesh, 256)?;
        Ok(json!({
            "model": self.name(),
            "r": self.r,
            "mesh": self.mesh,
            "mesh_h": diag.mesh_h,
            "fit_residual": diag.fit_residual,
            "nonellipse_floor": diag.nonellipse_floor,
            "not_ellipse": diag.not_ellipse(),
            "diagnostics": serde_json::to_value(&diag)?,
        }))
    }

    fn exact(&self, alpha: f64) -> Option<f64> {
        sr_support_exact(self.r, alpha).ok()
    }
}

/// Parameters shared by the registered models.
#[derive(Clone, Debug, Default)]
pub struct ModelParams {
    pub matrix: Option<ComplexMatrix>,
    pub r: Option<f64>,
    pub mesh: usize,
}

type Builder = fn(&ModelParams) -> Result<Box<dyn RangeModel>>;

const REGISTRY: &[(&str, Builder)] = &[
    ("matrix", |p| {
        let t = p
            .matrix
            .clone()
            .ok_or_else(|| Error::BadParam("matrix model needs a matrix".into()))?;
        if !t.is_square() {
            return Err(Error::BadDims(format!(
                "{}x{} is not square",
                t.nrows(),
                t.ncols()
            )));
        }
        Ok(Box::new(MatrixModel::new(t)))
    }),
    ("tq-qr", |p| {
        Ok(Box::new(TqQrModel::new(need_r(p)?, p.mesh)?))
    }),
    ("sr", |p| Ok(Box::new(SrModel::new(need_r(p)?, p.mesh)?))),
];

fn need_r(p: &ModelParams) -> Result<f64> {
    p.r.ok_or_else(|| Error::BadParam("model needs r".into()))
}

pub fn model_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn build(name: &str, params: &ModelParams) -> Result<Box<dyn RangeModel>> {
    let (_, b) = REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Unknown {
            kind: "range model",
            name: name.to_string(),
        })?;
    b(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;
    use crate::nrange::support::angles;

    #[test]
    fn lookup() {
        assert_eq!(model_names(), ["matrix", "tq-qr", "sr"]);
        assert!(matches!(
            build("nope", &ModelParams::default()),
            Err(Error::Unknown { .. })
        ));
        assert!(build("sr", &ModelParams::default()).is_err());
    }

    #[test]
    fn segment_model() {
        let p = ModelParams {
            matrix: Some(diag_real(&[0.0, 1.0])),
            ..Default::default()
        };
        let m = build("matrix", &p).unwrap();
        for row in profile(m.as_ref(), &angles(16)) {
            assert!(row.point.im.abs() < 1e-14);
            assert!((row.h - (row.point * C64::from_polar(1.0, -row.alpha)).re).abs() < 1e-14);
        }
        assert_eq!(m.header().unwrap()["ellipse"]["degenerate"], true);
    }

    #[test]
    fn qr_header_center() {
        let p = ModelParams {
            r: Some(3.0),
            mesh: 100,
            ..Default::default()
        };
        let h = build("tq-qr", &p).unwrap().header().unwrap();
        assert!((h["ellipse"]["x0"].as_f64().unwrap() - 1.5).abs() < 1e-15);
    }
}
