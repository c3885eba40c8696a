//! Full pipeline over one idempotent: distances, canonical form, `T_Q` and
//! the consistency checks that tie them together.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::canonical::{canonical_form, invariant_subspaces, Dims};
use crate::distance::{
    min_distance_formula, monte_carlo_extremality, projection_at_distance, random_projection,
    sqp_from_projection, sqp_norm_formula,
};
use crate::error::Result;
use crate::grid::{universal_check, UniversalInput};
use crate::idempotent::Idempotent;
use crate::linalg::{self, identity, projector, spectral_norm, C64};
use crate::nrange::attain::attain;
use crate::nrange::ellipse::EllipseParams;
use crate::nrange::tq::{closedness_matrix, tq_operator, tq_report, TQ_TOL};

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub timings: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            samples: 1000,
            seed: 0,
            tol: 1e-9,
            timings: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputSummary {
    pub n: usize,
    pub rank: usize,
    pub norm: f64,
    pub defect: f64,
    pub is_projection: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceSummary {
    pub min_dist: f64,
    pub max_dist: f64,
    pub lambda_q: f64,
    pub mu_q: f64,
    pub smallest_seen: f64,
    pub largest_seen: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CanonicalSummary {
    pub dims: Dims,
    pub d_norm: f64,
    pub d_spectrum: Vec<f64>,
    /// Largest gap of the spectrum of `D` inside `[1, |D|]`.
    pub spectral_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TqSummary {
    pub ellipse: EllipseParams,
    pub norm: f64,
    pub numerical_radius: f64,
    pub quadratic_defect: f64,
    pub closed: bool,
}

/// `P = m(Q) + P_{H4}`: `|P - Q| = max(1, min)` while `|I - P - Q|` is the
/// maximum distance.
#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub p_minus_q: f64,
    pub i_minus_p_minus_q: f64,
    pub min_dist: f64,
    pub max_dist: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub input: InputSummary,
    pub distance: DistanceSummary,
    pub canonical: Option<CanonicalSummary>,
    pub tq: Option<TqSummary>,
    pub counterexample: Option<Counterexample>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<&'static str, f64>>,
}

impl AnalysisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Recorder {
    checks: Vec<Check>,
    timings: BTreeMap<&'static str, f64>,
    clock: Instant,
}

impl Recorder {
    fn check(&mut self, name: &'static str, residual: f64, tol: f64) {
        // NaN residuals fail
        let passed = residual <= tol;
        self.checks.push(Check {
            name,
            passed,
            residual,
            tol,
        });
    }

    fn flag(&mut self, name: &'static str, passed: bool, residual: f64, tol: f64) {
        self.checks.push(Check {
            name,
            passed,
            residual,
            tol,
        });
    }

    fn lap(&mut self, stage: &'static str) {
        self.timings
            .insert(stage, self.clock.elapsed().as_secs_f64());
        self.clock = Instant::now();
    }
}

pub const PROJECTION_TOL: f64 = 1e-9;
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
pub const INTERMEDIATE_TOL: f64 = 1e-6;
pub const SQP_TOL: f64 = 1e-10;
pub const CLOSED_GAP_TOL: f64 = 1e-8;
pub const ATTAIN_TOL: f64 = 1e-6;

pub fn analyze(q: &Idempotent, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let mut rec = Recorder {
        checks: Vec::new(),
        timings: BTreeMap::new(),
        clock: Instant::now(),
    };
    let n = q.n();
    let qm = q.matrix();
    let id = identity(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let m = q.matched_projection()?;
    rec.check(
        "matched-projection",
        spectral_norm(&(&m * &m - &m)).max(spectral_norm(&(&m - m.adjoint()))),
        PROJECTION_TOL,
    );
    rec.check(
        "matched-adjoint",
        spectral_norm(&(q.adjoint().matched_projection()? - &m)),
        PROJECTION_TOL,
    );
    rec.check(
        "matched-complement",
        spectral_norm(&(q.complement().matched_projection()? - (&id - &m))),
        PROJECTION_TOL,
    );
    rec.lap("matched");

    let min = min_distance_formula(q.norm());
    let max = 1.0 + min;
    rec.check(
        "min-distance",
        (spectral_norm(&(&m - qm)) - min).abs(),
        PROJECTION_TOL,
    );
    rec.check(
        "max-distance",
        (spectral_norm(&(&id - &m - qm)) - max).abs(),
        PROJECTION_TOL,
    );
    let ext = monte_carlo_extremality(q, opts.samples, opts.seed, opts.tol)?;
    rec.flag(
        "extremality",
        ext.violations == 0,
        (min - ext.smallest_seen)
            .max(ext.largest_seen - max)
            .max(0.0),
        opts.tol,
    );
    let p_r = q.range_projection()?;
    let lambda_q = spectral_norm(&(&p_r - qm));
    let mu_q = spectral_norm(&(&id - &p_r - qm));
    let a_norm = spectral_norm(&q.block_form().a);
    rec.check(
        "lambda-below-mu",
        (lambda_q - mu_q)
            .max((1.0 + a_norm * a_norm).sqrt() - mu_q)
            .max(0.0),
        opts.tol,
    );
    let alpha = min + (max - min) * rng.random::<f64>();
    let mut worst = 0.0f64;
    match projection_at_distance(q, alpha, INTERMEDIATE_TOL * 0.1) {
        Ok(p) => {
            worst = worst.max((spectral_norm(&(&p - qm)) - alpha).abs());
            let proj = spectral_norm(&(&p * &p - &p)).max(spectral_norm(&(&p - p.adjoint())));
            rec.check("intermediate-projection", proj, PROJECTION_TOL);
        }
        Err(_) => worst = f64::INFINITY,
    }
    rec.check("intermediate-value", worst, INTERMEDIATE_TOL);
    rec.lap("distance");

    let s = &id - qm - qm.adjoint() + (qm.adjoint() * qm).scale(2.0);
    let sqp = (0..5)
        .map(|_| linalg::fro(&(sqp_from_projection(qm, &random_projection(&mut rng, n)) - &s)))
        .fold(0.0, f64::max);
    rec.check("sqp-invariance", sqp, SQP_TOL);
    rec.check(
        "sqp-norm",
        (spectral_norm(&s) - sqp_norm_formula(a_norm)).abs(),
        PROJECTION_TOL,
    );
    rec.lap("sqp");

    let distance = DistanceSummary {
        min_dist: min,
        max_dist: max,
        lambda_q,
        mu_q,
        smallest_seen: ext.smallest_seen,
        largest_seen: ext.largest_seen,
        samples: ext.samples,
    };

    let (mut canonical, mut tq, mut counterexample) = (None, None, None);
    if !q.is_projection() {
        let cf = canonical_form(q)?;
        let rec_res = spectral_norm(&(cf.conjugate_back(&cf.q_blocks()?) - qm));
        rec.check(
            "canonical-reconstruction",
            rec_res,
            RECONSTRUCTION_TOL * q.norm(),
        );
        rec.check(
            "canonical-norm",
            (q.norm() - (2.0 * cf.d_norm() - 1.0).max(1.0)).abs(),
            PROJECTION_TOL,
        );
        let sub = invariant_subspaces(q)?;
        let (h1, h4, h5, h6) = sub.dims();
        let mismatch = h1.abs_diff(cf.dims.h1)
            + h4.abs_diff(cf.dims.h4)
            + h5.abs_diff(cf.dims.h5)
            + h6.abs_diff(cf.dims.h5);
        rec.check("canonical-dims", mismatch as f64, 0.0);
        rec.check(
            "matched-formula",
            spectral_norm(&(q.reconstruct_from_matched()? - qm)),
            RECONSTRUCTION_TOL,
        );
        let universal = universal_check(UniversalInput::Matrix(q))?;
        canonical = Some(CanonicalSummary {
            dims: cf.dims,
            d_norm: cf.d_norm(),
            d_spectrum: cf.d_spectrum(),
            spectral_gap: universal.max_gap,
        });
        rec.lap("canonical");

        let t_rep = tq_report(q)?;
        rec.check("tq-norm", t_rep.norm_residual(), TQ_TOL);
        rec.check("tq-radius", t_rep.radius_residual(), TQ_TOL);
        rec.check("tq-ellipse", t_rep.support_mismatch, TQ_TOL);
        rec.flag(
            "tq-non-quadratic",
            t_rep.non_quadratic() != t_rep.expect_quadratic,
            t_rep.quadratic_defect,
            TQ_TOL,
        );
        let closed = closedness_matrix(q, 128)?;
        rec.check("tq-closed", closed.boundary_gap, CLOSED_GAP_TOL);
        let t = tq_operator(q)?;
        let target = C64::new(t_rep.ellipse.x0, 0.5 * t_rep.ellipse.b);
        let attained = attain(&t, target, ATTAIN_TOL)
            .map(|x| (linalg::quadratic_form(&t, &x) - target).norm())
            .unwrap_or(f64::INFINITY);
        rec.check("tq-interior-attainment", attained, ATTAIN_TOL);
        tq = Some(TqSummary {
            ellipse: t_rep.ellipse,
            norm: t_rep.norm_t,
            numerical_radius: t_rep.radius,
            quadratic_defect: t_rep.quadratic_defect,
            closed: closed.closed,
        });
        rec.lap("tq");

        if h4 > 0 {
            let p = &m + projector(&sub.h4);
            let ce = Counterexample {
                p_minus_q: spectral_norm(&(&p - qm)),
                i_minus_p_minus_q: spectral_norm(&(&id - &p - qm)),
                min_dist: min,
                max_dist: max,
            };
            rec.check(
                "converse-counterexample",
                (ce.p_minus_q - min.max(1.0))
                    .abs()
                    .max((ce.i_minus_p_minus_q - max).abs()),
                PROJECTION_TOL,
            );
            counterexample = Some(ce);
        }
    }

    Ok(AnalysisReport {
        schema: crate::io::SCHEMA,
        input: InputSummary {
            n,
            rank: q.rank(),
            norm: q.norm(),
            defect: q.defect(),
            is_projection: q.is_projection(),
        },
        distance,
        canonical,
        tq,
        counterexample,
        checks: rec.checks,
        timings: opts.timings.then_some(rec.timings),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::distance_example;
    use crate::idempotent::random_idempotent;

    fn quick() -> AnalysisOptions {
        AnalysisOptions {
            samples: 100,
            ..Default::default()
        }
    }

    #[test]
    fn random_input_passes() {
        let q = random_idempotent(6, 2, 1.5, 3).unwrap();
        let rep = analyze(&q, &quick()).unwrap();
        let bad: Vec<_> = rep.failures().collect();
        assert!(bad.is_empty(), "{bad:?}");
        assert!(rep.timings.is_none());
    }

    #[test]
    fn example_counterexample() {
        let (q, _) = distance_example(1.0);
        let rep = analyze(&q, &quick()).unwrap();
        assert!(rep.all_passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        let ce = rep.counterexample.unwrap();
        assert!((ce.p_minus_q - 1.0).abs() < 1e-12);
        assert!(ce.p_minus_q > ce.min_dist);
    }

    #[test]
    fn projection_input() {
        let q = Idempotent::validate(linalg::diag_real(&[1.0, 0.0, 0.0])).unwrap();
        let rep = analyze(
            &q,
            &AnalysisOptions {
                timings: true,
                ..quick()
            },
        )
        .unwrap();
        assert!(rep.all_passed());
        assert!(rep.canonical.is_none() && rep.tq.is_none());
        assert!(rep.timings.is_some());
    }
}
