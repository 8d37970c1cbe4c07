//! Sampling falsifiers for the structure every regularizer here should have.
//! Components must be even and subadditive, and concave on the half line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Penalty;
use crate::error::{Error, Result};

const SUBADDITIVE_TOL: f64 = 1e-9;
const EVEN_TOL: f64 = 1e-12;
const CONCAVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    /// Number of random pairs (and evenness points).
    pub count: usize,
    /// Pairs are drawn uniformly from `[lo, hi]²`.
    pub lo: f64,
    pub hi: f64,
    /// Grid step for second differences on `[0, hi]`.
    pub concavity_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyWitness {
    pub check: &'static str,
    pub component: usize,
    pub x: f64,
    pub y: Option<f64>,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub even_ok: bool,
    pub subadditive_ok: bool,
    pub concave_on_positive_ok: bool,
    /// Largest measured excess over the tolerance of its check; `≤ 0` iff
    /// every check passed.
    pub worst_violation: f64,
    pub witness: Option<PropertyWitness>,
}

/// Component `i` for sample `k` cycles through all components.
pub fn check_properties<P: Penalty + ?Sized>(penalty: &P, spec: &SampleSpec, seed: u64) -> Result<PropertyReport> {
    if spec.count == 0 || !(spec.hi > spec.lo) || !(spec.concavity_step > 0.0) {
        return Err(Error::InvalidSpec(format!("invalid sample spec {spec:?}")));
    }
    let n = penalty.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport {
        even_ok: true,
        subadditive_ok: true,
        concave_on_positive_ok: true,
        worst_violation: f64::NEG_INFINITY,
        witness: None,
    };
    let record = |report: &mut PropertyReport, excess: f64, witness: PropertyWitness| {
        if excess > report.worst_violation {
            report.worst_violation = excess;
            if excess > 0.0 {
                report.witness = Some(witness);
            }
        }
    };

    for k in 0..spec.count {
        let i = k % n;
        let x = rng.random_range(spec.lo..=spec.hi);
        let y = rng.random_range(spec.lo..=spec.hi);
        let rx = penalty.component(i, x)?;
        let ry = penalty.component(i, y)?;
        let rxy = penalty.component(i, x + y)?;
        let excess = rxy - rx - ry - SUBADDITIVE_TOL;
        if excess > 0.0 {
            report.subadditive_ok = false;
        }
        record(
            &mut report,
            excess,
            PropertyWitness {
                check: "subadditive",
                component: i,
                x,
                y: Some(y),
                violation: rxy - rx - ry,
            },
        );

        let gap = (penalty.component(i, -x)? - rx).abs();
        let excess = gap - EVEN_TOL;
        if excess > 0.0 {
            report.even_ok = false;
        }
        record(
            &mut report,
            excess,
            PropertyWitness {
                check: "even",
                component: i,
                x,
                y: None,
                violation: gap,
            },
        );
    }

    let steps = (spec.hi.max(0.0) / spec.concavity_step).round() as usize;
    for i in 0..n {
        let values = (0..=steps)
            .map(|k| penalty.component(i, k as f64 * spec.concavity_step))
            .collect::<Result<Vec<_>>>()?;
        for k in 1..steps {
            let d2 = values[k - 1] - 2.0 * values[k] + values[k + 1];
            let excess = d2 - CONCAVE_TOL;
            if excess > 0.0 {
                report.concave_on_positive_ok = false;
            }
            record(
                &mut report,
                excess,
                PropertyWitness {
                    check: "concave",
                    component: i,
                    x: k as f64 * spec.concavity_step,
                    y: None,
                    violation: d2,
                },
            );
        }
    }
    Ok(report)
}
