use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::regularizers::{Penalty, Regularizer};
use crate::solvers::SensingProblem;
use crate::sparsity::tail_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Independent `N(0, 1/m)` entries.
    #[default]
    GaussianIid,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TruthModel {
    #[default]
    ExactSparse,
    /// Exact sparse plus a dense perturbation off the support whose tail
    /// mass is `eps_mass`.
    GeneralizedSparse { eps_mass: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "K_true")]
    pub k_true: usize,
    #[serde(default)]
    pub ensemble: Ensemble,
    #[serde(default)]
    pub truth_model: TruthModel,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn exact(m: usize, n: usize, k_true: usize, seed: u64) -> Self {
        ProblemSpec {
            m,
            n,
            k_true,
            ensemble: Ensemble::GaussianIid,
            truth_model: TruthModel::ExactSparse,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || !(self.k_true <= self.m && self.m <= self.n) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < m and K_true ≤ m ≤ n, got m = {}, n = {}, K_true = {}",
                self.m, self.n, self.k_true
            )));
        }
        if let TruthModel::GeneralizedSparse { eps_mass } = self.truth_model {
            if !(eps_mass >= 0.0 && eps_mass.is_finite()) {
                return Err(Error::InvalidSpec(format!("eps_mass must be finite and ≥ 0, got {eps_mass}")));
            }
            if self.k_true == self.n && eps_mass > 0.0 {
                return Err(Error::InvalidSpec("no off-support entries to perturb".into()));
            }
        }
        Ok(())
    }
}

const STREAM_MATRIX: u64 = 0;
const STREAM_TRUTH: u64 = 1;
const STREAM_PERTURBATION: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Tail mass measured with the unit ℓ1 norm.
pub fn generate_problem(spec: &ProblemSpec) -> Result<SensingProblem> {
    generate_problem_with(spec, &Regularizer::l1_norm(spec.n)?)
}

/// Like [`generate_problem`], with the tail mass of a generalized-sparse
/// truth measured by `penalty`.
pub fn generate_problem_with<P: Penalty + ?Sized>(spec: &ProblemSpec, penalty: &P) -> Result<SensingProblem> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let scale = 1.0 / (m as f64).sqrt();
    let mut r = rng(spec.seed, STREAM_MATRIX);
    let a = Matrix::from_fn(m, n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut r);
        z * scale
    });

    let mut r = rng(spec.seed, STREAM_TRUTH);
    let mut support = index::sample(&mut r, n, spec.k_true).into_vec();
    support.sort_unstable();
    let mut truth = Vector::zeros(n);
    for &i in &support {
        truth[i] = StandardNormal.sample(&mut r);
    }

    if let TruthModel::GeneralizedSparse { eps_mass } = spec.truth_model {
        penalty.check_len(n)?;
        let mut r = rng(spec.seed, STREAM_PERTURBATION);
        let mut on_support = vec![false; n];
        support.iter().for_each(|&i| on_support[i] = true);
        let direction: Vec<f64> = (0..n)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut r);
                if on_support[i] {
                    0.0
                } else {
                    z
                }
            })
            .collect();
        truth = perturb(penalty, &truth, &direction, spec.k_true, eps_mass)?;
    }
    let y = &a * &truth;
    SensingProblem::new(a, y)?.with_ground_truth(truth)
}

/// `base + s·direction` with `s` chosen by bisection so the tail is `target`.
fn perturb<P: Penalty + ?Sized>(penalty: &P, base: &Vector, direction: &[f64], k: usize, target: f64) -> Result<Vector> {
    let at = |s: f64| -> Vector { Vector::from_fn(base.len(), |i, _| base[i] + s * direction[i]) };
    let tail = |s: f64| -> Result<f64> { Ok(tail_value(penalty, at(s).as_slice(), k)?.value) };
    if target == 0.0 {
        return Ok(base.clone());
    }
    let mut hi = 1.0;
    while tail(hi)? < target {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::InvalidSpec(format!("tail mass {target} is unreachable")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(hi))
}
