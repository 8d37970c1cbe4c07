use serde::{Deserialize, Serialize};

use super::{girls_loss, wls_step_jittered, SensingProblem};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::regularizers::Penalty;
use crate::sparsity::rearranged_value;

/// Which smoothing parameter the weight update sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightEpsilon {
    /// `w^{k+1}` from `ε_k`, the value before this iteration's update.
    #[default]
    Current,
    /// `w^{k+1}` from the freshly updated `ε_{k+1}`.
    Updated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GirlsConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub eps_bar: f64,
    pub max_iter: usize,
    /// Initial smoothing; the ambient dimension `n` when absent.
    pub eps0: Option<f64>,
    pub spd_jitter: f64,
    /// Stop once `‖c^{k+1} − c^k‖∞ ≤ stagnation_tol`; `0` disables.
    pub stagnation_tol: f64,
    pub record_trace: bool,
    pub weight_epsilon: WeightEpsilon,
}

impl Default for GirlsConfig {
    fn default() -> Self {
        GirlsConfig {
            k: 1,
            eps_bar: 1e-9,
            max_iter: 1000,
            eps0: None,
            spd_jitter: 0.0,
            stagnation_tol: 0.0,
            record_trace: false,
            weight_epsilon: WeightEpsilon::Current,
        }
    }
}

impl GirlsConfig {
    pub fn new(k: usize, eps_bar: f64, max_iter: usize) -> Self {
        GirlsConfig {
            k,
            eps_bar,
            max_iter,
            ..Self::default()
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k + 1 > n {
            return Err(Error::InvalidSpec(format!("need K + 1 ≤ n, got K = {} with n = {n}", self.k)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidSpec("max_iter must be at least 1".into()));
        }
        if !(self.eps_bar >= 0.0) || self.eps_bar.is_infinite() {
            return Err(Error::InvalidSpec(format!("eps_bar must be finite and ≥ 0, got {}", self.eps_bar)));
        }
        if let Some(e) = self.eps0 {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidSpec(format!("eps0 must be positive, got {e}")));
            }
        }
        if !(self.spd_jitter >= 0.0) || !(self.stagnation_tol >= 0.0) {
            return Err(Error::InvalidSpec("spd_jitter and stagnation_tol must be ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    EpsBelowThreshold,
    MaxIterations,
    Stagnation,
}

/// State after one iteration: `c^{k+1}`, `w^{k+1}`, `ε_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub c: Vec<f64>,
    pub w: Vec<f64>,
    pub eps: f64,
    /// `L(c^{k+1}, w^{k+1}, ε_{k+1})`.
    pub loss: f64,
    pub feasibility_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GirlsResult {
    pub c_bar: Vec<f64>,
    pub iterations: usize,
    pub eps_final: f64,
    pub termination: Termination,
    pub feasibility_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Generalized IRLS: alternate the weighted minimum-norm step with the
/// smoothing and weight updates while `ε_k ≥ ε̄`, for at most `max_iter`
/// iterations.
pub fn g_irls<P: Penalty + ?Sized>(problem: &SensingProblem, penalty: &P, config: &GirlsConfig) -> Result<GirlsResult> {
    let n = problem.n();
    config.validate(n)?;
    penalty.check_len(n)?;

    let mut w = Vector::repeat(n, 1.0);
    let mut eps = config.eps0.unwrap_or(n as f64);
    let mut c: Option<Vector> = None;
    let mut trace = config.record_trace.then(Vec::new);
    let mut iterations = 0;
    let mut stagnated = false;

    while eps >= config.eps_bar && iterations < config.max_iter {
        let next = wls_step_jittered(&problem.a, &w, &problem.y, config.spd_jitter)?;
        iterations += 1;
        if !all_finite(&next) {
            return Err(Error::NonFiniteIterate { iteration: iterations });
        }
        let values = penalty.components(next.as_slice())?;
        let eps_next = eps.min(rearranged_value(&values, config.k)?);
        let eps_w = match config.weight_epsilon {
            WeightEpsilon::Current => eps,
            WeightEpsilon::Updated => eps_next,
        };
        let e2 = eps_w * eps_w;
        for j in 0..n {
            w[j] = penalty.weight(j, next[j] * next[j] + e2).map_err(|e| match e {
                Error::DegenerateInput(_) => Error::NonFiniteIterate { iteration: iterations },
                other => other,
            })?;
        }
        if !all_finite(&w) {
            return Err(Error::NonFiniteIterate { iteration: iterations });
        }
        if config.stagnation_tol > 0.0 {
            if let Some(prev) = &c {
                stagnated = (&next - prev).amax() <= config.stagnation_tol;
            }
        }
        eps = eps_next;
        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry {
                c: next.as_slice().to_vec(),
                w: w.as_slice().to_vec(),
                eps,
                loss: girls_loss(penalty, next.as_slice(), w.as_slice(), eps)?,
                feasibility_residual: problem.residual(&next),
            });
        }
        c = Some(next);
        if stagnated {
            break;
        }
    }

    let c = match c {
        Some(c) => c,
        None => wls_step_jittered(&problem.a, &w, &problem.y, config.spd_jitter)?,
    };
    let termination = if eps < config.eps_bar {
        Termination::EpsBelowThreshold
    } else if stagnated {
        Termination::Stagnation
    } else {
        Termination::MaxIterations
    };
    Ok(GirlsResult {
        feasibility_residual: problem.residual(&c),
        c_bar: c.as_slice().to_vec(),
        iterations,
        eps_final: eps,
        termination,
        trace,
    })
}
