//! G-IRLS for `min R(c)` subject to `A c = y`, plus the objectives used to
//! judge it and grid oracles for small kernels.

mod girls;
mod oracle;

pub use girls::{g_irls, GirlsConfig, GirlsResult, Termination, TraceEntry, WeightEpsilon};
pub use oracle::{bruteforce_min_r_over_gy, GridMinimum, OracleGrid, DEFAULT_ORACLE_POINTS};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite_matrix, ensure_finite_vector, numerical_rank, solve_spd_jittered, symmetrize, Matrix, Vector};
use crate::regularizers::{reconstruct_f, Penalty};

/// `y = A c + ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingProblem {
    pub a: Matrix,
    pub y: Vector,
    pub ground_truth: Option<Vector>,
    /// `σ̄` in the MAP objective.
    pub noise_var: Option<f64>,
}

impl SensingProblem {
    pub fn new(a: Matrix, y: Vector) -> Result<Self> {
        let p = SensingProblem {
            a,
            y,
            ground_truth: None,
            noise_var: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_ground_truth(mut self, c: Vector) -> Result<Self> {
        self.ground_truth = Some(c);
        self.validate()?;
        Ok(self)
    }

    pub fn with_noise_var(mut self, s: f64) -> Result<Self> {
        self.noise_var = Some(s);
        self.validate()?;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.a.shape();
        if self.y.len() != m {
            return Err(Error::DimensionMismatch(format!("y has length {}, A has {m} rows", self.y.len())));
        }
        if let Some(c) = &self.ground_truth {
            if c.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "ground truth has length {}, A has {n} columns",
                    c.len()
                )));
            }
        }
        if let Some(s) = self.noise_var {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidSpec(format!("noise variance must be positive, got {s}")));
            }
        }
        ensure_finite_matrix(&self.a, "A")?;
        ensure_finite_vector(&self.y, "y")?;
        if m > n {
            return Err(Error::RankDeficient { rank: n, required: m });
        }
        let rank = numerical_rank(&self.a);
        if rank < m {
            return Err(Error::RankDeficient { rank, required: m });
        }
        Ok(())
    }

    /// `‖A c − y‖∞`.
    pub fn residual(&self, c: &Vector) -> f64 {
        (&self.a * c - &self.y).amax()
    }

    /// The feasibility tolerance `1e-8·(1 + ‖y‖∞)`.
    pub fn feasibility_tolerance(&self) -> f64 {
        1e-8 * (1.0 + self.y.amax())
    }
}

/// `D Aᵀ (A D Aᵀ)⁻¹ y` with `D = diag(w)⁻¹`: the minimizer of `Σ w_j c_j²`
/// over `A c = y`.
pub fn wls_step(a: &Matrix, w: &Vector, y: &Vector) -> Result<Vector> {
    wls_step_jittered(a, w, y, 0.0)
}

pub fn wls_step_jittered(a: &Matrix, w: &Vector, y: &Vector, jitter: f64) -> Result<Vector> {
    if w.len() != a.ncols() || y.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, w has length {}, y has length {}",
            a.nrows(),
            a.ncols(),
            w.len(),
            y.len()
        )));
    }
    if let Some((j, v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateWeights(format!("w[{j}] = {v}")));
    }
    let d = w.map(|v| 1.0 / v);
    let mut ad = a.clone();
    for (j, mut col) in ad.column_iter_mut().enumerate() {
        col *= d[j];
    }
    let gram = symmetrize(&ad * a.transpose());
    let x = solve_spd_jittered(&gram, y, jitter)?;
    Ok(ad.transpose() * x)
}

/// `(1/(2σ̄)) ‖A c − y‖₂² + R(c)`.
pub fn map_objective<P: Penalty + ?Sized>(problem: &SensingProblem, penalty: &P, c: &Vector) -> Result<f64> {
    let s = problem.noise_var.ok_or(Error::MissingNoiseVariance)?;
    let r = (&problem.a * c - &problem.y).norm_squared();
    Ok(r / (2.0 * s) + penalty.eval(c.as_slice())?)
}

/// `½ Σ_j (c_j² w_j + ε² w_j + f_j(w_j))`.
pub fn girls_loss<P: Penalty + ?Sized>(penalty: &P, c: &[f64], w: &[f64], eps: f64) -> Result<f64> {
    penalty.check_len(c.len())?;
    penalty.check_len(w.len())?;
    let mut total = 0.0;
    for (j, (cj, wj)) in c.iter().zip(w).enumerate() {
        let f = reconstruct_f(penalty, j)?;
        total += cj * cj * wj + eps * eps * wj + f.value(*wj)?;
    }
    Ok(0.5 * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub applicable: bool,
    pub bound: f64,
    pub satisfied: bool,
}

/// Error bound `2(1+γ)δ / ((1−γ)(K−κ) − 4 − 6γ)` on the final smoothing
/// parameter, valid when `0 < κ < K − (4+6γ)/(1−γ)`.
///
/// Outside that range the bound is reported as `+∞` and trivially satisfied.
pub fn theorem2_bound_check(eps_final: f64, gamma: f64, delta: f64, k: usize, kappa: usize) -> Result<BoundCheck> {
    if !(0.0..1.0).contains(&gamma) || !(delta >= 0.0) {
        return Err(Error::InvalidSpec(format!("need 0 ≤ γ < 1 and δ ≥ 0, got γ = {gamma}, δ = {delta}")));
    }
    let threshold = k as f64 - (4.0 + 6.0 * gamma) / (1.0 - gamma);
    let applicable = kappa > 0 && (kappa as f64) < threshold;
    if !applicable {
        return Ok(BoundCheck {
            applicable,
            bound: f64::INFINITY,
            satisfied: true,
        });
    }
    let denom = (1.0 - gamma) * (k - kappa) as f64 - 4.0 - 6.0 * gamma;
    let bound = 2.0 * (1.0 + gamma) * delta / denom;
    Ok(BoundCheck {
        applicable,
        bound,
        satisfied: eps_final <= bound,
    })
}
