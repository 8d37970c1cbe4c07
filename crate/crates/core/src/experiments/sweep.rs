use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::io::format_real;
use super::problem::{generate_problem_with, Ensemble, ProblemSpec, TruthModel};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::regularizers::RegularizerSpec;
use crate::solvers::{g_irls, GirlsConfig};

pub const CSV_HEADER: &str = "m,n,K_true,trial,seed,success,rel_error,iterations,eps_final,wall_ms,error";
pub const SEED_ENV: &str = "GSPARSE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub m: Vec<usize>,
    pub n: Vec<usize>,
    #[serde(rename = "K_true")]
    pub k_true: Vec<usize>,
}

/// A regularizer given inline or as a path to a spec file (relative paths
/// resolve against the config file's directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegularizerRef {
    Path(PathBuf),
    Inline(RegularizerSpec),
}

fn default_threshold() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub grid: Grid,
    pub trials: usize,
    #[serde(default)]
    pub solver: GirlsConfig,
    /// Run the solver with `K = K_true` of the cell instead of `solver.K`.
    #[serde(default)]
    pub solver_k_from_truth: bool,
    pub regularizer: RegularizerRef,
    #[serde(default)]
    pub truth_model: TruthModel,
    /// Relative ℓ2 error counted as a success.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub base_seed: u64,
    /// Record wall-clock times; off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl SweepConfig {
    /// Reads a config, resolving a regularizer path against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: SweepConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if let RegularizerRef::Path(p) = &config.regularizer {
            let full = if p.is_relative() {
                path.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p.clone()
            };
            config.regularizer = RegularizerRef::Inline(RegularizerSpec::from_path(&full)?);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        if self.grid.m.is_empty() || self.grid.n.is_empty() || self.grid.k_true.is_empty() {
            return Err(Error::InvalidSpec("every grid axis needs at least one value".into()));
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::InvalidSpec(format!("threshold must be ≥ 0, got {}", self.threshold)));
        }
        if let RegularizerRef::Path(p) = &self.regularizer {
            return Err(Error::InvalidSpec(format!(
                "regularizer path {} was not resolved; use SweepConfig::load",
                p.display()
            )));
        }
        Ok(())
    }
}

/// `GSPARSE_SEED`, when set to an unsigned integer.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidSpec(format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(None),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// `base_seed + splitmix64(fnv1a(m ‖ n ‖ K_true ‖ trial))`, each field as a
/// little-endian `u64`.
pub fn trial_seed(base_seed: u64, m: usize, n: usize, k_true: usize, trial: usize) -> u64 {
    let mut bytes = Vec::with_capacity(32);
    for v in [m, n, k_true, trial] {
        bytes.extend_from_slice(&(v as u64).to_le_bytes());
    }
    base_seed.wrapping_add(splitmix64(fnv1a(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "K_true")]
    pub k_true: usize,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    /// `+∞` when the trial failed before producing an estimate.
    pub rel_error: f64,
    pub iterations: usize,
    pub eps_final: f64,
    pub wall_ms: f64,
    pub error: Option<String>,
}

struct Outcome {
    rel_error: f64,
    iterations: usize,
    eps_final: f64,
}

fn run_trial(config: &SweepConfig, spec: &RegularizerSpec, problem: &ProblemSpec) -> Result<Outcome> {
    let reg = spec.build_with_dim(Some(problem.n))?;
    let p = generate_problem_with(problem, &reg)?;
    let mut solver = config.solver.clone();
    if config.solver_k_from_truth {
        solver.k = problem.k_true;
    }
    solver.record_trace = false;
    let result = g_irls(&p, &reg, &solver)?;
    let truth = p.ground_truth.expect("generated problems carry their truth");
    let diff = (Vector::from_column_slice(&result.c_bar) - &truth).norm();
    let norm = truth.norm();
    Ok(Outcome {
        rel_error: if norm > 0.0 { diff / norm } else { diff },
        iterations: result.iterations,
        eps_final: result.eps_final,
    })
}

/// Every trial of every `(m, n, K_true)` cell, in grid order. Per-trial
/// failures become rows with `success = false` and an error note.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let RegularizerRef::Inline(spec) = &config.regularizer else {
        unreachable!("validate rejects unresolved paths");
    };
    let mut rows = Vec::new();
    for &m in &config.grid.m {
        for &n in &config.grid.n {
            for &k_true in &config.grid.k_true {
                for trial in 0..config.trials {
                    let seed = trial_seed(config.base_seed, m, n, k_true, trial);
                    let problem = ProblemSpec {
                        m,
                        n,
                        k_true,
                        ensemble: Ensemble::GaussianIid,
                        truth_model: config.truth_model,
                        seed,
                    };
                    let start = Instant::now();
                    let outcome = run_trial(config, spec, &problem);
                    let wall_ms = if config.record_wall_time {
                        start.elapsed().as_secs_f64() * 1e3
                    } else {
                        0.0
                    };
                    rows.push(match outcome {
                        Ok(o) => SweepRow {
                            m,
                            n,
                            k_true,
                            trial,
                            seed,
                            success: o.rel_error <= config.threshold,
                            rel_error: o.rel_error,
                            iterations: o.iterations,
                            eps_final: o.eps_final,
                            wall_ms,
                            error: None,
                        },
                        Err(e) => SweepRow {
                            m,
                            n,
                            k_true,
                            trial,
                            seed,
                            success: false,
                            rel_error: f64::INFINITY,
                            iterations: 0,
                            eps_final: f64::NAN,
                            wall_ms,
                            error: Some(e.to_string()),
                        },
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.m.to_string(),
            r.n.to_string(),
            r.k_true.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.success.to_string(),
            format_real(r.rel_error),
            r.iterations.to_string(),
            format_real(r.eps_final),
            format_real(r.wall_ms),
            quote(r.error.as_deref().unwrap_or("")),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
