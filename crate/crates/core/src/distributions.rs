//! Scalar distributions (normal, Laplace, Rayleigh, discrete mixing) with
//! seeded samplers and Kolmogorov–Smirnov checks of the Gaussian-scale-mixture
//! representations of the Laplace and compound-Laplace laws.
//!
//! # Random streams
//!
//! Every sampler draws from `ChaCha8Rng::seed_from_u64(seed)` with
//! `set_stream(k)` selecting an independent stream per random variable.
//! Normals use `rand_distr::StandardNormal` (ziggurat); uniforms on the open
//! interval use `rand::distr::Open01`. Rayleigh and Laplace variates come from
//! their inverse cdfs. The same `(distribution, n, seed)` therefore
//! reproduces bit-identical samples on one platform.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarDistribution {
    /// `N(mean, variance)`.
    Normal { mean: f64, variance: f64 },
    /// `L(mean, rate)` with density `rate/2 · exp(−rate|x − mean|)`.
    Laplace { mean: f64, rate: f64 },
    /// Rayleigh with parameter `σ²`: density `(x/σ²) exp(−x²/2σ²)` on `x ≥ 0`.
    Rayleigh { sigma2: f64 },
    /// Finite mixing law with positive atoms.
    DiscreteMixing { atoms: Vec<f64>, weights: Vec<f64> },
}

impl ScalarDistribution {
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        let d = ScalarDistribution::Normal { mean, variance };
        d.validate()?;
        Ok(d)
    }

    pub fn laplace(mean: f64, rate: f64) -> Result<Self> {
        let d = ScalarDistribution::Laplace { mean, rate };
        d.validate()?;
        Ok(d)
    }

    pub fn rayleigh(sigma2: f64) -> Result<Self> {
        let d = ScalarDistribution::Rayleigh { sigma2 };
        d.validate()?;
        Ok(d)
    }

    pub fn discrete_mixing(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let d = ScalarDistribution::DiscreteMixing { atoms, weights };
        d.validate()?;
        Ok(d)
    }

    pub fn point_mass(atom: f64) -> Result<Self> {
        Self::discrete_mixing(vec![atom], vec![1.0])
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            ScalarDistribution::Normal { mean, variance } => {
                if !mean.is_finite() {
                    return Err(Error::InvalidSpec("mean must be finite".into()));
                }
                positive(*variance, "variance")
            }
            ScalarDistribution::Laplace { mean, rate } => {
                if !mean.is_finite() {
                    return Err(Error::InvalidSpec("mean must be finite".into()));
                }
                positive(*rate, "rate")
            }
            ScalarDistribution::Rayleigh { sigma2 } => positive(*sigma2, "sigma2"),
            ScalarDistribution::DiscreteMixing { atoms, weights } => {
                validate_mixing(atoms, weights)
            }
        }
    }

    /// Density; for `DiscreteMixing` the probability mass at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            ScalarDistribution::Normal { mean, variance } => {
                (-(x - mean).powi(2) / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
            }
            ScalarDistribution::Laplace { mean, rate } => 0.5 * rate * (-rate * (x - mean).abs()).exp(),
            ScalarDistribution::Rayleigh { sigma2 } => {
                if x < 0.0 {
                    0.0
                } else {
                    x / sigma2 * (-x * x / (2.0 * sigma2)).exp()
                }
            }
            ScalarDistribution::DiscreteMixing { atoms, weights } => atoms
                .iter()
                .zip(weights)
                .filter(|(a, _)| **a == x)
                .map(|(_, w)| *w)
                .sum(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ScalarDistribution::Normal { mean, variance } => {
                0.5 * erfc(-(x - mean) / (2.0 * variance).sqrt())
            }
            ScalarDistribution::Laplace { mean, rate } => {
                let d = x - mean;
                if d < 0.0 {
                    0.5 * (rate * d).exp()
                } else {
                    1.0 - 0.5 * (-rate * d).exp()
                }
            }
            ScalarDistribution::Rayleigh { sigma2 } => {
                if x < 0.0 {
                    0.0
                } else {
                    -(-x * x / (2.0 * sigma2)).exp_m1()
                }
            }
            ScalarDistribution::DiscreteMixing { atoms, weights } => atoms
                .iter()
                .zip(weights)
                .filter(|(a, _)| **a <= x)
                .map(|(_, w)| *w)
                .sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ScalarDistribution::Normal { mean, .. } | ScalarDistribution::Laplace { mean, .. } => *mean,
            ScalarDistribution::Rayleigh { sigma2 } => (sigma2 * PI / 2.0).sqrt(),
            ScalarDistribution::DiscreteMixing { atoms, weights } => {
                atoms.iter().zip(weights).map(|(a, w)| a * w).sum()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ScalarDistribution::Normal { variance, .. } => *variance,
            ScalarDistribution::Laplace { rate, .. } => 2.0 / (rate * rate),
            ScalarDistribution::Rayleigh { sigma2 } => (4.0 - PI) / 2.0 * sigma2,
            ScalarDistribution::DiscreteMixing { atoms, weights } => {
                let m = self.mean();
                atoms.iter().zip(weights).map(|(a, w)| w * (a - m).powi(2)).sum()
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ScalarDistribution::Normal { mean, variance } => {
                let g: f64 = rng.sample(StandardNormal);
                mean + variance.sqrt() * g
            }
            ScalarDistribution::Laplace { mean, rate } => {
                let u: f64 = rng.sample(Open01);
                let v = u - 0.5;
                mean - v.signum() * (1.0 - 2.0 * v.abs()).ln() / rate
            }
            ScalarDistribution::Rayleigh { sigma2 } => {
                let u: f64 = rng.sample(Open01);
                sigma2.sqrt() * (-2.0 * (-u).ln_1p()).sqrt()
            }
            ScalarDistribution::DiscreteMixing { atoms, weights } => {
                let u: f64 = rng.sample(Open01);
                let mut acc = 0.0;
                for (a, w) in atoms.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *a;
                    }
                }
                *atoms.last().expect("validated non-empty")
            }
        }
    }

    fn sample_stream(&self, n: usize, seed: u64, stream: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    /// `n` independent draws, reproducible from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.sample_stream(n, seed, 0)
    }
}

pub(crate) fn validate_mixing(atoms: &[f64], weights: &[f64]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidSpec("mixing law needs at least one atom".into()));
    }
    if atoms.len() != weights.len() {
        return Err(Error::InvalidSpec(format!(
            "{} atoms but {} weights",
            atoms.len(),
            weights.len()
        )));
    }
    if let Some(a) = atoms.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidSpec(format!("atoms must be positive, got {a}")));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidSpec(format!("weights must be positive, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::InvalidSpec(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Complementary error function: Maclaurin series of `erf` below 2,
/// Lentz-evaluated continued fraction above.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/√π Σ (−1)^k x^{2k+1} / (k! (2k+1))
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -x2 / k;
        let add = term / (2.0 * k + 1.0);
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    2.0 / PI.sqrt() * sum
}

fn erfc_continued_fraction(x: f64) -> f64 {
    // Lentz evaluation of erfc(x) = exp(−x²)/√π · 1/(x + 1/2/(x + 1/(x + 3/2/(x + …))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub sample_count: usize,
    pub ks_statistic: f64,
    pub seed: u64,
}

/// One-sample Kolmogorov–Smirnov distance `sup |F_n − F|`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(mut samples: Vec<f64>, cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance `sup |F_n − G_m|`.
pub fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

const MIN_MONTE_CARLO_SAMPLES: usize = 10_000;

fn check_params(sigma: f64, lambda: f64, n: usize) -> Result<()> {
    if !(sigma > 0.0 && lambda > 0.0 && sigma.is_finite() && lambda.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "sigma and lambda must be positive, got {sigma}, {lambda}"
        )));
    }
    if n < MIN_MONTE_CARLO_SAMPLES {
        return Err(Error::InvalidSpec(format!(
            "need at least {MIN_MONTE_CARLO_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// KS distance between `Z·U` and `L(0, λ)` where `Z ~ Rayleigh(1/(σ²λ²))` and
/// `U ~ N(0, σ²)` are independent.
pub fn verify_laplace_identity(sigma: f64, lambda: f64, n: usize, seed: u64) -> Result<MonteCarloReport> {
    check_params(sigma, lambda, n)?;
    let z = ScalarDistribution::rayleigh(1.0 / (sigma * sigma * lambda * lambda))?.sample_stream(n, seed, 1);
    let u = ScalarDistribution::normal(0.0, sigma * sigma)?.sample_stream(n, seed, 2);
    let product: Vec<f64> = z.iter().zip(&u).map(|(z, u)| z * u).collect();
    let laplace = ScalarDistribution::laplace(0.0, lambda)?;
    Ok(MonteCarloReport {
        sample_count: n,
        ks_statistic: ks_one_sample(product, |x| laplace.cdf(x)),
        seed,
    })
}

/// Two-sample KS distance between `Z·Z̄·U` and `Z·L`, with `Z` drawn from
/// `mixing`, `Z̄ ~ Rayleigh(1/(σ²λ²))`, `U ~ N(0, σ²)` and `L ~ L(0, λ)`.
pub fn verify_cl_in_cg(
    mixing: &ScalarDistribution,
    sigma: f64,
    lambda: f64,
    n: usize,
    seed: u64,
) -> Result<MonteCarloReport> {
    check_params(sigma, lambda, n)?;
    if !matches!(mixing, ScalarDistribution::DiscreteMixing { .. }) {
        return Err(Error::InvalidSpec("mixing must be a discrete mixing law".into()));
    }
    mixing.validate()?;
    let rayleigh = ScalarDistribution::rayleigh(1.0 / (sigma * sigma * lambda * lambda))?;
    let normal = ScalarDistribution::normal(0.0, sigma * sigma)?;
    let laplace = ScalarDistribution::laplace(0.0, lambda)?;

    let z1 = mixing.sample_stream(n, seed, 1);
    let zbar = rayleigh.sample_stream(n, seed, 2);
    let u = normal.sample_stream(n, seed, 3);
    let compound_gaussian: Vec<f64> = (0..n).map(|k| z1[k] * zbar[k] * u[k]).collect();

    let z2 = mixing.sample_stream(n, seed, 4);
    let l = laplace.sample_stream(n, seed, 5);
    let compound_laplace: Vec<f64> = z2.iter().zip(&l).map(|(z, l)| z * l).collect();

    Ok(MonteCarloReport {
        sample_count: n,
        ks_statistic: ks_two_sample(compound_gaussian, compound_laplace),
        seed,
    })
}
