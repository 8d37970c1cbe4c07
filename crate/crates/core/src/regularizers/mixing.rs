use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A (possibly unnormalized) density of the mixing variable on `(0, ∞)`.
pub trait MixingDensity: Send + Sync {
    fn density(&self, z: f64) -> f64;

    /// `ln density(z)`; override when the density underflows long before
    /// its logarithm does.
    fn log_density(&self, z: f64) -> f64 {
        self.density(z).ln()
    }

    /// Points where the density varies sharply, used as initial quadrature
    /// breakpoints.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn describe(&self) -> String {
        "custom mixing density".to_string()
    }
}

/// Mixing densities selectable from a regularizer spec file. All are
/// unnormalized; the regularizer normalizes numerically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ParametricMixing {
    /// Normal bump `exp(−(z − center)²/2 width²)` truncated to `z > 0`.
    Bump { center: f64, width: f64 },
    /// `z^{shape−1} e^{−z/scale}`; `shape > 1` keeps the prior density finite at 0.
    Gamma { shape: f64, scale: f64 },
    /// `exp(−(ln z − mu)²/2 sigma²)/z`.
    LogNormal { mu: f64, sigma: f64 },
    /// `z e^{−z²/2 sigma2}`.
    Rayleigh { sigma2: f64 },
}

impl ParametricMixing {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ParametricMixing::Bump { center, width } => center > 0.0 && width > 0.0 && center.is_finite(),
            ParametricMixing::Gamma { shape, scale } => shape > 1.0 && scale > 0.0 && shape.is_finite(),
            ParametricMixing::LogNormal { mu, sigma } => mu.is_finite() && sigma > 0.0,
            ParametricMixing::Rayleigh { sigma2 } => sigma2 > 0.0 && sigma2.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("invalid mixing density parameters: {self:?}")))
        }
    }
}

impl MixingDensity for ParametricMixing {
    fn density(&self, z: f64) -> f64 {
        if !(z > 0.0) || !z.is_finite() {
            return 0.0;
        }
        match *self {
            ParametricMixing::Bump { center, width } => (-0.5 * ((z - center) / width).powi(2)).exp(),
            ParametricMixing::Gamma { shape, scale } => ((shape - 1.0) * z.ln() - z / scale).exp(),
            ParametricMixing::LogNormal { mu, sigma } => {
                (-0.5 * ((z.ln() - mu) / sigma).powi(2)).exp() / z
            }
            ParametricMixing::Rayleigh { sigma2 } => z * (-z * z / (2.0 * sigma2)).exp(),
        }
    }

    fn log_density(&self, z: f64) -> f64 {
        if !(z > 0.0) || !z.is_finite() {
            return f64::NEG_INFINITY;
        }
        match *self {
            ParametricMixing::Bump { center, width } => -0.5 * ((z - center) / width).powi(2),
            ParametricMixing::Gamma { shape, scale } => (shape - 1.0) * z.ln() - z / scale,
            ParametricMixing::LogNormal { mu, sigma } => -0.5 * ((z.ln() - mu) / sigma).powi(2) - z.ln(),
            ParametricMixing::Rayleigh { sigma2 } => z.ln() - z * z / (2.0 * sigma2),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            ParametricMixing::Bump { center, width } => [-12.0, -4.0, -1.0, 0.0, 1.0, 4.0, 12.0]
                .iter()
                .map(|k| center + k * width)
                .filter(|z| *z > 0.0)
                .collect(),
            ParametricMixing::Gamma { shape, scale } => vec![(shape - 1.0) * scale, shape * scale],
            ParametricMixing::LogNormal { mu, sigma } => {
                vec![(mu - sigma).exp(), mu.exp(), (mu + sigma).exp()]
            }
            ParametricMixing::Rayleigh { sigma2 } => vec![sigma2.sqrt()],
        }
    }

    fn describe(&self) -> String {
        format!("{self:?}")
    }
}
