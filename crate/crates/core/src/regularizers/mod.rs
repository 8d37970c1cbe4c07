//! Componentwise regularizers `R(c) = Σ_i R_i(c_i)` induced by
//! compound-Laplacian priors, with ℓ1 as the special case of a unit mixing
//! variable.
//!
//! For a mixing law `Z` the component density is
//! `p(c) = ∫ (λ/2z) e^{−λ|c|/z} dP_Z(z)` and `R_i(c) = log p(0) − log p(c)`.
//! Writing `q(z) ∝ P_Z(z)/z` for the normalized size-biased law,
//! `R_i(c) = −log E_q[e^{−λ|c|/Z}]`, which is what both kinds below evaluate.

mod auxiliary;
mod mixing;
mod properties;
mod spec;

use std::fmt;
use std::sync::Arc;

pub use auxiliary::{check_convexity_h, h_eval, reconstruct_f, AuxiliaryFn, ConvexityGrid, ConvexityReport};
pub use mixing::{MixingDensity, ParametricMixing};
pub use properties::{check_properties, PropertyReport, PropertyWitness, SampleSpec};
pub use spec::RegularizerSpec;

use crate::distributions::validate_mixing;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_half_line, QuadratureConfig};

/// A separable penalty `R(x) = Σ_i R_i(x_i)`.
///
/// Everything downstream (sparsity measures, NSP checks, G-IRLS) only needs
/// the components; the provided methods derive the rest.
pub trait Penalty {
    fn dim(&self) -> usize;

    /// `R_i(x)`.
    fn component(&self, i: usize, x: f64) -> Result<f64>;

    /// `Some(λ)` when `R_i(x) = λ|x|` exactly.
    fn l1_rate(&self, _i: usize) -> Option<f64> {
        None
    }

    /// Upper bound on the Lipschitz constant of `R_i`, when known.
    fn lipschitz(&self, _i: usize) -> Option<f64> {
        None
    }

    fn components(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        x.iter().enumerate().map(|(i, v)| self.component(i, *v)).collect()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.components(x)?.iter().sum())
    }

    /// G-IRLS weight `R_i(√t)/t`, the closed form of `(f_i')⁻¹(−t)`.
    fn weight(&self, i: usize, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::DegenerateInput(format!(
                "weight argument must be positive and finite, got {t}"
            )));
        }
        if let Some(rate) = self.l1_rate(i) {
            return Ok(rate / t.sqrt());
        }
        Ok(self.component(i, t.sqrt())? / t)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector has length {len}, regularizer has dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl<P: Penalty + ?Sized> Penalty for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn component(&self, i: usize, x: f64) -> Result<f64> {
        (**self).component(i, x)
    }
    fn l1_rate(&self, i: usize) -> Option<f64> {
        (**self).l1_rate(i)
    }
    fn lipschitz(&self, i: usize) -> Option<f64> {
        (**self).lipschitz(i)
    }
    fn weight(&self, i: usize, t: f64) -> Result<f64> {
        (**self).weight(i, t)
    }
}

/// Finite mixing law, stored as the normalized size-biased weights
/// `q_k = (π_k/z_k) / Σ_l π_l/z_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMixture {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    log_q: Vec<f64>,
    q: Vec<f64>,
    inverse_atoms: Vec<f64>,
    inverse_mean: f64,
}

impl DiscreteMixture {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        validate_mixing(&atoms, &weights)?;
        let raw: Vec<f64> = atoms.iter().zip(&weights).map(|(z, p)| p / z).collect();
        let inverse_mean: f64 = raw.iter().sum();
        let q: Vec<f64> = raw.iter().map(|r| r / inverse_mean).collect();
        let log_q = q.iter().map(|v| v.ln()).collect();
        let inverse_atoms = atoms.iter().map(|z| 1.0 / z).collect();
        Ok(DiscreteMixture {
            atoms,
            weights,
            log_q,
            q,
            inverse_atoms,
            inverse_mean,
        })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `−log E_q[e^{−a/Z}]` for `a ≥ 0`.
    fn neg_log_laplace(&self, a: f64) -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        // 1 − E_q[e^{−a/Z}] without cancellation
        let deficit: f64 = self
            .q
            .iter()
            .zip(&self.inverse_atoms)
            .map(|(q, r)| -q * (-a * r).exp_m1())
            .sum();
        if deficit <= 0.5 {
            return -(-deficit).ln_1p();
        }
        let exponent = |(lq, r): (&f64, &f64)| lq - a * r;
        let terms = || self.log_q.iter().zip(&self.inverse_atoms).map(exponent);
        let max = terms().fold(f64::NEG_INFINITY, f64::max);
        -(max + terms().map(|v| (v - max).exp()).sum::<f64>().ln())
    }

    fn density(&self, rate: f64, c: f64) -> f64 {
        0.5 * rate
            * self
                .atoms
                .iter()
                .zip(&self.weights)
                .map(|(z, p)| p / z * (-rate * c.abs() / z).exp())
                .sum::<f64>()
    }

    /// `R_i'(0+) / λ = E_q[1/Z]`.
    fn slope(&self) -> f64 {
        self.q.iter().zip(&self.atoms).map(|(q, z)| q / z).sum()
    }
}

/// Mixing law given by a density, integrated numerically.
#[derive(Clone)]
pub struct QuadratureMixture {
    density: Arc<dyn MixingDensity>,
    config: QuadratureConfig,
    breaks: Vec<f64>,
    /// `∫ P_Z(z) dz`, so user densities need not be normalized.
    mass: f64,
    /// `∫ P_Z(z)/z dz / mass = E[1/Z]`.
    inverse_mean: f64,
    slope: f64,
}

impl fmt::Debug for QuadratureMixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadratureMixture")
            .field("density", &self.density.describe())
            .field("config", &self.config)
            .field("breaks", &self.breaks)
            .field("mass", &self.mass)
            .field("inverse_mean", &self.inverse_mean)
            .finish()
    }
}

impl QuadratureMixture {
    pub fn new(density: Arc<dyn MixingDensity>, config: QuadratureConfig) -> Result<Self> {
        config.validate()?;
        let breaks = density.breakpoints();
        let d = density.clone();
        let mass = integrate_half_line(|z| d.density(z), 0.0, &breaks, &config)?.value;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::QuadratureFailure(format!(
                "mixing density has total mass {mass}"
            )));
        }
        let inverse_mean = integrate_half_line(|z| d.density(z) / z, 0.0, &breaks, &config)?.value / mass;
        if !(inverse_mean > 0.0 && inverse_mean.is_finite()) {
            return Err(Error::QuadratureFailure(format!(
                "E[1/Z] = {inverse_mean}; the prior density at 0 must be finite"
            )));
        }
        let second = integrate_half_line(|z| d.density(z) / (z * z), 0.0, &breaks, &config)
            .map(|e| e.value / mass)
            .unwrap_or(f64::INFINITY);
        Ok(QuadratureMixture {
            density,
            config,
            breaks,
            mass,
            inverse_mean,
            slope: second / inverse_mean,
        })
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    pub fn density_fn(&self) -> &Arc<dyn MixingDensity> {
        &self.density
    }

    /// `ln E[e^{−a/Z}/Z]`, integrated after shifting the log integrand by its
    /// maximum so that large `a` does not underflow.
    fn log_laplace_moment(&self, a: f64) -> Result<f64> {
        let d = &self.density;
        let log_g = |z: f64| d.log_density(z) - a / z - z.ln();
        let (mut peak_z, mut peak) = (1.0, f64::NEG_INFINITY);
        for k in -200..=200 {
            let z = 10f64.powf(k as f64 / 20.0);
            let v = log_g(z);
            if v > peak {
                peak = v;
                peak_z = z;
            }
        }
        if !peak.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "component density underflows at |c|·λ = {a}"
            )));
        }
        let mut breaks = self.breaks.clone();
        breaks.extend([0.5, 0.9, 1.0, 1.1, 2.0].iter().map(|f| f * peak_z));
        breaks.sort_by(|x, y| x.total_cmp(y));
        breaks.dedup();
        let e = integrate_half_line(
            |z| {
                let v = log_g(z);
                if v == f64::NEG_INFINITY {
                    0.0
                } else {
                    (v - peak).exp()
                }
            },
            0.0,
            &breaks,
            &self.config,
        )?;
        if !(e.value > 0.0) {
            return Err(Error::QuadratureFailure(format!(
                "component density underflows at |c|·λ = {a}"
            )));
        }
        Ok(peak + e.value.ln() - self.mass.ln())
    }

    /// `E[e^{−a/Z}/Z]`.
    fn laplace_moment(&self, a: f64) -> Result<f64> {
        let d = &self.density;
        let e = integrate_half_line(
            |z| {
                let p = d.density(z);
                if p == 0.0 {
                    0.0
                } else {
                    (-a / z).exp() * p / z
                }
            },
            0.0,
            &self.breaks,
            &self.config,
        )?;
        Ok(e.value / self.mass)
    }

    fn neg_log_laplace(&self, a: f64) -> Result<f64> {
        if a == 0.0 {
            return Ok(0.0);
        }
        let d = &self.density;
        let deficit = integrate_half_line(
            |z| {
                let p = d.density(z);
                if p == 0.0 {
                    0.0
                } else {
                    -(-a / z).exp_m1() * p / z
                }
            },
            0.0,
            &self.breaks,
            &self.config,
        )?
        .value
            / self.mass
            / self.inverse_mean;
        if deficit <= 0.5 {
            return Ok(-(-deficit).ln_1p());
        }
        Ok(self.inverse_mean.ln() - self.log_laplace_moment(a)?)
    }
}

#[derive(Debug, Clone)]
pub enum RegularizerKind {
    L1,
    ClDiscrete(DiscreteMixture),
    ClQuadrature(QuadratureMixture),
}

/// A compound-Laplacian (or ℓ1) regularizer with per-component rates `λ_i`.
#[derive(Debug, Clone)]
pub struct Regularizer {
    rates: Vec<f64>,
    kind: RegularizerKind,
}

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::InvalidSpec("regularizer dimension must be positive".into()));
    }
    if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidSpec(format!("rates must be positive, got {r}")));
    }
    Ok(())
}

impl Regularizer {
    pub fn l1(rates: Vec<f64>) -> Result<Self> {
        check_rates(&rates)?;
        Ok(Regularizer {
            rates,
            kind: RegularizerKind::L1,
        })
    }

    /// `‖x‖₁` on `R^n`.
    pub fn l1_norm(n: usize) -> Result<Self> {
        Self::l1(vec![1.0; n])
    }

    pub fn cl_discrete(rates: Vec<f64>, atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_rates(&rates)?;
        Ok(Regularizer {
            rates,
            kind: RegularizerKind::ClDiscrete(DiscreteMixture::new(atoms, weights)?),
        })
    }

    pub fn cl_quadrature(
        rates: Vec<f64>,
        density: Arc<dyn MixingDensity>,
        config: QuadratureConfig,
    ) -> Result<Self> {
        check_rates(&rates)?;
        Ok(Regularizer {
            rates,
            kind: RegularizerKind::ClQuadrature(QuadratureMixture::new(density, config)?),
        })
    }

    pub fn kind(&self) -> &RegularizerKind {
        &self.kind
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    fn rate(&self, i: usize) -> Result<f64> {
        self.rates.get(i).copied().ok_or_else(|| {
            Error::OutOfRange(format!("component {i} of a {}-dimensional regularizer", self.rates.len()))
        })
    }

    /// Component prior density `p_{C_i}(c)`; only defined for the mixture kinds.
    pub fn pdf_component(&self, i: usize, c: f64) -> Result<f64> {
        let rate = self.rate(i)?;
        match &self.kind {
            RegularizerKind::L1 => Err(Error::InvalidSpec(
                "the l1 regularizer carries no mixing law; use cl-discrete".into(),
            )),
            RegularizerKind::ClDiscrete(m) => Ok(m.density(rate, c)),
            RegularizerKind::ClQuadrature(m) => Ok(0.5 * rate * m.laplace_moment(rate * c.abs())?),
        }
    }
}

impl Penalty for Regularizer {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn component(&self, i: usize, x: f64) -> Result<f64> {
        let rate = self.rate(i)?;
        if !x.is_finite() {
            return Err(Error::DegenerateInput(format!("non-finite argument {x}")));
        }
        let a = rate * x.abs();
        match &self.kind {
            RegularizerKind::L1 => Ok(a),
            RegularizerKind::ClDiscrete(m) => Ok(m.neg_log_laplace(a)),
            RegularizerKind::ClQuadrature(m) => m.neg_log_laplace(a),
        }
    }

    fn l1_rate(&self, i: usize) -> Option<f64> {
        match self.kind {
            RegularizerKind::L1 => self.rates.get(i).copied(),
            _ => None,
        }
    }

    fn lipschitz(&self, i: usize) -> Option<f64> {
        let rate = *self.rates.get(i)?;
        match &self.kind {
            RegularizerKind::L1 => Some(rate),
            RegularizerKind::ClDiscrete(m) => Some(rate * m.slope()),
            RegularizerKind::ClQuadrature(m) => m.slope.is_finite().then(|| rate * m.slope),
        }
    }
}
