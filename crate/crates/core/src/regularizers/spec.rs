use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ParametricMixing, Regularizer, RegularizerKind};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecKind {
    L1,
    ClDiscrete,
    ClQuadrature,
}

/// JSON form of a regularizer:
///
/// ```json
/// {"kind": "cl-discrete", "lambda": [1.0], "n": 50, "atoms": [1, 4], "weights": [0.5, 0.5]}
/// ```
///
/// A single `lambda` entry is broadcast to `n` components when `n` is given
/// (or when the dimension is supplied by the caller through
/// [`RegularizerSpec::build_with_dim`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub kind: SpecKind,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<ParametricMixing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
}

impl RegularizerSpec {
    pub fn l1(lambda: f64, n: usize) -> Self {
        RegularizerSpec {
            kind: SpecKind::L1,
            lambda: vec![lambda],
            n: Some(n),
            atoms: None,
            weights: None,
            mixing: None,
            quadrature: None,
        }
    }

    pub fn cl_discrete(lambda: f64, n: usize, atoms: Vec<f64>, weights: Vec<f64>) -> Self {
        RegularizerSpec {
            kind: SpecKind::ClDiscrete,
            atoms: Some(atoms),
            weights: Some(weights),
            ..Self::l1(lambda, n)
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_path(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    fn rates(&self, dim: Option<usize>) -> Result<Vec<f64>> {
        let n = self.n.or(dim);
        match (self.lambda.len(), n) {
            (0, _) => Err(Error::InvalidSpec("lambda must not be empty".into())),
            (1, Some(n)) => Ok(vec![self.lambda[0]; n]),
            (len, Some(n)) if len != n => Err(Error::DimensionMismatch(format!(
                "lambda has {len} entries but the dimension is {n}"
            ))),
            _ => Ok(self.lambda.clone()),
        }
    }

    pub fn build(&self) -> Result<Regularizer> {
        self.build_with_dim(None)
    }

    /// Builds the regularizer, broadcasting a scalar `lambda` to `dim` when the
    /// spec itself does not fix `n`.
    pub fn build_with_dim(&self, dim: Option<usize>) -> Result<Regularizer> {
        let rates = self.rates(dim)?;
        if let (Some(n), Some(d)) = (self.n, dim) {
            if n != d {
                return Err(Error::DimensionMismatch(format!(
                    "spec dimension {n} does not match data dimension {d}"
                )));
            }
        }
        match self.kind {
            SpecKind::L1 => Regularizer::l1(rates),
            SpecKind::ClDiscrete => {
                let atoms = self
                    .atoms
                    .clone()
                    .ok_or_else(|| Error::InvalidSpec("cl-discrete needs `atoms`".into()))?;
                let weights = self
                    .weights
                    .clone()
                    .ok_or_else(|| Error::InvalidSpec("cl-discrete needs `weights`".into()))?;
                Regularizer::cl_discrete(rates, atoms, weights)
            }
            SpecKind::ClQuadrature => {
                let mixing = self
                    .mixing
                    .clone()
                    .ok_or_else(|| Error::InvalidSpec("cl-quadrature needs `mixing`".into()))?;
                mixing.validate()?;
                Regularizer::cl_quadrature(rates, Arc::new(mixing), self.quadrature.unwrap_or_default())
            }
        }
    }
}

impl Regularizer {
    /// Spec for the kinds that can be written back to JSON.
    pub fn to_spec(&self) -> Option<RegularizerSpec> {
        let lambda = self.rates().to_vec();
        let n = Some(lambda.len());
        match self.kind() {
            RegularizerKind::L1 => Some(RegularizerSpec {
                kind: SpecKind::L1,
                lambda,
                n,
                atoms: None,
                weights: None,
                mixing: None,
                quadrature: None,
            }),
            RegularizerKind::ClDiscrete(m) => Some(RegularizerSpec {
                kind: SpecKind::ClDiscrete,
                lambda,
                n,
                atoms: Some(m.atoms().to_vec()),
                weights: Some(m.weights().to_vec()),
                mixing: None,
                quadrature: None,
            }),
            RegularizerKind::ClQuadrature(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizers::Penalty;

    #[test]
    fn parse_and_broadcast() {
        let spec: RegularizerSpec =
            serde_json::from_str(r#"{"kind":"cl-discrete","lambda":[2.0],"atoms":[1,4],"weights":[0.5,0.5]}"#).unwrap();
        let r = spec.build_with_dim(Some(4)).unwrap();
        assert_eq!(r.dim(), 4);
        assert_eq!(r.rates(), &[2.0; 4]);
        assert!(spec.build_with_dim(None).unwrap().dim() == 1);
    }

    #[test]
    fn missing_fields() {
        let spec: RegularizerSpec = serde_json::from_str(r#"{"kind":"cl-discrete","lambda":[1.0]}"#).unwrap();
        assert!(matches!(spec.build(), Err(Error::InvalidSpec(_))));
        let spec: RegularizerSpec = serde_json::from_str(r#"{"kind":"cl-quadrature","lambda":[1.0]}"#).unwrap();
        assert!(spec.build().is_err());
        assert!(serde_json::from_str::<RegularizerSpec>(r#"{"kind":"l2","lambda":[1.0]}"#).is_err());
    }

    #[test]
    fn dimension_conflicts() {
        let spec: RegularizerSpec = serde_json::from_str(r#"{"kind":"l1","lambda":[1.0,2.0]}"#).unwrap();
        assert!(matches!(spec.build_with_dim(Some(3)), Err(Error::DimensionMismatch(_))));
        assert!(spec.build_with_dim(Some(2)).is_ok());
    }

    #[test]
    fn quadrature_spec() {
        let spec: RegularizerSpec = serde_json::from_str(
            r#"{"kind":"cl-quadrature","lambda":[1.0],"n":2,
                "mixing":{"family":"bump","center":1.0,"width":1e-5},
                "quadrature":{"abs_tol":1e-12,"rel_tol":1e-10,"max_subdivisions":2000}}"#,
        )
        .unwrap();
        let r = spec.build().unwrap();
        assert!((r.component(1, 3.0).unwrap() - 3.0).abs() < 1e-6);
    }

    #[test]
    fn spec_roundtrip_through_regularizer() {
        let spec = RegularizerSpec::cl_discrete(1.5, 3, vec![1.0, 2.0], vec![0.25, 0.75]);
        let back = spec.build().unwrap().to_spec().unwrap();
        assert_eq!(back.build().unwrap().rates(), &[1.5; 3]);
        assert_eq!(back.atoms, spec.atoms);
    }
}
