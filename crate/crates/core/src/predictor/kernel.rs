use serde::{Deserialize, Serialize};

use crate::error::{Result, SspError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    #[default]
    Gaussian,
    Epanechnikov,
    Uniform,
}

impl KernelKind {
    /// Unscaled kernel density `K(u)`.
    pub fn density(self, u: f64) -> f64 {
        match self {
            KernelKind::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            KernelKind::Epanechnikov if u.abs() <= 1.0 => 0.75 * (1.0 - u * u),
            KernelKind::Uniform if u.abs() <= 1.0 => 0.5,
            _ => 0.0,
        }
    }

    pub fn is_compact(self) -> bool {
        !matches!(self, KernelKind::Gaussian)
    }
}

impl std::str::FromStr for KernelKind {
    type Err = SspError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "epanechnikov" => Ok(Self::Epanechnikov),
            "uniform" => Ok(Self::Uniform),
            other => Err(SspError::InvalidConfig(format!("unknown kernel '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, bandwidth: f64) -> Result<Self> {
        let k = Self { kind, bandwidth };
        k.validate()?;
        Ok(k)
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        Self::new(KernelKind::Gaussian, bandwidth)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidth > 0.0 && self.bandwidth.is_finite() {
            Ok(())
        } else {
            Err(SspError::InvalidConfig(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )))
        }
    }

    /// `K_h(d) = K(d / h) / h`.
    pub fn eval(&self, d: f64) -> f64 {
        self.kind.density(d / self.bandwidth) / self.bandwidth
    }
}
