//! Free constants of the curve builders, stored as flat `key = value` TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub m: f64,
    /// Leg-1 factor of the John curve.
    pub eps0: f64,
    /// Cone aperture used for per-time pass/fail.
    pub lambda_target: f64,
    pub mu_split: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "M_big")]
    pub m_big: f64,
    /// Characteristic points satisfy `|ZF(z)| ≤ char_tol |z|^{2m+1}`.
    pub char_tol: f64,
    pub quad_tol: f64,
    pub ode_step: f64,
    /// `δ⁻¹` bound on `diam(γ) / d̂(p, q)` for uniform curves.
    pub inv_delta: f64,
    pub seed: u64,
    /// Skips the `H μ_split ≤ ε₀/2` check.
    pub allow_unsafe: bool,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            eps0: 0.05,
            lambda_target: 0.01,
            mu_split: 0.1,
            h: 0.25,
            m_big: 10.0,
            char_tol: 1e-10,
            quad_tol: 1e-4,
            ode_step: 1e-3,
            inv_delta: 100.0,
            seed: 0,
            allow_unsafe: false,
        }
    }
}

impl CalibrationConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.m)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        let positive = [
            ("eps0", self.eps0),
            ("lambda_target", self.lambda_target),
            ("mu_split", self.mu_split),
            ("H", self.h),
            ("M_big", self.m_big),
            ("char_tol", self.char_tol),
            ("quad_tol", self.quad_tol),
            ("ode_step", self.ode_step),
            ("inv_delta", self.inv_delta),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.allow_unsafe && self.h * self.mu_split > 0.5 * self.eps0 * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "H * mu_split = {} exceeds eps0 / 2 = {} (set allow_unsafe = true to override)",
                self.h * self.mu_split,
                0.5 * self.eps0
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat struct serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
