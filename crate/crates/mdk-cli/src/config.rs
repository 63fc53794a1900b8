//! Optional JSON configuration loaded from the `MDK_CONFIG` environment
//! variable: extra environment presets, a custom gap-to-bandwidth model,
//! and verdict mask overrides.

use std::collections::BTreeMap;
use std::fs;

use anyhow::{Context, Result};
use serde::Deserialize;

use mdk_core::design::GapModel;
use mdk_core::metrics::{Environment, Propagation};

pub const CONFIG_ENV_VAR: &str = "MDK_CONFIG";

/// Pass/fail thresholds applied by the report command.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerdictMask {
    /// Reflection bound (dB) outside the rejected band; also the notch
    /// detection threshold.
    pub reflection_max_db: f64,
    /// Coupling bound (dB) over the full sweep.
    pub coupling_max_db: f64,
    /// Envelope-correlation bound over the full sweep.
    pub ecc_max: f64,
    /// TARC envelope bound (dB) outside the rejected band.
    pub tarc_max_db: f64,
    /// Channel-capacity-loss bound (bits/s/Hz) outside the rejected band.
    pub ccl_max_bits: f64,
    /// Declared rejected band (GHz). When set it replaces the detected
    /// bands in the out-of-notch masking.
    pub declared_notch_ghz: Option<(f64, f64)>,
}

impl Default for VerdictMask {
    fn default() -> Self {
        VerdictMask {
            reflection_max_db: -10.0,
            coupling_max_db: -17.0,
            ecc_max: 0.5,
            tarc_max_db: -8.0,
            ccl_max_bits: 0.5,
            declared_notch_ghz: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum EnvironmentSpec {
    Uniform {
        #[serde(default)]
        xpr_db: f64,
    },
    Gaussian {
        #[serde(default)]
        xpr_db: f64,
        #[serde(default = "default_mean")]
        m_v_deg: f64,
        #[serde(default = "default_mean")]
        m_h_deg: f64,
        #[serde(default = "default_spread")]
        sigma_v_deg: f64,
        #[serde(default = "default_spread")]
        sigma_h_deg: f64,
    },
}

fn default_mean() -> f64 {
    mdk_core::metrics::DEFAULT_MEAN_ELEVATION_DEG
}

fn default_spread() -> f64 {
    mdk_core::metrics::DEFAULT_SPREAD_DEG
}

impl EnvironmentSpec {
    fn build(&self) -> Result<Environment> {
        let env = match *self {
            EnvironmentSpec::Uniform { xpr_db } => Environment::new(Propagation::Uniform, xpr_db)?,
            EnvironmentSpec::Gaussian {
                xpr_db,
                m_v_deg,
                m_h_deg,
                sigma_v_deg,
                sigma_h_deg,
            } => Environment::new(
                Propagation::Gaussian {
                    m_v_deg,
                    m_h_deg,
                    sigma_v_deg,
                    sigma_h_deg,
                },
                xpr_db,
            )?,
        };
        Ok(env)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    environments: BTreeMap<String, EnvironmentSpec>,
    #[serde(default)]
    gap_model: Option<GapModel>,
    #[serde(default)]
    verdict_mask: Option<VerdictMask>,
}

/// Resolved toolkit configuration (defaults plus `MDK_CONFIG` overrides).
#[derive(Debug, Clone)]
pub struct Config {
    environments: BTreeMap<String, Environment>,
    pub gap_model: GapModel,
    pub verdict_mask: VerdictMask,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            environments: BTreeMap::new(),
            gap_model: GapModel::default_calibration(),
            verdict_mask: VerdictMask::default(),
        }
    }
}

impl Config {
    /// Load from `MDK_CONFIG` when set, otherwise defaults.
    pub fn from_env() -> Result<Self> {
        match std::env::var(CONFIG_ENV_VAR) {
            Ok(path) if !path.is_empty() => Self::from_file(&path),
            _ => Ok(Config::default()),
        }
    }

    pub fn from_file(path: &str) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {path}"))?;
        let file: ConfigFile =
            serde_json::from_str(&text).with_context(|| format!("parsing config {path}"))?;
        let mut environments = BTreeMap::new();
        for (name, spec) in &file.environments {
            let env = spec
                .build()
                .with_context(|| format!("config environment '{name}'"))?;
            environments.insert(name.clone(), env);
        }
        let gap_model = match file.gap_model {
            Some(m) => GapModel::new(m.points).context("config gap_model")?,
            None => GapModel::default_calibration(),
        };
        Ok(Config {
            environments,
            gap_model,
            verdict_mask: file.verdict_mask.unwrap_or_default(),
        })
    }

    /// Resolve an environment by name: config-defined names take precedence
    /// over the built-in presets (uniform, indoor, outdoor).
    pub fn environment(&self, name: &str) -> Result<Environment> {
        if let Some(env) = self.environments.get(name) {
            return Ok(*env);
        }
        Ok(Environment::preset(name)?)
    }
}
