//! Statistical propagation environments: cross-polarization power ratio and
//! per-polarization angular power densities.

use crate::error::Error;
use crate::farfield::PatternGrid;

/// Default elevation of the gaussian density peak above the horizon, degrees.
pub const DEFAULT_MEAN_ELEVATION_DEG: f64 = 10.0;

/// Default angular spread of the gaussian density, degrees.
pub const DEFAULT_SPREAD_DEG: f64 = 15.0;

/// Indoor preset XPR, dB.
pub const INDOOR_XPR_DB: f64 = 5.0;

/// Outdoor preset XPR, dB.
pub const OUTDOOR_XPR_DB: f64 = 1.0;

/// Shape of the incident angular power densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagation {
    /// P_theta = P_phi = 1/(4*pi), balanced over the full sphere.
    Uniform,
    /// Gaussian in elevation per polarization, uniform in azimuth:
    /// P ~ exp(-(theta - (90 - m))^2 / (2*sigma^2)), normalized numerically
    /// on the evaluation grid. Angles in degrees; `m` is measured up from
    /// the horizon.
    Gaussian {
        m_v_deg: f64,
        m_h_deg: f64,
        sigma_v_deg: f64,
        sigma_h_deg: f64,
    },
}

/// A propagation environment: density shape plus cross-polarization power
/// ratio (vertical over horizontal incident power).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    pub kind: Propagation,
    pub xpr_db: f64,
}

impl Environment {
    pub fn new(kind: Propagation, xpr_db: f64) -> Result<Self, Error> {
        if !xpr_db.is_finite() {
            return Err(Error::invalid("XPR must be finite"));
        }
        if let Propagation::Gaussian {
            sigma_v_deg,
            sigma_h_deg,
            ..
        } = kind
        {
            if !(sigma_v_deg > 0.0 && sigma_h_deg > 0.0) {
                return Err(Error::invalid("gaussian spreads must be > 0"));
            }
        }
        Ok(Environment { kind, xpr_db })
    }

    /// Isotropic scattering with balanced polarization (XPR 0 dB).
    pub fn uniform() -> Self {
        Environment {
            kind: Propagation::Uniform,
            xpr_db: 0.0,
        }
    }

    fn gaussian_defaults(xpr_db: f64) -> Self {
        Environment {
            kind: Propagation::Gaussian {
                m_v_deg: DEFAULT_MEAN_ELEVATION_DEG,
                m_h_deg: DEFAULT_MEAN_ELEVATION_DEG,
                sigma_v_deg: DEFAULT_SPREAD_DEG,
                sigma_h_deg: DEFAULT_SPREAD_DEG,
            },
            xpr_db,
        }
    }

    /// Indoor preset: gaussian densities, XPR 5 dB.
    pub fn indoor() -> Self {
        Self::gaussian_defaults(INDOOR_XPR_DB)
    }

    /// Outdoor preset: gaussian densities, XPR 1 dB.
    pub fn outdoor() -> Self {
        Self::gaussian_defaults(OUTDOOR_XPR_DB)
    }

    /// Built-in preset by name.
    pub fn preset(name: &str) -> Result<Self, Error> {
        match name.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::uniform()),
            "indoor" => Ok(Self::indoor()),
            "outdoor" => Ok(Self::outdoor()),
            other => Err(Error::invalid(format!(
                "unknown environment preset '{other}' (built-ins: uniform, indoor, outdoor)"
            ))),
        }
    }

    pub fn xpr_linear(&self) -> f64 {
        10f64.powf(self.xpr_db / 10.0)
    }

    /// Sample P_theta and P_phi along the grid's theta axis (densities have
    /// no azimuth dependence). Each density integrates to 1 over the sphere:
    /// analytically for the uniform case, numerically on `grid` for the
    /// gaussian case.
    pub fn densities(&self, grid: &PatternGrid) -> (Vec<f64>, Vec<f64>) {
        match self.kind {
            Propagation::Uniform => {
                let v = 1.0 / (4.0 * std::f64::consts::PI);
                (vec![v; grid.n_theta()], vec![v; grid.n_theta()])
            }
            Propagation::Gaussian {
                m_v_deg,
                m_h_deg,
                sigma_v_deg,
                sigma_h_deg,
            } => (
                normalized_gaussian(grid, m_v_deg, sigma_v_deg),
                normalized_gaussian(grid, m_h_deg, sigma_h_deg),
            ),
        }
    }

    /// Short descriptor for output metadata.
    pub fn describe(&self) -> String {
        match self.kind {
            Propagation::Uniform => format!("uniform,xpr_db={}", self.xpr_db),
            Propagation::Gaussian {
                m_v_deg,
                m_h_deg,
                sigma_v_deg,
                sigma_h_deg,
            } => format!(
                "gaussian,xpr_db={},m_v={},m_h={},sigma_v={},sigma_h={}",
                self.xpr_db, m_v_deg, m_h_deg, sigma_v_deg, sigma_h_deg
            ),
        }
    }
}

fn normalized_gaussian(grid: &PatternGrid, mean_elev_deg: f64, sigma_deg: f64) -> Vec<f64> {
    // Peak at polar angle 90 - m (elevation measured from the horizon).
    let theta0 = 90.0 - mean_elev_deg;
    let raw: Vec<f64> = grid
        .theta_deg()
        .iter()
        .map(|&th| {
            let d = (th - theta0) / sigma_deg;
            (-0.5 * d * d).exp()
        })
        .collect();
    let total = grid.integrate(|i, _| raw[i]);
    raw.iter().map(|v| v / total).collect()
}
