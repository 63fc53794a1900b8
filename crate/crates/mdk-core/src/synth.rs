//! Synthetic inputs: analytic Hertzian-dipole patterns and notched
//! multi-port networks. These serve as oracles for the metric computations
//! and as demo datasets for the CLI.

use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;
use crate::farfield::{FarFieldPattern, PatternGrid};
use crate::touchstone::NetworkData;

/// Reflection level of the matched band, dB.
pub const IN_BAND_LEVEL_DB: f64 = -15.0;

/// Port-to-port coupling of the synthetic network, dB (below a -17 dB
/// isolation mask with margin).
pub const COUPLING_DB: f64 = -20.0;

/// Orientation of an ideal (Hertzian) dipole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipoleAxis {
    X,
    Y,
    Z,
}

impl FromStr for DipoleAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(DipoleAxis::X),
            "y" => Ok(DipoleAxis::Y),
            "z" => Ok(DipoleAxis::Z),
            other => Err(Error::invalid(format!("unknown dipole axis '{other}'"))),
        }
    }
}

/// An ideal dipole at a single frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleSpec {
    pub axis: DipoleAxis,
    pub freq_hz: f64,
}

/// Analytic far field of an ideal dipole, sampled on `grid`.
///
/// z-axis: E_theta = sin(theta), E_phi = 0. The x and y orientations are the
/// standard rotations of that field:
/// x: E_theta = cos(theta)cos(phi), E_phi = -sin(phi);
/// y: E_theta = cos(theta)sin(phi), E_phi = cos(phi).
/// Samples are real-valued; every metric downstream is phase-invariant.
pub fn hertzian_dipole(spec: &DipoleSpec, grid: &PatternGrid) -> Result<FarFieldPattern, Error> {
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let theta: Vec<f64> = grid.theta_deg().iter().map(|t| t.to_radians()).collect();
    let phi: Vec<f64> = grid.phi_deg().iter().map(|p| p.to_radians()).collect();
    let real = |v: f64| Complex64::new(v, 0.0);
    let (e_theta, e_phi) = match spec.axis {
        DipoleAxis::Z => (
            DMatrix::from_fn(nt, np, |i, _| real(theta[i].sin())),
            DMatrix::zeros(nt, np),
        ),
        DipoleAxis::X => (
            DMatrix::from_fn(nt, np, |i, j| real(theta[i].cos() * phi[j].cos())),
            DMatrix::from_fn(nt, np, |_, j| real(-phi[j].sin())),
        ),
        DipoleAxis::Y => (
            DMatrix::from_fn(nt, np, |i, j| real(theta[i].cos() * phi[j].sin())),
            DMatrix::from_fn(nt, np, |_, j| real(phi[j].cos())),
        ),
    };
    FarFieldPattern::new(spec.freq_hz, grid.clone(), e_theta, e_phi)
}

/// Rejected-band descriptor for the synthetic network: a resonance at
/// `f_center_hz` whose reflection rises to `depth_db` inside the window
/// `f_center +- bandwidth/2`, within a matched band `band_hz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotchModel {
    f_center_hz: f64,
    bandwidth_hz: f64,
    depth_db: f64,
    band_hz: (f64, f64),
}

impl NotchModel {
    pub fn new(
        f_center_hz: f64,
        bandwidth_hz: f64,
        depth_db: f64,
        band_hz: (f64, f64),
    ) -> Result<Self, Error> {
        if !(band_hz.0 > 0.0 && band_hz.0 < f_center_hz && f_center_hz < band_hz.1) {
            return Err(Error::invalid(format!(
                "notch center {f_center_hz} Hz must lie inside the matched band ({}, {}) Hz",
                band_hz.0, band_hz.1
            )));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::invalid("notch bandwidth must be > 0"));
        }
        if !(depth_db.is_finite() && depth_db > -10.0) {
            return Err(Error::invalid(format!(
                "notch depth {depth_db} dB must be above -10 dB to rise out of the matched level"
            )));
        }
        Ok(NotchModel {
            f_center_hz,
            bandwidth_hz,
            depth_db,
            band_hz,
        })
    }

    pub fn f_center_hz(&self) -> f64 {
        self.f_center_hz
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn depth_db(&self) -> f64 {
        self.depth_db
    }

    pub fn band_hz(&self) -> (f64, f64) {
        self.band_hz
    }

    /// Reflection magnitude (linear) at `f`: the -15 dB matched level
    /// outside the notch window, and inside it a Lorentzian resonance
    /// peaking at `depth_db` with half-power width equal to the bandwidth.
    pub fn reflection_mag(&self, f: f64) -> f64 {
        let floor = 10f64.powf(IN_BAND_LEVEL_DB / 20.0);
        let half_bw = self.bandwidth_hz / 2.0;
        if (f - self.f_center_hz).abs() > half_bw {
            return floor;
        }
        let gamma0 = 10f64.powf(self.depth_db / 20.0);
        let x = (f - self.f_center_hz) / half_bw;
        let lorentzian = gamma0 / (1.0 + x * x).sqrt();
        lorentzian.max(floor)
    }
}

/// Synthetic N-port network mimicking a band-notched multi-antenna module:
/// identical diagonal reflections from `model`, constant real coupling of
/// -20 dB on every off-diagonal entry (reciprocal and symmetric).
///
/// Passivity note: the largest singular value at the notch center is
/// `10^(depth_db/20) + (n_ports - 1) * 10^(COUPLING_DB/20)`, so the output
/// passes a passivity screen only while that sum stays at or below one
/// (2 ports at depth -1 dB; more ports need a shallower notch).
pub fn notched_monopole_sparams(
    model: &NotchModel,
    freqs: &[f64],
    n_ports: usize,
) -> Result<NetworkData, Error> {
    if n_ports < 1 {
        return Err(Error::invalid("port count must be >= 1"));
    }
    if freqs.is_empty() {
        return Err(Error::invalid("frequency list is empty"));
    }
    let coupling = Complex64::new(10f64.powf(COUPLING_DB / 20.0), 0.0);
    let mats: Vec<DMatrix<Complex64>> = freqs
        .iter()
        .map(|&f| {
            let refl = Complex64::new(model.reflection_mag(f), 0.0);
            DMatrix::from_fn(
                n_ports,
                n_ports,
                |i, j| if i == j { refl } else { coupling },
            )
        })
        .collect();
    NetworkData::new(n_ports, 50.0, freqs.to_vec(), mats)
}

/// Inclusive linear frequency sweep with `points >= 2` samples.
pub fn linspace(f_start: f64, f_stop: f64, points: usize) -> Result<Vec<f64>, Error> {
    if points < 2 {
        return Err(Error::invalid("sweep needs at least 2 points"));
    }
    if !(f_start.is_finite() && f_stop.is_finite() && f_start > 0.0 && f_stop > f_start) {
        return Err(Error::invalid(format!(
            "bad sweep bounds [{f_start}, {f_stop}] Hz"
        )));
    }
    let step = (f_stop - f_start) / (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            if k + 1 == points {
                f_stop
            } else {
                f_start + k as f64 * step
            }
        })
        .collect())
}
