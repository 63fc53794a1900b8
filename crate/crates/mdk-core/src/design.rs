//! Band-notch design calculators: quarter-wave stub length, U-slot
//! dimensions, the inverse length-to-frequency map, and an empirical
//! gap-to-bandwidth model.
//!
//! The guided quarter wavelength uses sqrt(eps_r) directly, so predicted
//! dimensions land within a few percent of fabricated layouts that see an
//! effective permittivity below the bulk value.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::SPEED_OF_LIGHT;

/// A quarter-wave stub resonant at `f0_hz` on a substrate with relative
/// permittivity `eps_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StubSpec {
    pub f0_hz: f64,
    pub eps_r: f64,
    pub length_m: f64,
}

impl StubSpec {
    pub fn for_frequency(f0_hz: f64, eps_r: f64) -> Result<Self, Error> {
        Ok(StubSpec {
            f0_hz,
            eps_r,
            length_m: stub_length(f0_hz, eps_r)?,
        })
    }
}

/// U-slot dimensions resonant at `f0_hz`: a quarter-wave arm and an
/// eighth-wave gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotSpec {
    pub f0_hz: f64,
    pub eps_r: f64,
    /// Quarter-wave slot arm, meters.
    pub l5_m: f64,
    /// Eighth-wave slot gap, meters; always half of `l5_m`.
    pub g_m: f64,
}

fn check_domain(f0_hz: f64, eps_r: f64) -> Result<(), Error> {
    if !(f0_hz.is_finite() && f0_hz > 0.0) {
        return Err(Error::invalid(format!("frequency {f0_hz} Hz must be > 0")));
    }
    if !(eps_r.is_finite() && eps_r >= 1.0) {
        return Err(Error::invalid(format!(
            "relative permittivity {eps_r} must be >= 1"
        )));
    }
    Ok(())
}

/// Quarter-wave stub length for a notch at `f0_hz`:
/// L = lambda_g/4 = c / (4 * f0 * sqrt(eps_r)).
pub fn stub_length(f0_hz: f64, eps_r: f64) -> Result<f64, Error> {
    check_domain(f0_hz, eps_r)?;
    Ok(SPEED_OF_LIGHT / (4.0 * f0_hz * eps_r.sqrt()))
}

/// Resonance frequency of a quarter-wave stub of `length_m`; exact inverse
/// of [`stub_length`].
pub fn notch_center(length_m: f64, eps_r: f64) -> Result<f64, Error> {
    if !(length_m.is_finite() && length_m > 0.0) {
        return Err(Error::invalid(format!("length {length_m} m must be > 0")));
    }
    if !(eps_r.is_finite() && eps_r >= 1.0) {
        return Err(Error::invalid(format!(
            "relative permittivity {eps_r} must be >= 1"
        )));
    }
    Ok(SPEED_OF_LIGHT / (4.0 * length_m * eps_r.sqrt()))
}

/// U-slot dimensions for a notch at `f0_hz`: arm l5 = lambda_g/4 and gap
/// g = lambda_g/8 = l5/2.
pub fn slot_dimensions(f0_hz: f64, eps_r: f64) -> Result<SlotSpec, Error> {
    let l5 = stub_length(f0_hz, eps_r)?;
    Ok(SlotSpec {
        f0_hz,
        eps_r,
        l5_m: l5,
        g_m: l5 / 2.0,
    })
}

/// One measured calibration point of the gap model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub gap_mm: f64,
    pub bw_ghz: f64,
    pub f_low_ghz: f64,
    pub f_high_ghz: f64,
}

/// Piecewise-linear map from stub-to-ground gap to rejection bandwidth and
/// band edges, calibrated by at least two measured points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapModel {
    pub points: Vec<GapPoint>,
}

/// Interpolated rejection band prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPrediction {
    pub bw_ghz: f64,
    pub f_low_ghz: f64,
    pub f_high_ghz: f64,
}

impl GapModel {
    pub fn new(points: Vec<GapPoint>) -> Result<Self, Error> {
        if points.len() < 2 {
            return Err(Error::invalid(
                "gap model needs at least two calibration points",
            ));
        }
        for w in points.windows(2) {
            if w[1].gap_mm <= w[0].gap_mm {
                return Err(Error::invalid(
                    "calibration gaps must be strictly increasing",
                ));
            }
        }
        Ok(GapModel { points })
    }

    /// Ships with the two measured calibration points: 0.25 mm -> 1.0 GHz
    /// (5.25-6.25 GHz) and 1.5 mm -> 2.6 GHz (3.7-6.3 GHz).
    pub fn default_calibration() -> Self {
        GapModel {
            points: vec![
                GapPoint {
                    gap_mm: 0.25,
                    bw_ghz: 1.0,
                    f_low_ghz: 5.25,
                    f_high_ghz: 6.25,
                },
                GapPoint {
                    gap_mm: 1.5,
                    bw_ghz: 2.6,
                    f_low_ghz: 3.7,
                    f_high_ghz: 6.3,
                },
            ],
        }
    }

    /// Load from a JSON document `{"points": [{gap_mm, bw_ghz, f_low_ghz,
    /// f_high_ghz}, ...]}`.
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let model: GapModel = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("bad gap model JSON: {e}")))?;
        GapModel::new(model.points)
    }

    /// Predict the rejection band at `gap_mm` by piecewise-linear
    /// interpolation. No extrapolation outside the calibration span.
    pub fn interpolate(&self, gap_mm: f64) -> Result<GapPrediction, Error> {
        let first = self.points.first().unwrap();
        let last = self.points.last().unwrap();
        if !(gap_mm >= first.gap_mm && gap_mm <= last.gap_mm) {
            return Err(Error::OutOfRange(format!(
                "gap {gap_mm} mm outside calibration span [{}, {}] mm",
                first.gap_mm, last.gap_mm
            )));
        }
        let seg = self
            .points
            .windows(2)
            .find(|w| gap_mm <= w[1].gap_mm)
            .unwrap();
        let (a, b) = (seg[0], seg[1]);
        let t = (gap_mm - a.gap_mm) / (b.gap_mm - a.gap_mm);
        let lerp = |x: f64, y: f64| x * (1.0 - t) + y * t;
        Ok(GapPrediction {
            bw_ghz: lerp(a.bw_ghz, b.bw_ghz),
            f_low_ghz: lerp(a.f_low_ghz, b.f_low_ghz),
            f_high_ghz: lerp(a.f_high_ghz, b.f_high_ghz),
        })
    }
}
