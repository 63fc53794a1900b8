//! Frequency-indexed metric results and their CSV/JSON serializations.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Identity of a computed metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    /// Envelope correlation from far-field patterns.
    EccFf,
    /// Envelope correlation from S-parameters.
    EccSp,
    /// Total active reflection coefficient, dB.
    TarcDb,
    /// Channel capacity loss, bits/s/Hz.
    CclBits,
    /// Mean effective gain, dB.
    MegDb,
    /// Ratio of two mean effective gains, dimensionless.
    MegRatio,
    /// An S-parameter magnitude in dB (reflection or coupling).
    SDb,
}

impl MetricId {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::EccFf => "ecc_ff",
            MetricId::EccSp => "ecc_sp",
            MetricId::TarcDb => "tarc_db",
            MetricId::CclBits => "ccl_bits",
            MetricId::MegDb => "meg_db",
            MetricId::MegRatio => "meg_ratio",
            MetricId::SDb => "s_db",
        }
    }
}

/// Descriptor attached to a [`MetricSeries`]: which ports/pair/environment
/// produced it, any sampling parameters, and indices of values flagged as
/// numerically unreliable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ports: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    /// Seed of the Monte Carlo phase sampler, when one was used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_samples: Option<usize>,
    /// Indices (into `freqs`) whose values are numerically unreliable.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unreliable: Vec<usize>,
}

/// A scalar metric evaluated on a frequency sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub metric_id: MetricId,
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: MetricMeta,
}

impl MetricSeries {
    pub fn new(
        metric_id: MetricId,
        freqs: Vec<f64>,
        values: Vec<f64>,
        meta: MetricMeta,
    ) -> Result<Self, Error> {
        if freqs.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} frequencies but {} values",
                freqs.len(),
                values.len()
            )));
        }
        if freqs.is_empty() {
            return Err(Error::invalid("metric series is empty"));
        }
        for k in 1..freqs.len() {
            if freqs[k] <= freqs[k - 1] {
                return Err(Error::invalid(format!(
                    "series frequencies not strictly increasing at #{}",
                    k + 1
                )));
            }
        }
        Ok(MetricSeries {
            metric_id,
            freqs,
            values,
            meta,
        })
    }

    pub fn is_reliable(&self) -> bool {
        self.meta.unreliable.is_empty()
    }

    /// `freq_hz,value` CSV with 9 significant digits per field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,value\n");
        for (f, v) in self.freqs.iter().zip(&self.values) {
            out.push_str(&format!("{f:.8e},{v:.8e}\n"));
        }
        out
    }

    /// JSON object `{metric_id, meta, points}` with values rounded to 9
    /// significant digits.
    pub fn to_json(&self) -> serde_json::Value {
        let points: Vec<serde_json::Value> = self
            .freqs
            .iter()
            .zip(&self.values)
            .map(|(f, v)| {
                serde_json::json!({
                    "freq_hz": round_sig9(*f),
                    "value": round_sig9(*v),
                })
            })
            .collect();
        serde_json::json!({
            "metric_id": self.metric_id.as_str(),
            "meta": serde_json::to_value(&self.meta).expect("meta serializes"),
            "points": points,
        })
    }
}

/// Round to 9 significant digits; keeps emitted numbers stable across runs
/// and platforms.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.8e}")
        .parse()
        .expect("round-trip of formatted float")
}
