//! The `report` command: evaluates a multi-port dataset against the verdict
//! mask and emits a JSON bundle of metrics, detected rejected bands, and
//! pass/fail verdicts.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use mdk_core::farfield::{parse_pattern_csv, FarFieldPattern};
use mdk_core::metrics::{
    ccl_pair, detect_notch, ecc_farfield, meg_ratio, round_sig9, s_magnitude_db,
    tarc_envelope_point, Environment, MetricId, MetricMeta, MetricSeries, NotchBand, TARC_MC_SEED,
};
use mdk_core::touchstone::{parse_touchstone, NetworkData};

use crate::config::Config;

#[derive(Debug, Serialize)]
pub struct InputsDesc {
    pub net: String,
    pub ports: usize,
    pub freq_points: usize,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub patterns: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct PortNotch {
    pub port: usize,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub center_hz: f64,
    pub worst_level_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Serialize)]
pub struct Verdict {
    pub check: &'static str,
    pub status: VerdictStatus,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_freq_hz: Option<f64>,
    /// Indices into the bundle's `metrics` array this verdict evaluated.
    pub metric_indices: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct ReportBundle {
    pub inputs: InputsDesc,
    pub notches: Vec<PortNotch>,
    pub verdicts: Vec<Verdict>,
    /// Serialized [`MetricSeries`] objects ({metric_id, meta, points}).
    pub metrics: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportStatus {
    AllPass,
    VerdictFailed,
    NumericalFlag,
}

pub struct ReportOptions {
    pub net_path: String,
    pub patterns_dir: Option<String>,
    pub env_name: String,
    pub phase_samples: usize,
}

/// Declared port count from the `.sNp` file-name convention.
pub fn ports_from_extension(path: &str) -> Result<usize> {
    let ext = Path::new(path)
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("");
    let lower = ext.to_ascii_lowercase();
    let digits: String = lower
        .strip_prefix('s')
        .and_then(|rest| rest.strip_suffix('p'))
        .map(|d| d.to_string())
        .unwrap_or_default();
    let n: usize = digits.parse().map_err(|_| {
        anyhow::anyhow!("cannot infer port count from extension '.{ext}' (expected .sNp)")
    })?;
    if n == 0 {
        bail!("port count in '.{ext}' must be >= 1");
    }
    Ok(n)
}

pub fn load_network(path: &str) -> Result<NetworkData> {
    let ports = ports_from_extension(path)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    parse_touchstone(&text, ports).with_context(|| path.to_string())
}

fn load_patterns(dir: &str) -> Result<Vec<(String, Vec<FarFieldPattern>)>> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .with_context(|| format!("reading patterns directory {dir}"))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.to_ascii_lowercase().ends_with(".ffp"))
        .collect();
    names.sort();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let path = format!("{dir}/{name}");
        let text = fs::read_to_string(&path).with_context(|| format!("reading {path}"))?;
        let patterns = parse_pattern_csv(&text).with_context(|| path.clone())?;
        out.push((name, patterns));
    }
    Ok(out)
}

fn in_any_band(f: f64, bands: &[(f64, f64)]) -> bool {
    bands.iter().any(|&(lo, hi)| f >= lo && f <= hi)
}

/// Worst (largest) value at frequencies outside the masked bands.
fn worst_outside(series: &MetricSeries, bands: &[(f64, f64)]) -> Option<(f64, f64)> {
    series
        .freqs
        .iter()
        .zip(&series.values)
        .filter(|(f, _)| !in_any_band(**f, bands))
        .map(|(f, v)| (*v, *f))
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
}

/// Worst value over every frequency.
fn worst_overall(series: &MetricSeries) -> Option<(f64, f64)> {
    worst_outside(series, &[])
}

/// TARC envelope with per-frequency evaluations fanned out over the current
/// rayon pool; identical to the serial form because every frequency uses its
/// own seeded substream.
fn tarc_envelope_parallel(net: &NetworkData, n_phase_samples: usize) -> Result<MetricSeries> {
    let values: Vec<f64> = net
        .matrices()
        .par_iter()
        .enumerate()
        .map(|(k, m)| tarc_envelope_point(m, n_phase_samples, k as u64))
        .collect::<Result<_, _>>()?;
    let monte_carlo = net.port_count() > 4;
    Ok(MetricSeries::new(
        MetricId::TarcDb,
        net.freqs().to_vec(),
        values,
        MetricMeta {
            seed: monte_carlo.then_some(TARC_MC_SEED),
            phase_samples: Some(n_phase_samples),
            ..MetricMeta::default()
        },
    )?)
}

pub fn build_report(cfg: &Config, opts: &ReportOptions) -> Result<(ReportBundle, ReportStatus)> {
    let mask = &cfg.verdict_mask;
    let net = load_network(&opts.net_path)?;
    let n = net.port_count();
    let env = cfg.environment(&opts.env_name)?;

    let mut metrics: Vec<MetricSeries> = Vec::new();
    let mut verdicts: Vec<Verdict> = Vec::new();

    // Reflections and per-port rejected bands.
    let mut reflection_idx = Vec::new();
    let mut port_bands: Vec<Vec<NotchBand>> = Vec::new();
    let mut notches = Vec::new();
    for port in 1..=n {
        let series = s_magnitude_db(&net, port, port)?;
        let bands = detect_notch(&series, mask.reflection_max_db)?;
        for b in &bands {
            notches.push(PortNotch {
                port,
                f_low_hz: b.f_low_hz,
                f_high_hz: b.f_high_hz,
                center_hz: b.center_hz,
                worst_level_db: b.worst_level_db,
            });
        }
        reflection_idx.push(metrics.len());
        metrics.push(series);
        port_bands.push(bands);
    }

    let declared: Option<(f64, f64)> = mask.declared_notch_ghz.map(|(lo, hi)| (lo * 1e9, hi * 1e9));
    let band_union: Vec<(f64, f64)> = match declared {
        Some(b) => vec![b],
        None => port_bands
            .iter()
            .flatten()
            .map(|b| (b.f_low_hz, b.f_high_hz))
            .collect(),
    };

    // Reflection verdict: each port masked by its own detected bands (or the
    // declared band).
    let mut refl_worst: Option<(f64, f64)> = None;
    for (k, idx) in reflection_idx.iter().enumerate() {
        let bands: Vec<(f64, f64)> = match declared {
            Some(b) => vec![b],
            None => port_bands[k]
                .iter()
                .map(|b| (b.f_low_hz, b.f_high_hz))
                .collect(),
        };
        if let Some(w) = worst_outside(&metrics[*idx], &bands) {
            if refl_worst.is_none_or(|cur| w.0 > cur.0) {
                refl_worst = Some(w);
            }
        }
    }
    verdicts.push(threshold_verdict(
        "reflection",
        mask.reflection_max_db,
        refl_worst,
        reflection_idx.clone(),
    ));

    // Couplings, checked over the full sweep.
    let mut coupling_idx = Vec::new();
    let mut coupling_worst: Option<(f64, f64)> = None;
    for i in 1..=n {
        for j in (i + 1)..=n {
            let series = s_magnitude_db(&net, i, j)?;
            if let Some(w) = worst_overall(&series) {
                if coupling_worst.is_none_or(|cur| w.0 > cur.0) {
                    coupling_worst = Some(w);
                }
            }
            coupling_idx.push(metrics.len());
            metrics.push(series);
        }
    }
    verdicts.push(threshold_verdict(
        "coupling",
        mask.coupling_max_db,
        coupling_worst,
        coupling_idx,
    ));

    // TARC envelope, masked outside the rejected band.
    let tarc_series = tarc_envelope_parallel(&net, opts.phase_samples)?;
    let tarc_worst = worst_outside(&tarc_series, &band_union);
    let tarc_idx = metrics.len();
    metrics.push(tarc_series);
    verdicts.push(threshold_verdict(
        "tarc",
        mask.tarc_max_db,
        tarc_worst,
        vec![tarc_idx],
    ));

    // Pairwise CCL, masked outside the rejected band.
    let mut ccl_idx = Vec::new();
    let mut ccl_worst: Option<(f64, f64)> = None;
    for i in 1..=n {
        for j in (i + 1)..=n {
            let series = ccl_pair(&net, i, j)?;
            if let Some(w) = worst_outside(&series, &band_union) {
                if ccl_worst.is_none_or(|cur| w.0 > cur.0) {
                    ccl_worst = Some(w);
                }
            }
            ccl_idx.push(metrics.len());
            metrics.push(series);
        }
    }
    verdicts.push(threshold_verdict(
        "ccl",
        mask.ccl_max_bits,
        ccl_worst,
        ccl_idx,
    ));

    // Far-field ECC and MEG ratios, when patterns are supplied.
    let patterns = match &opts.patterns_dir {
        Some(dir) => load_patterns(dir)?,
        None => Vec::new(),
    };
    let mut pattern_names: Vec<String> = patterns.iter().map(|(n, _)| n.clone()).collect();
    if patterns.is_empty() {
        verdicts.push(Verdict {
            check: "ecc_ff",
            status: VerdictStatus::Skipped,
            threshold: mask.ecc_max,
            worst_value: None,
            worst_freq_hz: None,
            metric_indices: vec![],
        });
    } else {
        if patterns.len() != n {
            bail!(
                "{} pattern files for a {}-port network (one .ffp per port required)",
                patterns.len(),
                n
            );
        }
        let mut ecc_idx = Vec::new();
        let mut ecc_worst: Option<(f64, f64)> = None;
        let mut ratio_series = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let (ecc, ratio) =
                    pattern_pair_series(&patterns[a], &patterns[b], (a + 1, b + 1), &env)?;
                if let Some(w) = worst_overall(&ecc) {
                    if ecc_worst.is_none_or(|cur| w.0 > cur.0) {
                        ecc_worst = Some(w);
                    }
                }
                ecc_idx.push(metrics.len());
                metrics.push(ecc);
                ratio_series.push(ratio);
            }
        }
        verdicts.push(threshold_verdict(
            "ecc_ff",
            mask.ecc_max,
            ecc_worst,
            ecc_idx,
        ));
        metrics.extend(ratio_series);
    }

    let status = if verdicts.iter().any(|v| v.status == VerdictStatus::Fail) {
        ReportStatus::VerdictFailed
    } else if metrics.iter().any(|s| !s.is_reliable()) {
        ReportStatus::NumericalFlag
    } else {
        ReportStatus::AllPass
    };

    let bundle = ReportBundle {
        inputs: InputsDesc {
            net: opts.net_path.clone(),
            ports: n,
            freq_points: net.freqs().len(),
            f_min_hz: round_sig9(net.freqs()[0]),
            f_max_hz: round_sig9(*net.freqs().last().unwrap()),
            patterns: std::mem::take(&mut pattern_names),
        },
        notches: notches
            .into_iter()
            .map(|b| PortNotch {
                port: b.port,
                f_low_hz: round_sig9(b.f_low_hz),
                f_high_hz: round_sig9(b.f_high_hz),
                center_hz: round_sig9(b.center_hz),
                worst_level_db: round_sig9(b.worst_level_db),
            })
            .collect(),
        verdicts: verdicts
            .into_iter()
            .map(|v| Verdict {
                worst_value: v.worst_value.map(round_sig9),
                worst_freq_hz: v.worst_freq_hz.map(round_sig9),
                ..v
            })
            .collect(),
        metrics: metrics.iter().map(MetricSeries::to_json).collect(),
    };
    Ok((bundle, status))
}

fn threshold_verdict(
    check: &'static str,
    threshold: f64,
    worst: Option<(f64, f64)>,
    metric_indices: Vec<usize>,
) -> Verdict {
    let status = match worst {
        // No frequencies outside the mask leaves nothing to check.
        None => VerdictStatus::Pass,
        Some((v, _)) if v <= threshold => VerdictStatus::Pass,
        Some(_) => VerdictStatus::Fail,
    };
    Verdict {
        check,
        status,
        threshold,
        worst_value: worst.map(|w| w.0),
        worst_freq_hz: worst.map(|w| w.1),
        metric_indices,
    }
}

/// ECC and MEG-ratio series for one element pair over their common
/// frequencies (exact matches).
fn pattern_pair_series(
    a: &(String, Vec<FarFieldPattern>),
    b: &(String, Vec<FarFieldPattern>),
    pair: (usize, usize),
    env: &Environment,
) -> Result<(MetricSeries, MetricSeries)> {
    let mut common: Vec<(&FarFieldPattern, &FarFieldPattern)> = Vec::new();
    for pa in &a.1 {
        if let Some(pb) = b.1.iter().find(|p| p.freq_hz() == pa.freq_hz()) {
            common.push((pa, pb));
        }
    }
    if common.is_empty() {
        bail!("pattern files {} and {} share no frequencies", a.0, b.0);
    }
    let results: Vec<(f64, f64, f64)> = common
        .par_iter()
        .map(|(pa, pb)| -> Result<(f64, f64, f64)> {
            let ecc =
                ecc_farfield(pa, pb, env).with_context(|| format!("ECC of {} vs {}", a.0, b.0))?;
            let ratio = meg_ratio(pa, pb, env)
                .with_context(|| format!("MEG ratio of {} vs {}", a.0, b.0))?;
            Ok((pa.freq_hz(), ecc, ratio))
        })
        .collect::<Result<_>>()?;
    let freqs: Vec<f64> = results.iter().map(|r| r.0).collect();
    let env_desc = Some(env.describe());
    let ecc = MetricSeries::new(
        MetricId::EccFf,
        freqs.clone(),
        results.iter().map(|r| r.1).collect(),
        MetricMeta {
            pair: Some(pair),
            environment: env_desc.clone(),
            ..MetricMeta::default()
        },
    )?;
    let ratio = MetricSeries::new(
        MetricId::MegRatio,
        freqs,
        results.iter().map(|r| r.2).collect(),
        MetricMeta {
            pair: Some(pair),
            environment: env_desc,
            ..MetricMeta::default()
        },
    )?;
    Ok((ecc, ratio))
}

/// Pretty-printed JSON plus trailing newline.
pub fn bundle_to_json(bundle: &ReportBundle) -> String {
    let mut text = serde_json::to_string_pretty(bundle).expect("report bundle serializes");
    text.push('\n');
    text
}
