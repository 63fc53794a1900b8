//! `mdk`: diversity metrics, band-notch design calculators, synthetic
//! datasets and pass/fail reports for multi-port antenna measurements.
//!
//! Exit codes: 0 success (report: all verdicts pass), 1 verdict failure,
//! 2 input error, 3 numerical-reliability flag.

mod config;
mod report;

use std::fs;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use mdk_core::farfield::{parse_pattern_csv, write_pattern_csv, FarFieldPattern, PatternGrid};
use mdk_core::metrics::{
    ccl_pair, ecc_farfield, ecc_sparams, meg, round_sig9, tarc_envelope_point, MetricId,
    MetricMeta, MetricSeries, TARC_MC_SEED,
};
use mdk_core::synth::{
    hertzian_dipole, linspace, notched_monopole_sparams, DipoleSpec, NotchModel,
};
use mdk_core::touchstone::{write_touchstone, FreqUnit, ValueFormat};

use config::Config;
use report::{build_report, bundle_to_json, load_network, ReportOptions, ReportStatus};

#[derive(Parser)]
#[command(
    name = "mdk",
    version,
    about = "Multi-port antenna diversity toolkit: S-parameter and far-field metrics, notch design, synthetic datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one metric series and write it as CSV or JSON
    Metrics {
        #[command(subcommand)]
        op: MetricsCmd,
    },
    /// Band-notch design calculators (JSON on stdout)
    Design {
        #[command(subcommand)]
        op: DesignCmd,
    },
    /// Generate synthetic pattern and network files
    Synth {
        #[command(subcommand)]
        op: SynthCmd,
    },
    /// Evaluate a dataset against the verdict mask
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum MetricsCmd {
    /// Envelope correlation of two far-field pattern files
    EccFf {
        /// First `.ffp` pattern file
        #[arg(long)]
        a: String,
        /// Second `.ffp` pattern file
        #[arg(long)]
        b: String,
        /// Environment preset (uniform, indoor, outdoor, or a config name)
        #[arg(long, default_value = "uniform")]
        env: String,
        /// Output path (.csv or .json); stdout CSV when omitted
        #[arg(long)]
        out: Option<String>,
        /// Worker threads for per-frequency evaluation
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Envelope correlation of a port pair from S-parameters
    EccSp {
        /// Touchstone `.sNp` file
        #[arg(long)]
        net: String,
        /// Port pair, e.g. 1,2
        #[arg(long, value_parser = parse_pair)]
        pair: (usize, usize),
        #[arg(long)]
        out: Option<String>,
    },
    /// Worst-case total active reflection coefficient over excitation phases
    Tarc {
        #[arg(long)]
        net: String,
        /// Phase samples per free port (envelope resolution)
        #[arg(long, default_value_t = 8)]
        phases: usize,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Channel capacity loss of a port pair
    Ccl {
        #[arg(long)]
        net: String,
        #[arg(long, value_parser = parse_pair)]
        pair: (usize, usize),
        #[arg(long)]
        out: Option<String>,
    },
    /// Mean effective gain of a pattern file, in dB
    Meg {
        /// `.ffp` pattern file
        #[arg(long)]
        pattern: String,
        #[arg(long, default_value = "uniform")]
        env: String,
        /// Radiation efficiency in (0, 1]; lossless when omitted
        #[arg(long)]
        efficiency: Option<f64>,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Subcommand)]
enum DesignCmd {
    /// Quarter-wave stub length for a notch center
    Stub {
        #[arg(long)]
        f0_ghz: f64,
        /// Substrate relative permittivity
        #[arg(long)]
        er: f64,
    },
    /// U-slot quarter-wave arm and eighth-wave gap
    Slot {
        #[arg(long)]
        f0_ghz: f64,
        #[arg(long)]
        er: f64,
    },
    /// Rejection bandwidth and band edges from the stub-to-ground gap
    NotchBw {
        #[arg(long)]
        gap_mm: f64,
    },
}

#[derive(Subcommand)]
enum SynthCmd {
    /// Analytic dipole pattern file
    Dipole {
        /// Dipole axis: x, y or z
        #[arg(long)]
        axis: String,
        #[arg(long, default_value_t = 1.0)]
        step_deg: f64,
        #[arg(long)]
        freq_ghz: f64,
        #[arg(long)]
        out: String,
    },
    /// Band-notched N-port network file
    NotchedNet {
        #[arg(long)]
        center_ghz: f64,
        #[arg(long)]
        bw_ghz: f64,
        /// Reflection level at the notch center, dB (must exceed -10)
        #[arg(long, allow_hyphen_values = true)]
        depth_db: f64,
        #[arg(long)]
        ports: usize,
        #[arg(long)]
        fmin_ghz: f64,
        #[arg(long)]
        fmax_ghz: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        #[arg(long)]
        out: String,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// Touchstone `.sNp` file
    #[arg(long)]
    net: String,
    /// Directory of per-element `.ffp` files (enables ECC/MEG checks)
    #[arg(long)]
    patterns: Option<String>,
    #[arg(long, default_value = "uniform")]
    env: String,
    /// Phase samples per free port for the TARC envelope
    #[arg(long, default_value_t = 8)]
    phases: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output path for the JSON bundle; stdout when omitted
    #[arg(long)]
    out: Option<String>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated ports, e.g. 1,2".into());
    }
    let i: usize = parts[0].trim().parse().map_err(|_| "bad port number")?;
    let j: usize = parts[1].trim().parse().map_err(|_| "bad port number")?;
    Ok((i, j))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = Config::from_env()?;
    match cli.command {
        Command::Metrics { op } => run_metrics(&cfg, op),
        Command::Design { op } => run_design(&cfg, op),
        Command::Synth { op } => run_synth(op),
        Command::Report(args) => run_report(&cfg, args),
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if jobs == 0 {
        bail!("--jobs must be >= 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?
        .install(f)
}

fn write_output(out: Option<&str>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {path}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Emit a metric series as JSON (for `.json` outputs) or CSV (otherwise).
/// Exit code 3 signals values carrying a reliability flag.
fn emit_series(series: &MetricSeries, out: Option<&str>) -> Result<u8> {
    let json = out.is_some_and(|p| p.to_ascii_lowercase().ends_with(".json"));
    let text = if json {
        let mut t = serde_json::to_string_pretty(&series.to_json()).expect("series serializes");
        t.push('\n');
        t
    } else {
        series.to_csv()
    };
    write_output(out, &text)?;
    Ok(if series.is_reliable() { 0 } else { 3 })
}

fn load_pattern_file(path: &str) -> Result<Vec<FarFieldPattern>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    parse_pattern_csv(&text).with_context(|| path.to_string())
}

fn run_metrics(cfg: &Config, op: MetricsCmd) -> Result<u8> {
    match op {
        MetricsCmd::EccFf {
            a,
            b,
            env,
            out,
            jobs,
        } => {
            let environment = cfg.environment(&env)?;
            let pa = load_pattern_file(&a)?;
            let pb = load_pattern_file(&b)?;
            let common: Vec<(&FarFieldPattern, &FarFieldPattern)> = pa
                .iter()
                .filter_map(|x| {
                    pb.iter()
                        .find(|y| y.freq_hz() == x.freq_hz())
                        .map(|y| (x, y))
                })
                .collect();
            if common.is_empty() {
                bail!("{a} and {b} share no frequencies");
            }
            let values: Vec<(f64, f64)> = with_pool(jobs, || {
                common
                    .par_iter()
                    .map(|(x, y)| {
                        ecc_farfield(x, y, &environment)
                            .map(|rho| (x.freq_hz(), rho))
                            .with_context(|| format!("ECC of {a} vs {b}"))
                    })
                    .collect::<Result<_>>()
            })?;
            let series = MetricSeries::new(
                MetricId::EccFf,
                values.iter().map(|v| v.0).collect(),
                values.iter().map(|v| v.1).collect(),
                MetricMeta {
                    environment: Some(environment.describe()),
                    ..MetricMeta::default()
                },
            )?;
            emit_series(&series, out.as_deref())
        }
        MetricsCmd::EccSp { net, pair, out } => {
            let network = load_network(&net)?;
            let series = ecc_sparams(&network, pair.0, pair.1).with_context(|| net.clone())?;
            emit_series(&series, out.as_deref())
        }
        MetricsCmd::Tarc {
            net,
            phases,
            out,
            jobs,
        } => {
            let network = load_network(&net)?;
            let values: Vec<f64> = with_pool(jobs, || {
                network
                    .matrices()
                    .par_iter()
                    .enumerate()
                    .map(|(k, m)| Ok(tarc_envelope_point(m, phases, k as u64)?))
                    .collect::<Result<_>>()
            })?;
            let series = MetricSeries::new(
                MetricId::TarcDb,
                network.freqs().to_vec(),
                values,
                MetricMeta {
                    seed: (network.port_count() > 4).then_some(TARC_MC_SEED),
                    phase_samples: Some(phases),
                    ..MetricMeta::default()
                },
            )?;
            emit_series(&series, out.as_deref())
        }
        MetricsCmd::Ccl { net, pair, out } => {
            let network = load_network(&net)?;
            let series = ccl_pair(&network, pair.0, pair.1).with_context(|| net.clone())?;
            emit_series(&series, out.as_deref())
        }
        MetricsCmd::Meg {
            pattern,
            env,
            efficiency,
            out,
        } => {
            let environment = cfg.environment(&env)?;
            let eff = efficiency.unwrap_or(1.0);
            if !(eff > 0.0 && eff <= 1.0) {
                bail!("--efficiency {eff} outside (0, 1]");
            }
            let patterns = load_pattern_file(&pattern)?;
            let mut freqs = Vec::with_capacity(patterns.len());
            let mut values = Vec::with_capacity(patterns.len());
            for p in &patterns {
                let m = meg(p, &environment).with_context(|| pattern.clone())?;
                freqs.push(p.freq_hz());
                values.push(10.0 * (eff * m).log10());
            }
            let series = MetricSeries::new(
                MetricId::MegDb,
                freqs,
                values,
                MetricMeta {
                    environment: Some(environment.describe()),
                    efficiency,
                    ..MetricMeta::default()
                },
            )?;
            emit_series(&series, out.as_deref())
        }
    }
}

/// Format a number for the compact design JSON records.
fn num(x: f64) -> String {
    format!("{}", round_sig9(x))
}

fn run_design(cfg: &Config, op: DesignCmd) -> Result<u8> {
    let line = match op {
        DesignCmd::Stub { f0_ghz, er } => {
            let length = mdk_core::design::stub_length(f0_ghz * 1e9, er)?;
            format!("{{\"length_mm\":{}}}\n", num(length * 1e3))
        }
        DesignCmd::Slot { f0_ghz, er } => {
            let slot = mdk_core::design::slot_dimensions(f0_ghz * 1e9, er)?;
            format!(
                "{{\"l5_mm\":{},\"g_mm\":{}}}\n",
                num(slot.l5_m * 1e3),
                num(slot.g_m * 1e3)
            )
        }
        DesignCmd::NotchBw { gap_mm } => {
            let p = cfg.gap_model.interpolate(gap_mm)?;
            format!(
                "{{\"bw_ghz\":{},\"f_low_ghz\":{},\"f_high_ghz\":{}}}\n",
                num(p.bw_ghz),
                num(p.f_low_ghz),
                num(p.f_high_ghz)
            )
        }
    };
    print!("{line}");
    Ok(0)
}

fn run_synth(op: SynthCmd) -> Result<u8> {
    match op {
        SynthCmd::Dipole {
            axis,
            step_deg,
            freq_ghz,
            out,
        } => {
            let spec = DipoleSpec {
                axis: axis.parse()?,
                freq_hz: freq_ghz * 1e9,
            };
            let grid = PatternGrid::uniform(step_deg)?;
            let pattern = hertzian_dipole(&spec, &grid)?;
            fs::write(&out, write_pattern_csv(std::slice::from_ref(&pattern)))
                .with_context(|| format!("writing {out}"))?;
            Ok(0)
        }
        SynthCmd::NotchedNet {
            center_ghz,
            bw_ghz,
            depth_db,
            ports,
            fmin_ghz,
            fmax_ghz,
            points,
            out,
        } => {
            let model = NotchModel::new(
                center_ghz * 1e9,
                bw_ghz * 1e9,
                depth_db,
                (fmin_ghz * 1e9, fmax_ghz * 1e9),
            )?;
            let freqs = linspace(fmin_ghz * 1e9, fmax_ghz * 1e9, points)?;
            let net = notched_monopole_sparams(&model, &freqs, ports)?;
            fs::write(&out, write_touchstone(&net, FreqUnit::GHz, ValueFormat::Ri))
                .with_context(|| format!("writing {out}"))?;
            Ok(0)
        }
    }
}

fn run_report(cfg: &Config, args: ReportArgs) -> Result<u8> {
    let opts = ReportOptions {
        net_path: args.net,
        patterns_dir: args.patterns,
        env_name: args.env,
        phase_samples: args.phases,
    };
    let (bundle, status) = with_pool(args.jobs, || build_report(cfg, &opts))?;
    write_output(args.out.as_deref(), &bundle_to_json(&bundle))?;
    Ok(match status {
        ReportStatus::AllPass => 0,
        ReportStatus::VerdictFailed => 1,
        ReportStatus::NumericalFlag => 3,
    })
}
