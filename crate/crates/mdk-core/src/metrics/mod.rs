//! Diversity figures of merit: envelope correlation (far-field and
//! S-parameter forms), TARC and its phase envelope, channel capacity loss,
//! mean effective gain, and rejected-band detection.

mod environment;
mod series;

pub use environment::{
    Environment, Propagation, DEFAULT_MEAN_ELEVATION_DEG, DEFAULT_SPREAD_DEG, INDOOR_XPR_DB,
    OUTDOOR_XPR_DB,
};
pub use series::{round_sig9, MetricId, MetricMeta, MetricSeries};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::farfield::{radiated_power, FarFieldPattern};
use crate::touchstone::NetworkData;

/// Envelope-correlation denominators below this are considered meaningless
/// (near-lossy band) and the value is flagged rather than thrown.
pub const ECC_DENOM_FLOOR: f64 = 1e-9;

/// Correlation-matrix determinants below this are clamped in [`ccl_pair`].
pub const CCL_DET_CLAMP: f64 = 1e-12;

/// Lower bound on reported dB values (stands in for -infinity).
pub const TARC_FLOOR_DB: f64 = -200.0;

/// Seed of the Monte Carlo phase sampler used by [`tarc_envelope`] for
/// networks with more than four ports.
pub const TARC_MC_SEED: u64 = 0x5EED;

const FACTORIAL_SAMPLE_LIMIT: u64 = 10_000_000;

fn floor_db(linear: f64) -> f64 {
    (20.0 * linear.log10()).max(TARC_FLOOR_DB)
}

/// Envelope correlation of two patterns at the same frequency and grid,
/// weighted by the environment's polarization densities:
///
/// rho = |I12|^2 / (I11 * I22), where
/// I_ab integrates XPR*E_theta_a*conj(E_theta_b)*P_theta
///               + E_phi_a*conj(E_phi_b)*P_phi over the sphere.
///
/// The result lies in [0, 1] (Cauchy-Schwarz on the weighted inner product)
/// and equals 1 for a pattern against itself.
pub fn ecc_farfield(
    p1: &FarFieldPattern,
    p2: &FarFieldPattern,
    env: &Environment,
) -> Result<f64, Error> {
    if p1.grid() != p2.grid() {
        return Err(Error::GridMismatch(
            "patterns sampled on different grids".into(),
        ));
    }
    if p1.freq_hz() != p2.freq_hz() {
        return Err(Error::GridMismatch(format!(
            "patterns at different frequencies ({} vs {} Hz)",
            p1.freq_hz(),
            p2.freq_hz()
        )));
    }
    let grid = p1.grid();
    let (p_theta, p_phi) = env.densities(grid);
    let xpr = env.xpr_linear();

    let self_term = |p: &FarFieldPattern| {
        grid.integrate(|i, j| {
            xpr * p.e_theta()[(i, j)].norm_sqr() * p_theta[i]
                + p.e_phi()[(i, j)].norm_sqr() * p_phi[i]
        })
    };
    let i11 = self_term(p1);
    let i22 = self_term(p2);
    if i11 <= 0.0 || i22 <= 0.0 {
        return Err(Error::DegeneratePattern(
            "zero weighted power; envelope correlation undefined".into(),
        ));
    }
    let i12 = grid.integrate_complex(|i, j| {
        p1.e_theta()[(i, j)] * p2.e_theta()[(i, j)].conj() * (xpr * p_theta[i])
            + p1.e_phi()[(i, j)] * p2.e_phi()[(i, j)].conj() * p_phi[i]
    });
    Ok((i12.norm_sqr() / (i11 * i22)).clamp(0.0, 1.0))
}

/// Envelope correlation of ports `i < j` (1-based) from S-parameters:
///
/// rho(f) = |S_ii^* S_ij + S_ji^* S_jj|^2
///        / ((1 - |S_ii|^2 - |S_ji|^2) * (1 - |S_jj|^2 - |S_ij|^2)).
///
/// Frequencies where the denominator falls below [`ECC_DENOM_FLOOR`] are
/// floored and flagged unreliable in the series metadata.
pub fn ecc_sparams(net: &NetworkData, i: usize, j: usize) -> Result<MetricSeries, Error> {
    check_pair(net, i, j)?;
    let (pi, pj) = (i - 1, j - 1);
    let mut values = Vec::with_capacity(net.freqs().len());
    let mut unreliable = Vec::new();
    for (k, m) in net.matrices().iter().enumerate() {
        let (sii, sij, sji, sjj) = (m[(pi, pi)], m[(pi, pj)], m[(pj, pi)], m[(pj, pj)]);
        let num = (sii.conj() * sij + sji.conj() * sjj).norm_sqr();
        let d1 = 1.0 - sii.norm_sqr() - sji.norm_sqr();
        let d2 = 1.0 - sjj.norm_sqr() - sij.norm_sqr();
        let mut den = d1 * d2;
        if den < ECC_DENOM_FLOOR {
            den = ECC_DENOM_FLOOR;
            unreliable.push(k);
        }
        values.push(num / den);
    }
    MetricSeries::new(
        MetricId::EccSp,
        net.freqs().to_vec(),
        values,
        MetricMeta {
            pair: Some((i, j)),
            unreliable,
            ..MetricMeta::default()
        },
    )
}

fn check_pair(net: &NetworkData, i: usize, j: usize) -> Result<(), Error> {
    net.check_port(i)?;
    net.check_port(j)?;
    if i >= j {
        return Err(Error::invalid(format!(
            "need port pair i < j, got ({i}, {j})"
        )));
    }
    Ok(())
}

/// TARC of one excitation at one frequency: equal magnitudes 1/sqrt(N),
/// phases `full_phases` (length N). Returns the linear ratio |b|/|a|.
fn tarc_linear(m: &DMatrix<Complex64>, full_phases: &[f64]) -> f64 {
    let n = full_phases.len();
    let scale = 1.0 / (n as f64).sqrt();
    let a = DVector::from_iterator(
        n,
        full_phases.iter().map(|&p| Complex64::from_polar(scale, p)),
    );
    let b = m * a;
    // |a| = 1 by construction.
    b.norm()
}

/// Total active reflection coefficient in dB per frequency for one phased
/// excitation. `phases` holds the N-1 free port phases in radians; port 1 is
/// fixed at 0. Passive networks give values <= 0 dB; the floor is
/// [`TARC_FLOOR_DB`].
pub fn tarc(net: &NetworkData, phases: &[f64]) -> Result<MetricSeries, Error> {
    let n = net.port_count();
    if phases.len() != n - 1 {
        return Err(Error::invalid(format!(
            "expected {} free phases for a {}-port network, got {}",
            n - 1,
            n,
            phases.len()
        )));
    }
    let mut full = Vec::with_capacity(n);
    full.push(0.0);
    full.extend_from_slice(phases);
    let values: Vec<f64> = net
        .matrices()
        .iter()
        .map(|m| floor_db(tarc_linear(m, &full)))
        .collect();
    MetricSeries::new(
        MetricId::TarcDb,
        net.freqs().to_vec(),
        values,
        MetricMeta::default(),
    )
}

/// Worst-case TARC (dB) over excitation phases at a single frequency.
///
/// Phases are drawn from the uniform grid `2*pi*k/n_phase_samples`. Up to
/// four ports the full factorial over the grid is evaluated; above that a
/// Monte Carlo draw of `n_phase_samples^3` grid vectors is used, seeded from
/// [`TARC_MC_SEED`] with `stream` (the frequency index) selecting an
/// independent substream so results do not depend on evaluation order.
pub fn tarc_envelope_point(
    m: &DMatrix<Complex64>,
    n_phase_samples: usize,
    stream: u64,
) -> Result<f64, Error> {
    let n = m.nrows();
    if n_phase_samples < 2 {
        return Err(Error::invalid("need at least 2 phase samples"));
    }
    let grid: Vec<f64> = (0..n_phase_samples)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / n_phase_samples as f64)
        .collect();
    let mut full = vec![0.0f64; n];
    let mut worst = 0.0f64;

    if n == 1 {
        return Ok(floor_db(tarc_linear(m, &full)));
    }
    if n <= 4 {
        let combos = (n_phase_samples as u64)
            .checked_pow((n - 1) as u32)
            .filter(|&c| c <= FACTORIAL_SAMPLE_LIMIT)
            .ok_or_else(|| Error::invalid("phase grid too large for full factorial"))?;
        for mut combo in 0..combos {
            for slot in full.iter_mut().skip(1) {
                *slot = grid[(combo % n_phase_samples as u64) as usize];
                combo /= n_phase_samples as u64;
            }
            worst = worst.max(tarc_linear(m, &full));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(TARC_MC_SEED);
        rng.set_stream(stream);
        let samples = n_phase_samples.pow(3);
        for _ in 0..samples {
            for slot in full.iter_mut().skip(1) {
                *slot = grid[rng.gen_range(0..n_phase_samples)];
            }
            worst = worst.max(tarc_linear(m, &full));
        }
    }
    Ok(floor_db(worst))
}

/// Per-frequency worst-case TARC over a phase grid (see
/// [`tarc_envelope_point`]). The sampler seed and sample count are recorded
/// in the series metadata.
pub fn tarc_envelope(net: &NetworkData, n_phase_samples: usize) -> Result<MetricSeries, Error> {
    let values: Vec<f64> = net
        .matrices()
        .iter()
        .enumerate()
        .map(|(k, m)| tarc_envelope_point(m, n_phase_samples, k as u64))
        .collect::<Result<_, _>>()?;
    let monte_carlo = net.port_count() > 4;
    MetricSeries::new(
        MetricId::TarcDb,
        net.freqs().to_vec(),
        values,
        MetricMeta {
            seed: monte_carlo.then_some(TARC_MC_SEED),
            phase_samples: Some(n_phase_samples),
            ..MetricMeta::default()
        },
    )
}

/// Channel capacity loss (bits/s/Hz) of ports `i < j` (1-based):
/// CCL = -log2 det(psi) with the 2x2 correlation matrix
/// psi_11 = 1 - |S_ii|^2 - |S_ij|^2, psi_22 = 1 - |S_jj|^2 - |S_ji|^2,
/// psi_12 = -(S_ii^* S_ij + S_ji^* S_jj), psi_21 = conj(psi_12).
///
/// Determinants at or below [`CCL_DET_CLAMP`] are clamped and flagged.
pub fn ccl_pair(net: &NetworkData, i: usize, j: usize) -> Result<MetricSeries, Error> {
    check_pair(net, i, j)?;
    let (pi, pj) = (i - 1, j - 1);
    let mut values = Vec::with_capacity(net.freqs().len());
    let mut unreliable = Vec::new();
    for (k, m) in net.matrices().iter().enumerate() {
        let (sii, sij, sji, sjj) = (m[(pi, pi)], m[(pi, pj)], m[(pj, pi)], m[(pj, pj)]);
        let psi11 = 1.0 - sii.norm_sqr() - sij.norm_sqr();
        let psi22 = 1.0 - sjj.norm_sqr() - sji.norm_sqr();
        let psi12 = -(sii.conj() * sij + sji.conj() * sjj);
        let mut det = psi11 * psi22 - psi12.norm_sqr();
        if det <= CCL_DET_CLAMP {
            det = CCL_DET_CLAMP;
            unreliable.push(k);
        }
        values.push(-det.log2());
    }
    MetricSeries::new(
        MetricId::CclBits,
        net.freqs().to_vec(),
        values,
        MetricMeta {
            pair: Some((i, j)),
            unreliable,
            ..MetricMeta::default()
        },
    )
}

/// Mean effective gain of a lossless pattern in `env` (dimensionless):
///
/// MEG = integral of [XPR/(1+XPR) * G_theta * P_theta
///                  + 1/(1+XPR) * G_phi * P_phi] dOmega,
///
/// with gain patterns G = 4*pi*|E|^2 / P_rad. Multiply by a radiation
/// efficiency for a lossy element. In the uniform environment with XPR 0 dB
/// this evaluates to 1/2 for every pattern.
pub fn meg(p: &FarFieldPattern, env: &Environment) -> Result<f64, Error> {
    let prad = radiated_power(p);
    if prad <= 0.0 {
        return Err(Error::DegeneratePattern(
            "radiated power is zero; mean effective gain undefined".into(),
        ));
    }
    let xpr = env.xpr_linear();
    let w_theta = xpr / (1.0 + xpr);
    let w_phi = 1.0 / (1.0 + xpr);
    let (p_theta, p_phi) = env.densities(p.grid());
    let four_pi = 4.0 * std::f64::consts::PI;
    let total = p.grid().integrate(|i, j| {
        let g_theta = four_pi * p.e_theta()[(i, j)].norm_sqr() / prad;
        let g_phi = four_pi * p.e_phi()[(i, j)].norm_sqr() / prad;
        w_theta * g_theta * p_theta[i] + w_phi * g_phi * p_phi[i]
    });
    Ok(total)
}

/// Ratio meg(p1)/meg(p2) of two patterns at the same frequency.
pub fn meg_ratio(
    p1: &FarFieldPattern,
    p2: &FarFieldPattern,
    env: &Environment,
) -> Result<f64, Error> {
    if p1.freq_hz() != p2.freq_hz() {
        return Err(Error::GridMismatch(format!(
            "patterns at different frequencies ({} vs {} Hz)",
            p1.freq_hz(),
            p2.freq_hz()
        )));
    }
    let m1 = meg(p1, env)?;
    let m2 = meg(p2, env)?;
    if m2 == 0.0 {
        return Err(Error::DegeneratePattern(
            "reference mean effective gain is zero".into(),
        ));
    }
    Ok(m1 / m2)
}

/// A contiguous frequency band where a reflection magnitude exceeds the
/// detection threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchBand {
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    /// Frequency of the worst (highest) level within the band.
    pub center_hz: f64,
    pub worst_level_db: f64,
}

/// Find maximal contiguous runs of an `s_db` series above `threshold_db`
/// (default -10 dB for reflection masks). Band edges are linearly
/// interpolated at the threshold crossing; the band center is the frequency
/// of the worst level in the run.
pub fn detect_notch(series: &MetricSeries, threshold_db: f64) -> Result<Vec<NotchBand>, Error> {
    if series.metric_id != MetricId::SDb {
        return Err(Error::invalid(format!(
            "notch detection expects an s_db series, got {}",
            series.metric_id.as_str()
        )));
    }
    let f = &series.freqs;
    let v = &series.values;
    let mut bands = Vec::new();
    let mut run_start: Option<usize> = None;
    for k in 0..=v.len() {
        let above = k < v.len() && v[k] > threshold_db;
        match (run_start, above) {
            (None, true) => run_start = Some(k),
            (Some(a), false) => {
                let b = k - 1;
                let f_low = if a == 0 {
                    f[0]
                } else {
                    crossing(f[a - 1], v[a - 1], f[a], v[a], threshold_db)
                };
                let f_high = if b + 1 == v.len() {
                    f[v.len() - 1]
                } else {
                    crossing(f[b], v[b], f[b + 1], v[b + 1], threshold_db)
                };
                let (center_idx, worst) = (a..=b)
                    .map(|i| (i, v[i]))
                    .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                    .unwrap();
                bands.push(NotchBand {
                    f_low_hz: f_low,
                    f_high_hz: f_high,
                    center_hz: f[center_idx],
                    worst_level_db: worst,
                });
                run_start = None;
            }
            _ => {}
        }
    }
    Ok(bands)
}

fn crossing(f0: f64, v0: f64, f1: f64, v1: f64, threshold: f64) -> f64 {
    if v1 == v0 {
        return f0;
    }
    let t = (threshold - v0) / (v1 - v0);
    f0 * (1.0 - t) + f1 * t
}

/// `20*log10 |S_ij(f)|` (1-based ports) as an `s_db` series, floored at
/// [`TARC_FLOOR_DB`]. Diagonal entries are reflections, off-diagonal
/// entries couplings.
pub fn s_magnitude_db(net: &NetworkData, i: usize, j: usize) -> Result<MetricSeries, Error> {
    net.check_port(i)?;
    net.check_port(j)?;
    let values: Vec<f64> = net
        .matrices()
        .iter()
        .map(|m| floor_db(m[(i - 1, j - 1)].norm()))
        .collect();
    let meta = if i == j {
        MetricMeta {
            ports: Some(vec![i]),
            ..MetricMeta::default()
        }
    } else {
        MetricMeta {
            pair: Some((i, j)),
            ..MetricMeta::default()
        }
    };
    MetricSeries::new(MetricId::SDb, net.freqs().to_vec(), values, meta)
}
