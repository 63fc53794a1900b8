//! Far-field patterns on a regular (theta, phi) grid: `.ffp` CSV ingestion,
//! spherical quadrature, radiated power, directivity and peak gain.
//!
//! Quadrature is trapezoid in theta (endpoints included; sin(theta) vanishes
//! there) times the periodic rectangle rule in phi, which is spectrally
//! accurate for periodic integrands.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;

/// Exact header of the `.ffp` CSV format.
pub const PATTERN_HEADER: &str = "freq_hz,theta_deg,phi_deg,etheta_re,etheta_im,ephi_re,ephi_im";

/// Grid steps above this (degrees) draw a warning from the parser.
pub const COARSE_STEP_DEG: f64 = 15.0;

const AXIS_TOL: f64 = 1e-9;

/// Regular spherical sampling: theta covers [0, 180] inclusive, phi covers
/// [0, 360) with periodic closure, both with constant step.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGrid {
    theta_deg: Vec<f64>,
    phi_deg: Vec<f64>,
    theta_step_deg: f64,
    phi_step_deg: f64,
}

impl PatternGrid {
    /// Build from explicit axis values, validating regularity and coverage.
    pub fn from_axes(theta_deg: Vec<f64>, phi_deg: Vec<f64>) -> Result<Self, Error> {
        let theta_step_deg = axis_step(&theta_deg, "theta")?;
        if theta_deg[0].abs() > AXIS_TOL {
            return Err(Error::invalid("theta axis must start at 0 deg"));
        }
        if (theta_deg[theta_deg.len() - 1] - 180.0).abs() > AXIS_TOL {
            return Err(Error::invalid("theta axis must end at 180 deg"));
        }
        let phi_step_deg = axis_step(&phi_deg, "phi")?;
        if phi_deg[0].abs() > AXIS_TOL {
            return Err(Error::invalid("phi axis must start at 0 deg"));
        }
        let closure = phi_deg[phi_deg.len() - 1] + phi_step_deg;
        if (closure - 360.0).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "phi axis must cover [0, 360) periodically; last step closes at {closure} deg"
            )));
        }
        Ok(PatternGrid {
            theta_deg,
            phi_deg,
            theta_step_deg,
            phi_step_deg,
        })
    }

    /// Uniform grid with the same step on both axes.
    pub fn uniform(step_deg: f64) -> Result<Self, Error> {
        if !(step_deg.is_finite() && step_deg > 0.0) {
            return Err(Error::invalid("grid step must be > 0"));
        }
        let n_theta = 180.0 / step_deg;
        let n_phi = 360.0 / step_deg;
        if (n_theta - n_theta.round()).abs() > 1e-9 || (n_phi - n_phi.round()).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "step {step_deg} deg does not divide 180 and 360"
            )));
        }
        let theta: Vec<f64> = (0..=n_theta.round() as usize)
            .map(|i| i as f64 * step_deg)
            .collect();
        let phi: Vec<f64> = (0..n_phi.round() as usize)
            .map(|j| j as f64 * step_deg)
            .collect();
        PatternGrid::from_axes(theta, phi)
    }

    pub fn theta_deg(&self) -> &[f64] {
        &self.theta_deg
    }

    pub fn phi_deg(&self) -> &[f64] {
        &self.phi_deg
    }

    pub fn n_theta(&self) -> usize {
        self.theta_deg.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi_deg.len()
    }

    pub fn theta_step_deg(&self) -> f64 {
        self.theta_step_deg
    }

    pub fn phi_step_deg(&self) -> f64 {
        self.phi_step_deg
    }

    pub fn is_coarse(&self) -> bool {
        self.theta_step_deg > COARSE_STEP_DEG || self.phi_step_deg > COARSE_STEP_DEG
    }

    /// Index of a grid point given angles in degrees.
    pub fn index_of(&self, theta_deg: f64, phi_deg: f64) -> Result<(usize, usize), Error> {
        let find = |axis: &[f64], v: f64, name: &str| -> Result<usize, Error> {
            axis.iter()
                .position(|&x| (x - v).abs() <= AXIS_TOL)
                .ok_or_else(|| Error::invalid(format!("{name} = {v} deg is not on the grid")))
        };
        Ok((
            find(&self.theta_deg, theta_deg, "theta")?,
            find(&self.phi_deg, phi_deg, "phi")?,
        ))
    }

    /// Surface integral of `f(theta_idx, phi_idx)` over the sphere with
    /// dOmega = sin(theta) dtheta dphi: trapezoid in theta, periodic
    /// rectangle in phi.
    pub fn integrate<F: Fn(usize, usize) -> f64>(&self, f: F) -> f64 {
        let d_theta = self.theta_step_deg.to_radians();
        let d_phi = self.phi_step_deg.to_radians();
        let last = self.theta_deg.len() - 1;
        let mut total = 0.0;
        for (i, &th) in self.theta_deg.iter().enumerate() {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            let sin_th = th.to_radians().sin();
            let mut ring = 0.0;
            for j in 0..self.phi_deg.len() {
                ring += f(i, j);
            }
            total += w * sin_th * ring;
        }
        total * d_theta * d_phi
    }

    /// Complex-valued counterpart of [`integrate`](Self::integrate).
    pub fn integrate_complex<F: Fn(usize, usize) -> Complex64>(&self, f: F) -> Complex64 {
        let d_theta = self.theta_step_deg.to_radians();
        let d_phi = self.phi_step_deg.to_radians();
        let last = self.theta_deg.len() - 1;
        let mut total = Complex64::new(0.0, 0.0);
        for (i, &th) in self.theta_deg.iter().enumerate() {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            let sin_th = th.to_radians().sin();
            let mut ring = Complex64::new(0.0, 0.0);
            for j in 0..self.phi_deg.len() {
                ring += f(i, j);
            }
            total += ring * (w * sin_th);
        }
        total * (d_theta * d_phi)
    }
}

fn axis_step(axis: &[f64], name: &str) -> Result<f64, Error> {
    if axis.len() < 2 {
        return Err(Error::invalid(format!(
            "{name} axis needs at least 2 samples"
        )));
    }
    let step = axis[1] - axis[0];
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(format!(
            "{name} axis must be strictly increasing"
        )));
    }
    for k in 1..axis.len() {
        let d = axis[k] - axis[k - 1];
        if (d - step).abs() > AXIS_TOL * step.max(1.0) {
            return Err(Error::invalid(format!(
                "{name} axis step is irregular at {} deg",
                axis[k]
            )));
        }
    }
    Ok(step)
}

/// Complex E_theta / E_phi samples on a [`PatternGrid`] at one frequency.
/// Field values are relative (arbitrary absolute scale); every ratio metric
/// downstream is scale-invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    freq_hz: f64,
    grid: PatternGrid,
    e_theta: DMatrix<Complex64>,
    e_phi: DMatrix<Complex64>,
}

impl FarFieldPattern {
    pub fn new(
        freq_hz: f64,
        grid: PatternGrid,
        e_theta: DMatrix<Complex64>,
        e_phi: DMatrix<Complex64>,
    ) -> Result<Self, Error> {
        if !(freq_hz.is_finite() && freq_hz > 0.0) {
            return Err(Error::invalid("pattern frequency must be > 0"));
        }
        let shape = (grid.n_theta(), grid.n_phi());
        for (name, m) in [("e_theta", &e_theta), ("e_phi", &e_phi)] {
            if (m.nrows(), m.ncols()) != shape {
                return Err(Error::invalid(format!(
                    "{name} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    shape.0,
                    shape.1
                )));
            }
            if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} contains non-finite samples"
                )));
            }
        }
        Ok(FarFieldPattern {
            freq_hz,
            grid,
            e_theta,
            e_phi,
        })
    }

    pub fn freq_hz(&self) -> f64 {
        self.freq_hz
    }

    pub fn grid(&self) -> &PatternGrid {
        &self.grid
    }

    pub fn e_theta(&self) -> &DMatrix<Complex64> {
        &self.e_theta
    }

    pub fn e_phi(&self) -> &DMatrix<Complex64> {
        &self.e_phi
    }

    /// Radiation intensity |E_theta|^2 + |E_phi|^2 at a grid index.
    pub fn intensity(&self, i: usize, j: usize) -> f64 {
        self.e_theta[(i, j)].norm_sqr() + self.e_phi[(i, j)].norm_sqr()
    }

    /// Scale both field components by a complex factor.
    pub fn scaled(&self, k: Complex64) -> FarFieldPattern {
        FarFieldPattern {
            freq_hz: self.freq_hz,
            grid: self.grid.clone(),
            e_theta: self.e_theta.map(|v| v * k),
            e_phi: self.e_phi.map(|v| v * k),
        }
    }
}

/// Total radiated power (relative W): the quadrature of the intensity over
/// the sphere. Zero only for the zero field.
pub fn radiated_power(p: &FarFieldPattern) -> f64 {
    p.grid.integrate(|i, j| p.intensity(i, j))
}

/// Directivity D = 4*pi*U(theta, phi) / P_rad at a grid point given in
/// degrees.
pub fn directivity(p: &FarFieldPattern, theta_deg: f64, phi_deg: f64) -> Result<f64, Error> {
    let (i, j) = p.grid.index_of(theta_deg, phi_deg)?;
    let prad = radiated_power(p);
    if prad <= 0.0 {
        return Err(Error::DegeneratePattern(
            "radiated power is zero; directivity undefined".into(),
        ));
    }
    Ok(4.0 * std::f64::consts::PI * p.intensity(i, j) / prad)
}

/// Largest directivity over the grid.
pub fn peak_directivity(p: &FarFieldPattern) -> Result<f64, Error> {
    let prad = radiated_power(p);
    if prad <= 0.0 {
        return Err(Error::DegeneratePattern(
            "radiated power is zero; directivity undefined".into(),
        ));
    }
    let mut peak = 0.0f64;
    for i in 0..p.grid.n_theta() {
        for j in 0..p.grid.n_phi() {
            peak = peak.max(p.intensity(i, j));
        }
    }
    Ok(4.0 * std::f64::consts::PI * peak / prad)
}

/// Peak gain in dBi: `10*log10(efficiency * max D)`, efficiency in (0, 1].
pub fn peak_gain(p: &FarFieldPattern, efficiency: f64) -> Result<f64, Error> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::invalid(format!(
            "efficiency {efficiency} outside (0, 1]"
        )));
    }
    Ok(10.0 * (efficiency * peak_directivity(p)?).log10())
}

struct Row {
    line: usize,
    freq: f64,
    theta: f64,
    phi: f64,
    e_theta: Complex64,
    e_phi: Complex64,
}

/// Parse `.ffp` CSV text into one pattern per frequency, ordered by
/// frequency. Each frequency block must cover a full regular grid exactly
/// once; violations name the offending line.
pub fn parse_pattern_csv(text: &str) -> Result<Vec<FarFieldPattern>, Error> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((idx, raw)) => {
                let l = raw.trim_end_matches('\r').trim();
                if l.is_empty() {
                    continue;
                }
                break (idx + 1, l.to_owned());
            }
            None => return Err(Error::parse(1, "empty pattern file")),
        }
    };
    if header.1 != PATTERN_HEADER {
        return Err(Error::parse(
            header.0,
            format!("bad header; expected '{PATTERN_HEADER}'"),
        ));
    }

    let mut rows: Vec<Row> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let l = raw.trim_end_matches('\r').trim();
        if l.is_empty() {
            continue;
        }
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(Error::parse(
                line_no,
                format!("expected 7 comma-separated fields, found {}", fields.len()),
            ));
        }
        let mut nums = [0.0f64; 7];
        for (k, f) in fields.iter().enumerate() {
            nums[k] = f
                .parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("non-numeric field '{f}'")))?;
            if !nums[k].is_finite() {
                return Err(Error::parse(line_no, format!("non-finite field '{f}'")));
            }
        }
        let [freq, theta, phi, etr, eti, epr, epi] = nums;
        if freq <= 0.0 {
            return Err(Error::parse(
                line_no,
                format!("frequency {freq} not positive"),
            ));
        }
        if !(0.0..=180.0).contains(&theta) {
            return Err(Error::parse(
                line_no,
                format!("theta {theta} deg outside [0, 180]"),
            ));
        }
        if !(0.0..360.0).contains(&phi) {
            return Err(Error::parse(
                line_no,
                format!("phi {phi} deg outside [0, 360)"),
            ));
        }
        rows.push(Row {
            line: line_no,
            freq,
            theta,
            phi,
            e_theta: Complex64::new(etr, eti),
            e_phi: Complex64::new(epr, epi),
        });
    }
    if rows.is_empty() {
        return Err(Error::parse(header.0, "pattern file has no data rows"));
    }

    // Group rows by exact frequency value.
    let mut freq_order: Vec<u64> = Vec::new();
    let mut groups: HashMap<u64, Vec<Row>> = HashMap::new();
    for row in rows {
        let key = row.freq.to_bits();
        if !groups.contains_key(&key) {
            freq_order.push(key);
        }
        groups.entry(key).or_default().push(row);
    }
    freq_order.sort_by(|a, b| f64::from_bits(*a).partial_cmp(&f64::from_bits(*b)).unwrap());

    let mut patterns = Vec::with_capacity(freq_order.len());
    for key in freq_order {
        let block = groups.remove(&key).unwrap();
        patterns.push(build_pattern(f64::from_bits(key), block)?);
    }
    if patterns.iter().any(|p| p.grid.is_coarse()) {
        log::warn!(
            "pattern grid step exceeds {COARSE_STEP_DEG} deg; quadrature accuracy degrades (recommended <= 5 deg)"
        );
    }
    Ok(patterns)
}

fn build_pattern(freq: f64, block: Vec<Row>) -> Result<FarFieldPattern, Error> {
    let mut theta_first: HashMap<u64, usize> = HashMap::new();
    let mut phi_first: HashMap<u64, usize> = HashMap::new();
    for r in &block {
        theta_first.entry(r.theta.to_bits()).or_insert(r.line);
        phi_first.entry(r.phi.to_bits()).or_insert(r.line);
    }
    let mut theta_axis: Vec<f64> = theta_first.keys().map(|&b| f64::from_bits(b)).collect();
    let mut phi_axis: Vec<f64> = phi_first.keys().map(|&b| f64::from_bits(b)).collect();
    theta_axis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    phi_axis.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let grid = PatternGrid::from_axes(theta_axis.clone(), phi_axis.clone())
        .map_err(|e| attribute_axis_error(e, &theta_axis, &theta_first, &phi_axis, &phi_first))?;

    let theta_idx: HashMap<u64, usize> = theta_axis
        .iter()
        .enumerate()
        .map(|(i, v)| (v.to_bits(), i))
        .collect();
    let phi_idx: HashMap<u64, usize> = phi_axis
        .iter()
        .enumerate()
        .map(|(j, v)| (v.to_bits(), j))
        .collect();

    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let mut e_theta = DMatrix::<Complex64>::zeros(nt, np);
    let mut e_phi = DMatrix::<Complex64>::zeros(nt, np);
    let mut seen = vec![false; nt * np];
    for r in &block {
        let i = theta_idx[&r.theta.to_bits()];
        let j = phi_idx[&r.phi.to_bits()];
        if seen[i * np + j] {
            return Err(Error::parse(
                r.line,
                format!(
                    "duplicate sample at freq {} Hz, theta {} deg, phi {} deg",
                    r.freq, r.theta, r.phi
                ),
            ));
        }
        seen[i * np + j] = true;
        e_theta[(i, j)] = r.e_theta;
        e_phi[(i, j)] = r.e_phi;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        let (i, j) = (missing / np, missing % np);
        let last_line = block.iter().map(|r| r.line).max().unwrap_or(1);
        return Err(Error::parse(
            last_line,
            format!(
                "missing grid point at freq {} Hz, theta {} deg, phi {} deg",
                freq,
                grid.theta_deg()[i],
                grid.phi_deg()[j]
            ),
        ));
    }
    FarFieldPattern::new(freq, grid, e_theta, e_phi)
}

/// Re-key an axis validation failure to the first data row carrying the
/// irregular value, so parse errors stay line-numbered.
fn attribute_axis_error(
    err: Error,
    theta_axis: &[f64],
    theta_first: &HashMap<u64, usize>,
    phi_axis: &[f64],
    phi_first: &HashMap<u64, usize>,
) -> Error {
    let msg = match &err {
        Error::InvalidInput(m) => m.clone(),
        _ => return err,
    };
    for (name, axis, first) in [
        ("theta", theta_axis, theta_first),
        ("phi", phi_axis, phi_first),
    ] {
        if !msg.starts_with(name) {
            continue;
        }
        if axis.len() >= 3 {
            let step = axis[1] - axis[0];
            for k in 2..axis.len() {
                if ((axis[k] - axis[k - 1]) - step).abs() > AXIS_TOL * step.max(1.0) {
                    return Error::parse(
                        first[&axis[k].to_bits()],
                        format!("{name} {} deg breaks the regular grid step", axis[k]),
                    );
                }
            }
        }
        let line = first.values().copied().min().unwrap_or(1);
        return Error::parse(line, msg);
    }
    let line = theta_first
        .values()
        .chain(phi_first.values())
        .copied()
        .min()
        .unwrap_or(1);
    Error::parse(line, msg)
}

/// Serialize patterns to `.ffp` CSV text that [`parse_pattern_csv`] reads
/// back bit-exactly (shortest round-trip float formatting).
pub fn write_pattern_csv(patterns: &[FarFieldPattern]) -> String {
    let mut out = String::from(PATTERN_HEADER);
    out.push('\n');
    let mut sorted: Vec<&FarFieldPattern> = patterns.iter().collect();
    sorted.sort_by(|a, b| a.freq_hz.partial_cmp(&b.freq_hz).unwrap());
    for p in sorted {
        for (i, &th) in p.grid.theta_deg().iter().enumerate() {
            for (j, &ph) in p.grid.phi_deg().iter().enumerate() {
                let et = p.e_theta[(i, j)];
                let ep = p.e_phi[(i, j)];
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    p.freq_hz, th, ph, et.re, et.im, ep.re, ep.im
                ));
            }
        }
    }
    out
}
