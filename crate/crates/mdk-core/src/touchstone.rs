//! Touchstone (version 1) N-port S-parameter files.
//!
//! Handles the option line `# <unit> S <fmt> R <ohms>` (tokens in any order,
//! defaults `GHz S MA R 50`), `!` comments, RI/MA/DB value encodings and the
//! published column-order conventions: 2-port data as S11 S21 S12 S22, N >= 3
//! row-major wrapping at four complex values per line. Version 2 files are
//! rejected.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;

/// Flag threshold for [`check_passivity`]: largest singular value above
/// `1 + PASSIVITY_TOLERANCE` marks a frequency as non-passive.
pub const PASSIVITY_TOLERANCE: f64 = 1e-6;

/// Frequency unit of the option line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FreqUnit {
    pub fn multiplier(self) -> f64 {
        match self {
            FreqUnit::Hz => 1.0,
            FreqUnit::KHz => 1e3,
            FreqUnit::MHz => 1e6,
            FreqUnit::GHz => 1e9,
        }
    }

    fn token(self) -> &'static str {
        match self {
            FreqUnit::Hz => "Hz",
            FreqUnit::KHz => "kHz",
            FreqUnit::MHz => "MHz",
            FreqUnit::GHz => "GHz",
        }
    }

    fn from_token(tok: &str) -> Option<Self> {
        match tok.to_ascii_lowercase().as_str() {
            "hz" => Some(FreqUnit::Hz),
            "khz" => Some(FreqUnit::KHz),
            "mhz" => Some(FreqUnit::MHz),
            "ghz" => Some(FreqUnit::GHz),
            _ => None,
        }
    }
}

/// Complex value encoding of the data lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueFormat {
    /// Real, imaginary.
    Ri,
    /// Linear magnitude, angle in degrees.
    Ma,
    /// 20*log10 magnitude, angle in degrees.
    Db,
}

impl ValueFormat {
    fn token(self) -> &'static str {
        match self {
            ValueFormat::Ri => "RI",
            ValueFormat::Ma => "MA",
            ValueFormat::Db => "DB",
        }
    }

    fn decode(self, a: f64, b: f64) -> Complex64 {
        match self {
            ValueFormat::Ri => Complex64::new(a, b),
            ValueFormat::Ma => Complex64::from_polar(a, b.to_radians()),
            ValueFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }

    fn encode(self, v: Complex64) -> (f64, f64) {
        match self {
            ValueFormat::Ri => (v.re, v.im),
            ValueFormat::Ma => (v.norm(), v.arg().to_degrees()),
            ValueFormat::Db => {
                let mag = v.norm();
                // -400 dB stands in for exact zeros; 1e-20 linear is far below
                // any round-trip tolerance.
                let db = if mag > 0.0 {
                    20.0 * mag.log10()
                } else {
                    -400.0
                };
                (db.max(-400.0), v.arg().to_degrees())
            }
        }
    }
}

/// Frequency-indexed complex N x N scattering matrices with a common
/// reference impedance.
///
/// Invariants: frequencies strictly increasing and positive, one matrix per
/// frequency, every entry finite. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkData {
    port_count: usize,
    ref_impedance: f64,
    freqs: Vec<f64>,
    s: Vec<DMatrix<Complex64>>,
}

impl NetworkData {
    pub fn new(
        port_count: usize,
        ref_impedance: f64,
        freqs: Vec<f64>,
        s: Vec<DMatrix<Complex64>>,
    ) -> Result<Self, Error> {
        if port_count < 1 {
            return Err(Error::invalid("port count must be >= 1"));
        }
        if !(ref_impedance.is_finite() && ref_impedance > 0.0) {
            return Err(Error::invalid("reference impedance must be > 0"));
        }
        if freqs.len() != s.len() {
            return Err(Error::invalid(format!(
                "{} frequencies but {} matrices",
                freqs.len(),
                s.len()
            )));
        }
        if freqs.is_empty() {
            return Err(Error::invalid("network has no frequency points"));
        }
        for (k, &f) in freqs.iter().enumerate() {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::invalid(format!("frequency #{} not positive", k + 1)));
            }
            if k > 0 && f <= freqs[k - 1] {
                return Err(Error::invalid(format!(
                    "frequencies not strictly increasing at #{}",
                    k + 1
                )));
            }
        }
        for (k, m) in s.iter().enumerate() {
            if m.nrows() != port_count || m.ncols() != port_count {
                return Err(Error::invalid(format!(
                    "matrix #{} is {}x{}, expected {}x{}",
                    k + 1,
                    m.nrows(),
                    m.ncols(),
                    port_count,
                    port_count
                )));
            }
            if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::invalid(format!(
                    "matrix #{} has non-finite entries",
                    k + 1
                )));
            }
        }
        Ok(NetworkData {
            port_count,
            ref_impedance,
            freqs,
            s,
        })
    }

    pub fn port_count(&self) -> usize {
        self.port_count
    }

    pub fn ref_impedance(&self) -> f64 {
        self.ref_impedance
    }

    /// Frequencies in Hz, strictly increasing.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// One matrix per frequency, same order as [`freqs`](Self::freqs).
    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.s
    }

    /// S_ij (1-based ports) across all frequencies.
    pub fn parameter(&self, i: usize, j: usize) -> Result<Vec<Complex64>, Error> {
        self.check_port(i)?;
        self.check_port(j)?;
        Ok(self.s.iter().map(|m| m[(i - 1, j - 1)]).collect())
    }

    pub(crate) fn check_port(&self, p: usize) -> Result<(), Error> {
        if p < 1 || p > self.port_count {
            return Err(Error::invalid(format!(
                "port {} out of range 1..={}",
                p, self.port_count
            )));
        }
        Ok(())
    }
}

/// Per-frequency result of [`check_passivity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassivityEntry {
    pub freq_hz: f64,
    pub max_singular_value: f64,
    /// True when the largest singular value exceeds `1 + PASSIVITY_TOLERANCE`.
    pub flagged: bool,
}

/// Largest singular value of each per-frequency matrix (report-only screen
/// for measured data; never fails).
pub fn check_passivity(net: &NetworkData) -> Vec<PassivityEntry> {
    net.freqs
        .iter()
        .zip(net.s.iter())
        .map(|(&freq_hz, m)| {
            let sv = m.clone().singular_values();
            let max_singular_value = sv.iter().copied().fold(0.0f64, f64::max);
            PassivityEntry {
                freq_hz,
                max_singular_value,
                flagged: max_singular_value > 1.0 + PASSIVITY_TOLERANCE,
            }
        })
        .collect()
}

/// Element order of one frequency record, honoring the v1 conventions.
fn entry_order(n: usize) -> Vec<(usize, usize)> {
    if n == 2 {
        // v1 quirk: 2-port data is S11 S21 S12 S22.
        vec![(0, 0), (1, 0), (0, 1), (1, 1)]
    } else {
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
    }
}

struct OptionLine {
    unit: FreqUnit,
    format: ValueFormat,
    resistance: f64,
}

fn parse_option_line(line: &str, line_no: usize) -> Result<OptionLine, Error> {
    let mut unit = FreqUnit::GHz;
    let mut format = ValueFormat::Ma;
    let mut resistance = 50.0;
    let mut tokens = line.trim_start_matches('#').split_whitespace().peekable();
    while let Some(tok) = tokens.next() {
        if let Some(u) = FreqUnit::from_token(tok) {
            unit = u;
            continue;
        }
        match tok.to_ascii_uppercase().as_str() {
            "S" => {}
            "Y" | "Z" | "H" | "G" => {
                return Err(Error::parse(
                    line_no,
                    format!("unsupported parameter type '{tok}' (only S-parameters)"),
                ))
            }
            "RI" => format = ValueFormat::Ri,
            "MA" => format = ValueFormat::Ma,
            "DB" => format = ValueFormat::Db,
            "R" => {
                let val = tokens.next().ok_or_else(|| {
                    Error::parse(line_no, "malformed option line: 'R' without a resistance")
                })?;
                resistance = val.parse::<f64>().map_err(|_| {
                    Error::parse(
                        line_no,
                        format!("malformed option line: bad resistance '{val}'"),
                    )
                })?;
                if !(resistance.is_finite() && resistance > 0.0) {
                    return Err(Error::parse(line_no, "reference resistance must be > 0"));
                }
            }
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("malformed option line: unknown token '{other}'"),
                ))
            }
        }
    }
    Ok(OptionLine {
        unit,
        format,
        resistance,
    })
}

/// Parse a Touchstone v1 character stream into a [`NetworkData`].
///
/// `declared_ports` comes from the file-name convention (`.sNp` -> N); data
/// records must contain `1 + 2*N^2` numbers each. Errors carry the 1-based
/// line number of the offending content.
pub fn parse_touchstone(text: &str, declared_ports: usize) -> Result<NetworkData, Error> {
    if declared_ports < 1 {
        return Err(Error::invalid("declared port count must be >= 1"));
    }
    let mut option: Option<OptionLine> = None;
    // Numeric tokens paired with the line each came from.
    let mut values: Vec<(f64, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line.to_ascii_lowercase().starts_with("[version]") {
                return Err(Error::parse(
                    line_no,
                    "Touchstone version 2 is not supported; supply a v1 file",
                ));
            }
            return Err(Error::parse(
                line_no,
                format!("unexpected keyword line '{line}'"),
            ));
        }
        if line.starts_with('#') {
            if option.is_some() {
                return Err(Error::parse(line_no, "duplicate option line"));
            }
            option = Some(parse_option_line(line, line_no)?);
            continue;
        }
        if option.is_none() {
            return Err(Error::parse(
                line_no,
                "data before option line (expected '# <unit> S <fmt> R <ohms>')",
            ));
        }
        for tok in line.split_whitespace() {
            let v = tok
                .parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("non-numeric token '{tok}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite value '{tok}'")));
            }
            values.push((v, line_no));
        }
    }

    let option = option.ok_or_else(|| Error::parse(1, "missing option line"))?;
    if values.is_empty() {
        return Err(Error::parse(1, "no data records"));
    }

    let n = declared_ports;
    let record = 1 + 2 * n * n;
    if !values.len().is_multiple_of(record) {
        let at = values.len() - values.len() % record;
        return Err(Error::parse(
            values[at].1,
            format!(
                "data length {} is not a multiple of the {}-port record size {}",
                values.len(),
                n,
                record
            ),
        ));
    }

    let order = entry_order(n);
    let mut freqs = Vec::with_capacity(values.len() / record);
    let mut mats = Vec::with_capacity(values.len() / record);
    for chunk in values.chunks_exact(record) {
        let (raw_freq, freq_line) = chunk[0];
        let freq = raw_freq * option.unit.multiplier();
        if freq <= 0.0 {
            return Err(Error::parse(
                freq_line,
                format!("frequency {raw_freq} not positive"),
            ));
        }
        if let Some(&prev) = freqs.last() {
            if freq <= prev {
                return Err(Error::parse(
                    freq_line,
                    format!("frequencies not strictly increasing at {raw_freq}"),
                ));
            }
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (k, &(i, j)) in order.iter().enumerate() {
            let a = chunk[1 + 2 * k].0;
            let b = chunk[2 + 2 * k].0;
            m[(i, j)] = option.format.decode(a, b);
        }
        freqs.push(freq);
        mats.push(m);
    }

    NetworkData::new(n, option.resistance, freqs, mats)
}

/// Serialize to Touchstone v1 text that [`parse_touchstone`] reads back.
///
/// Floats use Rust's shortest round-trip formatting, so an RI round-trip is
/// exact and MA/DB round-trips stay within conversion rounding.
pub fn write_touchstone(net: &NetworkData, unit: FreqUnit, format: ValueFormat) -> String {
    let n = net.port_count;
    let order = entry_order(n);
    let mut out = String::new();
    out.push_str(&format!(
        "# {} S {} R {}\n",
        unit.token(),
        format.token(),
        net.ref_impedance
    ));
    for (f, m) in net.freqs.iter().zip(net.s.iter()) {
        let mut fields: Vec<String> = vec![format!("{}", f / unit.multiplier())];
        for &(i, j) in &order {
            let (a, b) = format.encode(m[(i, j)]);
            fields.push(format!("{a}"));
            fields.push(format!("{b}"));
        }
        if n <= 2 {
            out.push_str(&fields.join(" "));
            out.push('\n');
        } else {
            // Row-major, new line per matrix row, at most 4 complex values
            // per line.
            out.push_str(&fields[0]);
            for row in 0..n {
                for (col_block, chunk) in fields[1 + 2 * n * row..1 + 2 * n * (row + 1)]
                    .chunks(8)
                    .enumerate()
                {
                    if row > 0 || col_block > 0 {
                        out.push('\n');
                    }
                    for field in chunk {
                        out.push(' ');
                        out.push_str(field);
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Interpolate a network onto `grid` (Hz) by per-entry linear interpolation
/// of the real and imaginary parts. No extrapolation: every grid point must
/// lie within the measured span.
pub fn resample(net: &NetworkData, grid: &[f64]) -> Result<NetworkData, Error> {
    let lo = *net.freqs.first().unwrap();
    let hi = *net.freqs.last().unwrap();
    for &g in grid {
        if !(g >= lo && g <= hi) {
            return Err(Error::OutOfRange(format!(
                "grid point {g} Hz outside measured span [{lo}, {hi}] Hz"
            )));
        }
    }

    let mut mats = Vec::with_capacity(grid.len());
    for &g in grid {
        // partition_point gives the first index with freq > g.
        let hi_idx = net.freqs.partition_point(|&f| f <= g);
        let m = if hi_idx == 0 {
            net.s[0].clone()
        } else if hi_idx >= net.freqs.len() {
            net.s[net.freqs.len() - 1].clone()
        } else {
            let (f0, f1) = (net.freqs[hi_idx - 1], net.freqs[hi_idx]);
            if g == f0 {
                net.s[hi_idx - 1].clone()
            } else {
                let t = (g - f0) / (f1 - f0);
                let (m0, m1) = (&net.s[hi_idx - 1], &net.s[hi_idx]);
                // v0*(1-t) + v1*t is exact at t = 0 and t = 1.
                DMatrix::from_fn(net.port_count, net.port_count, |i, j| {
                    let (a, b) = (m0[(i, j)], m1[(i, j)]);
                    Complex64::new(a.re * (1.0 - t) + b.re * t, a.im * (1.0 - t) + b.im * t)
                })
            }
        };
        mats.push(m);
    }
    NetworkData::new(net.port_count, net.ref_impedance, grid.to_vec(), mats)
}
