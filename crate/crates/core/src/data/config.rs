//! Experiment configuration files.
//!
//! The format is a sectioned key-value text file. `[experiment]`, `[drift]`,
//! `[pairs]`, `[bounds]`, `[references]`, and `[algorithm]` are required;
//! `[grid]` (spectrum grid layout) and `[truth]` (synthetic generator
//! parameters) are optional. The `[pairs]` section holds one comma-separated
//! row `m, u1_MHz, u2_MHz` per control pair. Keys carry their unit as a
//! suffix (`_MHz`, `_Hz`, `_uV`); values are converted to Hz and volts when
//! the file is read, and every parse error reports file, line, and column.

use super::csvio::{parse_float, split_unit};
use super::DataError;
use crate::forward::Channel;
use crate::identify::ReconstructionConfig;
use crate::model::{damping_reference, Bounds, Branch, HybridStiffness, ModelError, ParamVector};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const MHZ: f64 = 1e6;
pub const MICROVOLT: f64 = 1e-6;

/// Default spectrum grid used when the config has no `[grid]` section.
///
/// The spectrum half-span is wide enough that the two drive peaks barely
/// perturb the mean-amplitude noise estimate: even with a tone a few Hz
/// off resonance the estimate stays inside the lab-like 0.2 to 0.3 µV
/// band.
pub const DEFAULT_GRID: GridSpec = GridSpec {
    df: 2.0,
    half_span: 30_000.0,
    frf_df: 2.0,
    frf_half_span: 1_000.0,
};

/// Observed channel selection: fixed, or decided by which hybridized
/// resonance the drive band is closer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelChoice {
    Fixed(Channel),
    Auto,
}

impl std::fmt::Display for ChannelChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelChoice::Fixed(c) => write!(f, "{}", c.number()),
            ChannelChoice::Auto => write!(f, "auto"),
        }
    }
}

/// Linear drift of the hybridized eigenfrequencies over the experiment,
/// plus the quality factors reported for the two resonances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftConfig {
    pub eta_plus_start: f64,
    pub eta_plus_end: f64,
    pub eta_minus_start: f64,
    pub eta_minus_end: f64,
    pub q_plus: Option<f64>,
    pub q_minus: Option<f64>,
}

/// Regularization anchor: the reference angle, and optional explicit
/// damping references overriding the η/Q rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    pub theta_ref: f64,
    pub d1_ref: Option<f64>,
    pub d2_ref: Option<f64>,
}

/// Frequency-grid layout for generated spectra and the generated FRF sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Spectrum bin spacing in Hz.
    pub df: f64,
    /// Spectrum half-span around the drive band center, Hz.
    pub half_span: f64,
    /// FRF sweep spacing in Hz.
    pub frf_df: f64,
    /// FRF sweep half-span around the observed resonance, Hz.
    pub frf_half_span: f64,
}

/// Ground truth for the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticTruth {
    pub theta: f64,
    pub branch: Branch,
    pub d1: f64,
    pub d2: f64,
    /// Volts per simulated response unit.
    pub chi: f64,
    /// Drift endpoints (start, end) of the lower resonance, Hz.
    pub eta_plus_span: (f64, f64),
    /// Drift endpoints (start, end) of the upper resonance, Hz.
    pub eta_minus_span: (f64, f64),
    /// Mean noise floor in volts.
    pub xi: f64,
    pub seed: u64,
}

/// Fully parsed configuration with all units normalized to Hz and volts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_c: usize,
    pub amplitude: f64,
    pub channel: ChannelChoice,
    /// Configured mean noise floor ξ in volts.
    pub noise_floor: f64,
    pub drift: DriftConfig,
    /// Tone frequencies (u1, u2) per pair, Hz.
    pub pair_tones: Vec<(f64, f64)>,
    pub bounds: Bounds,
    pub references: ReferenceConfig,
    pub algorithm: ReconstructionConfig,
    pub grid: GridSpec,
    pub truth: Option<SyntheticTruth>,
}

impl ExperimentConfig {
    /// Regularization anchor at a given eigenfrequency snapshot: the
    /// configured reference angle with damping references `d± = η±/Q±`
    /// unless `[references]` overrides them explicitly.
    pub fn reference_vector(
        &self,
        hybrid: &HybridStiffness,
        q: (f64, f64),
    ) -> Result<ParamVector, ModelError> {
        let (d1, d2) = damping_reference(hybrid.eta_plus, hybrid.eta_minus, q.0, q.1)?;
        Ok(ParamVector::new(
            self.references.theta_ref,
            self.references.d1_ref.unwrap_or(d1),
            self.references.d2_ref.unwrap_or(d2),
            Branch::Rotation,
        ))
    }

    /// Resolve `auto` channel selection: the drive band belongs to whichever
    /// hybridized resonance its center is closer to.
    pub fn resolved_channel(&self) -> Channel {
        match self.channel {
            ChannelChoice::Fixed(c) => c,
            ChannelChoice::Auto => {
                let center = self
                    .pair_tones
                    .iter()
                    .map(|(a, b)| 0.5 * (a + b))
                    .sum::<f64>()
                    / self.pair_tones.len().max(1) as f64;
                if (center - self.drift.eta_plus_start).abs()
                    <= (center - self.drift.eta_minus_start).abs()
                {
                    Channel::One
                } else {
                    Channel::Two
                }
            }
        }
    }

    /// Quality factors, from `[drift]` when given, otherwise derived from
    /// the truth section (sweeps of the synthetic system report factors
    /// consistent with the underlying mode dampings).
    pub fn resolved_q(&self) -> Result<(f64, f64), DataError> {
        match (self.drift.q_plus, self.drift.q_minus) {
            (Some(p), Some(m)) => Ok((p, m)),
            _ => match &self.truth {
                Some(t) => Ok((
                    t.eta_plus_span.0 / t.d1,
                    t.eta_minus_span.0 / t.d2,
                )),
                None => Err(DataError::Invalid(
                    "Q_plus/Q_minus missing from [drift] and no [truth] section to derive them"
                        .into(),
                )),
            },
        }
    }
}

// ---- parsing ----

struct Entry {
    value: String,
    line: usize,
    col: usize,
    used: bool,
}

struct Row {
    fields: Vec<(String, usize)>,
    line: usize,
}

#[derive(Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
    rows: Vec<Row>,
}

struct Parsed {
    file: String,
    sections: BTreeMap<String, Section>,
}

impl Parsed {
    fn section(&mut self, name: &str) -> Result<&mut Section, DataError> {
        if !self.sections.contains_key(name) {
            return Err(DataError::schema(
                &self.file,
                1,
                1,
                format!("missing required section [{name}]"),
            ));
        }
        Ok(self.sections.get_mut(name).unwrap())
    }

    fn take(&mut self, section: &str, key: &str) -> Result<(String, usize, usize), DataError> {
        let file = self.file.clone();
        let sec = self.section(section)?;
        let sec_line = sec.line;
        match sec.entries.get_mut(key) {
            Some(e) => {
                e.used = true;
                Ok((e.value.clone(), e.line, e.col))
            }
            None => {
                // Same base with a different unit suffix is a unit error.
                let (want_base, want_tag) = split_unit(key);
                for (other, e) in &sec.entries {
                    let (base, tag) = split_unit(other);
                    if base == want_base && tag != want_tag {
                        return Err(DataError::Unit {
                            file,
                            line: e.line,
                            found: other.clone(),
                            expected: key.to_string(),
                        });
                    }
                }
                Err(DataError::schema(
                    &file,
                    sec_line,
                    1,
                    format!("missing key `{key}` in section [{section}]"),
                ))
            }
        }
    }

    fn take_optional(&mut self, section: &str, key: &str) -> Option<(String, usize, usize)> {
        let sec = self.sections.get_mut(section)?;
        let e = sec.entries.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line, e.col))
    }

    fn take_f64(&mut self, section: &str, key: &str) -> Result<f64, DataError> {
        let (v, line, col) = self.take(section, key)?;
        parse_float(&self.file, line, col, &v)
    }

    fn take_f64_optional(&mut self, section: &str, key: &str) -> Result<Option<f64>, DataError> {
        match self.take_optional(section, key) {
            Some((v, line, col)) => Ok(Some(parse_float(&self.file, line, col, &v)?)),
            None => Ok(None),
        }
    }

    fn finish(self, known_sections: &[&str]) -> Result<(), DataError> {
        for (name, sec) in &self.sections {
            if !known_sections.contains(&name.as_str()) {
                return Err(DataError::schema(
                    &self.file,
                    sec.line,
                    1,
                    format!("unknown section [{name}]"),
                ));
            }
            for (key, e) in &sec.entries {
                if !e.used {
                    return Err(DataError::schema(
                        &self.file,
                        e.line,
                        1,
                        format!("unknown key `{key}` in section [{name}]"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn tokenize(path: &Path) -> Result<Parsed, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let file = path.display().to_string();
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                DataError::schema(&file, line_no, 1, "unterminated section header")
            })?;
            if sections.contains_key(name) {
                return Err(DataError::schema(
                    &file,
                    line_no,
                    1,
                    format!("duplicate section [{name}]"),
                ));
            }
            sections.insert(
                name.to_string(),
                Section { line: line_no, ..Default::default() },
            );
            current = Some(name.to_string());
            continue;
        }
        let Some(section_name) = current.clone() else {
            return Err(DataError::schema(
                &file,
                line_no,
                1,
                "content before the first section header",
            ));
        };
        let section = sections.get_mut(&section_name).unwrap();
        if let Some(eq) = line.find('=') {
            let key = line[..eq].trim().to_string();
            let after = &line[eq + 1..];
            let value = after.trim().to_string();
            let col = eq + 2 + (after.len() - after.trim_start().len());
            if key.is_empty() || value.is_empty() {
                return Err(DataError::schema(&file, line_no, 1, "malformed key = value line"));
            }
            if section
                .entries
                .insert(key.clone(), Entry { value, line: line_no, col, used: false })
                .is_some()
            {
                return Err(DataError::schema(
                    &file,
                    line_no,
                    1,
                    format!("duplicate key `{key}`"),
                ));
            }
        } else {
            // Comma-separated row (used by [pairs]).
            let mut fields = Vec::new();
            let mut offset = 0usize;
            for field in line.split(',') {
                let lead = field.len() - field.trim_start().len();
                fields.push((field.trim().to_string(), offset + lead + 1));
                offset += field.len() + 1;
            }
            section.rows.push(Row { fields, line: line_no });
        }
    }
    Ok(Parsed { file, sections })
}

/// Parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, DataError> {
    let mut p = tokenize(path)?;
    let file = p.file.clone();

    // [experiment]
    let n_c_raw = p.take("experiment", "n_c")?;
    let n_c = n_c_raw.0.parse::<usize>().map_err(|_| {
        DataError::schema(&file, n_c_raw.1, n_c_raw.2, "n_c must be a positive integer")
    })?;
    let amplitude = p.take_f64("experiment", "amplitude_A")?;
    let noise_floor = p.take_f64("experiment", "noise_floor_uV")? * MICROVOLT;
    let channel_raw = p.take("experiment", "channel")?;
    let channel = match channel_raw.0.as_str() {
        "auto" => ChannelChoice::Auto,
        "1" => ChannelChoice::Fixed(Channel::One),
        "2" => ChannelChoice::Fixed(Channel::Two),
        other => {
            return Err(DataError::schema(
                &file,
                channel_raw.1,
                channel_raw.2,
                format!("channel must be 1, 2, or auto, got `{other}`"),
            ))
        }
    };

    // [drift]
    let drift = DriftConfig {
        eta_plus_start: p.take_f64("drift", "eta_plus_start_MHz")? * MHZ,
        eta_plus_end: p.take_f64("drift", "eta_plus_end_MHz")? * MHZ,
        eta_minus_start: p.take_f64("drift", "eta_minus_start_MHz")? * MHZ,
        eta_minus_end: p.take_f64("drift", "eta_minus_end_MHz")? * MHZ,
        q_plus: p.take_f64_optional("drift", "Q_plus")?,
        q_minus: p.take_f64_optional("drift", "Q_minus")?,
    };

    // [pairs]
    let pairs_section = p.section("pairs")?;
    let mut pair_tones = Vec::new();
    let rows = std::mem::take(&mut pairs_section.rows);
    let pairs_line = pairs_section.line;
    for (i, row) in rows.iter().enumerate() {
        if row.fields.len() != 3 {
            return Err(DataError::schema(
                &file,
                row.line,
                1,
                format!("pair rows have 3 fields (m, u1_MHz, u2_MHz), found {}", row.fields.len()),
            ));
        }
        let m: usize = row.fields[0].0.parse().map_err(|_| {
            DataError::schema(&file, row.line, row.fields[0].1, "pair index must be an integer")
        })?;
        if m != i + 1 {
            return Err(DataError::schema(
                &file,
                row.line,
                row.fields[0].1,
                format!("pair rows must be numbered sequentially from 1, expected {}", i + 1),
            ));
        }
        let u1 = parse_float(&file, row.line, row.fields[1].1, &row.fields[1].0)? * MHZ;
        let u2 = parse_float(&file, row.line, row.fields[2].1, &row.fields[2].0)? * MHZ;
        if !(u1 < u2) || !(u1 > 0.0) {
            return Err(DataError::schema(
                &file,
                row.line,
                row.fields[1].1,
                format!("tones must satisfy 0 < u1 < u2, got ({u1}, {u2}) Hz"),
            ));
        }
        pair_tones.push((u1, u2));
    }
    if pair_tones.len() != n_c {
        return Err(DataError::schema(
            &file,
            pairs_line,
            1,
            format!("[pairs] has {} rows but n_c = {n_c}", pair_tones.len()),
        ));
    }

    // [bounds]
    let theta_min = p.take_f64("bounds", "theta_min")?;
    let theta_max = p.take_f64("bounds", "theta_max")?;
    let d_min = p.take_f64("bounds", "d_min_Hz")?;
    let d_max = p.take_f64("bounds", "d_max_Hz")?;
    let bounds = Bounds::new([theta_min, d_min, d_min], [theta_max, d_max, d_max])
        .map_err(|e| DataError::Invalid(e.to_string()))?;

    // [references]
    let references = ReferenceConfig {
        theta_ref: p.take_f64("references", "theta_ref")?,
        d1_ref: p.take_f64_optional("references", "d1_ref_Hz")?,
        d2_ref: p.take_f64_optional("references", "d2_ref_Hz")?,
    };

    // [algorithm]
    let algorithm = ReconstructionConfig {
        nu0: p.take_f64("algorithm", "nu0")?,
        beta: p.take_f64("algorithm", "beta")?,
        tol: p.take_f64("algorithm", "tol")?,
        l_max: {
            let raw = p.take("algorithm", "l_max")?;
            raw.0.parse::<usize>().map_err(|_| {
                DataError::schema(&file, raw.1, raw.2, "l_max must be a nonnegative integer")
            })?
        },
        d_floor: p.take_f64("algorithm", "d_floor_Hz")?,
    };

    // [grid] (optional)
    let grid = if p.sections.contains_key("grid") {
        GridSpec {
            df: p.take_f64("grid", "df_Hz")?,
            half_span: p.take_f64("grid", "half_span_Hz")?,
            frf_df: p.take_f64("grid", "frf_df_Hz")?,
            frf_half_span: p.take_f64("grid", "frf_half_span_Hz")?,
        }
    } else {
        DEFAULT_GRID
    };

    // [truth] (optional)
    let truth = if p.sections.contains_key("truth") {
        let branch_raw = p.take("truth", "branch")?;
        let branch: Branch = branch_raw.0.parse().map_err(|e| {
            DataError::schema(&file, branch_raw.1, branch_raw.2, format!("{e}"))
        })?;
        let seed_raw = p.take("truth", "seed")?;
        let seed = seed_raw.0.parse::<u64>().map_err(|_| {
            DataError::schema(&file, seed_raw.1, seed_raw.2, "seed must be a nonnegative integer")
        })?;
        let d1 = p.take_f64("truth", "d1_Hz")?;
        let d2 = p.take_f64("truth", "d2_Hz")?;
        if !(d1 > 0.0) || !(d2 > 0.0) {
            return Err(DataError::Invalid(format!(
                "truth dampings must be positive, got d1={d1}, d2={d2}"
            )));
        }
        Some(SyntheticTruth {
            theta: p.take_f64("truth", "theta")?,
            branch,
            d1,
            d2,
            chi: p.take_f64("truth", "chi")?,
            eta_plus_span: (drift.eta_plus_start, drift.eta_plus_end),
            eta_minus_span: (drift.eta_minus_start, drift.eta_minus_end),
            xi: p.take_f64("truth", "xi_uV")? * MICROVOLT,
            seed,
        })
    } else {
        None
    };

    p.finish(&[
        "experiment",
        "drift",
        "pairs",
        "bounds",
        "references",
        "algorithm",
        "grid",
        "truth",
    ])?;

    let cfg = ExperimentConfig {
        n_c,
        amplitude,
        channel,
        noise_floor,
        drift,
        pair_tones,
        bounds,
        references,
        algorithm,
        grid,
        truth,
    };
    validate_config(&cfg)?;
    Ok(cfg)
}

fn validate_config(cfg: &ExperimentConfig) -> Result<(), DataError> {
    if cfg.n_c == 0 {
        return Err(DataError::Invalid("n_c must be at least 1".into()));
    }
    if !(cfg.amplitude >= 0.0) {
        return Err(DataError::Invalid(format!(
            "amplitude must be nonnegative, got {}",
            cfg.amplitude
        )));
    }
    if !(cfg.noise_floor >= 0.0) {
        return Err(DataError::Invalid(format!(
            "noise floor must be nonnegative, got {}",
            cfg.noise_floor
        )));
    }
    let d = &cfg.drift;
    for eta in [d.eta_plus_start, d.eta_plus_end, d.eta_minus_start, d.eta_minus_end] {
        if !(eta > 0.0) {
            return Err(DataError::Invalid(format!(
                "drift eigenfrequencies must be positive, got {eta}"
            )));
        }
    }
    if d.eta_plus_start >= d.eta_minus_start || d.eta_plus_end >= d.eta_minus_end {
        return Err(DataError::Invalid(
            "drift endpoints must keep eta_plus below eta_minus".into(),
        ));
    }
    for q in [d.q_plus, d.q_minus].into_iter().flatten() {
        if !(q > 0.0) {
            return Err(DataError::Invalid(format!("quality factors must be positive, got {q}")));
        }
    }
    let a = &cfg.algorithm;
    if !(a.nu0 > 0.0) || !(a.beta > 0.0) || a.beta >= 1.0 {
        return Err(DataError::Invalid(format!(
            "need nu0 > 0 and 0 < beta < 1, got nu0={}, beta={}",
            a.nu0, a.beta
        )));
    }
    if !(a.tol >= 0.0) || !(a.d_floor > 0.0) {
        return Err(DataError::Invalid(format!(
            "need tol >= 0 and d_floor > 0, got tol={}, d_floor={}",
            a.tol, a.d_floor
        )));
    }
    let g = &cfg.grid;
    if !(g.df > 0.0) || !(g.half_span > 0.0) || !(g.frf_df > 0.0) || !(g.frf_half_span > 0.0) {
        return Err(DataError::Invalid("grid spacings and spans must be positive".into()));
    }
    Ok(())
}

/// Canonical emission of a configuration; floats use shortest round-trip
/// formatting so that rewritten files preserve every value exactly.
pub fn emit_config(cfg: &ExperimentConfig, q: (f64, f64)) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[experiment]");
    let _ = writeln!(s, "n_c = {}", cfg.n_c);
    let _ = writeln!(s, "amplitude_A = {}", cfg.amplitude);
    let _ = writeln!(s, "channel = {}", cfg.channel);
    let _ = writeln!(s, "noise_floor_uV = {}", cfg.noise_floor / MICROVOLT);
    let _ = writeln!(s);
    let _ = writeln!(s, "[drift]");
    let _ = writeln!(s, "eta_plus_start_MHz = {}", cfg.drift.eta_plus_start / MHZ);
    let _ = writeln!(s, "eta_plus_end_MHz = {}", cfg.drift.eta_plus_end / MHZ);
    let _ = writeln!(s, "eta_minus_start_MHz = {}", cfg.drift.eta_minus_start / MHZ);
    let _ = writeln!(s, "eta_minus_end_MHz = {}", cfg.drift.eta_minus_end / MHZ);
    let _ = writeln!(s, "Q_plus = {}", q.0);
    let _ = writeln!(s, "Q_minus = {}", q.1);
    let _ = writeln!(s);
    let _ = writeln!(s, "[pairs]");
    for (i, (u1, u2)) in cfg.pair_tones.iter().enumerate() {
        let _ = writeln!(s, "{}, {}, {}", i + 1, u1 / MHZ, u2 / MHZ);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[bounds]");
    let _ = writeln!(s, "theta_min = {}", cfg.bounds.min[0]);
    let _ = writeln!(s, "theta_max = {}", cfg.bounds.max[0]);
    let _ = writeln!(s, "d_min_Hz = {}", cfg.bounds.min[1]);
    let _ = writeln!(s, "d_max_Hz = {}", cfg.bounds.max[1]);
    let _ = writeln!(s);
    let _ = writeln!(s, "[references]");
    let _ = writeln!(s, "theta_ref = {}", cfg.references.theta_ref);
    if let Some(d) = cfg.references.d1_ref {
        let _ = writeln!(s, "d1_ref_Hz = {d}");
    }
    if let Some(d) = cfg.references.d2_ref {
        let _ = writeln!(s, "d2_ref_Hz = {d}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[algorithm]");
    let _ = writeln!(s, "nu0 = {}", cfg.algorithm.nu0);
    let _ = writeln!(s, "beta = {}", cfg.algorithm.beta);
    let _ = writeln!(s, "tol = {}", cfg.algorithm.tol);
    let _ = writeln!(s, "l_max = {}", cfg.algorithm.l_max);
    let _ = writeln!(s, "d_floor_Hz = {}", cfg.algorithm.d_floor);
    let _ = writeln!(s);
    let _ = writeln!(s, "[grid]");
    let _ = writeln!(s, "df_Hz = {}", cfg.grid.df);
    let _ = writeln!(s, "half_span_Hz = {}", cfg.grid.half_span);
    let _ = writeln!(s, "frf_df_Hz = {}", cfg.grid.frf_df);
    let _ = writeln!(s, "frf_half_span_Hz = {}", cfg.grid.frf_half_span);
    if let Some(t) = &cfg.truth {
        let _ = writeln!(s);
        let _ = writeln!(s, "[truth]");
        let _ = writeln!(s, "theta = {}", t.theta);
        let _ = writeln!(s, "branch = {}", t.branch);
        let _ = writeln!(s, "d1_Hz = {}", t.d1);
        let _ = writeln!(s, "d2_Hz = {}", t.d2);
        let _ = writeln!(s, "chi = {}", t.chi);
        let _ = writeln!(s, "xi_uV = {}", t.xi / MICROVOLT);
        let _ = writeln!(s, "seed = {}", t.seed);
    }
    s
}

/// Shared fixture: the two-tone lower-resonance experiment exercised
/// throughout the data and identification tests.
#[cfg(test)]
pub(crate) const SAMPLE: &str = "\
# two-tone experiment near the lower resonance
[experiment]
n_c = 5
amplitude_A = 1.0
channel = auto
noise_floor_uV = 0.25

[drift]
eta_plus_start_MHz = 6.9399855
eta_plus_end_MHz = 6.9403855
eta_minus_start_MHz = 7.0272855
eta_minus_end_MHz = 7.0276855

[pairs]
1, 6.94016, 6.94036
2, 6.94018, 6.94034
3, 6.94020, 6.94032
4, 6.94024, 6.94028
5, 6.94025, 6.94027

[bounds]
theta_min = -6.283185307179586
theta_max = 6.283185307179586
d_min_Hz = -100
d_max_Hz = 100

[references]
theta_ref = 1.9634954084936207

[algorithm]
nu0 = 0.1
beta = 0.1
tol = 1e-12
l_max = 9
d_floor_Hz = 1e-6

[truth]
theta = 1.9498
branch = rotation
d1_Hz = 30
d2_Hz = 45
chi = 12000000
xi_uV = 0.25
seed = 42
";

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write_sample(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempdir().unwrap();
        let path = dir.path().join("config.ini");
        std::fs::write(&path, text).unwrap();
        (dir, path)
    }

    #[test]
    fn sample_parses_and_normalizes_units() {
        let (_dir, path) = write_sample(SAMPLE);
        let cfg = parse_config(&path).unwrap();
        assert_eq!(cfg.n_c, 5);
        assert_eq!(cfg.pair_tones.len(), 5);
        assert_eq!(cfg.pair_tones[0].0, 6.94016e6);
        assert_eq!(cfg.noise_floor, 0.25e-6);
        assert_eq!(cfg.drift.eta_plus_start, 6.9399855e6);
        let t = cfg.truth.unwrap();
        assert_eq!(t.xi, 0.25e-6);
        assert_eq!(t.seed, 42);
        assert_eq!(t.eta_plus_span, (6.9399855e6, 6.9403855e6));
        // Band near eta_plus selects channel 1.
        assert_eq!(cfg.resolved_channel(), Channel::One);
        // Q derived from the truth dampings when [drift] omits it.
        let (qp, qm) = cfg.resolved_q().unwrap();
        assert!((qp - 6.9399855e6 / 30.0).abs() < 1e-6);
        assert!((qm - 7.0272855e6 / 45.0).abs() < 1e-6);
    }

    #[test]
    fn unknown_key_reports_position() {
        let bad = SAMPLE.replace("nu0 = 0.1", "nu0 = 0.1\nmystery = 3");
        let (_dir, path) = write_sample(&bad);
        let err = parse_config(&path).unwrap_err();
        match err {
            DataError::Schema { message, .. } => assert!(message.contains("mystery")),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn wrong_unit_suffix_is_a_unit_error() {
        let bad = SAMPLE.replace("noise_floor_uV = 0.25", "noise_floor_mV = 0.25");
        let (_dir, path) = write_sample(&bad);
        let err = parse_config(&path).unwrap_err();
        assert!(matches!(err, DataError::Unit { .. }), "got {err}");
    }

    #[test]
    fn bad_number_reports_line_and_column() {
        let bad = SAMPLE.replace("beta = 0.1", "beta = fast");
        let (_dir, path) = write_sample(&bad);
        match parse_config(&path).unwrap_err() {
            DataError::Schema { line, column, .. } => {
                let src_line = bad.lines().nth(line - 1).unwrap();
                assert_eq!(&src_line[column - 1..column + 3], "fast");
            }
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn pair_rows_must_be_sequential() {
        let bad = SAMPLE.replace("3, 6.94020, 6.94032", "7, 6.94020, 6.94032");
        let (_dir, path) = write_sample(&bad);
        assert!(matches!(parse_config(&path), Err(DataError::Schema { .. })));
    }

    #[test]
    fn emitted_config_reparses_identically() {
        let (_dir, path) = write_sample(SAMPLE);
        let cfg = parse_config(&path).unwrap();
        let q = cfg.resolved_q().unwrap();
        let emitted = emit_config(&cfg, q);
        let dir2 = tempdir().unwrap();
        let path2 = dir2.path().join("config.ini");
        std::fs::write(&path2, &emitted).unwrap();
        let cfg2 = parse_config(&path2).unwrap();
        assert_eq!(cfg2.n_c, cfg.n_c);
        assert_eq!(cfg2.pair_tones, cfg.pair_tones);
        assert_eq!(cfg2.bounds, cfg.bounds);
        assert_eq!(cfg2.truth, cfg.truth);
        assert_eq!(cfg2.drift.q_plus, Some(q.0));
        // Emission is a fixed point once Q is explicit.
        let emitted2 = emit_config(&cfg2, cfg2.resolved_q().unwrap());
        assert_eq!(emitted, emitted2);
    }

    #[test]
    fn auto_channel_follows_band_center() {
        let swapped = SAMPLE.replace(
            "[pairs]
1, 6.94016, 6.94036
2, 6.94018, 6.94034
3, 6.94020, 6.94032
4, 6.94024, 6.94028
5, 6.94025, 6.94027",
            "[pairs]
1, 7.02750, 7.02770
2, 7.02752, 7.02768
3, 7.02754, 7.02766
4, 7.02758, 7.02762
5, 7.02759, 7.02761",
        );
        let (_dir, path) = write_sample(&swapped);
        let cfg = parse_config(&path).unwrap();
        assert_eq!(cfg.resolved_channel(), Channel::Two);
    }
}
