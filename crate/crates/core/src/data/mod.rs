//! Measured-data handling: configuration files, spectrum CSVs, noise
//! handling, peak extraction, drift interpolation, and the synthetic
//! experiment generator.
//!
//! A data set on disk is a directory holding `config.ini`, one
//! `pair_<m>.csv` spectrum per control pair (1-based), and `frf.csv` with
//! the single-tone sweep used for calibration. [`load_experiment`] reads
//! that layout into an [`ExperimentSet`]; [`save_experiment`] writes it
//! back bit-identically.

mod config;
mod csvio;
mod synth;

pub use config::{
    emit_config, parse_config, ChannelChoice, DriftConfig, ExperimentConfig, GridSpec,
    ReferenceConfig, SyntheticTruth, DEFAULT_GRID, MHZ, MICROVOLT,
};
pub use csvio::{read_two_column, write_two_column, SPECTRUM_HEADER};
pub use synth::generate_synthetic;

#[cfg(test)]
pub(crate) use config::SAMPLE;

use crate::calibration::{CalibrationError, FrfSweep};
use crate::forward::{Channel, ControlPair, ForwardError, Spectrum};
use crate::model::{HybridStiffness, ModelError, ParamVector};
use std::path::Path;
use thiserror::Error;

/// Peak search half-window, in units of the spectrum grid spacing.
pub const PEAK_WINDOW_BINS: f64 = 5.0;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}:{column}: {message}")]
    Schema {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{file}:{line}: unit mismatch: found `{found}` where `{expected}` is required")]
    Unit {
        file: String,
        line: usize,
        found: String,
        expected: String,
    },
    #[error("no spectrum bins within {half_window} Hz of the {u} Hz tone")]
    EmptyPeakWindow { u: f64, half_window: f64 },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

impl DataError {
    pub fn schema(file: &str, line: usize, column: usize, message: impl Into<String>) -> Self {
        DataError::Schema {
            file: file.to_string(),
            line,
            column,
            message: message.into(),
        }
    }
}

/// A complete experiment, ready for identification: the configuration it
/// was loaded from, per-pair drive definitions and drifted eigenfrequency
/// snapshots, the raw spectra, the calibration sweep, and the extracted
/// peak amplitude pairs (volts).
#[derive(Debug, Clone)]
pub struct ExperimentSet {
    pub config: ExperimentConfig,
    pub pairs: Vec<ControlPair>,
    /// Eigenfrequency snapshot at each measurement, from the drift model.
    pub hybrids: Vec<HybridStiffness>,
    pub q_plus: f64,
    pub q_minus: f64,
    /// The coordinate the detector observed.
    pub channel: Channel,
    pub spectra: Vec<Spectrum>,
    pub frf: FrfSweep,
    /// `(ẑ_u1, ẑ_u2)` per pair, after noise handling.
    pub peaks: Vec<(f64, f64)>,
}

impl ExperimentSet {
    /// Regularization anchor at the first eigenfrequency snapshot.
    pub fn reference_vector(&self) -> Result<ParamVector, ModelError> {
        self.config.reference_vector(&self.hybrids[0], (self.q_plus, self.q_minus))
    }
}

/// Estimate the noise floor of a spectrum as the mean bin amplitude and
/// subtract it, clamping at zero. Returns the cleaned spectrum and the
/// estimate.
pub fn subtract_noise(spectrum: &Spectrum) -> (Spectrum, f64) {
    let n = spectrum.amplitudes.len().max(1) as f64;
    let xi = spectrum.amplitudes.iter().sum::<f64>() / n;
    let amplitudes = spectrum
        .amplitudes
        .iter()
        .map(|a| (a - xi).max(0.0))
        .collect();
    (
        Spectrum {
            frequencies: spectrum.frequencies.clone(),
            amplitudes,
        },
        xi,
    )
}

/// Largest amplitude among the bins within `half_window` of the tone `u`.
pub fn extract_peak(spectrum: &Spectrum, u: f64, half_window: f64) -> Result<f64, DataError> {
    let mut best = f64::NEG_INFINITY;
    for (f, a) in spectrum.frequencies.iter().zip(&spectrum.amplitudes) {
        if (f - u).abs() <= half_window {
            best = best.max(*a);
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(DataError::EmptyPeakWindow { u, half_window });
    }
    Ok(best)
}

/// Eigenfrequency snapshots under a linear drift: measurement `m` of `n_c`
/// sits at fraction `(m−1)/(n_c−1)` between `start` and `end` (a single
/// measurement uses `start`).
pub fn drift_interpolate(
    start: HybridStiffness,
    end: HybridStiffness,
    n_c: usize,
) -> Result<Vec<HybridStiffness>, DataError> {
    if n_c == 0 {
        return Err(DataError::Invalid("need at least one measurement".into()));
    }
    let mut out = Vec::with_capacity(n_c);
    for m in 0..n_c {
        let frac = if n_c == 1 {
            0.0
        } else {
            m as f64 / (n_c - 1) as f64
        };
        // The two-coefficient form hits both endpoints exactly; the
        // `start + frac * (end - start)` form does not when the drift is
        // large relative to the endpoint magnitudes.
        out.push(HybridStiffness::new(
            (1.0 - frac) * start.eta_plus + frac * end.eta_plus,
            (1.0 - frac) * start.eta_minus + frac * end.eta_minus,
        )?);
    }
    Ok(out)
}

/// Build the working set from a parsed configuration plus raw spectra and
/// sweep. Peak extraction subtracts the estimated noise floor first, unless
/// the configured floor is zero (exactly noiseless data stays exact).
pub(crate) fn assemble_set(
    config: ExperimentConfig,
    spectra: Vec<Spectrum>,
    frf: FrfSweep,
) -> Result<ExperimentSet, DataError> {
    if spectra.len() != config.n_c {
        return Err(DataError::Invalid(format!(
            "{} spectra for n_c = {}",
            spectra.len(),
            config.n_c
        )));
    }
    let channel = config.resolved_channel();
    let (q_plus, q_minus) = config.resolved_q()?;
    let start = HybridStiffness::new(config.drift.eta_plus_start, config.drift.eta_minus_start)?;
    let end = HybridStiffness::new(config.drift.eta_plus_end, config.drift.eta_minus_end)?;
    let hybrids = drift_interpolate(start, end, config.n_c)?;
    let mut pairs = Vec::with_capacity(config.n_c);
    for &(u1, u2) in &config.pair_tones {
        pairs.push(ControlPair::new(u1, u2, config.amplitude)?);
    }
    let mut peaks = Vec::with_capacity(config.n_c);
    for (s, pair) in spectra.iter().zip(&pairs) {
        let (z1, z2) = if config.noise_floor > 0.0 {
            let (clean, _) = subtract_noise(s);
            let hw = PEAK_WINDOW_BINS * clean.grid_spacing();
            (
                extract_peak(&clean, pair.u1, hw)?,
                extract_peak(&clean, pair.u2, hw)?,
            )
        } else {
            let hw = PEAK_WINDOW_BINS * s.grid_spacing();
            (
                extract_peak(s, pair.u1, hw)?,
                extract_peak(s, pair.u2, hw)?,
            )
        };
        peaks.push((z1, z2));
    }
    Ok(ExperimentSet {
        config,
        pairs,
        hybrids,
        q_plus,
        q_minus,
        channel,
        spectra,
        frf,
        peaks,
    })
}

/// Read a data set directory: `config_path` plus `pair_<m>.csv` and
/// `frf.csv` under `data_dir`.
pub fn load_experiment(config_path: &Path, data_dir: &Path) -> Result<ExperimentSet, DataError> {
    let config = parse_config(config_path)?;
    let mut spectra = Vec::with_capacity(config.n_c);
    for m in 1..=config.n_c {
        let path = data_dir.join(format!("pair_{m}.csv"));
        let (frequencies, amplitudes) = read_two_column(&path, SPECTRUM_HEADER)?;
        let s = Spectrum {
            frequencies,
            amplitudes,
        };
        s.validate()?;
        spectra.push(s);
    }
    let (frequencies, amplitudes) = read_two_column(&data_dir.join("frf.csv"), SPECTRUM_HEADER)?;
    let frf = FrfSweep {
        frequencies,
        amplitudes,
        noise_floor: config.noise_floor,
    };
    frf.validate()?;
    assemble_set(config, spectra, frf)
}

/// Write a data set directory that [`load_experiment`] reads back
/// bit-identically: `config.ini` (with quality factors made explicit),
/// `pair_<m>.csv`, and `frf.csv`.
pub fn save_experiment(set: &ExperimentSet, dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(|e| DataError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let config_text = emit_config(&set.config, (set.q_plus, set.q_minus));
    csvio::write_atomic(&dir.join("config.ini"), config_text.as_bytes())?;
    for (i, s) in set.spectra.iter().enumerate() {
        write_two_column(
            &dir.join(format!("pair_{}.csv", i + 1)),
            SPECTRUM_HEADER,
            &s.frequencies,
            &s.amplitudes,
        )?;
    }
    write_two_column(
        &dir.join("frf.csv"),
        SPECTRUM_HEADER,
        &set.frf.frequencies,
        &set.frf.amplitudes,
    )?;
    Ok(())
}
