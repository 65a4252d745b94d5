//! Synthetic experiment generator.
//!
//! Produces a data set with a known ground truth: per-pair spectra whose
//! two drive-tone bins carry the scaled steady-state peak amplitudes on
//! top of a uniform noise floor, and a single-tone calibration sweep over
//! the observed resonance. All randomness comes from a single seeded
//! stream, so a configuration generates the same bytes every time.

use super::config::{ExperimentConfig, SyntheticTruth};
use super::{assemble_set, DataError, ExperimentSet};
use crate::calibration::{simulate_frf, FrfSweep};
use crate::forward::{frequency_response, Spectrum};
use crate::model::{HybridStiffness, ParamVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform grid of integer multiples of `df` covering
/// `[center − half_span, center + half_span]`.
fn uniform_grid(center: f64, half_span: f64, df: f64) -> Result<Vec<f64>, DataError> {
    let k_min = ((center - half_span) / df).ceil() as i64;
    let k_max = ((center + half_span) / df).floor() as i64;
    if k_min < 1 || k_max < k_min {
        return Err(DataError::Invalid(format!(
            "grid spacing {df} Hz and half-span {half_span} Hz leave no usable bins \
             around {center} Hz"
        )));
    }
    Ok((k_min..=k_max).map(|k| k as f64 * df).collect())
}

/// Generate a synthetic experiment from a configuration carrying a
/// `[truth]` section.
///
/// Per pair, in order: every spectrum bin draws a noise amplitude uniform
/// in `[0, 2ξ)` (mean ξ), then the bins nearest the two drive tones gain
/// the scaled response peaks `χ·|ẑ(u_i)|`. The calibration sweep draws its
/// noise last and rides on `χ` times the simulated unit-drive FRF at the
/// first measurement's eigenfrequencies. The noise stream is always
/// consumed, so the same seed yields the same spectra whatever ξ is; with
/// ξ = 0 the off-peak bins are exactly zero and the peak bins are exactly
/// the scaled responses.
pub fn generate_synthetic(config: &ExperimentConfig) -> Result<ExperimentSet, DataError> {
    let truth: &SyntheticTruth = config.truth.as_ref().ok_or_else(|| {
        DataError::Invalid("synthetic generation needs a [truth] section".into())
    })?;
    let p_true = ParamVector::new(truth.theta, truth.d1, truth.d2, truth.branch);
    let start = HybridStiffness::new(truth.eta_plus_span.0, truth.eta_minus_span.0)?;
    let end = HybridStiffness::new(truth.eta_plus_span.1, truth.eta_minus_span.1)?;
    let hybrids = super::drift_interpolate(start, end, config.n_c)?;
    let channel = config.resolved_channel();
    let grid = &config.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(truth.seed);

    let mut spectra = Vec::with_capacity(config.n_c);
    for (m, &(u1, u2)) in config.pair_tones.iter().enumerate() {
        let center = 0.5 * (u1 + u2);
        let frequencies = uniform_grid(center, grid.half_span, grid.df)?;
        let amplitudes: Vec<f64> = frequencies
            .iter()
            .map(|_| 2.0 * truth.xi * rng.gen::<f64>())
            .collect();
        let mut s = Spectrum {
            frequencies,
            amplitudes,
        };
        for u in [u1, u2] {
            let z = frequency_response(&p_true, &hybrids[m], u, config.amplitude, channel)?;
            let bin = s.nearest_bin(u);
            s.amplitudes[bin] += truth.chi * z.norm();
        }
        spectra.push(s);
    }

    let eta_obs = match channel {
        crate::forward::Channel::One => hybrids[0].eta_plus,
        crate::forward::Channel::Two => hybrids[0].eta_minus,
    };
    let frf_grid = uniform_grid(eta_obs, grid.frf_half_span, grid.frf_df)?;
    let sim = simulate_frf(&p_true, &hybrids[0], &frf_grid, channel)?;
    let frf_amplitudes: Vec<f64> = sim
        .iter()
        .map(|&a| truth.chi * a + 2.0 * truth.xi * rng.gen::<f64>())
        .collect();
    let frf = FrfSweep {
        frequencies: frf_grid,
        amplitudes: frf_amplitudes,
        noise_floor: config.noise_floor,
    };

    assemble_set(config.clone(), spectra, frf)
}
