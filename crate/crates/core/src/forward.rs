//! Steady-state response of the driven two-mode system.
//!
//! The identification drives the resonator with a two-tone signal
//! `b(t) = A cos(2π u1 t) + A cos(2π u2 t)` applied equally to both
//! hybridized coordinates, and observes the amplitude spectrum of one
//! hybridized coordinate. Because the model is linear, the steady state
//! at each tone is a single phasor obtained from a 2×2 complex solve; a
//! time-domain integration with a windowed discrete spectrum provides an
//! independent route to the same numbers and is kept for cross-checking.

use crate::model::{rotation_from_theta, HybridStiffness, ParamVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Steady-state phasor of one observed coordinate.
pub type ComplexAmplitude = Complex64;

/// Relative determinant magnitude below which the frequency-domain system
/// is treated as singular at the drive.
pub const SINGULARITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error("system matrix is singular at drive frequency {u} Hz")]
    SingularAtDrive { u: f64 },
    #[error("time step {dt:.3e} s exceeds the resolution limit {limit:.3e} s")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("time window contains no samples")]
    EmptyWindow,
    #[error("invalid control pair: {0}")]
    InvalidPair(String),
    #[error("invalid time window: {0}")]
    InvalidWindow(String),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

/// Which hybridized coordinate is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    One,
    Two,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Channel::One => 0,
            Channel::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Result<Self, ForwardError> {
        match n {
            1 => Ok(Channel::One),
            2 => Ok(Channel::Two),
            other => Err(ForwardError::InvalidSpectrum(format!(
                "channel must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// One two-tone drive setting: tone frequencies in Hz (u1 < u2) and the
/// shared tone amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPair {
    pub u1: f64,
    pub u2: f64,
    pub amplitude: f64,
}

impl ControlPair {
    pub fn new(u1: f64, u2: f64, amplitude: f64) -> Result<Self, ForwardError> {
        if !(u1 > 0.0) || !(u2 > 0.0) {
            return Err(ForwardError::InvalidPair(format!(
                "tone frequencies must be positive, got ({u1}, {u2})"
            )));
        }
        if !(u1 < u2) {
            return Err(ForwardError::InvalidPair(format!(
                "tones must be ordered u1 < u2, got ({u1}, {u2})"
            )));
        }
        if !(amplitude >= 0.0) {
            return Err(ForwardError::InvalidPair(format!(
                "amplitude must be nonnegative, got {amplitude}"
            )));
        }
        Ok(Self { u1, u2, amplitude })
    }
}

/// Sampling window for the time-domain route: integrate to `t_total`,
/// discard everything before `t_trans`, sample at `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_trans: f64,
    pub t_total: f64,
    pub dt: f64,
}

impl TimeWindow {
    pub fn new(t_trans: f64, t_total: f64, dt: f64) -> Result<Self, ForwardError> {
        let w = Self { t_trans, t_total, dt };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), ForwardError> {
        if !(self.dt > 0.0) {
            return Err(ForwardError::InvalidWindow(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_trans >= 0.0) || !(self.t_total > self.t_trans) {
            return Err(ForwardError::InvalidWindow(format!(
                "need 0 <= t_trans < t_total, got t_trans={}, t_total={}",
                self.t_trans, self.t_total
            )));
        }
        let count = (self.t_total - self.t_trans) / self.dt;
        if (count - count.round()).abs() > 1e-6 * count.max(1.0) || count.round() < 1.0 {
            return Err(ForwardError::InvalidWindow(format!(
                "(t_total - t_trans)/dt must be a positive integer, got {count}"
            )));
        }
        Ok(())
    }

    /// Number of retained samples; the window [t_trans, t_total) is
    /// half-open so the sample count equals the span divided by dt.
    pub fn sample_count(&self) -> usize {
        ((self.t_total - self.t_trans) / self.dt).round() as usize
    }
}

/// One-sided amplitude spectrum on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl Spectrum {
    pub fn validate(&self) -> Result<(), ForwardError> {
        if self.frequencies.len() != self.amplitudes.len() {
            return Err(ForwardError::InvalidSpectrum(format!(
                "length mismatch: {} frequencies vs {} amplitudes",
                self.frequencies.len(),
                self.amplitudes.len()
            )));
        }
        if self.frequencies.is_empty() {
            return Err(ForwardError::InvalidSpectrum("empty spectrum".into()));
        }
        if self.frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ForwardError::InvalidSpectrum(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Grid spacing, assuming a uniform grid.
    pub fn grid_spacing(&self) -> f64 {
        if self.frequencies.len() < 2 {
            return 0.0;
        }
        (self.frequencies[self.frequencies.len() - 1] - self.frequencies[0])
            / (self.frequencies.len() - 1) as f64
    }

    /// Index of the grid point nearest `f`.
    pub fn nearest_bin(&self, f: f64) -> usize {
        let df = self.grid_spacing();
        if df <= 0.0 {
            return 0;
        }
        let idx = ((f - self.frequencies[0]) / df).round();
        (idx.max(0.0) as usize).min(self.frequencies.len() - 1)
    }
}

/// Hybridized-coordinate trajectory sampled uniformly at `dt` starting at
/// `t_start`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t_start: f64,
    pub dt: f64,
    pub samples: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn channel(&self, channel: Channel) -> Vec<f64> {
        let i = channel.index();
        self.samples.iter().map(|s| s[i]).collect()
    }
}

/// Two-tone drive value at time `t`. Equivalently
/// `2A cos(π(u1+u2) t) cos(π(u1−u2) t)`: a carrier at the mean frequency
/// under a beat envelope with period 1/(u2−u1).
pub fn drive_value(pair: &ControlPair, t: f64) -> f64 {
    pair.amplitude * ((TAU * pair.u1 * t).cos() + (TAU * pair.u2 * t).cos())
}

/// Internal: assemble the physical-basis coefficient structure for a
/// parameter vector and diagonalized stiffness.
struct Assembled {
    t: crate::model::Matrix2,
    c: crate::model::Matrix2,
    /// Structural drive direction Tᵀ(1,1)ᵀ (unit tone amplitude).
    b: [f64; 2],
    /// Damping diagonal in rad/s.
    g1: f64,
    g2: f64,
}

fn assemble(p: &ParamVector, hybrid: &HybridStiffness) -> Assembled {
    let t = rotation_from_theta(p.theta, p.branch);
    let c = t.transpose().mul(&hybrid.stiffness()).mul(&t);
    let b = [t.m[0][0] + t.m[1][0], t.m[0][1] + t.m[1][1]];
    Assembled { t, c, b, g1: TAU * p.d1, g2: TAU * p.d2 }
}

/// Steady-state phasor of the observed hybridized coordinate under a
/// single tone `amplitude · cos(2π u t)` applied equally to both
/// hybridized coordinates.
///
/// Solves `(−ω² I + iω D + C) q̂ = A Tᵀ (1,1)ᵀ` at ω = 2πu in the physical
/// basis and returns the requested component of `T q̂`.
pub fn frequency_response(
    p: &ParamVector,
    hybrid: &HybridStiffness,
    u: f64,
    amplitude: f64,
    channel: Channel,
) -> Result<ComplexAmplitude, ForwardError> {
    let a = assemble(p, hybrid);
    let w = TAU * u;
    let m11 = Complex64::new(a.c.m[0][0] - w * w, w * a.g1);
    let m12 = Complex64::new(a.c.m[0][1], 0.0);
    let m21 = Complex64::new(a.c.m[1][0], 0.0);
    let m22 = Complex64::new(a.c.m[1][1] - w * w, w * a.g2);
    let det = m11 * m22 - m12 * m21;
    let scale = m11.norm().max(m12.norm()).max(m21.norm()).max(m22.norm());
    if det.norm() < SINGULARITY_FLOOR * scale.max(1.0) * scale.max(1.0) {
        return Err(ForwardError::SingularAtDrive { u });
    }
    let b1 = Complex64::new(amplitude * a.b[0], 0.0);
    let b2 = Complex64::new(amplitude * a.b[1], 0.0);
    let q1 = (m22 * b1 - m12 * b2) / det;
    let q2 = (m11 * b2 - m21 * b1) / det;
    let z1 = a.t.m[0][0] * q1 + a.t.m[0][1] * q2;
    let z2 = a.t.m[1][0] * q1 + a.t.m[1][1] * q2;
    Ok(match channel {
        Channel::One => z1,
        Channel::Two => z2,
    })
}

/// Steady-state spectral peak amplitudes of the observed coordinate at the
/// two drive tones. By linearity each tone contributes one phasor, so the
/// peak heights are the phasor magnitudes.
pub fn steady_peak_amplitudes(
    p: &ParamVector,
    hybrid: &HybridStiffness,
    pair: &ControlPair,
    channel: Channel,
) -> Result<(f64, f64), ForwardError> {
    let z1 = frequency_response(p, hybrid, pair.u1, pair.amplitude, channel)?;
    let z2 = frequency_response(p, hybrid, pair.u2, pair.amplitude, channel)?;
    Ok((z1.norm(), z2.norm()))
}

/// Integrate the driven system from rest with classical fixed-step RK4 and
/// return the hybridized coordinates sampled over `[t_trans, t_total)`.
///
/// The step must satisfy `dt <= 1/(20 · max(η₋, u2))` so the fastest
/// oscillation is resolved by at least twenty steps per period.
pub fn simulate_time_domain(
    p: &ParamVector,
    hybrid: &HybridStiffness,
    pair: &ControlPair,
    window: &TimeWindow,
) -> Result<Trajectory, ForwardError> {
    window.validate()?;
    let limit = 1.0 / (20.0 * hybrid.eta_minus.max(pair.u2));
    if window.dt > limit * (1.0 + 1e-12) {
        return Err(ForwardError::StepTooLarge { dt: window.dt, limit });
    }
    let a = assemble(p, hybrid);
    let dt = window.dt;
    let n_keep = window.sample_count();
    let steps_trans = (window.t_trans / dt).round() as usize;
    let n_steps = steps_trans + n_keep;

    // State y = (q1, q2, v1, v2); y' = (v, b(t)·b_dir − D v − C q).
    let deriv = |t: f64, y: &[f64; 4]| -> [f64; 4] {
        let drive = drive_value(pair, t);
        let f1 = a.b[0] * drive - a.g1 * y[2] - (a.c.m[0][0] * y[0] + a.c.m[0][1] * y[1]);
        let f2 = a.b[1] * drive - a.g2 * y[3] - (a.c.m[1][0] * y[0] + a.c.m[1][1] * y[1]);
        [y[2], y[3], f1, f2]
    };

    let mut y = [0.0_f64; 4];
    let mut samples = Vec::with_capacity(n_keep);
    let record = |y: &[f64; 4], samples: &mut Vec<[f64; 2]>| {
        let q1 = a.t.m[0][0] * y[0] + a.t.m[0][1] * y[1];
        let q2 = a.t.m[1][0] * y[0] + a.t.m[1][1] * y[1];
        samples.push([q1, q2]);
    };

    for step in 0..n_steps {
        let t = step as f64 * dt;
        if step >= steps_trans {
            record(&y, &mut samples);
        }
        let k1 = deriv(t, &y);
        let y2 = add_scaled(&y, &k1, 0.5 * dt);
        let k2 = deriv(t + 0.5 * dt, &y2);
        let y3 = add_scaled(&y, &k2, 0.5 * dt);
        let k3 = deriv(t + 0.5 * dt, &y3);
        let y4 = add_scaled(&y, &k3, dt);
        let k4 = deriv(t + dt, &y4);
        for i in 0..4 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    if samples.is_empty() {
        return Err(ForwardError::EmptyWindow);
    }
    Ok(Trajectory {
        t_start: steps_trans as f64 * dt,
        dt,
        samples,
    })
}

fn add_scaled(y: &[f64; 4], k: &[f64; 4], h: f64) -> [f64; 4] {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]]
}

/// One-sided amplitude spectrum of one trajectory channel.
///
/// The grid runs from 0 to the Nyquist frequency 1/(2 dt) with resolution
/// 1/(n dt). Amplitudes are normalized so a cosine of amplitude `a` at a
/// grid frequency contributes a bin of height `a`; the DC and Nyquist bins
/// carry |X|/n. Under this normalization Parseval's identity reads
///
/// ```text
/// Σ x² = n (a₀² + a_nyq² + ½ Σ_mid a_k²)
/// ```
pub fn spectrum_of_window(traj: &Trajectory, channel: Channel) -> Result<Spectrum, ForwardError> {
    if traj.samples.is_empty() {
        return Err(ForwardError::EmptyWindow);
    }
    let n = traj.samples.len();
    let i = channel.index();
    let mut buf: Vec<Complex64> = traj
        .samples
        .iter()
        .map(|s| Complex64::new(s[i], 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let n_bins = n / 2 + 1;
    let df = 1.0 / (n as f64 * traj.dt);
    let mut frequencies = Vec::with_capacity(n_bins);
    let mut amplitudes = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        frequencies.push(k as f64 * df);
        let mag = buf[k].norm() / n as f64;
        let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) {
            mag
        } else {
            2.0 * mag
        };
        amplitudes.push(one_sided);
    }
    Ok(Spectrum { frequencies, amplitudes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Branch;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn desk_pair() -> ControlPair {
        ControlPair::new(96.0, 104.0, 1.0).unwrap()
    }

    fn desk_hybrid() -> HybridStiffness {
        HybridStiffness::new(100.0, 140.0).unwrap()
    }

    #[test]
    fn pair_validation() {
        assert!(ControlPair::new(10.0, 20.0, 1.0).is_ok());
        assert!(ControlPair::new(20.0, 10.0, 1.0).is_err());
        assert!(ControlPair::new(10.0, 10.0, 1.0).is_err());
        assert!(ControlPair::new(-1.0, 10.0, 1.0).is_err());
        assert!(ControlPair::new(1.0, 10.0, 0.0).is_ok());
        assert!(ControlPair::new(1.0, 10.0, -0.5).is_err());
    }

    #[test]
    fn drive_matches_beat_identity() {
        // A cos(2πu1 t) + A cos(2πu2 t) = 2A cos(π(u1+u2)t) cos(π(u1−u2)t)
        let pair = ControlPair::new(6.94016e6, 6.94036e6, 0.7).unwrap();
        for k in 0..200 {
            let t = k as f64 * 3.7e-8;
            let lhs = drive_value(&pair, t);
            let rhs = 2.0
                * pair.amplitude
                * (std::f64::consts::PI * (pair.u1 + pair.u2) * t).cos()
                * (std::f64::consts::PI * (pair.u1 - pair.u2) * t).cos();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9 * pair.amplitude.abs().max(1.0));
        }
    }

    #[test]
    fn beat_envelope_period_for_20hz_spacing() {
        // Tones 200 Hz apart give an envelope magnitude with period
        // 1/(u2 − u1) = 5 ms.
        let pair = ControlPair::new(6.94016e6, 6.94036e6, 1.0).unwrap();
        let period = 1.0 / (pair.u2 - pair.u1);
        assert_relative_eq!(period, 5.0e-3, max_relative = 1e-12);
        let env = |t: f64| (std::f64::consts::PI * (pair.u1 - pair.u2) * t).cos().abs();
        for k in 1..40 {
            let t = k as f64 * 1.3e-4;
            assert_abs_diff_eq!(env(t), env(t + period), epsilon = 1e-9);
        }
    }

    #[test]
    fn duplicated_tone_gives_equal_phasors() {
        // Degenerate pair with u1 = u2: both tones see the identical
        // transfer function. Constructed directly since the validated
        // constructor requires u1 < u2.
        let pair = ControlPair { u1: 101.0, u2: 101.0, amplitude: 1.0 };
        let p = ParamVector::new(0.9, 2.0, 3.0, Branch::Rotation);
        let hybrid = desk_hybrid();
        let z1 = frequency_response(&p, &hybrid, pair.u1, pair.amplitude, Channel::One).unwrap();
        let z2 = frequency_response(&p, &hybrid, pair.u2, pair.amplitude, Channel::One).unwrap();
        assert_eq!(z1, z2);
    }

    #[test]
    fn decoupled_response_matches_scalar_oscillator() {
        // θ = 0 on the rotation branch decouples the system; channel 1 is
        // then a single oscillator at η₊ with damping coefficient d1:
        // |ẑ| = A / sqrt((ω₊² − ω²)² + (2π d1 ω)²).
        let p = ParamVector::new(0.0, 2.5, 4.0, Branch::Rotation);
        let hybrid = desk_hybrid();
        let amp = 0.8;
        for u in [60.0, 95.0, 100.0, 113.0, 170.0] {
            let z = frequency_response(&p, &hybrid, u, amp, Channel::One).unwrap();
            let w = TAU * u;
            let w0 = TAU * hybrid.eta_plus;
            let expected =
                amp / ((w0 * w0 - w * w).powi(2) + (TAU * p.d1 * w).powi(2)).sqrt();
            assert_relative_eq!(z.norm(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn response_scales_linearly_with_amplitude() {
        let p = ParamVector::new(1.1, 3.0, 5.0, Branch::Reflection);
        let hybrid = desk_hybrid();
        let z1 = frequency_response(&p, &hybrid, 99.0, 1.0, Channel::Two).unwrap();
        let z3 = frequency_response(&p, &hybrid, 99.0, 3.0, Channel::Two).unwrap();
        assert_relative_eq!(z3.norm(), 3.0 * z1.norm(), max_relative = 1e-13);
    }

    #[test]
    fn undamped_resonant_drive_is_singular() {
        // Zero damping and a drive exactly at the eigenfrequency makes the
        // 2x2 system singular.
        let p = ParamVector::new(0.0, 0.0, 0.0, Branch::Rotation);
        let hybrid = desk_hybrid();
        let err = frequency_response(&p, &hybrid, hybrid.eta_plus, 1.0, Channel::One).unwrap_err();
        assert!(matches!(err, ForwardError::SingularAtDrive { .. }));
    }

    #[test]
    fn window_validation() {
        assert!(TimeWindow::new(1.0, 3.0, 1e-3).is_ok());
        // Non-integer sample count.
        assert!(TimeWindow::new(0.0, 1.0, 0.3).is_err());
        assert!(TimeWindow::new(2.0, 1.0, 1e-3).is_err());
        assert!(TimeWindow::new(0.0, 1.0, -1e-3).is_err());
        let w = TimeWindow::new(0.5, 2.5, 1e-3).unwrap();
        assert_eq!(w.sample_count(), 2000);
    }

    #[test]
    fn step_limit_enforced() {
        let p = ParamVector::new(0.2, 2.0, 2.0, Branch::Rotation);
        let hybrid = desk_hybrid();
        let pair = desk_pair();
        // Limit is 1/(20·140) ≈ 3.57e-4; a 1 ms step is too coarse.
        let window = TimeWindow::new(0.0, 1.0, 1e-3).unwrap();
        let err = simulate_time_domain(&p, &hybrid, &pair, &window).unwrap_err();
        assert!(matches!(err, ForwardError::StepTooLarge { .. }));
    }

    #[test]
    fn spectrum_grid_and_parseval() {
        // Synthetic two-tone trajectory on an exact grid: check the grid
        // layout, the peak normalization, and Parseval's identity.
        let dt = 1e-3;
        let n = 2000;
        let (f_a, f_b) = (40.0, 55.0);
        let samples: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                let x = 0.7 * (TAU * f_a * t).cos() + 0.2 * (TAU * f_b * t).cos();
                [x, 0.0]
            })
            .collect();
        let traj = Trajectory { t_start: 0.0, dt, samples: samples.clone() };
        let spec = spectrum_of_window(&traj, Channel::One).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.frequencies.len(), n / 2 + 1);
        assert_abs_diff_eq!(spec.frequencies[0], 0.0);
        assert_relative_eq!(spec.grid_spacing(), 1.0 / (n as f64 * dt), max_relative = 1e-12);
        assert_relative_eq!(
            spec.frequencies[n / 2],
            1.0 / (2.0 * dt),
            max_relative = 1e-12
        );
        // Peak bins recover the cosine amplitudes exactly (tones on-grid).
        let bin_a = spec.nearest_bin(f_a);
        let bin_b = spec.nearest_bin(f_b);
        assert_relative_eq!(spec.amplitudes[bin_a], 0.7, max_relative = 1e-9);
        assert_relative_eq!(spec.amplitudes[bin_b], 0.2, max_relative = 1e-9);
        // Parseval: Σx² = n (a0² + a_nyq² + ½ Σ mid a²).
        let energy_time: f64 = samples.iter().map(|s| s[0] * s[0]).sum();
        let mid: f64 = spec.amplitudes[1..n / 2].iter().map(|a| a * a).sum();
        let energy_freq = n as f64
            * (spec.amplitudes[0].powi(2) + spec.amplitudes[n / 2].powi(2) + 0.5 * mid);
        assert_relative_eq!(energy_time, energy_freq, max_relative = 1e-9);
    }

    #[test]
    fn empty_window_is_rejected() {
        let traj = Trajectory { t_start: 0.0, dt: 1e-3, samples: vec![] };
        assert!(matches!(
            spectrum_of_window(&traj, Channel::One),
            Err(ForwardError::EmptyWindow)
        ));
    }

    #[test]
    fn time_domain_peaks_match_closed_form() {
        // Single desk-scale instance; the randomized 50-seed sweep lives in
        // the acceptance suite.
        let p = ParamVector::new(0.7, 3.0, 6.0, Branch::Rotation);
        let hybrid = desk_hybrid();
        let pair = desk_pair();
        let dt = 2.5e-4;
        let window = TimeWindow::new(4.0, 6.0, dt).unwrap();
        let traj = simulate_time_domain(&p, &hybrid, &pair, &window).unwrap();
        let spec = spectrum_of_window(&traj, Channel::One).unwrap();
        let (z1, z2) = steady_peak_amplitudes(&p, &hybrid, &pair, Channel::One).unwrap();
        let got1 = spec.amplitudes[spec.nearest_bin(pair.u1)];
        let got2 = spec.amplitudes[spec.nearest_bin(pair.u2)];
        assert_relative_eq!(got1, z1, max_relative = 1e-3);
        assert_relative_eq!(got2, z2, max_relative = 1e-3);
    }

    #[test]
    fn trajectory_is_returned_in_hybrid_coordinates() {
        // With θ = 0 the bases coincide, so the recorded coordinates obey
        // the decoupled scalar dynamics; with θ ≠ 0 the transform is
        // applied. Check via the steady-state amplitude of channel 1.
        let p = ParamVector::new(1.2, 4.0, 7.0, Branch::Rotation);
        let hybrid = desk_hybrid();
        let pair = desk_pair();
        let window = TimeWindow::new(3.0, 5.0, 2.5e-4).unwrap();
        let traj = simulate_time_domain(&p, &hybrid, &pair, &window).unwrap();
        let spec = spectrum_of_window(&traj, Channel::Two).unwrap();
        let (z1, _) = steady_peak_amplitudes(&p, &hybrid, &pair, Channel::Two).unwrap();
        let got = spec.amplitudes[spec.nearest_bin(pair.u1)];
        assert_relative_eq!(got, z1, max_relative = 2e-3);
    }
}
