//! File writers for the subcommand outputs. Everything here is
//! deterministic: fixed field order, no timestamps, floats printed with
//! the shortest round-trip representation unless a column is explicitly
//! a display column.

use modefit::data::{write_two_column, DataError, SPECTRUM_HEADER};
use modefit::{Branch, ControlPair, LorentzianFit, ReconstructionReport, Stats};
use serde::Serialize;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

#[derive(Serialize)]
struct CalibrationOut {
    eta_hz: f64,
    d_hz: f64,
    q: f64,
    a_peak_v: f64,
    residual_rms_v: f64,
    chi_at_reference: f64,
}

pub fn write_calibration_json(path: &Path, fit: &LorentzianFit, chi: f64) -> io::Result<()> {
    let out = CalibrationOut {
        eta_hz: fit.eta,
        d_hz: fit.d,
        q: fit.eta / fit.d,
        a_peak_v: fit.a_peak,
        residual_rms_v: fit.residual_rms,
        chi_at_reference: chi,
    };
    write_json(path, &out)
}

pub fn write_report_json(path: &Path, report: &ReconstructionReport) -> io::Result<()> {
    write_json(path, report)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn write_history_csv(
    path: &Path,
    history: &[modefit::IterationRecord],
) -> io::Result<()> {
    let mut s = String::from("iteration,nu,j_fit,j_reg,theta,d1,d2\n");
    for r in history {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iteration, r.nu, r.j_fit, r.j_reg, r.theta, r.d1, r.d2
        );
    }
    std::fs::write(path, s)
}

pub fn write_deviation_csv(
    path: &Path,
    pairs: &[ControlPair],
    initial: &[f64],
    final_: &[f64],
) -> io::Result<()> {
    let mut s = String::from("pair,tone,u_Hz,dev_initial,dev_final\n");
    for (m, pair) in pairs.iter().enumerate() {
        for (tone, u) in [(1usize, pair.u1), (2, pair.u2)] {
            let i = 2 * m + tone - 1;
            let _ = writeln!(s, "{},{},{},{},{}", m + 1, tone, u, initial[i], final_[i]);
        }
    }
    std::fs::write(path, s)
}

pub fn write_improvement_csv(path: &Path, report: &ReconstructionReport) -> io::Result<()> {
    let mut s = String::from("pair,tone,ratio\n");
    for (i, (before, after)) in report.dev_initial.iter().zip(&report.dev_final).enumerate() {
        let _ = writeln!(s, "{},{},{}", i / 2 + 1, i % 2 + 1, after / before);
    }
    std::fs::write(path, s)
}

pub fn write_spectrum_csv(
    path: &Path,
    frequencies: &[f64],
    amplitudes: &[f64],
) -> Result<(), DataError> {
    write_two_column(path, SPECTRUM_HEADER, frequencies, amplitudes)
}

pub fn write_summary_txt(path: &Path, report: &ReconstructionReport) -> io::Result<()> {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let branch = match report.p_opt.branch {
        Branch::Rotation => "rotation",
        Branch::Reflection => "reflection",
    };
    let mut s = String::new();
    let _ = writeln!(s, "reconstruction summary");
    let _ = writeln!(s, "======================");
    let _ = writeln!(s);
    let _ = writeln!(s, "winning branch      {branch}");
    let _ = writeln!(s, "theta_rad           {:.4}", report.p_opt.theta);
    let _ = writeln!(s, "d1_Hz               {:.4}", report.p_opt.d1);
    let _ = writeln!(s, "d2_Hz               {:.4}", report.p_opt.d2);
    let _ = writeln!(s, "J_fit               {:.6e}", report.j_fit);
    let _ = writeln!(s, "J_reg               {:.6e}", report.j_reg);
    let _ = writeln!(s, "chi                 {:.6e}", report.chi);
    let _ = writeln!(s, "outer iterations    {}", report.history.len());
    let _ = writeln!(s, "evaluations         {}", report.evaluations);
    let _ = writeln!(s, "clamped evaluations {}", report.clamp_events);
    let _ = writeln!(s);
    let _ = writeln!(s, "coefficients over the measurement sequence (MHz)");
    let _ = writeln!(s, "{:<10}{:>12}{:>16}{:>14}", "", "mean", "+/- half-range", "sample std");
    let agg = &report.aggregate;
    for (name, stats) in [("lambda", &agg.lambda), ("f1", &agg.f1), ("f2", &agg.f2)] {
        let _ = writeln!(
            s,
            "{:<10}{:>12.4}{:>16.4}{:>14.4}",
            name,
            stats.mean / 1.0e6,
            half_range(stats) / 1.0e6,
            stats.std / 1.0e6
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "mean relative deviation   {:.4} -> {:.4}",
        mean(&report.dev_initial),
        mean(&report.dev_final)
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "+/- is half the min-max spread across pairs; std is the sample standard deviation."
    );
    std::fs::write(path, s)
}

fn half_range(stats: &Stats) -> f64 {
    (stats.max - stats.min) / 2.0
}
