//! The inverse problem: relative-deviation misfit, Tikhonov-regularized
//! objective, box-constrained derivative-free minimization, and the
//! shrinking-regularization outer loop.
//!
//! The unknowns are `(θ, d1, d2)` on one of the two orthogonal-transform
//! branches. The data misfit compares scaled simulated peak amplitudes
//! against the measured ones; the amplitude scale χ is recomputed from the
//! calibration sweep at every parameter vector, so only amplitude *ratios*
//! of the simulation matter. A quadratic penalty `(ν/2)‖p − p_ref‖²` pulls
//! toward the measured reference and is relaxed geometrically by the outer
//! loop, so the data term takes over as ν shrinks.

use crate::calibration::{scaling_factor, CalibrationError};
use crate::data::ExperimentSet;
use crate::forward::{steady_peak_amplitudes, ForwardError};
use crate::model::{
    extract_physical, physical_stiffness_from_hybrid, rotation_from_theta, Bounds, Branch,
    HybridStiffness, ModelError, ParamVector,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Inner-solver stopping diameter, in normalized box coordinates.
pub const INNER_TOL: f64 = 1e-9;

/// Objective-evaluation budget per outer iteration.
pub const MAX_INNER_EVALS: usize = 500;

#[derive(Debug, Error)]
pub enum IdentifyError {
    #[error("measured peak amplitude must be positive to form a relative deviation, got {value}")]
    ZeroLabAmplitude { value: f64 },
    #[error("start point (theta={theta}, d1={d1}, d2={d2}) violates the bounds")]
    StartOutOfBounds { theta: f64, d1: f64, d2: f64 },
    #[error("objective evaluation failed at (theta={theta}, d1={d1}, d2={d2}): {source}")]
    EvaluationFailed {
        theta: f64,
        d1: f64,
        d2: f64,
        #[source]
        source: Box<IdentifyError>,
    },
    #[error("reconstruction aborted after {} completed outer iterations: {source}", history.len())]
    Aborted {
        history: Vec<IterationRecord>,
        #[source]
        source: Box<IdentifyError>,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("inconsistent experiment: {0}")]
    MismatchedData(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// Per-evaluation objective settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    /// Regularization weight ν ≥ 0.
    pub nu: f64,
    /// Reference vector; the regularizer penalizes distance from it.
    pub p_ref: ParamVector,
    pub bounds: Bounds,
    /// Dampings are raised to at least this (Hz) before forward solves, so
    /// the all-zero start vector is evaluable.
    pub d_floor: f64,
}

/// Outer-loop settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub nu0: f64,
    /// Geometric shrink factor for ν, in (0, 1).
    pub beta: f64,
    /// Stop when the combined step-plus-balance measure E falls below this.
    pub tol: f64,
    pub l_max: usize,
    pub d_floor: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self { nu0: 0.1, beta: 0.1, tol: 1e-12, l_max: 9, d_floor: 1e-6 }
    }
}

/// One objective evaluation, split into its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParts {
    /// Sum of relative deviations over all pairs and tones.
    pub fit: f64,
    /// `(ν/2)‖p − p_ref‖²`, on the unclamped parameters.
    pub reg: f64,
    pub total: f64,
    /// Scale χ_p used for this evaluation.
    pub chi: f64,
    /// Whether the damping floor was applied.
    pub clamped: bool,
}

/// One outer iteration of the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based outer iteration number.
    pub iteration: usize,
    /// ν used for this iteration's inner solve.
    pub nu: f64,
    pub j_fit: f64,
    pub j_reg: f64,
    pub theta: f64,
    pub d1: f64,
    pub d2: f64,
    /// Termination measure `‖p^{ℓ+1} − p^ℓ‖ + |J_fit − J_reg at ν_{ℓ+1}|`.
    pub e: f64,
}

/// Result of one inner box-constrained minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub p: ParamVector,
    pub value: f64,
    pub evaluations: usize,
    /// Whether the simplex collapsed below the diameter tolerance (as
    /// opposed to exhausting the evaluation budget).
    pub converged: bool,
    /// Componentwise: the minimizer finished on that face of the box.
    pub active_bounds: [bool; 3],
}

/// Physical coefficients extracted from one eigenfrequency snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairExtraction {
    pub lambda: f64,
    pub f1: f64,
    pub f2: f64,
    pub coupling_sign: i8,
}

/// Mean together with its spread over the measurement sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation; zero for fewer than two values.
    pub std: f64,
}

impl Stats {
    fn over(values: &[f64]) -> Stats {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stats { mean, min, max, std }
    }
}

/// Per-pair physical coefficients and their averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingAggregate {
    pub per_pair: Vec<PairExtraction>,
    pub lambda: Stats,
    pub f1: Stats,
    pub f2: Stats,
}

/// Outcome of a full outer loop on one transform branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub branch: Branch,
    pub theta: f64,
    pub d1: f64,
    pub d2: f64,
    pub j_fit: f64,
    pub j_reg: f64,
    pub evaluations: usize,
    pub clamp_events: usize,
    pub converged_by_tol: bool,
}

/// Full reconstruction result: the winning branch's optimum and history,
/// both branch summaries, and the physical-coefficient aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub p_opt: ParamVector,
    pub j_fit: f64,
    pub j_reg: f64,
    pub chi: f64,
    pub aggregate: CouplingAggregate,
    /// Relative deviations at the start vector (dampings floored), ordered
    /// pair-major with u1 before u2.
    pub dev_initial: Vec<f64>,
    /// Relative deviations at the optimum, same order.
    pub dev_final: Vec<f64>,
    /// ν values actually used, one per completed outer iteration.
    pub nu_schedule: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub branches: [BranchSummary; 2],
    pub clamp_events: usize,
    pub evaluations: usize,
}

/// `|z_sim − z_lab| / z_lab`.
pub fn relative_deviation(z_sim: f64, z_lab: f64) -> Result<f64, IdentifyError> {
    if !(z_lab > 0.0) {
        return Err(IdentifyError::ZeroLabAmplitude { value: z_lab });
    }
    Ok((z_sim - z_lab).abs() / z_lab)
}

fn check_lengths(data: &ExperimentSet) -> Result<(), IdentifyError> {
    let n = data.pairs.len();
    if data.hybrids.len() != n || data.peaks.len() != n || n == 0 {
        return Err(IdentifyError::MismatchedData(format!(
            "{} pairs, {} eigenfrequency snapshots, {} peak rows",
            n,
            data.hybrids.len(),
            data.peaks.len()
        )));
    }
    Ok(())
}

/// Relative deviations of the scaled simulated peaks against the measured
/// ones, ordered pair-major with the lower tone first. No damping floor is
/// applied; pass an already-floored vector when mirroring the objective.
pub fn deviation_vector(
    p: &ParamVector,
    chi: f64,
    data: &ExperimentSet,
) -> Result<Vec<f64>, IdentifyError> {
    check_lengths(data)?;
    let mut out = Vec::with_capacity(2 * data.pairs.len());
    for ((pair, hybrid), &(lab1, lab2)) in
        data.pairs.iter().zip(&data.hybrids).zip(&data.peaks)
    {
        let (z1, z2) = steady_peak_amplitudes(p, hybrid, pair, data.channel)?;
        out.push(relative_deviation(chi * z1, lab1)?);
        out.push(relative_deviation(chi * z2, lab2)?);
    }
    Ok(out)
}

fn floored(p: &ParamVector, d_floor: f64) -> (ParamVector, bool) {
    let d1 = p.d1.max(d_floor);
    let d2 = p.d2.max(d_floor);
    let clamped = d1 != p.d1 || d2 != p.d2;
    (ParamVector::new(p.theta, d1, d2, p.branch), clamped)
}

/// Evaluate the Tikhonov objective at `p`.
///
/// The scale χ_p comes fresh from the calibration sweep (simulated on the
/// sweep's own grid at the first measurement's eigenfrequencies), the fit
/// term sums the relative deviations, and the regularizer uses the raw,
/// unfloored parameters.
pub fn objective(
    p: &ParamVector,
    data: &ExperimentSet,
    cfg: &ObjectiveConfig,
) -> Result<ObjectiveParts, IdentifyError> {
    check_lengths(data)?;
    let (pe, clamped) = floored(p, cfg.d_floor);
    let chi = scaling_factor(&pe, &data.frf, &data.hybrids[0], &data.frf.frequencies, data.channel)?;
    let fit = deviation_vector(&pe, chi, data)?.iter().sum::<f64>();
    let dist = p.distance(&cfg.p_ref);
    let reg = 0.5 * cfg.nu * dist * dist;
    Ok(ObjectiveParts { fit, reg, total: fit + reg, chi, clamped })
}

/// Derivative-free box-constrained local minimization (Nelder–Mead with
/// proposals projected onto the box), run in coordinates normalized by the
/// box widths so θ in radians and dampings in Hz are treated evenly.
pub fn minimize_box<F>(
    mut f: F,
    p0: &ParamVector,
    bounds: &Bounds,
    inner_tol: f64,
    max_evals: usize,
) -> Result<MinimizeResult, IdentifyError>
where
    F: FnMut(&ParamVector) -> Result<f64, IdentifyError>,
{
    if !bounds.contains(p0) {
        return Err(IdentifyError::StartOutOfBounds { theta: p0.theta, d1: p0.d1, d2: p0.d2 });
    }
    let branch = p0.branch;
    let widths = [bounds.width(0), bounds.width(1), bounds.width(2)];
    let to_x = |c: [f64; 3]| {
        let mut x = [0.0; 3];
        for i in 0..3 {
            x[i] = if widths[i] > 0.0 { (c[i] - bounds.min[i]) / widths[i] } else { 0.0 };
        }
        x
    };
    let to_p = |x: [f64; 3]| {
        let mut c = [0.0; 3];
        for i in 0..3 {
            c[i] = bounds.min[i] + x[i].clamp(0.0, 1.0) * widths[i];
        }
        ParamVector::from_components(bounds.clamp(c), branch)
    };
    let clamp01 = |x: [f64; 3]| {
        let mut out = x;
        for v in &mut out {
            *v = v.clamp(0.0, 1.0);
        }
        out
    };

    let mut evals = 0usize;
    let mut eval = |x: [f64; 3], evals: &mut usize| -> Result<f64, IdentifyError> {
        let p = to_p(x);
        *evals += 1;
        f(&p).map_err(|e| IdentifyError::EvaluationFailed {
            theta: p.theta,
            d1: p.d1,
            d2: p.d2,
            source: Box::new(e),
        })
    };

    // Initial simplex: the start plus a 5% step along each coordinate,
    // flipped inward where it would leave the box.
    let x0 = clamp01(to_x(p0.components()));
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    let f0 = eval(x0, &mut evals)?;
    simplex.push((x0, f0));
    for i in 0..3 {
        let mut x = x0;
        let step = if x[i] + 0.05 <= 1.0 { 0.05 } else { -0.05 };
        x[i] = (x[i] + step).clamp(0.0, 1.0);
        let fx = eval(x, &mut evals)?;
        simplex.push((x, fx));
    }

    let diameter = |s: &[([f64; 3], f64)]| {
        let best = s[0].0;
        s.iter()
            .map(|(x, _)| {
                (0..3).map(|i| (x[i] - best[i]).abs()).fold(0.0_f64, f64::max)
            })
            .fold(0.0_f64, f64::max)
    };

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < inner_tol {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }

        let worst = simplex[3];
        let second_worst = simplex[2].1;
        let best = simplex[0].1;
        let mut centroid = [0.0; 3];
        for v in simplex.iter().take(3) {
            for i in 0..3 {
                centroid[i] += v.0[i] / 3.0;
            }
        }
        let shifted = |t: f64| {
            let mut x = [0.0; 3];
            for i in 0..3 {
                x[i] = centroid[i] + t * (centroid[i] - worst.0[i]);
            }
            clamp01(x)
        };

        let xr = shifted(1.0);
        let fr = eval(xr, &mut evals)?;
        if fr < best {
            // Try expanding past the reflection.
            let xe = shifted(2.0);
            let fe = eval(xe, &mut evals)?;
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < second_worst {
            simplex[3] = (xr, fr);
        } else {
            let xc = if fr < worst.1 { shifted(0.5) } else { shifted(-0.5) };
            let fc = eval(xc, &mut evals)?;
            if fc < fr.min(worst.1) {
                simplex[3] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    for i in 0..3 {
                        v.0[i] = anchor[i] + 0.5 * (v.0[i] - anchor[i]);
                    }
                    v.0 = clamp01(v.0);
                    if evals >= max_evals {
                        break;
                    }
                    v.1 = eval(v.0, &mut evals)?;
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (xb, fb) = simplex[0];
    let mut active = [false; 3];
    for i in 0..3 {
        active[i] = widths[i] > 0.0 && (xb[i] <= 1e-9 || xb[i] >= 1.0 - 1e-9);
    }
    Ok(MinimizeResult {
        p: to_p(xb),
        value: fb,
        evaluations: evals,
        converged,
        active_bounds: active,
    })
}

struct BranchRun {
    summary: BranchSummary,
    p: ParamVector,
    parts: ObjectiveParts,
    history: Vec<IterationRecord>,
    nu_schedule: Vec<f64>,
}

fn run_branch(
    data: &ExperimentSet,
    p0: &ParamVector,
    branch: Branch,
    cfg: &ReconstructionConfig,
    obj_base: &ObjectiveConfig,
) -> Result<BranchRun, IdentifyError> {
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut nu_schedule = Vec::new();
    let mut evaluations = 0usize;
    let mut clamp_events = 0usize;
    let mut converged_by_tol = false;

    let mut p_prev = ParamVector::from_components(p0.components(), branch);
    let p_ref = ParamVector::from_components(obj_base.p_ref.components(), branch);
    let mut parts = ObjectiveParts { fit: 0.0, reg: 0.0, total: 0.0, chi: 0.0, clamped: false };

    let mut run = || -> Result<(), IdentifyError> {
        for l in 0..cfg.l_max {
            let nu = cfg.nu0 * cfg.beta.powi(l as i32);
            nu_schedule.push(nu);
            let ocfg = ObjectiveConfig { nu, p_ref, bounds: obj_base.bounds, d_floor: cfg.d_floor };
            let mut clamps = 0usize;
            let result = minimize_box(
                |p| {
                    let parts = objective(p, data, &ocfg)?;
                    if parts.clamped {
                        clamps += 1;
                    }
                    Ok(parts.total)
                },
                &p_prev,
                &obj_base.bounds,
                INNER_TOL,
                MAX_INNER_EVALS,
            )?;
            clamp_events += clamps;
            evaluations += result.evaluations;
            let mut p_next = result.p;
            // The transform at θ and θ + kπ is the same matrix up to an
            // overall sign, which no measured amplitude distinguishes, so
            // each iterate is folded to the representative nearest the
            // reference angle. The data term is invariant and the penalty
            // can only shrink, so this never raises the objective, and it
            // keeps every outer iteration anchored in the same basin.
            let theta_folded =
                p_next.theta - PI * ((p_next.theta - p_ref.theta) / PI).round();
            if theta_folded != p_next.theta {
                let folded = ParamVector::new(theta_folded, p_next.d1, p_next.d2, branch);
                if obj_base.bounds.contains(&folded) {
                    p_next = folded;
                }
            }
            parts = objective(&p_next, data, &ocfg)?;
            let nu_next = cfg.nu0 * cfg.beta.powi(l as i32 + 1);
            let dist_ref = p_next.distance(&p_ref);
            let reg_next = 0.5 * nu_next * dist_ref * dist_ref;
            let e = p_next.distance(&p_prev) + (parts.fit - reg_next).abs();
            history.push(IterationRecord {
                iteration: l + 1,
                nu,
                j_fit: parts.fit,
                j_reg: parts.reg,
                theta: p_next.theta,
                d1: p_next.d1,
                d2: p_next.d2,
                e,
            });
            p_prev = p_next;
            if e <= cfg.tol {
                converged_by_tol = true;
                break;
            }
        }
        Ok(())
    };
    if let Err(err) = run() {
        return Err(IdentifyError::Aborted { history, source: Box::new(err) });
    }

    Ok(BranchRun {
        summary: BranchSummary {
            branch,
            theta: p_prev.theta,
            d1: p_prev.d1,
            d2: p_prev.d2,
            j_fit: parts.fit,
            j_reg: parts.reg,
            evaluations,
            clamp_events,
            converged_by_tol,
        },
        p: p_prev,
        parts,
        history,
        nu_schedule,
    })
}

/// Run the full shrinking-regularization reconstruction.
///
/// Starting from `p0` (branch ignored), each outer iteration minimizes the
/// objective at the current ν from the previous iterate, then sets
/// `ν ← βν`; the loop stops when
/// `E = ‖p^{ℓ+1} − p^ℓ‖ + |J_fit − J_reg@ν_{ℓ+1}|` drops to `tol` or after
/// `l_max` iterations. Both transform branches run in full and the one
/// with the lower final data misfit is reported.
pub fn reconstruct(
    data: &ExperimentSet,
    p0: &ParamVector,
    cfg: &ReconstructionConfig,
    obj_base: &ObjectiveConfig,
) -> Result<ReconstructionReport, IdentifyError> {
    check_lengths(data)?;
    if cfg.l_max == 0 {
        return Err(IdentifyError::InvalidConfig("l_max must be at least 1".into()));
    }
    if !(cfg.beta > 0.0 && cfg.beta < 1.0) {
        return Err(IdentifyError::InvalidConfig(format!(
            "beta must lie in (0, 1), got {}",
            cfg.beta
        )));
    }
    if !obj_base.bounds.contains(p0) {
        return Err(IdentifyError::StartOutOfBounds { theta: p0.theta, d1: p0.d1, d2: p0.d2 });
    }

    let rot = run_branch(data, p0, Branch::Rotation, cfg, obj_base)?;
    let refl = run_branch(data, p0, Branch::Reflection, cfg, obj_base)?;
    let (chosen, other) = if refl.summary.j_fit < rot.summary.j_fit {
        (refl, rot)
    } else {
        (rot, refl)
    };

    // Deviations before and after, both with the floor the objective used.
    let p_start = ParamVector::from_components(p0.components(), chosen.p.branch);
    let ocfg0 = ObjectiveConfig {
        nu: cfg.nu0,
        p_ref: obj_base.p_ref,
        bounds: obj_base.bounds,
        d_floor: cfg.d_floor,
    };
    let parts0 = objective(&p_start, data, &ocfg0)?;
    let (pe0, _) = floored(&p_start, cfg.d_floor);
    let dev_initial = deviation_vector(&pe0, parts0.chi, data)?;
    let (pe_opt, _) = floored(&chosen.p, cfg.d_floor);
    let dev_final = deviation_vector(&pe_opt, chosen.parts.chi, data)?;

    let aggregate = aggregate_coupling(chosen.p.theta, chosen.p.branch, &data.hybrids)?;
    let evaluations = chosen.summary.evaluations + other.summary.evaluations;
    let clamp_events = chosen.summary.clamp_events + other.summary.clamp_events;
    Ok(ReconstructionReport {
        p_opt: chosen.p,
        j_fit: chosen.parts.fit,
        j_reg: chosen.parts.reg,
        chi: chosen.parts.chi,
        aggregate,
        dev_initial,
        dev_final,
        nu_schedule: chosen.nu_schedule,
        history: chosen.history,
        branches: [chosen.summary, other.summary],
        clamp_events,
        evaluations,
    })
}

/// Reassemble the physical stiffness at each eigenfrequency snapshot with
/// the same transform and extract coupling and mode frequencies, with
/// means and spreads over the sequence.
pub fn aggregate_coupling(
    theta: f64,
    branch: Branch,
    hybrids: &[HybridStiffness],
) -> Result<CouplingAggregate, IdentifyError> {
    if hybrids.is_empty() {
        return Err(IdentifyError::InvalidConfig(
            "need at least one eigenfrequency snapshot to aggregate".into(),
        ));
    }
    let t = rotation_from_theta(theta, branch);
    let mut per_pair = Vec::with_capacity(hybrids.len());
    for h in hybrids {
        let c = physical_stiffness_from_hybrid(&t, h)?;
        let e = extract_physical(&c)?;
        per_pair.push(PairExtraction {
            lambda: e.lambda,
            f1: e.f1,
            f2: e.f2,
            coupling_sign: e.coupling_sign,
        });
    }
    let lambdas: Vec<f64> = per_pair.iter().map(|p| p.lambda).collect();
    let f1s: Vec<f64> = per_pair.iter().map(|p| p.f1).collect();
    let f2s: Vec<f64> = per_pair.iter().map(|p| p.f2).collect();
    Ok(CouplingAggregate {
        per_pair,
        lambda: Stats::over(&lambdas),
        f1: Stats::over(&f1s),
        f2: Stats::over(&f2s),
    })
}
