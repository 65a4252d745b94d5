//! Reconstruction of the stiffness and damping coefficients of a two-mode
//! damped, driven harmonic resonator from measured frequency spectra.
//!
//! The library is organized around the stages of the reconstruction pipeline:
//!
//! * [`model`]: the coupled-oscillator coefficient matrices, their
//!   eigenfrequencies, and the orthogonal transformation that links the
//!   physical mode basis to the hybridized (measured) basis.
//! * [`forward`]: steady-state response of the driven system, both as a
//!   closed-form frequency-domain solve and as a time-domain integration
//!   with a windowed spectrum, used to cross-check the closed form.
//! * [`calibration`]: frequency-response-function sweeps, Lorentzian peak
//!   fits, and the amplitude scaling factor that maps simulated response
//!   units onto measured volts.
//! * [`identify`]: the regularized least-deviation objective and the outer
//!   iteration that shrinks the regularization weight while re-solving a
//!   box-constrained inner minimization.
//! * [`data`]: experiment configuration files, spectrum CSV I/O, and the
//!   synthetic-experiment generator used for end-to-end validation.
//!
//! All frequencies and damping coefficients are handled in Hz throughout;
//! angular factors of 2π enter only where coefficient matrices are
//! assembled.

// Validation tests are written as `!(x > 0.0)` rather than `x <= 0.0` so
// that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod data;
pub mod forward;
pub mod identify;
pub mod model;

pub use calibration::{
    fit_lorentzian, scaling_factor, simulate_frf, CalibrationError, FrfSweep, LorentzianFit,
};
pub use data::{
    drift_interpolate, extract_peak, generate_synthetic, load_experiment, parse_config,
    save_experiment, subtract_noise, DataError, ExperimentConfig, ExperimentSet, GridSpec,
    SyntheticTruth,
};
pub use forward::{
    drive_value, frequency_response, simulate_time_domain, spectrum_of_window,
    steady_peak_amplitudes, Channel, ComplexAmplitude, ControlPair, ForwardError, Spectrum,
    TimeWindow, Trajectory,
};
pub use identify::{
    aggregate_coupling, deviation_vector, minimize_box, objective, reconstruct,
    relative_deviation, BranchSummary, CouplingAggregate, IdentifyError, IterationRecord,
    MinimizeResult, ObjectiveConfig, ObjectiveParts, PairExtraction, ReconstructionConfig,
    ReconstructionReport, Stats,
};
pub use model::{
    damping_reference, extract_physical, hybrid_damping, hybrid_eigenvalues,
    physical_stiffness_from_hybrid, rotation_from_theta, stiffness_from_physical, Bounds, Branch,
    HybridStiffness, Matrix2, ModelError, ParamVector, PhysicalParams,
};
