//! Collective-spin echo interferometry.
//!
//! Exact simulation of `N` spin-1/2 particles in the symmetric subspace under the
//! anisotropic two-axis Hamiltonian `chi (Sx² + gamma Sy²)`: squeezing and Fisher
//! information, the squeeze / encode / reverse / measure echo protocol, detection-noise
//! robustness, pulse sequences that reverse the interaction, and a mean-field model of
//! the linear response.

pub mod detection;
pub mod error;
pub mod floquet;
pub mod interferometer;
pub mod lmg;
pub mod meanfield;
pub mod search;
pub mod spectral;
pub mod spin;

pub use detection::{
    detection_operator, first_order_terms, noisy_delta_phi, relative_robustness, robustness_r,
    robustness_semi_analytic, DetectionNoise, FirstOrderTerms, NoiseOperators, Normalization,
    Robustness, RobustnessOptions,
};
pub use error::{Error, Result};
pub use floquet::{
    compile, effective_chi_ratio, equivalent_reversal_check, gain_trajectory, monte_carlo_gain,
    segment_ratio, simulate, GainTrajectory, NoiseCorrelation, PulseAxis, PulseEvent,
    PulseNoiseSpec, PulseSequence,
};
pub use interferometer::{
    delta_phi, echo_readout, encode, gain_db, metrological_gain, optimize_t2, optimize_theta_p,
    optimize_theta_r, qfi_axis, run_echo, signal_derivative, signal_derivative_fd, squeezed_axis,
    EchoProtocol, EchoReadout, GainReport, Reversal, ReversalOptimum, ReversalSearch,
};
pub use lmg::{
    find_best_squeezing_time, lmg_hamiltonian, max_qfi, optimize_t1, qfi_along, qfi_general,
    qfi_pure, DirectionSearch, LmgParams, LmgSystem, QfiMaximum, SqueezeSearchOptions,
    SqueezeSearchResult,
};
pub use meanfield::{
    conserved_quantity, growth_coefficient, mf_closed_form, mf_ode, mf_theta_r,
    quantum_displacement, MeanFieldSample, MeanFieldTrajectory,
};
pub use spectral::{CMatrix, CVector, Hamiltonian, Spectrum};
pub use spin::{Axis, RotationAxis, SpinMoments, SpinOperators, SpinState, MAX_ATOMS};
