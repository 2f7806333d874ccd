//! Bell-test correlation toolkit.
//!
//! Compares quantum-mechanical (statevector) and local hidden-variable
//! predictions for CHSH-type correlations, locates the settings where the two
//! coincide, widens those points into uncertainty vicinities, and simulates
//! the CHSH test stage of an entanglement-based key distribution session with
//! an eavesdropper substituting a classical source.
//!
//! Angles are radians throughout. Unless a [`MeasurementSetting`] says
//! otherwise, an angle is the *observable* angle `θ` of `cos θ·Z + sin θ·X`.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod bell;
pub mod convergence;
pub mod error;
pub mod hvt;
pub mod noise;
pub mod quantum;
pub mod seed;
pub mod stats;
pub mod tables;

pub use attack::{
    detection_probability, run_session, vicinity_attack_sweep, DetectionEstimate, DetectionMeaning, SessionConfig,
    SessionResult, SettingsPolicy, SourceKind, SweepRow, Verdict,
};
pub use bell::{
    average_random_chsh, chsh_from_pairs, chsh_from_source, chsh_value, evaluate_bell_expression, BellEvaluation,
    BellExpression, BellTerm, ChshResult, ChshSettings, Classification, CorrelationSource, RandomChshSummary,
    SettingPair,
};
pub use convergence::{
    classify_configuration, find_convergence_points, hup_vicinity, overlap_regions, ConfigurationClass,
    ConfigurationKind, ConvergencePoint, ConvergenceRegion, RegionOrigin, VicinityParams,
};
pub use error::{Error, Result};
pub use hvt::{
    lhv_correlation_analytic, lhv_correlation_mc, lhv_product_correlation_n, sample_lambda, Density, HiddenVariable,
    LhvModel, OutcomeRule, Sign, SignRule, UniformSphere,
};
pub use noise::{attenuate_correlation, fit_attenuation, noisy_chsh, AttenuationFit, NoiseParams};
pub use quantum::{
    correlation_exact, correlation_from_counts, prepare_bell_state, prepare_ghz_state, sample_counts, AngleConvention,
    CorrelationEstimate, MeasurementCounts, MeasurementSetting, Shots, Statevector,
};
pub use tables::{AngleSetRecord, SourceTable};

/// Classical (local hidden-variable) bound on |S|.
pub const CLASSICAL_BOUND: f64 = 2.0;

/// Tsirelson bound 2√2 on the quantum |S|.
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;
