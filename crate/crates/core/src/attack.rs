//! CHSH-test stage of an entanglement-based key distribution session.
//!
//! Each round picks one of the four CHSH setting pairs uniformly, draws a
//! pair of ±1 outcomes from the configured source, and accumulates. At the
//! end the four correlations and `S` are estimated cumulatively over the
//! whole session, and the session is declared quantum only when
//! `S > threshold + k·σ`.
//!
//! An eavesdropper replacing the entangled source with a hidden-variable
//! source is caught at generic settings, but near a convergence point the
//! two sources produce the same `S`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{chsh_from_source, chsh_value, ChshResult, ChshSettings, CorrelationSource};
use crate::convergence::VicinityParams;
use crate::error::{Error, Result};
use crate::hvt::LhvModel;
use crate::quantum::{prepare_bell_state, CorrelationEstimate};
use crate::seed;
use crate::stats::{wilson_interval, Z_95};
use crate::CLASSICAL_BOUND;

pub const DEFAULT_SIGMA_MARGIN: f64 = 3.0;

/// How `S` is accumulated across rounds; recorded in every result.
pub const S_STATISTIC: &str = "cumulative_over_session";

#[derive(Debug, Clone)]
pub enum SourceKind {
    EntangledQuantum,
    LhvAdversary(LhvModel),
}

impl SourceKind {
    /// Hidden-variable adversary using the built-in sign model.
    pub fn sign_adversary() -> Self {
        SourceKind::LhvAdversary(LhvModel::sign_pair())
    }

    pub fn label(&self) -> &'static str {
        match self {
            SourceKind::EntangledQuantum => "entangled_quantum",
            SourceKind::LhvAdversary(_) => "lhv_adversary",
        }
    }
}

/// Which measurement settings the parties use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SettingsPolicy {
    FixedChsh {
        settings: ChshSettings,
    },
    /// `a = b = θ`, `a′ = b′ = θ + π/2`.
    AlignedPair {
        theta: f64,
    },
    /// `a = 0`, `a′ = π/2`, with Bob offset from Alice by `θ₀ + δ` on both
    /// settings: `b = θ₀ + δ`, `b′ = π/2 + θ₀ + δ`.
    VicinityOffset {
        theta0: f64,
        delta: f64,
    },
}

impl SettingsPolicy {
    pub fn canonical() -> Self {
        SettingsPolicy::FixedChsh { settings: ChshSettings::canonical() }
    }

    pub fn settings(&self) -> ChshSettings {
        match *self {
            SettingsPolicy::FixedChsh { settings } => settings,
            SettingsPolicy::AlignedPair { theta } => {
                ChshSettings::observable(theta, theta + FRAC_PI_2, theta, theta + FRAC_PI_2)
            }
            SettingsPolicy::VicinityOffset { theta0, delta } => {
                let off = theta0 + delta;
                ChshSettings::observable(0.0, FRAC_PI_2, off, FRAC_PI_2 + off)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub source: SourceKind,
    pub policy: SettingsPolicy,
    pub rounds: u64,
    pub seed: u64,
    pub detection_threshold: f64,
    pub sigma_margin: f64,
}

impl SessionConfig {
    pub fn new(source: SourceKind, policy: SettingsPolicy, rounds: u64, seed: u64) -> Self {
        SessionConfig {
            source,
            policy,
            rounds,
            seed,
            detection_threshold: CLASSICAL_BOUND,
            sigma_margin: DEFAULT_SIGMA_MARGIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::argument("rounds must be at least 1"));
        }
        if !(self.detection_threshold > 0.0) {
            return Err(Error::argument("detection threshold must be positive"));
        }
        if !(self.sigma_margin >= 0.0) {
            return Err(Error::argument("sigma margin must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SecureQuantum,
    SuspectClassical,
}

impl Verdict {
    pub fn decide(s: &ChshResult, threshold: f64, sigma_margin: f64) -> Self {
        if s.s_value > threshold + sigma_margin * s.std_error {
            Verdict::SecureQuantum
        } else {
            Verdict::SuspectClassical
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub s_estimate: ChshResult,
    pub verdict: Verdict,
    pub detection_threshold: f64,
    pub sigma_margin: f64,
    /// Rounds that landed on each of the four setting pairs.
    pub pair_rounds: [u64; 4],
    pub statistic: String,
}

impl SessionResult {
    pub fn recomputed_verdict(&self) -> Verdict {
        Verdict::decide(&self.s_estimate, self.detection_threshold, self.sigma_margin)
    }
}

/// Born probabilities of outcomes `00, 01, 10, 11` for each setting pair.
fn quantum_pair_probabilities(settings: &ChshSettings) -> Result<[[f64; 4]; 4]> {
    let bell = prepare_bell_state();
    let mut out = [[0.0; 4]; 4];
    for (k, (x, y)) in settings.pairs().into_iter().enumerate() {
        let p = bell.measurement_probabilities(&[x, y])?;
        out[k].copy_from_slice(&p);
    }
    Ok(out)
}

fn draw_outcome(probs: &[f64; 4], u: f64) -> i64 {
    const PARITY: [i64; 4] = [1, -1, -1, 1];
    let mut acc = 0.0;
    for (i, p) in probs.iter().take(3).enumerate() {
        acc += p;
        if u < acc {
            return PARITY[i];
        }
    }
    PARITY[3]
}

/// Runs one session; identical configs give identical results.
pub fn run_session(config: &SessionConfig) -> Result<SessionResult> {
    config.validate()?;
    let settings = config.policy.settings();
    let pairs = settings.pairs();
    let mut rng = seed::rng(config.seed);
    let mut counts = [0u64; 4];
    let mut sums = [0i64; 4];

    match &config.source {
        SourceKind::EntangledQuantum => {
            let probs = quantum_pair_probabilities(&settings)?;
            for _ in 0..config.rounds {
                let k = rng.random_range(0..4usize);
                let u: f64 = rng.random();
                counts[k] += 1;
                sums[k] += draw_outcome(&probs[k], u);
            }
        }
        SourceKind::LhvAdversary(model) => {
            if model.particles() != 2 {
                return Err(Error::Arity { expected: 2, got: model.particles() });
            }
            for _ in 0..config.rounds {
                let k = rng.random_range(0..4usize);
                let lambda = model.density().sample(&mut rng);
                let (x, y) = pairs[k];
                counts[k] += 1;
                sums[k] += model.product_outcome(&[x, y], &lambda);
            }
        }
    }

    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InsufficientData(format!("setting pair {k} received no rounds out of {}", config.rounds)));
    }
    let terms: [CorrelationEstimate; 4] =
        std::array::from_fn(|k| CorrelationEstimate::sampled(sums[k] as f64 / counts[k] as f64, counts[k]));
    let s_estimate = chsh_value(terms);
    Ok(SessionResult {
        s_estimate,
        verdict: Verdict::decide(&s_estimate, config.detection_threshold, config.sigma_margin),
        detection_threshold: config.detection_threshold,
        sigma_margin: config.sigma_margin,
        pair_rounds: counts,
        statistic: S_STATISTIC.to_string(),
    })
}

/// What a [`DetectionEstimate`] counts as success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMeaning {
    /// Adversary sessions flagged `SuspectClassical`.
    AdversaryDetected,
    /// Honest sessions accepted as `SecureQuantum`.
    HonestAccepted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEstimate {
    pub meaning: DetectionMeaning,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    /// Wilson 95% interval on `rate`.
    pub ci95: (f64, f64),
}

/// Runs `trials` sessions with seeds derived from `config.seed` and reports
/// the detection rate (adversary source) or true-negative rate (quantum
/// source).
pub fn detection_probability(config: &SessionConfig, trials: u64) -> Result<DetectionEstimate> {
    if trials == 0 {
        return Err(Error::argument("trials must be at least 1"));
    }
    config.validate()?;
    let (meaning, wanted) = match config.source {
        SourceKind::EntangledQuantum => (DetectionMeaning::HonestAccepted, Verdict::SecureQuantum),
        SourceKind::LhvAdversary(_) => (DetectionMeaning::AdversaryDetected, Verdict::SuspectClassical),
    };
    let verdicts: Vec<Verdict> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut c = config.clone();
            c.seed = seed::derive_seed(config.seed, t);
            run_session(&c).map(|r| r.verdict)
        })
        .collect::<Result<_>>()?;
    let successes = verdicts.iter().filter(|&&v| v == wanted).count() as u64;
    Ok(DetectionEstimate {
        meaning,
        trials,
        successes,
        rate: successes as f64 / trials as f64,
        ci95: wilson_interval(successes, trials, Z_95),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub s_quantum: f64,
    pub s_lhv: f64,
    pub sigma_q: f64,
    pub sigma_lhv: f64,
    /// `|S_q − S_lhv| / sqrt(σ_q² + σ_lhv²)`; the bare gap for exact rows.
    pub z: f64,
    /// `|S_q − S_lhv|` from exact correlations at the same settings.
    pub exact_gap: f64,
}

/// Sweeps the offset `δ` across `[−Δθ, +Δθ]` around convergence separation
/// `theta0` under [`SettingsPolicy::VicinityOffset`].
///
/// With `rounds = Some(n)` both sources run `n`-round sessions; with `None`
/// exact correlations are used, sigmas are zero and `z` holds the exact gap.
pub fn vicinity_attack_sweep(
    theta0: f64,
    params: VicinityParams,
    steps: usize,
    rounds: Option<u64>,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if steps < 2 {
        return Err(Error::argument("sweep needs at least two steps"));
    }
    let dt = params.delta_theta();
    let deltas: Vec<f64> = (0..steps).map(|i| -dt + 2.0 * dt * i as f64 / (steps - 1) as f64).collect();
    deltas
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| {
            let policy = SettingsPolicy::VicinityOffset { theta0, delta };
            let settings = policy.settings();
            let exact_q = chsh_from_source(CorrelationSource::QuantumExact, &settings)?.s_value;
            let exact_l = chsh_from_source(CorrelationSource::LhvAnalytic, &settings)?.s_value;
            let exact_gap = (exact_q - exact_l).abs();
            let Some(n) = rounds else {
                return Ok(SweepRow {
                    delta,
                    s_quantum: exact_q,
                    s_lhv: exact_l,
                    sigma_q: 0.0,
                    sigma_lhv: 0.0,
                    z: exact_gap,
                    exact_gap,
                });
            };
            let i = i as u64;
            let q = run_session(&SessionConfig::new(
                SourceKind::EntangledQuantum,
                policy,
                n,
                seed::derive_seed(seed, 2 * i),
            ))?;
            let l = run_session(&SessionConfig::new(
                SourceKind::sign_adversary(),
                policy,
                n,
                seed::derive_seed(seed, 2 * i + 1),
            ))?;
            let (sq, sl) = (q.s_estimate, l.s_estimate);
            let pooled = (sq.std_error.powi(2) + sl.std_error.powi(2)).sqrt();
            let diff = (sq.s_value - sl.s_value).abs();
            let z = if pooled > 0.0 {
                diff / pooled
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            Ok(SweepRow {
                delta,
                s_quantum: sq.s_value,
                s_lhv: sl.s_value,
                sigma_q: sq.std_error,
                sigma_lhv: sl.std_error,
                z,
                exact_gap,
            })
        })
        .collect()
}
