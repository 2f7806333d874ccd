//! Bell expressions and the CHSH specialisation.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hvt::{lhv_correlation_analytic, lhv_correlation_mc, LhvModel};
use crate::quantum::{
    correlation_exact, correlation_from_counts, prepare_bell_state, sample_counts, CorrelationEstimate,
    MeasurementSetting,
};
use crate::seed;
use crate::stats::{Summary, Z_95};
use crate::{CLASSICAL_BOUND, TSIRELSON_BOUND};

/// Margin above 2√2 before a value is labelled supra-quantum.
pub const SUPRA_QUANTUM_TOLERANCE: f64 = 1e-9;

/// Slack above the classical bound before a value counts as a violation.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

/// CHSH sign pattern for `E(a,b), E(a,b′), E(a′,b), E(a′,b′)`.
pub const CHSH_COEFFICIENTS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

pub type SettingPair = (MeasurementSetting, MeasurementSetting);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: MeasurementSetting,
    pub a_prime: MeasurementSetting,
    pub b: MeasurementSetting,
    pub b_prime: MeasurementSetting,
}

impl ChshSettings {
    pub fn new(
        a: MeasurementSetting,
        a_prime: MeasurementSetting,
        b: MeasurementSetting,
        b_prime: MeasurementSetting,
    ) -> Self {
        ChshSettings { a, a_prime, b, b_prime }
    }

    /// All four in the observable-angle convention.
    pub fn observable(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        let o = MeasurementSetting::observable;
        Self::new(o(a), o(a_prime), o(b), o(b_prime))
    }

    /// All four in the half-angle convention.
    pub fn half_angle(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        let h = MeasurementSetting::half_angle;
        Self::new(h(a), h(a_prime), h(b), h(b_prime))
    }

    /// `a = 0, a′ = π/2, b = π/4, b′ = 3π/4`: the Tsirelson-maximal choice.
    pub fn canonical() -> Self {
        Self::observable(0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4)
    }

    /// `(a,b), (a,b′), (a′,b), (a′,b′)`, matching [`CHSH_COEFFICIENTS`].
    pub fn pairs(&self) -> [SettingPair; 4] {
        [(self.a, self.b), (self.a, self.b_prime), (self.a_prime, self.b), (self.a_prime, self.b_prime)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Classical,
    QuantumViolation,
    SupraQuantum,
}

impl Classification {
    pub fn of(s: f64) -> Self {
        let s = s.abs();
        if s <= CLASSICAL_BOUND {
            Classification::Classical
        } else if s <= TSIRELSON_BOUND + SUPRA_QUANTUM_TOLERANCE {
            Classification::QuantumViolation
        } else {
            Classification::SupraQuantum
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub s_value: f64,
    /// `E(a,b), E(a,b′), E(a′,b), E(a′,b′)`.
    pub terms: [CorrelationEstimate; 4],
    pub std_error: f64,
    pub classification: Classification,
}

/// `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)` with errors added in quadrature.
pub fn chsh_value(terms: [CorrelationEstimate; 4]) -> ChshResult {
    let s_value = terms.iter().zip(CHSH_COEFFICIENTS).map(|(e, c)| c * e.value).sum::<f64>();
    let std_error = terms.iter().map(|e| e.std_error * e.std_error).sum::<f64>().sqrt();
    ChshResult { s_value, terms, std_error, classification: Classification::of(s_value) }
}

/// Where the four term correlations come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CorrelationSource {
    QuantumExact,
    QuantumSampled { shots: u64, seed: u64 },
    LhvAnalytic,
    LhvSampled { samples: u64, seed: u64 },
}

impl CorrelationSource {
    /// Same source with sampling seeds replaced by `seed`.
    pub fn reseeded(self, seed: u64) -> Self {
        match self {
            CorrelationSource::QuantumSampled { shots, .. } => CorrelationSource::QuantumSampled { shots, seed },
            CorrelationSource::LhvSampled { samples, .. } => CorrelationSource::LhvSampled { samples, seed },
            exact => exact,
        }
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, CorrelationSource::QuantumExact | CorrelationSource::QuantumSampled { .. })
    }

    /// Two-particle correlation for one setting pair. Sampled sources draw
    /// from a stream derived from their seed and `index`.
    pub fn correlation(self, pair: SettingPair, index: u64) -> Result<CorrelationEstimate> {
        let settings = [pair.0, pair.1];
        match self {
            CorrelationSource::QuantumExact => correlation_exact(&prepare_bell_state(), &settings),
            CorrelationSource::QuantumSampled { shots, seed } => {
                let counts = sample_counts(&prepare_bell_state(), &settings, shots, seed::derive_seed(seed, index))?;
                correlation_from_counts(&counts)
            }
            CorrelationSource::LhvAnalytic => {
                Ok(lhv_correlation_analytic(pair.0.observable_angle(), pair.1.observable_angle()))
            }
            CorrelationSource::LhvSampled { samples, seed } => {
                lhv_correlation_mc(&LhvModel::sign_pair(), &settings, samples, seed::derive_seed(seed, index))
            }
        }
    }
}

/// CHSH value of a settings grid from `source`.
pub fn chsh_from_source(source: CorrelationSource, settings: &ChshSettings) -> Result<ChshResult> {
    chsh_from_pairs(source, &settings.pairs())
}

/// CHSH combination over four explicitly listed pairs, taken in order.
///
/// Published angle tables do not always form an `{a,a′}×{b,b′}` grid, so the
/// pairs are accepted as given.
pub fn chsh_from_pairs(source: CorrelationSource, pairs: &[SettingPair; 4]) -> Result<ChshResult> {
    let mut terms = [CorrelationEstimate::exact(0.0); 4];
    for (i, pair) in pairs.iter().enumerate() {
        terms[i] = source.correlation(*pair, i as u64)?;
    }
    Ok(chsh_value(terms))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellTerm {
    pub coefficient: f64,
    pub settings: Vec<MeasurementSetting>,
}

/// `|Σₖ Cₖ·Eₖ| <= B_local`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellExpression {
    terms: Vec<BellTerm>,
    classical_bound: f64,
}

impl BellExpression {
    pub fn new(terms: Vec<BellTerm>, classical_bound: f64) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::argument("a Bell expression needs at least one term"));
        };
        let arity = first.settings.len();
        if arity == 0 {
            return Err(Error::argument("terms need at least one setting"));
        }
        if let Some(t) = terms.iter().find(|t| t.settings.len() != arity) {
            return Err(Error::Arity { expected: arity, got: t.settings.len() });
        }
        if !(classical_bound > 0.0) {
            return Err(Error::argument("classical bound must be positive"));
        }
        Ok(BellExpression { terms, classical_bound })
    }

    /// CHSH: coefficients `(1, −1, 1, 1)` with bound 2.
    pub fn chsh(settings: &ChshSettings) -> Self {
        let terms = settings
            .pairs()
            .iter()
            .zip(CHSH_COEFFICIENTS)
            .map(|(&(x, y), coefficient)| BellTerm { coefficient, settings: vec![x, y] })
            .collect();
        BellExpression { terms, classical_bound: CLASSICAL_BOUND }
    }

    pub fn terms(&self) -> &[BellTerm] {
        &self.terms
    }

    pub fn classical_bound(&self) -> f64 {
        self.classical_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellEvaluation {
    pub value: f64,
    pub violated: bool,
}

/// Evaluates `expr` with correlations supplied by `provider`.
pub fn evaluate_bell_expression<F>(expr: &BellExpression, mut provider: F) -> Result<BellEvaluation>
where
    F: FnMut(&[MeasurementSetting]) -> Result<CorrelationEstimate>,
{
    let mut sum = 0.0;
    for term in &expr.terms {
        let e = provider(&term.settings).map_err(|e| match e {
            Error::Provider(_) => e,
            other => Error::Provider(other.to_string()),
        })?;
        sum += term.coefficient * e.value;
    }
    let value = sum.abs();
    Ok(BellEvaluation { value, violated: value > expr.classical_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomChshSummary {
    pub trials: usize,
    pub mean_abs_s: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    /// 95% confidence interval on `mean_abs_s`.
    pub ci95: (f64, f64),
    /// Fraction of trials with `|S| > 2 + 1e-9`.
    pub violation_fraction: f64,
}

/// Draws `trials` settings grids with every angle uniform on `[0, 2π)` and
/// summarises `|S|`.
pub fn average_random_chsh(source: CorrelationSource, trials: usize, seed: u64) -> Result<RandomChshSummary> {
    if trials == 0 {
        return Err(Error::argument("trials must be at least 1"));
    }
    let mut rng = seed::rng(seed);
    let grids: Vec<ChshSettings> = (0..trials)
        .map(|_| {
            let mut angle = || rng.random_range(0.0..TAU);
            ChshSettings::observable(angle(), angle(), angle(), angle())
        })
        .collect();
    let values: Vec<f64> = grids
        .par_iter()
        .enumerate()
        .map(|(i, g)| chsh_from_source(source.reseeded(seed::derive_seed(seed, i as u64)), g).map(|r| r.s_value.abs()))
        .collect::<Result<_>>()?;
    let summary = Summary::of(&values).expect("trials >= 1");
    let violations = values.iter().filter(|&&s| s > CLASSICAL_BOUND + VIOLATION_TOLERANCE).count();
    let half = Z_95 * summary.std_dev / (trials as f64).sqrt();
    Ok(RandomChshSummary {
        trials,
        mean_abs_s: summary.mean,
        std_dev: summary.std_dev,
        min: summary.min,
        max: summary.max,
        ci95: (summary.mean - half, summary.mean + half),
        violation_fraction: violations as f64 / trials as f64,
    })
}
