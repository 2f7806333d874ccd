//! Deterministic local hidden-variable models.
//!
//! A model pairs a density over hidden variables `λ` with one outcome rule per
//! particle. The built-in model draws `λ` uniformly on the unit sphere and
//! answers `sign(â(θ)·λ)` with `â(θ) = (sin θ, 0, cos θ)` for every particle,
//! which gives `E(Δ) = 1 − 2Δ/π` for two particles.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{CorrelationEstimate, MeasurementSetting};
use crate::seed;

/// Samples per independent generator stream in Monte-Carlo loops.
const CHUNK: usize = 1 << 16;

const UNIT_TOLERANCE: f64 = 1e-12;

/// A hidden variable: a unit direction in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenVariable([f64; 3]);

impl HiddenVariable {
    /// Fails unless `v` has unit norm within 1e-12.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::argument(format!("hidden variable norm {norm} is not 1")));
        }
        Ok(HiddenVariable(v))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, v: [f64; 3]) -> f64 {
        self.0[0] * v[0] + self.0[1] * v[1] + self.0[2] * v[2]
    }
}

/// A measurement outcome, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    /// Non-negative maps to `Plus`, so a zero projection resolves to `+1`.
    pub fn of(x: f64) -> Self {
        if x >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// The hidden-variable density `ρ(λ)`.
pub trait Density: fmt::Debug + Send + Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> HiddenVariable;
}

/// A deterministic per-particle outcome rule `A(setting, λ)`.
pub trait OutcomeRule: fmt::Debug + Send + Sync {
    fn outcome(&self, setting: &MeasurementSetting, lambda: &HiddenVariable) -> Sign;
}

/// Uniform density on the unit sphere.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformSphere;

impl Density for UniformSphere {
    fn sample(&self, rng: &mut dyn RngCore) -> HiddenVariable {
        let v: [f64; 3] = UnitSphere.sample(rng);
        HiddenVariable(v)
    }
}

/// `sign(â(θ)·λ)` with `â(θ) = (sin θ, 0, cos θ)`, `θ` the observable angle.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignRule;

impl SignRule {
    pub fn direction(theta: f64) -> [f64; 3] {
        let (s, c) = theta.sin_cos();
        [s, 0.0, c]
    }
}

impl OutcomeRule for SignRule {
    fn outcome(&self, setting: &MeasurementSetting, lambda: &HiddenVariable) -> Sign {
        Sign::of(lambda.dot(Self::direction(setting.observable_angle())))
    }
}

/// A hidden-variable model: density plus one outcome rule per particle.
#[derive(Debug, Clone)]
pub struct LhvModel {
    density: Arc<dyn Density>,
    rules: Vec<Arc<dyn OutcomeRule>>,
}

impl LhvModel {
    pub fn new(density: Arc<dyn Density>, rules: Vec<Arc<dyn OutcomeRule>>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::argument("a model needs at least one outcome rule"));
        }
        Ok(LhvModel { density, rules })
    }

    /// Uniform-sphere `λ` with the sign rule on each of `particles` particles.
    pub fn sign_model(particles: usize) -> Result<Self> {
        let rule: Arc<dyn OutcomeRule> = Arc::new(SignRule);
        Self::new(Arc::new(UniformSphere), vec![rule; particles])
    }

    /// Two-particle sign model.
    pub fn sign_pair() -> Self {
        Self::sign_model(2).expect("two rules")
    }

    pub fn particles(&self) -> usize {
        self.rules.len()
    }

    pub fn density(&self) -> &dyn Density {
        self.density.as_ref()
    }

    pub fn rules(&self) -> &[Arc<dyn OutcomeRule>] {
        &self.rules
    }

    /// Product of all particles' outcomes for one `λ`.
    pub fn product_outcome(&self, settings: &[MeasurementSetting], lambda: &HiddenVariable) -> i64 {
        self.rules.iter().zip(settings).map(|(r, s)| r.outcome(s, lambda).value()).product()
    }

    fn check_arity(&self, settings: &[MeasurementSetting]) -> Result<()> {
        if settings.len() != self.rules.len() {
            return Err(Error::Arity { expected: self.rules.len(), got: settings.len() });
        }
        Ok(())
    }
}

fn chunk_lengths(count: usize) -> impl IndexedParallelIterator<Item = (u64, usize)> {
    let chunks = count.div_ceil(CHUNK);
    (0..chunks).into_par_iter().map(move |c| (c as u64, CHUNK.min(count - c * CHUNK)))
}

/// `count` hidden variables drawn from the model density.
///
/// The sequence depends only on `(seed, count)`: chunk `c` of 65 536 samples
/// is drawn from its own generator stream.
pub fn sample_lambda(model: &LhvModel, seed: u64, count: usize) -> Result<Vec<HiddenVariable>> {
    if count == 0 {
        return Err(Error::argument("count must be at least 1"));
    }
    let chunks: Vec<Vec<HiddenVariable>> = chunk_lengths(count)
        .map(|(c, len)| {
            let mut rng = seed::stream_rng(seed, c);
            (0..len).map(|_| model.density.sample(&mut rng)).collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Monte-Carlo estimate of `∫ ρ(λ) ∏ᵢ Aᵢ(aᵢ, λ) dλ`.
///
/// Uses the same `λ` sequence as [`sample_lambda`]; the ±1 products are summed
/// as integers so the result is independent of thread count.
pub fn lhv_correlation_mc(
    model: &LhvModel,
    settings: &[MeasurementSetting],
    samples: u64,
    seed: u64,
) -> Result<CorrelationEstimate> {
    model.check_arity(settings)?;
    if samples == 0 {
        return Err(Error::argument("samples must be at least 1"));
    }
    let count = usize::try_from(samples).map_err(|_| Error::argument("sample count too large"))?;
    let total: i64 = chunk_lengths(count)
        .map(|(c, len)| {
            let mut rng = seed::stream_rng(seed, c);
            (0..len)
                .map(|_| {
                    let lambda = model.density.sample(&mut rng);
                    model.product_outcome(settings, &lambda)
                })
                .sum::<i64>()
        })
        .sum();
    Ok(CorrelationEstimate::sampled(total as f64 / samples as f64, samples))
}

/// Product correlation over `n >= 2` particles.
pub fn lhv_product_correlation_n(
    model: &LhvModel,
    settings: &[MeasurementSetting],
    samples: u64,
    seed: u64,
) -> Result<CorrelationEstimate> {
    if settings.len() < 2 {
        return Err(Error::argument("product correlation needs at least two particles"));
    }
    lhv_correlation_mc(model, settings, samples, seed)
}

/// Angular separation of two observable angles folded into `[0, π]`.
pub fn angular_separation(theta_a: f64, theta_b: f64) -> f64 {
    let d = (theta_a - theta_b).rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Closed form `1 − 2Δ/π` of the two-particle sign model.
pub fn lhv_correlation_analytic(theta_a: f64, theta_b: f64) -> CorrelationEstimate {
    CorrelationEstimate::exact(1.0 - 2.0 * angular_separation(theta_a, theta_b) / PI)
}
