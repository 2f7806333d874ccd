//! Dense statevector simulation of small entangled registers.
//!
//! Qubit `q` of an `n`-qubit register is bit `n - 1 - q` of the amplitude
//! index, so outcome strings read left to right as qubit 0, 1, ….
//! A measurement along observable angle `θ` (`cos θ·Z + sin θ·X`) is realised
//! as `RY(-θ)` followed by a computational-basis measurement.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::seed;
use crate::stats::sign_mean_std_error;

/// Largest register the dense representation accepts (2^20 amplitudes, 16 MiB).
pub const MAX_QUBITS: usize = 20;

const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits, 1)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amplitudes })
    }

    /// Wraps raw amplitudes, checking the length is a power of two and the
    /// state is normalised.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!("amplitude count {len} is not 2^n with n >= 1")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits, 1)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::argument(format!("state norm {norm} is not 1")));
        }
        Ok(Statevector { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Hadamard on `qubit`.
    pub fn apply_h(&mut self, qubit: usize) {
        let m = self.mask(qubit);
        for i in 0..self.amplitudes.len() {
            if i & m == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | m]);
                self.amplitudes[i] = (a0 + a1) * FRAC_1_SQRT_2;
                self.amplitudes[i | m] = (a0 - a1) * FRAC_1_SQRT_2;
            }
        }
    }

    /// Controlled-NOT with `control` and `target`.
    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (self.mask(control), self.mask(target));
        for i in 0..self.amplitudes.len() {
            if i & c != 0 && i & t == 0 {
                self.amplitudes.swap(i, i | t);
            }
        }
    }

    /// `RY(angle) = exp(-i·angle·Y/2)` on `qubit`.
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) {
        let m = self.mask(qubit);
        let (s, c) = (angle / 2.0).sin_cos();
        for i in 0..self.amplitudes.len() {
            if i & m == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | m]);
                self.amplitudes[i] = a0 * c - a1 * s;
                self.amplitudes[i | m] = a0 * s + a1 * c;
            }
        }
    }

    /// Born-rule outcome probabilities after rotating every qubit into its
    /// measurement basis. Index `i` is the outcome whose bits are `i`.
    pub fn measurement_probabilities(&self, settings: &[MeasurementSetting]) -> Result<Vec<f64>> {
        check_settings(self.n_qubits, settings)?;
        let mut rotated = self.clone();
        for (q, s) in settings.iter().enumerate() {
            rotated.apply_ry(q, -s.observable_angle());
        }
        Ok(rotated.amplitudes.iter().map(|a| a.norm_sqr()).collect())
    }
}

fn check_qubits(n: usize, min: usize) -> Result<()> {
    if n < min || n > MAX_QUBITS {
        return Err(Error::Size(format!("{n} qubits outside {min}..={MAX_QUBITS}")));
    }
    Ok(())
}

fn check_settings(n_qubits: usize, settings: &[MeasurementSetting]) -> Result<()> {
    if settings.len() != n_qubits {
        return Err(Error::Arity { expected: n_qubits, got: settings.len() });
    }
    if let Some(first) = settings.first() {
        if settings.iter().any(|s| s.convention != first.convention) {
            return Err(Error::argument("settings mix angle conventions"));
        }
    }
    Ok(())
}

/// How a [`MeasurementSetting`] angle maps onto the measured observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleConvention {
    /// The angle is the observable angle directly.
    #[default]
    ObservableAngle,
    /// Polarizer-style: the observable angle is twice the stored angle.
    HalfAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    angle: f64,
    convention: AngleConvention,
}

impl MeasurementSetting {
    /// Angle is reduced into `[0, 2π)`.
    pub fn new(angle: f64, convention: AngleConvention) -> Self {
        let mut angle = angle.rem_euclid(TAU);
        if angle >= TAU {
            angle = 0.0;
        }
        MeasurementSetting { angle, convention }
    }

    pub fn observable(angle: f64) -> Self {
        Self::new(angle, AngleConvention::ObservableAngle)
    }

    pub fn half_angle(angle: f64) -> Self {
        Self::new(angle, AngleConvention::HalfAngle)
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn convention(&self) -> AngleConvention {
        self.convention
    }

    /// Angle of the measured observable in the X–Z plane.
    pub fn observable_angle(&self) -> f64 {
        match self.convention {
            AngleConvention::ObservableAngle => self.angle,
            AngleConvention::HalfAngle => 2.0 * self.angle,
        }
    }
}

/// Shot count of an estimate; `Exact` for analytic values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Exact,
    Sampled(u64),
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Exact => serializer.serialize_str("exact"),
            Shots::Sampled(n) => serializer.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ShotsVisitor;

        impl Visitor<'_> for ShotsVisitor {
            type Value = Shots;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"exact\" or a positive shot count")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Shots, E> {
                Ok(Shots::Sampled(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Shots, E> {
                u64::try_from(v).map(Shots::Sampled).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Shots, E> {
                if v == "exact" {
                    Ok(Shots::Exact)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(ShotsVisitor)
    }
}

/// A correlation value `E ∈ [-1, 1]` with its shot count and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub shots: Shots,
    pub std_error: f64,
}

impl CorrelationEstimate {
    pub fn exact(value: f64) -> Self {
        CorrelationEstimate { value, shots: Shots::Exact, std_error: 0.0 }
    }

    /// Mean of `shots` ±1 draws; the standard error is `sqrt((1 - E²)/shots)`.
    pub fn sampled(value: f64, shots: u64) -> Self {
        CorrelationEstimate { value, shots: Shots::Sampled(shots), std_error: sign_mean_std_error(value, shots) }
    }

    pub fn is_exact(&self) -> bool {
        self.shots == Shots::Exact
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementCounts {
    pub settings: Vec<MeasurementSetting>,
    pub shots: u64,
    /// Outcome bit string (qubit 0 first) to count.
    pub counts: BTreeMap<String, u64>,
    pub seed: u64,
}

/// `(|00⟩ + |11⟩)/√2`, prepared by H on qubit 0 then CNOT(0 → 1).
pub fn prepare_bell_state() -> Statevector {
    let mut state = Statevector::zero(2).expect("two qubits is in range");
    state.apply_h(0);
    state.apply_cnot(0, 1);
    state
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits, `2 <= n <= 20`.
pub fn prepare_ghz_state(n: usize) -> Result<Statevector> {
    check_qubits(n, 2)?;
    let mut state = Statevector::zero(n)?;
    state.apply_h(0);
    for q in 1..n {
        state.apply_cnot(q - 1, q);
    }
    Ok(state)
}

/// Exact `⟨⊗ᵢ (cos θᵢ Z + sin θᵢ X)⟩` on `state`.
pub fn correlation_exact(state: &Statevector, settings: &[MeasurementSetting]) -> Result<CorrelationEstimate> {
    let probs = state.measurement_probabilities(settings)?;
    let value = probs.iter().enumerate().map(|(i, p)| parity(i) * p).sum::<f64>();
    Ok(CorrelationEstimate::exact(value.clamp(-1.0, 1.0)))
}

/// Samples `shots` measurement outcomes from the Born distribution with a
/// generator seeded by `seed`.
pub fn sample_counts(
    state: &Statevector,
    settings: &[MeasurementSetting],
    shots: u64,
    seed: u64,
) -> Result<MeasurementCounts> {
    if shots == 0 {
        return Err(Error::argument("shots must be at least 1"));
    }
    let probs = state.measurement_probabilities(settings)?;
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::argument(format!("born distribution: {e}")))?;
    let mut rng = seed::rng(seed);
    let mut tally = vec![0u64; probs.len()];
    for _ in 0..shots {
        tally[dist.sample(&mut rng)] += 1;
    }
    let n = state.n_qubits();
    let counts = tally.into_iter().enumerate().filter(|&(_, c)| c > 0).map(|(i, c)| (format!("{i:0n$b}"), c)).collect();
    Ok(MeasurementCounts { settings: settings.to_vec(), shots, counts, seed })
}

/// Parity estimator `Σ (±1)·count / shots` over the recorded outcomes.
pub fn correlation_from_counts(counts: &MeasurementCounts) -> Result<CorrelationEstimate> {
    if counts.shots == 0 {
        return Err(Error::argument("shots must be at least 1"));
    }
    if counts.counts.is_empty() {
        return Err(Error::argument("counts are empty"));
    }
    let total: u64 = counts.counts.values().sum();
    if total != counts.shots {
        return Err(Error::argument(format!("counts sum to {total}, expected {} shots", counts.shots)));
    }
    let mut signed: i64 = 0;
    for (outcome, &c) in &counts.counts {
        if !outcome.chars().all(|ch| ch == '0' || ch == '1') {
            return Err(Error::argument(format!("outcome {outcome:?} is not a bit string")));
        }
        let ones = outcome.chars().filter(|&ch| ch == '1').count();
        let c = c as i64;
        signed += if ones % 2 == 0 { c } else { -c };
    }
    Ok(CorrelationEstimate::sampled(signed as f64 / counts.shots as f64, counts.shots))
}

fn parity(index: usize) -> f64 {
    if index.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // literal oracle values
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    type Matrix = Vec<Vec<Complex64>>;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn kron(a: &Matrix, b: &Matrix) -> Matrix {
        let (n, m) = (a.len(), b.len());
        let mut out = vec![vec![c(0.0); n * m]; n * m];
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    // cos θ Z + sin θ X written out element by element.
    fn spin_observable(theta: f64) -> Matrix {
        vec![vec![c(theta.cos()), c(theta.sin())], vec![c(theta.sin()), c(-theta.cos())]]
    }

    fn expectation(state: &Statevector, op: &Matrix) -> f64 {
        let psi = state.amplitudes();
        let mut acc = c(0.0);
        for i in 0..psi.len() {
            for j in 0..psi.len() {
                acc += psi[i].conj() * op[i][j] * psi[j];
            }
        }
        acc.re
    }

    fn brute_force(state: &Statevector, thetas: &[f64]) -> f64 {
        let op = thetas.iter().skip(1).fold(spin_observable(thetas[0]), |acc, &t| kron(&acc, &spin_observable(t)));
        expectation(state, &op)
    }

    fn obs(thetas: &[f64]) -> Vec<MeasurementSetting> {
        thetas.iter().map(|&t| MeasurementSetting::observable(t)).collect()
    }

    #[test]
    fn bell_state_amplitudes() {
        let s = prepare_bell_state();
        let a = s.amplitudes();
        assert!((a[0].re - 0.70710678).abs() < 1e-8);
        assert!(a[1].norm() < 1e-15 && a[2].norm() < 1e-15);
        assert!((a[3].re - 0.70710678).abs() < 1e-8);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_states() {
        assert_eq!(prepare_ghz_state(2).unwrap(), prepare_bell_state());
        let g3 = prepare_ghz_state(3).unwrap();
        for (i, a) in g3.amplitudes().iter().enumerate() {
            let expect = if i == 0 || i == 7 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!((a.re - expect).abs() < 1e-15 && a.im == 0.0);
        }
        assert!(matches!(prepare_ghz_state(21), Err(Error::Size(_))));
        assert!(matches!(prepare_ghz_state(1), Err(Error::Size(_))));
    }

    #[test]
    fn ghz_all_zero_angles() {
        // Z^{⊗n} is +1 on |0…0⟩ and (−1)^n on |1…1⟩.
        for n in 2..=12 {
            let g = prepare_ghz_state(n).unwrap();
            let e = correlation_exact(&g, &obs(&vec![0.0; n])).unwrap();
            let expect = if n % 2 == 0 { 1.0 } else { 0.0 };
            assert!((e.value - expect).abs() < 1e-12, "n={n}");
        }
        let g3 = prepare_ghz_state(3).unwrap();
        assert!(brute_force(&g3, &[0.0, 0.0, 0.0]).abs() < 1e-12);
    }

    #[test]
    fn ghz3_matches_brute_force() {
        let g = prepare_ghz_state(3).unwrap();
        for thetas in [[0.3, 1.1, -0.4], [FRAC_PI_2, FRAC_PI_2, FRAC_PI_2], [2.0, 0.0, 5.0]] {
            let e = correlation_exact(&g, &obs(&thetas)).unwrap();
            assert!((e.value - brute_force(&g, &thetas)).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_correlation_examples() {
        let bell = prepare_bell_state();
        let e = correlation_exact(&bell, &obs(&[0.0, 0.0])).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert_eq!(e.std_error, 0.0);
        assert!(correlation_exact(&bell, &obs(&[0.0, FRAC_PI_2])).unwrap().value.abs() < 1e-12);
        let e = correlation_exact(&bell, &obs(&[0.0, FRAC_PI_4])).unwrap();
        assert!((e.value - brute_force(&bell, &[0.0, FRAC_PI_4])).abs() < 1e-12);
        assert!((e.value - 0.70710678).abs() < 1e-8);
    }

    #[test]
    fn half_angle_doubles_observable() {
        let bell = prepare_bell_state();
        let s = [MeasurementSetting::half_angle(0.0), MeasurementSetting::half_angle(PI / 8.0)];
        let e = correlation_exact(&bell, &s).unwrap();
        assert!((e.value - FRAC_PI_4.cos()).abs() < 1e-12);
    }

    #[test]
    fn arity_and_convention_errors() {
        let bell = prepare_bell_state();
        assert_eq!(correlation_exact(&bell, &obs(&[0.0])).unwrap_err(), Error::Arity { expected: 2, got: 1 });
        let mixed = [MeasurementSetting::observable(0.0), MeasurementSetting::half_angle(0.0)];
        assert!(matches!(correlation_exact(&bell, &mixed), Err(Error::Argument(_))));
    }

    #[test]
    fn aligned_sampling_only_even_outcomes() {
        let bell = prepare_bell_state();
        let counts = sample_counts(&bell, &obs(&[0.0, 0.0]), 1000, 11).unwrap();
        assert_eq!(counts.counts.values().sum::<u64>(), 1000);
        assert!(counts.counts.keys().all(|k| k == "00" || k == "11"));
        assert!(sample_counts(&bell, &obs(&[0.0, 0.0]), 0, 11).is_err());
    }

    #[test]
    fn orthogonal_sampling_centred_on_zero() {
        let bell = prepare_bell_state();
        let counts = sample_counts(&bell, &obs(&[0.0, FRAC_PI_2]), 100_000, 3).unwrap();
        let e = correlation_from_counts(&counts).unwrap();
        assert!(e.value.abs() <= 4.0 * e.std_error);
    }

    #[test]
    fn sampling_is_deterministic() {
        let bell = prepare_bell_state();
        let a = sample_counts(&bell, &obs(&[0.2, 1.3]), 5000, 42).unwrap();
        let b = sample_counts(&bell, &obs(&[0.2, 1.3]), 5000, 42).unwrap();
        assert_eq!(a, b);
    }

    fn counts_of(pairs: &[(&str, u64)]) -> MeasurementCounts {
        let counts: BTreeMap<String, u64> = pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        MeasurementCounts { settings: obs(&[0.0, 0.0]), shots: counts.values().sum(), counts, seed: 0 }
    }

    #[test]
    fn parity_estimator_examples() {
        assert_eq!(correlation_from_counts(&counts_of(&[("00", 500), ("11", 500)])).unwrap().value, 1.0);
        assert_eq!(correlation_from_counts(&counts_of(&[("01", 500), ("10", 500)])).unwrap().value, -1.0);
        let e = correlation_from_counts(&counts_of(&[("00", 250), ("01", 250), ("10", 250), ("11", 250)])).unwrap();
        assert_eq!(e.value, 0.0);
        assert!((e.std_error - (1.0f64 / 1000.0).sqrt()).abs() < 1e-12);
        let empty = MeasurementCounts { settings: vec![], shots: 10, counts: BTreeMap::new(), seed: 0 };
        assert!(correlation_from_counts(&empty).is_err());
    }

    #[test]
    fn counts_json_shape() {
        let counts = counts_of(&[("00", 3), ("11", 1)]);
        let v: serde_json::Value = serde_json::to_value(&counts).unwrap();
        assert_eq!(v["shots"], 4);
        assert_eq!(v["counts"]["00"], 3);
        assert_eq!(v["settings"][0]["convention"], "observable_angle");
    }

    #[test]
    fn shots_serde() {
        let e = CorrelationEstimate::exact(0.5);
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"exact\""));
        assert_eq!(serde_json::from_str::<CorrelationEstimate>(&json).unwrap(), e);
        let s = CorrelationEstimate::sampled(0.5, 400);
        assert_eq!(serde_json::from_str::<CorrelationEstimate>(&serde_json::to_string(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(Statevector::from_amplitudes(vec![c(1.0), c(0.0), c(0.0)]).is_err());
        assert!(Statevector::from_amplitudes(vec![c(1.0), c(1.0)]).is_err());
        assert!(Statevector::from_amplitudes(vec![c(0.6), c(0.8)]).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn bell_correlation_is_cosine_of_difference(a in -10.0f64..10.0, b in -10.0f64..10.0) {
                let bell = prepare_bell_state();
                let e = correlation_exact(&bell, &obs(&[a, b])).unwrap().value;
                prop_assert!((e - (a - b).cos()).abs() < 1e-12);
                prop_assert!((e - brute_force(&bell, &[a, b])).abs() < 1e-12);
            }

            #[test]
            fn periodic_in_two_pi(a in 0.0f64..TAU, b in 0.0f64..TAU) {
                let bell = prepare_bell_state();
                let e0 = correlation_exact(&bell, &obs(&[a, b])).unwrap().value;
                let e1 = correlation_exact(&bell, &obs(&[a + TAU, b])).unwrap().value;
                let e2 = correlation_exact(&bell, &obs(&[a, b + TAU])).unwrap().value;
                prop_assert!((e0 - e1).abs() < 1e-12);
                prop_assert!((e0 - e2).abs() < 1e-12);
            }

            #[test]
            fn sampled_std_error_formula(shots in 1u64..5000, seed in any::<u64>(), a in 0.0f64..TAU) {
                let bell = prepare_bell_state();
                let counts = sample_counts(&bell, &obs(&[a, 0.0]), shots, seed).unwrap();
                prop_assert_eq!(counts.counts.values().sum::<u64>(), shots);
                let e = correlation_from_counts(&counts).unwrap();
                prop_assert!((e.std_error - ((1.0 - e.value * e.value) / shots as f64).sqrt()).abs() < 1e-12);
            }
        }
    }
}
