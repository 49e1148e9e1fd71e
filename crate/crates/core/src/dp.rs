//! Seeded noise, the Laplace mechanism, Report Noisy Max and composition accounting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Scale sentinel meaning "add no noise at all".
pub const ZERO_NOISE: f64 = f64::INFINITY;

/// A replayable random stream identified by `(seed, stream)`.
///
/// ChaCha output is specified bit-for-bit, so a given pair yields the same
/// sequence on every platform.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl NoiseSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NoiseSource { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        let bits = self.rng.random::<u64>() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha12Rng {
        &mut self.rng
    }
}

/// Privacy parameter; `Epsilon::INFINITE` switches every mechanism to zero noise.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Epsilon(f64);

impl Epsilon {
    pub const INFINITE: Epsilon = Epsilon(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 {
            Ok(Epsilon(value))
        } else {
            Err(Error::invalid(format!(
                "epsilon must be positive, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(Epsilon::INFINITE),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad epsilon {other:?}")))
                .and_then(Epsilon::new),
        }
    }
}

impl Serialize for Epsilon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(x) => Epsilon::new(x),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Laplace scale `numerator / epsilon`, or [`ZERO_NOISE`] when either side makes
/// the noise vanish. An unbounded numerator at finite epsilon is an error.
pub fn noise_scale(numerator: f64, epsilon: Epsilon) -> Result<f64> {
    if epsilon.is_infinite() || numerator == 0.0 {
        Ok(ZERO_NOISE)
    } else if numerator.is_finite() && numerator > 0.0 {
        Ok(numerator / epsilon.value())
    } else {
        Err(Error::invalid(format!(
            "no finite noise calibration for numerator {numerator}"
        )))
    }
}

/// Inverse CDF of Lap(0, scale) at `u ∈ (0, 1)`.
pub fn laplace_inverse_cdf(u: f64, scale: f64) -> f64 {
    let centered = u - 0.5;
    if centered == 0.0 {
        return 0.0;
    }
    -scale * centered.signum() * (-2.0 * centered.abs()).ln_1p()
}

/// One draw from Lap(0, scale) using a single uniform.
pub fn sample_laplace(scale: f64, src: &mut NoiseSource) -> Result<f64> {
    if scale == ZERO_NOISE {
        return Ok(0.0);
    }
    if scale.is_nan() || scale <= 0.0 || !scale.is_finite() {
        return Err(Error::invalid(format!(
            "Laplace scale must be positive, got {scale}"
        )));
    }
    Ok(laplace_inverse_cdf(src.uniform_open(), scale))
}

/// Report Noisy Max with Lap(gamma / epsilon) noise on every value.
///
/// Candidates are perturbed in key order; ties go to the smallest key.
pub fn report_noisy_max<C: Ord + Clone>(
    values: &BTreeMap<C, f64>,
    gamma: f64,
    epsilon: Epsilon,
    src: &mut NoiseSource,
) -> Result<(C, f64)> {
    if values.is_empty() {
        return Err(Error::invalid(
            "report_noisy_max needs at least one candidate",
        ));
    }
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::invalid(format!(
            "sensitivity must be nonnegative, got {gamma}"
        )));
    }
    let scale = noise_scale(gamma, epsilon)?;
    let mut best: Option<(C, f64)> = None;
    for (candidate, &value) in values {
        let noisy = value + sample_laplace(scale, src)?;
        if best.as_ref().is_none_or(|(_, b)| noisy > *b) {
            best = Some((candidate.clone(), noisy));
        }
    }
    Ok(best.expect("nonempty"))
}

/// Privacy spent by repeated component searches at a fixed per-round epsilon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLedger {
    pub per_round_epsilon: Epsilon,
    pub rounds_used: u32,
    pub delta: Option<f64>,
}

impl PrivacyLedger {
    pub fn new(per_round_epsilon: Epsilon) -> Self {
        PrivacyLedger {
            per_round_epsilon,
            rounds_used: 0,
            delta: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn record_round(&mut self) {
        self.rounds_used += 1;
    }

    pub fn basic(&self) -> f64 {
        compose_basic(self)
    }

    pub fn advanced(&self) -> Result<f64> {
        compose_advanced(self)
    }
}

/// `rounds_used * epsilon`.
pub fn compose_basic(ledger: &PrivacyLedger) -> f64 {
    if ledger.rounds_used == 0 {
        return 0.0;
    }
    f64::from(ledger.rounds_used) * ledger.per_round_epsilon.value()
}

/// `2 * sqrt(2 * rounds_used * ln(1/delta)) * epsilon`.
pub fn compose_advanced(ledger: &PrivacyLedger) -> Result<f64> {
    let delta = ledger
        .delta
        .ok_or_else(|| Error::invalid("advanced composition needs delta"))?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if ledger.rounds_used == 0 {
        return Ok(0.0);
    }
    let rounds = f64::from(ledger.rounds_used);
    Ok(2.0 * (2.0 * rounds * (1.0 / delta).ln()).sqrt() * ledger.per_round_epsilon.value())
}

/// `e^epsilon`.
pub fn risk_multiplier(epsilon: f64) -> f64 {
    epsilon.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_uniform_maps_to_zero() {
        assert_eq!(laplace_inverse_cdf(0.5, 20.0), 0.0);
        assert!(laplace_inverse_cdf(0.75, 1.0) > 0.0);
        assert!(laplace_inverse_cdf(0.25, 1.0) < 0.0);
        assert!((laplace_inverse_cdf(0.75, 1.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_sentinel() {
        let mut src = NoiseSource::new(1, 0);
        assert_eq!(sample_laplace(ZERO_NOISE, &mut src).unwrap(), 0.0);
        assert_eq!(noise_scale(1.0, Epsilon::INFINITE).unwrap(), ZERO_NOISE);
        assert_eq!(
            noise_scale(0.0, Epsilon::new(1.0).unwrap()).unwrap(),
            ZERO_NOISE
        );
        assert!(noise_scale(f64::INFINITY, Epsilon::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn bad_scales_rejected() {
        let mut src = NoiseSource::new(1, 0);
        for s in [0.0, -1.0, f64::NAN, f64::NEG_INFINITY] {
            assert!(sample_laplace(s, &mut src).is_err(), "{s}");
        }
    }

    #[test]
    fn laplace_moments() {
        let mut src = NoiseSource::new(7, 0);
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_laplace(20.0, &mut src).unwrap();
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var - 800.0).abs() < 40.0, "variance {var}");
    }

    #[test]
    fn replay_is_bit_identical() {
        let draw = |seed, stream| {
            let mut s = NoiseSource::new(seed, stream);
            (0..16)
                .map(|_| sample_laplace(3.0, &mut s).unwrap().to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9, 4), draw(9, 4));
        assert_ne!(draw(9, 4), draw(9, 5));
        assert_ne!(draw(9, 4), draw(10, 4));
    }

    #[test]
    fn noisy_max_zero_noise_is_argmax() {
        let mut src = NoiseSource::new(0, 0);
        let values = BTreeMap::from([('a', 10.0), ('b', 0.0), ('c', 0.0)]);
        assert_eq!(
            report_noisy_max(&values, 1.0, Epsilon::INFINITE, &mut src).unwrap(),
            ('a', 10.0)
        );
        let tie = BTreeMap::from([(3, 1.0), (1, 1.0), (2, 0.5)]);
        assert_eq!(
            report_noisy_max(&tie, 1.0, Epsilon::INFINITE, &mut src)
                .unwrap()
                .0,
            1
        );
    }

    #[test]
    fn noisy_max_single_and_empty() {
        let mut src = NoiseSource::new(0, 0);
        let eps = Epsilon::new(0.1).unwrap();
        let single = BTreeMap::from([(5u32, -3.0)]);
        for _ in 0..100 {
            assert_eq!(report_noisy_max(&single, 1.0, eps, &mut src).unwrap().0, 5);
        }
        let empty: BTreeMap<u32, f64> = BTreeMap::new();
        assert!(report_noisy_max(&empty, 1.0, eps, &mut src).is_err());
    }

    #[test]
    fn noisy_max_symmetric_candidates_split_evenly() {
        let mut src = NoiseSource::new(11, 0);
        let values = BTreeMap::from([('a', 1.0), ('b', 1.0)]);
        let trials = 100_000;
        let wins = (0..trials)
            .filter(|_| {
                report_noisy_max(&values, 1.0, Epsilon::new(1.0).unwrap(), &mut src)
                    .unwrap()
                    .0
                    == 'a'
            })
            .count();
        let share = wins as f64 / trials as f64;
        assert!((share - 0.5).abs() < 0.01, "{share}");
    }

    #[test]
    fn composition_examples() {
        let eps = Epsilon::new(0.05).unwrap();
        let mut ledger = PrivacyLedger::new(eps).with_delta(1e-3);
        assert_eq!(ledger.basic(), 0.0);
        assert_eq!(ledger.advanced().unwrap(), 0.0);
        for _ in 0..3 {
            ledger.record_round();
        }
        assert!((ledger.basic() - 0.15).abs() < 1e-15);
        ledger.record_round();
        // 2 * sqrt(8 ln 1000) * 0.05, evaluated with mpmath at 30 digits.
        assert!((ledger.advanced().unwrap() - 0.743_384_437_769_967_7).abs() < 1e-12);
    }

    #[test]
    fn advanced_composition_rejects_bad_delta() {
        let eps = Epsilon::new(0.05).unwrap();
        for d in [0.0, 1.0, -0.5, 2.0] {
            assert!(PrivacyLedger::new(eps).with_delta(d).advanced().is_err());
        }
        assert!(PrivacyLedger::new(eps).advanced().is_err());
    }

    #[test]
    fn risk_multiplier_values() {
        assert_eq!(risk_multiplier(0.0), 1.0);
        let r = risk_multiplier(0.15);
        assert!((1.16..=1.17).contains(&r), "{r}");
        let curve: Vec<f64> = (1..=10)
            .map(|k| risk_multiplier((k - 1) as f64 / 20.0))
            .collect();
        assert!(curve.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn epsilon_parsing() {
        assert!("inf".parse::<Epsilon>().unwrap().is_infinite());
        assert_eq!("0.5".parse::<Epsilon>().unwrap().value(), 0.5);
        assert!("0".parse::<Epsilon>().is_err());
        assert!("-1".parse::<Epsilon>().is_err());
        let e: Epsilon = serde_json::from_str("\"inf\"").unwrap();
        assert!(e.is_infinite());
        let e: Epsilon = serde_json::from_str("0.05").unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), "0.05");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn advanced_is_monotone(eps in 0.001f64..2.0, rounds in 1u32..50, delta in 1e-9f64..0.5) {
                let base = PrivacyLedger { per_round_epsilon: Epsilon::new(eps).unwrap(), rounds_used: rounds, delta: Some(delta) };
                let a = base.advanced().unwrap();
                let more_eps = PrivacyLedger { per_round_epsilon: Epsilon::new(eps * 1.5).unwrap(), ..base };
                let more_rounds = PrivacyLedger { rounds_used: rounds + 1, ..base };
                let smaller_delta = PrivacyLedger { delta: Some(delta / 2.0), ..base };
                prop_assert!(more_eps.advanced().unwrap() >= a);
                prop_assert!(more_rounds.advanced().unwrap() >= a);
                prop_assert!(smaller_delta.advanced().unwrap() >= a);
            }

            #[test]
            fn zero_noise_noisy_max_matches_argmax(values in proptest::collection::vec(-5i32..5, 1..8)) {
                let map: BTreeMap<usize, f64> = values.iter().enumerate().map(|(i, &v)| (i, f64::from(v))).collect();
                let mut src = NoiseSource::new(0, 0);
                let (idx, val) = report_noisy_max(&map, 1.0, Epsilon::INFINITE, &mut src).unwrap();
                let best = *values.iter().max().unwrap();
                let first = values.iter().position(|&v| v == best).unwrap();
                prop_assert_eq!(idx, first);
                prop_assert_eq!(val, f64::from(best));
            }
        }
    }
}
