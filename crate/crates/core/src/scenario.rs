//! Periods, demand scenarios and seeded per-period flows.

use alloc::string::String;
use alloc::vec::Vec;

use crate::netcore::OdPair;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("at least two periods are required, got {0}")]
    TooFewPeriods(usize),
    #[error("no scenarios configured")]
    NoScenarios,
    #[error("scenario `{label}` has invalid probability {p}")]
    BadProbability { label: String, p: f64 },
    #[error("scenario `{label}` has invalid multiplier range [{lo}, {hi}]")]
    BadMultiplier { label: String, lo: f64, hi: f64 },
    #[error("period modulation needs {expected} non-negative entries")]
    BadModulation { expected: usize },
    #[error("probabilities sum to zero and cannot be normalized")]
    ZeroProbabilityMass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub probability: f64,
    pub multiplier: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub periods: usize,
    /// Per-period demand factor; all ones by default.
    pub modulation: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    pub seed: u64,
}

impl ScenarioSet {
    /// Peak, shoulder and off-peak with probabilities 0.2 / 0.5 / 0.2.
    pub fn standard(periods: usize, seed: u64) -> Self {
        let s = |label: &str, p, lo, hi| Scenario { label: label.into(), probability: p, multiplier: (lo, hi) };
        ScenarioSet {
            periods,
            modulation: alloc::vec![1.0; periods],
            scenarios: alloc::vec![
                s("peak", 0.2, 1.2, 1.5),
                s("shoulder", 0.5, 0.8, 1.1),
                s("off-peak", 0.2, 0.4, 0.7)
            ],
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.periods < 2 {
            return Err(ScenarioError::TooFewPeriods(self.periods));
        }
        if self.scenarios.is_empty() {
            return Err(ScenarioError::NoScenarios);
        }
        for s in &self.scenarios {
            if !(s.probability.is_finite() && s.probability >= 0.0) {
                return Err(ScenarioError::BadProbability { label: s.label.clone(), p: s.probability });
            }
            let (lo, hi) = s.multiplier;
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return Err(ScenarioError::BadMultiplier { label: s.label.clone(), lo, hi });
            }
        }
        if self.modulation.len() != self.periods || self.modulation.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(ScenarioError::BadModulation { expected: self.periods });
        }
        Ok(())
    }

    pub fn probability_sum(&self) -> f64 {
        self.scenarios.iter().map(|s| s.probability).sum()
    }

    /// Rescales probabilities to sum to one.
    pub fn normalized(&self) -> Result<Self, ScenarioError> {
        let total = self.probability_sum();
        if total <= 0.0 {
            return Err(ScenarioError::ZeroProbabilityMass);
        }
        let mut out = self.clone();
        for s in &mut out.scenarios {
            s.probability /= total;
        }
        Ok(out)
    }
}

/// SplitMix64 in counter form: draw `n` is `mix(seed + (n + 1)·γ)`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// `f_ts(q)` stored densely as `[t][s][q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTensor {
    periods: usize,
    scenarios: usize,
    pairs: usize,
    data: Vec<f64>,
}

impl FlowTensor {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.periods, self.scenarios, self.pairs)
    }

    pub fn get(&self, t: usize, s: usize, q: usize) -> f64 {
        self.data[(t * self.scenarios + s) * self.pairs + q]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Draws one uniform multiplier per `(t, s, q)`, iterating periods, then
/// scenarios, then pairs in the given order.
pub fn generate_flows(pairs: &[OdPair], set: &ScenarioSet) -> Result<FlowTensor, ScenarioError> {
    set.validate()?;
    let mut rng = SplitMix64::new(set.seed);
    let mut data = Vec::with_capacity(set.periods * set.scenarios.len() * pairs.len());
    for t in 0..set.periods {
        for s in &set.scenarios {
            let (lo, hi) = s.multiplier;
            for q in pairs {
                let u = rng.next_f64();
                data.push(q.flow * (lo + u * (hi - lo)) * set.modulation[t]);
            }
        }
    }
    Ok(FlowTensor { periods: set.periods, scenarios: set.scenarios.len(), pairs: pairs.len(), data })
}

/// `Σ_s P_s f_ts(q)`.
pub fn expected_flow(tensor: &FlowTensor, set: &ScenarioSet, q: usize, t: usize) -> f64 {
    set.scenarios.iter().enumerate().map(|(s, sc)| sc.probability * tensor.get(t, s, q)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::VertexId;
    use alloc::vec;
    use proptest::prelude::*;

    fn pairs(flows: &[f64]) -> Vec<OdPair> {
        flows
            .iter()
            .enumerate()
            .map(|(k, &f)| OdPair { origin: VertexId(k as u32), destination: VertexId(k as u32 + 1), flow: f })
            .collect()
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs of SplitMix64 seeded with 0
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn unit_multipliers_reproduce_base() {
        let mut set = ScenarioSet::standard(3, 9);
        for s in &mut set.scenarios {
            s.multiplier = (1.0, 1.0);
        }
        let p = pairs(&[2.0, 3.5, 0.25]);
        let f = generate_flows(&p, &set).unwrap();
        for t in 0..3 {
            for s in 0..3 {
                for q in 0..3 {
                    assert_eq!(f.get(t, s, q), p[q].flow);
                }
            }
        }
    }

    #[test]
    fn expected_flow_is_probability_weighted() {
        let set = ScenarioSet::standard(2, 0);
        let tensor = FlowTensor { periods: 1, scenarios: 3, pairs: 1, data: vec![10.0, 5.0, 2.0] };
        assert!((expected_flow(&tensor, &set, 0, 0) - 4.9).abs() < 1e-12);

        let two = ScenarioSet {
            scenarios: vec![
                Scenario { label: "a".into(), probability: 0.5, multiplier: (1.0, 1.0) },
                Scenario { label: "b".into(), probability: 0.5, multiplier: (1.0, 1.0) },
            ],
            ..set.clone()
        };
        let tensor = FlowTensor { periods: 1, scenarios: 2, pairs: 1, data: vec![3.0, 3.0] };
        assert_eq!(expected_flow(&tensor, &two, 0, 0), 3.0);
    }

    #[test]
    fn probabilities_kept_unless_normalized() {
        let set = ScenarioSet::standard(4, 1);
        assert!((set.probability_sum() - 0.9).abs() < 1e-12);
        let n = set.normalized().unwrap();
        assert!((n.probability_sum() - 1.0).abs() < 1e-12);
        assert!((n.scenarios[1].probability - 0.5 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn invalid_sets() {
        assert_eq!(ScenarioSet::standard(1, 0).validate(), Err(ScenarioError::TooFewPeriods(1)));
        let mut s = ScenarioSet::standard(2, 0);
        s.scenarios[0].probability = -0.1;
        assert!(matches!(s.validate(), Err(ScenarioError::BadProbability { .. })));
        let mut s = ScenarioSet::standard(2, 0);
        s.scenarios[2].multiplier = (0.9, 0.4);
        assert!(matches!(s.validate(), Err(ScenarioError::BadMultiplier { .. })));
        let mut s = ScenarioSet::standard(2, 0);
        s.modulation = vec![1.0];
        assert_eq!(s.validate(), Err(ScenarioError::BadModulation { expected: 2 }));
    }

    proptest! {
        #[test]
        fn flows_stay_in_band_and_replay(seed in any::<u64>(), base in proptest::collection::vec(0.0f64..50.0, 1..12), periods in 2usize..6) {
            let set = ScenarioSet::standard(periods, seed);
            let p = pairs(&base);
            let a = generate_flows(&p, &set).unwrap();
            let b = generate_flows(&p, &set).unwrap();
            prop_assert_eq!(a.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                            b.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            for t in 0..periods {
                for (s, sc) in set.scenarios.iter().enumerate() {
                    for (q, pq) in p.iter().enumerate() {
                        let f = a.get(t, s, q);
                        prop_assert!(f >= 0.0);
                        prop_assert!(f >= pq.flow * sc.multiplier.0 - 1e-12);
                        prop_assert!(f <= pq.flow * sc.multiplier.1 + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn uniform_draws_in_unit_interval(seed in any::<u64>()) {
            let mut r = SplitMix64::new(seed);
            for _ in 0..100 {
                let u = r.next_f64();
                prop_assert!((0.0..1.0).contains(&u));
            }
        }
    }
}
