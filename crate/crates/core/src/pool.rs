//! Checkpoint pools: the frozen policies a training run leaves behind, plus
//! the stage-restricted sampling the influence estimate draws from.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::policy::PolicyParams;
use crate::rng;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: PolicyParams,
    /// Environment steps consumed by the run when this save happened.
    pub step_index: u64,
    pub run_id: String,
    pub fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointPool {
    pub run_id: String,
    pub scenario_id: String,
    pub environment_id: String,
    pub total_steps: u64,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PoolError {
    NonMonotoneStep { last: u64, given: u64 },
    Insufficient { requested: usize, eligible: usize },
    WeightCount { weights: usize, eligible: usize },
    BadWeights(String),
    CorruptCheckpoint { run_id: String, step_index: u64 },
}

impl fmt::Display for PoolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoolError::NonMonotoneStep { last, given } => write!(
                f,
                "checkpoint step {given} does not increase on the last saved step {last}"
            ),
            PoolError::Insufficient {
                requested,
                eligible,
            } => write!(
                f,
                "asked for {requested} checkpoints but only {eligible} are eligible"
            ),
            PoolError::WeightCount { weights, eligible } => write!(
                f,
                "{weights} sampling weights given for {eligible} eligible checkpoints"
            ),
            PoolError::BadWeights(msg) => write!(f, "bad sampling weights: {msg}"),
            PoolError::CorruptCheckpoint { run_id, step_index } => write!(
                f,
                "checkpoint {run_id}@{step_index} fails its fingerprint check"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PoolError {}

impl CheckpointPool {
    pub fn new(
        run_id: &str,
        scenario_id: &str,
        environment_id: &str,
        total_steps: u64,
    ) -> CheckpointPool {
        CheckpointPool {
            run_id: String::from(run_id),
            scenario_id: String::from(scenario_id),
            environment_id: String::from(environment_id),
            total_steps,
            checkpoints: Vec::new(),
        }
    }

    /// Appends a checkpoint. Step indices must strictly increase.
    pub fn save_checkpoint(
        &mut self,
        params: PolicyParams,
        step_index: u64,
    ) -> Result<(), PoolError> {
        if let Some(last) = self.checkpoints.last() {
            if step_index <= last.step_index {
                return Err(PoolError::NonMonotoneStep {
                    last: last.step_index,
                    given: step_index,
                });
            }
        }
        let fingerprint = params.fingerprint();
        self.checkpoints.push(Checkpoint {
            params,
            step_index,
            run_id: self.run_id.clone(),
            fingerprint,
        });
        Ok(())
    }

    /// Recomputes every fingerprint; used after loading from disk.
    pub fn verify_fingerprints(&self) -> Result<(), PoolError> {
        for cp in &self.checkpoints {
            if cp.params.fingerprint() != cp.fingerprint {
                return Err(PoolError::CorruptCheckpoint {
                    run_id: cp.run_id.clone(),
                    step_index: cp.step_index,
                });
            }
        }
        Ok(())
    }
}

/// Which part of the run history is eligible: the late stage is the final
/// quarter of saves (rounded up), mirroring the last-4-of-25 convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Late,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Weighting {
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub count: usize,
    pub stage: Stage,
    pub weighting: Weighting,
}

/// Draws `spec.count` distinct checkpoints without replacement from the
/// eligible stage, returned in step order.
pub fn sample_checkpoints(
    pool: &CheckpointPool,
    spec: &SamplingSpec,
    stream: &mut ChaCha8Rng,
) -> Result<Vec<Checkpoint>, PoolError> {
    let len = pool.checkpoints.len();
    let start = match spec.stage {
        Stage::All => 0,
        Stage::Late => len - len.div_ceil(4),
    };
    let eligible = &pool.checkpoints[start..];
    if spec.count > eligible.len() {
        return Err(PoolError::Insufficient {
            requested: spec.count,
            eligible: eligible.len(),
        });
    }
    let weights: Vec<f64> = match &spec.weighting {
        Weighting::Uniform => alloc::vec![1.0; eligible.len()],
        Weighting::Explicit(w) => {
            if w.len() != eligible.len() {
                return Err(PoolError::WeightCount {
                    weights: w.len(),
                    eligible: eligible.len(),
                });
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(PoolError::BadWeights(String::from(
                    "weights must be finite and non-negative",
                )));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(PoolError::BadWeights(alloc::format!(
                    "weights sum to {total}, expected 1"
                )));
            }
            if w.iter().filter(|x| **x > 0.0).count() < spec.count {
                return Err(PoolError::Insufficient {
                    requested: spec.count,
                    eligible: w.iter().filter(|x| **x > 0.0).count(),
                });
            }
            w.clone()
        }
    };
    let picked = rng::weighted_sample_without_replacement(stream, &weights, spec.count);
    Ok(picked.into_iter().map(|i| eligible[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params(x: f64) -> PolicyParams {
        PolicyParams {
            resource_weights: vec![x, 1.0 - x],
            zap_propensity: 0.5,
            exploration_temperature: 1.0,
            approach_weight: x,
        }
    }

    fn pool(n: usize) -> CheckpointPool {
        let mut p = CheckpointPool::new("run-a", "small", "chicken", (n as u64) * 2000);
        for i in 1..=n {
            p.save_checkpoint(params(i as f64 / n as f64), i as u64 * 2000)
                .unwrap();
        }
        p
    }

    #[test]
    fn saves_are_ordered_and_fingerprinted() {
        let p = pool(3);
        assert_eq!(p.checkpoints.len(), 3);
        assert!(p.verify_fingerprints().is_ok());
        let mut bad = pool(2);
        assert_eq!(
            bad.save_checkpoint(params(0.1), 2000),
            Err(PoolError::NonMonotoneStep {
                last: 4000,
                given: 2000
            })
        );
    }

    #[test]
    fn corrupt_params_fail_verification() {
        let mut p = pool(2);
        p.checkpoints[1].params.approach_weight += 0.25;
        assert!(matches!(
            p.verify_fingerprints(),
            Err(PoolError::CorruptCheckpoint { .. })
        ));
    }

    #[test]
    fn late_stage_takes_the_final_quarter() {
        let p = pool(25);
        let spec = SamplingSpec {
            count: 4,
            stage: Stage::Late,
            weighting: Weighting::Uniform,
        };
        let mut stream = rng::stream(5);
        for _ in 0..100 {
            let picked = sample_checkpoints(&p, &spec, &mut stream).unwrap();
            assert_eq!(picked.len(), 4);
            for cp in &picked {
                // 25 saves at 2K cadence: the last 7 start at step 38K.
                assert!(cp.step_index >= 19 * 2000);
            }
            for w in picked.windows(2) {
                assert!(w[0].step_index < w[1].step_index);
            }
        }
    }

    #[test]
    fn exhaustive_uniform_draw_returns_the_whole_pool() {
        let p = pool(9);
        let spec = SamplingSpec {
            count: 9,
            stage: Stage::All,
            weighting: Weighting::Uniform,
        };
        let mut stream = rng::stream(1);
        let picked = sample_checkpoints(&p, &spec, &mut stream).unwrap();
        assert_eq!(picked, p.checkpoints);
    }

    #[test]
    fn oversized_request_errors() {
        let p = pool(4);
        let spec = SamplingSpec {
            count: 5,
            stage: Stage::All,
            weighting: Weighting::Uniform,
        };
        assert_eq!(
            sample_checkpoints(&p, &spec, &mut rng::stream(1)),
            Err(PoolError::Insufficient {
                requested: 5,
                eligible: 4
            })
        );
    }

    #[test]
    fn explicit_weights_are_validated() {
        let p = pool(4);
        let mut stream = rng::stream(1);
        let bad_len = SamplingSpec {
            count: 1,
            stage: Stage::All,
            weighting: Weighting::Explicit(vec![0.5, 0.5]),
        };
        assert!(matches!(
            sample_checkpoints(&p, &bad_len, &mut stream),
            Err(PoolError::WeightCount { .. })
        ));
        let bad_sum = SamplingSpec {
            count: 1,
            stage: Stage::All,
            weighting: Weighting::Explicit(vec![0.5, 0.5, 0.5, 0.5]),
        };
        assert!(matches!(
            sample_checkpoints(&p, &bad_sum, &mut stream),
            Err(PoolError::BadWeights(_))
        ));
    }

    #[test]
    fn explicit_weight_frequencies_match() {
        // 1e5 single draws against weights (0.2, 0.3, 0.5): empirical
        // frequencies must sit within 3 standard errors.
        let p = pool(3);
        let weights = vec![0.2, 0.3, 0.5];
        let spec = SamplingSpec {
            count: 1,
            stage: Stage::All,
            weighting: Weighting::Explicit(weights.clone()),
        };
        let mut stream = rng::stream(99);
        let n = 100_000usize;
        let mut hits = [0usize; 3];
        for _ in 0..n {
            let cp = &sample_checkpoints(&p, &spec, &mut stream).unwrap()[0];
            let idx = p
                .checkpoints
                .iter()
                .position(|c| c.step_index == cp.step_index)
                .unwrap();
            hits[idx] += 1;
        }
        for (i, w) in weights.iter().enumerate() {
            let freq = hits[i] as f64 / n as f64;
            let se = (w * (1.0 - w) / n as f64).sqrt();
            assert!(
                (freq - w).abs() <= 3.0 * se,
                "weight {w}: freq {freq}, se {se}"
            );
        }
    }
}
