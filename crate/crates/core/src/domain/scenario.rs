use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, LossFunction, ShiftedQuadratic};
use crate::error::{Error, Result};

// Stage targets read from a config may sit on the boundary up to rounding.
const TARGET_TOL: f64 = 1e-9;

/// Piecewise-stationary synthetic environment.
///
/// Rounds `stage_starts[k] ..= stage_starts[k+1] - 1` use the target
/// `stage_targets[k]`, perturbed per round by `N(0, jitter² I)` and
/// projected back into the domain. Losses are the default shifted-quadratic
/// family `‖w − θ_t‖² / (2D²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub horizon: usize,
    pub domain: Domain,
    pub stage_starts: Vec<usize>,
    pub stage_targets: Vec<Vec<f64>>,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    /// `n_stages` stages of (nearly) equal length with targets sampled
    /// uniformly from the domain.
    pub fn piecewise(
        domain: Domain,
        horizon: usize,
        n_stages: usize,
        jitter: f64,
        seed: u64,
    ) -> Result<Self> {
        if n_stages == 0 || n_stages > horizon {
            return Err(Error::invalid(
                "n_stages",
                format!("must be in 1..={horizon}, got {n_stages}"),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let stage_starts = (0..n_stages).map(|k| 1 + k * horizon / n_stages).collect();
        let stage_targets = (0..n_stages).map(|_| domain.sample(&mut rng)).collect();
        let scenario = Scenario {
            horizon,
            domain,
            stage_starts,
            stage_targets,
            jitter,
            seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn dimension(&self) -> usize {
        self.domain.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        if self.stage_starts.is_empty() {
            return Err(Error::contract("scenario has no stages"));
        }
        if self.stage_starts.len() != self.stage_targets.len() {
            return Err(Error::invalid(
                "stage_targets",
                format!(
                    "expected {} targets (one per stage start), got {}",
                    self.stage_starts.len(),
                    self.stage_targets.len()
                ),
            ));
        }
        if self.stage_starts[0] != 1 {
            return Err(Error::invalid("stage_starts", "first stage must start at round 1"));
        }
        if self.stage_starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("stage_starts", "must be strictly increasing"));
        }
        if *self.stage_starts.last().unwrap() > self.horizon {
            return Err(Error::invalid("stage_starts", "every stage must start within the horizon"));
        }
        for (k, target) in self.stage_targets.iter().enumerate() {
            if target.len() != self.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: self.dimension(),
                    got: target.len(),
                });
            }
            if !self.domain.contains(target, TARGET_TOL) {
                return Err(Error::invalid(
                    "stage_targets",
                    format!("target of stage {k} lies outside the domain"),
                ));
            }
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::invalid("jitter", "must be a nonnegative number"));
        }
        Ok(())
    }

    /// Closed round ranges `(start, end)` of the stages.
    pub fn stage_ranges(&self) -> Vec<(usize, usize)> {
        let mut ends: Vec<usize> = self.stage_starts[1..].iter().map(|s| s - 1).collect();
        ends.push(self.horizon);
        self.stage_starts.iter().copied().zip(ends).collect()
    }

    /// Per-round targets (after jitter and projection).
    pub fn targets(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.horizon);
        for (k, (start, end)) in self.stage_ranges().into_iter().enumerate() {
            let base = &self.stage_targets[k];
            for _ in start..=end {
                if self.jitter == 0.0 {
                    out.push(self.domain.project_unchecked(base));
                } else {
                    let moved: Vec<f64> = base
                        .iter()
                        .map(|b| b + self.jitter * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    out.push(self.domain.project_unchecked(&moved));
                }
            }
        }
        Ok(out)
    }

    pub fn generate(&self) -> Result<Vec<LossFunction>> {
        self.targets()?
            .into_iter()
            .map(|t| ShiftedQuadratic::for_domain(t, &self.domain).map(LossFunction::from))
            .collect()
    }
}

/// Loss sequence of `scenario`; deterministic in its seed.
pub fn generate_scenario(scenario: &Scenario) -> Result<Vec<LossFunction>> {
    scenario.generate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> Domain {
        Domain::unit_ball(2, 1.0).unwrap()
    }

    fn two_stage(jitter: f64) -> Scenario {
        Scenario {
            horizon: 10,
            domain: ball(),
            stage_starts: vec![1, 6],
            stage_targets: vec![vec![0.5, 0.0], vec![-0.5, 0.0]],
            jitter,
            seed: 4,
        }
    }

    #[test]
    fn single_stage_without_jitter_repeats_one_loss() {
        let s = Scenario {
            horizon: 7,
            domain: ball(),
            stage_starts: vec![1],
            stage_targets: vec![vec![0.1, 0.2]],
            jitter: 0.0,
            seed: 0,
        };
        let losses = s.generate().unwrap();
        assert_eq!(losses.len(), 7);
        let total: f64 = losses.iter().map(|f| f.value(&[0.1, 0.2]).unwrap()).sum();
        assert_eq!(total, 0.0);
    }

    #[test]
    fn two_stage_best_fixed_point_is_neither_target() {
        let losses = two_stage(0.0).generate().unwrap();
        let total = |w: &[f64]| -> f64 { losses.iter().map(|f| f.value(w).unwrap()).sum() };
        // Equal stage lengths: the mean target (0, 0) minimizes the sum.
        let at_mean = total(&[0.0, 0.0]);
        assert!(at_mean < total(&[0.5, 0.0]));
        assert!(at_mean < total(&[-0.5, 0.0]));
        assert!((at_mean - 10.0 * 0.25 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = two_stage(0.3).targets().unwrap();
        let b = two_stage(0.3).targets().unwrap();
        assert_eq!(a, b);
        let mut other = two_stage(0.3);
        other.seed = 5;
        assert_ne!(a, other.targets().unwrap());
    }

    #[test]
    fn jittered_targets_stay_in_domain() {
        let mut s = two_stage(2.0);
        s.horizon = 500;
        s.stage_starts = vec![1, 250];
        for t in s.targets().unwrap() {
            assert!(s.domain.contains(&t, 1e-12));
        }
    }

    #[test]
    fn rejects_bad_stage_lists() {
        let mut s = two_stage(0.0);
        s.stage_starts.clear();
        s.stage_targets.clear();
        assert!(matches!(s.generate(), Err(Error::Contract(_))));

        let mut s = two_stage(0.0);
        s.stage_starts = vec![2, 6];
        assert!(s.validate().is_err());

        let mut s = two_stage(0.0);
        s.stage_targets[1] = vec![3.0, 0.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn stage_ranges_partition_the_horizon() {
        let s = Scenario::piecewise(ball(), 100, 3, 0.0, 1).unwrap();
        let ranges = s.stage_ranges();
        assert_eq!(ranges.first().unwrap().0, 1);
        assert_eq!(ranges.last().unwrap().1, 100);
        for w in ranges.windows(2) {
            assert_eq!(w[0].1 + 1, w[1].0);
        }
    }
}
