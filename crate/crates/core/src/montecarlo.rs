//! Monte Carlo lifetime oracle.
//!
//! Each trial draws one system failure time: a leaf lives `t0 + Exp(λ)`, a
//! series dies with its first child, and a choice node picks one branch with
//! probability `ψ_k` and lives exactly as long as that branch.
//!
//! Trial `i` under seed `s` draws from ChaCha8 keyed by `s` on stream `i`, so
//! every trial's randomness is fixed by `(s, i)` alone. Results are summed in
//! trial order, which makes estimates bit-identical whatever the thread count.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{SystemExpr, SystemSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("trial count must be at least 1")]
    NoTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    trials: u64,
    seed: u64,
    parallel: bool,
}

impl SimulationConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self, SimulationError> {
        if trials == 0 {
            return Err(SimulationError::NoTrials);
        }
        Ok(Self {
            trials,
            seed,
            parallel: true,
        })
    }

    /// Allow trials to run on the rayon pool. Does not change results.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn parallel(&self) -> bool {
        self.parallel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationEstimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

fn pick_branch<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (k, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = k;
        }
        cumulative += w;
        if u < cumulative {
            return k;
        }
    }
    // u landed in the rounding gap below 1
    last_positive
}

fn draw<R: Rng>(expr: &SystemExpr, spec: &SystemSpec, rng: &mut R) -> f64 {
    match expr {
        SystemExpr::Leaf(id) => {
            let c = &spec.components[id.as_str()];
            let u: f64 = rng.sample(Open01);
            c.t0 + (-u.ln()) / c.lambda
        }
        SystemExpr::Series(children) => children
            .iter()
            .map(|child| draw(child, spec, rng))
            .fold(f64::INFINITY, f64::min),
        SystemExpr::ProbChoice(branches) => {
            let k = pick_branch(rng, branches.iter().map(|(w, _)| *w));
            draw(&branches[k].1, spec, rng)
        }
        SystemExpr::UniformChoice(children) => {
            let w = 1.0 / children.len() as f64;
            let k = pick_branch(rng, children.iter().map(|_| w));
            draw(&children[k], spec, rng)
        }
    }
}

/// Failure time of trial `trial_index`; depends only on the spec, the seed and the index.
pub fn sample_failure_time(spec: &SystemSpec, trial_index: u64, cfg: &SimulationConfig) -> f64 {
    let mut rng = trial_rng(cfg.seed, trial_index);
    draw(&spec.root, spec, &mut rng)
}

/// All trial failure times, in trial order.
pub fn failure_times(spec: &SystemSpec, cfg: &SimulationConfig) -> Vec<f64> {
    if cfg.parallel {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| sample_failure_time(spec, i, cfg))
            .collect()
    } else {
        (0..cfg.trials)
            .map(|i| sample_failure_time(spec, i, cfg))
            .collect()
    }
}

fn proportion(hits: u64, cfg: &SimulationConfig) -> SimulationEstimate {
    let n = cfg.trials as f64;
    let p = hits as f64 / n;
    SimulationEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        trials: cfg.trials,
        seed: cfg.seed,
    }
}

/// Fraction of trials still working at `t`.
pub fn estimate_survival(spec: &SystemSpec, t: f64, cfg: &SimulationConfig) -> SimulationEstimate {
    estimate_survival_curve(spec, &[t], cfg)[0]
}

/// Survival estimates at several times from one set of trials (common random
/// numbers), so the estimates are non-increasing in `t`.
pub fn estimate_survival_curve(
    spec: &SystemSpec,
    times: &[f64],
    cfg: &SimulationConfig,
) -> Vec<SimulationEstimate> {
    let lifetimes = failure_times(spec, cfg);
    times
        .iter()
        .map(|&t| proportion(lifetimes.iter().filter(|&&x| x > t).count() as u64, cfg))
        .collect()
}

/// Sample mean and standard error of the mean of `values`.
pub fn mean_estimate(values: &[f64], cfg: &SimulationConfig) -> SimulationEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    SimulationEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        trials: cfg.trials,
        seed: cfg.seed,
    }
}

/// Mean failure time over all trials.
pub fn estimate_mttf(spec: &SystemSpec, cfg: &SimulationConfig) -> SimulationEstimate {
    mean_estimate(&failure_times(spec, cfg), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ComponentParams;

    fn single(lambda: f64, t0: f64) -> SystemSpec {
        SystemSpec::new(
            [ComponentParams::new("A", lambda, t0)],
            SystemExpr::leaf("A"),
        )
        .unwrap()
    }

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(SimulationConfig::new(0, 1), Err(SimulationError::NoTrials));
    }

    #[test]
    fn huge_rate_pins_lifetime_to_installation() {
        let spec = single(1e12, 5.0);
        let cfg = SimulationConfig::new(100, 3).unwrap();
        for i in 0..100 {
            let t = sample_failure_time(&spec, i, &cfg);
            assert!((5.0..5.0 + 1e-9).contains(&t), "{t}");
        }
    }

    #[test]
    fn series_lifetime_is_minimum_of_leaves() {
        let comps = [
            ComponentParams::new("A", 0.5, 0.0),
            ComponentParams::new("B", 0.5, 0.0),
        ];
        let spec = SystemSpec::new(
            comps.clone(),
            SystemExpr::Series(vec![SystemExpr::leaf("A"), SystemExpr::leaf("B")]),
        )
        .unwrap();
        let cfg = SimulationConfig::new(1, 11).unwrap();
        for i in 0..200 {
            // replay the same stream to recover both leaf draws
            let mut rng = trial_rng(11, i);
            let a = 0.0 + (-rng.sample::<f64, _>(Open01).ln()) / 0.5;
            let b = 0.0 + (-rng.sample::<f64, _>(Open01).ln()) / 0.5;
            let t = sample_failure_time(&spec, i, &cfg);
            assert_eq!(t, a.min(b));
            assert!(t <= a && t <= b);
        }
    }

    #[test]
    fn zero_weight_branch_never_selected() {
        let comps = [
            ComponentParams::new("A", 1.0, 100.0),
            ComponentParams::new("B", 1.0, 0.0),
        ];
        let spec = SystemSpec::new(
            comps,
            SystemExpr::ProbChoice(vec![
                (0.0, SystemExpr::leaf("A")),
                (1.0, SystemExpr::leaf("B")),
            ]),
        )
        .unwrap();
        let cfg = SimulationConfig::new(5000, 9).unwrap();
        assert!(failure_times(&spec, &cfg).iter().all(|&t| t < 100.0));
    }

    #[test]
    fn installed_later_than_zero_survives_at_zero() {
        let spec = single(3.0, 0.5);
        let cfg = SimulationConfig::new(10_000, 2).unwrap();
        let e = estimate_survival(&spec, 0.0, &cfg);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn unit_exponential_survival_at_one() {
        let spec = single(1.0, 0.0);
        let cfg = SimulationConfig::new(100_000, 42).unwrap();
        let e = estimate_survival(&spec, 1.0, &cfg);
        let exact = (-1.0f64).exp();
        assert!((e.value - exact).abs() <= 3.0 * e.std_error, "{e:?}");
        assert!((e.std_error - 0.0015).abs() < 1e-4);
    }

    #[test]
    fn same_seed_same_bits_serial_or_parallel() {
        let spec = single(0.7, 1.0);
        let cfg = SimulationConfig::new(20_000, 77).unwrap();
        let a = estimate_mttf(&spec, &cfg);
        let b = estimate_mttf(&spec, &cfg.with_parallel(false));
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let c = estimate_mttf(&spec, &SimulationConfig::new(20_000, 78).unwrap());
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn survival_curve_non_increasing() {
        let spec = single(0.3, 0.0);
        let cfg = SimulationConfig::new(5_000, 5).unwrap();
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.5).collect();
        let est = estimate_survival_curve(&spec, &times, &cfg);
        assert!(est.windows(2).all(|w| w[1].value <= w[0].value));
    }
}
