//! Monte Carlo estimates of the drift and related rates.
//!
//! Every trial draws from its own ChaCha stream (the user seed selects the
//! key, the trial index selects the stream), and per-trial results are
//! reduced in trial order, so the output does not depend on how trials are
//! scheduled across threads.

mod walker;
mod word;

pub use walker::Walker;
pub use word::{Block, Move, Site, Word};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

pub const MIN_STEPS: usize = 1_000;
pub const MIN_TRIALS: usize = 2;
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
    /// Number of evenly spaced checkpoints for the prefix profile.
    pub checkpoints: usize,
}

impl SimulationConfig {
    pub fn new(steps: usize, trials: usize, seed: u64) -> Self {
        SimulationConfig {
            steps,
            trials,
            seed,
            threads: None,
            checkpoints: 20,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    /// Preconditions of the estimators: at least [`MIN_STEPS`] steps and
    /// [`MIN_TRIALS`] trials.
    pub fn check(&self) -> Result<()> {
        self.validate(MIN_STEPS, MIN_TRIALS)
    }

    fn validate(&self, min_steps: usize, min_trials: usize) -> Result<()> {
        if self.steps < min_steps {
            return Err(Error::InvalidSimulation(format!(
                "steps = {} is below {min_steps}",
                self.steps
            )));
        }
        if self.trials < min_trials {
            return Err(Error::InvalidSimulation(format!(
                "trials = {} is below {min_trials}",
                self.trials
            )));
        }
        if self.checkpoints == 0 {
            return Err(Error::InvalidSimulation("need at least one checkpoint".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidSimulation("threads must be positive".into()));
        }
        Ok(())
    }
}

/// Everything recorded along one trajectory of `steps` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub steps: usize,
    pub block_length: usize,
    pub partial_block_lengths: Vec<usize>,
    /// Partial block lengths at step `steps / 2`.
    pub partial_at_half: Vec<usize>,
    pub markovian_length: usize,
    /// Depth of the prefix that stays fixed over the second half of the run.
    pub stabilized_prefix_depth: usize,
    /// Blocks of each type within that stabilized prefix.
    pub type_counts: Vec<usize>,
    /// Stabilized depth at each checkpoint: the prefix of Z_n shared by all
    /// later Z_m within the horizon.
    pub profile: Vec<(usize, usize)>,
}

impl TrajectoryStats {
    pub fn type_frequencies(&self) -> Vec<f64> {
        let total: usize = self.type_counts.iter().sum();
        self.type_counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect()
    }
}

/// Run one trajectory from the root.
pub fn run_trajectory(
    walker: &Walker,
    steps: usize,
    checkpoints: usize,
    rng: &mut ChaCha8Rng,
) -> TrajectoryStats {
    let r = walker.factor_count();
    let mut word = Word::new();
    let mut markovian = 0usize;
    let mut partial = vec![0usize; r];
    let mut partial_at_half = partial.clone();
    // common[n]: shared prefix length of Z_n and Z_{n+1}
    let mut common = Vec::with_capacity(steps);
    for n in 0..steps {
        if n == steps / 2 {
            partial_at_half.clone_from(&partial);
        }
        let depth = word.len();
        let (factor, site) = walker.sample_move(&word, rng);
        if let Some(top) = word.top() {
            if top.factor == factor {
                markovian -= walker.block_distance(top);
            }
        }
        let mv = walker.apply(&mut word, factor, site);
        match mv {
            Move::Push => {
                partial[factor] += 1;
                common.push(depth)
            }
            Move::Pop => {
                partial[factor] -= 1;
                common.push(depth - 1)
            }
            Move::Replace => common.push(depth - 1),
        }
        if mv != Move::Pop {
            markovian += walker.block_distance(word.top().expect("nonempty after push"));
        }
    }

    // stable[n] = min(common[n..], l(Z_steps))
    let mut stable = vec![0usize; steps + 1];
    stable[steps] = word.len();
    for n in (0..steps).rev() {
        stable[n] = common[n].min(stable[n + 1]);
    }
    let profile = (1..=checkpoints)
        .map(|k| {
            let n = k * steps / checkpoints;
            (n, stable[n])
        })
        .collect();
    let depth = stable[steps / 2];
    let mut type_counts = vec![0; r];
    for b in &word.blocks()[..depth] {
        type_counts[b.factor] += 1;
    }

    TrajectoryStats {
        steps,
        block_length: word.len(),
        partial_block_lengths: partial,
        partial_at_half,
        markovian_length: markovian,
        stabilized_prefix_depth: depth,
        type_counts,
        profile,
    }
}

/// Random stream for trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Run `trials` independent trajectories; results come back in trial order.
pub fn run_trials(model: &ModelSpec, cfg: &SimulationConfig) -> Result<Vec<TrajectoryStats>> {
    cfg.validate(1, 1)?;
    let walker = Walker::new(model);
    let run = |t: usize| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        run_trajectory(&walker, cfg.steps, cfg.checkpoints.min(cfg.steps), &mut rng)
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidSimulation(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..cfg.trials).into_par_iter().map(run).collect()))
}

/// Sample mean with standard error and normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate::with_stderr(mean, (var / n).sqrt())
    }

    /// Ratio of means sum(y)/sum(x) with a delta-method standard error.
    pub fn ratio(ys: &[f64], xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let ratio = ys.iter().sum::<f64>() / sx;
        let ss: f64 = ys
            .iter()
            .zip(xs)
            .map(|(y, x)| (y - ratio * x).powi(2))
            .sum();
        let stderr = if xs.len() > 1 {
            (ss / (n * (n - 1.0))).sqrt() / (sx / n)
        } else {
            0.0
        };
        Estimate::with_stderr(ratio, stderr)
    }

    fn with_stderr(mean: f64, stderr: f64) -> Self {
        Estimate {
            mean,
            stderr,
            ci95: [mean - Z_95 * stderr, mean + Z_95 * stderr],
        }
    }

    /// |mean - value| measured in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.stderr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub step: usize,
    pub mean_depth: f64,
    pub stderr: f64,
}

/// Aggregated output of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    /// l(Z_n)/n
    pub drift: Estimate,
    /// l_i(Z_n)/n per factor.
    pub partial: Vec<Estimate>,
    /// Share of factor i in the block length, from the growth over the
    /// second half of each run: a ratio of means of l_i(Z_n) - l_i(Z_{n/2})
    /// and l(Z_n) - l(Z_{n/2}). Differencing removes the O(1/n) bias that
    /// the first few blocks put on l_i(Z_n)/l(Z_n).
    pub partial_share: Vec<Estimate>,
    /// |Z_n|/n for the Markovian length.
    pub markovian: Estimate,
    /// Type frequencies within the stabilized prefix.
    pub type_frequencies: Vec<Estimate>,
    pub profile: Vec<ProfilePoint>,
}

pub fn summarize(stats: &[TrajectoryStats], cfg: &SimulationConfig, r: usize) -> SimulationSummary {
    let n = cfg.steps as f64;
    let per_trial = |f: &dyn Fn(&TrajectoryStats) -> f64| stats.iter().map(f).collect::<Vec<_>>();
    let drift = Estimate::from_samples(&per_trial(&|s| s.block_length as f64 / n));
    let partial = (0..r)
        .map(|i| Estimate::from_samples(&per_trial(&|s| s.partial_block_lengths[i] as f64 / n)))
        .collect();
    let growth = |s: &TrajectoryStats, i: usize| s.partial_block_lengths[i] as f64 - s.partial_at_half[i] as f64;
    let total_growth = per_trial(&|s| (0..r).map(|i| growth(s, i)).sum());
    let partial_share = (0..r)
        .map(|i| Estimate::ratio(&per_trial(&|s| growth(s, i)), &total_growth))
        .collect();
    let markovian = Estimate::from_samples(&per_trial(&|s| s.markovian_length as f64 / n));
    let depths = per_trial(&|s| s.stabilized_prefix_depth as f64);
    let type_frequencies = (0..r)
        .map(|i| Estimate::ratio(&per_trial(&|s| s.type_counts[i] as f64), &depths))
        .collect();
    let points = stats.first().map_or(0, |s| s.profile.len());
    let profile = (0..points)
        .map(|k| {
            let e = Estimate::from_samples(&per_trial(&|s| s.profile[k].1 as f64));
            ProfilePoint {
                step: stats[0].profile[k].0,
                mean_depth: e.mean,
                stderr: e.stderr,
            }
        })
        .collect();
    SimulationSummary {
        steps: cfg.steps,
        trials: cfg.trials,
        seed: cfg.seed,
        drift,
        partial,
        partial_share,
        markovian,
        type_frequencies,
        profile,
    }
}

/// Full simulation: drift, partial and Markovian rates, prefix profile.
pub fn simulate(model: &ModelSpec, cfg: &SimulationConfig) -> Result<SimulationSummary> {
    cfg.check()?;
    let stats = run_trials(model, cfg)?;
    Ok(summarize(&stats, cfg, model.len()))
}

/// Mean of l(Z_n)/n over trials.
pub fn estimate_drift(model: &ModelSpec, cfg: &SimulationConfig) -> Result<Estimate> {
    Ok(simulate(model, cfg)?.drift)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialAndMarkovian {
    pub partial: Vec<Estimate>,
    pub partial_share: Vec<Estimate>,
    pub markovian: Estimate,
}

pub fn estimate_partial_and_markovian(
    model: &ModelSpec,
    cfg: &SimulationConfig,
) -> Result<PartialAndMarkovian> {
    let s = simulate(model, cfg)?;
    Ok(PartialAndMarkovian {
        partial: s.partial,
        partial_share: s.partial_share,
        markovian: s.markovian,
    })
}

/// Mean stabilized prefix depth at evenly spaced checkpoints. Short runs are
/// allowed here; the profile is just noisier.
pub fn prefix_stabilization_profile(
    model: &ModelSpec,
    cfg: &SimulationConfig,
) -> Result<Vec<ProfilePoint>> {
    cfg.validate(1, 1)?;
    let stats = run_trials(model, cfg)?;
    Ok(summarize(&stats, cfg, model.len()).profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn invalid_parameters() {
        let model = catalog::flip_tree(3);
        let err = simulate(&model, &SimulationConfig::new(999, 10, 1)).unwrap_err();
        assert!(matches!(err, Error::InvalidSimulation(_)));
        let err = simulate(&model, &SimulationConfig::new(1000, 1, 1)).unwrap_err();
        assert!(matches!(err, Error::InvalidSimulation(_)));
    }

    #[test]
    fn trajectory_bookkeeping() {
        let model = catalog::non_cayley_model();
        let walker = Walker::new(&model);
        let mut rng = trial_rng(11, 0);
        let s = run_trajectory(&walker, 3000, 10, &mut rng);
        assert_eq!(s.block_length, s.partial_block_lengths.iter().sum::<usize>());
        assert_eq!(s.partial_block_lengths, w_partial(&walker, 11, 3000));
        assert!(s.stabilized_prefix_depth <= s.block_length);
        assert_eq!(s.type_counts.iter().sum::<usize>(), s.stabilized_prefix_depth);
        assert_eq!(s.profile.last().unwrap(), &(3000, s.block_length));
        // Markovian length tracked incrementally equals a recount.
        let mut rng = trial_rng(11, 0);
        let mut w = Word::new();
        for _ in 0..3000 {
            walker.step(&mut w, &mut rng);
        }
        assert_eq!(walker.markovian_length(&w), s.markovian_length);
        assert_eq!(w.len(), s.block_length);
    }

    fn w_partial(walker: &Walker, seed: u64, steps: usize) -> Vec<usize> {
        let mut rng = trial_rng(seed, 0);
        let mut w = Word::new();
        for _ in 0..steps {
            walker.step(&mut w, &mut rng);
        }
        w.partial_lengths(walker.factor_count())
    }

    #[test]
    fn profile_is_monotone_per_trajectory() {
        let model = catalog::flip_tree(3);
        let walker = Walker::new(&model);
        let s = run_trajectory(&walker, 100, 100, &mut trial_rng(5, 2));
        for w in s.profile.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
    }

    #[test]
    fn ratio_estimate_of_proportional_data_is_exact() {
        let e = Estimate::ratio(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert_eq!(e.mean, 0.5);
        assert_eq!(e.stderr, 0.0);
    }
}
