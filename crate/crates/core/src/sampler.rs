//! Cycle-by-cycle backtracking sampler.
//!
//! For every sequence length `cc` in `min_cycles..=eta` a fresh batch of
//! input logits is trained for `iters` plain gradient-descent steps against
//! the output constraint at cycle `cc`. After every step each candidate is
//! rounded to bits, replayed on the exact simulator from the all-zero state,
//! and kept if the constrained outputs at cycle `cc` match.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{simulate_row, BitMatrix, SequentialCircuit};
use crate::constraint::OutputConstraint;
use crate::relaxed::{backward_bptt, forward_from_vars, sigmoid, BatchedVars, EngineError};

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("gradient contains NaN or infinity")]
    NonFiniteGradient,
    #[error("sampling interrupted after {} unique solutions", .partial.unique())]
    Interrupted { partial: Box<SolutionSet> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Largest sequence length tried.
    pub eta: usize,
    /// Gradient steps per sequence length.
    pub iters: usize,
    pub lr: f64,
    pub batch: usize,
    /// `sigmoid(v) >= threshold` rounds to 1.
    pub threshold: f64,
    pub seed: u64,
    /// Logits start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Standard deviation of Gaussian noise added to each gradient.
    pub noise_std: Option<f64>,
    /// Logits are multiplied by `1 - decay` before each step.
    pub decay: Option<f64>,
    pub min_cycles: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            eta: 50,
            iters: 5,
            lr: 50.0,
            batch: 1000,
            threshold: 0.5,
            seed: 0,
            init_scale: 2.0,
            noise_std: None,
            decay: None,
            min_cycles: 1,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SampleError> {
        let bad = |msg: &str| Err(SampleError::InvalidConfig(msg.to_string()));
        if self.min_cycles < 1 {
            return bad("min_cycles must be at least 1");
        }
        if self.eta < self.min_cycles {
            return bad("eta must be at least min_cycles");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch < 1 {
            return bad("batch must be at least 1");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold must lie strictly between 0 and 1");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be a finite non-negative number");
        }
        if let Some(s) = self.noise_std {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("noise_std must be a finite non-negative number");
            }
        }
        if let Some(d) = self.decay {
            if !(0.0..1.0).contains(&d) {
                return bad("decay must lie in [0, 1)");
            }
        }
        Ok(())
    }
}

/// A validated input sequence: `bits` is `cycles x n`, one row per cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub cycles: usize,
    pub bits: BitMatrix,
    /// 1-based training iteration that first produced this sequence.
    pub first_found_iter: usize,
    /// Sequence length being trained when the solution was found.
    pub horizon: usize,
}

impl Solution {
    pub fn cycle_strings(&self) -> Vec<String> {
        (0..self.bits.rows()).map(|t| self.bits.row_string(t)).collect()
    }
}

/// Deduplicated solutions in insertion order, keyed by `(cycles, bits)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolutionSet {
    solutions: Vec<Solution>,
    seen: HashSet<(usize, BitMatrix)>,
    per_cycle: BTreeMap<usize, usize>,
    /// Candidates rounded and replayed on the simulator.
    pub attempts: u64,
    /// Candidates the simulator accepted, duplicates included.
    pub valid: u64,
    pub wall_time: Duration,
}

impl SolutionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unique(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn solutions(&self) -> &[Solution] {
        &self.solutions
    }

    pub fn bucket(&self, cycles: usize) -> impl Iterator<Item = &Solution> {
        self.solutions.iter().filter(move |s| s.cycles == cycles)
    }

    /// Unique solution count for every sequence length that has any.
    pub fn per_cycle_counts(&self) -> &BTreeMap<usize, usize> {
        &self.per_cycle
    }

    pub fn record_attempts(&mut self, n: u64) {
        self.attempts += n;
    }

    /// Add validated solutions. Returns how many were new.
    pub fn merge(&mut self, sols: impl IntoIterator<Item = Solution>) -> usize {
        let mut added = 0;
        for sol in sols {
            self.valid += 1;
            if self.seen.insert((sol.cycles, sol.bits.clone())) {
                *self.per_cycle.entry(sol.cycles).or_default() += 1;
                self.solutions.push(sol);
                added += 1;
            }
        }
        added
    }

    /// `out[j - 1]` is the number of unique solutions first found at or
    /// before iteration `j`.
    pub fn cumulative_by_iteration(&self, iters: usize) -> Vec<usize> {
        let mut counts = vec![0usize; iters];
        for s in &self.solutions {
            if (1..=iters).contains(&s.first_found_iter) {
                counts[s.first_found_iter - 1] += 1;
            }
        }
        let mut total = 0;
        counts
            .into_iter()
            .map(|c| {
                total += c;
                total
            })
            .collect()
    }

    pub fn throughput(&self) -> f64 {
        let secs = self.wall_time.as_secs_f64();
        if secs > 0.0 {
            self.unique() as f64 / secs
        } else {
            0.0
        }
    }
}

pub fn dedup_merge(mut set: SolutionSet, sols: Vec<Solution>) -> SolutionSet {
    set.merge(sols);
    set
}

/// Additive Gaussian gradient noise.
pub struct GradientNoise {
    dist: Normal<f64>,
    rng: ChaCha8Rng,
}

impl GradientNoise {
    pub fn new(std: f64, rng: ChaCha8Rng) -> Result<Self, SampleError> {
        let dist = Normal::new(0.0, std).map_err(|e| SampleError::InvalidConfig(e.to_string()))?;
        Ok(GradientNoise { dist, rng })
    }
}

/// `vars -= lr * (grads + noise)`.
pub fn gd_step(
    vars: &mut BatchedVars,
    grads: &BatchedVars,
    lr: f64,
    noise: Option<&mut GradientNoise>,
) -> Result<(), SampleError> {
    if !vars.same_shape(grads) {
        return Err(EngineError::DimensionMismatch("gradient shape differs from variables".into()).into());
    }
    if lr.is_nan() || lr <= 0.0 {
        return Err(SampleError::InvalidConfig("learning rate must be positive".into()));
    }
    if !grads.is_finite() {
        return Err(SampleError::NonFiniteGradient);
    }
    match noise {
        Some(noise) => {
            for (v, &g) in vars.as_mut_slice().iter_mut().zip(grads.as_slice()) {
                *v -= lr * (g + noise.dist.sample(&mut noise.rng));
            }
        }
        None => {
            for (v, &g) in vars.as_mut_slice().iter_mut().zip(grads.as_slice()) {
                *v -= lr * g;
            }
        }
    }
    Ok(())
}

/// Round each candidate to bits and keep the ones whose replay from the
/// all-zero state meets the constraint at cycle `cc`. Returned solutions
/// are in row order and may repeat.
pub fn extract_solutions(
    vars: &BatchedVars,
    c: &SequentialCircuit,
    cons: &OutputConstraint,
    cc: usize,
    threshold: f64,
    iteration: usize,
) -> Vec<Solution> {
    assert_eq!(vars.horizon(), cc, "variables must span exactly cc cycles");
    let n = vars.width();
    let zero_state = vec![false; c.num_states()];
    (0..vars.batch())
        .into_par_iter()
        .with_min_len(16)
        .filter_map(|row| {
            let bits: Vec<bool> = vars.row(row).iter().map(|&v| sigmoid(v) >= threshold).collect();
            let stimulus: Vec<&[bool]> = bits.chunks(n.max(1)).take(cc).collect();
            let (outputs, _) = simulate_row(c, &stimulus, &zero_state);
            cons.satisfied_by(row, &outputs).then(|| Solution {
                cycles: cc,
                bits: BitMatrix::from_vec(cc, n, bits).expect("shape follows vars"),
                first_found_iter: iteration,
                horizon: cc,
            })
        })
        .collect()
}

/// Conditions under which a run stops early.
#[derive(Debug, Default, Clone, Copy)]
pub struct StopCondition<'a> {
    pub deadline: Option<Instant>,
    pub target_unique: Option<usize>,
    pub flag: Option<&'a AtomicBool>,
}

impl StopCondition<'_> {
    pub fn never() -> Self {
        StopCondition::default()
    }

    fn reached(&self, set: &SolutionSet) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
            || self.target_unique.is_some_and(|t| set.unique() >= t)
            || self.flag.is_some_and(|f| f.load(Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Stopped,
}

const NOISE_STREAM_OFFSET: u64 = 1 << 32;

fn horizon_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fresh logits for sequence length `cc`. Each length draws from its own
/// stream so lengths never share randomness.
pub fn init_vars(cfg: &SamplerConfig, cc: usize, width: usize) -> BatchedVars {
    let mut rng = horizon_rng(cfg.seed, cc as u64);
    let mut vars = BatchedVars::zeros(cfg.batch, cc, width);
    let s = cfg.init_scale;
    for v in vars.as_mut_slice() {
        *v = if s > 0.0 { rng.gen_range(-s..=s) } else { 0.0 };
    }
    vars
}

/// Train and harvest a single sequence length into `set`.
pub fn sample_horizon(
    c: &SequentialCircuit,
    cons: &OutputConstraint,
    cfg: &SamplerConfig,
    cc: usize,
    set: &mut SolutionSet,
    stop: &StopCondition<'_>,
) -> Result<RunStatus, SampleError> {
    let mut vars = init_vars(cfg, cc, c.num_inputs());
    let mut noise = match cfg.noise_std {
        Some(std) if std > 0.0 => Some(GradientNoise::new(
            std,
            horizon_rng(cfg.seed, NOISE_STREAM_OFFSET + cc as u64),
        )?),
        _ => None,
    };
    for iteration in 1..=cfg.iters {
        if stop.reached(set) {
            return Ok(RunStatus::Stopped);
        }
        let trace = forward_from_vars(c, &vars, None)?;
        let grads = backward_bptt(c, &trace, cons, &vars, cc)?;
        if let Some(decay) = cfg.decay {
            vars.as_mut_slice().iter_mut().for_each(|v| *v *= 1.0 - decay);
        }
        gd_step(&mut vars, &grads, cfg.lr, noise.as_mut())?;
        let sols = extract_solutions(&vars, c, cons, cc, cfg.threshold, iteration);
        set.record_attempts(cfg.batch as u64);
        set.merge(sols);
    }
    Ok(RunStatus::Completed)
}

/// Run every sequence length in `min_cycles..=eta`, merging into `set`.
/// Wall time spent here is added to `set.wall_time`.
pub fn sample_into(
    c: &SequentialCircuit,
    cons: &OutputConstraint,
    cfg: &SamplerConfig,
    set: &mut SolutionSet,
    stop: &StopCondition<'_>,
) -> Result<RunStatus, SampleError> {
    cfg.validate()?;
    if cons.num_outputs() != c.num_outputs() || !cons.fits_batch(cfg.batch) {
        return Err(EngineError::DimensionMismatch("constraint does not fit circuit and batch".into()).into());
    }
    let start = Instant::now();
    let mut status = RunStatus::Completed;
    for cc in cfg.min_cycles..=cfg.eta {
        match sample_horizon(c, cons, cfg, cc, set, stop) {
            Ok(RunStatus::Completed) => {}
            Ok(RunStatus::Stopped) => {
                status = RunStatus::Stopped;
                break;
            }
            Err(e) => {
                set.wall_time += start.elapsed();
                return Err(e);
            }
        }
    }
    set.wall_time += start.elapsed();
    Ok(status)
}

pub fn run_backtracking(
    c: &SequentialCircuit,
    cons: &OutputConstraint,
    cfg: &SamplerConfig,
) -> Result<SolutionSet, SampleError> {
    run_backtracking_until(c, cons, cfg, &StopCondition::never())
}

/// Like [`run_backtracking`], but a triggered stop condition yields
/// `Interrupted` carrying everything found so far.
pub fn run_backtracking_until(
    c: &SequentialCircuit,
    cons: &OutputConstraint,
    cfg: &SamplerConfig,
    stop: &StopCondition<'_>,
) -> Result<SolutionSet, SampleError> {
    let mut set = SolutionSet::new();
    match sample_into(c, cons, cfg, &mut set, stop)? {
        RunStatus::Completed => Ok(set),
        RunStatus::Stopped => Err(SampleError::Interrupted { partial: Box::new(set) }),
    }
}
