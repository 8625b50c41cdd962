//! Differentiable evaluation of a sequential circuit and reverse-mode
//! gradients through time.
//!
//! Each clock cycle reads input probabilities `P_t` and register
//! probabilities `H_t`, produces the relaxed outputs, and latches `H_{t+1}`
//! from the flip-flop inputs. The loss is the squared distance between the
//! masked outputs at one chosen cycle and the target valuation. The backward
//! sweep walks cycles in reverse, seeding output adjoints at the loss cycle
//! and carrying register adjoints from `H_{t+1}` into cycle `t`.
//!
//! Batch rows never interact, so every kernel here runs row by row and rows
//! are spread over the rayon pool. Splitting the batch differently cannot
//! change any value.

mod gates;
mod tensor;

use rayon::prelude::*;
use thiserror::Error;

use crate::bench::GateKind;
use crate::circuit::SequentialCircuit;
use crate::constraint::OutputConstraint;

pub use gates::{gate_grad, gate_prob, DOMAIN_SLACK};
pub use tensor::{sigmoid, sigmoid_embed, BatchedVars, ProbTensor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("non-finite input variable")]
    NonFiniteInput,
    #[error("{gate} gate cannot take {arity} inputs")]
    ArityError { gate: GateKind, arity: usize },
    #[error("probability {0} is outside [0, 1]")]
    DomainError(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("trace does not match: {0}")]
    TraceMismatch(String),
}

/// Minimum rows per rayon task.
const ROWS_PER_TASK: usize = 8;

/// Stored activations of a relaxed forward pass: every signal, every cycle,
/// every batch row, laid out `[row][cycle][signal]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    batch: usize,
    horizon: usize,
    signals: usize,
    values: Vec<f64>,
    h0: ProbTensor,
    output_signals: Vec<usize>,
    state_signals: Vec<usize>,
    next_state_signals: Vec<usize>,
}

impl Trace {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_signals(&self) -> usize {
        self.signals
    }

    /// Activation of `signal` in `row` during cycle `t` (0-based).
    #[inline]
    pub fn value(&self, row: usize, t: usize, signal: usize) -> f64 {
        self.values[(row * self.horizon + t) * self.signals + signal]
    }

    fn row(&self, row: usize) -> &[f64] {
        let len = self.horizon * self.signals;
        &self.values[row * len..(row + 1) * len]
    }

    /// Relaxed outputs `Y_hat` of cycle `t` (0-based).
    pub fn outputs(&self, t: usize) -> ProbTensor {
        self.gather(t, &self.output_signals)
    }

    /// Register contents at the start of cycle `t`, for `t` in
    /// `0..=horizon`. `state(horizon)` is the state latched by the last cycle.
    pub fn state(&self, t: usize) -> ProbTensor {
        if t == 0 {
            self.h0.clone()
        } else {
            self.gather(t - 1, &self.next_state_signals)
        }
    }

    fn gather(&self, t: usize, sigs: &[usize]) -> ProbTensor {
        assert!(t < self.horizon, "cycle {t} outside horizon {}", self.horizon);
        let mut data = Vec::with_capacity(self.batch * sigs.len());
        for r in 0..self.batch {
            data.extend(sigs.iter().map(|&s| self.value(r, t, s)));
        }
        ProbTensor::from_raw(self.batch, sigs.len(), data)
    }

    fn check_circuit(&self, c: &SequentialCircuit) -> Result<(), EngineError> {
        if self.signals != c.num_signals() || self.state_signals != c.state_signals() {
            return Err(EngineError::TraceMismatch(
                "trace was produced by another circuit".into(),
            ));
        }
        Ok(())
    }
}

/// Evaluate one candidate over all cycles. `input(t, i)` supplies the
/// probability of primary input `i` in cycle `t`.
fn forward_row(
    c: &SequentialCircuit,
    horizon: usize,
    input: impl Fn(usize, usize) -> f64,
    h0: &[f64],
    vals: &mut [f64],
    scratch: &mut Vec<f64>,
) -> Result<(), EngineError> {
    let s = c.num_signals();
    for t in 0..horizon {
        let (prev, cur) = vals.split_at_mut(t * s);
        let cur = &mut cur[..s];
        for (i, &sig) in c.input_signals().iter().enumerate() {
            cur[sig] = input(t, i);
        }
        if t == 0 {
            for (&sig, &h) in c.state_signals().iter().zip(h0) {
                cur[sig] = h;
            }
        } else {
            let last = &prev[(t - 1) * s..];
            for (&q, &d) in c.state_signals().iter().zip(c.next_state_signals()) {
                cur[q] = last[d];
            }
        }
        for gate in c.schedule() {
            scratch.clear();
            scratch.extend(gate.fanin.iter().map(|&f| cur[f]));
            cur[gate.output] = gates::snap_unit(gates::prob(gate.kind, scratch))?;
        }
    }
    Ok(())
}

fn check_h0(c: &SequentialCircuit, batch: usize, h0: &ProbTensor) -> Result<(), EngineError> {
    if h0.rows() != batch || h0.cols() != c.num_states() {
        return Err(EngineError::DimensionMismatch(format!(
            "initial state is {}x{}, expected {batch}x{}",
            h0.rows(),
            h0.cols(),
            c.num_states()
        )));
    }
    Ok(())
}

fn run_forward(
    c: &SequentialCircuit,
    batch: usize,
    horizon: usize,
    h0: ProbTensor,
    input: impl Fn(usize, usize, usize) -> f64 + Sync,
) -> Result<Trace, EngineError> {
    let len = horizon * c.num_signals();
    let mut values = vec![0.0; batch * len];
    if len > 0 {
        values
            .par_chunks_mut(len)
            .with_min_len(ROWS_PER_TASK)
            .enumerate()
            .try_for_each_init(Vec::new, |scratch, (row, chunk)| {
                forward_row(c, horizon, |t, i| input(row, t, i), h0.row(row), chunk, scratch)
            })?;
    }
    Ok(Trace {
        batch,
        horizon,
        signals: c.num_signals(),
        values,
        h0,
        output_signals: c.output_signals().to_vec(),
        state_signals: c.state_signals().to_vec(),
        next_state_signals: c.next_state_signals().to_vec(),
    })
}

/// Relaxed forward pass over `probs.len()` cycles from register contents
/// `h0`.
pub fn forward_relaxed(c: &SequentialCircuit, probs: &[ProbTensor], h0: &ProbTensor) -> Result<Trace, EngineError> {
    let batch = h0.rows();
    check_h0(c, batch, h0)?;
    for (t, p) in probs.iter().enumerate() {
        if p.rows() != batch || p.cols() != c.num_inputs() {
            return Err(EngineError::DimensionMismatch(format!(
                "inputs at cycle {t} are {}x{}, expected {batch}x{}",
                p.rows(),
                p.cols(),
                c.num_inputs()
            )));
        }
    }
    run_forward(c, batch, probs.len(), h0.clone(), |row, t, i| probs[t].get(row, i))
}

/// Forward pass with the sigmoid embedding fused in: inputs are
/// `sigmoid(vars)`. `h0` defaults to all-zero registers.
pub fn forward_from_vars(
    c: &SequentialCircuit,
    vars: &BatchedVars,
    h0: Option<&ProbTensor>,
) -> Result<Trace, EngineError> {
    if vars.width() != c.num_inputs() {
        return Err(EngineError::DimensionMismatch(format!(
            "variables have width {}, circuit has {} inputs",
            vars.width(),
            c.num_inputs()
        )));
    }
    if !vars.is_finite() {
        return Err(EngineError::NonFiniteInput);
    }
    let h0 = match h0 {
        Some(h) => {
            check_h0(c, vars.batch(), h)?;
            h.clone()
        }
        None => ProbTensor::zeros(vars.batch(), c.num_states()),
    };
    run_forward(c, vars.batch(), vars.horizon(), h0, |row, t, i| {
        sigmoid(vars.get(row, t, i))
    })
}

fn check_constraint(c_outputs: usize, batch: usize, cons: &OutputConstraint) -> Result<(), EngineError> {
    if cons.num_outputs() != c_outputs {
        return Err(EngineError::DimensionMismatch(format!(
            "constraint covers {} outputs, circuit has {c_outputs}",
            cons.num_outputs()
        )));
    }
    if !cons.fits_batch(batch) {
        return Err(EngineError::DimensionMismatch(format!(
            "constraint has {} target rows for a batch of {batch}",
            cons.target().rows()
        )));
    }
    Ok(())
}

fn check_cycle(trace: &Trace, cycle: usize) -> Result<(), EngineError> {
    if cycle == 0 || cycle > trace.horizon {
        return Err(EngineError::DimensionMismatch(format!(
            "loss cycle {cycle} outside 1..={}",
            trace.horizon
        )));
    }
    Ok(())
}

/// Sum of squared errors between the masked outputs of cycle `cycle`
/// (1-based) and the target. Returns the total and each row's share.
pub fn loss(trace: &Trace, cons: &OutputConstraint, cycle: usize) -> Result<(f64, Vec<f64>), EngineError> {
    check_cycle(trace, cycle)?;
    check_constraint(trace.output_signals.len(), trace.batch, cons)?;
    let per_row: Vec<f64> = (0..trace.batch)
        .map(|r| {
            cons.constrained(r)
                .map(|(j, y)| {
                    let diff = f64::from(u8::from(y)) - trace.value(r, cycle - 1, trace.output_signals[j]);
                    diff * diff
                })
                .sum()
        })
        .collect();
    Ok((per_row.iter().sum(), per_row))
}

struct BackwardCtx<'a> {
    c: &'a SequentialCircuit,
    cons: &'a OutputConstraint,
    cycle: usize,
    horizon: usize,
}

fn backward_row(
    ctx: &BackwardCtx<'_>,
    row: usize,
    acts: &[f64],
    grad: &mut [f64],
    adj: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
    local: &mut Vec<f64>,
) {
    let c = ctx.c;
    let s = c.num_signals();
    let n = c.num_inputs();
    grad.fill(0.0);
    let mut state_adj = vec![0.0; c.num_states()];
    adj.resize(s, 0.0);

    for t in (0..ctx.cycle).rev() {
        let vals = &acts[t * s..(t + 1) * s];
        adj.fill(0.0);
        if t + 1 == ctx.cycle {
            for (j, y) in ctx.cons.constrained(row) {
                let sig = c.output_signals()[j];
                adj[sig] += 2.0 * (vals[sig] - f64::from(u8::from(y)));
            }
        }
        for (&d, &a) in c.next_state_signals().iter().zip(&state_adj) {
            adj[d] += a;
        }
        for gate in c.schedule().iter().rev() {
            let a = adj[gate.output];
            if a == 0.0 {
                continue;
            }
            scratch.clear();
            scratch.extend(gate.fanin.iter().map(|&f| vals[f]));
            local.resize(scratch.len(), 0.0);
            gates::grad_into(gate.kind, scratch, local);
            for (&f, &g) in gate.fanin.iter().zip(local.iter()) {
                adj[f] += a * g;
            }
        }
        let g_row = &mut grad[t * n..(t + 1) * n];
        for (g, &sig) in g_row.iter_mut().zip(c.input_signals()) {
            let p = vals[sig];
            *g = adj[sig] * p * (1.0 - p);
        }
        for (sa, &q) in state_adj.iter_mut().zip(c.state_signals()) {
            *sa = adj[q];
        }
    }
}

/// Gradient of the loss at cycle `cycle` (1-based) with respect to every
/// input logit. Cycles after `cycle` get exactly zero.
pub fn backward_bptt(
    c: &SequentialCircuit,
    trace: &Trace,
    cons: &OutputConstraint,
    vars: &BatchedVars,
    cycle: usize,
) -> Result<BatchedVars, EngineError> {
    trace.check_circuit(c)?;
    if vars.batch() != trace.batch || vars.horizon() != trace.horizon || vars.width() != c.num_inputs() {
        return Err(EngineError::TraceMismatch(format!(
            "variables are {}x{}x{}, trace is {}x{}x{}",
            vars.batch(),
            vars.horizon(),
            vars.width(),
            trace.batch,
            trace.horizon,
            c.num_inputs()
        )));
    }
    check_cycle(trace, cycle)?;
    check_constraint(c.num_outputs(), trace.batch, cons)?;

    let ctx = BackwardCtx {
        c,
        cons,
        cycle,
        horizon: trace.horizon,
    };
    let mut grads = BatchedVars::zeros(vars.batch(), vars.horizon(), vars.width());
    let len = ctx.horizon * c.num_inputs();
    if len > 0 {
        grads
            .as_mut_slice()
            .par_chunks_mut(len)
            .with_min_len(ROWS_PER_TASK)
            .enumerate()
            .for_each_init(
                || (Vec::new(), Vec::new(), Vec::new()),
                |(adj, scratch, local), (row, g)| backward_row(&ctx, row, trace.row(row), g, adj, scratch, local),
            );
    }
    Ok(grads)
}
