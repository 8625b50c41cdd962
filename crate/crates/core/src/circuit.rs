//! Evaluation-ready sequential circuits and the exact two-valued simulator.

use std::sync::Arc;

use thiserror::Error;

use crate::bench::{Driver, GateKind, Netlist, SignalId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("combinational cycle through {}", .0.join(" -> "))]
    CombinationalCycle(Vec<String>),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A gate with fan-in resolved to dense signal indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledGate {
    pub output: usize,
    pub kind: GateKind,
    pub fanin: Vec<usize>,
}

/// Netlist plus a topological schedule of its combinational core.
///
/// Flip-flop outputs act as sources of the core and flip-flop inputs as
/// sinks, so the slice of the schedule feeding `dff.d` realizes the state
/// function and the slice feeding the primary outputs realizes the output
/// function.
#[derive(Debug, Clone)]
pub struct SequentialCircuit {
    netlist: Arc<Netlist>,
    topo_order: Vec<usize>,
    schedule: Vec<CompiledGate>,
    input_signals: Vec<usize>,
    output_signals: Vec<usize>,
    state_signals: Vec<usize>,
    next_state_signals: Vec<usize>,
    depth: usize,
}

impl SequentialCircuit {
    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn num_inputs(&self) -> usize {
        self.input_signals.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_signals.len()
    }

    pub fn num_states(&self) -> usize {
        self.state_signals.len()
    }

    pub fn num_signals(&self) -> usize {
        self.netlist.signal_count()
    }

    /// Gate indices (into `netlist().gates`) in evaluation order.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Gates in evaluation order with dense fan-in indices.
    pub fn schedule(&self) -> &[CompiledGate] {
        &self.schedule
    }

    pub fn input_signals(&self) -> &[usize] {
        &self.input_signals
    }

    pub fn output_signals(&self) -> &[usize] {
        &self.output_signals
    }

    /// Flip-flop outputs (`q`), one per state bit.
    pub fn state_signals(&self) -> &[usize] {
        &self.state_signals
    }

    /// Flip-flop inputs (`d`), one per state bit.
    pub fn next_state_signals(&self) -> &[usize] {
        &self.next_state_signals
    }

    /// Longest gate path through the combinational core.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.netlist.signal(name).map(SignalId::index)
    }
}

pub fn build_circuit(nl: Netlist) -> Result<SequentialCircuit, CircuitError> {
    build_circuit_shared(Arc::new(nl))
}

pub fn build_circuit_shared(nl: Arc<Netlist>) -> Result<SequentialCircuit, CircuitError> {
    let gate_count = nl.gates.len();

    // Kahn's algorithm over gate -> gate edges. Inputs and DFF outputs are
    // sources and never block a gate.
    let mut pending = vec![0usize; gate_count];
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); gate_count];
    for (g, gate) in nl.gates.iter().enumerate() {
        for &f in &gate.fanin {
            if let Driver::Gate(src) = nl.driver(f) {
                pending[g] += 1;
                consumers[src].push(g);
            }
        }
    }
    let mut ready: Vec<usize> = (0..gate_count).filter(|&g| pending[g] == 0).collect();
    ready.reverse();
    let mut order = Vec::with_capacity(gate_count);
    let mut level = vec![1usize; gate_count];
    while let Some(g) = ready.pop() {
        order.push(g);
        for &c in &consumers[g] {
            level[c] = level[c].max(level[g] + 1);
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() != gate_count {
        return Err(CircuitError::CombinationalCycle(find_cycle(&nl, &pending)));
    }

    let schedule = order
        .iter()
        .map(|&g| {
            let gate = &nl.gates[g];
            CompiledGate {
                output: gate.output.index(),
                kind: gate.kind,
                fanin: gate.fanin.iter().map(|s| s.index()).collect(),
            }
        })
        .collect();

    Ok(SequentialCircuit {
        topo_order: order,
        schedule,
        input_signals: nl.inputs.iter().map(|s| s.index()).collect(),
        output_signals: nl.outputs.iter().map(|s| s.index()).collect(),
        state_signals: nl.dffs.iter().map(|d| d.q.index()).collect(),
        next_state_signals: nl.dffs.iter().map(|d| d.d.index()).collect(),
        depth: level.into_iter().max().unwrap_or(0),
        netlist: nl,
    })
}

/// Walk back through unscheduled gates until a signal repeats.
fn find_cycle(nl: &Netlist, pending: &[usize]) -> Vec<String> {
    let start = pending
        .iter()
        .position(|&p| p > 0)
        .expect("cycle implies a blocked gate");
    let mut path: Vec<usize> = vec![start];
    let mut current = start;
    loop {
        let next = nl.gates[current]
            .fanin
            .iter()
            .find_map(|&f| match nl.driver(f) {
                Driver::Gate(src) if pending[src] > 0 => Some(src),
                _ => None,
            })
            .expect("blocked gate has a blocked predecessor");
        if let Some(pos) = path.iter().position(|&g| g == next) {
            // `path` runs against signal flow.
            return path[pos..]
                .iter()
                .rev()
                .map(|&g| nl.signal_name(nl.gates[g].output).to_string())
                .collect();
        }
        path.push(next);
        current = next;
    }
}

/// Row-major matrix of bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self, CircuitError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CircuitError::DimensionMismatch("ragged rows".into()));
        }
        Ok(BitMatrix {
            rows: rows.len(),
            cols,
            bits: rows.concat(),
        })
    }

    pub fn from_vec(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self, CircuitError> {
        if bits.len() != rows * cols {
            return Err(CircuitError::DimensionMismatch(format!(
                "{} bits for a {rows}x{cols} matrix",
                bits.len()
            )));
        }
        Ok(BitMatrix { rows, cols, bits })
    }

    /// Parse one `0`/`1` string per row.
    pub fn from_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self, CircuitError> {
        let parsed = rows
            .iter()
            .map(|r| parse_bits(r.as_ref()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| CircuitError::DimensionMismatch("expected only '0' and '1'".into()))?;
        BitMatrix::from_rows(&parsed)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.bits[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [bool] {
        &mut self.bits[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn row_string(&self, r: usize) -> String {
        bits_to_string(self.row(r))
    }
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

/// Result of a discrete run: `outputs[t]` is sampled during cycle `t`
/// before the state update, `states[t]` is the register contents at the
/// start of cycle `t` (so `states` has one more entry than `outputs`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteTrace {
    pub outputs: Vec<BitMatrix>,
    pub states: Vec<BitMatrix>,
}

/// Evaluate one cycle of the combinational core for a single row. `values`
/// must have one slot per signal; inputs and state slots are written here.
pub(crate) fn eval_cycle_bool(c: &SequentialCircuit, inputs: &[bool], state: &[bool], values: &mut [bool]) {
    for (&sig, &v) in c.input_signals.iter().zip(inputs) {
        values[sig] = v;
    }
    for (&sig, &v) in c.state_signals.iter().zip(state) {
        values[sig] = v;
    }
    for gate in &c.schedule {
        values[gate.output] = gate.kind.eval(gate.fanin.iter().map(|&f| values[f]));
    }
}

/// Run one row of a stimulus from `state0`, returning the outputs of the
/// last cycle and the final register contents.
pub fn simulate_row(c: &SequentialCircuit, stimulus: &[&[bool]], state0: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let mut values = vec![false; c.num_signals()];
    let mut state = state0.to_vec();
    let mut outputs = vec![false; c.num_outputs()];
    for inputs in stimulus {
        eval_cycle_bool(c, inputs, &state, &mut values);
        for (o, &sig) in outputs.iter_mut().zip(&c.output_signals) {
            *o = values[sig];
        }
        for (s, &sig) in state.iter_mut().zip(&c.next_state_signals) {
            *s = values[sig];
        }
    }
    (outputs, state)
}

pub fn simulate_discrete(
    c: &SequentialCircuit,
    inputs: &[BitMatrix],
    h0: &BitMatrix,
) -> Result<DiscreteTrace, CircuitError> {
    let (n, m, r) = (c.num_inputs(), c.num_outputs(), c.num_states());
    let b = h0.rows();
    if h0.cols() != r {
        return Err(CircuitError::DimensionMismatch(format!(
            "initial state has {} columns, circuit has {r} flip-flops",
            h0.cols()
        )));
    }
    for (t, p) in inputs.iter().enumerate() {
        if p.rows() != b || p.cols() != n {
            return Err(CircuitError::DimensionMismatch(format!(
                "inputs at cycle {t} are {}x{}, expected {b}x{n}",
                p.rows(),
                p.cols()
            )));
        }
    }

    let mut outputs = vec![BitMatrix::zeros(b, m); inputs.len()];
    let mut states = vec![BitMatrix::zeros(b, r); inputs.len() + 1];
    states[0] = h0.clone();
    let mut values = vec![false; c.num_signals()];
    for row in 0..b {
        for (t, p) in inputs.iter().enumerate() {
            let (before, after) = states.split_at_mut(t + 1);
            eval_cycle_bool(c, p.row(row), before[t].row(row), &mut values);
            for (o, &sig) in outputs[t].row_mut(row).iter_mut().zip(&c.output_signals) {
                *o = values[sig];
            }
            for (s, &sig) in after[0].row_mut(row).iter_mut().zip(&c.next_state_signals) {
                *s = values[sig];
            }
        }
    }
    Ok(DiscreteTrace { outputs, states })
}
