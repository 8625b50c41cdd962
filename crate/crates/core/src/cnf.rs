//! Time-frame unrolling, Tseitin encoding and DIMACS I/O.
//!
//! Variable 1 is a constant-true variable. Every other variable belongs to
//! one node of the unrolled circuit. A flip-flop output in cycle `t + 1`
//! shares the variable of its `d` signal in cycle `t`; in cycle 1 it gets a
//! variable of its own, forced to 0 by a unit clause.
//!
//! Besides the standard `p cnf` header and clauses, the writer emits the
//! variable map as comment lines:
//!
//! ```text
//! c const true var=1
//! c map t=<cycle> sig=<name> var=<k>
//! ```
//!
//! Cycles are numbered from 1. Every `(cycle, signal)` pair appears exactly
//! once.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::bench::{GateKind, Netlist};
use crate::circuit::{BitMatrix, SequentialCircuit};
use crate::constraint::OutputConstraint;

#[derive(Debug, Error)]
pub enum CnfError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    MalformedDimacs { line: usize, reason: String },
    #[error("model leaves variable {0} unassigned")]
    IncompleteModel(u32),
    #[error("model violates clause {0}")]
    ClauseViolated(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnrolledNode {
    /// Primary input `index` in `cycle` (0-based).
    Input {
        cycle: usize,
        index: usize,
    },
    /// Flip-flop `index` before the first clock edge.
    InitState {
        index: usize,
    },
    Gate {
        kind: GateKind,
        fanin: Vec<usize>,
    },
}

/// Purely combinational copy of a sequential circuit over a fixed number of
/// cycles. Nodes are in topological order.
#[derive(Debug, Clone)]
pub struct UnrolledCircuit {
    horizon: usize,
    signals: usize,
    inputs: usize,
    nodes: Vec<UnrolledNode>,
    signal_nodes: Vec<usize>,
    outputs: Vec<usize>,
    signal_names: Vec<String>,
}

impl UnrolledCircuit {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn nodes(&self) -> &[UnrolledNode] {
        &self.nodes
    }

    pub fn gate_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, UnrolledNode::Gate { .. }))
            .count()
    }

    /// Node carrying `signal` during `cycle` (0-based).
    pub fn signal_node(&self, cycle: usize, signal: usize) -> usize {
        self.signal_nodes[cycle * self.signals + signal]
    }

    pub fn input_node(&self, cycle: usize, index: usize) -> usize {
        match self
            .nodes
            .iter()
            .position(|n| *n == UnrolledNode::Input { cycle, index })
        {
            Some(p) => p,
            None => panic!("no input {index} in cycle {cycle}"),
        }
    }

    /// Primary-output nodes of the last cycle.
    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }
}

pub fn unroll(c: &SequentialCircuit, horizon: usize) -> UnrolledCircuit {
    assert!(horizon >= 1, "unrolling needs at least one cycle");
    let s = c.num_signals();
    let mut nodes = Vec::new();
    let mut signal_nodes = vec![usize::MAX; horizon * s];
    for t in 0..horizon {
        for (i, &sig) in c.input_signals().iter().enumerate() {
            signal_nodes[t * s + sig] = nodes.len();
            nodes.push(UnrolledNode::Input { cycle: t, index: i });
        }
        for (k, (&q, &d)) in c.state_signals().iter().zip(c.next_state_signals()).enumerate() {
            signal_nodes[t * s + q] = if t == 0 {
                nodes.push(UnrolledNode::InitState { index: k });
                nodes.len() - 1
            } else {
                signal_nodes[(t - 1) * s + d]
            };
        }
        for gate in c.schedule() {
            let fanin = gate.fanin.iter().map(|&f| signal_nodes[t * s + f]).collect();
            signal_nodes[t * s + gate.output] = nodes.len();
            nodes.push(UnrolledNode::Gate { kind: gate.kind, fanin });
        }
    }
    let last = horizon - 1;
    UnrolledCircuit {
        horizon,
        signals: s,
        inputs: c.num_inputs(),
        outputs: c.output_signals().iter().map(|&o| signal_nodes[last * s + o]).collect(),
        nodes,
        signal_nodes,
        signal_names: c.netlist().signal_names().map(str::to_string).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarMapping {
    /// 1-based cycle.
    pub cycle: usize,
    pub signal: String,
    pub var: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
    pub var_map: Vec<VarMapping>,
    /// `pi_vars[t][i]`: variable of primary input `i` in cycle `t` (0-based).
    pub pi_vars: Vec<Vec<u32>>,
    pub true_var: u32,
}

impl CnfFormula {
    pub fn horizon(&self) -> usize {
        self.pi_vars.len()
    }

    /// Checks that literals are in range and no clause is a tautology.
    pub fn is_well_formed(&self) -> bool {
        self.clauses.iter().all(|cl| {
            cl.iter().all(|&l| l != 0 && l.unsigned_abs() <= self.num_vars) && !cl.iter().any(|&l| cl.contains(&-l))
        })
    }
}

#[inline]
fn var_of(node: usize) -> i32 {
    node as i32 + 2
}

/// Drop repeated literals; `None` if the clause is a tautology.
fn normalize(lits: &[i32]) -> Option<Vec<i32>> {
    let mut out: Vec<i32> = Vec::with_capacity(lits.len());
    for &l in lits {
        if out.contains(&-l) {
            return None;
        }
        if !out.contains(&l) {
            out.push(l);
        }
    }
    Some(out)
}

/// Clauses forcing `y <-> kind(fanin)`.
pub fn gate_clauses(kind: GateKind, y: i32, fanin: &[i32]) -> Vec<Vec<i32>> {
    let mut raw: Vec<Vec<i32>> = Vec::with_capacity(fanin.len() + 1);
    match kind {
        GateKind::Not => {
            raw.push(vec![y, fanin[0]]);
            raw.push(vec![-y, -fanin[0]]);
        }
        GateKind::Buf => {
            raw.push(vec![-y, fanin[0]]);
            raw.push(vec![y, -fanin[0]]);
        }
        GateKind::And | GateKind::Nand => {
            // `out` is the AND value as a literal.
            let out = if kind == GateKind::And { y } else { -y };
            raw.extend(fanin.iter().map(|&a| vec![-out, a]));
            raw.push(std::iter::once(out).chain(fanin.iter().map(|&a| -a)).collect());
        }
        GateKind::Or | GateKind::Nor => {
            let out = if kind == GateKind::Or { y } else { -y };
            raw.extend(fanin.iter().map(|&a| vec![out, -a]));
            raw.push(std::iter::once(-out).chain(fanin.iter().copied()).collect());
        }
        GateKind::Xor | GateKind::Xnor => {
            let out = if kind == GateKind::Xor { y } else { -y };
            let (a, b) = (fanin[0], fanin[1]);
            raw.push(vec![-out, a, b]);
            raw.push(vec![-out, -a, -b]);
            raw.push(vec![out, -a, b]);
            raw.push(vec![out, a, -b]);
        }
    }
    raw.iter().filter_map(|c| normalize(c)).collect()
}

/// Tseitin-encode the unrolled circuit and add one unit clause per
/// constrained output of the last cycle. A per-row constraint contributes
/// its first row.
pub fn tseitin(u: &UnrolledCircuit, cons: &OutputConstraint) -> CnfFormula {
    let true_var = 1u32;
    let mut clauses: Vec<Vec<i32>> = vec![vec![true_var as i32]];
    for (k, node) in u.nodes.iter().enumerate() {
        match node {
            UnrolledNode::Input { .. } => {}
            UnrolledNode::InitState { .. } => clauses.push(vec![-var_of(k)]),
            UnrolledNode::Gate { kind, fanin } => {
                let args: Vec<i32> = fanin.iter().map(|&f| var_of(f)).collect();
                clauses.extend(gate_clauses(*kind, var_of(k), &args));
            }
        }
    }
    for (j, v) in cons.constrained(0) {
        let lit = var_of(u.outputs[j]);
        clauses.push(vec![if v { lit } else { -lit }]);
    }

    let mut var_map = Vec::with_capacity(u.horizon * u.signals);
    for t in 0..u.horizon {
        for sig in 0..u.signals {
            var_map.push(VarMapping {
                cycle: t + 1,
                signal: u.signal_names[sig].clone(),
                var: var_of(u.signal_node(t, sig)) as u32,
            });
        }
    }
    let mut pi_vars = vec![vec![0u32; u.inputs]; u.horizon];
    for (k, node) in u.nodes.iter().enumerate() {
        if let UnrolledNode::Input { cycle, index } = node {
            pi_vars[*cycle][*index] = var_of(k) as u32;
        }
    }
    CnfFormula {
        num_vars: u.nodes.len() as u32 + 1,
        clauses,
        var_map,
        pi_vars,
        true_var,
    }
}

pub fn write_dimacs<W: Write>(f: &CnfFormula, sink: &mut W) -> Result<(), CnfError> {
    writeln!(
        sink,
        "c unrolled cycles={} inputs={}",
        f.horizon(),
        f.pi_vars.first().map_or(0, Vec::len)
    )?;
    writeln!(sink, "c const true var={}", f.true_var)?;
    for m in &f.var_map {
        writeln!(sink, "c map t={} sig={} var={}", m.cycle, m.signal, m.var)?;
    }
    writeln!(sink, "p cnf {} {}", f.num_vars, f.clauses.len())?;
    let mut line = String::new();
    for cl in &f.clauses {
        line.clear();
        for l in cl {
            line.push_str(&l.to_string());
            line.push(' ');
        }
        line.push('0');
        writeln!(sink, "{line}")?;
    }
    Ok(())
}

pub fn to_dimacs_string(f: &CnfFormula) -> String {
    let mut buf = Vec::new();
    write_dimacs(f, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// A parsed DIMACS file together with any variable-map comments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dimacs {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
    pub var_map: Vec<VarMapping>,
}

impl Dimacs {
    /// Rebuild `pi_vars[t][i]` from the map comments using the input names
    /// of `nl`. `None` if any input of any cycle is missing.
    pub fn input_vars(&self, nl: &Netlist) -> Option<Vec<Vec<u32>>> {
        let horizon = self.var_map.iter().map(|m| m.cycle).max()?;
        let lookup: HashMap<(usize, &str), u32> = self
            .var_map
            .iter()
            .map(|m| ((m.cycle, m.signal.as_str()), m.var))
            .collect();
        (1..=horizon)
            .map(|t| {
                nl.inputs
                    .iter()
                    .map(|&i| lookup.get(&(t, nl.signal_name(i))).copied())
                    .collect()
            })
            .collect()
    }
}

fn parse_map_comment(body: &str) -> Option<VarMapping> {
    let mut parts = body.split_whitespace();
    if parts.next()? != "map" {
        return None;
    }
    let cycle = parts.next()?.strip_prefix("t=")?.parse().ok()?;
    let signal = parts.next()?.strip_prefix("sig=")?.to_string();
    let var = parts.next()?.strip_prefix("var=")?.parse().ok()?;
    if parts.next().is_some() || signal.is_empty() {
        return None;
    }
    Some(VarMapping { cycle, signal, var })
}

pub fn parse_dimacs(text: &str) -> Result<Dimacs, CnfError> {
    let bad = |line: usize, reason: &str| CnfError::MalformedDimacs {
        line,
        reason: reason.to_string(),
    };
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut var_map = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(body) = line.strip_prefix('c') {
            if body.is_empty() || body.starts_with(char::is_whitespace) {
                if let Some(m) = parse_map_comment(body) {
                    var_map.push(m);
                }
                continue;
            }
        }
        if line.starts_with('%') {
            break;
        }
        if let Some(rest) = line.strip_prefix('p') {
            if header.is_some() {
                return Err(bad(lineno, "duplicate header"));
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            match fields.as_slice() {
                ["cnf", v, c] => {
                    let v = v.parse().map_err(|_| bad(lineno, "bad variable count"))?;
                    let c = c.parse().map_err(|_| bad(lineno, "bad clause count"))?;
                    header = Some((v, c));
                }
                _ => return Err(bad(lineno, "expected `p cnf <vars> <clauses>`")),
            }
            continue;
        }
        let (num_vars, _) = header.ok_or_else(|| bad(lineno, "clause before header"))?;
        for tok in line.split_whitespace() {
            let lit: i32 = tok.parse().map_err(|_| bad(lineno, "bad literal"))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else if lit.unsigned_abs() > num_vars {
                return Err(bad(lineno, "literal out of range"));
            } else {
                current.push(lit);
            }
        }
    }
    let (num_vars, num_clauses) = header.ok_or_else(|| bad(last_line.max(1), "missing header"))?;
    if !current.is_empty() {
        return Err(bad(last_line, "unterminated clause"));
    }
    if clauses.len() != num_clauses {
        return Err(bad(last_line, "clause count differs from header"));
    }
    Ok(Dimacs {
        num_vars,
        clauses,
        var_map,
    })
}

/// Truth assignment indexed by variable (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<Option<bool>>,
}

impl Model {
    pub fn new(num_vars: u32) -> Self {
        Model {
            values: vec![None; num_vars as usize + 1],
        }
    }

    /// From signed literals; later literals override earlier ones.
    pub fn from_literals(num_vars: u32, lits: &[i32]) -> Self {
        let mut m = Model::new(num_vars);
        for &l in lits {
            m.set(l.unsigned_abs(), l > 0);
        }
        m
    }

    pub fn set(&mut self, var: u32, value: bool) {
        if let Some(slot) = self.values.get_mut(var as usize) {
            *slot = Some(value);
        }
    }

    pub fn get(&self, var: u32) -> Option<bool> {
        self.values.get(var as usize).copied().flatten()
    }

    fn lit(&self, l: i32) -> Option<bool> {
        self.get(l.unsigned_abs()).map(|v| v == (l > 0))
    }
}

/// Check the model against every clause, then read off the primary inputs
/// as a `cycles x n` bit matrix.
pub fn decode_model(f: &CnfFormula, model: &Model) -> Result<BitMatrix, CnfError> {
    for v in 1..=f.num_vars {
        if model.get(v).is_none() {
            return Err(CnfError::IncompleteModel(v));
        }
    }
    if let Some(idx) = f
        .clauses
        .iter()
        .position(|cl| !cl.iter().any(|&l| model.lit(l) == Some(true)))
    {
        return Err(CnfError::ClauseViolated(idx));
    }
    let rows: Vec<Vec<bool>> = f
        .pi_vars
        .iter()
        .map(|vars| vars.iter().map(|&v| model.get(v).expect("checked above")).collect())
        .collect();
    Ok(BitMatrix::from_rows(&rows).expect("pi_vars rows share a width"))
}
