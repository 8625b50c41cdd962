//! Sampling of input sequences for sequential gate-level circuits by
//! gradient descent on a probabilistic relaxation of the circuit.
//!
//! The pipeline is:
//!
//! 1. [`bench`] parses an ISCAS/ITC `.bench` netlist.
//! 2. [`circuit`] schedules the combinational core and provides the exact
//!    two-valued simulator used to validate everything else.
//! 3. [`relaxed`] evaluates the circuit on probabilities and back-propagates
//!    the output loss through time to the input logits.
//! 4. [`sampler`] runs gradient descent for every candidate sequence length
//!    and keeps the rounded candidates the simulator accepts.
//! 5. [`cnf`] unrolls the circuit for a fixed length and writes DIMACS CNF
//!    for use with conventional SAT samplers.

pub mod bench;
pub mod circuit;
pub mod cnf;
pub mod constraint;
pub mod relaxed;
pub mod sampler;
pub mod synth;

pub use bench::{netlist_stats, parse_bench, parse_bench_named, GateKind, Netlist, NetlistStats, ParseError, SignalId};
pub use circuit::{build_circuit, simulate_discrete, BitMatrix, CircuitError, SequentialCircuit};
pub use constraint::{ConstraintError, OutputConstraint};
