mod common;

use std::collections::BTreeSet;

use common::{all_sequences, dpll, load};
use proptest::prelude::*;
use seqsat_core::circuit::simulate_row;
use seqsat_core::cnf::{decode_model, parse_dimacs, to_dimacs_string, tseitin, unroll, CnfFormula, Model};
use seqsat_core::synth::{random_netlist, SynthSpec};
use seqsat_core::{build_circuit, simulate_discrete, BitMatrix, OutputConstraint, SequentialCircuit};

fn synth(seed: u64, inputs: usize) -> SequentialCircuit {
    build_circuit(random_netlist(&SynthSpec {
        inputs,
        outputs: 2,
        dffs: 2,
        gates: 12,
        max_fanin: 3,
        seed,
    }))
    .unwrap()
}

fn accepted_by_simulator(c: &SequentialCircuit, cons: &OutputConstraint, horizon: usize) -> BTreeSet<Vec<Vec<bool>>> {
    all_sequences(horizon, c.num_inputs())
        .filter(|seq| {
            let stim: Vec<&[bool]> = seq.iter().map(Vec::as_slice).collect();
            cons.satisfied_by(0, &simulate_row(c, &stim, &vec![false; c.num_states()]).0)
        })
        .collect()
}

fn accepted_by_cnf(f: &CnfFormula, horizon: usize, n: usize) -> BTreeSet<Vec<Vec<bool>>> {
    all_sequences(horizon, n)
        .filter(|seq| {
            let assumptions: Vec<i32> = (0..horizon)
                .flat_map(|t| (0..n).map(move |i| (t, i)))
                .map(|(t, i)| {
                    let v = f.pi_vars[t][i] as i32;
                    if seq[t][i] {
                        v
                    } else {
                        -v
                    }
                })
                .collect();
            dpll(f.num_vars, &f.clauses, &assumptions).is_some()
        })
        .collect()
}

#[test]
fn equisatisfiable_on_small_circuits() {
    let mut cases: Vec<(SequentialCircuit, usize)> = vec![
        (load("s27.bench"), 1),
        (load("s27.bench"), 2),
        (load("s27.bench"), 3),
        (load("counter2.bench"), 4),
        (load("stuck0.bench"), 3),
    ];
    for seed in 0..6 {
        cases.push((synth(seed, 3), 4));
        cases.push((synth(seed + 100, 2), 6));
    }
    for (c, horizon) in &cases {
        assert!(horizon * c.num_inputs() <= 12);
        for &(j, v) in &[(0usize, true), (0, false)] {
            let cons = OutputConstraint::from_assignments(c.num_outputs(), &[(j, v)]).unwrap();
            let f = tseitin(&unroll(c, *horizon), &cons);
            assert!(f.is_well_formed());
            assert_eq!(
                accepted_by_cnf(&f, *horizon, c.num_inputs()),
                accepted_by_simulator(c, &cons, *horizon)
            );
        }
    }
}

/// Extend a binary input sequence to every variable by simulation, using the
/// `c map` entries to find each signal.
fn simulated_model(c: &SequentialCircuit, f: &CnfFormula, seq: &[Vec<bool>]) -> Model {
    let nl = c.netlist();
    let mut model = Model::new(f.num_vars);
    model.set(f.true_var, true);
    let stim: Vec<BitMatrix> = seq
        .iter()
        .map(|r| BitMatrix::from_rows(std::slice::from_ref(r)).unwrap())
        .collect();
    let trace = simulate_discrete(c, &stim, &BitMatrix::zeros(1, c.num_states())).unwrap();
    // The trace only keeps states and outputs, so replay every signal.
    for (t, row) in seq.iter().enumerate() {
        let state = trace.states[t].row(0);
        let mut values = vec![None; c.num_signals()];
        for (&s, &v) in c.input_signals().iter().zip(row) {
            values[s] = Some(v);
        }
        for (&s, &v) in c.state_signals().iter().zip(state) {
            values[s] = Some(v);
        }
        for g in c.schedule() {
            values[g.output] = Some(g.kind.eval(g.fanin.iter().map(|&x| values[x].unwrap())));
        }
        for m in f.var_map.iter().filter(|m| m.cycle == t + 1) {
            let sig = nl.signal(&m.signal).unwrap().index();
            model.set(m.var, values[sig].unwrap());
        }
    }
    model
}

#[test]
fn simulator_extension_satisfies_all_gate_clauses() {
    for seed in 0..8 {
        let c = synth(seed, 2);
        let horizon = 5;
        let cons = OutputConstraint::from_assignments(c.num_outputs(), &[(0, true)]).unwrap();
        let f = tseitin(&unroll(&c, horizon), &cons);
        // Drop the trailing output unit: every input sequence must then extend to a model.
        let units = f.clauses.len() - 1;
        let mut gate_only = f.clone();
        gate_only.clauses.truncate(units);
        for seq in all_sequences(horizon, 2) {
            let model = simulated_model(&c, &gate_only, &seq);
            let decoded = decode_model(&gate_only, &model).unwrap();
            for (t, row) in seq.iter().enumerate() {
                assert_eq!(decoded.row(t), row.as_slice());
            }
        }
    }
}

#[test]
fn counter_model_decodes_to_valid_sequence() {
    let c = load("counter2.bench");
    let cons = OutputConstraint::from_assignments(1, &[(0, true)]).unwrap();
    let f = tseitin(&unroll(&c, 3), &cons);
    // Enable held high counts 1, 2, then 3 at the last cycle.
    let seq = vec![vec![true]; 3];
    let model = simulated_model(&c, &f, &seq);
    let bits = decode_model(&f, &model).unwrap();
    let stim: Vec<&[bool]> = (0..3).map(|t| bits.row(t)).collect();
    let (out, _) = simulate_row(&c, &stim, &[false, false]);
    assert!(out[0]);
}

#[test]
fn sizes_grow_affinely() {
    for c in [load("s27.bench"), load("counter2.bench"), synth(3, 3)] {
        let cons = OutputConstraint::from_assignments(c.num_outputs(), &[(0, true)]).unwrap();
        let size = |t| {
            let f = tseitin(&unroll(&c, t), &cons);
            (f.num_vars as i64, f.clauses.len() as i64)
        };
        let (v1, c1) = size(1);
        let (v2, c2) = size(2);
        for t in [3i64, 7, 25, 50] {
            let (vt, ct) = size(t as usize);
            assert_eq!(vt, v1 + (t - 1) * (v2 - v1));
            assert_eq!(ct, c1 + (t - 1) * (c2 - c1));
        }
        let u = unroll(&c, 25);
        assert_eq!(u.gate_count(), 25 * c.netlist().stats().gates);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimacs_round_trip(seed in 0u64..10_000, horizon in 1usize..6, value in any::<bool>()) {
        let c = synth(seed, 3);
        let cons = OutputConstraint::from_assignments(c.num_outputs(), &[(1, value)]).unwrap();
        let f = tseitin(&unroll(&c, horizon), &cons);
        let parsed = parse_dimacs(&to_dimacs_string(&f)).unwrap();
        prop_assert_eq!(parsed.num_vars, f.num_vars);
        prop_assert_eq!(&parsed.clauses, &f.clauses);
        prop_assert_eq!(&parsed.var_map, &f.var_map);
        prop_assert_eq!(parsed.input_vars(c.netlist()).unwrap(), f.pi_vars.clone());
        let pairs: BTreeSet<(usize, &str)> = f.var_map.iter().map(|m| (m.cycle, m.signal.as_str())).collect();
        prop_assert_eq!(pairs.len(), f.var_map.len());
        prop_assert_eq!(f.var_map.len(), horizon * c.num_signals());
    }

    #[test]
    fn arbitrary_dimacs_text_never_panics(s in "\\PC*") {
        let _ = parse_dimacs(&s);
    }
}
