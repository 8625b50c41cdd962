#![allow(dead_code)]

use std::path::PathBuf;

use seqsat_core::relaxed::{forward_from_vars, loss, BatchedVars};
use seqsat_core::{build_circuit, parse_bench_named, OutputConstraint, SequentialCircuit};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> SequentialCircuit {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    build_circuit(parse_bench_named(name, &text).unwrap()).unwrap()
}

/// s27 written out by hand from the netlist, independent of the simulator.
/// `state` is (G5, G6, G7); returns (G17, next state).
pub fn s27_step(inp: [bool; 4], state: [bool; 3]) -> (bool, [bool; 3]) {
    let [g0, g1, g2, g3] = inp;
    let [g5, g6, g7] = state;
    let g14 = !g0;
    let g8 = g14 && g6;
    let g12 = !(g1 || g7);
    let g15 = g12 || g8;
    let g16 = g3 || g8;
    let g9 = !(g16 && g15);
    let g11 = !(g5 || g9);
    let g10 = !(g14 || g11);
    let g13 = !(g2 || g12);
    let g17 = !g11;
    (g17, [g10, g11, g13])
}

/// Decode bit `k` of `code` little-endian into a `cycles x n` sequence.
pub fn sequence_from_code(code: u64, cycles: usize, n: usize) -> Vec<Vec<bool>> {
    (0..cycles)
        .map(|t| (0..n).map(|i| code >> (t * n + i) & 1 == 1).collect())
        .collect()
}

/// Every input sequence of length `cycles`.
pub fn all_sequences(cycles: usize, n: usize) -> impl Iterator<Item = Vec<Vec<bool>>> {
    let bits = cycles * n;
    assert!(bits <= 24, "enumeration too large");
    (0..1u64 << bits).map(move |code| sequence_from_code(code, cycles, n))
}

/// Tiny DPLL with unit propagation. Returns a model if satisfiable.
pub fn dpll(num_vars: u32, clauses: &[Vec<i32>], assumptions: &[i32]) -> Option<Vec<Option<bool>>> {
    let mut assign: Vec<Option<bool>> = vec![None; num_vars as usize + 1];
    for &l in assumptions {
        let v = l.unsigned_abs() as usize;
        match assign[v] {
            Some(b) if b != (l > 0) => return None,
            _ => assign[v] = Some(l > 0),
        }
    }
    solve(clauses, assign)
}

fn lit_value(assign: &[Option<bool>], l: i32) -> Option<bool> {
    assign[l.unsigned_abs() as usize].map(|b| b == (l > 0))
}

fn solve(clauses: &[Vec<i32>], mut assign: Vec<Option<bool>>) -> Option<Vec<Option<bool>>> {
    loop {
        let mut changed = false;
        for cl in clauses {
            let mut unassigned = None;
            let mut free = 0;
            let mut sat = false;
            for &l in cl {
                match lit_value(&assign, l) {
                    Some(true) => {
                        sat = true;
                        break;
                    }
                    Some(false) => {}
                    None => {
                        free += 1;
                        unassigned = Some(l);
                    }
                }
            }
            if sat {
                continue;
            }
            match free {
                0 => return None,
                1 => {
                    let l = unassigned.unwrap();
                    assign[l.unsigned_abs() as usize] = Some(l > 0);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }
    let branch = clauses
        .iter()
        .flat_map(|cl| cl.iter())
        .find(|&&l| lit_value(&assign, l).is_none())
        .copied();
    match branch {
        None => Some(assign),
        Some(l) => {
            let v = l.unsigned_abs() as usize;
            for value in [true, false] {
                let mut next = assign.clone();
                next[v] = Some(value);
                if let Some(m) = solve(clauses, next) {
                    return Some(m);
                }
            }
            None
        }
    }
}

pub fn total_loss(c: &SequentialCircuit, vars: &BatchedVars, cons: &OutputConstraint, cycle: usize) -> f64 {
    let trace = forward_from_vars(c, vars, None).unwrap();
    loss(&trace, cons, cycle).unwrap().0
}

/// Central difference of the total loss in every logit.
pub fn fd_gradient(
    c: &SequentialCircuit,
    vars: &BatchedVars,
    cons: &OutputConstraint,
    cycle: usize,
    h: f64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(vars.as_slice().len());
    let mut probe = vars.clone();
    for k in 0..vars.as_slice().len() {
        let v0 = vars.as_slice()[k];
        probe.as_mut_slice()[k] = v0 + h;
        let up = total_loss(c, &probe, cons, cycle);
        probe.as_mut_slice()[k] = v0 - h;
        let down = total_loss(c, &probe, cons, cycle);
        probe.as_mut_slice()[k] = v0;
        out.push((up - down) / (2.0 * h));
    }
    out
}

pub fn grad_close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= (1e-4 * numeric.abs()).max(1e-7)
}
