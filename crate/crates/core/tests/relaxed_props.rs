mod common;

use common::{all_sequences, fd_gradient, grad_close, load};
use proptest::prelude::*;
use seqsat_core::relaxed::{
    backward_bptt, forward_from_vars, forward_relaxed, gate_grad, gate_prob, loss, BatchedVars, ProbTensor,
};
use seqsat_core::synth::{random_netlist, SynthSpec};
use seqsat_core::{build_circuit, simulate_discrete, BitMatrix, GateKind, OutputConstraint, SequentialCircuit};

fn synth(seed: u64) -> SequentialCircuit {
    build_circuit(random_netlist(&SynthSpec {
        inputs: 3,
        outputs: 2,
        dffs: 3,
        gates: 18,
        max_fanin: 4,
        seed,
    }))
    .unwrap()
}

/// Run a batch of binary sequences through both simulators and compare
/// every output and state bit.
fn assert_binary_consistent(c: &SequentialCircuit, seqs: &[Vec<Vec<bool>>]) {
    let b = seqs.len();
    let horizon = seqs[0].len();
    let (n, r) = (c.num_inputs(), c.num_states());
    let mut probs = Vec::new();
    let mut bits = Vec::new();
    for t in 0..horizon {
        let rows: Vec<Vec<bool>> = seqs.iter().map(|s| s[t].clone()).collect();
        let flat: Vec<f64> = rows.iter().flatten().map(|&x| if x { 1.0 } else { 0.0 }).collect();
        probs.push(ProbTensor::new(b, n, flat).unwrap());
        bits.push(BitMatrix::from_rows(&rows).unwrap());
    }
    let relaxed = forward_relaxed(c, &probs, &ProbTensor::zeros(b, r)).unwrap();
    let exact = simulate_discrete(c, &bits, &BitMatrix::zeros(b, r)).unwrap();
    for t in 0..horizon {
        let y = relaxed.outputs(t);
        let h = relaxed.state(t + 1);
        for row in 0..b {
            for j in 0..c.num_outputs() {
                let want = if exact.outputs[t].get(row, j) { 1.0 } else { 0.0 };
                assert_eq!(y.get(row, j), want);
            }
            for k in 0..r {
                let want = if exact.states[t + 1].get(row, k) { 1.0 } else { 0.0 };
                assert_eq!(h.get(row, k), want);
            }
        }
    }
}

#[test]
fn binary_consistency_exhaustive() {
    let s27 = load("s27.bench");
    for horizon in 1..=3 {
        let seqs: Vec<_> = all_sequences(horizon, 4).collect();
        assert_binary_consistent(&s27, &seqs);
    }
    for seed in 0..5 {
        let c = synth(seed);
        for horizon in 1..=3 {
            let seqs: Vec<_> = all_sequences(horizon, 3).collect();
            assert_binary_consistent(&c, &seqs);
        }
    }
}

#[test]
fn binary_consistency_long_horizons() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let circuits: Vec<SequentialCircuit> = std::iter::once(load("s27.bench")).chain((10..15).map(synth)).collect();
    for c in &circuits {
        let seqs: Vec<Vec<Vec<bool>>> = (0..400)
            .map(|_| {
                (0..8)
                    .map(|_| (0..c.num_inputs()).map(|_| rng.gen()).collect())
                    .collect()
            })
            .collect();
        assert_binary_consistent(c, &seqs);
    }
}

fn random_constraint(m: usize, bits: &[bool], mask_bits: &[bool]) -> OutputConstraint {
    let mut pairs: Vec<(usize, bool)> = (0..m).filter(|&j| mask_bits[j]).map(|j| (j, bits[j])).collect();
    if pairs.is_empty() {
        pairs.push((0, bits[0]));
    }
    OutputConstraint::from_assignments(m, &pairs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_finite_differences(
        seed in 0u64..10_000,
        horizon in prop::sample::select(vec![1usize, 2, 5]),
        raw in proptest::collection::vec(-3.0f64..3.0, 2 * 5 * 3),
        target in proptest::collection::vec(any::<bool>(), 2),
        mask in proptest::collection::vec(any::<bool>(), 2),
    ) {
        let c = synth(seed);
        let vars = BatchedVars::from_vec(2, horizon, 3, raw[..2 * horizon * 3].to_vec()).unwrap();
        let cons = random_constraint(2, &target, &mask);
        let trace = forward_from_vars(&c, &vars, None).unwrap();
        let grads = backward_bptt(&c, &trace, &cons, &vars, horizon).unwrap();
        let fd = fd_gradient(&c, &vars, &cons, horizon, 1e-6);
        for (k, (&g, &f)) in grads.as_slice().iter().zip(&fd).enumerate() {
            prop_assert!(grad_close(g, f), "component {}: analytic {} vs numeric {}", k, g, f);
        }
    }

    #[test]
    fn loss_is_bounded(
        seed in 0u64..10_000,
        raw in proptest::collection::vec(-6.0f64..6.0, 4 * 3 * 3),
        target in proptest::collection::vec(any::<bool>(), 2),
        mask in proptest::collection::vec(any::<bool>(), 2),
    ) {
        let c = synth(seed);
        let vars = BatchedVars::from_vec(4, 3, 3, raw).unwrap();
        let cons = random_constraint(2, &target, &mask);
        let trace = forward_from_vars(&c, &vars, None).unwrap();
        for cycle in 1..=3 {
            let (total, per_row) = loss(&trace, &cons, cycle).unwrap();
            prop_assert!(total >= 0.0);
            prop_assert!(total <= (4 * cons.num_constrained()) as f64);
            prop_assert!((per_row.iter().sum::<f64>() - total).abs() < 1e-12);
        }
    }

    #[test]
    fn activations_stay_in_unit_interval(
        seed in 0u64..10_000,
        p in proptest::collection::vec(0.0f64..=1.0, 3 * 4 * 3),
        h in proptest::collection::vec(0.0f64..=1.0, 3 * 3),
    ) {
        let c = synth(seed);
        let probs: Vec<ProbTensor> = p.chunks(9).map(|ch| ProbTensor::new(3, 3, ch.to_vec()).unwrap()).collect();
        let trace = forward_relaxed(&c, &probs, &ProbTensor::new(3, 3, h).unwrap()).unwrap();
        for row in 0..3 {
            for t in 0..4 {
                for s in 0..trace.num_signals() {
                    let v = trace.value(row, t, s);
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }

    #[test]
    fn gate_models_map_unit_cube_into_unit_interval(ps in proptest::collection::vec(0.0f64..=1.0, 1..6)) {
        for kind in [GateKind::And, GateKind::Nand, GateKind::Or, GateKind::Nor] {
            if ps.len() >= 2 {
                let v = gate_prob(kind, &ps).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(gate_grad(kind, &ps).unwrap().len(), ps.len());
            }
        }
        for kind in [GateKind::Not, GateKind::Buf] {
            let v = gate_prob(kind, &ps[..1]).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if ps.len() >= 2 {
            for kind in [GateKind::Xor, GateKind::Xnor] {
                let v = gate_prob(kind, &ps[..2]).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn batch_split_is_bitwise_identical(
        seed in 0u64..10_000,
        raw in proptest::collection::vec(-3.0f64..3.0, 40 * 3 * 3),
        split in 1usize..40,
    ) {
        let c = synth(seed);
        let cons = OutputConstraint::from_assignments(2, &[(0, true), (1, false)]).unwrap();
        let full_vars = BatchedVars::from_vec(40, 3, 3, raw.clone()).unwrap();
        let full = forward_from_vars(&c, &full_vars, None).unwrap();
        let full_grad = backward_bptt(&c, &full, &cons, &full_vars, 3).unwrap();
        let per_row = 3 * 3;
        let (lo, hi) = raw.split_at(split * per_row);
        let mut offset = 0;
        for part in [lo, hi] {
            let rows = part.len() / per_row;
            let vars = BatchedVars::from_vec(rows, 3, 3, part.to_vec()).unwrap();
            let trace = forward_from_vars(&c, &vars, None).unwrap();
            let grad = backward_bptt(&c, &trace, &cons, &vars, 3).unwrap();
            for r in 0..rows {
                for t in 0..3 {
                    for s in 0..trace.num_signals() {
                        prop_assert_eq!(trace.value(r, t, s).to_bits(), full.value(offset + r, t, s).to_bits());
                    }
                }
                let a: Vec<u64> = grad.row(r).iter().map(|v| v.to_bits()).collect();
                let b: Vec<u64> = full_grad.row(offset + r).iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(a, b);
            }
            offset += rows;
        }
    }
}

#[test]
fn gradient_check_on_s27() {
    use rand::{Rng, SeedableRng};
    let c = load("s27.bench");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for horizon in [1, 2, 5] {
        for target in [false, true] {
            let data: Vec<f64> = (0..3 * horizon * 4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let vars = BatchedVars::from_vec(3, horizon, 4, data).unwrap();
            let cons = OutputConstraint::from_assignments(1, &[(0, target)]).unwrap();
            let trace = forward_from_vars(&c, &vars, None).unwrap();
            let grads = backward_bptt(&c, &trace, &cons, &vars, horizon).unwrap();
            let fd = fd_gradient(&c, &vars, &cons, horizon, 1e-6);
            for (&g, &f) in grads.as_slice().iter().zip(&fd) {
                assert!(grad_close(g, f), "analytic {g} vs numeric {f}");
            }
        }
    }
}

/// Eigenvalues of a symmetric 2x2 matrix.
fn eig2(a: f64, b: f64, d: f64) -> (f64, f64) {
    let mean = (a + d) / 2.0;
    let rad = (((a - d) / 2.0).powi(2) + b * b).sqrt();
    (mean - rad, mean + rad)
}

#[test]
fn and_hessian_is_indefinite() {
    let f = |x: f64, y: f64| gate_prob(GateKind::And, &[x, y]).unwrap();
    let h = 1e-3;
    for &(x, y) in &[(0.5, 0.5), (0.2, 0.7), (0.9, 0.1), (0.3, 0.3)] {
        let fxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
        let fyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
        let fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
        let (lo, hi) = eig2(fxx, fxy, fyy);
        assert!((lo + 1.0).abs() < 1e-4, "{lo}");
        assert!((hi - 1.0).abs() < 1e-4, "{hi}");
    }
}
