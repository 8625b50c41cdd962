//! Seeded random sequential netlists, for tests and fuzz seeds.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::{parse_bench_named, GateKind, Netlist};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub dffs: usize,
    pub gates: usize,
    /// Largest fan-in for AND/NAND/OR/NOR.
    pub max_fanin: usize,
    pub seed: u64,
}

const KINDS: [GateKind; 8] = [
    GateKind::Not,
    GateKind::Buf,
    GateKind::And,
    GateKind::Nand,
    GateKind::Or,
    GateKind::Nor,
    GateKind::Xor,
    GateKind::Xnor,
];

/// `.bench` text of a random acyclic-core sequential circuit. Gates only
/// read primary inputs, flip-flop outputs and earlier gates; flip-flops and
/// primary outputs are driven by randomly chosen gates.
pub fn random_bench(spec: &SynthSpec) -> String {
    assert!(spec.inputs >= 1 && spec.gates >= 1 && spec.outputs <= spec.gates);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut text = format!("# random circuit seed={}\n", spec.seed);
    let mut pool: Vec<String> = Vec::new();
    for i in 0..spec.inputs {
        text.push_str(&format!("INPUT(i{i})\n"));
        pool.push(format!("i{i}"));
    }
    for k in 0..spec.dffs {
        pool.push(format!("q{k}"));
    }
    let mut gate_names = Vec::with_capacity(spec.gates);
    for g in 0..spec.gates {
        let kind = *KINDS.choose(&mut rng).unwrap();
        let arity = match kind {
            GateKind::Not | GateKind::Buf => 1,
            GateKind::Xor | GateKind::Xnor => 2,
            _ => rng.gen_range(2..=spec.max_fanin.max(2)),
        };
        // Bias towards recent signals so the core gets some depth.
        let args: Vec<&str> = (0..arity)
            .map(|_| {
                let lo = if rng.gen_bool(0.5) {
                    pool.len().saturating_sub(6)
                } else {
                    0
                };
                pool[rng.gen_range(lo..pool.len())].as_str()
            })
            .collect();
        let name = format!("g{g}");
        text.push_str(&format!("{name} = {kind}({})\n", args.join(", ")));
        pool.push(name.clone());
        gate_names.push(name);
    }
    for k in 0..spec.dffs {
        let d = gate_names.choose(&mut rng).unwrap();
        text.push_str(&format!("q{k} = DFF({d})\n"));
    }
    let outs: Vec<&String> = gate_names.choose_multiple(&mut rng, spec.outputs).collect();
    for o in outs {
        text.push_str(&format!("OUTPUT({o})\n"));
    }
    text
}

pub fn random_netlist(spec: &SynthSpec) -> Netlist {
    parse_bench_named(&format!("rand{}", spec.seed), &random_bench(spec)).expect("generator emits valid netlists")
}
