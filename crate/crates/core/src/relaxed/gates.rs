//! Probability model of each gate and its partial derivatives.
//!
//! The model is the multilinear extension of the Boolean function: with
//! independent inputs that are 1 with probability `p_i`, the output is the
//! probability that the gate outputs 1. It is exact on binary inputs.

use crate::bench::GateKind;

use super::EngineError;

/// Values this far outside `[0, 1]` are snapped back; anything further is a
/// `DomainError`.
pub const DOMAIN_SLACK: f64 = 1e-12;

#[inline]
pub(crate) fn snap_unit(v: f64) -> Result<f64, EngineError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else if (-DOMAIN_SLACK..0.0).contains(&v) {
        Ok(0.0)
    } else if v > 1.0 && v <= 1.0 + DOMAIN_SLACK {
        Ok(1.0)
    } else {
        Err(EngineError::DomainError(v))
    }
}

fn check_args(kind: GateKind, fanin: &[f64]) -> Result<Vec<f64>, EngineError> {
    if !kind.accepts_arity(fanin.len()) {
        return Err(EngineError::ArityError {
            gate: kind,
            arity: fanin.len(),
        });
    }
    fanin.iter().map(|&p| snap_unit(p)).collect()
}

pub fn gate_prob(kind: GateKind, fanin: &[f64]) -> Result<f64, EngineError> {
    let p = check_args(kind, fanin)?;
    snap_unit(prob(kind, &p))
}

pub fn gate_grad(kind: GateKind, fanin: &[f64]) -> Result<Vec<f64>, EngineError> {
    let p = check_args(kind, fanin)?;
    let mut out = vec![0.0; p.len()];
    grad_into(kind, &p, &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn prob(kind: GateKind, p: &[f64]) -> f64 {
    match kind {
        GateKind::Not => 1.0 - p[0],
        GateKind::Buf => p[0],
        GateKind::And => p.iter().product(),
        GateKind::Nand => 1.0 - p.iter().product::<f64>(),
        GateKind::Or => 1.0 - p.iter().map(|&x| 1.0 - x).product::<f64>(),
        GateKind::Nor => p.iter().map(|&x| 1.0 - x).product(),
        GateKind::Xor => (1.0 - p[0]) * p[1] + p[0] * (1.0 - p[1]),
        GateKind::Xnor => p[0] * p[1] + (1.0 - p[0]) * (1.0 - p[1]),
    }
}

/// Partial derivative of the gate output with respect to each fan-in.
///
/// For the n-ary products, `d/dp_i` is the product of every other factor,
/// built from prefix and suffix products so a zero input never turns into
/// a division by zero.
#[inline]
pub(crate) fn grad_into(kind: GateKind, p: &[f64], out: &mut [f64]) {
    match kind {
        GateKind::Not => out[0] = -1.0,
        GateKind::Buf => out[0] = 1.0,
        GateKind::Xor => {
            out[0] = 1.0 - 2.0 * p[1];
            out[1] = 1.0 - 2.0 * p[0];
        }
        GateKind::Xnor => {
            out[0] = 2.0 * p[1] - 1.0;
            out[1] = 2.0 * p[0] - 1.0;
        }
        GateKind::And | GateKind::Nand => {
            leave_one_out(p, false, out);
            if kind == GateKind::Nand {
                out.iter_mut().for_each(|g| *g = -*g);
            }
        }
        GateKind::Or | GateKind::Nor => {
            leave_one_out(p, true, out);
            if kind == GateKind::Nor {
                out.iter_mut().for_each(|g| *g = -*g);
            }
        }
    }
}

/// `out[i] = prod_{j != i} f(p[j])` where `f` is the identity or `1 - x`.
#[inline]
fn leave_one_out(p: &[f64], complement: bool, out: &mut [f64]) {
    let factor = |x: f64| if complement { 1.0 - x } else { x };
    let mut prefix = 1.0;
    for (o, &x) in out.iter_mut().zip(p) {
        *o = prefix;
        prefix *= factor(x);
    }
    let mut suffix = 1.0;
    for (o, &x) in out.iter_mut().zip(p).rev() {
        *o *= suffix;
        suffix *= factor(x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(kind: GateKind, p: &[f64], i: usize) -> f64 {
        let h = 1e-6;
        let mut hi = p.to_vec();
        let mut lo = p.to_vec();
        hi[i] += h;
        lo[i] -= h;
        (prob(kind, &hi) - prob(kind, &lo)) / (2.0 * h)
    }

    #[test]
    fn table_values() {
        assert_eq!(gate_prob(GateKind::And, &[0.5, 0.5]).unwrap(), 0.25);
        assert_eq!(gate_prob(GateKind::Nand, &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(gate_prob(GateKind::Not, &[0.2]).unwrap(), 0.8);
        assert!((gate_prob(GateKind::Or, &[0.5, 0.5]).unwrap() - 0.75).abs() < 1e-15);
        assert!((gate_prob(GateKind::Nor, &[0.5, 0.5]).unwrap() - 0.25).abs() < 1e-15);
        for p in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert_eq!(gate_prob(GateKind::Xor, &[p, 0.5]).unwrap(), 0.5);
            assert_eq!(gate_prob(GateKind::Xnor, &[p, 0.5]).unwrap(), 0.5);
        }
    }

    #[test]
    fn table_derivatives() {
        assert_eq!(gate_grad(GateKind::And, &[0.9, 0.3]).unwrap()[0], 0.3);
        assert_eq!(gate_grad(GateKind::Xor, &[0.9, 0.5]).unwrap()[0], 0.0);
        assert!((gate_grad(GateKind::Or, &[0.9, 0.3]).unwrap()[0] - 0.7).abs() < 1e-15);
        assert!((gate_grad(GateKind::Xnor, &[0.9, 0.3]).unwrap()[0] - (-0.4)).abs() < 1e-15);
        assert_eq!(gate_grad(GateKind::Not, &[0.4]).unwrap(), vec![-1.0]);
        assert_eq!(gate_grad(GateKind::Buf, &[0.4]).unwrap(), vec![1.0]);
    }

    #[test]
    fn and3_partials_match_finite_differences() {
        let p = [0.5, 0.5, 0.5];
        let g = gate_grad(GateKind::And, &p).unwrap();
        assert_eq!(g.len(), 3);
        for (i, gi) in g.iter().enumerate() {
            // Oracle value computed by central differences at step 1e-6.
            let expected = fd(GateKind::And, &p, i);
            assert!((expected - 0.25).abs() < 1e-9);
            assert!((gi - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_inputs_do_not_poison_gradients() {
        let g = gate_grad(GateKind::And, &[0.0, 0.5, 0.4]).unwrap();
        assert_eq!(g, vec![0.2, 0.0, 0.0]);
        let g = gate_grad(GateKind::Nor, &[1.0, 0.5, 0.0]).unwrap();
        assert_eq!(g, vec![-0.5, 0.0, 0.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            gate_prob(GateKind::Xor, &[0.1, 0.2, 0.3]),
            Err(EngineError::ArityError { .. })
        ));
        assert!(matches!(
            gate_prob(GateKind::Not, &[]),
            Err(EngineError::ArityError { .. })
        ));
        assert!(matches!(
            gate_prob(GateKind::And, &[1.5, 0.2]),
            Err(EngineError::DomainError(_))
        ));
        assert!(matches!(
            gate_grad(GateKind::Or, &[-0.1, 0.2]),
            Err(EngineError::DomainError(_))
        ));
        assert!(matches!(
            gate_prob(GateKind::Buf, &[f64::NAN]),
            Err(EngineError::DomainError(_))
        ));
        // Within the slack the value is snapped.
        assert_eq!(gate_prob(GateKind::Buf, &[1.0 + 1e-13]).unwrap(), 1.0);
        assert_eq!(gate_prob(GateKind::Buf, &[-1e-13]).unwrap(), 0.0);
    }
}
