//! Target valuations for a subset of primary outputs.

use thiserror::Error;

use crate::bench::Netlist;
use crate::circuit::BitMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("constraint mask selects no output")]
    EmptyMask,
    #[error("constraint covers {got} outputs, circuit has {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("`{0}` is not a primary output")]
    UnknownOutput(String),
    #[error("output `{0}` is constrained twice")]
    Conflict(String),
}

/// Target valuation `Y` over the primary outputs together with the mask of
/// outputs that are actually constrained. A single target row is broadcast
/// over the whole batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputConstraint {
    target: BitMatrix,
    mask: Vec<bool>,
}

impl OutputConstraint {
    pub fn new(target: BitMatrix, mask: Vec<bool>) -> Result<Self, ConstraintError> {
        if target.cols() != mask.len() {
            return Err(ConstraintError::WidthMismatch {
                expected: mask.len(),
                got: target.cols(),
            });
        }
        if !mask.iter().any(|&m| m) {
            return Err(ConstraintError::EmptyMask);
        }
        Ok(OutputConstraint { target, mask })
    }

    /// Broadcast constraint from `(output position, value)` pairs.
    pub fn from_assignments(num_outputs: usize, pairs: &[(usize, bool)]) -> Result<Self, ConstraintError> {
        let mut target = BitMatrix::zeros(1, num_outputs);
        let mut mask = vec![false; num_outputs];
        for &(j, v) in pairs {
            if j >= num_outputs {
                return Err(ConstraintError::WidthMismatch {
                    expected: num_outputs,
                    got: j + 1,
                });
            }
            if mask[j] {
                return Err(ConstraintError::Conflict(format!("#{j}")));
            }
            mask[j] = true;
            target.set(0, j, v);
        }
        OutputConstraint::new(target, mask)
    }

    /// Broadcast constraint from `(output name, value)` pairs.
    pub fn from_named<S: AsRef<str>>(nl: &Netlist, pairs: &[(S, bool)]) -> Result<Self, ConstraintError> {
        let mut resolved = Vec::with_capacity(pairs.len());
        for (name, v) in pairs {
            let name = name.as_ref();
            let pos = nl
                .signal(name)
                .and_then(|id| nl.output_position(id))
                .ok_or_else(|| ConstraintError::UnknownOutput(name.to_string()))?;
            if resolved.iter().any(|&(p, _)| p == pos) {
                return Err(ConstraintError::Conflict(name.to_string()));
            }
            resolved.push((pos, *v));
        }
        OutputConstraint::from_assignments(nl.outputs.len(), &resolved)
    }

    pub fn num_outputs(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn target(&self) -> &BitMatrix {
        &self.target
    }

    pub fn is_broadcast(&self) -> bool {
        self.target.rows() == 1
    }

    /// Whether the target can be applied to a batch of `b` rows.
    pub fn fits_batch(&self, b: usize) -> bool {
        self.is_broadcast() || self.target.rows() == b
    }

    /// Target bit for output `j` of batch row `row`.
    #[inline]
    pub fn target_bit(&self, row: usize, j: usize) -> bool {
        let r = if self.is_broadcast() { 0 } else { row };
        self.target.get(r, j)
    }

    /// Constrained `(output position, target)` pairs for `row`.
    pub fn constrained(&self, row: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(j, _)| (j, self.target_bit(row, j)))
    }

    pub fn num_constrained(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Whether the discrete output vector of `row` meets every masked target.
    pub fn satisfied_by(&self, row: usize, outputs: &[bool]) -> bool {
        self.constrained(row).all(|(j, v)| outputs[j] == v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::parse_bench;

    #[test]
    fn mask_must_select_something() {
        assert_eq!(
            OutputConstraint::new(BitMatrix::zeros(1, 2), vec![false, false]).unwrap_err(),
            ConstraintError::EmptyMask
        );
    }

    #[test]
    fn named_lookup() {
        let nl = parse_bench("INPUT(a)\nOUTPUT(x)\nOUTPUT(y)\nx = NOT(a)\ny = BUF(a)").unwrap();
        let c = OutputConstraint::from_named(&nl, &[("y", true)]).unwrap();
        assert_eq!(c.mask(), &[false, true]);
        assert!(c.satisfied_by(7, &[false, true]));
        assert!(!c.satisfied_by(0, &[true, false]));
        assert_eq!(
            OutputConstraint::from_named(&nl, &[("a", true)]).unwrap_err(),
            ConstraintError::UnknownOutput("a".into())
        );
        assert!(matches!(
            OutputConstraint::from_named(&nl, &[("x", true), ("x", false)]),
            Err(ConstraintError::Conflict(_))
        ));
    }

    #[test]
    fn per_row_targets() {
        let t = BitMatrix::from_strings(&["10", "01"]).unwrap();
        let c = OutputConstraint::new(t, vec![true, true]).unwrap();
        assert!(c.fits_batch(2));
        assert!(!c.fits_batch(3));
        assert!(c.target_bit(1, 1));
        assert!(!c.target_bit(1, 0));
    }
}
