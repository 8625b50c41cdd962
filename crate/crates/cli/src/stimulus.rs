//! Stimulus files: one line of `0`/`1` characters per cycle, in primary
//! input order. Blank lines and lines starting with `#` are ignored.

use thiserror::Error;

use seqsat_core::circuit::parse_bits;
use seqsat_core::BitMatrix;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StimulusError {
    #[error("line {line}: expected {expected} bits, found {found}")]
    Width { line: usize, expected: usize, found: usize },
    #[error("line {line}: only '0' and '1' are allowed")]
    BadChar { line: usize },
}

/// Parse a stimulus for a circuit with `width` primary inputs. The result
/// has one row per cycle and may have zero rows.
pub fn parse_stimulus(text: &str, width: usize) -> Result<BitMatrix, StimulusError> {
    let mut bits = Vec::new();
    let mut rows = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_bits(line).ok_or(StimulusError::BadChar { line: idx + 1 })?;
        if row.len() != width {
            return Err(StimulusError::Width {
                line: idx + 1,
                expected: width,
                found: row.len(),
            });
        }
        bits.extend(row);
        rows += 1;
    }
    Ok(BitMatrix::from_vec(rows, width, bits).expect("rows checked above"))
}
