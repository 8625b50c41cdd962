use super::gates::snap_unit;
use super::EngineError;

/// Batch of probabilities, `rows x cols`, every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ProbTensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, EngineError> {
        if data.len() != rows * cols {
            return Err(EngineError::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} tensor",
                data.len()
            )));
        }
        let data = data.into_iter().map(snap_unit).collect::<Result<Vec<_>, _>>()?;
        Ok(ProbTensor { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self, EngineError> {
        ProbTensor::new(rows, cols, vec![value; rows * cols])
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ProbTensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        ProbTensor { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Learnable input logits for `horizon` cycles, stored row-major as
/// `[row][cycle][input]` so each candidate's whole sequence is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchedVars {
    batch: usize,
    horizon: usize,
    width: usize,
    data: Vec<f64>,
}

impl BatchedVars {
    pub fn zeros(batch: usize, horizon: usize, width: usize) -> Self {
        BatchedVars {
            batch,
            horizon,
            width,
            data: vec![0.0; batch * horizon * width],
        }
    }

    pub fn from_vec(batch: usize, horizon: usize, width: usize, data: Vec<f64>) -> Result<Self, EngineError> {
        if data.len() != batch * horizon * width {
            return Err(EngineError::DimensionMismatch(format!(
                "{} values for {batch} rows x {horizon} cycles x {width} inputs",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::NonFiniteInput);
        }
        Ok(BatchedVars {
            batch,
            horizon,
            width,
            data,
        })
    }

    /// One `batch x width` matrix per cycle.
    pub fn from_cycles(cycles: &[Vec<Vec<f64>>]) -> Result<Self, EngineError> {
        let horizon = cycles.len();
        let batch = cycles.first().map_or(0, Vec::len);
        let width = cycles.first().and_then(|c| c.first()).map_or(0, Vec::len);
        let mut out = BatchedVars::zeros(batch, horizon, width);
        for (t, m) in cycles.iter().enumerate() {
            if m.len() != batch || m.iter().any(|r| r.len() != width) {
                return Err(EngineError::DimensionMismatch(format!("ragged cycle {t}")));
            }
            for (r, row) in m.iter().enumerate() {
                out.cycle_row_mut(r, t).copy_from_slice(row);
            }
        }
        if out.data.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::NonFiniteInput);
        }
        Ok(out)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, t: usize, i: usize) -> f64 {
        self.data[(row * self.horizon + t) * self.width + i]
    }

    #[inline]
    pub fn set(&mut self, row: usize, t: usize, i: usize, v: f64) {
        self.data[(row * self.horizon + t) * self.width + i] = v;
    }

    /// Whole sequence of one candidate, `horizon * width` values.
    pub fn row(&self, row: usize) -> &[f64] {
        let len = self.horizon * self.width;
        &self.data[row * len..(row + 1) * len]
    }

    pub fn cycle_row(&self, row: usize, t: usize) -> &[f64] {
        let start = (row * self.horizon + t) * self.width;
        &self.data[start..start + self.width]
    }

    pub fn cycle_row_mut(&mut self, row: usize, t: usize) -> &mut [f64] {
        let start = (row * self.horizon + t) * self.width;
        &mut self.data[start..start + self.width]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &BatchedVars) -> bool {
        self.batch == other.batch && self.horizon == other.horizon && self.width == other.width
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Elementwise logistic sigmoid, one tensor per cycle.
pub fn sigmoid_embed(vars: &BatchedVars) -> Result<Vec<ProbTensor>, EngineError> {
    if !vars.is_finite() {
        return Err(EngineError::NonFiniteInput);
    }
    Ok((0..vars.horizon)
        .map(|t| {
            let mut data = Vec::with_capacity(vars.batch * vars.width);
            for r in 0..vars.batch {
                data.extend(vars.cycle_row(r, t).iter().map(|&v| sigmoid(v)));
            }
            ProbTensor::from_raw(vars.batch, vars.width, data)
        })
        .collect())
}
