//! Conditional probability tables for binary hidden nodes and categorical
//! observation leaves.
//!
//! A hidden node's CPD stores only the probability that the node is on, one
//! row per joint state of its binary inputs. Rows are addressed by bit
//! strings in declared input order, first input in the leftmost (most
//! significant) position: with two inputs, `"01"` means the first input is
//! off and the second is on.

use crate::error::ModelError;

/// Probability-of-on rows for a binary node, one per joint input state.
#[derive(Debug, Clone, PartialEq)]
pub struct CpdTable {
    inputs: usize,
    rows: Vec<f64>,
}

impl CpdTable {
    /// Build from rows listed in bit-string order (`"00", "01", "10", ...`).
    pub fn new(inputs: usize, rows: Vec<f64>) -> Result<Self, ModelError> {
        if rows.len() != 1usize << inputs {
            return Err(ModelError::SchemaViolation(format!(
                "CPD with {} inputs needs {} rows, got {}",
                inputs,
                1usize << inputs,
                rows.len()
            )));
        }
        Ok(Self { inputs, rows })
    }

    /// Number of binary inputs (parents, plus the node's own previous state
    /// for self-chained non-persistent nodes).
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Probability that the node is on given the joint input state `bits`.
    ///
    /// Bit `inputs - 1 - i` of `bits` holds input `i`, so the bit string
    /// `"01"` maps to index `0b01`.
    #[inline]
    pub fn on_probability(&self, bits: usize) -> f64 {
        self.rows[bits]
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    /// Check that every row is a probability. Returns the offending row's bit
    /// string on failure.
    pub fn check_rows(&self) -> Result<(), String> {
        for (idx, &p) in self.rows.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(bit_string(idx, self.inputs));
            }
        }
        Ok(())
    }
}

/// Emission distributions of an observation leaf, one row per parent state.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionTable {
    /// `rows[0]` applies when the parent is off, `rows[1]` when it is on.
    rows: [Vec<f64>; 2],
}

impl EmissionTable {
    pub fn new(off: Vec<f64>, on: Vec<f64>) -> Result<Self, ModelError> {
        if off.len() != on.len() {
            return Err(ModelError::SchemaViolation(format!(
                "emission rows disagree on alphabet size ({} vs {})",
                off.len(),
                on.len()
            )));
        }
        if off.len() < 2 {
            return Err(ModelError::SchemaViolation(
                "emission alphabet needs at least two symbols".into(),
            ));
        }
        Ok(Self { rows: [off, on] })
    }

    pub fn alphabet(&self) -> usize {
        self.rows[0].len()
    }

    /// `P(observation = value | parent state)`.
    #[inline]
    pub fn probability(&self, parent_on: bool, value: u32) -> f64 {
        self.rows[parent_on as usize][value as usize]
    }

    pub fn row(&self, parent_on: bool) -> &[f64] {
        &self.rows[parent_on as usize]
    }

    /// Check that both rows are distributions within `tol`. Returns the
    /// offending row's bit string on failure.
    pub fn check_rows(&self, tol: f64) -> Result<(), String> {
        for (state, row) in self.rows.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                return Err(state.to_string());
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(state.to_string());
            }
        }
        Ok(())
    }
}

/// Render a row index as the bit string that addresses it.
pub fn bit_string(index: usize, inputs: usize) -> String {
    (0..inputs)
        .map(|i| {
            if index >> (inputs - 1 - i) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// Parse a CPD key back into a row index.
pub fn parse_bit_string(key: &str, inputs: usize) -> Result<usize, ModelError> {
    if key.len() != inputs {
        return Err(ModelError::SchemaViolation(format!(
            "CPD key `{key}` has {} bits, expected {}",
            key.len(),
            inputs
        )));
    }
    let mut idx = 0usize;
    for c in key.chars() {
        idx = (idx << 1)
            | match c {
                '0' => 0,
                '1' => 1,
                _ => {
                    return Err(ModelError::SchemaViolation(format!(
                        "CPD key `{key}` contains a character other than 0/1"
                    )))
                }
            };
    }
    Ok(idx)
}
