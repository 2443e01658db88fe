//! Scaled message vectors.
//!
//! Messages over a changepoint domain are nonnegative vectors of length
//! `horizon + 1`. Over long horizons their raw entries underflow `f64`, so a
//! message stores its entries together with a log-domain scale factor: the
//! semantic value of entry `j` is `values[j] * exp(log_scale)`. Rescaling
//! moves mass between the two representations without changing the semantic
//! value, which keeps likelihoods recoverable at any node.

use crate::error::InferenceError;

/// Direction tag for a message.
///
/// Evidence-carrying (`Lambda`) vectors are kept max-normalized; prior-side
/// (`Pi`) vectors are kept sum-normalized. Either way the discarded magnitude
/// is folded into the log scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Lambda,
    Pi,
}

/// A nonnegative vector with a log-domain scale factor.
#[derive(Debug, Clone)]
pub struct MessageVector {
    kind: MessageKind,
    values: Vec<f64>,
    log_scale: f64,
}

impl MessageVector {
    /// Wrap raw values as an evidence-side message and rescale.
    ///
    /// Fails with [`InferenceError::ZeroEvidenceProbability`] when every entry
    /// is zero, since an all-zero message proves the conditioned evidence is
    /// impossible.
    pub fn lambda(values: Vec<f64>) -> Result<Self, InferenceError> {
        Self::build(MessageKind::Lambda, values, 0.0)
    }

    /// Wrap raw values as a prior-side message and rescale.
    pub fn pi(values: Vec<f64>) -> Result<Self, InferenceError> {
        Self::build(MessageKind::Pi, values, 0.0)
    }

    /// Wrap raw values produced under an existing log scale.
    pub fn with_scale(
        kind: MessageKind,
        values: Vec<f64>,
        log_scale: f64,
    ) -> Result<Self, InferenceError> {
        Self::build(kind, values, log_scale)
    }

    /// An all-ones evidence message (no information).
    pub fn uninformative(len: usize) -> Self {
        Self {
            kind: MessageKind::Lambda,
            values: vec![1.0; len],
            log_scale: 0.0,
        }
    }

    fn build(kind: MessageKind, values: Vec<f64>, log_scale: f64) -> Result<Self, InferenceError> {
        let mut msg = Self {
            kind,
            values,
            log_scale,
        };
        msg.rescale()?;
        Ok(msg)
    }

    /// Renormalize in place, folding the removed magnitude into the log scale.
    ///
    /// `Lambda` messages are scaled so their maximum entry is one, `Pi`
    /// messages so their entries sum to one.
    pub fn rescale(&mut self) -> Result<(), InferenceError> {
        let norm = match self.kind {
            MessageKind::Lambda => self.values.iter().cloned().fold(0.0_f64, f64::max),
            MessageKind::Pi => self.values.iter().sum(),
        };
        if norm <= 0.0 || !norm.is_finite() {
            return Err(InferenceError::ZeroEvidenceProbability);
        }
        if norm != 1.0 {
            for v in &mut self.values {
                *v /= norm;
            }
            self.log_scale += norm.ln();
        }
        Ok(())
    }

    pub fn kind(&self) -> MessageKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Normalized entries (without the log-scale factor).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Semantic value of entry `j`, i.e. `values[j] * exp(log_scale)`.
    pub fn semantic(&self, j: usize) -> f64 {
        self.values[j] * self.log_scale.exp()
    }

    /// Log of the semantic sum of all entries.
    pub fn log_total(&self) -> f64 {
        let s: f64 = self.values.iter().sum();
        s.ln() + self.log_scale
    }

    /// Multiply entrywise by another message and rescale.
    pub fn product(&self, other: &Self) -> Result<Self, InferenceError> {
        debug_assert_eq!(self.len(), other.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Self::build(self.kind, values, self.log_scale + other.log_scale)
    }

    /// Entrywise product of `self` with a plain slice, keeping the scale.
    pub fn scaled_by(&self, factor: &[f64]) -> Result<Self, InferenceError> {
        debug_assert_eq!(self.len(), factor.len());
        let values = self
            .values
            .iter()
            .zip(factor)
            .map(|(a, b)| a * b)
            .collect();
        Self::build(self.kind, values, self.log_scale)
    }

    /// A sum-one probability distribution over the domain.
    pub fn to_distribution(&self) -> Result<Vec<f64>, InferenceError> {
        let total: f64 = self.values.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(InferenceError::ZeroEvidenceProbability);
        }
        Ok(self.values.iter().map(|v| v / total).collect())
    }
}
