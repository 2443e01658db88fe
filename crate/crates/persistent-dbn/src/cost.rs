//! Platform-independent operation counting.
//!
//! Wall-clock timings depend on the machine, so every inference routine also
//! reports how much arithmetic it did. The counter tracks floating-point
//! multiply/add work in the inner loops; constant-factor bookkeeping is not
//! counted. Counts are comparable across algorithms within this crate and are
//! what the scaling experiments measure.

/// Running operation count for one inference call.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Cost {
    ops: u64,
}

impl Cost {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record `n` elementary operations.
    #[inline]
    pub fn add(&mut self, n: u64) {
        self.ops += n;
    }

    /// Total operations recorded so far.
    #[inline]
    pub fn total(&self) -> u64 {
        self.ops
    }
}
