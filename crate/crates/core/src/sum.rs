//! Compensated floating-point accumulation.
//!
//! The trace sums accumulate tens of thousands of terms of wildly varying
//! magnitude and are then compared across grid refinements, so plain
//! `f64` accumulation is not good enough: the module-level invariants
//! promise that refining a read-out grid never changes the value reported
//! at an existing grid point. A Neumaier (improved Kahan) accumulator
//! makes the running sum a pure function of the sequence of addends,
//! independent of where snapshots are taken.

/// Neumaier compensated summation.
///
/// `value()` may be read at any point without disturbing the state, which
/// is what makes snapshot-style read-outs stable under grid refinement.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// Add one term.
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Current compensated value of the sum.
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
