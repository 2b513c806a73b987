//! Operation counters for the cost model.
//!
//! The protocol's complexity analysis counts three expensive operations:
//! exponentiations modulo n² (`C_n`), pairing evaluations (`C_e`), and
//! scalar multiplications in the signature group (`C_m`). Multiplications
//! modulo n² are tracked too, but they are negligible next to the others
//! and the cost model omits them.
//!
//! A [`Meter`] is plain data owned by whoever is measuring; it is passed
//! by mutable reference into the operations it instruments, so counters
//! stay per-call-context and nothing is global.

use serde::{Deserialize, Serialize};

/// Counts of the cost-relevant operations performed through this meter.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meter {
    /// Exponentiations modulo n² (`C_n`).
    pub exp_n2: u64,
    /// Multiplications modulo n² (reported, not part of the cost model).
    pub mul_n2: u64,
    /// Pairing evaluations (`C_e`).
    pub pairings: u64,
    /// Scalar multiplications in the signature group (`C_m`).
    pub mul_g: u64,
}

impl Meter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fold another meter's counts into this one.
    pub fn absorb(&mut self, other: &Meter) {
        self.exp_n2 += other.exp_n2;
        self.mul_n2 += other.mul_n2;
        self.pairings += other.pairings;
        self.mul_g += other.mul_g;
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// Counts accumulated since an earlier snapshot of the same meter.
    pub fn delta_since(&self, earlier: &Meter) -> Meter {
        Meter {
            exp_n2: self.exp_n2 - earlier.exp_n2,
            mul_n2: self.mul_n2 - earlier.mul_n2,
            pairings: self.pairings - earlier.pairings,
            mul_g: self.mul_g - earlier.mul_g,
        }
    }
}
