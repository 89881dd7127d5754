use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Neumaier-compensated floating-point accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Default ceiling on exhaustively enumerated items.
pub const DEFAULT_BUDGET: u64 = 1 << 26;

/// Upper bound on the number of items an exhaustive routine may visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Default for Budget {
    fn default() -> Self {
        Budget(DEFAULT_BUDGET)
    }
}

impl Budget {
    /// Refuses when `required` exceeds the budget; returns it as `u64` otherwise.
    pub fn check(self, what: &'static str, required: &BigUint) -> Result<u64> {
        match u64::try_from(required) {
            Ok(v) if v <= self.0 => Ok(v),
            _ => Err(Error::BudgetExceeded {
                what,
                required: required.clone(),
                budget: self.0,
            }),
        }
    }
}
