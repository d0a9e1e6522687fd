use serde::{Deserialize, Serialize};

use super::Rho;
use crate::error::{Error, Result};

/// Slack allowed when a charge lands exactly on the total.
pub const OVERSPEND_SLACK: f64 = 1e-12;

/// Irrevocable running total of zCDP spent against a fixed budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLedger {
    total: f64,
    spent: f64,
}

impl PrivacyLedger {
    pub fn new(total: Rho) -> Self {
        PrivacyLedger { total: total.value(), spent: 0.0 }
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self) -> f64 {
        (self.total - self.spent).max(0.0)
    }

    pub fn fraction_used(&self) -> f64 {
        if self.total > 0.0 {
            self.spent / self.total
        } else {
            1.0
        }
    }

    pub fn charge(&mut self, rho: f64) -> Result<()> {
        let rho = Rho::new(rho)?.value();
        if self.spent + rho > self.total + OVERSPEND_SLACK {
            return Err(Error::Overspend { spent: self.spent, charge: rho, total: self.total });
        }
        self.spent += rho;
        Ok(())
    }
}
