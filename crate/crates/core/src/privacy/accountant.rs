//! zCDP costs of the Gaussian and exponential mechanisms and conversion to
//! approximate (ε, δ)-DP.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A zCDP budget `ρ`. Always finite and non-negative.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rho(f64);

impl Rho {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Rho(value))
        } else {
            Err(Error::InvalidParameter(format!("rho must be finite and >= 0, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `1 / (2σ²)`
pub fn zcdp_of_gaussian(sigma: f64) -> f64 {
    1.0 / (2.0 * sigma * sigma)
}

/// `ε² / 8`
pub fn zcdp_of_exponential(epsilon: f64) -> f64 {
    epsilon * epsilon / 8.0
}

const ALPHA_LO: f64 = 1.0 + 1e-6;
const ALPHA_HI: f64 = 1e4;
const ALPHA_TOL: f64 = 1e-10;
const EPS_TOL: f64 = 1e-12;

/// `log δ_α(ε) = (α−1)(αρ−ε) − log(α−1) + α·log(1−1/α)`
fn log_delta_at(alpha: f64, rho: f64, eps: f64) -> f64 {
    (alpha - 1.0) * (alpha * rho - eps) - (alpha - 1.0).ln() + alpha * (-1.0 / alpha).ln_1p()
}

/// `log min_α δ_α(ε)` by golden-section search over α.
fn log_delta(rho: f64, eps: f64) -> f64 {
    // the minimizer sits near (ε + ρ) / 2ρ; widen the bracket when that is past the default
    let hi = ALPHA_HI.max(4.0 * (eps + rho) / rho + 10.0);
    let f = |a: f64| log_delta_at(a, rho, eps);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (ALPHA_LO, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > ALPHA_TOL * a.max(1.0) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b)).min(fc).min(fd)
}

/// Smallest ε ≥ 0 such that a ρ-zCDP mechanism is (ε, δ)-DP.
pub fn zcdp_to_dp(rho: f64, delta: f64) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("rho must be > 0, got {rho}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let target = delta.ln();
    if log_delta(rho, 0.0) <= target {
        return Ok(0.0);
    }
    // classic sufficient epsilon, doubled until it satisfies the target
    let mut hi = rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt();
    while log_delta(rho, hi) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > EPS_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if log_delta(rho, mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Largest ρ whose (ε, δ) conversion does not exceed `epsilon`.
pub fn dp_to_zcdp(epsilon: f64, delta: f64) -> Result<Rho> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let mut hi = epsilon;
    while zcdp_to_dp(hi, delta)? <= epsilon {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > EPS_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if zcdp_to_dp(mid, delta)? <= epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Rho::new(lo)
}
