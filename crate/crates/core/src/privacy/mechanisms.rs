use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Marginal;
use crate::error::{Error, Result};

/// Adds i.i.d. `N(0, σ²)` noise to every cell. Sensitivity is fixed at 1.
pub fn gaussian_mechanism<R: Rng + ?Sized>(counts: &Marginal, sigma: f64, rng: &mut R) -> Result<Marginal> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive and finite, got {sigma}")));
    }
    let noisy = counts
        .counts()
        .iter()
        .map(|&c| {
            let z: f64 = StandardNormal.sample(rng);
            c + sigma * z
        })
        .collect();
    Ok(Marginal::new(counts.attrs().clone(), noisy))
}

fn check_exponential(scores: &[f64], epsilon: f64, sensitivity: f64) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::InvalidParameter(format!("sensitivity must be positive, got {sensitivity}")));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite score {s}")));
    }
    Ok(())
}

/// Selects index `i` with probability ∝ `exp(ε·q_i / 2Δ)`, via Gumbel-max.
pub fn exponential_mechanism<R: Rng + ?Sized>(
    scores: &[f64],
    epsilon: f64,
    sensitivity: f64,
    rng: &mut R,
) -> Result<usize> {
    check_exponential(scores, epsilon, sensitivity)?;
    let scale = epsilon / (2.0 * sensitivity);
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &q) in scores.iter().enumerate() {
        // u in (0, 1): -ln(-ln u) is standard Gumbel
        let u: f64 = loop {
            let u = rng.random::<f64>();
            if u > 0.0 {
                break u;
            }
        };
        let key = scale * (q - top) - (-u.ln()).ln();
        if key > best.1 {
            best = (i, key);
        }
    }
    Ok(best.0)
}

/// The exact selection distribution of [`exponential_mechanism`].
pub fn exponential_probabilities(scores: &[f64], epsilon: f64, sensitivity: f64) -> Result<Vec<f64>> {
    check_exponential(scores, epsilon, sensitivity)?;
    let scale = epsilon / (2.0 * sensitivity);
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores.iter().map(|&q| (scale * (q - top)).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}
