//! Workload error and its subsampling interpretation.

use crate::data::{l1, AttrSet, Dataset, Workload};
use crate::error::{Error, Result};
use crate::pgm::Measurement;

fn check_pair(data: &Dataset, synthetic: &Dataset, workload: &Workload) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.domain() != synthetic.domain() {
        return Err(Error::DomainMismatch("original and synthetic data use different domains".into()));
    }
    workload.check(data.domain())
}

/// `(1/|D|)·‖M_r(D) − M_r(D̂)‖₁` for each query, in workload order.
pub fn per_query_errors(data: &Dataset, synthetic: &Dataset, workload: &Workload) -> Result<Vec<(AttrSet, f64)>> {
    check_pair(data, synthetic, workload)?;
    let n = data.len() as f64;
    workload
        .queries()
        .iter()
        .map(|(r, _)| Ok((r.clone(), data.marginal(r)?.l1_distance(&synthetic.marginal(r)?) / n)))
        .collect()
}

/// `(1/(k·|D|))·Σ_i c_i·‖M_{r_i}(D) − M_{r_i}(D̂)‖₁`.
pub fn workload_error(data: &Dataset, synthetic: &Dataset, workload: &Workload) -> Result<f64> {
    let errs = per_query_errors(data, synthetic, workload)?;
    Ok(weighted_mean(workload, errs.iter().map(|(_, e)| *e)))
}

fn weighted_mean(workload: &Workload, errs: impl Iterator<Item = f64>) -> f64 {
    let k = workload.len() as f64;
    workload.queries().iter().zip(errs).map(|((_, c), e)| c * e).sum::<f64>() / k
}

/// Per-query errors of direct noisy answers, matched to queries by scope.
pub fn per_query_answer_errors(
    data: &Dataset,
    answers: &[Measurement],
    workload: &Workload,
) -> Result<Vec<(AttrSet, f64)>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    workload.check(data.domain())?;
    let n = data.len() as f64;
    workload
        .queries()
        .iter()
        .map(|(r, _)| {
            let ans = answers
                .iter()
                .find(|m| &m.attrs == r)
                .ok_or_else(|| Error::InvalidParameter(format!("no answer for query {r}")))?;
            Ok((r.clone(), l1(data.marginal(r)?.counts(), &ans.noisy) / n))
        })
        .collect()
}

pub fn answers_workload_error(data: &Dataset, answers: &[Measurement], workload: &Workload) -> Result<f64> {
    let errs = per_query_answer_errors(data, answers, workload)?;
    Ok(weighted_mean(workload, errs.iter().map(|(_, e)| *e)))
}

/// `E‖μ − M(D̂)/K‖₁` when `D̂` is `K` draws with replacement from `μ`.
pub fn expected_subsample_error(mu: &[f64], k: u64) -> f64 {
    let kf = k as f64;
    let ln_k_fact = libm::lgamma(kf + 1.0);
    let total: f64 = mu
        .iter()
        .filter(|&&p| p > 0.0 && p < 1.0)
        .map(|&p| {
            let s = (kf * p).ceil().clamp(1.0, kf);
            let ln_choose = ln_k_fact - libm::lgamma(s + 1.0) - libm::lgamma(kf - s + 1.0);
            s * (ln_choose + s * p.ln() + (kf - s + 1.0) * (1.0 - p).ln()).exp()
        })
        .sum();
    2.0 * total / kf
}

/// Normalized workload marginals of `data` with their weights.
pub fn normalized_marginals(data: &Dataset, workload: &Workload) -> Result<Vec<(Vec<f64>, f64)>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len() as f64;
    workload
        .queries()
        .iter()
        .map(|(r, c)| Ok((data.marginal(r)?.counts().iter().map(|x| x / n).collect(), *c)))
        .collect()
}

/// Workload-averaged expected subsampling error at sample size `k`.
pub fn expected_workload_error(marginals: &[(Vec<f64>, f64)], k: u64) -> f64 {
    let q = marginals.len() as f64;
    marginals.iter().map(|(mu, c)| c * expected_subsample_error(mu, k)).sum::<f64>() / q
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalentSample {
    pub k: u64,
    pub fraction: f64,
}

/// Sample size `K ≤ N` whose expected workload error is closest to
/// `achieved`, as a fraction of `N`. Capped at 1 when `K = N` is still worse.
pub fn equivalent_sample_fraction(data: &Dataset, workload: &Workload, achieved: f64) -> Result<EquivalentSample> {
    if !(achieved >= 0.0) {
        return Err(Error::InvalidParameter(format!("achieved error must be non-negative, got {achieved}")));
    }
    let marginals = normalized_marginals(data, workload)?;
    let n = data.len() as u64;
    Ok(equivalent_sample(&marginals, n, achieved))
}

/// Grid ratio between consecutive sample sizes in the coarse scan.
const GRID_RATIO: f64 = 1.05;

pub fn equivalent_sample(marginals: &[(Vec<f64>, f64)], n: u64, achieved: f64) -> EquivalentSample {
    let err = |k: u64| expected_workload_error(marginals, k);
    let full = EquivalentSample { k: n, fraction: 1.0 };
    if achieved <= err(n) {
        return full;
    }
    let mut grid = vec![1u64];
    while *grid.last().expect("non-empty") < n {
        let last = *grid.last().expect("non-empty");
        grid.push(((last as f64 * GRID_RATIO).ceil() as u64).max(last + 1).min(n));
    }
    let values: Vec<f64> = grid.iter().map(|&k| err(k)).collect();
    let (mut best_k, mut best_gap) = (n, (err(n) - achieved).abs());
    let mut consider = |k: u64, e: f64| {
        let gap = (e - achieved).abs();
        if gap < best_gap || (gap == best_gap && k > best_k) {
            best_k = k;
            best_gap = gap;
        }
    };
    for (&k, &e) in grid.iter().zip(&values) {
        consider(k, e);
    }
    // bisect every bracket where the error crosses the target
    for i in 0..grid.len() - 1 {
        let (lo_e, hi_e) = (values[i], values[i + 1]);
        if (lo_e - achieved) * (hi_e - achieved) > 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let above = lo_e >= achieved;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let e = err(mid);
            consider(mid, e);
            if (e >= achieved) == above {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    EquivalentSample { k: best_k, fraction: best_k as f64 / n as f64 }
}
