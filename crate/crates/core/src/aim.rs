//! AIM: adaptive select-measure-estimate over a workload's downward closure.
//!
//! Each round charges `ε²/8 + 1/(2σ²)`, filters candidates by the junction
//! tree size the model would reach, picks one with the exponential mechanism,
//! measures it with the Gaussian mechanism, and refits. A round whose
//! measurement barely moves the model doubles `ε` and halves `σ`; the last
//! round spends exactly what is left.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{l1, AttrSet, Dataset, Domain, Marginal, Workload};
use crate::error::{Error, Result};
use crate::pgm::{estimate, model_size_mb, EstimateConfig, GraphicalModel, Measurement, StructuralZeros};
use crate::privacy::{
    exponential_mechanism, gaussian_mechanism, zcdp_of_exponential, zcdp_of_gaussian, PrivacyLedger, Rho,
};

pub const TRACE_VERSION: u32 = 1;

/// `√(2/π)`, the mean of a standard half-normal.
pub const HALF_NORMAL_MEAN: f64 = 0.797_884_560_802_865_4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AimConfig {
    pub max_size_mb: f64,
    /// Round budget `T`; `None` means `16·d`.
    pub rounds: Option<usize>,
    /// Fraction of each round's budget spent on measurement.
    pub alpha: f64,
    /// Iteration cap for the fit that produces the released model.
    pub max_iters: usize,
    /// Iteration cap for warm-started refits inside the loop.
    pub refit_iters: usize,
}

impl Default for AimConfig {
    fn default() -> Self {
        AimConfig { max_size_mb: 80.0, rounds: None, alpha: 0.9, max_iters: 2500, refit_iters: 250 }
    }
}

impl AimConfig {
    pub fn rounds_for(&self, d: usize) -> usize {
        self.rounds.unwrap_or(16 * d)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if !(self.max_size_mb > 0.0) {
            return Err(Error::InvalidParameter(format!("max size must be positive, got {}", self.max_size_mb)));
        }
        if self.rounds_for(d) < d {
            return Err(Error::InvalidParameter(format!("rounds ({}) must be at least d ({d})", self.rounds_for(d))));
        }
        if self.max_iters == 0 || self.refit_iters == 0 {
            return Err(Error::InvalidParameter("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// One entry of a round's candidate set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub attrs: AttrSet,
    pub weight: f64,
    pub cells: usize,
    /// `M_r(p̂_{t−1})`, kept only in the last round whose candidate set holds `r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_marginal: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub t: usize,
    pub attrs: AttrSet,
    pub sigma: f64,
    pub epsilon: f64,
    pub noisy: Vec<f64>,
    pub candidates: Vec<Candidate>,
    /// Sensitivity `Δ_t` used by the exponential mechanism.
    pub sensitivity: f64,
    /// Scores were `w·(‖M_r(D) − M_r(p̂)‖₁ − penalty·n_r)`.
    pub penalty: f64,
    pub model_before: Vec<f64>,
    pub model_after: Vec<f64>,
    pub annealed: bool,
    pub final_round: bool,
    pub rho_used: f64,
    /// Footprint of the model fitted after this round's measurement.
    pub model_size_mb: f64,
}

impl Round {
    pub fn measurement(&self) -> Measurement {
        Measurement { attrs: self.attrs.clone(), noisy: self.noisy.clone(), sigma: self.sigma }
    }

    pub fn candidate(&self, r: &AttrSet) -> Option<&Candidate> {
        self.candidates.iter().find(|c| &c.attrs == r)
    }
}

/// Everything released by a run except the synthetic data itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub version: u32,
    pub mechanism: String,
    pub domain: Domain,
    pub rho: f64,
    pub init: Vec<Measurement>,
    pub rounds: Vec<Round>,
    pub ledger: PrivacyLedger,
    pub model_cliques: Vec<AttrSet>,
    pub model_size_mb: f64,
    pub total: f64,
}

impl Trace {
    pub fn measurements(&self) -> Vec<Measurement> {
        self.init.iter().cloned().chain(self.rounds.iter().map(Round::measurement)).collect()
    }

    /// Sum of all charges recomputed from the recorded noise parameters.
    pub fn charged(&self) -> f64 {
        self.init.iter().map(|m| zcdp_of_gaussian(m.sigma)).sum::<f64>()
            + self.rounds.iter().map(|r| zcdp_of_exponential(r.epsilon) + zcdp_of_gaussian(r.sigma)).sum::<f64>()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Trace> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value.get("version").and_then(serde_json::Value::as_u64).unwrap_or(0) as u32;
        if found != TRACE_VERSION {
            return Err(Error::TraceVersion { found, expected: TRACE_VERSION });
        }
        Ok(serde_json::from_value(value)?)
    }
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub synthetic: Dataset,
    pub trace: Trace,
    pub model: GraphicalModel,
}

/// Candidate indices into `closure` whose addition keeps the model within
/// `budget_fraction · max_size_mb`. Falls back to the 1-way candidates.
pub fn candidate_set(
    closure: &[AttrSet],
    selected: &[AttrSet],
    zero_cliques: &[AttrSet],
    budget_fraction: f64,
    max_size_mb: f64,
    domain: &Domain,
) -> Vec<usize> {
    let limit = budget_fraction * max_size_mb;
    let mut base: Vec<AttrSet> = selected.to_vec();
    base.extend(zero_cliques.iter().cloned());
    let current = model_size_mb(&base, domain);
    let mut out: Vec<usize> = closure
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            if limit.is_infinite() {
                return true;
            }
            if base.iter().any(|s| r.is_subset(s)) {
                return current <= limit;
            }
            base.push((*r).clone());
            let size = model_size_mb(&base, domain);
            base.pop();
            size <= limit
        })
        .map(|(i, _)| i)
        .collect();
    if out.is_empty() {
        out = closure.iter().enumerate().filter(|(_, r)| r.len() == 1).map(|(i, _)| i).collect();
    }
    out
}

/// `w·(‖M_r(D) − M_r(p̂)‖₁ − √(2/π)·σ·n_r)`.
pub fn quality_score(weight: f64, l1_gap: f64, sigma: f64, cells: usize) -> f64 {
    weight * (l1_gap - HALF_NORMAL_MEAN * sigma * cells as f64)
}

pub fn quality_scores(truth: &[&Marginal], model: &[&Marginal], weights: &[f64], sigma: f64) -> Vec<f64> {
    truth
        .iter()
        .zip(model)
        .zip(weights)
        .map(|((d, m), &w)| quality_score(w, d.l1_distance(m), sigma, d.len()))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anneal {
    pub sigma: f64,
    pub epsilon: f64,
    pub annealed: bool,
    pub final_round: bool,
}

/// Budget annealing after a round whose measurement moved the model by
/// `change` (L1) on a marginal with `cells` cells.
pub fn anneal(change: f64, cells: usize, sigma: f64, epsilon: f64, remaining: f64, alpha: f64) -> Anneal {
    let annealed = change <= HALF_NORMAL_MEAN * sigma * cells as f64;
    let (sigma, epsilon) = if annealed { (sigma / 2.0, epsilon * 2.0) } else { (sigma, epsilon) };
    finalize(sigma, epsilon, remaining, alpha, annealed)
}

fn finalize(sigma: f64, epsilon: f64, remaining: f64, alpha: f64, annealed: bool) -> Anneal {
    if remaining <= 2.0 * (zcdp_of_gaussian(sigma) + zcdp_of_exponential(epsilon)) {
        Anneal {
            sigma: (1.0 / (2.0 * alpha * remaining)).sqrt(),
            epsilon: (8.0 * (1.0 - alpha) * remaining).sqrt(),
            annealed,
            final_round: true,
        }
    } else {
        Anneal { sigma, epsilon, annealed, final_round: false }
    }
}

/// Measures every 1-way marginal in the closure at noise `sigma0` and fits.
pub fn initialize<R: Rng + ?Sized>(
    data: &Dataset,
    closure: &[AttrSet],
    sigma0: f64,
    ledger: &mut PrivacyLedger,
    zeros: &StructuralZeros,
    fit: &EstimateConfig,
    rng: &mut R,
) -> Result<(GraphicalModel, Vec<Measurement>)> {
    let mut measurements = Vec::new();
    for r in closure.iter().filter(|r| r.len() == 1) {
        ledger.charge(zcdp_of_gaussian(sigma0))?;
        let noisy = gaussian_mechanism(&data.marginal(r)?, sigma0, rng)?;
        measurements.push(Measurement::new(noisy, sigma0));
    }
    let model = estimate(&measurements, data.domain(), zeros, fit, None)?;
    Ok((model, measurements))
}

pub fn run_aim<R: Rng + ?Sized>(
    data: &Dataset,
    workload: &Workload,
    rho: Rho,
    config: &AimConfig,
    zeros: &StructuralZeros,
    rng: &mut R,
) -> Result<Synthesis> {
    let domain = data.domain();
    config.validate(domain.d())?;
    workload.check(domain)?;
    if workload.is_empty() {
        return Err(Error::InvalidParameter("workload is empty".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(rho.value() > 0.0) {
        return Err(Error::InvalidParameter("rho must be positive".into()));
    }
    let closure = workload.downward_closure();
    let weights: Vec<f64> = closure.iter().map(|r| workload.weight(r)).collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidParameter("every workload weight is zero".into()));
    }
    let zero_cliques = zeros.cliques();
    let one_way: Vec<AttrSet> = closure.iter().filter(|r| r.len() == 1).cloned().collect();
    let mut base = one_way.clone();
    base.extend(zero_cliques.iter().cloned());
    let init_size = model_size_mb(&base, domain);
    if init_size > config.max_size_mb {
        return Err(Error::MemoryCap { size_mb: init_size, cap_mb: config.max_size_mb });
    }

    let (alpha, total_rho) = (config.alpha, rho.value());
    let t_cap = config.rounds_for(domain.d()) as f64;
    let sigma0 = (t_cap / (2.0 * alpha * total_rho)).sqrt();
    let eps0 = (8.0 * (1.0 - alpha) * total_rho / t_cap).sqrt();
    let refit = EstimateConfig { max_iters: config.refit_iters, max_size_mb: config.max_size_mb, ..Default::default() };
    let full = EstimateConfig { max_iters: config.max_iters, ..refit.clone() };

    let mut ledger = PrivacyLedger::new(rho);
    let (mut model, mut measurements) = initialize(data, &closure, sigma0, &mut ledger, zeros, &refit, rng)?;
    let init = measurements.clone();
    let truth: Vec<Marginal> = closure.iter().map(|r| data.marginal(r)).collect::<Result<_>>()?;

    // with a small T the first round may already need the remaining budget
    let start = finalize(sigma0, eps0, ledger.remaining(), alpha, false);
    let (mut sigma, mut eps, mut last) = (start.sigma, start.epsilon, start.final_round);
    let mut selected = one_way;
    let mut rounds: Vec<Round> = Vec::new();
    let mut holder: HashMap<AttrSet, (usize, usize)> = HashMap::new();

    loop {
        let t = rounds.len() + 1;
        ledger.charge(zcdp_of_exponential(eps) + zcdp_of_gaussian(sigma))?;
        let cand =
            candidate_set(&closure, &selected, &zero_cliques, ledger.fraction_used(), config.max_size_mb, domain);
        let model_marg: Vec<Marginal> =
            cand.iter().map(|&i| model.infer_marginal(&closure[i])).collect::<Result<_>>()?;
        let cand_w: Vec<f64> = cand.iter().map(|&i| weights[i]).collect();
        let truth_c: Vec<&Marginal> = cand.iter().map(|&i| &truth[i]).collect();
        let scores = quality_scores(&truth_c, &model_marg.iter().collect::<Vec<_>>(), &cand_w, sigma);
        let top_w = cand_w.iter().copied().fold(0.0, f64::max);
        // all-zero weights make every score 0; any positive Δ gives the same uniform choice
        let delta = if top_w > 0.0 { top_w } else { 1.0 };
        let pick = exponential_mechanism(&scores, eps, delta, rng)?;
        let r_t = closure[cand[pick]].clone();

        let noisy = gaussian_mechanism(&truth[cand[pick]], sigma, rng)?;
        measurements.push(Measurement::new(noisy.clone(), sigma));
        if !selected.contains(&r_t) {
            selected.push(r_t.clone());
        }
        let before = model_marg[pick].counts().to_vec();
        model = estimate(&measurements, domain, zeros, if last { &full } else { &refit }, Some(&model))?;
        let after = model.infer_marginal(&r_t)?.into_counts();
        let next = anneal(l1(&after, &before), before.len(), sigma, eps, ledger.remaining(), alpha);

        let candidates = cand
            .iter()
            .zip(model_marg)
            .enumerate()
            .map(|(j, (&i, m))| {
                if let Some((rt, cj)) = holder.insert(closure[i].clone(), (rounds.len(), j)) {
                    rounds[rt].candidates[cj].model_marginal = None;
                }
                Candidate {
                    attrs: closure[i].clone(),
                    weight: weights[i],
                    cells: m.len(),
                    model_marginal: Some(m.into_counts()),
                }
            })
            .collect();
        log::debug!("round {t}: selected {r_t} sigma={sigma:.4} eps={eps:.4} used={:.6}/{total_rho}", ledger.spent());
        rounds.push(Round {
            t,
            attrs: r_t,
            sigma,
            epsilon: eps,
            noisy: noisy.into_counts(),
            candidates,
            sensitivity: delta,
            penalty: HALF_NORMAL_MEAN * sigma,
            model_before: before,
            model_after: after,
            annealed: next.annealed,
            final_round: last,
            rho_used: ledger.spent(),
            model_size_mb: model.size_mb(),
        });
        if last {
            break;
        }
        (sigma, eps, last) = (next.sigma, next.epsilon, next.final_round);
    }

    let rows = model.total().round().max(1.0) as usize;
    let synthetic = model.synthesize(rows, rng);
    let trace = Trace {
        version: TRACE_VERSION,
        mechanism: "aim".into(),
        domain: domain.clone(),
        rho: total_rho,
        init,
        rounds,
        ledger,
        model_cliques: model.junction_tree().cliques().to_vec(),
        model_size_mb: model.size_mb(),
        total: model.total(),
    };
    Ok(Synthesis { synthetic, trace, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn correlated(n: usize, seed: u64) -> Dataset {
        let domain = Domain::with_sizes([("a", 2), ("b", 2), ("c", 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let recs = (0..n)
            .map(|_| {
                let x = rng.random_range(0..2u32);
                vec![x, x, x]
            })
            .collect();
        Dataset::new(domain, recs).unwrap()
    }

    #[test]
    fn quality_example() {
        let q = quality_score(3.0, 10.0, 1.0, 4);
        assert!((q - 3.0 * (10.0 - HALF_NORMAL_MEAN * 4.0)).abs() < 1e-12);
        assert!((q - 20.4253).abs() < 1e-3);
        assert!((HALF_NORMAL_MEAN - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn anneal_triggers_and_final_override() {
        let a = anneal(0.0, 4, 2.0, 0.1, 1e6, 0.9);
        assert!(a.annealed && !a.final_round);
        assert_eq!((a.sigma, a.epsilon), (1.0, 0.2));

        let b = anneal(1e9, 4, 2.0, 0.1, 1e6, 0.9);
        assert!(!b.annealed);
        assert_eq!((b.sigma, b.epsilon), (2.0, 0.1));

        let r = 0.01;
        let c = anneal(1e9, 4, 2.0, 0.1, r, 0.9);
        assert!(c.final_round);
        let spend = zcdp_of_gaussian(c.sigma) + zcdp_of_exponential(c.epsilon);
        assert!((spend - r).abs() < 1e-15);
    }

    #[test]
    fn candidates_respect_size_and_fallback() {
        let domain = Domain::with_sizes([("a", 10), ("b", 10), ("c", 10)]).unwrap();
        let w = Workload::all_k_way(&domain, 2).unwrap();
        let closure = w.downward_closure();
        let ones: Vec<AttrSet> = (0..3).map(AttrSet::single).collect();
        let all = candidate_set(&closure, &ones, &[], 1.0, f64::INFINITY, &domain);
        assert_eq!(all.len(), closure.len());
        // 100-cell cliques need 0.0008 MB, singletons 0.00024
        let tight = candidate_set(&closure, &ones, &[], 1.0, 0.0005, &domain);
        assert!(tight.iter().all(|&i| closure[i].len() == 1));
        let none = candidate_set(&closure, &ones, &[], 1e-9, 1.0, &domain);
        assert_eq!(none.len(), 3);
        // any pair alone: 110 cells; next to a zero clique on {a,b}: 200
        let zero = AttrSet::new([0, 1]);
        let without = candidate_set(&closure, &ones, &[], 1.0, 0.0012, &domain);
        assert_eq!(without.len(), 6);
        let with_zero = candidate_set(&closure, &ones, std::slice::from_ref(&zero), 1.0, 0.0012, &domain);
        let kept: Vec<&AttrSet> = with_zero.iter().map(|&i| &closure[i]).filter(|r| r.len() == 2).collect();
        assert_eq!(kept, vec![&zero]);
    }

    #[test]
    fn budget_is_spent_exactly() {
        let data = correlated(500, 1);
        let w = Workload::all_k_way(data.domain(), 2).unwrap();
        for (seed, rho) in [(1, 0.05), (2, 1.0), (3, 5.0)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out =
                run_aim(&data, &w, Rho::new(rho).unwrap(), &AimConfig::default(), &StructuralZeros::none(), &mut rng)
                    .unwrap();
            assert!((out.trace.ledger.spent() - rho).abs() < 1e-9);
            assert!((out.trace.charged() - rho).abs() < 1e-9);
            assert!(out.trace.rounds.last().unwrap().final_round);
            for r in &out.trace.rounds {
                assert!(r.candidate(&r.attrs).is_some());
            }
        }
    }

    #[test]
    fn small_round_budget_still_exact() {
        let data = correlated(200, 2);
        let w = Workload::all_k_way(data.domain(), 2).unwrap();
        let cfg = AimConfig { rounds: Some(3), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = run_aim(&data, &w, Rho::new(0.5).unwrap(), &cfg, &StructuralZeros::none(), &mut rng).unwrap();
        assert!((out.trace.ledger.spent() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn model_marginals_kept_once_per_query() {
        let data = correlated(300, 3);
        let w = Workload::all_k_way(data.domain(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = run_aim(&data, &w, Rho::new(1.0).unwrap(), &AimConfig::default(), &StructuralZeros::none(), &mut rng)
            .unwrap();
        for r in w.downward_closure() {
            let holders: Vec<usize> = out
                .trace
                .rounds
                .iter()
                .filter(|rd| rd.candidate(&r).is_some_and(|c| c.model_marginal.is_some()))
                .map(|rd| rd.t)
                .collect();
            let last = out.trace.rounds.iter().rev().find(|rd| rd.candidate(&r).is_some()).map(|rd| rd.t);
            assert_eq!(holders, last.into_iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn trace_round_trips_and_checks_version() {
        let data = correlated(100, 4);
        let w = Workload::all_k_way(data.domain(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = run_aim(&data, &w, Rho::new(0.2).unwrap(), &AimConfig::default(), &StructuralZeros::none(), &mut rng)
            .unwrap();
        let text = out.trace.to_json().unwrap();
        assert_eq!(Trace::from_json(&text).unwrap(), out.trace);
        let bumped = text.replacen("\"version\": 1", "\"version\": 99", 1);
        assert!(matches!(Trace::from_json(&bumped), Err(Error::TraceVersion { found: 99, .. })));
    }

    #[test]
    fn init_measures_only_workload_attributes() {
        let domain = Domain::with_sizes([("a", 2), ("b", 2), ("c", 2), ("d", 2), ("e", 2)]).unwrap();
        let data = Dataset::new(domain, vec![vec![0, 1, 0, 1, 0]; 20]).unwrap();
        let w = Workload::new(vec![(AttrSet::new([1, 3]), 1.0)]).unwrap();
        let mut ledger = PrivacyLedger::new(Rho::new(1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, ms) = initialize(
            &data,
            &w.downward_closure(),
            3.0,
            &mut ledger,
            &StructuralZeros::none(),
            &EstimateConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(ms.len(), 2);
        assert!((ledger.spent() - 2.0 * zcdp_of_gaussian(3.0)).abs() < 1e-15);
    }
}
