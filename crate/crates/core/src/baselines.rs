//! Comparison mechanisms: MWEM+PGM, Independent, and direct Gaussian answers.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aim::{Candidate, Round, Synthesis, Trace, TRACE_VERSION};
use crate::data::{l1, AttrSet, Dataset, Domain, Marginal, Workload};
use crate::error::{Error, Result};
use crate::pgm::{estimate, estimate_total, EstimateConfig, GraphicalModel, Measurement, StructuralZeros};
use crate::privacy::{exponential_mechanism, gaussian_mechanism, zcdp_of_gaussian, PrivacyLedger, Rho};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MwemConfig {
    pub rounds: usize,
    pub max_size_mb: f64,
    pub max_iters: usize,
    pub refit_iters: usize,
}

impl Default for MwemConfig {
    fn default() -> Self {
        MwemConfig { rounds: 10, max_size_mb: 80.0, max_iters: 2500, refit_iters: 250 }
    }
}

fn check_inputs(data: &Dataset, rho: Rho) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(rho.value() > 0.0) {
        return Err(Error::InvalidParameter("rho must be positive".into()));
    }
    Ok(())
}

fn empty_trace(mechanism: &str, domain: &Domain, ledger: PrivacyLedger, init: Vec<Measurement>, total: f64) -> Trace {
    Trace {
        version: TRACE_VERSION,
        mechanism: mechanism.into(),
        domain: domain.clone(),
        rho: ledger.total(),
        init,
        rounds: Vec::new(),
        ledger,
        model_cliques: Vec::new(),
        model_size_mb: 0.0,
        total,
    }
}

/// MWEM with graphical-model estimation. Each of the `T` rounds spends
/// `ρ/T`, half on selection and half on measurement; scores are
/// `‖M_r(D) − M_r(p̂)‖₁ − n_r` with sensitivity 1.
///
/// The size of the data is not public, so the starting model is the uniform
/// distribution with unit mass.
pub fn run_mwem_pgm<R: Rng + ?Sized>(
    data: &Dataset,
    workload: &Workload,
    rho: Rho,
    config: &MwemConfig,
    zeros: &StructuralZeros,
    rng: &mut R,
) -> Result<Synthesis> {
    check_inputs(data, rho)?;
    let domain = data.domain();
    workload.check(domain)?;
    if config.rounds == 0 {
        return Err(Error::InvalidParameter("MWEM+PGM needs at least one round".into()));
    }
    let mut queries: Vec<AttrSet> = Vec::new();
    for (r, _) in workload.queries() {
        if !queries.contains(r) {
            queries.push(r.clone());
        }
    }
    if queries.is_empty() {
        return Err(Error::InvalidParameter("workload is empty".into()));
    }
    let truth: Vec<Marginal> = queries.iter().map(|r| data.marginal(r)).collect::<Result<_>>()?;
    let t_cap = config.rounds as f64;
    let epsilon = (4.0 * rho.value() / t_cap).sqrt();
    let sigma = (t_cap / rho.value()).sqrt();
    let refit = EstimateConfig { max_iters: config.refit_iters, max_size_mb: config.max_size_mb, ..Default::default() };
    let full = EstimateConfig { max_iters: config.max_iters, ..refit.clone() };

    let mut ledger = PrivacyLedger::new(rho);
    let mut model = GraphicalModel::uniform(domain.clone(), 1.0);
    let mut measurements = Vec::new();
    let mut rounds: Vec<Round> = Vec::new();

    for t in 1..=config.rounds {
        let last = t == config.rounds;
        ledger.charge(rho.value() / t_cap)?;
        let model_marg: Vec<Marginal> = queries.iter().map(|r| model.infer_marginal(r)).collect::<Result<_>>()?;
        let scores: Vec<f64> = truth.iter().zip(&model_marg).map(|(d, m)| d.l1_distance(m) - d.len() as f64).collect();
        let pick = exponential_mechanism(&scores, epsilon, 1.0, rng)?;
        let noisy = gaussian_mechanism(&truth[pick], sigma, rng)?;
        measurements.push(Measurement::new(noisy.clone(), sigma));
        let before = model_marg[pick].counts().to_vec();
        model = estimate(&measurements, domain, zeros, if last { &full } else { &refit }, Some(&model))?;
        let after = model.infer_marginal(&queries[pick])?.into_counts();

        // every round offers the full workload, so only this round keeps marginals
        if let Some(prev) = rounds.last_mut() {
            for c in &mut prev.candidates {
                c.model_marginal = None;
            }
        }
        let candidates = queries
            .iter()
            .zip(model_marg)
            .map(|(r, m)| Candidate {
                attrs: r.clone(),
                weight: 1.0,
                cells: m.len(),
                model_marginal: Some(m.into_counts()),
            })
            .collect();
        log::debug!("mwem round {t}: selected {} change={:.3}", queries[pick], l1(&after, &before));
        rounds.push(Round {
            t,
            attrs: queries[pick].clone(),
            sigma,
            epsilon,
            noisy: noisy.into_counts(),
            candidates,
            sensitivity: 1.0,
            penalty: 1.0,
            model_before: before,
            model_after: after,
            annealed: false,
            final_round: last,
            rho_used: ledger.spent(),
            model_size_mb: model.size_mb(),
        });
    }

    let rows = model.total().round().max(1.0) as usize;
    let synthetic = model.synthesize(rows, rng);
    let trace = Trace {
        rounds,
        model_cliques: model.junction_tree().cliques().to_vec(),
        model_size_mb: model.size_mb(),
        ..empty_trace("mwem-pgm", domain, ledger, Vec::new(), model.total())
    };
    Ok(Synthesis { synthetic, trace, model })
}

/// Measures every 1-way marginal at `σ = √(d/(2ρ))` and samples each column
/// independently from its clipped, renormalized noisy marginal.
pub fn run_independent<R: Rng + ?Sized>(data: &Dataset, rho: Rho, rng: &mut R) -> Result<(Dataset, Trace)> {
    check_inputs(data, rho)?;
    let domain = data.domain();
    let d = domain.d();
    let sigma = (d as f64 / (2.0 * rho.value())).sqrt();
    let mut ledger = PrivacyLedger::new(rho);
    let mut measurements = Vec::with_capacity(d);
    for a in 0..d {
        ledger.charge(zcdp_of_gaussian(sigma))?;
        let noisy = gaussian_mechanism(&data.marginal(&AttrSet::single(a))?, sigma, rng)?;
        measurements.push(Measurement::new(noisy, sigma));
    }
    let total = estimate_total(&measurements);
    let rows = total.round().max(1.0) as usize;
    let columns: Vec<Vec<u32>> = measurements
        .iter()
        .map(|m| {
            let probs = project_to_simplex(&m.noisy);
            let dist = WeightedIndex::new(&probs).expect("projected marginal has positive mass");
            (0..rows).map(|_| dist.sample(rng) as u32).collect()
        })
        .collect();
    let cells: Vec<u32> = (0..rows).flat_map(|i| columns.iter().map(move |c| c[i])).collect();
    let synthetic = Dataset::from_flat(domain.clone(), cells);
    Ok((synthetic, empty_trace("independent", domain, ledger, measurements, total)))
}

/// Clips negatives and normalizes to a probability vector; all-nonpositive
/// input maps to uniform.
pub fn project_to_simplex(noisy: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = noisy.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    if s > 0.0 {
        clipped.into_iter().map(|v| v / s).collect()
    } else {
        vec![1.0 / noisy.len() as f64; noisy.len()]
    }
}

/// Per-query budgets `ρ_i ∝ n_i^{2/3}`, summing to `rho`.
pub fn answer_budgets(cells: &[usize], rho: f64) -> Vec<f64> {
    let w: Vec<f64> = cells.iter().map(|&n| (n as f64).powf(2.0 / 3.0)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| rho * x / z).collect()
}

/// Answers every workload query with Gaussian noise; returns the answers in
/// workload order and a trace whose measurements are those answers.
pub fn run_gaussian_answerer<R: Rng + ?Sized>(
    data: &Dataset,
    workload: &Workload,
    rho: Rho,
    rng: &mut R,
) -> Result<(Vec<Measurement>, Trace)> {
    check_inputs(data, rho)?;
    let domain = data.domain();
    workload.check(domain)?;
    if workload.is_empty() {
        return Err(Error::InvalidParameter("workload is empty".into()));
    }
    let cells: Vec<usize> = workload.queries().iter().map(|(r, _)| domain.cells(r)).collect();
    let budgets = answer_budgets(&cells, rho.value());
    let mut ledger = PrivacyLedger::new(rho);
    let mut answers = Vec::with_capacity(budgets.len());
    for ((r, _), &rho_i) in workload.queries().iter().zip(&budgets) {
        let sigma = (1.0 / (2.0 * rho_i)).sqrt();
        ledger.charge(rho_i)?;
        answers.push(Measurement::new(gaussian_mechanism(&data.marginal(r)?, sigma, rng)?, sigma));
    }
    let total = estimate_total(&answers);
    let trace = empty_trace("gaussian", domain, ledger, answers.clone(), total);
    Ok((answers, trace))
}

/// One noisy answer as written to an answers file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerEntry {
    pub attrs: Vec<String>,
    pub sigma: f64,
    pub noisy: Vec<f64>,
}

pub fn answers_to_file(answers: &[Measurement], domain: &Domain) -> Vec<AnswerEntry> {
    answers
        .iter()
        .map(|m| AnswerEntry {
            attrs: m.attrs.iter().map(|a| domain.name(a).to_string()).collect(),
            sigma: m.sigma,
            noisy: m.noisy.clone(),
        })
        .collect()
}

pub fn answers_from_file(entries: &[AnswerEntry], domain: &Domain) -> Result<Vec<Measurement>> {
    entries
        .iter()
        .map(|e| {
            let idx: Vec<usize> = e
                .attrs
                .iter()
                .map(|n| domain.index_of(n).ok_or_else(|| Error::UnknownAttribute(n.clone())))
                .collect::<Result<_>>()?;
            let attrs = AttrSet::new(idx.iter().copied());
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "answer attributes must be listed in domain order: {:?}",
                    e.attrs
                )));
            }
            if e.noisy.len() != domain.cells(&attrs) {
                return Err(Error::DomainMismatch(format!("answer on {:?} has {} cells", e.attrs, e.noisy.len())));
            }
            Ok(Measurement { attrs, noisy: e.noisy.clone(), sigma: e.sigma })
        })
        .collect()
}
