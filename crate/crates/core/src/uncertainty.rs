//! Confidence bounds on workload error computed from a released trace.
//!
//! Queries contained in some measured marginal are bounded through an
//! inverse-variance weighted estimate. Others are bounded through the
//! exponential-mechanism guarantee of the last round that offered them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::aim::Trace;
use crate::data::{l1, AttrSet, Dataset, Domain, Marginal, Workload};
use crate::error::{Error, Result};
use crate::pgm::Measurement;

/// `√(2 ln 2)`.
const SQRT_2_LN_2: f64 = 1.177_410_022_515_474_6;

/// Combines every measurement whose scope contains `r`. Returns the estimate
/// `ȳ_r` and its per-cell noise scale `σ̄_r`.
pub fn weighted_average_estimator(
    measurements: &[Measurement],
    domain: &Domain,
    r: &AttrSet,
) -> Result<(Marginal, f64)> {
    domain.check(r)?;
    let n_r = domain.cells(r) as f64;
    let mut acc = vec![0.0; domain.cells(r)];
    let mut precision = 0.0;
    for m in measurements.iter().filter(|m| r.is_subset(&m.attrs)) {
        let var = m.noisy.len() as f64 * m.sigma * m.sigma / n_r;
        let projected = m.marginal().project(domain, r);
        for (a, y) in acc.iter_mut().zip(projected.counts()) {
            *a += y / var;
        }
        precision += 1.0 / var;
    }
    if precision == 0.0 {
        return Err(Error::UnsupportedQuery(r.clone()));
    }
    acc.iter_mut().for_each(|a| *a /= precision);
    Ok((Marginal::new(r.clone(), acc), (1.0 / precision).sqrt()))
}

/// High-probability bound on `‖ȳ_r − M_r(D)‖₁`, holding with probability at
/// least `1 − exp(−λ²)`.
pub fn supported_bound(sigma_bar: f64, cells: usize, lambda: f64) -> f64 {
    let n = cells as f64;
    SQRT_2_LN_2 * sigma_bar * n + lambda * sigma_bar * (2.0 * n).sqrt()
}

/// Bound on `‖M_r(D) − M_r(p̂_{t−1})‖₁` from round `round` (index into
/// `trace.rounds`), holding with probability at least
/// `1 − exp(−λ₁²/2) − exp(−λ₂)`. Infinite when `w_r = 0`.
pub fn unsupported_bound(trace: &Trace, r: &AttrSet, round: usize, lambda1: f64, lambda2: f64) -> Result<f64> {
    let rd = trace.rounds.get(round).ok_or_else(|| Error::InvalidParameter(format!("no round {round} in trace")))?;
    let cand = rd.candidate(r).ok_or_else(|| Error::NotInCandidateSet { query: r.clone(), round: rd.t })?;
    let chosen =
        rd.candidate(&rd.attrs).ok_or_else(|| Error::NotInCandidateSet { query: rd.attrs.clone(), round: rd.t })?;
    if cand.weight <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let em_scale = 2.0 * rd.sensitivity / rd.epsilon;
    let b_r = chosen.weight * l1(&rd.model_before, &rd.noisy)
        + rd.penalty * (cand.weight * cand.cells as f64 - chosen.weight * chosen.cells as f64)
        + em_scale * (rd.candidates.len() as f64).ln();
    let bound = (b_r + lambda1 * rd.sigma * (chosen.cells as f64).sqrt() + lambda2 * em_scale) / cand.weight;
    Ok(bound.max(0.0))
}

/// Index into `trace.rounds` of the last round whose candidate set holds `r`.
pub fn last_round_offering(trace: &Trace, r: &AttrSet) -> Option<usize> {
    trace.rounds.iter().rposition(|rd| rd.candidate(r).is_some())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambdas {
    pub confidence: f64,
    pub lambda: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Lambdas {
    /// At 0.95 the settings are `(1.7, 2.7, 3.7)`; otherwise `λ` solves
    /// `1 − e^{−λ²} = c` and the unsupported failure mass is split evenly.
    pub fn for_confidence(confidence: f64) -> Result<Lambdas> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::InvalidParameter(format!("confidence must be in (0, 1), got {confidence}")));
        }
        if (confidence - 0.95).abs() < 1e-12 {
            return Ok(Lambdas { confidence, lambda: 1.7, lambda1: 2.7, lambda2: 3.7 });
        }
        let fail = 1.0 - confidence;
        Ok(Lambdas {
            confidence,
            lambda: (-fail.ln()).sqrt(),
            lambda1: (2.0 * (2.0 / fail).ln()).sqrt(),
            lambda2: (2.0 / fail).ln(),
        })
    }

    pub fn supported_level(&self) -> f64 {
        1.0 - (-self.lambda * self.lambda).exp()
    }

    pub fn unsupported_level(&self) -> f64 {
        1.0 - (-self.lambda1 * self.lambda1 / 2.0).exp() - (-self.lambda2).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Supported,
    Unsupported,
    Unbounded,
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundKind::Supported => "supported",
            BoundKind::Unsupported => "unsupported",
            BoundKind::Unbounded => "unbounded",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub attrs: AttrSet,
    pub kind: BoundKind,
    /// Bound on `‖M_r(D) − M_r(D̂)‖₁` in counts; infinite when unbounded.
    pub bound: f64,
    /// Achieved confidence of the rule used.
    pub confidence: f64,
    /// Round number `t` (1-based) for unsupported rows.
    pub round: Option<usize>,
    /// Measurements combined for supported rows.
    pub sources: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lambdas: Lambdas,
    pub rows: Vec<BoundRow>,
}

/// Bounds for every query in the workload's downward closure. With a
/// synthetic dataset the bound covers its marginals; without one it covers
/// the point estimate the rule is built on.
pub fn bound_report(
    trace: &Trace,
    synthetic: Option<&Dataset>,
    workload: &Workload,
    confidence: f64,
) -> Result<BoundReport> {
    let domain = &trace.domain;
    workload.check(domain)?;
    if let Some(s) = synthetic {
        if s.domain() != domain {
            return Err(Error::DomainMismatch("synthetic data does not match the trace domain".into()));
        }
    }
    let lambdas = Lambdas::for_confidence(confidence)?;
    let measurements = trace.measurements();
    let mut rows = Vec::new();
    for r in workload.downward_closure() {
        let synth = synthetic.map(|s| s.marginal(&r)).transpose()?;
        let sources = measurements.iter().filter(|m| r.is_subset(&m.attrs)).count();
        let row = if sources > 0 {
            let (est, sigma_bar) = weighted_average_estimator(&measurements, domain, &r)?;
            let extra = synth.as_ref().map_or(0.0, |m| m.l1_distance(&est));
            BoundRow {
                bound: supported_bound(sigma_bar, est.len(), lambdas.lambda) + extra,
                kind: BoundKind::Supported,
                confidence: lambdas.supported_level(),
                round: None,
                sources,
                attrs: r,
            }
        } else {
            let offered = last_round_offering(trace, &r).and_then(|i| {
                let m = trace.rounds[i].candidate(&r)?.model_marginal.clone()?;
                Some((i, m))
            });
            match offered {
                Some((i, model)) => {
                    let b = unsupported_bound(trace, &r, i, lambdas.lambda1, lambdas.lambda2)?;
                    let extra = synth.as_ref().map_or(0.0, |s| l1(s.counts(), &model));
                    BoundRow {
                        bound: b + extra,
                        kind: if b.is_finite() { BoundKind::Unsupported } else { BoundKind::Unbounded },
                        confidence: lambdas.unsupported_level(),
                        round: Some(trace.rounds[i].t),
                        sources: 0,
                        attrs: r,
                    }
                }
                None => BoundRow {
                    bound: f64::INFINITY,
                    kind: BoundKind::Unbounded,
                    confidence: 0.0,
                    round: None,
                    sources: 0,
                    attrs: r,
                },
            }
        };
        rows.push(row);
    }
    Ok(BoundReport { lambdas, rows })
}

impl BoundReport {
    pub fn row(&self, r: &AttrSet) -> Option<&BoundRow> {
        self.rows.iter().find(|row| &row.attrs == r)
    }

    /// Writes one CSV line per query.
    pub fn to_csv<W: Write>(&self, domain: &Domain, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["query", "kind", "bound", "confidence", "round", "sources", "lambda", "lambda1", "lambda2"])?;
        for row in &self.rows {
            let name = row.attrs.iter().map(|a| domain.name(a)).collect::<Vec<_>>().join("+");
            let (lam, lam1, lam2) = match row.kind {
                BoundKind::Supported => (self.lambdas.lambda.to_string(), String::new(), String::new()),
                BoundKind::Unsupported => {
                    (String::new(), self.lambdas.lambda1.to_string(), self.lambdas.lambda2.to_string())
                }
                BoundKind::Unbounded => (String::new(), String::new(), String::new()),
            };
            w.write_record([
                name,
                row.kind.to_string(),
                if row.bound.is_finite() { row.bound.to_string() } else { "inf".into() },
                row.confidence.to_string(),
                row.round.map(|t| t.to_string()).unwrap_or_default(),
                row.sources.to_string(),
                lam,
                lam1,
                lam2,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
