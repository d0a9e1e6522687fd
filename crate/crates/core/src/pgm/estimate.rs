//! Distribution estimation from noisy marginals by entropic mirror descent.
//!
//! Minimizes `Σ_i (1/σ_i)·‖M_{r_i}(p) − y_i‖²` over scaled distributions
//! `p ≥ 0, Σp = N̂`, with `p` parameterized as a graphical model over the
//! measured cliques. The step size adapts by Armijo backtracking; a step is
//! only taken when it decreases the objective.

use serde::{Deserialize, Serialize};

use super::model::{calibrate, Calibration, FitStats, GraphicalModel, Plan, Potential};
use super::StructuralZeros;
use crate::data::{AttrSet, Domain, Marginal};
use crate::error::{Error, Result};

/// A noisy marginal `y = M_r(D) + N(0, σ²I)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub attrs: AttrSet,
    pub noisy: Vec<f64>,
    pub sigma: f64,
}

impl Measurement {
    pub fn new(noisy: Marginal, sigma: f64) -> Self {
        let attrs = noisy.attrs().clone();
        Measurement { attrs, noisy: noisy.into_counts(), sigma }
    }

    pub fn marginal(&self) -> Marginal {
        Marginal::new(self.attrs.clone(), self.noisy.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub max_iters: usize,
    /// Stop once relative objective improvement stays below this.
    pub rel_tol: f64,
    pub max_size_mb: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig { max_iters: 2500, rel_tol: 1e-9, max_size_mb: 80.0 }
    }
}

/// Consecutive sub-tolerance iterations required before stopping.
const PATIENCE: usize = 5;
const MAX_BACKTRACKS: usize = 40;

/// Inverse-variance weighted mean of the measurement totals, floored at 1.
pub fn estimate_total(measurements: &[Measurement]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for m in measurements {
        let v = m.noisy.len() as f64 * m.sigma * m.sigma;
        num += m.noisy.iter().sum::<f64>() / v;
        den += 1.0 / v;
    }
    if den > 0.0 {
        (num / den).max(1.0)
    } else {
        1.0
    }
}

/// The estimation objective at the given clique marginals.
pub fn objective(measurements: &[Measurement], marginal_of: impl Fn(&AttrSet) -> Vec<f64>) -> f64 {
    measurements
        .iter()
        .map(|m| {
            let mu = marginal_of(&m.attrs);
            m.noisy.iter().zip(&mu).map(|(y, x)| (x - y) * (x - y)).sum::<f64>() / m.sigma
        })
        .sum()
}

struct Problem<'a> {
    measurements: &'a [Measurement],
    /// Potential index fitted by each measurement.
    slot: Vec<usize>,
    plan: Plan,
}

impl Problem<'_> {
    fn loss_and_grad(&self, mu: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
        let mut grad: Vec<Vec<f64>> = mu.iter().map(|m| vec![0.0; m.len()]).collect();
        let mut loss = 0.0;
        for (m, &p) in self.measurements.iter().zip(&self.slot) {
            let w = 1.0 / m.sigma;
            for ((g, &x), &y) in grad[p].iter_mut().zip(&mu[p]).zip(&m.noisy) {
                let diff = x - y;
                loss += w * diff * diff;
                *g += 2.0 * w * diff;
            }
        }
        (loss, grad)
    }
}

/// Fits a graphical model to noisy marginals.
///
/// Structural-zero cells start at log-weight zero mass and stay there. A
/// `warm` model seeds the potentials of cliques it shares with this fit.
pub fn estimate(
    measurements: &[Measurement],
    domain: &Domain,
    zeros: &StructuralZeros,
    config: &EstimateConfig,
    warm: Option<&GraphicalModel>,
) -> Result<GraphicalModel> {
    if measurements.is_empty() {
        return Err(Error::InvalidParameter("estimation needs at least one measurement".into()));
    }
    for m in measurements {
        domain.check(&m.attrs)?;
        if m.noisy.len() != domain.cells(&m.attrs) {
            return Err(Error::InvalidParameter(format!("measurement on {} has wrong length", m.attrs)));
        }
        if !(m.sigma > 0.0 && m.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("measurement sigma must be positive, got {}", m.sigma)));
        }
        if m.noisy.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective);
        }
    }

    let mut scopes: Vec<AttrSet> = Vec::new();
    for r in measurements.iter().map(|m| &m.attrs).chain(zeros.entries().iter().map(|(r, _)| r)) {
        if !scopes.contains(r) {
            scopes.push(r.clone());
        }
    }
    let plan = Plan::new(domain, &scopes);
    let size = plan.tree.size_mb(domain);
    if size > config.max_size_mb {
        return Err(Error::MemoryCap { size_mb: size, cap_mb: config.max_size_mb });
    }

    let mut potentials: Vec<Potential> = scopes
        .iter()
        .map(|r| {
            let theta = warm
                .and_then(|w| w.potentials().iter().find(|p| &p.attrs == r))
                .map(|p| p.theta.clone())
                .unwrap_or_else(|| vec![0.0; domain.cells(r)]);
            let mut p = Potential { attrs: r.clone(), theta, zeros: zeros.cells_for(r).map(<[usize]>::to_vec) };
            p.pin_zeros();
            p
        })
        .collect();

    let slot = measurements.iter().map(|m| scopes.iter().position(|s| s == &m.attrs).expect("listed")).collect();
    let total = estimate_total(measurements);
    let problem = Problem { measurements, slot, plan };
    let n_pots = potentials.len();

    let marginals_of = |cal: &Calibration| -> Vec<Vec<f64>> {
        (0..n_pots)
            .map(|p| {
                let h = problem.plan.host[p];
                let mut out = vec![0.0; domain.cells(&scopes[p])];
                for (&j, &b) in problem.plan.host_map[p].iter().zip(&cal.beliefs[h]) {
                    out[j] += b * total;
                }
                out
            })
            .collect()
    };

    let mut cal = calibrate(&problem.plan, &potentials);
    let mut mu = marginals_of(&cal);
    let (mut loss, mut grad) = problem.loss_and_grad(&mu);
    if !loss.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut stats = FitStats { iterations: 0, objective: vec![loss], converged: false };
    let mut alpha = 1.0 / total;
    let mut quiet = 0;

    for _ in 0..config.max_iters {
        if loss == 0.0 {
            stats.converged = true;
            break;
        }
        alpha *= 2.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial = potentials.clone();
            for (p, g) in trial.iter_mut().zip(&grad) {
                for (t, gi) in p.theta.iter_mut().zip(g) {
                    *t -= alpha * gi;
                }
                p.pin_zeros();
            }
            let trial_cal = calibrate(&problem.plan, &trial);
            let trial_mu = marginals_of(&trial_cal);
            let (trial_loss, trial_grad) = problem.loss_and_grad(&trial_mu);
            let decrease: f64 = grad
                .iter()
                .zip(mu.iter().zip(&trial_mu))
                .map(|(g, (a, b))| g.iter().zip(a.iter().zip(b)).map(|(gi, (x, y))| gi * (x - y)).sum::<f64>())
                .sum();
            if trial_loss.is_finite() && trial_loss < loss && loss - trial_loss >= 0.5 * alpha * decrease {
                accepted = Some((trial, trial_cal, trial_mu, trial_loss, trial_grad));
                break;
            }
            alpha *= 0.5;
        }
        let Some((p, c, m, l, g)) = accepted else {
            stats.converged = true;
            break;
        };
        let improvement = (loss - l) / loss.abs().max(f64::MIN_POSITIVE);
        potentials = p;
        cal = c;
        mu = m;
        loss = l;
        grad = g;
        stats.iterations += 1;
        stats.objective.push(loss);
        if improvement < config.rel_tol {
            quiet += 1;
            if quiet >= PATIENCE {
                stats.converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    let Problem { plan, .. } = problem;
    Ok(GraphicalModel::from_parts(domain.clone(), potentials, total, config.max_size_mb, plan, cal, stats))
}
