use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::factor::{logsumexp, Factor, LOG_ZERO};
use super::junction_tree::{JunctionTree, BYTES_PER_CELL};
use crate::data::index::{index_map, strides};
use crate::data::{AttrSet, Dataset, Domain, Marginal};
use crate::error::{Error, Result};

/// Log-potential `θ_r` over one clique. Cells flagged in `zeros` are pinned to
/// [`LOG_ZERO`] and never move.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub attrs: AttrSet,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeros: Option<Vec<usize>>,
}

impl Potential {
    pub(crate) fn pin_zeros(&mut self) {
        if let Some(z) = &self.zeros {
            for &i in z {
                self.theta[i] = LOG_ZERO;
            }
        }
    }
}

/// Per-fit bookkeeping from the optimizer.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub iterations: usize,
    pub objective: Vec<f64>,
    pub converged: bool,
}

/// Precomputed structure for message passing over a fixed junction tree.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub tree: JunctionTree,
    pub cells: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Breadth-first from clique 0.
    pub order: Vec<usize>,
    pub sep: Vec<AttrSet>,
    pub to_sep: Vec<Vec<usize>>,
    pub parent_to_sep: Vec<Vec<usize>>,
    pub host: Vec<usize>,
    pub host_map: Vec<Vec<usize>>,
}

impl Plan {
    pub fn new(domain: &Domain, potential_attrs: &[AttrSet]) -> Plan {
        // singletons keep every attribute in the tree; unmeasured ones stay uniform
        let mut cliques: Vec<AttrSet> = potential_attrs.to_vec();
        cliques.extend((0..domain.d()).map(AttrSet::single));
        let tree = JunctionTree::build(&cliques, domain);
        let k = tree.cliques().len();
        let cells = tree.cliques().iter().map(|c| domain.cells(c)).collect();

        let mut adj = vec![Vec::new(); k];
        for (i, j, _) in tree.edges() {
            adj[*i].push(*j);
            adj[*j].push(*i);
        }
        let mut parent = vec![None; k];
        let mut children = vec![Vec::new(); k];
        let mut order = Vec::with_capacity(k);
        let mut seen = vec![false; k];
        if k > 0 {
            seen[0] = true;
            order.push(0);
            let mut head = 0;
            while head < order.len() {
                let u = order[head];
                head += 1;
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        parent[v] = Some(u);
                        children[u].push(v);
                        order.push(v);
                    }
                }
            }
        }
        let sep: Vec<AttrSet> = (0..k)
            .map(|c| match parent[c] {
                Some(p) => tree.cliques()[c].intersection(&tree.cliques()[p]),
                None => AttrSet::empty(),
            })
            .collect();
        let to_sep = (0..k).map(|c| domain.projection_map(&tree.cliques()[c], &sep[c])).collect();
        let parent_to_sep = (0..k)
            .map(|c| match parent[c] {
                Some(p) => domain.projection_map(&tree.cliques()[p], &sep[c]),
                None => Vec::new(),
            })
            .collect();
        let host: Vec<usize> = potential_attrs
            .iter()
            .map(|r| tree.host(r, domain).expect("every potential is covered by the triangulation"))
            .collect();
        let host_map =
            potential_attrs.iter().zip(&host).map(|(r, &h)| domain.projection_map(&tree.cliques()[h], r)).collect();
        Plan { tree, cells, parent, children, order, sep, to_sep, parent_to_sep, host, host_map }
    }
}

/// Messages and normalized beliefs from one sum-product sweep.
///
/// Messages are kept in log space for elimination queries; beliefs are
/// normalized probabilities.
#[derive(Clone, Debug)]
pub(crate) struct Calibration {
    pub log_psi: Vec<Vec<f64>>,
    pub up: Vec<Vec<f64>>,
    pub down: Vec<Vec<f64>>,
    pub beliefs: Vec<Vec<f64>>,
}

/// A table stored as `values · exp(shift)` with `max(values) = 1`.
#[derive(Clone, Debug, Default)]
struct Scaled {
    values: Vec<f64>,
    shift: f64,
}

impl Scaled {
    fn from_log(log_values: &[f64]) -> Scaled {
        let m = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Scaled { values: log_values.iter().map(|v| (v - m).exp()).collect(), shift: m }
    }

    fn times(&mut self, msg: &Scaled, map: &[usize]) {
        for (v, &j) in self.values.iter_mut().zip(map) {
            *v *= msg.values[j];
        }
        self.shift += msg.shift;
    }

    fn sum_to(&self, out_len: usize, map: &[usize]) -> Scaled {
        let mut values = vec![0.0; out_len];
        for (&v, &j) in self.values.iter().zip(map) {
            values[j] += v;
        }
        let m = values.iter().copied().fold(0.0, f64::max);
        if m > 0.0 {
            values.iter_mut().for_each(|v| *v /= m);
            Scaled { values, shift: self.shift + m.ln() }
        } else {
            Scaled { values, shift: LOG_ZERO }
        }
    }

    fn to_log(&self) -> Vec<f64> {
        self.values.iter().map(|&v| if v > 0.0 { v.ln() + self.shift } else { LOG_ZERO }).collect()
    }
}

/// Below this the linear sweep may have lost mass that matters.
const UNDERFLOW_GUARD: f64 = 1e-200;

fn clique_log_potentials(plan: &Plan, potentials: &[Potential]) -> Vec<Vec<f64>> {
    let mut log_psi: Vec<Vec<f64>> = plan.cells.iter().map(|&n| vec![0.0; n]).collect();
    for (p, pot) in potentials.iter().enumerate() {
        let h = plan.host[p];
        for (v, &j) in log_psi[h].iter_mut().zip(&plan.host_map[p]) {
            *v += pot.theta[j];
        }
    }
    log_psi
}

pub(crate) fn calibrate(plan: &Plan, potentials: &[Potential]) -> Calibration {
    let k = plan.tree.cliques().len();
    let log_psi = clique_log_potentials(plan, potentials);
    match calibrate_linear(plan, &log_psi) {
        Some((up, down, beliefs)) => Calibration { log_psi, up, down, beliefs },
        None => {
            let (up, down, beliefs) = calibrate_log(plan, &log_psi, k);
            Calibration { log_psi, up, down, beliefs }
        }
    }
}

type Sweep = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

fn sep_len(plan: &Plan, c: usize) -> usize {
    plan.to_sep[c].iter().copied().max().map_or(1, |m| m + 1)
}

/// Sum-product in rescaled linear space; `None` when a product underflows.
fn calibrate_linear(plan: &Plan, log_psi: &[Vec<f64>]) -> Option<Sweep> {
    let k = log_psi.len();
    let psi: Vec<Scaled> = log_psi.iter().map(|l| Scaled::from_log(l)).collect();
    let checked = |acc: Scaled| (acc.values.iter().copied().fold(0.0, f64::max) > UNDERFLOW_GUARD).then_some(acc);

    let mut up: Vec<Scaled> = vec![Scaled::default(); k];
    for &c in plan.order.iter().rev() {
        if plan.parent[c].is_none() {
            continue;
        }
        let mut acc = psi[c].clone();
        for &ch in &plan.children[c] {
            acc.times(&up[ch], &plan.parent_to_sep[ch]);
        }
        up[c] = checked(acc)?.sum_to(sep_len(plan, c), &plan.to_sep[c]);
    }

    let mut down: Vec<Scaled> = vec![Scaled::default(); k];
    let mut beliefs: Vec<Vec<f64>> = vec![Vec::new(); k];
    for &c in &plan.order {
        let mut base = psi[c].clone();
        if plan.parent[c].is_some() {
            base.times(&down[c], &plan.to_sep[c]);
        }
        for &ch in &plan.children[c] {
            let mut acc = base.clone();
            for &other in &plan.children[c] {
                if other != ch {
                    acc.times(&up[other], &plan.parent_to_sep[other]);
                }
            }
            down[ch] = checked(acc)?.sum_to(sep_len(plan, ch), &plan.parent_to_sep[ch]);
        }
        let mut belief = base;
        for &ch in &plan.children[c] {
            belief.times(&up[ch], &plan.parent_to_sep[ch]);
        }
        let mut belief = checked(belief)?;
        let z: f64 = belief.values.iter().sum();
        belief.values.iter_mut().for_each(|v| *v /= z);
        beliefs[c] = belief.values;
    }
    Some((up.iter().map(Scaled::to_log).collect(), down.iter().map(Scaled::to_log).collect(), beliefs))
}

fn calibrate_log(plan: &Plan, log_psi: &[Vec<f64>], k: usize) -> Sweep {
    let mut up: Vec<Vec<f64>> = vec![Vec::new(); k];
    for &c in plan.order.iter().rev() {
        if plan.parent[c].is_none() {
            continue;
        }
        let mut acc = log_psi[c].clone();
        for &ch in &plan.children[c] {
            add_mapped(&mut acc, &up[ch], &plan.parent_to_sep[ch]);
        }
        up[c] = lse_mapped(&acc, sep_len(plan, c), &plan.to_sep[c]);
    }

    let mut down: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut beliefs: Vec<Vec<f64>> = vec![Vec::new(); k];
    for &c in &plan.order {
        let mut base = log_psi[c].clone();
        if plan.parent[c].is_some() {
            add_mapped(&mut base, &down[c], &plan.to_sep[c]);
        }
        for &ch in &plan.children[c] {
            let mut acc = base.clone();
            for &other in &plan.children[c] {
                if other != ch {
                    add_mapped(&mut acc, &up[other], &plan.parent_to_sep[other]);
                }
            }
            down[ch] = lse_mapped(&acc, sep_len(plan, ch), &plan.parent_to_sep[ch]);
        }
        let mut belief = base;
        for &ch in &plan.children[c] {
            add_mapped(&mut belief, &up[ch], &plan.parent_to_sep[ch]);
        }
        let z = logsumexp(&belief);
        beliefs[c] = belief.iter().map(|v| (v - z).exp()).collect();
    }
    (up, down, beliefs)
}

fn lse_mapped(values: &[f64], out_len: usize, map: &[usize]) -> Vec<f64> {
    super::factor::logsumexp_mapped(values, AttrSet::empty(), out_len, map).values
}

fn add_mapped(acc: &mut [f64], msg: &[f64], map: &[usize]) {
    for (v, &j) in acc.iter_mut().zip(map) {
        *v += msg[j];
    }
}

/// A fitted graphical model `p̂_θ ∝ exp(Σ_C θ_C)` scaled to total mass `N̂`.
#[derive(Clone, Debug)]
pub struct GraphicalModel {
    domain: Domain,
    potentials: Vec<Potential>,
    total: f64,
    max_size_mb: f64,
    plan: Plan,
    cal: Calibration,
    stats: FitStats,
}

impl GraphicalModel {
    pub(crate) fn from_parts(
        domain: Domain,
        potentials: Vec<Potential>,
        total: f64,
        max_size_mb: f64,
        plan: Plan,
        cal: Calibration,
        stats: FitStats,
    ) -> Self {
        GraphicalModel { domain, potentials, total, max_size_mb, plan, cal, stats }
    }

    /// Builds and calibrates a model from explicit potentials.
    pub fn from_potentials(domain: Domain, mut potentials: Vec<Potential>, total: f64) -> Result<Self> {
        for p in &mut potentials {
            domain.check(&p.attrs)?;
            if p.theta.len() != domain.cells(&p.attrs) {
                return Err(Error::InvalidParameter(format!("potential on {} has wrong length", p.attrs)));
            }
            p.pin_zeros();
        }
        let attrs: Vec<AttrSet> = potentials.iter().map(|p| p.attrs.clone()).collect();
        let plan = Plan::new(&domain, &attrs);
        let cal = calibrate(&plan, &potentials);
        Ok(GraphicalModel {
            domain,
            potentials,
            total,
            max_size_mb: f64::INFINITY,
            plan,
            cal,
            stats: FitStats::default(),
        })
    }

    /// The uniform model over `domain` with mass `total`.
    pub fn uniform(domain: Domain, total: f64) -> Self {
        GraphicalModel::from_potentials(domain, Vec::new(), total).expect("no potentials to validate")
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    pub fn junction_tree(&self) -> &JunctionTree {
        &self.plan.tree
    }

    pub fn size_mb(&self) -> f64 {
        self.plan.tree.size_mb(&self.domain)
    }

    pub fn stats(&self) -> &FitStats {
        &self.stats
    }

    /// Cap applied to variable elimination for queries spanning several cliques.
    pub fn with_inference_cap(mut self, max_size_mb: f64) -> Self {
        self.max_size_mb = max_size_mb;
        self
    }

    /// Scaled marginal of junction-tree clique `c`.
    pub fn clique_marginal(&self, c: usize) -> Marginal {
        let counts = self.cal.beliefs[c].iter().map(|v| v * self.total).collect();
        Marginal::new(self.plan.tree.cliques()[c].clone(), counts)
    }

    /// `M_r(p̂)`.
    pub fn infer_marginal(&self, r: &AttrSet) -> Result<Marginal> {
        self.domain.check(r)?;
        if r.is_empty() {
            return Ok(Marginal::new(AttrSet::empty(), vec![self.total]));
        }
        if let Some(h) = self.plan.tree.host(r, &self.domain) {
            return Ok(self.clique_marginal(h).project(&self.domain, r));
        }
        self.eliminate(r)
    }

    /// Variable elimination over the smallest subtree whose cliques cover `r`,
    /// with messages from the rest of the tree folded in.
    fn eliminate(&self, r: &AttrSet) -> Result<Marginal> {
        let tree = &self.plan.tree;
        let k = tree.cliques().len();
        let required: BTreeSet<usize> = r
            .iter()
            .map(|a| tree.host(&AttrSet::single(a), &self.domain).expect("every attribute is in the tree"))
            .collect();
        let mut keep = vec![true; k];
        let mut degree = vec![0usize; k];
        for (i, j, _) in tree.edges() {
            degree[*i] += 1;
            degree[*j] += 1;
        }
        loop {
            let leaf = (0..k).find(|&c| keep[c] && degree[c] <= 1 && !required.contains(&c));
            let Some(c) = leaf else { break };
            // a lone unrequired node with degree 0 only happens when nothing is required
            keep[c] = false;
            for (i, j, _) in tree.edges() {
                if *i == c && keep[*j] {
                    degree[*j] -= 1;
                } else if *j == c && keep[*i] {
                    degree[*i] -= 1;
                }
            }
        }

        let mut factors: Vec<Factor> = Vec::new();
        for c in (0..k).filter(|&c| keep[c]) {
            let mut values = self.cal.log_psi[c].clone();
            if let Some(p) = self.plan.parent[c] {
                if !keep[p] {
                    add_mapped(&mut values, &self.cal.down[c], &self.plan.to_sep[c]);
                }
            }
            for &ch in &self.plan.children[c] {
                if !keep[ch] {
                    add_mapped(&mut values, &self.cal.up[ch], &self.plan.parent_to_sep[ch]);
                }
            }
            factors.push(Factor { attrs: tree.cliques()[c].clone(), values });
        }

        let mut eliminate: BTreeSet<usize> = factors.iter().flat_map(|f| f.attrs.iter()).collect();
        for a in r.iter() {
            eliminate.remove(&a);
        }
        let cap_cells = self.max_size_mb * 1e6 / BYTES_PER_CELL;
        while !eliminate.is_empty() {
            // greedy: variable whose elimination creates the smallest table
            let (v, scope) = eliminate
                .iter()
                .map(|&v| {
                    let scope = factors
                        .iter()
                        .filter(|f| f.attrs.contains(v))
                        .fold(AttrSet::empty(), |acc, f| acc.union(&f.attrs));
                    (v, scope)
                })
                .min_by_key(|(v, s)| (self.domain.cells(s), *v))
                .expect("non-empty");
            let cells = self.domain.cells(&scope) as f64;
            if cells > cap_cells {
                return Err(Error::MemoryCap { size_mb: cells * BYTES_PER_CELL / 1e6, cap_mb: self.max_size_mb });
            }
            let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.attrs.contains(v));
            let refs: Vec<&Factor> = touching.iter().collect();
            let joined = Factor::product(&self.domain, &refs);
            let reduced = joined.marginalize(&self.domain, &scope.difference(&AttrSet::single(v)));
            factors = rest;
            factors.push(reduced);
            eliminate.remove(&v);
        }
        let out_cells = self.domain.cells(r) as f64;
        if out_cells > cap_cells {
            return Err(Error::MemoryCap { size_mb: out_cells * BYTES_PER_CELL / 1e6, cap_mb: self.max_size_mb });
        }
        let refs: Vec<&Factor> = factors.iter().collect();
        let joint = Factor::product(&self.domain, &refs);
        debug_assert_eq!(&joint.attrs, r);
        let z = joint.logsumexp();
        let counts = joint.values.iter().map(|v| (v - z).exp() * self.total).collect();
        Ok(Marginal::new(r.clone(), counts))
    }

    /// Draws `rows` records by forward sampling along the junction tree.
    pub fn synthesize<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Dataset {
        let d = self.domain.d();
        let mut cells = vec![0u32; rows * d];
        let tree = &self.plan.tree;
        for &c in &self.plan.order {
            let clique = &tree.cliques()[c];
            let sep = &self.plan.sep[c];
            let free = clique.difference(sep);
            if free.is_empty() {
                continue;
            }
            let n_free = self.domain.cells(&free);
            let n_sep = self.domain.cells(sep);
            // reorder the belief as [sep][free]
            let sep_strides = strides(&self.domain.attr_sizes(sep));
            let free_strides = strides(&self.domain.attr_sizes(&free));
            let target: Vec<usize> = clique
                .iter()
                .map(|a| match sep.as_slice().binary_search(&a) {
                    Ok(pos) => sep_strides[pos] * n_free,
                    Err(_) => free_strides[free.as_slice().binary_search(&a).expect("in free")],
                })
                .collect();
            let layout = index_map(&self.domain.attr_sizes(clique), &target);
            let mut table = vec![0.0; layout.len()];
            for (&dst, &p) in layout.iter().zip(&self.cal.beliefs[c]) {
                table[dst] = p;
            }
            let mut cdfs: Vec<Option<Vec<f64>>> = vec![None; n_sep];
            for rec in cells.chunks_exact_mut(d.max(1)) {
                let s = self.domain.cell_index(sep, rec);
                let cdf = cdfs[s].get_or_insert_with(|| {
                    let mut acc = 0.0;
                    table[s * n_free..(s + 1) * n_free]
                        .iter()
                        .map(|p| {
                            acc += p;
                            acc
                        })
                        .collect()
                });
                let u = sample_cdf(cdf, rng);
                for (a, x) in free.iter().zip(self.domain.unravel(&free, u)) {
                    rec[a] = x as u32;
                }
            }
        }
        Dataset::from_flat(self.domain.clone(), cells)
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump {
            attrs: self.domain.names().to_vec(),
            sizes: self.domain.sizes(),
            total: self.total,
            cliques: self.plan.tree.cliques().to_vec(),
            potentials: self.potentials.clone(),
        }
    }
}

fn sample_cdf<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("non-empty row");
    if !(total > 0.0) {
        return rng.random_range(0..cdf.len());
    }
    let u = rng.random::<f64>() * total;
    let idx = cdf.partition_point(|&c| c <= u);
    if idx < cdf.len() {
        idx
    } else {
        // u rounded up to the total: take the last cell with mass
        let last = cdf.iter().rposition(|&c| c < total).map_or(0, |i| i + 1);
        last.min(cdf.len() - 1)
    }
}

/// Serializable snapshot of a model's parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub attrs: Vec<String>,
    pub sizes: Vec<usize>,
    pub total: f64,
    pub cliques: Vec<AttrSet>,
    pub potentials: Vec<Potential>,
}

impl ModelDump {
    /// Rebuilds a calibrated model over `domain`, which must match the dump.
    pub fn restore(&self, domain: &Domain) -> Result<GraphicalModel> {
        if domain.names() != self.attrs.as_slice() || domain.sizes() != self.sizes {
            return Err(Error::DomainMismatch("model dump was fitted on a different domain".into()));
        }
        GraphicalModel::from_potentials(domain.clone(), self.potentials.clone(), self.total)
    }
}
