use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AttrSet, Domain};
use crate::error::{Error, Result};

/// A weighted list of marginal queries. Duplicate attribute sets are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    queries: Vec<(AttrSet, f64)>,
}

impl Workload {
    pub fn new(queries: Vec<(AttrSet, f64)>) -> Result<Self> {
        for (r, c) in &queries {
            if r.is_empty() {
                return Err(Error::InvalidParameter("workload query with no attributes".into()));
            }
            if !c.is_finite() || *c < 0.0 {
                return Err(Error::InvalidParameter(format!("workload weight {c} for {r} must be finite and >= 0")));
            }
        }
        Ok(Workload { queries })
    }

    /// Every `k`-attribute marginal with unit weight.
    pub fn all_k_way(domain: &Domain, k: usize) -> Result<Self> {
        let d = domain.d();
        if k == 0 || k > d {
            return Err(Error::InvalidParameter(format!("cannot build {k}-way workload over {d} attributes")));
        }
        let queries = domain
            .all_attrs()
            .nonempty_subsets()
            .into_iter()
            .filter(|s| s.len() == k)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|s| (s, 1.0))
            .collect();
        Workload::new(queries)
    }

    pub fn queries(&self) -> &[(AttrSet, f64)] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn check(&self, domain: &Domain) -> Result<()> {
        self.queries.iter().try_for_each(|(r, _)| domain.check(r))
    }

    /// `W_+`: every non-empty subset of some workload query, sorted and deduplicated.
    pub fn downward_closure(&self) -> Vec<AttrSet> {
        let set: BTreeSet<AttrSet> = self.queries.iter().flat_map(|(r, _)| r.nonempty_subsets()).collect();
        set.into_iter().collect()
    }

    /// `w_r = Σ_s c_s |r ∩ s|` for each candidate.
    pub fn weights<'a, I>(&self, candidates: I) -> BTreeMap<AttrSet, f64>
    where
        I: IntoIterator<Item = &'a AttrSet>,
    {
        candidates.into_iter().map(|r| (r.clone(), self.weight(r))).collect()
    }

    pub fn weight(&self, r: &AttrSet) -> f64 {
        self.queries.iter().map(|(s, c)| c * r.intersection_len(s) as f64).sum()
    }

    /// Attributes touched by at least one query.
    pub fn attributes(&self) -> AttrSet {
        AttrSet::new(self.queries.iter().flat_map(|(r, _)| r.iter()))
    }

    pub fn scaled(&self, factor: f64) -> Result<Workload> {
        Workload::new(self.queries.iter().map(|(r, c)| (r.clone(), c * factor)).collect())
    }

    pub fn to_file(&self, domain: &Domain) -> Vec<WorkloadEntry> {
        self.queries
            .iter()
            .map(|(r, c)| WorkloadEntry { attrs: r.iter().map(|a| domain.name(a).to_string()).collect(), weight: *c })
            .collect()
    }

    pub fn from_file(entries: &[WorkloadEntry], domain: &Domain) -> Result<Self> {
        let queries = entries
            .iter()
            .map(|e| {
                let attrs = e
                    .attrs
                    .iter()
                    .map(|n| domain.index_of(n).ok_or_else(|| Error::UnknownAttribute(n.clone())))
                    .collect::<Result<AttrSet>>()?;
                Ok((attrs, e.weight))
            })
            .collect::<Result<_>>()?;
        Workload::new(queries)
    }
}

/// One entry of a workload file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadEntry {
    pub attrs: Vec<String>,
    #[serde(default = "unit")]
    pub weight: f64,
}

fn unit() -> f64 {
    1.0
}
