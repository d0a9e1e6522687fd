//! Dense log-space tables over attribute sets.

use crate::data::{AttrSet, Domain};

/// Log-weight of a structurally impossible cell. Finite so that sums of
/// several such cells stay finite; `exp` of it (after normalization) is 0.
pub const LOG_ZERO: f64 = -1e30;

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub attrs: AttrSet,
    pub values: Vec<f64>,
}

impl Factor {
    pub fn constant(domain: &Domain, attrs: AttrSet, value: f64) -> Self {
        let n = domain.cells(&attrs);
        Factor { attrs, values: vec![value; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Adds `other` (whose attributes are a subset) broadcast over `self`.
    pub fn add_expanded(&mut self, other: &Factor, map: &[usize]) {
        debug_assert_eq!(map.len(), self.values.len());
        for (v, &j) in self.values.iter_mut().zip(map) {
            *v += other.values[j];
        }
    }

    /// `log Σ exp` over the attributes not in `to`.
    pub fn logsumexp_to(&self, to: AttrSet, out_len: usize, map: &[usize]) -> Factor {
        logsumexp_mapped(&self.values, to, out_len, map)
    }

    /// Broadcasts onto a superset scope.
    pub fn expand(&self, domain: &Domain, to: &AttrSet) -> Factor {
        let map = domain.projection_map(to, &self.attrs);
        Factor { attrs: to.clone(), values: map.iter().map(|&j| self.values[j]).collect() }
    }

    /// Log-space product (sum) of factors over the union of their scopes.
    pub fn product(domain: &Domain, factors: &[&Factor]) -> Factor {
        let scope = factors.iter().fold(AttrSet::empty(), |acc, f| acc.union(&f.attrs));
        let mut out = Factor::constant(domain, scope.clone(), 0.0);
        for f in factors {
            let map = domain.projection_map(&scope, &f.attrs);
            out.add_expanded(f, &map);
        }
        out
    }

    pub fn marginalize(&self, domain: &Domain, to: &AttrSet) -> Factor {
        let map = domain.projection_map(&self.attrs, to);
        self.logsumexp_to(to.clone(), domain.cells(to), &map)
    }

    pub fn logsumexp(&self) -> f64 {
        logsumexp(&self.values)
    }
}

pub fn logsumexp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub(crate) fn logsumexp_mapped(values: &[f64], to: AttrSet, out_len: usize, map: &[usize]) -> Factor {
    let mut max = vec![f64::NEG_INFINITY; out_len];
    for (&v, &j) in values.iter().zip(map) {
        if v > max[j] {
            max[j] = v;
        }
    }
    let mut acc = vec![0.0; out_len];
    for (&v, &j) in values.iter().zip(map) {
        acc[j] += (v - max[j]).exp();
    }
    let values = max.iter().zip(&acc).map(|(&m, &s)| if m.is_finite() { m + s.ln() } else { m }).collect();
    Factor { attrs: to, values }
}
