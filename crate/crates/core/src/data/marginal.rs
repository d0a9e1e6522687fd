use serde::{Deserialize, Serialize};

use super::{AttrSet, Domain};

/// Counts over the cells of `Ω_r`, row-major with the last attribute fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    attrs: AttrSet,
    counts: Vec<f64>,
}

impl Marginal {
    pub fn new(attrs: AttrSet, counts: Vec<f64>) -> Self {
        Marginal { attrs, counts }
    }

    pub fn attrs(&self) -> &AttrSet {
        &self.attrs
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn counts_mut(&mut self) -> &mut [f64] {
        &mut self.counts
    }

    pub fn into_counts(self) -> Vec<f64> {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Sums out the attributes not in `to`. `to` must be a subset of `self.attrs()`.
    pub fn project(&self, domain: &Domain, to: &AttrSet) -> Marginal {
        assert!(to.is_subset(&self.attrs), "{to} is not a subset of {}", self.attrs);
        if to == &self.attrs {
            return self.clone();
        }
        let map = domain.projection_map(&self.attrs, to);
        let mut out = vec![0.0; domain.cells(to)];
        for (&j, &v) in map.iter().zip(&self.counts) {
            out[j] += v;
        }
        Marginal::new(to.clone(), out)
    }

    pub fn l1_distance(&self, other: &Marginal) -> f64 {
        l1(&self.counts, &other.counts)
    }
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
