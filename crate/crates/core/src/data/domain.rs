use serde::{Deserialize, Serialize};

use super::index::{index_map, strides};
use super::AttrSet;
use crate::error::{Error, Result};

/// Attribute names with their finite, ordered category labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    attrs: Vec<String>,
    categories: Vec<Vec<String>>,
}

impl Domain {
    pub fn new(attrs: Vec<String>, categories: Vec<Vec<String>>) -> Result<Self> {
        if attrs.len() != categories.len() {
            return Err(Error::InvalidDomain(format!(
                "{} attribute names but {} category lists",
                attrs.len(),
                categories.len()
            )));
        }
        for (name, cats) in attrs.iter().zip(&categories) {
            if cats.is_empty() {
                return Err(Error::InvalidDomain(format!("attribute `{name}` has no categories")));
            }
            let mut seen = std::collections::HashSet::new();
            for c in cats {
                if !seen.insert(c) {
                    return Err(Error::InvalidDomain(format!("attribute `{name}` lists category `{c}` twice")));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for name in &attrs {
            if !seen.insert(name) {
                return Err(Error::InvalidDomain(format!("duplicate attribute `{name}`")));
            }
        }
        Ok(Domain { attrs, categories })
    }

    /// A domain whose categories are the labels `"0".."n_i-1"`.
    pub fn with_sizes<S: Into<String>>(attrs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let (names, cats) = attrs.into_iter().map(|(n, k)| (n.into(), (0..k).map(|i| i.to_string()).collect())).unzip();
        Domain::new(names, cats)
    }

    pub fn d(&self) -> usize {
        self.attrs.len()
    }

    pub fn names(&self) -> &[String] {
        &self.attrs
    }

    pub fn name(&self, attr: usize) -> &str {
        &self.attrs[attr]
    }

    pub fn categories(&self, attr: usize) -> &[String] {
        &self.categories[attr]
    }

    pub fn size(&self, attr: usize) -> usize {
        self.categories[attr].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.categories.iter().map(Vec::len).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attrs.iter().position(|a| a == name)
    }

    pub fn all_attrs(&self) -> AttrSet {
        AttrSet::new(0..self.d())
    }

    pub fn check(&self, r: &AttrSet) -> Result<()> {
        match r.iter().find(|&a| a >= self.d()) {
            Some(index) => Err(Error::AttrOutOfRange { index, d: self.d() }),
            None => Ok(()),
        }
    }

    pub fn attr_sizes(&self, r: &AttrSet) -> Vec<usize> {
        r.iter().map(|a| self.size(a)).collect()
    }

    /// Number of cells `n_r`. Saturates at `usize::MAX`.
    pub fn cells(&self, r: &AttrSet) -> usize {
        r.iter().fold(1usize, |acc, a| acc.saturating_mul(self.size(a)))
    }

    /// Natural log of the total domain size `n`, which may not fit a machine integer.
    pub fn log_total_size(&self) -> f64 {
        self.categories.iter().map(|c| (c.len() as f64).ln()).sum()
    }

    /// Maps each cell of `from` to the cell of `to` it marginalizes into. `to ⊆ from`.
    pub fn projection_map(&self, from: &AttrSet, to: &AttrSet) -> Vec<usize> {
        debug_assert!(to.is_subset(from));
        let to_strides = strides(&self.attr_sizes(to));
        let target: Vec<usize> = from
            .iter()
            .map(|a| match to.as_slice().binary_search(&a) {
                Ok(pos) => to_strides[pos],
                Err(_) => 0,
            })
            .collect();
        index_map(&self.attr_sizes(from), &target)
    }

    /// Row-major index of the `r`-projection of a full record.
    pub fn cell_index(&self, r: &AttrSet, record: &[u32]) -> usize {
        r.iter().fold(0usize, |acc, a| acc * self.size(a) + record[a] as usize)
    }

    /// Per-attribute coordinates of cell `index` of a table over `r`.
    pub fn unravel(&self, r: &AttrSet, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; r.len()];
        for (slot, a) in out.iter_mut().zip(r.iter()).rev() {
            let n = self.size(a);
            *slot = index % n;
            index /= n;
        }
        out
    }

    /// Restricts to the listed attributes, renumbered in the given order.
    pub fn project(&self, r: &AttrSet) -> Domain {
        Domain {
            attrs: r.iter().map(|a| self.attrs[a].clone()).collect(),
            categories: r.iter().map(|a| self.categories[a].clone()).collect(),
        }
    }
}
