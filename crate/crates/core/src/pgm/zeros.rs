use serde::{Deserialize, Serialize};

use crate::data::{AttrSet, Domain};
use crate::error::{Error, Result};

/// Cells known to be impossible, as `(r, Z_r)` pairs of flat cell indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructuralZeros {
    entries: Vec<(AttrSet, Vec<usize>)>,
}

impl StructuralZeros {
    pub fn none() -> Self {
        StructuralZeros::default()
    }

    pub fn new(domain: &Domain, entries: Vec<(AttrSet, Vec<usize>)>) -> Result<Self> {
        let mut merged: Vec<(AttrSet, Vec<usize>)> = Vec::new();
        for (r, cells) in entries {
            domain.check(&r)?;
            if r.is_empty() {
                return Err(Error::InvalidParameter("structural zeros need at least one attribute".into()));
            }
            let n = domain.cells(&r);
            if let Some(bad) = cells.iter().find(|&&c| c >= n) {
                return Err(Error::InvalidParameter(format!("zero cell {bad} out of range for {r} ({n} cells)")));
            }
            match merged.iter_mut().find(|(s, _)| *s == r) {
                Some((_, existing)) => existing.extend(cells),
                None => merged.push((r, cells)),
            }
        }
        for (_, cells) in &mut merged {
            cells.sort_unstable();
            cells.dedup();
        }
        Ok(StructuralZeros { entries: merged })
    }

    pub fn entries(&self) -> &[(AttrSet, Vec<usize>)] {
        &self.entries
    }

    pub fn cliques(&self) -> Vec<AttrSet> {
        self.entries.iter().map(|(r, _)| r.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cells_for(&self, r: &AttrSet) -> Option<&[usize]> {
        self.entries.iter().find(|(s, _)| s == r).map(|(_, c)| c.as_slice())
    }

    /// Number of records that land on a forbidden cell.
    pub fn violations<'a>(&self, domain: &Domain, records: impl Iterator<Item = &'a [u32]>) -> usize {
        let sets: Vec<(AttrSet, std::collections::HashSet<usize>)> =
            self.entries.iter().map(|(r, c)| (r.clone(), c.iter().copied().collect())).collect();
        records.filter(|rec| sets.iter().any(|(r, z)| z.contains(&domain.cell_index(r, rec)))).count()
    }

    pub fn from_file(entries: &[ZeroEntry], domain: &Domain) -> Result<Self> {
        let parsed = entries
            .iter()
            .map(|e| {
                let idx: Vec<usize> = e
                    .attrs
                    .iter()
                    .map(|n| domain.index_of(n).ok_or_else(|| Error::UnknownAttribute(n.clone())))
                    .collect::<Result<_>>()?;
                let r = AttrSet::new(idx.iter().copied());
                if r.len() != idx.len() {
                    return Err(Error::InvalidParameter("repeated attribute in structural zero entry".into()));
                }
                let cells = e
                    .cells
                    .iter()
                    .map(|cell| {
                        if cell.len() != idx.len() {
                            return Err(Error::InvalidParameter(format!(
                                "zero cell {cell:?} needs one index per attribute"
                            )));
                        }
                        // listed order may differ from the canonical sorted order
                        let mut coords = vec![0usize; r.len()];
                        for (&a, &x) in idx.iter().zip(cell) {
                            if x >= domain.size(a) {
                                return Err(Error::InvalidParameter(format!(
                                    "category index {x} out of range for `{}`",
                                    domain.name(a)
                                )));
                            }
                            coords[r.as_slice().binary_search(&a).expect("member")] = x;
                        }
                        Ok(r.iter().zip(&coords).fold(0, |acc, (a, &x)| acc * domain.size(a) + x))
                    })
                    .collect::<Result<Vec<usize>>>()?;
                Ok((r, cells))
            })
            .collect::<Result<_>>()?;
        StructuralZeros::new(domain, parsed)
    }
}

/// One entry of a structural-zeros file: attribute names plus forbidden
/// category-index tuples, listed in the same attribute order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroEntry {
    pub attrs: Vec<String>,
    pub cells: Vec<Vec<usize>>,
}
