use std::collections::HashMap;
use std::io::{Read, Write};

use super::{AttrSet, Domain, Marginal};
use crate::error::{Error, Result};

/// A multiset of discrete records, stored row-major as category indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    domain: Domain,
    cells: Vec<u32>,
}

impl Dataset {
    pub fn new(domain: Domain, records: Vec<Vec<u32>>) -> Result<Self> {
        let d = domain.d();
        let mut cells = Vec::with_capacity(records.len() * d);
        for (row, rec) in records.iter().enumerate() {
            if rec.len() != d {
                return Err(Error::InvalidParameter(format!("record {row} has {} fields, domain has {d}", rec.len())));
            }
            for (a, &x) in rec.iter().enumerate() {
                if x as usize >= domain.size(a) {
                    return Err(Error::UnknownCategory { attr: domain.name(a).to_string(), value: x.to_string(), row });
                }
            }
            cells.extend_from_slice(rec);
        }
        Ok(Dataset { domain, cells })
    }

    /// Builds from a flat row-major buffer; indices must already be valid.
    pub(crate) fn from_flat(domain: Domain, cells: Vec<u32>) -> Self {
        debug_assert!(domain.d() == 0 || cells.len().is_multiple_of(domain.d()));
        Dataset { domain, cells }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        if self.domain.d() == 0 {
            0
        } else {
            self.cells.len() / self.domain.d()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn record(&self, i: usize) -> &[u32] {
        let d = self.domain.d();
        &self.cells[i * d..(i + 1) * d]
    }

    pub fn records(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.cells.chunks_exact(self.domain.d().max(1))
    }

    /// Exact counts `M_r(D)`.
    pub fn marginal(&self, r: &AttrSet) -> Result<Marginal> {
        self.domain.check(r)?;
        let mut counts = vec![0.0; self.domain.cells(r)];
        for rec in self.records() {
            counts[self.domain.cell_index(r, rec)] += 1.0;
        }
        Ok(Marginal::new(r.clone(), counts))
    }

    /// Reads a comma-delimited table whose header names the domain attributes.
    /// Columns may appear in any order; extra columns are ignored.
    pub fn from_csv<R: Read>(reader: R, domain: &Domain) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        let columns: Vec<usize> = domain
            .names()
            .iter()
            .map(|name| header.iter().position(|h| h.trim() == name).ok_or_else(|| Error::MissingColumn(name.clone())))
            .collect::<Result<_>>()?;
        let lookup: Vec<HashMap<&str, u32>> = (0..domain.d())
            .map(|a| domain.categories(a).iter().enumerate().map(|(i, c)| (c.as_str(), i as u32)).collect())
            .collect();
        let mut cells = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (a, &col) in columns.iter().enumerate() {
                let raw = rec.get(col).unwrap_or("");
                let value = lookup[a].get(raw).or_else(|| lookup[a].get(raw.trim()));
                match value {
                    Some(&x) => cells.push(x),
                    None => {
                        return Err(Error::UnknownCategory {
                            attr: domain.name(a).to_string(),
                            value: raw.to_string(),
                            row: row + 1,
                        })
                    }
                }
            }
        }
        Ok(Dataset::from_flat(domain.clone(), cells))
    }

    /// Writes the records as category labels under a header row.
    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        w.write_record(self.domain.names())?;
        for rec in self.records() {
            w.write_record(rec.iter().enumerate().map(|(a, &x)| self.domain.categories(a)[x as usize].as_str()))?;
        }
        w.flush()?;
        Ok(())
    }
}
