//! Domain files and the numerical discretization used at ingestion.
//!
//! A domain file is a JSON object mapping each attribute name, in column
//! order, to either `{"categorical": [labels..]}` or
//! `{"numerical": {"min": .., "max": ..}}`. A `null` label list or missing
//! bounds select the active domain, read off the data itself. Only explicit
//! domains keep the whole pipeline private.

use std::collections::BTreeSet;
use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Dataset, Domain};
use crate::error::{Error, Result};

/// Equal-width bins per numerical attribute.
pub const NUM_BINS: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Categorical(Option<Vec<String>>),
    Numerical {
        #[serde(default)]
        min: Option<f64>,
        #[serde(default)]
        max: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub attrs: Vec<(String, AttrKind)>,
}

/// Outcome of [`discretize`].
#[derive(Clone, Debug)]
pub struct Discretized {
    pub dataset: Dataset,
    pub domain: Domain,
    /// `(attribute, count)` of numerical values clamped into the edge bins.
    pub clamped: Vec<(String, usize)>,
}

impl Discretized {
    pub fn total_clamped(&self) -> usize {
        self.clamped.iter().map(|(_, c)| c).sum()
    }
}

impl DomainSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(s)?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(map) = value else {
            return Err(Error::InvalidDomain("domain file must be a JSON object".into()));
        };
        let attrs = map
            .into_iter()
            .map(|(name, v)| {
                let kind: AttrKind =
                    serde_json::from_value(v).map_err(|e| Error::InvalidDomain(format!("attribute `{name}`: {e}")))?;
                if let AttrKind::Numerical { min: Some(lo), max: Some(hi) } = kind {
                    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                        return Err(Error::InvalidDomain(format!("attribute `{name}`: need finite min < max")));
                    }
                }
                Ok((name, kind))
            })
            .collect::<Result<_>>()?;
        Ok(DomainSpec { attrs })
    }

    pub fn to_value(&self) -> Value {
        let map: Map<String, Value> = self
            .attrs
            .iter()
            .map(|(n, k)| (n.clone(), serde_json::to_value(k).expect("attr kind serializes")))
            .collect();
        Value::Object(map)
    }

    pub fn from_domain(domain: &Domain) -> Self {
        DomainSpec {
            attrs: (0..domain.d())
                .map(|a| (domain.name(a).to_string(), AttrKind::Categorical(Some(domain.categories(a).to_vec()))))
                .collect(),
        }
    }

    /// True when every attribute has explicit categories, so data can be loaded directly.
    pub fn is_explicit_categorical(&self) -> bool {
        self.attrs.iter().all(|(_, k)| matches!(k, AttrKind::Categorical(Some(_))))
    }

    /// True when nothing about the domain is read off the data.
    pub fn is_data_independent(&self) -> bool {
        self.attrs.iter().all(|(_, k)| match k {
            AttrKind::Categorical(labels) => labels.is_some(),
            AttrKind::Numerical { min, max } => min.is_some() && max.is_some(),
        })
    }

    /// The discrete domain, with numerical attributes mapped to bin labels `"0".."31"`.
    /// Fails for active-domain categorical attributes, which need the data.
    pub fn to_domain(&self) -> Result<Domain> {
        let mut names = Vec::with_capacity(self.attrs.len());
        let mut cats = Vec::with_capacity(self.attrs.len());
        for (name, kind) in &self.attrs {
            names.push(name.clone());
            cats.push(match kind {
                AttrKind::Categorical(Some(labels)) => labels.clone(),
                AttrKind::Categorical(None) => {
                    return Err(Error::InvalidDomain(format!(
                        "attribute `{name}` uses the active domain; preprocess the data first"
                    )))
                }
                AttrKind::Numerical { .. } => bin_labels(),
            });
        }
        Domain::new(names, cats)
    }
}

fn bin_labels() -> Vec<String> {
    (0..NUM_BINS).map(|b| b.to_string()).collect()
}

/// Bin of `v` among [`NUM_BINS`] equal-width bins over `[min, max]`.
/// Returns the bin and whether `v` fell outside the range and was clamped.
pub fn bin_of(v: f64, min: f64, max: f64) -> (usize, bool) {
    if v < min {
        return (0, true);
    }
    if v > max {
        return (NUM_BINS - 1, true);
    }
    let raw = ((v - min) * NUM_BINS as f64 / (max - min)).floor();
    ((raw as usize).min(NUM_BINS - 1), false)
}

/// Maps a raw table onto a discrete domain.
///
/// Numerical columns fall into 32 equal-width bins; out-of-range values are
/// clamped and counted. Categorical columns without explicit labels take the
/// sorted set of observed values, where an empty cell is the null category.
pub fn discretize<R: Read>(raw: R, spec: &DomainSpec) -> Result<Discretized> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(raw);
    let header = rdr.headers()?.clone();
    let columns: Vec<usize> = spec
        .attrs
        .iter()
        .map(|(name, _)| header.iter().position(|h| h.trim() == name).ok_or_else(|| Error::MissingColumn(name.clone())))
        .collect::<Result<_>>()?;
    let rows: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let cell = |row: &csv::StringRecord, col: usize| row.get(col).unwrap_or("").trim().to_string();

    let d = spec.attrs.len();
    let mut names = Vec::with_capacity(d);
    let mut cats = Vec::with_capacity(d);
    let mut columns_out: Vec<Vec<u32>> = Vec::with_capacity(d);
    let mut clamped = Vec::new();

    for ((name, kind), &col) in spec.attrs.iter().zip(&columns) {
        names.push(name.clone());
        match kind {
            AttrKind::Categorical(labels) => {
                let labels = match labels {
                    Some(l) => l.clone(),
                    None => rows.iter().map(|r| cell(r, col)).collect::<BTreeSet<_>>().into_iter().collect(),
                };
                let lookup: std::collections::HashMap<&str, u32> =
                    labels.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
                let mut out = Vec::with_capacity(rows.len());
                for (i, r) in rows.iter().enumerate() {
                    let v = cell(r, col);
                    match lookup.get(v.as_str()) {
                        Some(&x) => out.push(x),
                        None => return Err(Error::UnknownCategory { attr: name.clone(), value: v, row: i + 1 }),
                    }
                }
                columns_out.push(out);
                cats.push(labels);
            }
            AttrKind::Numerical { min, max } => {
                let values = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let v = cell(r, col);
                        v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or(Error::NonNumeric {
                            attr: name.clone(),
                            value: v,
                            row: i + 1,
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let lo = min.unwrap_or_else(|| values.iter().copied().fold(f64::INFINITY, f64::min));
                let hi = max.unwrap_or_else(|| values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                if !(lo < hi) {
                    return Err(Error::InvalidDomain(format!("attribute `{name}`: need min < max, got [{lo}, {hi}]")));
                }
                let mut n_clamped = 0;
                let out = values
                    .iter()
                    .map(|&v| {
                        let (b, c) = bin_of(v, lo, hi);
                        n_clamped += c as usize;
                        b as u32
                    })
                    .collect();
                if n_clamped > 0 {
                    log::warn!("{n_clamped} values of `{name}` fell outside [{lo}, {hi}] and were clamped");
                    clamped.push((name.clone(), n_clamped));
                }
                columns_out.push(out);
                cats.push(bin_labels());
            }
        }
    }

    let domain = Domain::new(names, cats)?;
    let mut flat = Vec::with_capacity(rows.len() * d);
    for i in 0..rows.len() {
        flat.extend(columns_out.iter().map(|c| c[i]));
    }
    Ok(Discretized { dataset: Dataset::from_flat(domain.clone(), flat), domain, clamped })
}
