//! Loading the files shared by several subcommands.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use aimsynth::data::{Dataset, Domain, DomainSpec, Workload, WorkloadEntry};
use anyhow::{bail, Context, Result};

pub fn read_spec(path: &Path) -> Result<DomainSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading domain file {}", path.display()))?;
    DomainSpec::from_json_str(&text).with_context(|| format!("parsing domain file {}", path.display()))
}

/// A domain that does not depend on the data it describes.
pub fn read_domain(path: &Path) -> Result<(DomainSpec, Domain)> {
    let spec = read_spec(path)?;
    if !spec.is_data_independent() {
        bail!(
            "domain file {} reads categories or bounds off the data; run `preprocess` first \
             or list them explicitly",
            path.display()
        );
    }
    let domain = spec.to_domain()?;
    Ok((spec, domain))
}

/// Loads data under an explicit domain, binning numerical columns if the
/// domain declares any.
pub fn read_data(path: &Path, spec: &DomainSpec, domain: &Domain) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let data = if spec.is_explicit_categorical() {
        Dataset::from_csv(BufReader::new(file), domain)
    } else {
        aimsynth::data::discretize(BufReader::new(file), spec).map(|d| d.dataset)
    };
    data.with_context(|| format!("loading {}", path.display()))
}

/// `allKway` (e.g. `all2way`) or a JSON list of `{"attrs": [..], "weight": w}`.
pub fn read_workload(arg: &str, domain: &Domain) -> Result<Workload> {
    if let Some(k) = arg.strip_prefix("all").and_then(|s| s.strip_suffix("way")) {
        let k: usize = k.parse().with_context(|| format!("bad workload shorthand `{arg}`"))?;
        if k == 0 || k > domain.d() {
            bail!("workload `{arg}` needs 1 ≤ k ≤ {}", domain.d());
        }
        return Ok(Workload::all_k_way(domain, k)?);
    }
    let text = fs::read_to_string(arg).with_context(|| format!("reading workload file {arg}"))?;
    let entries: Vec<WorkloadEntry> =
        serde_json::from_str(&text).with_context(|| format!("parsing workload file {arg}"))?;
    Ok(Workload::from_file(&entries, domain)?)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// File at `path`, or stdout when absent.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn query_name(domain: &Domain, r: &aimsynth::data::AttrSet) -> String {
    r.iter().map(|a| domain.name(a)).collect::<Vec<_>>().join("+")
}
