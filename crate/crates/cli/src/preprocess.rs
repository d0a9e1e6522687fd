use std::fs::{self, File};
use std::io::BufReader;
use std::path::PathBuf;

use aimsynth::data::{discretize, DomainSpec};
use anyhow::{Context, Result};
use clap::Args;

use crate::inputs::{create, read_spec, write_json};

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    /// Raw CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Domain file; numerical attributes are cut into 32 equal-width bins.
    #[arg(long)]
    pub domain: PathBuf,
    /// Directory for data.csv and domain.json.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: PreprocessArgs) -> Result<()> {
    let spec = read_spec(&args.domain)?;
    let file = File::open(&args.data).with_context(|| format!("opening {}", args.data.display()))?;
    let out =
        discretize(BufReader::new(file), &spec).with_context(|| format!("discretizing {}", args.data.display()))?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    out.dataset.to_csv(create(&args.out.join("data.csv"))?)?;
    write_json(&args.out.join("domain.json"), &DomainSpec::from_domain(&out.domain).to_value())?;
    for (name, n) in &out.clamped {
        if *n > 0 {
            eprintln!("warning: {n} value(s) of `{name}` fell outside [min, max] and were clamped");
        }
    }
    eprintln!(
        "{} records, {} clamped value(s); outputs in {}",
        out.dataset.len(),
        out.total_clamped(),
        args.out.display()
    );
    Ok(())
}
