use std::fs::{self, File};
use std::io::BufReader;
use std::path::PathBuf;

use aimsynth::aim::Trace;
use aimsynth::data::Dataset;
use aimsynth::uncertainty::bound_report;
use anyhow::{Context, Result};
use clap::Args;

use crate::inputs::{output, read_workload};

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Synthetic CSV from the same run; without it bounds cover the estimates.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
    #[arg(long)]
    pub workload: String,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Report CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: BoundsArgs) -> Result<()> {
    let text = fs::read_to_string(&args.trace).with_context(|| format!("reading trace {}", args.trace.display()))?;
    let trace = Trace::from_json(&text).with_context(|| format!("loading trace {}", args.trace.display()))?;
    let domain = trace.domain.clone();
    let workload = read_workload(&args.workload, &domain)?;
    let synthetic = match &args.synthetic {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Some(Dataset::from_csv(BufReader::new(f), &domain).with_context(|| format!("loading {}", p.display()))?)
        }
        None => None,
    };
    let report = bound_report(&trace, synthetic.as_ref(), &workload, args.confidence)?;
    report.to_csv(&domain, output(args.out.as_deref())?)?;
    let l = report.lambdas;
    eprintln!(
        "lambda={} lambda1={} lambda2={} (supported level {:.4}, unsupported level {:.4})",
        l.lambda,
        l.lambda1,
        l.lambda2,
        l.supported_level(),
        l.unsupported_level()
    );
    Ok(())
}
