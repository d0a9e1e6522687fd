use std::fs;
use std::path::PathBuf;

use aimsynth::baselines::{answers_from_file, AnswerEntry};
use aimsynth::eval::{equivalent_sample_fraction, per_query_answer_errors, per_query_errors};
use anyhow::{Context, Result};
use clap::Args;

use crate::inputs::{output, query_name, read_data, read_domain, read_workload};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, required_unless_present = "answers", conflicts_with = "answers")]
    pub synthetic: Option<PathBuf>,
    /// Noisy answers file written by the gaussian mechanism.
    #[arg(long)]
    pub answers: Option<PathBuf>,
    #[arg(long)]
    pub workload: String,
    /// Directory for errors.csv and summary.csv; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let (spec, domain) = read_domain(&args.domain)?;
    let data = read_data(&args.data, &spec, &domain)?;
    let workload = read_workload(&args.workload, &domain)?;
    let errors = match (&args.synthetic, &args.answers) {
        (Some(p), _) => per_query_errors(&data, &read_data(p, &spec, &domain)?, &workload)?,
        (None, Some(p)) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let entries: Vec<AnswerEntry> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            per_query_answer_errors(&data, &answers_from_file(&entries, &domain)?, &workload)?
        }
        (None, None) => unreachable!("clap requires one of --synthetic and --answers"),
    };
    let k = workload.len() as f64;
    let total: f64 = workload.queries().iter().zip(&errors).map(|((_, c), (_, e))| c * e).sum::<f64>() / k;
    let equiv = equivalent_sample_fraction(&data, &workload, total)?;

    let (err_out, sum_out) = match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            (output(Some(&dir.join("errors.csv")))?, output(Some(&dir.join("summary.csv")))?)
        }
        None => (output(None)?, output(None)?),
    };
    let mut w = csv::Writer::from_writer(err_out);
    w.write_record(["query", "weight", "error"])?;
    for ((r, c), (_, e)) in workload.queries().iter().zip(&errors) {
        w.write_record([query_name(&domain, r), c.to_string(), e.to_string()])?;
    }
    w.flush()?;
    drop(w);
    let mut w = csv::Writer::from_writer(sum_out);
    w.write_record(["metric", "value"])?;
    w.write_record(["workload_error", &total.to_string()])?;
    w.write_record(["records", &data.len().to_string()])?;
    w.write_record(["equivalent_sample_size", &equiv.k.to_string()])?;
    w.write_record(["equivalent_sample_fraction", &equiv.fraction.to_string()])?;
    w.flush()?;
    Ok(())
}
