use std::fs;
use std::path::PathBuf;

use aimsynth::aim::{run_aim, AimConfig};
use aimsynth::baselines::{answers_to_file, run_gaussian_answerer, run_independent, run_mwem_pgm, MwemConfig};
use aimsynth::pgm::{StructuralZeros, ZeroEntry};
use aimsynth::privacy::{dp_to_zcdp, zcdp_to_dp, Rho};
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::inputs::{create, read_data, read_domain, read_workload, write_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    Aim,
    MwemPgm,
    Independent,
    Gaussian,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "aim")]
    pub mechanism: Mechanism,
    #[arg(long, conflicts_with = "rho", requires = "delta")]
    pub epsilon: Option<f64>,
    /// δ for the (ε, δ) budget; with --rho, only used to report ε.
    #[arg(long)]
    pub delta: Option<f64>,
    /// zCDP budget, instead of --epsilon/--delta.
    #[arg(long, required_unless_present = "epsilon")]
    pub rho: Option<f64>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub domain: PathBuf,
    /// `allKway` (e.g. all2way) or a workload JSON file.
    #[arg(long)]
    pub workload: String,
    /// Structural zeros JSON file (aim, mwem-pgm).
    #[arg(long)]
    pub zeros: Option<PathBuf>,
    /// Drawn at random and recorded in the manifest when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 80.0)]
    pub max_size_mb: f64,
    /// Share of each AIM round's budget spent on measurement.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// MWEM+PGM rounds.
    #[arg(long)]
    pub rounds: Option<usize>,
}

const DEFAULT_DELTA: f64 = 1e-9;
const DEFAULT_MWEM_ROUNDS: usize = 10;

#[derive(Serialize)]
struct Budget {
    rho: f64,
    epsilon: f64,
    delta: f64,
    /// `epsilon-delta` when (ε, δ) was given and converted, `rho` otherwise.
    given_as: &'static str,
    spent_rho: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    mechanism: Mechanism,
    seed: u64,
    budget: Budget,
    data: String,
    domain: String,
    workload: &'a str,
    zeros: Option<String>,
    max_size_mb: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<usize>,
    records_in: usize,
    records_out: Option<usize>,
    model_size_mb: Option<f64>,
    outputs: Vec<&'static str>,
}

fn resolve_budget(args: &RunArgs) -> Result<(Rho, f64, f64, &'static str)> {
    match (args.epsilon, args.rho) {
        (Some(eps), None) => {
            let delta = args.delta.expect("clap requires delta with epsilon");
            let rho = dp_to_zcdp(eps, delta)?;
            Ok((rho, eps, delta, "epsilon-delta"))
        }
        (None, Some(rho)) => {
            if rho.is_nan() || rho <= 0.0 {
                bail!("--rho must be positive");
            }
            let delta = args.delta.unwrap_or(DEFAULT_DELTA);
            Ok((Rho::new(rho)?, zcdp_to_dp(rho, delta)?, delta, "rho"))
        }
        _ => bail!("give either --rho or --epsilon with --delta"),
    }
}

pub fn run(args: RunArgs) -> Result<()> {
    if args.rounds.is_some() && args.mechanism != Mechanism::MwemPgm {
        bail!("--rounds applies only to --mechanism mwem-pgm");
    }
    if args.alpha.is_some() && args.mechanism != Mechanism::Aim {
        bail!("--alpha applies only to --mechanism aim");
    }
    if args.zeros.is_some() && !matches!(args.mechanism, Mechanism::Aim | Mechanism::MwemPgm) {
        bail!("--zeros applies only to aim and mwem-pgm");
    }
    let (rho, epsilon, delta, given_as) = resolve_budget(&args)?;
    let (spec, domain) = read_domain(&args.domain)?;
    let data = read_data(&args.data, &spec, &domain)?;
    let workload = read_workload(&args.workload, &domain)?;
    let zeros = match &args.zeros {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let entries: Vec<ZeroEntry> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            StructuralZeros::from_file(&entries, &domain)?
        }
        None => StructuralZeros::none(),
    };
    let seed = args.seed.unwrap_or_else(rand::random);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    log::info!("running {:?} with rho={} seed={seed}", args.mechanism, rho.value());

    let (synthetic, trace, model_size) = match args.mechanism {
        Mechanism::Aim => {
            let cfg =
                AimConfig { max_size_mb: args.max_size_mb, alpha: args.alpha.unwrap_or(0.9), ..Default::default() };
            let out = run_aim(&data, &workload, rho, &cfg, &zeros, &mut rng)?;
            (Some(out.synthetic), out.trace, Some(out.model.size_mb()))
        }
        Mechanism::MwemPgm => {
            let cfg = MwemConfig {
                rounds: args.rounds.unwrap_or(DEFAULT_MWEM_ROUNDS),
                max_size_mb: args.max_size_mb,
                ..Default::default()
            };
            let out = run_mwem_pgm(&data, &workload, rho, &cfg, &zeros, &mut rng)?;
            (Some(out.synthetic), out.trace, Some(out.model.size_mb()))
        }
        Mechanism::Independent => {
            let (syn, trace) = run_independent(&data, rho, &mut rng)?;
            (Some(syn), trace, None)
        }
        Mechanism::Gaussian => {
            let (answers, trace) = run_gaussian_answerer(&data, &workload, rho, &mut rng)?;
            write_json(&args.out.join("answers.json"), &answers_to_file(&answers, &domain))?;
            (None, trace, None)
        }
    };

    let mut outputs = vec!["manifest.json", "trace.json"];
    if let Some(syn) = &synthetic {
        syn.to_csv(create(&args.out.join("synthetic.csv"))?)?;
        outputs.push("synthetic.csv");
    } else {
        outputs.push("answers.json");
    }
    write_json(&args.out.join("trace.json"), &trace)?;
    let manifest = Manifest {
        mechanism: args.mechanism,
        seed,
        budget: Budget { rho: rho.value(), epsilon, delta, given_as, spent_rho: trace.ledger.spent() },
        data: args.data.display().to_string(),
        domain: args.domain.display().to_string(),
        workload: &args.workload,
        zeros: args.zeros.as_ref().map(|p| p.display().to_string()),
        max_size_mb: args.max_size_mb,
        alpha: (args.mechanism == Mechanism::Aim).then(|| args.alpha.unwrap_or(0.9)),
        rounds: (args.mechanism == Mechanism::MwemPgm).then(|| args.rounds.unwrap_or(DEFAULT_MWEM_ROUNDS)),
        records_in: data.len(),
        records_out: synthetic.as_ref().map(|s| s.len()),
        model_size_mb: model_size,
        outputs,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    eprintln!(
        "spent rho={:.6} (epsilon={epsilon:.4}, delta={delta:e}); outputs in {}",
        trace.ledger.spent(),
        args.out.display()
    );
    Ok(())
}
