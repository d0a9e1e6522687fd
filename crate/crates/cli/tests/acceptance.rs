//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use aimsynth::aim::{candidate_set, run_aim, AimConfig, Synthesis};
use aimsynth::baselines::run_independent;
use aimsynth::data::{AttrSet, Dataset, Domain, Marginal, Workload};
use aimsynth::eval::{expected_subsample_error, workload_error};
use aimsynth::pgm::{estimate, estimate_total, model_size_mb, objective, EstimateConfig, Measurement, StructuralZeros};
use aimsynth::privacy::{dp_to_zcdp, gaussian_mechanism, zcdp_to_dp, Rho};
use aimsynth::uncertainty::{bound_report, supported_bound, BoundKind};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn sample_from(p: &[f64], rng: &mut ChaCha8Rng) -> u32 {
    WeightedIndex::new(p).expect("positive weights").sample(rng) as u32
}

/// Skewed random distribution over `k` outcomes.
fn skewed(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..k).map(|_| rng.random::<f64>().powi(2) + 0.02).collect()
}

/// Markov chain over the attributes: each column depends on the previous one.
fn chain_dataset(sizes: &[usize], n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let names: Vec<String> = (0..sizes.len()).map(|i| format!("x{i}")).collect();
    let domain = Domain::with_sizes(names.iter().cloned().zip(sizes.iter().copied())).unwrap();
    let first = skewed(sizes[0], &mut r);
    let tables: Vec<Vec<Vec<f64>>> =
        (1..sizes.len()).map(|j| (0..sizes[j - 1]).map(|_| skewed(sizes[j], &mut r)).collect()).collect();
    let records = (0..n)
        .map(|_| {
            let mut rec = vec![sample_from(&first, &mut r)];
            for j in 1..sizes.len() {
                let prev = rec[j - 1] as usize;
                rec.push(sample_from(&tables[j - 1][prev], &mut r));
            }
            rec
        })
        .collect();
    Dataset::new(domain, records).unwrap()
}

/// Six attributes; the first three are copies of one another.
fn correlated_dataset(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let domain = Domain::with_sizes([("a", 3), ("b", 3), ("c", 3), ("d", 2), ("e", 4), ("f", 3)]).unwrap();
    let pa = skewed(3, &mut r);
    let others: Vec<Vec<f64>> = [2, 4, 3].iter().map(|&k| skewed(k, &mut r)).collect();
    let records = (0..n)
        .map(|_| {
            let x = sample_from(&pa, &mut r);
            let mut rec = vec![x, x, x];
            rec.extend(others.iter().map(|p| sample_from(p, &mut r)));
            rec
        })
        .collect();
    Dataset::new(domain, records).unwrap()
}

/// Three attributes with `z = x + y mod m` on 90% of records, so every pair
/// looks independent and only the full table carries the structure.
fn modular_dataset(m: u32, n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let domain = Domain::with_sizes([("x", m as usize), ("y", m as usize), ("z", m as usize)]).unwrap();
    let records = (0..n)
        .map(|_| {
            let (x, y) = (r.random_range(0..m), r.random_range(0..m));
            let z = if r.random::<f64>() < 0.9 { (x + y) % m } else { r.random_range(0..m) };
            vec![x, y, z]
        })
        .collect();
    Dataset::new(domain, records).unwrap()
}

fn aim(
    data: &Dataset,
    workload: &Workload,
    rho: f64,
    cfg: &AimConfig,
    zeros: &StructuralZeros,
    seed: u64,
) -> Synthesis {
    run_aim(data, workload, Rho::new(rho).unwrap(), cfg, zeros, &mut rng(seed)).expect("aim run")
}

// ---------------------------------------------------------------- 1

fn privacy_exactness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for i in 0..20 {
        let d = 3 + i % 4;
        let sizes: Vec<usize> = (0..d).map(|_| r.random_range(2..=5)).collect();
        let rho = match i {
            0 => 0.05,
            1 => 5.0,
            _ => (0.05f64.ln() + r.random::<f64>() * (5.0f64.ln() - 0.05f64.ln())).exp(),
        };
        let data = chain_dataset(&sizes, 500, 100 + i as u64);
        let workload = Workload::all_k_way(data.domain(), 2).unwrap();
        let out = aim(&data, &workload, rho, &AimConfig::default(), &StructuralZeros::none(), i as u64);
        let t = &out.trace;
        let gap = (t.ledger.spent() - rho).abs().max((t.charged() - rho).abs());
        worst = worst.max(gap);
        let monotone = t.rounds.windows(2).all(|w| w[0].rho_used < w[1].rho_used);
        let bounded = t.rounds.iter().all(|rd| rd.rho_used <= rho + 1e-12);
        if gap > 1e-9 || !monotone || !bounded {
            bad.push(format!("run {i} (d={d}, rho={rho:.3}) gap={gap:e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs < 300.0,
        format!(
            "20 runs, max |spent − ρ| = {worst:.2e}, {secs:.1}s{}",
            if bad.is_empty() { String::new() } else { format!("; failures: {bad:?}") }
        ),
    )
}

// ---------------------------------------------------------------- 2

/// ε for a given ρ, δ as the minimum of the closed form over a dense α grid.
fn conversion_oracle(rho: f64, delta: f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut k = 1u64;
    loop {
        let alpha = 1.0 + k as f64 * 1e-4;
        if alpha > 200.0 {
            break;
        }
        let eps = alpha * rho + (-delta.ln() - (alpha - 1.0).ln() + alpha * (1.0 - 1.0 / alpha).ln()) / (alpha - 1.0);
        best = best.min(eps);
        k += 1;
    }
    best.max(0.0)
}

fn conversion() -> Outcome {
    let mut worst_conv: f64 = 0.0;
    let mut worst_trip: f64 = 0.0;
    for rho in [0.01, 0.1, 0.5, 1.0, 5.0] {
        for delta in [1e-6, 1e-9] {
            let eps = zcdp_to_dp(rho, delta).unwrap();
            worst_conv = worst_conv.max((eps - conversion_oracle(rho, delta)).abs());
            let back = dp_to_zcdp(eps, delta).unwrap().value();
            worst_trip = worst_trip.max((back - rho).abs());
        }
    }
    outcome(
        worst_conv <= 1e-6 && worst_trip <= 1e-6,
        format!("max |ε − oracle| = {worst_conv:.2e}, max round-trip |Δρ| = {worst_trip:.2e} (tol 1e-6)"),
    )
}

// ---------------------------------------------------------------- 3

/// Euclidean projection onto `{x ≥ 0, Σx = total}`.
fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let (mut cum, mut theta) = (0.0, 0.0);
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - total) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Accelerated projected gradient on the full joint table.
fn joint_oracle(ms: &[Measurement], domain: &Domain, total: f64) -> Vec<f64> {
    let all = domain.all_attrs();
    let n = domain.cells(&all);
    let maps: Vec<Vec<usize>> = ms.iter().map(|m| domain.projection_map(&all, &m.attrs)).collect();
    let lip: f64 = ms.iter().map(|m| 2.0 / m.sigma * n as f64 / m.noisy.len() as f64).sum();
    let grad = |x: &[f64]| {
        let mut g = vec![0.0; n];
        for (m, map) in ms.iter().zip(&maps) {
            let mut mu = vec![0.0; m.noisy.len()];
            for (&j, &v) in map.iter().zip(x) {
                mu[j] += v;
            }
            for (gi, &j) in g.iter_mut().zip(map) {
                *gi += 2.0 / m.sigma * (mu[j] - m.noisy[j]);
            }
        }
        g
    };
    let mut x = vec![total / n as f64; n];
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let g = grad(&y);
        let step: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b / lip).collect();
        let next = project_simplex(&step, total);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = next.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / t_next * (a - b)).collect();
        x = next;
        t = t_next;
    }
    x
}

fn estimation_oracle() -> Outcome {
    let mut r = rng(3);
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    let mut worst_linf: f64 = 0.0;
    let mut fails = Vec::new();
    // run to stall rather than stopping on the default iteration budget
    let tight = EstimateConfig { max_iters: 50_000, rel_tol: 0.0, ..Default::default() };
    let shapes: [&[usize]; 5] = [&[4, 4, 4], &[2, 3, 2, 2], &[8, 8], &[2, 2, 2, 2, 2, 2], &[4, 2, 8]];
    for inst in 0..10 {
        let sizes = shapes[inst % shapes.len()];
        let data = chain_dataset(sizes, 300, 300 + inst as u64);
        let domain = data.domain().clone();
        let d = sizes.len();
        let k = 1 + inst % 3;
        let mut ms = Vec::new();
        for _ in 0..k {
            let width = r.random_range(1..=d.min(3));
            let mut attrs: Vec<usize> = (0..d).collect();
            for i in 0..width {
                let j = r.random_range(i..d);
                attrs.swap(i, j);
            }
            let s = AttrSet::new(attrs[..width].iter().copied());
            let sigma = 0.5 + 4.5 * r.random::<f64>();
            let noisy = gaussian_mechanism(&data.marginal(&s).unwrap(), sigma, &mut r).unwrap();
            ms.push(Measurement::new(noisy, sigma));
        }
        let model = estimate(&ms, &domain, &StructuralZeros::none(), &tight, None).unwrap();
        let total = estimate_total(&ms);
        let joint = joint_oracle(&ms, &domain, total);
        let joint_marg =
            |s: &AttrSet| Marginal::new(domain.all_attrs(), joint.clone()).project(&domain, s).into_counts();
        let ours = objective(&ms, |s| model.infer_marginal(s).unwrap().into_counts());
        let oracle = objective(&ms, joint_marg);
        let gap = ours - oracle;
        let linf = ms
            .iter()
            .flat_map(|m| {
                let a = model.infer_marginal(&m.attrs).unwrap().into_counts();
                let b = joint_marg(&m.attrs);
                a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        worst_gap = worst_gap.max(gap);
        worst_linf = worst_linf.max(linf / total);
        if gap > 1e-6 || linf > 1e-3 * total {
            fails.push(format!(
                "instance {inst}: gap={gap:.3e} linf/N={:.3e} obj={ours:.6} iters={} conv={}",
                linf / total,
                model.stats().iterations,
                model.stats().converged
            ));
        }
    }
    outcome(
        fails.is_empty(),
        format!(
            "10 instances, max objective gap = {worst_gap:.2e} (tol 1e-6), max L∞/N̂ = {worst_linf:.2e} (tol 1e-3){}",
            if fails.is_empty() { String::new() } else { format!("; {fails:?}") }
        ),
    )
}

// ---------------------------------------------------------------- 4

fn half_normal() -> Outcome {
    let (sigma, n, draws) = (1.3, 50usize, 100_000);
    let zero = Marginal::new(AttrSet::single(0), vec![0.0; n]);
    let mut r = rng(4);
    let norms: Vec<f64> = (0..draws)
        .map(|_| gaussian_mechanism(&zero, sigma, &mut r).unwrap().counts().iter().map(|x| x.abs()).sum())
        .collect();
    let mean = norms.iter().sum::<f64>() / draws as f64;
    let expected = (2.0 / std::f64::consts::PI).sqrt() * n as f64 * sigma;
    let rel = (mean - expected).abs() / expected;
    let mut ok = rel <= 0.01;
    let mut tails = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        let threshold = supported_bound(sigma, n, c);
        let rate = norms.iter().filter(|&&x| x >= threshold).count() as f64 / draws as f64;
        let limit = (-c * c).exp();
        ok &= rate <= limit;
        tails.push(format!("c={c}: {rate:.4} ≤ {limit:.4}"));
    }
    outcome(ok, format!("mean rel. error {:.3}% (tol 1%); tails {}", rel * 100.0, tails.join(", ")))
}

// ---------------------------------------------------------------- 5

fn coverage() -> Outcome {
    let start = Instant::now();
    let data = chain_dataset(&[3, 4, 2, 5, 3, 4], 5000, 55);
    let workload = Workload::all_k_way(data.domain(), 2).unwrap();
    let rho = dp_to_zcdp(1.0, 1e-9).unwrap().value();
    let (mut checked, mut violated) = (0usize, 0usize);
    let (mut sup_ratio, mut uns_ratio) = (Vec::new(), Vec::new());
    for seed in 0..200 {
        let out = aim(&data, &workload, rho, &AimConfig::default(), &StructuralZeros::none(), 5000 + seed);
        let report = bound_report(&out.trace, Some(&out.synthetic), &workload, 0.95).unwrap();
        for row in report.rows.iter().filter(|row| row.kind != BoundKind::Unbounded) {
            let err = data.marginal(&row.attrs).unwrap().l1_distance(&out.synthetic.marginal(&row.attrs).unwrap());
            checked += 1;
            if err > row.bound {
                violated += 1;
            }
            let ratio = row.bound / err.max(1e-9);
            match row.kind {
                BoundKind::Supported => sup_ratio.push(ratio),
                _ => uns_ratio.push(ratio),
            }
        }
    }
    let rate = violated as f64 / checked.max(1) as f64;
    let sup_med = median(sup_ratio.clone());
    let uns_med = if uns_ratio.is_empty() { f64::NAN } else { median(uns_ratio.clone()) };
    let secs = start.elapsed().as_secs_f64();
    outcome(
        rate <= 0.10 && sup_med >= 1.0 && secs < 1800.0,
        format!(
            "200 runs, {checked} bounded queries, violation rate {rate:.4} (tol 0.10); median bound/error: supported {sup_med:.2} (n={}), unsupported {uns_med:.2} (n={}); {secs:.1}s",
            sup_ratio.len(),
            uns_ratio.len()
        ),
    )
}

// ---------------------------------------------------------------- 6

fn subsampling() -> Outcome {
    let exact = expected_subsample_error(&[0.5, 0.5], 2);
    let mut ok = (exact - 0.5).abs() < 1e-12;
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for size in [5usize, 17, 32] {
        let w = skewed(size, &mut r);
        let s: f64 = w.iter().sum();
        let mu: Vec<f64> = w.iter().map(|x| x / s).collect();
        let dist = WeightedIndex::new(&mu).unwrap();
        for k in [10u64, 100, 1000] {
            let trials = 40_000;
            let mut acc = 0.0;
            let mut counts = vec![0u32; size];
            for _ in 0..trials {
                counts.iter_mut().for_each(|c| *c = 0);
                for _ in 0..k {
                    counts[dist.sample(&mut r)] += 1;
                }
                acc += mu.iter().zip(&counts).map(|(m, &c)| (m - c as f64 / k as f64).abs()).sum::<f64>();
            }
            let mc = acc / trials as f64;
            let rel = (expected_subsample_error(&mu, k) - mc).abs() / mc;
            worst = worst.max(rel);
            ok &= rel <= 0.02;
        }
    }
    outcome(ok, format!("μ=[0.5,0.5],K=2 → {exact}; max relative gap vs Monte Carlo {:.3}% (tol 2%)", worst * 100.0))
}

// ---------------------------------------------------------------- 7

fn utility_ordering() -> Outcome {
    let data = correlated_dataset(2000, 77);
    let workload = Workload::all_k_way(data.domain(), 2).unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    let mut medians = Vec::new();
    for eps in [0.1, 1.0, 10.0] {
        let rho = dp_to_zcdp(eps, 1e-9).unwrap();
        let mut wins = 0;
        let mut errs = Vec::new();
        for seed in 0..5 {
            let out = aim(&data, &workload, rho.value(), &AimConfig::default(), &StructuralZeros::none(), 700 + seed);
            let e_aim = workload_error(&data, &out.synthetic, &workload).unwrap();
            let (ind, _) = run_independent(&data, rho, &mut rng(800 + seed)).unwrap();
            let e_ind = workload_error(&data, &ind, &workload).unwrap();
            wins += usize::from(e_aim < e_ind);
            errs.push(e_aim);
        }
        if eps >= 1.0 {
            ok &= wins >= 4;
        }
        let m = median(errs);
        medians.push(m);
        lines.push(format!("ε={eps}: AIM beats Independent {wins}/5, median AIM error {m:.4}"));
    }
    ok &= medians[2] < medians[1] && medians[1] < medians[0];
    outcome(ok, lines.join("; "))
}

// ---------------------------------------------------------------- 8

fn structural_zeros() -> Outcome {
    // `b` never equals `a`; `(c, d) = (0, 0)` never occurs
    let mut r = rng(8);
    let domain = Domain::with_sizes([("a", 3), ("b", 3), ("c", 2), ("d", 3), ("e", 2)]).unwrap();
    let records: Vec<Vec<u32>> = (0..1500)
        .map(|_| {
            let a = r.random_range(0..3u32);
            let b = (a + r.random_range(1..3u32)) % 3;
            let c = r.random_range(0..2u32);
            let d = if c == 0 { r.random_range(1..3u32) } else { r.random_range(0..3u32) };
            vec![a, b, c, d, r.random_range(0..2u32)]
        })
        .collect();
    let data = Dataset::new(domain.clone(), records).unwrap();
    let zeros =
        StructuralZeros::new(&domain, vec![(AttrSet::new([0, 1]), vec![0, 4, 8]), (AttrSet::new([2, 3]), vec![0])])
            .unwrap();
    let zero_cliques = zeros.cliques();
    let workload = Workload::all_k_way(&domain, 2).unwrap();
    let closure = workload.downward_closure();
    let cfg = AimConfig::default();
    let (mut violations, mut accounting_ok, mut rounds) = (0usize, true, 0usize);
    for seed in 0..10 {
        let out = aim(&data, &workload, 1.0, &cfg, &zeros, 900 + seed);
        violations += zeros.violations(&domain, out.synthetic.records());
        let mut selected: Vec<AttrSet> = out.trace.init.iter().map(|m| m.attrs.clone()).collect();
        for rd in &out.trace.rounds {
            let expected = candidate_set(
                &closure,
                &selected,
                &zero_cliques,
                rd.rho_used / out.trace.rho,
                cfg.max_size_mb,
                &domain,
            );
            let recorded: Vec<&AttrSet> = rd.candidates.iter().map(|c| &c.attrs).collect();
            accounting_ok &= expected.iter().map(|&i| &closure[i]).collect::<Vec<_>>() == recorded;
            if !selected.contains(&rd.attrs) {
                selected.push(rd.attrs.clone());
            }
            let mut with_zeros = selected.clone();
            with_zeros.extend(zero_cliques.iter().cloned());
            accounting_ok &= (model_size_mb(&with_zeros, &domain) - rd.model_size_mb).abs() < 1e-12;
            rounds += 1;
        }
    }
    // with a tight cap the zero cliques must shrink the candidate set
    let ones: Vec<AttrSet> = (0..5).map(AttrSet::single).collect();
    let cap = model_size_mb(&ones, &domain) + 9.0 * 8.0 / 1e6;
    let free = candidate_set(&closure, &ones, &[], 1.0, cap, &domain).len();
    let constrained = candidate_set(&closure, &ones, &zero_cliques, 1.0, cap, &domain).len();
    let shrinks = constrained < free;
    outcome(
        violations == 0 && accounting_ok && shrinks,
        format!(
            "10 runs, {violations} violating records; candidate filter and model size recomputed with zero cliques for {rounds} rounds: {}; tight-cap candidates {free} → {constrained} with zeros",
            if accounting_ok { "match" } else { "MISMATCH" }
        ),
    )
}

// ---------------------------------------------------------------- 9

fn capacity_guard() -> Outcome {
    // the 3-way table (1.125 MB) pays off but only fits under the larger caps
    let data = modular_dataset(52, 250_000, 99);
    let workload = Workload::all_k_way(data.domain(), 3).unwrap();
    let rho = 20.0;
    let mut ok = true;
    let mut meds = Vec::new();
    let mut lines = Vec::new();
    for cap in [1.0, 5.0, 80.0] {
        let cfg = AimConfig { max_size_mb: cap, ..Default::default() };
        let mut times = Vec::new();
        let mut largest: f64 = 0.0;
        for seed in 0..5 {
            let start = Instant::now();
            let out = aim(&data, &workload, rho, &cfg, &StructuralZeros::none(), 90 + seed);
            times.push(start.elapsed().as_secs_f64());
            largest = out.trace.rounds.iter().map(|rd| rd.model_size_mb).fold(largest, f64::max);
        }
        ok &= largest <= cap;
        let m = median(times);
        meds.push(m);
        lines.push(format!("cap {cap} MB: largest model {largest:.3} MB, median {m:.2}s"));
    }
    ok &= meds[0] <= meds[1] && meds[1] <= meds[2];
    outcome(ok, lines.join("; "))
}

// ---------------------------------------------------------------- 10

fn toy(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_aimsynth")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline(dir: &Path) -> Result<Vec<Vec<u8>>, String> {
    let (data, domain) = (toy("toy.csv"), toy("toy-domain.json"));
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let run = dir.join("run");
    cli(&[
        "run",
        "--mechanism",
        "aim",
        "--epsilon",
        "1.0",
        "--delta",
        "1e-9",
        "--data",
        &s(&data),
        "--domain",
        &s(&domain),
        "--workload",
        "all2way",
        "--seed",
        "7",
        "--out",
        &s(&run),
    ])?;
    let bounds = dir.join("bounds.csv");
    cli(&[
        "bounds",
        "--trace",
        &s(&run.join("trace.json")),
        "--synthetic",
        &s(&run.join("synthetic.csv")),
        "--workload",
        "all2way",
        "--out",
        &s(&bounds),
    ])?;
    let eval = dir.join("eval");
    cli(&[
        "evaluate",
        "--data",
        &s(&data),
        "--domain",
        &s(&domain),
        "--synthetic",
        &s(&run.join("synthetic.csv")),
        "--workload",
        "all2way",
        "--out",
        &s(&eval),
    ])?;
    [
        run.join("synthetic.csv"),
        run.join("trace.json"),
        run.join("manifest.json"),
        bounds,
        eval.join("errors.csv"),
        eval.join("summary.csv"),
    ]
    .iter()
    .map(|p| std::fs::read(p).map_err(|e| format!("{}: {e}", p.display())))
    .collect()
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().expect("temp dir");
    let start = Instant::now();
    let first = pipeline(&tmp.path().join("a"));
    let elapsed = start.elapsed();
    let second = pipeline(&tmp.path().join("b"));
    match (first, second) {
        (Ok(a), Ok(b)) => {
            let same = a == b;
            let fast = elapsed < Duration::from_secs(60);
            outcome(
                same && fast,
                format!(
                    "run → bounds → evaluate in {:.2}s (limit 60s); repeat run byte-identical: {same}",
                    elapsed.as_secs_f64()
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("pipeline failed: {e}")),
    }
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "privacy exactness", privacy_exactness),
        (2, "zCDP to (ε,δ) conversion", conversion),
        (3, "estimation oracle equivalence", estimation_oracle),
        (4, "half-normal statistics", half_normal),
        (5, "confidence-bound coverage", coverage),
        (6, "subsampling formula", subsampling),
        (7, "utility ordering", utility_ordering),
        (8, "structural zeros", structural_zeros),
        (9, "capacity guard", capacity_guard),
        (10, "end-to-end CLI", end_to_end),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        failed += usize::from(!result.pass);
        println!(
            "criterion {id:>2} {}: {} [{:.1}s] {}",
            if result.pass { "PASS" } else { "FAIL" },
            name,
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
