//! Command-line front end: single simulations, sweeps, the dynamics oracle
//! suite, drift-lab experiments, and scaling fits.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use trimaj::drift::{
    birth_death_exact_hitting, estimate_one_step_drift, measure_hitting_time,
    overshoot_probability, BiasedWalk, HittingSpec, MinSupportGap, TauSample,
};
use trimaj::dynamics::{
    adoption_distribution, brute_force_adoption_distribution, expected_next, step_multinomial,
    step_node_level, TieBreakRule,
};
use trimaj::harness::{
    self, fit_scaling, load_spec_file, read_rows_csv, run_trial, AdversaryConfig, BudgetSpec,
    ExperimentSpec, HarnessError, InitialSpec, OutputSpec,
};
use trimaj::opinion::{Configuration, NodeAssignment};
use trimaj::rng::seed_for;
use trimaj::trace::write_jsonl;

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "trimaj", version, about = "3-majority dynamics simulator and verification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of a single (n, k) cell and print per-trial outcomes.
    Simulate(SimulateArgs),
    /// Execute an experiment grid from a TOML spec file.
    Sweep(SweepArgs),
    /// Run the dynamics-core equivalence suite (closed form vs oracle,
    /// normalization, conservation, engine agreement).
    OracleCheck(OracleCheckArgs),
    /// Drift-lab entry points: hitting times, one-step drift, overshoot.
    #[command(subcommand)]
    Drift(DriftCommand),
    /// Log-log least-squares fit over columns of a rows CSV.
    Fit(FitArgs),
    /// Print the version string.
    Version,
}

#[derive(Args)]
struct SimulateArgs {
    /// Population size.
    #[arg(long)]
    n: u64,
    /// Number of initial opinions.
    #[arg(long)]
    k: u32,
    /// Initial configuration: "uniform", "biased:<gap>", or
    /// "explicit:<canonical config>".
    #[arg(long, default_value = "uniform")]
    initial: String,
    /// Adversary kind: null, static-plant, dynamic-sustain,
    /// dynamic-balance-big, dynamic-feed-min-big, dynamic-random.
    #[arg(long, default_value = "null")]
    adversary: String,
    /// Explicit node budget F.
    #[arg(long, conflicts_with_all = ["budget_static", "budget_beta"])]
    budget: Option<u64>,
    /// Use the static-adversary budget formula floor(n/k - sqrt(k n ln n)).
    #[arg(long)]
    budget_static: bool,
    /// Use the dynamic budget formula floor(beta sqrt(n) / (k^{5/2} ln n)).
    #[arg(long, conflicts_with = "budget_static")]
    budget_beta: Option<f64>,
    /// Target opinion id for plant/sustain strategies.
    #[arg(long)]
    target: Option<u32>,
    /// Sustain level for dynamic-sustain (defaults to the budget).
    #[arg(long)]
    sustain_level: Option<u64>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Round budget; 0 selects the default derived from (n, k).
    #[arg(long, default_value_t = 0)]
    max_rounds: u64,
    /// Engine: multinomial or node-level.
    #[arg(long, default_value = "multinomial")]
    engine: String,
    /// Tie-break: first-sample or uniform.
    #[arg(long, default_value = "first-sample")]
    tie_break: String,
    /// Stop rule: auto, strict, or almost.
    #[arg(long, default_value = "auto")]
    stop: String,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c_stop: Option<f64>,
    /// Write a JSON-lines trace of the first trial to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
#[command(after_help = "\
Spec file defaults: seed = 0; trials = 1; max_rounds = 0 (auto budget \
50*(k^2*sqrt(ln n) + k*ln n)*(k + ln n)); engine = \"multinomial\"; \
tie_break = \"first-sample\"; stop = \"auto\" (strict for the null \
adversary, almost otherwise); workers = 0 (rayon default); initial.kind = \
\"uniform\"; adversary.kind = \"null\" with F = 0 (F_formula kinds: \
\"static\" -> floor(n/k - sqrt(k n ln n)), \"dynamic\" with beta \
(default 1.0) -> floor(beta sqrt(n)/(k^2.5 ln n))); thresholds: gamma = 1, \
alpha_bias = 1, c_stop = 3, log_base = e, small_k_exponent = 1.5, \
small_log_exponent = 1. See README.md for a full example.")]
struct SweepArgs {
    /// TOML spec file.
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Random configurations for the normalization/conservation fuzz pass.
    #[arg(long, default_value_t = 2000)]
    fuzz: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum DriftCommand {
    /// Biased +/-1 walk: Monte Carlo hitting time vs the exact oracle.
    Walk(WalkArgs),
    /// One-step drift of the min-support gap from a uniform configuration.
    Onestep(OnestepArgs),
    /// Stopped overshoot of the gap process at the break target.
    Overshoot(OvershootArgs),
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long, default_value_t = 0.6)]
    p_up: f64,
    #[arg(long, default_value_t = 0.4)]
    p_down: f64,
    #[arg(long, default_value_t = 0)]
    start: i64,
    #[arg(long, default_value_t = 50)]
    target: i64,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Claimed drift lambda; defaults to p_up - p_down.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_rounds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write per-trial samples (trial, tau, y_at_tau, exit_reason) here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct OnestepArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OvershootArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    j: u32,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Input rows CSV (as written by sweep).
    #[arg(long)]
    input: PathBuf,
    /// Column for the x axis.
    #[arg(long)]
    x: String,
    /// Column for the y axis.
    #[arg(long)]
    y: String,
    /// Fit raw points instead of per-x means.
    #[arg(long)]
    no_aggregate: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
        Command::Drift(cmd) => cmd_drift(cmd),
        Command::Fit(args) => cmd_fit(args),
        Command::Version => {
            println!("trimaj {}", env!("CARGO_PKG_VERSION"));
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                HarnessError::Io(_) => EXIT_IO,
                _ => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}

fn build_spec(args: &SimulateArgs) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = ExperimentSpec::single_cell(args.n, args.k);
    spec.seed = args.seed;
    spec.trials = args.trials;
    spec.max_rounds = args.max_rounds;
    spec.engine = harness::parse_engine(&args.engine)?;
    spec.tie_break = harness::parse_tie_break(&args.tie_break)?;
    spec.stop = harness::parse_stop(&args.stop)?;

    spec.initial = if args.initial == "uniform" {
        InitialSpec::Uniform
    } else if let Some(gap) = args.initial.strip_prefix("biased:") {
        InitialSpec::Biased {
            gap: gap
                .parse()
                .map_err(|_| HarnessError::Spec(format!("bad gap in {:?}", args.initial)))?,
        }
    } else if let Some(cfg) = args.initial.strip_prefix("explicit:") {
        InitialSpec::Explicit(cfg.to_string())
    } else {
        return Err(HarnessError::Spec(format!(
            "unknown initial {:?}",
            args.initial
        )));
    };

    let budget = if args.budget_static {
        BudgetSpec::StaticFormula
    } else if let Some(beta) = args.budget_beta {
        BudgetSpec::DynamicFormula { beta }
    } else {
        BudgetSpec::Explicit(args.budget.unwrap_or(0))
    };
    spec.adversary = AdversaryConfig {
        kind: harness::parse_adversary_kind(&args.adversary)?,
        budget,
        target: args.target,
        sustain_level: args.sustain_level,
    };
    if let Some(gamma) = args.gamma {
        spec.thresholds.gamma = gamma;
    }
    if let Some(c_stop) = args.c_stop {
        spec.thresholds.c_stop = c_stop;
    }
    spec.outputs = OutputSpec::default();
    Ok(spec)
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, HarnessError> {
    let spec = build_spec(&args)?;
    for warning in spec.validate()? {
        eprintln!("warning: {warning}");
    }
    let cell = spec.cells()[0];
    println!(
        "cell n={} k={} adversary={} F={} max_rounds={}",
        cell.n,
        cell.k,
        spec.adversary.kind.as_str(),
        spec.adversary_for(&cell)?.budget,
        spec.max_rounds_for(&cell)
    );
    for trial in 0..spec.trials {
        let with_trace = args.trace.is_some() && trial == 0;
        let result = run_trial(&spec, &cell, trial, with_trace)?;
        let o = &result.outcome;
        println!(
            "trial {trial}: rounds={} terminal={} winner={} valid={} residual={} violations={}",
            o.rounds,
            o.terminal,
            o.winner.map(|w| w.to_string()).unwrap_or_else(|| "-".into()),
            o.winner_valid,
            o.residual,
            o.violations.len()
        );
        if let (Some(path), Some(trace)) = (args.trace.as_ref().filter(|_| trial == 0), result.trace)
        {
            let file = File::create(path)?;
            write_jsonl(&trace, file)?;
            println!("trace written to {}", path.display());
        }
    }
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, HarnessError> {
    let spec = load_spec_file(&args.spec)?;
    let result = harness::run_sweep(&spec)?;
    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
    for error in &result.errors {
        eprintln!("trial error: {error}");
    }
    result
        .verify_self_consistency()
        .map_err(HarnessError::Spec)?;
    for cell in &result.cells {
        println!(
            "cell {} (n={} k={}): trials={} consensus_rate={:.3} validity_rate={:.3} mean_rounds={}",
            cell.cell_id,
            cell.n,
            cell.k,
            cell.trials,
            cell.consensus_rate,
            cell.validity_rate,
            cell.mean_rounds
                .map(|m| format!("{m:.2}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    if let Some(csv) = &spec.outputs.csv {
        println!("rows written to {}", csv.display());
    }
    if let Some(summary) = &spec.outputs.summary {
        println!("summary written to {}", summary.display());
    }
    Ok(0)
}

fn cmd_oracle_check(args: OracleCheckArgs) -> Result<u8, HarnessError> {
    let mut failures = 0u64;

    // Closed form vs brute-force enumeration, every configuration with
    // n <= 12 and at most 4 active opinions.
    let mut checked = 0u64;
    let mut worst = 0.0f64;
    for n in 1..=12u64 {
        for cfg in compositions(n, 4) {
            let closed = adoption_distribution(&cfg);
            for rule in [TieBreakRule::FirstSample, TieBreakRule::UniformAmongSample] {
                let brute = brute_force_adoption_distribution(&cfg, rule)
                    .expect("at most 4 active opinions");
                for (&(_, p), &(_, q)) in closed.probs().iter().zip(brute.probs()) {
                    worst = worst.max((p - q).abs());
                }
            }
            checked += 1;
        }
    }
    report(&mut failures, "closed-form vs oracle", worst <= 1e-12, || {
        format!("{checked} configurations, max abs error {worst:.3e}")
    });

    // Normalization and conservation on random configurations up to 1e9.
    let mut rng = seed_for(args.seed, 0xC0FFEE, 0);
    let mut worst_norm = 0.0f64;
    let mut conserved = true;
    for _ in 0..args.fuzz {
        let cfg = random_configuration(&mut rng);
        let dist = adoption_distribution(&cfg);
        worst_norm = worst_norm.max((dist.sum() - 1.0).abs());
        let next = step_multinomial(&cfg, &mut rng);
        conserved &= next.population() == cfg.population();
    }
    report(
        &mut failures,
        "normalization",
        worst_norm <= 1e-9,
        || format!("{} configs, max |sum p - 1| = {worst_norm:.3e}", args.fuzz),
    );
    report(&mut failures, "conservation", conserved, || {
        format!("{} multinomial steps preserve n", args.fuzz)
    });

    // Uniform fixed point.
    let mut uniform_ok = true;
    for k in [2u32, 3, 5, 9] {
        let cfg = Configuration::uniform(9000, k).unwrap();
        for (_, value) in expected_next(&cfg) {
            uniform_ok &= (value - 9000.0 / f64::from(k)).abs() <= 1e-9 * 9000.0;
        }
    }
    report(&mut failures, "uniform fixed point", uniform_ok, || {
        "expected_next(uniform) = n/k for k in {2,3,5,9}".to_string()
    });

    // Quick engine agreement at n = 300.
    let cfg = Configuration::from_supports([
        (trimaj::OpinionId(0), 150u64),
        (trimaj::OpinionId(1), 100),
        (trimaj::OpinionId(2), 50),
    ])
    .unwrap();
    let samples = 20_000u64;
    let mut rng_a = seed_for(args.seed, 0xE1, 0);
    let mut rng_b = seed_for(args.seed, 0xE2, 0);
    let mut means = [(0.0f64, 0.0f64); 3];
    let assignment = NodeAssignment::from_configuration(&cfg);
    for _ in 0..samples {
        let a = step_multinomial(&cfg, &mut rng_a);
        let b = step_node_level(&assignment, TieBreakRule::FirstSample, &mut rng_b)
            .to_configuration();
        for (i, (id, _)) in cfg.iter().enumerate() {
            means[i].0 += a.support(id) as f64;
            means[i].1 += b.support(id) as f64;
        }
    }
    let mut engines_ok = true;
    for (i, (id, _)) in cfg.iter().enumerate() {
        let ma = means[i].0 / samples as f64;
        let mb = means[i].1 / samples as f64;
        let p = adoption_distribution(&cfg).get(id).unwrap();
        let var = 300.0 * p * (1.0 - p);
        let se = (2.0 * var / samples as f64).sqrt();
        engines_ok &= (ma - mb).abs() <= 6.0 * se;
    }
    report(&mut failures, "engine agreement", engines_ok, || {
        format!("{samples} samples per engine at n = 300")
    });

    if failures == 0 {
        println!("oracle-check: all checks passed");
        Ok(0)
    } else {
        println!("oracle-check: {failures} check(s) failed");
        Ok(EXIT_CHECK_FAILED)
    }
}

fn report(failures: &mut u64, name: &str, ok: bool, detail: impl Fn() -> String) {
    if ok {
        println!("PASS {name}: {}", detail());
    } else {
        *failures += 1;
        println!("FAIL {name}: {}", detail());
    }
}

/// All compositions of `n` into at most `max_parts` positive labeled parts.
fn compositions(n: u64, max_parts: u32) -> Vec<Configuration> {
    let mut out = Vec::new();
    let mut parts: Vec<u64> = Vec::new();
    fn recurse(remaining: u64, slots: u32, parts: &mut Vec<u64>, out: &mut Vec<Configuration>) {
        if remaining == 0 {
            if !parts.is_empty() {
                out.push(
                    Configuration::from_supports(
                        parts
                            .iter()
                            .enumerate()
                            .map(|(i, &c)| (trimaj::OpinionId(i as u32), c)),
                    )
                    .unwrap(),
                );
            }
            return;
        }
        if slots == 0 {
            return;
        }
        for take in 1..=remaining {
            parts.push(take);
            recurse(remaining - take, slots - 1, parts, out);
            parts.pop();
        }
    }
    recurse(n, max_parts, &mut parts, &mut out);
    out
}

fn random_configuration(rng: &mut trimaj::SimRng) -> Configuration {
    use rand::Rng;
    let n: u64 = 10f64.powf(rng.random_range(1.0..9.0)) as u64 + 1;
    let k = rng.random_range(1..=64.min(n)) as u32;
    // k - 1 distinct cut points in (0, n) induce k positive parts.
    let mut cuts = std::collections::BTreeSet::new();
    while (cuts.len() as u32) < k - 1 {
        cuts.insert(rng.random_range(1..n));
    }
    let mut supports = Vec::with_capacity(k as usize);
    let mut prev = 0u64;
    for (i, &cut) in cuts.iter().enumerate() {
        supports.push((trimaj::OpinionId(i as u32), cut - prev));
        prev = cut;
    }
    supports.push((trimaj::OpinionId(k - 1), n - prev));
    Configuration::with_population(n, supports).unwrap()
}

fn cmd_drift(cmd: DriftCommand) -> Result<u8, HarnessError> {
    match cmd {
        DriftCommand::Walk(args) => {
            let lambda = args.lambda.unwrap_or(args.p_up - args.p_down);
            let spec = HittingSpec::new(args.target, args.alpha)
                .and_then(|s| s.with_lambda(lambda))
                .map_err(|e| HarnessError::Spec(e.to_string()))?;
            let exact = birth_death_exact_hitting(args.p_up, args.p_down, args.start, args.target)
                .map_err(|e| HarnessError::Spec(e.to_string()))?;
            let walk = BiasedWalk::new(args.start, args.p_up, args.p_down)
                .map_err(|e| HarnessError::Spec(e.to_string()))?;
            let (samples, summary) = measure_hitting_time(
                |_| walk,
                &spec,
                args.trials,
                args.max_rounds,
                args.seed,
            );
            println!(
                "exact E[tau] = {exact:.6}; monte carlo mean = {} (se {}), censored {}/{}",
                fmt_opt(summary.mean_tau),
                fmt_opt(summary.std_error),
                summary.censored,
                summary.trials
            );
            if let Some(bound) = summary.bound {
                println!(
                    "bound 2*alpha*m/lambda = {:.3}: {}",
                    bound.bound,
                    if bound.satisfied { "satisfied" } else { "VIOLATED" }
                );
            }
            if let Some(path) = args.csv {
                write_samples_csv(&path, &samples)?;
                println!("samples written to {}", path.display());
            }
            Ok(0)
        }
        DriftCommand::Onestep(args) => {
            let cfg = Configuration::uniform(args.n, args.k)
                .map_err(HarnessError::Config)?;
            let gap = MinSupportGap::new(cfg.clone());
            let mut rng = seed_for(args.seed, 0xD81F7, 0);
            let est = estimate_one_step_drift(
                &cfg,
                |c| gap.potential_of(c),
                args.trials,
                &mut rng,
            )
            .map_err(|e| HarnessError::Spec(e.to_string()))?;
            let scale = (args.n as f64).sqrt() / f64::from(args.k).powf(1.5);
            println!(
                "one-step drift of the min-support gap at uniform (n={}, j={}): \
                 mean {:.3} (se {:.3}) over {} trials",
                args.n, args.k, est.mean_delta, est.std_error, est.samples
            );
            println!(
                "epsilon-hat = drift * j^(3/2) / sqrt(n) = {:.4}",
                est.mean_delta / scale
            );
            Ok(0)
        }
        DriftCommand::Overshoot(args) => {
            let n = args.n;
            let jf = f64::from(args.j);
            let target = (jf * n as f64 * (n as f64).ln()).sqrt();
            let spec = HittingSpec::new(target.ceil() as i64, args.alpha)
                .map_err(|e| HarnessError::Spec(e.to_string()))?;
            let initial = Configuration::uniform(n, args.j).map_err(HarnessError::Config)?;
            let (samples, summary) = measure_hitting_time(
                |_| MinSupportGap::new(initial.clone()),
                &spec,
                args.trials,
                1_000_000,
                args.seed,
            );
            let threshold = args.alpha * target;
            let est = overshoot_probability(&samples, threshold)
                .map_err(|e| HarnessError::Spec(e.to_string()))?;
            let reference = 2.0 * jf * jf * (n as f64).ln().sqrt();
            println!(
                "tau: mean {} over {} trials ({} hit target); \
                 2 j^2 sqrt(ln n) reference = {reference:.1}",
                fmt_opt(summary.mean_tau),
                summary.trials,
                summary.target_hits
            );
            println!(
                "P(Y_tau > {threshold:.1}) = {:.4} (95% CI [{:.4}, {:.4}])",
                est.probability, est.ci95.0, est.ci95.1
            );
            if let Some(path) = args.csv {
                write_samples_csv(&path, &samples)?;
                println!("samples written to {}", path.display());
            }
            Ok(0)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn write_samples_csv(path: &PathBuf, samples: &[TauSample]) -> Result<(), HarnessError> {
    let mut file = File::create(path)?;
    writeln!(file, "trial,tau,y_at_tau,exit_reason")?;
    for s in samples {
        writeln!(file, "{},{},{},{}", s.trial, s.tau, s.y_at_tau, s.exit.as_str())?;
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<u8, HarnessError> {
    let (header, records) = read_rows_csv(&args.input)?;
    let col = |name: &str| -> Result<usize, HarnessError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Spec(format!("no column {name:?} in input")))
    };
    let (xi, yi) = (col(&args.x)?, col(&args.y)?);
    let mut points = Vec::with_capacity(records.len());
    for record in &records {
        let x: f64 = record[xi]
            .parse()
            .map_err(|_| HarnessError::Spec(format!("non-numeric x value {:?}", record[xi])))?;
        let y: f64 = record[yi]
            .parse()
            .map_err(|_| HarnessError::Spec(format!("non-numeric y value {:?}", record[yi])))?;
        points.push((x, y));
    }
    let points = if args.no_aggregate {
        points
    } else {
        harness::aggregate_mean(&points)
    };
    let fit = fit_scaling(&points)?;
    println!(
        "log-log fit of {} vs {}: slope {:.4}, intercept {:.4}, R^2 {:.4} ({} points)",
        args.y, args.x, fit.slope, fit.intercept, fit.r_squared, fit.points
    );
    Ok(0)
}
