use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dvbp_core::engine::audit::{audit_any_fit, write_decision_log};
use dvbp_core::engine::bound::peak_aggregate;
use dvbp_core::experiment::{run_experiment, ExperimentConfig, Seeds};
use dvbp_core::ingest::azure::{read_vm_requests, read_vm_types};
use dvbp_core::ingest::huawei::parse_huawei;
use dvbp_core::ingest::{
    build_azure_instances_with, clean_azure, lifetime_histogram, read_instance_file, write_instance_file,
    AzureColumns, Capacity, HuaweiColumns,
};
use dvbp_core::predictor::{generate_predictions, ErrorKind, ErrorModel};
use dvbp_core::reporting::{performance_ratio, sig6};
use dvbp_core::testkit::{
    brute_force_opt, gen_nrt_adversary, gen_rrnf_adversary, random_instance, NrtParams, RandomTrace, RrnfParams,
};
use dvbp_core::{simulate_logged, Instance, Knowledge, KnowledgeNeed, StrategySpec};

#[derive(Parser)]
#[command(name = "dvbp", version, about = "MinUsageTime dynamic vector bin packing simulator")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw traces into instance files.
    #[command(subcommand)]
    Ingest(IngestCmd),
    /// Generate synthetic or adversarial instances.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Exact minimum usage of a tiny instance (at most 8 items).
    Oracle { instance: PathBuf },
    /// Run an experiment config (TOML, or a previous manifest.json).
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed_base.
        #[arg(long)]
        seed_base: Option<u64>,
        /// Explicit prediction seeds, e.g. `1,2,3`; overrides the config.
        #[arg(long, value_delimiter = ',', conflicts_with = "seed_base")]
        seeds: Option<Vec<u64>>,
    },
    /// Summaries and lifetime histograms of instance files.
    Stats {
        instances: Vec<PathBuf>,
        /// Directory for per-instance histogram CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay one instance through one strategy and print the report.
    Simulate(SimulateArgs),
    /// List strategy names.
    Strategies,
}

#[derive(Subcommand)]
enum IngestCmd {
    Azure {
        #[arg(long)]
        types: PathBuf,
        #[arg(long)]
        requests: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML file mapping column names.
        #[arg(long)]
        columns: Option<PathBuf>,
    },
    Huawei {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated `coresxGB` list.
        #[arg(long, value_delimiter = ',')]
        capacities: Vec<Capacity>,
        #[arg(long)]
        columns: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    Rrnf {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        r: usize,
        #[arg(long, default_value_t = 8.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Seconds.
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    Nrt {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        #[arg(long, default_value_t = 0.4)]
        offset: f64,
        #[arg(long)]
        out: PathBuf,
    },
    Random {
        #[arg(long, default_value_t = 100)]
        items: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        horizon: i64,
        #[arg(long, default_value_t = 1.0)]
        min_duration: f64,
        #[arg(long, default_value_t = 1000.0)]
        max_duration: f64,
        #[arg(long, default_value_t = 0.6)]
        max_size: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    instance: PathBuf,
    #[arg(long)]
    strategy: StrategySpec,
    /// Prediction error, e.g. `lognormal:1` or `uniform:10`.
    #[arg(long)]
    error: Option<ErrorKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the decision log as NDJSON.
    #[arg(long)]
    log: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Ingest(cmd) => ingest(cmd)?,
        Command::Gen(cmd) => gen(cmd)?,
        Command::Oracle { instance } => oracle(&instance)?,
        Command::Run {
            config,
            out,
            seed_base,
            seeds,
        } => return run(&config, &out, seed_base, seeds),
        Command::Stats { instances, out } => stats(&instances, out.as_deref())?,
        Command::Simulate(args) => return simulate(args),
        Command::Strategies => {
            for spec in StrategySpec::catalog() {
                println!("{spec}\t{:?}", spec.knowledge_need());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_columns<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn ingest(cmd: IngestCmd) -> Result<()> {
    match cmd {
        IngestCmd::Azure {
            types,
            requests,
            out,
            columns,
        } => {
            let cols: AzureColumns = read_columns(columns.as_deref())?;
            fs::create_dir_all(&out)?;
            let vm_types = read_vm_types(open(&types)?, &cols, &types.display().to_string())?;
            let raw = read_vm_requests(open(&requests)?, &cols, &requests.display().to_string())?;
            let raw_count = raw.len();
            let cleaned = clean_azure(raw);
            println!("vm types: {} records", vm_types.len());
            println!("requests: {raw_count} raw, {} after cleaning", cleaned.len());
            let report = build_azure_instances_with(&vm_types, &cleaned, |inst| {
                write_instance_file(&out.join(format!("{}.csv", inst.name())), &inst)
            })?;
            println!(
                "instances: {} candidates, {} kept, {} empty, {} duplicate, {} trivial",
                report.candidates,
                report.kept.len(),
                report.empty.len(),
                report.duplicates.len(),
                report.trivial.len()
            );
            write_json(
                &out.join("ingest_report.json"),
                &serde_json::json!({
                    "raw_requests": raw_count,
                    "cleaned_requests": cleaned.len(),
                    "build": report,
                }),
            )?;
        }
        IngestCmd::Huawei {
            events,
            out,
            capacities,
            columns,
        } => {
            let cols: HuaweiColumns = read_columns(columns.as_deref())?;
            let capacities = if capacities.is_empty() { Capacity::default_grid() } else { capacities };
            fs::create_dir_all(&out)?;
            let (instances, report) = parse_huawei(open(&events)?, &cols, &capacities, &events.display().to_string())?;
            for inst in &instances {
                write_instance_file(&out.join(format!("{}.csv", inst.name())), inst)?;
            }
            println!(
                "events: {}, VMs kept: {}, unpaired dropped: {}, zero-length dropped: {}, instances: {}",
                report.events,
                report.vms,
                report.unpaired_dropped,
                report.zero_duration_dropped,
                instances.len()
            );
            write_json(&out.join("ingest_report.json"), &report)?;
        }
    }
    Ok(())
}

fn gen(cmd: GenCmd) -> Result<()> {
    match cmd {
        GenCmd::Rrnf {
            d,
            k,
            r,
            mu,
            eps,
            tau,
            out,
        } => {
            let params = RrnfParams {
                d,
                k,
                rounds: r,
                mu,
                eps,
                tau,
            };
            let adv = gen_rrnf_adversary(&params)?;
            write_instance_file(&out, &adv.instance)?;
            println!(
                "{}: {} items; rr-next-fit usage {} s; hand packing bound {} s",
                adv.instance.name(),
                adv.instance.len(),
                sig6(params.rrnf_usage_s()),
                sig6(params.feasible_bound_s())
            );
        }
        GenCmd::Nrt {
            n,
            rounds,
            eps,
            gap,
            offset,
            out,
        } => {
            let inst = gen_nrt_adversary(&NrtParams {
                n,
                rounds,
                eps,
                gap_s: gap,
                offset,
            })?;
            write_instance_file(&out, &inst)?;
            println!("{}: {} items", inst.name(), inst.len());
        }
        GenCmd::Random {
            items,
            d,
            seed,
            horizon,
            min_duration,
            max_duration,
            max_size,
            out,
        } => {
            if d == 0 || items == 0 || !(min_duration > 0.0 && max_duration >= min_duration) {
                bail!("need items >= 1, d >= 1 and 0 < min-duration <= max-duration");
            }
            if !(0.0..=1.0).contains(&max_size) {
                bail!("max-size must lie in [0, 1]");
            }
            let cfg = RandomTrace {
                items,
                d,
                horizon_s: horizon,
                min_duration_s: min_duration,
                max_duration_s: max_duration,
                max_size,
            };
            let inst = random_instance(&cfg, seed);
            write_instance_file(&out, &inst)?;
            println!("{}: {} items", inst.name(), inst.len());
        }
    }
    Ok(())
}

fn oracle(path: &Path) -> Result<()> {
    let inst = read_instance_file(path)?;
    let opt = brute_force_opt(&inst)?;
    let lb = inst.lower_bound();
    println!("instance: {}", inst.name());
    println!("optimal usage: {} us ({} s)", opt.usage, sig6(opt.usage as f64 / 1e6));
    println!("lower bound:   {lb} us");
    println!("bins: {}", opt.bins);
    let ids: Vec<String> = inst
        .items()
        .iter()
        .zip(&opt.assignment)
        .map(|(it, b)| format!("{}->{b}", it.id))
        .collect();
    println!("assignment: {}", ids.join(" "));
    Ok(())
}

fn run(config: &Path, out: &Path, seed_base: Option<u64>, seeds: Option<Vec<u64>>) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed_base {
        cfg.seed_base = s;
    }
    if let Some(list) = seeds {
        cfg.seeds = Seeds::List(list);
    }
    let started = Instant::now();
    let outcome = run_experiment(&cfg, out)?;
    println!(
        "{} runs over {} instances in {:.1} s; results in {}",
        outcome.result.rows.len(),
        outcome.manifest.instances.len(),
        started.elapsed().as_secs_f64(),
        out.display()
    );
    for c in &outcome.result.cells {
        println!("{:<32} {:<18} {}", c.strategy, c.setting.label(), sig6(c.mean_ratio));
    }
    if !outcome.audits_passed() {
        for r in outcome.result.anyfit_failures() {
            eprintln!(
                "audit: {} on {} opened {} bins while another fitted",
                r.strategy, r.instance, r.anyfit_violations
            );
        }
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn stats(paths: &[PathBuf], out: Option<&Path>) -> Result<()> {
    if paths.is_empty() {
        bail!("no instance files given");
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    for p in paths {
        let inst = read_instance_file(p)?;
        let h = lifetime_histogram(&inst);
        println!(
            "{}: items={} d={} min_duration_us={} max_duration_us={} mu={} lower_bound_us={} peak_linf={}",
            inst.name(),
            inst.len(),
            inst.d(),
            inst.min_duration(),
            inst.max_duration(),
            sig6(inst.mu()),
            inst.lower_bound(),
            sig6(peak_aggregate(&inst))
        );
        let buckets: Vec<String> = h.buckets.iter().map(|(i, c)| format!("{i}:{c}")).collect();
        println!("  lifetime buckets (2^(i-1)..2^i s): {}", buckets.join(" "));
        if let Some(dir) = out {
            h.write_buckets(File::create(dir.join(format!("{}.lifetimes.csv", inst.name())))?)?;
            h.write_log_lifetimes(File::create(dir.join(format!("{}.loglifetimes.csv", inst.name())))?)?;
        }
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let inst: Instance = read_instance_file(&args.instance)?;
    let mut strategy = args.strategy.build();
    let table;
    let knowledge = match (args.error, args.strategy.knowledge_need()) {
        (Some(kind), _) => {
            table = generate_predictions(&inst, &ErrorModel::new(kind, args.seed));
            Knowledge::Predicted(&table)
        }
        (None, KnowledgeNeed::Oblivious) => Knowledge::NonClairvoyant,
        (None, _) => Knowledge::Clairvoyant,
    };
    let started = Instant::now();
    let log = simulate_logged(&inst, strategy.as_mut(), knowledge)?;
    let elapsed = started.elapsed();
    let mut report = serde_json::to_value(&log.report)?;
    report["ratio"] = performance_ratio(&log.report).map(sig6).into();
    report["seconds"] = elapsed.as_secs_f64().into();
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = args.log {
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        write_decision_log(&mut w, &log.decisions)?;
        w.flush()?;
    }
    if args.strategy.is_any_fit() && audit_any_fit(&inst, &log.decisions) > 0 {
        let _ = writeln!(io::stderr(), "audit: {} violated Any Fit", args.strategy);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
