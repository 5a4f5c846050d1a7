use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::{Table, Value};

use partial_transfer::config::{
    apply_overrides, curve_tables, parse_table, presets, run_from_table, set_dotted, ExperimentConfig,
};
use partial_transfer::model::extend_truth;
use partial_transfer::montecarlo::rng::replicate_rng;
use partial_transfer::montecarlo::{
    insight_checks, run_cases, run_sweep, standard_cases, verify_lemma_suite, InsightSuite,
};
use partial_transfer::theory::{
    allocate_budget, bnoise_trend, sacrifice_analysis, sacrifice_crossover_sigma1_sq, ScenarioParams,
};

mod output;

#[derive(Parser)]
#[command(name = "ptl", version, about = "Partial parameter transfer in linear models: sweeps, presets and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file or preset.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Regenerate one of the figure presets.
    Figure {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
        name: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Run the lemma, closed-form and insight checks; exits 1 on any failure.
    Verify {
        #[arg(long, default_value_t = 2023)]
        seed: u64,
        /// Replicates for every Monte Carlo check (default: per check).
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Skip the figure-shape checks, the slowest part.
        #[arg(long)]
        skip_insights: bool,
    },
    /// Recommend a split of the feature budget and whether to sacrifice a
    /// weak common feature.
    Advise {
        #[command(flatten)]
        source: Source,
    },
    /// Print a preset config, or list them.
    Preset { name: Option<String> },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceGroup {
    /// Config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Embedded preset name.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    which: SourceGroup,
    /// Dotted-key override, e.g. `learner.p=20`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Args)]
struct RunFlags {
    /// Master seed; overrides `experiment.seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `experiment.replicates`
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory, defaults to the current one
    #[arg(long, env = "PTL_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

/// Config problems exit with 2, failed checks with 1.
enum Failure {
    Usage(anyhow::Error),
    Verification,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<partial_transfer::Error> for Failure {
    fn from(e: partial_transfer::Error) -> Self {
        Failure::Usage(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { source, run } => load(&source.which, &source.overrides).and_then(|(t, label)| {
            let name = format!("sweep {label}");
            sweep(t, &run, &name)
        }),
        Command::Figure { name, overrides, run } => {
            load_preset(&name, &overrides).and_then(|t| sweep(t, &run, &format!("figure {name}")))
        }
        Command::Verify { seed, replicates, threads, skip_insights } => {
            verify(seed, replicates, threads, skip_insights)
        }
        Command::Advise { source } => load(&source.which, &source.overrides).and_then(|(t, _)| advise(&t)),
        Command::Preset { name } => preset(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn split_overrides(raw: &[String]) -> Result<Vec<(String, String)>, Failure> {
    raw.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| anyhow!("override `{s}` is not KEY=VALUE").into())
        })
        .collect()
}

fn load_preset(name: &str, overrides: &[String]) -> Result<Table, Failure> {
    let text = presets::get(name).ok_or_else(|| anyhow!("unknown preset `{name}`"))?;
    let mut t = parse_table(text)?;
    apply_overrides(&mut t, &split_overrides(overrides)?)?;
    Ok(t)
}

fn load(which: &SourceGroup, overrides: &[String]) -> Result<(Table, String), Failure> {
    if let Some(name) = &which.preset {
        return Ok((load_preset(name, overrides)?, format!("--preset {name}")));
    }
    let path = which.config.as_ref().ok_or_else(|| anyhow!("need --config or --preset"))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut t = parse_table(&text).with_context(|| format!("parsing {}", path.display()))?;
    t.remove("manifest");
    apply_overrides(&mut t, &split_overrides(overrides)?)?;
    Ok((t, format!("--config {}", path.display())))
}

fn apply_run_flags(t: &mut Table, run: &RunFlags) -> Result<(), Failure> {
    if let Some(s) = run.seed {
        set_dotted(t, "experiment.seed", Value::Integer(to_i64(s)?))?;
    }
    if let Some(r) = run.replicates {
        set_dotted(t, "experiment.replicates", Value::Integer(to_i64(r as u64)?))?;
    }
    if let Some(n) = run.threads {
        set_dotted(t, "experiment.threads", Value::Integer(to_i64(n as u64)?))?;
    }
    Ok(())
}

fn to_i64(x: u64) -> Result<i64, Failure> {
    i64::try_from(x).map_err(|_| anyhow!("{x} does not fit in a TOML integer").into())
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn sweep(mut table: Table, run: &RunFlags, command: &str) -> Result<(), Failure> {
    let Format::Csv = run.format;
    apply_run_flags(&mut table, run)?;
    let out_dir = run.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let base_name = ExperimentConfig::from_table(&table)?.experiment.name;

    // Resolve everything before running anything so config errors surface early.
    let mut jobs = Vec::new();
    for (id, mut t) in curve_tables(&table)? {
        if let Some(id) = &id {
            set_dotted(&mut t, "experiment.name", Value::String(format!("{base_name}-{id}")))?;
        }
        let r = run_from_table(&t, id)?;
        jobs.push((t, r));
    }

    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (t, r) in jobs {
        let started = Instant::now();
        let records = run_sweep(&r.spec, &r.truth, &r.learner, &r.sacrifice)?;
        let stem = file_stem(&r.name);
        let csv_path = out_dir.join(format!("{stem}.csv"));
        write(&csv_path, &output::render(&records, r.bias_bound_columns))?;
        let manifest_path = out_dir.join(format!("{stem}.manifest.toml"));
        write(&manifest_path, &manifest(&t, command, r.spec.master_seed, started, &csv_path)?)?;
        println!("{}", csv_path.display());
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// The resolved config plus a `[manifest]` table; feeding it back to
/// `sweep --config` reproduces the CSV.
fn manifest(resolved: &Table, command: &str, seed: u64, started: Instant, csv: &Path) -> Result<String, Failure> {
    let mut m = Table::new();
    m.insert("command".into(), Value::String(command.into()));
    m.insert("tool_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    m.insert("master_seed".into(), Value::Integer(to_i64(seed)?));
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    m.insert("finished_unix".into(), Value::Integer(to_i64(now)?));
    m.insert("wall_clock_seconds".into(), Value::Float(started.elapsed().as_secs_f64()));
    m.insert("outputs".into(), Value::Array(vec![Value::String(csv.display().to_string())]));
    let mut doc = resolved.clone();
    doc.insert("manifest".into(), Value::Table(m));
    toml::to_string(&doc).map_err(|e| anyhow!("serializing manifest: {e}").into())
}

fn verify(seed: u64, replicates: Option<usize>, threads: usize, skip_insights: bool) -> Result<(), Failure> {
    let mut ok = true;

    println!("== lemmas");
    let lemmas = verify_lemma_suite(&mut replicate_rng(seed, u64::MAX, 0));
    print!("{lemmas}");
    ok &= lemmas.all_passed();

    println!("== closed forms");
    let cases = run_cases(&standard_cases(replicates, seed), threads)?;
    print!("{cases}");
    ok &= cases.all_passed();

    if !skip_insights {
        println!("== insights");
        let suite = InsightSuite { replicates: replicates.unwrap_or(200), seed, threads };
        let insights = insight_checks(&suite)?;
        print!("{insights}");
        ok &= insights.all_passed();
    }

    println!("{}", if ok { "all checks passed" } else { "some checks FAILED" });
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn advise(table: &Table) -> Result<(), Failure> {
    let cfg = ExperimentConfig::from_table(table)?;
    let gt = cfg.ground_truth.build()?;
    let learner = cfg.learner_config();
    let s = &cfg.sacrifice;
    let sacrifice = partial_transfer::model::Sacrifice {
        common: s.common.clone(),
        task1: s.task1.clone(),
        task2: s.task2.clone(),
    };
    let ext = extend_truth(&gt, &learner, &sacrifice)?;
    let sp = ScenarioParams::from_truth(&ext, &learner);
    let budget = cfg.advise.as_ref().and_then(|a| a.budget).unwrap_or(learner.p + learner.p1);
    let v = cfg.advise.as_ref().map_or(0.1, |a| a.sacrifice_value);
    let s_common = gt.s();

    println!("budget p + p1 = {budget}, true common features s = {s_common}, n1 = {}", learner.n1);
    let alloc = allocate_budget(budget, s_common, &sp)?;
    println!("recommended split: p = {}, p1 = {}", alloc.p, alloc.p1);
    println!("  the transferring error does not decrease as p grows at a fixed budget,");
    println!("  so spend the remainder on source-specific features");
    match alloc.transferring_error {
        Some(t) if t.is_exact() => println!("  expected transferring error at this split: {:.6}", t.lower()),
        Some(t) => println!("  expected transferring error at this split: [{:.6}, {:.6}]", t.lower(), t.upper()),
        None => println!("  expected transferring error undefined at this split (interpolation threshold)"),
    }
    if learner.p + learner.p1 > learner.n1 + 1 {
        println!(
            "  current (p, p1) = ({}, {}): noise term {:?} in p",
            learner.p,
            learner.p1,
            bnoise_trend(learner.p, learner.p1, learner.n1)
        );
    }

    println!("sacrificing one weak common feature of size {v} (sigma1 = {}):", gt.sigma1);
    match sacrifice_analysis(budget, learner.n1, gt.sigma1, v) {
        Ok(a) => {
            println!("  Q1 (keep both)      = {:.6}", a.q1);
            println!("  Q2 (sacrifice one)  = {:.6}", a.q2);
            let cross = sacrifice_crossover_sigma1_sq(budget, learner.n1, v)?;
            println!("  sacrificing pays off once sigma1^2 exceeds {cross:.6}");
            println!("  recommendation: {}", if a.recommend { "sacrifice" } else { "keep both" });
        }
        Err(e) => println!("  not applicable: {e}"),
    }
    Ok(())
}

fn preset(name: Option<&str>) -> Result<(), Failure> {
    match name {
        None => {
            for n in presets::NAMES {
                println!("{n}");
            }
            Ok(())
        }
        Some(n) => match presets::get(n) {
            Some(text) => {
                print!("{text}");
                Ok(())
            }
            None => Err(anyhow!("unknown preset `{n}`; known: {}", presets::NAMES.join(", ")).into()),
        },
    }
}
