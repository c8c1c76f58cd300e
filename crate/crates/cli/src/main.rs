mod locate;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ea_lab::analytic::{self, BoundReport};
use ea_lab::harness::output::{write_raw, write_summary};
use ea_lab::harness::presets::{preset_suite, PRESET_NAMES};
use ea_lab::harness::{run_experiment, Diagnostic, ExperimentConfig, ExperimentSummary, Format, RawRecord, Severity};
use ea_lab::{LengthDistribution, SequenceFamily, SequenceKind};

#[derive(Parser)]
#[command(name = "ea-lab", version, about = "(1+1) EA experiments for unknown solution lengths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments in a config file.
    Run(RunArgs),
    /// Run a length sweep and report the fitted scaling exponent.
    Sweep(RunArgs),
    /// Evaluate a runtime formula.
    #[command(subcommand)]
    Analytic(Formula),
    /// List presets, or print the configs of one.
    Presets {
        name: Option<String>,
        /// Write the configs here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file and print diagnostics.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with one config or an array of configs.
    #[arg(long)]
    config: PathBuf,
    /// Raw per-run output; the summary goes next to it as `<stem>.summary.<ext>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "EA_LAB_THREADS")]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Formula {
    /// Exact LeadingOnes runtime at uniform rate p.
    LoExact {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Exact LeadingOnes runtime for comma-separated rates.
    LoVector {
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
    },
    /// OneMax upper bound at uniform rate p.
    OmUpper {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// OneMax lower bound at uniform rate p.
    OmLower {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Exact LeadingOnes runtime averaged over TruncGeo(N, q) at rate factor*q.
    LoMixture {
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.5)]
        factor: f64,
    },
    /// OneMax and LeadingOnes bounds for the LogPower(s, eps) rate vector
    /// scaled to total `target_sum`.
    Reform {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        s: u32,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        target_sum: f64,
    },
}

/// Failure classes and their exit codes.
enum Failure {
    /// Bad input: usage, config or validation (exit 1).
    Input(String),
    /// Anything that goes wrong while running or writing (exit 2).
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(args) => run(args, false),
        Command::Sweep(args) => run(args, true),
        Command::Analytic(f) => analytic_cmd(f),
        Command::Presets { name, out } => presets_cmd(name, out),
        Command::Validate { config } => validate_cmd(&config),
    }
}

/// Parses a file holding one config or an array of them. Serde's
/// messages name the offending key and carry the line.
fn parse_configs(text: &str) -> Result<(Vec<ExperimentConfig>, bool), String> {
    let is_array = text.trim_start().starts_with('[');
    let parsed = if is_array {
        serde_json::from_str::<Vec<ExperimentConfig>>(text)
    } else {
        serde_json::from_str::<ExperimentConfig>(text).map(|c| vec![c])
    };
    parsed.map(|c| (c, is_array)).map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

/// Diagnostics of every config with keys prefixed for arrays and lines
/// resolved against the source text.
fn diagnose(text: &str, configs: &[ExperimentConfig], is_array: bool) -> Vec<(Diagnostic, Option<usize>)> {
    let mut out = Vec::new();
    for (i, cfg) in configs.iter().enumerate() {
        for mut d in cfg.diagnostics() {
            if is_array {
                d.key = format!("[{i}].{}", d.key);
            }
            let line = locate::line_of(text, &d.key);
            out.push((d, line));
        }
    }
    out
}

fn render(d: &Diagnostic, line: Option<usize>) -> String {
    match line {
        Some(l) => format!("line {l}: {d}"),
        None => d.to_string(),
    }
}

fn load(path: &Path) -> Result<Vec<ExperimentConfig>, Failure> {
    let text = read(path)?;
    let (configs, is_array) = parse_configs(&text).map_err(Failure::Input)?;
    let diagnostics = diagnose(&text, &configs, is_array);
    let mut errors = Vec::new();
    for (d, line) in &diagnostics {
        match d.severity {
            Severity::Warning => eprintln!("{}", render(d, *line)),
            Severity::Error => errors.push(render(d, *line)),
        }
    }
    if !errors.is_empty() {
        return Err(Failure::Input(errors.join("\n")));
    }
    Ok(configs)
}

fn sibling_summary(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}.summary.{ext}"))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> ea_lab::Result<()>) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| Failure::Runtime(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    write(tmp.as_file_mut()).map_err(|e| fail(&e))?;
    tmp.as_file_mut().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn run(args: RunArgs, require_sweep: bool) -> Result<(), Failure> {
    let mut configs = load(&args.config)?;
    if require_sweep {
        for cfg in &configs {
            let lengths = match &cfg.length {
                ea_lab::harness::config::LengthPolicy::Sweep(ns) => ns.len(),
                _ => 0,
            };
            if lengths < 3 {
                return Err(Failure::Input(format!(
                    "{}: sweep needs `length.sweep` with at least 3 lengths",
                    cfg.id
                )));
            }
        }
    }
    if let Some(seed) = args.seed {
        for cfg in &mut configs {
            cfg.master_seed = seed;
        }
    }
    if args.threads == Some(0) {
        return Err(Failure::Input("--threads must be at least 1".into()));
    }
    let mut raw: Vec<RawRecord> = Vec::new();
    let mut summaries: Vec<ExperimentSummary> = Vec::new();
    for cfg in &configs {
        let out = run_experiment(cfg, args.threads).map_err(|e| Failure::Runtime(e.to_string()))?;
        raw.extend(out.raw);
        summaries.push(out.summary);
    }
    let format = Format::from(args.format);
    if let Some(path) = &args.out {
        write_atomic(path, |w| write_raw(w, &raw, format))?;
        write_atomic(&sibling_summary(path), |w| write_summary(w, &summaries, format))?;
    }
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    write_summary(&mut lock, &summaries, format).map_err(|e| Failure::Runtime(e.to_string()))?;
    for s in &summaries {
        for cell in s.cells.iter().filter(|c| c.unusable()) {
            eprintln!(
                "warning: {} {}: {} of {} runs hit the budget",
                s.experiment_id, cell.cell_key, cell.censored, cell.trials
            );
        }
        match (&s.fit, require_sweep) {
            (Some(fit), _) => eprintln!(
                "fit {}: alpha = {:.4} (stderr {:.4})",
                s.experiment_id, fit.alpha, fit.stderr
            ),
            (None, true) => eprintln!("fit {}: not available (a cell has no uncensored runs)", s.experiment_id),
            _ => {}
        }
    }
    Ok(())
}

fn analytic_cmd(f: Formula) -> Result<(), Failure> {
    let input = |e: ea_lab::Error| Failure::Input(e.to_string());
    let rows: Vec<(&str, String, BoundReport)> = match f {
        Formula::LoExact { n, p } => vec![(
            "lo_exact_uniform",
            format!("n={n};p={p}"),
            analytic::lo_exact_uniform(n, p).map_err(input)?,
        )],
        Formula::LoVector { rates } => {
            let params = format!(
                "rates={}",
                rates.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";")
            );
            vec![("lo_exact_vector", params, analytic::lo_exact_vector(&rates).map_err(input)?)]
        }
        Formula::OmUpper { n, p } => vec![(
            "om_upper_uniform",
            format!("n={n};p={p}"),
            analytic::om_upper_uniform(n, p).map_err(input)?,
        )],
        Formula::OmLower { n, p } => vec![(
            "om_lower_uniform",
            format!("n={n};p={p}"),
            analytic::om_lower_uniform(n, p).map_err(input)?,
        )],
        Formula::LoMixture { n_max, q, factor } => {
            let dist = LengthDistribution::TruncGeo { n_max, q };
            let r = analytic::mixture_expectation(&dist, |n| analytic::lo_exact_uniform(n, factor * q))
                .map_err(input)?;
            vec![("mixture_lo_exact_uniform", format!("n_max={n_max};q={q};factor={factor}"), r)]
        }
        Formula::Reform { n, s, eps, target_sum } => {
            let seq = SequenceFamily::new(SequenceKind::LogPower { s, eps })
                .and_then(|f| f.normalized(target_sum))
                .map_err(input)?;
            let (om, lo) = analytic::reform_upper_bounds(&seq, n).map_err(input)?;
            let params = format!("n={n};s={s};eps={eps};target_sum={target_sum}");
            vec![("reform_om", params.clone(), om), ("reform_lo", params, lo)]
        }
    };
    println!("formula,params,value,kind,validity");
    for (name, params, r) in rows {
        println!("{name},{params},{},{},\"{}\"", r.value, r.kind.as_str(), r.validity);
    }
    Ok(())
}

fn presets_cmd(name: Option<String>, out: Option<PathBuf>) -> Result<(), Failure> {
    let Some(name) = name else {
        for n in PRESET_NAMES {
            println!("{n}");
        }
        return Ok(());
    };
    let suite = preset_suite(&name).map_err(|e| Failure::Input(e.to_string()))?;
    let text = serde_json::to_string_pretty(&suite).expect("configs serialize");
    match out {
        Some(path) => write_atomic(&path, |w| {
            w.write_all(text.as_bytes())
                .and_then(|_| w.write_all(b"\n"))
                .map_err(|e| ea_lab::Error::Config(e.to_string()))
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn validate_cmd(path: &Path) -> Result<(), Failure> {
    let text = read(path)?;
    let (configs, is_array) = parse_configs(&text).map_err(Failure::Input)?;
    let diagnostics = diagnose(&text, &configs, is_array);
    for (d, line) in &diagnostics {
        println!("{}", render(d, *line));
    }
    let errors = diagnostics.iter().filter(|(d, _)| d.severity == Severity::Error).count();
    if errors > 0 {
        return Err(Failure::Input(format!("{errors} error(s) in {}", path.display())));
    }
    Ok(())
}
