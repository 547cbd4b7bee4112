//! Command-line front end for `kfdr`: adjust p-values, print schedules, run
//! simulation sweeps and evaluate the generalized Simes counterexample.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kfdr::simulation::write_sweep_csv;
use kfdr::{
    apply, counterexample_bound, figure_sweep, CriticalValueSchedule, FkModel, PValueSample, ProcedureSpec,
    SimulationConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] kfdr::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 1 for invalid input, 2 for runtime or numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Core(_) | CliError::Io(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "kfdr", version, about = "Generalized k-FWER and k-FDR multiple testing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply a procedure to a column of p-values.
    Adjust(AdjustArgs),
    /// Print the critical values of a procedure.
    Schedule(ScheduleArgs),
    /// Monte Carlo error rates over a grid of true-null counts.
    Simulate(SimulateArgs),
    /// Lower bound on the 2-FDR of the generalized Simes stepup.
    Counterexample(CounterexampleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProcedureArgs {
    /// bh, gen_bh, gen_by, gen_holm, gen_hochberg, lehmann_romano, gen_simes,
    /// rescaled_hochberg or rescaled_const:C
    #[arg(long)]
    pub procedure: String,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// independent, equicorrelated:RHO or empirical:PATH
    #[arg(long, default_value = "independent")]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct AdjustArgs {
    #[command(flatten)]
    pub common: ProcedureArgs,
    /// CSV with one p-value per row (optional header "p"); stdin if omitted or "-".
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub common: ProcedureArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 2.0)]
    pub mu_alt: f64,
    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated procedure names.
    #[arg(long, default_value = "gen_bh,gen_hochberg,bh")]
    pub procedures: String,
    /// start:stop:step, inclusive of stop when aligned.
    #[arg(long)]
    pub n0_grid: String,
    /// Every false-null p-value is set to 0.
    #[arg(long)]
    pub force_nonnull_zero: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub n0: usize,
    #[arg(long)]
    pub n1: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

/// Parses `independent`, `equicorrelated:RHO` or `empirical:PATH`.
pub fn parse_model(spec: &str, k: usize) -> CliResult<FkModel> {
    let spec = spec.trim();
    if spec == "independent" {
        return Ok(FkModel::independent(k)?);
    }
    if let Some(rho) = spec.strip_prefix("equicorrelated:") {
        let rho: f64 = rho
            .parse()
            .map_err(|_| CliError::Usage(format!("bad correlation in model '{spec}'")))?;
        return Ok(FkModel::equicorrelated(k, rho)?);
    }
    if let Some(path) = spec.strip_prefix("empirical:") {
        let file = File::open(path)?;
        return Ok(FkModel::read_csv(file, k)?);
    }
    Err(CliError::Usage(format!(
        "unknown model '{spec}'; expected independent, equicorrelated:RHO or empirical:PATH"
    )))
}

/// Parses `start:stop:step` (inclusive of `stop` when aligned) or a single value.
pub fn parse_grid(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("bad grid '{spec}'; expected start:stop:step"));
    let parts = spec
        .split(':')
        .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<CliResult<Vec<_>>>()?;
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, stop, step] if step > 0 && start <= stop => Ok((start..=stop).step_by(step).collect()),
        _ => Err(bad()),
    }
}

pub fn parse_procedures(list: &str) -> CliResult<Vec<ProcedureSpec>> {
    let procs = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<ProcedureSpec>())
        .collect::<kfdr::Result<Vec<_>>>()?;
    if procs.is_empty() {
        return Err(CliError::Usage("no procedures given".into()));
    }
    Ok(procs)
}

/// Reads one p-value per row. Blank lines and `#` comments are skipped and a
/// leading `p` header is allowed. Errors carry the 1-based line number.
pub fn read_p_values(text: &str) -> CliResult<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let field = raw.trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        if !seen_data && field.trim_matches('"') == "p" {
            seen_data = true;
            continue;
        }
        seen_data = true;
        let p: f64 = field.parse().map_err(|_| kfdr::Error::Parse {
            line,
            message: format!("expected one p-value, found '{field}'"),
        })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(kfdr::Error::Parse {
                line,
                message: format!("p-value {p} outside [0, 1]"),
            }
            .into());
        }
        values.push(p);
    }
    Ok(values)
}

fn build_schedule(args: &ProcedureArgs, n: usize) -> CliResult<(CriticalValueSchedule, FkModel)> {
    let spec: ProcedureSpec = args.procedure.parse()?;
    let model = parse_model(&args.model, args.k)?;
    let schedule = spec.build(n, args.k, args.alpha, &model)?;
    Ok((schedule, model))
}

fn write_metadata(out: &mut dyn Write, schedule: &CriticalValueSchedule, model: &FkModel) -> io::Result<()> {
    writeln!(out, "# procedure: {}", schedule.procedure().name())?;
    writeln!(out, "# direction: {}", schedule.direction().as_str())?;
    writeln!(out, "# k: {}", schedule.k())?;
    writeln!(out, "# alpha: {}", schedule.alpha_level())?;
    writeln!(out, "# model: {}", model.describe())?;
    if let Some(w) = schedule.warning() {
        writeln!(out, "# warning: {w}")?;
    }
    Ok(())
}

/// `adjust`: decision CSV with columns index, p, critical, rejected. The
/// critical value of a row is the one matched to its rank.
pub fn adjust(args: &AdjustArgs, input: &str, out: &mut dyn Write) -> CliResult<()> {
    let p = read_p_values(input)?;
    if p.is_empty() {
        return Ok(());
    }
    let n = p.len();
    let (schedule, model) = build_schedule(&args.common, n)?;
    let sample = PValueSample::new(p)?;
    let outcome = apply(&sample, &schedule)?;
    let mask = outcome.rejection_mask(n);
    let mut critical = vec![0.0; n];
    for (rank, &idx) in sample.order().iter().enumerate() {
        critical[idx] = schedule.alphas()[rank];
    }
    write_metadata(out, &schedule, &model)?;
    writeln!(out, "# rejections: {}", outcome.r)?;
    writeln!(out, "index,p,critical,rejected")?;
    for i in 0..n {
        writeln!(out, "{},{},{},{}", i + 1, sample.values()[i], critical[i], mask[i])?;
    }
    Ok(())
}

/// `schedule`: CSV with columns index, f_target, alpha.
pub fn schedule(args: &ScheduleArgs, out: &mut dyn Write) -> CliResult<()> {
    let (schedule, model) = build_schedule(&args.common, args.n)?;
    write_metadata(out, &schedule, &model)?;
    writeln!(out, "index,f_target,alpha")?;
    for (i, (t, a)) in schedule.f_targets().iter().zip(schedule.alphas()).enumerate() {
        writeln!(out, "{},{t},{a}", i + 1)?;
    }
    Ok(())
}

/// `simulate`: sweep CSV, one row per (n0, procedure).
pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let grid = parse_grid(&args.n0_grid)?;
    let config = SimulationConfig {
        rho: args.rho,
        mu_alt: args.mu_alt,
        iterations: args.iterations,
        seed: args.seed,
        procedures: parse_procedures(&args.procedures)?,
        force_nonnull_zero: args.force_nonnull_zero,
        ..SimulationConfig::new(args.n, grid[0].min(args.n), args.k, args.alpha)
    };
    config.validate()?;
    let rows = figure_sweep(&config, &grid)?;
    write_sweep_csv(&rows, out)?;
    Ok(())
}

/// Formats `x` with four significant digits.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `counterexample`: text report of the critical value and the bound.
pub fn counterexample(args: &CounterexampleArgs, out: &mut dyn Write) -> CliResult<()> {
    let b = counterexample_bound(args.n0, args.n1, args.alpha)?;
    writeln!(out, "n0 {} n1 {} alpha {}", args.n0, args.n1, args.alpha)?;
    writeln!(out, "alpha_crit {}", sig4(b.alpha_crit))?;
    writeln!(out, "bound {}", sig4(b.bound))?;
    Ok(())
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(File::create(p)?)),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_input(path: Option<&Path>) -> io::Result<String> {
    let mut text = String::new();
    match path {
        Some(p) if p != Path::new("-") => {
            File::open(p)?.read_to_string(&mut text)?;
        }
        _ => {
            io::stdin().read_to_string(&mut text)?;
        }
    }
    Ok(text)
}

/// Runs a parsed command against the real filesystem and stdio. Output
/// files are only created once the result has been computed.
pub fn run(cli: &Cli) -> CliResult<()> {
    let mut buf = Vec::new();
    let output = match &cli.command {
        Command::Adjust(a) => {
            let text = read_input(a.input.as_deref())?;
            adjust(a, &text, &mut buf)?;
            a.output.as_deref()
        }
        Command::Schedule(a) => {
            schedule(a, &mut buf)?;
            a.output.as_deref()
        }
        Command::Simulate(a) => {
            simulate(a, &mut buf)?;
            a.output.as_deref()
        }
        Command::Counterexample(a) => {
            counterexample(a, &mut buf)?;
            None
        }
    };
    let mut out = open_output(output)?;
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}
