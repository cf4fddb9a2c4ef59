//! The `chai` command line: `run`, `sweep`, `analyze` and `plot`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agent::Pooling;
use crate::error::{ChaiError, Result};
use crate::harness::{run_batch, sweep_grid, Condition, SimId, SweepAxes};
use crate::io::config::{ResolvedConfig, ResultSet, RunConfig, SweepSpec, TaxonomySpec};
use crate::io::plot::{emit_plotspec, FIGURES};
use crate::io::tables::{self, SetLabels};

pub const CONFIG_FILE: &str = "config.json";
pub const TRIALS_FILE: &str = "trials.csv";
pub const BELIEFS_FILE: &str = "beliefs.csv";
pub const PROBES_FILE: &str = "probes.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Parser, Debug)]
#[command(
    name = "chai",
    version,
    about = "Simulate convention formation between adaptive RSA agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate trajectories and write trial, belief and summary tables.
    Run(RunArgs),
    /// Repeat a simulation over a parameter grid and write per-cell statistics.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `default`, or a JSON file with `alpha`, `beta` and `w_c` arrays.
        #[arg(long, default_value = "default")]
        grid: String,
        /// Trajectories per grid cell.
        #[arg(long)]
        per_cell: Option<usize>,
    },
    /// Recompute summary.csv for every result set under a directory.
    Analyze {
        /// A result-set directory, or a run's output directory.
        dir: PathBuf,
    },
    /// Write a plot specification for one figure (or `all`).
    Plot {
        /// A summary.csv, or a directory searched for them.
        input: PathBuf,
        #[arg(long, default_value = "all")]
        figure: String,
        /// Output file (single figure) or directory; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sim: Option<SimId>,
    /// Context conditions (sim31), comma separated.
    #[arg(long, value_delimiter = ',')]
    condition: Vec<Condition>,
    /// Pooling models, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_pooling)]
    pooling: Vec<Pooling>,
    /// Number of trajectories per result set.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON taxonomy and vocabulary document.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Speaker and listener optimality.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    w_c: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Skip beliefs.csv.
    #[arg(long)]
    no_beliefs: bool,
}

fn parse_pooling(s: &str) -> std::result::Result<Pooling, String> {
    Pooling::parse(s).ok_or_else(|| format!("unknown pooling `{s}` (partial, complete, none)"))
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match (&self.config, self.sim) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(sim)) => RunConfig::new(sim),
            (None, None) => return Err(ChaiError::config("sim", "give --sim or --config")),
        };
        if let Some(sim) = self.sim {
            c.sim = sim;
        }
        if !self.condition.is_empty() {
            c.conditions = self.condition.clone();
        }
        if !self.pooling.is_empty() {
            c.pooling = self.pooling.clone();
        }
        if let Some(n) = self.n {
            c.trajectories = Some(n);
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(out) = &self.out {
            c.output = Some(out.clone());
        }
        if let Some(path) = &self.taxonomy {
            c.taxonomy = Some(
                TaxonomySpec::load(path)
                    .map_err(|e| ChaiError::config("taxonomy", e.to_string()))?,
            );
        }
        if let Some(a) = self.alpha {
            c.params.alpha_s = Some(a);
            c.params.alpha_l = Some(a);
        }
        c.params.beta = self.beta.or(c.params.beta);
        c.params.w_c = self.w_c.or(c.params.w_c);
        c.params.epsilon = self.epsilon.or(c.params.epsilon);
        if self.no_beliefs {
            c.record_beliefs = Some(false);
        }
        Ok(c)
    }
}

fn labels(cfg: &ResolvedConfig, set: &ResultSet) -> SetLabels {
    SetLabels {
        sim: cfg.sim.to_string(),
        condition: set
            .condition
            .map_or("-".to_string(), |c| c.as_str().to_string()),
        model: set.pooling.as_str().to_string(),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", dir.display())).into())
}

fn write_echo(dir: &Path, cfg: &ResolvedConfig, set: &ResultSet) -> Result<()> {
    let text = serde_json::to_string_pretty(&cfg.echo(set))?;
    fs::write(dir.join(CONFIG_FILE), text + "\n")?;
    Ok(())
}

/// Runs every result set of `cfg`, writing one directory per set under the
/// output directory. Returns the directories written.
pub fn execute_run(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for set in cfg.sets() {
        let dir = cfg.output.join(set.name(cfg.sim));
        create_dir(&dir)?;
        let exp = cfg.experiment(&set)?;
        let results = run_batch(&exp, cfg.trajectories, cfg.seed)?;
        let labels = labels(cfg, &set);
        write_echo(&dir, cfg, &set)?;
        tables::write_trials(&dir.join(TRIALS_FILE), &labels, &cfg.world, &results)?;
        if cfg.record_beliefs {
            tables::write_beliefs(&dir.join(BELIEFS_FILE), &cfg.world, &results)?;
        }
        if exp.probe_speakers {
            tables::write_probes(&dir.join(PROBES_FILE), &results)?;
        }
        let summary = tables::summarize(&labels, &cfg.world, &results, cfg.seed)?;
        tables::write_summary(&dir.join(SUMMARY_FILE), &summary)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Runs the parameter grid for every result set of `cfg`.
pub fn execute_sweep(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>> {
    let spec = cfg.sweep.clone().unwrap_or_default();
    let mut dirs = Vec::new();
    for set in cfg.sets() {
        let dir = cfg.output.join(format!("{}-sweep", set.name(cfg.sim)));
        create_dir(&dir)?;
        let mut exp = cfg.experiment(&set)?;
        exp.record_beliefs = false;
        let cells = sweep_grid(&exp, &spec.axes, spec.per_cell, cfg.seed)?;
        write_echo(&dir, cfg, &set)?;
        tables::write_sweep(&dir.join(SWEEP_FILE), &tables::sweep_rows(&cells)?)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Result-set directories at or directly below `dir`.
fn set_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join(TRIALS_FILE).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(TRIALS_FILE).is_file())
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(ChaiError::domain(format!(
            "no result sets under {}",
            dir.display()
        )));
    }
    Ok(out)
}

/// Rebuilds summary.csv of one result set from its other tables.
pub fn analyze_set(dir: &Path) -> Result<Vec<tables::SummaryRow>> {
    let cfg = RunConfig::load(&dir.join(CONFIG_FILE))?.resolve()?;
    let set = cfg
        .sets()
        .into_iter()
        .next()
        .ok_or_else(|| ChaiError::domain("configuration has no result set"))?;
    let optional = |name: &str| Some(dir.join(name)).filter(|p| p.is_file());
    let beliefs = optional(BELIEFS_FILE);
    let probes = optional(PROBES_FILE);
    let results = tables::read_results(
        &dir.join(TRIALS_FILE),
        beliefs.as_deref(),
        probes.as_deref(),
        &cfg.world,
    )?;
    let summary = tables::summarize(&labels(&cfg, &set), &cfg.world, &results, cfg.seed)?;
    tables::write_summary(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

fn summaries(input: &Path) -> Result<Vec<tables::SummaryRow>> {
    if input.is_file() {
        return tables::read_summary(input);
    }
    let mut rows = Vec::new();
    for dir in set_dirs(input)? {
        let path = dir.join(SUMMARY_FILE);
        if path.is_file() {
            rows.extend(tables::read_summary(&path)?);
        }
    }
    Ok(rows)
}

fn plot(input: &Path, figure: &str, out: Option<&Path>) -> Result<()> {
    let rows = summaries(input)?;
    let ids: Vec<&str> = if figure == "all" {
        FIGURES.to_vec()
    } else {
        vec![figure]
    };
    for id in ids {
        let text = serde_json::to_string_pretty(&emit_plotspec(&rows, id)?)? + "\n";
        match out {
            None => print!("{text}"),
            Some(p) if figure == "all" || p.is_dir() => {
                fs::create_dir_all(p)?;
                fs::write(p.join(format!("{id}.json")), text)?;
            }
            Some(p) => fs::write(p, text)?,
        }
    }
    Ok(())
}

fn sweep_config(run: &RunArgs, grid: &str, per_cell: Option<usize>) -> Result<RunConfig> {
    let mut c = run.config()?;
    let mut spec: SweepSpec = c.sweep.take().unwrap_or_default();
    if grid != "default" {
        let text = fs::read_to_string(grid)
            .map_err(|e| ChaiError::config("grid", format!("{grid}: {e}")))?;
        spec.axes = serde_json::from_str::<SweepAxes>(&text)
            .map_err(|e| ChaiError::config("grid", e.to_string()))?;
    }
    if let Some(n) = per_cell {
        spec.per_cell = n;
    }
    c.sweep = Some(spec);
    Ok(c)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?.resolve()?;
            for dir in execute_run(&cfg)? {
                eprintln!("wrote {}", dir.display());
            }
        }
        Command::Sweep {
            run,
            grid,
            per_cell,
        } => {
            let cfg = sweep_config(&run, &grid, per_cell)?.resolve()?;
            for dir in execute_sweep(&cfg)? {
                eprintln!("wrote {}", dir.display());
            }
        }
        Command::Analyze { dir } => {
            for d in set_dirs(&dir)? {
                let rows = analyze_set(&d)?;
                eprintln!("{}: {} summary rows", d.display(), rows.len());
            }
        }
        Command::Plot { input, figure, out } => plot(&input, &figure, out.as_deref())?,
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns 0 on success, 2 for invalid arguments or configuration (naming
/// the offending field), and 1 for any other failure.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e @ ChaiError::Config { .. }) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
