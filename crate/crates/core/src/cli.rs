//! Command-line front end.
//!
//! Settings resolve as command-line flag, then `--config` file, then the
//! library default. The config file holds one `key = value` per line; `#`
//! starts a comment, and keys use the flag names with `-` or `_`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::continuation::{continue_branch_with, solve_single, step_count, Branch, SolverSettings};
use crate::diagnostics::{figure_data, fit_order, h1_distance, Figure, Reference};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOFT_FAILURE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_TRUNCATED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

const DEFAULT_N: usize = 129;
const DEFAULT_DS: f64 = 0.1;
const DEFAULT_SAMPLES: usize = 201;
/// Upper end of the slope window used by `validate` for the order fit.
const DEFAULT_WINDOW: f64 = 0.5;

const CONFIG_KEYS: &[&str] = &[
    "threads",
    "n",
    "s",
    "s_max",
    "ds",
    "out",
    "branch",
    "reference",
    "window",
    "figure",
    "samples",
    "lambda0",
    "lambda_up",
    "lambda_down",
    "fd_step",
    "tol_residual",
    "tol_step",
    "max_iters",
    "outer_nodes",
    "inner_abs_tol",
    "inner_rel_tol",
    "inner_max_subdivisions",
    "split_halfwidth_z",
    "split_halfwidth_end",
    "series_order",
];

#[derive(Debug, Parser)]
#[command(
    name = "muskat-selfsim",
    version,
    about = "Self-similar Muskat profiles"
)]
pub struct Cli {
    /// Worker threads for Jacobian columns and residual rows.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat `key = value` settings file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for a single slope.
    Solve {
        #[arg(long, allow_negative_numbers = true)]
        s: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Continue the branch from s = 0 to s_max.
    Continue {
        #[arg(long, allow_negative_numbers = true)]
        s_max: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        ds: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Report discrepancies from the arctan references and fit their order.
    Validate {
        #[arg(long)]
        branch: Option<PathBuf>,
        /// `kappa` or `theorem`.
        #[arg(long)]
        reference: Option<String>,
        /// Largest slope used in the order fit.
        #[arg(long)]
        window: Option<f64>,
    },
    /// Write figure data as CSV.
    Export {
        #[arg(long)]
        branch: Option<PathBuf>,
        /// `discrepancy`, `normalized` or `integrated`.
        #[arg(long)]
        figure: Option<String>,
        /// Comma-separated slopes; defaults to the figure's list.
        #[arg(long, value_delimiter = ',')]
        s: Option<Vec<f64>>,
        #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["LO", "HI"])]
        y_range: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Args)]
pub struct SolverFlags {
    #[arg(long)]
    pub lambda0: Option<f64>,
    #[arg(long)]
    pub lambda_up: Option<f64>,
    #[arg(long)]
    pub lambda_down: Option<f64>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub tol_residual: Option<f64>,
    #[arg(long)]
    pub tol_step: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub outer_nodes: Option<usize>,
    #[arg(long)]
    pub inner_abs_tol: Option<f64>,
    #[arg(long)]
    pub inner_rel_tol: Option<f64>,
    #[arg(long)]
    pub inner_max_subdivisions: Option<usize>,
    #[arg(long)]
    pub split_halfwidth_z: Option<f64>,
    #[arg(long)]
    pub split_halfwidth_end: Option<f64>,
    #[arg(long)]
    pub series_order: Option<usize>,
}

/// Error carrying its exit status.
#[derive(Debug)]
struct Exit {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Exit {
    Exit {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn data(message: impl Into<String>) -> Exit {
    Exit {
        code: EXIT_DATA,
        message: message.into(),
    }
}

type Run<T> = std::result::Result<T, Exit>;

/// Parsed `key = value` file.
#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let key = key.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {key:?}", i + 1));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// The flag value if given, else the parsed config entry.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Run<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| usage(format!("config key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }
}

fn settings(flags: SolverFlags, cfg: &ConfigFile) -> Run<SolverSettings> {
    let mut st = SolverSettings::default();
    macro_rules! set {
        ($field:ident, $target:expr) => {
            if let Some(v) = cfg.pick(flags.$field, stringify!($field))? {
                $target = v;
            }
        };
    }
    set!(lambda0, st.lm.lambda0);
    set!(lambda_up, st.lm.lambda_up);
    set!(lambda_down, st.lm.lambda_down);
    set!(fd_step, st.lm.fd_step);
    set!(tol_residual, st.lm.tol_residual);
    set!(tol_step, st.lm.tol_step);
    set!(max_iters, st.lm.max_iters);
    set!(inner_abs_tol, st.residual.inner_quad.abs_tol);
    set!(inner_rel_tol, st.residual.inner_quad.rel_tol);
    set!(
        inner_max_subdivisions,
        st.residual.inner_quad.max_subdivisions
    );
    set!(split_halfwidth_z, st.residual.split_halfwidth_z);
    set!(split_halfwidth_end, st.residual.split_halfwidth_end);
    set!(series_order, st.residual.series_order);
    if let Some(m) = cfg.pick(flags.outer_nodes, "outer_nodes")? {
        st.residual.outer_nodes = Some(m);
    }
    st.lm.validate().map_err(|e| usage(e.to_string()))?;
    st.residual.validate().map_err(|e| usage(e.to_string()))?;
    Ok(st)
}

fn grid_size(flag: Option<usize>, cfg: &ConfigFile) -> Run<usize> {
    let n = cfg.pick(flag, "n")?.unwrap_or(DEFAULT_N);
    if n < 3 {
        return Err(usage(format!("--n must be at least 3, got {n}")));
    }
    Ok(n)
}

fn path(flag: Option<PathBuf>, cfg: &ConfigFile, key: &str) -> Run<Option<PathBuf>> {
    cfg.pick(flag, key)
}

fn output_path(flag: Option<PathBuf>, cfg: &ConfigFile, default: &str) -> Run<PathBuf> {
    writable(path(flag, cfg, "out")?.unwrap_or_else(|| PathBuf::from(default)))
}

/// Rejects output paths whose directory does not exist, before any solving.
fn writable(out: PathBuf) -> Run<PathBuf> {
    let dir = out.parent().filter(|d| !d.as_os_str().is_empty());
    if dir.is_some_and(|d| !d.is_dir()) || out.is_dir() {
        return Err(usage(format!("cannot write {}", out.display())));
    }
    Ok(out)
}

fn write_file(out: &Path, text: &str) -> Run<()> {
    std::fs::write(out, text).map_err(|e| usage(format!("cannot write {}: {e}", out.display())))
}

fn write_branch(branch: &Branch, out: &Path) -> Run<()> {
    write_file(out, &(branch.to_json() + "\n"))
}

fn read_branch(flag: Option<PathBuf>, cfg: &ConfigFile) -> Run<Branch> {
    let file = path(flag, cfg, "branch")?.ok_or_else(|| usage("--branch is required"))?;
    let branch = Branch::read(&file).map_err(|e| data(e.to_string()))?;
    if branch.is_empty() {
        return Err(data(format!("{}: branch has no steps", file.display())));
    }
    Ok(branch)
}

fn solve(
    s: Option<f64>,
    n: Option<usize>,
    out: Option<PathBuf>,
    flags: SolverFlags,
    cfg: &ConfigFile,
) -> Run<i32> {
    let s = cfg.pick(s, "s")?.ok_or_else(|| usage("--s is required"))?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(usage(format!(
            "--s must be a finite non-negative slope, got {s}"
        )));
    }
    let n = grid_size(n, cfg)?;
    let st = settings(flags, cfg)?;
    let out = output_path(out, cfg, "profile.json")?;

    let mut branch = solve_single(s, n, &st).map_err(|e| Exit {
        code: EXIT_SOLVER,
        message: e.to_string(),
    })?;
    if let Some(f) = &branch.failure {
        let mut message = format!("solve failed at s = {}: {}", f.s, f.message);
        if let Some(r) = &f.report {
            message.push_str(&format!(
                "\n  residual history: {:?}\n  lambda history: {:?}",
                r.residual_history, r.lambda_history
            ));
        }
        return Err(Exit {
            code: EXIT_SOLVER,
            message,
        });
    }
    let last = branch
        .steps
        .pop()
        .expect("a solved branch has a final step");
    branch.steps = vec![last];
    write_branch(&branch, &out)?;
    let step = &branch.steps[0];
    println!(
        "s = {}  iterations = {}  residual = {:.3e}  -> {}",
        step.s,
        step.report.iterations,
        step.report.residual_norm,
        out.display()
    );
    Ok(EXIT_OK)
}

fn continue_cmd(
    s_max: Option<f64>,
    ds: Option<f64>,
    n: Option<usize>,
    out: Option<PathBuf>,
    flags: SolverFlags,
    cfg: &ConfigFile,
) -> Run<i32> {
    let s_max = cfg
        .pick(s_max, "s_max")?
        .ok_or_else(|| usage("--s-max is required"))?;
    let ds = cfg.pick(ds, "ds")?.unwrap_or(DEFAULT_DS);
    step_count(s_max, ds).map_err(|e| usage(e.to_string()))?;
    let n = grid_size(n, cfg)?;
    let st = settings(flags, cfg)?;
    let out = output_path(out, cfg, "branch.json")?;

    let branch = continue_branch_with(s_max, ds, n, &st, |step| {
        eprintln!(
            "s = {:<8} iterations = {:<3} residual = {:.3e}{}",
            step.s,
            step.report.iterations,
            step.report.residual_norm,
            if step.halved { "  (halved)" } else { "" }
        );
    })
    .map_err(|e| Exit {
        code: EXIT_SOLVER,
        message: e.to_string(),
    })?;
    write_branch(&branch, &out)?;
    match &branch.failure {
        None => {
            println!("{} steps to s = {s_max} -> {}", branch.len(), out.display());
            Ok(EXIT_OK)
        }
        Some(f) => {
            let last = branch
                .last_s()
                .map_or("none".to_string(), |s| s.to_string());
            eprintln!("branch truncated at s = {}: {}", f.s, f.message);
            eprintln!("last good s = {last}");
            Ok(EXIT_TRUNCATED)
        }
    }
}

fn validate(
    branch: Option<PathBuf>,
    reference: Option<String>,
    window: Option<f64>,
    cfg: &ConfigFile,
) -> Run<i32> {
    let reference: Reference = cfg
        .pick(reference, "reference")?
        .map(|r| r.parse().map_err(|e: crate::Error| usage(e.to_string())))
        .transpose()?
        .unwrap_or(Reference::KappaArctan);
    let window = cfg.pick(window, "window")?.unwrap_or(DEFAULT_WINDOW);
    let branch = read_branch(branch, cfg)?;

    println!("{:>10} {:>14} {:>14}", "s", "h1", "max");
    let mut fit_s = Vec::new();
    let mut fit_d = Vec::new();
    for step in &branch.steps {
        if step.s == 0.0 {
            continue;
        }
        let rep = h1_distance(&step.profile, reference).map_err(|e| data(e.to_string()))?;
        println!(
            "{:>10} {:>14.6e} {:>14.6e}",
            step.s, rep.h1_distance, rep.linf_distance
        );
        if step.s <= window + 1e-12 {
            fit_s.push(step.s);
            fit_d.push(rep.h1_distance);
        }
    }
    if fit_s.len() < 2 {
        println!("order undefined: need at least two slopes in (0, {window}]");
        return Ok(EXIT_SOFT_FAILURE);
    }
    match fit_order(&fit_s, &fit_d) {
        Some(order) => {
            let ok = (2.5..=3.5).contains(&order);
            println!(
                "fitted order {order:.4} over {} slopes in (0, {window}]: {}",
                fit_s.len(),
                if ok {
                    "consistent with 3"
                } else {
                    "outside [2.5, 3.5]"
                }
            );
            Ok(if ok { EXIT_OK } else { EXIT_SOFT_FAILURE })
        }
        None => {
            println!("order undefined: discrepancies are not positive");
            Ok(EXIT_SOFT_FAILURE)
        }
    }
}

fn export(
    branch: Option<PathBuf>,
    figure: Option<String>,
    s: Option<Vec<f64>>,
    y_range: Option<Vec<f64>>,
    samples: Option<usize>,
    out: Option<PathBuf>,
    cfg: &ConfigFile,
) -> Run<i32> {
    let figure: Figure = cfg
        .pick(figure, "figure")?
        .ok_or_else(|| usage("--figure is required"))?
        .parse()
        .map_err(|e: crate::Error| usage(e.to_string()))?;
    let samples = cfg.pick(samples, "samples")?.unwrap_or(DEFAULT_SAMPLES);
    let range = match y_range {
        Some(r) => (r[0], r[1]),
        None => figure.default_range(),
    };
    let out = path(out, cfg, "out")?.map(writable).transpose()?;
    let branch = read_branch(branch, cfg)?;

    let slopes = match s {
        Some(list) => list,
        None => {
            // Curves the branch does not reach are dropped; with none left,
            // every stored slope is used.
            let present: Vec<f64> = figure
                .default_slopes()
                .iter()
                .copied()
                .filter(|&s| branch.step(s).is_ok())
                .collect();
            if present.is_empty() {
                branch.s_values().into_iter().filter(|&s| s > 0.0).collect()
            } else {
                present
            }
        }
    };
    if slopes.iter().any(|&s| s <= 0.0) {
        return Err(usage("figure slopes must be positive"));
    }
    let table = figure_data(&branch, figure, &slopes, range, samples).map_err(|e| match e {
        crate::Error::MissingSlope(_) => data(e.to_string()),
        other => usage(other.to_string()),
    })?;
    let csv = table.to_csv();
    match out {
        Some(file) => write_file(&file, &csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Run<i32> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::read(p).map_err(usage)?,
        None => ConfigFile::default(),
    };
    if let Some(t) = cfg.pick(cli.threads, "threads")? {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // Fails only if the pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    match cli.command {
        Command::Solve { s, n, out, solver } => solve(s, n, out, solver, &cfg),
        Command::Continue {
            s_max,
            ds,
            n,
            out,
            solver,
        } => continue_cmd(s_max, ds, n, out, solver, &cfg),
        Command::Validate {
            branch,
            reference,
            window,
        } => validate(branch, reference, window, &cfg),
        Command::Export {
            branch,
            figure,
            s,
            y_range,
            samples,
            out,
        } => export(branch, figure, s, y_range, samples, out, &cfg),
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(Exit { code, message }) => {
            eprintln!("error: {message}");
            code
        }
    }
}
