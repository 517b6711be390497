//! Command-line surface. [`run`] takes the argument list and output sinks so the
//! whole interface can be driven from tests.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimator::Resolution;
use crate::incidence::{filter_to_ism, ism_conflicts, parse_matrix, IncidenceMatrix, MatrixFormat};
use crate::oracle::{
    closed_form_unconstrained, enumerate_compatible, ExactCounts, DEFAULT_ENUM_BUDGET,
};
use crate::phylogeny::{export_phylogeny, ExportFormat};
use crate::pipeline::{count_topologies, prepare, CountConfig};
use crate::rng::{substream, Domain};
use crate::simulator::{simulate_matrix, SimulationMeta};
use crate::tajima::DEFAULT_BACKTRACK_BUDGET;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_ISM: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;

/// Exit status for an error class.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::IsmViolation { .. } => EXIT_ISM,
        Error::SearchBudgetExceeded { .. } | Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Config(_) | Error::Invalid(_) => EXIT_CONFIG,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "coalcount",
    version,
    about = "Count coalescent tree topologies compatible with infinite-sites data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate an incidence matrix under the coalescent with infinite sites.
    Simulate(SimulateArgs),
    /// Estimate compatible topology counts by sequential importance sampling.
    Count(CountArgs),
    /// Count compatible topologies exactly by exhaustive enumeration.
    Enumerate(EnumerateArgs),
    /// Closed-form counts with no data constraints.
    Unconstrained(UnconstrainedArgs),
    /// Build and export the phylogeny of a data set.
    Phylogeny(PhylogenyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// Decide from the file extension and content.
    Auto,
    Csv,
    /// One row of 0/1 characters per individual, optionally prefixed by `label<TAB>`.
    Plain01,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphFormat {
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum View {
    /// Edges labeled by sites, leaves by haplotypes.
    Perfect,
    /// Individuals attached to nodes.
    Kingman,
    /// Haplotype frequencies attached to nodes.
    Tajima,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Incidence matrix file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    input_format: InputFormat,
    /// Drop conflicting sites until the data fit the infinite-sites model.
    #[arg(long)]
    filter_ism: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    mu: f64,
    #[arg(long, env = "COALCOUNT_SEED")]
    seed: Option<u64>,
    /// Matrix destination (CSV); the metadata sidecar goes next to it.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Sidecar destination; defaults to `<output>.meta.json`.
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CountArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 10_000)]
    n_draws: u64,
    #[arg(long, env = "COALCOUNT_SEED")]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Comma-separated subset of kingman,tajima,labeled,shape.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "kingman,tajima,labeled,shape"
    )]
    resolutions: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_BACKTRACK_BUDGET)]
    backtrack_budget: u64,
    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    format: TableFormat,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Suppress progress lines on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
    enum_budget: u64,
    /// Include the canonical encoding of every compatible labeled tree.
    #[arg(long)]
    list_trees: bool,
    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    format: TableFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct UnconstrainedArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    format: TableFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PhylogenyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = View::Tajima)]
    view: View,
    #[arg(long, value_enum, default_value_t = GraphFormat::Json)]
    format: GraphFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::Count(a) => cmd_count(a, stdout, stderr),
        Command::Enumerate(a) => cmd_enumerate(a, stdout, stderr),
        Command::Unconstrained(a) => cmd_unconstrained(a, stdout),
        Command::Phylogeny(a) => cmd_phylogeny(a, stdout, stderr),
    }
}

fn emit(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn read_input(args: &InputArgs) -> Result<IncidenceMatrix> {
    let text = std::fs::read_to_string(&args.input)?;
    let format = match args.input_format {
        InputFormat::Csv => MatrixFormat::Csv,
        InputFormat::Plain01 => MatrixFormat::Plain01,
        InputFormat::Auto => {
            let ext = args
                .input
                .extension()
                .and_then(|e| e.to_str())
                .unwrap_or("");
            if ext.eq_ignore_ascii_case("csv")
                || (!ext.eq_ignore_ascii_case("txt") && text.contains(','))
            {
                MatrixFormat::Csv
            } else {
                MatrixFormat::Plain01
            }
        }
    };
    parse_matrix(&text, format)
}

/// Reads the matrix and enforces (or repairs) the infinite-sites condition.
fn load_compatible(
    args: &InputArgs,
    stderr: &mut dyn Write,
) -> Result<(IncidenceMatrix, Vec<String>)> {
    let matrix = read_input(args)?;
    let conflicts = ism_conflicts(&matrix);
    if conflicts.is_empty() {
        return Ok((matrix, Vec::new()));
    }
    if args.filter_ism {
        let (kept, removed) = filter_to_ism(&matrix);
        let _ = writeln!(
            stderr,
            "removed {} conflicting site(s): {}",
            removed.len(),
            removed.join(",")
        );
        return Ok((kept, removed));
    }
    let _ = writeln!(
        stderr,
        "{} pair(s) of sites violate the infinite-sites model:",
        conflicts.len()
    );
    for (a, b) in conflicts.iter().take(20) {
        let _ = writeln!(stderr, "  {a} x {b}");
    }
    let (first, second) = conflicts.into_iter().next().expect("non-empty");
    Err(Error::IsmViolation { first, second })
}

fn cmd_simulate(a: SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    if a.n < 2 {
        return Err(Error::Config("--n must be at least 2".into()));
    }
    if !(a.mu.is_finite() && a.mu >= 0.0) {
        return Err(Error::Config("--mu must be finite and non-negative".into()));
    }
    let seed = resolve_seed(a.seed);
    let data = simulate_matrix(a.n, a.mu, &mut substream(seed, Domain::Simulation, 0));
    let meta = serde_json::to_string_pretty(&SimulationMeta::new(a.mu, seed, &data))? + "\n";
    emit(a.output.as_deref(), &data.matrix.to_csv(), stdout)?;
    let meta_path = a.meta.or_else(|| {
        a.output.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".meta.json");
            PathBuf::from(s)
        })
    });
    match meta_path {
        Some(p) => std::fs::write(p, meta)?,
        None => stderr.write_all(meta.as_bytes())?,
    }
    Ok(())
}

fn parse_resolutions(raw: &[String]) -> Result<Vec<Resolution>> {
    let mut out: Vec<Resolution> = Vec::new();
    for r in raw.iter().filter(|s| !s.trim().is_empty()) {
        let r: Resolution = r.parse()?;
        if !out.contains(&r) {
            out.push(r);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("--resolutions is empty".into()));
    }
    Ok(out)
}

const RESULT_COLUMNS: [&str; 11] = [
    "resolution",
    "n_draws",
    "estimate",
    "log10_estimate",
    "std_error",
    "rse",
    "cv2",
    "ess",
    "q_n",
    "seed",
    "elapsed_ms",
];

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_table<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row.as_ref()).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("cells are UTF-8")
}

fn cmd_count(a: CountArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let resolutions = parse_resolutions(&a.resolutions)?;
    if a.n_draws < 2 {
        return Err(Error::Config("--n-draws must be at least 2".into()));
    }
    if a.backtrack_budget == 0 {
        return Err(Error::Config("--backtrack-budget must be positive".into()));
    }
    let seed = resolve_seed(a.seed);
    let (matrix, removed) = load_compatible(&a.input, stderr)?;
    let prepared = prepare(&matrix)?;
    let config = CountConfig {
        n_draws: a.n_draws,
        seed,
        workers: a.workers,
        resolutions: resolutions.clone(),
        backtrack_budget: a.backtrack_budget,
        progress: !a.quiet,
    };
    let report = count_topologies(&prepared.kingman, &prepared.tajima, &config)?;
    let rows: Vec<Value> = report
        .estimates
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).expect("serializable");
            v["seed"] = json!(report.seed);
            v["elapsed_ms"] = json!(report.elapsed_ms);
            v
        })
        .collect();
    let text = match a.format {
        TableFormat::Json => {
            let doc = json!({
                "command": "count",
                "version": version(),
                "config": {
                    "input": a.input.input.display().to_string(),
                    "n_draws": a.n_draws,
                    "seed": seed,
                    "workers": a.workers,
                    "resolutions": resolutions.iter().map(|r| r.as_str()).collect::<Vec<_>>(),
                    "filter_ism": a.input.filter_ism,
                    "backtrack_budget": a.backtrack_budget,
                    "format": "json",
                },
                "removed_sites": removed,
                "results": rows,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        TableFormat::Csv => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|row| RESULT_COLUMNS.iter().map(|c| csv_cell(&row[*c])).collect())
                .collect();
            csv_table(&RESULT_COLUMNS, &cells)
        }
    };
    emit(a.output.as_deref(), &text, stdout)
}

fn counts_document(
    command: &str,
    config: Value,
    counts: &ExactCounts,
    format: TableFormat,
) -> Result<String> {
    let pairs = [
        ("kingman", &counts.kingman),
        ("tajima", &counts.tajima),
        ("labeled", &counts.labeled),
        ("shape", &counts.shape),
    ];
    Ok(match format {
        TableFormat::Json => {
            let mut doc = json!({
                "command": command,
                "version": version(),
                "config": config,
                "counts": pairs.iter().map(|(k, v)| (k.to_string(), json!(v.to_string()))).collect::<serde_json::Map<_, _>>(),
            });
            if let Some(trees) = &counts.enumerated_trees {
                doc["trees"] = json!(trees);
            }
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        TableFormat::Csv => {
            let cells: Vec<[String; 2]> = pairs
                .iter()
                .map(|(k, v)| [k.to_string(), v.to_string()])
                .collect();
            csv_table(&["resolution", "count"], &cells)
        }
    })
}

fn cmd_enumerate(a: EnumerateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    if a.enum_budget == 0 {
        return Err(Error::Config("--enum-budget must be positive".into()));
    }
    let (matrix, _) = load_compatible(&a.input, stderr)?;
    let prepared = prepare(&matrix)?;
    let mut counts = match enumerate_compatible(&prepared.kingman, a.enum_budget) {
        Err(e @ Error::BudgetExceeded { .. }) => {
            let _ = writeln!(
                stderr,
                "exact count unavailable: raise --enum-budget to enumerate further"
            );
            return Err(e);
        }
        other => other?,
    };
    if !a.list_trees {
        counts.enumerated_trees = None;
    }
    let config = json!({
        "input": a.input.input.display().to_string(),
        "enum_budget": a.enum_budget,
        "filter_ism": a.input.filter_ism,
    });
    let text = counts_document("enumerate", config, &counts, a.format)?;
    emit(a.output.as_deref(), &text, stdout)
}

fn cmd_unconstrained(a: UnconstrainedArgs, stdout: &mut dyn Write) -> Result<()> {
    let counts = closed_form_unconstrained(a.n)?;
    let text = counts_document("unconstrained", json!({ "n": a.n }), &counts, a.format)?;
    emit(a.output.as_deref(), &text, stdout)
}

fn cmd_phylogeny(a: PhylogenyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let (matrix, _) = load_compatible(&a.input, stderr)?;
    let p = prepare(&matrix)?;
    let format = match a.format {
        GraphFormat::Json => ExportFormat::Json,
        GraphFormat::Dot => ExportFormat::Dot,
    };
    let mut text = match a.view {
        View::Perfect => export_phylogeny(&p.perfect, format),
        View::Kingman => export_phylogeny(&p.kingman, format),
        View::Tajima => export_phylogeny(&p.tajima, format),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    emit(a.output.as_deref(), &text, stdout)
}
