use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use viewnet::checker::{check_all, check_network, write_bundle, ConsistencyReport, Strategy};
use viewnet::kernel::InstitutionId;
use viewnet::netlang::{export_dot, resolve_file, Graph, ViewKind};
use viewnet::structural::{parse_cd, parse_od, wellformed_cd, Bounds};
use viewnet::{behavioral, interaction, Error};

const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "viewnet", about = "Consistency checking for networks of linked views")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check one network, or all of them, for consistency.
    Check(CheckArgs),
    /// Parse and validate a view file or a network specification.
    Parse { file: PathBuf },
    /// Export the development graph as DOT.
    Graph {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a witness bundle.
    Witness { dir: PathBuf },
    /// Print the version.
    Version,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Incremental,
    Monolithic,
    Decentralized,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, conflicts_with = "all")]
    network: Option<String>,
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum, default_value = "incremental")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 2)]
    max_objects: usize,
    #[arg(long, default_value_t = 60)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    queue_depth: usize,
    #[arg(long, default_value_t = 100_000)]
    max_states: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Directory to write the witness bundle of a consistent network to.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Witness bundle read by the decentralized strategy.
    #[arg(long)]
    witnesses: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reserved; checking is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

/// A failure with its exit status.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(EXIT_ERROR, e.to_string())
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e).into()),
        None => {
            emit(text);
            Ok(())
        }
    }
}

/// Writes to standard output; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e).into())
}

/// The class diagram an emitted initial object diagram is stated against.
fn witness_context(g: &Graph, network: &str) -> String {
    g.network(network)
        .ok()
        .and_then(|n| {
            n.nodes.iter().find(|m| {
                g.node(m)
                    .is_some_and(|m| m.institution() == InstitutionId::Cd && m.object_diagram.is_none())
            })
        })
        .cloned()
        .unwrap_or_else(|| network.to_string())
}

fn check(a: CheckArgs) -> Result<u8, Failure> {
    let _ = a.seed;
    let bounds = Bounds {
        max_objects_per_class: a.max_objects,
        depth: a.depth,
        queue_depth: a.queue_depth,
        max_states: a.max_states,
    };
    bounds.validate()?;
    let strategy = match a.strategy {
        StrategyArg::Incremental => Strategy::Incremental,
        StrategyArg::Monolithic => Strategy::Monolithic,
        StrategyArg::Decentralized => Strategy::Decentralized,
    };
    let g = resolve_file(&a.file)?;
    let started = Instant::now();
    let reports: Vec<ConsistencyReport> = if a.all {
        check_all(&g, strategy, &bounds, a.witnesses.as_deref())?
    } else {
        let name = match (&a.network, g.networks.as_slice()) {
            (Some(n), _) => n.clone(),
            (None, [only]) => only.name.clone(),
            (None, _) => return Err(Failure(EXIT_ERROR, "check needs --network NAME or --all".into())),
        };
        vec![check_network(&g, &name, strategy, &bounds, a.witnesses.as_deref())?]
    };
    eprintln!("checked in {:.2?}", started.elapsed());

    if let Some(dir) = &a.witness {
        for r in &reports {
            let Some(w) = r.verdict_full.as_ref().and_then(|v| v.witness()) else { continue };
            let target = if a.all { dir.join(&r.network) } else { dir.clone() };
            write_bundle(&target, w, &witness_context(&g, &r.network))?;
        }
    }
    let text = match (a.format, a.all) {
        (Format::Text, _) => reports.iter().map(ConsistencyReport::to_text).collect::<Vec<_>>().join("\n"),
        (Format::Structured, false) => reports[0].to_json() + "\n",
        (Format::Structured, true) => serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n",
    };
    write_out(a.out.as_deref(), &text)?;
    Ok(reports.iter().map(|r| r.verdict.exit_code() as u8).max().unwrap_or(0))
}

fn parse(file: &Path) -> Result<u8, Failure> {
    let at = |e: Error| Failure(EXIT_ERROR, format!("{}: {e}", file.display()));
    let summary = if file.extension().is_some_and(|e| e == "dol") {
        let g = resolve_file(file)?;
        format!("{} nodes, {} links, {} networks", g.nodes.len(), g.links.len(), g.networks.len())
    } else {
        let kind = ViewKind::from_path(file)
            .ok_or_else(|| Failure(EXIT_ERROR, format!("{}: unknown view extension", file.display())))?;
        let text = read(file)?;
        match kind {
            ViewKind::Cd => {
                let cd = parse_cd(&text).map_err(at)?;
                let diags = wellformed_cd(&cd);
                if !diags.is_empty() {
                    return Err(at(Error::Diagnostics(diags)));
                }
                format!("class diagram {}", cd.name)
            }
            ViewKind::Od => format!("object diagram {}", parse_od(&text).map_err(at)?.name),
            ViewKind::Stm => format!("state machine {}", behavioral::parse_stm(&text).map_err(at)?.name),
            ViewKind::Sd => format!("interaction {}", interaction::parse_sd(&text).map_err(at)?.name),
            ViewKind::Cmp => format!("component {}", behavioral::parse_cmp(&text).map_err(at)?.name),
        }
    };
    emit(&format!("{}: ok ({summary})\n", file.display()));
    Ok(0)
}

fn show_witness(dir: &Path) -> Result<u8, Failure> {
    for f in ["init.od", "trace.txt", "ts.txt"] {
        emit(&read(&dir.join(f))?);
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Check(a) => check(a),
        Command::Parse { file } => parse(&file),
        Command::Graph { file, out } => {
            let g = resolve_file(&file)?;
            write_out(out.as_deref(), &export_dot(&g))?;
            Ok(0)
        }
        Command::Witness { dir } => show_witness(&dir),
        Command::Version => {
            emit(&format!("viewnet {}\n", env!("CARGO_PKG_VERSION")));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
