use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use spatial_witness_cli::config::{AnalysisKind, Format, RunConfig};
use spatial_witness_cli::table::write_atomic;
use spatial_witness_cli::{figures, run, CliError, Table};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Spatial-mode entanglement witnesses of an ideal Bose gas.
#[derive(Debug, Parser)]
#[command(name = "spatial-witness", version)]
struct Args {
    /// tc, bipartite, od, tripartite, tmax, scan, validate or reproduce
    command: String,
    /// Figure name for `reproduce` (fig1, fig3, fig4, fig5)
    figure: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("SPATIAL_WITNESS_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("SPATIAL_WITNESS_THREADS: invalid value '{s}'"))),
        Err(_) => Ok(None),
    }
}

fn execute(args: Args) -> Result<(), CliError> {
    let threads = threads(args.threads)?;
    if threads == Some(0) {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    let (table, mut output): (Table, _) = if args.command == "reproduce" {
        let name = args
            .figure
            .as_deref()
            .ok_or_else(|| CliError::Config("reproduce needs a figure name".into()))?;
        (figures::reproduce(name, threads)?, Default::default())
    } else {
        let kind = AnalysisKind::parse(&args.command)
            .ok_or_else(|| CliError::Config(format!("unknown command '{}'", args.command)))?;
        let path = args
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config("--config is required".into()))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg = RunConfig::from_json(&text)?;
        if cfg.analysis.kind != kind {
            return Err(CliError::Config(format!(
                "analysis.kind is '{}' but the command is '{}'",
                cfg.analysis.kind.name(),
                kind.name()
            )));
        }
        let t = run(&cfg, threads)?;
        if kind == AnalysisKind::Validate && t.metadata.get("failures").is_some_and(|f| f != "0") {
            let out = t.render(cfg.output.format, cfg.output.precision);
            emit(args.out.as_ref().or(cfg.output.path.as_ref().map(PathBuf::from).as_ref()), &out)?;
            return Err(CliError::Validation(format!(
                "{} quantities differ from the oracle",
                t.metadata["failures"]
            )));
        }
        (t, cfg.output)
    };
    if let Some(f) = args.format {
        output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    let text = table.render(output.format, output.precision);
    let path = args.out.or(output.path.map(PathBuf::from));
    emit(path.as_ref(), &text)
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
