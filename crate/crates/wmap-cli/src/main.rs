use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wmap::{invariant_density, second_eigenvalue};
use wmap_cli::{
    build_report, build_spectrum_report, build_ulam_report, reproduce_figure, resolve_instance,
    run_simulation, step_document, step_to_csv, to_json_string, CliError, CliResult,
};

/// W-shaped interval maps: Markov parameters, transfer-operator spectra,
/// invariant densities, discretization cross-checks, and metastability
/// diagnostics.
#[derive(Parser)]
#[command(name = "wmap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MapArgs {
    /// Slope of the second branch (1/s1 + 1/s2 must be 1)
    #[arg(long, default_value_t = 2.0)]
    s1: f64,
    /// Slope magnitude of the third branch
    #[arg(long, default_value_t = 2.0)]
    s2: f64,
    /// Perturbation scale
    #[arg(long, default_value_t = 0.25)]
    r: f64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ParamSel {
    /// Markov return index; the amplitude is solved from it
    #[arg(long)]
    m: Option<usize>,
    /// Perturbation amplitude; validated as Markov, the index is inferred
    #[arg(long)]
    a: Option<f64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutArgs {
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; csv applies to step-function outputs
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Markov amplitude and report eigenvalue, K norm, and
    /// escape rates
    Solve {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        sel: ParamSel,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Like solve, plus the power-iteration cross-check of the second
    /// eigenvalue
    Spectrum {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        sel: ParamSel,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Emit the invariant density (integral 1) as a step function
    Density {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        sel: ParamSel,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Emit the second eigenfunction in the alpha_m = 1 gauge
    Eigenfunction {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        sel: ParamSel,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Cross-validate the spectral numbers against the bin discretization
    Ulam {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        sel: ParamSel,
        /// Number of uniform bins
        #[arg(long, default_value_t = 4096)]
        n_bins: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact escape rates of the almost-invariant sign sets
    Escape {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        sel: ParamSel,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate residence times over the sign-set partition
    Simulate {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        sel: ParamSel,
        /// Orbit length
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        /// RNG seed for the initial point
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write the two normalized eigenfunctions (m = 5, 7) as CSV plus a
    /// summary checked against the frozen reference values
    Reproduce {
        /// Output directory
        #[arg(long, default_value = "figure-data")]
        out: PathBuf,
    },
}

fn write_output(out: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn json_only(format: Format) -> CliResult<()> {
    if format == Format::Csv {
        return Err(CliError::Usage(
            "csv output applies to step-function commands (density, eigenfunction); reports are json".into(),
        ));
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { map, sel, out } => {
            json_only(out.format)?;
            let inst = resolve_instance(map.s1, map.s2, map.r, sel.m, sel.a)?;
            let report = build_report(&inst)?;
            write_output(&out.out, &to_json_string(&report))
        }
        Command::Spectrum { map, sel, out } => {
            json_only(out.format)?;
            let inst = resolve_instance(map.s1, map.s2, map.r, sel.m, sel.a)?;
            let report = build_spectrum_report(&inst)?;
            write_output(&out.out, &to_json_string(&report))
        }
        Command::Density { map, sel, out } => {
            let inst = resolve_instance(map.s1, map.s2, map.r, sel.m, sel.a)?;
            let density = invariant_density(&inst);
            let content = match out.format {
                Format::Csv => step_to_csv(&density),
                Format::Json => to_json_string(&step_document(&inst, "invariant_density", &density)),
            };
            write_output(&out.out, &content)
        }
        Command::Eigenfunction { map, sel, out } => {
            let inst = resolve_instance(map.s1, map.s2, map.r, sel.m, sel.a)?;
            let pair = second_eigenvalue(&inst)?;
            let content = match out.format {
                Format::Csv => step_to_csv(&pair.function),
                Format::Json => {
                    to_json_string(&step_document(&inst, "second_eigenfunction", &pair.function))
                }
            };
            write_output(&out.out, &content)
        }
        Command::Ulam { map, sel, n_bins, out } => {
            json_only(out.format)?;
            let inst = resolve_instance(map.s1, map.s2, map.r, sel.m, sel.a)?;
            let report = build_ulam_report(&inst, n_bins)?;
            write_output(&out.out, &to_json_string(&report))
        }
        Command::Escape { map, sel, out } => {
            json_only(out.format)?;
            let inst = resolve_instance(map.s1, map.s2, map.r, sel.m, sel.a)?;
            let report = build_report(&inst)?;
            write_output(&out.out, &to_json_string(&report))
        }
        Command::Simulate { map, sel, steps, seed, out } => {
            json_only(out.format)?;
            let inst = resolve_instance(map.s1, map.s2, map.r, sel.m, sel.a)?;
            let report = run_simulation(&inst, steps, seed)?;
            write_output(&out.out, &to_json_string(&report))
        }
        Command::Reproduce { out } => {
            let summary = reproduce_figure(&out)?;
            print!("{}", to_json_string(&summary));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Numeric(_) => 3,
                CliError::Io(_) => 4,
            })
        }
    }
}
