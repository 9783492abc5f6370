use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use i2bias_cli::commands::{
    cmd_analyze, cmd_bias_curve, cmd_ci, cmd_simulate, parse_grid, FigureFormat, I2Selection,
};
use i2bias_cli::CliResult;
use i2bias_core::sim::SimMode;

#[derive(Parser)]
#[command(
    name = "i2bias",
    version,
    about = "Heterogeneity statistics and the bias of I² in meta-analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixed,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Q, I² and a 95% interval for a CSV of studies (study_id,effect,std_err).
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// E(Î₀²) against K at a fixed true I², as CSV or SVG.
    #[command(group(ArgGroup::new("i2sel").required(true).args(["i2", "i2_grid"])))]
    BiasCurve {
        #[arg(long, allow_negative_numbers = true)]
        i2: Option<f64>,
        /// start:stop:step, e.g. 0.1:0.9:0.1
        #[arg(long)]
        i2_grid: Option<String>,
        #[arg(long)]
        k_min: u32,
        #[arg(long)]
        k_max: u32,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Monte Carlo mean of Î₀² next to its analytic expectation.
    Simulate {
        #[arg(long)]
        k: u32,
        #[arg(long, allow_negative_numbers = true)]
        i2: f64,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "fixed")]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
    },
    /// Test-based 95% interval for I² from Q and df.
    Ci {
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[arg(long)]
        df: u32,
    },
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Analyze { file, json } => cmd_analyze(&file, json),
        Command::BiasCurve {
            i2,
            i2_grid,
            k_min,
            k_max,
            out,
            format,
        } => {
            let selection = match (i2, i2_grid) {
                (Some(v), _) => I2Selection::Single(v),
                (None, Some(g)) => I2Selection::Grid(parse_grid(&g)?),
                (None, None) => unreachable!("clap enforces one of --i2 / --i2-grid"),
            };
            let format = match format {
                FormatArg::Csv => FigureFormat::Csv,
                FormatArg::Svg => FigureFormat::Svg,
            };
            cmd_bias_curve(&selection, k_min, k_max, &out, format)
        }
        Command::Simulate {
            k,
            i2,
            reps,
            seed,
            mode,
            json,
        } => {
            let mode = match mode {
                ModeArg::Fixed => SimMode::FixedEffectsCalibrated,
                ModeArg::Random => SimMode::RandomEffects,
            };
            cmd_simulate(k, i2, reps, seed, mode, json)
        }
        Command::Ci { q, df } => cmd_ci(q, df),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
