use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use resonant_forms::normalform::IterationVariant;
use resonant_forms::smalldivisor::Norm;
use resonant_forms_cli::{
    render_json, CliError, Command, Outcome, Overrides, Problem, Settings, PRECISION_ENV,
};

#[derive(Parser)]
#[command(
    name = "resonant-forms",
    version,
    about = "Poincaré-Dulac and versal normal forms at a resonant singularity"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Hilbert basis of the resonance monoid and the positivity conditions.
    Resonance(Common),
    /// Like `resonance`, exiting with 2 when P1 or P2 fails.
    CheckPositivity(Common),
    /// Normalize the field in the mode given by the problem file.
    Normalize(Common),
    /// Versal normal form, g(u, μ) and the Bruno-Stolovitch ideal.
    Versal(Common),
    /// σ(Λ)_k sequence, Bruno sum and the optional Z_{n,s} query.
    Bruno(Common),
    /// Replay a stored result against its problem file.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Result file written by `normalize` or `versal`.
        result: PathBuf,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum VariantArg {
    Printed,
    Updated,
}

#[derive(Copy, Clone, ValueEnum)]
enum NormArg {
    L1,
    Linf,
}

#[derive(Args)]
struct Common {
    /// Problem file (TOML).
    problem: PathBuf,
    #[arg(long, default_value_t = resonant_forms::resonance::DEFAULT_DEG_BOUND)]
    deg_bound: u32,
    #[arg(long)]
    truncation: Option<u32>,
    /// Working precision in bits.
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long)]
    require_positivity: bool,
    #[arg(long, value_enum, default_value = "updated")]
    iteration_variant: VariantArg,
    #[arg(long, default_value_t = 6)]
    kmax: u32,
    /// Norm on exponents for σ(Λ)_k.
    #[arg(long, value_enum, default_value = "l1")]
    norm: NormArg,
    /// Write the JSON result here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON result instead of the text report.
    #[arg(long)]
    json: bool,
}

impl Common {
    fn settings(&self) -> Settings {
        Settings {
            deg_bound: self.deg_bound,
            require_positivity: self.require_positivity,
            variant: match self.iteration_variant {
                VariantArg::Printed => IterationVariant::Printed,
                VariantArg::Updated => IterationVariant::Updated,
            },
            kmax: self.kmax,
            norm: match self.norm {
                NormArg::L1 => Norm::L1,
                NormArg::Linf => Norm::LInf,
            },
        }
    }

    fn problem(&self) -> Result<Problem, CliError> {
        let default_precision = match std::env::var(PRECISION_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                CliError::Parse(format!("{PRECISION_ENV}={v:?} is not a bit count"))
            })?),
            Err(_) => None,
        };
        let ov = Overrides {
            truncation: self.truncation,
            precision: self.precision,
            default_precision,
        };
        Problem::parse(&read(&self.problem)?, &ov)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn execute(sub: &Sub) -> Result<(Outcome, &Common), CliError> {
    let (cmd, common) = match sub {
        Sub::Resonance(c) => (Command::Resonance, c),
        Sub::CheckPositivity(c) => (Command::CheckPositivity, c),
        Sub::Normalize(c) => (Command::Normalize, c),
        Sub::Versal(c) => (Command::Versal, c),
        Sub::Bruno(c) => (Command::Bruno, c),
        Sub::Verify { common, result } => {
            let p = common.problem()?;
            return Ok((resonant_forms_cli::verify(&p, &read(result)?)?, common));
        }
    };
    let p = common.problem()?;
    Ok((
        resonant_forms_cli::run(cmd, &p, &common.settings())?,
        common,
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok((outcome, common)) => {
            let rendered = render_json(&outcome.json);
            if let Some(path) = &common.out {
                if let Err(e) = std::fs::write(path, &rendered) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            if common.json {
                print!("{rendered}");
            } else {
                print!("{}", outcome.text);
            }
            ExitCode::from(outcome.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
