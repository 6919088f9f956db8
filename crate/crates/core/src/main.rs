use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qfim_bounds::cli::{
    oracle_check, point_json, run_point, run_scan, scan_records, write_csv, CliError,
    ScanSpec,
};

const CONFIG_HELP: &str = "\
CONFIG KEYS (JSON object):
  interferometer   \"SU2\" (phase difference, linear splitter) or \"SU11\" (phase sum, nonlinear splitter)
  estimation       \"TwoParameter\" (default) or \"SingleParameter\"; selects the headline bound of `point`
  loss             \"None\" (default), \"OneArm\" (loss in arm a) or \"TwoArm\" (equal loss and common gamma in both arms)
  swept_variable   \"alpha_photons\", \"eta\", \"splitter_ratio\" (R/T) or \"gain\"; scan only
  range            {\"start\": x0, \"stop\": x1, \"steps\": n} with x0 < x1, n >= 2; scan only
  fixed            map of parameter name to number:
                     alpha | alpha_photons   coherent amplitude |alpha| or photon number |alpha|^2
                     squeeze_r               squeezing amplitude r
                     transmissivity | splitter_ratio   SU2 splitter, T or R/T
                     gain                    SU11 gain G >= 1
                     eta                     arm transmission (both arms for TwoArm)
                     gamma, eta_b, gamma_b   oracle-check only: Kraus family parameters
                     cutoff                  oracle-check only: Fock cutoff (default 64)
  repeats          number of repeats m (default 1)
  gamma_window     {\"lo\": -1.5, \"hi\": 0.5, \"abs_tol\": 1e-8} search window for gamma

EXIT CODES: 0 success, 1 invalid config, 2 computation error, 3 oracle failure";

#[derive(Parser)]
#[command(name = "qfim-bounds", version, about = "Quantum Cramér-Rao bounds for SU(2) and SU(1,1) interferometers with photon loss", after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file, or `-` for standard input
    #[arg(long)]
    config: String,
    /// Output file (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `repeats` in the config
    #[arg(long)]
    repeats: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one parameter point and print a JSON record
    #[command(after_help = CONFIG_HELP)]
    Point(Common),
    /// Sweep one variable and write CSV rows plus a .meta.json file
    #[command(after_help = CONFIG_HELP)]
    Scan {
        #[command(flatten)]
        common: Common,
        /// Worker threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare closed forms with the truncated Fock-space oracle
    #[command(name = "oracle-check", after_help = CONFIG_HELP)]
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Relative tolerance replacing the defaults
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn load(common: &Common) -> Result<ScanSpec, CliError> {
    let text = if common.config == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(&common.config)
            .map_err(|e| CliError::Config(format!("{}: {e}", common.config)))?
    };
    let mut spec = ScanSpec::from_json(&text)?;
    if let Some(m) = common.repeats {
        spec.repeats = m;
        spec.validate()?;
    }
    Ok(spec)
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Point(common) => {
            let spec = load(&common)?;
            let out = run_point(&spec)?;
            let text = serde_json::to_string_pretty(&point_json(&spec, &out))
                .map_err(|e| CliError::Io(e.to_string()))?;
            emit(&common.output, &(text + "\n"))
        }
        Command::Scan { common, jobs } => {
            let spec = load(&common)?;
            let records = match &common.output {
                Some(path) => run_scan(&spec, path, jobs)?,
                None => {
                    let records = scan_records(&spec, jobs)?;
                    write_csv(&spec, &records, std::io::stdout().lock())?;
                    records
                }
            };
            let failed = records.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} of {} rows failed; see the error column", records.len());
            }
            Ok(())
        }
        Command::OracleCheck { common, tolerance } => {
            let spec = load(&common)?;
            if let Some(t) = tolerance {
                if !(t > 0.0) {
                    return Err(CliError::Config("tolerance must be positive".into()));
                }
            }
            let report = oracle_check(&spec, tolerance)?;
            print!("{}", report.render());
            if let Some(path) = &common.output {
                let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
                std::fs::write(path, text + "\n")?;
            }
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::OracleFailure(
                    report.cutoff_failure.clone().unwrap_or_else(|| "identity mismatch".into()),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
