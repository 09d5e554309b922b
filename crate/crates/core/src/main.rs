use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use fas_noma::experiment::{
    cdf_table, default_tau_max, load_config, parse_override, run_sweep, validate, write_cdf_csv, write_csv,
    CdfMetric, RowValue, ValidateOptions,
};

/// BLER calculator for a fluid-antenna NOMA short-packet downlink.
#[derive(Parser, Debug)]
#[command(name = "fas-noma", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trials per estimate.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Output file, `-` for stdout.
    #[arg(long, global = true, default_value = "-")]
    out: String,

    /// Named scenario bundle (fig1a_caption, fig1a_text, fig1b_caption, fig1b_text).
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep SNR or power split and write BLER rows as CSV.
    Sweep,
    /// Cross-check theory, asymptotes and simulation; exit 1 on any failure.
    Validate {
        /// Force every tolerance negative so that all checks fail.
        #[arg(long)]
        corrupt_tolerance: bool,
    },
    /// Dump the analytic and empirical CDF of an SINR on a grid.
    Cdf {
        /// cc, ce or e.
        #[arg(long, default_value = "cc")]
        metric: CdfMetric,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Upper end of the grid; defaults to the SIC ceiling or 8 mean SNRs.
        #[arg(long)]
        tau_max: Option<f64>,
    },
}

fn output(path: &str) -> Result<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        let f = File::create(path).with_context(|| format!("cannot create {path}"))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn overrides(common: &Common) -> Result<Vec<(String, Value)>> {
    let mut out = common
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<fas_noma::Result<Vec<_>>>()?;
    if let Some(seed) = common.seed {
        out.push(("seed".into(), seed.into()));
    }
    if let Some(trials) = common.trials {
        out.push(("trials".into(), trials.into()));
    }
    if let Some(workers) = common.workers {
        out.push(("workers".into(), workers.into()));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let sets = overrides(&cli.common)?;
    let run = load_config(cli.common.config.as_deref(), cli.common.preset.as_deref(), &sets)?;
    match cli.command {
        Command::Sweep => {
            let out = run_sweep(&run)?;
            let mut w = output(&cli.common.out)?;
            write_csv(&out.rows, &mut w)?;
            w.flush()?;
            let mut failed = 0;
            for r in out.failures() {
                if let RowValue::Failed(msg) = &r.result {
                    eprintln!(
                        "error: {} {}={} {} {}: {msg}",
                        r.scenario_id,
                        r.variable.as_str(),
                        r.value,
                        r.user,
                        r.method
                    );
                }
                failed += 1;
            }
            if failed > 0 {
                eprintln!("{failed} of {} rows failed", out.rows.len());
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { corrupt_tolerance } => {
            let report = validate(&run, ValidateOptions { corrupt_tolerance })?;
            let mut w = output(&cli.common.out)?;
            write!(w, "{report}")?;
            w.flush()?;
            Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Cdf { metric, points, tau_max } => {
            let mut w = output(&cli.common.out)?;
            let mut header = true;
            for scn in &run.scenarios {
                let tau_max = tau_max.unwrap_or_else(|| default_tau_max(&scn.system, metric));
                let table = cdf_table(&scn.system, metric, tau_max, points, &run.mc, run.series)?;
                let mut buf = Vec::new();
                write_cdf_csv(&scn.id, &table, &mut buf)?;
                let text = String::from_utf8(buf)?;
                // one header for the whole file
                let body = if header { text.as_str() } else { text.split_once('\n').map_or("", |(_, b)| b) };
                w.write_all(body.as_bytes())?;
                header = false;
            }
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
