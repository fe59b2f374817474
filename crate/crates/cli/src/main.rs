use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skewfield_cli::analyze::{analyze, field_inputs, AnalyzeOptions};
use skewfield_cli::config::{parse_entries, Entry};
use skewfield_cli::predict::predict;
use skewfield_cli::simulate::simulate;
use skewfield_cli::special::{run_task, write_report, Task};
use skewfield_cli::validate::validate;
use skewfield_cli::{threads_from_env, with_threads, Result, RunConfig, Tier};
use skewfield::special::Cutoff;

/// Skewed multifractal random fields: synthesis, statistics and quadrature.
#[derive(Parser)]
#[command(name = "skewfield", version)]
struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named parameter set (turbulence).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// smoke, desk or full.
    #[arg(long, global = true)]
    tier: Option<String>,
    /// Comma-separated moment orders.
    #[arg(long, global = true)]
    q: Option<String>,
    /// `default`, `min:max:per_octave` or a comma-separated lag list.
    #[arg(long, global = true)]
    scales: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one field file per replicate.
    Simulate,
    /// Ensemble statistics over field files (default: `*.skf` in --out).
    Analyze { inputs: Vec<PathBuf> },
    /// Tables of the deterministic integrals.
    Special {
        /// f_h_table, sign_scan, constants, third_moment or pv_deriv.
        task: String,
        /// gaussian or truncated_gaussian.
        #[arg(long, default_value = "truncated_gaussian")]
        cutoff: String,
    },
    /// Analytic scaling exponents and regime flags.
    Predict,
    /// End-to-end check with a JSON verdict; fails on any failed check.
    Validate,
}

impl Cli {
    fn config(&self) -> Result<RunConfig> {
        let mut entries = match &self.config {
            Some(p) => parse_entries(&std::fs::read_to_string(p)?)?,
            None => Vec::new(),
        };
        let flags = [
            ("preset", self.preset.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("replicates", self.replicates.map(|r| r.to_string())),
            ("seed", self.seed.map(|s| s.to_string())),
            ("tier", self.tier.clone()),
            ("q", self.q.clone()),
            ("scales", self.scales.clone()),
        ];
        entries.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| Entry::flag(k, v))));
        RunConfig::from_entries(&entries)
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = cli.config()?;
    match &cli.command {
        Command::Simulate => {
            let report = simulate(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote {} field files to {} in {:.2} s ({:.3e} samples/s)",
                report.files.len(),
                cfg.out.display(),
                report.seconds,
                report.samples_per_second
            );
        }
        Command::Analyze { inputs } => {
            let inputs = if inputs.is_empty() { field_inputs(&cfg.out)? } else { inputs.clone() };
            let a = analyze(&inputs, &AnalyzeOptions::from(&cfg), &cfg.out)?;
            if !a.sidecar.orders_beyond_bound.is_empty() {
                eprintln!("warning: orders {:?} are beyond the moment bound", a.sidecar.orders_beyond_bound);
            }
            println!("{} replicates, {} scales", a.sidecar.replicates, a.sidecar.lags.len());
            for f in &a.sidecar.scaling {
                match f.xi_fitted {
                    Some(x) => println!("{:?}: fitted {x:.4}, analytic {:.4}", f.moment, f.xi_analytic),
                    None => println!("{:?}: {}", f.moment, f.error.as_deref().unwrap_or("no fit")),
                }
            }
        }
        Command::Special { task, cutoff } => {
            let task: Task = task.parse()?;
            let cutoff = Cutoff::from_name(cutoff)?;
            let report = run_task(task, cfg.params.h, cfg.params.gamma, cutoff);
            write_report(&report, &cfg.out)?;
            for r in report.rows.iter().filter(|r| r.error.is_some() || r.passed == Some(false)) {
                eprintln!("row {} (H = {}, arg = {:?}): {}", r.quantity, r.hurst, r.arg, r.error.as_deref().unwrap_or("check failed"));
            }
            println!("{} rows, {} flagged, written to {}", report.rows.len(), report.failures(), cfg.out.display());
        }
        Command::Predict => {
            let report = predict(&cfg.params, &cfg.q_list);
            print!("{}", report.to_text());
            if cli.out.is_some() {
                report.write(&cfg.out)?;
            }
        }
        Command::Validate => {
            let tier = cfg.tier.unwrap_or(Tier::Smoke);
            let verdict = validate(&cfg, tier)?;
            for c in &verdict.checks {
                println!("{} [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.stage, c.name, c.detail);
            }
            for w in &verdict.warnings {
                eprintln!("warning: {w}");
            }
            println!("verdict: {}", if verdict.passed { "pass" } else { "fail" });
            return Ok(verdict.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads_from_env().and_then(|t| with_threads(t, || run(&cli)).and_then(|r| r));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}
