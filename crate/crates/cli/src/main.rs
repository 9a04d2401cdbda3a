use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dipbat::linearization::{jacobian_model, paper_linear_model};
use dipbat::StateSpaceModel;
use dipbat_cli::config::load_scenario;
use dipbat_cli::output::num;
use dipbat_cli::scenario::Models;
use dipbat_cli::{run_scenario, run_sweep, selftest, CliError};

#[derive(Parser)]
#[command(name = "dipbat", version, about = "Double inverted pendulum controller tuning with the bat algorithm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune one scenario and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `bat.seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Repeat a scenario over several delays and write `sweep_summary.csv`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated delays in seconds.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        delays: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the linear models (A, B) for a scenario.
    Linearize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, &out),
        Command::Sweep { config, delays, seed, out } => cmd_sweep(&config, &delays, seed, &out),
        Command::Linearize { config } => cmd_linearize(&config),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn cmd_run(config: &Path, seed: Option<u64>, out: &Path) -> Result<u8, CliError> {
    let mut scenario = load_scenario(config)?;
    if let Some(seed) = seed {
        scenario.bat.seed = seed;
    }
    let report = run_scenario(&scenario, Some(out))?;
    println!("scenario         {}", scenario.label);
    println!("delay            {} s", num(scenario.delay));
    println!("zeta             {:.6}", report.zeta);
    println!("omega_n          {:.6} rad/s", report.omega_n);
    println!("best fitness     {:.6e}", report.best_fitness);
    println!("wall time        {:.3} s", report.wall_time);
    println!(
        "closed loop      {} (spectral abscissa {:.6})",
        if report.stable() { "stable" } else { "UNSTABLE" },
        report.stability.spectral_abscissa
    );
    match report.settling_nonlinear {
        Some(t) => println!("settling (nonlinear, {}% band)  {t:.3} s", scenario.settling_band * 100.0),
        None => println!("settling (nonlinear)  not settled within horizon"),
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(0)
}

fn cmd_sweep(config: &Path, delays: &[f64], seed: Option<u64>, out: &Path) -> Result<u8, CliError> {
    if delays.is_empty() {
        return Err(CliError::Usage("--delays needs at least one value".into()));
    }
    let mut base = load_scenario(config)?;
    if let Some(seed) = seed {
        base.bat.seed = seed;
    }
    let scenarios: Vec<_> =
        delays.iter().map(|&d| base.with_delay(d, format!("{}_delay_{}", base.label, num(d)))).collect();
    let rows = run_sweep(&scenarios, Some(out))?;

    println!(
        "{:<28} {:>8} {:>10} {:>8} {:>9} {:>12}  stable",
        "label", "delay_s", "wall_s", "zeta", "omega_n", "fitness"
    );
    let mut code = 0;
    for row in &rows {
        match &row.outcome {
            Ok(v) => println!(
                "{:<28} {:>8} {:>10.3} {:>8.4} {:>9.4} {:>12.4e}  {}",
                row.label,
                num(row.delay),
                v.wall_time,
                v.zeta,
                v.omega_n,
                v.best_fitness,
                v.stable
            ),
            Err((msg, exit)) => {
                println!("{:<28} {:>8}  error: {msg}", row.label, num(row.delay));
                if code == 0 {
                    code = *exit as u8;
                }
            }
        }
    }
    println!("wrote {}", out.join(dipbat_cli::output::SWEEP_SUMMARY).display());
    Ok(code)
}

fn print_model(title: &str, m: &StateSpaceModel) {
    println!("{title}");
    println!("A =");
    for row in m.a.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>14.6}")).collect();
        println!("  {}", cells.join(" "));
    }
    println!("B =");
    for v in m.b.iter() {
        println!("  {v:>14.6}");
    }
    println!();
}

fn cmd_linearize(config: &Path) -> Result<u8, CliError> {
    let scenario = load_scenario(config)?;
    let wrap = |e| CliError::scenario(&scenario.label, e);
    match paper_linear_model(&scenario.params) {
        Ok(m) => print_model("closed-form coefficient model", &m),
        Err(e) => println!("closed-form coefficient model unavailable: {e}\n"),
    }
    print_model("jacobian model", &jacobian_model(&scenario.params).map_err(wrap)?);
    let models = Models::build(&scenario).map_err(wrap)?;
    if models.delayed() {
        print_model(
            &format!(
                "design model ({}) with Pade state, delay {} s",
                scenario.design_model.name(),
                num(scenario.delay)
            ),
            &models.augmented,
        );
    }
    Ok(0)
}

fn cmd_selftest() -> Result<u8, CliError> {
    let checks = selftest::run_all();
    let mut failed = 0;
    for c in &checks {
        println!("[{}] {:<32} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.passed {
            failed += 1;
        }
    }
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    Ok(if failed == 0 { 0 } else { 3 })
}
