use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crossover::experiments::{emit_plots_data, run_scenario, verify, ScenarioConfig, Verdict, SCENARIOS};

#[derive(Parser)]
#[command(name = "lab", about = "Run and verify crossover experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its report.
    Run {
        scenario: String,
        /// TOML file whose keys mirror the scenario configuration; the built-in preset is used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// List the available scenarios.
    List,
    /// Recheck a written report against its CSV tables.
    Verify { report_dir: PathBuf },
}

fn load_config(scenario: &str, path: Option<&Path>) -> Result<ScenarioConfig, String> {
    let Some(path) = path else {
        return ScenarioConfig::preset(scenario).map_err(|e| e.to_string());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg: ScenarioConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if cfg.scenario != scenario {
        return Err(format!("config {} is for scenario {:?}, not {scenario:?}", path.display(), cfg.scenario));
    }
    Ok(cfg)
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.check.name, v.detail);
    }
}

fn run(scenario: &str, config: Option<&Path>, seed: Option<u64>, out: Option<PathBuf>, replicas: Option<usize>) -> Result<bool, String> {
    let mut cfg = load_config(scenario, config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = replicas {
        cfg.replicas = r;
    }
    if out.is_some() {
        cfg.out_dir = out;
    }
    let report = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let dir = cfg.out_dir();
    report.write(&dir).map_err(|e| e.to_string())?;
    emit_plots_data(&report, &dir).map_err(|e| e.to_string())?;
    print_verdicts(&report.verdicts);
    println!(
        "{}: {} in {:.1} s, report in {}",
        report.scenario,
        if report.passed { "passed" } else { "failed" },
        report.runtime_s,
        dir.display()
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::List => {
            for (name, about) in SCENARIOS {
                println!("{name:<22}{about}");
            }
            Ok(true)
        }
        Command::Run { scenario, config, seed, out, replicas } => run(&scenario, config.as_deref(), seed, out, replicas),
        Command::Verify { report_dir } => verify(&report_dir).map_err(|e| e.to_string()).map(|o| {
            print_verdicts(&o.recomputed);
            if !o.consistent {
                println!("FAIL tables: recomputed verdicts differ from the stored report");
            }
            o.passed
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
