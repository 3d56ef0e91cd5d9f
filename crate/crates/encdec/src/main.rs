use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use encdec::harness::{self, parse_grid, Ansatz, ExperimentConfig, Metric, Protocol};
use encdec::replica::{class_table, count_commutant, generate_commutant};
use encdec::theory::{self, CodeParams, Ensemble};
use encdec::{Error, Result};

#[derive(Parser)]
#[command(name = "encdec", version, about = "Random encoder-decoder simulations and replica calculations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Flat key = value file; command line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma separated system sizes.
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    rate: Option<f64>,
    /// `a,b,c` or `lin:start:stop:count`.
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma separated metric names.
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// CSV destination; a `.json` sidecar is written next to it. Defaults to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Clifford encoders, one fixed syndrome.
    RunForced {
        #[arg(long, default_value_t = 0)]
        syndrome: u64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Clifford encoders, a random syndrome of a given class per realization.
    RunClass {
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Clifford encoders, syndromes drawn from the Born rule (0 draws sums exactly).
    RunBorn {
        #[arg(long, default_value_t = 0)]
        draws: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Haar encoders, one fixed syndrome.
    RunHaar {
        #[arg(long, default_value_t = 0)]
        syndrome: u64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluates closed-form predictions over an alpha grid.
    TheoryEval {
        /// Formula name, or `list`.
        #[arg(long)]
        formula: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "lin:0:3.14159:11")]
        alphas: String,
    },
    /// Counts (or lists) the single-site commutant for n replicas.
    CommutantGen {
        #[arg(long)]
        replicas: usize,
        /// List every element, not just class counts.
        #[arg(long)]
        materialize: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Crossings and finite-size collapse of one metric in a result CSV.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "fidelity")]
        metric: String,
        #[arg(long, default_value = "0.5:2.0")]
        alpha_c_range: String,
        #[arg(long, default_value = "0.3:3.0")]
        nu_range: String,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Also report where each curve crosses this value.
        #[arg(long)]
        level: Option<f64>,
    },
}

fn config_from(run: &RunArgs, ensemble: Ensemble, protocol: Protocol) -> Result<ExperimentConfig> {
    let mut cfg = match &run.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_kv(&text)?
        }
        None if run.seed.is_none() => return Err(Error::Config("--seed is required".into())),
        None => ExperimentConfig {
            ensemble,
            protocol,
            n_list: vec![],
            rate: 0.5,
            alpha_grid: vec![],
            realizations: 100,
            seed: 0,
            metrics: vec![Metric::Fidelity],
            output: None,
            threads: None,
        },
    };
    cfg.ensemble = ensemble;
    cfg.protocol = protocol;
    if let Some(v) = &run.n_list {
        cfg.n_list = v.split(',').map(|s| s.trim().parse().map_err(|_| Error::Config(format!("bad size `{s}`")))).collect::<Result<_>>()?;
    }
    if let Some(v) = run.rate {
        cfg.rate = v;
    }
    if let Some(v) = &run.alphas {
        cfg.alpha_grid = parse_grid(v)?;
    }
    if let Some(v) = run.realizations {
        cfg.realizations = v;
    }
    if let Some(v) = run.seed {
        cfg.seed = v;
    }
    if let Some(v) = &run.metrics {
        cfg.metrics = v.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?;
    }
    if run.threads.is_some() {
        cfg.threads = run.threads;
    }
    if run.output.is_some() {
        cfg.output = run.output.clone();
    }
    Ok(cfg)
}

fn run_experiment(cfg: ExperimentConfig) -> Result<()> {
    let records = harness::run(&cfg)?;
    match &cfg.output {
        Some(path) => harness::write_outputs(&cfg, &records, path),
        None => harness::write_csv(&records, std::io::stdout().lock()),
    }
}

fn range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("expected lo:hi, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::RunForced { syndrome, run } => run_experiment(config_from(&run, Ensemble::Clifford, Protocol::Forced { syndrome })?),
        Cmd::RunClass { ell, run } => run_experiment(config_from(&run, Ensemble::Clifford, Protocol::Class { ell })?),
        Cmd::RunBorn { draws, run } => run_experiment(config_from(&run, Ensemble::Clifford, Protocol::Born { draws })?),
        Cmd::RunHaar { syndrome, run } => run_experiment(config_from(&run, Ensemble::Haar, Protocol::Forced { syndrome })?),
        Cmd::TheoryEval { formula, n, k, alphas } => {
            let mut out = std::io::stdout().lock();
            if formula == "list" {
                for f in theory::FORMULAS {
                    writeln!(out, "{f}")?;
                }
                return Ok(());
            }
            writeln!(out, "formula,N,k,alpha,value")?;
            for a in parse_grid(&alphas)? {
                let p = CodeParams::new(n, k, a).map_err(|e| Error::Config(e.to_string()))?;
                writeln!(out, "{formula},{n},{k},{a},{}", theory::evaluate(&formula, &p)?)?;
            }
            Ok(())
        }
        Cmd::CommutantGen { replicas, materialize, output } => {
            let summary = count_commutant(replicas)?;
            let mut text = serde_json::to_string_pretty(&summary)?;
            text.push('\n');
            if materialize {
                let names = class_table(replicas)?;
                for e in generate_commutant(replicas, true)? {
                    text += &format!("{} {:032x}\n", names[e.class].name, e.support.key());
                }
            }
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => std::io::stdout().lock().write_all(text.as_bytes())?,
            }
            Ok(())
        }
        Cmd::Analyze { input, metric, alpha_c_range, nu_range, bins, level } => {
            let records = harness::read_csv(&input)?;
            let ansatz = Ansatz { alpha_c: range(&alpha_c_range)?, nu: range(&nu_range)?, bins, level };
            let report = harness::analyze(&records, &metric, &ansatz)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Budget(_) => 2,
                Error::Config(_) | Error::Parse(_) => 3,
                _ => 1,
            })
        }
    }
}
