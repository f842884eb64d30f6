use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fairsched::harness::{reproduce_reference, DEFAULT_TRIALS, OUTPUT_FILES};
use fairsched::{load_scenario, monte_carlo, run, solve, ObjectiveSpec, PolicySpec, Summary, Utility, Weights};

#[derive(Parser)]
#[command(name = "fairsched", version, about = "Multi-resource fair scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report every violation.
    Validate { scenario: PathBuf },
    /// Run progressive filling once and print the placement trace as CSV.
    Run {
        scenario: PathBuf,
        /// Scheduler label such as `DRF`, `PS-DSF` or `drf:best-fit`.
        #[arg(long)]
        policy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Repeat a run over independent trials and print per-cell statistics.
    Montecarlo {
        scenario: PathBuf,
        #[arg(long)]
        policy: String,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve a fluid relaxation and print the solution as JSON.
    Oracle {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Fairness exponent for `pf`.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Criterion weights for `mmf` and `upf`.
        #[arg(long, value_enum, default_value_t = WeightKind::Drf)]
        criterion: WeightKind,
        /// Utility exponent for `mmf`; 1 means log(1+U).
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Run the reference experiment on the bundled two-server instance.
    #[command(name = "repro-paper")]
    Reproduce {
        outdir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Mmf,
    Pf,
    Upf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightKind {
    Drf,
    Psdsf,
    PsdsfServer,
    Unit,
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            println!(
                "ok: {} frameworks, {} servers, {} resources",
                s.num_frameworks(),
                s.num_servers(),
                s.num_resources()
            );
        }
        Command::Run {
            scenario,
            policy,
            seed,
            output,
        } => {
            let s = load_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let p = PolicySpec::parse(&policy)?.with_seed(seed);
            let result = run(&s, &p)?;
            let csv = result.trace_csv(&s);
            match output {
                Some(path) => fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
            eprintln!("{}: {} tasks placed", p.label(), result.total_efficiency);
        }
        Command::Montecarlo {
            scenario,
            policy,
            trials,
            seed,
        } => {
            let s = load_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let p = PolicySpec::parse(&policy)?;
            let stats = monte_carlo(&s, &p, trials, seed)?;
            let mut out = String::from("cell,mean,sample_std,ci95_low,ci95_high\n");
            let mut line = |name: String, c: fairsched::CellStats| {
                let sum = Summary::from_moments(c.mean, c.sample_std, c.count);
                writeln!(
                    out,
                    "{name},{},{},{},{}",
                    sum.mean, sum.sample_std, sum.ci95_low, sum.ci95_high
                )
                .unwrap();
            };
            for (n, f) in s.frameworks.iter().enumerate() {
                for (i, srv) in s.servers.iter().enumerate() {
                    line(format!("x_{}_{}", f.id, srv.id), stats.cell(n, i));
                }
            }
            line("total".into(), stats.total);
            for (i, srv) in s.servers.iter().enumerate() {
                for (r, name) in s.resource_names.iter().enumerate() {
                    line(format!("u_{}_{name}", srv.id), stats.unused_cell(i, r));
                }
            }
            print!("{out}");
        }
        Command::Oracle {
            scenario,
            mode,
            a,
            criterion,
            alpha,
        } => {
            let s = load_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let weights = match criterion {
                WeightKind::Drf => Weights::drf(&s),
                WeightKind::Psdsf => Weights::psdsf_global(&s),
                WeightKind::PsdsfServer => Weights::psdsf_per_server(&s),
                WeightKind::Unit => Weights::unit(&s),
            };
            let objective = match mode {
                Mode::Pf => ObjectiveSpec::proportional(a),
                Mode::Upf => ObjectiveSpec::criterion_log(weights),
                Mode::Mmf => ObjectiveSpec::MaxMin {
                    utility: if alpha == 1.0 {
                        Utility::Log1p
                    } else {
                        Utility::Alpha(alpha)
                    },
                    weights,
                },
            };
            println!("{}", solve(&s, &objective)?.to_json());
        }
        Command::Reproduce { outdir, seed, trials } => {
            if trials < 2 {
                bail!("--trials must be at least 2");
            }
            let table = reproduce_reference(&outdir, seed, trials)?;
            for row in &table.rows {
                eprintln!(
                    "{:<11} total {:>7.3} over {} trial(s)",
                    row.label, row.stats.total.mean, row.trials
                );
            }
            for f in OUTPUT_FILES {
                println!("{}", outdir.join(f).display());
            }
        }
    }
    Ok(())
}
