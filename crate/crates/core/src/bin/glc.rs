use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use glc::actors::{auto_partition, events_to_jsonl, parse_partition, prepare, ActorError, Scheduler, SchedulerPolicy};
use glc::knot::{bracket, extract_relations, parse_pd, state_sum};
use glc::lambda::{graph_to_term, parse_term, term_to_graph};
use glc::rewrite::{reduce, FanInWiring, Mode, ReduceConfig, RewriteError, Strategy};
use glc::{parse_mol, to_mol, PortGraph};

#[derive(Parser)]
#[command(name = "glc", version, about = "Graph rewriting for lambda terms, actors and knot diagrams")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Glc,
    Chemlambda,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Priority,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum WiringArg {
    Crossing,
    Parallel,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchedulerArg {
    RoundRobin,
    Random,
}

#[derive(Subcommand)]
enum Cmd {
    /// Translate a lambda term into a molecule file.
    Compile {
        term: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reduce a molecule and print the final molecule.
    Reduce {
        mol: PathBuf,
        #[arg(long, value_enum, default_value = "glc")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "priority")]
        strategy: StrategyArg,
        /// Seed for the random strategy.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Write the JSON-lines trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print the lambda term read back from the result instead of the molecule.
        #[arg(long)]
        readback: bool,
        #[arg(long, value_enum, default_value = "crossing")]
        fan_in: WiringArg,
    },
    /// Run the actor simulation and print the final molecule.
    #[command(group(ArgGroup::new("split").required(true).args(["partition", "auto"])))]
    Actors {
        mol: PathBuf,
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long)]
        auto: Option<usize>,
        /// Defaults to random when a seed is given, round-robin otherwise.
        #[arg(long, value_enum)]
        scheduler: Option<SchedulerArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        max_events: usize,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "glc")]
        mode: ModeArg,
    },
    /// Knot diagram computations on PD text.
    #[command(group(ArgGroup::new("what").required(true).args(["bracket", "state_sum", "relations"])))]
    Knot {
        pd: PathBuf,
        #[arg(long)]
        bracket: bool,
        #[arg(long)]
        state_sum: bool,
        #[arg(long)]
        relations: bool,
    },
    /// Write a Graphviz description of a molecule.
    ExportDot {
        mol: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
}

type Outcome = Result<(), Failure>;

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    match output {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_mol(path: &Path) -> Result<PortGraph, Failure> {
    parse_mol(&read(path)?).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn report_loops(g: &PortGraph) {
    if g.loops() > 0 {
        eprintln!("node-free loops: {}", g.loops());
    }
}

fn mode(m: ModeArg) -> Mode {
    match m {
        ModeArg::Glc => Mode::Glc,
        ModeArg::Chemlambda => Mode::Chemlambda,
    }
}

fn print_result(g: &PortGraph, readback: bool) -> Outcome {
    if readback {
        let t = graph_to_term(g).map_err(domain)?;
        println!("{t}");
    } else {
        print!("{}", to_mol(g));
    }
    report_loops(g);
    Ok(())
}

fn run(cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::Compile { term, output } => {
            let t = parse_term(&term).map_err(domain)?;
            emit(output.as_deref(), &to_mol(&term_to_graph(&t)))
        }
        Cmd::Reduce { mol, mode: m, strategy, seed, max_steps, trace, readback, fan_in } => {
            if seed.is_some() && strategy != StrategyArg::Random {
                return Err(Failure::Usage("--seed needs --strategy random".into()));
            }
            let g = load_mol(&mol)?;
            let strategy = match strategy {
                StrategyArg::Priority => Strategy::Priority,
                StrategyArg::Random => Strategy::Random(seed.unwrap_or(0)),
            };
            let mut cfg = ReduceConfig::new(mode(m), strategy).max_steps(max_steps);
            cfg.fan_in = match fan_in {
                WiringArg::Crossing => FanInWiring::Crossing,
                WiringArg::Parallel => FanInWiring::Parallel,
            };
            match reduce(&g, &cfg) {
                Ok((out, tr)) => {
                    if let Some(p) = &trace {
                        write(p, &tr.to_jsonl())?;
                    }
                    print_result(&out, readback)
                }
                Err(RewriteError::StepLimitExceeded { limit, partial }) => {
                    let (out, tr) = *partial;
                    if let Some(p) = &trace {
                        write(p, &tr.to_jsonl())?;
                    }
                    print!("{}", to_mol(&out));
                    report_loops(&out);
                    Err(Failure::Domain(format!("step limit of {limit} reached; partial result written")))
                }
                Err(e) => Err(domain(e)),
            }
        }
        Cmd::Actors { mol, partition, auto, scheduler, seed, max_events, log, mode: m } => {
            if scheduler == Some(SchedulerArg::RoundRobin) && seed.is_some() {
                return Err(Failure::Usage("--seed needs --scheduler random".into()));
            }
            if auto == Some(0) {
                return Err(Failure::Usage("--auto needs at least one actor".into()));
            }
            let g = load_mol(&mol)?;
            let part = match (partition, auto) {
                (Some(p), _) => parse_partition(&read(&p)?).map_err(domain)?,
                (None, Some(n)) => auto_partition(&g, n),
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let policy = match (scheduler, seed) {
                (Some(SchedulerArg::RoundRobin), _) | (None, None) => SchedulerPolicy::RoundRobin,
                (_, s) => SchedulerPolicy::Random(s.unwrap_or(0)),
            };
            let mut sys = prepare(&g, &part).map_err(domain)?.with_mode(mode(m));
            match sys.run(&mut Scheduler::new(policy), max_events) {
                Ok((out, events)) => {
                    if let Some(p) = &log {
                        write(p, &events_to_jsonl(&events))?;
                    }
                    print_result(&out, false)
                }
                Err(ActorError::EventLimitExceeded { limit, partial }) => {
                    let (out, events) = *partial;
                    if let Some(p) = &log {
                        write(p, &events_to_jsonl(&events))?;
                    }
                    print!("{}", to_mol(&out));
                    Err(Failure::Domain(format!("event limit of {limit} reached; partial result written")))
                }
                Err(e) => Err(domain(e)),
            }
        }
        Cmd::Knot { pd, bracket: b, state_sum: s, relations } => {
            let d = parse_pd(&read(&pd)?).map_err(domain)?;
            if b {
                println!("{}", bracket(&d).map_err(domain)?);
            } else if s {
                println!("{}", state_sum(&d).map_err(domain)?);
            } else if relations {
                for r in extract_relations(&d).map_err(domain)? {
                    println!("{r}");
                }
            }
            Ok(())
        }
        Cmd::ExportDot { mol, output } => {
            let g = load_mol(&mol)?;
            emit(output.as_deref(), &glc::dot::to_dot(&g))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
