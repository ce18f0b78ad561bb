//! `rizzo`: typecheck programs, run them against event traces, and run the
//! oracle suites over the bundled corpus.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rizzo_rt::driver::{self, load, run_events, with_big_stack, DriverError, RunConfig};
use rizzo_rt::eval::DEFAULT_BUDGET;
use rizzo_rt::oracle::{oracle_suite, Checks, SuiteConfig, SuiteReport};
use rizzo_rt::reactive::Mutation;
use rizzo_rt::snapshot;
use rizzo_rt::stdlib::{check_corpus, manifest, Expect};

const USAGE: u8 = 2;
const PARSE: u8 = 3;
const TYPE: u8 = 4;
const TRACE: u8 = 5;
const ORACLE: u8 = 6;
const FAULT: u8 = 7;

#[derive(Parser)]
#[command(name = "rizzo", version, about = "Interpreter and reactive runtime for Rizzo programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program against an event trace, printing a snapshot after
    /// initialisation and after every event.
    Run {
        program: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Typecheck the store, heap and result around every step.
        #[arg(long)]
        check_preservation: bool,
        /// Replay the run and compare snapshots byte for byte.
        #[arg(long)]
        check_determinism: bool,
        /// Also check tick/clock agreement and that no reachable cell is stale.
        #[arg(long)]
        check_all: bool,
        /// Leave out cells the result cannot reach.
        #[arg(long)]
        hide_unreachable: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        snapshot_format: Format,
        /// Evaluation steps allowed per step.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Drop unreachable cells after every step instead of keeping them.
        #[arg(long)]
        collect: bool,
        /// Deliberately break the runtime, to see the oracles catch it.
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Typecheck every definition that takes no type arguments.
    Check { program: PathBuf },
    /// Check the bundled corpus and run the oracle suites on its programs.
    Corpus {
        /// Random traces per program.
        #[arg(long, default_value_t = 50)]
        traces: usize,
        #[arg(long, default_value_t = 30)]
        max_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep unreachable cells. Traces grow the heap quickly without
        /// collection, so keep `--max-len` small.
        #[arg(long)]
        no_collect: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    /// Mark cells that did not tick as updated.
    FlipFlag,
}

fn read(path: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(USAGE)
    })
}

fn report(e: &DriverError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(match e {
        DriverError::Parse(_) => PARSE,
        DriverError::Static(_) | DriverError::Type(_) => TYPE,
        DriverError::Trace(_) => TRACE,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    with_big_stack(move || match execute(cli.command) {
        Ok(code) | Err(code) => code,
    })
}

fn execute(command: Command) -> Result<ExitCode, ExitCode> {
    match command {
        Command::Run {
            program,
            trace,
            check_preservation,
            check_determinism,
            check_all,
            hide_unreachable,
            snapshot_format,
            budget,
            collect,
            inject_fault,
        } => {
            let src = read(&program)?;
            let trace_src = read(&trace)?;
            let loaded = load(&src).map_err(|e| report(&e))?;
            let events = loaded.events(&trace_src).map_err(|e| report(&e))?;
            let checks = if check_all { Checks::all() } else { Checks { preservation: check_preservation, ..Checks::default() } };
            let cfg = RunConfig {
                budget,
                checks,
                check_determinism: check_determinism || check_all,
                hide_unreachable,
                mutation: inject_fault.map(|Fault::FlipFlag| Mutation::FlipNonTickedFlag),
                collect,
            };
            let out = run_events(&loaded, events, cfg);
            print!(
                "{}",
                match snapshot_format {
                    Format::Text => snapshot::to_text(&out.snapshots),
                    Format::Json => snapshot::to_json_lines(&out.snapshots),
                }
            );
            let mut diffed = std::collections::BTreeSet::new();
            for v in out.violations() {
                eprintln!("oracle: {v}");
                if diffed.insert(v.step) {
                    eprint!("state change in step {}:\n{}", v.step, out.state_diff(v.step));
                }
            }
            if let Some(f) = out.fault() {
                eprintln!("fault: {f}");
                return Err(ExitCode::from(FAULT));
            }
            if !out.violations().is_empty() {
                return Err(ExitCode::from(ORACLE));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { program } => {
            let src = read(&program)?;
            let defs = driver::check_program(&src).map_err(|e| report(&e))?;
            for (name, ty) in defs {
                println!("{name} : {ty}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Corpus { traces, max_len, seed, no_collect } => {
            let mut ok = true;
            for r in check_corpus() {
                let verdict = if r.passed { "ok  " } else { "FAIL" };
                let expect = match r.expect {
                    Expect::Accept => "accept",
                    Expect::Reject => "reject",
                };
                let detail = r.error.map(|e| format!(" [{}] {e}", e.rule())).unwrap_or_default();
                let ty = r.ty.map(|t| format!(" : {t}")).unwrap_or_default();
                println!("{verdict} {expect} {}{ty}{detail}", r.name);
                ok &= r.passed;
            }
            let cfg = SuiteConfig { traces, max_len, pairs: traces, seed, collect: !no_collect, ..SuiteConfig::default() };
            let mut faulted = false;
            for p in manifest().programs {
                let loaded = load(p.source()).map_err(|e| report(&e))?;
                let given = match p.trace_source() {
                    Some(t) => vec![loaded.events(t).map_err(|e| report(&e))?],
                    None => vec![],
                };
                let r = oracle_suite(&loaded.term, &loaded.ty, &loaded.channels, &given, cfg);
                print_suite(&p.name, &r);
                ok &= r.violations.is_empty();
                faulted |= !r.faults.is_empty();
            }
            if faulted {
                return Err(ExitCode::from(FAULT));
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(ORACLE) })
        }
    }
}

fn print_suite(name: &str, r: &SuiteReport) {
    let verdict = if r.ok() { "ok  " } else { "FAIL" };
    println!(
        "{verdict} oracles {name}: {} runs, {} steps, at most {} evaluation steps per step",
        r.runs, r.steps, r.max_eval_steps
    );
    for v in &r.violations {
        println!("     {v}");
    }
    for f in &r.faults {
        println!("     {f}");
    }
}
