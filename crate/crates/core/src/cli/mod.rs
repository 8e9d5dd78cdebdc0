//! Batch front end: job documents in, tables or line-delimited structured
//! reports out, with resolution caches for reuse.
//!
//! Exit codes: 0 success, 1 failed check (or a map that fails a required
//! precondition such as weak-closedness), 2 schema problems, 3 window
//! exhaustion, 4 internal invariant violations.

pub mod cache;
pub mod document;
pub mod report;
pub mod run;

use clap::{Parser, Subcommand};

use crate::dga::Window;
use crate::error::EngineError;
use document::JobDocument;
use run::{run_command, RunOptions};

#[derive(Parser)]
#[command(
    name = "tate",
    about = "Acyclic closures, minimal models, comparison maps and homotopy Lie algebras \
             of surjective maps of graded rings over a prime field",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the acyclic closure and print its variables
    Closure(JobArgs),
    /// Build the minimal model and print its variables
    Model(JobArgs),
    /// Build the comparison map from the closure and verify it
    Compare(JobArgs),
    /// Homotopy Lie algebra: generators, brackets, reduced squares
    Pi(JobArgs),
    /// Deviations, Γ-deviations and the prediction formula
    Deviations(JobArgs),
    /// Structural predicates: closed, weakly-closed, ci, qci
    Classify(JobArgs),
    /// Ranks of the closure per homological degree
    Betti(JobArgs),
    /// Truncated generating-function identity for monomial counts
    Poincare(JobArgs),
    /// Run a named check suite ("all")
    Check {
        /// which suite to run; only "all" is defined
        suite: String,
        #[command(flatten)]
        args: JobArgs,
    },
    /// Run the commands listed in the document itself
    Run(JobArgs),
}

#[derive(clap::Args)]
struct JobArgs {
    /// path to the job document (JSON)
    document: String,
    /// override the window, e.g. --window 8,14
    #[arg(long, value_parser = parse_window)]
    window: Option<Window>,
    /// permutation of the relation list, e.g. --seed-order 2,0,1
    #[arg(long)]
    seed_order: Option<String>,
    /// output format
    #[arg(long, value_parser = ["table", "structured"])]
    format: Option<String>,
    /// write the build to a cache file after computing
    #[arg(long)]
    save_cache: Option<String>,
    /// load the build from a cache file instead of recomputing
    #[arg(long)]
    load_cache: Option<String>,
}

fn parse_window(s: &str) -> Result<Window, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected N,D".into());
    }
    let n: u32 = parts[0].trim().parse().map_err(|_| "bad N")?;
    let d: u32 = parts[1].trim().parse().map_err(|_| "bad D")?;
    Window::new(n, d).map_err(|e| e.to_string())
}

impl JobArgs {
    fn options(&self, command: &str) -> Result<RunOptions, EngineError> {
        let seed_order = match &self.seed_order {
            None => None,
            Some(s) => {
                let mut perm = Vec::new();
                for tok in s.split(',') {
                    let i: usize = tok.trim().parse().map_err(|_| {
                        EngineError::Schema(format!("bad --seed-order entry {tok:?}"))
                    })?;
                    perm.push(i);
                }
                Some(perm)
            }
        };
        Ok(RunOptions {
            command: command.to_string(),
            window: self.window,
            seed_order,
            format: self.format.clone(),
            save_cache: self.save_cache.clone(),
            load_cache: self.load_cache.clone(),
        })
    }
}

fn dispatch(args: &JobArgs, command: &str) -> i32 {
    let doc = match JobDocument::load(&args.document) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let opts = match args.options(command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match run_command(&doc, &opts) {
        Ok(output) => {
            print!("{}", output.text);
            if output.failed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point used by the `tate` binary.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match &cli.command {
        Command::Closure(a) => dispatch(a, "closure"),
        Command::Model(a) => dispatch(a, "model"),
        Command::Compare(a) => dispatch(a, "compare"),
        Command::Pi(a) => dispatch(a, "pi"),
        Command::Deviations(a) => dispatch(a, "deviations"),
        Command::Classify(a) => dispatch(a, "classify"),
        Command::Betti(a) => dispatch(a, "betti"),
        Command::Poincare(a) => dispatch(a, "poincare"),
        Command::Check { suite, args } => {
            if suite != "all" {
                eprintln!("error: unknown check suite {suite:?}; try `check all`");
                return 2;
            }
            dispatch(args, "check-all")
        }
        Command::Run(a) => dispatch(a, "run"),
    }
}
