mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ConfigFile};
use commands::NotFound;

const EXIT_OTHER: u8 = 1;
const EXIT_NOT_FOUND: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_MALFORMED: u8 = 5;
const EXIT_CAPACITY: u8 = 6;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<NotFound>().is_some() {
        return EXIT_NOT_FOUND;
    }
    use atree::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::Infeasible { .. }) => EXIT_INFEASIBLE,
        Some(E::Capacity { .. }) => EXIT_CAPACITY,
        Some(E::MalformedInput(_) | E::MalformedRange | E::EmptyInput | E::Parse { .. } | E::Format(_)) => {
            EXIT_MALFORMED
        }
        _ => EXIT_OTHER,
    }
}

fn run(mut cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match &mut cli.command {
        Command::Segment(a) => {
            a.source.apply(&cfg);
            a.error = a.error.or(cfg.error);
            commands::segment(a)
        }
        Command::Gen(a) => {
            a.source.apply(&cfg);
            commands::gen(a)
        }
        Command::Build(a) => {
            a.source.apply(&cfg);
            a.params.apply(&cfg);
            commands::build(a)
        }
        Command::Query(a) => commands::query(a),
        Command::Range(a) => commands::range(a),
        Command::InsertFile(a) => commands::insert_file(a),
        Command::Cost(a) => {
            a.source.apply(&cfg);
            a.params.apply(&cfg);
            if a.errors.is_empty() {
                a.errors = cfg.errors.clone().unwrap_or_default();
            }
            if a.latency_ns.is_none() && a.budget_bytes.is_none() {
                a.latency_ns = cfg.latency_ns;
                a.budget_bytes = cfg.budget_bytes;
            }
            commands::cost(a)
        }
        Command::Bench(a) => {
            a.source.apply(&cfg);
            if a.errors.is_empty() {
                a.errors = cfg.errors.clone().unwrap_or_default();
            }
            a.fanout = a.fanout.or(cfg.fanout);
            a.layout = a.layout.or(cfg.layout);
            commands::bench(a)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
