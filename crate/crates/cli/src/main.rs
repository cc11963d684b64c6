mod commands;
mod config;

use std::process::ExitCode;

use overlapix::Error;

use crate::config::{Command, RunConfig};

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;
const CAPACITY: u8 = 3;
const OVERFLOW: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_)
        | Error::Precondition(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidGenerators(_) => USAGE,
        Error::Capacity(_) | Error::TruncatedSupport { .. } | Error::NoConvergence(_) => CAPACITY,
        Error::BudgetOverflow { .. } => OVERFLOW,
        Error::Contract(_) => FAIL,
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("OVERLAPIX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("OVERLAPIX_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn seed_for(cfg: &mut RunConfig) -> u64 {
    if let Some(s) = cfg.seed {
        return s;
    }
    let s = rand::random::<u64>();
    cfg.seed = Some(s);
    eprintln!("overlapix: no --seed given, using {s}; rerun with: {}", cfg.to_args().join(" "));
    s
}

fn main() -> ExitCode {
    let mut cfg = match RunConfig::try_parse_from(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("overlapix: {msg}");
        return ExitCode::from(USAGE);
    }
    let result = match cfg.command {
        Command::Norms => commands::norms(&cfg),
        Command::Witness => commands::witness(&cfg),
        Command::Estimate => {
            let seed = seed_for(&mut cfg);
            commands::estimate(&cfg, seed)
        }
        Command::Sweep => {
            let seed = seed_for(&mut cfg);
            commands::sweep(&cfg, seed)
        }
    };
    let mut out = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("overlapix: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = commands::emit(&cfg, &mut out) {
        eprintln!("overlapix: cannot write output: {e}");
        return ExitCode::from(FAIL);
    }
    for d in &out.diagnostics {
        eprintln!("{d}");
    }
    ExitCode::from(if out.pass { PASS } else { FAIL })
}
