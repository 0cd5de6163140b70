//! Serves a model over the line-delimited JSON protocol on stdin/stdout.
//!
//! Usage: `model-host <model.json>` for a built-in model spec, or
//! `model-host --uniform` for a model answering uniform probabilities.

use std::fs;
use std::io::{self, BufReader};
use std::process::ExitCode;

use surrogate_core::blackbox::protocol::{serve, HostedModel};
use surrogate_core::blackbox::ModelSpec;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let hosted = match args.as_slice() {
        [flag] if flag == "--uniform" => HostedModel::Uniform,
        [path] => {
            let parsed = fs::read_to_string(path)
                .map_err(|e| e.to_string())
                .and_then(|text| {
                    serde_json::from_str::<ModelSpec>(&text).map_err(|e| e.to_string())
                });
            match parsed {
                Ok(spec) => HostedModel::Builtin(spec),
                Err(e) => {
                    eprintln!("model-host: cannot load {path}: {e}");
                    return ExitCode::from(2);
                }
            }
        }
        _ => {
            eprintln!("usage: model-host <model.json> | --uniform");
            return ExitCode::from(1);
        }
    };
    let stdin = io::stdin();
    match serve(BufReader::new(stdin.lock()), io::stdout().lock(), &hosted) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("model-host: {e}");
            ExitCode::from(2)
        }
    }
}
