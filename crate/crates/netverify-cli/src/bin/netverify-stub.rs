//! Scripted reference generator speaking the harness stdio protocol.
//!
//! Reads `{"task_prompt", "history", "task_id", "round", "seed"}` on stdin
//! and emits `{"circuit", "tokens_in", "tokens_out"}`. Token counts are
//! whitespace-token tallies of the stub's own input and output.
//!
//! Modes:
//!   golden  - replay the task's golden netlist
//!   repair  - emit a broken variant until the feedback names C_DIRECT,
//!             then the golden (full feedback repairs, weak/none never do)
//!   fail    - emit bytes that are not a generator document
//!   flaky   - golden when seed % 15 < --succeed-lt, malformed otherwise

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "netverify-stub")]
struct Args {
    #[arg(long)]
    mode: String,
    /// Tasks directory holding <id>/golden.circuit.json.
    #[arg(long)]
    tasks: Option<PathBuf>,
    /// Flaky mode: succeed when seed % 15 is below this.
    #[arg(long, default_value_t = 8)]
    succeed_lt: u64,
}

fn whitespace_tokens(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut input = String::new();
    if std::io::stdin().read_to_string(&mut input).is_err() {
        return ExitCode::from(1);
    }
    if args.mode == "fail" {
        println!("this is not a generator document");
        return ExitCode::SUCCESS;
    }
    let request: Value = match serde_json::from_str(&input) {
        Ok(v) => v,
        Err(_) => return ExitCode::from(1),
    };
    let task_id = request["task_id"].as_u64().unwrap_or(0);
    let seed = request["seed"].as_u64().unwrap_or(0);
    let tasks = args.tasks.unwrap_or_else(|| PathBuf::from("data/tasks"));
    let golden_path = tasks.join(task_id.to_string()).join("golden.circuit.json");
    let golden: Value = std::fs::read(&golden_path)
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok())
        .unwrap_or(Value::Null);

    let circuit = match args.mode.as_str() {
        "golden" => golden,
        "repair" => {
            let repaired = request["history"]
                .as_array()
                .map(|h| {
                    h.iter().any(|entry| {
                        entry["feedback"]
                            .as_str()
                            .map(|f| f.contains("C_DIRECT"))
                            .unwrap_or(false)
                    })
                })
                .unwrap_or(false);
            if repaired {
                golden
            } else {
                let broken = tasks
                    .join(task_id.to_string())
                    .join("mutations/remove_decoupling_cap.circuit.json");
                std::fs::read(&broken)
                    .ok()
                    .and_then(|b| serde_json::from_slice(&b).ok())
                    .unwrap_or(golden)
            }
        }
        "flaky" => {
            if seed % 15 < args.succeed_lt {
                golden
            } else {
                serde_json::json!({"malformed": true})
            }
        }
        other => {
            eprintln!("unknown mode {other:?}");
            return ExitCode::from(2);
        }
    };
    let response = serde_json::json!({
        "circuit": circuit,
        "tokens_in": whitespace_tokens(&input),
        "tokens_out": whitespace_tokens(&circuit.to_string()),
    });
    println!("{response}");
    ExitCode::SUCCESS
}
