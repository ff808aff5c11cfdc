//! Command-line front end: single-netlist verification, benchmark runs over
//! a pluggable generator, and knowledge-graph lint.
//!
//! Exit status: 0 pass, 1 verification failed (or lint diagnostics),
//! 2 input/data error, 3 harness/protocol error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use netverify::bundle::{list_task_ids, load_bundle};
use netverify::circuit::parse_circuit;
use netverify::feedback::{render, FeedbackLevel, VerifyReport};
use netverify::harness::{run_benchmark, BenchOptions, BenchTask, HarnessError};
use netverify::kg::{lint_kg, parse_kg, token_footprint};
use netverify::topology::{parse_template, verify};

const EXIT_PASS: u8 = 0;
const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INPUT_ERROR: u8 = 2;
const EXIT_HARNESS_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "netverify",
    about = "Constraint-guided verification for PCB schematic netlists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify one netlist against a knowledge graph and system template.
    Check {
        /// Circuit document to verify.
        netlist: PathBuf,
        /// Knowledge-graph document.
        #[arg(long)]
        kg: PathBuf,
        /// System template document.
        #[arg(long)]
        template: PathBuf,
        /// Feedback granularity: full, weak, or none.
        #[arg(long, default_value = "full")]
        feedback: String,
        /// Write the JSON verification report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the benchmark: n trials per task against a generator command.
    Bench {
        /// Tasks directory (containing <id>/task.json).
        #[arg(long)]
        tasks: PathBuf,
        /// Generator command line, split on whitespace.
        #[arg(long)]
        generator: String,
        /// Trials per task.
        #[arg(long, default_value_t = 15)]
        n: u64,
        /// Pass@k values, comma separated.
        #[arg(long, default_value = "1,5")]
        k: String,
        /// Maximum attempts per trial.
        #[arg(long, default_value_t = 3)]
        retries: u32,
        /// Worker pool size (default: logical processors).
        #[arg(long)]
        jobs: Option<usize>,
        /// Per-trial timeout in seconds.
        #[arg(long, default_value_t = 120)]
        timeout_secs: u64,
        /// z value for the Wilson interval.
        #[arg(long, default_value_t = 1.645)]
        z: f64,
        /// Override every task's feedback level.
        #[arg(long)]
        feedback: Option<String>,
        /// Restrict to these task ids, comma separated.
        #[arg(long)]
        only: Option<String>,
        /// Output directory for report.json, report.txt, trials.jsonl.
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
    /// Lint a knowledge graph and report token footprints.
    KgLint {
        /// Knowledge-graph document.
        #[arg(long)]
        kg: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Check {
            netlist,
            kg,
            template,
            feedback,
            report,
        } => cmd_check(&netlist, &kg, &template, &feedback, report.as_deref()),
        Command::Bench {
            tasks,
            generator,
            n,
            k,
            retries,
            jobs,
            timeout_secs,
            z,
            feedback,
            only,
            out,
        } => cmd_bench(
            &tasks,
            &generator,
            n,
            &k,
            retries,
            jobs,
            timeout_secs,
            z,
            feedback.as_deref(),
            only.as_deref(),
            &out,
        ),
        Command::KgLint { kg } => cmd_kg_lint(&kg),
    };
    ExitCode::from(status)
}

fn read_file(path: &Path) -> Result<Vec<u8>, u8> {
    std::fs::read(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INPUT_ERROR
    })
}

fn cmd_check(
    netlist: &Path,
    kg_path: &Path,
    template_path: &Path,
    feedback: &str,
    report: Option<&Path>,
) -> u8 {
    let Some(level) = FeedbackLevel::parse(feedback) else {
        eprintln!("error: unknown feedback level {feedback:?} (use full, weak, or none)");
        return EXIT_INPUT_ERROR;
    };
    let (netlist_bytes, kg_bytes, template_bytes) = match (
        read_file(netlist),
        read_file(kg_path),
        read_file(template_path),
    ) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        _ => return EXIT_INPUT_ERROR,
    };
    let kg = match parse_kg(&kg_bytes) {
        Ok(kg) => kg,
        Err(e) => {
            eprintln!("error: {}: {e}", kg_path.display());
            return EXIT_INPUT_ERROR;
        }
    };
    let template = match parse_template(&template_bytes) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", template_path.display());
            return EXIT_INPUT_ERROR;
        }
    };
    let circuit = match parse_circuit(&netlist_bytes) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", netlist.display());
            return EXIT_INPUT_ERROR;
        }
    };
    let (ok, violations) = verify(&circuit, &kg, &template);
    let message = render(&violations, level);
    println!("{}", message.text);
    if let Some(path) = report {
        let doc = VerifyReport::new(ok, violations, &message);
        if let Err(e) = std::fs::write(path, doc.to_json() + "\n") {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_INPUT_ERROR;
        }
    }
    if ok {
        EXIT_PASS
    } else {
        EXIT_VERIFY_FAILED
    }
}

fn parse_id_list(s: &str) -> Option<Vec<u64>> {
    s.split(',').map(|p| p.trim().parse::<u64>().ok()).collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    tasks_dir: &Path,
    generator: &str,
    n: u64,
    ks: &str,
    retries: u32,
    jobs: Option<usize>,
    timeout_secs: u64,
    z: f64,
    feedback: Option<&str>,
    only: Option<&str>,
    out: &Path,
) -> u8 {
    let Some(ks) = parse_id_list(ks) else {
        eprintln!("error: --k expects a comma-separated integer list");
        return EXIT_INPUT_ERROR;
    };
    let only: Option<Vec<u64>> = match only {
        Some(s) => match parse_id_list(s) {
            Some(ids) => Some(ids),
            None => {
                eprintln!("error: --only expects a comma-separated integer list");
                return EXIT_INPUT_ERROR;
            }
        },
        None => None,
    };
    let feedback_override = match feedback {
        Some(s) => match FeedbackLevel::parse(s) {
            Some(level) => Some(level),
            None => {
                eprintln!("error: unknown feedback level {s:?}");
                return EXIT_INPUT_ERROR;
            }
        },
        None => None,
    };
    let ids = list_task_ids(tasks_dir);
    if ids.is_empty() {
        eprintln!("error: no tasks under {}", tasks_dir.display());
        return EXIT_INPUT_ERROR;
    }
    let mut tasks = Vec::new();
    for id in ids {
        if let Some(only) = &only {
            if !only.contains(&(id as u64)) {
                continue;
            }
        }
        match load_bundle(tasks_dir, id) {
            Ok(bundle) => tasks.push(BenchTask {
                spec: bundle.spec,
                kg: bundle.kg,
                template: bundle.template,
            }),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INPUT_ERROR;
            }
        }
    }
    let command: Vec<String> = generator.split_whitespace().map(str::to_string).collect();
    if command.is_empty() {
        eprintln!("error: empty generator command");
        return EXIT_HARNESS_ERROR;
    }
    let options = BenchOptions {
        trials: n,
        ks,
        max_retries: retries,
        timeout: Duration::from_secs(timeout_secs),
        jobs: jobs.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        }),
        z,
        feedback_override,
    };
    let (report, trials) = match run_benchmark(&tasks, &command, &options) {
        Ok(result) => result,
        Err(e @ HarnessError::BadK { .. }) => {
            eprintln!("error: {e}");
            return EXIT_INPUT_ERROR;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_HARNESS_ERROR;
        }
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: {}: {e}", out.display());
        return EXIT_INPUT_ERROR;
    }
    let table = report.text_table();
    let jsonl: String = trials
        .iter()
        .map(|t| t.to_json_value().to_string() + "\n")
        .collect();
    let writes = [
        (out.join("report.json"), report.to_json() + "\n"),
        (out.join("report.txt"), table.clone()),
        (out.join("trials.jsonl"), jsonl),
    ];
    for (path, contents) in writes {
        if let Err(e) = std::fs::write(&path, contents) {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_INPUT_ERROR;
        }
    }
    print!("{table}");
    EXIT_PASS
}

fn cmd_kg_lint(kg_path: &Path) -> u8 {
    let bytes = match read_file(kg_path) {
        Ok(b) => b,
        Err(status) => return status,
    };
    let kg = match parse_kg(&bytes) {
        Ok(kg) => kg,
        Err(e) => {
            eprintln!("error: {}: {e}", kg_path.display());
            return EXIT_INPUT_ERROR;
        }
    };
    let diagnostics = lint_kg(&kg);
    for diagnostic in &diagnostics {
        println!("{diagnostic}");
    }
    let mut total = 0usize;
    for (part_type, entry) in &kg.entries {
        let tokens = token_footprint(entry);
        total += tokens;
        println!("{part_type}: {tokens} tokens");
    }
    if !kg.entries.is_empty() {
        println!(
            "mean token footprint: {:.1}",
            total as f64 / kg.entries.len() as f64
        );
    }
    if diagnostics.is_empty() {
        EXIT_PASS
    } else {
        EXIT_VERIFY_FAILED
    }
}
