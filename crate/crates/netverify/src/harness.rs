//! The generate–verify–feedback loop over a pluggable external generator,
//! and the benchmark runner executing n independent trials per task.
//!
//! Generators are subprocesses invoked once per attempt. They receive a JSON
//! document on stdin, `{"task_prompt", "history": [{"circuit"?, "feedback"}],
//! "task_id", "round", "seed"}`, and emit
//! `{"circuit": <canonical circuit document>, "tokens_in", "tokens_out"}`.
//! Anything a generator does after a successful spawn (crash, timeout,
//! malformed output, bad circuit) is a failed attempt with a synthetic
//! Phase 1 violation; failing to spawn at all is a harness error.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::bundle::{Difficulty, TaskSpec};
use crate::circuit::{parse_circuit, serialize_circuit, Circuit};
use crate::erc::earliest_phase;
use crate::feedback::{classify_phases, render, FeedbackLevel};
use crate::kg::KnowledgeGraph;
use crate::stats::{pass_at_k, wilson_interval, StatsError};
use crate::topology::{verify, SystemTemplate};
use crate::violation::{Phase, Violation, ViolationKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<Value>,
    pub feedback: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub task_prompt: String,
    pub history: Vec<HistoryEntry>,
    pub task_id: u32,
    pub round: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub circuit: Value,
    #[serde(default)]
    pub tokens_in: u64,
    #[serde(default)]
    pub tokens_out: u64,
}

/// A failed attempt the loop can retry past.
#[derive(Debug, Clone)]
pub enum GeneratorFailure {
    Crash { detail: String },
    Timeout { after: Duration },
    BadOutput { detail: String },
}

impl GeneratorFailure {
    fn kind(&self) -> &'static str {
        match self {
            GeneratorFailure::Crash { .. } => "crash",
            GeneratorFailure::Timeout { .. } => "timeout",
            GeneratorFailure::BadOutput { .. } => "malformed_output",
        }
    }

    fn detail(&self) -> String {
        match self {
            GeneratorFailure::Crash { detail } => detail.clone(),
            GeneratorFailure::Timeout { after } => {
                format!("no response within {} ms", after.as_millis())
            }
            GeneratorFailure::BadOutput { detail } => detail.clone(),
        }
    }
}

/// An error the loop cannot retry past (protocol-level).
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot spawn generator {command:?}: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("generator command is empty")]
    EmptyCommand,
    #[error("max_retries must be at least 1")]
    ZeroRetries,
    #[error("benchmark needs n >= max(ks): n={n}, k={k}")]
    BadK { n: u64, k: u64 },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub enum GenerateOutcome {
    Response(GenerateResponse),
    Failed(GeneratorFailure),
}

pub trait Generator {
    fn generate(
        &mut self,
        request: &GenerateRequest,
        timeout: Duration,
    ) -> Result<GenerateOutcome, HarnessError>;
}

/// One generator subprocess per attempt; state never leaks between attempts.
pub struct SubprocessGenerator {
    pub command: Vec<String>,
}

impl SubprocessGenerator {
    pub fn new(command: Vec<String>) -> Self {
        SubprocessGenerator { command }
    }

    /// Splits a command line on whitespace (no shell quoting).
    pub fn from_command_line(line: &str) -> Self {
        SubprocessGenerator {
            command: line.split_whitespace().map(str::to_string).collect(),
        }
    }
}

impl Generator for SubprocessGenerator {
    fn generate(
        &mut self,
        request: &GenerateRequest,
        timeout: Duration,
    ) -> Result<GenerateOutcome, HarnessError> {
        if self.command.is_empty() {
            return Err(HarnessError::EmptyCommand);
        }
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| HarnessError::Spawn {
                command: self.command.join(" "),
                source,
            })?;
        let input = serde_json::to_vec(request).expect("request serializes");
        let mut stdin = child.stdin.take().expect("stdin piped");
        let mut stdout = child.stdout.take().expect("stdout piped");
        // writer and reader threads keep both pipes drained
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(&input);
        });
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let deadline = Instant::now() + timeout;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) => {
                    if Instant::now() >= deadline {
                        let _ = child.kill();
                        let _ = child.wait();
                        // leave the pipe threads detached: a grandchild may
                        // still hold the write end open
                        drop(writer);
                        drop(reader);
                        return Ok(GenerateOutcome::Failed(GeneratorFailure::Timeout {
                            after: timeout,
                        }));
                    }
                    std::thread::sleep(Duration::from_millis(2));
                }
                Err(e) => {
                    let _ = child.kill();
                    let _ = child.wait();
                    drop(writer);
                    drop(reader);
                    return Ok(GenerateOutcome::Failed(GeneratorFailure::Crash {
                        detail: format!("wait failed: {e}"),
                    }));
                }
            }
        };
        let _ = writer.join();
        let output = reader.join().unwrap_or_default();
        if !status.success() {
            return Ok(GenerateOutcome::Failed(GeneratorFailure::Crash {
                detail: format!("exit status {status}"),
            }));
        }
        match serde_json::from_slice::<GenerateResponse>(&output) {
            Ok(response) => Ok(GenerateOutcome::Response(response)),
            Err(e) => Ok(GenerateOutcome::Failed(GeneratorFailure::BadOutput {
                detail: format!("response is not a generator document: {e}"),
            })),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttemptRecord {
    pub round: u32,
    pub circuit: Option<Circuit>,
    pub violations: Vec<Violation>,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub task_id: u32,
    pub seed: u64,
    pub success: bool,
    pub attempts: Vec<AttemptRecord>,
    pub first_fail_phase: Option<Phase>,
    pub total_tokens: u64,
}

impl TrialResult {
    /// JSON form with circuits embedded as canonical documents, suitable for
    /// JSONL storage and exact recomputation.
    pub fn to_json_value(&self) -> Value {
        let attempts: Vec<Value> = self
            .attempts
            .iter()
            .map(|a| {
                let circuit = a.circuit.as_ref().map(|c| {
                    serde_json::from_slice::<Value>(&serialize_circuit(c)).expect("canonical json")
                });
                serde_json::json!({
                    "round": a.round,
                    "circuit": circuit,
                    "violations": a.violations,
                    "tokens_in": a.tokens_in,
                    "tokens_out": a.tokens_out,
                })
            })
            .collect();
        serde_json::json!({
            "task_id": self.task_id,
            "seed": self.seed,
            "success": self.success,
            "attempts": attempts,
            "first_fail_phase": self.first_fail_phase,
            "total_tokens": self.total_tokens,
        })
    }

    /// Inverse of [`TrialResult::to_json_value`]; lets reports be recomputed
    /// from stored JSONL trials.
    pub fn from_json_value(value: &Value) -> Option<TrialResult> {
        let attempts = value["attempts"]
            .as_array()?
            .iter()
            .map(|a| {
                let circuit = match &a["circuit"] {
                    Value::Null => None,
                    doc => parse_circuit(doc.to_string().as_bytes()).ok(),
                };
                Some(AttemptRecord {
                    round: a["round"].as_u64()? as u32,
                    circuit,
                    violations: serde_json::from_value(a["violations"].clone()).ok()?,
                    tokens_in: a["tokens_in"].as_u64()?,
                    tokens_out: a["tokens_out"].as_u64()?,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(TrialResult {
            task_id: value["task_id"].as_u64()? as u32,
            seed: value["seed"].as_u64()?,
            success: value["success"].as_bool()?,
            attempts,
            first_fail_phase: serde_json::from_value(value["first_fail_phase"].clone()).ok()?,
            total_tokens: value["total_tokens"].as_u64()?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrialOptions {
    pub max_retries: u32,
    pub timeout: Duration,
    pub seed: u64,
    pub feedback_level: FeedbackLevel,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions {
            max_retries: 3,
            timeout: Duration::from_secs(120),
            seed: 0,
            feedback_level: FeedbackLevel::Full,
        }
    }
}

/// Runs one trial: round 1 sends the task prompt; each later round appends
/// the prior circuit and feedback to the history. Stops at the first success
/// or after `max_retries` attempts; the timeout is a deadline for the whole
/// trial.
pub fn run_trial(
    task: &TaskSpec,
    kg: &KnowledgeGraph,
    template: &SystemTemplate,
    generator: &mut dyn Generator,
    options: &TrialOptions,
) -> Result<TrialResult, HarnessError> {
    if options.max_retries == 0 {
        return Err(HarnessError::ZeroRetries);
    }
    let deadline = Instant::now() + options.timeout;
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut attempts: Vec<AttemptRecord> = Vec::new();
    let mut success = false;
    for round in 1..=options.max_retries {
        let request = GenerateRequest {
            task_prompt: task.prompt_payload.clone(),
            history: history.clone(),
            task_id: task.id,
            round,
            seed: options.seed,
        };
        let remaining = deadline.saturating_duration_since(Instant::now());
        let timed_out_already = remaining.is_zero();
        let outcome = if timed_out_already {
            GenerateOutcome::Failed(GeneratorFailure::Timeout {
                after: options.timeout,
            })
        } else {
            generator.generate(&request, remaining)?
        };
        let (circuit_value, circuit, violations, tokens_in, tokens_out) = match outcome {
            GenerateOutcome::Failed(failure) => {
                let violation = ViolationKind::GeneratorFailure {
                    kind: failure.kind().to_string(),
                    detail: failure.detail(),
                }
                .into_violation();
                (None, None, vec![violation], 0, 0)
            }
            GenerateOutcome::Response(response) => {
                let bytes = serde_json::to_vec(&response.circuit).expect("value serializes");
                match parse_circuit(&bytes) {
                    Ok(circuit) => {
                        let (_, violations) = verify(&circuit, kg, template);
                        (
                            Some(response.circuit),
                            Some(circuit),
                            violations,
                            response.tokens_in,
                            response.tokens_out,
                        )
                    }
                    Err(e) => {
                        let violation = ViolationKind::ParseFailure {
                            detail: e.to_string(),
                        }
                        .into_violation();
                        (
                            Some(response.circuit),
                            None,
                            vec![violation],
                            response.tokens_in,
                            response.tokens_out,
                        )
                    }
                }
            }
        };
        let ok = violations.is_empty();
        let feedback = render(&violations, options.feedback_level);
        attempts.push(AttemptRecord {
            round,
            circuit,
            violations,
            tokens_in,
            tokens_out,
        });
        if ok {
            success = true;
            break;
        }
        history.push(HistoryEntry {
            circuit: circuit_value,
            feedback: feedback.text,
        });
        if timed_out_already {
            break;
        }
    }
    let first_fail_phase = if success {
        None
    } else {
        attempts.last().and_then(|a| earliest_phase(&a.violations))
    };
    let total_tokens = attempts.iter().map(|a| a.tokens_in + a.tokens_out).sum();
    Ok(TrialResult {
        task_id: task.id,
        seed: options.seed,
        success,
        attempts,
        first_fail_phase,
        total_tokens,
    })
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub trials: u64,
    pub ks: Vec<u64>,
    pub max_retries: u32,
    pub timeout: Duration,
    pub jobs: usize,
    pub z: f64,
    /// Overrides every task's declared feedback level when set.
    pub feedback_override: Option<FeedbackLevel>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            trials: 15,
            ks: vec![1, 5],
            max_retries: 3,
            timeout: Duration::from_secs(120),
            jobs: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            z: 1.645,
            feedback_override: None,
        }
    }
}

/// One runnable task: spec plus its parsed KG and template.
pub struct BenchTask {
    pub spec: TaskSpec,
    pub kg: KnowledgeGraph,
    pub template: SystemTemplate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskReport {
    pub task_id: u32,
    pub name: String,
    pub difficulty: Difficulty,
    pub n: u64,
    pub c: u64,
    pub pass_at_k: BTreeMap<u64, f64>,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundCurvePoint {
    pub round: u32,
    /// Trials that first succeeded at this round.
    pub successes: u64,
    /// Tokens consumed through this round, summed over all trials.
    pub cumulative_tokens: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub tasks: Vec<TaskReport>,
    pub overall_pass_at_1: f64,
    pub solved: u64,
    pub phase_histograms: BTreeMap<Difficulty, BTreeMap<Phase, u32>>,
    pub round_curve: Vec<RoundCurvePoint>,
}

/// Runs `options.trials` independent trials per task on a bounded worker
/// pool. Individual trial failures never abort the run; harness errors do.
pub fn run_benchmark(
    tasks: &[BenchTask],
    generator_command: &[String],
    options: &BenchOptions,
) -> Result<(BenchReport, Vec<TrialResult>), HarnessError> {
    if let Some(&k) = options.ks.iter().max() {
        if k > options.trials {
            return Err(HarnessError::BadK {
                n: options.trials,
                k,
            });
        }
    }
    let jobs = options.jobs.max(1);
    let mut work: Vec<(usize, u64)> = Vec::new();
    for (task_idx, _) in tasks.iter().enumerate() {
        for trial in 0..options.trials {
            work.push((task_idx, trial));
        }
    }
    let queue = Mutex::new(work.into_iter());
    let results: Mutex<Vec<TrialResult>> = Mutex::new(Vec::new());
    let failure: Mutex<Option<HarnessError>> = Mutex::new(None);
    let abort = AtomicBool::new(false);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                if abort.load(Ordering::Relaxed) {
                    return;
                }
                let item = queue.lock().expect("queue lock").next();
                let Some((task_idx, trial)) = item else {
                    return;
                };
                let task = &tasks[task_idx];
                let trial_options = TrialOptions {
                    max_retries: options.max_retries,
                    timeout: options.timeout,
                    seed: trial,
                    feedback_level: options
                        .feedback_override
                        .unwrap_or(task.spec.feedback_level),
                };
                let mut generator = SubprocessGenerator::new(generator_command.to_vec());
                match run_trial(
                    &task.spec,
                    &task.kg,
                    &task.template,
                    &mut generator,
                    &trial_options,
                ) {
                    Ok(result) => results.lock().expect("results lock").push(result),
                    Err(e) => {
                        abort.store(true, Ordering::Relaxed);
                        let mut slot = failure.lock().expect("failure lock");
                        if slot.is_none() {
                            *slot = Some(e);
                        }
                        return;
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("failure lock") {
        return Err(e);
    }
    let mut trials = results.into_inner().expect("results lock");
    trials.sort_by_key(|t| (t.task_id, t.seed));
    let report = assemble_report(tasks, &trials, options)?;
    Ok((report, trials))
}

/// Builds a report from raw trials; reports are exactly recomputable from
/// serialized TrialResults.
pub fn assemble_report(
    tasks: &[BenchTask],
    trials: &[TrialResult],
    options: &BenchOptions,
) -> Result<BenchReport, HarnessError> {
    let mut task_reports = Vec::new();
    let mut phase_histograms: BTreeMap<Difficulty, BTreeMap<Phase, u32>> = BTreeMap::new();
    let mut pass1_sum = 0.0;
    let mut solved = 0u64;
    for task in tasks {
        let task_trials: Vec<&TrialResult> = trials
            .iter()
            .filter(|t| t.task_id == task.spec.id)
            .collect();
        let n = task_trials.len() as u64;
        let c = task_trials.iter().filter(|t| t.success).count() as u64;
        let mut pass = BTreeMap::new();
        for &k in &options.ks {
            pass.insert(k, pass_at_k(n, c, k)?);
        }
        let p1 = pass_at_k(n, c, 1)?;
        pass1_sum += p1;
        if c >= 1 {
            solved += 1;
        }
        let (wilson_low, wilson_high) = wilson_interval(c as f64 / n as f64, n, options.z)?;
        for trial in &task_trials {
            if trial.success {
                continue;
            }
            if let Some(last) = trial.attempts.last() {
                let histogram = classify_phases(&last.violations);
                let slot = phase_histograms.entry(task.spec.difficulty).or_default();
                for (phase, count) in histogram {
                    *slot.entry(phase).or_insert(0) += count;
                }
            }
        }
        task_reports.push(TaskReport {
            task_id: task.spec.id,
            name: task.spec.name.clone(),
            difficulty: task.spec.difficulty,
            n,
            c,
            pass_at_k: pass,
            wilson_low,
            wilson_high,
        });
    }
    let max_round = options.max_retries;
    let mut round_curve = Vec::new();
    for round in 1..=max_round {
        let successes = trials
            .iter()
            .filter(|t| t.success && t.attempts.last().map(|a| a.round) == Some(round))
            .count() as u64;
        let cumulative_tokens: u64 = trials
            .iter()
            .flat_map(|t| &t.attempts)
            .filter(|a| a.round <= round)
            .map(|a| a.tokens_in + a.tokens_out)
            .sum();
        round_curve.push(RoundCurvePoint {
            round,
            successes,
            cumulative_tokens,
        });
    }
    let overall = if task_reports.is_empty() {
        0.0
    } else {
        (pass1_sum / task_reports.len() as f64 * 10.0).round() / 10.0
    };
    Ok(BenchReport {
        tasks: task_reports,
        overall_pass_at_1: overall,
        solved,
        phase_histograms,
        round_curve,
    })
}

impl BenchReport {
    /// Fixed-width table: one row per task, Pass@k columns, then the
    /// solved-count and overall Pass@1 summary rows.
    pub fn text_table(&self) -> String {
        let ks: Vec<u64> = self
            .tasks
            .first()
            .map(|t| t.pass_at_k.keys().copied().collect())
            .unwrap_or_default();
        let mut out = String::new();
        out.push_str(&format!("{:<8}", "Task"));
        for k in &ks {
            out.push_str(&format!("{:>10}", format!("Pass@{k}")));
        }
        out.push('\n');
        for task in &self.tasks {
            out.push_str(&format!("{:<8}", task.task_id));
            for k in &ks {
                out.push_str(&format!("{:>10.1}", task.pass_at_k[k]));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:<20}{}\n", "# Solved", self.solved));
        out.push_str(&format!(
            "{:<20}{:.1}\n",
            "Overall Pass@1 (%)", self.overall_pass_at_1
        ));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::parse_kg;
    use crate::topology::parse_template;

    // In-process scripted generator for loop-semantics tests.
    struct Scripted {
        responses: Vec<Value>,
    }

    impl Generator for Scripted {
        fn generate(
            &mut self,
            request: &GenerateRequest,
            _timeout: Duration,
        ) -> Result<GenerateOutcome, HarnessError> {
            let idx = (request.round as usize - 1).min(self.responses.len() - 1);
            Ok(GenerateOutcome::Response(GenerateResponse {
                circuit: self.responses[idx].clone(),
                tokens_in: 10,
                tokens_out: 20,
            }))
        }
    }

    fn kg() -> KnowledgeGraph {
        parse_kg(
            br#"{"parts": {"R": {"pins": [
              {"number": 1, "name": "1", "role": "passive_terminal"},
              {"number": 2, "name": "2", "role": "passive_terminal"}]}}}"#,
        )
        .unwrap()
    }

    fn template() -> SystemTemplate {
        parse_template(br#"{"name": "trivial", "ports": {}}"#).unwrap()
    }

    fn task() -> TaskSpec {
        TaskSpec {
            id: 1,
            name: "trivial".into(),
            difficulty: Difficulty::Easy,
            prompt_payload: "wire a resistor".into(),
            kg_path: String::new(),
            template_path: String::new(),
            feedback_level: FeedbackLevel::Full,
            known_unsatisfied: false,
            golden: None,
            mutations: vec![],
        }
    }

    fn good_circuit() -> Value {
        serde_json::json!({
            "components": [{"ref": "R1", "part_type": "R",
                "pins": [{"number": 1, "name": "1"}, {"number": 2, "name": "2"}]}],
            "nets": [{"name": "A", "endpoints": [["R1", 1], ["R1", 2]]}],
            "metadata": {}
        })
    }

    #[test]
    fn immediate_success_is_one_attempt() {
        let mut generator = Scripted {
            responses: vec![good_circuit()],
        };
        let result = run_trial(
            &task(),
            &kg(),
            &template(),
            &mut generator,
            &TrialOptions::default(),
        )
        .unwrap();
        assert!(result.success);
        assert_eq!(result.attempts.len(), 1);
        assert_eq!(result.total_tokens, 30);
        assert_eq!(result.first_fail_phase, None);
    }

    #[test]
    fn invalid_document_fails_after_cap() {
        let mut generator = Scripted {
            responses: vec![serde_json::json!({"bogus": true})],
        };
        let result = run_trial(
            &task(),
            &kg(),
            &template(),
            &mut generator,
            &TrialOptions::default(),
        )
        .unwrap();
        assert!(!result.success);
        assert_eq!(result.attempts.len(), 3);
        assert_eq!(result.first_fail_phase, Some(Phase::SyntaxErc));
        assert!(result.attempts.iter().all(|a| a.circuit.is_none()));
        assert_eq!(
            result.total_tokens,
            result
                .attempts
                .iter()
                .map(|a| a.tokens_in + a.tokens_out)
                .sum::<u64>()
        );
    }

    #[test]
    fn second_round_repair_succeeds() {
        let broken = serde_json::json!({
            "components": [{"ref": "R1", "part_type": "R",
                "pins": [{"number": 1, "name": "1"}, {"number": 2, "name": "2"}]}],
            "nets": [{"name": "A", "endpoints": [["R1", 1]]}],
            "metadata": {}
        });
        let mut generator = Scripted {
            responses: vec![broken, good_circuit()],
        };
        let result = run_trial(
            &task(),
            &kg(),
            &template(),
            &mut generator,
            &TrialOptions::default(),
        )
        .unwrap();
        assert!(result.success);
        assert_eq!(result.attempts.len(), 2);
    }

    #[test]
    fn subprocess_failure_paths() {
        let request = GenerateRequest {
            task_prompt: "x".into(),
            history: vec![],
            task_id: 1,
            round: 1,
            seed: 0,
        };
        // spawn failure is a harness error, not a failed attempt
        let mut missing = SubprocessGenerator::from_command_line("/nonexistent/generator");
        assert!(matches!(
            missing.generate(&request, Duration::from_secs(5)),
            Err(HarnessError::Spawn { .. })
        ));
        // nonzero exit
        let mut crashing =
            SubprocessGenerator::new(vec!["sh".into(), "-c".into(), "exit 3".into()]);
        assert!(matches!(
            crashing.generate(&request, Duration::from_secs(5)),
            Ok(GenerateOutcome::Failed(GeneratorFailure::Crash { .. }))
        ));
        // unparseable stdout
        let mut garbled = SubprocessGenerator::new(vec![
            "sh".into(),
            "-c".into(),
            "cat > /dev/null; echo not json".into(),
        ]);
        assert!(matches!(
            garbled.generate(&request, Duration::from_secs(5)),
            Ok(GenerateOutcome::Failed(GeneratorFailure::BadOutput { .. }))
        ));
        // deadline exceeded
        let mut slow = SubprocessGenerator::new(vec!["sh".into(), "-c".into(), "sleep 5".into()]);
        let start = Instant::now();
        assert!(matches!(
            slow.generate(&request, Duration::from_millis(100)),
            Ok(GenerateOutcome::Failed(GeneratorFailure::Timeout { .. }))
        ));
        assert!(start.elapsed() < Duration::from_secs(2));
    }

    #[test]
    fn trial_results_roundtrip_through_json() {
        let broken = serde_json::json!({
            "components": [{"ref": "R1", "part_type": "R",
                "pins": [{"number": 1, "name": "1"}, {"number": 2, "name": "2"}]}],
            "nets": [{"name": "A", "endpoints": [["R1", 1]]}],
            "metadata": {}
        });
        let mut generator = Scripted {
            responses: vec![broken, good_circuit()],
        };
        let result = run_trial(
            &task(),
            &kg(),
            &template(),
            &mut generator,
            &TrialOptions::default(),
        )
        .unwrap();
        let value = result.to_json_value();
        let parsed = TrialResult::from_json_value(&value).unwrap();
        assert_eq!(parsed.task_id, result.task_id);
        assert_eq!(parsed.success, result.success);
        assert_eq!(parsed.attempts.len(), result.attempts.len());
        assert_eq!(parsed.total_tokens, result.total_tokens);
        for (a, b) in parsed.attempts.iter().zip(&result.attempts) {
            assert_eq!(a.circuit, b.circuit);
            assert_eq!(a.violations, b.violations);
        }
    }

    #[test]
    fn report_recomputable_from_trials() {
        let tasks = vec![BenchTask {
            spec: task(),
            kg: kg(),
            template: template(),
        }];
        let trials: Vec<TrialResult> = (0..4u64)
            .map(|seed| TrialResult {
                task_id: 1,
                seed,
                success: seed % 2 == 0,
                attempts: vec![],
                first_fail_phase: None,
                total_tokens: 0,
            })
            .collect();
        let options = BenchOptions {
            trials: 4,
            ks: vec![1, 2],
            ..Default::default()
        };
        let report = assemble_report(&tasks, &trials, &options).unwrap();
        assert_eq!(report.tasks[0].c, 2);
        assert_eq!(report.tasks[0].pass_at_k[&1], 50.0);
        assert_eq!(report.solved, 1);
        let again = assemble_report(&tasks, &trials, &options).unwrap();
        assert_eq!(report.to_json(), again.to_json());
    }
}
