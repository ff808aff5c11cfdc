//! Shipped benchmark bundles: task specs, templates, golden reference
//! netlists, and declared mutation fixtures.
//!
//! On-disk layout under a tasks root:
//! `tasks/<id>/task.json`, `tasks/<id>/template.json`,
//! `tasks/<id>/golden.circuit.json`, `tasks/<id>/mutations/*.circuit.json`,
//! with the shared knowledge graph referenced by relative path
//! (`kg/kg_components.json` beside the tasks directory).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{parse_circuit, Circuit, CircuitError};
use crate::feedback::FeedbackLevel;
use crate::kg::{parse_kg, KgError, KnowledgeGraph};
use crate::topology::{parse_template, verify, SystemTemplate, TemplateError};
use crate::violation::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    /// Table partition: tasks 1-6 Easy, 7-16 Medium, 17-23 Hard.
    pub fn for_task(id: u32) -> Option<Difficulty> {
        match id {
            1..=6 => Some(Difficulty::Easy),
            7..=16 => Some(Difficulty::Medium),
            17..=23 => Some(Difficulty::Hard),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "Easy",
            Difficulty::Medium => "Medium",
            Difficulty::Hard => "Hard",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: u32,
    pub name: String,
    pub difficulty: Difficulty,
    pub prompt_payload: String,
    pub kg_path: String,
    pub template_path: String,
    pub feedback_level: FeedbackLevel,
    #[serde(default)]
    pub known_unsatisfied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub golden: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mutations: Vec<MutationDecl>,
}

/// A declared single-edit corruption of the golden with its expected
/// earliest failure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MutationDecl {
    pub name: String,
    pub description: String,
    pub expected_code: String,
    pub expected_phase: u8,
}

impl MutationDecl {
    pub fn phase(&self) -> Option<Phase> {
        match self.expected_phase {
            1 => Some(Phase::SyntaxErc),
            2 => Some(Phase::KgConstraint),
            3 => Some(Phase::Topology),
            4 => Some(Phase::SystemTopology),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub struct TaskBundle {
    pub spec: TaskSpec,
    pub kg: KnowledgeGraph,
    pub template: SystemTemplate,
    pub golden: Option<Circuit>,
    pub dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("unknown task id {id}")]
    UnknownId { id: u32 },
    #[error("task {id}: {path}: {source}")]
    Io {
        id: u32,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("task {id}: malformed task.json: {message}")]
    TaskJson { id: u32, message: String },
    #[error("task {id}: task.json declares id {declared}")]
    IdMismatch { id: u32, declared: u32 },
    #[error("task {id}: difficulty {declared:?} does not match the benchmark partition")]
    DifficultyMismatch { id: u32, declared: Difficulty },
    #[error("task {id}: knowledge graph: {source}")]
    Kg { id: u32, source: KgError },
    #[error("task {id}: template: {source}")]
    Template { id: u32, source: TemplateError },
    #[error("task {id}: circuit {path}: {source}")]
    Circuit {
        id: u32,
        path: PathBuf,
        source: CircuitError,
    },
    #[error("task {id}: golden netlist fails verification: {details}")]
    GoldenFailsVerification { id: u32, details: String },
    #[error("task {id}: mutation {name:?} declares invalid phase {phase}")]
    BadMutationPhase { id: u32, name: String, phase: u8 },
}

fn read(id: u32, path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io {
        id,
        path: path.to_path_buf(),
        source,
    })
}

/// Task ids present under the tasks root, sorted.
pub fn list_task_ids(tasks_dir: &Path) -> Vec<u32> {
    let mut ids: Vec<u32> = fs::read_dir(tasks_dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .filter_map(|e| e.file_name().to_str().and_then(|s| s.parse().ok()))
                .collect()
        })
        .unwrap_or_default();
    ids.sort_unstable();
    ids
}

/// Loads one bundle, validating the task spec and, when a golden netlist is
/// shipped, that it verifies clean against the bundle's template and KG.
pub fn load_bundle(tasks_dir: &Path, id: u32) -> Result<TaskBundle, DataError> {
    let dir = tasks_dir.join(id.to_string());
    if !dir.is_dir() {
        return Err(DataError::UnknownId { id });
    }
    let spec_bytes = read(id, &dir.join("task.json"))?;
    let spec: TaskSpec = serde_json::from_slice(&spec_bytes).map_err(|e| DataError::TaskJson {
        id,
        message: e.to_string(),
    })?;
    if spec.id != id {
        return Err(DataError::IdMismatch {
            id,
            declared: spec.id,
        });
    }
    if Difficulty::for_task(id) != Some(spec.difficulty) {
        return Err(DataError::DifficultyMismatch {
            id,
            declared: spec.difficulty,
        });
    }
    for m in &spec.mutations {
        if m.phase().is_none() {
            return Err(DataError::BadMutationPhase {
                id,
                name: m.name.clone(),
                phase: m.expected_phase,
            });
        }
    }
    let kg_bytes = read(id, &dir.join(&spec.kg_path))?;
    let kg = parse_kg(&kg_bytes).map_err(|source| DataError::Kg { id, source })?;
    let template_bytes = read(id, &dir.join(&spec.template_path))?;
    let template =
        parse_template(&template_bytes).map_err(|source| DataError::Template { id, source })?;
    let golden = match &spec.golden {
        Some(rel) => {
            let path = dir.join(rel);
            let bytes = read(id, &path)?;
            let circuit = parse_circuit(&bytes).map_err(|source| DataError::Circuit {
                id,
                path: path.clone(),
                source,
            })?;
            let (ok, violations) = verify(&circuit, &kg, &template);
            if !ok {
                let details: Vec<String> = violations.iter().map(|v| v.message.clone()).collect();
                return Err(DataError::GoldenFailsVerification {
                    id,
                    details: details.join("; "),
                });
            }
            Some(circuit)
        }
        None => None,
    };
    Ok(TaskBundle {
        spec,
        kg,
        template,
        golden,
        dir,
    })
}

/// Loads the declared mutation circuits of a bundle, in declaration order.
pub fn mutation_corpus(bundle: &TaskBundle) -> Result<Vec<(MutationDecl, Circuit)>, DataError> {
    let id = bundle.spec.id;
    let mut corpus = Vec::with_capacity(bundle.spec.mutations.len());
    for decl in &bundle.spec.mutations {
        let path = bundle
            .dir
            .join("mutations")
            .join(format!("{}.circuit.json", decl.name));
        let bytes = read(id, &path)?;
        let circuit = parse_circuit(&bytes).map_err(|source| DataError::Circuit {
            id,
            path: path.clone(),
            source,
        })?;
        corpus.push((decl.clone(), circuit));
    }
    Ok(corpus)
}

/// Part types every shipped KG must cover (the benchmark component library).
pub const LIBRARY_PARTS: [&str; 19] = [
    "R",
    "C",
    "L",
    "D",
    "C_film",
    "Inductor_power",
    "TLV1117-33",
    "TPS54302",
    "OPA328",
    "AMC1350",
    "ACS37010",
    "UCC27211",
    "UCC27511",
    "UCC21710",
    "UCC5390E",
    "MGJ2D121505SC",
    "IMZA65R015M2H",
    "BSC052N08NS5",
    "transformer_PQ5050",
];

/// Checks the shared KG against the library coverage list.
pub fn missing_library_parts(kg: &KnowledgeGraph) -> Vec<&'static str> {
    let present: BTreeSet<&str> = kg.entries.keys().map(String::as_str).collect();
    LIBRARY_PARTS
        .iter()
        .filter(|p| !present.contains(**p))
        .copied()
        .collect()
}
