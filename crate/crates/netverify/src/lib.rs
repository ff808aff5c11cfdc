//! Verification engine and benchmark harness for PCB schematic netlists.
//!
//! A circuit is modeled as a bipartite component–net graph. Verification runs
//! in four phases: structural ERC, per-part knowledge-graph constraints,
//! pairwise topology rules over a reduced net-role graph, and system-level
//! skeleton matching by subgraph monomorphism plus semantic constraints.
//! Violations render into graded feedback messages for a generate–verify
//! repair loop, and the harness scores pluggable generators with Pass@k
//! statistics.

pub mod bundle;
pub mod circuit;
pub mod erc;
pub mod feedback;
pub mod harness;
pub mod kg;
pub mod stats;
pub mod topology;
pub mod violation;

pub use circuit::{BipartiteGraph, Circuit, CircuitError, Component, Net, PinId};
pub use erc::{check_erc, check_intra, eval_constraint, run_phase12};
pub use feedback::{classify_phases, render, FeedbackLevel, FeedbackMessage, VerifyReport};
pub use kg::{ConstraintDecl, ConstraintKind, KgError, KnowledgeGraph, PartEntry, PinRole};
pub use topology::{
    build_topology_graph, eval_rule, infer_primitives, parse_template, resolve_endpoints,
    subgraph_match, verify, Endpoint, MatchResult, PairRule, Primitive, PrimitiveKind, RoleGraph,
    RuleKind, SystemTemplate,
};
pub use violation::{Phase, Violation};
