//! Phases 3–4: pairwise topology rules over the reduced net-role graph,
//! primitive inference, skeleton matching, and semantic constraints.

mod matcher;

pub use matcher::{
    subgraph_match, HostEdgeKind, HostGraph, HostVertex, MatchResult, Skeleton, SkeletonEdge,
    SkeletonEdgeType, SkeletonVertex, SkeletonVertexKind,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::erc::run_phase12;
use crate::kg::{KnowledgeGraph, PinRole};
use crate::violation::{Violation, ViolationKind};

/// A rule or port endpoint: a specific pin (`U1.+VOUT`), every net touching
/// a role (`role:secondary_vdd`), or a net by name (`net:VIN`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Pin { reference: String, pin_name: String },
    Role(PinRole),
    Net(String),
}

impl Endpoint {
    pub fn parse(s: &str) -> Result<Endpoint, TemplateError> {
        if let Some(role) = s.strip_prefix("role:") {
            return PinRole::parse(role).map(Endpoint::Role).ok_or_else(|| {
                TemplateError::BadEndpoint {
                    endpoint: s.to_string(),
                    reason: format!("unknown role {role:?}"),
                }
            });
        }
        if let Some(net) = s.strip_prefix("net:") {
            if net.is_empty() {
                return Err(TemplateError::BadEndpoint {
                    endpoint: s.to_string(),
                    reason: "empty net name".into(),
                });
            }
            return Ok(Endpoint::Net(net.to_string()));
        }
        if let Some((reference, pin_name)) = s.split_once('.') {
            if !reference.is_empty() && !pin_name.is_empty() {
                return Ok(Endpoint::Pin {
                    reference: reference.to_string(),
                    pin_name: pin_name.to_string(),
                });
            }
        }
        Err(TemplateError::BadEndpoint {
            endpoint: s.to_string(),
            reason: "expected role:<role>, net:<name>, or REF.PIN".into(),
        })
    }

    /// Rendering used in violation messages: roles and nets bare, pins as
    /// `REF.PIN`.
    pub fn render(&self) -> String {
        match self {
            Endpoint::Pin {
                reference,
                pin_name,
            } => format!("{reference}.{pin_name}"),
            Endpoint::Role(role) => role.as_str().to_string(),
            Endpoint::Net(name) => name.clone(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error("unknown component ref {reference}")]
    UnknownRef { reference: String },
    #[error("component {reference}: part type not in knowledge graph")]
    PartNotInKg { reference: String },
    #[error("component {reference}: no pin named {pin:?}")]
    UnknownPinName { reference: String, pin: String },
}

/// Resolves an endpoint to the set of net names it denotes. Floating pins,
/// role classes with no instances, and absent nets resolve to the empty set;
/// malformed references are errors, distinct from empty.
pub fn resolve_endpoints(
    endpoint: &Endpoint,
    circuit: &Circuit,
    kg: &KnowledgeGraph,
) -> Result<BTreeSet<String>, ResolveError> {
    match endpoint {
        Endpoint::Pin {
            reference,
            pin_name,
        } => {
            let comp = circuit
                .component(reference)
                .ok_or_else(|| ResolveError::UnknownRef {
                    reference: reference.clone(),
                })?;
            let entry = kg
                .entry(&comp.part_type)
                .ok_or_else(|| ResolveError::PartNotInKg {
                    reference: reference.clone(),
                })?;
            let pin = entry
                .pin_by_name(pin_name)
                .ok_or_else(|| ResolveError::UnknownPinName {
                    reference: reference.clone(),
                    pin: pin_name.clone(),
                })?;
            Ok(circuit
                .net_of(reference, pin.number)
                .ok()
                .flatten()
                .map(str::to_string)
                .into_iter()
                .collect())
        }
        Endpoint::Role(role) => {
            let mut nets = BTreeSet::new();
            for comp in &circuit.components {
                let Some(entry) = kg.entry(&comp.part_type) else {
                    continue;
                };
                for pin in &entry.pins {
                    if pin.role == *role {
                        if let Ok(Some(net)) = circuit.net_of(&comp.reference, pin.number) {
                            nets.insert(net.to_string());
                        }
                    }
                }
            }
            Ok(nets)
        }
        Endpoint::Net(name) => Ok(circuit
            .net(name)
            .map(|n| n.name.clone())
            .into_iter()
            .collect()),
    }
}

/// The closed pairwise rule vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum RuleKind {
    #[serde(rename = "C_DIRECT")]
    CDirect,
    #[serde(rename = "R_SERIES")]
    RSeries,
    #[serde(rename = "L_SERIES")]
    LSeries,
    #[serde(rename = "CONNECTED")]
    Connected,
    #[serde(rename = "DISTINCT")]
    Distinct,
    #[serde(rename = "DIODE_FORWARD")]
    DiodeForward,
}

impl RuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::CDirect => "C_DIRECT",
            RuleKind::RSeries => "R_SERIES",
            RuleKind::LSeries => "L_SERIES",
            RuleKind::Connected => "CONNECTED",
            RuleKind::Distinct => "DISTINCT",
            RuleKind::DiodeForward => "DIODE_FORWARD",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairRule {
    pub tau: RuleKind,
    pub a: Endpoint,
    pub b: Endpoint,
    pub min_count: u32,
}

/// Passive via kinds, classified from the part type's leading alphabetic
/// prefix (R/C/L-or-Inductor/D); diode orientation comes from KG roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PassiveKind {
    Resistor,
    Capacitor,
    Inductor,
    Diode,
}

pub fn classify_passive(part_type: &str) -> Option<PassiveKind> {
    let prefix: String = part_type
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect::<String>()
        .to_ascii_uppercase();
    match prefix.as_str() {
        "R" => Some(PassiveKind::Resistor),
        "C" => Some(PassiveKind::Capacitor),
        "L" | "INDUCTOR" => Some(PassiveKind::Inductor),
        "D" => Some(PassiveKind::Diode),
        _ => None,
    }
}

/// An edge of the reduced net-role graph: a two-terminal passive bridging
/// two distinct nets. For diodes, `net_a` is the anode side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViaEdge {
    pub reference: String,
    pub part_type: String,
    pub kind: PassiveKind,
    pub net_a: String,
    pub net_b: String,
}

impl ViaEdge {
    fn bridges(
        &self,
        nets_a: &BTreeSet<String>,
        nets_b: &BTreeSet<String>,
    ) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        if nets_a.contains(&self.net_a) && nets_b.contains(&self.net_b) {
            pairs.push((self.net_a.clone(), self.net_b.clone()));
        }
        if nets_a.contains(&self.net_b) && nets_b.contains(&self.net_a) {
            pairs.push((self.net_b.clone(), self.net_a.clone()));
        }
        pairs
    }
}

/// Reduced net-role graph: nets annotated with the role multiset of their
/// endpoints, plus via edges through the passive set. Two-terminal passives
/// with both pins on one net are flagged as self-loops rather than edges.
#[derive(Debug, Clone, Default)]
pub struct RoleGraph {
    pub net_roles: BTreeMap<String, BTreeMap<PinRole, u32>>,
    pub via_edges: Vec<ViaEdge>,
    pub self_loops: Vec<(String, String)>,
}

impl RoleGraph {
    pub fn net_has_role(&self, net: &str, role: PinRole) -> bool {
        self.net_roles
            .get(net)
            .map(|roles| roles.contains_key(&role))
            .unwrap_or(false)
    }
}

/// Builds the reduced net-role graph for a circuit under a passive set.
pub fn build_topology_graph(
    circuit: &Circuit,
    kg: &KnowledgeGraph,
    passives: &BTreeSet<String>,
) -> RoleGraph {
    let mut net_roles: BTreeMap<String, BTreeMap<PinRole, u32>> = circuit
        .nets
        .iter()
        .map(|n| (n.name.clone(), BTreeMap::new()))
        .collect();
    for net in &circuit.nets {
        for (reference, pin) in &net.endpoints {
            let Some(comp) = circuit.component(reference) else {
                continue;
            };
            let Some(entry) = kg.entry(&comp.part_type) else {
                continue;
            };
            if let Some(kg_pin) = entry.pin_by_number(*pin) {
                *net_roles
                    .get_mut(&net.name)
                    .expect("net exists")
                    .entry(kg_pin.role)
                    .or_insert(0) += 1;
            }
        }
    }
    let mut via_edges = Vec::new();
    let mut self_loops = Vec::new();
    for comp in &circuit.components {
        if !passives.contains(&comp.part_type) || comp.pins.len() != 2 {
            continue;
        }
        let Some(kind) = classify_passive(&comp.part_type) else {
            continue;
        };
        let first = comp.pins[0].number;
        let second = comp.pins[1].number;
        let net_1 = circuit.net_of(&comp.reference, first).ok().flatten();
        let net_2 = circuit.net_of(&comp.reference, second).ok().flatten();
        let (Some(net_1), Some(net_2)) = (net_1, net_2) else {
            continue;
        };
        if net_1 == net_2 {
            self_loops.push((comp.reference.clone(), net_1.to_string()));
            continue;
        }
        // orient diodes anode -> cathode via KG roles
        let (net_a, net_b) = if kind == PassiveKind::Diode {
            let anode_first = kg
                .entry(&comp.part_type)
                .and_then(|e| e.pin_by_number(first))
                .map(|p| p.role == PinRole::DiodeAnode)
                .unwrap_or(false);
            if anode_first {
                (net_1, net_2)
            } else {
                (net_2, net_1)
            }
        } else {
            (net_1, net_2)
        };
        via_edges.push(ViaEdge {
            reference: comp.reference.clone(),
            part_type: comp.part_type.clone(),
            kind,
            net_a: net_a.to_string(),
            net_b: net_b.to_string(),
        });
    }
    via_edges.sort_by(|a, b| a.reference.cmp(&b.reference));
    self_loops.sort();
    RoleGraph {
        net_roles,
        via_edges,
        self_loops,
    }
}

/// Evaluates one pairwise rule. Unresolvable or empty endpoints yield a
/// resolution violation; otherwise the rule's own semantics decide.
pub fn eval_rule(
    rule: &PairRule,
    graph: &RoleGraph,
    circuit: &Circuit,
    kg: &KnowledgeGraph,
) -> Option<Violation> {
    let render_a = rule.a.render();
    let render_b = rule.b.render();
    let unresolved = |detail: String| {
        Some(
            ViolationKind::RuleUnresolved {
                tau: rule.tau.as_str().to_string(),
                endpoint_a: render_a.clone(),
                endpoint_b: render_b.clone(),
                detail,
            }
            .into_violation(),
        )
    };
    let nets_a = match resolve_endpoints(&rule.a, circuit, kg) {
        Ok(nets) => nets,
        Err(e) => return unresolved(format!("invalid endpoint {render_a}: {e}")),
    };
    let nets_b = match resolve_endpoints(&rule.b, circuit, kg) {
        Ok(nets) => nets,
        Err(e) => return unresolved(format!("invalid endpoint {render_b}: {e}")),
    };
    if nets_a.is_empty() {
        return unresolved(format!("endpoint {render_a} resolves to no nets"));
    }
    if nets_b.is_empty() {
        return unresolved(format!("endpoint {render_b} resolves to no nets"));
    }
    let violated = |shared: bool, list_a: Vec<String>, list_b: Vec<String>| {
        Some(
            ViolationKind::RuleViolated {
                tau: rule.tau.as_str().to_string(),
                endpoint_a: render_a.clone(),
                endpoint_b: render_b.clone(),
                nets_a: list_a,
                nets_b: list_b,
                shared,
            }
            .into_violation(),
        )
    };
    match rule.tau {
        RuleKind::CDirect | RuleKind::RSeries | RuleKind::LSeries => {
            let kind = match rule.tau {
                RuleKind::CDirect => PassiveKind::Capacitor,
                RuleKind::RSeries => PassiveKind::Resistor,
                _ => PassiveKind::Inductor,
            };
            if max_parallel_vias(graph, kind, &nets_a, &nets_b) >= rule.min_count {
                None
            } else {
                violated(
                    false,
                    nets_a.into_iter().collect(),
                    nets_b.into_iter().collect(),
                )
            }
        }
        RuleKind::DiodeForward => {
            let mut per_pair: BTreeMap<(String, String), u32> = BTreeMap::new();
            for edge in &graph.via_edges {
                if edge.kind == PassiveKind::Diode
                    && nets_a.contains(&edge.net_a)
                    && nets_b.contains(&edge.net_b)
                {
                    *per_pair
                        .entry((edge.net_a.clone(), edge.net_b.clone()))
                        .or_insert(0) += 1;
                }
            }
            if per_pair.values().any(|&n| n >= rule.min_count) {
                None
            } else {
                violated(
                    false,
                    nets_a.into_iter().collect(),
                    nets_b.into_iter().collect(),
                )
            }
        }
        RuleKind::Connected => {
            if nets_a.intersection(&nets_b).next().is_some() {
                None
            } else {
                violated(
                    false,
                    nets_a.into_iter().collect(),
                    nets_b.into_iter().collect(),
                )
            }
        }
        RuleKind::Distinct => {
            let shared: Vec<String> = nets_a.intersection(&nets_b).cloned().collect();
            if shared.is_empty() {
                None
            } else {
                violated(true, shared, Vec::new())
            }
        }
    }
}

// Largest number of parallel `kind` vias across any single (net_a, net_b)
// pair; min_count asks for that many in one loop, not scattered.
fn max_parallel_vias(
    graph: &RoleGraph,
    kind: PassiveKind,
    nets_a: &BTreeSet<String>,
    nets_b: &BTreeSet<String>,
) -> u32 {
    let mut per_pair: BTreeMap<(String, String), u32> = BTreeMap::new();
    for edge in &graph.via_edges {
        if edge.kind != kind {
            continue;
        }
        for pair in edge.bridges(nets_a, nets_b) {
            *per_pair.entry(pair).or_insert(0) += 1;
        }
    }
    per_pair.values().copied().max().unwrap_or(0)
}

/// Functional building blocks inferred from role patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    HalfBridge,
    LcFilter,
    DecouplingCap,
    BootstrapCell,
    XfmrLink,
    GateDriveCell,
}

impl PrimitiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveKind::HalfBridge => "half_bridge",
            PrimitiveKind::LcFilter => "lc_filter",
            PrimitiveKind::DecouplingCap => "decoupling_cap",
            PrimitiveKind::BootstrapCell => "bootstrap_cell",
            PrimitiveKind::XfmrLink => "xfmr_link",
            PrimitiveKind::GateDriveCell => "gate_drive_cell",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub members: Vec<String>,
    pub anchor_nets: Vec<String>,
}

// Nets bound to `role` pins of one component.
fn role_nets(
    circuit: &Circuit,
    kg: &KnowledgeGraph,
    reference: &str,
    role: PinRole,
) -> BTreeSet<String> {
    let Some(comp) = circuit.component(reference) else {
        return BTreeSet::new();
    };
    let Some(entry) = kg.entry(&comp.part_type) else {
        return BTreeSet::new();
    };
    entry
        .pins
        .iter()
        .filter(|p| p.role == role)
        .filter_map(|p| {
            circuit
                .net_of(reference, p.number)
                .ok()
                .flatten()
                .map(str::to_string)
        })
        .collect()
}

/// Detects functional primitives by role patterns over the topology graph.
pub fn infer_primitives(
    graph: &RoleGraph,
    _ports: &BTreeMap<String, BTreeSet<String>>,
    circuit: &Circuit,
    kg: &KnowledgeGraph,
) -> BTreeSet<Primitive> {
    let mut primitives = BTreeSet::new();
    let mosfets: Vec<&str> = circuit
        .components
        .iter()
        .filter(|c| {
            kg.entry(&c.part_type)
                .map(|e| {
                    e.pins.iter().any(|p| p.role == PinRole::MosfetDrain)
                        && e.pins.iter().any(|p| p.role == PinRole::MosfetSource)
                })
                .unwrap_or(false)
        })
        .map(|c| c.reference.as_str())
        .collect();

    // half_bridge: high-side source and low-side drain share a switch net
    // that is distinct from both outer rails
    for &high in &mosfets {
        for &low in &mosfets {
            if high == low {
                continue;
            }
            let hi_source = role_nets(circuit, kg, high, PinRole::MosfetSource);
            let lo_drain = role_nets(circuit, kg, low, PinRole::MosfetDrain);
            let hi_drain = role_nets(circuit, kg, high, PinRole::MosfetDrain);
            let lo_source = role_nets(circuit, kg, low, PinRole::MosfetSource);
            for shared in hi_source.intersection(&lo_drain) {
                if !hi_drain.contains(shared) && !lo_source.contains(shared) {
                    primitives.insert(Primitive {
                        kind: PrimitiveKind::HalfBridge,
                        members: vec![high.to_string(), low.to_string()],
                        anchor_nets: vec![shared.clone()],
                    });
                }
            }
        }
    }
    let switch_anchors: BTreeSet<String> = primitives
        .iter()
        .filter(|p| p.kind == PrimitiveKind::HalfBridge)
        .flat_map(|p| p.anchor_nets.iter().cloned())
        .collect();

    for edge in &graph.via_edges {
        let roles_a = |pred: fn(PinRole) -> bool| {
            graph
                .net_roles
                .get(&edge.net_a)
                .map(|r| r.keys().any(|role| pred(*role)))
                .unwrap_or(false)
        };
        let roles_b = |pred: fn(PinRole) -> bool| {
            graph
                .net_roles
                .get(&edge.net_b)
                .map(|r| r.keys().any(|role| pred(*role)))
                .unwrap_or(false)
        };
        match edge.kind {
            PassiveKind::Capacitor => {
                // decoupling: *_vdd net to *_gnd net
                let forward = roles_a(PinRole::is_vdd_class) && roles_b(PinRole::is_gnd_class);
                let backward = roles_b(PinRole::is_vdd_class) && roles_a(PinRole::is_gnd_class);
                if forward || backward {
                    let (vdd, gnd) = if forward {
                        (edge.net_a.clone(), edge.net_b.clone())
                    } else {
                        (edge.net_b.clone(), edge.net_a.clone())
                    };
                    primitives.insert(Primitive {
                        kind: PrimitiveKind::DecouplingCap,
                        members: vec![edge.reference.clone()],
                        anchor_nets: vec![vdd, gnd],
                    });
                }
                // bootstrap: halfbridge_hb net to halfbridge_hs net
                let hb = |r: PinRole| r == PinRole::HalfbridgeHb;
                let hs = |r: PinRole| r == PinRole::HalfbridgeHs;
                if (roles_a(hb) && roles_b(hs)) || (roles_a(hs) && roles_b(hb)) {
                    primitives.insert(Primitive {
                        kind: PrimitiveKind::BootstrapCell,
                        members: vec![edge.reference.clone()],
                        anchor_nets: vec![edge.net_a.clone(), edge.net_b.clone()],
                    });
                }
            }
            PassiveKind::Resistor => {
                let drive = |r: PinRole| r == PinRole::GateHo || r == PinRole::GateLo;
                let gate = |r: PinRole| r == PinRole::MosfetGate;
                if (roles_a(drive) && roles_b(gate)) || (roles_a(gate) && roles_b(drive)) {
                    primitives.insert(Primitive {
                        kind: PrimitiveKind::GateDriveCell,
                        members: vec![edge.reference.clone()],
                        anchor_nets: vec![edge.net_a.clone(), edge.net_b.clone()],
                    });
                }
            }
            PassiveKind::Inductor => {
                // lc_filter: inductor from a switch node to a net with a
                // capacitor path to a gnd-class net
                for (sw, out) in [(&edge.net_a, &edge.net_b), (&edge.net_b, &edge.net_a)] {
                    if !switch_anchors.contains(sw) {
                        continue;
                    }
                    for cap in &graph.via_edges {
                        if cap.kind != PassiveKind::Capacitor {
                            continue;
                        }
                        let other = if &cap.net_a == out {
                            Some(&cap.net_b)
                        } else if &cap.net_b == out {
                            Some(&cap.net_a)
                        } else {
                            None
                        };
                        let Some(gnd) = other else { continue };
                        let gnd_class = graph
                            .net_roles
                            .get(gnd)
                            .map(|r| r.keys().any(|role| role.is_gnd_class()))
                            .unwrap_or(false);
                        if gnd_class {
                            primitives.insert(Primitive {
                                kind: PrimitiveKind::LcFilter,
                                members: vec![edge.reference.clone(), cap.reference.clone()],
                                anchor_nets: vec![sw.clone(), out.clone()],
                            });
                        }
                    }
                }
            }
            PassiveKind::Diode => {}
        }
    }

    // xfmr_link: primary-role and secondary-role windings on one component
    for comp in &circuit.components {
        let primary = role_nets(circuit, kg, &comp.reference, PinRole::XfmrPrimary);
        let secondary = role_nets(circuit, kg, &comp.reference, PinRole::XfmrSecondary);
        if !primary.is_empty() && !secondary.is_empty() {
            let mut anchors: Vec<String> = primary.into_iter().collect();
            anchors.extend(secondary);
            primitives.insert(Primitive {
                kind: PrimitiveKind::XfmrLink,
                members: vec![comp.reference.clone()],
                anchor_nets: anchors,
            });
        }
    }
    primitives
}

/// Semantic constraints: a small closed predicate vocabulary, so templates
/// stay data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemanticConstraint {
    PortReachesPortVia {
        port_a: String,
        port_b: String,
        via: Vec<SkeletonEdgeType>,
    },
    PrimitiveCountAtLeast {
        kind: PrimitiveKind,
        count: u32,
    },
    NetsInDistinctIsolation {
        port_a: String,
        port_b: String,
    },
}

impl SemanticConstraint {
    pub fn name(&self) -> String {
        match self {
            SemanticConstraint::PortReachesPortVia {
                port_a,
                port_b,
                via,
            } => {
                let kinds: Vec<&str> = via.iter().map(|k| k.as_str()).collect();
                format!(
                    "port_reaches_port_via({port_a}, {port_b}, [{}])",
                    kinds.join(", ")
                )
            }
            SemanticConstraint::PrimitiveCountAtLeast { kind, count } => {
                format!("primitive_count_at_least({}, {count})", kind.as_str())
            }
            SemanticConstraint::NetsInDistinctIsolation { port_a, port_b } => {
                format!("nets_in_distinct_isolation({port_a}, {port_b})")
            }
        }
    }
}

/// System template: ports, pairwise rules, reference skeleton, semantic
/// constraints, passive set, and search tolerance.
#[derive(Debug, Clone)]
pub struct SystemTemplate {
    pub name: String,
    pub ports: BTreeMap<String, Endpoint>,
    pub rules: Vec<PairRule>,
    pub skeleton: Skeleton,
    pub semantic_constraints: Vec<SemanticConstraint>,
    pub passive_set: BTreeSet<String>,
    pub budget: u64,
}

pub fn default_passive_set() -> BTreeSet<String> {
    ["R", "C", "L", "D", "C_film"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("malformed template document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("bad endpoint {endpoint:?}: {reason}")]
    BadEndpoint { endpoint: String, reason: String },
    #[error("unknown rule kind {tau:?}")]
    UnknownRuleKind { tau: String },
    #[error("DISTINCT rule endpoints must differ")]
    DistinctSameEndpoints,
    #[error("skeleton edge references unknown vertex {id:?}")]
    UnknownSkeletonVertex { id: String },
    #[error("duplicate skeleton vertex id {id:?}")]
    DuplicateSkeletonVertex { id: String },
    #[error("skeleton vertex {id:?} ({kind}) requires a bind")]
    MissingBind { id: String, kind: &'static str },
    #[error("skeleton vertex {id:?} binds unknown port {port:?}")]
    UnknownPortBind { id: String, port: String },
    #[error("skeleton vertex {id:?} binds unknown role {role:?}")]
    UnknownRoleBind { id: String, role: String },
    #[error("skeleton is not connected")]
    DisconnectedSkeleton,
    #[error("semantic constraint references unknown port {port:?}")]
    UnknownConstraintPort { port: String },
    #[error("unknown semantic constraint kind {kind:?}")]
    UnknownConstraintKind { kind: String },
    #[error("unknown primitive kind {kind:?}")]
    UnknownPrimitiveKind { kind: String },
    #[error("rule min_count must be at least 1")]
    ZeroMinCount,
}

#[derive(Debug, Deserialize)]
struct RawTemplate {
    name: String,
    #[serde(default)]
    ports: BTreeMap<String, String>,
    #[serde(default)]
    rules: Vec<RawRule>,
    #[serde(default)]
    skeleton: Skeleton,
    #[serde(default)]
    semantic_constraints: Vec<RawConstraint>,
    #[serde(default)]
    passive_set: Option<Vec<String>>,
    #[serde(default)]
    tolerance: Option<RawTolerance>,
}

#[derive(Debug, Deserialize)]
struct RawRule {
    tau: String,
    a: String,
    b: String,
    #[serde(default)]
    min_count: Option<u32>,
}

#[derive(Debug, Deserialize)]
struct RawConstraint {
    kind: String,
    #[serde(default)]
    ports: Vec<String>,
    #[serde(default)]
    via: Vec<SkeletonEdgeType>,
    #[serde(default)]
    primitive: Option<String>,
    #[serde(default)]
    count: Option<u32>,
}

#[derive(Debug, Deserialize)]
struct RawTolerance {
    budget: u64,
}

/// Parses and validates a template document.
pub fn parse_template(bytes: &[u8]) -> Result<SystemTemplate, TemplateError> {
    let raw: RawTemplate = serde_json::from_slice(bytes).map_err(|e| TemplateError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut ports = BTreeMap::new();
    for (name, endpoint) in raw.ports {
        ports.insert(name, Endpoint::parse(&endpoint)?);
    }
    let mut rules = Vec::with_capacity(raw.rules.len());
    for rule in raw.rules {
        let tau = match rule.tau.as_str() {
            "C_DIRECT" => RuleKind::CDirect,
            "R_SERIES" => RuleKind::RSeries,
            "L_SERIES" => RuleKind::LSeries,
            "CONNECTED" => RuleKind::Connected,
            "DISTINCT" => RuleKind::Distinct,
            "DIODE_FORWARD" => RuleKind::DiodeForward,
            _ => return Err(TemplateError::UnknownRuleKind { tau: rule.tau }),
        };
        let a = Endpoint::parse(&rule.a)?;
        let b = Endpoint::parse(&rule.b)?;
        if tau == RuleKind::Distinct && a == b {
            return Err(TemplateError::DistinctSameEndpoints);
        }
        let min_count = rule.min_count.unwrap_or(1);
        if min_count == 0 {
            return Err(TemplateError::ZeroMinCount);
        }
        rules.push(PairRule {
            tau,
            a,
            b,
            min_count,
        });
    }
    let mut seen_ids = BTreeSet::new();
    for vertex in &raw.skeleton.vertices {
        if !seen_ids.insert(vertex.id.clone()) {
            return Err(TemplateError::DuplicateSkeletonVertex {
                id: vertex.id.clone(),
            });
        }
        match vertex.kind {
            SkeletonVertexKind::Port => {
                let port = vertex.bind.as_deref().ok_or(TemplateError::MissingBind {
                    id: vertex.id.clone(),
                    kind: "port",
                })?;
                if !ports.contains_key(port) {
                    return Err(TemplateError::UnknownPortBind {
                        id: vertex.id.clone(),
                        port: port.to_string(),
                    });
                }
            }
            SkeletonVertexKind::RoleClass => {
                let role = vertex.bind.as_deref().ok_or(TemplateError::MissingBind {
                    id: vertex.id.clone(),
                    kind: "role_class",
                })?;
                if PinRole::parse(role).is_none() {
                    return Err(TemplateError::UnknownRoleBind {
                        id: vertex.id.clone(),
                        role: role.to_string(),
                    });
                }
            }
            SkeletonVertexKind::SwitchNode => {}
        }
    }
    for edge in &raw.skeleton.edges {
        for id in [&edge.a, &edge.b] {
            if raw.skeleton.vertex_index(id).is_none() {
                return Err(TemplateError::UnknownSkeletonVertex { id: id.clone() });
            }
        }
    }
    if !skeleton_connected(&raw.skeleton) {
        return Err(TemplateError::DisconnectedSkeleton);
    }
    let mut semantic_constraints = Vec::new();
    for constraint in raw.semantic_constraints {
        let parsed = match constraint.kind.as_str() {
            "port_reaches_port_via" => {
                let [a, b] = <[String; 2]>::try_from(constraint.ports.clone()).map_err(|_| {
                    TemplateError::UnknownConstraintPort {
                        port: constraint.ports.join(","),
                    }
                })?;
                SemanticConstraint::PortReachesPortVia {
                    port_a: a,
                    port_b: b,
                    via: constraint.via,
                }
            }
            "primitive_count_at_least" => {
                let kind = constraint
                    .primitive
                    .as_deref()
                    .and_then(parse_primitive_kind)
                    .ok_or_else(|| TemplateError::UnknownPrimitiveKind {
                        kind: constraint.primitive.clone().unwrap_or_default(),
                    })?;
                SemanticConstraint::PrimitiveCountAtLeast {
                    kind,
                    count: constraint.count.unwrap_or(1),
                }
            }
            "nets_in_distinct_isolation" => {
                let [a, b] = <[String; 2]>::try_from(constraint.ports.clone()).map_err(|_| {
                    TemplateError::UnknownConstraintPort {
                        port: constraint.ports.join(","),
                    }
                })?;
                SemanticConstraint::NetsInDistinctIsolation {
                    port_a: a,
                    port_b: b,
                }
            }
            _ => {
                return Err(TemplateError::UnknownConstraintKind {
                    kind: constraint.kind,
                })
            }
        };
        for port in constraint_ports(&parsed) {
            if !ports.contains_key(port) {
                return Err(TemplateError::UnknownConstraintPort {
                    port: port.to_string(),
                });
            }
        }
        semantic_constraints.push(parsed);
    }
    Ok(SystemTemplate {
        name: raw.name,
        ports,
        rules,
        skeleton: raw.skeleton,
        semantic_constraints,
        passive_set: raw
            .passive_set
            .map(|s| s.into_iter().collect())
            .unwrap_or_else(default_passive_set),
        budget: raw.tolerance.map(|t| t.budget).unwrap_or(1_000_000),
    })
}

fn parse_primitive_kind(s: &str) -> Option<PrimitiveKind> {
    match s {
        "half_bridge" => Some(PrimitiveKind::HalfBridge),
        "lc_filter" => Some(PrimitiveKind::LcFilter),
        "decoupling_cap" => Some(PrimitiveKind::DecouplingCap),
        "bootstrap_cell" => Some(PrimitiveKind::BootstrapCell),
        "xfmr_link" => Some(PrimitiveKind::XfmrLink),
        "gate_drive_cell" => Some(PrimitiveKind::GateDriveCell),
        _ => None,
    }
}

fn constraint_ports(constraint: &SemanticConstraint) -> Vec<&str> {
    match constraint {
        SemanticConstraint::PortReachesPortVia { port_a, port_b, .. }
        | SemanticConstraint::NetsInDistinctIsolation { port_a, port_b } => {
            vec![port_a, port_b]
        }
        SemanticConstraint::PrimitiveCountAtLeast { .. } => vec![],
    }
}

fn skeleton_connected(skeleton: &Skeleton) -> bool {
    if skeleton.vertices.len() <= 1 {
        return true;
    }
    let n = skeleton.vertices.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for edge in &skeleton.edges {
            let (Some(a), Some(b)) = (
                skeleton.vertex_index(&edge.a),
                skeleton.vertex_index(&edge.b),
            ) else {
                continue;
            };
            let other = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if !seen[other] {
                seen[other] = true;
                stack.push(other);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Builds the annotated host graph the skeleton embeds into: via edges plus
/// switch edges (mosfet drain-to-source) and winding edges (same-side
/// transformer net pairs), with switch anchors from half-bridge primitives.
pub fn build_host_graph(
    graph: &RoleGraph,
    primitives: &BTreeSet<Primitive>,
    circuit: &Circuit,
    kg: &KnowledgeGraph,
) -> HostGraph {
    let anchors: BTreeSet<&str> = primitives
        .iter()
        .filter(|p| p.kind == PrimitiveKind::HalfBridge)
        .flat_map(|p| p.anchor_nets.iter().map(String::as_str))
        .collect();
    let vertices = graph
        .net_roles
        .iter()
        .map(|(net, roles)| HostVertex {
            net: net.clone(),
            roles: roles.keys().copied().collect(),
            is_switch_anchor: anchors.contains(net.as_str()),
        })
        .collect();
    let mut host = HostGraph::new(vertices);
    for edge in &graph.via_edges {
        let kind = match edge.kind {
            PassiveKind::Resistor => HostEdgeKind::Resistor,
            PassiveKind::Capacitor => HostEdgeKind::Capacitor,
            PassiveKind::Inductor => HostEdgeKind::Inductor,
            PassiveKind::Diode => HostEdgeKind::Diode,
        };
        host.add_edge(&edge.net_a, &edge.net_b, kind);
    }
    for comp in &circuit.components {
        let drains = role_nets(circuit, kg, &comp.reference, PinRole::MosfetDrain);
        let sources = role_nets(circuit, kg, &comp.reference, PinRole::MosfetSource);
        for d in &drains {
            for s in &sources {
                if d != s {
                    host.add_edge(d, s, HostEdgeKind::Switch);
                }
            }
        }
        for side in [PinRole::XfmrPrimary, PinRole::XfmrSecondary] {
            let nets: Vec<String> = role_nets(circuit, kg, &comp.reference, side)
                .into_iter()
                .collect();
            for (i, a) in nets.iter().enumerate() {
                for b in nets.iter().skip(i + 1) {
                    host.add_edge(a, b, HostEdgeKind::Winding);
                }
            }
        }
    }
    host
}

// Galvanic clusters: nets joined by any component, where isolation-group
// components join only nets within one group. Ports on distinct clusters
// sit across an isolation barrier.
fn isolation_clusters(circuit: &Circuit, kg: &KnowledgeGraph) -> BTreeMap<String, usize> {
    let nets: Vec<&str> = circuit.nets.iter().map(|n| n.name.as_str()).collect();
    let index: BTreeMap<&str, usize> = nets.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut parent: Vec<usize> = (0..nets.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for comp in &circuit.components {
        let entry = kg.entry(&comp.part_type);
        let groups: Vec<Vec<u32>> = match entry.and_then(|e| e.isolation_groups.as_ref()) {
            Some(groups) => groups.values().cloned().collect(),
            None => vec![comp.pins.iter().map(|p| p.number).collect()],
        };
        for group in groups {
            let bound: Vec<usize> = group
                .iter()
                .filter_map(|pin| circuit.net_of(&comp.reference, *pin).ok().flatten())
                .filter_map(|net| index.get(net).copied())
                .collect();
            for w in bound.windows(2) {
                union(&mut parent, w[0], w[1]);
            }
        }
    }
    nets.iter()
        .enumerate()
        .map(|(i, n)| (n.to_string(), find(&mut parent, i)))
        .collect()
}

fn eval_semantic(
    constraint: &SemanticConstraint,
    host: &HostGraph,
    port_nets: &BTreeMap<String, BTreeSet<String>>,
    primitives: &BTreeSet<Primitive>,
    circuit: &Circuit,
    kg: &KnowledgeGraph,
) -> Option<Violation> {
    let fail = |detail: String| {
        Some(
            ViolationKind::SemanticViolated {
                name: constraint.name(),
                detail,
            }
            .into_violation(),
        )
    };
    match constraint {
        SemanticConstraint::PortReachesPortVia {
            port_a,
            port_b,
            via,
        } => {
            let (Some(from), Some(to)) = (port_nets.get(port_a), port_nets.get(port_b)) else {
                return fail("port unbound".into());
            };
            if from.is_empty() || to.is_empty() {
                return fail("port resolves to no net".into());
            }
            // BFS over host edges whose kinds satisfy any allowed type
            let mut seen: BTreeSet<usize> =
                from.iter().filter_map(|n| host.vertex_index(n)).collect();
            let mut queue: Vec<usize> = seen.iter().copied().collect();
            let targets: BTreeSet<usize> = to.iter().filter_map(|n| host.vertex_index(n)).collect();
            while let Some(v) = queue.pop() {
                for u in 0..host.vertices.len() {
                    if seen.contains(&u) {
                        continue;
                    }
                    if via.iter().any(|t| host.satisfies(v, u, *t)) {
                        seen.insert(u);
                        queue.push(u);
                    }
                }
            }
            if seen.intersection(&targets).next().is_some() {
                None
            } else {
                let kinds: Vec<&str> = via.iter().map(|k| k.as_str()).collect();
                fail(format!(
                    "no path from {port_a} to {port_b} via [{}]",
                    kinds.join(", ")
                ))
            }
        }
        SemanticConstraint::PrimitiveCountAtLeast { kind, count } => {
            let found = primitives.iter().filter(|p| p.kind == *kind).count() as u32;
            if found >= *count {
                None
            } else {
                fail(format!(
                    "expected at least {count} {}, found {found}",
                    kind.as_str()
                ))
            }
        }
        SemanticConstraint::NetsInDistinctIsolation { port_a, port_b } => {
            let (Some(a), Some(b)) = (port_nets.get(port_a), port_nets.get(port_b)) else {
                return fail("port unbound".into());
            };
            let clusters = isolation_clusters(circuit, kg);
            let cluster_of = |nets: &BTreeSet<String>| -> BTreeSet<usize> {
                nets.iter()
                    .filter_map(|n| clusters.get(n).copied())
                    .collect()
            };
            let (ca, cb) = (cluster_of(a), cluster_of(b));
            if ca.is_empty() || cb.is_empty() {
                return fail("port resolves to no net".into());
            }
            if ca.intersection(&cb).next().is_some() {
                fail(format!(
                    "ports {port_a} and {port_b} share an isolation domain"
                ))
            } else {
                None
            }
        }
    }
}

/// Full verification: Phase 1–2 fast-fail, then Phase 3 pairwise rules in
/// declaration order, then Phase 4 skeleton match and semantic constraints.
/// `ok` iff no violations.
pub fn verify(
    circuit: &Circuit,
    kg: &KnowledgeGraph,
    template: &SystemTemplate,
) -> (bool, Vec<Violation>) {
    let phase12 = run_phase12(circuit, kg);
    if !phase12.is_empty() {
        return (false, phase12);
    }
    let mut violations = Vec::new();
    let graph = build_topology_graph(circuit, kg, &template.passive_set);
    for rule in &template.rules {
        if let Some(v) = eval_rule(rule, &graph, circuit, kg) {
            violations.push(v);
        }
    }
    // resolve ports once for skeleton and semantics
    let mut port_nets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (name, endpoint) in &template.ports {
        let nets = resolve_endpoints(endpoint, circuit, kg).unwrap_or_default();
        port_nets.insert(name.clone(), nets);
    }
    let primitives = infer_primitives(&graph, &port_nets, circuit, kg);
    let host = build_host_graph(&graph, &primitives, circuit, kg);

    let skeleton_ports: BTreeSet<&str> = template
        .skeleton
        .vertices
        .iter()
        .filter(|v| v.kind == SkeletonVertexKind::Port)
        .filter_map(|v| v.bind.as_deref())
        .collect();
    let mut unbound = false;
    for port in &skeleton_ports {
        if port_nets.get(*port).map(|s| s.is_empty()).unwrap_or(true) {
            violations.push(
                ViolationKind::SkeletonPortUnbound {
                    port: port.to_string(),
                }
                .into_violation(),
            );
            unbound = true;
        }
    }
    if !unbound && !template.skeleton.vertices.is_empty() {
        let result = subgraph_match(&template.skeleton, &host, &port_nets, template.budget);
        if result.budget_exhausted {
            violations.push(
                ViolationKind::BudgetExceeded {
                    budget: template.budget,
                }
                .into_violation(),
            );
        } else if !result.matched {
            violations.push(
                ViolationKind::SkeletonUnmatched {
                    missing: result.missing,
                }
                .into_violation(),
            );
        }
    }
    for constraint in &template.semantic_constraints {
        if let Some(v) = eval_semantic(constraint, &host, &port_nets, &primitives, circuit, kg) {
            violations.push(v);
        }
    }
    (violations.is_empty(), violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::kg::parse_kg;

    fn kg() -> KnowledgeGraph {
        parse_kg(
            br#"{
          "parts": {
            "R": {"pins": [
              {"number": 1, "name": "1", "role": "passive_terminal"},
              {"number": 2, "name": "2", "role": "passive_terminal"}]},
            "C": {"pins": [
              {"number": 1, "name": "1", "role": "passive_terminal"},
              {"number": 2, "name": "2", "role": "passive_terminal"}]},
            "D": {"pins": [
              {"number": 1, "name": "K", "role": "diode_cathode"},
              {"number": 2, "name": "A", "role": "diode_anode"}]},
            "MGJ2D121505SC": {
              "pins": [
                {"number": 1, "name": "+VIN", "role": "primary_vdd"},
                {"number": 2, "name": "-VIN", "role": "primary_gnd"},
                {"number": 5, "name": "-VOUT", "role": "secondary_gnd"},
                {"number": 6, "name": "0V", "role": "secondary_gnd"},
                {"number": 7, "name": "+VOUT", "role": "secondary_vdd"}],
              "constraints": [
                {"kind": "supply_pair", "pins": ["+VIN", "-VIN"]},
                {"kind": "must_be_connected", "pins": ["+VIN", "-VIN", "+VOUT", "0V"]}],
              "isolation_groups": {"primary": [1, 2], "secondary": [5, 6, 7]}}
          }
        }"#,
        )
        .unwrap()
    }

    // Task-7-shaped fixture: isolated module, input cap, output cap, bleed R.
    fn golden() -> Circuit {
        parse_circuit(
            br#"{"components":[
              {"ref":"C1","part_type":"C","pins":[{"number":1,"name":"1"},{"number":2,"name":"2"}]},
              {"ref":"C2","part_type":"C","pins":[{"number":1,"name":"1"},{"number":2,"name":"2"}]},
              {"ref":"R1","part_type":"R","pins":[{"number":1,"name":"1"},{"number":2,"name":"2"}]},
              {"ref":"U1","part_type":"MGJ2D121505SC","pins":[{"number":1,"name":"+VIN"},{"number":2,"name":"-VIN"},{"number":5,"name":"-VOUT"},{"number":6,"name":"0V"},{"number":7,"name":"+VOUT"}]}],
              "nets":[
                {"name":"GND","endpoints":[["C1",2],["U1",2]]},
                {"name":"ISO_0V","endpoints":[["C2",2],["R1",2],["U1",5],["U1",6]]},
                {"name":"VIN","endpoints":[["C1",1],["U1",1]]},
                {"name":"VISO+","endpoints":[["C2",1],["R1",1],["U1",7]]}],
              "metadata":{}}"#,
        )
        .unwrap()
    }

    fn template() -> SystemTemplate {
        parse_template(
            br#"{
          "name": "iso-dcdc",
          "ports": {"VIN": "net:VIN", "GND": "net:GND", "VISO+": "net:VISO+", "ISO_0V": "net:ISO_0V"},
          "rules": [
            {"tau": "C_DIRECT", "a": "role:primary_vdd", "b": "role:primary_gnd"},
            {"tau": "C_DIRECT", "a": "role:secondary_vdd", "b": "role:secondary_gnd"},
            {"tau": "DISTINCT", "a": "role:primary_gnd", "b": "role:secondary_gnd"}
          ],
          "skeleton": {
            "vertices": [
              {"id": "vin", "kind": "port", "bind": "VIN"},
              {"id": "gnd", "kind": "port", "bind": "GND"}
            ],
            "edges": [{"a": "vin", "b": "gnd", "type": "capacitor"}]
          },
          "semantic_constraints": [
            {"kind": "nets_in_distinct_isolation", "ports": ["VIN", "VISO+"]},
            {"kind": "primitive_count_at_least", "primitive": "decoupling_cap", "count": 1}
          ]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn role_endpoints_resolve_on_golden() {
        let circuit = golden();
        let nets = resolve_endpoints(
            &Endpoint::parse("role:secondary_vdd").unwrap(),
            &circuit,
            &kg(),
        )
        .unwrap();
        assert_eq!(nets, BTreeSet::from(["VISO+".to_string()]));
        let nets =
            resolve_endpoints(&Endpoint::parse("U1.+VOUT").unwrap(), &circuit, &kg()).unwrap();
        assert_eq!(nets, BTreeSet::from(["VISO+".to_string()]));
        let nets = resolve_endpoints(
            &Endpoint::parse("role:mosfet_gate").unwrap(),
            &circuit,
            &kg(),
        )
        .unwrap();
        assert!(nets.is_empty());
        assert!(resolve_endpoints(&Endpoint::parse("U9.+VOUT").unwrap(), &circuit, &kg()).is_err());
    }

    #[test]
    fn via_edges_and_self_loops() {
        let circuit = golden();
        let graph = build_topology_graph(&circuit, &kg(), &default_passive_set());
        assert_eq!(graph.via_edges.len(), 3);
        assert!(graph.via_edges.iter().any(|e| e.reference == "C2"
            && ((e.net_a == "VISO+" && e.net_b == "ISO_0V")
                || (e.net_a == "ISO_0V" && e.net_b == "VISO+"))));
        assert!(graph.self_loops.is_empty());

        let shorted = parse_circuit(
            br#"{"components":[{"ref":"R1","part_type":"R","pins":[{"number":1,"name":"1"},{"number":2,"name":"2"}]}],
                 "nets":[{"name":"A","endpoints":[["R1",1],["R1",2]]}],"metadata":{}}"#,
        )
        .unwrap();
        let graph = build_topology_graph(&shorted, &kg(), &default_passive_set());
        assert!(graph.via_edges.is_empty());
        assert_eq!(graph.self_loops, vec![("R1".to_string(), "A".to_string())]);
    }

    #[test]
    fn c_direct_message_on_missing_cap() {
        let mut circuit = golden();
        circuit.components.retain(|c| c.reference != "C2");
        for net in &mut circuit.nets {
            net.endpoints.retain(|(r, _)| r != "C2");
        }
        let circuit = parse_circuit(&crate::circuit::serialize_circuit(&circuit)).unwrap();
        let graph = build_topology_graph(&circuit, &kg(), &default_passive_set());
        let rule = PairRule {
            tau: RuleKind::CDirect,
            a: Endpoint::parse("role:secondary_vdd").unwrap(),
            b: Endpoint::parse("role:secondary_gnd").unwrap(),
            min_count: 1,
        };
        let violation = eval_rule(&rule, &graph, &circuit, &kg()).unwrap();
        assert_eq!(
            violation.message,
            "C_DIRECT missing between secondary_vdd and secondary_gnd (nets ['VISO+'] vs ['ISO_0V'])"
        );
    }

    #[test]
    fn surplus_parallel_caps_tolerated() {
        let mut circuit = golden();
        let mut extra = circuit.components[1].clone(); // C2
        extra.reference = "C3".to_string();
        circuit.components.push(extra);
        let mut doc = serde_json::from_slice::<serde_json::Value>(
            &crate::circuit::serialize_circuit(&circuit),
        )
        .unwrap();
        // re-add nets with C3 endpoints
        for net in doc["nets"].as_array_mut().unwrap() {
            let name = net["name"].as_str().unwrap().to_string();
            if name == "VISO+" {
                net["endpoints"]
                    .as_array_mut()
                    .unwrap()
                    .push(serde_json::json!(["C3", 1]));
            }
            if name == "ISO_0V" {
                net["endpoints"]
                    .as_array_mut()
                    .unwrap()
                    .push(serde_json::json!(["C3", 2]));
            }
        }
        let circuit = parse_circuit(doc.to_string().as_bytes()).unwrap();
        let graph = build_topology_graph(&circuit, &kg(), &default_passive_set());
        let rule = PairRule {
            tau: RuleKind::CDirect,
            a: Endpoint::parse("role:secondary_vdd").unwrap(),
            b: Endpoint::parse("role:secondary_gnd").unwrap(),
            min_count: 1,
        };
        assert!(eval_rule(&rule, &graph, &circuit, &kg()).is_none());
        let (ok, violations) = verify(&circuit, &kg(), &template());
        assert!(ok, "{violations:?}");
    }

    #[test]
    fn golden_verifies_clean() {
        let (ok, violations) = verify(&golden(), &kg(), &template());
        assert!(ok, "{violations:?}");
    }

    #[test]
    fn supply_short_fast_fails_before_phase34() {
        // merge GND into VIN
        let circuit = parse_circuit(
            br#"{"components":[
              {"ref":"C1","part_type":"C","pins":[{"number":1,"name":"1"},{"number":2,"name":"2"}]},
              {"ref":"C2","part_type":"C","pins":[{"number":1,"name":"1"},{"number":2,"name":"2"}]},
              {"ref":"R1","part_type":"R","pins":[{"number":1,"name":"1"},{"number":2,"name":"2"}]},
              {"ref":"U1","part_type":"MGJ2D121505SC","pins":[{"number":1,"name":"+VIN"},{"number":2,"name":"-VIN"},{"number":5,"name":"-VOUT"},{"number":6,"name":"0V"},{"number":7,"name":"+VOUT"}]}],
              "nets":[
                {"name":"ISO_0V","endpoints":[["C2",2],["R1",2],["U1",5],["U1",6]]},
                {"name":"VIN","endpoints":[["C1",1],["C1",2],["U1",1],["U1",2]]},
                {"name":"VISO+","endpoints":[["C2",1],["R1",1],["U1",7]]}],
              "metadata":{}}"#,
        )
        .unwrap();
        let (ok, violations) = verify(&circuit, &kg(), &template());
        assert!(!ok);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].code, "supply_pair_shorted");
        assert_eq!(
            violations[0].message,
            "U1: supply pair shorted (+VIN and -VIN on VIN)"
        );
    }

    #[test]
    fn diode_forward_requires_orientation() {
        let circuit = parse_circuit(
            br#"{"components":[
              {"ref":"D1","part_type":"D","pins":[{"number":1,"name":"K"},{"number":2,"name":"A"}]},
              {"ref":"R1","part_type":"R","pins":[{"number":1,"name":"1"},{"number":2,"name":"2"}]}],
              "nets":[
                {"name":"X","endpoints":[["D1",2],["R1",1]]},
                {"name":"Y","endpoints":[["D1",1],["R1",2]]}],
              "metadata":{}}"#,
        )
        .unwrap();
        let graph = build_topology_graph(&circuit, &kg(), &default_passive_set());
        let forward = PairRule {
            tau: RuleKind::DiodeForward,
            a: Endpoint::parse("net:X").unwrap(),
            b: Endpoint::parse("net:Y").unwrap(),
            min_count: 1,
        };
        assert!(eval_rule(&forward, &graph, &circuit, &kg()).is_none());
        let reverse = PairRule {
            tau: RuleKind::DiodeForward,
            a: Endpoint::parse("net:Y").unwrap(),
            b: Endpoint::parse("net:X").unwrap(),
            min_count: 1,
        };
        assert!(eval_rule(&reverse, &graph, &circuit, &kg()).is_some());
    }

    #[test]
    fn unresolved_endpoint_is_a_resolution_violation() {
        let circuit = golden();
        let graph = build_topology_graph(&circuit, &kg(), &default_passive_set());
        let rule = PairRule {
            tau: RuleKind::Connected,
            a: Endpoint::parse("net:NOPE").unwrap(),
            b: Endpoint::parse("net:VIN").unwrap(),
            min_count: 1,
        };
        let violation = eval_rule(&rule, &graph, &circuit, &kg()).unwrap();
        assert_eq!(violation.code, "rule_unresolved");
        assert!(violation.message.contains("resolves to no nets"));
    }

    #[test]
    fn exhausted_budget_becomes_a_violation() {
        let mut tight = template();
        tight.budget = 1;
        let (ok, violations) = verify(&golden(), &kg(), &tight);
        assert!(!ok);
        assert!(violations.iter().any(|v| v.code == "budget_exceeded"));
    }

    #[test]
    fn disconnected_skeleton_rejected() {
        let err = parse_template(
            br#"{"name":"bad","ports":{"A":"net:A","B":"net:B"},
                "skeleton":{"vertices":[
                  {"id":"a","kind":"port","bind":"A"},
                  {"id":"b","kind":"port","bind":"B"}],
                 "edges":[]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, TemplateError::DisconnectedSkeleton));
    }
}
