//! Skeleton matching by subgraph monomorphism.
//!
//! The skeleton is a small typed pattern graph; the host is the annotated
//! net-role graph. A match is an injective, edge-type-preserving embedding
//! (VF2-style backtracking with a node-expansion budget). Extra host
//! vertices and edges never block a match: surplus parallel passives and
//! auxiliary components are tolerated by construction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::kg::PinRole;

/// Host edge kinds. Skeleton `direct` edges accept any of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HostEdgeKind {
    Switch,
    Inductor,
    Capacitor,
    Winding,
    Resistor,
    Diode,
}

#[derive(Debug, Clone)]
pub struct HostVertex {
    pub net: String,
    pub roles: BTreeSet<PinRole>,
    pub is_switch_anchor: bool,
}

/// The annotated topology graph the skeleton embeds into. Vertices are nets
/// in sorted order, so candidate enumeration is deterministic.
#[derive(Debug, Clone, Default)]
pub struct HostGraph {
    pub vertices: Vec<HostVertex>,
    index: BTreeMap<String, usize>,
    edges: BTreeMap<(usize, usize), BTreeSet<HostEdgeKind>>,
}

impl HostGraph {
    pub fn new(mut vertices: Vec<HostVertex>) -> Self {
        vertices.sort_by(|a, b| a.net.cmp(&b.net));
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.net.clone(), i))
            .collect();
        HostGraph {
            vertices,
            index,
            edges: BTreeMap::new(),
        }
    }

    pub fn vertex_index(&self, net: &str) -> Option<usize> {
        self.index.get(net).copied()
    }

    pub fn add_edge(&mut self, net_a: &str, net_b: &str, kind: HostEdgeKind) {
        let (Some(a), Some(b)) = (self.vertex_index(net_a), self.vertex_index(net_b)) else {
            return;
        };
        if a == b {
            return;
        }
        let key = (a.min(b), a.max(b));
        self.edges.entry(key).or_default().insert(kind);
    }

    pub fn edge_kinds(&self, a: usize, b: usize) -> Option<&BTreeSet<HostEdgeKind>> {
        self.edges.get(&(a.min(b), a.max(b)))
    }

    /// Whether the host adjacency between `a` and `b` satisfies a skeleton
    /// edge type (`Direct` accepts any adjacency).
    pub fn satisfies(&self, a: usize, b: usize, ty: SkeletonEdgeType) -> bool {
        let Some(kinds) = self.edge_kinds(a, b) else {
            return false;
        };
        match ty {
            SkeletonEdgeType::Switch => kinds.contains(&HostEdgeKind::Switch),
            SkeletonEdgeType::Inductor => kinds.contains(&HostEdgeKind::Inductor),
            SkeletonEdgeType::Capacitor => kinds.contains(&HostEdgeKind::Capacitor),
            SkeletonEdgeType::Winding => kinds.contains(&HostEdgeKind::Winding),
            SkeletonEdgeType::Direct => !kinds.is_empty(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkeletonVertexKind {
    /// Maps only to the net the named port resolves to.
    Port,
    /// Maps only to half-bridge anchor (switch-node) nets.
    SwitchNode,
    /// Maps to any net carrying the bound role.
    RoleClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonVertex {
    pub id: String,
    pub kind: SkeletonVertexKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bind: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkeletonEdgeType {
    Switch,
    Inductor,
    Capacitor,
    Winding,
    Direct,
}

impl SkeletonEdgeType {
    pub fn as_str(self) -> &'static str {
        match self {
            SkeletonEdgeType::Switch => "switch",
            SkeletonEdgeType::Inductor => "inductor",
            SkeletonEdgeType::Capacitor => "capacitor",
            SkeletonEdgeType::Winding => "winding",
            SkeletonEdgeType::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonEdge {
    pub a: String,
    pub b: String,
    #[serde(rename = "type")]
    pub edge_type: SkeletonEdgeType,
}

/// The reference pattern a circuit must contain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skeleton {
    pub vertices: Vec<SkeletonVertex>,
    pub edges: Vec<SkeletonEdge>,
}

impl Skeleton {
    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }
}

/// Result of a skeleton embedding search. `mapping` is the injective
/// skeleton-vertex-to-net assignment on success; `missing` is a minimal
/// unmatched element set (greedy, declaration order) on failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub matched: bool,
    pub mapping: BTreeMap<String, String>,
    pub missing: Vec<String>,
    pub expansions: u64,
    pub budget_exhausted: bool,
}

// One skeleton element, for missing-set bookkeeping. Removing a vertex
// removes its incident edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Element {
    Edge(usize),
    Vertex(usize),
}

struct Search<'a> {
    skeleton: &'a Skeleton,
    host: &'a HostGraph,
    compat: Vec<Vec<usize>>,
    budget: u64,
    expansions: u64,
    exhausted: bool,
}

impl<'a> Search<'a> {
    fn new(
        skeleton: &'a Skeleton,
        host: &'a HostGraph,
        port_nets: &BTreeMap<String, BTreeSet<String>>,
        budget: u64,
    ) -> Self {
        let compat = skeleton
            .vertices
            .iter()
            .map(|v| {
                host.vertices
                    .iter()
                    .enumerate()
                    .filter(|(_, h)| match v.kind {
                        SkeletonVertexKind::Port => v
                            .bind
                            .as_deref()
                            .and_then(|p| port_nets.get(p))
                            .map(|nets| nets.contains(&h.net))
                            .unwrap_or(false),
                        SkeletonVertexKind::SwitchNode => h.is_switch_anchor,
                        SkeletonVertexKind::RoleClass => v
                            .bind
                            .as_deref()
                            .and_then(PinRole::parse)
                            .map(|role| h.roles.contains(&role))
                            .unwrap_or(false),
                    })
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Search {
            skeleton,
            host,
            compat,
            budget,
            expansions: 0,
            exhausted: false,
        }
    }

    /// Embedding search over the skeleton restricted to `alive` vertices and
    /// `alive_edges`. Returns the mapping if one exists.
    fn embed(&mut self, alive: &[bool], alive_edges: &[bool]) -> Option<BTreeMap<String, String>> {
        let order = self.vertex_order(alive, alive_edges);
        let mut assignment: Vec<Option<usize>> = vec![None; self.skeleton.vertices.len()];
        let mut used: Vec<bool> = vec![false; self.host.vertices.len()];
        if self.place(0, &order, alive_edges, &mut assignment, &mut used) {
            let mapping = order
                .iter()
                .map(|&v| {
                    (
                        self.skeleton.vertices[v].id.clone(),
                        self.host.vertices[assignment[v].unwrap()].net.clone(),
                    )
                })
                .collect();
            Some(mapping)
        } else {
            None
        }
    }

    // Deterministic VF2-flavored ordering: repeatedly take the first
    // (declaration order) unplaced vertex adjacent to the placed set, falling
    // back to the first unplaced vertex when the frontier is empty.
    fn vertex_order(&self, alive: &[bool], alive_edges: &[bool]) -> Vec<usize> {
        let n = self.skeleton.vertices.len();
        let mut placed = vec![false; n];
        let mut order = Vec::new();
        while order.len() < alive.iter().filter(|&&a| a).count() {
            let mut next = None;
            for v in 0..n {
                if !alive[v] || placed[v] {
                    continue;
                }
                let frontier = self.skeleton.edges.iter().enumerate().any(|(ei, e)| {
                    if !alive_edges[ei] {
                        return false;
                    }
                    let (Some(a), Some(b)) = (
                        self.skeleton.vertex_index(&e.a),
                        self.skeleton.vertex_index(&e.b),
                    ) else {
                        return false;
                    };
                    (a == v && placed[b]) || (b == v && placed[a])
                });
                if frontier {
                    next = Some(v);
                    break;
                }
                if next.is_none() {
                    next = Some(v);
                }
            }
            match next {
                Some(v) => {
                    placed[v] = true;
                    order.push(v);
                }
                None => break,
            }
        }
        order
    }

    fn place(
        &mut self,
        depth: usize,
        order: &[usize],
        alive_edges: &[bool],
        assignment: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        if self.exhausted {
            return false;
        }
        let v = order[depth];
        let candidates = self.compat[v].clone();
        for h in candidates {
            if used[h] {
                continue;
            }
            self.expansions += 1;
            if self.expansions > self.budget {
                self.exhausted = true;
                return false;
            }
            if !self.edges_consistent(v, h, alive_edges, assignment) {
                continue;
            }
            assignment[v] = Some(h);
            used[h] = true;
            if self.place(depth + 1, order, alive_edges, assignment, used) {
                return true;
            }
            assignment[v] = None;
            used[h] = false;
        }
        false
    }

    fn edges_consistent(
        &self,
        v: usize,
        h: usize,
        alive_edges: &[bool],
        assignment: &[Option<usize>],
    ) -> bool {
        for (ei, edge) in self.skeleton.edges.iter().enumerate() {
            if !alive_edges[ei] {
                continue;
            }
            let (Some(a), Some(b)) = (
                self.skeleton.vertex_index(&edge.a),
                self.skeleton.vertex_index(&edge.b),
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
            if let Some(oh) = assignment[other] {
                if !self.host.satisfies(h, oh, edge.edge_type) {
                    return false;
                }
            }
        }
        true
    }
}

/// Searches for an injective, edge-type-preserving embedding of `skeleton`
/// into `host`. Port vertices are constrained to the nets in `port_nets`.
/// On failure, `missing` is the smallest skeleton element set (searched in
/// declaration order, edges before vertices) whose removal admits a match.
pub fn subgraph_match(
    skeleton: &Skeleton,
    host: &HostGraph,
    port_nets: &BTreeMap<String, BTreeSet<String>>,
    budget: u64,
) -> MatchResult {
    let mut search = Search::new(skeleton, host, port_nets, budget);
    let all_vertices = vec![true; skeleton.vertices.len()];
    let all_edges = vec![true; skeleton.edges.len()];
    if let Some(mapping) = search.embed(&all_vertices, &all_edges) {
        return MatchResult {
            matched: true,
            mapping,
            missing: Vec::new(),
            expansions: search.expansions,
            budget_exhausted: false,
        };
    }
    if search.exhausted {
        return MatchResult {
            matched: false,
            mapping: BTreeMap::new(),
            missing: Vec::new(),
            expansions: search.expansions,
            budget_exhausted: true,
        };
    }
    let missing = find_missing(&mut search);
    MatchResult {
        matched: false,
        mapping: BTreeMap::new(),
        budget_exhausted: search.exhausted,
        expansions: search.expansions,
        missing,
    }
}

fn elements(skeleton: &Skeleton) -> Vec<Element> {
    let mut out: Vec<Element> = (0..skeleton.edges.len()).map(Element::Edge).collect();
    out.extend((0..skeleton.vertices.len()).map(Element::Vertex));
    out
}

fn render_element(skeleton: &Skeleton, e: Element) -> String {
    match e {
        Element::Edge(i) => {
            let edge = &skeleton.edges[i];
            format!("edge {}-{} ({})", edge.a, edge.b, edge.edge_type.as_str())
        }
        Element::Vertex(i) => format!("vertex {}", skeleton.vertices[i].id),
    }
}

fn apply_removal(skeleton: &Skeleton, removed: &[Element]) -> (Vec<bool>, Vec<bool>) {
    let mut alive = vec![true; skeleton.vertices.len()];
    let mut alive_edges = vec![true; skeleton.edges.len()];
    for e in removed {
        match e {
            Element::Edge(i) => alive_edges[*i] = false,
            Element::Vertex(i) => {
                alive[*i] = false;
                let id = &skeleton.vertices[*i].id;
                for (ei, edge) in skeleton.edges.iter().enumerate() {
                    if &edge.a == id || &edge.b == id {
                        alive_edges[ei] = false;
                    }
                }
            }
        }
    }
    (alive, alive_edges)
}

// Minimal missing set: subsets of increasing size enumerated in declaration
// order (edges first), with a greedy cumulative sweep as a bounded fallback.
fn find_missing(search: &mut Search<'_>) -> Vec<String> {
    let skeleton = search.skeleton;
    let elems = elements(skeleton);
    let mut attempts: u32 = 0;
    const MAX_ATTEMPTS: u32 = 4096;
    for size in 1..=elems.len() {
        let mut stack: Vec<usize> = Vec::new();
        if let Some(found) = combinations(search, &elems, size, 0, &mut stack, &mut attempts) {
            return found.iter().map(|&e| render_element(skeleton, e)).collect();
        }
        if attempts >= MAX_ATTEMPTS || search.exhausted {
            break;
        }
    }
    // greedy sweep: strip elements in declaration order until a match exists
    let mut removed: Vec<Element> = Vec::new();
    for &e in &elems {
        removed.push(e);
        let (alive, alive_edges) = apply_removal(skeleton, &removed);
        if search.exhausted || search.embed(&alive, &alive_edges).is_some() {
            break;
        }
    }
    removed
        .iter()
        .map(|&e| render_element(skeleton, e))
        .collect()
}

fn combinations(
    search: &mut Search<'_>,
    elems: &[Element],
    size: usize,
    start: usize,
    stack: &mut Vec<usize>,
    attempts: &mut u32,
) -> Option<Vec<Element>> {
    if stack.len() == size {
        *attempts += 1;
        if *attempts > 4096 || search.exhausted {
            return None;
        }
        let removed: Vec<Element> = stack.iter().map(|&i| elems[i]).collect();
        let (alive, alive_edges) = apply_removal(search.skeleton, &removed);
        if search.embed(&alive, &alive_edges).is_some() {
            return Some(removed);
        }
        return None;
    }
    for i in start..elems.len() {
        stack.push(i);
        if let Some(found) = combinations(search, elems, size, i + 1, stack, attempts) {
            return Some(found);
        }
        stack.pop();
        if *attempts > 4096 || search.exhausted {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn role_vertex(id: &str, role: &str) -> SkeletonVertex {
        SkeletonVertex {
            id: id.into(),
            kind: SkeletonVertexKind::RoleClass,
            bind: Some(role.into()),
        }
    }

    fn host_with(nets: &[(&str, PinRole)], edges: &[(&str, &str, HostEdgeKind)]) -> HostGraph {
        let vertices = nets
            .iter()
            .map(|(net, role)| HostVertex {
                net: net.to_string(),
                roles: BTreeSet::from([*role]),
                is_switch_anchor: false,
            })
            .collect();
        let mut host = HostGraph::new(vertices);
        for (a, b, kind) in edges {
            host.add_edge(a, b, *kind);
        }
        host
    }

    #[test]
    fn triangle_embeds_into_clique() {
        let role = PinRole::PassiveTerminal;
        let nets = [("A", role), ("B", role), ("C", role), ("D", role)];
        let mut edges = Vec::new();
        for (i, a) in ["A", "B", "C", "D"].iter().enumerate() {
            for b in ["A", "B", "C", "D"].iter().skip(i + 1) {
                edges.push((*a, *b, HostEdgeKind::Capacitor));
            }
        }
        let host = host_with(&nets, &edges);
        let skeleton = Skeleton {
            vertices: vec![
                role_vertex("x", "passive_terminal"),
                role_vertex("y", "passive_terminal"),
                role_vertex("z", "passive_terminal"),
            ],
            edges: vec![
                SkeletonEdge {
                    a: "x".into(),
                    b: "y".into(),
                    edge_type: SkeletonEdgeType::Capacitor,
                },
                SkeletonEdge {
                    a: "y".into(),
                    b: "z".into(),
                    edge_type: SkeletonEdgeType::Capacitor,
                },
                SkeletonEdge {
                    a: "z".into(),
                    b: "x".into(),
                    edge_type: SkeletonEdgeType::Capacitor,
                },
            ],
        };
        let result = subgraph_match(&skeleton, &host, &BTreeMap::new(), 1_000_000);
        assert!(result.matched);
        assert_eq!(result.mapping.len(), 3);
        // injectivity
        let images: BTreeSet<&String> = result.mapping.values().collect();
        assert_eq!(images.len(), 3);
    }

    #[test]
    fn edge_type_must_match() {
        let role = PinRole::PassiveTerminal;
        let nets = [("A", role), ("B", role)];
        let host = host_with(&nets, &[("A", "B", HostEdgeKind::Resistor)]);
        let capacitor_edge = Skeleton {
            vertices: vec![
                role_vertex("x", "passive_terminal"),
                role_vertex("y", "passive_terminal"),
            ],
            edges: vec![SkeletonEdge {
                a: "x".into(),
                b: "y".into(),
                edge_type: SkeletonEdgeType::Capacitor,
            }],
        };
        let result = subgraph_match(&capacitor_edge, &host, &BTreeMap::new(), 1_000_000);
        assert!(!result.matched);
        assert_eq!(result.missing, vec!["edge x-y (capacitor)".to_string()]);

        let direct_edge = Skeleton {
            vertices: capacitor_edge.vertices.clone(),
            edges: vec![SkeletonEdge {
                a: "x".into(),
                b: "y".into(),
                edge_type: SkeletonEdgeType::Direct,
            }],
        };
        assert!(subgraph_match(&direct_edge, &host, &BTreeMap::new(), 1_000_000).matched);
    }

    #[test]
    fn port_vertex_pins_to_bound_net() {
        let role = PinRole::SupplyVdd;
        let nets = [("VIN", role), ("VOUT", role)];
        let host = host_with(&nets, &[("VIN", "VOUT", HostEdgeKind::Inductor)]);
        let skeleton = Skeleton {
            vertices: vec![
                SkeletonVertex {
                    id: "p".into(),
                    kind: SkeletonVertexKind::Port,
                    bind: Some("VIN".into()),
                },
                role_vertex("q", "supply_vdd"),
            ],
            edges: vec![SkeletonEdge {
                a: "p".into(),
                b: "q".into(),
                edge_type: SkeletonEdgeType::Inductor,
            }],
        };
        let mut ports = BTreeMap::new();
        ports.insert("VIN".to_string(), BTreeSet::from(["VIN".to_string()]));
        let result = subgraph_match(&skeleton, &host, &ports, 1_000_000);
        assert!(result.matched);
        assert_eq!(result.mapping["p"], "VIN");
    }

    #[test]
    fn empty_skeleton_matches_vacuously() {
        let host = host_with(&[], &[]);
        let result = subgraph_match(&Skeleton::default(), &host, &BTreeMap::new(), 10);
        assert!(result.matched);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let role = PinRole::PassiveTerminal;
        let nets = [
            ("A", role),
            ("B", role),
            ("C", role),
            ("D", role),
            ("E", role),
        ];
        let host = host_with(&nets, &[]);
        let skeleton = Skeleton {
            vertices: vec![
                role_vertex("x", "passive_terminal"),
                role_vertex("y", "passive_terminal"),
                role_vertex("z", "passive_terminal"),
            ],
            edges: vec![SkeletonEdge {
                a: "x".into(),
                b: "y".into(),
                edge_type: SkeletonEdgeType::Direct,
            }],
        };
        let result = subgraph_match(&skeleton, &host, &BTreeMap::new(), 2);
        assert!(!result.matched);
        assert!(result.budget_exhausted);
    }
}
