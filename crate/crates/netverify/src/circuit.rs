//! Canonical in-memory circuit model and interchange format.
//!
//! A circuit is a set of components (each with numbered, named pins) and a
//! set of nets binding `(ref, pin)` endpoints to one electrical potential.
//! The interchange format is a canonical JSON document: object keys in fixed
//! order, components sorted by ref, nets by name, endpoints by `(ref, pin)`,
//! two-space indentation, LF line endings, trailing newline. Parsing and
//! serialization round-trip byte-identically on canonical input.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One package pin: position number plus the datasheet name carried for
/// messages. Nets address pins by number; names are display data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinId {
    pub number: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    #[serde(rename = "ref")]
    pub reference: String,
    pub part_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    pub pins: Vec<PinId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    /// `(component ref, pin number)` pairs.
    pub endpoints: Vec<(String, u32)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct CircuitDoc {
    components: Vec<Component>,
    nets: Vec<Net>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

/// A validated circuit. Immutable after construction; all lookups are pure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub components: Vec<Component>,
    pub nets: Vec<Net>,
    pub metadata: BTreeMap<String, String>,
    // (ref, pin number) -> net name; one entry per bound pin.
    pin_net: BTreeMap<(String, u32), String>,
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("malformed circuit document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("component {reference}: designator does not match [A-Z]+[0-9]+")]
    BadReference { reference: String },
    #[error("duplicate component ref {reference}")]
    DuplicateRef { reference: String },
    #[error("component {reference}: no pins declared")]
    NoPins { reference: String },
    #[error("component {reference}: duplicate pin number {number}")]
    DuplicatePin { reference: String, number: u32 },
    #[error("component {reference} pin {number}: empty pin name")]
    EmptyPinName { reference: String, number: u32 },
    #[error("component {reference} pin {number}: pin numbers start at 1")]
    ZeroPin { reference: String, number: u32 },
    #[error("duplicate net name {name}")]
    DuplicateNet { name: String },
    #[error("net {net}: endpoint {reference}.{pin} does not resolve to a declared component pin")]
    UnknownEndpoint {
        net: String,
        reference: String,
        pin: u32,
    },
    #[error("net {net}: duplicate endpoint {reference}.{pin}")]
    DuplicateEndpoint {
        net: String,
        reference: String,
        pin: u32,
    },
    #[error("pin bound to multiple nets: {reference}.{pin} appears in {first} and {second}")]
    PinRebound {
        reference: String,
        pin: u32,
        first: String,
        second: String,
    },
    #[error("unknown component ref {reference}")]
    UnknownRef { reference: String },
    #[error("component {reference}: unknown pin {pin}")]
    UnknownPin { reference: String, pin: u32 },
}

fn valid_designator(s: &str) -> bool {
    let letters = s.chars().take_while(|c| c.is_ascii_uppercase()).count();
    letters >= 1 && s.len() > letters && s[letters..].chars().all(|c| c.is_ascii_digit())
}

impl Circuit {
    /// Validates a raw document against every circuit invariant.
    fn from_doc(doc: CircuitDoc) -> Result<Self, CircuitError> {
        let mut pins: BTreeMap<(String, u32), ()> = BTreeMap::new();
        let mut refs: BTreeSet<&str> = BTreeSet::new();
        for comp in &doc.components {
            if !valid_designator(&comp.reference) {
                return Err(CircuitError::BadReference {
                    reference: comp.reference.clone(),
                });
            }
            if !refs.insert(&comp.reference) {
                return Err(CircuitError::DuplicateRef {
                    reference: comp.reference.clone(),
                });
            }
            if comp.pins.is_empty() {
                return Err(CircuitError::NoPins {
                    reference: comp.reference.clone(),
                });
            }
            for pin in &comp.pins {
                if pin.number == 0 {
                    return Err(CircuitError::ZeroPin {
                        reference: comp.reference.clone(),
                        number: pin.number,
                    });
                }
                if pin.name.is_empty() {
                    return Err(CircuitError::EmptyPinName {
                        reference: comp.reference.clone(),
                        number: pin.number,
                    });
                }
                if pins
                    .insert((comp.reference.clone(), pin.number), ())
                    .is_some()
                {
                    return Err(CircuitError::DuplicatePin {
                        reference: comp.reference.clone(),
                        number: pin.number,
                    });
                }
            }
        }
        let mut net_names: BTreeSet<&str> = BTreeSet::new();
        let mut pin_net: BTreeMap<(String, u32), String> = BTreeMap::new();
        for net in &doc.nets {
            if !net_names.insert(&net.name) {
                return Err(CircuitError::DuplicateNet {
                    name: net.name.clone(),
                });
            }
            let mut seen: BTreeSet<(&str, u32)> = BTreeSet::new();
            for (reference, pin) in &net.endpoints {
                if !pins.contains_key(&(reference.clone(), *pin)) {
                    return Err(CircuitError::UnknownEndpoint {
                        net: net.name.clone(),
                        reference: reference.clone(),
                        pin: *pin,
                    });
                }
                if !seen.insert((reference, *pin)) {
                    return Err(CircuitError::DuplicateEndpoint {
                        net: net.name.clone(),
                        reference: reference.clone(),
                        pin: *pin,
                    });
                }
                if let Some(first) = pin_net.insert((reference.clone(), *pin), net.name.clone()) {
                    return Err(CircuitError::PinRebound {
                        reference: reference.clone(),
                        pin: *pin,
                        first,
                        second: net.name.clone(),
                    });
                }
            }
        }
        let mut circuit = Circuit {
            components: doc.components,
            nets: doc.nets,
            metadata: doc.metadata,
            pin_net,
        };
        circuit.canonicalize();
        Ok(circuit)
    }

    fn canonicalize(&mut self) {
        self.components
            .sort_by(|a, b| a.reference.cmp(&b.reference));
        for comp in &mut self.components {
            comp.pins.sort_by_key(|p| p.number);
        }
        self.nets.sort_by(|a, b| a.name.cmp(&b.name));
        for net in &mut self.nets {
            net.endpoints.sort();
        }
    }

    pub fn component(&self, reference: &str) -> Option<&Component> {
        self.components
            .binary_search_by(|c| c.reference.as_str().cmp(reference))
            .ok()
            .map(|i| &self.components[i])
    }

    pub fn net(&self, name: &str) -> Option<&Net> {
        self.nets
            .binary_search_by(|n| n.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.nets[i])
    }

    /// The unique net binding `(reference, pin)`, or `None` for a floating pin.
    pub fn net_of(&self, reference: &str, pin: u32) -> Result<Option<&str>, CircuitError> {
        let comp = self.component(reference).ok_or(CircuitError::UnknownRef {
            reference: reference.to_string(),
        })?;
        if !comp.pins.iter().any(|p| p.number == pin) {
            return Err(CircuitError::UnknownPin {
                reference: reference.to_string(),
                pin,
            });
        }
        Ok(self
            .pin_net
            .get(&(reference.to_string(), pin))
            .map(|s| s.as_str()))
    }

    /// All nets any pin of `reference` is bound to.
    pub fn nets_of_component(&self, reference: &str) -> BTreeSet<&str> {
        self.pin_net
            .range((reference.to_string(), 0)..=(reference.to_string(), u32::MAX))
            .map(|(_, net)| net.as_str())
            .collect()
    }
}

/// Parses the canonical circuit format, enforcing every invariant.
pub fn parse_circuit(bytes: &[u8]) -> Result<Circuit, CircuitError> {
    let doc: CircuitDoc = serde_json::from_slice(bytes).map_err(|e| CircuitError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Circuit::from_doc(doc)
}

/// Canonical serialization; `parse_circuit(serialize_circuit(c))` equals `c`.
pub fn serialize_circuit(circuit: &Circuit) -> Vec<u8> {
    let mut canonical = circuit.clone();
    canonical.canonicalize();
    let doc = CircuitDoc {
        components: canonical.components,
        nets: canonical.nets,
        metadata: canonical.metadata,
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("circuit document serializes");
    out.push(b'\n');
    out
}

/// The bipartite connectivity graph: component vertices, net vertices, and
/// one pin-labeled edge per bound `(ref, pin)`. A component connecting to a
/// net through several pins yields one edge per pin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub component_vertices: BTreeSet<String>,
    pub net_vertices: BTreeSet<String>,
    pub edges: BTreeSet<(String, u32, String)>,
}

/// Derives the bipartite graph. Unconnected pins contribute no edge.
pub fn build_bipartite_graph(circuit: &Circuit) -> BipartiteGraph {
    let component_vertices = circuit
        .components
        .iter()
        .map(|c| c.reference.clone())
        .collect();
    let net_vertices = circuit.nets.iter().map(|n| n.name.clone()).collect();
    let mut edges = BTreeSet::new();
    for net in &circuit.nets {
        for (reference, pin) in &net.endpoints {
            edges.insert((reference.clone(), *pin, net.name.clone()));
        }
    }
    BipartiteGraph {
        component_vertices,
        net_vertices,
        edges,
    }
}
