//! Datasheet-derived knowledge graph: pin-role ontology, per-part constraint
//! declarations, attributes, and isolation boundaries.
//!
//! A part entry is the machine form of a datasheet: each pin carries one of
//! the 34 closed semantic roles, constraints encode the electrical rules the
//! verifier checks in Phase 2, and isolation groups partition pins into
//! galvanically separated domains. Loading is fail-closed: unknown roles or
//! constraint kinds reject the whole document.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The closed pin-role vocabulary, organized by functional category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinRole {
    // power supply
    SupplyVdd,
    SupplyGnd,
    PrimaryVdd,
    PrimaryGnd,
    SecondaryVdd,
    SecondaryGnd,
    // signal I/O
    SensePlus,
    SenseMinus,
    Out,
    OutPlus,
    OutMinus,
    // logic
    LogicIn,
    LogicOut,
    // passive
    PassiveTerminal,
    DiodeAnode,
    DiodeCathode,
    // buck regulator
    BuckVin,
    BuckGnd,
    BuckSw,
    BuckFb,
    BuckEn,
    BuckBoot,
    // half-bridge driver
    HalfbridgeHb,
    HalfbridgeHs,
    GateHo,
    GateLo,
    // mosfet
    MosfetGate,
    MosfetDrain,
    MosfetSource,
    MosfetKelvinSource,
    // transformer
    XfmrPrimary,
    XfmrSecondary,
}

impl PinRole {
    pub const ALL: [PinRole; 32] = [
        PinRole::SupplyVdd,
        PinRole::SupplyGnd,
        PinRole::PrimaryVdd,
        PinRole::PrimaryGnd,
        PinRole::SecondaryVdd,
        PinRole::SecondaryGnd,
        PinRole::SensePlus,
        PinRole::SenseMinus,
        PinRole::Out,
        PinRole::OutPlus,
        PinRole::OutMinus,
        PinRole::LogicIn,
        PinRole::LogicOut,
        PinRole::PassiveTerminal,
        PinRole::DiodeAnode,
        PinRole::DiodeCathode,
        PinRole::BuckVin,
        PinRole::BuckGnd,
        PinRole::BuckSw,
        PinRole::BuckFb,
        PinRole::BuckEn,
        PinRole::BuckBoot,
        PinRole::HalfbridgeHb,
        PinRole::HalfbridgeHs,
        PinRole::GateHo,
        PinRole::GateLo,
        PinRole::MosfetGate,
        PinRole::MosfetDrain,
        PinRole::MosfetSource,
        PinRole::MosfetKelvinSource,
        PinRole::XfmrPrimary,
        PinRole::XfmrSecondary,
    ];

    /// Canonical snake_case identifier, as written in KG documents.
    pub fn as_str(self) -> &'static str {
        match self {
            PinRole::SupplyVdd => "supply_vdd",
            PinRole::SupplyGnd => "supply_gnd",
            PinRole::PrimaryVdd => "primary_vdd",
            PinRole::PrimaryGnd => "primary_gnd",
            PinRole::SecondaryVdd => "secondary_vdd",
            PinRole::SecondaryGnd => "secondary_gnd",
            PinRole::SensePlus => "sense_plus",
            PinRole::SenseMinus => "sense_minus",
            PinRole::Out => "out",
            PinRole::OutPlus => "out_plus",
            PinRole::OutMinus => "out_minus",
            PinRole::LogicIn => "logic_in",
            PinRole::LogicOut => "logic_out",
            PinRole::PassiveTerminal => "passive_terminal",
            PinRole::DiodeAnode => "diode_anode",
            PinRole::DiodeCathode => "diode_cathode",
            PinRole::BuckVin => "buck_vin",
            PinRole::BuckGnd => "buck_gnd",
            PinRole::BuckSw => "buck_sw",
            PinRole::BuckFb => "buck_fb",
            PinRole::BuckEn => "buck_en",
            PinRole::BuckBoot => "buck_boot",
            PinRole::HalfbridgeHb => "halfbridge_hb",
            PinRole::HalfbridgeHs => "halfbridge_hs",
            PinRole::GateHo => "gate_ho",
            PinRole::GateLo => "gate_lo",
            PinRole::MosfetGate => "mosfet_gate",
            PinRole::MosfetDrain => "mosfet_drain",
            PinRole::MosfetSource => "mosfet_source",
            PinRole::MosfetKelvinSource => "mosfet_kelvin_source",
            PinRole::XfmrPrimary => "xfmr_primary",
            PinRole::XfmrSecondary => "xfmr_secondary",
        }
    }

    pub fn parse(s: &str) -> Option<PinRole> {
        PinRole::ALL.iter().copied().find(|r| r.as_str() == s)
    }

    /// Supply-category roles: the pins ERC treats as power.
    pub fn is_supply(self) -> bool {
        matches!(
            self,
            PinRole::SupplyVdd
                | PinRole::SupplyGnd
                | PinRole::PrimaryVdd
                | PinRole::PrimaryGnd
                | PinRole::SecondaryVdd
                | PinRole::SecondaryGnd
        )
    }

    /// `*_vdd` roles (positive-rail class used by decoupling detection).
    pub fn is_vdd_class(self) -> bool {
        matches!(
            self,
            PinRole::SupplyVdd | PinRole::PrimaryVdd | PinRole::SecondaryVdd
        )
    }

    /// `*_gnd` roles (ground class used by decoupling and filter detection).
    pub fn is_gnd_class(self) -> bool {
        matches!(
            self,
            PinRole::SupplyGnd | PinRole::PrimaryGnd | PinRole::SecondaryGnd | PinRole::BuckGnd
        )
    }

    /// Isolated-domain roles: entries carrying these must declare isolation groups.
    pub fn is_isolated_domain(self) -> bool {
        matches!(
            self,
            PinRole::PrimaryVdd
                | PinRole::PrimaryGnd
                | PinRole::SecondaryVdd
                | PinRole::SecondaryGnd
        )
    }
}

impl std::fmt::Display for PinRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four constraint kinds checked during Phase 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    SupplyPair,
    MustBeConnected,
    DrivingPair,
    DifferentialPairMustBeDistinct,
}

impl ConstraintKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintKind::SupplyPair => "supply_pair",
            ConstraintKind::MustBeConnected => "must_be_connected",
            ConstraintKind::DrivingPair => "driving_pair",
            ConstraintKind::DifferentialPairMustBeDistinct => "differential_pair_must_be_distinct",
        }
    }
}

/// One constraint declaration; `pins` are entry pin names, interpreted per
/// kind (supply/differential pairs take exactly two, driving_pair exactly one
/// gate pin, must_be_connected one or more).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintDecl {
    pub kind: ConstraintKind,
    pub pins: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgPin {
    pub number: u32,
    pub name: String,
    pub role: PinRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartEntry {
    #[serde(skip)]
    pub part_type: String,
    pub pins: Vec<KgPin>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isolation_groups: Option<BTreeMap<String, Vec<u32>>>,
}

impl PartEntry {
    pub fn pin_by_name(&self, name: &str) -> Option<&KgPin> {
        self.pins.iter().find(|p| p.name == name)
    }

    pub fn pin_by_number(&self, number: u32) -> Option<&KgPin> {
        self.pins.iter().find(|p| p.number == number)
    }

    /// Isolation group containing `pin`, if the entry declares groups.
    pub fn isolation_group_of(&self, pin: u32) -> Option<&str> {
        self.isolation_groups.as_ref().and_then(|groups| {
            groups
                .iter()
                .find(|(_, pins)| pins.contains(&pin))
                .map(|(name, _)| name.as_str())
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    pub entries: BTreeMap<String, PartEntry>,
}

impl KnowledgeGraph {
    pub fn entry(&self, part_type: &str) -> Option<&PartEntry> {
        self.entries.get(part_type)
    }

    /// The declared role of `(part_type, pin)`.
    pub fn role_of(&self, part_type: &str, pin: u32) -> Result<PinRole, KgError> {
        let entry = self.entries.get(part_type).ok_or(KgError::UnknownPart {
            part_type: part_type.to_string(),
        })?;
        entry
            .pin_by_number(pin)
            .map(|p| p.role)
            .ok_or(KgError::UnknownPinNumber {
                part_type: part_type.to_string(),
                pin,
            })
    }
}

#[derive(Debug, Error)]
pub enum KgError {
    #[error("malformed KG document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("part {part_type}: unknown pin role {role:?}")]
    UnknownRole { part_type: String, role: String },
    #[error("part {part_type}: unknown constraint kind {kind:?}")]
    UnknownKind { part_type: String, kind: String },
    #[error("part {part_type}: no pins declared")]
    NoPins { part_type: String },
    #[error("part {part_type}: duplicate pin number {number}")]
    DuplicatePin { part_type: String, number: u32 },
    #[error("part {part_type}: {kind} constraint takes {expected}, got {got} pins")]
    Arity {
        part_type: String,
        kind: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("part {part_type}: constraint names nonexistent pin {pin:?}")]
    UnknownConstraintPin { part_type: String, pin: String },
    #[error("part {part_type}: isolation groups must form >= 2 disjoint groups")]
    BadIsolation { part_type: String },
    #[error("part {part_type}: isolation group {group:?} names nonexistent pin {pin}")]
    IsolationUnknownPin {
        part_type: String,
        group: String,
        pin: u32,
    },
    #[error("unknown part type {part_type}")]
    UnknownPart { part_type: String },
    #[error("part {part_type}: unknown pin {pin}")]
    UnknownPinNumber { part_type: String, pin: u32 },
}

// Raw mirror of the on-disk shape; roles and kinds stay strings until
// validation so the error can name the offending identifier.
#[derive(Debug, Deserialize)]
struct RawKgDoc {
    parts: BTreeMap<String, RawEntry>,
}

#[derive(Debug, Deserialize)]
struct RawEntry {
    pins: Vec<RawPin>,
    #[serde(default)]
    constraints: Vec<RawConstraint>,
    #[serde(default)]
    attributes: BTreeMap<String, String>,
    #[serde(default)]
    isolation_groups: Option<BTreeMap<String, Vec<u32>>>,
}

#[derive(Debug, Deserialize)]
struct RawPin {
    number: u32,
    name: String,
    role: String,
}

#[derive(Debug, Deserialize)]
struct RawConstraint {
    kind: String,
    pins: Vec<String>,
}

/// Loads a KG document, rejecting unknown roles and kinds (fail-closed),
/// arity violations, constraints naming nonexistent pins, and malformed
/// isolation groups.
pub fn parse_kg(bytes: &[u8]) -> Result<KnowledgeGraph, KgError> {
    let raw: RawKgDoc = serde_json::from_slice(bytes).map_err(|e| KgError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut entries = BTreeMap::new();
    for (part_type, raw_entry) in raw.parts {
        let entry = validate_entry(&part_type, raw_entry)?;
        entries.insert(part_type, entry);
    }
    Ok(KnowledgeGraph { entries })
}

fn validate_entry(part_type: &str, raw: RawEntry) -> Result<PartEntry, KgError> {
    if raw.pins.is_empty() {
        return Err(KgError::NoPins {
            part_type: part_type.to_string(),
        });
    }
    let mut pins = Vec::with_capacity(raw.pins.len());
    let mut numbers = BTreeSet::new();
    for pin in raw.pins {
        let role = PinRole::parse(&pin.role).ok_or_else(|| KgError::UnknownRole {
            part_type: part_type.to_string(),
            role: pin.role.clone(),
        })?;
        if !numbers.insert(pin.number) {
            return Err(KgError::DuplicatePin {
                part_type: part_type.to_string(),
                number: pin.number,
            });
        }
        pins.push(KgPin {
            number: pin.number,
            name: pin.name,
            role,
        });
    }
    let mut constraints = Vec::with_capacity(raw.constraints.len());
    for decl in raw.constraints {
        let kind = match decl.kind.as_str() {
            "supply_pair" => ConstraintKind::SupplyPair,
            "must_be_connected" => ConstraintKind::MustBeConnected,
            "driving_pair" => ConstraintKind::DrivingPair,
            "differential_pair_must_be_distinct" => ConstraintKind::DifferentialPairMustBeDistinct,
            _ => {
                return Err(KgError::UnknownKind {
                    part_type: part_type.to_string(),
                    kind: decl.kind,
                })
            }
        };
        let arity_ok = match kind {
            ConstraintKind::SupplyPair | ConstraintKind::DifferentialPairMustBeDistinct => {
                decl.pins.len() == 2
            }
            ConstraintKind::MustBeConnected => !decl.pins.is_empty(),
            ConstraintKind::DrivingPair => decl.pins.len() == 1,
        };
        if !arity_ok {
            return Err(KgError::Arity {
                part_type: part_type.to_string(),
                kind: kind.as_str(),
                expected: match kind {
                    ConstraintKind::SupplyPair | ConstraintKind::DifferentialPairMustBeDistinct => {
                        "exactly 2"
                    }
                    ConstraintKind::MustBeConnected => "at least 1",
                    ConstraintKind::DrivingPair => "exactly 1",
                },
                got: decl.pins.len(),
            });
        }
        for name in &decl.pins {
            if !pins.iter().any(|p| &p.name == name) {
                return Err(KgError::UnknownConstraintPin {
                    part_type: part_type.to_string(),
                    pin: name.clone(),
                });
            }
        }
        constraints.push(ConstraintDecl {
            kind,
            pins: decl.pins,
        });
    }
    if let Some(groups) = &raw.isolation_groups {
        if groups.len() < 2 {
            return Err(KgError::BadIsolation {
                part_type: part_type.to_string(),
            });
        }
        let mut seen = BTreeSet::new();
        for (group, members) in groups {
            for pin in members {
                if !numbers.contains(pin) {
                    return Err(KgError::IsolationUnknownPin {
                        part_type: part_type.to_string(),
                        group: group.clone(),
                        pin: *pin,
                    });
                }
                if !seen.insert(*pin) {
                    // a pin in two groups breaks disjointness
                    return Err(KgError::BadIsolation {
                        part_type: part_type.to_string(),
                    });
                }
            }
        }
    }
    Ok(PartEntry {
        part_type: part_type.to_string(),
        pins,
        constraints,
        attributes: raw.attributes,
        isolation_groups: raw.isolation_groups,
    })
}

/// Canonical serialization of a whole KG (entry order = sorted part type).
pub fn serialize_kg(kg: &KnowledgeGraph) -> Vec<u8> {
    #[derive(Serialize)]
    struct Doc<'a> {
        parts: &'a BTreeMap<String, PartEntry>,
    }
    let mut out = serde_json::to_vec_pretty(&Doc { parts: &kg.entries }).expect("kg serializes");
    out.push(b'\n');
    out
}

/// Authoring diagnostics. A clean KG yields an empty list; order is stable
/// (by part type, then rule).
pub fn lint_kg(kg: &KnowledgeGraph) -> Vec<String> {
    let mut diagnostics = Vec::new();
    for (part_type, entry) in &kg.entries {
        for pin in &entry.pins {
            if pin.role.is_supply() {
                let covered = entry
                    .constraints
                    .iter()
                    .any(|c| c.kind == ConstraintKind::SupplyPair && c.pins.contains(&pin.name));
                if !covered {
                    diagnostics.push(format!(
                        "{part_type}: supply pin {} ({}) not covered by a supply_pair constraint",
                        pin.name, pin.role
                    ));
                }
            }
        }
        let isolated = entry.pins.iter().any(|p| p.role.is_isolated_domain());
        if isolated && entry.isolation_groups.is_none() {
            diagnostics.push(format!("{part_type}: isolated part lacks isolation groups"));
        }
        for pin in &entry.pins {
            if pin.role == PinRole::MosfetGate {
                let covered = entry
                    .constraints
                    .iter()
                    .any(|c| c.kind == ConstraintKind::DrivingPair && c.pins.contains(&pin.name));
                if !covered {
                    diagnostics.push(format!(
                        "{part_type}: gate pin {} not covered by a driving_pair constraint",
                        pin.name
                    ));
                }
            }
        }
    }
    diagnostics
}

/// Token count of the entry's canonical serialization: maximal runs of
/// characters that are neither whitespace nor ASCII punctuation.
pub fn token_footprint(entry: &PartEntry) -> usize {
    let json = serde_json::to_string_pretty(entry).expect("entry serializes");
    json.split(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .filter(|t| !t.is_empty())
        .count()
}
