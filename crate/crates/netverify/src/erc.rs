//! Phases 1–2: structural electrical-rule checks and fast-fail
//! knowledge-graph constraint evaluation.
//!
//! Phase 1 catches catastrophic wiring errors (unknown parts, dangling nets,
//! floating supply pins, driver conflicts); Phase 2 evaluates each part's
//! declared constraints and the isolation boundary. All checks are pure
//! functions producing [`Violation`] values, never faults.

use std::collections::BTreeMap;

use crate::circuit::{Circuit, Component};
use crate::kg::{ConstraintDecl, ConstraintKind, KnowledgeGraph, PinRole};
use crate::violation::{Phase, Violation, ViolationKind};

/// Phase 1 structural checks: unknown part types, nets with fewer than two
/// endpoints, floating supply pins that a must_be_connected constraint
/// names, and multiple `out`-role pins of distinct components on one net.
pub fn check_erc(circuit: &Circuit, kg: &KnowledgeGraph) -> Vec<Violation> {
    let mut violations = Vec::new();
    for comp in &circuit.components {
        if kg.entry(&comp.part_type).is_none() {
            violations.push(
                ViolationKind::UnknownPart {
                    reference: comp.reference.clone(),
                }
                .into_violation(),
            );
        }
    }
    for net in &circuit.nets {
        if net.endpoints.len() < 2 {
            violations.push(
                ViolationKind::SingleEndpointNet {
                    net: net.name.clone(),
                    endpoints: net.endpoints.len(),
                }
                .into_violation(),
            );
        }
    }
    for comp in &circuit.components {
        let Some(entry) = kg.entry(&comp.part_type) else {
            continue;
        };
        for pin in &entry.pins {
            if !pin.role.is_supply() {
                continue;
            }
            let named = entry
                .constraints
                .iter()
                .any(|c| c.kind == ConstraintKind::MustBeConnected && c.pins.contains(&pin.name));
            let floating = circuit
                .net_of(&comp.reference, pin.number)
                .ok()
                .flatten()
                .is_none();
            if named && floating {
                violations.push(
                    ViolationKind::FloatingSupplyPin {
                        reference: comp.reference.clone(),
                        pin: pin.name.clone(),
                    }
                    .into_violation(),
                );
            }
        }
    }
    // power pin conflict: out-role pins of two different components on one net
    let mut drivers_by_net: BTreeMap<&str, Vec<(String, String)>> = BTreeMap::new();
    for comp in &circuit.components {
        let Some(entry) = kg.entry(&comp.part_type) else {
            continue;
        };
        for pin in &entry.pins {
            if pin.role != PinRole::Out {
                continue;
            }
            if let Ok(Some(net)) = circuit.net_of(&comp.reference, pin.number) {
                drivers_by_net
                    .entry(net)
                    .or_default()
                    .push((comp.reference.clone(), pin.name.clone()));
            }
        }
    }
    for (net, drivers) in drivers_by_net {
        let distinct_refs: std::collections::BTreeSet<&str> =
            drivers.iter().map(|(r, _)| r.as_str()).collect();
        if distinct_refs.len() >= 2 {
            let mut qualified: Vec<String> =
                drivers.iter().map(|(r, p)| format!("{r}.{p}")).collect();
            qualified.sort();
            violations.push(
                ViolationKind::MultipleDrivers {
                    net: net.to_string(),
                    drivers: qualified,
                }
                .into_violation(),
            );
        }
    }
    sort_violations(&mut violations);
    violations
}

/// Evaluates one constraint declaration against a component's wiring.
/// must_be_connected yields one violation per floating named pin; the other
/// kinds yield at most one.
pub fn eval_constraint(
    decl: &ConstraintDecl,
    comp: &Component,
    circuit: &Circuit,
    kg: &KnowledgeGraph,
) -> Vec<Violation> {
    let Some(entry) = kg.entry(&comp.part_type) else {
        return Vec::new();
    };
    let net_of_name = |pin_name: &str| -> Option<String> {
        let pin = entry.pin_by_name(pin_name)?;
        circuit
            .net_of(&comp.reference, pin.number)
            .ok()
            .flatten()
            .map(str::to_string)
    };
    match decl.kind {
        ConstraintKind::SupplyPair => {
            let (vdd, gnd) = (&decl.pins[0], &decl.pins[1]);
            match (net_of_name(vdd), net_of_name(gnd)) {
                (Some(a), Some(b)) if a == b => vec![ViolationKind::SupplyPairShorted {
                    reference: comp.reference.clone(),
                    vdd_pin: vdd.clone(),
                    gnd_pin: gnd.clone(),
                    net: a,
                }
                .into_violation()],
                _ => Vec::new(),
            }
        }
        ConstraintKind::MustBeConnected => decl
            .pins
            .iter()
            .filter(|pin| net_of_name(pin).is_none())
            .map(|pin| {
                ViolationKind::PinUnconnected {
                    reference: comp.reference.clone(),
                    pin: pin.clone(),
                }
                .into_violation()
            })
            .collect(),
        ConstraintKind::DrivingPair => {
            let gate = &decl.pins[0];
            match net_of_name(gate) {
                None => vec![ViolationKind::GateNetFloating {
                    reference: comp.reference.clone(),
                    pin: gate.clone(),
                    net: None,
                }
                .into_violation()],
                Some(net) => {
                    let endpoints = circuit.net(&net).map(|n| n.endpoints.len()).unwrap_or(0);
                    if endpoints < 2 {
                        vec![ViolationKind::GateNetFloating {
                            reference: comp.reference.clone(),
                            pin: gate.clone(),
                            net: Some(net),
                        }
                        .into_violation()]
                    } else {
                        Vec::new()
                    }
                }
            }
        }
        ConstraintKind::DifferentialPairMustBeDistinct => {
            let (plus, minus) = (&decl.pins[0], &decl.pins[1]);
            match (net_of_name(plus), net_of_name(minus)) {
                (Some(a), Some(b)) if a == b => vec![ViolationKind::DifferentialPairShared {
                    reference: comp.reference.clone(),
                    plus_pin: plus.clone(),
                    minus_pin: minus.clone(),
                    net: a,
                }
                .into_violation()],
                _ => Vec::new(),
            }
        }
    }
}

/// Phase 2: per-part constraints plus isolation-boundary bridging (two pins
/// of one component in different isolation groups sharing a net).
pub fn check_intra(circuit: &Circuit, kg: &KnowledgeGraph) -> Vec<Violation> {
    let mut violations = Vec::new();
    for comp in &circuit.components {
        let Some(entry) = kg.entry(&comp.part_type) else {
            continue;
        };
        for decl in &entry.constraints {
            violations.extend(eval_constraint(decl, comp, circuit, kg));
        }
        if entry.isolation_groups.is_some() {
            for (i, pin_a) in entry.pins.iter().enumerate() {
                for pin_b in entry.pins.iter().skip(i + 1) {
                    let (ga, gb) = (
                        entry.isolation_group_of(pin_a.number),
                        entry.isolation_group_of(pin_b.number),
                    );
                    let (Some(ga), Some(gb)) = (ga, gb) else {
                        continue;
                    };
                    if ga == gb {
                        continue;
                    }
                    let na = circuit.net_of(&comp.reference, pin_a.number).ok().flatten();
                    let nb = circuit.net_of(&comp.reference, pin_b.number).ok().flatten();
                    if let (Some(na), Some(nb)) = (na, nb) {
                        if na == nb {
                            violations.push(
                                ViolationKind::IsolationBridged {
                                    reference: comp.reference.clone(),
                                    pin_a: pin_a.name.clone(),
                                    pin_b: pin_b.name.clone(),
                                    net: na.to_string(),
                                }
                                .into_violation(),
                            );
                        }
                    }
                }
            }
        }
    }
    sort_violations(&mut violations);
    violations
}

/// Phases 1 and 2 in fast-fail order: all Phase 1 violations first, then all
/// Phase 2, each block sorted by component ref, then pin name, then code.
pub fn run_phase12(circuit: &Circuit, kg: &KnowledgeGraph) -> Vec<Violation> {
    let mut violations = check_erc(circuit, kg);
    violations.extend(check_intra(circuit, kg));
    violations
}

fn sort_violations(violations: &mut [Violation]) {
    violations.sort_by(|a, b| {
        (a.phase, &a.subject, &a.pins, &a.code).cmp(&(b.phase, &b.subject, &b.pins, &b.code))
    });
}

/// Earliest failing phase of a violation list, if any.
pub fn earliest_phase(violations: &[Violation]) -> Option<Phase> {
    violations.iter().map(|v| v.phase).min()
}
