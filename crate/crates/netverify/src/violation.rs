//! Phase-tagged, location-bearing verification failures.
//!
//! Every violation is built through [`ViolationKind`], so the rendered
//! message is a pure function of the structured fields and the phase/code
//! always match the producing stage.

use serde::{Deserialize, Serialize};

/// The four verification stages, in fast-fail order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "phase1_syntax_erc")]
    SyntaxErc,
    #[serde(rename = "phase2_kg_constraint")]
    KgConstraint,
    #[serde(rename = "phase3_topology")]
    Topology,
    #[serde(rename = "phase4_system_topology")]
    SystemTopology,
}

impl Phase {
    pub fn number(self) -> u8 {
        match self {
            Phase::SyntaxErc => 1,
            Phase::KgConstraint => 2,
            Phase::Topology => 3,
            Phase::SystemTopology => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Phase::SyntaxErc => "Phase 1 (Syntax + ERC)",
            Phase::KgConstraint => "Phase 2 (KG Constraint)",
            Phase::Topology => "Phase 3 (Topology Check)",
            Phase::SystemTopology => "Phase 4 (System Topology)",
        }
    }

    pub const ALL: [Phase; 4] = [
        Phase::SyntaxErc,
        Phase::KgConstraint,
        Phase::Topology,
        Phase::SystemTopology,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub phase: Phase,
    pub code: String,
    pub subject: String,
    pub pins: Vec<String>,
    pub nets: Vec<String>,
    pub message: String,
}

/// Structured violation payloads. Construction renders the message once;
/// identical payloads always produce identical field sets and messages.
#[derive(Debug, Clone)]
pub enum ViolationKind {
    UnknownPart {
        reference: String,
    },
    SingleEndpointNet {
        net: String,
        endpoints: usize,
    },
    FloatingSupplyPin {
        reference: String,
        pin: String,
    },
    MultipleDrivers {
        net: String,
        // "REF.PIN" qualified names, sorted
        drivers: Vec<String>,
    },
    SupplyPairShorted {
        reference: String,
        vdd_pin: String,
        gnd_pin: String,
        net: String,
    },
    PinUnconnected {
        reference: String,
        pin: String,
    },
    GateNetFloating {
        reference: String,
        pin: String,
        net: Option<String>,
    },
    DifferentialPairShared {
        reference: String,
        plus_pin: String,
        minus_pin: String,
        net: String,
    },
    IsolationBridged {
        reference: String,
        pin_a: String,
        pin_b: String,
        net: String,
    },
    RuleUnresolved {
        tau: String,
        endpoint_a: String,
        endpoint_b: String,
        detail: String,
    },
    RuleViolated {
        tau: String,
        endpoint_a: String,
        endpoint_b: String,
        nets_a: Vec<String>,
        nets_b: Vec<String>,
        shared: bool,
    },
    SkeletonPortUnbound {
        port: String,
    },
    SkeletonUnmatched {
        missing: Vec<String>,
    },
    BudgetExceeded {
        budget: u64,
    },
    SemanticViolated {
        name: String,
        detail: String,
    },
    GeneratorFailure {
        kind: String,
        detail: String,
    },
    ParseFailure {
        detail: String,
    },
}

/// Python-style list rendering used by the topology rule messages,
/// e.g. `['VISO+']` or `['A', 'B']`.
pub fn net_list(nets: &[String]) -> String {
    let quoted: Vec<String> = nets.iter().map(|n| format!("'{n}'")).collect();
    format!("[{}]", quoted.join(", "))
}

impl ViolationKind {
    pub fn into_violation(self) -> Violation {
        match self {
            ViolationKind::UnknownPart { reference } => Violation {
                phase: Phase::SyntaxErc,
                code: "unknown_part".into(),
                message: format!("{reference}: unknown part type"),
                subject: reference,
                pins: vec![],
                nets: vec![],
            },
            ViolationKind::SingleEndpointNet { net, endpoints } => Violation {
                phase: Phase::SyntaxErc,
                code: "single_endpoint_net".into(),
                message: if endpoints == 0 {
                    format!("net {net} has no endpoints")
                } else {
                    format!("net {net} has only one endpoint")
                },
                subject: net.clone(),
                pins: vec![],
                nets: vec![net],
            },
            ViolationKind::FloatingSupplyPin { reference, pin } => Violation {
                phase: Phase::SyntaxErc,
                code: "floating_supply_pin".into(),
                message: format!("{reference}: supply pin {pin} is unconnected"),
                subject: reference,
                pins: vec![pin],
                nets: vec![],
            },
            ViolationKind::MultipleDrivers { net, drivers } => Violation {
                phase: Phase::SyntaxErc,
                code: "multiple_drivers".into(),
                message: format!("net {net} has multiple drivers ({})", drivers.join(", ")),
                subject: net.clone(),
                pins: drivers,
                nets: vec![net],
            },
            ViolationKind::SupplyPairShorted {
                reference,
                vdd_pin,
                gnd_pin,
                net,
            } => Violation {
                phase: Phase::KgConstraint,
                code: "supply_pair_shorted".into(),
                message: format!(
                    "{reference}: supply pair shorted ({vdd_pin} and {gnd_pin} on {net})"
                ),
                subject: reference,
                pins: vec![vdd_pin, gnd_pin],
                nets: vec![net],
            },
            ViolationKind::PinUnconnected { reference, pin } => Violation {
                phase: Phase::KgConstraint,
                code: "pin_unconnected".into(),
                message: format!("{reference}: pin {pin} is unconnected"),
                subject: reference,
                pins: vec![pin],
                nets: vec![],
            },
            ViolationKind::GateNetFloating {
                reference,
                pin,
                net,
            } => Violation {
                phase: Phase::KgConstraint,
                code: "gate_net_floating".into(),
                message: match &net {
                    Some(net) => format!("{reference}: gate net appears floating ({pin} on {net})"),
                    None => format!("{reference}: gate net appears floating ({pin} unconnected)"),
                },
                subject: reference,
                pins: vec![pin],
                nets: net.into_iter().collect(),
            },
            ViolationKind::DifferentialPairShared {
                reference,
                plus_pin,
                minus_pin,
                net,
            } => Violation {
                phase: Phase::KgConstraint,
                code: "differential_pair_shared".into(),
                message: format!("{reference}: differential pins on same net ({plus_pin}={net})"),
                subject: reference,
                pins: vec![plus_pin, minus_pin],
                nets: vec![net],
            },
            ViolationKind::IsolationBridged {
                reference,
                pin_a,
                pin_b,
                net,
            } => Violation {
                phase: Phase::KgConstraint,
                code: "isolation_bridged".into(),
                message: format!(
                    "{reference}: isolation barrier bridged ({pin_a} and {pin_b} on {net})"
                ),
                subject: reference,
                pins: vec![pin_a, pin_b],
                nets: vec![net],
            },
            ViolationKind::RuleUnresolved {
                tau,
                endpoint_a,
                endpoint_b,
                detail,
            } => Violation {
                phase: Phase::Topology,
                code: "rule_unresolved".into(),
                message: format!("{tau} rule between {endpoint_a} and {endpoint_b}: {detail}"),
                subject: tau,
                pins: vec![endpoint_a, endpoint_b],
                nets: vec![],
            },
            ViolationKind::RuleViolated {
                tau,
                endpoint_a,
                endpoint_b,
                nets_a,
                nets_b,
                shared,
            } => {
                let message = if shared {
                    format!(
                        "{tau} violated between {endpoint_a} and {endpoint_b} (shared nets {})",
                        net_list(&nets_a)
                    )
                } else {
                    format!(
                        "{tau} missing between {endpoint_a} and {endpoint_b} (nets {} vs {})",
                        net_list(&nets_a),
                        net_list(&nets_b)
                    )
                };
                let mut nets = nets_a;
                nets.extend(nets_b);
                Violation {
                    phase: Phase::Topology,
                    code: "rule_violated".into(),
                    message,
                    subject: tau,
                    pins: vec![endpoint_a, endpoint_b],
                    nets,
                }
            }
            ViolationKind::SkeletonPortUnbound { port } => Violation {
                phase: Phase::SystemTopology,
                code: "skeleton_port_unbound".into(),
                message: format!("skeleton port {port} resolves to no net"),
                subject: port,
                pins: vec![],
                nets: vec![],
            },
            ViolationKind::SkeletonUnmatched { missing } => Violation {
                phase: Phase::SystemTopology,
                code: "skeleton_unmatched".into(),
                message: format!("skeleton mismatch: missing [{}]", missing.join(", ")),
                subject: "skeleton".into(),
                pins: missing,
                nets: vec![],
            },
            ViolationKind::BudgetExceeded { budget } => Violation {
                phase: Phase::SystemTopology,
                code: "budget_exceeded".into(),
                message: format!("skeleton search budget exceeded ({budget} expansions)"),
                subject: "skeleton".into(),
                pins: vec![],
                nets: vec![],
            },
            ViolationKind::SemanticViolated { name, detail } => Violation {
                phase: Phase::SystemTopology,
                code: "semantic_violated".into(),
                message: format!("semantic constraint {name} failed: {detail}"),
                subject: name,
                pins: vec![],
                nets: vec![],
            },
            ViolationKind::GeneratorFailure { kind, detail } => Violation {
                phase: Phase::SyntaxErc,
                code: "generator_failure".into(),
                message: format!("generator failure ({kind}): {detail}"),
                subject: kind,
                pins: vec![],
                nets: vec![],
            },
            ViolationKind::ParseFailure { detail } => Violation {
                phase: Phase::SyntaxErc,
                code: "parse_error".into(),
                message: format!("circuit parse error: {detail}"),
                subject: "parse".into(),
                pins: vec![],
                nets: vec![],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_message_bytes() {
        let v = ViolationKind::SupplyPairShorted {
            reference: "U1".into(),
            vdd_pin: "+VIN".into(),
            gnd_pin: "-VIN".into(),
            net: "VIN".into(),
        }
        .into_violation();
        assert_eq!(v.message, "U1: supply pair shorted (+VIN and -VIN on VIN)");

        let v = ViolationKind::PinUnconnected {
            reference: "U1".into(),
            pin: "FB".into(),
        }
        .into_violation();
        assert_eq!(v.message, "U1: pin FB is unconnected");

        let v = ViolationKind::GateNetFloating {
            reference: "Q1".into(),
            pin: "G".into(),
            net: Some("GATE_H".into()),
        }
        .into_violation();
        assert_eq!(v.message, "Q1: gate net appears floating (G on GATE_H)");

        let v = ViolationKind::DifferentialPairShared {
            reference: "U1".into(),
            plus_pin: "+IN".into(),
            minus_pin: "-IN".into(),
            net: "SENSE".into(),
        }
        .into_violation();
        assert_eq!(v.message, "U1: differential pins on same net (+IN=SENSE)");
    }

    #[test]
    fn rule_message_bytes() {
        let v = ViolationKind::RuleViolated {
            tau: "C_DIRECT".into(),
            endpoint_a: "secondary_vdd".into(),
            endpoint_b: "secondary_gnd".into(),
            nets_a: vec!["VISO+".into()],
            nets_b: vec!["ISO_0V".into()],
            shared: false,
        }
        .into_violation();
        assert_eq!(
            v.message,
            "C_DIRECT missing between secondary_vdd and secondary_gnd (nets ['VISO+'] vs ['ISO_0V'])"
        );
        assert_eq!(v.phase, Phase::Topology);
    }
}
