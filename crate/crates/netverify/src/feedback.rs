//! Rendering violation sets into the three feedback granularities handed
//! back to generators, and phase classification for failure reporting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::violation::{Phase, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackLevel {
    Full,
    Weak,
    None,
}

impl FeedbackLevel {
    pub fn parse(s: &str) -> Option<FeedbackLevel> {
        match s {
            "full" => Some(FeedbackLevel::Full),
            "weak" => Some(FeedbackLevel::Weak),
            "none" => Some(FeedbackLevel::None),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackLevel::Full => "full",
            FeedbackLevel::Weak => "weak",
            FeedbackLevel::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub level: FeedbackLevel,
    pub text: String,
    pub phase_histogram: BTreeMap<Phase, u32>,
}

fn weak_category(phase: Phase) -> &'static str {
    match phase {
        Phase::SyntaxErc => "Syntax/ERC check failed.",
        Phase::KgConstraint => "Constraint verification failed.",
        Phase::Topology => "Topology verification failed.",
        Phase::SystemTopology => "System topology verification failed.",
    }
}

/// Renders violations at a feedback level. Empty violations render as
/// `PASS` at every level. Full lists each violation message; Weak one fixed
/// category line per distinct failing phase; None a bare retry prompt.
pub fn render(violations: &[Violation], level: FeedbackLevel) -> FeedbackMessage {
    let phase_histogram = classify_phases(violations);
    if violations.is_empty() {
        return FeedbackMessage {
            level,
            text: "PASS".to_string(),
            phase_histogram,
        };
    }
    let text = match level {
        FeedbackLevel::Full => {
            let mut lines: Vec<&str> = violations.iter().map(|v| v.message.as_str()).collect();
            lines.push("Please fix these topology issues and provide the corrected code.");
            lines.join("\n")
        }
        FeedbackLevel::Weak => {
            let mut phases: Vec<Phase> = violations.iter().map(|v| v.phase).collect();
            phases.sort();
            phases.dedup();
            let mut lines: Vec<&str> = phases.into_iter().map(weak_category).collect();
            lines.push("Please fix these issues and provide the corrected code.");
            lines.join("\n")
        }
        FeedbackLevel::None => "Attempt failed. Please try again.".to_string(),
    };
    FeedbackMessage {
        level,
        text,
        phase_histogram,
    }
}

/// Attributes a failed trial to its earliest failing phase: the histogram is
/// `{earliest: 1}` for a non-empty violation list, empty otherwise.
pub fn classify_phases(violations: &[Violation]) -> BTreeMap<Phase, u32> {
    let mut histogram = BTreeMap::new();
    if let Some(earliest) = violations.iter().map(|v| v.phase).min() {
        histogram.insert(earliest, 1);
    }
    histogram
}

/// The wire-format report the loop harness hands to generators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub feedback: FeedbackSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackSection {
    pub level: FeedbackLevel,
    pub text: String,
}

impl VerifyReport {
    pub fn new(ok: bool, violations: Vec<Violation>, feedback: &FeedbackMessage) -> Self {
        VerifyReport {
            ok,
            violations,
            feedback: FeedbackSection {
                level: feedback.level,
                text: feedback.text.clone(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::violation::ViolationKind;

    fn c_direct_violation() -> Violation {
        ViolationKind::RuleViolated {
            tau: "C_DIRECT".into(),
            endpoint_a: "secondary_vdd".into(),
            endpoint_b: "secondary_gnd".into(),
            nets_a: vec!["VISO+".into()],
            nets_b: vec!["ISO_0V".into()],
            shared: false,
        }
        .into_violation()
    }

    #[test]
    fn full_text_is_exact() {
        let message = render(&[c_direct_violation()], FeedbackLevel::Full);
        assert_eq!(
            message.text,
            "C_DIRECT missing between secondary_vdd and secondary_gnd (nets ['VISO+'] vs ['ISO_0V'])\nPlease fix these topology issues and provide the corrected code."
        );
    }

    #[test]
    fn weak_text_is_exact() {
        let message = render(&[c_direct_violation()], FeedbackLevel::Weak);
        assert_eq!(
            message.text,
            "Topology verification failed.\nPlease fix these issues and provide the corrected code."
        );
    }

    #[test]
    fn none_text_is_exact() {
        let message = render(&[c_direct_violation()], FeedbackLevel::None);
        assert_eq!(message.text, "Attempt failed. Please try again.");
    }

    #[test]
    fn empty_is_pass_at_every_level() {
        for level in [
            FeedbackLevel::Full,
            FeedbackLevel::Weak,
            FeedbackLevel::None,
        ] {
            assert_eq!(render(&[], level).text, "PASS");
        }
    }

    #[test]
    fn weak_deduplicates_by_phase() {
        let violations = vec![c_direct_violation(), c_direct_violation()];
        let message = render(&violations, FeedbackLevel::Weak);
        assert_eq!(
            message
                .text
                .matches("Topology verification failed.")
                .count(),
            1
        );
    }

    #[test]
    fn level_monotonicity() {
        // two violation sets with the same failing phases but different
        // locations: None and Weak cannot tell them apart, Full can
        let a = vec![c_direct_violation()];
        let b = vec![ViolationKind::RuleViolated {
            tau: "R_SERIES".into(),
            endpoint_a: "gate_ho".into(),
            endpoint_b: "mosfet_gate".into(),
            nets_a: vec!["HO_DRV".into()],
            nets_b: vec!["GATE_H".into()],
            shared: false,
        }
        .into_violation()];
        assert_eq!(
            render(&a, FeedbackLevel::None).text,
            render(&b, FeedbackLevel::None).text
        );
        assert_eq!(
            render(&a, FeedbackLevel::Weak).text,
            render(&b, FeedbackLevel::Weak).text
        );
        assert_ne!(
            render(&a, FeedbackLevel::Full).text,
            render(&b, FeedbackLevel::Full).text
        );
        for violations in [&a, &b] {
            let full = render(violations, FeedbackLevel::Full).text;
            for v in violations.iter() {
                assert!(full.contains(&v.message));
            }
        }
    }

    #[test]
    fn earliest_phase_attribution() {
        let phase1 = ViolationKind::SingleEndpointNet {
            net: "X".into(),
            endpoints: 1,
        }
        .into_violation();
        let phase2 = ViolationKind::PinUnconnected {
            reference: "U1".into(),
            pin: "FB".into(),
        }
        .into_violation();
        let histogram = classify_phases(&[phase2, phase1]);
        assert_eq!(histogram.len(), 1);
        assert_eq!(histogram[&crate::violation::Phase::SyntaxErc], 1);
        assert!(classify_phases(&[]).is_empty());
    }
}
