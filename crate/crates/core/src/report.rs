//! Run reports: what was measured, corrected and sent, and how the result
//! compares with the reference isometry.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::mbqc::ResourceCounts;
use crate::schedule::{CorrectionRecord, Finished, MeasurementRecord, MessageRecord, Mode, Schedule, XCorrection};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Coherent,
    Mbqc,
}

/// Where measurement outcomes came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeSpec {
    Seed(u64),
    Forced(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub protocol: Protocol,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x_correction: Option<XCorrection>,
    pub d: u64,
    pub outcomes: OutcomeSpec,
    /// Raw outcomes in measurement order; feeding them back as forced outcomes replays the run.
    pub outcome_vector: Vec<u64>,
    pub measurements: Vec<MeasurementRecord>,
    pub corrections: Vec<CorrectionRecord>,
    pub messages: Vec<MessageRecord>,
    pub requires_out_of_network: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub resource_counts: Option<ResourceCounts>,
    pub entangling_ops_applied: usize,
    pub fidelity_vs_oracle: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub fn from_run(
        protocol: Protocol,
        schedule: &Schedule,
        x_correction: Option<XCorrection>,
        outcomes: OutcomeSpec,
        finished: &Finished,
        resource_counts: Option<ResourceCounts>,
        fidelity: f64,
    ) -> Self {
        Self {
            version: REPORT_VERSION,
            protocol,
            mode: schedule.mode,
            x_correction,
            d: schedule.d,
            outcomes,
            outcome_vector: finished.outcomes.clone(),
            measurements: finished.measurements.clone(),
            corrections: finished.corrections.clone(),
            messages: finished.messages.clone(),
            requires_out_of_network: schedule.requires_out_of_network,
            resource_counts,
            entangling_ops_applied: finished.entangling_applied,
            fidelity_vs_oracle: fidelity,
            wall_time_ms: None,
        }
    }

    pub fn out_of_network_messages(&self) -> usize {
        self.messages.iter().filter(|m| !m.over_network).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let proto = match self.protocol {
            Protocol::Coherent => "coherent",
            Protocol::Mbqc => "mbqc",
        };
        let mode = match self.mode {
            Mode::Free => "free",
            Mode::Constrained => "constrained",
        };
        let _ = writeln!(s, "{proto} run, {mode} communication, d = {}", self.d);
        match &self.outcomes {
            OutcomeSpec::Seed(seed) => {
                let _ = writeln!(s, "outcomes sampled with seed {seed}");
            }
            OutcomeSpec::Forced(_) => {
                let _ = writeln!(s, "outcomes forced");
            }
        }
        let _ = writeln!(s, "measurements: {}", self.measurements.len());
        for m in &self.measurements {
            if m.raw == m.adjusted {
                let _ = writeln!(s, "  {:<16} r = {}", m.qudit, m.raw);
            } else {
                let _ = writeln!(s, "  {:<16} r = {} (adjusted {})", m.qudit, m.raw, m.adjusted);
            }
        }
        let applied = self.corrections.iter().filter(|c| c.exponent != 0).count();
        let _ = writeln!(s, "corrections: {} scheduled, {} nontrivial", self.corrections.len(), applied);
        let backward = self.messages.iter().filter(|m| m.direction == crate::schedule::Direction::Backward).count();
        let _ = writeln!(
            s,
            "classical messages: {} ({} outside the network, {} backward)",
            self.messages.len(),
            self.out_of_network_messages(),
            backward
        );
        if self.requires_out_of_network {
            let _ = writeln!(s, "note: source phases need communication outside the network");
        }
        if let Some(c) = &self.resource_counts {
            let _ = writeln!(
                s,
                "resources: {} qudits, {} entangling ops, {} extra messages",
                c.qudits, c.entangling_ops, c.classical_messages_extra
            );
        }
        let _ = writeln!(s, "entangling ops applied: {}", self.entangling_ops_applied);
        let _ = writeln!(s, "fidelity vs oracle: {:.12}", self.fidelity_vs_oracle);
        if let Some(t) = self.wall_time_ms {
            let _ = writeln!(s, "wall time: {t:.3} ms");
        }
        s
    }
}
