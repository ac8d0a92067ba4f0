//! Linear network codes over Z_d, simulated classically, coherently on qudits,
//! and as one-way measurement-based computations on weighted graph states.
pub mod branch;
pub mod coherent;
pub mod format;
pub mod linalg;
pub mod mbqc;
pub mod network;
pub mod oracle;
pub mod report;
pub mod schedule;
pub mod state;
pub mod weyl;

pub use coherent::{coherent_schedule, run_coherent, CorrectionPlan};
pub use linalg::{LinalgError, RingElement, RingMatrix};
pub use mbqc::{compile, mbqc_schedule, resource_counts, run_mbqc, MbqcGeometry, ResourceCounts};
pub use network::{CodingNetwork, Link, NetworkError, NodeSpec, PortRef, Violation};
pub use report::{OutcomeSpec, Protocol, RunReport};
pub use schedule::{Execution, Mode, RunError, Schedule, XCorrection};
pub use state::{ForcedOutcomes, OutcomeSource, QuditState, SampledOutcomes, StateError};
