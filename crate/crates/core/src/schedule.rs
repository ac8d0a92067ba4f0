//! A protocol compiled to a flat list of quantum and classical steps, and the
//! interpreter that executes it on a [`QuditState`].
//!
//! Every correction exponent and every classical payload is a linear form over
//! measurement outcomes, so schedules stay data and can be inspected, shuffled
//! and replayed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::network::NetworkError;
use crate::state::{OutcomeSource, QuditState, StateError};

/// Refuse to simulate states with more amplitudes than this.
pub const STATE_AMPLITUDE_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Free,
    Constrained,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "free" => Ok(Mode::Free),
            "constrained" => Ok(Mode::Constrained),
            other => Err(format!("unknown mode {other:?} (free|constrained)")),
        }
    }
}

/// How auxiliary-qudit byproducts are handled in measurement-based runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XCorrection {
    /// Outcomes are adjusted classically and only outputs get X corrections.
    #[default]
    Propagate,
    /// Every node X-corrects its outgoing messages and Z-corrects its own auxiliaries.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliKind {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionReason {
    /// X byproduct left by an auxiliary measurement.
    AuxByproduct,
    /// Z on an auxiliary qudit undoing upstream byproducts (local variant).
    AuxPhase,
    /// `Z^{Lᵀr}` on a node's inputs after its outgoing messages were measured.
    NodePhase,
    /// Target-side `Z^σ` from directly reported outcomes.
    OutputPhase,
    /// Target-side `Z^σ` for the phases left by measuring the source inputs.
    SourcePhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
    Direct,
}

/// `coefficient · value(qudit)`.
pub type Term = (usize, u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    PrepareZero(usize),
    PreparePlus(usize),
    Cx { control: usize, target: usize, power: u64 },
    Cz { a: usize, b: usize, power: u64 },
    /// Fourier-basis measurement; the qudit leaves the register.
    Measure(usize),
    /// `adjusted(qudit) = raw(qudit) + Σ c·value(q)`.
    Adjust { qudit: usize, terms: Vec<Term> },
    Correct { qudit: usize, kind: PauliKind, terms: Vec<Term>, reason: CorrectionReason },
    Send { from: String, to: String, terms: Vec<Term>, over_network: bool, direction: Direction },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuditInfo {
    pub label: String,
    /// Node that holds the qudit when it is measured or output.
    pub holder: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub d: u64,
    pub mode: Mode,
    pub qudits: Vec<QuditInfo>,
    /// Qudits carrying the input state, in source order.
    pub inputs: Vec<usize>,
    /// Qudits carrying the result, in target order.
    pub outputs: Vec<usize>,
    pub ops: Vec<Op>,
    pub requires_out_of_network: bool,
}

impl Schedule {
    pub fn measurement_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, Op::Measure(_))).count()
    }

    pub fn measured_qudits(&self) -> Vec<usize> {
        self.ops.iter().filter_map(|op| if let Op::Measure(q) = op { Some(*q) } else { None }).collect()
    }

    /// Largest number of simultaneously live qudits during execution.
    pub fn peak_qudits(&self) -> usize {
        let mut live = self.inputs.len();
        let mut peak = live;
        for op in &self.ops {
            match op {
                Op::PrepareZero(_) | Op::PreparePlus(_) => {
                    live += 1;
                    peak = peak.max(live);
                }
                Op::Measure(_) => live -= 1,
                _ => {}
            }
        }
        peak
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("the composite map is not injective over Z_{d}, so no correction strategy exists")]
    NotInjective { d: u64 },
    #[error("input state has {actual} qudits of dimension {actual_d}, expected {expected} of dimension {expected_d}")]
    InputShape { expected: usize, expected_d: u64, actual: usize, actual_d: u64 },
    #[error("{expected} forced outcomes are needed, {actual} were given")]
    ForcedLength { expected: usize, actual: usize },
    #[error("{count} simultaneous qudits needed; the simulator is limited to {limit}")]
    TooLarge { count: usize, limit: usize },
    #[error("{measurements} measurements over Z_{d} give more than {limit} branches")]
    TooManyBranches { measurements: usize, d: u64, limit: u64 },
}

impl RunError {
    pub fn is_impossible_outcome(&self) -> bool {
        matches!(self, RunError::State(StateError::ImpossibleOutcome { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contribution {
    pub qudit: String,
    pub coefficient: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub qudit: String,
    pub holder: String,
    pub raw: u64,
    pub adjusted: u64,
    pub provenance: Vec<Contribution>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub qudit: String,
    pub kind: PauliKind,
    pub exponent: u64,
    pub reason: CorrectionReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub from: String,
    pub to: String,
    pub payload: u64,
    pub about: Vec<String>,
    pub over_network: bool,
    pub direction: Direction,
}

/// A Fourier measurement waiting for its outcome.
#[derive(Debug, Clone)]
pub struct Pending {
    pub qudit: usize,
    pub probabilities: Vec<f64>,
    branches: Vec<Vec<num_complex::Complex64>>,
    position: usize,
}

impl Pending {
    pub fn outcome_count(&self) -> usize {
        self.probabilities.len()
    }
}

/// Interpreter state for one run of a [`Schedule`]. Cloning it forks the run,
/// which is how branches are enumerated.
#[derive(Debug, Clone)]
pub struct Execution<'s> {
    schedule: &'s Schedule,
    pc: usize,
    state: QuditState,
    raw: Vec<Option<u64>>,
    adjusted: Vec<Option<u64>>,
    recording: bool,
    measurements: Vec<MeasurementRecord>,
    corrections: Vec<CorrectionRecord>,
    messages: Vec<MessageRecord>,
    entangling_applied: usize,
    outcomes: Vec<u64>,
}

/// What a completed run leaves behind.
#[derive(Debug, Clone)]
pub struct Finished {
    /// Output qudits in target order, labelled `0..ℓ`.
    pub output: QuditState,
    pub measurements: Vec<MeasurementRecord>,
    pub corrections: Vec<CorrectionRecord>,
    pub messages: Vec<MessageRecord>,
    pub entangling_applied: usize,
    /// Raw outcomes in measurement order.
    pub outcomes: Vec<u64>,
}

impl<'s> Execution<'s> {
    pub fn new(schedule: &'s Schedule, input: &QuditState) -> Result<Self, RunError> {
        if input.qudit_count() != schedule.inputs.len() || input.dimension() as u64 != schedule.d {
            return Err(RunError::InputShape {
                expected: schedule.inputs.len(),
                expected_d: schedule.d,
                actual: input.qudit_count(),
                actual_d: input.dimension() as u64,
            });
        }
        let peak = schedule.peak_qudits();
        if (0..peak).try_fold(1usize, |acc, _| acc.checked_mul(schedule.d as usize)).is_none_or(|s| s > STATE_AMPLITUDE_LIMIT)
        {
            let limit = (STATE_AMPLITUDE_LIMIT as f64).log(schedule.d as f64).floor() as usize;
            return Err(RunError::TooLarge { count: peak, limit });
        }
        let mut state = input.clone();
        state.relabel(schedule.inputs.clone())?;
        let n = schedule.qudits.len();
        Ok(Self {
            schedule,
            pc: 0,
            state,
            raw: vec![None; n],
            adjusted: vec![None; n],
            recording: true,
            measurements: Vec::new(),
            corrections: Vec::new(),
            messages: Vec::new(),
            entangling_applied: 0,
            outcomes: Vec::new(),
        })
    }

    /// Skip the ledgers; used when enumerating many branches.
    pub fn without_records(mut self) -> Self {
        self.recording = false;
        self
    }

    pub fn state(&self) -> &QuditState {
        &self.state
    }

    fn value(&self, q: usize) -> u64 {
        self.adjusted[q].or(self.raw[q]).expect("schedule reads an outcome before it is measured")
    }

    fn eval(&self, terms: &[Term]) -> u64 {
        let d = self.schedule.d;
        terms.iter().fold(0, |acc, &(q, c)| (acc + c % d * self.value(q)) % d)
    }

    fn label(&self, q: usize) -> &str {
        &self.schedule.qudits[q].label
    }

    /// Execute up to the next measurement. `None` means the schedule is done.
    pub fn advance(&mut self) -> Result<Option<Pending>, RunError> {
        let d = self.schedule.d;
        while self.pc < self.schedule.ops.len() {
            let op = &self.schedule.ops[self.pc];
            match op {
                Op::PrepareZero(q) => self.state.push_zero(*q)?,
                Op::PreparePlus(q) => self.state.push_plus(*q)?,
                Op::Cx { control, target, power } => {
                    let (c, t) = (self.state.position(*control)?, self.state.position(*target)?);
                    self.state.apply_cx(c, t, *power as i64)?;
                    self.entangling_applied += 1;
                }
                Op::Cz { a, b, power } => {
                    let (a, b) = (self.state.position(*a)?, self.state.position(*b)?);
                    self.state.apply_cz(a, b, *power as i64)?;
                    self.entangling_applied += 1;
                }
                Op::Measure(q) => {
                    let position = self.state.position(*q)?;
                    let (probabilities, branches) = self.state.fourier_branches(position)?;
                    return Ok(Some(Pending { qudit: *q, probabilities, branches, position }));
                }
                Op::Adjust { qudit, terms } => {
                    let shift = self.eval(terms);
                    let raw = self.raw[*qudit].expect("adjusting an unmeasured qudit");
                    let adjusted = (raw + shift) % d;
                    self.adjusted[*qudit] = Some(adjusted);
                    if self.recording {
                        let provenance = terms
                            .iter()
                            .map(|&(q, c)| Contribution { qudit: self.label(q).to_string(), coefficient: c % d })
                            .collect();
                        let label = self.label(*qudit).to_string();
                        if let Some(rec) = self.measurements.iter_mut().rev().find(|m| m.qudit == label) {
                            rec.adjusted = adjusted;
                            rec.provenance = provenance;
                        }
                    }
                }
                Op::Correct { qudit, kind, terms, reason } => {
                    let e = self.eval(terms);
                    if e != 0 {
                        let p = self.state.position(*qudit)?;
                        match kind {
                            PauliKind::X => self.state.apply_x(p, e as i64)?,
                            PauliKind::Z => self.state.apply_z(p, e as i64)?,
                        }
                    }
                    if self.recording {
                        self.corrections.push(CorrectionRecord {
                            qudit: self.label(*qudit).to_string(),
                            kind: *kind,
                            exponent: e,
                            reason: *reason,
                        });
                    }
                }
                Op::Send { from, to, terms, over_network, direction } => {
                    if self.recording {
                        let payload = self.eval(terms);
                        self.messages.push(MessageRecord {
                            from: from.clone(),
                            to: to.clone(),
                            payload,
                            about: terms.iter().map(|&(q, _)| self.label(q).to_string()).collect(),
                            over_network: *over_network,
                            direction: *direction,
                        });
                    }
                }
            }
            self.pc += 1;
        }
        Ok(None)
    }

    /// Commit outcome `r` for a pending measurement.
    pub fn resolve(&mut self, pending: &Pending, r: u64) -> Result<(), RunError> {
        let p = pending.probabilities[r as usize];
        if p < crate::state::IMPOSSIBLE_OUTCOME {
            return Err(StateError::ImpossibleOutcome { label: pending.qudit, outcome: r, probability: p }.into());
        }
        let branch = pending.branches[r as usize].clone();
        self.state.collapse(pending.position, branch, p);
        self.raw[pending.qudit] = Some(r);
        self.outcomes.push(r);
        if self.recording {
            let info = &self.schedule.qudits[pending.qudit];
            self.measurements.push(MeasurementRecord {
                qudit: info.label.clone(),
                holder: info.holder.clone(),
                raw: r,
                adjusted: r,
                provenance: Vec::new(),
            });
        }
        self.pc += 1;
        Ok(())
    }

    /// Run to completion drawing outcomes from `source`.
    pub fn run(mut self, source: &mut dyn OutcomeSource) -> Result<Finished, RunError> {
        while let Some(pending) = self.advance()? {
            let r = source.next_outcome(pending.qudit, &pending.probabilities)?;
            self.resolve(&pending, r)?;
        }
        self.finish()
    }

    /// Output state in target order. Call after [`advance`](Self::advance) returned `None`.
    pub fn finish(self) -> Result<Finished, RunError> {
        let mut output = self.state.reorder(&self.schedule.outputs)?;
        output.relabel((0..self.schedule.outputs.len()).collect())?;
        Ok(Finished {
            output,
            measurements: self.measurements,
            corrections: self.corrections,
            messages: self.messages,
            entangling_applied: self.entangling_applied,
            outcomes: self.outcomes,
        })
    }
}

/// Run with a forced outcome vector whose length must match the schedule.
pub fn run_forced(schedule: &Schedule, input: &QuditState, outcomes: &[u64]) -> Result<Finished, RunError> {
    let expected = schedule.measurement_count();
    if outcomes.len() != expected {
        return Err(RunError::ForcedLength { expected, actual: outcomes.len() });
    }
    Execution::new(schedule, input)?.run(&mut crate::state::ForcedOutcomes::new(outcomes.to_vec()))
}
