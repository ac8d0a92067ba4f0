//! Exhaustive enumeration of measurement branches.
//!
//! The walk is depth-first over a forked [`Execution`], so every prefix of the
//! outcome vector is simulated once. The top few levels fan out over rayon;
//! results are merged in outcome order, which keeps the summary independent
//! of thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::schedule::{Execution, RunError, Schedule};
use crate::state::{QuditState, IMPOSSIBLE_OUTCOME};

/// Largest `d^measurements` the enumerator accepts.
pub const BRANCH_LIMIT: u64 = 1 << 24;

/// Depth below which subtrees are handed to the thread pool.
const PARALLEL_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    /// Leaves reached.
    pub branches: u64,
    /// Outcomes skipped because their probability was below the cutoff.
    pub impossible: u64,
    pub min_fidelity: f64,
    /// Lexicographically first outcome vector whose fidelity fell below the tolerance.
    pub first_failure: Option<Vec<u64>>,
}

impl BranchSummary {
    fn empty() -> Self {
        Self { branches: 0, impossible: 0, min_fidelity: f64::INFINITY, first_failure: None }
    }

    fn merge(mut self, other: Self) -> Self {
        self.branches += other.branches;
        self.impossible += other.impossible;
        self.min_fidelity = self.min_fidelity.min(other.min_fidelity);
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
        self
    }

    pub fn all_pass(&self) -> bool {
        self.first_failure.is_none() && self.branches > 0
    }
}

/// Run every outcome branch of `schedule` on `input` and compare each output
/// with `expected`.
pub fn enumerate_branches(
    schedule: &Schedule,
    input: &QuditState,
    expected: &QuditState,
    tolerance: f64,
) -> Result<BranchSummary, RunError> {
    let measurements = schedule.measurement_count();
    let total = (0..measurements).try_fold(1u64, |acc, _| acc.checked_mul(schedule.d)).filter(|&t| t <= BRANCH_LIMIT);
    if total.is_none() {
        return Err(RunError::TooManyBranches { measurements, d: schedule.d, limit: BRANCH_LIMIT });
    }
    let exec = Execution::new(schedule, input)?.without_records();
    walk(exec, &mut Vec::new(), expected, tolerance)
}

fn walk(
    mut exec: Execution<'_>,
    prefix: &mut Vec<u64>,
    expected: &QuditState,
    tolerance: f64,
) -> Result<BranchSummary, RunError> {
    let Some(pending) = exec.advance()? else {
        let out = exec.finish()?.output;
        let fidelity = out.fidelity(expected)?;
        let mut s = BranchSummary::empty();
        s.branches = 1;
        s.min_fidelity = fidelity;
        if fidelity < 1.0 - tolerance {
            s.first_failure = Some(prefix.clone());
        }
        return Ok(s);
    };
    let child = |r: usize, prefix: &mut Vec<u64>| -> Result<BranchSummary, RunError> {
        if pending.probabilities[r] < IMPOSSIBLE_OUTCOME {
            return Ok(BranchSummary { impossible: 1, ..BranchSummary::empty() });
        }
        let mut next = exec.clone();
        next.resolve(&pending, r as u64)?;
        prefix.push(r as u64);
        let s = walk(next, prefix, expected, tolerance);
        prefix.pop();
        s
    };
    let n = pending.outcome_count();
    if prefix.len() < PARALLEL_DEPTH {
        let parts: Vec<Result<BranchSummary, RunError>> = (0..n)
            .into_par_iter()
            .map(|r| {
                let mut own = prefix.clone();
                child(r, &mut own)
            })
            .collect();
        parts.into_iter().try_fold(BranchSummary::empty(), |acc, p| Ok(acc.merge(p?)))
    } else {
        let mut acc = BranchSummary::empty();
        for r in 0..n {
            acc = acc.merge(child(r, prefix)?);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::coherent_schedule;
    use crate::network::fixtures::identity_wire;
    use crate::schedule::Mode;

    #[test]
    fn identity_wire_every_branch() {
        let sched = coherent_schedule(&identity_wire(3), Mode::Free).unwrap();
        let psi = QuditState::from_amplitudes(
            3,
            vec![num_complex::Complex64::new(0.6, 0.0), num_complex::Complex64::new(0.0, 0.8), 0.0.into()],
        )
        .unwrap();
        let s = enumerate_branches(&sched, &psi, &psi, 1e-9).unwrap();
        assert_eq!(s.branches, 3);
        assert!(s.all_pass());
    }

    #[test]
    fn refuses_huge_trees() {
        let sched = Schedule { ops: vec![crate::schedule::Op::Measure(0); 30], ..coherent_schedule(&identity_wire(2), Mode::Free).unwrap() };
        let psi = QuditState::basis(&[0], 2).unwrap();
        assert!(matches!(enumerate_branches(&sched, &psi, &psi, 1e-9), Err(RunError::TooManyBranches { .. })));
    }
}
