//! Dense state vectors over qudits of arbitrary dimension.
//!
//! Basis index is the base-`d` digit string of the qudit values with position 0
//! the most significant digit. Every position also carries an external label so
//! callers can keep addressing qudits after others have been measured away.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Forced outcomes below this probability are refused.
pub const IMPOSSIBLE_OUTCOME: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("dimension {0} is below 2")]
    InvalidDimension(usize),
    #[error("qudit position {position} out of range for {count} qudits")]
    OutOfRange { position: usize, count: usize },
    #[error("no qudit labelled {0}")]
    UnknownLabel(usize),
    #[error("label {0} is already in use")]
    DuplicateLabel(usize),
    #[error("two-qudit gate needs distinct qudits, got {0} twice")]
    SameQudit(usize),
    #[error("expected {expected} amplitudes, got {actual}")]
    AmplitudeCount { expected: usize, actual: usize },
    #[error("states differ in shape ({0} vs {1})")]
    ShapeMismatch(String, String),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("outcome {outcome} on qudit {label} has probability {probability:e}")]
    ImpossibleOutcome { label: usize, outcome: u64, probability: f64 },
    #[error("outcome source exhausted after {0} outcomes")]
    OutcomesExhausted(usize),
    #[error("forced outcome {outcome} is not below the dimension {d}")]
    OutcomeOutOfRange { outcome: u64, d: usize },
}

/// Supplies measurement outcomes: either forced or sampled from the Born rule.
pub trait OutcomeSource {
    /// Pick an outcome for the qudit `label` given the Born probabilities.
    fn next_outcome(&mut self, label: usize, probabilities: &[f64]) -> Result<u64, StateError>;
}

/// Replays a fixed outcome list in measurement order.
#[derive(Debug, Clone)]
pub struct ForcedOutcomes {
    outcomes: Vec<u64>,
    used: usize,
}

impl ForcedOutcomes {
    pub fn new(outcomes: Vec<u64>) -> Self {
        Self { outcomes, used: 0 }
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.outcomes.len() - self.used
    }
}

impl OutcomeSource for ForcedOutcomes {
    fn next_outcome(&mut self, label: usize, probabilities: &[f64]) -> Result<u64, StateError> {
        let r = *self.outcomes.get(self.used).ok_or(StateError::OutcomesExhausted(self.used))?;
        if r as usize >= probabilities.len() {
            return Err(StateError::OutcomeOutOfRange { outcome: r, d: probabilities.len() });
        }
        let p = probabilities[r as usize];
        if p < IMPOSSIBLE_OUTCOME {
            return Err(StateError::ImpossibleOutcome { label, outcome: r, probability: p });
        }
        self.used += 1;
        Ok(r)
    }
}

/// Born-rule sampling from a ChaCha stream seeded with one 64-bit seed.
#[derive(Debug, Clone)]
pub struct SampledOutcomes {
    rng: ChaCha8Rng,
}

impl SampledOutcomes {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl OutcomeSource for SampledOutcomes {
    fn next_outcome(&mut self, _label: usize, probabilities: &[f64]) -> Result<u64, StateError> {
        let total: f64 = probabilities.iter().sum();
        let mut u = self.rng.random::<f64>() * total;
        let mut last = 0;
        for (r, &p) in probabilities.iter().enumerate() {
            if p < IMPOSSIBLE_OUTCOME {
                continue;
            }
            last = r;
            if u < p {
                return Ok(r as u64);
            }
            u -= p;
        }
        Ok(last as u64)
    }
}

/// `ω^k` for `ω = e^{2πi/d}`.
pub fn root_of_unity(d: usize, k: i64) -> Complex64 {
    let k = k.rem_euclid(d as i64);
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

#[derive(Clone, PartialEq)]
pub struct QuditState {
    d: usize,
    labels: Vec<usize>,
    amps: Vec<Complex64>,
    omega: Vec<Complex64>,
}

impl fmt::Debug for QuditState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuditState")
            .field("d", &self.d)
            .field("labels", &self.labels)
            .field("amps", &self.amps)
            .finish()
    }
}

fn omega_table(d: usize) -> Vec<Complex64> {
    (0..d).map(|k| root_of_unity(d, k as i64)).collect()
}

impl QuditState {
    /// `|0…0⟩` on `n` qudits labelled `0..n`.
    pub fn zero(n: usize, d: usize) -> Result<Self, StateError> {
        Self::basis(&vec![0; n], d)
    }

    /// A standard basis state, qudit 0 first.
    pub fn basis(values: &[u64], d: usize) -> Result<Self, StateError> {
        if d < 2 {
            return Err(StateError::InvalidDimension(d));
        }
        let mut index = 0usize;
        for &v in values {
            index = index * d + (v as usize % d);
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); d.pow(values.len() as u32)];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { d, labels: (0..values.len()).collect(), amps, omega: omega_table(d) })
    }

    /// Wrap an amplitude vector; it is normalized, labels are `0..n`.
    pub fn from_amplitudes(d: usize, amps: Vec<Complex64>) -> Result<Self, StateError> {
        if d < 2 {
            return Err(StateError::InvalidDimension(d));
        }
        let mut n = 0;
        let mut size = 1usize;
        while size < amps.len() {
            size *= d;
            n += 1;
        }
        if size != amps.len() {
            return Err(StateError::AmplitudeCount { expected: size, actual: amps.len() });
        }
        let mut s = Self { d, labels: (0..n).collect(), amps, omega: omega_table(d) };
        s.normalize()?;
        Ok(s)
    }

    /// Haar-random pure state on `n` qudits.
    pub fn random<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Self, StateError> {
        let amps = (0..d.pow(n as u32))
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_amplitudes(d, amps)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn qudit_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, values: &[u64]) -> Complex64 {
        let index = values.iter().fold(0usize, |acc, &v| acc * self.d + v as usize % self.d);
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<(), StateError> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(StateError::ZeroNorm);
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    /// Replace the external labels, position by position.
    pub fn relabel(&mut self, labels: Vec<usize>) -> Result<(), StateError> {
        if labels.len() != self.labels.len() {
            return Err(StateError::AmplitudeCount { expected: self.labels.len(), actual: labels.len() });
        }
        let mut seen = labels.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(StateError::DuplicateLabel(w[0]));
        }
        self.labels = labels;
        Ok(())
    }

    pub fn position(&self, label: usize) -> Result<usize, StateError> {
        self.labels.iter().position(|&l| l == label).ok_or(StateError::UnknownLabel(label))
    }

    fn check(&self, q: usize) -> Result<(), StateError> {
        if q >= self.labels.len() {
            Err(StateError::OutOfRange { position: q, count: self.labels.len() })
        } else {
            Ok(())
        }
    }

    /// Block size below position `q`.
    fn stride(&self, q: usize) -> usize {
        self.d.pow((self.labels.len() - 1 - q) as u32)
    }

    fn digit(&self, index: usize, stride: usize) -> usize {
        (index / stride) % self.d
    }

    /// `X^power` on position `q`: `|v⟩ ↦ |v + power⟩`.
    pub fn apply_x(&mut self, q: usize, power: i64) -> Result<(), StateError> {
        self.check(q)?;
        let d = self.d;
        let shift = power.rem_euclid(d as i64) as usize;
        if shift == 0 {
            return Ok(());
        }
        let stride = self.stride(q);
        let block = stride * d;
        let mut column = vec![Complex64::new(0.0, 0.0); d];
        for base in (0..self.amps.len()).step_by(block) {
            for low in 0..stride {
                for v in 0..d {
                    column[(v + shift) % d] = self.amps[base + v * stride + low];
                }
                for (v, a) in column.iter().enumerate() {
                    self.amps[base + v * stride + low] = *a;
                }
            }
        }
        Ok(())
    }

    /// `Z^power` on position `q`: `|v⟩ ↦ ω^{power·v}|v⟩`.
    pub fn apply_z(&mut self, q: usize, power: i64) -> Result<(), StateError> {
        self.check(q)?;
        let d = self.d;
        let p = power.rem_euclid(d as i64) as usize;
        if p == 0 {
            return Ok(());
        }
        let stride = self.stride(q);
        for (i, a) in self.amps.iter_mut().enumerate() {
            let v = (i / stride) % d;
            *a *= self.omega[(p * v) % d];
        }
        Ok(())
    }

    /// `F` (or `F†`) with entries `d^{-1/2} ω^{±xr}` on position `q`.
    pub fn apply_f(&mut self, q: usize, inverse: bool) -> Result<(), StateError> {
        self.check(q)?;
        let d = self.d;
        let stride = self.stride(q);
        let block = stride * d;
        let scale = 1.0 / (d as f64).sqrt();
        let mut column = vec![Complex64::new(0.0, 0.0); d];
        for base in (0..self.amps.len()).step_by(block) {
            for low in 0..stride {
                for (x, slot) in column.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for r in 0..d {
                        let k = if inverse { (d - (x * r) % d) % d } else { (x * r) % d };
                        acc += self.omega[k] * self.amps[base + r * stride + low];
                    }
                    *slot = acc * scale;
                }
                for (x, a) in column.iter().enumerate() {
                    self.amps[base + x * stride + low] = *a;
                }
            }
        }
        Ok(())
    }

    /// `cX^power`: `|c⟩|t⟩ ↦ |c⟩|t + power·c⟩`.
    pub fn apply_cx(&mut self, control: usize, target: usize, power: i64) -> Result<(), StateError> {
        self.check(control)?;
        self.check(target)?;
        if control == target {
            return Err(StateError::SameQudit(control));
        }
        let d = self.d;
        let p = power.rem_euclid(d as i64) as usize;
        if p == 0 {
            return Ok(());
        }
        let (cs, ts) = (self.stride(control), self.stride(target));
        let old = self.amps.clone();
        for (i, a) in old.iter().enumerate() {
            let c = self.digit(i, cs);
            let t = self.digit(i, ts);
            let t2 = (t + p * c) % d;
            let j = i - t * ts + t2 * ts;
            self.amps[j] = *a;
        }
        Ok(())
    }

    /// `cZ^power`: `|u⟩|v⟩ ↦ ω^{power·u·v}|u⟩|v⟩`.
    pub fn apply_cz(&mut self, a: usize, b: usize, power: i64) -> Result<(), StateError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(StateError::SameQudit(a));
        }
        let d = self.d;
        let p = power.rem_euclid(d as i64) as usize;
        if p == 0 {
            return Ok(());
        }
        let (sa, sb) = (self.stride(a), self.stride(b));
        for (i, amp) in self.amps.iter_mut().enumerate() {
            let u = (i / sa) % d;
            let v = (i / sb) % d;
            *amp *= self.omega[(p * u * v) % d];
        }
        Ok(())
    }

    /// Append a qudit in `|0⟩` as the new least significant position.
    pub fn push_zero(&mut self, label: usize) -> Result<(), StateError> {
        self.push(label, false)
    }

    /// Append a qudit in `|+⟩` as the new least significant position.
    pub fn push_plus(&mut self, label: usize) -> Result<(), StateError> {
        self.push(label, true)
    }

    fn push(&mut self, label: usize, plus: bool) -> Result<(), StateError> {
        if self.labels.contains(&label) {
            return Err(StateError::DuplicateLabel(label));
        }
        let d = self.d;
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len() * d];
        if plus {
            let s = 1.0 / (d as f64).sqrt();
            for (i, a) in self.amps.iter().enumerate() {
                for v in 0..d {
                    amps[i * d + v] = a * s;
                }
            }
        } else {
            for (i, a) in self.amps.iter().enumerate() {
                amps[i * d] = *a;
            }
        }
        self.amps = amps;
        self.labels.push(label);
        Ok(())
    }

    /// Permute positions so that the labels appear in the given order.
    pub fn reorder(&self, order: &[usize]) -> Result<QuditState, StateError> {
        let n = self.labels.len();
        if order.len() != n {
            return Err(StateError::ShapeMismatch(format!("{order:?}"), format!("{:?}", self.labels)));
        }
        let positions: Vec<usize> = order.iter().map(|&l| self.position(l)).collect::<Result<_, _>>()?;
        let strides: Vec<usize> = positions.iter().map(|&p| self.stride(p)).collect();
        let d = self.d;
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (j, slot) in amps.iter_mut().enumerate() {
            // j enumerates the new digit string; build the matching old index.
            let mut rest = j;
            let mut old = 0;
            for k in (0..n).rev() {
                old += (rest % d) * strides[k];
                rest /= d;
            }
            *slot = self.amps[old];
        }
        Ok(QuditState { d, labels: order.to_vec(), amps, omega: self.omega.clone() })
    }

    /// Born probabilities and post-measurement vectors for a Fourier-basis
    /// measurement of position `q`; outcome `r` projects onto `F|r⟩`.
    pub fn fourier_branches(&self, q: usize) -> Result<(Vec<f64>, Vec<Vec<Complex64>>), StateError> {
        self.check(q)?;
        let d = self.d;
        let stride = self.stride(q);
        let block = stride * d;
        let scale = 1.0 / (d as f64).sqrt();
        let rest = self.amps.len() / d;
        let mut branches = vec![vec![Complex64::new(0.0, 0.0); rest]; d];
        for (hi, base) in (0..self.amps.len()).step_by(block).enumerate() {
            for low in 0..stride {
                let out = hi * stride + low;
                for (r, branch) in branches.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x in 0..d {
                        // ⟨ω_r|x⟩ = ω^{-rx}/√d
                        acc += self.omega[(d - (r * x) % d) % d] * self.amps[base + x * stride + low];
                    }
                    branch[out] = acc * scale;
                }
            }
        }
        let probabilities = branches.iter().map(|b| b.iter().map(|a| a.norm_sqr()).sum()).collect();
        Ok((probabilities, branches))
    }

    /// Measure position `q` in the Fourier basis, remove it, and renormalize.
    pub fn measure_fourier(&mut self, q: usize, source: &mut dyn OutcomeSource) -> Result<u64, StateError> {
        let (probabilities, mut branches) = self.fourier_branches(q)?;
        let label = self.labels[q];
        let r = source.next_outcome(label, &probabilities)?;
        let p = probabilities[r as usize];
        if p < IMPOSSIBLE_OUTCOME {
            return Err(StateError::ImpossibleOutcome { label, outcome: r, probability: p });
        }
        self.collapse(q, std::mem::take(&mut branches[r as usize]), p);
        Ok(r)
    }

    /// Install a branch computed by [`fourier_branches`](Self::fourier_branches).
    pub fn collapse(&mut self, q: usize, branch: Vec<Complex64>, probability: f64) {
        let s = 1.0 / probability.sqrt();
        self.amps = branch.into_iter().map(|a| a * s).collect();
        self.labels.remove(q);
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuditState) -> Result<Complex64, StateError> {
        if self.d != other.d || self.labels.len() != other.labels.len() {
            return Err(StateError::ShapeMismatch(
                format!("d={} n={}", self.d, self.labels.len()),
                format!("d={} n={}", other.d, other.labels.len()),
            ));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|`, insensitive to global phase.
    pub fn fidelity(&self, other: &QuditState) -> Result<f64, StateError> {
        Ok(self.inner(other)?.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn plus(d: usize) -> QuditState {
        let mut s = QuditState::zero(1, d).unwrap();
        s.apply_f(0, false).unwrap();
        s
    }

    fn omega_r(d: usize, r: u64) -> QuditState {
        let mut s = QuditState::basis(&[r], d).unwrap();
        s.apply_f(0, false).unwrap();
        s
    }

    #[test]
    fn shift_and_phase() {
        let mut s = QuditState::basis(&[0], 3).unwrap();
        s.apply_x(0, 1).unwrap();
        assert!((s.amplitude(&[1]).re - 1.0).abs() < TOL);

        let mut s = QuditState::basis(&[1], 4).unwrap();
        s.apply_z(0, 1).unwrap();
        let a = s.amplitude(&[1]);
        assert!(a.re.abs() < TOL && (a.im - 1.0).abs() < TOL);

        let mut p = plus(5);
        p.apply_x(0, 3).unwrap();
        assert!((p.fidelity(&plus(5)).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn fourier_of_one_at_d2() {
        let s = omega_r(2, 1);
        let h = 1.0 / 2f64.sqrt();
        assert!((s.amplitude(&[0]).re - h).abs() < TOL);
        assert!((s.amplitude(&[1]).re + h).abs() < TOL);
    }

    #[test]
    fn controlled_gates() {
        let mut s = QuditState::basis(&[1, 0], 3).unwrap();
        s.apply_cx(0, 1, 1).unwrap();
        assert!((s.amplitude(&[1, 1]).re - 1.0).abs() < TOL);

        let mut s = QuditState::basis(&[2, 1], 5).unwrap();
        s.apply_cx(0, 1, 2).unwrap();
        assert!((s.amplitude(&[2, 0]).re - 1.0).abs() < TOL);

        let mut s = QuditState::basis(&[1, 1], 2).unwrap();
        s.apply_cz(0, 1, 1).unwrap();
        assert!((s.amplitude(&[1, 1]).re + 1.0).abs() < TOL);

        assert_eq!(s.apply_cz(1, 1, 1), Err(StateError::SameQudit(1)));
        assert!(matches!(s.apply_x(2, 1), Err(StateError::OutOfRange { .. })));
    }

    #[test]
    fn measuring_plus_gives_zero() {
        for d in 2..6 {
            let mut s = plus(d);
            let (p, _) = s.fourier_branches(0).unwrap();
            assert!((p[0] - 1.0).abs() < TOL);
            assert_eq!(s.measure_fourier(0, &mut SampledOutcomes::new(7)).unwrap(), 0);
            assert_eq!(s.qudit_count(), 0);
        }
        let mut s = omega_r(3, 2);
        assert_eq!(s.measure_fourier(0, &mut SampledOutcomes::new(1)).unwrap(), 2);
    }

    #[test]
    fn impossible_forced_outcome_is_refused() {
        let mut s = plus(3);
        let err = s.measure_fourier(0, &mut ForcedOutcomes::new(vec![1])).unwrap_err();
        assert!(matches!(err, StateError::ImpossibleOutcome { outcome: 1, .. }));
        assert_eq!(s.qudit_count(), 1);
    }

    #[test]
    fn residual_after_copy_measurement() {
        // cX(|+⟩|0⟩) then measure the control with outcome r: Z^{-r}|+⟩ is left.
        for r in 0..2 {
            let mut s = QuditState::zero(2, 2).unwrap();
            s.apply_f(0, false).unwrap();
            s.apply_cx(0, 1, 1).unwrap();
            s.measure_fourier(0, &mut ForcedOutcomes::new(vec![r])).unwrap();
            let mut want = plus(2);
            want.apply_z(0, -(r as i64)).unwrap();
            assert!((s.fidelity(&want).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn push_and_reorder() {
        let mut s = QuditState::basis(&[1, 2], 3).unwrap();
        s.push_zero(7).unwrap();
        s.push_plus(9).unwrap();
        assert_eq!(s.labels(), &[0, 1, 7, 9]);
        let r = s.reorder(&[9, 1, 7, 0]).unwrap();
        let a = r.amplitude(&[2, 2, 0, 1]);
        assert!((a.re - 1.0 / 3f64.sqrt()).abs() < TOL);
        assert_eq!(s.push_zero(7), Err(StateError::DuplicateLabel(7)));
    }

    #[test]
    fn fidelity_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = QuditState::random(2, 3, &mut rng).unwrap();
        let mut b = a.clone();
        b.amps.iter_mut().for_each(|x| *x *= Complex64::from_polar(1.0, 0.7));
        assert!((a.fidelity(&b).unwrap() - 1.0).abs() < TOL);
        let z = QuditState::basis(&[0], 2).unwrap();
        let o = QuditState::basis(&[1], 2).unwrap();
        assert!(z.fidelity(&o).unwrap() < TOL);
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = QuditState::random(3, 3, &mut rng).unwrap();
        let run = |seed| {
            let mut s = psi.clone();
            let mut src = SampledOutcomes::new(seed);
            (0..3).map(|_| s.measure_fourier(0, &mut src).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }
}
