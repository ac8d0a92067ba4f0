//! The reference isometry `Σ u_x|x⟩ ↦ Σ u_x|Mx⟩`.

use num_complex::Complex64;

use crate::linalg::RingMatrix;
use crate::schedule::RunError;
use crate::state::QuditState;

/// Apply `|x⟩ ↦ |Mx⟩` to every basis component of `input`. For non-injective
/// `M` colliding components add up and the result is renormalized.
pub fn apply_isometry(m: &RingMatrix, input: &QuditState) -> Result<QuditState, RunError> {
    let d = m.modulus();
    if input.qudit_count() != m.cols() || input.dimension() as u64 != d {
        return Err(RunError::InputShape {
            expected: m.cols(),
            expected_d: d,
            actual: input.qudit_count(),
            actual_d: input.dimension() as u64,
        });
    }
    let du = d as usize;
    let k = m.cols();
    let mut out = vec![Complex64::new(0.0, 0.0); du.pow(m.rows() as u32)];
    let mut x = vec![0u64; k];
    for (index, amp) in input.amplitudes().iter().enumerate() {
        let mut rest = index;
        for slot in x.iter_mut().rev() {
            *slot = (rest % du) as u64;
            rest /= du;
        }
        let y = m.mul_vec(&x)?;
        let j = y.iter().fold(0usize, |acc, &v| acc * du + v as usize);
        out[j] += amp;
    }
    Ok(QuditState::from_amplitudes(du, out)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_and_copy() {
        let swap = RingMatrix::from_rows(3, &[vec![0, 1], vec![1, 0]], 0).unwrap();
        let s = QuditState::basis(&[1, 2], 3).unwrap();
        let out = apply_isometry(&swap, &s).unwrap();
        assert!((out.amplitude(&[2, 1]).re - 1.0).abs() < 1e-12);

        let copy = RingMatrix::from_rows(2, &[vec![1], vec![1]], 0).unwrap();
        let mut plus = QuditState::zero(1, 2).unwrap();
        plus.apply_f(0, false).unwrap();
        let ghz = apply_isometry(&copy, &plus).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((ghz.amplitude(&[0, 0]).re - h).abs() < 1e-12);
        assert!((ghz.amplitude(&[1, 1]).re - h).abs() < 1e-12);
        assert!(ghz.amplitude(&[0, 1]).norm() < 1e-12);
    }
}
