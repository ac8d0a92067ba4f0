//! Symbolic Weyl operators and their conjugation through small Clifford
//! gadgets, with the stabilizers introduced by preparations and measurements
//! tracked alongside.
//!
//! A Weyl operator is `φ · ∏ X_q^{a_q} · ∏ Z_q^{b_q}` with every X to the left
//! of every Z; `ZX = ωXZ`.

use num_complex::Complex64;
use thiserror::Error;

use crate::state::{root_of_unity, OutcomeSource, QuditState, StateError};

/// `φ X^a Z^b` on a single qudit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylLabel {
    pub a: u64,
    pub b: u64,
    pub phase: Complex64,
}

impl WeylLabel {
    pub fn new(a: u64, b: u64, phase: Complex64, d: u64) -> Self {
        Self { a: a % d, b: b % d, phase }
    }

    pub fn approx_eq(&self, other: &WeylLabel, tol: f64) -> bool {
        self.a == other.a && self.b == other.b && (self.phase - other.phase).norm() < tol
    }
}

/// One element of a gadget. Qudits are small integer ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetOp {
    /// Fresh qudit in `|+⟩`.
    PreparePlus(usize),
    X { qudit: usize, power: i64 },
    Z { qudit: usize, power: i64 },
    F { qudit: usize, inverse: bool },
    Cz { a: usize, b: usize, power: i64 },
    /// Fourier-basis measurement that returned `F|outcome⟩`.
    MeasureFourier { qudit: usize, outcome: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeylError {
    #[error("qudit {0} is used before it exists or after it was measured")]
    Inactive(usize),
    #[error("qudit {0} is prepared twice")]
    AlreadyActive(usize),
    #[error("measurement of qudit {0} does not commute with the tracked operator and no stabilizer repairs it")]
    Disturbed(usize),
    #[error("result is spread over qudits {0:?}, not a single site")]
    NotSingleSite(Vec<usize>),
}

/// Multi-qudit Weyl operator over a fixed id range.
#[derive(Debug, Clone, PartialEq)]
struct Pauli {
    d: u64,
    phase: Complex64,
    a: Vec<u64>,
    b: Vec<u64>,
}

impl Pauli {
    fn identity(d: u64, n: usize) -> Self {
        Self { d, phase: Complex64::new(1.0, 0.0), a: vec![0; n], b: vec![0; n] }
    }

    fn omega(&self, k: i128) -> Complex64 {
        root_of_unity(self.d as usize, (k.rem_euclid(self.d as i128)) as i64)
    }

    /// `self · other`, using `Z^b X^c = ω^{bc} X^c Z^b`.
    fn mul(&self, other: &Pauli) -> Pauli {
        let d = self.d;
        let cross: i128 = self.b.iter().zip(&other.a).map(|(&b, &c)| (b * c) as i128).sum();
        Pauli {
            d,
            phase: self.phase * other.phase * self.omega(cross),
            a: self.a.iter().zip(&other.a).map(|(x, y)| (x + y) % d).collect(),
            b: self.b.iter().zip(&other.b).map(|(x, y)| (x + y) % d).collect(),
        }
    }

    fn pow(&self, k: u64) -> Pauli {
        let mut out = Pauli::identity(self.d, self.a.len());
        for _ in 0..k % self.d {
            out = out.mul(self);
        }
        out
    }

    fn support(&self) -> Vec<usize> {
        (0..self.a.len()).filter(|&q| self.a[q] != 0 || self.b[q] != 0).collect()
    }

    /// `U · self · U†` for a Clifford element `U`.
    fn conjugate(&mut self, op: &GadgetOp) {
        let d = self.d as i128;
        let m = |x: i128| x.rem_euclid(d) as u64;
        match *op {
            GadgetOp::X { qudit, power } => {
                // X^p Z^b X^{-p} = ω^{-pb} Z^b
                self.phase *= self.omega(-(power as i128) * self.b[qudit] as i128);
            }
            GadgetOp::Z { qudit, power } => {
                // Z^p X^a Z^{-p} = ω^{pa} X^a
                self.phase *= self.omega(power as i128 * self.a[qudit] as i128);
            }
            GadgetOp::F { qudit, inverse } => {
                let (a, b) = (self.a[qudit] as i128, self.b[qudit] as i128);
                // F: X ↦ Z, Z ↦ X†; F†: X ↦ Z†, Z ↦ X. Both pick up ω^{-ab}.
                self.phase *= self.omega(-a * b);
                if inverse {
                    self.a[qudit] = m(b);
                    self.b[qudit] = m(-a);
                } else {
                    self.a[qudit] = m(-b);
                    self.b[qudit] = m(a);
                }
            }
            GadgetOp::Cz { a: u, b: v, power } => {
                // X_u ↦ X_u Z_v^p, X_v ↦ X_v Z_u^p; reordering costs ω^{p a_u a_v}.
                let p = power as i128;
                let (au, av) = (self.a[u] as i128, self.a[v] as i128);
                self.phase *= self.omega(p * au * av);
                self.b[v] = m(self.b[v] as i128 + p * au);
                self.b[u] = m(self.b[u] as i128 + p * av);
            }
            GadgetOp::PreparePlus(_) | GadgetOp::MeasureFourier { .. } => {}
        }
    }
}

fn inv_mod(x: u64, d: u64) -> Option<u64> {
    crate::linalg::inv_mod(x, d)
}

/// Push `φW_{a,b}` on `site` through `ops`. Returns the transformed label and
/// the qudit now carrying it.
///
/// Stabilizers of freshly prepared qudits and of measured qudits are tracked
/// so that a measurement which would disturb the operator can be repaired by
/// multiplying with a stabilizer, exactly as in the hand calculation.
pub fn conjugate_weyl_through(
    d: u64,
    ops: &[GadgetOp],
    w: WeylLabel,
    site: usize,
) -> Result<(WeylLabel, usize), WeylError> {
    let n = ops
        .iter()
        .map(|op| match *op {
            GadgetOp::PreparePlus(q) | GadgetOp::X { qudit: q, .. } | GadgetOp::Z { qudit: q, .. } => q,
            GadgetOp::F { qudit, .. } | GadgetOp::MeasureFourier { qudit, .. } => qudit,
            GadgetOp::Cz { a, b, .. } => a.max(b),
        })
        .chain(std::iter::once(site))
        .max()
        .unwrap_or(0)
        + 1;

    let mut active = vec![false; n];
    active[site] = true;
    let mut tracked = Pauli::identity(d, n);
    tracked.phase = w.phase;
    tracked.a[site] = w.a % d;
    tracked.b[site] = w.b % d;
    let mut stabilizers: Vec<Pauli> = Vec::new();

    let need = |active: &[bool], q: usize| if active[q] { Ok(()) } else { Err(WeylError::Inactive(q)) };

    for op in ops {
        match *op {
            GadgetOp::PreparePlus(q) => {
                if active[q] {
                    return Err(WeylError::AlreadyActive(q));
                }
                active[q] = true;
                let mut g = Pauli::identity(d, n);
                g.a[q] = 1;
                stabilizers.push(g);
            }
            GadgetOp::MeasureFourier { qudit: q, outcome } => {
                need(&active, q)?;
                // Clear the Z_q component of the tracked operator using a
                // stabilizer whose Z_q exponent is a unit.
                if tracked.b[q] != 0 {
                    let (gi, inv) = stabilizers
                        .iter()
                        .enumerate()
                        .find_map(|(i, g)| inv_mod(g.b[q], d).map(|inv| (i, inv)))
                        .ok_or(WeylError::Disturbed(q))?;
                    let c = (d - tracked.b[q]) * inv % d;
                    tracked = tracked.mul(&stabilizers[gi].pow(c));
                }
                // Make the other stabilizers commute with X_q as well, then drop the pivot.
                if let Some((gi, inv)) =
                    stabilizers.iter().enumerate().find_map(|(i, g)| inv_mod(g.b[q], d).map(|inv| (i, inv)))
                {
                    let pivot = stabilizers.remove(gi);
                    for g in stabilizers.iter_mut() {
                        if g.b[q] != 0 {
                            let c = (d - g.b[q]) * inv % d;
                            *g = g.mul(&pivot.pow(c));
                        }
                    }
                }
                // Post-measurement stabilizer: X|ω_r⟩ = ω^{-r}|ω_r⟩, so ω^r X_q.
                let mut m = Pauli::identity(d, n);
                m.a[q] = 1;
                m.phase = root_of_unity(d as usize, outcome as i64);
                // Strip the X_q component from everything and retire the qudit.
                let strip = |p: &Pauli| {
                    let k = (d - p.a[q]) % d;
                    p.mul(&m.pow(k))
                };
                tracked = strip(&tracked);
                stabilizers = stabilizers.iter().map(strip).filter(|g| !g.support().is_empty()).collect();
                active[q] = false;
            }
            GadgetOp::Cz { a, b, .. } => {
                need(&active, a)?;
                need(&active, b)?;
                tracked.conjugate(op);
                stabilizers.iter_mut().for_each(|g| g.conjugate(op));
            }
            GadgetOp::X { qudit, .. } | GadgetOp::Z { qudit, .. } | GadgetOp::F { qudit, .. } => {
                need(&active, qudit)?;
                tracked.conjugate(op);
                stabilizers.iter_mut().for_each(|g| g.conjugate(op));
            }
        }
    }

    let support = tracked.support();
    let carrier = match support.as_slice() {
        [] => (0..n).find(|&q| active[q]).unwrap_or(site),
        [q] => *q,
        _ => return Err(WeylError::NotSingleSite(support)),
    };
    Ok((WeylLabel { a: tracked.a[carrier], b: tracked.b[carrier], phase: tracked.phase }, carrier))
}

/// The teleporting inverse-Fourier gadget from qudit `v` to a fresh qudit `w`:
/// prepare `|+⟩_w`, apply `cZ†`, measure `v` with outcome `r`, correct `X_w^{r}`.
pub fn fdag_gadget(v: usize, w: usize, outcome: u64) -> Vec<GadgetOp> {
    vec![
        GadgetOp::PreparePlus(w),
        GadgetOp::Cz { a: v, b: w, power: -1 },
        GadgetOp::MeasureFourier { qudit: v, outcome },
        GadgetOp::X { qudit: w, power: outcome as i64 },
    ]
}

/// Run the gadget on a one-qudit state. Returns the outcome and the state on `w`.
pub fn run_fdag_gadget(psi: &QuditState, source: &mut dyn OutcomeSource) -> Result<(u64, QuditState), StateError> {
    let mut s = psi.clone();
    s.relabel(vec![0])?;
    s.push_plus(1)?;
    s.apply_cz(0, 1, -1)?;
    let r = s.measure_fourier(0, source)?;
    s.apply_x(0, r as i64)?;
    Ok((r, s))
}

/// `X^a Z^b` as a dense `d × d` matrix (row-major, `[row][col]`).
pub fn weyl_matrix(d: usize, a: u64, b: u64) -> Vec<Vec<Complex64>> {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for x in 0..d {
        // X^a Z^b |x⟩ = ω^{bx} |x + a⟩
        m[(x + a as usize) % d][x] = root_of_unity(d, (b as usize * x) as i64);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn x_becomes_z_dagger_and_z_becomes_x() {
        for d in 2..=5u64 {
            for r in 0..d {
                let ops = fdag_gadget(0, 1, r);
                let (x, site) = conjugate_weyl_through(d, &ops, WeylLabel::new(1, 0, one(), d), 0).unwrap();
                assert_eq!(site, 1);
                assert!(x.approx_eq(&WeylLabel::new(0, d - 1, one(), d), 1e-12), "d={d} r={r} {x:?}");
                let (z, _) = conjugate_weyl_through(d, &ops, WeylLabel::new(0, 1, one(), d), 0).unwrap();
                assert!(z.approx_eq(&WeylLabel::new(1, 0, one(), d), 1e-12), "d={d} r={r} {z:?}");
            }
        }
    }

    #[test]
    fn general_label_rotates() {
        // X^a Z^b ↦ Z^{-a} X^b = ω^{-ab} X^b Z^{-a}
        let d = 5;
        let phase = Complex64::from_polar(1.0, 0.3);
        for a in 0..d {
            for b in 0..d {
                let (out, _) =
                    conjugate_weyl_through(d, &fdag_gadget(0, 1, 2), WeylLabel::new(a, b, phase, d), 0).unwrap();
                let want = WeylLabel::new(b, (d - a) % d, phase * root_of_unity(d as usize, -((a * b) as i64)), d);
                assert!(out.approx_eq(&want, 1e-12), "{a},{b}: {out:?}");
            }
        }
    }

    #[test]
    fn unprepared_qudit_is_an_error() {
        let ops = [GadgetOp::Cz { a: 0, b: 1, power: 1 }];
        assert_eq!(conjugate_weyl_through(3, &ops, WeylLabel::new(1, 0, one(), 3), 0), Err(WeylError::Inactive(1)));
    }

    #[test]
    fn weyl_matrix_commutation() {
        // ZX = ωXZ
        let d = 3;
        let x = weyl_matrix(d, 1, 0);
        let z = weyl_matrix(d, 0, 1);
        let mul = |p: &Vec<Vec<Complex64>>, q: &Vec<Vec<Complex64>>| {
            (0..d)
                .map(|i| (0..d).map(|j| (0..d).map(|k| p[i][k] * q[k][j]).sum()).collect::<Vec<Complex64>>())
                .collect::<Vec<_>>()
        };
        let zx = mul(&z, &x);
        let xz = mul(&x, &z);
        let w = root_of_unity(d, 1);
        for i in 0..d {
            for j in 0..d {
                assert!((zx[i][j] - w * xz[i][j]).norm() < 1e-12);
            }
        }
    }
}
