mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use qlnc_core::state::{ForcedOutcomes, QuditState};
use qlnc_core::weyl::{conjugate_weyl_through, fdag_gadget, run_fdag_gadget, weyl_matrix, WeylLabel};

fn state(d: usize, n: usize, seed: u64) -> QuditState {
    QuditState::from_amplitudes(d, random_amplitudes(d.pow(n as u32), seed)).unwrap()
}

/// Dense operator acting on `pos` of an `n`-qudit register.
fn on(d: usize, n: usize, pos: usize, m: &Mat) -> Mat {
    (0..n).fold(vec![vec![c(1.0, 0.0)]], |acc, q| kron(&acc, &if q == pos { m.clone() } else { eye(d) }))
}

fn close(a: &[Complex64], b: &[Complex64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_qudit_gates_match_dense(d in 2usize..6, pos in 0usize..2, p in -7i64..7, seed in any::<u64>()) {
        let s = state(d, 2, seed);
        let v = s.amplitudes().to_vec();
        let pp = p.rem_euclid(d as i64) as usize;

        let mut t = s.clone();
        t.apply_x(pos, p).unwrap();
        prop_assert!(close(t.amplitudes(), &apply(&on(d, 2, pos, &power(&x_mat(d), pp)), &v)));

        let mut t = s.clone();
        t.apply_z(pos, p).unwrap();
        prop_assert!(close(t.amplitudes(), &apply(&on(d, 2, pos, &power(&z_mat(d), pp)), &v)));

        let mut t = s.clone();
        t.apply_f(pos, false).unwrap();
        prop_assert!(close(t.amplitudes(), &apply(&on(d, 2, pos, &f_mat(d)), &v)));

        let mut t = s.clone();
        t.apply_f(pos, true).unwrap();
        prop_assert!(close(t.amplitudes(), &apply(&on(d, 2, pos, &dagger(&f_mat(d))), &v)));
    }

    #[test]
    fn two_qudit_gates_match_dense(d in 2usize..6, p in -7i64..7, seed in any::<u64>()) {
        let s = state(d, 2, seed);
        let v = s.amplitudes().to_vec();
        let pp = p.rem_euclid(d as i64) as usize;

        let mut t = s.clone();
        t.apply_cx(0, 1, p).unwrap();
        prop_assert!(close(t.amplitudes(), &apply(&power(&cx_mat(d), pp), &v)));

        let mut t = s.clone();
        t.apply_cz(0, 1, p).unwrap();
        prop_assert!(close(t.amplitudes(), &apply(&power(&cz_mat(d), pp), &v)));

        // cZ is symmetric.
        let mut u = s.clone();
        u.apply_cz(1, 0, p).unwrap();
        prop_assert!(close(t.amplitudes(), u.amplitudes()));
    }

    #[test]
    fn fourier_branches_are_projections(d in 2usize..5, seed in any::<u64>()) {
        let s = state(d, 2, seed);
        let (probs, branches) = s.fourier_branches(0).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        // Branch r is ⟨ω_r| ⊗ 1 applied to the state, with ⟨ω_r| = (F|r⟩)†.
        let f = f_mat(d);
        for r in 0..d {
            let mut want = vec![c(0.0, 0.0); d];
            for x in 0..d {
                for y in 0..d {
                    want[y] += f[x][r].conj() * s.amplitudes()[x * d + y];
                }
            }
            let p: f64 = want.iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((p - probs[r]).abs() < 1e-10);
            if p > 1e-9 {
                prop_assert!(fidelity(&want, &branches[r]) > 1.0 - 1e-10);
            }
        }
    }
}

#[test]
fn plus_state_is_uniform() {
    let mut s = QuditState::zero(0, 3).unwrap();
    s.push_plus(7).unwrap();
    for a in s.amplitudes() {
        assert!((a - c(1.0 / 3f64.sqrt(), 0.0)).norm() < 1e-12);
    }
}

#[test]
fn cz_is_fourier_conjugated_cx() {
    for d in 2..=5 {
        let one_f = kron(&eye(d), &f_mat(d));
        let one_fd = kron(&eye(d), &dagger(&f_mat(d)));
        let rhs = matmul(&matmul(&one_f, &cx_mat(d)), &one_fd);
        assert!(max_diff(&cz_mat(d), &rhs) < 1e-10, "d = {d}");
    }
}

#[test]
fn gadget_teleports_inverse_fourier_for_every_outcome() {
    for d in 2..=5usize {
        for seed in 0..20u64 {
            let psi = state(d, 1, seed);
            let want = apply(&dagger(&f_mat(d)), psi.amplitudes());
            for r in 0..d as u64 {
                let (got_r, out) = run_fdag_gadget(&psi, &mut ForcedOutcomes::new(vec![r])).unwrap();
                assert_eq!(got_r, r);
                assert!(fidelity(out.amplitudes(), &want) > 1.0 - 1e-10, "d={d} seed={seed} r={r}");
            }
        }
    }
}

/// `F† W F` against the symbolic conjugation, both ways round.
#[test]
fn symbolic_conjugation_matches_dense() {
    for d in 2..=5u64 {
        let du = d as usize;
        let f = f_mat(du);
        for a in 0..d {
            for b in 0..d {
                let dense = matmul(&matmul(&dagger(&f), &weyl_matrix(du, a, b)), &f);
                let label = WeylLabel::new(a, b, c(1.0, 0.0), d);
                let (w, site) = conjugate_weyl_through(d, &fdag_gadget(0, 1, 0), label, 0).unwrap();
                assert_eq!(site, 1);
                for r in 1..d {
                    let (other, _) = conjugate_weyl_through(d, &fdag_gadget(0, 1, r), label, 0).unwrap();
                    assert!(other.approx_eq(&w, 1e-12), "outcome {r} changes the law");
                }
                let symbolic: Mat =
                    weyl_matrix(du, w.a, w.b).into_iter().map(|row| row.into_iter().map(|x| x * w.phase).collect()).collect();
                assert!(max_diff(&dense, &symbolic) < 1e-10, "d={d} a={a} b={b}");
                // The rotation (a, b) ↦ (b, −a) with phase ω^{−ab}.
                assert_eq!((w.a, w.b), (b, (d - a) % d));
                assert!((w.phase - omega(du, -((a * b) as i64))).norm() < 1e-10);
            }
        }
    }
}
