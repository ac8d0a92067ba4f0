//! Test-side references, written from the definitions and sharing no code
//! with the library beyond its data types.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use qlnc_core::{CodingNetwork, QuditState};

pub type Mat = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn omega(d: usize, k: i64) -> Complex64 {
    let k = k.rem_euclid(d as i64) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * k / d as f64)
}

pub fn zeros(n: usize) -> Mat {
    vec![vec![c(0.0, 0.0); n]; n]
}

pub fn eye(n: usize) -> Mat {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

/// `X|x⟩ = |x+1⟩`.
pub fn x_mat(d: usize) -> Mat {
    let mut m = zeros(d);
    for x in 0..d {
        m[(x + 1) % d][x] = c(1.0, 0.0);
    }
    m
}

/// `Z|x⟩ = ω^x|x⟩`.
pub fn z_mat(d: usize) -> Mat {
    let mut m = zeros(d);
    for x in 0..d {
        m[x][x] = omega(d, x as i64);
    }
    m
}

/// `F|r⟩ = d^{-1/2} Σ_x ω^{xr}|x⟩`.
pub fn f_mat(d: usize) -> Mat {
    let s = 1.0 / (d as f64).sqrt();
    (0..d).map(|x| (0..d).map(|r| omega(d, (x * r) as i64) * s).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = vec![vec![c(0.0, 0.0); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..m {
                out[i][j] += a[i][l] * b[l][j];
            }
        }
    }
    out
}

pub fn dagger(a: &Mat) -> Mat {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn power(a: &Mat, p: usize) -> Mat {
    (0..p).fold(eye(a.len()), |acc, _| matmul(&acc, a))
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `cX|c⟩|t⟩ = |c⟩|t+c⟩`, control first.
pub fn cx_mat(d: usize) -> Mat {
    let mut m = zeros(d * d);
    for a in 0..d {
        for b in 0..d {
            m[a * d + (a + b) % d][a * d + b] = c(1.0, 0.0);
        }
    }
    m
}

/// `cZ|a⟩|b⟩ = ω^{ab}|a⟩|b⟩`.
pub fn cz_mat(d: usize) -> Mat {
    let mut m = zeros(d * d);
    for a in 0..d {
        for b in 0..d {
            m[a * d + b][a * d + b] = omega(d, (a * b) as i64);
        }
    }
    m
}

pub fn apply(m: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    ip.norm_sqr() / (na * nb)
}

/// Digits of `index` in base `d`, most significant first.
pub fn digits(index: usize, d: usize, n: usize) -> Vec<u64> {
    let mut v = vec![0; n];
    let mut rest = index;
    for slot in v.iter_mut().rev() {
        *slot = (rest % d) as u64;
        rest /= d;
    }
    v
}

pub fn index_of(values: &[u64], d: usize) -> usize {
    values.iter().fold(0, |acc, &v| acc * d + v as usize)
}

/// Evaluate the network on a source vector by recursion over in-port feeds.
pub fn evaluate(net: &CodingNetwork, s: &[u64]) -> Vec<u64> {
    let d = net.modulus;
    let feeds: HashMap<(String, usize), (String, usize)> =
        net.links.iter().map(|l| ((l.to.node.clone(), l.to.port), (l.from.node.clone(), l.from.port))).collect();
    let inputs: HashMap<(String, usize), usize> =
        net.inputs.iter().enumerate().map(|(i, p)| ((p.node.clone(), p.port), i)).collect();
    fn out(
        net: &CodingNetwork,
        node: &str,
        port: usize,
        s: &[u64],
        d: u64,
        feeds: &HashMap<(String, usize), (String, usize)>,
        inputs: &HashMap<(String, usize), usize>,
    ) -> u64 {
        let spec = net.nodes.iter().find(|n| n.id == node).expect("node exists");
        let mut acc = 0u64;
        for k in 0..spec.matrix.cols() {
            let key = (node.to_string(), k);
            let x = match inputs.get(&key) {
                Some(&i) => s[i] % d,
                None => {
                    let (from, fp) = &feeds[&key];
                    out(net, from, *fp, s, d, feeds, inputs)
                }
            };
            acc = (acc + spec.matrix.get(port, k) * x) % d;
        }
        acc
    }
    net.outputs.iter().map(|p| out(net, &p.node, p.port, s, d, &feeds, &inputs)).collect()
}

/// Composite matrix rows, built column by column from unit vectors.
pub fn composite(net: &CodingNetwork) -> Vec<Vec<u64>> {
    let k = net.inputs.len();
    let cols: Vec<Vec<u64>> = (0..k)
        .map(|i| {
            let mut e = vec![0; k];
            e[i] = 1;
            evaluate(net, &e)
        })
        .collect();
    (0..net.outputs.len()).map(|o| cols.iter().map(|col| col[o]).collect()).collect()
}

pub fn mat_vec(m: &[Vec<u64>], x: &[u64], d: u64) -> Vec<u64> {
    m.iter().map(|row| row.iter().zip(x).fold(0, |acc, (a, b)| (acc + a * b) % d)).collect()
}

/// Injectivity by listing every input.
pub fn brute_injective(m: &[Vec<u64>], k: usize, d: u64) -> bool {
    let total = (d as usize).pow(k as u32);
    let mut seen = std::collections::HashSet::new();
    (0..total).all(|i| seen.insert(mat_vec(m, &digits(i, d as usize, k), d)))
}

/// `Σ u_x|x⟩ ↦ Σ u_x|Mx⟩` on amplitude vectors.
pub fn isometry(m: &[Vec<u64>], k: usize, d: u64, amps: &[Complex64]) -> Vec<Complex64> {
    let du = d as usize;
    let mut out = vec![c(0.0, 0.0); du.pow(m.len() as u32)];
    for (i, a) in amps.iter().enumerate() {
        out[index_of(&mat_vec(m, &digits(i, du, k), d), du)] += a;
    }
    out
}

/// Nonzero coefficients, counted from literal matrices.
pub fn nnz(mats: &[Vec<Vec<i64>>], d: i64) -> usize {
    mats.iter().flatten().flatten().filter(|&&v| v.rem_euclid(d) != 0).count()
}

pub fn bell(d: usize) -> QuditState {
    let mut amps = vec![c(0.0, 0.0); d * d];
    for x in 0..d {
        amps[x * d + x] = c(1.0, 0.0);
    }
    QuditState::from_amplitudes(d, amps).unwrap()
}

/// Haar-ish random amplitudes from a seed (Box–Muller over a xorshift stream).
pub fn random_amplitudes(n: usize, seed: u64) -> Vec<Complex64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut gauss = || {
        let u1 = next().max(1e-300);
        let u2 = next();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    };
    let v: Vec<Complex64> = (0..n).map(|_| c(gauss(), gauss())).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}
