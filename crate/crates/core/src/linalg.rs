//! Exact linear algebra over the cyclic ring Z_d.
//!
//! Composite moduli have zero divisors, so nothing here uses field-style
//! Gaussian elimination. Matrices are diagonalised with unimodular integer
//! row and column operations on the integer lift, reduced mod d after every
//! step; the resulting `U·A·V = D` factorisation answers injectivity, left
//! inverses, linear solves and kernels uniformly.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("shape mismatch: {left} cannot be combined with {right}")]
    ShapeMismatch { left: String, right: String },
    #[error("expected {expected} entries, got {actual}")]
    EntryCount { expected: usize, actual: usize },
    #[error("blocks do not partition 0..{rows}: {reason}")]
    BadPartition { rows: usize, reason: String },
}

/// An element of Z_d, always stored reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingElement {
    value: u64,
    modulus: u64,
}

impl RingElement {
    pub fn new(value: i64, modulus: u64) -> Self {
        assert!(modulus >= 2, "modulus must be at least 2");
        Self { value: reduce(value, modulus), modulus }
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.modulus
    }

    pub fn is_unit(self) -> bool {
        gcd(self.value, self.modulus) == 1
    }

    pub fn inverse(self) -> Option<Self> {
        inv_mod(self.value, self.modulus).map(|value| Self { value, modulus: self.modulus })
    }
}

impl std::ops::Add for RingElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus);
        Self { value: add_mod(self.value, rhs.value, self.modulus), modulus: self.modulus }
    }
}

impl std::ops::Sub for RingElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus);
        Self { value: sub_mod(self.value, rhs.value, self.modulus), modulus: self.modulus }
    }
}

impl std::ops::Mul for RingElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus);
        Self { value: mul_mod(self.value, rhs.value, self.modulus), modulus: self.modulus }
    }
}

impl std::ops::Neg for RingElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self { value: sub_mod(0, self.value, self.modulus), modulus: self.modulus }
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

pub fn reduce(value: i64, modulus: u64) -> u64 {
    (value as i128).rem_euclid(modulus as i128) as u64
}

pub fn add_mod(a: u64, b: u64, d: u64) -> u64 {
    ((a as u128 + b as u128) % d as u128) as u64
}

pub fn sub_mod(a: u64, b: u64, d: u64) -> u64 {
    ((a as u128 + d as u128 - (b % d) as u128) % d as u128) as u64
}

pub fn mul_mod(a: u64, b: u64, d: u64) -> u64 {
    ((a as u128 * b as u128) % d as u128) as u64
}

pub fn neg_mod(a: u64, d: u64) -> u64 {
    sub_mod(0, a, d)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Extended Euclid on non-negative integers: returns `(g, s, t)` with `s·a + t·b = g`.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    (old_r, old_s, old_t)
}

pub fn inv_mod(a: u64, d: u64) -> Option<u64> {
    let (g, s, _) = ext_gcd((a % d) as i128, d as i128);
    (g == 1).then(|| s.rem_euclid(d as i128) as u64)
}

/// Dense row-major matrix over Z_d.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingMatrix {
    rows: usize,
    cols: usize,
    modulus: u64,
    data: Vec<u64>,
}

impl RingMatrix {
    pub fn new(rows: usize, cols: usize, modulus: u64, data: Vec<u64>) -> Result<Self, LinalgError> {
        check_modulus(modulus)?;
        if data.len() != rows * cols {
            return Err(LinalgError::EntryCount { expected: rows * cols, actual: data.len() });
        }
        let data = data.into_iter().map(|x| x % modulus).collect();
        Ok(Self { rows, cols, modulus, data })
    }

    /// Builds a matrix from signed integer rows, reducing every entry mod `modulus`.
    /// `cols` is only consulted when `rows` is empty.
    pub fn from_rows(modulus: u64, rows: &[Vec<i64>], cols: usize) -> Result<Self, LinalgError> {
        check_modulus(modulus)?;
        let ncols = rows.first().map_or(cols, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(LinalgError::ShapeMismatch {
                    left: format!("row 0 with {ncols} entries"),
                    right: format!("row {i} with {} entries", row.len()),
                });
            }
            data.extend(row.iter().map(|&x| reduce(x, modulus)));
        }
        Ok(Self { rows: rows.len(), cols: ncols, modulus, data })
    }

    pub fn zeros(rows: usize, cols: usize, modulus: u64) -> Self {
        check_modulus(modulus).expect("invalid modulus");
        Self { rows, cols, modulus, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize, modulus: u64) -> Self {
        let mut m = Self::zeros(n, n, modulus);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn element(&self, i: usize, j: usize) -> RingElement {
        RingElement { value: self.get(i, j), modulus: self.modulus }
    }

    pub fn set(&mut self, i: usize, j: usize, value: u64) {
        self.data[i * self.cols + j] = value % self.modulus;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j) == u64::from(i == j)))
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0).count()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows, self.modulus);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.modulus != other.modulus {
            return Err(LinalgError::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch { left: self.shape(), right: other.shape() });
        }
        let d = self.modulus as u128;
        let mut out = Self::zeros(self.rows, other.cols, self.modulus);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u128;
                for k in 0..self.cols {
                    acc = (acc + self.get(i, k) as u128 * other.get(k, j) as u128) % d;
                }
                out.data[i * other.cols + j] = acc as u64;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u64]) -> Result<Vec<u64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::ShapeMismatch {
                left: self.shape(),
                right: format!("vector of length {}", v.len()),
            });
        }
        Ok((0..self.rows).map(|i| dot_mod(self.row(i), v, self.modulus)).collect())
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.modulus != other.modulus {
            return Err(LinalgError::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.cols != other.cols {
            return Err(LinalgError::ShapeMismatch { left: self.shape(), right: other.shape() });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { rows: self.rows + other.rows, cols: self.cols, modulus: self.modulus, data })
    }

    fn shape(&self) -> String {
        format!("{}x{} matrix mod {}", self.rows, self.cols, self.modulus)
    }

    /// Diagonal form `U·A·V = D` with `U`, `V` invertible over Z_d.
    pub fn diagonalize(&self) -> Diagonalization {
        Diagonalization::compute(self)
    }

    /// True iff `x ↦ A·x` is injective on Z_d^cols.
    pub fn is_injective(&self) -> bool {
        self.diagonalize().is_injective()
    }

    /// A matrix `B` with `B·A = I`, or `None` when `A` is not injective.
    pub fn left_inverse(&self) -> Option<Self> {
        let diag = self.diagonalize();
        if !diag.is_injective() {
            return None;
        }
        let d = self.modulus;
        // E = [diag(u_i^{-1}) | 0], so E·D = I and B = V·E·U.
        let mut e = Self::zeros(self.cols, self.rows, d);
        for i in 0..self.cols {
            e.set(i, i, inv_mod(diag.diagonal[i], d)?);
        }
        let b = diag.right.mul(&e).ok()?.mul(&diag.left).ok()?;
        b.mul(self).ok()?.is_identity().then_some(b)
    }

    /// Some `x` with `A·x = b`, if the system is solvable over Z_d.
    pub fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        if b.len() != self.rows {
            return None;
        }
        let d = self.modulus;
        let diag = self.diagonalize();
        let ub = diag.left.mul_vec(b).ok()?;
        let mut y = vec![0u64; self.cols];
        for (i, &rhs) in ub.iter().enumerate() {
            let pivot = if i < self.cols { diag.diagonal[i] } else { 0 };
            let g = gcd(pivot, d);
            if rhs % g != 0 {
                return None;
            }
            if i < self.cols && pivot != 0 {
                let m = d / g;
                if m > 1 {
                    let inv = inv_mod((pivot / g) % m, m)?;
                    y[i] = mul_mod((rhs / g) % m, inv, m);
                }
            }
        }
        let x = diag.right.mul_vec(&y).ok()?;
        (self.mul_vec(&x).ok()? == b).then_some(x)
    }

    /// Generators of `{x : A·x = 0}` as a Z_d-module.
    pub fn kernel_generators(&self) -> Vec<Vec<u64>> {
        let d = self.modulus;
        let diag = self.diagonalize();
        let mut gens = Vec::new();
        for i in 0..self.cols {
            let pivot = if i < self.rows { diag.diagonal[i] } else { 0 };
            let scale = d / gcd(pivot, d);
            if scale == d {
                continue;
            }
            let col: Vec<u64> = (0..self.cols).map(|r| mul_mod(diag.right.get(r, i), scale, d)).collect();
            if col.iter().any(|&x| x != 0) {
                gens.push(col);
            }
        }
        gens
    }

    /// A block-diagonal `B` (zero outside `blocks × blocks`) with `Aᵀ·B·A = I`.
    ///
    /// `blocks` must partition the row indices of `A`. Returns `Ok(None)` when
    /// the linear system for the in-block entries has no solution.
    pub fn find_block_diagonal(&self, blocks: &[Vec<usize>]) -> Result<Option<Self>, LinalgError> {
        let n = self.rows;
        let mut seen = vec![false; n];
        for block in blocks {
            for &r in block {
                if r >= n {
                    return Err(LinalgError::BadPartition { rows: n, reason: format!("index {r} out of range") });
                }
                if std::mem::replace(&mut seen[r], true) {
                    return Err(LinalgError::BadPartition { rows: n, reason: format!("index {r} repeated") });
                }
            }
        }
        if let Some(r) = seen.iter().position(|s| !s) {
            return Err(LinalgError::BadPartition { rows: n, reason: format!("index {r} missing") });
        }

        let d = self.modulus;
        let k = self.cols;
        let unknowns: Vec<(usize, usize)> = blocks
            .iter()
            .flat_map(|block| block.iter().flat_map(move |&a| block.iter().map(move |&b| (a, b))))
            .collect();
        // Row (i, j) of the system: sum over unknowns (a, b) of A[a][i] * A[b][j] * B[a][b] = delta_ij.
        let mut system = Self::zeros(k * k, unknowns.len(), d);
        let mut rhs = vec![0u64; k * k];
        for i in 0..k {
            for j in 0..k {
                let row = i * k + j;
                rhs[row] = u64::from(i == j);
                for (u, &(a, b)) in unknowns.iter().enumerate() {
                    system.set(row, u, mul_mod(self.get(a, i), self.get(b, j), d));
                }
            }
        }
        let Some(x) = system.solve(&rhs) else {
            return Ok(None);
        };
        let mut b = Self::zeros(n, n, d);
        for (&(r, c), &v) in unknowns.iter().zip(&x) {
            b.set(r, c, v);
        }
        let check = self.transpose().mul(&b)?.mul(self)?;
        Ok(check.is_identity().then_some(b))
    }
}

impl fmt::Display for RingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(u64::to_string).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "] mod {}", self.modulus)
    }
}

pub fn dot_mod(a: &[u64], b: &[u64], d: u64) -> u64 {
    let d128 = d as u128;
    (a.iter().zip(b).fold(0u128, |acc, (&x, &y)| (acc + x as u128 * y as u128) % d128)) as u64
}

fn check_modulus(modulus: u64) -> Result<(), LinalgError> {
    if modulus < 2 {
        Err(LinalgError::InvalidModulus(modulus))
    } else {
        Ok(())
    }
}

/// `left · A · right = diag(diagonal)` (padded with zero rows/columns).
#[derive(Debug, Clone)]
pub struct Diagonalization {
    pub left: RingMatrix,
    pub right: RingMatrix,
    /// Diagonal entries, `min(rows, cols)` of them.
    pub diagonal: Vec<u64>,
    cols: usize,
    modulus: u64,
}

impl Diagonalization {
    fn compute(a: &RingMatrix) -> Self {
        let (rows, cols, d) = (a.rows, a.cols, a.modulus);
        let mut work = a.clone();
        let mut left = RingMatrix::identity(rows, d);
        let mut right = RingMatrix::identity(cols, d);

        for t in 0..rows.min(cols) {
            let Some((pi, pj)) = find_nonzero(&work, t) else {
                break;
            };
            swap_rows(&mut work, t, pi);
            swap_rows(&mut left, t, pi);
            swap_cols(&mut work, t, pj);
            swap_cols(&mut right, t, pj);

            // Clearing a row can refill the column and vice versa, but every
            // refill replaces the pivot by a proper divisor, so this terminates.
            loop {
                let mut changed = false;
                for i in t + 1..rows {
                    if work.get(i, t) != 0 {
                        row_combine(&mut work, &mut left, t, i, t);
                        changed = true;
                    }
                }
                for j in t + 1..cols {
                    if work.get(t, j) != 0 {
                        col_combine(&mut work, &mut right, t, j, t);
                        changed = true;
                    }
                }
                let clean = (t + 1..rows).all(|i| work.get(i, t) == 0)
                    && (t + 1..cols).all(|j| work.get(t, j) == 0);
                if clean || !changed {
                    break;
                }
            }
        }
        let diagonal = (0..rows.min(cols)).map(|i| work.get(i, i)).collect();
        Self { left, right, diagonal, cols, modulus: d }
    }

    pub fn is_injective(&self) -> bool {
        self.diagonal.len() == self.cols && self.diagonal.iter().all(|&u| gcd(u, self.modulus) == 1)
    }
}

fn find_nonzero(m: &RingMatrix, t: usize) -> Option<(usize, usize)> {
    // Prefer a unit pivot; otherwise the entry sharing the smallest factor with d.
    let mut best: Option<(u64, usize, usize)> = None;
    for i in t..m.rows {
        for j in t..m.cols {
            let v = m.get(i, j);
            if v == 0 {
                continue;
            }
            let g = gcd(v, m.modulus);
            if best.is_none_or(|(bg, _, _)| g < bg) {
                best = Some((g, i, j));
                if g == 1 {
                    return Some((i, j));
                }
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

fn swap_rows(m: &mut RingMatrix, a: usize, b: usize) {
    if a != b {
        for j in 0..m.cols {
            m.data.swap(a * m.cols + j, b * m.cols + j);
        }
    }
}

fn swap_cols(m: &mut RingMatrix, a: usize, b: usize) {
    if a != b {
        for i in 0..m.rows {
            m.data.swap(i * m.cols + a, i * m.cols + b);
        }
    }
}

/// Unimodular 2x2 coefficients sending `(x, y)` to `(gcd, 0)`.
fn bezout_pair(x: u64, y: u64) -> [[i128; 2]; 2] {
    let (x, y) = (x as i128, y as i128);
    if x != 0 && y % x == 0 {
        return [[1, 0], [-(y / x), 1]];
    }
    let (g, s, t) = ext_gcd(x, y);
    [[s, t], [-(y / g), x / g]]
}

fn apply_row_op(m: &mut RingMatrix, p: usize, q: usize, c: [[i128; 2]; 2]) {
    let d = m.modulus as i128;
    for j in 0..m.cols {
        let (a, b) = (m.get(p, j) as i128, m.get(q, j) as i128);
        m.data[p * m.cols + j] = (c[0][0] * a + c[0][1] * b).rem_euclid(d) as u64;
        m.data[q * m.cols + j] = (c[1][0] * a + c[1][1] * b).rem_euclid(d) as u64;
    }
}

fn apply_col_op(m: &mut RingMatrix, p: usize, q: usize, c: [[i128; 2]; 2]) {
    let d = m.modulus as i128;
    for i in 0..m.rows {
        let (a, b) = (m.get(i, p) as i128, m.get(i, q) as i128);
        m.data[i * m.cols + p] = (c[0][0] * a + c[0][1] * b).rem_euclid(d) as u64;
        m.data[i * m.cols + q] = (c[1][0] * a + c[1][1] * b).rem_euclid(d) as u64;
    }
}

fn row_combine(work: &mut RingMatrix, left: &mut RingMatrix, p: usize, q: usize, col: usize) {
    let c = bezout_pair(work.get(p, col), work.get(q, col));
    apply_row_op(work, p, q, c);
    apply_row_op(left, p, q, c);
}

fn col_combine(work: &mut RingMatrix, right: &mut RingMatrix, p: usize, q: usize, row: usize) {
    let c = bezout_pair(work.get(row, p), work.get(row, q));
    apply_col_op(work, p, q, c);
    apply_col_op(right, p, q, c);
}
