//! Pauli strings stored as bitmasks and canonical sums of them.
//!
//! A term `(x, z)` denotes the tensor product `⊗_q σ_q` with `σ_q = X` for an
//! x-only bit, `Z` for a z-only bit and `Y` when both bits are set. Written with
//! masks this is `i^{|x&z|} X^x Z^z`, which makes multiplication a pair of XORs
//! plus a phase count. Bit `q` of a mask refers to qubit `q`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const PRUNE_TOL: f64 = 1e-14;

const I_POW: [Complex64; 4] =
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];

#[inline]
pub fn i_pow(k: i64) -> Complex64 {
    I_POW[k.rem_euclid(4) as usize]
}

#[inline]
fn popc(m: u64) -> i64 {
    m.count_ones() as i64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub x: u64,
    pub z: u64,
    pub coeff: Complex64,
}

impl PauliTerm {
    pub fn new(x: u64, z: u64, coeff: Complex64) -> Self {
        Self { x, z, coeff }
    }

    /// Product of the bare strings: returns the phase and masks of `P(x1,z1)·P(x2,z2)`.
    #[inline]
    pub fn mul_strings(x1: u64, z1: u64, x2: u64, z2: u64) -> (Complex64, u64, u64) {
        let x3 = x1 ^ x2;
        let z3 = z1 ^ z2;
        let k = popc(x1 & z1) + popc(x2 & z2) - popc(x3 & z3) + 2 * popc(z1 & x2);
        (i_pow(k), x3, z3)
    }

    #[inline]
    pub fn anticommutes_with(&self, other: &PauliTerm) -> bool {
        strings_anticommute(self.x, self.z, other.x, other.z)
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    /// Action on a computational basis state `b` (bit q = qubit q): returns (amplitude, image).
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (Complex64, u64) {
        let k = popc(self.x & self.z) + 2 * popc(b & self.z);
        (self.coeff * i_pow(k), b ^ self.x)
    }

    /// Single-qubit letter at qubit `q`.
    pub fn letter(&self, q: usize) -> char {
        match (self.x >> q & 1, self.z >> q & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            _ => 'Y',
        }
    }
}

#[inline]
pub fn strings_anticommute(x1: u64, z1: u64, x2: u64, z2: u64) -> bool {
    ((x1 & z2).count_ones() + (z1 & x2).count_ones()) % 2 == 1
}

/// Canonical weighted sum of Pauli strings on `n_qubits` qubits, keyed by (z, x).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PauliSum {
    pub n_qubits: usize,
    terms: BTreeMap<(u64, u64), Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_term(n_qubits, 0, 0, Complex64::new(1.0, 0.0))
    }

    pub fn from_term(n_qubits: usize, x: u64, z: u64, coeff: Complex64) -> Self {
        let mut s = Self::zero(n_qubits);
        s.add_term(x, z, coeff);
        s.prune();
        s
    }

    /// Parses a compact word such as `"XIZY"` (qubit 0 first).
    pub fn from_word(word: &str, coeff: Complex64) -> Result<Self> {
        let (mut x, mut z) = (0u64, 0u64);
        for (q, c) in word.chars().enumerate() {
            match c {
                'I' => {}
                'X' => x |= 1 << q,
                'Z' => z |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q
                }
                _ => return Err(Error::Domain(format!("bad Pauli letter '{c}'"))),
            }
        }
        Ok(Self::from_term(word.len(), x, z, coeff))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = PauliTerm> + '_ {
        self.terms.iter().map(|(&(z, x), &c)| PauliTerm::new(x, z, c))
    }

    pub fn add_term(&mut self, x: u64, z: u64, coeff: Complex64) {
        *self.terms.entry((z, x)).or_insert(Complex64::new(0.0, 0.0)) += coeff;
    }

    pub fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > PRUNE_TOL);
    }

    /// Idempotent canonical form: merged duplicates, pruned small coefficients.
    pub fn canonical(&self) -> Self {
        let mut s = self.clone();
        s.prune();
        s
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut s = self.clone();
        for v in s.terms.values_mut() {
            *v *= c;
        }
        s.prune();
        s
    }

    pub fn add(&self, other: &PauliSum) -> Self {
        let mut s = self.clone();
        s.n_qubits = s.n_qubits.max(other.n_qubits);
        for t in other.terms() {
            s.add_term(t.x, t.z, t.coeff);
        }
        s.prune();
        s
    }

    pub fn add_assign(&mut self, other: &PauliSum) {
        self.n_qubits = self.n_qubits.max(other.n_qubits);
        for t in other.terms() {
            self.add_term(t.x, t.z, t.coeff);
        }
        self.prune();
    }

    pub fn mul(&self, other: &PauliSum) -> Self {
        let mut s = Self::zero(self.n_qubits.max(other.n_qubits));
        for a in self.terms() {
            for b in other.terms() {
                let (ph, x, z) = PauliTerm::mul_strings(a.x, a.z, b.x, b.z);
                s.add_term(x, z, a.coeff * b.coeff * ph);
            }
        }
        s.prune();
        s
    }

    pub fn adjoint(&self) -> Self {
        let mut s = self.clone();
        for v in s.terms.values_mut() {
            *v = v.conj();
        }
        s
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(|&(_, x)| x == 0)
    }

    /// Union of the supports of all strings.
    pub fn support(&self) -> u64 {
        self.terms.keys().fold(0, |m, &(z, x)| m | z | x)
    }

    pub fn coeff(&self, x: u64, z: u64) -> Complex64 {
        self.terms.get(&(z, x)).copied().unwrap_or_default()
    }

    pub fn is_close(&self, other: &PauliSum, tol: f64) -> bool {
        let diff = self.add(&other.scale(Complex64::new(-1.0, 0.0)));
        diff.terms.values().all(|c| c.norm() <= tol)
    }

    /// Maximum absolute coefficient, a cheap norm bound.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Dense matrix with row/column index bit q = qubit q.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for t in self.terms() {
            for b in 0..dim as u64 {
                let (amp, img) = t.apply_to_basis(b);
                m[(img as usize, b as usize)] += amp;
            }
        }
        m
    }

    /// Human-readable rendering, one term per line: `+0.125 · X0 Z1 Y3`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for t in self.terms() {
            let c = t.coeff;
            let coeff = if c.im.abs() < PRUNE_TOL {
                format!("{:+}", c.re)
            } else if c.re.abs() < PRUNE_TOL {
                format!("{:+}i", c.im)
            } else {
                format!("({}{:+}i)", c.re, c.im)
            };
            let mut word = Vec::new();
            for q in 0..self.n_qubits.max(64 - (t.support().leading_zeros() as usize)) {
                let l = t.letter(q);
                if l != 'I' {
                    word.push(format!("{l}{q}"));
                }
            }
            let body = if word.is_empty() { "I".to_string() } else { word.join(" ") };
            out.push_str(&format!("{coeff} · {body}\n"));
        }
        out
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Whether two sums commute, decided term-pair-wise by anticommutation parity
/// with the full product checked when some pairs anticommute.
pub fn commutes(a: &PauliSum, b: &PauliSum) -> bool {
    let any_anti = a.terms().any(|s| b.terms().any(|t| s.anticommutes_with(&t)));
    if !any_anti {
        return true;
    }
    let ab = a.mul(b);
    let ba = b.mul(a);
    ab.is_close(&ba, 1e-12)
}
