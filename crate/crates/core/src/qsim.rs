//! Statevector simulator for the gate set used by the ansatz and measurement circuits.
//!
//! Qubit 0 is the most significant bit of the amplitude index, so a ket string
//! reads qubits 0..N-1 from left to right. Occupation bitstrings elsewhere in the
//! crate use bit `q` for qubit `q`; [`occ_to_index`] converts between the two.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::valence::SlaterDet;

pub const MAX_QUBITS: usize = 24;
const PAR_THRESHOLD: usize = 1 << 14;

type C = Complex64;

#[inline]
pub fn occ_to_index(occ: u64, n: usize) -> usize {
    if n == 0 {
        0
    } else {
        (occ.reverse_bits() >> (64 - n)) as usize
    }
}

#[inline]
pub fn index_to_occ(idx: usize, n: usize) -> u64 {
    occ_to_index(idx as u64, n) as u64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    X(usize),
    H(usize),
    Rx(usize, f64),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
    Fswap(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(q) | Gate::H(q) | Gate::Rx(q, _) | Gate::Rz(q, _) => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Fswap(a, b) => vec![a, b],
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx(q, t) => Gate::Rx(q, -t),
            Gate::Rz(q, t) => Gate::Rz(q, -t),
            g => g,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::Fswap(..))
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::X(q) => write!(f, "X {q}"),
            Gate::H(q) => write!(f, "H {q}"),
            Gate::Rx(q, t) => write!(f, "RX {q} {t}"),
            Gate::Rz(q, t) => write!(f, "RZ {q} {t}"),
            Gate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
            Gate::Fswap(a, b) => write!(f, "FSWAP {a} {b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new() }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        let qs = g.qubits();
        if qs.iter().any(|&q| q >= self.n_qubits) {
            return Err(Error::Domain(format!("gate '{g}' outside {} qubits", self.n_qubits)));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::Domain(format!("gate '{g}' repeats a qubit")));
        }
        self.gates.push(g);
        Ok(())
    }

    /// Push for internally generated gates whose indices are known to be valid.
    pub(crate) fn add(&mut self, g: Gate) {
        debug_assert!(g.qubits().iter().all(|&q| q < self.n_qubits));
        self.gates.push(g);
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::Domain("appending a wider circuit".into()));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { n_qubits: self.n_qubits, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    pub fn count_cnot_gates(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Cnot { .. })).count()
    }

    pub fn count_fswap_gates(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Fswap(..))).count()
    }

    /// CNOT cost in compiled units: each FSWAP costs three CNOTs.
    pub fn cnot_count(&self) -> usize {
        self.count_cnot_gates() + 3 * self.count_fswap_gates()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Replaces every FSWAP by three CNOTs and Z rotations (equal up to a global phase).
    pub fn compiled(&self) -> Circuit {
        let mut out = Circuit::new(self.n_qubits);
        for &g in &self.gates {
            match g {
                Gate::Fswap(a, b) => {
                    for h in compile_fswap(a, b) {
                        out.add(h);
                    }
                }
                other => out.add(other),
            }
        }
        out
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    pub fn parse(n_qubits: usize, text: &str) -> Result<Circuit> {
        let mut c = Circuit::new(n_qubits);
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: &str| Error::Parse { line: ln + 1, msg: m.to_string() };
            let f: Vec<&str> = line.split_whitespace().collect();
            let q = |i: usize| -> Result<usize> {
                f.get(i).ok_or_else(|| err("missing qubit"))?.parse().map_err(|_| err("bad qubit"))
            };
            let a = |i: usize| -> Result<f64> {
                f.get(i).ok_or_else(|| err("missing angle"))?.parse().map_err(|_| err("bad angle"))
            };
            let g = match f[0] {
                "X" => Gate::X(q(1)?),
                "H" => Gate::H(q(1)?),
                "RX" => Gate::Rx(q(1)?, a(2)?),
                "RZ" => Gate::Rz(q(1)?, a(2)?),
                "CNOT" => Gate::Cnot { control: q(1)?, target: q(2)? },
                "FSWAP" => Gate::Fswap(q(1)?, q(2)?),
                other => return Err(err(&format!("unknown gate {other}"))),
            };
            c.push(g)?;
        }
        Ok(c)
    }
}

/// FSWAP(a,b) = CZ·SWAP written with three CNOTs, up to the global phase `e^{−iπ/4}`.
pub fn compile_fswap(a: usize, b: usize) -> [Gate; 6] {
    use std::f64::consts::FRAC_PI_2;
    [
        Gate::Cnot { control: a, target: b },
        Gate::Cnot { control: b, target: a },
        Gate::Rz(b, -FRAC_PI_2),
        Gate::Cnot { control: a, target: b },
        Gate::Rz(a, FRAC_PI_2),
        Gate::Rz(b, FRAC_PI_2),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amps: Vec<C>,
}

fn pair_kernel<F>(amps: &mut [C], bit: usize, f: F)
where
    F: Fn(usize, &mut C, &mut C) + Sync + Send,
{
    let block = 2 * bit;
    if amps.len() >= PAR_THRESHOLD {
        if amps.len() / block >= 64 {
            amps.par_chunks_mut(block).enumerate().for_each(|(ci, chunk)| {
                let (lo, hi) = chunk.split_at_mut(bit);
                let base = ci * block;
                for (off, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    f(base + off, a, b);
                }
            });
        } else {
            for (ci, chunk) in amps.chunks_mut(block).enumerate() {
                let (lo, hi) = chunk.split_at_mut(bit);
                let base = ci * block;
                lo.par_iter_mut().zip(hi.par_iter_mut()).enumerate().for_each(|(off, (a, b))| f(base + off, a, b));
            }
        }
    } else {
        for (ci, chunk) in amps.chunks_mut(block).enumerate() {
            let (lo, hi) = chunk.split_at_mut(bit);
            let base = ci * block;
            for (off, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                f(base + off, a, b);
            }
        }
    }
}

impl StateVector {
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Resource(format!(
                "{n_qubits} qubits exceed the {MAX_QUBITS}-qubit statevector ceiling"
            )));
        }
        let mut amps = vec![C::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_det(n_qubits: usize, det: SlaterDet) -> Result<Self> {
        let mut s = Self::zero_state(n_qubits)?;
        s.amps[0] = C::new(0.0, 0.0);
        s.amps[occ_to_index(det.occupation, n_qubits)] = C::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Resource(format!("{n_qubits} qubits exceed the ceiling")));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::Domain("amplitude count does not match qubit count".into()));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let mut amps: Vec<C> =
            (0..1usize << n_qubits).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Self { n_qubits, amps }
    }

    #[inline]
    fn bit(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    pub fn amplitude_of(&self, det: SlaterDet) -> C {
        self.amps[occ_to_index(det.occupation, self.n_qubits)]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> C {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply_gate(&mut self, g: &Gate) {
        let n = self.n_qubits;
        match *g {
            Gate::X(q) => pair_kernel(&mut self.amps, 1 << (n - 1 - q), |_, a, b| std::mem::swap(a, b)),
            Gate::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                pair_kernel(&mut self.amps, 1 << (n - 1 - q), |_, a, b| {
                    let (x, y) = (*a, *b);
                    *a = (x + y) * s;
                    *b = (x - y) * s;
                });
            }
            Gate::Rx(q, t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                let mis = C::new(0.0, -s);
                pair_kernel(&mut self.amps, 1 << (n - 1 - q), |_, a, b| {
                    let (x, y) = (*a, *b);
                    *a = x * c + y * mis;
                    *b = x * mis + y * c;
                });
            }
            Gate::Rz(q, t) => {
                let e0 = C::from_polar(1.0, -t / 2.0);
                let e1 = C::from_polar(1.0, t / 2.0);
                pair_kernel(&mut self.amps, 1 << (n - 1 - q), |_, a, b| {
                    *a *= e0;
                    *b *= e1;
                });
            }
            Gate::Cnot { control, target } => {
                let cb = self.bit(control);
                pair_kernel(&mut self.amps, 1 << (n - 1 - target), move |i, a, b| {
                    if i & cb != 0 {
                        std::mem::swap(a, b)
                    }
                });
            }
            Gate::Fswap(a, b) => {
                let (ab, bb) = (self.bit(a), self.bit(b));
                for i in 0..self.amps.len() {
                    if i & (ab | bb) == 0 {
                        self.amps.swap(i | ab, i | bb);
                        let k = i | ab | bb;
                        self.amps[k] = -self.amps[k];
                    }
                }
            }
        }
    }

    pub fn apply(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits != self.n_qubits {
            return Err(Error::Domain(format!(
                "circuit on {} qubits applied to a {}-qubit state",
                circuit.n_qubits, self.n_qubits
            )));
        }
        for g in circuit.gates() {
            self.apply_gate(g);
        }
        Ok(())
    }

    pub fn applied(&self, circuit: &Circuit) -> Result<StateVector> {
        let mut s = self.clone();
        s.apply(circuit)?;
        Ok(s)
    }

    /// `op |ψ⟩` for an arbitrary Pauli sum.
    pub fn apply_pauli_sum(&self, op: &PauliSum) -> StateVector {
        let n = self.n_qubits;
        let terms: Vec<(usize, usize, C)> = op
            .terms()
            .map(|t| {
                let ph = crate::pauli::i_pow((t.x & t.z).count_ones() as i64);
                (occ_to_index(t.x, n), occ_to_index(t.z, n), t.coeff * ph)
            })
            .collect();
        let dim = self.amps.len();
        let src = &self.amps;
        let gather = |j: usize| -> C {
            let mut acc = C::new(0.0, 0.0);
            for &(xm, zm, c) in &terms {
                let i = j ^ xm;
                let sign = if (i & zm).count_ones() & 1 == 1 { -1.0 } else { 1.0 };
                acc += c * src[i] * sign;
            }
            acc
        };
        let amps: Vec<C> = if dim >= PAR_THRESHOLD {
            (0..dim).into_par_iter().map(gather).collect()
        } else {
            (0..dim).map(gather).collect()
        };
        StateVector { n_qubits: n, amps }
    }

    pub fn expectation_complex(&self, op: &PauliSum) -> C {
        self.inner(&self.apply_pauli_sum(op))
    }

    /// `⟨ψ|op|ψ⟩` for a hermitian sum.
    pub fn expectation(&self, op: &PauliSum) -> Result<f64> {
        if !op.is_hermitian(1e-12) {
            return Err(Error::Domain("expectation of a non-hermitian operator".into()));
        }
        let v = self.expectation_complex(op);
        Ok(v.re)
    }

    /// Probabilities indexed by amplitude index.
    pub fn probability_vector(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal distribution over `qubits`; keys list the outcomes in the given qubit order.
    pub fn probabilities(&self, qubits: &[usize]) -> Result<BTreeMap<String, f64>> {
        let mut seen = 0u64;
        for &q in qubits {
            if q >= self.n_qubits || seen >> q & 1 == 1 {
                return Err(Error::Domain(format!("invalid or repeated qubit {q}")));
            }
            seen |= 1 << q;
        }
        let mut acc: BTreeMap<String, f64> = BTreeMap::new();
        let mut tally = vec![0.0f64; 1 << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut key = 0usize;
            for (k, &q) in qubits.iter().enumerate() {
                if i & self.bit(q) != 0 {
                    key |= 1 << k;
                }
            }
            tally[key] += a.norm_sqr();
        }
        for (key, p) in tally.into_iter().enumerate() {
            if p > 0.0 {
                let s: String = (0..qubits.len()).map(|k| if key >> k & 1 == 1 { '1' } else { '0' }).collect();
                acc.insert(s, p);
            }
        }
        Ok(acc)
    }

    /// Occupation probability of qubit `q`.
    pub fn occupation(&self, q: usize) -> f64 {
        let b = self.bit(q);
        self.amps.iter().enumerate().filter(|(i, _)| i & b != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn orbital_entropy(&self, q: usize) -> f64 {
        binary_entropy(self.occupation(q))
    }

    /// Little-endian dump: magic, qubit count, then (re, im) pairs.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"NSVQESV1")?;
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump(bytes: &[u8]) -> Result<StateVector> {
        if bytes.len() < 12 || &bytes[..8] != b"NSVQESV1" {
            return Err(Error::Domain("not a statevector dump".into()));
        }
        let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let body = &bytes[12..];
        if n > MAX_QUBITS || body.len() != 16 << n {
            return Err(Error::Domain("truncated statevector dump".into()));
        }
        let amps = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                C::new(re, im)
            })
            .collect();
        Ok(StateVector { n_qubits: n, amps })
    }
}

/// `−(1−γ)log₂(1−γ) − γ log₂ γ` with `0·log 0 = 0`.
pub fn binary_entropy(gamma: f64) -> f64 {
    let g = gamma.clamp(0.0, 1.0);
    let h = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    h(g) + h(1.0 - g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn reference_preparation() {
        let mut s = StateVector::zero_state(6).unwrap();
        let mut circ = Circuit::new(6);
        circ.push(Gate::X(0)).unwrap();
        circ.push(Gate::X(3)).unwrap();
        s.apply(&circ).unwrap();
        assert_eq!(s.amplitude_of(SlaterDet::parse_ket("100100").unwrap()), c(1.0, 0.0));
        assert_eq!(s.amps[0b100100], c(1.0, 0.0));
    }

    #[test]
    fn hadamard() {
        let mut s = StateVector::zero_state(1).unwrap();
        s.apply_gate(&Gate::H(0));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amps[0] - c(r, 0.0)).norm() < 1e-15);
        assert!((s.amps[1] - c(r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fswap_on_doubly_occupied() {
        let mut s = StateVector::from_det(2, SlaterDet::from_indices(&[0, 1])).unwrap();
        s.apply_gate(&Gate::Fswap(0, 1));
        assert_eq!(s.amps[3], c(-1.0, 0.0));
        let mut t = StateVector::from_det(2, SlaterDet::from_indices(&[0])).unwrap();
        t.apply_gate(&Gate::Fswap(0, 1));
        assert_eq!(t.amplitude_of(SlaterDet::from_indices(&[1])), c(1.0, 0.0));
    }

    #[test]
    fn fswap_compilation_matches_up_to_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (a, b) in [(0, 1), (1, 0), (1, 2), (0, 2)] {
            let s = StateVector::random(3, &mut rng);
            let mut native = Circuit::new(3);
            native.push(Gate::Fswap(a, b)).unwrap();
            let x = s.applied(&native).unwrap();
            let y = s.applied(&native.compiled()).unwrap();
            let phase = x.inner(&y);
            assert!((phase.norm() - 1.0).abs() < 1e-12);
            let dev = x.amps.iter().zip(&y.amps).map(|(p, q)| (p * phase - q).norm()).fold(0.0, f64::max);
            assert!(dev < 1e-12, "{a}{b} {dev}");
        }
    }

    #[test]
    fn pauli_expectations() {
        let s = StateVector::zero_state(1).unwrap();
        let z = PauliSum::from_word("Z", c(1.0, 0.0)).unwrap();
        assert!((s.expectation(&z).unwrap() - 1.0).abs() < 1e-15);
        let d = StateVector::from_det(6, SlaterDet::from_indices(&[0, 3])).unwrap();
        let n0 = crate::jw::jw_number(6, 0);
        assert!((d.expectation(&n0).unwrap() - 1.0).abs() < 1e-15);
        let nonherm = PauliSum::from_word("X", c(0.0, 1.0)).unwrap();
        assert!(s.expectation(&nonherm).is_err());
    }

    #[test]
    fn pauli_application_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 4;
        let s = StateVector::random(n, &mut rng);
        let op = crate::jw::jw_double_hop(n, 0, 2, 1, 3).add(&crate::jw::jw_number(n, 1));
        let dense = op.to_dense();
        let got = s.apply_pauli_sum(&op);
        for idx in 0..16usize {
            let occ = index_to_occ(idx, n) as usize;
            let mut expect = c(0.0, 0.0);
            for j in 0..16usize {
                expect += dense[(occ, j)] * s.amps[occ_to_index(j as u64, n)];
            }
            assert!((expect - got.amps[idx]).norm() < 1e-13);
        }
    }

    #[test]
    fn marginals() {
        let d = StateVector::from_det(6, SlaterDet::from_indices(&[0, 3])).unwrap();
        let m = d.probabilities(&[0]).unwrap();
        assert_eq!(m.get("1"), Some(&1.0));
        let mut bell = StateVector::zero_state(2).unwrap();
        bell.apply_gate(&Gate::H(0));
        bell.apply_gate(&Gate::Cnot { control: 0, target: 1 });
        let m = bell.probabilities(&[0, 1]).unwrap();
        assert!((m["00"] - 0.5).abs() < 1e-15 && (m["11"] - 0.5).abs() < 1e-15);
        assert_eq!(m.len(), 2);
        assert!(bell.probabilities(&[0, 0]).is_err());
    }

    #[test]
    fn entropy() {
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0), 0.0);
        let d = StateVector::from_det(2, SlaterDet::from_indices(&[0])).unwrap();
        assert_eq!(d.orbital_entropy(0), 0.0);
        assert_eq!(d.orbital_entropy(1), 0.0);
    }

    #[test]
    fn ceiling() {
        assert!(matches!(StateVector::zero_state(25), Err(Error::Resource(_))));
    }

    #[test]
    fn dump_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = StateVector::random(3, &mut rng);
        let mut buf = Vec::new();
        s.write_dump(&mut buf).unwrap();
        assert_eq!(StateVector::read_dump(&buf).unwrap(), s);
    }

    #[test]
    fn circuit_text_roundtrip() {
        let mut c1 = Circuit::new(6);
        c1.push(Gate::Cnot { control: 3, target: 4 }).unwrap();
        c1.push(Gate::Rz(5, -0.0786)).unwrap();
        c1.push(Gate::Fswap(1, 2)).unwrap();
        let text = c1.dump();
        assert_eq!(text, "CNOT 3 4\nRZ 5 -0.0786\nFSWAP 1 2\n");
        assert_eq!(Circuit::parse(6, &text).unwrap(), c1);
        assert_eq!(c1.cnot_count(), 4);
        assert!(c1.clone().push(Gate::X(6)).is_err());
    }
}
