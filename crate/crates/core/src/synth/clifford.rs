//! Heisenberg-picture propagation of Pauli strings through Clifford circuits.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::qsim::{Circuit, Gate};

/// Hermitian string with a sign: `(−1)^neg · P(x, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignedString {
    pub x: u64,
    pub z: u64,
    pub neg: bool,
}

fn quarter_turns(theta: f64) -> Option<i32> {
    let k = theta / FRAC_PI_2;
    let r = k.round();
    if (k - r).abs() > 1e-12 {
        return None;
    }
    Some((r as i64).rem_euclid(4) as i32)
}

impl SignedString {
    fn h(&mut self, q: usize) {
        let (xb, zb) = (self.x >> q & 1, self.z >> q & 1);
        self.neg ^= xb & zb == 1;
        self.x = self.x & !(1 << q) | zb << q;
        self.z = self.z & !(1 << q) | xb << q;
    }

    /// Phase gate `diag(1, i)`.
    fn s(&mut self, q: usize) {
        let (xb, zb) = (self.x >> q & 1, self.z >> q & 1);
        self.neg ^= xb & zb == 1;
        self.z ^= xb << q;
    }

    fn cx(&mut self, c: usize, t: usize) {
        let (xc, zc, xt, zt) = (self.x >> c & 1, self.z >> c & 1, self.x >> t & 1, self.z >> t & 1);
        self.neg ^= xc & zt & (xt ^ zc ^ 1) == 1;
        self.x ^= xc << t;
        self.z ^= zt << c;
    }

    /// Maps `P` to `G P G†`.
    pub fn conjugate_gate(&mut self, g: &Gate) -> Result<()> {
        match *g {
            Gate::X(q) => self.neg ^= self.z >> q & 1 == 1,
            Gate::H(q) => self.h(q),
            Gate::Cnot { control, target } => self.cx(control, target),
            Gate::Rz(q, t) => {
                let k = quarter_turns(t).ok_or_else(|| Error::Domain(format!("non-Clifford gate '{g}'")))?;
                for _ in 0..k {
                    self.s(q);
                }
            }
            Gate::Rx(q, t) => {
                let k = quarter_turns(t).ok_or_else(|| Error::Domain(format!("non-Clifford gate '{g}'")))?;
                self.h(q);
                for _ in 0..k {
                    self.s(q);
                }
                self.h(q);
            }
            Gate::Fswap(a, b) => {
                for h in crate::qsim::compile_fswap(a, b) {
                    self.conjugate_gate(&h)?;
                }
            }
        }
        Ok(())
    }
}

/// `U P U†` for the unitary `U` implemented by `circuit`.
pub fn conjugate_string(circuit: &Circuit, x: u64, z: u64) -> Result<SignedString> {
    let mut s = SignedString { x, z, neg: false };
    for g in circuit.gates() {
        s.conjugate_gate(g)?;
    }
    Ok(s)
}

/// `U O U†` for a weighted sum.
pub fn conjugate_sum(circuit: &Circuit, op: &PauliSum) -> Result<PauliSum> {
    let mut out = PauliSum::zero(op.n_qubits.max(circuit.n_qubits));
    for t in op.terms() {
        let s = conjugate_string(circuit, t.x, t.z)?;
        out.add_term(s.x, s.z, if s.neg { -t.coeff } else { t.coeff });
    }
    out.prune();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{index_to_occ, occ_to_index, StateVector};
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unitary(c: &Circuit) -> DMatrix<Complex64> {
        let n = c.n_qubits;
        let dim = 1 << n;
        let mut u = DMatrix::zeros(dim, dim);
        // Dense Pauli matrices index bit q as qubit q; the simulator stores qubit 0 first.
        for col in 0..dim {
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            amps[occ_to_index(col as u64, n)] = Complex64::new(1.0, 0.0);
            let mut sv = StateVector::from_amplitudes(n, amps).unwrap();
            sv.apply(c).unwrap();
            for r in 0..dim {
                u[(index_to_occ(r, n) as usize, col)] = sv.amps[r];
            }
        }
        u
    }

    #[test]
    fn random_clifford_circuits_match_dense_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        for _ in 0..40 {
            let mut c = Circuit::new(n);
            for _ in 0..8 {
                let q = rng.random_range(0..n);
                let t = (q + rng.random_range(1..n)) % n;
                let sgn = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let g = match rng.random_range(0..6) {
                    0 => Gate::X(q),
                    1 => Gate::H(q),
                    2 => Gate::Rx(q, sgn * FRAC_PI_2),
                    3 => Gate::Rz(q, sgn * FRAC_PI_2),
                    4 => Gate::Cnot { control: q, target: t },
                    _ => Gate::Fswap(q, t),
                };
                c.push(g).unwrap();
            }
            let u = unitary(&c);
            for x in 0..8u64 {
                for z in 0..8u64 {
                    let p = PauliSum::from_term(n, x, z, Complex64::new(1.0, 0.0));
                    let dense = &u * p.to_dense() * u.adjoint();
                    let img = conjugate_sum(&c, &p).unwrap().to_dense();
                    assert!((dense - img).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_gates_match_dense_conjugation() {
        let gates = [
            Gate::X(0),
            Gate::H(1),
            Gate::Rx(0, FRAC_PI_2),
            Gate::Rx(1, -FRAC_PI_2),
            Gate::Rz(0, FRAC_PI_2),
            Gate::Rz(1, -FRAC_PI_2),
            Gate::Cnot { control: 0, target: 1 },
            Gate::Cnot { control: 1, target: 0 },
            Gate::Fswap(0, 1),
        ];
        for g in gates {
            let mut c = Circuit::new(2);
            c.push(g).unwrap();
            let u = unitary(&c);
            for x in 0..4u64 {
                for z in 0..4u64 {
                    let p = PauliSum::from_term(2, x, z, Complex64::new(1.0, 0.0));
                    let dense = &u * p.to_dense() * u.adjoint();
                    let img = conjugate_sum(&c, &p).unwrap().to_dense();
                    assert!((dense - img).norm() < 1e-12, "{g} x={x} z={z}");
                }
            }
        }
    }

    #[test]
    fn rejects_generic_rotations() {
        let mut c = Circuit::new(1);
        c.push(Gate::Rz(0, 0.3)).unwrap();
        assert!(conjugate_string(&c, 1, 0).is_err());
    }
}
