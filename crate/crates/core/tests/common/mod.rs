//! Independent dense oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use nsvqe::fock::FockBasis;
use nsvqe::qsim::{occ_to_index, StateVector};
use nsvqe::Complex64;
use rand::Rng;

pub type C = Complex64;

/// Dense `a†_i` on `n` modes; basis index `b` has bit `q` = occupancy of mode `q`.
pub fn creation(n: usize, i: usize) -> DMatrix<C> {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        if b >> i & 1 == 1 {
            continue;
        }
        let below = (b & ((1 << i) - 1)).count_ones();
        let sign = if below % 2 == 1 { -1.0 } else { 1.0 };
        m[(b | 1 << i, b)] = C::new(sign, 0.0);
    }
    m
}

pub fn annihilation(n: usize, i: usize) -> DMatrix<C> {
    creation(n, i).adjoint()
}

/// Product written left to right; `true` creates.
pub fn product(n: usize, ops: &[(usize, bool)]) -> DMatrix<C> {
    let mut acc = DMatrix::identity(1 << n, 1 << n);
    for &(i, c) in ops {
        acc *= if c { creation(n, i) } else { annihilation(n, i) };
    }
    acc
}

pub fn max_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).iter().fold(0.0, |m, x| m.max(x.norm()))
}

/// Random normalized state supported on the determinants of `basis`.
pub fn random_sector_state<R: Rng>(basis: &FockBasis, rng: &mut R) -> StateVector {
    let n = basis.n_qubits;
    let mut amps = vec![C::new(0.0, 0.0); 1 << n];
    for d in &basis.dets {
        amps[occ_to_index(d.occupation, n)] = C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(n, amps).expect("valid size")
}

/// Coefficients of a statevector on the determinants of `basis`.
pub fn restrict(sv: &StateVector, basis: &FockBasis) -> Vec<C> {
    basis.dets.iter().map(|d| sv.amplitude_of(*d)).collect()
}
