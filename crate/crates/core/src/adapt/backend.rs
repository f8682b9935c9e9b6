//! Ansatz evaluation backends: sparse matrices in the m-scheme basis or
//! synthesized circuits on a statevector.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pool::{OperatorPool, PoolOp};
use crate::error::{Error, Result};
use crate::fock::{apply_exp_pool, build_sparse_h, FockBasis, SparseOperator};
use crate::hamiltonian::MSchemeHamiltonian;
use crate::qsim::{occ_to_index, Circuit, StateVector};
use crate::synth::{prepare_reference, synthesize_exponential, Connectivity};
use crate::valence::SlaterDet;

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Matrix,
    Circuit,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "matrix" => Ok(BackendKind::Matrix),
            "circuit" => Ok(BackendKind::Circuit),
            other => Err(Error::Config(format!("unknown backend '{other}' (matrix|circuit)"))),
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::Matrix => "matrix",
            BackendKind::Circuit => "circuit",
        })
    }
}

/// Evaluates `|ψ(θ)⟩ = e^{iθ_n A_n} ⋯ e^{iθ_1 A_1} |ref⟩` and its derivatives.
pub trait Backend: Send {
    /// Energy and `∂E/∂θ_k` for every layer.
    fn energy_and_gradient(&mut self, ops: &[PoolOp], thetas: &[f64]) -> Result<(f64, Vec<f64>)>;
    fn energy(&mut self, ops: &[PoolOp], thetas: &[f64]) -> Result<f64>;
    /// `i⟨ψ|[H, A]|ψ⟩` for every pool generator.
    fn screen(&mut self, ops: &[PoolOp], thetas: &[f64], pool: &OperatorPool) -> Result<Vec<f64>>;
    /// Coefficients of `|ψ⟩` over the m-scheme basis.
    fn coefficients(&mut self, ops: &[PoolOp], thetas: &[f64]) -> Result<Vec<C>>;
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Sparse matrices over the m-scheme basis.
pub struct MatrixBackend {
    pub basis: FockBasis,
    pub h: SparseOperator,
    reference: usize,
    mats: HashMap<PoolOp, SparseOperator>,
}

impl MatrixBackend {
    pub fn new(h: &MSchemeHamiltonian, basis: FockBasis, reference: SlaterDet, pool: &OperatorPool) -> Result<Self> {
        let reference = basis
            .index_of(reference)
            .ok_or_else(|| Error::Config("reference determinant is not in the basis".into()))?;
        let hs = build_sparse_h(h, &basis);
        let mats = pool.ops.par_iter().map(|op| (*op, op.sparse(&basis))).collect();
        Ok(Self { basis, h: hs, reference, mats })
    }

    fn ensure(&mut self, ops: &[PoolOp]) {
        let basis = &self.basis;
        for op in ops {
            self.mats.entry(*op).or_insert_with(|| op.sparse(basis));
        }
    }

    fn state(&self, ops: &[PoolOp], thetas: &[f64]) -> Vec<C> {
        let mut v = vec![C::new(0.0, 0.0); self.basis.dim()];
        v[self.reference] = C::new(1.0, 0.0);
        for (op, &t) in ops.iter().zip(thetas) {
            v = apply_exp_pool(&self.mats[op], t, &v);
        }
        v
    }
}

impl Backend for MatrixBackend {
    fn energy(&mut self, ops: &[PoolOp], thetas: &[f64]) -> Result<f64> {
        self.ensure(ops);
        let v = self.state(ops, thetas);
        Ok(dot(&v, &self.h.matvec(&v)).re)
    }

    fn energy_and_gradient(&mut self, ops: &[PoolOp], thetas: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.ensure(ops);
        let mut psi = self.state(ops, thetas);
        let mut sigma = self.h.matvec(&psi);
        let e = dot(&psi, &sigma).re;
        let mut grad = vec![0.0; ops.len()];
        for k in (0..ops.len()).rev() {
            let a = &self.mats[&ops[k]];
            grad[k] = -2.0 * dot(&sigma, &a.matvec(&psi)).im;
            psi = apply_exp_pool(a, -thetas[k], &psi);
            sigma = apply_exp_pool(a, -thetas[k], &sigma);
        }
        Ok((e, grad))
    }

    fn screen(&mut self, ops: &[PoolOp], thetas: &[f64], pool: &OperatorPool) -> Result<Vec<f64>> {
        self.ensure(ops);
        self.ensure(&pool.ops);
        let psi = self.state(ops, thetas);
        let sigma = self.h.matvec(&psi);
        let mats = &self.mats;
        Ok(pool.ops.par_iter().map(|op| -2.0 * dot(&sigma, &mats[op].matvec(&psi)).im).collect())
    }

    fn coefficients(&mut self, ops: &[PoolOp], thetas: &[f64]) -> Result<Vec<C>> {
        self.ensure(ops);
        Ok(self.state(ops, thetas))
    }
}

/// Statevector simulation of the synthesized circuits. Observables are read from the
/// statevector restricted to the m-scheme sector, which the circuits must not leave.
pub struct CircuitBackend {
    pub n_qubits: usize,
    pub basis: FockBasis,
    h: SparseOperator,
    reference: Circuit,
    connectivity: Connectivity,
    mats: HashMap<PoolOp, SparseOperator>,
    slots: Vec<usize>,
}

/// Leakage out of the sector tolerated before the state is rejected.
const LEAK_TOL: f64 = 1e-9;

impl CircuitBackend {
    pub fn new(
        h: &MSchemeHamiltonian,
        basis: FockBasis,
        reference: SlaterDet,
        pool: &OperatorPool,
        connectivity: Connectivity,
    ) -> Result<Self> {
        let n = h.n_qubits();
        if n > crate::qsim::MAX_QUBITS {
            return Err(Error::Resource(format!(
                "{n} qubits exceed the {}-qubit statevector ceiling",
                crate::qsim::MAX_QUBITS
            )));
        }
        if basis.index_of(reference).is_none() {
            return Err(Error::Config("reference determinant is not in the basis".into()));
        }
        let hs = build_sparse_h(h, &basis);
        let mats = pool.ops.par_iter().map(|op| (*op, op.sparse(&basis))).collect();
        let slots = basis.dets.iter().map(|d| occ_to_index(d.occupation, n)).collect();
        Ok(Self { n_qubits: n, h: hs, reference: prepare_reference(n, reference)?, connectivity, mats, slots, basis })
    }

    fn ensure(&mut self, ops: &[PoolOp]) {
        let basis = &self.basis;
        for op in ops {
            self.mats.entry(*op).or_insert_with(|| op.sparse(basis));
        }
    }

    fn layers(&self, ops: &[PoolOp], thetas: &[f64]) -> Result<Vec<Circuit>> {
        ops.iter()
            .zip(thetas)
            .map(|(op, &t)| Ok(synthesize_exponential(self.n_qubits, op.indices(), t, self.connectivity)?.circuit))
            .collect()
    }

    fn state(&self, layers: &[Circuit]) -> Result<StateVector> {
        let mut sv = StateVector::zero_state(self.n_qubits)?;
        sv.apply(&self.reference)?;
        for c in layers {
            sv.apply(c)?;
        }
        Ok(sv)
    }

    fn project(&self, sv: &StateVector) -> Result<Vec<C>> {
        let c: Vec<C> = self.slots.iter().map(|&i| sv.amps[i]).collect();
        let inside: f64 = c.iter().map(|a| a.norm_sqr()).sum();
        let total = sv.norm().powi(2);
        if (total - inside).abs() > LEAK_TOL * total.max(1.0) {
            return Err(Error::Solver(format!("circuit state leaked {:.3e} out of the sector", total - inside)));
        }
        Ok(c)
    }

    fn embed(&self, c: &[C]) -> Result<StateVector> {
        let mut amps = vec![C::new(0.0, 0.0); 1 << self.n_qubits];
        for (&i, &a) in self.slots.iter().zip(c) {
            amps[i] = a;
        }
        StateVector::from_amplitudes(self.n_qubits, amps)
    }
}

impl Backend for CircuitBackend {
    fn energy(&mut self, ops: &[PoolOp], thetas: &[f64]) -> Result<f64> {
        let c = self.project(&self.state(&self.layers(ops, thetas)?)?)?;
        Ok(dot(&c, &self.h.matvec(&c)).re)
    }

    fn energy_and_gradient(&mut self, ops: &[PoolOp], thetas: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.ensure(ops);
        let layers = self.layers(ops, thetas)?;
        let mut psi = self.state(&layers)?;
        let c = self.project(&psi)?;
        let hc = self.h.matvec(&c);
        let e = dot(&c, &hc).re;
        let mut sigma = self.embed(&hc)?;
        let mut grad = vec![0.0; ops.len()];
        for k in (0..ops.len()).rev() {
            let (pc, sc) = (self.project(&psi)?, self.project(&sigma)?);
            grad[k] = -2.0 * dot(&sc, &self.mats[&ops[k]].matvec(&pc)).im;
            let undo = layers[k].inverse();
            psi.apply(&undo)?;
            sigma.apply(&undo)?;
        }
        Ok((e, grad))
    }

    fn screen(&mut self, ops: &[PoolOp], thetas: &[f64], pool: &OperatorPool) -> Result<Vec<f64>> {
        self.ensure(&pool.ops);
        let c = self.project(&self.state(&self.layers(ops, thetas)?)?)?;
        let hc = self.h.matvec(&c);
        let mats = &self.mats;
        Ok(pool.ops.par_iter().map(|op| -2.0 * dot(&hc, &mats[op].matvec(&c)).im).collect())
    }

    fn coefficients(&mut self, ops: &[PoolOp], thetas: &[f64]) -> Result<Vec<C>> {
        self.project(&self.state(&self.layers(ops, thetas)?)?)
    }
}
