//! The adaptive variational loop: gradient screening over the pool, operator
//! selection, joint re-optimization of all angles and per-layer diagnostics.

pub mod backend;
pub mod checkpoint;
pub mod pool;

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use backend::{Backend, BackendKind, CircuitBackend, MatrixBackend};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use pool::{OperatorPool, PoolOp};

use crate::error::{Error, Result};
use crate::fock::{build_sparse_h, ground_state, FockBasis};
use crate::hamiltonian::MSchemeHamiltonian;
use crate::optim::{bfgs, BfgsOptions};
use crate::qsim::binary_entropy;
use crate::synth::{synthesize_exponential, Connectivity};
use crate::valence::SlaterDet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub max_layers: usize,
    /// Stop once the relative energy error reaches this (needs the exact oracle).
    pub eps_target: Option<f64>,
    /// Convergence when every pool gradient is below this in magnitude.
    pub grad_tol: f64,
    /// Optimizer tolerance on the largest gradient component.
    pub gtol: f64,
    pub backend: BackendKind,
    pub connectivity: Connectivity,
    /// Overrides the lowest-diagonal-energy determinant.
    pub reference: Option<SlaterDet>,
    /// Diagonalize exactly for energy error, infidelity and entropies.
    pub exact_oracle: bool,
    /// Compare the screened gradient of each new operator with central differences.
    pub fd_check: bool,
    pub fd_step: f64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            max_layers: 60,
            eps_target: None,
            grad_tol: 1e-6,
            gtol: 1e-6,
            backend: BackendKind::Matrix,
            connectivity: Connectivity::All,
            reference: None,
            exact_oracle: true,
            fd_check: false,
            fd_step: 1e-5,
        }
    }
}

/// Diagnostics recorded after each layer; layer 0 is the reference determinant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerTrace {
    pub layer: usize,
    pub op: Option<PoolOp>,
    /// Largest screened gradient magnitude that led to this layer.
    pub max_gradient: f64,
    pub energy: f64,
    pub eps_e: Option<f64>,
    pub infidelity: Option<f64>,
    /// Single-orbital entropies of the ansatz state.
    pub entropies: Vec<f64>,
    pub mean_entropy_err: Option<f64>,
    pub n_cnot_total: usize,
    /// Objective calls spent optimizing this layer.
    pub n_fc: usize,
    pub fd_gradient_error: Option<f64>,
    pub thetas: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientConverged,
    TargetReached,
    MaxLayers,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::GradientConverged => "gradient_converged",
            StopReason::TargetReached => "target_reached",
            StopReason::MaxLayers => "max_layers",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptState {
    pub reference: SlaterDet,
    pub ops: Vec<PoolOp>,
    pub thetas: Vec<f64>,
    pub backend: BackendKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptOutcome {
    pub traces: Vec<LayerTrace>,
    pub state: AdaptState,
    pub stop: StopReason,
    pub exact_energy: Option<f64>,
    pub pool_size: usize,
    pub basis_dim: usize,
    pub total_fc: usize,
}

/// Largest `|g|` excluding `last`; ties go to the smallest operator. `None` when all are below `tol`.
pub fn select_operator(pool: &OperatorPool, grads: &[f64], last: Option<PoolOp>, tol: f64) -> Option<(PoolOp, f64)> {
    if grads.iter().all(|g| g.abs() < tol) {
        return None;
    }
    let mut best: Option<(PoolOp, f64)> = None;
    for (op, &g) in pool.ops.iter().zip(grads) {
        if Some(*op) == last {
            continue;
        }
        match best {
            Some((_, b)) if g.abs() <= b.abs() => {}
            _ => best = Some((*op, g)),
        }
    }
    best.filter(|(_, g)| g.abs() >= tol)
}

fn entropy_error(s: &[f64], exact: &[f64]) -> f64 {
    let n = s.len().max(1) as f64;
    s.iter().zip(exact).map(|(&a, &b)| if b < 1e-12 { (a - b).abs() } else { (a - b).abs() / b }).sum::<f64>() / n
}

struct Oracle {
    energy: f64,
    coefficients: Vec<Complex64>,
    entropies: Vec<f64>,
}

/// Runs the loop on one Hamiltonian and m-scheme basis.
pub struct AdaptEngine {
    pub config: AdaptConfig,
    pub pool: OperatorPool,
    basis: FockBasis,
    backend: Box<dyn Backend>,
    oracle: Option<Oracle>,
    cnots: HashMap<PoolOp, usize>,
    pub state: AdaptState,
    pub traces: Vec<LayerTrace>,
    total_fc: usize,
}

impl AdaptEngine {
    pub fn new(h: &MSchemeHamiltonian, basis: FockBasis, config: AdaptConfig) -> Result<Self> {
        if basis.dim() == 0 {
            return Err(Error::Config("empty many-body basis".into()));
        }
        if basis.n_qubits != h.n_qubits() {
            return Err(Error::Config("basis and Hamiltonian disagree on the qubit count".into()));
        }
        if config.backend == BackendKind::Circuit && basis.n_qubits > crate::qsim::MAX_QUBITS {
            return Err(Error::Resource(format!(
                "{} qubits exceed the {}-qubit statevector ceiling",
                basis.n_qubits,
                crate::qsim::MAX_QUBITS
            )));
        }
        if let Some(t) = config.eps_target {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::Config("energy target must be positive".into()));
            }
        }
        let reference = match config.reference {
            Some(r) => r,
            None => h.lowest_reference(&basis.dets)?,
        };
        let pool = OperatorPool::build(&h.space).restricted_to(&basis);
        let oracle = if config.exact_oracle {
            let sol = ground_state(&build_sparse_h(h, &basis))?;
            let entropies = occupations(&basis, &sol.coefficients).into_iter().map(binary_entropy).collect();
            Some(Oracle { energy: sol.energy, coefficients: sol.coefficients, entropies })
        } else {
            None
        };
        let backend: Box<dyn Backend> = match config.backend {
            BackendKind::Matrix => Box::new(MatrixBackend::new(h, basis.clone(), reference, &pool)?),
            BackendKind::Circuit => {
                Box::new(CircuitBackend::new(h, basis.clone(), reference, &pool, config.connectivity)?)
            }
        };
        let state = AdaptState { reference, ops: Vec::new(), thetas: Vec::new(), backend: config.backend };
        Ok(Self { config, pool, basis, backend, oracle, cnots: HashMap::new(), state, traces: Vec::new(), total_fc: 0 })
    }

    pub fn exact_energy(&self) -> Option<f64> {
        self.oracle.as_ref().map(|o| o.energy)
    }

    /// Loads a previous ansatz, re-optimizes it and records its trace as one entry.
    pub fn resume(&mut self, ops: Vec<PoolOp>, thetas: Vec<f64>) -> Result<()> {
        if ops.len() != thetas.len() {
            return Err(Error::Config("operator and angle counts differ".into()));
        }
        if ops.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("checkpoint repeats an operator on consecutive layers".into()));
        }
        let n = self.basis.n_qubits;
        for op in &ops {
            if op.indices().iter().any(|&i| i >= n) {
                return Err(Error::Config(format!("checkpoint operator {op} outside {n} qubits")));
            }
        }
        self.state.ops = ops;
        self.state.thetas = thetas;
        if self.traces.is_empty() {
            self.record_reference()?;
        }
        if !self.state.ops.is_empty() {
            let n_fc = self.optimize()?;
            let trace = self.trace(*self.state.ops.last().expect("nonempty"), f64::NAN, n_fc, None)?;
            self.traces.push(LayerTrace { max_gradient: 0.0, ..trace });
        }
        Ok(())
    }

    fn record_reference(&mut self) -> Result<()> {
        let e = self.backend.energy(&[], &[])?;
        let mut t = self.metrics(e, &[], &[])?;
        t.layer = 0;
        self.traces.push(t);
        Ok(())
    }

    fn cnot_cost(&mut self, op: PoolOp) -> Result<usize> {
        if let Some(&c) = self.cnots.get(&op) {
            return Ok(c);
        }
        let c = synthesize_exponential(self.basis.n_qubits, op.indices(), 0.0, self.config.connectivity)?.cnots;
        self.cnots.insert(op, c);
        Ok(c)
    }

    fn metrics(&mut self, energy: f64, ops: &[PoolOp], thetas: &[f64]) -> Result<LayerTrace> {
        let coeffs = self.backend.coefficients(ops, thetas)?;
        let entropies: Vec<f64> = occupations(&self.basis, &coeffs).into_iter().map(binary_entropy).collect();
        let (eps_e, infidelity, mean_entropy_err) = match &self.oracle {
            Some(o) => {
                let eps = if o.energy.abs() < 1e-12 {
                    (energy - o.energy).abs()
                } else {
                    (energy - o.energy).abs() / o.energy.abs()
                };
                let ov: Complex64 = o.coefficients.iter().zip(&coeffs).map(|(a, b)| a.conj() * b).sum();
                let inf = (1.0 - ov.norm_sqr()).clamp(0.0, 1.0);
                (Some(eps), Some(inf), Some(entropy_error(&entropies, &o.entropies)))
            }
            None => (None, None, None),
        };
        let mut n_cnot_total = 0;
        for op in ops {
            n_cnot_total += self.cnot_cost(*op)?;
        }
        Ok(LayerTrace {
            layer: ops.len(),
            op: ops.last().copied(),
            max_gradient: 0.0,
            energy,
            eps_e,
            infidelity,
            entropies,
            mean_entropy_err,
            n_cnot_total,
            n_fc: 0,
            fd_gradient_error: None,
            thetas: thetas.to_vec(),
        })
    }

    fn trace(&mut self, op: PoolOp, max_gradient: f64, n_fc: usize, fd: Option<f64>) -> Result<LayerTrace> {
        let (ops, thetas) = (self.state.ops.clone(), self.state.thetas.clone());
        let e = self.backend.energy(&ops, &thetas)?;
        let mut t = self.metrics(e, &ops, &thetas)?;
        t.op = Some(op);
        t.max_gradient = max_gradient;
        t.n_fc = n_fc;
        t.fd_gradient_error = fd;
        Ok(t)
    }

    /// Joint BFGS over all angles from the current values.
    fn optimize(&mut self) -> Result<usize> {
        let ops = self.state.ops.clone();
        let backend = &mut self.backend;
        let mut failure: Option<Error> = None;
        let objective = |x: &[f64]| match backend.energy_and_gradient(&ops, x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                (f64::NAN, vec![f64::NAN; x.len()])
            }
        };
        let opts = BfgsOptions { gtol: self.config.gtol, ..BfgsOptions::default() };
        let res = bfgs(objective, &self.state.thetas, opts);
        if let Some(e) = failure {
            return Err(e);
        }
        let res = res?;
        self.state.thetas = res.x;
        self.total_fc += res.n_fc;
        Ok(res.n_fc)
    }

    fn target_reached(&self) -> bool {
        match (self.config.eps_target, self.traces.last().and_then(|t| t.eps_e)) {
            (Some(target), Some(eps)) => eps <= target,
            _ => false,
        }
    }

    /// Adds one layer. Returns the stop reason instead when the loop should end.
    pub fn step(&mut self) -> Result<Option<StopReason>> {
        if self.traces.is_empty() {
            self.record_reference()?;
        }
        if self.target_reached() {
            return Ok(Some(StopReason::TargetReached));
        }
        if self.state.ops.len() >= self.config.max_layers {
            return Ok(Some(StopReason::MaxLayers));
        }
        let (ops, thetas) = (self.state.ops.clone(), self.state.thetas.clone());
        let grads = self.backend.screen(&ops, &thetas, &self.pool)?;
        let Some((op, g)) = select_operator(&self.pool, &grads, ops.last().copied(), self.config.grad_tol) else {
            return Ok(Some(StopReason::GradientConverged));
        };
        let fd = if self.config.fd_check {
            let h = self.config.fd_step;
            let mut ext = ops.clone();
            ext.push(op);
            let mut th = thetas.clone();
            th.push(h);
            let ep = self.backend.energy(&ext, &th)?;
            *th.last_mut().expect("nonempty") = -h;
            let em = self.backend.energy(&ext, &th)?;
            Some(((ep - em) / (2.0 * h) - g).abs())
        } else {
            None
        };
        let e_prev = self.traces.last().expect("reference recorded").energy;
        self.state.ops.push(op);
        self.state.thetas.push(0.0);
        let n_fc = self.optimize()?;
        let t = self.trace(op, g.abs(), n_fc, fd)?;
        if t.energy > e_prev + 1e-10 * (1.0 + e_prev.abs()) {
            return Err(Error::Solver(format!(
                "energy rose from {e_prev} to {} at layer {}",
                t.energy,
                self.state.ops.len()
            )));
        }
        self.traces.push(t);
        Ok(None)
    }

    /// Iterates until convergence, the energy target or the layer limit.
    pub fn run(mut self) -> Result<AdaptOutcome> {
        let stop = loop {
            if let Some(reason) = self.step()? {
                break reason;
            }
        };
        Ok(self.finish(stop))
    }

    /// Packages the current state once a driver loop over [`step`](Self::step) has stopped.
    pub fn finish(self, stop: StopReason) -> AdaptOutcome {
        AdaptOutcome {
            exact_energy: self.exact_energy(),
            pool_size: self.pool.len(),
            basis_dim: self.basis.dim(),
            total_fc: self.total_fc,
            traces: self.traces,
            state: self.state,
            stop,
        }
    }
}

/// `⟨n_q⟩` for every qubit from coefficients over a basis.
pub fn occupations(basis: &FockBasis, coeffs: &[Complex64]) -> Vec<f64> {
    let mut g = vec![0.0; basis.n_qubits];
    for (d, c) in basis.dets.iter().zip(coeffs) {
        let w = c.norm_sqr();
        for q in d.occupied() {
            g[q] += w;
        }
    }
    g
}

/// Builds an engine and runs it to completion.
pub fn run_adapt(h: &MSchemeHamiltonian, basis: FockBasis, config: AdaptConfig) -> Result<AdaptOutcome> {
    AdaptEngine::new(h, basis, config)?.run()
}
