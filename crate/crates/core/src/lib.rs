//! Nuclear shell-model ADAPT-VQE toolkit.
//!
//! The crate covers the whole pipeline: valence spaces and m-scheme bases,
//! interaction decoupling, a sparse exact-diagonalization backend, the
//! Jordan-Wigner images of the shell-model operators, a statevector simulator,
//! circuit synthesis for ansatz layers and measurements, the adaptive
//! variational loop and a finite-shot measurement simulator.

pub mod adapt;
pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod jw;
pub mod measure;
pub mod optim;
pub mod pauli;
pub mod qsim;
pub mod synth;
pub mod valence;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use adapt::{AdaptConfig, AdaptOutcome, AdaptState, BackendKind, LayerTrace, OperatorPool, PoolOp};
pub use fock::{EigenSolution, FockBasis, SparseOperator};
pub use hamiltonian::{CoupledTbme, HamTerm, Interaction, MSchemeHamiltonian};
pub use pauli::{PauliSum, PauliTerm};
pub use qsim::{Circuit, Gate, StateVector};
pub use synth::{Connectivity, MeasurementCircuit, ReadoutRule};
pub use valence::{Orbital, ShellName, SlaterDet, SpState, Species, ValenceSpace};
