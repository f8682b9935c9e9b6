//! Circuit synthesis: reference preparation, exact exponentials of pool
//! operators, fermionic-swap routing and measurement basis changes.

pub mod clifford;
pub mod measurement;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jw;
use crate::pauli::PauliSum;
use crate::qsim::{Circuit, Gate};
use crate::valence::SlaterDet;

pub use clifford::{conjugate_string, conjugate_sum, SignedString};
pub use measurement::{
    count_measurement_circuits, gradient_measurement_circuit, group_commuting_terms, measurement_basis_double_hop,
    measurement_basis_single_hop, measurement_plan, MeasurementCircuit, MeasurementCounts, ReadoutRule,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    #[default]
    All,
    Linear,
}

impl FromStr for Connectivity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" | "all-to-all" => Ok(Connectivity::All),
            "linear" => Ok(Connectivity::Linear),
            other => Err(Error::Config(format!("unknown connectivity '{other}' (all|linear)"))),
        }
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connectivity::All => "all",
            Connectivity::Linear => "linear",
        })
    }
}

/// X on every occupied qubit.
pub fn prepare_reference(n_qubits: usize, det: SlaterDet) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits);
    for q in det.occupied() {
        c.push(Gate::X(q))?;
    }
    Ok(c)
}

/// Appends `exp(−iφ P(x,z))` as basis change, CNOT staircase, RZ and the mirror image.
pub fn append_pauli_exponential(c: &mut Circuit, x: u64, z: u64, phi: f64) {
    let support: Vec<usize> = crate::valence::iter_bits(x | z).collect();
    let Some(&top) = support.last() else { return };
    for &q in &support {
        match (x >> q & 1, z >> q & 1) {
            (1, 0) => c.add(Gate::H(q)),
            (1, 1) => c.add(Gate::Rx(q, FRAC_PI_2)),
            _ => {}
        }
    }
    for w in support.windows(2) {
        c.add(Gate::Cnot { control: w[0], target: w[1] });
    }
    c.add(Gate::Rz(top, 2.0 * phi));
    for w in support.windows(2).rev() {
        c.add(Gate::Cnot { control: w[0], target: w[1] });
    }
    for &q in &support {
        match (x >> q & 1, z >> q & 1) {
            (1, 0) => c.add(Gate::H(q)),
            (1, 1) => c.add(Gate::Rx(q, -FRAC_PI_2)),
            _ => {}
        }
    }
}

/// Appends `exp(iθ A)` for a hermitian sum of mutually commuting strings.
pub fn append_commuting_exponential(c: &mut Circuit, op: &PauliSum, theta: f64) -> Result<()> {
    for t in op.terms() {
        if t.coeff.im.abs() > 1e-12 {
            return Err(Error::Domain("generator must have real Pauli coefficients".into()));
        }
        append_pauli_exponential(c, t.x, t.z, -theta * t.coeff.re);
    }
    Ok(())
}

/// Validates a pool index tuple and returns the set of distinct modes, ascending.
pub fn op_modes(n_qubits: usize, idx: [usize; 4]) -> Result<Vec<usize>> {
    let [p, q, r, s] = idx;
    if idx.iter().any(|&i| i >= n_qubits) {
        return Err(Error::Domain(format!("operator {idx:?} outside {n_qubits} qubits")));
    }
    if p >= q || r >= s || (p, q) == (r, s) {
        return Err(Error::Domain(format!("operator {idx:?} needs p<q, r<s and (p,q)≠(r,s)")));
    }
    let mut m = idx.to_vec();
    m.sort_unstable();
    m.dedup();
    Ok(m)
}

/// CNOTs of the unrouted staircase synthesis: `Σ 2(|support|−1)` over the generator's strings.
pub fn staircase_cnots(n_qubits: usize, idx: [usize; 4]) -> usize {
    let [p, q, r, s] = idx;
    jw::jw_pool_op(n_qubits, p, q, r, s).terms().map(|t| 2 * (t.weight() as usize - 1)).sum()
}

/// One ansatz factor `exp(iθ T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzLayer {
    pub indices: [usize; 4],
    pub theta: f64,
    pub circuit: Circuit,
    pub cnots: usize,
    pub routing_fswaps: usize,
}

/// Adjacent FSWAPs that bring `modes` (ascending) into a contiguous block in the same order.
/// Returns the swap sequence and each mode's final position.
pub fn gather_modes(n_qubits: usize, modes: &[usize]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let k = modes.len();
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut offs: Vec<usize> = modes.iter().enumerate().map(|(i, &m)| m - i).collect();
    offs.sort_unstable();
    let start = offs[k / 2].min(n_qubits - k);
    let targets: Vec<usize> = (0..k).map(|i| start + i).collect();
    let mut swaps = Vec::new();
    for i in 0..k {
        for pos in (targets[i]..modes[i]).rev() {
            swaps.push((pos, pos + 1));
        }
    }
    for i in (0..k).rev() {
        for pos in modes[i]..targets[i] {
            swaps.push((pos, pos + 1));
        }
    }
    (swaps, targets)
}

/// Exact circuit for `exp(iθ T_pqrs)`, routed onto a line when requested.
pub fn synthesize_exponential(
    n_qubits: usize,
    idx: [usize; 4],
    theta: f64,
    connectivity: Connectivity,
) -> Result<AnsatzLayer> {
    let modes = op_modes(n_qubits, idx)?;
    let mut c = Circuit::new(n_qubits);
    let (swaps, mapped) = match connectivity {
        Connectivity::All => (Vec::new(), idx),
        Connectivity::Linear => {
            let (mut swaps, mut targets) = gather_modes(n_qubits, &modes);
            // A repeated mode in the middle of the block would leave gaps in the strings without it.
            if modes.len() == 3 && idx.iter().filter(|&&i| i == modes[1]).count() == 2 {
                swaps.push((targets[0], targets[1]));
                targets.swap(0, 1);
            }
            let to = |m: usize| targets[modes.iter().position(|&x| x == m).expect("mode")];
            (swaps, idx.map(to))
        }
    };
    for &(a, b) in &swaps {
        c.add(Gate::Fswap(a, b));
    }
    let [p, q, r, s] = mapped;
    append_commuting_exponential(&mut c, &jw::jw_pool_op(n_qubits, p, q, r, s), theta)?;
    for &(a, b) in swaps.iter().rev() {
        c.add(Gate::Fswap(a, b));
    }
    Ok(AnsatzLayer { indices: idx, theta, cnots: c.cnot_count(), routing_fswaps: swaps.len(), circuit: c })
}
