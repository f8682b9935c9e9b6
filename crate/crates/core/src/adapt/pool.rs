//! Two-body excitation pool.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{sparse_pool_op, FockBasis, SparseOperator};
use crate::hamiltonian::pairs_by_quantum_numbers;
use crate::jw;
use crate::pauli::PauliSum;
use crate::valence::ValenceSpace;

/// Generator `i(a†_p a†_q a_r a_s − a†_r a†_s a_p a_q)` with `p<q`, `r<s`, `(p,q) < (r,s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PoolOp {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: usize,
}

impl PoolOp {
    pub fn new(p: usize, q: usize, r: usize, s: usize) -> Result<Self> {
        if !(p < q && r < s && (p, q) != (r, s)) {
            return Err(Error::Domain(format!("({p},{q},{r},{s}) is not a valid pool operator")));
        }
        Ok(Self { p, q, r, s })
    }

    pub fn indices(&self) -> [usize; 4] {
        [self.p, self.q, self.r, self.s]
    }

    pub fn pauli(&self, n_qubits: usize) -> PauliSum {
        jw::jw_pool_op(n_qubits, self.p, self.q, self.r, self.s)
    }

    pub fn sparse(&self, basis: &FockBasis) -> SparseOperator {
        sparse_pool_op(basis, self.p, self.q, self.r, self.s)
    }

    pub fn n_distinct(&self) -> usize {
        let mut v = self.indices();
        v.sort_unstable();
        1 + v.windows(2).filter(|w| w[0] != w[1]).count()
    }

    pub fn conserves(&self, space: &ValenceSpace) -> bool {
        let st = &space.states;
        let n = st.len();
        if self.indices().iter().any(|&i| i >= n) {
            return false;
        }
        st[self.p].m2 + st[self.q].m2 == st[self.r].m2 + st[self.s].m2
            && st[self.p].tz2 + st[self.q].tz2 == st[self.r].tz2 + st[self.s].tz2
    }
}

impl fmt::Display for PoolOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.p, self.q, self.r, self.s)
    }
}

impl FromStr for PoolOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let v: Vec<usize> = body
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("bad operator '{s}'"))))
            .collect::<Result<_>>()?;
        match v[..] {
            [p, q, r, s] => PoolOp::new(p, q, r, s),
            _ => Err(Error::Config(format!("operator '{s}' needs four indices"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorPool {
    pub ops: Vec<PoolOp>,
}

impl OperatorPool {
    /// Every M- and Tz-conserving generator of the space, in lexicographic order.
    pub fn build(space: &ValenceSpace) -> Self {
        let mut ops = Vec::new();
        for list in pairs_by_quantum_numbers(space).values() {
            for (x, &(p, q)) in list.iter().enumerate() {
                for &(r, s) in &list[x + 1..] {
                    ops.push(PoolOp { p, q, r, s });
                }
            }
        }
        ops.sort_unstable();
        Self { ops }
    }

    /// Drops generators that vanish on the basis.
    pub fn restricted_to(&self, basis: &FockBasis) -> Self {
        Self { ops: self.ops.iter().copied().filter(|op| op.sparse(basis).nnz() > 0).collect() }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn position(&self, op: PoolOp) -> Option<usize> {
        self.ops.binary_search(&op).ok()
    }
}
