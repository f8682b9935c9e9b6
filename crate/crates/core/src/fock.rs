//! Sparse operators over Slater-determinant bases, exact diagonalization and
//! pool-operator exponentials without circuits.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::MSchemeHamiltonian;
use crate::valence::{SlaterDet, ValenceSpace};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

pub const DENSE_LIMIT: usize = 256;
pub const LANCZOS_KRYLOV: usize = 200;
pub const LANCZOS_TOL: f64 = 1e-10;
pub const LANCZOS_MAX_RESTARTS: usize = 200;

#[derive(Clone, Debug)]
pub struct FockBasis {
    pub n_qubits: usize,
    pub dets: Vec<SlaterDet>,
    index: HashMap<u64, usize>,
}

impl FockBasis {
    pub fn from_dets(n_qubits: usize, dets: Vec<SlaterDet>) -> Self {
        let index = dets.iter().enumerate().map(|(i, d)| (d.occupation, i)).collect();
        Self { n_qubits, dets, index }
    }

    pub fn m_scheme(space: &ValenceSpace, n_ci: usize, z_ci: usize, m2: i32) -> Result<Self> {
        Ok(Self::from_dets(space.n_qubits(), space.enumerate_m_basis(n_ci, z_ci, m2)?))
    }

    /// Every occupation pattern of `n_qubits` modes.
    pub fn full(n_qubits: usize) -> Result<Self> {
        if n_qubits > 24 {
            return Err(Error::Resource(format!("full Fock space of {n_qubits} modes")));
        }
        Ok(Self::from_dets(n_qubits, (0..1u64 << n_qubits).map(SlaterDet::new).collect()))
    }

    pub fn dim(&self) -> usize {
        self.dets.len()
    }

    pub fn index_of(&self, det: SlaterDet) -> Option<usize> {
        self.index.get(&det.occupation).copied()
    }
}

/// Applies ladder operators written left to right, rightmost first.
/// Returns the image determinant and fermionic sign, or `None` if annihilated.
#[inline]
pub fn apply_ladders(mut occ: u64, ops: &[(usize, bool)]) -> Option<(u64, f64)> {
    let mut sign = 1.0;
    for &(p, create) in ops.iter().rev() {
        let bit = 1u64 << p;
        let occupied = occ & bit != 0;
        if occupied == create {
            return None;
        }
        if (occ & (bit - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        occ ^= bit;
    }
    Some((occ, sign))
}

/// Compressed sparse row operator.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C>,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, C)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<C> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = Self { dim, row_ptr, cols, vals };
        op.drop_zeros();
        op
    }

    fn from_rows(dim: usize, rows: Vec<Vec<(usize, C)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut merged: Vec<(usize, C)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                if v != ZERO {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    fn drop_zeros(&mut self) {
        if self.vals.iter().all(|v| *v != ZERO) {
            return;
        }
        let rows: Vec<Vec<(usize, C)>> = (0..self.dim).map(|r| self.row(r).collect()).collect();
        *self = Self::from_rows(self.dim, rows);
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        self.row(r).find(|&(cc, _)| cc == c).map(|(_, v)| v).unwrap_or(ZERO)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        let f = |r: usize| -> C { self.row(r).map(|(c, v)| v * x[c]).sum() };
        if self.dim >= 4096 {
            (0..self.dim).into_par_iter().map(f).collect()
        } else {
            (0..self.dim).map(f).collect()
        }
    }

    pub fn to_dense(&self) -> DMatrix<C> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.entries().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    /// Largest deviation `|A_rc − conj(A_cr)|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.entries().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    /// Coordinate text: header `dim nnz`, then `row col re im` (0-based).
    pub fn dump_coordinate(&self) -> String {
        let mut s = format!("{} {}\n", self.dim, self.nnz());
        for (r, c, v) in self.entries() {
            let _ = writeln!(s, "{r} {c} {:.17e} {:.17e}", v.re, v.im);
        }
        s
    }

    /// Pair structure `A = Σ (c |k⟩⟨j| + c̄ |j⟩⟨k|)` with `|c| = 1` and disjoint pairs, if present.
    fn rotation_pairs(&self) -> Option<Vec<(usize, usize, C)>> {
        let mut pairs = Vec::new();
        let mut partner = vec![usize::MAX; self.dim];
        for (r, slot) in partner.iter_mut().enumerate() {
            let mut it = self.row(r);
            let Some((c, v)) = it.next() else { continue };
            if it.next().is_some() || c == r || (v.norm() - 1.0).abs() > 1e-12 {
                return None;
            }
            *slot = c;
            if r < c {
                pairs.push((r, c, v));
            }
        }
        for r in 0..self.dim {
            let c = partner[r];
            if c != usize::MAX && (partner[c] != r || (self.get(c, r) - self.get(r, c).conj()).norm() > 1e-12) {
                return None;
            }
        }
        Some(pairs)
    }
}

/// Sparse image of a fermionic operator `Σ_t c_t (ladder string)_t` restricted to `basis`.
pub fn sparse_from_fermion(basis: &FockBasis, terms: &[(C, Vec<(usize, bool)>)]) -> SparseOperator {
    let cols: Vec<Vec<(usize, usize, C)>> = (0..basis.dim())
        .into_par_iter()
        .map(|col| {
            let occ = basis.dets[col].occupation;
            let mut out = Vec::new();
            for (c, ops) in terms {
                if let Some((img, sign)) = apply_ladders(occ, ops) {
                    if let Some(row) = basis.index_of(SlaterDet::new(img)) {
                        out.push((row, col, c * sign));
                    }
                }
            }
            out
        })
        .collect();
    SparseOperator::from_triplets(basis.dim(), cols.into_iter().flatten().collect())
}

/// Hamiltonian matrix in the given determinant basis.
pub fn build_sparse_h(h: &MSchemeHamiltonian, basis: &FockBasis) -> SparseOperator {
    type Created = Vec<(usize, usize, f64)>;
    let mut by_annihilated: HashMap<(usize, usize), Created> = HashMap::new();
    for (&(i, j, k, l), &v) in &h.tbme {
        by_annihilated.entry((k, l)).or_default().push((i, j, v));
    }
    let rows: Vec<Vec<(usize, C)>> = (0..basis.dim())
        .into_par_iter()
        .map(|col| {
            let occ = basis.dets[col].occupation;
            let occ_list: Vec<usize> = basis.dets[col].occupied().collect();
            let mut out = Vec::new();
            let diag: f64 = occ_list.iter().map(|&i| h.spe[i]).sum();
            if diag != 0.0 {
                out.push((col, C::new(diag, 0.0)));
            }
            for (x, &k) in occ_list.iter().enumerate() {
                for &l in &occ_list[x + 1..] {
                    let Some(list) = by_annihilated.get(&(k, l)) else { continue };
                    for &(i, j, v) in list {
                        if let Some((img, sign)) = apply_ladders(occ, &[(i, true), (j, true), (l, false), (k, false)]) {
                            if let Some(row) = basis.index_of(SlaterDet::new(img)) {
                                out.push((row, C::new(v * sign, 0.0)));
                            }
                        }
                    }
                }
            }
            // Entries of column `col`; for a hermitian operator row `col` holds their conjugates.
            out.into_iter().map(|(r, v)| (r, v.conj())).collect()
        })
        .collect();
    SparseOperator::from_rows(basis.dim(), rows)
}

/// Pool generator `i(a†_p a†_q a_r a_s − a†_r a†_s a_p a_q)` in the basis.
pub fn sparse_pool_op(basis: &FockBasis, p: usize, q: usize, r: usize, s: usize) -> SparseOperator {
    let i = C::new(0.0, 1.0);
    sparse_from_fermion(
        basis,
        &[
            (i, vec![(p, true), (q, true), (r, false), (s, false)]),
            (-i, vec![(r, true), (s, true), (p, false), (q, false)]),
        ],
    )
}

#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub energy: f64,
    pub coefficients: Vec<C>,
}

pub fn ground_state(op: &SparseOperator) -> Result<EigenSolution> {
    if op.dim == 0 {
        return Err(Error::Domain("empty operator".into()));
    }
    if op.dim <= DENSE_LIMIT {
        dense_ground_state(op)
    } else {
        lanczos_ground_state(op, LANCZOS_TOL, LANCZOS_KRYLOV, LANCZOS_MAX_RESTARTS)
    }
}

pub fn dense_ground_state(op: &SparseOperator) -> Result<EigenSolution> {
    let m = op.to_dense();
    let eig = nalgebra::SymmetricEigen::new(m);
    let (idx, &energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite eigenvalues"))
        .ok_or_else(|| Error::Solver("no eigenvalues".into()))?;
    let col = eig.eigenvectors.column(idx);
    Ok(EigenSolution { energy, coefficients: fix_phase(col.iter().copied().collect()) })
}

/// Rotates a vector so its largest-magnitude component is real and positive.
fn fix_phase(mut v: Vec<C>) -> Vec<C> {
    let Some(big) = v.iter().copied().max_by(|a, b| a.norm().partial_cmp(&b.norm()).expect("finite")) else {
        return v;
    };
    if big.norm() > 0.0 {
        let ph = big.conj() / big.norm();
        v.iter_mut().for_each(|x| *x *= ph);
    }
    v
}

fn vnorm(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn vdot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Lanczos with full reorthogonalization and thick-free restarts from the current Ritz vector.
pub fn lanczos_ground_state(
    op: &SparseOperator,
    tol: f64,
    krylov: usize,
    max_restarts: usize,
) -> Result<EigenSolution> {
    let n = op.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut start: Vec<C> = (0..n).map(|_| C::new(rng.random::<f64>() - 0.5, 0.0)).collect();
    let nrm = vnorm(&start);
    start.iter_mut().for_each(|x| *x /= nrm);
    let kmax = krylov.min(n).max(1);
    let mut last_res = f64::INFINITY;
    for _restart in 0..max_restarts {
        let mut basis: Vec<Vec<C>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for k in 0..kmax {
            let mut w = op.matvec(&basis[k]);
            let a = vdot(&basis[k], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for b in &basis {
                    let proj = vdot(b, &w);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
                }
            }
            let bn = vnorm(&w);
            if k + 1 == kmax || bn < 1e-13 {
                break;
            }
            beta.push(bn);
            basis.push(w.into_iter().map(|x| x / bn).collect());
        }
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = nalgebra::SymmetricEigen::new(t);
        let (idx, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
            .ok_or_else(|| Error::Solver("empty Krylov space".into()))?;
        let s: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        let mut y = vec![ZERO; n];
        for (j, b) in basis.iter().enumerate().take(m) {
            y.iter_mut().zip(b).for_each(|(acc, x)| *acc += x * s[j]);
        }
        let yn = vnorm(&y);
        y.iter_mut().for_each(|x| *x /= yn);
        let hy = op.matvec(&y);
        let res = hy.iter().zip(&y).map(|(a, b)| (a - b * theta).norm_sqr()).sum::<f64>().sqrt();
        last_res = res;
        if res <= tol * theta.abs().max(1.0) {
            return Ok(EigenSolution { energy: theta, coefficients: fix_phase(y) });
        }
        start = y;
    }
    Err(Error::Solver(format!("Lanczos did not converge after {max_restarts} restarts (residual {last_res:.3e})")))
}

/// `exp(iθA) ψ` for a hermitian generator `A`.
pub fn apply_exp_pool(op: &SparseOperator, theta: f64, state: &[C]) -> Vec<C> {
    if theta == 0.0 {
        return state.to_vec();
    }
    if let Some(pairs) = op.rotation_pairs() {
        let (c, s) = (theta.cos(), theta.sin());
        let is = C::new(0.0, s);
        let mut out = state.to_vec();
        for (k, j, a) in pairs {
            // A|j⟩ = a|k⟩, A|k⟩ = ā|j⟩ with a = A_kj.
            let (pj, pk) = (state[j], state[k]);
            out[k] = pk * c + is * a * pj;
            out[j] = pj * c + is * a.conj() * pk;
        }
        return out;
    }
    taylor_exp(op, theta, state)
}

fn taylor_exp(op: &SparseOperator, theta: f64, state: &[C]) -> Vec<C> {
    let norm1 = (0..op.dim).map(|r| op.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max);
    let steps = ((theta.abs() * norm1).ceil() as usize).max(1);
    let h = C::new(0.0, theta / steps as f64);
    let mut v = state.to_vec();
    for _ in 0..steps {
        let mut term = v.clone();
        let mut acc = v.clone();
        for k in 1..60 {
            term = op.matvec(&term).into_iter().map(|x| x * h / k as f64).collect();
            acc.iter_mut().zip(&term).for_each(|(a, t)| *a += t);
            if vnorm(&term) < 1e-17 {
                break;
            }
        }
        v = acc;
    }
    v
}

/// `⟨ψ|A|ψ⟩` real part.
pub fn expectation(op: &SparseOperator, state: &[C]) -> f64 {
    vdot(state, &op.matvec(state)).re
}
