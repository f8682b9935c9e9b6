//! Effective shell-model Hamiltonian in the m-scheme.
//!
//! `H = Σ_i ε_i n_i + Σ_{i<j, k<l} v̄_ijkl a†_i a†_j a_l a_k`.

pub mod cg;
pub mod interaction;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cg::clebsch_gordan;
pub use interaction::{CoupledTbme, Interaction};

use crate::error::{Error, Result};
use crate::jw;
use crate::pauli::PauliSum;
use crate::valence::{SlaterDet, ValenceSpace};

pub const DROP_TOL: f64 = 1e-12;

pub type Quad = (usize, usize, usize, usize);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MSchemeHamiltonian {
    pub space: ValenceSpace,
    /// One energy per single-particle state.
    pub spe: Vec<f64>,
    /// `v̄_ijkl` for `i<j`, `k<l`; both `(ij,kl)` and `(kl,ij)` are stored.
    pub tbme: BTreeMap<Quad, f64>,
}

/// One self-adjoint piece of the Hamiltonian with its coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HamTerm {
    /// `c n_i`
    OneBody { i: usize, coeff: f64 },
    /// `c n_i n_j`, `i<j`
    Density { i: usize, j: usize, coeff: f64 },
    /// `c n_s (a†_a a_b + a†_b a_a)`, `a<b`, `s ∉ {a,b}`
    Hop { s: usize, a: usize, b: usize, coeff: f64 },
    /// `c (a†_i a†_j a_l a_k + h.c.)`, `i<j`, `k<l`, four distinct indices
    DoubleHop { i: usize, j: usize, k: usize, l: usize, coeff: f64 },
}

impl HamTerm {
    pub fn coeff(&self) -> f64 {
        match *self {
            HamTerm::OneBody { coeff, .. }
            | HamTerm::Density { coeff, .. }
            | HamTerm::Hop { coeff, .. }
            | HamTerm::DoubleHop { coeff, .. } => coeff,
        }
    }

    /// Jordan-Wigner image of the unit-coefficient operator.
    pub fn unit_pauli(&self, n: usize) -> PauliSum {
        match *self {
            HamTerm::OneBody { i, .. } => jw::jw_number(n, i),
            HamTerm::Density { i, j, .. } => jw::jw_number(n, i).mul(&jw::jw_number(n, j)),
            HamTerm::Hop { s, a, b, .. } => jw::jw_number(n, s).mul(&jw::jw_hop(n, a, b)),
            HamTerm::DoubleHop { i, j, k, l, .. } => double_hop_observable(n, i, j, k, l),
        }
    }

    pub fn pauli(&self, n: usize) -> PauliSum {
        self.unit_pauli(n).scale(Complex64::new(self.coeff(), 0.0))
    }

    /// Bitmask of the modes the term touches.
    pub fn support(&self) -> u64 {
        let m = |v: &[usize]| v.iter().fold(0u64, |acc, &q| acc | (1 << q));
        match *self {
            HamTerm::OneBody { i, .. } => m(&[i]),
            HamTerm::Density { i, j, .. } => m(&[i, j]),
            HamTerm::Hop { s, a, b, .. } => m(&[s, a, b]),
            HamTerm::DoubleHop { i, j, k, l, .. } => m(&[i, j, k, l]),
        }
    }
}

/// `a†_i a†_j a_l a_k + h.c.`, the operator multiplying `v̄_ijkl`.
pub fn double_hop_observable(n: usize, i: usize, j: usize, k: usize, l: usize) -> PauliSum {
    let f = jw::ladder_product(n, &[(i, true), (j, true), (l, false), (k, false)]);
    f.add(&f.adjoint())
}

impl MSchemeHamiltonian {
    pub fn n_qubits(&self) -> usize {
        self.space.n_qubits()
    }

    pub fn one_body_only(space: &ValenceSpace, spe: Vec<f64>) -> Result<Self> {
        if spe.len() != space.n_qubits() {
            return Err(Error::Config("one energy per single-particle state is required".into()));
        }
        Ok(Self { space: space.clone(), spe, tbme: BTreeMap::new() })
    }

    /// Antisymmetrized element for arbitrary index order.
    pub fn vbar(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let (a, b, s1) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let (c, d, s2) = if k < l { (k, l, 1.0) } else { (l, k, -1.0) };
        s1 * s2 * self.tbme.get(&(a, b, c, d)).copied().unwrap_or(0.0)
    }

    /// Inserts `v̄_ijkl` (and its hermitian partner) for `i<j`, `k<l`.
    pub fn set_element(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) -> Result<()> {
        if !(i < j && k < l) {
            return Err(Error::Domain("elements are stored with i<j and k<l".into()));
        }
        let n = self.n_qubits();
        if l >= n || j >= n {
            return Err(Error::Domain("index outside the space".into()));
        }
        let st = &self.space.states;
        if st[i].m2 + st[j].m2 != st[k].m2 + st[l].m2 || st[i].tz2 + st[j].tz2 != st[k].tz2 + st[l].tz2 {
            return Err(Error::Domain(format!("element ({i},{j},{k},{l}) breaks M or Tz conservation")));
        }
        if v.abs() < DROP_TOL {
            self.tbme.remove(&(i, j, k, l));
            self.tbme.remove(&(k, l, i, j));
        } else {
            self.tbme.insert((i, j, k, l), v);
            self.tbme.insert((k, l, i, j), v);
        }
        Ok(())
    }

    /// `⟨D|H|D⟩ = Σ_{i∈D} ε_i + Σ_{i<j∈D} v̄_ijij`.
    pub fn diagonal_energy(&self, det: SlaterDet) -> f64 {
        let occ: Vec<usize> = det.occupied().collect();
        let mut e: f64 = occ.iter().map(|&i| self.spe[i]).sum();
        for (x, &i) in occ.iter().enumerate() {
            for &j in &occ[x + 1..] {
                e += self.tbme.get(&(i, j, i, j)).copied().unwrap_or(0.0);
            }
        }
        e
    }

    /// Lowest diagonal energy; near-ties go to the lexicographically smallest occupied-index list.
    pub fn lowest_reference(&self, basis: &[SlaterDet]) -> Result<SlaterDet> {
        let mut best: Option<(f64, SlaterDet)> = None;
        for &d in basis {
            let e = self.diagonal_energy(d);
            best = Some(match best {
                None => (e, d),
                Some((be, bd)) => {
                    let tol = 1e-10 * (1.0 + be.abs());
                    if e < be - tol || ((e - be).abs() <= tol && occ_lex_less(d, bd)) {
                        (e, d)
                    } else {
                        (be, bd)
                    }
                }
            });
        }
        best.map(|(_, d)| d).ok_or_else(|| Error::Domain("empty basis".into()))
    }

    /// Decomposition into self-adjoint pieces, deterministic order.
    pub fn terms(&self) -> Vec<HamTerm> {
        let mut out = Vec::new();
        for (i, &e) in self.spe.iter().enumerate() {
            if e.abs() >= DROP_TOL {
                out.push(HamTerm::OneBody { i, coeff: e });
            }
        }
        for (&(i, j, k, l), &v) in &self.tbme {
            if (i, j) > (k, l) {
                continue;
            }
            if (i, j) == (k, l) {
                out.push(HamTerm::Density { i, j, coeff: v });
                continue;
            }
            let shared: Vec<usize> = [i, j].into_iter().filter(|x| *x == k || *x == l).collect();
            match shared.len() {
                0 => out.push(HamTerm::DoubleHop { i, j, k, l, coeff: v }),
                1 => {
                    let s = shared[0];
                    let x = if s == i { j } else { i };
                    let y = if s == k { l } else { k };
                    let sign = if s == i { 1.0 } else { -1.0 } * if s == k { 1.0 } else { -1.0 };
                    let (a, b) = (x.min(y), x.max(y));
                    out.push(HamTerm::Hop { s, a, b, coeff: sign * v });
                }
                _ => unreachable!("(i,j) != (k,l) with both shared"),
            }
        }
        out
    }

    /// Full Jordan-Wigner image.
    pub fn pauli_sum(&self) -> PauliSum {
        let n = self.n_qubits();
        let parts: Vec<PauliSum> = self.terms().par_iter().map(|t| t.pauli(n)).collect();
        let mut s = PauliSum::zero(n);
        for p in &parts {
            s.add_assign(p);
        }
        s
    }

    /// Seeded random Hamiltonian with every (M, Tz)-conserving element populated.
    pub fn random(space: &ValenceSpace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = space.n_qubits();
        let spe: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut h = Self { space: space.clone(), spe, tbme: BTreeMap::new() };
        let pairs = pairs_by_quantum_numbers(space);
        for list in pairs.values() {
            for (x, &(i, j)) in list.iter().enumerate() {
                for &(k, l) in &list[x..] {
                    let v = rng.random_range(-1.5..1.0);
                    h.set_element(i, j, k, l, v).expect("conserving element");
                }
            }
        }
        h
    }
}

fn occ_lex_less(a: SlaterDet, b: SlaterDet) -> bool {
    let va: Vec<usize> = a.occupied().collect();
    let vb: Vec<usize> = b.occupied().collect();
    va < vb
}

/// Pairs `i<j` grouped by `(m2_i+m2_j, tz2_i+tz2_j)`.
pub fn pairs_by_quantum_numbers(space: &ValenceSpace) -> BTreeMap<(i32, i32), Vec<(usize, usize)>> {
    let n = space.n_qubits();
    let st = &space.states;
    let mut out: BTreeMap<(i32, i32), Vec<(usize, usize)>> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            out.entry((st[i].m2 + st[j].m2, st[i].tz2 + st[j].tz2)).or_default().push((i, j));
        }
    }
    out
}

/// CG expansion of coupled elements into the m-scheme.
pub fn decouple_to_mscheme(inter: &Interaction, space: &ValenceSpace) -> Result<MSchemeHamiltonian> {
    if inter.spe.len() != space.orbitals.len() {
        return Err(Error::Validation("orbital energy count does not match the space".into()));
    }
    let table = inter.coupled_table(space)?;
    let spe: Vec<f64> = space.states.iter().map(|s| inter.spe[s.orbital]).collect();
    let st = &space.states;
    let orb = &space.orbitals;
    let j2max = orb.iter().map(|o| o.j2).max().unwrap_or(0) as i32;
    let pairs = pairs_by_quantum_numbers(space);
    let elems: Vec<(Quad, f64)> = pairs
        .par_iter()
        .flat_map_iter(|(&(m2, tz2), list)| {
            let table = &table;
            let mut local = Vec::new();
            for (x, &(i, j)) in list.iter().enumerate() {
                for &(k, l) in &list[x..] {
                    let (a, b, c, d) = (st[i].orbital, st[j].orbital, st[k].orbital, st[l].orbital);
                    let nab = if a == b { std::f64::consts::SQRT_2 } else { 1.0 };
                    let ncd = if c == d { std::f64::consts::SQRT_2 } else { 1.0 };
                    let mut v = 0.0;
                    for t in 0..=1u32 {
                        let ti = cg::cg_unchecked(1, st[i].tz2, 1, st[j].tz2, 2 * t as i32, tz2);
                        let tk = cg::cg_unchecked(1, st[k].tz2, 1, st[l].tz2, 2 * t as i32, tz2);
                        if ti == 0.0 || tk == 0.0 {
                            continue;
                        }
                        for jj in (0..=j2max).step_by(1) {
                            let Some(&val) = table.get(&(a, b, c, d, jj as u32, t)) else { continue };
                            let ci =
                                cg::cg_unchecked(orb[a].j2 as i32, st[i].m2, orb[b].j2 as i32, st[j].m2, 2 * jj, m2);
                            let ck =
                                cg::cg_unchecked(orb[c].j2 as i32, st[k].m2, orb[d].j2 as i32, st[l].m2, 2 * jj, m2);
                            v += nab * ncd * ci * ti * ck * tk * val;
                        }
                    }
                    if v.abs() >= DROP_TOL {
                        local.push(((i, j, k, l), v));
                    }
                }
            }
            local.into_iter()
        })
        .collect();
    let mut h = MSchemeHamiltonian { space: space.clone(), spe, tbme: BTreeMap::new() };
    for ((i, j, k, l), v) in elems {
        h.set_element(i, j, k, l, v)?;
    }
    Ok(h)
}
