//! Measurement basis changes, readout rules, term grouping and circuit counts.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::clifford::conjugate_sum;
use crate::error::{Error, Result};
use crate::hamiltonian::cg::cg_unchecked;
use crate::hamiltonian::{double_hop_observable, HamTerm, MSchemeHamiltonian};
use crate::jw;
use crate::pauli::PauliSum;
use crate::qsim::{Circuit, Gate};
use crate::valence::{iter_bits, ValenceSpace};

const RULE_ENUM_LIMIT: u32 = 12;

/// `weight · [b & pattern_mask == pattern_bits] · (−1)^{|b & parity_mask|}` summed over outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRule {
    pub weight: Complex64,
    pub pattern_mask: u64,
    pub pattern_bits: u64,
    pub parity_mask: u64,
}

impl ReadoutRule {
    #[inline]
    pub fn eval(&self, b: u64) -> Complex64 {
        if b & self.pattern_mask != self.pattern_bits {
            return Complex64::new(0.0, 0.0);
        }
        if (b & self.parity_mask).count_ones() % 2 == 1 {
            -self.weight
        } else {
            self.weight
        }
    }
}

impl fmt::Display for ReadoutRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = if self.weight.im == 0.0 { format!("{:+}", self.weight.re) } else { format!("{}", self.weight) };
        write!(f, "{w} · p[")?;
        for q in iter_bits(self.pattern_mask) {
            write!(f, "{}", self.pattern_bits >> q & 1)?;
        }
        write!(f, " @ {:?}]", iter_bits(self.pattern_mask).collect::<Vec<_>>())?;
        if self.parity_mask != 0 {
            write!(f, " · Z{:?}", iter_bits(self.parity_mask).collect::<Vec<_>>())?;
        }
        Ok(())
    }
}

/// Sum of rule values for one outcome.
#[inline]
pub fn eval_rules(rules: &[ReadoutRule], b: u64) -> Complex64 {
    rules.iter().map(|r| r.eval(b)).sum()
}

/// Readout rules reproducing a diagonal operator. Qubits present in every Z-string are
/// factored out as a parity, the rest is written as a table of bit patterns.
pub fn rules_from_diagonal(d: &PauliSum) -> Result<Vec<ReadoutRule>> {
    if !d.is_diagonal() {
        return Err(Error::Domain("operator is not diagonal after the basis change".into()));
    }
    let terms: Vec<(u64, Complex64)> = d.terms().map(|t| (t.z, t.coeff)).collect();
    if terms.is_empty() {
        return Ok(Vec::new());
    }
    let parity = terms.iter().fold(u64::MAX, |acc, t| acc & t.0);
    let reduced: Vec<(u64, Complex64)> = terms.iter().map(|&(z, c)| (z ^ parity, c)).collect();
    let pattern_mask = reduced.iter().fold(0, |acc, t| acc | t.0);
    if pattern_mask.count_ones() > RULE_ENUM_LIMIT {
        return Ok(terms
            .into_iter()
            .map(|(z, c)| ReadoutRule { weight: c, pattern_mask: 0, pattern_bits: 0, parity_mask: z })
            .collect());
    }
    let qubits: Vec<usize> = iter_bits(pattern_mask).collect();
    let mut rules = Vec::new();
    for k in 0..1u64 << qubits.len() {
        let bits = qubits.iter().enumerate().fold(0u64, |acc, (x, &q)| acc | ((k >> x & 1) << q));
        let v: Complex64 = reduced.iter().map(|&(z, c)| if (bits & z).count_ones() % 2 == 1 { -c } else { c }).sum();
        if v.norm() > 1e-12 {
            rules.push(ReadoutRule { weight: v, pattern_mask, pattern_bits: bits, parity_mask: parity });
        }
    }
    Ok(rules)
}

/// One circuit of a measurement plan: a basis change and readout rules for each unit-coefficient term.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementCircuit {
    pub label: String,
    /// Ids into the plan's term list.
    pub terms: Vec<usize>,
    pub basis_change: Circuit,
    /// Parallel to `terms`.
    pub rules: Vec<Vec<ReadoutRule>>,
}

impl MeasurementCircuit {
    /// Conjugates each operator, checks it is diagonal and derives its readout.
    pub fn build(label: String, terms: Vec<usize>, basis_change: Circuit, ops: &[PauliSum]) -> Result<Self> {
        let mut rules = Vec::with_capacity(ops.len());
        for op in ops {
            let d = conjugate_sum(&basis_change, op)?;
            let r = rules_from_diagonal(&d).map_err(|_| {
                Error::Domain(format!("circuit '{label}' leaves an off-diagonal term:\n{}", d.render()))
            })?;
            rules.push(r);
        }
        Ok(Self { label, terms, basis_change, rules })
    }

    /// Qubits whose outcomes enter any rule.
    pub fn read_mask(&self) -> u64 {
        self.rules.iter().flatten().fold(0, |acc, r| acc | r.pattern_mask | r.parity_mask)
    }
}

fn cx(c: usize, t: usize) -> Gate {
    Gate::Cnot { control: c, target: t }
}

/// Disentangling CNOTs of a four-mode block, in time order.
fn block_network(i: usize, j: usize, k: usize, l: usize) -> [Gate; 3] {
    [cx(i, j), cx(k, i), cx(l, k)]
}

/// `n_i (a†_j a_k + a†_k a_j)` read after `CX_kj H_k CX_kj`.
pub fn measurement_basis_single_hop(n: usize, i: usize, j: usize, k: usize) -> Result<MeasurementCircuit> {
    if !(j < k && k < n && i < n && i != j && i != k) {
        return Err(Error::Domain(format!("single hop ({i},{j},{k}) needs j<k and i∉{{j,k}}")));
    }
    let basis = hop_basis(n, j, k);
    let op = jw::jw_number(n, i).mul(&jw::jw_hop(n, j, k));
    MeasurementCircuit::build(format!("M{j},{k}"), vec![0], basis, &[op])
}

fn hop_basis(n: usize, j: usize, k: usize) -> Circuit {
    let mut c = Circuit::new(n);
    c.add(cx(k, j));
    c.add(Gate::H(k));
    c.add(cx(k, j));
    c
}

fn double_hop_basis(n: usize, blocks: &[[usize; 4]]) -> Result<Circuit> {
    let mut c = Circuit::new(n);
    let mut net = Vec::new();
    for b in blocks {
        net.extend(block_network(b[0], b[1], b[2], b[3]));
    }
    for &g in &net {
        c.add(g);
    }
    if blocks.len() > 1 {
        // Each block leaves one active qubit carrying X; parity strings through other blocks
        // show up as Z on their active qubits and are removed with CZ.
        let mut edges = std::collections::BTreeSet::new();
        for (x, b) in blocks.iter().enumerate() {
            let op = double_hop_observable(n, b[0], b[1], b[2], b[3]);
            let img = conjugate_sum(&c, &op)?;
            for (y, other) in blocks.iter().enumerate() {
                if x != y && img.terms().any(|t| t.z >> other[3] & 1 == 1) {
                    edges.insert((x.min(y), x.max(y)));
                }
            }
        }
        for (x, y) in edges {
            let (a, t) = (blocks[x][3], blocks[y][3]);
            c.add(Gate::H(t));
            c.add(cx(a, t));
            c.add(Gate::H(t));
        }
    }
    for b in blocks {
        c.add(Gate::H(b[3]));
    }
    for &g in net.iter().rev() {
        c.add(g);
    }
    Ok(c)
}

/// `a†_i a†_j a_l a_k + h.c.` read after `CX_ij CX_ki CX_lk H_l CX_lk CX_ki CX_ij`.
pub fn measurement_basis_double_hop(n: usize, i: usize, j: usize, k: usize, l: usize) -> Result<MeasurementCircuit> {
    let mut set = [i, j, k, l];
    set.sort_unstable();
    if !(i < j && k < l) || set.windows(2).any(|w| w[0] == w[1]) || set[3] >= n {
        return Err(Error::Domain(format!("double hop ({i},{j},{k},{l}) needs i<j, k<l, distinct indices")));
    }
    let basis = double_hop_basis(n, &[[i, j, k, l]])?;
    MeasurementCircuit::build(format!("M{i},{j},{k},{l}"), vec![0], basis, &[double_hop_observable(n, i, j, k, l)])
}

fn set_mask(s: &[usize; 4]) -> u64 {
    s.iter().fold(0, |acc, &q| acc | 1 << q)
}

fn parity(x: u64) -> bool {
    x.count_ones() % 2 == 1
}

/// Greedy first-fit of index sets sorted by descending string length; sets must be disjoint
/// and their parity strings must overlap each other's supports with equal parity.
fn greedy_groups(sets: &[[usize; 4]]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..sets.len()).collect();
    let len = |s: &[usize; 4]| jw::string_length(s[0], s[1], s[2], s[3]);
    order.sort_by_key(|&x| (std::cmp::Reverse(len(&sets[x])), sets[x]));
    let info: Vec<(u64, u64)> =
        sets.iter().map(|s| (set_mask(s), jw::aux_parity_mask(s[0], s[1], s[2], s[3]))).collect();
    let mut groups: Vec<(u64, Vec<usize>)> = Vec::new();
    for x in order {
        let (m, p) = info[x];
        let slot = groups.iter().position(|(used, members)| {
            used & m == 0
                && members.iter().all(|&y| {
                    let (my, py) = info[y];
                    parity(p & my) == parity(py & m)
                })
        });
        match slot {
            Some(g) => {
                groups[g].0 |= m;
                groups[g].1.push(x);
            }
            None => groups.push((m, vec![x])),
        }
    }
    groups.into_iter().map(|(_, v)| v).collect()
}

fn sorted_set(i: usize, j: usize, k: usize, l: usize) -> [usize; 4] {
    let mut s = [i, j, k, l];
    s.sort_unstable();
    s
}

/// Packs double-hop terms `(id, [i,j,k,l])` into jointly diagonalizable circuits.
pub fn group_commuting_terms(n: usize, terms: &[(usize, [usize; 4])]) -> Result<Vec<MeasurementCircuit>> {
    let mut by_set: BTreeMap<[usize; 4], Vec<(usize, [usize; 4])>> = BTreeMap::new();
    for &(id, t) in terms {
        by_set.entry(sorted_set(t[0], t[1], t[2], t[3])).or_default().push((id, t));
    }
    let sets: Vec<[usize; 4]> = by_set.keys().copied().collect();
    let mut out = Vec::new();
    for group in greedy_groups(&sets) {
        let blocks: Vec<[usize; 4]> = group.iter().map(|&x| sets[x]).collect();
        let basis = double_hop_basis(n, &blocks)?;
        let mut ids = Vec::new();
        let mut ops = Vec::new();
        for b in &blocks {
            for &(id, [i, j, k, l]) in &by_set[b] {
                ids.push(id);
                ops.push(double_hop_observable(n, i, j, k, l));
            }
        }
        let label = blocks.iter().map(|b| format!("{},{},{},{}", b[0], b[1], b[2], b[3])).collect::<Vec<_>>().join("|");
        out.push(MeasurementCircuit::build(format!("G[{label}]"), ids, basis, &ops)?);
    }
    Ok(out)
}

/// Circuit reading `⟨h T⟩` for `h = a†_i a†_j a_l a_k + h.c.` and the pool generator `T_pqrs`.
/// The index sets must coincide or be disjoint.
pub fn gradient_measurement_circuit(n: usize, h: [usize; 4], t: [usize; 4]) -> Result<MeasurementCircuit> {
    let hs = sorted_set(h[0], h[1], h[2], h[3]);
    let ts = sorted_set(t[0], t[1], t[2], t[3]);
    if hs.windows(2).any(|w| w[0] == w[1]) || ts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("gradient circuits need four distinct indices per operator".into()));
    }
    let blocks: Vec<[usize; 4]> = if hs == ts {
        vec![hs]
    } else if set_mask(&hs) & set_mask(&ts) == 0 {
        vec![hs, ts]
    } else {
        return Err(Error::Domain(format!("index sets {hs:?} and {ts:?} partially overlap")));
    };
    let product = double_hop_observable(n, h[0], h[1], h[2], h[3]).mul(&jw::jw_pool_op(n, t[0], t[1], t[2], t[3]));
    let mut c = Circuit::new(n);
    let mut net = Vec::new();
    for b in &blocks {
        net.extend(block_network(b[0], b[1], b[2], b[3]));
    }
    for &g in &net {
        c.add(g);
    }
    let img = conjugate_sum(&c, &product)?;
    let xs: Vec<u64> = img.terms().map(|t| t.x).collect();
    if let Some(&x0) = xs.first() {
        if xs.iter().any(|&x| x != x0) {
            return Err(Error::Domain("product has no common off-diagonal pattern".into()));
        }
        let letter = |q: usize| img.terms().next().map(|t| t.letter(q)).unwrap_or('I');
        let active: Vec<usize> = iter_bits(x0).collect();
        if let [l, s] = active[..] {
            if letter(l) == 'X' && letter(s) == 'Y' {
                c.add(cx(l, s));
                c.add(Gate::Rx(l, FRAC_PI_2));
                c.add(cx(l, s));
            } else if letter(l) == 'Y' && letter(s) == 'X' {
                c.add(cx(s, l));
                c.add(Gate::Rx(s, FRAC_PI_2));
                c.add(cx(s, l));
            } else {
                single_qubit_diagonalizers(&mut c, &active, letter);
            }
        } else {
            single_qubit_diagonalizers(&mut c, &active, letter);
        }
    }
    for &g in net.iter().rev() {
        c.add(g);
    }
    MeasurementCircuit::build(format!("D[{h:?}·{t:?}]"), vec![0], c, &[product])
}

fn single_qubit_diagonalizers(c: &mut Circuit, active: &[usize], letter: impl Fn(usize) -> char) {
    for &q in active {
        match letter(q) {
            'X' => c.add(Gate::H(q)),
            'Y' => c.add(Gate::Rx(q, FRAC_PI_2)),
            _ => {}
        }
    }
}

/// Circuits covering every term of a Hamiltonian exactly once.
#[derive(Clone, Debug)]
pub struct MeasurementPlan {
    pub n_qubits: usize,
    pub terms: Vec<HamTerm>,
    pub circuits: Vec<MeasurementCircuit>,
}

impl MeasurementPlan {
    /// Constant offset (none for the m-scheme Hamiltonian; kept for completeness of the estimator).
    pub fn n_circuits(&self) -> usize {
        self.circuits.len()
    }

    /// `⟨H⟩` from exact outcome probabilities `probs[c]` = list of `(outcome, p)` per circuit.
    pub fn energy_from_distributions(&self, dists: &[Vec<(u64, f64)>]) -> f64 {
        let mut e = 0.0;
        for (circ, dist) in self.circuits.iter().zip(dists) {
            for (tid, rules) in circ.terms.iter().zip(&circ.rules) {
                let v: f64 = dist.iter().map(|&(b, p)| p * eval_rules(rules, b).re).sum();
                e += self.terms[*tid].coeff() * v;
            }
        }
        e
    }
}

/// Diagonal circuit, one circuit per hopping pair, and grouped or per-term double-hop circuits.
pub fn measurement_plan(h: &MSchemeHamiltonian, grouped: bool) -> Result<MeasurementPlan> {
    let n = h.n_qubits();
    let terms = h.terms();
    let mut diag_ids = Vec::new();
    let mut hops: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut doubles = Vec::new();
    for (id, t) in terms.iter().enumerate() {
        match *t {
            HamTerm::OneBody { .. } | HamTerm::Density { .. } => diag_ids.push(id),
            HamTerm::Hop { a, b, .. } => hops.entry((a, b)).or_default().push(id),
            HamTerm::DoubleHop { i, j, k, l, .. } => doubles.push((id, [i, j, k, l])),
        }
    }
    let mut circuits = Vec::new();
    let diag_ops: Vec<PauliSum> = diag_ids.iter().map(|&id| terms[id].unit_pauli(n)).collect();
    circuits.push(MeasurementCircuit::build("Z".into(), diag_ids, Circuit::new(n), &diag_ops)?);
    for ((a, b), ids) in hops {
        let ops: Vec<PauliSum> = ids.iter().map(|&id| terms[id].unit_pauli(n)).collect();
        circuits.push(MeasurementCircuit::build(format!("M{a},{b}"), ids, hop_basis(n, a, b), &ops)?);
    }
    if grouped {
        circuits.extend(group_commuting_terms(n, &doubles)?);
    } else {
        for (id, [i, j, k, l]) in doubles {
            let mut c = measurement_basis_double_hop(n, i, j, k, l)?;
            c.terms = vec![id];
            circuits.push(c);
        }
    }
    Ok(MeasurementPlan { n_qubits: n, terms, circuits })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementCounts {
    pub n_qubits: usize,
    pub n_h: usize,
    pub n_hh: usize,
    pub n_tot: usize,
    pub n_hh_grouped: usize,
    pub n_tot_grouped: usize,
}

/// Whether some `(J, T)` channel couples both pairs with nonzero Clebsch-Gordan weight.
pub fn term_allowed(space: &ValenceSpace, i: usize, j: usize, k: usize, l: usize) -> bool {
    let st = &space.states;
    let (a, b, c, d) = (st[i], st[j], st[k], st[l]);
    let m = a.m2 + b.m2;
    let tz = a.tz2 + b.tz2;
    if m != c.m2 + d.m2 || tz != c.tz2 + d.tz2 {
        return false;
    }
    let j2 = |s: &crate::valence::SpState| space.orbitals[s.orbital].j2 as i32;
    let jmax = (j2(&a) + j2(&b)).max(j2(&c) + j2(&d));
    for jj in (0..=jmax).step_by(2) {
        for t in 0..=1i32 {
            if tz.abs() > 2 * t {
                continue;
            }
            let pauli_ok = |x: &crate::valence::SpState, y: &crate::valence::SpState| {
                x.orbital != y.orbital || (jj / 2 + t) % 2 == 1
            };
            if !pauli_ok(&a, &b) || !pauli_ok(&c, &d) {
                continue;
            }
            let w = cg_unchecked(j2(&a), a.m2, j2(&b), b.m2, jj, m)
                * cg_unchecked(1, a.tz2, 1, b.tz2, 2 * t, tz)
                * cg_unchecked(j2(&c), c.m2, j2(&d), d.m2, jj, m)
                * cg_unchecked(1, c.tz2, 1, d.tz2, 2 * t, tz);
            if w.abs() > 1e-12 {
                return true;
            }
        }
    }
    false
}

/// Circuit counts for a generic interaction in the space.
pub fn count_measurement_circuits(space: &ValenceSpace) -> MeasurementCounts {
    let n = space.n_qubits();
    let st = &space.states;
    let mut n_h = 0;
    for a in 0..n {
        for b in a + 1..n {
            if st[a].m2 == st[b].m2 && st[a].tz2 == st[b].tz2 {
                n_h += 1;
            }
        }
    }
    let mut n_hh = 0;
    let mut sets = std::collections::BTreeSet::new();
    for list in crate::hamiltonian::pairs_by_quantum_numbers(space).values() {
        for (x, &(i, j)) in list.iter().enumerate() {
            for &(k, l) in &list[x + 1..] {
                if i == k || i == l || j == k || j == l {
                    continue;
                }
                if term_allowed(space, i, j, k, l) {
                    n_hh += 1;
                    sets.insert(sorted_set(i, j, k, l));
                }
            }
        }
    }
    let sets: Vec<[usize; 4]> = sets.into_iter().collect();
    let grouped = greedy_groups(&sets).len();
    MeasurementCounts {
        n_qubits: n,
        n_h,
        n_hh,
        n_tot: n_h + n_hh + 1,
        n_hh_grouped: grouped,
        n_tot_grouped: n_h + grouped + 1,
    }
}
