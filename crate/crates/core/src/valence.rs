//! Valence spaces, single-particle states and m-scheme Slater-determinant bases.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbital {
    pub n: u32,
    pub l: u32,
    pub j2: u32,
    pub label: String,
}

impl Orbital {
    pub fn new(n: u32, l: u32, j2: u32) -> Result<Self> {
        let ok = j2 % 2 == 1 && (j2 == 2 * l + 1 || (l > 0 && j2 == 2 * l - 1));
        if !ok {
            return Err(Error::Domain(format!("invalid orbital n={n} l={l} 2j={j2}")));
        }
        const L_NAMES: &[u8] = b"spdfghijk";
        let lc = L_NAMES.get(l as usize).map(|&c| c as char).unwrap_or('?');
        Ok(Self { n, l, j2, label: format!("{n}{lc}{j2}/2") })
    }

    pub fn degeneracy(&self) -> usize {
        self.j2 as usize + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShellName {
    P,
    Sd,
    Pf,
    Custom,
}

impl fmt::Display for ShellName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShellName::P => "p",
            ShellName::Sd => "sd",
            ShellName::Pf => "pf",
            ShellName::Custom => "custom",
        })
    }
}

impl FromStr for ShellName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Ok(ShellName::P),
            "sd" => Ok(ShellName::Sd),
            "pf" | "fp" => Ok(ShellName::Pf),
            other => Err(Error::Config(format!("unknown shell '{other}' (expected p, sd or pf)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    Neutrons,
    Protons,
    Both,
}

impl FromStr for Species {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "n" | "neutrons" => Ok(Species::Neutrons),
            "p" | "protons" => Ok(Species::Protons),
            "both" | "np" | "pn" => Ok(Species::Both),
            other => Err(Error::Config(format!("unknown species '{other}'"))),
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Species::Neutrons => "neutrons",
            Species::Protons => "protons",
            Species::Both => "both",
        })
    }
}

/// Twice the isospin projection of a neutron state.
pub const TZ2_NEUTRON: i32 = -1;
/// Twice the isospin projection of a proton state.
pub const TZ2_PROTON: i32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpState {
    /// Index into [`ValenceSpace::orbitals`].
    pub orbital: usize,
    pub m2: i32,
    pub tz2: i32,
    pub qubit: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValenceSpace {
    pub name: ShellName,
    pub species: Species,
    pub orbitals: Vec<Orbital>,
    pub states: Vec<SpState>,
}

fn shell_orbitals(name: ShellName) -> Vec<Orbital> {
    let spec: &[(u32, u32, u32)] = match name {
        ShellName::P => &[(0, 1, 3), (0, 1, 1)],
        ShellName::Sd => &[(0, 2, 5), (1, 0, 1), (0, 2, 3)],
        ShellName::Pf => &[(0, 3, 7), (1, 1, 3), (0, 3, 5), (1, 1, 1)],
        ShellName::Custom => &[],
    };
    spec.iter().map(|&(n, l, j2)| Orbital::new(n, l, j2).expect("built-in orbital")).collect()
}

pub fn build_valence_space(name: ShellName, species: Species) -> Result<ValenceSpace> {
    if name == ShellName::Custom {
        return Err(Error::Config("custom spaces are built from an orbital file".into()));
    }
    ValenceSpace::from_orbitals(name, shell_orbitals(name), species)
}

/// Parses an orbital file: one `n l 2j` triple per line, `#` comments allowed.
pub fn parse_orbital_file(text: &str) -> Result<Vec<Orbital>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: std::result::Result<Vec<u32>, _> = line.split_whitespace().map(str::parse).collect();
        let nums = nums.map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
        if nums.len() != 3 {
            return Err(Error::Parse { line: idx + 1, msg: "expected 'n l 2j'".into() });
        }
        let orb =
            Orbital::new(nums[0], nums[1], nums[2]).map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
        out.push(orb);
    }
    if out.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no orbitals".into() });
    }
    Ok(out)
}

impl ValenceSpace {
    pub fn from_orbitals(name: ShellName, orbitals: Vec<Orbital>, species: Species) -> Result<Self> {
        let tz_list: &[i32] = match species {
            Species::Neutrons => &[TZ2_NEUTRON],
            Species::Protons => &[TZ2_PROTON],
            Species::Both => &[TZ2_NEUTRON, TZ2_PROTON],
        };
        let mut states = Vec::new();
        for &tz2 in tz_list {
            for (oi, orb) in orbitals.iter().enumerate() {
                for m2 in (-(orb.j2 as i32)..=orb.j2 as i32).step_by(2) {
                    let qubit = states.len();
                    states.push(SpState { orbital: oi, m2, tz2, qubit });
                }
            }
        }
        if states.len() > 64 {
            return Err(Error::Resource(format!("{} single-particle states exceed 64", states.len())));
        }
        Ok(Self { name, species, orbitals, states })
    }

    pub fn n_qubits(&self) -> usize {
        self.states.len()
    }

    /// Single-particle states per species.
    pub fn dim_sp(&self) -> usize {
        self.orbitals.iter().map(Orbital::degeneracy).sum()
    }

    pub fn orbital_of(&self, q: usize) -> &Orbital {
        &self.orbitals[self.states[q].orbital]
    }

    /// Bitmask of the qubits holding states with the given isospin projection.
    pub fn species_mask(&self, tz2: i32) -> u64 {
        self.states.iter().filter(|s| s.tz2 == tz2).fold(0, |m, s| m | (1u64 << s.qubit))
    }

    pub fn has_neutrons(&self) -> bool {
        matches!(self.species, Species::Neutrons | Species::Both)
    }

    pub fn has_protons(&self) -> bool {
        matches!(self.species, Species::Protons | Species::Both)
    }

    pub fn dim_mb(&self, n_ci: usize, z_ci: usize) -> Result<u128> {
        let d = self.dim_sp();
        if n_ci > d || z_ci > d {
            return Err(Error::Domain(format!("particle counts ({n_ci}, {z_ci}) exceed {d} states")));
        }
        Ok(binomial(d as u64, n_ci as u64) * binomial(d as u64, z_ci as u64))
    }

    fn check_counts(&self, n_ci: usize, z_ci: usize) -> Result<()> {
        let d = self.dim_sp();
        if n_ci > d || z_ci > d {
            return Err(Error::Domain(format!("particle counts ({n_ci}, {z_ci}) exceed {d} states")));
        }
        if n_ci > 0 && !self.has_neutrons() {
            return Err(Error::Domain("neutrons requested in a protons-only space".into()));
        }
        if z_ci > 0 && !self.has_protons() {
            return Err(Error::Domain("protons requested in a neutrons-only space".into()));
        }
        Ok(())
    }

    /// Largest attainable 2M for the given particle counts.
    pub fn max_m2(&self, n_ci: usize, z_ci: usize) -> i32 {
        let top = |tz2: i32, count: usize| {
            let mut ms: Vec<i32> = self.states.iter().filter(|s| s.tz2 == tz2).map(|s| s.m2).collect();
            ms.sort_unstable_by(|a, b| b.cmp(a));
            ms.iter().take(count).sum::<i32>()
        };
        top(TZ2_NEUTRON, n_ci) + top(TZ2_PROTON, z_ci)
    }

    /// All determinants with the requested particle numbers and total 2M, ascending by bit value.
    pub fn enumerate_m_basis(&self, n_ci: usize, z_ci: usize, m2: i32) -> Result<Vec<SlaterDet>> {
        self.check_counts(n_ci, z_ci)?;
        if m2.abs() > self.max_m2(n_ci, z_ci) {
            return Err(Error::Domain(format!("2M={m2} not attainable")));
        }
        let nmask = self.species_mask(TZ2_NEUTRON);
        let pmask = self.species_mask(TZ2_PROTON);
        let nsets = subsets_of(nmask, n_ci);
        let psets = subsets_of(pmask, z_ci);
        let m_of = |bits: u64| -> i32 { iter_bits(bits).map(|q| self.states[q].m2).sum() };
        let pm: Vec<(u64, i32)> = psets.iter().map(|&b| (b, m_of(b))).collect();
        let mut out = Vec::new();
        for &nb in &nsets {
            let mn = m_of(nb);
            for &(pb, mp) in &pm {
                if mn + mp == m2 {
                    out.push(SlaterDet::new(nb | pb));
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn det_m2(&self, det: SlaterDet) -> i32 {
        iter_bits(det.occupation).map(|q| self.states[q].m2).sum()
    }

    pub fn det_tz2(&self, det: SlaterDet) -> i32 {
        iter_bits(det.occupation).map(|q| self.states[q].tz2).sum()
    }

    /// (neutron count, proton count) of a determinant.
    pub fn det_counts(&self, det: SlaterDet) -> (usize, usize) {
        let n = (det.occupation & self.species_mask(TZ2_NEUTRON)).count_ones() as usize;
        let z = (det.occupation & self.species_mask(TZ2_PROTON)).count_ones() as usize;
        (n, z)
    }

    /// Human-readable orbital-to-qubit table.
    pub fn qubit_map(&self) -> Vec<QubitLabel> {
        self.states
            .iter()
            .map(|s| QubitLabel {
                qubit: s.qubit,
                orbital: self.orbitals[s.orbital].label.clone(),
                m2: s.m2,
                tz2: s.tz2,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitLabel {
    pub qubit: usize,
    pub orbital: String,
    pub m2: i32,
    pub tz2: i32,
}

/// Occupation bitstring; bit `i` is the occupancy of state/qubit `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlaterDet {
    pub occupation: u64,
}

impl SlaterDet {
    pub fn new(occupation: u64) -> Self {
        Self { occupation }
    }

    pub fn vacuum() -> Self {
        Self { occupation: 0 }
    }

    pub fn from_indices(idx: &[usize]) -> Self {
        Self { occupation: idx.iter().fold(0, |m, &q| m | (1u64 << q)) }
    }

    pub fn n_particles(&self) -> u32 {
        self.occupation.count_ones()
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> {
        iter_bits(self.occupation)
    }

    pub fn is_occupied(&self, q: usize) -> bool {
        self.occupation >> q & 1 == 1
    }

    /// Ket rendering with qubit 0 leftmost.
    pub fn ket(&self, n_qubits: usize) -> String {
        (0..n_qubits).map(|q| if self.is_occupied(q) { '1' } else { '0' }).collect()
    }

    pub fn parse_ket(s: &str) -> Result<Self> {
        let mut occ = 0u64;
        for (q, c) in s.trim().chars().enumerate() {
            match c {
                '1' => occ |= 1 << q,
                '0' => {}
                _ => return Err(Error::Config(format!("bad bitstring '{s}'"))),
            }
        }
        Ok(Self::new(occ))
    }
}

pub fn iter_bits(mut bits: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if bits == 0 {
            None
        } else {
            let q = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(q)
        }
    })
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All subsets of `mask` with exactly `k` bits, ascending.
fn subsets_of(mask: u64, k: usize) -> Vec<u64> {
    let pos: Vec<usize> = iter_bits(mask).collect();
    if k > pos.len() {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let n = pos.len();
    let mut out = Vec::with_capacity(binomial(n as u64, k as u64) as usize);
    let mut c: u64 = (1u64 << k) - 1;
    let limit: u128 = 1u128 << n;
    while (c as u128) < limit {
        out.push(iter_bits(c).fold(0u64, |m, i| m | (1u64 << pos[i])));
        let t = c & c.wrapping_neg();
        let r = c.wrapping_add(t);
        if r == 0 {
            break;
        }
        c = (((r ^ c) >> 2) / t) | r;
    }
    out.sort_unstable();
    out
}
