//! Coupled (J,T) interaction files and seeded synthetic interactions.
//!
//! Format, one record per line, `#` starts a comment:
//!
//! ```text
//! NORMALIZATION normalized      # or: unnormalized
//! ORB 0 1 3                     # n l 2j; orbitals are numbered 1.. in order of appearance
//! SPE 1 -3.1                    # orbital energy (MeV)
//! TBME 1 1 1 1 0 1 -2.0         # a b c d J T V (MeV)
//! ```
//!
//! Normalized elements are taken between normalized two-particle states. With
//! `unnormalized`, `V` carries an extra `√((1+δ_ab)(1+δ_cd))`.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::valence::ValenceSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledTbme {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    pub j: u32,
    pub t: u32,
    pub v: f64,
}

/// Coupled elements keyed by `(a, b, c, d, J, T)`.
pub type CoupledTable = HashMap<(usize, usize, usize, usize, u32, u32), f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    /// One energy per orbital of the space (shared by both species).
    pub spe: Vec<f64>,
    /// Matrix elements with orbital indices into the space, normalized convention.
    pub tbme: Vec<CoupledTbme>,
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?;
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("invalid {what} '{tok}'") })
}

impl Interaction {
    pub fn empty(space: &ValenceSpace) -> Self {
        Self { spe: vec![0.0; space.orbitals.len()], tbme: Vec::new() }
    }

    pub fn from_file(path: &Path, space: &ValenceSpace) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, space)
    }

    pub fn parse(text: &str, space: &ValenceSpace) -> Result<Self> {
        let mut normalized = true;
        let mut file_orbs: Vec<usize> = Vec::new();
        let mut spe = vec![0.0; space.orbitals.len()];
        let mut raw: Vec<(usize, CoupledTbme)> = Vec::new();
        for (idx, full) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = full.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tok = line.split_whitespace();
            let key = tok.next().unwrap_or("").to_ascii_uppercase();
            match key.as_str() {
                "NORMALIZATION" => {
                    normalized = match tok.next().map(str::to_ascii_lowercase).as_deref() {
                        Some("normalized") => true,
                        Some("unnormalized") => false,
                        _ => {
                            return Err(Error::Parse { line: line_no, msg: "expected normalized|unnormalized".into() })
                        }
                    }
                }
                "ORB" => {
                    let n: u32 = parse_num(tok.next(), line_no, "n")?;
                    let l: u32 = parse_num(tok.next(), line_no, "l")?;
                    let j2: u32 = parse_num(tok.next(), line_no, "2j")?;
                    let pos =
                        space.orbitals.iter().position(|o| o.n == n && o.l == l && o.j2 == j2).ok_or_else(|| {
                            Error::Validation(format!("line {line_no}: orbital {n} {l} {j2} not in space"))
                        })?;
                    file_orbs.push(pos);
                }
                "SPE" => {
                    let o: usize = parse_num(tok.next(), line_no, "orbital")?;
                    let e: f64 = parse_num(tok.next(), line_no, "energy")?;
                    let pos = resolve(&file_orbs, o, line_no)?;
                    spe[pos] = e;
                }
                "TBME" => {
                    let mut o = [0usize; 4];
                    for (k, slot) in o.iter_mut().enumerate() {
                        let v: usize = parse_num(tok.next(), line_no, &format!("orbital {}", k + 1))?;
                        *slot = resolve(&file_orbs, v, line_no)?;
                    }
                    let j: u32 = parse_num(tok.next(), line_no, "J")?;
                    let t: u32 = parse_num(tok.next(), line_no, "T")?;
                    let v: f64 = parse_num(tok.next(), line_no, "V")?;
                    if !v.is_finite() {
                        return Err(Error::Parse { line: line_no, msg: "non-finite V".into() });
                    }
                    raw.push((line_no, CoupledTbme { a: o[0], b: o[1], c: o[2], d: o[3], j, t, v }));
                }
                other => return Err(Error::Parse { line: line_no, msg: format!("unknown record '{other}'") }),
            }
            if tok.next().is_some() {
                return Err(Error::Parse { line: line_no, msg: "trailing tokens".into() });
            }
        }
        let mut tbme = Vec::with_capacity(raw.len());
        for (line_no, mut e) in raw {
            validate(space, &e).map_err(|m| Error::Validation(format!("line {line_no}: {m}")))?;
            if !normalized {
                let f = ((1.0 + (e.a == e.b) as u8 as f64) * (1.0 + (e.c == e.d) as u8 as f64)).sqrt();
                e.v /= f;
            }
            tbme.push(e);
        }
        let inter = Self { spe, tbme };
        inter.coupled_table(space)?;
        Ok(inter)
    }

    /// Renders in the file format (normalized convention).
    pub fn to_text(&self, space: &ValenceSpace) -> String {
        let mut s = String::from("NORMALIZATION normalized\n");
        for o in &space.orbitals {
            s.push_str(&format!("ORB {} {} {}\n", o.n, o.l, o.j2));
        }
        for (i, e) in self.spe.iter().enumerate() {
            s.push_str(&format!("SPE {} {}\n", i + 1, e));
        }
        for t in &self.tbme {
            s.push_str(&format!("TBME {} {} {} {} {} {} {}\n", t.a + 1, t.b + 1, t.c + 1, t.d + 1, t.j, t.t, t.v));
        }
        s
    }

    /// Every symmetry image of the input elements, keyed by `(a,b,c,d,J,T)`.
    pub fn coupled_table(&self, space: &ValenceSpace) -> Result<CoupledTable> {
        let mut table = HashMap::new();
        for e in &self.tbme {
            let pab = swap_phase(space, e.a, e.b, e.j, e.t);
            let pcd = swap_phase(space, e.c, e.d, e.j, e.t);
            let images = [
                ((e.a, e.b, e.c, e.d), 1.0),
                ((e.b, e.a, e.c, e.d), pab),
                ((e.a, e.b, e.d, e.c), pcd),
                ((e.b, e.a, e.d, e.c), pab * pcd),
            ];
            for ((a, b, c, d), ph) in images {
                for key in [(a, b, c, d, e.j, e.t), (c, d, a, b, e.j, e.t)] {
                    let val = ph * e.v;
                    match table.get(&key) {
                        Some(&old)
                            if (old - val) > 1e-9 * (1.0 + val.abs()) || (val - old) > 1e-9 * (1.0 + val.abs()) =>
                        {
                            return Err(Error::Validation(format!(
                                "conflicting duplicate element for orbitals {:?} J={} T={}",
                                (key.0 + 1, key.1 + 1, key.2 + 1, key.3 + 1),
                                e.j,
                                e.t
                            )));
                        }
                        _ => {
                            table.insert(key, val);
                        }
                    }
                }
            }
        }
        Ok(table)
    }

    /// Seeded random interaction with every allowed coupled element populated.
    pub fn random(space: &ValenceSpace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let no = space.orbitals.len();
        let spe = (0..no).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut pairs = Vec::new();
        for a in 0..no {
            for b in a..no {
                pairs.push((a, b));
            }
        }
        let mut tbme = Vec::new();
        let j2max = space.orbitals.iter().map(|o| o.j2).max().unwrap_or(0);
        for t in 0..=1u32 {
            for j in 0..=j2max {
                let allowed: Vec<(usize, usize)> =
                    pairs.iter().copied().filter(|&(a, b)| pair_allowed(space, a, b, j, t)).collect();
                for (x, &(a, b)) in allowed.iter().enumerate() {
                    for &(c, d) in &allowed[x..] {
                        let v = rng.random_range(-3.0..1.0);
                        tbme.push(CoupledTbme { a, b, c, d, j, t, v });
                    }
                }
            }
        }
        Self { spe, tbme }
    }

    /// Isovector pairing: `V_{J=0,T=1}(aa,bb) = −g √((j_a+½)(j_b+½))` plus orbital energies.
    pub fn pairing(space: &ValenceSpace, strength: f64, spe: &[f64]) -> Result<Self> {
        if spe.len() != space.orbitals.len() {
            return Err(Error::Config("one orbital energy per orbital is required".into()));
        }
        let mut tbme = Vec::new();
        let no = space.orbitals.len();
        for a in 0..no {
            for c in a..no {
                let ja = space.orbitals[a].j2 as f64 + 1.0;
                let jc = space.orbitals[c].j2 as f64 + 1.0;
                let v = -strength * (ja * jc).sqrt() / 2.0;
                tbme.push(CoupledTbme { a, b: a, c, d: c, j: 0, t: 1, v });
            }
        }
        Ok(Self { spe: spe.to_vec(), tbme })
    }
}

fn resolve(file_orbs: &[usize], o: usize, line: usize) -> Result<usize> {
    if o == 0 || o > file_orbs.len() {
        return Err(Error::Validation(format!("line {line}: orbital {o} not declared")));
    }
    Ok(file_orbs[o - 1])
}

/// Whether `|ab; J T⟩` exists: triangle rule and, for identical orbitals, `J+T` odd.
pub fn pair_allowed(space: &ValenceSpace, a: usize, b: usize, j: u32, t: u32) -> bool {
    let (ja, jb) = (space.orbitals[a].j2 as i64, space.orbitals[b].j2 as i64);
    let j2 = 2 * j as i64;
    if t > 1 || j2 < (ja - jb).abs() || j2 > ja + jb {
        return false;
    }
    a != b || (j + t) % 2 == 1
}

fn validate(space: &ValenceSpace, e: &CoupledTbme) -> std::result::Result<(), String> {
    if !pair_allowed(space, e.a, e.b, e.j, e.t) || !pair_allowed(space, e.c, e.d, e.j, e.t) {
        return Err(format!(
            "J={} T={} not allowed for orbitals ({} {} {} {})",
            e.j,
            e.t,
            e.a + 1,
            e.b + 1,
            e.c + 1,
            e.d + 1
        ));
    }
    let parity = |x: usize| space.orbitals[x].l % 2;
    if (parity(e.a) + parity(e.b)) % 2 != (parity(e.c) + parity(e.d)) % 2 {
        return Err("parity-violating element".into());
    }
    Ok(())
}

/// `|ba; JT⟩ = phase · |ab; JT⟩` for two spin-½ isospin nucleons.
pub fn swap_phase(space: &ValenceSpace, a: usize, b: usize, j: u32, t: u32) -> f64 {
    let e = (space.orbitals[a].j2 + space.orbitals[b].j2) as i64 / 2 - j as i64 + 1 - t as i64;
    if e.rem_euclid(2) == 0 {
        -1.0
    } else {
        1.0
    }
}
