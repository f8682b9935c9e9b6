//! Jordan-Wigner images of fermionic operators.
//!
//! `a†_i = Z_0 … Z_{i-1} σ⁻_i` with `σ⁻ = |1⟩⟨0|`, so an occupied mode is the
//! qubit state `|1⟩`.

use num_complex::Complex64;

use crate::pauli::PauliSum;

const HALF: Complex64 = Complex64::new(0.5, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn below(i: usize) -> u64 {
    (1u64 << i) - 1
}

/// `a†_i` (create = true) or `a_i`.
pub fn ladder(n: usize, i: usize, create: bool) -> PauliSum {
    let mut s = PauliSum::zero(n);
    let bit = 1u64 << i;
    s.add_term(bit, below(i), HALF);
    let ycoeff = if create { -HALF * I } else { HALF * I };
    s.add_term(bit, below(i) | bit, ycoeff);
    s
}

/// Product of ladder operators, written left to right as in the operator expression.
pub fn ladder_product(n: usize, ops: &[(usize, bool)]) -> PauliSum {
    ops.iter().fold(PauliSum::identity(n), |acc, &(i, c)| acc.mul(&ladder(n, i, c)))
}

pub fn jw_number(n: usize, p: usize) -> PauliSum {
    let mut s = PauliSum::zero(n);
    s.add_term(0, 0, HALF);
    s.add_term(0, 1 << p, -HALF);
    s
}

/// `a†_p a_q + a†_q a_p`.
pub fn jw_hop(n: usize, p: usize, q: usize) -> PauliSum {
    let f = ladder_product(n, &[(p, true), (q, false)]);
    f.add(&f.adjoint())
}

/// `i(a†_p a_q − a†_q a_p)`.
pub fn jw_single_excitation(n: usize, p: usize, q: usize) -> PauliSum {
    let f = ladder_product(n, &[(p, true), (q, false)]);
    f.add(&f.adjoint().scale((-1.0).into())).scale(I)
}

/// `a†_p a†_q a_r a_s + a†_r a†_s a_p a_q`; repeated indices give the reduced forms.
pub fn jw_double_hop(n: usize, p: usize, q: usize, r: usize, s: usize) -> PauliSum {
    let f = ladder_product(n, &[(p, true), (q, true), (r, false), (s, false)]);
    f.add(&f.adjoint())
}

/// Pool generator `i(a†_p a†_q a_r a_s − a†_r a†_s a_p a_q)`.
pub fn jw_pool_op(n: usize, p: usize, q: usize, r: usize, s: usize) -> PauliSum {
    let f = ladder_product(n, &[(p, true), (q, true), (r, false), (s, false)]);
    f.add(&f.adjoint().scale((-1.0).into())).scale(I)
}

/// Z-string shared by all strings of a double excitation on distinct indices.
pub fn aux_parity_mask(p: usize, q: usize, r: usize, s: usize) -> u64 {
    let range = |a: usize, b: usize| -> u64 {
        let (lo, hi) = (a.min(b), a.max(b));
        if hi <= lo + 1 {
            0
        } else {
            below(hi) & !below(lo + 1)
        }
    };
    let inner = |a: usize, b: usize| range(a, b) | (1u64 << a.min(b)) | (1u64 << a.max(b));
    (range(p, q) & !inner(r, s)) | (range(r, s) & !inner(p, q))
}

/// Average Pauli-string length of a double excitation with distinct indices.
pub fn string_length(p: usize, q: usize, r: usize, s: usize) -> usize {
    let mut v = [p, q, r, s];
    v.sort_unstable();
    v[1] + v[3] - v[0] - v[2] + 2
}

fn closed_form(n: usize, idx: [usize; 4], table: &[(i8, &str)]) -> PauliSum {
    let pm = aux_parity_mask(idx[0], idx[1], idx[2], idx[3]);
    let mut out = PauliSum::zero(n);
    for &(sign, word) in table {
        let (mut x, mut z) = (0u64, pm);
        for (slot, c) in word.chars().enumerate() {
            let b = 1u64 << idx[slot];
            x |= b;
            if c == 'Y' {
                z |= b;
            }
        }
        out.add_term(x, z, Complex64::new(sign as f64 / 8.0, 0.0));
    }
    out.prune();
    out
}

/// Eight-string closed form of the double hop for distinct indices `p<q`, `r<s`.
pub fn double_hop_closed_form(n: usize, p: usize, q: usize, r: usize, s: usize) -> PauliSum {
    const TABLE: [(i8, &str); 8] =
        [(-1, "XXXX"), (1, "XXYY"), (-1, "XYXY"), (-1, "XYYX"), (-1, "YYYY"), (1, "YYXX"), (-1, "YXYX"), (-1, "YXXY")];
    closed_form(n, [p, q, r, s], &TABLE)
}

/// Eight-string closed form of the pool generator for distinct indices `p<q`, `r<s`.
pub fn pool_op_closed_form(n: usize, p: usize, q: usize, r: usize, s: usize) -> PauliSum {
    const TABLE: [(i8, &str); 8] =
        [(1, "XYYY"), (1, "YXYY"), (-1, "YYXY"), (-1, "YYYX"), (-1, "YXXX"), (-1, "XYXX"), (1, "XXYX"), (1, "XXXY")];
    closed_form(n, [p, q, r, s], &TABLE)
}

/// Closed form of the single hop `½ Z_{p+1..q-1}(X_p X_q + Y_p Y_q)`, `p<q`.
pub fn hop_closed_form(n: usize, p: usize, q: usize) -> PauliSum {
    let zs = below(q) & !below(p + 1);
    let xm = (1u64 << p) | (1u64 << q);
    let mut s = PauliSum::zero(n);
    s.add_term(xm, zs, HALF);
    s.add_term(xm, zs | xm, HALF);
    s
}

/// Closed form of `i(a†_p a_q − a†_q a_p)` = `½ Z_{p+1..q-1}(Y_p X_q − X_p Y_q)`, `p<q`.
pub fn single_excitation_closed_form(n: usize, p: usize, q: usize) -> PauliSum {
    let zs = below(q) & !below(p + 1);
    let xm = (1u64 << p) | (1u64 << q);
    let mut s = PauliSum::zero(n);
    s.add_term(xm, zs | (1 << p), HALF);
    s.add_term(xm, zs | (1 << q), -HALF);
    s
}
