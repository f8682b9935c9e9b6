//! Clebsch-Gordan coefficients with doubled angular-momentum arguments.

use crate::error::{Error, Result};

fn factorial(n: i64) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `⟨j1 m1; j2 m2 | J M⟩` in the Condon-Shortley convention; every argument is doubled.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> Result<f64> {
    if j1 < 0 || j2 < 0 || j < 0 {
        return Err(Error::Domain("negative angular momentum".into()));
    }
    if m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return Err(Error::Domain(format!("projection exceeds j in ({j1} {m1}; {j2} {m2} | {j} {m})")));
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j + m) % 2 != 0 || (j1 + j2 + j) % 2 != 0 {
        return Err(Error::Domain(format!("parity mismatch in ({j1} {m1}; {j2} {m2} | {j} {m})")));
    }
    Ok(cg_unchecked(j1, m1, j2, m2, j, m))
}

/// Same as [`clebsch_gordan`] but returns zero for any non-conforming input.
pub fn cg_unchecked(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 || (j1 + j2 + j) % 2 != 0 {
        return 0.0;
    }
    let (j1, m1, j2, m2, j, m) = (j1 as i64, m1 as i64, j2 as i64, m2 as i64, j as i64, m as i64);
    let tri = factorial((j1 + j2 - j) / 2) * factorial((j1 - j2 + j) / 2) * factorial((-j1 + j2 + j) / 2)
        / factorial((j1 + j2 + j) / 2 + 1);
    let pre = ((j + 1) as f64
        * tri
        * factorial((j1 + m1) / 2)
        * factorial((j1 - m1) / 2)
        * factorial((j2 + m2) / 2)
        * factorial((j2 - m2) / 2)
        * factorial((j + m) / 2)
        * factorial((j - m) / 2))
    .sqrt();
    let mut sum = 0.0;
    let kmax = [(j1 + j2 - j) / 2, (j1 - m1) / 2, (j2 + m2) / 2].into_iter().min().unwrap_or(0);
    let kmin = [0, (j2 - j - m1) / 2, (j1 - j + m2) / 2].into_iter().max().unwrap_or(0);
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial((j1 + j2 - j) / 2 - k)
            * factorial((j1 - m1) / 2 - k)
            * factorial((j2 + m2) / 2 - k)
            * factorial((j - j2 + m1) / 2 + k)
            * factorial((j - j1 - m2) / 2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / den;
    }
    pre * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_half() {
        let s = clebsch_gordan(1, 1, 1, -1, 0, 0).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let t = clebsch_gordan(1, -1, 1, 1, 0, 0).unwrap();
        assert!((t + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((clebsch_gordan(1, 1, 1, 1, 2, 2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn known_values() {
        // ⟨3/2 3/2; 3/2 -3/2 | 2 0⟩ = 1/2, ⟨1 0; 1 0 | 1 0⟩ = 0, ⟨1 1; 1 -1 | 2 0⟩ = 1/√6
        assert!((clebsch_gordan(3, 3, 3, -3, 4, 0).unwrap() - 0.5).abs() < 1e-14);
        assert!(clebsch_gordan(2, 0, 2, 0, 2, 0).unwrap().abs() < 1e-15);
        assert!((clebsch_gordan(2, 2, 2, -2, 4, 0).unwrap() - (1.0f64 / 6.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn errors_and_zeros() {
        assert!(clebsch_gordan(1, 0, 1, 1, 0, 1).is_err());
        assert!(clebsch_gordan(1, 3, 1, 1, 2, 4).is_err());
        assert_eq!(clebsch_gordan(1, 1, 1, 1, 0, 0).unwrap(), 0.0);
        assert_eq!(clebsch_gordan(1, 1, 1, -1, 4, 0).unwrap(), 0.0);
    }
}
