//! BFGS with a strong-Wolfe line search.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    /// Convergence when the largest gradient component falls below this.
    pub gtol: f64,
    pub max_iter: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { gtol: 1e-6, max_iter: 2000, c1: 1e-4, c2: 0.9 }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    /// Objective evaluations (each returns value and gradient).
    pub n_fc: usize,
    pub n_iter: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    calls: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Counted<F> {
    fn eval(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        self.calls += 1;
        let (v, g) = (self.f)(x.as_slice());
        if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver(format!("non-finite objective after {} evaluations", self.calls)));
        }
        Ok((v, DVector::from_vec(g)))
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn bfgs<F>(f: F, x0: &[f64], opts: BfgsOptions) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut obj = Counted { f, calls: 0 };
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, mut g) = obj.eval(&x)?;
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut iter = 0;
    let mut first = true;
    while iter < opts.max_iter {
        if inf_norm(&g) < opts.gtol {
            return Ok(BfgsResult {
                x: x.as_slice().to_vec(),
                f: fx,
                grad: g.as_slice().to_vec(),
                n_fc: obj.calls,
                n_iter: iter,
                converged: true,
            });
        }
        let mut p = -(&hinv * &g);
        if p.dot(&g) >= 0.0 {
            hinv = DMatrix::identity(n, n);
            p = -g.clone();
        }
        let alpha0 = if first { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        first = false;
        let Some((alpha, fnew, gnew)) = line_search(&mut obj, &x, fx, &g, &p, alpha0, &opts)? else {
            // No acceptable step: restart from steepest descent once, otherwise stop.
            if hinv != DMatrix::identity(n, n) {
                hinv = DMatrix::identity(n, n);
                first = true;
                continue;
            }
            break;
        };
        let s = &p * alpha;
        let y = &gnew - &g;
        let sy = s.dot(&y);
        x += &s;
        if fnew > fx + 1e-12 * (1.0 + fx.abs()) {
            return Err(Error::Solver(format!("objective increased from {fx} to {fnew} at iteration {iter}")));
        }
        fx = fnew;
        g = gnew;
        if sy > 1e-14 * s.norm() * y.norm() {
            if iter == 0 {
                hinv *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            hinv += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        iter += 1;
    }
    let converged = inf_norm(&g) < opts.gtol;
    Ok(BfgsResult {
        x: x.as_slice().to_vec(),
        f: fx,
        grad: g.as_slice().to_vec(),
        n_fc: obj.calls,
        n_iter: iter,
        converged,
    })
}

type Step = Option<(f64, f64, DVector<f64>)>;

fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    obj: &mut Counted<F>,
    x: &DVector<f64>,
    f0: f64,
    g0: &DVector<f64>,
    p: &DVector<f64>,
    alpha0: f64,
    o: &BfgsOptions,
) -> Result<Step> {
    let d0 = g0.dot(p);
    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, d0);
    let mut a = alpha0;
    for i in 0..30 {
        let (fa, ga) = obj.eval(&(x + p * a))?;
        let da = ga.dot(p);
        if fa > f0 + o.c1 * a * d0 || (i > 0 && fa >= f_prev) {
            return zoom(obj, x, f0, d0, p, (a_prev, f_prev, d_prev), (a, fa, da), o);
        }
        if da.abs() <= -o.c2 * d0 {
            return Ok(Some((a, fa, ga)));
        }
        if da >= 0.0 {
            return zoom(obj, x, f0, d0, p, (a, fa, da), (a_prev, f_prev, d_prev), o);
        }
        a_prev = a;
        f_prev = fa;
        d_prev = da;
        a *= 2.0;
    }
    Ok(None)
}

/// Minimizer of the cubic interpolating values and slopes at two points, if it lies inside.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

#[allow(clippy::too_many_arguments)]
fn zoom<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    obj: &mut Counted<F>,
    x: &DVector<f64>,
    f0: f64,
    d0: f64,
    p: &DVector<f64>,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    o: &BfgsOptions,
) -> Result<Step> {
    for _ in 0..40 {
        let (l, h) = (lo.0.min(hi.0), lo.0.max(hi.0));
        let width = h - l;
        if width < 1e-16 * l.abs().max(1.0) {
            break;
        }
        let mut a = cubic_min(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2).unwrap_or(0.5 * (l + h));
        if a < l + 0.1 * width || a > h - 0.1 * width {
            a = 0.5 * (l + h);
        }
        let (fa, ga) = obj.eval(&(x + p * a))?;
        let da = ga.dot(p);
        if fa > f0 + o.c1 * a * d0 || fa >= lo.1 {
            hi = (a, fa, da);
        } else {
            if da.abs() <= -o.c2 * d0 {
                return Ok(Some((a, fa, ga)));
            }
            if da * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, fa, da);
        }
    }
    // Accept the best sufficient-decrease point found, if any.
    if lo.0 > 0.0 && lo.1 < f0 {
        let (fa, ga) = obj.eval(&(x + p * lo.0))?;
        return Ok(Some((lo.0, fa, ga)));
    }
    Ok(None)
}
