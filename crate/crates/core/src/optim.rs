//! Local optimizers: BFGS with a strong-Wolfe line search for the smooth
//! per-class inner problems, and a primal log-barrier Newton method for
//! box-constrained concave maximization.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub(crate) struct BfgsOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 400, grad_tol: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct BfgsResult {
    pub x: Vec<f64>,
    pub grad_norm: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which returns the value and writes the gradient.
pub(crate) fn bfgs<F>(mut f: F, x0: &[f64], opts: BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    let mut stall = 0;
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    for _ in 0..opts.max_iter {
        let gnorm = inf_norm(&g);
        if gnorm <= opts.grad_tol {
            return BfgsResult { x, grad_norm: gnorm, converged: true };
        }
        let gv = DVector::from_column_slice(&g);
        let mut d: Vec<f64> = (-(&h * &gv)).iter().cloned().collect();
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            h.fill_with_identity();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let a0 = if first { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let ls = wolfe_search(&mut f, &x, fx, &g, &d, slope, a0, &mut xn, &mut gn);
        let Some((alpha, fnew)) = ls else {
            if first {
                return BfgsResult { x, grad_norm: gnorm, converged: false };
            }
            h.fill_with_identity();
            first = true;
            continue;
        };
        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if first && sy > 0.0 {
            let yy = dot(&y, &y);
            h.fill_with_identity();
            h *= sy / yy;
        }
        first = false;
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            let rho = 1.0 / sy;
            let sv = DVector::from_column_slice(&s);
            let yv = DVector::from_column_slice(&y);
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            // H+ = H - rho (s hy' + hy s') + (rho^2 yhy + rho) s s'
            h -= (&sv * hy.transpose() + &hy * sv.transpose()) * rho;
            h += &sv * sv.transpose() * (rho * rho * yhy + rho);
        }
        let df = fx - fnew;
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        fx = fnew;
        if df.abs() <= 1e-16 * (1.0 + fx.abs()) {
            stall += 1;
            if stall >= 4 {
                let gnorm = inf_norm(&g);
                return BfgsResult { x, grad_norm: gnorm, converged: gnorm <= opts.grad_tol * 1e3 };
            }
        } else {
            stall = 0;
        }
    }
    let gnorm = inf_norm(&g);
    BfgsResult { x, grad_norm: gnorm, converged: gnorm <= opts.grad_tol }
}

/// Strong-Wolfe line search (bracketing and zoom by safeguarded cubic steps).
#[allow(clippy::too_many_arguments)]
fn wolfe_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    slope0: f64,
    a_init: f64,
    xn: &mut [f64],
    gn: &mut [f64],
) -> Option<(f64, f64)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let _ = g0;
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let mut eval = |a: f64, xn: &mut [f64], gn: &mut [f64]| -> (f64, f64) {
        for i in 0..x.len() {
            xn[i] = x[i] + a * d[i];
        }
        let fa = f(xn, gn);
        (fa, dot(gn, d))
    };
    let (mut a_lo, mut f_lo, mut s_lo) = (0.0, f0, slope0);
    let mut a = a_init;
    let mut a_hi = f64::INFINITY;
    let (mut f_hi, mut s_hi) = (f64::NAN, f64::NAN);
    for _ in 0..60 {
        let (fa, sa) = eval(a, xn, gn);
        if !fa.is_finite() {
            a_hi = a;
            f_hi = f64::INFINITY;
            s_hi = f64::NAN;
            a = 0.5 * (a_lo + a);
            continue;
        }
        if fa > f0 + C1 * a * slope0 || (fa >= f_lo && a_lo > 0.0) {
            a_hi = a;
            f_hi = fa;
            s_hi = sa;
        } else if sa.abs() <= -C2 * slope0 {
            return Some((a, fa));
        } else if sa >= 0.0 {
            a_hi = a_lo;
            f_hi = f_lo;
            s_hi = s_lo;
            a_lo = a;
            f_lo = fa;
            s_lo = sa;
        } else {
            a_lo = a;
            f_lo = fa;
            s_lo = sa;
            if a_hi.is_infinite() {
                a *= 2.5;
                continue;
            }
        }
        if (a_hi - a_lo).abs() < 1e-16 * a_lo.abs().max(1e-16) {
            break;
        }
        a = interpolate(a_lo, f_lo, s_lo, a_hi, f_hi, s_hi);
    }
    if a_lo > 0.0 && f_lo < f0 {
        let (fa, _) = eval(a_lo, xn, gn);
        return Some((a_lo, fa));
    }
    None
}

fn interpolate(a: f64, fa: f64, sa: f64, b: f64, fb: f64, sb: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let width = hi - lo;
    let mut t = f64::NAN;
    if fb.is_finite() && sb.is_finite() {
        let d1 = sa + sb - 3.0 * (fa - fb) / (a - b);
        let disc = d1 * d1 - sa * sb;
        if disc >= 0.0 {
            let d2 = disc.sqrt() * (b - a).signum();
            t = b - (b - a) * (sb + d2 - d1) / (sb - sa + 2.0 * d2);
        }
    } else if fb.is_finite() {
        // quadratic through (a, fa, sa) and (b, fb)
        let h = b - a;
        let denom = 2.0 * (fb - fa - sa * h);
        if denom > 0.0 {
            t = a - sa * h * h / denom;
        }
    }
    if !t.is_finite() || t < lo + 0.1 * width || t > hi - 0.1 * width {
        t = 0.5 * (lo + hi);
    }
    t
}

/// Concave objective for [`barrier_maximize`]: returns value, gradient and Hessian.
pub(crate) trait ConcaveObjective {
    fn eval(&self, v: &[f64], grad: &mut DVector<f64>, hess: Option<&mut DMatrix<f64>>) -> f64;
}

#[derive(Clone, Debug)]
pub(crate) struct BarrierResult {
    pub v: Vec<f64>,
}

/// Maximizes a smooth concave function over `lo <= v <= hi`, optionally on the
/// hyperplane `<a, v> = <a, v0>` through the strictly feasible start `v0`.
/// `extra` is an additional log-barrier (`-inf` outside its domain) with barrier
/// parameter `extra_nu`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn barrier_maximize(
    obj: &dyn ConcaveObjective,
    v0: &[f64],
    lo: &[f64],
    hi: &[f64],
    equality: Option<&[f64]>,
    extra: Option<(&dyn ConcaveObjective, f64)>,
    gap_tol: f64,
) -> BarrierResult {
    let n = v0.len();
    let mut v = v0.to_vec();
    let m_barrier = 2.0 * n as f64 + extra.map_or(0.0, |e| e.1);
    let mut ge = DVector::zeros(n);
    let mut he = DMatrix::zeros(n, n);
    let mut t = 1.0f64;
    // Scale the initial weight to the objective's gradient.
    {
        let mut g = DVector::zeros(n);
        obj.eval(&v, &mut g, None);
        let gb: f64 = (0..n).map(|i| 1.0 / (hi[i] - v[i]) + 1.0 / (v[i] - lo[i])).sum();
        t = t.max(gb / g.norm().max(1e-12));
    }
    let mut phi = |v: &[f64], t: f64, g: &mut DVector<f64>, mut h: Option<&mut DMatrix<f64>>| -> f64 {
        let mut val = t * obj.eval(v, g, h.as_deref_mut().map(|h| {
            h.fill(0.0);
            h
        }));
        *g *= t;
        if let Some(h) = h.as_deref_mut() {
            *h *= t;
        }
        if let Some((b, _)) = extra {
            he.fill(0.0);
            let want = h.is_some();
            let bv = b.eval(v, &mut ge, want.then_some(&mut he));
            if !bv.is_finite() {
                return f64::NEG_INFINITY;
            }
            val += bv;
            *g += &ge;
            if let Some(h) = h {
                *h += &he;
            }
        }
        for i in 0..n {
            let (a, b) = (hi[i] - v[i], v[i] - lo[i]);
            if a <= 0.0 || b <= 0.0 {
                return f64::NEG_INFINITY;
            }
            val += a.ln() + b.ln();
            g[i] += -1.0 / a + 1.0 / b;
        }
        val
    };
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    loop {
        for _ in 0..100 {
            let val = phi(&v, t, &mut g, Some(&mut h));
            for i in 0..n {
                let (a, b) = (hi[i] - v[i], v[i] - lo[i]);
                h[(i, i)] -= 1.0 / (a * a) + 1.0 / (b * b);
            }
            let dv = newton_direction(&h, &g, equality);
            let dec = g.dot(&dv);
            if !(dec > 1e-12) {
                break;
            }
            // Backtrack, staying strictly inside the box.
            let mut s = 1.0f64;
            for i in 0..n {
                if dv[i] > 0.0 {
                    s = s.min(0.99 * (hi[i] - v[i]) / dv[i]);
                } else if dv[i] < 0.0 {
                    s = s.min(0.99 * (lo[i] - v[i]) / dv[i]);
                }
            }
            let mut gt = DVector::zeros(n);
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = (0..n).map(|i| v[i] + s * dv[i]).collect();
                let vt = phi(&trial, t, &mut gt, None);
                if vt >= val + 0.25 * s * dec {
                    v = trial;
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if !accepted || dec < 1e-10 {
                break;
            }
        }
        if m_barrier / t < gap_tol {
            break;
        }
        t *= 20.0;
    }
    BarrierResult { v }
}

/// Solves `H dv = -g` (with `H` negative definite), optionally restricted to
/// `<a, dv> = 0`.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>, equality: Option<&[f64]>) -> DVector<f64> {
    let n = g.len();
    let neg = -h.clone();
    match equality {
        None => {
            if let Some(ch) = neg.clone().cholesky() {
                ch.solve(g)
            } else {
                neg.lu().solve(g).unwrap_or_else(|| g.clone())
            }
        }
        Some(a) => {
            let mut k = DMatrix::zeros(n + 1, n + 1);
            k.view_mut((0, 0), (n, n)).copy_from(&neg);
            for i in 0..n {
                k[(i, n)] = a[i];
                k[(n, i)] = a[i];
            }
            let mut rhs = DVector::zeros(n + 1);
            rhs.rows_mut(0, n).copy_from(g);
            match k.lu().solve(&rhs) {
                Some(sol) => sol.rows(0, n).into_owned(),
                None => g.clone(),
            }
        }
    }
}
