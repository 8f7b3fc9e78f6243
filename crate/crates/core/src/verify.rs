//! Global-optimality certificate: distance from `r` to the convex hull of
//! the candidate `q` vectors, and the decomposition it implies.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::CandidateSet;
use crate::qcore::{hs_norm, projector, DensityMatrix, HermitianOp, PureState, C64};
use crate::states::{EntClass, SchmidtParams};
use crate::symmetry::{CoordVector, SymBasis, SymmetryGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Global,
    Local,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Global => "global",
            Verdict::Local => "local",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub d_min: f64,
    /// Simplex weights over the candidate members, in member order.
    pub weights: Vec<f64>,
    pub verdict: Verdict,
    pub threshold: f64,
}

/// `min_{w in simplex} |r - Q w|` by Wolfe's minimum-norm-point algorithm.
pub fn dmin_simplex(r: &[f64], qs: &[CoordVector]) -> Result<(f64, Vec<f64>)> {
    if qs.is_empty() {
        return Err(Error::Domain("empty point set".into()));
    }
    for q in qs {
        if q.len() != r.len() {
            return Err(Error::DimensionMismatch { expected: r.len(), found: q.len() });
        }
    }
    let pts: Vec<DVector<f64>> = qs.iter().map(|q| DVector::from_iterator(r.len(), q.iter().zip(r).map(|(a, b)| a - b))).collect();
    let w = min_norm_point(&pts);
    let x = combine(&pts, &w);
    Ok((x.norm(), w))
}

fn combine(pts: &[DVector<f64>], w: &[f64]) -> DVector<f64> {
    let mut x = DVector::zeros(pts[0].len());
    for (p, wi) in pts.iter().zip(w) {
        if *wi != 0.0 {
            x.axpy(*wi, p, 1.0);
        }
    }
    x
}

/// Weights of the minimum-norm point of the affine hull of `set`.
fn affine_min(pts: &[DVector<f64>], set: &[usize]) -> Option<Vec<f64>> {
    let k = set.len();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    for (a, &i) in set.iter().enumerate() {
        for (b, &j) in set.iter().enumerate() {
            m[(a, b)] = pts[i].dot(&pts[j]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    let alpha: Vec<f64> = sol.rows(0, k).iter().cloned().collect();
    alpha.iter().all(|a| a.is_finite()).then_some(alpha)
}

fn min_norm_point(pts: &[DVector<f64>]) -> Vec<f64> {
    let n = pts.len();
    let scale = pts.iter().map(|p| p.norm_squared()).fold(0.0f64, f64::max).max(1e-300);
    let start = (0..n)
        .min_by(|&a, &b| pts[a].norm_squared().partial_cmp(&pts[b].norm_squared()).unwrap_or(std::cmp::Ordering::Equal))
        .expect("nonempty");
    let mut set = vec![start];
    let mut lam = vec![1.0];
    let mut x = pts[start].clone();
    for _major in 0..(50 * n + 100) {
        let (j, xp) = (0..n)
            .map(|j| (j, x.dot(&pts[j])))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty");
        if x.norm_squared() - xp <= 1e-15 * scale || set.contains(&j) {
            break;
        }
        set.push(j);
        lam.push(0.0);
        loop {
            let Some(alpha) = affine_min(pts, &set) else {
                // Affinely dependent set: drop the newest point.
                set.pop();
                lam.pop();
                break;
            };
            if alpha.iter().all(|&a| a > 1e-14) {
                lam = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lam.iter().zip(&alpha) {
                if *a <= 1e-14 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            let keep: Vec<bool> = lam.iter().map(|&l| l > 1e-14).collect();
            if keep.iter().all(|k| *k) {
                // numerical stall: force removal of the smallest weight
                let (imin, _) = lam
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
                    .expect("nonempty");
                set.remove(imin);
                lam.remove(imin);
            } else {
                let mut s2 = Vec::new();
                let mut l2 = Vec::new();
                for ((i, l), k) in set.iter().zip(&lam).zip(&keep) {
                    if *k {
                        s2.push(*i);
                        l2.push(*l);
                    }
                }
                set = s2;
                lam = l2;
            }
            let total: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= total);
            if set.len() == 1 {
                lam = vec![1.0];
                break;
            }
        }
        let mut w = vec![0.0; n];
        for (i, l) in set.iter().zip(&lam) {
            w[*i] = *l;
        }
        x = combine(pts, &w);
    }
    let mut w = vec![0.0; n];
    for (i, l) in set.iter().zip(&lam) {
        w[*i] = l.max(0.0);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// KKT violation of simplex weights for `min |r - Q w|^2 / 2`.
pub fn kkt_residual(r: &[f64], qs: &[CoordVector], w: &[f64]) -> f64 {
    let x: Vec<f64> = (0..r.len()).map(|k| qs.iter().zip(w).map(|(q, wi)| wi * q[k]).sum::<f64>() - r[k]).collect();
    let g: Vec<f64> = qs.iter().map(|q| q.iter().zip(r).zip(&x).map(|((a, b), c)| (a - b) * c).sum()).collect();
    let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let support_max = g.iter().zip(w).filter(|(_, wi)| **wi > 1e-12).map(|(gi, _)| *gi).fold(f64::NEG_INFINITY, f64::max);
    let simplex = (w.iter().sum::<f64>() - 1.0).abs() + w.iter().map(|v| (-v).max(0.0)).sum::<f64>();
    (support_max - gmin).max(0.0) + simplex
}

pub fn verdict_for(d_min: f64, threshold: f64) -> Verdict {
    if d_min <= threshold {
        Verdict::Global
    } else if d_min > 10.0 * threshold {
        Verdict::Local
    } else {
        Verdict::Inconclusive
    }
}

/// Certificate for the candidate set of a witness on the state with coordinates `r`.
pub fn certify_set(r: &[f64], set: &CandidateSet, threshold: f64) -> Result<Certificate> {
    let (d_min, weights) = dmin_simplex(r, &set.qs())?;
    Ok(Certificate { d_min, weights, verdict: verdict_for(d_min, threshold), threshold })
}

pub fn certify(result: &crate::outer::WitnessResult, threshold: f64) -> Result<Certificate> {
    certify_set(&result.r, &result.candidate_set, threshold)
}

#[derive(Clone, Debug)]
pub struct DecompTerm {
    pub weight: f64,
    pub params: SchmidtParams,
    pub class: EntClass,
    pub t3: f64,
    /// Symmetrized projector of the representative state.
    pub projector: HermitianOp,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub terms: Vec<DecompTerm>,
    /// `|rho - sum_i w_i pi^S_i|_HS`.
    pub residual: f64,
    /// `sum_i w_i T3_i`.
    pub implied_value: f64,
}

/// Optimal decomposition from a global certificate; refuses otherwise.
pub fn extract_decomposition(cert: &Certificate, set: &CandidateSet, basis: &SymBasis, rho: &DensityMatrix) -> Result<Decomposition> {
    if cert.verdict != Verdict::Global {
        return Err(Error::NotGlobal(cert.verdict.to_string()));
    }
    if cert.weights.len() != set.members.len() {
        return Err(Error::DimensionMismatch { expected: set.members.len(), found: cert.weights.len() });
    }
    let kept: Vec<usize> = (0..cert.weights.len()).filter(|&i| cert.weights[i] >= 1e-9).collect();
    let total: f64 = kept.iter().map(|&i| cert.weights[i]).sum();
    let mut terms = Vec::with_capacity(kept.len());
    let mut acc = HermitianOp::zero(rho.dim());
    for &i in &kept {
        let c = &set.members[i];
        let weight = cert.weights[i] / total;
        let proj = basis.symmetrize(&projector(&c.state()))?;
        acc = acc.axpy(weight, &proj)?;
        terms.push(DecompTerm { weight, params: c.params.clone(), class: c.class, t3: c.t3, projector: proj });
    }
    let residual = hs_norm(&rho.op().sub(&acc)?);
    let implied_value = terms.iter().map(|t| t.weight * t.t3).sum();
    Ok(Decomposition { terms, residual, implied_value })
}

/// Normalized average `|G|^-1 sum_U U O U†` over a finite group.
pub fn orbit_average(op: &HermitianOp, group: &SymmetryGroup) -> Result<HermitianOp> {
    let elems = group.finite_closure();
    let mut acc = HermitianOp::zero(op.dim());
    for u in &elems {
        acc = acc.add(&op.conjugate_by(u)?)?;
    }
    Ok(acc.scale(1.0 / elems.len() as f64))
}

/// One orbit of a decomposition: merged weight and a representative.
#[derive(Clone, Debug)]
pub struct UnitTerm {
    pub weight: f64,
    pub params: SchmidtParams,
    pub t3: f64,
    pub members: usize,
}

impl UnitTerm {
    /// Nonzero three-tangle, beyond `tol`.
    pub fn is_ghz_class(&self, tol: f64) -> bool {
        self.t3 > tol
    }
}

impl Decomposition {
    /// Groups terms whose symmetrized projectors lie within `tol` of each
    /// other (HS distance); equal symmetrized projectors mean one orbit.
    pub fn asymmetric_unit(&self, tol: f64) -> Vec<UnitTerm> {
        let mut order: Vec<usize> = (0..self.terms.len()).collect();
        order.sort_by(|&a, &b| self.terms[b].weight.total_cmp(&self.terms[a].weight));
        let mut heads: Vec<usize> = Vec::new();
        let mut out: Vec<UnitTerm> = Vec::new();
        for i in order {
            let t = &self.terms[i];
            let near = heads.iter().position(|&h| {
                let d = t.projector.sub(&self.terms[h].projector).map(|d| hs_norm(&d)).unwrap_or(f64::INFINITY);
                d <= tol
            });
            match near {
                Some(k) => {
                    let u = &mut out[k];
                    u.t3 = (u.t3 * u.weight + t.t3 * t.weight) / (u.weight + t.weight);
                    u.weight += t.weight;
                    u.members += 1;
                }
                None => {
                    heads.push(i);
                    out.push(UnitTerm { weight: t.weight, params: t.params.clone(), t3: t.t3, members: 1 });
                }
            }
        }
        out
    }
}

/// Amplitudes `(a_0..a_3)` of a state `sum_ijk a_{i+j+k} |ijk>` reached from
/// `psi` by local phase rotations, a global phase and (if needed) the bit
/// flip `sigma_x^3`, chosen so that `|a_0| >= |a_3|`. The second value is the
/// largest deviation of `psi` from that form.
pub fn weight_symmetric_form(psi: &PureState) -> ([f64; 4], f64) {
    let mut t: Vec<C64> = psi.amp().to_vec();
    if t[7].norm() > t[0].norm() {
        t.reverse();
    }
    let th = t[0].arg();
    let (al, be) = (t[4].arg() - th, t[2].arg() - th);
    // the phases of t[4], t[2] fix the rotation only up to the signs of a_1, a_2
    let pi = std::f64::consts::PI;
    [(0.0, 0.0), (pi, 0.0), (0.0, pi), (pi, pi)]
        .iter()
        .map(|&(da, db)| symmetric_after_rotation(&t, th, al + da, be + db))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty")
}

fn symmetric_after_rotation(t: &[C64], th: f64, al: f64, be: f64) -> ([f64; 4], f64) {
    // R_L(a, b) multiplies |ijk> by exp(i(i a + j b - k (a + b))).
    let t: Vec<C64> = t
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let (i, j, k) = ((idx >> 2) & 1, (idx >> 1) & 1, idx & 1);
            z * C64::from_polar(1.0, -(th + i as f64 * al + j as f64 * be - k as f64 * (al + be)))
        })
        .collect();
    let mut a = [0.0; 4];
    let mut count = [0usize; 4];
    for (idx, z) in t.iter().enumerate() {
        let w = (idx as u32).count_ones() as usize;
        a[w] += z.re;
        count[w] += 1;
    }
    for w in 0..4 {
        a[w] /= count[w] as f64;
    }
    let dev = t.iter().enumerate().map(|(idx, z)| (z - C64::new(a[(idx as u32).count_ones() as usize], 0.0)).norm()).fold(0.0, f64::max);
    (a, dev)
}

/// Best `r` and overlap `|<r|psi>|` with `sqrt(1-r)|000> + sqrt(r)|111>`.
pub fn r_state_fit(psi: &PureState) -> (f64, f64) {
    let (a, b) = (psi.amp()[0], psi.amp()[7]);
    let n = a.norm_sqr() + b.norm_sqr();
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let r = b.norm_sqr() / n;
    let ov = (a * (1.0 - r).sqrt() + b * r.sqrt()).norm();
    (r, ov)
}

/// Real weight-symmetric states `sum a_w |ijk>` (`w = i + j + k`) sharing
/// `|t000|^2 + |t111|^2` and `2 Re(t000* t111)` with `psi`, which is all the
/// GI-symmetrized projector retains. On that circle `tau_3` touches zero
/// tangentially, so the local minima of `tau_3` are returned with their values.
pub fn symmetric_w_forms(psi: &PureState) -> Vec<([f64; 4], f64)> {
    let t = psi.amp();
    let s = t[0].norm_sqr() + t[7].norm_sqr();
    let p = 2.0 * (t[0].conj() * t[7]).re;
    let (u, w) = ((s + p).max(0.0).sqrt(), (s - p).max(0.0).sqrt());
    let (a0, a3) = ((u + w) / 2.0, (u - w) / 2.0);
    let rad = ((1.0 - s).max(0.0) / 3.0).sqrt();
    let form = |phi: f64| [a0, rad * phi.cos(), rad * phi.sin(), a3];
    let tau = |phi: f64| {
        let a = form(phi);
        let amp: Vec<C64> = (0..8usize).map(|i| C64::new(a[i.count_ones() as usize], 0.0)).collect();
        4.0 * crate::measure::hyperdeterminant(&amp).norm()
    };
    let n = 720;
    let step = std::f64::consts::TAU / n as f64;
    let vals: Vec<f64> = (0..n).map(|i| tau(i as f64 * step)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let (prev, next) = (vals[(i + n - 1) % n], vals[(i + 1) % n]);
        if vals[i] > prev || vals[i] > next {
            continue;
        }
        // golden section on the bracketing cells
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = ((i as f64 - 1.0) * step, (i as f64 + 1.0) * step);
        let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut f1, mut f2) = (tau(x1), tau(x2));
        for _ in 0..80 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = tau(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = tau(x2);
            }
        }
        let phi = 0.5 * (lo + hi);
        out.push((form(phi), tau(phi)));
    }
    out
}
