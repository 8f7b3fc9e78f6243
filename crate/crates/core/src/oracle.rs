//! Primal upper bounds on the convex roof: minimize `sum_i p_i T3(psi_i)`
//! over decompositions `rho = sum_i p_i pi_{psi_i}`.
//!
//! A decomposition with `m` terms of a rank-`n` state is an `m x n` matrix
//! `U` with `U^dag U = I`: `|psi~_i> = sum_j U_ij sqrt(l_j) |e_j>`, where
//! `rho = sum_j l_j |e_j><e_j|`. Since `T3` is homogeneous,
//! `p_i T3(psi_i) = 2 sqrt|Det(psi~_i)|`, and the optimization runs directly
//! on the unnormalized vectors with Riemannian conjugate gradients.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{hyperdeterminant, hyperdeterminant_grad};
use crate::qcore::{c, DensityMatrix, HermitianOp, PureState, C64, DIM};

const RANK_TOL: f64 = 1e-10;

/// Left-unitary `m x n` matrix (`u^dag u = I_n`).
#[derive(Clone, Debug, PartialEq)]
pub struct DecompParams {
    u: DMatrix<C64>,
}

impl DecompParams {
    pub fn new(u: DMatrix<C64>) -> Result<Self> {
        let (m, n) = u.shape();
        if n == 0 || m < n || m > n * n.max(1) {
            return Err(Error::Domain(format!("need n <= m <= n^2, got m={m}, n={n}")));
        }
        let dev = (u.adjoint() * &u - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::Domain(format!("not left-unitary (deviation {dev:.3e})")));
        }
        Ok(Self { u })
    }

    /// The eigendecomposition, padded with empty terms.
    pub fn identity(m: usize, n: usize) -> Result<Self> {
        Self::new(DMatrix::from_fn(m, n, |i, j| c(if i == j { 1.0 } else { 0.0 }, 0.0)))
    }

    pub fn random(m: usize, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(m, n, |_, _| {
            c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        Self::new(retract(g))
    }

    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    pub fn n(&self) -> usize {
        self.u.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.u
    }

    /// Real parameter count `2mn - n^2`; one more is a global phase.
    pub fn real_dim(&self) -> usize {
        2 * self.m() * self.n() - self.n() * self.n()
    }
}

/// `E diag(sqrt l)` over the range of `rho` (columns are scaled eigenvectors).
fn range_factor(rho: &DensityMatrix) -> DMatrix<C64> {
    let (vals, vecs) = rho.op().eigh();
    let keep: Vec<usize> = (0..vals.len()).rev().filter(|&j| vals[j] > RANK_TOL).collect();
    DMatrix::from_fn(rho.dim(), keep.len(), |k, col| vecs[(k, keep[col])] * vals[keep[col]].sqrt())
}

/// The decomposition encoded by `d`, as `(p_i, psi_i)`; empty terms are dropped.
pub fn decompose(rho: &DensityMatrix, d: &DecompParams) -> Result<Vec<(f64, PureState)>> {
    let b = range_factor(rho);
    if b.ncols() != d.n() {
        return Err(Error::Domain(format!("rank of rho is {}, parameters expect {}", b.ncols(), d.n())));
    }
    let psi = d.u.clone() * b.transpose();
    let mut out = Vec::with_capacity(d.m());
    for i in 0..d.m() {
        let row: Vec<C64> = psi.row(i).iter().copied().collect();
        let p: f64 = row.iter().map(|z| z.norm_sqr()).sum();
        if p > 1e-300 {
            out.push((p, PureState::normalized(row)?));
        }
    }
    Ok(out)
}

/// `sum_i p_i pi_{psi_i}`.
pub fn reconstruct(terms: &[(f64, PureState)]) -> Result<HermitianOp> {
    let dim = terms.first().map_or(DIM, |t| t.1.dim());
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (p, psi) in terms {
        let v = psi.as_vector();
        m += v * v.adjoint() * c(*p, 0.0);
    }
    HermitianOp::new(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Number of terms; `min(n^2, 2n)` when unset.
    pub m: Option<usize>,
    pub starts: usize,
    pub seed: u64,
    /// Iteration cap per smoothing stage.
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Smoothing continuation, largest first.
    pub eps_schedule: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            m: None,
            starts: 8,
            seed: 0,
            max_iter: 1500,
            grad_tol: 1e-9,
            eps_schedule: vec![0.05, 0.03, 1e-2, 3e-3, 1e-3, 1e-4, 1e-6, 1e-8],
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.max_iter == 0 {
            return Err(Error::Config("oracle starts and max_iter must be positive".into()));
        }
        if self.eps_schedule.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("eps_schedule entries must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Exact `sum_i p_i T3(psi_i)` of the best decomposition.
    pub value: f64,
    pub params: DecompParams,
    pub terms: Vec<(f64, PureState)>,
    pub start: usize,
    pub iterations: usize,
    /// Exact value of every start, in start order.
    pub start_values: Vec<f64>,
}

struct Objective {
    b: DMatrix<C64>,
}

impl Objective {
    /// Smoothed cost and its Euclidean gradient (real inner product `Re tr X^dag Y`).
    fn value_grad(&self, u: &DMatrix<C64>, eps: f64, grad: Option<&mut DMatrix<C64>>) -> f64 {
        let psi = u * self.b.transpose();
        let (m, dim) = psi.shape();
        let want = grad.is_some();
        let mut gpsi = DMatrix::<C64>::zeros(m, dim);
        let mut total = 0.0;
        let e4 = eps.powi(4);
        for i in 0..m {
            let row: Vec<C64> = psi.row(i).iter().copied().collect();
            let p: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            let d = hyperdeterminant(&row);
            let a = 16.0 * d.norm_sqr() + e4 * p.powi(4);
            if a <= 0.0 {
                continue;
            }
            total += a.powf(0.25) - eps * p;
            if want {
                let dd = hyperdeterminant_grad(&row);
                let s = 0.25 * a.powf(-0.75);
                for k in 0..dim {
                    let da = d * dd[k].conj() * 16.0 + row[k] * (4.0 * e4 * p.powi(3));
                    gpsi[(i, k)] = da * s - row[k] * eps;
                }
            }
        }
        if let Some(g) = grad {
            *g = gpsi * self.b.map(|z| z.conj()) * c(2.0, 0.0);
        }
        total
    }

    fn exact(&self, u: &DMatrix<C64>) -> f64 {
        let psi = u * self.b.transpose();
        (0..psi.nrows())
            .map(|i| {
                let row: Vec<C64> = psi.row(i).iter().copied().collect();
                2.0 * hyperdeterminant(&row).norm().sqrt()
            })
            .sum()
    }
}

fn re_inner(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Tangent projection at `u`: `z - u sym(u^dag z)`.
fn project(u: &DMatrix<C64>, z: &DMatrix<C64>) -> DMatrix<C64> {
    let a = u.adjoint() * z;
    let sym = (&a + a.adjoint()) * c(0.5, 0.0);
    z - u * sym
}

/// Q factor of a full-column-rank matrix, with positive diagonal of R.
fn retract(y: DMatrix<C64>) -> DMatrix<C64> {
    let qr = y.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            let mut col = q.column_mut(j);
            col *= ph;
        }
    }
    q
}

/// Polak-Ribiere conjugate gradients on the Stiefel manifold.
fn rcg(obj: &Objective, mut u: DMatrix<C64>, eps: f64, max_iter: usize, tol: f64) -> (DMatrix<C64>, usize) {
    let mut eg = DMatrix::zeros(u.nrows(), u.ncols());
    let mut f = obj.value_grad(&u, eps, Some(&mut eg));
    let mut g = project(&u, &eg);
    let mut dir = -g.clone();
    let mut step = 0.1;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let gn2 = re_inner(&g, &g);
        if gn2.sqrt() < tol {
            break;
        }
        let mut slope = re_inner(&g, &dir);
        if slope >= 0.0 {
            dir = -g.clone();
            slope = -gn2;
        }
        let mut t = step * 2.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial = retract(&u + &dir * c(t, 0.0));
            let ft = obj.value_grad(&trial, eps, None);
            if ft <= f + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((un, fnew)) = accepted else { break };
        step = t;
        let decrease = f - fnew;
        u = un;
        f = obj.value_grad(&u, eps, Some(&mut eg));
        let gn = project(&u, &eg);
        let gt = project(&u, &g);
        let beta = (re_inner(&gn, &(&gn - &gt)) / gn2).max(0.0);
        dir = project(&u, &dir) * c(beta, 0.0) - &gn;
        g = gn;
        if decrease.abs() < 1e-16 * (1.0 + f.abs()) && beta == 0.0 {
            break;
        }
    }
    (u, it)
}

/// Best upper bound on `T3(rho)` over multi-start local searches.
pub fn convex_roof_upper(rho: &DensityMatrix, cfg: &OracleConfig) -> Result<OracleResult> {
    cfg.validate()?;
    let b = range_factor(rho);
    let n = b.ncols();
    let m = cfg.m.unwrap_or((2 * n).min(n * n).max(n));
    if m < n || m > n * n {
        return Err(Error::Config(format!("m = {m} outside [{n}, {}]", n * n)));
    }
    let obj = Objective { b };
    let runs: Vec<(f64, DMatrix<C64>, usize)> = (0..cfg.starts)
        .into_par_iter()
        .map(|s| -> Result<(f64, DMatrix<C64>, usize)> {
            let start = if s == 0 {
                DecompParams::identity(m, n)?
            } else {
                DecompParams::random(m, n, cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add(s as u64))?
            };
            let mut u = start.u;
            let mut iters = 0;
            for &eps in &cfg.eps_schedule {
                let (un, k) = rcg(&obj, u, eps, cfg.max_iter, cfg.grad_tol);
                u = un;
                iters += k;
            }
            Ok((obj.exact(&u), u, iters))
        })
        .collect::<Result<_>>()?;
    let start_values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let best = (0..runs.len()).min_by(|&a, &b| runs[a].0.total_cmp(&runs[b].0).then(a.cmp(&b))).expect("at least one start");
    let (value, u, iterations) = runs[best].clone();
    let params = DecompParams::new(retract(u))?;
    let terms = decompose(rho, &params)?;
    Ok(OracleResult { value, params, terms, start: best, iterations, start_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::t3_pure;
    use crate::qcore::hs_norm;
    use crate::states::{family_state, ghz, StateFamily};

    #[test]
    fn identity_recovers_eigendecomposition() {
        let rho = family_state(StateFamily::Gwi { p: 0.2, q: 0.1 }).unwrap();
        let d = DecompParams::identity(8, 8).unwrap();
        let terms = decompose(&rho, &d).unwrap();
        assert_eq!(terms.len(), 8);
        let mut ps: Vec<f64> = terms.iter().map(|t| t.0).collect();
        ps.sort_by(f64::total_cmp);
        let mut ev = rho.op().eigenvalues();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ps.iter().zip(&ev) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn random_parameters_reconstruct_rho() {
        let rho = family_state(StateFamily::Gwi { p: 0.3, q: 0.2 }).unwrap();
        for seed in 0..5 {
            let d = DecompParams::random(13, 8, seed).unwrap();
            let terms = decompose(&rho, &d).unwrap();
            let back = reconstruct(&terms).unwrap();
            assert!(hs_norm(&back.sub(rho.op()).unwrap()) < 1e-10);
            let total: f64 = terms.iter().map(|t| t.0).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DecompParams::identity(3, 2).is_ok());
        assert!(DecompParams::identity(5, 2).is_err());
        let rho = family_state(StateFamily::Gw { p: 0.2 }).unwrap();
        assert!(decompose(&rho, &DecompParams::identity(8, 8).unwrap()).is_err());
    }

    #[test]
    fn exact_objective_is_weighted_t3() {
        let rho = family_state(StateFamily::Gwi { p: 0.1, q: 0.3 }).unwrap();
        let d = DecompParams::random(16, 8, 4).unwrap();
        let obj = Objective { b: range_factor(&rho) };
        let direct: f64 = decompose(&rho, &d).unwrap().iter().map(|(p, psi)| p * t3_pure(psi)).sum();
        assert!((obj.exact(d.matrix()) - direct).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let rho = family_state(StateFamily::Gwi { p: 0.1, q: 0.3 }).unwrap();
        let obj = Objective { b: range_factor(&rho) };
        let u = DecompParams::random(10, 8, 9).unwrap().u;
        let mut g = DMatrix::zeros(10, 8);
        obj.value_grad(&u, 1e-2, Some(&mut g));
        let h = 1e-6;
        for (i, j) in [(0, 0), (3, 5), (9, 7)] {
            for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut up = u.clone();
                let mut um = u.clone();
                up[(i, j)] += dir * h;
                um[(i, j)] -= dir * h;
                let fd = (obj.value_grad(&up, 1e-2, None) - obj.value_grad(&um, 1e-2, None)) / (2.0 * h);
                let an = (g[(i, j)].conj() * dir).re;
                assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn pure_state_gives_its_own_value() {
        let rho = DensityMatrix::pure(&ghz());
        let r = convex_roof_upper(&rho, &OracleConfig { starts: 2, ..Default::default() }).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn separable_side_of_gw_reaches_zero() {
        let rho = family_state(StateFamily::Gw { p: 0.5 }).unwrap();
        let r = convex_roof_upper(&rho, &OracleConfig { starts: 6, ..Default::default() }).unwrap();
        assert!(r.value < 1e-4, "{}", r.value);
    }

    #[test]
    fn gi_bound_approaches_from_above() {
        let rho = family_state(StateFamily::Gi { q: 0.15 }).unwrap();
        let r = convex_roof_upper(&rho, &OracleConfig::default()).unwrap();
        let exact = 1.0 - 0.15 / 0.304;
        assert!(r.value > exact - 2e-3 && r.value < exact + 5e-3, "{}", r.value);
    }
}
