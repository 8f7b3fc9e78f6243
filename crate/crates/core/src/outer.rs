//! The outer problem: maximize `G(v) = <v, r> - mu_Pi(v)` over symmetric
//! witness coordinates with `|v_i| <= k_bound`.
//!
//! `G` is concave. Every pure state met along the way contributes a cut
//! `mu_Pi(v) >= <v, q> - T3`, and the cuts define an upper model of `G`.
//! Each iteration maximizes the smoothed model inside a trust region,
//! then evaluates `G` exactly at the trial point with a fresh inner solve.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{explore_pool, solve_inner, Candidate, CandidateSet, InnerConfig};
use crate::optim::{barrier_maximize, ConcaveObjective};
use crate::qcore::{hs_norm, min_eigenvalue, DensityMatrix, HermitianOp, PureState, C64, DIM};
use crate::states::{ghz, w, w_bar, SchmidtParams};
use crate::symmetry::{BasisId, CoordVector, SymBasis};
use crate::verify::dmin_simplex;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingParams {
    pub b: f64,
    /// Factor applied to `b` when progress stalls.
    pub shrink: f64,
    pub floor: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self { b: 1e-3, shrink: 0.3, floor: 1e-8 }
    }
}

impl SmoothingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) || !(self.floor > 0.0) || !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config(format!("invalid smoothing parameters {self:?}")));
        }
        Ok(())
    }
}

/// Two-argument smoothed minimum and its first partials.
#[inline]
fn h2(a: f64, c: f64, b: f64) -> (f64, f64, f64, f64) {
    let d = a - c;
    let s = (b * b + 0.25 * d * d).sqrt();
    let ad = 0.5 * d.abs();
    let value = a.min(c) - b * (b / (s + ad));
    // 1/2 - d/(4s) and 1/2 + d/(4s), written without cancellation
    let small = b * b / (s * (2.0 * s + d.abs()));
    let (ha, hc) = if d > 0.0 { (small, 1.0 - small) } else { (1.0 - small, small) };
    let kappa = b * b / (4.0 * s * s * s);
    (value, ha, hc, kappa)
}

/// Nested smoothed minimum `H(a_1, ..., a_N; b)`.
pub fn smooth_min(alpha: &[f64], b: f64) -> Result<f64> {
    if alpha.is_empty() {
        return Err(Error::Domain("smooth_min of an empty list".into()));
    }
    if !(b > 0.0) {
        return Err(Error::Domain(format!("smoothing parameter must be positive, got {b}")));
    }
    Ok(alpha[1..].iter().fold(alpha[0], |h, &a| h2(h, a, b).0))
}

/// Smoothed model of `G` built from cuts `(q_n, E_n)`.
struct SmoothModel<'a> {
    qs: &'a [Vec<f64>],
    es: &'a [f64],
    r: &'a [f64],
    b: f64,
}

impl SmoothModel<'_> {
    /// Value of `G~`, simplex weights `omega` with `grad G~ = r - Q omega`,
    /// and optionally the Hessian.
    fn eval_full(&self, v: &[f64], hess: Option<&mut DMatrix<f64>>) -> (f64, Vec<f64>) {
        let n = self.qs.len();
        let d = v.len();
        let a = |k: usize| self.es[k] - dot(v, &self.qs[k]);
        let mut h = a(0);
        let mut omega = vec![0.0; n];
        omega[0] = 1.0;
        let want_h = hess.is_some();
        // grad h = -sum omega_k q_k ; track it only when the Hessian is needed
        let mut gh = vec![0.0; if want_h { d } else { 0 }];
        if want_h {
            for i in 0..d {
                gh[i] = -self.qs[0][i];
            }
        }
        let mut hm = DMatrix::<f64>::zeros(if want_h { d } else { 0 }, if want_h { d } else { 0 });
        for k in 1..n {
            let (val, ha, hc, kappa) = h2(h, a(k), self.b);
            for o in omega[..k].iter_mut() {
                *o *= ha;
            }
            omega[k] = hc;
            if want_h {
                hm *= ha;
                // - kappa (grad h - grad c)(...)^T with grad c = -q_k
                let u: Vec<f64> = (0..d).map(|i| gh[i] + self.qs[k][i]).collect();
                for i in 0..d {
                    for j in 0..d {
                        hm[(i, j)] -= kappa * u[i] * u[j];
                    }
                }
                for i in 0..d {
                    gh[i] = ha * gh[i] - hc * self.qs[k][i];
                }
            }
            h = val;
        }
        if let Some(out) = hess {
            out.copy_from(&hm);
        }
        (dot(v, self.r) + h, omega)
    }
}

impl ConcaveObjective for SmoothModel<'_> {
    fn eval(&self, v: &[f64], grad: &mut DVector<f64>, hess: Option<&mut DMatrix<f64>>) -> f64 {
        let (val, omega) = self.eval_full(v, hess);
        for i in 0..v.len() {
            grad[i] = self.r[i] - omega.iter().zip(self.qs).map(|(o, q)| o * q[i]).sum::<f64>();
        }
        val
    }
}

/// `log det Pi(v)`, `-inf` unless `Pi` is positive definite.
struct LogDet<'a> {
    ops: &'a [HermitianOp],
}

impl ConcaveObjective for LogDet<'_> {
    fn eval(&self, v: &[f64], grad: &mut DVector<f64>, hess: Option<&mut DMatrix<f64>>) -> f64 {
        let n = self.ops[0].dim();
        let mut pi = DMatrix::<C64>::zeros(n, n);
        for (a, p) in v.iter().zip(self.ops) {
            pi += p.matrix() * C64::new(*a, 0.0);
        }
        // Complex Cholesky does not reject indefinite input, so use the spectrum.
        let eig = pi.symmetric_eigen();
        if eig.eigenvalues.iter().any(|l| !(*l > 0.0)) {
            return f64::NEG_INFINITY;
        }
        let val: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
        let u = &eig.eigenvectors;
        let inv_l = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l, 0.0)));
        let pinv = u * inv_l * u.adjoint();
        let a: Vec<DMatrix<C64>> = self.ops.iter().map(|p| &pinv * p.matrix()).collect();
        for (i, ai) in a.iter().enumerate() {
            grad[i] = ai.trace().re;
        }
        if let Some(h) = hess {
            for i in 0..a.len() {
                for j in 0..=i {
                    let t = -(a[i].component_mul(&a[j].transpose())).sum().re;
                    h[(i, j)] = t;
                    h[(j, i)] = t;
                }
            }
        }
        val
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cuts_of(set: &CandidateSet) -> (Vec<Vec<f64>>, Vec<f64>) {
    (set.members.iter().map(|c| c.q.0.clone()).collect(), set.members.iter().map(|c| c.t3).collect())
}

/// `G~(v) = <v, r> + H(-mu(v, q_1), ..., -mu(v, q_N); b)` over the set members.
pub fn g_tilde(v: &[f64], set: &CandidateSet, b: f64, r: &[f64]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Domain("empty candidate set".into()));
    }
    let alpha: Vec<f64> = set.members.iter().map(|c| c.t3 - dot(v, &c.q)).collect();
    Ok(dot(v, r) + smooth_min(&alpha, b)?)
}

/// Analytic gradient of [`g_tilde`].
pub fn grad_g_tilde(v: &[f64], set: &CandidateSet, b: f64, r: &[f64]) -> Result<CoordVector> {
    if set.is_empty() {
        return Err(Error::Domain("empty candidate set".into()));
    }
    let (qs, es) = cuts_of(set);
    let model = SmoothModel { qs: &qs, es: &es, r, b };
    let mut g = DVector::zeros(v.len());
    model.eval(v, &mut g, None);
    Ok(CoordVector(g.iter().cloned().collect()))
}

/// Hessian of [`g_tilde`], accumulated through the nesting.
pub fn hessian_g_tilde(v: &[f64], set: &CandidateSet, b: f64, r: &[f64]) -> Result<DMatrix<f64>> {
    if set.is_empty() {
        return Err(Error::Domain("empty candidate set".into()));
    }
    let (qs, es) = cuts_of(set);
    let model = SmoothModel { qs: &qs, es: &es, r, b };
    let mut h = DMatrix::zeros(v.len(), v.len());
    model.eval_full(v, Some(&mut h));
    Ok(h)
}

/// Treatment of the flat direction `vectorize(I)` of `G`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    /// Steps keep `Tr Pi` fixed.
    Traceless,
    /// The box alone bounds the flat direction.
    Free,
    /// `Pi >= 0` is imposed together with the box.
    Psd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuterConfig {
    pub inner: InnerConfig,
    pub smoothing: SmoothingParams,
    /// Bound on coordinates in the published operator convention.
    pub k_bound: f64,
    pub gauge: Gauge,
    pub max_iter: usize,
    /// Stop when the model predicts less than this improvement.
    pub g_tol: f64,
    pub trust_radius: f64,
    /// Largest number of cuts kept.
    pub bundle_cap: usize,
    pub explore: bool,
    /// Starting coordinates (internal convention).
    pub v0: Option<Vec<f64>>,
    #[serde(skip)]
    pub warm_states: Vec<SchmidtParams>,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            inner: InnerConfig::default(),
            smoothing: SmoothingParams::default(),
            k_bound: 1e3,
            gauge: Gauge::Traceless,
            max_iter: 300,
            g_tol: 1e-10,
            trust_radius: 1.0,
            bundle_cap: 400,
            explore: true,
            v0: None,
            warm_states: Vec::new(),
        }
    }
}

impl OuterConfig {
    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        self.smoothing.validate()?;
        for (name, v) in [("k_bound", self.k_bound), ("g_tol", self.g_tol), ("trust_radius", self.trust_radius)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 || self.bundle_cap < 2 {
            return Err(Error::Config("max_iter and bundle_cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessResult {
    pub basis: BasisId,
    /// Coordinates of `Pi` (internal orthonormal convention).
    pub v: CoordVector,
    pub r: CoordVector,
    pub mu_pi: f64,
    /// `<v, r> - mu_Pi`, a lower bound on the measure.
    pub g_value: f64,
    pub candidate_set: CandidateSet,
    pub d_min: f64,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub inner_calls: usize,
    pub converged: bool,
    pub asymptotic: bool,
    pub k_bound: f64,
    pub wall_seconds: f64,
}

impl WitnessResult {
    /// Coordinates of `X = Pi - mu_Pi I`.
    pub fn x_coords(&self, basis: &SymBasis) -> CoordVector {
        self.v.axpy(-self.mu_pi, &basis.identity_coords())
    }

    pub fn witness(&self, basis: &SymBasis) -> Result<HermitianOp> {
        basis.devectorize(&self.x_coords(basis))
    }

    /// `Pi` shifted by `max(0, -lambda_min) I` so that it is positive semidefinite.
    pub fn psd_coords(&self, basis: &SymBasis) -> Result<CoordVector> {
        let pi = basis.devectorize(&self.v)?;
        let shift = (-min_eigenvalue(&pi)).max(0.0);
        Ok(self.v.axpy(shift, &basis.identity_coords()))
    }

    /// Cuts for warm-starting a nearby run.
    pub fn warm_states(&self) -> Vec<SchmidtParams> {
        self.candidate_set.members.iter().map(|c| c.params.clone()).collect()
    }
}

/// One cut: a pure state's `q` and measure value.
#[derive(Clone, Debug)]
struct Cut {
    q: Vec<f64>,
    e: f64,
    params: Option<SchmidtParams>,
}

struct Bundle {
    cuts: Vec<Cut>,
    cap: usize,
}

impl Bundle {
    fn add(&mut self, c: Cut) {
        let dup = self.cuts.iter().any(|o| (o.e - c.e).abs() < 1e-12 && o.q.iter().zip(&c.q).all(|(a, b)| (a - b).abs() < 1e-12));
        if !dup {
            self.cuts.push(c);
        }
    }

    fn add_candidates(&mut self, cs: &[Candidate]) {
        for c in cs {
            self.add(Cut { q: c.q.0.clone(), e: c.t3, params: Some(c.params.clone()) });
        }
    }

    fn max_at(&self, v: &[f64]) -> f64 {
        self.cuts.iter().map(|c| dot(v, &c.q) - c.e).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Drops the cuts that are least active at `v` beyond the cap.
    fn prune(&mut self, v: &[f64]) {
        if self.cuts.len() <= self.cap {
            return;
        }
        self.cuts.sort_by(|a, b| {
            let (fa, fb) = (dot(v, &a.q) - a.e, dot(v, &b.q) - b.e);
            fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal)
        });
        self.cuts.truncate(self.cap);
    }

    /// States of the cuts closest to active at `v`.
    fn warm(&self, v: &[f64], n: usize) -> Vec<SchmidtParams> {
        let mut idx: Vec<(f64, usize)> =
            self.cuts.iter().enumerate().filter(|(_, c)| c.params.is_some()).map(|(i, c)| (dot(v, &c.q) - c.e, i)).collect();
        idx.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        idx.into_iter().take(n).filter_map(|(_, i)| self.cuts[i].params.clone()).collect()
    }

    fn model<'a>(&'a self, r: &'a [f64], b: f64, store: &'a mut (Vec<Vec<f64>>, Vec<f64>)) -> SmoothModel<'a> {
        store.0 = self.cuts.iter().map(|c| c.q.clone()).collect();
        store.1 = self.cuts.iter().map(|c| c.e).collect();
        SmoothModel { qs: &store.0, es: &store.1, r, b }
    }
}

/// Reference pure states seeding the cut model.
fn seed_states() -> Vec<(PureState, f64)> {
    let mut out = vec![(ghz(), 1.0), (w(), 0.0), (w_bar(), 0.0)];
    for idx in [0usize, 7] {
        out.push((PureState::basis(DIM, idx).expect("valid index"), 0.0));
    }
    out
}

struct Evaluation {
    g: f64,
    mu_pi: f64,
}

struct Driver<'a> {
    basis: &'a SymBasis,
    cfg: &'a OuterConfig,
    r: Vec<f64>,
    bundle: Bundle,
    inner_calls: usize,
    seed_counter: u64,
}

impl<'a> Driver<'a> {
    fn new(rho: &DensityMatrix, basis: &'a SymBasis, cfg: &'a OuterConfig) -> Result<Self> {
        let sym_dev = hs_norm(&basis.symmetrize(rho.op())?.sub(rho.op())?);
        if sym_dev > 1e-10 {
            return Err(Error::SymmetryMismatch(sym_dev));
        }
        let r = basis.vectorize(rho.op())?.0;
        let mut drv = Driver { basis, cfg, r, bundle: Bundle { cuts: Vec::new(), cap: cfg.bundle_cap }, inner_calls: 0, seed_counter: 0 };
        for (psi, t3) in seed_states() {
            drv.bundle.add(Cut { q: basis.state_coords(&psi)?.0, e: t3, params: None });
        }
        for s in &cfg.warm_states {
            let psi = crate::states::schmidt_state(s)?;
            drv.bundle.add(Cut { q: basis.state_coords(&psi)?.0, e: crate::measure::t3_schmidt(s), params: Some(s.clone()) });
        }
        Ok(drv)
    }

    fn evaluate(&mut self, v: &[f64]) -> Result<Evaluation> {
        let pi = self.basis.devectorize(v)?;
        let mut inner = self.cfg.inner.clone();
        inner.seed = inner.seed.wrapping_add(self.seed_counter.wrapping_mul(0x2545_f491_4f6c_dd1d));
        self.seed_counter += 1;
        let warm = self.bundle.warm(v, 12);
        let out = solve_inner(&pi, self.basis, &inner, &warm)?;
        self.inner_calls += 1;
        self.bundle.add_candidates(&out.pool);
        let mu_pi = out.set.mu_pi().max(self.bundle.max_at(v));
        Ok(Evaluation { g: dot(v, &self.r) - mu_pi, mu_pi })
    }
}

/// Finds the witness maximizing `G` over the span of `basis`.
pub fn maximize_witness(rho: &DensityMatrix, basis: &SymBasis, cfg: &OuterConfig) -> Result<WitnessResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut drv = Driver::new(rho, basis, cfg)?;
    let d = basis.len();
    let r = drv.r.clone();
    let e = basis.identity_coords().0;
    let hi: Vec<f64> = basis.published_scale().iter().map(|s| cfg.k_bound * s).collect();
    let lo: Vec<f64> = hi.iter().map(|h| -h).collect();
    let margin = 1e-9 * cfg.k_bound;
    let clamp = |v: &mut Vec<f64>| {
        for i in 0..v.len() {
            v[i] = v[i].clamp(lo[i] + margin, hi[i] - margin);
        }
    };

    let mut vc = match &cfg.v0 {
        Some(v0) if v0.len() == d => v0.clone(),
        Some(v0) => return Err(Error::DimensionMismatch { expected: d, found: v0.len() }),
        None => vec![0.0; d],
    };
    match cfg.gauge {
        Gauge::Traceless => {
            let s = dot(&vc, &e) / dot(&e, &e);
            vc.iter_mut().zip(&e).for_each(|(v, ei)| *v -= s * ei);
        }
        Gauge::Psd => {
            let shift = (1.0 - min_eigenvalue(&basis.devectorize(&vc)?)).max(0.0);
            vc.iter_mut().zip(&e).for_each(|(v, ei)| *v += shift * ei);
            if vc.iter().zip(&hi).any(|(v, h)| v.abs() >= *h) {
                return Err(Error::Config("k_bound too small for a positive definite start".into()));
            }
        }
        Gauge::Free => {}
    }
    clamp(&mut vc);
    let mut ev = drv.evaluate(&vc)?;
    let mut b = cfg.smoothing.b;
    let mut delta = cfg.trust_radius;
    let mut iterations = 0;
    let mut converged = false;
    let mut store = (Vec::new(), Vec::new());

    while iterations < cfg.max_iter {
        iterations += 1;
        drv.bundle.prune(&vc);
        let tlo: Vec<f64> = (0..d).map(|i| lo[i].max(vc[i] - delta)).collect();
        let thi: Vec<f64> = (0..d).map(|i| hi[i].min(vc[i] + delta)).collect();
        let model = drv.bundle.model(&r, b, &mut store);
        let mut g0 = DVector::zeros(d);
        let m_center = model.eval(&vc, &mut g0, None);
        let eq = (cfg.gauge == Gauge::Traceless).then_some(e.as_slice());
        let psd = LogDet { ops: basis.ops() };
        let extra = (cfg.gauge == Gauge::Psd).then_some((&psd as &dyn ConcaveObjective, basis.hilbert_dim() as f64));
        let sub = barrier_maximize(&model, &vc, &tlo, &thi, eq, extra, 1e-12 * (1.0 + m_center.abs()));
        let mut vt = sub.v;
        clamp(&mut vt);
        let pred = model.eval(&vt, &mut g0, None) - m_center;
        let step: f64 = vt.iter().zip(&vc).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);

        if pred <= cfg.g_tol || step < 1e-13 * (1.0 + cfg.k_bound) {
            if b > cfg.smoothing.floor {
                b = (b * cfg.smoothing.shrink).max(cfg.smoothing.floor);
                continue;
            }
            converged = true;
            break;
        }
        let et = drv.evaluate(&vt)?;
        let actual = et.g - ev.g;
        if actual > 0.0 {
            let ratio = actual / pred;
            if ratio > 0.5 && step > 0.9 * delta {
                delta *= 2.0;
            } else if ratio < 0.1 {
                delta *= 0.5;
            }
            vc = vt;
            ev = et;
        } else {
            delta = (0.5 * delta).max(1e-12);
            b = (b * cfg.smoothing.shrink).max(cfg.smoothing.floor);
            if delta < 1e-10 && b <= cfg.smoothing.floor {
                converged = true;
                break;
            }
        }
    }

    finish(drv, vc, ev.mu_pi, iterations, converged, &hi, start)
}

const ASSESS_ROUNDS: usize = 4;

/// Exact `G`, tolerance band and certificate of a fixed witness `v`.
pub fn assess_witness(rho: &DensityMatrix, basis: &SymBasis, v: &[f64], cfg: &OuterConfig) -> Result<WitnessResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut drv = Driver::new(rho, basis, cfg)?;
    if v.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), found: v.len() });
    }
    // Without an ascent history the band comes from repeated warm solves.
    let mut mu_pi = f64::NEG_INFINITY;
    for _ in 0..ASSESS_ROUNDS {
        mu_pi = mu_pi.max(drv.evaluate(v)?.mu_pi);
    }
    let hi: Vec<f64> = basis.published_scale().iter().map(|s| cfg.k_bound * s).collect();
    finish(drv, v.to_vec(), mu_pi, 0, true, &hi, start)
}

fn finish(mut drv: Driver<'_>, vc: Vec<f64>, mu_floor: f64, iterations: usize, converged: bool, hi: &[f64], start: Instant) -> Result<WitnessResult> {
    let (basis, cfg, r) = (drv.basis, drv.cfg, drv.r.clone());
    // Final band: polish the near-active cut states at the optimum and explore.
    let pi = basis.devectorize(&vc)?;
    let mut inner = cfg.inner.clone();
    inner.seed = inner.seed.wrapping_add(0x5851_f42d_4c95_7f2d);
    let warm = drv.bundle.warm(&vc, 40);
    let fin = solve_inner(&pi, basis, &inner, &warm)?;
    drv.inner_calls += 1;
    let mut pool = fin.pool;
    // Earlier states are still members of the band if their exact mu at `vc` is within tol.
    pool.extend(drv.bundle.cuts.iter().filter_map(|c| {
        let params = c.params.clone()?;
        Some(Candidate { class: params.class, params, q: CoordVector(c.q.clone()), t3: c.e, mu: dot(&vc, &c.q) - c.e, f_gap: 0.0 })
    }));
    let mut set = CandidateSet::from_pool(pool, inner.tol, inner.dedup_tol)?;
    if cfg.explore {
        let found = explore_pool(&pi, &set, inner.k_explore, basis, &inner)?;
        drv.inner_calls += 1;
        let mut pool = set.members.clone();
        pool.extend(found);
        set = CandidateSet::from_pool(pool, inner.tol, inner.dedup_tol)?;
    }
    let mu_pi = set.mu_pi().max(mu_floor);
    let g_value = dot(&vc, &r) - mu_pi;
    let (d_min, weights) = dmin_simplex(&r, &set.qs())?;
    let asymptotic = vc.iter().zip(hi).any(|(v, h)| v.abs() >= (1.0 - 1e-3) * h);
    Ok(WitnessResult {
        basis: basis.id.clone(),
        v: CoordVector(vc),
        r: CoordVector(r),
        mu_pi,
        g_value,
        candidate_set: set,
        d_min,
        weights,
        iterations,
        inner_calls: drv.inner_calls,
        converged,
        asymptotic,
        k_bound: cfg.k_bound,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Exact `G(v)` with a fresh inner solve.
pub fn g_exact(v: &[f64], rho: &DensityMatrix, basis: &SymBasis, inner: &InnerConfig) -> Result<(f64, CandidateSet)> {
    let pi = basis.devectorize(v)?;
    let r = basis.vectorize(rho.op())?;
    let out = solve_inner(&pi, basis, inner, &[])?;
    Ok((r.dot(v) - out.set.mu_pi(), out.set))
}
