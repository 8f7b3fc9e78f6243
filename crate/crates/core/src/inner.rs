//! The inner problem: maximize `mu(Pi, psi) = <psi|Pi|psi> - T3(psi)` over
//! pure states, split into the GHZ\W and W classes, with parallel
//! multi-start local solvers and a tolerance-banded candidate set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{expect8, mat8, mat8_combination, Chart, Mat8};
use crate::error::{Error, Result};
use crate::measure::t3_pure;
use crate::optim::{bfgs, BfgsOptions};
use crate::qcore::{check_dim, DensityMatrix, HermitianOp, PureState, DIM};
use crate::states::{schmidt_state, EntClass, SchmidtParams};
use crate::symmetry::{CoordVector, SymBasis};

/// One local optimum of the inner problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: SchmidtParams,
    pub q: CoordVector,
    /// Measure value of the pure state.
    pub t3: f64,
    pub mu: f64,
    pub class: EntClass,
    /// `mu_Pi - mu`.
    pub f_gap: f64,
}

impl Candidate {
    pub fn state(&self) -> PureState {
        schmidt_state(&self.params).expect("stored parameters are valid")
    }
}

/// Candidates whose `mu` lies within `tol` of the best one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub best: Candidate,
    /// All admitted candidates, best first.
    pub members: Vec<Candidate>,
    pub tol: f64,
}

impl CandidateSet {
    pub fn mu_pi(&self) -> f64 {
        self.best.mu
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn qs(&self) -> Vec<CoordVector> {
        self.members.iter().map(|c| c.q.clone()).collect()
    }

    /// Builds the band from an arbitrary pool of candidates.
    pub fn from_pool(mut pool: Vec<Candidate>, tol: f64, dedup_tol: f64) -> Result<Self> {
        sort_pool(&mut pool);
        let pool = dedup(pool, dedup_tol);
        let best = pool.first().cloned().ok_or_else(|| Error::InnerFailure("no candidates".into()))?;
        let mut members: Vec<Candidate> = pool.into_iter().filter(|c| best.mu - c.mu <= tol).collect();
        for m in &mut members {
            m.f_gap = (best.mu - m.mu).max(0.0);
        }
        Ok(Self { best: members[0].clone(), members, tol })
    }
}

/// Solver allocation across the two classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSplit {
    pub n_ghz: usize,
    pub n_w: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    pub n_solvers: usize,
    pub class_split: ClassSplit,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Candidate band on `mu_Pi - mu`.
    pub tol: f64,
    /// Candidates closer than this in `(q, T3)` are merged.
    pub dedup_tol: f64,
    pub k_explore: f64,
    pub explore_starts: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            n_solvers: 30,
            class_split: ClassSplit { n_ghz: 15, n_w: 15 },
            seed: 0,
            max_iter: 500,
            grad_tol: 1e-10,
            tol: 1e-6,
            dedup_tol: 1e-6,
            k_explore: 1e3,
            explore_starts: 12,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        let ClassSplit { n_ghz, n_w } = self.class_split;
        if self.n_solvers < 2 || n_ghz == 0 || n_w == 0 || n_ghz + n_w != self.n_solvers {
            return Err(Error::Config(format!(
                "need n_solvers >= 2 split over both classes (n_solvers = {}, n_ghz = {n_ghz}, n_w = {n_w})",
                self.n_solvers
            )));
        }
        for (name, v) in [("grad_tol", self.grad_tol), ("tol", self.tol), ("dedup_tol", self.dedup_tol), ("k_explore", self.k_explore)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Same allocation with a new total, split evenly.
    pub fn with_solvers(mut self, n: usize) -> Self {
        let n = n.max(2);
        self.n_solvers = n;
        self.class_split = ClassSplit { n_ghz: n - n / 2, n_w: n / 2 };
        self
    }

    fn bfgs(&self) -> BfgsOptions {
        BfgsOptions { max_iter: self.max_iter, grad_tol: self.grad_tol }
    }
}

/// `mu(Pi, psi) = <psi|Pi|psi> - T3(psi)`.
pub fn mu(pi: &HermitianOp, psi: &PureState) -> Result<f64> {
    Ok(pi.expectation(psi)? - t3_pure(psi))
}

/// `F(Pi, psi) = Tr((Pi - mu I) rho) = Tr(Pi rho) - mu`.
pub fn f_value(pi: &HermitianOp, psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    Ok(crate::qcore::expval(pi, rho)? - mu(pi, psi)?)
}

/// Precomputed dense data shared by all solvers of one inner call.
pub(crate) struct InnerProblem {
    pi: Mat8,
    ops: Vec<Mat8>,
}

impl InnerProblem {
    pub fn new(pi: &HermitianOp, basis: &SymBasis) -> Result<Self> {
        check_dim(DIM, pi.dim())?;
        check_dim(DIM, basis.hilbert_dim())?;
        Ok(Self { pi: mat8(pi), ops: basis.ops().iter().map(mat8).collect() })
    }

    fn candidate(&self, chart: Chart, x: &[f64]) -> Candidate {
        let e = chart.evaluate(x);
        let t3 = if chart.class == EntClass::Ghz { e.t3() } else { 0.0 };
        let q = CoordVector(self.ops.iter().map(|p| expect8(p, &e.psi)).collect());
        let mu = expect8(&self.pi, &e.psi) - t3;
        Candidate { params: chart.params(x), q, t3, mu, class: chart.class, f_gap: 0.0 }
    }

    /// Local maximization of `mu` from `x0`.
    fn polish(&self, chart: Chart, x0: &[f64], opts: BfgsOptions) -> (Candidate, bool) {
        let f = |x: &[f64], g: &mut [f64]| -> f64 {
            let e = chart.evaluate(x);
            let v = chart.value_grad(x, &e, &self.pi, 1.0, g);
            g.iter_mut().for_each(|gi| *gi = -*gi);
            -v
        };
        let r = bfgs(f, x0, opts);
        let converged = r.converged || r.grad_norm <= 1e-6;
        (self.candidate(chart, &r.x), converged)
    }

    /// Local maximization of `|q - q0| + k (mu - mu0)` followed by a polish.
    fn explore(&self, chart: Chart, x0: &[f64], q0: &[f64], k: f64, opts: BfgsOptions) -> (Candidate, bool) {
        let f = |x: &[f64], g: &mut [f64]| -> f64 {
            let e = chart.evaluate(x);
            let d: Vec<f64> = self.ops.iter().zip(q0).map(|(p, q0i)| expect8(p, &e.psi) - q0i).collect();
            let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dir: Vec<f64> = if n > 1e-12 { d.iter().map(|v| v / n).collect() } else { vec![0.0; d.len()] };
            let mut coeffs = dir;
            coeffs.push(k);
            let mut mats: Vec<Mat8> = self.ops.clone();
            mats.push(self.pi);
            let m = mat8_combination(&coeffs, &mats);
            chart.value_grad(x, &e, &m, k, g);
            g.iter_mut().for_each(|gi| *gi = -*gi);
            let t3 = if chart.class == EntClass::Ghz { e.t3() } else { 0.0 };
            -(n + k * (expect8(&self.pi, &e.psi) - t3))
        };
        let r = bfgs(f, x0, opts);
        self.polish(chart, &r.x, opts)
    }
}

fn sort_pool(pool: &mut [Candidate]) {
    pool.sort_by(|a, b| {
        b.mu.partial_cmp(&a.mu)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.class.cmp(&b.class))
            .then_with(|| a.q.0.partial_cmp(&b.q.0).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Merges candidates that coincide in `(q, T3)`. Since `q` is invariant
/// under the symmetry group, members of one orbit collapse to a single
/// representative.
fn dedup(pool: Vec<Candidate>, tol: f64) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::with_capacity(pool.len());
    for c in pool {
        if !out.iter().any(|o| o.q.distance(&c.q) <= tol && (o.t3 - c.t3).abs() <= tol) {
            out.push(c);
        }
    }
    out
}

fn start_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Every distinct local optimum found, plus the banded set.
pub(crate) struct InnerOutcome {
    pub set: CandidateSet,
    pub pool: Vec<Candidate>,
}

pub(crate) fn solve_inner(pi: &HermitianOp, basis: &SymBasis, cfg: &InnerConfig, warm: &[SchmidtParams]) -> Result<InnerOutcome> {
    cfg.validate()?;
    let prob = InnerProblem::new(pi, basis)?;
    let mut starts: Vec<(Chart, Option<Vec<f64>>)> = warm
        .iter()
        .map(|s| {
            let chart = Chart { class: s.class };
            (chart, Some(chart.coords(s)))
        })
        .collect();
    starts.extend((0..cfg.class_split.n_ghz).map(|_| (Chart::GHZ, None)));
    starts.extend((0..cfg.class_split.n_w).map(|_| (Chart::W, None)));
    let opts = cfg.bfgs();
    let results: Vec<(Candidate, bool)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, (chart, x0))| {
            let x0 = x0.unwrap_or_else(|| chart.random(&mut start_rng(cfg.seed, i as u64)));
            prob.polish(chart, &x0, opts)
        })
        .collect();
    if !results.iter().any(|(_, ok)| *ok) {
        let best = results.iter().map(|(c, _)| c.mu).fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::InnerFailure(format!(
            "none of {} local solvers converged (best mu found {best:.6e})",
            results.len()
        )));
    }
    let mut pool: Vec<Candidate> = results.into_iter().map(|(c, _)| c).collect();
    sort_pool(&mut pool);
    let pool = dedup(pool, cfg.dedup_tol);
    let set = CandidateSet::from_pool(pool.clone(), cfg.tol, cfg.dedup_tol)?;
    Ok(InnerOutcome { set, pool })
}

/// Estimates `mu_Pi = sup_psi mu(Pi, psi)` and the candidate band `R~`.
pub fn inner_minimize(pi: &HermitianOp, basis: &SymBasis, cfg: &InnerConfig) -> Result<CandidateSet> {
    Ok(solve_inner(pi, basis, cfg, &[])?.set)
}

/// As [`inner_minimize`], additionally starting local solvers from `warm`.
pub fn inner_minimize_warm(
    pi: &HermitianOp,
    basis: &SymBasis,
    cfg: &InnerConfig,
    warm: &[SchmidtParams],
) -> Result<CandidateSet> {
    Ok(solve_inner(pi, basis, cfg, warm)?.set)
}

pub(crate) fn explore_pool(
    pi: &HermitianOp,
    set: &CandidateSet,
    k_explore: f64,
    basis: &SymBasis,
    cfg: &InnerConfig,
) -> Result<Vec<Candidate>> {
    let prob = InnerProblem::new(pi, basis)?;
    let q0 = set.best.q.clone();
    let opts = cfg.bfgs();
    let n = cfg.explore_starts.max(2);
    let found: Vec<Candidate> = (0..n)
        .into_par_iter()
        .map(|i| {
            let chart = if i % 2 == 0 { Chart::W } else { Chart::GHZ };
            let x0 = chart.random(&mut start_rng(cfg.seed ^ 0x9e37_79b9_7f4a_7c15, i as u64));
            prob.explore(chart, &x0, &q0, k_explore, opts).0
        })
        .collect();
    Ok(found)
}

/// Penalized-distance search for optima far from the current best; new
/// states within `tol` are admitted and a strictly better one replaces the best.
pub fn explore_candidates(
    pi: &HermitianOp,
    set: &CandidateSet,
    k_explore: f64,
    basis: &SymBasis,
    cfg: &InnerConfig,
) -> Result<CandidateSet> {
    let found = explore_pool(pi, set, k_explore, basis, cfg)?;
    let mut pool = set.members.clone();
    pool.extend(found);
    CandidateSet::from_pool(pool, set.tol, cfg.dedup_tol)
}
