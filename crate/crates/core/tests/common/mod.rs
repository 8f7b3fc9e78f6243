#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tritangle::inner::{Candidate, CandidateSet};
use tritangle::measure::t3_schmidt;
use tritangle::qcore::{HermitianOp, PureState, C64};
use tritangle::states::{schmidt_state, EntClass, SchmidtParams};
use tritangle::symmetry::{CoordVector, SymBasis};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn random_state(r: &mut ChaCha8Rng, dim: usize) -> PureState {
    PureState::normalized((0..dim).map(|_| C64::new(gauss(r), gauss(r))).collect()).unwrap()
}

pub fn random_hermitian(r: &mut ChaCha8Rng, dim: usize) -> HermitianOp {
    let a = nalgebra::DMatrix::from_fn(dim, dim, |_, _| C64::new(gauss(r), gauss(r)));
    HermitianOp::new((&a + a.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

pub fn random_unitary(r: &mut ChaCha8Rng, dim: usize) -> nalgebra::DMatrix<C64> {
    let a = nalgebra::DMatrix::from_fn(dim, dim, |_, _| C64::new(gauss(r), gauss(r)));
    a.qr().q()
}

pub fn random_su2(r: &mut ChaCha8Rng) -> nalgebra::Matrix2<C64> {
    tritangle::states::su2([r.random_range(0.0..6.3), r.random_range(0.0..3.2), r.random_range(0.0..6.3)])
}

pub fn random_schmidt(r: &mut ChaCha8Rng, class: EntClass) -> SchmidtParams {
    let mut lambda = [0.0; 5];
    let n = if class == EntClass::W { 4 } else { 5 };
    for l in lambda.iter_mut().take(n) {
        *l = gauss(r).abs();
    }
    let s = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
    lambda.iter_mut().for_each(|l| *l /= s);
    let phi = if class == EntClass::W { 0.0 } else { r.random_range(0.0..std::f64::consts::TAU) };
    let mut lu = [0.0; 9];
    lu.iter_mut().for_each(|a| *a = r.random_range(0.0..std::f64::consts::TAU));
    SchmidtParams { lambda, phi, lu, class }
}

/// Candidate set of random pure states, alternating classes.
pub fn frozen_set(basis: &SymBasis, seed: u64, n: usize) -> CandidateSet {
    let mut r = rng(seed);
    let members: Vec<Candidate> = (0..n)
        .map(|i| {
            let class = if i % 2 == 0 { EntClass::Ghz } else { EntClass::W };
            let params = random_schmidt(&mut r, class);
            let psi = schmidt_state(&params).unwrap();
            Candidate { class, q: basis.state_coords(&psi).unwrap(), t3: t3_schmidt(&params), mu: 0.0, f_gap: 0.0, params }
        })
        .collect();
    CandidateSet { best: members[0].clone(), members, tol: 1e-6 }
}

/// Minimum over every affine face spanned by at most `dim + 1` points of
/// the unconstrained projection, kept only when its weights are feasible.
pub fn exhaustive_min_distance(r: &[f64], qs: &[CoordVector]) -> f64 {
    let n = qs.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if idx.len() > r.len() + 1 {
            continue;
        }
        // minimize |q_0 + sum_k t_k (q_k - q_0) - r| and recover weights
        let q0 = &qs[idx[0]].0;
        let m = idx.len() - 1;
        let a = nalgebra::DMatrix::from_fn(r.len(), m, |i, k| qs[idx[k + 1]].0[i] - q0[i]);
        let rhs = nalgebra::DVector::from_fn(r.len(), |i, _| r[i] - q0[i]);
        let t = if m == 0 {
            nalgebra::DVector::zeros(0)
        } else {
            match (a.transpose() * &a).try_inverse() {
                Some(inv) => inv * a.transpose() * &rhs,
                None => continue,
            }
        };
        let w0 = 1.0 - t.sum();
        if w0 < -1e-12 || t.iter().any(|&x| x < -1e-12) {
            continue;
        }
        let res = if m == 0 { rhs.norm() } else { (&a * &t - &rhs).norm() };
        best = best.min(res);
    }
    best
}
