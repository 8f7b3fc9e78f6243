mod common;

use common::*;
use proptest::prelude::*;

use tritangle::inner::CandidateSet;
use tritangle::measure::{tau3};
use tritangle::oracle::{decompose, reconstruct, DecompParams};
use tritangle::outer::{g_tilde, smooth_min};
use tritangle::qcore::{hs_inner, hs_norm, kron3, qubit_permutation, DensityMatrix, PureState, C64};
use tritangle::states::{family_state, schmidt_state, EntClass, StateFamily};
use tritangle::symmetry::{gi_basis, gw_basis, CoordVector};
use tritangle::verify::dmin_simplex;

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// `G(v)` over a frozen candidate set.
fn g_frozen(v: &[f64], set: &CandidateSet, r: &[f64]) -> f64 {
    let mu = set.members.iter().map(|c| c.q.dot(v) - c.t3).fold(f64::NEG_INFINITY, f64::max);
    CoordVector(r.to_vec()).dot(v) - mu
}

fn coords(seed: u64, n: usize, scale: f64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| scale * gauss(&mut r)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_schwarz(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_hermitian(&mut r, 8), random_hermitian(&mut r, 8));
        prop_assert!(hs_inner(&a, &b).unwrap().abs() <= hs_norm(&a) * hs_norm(&b) * (1.0 + 1e-12));
    }

    #[test]
    fn hs_inner_unitary_invariance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_hermitian(&mut r, 8), random_hermitian(&mut r, 8));
        let u = random_unitary(&mut r, 8);
        let lhs = hs_inner(&a.conjugate_by(&u).unwrap(), &b.conjugate_by(&u).unwrap()).unwrap();
        prop_assert!((lhs - hs_inner(&a, &b).unwrap()).abs() < 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn kron_distributes_over_products(seed in any::<u64>()) {
        let mut r = rng(seed);
        let us = [random_su2(&mut r), random_su2(&mut r), random_su2(&mut r)];
        let xs: Vec<PureState> = (0..3).map(|_| random_state(&mut r, 2)).collect();
        let k = kron3(&us[0], &us[1], &us[2]).unwrap();
        let prod = kron_vec(&kron_vec(xs[0].amp(), xs[1].amp()), xs[2].amp());
        let lhs = &k * nalgebra::DVector::from_vec(prod);
        let ux: Vec<Vec<C64>> = (0..3).map(|i| (us[i] * nalgebra::Vector2::from_column_slice(xs[i].amp())).as_slice().to_vec()).collect();
        let rhs = kron_vec(&kron_vec(&ux[0], &ux[1]), &ux[2]);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn tau3_lu_and_permutation_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let psi = random_state(&mut r, 8);
        let t = tau3(&psi);
        let k = kron3(&random_su2(&mut r), &random_su2(&mut r), &random_su2(&mut r)).unwrap();
        prop_assert!((tau3(&psi.apply(&k).unwrap()) - t).abs() < 1e-9);
        for perm in [[1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0]] {
            prop_assert!((tau3(&psi.apply(&qubit_permutation(perm)).unwrap()) - t).abs() < 1e-9);
        }
    }

    #[test]
    fn tau3_matches_schmidt_gauge(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_schmidt(&mut r, EntClass::Ghz);
        let psi = schmidt_state(&s).unwrap();
        let closed = 4.0 * s.lambda[0].powi(2) * s.lambda[4].powi(2);
        prop_assert!((tau3(&psi) - closed).abs() < 1e-9);
        let w = random_schmidt(&mut r, EntClass::W);
        prop_assert!(tau3(&schmidt_state(&w).unwrap()) < 1e-12);
    }

    #[test]
    fn families_are_affine(p1 in 0.0..0.5f64, q1 in 0.0..0.5f64, p2 in 0.0..0.5f64, q2 in 0.0..0.5f64, t in 0.0..1.0f64) {
        let a = family_state(StateFamily::Gwi { p: p1, q: q1 }).unwrap();
        let b = family_state(StateFamily::Gwi { p: p2, q: q2 }).unwrap();
        let m = family_state(StateFamily::Gwi { p: t * p1 + (1.0 - t) * p2, q: t * q1 + (1.0 - t) * q2 }).unwrap();
        let mix = a.op().scale(t).axpy(1.0 - t, b.op()).unwrap();
        prop_assert!(hs_norm(&mix.sub(m.op()).unwrap()) < 1e-13);
    }

    #[test]
    fn family_ranks(p in 0.01..0.49f64, q in 0.01..0.49f64) {
        prop_assert_eq!(family_state(StateFamily::Gw { p }).unwrap().rank(1e-10), 2);
        prop_assert_eq!(family_state(StateFamily::Gi { q }).unwrap().rank(1e-10), 8);
        prop_assert_eq!(family_state(StateFamily::Gwi { p, q }).unwrap().rank(1e-10), 8);
    }

    #[test]
    fn symmetrize_is_a_projector_and_vectorize_an_isometry(seed in any::<u64>()) {
        let mut r = rng(seed);
        for basis in [gi_basis(), gw_basis()] {
            let a = random_hermitian(&mut r, 8);
            let b = random_hermitian(&mut r, 8);
            let sa = basis.symmetrize(&a).unwrap();
            let sb = basis.symmetrize(&b).unwrap();
            prop_assert!(hs_norm(&basis.symmetrize(&sa).unwrap().sub(&sa).unwrap()) < 1e-10);
            // self-adjoint: <S a, b> = <a, S b>
            prop_assert!((hs_inner(&sa, &b).unwrap() - hs_inner(&a, &sb).unwrap()).abs() < 1e-9);
            prop_assert!(basis.group().invariance_deviation(&sa).unwrap() < 1e-9);
            let (va, vb) = (basis.vectorize(&sa).unwrap(), basis.vectorize(&sb).unwrap());
            prop_assert!((va.dot(&vb) - hs_inner(&sa, &sb).unwrap()).abs() < 1e-9);
            prop_assert!(hs_norm(&basis.devectorize(&va).unwrap().sub(&sa).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn gauge_invariance(seed in any::<u64>(), c in -50.0..50.0f64) {
        let basis = gw_basis();
        let set = frozen_set(&basis, seed, 6);
        let rho = family_state(StateFamily::Gwi { p: 0.2, q: 0.1 }).unwrap();
        let r = basis.vectorize(rho.op()).unwrap().0;
        let v = coords(seed ^ 1, basis.len(), 2.0);
        let shifted = CoordVector(v.clone()).axpy(c, &basis.identity_coords()).0;
        prop_assert!((g_frozen(&v, &set, &r) - g_frozen(&shifted, &set, &r)).abs() < 1e-10 * (1.0 + c.abs()));
    }

    #[test]
    fn smoothing_bias_is_bounded(seed in any::<u64>(), b in 1e-6..1e-1f64) {
        let basis = gi_basis();
        let n = 5;
        let set = frozen_set(&basis, seed, n);
        let rho = family_state(StateFamily::Gi { q: 0.2 }).unwrap();
        let r = basis.vectorize(rho.op()).unwrap().0;
        let v = coords(seed ^ 2, basis.len(), 1.0);
        let bias = g_frozen(&v, &set, &r) - g_tilde(&v, &set, b, &r).unwrap();
        prop_assert!(bias >= -1e-12 && bias <= (n - 1) as f64 * b + 1e-12, "bias {bias}");
    }

    #[test]
    fn smooth_min_bounds_and_shift(xs in prop::collection::vec(-10.0..10.0f64, 1..8), b in 1e-4..1.0f64, c in -5.0..5.0f64) {
        let h = smooth_min(&xs, b).unwrap();
        let m = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(h <= m + 1e-12);
        prop_assert!(h >= m - (xs.len() - 1) as f64 * b - 1e-9);
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        prop_assert!((smooth_min(&shifted, b).unwrap() - (h + c)).abs() < 1e-12 * (1.0 + h.abs() + c.abs()) * 10.0);
    }

    #[test]
    fn dmin_matches_exhaustive_search(seed in any::<u64>(), n in 1usize..6, dim in 2usize..4) {
        let mut g = rng(seed);
        let qs: Vec<CoordVector> = (0..n).map(|_| CoordVector((0..dim).map(|_| gauss(&mut g)).collect())).collect();
        let r: Vec<f64> = (0..dim).map(|_| gauss(&mut g)).collect();
        let (d, w) = dmin_simplex(&r, &qs).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12 && w.iter().all(|&x| x >= -1e-15));
        prop_assert!(exhaustive_min_distance(&r, &qs) >= d - 1e-10);
        prop_assert!((exhaustive_min_distance(&r, &qs) - d).abs() < 1e-10);
    }

    #[test]
    fn decompositions_reconstruct(seed in any::<u64>(), extra in 0usize..8) {
        let rho = family_state(StateFamily::Gwi { p: 0.2, q: 0.1 }).unwrap();
        let d = DecompParams::random(8 + extra, 8, seed).unwrap();
        let terms = decompose(&rho, &d).unwrap();
        let w: f64 = terms.iter().map(|t| t.0).sum();
        prop_assert!((w - 1.0).abs() < 1e-12);
        prop_assert!(hs_norm(&reconstruct(&terms).unwrap().sub(rho.op()).unwrap()) < 1e-10);
    }
}

#[test]
fn pure_state_density_is_rank_one() {
    let mut r = rng(3);
    let psi = random_state(&mut r, 8);
    assert_eq!(DensityMatrix::pure(&psi).rank(1e-10), 1);
}
