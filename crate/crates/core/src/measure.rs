//! Three-tangle and the extensive three-tangle `T3 = sqrt(tau3)` of pure states.

use crate::qcore::{PureState, C64, DIM};
use crate::states::{EntClass, SchmidtParams};

/// Monomials of the Cayley hyperdeterminant `d1 - 2 d2 + 4 d3` over
/// amplitudes indexed `4i + 2j + k`.
const HYPERDET_TERMS: [(f64, [usize; 4]); 12] = [
    // d1
    (1.0, [0, 0, 7, 7]),
    (1.0, [1, 1, 6, 6]),
    (1.0, [2, 2, 5, 5]),
    (1.0, [4, 4, 3, 3]),
    // -2 d2
    (-2.0, [0, 7, 3, 4]),
    (-2.0, [0, 7, 5, 2]),
    (-2.0, [0, 7, 6, 1]),
    (-2.0, [3, 4, 5, 2]),
    (-2.0, [3, 4, 6, 1]),
    (-2.0, [5, 2, 6, 1]),
    // 4 d3
    (4.0, [0, 6, 5, 3]),
    (4.0, [7, 1, 2, 4]),
];

/// Cayley hyperdeterminant of an (unnormalized) amplitude array.
pub fn hyperdeterminant(t: &[C64]) -> C64 {
    debug_assert_eq!(t.len(), DIM);
    HYPERDET_TERMS
        .iter()
        .map(|(cf, [a, b, c, d])| t[*a] * t[*b] * t[*c] * t[*d] * *cf)
        .sum()
}

/// Holomorphic gradient `dD / dt_k` of the hyperdeterminant.
pub fn hyperdeterminant_grad(t: &[C64]) -> [C64; DIM] {
    let mut g = [C64::new(0.0, 0.0); DIM];
    for (cf, idx) in HYPERDET_TERMS.iter() {
        for p in 0..4 {
            let mut prod = C64::new(*cf, 0.0);
            for (q, &i) in idx.iter().enumerate() {
                if q != p {
                    prod *= t[i];
                }
            }
            g[idx[p]] += prod;
        }
    }
    g
}

/// `tau3 = 4 |Det|`.
pub fn tau3(psi: &PureState) -> f64 {
    4.0 * hyperdeterminant(psi.amp()).norm()
}

/// `T3 = sqrt(tau3)`.
pub fn t3_pure(psi: &PureState) -> f64 {
    tau3(psi).sqrt()
}

/// Closed form `2 l0 l4` in the generalized Schmidt gauge; zero for the W class.
pub fn t3_schmidt(s: &SchmidtParams) -> f64 {
    match s.class {
        EntClass::W => 0.0,
        EntClass::Ghz => 2.0 * s.lambda[0] * s.lambda[4],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{c, kron3, qubit_permutation};
    use crate::states::{ghz, schmidt_state, su2, w};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng) -> PureState {
        PureState::normalized((0..DIM).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
            .unwrap()
    }

    #[test]
    fn ghz_and_w() {
        assert!((tau3(&ghz()) - 1.0).abs() < 1e-14);
        assert!(tau3(&w()).abs() < 1e-15);
        assert!((t3_pure(&ghz()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn r_state_closed_form() {
        for r in [0.1, 0.25, 0.5, 0.9] {
            let psi = crate::states::r_state(r).unwrap();
            assert!((t3_pure(&psi) - 2.0 * (r * (1.0 - r)).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn product_states_vanish() {
        let mut v = vec![c(0.0, 0.0); DIM];
        // (|0>+|1>)/sqrt2 ⊗ |0> ⊗ |1>
        v[1] = c(1.0, 0.0);
        v[5] = c(1.0, 0.0);
        let psi = PureState::normalized(v).unwrap();
        assert!(t3_pure(&psi) < 1e-15);
    }

    #[test]
    fn lu_and_permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let perms = [[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];
        for _ in 0..200 {
            let psi = random_state(&mut rng);
            let t = tau3(&psi);
            let mut ang = || [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let k = kron3(&su2(ang()), &su2(ang()), &su2(ang())).unwrap();
            assert!((tau3(&psi.apply(&k).unwrap()) - t).abs() < 1e-12);
            for p in perms {
                assert!((tau3(&psi.apply(&qubit_permutation(p)).unwrap()) - t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schmidt_closed_form_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut l: [f64; 5] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
            let n = l.iter().map(|x| x * x).sum::<f64>().sqrt();
            l.iter_mut().for_each(|x| *x /= n);
            let lu: [f64; 9] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let s = SchmidtParams { lambda: l, phi: rng.random_range(0.0..6.28), lu, class: EntClass::Ghz };
            let psi = schmidt_state(&s).unwrap();
            assert!((t3_schmidt(&s) - t3_pure(&psi)).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t: Vec<C64> = (0..DIM).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let g = hyperdeterminant_grad(&t);
        let h = 1e-6;
        for k in 0..DIM {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[k] += c(h, 0.0);
            tm[k] -= c(h, 0.0);
            let fd = (hyperdeterminant(&tp) - hyperdeterminant(&tm)) / c(2.0 * h, 0.0);
            assert!((fd - g[k]).norm() < 1e-8);
        }
    }
}
