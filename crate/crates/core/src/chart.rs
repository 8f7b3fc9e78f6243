//! Smooth unconstrained chart over generalized Schmidt parameters, with an
//! allocation-free evaluation of `<psi|M|psi> - w T3` and its gradient.
//!
//! Coordinates `x` map to `lambda_i = x_i^2 / sqrt(sum_j x_j^4)`, which keeps
//! the coefficients nonnegative and normalized without constraints. GHZ
//! layout: 5 radial, `phi`, 9 angles. W layout: 4 radial, 9 angles.

use nalgebra::Matrix2;
use rand::Rng;

use crate::qcore::{c, cis, HermitianOp, C64, DIM};
use crate::states::{su2, su2_derivatives, EntClass, SchmidtParams, SCHMIDT_INDEX};

pub(crate) type Mat8 = [[C64; DIM]; DIM];

pub(crate) fn mat8(op: &HermitianOp) -> Mat8 {
    let m = op.matrix();
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

pub(crate) fn mat8_combination(coeffs: &[f64], ops: &[Mat8]) -> Mat8 {
    let mut out = [[c(0.0, 0.0); DIM]; DIM];
    for (a, m) in coeffs.iter().zip(ops) {
        for i in 0..DIM {
            for j in 0..DIM {
                out[i][j] += m[i][j] * *a;
            }
        }
    }
    out
}

pub(crate) fn expect8(m: &Mat8, psi: &[C64; DIM]) -> f64 {
    let mut acc = 0.0;
    for i in 0..DIM {
        let mut row = c(0.0, 0.0);
        for j in 0..DIM {
            row += m[i][j] * psi[j];
        }
        acc += (psi[i].conj() * row).re;
    }
    acc
}

#[inline]
fn apply_local(a: &Matrix2<C64>, qubit: usize, v: &[C64; DIM]) -> [C64; DIM] {
    let bit = 1usize << (2 - qubit);
    let mut out = [c(0.0, 0.0); DIM];
    for i0 in 0..DIM {
        if i0 & bit != 0 {
            continue;
        }
        let i1 = i0 | bit;
        out[i0] = a[(0, 0)] * v[i0] + a[(0, 1)] * v[i1];
        out[i1] = a[(1, 0)] * v[i0] + a[(1, 1)] * v[i1];
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Chart {
    pub class: EntClass,
}

/// Intermediate quantities of one chart evaluation.
pub(crate) struct Eval {
    pub psi: [C64; DIM],
    pub lambda: [f64; 5],
    sqrt_n: f64,
    phi: f64,
    us: [Matrix2<C64>; 3],
    angles: [f64; 9],
}

impl Eval {
    pub fn t3(&self) -> f64 {
        2.0 * self.lambda[0] * self.lambda[4]
    }
}

impl Chart {
    pub const GHZ: Chart = Chart { class: EntClass::Ghz };
    pub const W: Chart = Chart { class: EntClass::W };

    pub fn n_radial(&self) -> usize {
        match self.class {
            EntClass::Ghz => 5,
            EntClass::W => 4,
        }
    }

    pub fn nparams(&self) -> usize {
        match self.class {
            EntClass::Ghz => 15,
            EntClass::W => 13,
        }
    }

    fn angle_offset(&self) -> usize {
        match self.class {
            EntClass::Ghz => 6,
            EntClass::W => 4,
        }
    }

    fn lambda(&self, x: &[f64]) -> ([f64; 5], f64) {
        let nr = self.n_radial();
        let n: f64 = x[..nr].iter().map(|v| v.powi(4)).sum();
        let sqrt_n = n.sqrt().max(1e-300);
        let mut l = [0.0; 5];
        for i in 0..nr {
            l[i] = x[i] * x[i] / sqrt_n;
        }
        (l, sqrt_n)
    }

    pub fn evaluate(&self, x: &[f64]) -> Eval {
        let (lambda, sqrt_n) = self.lambda(x);
        let phi = if self.class == EntClass::Ghz { x[5] } else { 0.0 };
        let off = self.angle_offset();
        let angles: [f64; 9] = std::array::from_fn(|k| x[off + k]);
        let us = [
            su2([angles[0], angles[1], angles[2]]),
            su2([angles[3], angles[4], angles[5]]),
            su2([angles[6], angles[7], angles[8]]),
        ];
        let mut psi = [c(0.0, 0.0); DIM];
        for (k, &idx) in SCHMIDT_INDEX.iter().enumerate() {
            psi[idx] = c(lambda[k], 0.0);
        }
        psi[4] = cis(phi) * lambda[1];
        for (q, u) in us.iter().enumerate() {
            psi = apply_local(u, q, &psi);
        }
        Eval { psi, lambda, sqrt_n, phi, us, angles }
    }

    /// `<psi|M|psi> - w T3(psi)`, with the gradient written into `grad`.
    pub fn value_grad(&self, x: &[f64], e: &Eval, m: &Mat8, w: f64, grad: &mut [f64]) -> f64 {
        let mut mpsi = [c(0.0, 0.0); DIM];
        for i in 0..DIM {
            let mut acc = c(0.0, 0.0);
            for j in 0..DIM {
                acc += m[i][j] * e.psi[j];
            }
            mpsi[i] = acc;
        }
        let quad: f64 = (0..DIM).map(|i| (e.psi[i].conj() * mpsi[i]).re).sum();
        let ghz = self.class == EntClass::Ghz;
        let t3 = if ghz { e.t3() } else { 0.0 };

        let mut chi = mpsi;
        for (q, u) in e.us.iter().enumerate() {
            chi = apply_local(&u.adjoint(), q, &chi);
        }
        let nr = self.n_radial();
        let mut gl = [0.0; 5];
        for k in 0..nr {
            let idx = SCHMIDT_INDEX[k];
            let ph = if k == 1 { cis(e.phi) } else { c(1.0, 0.0) };
            gl[k] = 2.0 * (chi[idx].conj() * ph).re;
        }
        if ghz {
            gl[0] -= w * 2.0 * e.lambda[4];
            gl[4] -= w * 2.0 * e.lambda[0];
            grad[5] = 2.0 * (chi[4].conj() * c(0.0, e.lambda[1]) * cis(e.phi)).re;
        }
        let s: f64 = (0..nr).map(|k| e.lambda[k] * gl[k]).sum();
        for i in 0..nr {
            grad[i] = 2.0 * x[i] / e.sqrt_n * (gl[i] - e.lambda[i] * s);
        }
        let off = self.angle_offset();
        for q in 0..3 {
            let d = su2_derivatives([e.angles[3 * q], e.angles[3 * q + 1], e.angles[3 * q + 2]]);
            let uadj = e.us[q].adjoint();
            for (a, da) in d.iter().enumerate() {
                let dpsi = apply_local(&(da * uadj), q, &e.psi);
                let g: f64 = (0..DIM).map(|i| (mpsi[i].conj() * dpsi[i]).re).sum();
                grad[off + 3 * q + a] = 2.0 * g;
            }
        }
        quad - w * t3
    }

    pub fn params(&self, x: &[f64]) -> SchmidtParams {
        let (lambda, _) = self.lambda(x);
        let off = self.angle_offset();
        let lu: [f64; 9] = std::array::from_fn(|k| x[off + k]);
        match self.class {
            EntClass::Ghz => SchmidtParams { lambda, phi: x[5].rem_euclid(2.0 * std::f64::consts::PI), lu, class: EntClass::Ghz },
            EntClass::W => SchmidtParams { lambda, phi: 0.0, lu, class: EntClass::W },
        }
    }

    /// Chart coordinates reproducing `s` (requires matching class).
    pub fn coords(&self, s: &SchmidtParams) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.nparams());
        for k in 0..self.n_radial() {
            x.push(s.lambda[k].max(0.0).sqrt());
        }
        if self.class == EntClass::Ghz {
            x.push(s.phi);
        }
        x.extend_from_slice(&s.lu);
        x
    }

    /// Random start: `lambda` from normalized |Gaussian|, uniform phase and angles.
    pub fn random<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.nparams());
        for _ in 0..self.n_radial() {
            let g: f64 = rng.sample(rand_distr::StandardNormal);
            x.push(g.abs().sqrt().max(1e-3));
        }
        let tau = 2.0 * std::f64::consts::PI;
        if self.class == EntClass::Ghz {
            x.push(rng.random_range(0.0..tau));
        }
        for _ in 0..9 {
            x.push(rng.random_range(0.0..tau));
        }
        x
    }
}
