//! Canonical three-qubit states, the GHZ/W/white-noise mixture families and
//! the generalized Schmidt parametrization of pure states.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{c, cis, kron3_unchecked, projector, DensityMatrix, HermitianOp, PureState, C64, DIM};

/// Entanglement class used to split the pure-state domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntClass {
    /// States with nonvanishing three-tangle.
    #[serde(rename = "ghz")]
    Ghz,
    /// States with vanishing three-tangle (`lambda4 = phi = 0`).
    #[serde(rename = "w")]
    W,
}

impl fmt::Display for EntClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntClass::Ghz => write!(f, "GHZ\\W"),
            EntClass::W => write!(f, "W"),
        }
    }
}

/// `|GHZ> = (|000> + |111>)/sqrt 2`.
pub fn ghz() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![c(0.0, 0.0); DIM];
    v[0] = c(s, 0.0);
    v[7] = c(s, 0.0);
    PureState::normalized(v).expect("nonzero")
}

/// `|W> = (|100> + |010> + |001>)/sqrt 3`.
pub fn w() -> PureState {
    let s = 1.0 / 3f64.sqrt();
    let mut v = vec![c(0.0, 0.0); DIM];
    v[4] = c(s, 0.0);
    v[2] = c(s, 0.0);
    v[1] = c(s, 0.0);
    PureState::normalized(v).expect("nonzero")
}

/// The spin-flipped W state `(|011> + |101> + |110>)/sqrt 3`.
pub fn w_bar() -> PureState {
    let s = 1.0 / 3f64.sqrt();
    let mut v = vec![c(0.0, 0.0); DIM];
    v[3] = c(s, 0.0);
    v[5] = c(s, 0.0);
    v[6] = c(s, 0.0);
    PureState::normalized(v).expect("nonzero")
}

/// `sqrt(1-r)|000> + sqrt(r)|111>`.
pub fn r_state(r: f64) -> Result<PureState> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} outside [0, 1]")));
    }
    let mut v = vec![c(0.0, 0.0); DIM];
    v[0] = c((1.0 - r).sqrt(), 0.0);
    v[7] = c(r.sqrt(), 0.0);
    PureState::normalized(v)
}

/// Mixed-state families built from GHZ, W and white noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum StateFamily {
    /// `(1-q) GHZ + q I/8`.
    Gi { q: f64 },
    /// `(1-p) GHZ + p W`.
    Gw { p: f64 },
    /// `(1-p-q) GHZ + p W + q I/8`.
    Gwi { p: f64, q: f64 },
}

impl StateFamily {
    /// `(p, q)` weights of W and white noise.
    pub fn weights(&self) -> (f64, f64) {
        match *self {
            StateFamily::Gi { q } => (0.0, q),
            StateFamily::Gw { p } => (p, 0.0),
            StateFamily::Gwi { p, q } => (p, q),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            StateFamily::Gi { .. } => "gi",
            StateFamily::Gw { .. } => "gw",
            StateFamily::Gwi { .. } => "gwi",
        }
    }
}

/// Density matrix of a family member.
pub fn family_state(f: StateFamily) -> Result<DensityMatrix> {
    let (p, q) = f.weights();
    let valid = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
    if !valid(p) || !valid(q) || p + q > 1.0 + 1e-15 {
        return Err(Error::Domain(format!("weights p = {p}, q = {q} outside the simplex")));
    }
    let g = 1.0 - p - q;
    let op = projector(&ghz())
        .scale(g)
        .axpy(p, &projector(&w()))?
        .axpy(q / DIM as f64, &HermitianOp::identity(DIM))?;
    DensityMatrix::new(op)
}

/// ZYZ Euler-angle element of SU(2): `Rz(a) Ry(b) Rz(c)`.
pub fn su2(angles: [f64; 3]) -> Matrix2<C64> {
    let [a, b, cc] = angles;
    let (cb, sb) = ((b / 2.0).cos(), (b / 2.0).sin());
    Matrix2::new(
        cis(-(a + cc) / 2.0) * cb,
        -cis(-(a - cc) / 2.0) * sb,
        cis((a - cc) / 2.0) * sb,
        cis((a + cc) / 2.0) * cb,
    )
}

/// Derivatives of [`su2`] with respect to each of its three angles.
pub(crate) fn su2_derivatives(angles: [f64; 3]) -> [Matrix2<C64>; 3] {
    let [a, b, cc] = angles;
    let (cb, sb) = ((b / 2.0).cos(), (b / 2.0).sin());
    let u = su2(angles);
    let mi = c(0.0, -0.5);
    let pi = c(0.0, 0.5);
    let da = Matrix2::new(u[(0, 0)] * mi, u[(0, 1)] * mi, u[(1, 0)] * pi, u[(1, 1)] * pi);
    let dc = Matrix2::new(u[(0, 0)] * mi, u[(0, 1)] * pi, u[(1, 0)] * mi, u[(1, 1)] * pi);
    let db = Matrix2::new(
        cis(-(a + cc) / 2.0) * (-sb / 2.0),
        -cis(-(a - cc) / 2.0) * (cb / 2.0),
        cis((a - cc) / 2.0) * (cb / 2.0),
        cis((a + cc) / 2.0) * (-sb / 2.0),
    );
    [da, db, dc]
}

/// Generalized Schmidt parameters
/// `U1⊗U2⊗U3 (l0|000> + l1 e^{i phi}|100> + l2|101> + l3|110> + l4|111>)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtParams {
    pub lambda: [f64; 5],
    pub phi: f64,
    /// ZYZ angles, three per qubit.
    pub lu: [f64; 9],
    pub class: EntClass,
}

/// Basis indices of the five Schmidt-form amplitudes.
pub(crate) const SCHMIDT_INDEX: [usize; 5] = [0, 4, 5, 6, 7];

impl SchmidtParams {
    /// Checks normalization, signs and the W-class constraint.
    pub fn validate(&self) -> Result<()> {
        if self.lambda.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return Err(Error::Domain("Schmidt coefficients must be nonnegative".into()));
        }
        let n2: f64 = self.lambda.iter().map(|l| l * l).sum();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("sum of squared Schmidt coefficients is {n2}")));
        }
        if self.class == EntClass::W && (self.lambda[4] != 0.0 || self.phi != 0.0) {
            return Err(Error::Domain("W-class parameters require lambda4 = phi = 0".into()));
        }
        Ok(())
    }

    pub fn local_unitaries(&self) -> [Matrix2<C64>; 3] {
        [
            su2([self.lu[0], self.lu[1], self.lu[2]]),
            su2([self.lu[3], self.lu[4], self.lu[5]]),
            su2([self.lu[6], self.lu[7], self.lu[8]]),
        ]
    }

    /// Canonical amplitudes before the local unitaries.
    pub fn canonical_amplitudes(&self) -> [C64; DIM] {
        let mut amp = [c(0.0, 0.0); DIM];
        for (k, &idx) in SCHMIDT_INDEX.iter().enumerate() {
            amp[idx] = c(self.lambda[k], 0.0);
        }
        amp[4] = cis(self.phi) * self.lambda[1];
        amp
    }
}

/// Pure state from generalized Schmidt parameters.
pub fn schmidt_state(s: &SchmidtParams) -> Result<PureState> {
    s.validate()?;
    let [u1, u2, u3] = s.local_unitaries();
    let k = kron3_unchecked(&u1, &u2, &u3);
    let amp = nalgebra::DVector::from_row_slice(&s.canonical_amplitudes());
    PureState::normalized((k * amp).as_slice().to_vec())
}

/// Angles `2 pi n / 3` used by the discrete `R_L` symmetry.
pub fn third_turn(n: i32) -> f64 {
    2.0 * PI * n as f64 / 3.0
}
