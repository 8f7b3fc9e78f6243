//! Symmetry groups, orthonormal bases of symmetric operators, and the real
//! coordinate spaces they induce.
//!
//! Symmetrization is always done by orthogonal projection onto the span of
//! the basis, `O^S = sum_i Tr(O P_i) P_i`, which coincides with the
//! normalized group average and stays well defined for continuous groups.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    basis_projector, c, check_dim, hs_inner, hs_norm, kron3_unchecked, local_phase_rotation, pauli_x, projector,
    qubit_permutation, unitarity_deviation, HermitianOp, PureState, C64, DIM,
};
use crate::states::{third_turn, w};

/// Real coordinates of a symmetric operator in a [`SymBasis`].
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordVector(pub Vec<f64>);

impl Deref for CoordVector {
    type Target = Vec<f64>;
    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for CoordVector {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

impl From<Vec<f64>> for CoordVector {
    fn from(v: Vec<f64>) -> Self {
        CoordVector(v)
    }
}

impl CoordVector {
    pub fn zeros(n: usize) -> Self {
        CoordVector(vec![0.0; n])
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        self.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &[f64]) -> CoordVector {
        CoordVector(self.iter().zip(other).map(|(a, b)| a + s * b).collect())
    }
}

/// Group of unitaries leaving a state and the measure invariant.
#[derive(Clone, Debug)]
pub struct SymmetryGroup {
    pub name: String,
    dim: usize,
    /// Generators of the finite part.
    finite: Vec<DMatrix<C64>>,
    /// Hermitian generators `G` of one-parameter families `exp(i t G)`.
    continuous: Vec<HermitianOp>,
}

impl SymmetryGroup {
    pub fn new(name: &str, dim: usize, finite: Vec<DMatrix<C64>>, continuous: Vec<HermitianOp>) -> Result<Self> {
        for u in &finite {
            check_dim(dim, u.nrows())?;
            let dev = unitarity_deviation(u);
            if dev > 1e-10 {
                return Err(Error::NotUnitary(dev));
            }
        }
        for g in &continuous {
            check_dim(dim, g.dim())?;
        }
        Ok(Self { name: name.to_string(), dim, finite, continuous })
    }

    pub fn trivial(dim: usize) -> Self {
        Self { name: "trivial".into(), dim, finite: Vec::new(), continuous: Vec::new() }
    }

    /// Continuous local phase rotations, qubit permutations and the global flip.
    pub fn gi() -> Self {
        let x = pauli_x();
        let finite = vec![qubit_permutation([1, 0, 2]), qubit_permutation([0, 2, 1]), kron3_unchecked(&x, &x, &x)];
        let n = |k: usize| -> HermitianOp {
            let mut acc = HermitianOp::zero(DIM);
            for idx in 0..DIM {
                if (idx >> (2 - k)) & 1 == 1 {
                    acc = acc.add(&basis_projector(DIM, idx)).expect("same dim");
                }
            }
            acc
        };
        let continuous = vec![n(0).sub(&n(2)).expect("dim"), n(1).sub(&n(2)).expect("dim")];
        Self { name: "gi".into(), dim: DIM, finite, continuous }
    }

    /// Discrete phase rotation `R_L(2pi/3, 2pi/3)` and qubit permutations.
    pub fn gw() -> Self {
        let finite = vec![
            qubit_permutation([1, 0, 2]),
            qubit_permutation([0, 2, 1]),
            local_phase_rotation(third_turn(1), third_turn(1)),
        ];
        Self { name: "gw".into(), dim: DIM, finite, continuous: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn finite_generators(&self) -> &[DMatrix<C64>] {
        &self.finite
    }

    pub fn continuous_generators(&self) -> &[HermitianOp] {
        &self.continuous
    }

    /// All elements of the group generated by the finite generators.
    pub fn finite_closure(&self) -> Vec<DMatrix<C64>> {
        let mut elems = vec![DMatrix::<C64>::identity(self.dim, self.dim)];
        let mut frontier = elems.clone();
        while !frontier.is_empty() && elems.len() < 4096 {
            let mut next = Vec::new();
            for a in &frontier {
                for g in &self.finite {
                    let prod = g * a;
                    if !elems.iter().chain(next.iter()).any(|e: &DMatrix<C64>| (e - &prod).norm() < 1e-9) {
                        next.push(prod);
                    }
                }
            }
            elems.extend(next.iter().cloned());
            frontier = next;
        }
        elems
    }

    /// `exp(i t G)` for one of the continuous generators.
    pub fn continuous_element(&self, gen: usize, t: f64) -> DMatrix<C64> {
        let (vals, vecs) = self.continuous[gen].eigh();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|l| crate::qcore::cis(t * l))));
        &vecs * d * vecs.adjoint()
    }

    /// Finite closure combined with `phase_samples` equally spaced values of
    /// every continuous parameter.
    pub fn sampled_elements(&self, phase_samples: usize) -> Vec<DMatrix<C64>> {
        let mut elems = self.finite_closure();
        for gen in 0..self.continuous.len() {
            let n = phase_samples.max(1);
            let rots: Vec<DMatrix<C64>> =
                (0..n).map(|j| self.continuous_element(gen, 2.0 * std::f64::consts::PI * j as f64 / n as f64)).collect();
            let mut grown = Vec::with_capacity(elems.len() * n);
            for r in &rots {
                for e in &elems {
                    grown.push(r * e);
                }
            }
            elems = grown;
        }
        elems
    }

    /// Largest violation of `U rho U† = rho` and `[G, rho] = 0`.
    pub fn invariance_deviation(&self, op: &HermitianOp) -> Result<f64> {
        let mut dev = 0.0f64;
        for u in &self.finite {
            dev = dev.max(hs_norm(&op.conjugate_by(u)?.sub(op)?));
        }
        for g in &self.continuous {
            dev = dev.max(hs_norm(&op.i_commutator(g)?));
        }
        Ok(dev)
    }
}

/// Identifier of a symmetric basis, carried into witness files.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisId {
    Gi,
    Gw,
    Custom(String),
}

impl fmt::Display for BasisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisId::Gi => write!(f, "gi"),
            BasisId::Gw => write!(f, "gw"),
            BasisId::Custom(name) => write!(f, "custom:{name}"),
        }
    }
}

/// Orthonormal basis `{P_i}` of operators commuting with a group.
#[derive(Clone, Debug)]
pub struct SymBasis {
    pub id: BasisId,
    ops: Vec<HermitianOp>,
    /// Published operator `i` equals `published_scale[i] * ops[i]`.
    published_scale: Vec<f64>,
    group: Arc<SymmetryGroup>,
}

impl SymBasis {
    pub fn from_ops(id: BasisId, ops: Vec<HermitianOp>, group: Arc<SymmetryGroup>) -> Result<Self> {
        let n = ops.len();
        Self::with_scale(id, ops, vec![1.0; n], group)
    }

    fn with_scale(id: BasisId, ops: Vec<HermitianOp>, published_scale: Vec<f64>, group: Arc<SymmetryGroup>) -> Result<Self> {
        for op in &ops {
            check_dim(group.dim(), op.dim())?;
        }
        let b = Self { id, ops, published_scale, group };
        let dev = b.orthonormality_deviation();
        if dev > 1e-10 {
            return Err(Error::Domain(format!("basis is not orthonormal (deviation {dev:.3e})")));
        }
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[HermitianOp] {
        &self.ops
    }

    pub fn group(&self) -> &Arc<SymmetryGroup> {
        &self.group
    }

    pub fn hilbert_dim(&self) -> usize {
        self.group.dim()
    }

    pub fn published_scale(&self) -> &[f64] {
        &self.published_scale
    }

    pub fn orthonormality_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for (i, a) in self.ops.iter().enumerate() {
            for (j, b) in self.ops.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((hs_inner(a, b).unwrap_or(f64::NAN) - target).abs());
            }
        }
        dev
    }

    /// `[v]_i = Tr(O P_i)`.
    pub fn vectorize(&self, op: &HermitianOp) -> Result<CoordVector> {
        self.ops.iter().map(|p| hs_inner(op, p)).collect::<Result<Vec<_>>>().map(CoordVector)
    }

    /// `sum_i v_i P_i`.
    pub fn devectorize(&self, v: &[f64]) -> Result<HermitianOp> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: v.len() });
        }
        HermitianOp::combination(v, &self.ops)
    }

    pub fn symmetrize(&self, op: &HermitianOp) -> Result<HermitianOp> {
        self.devectorize(&self.vectorize(op)?)
    }

    /// `[q]_i = <psi|P_i|psi>`.
    pub fn state_coords(&self, psi: &PureState) -> Result<CoordVector> {
        self.ops.iter().map(|p| p.expectation(psi)).collect::<Result<Vec<_>>>().map(CoordVector)
    }

    /// Coordinates of the identity, the gauge direction of witness operators.
    pub fn identity_coords(&self) -> CoordVector {
        CoordVector(self.ops.iter().map(|p| p.trace()).collect())
    }

    /// Converts internal coordinates to those of the published operator convention.
    pub fn to_published(&self, v: &[f64]) -> CoordVector {
        CoordVector(v.iter().zip(&self.published_scale).map(|(x, s)| x / s).collect())
    }

    pub fn from_published(&self, v: &[f64]) -> CoordVector {
        CoordVector(v.iter().zip(&self.published_scale).map(|(x, s)| x * s).collect())
    }

    /// Largest commutator violation over the group generators.
    pub fn commutation_deviation(&self) -> Result<f64> {
        let mut dev = 0.0f64;
        for op in &self.ops {
            dev = dev.max(self.group.invariance_deviation(op)?);
        }
        Ok(dev)
    }
}

/// `Sigma_0 .. Sigma_3` on the `{|000>, |111>}` block.
pub fn sigma(i: usize) -> HermitianOp {
    let p000 = basis_projector(DIM, 0);
    let p111 = basis_projector(DIM, 7);
    match i {
        0 => p000.add(&p111).expect("dim"),
        1 => HermitianOp::coherence(DIM, 0, 7, c(1.0, 0.0)),
        2 => HermitianOp::coherence(DIM, 0, 7, c(0.0, -1.0)),
        3 => p000.sub(&p111).expect("dim"),
        _ => panic!("Sigma index {i} out of range"),
    }
}

/// Basis `P_{0,1} = Sigma_{0,1}/sqrt2`, `P_2 = (I - Sigma_0)/sqrt6`.
pub fn gi_basis() -> SymBasis {
    let s2 = 2f64.sqrt();
    let ops = vec![
        sigma(0).scale(1.0 / s2),
        sigma(1).scale(1.0 / s2),
        HermitianOp::identity(DIM).sub(&sigma(0)).expect("dim").scale(1.0 / 6f64.sqrt()),
    ];
    SymBasis::with_scale(BasisId::Gi, ops, vec![1.0; 3], Arc::new(SymmetryGroup::gi())).expect("orthonormal")
}

/// `|W_n> = R_L(0, 2(n-1)pi/3)|W>`, `n = 1, 2, 3`.
pub fn w_rotated(n: i32) -> PureState {
    w().apply(&local_phase_rotation(0.0, third_turn(n - 1))).expect("unitary")
}

/// `sigma_x^{⊗3} |W_n>`.
pub fn w_bar_rotated(n: i32) -> PureState {
    let x = pauli_x();
    w_rotated(n).apply(&kron3_unchecked(&x, &x, &x)).expect("unitary")
}

/// Eight-operator basis for the GHZ/W mixtures. `P_5` and `P_7` are stored
/// as `(pi_2 + pi_3)/sqrt2` so the set is orthonormal; the published
/// `(pi_2 + pi_3)/2` convention is reachable through `published_scale`.
pub fn gw_basis() -> SymBasis {
    let s2 = 2f64.sqrt();
    let pair = |a: PureState, b: PureState| projector(&a).add(&projector(&b)).expect("dim").scale(1.0 / s2);
    let ops = vec![
        sigma(0).scale(1.0 / s2),
        sigma(1).scale(1.0 / s2),
        sigma(2).scale(1.0 / s2),
        sigma(3).scale(1.0 / s2),
        projector(&w_rotated(1)),
        pair(w_rotated(2), w_rotated(3)),
        projector(&w_bar_rotated(1)),
        pair(w_bar_rotated(2), w_bar_rotated(3)),
    ];
    let scale = vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0 / s2, 1.0, 1.0 / s2];
    SymBasis::with_scale(BasisId::Gw, ops, scale, Arc::new(SymmetryGroup::gw())).expect("orthonormal")
}

/// Orthonormal Hermitian basis of the full operator space.
pub fn hermitian_basis(dim: usize) -> Vec<HermitianOp> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        out.push(basis_projector(dim, j));
    }
    for j in 0..dim {
        for k in (j + 1)..dim {
            out.push(HermitianOp::coherence(dim, j, k, c(s, 0.0)));
            out.push(HermitianOp::coherence(dim, j, k, c(0.0, -s)));
        }
    }
    out
}

/// Orthonormal basis of the commutant of `group` among Hermitian operators,
/// obtained as the null space of the linear fixed-point conditions.
pub fn commutant_basis(group: Arc<SymmetryGroup>) -> Result<SymBasis> {
    let dim = group.dim();
    let full = hermitian_basis(dim);
    let n = full.len();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut constraint_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let n_constraints = group.finite_generators().len() + group.continuous_generators().len();
    if n_constraints > 0 {
        for e in &full {
            let mut col = Vec::with_capacity(n * n_constraints);
            for u in group.finite_generators() {
                let d = e.conjugate_by(u)?.sub(e)?;
                for f in &full {
                    col.push(hs_inner(&d, f)?);
                }
            }
            for g in group.continuous_generators() {
                let d = e.i_commutator(g)?;
                for f in &full {
                    col.push(hs_inner(&d, f)?);
                }
            }
            constraint_cols.push(col);
        }
        for a in 0..n {
            for b in a..n {
                let s: f64 = constraint_cols[a].iter().zip(&constraint_cols[b]).map(|(x, y)| x * y).sum();
                gram[(a, b)] = s;
                gram[(b, a)] = s;
            }
        }
    }
    let eig = gram.symmetric_eigen();
    let mut ops = Vec::new();
    for k in 0..n {
        if eig.eigenvalues[k].abs() < 1e-8 {
            let coeffs: Vec<f64> = eig.eigenvectors.column(k).iter().cloned().collect();
            ops.push(HermitianOp::combination(&coeffs, &full)?);
        }
    }
    let name = group.name.clone();
    SymBasis::from_ops(BasisId::Custom(name), ops, group)
}

/// Distinct states `U|psi>` over the sampled group, compared by projector.
pub fn orbit(psi: &PureState, group: &SymmetryGroup, phase_samples: usize) -> Result<Vec<PureState>> {
    let mut out: Vec<PureState> = Vec::new();
    for u in group.sampled_elements(phase_samples) {
        let img = psi.apply(&u)?;
        if !contains_state(&out, &img)? {
            out.push(img);
        }
    }
    Ok(out)
}

fn contains_state(set: &[PureState], psi: &PureState) -> Result<bool> {
    for s in set {
        if 1.0 - s.overlap(psi)? < 1e-8 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Representatives of `states` such that their orbits regenerate the set.
pub fn asymmetric_unit(states: &[PureState], group: &SymmetryGroup, phase_samples: usize) -> Result<Vec<PureState>> {
    let mut reps: Vec<PureState> = Vec::new();
    let mut covered: Vec<PureState> = Vec::new();
    for psi in states {
        if contains_state(&covered, psi)? {
            continue;
        }
        covered.extend(orbit(psi, group, phase_samples)?);
        reps.push(psi.clone());
    }
    Ok(reps)
}
