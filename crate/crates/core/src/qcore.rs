//! Dense complex linear algebra for small Hilbert spaces.
//!
//! The three-qubit space (dimension 8) is the primary code path, but every
//! type carries its dimension so that restricted subspaces reuse the same
//! machinery. Basis ordering is `|q1 q2 q3>` with `q1` the most significant
//! bit, i.e. `|000>, |001>, ..., |111>`.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

/// Complex double.
pub type C64 = Complex<f64>;

/// Dimension of the three-qubit Hilbert space.
pub const DIM: usize = 8;

/// Tolerance used when validating Hermiticity and normalization.
pub const STRICT_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub(crate) fn cis(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amp: DVector<C64>,
}

impl PureState {
    /// Builds a state from amplitudes that must already be normalized.
    pub fn new(amp: Vec<C64>) -> Result<Self> {
        let amp = DVector::from_vec(amp);
        let norm = amp.norm();
        if (norm - 1.0).abs() > STRICT_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amp })
    }

    /// Builds a state by rescaling arbitrary nonzero amplitudes.
    pub fn normalized(amp: Vec<C64>) -> Result<Self> {
        let mut amp = DVector::from_vec(amp);
        let norm = amp.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        amp.unscale_mut(norm);
        Ok(Self { amp })
    }

    /// Computational basis state `|index>` in a space of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index });
        }
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[index] = C64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amp(&self) -> &[C64] {
        self.amp.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.amp
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amp.dotc(&other.amp))
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    /// Applies a unitary, renormalizing away rounding drift.
    pub fn apply(&self, u: &DMatrix<C64>) -> Result<PureState> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.nrows() });
        }
        let v = u * &self.amp;
        PureState::normalized(v.as_slice().to_vec())
    }
}

/// A Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp {
    mat: DMatrix<C64>,
}

impl HermitianOp {
    /// Validates Hermiticity to `1e-12` entrywise.
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), found: mat.ncols() });
        }
        let dev = hermitian_deviation(&mat);
        if dev > STRICT_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { mat })
    }

    /// Takes `(M + M†)/2`; used where the input is Hermitian up to rounding.
    pub(crate) fn hermitize(mat: DMatrix<C64>) -> Self {
        let h = (&mat + mat.adjoint()) * C64::new(0.5, 0.0);
        Self { mat: h }
    }

    pub fn zero(dim: usize) -> Self {
        Self { mat: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim) }
    }

    /// Outer product `|a><b| + |b><a|` scaled by `s`; handy for coherence terms.
    pub(crate) fn coherence(dim: usize, a: usize, b: usize, s: C64) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(a, b)] += s;
        m[(b, a)] += s.conj();
        Self { mat: m }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mat: &self.mat * C64::new(s, 0.0) }
    }

    pub fn add(&self, other: &HermitianOp) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &HermitianOp) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { mat: &self.mat - &other.mat })
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &HermitianOp) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { mat: &self.mat + &other.mat * C64::new(s, 0.0) })
    }

    /// Real linear combination of operators sharing one dimension.
    pub fn combination(coeffs: &[f64], ops: &[HermitianOp]) -> Result<Self> {
        if coeffs.len() != ops.len() {
            return Err(Error::DimensionMismatch { expected: ops.len(), found: coeffs.len() });
        }
        let dim = ops.first().map(|o| o.dim()).unwrap_or(DIM);
        let mut mat = DMatrix::zeros(dim, dim);
        for (cf, op) in coeffs.iter().zip(ops) {
            check_dim(dim, op.dim())?;
            mat += &op.mat * C64::new(*cf, 0.0);
        }
        Ok(Self { mat })
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &DMatrix<C64>) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.nrows() });
        }
        Ok(Self::hermitize(u * &self.mat * u.adjoint()))
    }

    /// `i [G, A]`, Hermitian whenever `G` and `A` are.
    pub fn i_commutator(&self, gen: &HermitianOp) -> Result<Self> {
        check_dim(self.dim(), gen.dim())?;
        let comm = &gen.mat * &self.mat - &self.mat * &gen.mat;
        Ok(Self::hermitize(comm * C64::new(0.0, 1.0)))
    }

    /// `<psi|A|psi>`.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        check_dim(self.dim(), psi.dim())?;
        Ok((psi.as_vector().adjoint() * &self.mat * psi.as_vector())[(0, 0)].re)
    }

    /// Eigenvalues in ascending order with matching eigenvectors as columns.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = self.mat.clone().symmetric_eigen();
        let n = self.dim();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = DMatrix::zeros(n, n);
        for (col, &i) in idx.iter().enumerate() {
            vecs.set_column(col, &eig.eigenvectors.column(i));
        }
        (vals, vecs)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().0
    }
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// A positive semidefinite, unit-trace Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOp,
}

impl DensityMatrix {
    pub fn new(op: HermitianOp) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > STRICT_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let lmin = min_eigenvalue(&op);
        if lmin < -1e-10 {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lmin:.3e}")));
        }
        Ok(Self { op })
    }

    pub fn pure(psi: &PureState) -> Self {
        Self { op: projector(psi) }
    }

    pub fn op(&self) -> &HermitianOp {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.op.eigenvalues().iter().filter(|&&l| l > tol).count()
    }
}

/// Hilbert-Schmidt inner product `Tr(A B)`.
pub fn hs_inner(a: &HermitianOp, b: &HermitianOp) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    // Tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij) for Hermitian B.
    let s: C64 = a.mat.iter().zip(b.mat.iter()).map(|(x, y)| x * y.conj()).sum();
    debug_assert!(s.im.abs() < 1e-9 * (1.0 + s.re.abs()));
    Ok(s.re)
}

pub fn hs_norm(a: &HermitianOp) -> f64 {
    a.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|psi><psi|`.
pub fn projector(psi: &PureState) -> HermitianOp {
    let v = psi.as_vector();
    HermitianOp::hermitize(v * v.adjoint())
}

/// `Tr(A rho)`.
pub fn expval(a: &HermitianOp, rho: &DensityMatrix) -> Result<f64> {
    hs_inner(a, rho.op())
}

pub fn min_eigenvalue(a: &HermitianOp) -> f64 {
    a.eigenvalues()[0]
}

/// Smallest eigenvalue of an arbitrary square matrix that must be Hermitian.
pub fn min_eigenvalue_checked(m: &DMatrix<C64>) -> Result<f64> {
    let op = HermitianOp::new(m.clone())?;
    Ok(min_eigenvalue(&op))
}

/// Deviation `max |U†U - I|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// `U1 ⊗ U2 ⊗ U3` with `q1` acting on the most significant bit.
pub fn kron3(u1: &Matrix2<C64>, u2: &Matrix2<C64>, u3: &Matrix2<C64>) -> Result<DMatrix<C64>> {
    for u in [u1, u2, u3] {
        let d = unitarity_deviation(&DMatrix::from_iterator(2, 2, u.iter().cloned()));
        if d > 1e-10 {
            return Err(Error::NotUnitary(d));
        }
    }
    Ok(kron3_unchecked(u1, u2, u3))
}

pub(crate) fn kron3_unchecked(u1: &Matrix2<C64>, u2: &Matrix2<C64>, u3: &Matrix2<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(DIM, DIM);
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                let row = 4 * a + 2 * b + cc;
                for x in 0..2 {
                    for y in 0..2 {
                        for z in 0..2 {
                            let col = 4 * x + 2 * y + z;
                            out[(row, col)] = u1[(a, x)] * u2[(b, y)] * u3[(cc, z)];
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn identity2() -> Matrix2<C64> {
    Matrix2::identity()
}

/// `diag(1, e^{i theta})`.
pub fn phase_gate(theta: f64) -> Matrix2<C64> {
    Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), cis(theta))
}

/// Local phase rotation `R_L(alpha, beta)`: qubit phases `alpha`, `beta`
/// and `-(alpha + beta)` on `|1>`.
pub fn local_phase_rotation(alpha: f64, beta: f64) -> DMatrix<C64> {
    kron3_unchecked(&phase_gate(alpha), &phase_gate(beta), &phase_gate(-(alpha + beta)))
}

/// Permutation of qubit positions: output qubit `k` carries input qubit `perm[k]`.
pub fn qubit_permutation(perm: [usize; 3]) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(DIM, DIM);
    for idx in 0..DIM {
        let bits = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1];
        let new_bits = [bits[perm[0]], bits[perm[1]], bits[perm[2]]];
        let target = (new_bits[0] << 2) | (new_bits[1] << 1) | new_bits[2];
        out[(target, idx)] = c(1.0, 0.0);
    }
    out
}

/// Computational-basis projector `|idx><idx|`.
pub fn basis_projector(dim: usize, idx: usize) -> HermitianOp {
    let mut m = DMatrix::zeros(dim, dim);
    m[(idx, idx)] = c(1.0, 0.0);
    HermitianOp { mat: m }
}
