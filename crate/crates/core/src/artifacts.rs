//! File formats shared by the driver and reference values shipped with the
//! crate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::InnerConfig;
use crate::outer::{assess_witness, maximize_witness, OuterConfig, WitnessResult};
use crate::qcore::{DensityMatrix, HermitianOp, C64};
use crate::states::{family_state, SchmidtParams, StateFamily};
use crate::symmetry::{gi_basis, gw_basis, BasisId, SymBasis};
use crate::verify::symmetric_w_forms;

pub const SCHEMA_VERSION: u32 = 1;

/// `4.053 P0 + 1.604 P1 - 3.000 I` for the GHZ/noise mixture.
pub const GI_WITNESS: [f64; 3] = [4.053, 1.604, -3.000];
/// Weight amplitudes `(a_0..a_3)` of the W-class partner of GHZ in that mixture.
pub const Z_STATE: [f64; 4] = [0.7436, -0.1750, -0.2133, 0.4677];
pub const Q0: f64 = 0.304;
pub const P0: f64 = 0.3731;
/// Noise weight of the three-species slice.
pub const GWI_Q: f64 = 0.038;

/// Basis for a family.
pub fn basis_for(id: BasisId) -> Result<SymBasis> {
    match id {
        BasisId::Gi => Ok(gi_basis()),
        BasisId::Gw => Ok(gw_basis()),
        other => Err(Error::Config(format!("no built-in basis {other:?}"))),
    }
}

/// Serialized witness `Pi = sum v_i P_i` in the published operator convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub schema_version: u32,
    pub basis: BasisId,
    pub v: Vec<f64>,
    pub mu_pi: f64,
    pub k_bound: f64,
    pub asymptotic: bool,
    /// Band states of the producing run. Verification re-scores them at `v`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<SchmidtParams>,
}

impl WitnessFile {
    pub fn from_result(res: &WitnessResult, basis: &SymBasis) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            basis: res.basis.clone(),
            v: basis.to_published(&res.v).0,
            mu_pi: res.mu_pi,
            k_bound: res.k_bound,
            asymptotic: res.asymptotic,
            candidates: res.warm_states(),
        }
    }

    /// Coordinates in the orthonormal convention used by the solvers.
    pub fn internal_v(&self, basis: &SymBasis) -> Result<Vec<f64>> {
        if self.v.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), found: self.v.len() });
        }
        Ok(basis.from_published(&self.v).0)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let w: Self = serde_json::from_str(text)?;
        if w.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema_version {}", w.schema_version)));
        }
        Ok(w)
    }
}

/// `(a, b, c)` of `a P0 + b P1 + c I` from published-convention coordinates
/// of `X` in the three-operator basis.
pub fn gi_published_form(x: &[f64]) -> Result<[f64; 3]> {
    if x.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: x.len() });
    }
    let c = x[2] / 6f64.sqrt();
    Ok([x[0] - 2f64.sqrt() * c, x[1], c])
}

/// One point of the misleading witness family along the slice `q = 0.038`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XlesAnchor {
    pub p: f64,
    pub q: f64,
    /// Coordinates of `Pi`, published convention.
    pub v: Vec<f64>,
    pub mu_pi: f64,
    pub g_value: f64,
    pub d_min: f64,
}

impl XlesAnchor {
    pub fn to_witness(&self) -> WitnessFile {
        WitnessFile {
            schema_version: SCHEMA_VERSION,
            basis: BasisId::Gw,
            v: self.v.clone(),
            mu_pi: self.mu_pi,
            k_bound: 1e3,
            asymptotic: false,
            candidates: Vec::new(),
        }
    }
}

/// `bundled:gi` or `bundled:xles:<p>`; anything else is read as a path.
pub fn load_witness(spec: &str) -> Result<WitnessFile> {
    match spec.strip_prefix("bundled:") {
        Some("gi") => Ok(bundled_gi_witness()),
        Some(rest) => {
            let p = rest
                .strip_prefix("xles:")
                .and_then(|x| x.parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("unknown bundled witness '{spec}'")))?;
            Ok(xles_anchor(p).to_witness())
        }
        None => WitnessFile::parse(&std::fs::read_to_string(spec)?),
    }
}

const XLES_JSON: &str = include_str!("../data/xles.json");
const GI_Q01_JSON: &str = include_str!("../data/gi_witness_q0.1.json");

pub fn bundled_xles() -> Vec<XlesAnchor> {
    serde_json::from_str(XLES_JSON).expect("bundled data parses")
}

/// Anchor with the closest `p`.
pub fn xles_anchor(p: f64) -> XlesAnchor {
    bundled_xles()
        .into_iter()
        .min_by(|a, b| (a.p - p).abs().total_cmp(&(b.p - p).abs()))
        .expect("nonempty")
}

/// Converged witness for the GHZ/noise mixture at `q = 0.1`.
pub fn bundled_gi_witness() -> WitnessFile {
    WitnessFile::parse(GI_Q01_JSON).expect("bundled data parses")
}

/// Witness obtained by optimizing over the larger symmetry of the
/// GHZ/noise mixture: solve for the group-averaged state, then evaluate the
/// resulting `Pi` honestly against `rho_GWI(p, q)` in the smaller basis.
pub fn xles_witness(p: f64, q: f64, cfg: &OuterConfig) -> Result<WitnessResult> {
    let rho = family_state(StateFamily::Gwi { p, q })?;
    let (gi, gw) = (gi_basis(), gw_basis());
    let averaged = DensityMatrix::new(gi.symmetrize(rho.op())?)?;
    let hi = maximize_witness(&averaged, &gi, cfg)?;
    let pi = gi.devectorize(&hi.v)?;
    let v = gw.vectorize(&pi)?;
    assess_witness(&rho, &gw, &v, cfg)
}

/// `Q A Q` with `Q` the projector onto eigenvectors of `rho` above `tol`.
pub fn compress_to_range(a: &HermitianOp, rho: &DensityMatrix, tol: f64) -> Result<HermitianOp> {
    let (vals, vecs) = rho.op().eigh();
    let n = rho.dim();
    let mut q = DMatrix::<C64>::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        if l > tol {
            let c = vecs.column(k);
            q += &c * c.adjoint();
        }
    }
    HermitianOp::new(&q * a.matrix() * &q)
}

/// Weight-symmetric representative of the W-class optimum at the final
/// witness of a GHZ/noise run, after polishing from `seed_params`.
pub fn refine_z_state(res: &WitnessResult, basis: &SymBasis, seed: &crate::states::SchmidtParams) -> Result<[f64; 4]> {
    let pi = basis.devectorize(&res.v)?;
    let cfg = InnerConfig { grad_tol: 1e-14, max_iter: 5000, ..InnerConfig::default() };
    let set = crate::inner::inner_minimize_warm(&pi, basis, &cfg, std::slice::from_ref(seed))?;
    let mut best: Option<([f64; 4], f64)> = None;
    for c in set.members.iter().filter(|c| c.t3 < 1e-6) {
        for (a, t) in symmetric_w_forms(&c.state()) {
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((a, t));
            }
        }
    }
    best.map(|(a, _)| a).ok_or_else(|| Error::Domain("no W-class optimum at the witness".into()))
}

/// Largest entrywise distance from `a` to `Z_STATE`, up to a global sign.
pub fn z_state_deviation(a: &[f64; 4]) -> f64 {
    [1.0, -1.0]
        .iter()
        .map(|s| (0..4).map(|w| (s * a[w] - Z_STATE[w]).abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}
