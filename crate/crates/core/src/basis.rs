//! Orthonormal traceless Hermitian operator bases and generalized Bloch
//! vectors.
//!
//! Internally every state is written as `ρ = I/n + Σ θ_j σ_j` with
//! `Tr σ_iσ_j = δ_ij`, so `θ_j = Tr(ρσ_j)` and `‖θ‖² ≤ (n−1)/n`. The scaled
//! vector `nθ` (for which `ρ = (I + nθ·σ)/n`) and the qubit Pauli vector
//! `√2·θ` are reachable only through the explicit conversion functions at the
//! bottom of this module.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigvalsh, hermitian_defect, identity, kron, pauli, trace, trace_product, trace_product_re,
    CMatrix, ONE, ZERO,
};

/// Positivity tolerance for eigenvalue checks.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Tolerance on basis orthonormality and tracelessness.
pub const BASIS_TOL: f64 = 1e-12;
/// Tolerance for unit trace and Hermiticity of input states.
pub const STATE_TOL: f64 = 1e-12;
/// Tolerance for recognizing `n·(rank-one projection)`.
pub const RANK_ONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisOrder {
    /// Generalized Gell-Mann: symmetric pairs (row-major), antisymmetric
    /// pairs (row-major), then diagonals.
    GellMann,
    /// Tensor products of Pauli matrices, lexicographic in the Pauli indices
    /// with the identity string skipped.
    PauliProduct,
    Custom,
}

impl BasisOrder {
    pub fn tag(self) -> &'static str {
        match self {
            BasisOrder::GellMann => "gell-mann:sym,antisym,diag",
            BasisOrder::PauliProduct => "pauli-product:lex",
            BasisOrder::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    order: BasisOrder,
    elements: Vec<CMatrix>,
    labels: Vec<String>,
}

/// Largest violations of the basis invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisDefects {
    pub hermitian: f64,
    pub trace: f64,
    pub orthonormality: f64,
}

impl BasisDefects {
    pub fn within(&self, tol: f64) -> bool {
        self.hermitian <= tol && self.trace <= tol && self.orthonormality <= tol
    }
}

/// Generalized Gell-Mann basis of `n×n` traceless Hermitian matrices,
/// normalized to `Tr σ_iσ_j = δ_ij`.
pub fn build_basis(n: usize) -> Result<OperatorBasis> {
    OperatorBasis::gell_mann(n)
}

impl OperatorBasis {
    pub fn gell_mann(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut elements = Vec::with_capacity(n * n - 1);
        let mut labels = Vec::with_capacity(n * n - 1);
        for j in 0..n {
            for k in (j + 1)..n {
                let mut m = CMatrix::zeros(n, n);
                m[(j, k)] = Complex64::new(s, 0.0);
                m[(k, j)] = Complex64::new(s, 0.0);
                elements.push(m);
                labels.push(format!("s{j}{k}"));
            }
        }
        for j in 0..n {
            for k in (j + 1)..n {
                let mut m = CMatrix::zeros(n, n);
                m[(j, k)] = Complex64::new(0.0, -s);
                m[(k, j)] = Complex64::new(0.0, s);
                elements.push(m);
                labels.push(format!("a{j}{k}"));
            }
        }
        for l in 1..n {
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let mut m = CMatrix::zeros(n, n);
            for j in 0..l {
                m[(j, j)] = Complex64::new(norm, 0.0);
            }
            m[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
            elements.push(m);
            labels.push(format!("d{l}"));
        }
        Ok(Self { dim: n, order: BasisOrder::GellMann, elements, labels })
    }

    /// Normalized Pauli strings `σ_{i₁}⊗…⊗σ_{i_q} / 2^{q/2}` on `q` qubits.
    /// Labels are the strings over `IXYZ`, e.g. `"XI"`, `"ZY"`.
    pub fn pauli_product(qubits: usize) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::InvalidDimension(1));
        }
        let [x, y, z] = pauli();
        let singles = [identity(2), x, y, z];
        let letters = ['I', 'X', 'Y', 'Z'];
        let dim = 1usize << qubits;
        let norm = 1.0 / (dim as f64).sqrt();
        let mut elements = Vec::with_capacity(dim * dim - 1);
        let mut labels = Vec::with_capacity(dim * dim - 1);
        for code in 1..(dim * dim) {
            let mut digits = Vec::with_capacity(qubits);
            let mut c = code;
            for _ in 0..qubits {
                digits.push(c % 4);
                c /= 4;
            }
            digits.reverse();
            let mut m = CMatrix::from_element(1, 1, ONE);
            for &d in &digits {
                m = kron(&m, &singles[d]);
            }
            elements.push(m.scale(norm));
            labels.push(digits.iter().map(|&d| letters[d]).collect());
        }
        Ok(Self { dim, order: BasisOrder::PauliProduct, elements, labels })
    }

    /// Wraps a caller-supplied family after checking every basis invariant.
    pub fn from_elements(dim: usize, elements: Vec<CMatrix>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if elements.len() != dim * dim - 1 {
            return Err(Error::InvalidBasis(format!(
                "{} elements, need {}",
                elements.len(),
                dim * dim - 1
            )));
        }
        if let Some(bad) = elements.iter().find(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.nrows() });
        }
        let labels = (0..elements.len()).map(|j| format!("e{j}")).collect();
        let basis = Self { dim, order: BasisOrder::Custom, elements, labels };
        let defects = basis.defects();
        if !defects.within(BASIS_TOL) {
            return Err(Error::InvalidBasis(format!("{defects:?}")));
        }
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of elements, `n² − 1`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn order(&self) -> BasisOrder {
        self.order
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, j: usize) -> &CMatrix {
        &self.elements[j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn defects(&self) -> BasisDefects {
        let mut d = BasisDefects { hermitian: 0.0, trace: 0.0, orthonormality: 0.0 };
        for (i, a) in self.elements.iter().enumerate() {
            d.hermitian = d.hermitian.max(hermitian_defect(a));
            d.trace = d.trace.max(trace(a).norm());
            for (j, b) in self.elements.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                d.orthonormality = d.orthonormality.max((trace_product(a, b) - target).norm());
            }
        }
        d
    }

    /// `Σ g_j σ_j`.
    pub fn expand(&self, g: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (gj, s) in g.iter().zip(&self.elements) {
            if *gj != 0.0 {
                m += s.scale(*gj);
            }
        }
        m
    }

    /// Coordinates `Tr(Aσ_j)` of a Hermitian matrix.
    pub fn coefficients(&self, a: &CMatrix) -> Vec<f64> {
        self.elements.iter().map(|s| trace_product_re(a, s)).collect()
    }

    /// Mask selecting the basis elements that are diagonal matrices.
    pub fn diagonal_mask(&self) -> Vec<bool> {
        self.elements
            .iter()
            .map(|m| {
                (0..self.dim)
                    .all(|i| (0..self.dim).all(|j| i == j || m[(i, j)].norm() <= BASIS_TOL))
            })
            .collect()
    }

    /// Builds a mask from element labels.
    pub fn mask_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for l in labels {
            let idx = self.index_of(l.as_ref()).ok_or_else(|| {
                Error::InvalidParameters(format!("unknown basis label {:?}", l.as_ref()))
            })?;
            mask[idx] = true;
        }
        Ok(mask)
    }

    pub(crate) fn check_mask(&self, mask: &[bool]) -> Result<()> {
        if mask.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: mask.len() });
        }
        Ok(())
    }
}

/// A generalized Bloch vector in canonical scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub dim: usize,
    #[serde(default = "default_order_tag")]
    pub basis_order: String,
    pub theta: Vec<f64>,
    /// Coordinates whose values are known to the experimenter. Empty in
    /// JSON input means none.
    #[serde(default)]
    pub known_mask: Vec<bool>,
}

fn default_order_tag() -> String {
    BasisOrder::GellMann.tag().to_string()
}

impl BlochState {
    pub fn new(dim: usize, theta: Vec<f64>) -> Self {
        let len = theta.len();
        Self {
            dim,
            basis_order: BasisOrder::GellMann.tag().to_string(),
            theta,
            known_mask: vec![false; len],
        }
    }

    pub fn in_basis(basis: &OperatorBasis, theta: Vec<f64>) -> Self {
        let len = theta.len();
        Self {
            dim: basis.dim(),
            basis_order: basis.order().tag().to_string(),
            theta,
            known_mask: vec![false; len],
        }
    }

    pub fn maximally_mixed(basis: &OperatorBasis) -> Self {
        Self::in_basis(basis, vec![0.0; basis.len()])
    }

    pub fn with_known_mask(mut self, mask: Vec<bool>) -> Self {
        self.known_mask = mask;
        self
    }

    pub fn norm_sq(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum()
    }

    /// Values of the known coordinates, in basis order.
    pub fn known_values(&self) -> Vec<f64> {
        self.theta
            .iter()
            .zip(&self.known_mask)
            .filter(|(_, k)| **k)
            .map(|(t, _)| *t)
            .collect()
    }

    /// Values of the unknown coordinates, in basis order.
    pub fn unknown_values(&self) -> Vec<f64> {
        self.theta
            .iter()
            .zip(&self.known_mask)
            .filter(|(_, k)| !**k)
            .map(|(t, _)| *t)
            .collect()
    }

    /// Smallest eigenvalue of the reconstructed density matrix.
    pub fn min_eigenvalue(&self, basis: &OperatorBasis) -> Result<f64> {
        let rho = bloch_to_density(self, basis)?;
        Ok(eigvalsh(&rho)[0])
    }

    pub fn is_physical(&self, basis: &OperatorBasis) -> Result<bool> {
        Ok(self.min_eigenvalue(basis)? >= -POSITIVITY_TOL)
    }
}

/// `θ_j = Tr(ρσ_j)`.
pub fn density_to_bloch(rho: &CMatrix, basis: &OperatorBasis) -> Result<BlochState> {
    let n = basis.dim();
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rho.nrows() });
    }
    let tr = trace(rho);
    if (tr - ONE).norm() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} is not 1")));
    }
    let herm = hermitian_defect(rho);
    if herm > STATE_TOL {
        return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
    }
    Ok(BlochState::in_basis(basis, basis.coefficients(rho)))
}

/// `I/n + Σ θ_j σ_j`.
pub fn bloch_to_density(state: &BlochState, basis: &OperatorBasis) -> Result<CMatrix> {
    if state.dim != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: state.dim });
    }
    if state.theta.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: state.theta.len() });
    }
    let n = basis.dim() as f64;
    Ok(identity(basis.dim()).scale(1.0 / n) + basis.expand(&state.theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityReport {
    pub is_positive: bool,
    pub norm_sq: f64,
    /// `n² − n`, the largest `‖g‖²` compatible with `I + g·σ ⪰ 0`.
    pub bound: f64,
    pub min_eigenvalue: f64,
    /// `I + g·σ = n·P` for a rank-one projection `P`.
    pub is_rank_one_multiple: bool,
}

/// Checks `I + g·σ ⪰ 0` together with the norm bound `‖g‖² ≤ n² − n` and
/// its equality case.
pub fn positivity_bound_check(g: &[f64], basis: &OperatorBasis) -> Result<PositivityReport> {
    if g.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: g.len() });
    }
    let n = basis.dim();
    let m = identity(n) + basis.expand(g);
    let ev = eigvalsh(&m);
    let nf = n as f64;
    let is_rank_one_multiple = (ev[n - 1] - nf).abs() <= RANK_ONE_TOL
        && ev[..n - 1].iter().all(|v| v.abs() <= RANK_ONE_TOL);
    Ok(PositivityReport {
        is_positive: ev[0] >= -POSITIVITY_TOL,
        norm_sq: g.iter().map(|x| x * x).sum(),
        bound: nf * nf - nf,
        min_eigenvalue: ev[0],
        is_rank_one_multiple,
    })
}

/// Canonical `θ` → scaled vector `nθ`, the one in `ρ = (I + g·σ)/n`.
pub fn to_scaled(theta: &[f64], n: usize) -> Vec<f64> {
    theta.iter().map(|t| t * n as f64).collect()
}

pub fn from_scaled(g: &[f64], n: usize) -> Vec<f64> {
    g.iter().map(|t| t / n as f64).collect()
}

/// Canonical qubit `θ` → Pauli Bloch vector (`ρ = (I + v·σ_pauli)/2`).
pub fn to_qubit_pauli(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| t * std::f64::consts::SQRT_2).collect()
}

pub fn from_qubit_pauli(v: &[f64]) -> Vec<f64> {
    v.iter().map(|t| t / std::f64::consts::SQRT_2).collect()
}
