//! POVMs, von Neumann measurement families, and the structural checks the
//! optimal designs are recognized by: complementarity (mutual unbiasedness,
//! quasi-orthogonality) and the (conditional) SIC conditions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{bloch_to_density, BlochState, OperatorBasis, POSITIVITY_TOL, RANK_ONE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    eigvalsh, hermitian_defect, identity, kron, max_abs_entry, pauli, qubit_from_pauli_vector,
    trace, trace_product, trace_product_re, CMatrix, ONE,
};

/// Entrywise tolerance on `Σ E_i = I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Tolerance for complementarity and quasi-orthogonality residuals.
pub const COMPLEMENTARITY_TOL: f64 = 1e-10;

/// Tolerances used by the validators. Defaults are the module constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub positivity: f64,
    pub completeness: f64,
    pub hermitian: f64,
    pub rank_one: f64,
    pub complementarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            positivity: POSITIVITY_TOL,
            completeness: COMPLETENESS_TOL,
            hermitian: COMPLETENESS_TOL,
            rank_one: RANK_ONE_TOL,
            complementarity: COMPLEMENTARITY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Povm {
    pub dim: usize,
    #[serde(with = "crate::serde_matrix::complex_vec")]
    pub elements: Vec<CMatrix>,
}

#[derive(Deserialize)]
struct PovmRepr {
    dim: usize,
    #[serde(with = "crate::serde_matrix::complex_vec")]
    elements: Vec<CMatrix>,
}

impl TryFrom<PovmRepr> for Povm {
    type Error = Error;

    fn try_from(r: PovmRepr) -> Result<Self> {
        Povm::new(r.dim, r.elements)
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PovmRepr::deserialize(d)?;
        Povm::try_from(r).map_err(serde::de::Error::custom)
    }
}

fn check_shapes(dim: usize, mats: &[CMatrix]) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    if mats.is_empty() {
        return Err(Error::InvalidMeasurement("no elements".into()));
    }
    for (k, m) in mats.iter().enumerate() {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::InvalidMeasurement(format!(
                "element {k} is {}x{}, expected {dim}x{dim}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    Ok(())
}

impl Povm {
    /// Checks shapes only; use [`validate_povm`] for the physical invariants.
    pub fn new(dim: usize, elements: Vec<CMatrix>) -> Result<Self> {
        check_shapes(dim, &elements)?;
        Ok(Self { dim, elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Effects `E^i`, each defining the two-outcome measurement `{E^i, I − E^i}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VonNeumannFamily {
    pub dim: usize,
    #[serde(with = "crate::serde_matrix::complex_vec")]
    pub effects: Vec<CMatrix>,
}

#[derive(Deserialize)]
struct FamilyRepr {
    dim: usize,
    #[serde(with = "crate::serde_matrix::complex_vec")]
    effects: Vec<CMatrix>,
}

impl<'de> Deserialize<'de> for VonNeumannFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FamilyRepr::deserialize(d)?;
        VonNeumannFamily::new(r.dim, r.effects).map_err(serde::de::Error::custom)
    }
}

impl VonNeumannFamily {
    pub fn new(dim: usize, effects: Vec<CMatrix>) -> Result<Self> {
        check_shapes(dim, &effects)?;
        Ok(Self { dim, effects })
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}

/// Either kind of measurement design. In JSON the two are told apart by
/// their `elements` / `effects` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Design {
    Povm(Povm),
    VonNeumann(VonNeumannFamily),
}

impl Design {
    pub fn dim(&self) -> usize {
        match self {
            Design::Povm(p) => p.dim,
            Design::VonNeumann(f) => f.dim,
        }
    }

    /// The POVM elements or the family's effects.
    pub fn operators(&self) -> &[CMatrix] {
        match self {
            Design::Povm(p) => &p.elements,
            Design::VonNeumann(f) => &f.effects,
        }
    }

    pub fn validate_with(&self, tol: &Tolerances) -> Vec<Violation> {
        match self {
            Design::Povm(p) => validate_povm_with(p, tol),
            Design::VonNeumann(f) => validate_family_with(f, tol),
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with(&Tolerances::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Hermiticity,
    Positivity,
    Contraction,
    Completeness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending element, `None` for whole-measurement conditions.
    pub element: Option<usize>,
    pub magnitude: f64,
}

pub fn validate_povm(p: &Povm) -> Vec<Violation> {
    validate_povm_with(p, &Tolerances::default())
}

/// Lists every violated POVM invariant; empty iff the POVM is valid.
pub fn validate_povm_with(p: &Povm, tol: &Tolerances) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut sum = CMatrix::zeros(p.dim, p.dim);
    for (k, e) in p.elements.iter().enumerate() {
        let h = hermitian_defect(e);
        if h > tol.hermitian {
            out.push(Violation { kind: ViolationKind::Hermiticity, element: Some(k), magnitude: h });
        }
        let lo = eigvalsh(e)[0];
        if lo < -tol.positivity {
            out.push(Violation { kind: ViolationKind::Positivity, element: Some(k), magnitude: -lo });
        }
        sum += e;
    }
    let dev = max_abs_entry(&(sum - identity(p.dim)));
    if dev > tol.completeness {
        out.push(Violation { kind: ViolationKind::Completeness, element: None, magnitude: dev });
    }
    out
}

/// Checks `0 ⪯ E^i ⪯ I` for every effect.
pub fn validate_family(f: &VonNeumannFamily) -> Vec<Violation> {
    validate_family_with(f, &Tolerances::default())
}

pub fn validate_family_with(f: &VonNeumannFamily, tol: &Tolerances) -> Vec<Violation> {
    let mut out = Vec::new();
    for (k, e) in f.effects.iter().enumerate() {
        let h = hermitian_defect(e);
        if h > tol.hermitian {
            out.push(Violation { kind: ViolationKind::Hermiticity, element: Some(k), magnitude: h });
        }
        let ev = eigvalsh(e);
        let lo = ev[0];
        let hi = ev[ev.len() - 1];
        if lo < -tol.positivity {
            out.push(Violation { kind: ViolationKind::Positivity, element: Some(k), magnitude: -lo });
        }
        if hi > 1.0 + tol.positivity {
            out.push(Violation {
                kind: ViolationKind::Contraction,
                element: Some(k),
                magnitude: hi - 1.0,
            });
        }
    }
    out
}

fn born_rule(state: &BlochState, mats: &[CMatrix], dim: usize, basis: &OperatorBasis) -> Result<Vec<f64>> {
    if dim != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: dim });
    }
    let rho = bloch_to_density(state, basis)?;
    Ok(mats.iter().map(|e| trace_product_re(&rho, e)).collect())
}

/// Outcome probabilities `p_i = Tr(ρE_i)`.
pub fn probabilities(state: &BlochState, p: &Povm, basis: &OperatorBasis) -> Result<Vec<f64>> {
    born_rule(state, &p.elements, p.dim, basis)
}

/// Success probabilities `Tr(ρE^i)` of every effect in the family.
pub fn family_probabilities(
    state: &BlochState,
    f: &VonNeumannFamily,
    basis: &OperatorBasis,
) -> Result<Vec<f64>> {
    born_rule(state, &f.effects, f.dim, basis)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MubReport {
    pub is_complementary: bool,
    pub max_deviation: f64,
}

fn check_orthonormal_columns(a: &CMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidBasis(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    let gram = a.adjoint() * a;
    let dev = max_abs_entry(&(gram - identity(a.nrows())));
    if dev > COMPLEMENTARITY_TOL {
        return Err(Error::InvalidBasis(format!("columns not orthonormal (defect {dev:e})")));
    }
    Ok(())
}

/// Mutual unbiasedness of two orthonormal bases given as matrix columns:
/// every overlap `|⟨e_i, f_j⟩|²` must equal `1/n`.
pub fn check_mub(basis_a: &CMatrix, basis_b: &CMatrix) -> Result<MubReport> {
    check_orthonormal_columns(basis_a)?;
    check_orthonormal_columns(basis_b)?;
    let n = basis_a.nrows();
    if basis_b.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: basis_b.nrows() });
    }
    let overlaps = basis_a.adjoint() * basis_b;
    let target = 1.0 / n as f64;
    let max_deviation = overlaps
        .iter()
        .map(|z| (z.norm_sqr() - target).abs())
        .fold(0.0, f64::max);
    Ok(MubReport { is_complementary: max_deviation <= COMPLEMENTARITY_TOL, max_deviation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiOrthogonalReport {
    pub holds: bool,
    pub residual: f64,
}

/// Residual `|Tr(ab) − Tr(a)Tr(b)/n|`: zero iff the traceless parts are
/// Hilbert–Schmidt orthogonal.
pub fn quasi_orthogonal_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows() as f64;
    (trace_product(a, b) - trace(a) * trace(b) / n).norm()
}

pub fn check_quasi_orthogonal(a: &CMatrix, b: &CMatrix) -> Result<QuasiOrthogonalReport> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    let residual = quasi_orthogonal_residual(a, b);
    Ok(QuasiOrthogonalReport { holds: residual <= COMPLEMENTARITY_TOL, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SicReport {
    pub k: usize,
    /// Fitted constant in `Σ P_i = λI`.
    pub lambda: f64,
    /// Mean of `Tr P_iP_j` over `i ≠ j`.
    pub mu: f64,
    pub max_lambda_residual: f64,
    pub max_mu_residual: f64,
    pub all_rank_one: bool,
    /// Largest `λ₂/λ₁` eigenvalue ratio over the elements.
    pub max_rank_ratio: f64,
    /// Vacuously true for an empty mask.
    pub quasi_orthogonal_to_known: bool,
    /// Largest `|Tr P_iσ_j|` over known directions `σ_j`.
    pub max_known_residual: f64,
    /// The rescaled projectors `P_i`, for further inspection.
    #[serde(skip)]
    pub projectors: Vec<CMatrix>,
}

pub fn check_sic(p: &Povm, known_mask: &[bool], basis: &OperatorBasis) -> Result<SicReport> {
    check_sic_with(p, known_mask, basis, &Tolerances::default())
}

/// Rescales each element to `P_i = E_i / λ_max(E_i)` and measures how far
/// the family is from `Σ P_i = λI`, `Tr P_iP_j = μ`, rank one, and
/// quasi-orthogonal to the masked basis directions.
pub fn check_sic_with(
    p: &Povm,
    known_mask: &[bool],
    basis: &OperatorBasis,
    tol: &Tolerances,
) -> Result<SicReport> {
    if p.dim != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: p.dim });
    }
    basis.check_mask(known_mask)?;
    let n = p.dim;
    let mut projectors = Vec::with_capacity(p.len());
    let mut max_rank_ratio = 0.0f64;
    for (k, e) in p.elements.iter().enumerate() {
        let ev = eigvalsh(e);
        let top = ev[n - 1];
        if top <= tol.positivity {
            return Err(Error::DegenerateElement(k));
        }
        if n > 1 {
            max_rank_ratio = max_rank_ratio.max(ev[n - 2].abs() / top);
        }
        projectors.push(e.scale(1.0 / top));
    }

    let sum: CMatrix = projectors.iter().fold(CMatrix::zeros(n, n), |acc, m| acc + m);
    let lambda = trace(&sum).re / n as f64;
    let max_lambda_residual = max_abs_entry(&(sum - identity(n).scale(lambda)));

    let mut overlaps = Vec::new();
    for i in 0..projectors.len() {
        for j in (i + 1)..projectors.len() {
            overlaps.push(trace_product_re(&projectors[i], &projectors[j]));
        }
    }
    let (mu, max_mu_residual) = if overlaps.is_empty() {
        (0.0, 0.0)
    } else {
        let mu = overlaps.iter().sum::<f64>() / overlaps.len() as f64;
        (mu, overlaps.iter().map(|o| (o - mu).abs()).fold(0.0, f64::max))
    };

    let mut max_known_residual = 0.0f64;
    for (s, _) in basis.elements().iter().zip(known_mask).filter(|(_, k)| **k) {
        for pr in &projectors {
            max_known_residual = max_known_residual.max(quasi_orthogonal_residual(pr, s));
        }
    }

    Ok(SicReport {
        k: p.len(),
        lambda,
        mu,
        max_lambda_residual,
        max_mu_residual,
        all_rank_one: max_rank_ratio <= tol.rank_one,
        max_rank_ratio,
        quasi_orthogonal_to_known: max_known_residual <= tol.complementarity,
        max_known_residual,
        projectors,
    })
}

/// Qubit SIC-POVM `{P_i/2}` with one projector along `+z` and the other three
/// at polar angle `arccos(−1/3)`, 120° apart in azimuth.
pub fn tetrahedron_povm() -> Povm {
    let s = 2.0 * 2f64.sqrt() / 3.0;
    let mut dirs = vec![[0.0, 0.0, 1.0]];
    for k in 0..3 {
        let phi = 2.0 * PI * k as f64 / 3.0;
        dirs.push([s * phi.cos(), s * phi.sin(), -1.0 / 3.0]);
    }
    let elements = dirs.into_iter().map(|v| qubit_from_pauli_vector(v).scale(0.5)).collect();
    Povm { dim: 2, elements }
}

/// Qubit trine `{(2/3)P_i}` with `P_i` in the σ₁σ₂ plane, 120° apart.
pub fn trine_povm() -> Povm {
    let elements = (0..3)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / 3.0;
            qubit_from_pauli_vector([phi.cos(), phi.sin(), 0.0]).scale(2.0 / 3.0)
        })
        .collect();
    Povm { dim: 2, elements }
}

/// Powers of `ε = exp(2πi/7)` in `E₂, E₃, E₄` of the seven-element qutrit
/// conditional SIC-POVM; `E₁` is the all-ones matrix and `E₅..E₇` are the
/// complex conjugates of `E₂..E₄`.
pub const QUTRIT_EPSILON_POWERS: [[[u32; 3]; 3]; 3] = [
    [[0, 6, 2], [1, 0, 3], [5, 4, 0]],
    [[0, 2, 3], [5, 0, 1], [4, 6, 0]],
    [[0, 4, 6], [3, 0, 2], [1, 5, 0]],
];

/// The seven-element qutrit POVM built from the `ε`-power table, each
/// element `1/7` times a matrix of seventh roots of unity.
pub fn qutrit_example_povm() -> Povm {
    let eps = |p: u32| Complex64::from_polar(1.0, 2.0 * PI * p as f64 / 7.0);
    let mut elements = vec![CMatrix::from_element(3, 3, ONE / 7.0)];
    let base: Vec<CMatrix> = QUTRIT_EPSILON_POWERS
        .iter()
        .map(|table| CMatrix::from_fn(3, 3, |i, j| eps(table[i][j]) / 7.0))
        .collect();
    elements.extend(base.iter().cloned());
    elements.extend(base.iter().map(|m| m.map(|z| z.conj())));
    Povm { dim: 3, elements }
}

/// Index pairs of the two-qubit optimal family `σ_i⊗σ_j`.
pub const TWO_QUBIT_PAIRS: [(usize, usize); 9] =
    [(1, 1), (2, 2), (3, 3), (1, 2), (2, 3), (3, 1), (1, 3), (2, 1), (3, 2)];

/// The nine effects `(I + σ_i⊗σ_j)/2`.
pub fn two_qubit_optimal_family() -> VonNeumannFamily {
    let s = pauli();
    let effects = TWO_QUBIT_PAIRS
        .iter()
        .map(|&(i, j)| (identity(4) + kron(&s[i - 1], &s[j - 1])).scale(0.5))
        .collect();
    VonNeumannFamily { dim: 4, effects }
}

/// Mask over the two-qubit Pauli-product basis selecting the single-qubit
/// marginal directions `σ_i⊗I` and `I⊗σ_j`.
pub fn two_qubit_marginal_mask(basis: &OperatorBasis) -> Vec<bool> {
    basis.labels().iter().map(|l| l.contains('I')).collect()
}

/// Columns are the standard basis vectors.
pub fn computational_basis(n: usize) -> CMatrix {
    identity(n)
}

/// Columns `f_k = (ω^{jk}/√n)_j` with `ω = exp(2πi/n)`.
pub fn fourier_basis(n: usize) -> CMatrix {
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |j, k| Complex64::from_polar(s, 2.0 * PI * (j * k) as f64 / n as f64))
}

/// Columns are the eigenvectors of the qubit Pauli matrix `σ_axis` (1, 2 or 3).
pub fn pauli_eigenbasis(axis: usize) -> CMatrix {
    let (_, v) = crate::linalg::eigh(&pauli()[axis - 1]);
    v
}
