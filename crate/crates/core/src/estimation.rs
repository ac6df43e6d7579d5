//! The affine probability map `p = e + Tθ` of a measurement design, the
//! linear inversion estimator built from it, and the covariance it carries.
//!
//! For a POVM with `k = d + 1` outcomes the first `d` outcomes are the
//! estimating ones and the last is the discarded completion element. For a
//! von Neumann family each effect is measured on its own batch of copies, so
//! the frequencies are independent.
//!
//! Known coordinates never enter `T`; their contribution lives in the
//! offsets, `e = e₀ + K·θ_known` with `K_ij = Tr(E_iσ_j)` over known `σ_j`.

use serde::Serialize;

use crate::basis::{bloch_to_density, BlochState, OperatorBasis, POSITIVITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, min_eigenvalue_sym, symmetrize, trace, trace_product_re, CMatrix, RMatrix};
use crate::measurement::{Design, Povm, VonNeumannFamily};

/// `|det T|` below this is treated as singular.
pub const SINGULAR_DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    /// Multinomial outcomes of a single POVM.
    Povm,
    /// Independent binomial outcomes, one batch per effect.
    VonNeumann,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignMatrices {
    pub kind: DesignKind,
    pub dim: usize,
    pub known_mask: Vec<bool>,
    pub unknown_indices: Vec<usize>,
    pub known_indices: Vec<usize>,
    /// `Tr(E_i)/n` for the estimating outcomes.
    pub base_offsets: Vec<f64>,
    /// `Tr(E_iσ_j)` over known directions `σ_j`.
    #[serde(with = "crate::serde_matrix::real")]
    pub known_block: RMatrix,
    /// Declared values of the known coordinates.
    pub known_values: Vec<f64>,
    /// `Tr(E_iσ_j)` over unknown directions.
    #[serde(with = "crate::serde_matrix::real")]
    pub t: RMatrix,
    #[serde(with = "crate::serde_matrix::real")]
    pub t_inv: RMatrix,
    pub det_t: f64,
}

impl DesignMatrices {
    /// Number of unknown parameters `d`.
    pub fn unknowns(&self) -> usize {
        self.unknown_indices.len()
    }

    /// `e = e₀ + K·θ_known` for the declared known values.
    pub fn offsets(&self) -> Vec<f64> {
        self.offsets_for(&self.known_values)
    }

    fn offsets_for(&self, known_values: &[f64]) -> Vec<f64> {
        let mut e = self.base_offsets.clone();
        for (i, ei) in e.iter_mut().enumerate() {
            for (j, v) in known_values.iter().enumerate() {
                *ei += self.known_block[(i, j)] * v;
            }
        }
        e
    }

    pub fn with_known_values(mut self, values: &[f64]) -> Result<Self> {
        if values.len() != self.known_indices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.known_indices.len(),
                got: values.len(),
            });
        }
        self.known_values = values.to_vec();
        Ok(self)
    }

    /// Declares the known coordinates to be those of `state`.
    pub fn for_state(self, state: &BlochState) -> Result<Self> {
        let values = self.split(state)?.0;
        self.with_known_values(&values)
    }

    /// Splits a state's coordinates by this design's mask into
    /// `(known, unknown)` values.
    pub fn split(&self, state: &BlochState) -> Result<(Vec<f64>, Vec<f64>)> {
        if state.theta.len() != self.known_mask.len() {
            return Err(Error::DimensionMismatch {
                expected: self.known_mask.len(),
                got: state.theta.len(),
            });
        }
        let known = self.known_indices.iter().map(|&j| state.theta[j]).collect();
        let unknown = self.unknown_indices.iter().map(|&j| state.theta[j]).collect();
        Ok((known, unknown))
    }

    /// `e + Tθ` for the estimating outcomes at `state`, using the state's own
    /// known coordinates.
    pub fn probabilities_at(&self, state: &BlochState) -> Result<Vec<f64>> {
        let (known, unknown) = self.split(state)?;
        let mut p = self.offsets_for(&known);
        for (i, pi) in p.iter_mut().enumerate() {
            for (j, u) in unknown.iter().enumerate() {
                *pi += self.t[(i, j)] * u;
            }
        }
        Ok(p)
    }
}

fn partition(mask: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let known = (0..mask.len()).filter(|&j| mask[j]).collect();
    let unknown = (0..mask.len()).filter(|&j| !mask[j]).collect();
    (known, unknown)
}

fn assemble(
    kind: DesignKind,
    mats: &[CMatrix],
    known_mask: &[bool],
    basis: &OperatorBasis,
) -> Result<DesignMatrices> {
    let n = basis.dim();
    let (known_indices, unknown_indices) = partition(known_mask);
    let d = unknown_indices.len();
    let base_offsets = mats.iter().map(|e| trace(e).re / n as f64).collect();
    let known_block = RMatrix::from_fn(d, known_indices.len(), |i, j| {
        trace_product_re(&mats[i], basis.element(known_indices[j]))
    });
    let t = RMatrix::from_fn(d, d, |i, j| trace_product_re(&mats[i], basis.element(unknown_indices[j])));
    let det_t = t.determinant();
    if !det_t.is_finite() || det_t.abs() < SINGULAR_DET_TOL {
        return Err(Error::SingularDesign(det_t.abs()));
    }
    let t_inv = t.clone().try_inverse().ok_or(Error::SingularDesign(det_t.abs()))?;
    let kv = vec![0.0; known_indices.len()];
    Ok(DesignMatrices {
        kind,
        dim: n,
        known_mask: known_mask.to_vec(),
        unknown_indices,
        known_indices,
        base_offsets,
        known_block,
        known_values: kv,
        t,
        t_inv,
        det_t,
    })
}

/// Design of a single POVM with exactly `d + 1` outcomes, `d` the number of
/// unknown coordinates. Known values start at zero; see
/// [`DesignMatrices::with_known_values`].
pub fn build_design(p: &Povm, known_mask: &[bool], basis: &OperatorBasis) -> Result<DesignMatrices> {
    if p.dim != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: p.dim });
    }
    basis.check_mask(known_mask)?;
    let d = known_mask.iter().filter(|k| !**k).count();
    let k = p.len();
    if k < d + 1 {
        return Err(Error::UnderdeterminedDesign { outcomes: k, unknowns: d });
    }
    if k > d + 1 {
        return Err(Error::OvercompleteDesign { outcomes: k, expected: d + 1, unknowns: d });
    }
    assemble(DesignKind::Povm, &p.elements[..d], known_mask, basis)
}

/// Design of `d` independent two-outcome measurements `{E^i, I − E^i}`.
pub fn build_design_vn(
    f: &VonNeumannFamily,
    known_mask: &[bool],
    basis: &OperatorBasis,
) -> Result<DesignMatrices> {
    if f.dim != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: f.dim });
    }
    basis.check_mask(known_mask)?;
    let d = known_mask.iter().filter(|k| !**k).count();
    let k = f.len();
    if k < d {
        return Err(Error::UnderdeterminedDesign { outcomes: k, unknowns: d });
    }
    if k > d {
        return Err(Error::OvercompleteDesign { outcomes: k, expected: d, unknowns: d });
    }
    assemble(DesignKind::VonNeumann, &f.effects, known_mask, basis)
}

/// Design matrices of either kind of measurement.
pub fn build_design_any(design: &Design, known_mask: &[bool], basis: &OperatorBasis) -> Result<DesignMatrices> {
    match design {
        Design::Povm(p) => build_design(p, known_mask, basis),
        Design::VonNeumann(f) => build_design_vn(f, known_mask, basis),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    /// Full coordinate vector: declared known values plus estimated unknowns.
    pub state: BlochState,
    pub min_eigenvalue: f64,
    /// `false` when the reconstructed matrix has a negative eigenvalue. Such
    /// estimates are reported as-is, never projected.
    pub physical: bool,
}

impl Estimate {
    pub fn unknown(&self) -> Vec<f64> {
        self.state.unknown_values()
    }
}

fn check_frequencies(design: &DesignMatrices, nu: &[f64]) -> Result<()> {
    if nu.len() != design.unknowns() {
        return Err(Error::DimensionMismatch { expected: design.unknowns(), got: nu.len() });
    }
    if let Some(bad) = nu.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidProbability(format!("frequency {bad} outside [0, 1]")));
    }
    Ok(())
}

/// `θ̂ = T⁻¹(ν − e)` for the unknown block, without the physicality check.
pub fn estimate_unknown(design: &DesignMatrices, frequencies: &[f64]) -> Result<Vec<f64>> {
    check_frequencies(design, frequencies)?;
    let e = design.offsets();
    let d = design.unknowns();
    let mut out = vec![0.0; d];
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..d {
            *o += design.t_inv[(i, j)] * (frequencies[j] - e[j]);
        }
    }
    Ok(out)
}

/// Linear inversion estimate from the relative frequencies of the `d`
/// estimating outcomes. Unphysical estimates are flagged, not rejected.
pub fn estimate(design: &DesignMatrices, frequencies: &[f64], basis: &OperatorBasis) -> Result<Estimate> {
    let unknown = estimate_unknown(design, frequencies)?;
    let mut theta = vec![0.0; design.known_mask.len()];
    for (&j, v) in design.known_indices.iter().zip(&design.known_values) {
        theta[j] = *v;
    }
    for (&j, v) in design.unknown_indices.iter().zip(&unknown) {
        theta[j] = *v;
    }
    let state = BlochState::in_basis(basis, theta).with_known_mask(design.known_mask.clone());
    let rho = bloch_to_density(&state, basis)?;
    let min_eigenvalue = eigvalsh(&rho)[0];
    Ok(Estimate { state, min_eigenvalue, physical: min_eigenvalue >= -POSITIVITY_TOL })
}

/// Variance `(1 − ⟨λ,θ⟩²)/λ₃²` of the single-projection qubit estimator of
/// `θ₃`, in Pauli units (`ρ = (I + θ·σ)/2`, effect `(I + λ·σ)/2`).
pub fn qubit_variance(lambda: [f64; 3], theta: [f64; 3]) -> Result<f64> {
    let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameters(format!("|lambda| = {norm}, expected 1")));
    }
    if lambda[2] == 0.0 {
        return Err(Error::NonEstimatingDirection);
    }
    let dot: f64 = lambda.iter().zip(&theta).map(|(a, b)| a * b).sum();
    Ok((1.0 - dot * dot) / (lambda[2] * lambda[2]))
}

/// Multinomial covariance of `d` outcome frequencies (one shot):
/// `W_ii = p_i(1 − p_i)`, `W_ij = −p_ip_j`.
pub fn covariance_w(p: &[f64]) -> Result<RMatrix> {
    let tol = 1e-12;
    if let Some(bad) = p.iter().find(|v| !(-tol..=1.0 + tol).contains(*v)) {
        return Err(Error::InvalidProbability(format!("p = {bad} outside [0, 1]")));
    }
    let total: f64 = p.iter().sum();
    if total > 1.0 + tol {
        return Err(Error::InvalidProbability(format!("probabilities sum to {total} > 1")));
    }
    let d = p.len();
    Ok(RMatrix::from_fn(d, d, |i, j| if i == j { p[i] * (1.0 - p[i]) } else { -p[i] * p[j] }))
}

/// Covariance of independent Bernoulli outcomes: `diag(p_i(1 − p_i))`.
pub fn covariance_w_independent(p: &[f64]) -> Result<RMatrix> {
    let tol = 1e-12;
    if let Some(bad) = p.iter().find(|v| !(-tol..=1.0 + tol).contains(*v)) {
        return Err(Error::InvalidProbability(format!("p = {bad} outside [0, 1]")));
    }
    let d = p.len();
    Ok(RMatrix::from_fn(d, d, |i, j| if i == j { p[i] * (1.0 - p[i]) } else { 0.0 }))
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorMatrices {
    pub probabilities: Vec<f64>,
    #[serde(with = "crate::serde_matrix::real")]
    pub w: RMatrix,
    /// Single-shot covariance of the estimate, `T⁻¹W(T⁻¹)ᵀ`.
    #[serde(with = "crate::serde_matrix::real")]
    pub v: RMatrix,
}

impl ErrorMatrices {
    /// Covariance of the estimate from `m` shots, `V/m`.
    pub fn per_shots(&self, m: usize) -> RMatrix {
        self.v.scale(1.0 / m as f64)
    }

    pub fn min_eigenvalues(&self) -> (f64, f64) {
        (min_eigenvalue_sym(&self.w), min_eigenvalue_sym(&self.v))
    }
}

/// `T⁻¹ W (T⁻¹)ᵀ` with a symmetric result.
pub fn propagate(t_inv: &RMatrix, w: &RMatrix) -> RMatrix {
    let mut v = t_inv * w * t_inv.transpose();
    symmetrize(&mut v);
    v
}

/// Single-shot error matrices of the design at `state`.
pub fn error_matrix(design: &DesignMatrices, state: &BlochState) -> Result<ErrorMatrices> {
    let p = design.probabilities_at(state)?;
    let w = match design.kind {
        DesignKind::Povm => covariance_w(&p)?,
        DesignKind::VonNeumann => covariance_w_independent(&p)?,
    };
    let v = propagate(&design.t_inv, &w);
    Ok(ErrorMatrices { probabilities: p, w, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, density_to_bloch, from_qubit_pauli};
    use crate::linalg::{identity, qubit_from_pauli_vector};
    use crate::measurement::{
        probabilities, tetrahedron_povm, trine_povm, two_qubit_marginal_mask,
        two_qubit_optimal_family,
    };
    use std::f64::consts::FRAC_1_SQRT_2;

    fn sigma3_effect() -> VonNeumannFamily {
        VonNeumannFamily::new(2, vec![qubit_from_pauli_vector([0.0, 0.0, 1.0])]).unwrap()
    }

    #[test]
    fn tetrahedron_design_is_invertible() {
        let b = build_basis(2).unwrap();
        let d = build_design(&tetrahedron_povm(), &[false; 3], &b).unwrap();
        assert_eq!(d.unknowns(), 3);
        assert!(d.det_t.abs() > 1e-3);
        let prod = &d.t * &d.t_inv;
        assert!((prod - RMatrix::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn trine_design_with_sigma3_known() {
        let b = build_basis(2).unwrap();
        let d = build_design(&trine_povm(), &[false, false, true], &b).unwrap();
        assert_eq!(d.unknowns(), 2);
        assert!(d.det_t.abs() > 1e-3);
    }

    #[test]
    fn diagonal_povm_is_singular() {
        let b = build_basis(2).unwrap();
        let mut e0 = CMatrix::zeros(2, 2);
        e0[(0, 0)] = crate::linalg::ONE * 0.5;
        let mut e1 = CMatrix::zeros(2, 2);
        e1[(1, 1)] = crate::linalg::ONE * 0.5;
        let e2 = identity(2) - &e0 - &e1;
        let e3 = CMatrix::zeros(2, 2);
        let p = Povm::new(2, vec![e0, e1, e2.scale(0.5), e3]).unwrap();
        assert!(matches!(build_design(&p, &[false; 3], &b), Err(Error::SingularDesign(_))));
    }

    #[test]
    fn outcome_count_errors() {
        let b = build_basis(2).unwrap();
        assert!(matches!(
            build_design(&trine_povm(), &[false; 3], &b),
            Err(Error::UnderdeterminedDesign { outcomes: 3, unknowns: 3 })
        ));
        assert!(matches!(
            build_design(&tetrahedron_povm(), &[false, false, true], &b),
            Err(Error::OvercompleteDesign { .. })
        ));
    }

    #[test]
    fn two_qubit_family_design_is_identity() {
        // With the normalized Pauli-product basis, Tr((I + σ_ij)/2 · σ_kl/2)
        // = Tr(σ_ij σ_kl)/4 = δ.
        let pb = OperatorBasis::pauli_product(2).unwrap();
        let mask = two_qubit_marginal_mask(&pb);
        let f = two_qubit_optimal_family();
        let d = build_design_vn(&f, &mask, &pb).unwrap();
        assert_eq!(d.unknowns(), 9);
        // Effects are ordered by the listed pairs, basis columns
        // lexicographically, so T is a permutation matrix.
        let mut tt = &d.t * d.t.transpose();
        symmetrize(&mut tt);
        assert!((tt - RMatrix::identity(9, 9)).abs().max() < 1e-14);
        assert!((d.det_t.abs() - 1.0).abs() < 1e-14);
        for i in 0..9 {
            let row_max = (0..9).map(|j| d.t[(i, j)].abs()).fold(0.0, f64::max);
            assert!((row_max - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_sigma3_effect_design() {
        let b = build_basis(2).unwrap();
        let d = build_design_vn(&sigma3_effect(), &[true, true, false], &b).unwrap();
        assert_eq!(d.unknowns(), 1);
        assert!((d.t[(0, 0)] - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn effect_without_unknown_component_is_singular() {
        let b = build_basis(2).unwrap();
        let f = VonNeumannFamily::new(2, vec![qubit_from_pauli_vector([1.0, 0.0, 0.0])]).unwrap();
        assert!(matches!(
            build_design_vn(&f, &[true, true, false], &b),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn noiseless_inversion_recovers_state() {
        let b = build_basis(2).unwrap();
        let p = tetrahedron_povm();
        let d = build_design(&p, &[false; 3], &b).unwrap();
        let s = BlochState::new(2, from_qubit_pauli(&[0.2, -0.3, 0.5]));
        let probs = probabilities(&s, &p, &b).unwrap();
        let est = estimate(&d, &probs[..3], &b).unwrap();
        for (a, t) in est.state.theta.iter().zip(&s.theta) {
            assert!((a - t).abs() < 1e-12);
        }
        assert!(est.physical);
    }

    #[test]
    fn sigma3_estimator_is_two_nu_minus_one() {
        let b = build_basis(2).unwrap();
        let d = build_design_vn(&sigma3_effect(), &[true, true, false], &b)
            .unwrap()
            .with_known_values(&from_qubit_pauli(&[0.3, -0.1]))
            .unwrap();
        for nu in [0.0, 0.25, 0.8, 1.0] {
            let est = estimate(&d, &[nu], &b).unwrap();
            let theta3_pauli = est.unknown()[0] * 2f64.sqrt();
            assert!((theta3_pauli - (2.0 * nu - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_frequencies_give_mixed_state() {
        let b = build_basis(2).unwrap();
        let d = build_design(&tetrahedron_povm(), &[false; 3], &b).unwrap();
        let est = estimate(&d, &[0.25, 0.25, 0.25], &b).unwrap();
        assert!(est.state.theta.iter().all(|t| t.abs() < 1e-14));
    }

    #[test]
    fn extreme_frequencies_flagged_unphysical() {
        let b = build_basis(2).unwrap();
        let d = build_design(&tetrahedron_povm(), &[false; 3], &b).unwrap();
        let est = estimate(&d, &[1.0, 0.0, 0.0], &b).unwrap();
        // ν = (1,0,0) inverts to 3× the +z projector's Bloch vector.
        assert!(!est.physical);
        assert!(est.min_eigenvalue < -0.5);
        assert!(estimate(&d, &[1.2, 0.0, 0.0], &b).is_err());
    }

    #[test]
    fn qubit_variance_cases() {
        let z = [0.0, 0.0, 1.0];
        let theta = [0.2, -0.4, 0.6];
        assert!((qubit_variance(z, theta).unwrap() - (1.0 - 0.36)).abs() < 1e-15);
        let pure = [0.6, 0.0, 0.8];
        assert!(qubit_variance(pure, pure).unwrap().abs() < 1e-15);
        assert_eq!(qubit_variance(z, [0.0; 3]).unwrap(), 1.0);
        assert_eq!(qubit_variance([1.0, 0.0, 0.0], theta).unwrap_err(), Error::NonEstimatingDirection);
        assert!(qubit_variance([0.5, 0.0, 0.5], theta).is_err());
    }

    #[test]
    fn covariance_w_cases() {
        let w = covariance_w(&[0.5]).unwrap();
        assert_eq!(w[(0, 0)], 0.25);
        let t = 1.0 / 3.0;
        let w = covariance_w(&[t, t, t]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 9.0 } else { -1.0 / 9.0 };
                assert!((w[(i, j)] - want).abs() < 1e-15);
            }
        }
        assert!(covariance_w(&[1.2]).is_err());
        assert!(covariance_w(&[0.7, 0.6]).is_err());
    }

    #[test]
    fn sigma3_error_matrix_matches_variance_formula() {
        let b = build_basis(2).unwrap();
        let d = build_design_vn(&sigma3_effect(), &[true, true, false], &b).unwrap();
        for t3 in [0.0, 0.3, -0.6, 0.9] {
            let s = BlochState::new(2, from_qubit_pauli(&[0.2, 0.1, t3]));
            let em = error_matrix(&d, &s).unwrap();
            // Pauli units: θ = √2 θ_canonical, so Var scales by 2.
            let v_pauli = 2.0 * em.v[(0, 0)];
            assert!((v_pauli - (1.0 - t3 * t3)).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_design_passes_w_through() {
        let b = build_basis(2).unwrap();
        let f = VonNeumannFamily::new(2, vec![qubit_from_pauli_vector([0.0, 0.0, 1.0])]).unwrap();
        let mut d = build_design_vn(&f, &[true, true, false], &b).unwrap();
        d.t = RMatrix::identity(1, 1);
        d.t_inv = RMatrix::identity(1, 1);
        let s = BlochState::new(2, vec![0.0, 0.0, 0.2]);
        let em = error_matrix(&d, &s).unwrap();
        assert_eq!(em.v, em.w);
    }

    #[test]
    fn affine_map_matches_born_rule_with_known_block() {
        let b = build_basis(2).unwrap();
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = crate::linalg::ONE * 0.7;
        rho[(1, 1)] = crate::linalg::ONE * 0.3;
        rho[(0, 1)] = num_complex::Complex64::new(0.1, 0.2);
        rho[(1, 0)] = num_complex::Complex64::new(0.1, -0.2);
        let s = density_to_bloch(&rho, &b).unwrap();
        let p = trine_povm();
        let d = build_design(&p, &[false, false, true], &b).unwrap().for_state(&s).unwrap();
        let born = probabilities(&s, &p, &b).unwrap();
        let affine = d.probabilities_at(&s).unwrap();
        for (x, y) in born.iter().zip(&affine) {
            assert!((x - y).abs() < 1e-14);
        }
        assert_eq!(d.offsets().len(), 2);
    }
}
