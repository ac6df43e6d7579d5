//! Minimization of the averaged error determinant over measurement designs.
//!
//! POVMs are searched through unconstrained Cholesky factors: element `i` is
//! `S^{-1/2}L_iL_i*S^{-1/2}` with `L_i` lower triangular and `S = ΣL_iL_i*`,
//! so every iterate is a valid POVM. Von Neumann families are searched over
//! unitaries `exp(iH_i)` conjugating a fixed spectral template, and scored by
//! `1/det(T)²`, which is the averaged determinant up to a constant when all
//! effects share a spectrum.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::OperatorBasis;
use crate::error::{Error, Result};
use crate::estimation::{build_design, build_design_any, DesignMatrices};
use crate::linalg::{eigh, trace, trace_product_re, CMatrix, RMatrix};
use crate::measurement::{check_sic, quasi_orthogonal_residual, Design, Povm, SicReport, Tolerances, VonNeumannFamily};
use crate::prior::{avg_error_matrix_design, InvariantPrior};
use crate::random::{diag_real, normalize_elements, rng_for};
use crate::simplex::{coordinate_descent, nelder_mead, Minimum, SearchOptions};

/// Constraint residual allowed in a converged result.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Largest dimension the optimizer accepts.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignShape {
    /// A single POVM; `outcomes` must be the number of unknowns plus one.
    Povm { outcomes: usize },
    /// `effects` two-outcome measurements sharing `spectrum`.
    VonNeumann { effects: usize, spectrum: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    #[default]
    GellMann,
    PauliProduct,
}

impl BasisKind {
    pub fn build(self, dim: usize) -> Result<OperatorBasis> {
        match self {
            BasisKind::GellMann => OperatorBasis::gell_mann(dim),
            BasisKind::PauliProduct => {
                if !dim.is_power_of_two() || dim < 2 {
                    return Err(Error::InvalidDimension(dim));
                }
                OperatorBasis::pauli_product(dim.trailing_zeros() as usize)
            }
        }
    }
}

fn default_restarts() -> usize {
    32
}
fn default_max_iters() -> usize {
    20_000
}
fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub dim: usize,
    pub design: DesignShape,
    #[serde(default)]
    pub basis: BasisKind,
    /// Known basis directions; empty means nothing is known.
    #[serde(default)]
    pub known_mask: Vec<bool>,
    pub prior: InvariantPrior,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl OptimizationProblem {
    pub fn povm(dim: usize, outcomes: usize, prior: InvariantPrior) -> Self {
        Self {
            dim,
            design: DesignShape::Povm { outcomes },
            basis: BasisKind::GellMann,
            known_mask: Vec::new(),
            prior,
            seed: 0,
            restarts: default_restarts(),
            max_iters: default_max_iters(),
            tol: default_tol(),
        }
    }

    pub fn von_neumann(dim: usize, effects: usize, spectrum: Vec<f64>, prior: InvariantPrior) -> Self {
        Self { design: DesignShape::VonNeumann { effects, spectrum }, ..Self::povm(dim, 0, prior) }
    }

    pub fn basis(&self) -> Result<OperatorBasis> {
        self.basis.build(self.dim)
    }

    /// The known mask with the empty shorthand expanded.
    pub fn mask(&self, basis: &OperatorBasis) -> Result<Vec<bool>> {
        let mask = if self.known_mask.is_empty() { vec![false; basis.len()] } else { self.known_mask.clone() };
        basis.check_mask(&mask)?;
        Ok(mask)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.dim > MAX_DIM {
            return Err(Error::InvalidDimension(self.dim));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameters(format!("tol must be positive, got {}", self.tol)));
        }
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidParameters("restarts and max_iters must be positive".into()));
        }
        if self.prior.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: self.prior.dim });
        }
        let basis = self.basis()?;
        let d = self.mask(&basis)?.iter().filter(|k| !**k).count();
        match &self.design {
            DesignShape::Povm { outcomes } => {
                if *outcomes < d + 1 {
                    return Err(Error::UnderdeterminedDesign { outcomes: *outcomes, unknowns: d });
                }
                if *outcomes > d + 1 {
                    return Err(Error::OvercompleteDesign { outcomes: *outcomes, expected: d + 1, unknowns: d });
                }
            }
            DesignShape::VonNeumann { effects, spectrum } => {
                if *effects != d {
                    return Err(Error::InvalidParameters(format!("{effects} effects for {d} unknowns")));
                }
                if spectrum.len() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: spectrum.len() });
                }
                if spectrum.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::InvalidParameters("spectrum must lie in [0, 1]".into()));
                }
            }
        }
        Ok(())
    }

    fn parameter_count(&self) -> usize {
        let n2 = self.dim * self.dim;
        match &self.design {
            DesignShape::Povm { outcomes } => outcomes * n2,
            DesignShape::VonNeumann { effects, .. } => effects * n2,
        }
    }

    /// Maps a parameter vector to a design.
    pub fn decode(&self, x: &[f64]) -> Design {
        match &self.design {
            DesignShape::Povm { outcomes } => Design::Povm(povm_from_params(self.dim, *outcomes, x)),
            DesignShape::VonNeumann { effects, spectrum } => {
                Design::VonNeumann(family_from_params(spectrum, *effects, x))
            }
        }
    }
}

/// Lower-triangular factor from `n²` reals: the diagonal, then real and
/// imaginary parts of the strictly lower entries row by row.
fn lower_factor(n: usize, x: &[f64]) -> CMatrix {
    let mut l = CMatrix::zeros(n, n);
    let mut idx = n;
    for r in 0..n {
        l[(r, r)] = Complex64::new(x[r], 0.0);
        for c in 0..r {
            l[(r, c)] = Complex64::new(x[idx], x[idx + 1]);
            idx += 2;
        }
    }
    l
}

/// Hermitian matrix from `n²` reals: the diagonal, then the strictly upper
/// entries.
fn hermitian_from(n: usize, x: &[f64]) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    let mut idx = n;
    for r in 0..n {
        h[(r, r)] = Complex64::new(x[r], 0.0);
        for c in (r + 1)..n {
            let z = Complex64::new(x[idx], x[idx + 1]);
            h[(r, c)] = z;
            h[(c, r)] = z.conj();
            idx += 2;
        }
    }
    h
}

/// `exp(iH)` for Hermitian `H`.
fn unitary_exp(h: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let mut d = CMatrix::zeros(n, n);
    for (k, v) in vals.iter().enumerate() {
        d[(k, k)] = Complex64::from_polar(1.0, *v);
    }
    &vecs * d * vecs.adjoint()
}

pub fn povm_from_params(n: usize, k: usize, x: &[f64]) -> Povm {
    let n2 = n * n;
    let raw = (0..k)
        .map(|i| {
            let l = lower_factor(n, &x[i * n2..(i + 1) * n2]);
            &l * l.adjoint()
        })
        .collect();
    normalize_elements(n, raw)
}

pub fn family_from_params(spectrum: &[f64], d: usize, x: &[f64]) -> VonNeumannFamily {
    let n = spectrum.len();
    let n2 = n * n;
    let template = diag_real(spectrum);
    let effects = (0..d)
        .map(|i| {
            let u = unitary_exp(&hermitian_from(n, &x[i * n2..(i + 1) * n2]));
            &u * &template * u.adjoint()
        })
        .collect();
    VonNeumannFamily { dim: n, effects }
}

/// `|det T|` of a von Neumann family over the unknown directions; zero for a
/// singular design.
pub fn vn_det_t(f: &VonNeumannFamily, known_mask: &[bool], basis: &OperatorBasis) -> Result<f64> {
    if f.dim != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: f.dim });
    }
    basis.check_mask(known_mask)?;
    let unknown: Vec<usize> = (0..known_mask.len()).filter(|&j| !known_mask[j]).collect();
    if f.len() != unknown.len() {
        return Err(Error::DimensionMismatch { expected: unknown.len(), got: f.len() });
    }
    let d = unknown.len();
    let t = RMatrix::from_fn(d, d, |i, j| trace_product_re(&f.effects[i], basis.element(unknown[j])));
    Ok(t.determinant().abs())
}

/// Removes each effect's components along the known directions. With
/// `keep_norm` the remaining traceless part is rescaled to the original
/// Hilbert–Schmidt norm, the quantity a shared spectrum pins down.
pub fn project_out_known(
    f: &VonNeumannFamily,
    known_mask: &[bool],
    basis: &OperatorBasis,
    keep_norm: bool,
) -> Result<VonNeumannFamily> {
    basis.check_mask(known_mask)?;
    let n = f.dim as f64;
    let effects = f
        .effects
        .iter()
        .map(|e| {
            let coeffs = basis.coefficients(e);
            let before: f64 = coeffs.iter().map(|c| c * c).sum();
            let kept: Vec<f64> =
                coeffs.iter().zip(known_mask).map(|(c, k)| if *k { 0.0 } else { *c }).collect();
            let after: f64 = kept.iter().map(|c| c * c).sum();
            let scale = if keep_norm && after > 0.0 { (before / after).sqrt() } else { 1.0 };
            let kept: Vec<f64> = kept.iter().map(|c| c * scale).collect();
            let mut out = basis.expand(&kept);
            let shift = trace(e) / n;
            for i in 0..f.dim {
                out[(i, i)] += shift;
            }
            out
        })
        .collect();
    Ok(VonNeumannFamily { dim: f.dim, effects })
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    /// Rescaled-projector constants; POVM designs only.
    pub sic: Option<SicReport>,
    /// Largest quasi-orthogonality residual over pairs of design operators.
    pub max_pairwise_residual: f64,
    /// Largest `|Tr(Eσ_j)|` over operators and known directions.
    pub max_known_residual: f64,
    pub abs_det_t: f64,
}

pub fn structure_report(design: &Design, known_mask: &[bool], basis: &OperatorBasis) -> Result<StructureReport> {
    let ops = design.operators();
    let mut max_pairwise_residual = 0.0f64;
    for i in 0..ops.len() {
        for j in (i + 1)..ops.len() {
            max_pairwise_residual = max_pairwise_residual.max(quasi_orthogonal_residual(&ops[i], &ops[j]));
        }
    }
    let mut max_known_residual = 0.0f64;
    for (s, _) in basis.elements().iter().zip(known_mask).filter(|(_, k)| **k) {
        for e in ops {
            max_known_residual = max_known_residual.max(quasi_orthogonal_residual(e, s));
        }
    }
    let (sic, abs_det_t) = match design {
        Design::Povm(p) => (Some(check_sic(p, known_mask, basis)?), build_design(p, known_mask, basis)?.det_t.abs()),
        Design::VonNeumann(f) => (None, vn_det_t(f, known_mask, basis)?),
    };
    Ok(StructureReport { sic, max_pairwise_residual, max_known_residual, abs_det_t })
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub design: Design,
    /// Value of the searched objective at `design`.
    pub objective: f64,
    /// Determinant of the prior-averaged error matrix at `design`.
    pub averaged_determinant: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest validation violation of the returned design.
    pub constraint_residual: f64,
    pub seed: u64,
    /// Index of the winning restart.
    pub restart: usize,
    pub feasible_restarts: usize,
    pub trace_len: usize,
    /// Best objective after each iteration of the winning restart.
    #[serde(skip)]
    pub trace: Vec<f64>,
    pub structure_report: StructureReport,
}

/// Objective used by the search for a decoded design.
pub fn design_objective(
    problem: &OptimizationProblem,
    design: &Design,
    known_mask: &[bool],
    basis: &OperatorBasis,
) -> f64 {
    let dm = match build_design_any(design, known_mask, basis) {
        Ok(dm) => dm,
        Err(_) => return f64::INFINITY,
    };
    match problem.design {
        DesignShape::Povm { .. } => averaged(&dm, &problem.prior, basis),
        DesignShape::VonNeumann { .. } => 1.0 / (dm.det_t * dm.det_t),
    }
}

fn averaged(dm: &DesignMatrices, prior: &InvariantPrior, basis: &OperatorBasis) -> f64 {
    match avg_error_matrix_design(dm, prior, basis) {
        Ok(r) if !r.degenerate => r.det_value,
        _ => f64::INFINITY,
    }
}

fn max_violation(design: &Design) -> f64 {
    let tol = Tolerances { positivity: 0.0, completeness: 0.0, hermitian: 0.0, ..Default::default() };
    design.validate_with(&tol).iter().map(|v| v.magnitude).fold(0.0, f64::max)
}

struct RestartOutcome {
    restart: usize,
    min: Minimum,
}

pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    problem.validate()?;
    let basis = problem.basis()?;
    let mask = problem.mask(&basis)?;
    let objective = |x: &[f64]| design_objective(problem, &problem.decode(x), &mask, &basis);
    let opts = SearchOptions { max_iters: problem.max_iters, tol: problem.tol, patience: 50, initial_step: 0.5 };
    let fine = SearchOptions { initial_step: 0.05, ..opts };
    let params = problem.parameter_count();

    let outcomes: Vec<RestartOutcome> = (0..problem.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = rng_for(problem.seed, restart as u64);
            let x0: Vec<f64> = (0..params).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let first = nelder_mead(objective, &x0, &opts);
            let mut second = nelder_mead(objective, &first.x, &fine);
            second.iterations += first.iterations;
            let mut trace = first.trace;
            trace.extend(second.trace.iter().map(|v| v.min(first.value)));
            second.trace = trace;
            if second.value > first.value {
                second.x = first.x;
                second.value = first.value;
            }
            let polish_opts = SearchOptions { max_iters: 2_000, ..fine };
            let min = coordinate_descent(objective, second, 1e-10, &polish_opts);
            RestartOutcome { restart, min }
        })
        .collect();

    let feasible_restarts = outcomes.iter().filter(|o| o.min.value.is_finite()).count();
    let best = outcomes
        .into_iter()
        .filter(|o| o.min.value.is_finite())
        .min_by(|a, b| a.min.value.total_cmp(&b.min.value).then(a.restart.cmp(&b.restart)))
        .ok_or(Error::Infeasible(problem.restarts))?;

    let design = problem.decode(&best.min.x);
    let dm = build_design_any(&design, &mask, &basis)?;
    let averaged_determinant = averaged(&dm, &problem.prior, &basis);
    let constraint_residual = max_violation(&design);
    let structure_report = structure_report(&design, &mask, &basis)?;
    Ok(OptimizationResult {
        objective: best.min.value,
        averaged_determinant,
        iterations: best.min.iterations,
        converged: best.min.converged && constraint_residual < FEASIBILITY_TOL,
        constraint_residual,
        seed: problem.seed,
        restart: best.restart,
        feasible_restarts,
        trace_len: best.min.trace.len(),
        trace: best.min.trace,
        structure_report,
        design,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::linalg::{identity, max_abs_entry, qubit_from_pauli_vector};
    use crate::measurement::{two_qubit_marginal_mask, two_qubit_optimal_family, validate_family, validate_povm};
    use crate::random::random_family;

    #[test]
    fn parametrization_is_always_a_povm() {
        let mut rng = rng_for(2, 0);
        for _ in 0..20 {
            let x: Vec<f64> = (0..36).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let p = povm_from_params(3, 4, &x);
            assert!(validate_povm(&p).is_empty());
        }
    }

    #[test]
    fn family_parametrization_keeps_spectrum() {
        let mut rng = rng_for(3, 0);
        let x: Vec<f64> = (0..27).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let f = family_from_params(&[0.0, 0.4, 1.0], 3, &x);
        assert!(validate_family(&f).is_empty());
        for e in &f.effects {
            let ev = crate::linalg::eigvalsh(e);
            assert!((ev[0]).abs() < 1e-12 && (ev[1] - 0.4).abs() < 1e-12 && (ev[2] - 1.0).abs() < 1e-12);
        }
        assert!(max_abs_entry(&(unitary_exp(&CMatrix::zeros(3, 3)) - identity(3))) < 1e-15);
    }

    #[test]
    fn det_t_single_effect() {
        let basis = build_basis(2).unwrap();
        let f = VonNeumannFamily { dim: 2, effects: vec![qubit_from_pauli_vector([0.0, 0.0, 1.0])] };
        let v = vn_det_t(&f, &[true, true, false], &basis).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn two_qubit_family_dominates_random_families() {
        let basis = OperatorBasis::pauli_product(2).unwrap();
        let mask = two_qubit_marginal_mask(&basis);
        let best = vn_det_t(&two_qubit_optimal_family(), &mask, &basis).unwrap();
        assert!((best - 1.0).abs() < 1e-12);
        let mut rng = rng_for(8, 0);
        for _ in 0..50 {
            let f = random_family(&[0.0, 0.0, 1.0, 1.0], 9, &mut rng);
            let v = vn_det_t(&f, &mask, &basis).unwrap();
            assert!(v <= best);
            let plain = vn_det_t(&project_out_known(&f, &mask, &basis, false).unwrap(), &mask, &basis).unwrap();
            assert!((plain - v).abs() <= 1e-12 * v.max(1e-300));
            let renorm = vn_det_t(&project_out_known(&f, &mask, &basis, true).unwrap(), &mask, &basis).unwrap();
            assert!(renorm >= v);
        }
    }

    #[test]
    fn problem_validation() {
        let prior = InvariantPrior::pure(2).unwrap();
        assert!(matches!(
            OptimizationProblem::povm(2, 3, prior.clone()).validate(),
            Err(Error::UnderdeterminedDesign { .. })
        ));
        assert!(matches!(
            OptimizationProblem::povm(2, 5, prior.clone()).validate(),
            Err(Error::OvercompleteDesign { .. })
        ));
        let mut p = OptimizationProblem::povm(2, 4, prior);
        p.tol = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn qubit_complementary_pair_is_found() {
        // σ₃ known: two projections should become complementary to σ₃ and
        // to each other.
        let prior = InvariantPrior::pure(2).unwrap();
        let mut p = OptimizationProblem::von_neumann(2, 2, vec![0.0, 1.0], prior);
        p.known_mask = vec![false, false, true];
        p.restarts = 4;
        p.seed = 1;
        let r = optimize(&p).unwrap();
        assert!(r.structure_report.max_pairwise_residual < 1e-4, "{:?}", r.structure_report);
        assert!(r.structure_report.max_known_residual < 1e-4);
        assert!((r.structure_report.abs_det_t - 0.5).abs() < 1e-6);
    }

    #[test]
    fn optimization_is_reproducible() {
        let prior = InvariantPrior::pure(2).unwrap();
        let mut p = OptimizationProblem::povm(2, 4, prior);
        p.restarts = 3;
        p.max_iters = 500;
        p.seed = 4;
        let a = optimize(&p).unwrap();
        let b = optimize(&p).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.design, b.design);
        assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.constraint_residual < FEASIBILITY_TOL);
    }
}
