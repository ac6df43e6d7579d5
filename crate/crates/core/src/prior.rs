//! Unitarily invariant priors and the determinant objective averaged over
//! them, in closed form and by Monte Carlo.
//!
//! The probabilities of a design are affine in the full Bloch vector,
//! `p = e₀ + Mθ`, so averaging the single-shot covariance `W` only needs the
//! first two moments of the prior:
//! `W̄ = diag(p̄) − p̄p̄ᵀ − MΣMᵀ` with `p̄ = e₀ + M·mean` and `Σ` the prior
//! covariance. For a Haar orbit the mean vanishes and `Σ = αI`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{density_to_bloch, BlochState, OperatorBasis};
use crate::error::{Error, Result};
use crate::estimation::{build_design, error_matrix, propagate, DesignKind, DesignMatrices};
use crate::linalg::{min_eigenvalue_sym, pauli, qubit_from_pauli_vector, symmetrize, trace_product_re, RMatrix};
use crate::measurement::Povm;
use crate::random::{diag_real, orbit_state, rng_for};

/// Eigenvalues of the averaged matrix below this make the objective `0`.
pub const DEGENERATE_EIG_TOL: f64 = 1e-14;

/// Family of invariant states. Qubit kinds use Pauli units
/// (`ρ = (I + θ·σ)/2`) for their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKind {
    /// `UρU*` for Haar-random `U` and `ρ = diag(spectrum)`.
    HaarOrbit { spectrum: Vec<f64> },
    /// `(θ₁, θ₂, ±θ₃)` with equal weights; `θ₁`, `θ₂` known.
    TwoPointQubit {
        theta3: f64,
        #[serde(default)]
        theta1: f64,
        #[serde(default)]
        theta2: f64,
    },
    /// Uniform on the circle `θ₁² + θ₂² = radius²` at fixed `θ₃`.
    CircleQubit { theta3: f64, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorSpec")]
pub struct InvariantPrior {
    pub dim: usize,
    #[serde(flatten)]
    pub kind: PriorKind,
    /// Second moment per varying coordinate, canonical units.
    pub alpha: f64,
}

#[derive(Deserialize)]
struct PriorSpec {
    dim: Option<usize>,
    #[serde(flatten)]
    kind: PriorKind,
}

impl TryFrom<PriorSpec> for InvariantPrior {
    type Error = Error;

    fn try_from(spec: PriorSpec) -> Result<Self> {
        let dim = match (&spec.kind, spec.dim) {
            (_, Some(d)) => d,
            (PriorKind::HaarOrbit { spectrum }, None) => spectrum.len(),
            (_, None) => 2,
        };
        make_prior(dim, spec.kind)
    }
}

/// `α` for a pure-state orbit in dimension `n`: `1/(n(n+1))`.
pub fn alpha_pure(n: usize) -> f64 {
    1.0 / (n * (n + 1)) as f64
}

pub fn make_prior(dim: usize, kind: PriorKind) -> Result<InvariantPrior> {
    let bad = |msg: String| Err(Error::InvalidPrior(msg));
    let alpha = match &kind {
        PriorKind::HaarOrbit { spectrum } => {
            if dim < 2 {
                return Err(Error::InvalidDimension(dim));
            }
            if spectrum.len() != dim {
                return bad(format!("spectrum has {} entries, dimension is {dim}", spectrum.len()));
            }
            if let Some(x) = spectrum.iter().find(|x| !x.is_finite() || **x < -1e-12) {
                return bad(format!("spectrum entry {x} is negative"));
            }
            let total: f64 = spectrum.iter().sum();
            if (total - 1.0).abs() > 1e-10 {
                return bad(format!("spectrum sums to {total}"));
            }
            let purity: f64 = spectrum.iter().map(|x| x * x).sum();
            ((purity - 1.0 / dim as f64) / (dim * dim - 1) as f64).max(0.0)
        }
        PriorKind::TwoPointQubit { theta3, theta1, theta2 } => {
            if dim != 2 {
                return bad(format!("two-point prior needs dimension 2, got {dim}"));
            }
            let r2 = theta1 * theta1 + theta2 * theta2 + theta3 * theta3;
            if !r2.is_finite() || r2 > 1.0 + 1e-12 {
                return bad(format!("|θ|² = {r2} > 1"));
            }
            theta3 * theta3 / 2.0
        }
        PriorKind::CircleQubit { theta3, radius } => {
            if dim != 2 {
                return bad(format!("circle prior needs dimension 2, got {dim}"));
            }
            if !(-1.0..=1.0).contains(theta3) {
                return bad(format!("θ₃ = {theta3} outside [−1, 1]"));
            }
            if !radius.is_finite() || *radius < 0.0 || radius * radius > 1.0 - theta3 * theta3 + 1e-12 {
                return bad(format!("radius² = {} exceeds 1 − θ₃²", radius * radius));
            }
            radius * radius / 4.0
        }
    };
    Ok(InvariantPrior { dim, kind, alpha })
}

impl InvariantPrior {
    pub fn haar_orbit(spectrum: Vec<f64>) -> Result<Self> {
        make_prior(spectrum.len(), PriorKind::HaarOrbit { spectrum })
    }

    /// Orbit of a pure state.
    pub fn pure(n: usize) -> Result<Self> {
        let mut spectrum = vec![0.0; n];
        if n > 0 {
            spectrum[0] = 1.0;
        }
        make_prior(n, PriorKind::HaarOrbit { spectrum })
    }

    pub fn two_point_qubit(theta3: f64) -> Result<Self> {
        make_prior(2, PriorKind::TwoPointQubit { theta3, theta1: 0.0, theta2: 0.0 })
    }

    pub fn circle_qubit(theta3: f64, radius: f64) -> Result<Self> {
        make_prior(2, PriorKind::CircleQubit { theta3, radius })
    }

    /// `α` in Pauli units (`2α`), meaningful for qubit priors.
    pub fn alpha_pauli(&self) -> f64 {
        2.0 * self.alpha
    }

    /// Mean and covariance of the Bloch vector in `basis`.
    pub fn moments(&self, basis: &OperatorBasis) -> Result<(Vec<f64>, RMatrix)> {
        self.check_basis(basis)?;
        let len = basis.len();
        match &self.kind {
            PriorKind::HaarOrbit { .. } => {
                Ok((vec![0.0; len], RMatrix::identity(len, len).scale(self.alpha)))
            }
            PriorKind::TwoPointQubit { theta3, theta1, theta2 } => {
                let mean = qubit_coordinates([*theta1, *theta2, 0.0], basis)?;
                let cov = pauli_frame_covariance([0.0, 0.0, theta3 * theta3], basis);
                Ok((mean, cov))
            }
            PriorKind::CircleQubit { theta3, radius } => {
                let mean = qubit_coordinates([0.0, 0.0, *theta3], basis)?;
                let v = radius * radius / 2.0;
                let cov = pauli_frame_covariance([v, v, 0.0], basis);
                Ok((mean, cov))
            }
        }
    }

    /// One state from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, basis: &OperatorBasis, rng: &mut R) -> Result<BlochState> {
        self.check_basis(basis)?;
        match &self.kind {
            PriorKind::HaarOrbit { spectrum } => density_to_bloch(&orbit_state(spectrum, rng), basis),
            PriorKind::TwoPointQubit { theta3, theta1, theta2 } => {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let theta = qubit_coordinates([*theta1, *theta2, sign * theta3], basis)?;
                Ok(BlochState::in_basis(basis, theta))
            }
            PriorKind::CircleQubit { theta3, radius } => {
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                let v = [radius * phi.cos(), radius * phi.sin(), *theta3];
                Ok(BlochState::in_basis(basis, qubit_coordinates(v, basis)?))
            }
        }
    }

    /// The spectrum's diagonal state as a density matrix (orbit priors only).
    pub fn reference_state(&self) -> Option<crate::linalg::CMatrix> {
        match &self.kind {
            PriorKind::HaarOrbit { spectrum } => Some(diag_real(spectrum)),
            _ => None,
        }
    }

    fn check_basis(&self, basis: &OperatorBasis) -> Result<()> {
        if basis.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: basis.dim() });
        }
        Ok(())
    }
}

fn qubit_coordinates(pauli_vector: [f64; 3], basis: &OperatorBasis) -> Result<Vec<f64>> {
    Ok(density_to_bloch(&qubit_from_pauli_vector(pauli_vector), basis)?.theta)
}

/// `R·diag(var)·Rᵀ / 2` where `R_jk = Tr(σ_j^basis σ_k^Pauli)/√2` rotates
/// Pauli-frame canonical coordinates into `basis`.
fn pauli_frame_covariance(pauli_variances: [f64; 3], basis: &OperatorBasis) -> RMatrix {
    let s = pauli();
    let r = RMatrix::from_fn(3, 3, |j, k| {
        trace_product_re(basis.element(j), &s[k]) * std::f64::consts::FRAC_1_SQRT_2
    });
    let d = RMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        3,
        pauli_variances.iter().map(|v| v / 2.0),
    ));
    let mut c = &r * d * r.transpose();
    symmetrize(&mut c);
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMethod {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObjectiveReport {
    /// Prior-averaged single-shot covariance of the unknown block.
    #[serde(with = "crate::serde_matrix::real")]
    pub avg_cov: RMatrix,
    pub det_value: f64,
    pub method: ObjectiveMethod,
    pub mc_stderr: Option<f64>,
    /// An eigenvalue of `avg_cov` fell below the degeneracy threshold and
    /// `det_value` was set to zero.
    pub degenerate: bool,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

fn guarded_det(v: &RMatrix) -> (f64, bool) {
    if v.nrows() > 0 && min_eigenvalue_sym(v) < DEGENERATE_EIG_TOL {
        (0.0, true)
    } else {
        (v.determinant(), false)
    }
}

fn closed_form_report(v: RMatrix) -> ObjectiveReport {
    let (det_value, degenerate) = guarded_det(&v);
    ObjectiveReport {
        avg_cov: v,
        det_value,
        method: ObjectiveMethod::ClosedForm,
        mc_stderr: None,
        degenerate,
        seed: None,
        samples: None,
    }
}

/// `Tr(E_iσ_j)` over every basis direction, known and unknown.
pub fn full_trace_matrix(design: &DesignMatrices) -> RMatrix {
    let d = design.unknowns();
    let mut m = RMatrix::zeros(d, design.known_mask.len());
    for (c, &j) in design.unknown_indices.iter().enumerate() {
        m.set_column(j, &design.t.column(c));
    }
    for (c, &j) in design.known_indices.iter().enumerate() {
        m.set_column(j, &design.known_block.column(c));
    }
    m
}

fn check_prior_design(design: &DesignMatrices, prior: &InvariantPrior, basis: &OperatorBasis) -> Result<()> {
    if design.dim != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: design.dim });
    }
    prior.check_basis(basis)
}

/// Closed-form prior average of the error matrix of any design.
pub fn avg_error_matrix_design(
    design: &DesignMatrices,
    prior: &InvariantPrior,
    basis: &OperatorBasis,
) -> Result<ObjectiveReport> {
    check_prior_design(design, prior, basis)?;
    let (mean, cov) = prior.moments(basis)?;
    let m = full_trace_matrix(design);
    let mean = nalgebra::DVector::from_vec(mean);
    let pbar = nalgebra::DVector::from_vec(design.base_offsets.clone()) + &m * mean;
    let spread = &m * cov * m.transpose();
    let d = pbar.len();
    let w = match design.kind {
        DesignKind::Povm => RMatrix::from_fn(d, d, |i, j| {
            let diag = if i == j { pbar[i] } else { 0.0 };
            diag - pbar[i] * pbar[j] - spread[(i, j)]
        }),
        DesignKind::VonNeumann => RMatrix::from_fn(d, d, |i, j| {
            if i == j {
                pbar[i] - pbar[i] * pbar[i] - spread[(i, i)]
            } else {
                0.0
            }
        }),
    };
    Ok(closed_form_report(propagate(&design.t_inv, &w)))
}

/// Closed-form prior average for a POVM with the given known mask.
pub fn avg_error_matrix(
    p: &Povm,
    prior: &InvariantPrior,
    known_mask: &[bool],
    basis: &OperatorBasis,
) -> Result<ObjectiveReport> {
    let design = build_design(p, known_mask, basis)?;
    avg_error_matrix_design(&design, prior, basis)
}

/// The same average written through `E_i = e_i(I + f_i·σ)`:
/// `F⁻¹[diag(1/e) − 11ᵀ − αG]F⁻ᵀ` with `G_ij = ⟨f_i, f_j⟩`. Needs a Haar
/// orbit prior and no known coordinates.
pub fn avg_error_matrix_gram(p: &Povm, prior: &InvariantPrior, basis: &OperatorBasis) -> Result<ObjectiveReport> {
    if !matches!(prior.kind, PriorKind::HaarOrbit { .. }) {
        return Err(Error::InvalidPrior("the Gram form needs a Haar orbit prior".into()));
    }
    let mask = vec![false; basis.len()];
    let design = build_design(p, &mask, basis)?;
    let d = design.unknowns();
    let e = &design.base_offsets;
    if let Some(i) = e.iter().position(|x| *x <= 0.0) {
        return Err(Error::DegenerateElement(i));
    }
    let f = RMatrix::from_fn(d, d, |i, j| design.t[(i, j)] / e[i]);
    let f_inv = f.clone().try_inverse().ok_or(Error::SingularDesign(0.0))?;
    let g = &f * f.transpose();
    let inner = RMatrix::from_fn(d, d, |i, j| {
        let diag = if i == j { 1.0 / e[i] } else { 0.0 };
        diag - 1.0 - prior.alpha * g[(i, j)]
    });
    Ok(closed_form_report(propagate(&f_inv, &inner)))
}

/// Number of jackknife blocks for `samples` draws.
fn block_count(samples: usize) -> usize {
    samples.min(1000)
}

/// Monte Carlo average of the error matrix over states drawn from the prior.
/// Sample `i` uses stream `i` of `seed`; samples are summed in fixed blocks
/// and blocks in order, so the result does not depend on the thread count.
/// The standard error is a leave-one-block-out jackknife of the determinant.
pub fn avg_error_matrix_mc(
    design: &DesignMatrices,
    prior: &InvariantPrior,
    basis: &OperatorBasis,
    samples: usize,
    seed: u64,
) -> Result<ObjectiveReport> {
    if samples == 0 {
        return Err(Error::InvalidParameters("samples must be at least 1".into()));
    }
    check_prior_design(design, prior, basis)?;
    let d = design.unknowns();
    let blocks = block_count(samples);
    let bounds: Vec<(usize, usize)> =
        (0..blocks).map(|b| (b * samples / blocks, (b + 1) * samples / blocks)).collect();
    let sums = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = RMatrix::zeros(d, d);
            for i in lo..hi {
                let mut rng = rng_for(seed, i as u64);
                let state = prior.sample(basis, &mut rng)?;
                acc += error_matrix(design, &state)?.v;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<RMatrix>>>()?;

    let mut total = RMatrix::zeros(d, d);
    for s in &sums {
        total += s;
    }
    let mut avg = total.scale(1.0 / samples as f64);
    symmetrize(&mut avg);
    let (det_value, degenerate) = guarded_det(&avg);

    let mc_stderr = if blocks > 1 {
        let loo: Vec<f64> = sums
            .iter()
            .zip(&bounds)
            .map(|(s, (lo, hi))| {
                let mut m = (&total - s).scale(1.0 / (samples - (hi - lo)) as f64);
                symmetrize(&mut m);
                guarded_det(&m).0
            })
            .collect();
        let b = blocks as f64;
        let mean = loo.iter().sum::<f64>() / b;
        Some(((b - 1.0) / b * loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>()).sqrt())
    } else {
        None
    };

    Ok(ObjectiveReport {
        avg_cov: avg,
        det_value,
        method: ObjectiveMethod::MonteCarlo,
        mc_stderr,
        degenerate,
        seed: Some(seed),
        samples: Some(samples),
    })
}

/// Sample mean and covariance of the Bloch vector over `samples` prior
/// draws, each entry paired with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub mean: Vec<f64>,
    pub mean_stderr: Vec<f64>,
    #[serde(with = "crate::serde_matrix::real")]
    pub second: RMatrix,
    #[serde(with = "crate::serde_matrix::real")]
    pub second_stderr: RMatrix,
    pub samples: usize,
    pub seed: u64,
}

/// Monte Carlo first and second moments `∫θ_ℓ dμ`, `∫θ_ℓθ_m dμ`.
pub fn sample_moments(
    prior: &InvariantPrior,
    basis: &OperatorBasis,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    if samples < 2 {
        return Err(Error::InvalidParameters("need at least 2 samples".into()));
    }
    let len = basis.len();
    let blocks = block_count(samples);
    let parts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = (b * samples / blocks, (b + 1) * samples / blocks);
            let mut s1 = vec![0.0; len];
            let mut s2 = RMatrix::zeros(len, len);
            let mut s4 = RMatrix::zeros(len, len);
            for i in lo..hi {
                let t = prior.sample(basis, &mut rng_for(seed, i as u64))?.theta;
                for a in 0..len {
                    s1[a] += t[a];
                    for c in 0..len {
                        let x = t[a] * t[c];
                        s2[(a, c)] += x;
                        s4[(a, c)] += x * x;
                    }
                }
            }
            Ok((s1, s2, s4))
        })
        .collect::<Result<Vec<_>>>()?;
    let nf = samples as f64;
    let mut s1 = vec![0.0; len];
    let mut s2 = RMatrix::zeros(len, len);
    let mut s4 = RMatrix::zeros(len, len);
    for (a, b, c) in parts {
        for (x, y) in s1.iter_mut().zip(a) {
            *x += y;
        }
        s2 += b;
        s4 += c;
    }
    let mean: Vec<f64> = s1.iter().map(|x| x / nf).collect();
    let second = s2.scale(1.0 / nf);
    let mean_stderr = (0..len).map(|a| ((second[(a, a)] - mean[a] * mean[a]).max(0.0) / (nf - 1.0)).sqrt()).collect();
    let second_stderr = RMatrix::from_fn(len, len, |a, c| {
        let m = second[(a, c)];
        ((s4[(a, c)] / nf - m * m).max(0.0) / (nf - 1.0)).sqrt()
    });
    Ok(MomentEstimate { mean, mean_stderr, second, second_stderr, samples, seed })
}

/// `(n²/(x−y) − α)^{n²−2}·(1/(x+(n²−2)y) − α)`: the averaged determinant of
/// a symmetric POVM with weights `1/n²`, `⟨f_i,f_i⟩ = x` and `⟨f_i,f_j⟩ = y`.
pub fn symmetric_objective(n: usize, x: f64, y: f64, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let nn = (n * n) as f64;
    let s = x + (nn - 2.0) * y;
    if !(x > y) || !(s > 0.0) {
        return Err(Error::Domain(format!("need x > y and x + (n²−2)y > 0, got x = {x}, y = {y}")));
    }
    Ok((nn / (x - y) - alpha).powi((n * n - 2) as i32) * (1.0 / s - alpha))
}

/// Upper limits of the symmetric Gram structure: `x ≤ n² − n` from
/// positivity of each element, `x + (n²−2)y ≤ (n²−n)/(n²−1)` from positivity
/// of the completion element.
pub fn symmetric_bounds(n: usize) -> (f64, f64) {
    let nn = (n * n) as f64;
    (nn - n as f64, (nn - n as f64) / (nn - 1.0))
}

/// The minimizer `x = n² − n`, `y = −(n²−n)/(n²−1)`.
pub fn symmetric_optimum(n: usize) -> (f64, f64) {
    let (x, _) = symmetric_bounds(n);
    (x, -x / ((n * n - 1) as f64))
}

/// Whether `(x, y)` satisfies the symmetric Gram constraints.
pub fn symmetric_feasible(n: usize, x: f64, y: f64) -> bool {
    let (xmax, smax) = symmetric_bounds(n);
    let s = x + ((n * n) as f64 - 2.0) * y;
    x > y && s > 0.0 && x <= xmax + 1e-12 && s <= smax + 1e-12
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymmetricMinimum {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Numerical minimization of [`symmetric_objective`] over the feasible
/// region, using squared slacks `x = x_max − a²`, `x + (n²−2)y = s_max − b²`.
pub fn minimize_symmetric_objective(n: usize, alpha: f64) -> Result<SymmetricMinimum> {
    use crate::simplex::{coordinate_descent, nelder_mead, SearchOptions};
    let (xmax, smax) = symmetric_bounds(n);
    let k = (n * n) as f64 - 2.0;
    let to_xy = |p: &[f64]| {
        let x = xmax - p[0] * p[0];
        let s = smax - p[1] * p[1];
        (x, (s - x) / k)
    };
    let f = |p: &[f64]| {
        let (x, y) = to_xy(p);
        symmetric_objective(n, x, y, alpha).unwrap_or(f64::INFINITY)
    };
    let opts = SearchOptions { tol: 1e-16, max_iters: 10_000, ..Default::default() };
    let start = [0.7 * xmax.sqrt(), 0.5 * smax.sqrt()];
    let m = nelder_mead(f, &start, &opts);
    let m = coordinate_descent(f, m, 1e-12, &opts);
    let (x, y) = to_xy(&m.x);
    Ok(SymmetricMinimum { x, y, value: m.value, iterations: m.iterations })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PartialObjectives {
    /// `det(D − cC)`.
    pub a: f64,
    /// `det C`.
    pub b: f64,
    /// `d₁₂ − c·c₁₂`.
    pub off_diagonal: f64,
    pub lemma_holds: bool,
}

fn norm3(v: &[f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The two factors of the qubit objective with known `θ₃`, for elements
/// `E₁ = a₀(I + a·σ)`, `E₂ = b₀(I + b·σ)` in Pauli units:
/// `D = [[p/a₀ − p², −pq], [−pq, q/b₀ − q²]]` with `p = 1 + a₃θ₃`,
/// `q = 1 + b₃θ₃`, and `C` the Gram matrix of `(a₁, a₂)`, `(b₁, b₂)`.
pub fn qubit_partial_objectives(
    a: [f64; 3],
    b: [f64; 3],
    a0: f64,
    b0: f64,
    theta3: f64,
    c: f64,
) -> Result<PartialObjectives> {
    let eps = 1e-12;
    if !(a0 > 0.0 && b0 > 0.0) {
        return Err(Error::InvalidParameters(format!("weights must be positive, got {a0}, {b0}")));
    }
    if norm3(&a) > 1.0 + eps || norm3(&b) > 1.0 + eps {
        return Err(Error::InvalidParameters("|a| and |b| must not exceed 1".into()));
    }
    if !(-1.0..=1.0).contains(&theta3) {
        return Err(Error::InvalidParameters(format!("θ₃ = {theta3} outside [−1, 1]")));
    }
    let cmax = 1.0 - theta3 * theta3;
    if !(c >= -eps && c <= cmax + eps) {
        return Err(Error::InvalidParameters(format!("c = {c} outside [0, {cmax}]")));
    }
    let p = 1.0 + a[2] * theta3;
    let q = 1.0 + b[2] * theta3;
    let d11 = p / a0 - p * p;
    let d22 = q / b0 - q * q;
    let d12 = -p * q;
    let c11 = a[0] * a[0] + a[1] * a[1];
    let c22 = b[0] * b[0] + b[1] * b[1];
    let c12 = a[0] * b[0] + a[1] * b[1];
    let off = d12 - c * c12;
    Ok(PartialObjectives {
        a: (d11 - c * c11) * (d22 - c * c22) - off * off,
        b: c11 * c22 - c12 * c12,
        off_diagonal: off,
        lemma_holds: off <= eps,
    })
}
