//! Repeated tomography experiments with ideal Born-rule sampling.
//!
//! A run draws `m` outcomes, forms relative frequencies and applies the
//! linear inversion estimator. POVM runs are multinomial over all `k`
//! outcomes; von Neumann runs measure each effect on its own batch of `m`
//! copies. Run `r` uses RNG stream `r`, and statistics are reduced in run
//! order, so reports are identical for any thread count.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisOrder, BlochState, OperatorBasis, POSITIVITY_TOL};
use crate::error::{Error, Result};
use crate::estimation::{build_design_any, error_matrix, estimate, DesignMatrices};
use crate::linalg::{symmetrize, RMatrix};
use crate::measurement::{family_probabilities, probabilities, Design};
use crate::optimizer::BasisKind;
use crate::random::rng_for;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub design: Design,
    /// The state being measured; its `known_mask` selects the coordinates
    /// that are declared rather than estimated.
    pub true_state: BlochState,
    pub shots: usize,
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalReport {
    pub unknown_labels: Vec<String>,
    pub true_unknown: Vec<f64>,
    pub mean_estimate: Vec<f64>,
    pub mean_stderr: Vec<f64>,
    /// Sample covariance of the estimates over runs.
    #[serde(with = "crate::serde_matrix::real")]
    pub empirical_cov: RMatrix,
    /// Jackknife standard errors of `empirical_cov`; zero with fewer than
    /// three runs.
    #[serde(with = "crate::serde_matrix::real")]
    pub cov_stderr: RMatrix,
    /// `V/m` at the true state.
    #[serde(with = "crate::serde_matrix::real")]
    pub predicted_cov: RMatrix,
    pub unphysical_fraction: f64,
    pub shots: usize,
    pub runs: usize,
    pub seed: u64,
    /// Per-run estimates of the unknown block.
    #[serde(skip)]
    pub estimates: Vec<Vec<f64>>,
    #[serde(skip)]
    pub physical: Vec<bool>,
}

/// Basis named by a state's order tag.
pub fn basis_for_state(state: &BlochState) -> Result<OperatorBasis> {
    if state.basis_order == BasisOrder::PauliProduct.tag() {
        BasisKind::PauliProduct.build(state.dim)
    } else if state.basis_order == BasisOrder::GellMann.tag() {
        BasisKind::GellMann.build(state.dim)
    } else {
        Err(Error::InvalidBasis(format!("cannot rebuild basis '{}'", state.basis_order)))
    }
}

fn normalized_state(state: &BlochState, basis: &OperatorBasis) -> Result<BlochState> {
    if state.theta.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: state.theta.len() });
    }
    let mut s = state.clone();
    if s.known_mask.is_empty() {
        s.known_mask = vec![false; basis.len()];
    }
    basis.check_mask(&s.known_mask)?;
    if !s.is_physical(basis)? {
        return Err(Error::InvalidState("true state is not positive".into()));
    }
    Ok(s)
}

/// Outcome probabilities of every outcome (POVM) or effect (family).
fn outcome_probabilities(design: &Design, state: &BlochState, basis: &OperatorBasis) -> Result<Vec<f64>> {
    let p = match design {
        Design::Povm(p) => probabilities(state, p, basis)?,
        Design::VonNeumann(f) => family_probabilities(state, f, basis)?,
    };
    Ok(p.into_iter().map(|x| x.clamp(0.0, 1.0)).collect())
}

/// Multinomial counts by sequential conditional binomials.
fn multinomial<R: Rng + ?Sized>(m: u64, p: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; p.len()];
    let mut remaining = m;
    let mut mass = 1.0;
    for (i, pi) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == p.len() || mass <= 0.0 {
            counts[i] = remaining;
            break;
        }
        let q = (pi / mass).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, q).map(|b| b.sample(rng)).unwrap_or(0);
        counts[i] = c;
        remaining -= c;
        mass -= pi;
    }
    counts
}

/// Relative frequencies of the estimating outcomes for one run.
fn draw_frequencies<R: Rng + ?Sized>(design: &Design, p: &[f64], d: usize, m: usize, rng: &mut R) -> Vec<f64> {
    let mf = m as f64;
    match design {
        Design::Povm(_) => multinomial(m as u64, p, rng)[..d].iter().map(|c| *c as f64 / mf).collect(),
        Design::VonNeumann(_) => p
            .iter()
            .map(|pi| Binomial::new(m as u64, *pi).map(|b| b.sample(rng)).unwrap_or(0) as f64 / mf)
            .collect(),
    }
}

struct Prepared {
    basis: OperatorBasis,
    state: BlochState,
    design: DesignMatrices,
    probs: Vec<f64>,
}

fn prepare(design: &Design, true_state: &BlochState) -> Result<Prepared> {
    let basis = basis_for_state(true_state)?;
    if design.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: design.dim() });
    }
    let state = normalized_state(true_state, &basis)?;
    let dm = build_design_any(design, &state.known_mask, &basis)?.for_state(&state)?;
    let probs = outcome_probabilities(design, &state, &basis)?;
    Ok(Prepared { basis, state, design: dm, probs })
}

fn simulate_runs(spec: &ExperimentSpec, prep: &Prepared) -> Result<Vec<(Vec<f64>, bool)>> {
    let d = prep.design.unknowns();
    (0..spec.runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(spec.seed, r as u64);
            let nu = draw_frequencies(&spec.design, &prep.probs, d, spec.shots, &mut rng);
            let est = estimate(&prep.design, &nu, &prep.basis)?;
            Ok((est.unknown(), est.physical))
        })
        .collect()
}

pub fn run_experiments(spec: &ExperimentSpec) -> Result<EmpiricalReport> {
    if spec.shots == 0 || spec.runs == 0 {
        return Err(Error::InvalidParameters("shots and runs must be at least 1".into()));
    }
    let prep = prepare(&spec.design, &spec.true_state)?;
    let outcomes = simulate_runs(spec, &prep)?;
    let d = prep.design.unknowns();
    let n = spec.runs;
    let nf = n as f64;

    let mut mean = vec![0.0; d];
    for (x, _) in &outcomes {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / nf;
        }
    }
    let centered: Vec<Vec<f64>> =
        outcomes.iter().map(|(x, _)| x.iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();
    let mut s2 = RMatrix::zeros(d, d);
    for y in &centered {
        for a in 0..d {
            for b in 0..d {
                s2[(a, b)] += y[a] * y[b];
            }
        }
    }
    let mut cov = if n > 1 { s2.scale(1.0 / (nf - 1.0)) } else { RMatrix::zeros(d, d) };
    symmetrize(&mut cov);
    let mean_stderr = (0..d).map(|a| (cov[(a, a)] / nf).sqrt()).collect();

    // Leave-one-out covariances differ from their mean only through the
    // product y_a·y_b of the removed run, which gives the jackknife in O(N).
    let mut cov_stderr = RMatrix::zeros(d, d);
    if n > 2 {
        let c = nf / (nf - 1.0) / (nf - 2.0);
        for a in 0..d {
            for b in a..d {
                let zbar = s2[(a, b)] / nf;
                let ss: f64 = centered.iter().map(|y| (y[a] * y[b] - zbar).powi(2)).sum();
                let se = ((nf - 1.0) / nf * c * c * ss).sqrt();
                cov_stderr[(a, b)] = se;
                cov_stderr[(b, a)] = se;
            }
        }
    }

    let unphysical = outcomes.iter().filter(|(_, ok)| !ok).count();
    let predicted_cov = error_matrix(&prep.design, &prep.state)?.per_shots(spec.shots);
    let unknown_labels =
        prep.design.unknown_indices.iter().map(|&j| prep.basis.labels()[j].clone()).collect();
    let (estimates, physical) = outcomes.into_iter().unzip();
    Ok(EmpiricalReport {
        unknown_labels,
        true_unknown: prep.state.unknown_values(),
        mean_estimate: mean,
        mean_stderr,
        empirical_cov: cov,
        cov_stderr,
        predicted_cov,
        unphysical_fraction: unphysical as f64 / nf,
        shots: spec.shots,
        runs: spec.runs,
        seed: spec.seed,
        estimates,
        physical,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayPoint {
    pub shots: usize,
    pub unphysical_fraction: f64,
    /// Binomial standard error of the fraction.
    pub stderr: f64,
}

/// Fraction of unphysical estimates for each shot count. Each shot count
/// reuses `seed`, with its own run streams.
pub fn unphysical_decay(
    design: &Design,
    true_state: &BlochState,
    shot_counts: &[usize],
    runs: usize,
    seed: u64,
) -> Result<Vec<DecayPoint>> {
    let prep = prepare(design, true_state)?;
    if prep.state.min_eigenvalue(&prep.basis)? <= POSITIVITY_TOL {
        return Err(Error::InvalidState("true state must have full rank".into()));
    }
    shot_counts
        .iter()
        .map(|&shots| {
            let spec = ExperimentSpec { design: design.clone(), true_state: prep.state.clone(), shots, runs, seed };
            let r = run_experiments(&spec)?;
            let f = r.unphysical_fraction;
            Ok(DecayPoint { shots, unphysical_fraction: f, stderr: (f * (1.0 - f) / runs as f64).sqrt() })
        })
        .collect()
}

/// Per-run estimates as CSV: `run, <unknown labels…>, physical`.
pub fn write_estimates_csv<W: Write>(report: &EmpiricalReport, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidParameters(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["run".to_string()];
    header.extend(report.unknown_labels.iter().cloned());
    header.push("physical".into());
    w.write_record(&header).map_err(io)?;
    for (r, (x, ok)) in report.estimates.iter().zip(&report.physical).enumerate() {
        let mut row = vec![r.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        row.push(ok.to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidParameters(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, from_qubit_pauli};
    use crate::linalg::qubit_from_pauli_vector;
    use crate::measurement::{tetrahedron_povm, VonNeumannFamily};

    fn sigma3_spec(theta3: f64, shots: usize, runs: usize) -> ExperimentSpec {
        let basis = build_basis(2).unwrap();
        let f = VonNeumannFamily { dim: 2, effects: vec![qubit_from_pauli_vector([0.0, 0.0, 1.0])] };
        let state = BlochState::in_basis(&basis, from_qubit_pauli(&[0.0, 0.0, theta3]))
            .with_known_mask(vec![true, true, false]);
        ExperimentSpec { design: Design::VonNeumann(f), true_state: state, shots, runs, seed: 17 }
    }

    #[test]
    fn multinomial_counts_add_up() {
        let mut rng = rng_for(1, 0);
        let c = multinomial(1000, &[0.2, 0.5, 0.0, 0.3], &mut rng);
        assert_eq!(c.iter().sum::<u64>(), 1000);
        assert_eq!(c[2], 0);
    }

    #[test]
    fn single_effect_variance() {
        let r = run_experiments(&sigma3_spec(0.6, 1, 20_000)).unwrap();
        // canonical variance is (1 − θ₃²)/2
        let target = 0.32;
        assert!((r.empirical_cov[(0, 0)] - target).abs() < 5.0 * r.cov_stderr[(0, 0)]);
        assert!((r.predicted_cov[(0, 0)] - target).abs() < 1e-12);
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let basis = build_basis(2).unwrap();
        let state = BlochState::in_basis(&basis, from_qubit_pauli(&[0.2, -0.1, 0.4]));
        let spec = ExperimentSpec { design: Design::Povm(tetrahedron_povm()), true_state: state, shots: 50, runs: 300, seed: 5 };
        let a = run_experiments(&spec).unwrap();
        let b = run_experiments(&spec).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.empirical_cov, b.empirical_cov);
        for (m, (t, se)) in a.mean_estimate.iter().zip(a.true_unknown.iter().zip(&a.mean_stderr)) {
            assert!((m - t).abs() < 4.0 * se);
        }
    }

    #[test]
    fn jackknife_matches_brute_force() {
        let basis = build_basis(2).unwrap();
        let state = BlochState::in_basis(&basis, from_qubit_pauli(&[0.1, 0.3, -0.2]));
        let spec = ExperimentSpec { design: Design::Povm(tetrahedron_povm()), true_state: state, shots: 20, runs: 40, seed: 8 };
        let r = run_experiments(&spec).unwrap();
        let n = r.runs;
        let loo: Vec<RMatrix> = (0..n)
            .map(|i| {
                let xs: Vec<&Vec<f64>> = r.estimates.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x).collect();
                let m = xs.len() as f64;
                let mean: Vec<f64> = (0..3).map(|a| xs.iter().map(|x| x[a]).sum::<f64>() / m).collect();
                RMatrix::from_fn(3, 3, |a, b| {
                    xs.iter().map(|x| (x[a] - mean[a]) * (x[b] - mean[b])).sum::<f64>() / (m - 1.0)
                })
            })
            .collect();
        for a in 0..3 {
            for b in 0..3 {
                let vals: Vec<f64> = loo.iter().map(|c| c[(a, b)]).collect();
                let mu = vals.iter().sum::<f64>() / n as f64;
                let var = (n as f64 - 1.0) / n as f64 * vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>();
                assert!((var.sqrt() - r.cov_stderr[(a, b)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn decay_needs_interior_state() {
        let basis = build_basis(2).unwrap();
        let pure = BlochState::in_basis(&basis, from_qubit_pauli(&[0.0, 0.0, 1.0]));
        let err = unphysical_decay(&Design::Povm(tetrahedron_povm()), &pure, &[10], 10, 0);
        assert!(err.is_err());
        let mixed = BlochState::maximally_mixed(&basis);
        let pts = unphysical_decay(&Design::Povm(tetrahedron_povm()), &mixed, &[10, 100, 1000], 2000, 3).unwrap();
        assert!(pts[0].unphysical_fraction > pts[2].unphysical_fraction);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = run_experiments(&sigma3_spec(0.5, 10, 5)).unwrap();
        let mut buf = Vec::new();
        write_estimates_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "run,d1,physical");
        assert_eq!(lines.len(), 6);
    }
}
