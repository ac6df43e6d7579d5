use serde_json::{json, Value};

use tomodesign::basis::OperatorBasis;
use tomodesign::estimation::build_design_any;
use tomodesign::linalg::{identity, max_abs_entry, min_eigenvalue, CMatrix};
use tomodesign::measurement::{
    check_sic_with, qutrit_example_povm, tetrahedron_povm, trine_povm, two_qubit_optimal_family, Design,
    Povm, Tolerances,
};
use tomodesign::optimizer::{optimize as run_optimizer, BasisKind, OptimizationProblem};
use tomodesign::prior::{avg_error_matrix_design, avg_error_matrix_mc};
use tomodesign::serde_matrix::complex_rows;
use tomodesign::simulator::{run_experiments, write_estimates_csv, ExperimentSpec};

use crate::input::{self, parse, parse_design, read_input};
use crate::{Bundled, Cli, CliError, Format, Outcome, Output};

const DEFAULT_SAMPLES: usize = 100_000;
const SIC_TOL: f64 = 1e-10;
const QUTRIT_COMPLETENESS_TOL: f64 = 1e-12;

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))
}

fn ok(v: Value) -> Result<Outcome, CliError> {
    Ok(Outcome { output: Output::Json(v), passed: true })
}

fn basis_for(cli: &Cli, dim: usize) -> Result<OperatorBasis, CliError> {
    Ok(BasisKind::from(cli.basis).build(dim)?)
}

fn masked_labels(basis: &OperatorBasis, mask: &[bool]) -> Vec<String> {
    basis.labels().iter().zip(mask).filter(|(_, k)| **k).map(|(l, _)| l.clone()).collect()
}

pub fn validate(cli: &Cli) -> Result<Outcome, CliError> {
    let design = parse_design(&read_input(cli)?)?;
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tol {
        tol.positivity = t;
        tol.completeness = t;
        tol.hermitian = t;
    }
    let violations = design.validate_with(&tol);
    let kind = match design {
        Design::Povm(_) => "povm",
        Design::VonNeumann(_) => "von_neumann",
    };
    let report = json!({
        "kind": kind,
        "dim": design.dim(),
        "operators": design.operators().len(),
        "valid": violations.is_empty(),
        "violations": to_value(&violations)?,
        "tolerances": to_value(&tol)?,
    });
    Ok(Outcome { passed: violations.is_empty(), output: Output::Json(report) })
}

pub fn objective(cli: &Cli) -> Result<Outcome, CliError> {
    let design = parse_design(&read_input(cli)?)?;
    let basis = basis_for(cli, design.dim())?;
    let mask = input::mask(cli, &basis)?;
    let prior = input::prior(cli, design.dim())?;
    let seed = cli.seed.unwrap_or(0);
    let samples = cli.samples.unwrap_or(DEFAULT_SAMPLES);

    let dm = build_design_any(&design, &mask, &basis)?;
    let closed = avg_error_matrix_design(&dm, &prior, &basis)?;
    let mut report = json!({
        "prior": to_value(&prior)?,
        "known": masked_labels(&basis, &mask),
        "closed_form": to_value(&closed)?,
    });
    if samples > 0 {
        let mc = avg_error_matrix_mc(&dm, &prior, &basis, samples, seed)?;
        let diff = (closed.det_value - mc.det_value).abs();
        report["monte_carlo"] = to_value(&mc)?;
        report["abs_difference"] = json!(diff);
        report["difference_in_stderr"] = json!(mc.mc_stderr.map(|s| diff / s));
    }
    ok(report)
}

pub fn optimize(cli: &Cli) -> Result<Outcome, CliError> {
    let mut problem: OptimizationProblem = parse(&read_input(cli)?, "optimization problem")?;
    if let Some(s) = cli.seed {
        problem.seed = s;
    }
    if let Some(t) = cli.tol {
        problem.tol = t;
    }
    if cli.prior.is_some() {
        problem.prior = input::prior(cli, problem.dim)?;
    }
    if cli.mask.is_some() {
        problem.known_mask = input::mask(cli, &problem.basis()?)?;
    }
    problem.validate()?;
    let result = run_optimizer(&problem)?;
    ok(json!({ "problem": to_value(&problem)?, "result": to_value(&result)? }))
}

pub fn simulate(cli: &Cli) -> Result<Outcome, CliError> {
    let mut spec: ExperimentSpec = parse(&read_input(cli)?, "experiment")?;
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(m) = cli.shots {
        spec.shots = m;
    }
    if let Some(r) = cli.runs {
        spec.runs = r;
    }
    let report = run_experiments(&spec)?;

    if cli.format == Format::Csv {
        let mut buf = Vec::new();
        write_estimates_csv(&report, &mut buf)?;
        let text = String::from_utf8(buf).map_err(|e| CliError::Config(e.to_string()))?;
        return Ok(Outcome { output: Output::Text(text), passed: true });
    }

    let d = report.unknown_labels.len();
    let mut table = Vec::new();
    for i in 0..d {
        for j in i..d {
            let se = report.cov_stderr[(i, j)];
            let diff = report.empirical_cov[(i, j)] - report.predicted_cov[(i, j)];
            table.push(json!({
                "row": report.unknown_labels[i],
                "col": report.unknown_labels[j],
                "empirical": report.empirical_cov[(i, j)],
                "predicted": report.predicted_cov[(i, j)],
                "stderr": se,
                "z": if se > 0.0 { Some(diff / se) } else { None },
            }));
        }
    }
    let bias: Vec<Value> = (0..d)
        .map(|i| {
            let se = report.mean_stderr[i];
            let diff = report.mean_estimate[i] - report.true_unknown[i];
            json!({
                "label": report.unknown_labels[i],
                "true": report.true_unknown[i],
                "mean": report.mean_estimate[i],
                "stderr": se,
                "z": if se > 0.0 { Some(diff / se) } else { None },
            })
        })
        .collect();
    ok(json!({
        "experiment": to_value(&spec)?,
        "report": to_value(&report)?,
        "covariance_comparison": table,
        "mean_comparison": bias,
    }))
}

pub fn verify_sic(cli: &Cli) -> Result<Outcome, CliError> {
    let p = match parse_design(&read_input(cli)?)? {
        Design::Povm(p) => p,
        Design::VonNeumann(_) => return Err(CliError::Config("verify-sic needs a POVM".into())),
    };
    let basis = basis_for(cli, p.dim)?;
    let mask = input::mask(cli, &basis)?;
    let tol = cli.tol.unwrap_or(SIC_TOL);
    let tols = Tolerances { complementarity: tol, ..Tolerances::default() };
    let violations = Design::Povm(p.clone()).validate();
    let sic = check_sic_with(&p, &mask, &basis, &tols)?;
    let passed = violations.is_empty()
        && sic.max_lambda_residual <= tol
        && sic.max_mu_residual <= tol
        && sic.all_rank_one
        && sic.quasi_orthogonal_to_known;
    let report = json!({
        "known": masked_labels(&basis, &mask),
        "tolerance": tol,
        "violations": to_value(&violations)?,
        "sic": to_value(&sic)?,
    });
    Ok(Outcome { output: Output::Json(report), passed })
}

struct Check {
    name: &'static str,
    value: f64,
    expected: Option<f64>,
    tol: f64,
}

impl Check {
    fn passed(&self) -> bool {
        match self.expected {
            Some(e) => (self.value - e).abs() <= self.tol,
            None => self.value <= self.tol,
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "value": self.value,
            "expected": self.expected,
            "tolerance": self.tol,
            "passed": self.passed(),
        })
    }
}

fn completeness_residual(p: &Povm) -> f64 {
    let sum = p.elements.iter().fold(CMatrix::zeros(p.dim, p.dim), |acc, e| acc + e);
    max_abs_entry(&(sum - identity(p.dim)))
}

pub fn demo_qutrit(cli: &Cli) -> Result<Outcome, CliError> {
    let p = qutrit_example_povm();
    let basis = OperatorBasis::gell_mann(3)?;
    let mask = basis.diagonal_mask();
    let tol = cli.tol.unwrap_or(SIC_TOL);
    let tols = Tolerances { complementarity: tol, ..Tolerances::default() };
    let sic = check_sic_with(&p, &mask, &basis, &tols)?;
    let min_eig = p.elements.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min);

    let checks = [
        Check { name: "positivity", value: -min_eig, expected: None, tol: Tolerances::default().positivity },
        Check { name: "completeness", value: completeness_residual(&p), expected: None, tol: QUTRIT_COMPLETENESS_TOL },
        Check { name: "lambda", value: sic.lambda, expected: Some(7.0 / 3.0), tol },
        Check { name: "lambda_residual", value: sic.max_lambda_residual, expected: None, tol },
        Check { name: "mu", value: sic.mu, expected: Some(2.0 / 9.0), tol },
        Check { name: "mu_residual", value: sic.max_mu_residual, expected: None, tol },
        Check { name: "rank_one", value: sic.max_rank_ratio, expected: None, tol: Tolerances::default().rank_one },
        Check { name: "quasi_orthogonal_to_diagonal", value: sic.max_known_residual, expected: None, tol },
    ];
    let passed = checks.iter().all(Check::passed);
    let report = json!({
        "povm": to_value(&p)?,
        "known": masked_labels(&basis, &mask),
        "sic": to_value(&sic)?,
        "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
    });
    Ok(Outcome { output: Output::Json(report), passed })
}

pub fn bases(cli: &Cli, dim: usize) -> Result<Outcome, CliError> {
    let basis = basis_for(cli, dim)?;
    let elements: Vec<Value> = basis
        .labels()
        .iter()
        .zip(basis.elements())
        .map(|(l, m)| json!({ "label": l, "matrix": complex_rows(m) }))
        .collect();
    ok(json!({
        "dim": dim,
        "order": basis.order().tag(),
        "diagonal": masked_labels(&basis, &basis.diagonal_mask()),
        "elements": elements,
        "defects": to_value(&basis.defects())?,
    }))
}

pub fn export(name: Bundled) -> Result<Outcome, CliError> {
    let design = match name {
        Bundled::Tetrahedron => Design::Povm(tetrahedron_povm()),
        Bundled::Trine => Design::Povm(trine_povm()),
        Bundled::Qutrit7 => Design::Povm(qutrit_example_povm()),
        Bundled::TwoQubitFamily => Design::VonNeumann(two_qubit_optimal_family()),
    };
    let mut text = serde_json::to_string_pretty(&design).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    Ok(Outcome { output: Output::Text(text), passed: true })
}
