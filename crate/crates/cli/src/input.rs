use std::fs;

use serde::de::DeserializeOwned;
use serde_json::Value;

use tomodesign::basis::{BasisOrder, OperatorBasis};
use tomodesign::measurement::{two_qubit_marginal_mask, Design, Povm, VonNeumannFamily};
use tomodesign::prior::InvariantPrior;

use crate::{Cli, CliError};

pub fn read_input(cli: &Cli) -> Result<String, CliError> {
    let path = cli.input.as_ref().ok_or_else(|| CliError::Config("--input is required".into()))?;
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Deserializes `text`, reporting the line, column and field path of the
/// first problem.
pub fn parse<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let field = if path == "." { String::new() } else { format!(" (field `{path}`)") };
        CliError::Parse(format!("{what}{field}: {inner}"))
    })
}

/// A POVM (`elements`) or a von Neumann family (`effects`).
pub fn parse_design(text: &str) -> Result<Design, CliError> {
    let v: Value = parse(text, "design")?;
    let obj = v.as_object().ok_or_else(|| CliError::Parse("design: expected a JSON object".into()))?;
    if obj.contains_key("elements") {
        Ok(Design::Povm(parse::<Povm>(text, "povm")?))
    } else if obj.contains_key("effects") {
        Ok(Design::VonNeumann(parse::<VonNeumannFamily>(text, "family")?))
    } else {
        Err(CliError::Parse("design: expected an `elements` (POVM) or `effects` (family) field".into()))
    }
}

/// `--prior`: `pure`, inline JSON, or a JSON file. Defaults to `pure`.
pub fn prior(cli: &Cli, dim: usize) -> Result<InvariantPrior, CliError> {
    let arg = cli.prior.as_deref().unwrap_or("pure");
    if arg == "pure" {
        return Ok(InvariantPrior::pure(dim)?);
    }
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| CliError::Config(format!("cannot read prior {arg}: {e}")))?
    };
    let p: InvariantPrior = parse(&text, "prior")?;
    if p.dim != dim {
        return Err(CliError::Config(format!("prior has dimension {}, design has {dim}", p.dim)));
    }
    Ok(p)
}

/// `--mask`: comma-separated labels, `diagonal`, `marginals` or `none`.
pub fn mask(cli: &Cli, basis: &OperatorBasis) -> Result<Vec<bool>, CliError> {
    match cli.mask.as_deref().map(str::trim) {
        None | Some("") | Some("none") => Ok(vec![false; basis.len()]),
        Some("diagonal") => Ok(basis.diagonal_mask()),
        Some("marginals") => {
            if basis.order() != BasisOrder::PauliProduct || basis.dim() != 4 {
                return Err(CliError::Config("`marginals` needs dimension 4 and --basis pauli-product".into()));
            }
            Ok(two_qubit_marginal_mask(basis))
        }
        Some(list) => {
            let labels: Vec<&str> = list.split(',').map(str::trim).collect();
            basis.mask_from_labels(&labels).map_err(|e| CliError::Config(format!("--mask: {e}")))
        }
    }
}
