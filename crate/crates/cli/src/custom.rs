//! Undriven models read from a JSON matrix file:
//!
//! ```json
//! {
//!   "hamiltonian": [[0.5, 0], [0, -0.5]],
//!   "jumps": [ { "rate": 0.2, "operator": [[0, 0], [1, 0]] } ],
//!   "target_state": [[1, 0], [0, 0]]
//! }
//! ```
//!
//! Matrix entries are numbers or `[re, im]` pairs. `target_state`
//! (amplitudes) is optional and only used for the fidelity column.

use std::path::Path;

use landauer_core::{Complex64, ComplexMatrix, JumpChannel, LindbladModel};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(&self) -> Complex64 {
        match *self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([r, i]) => Complex64::new(r, i),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpFile {
    rate: f64,
    operator: Vec<Vec<Entry>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    hamiltonian: Vec<Vec<Entry>>,
    #[serde(default)]
    jumps: Vec<JumpFile>,
    #[serde(default)]
    target_state: Option<Vec<Entry>>,
}

fn matrix(rows: &[Vec<Entry>]) -> Result<ComplexMatrix, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(
            "matrix must be square and non-empty".into(),
        ));
    }
    Ok(ComplexMatrix::from_fn(n, |i, j| rows[i][j].value()))
}

pub struct CustomModel {
    pub model: LindbladModel,
    pub target_state: Option<Vec<Complex64>>,
}

pub fn load(path: &Path) -> Result<CustomModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let h = matrix(&file.hamiltonian)?;
    let channels = file
        .jumps
        .iter()
        .map(|j| Ok(JumpChannel::constant(j.rate, matrix(&j.operator)?)?))
        .collect::<Result<Vec<_>, CliError>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let model =
        LindbladModel::undriven(h, channels).map_err(|e| CliError::Config(e.to_string()))?;
    let target_state = file
        .target_state
        .map(|v| v.iter().map(Entry::value).collect());
    Ok(CustomModel {
        model,
        target_state,
    })
}
