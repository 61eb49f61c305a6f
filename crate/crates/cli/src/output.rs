//! CSV tables and the metadata document written for every run.

use std::collections::BTreeMap;
use std::path::Path;

use landauer_core::thermo::format_flags;
use landauer_core::{DrivenBounds, UndrivenBounds};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::CliError;

pub const DRIVEN_COLUMNS: [&str; 16] = [
    "t",
    "E_S",
    "S",
    "S_diag",
    "Coh",
    "Q",
    "W",
    "beta_R_t",
    "C_t",
    "dE_R_tilde",
    "gap",
    "D_inst",
    "Qu_tilde",
    "upper",
    "lp_lower",
    "flags",
];

pub const UNDRIVEN_COLUMNS: [&str; 12] = [
    "t", "E_S", "S", "S_diag", "Coh", "Q", "dE_R", "gap_P", "D_direct", "Q_u", "lp_lower", "flags",
];

/// 15 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn undriven_record(r: &UndrivenBounds) -> Vec<String> {
    vec![
        num(r.t),
        num(r.e_s),
        num(r.s),
        num(r.s_diag),
        num(r.coh),
        num(r.q),
        num(r.de_r),
        num(r.gap),
        opt(r.d_direct),
        opt(r.q_u),
        opt(r.lp_lower),
        format_flags(&r.flags),
    ]
}

pub fn driven_record(r: &DrivenBounds) -> Vec<String> {
    vec![
        num(r.t),
        num(r.e_s),
        num(r.s),
        num(r.s_diag),
        num(r.coh),
        num(r.q),
        num(r.w),
        num(r.beta_r),
        num(r.c),
        num(r.de_r_tilde),
        opt(r.gap),
        opt(r.d_inst),
        opt(r.qu_tilde),
        opt(r.upper),
        opt(r.lp_lower),
        format_flags(&r.flags),
    ]
}

pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// A CSV file read back as named numeric columns; empty cells are `None`.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: BTreeMap<String, Vec<Option<f64>>>,
    pub flags: Vec<String>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let mut columns: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
        let mut flags = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(CliError::Schema(format!(
                    "{}: row has {} fields, header has {}",
                    path.display(),
                    rec.len(),
                    header.len()
                )));
            }
            for (name, field) in header.iter().zip(rec.iter()) {
                if name == "flags" {
                    flags.push(field.to_owned());
                    continue;
                }
                let v = if field.is_empty() {
                    None
                } else {
                    Some(field.parse::<f64>().map_err(|e| {
                        CliError::Schema(format!("{}: column {name}: {e}", path.display()))
                    })?)
                };
                columns.entry(name.clone()).or_default().push(v);
            }
        }
        Ok(Self {
            header,
            columns,
            flags,
        })
    }

    pub fn len(&self) -> usize {
        self.columns.get("t").map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn optional(&self, name: &str) -> Result<&[Option<f64>], CliError> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| CliError::Schema(format!("missing column `{name}`")))
    }

    /// A column that must be complete.
    pub fn required(&self, name: &str) -> Result<Vec<f64>, CliError> {
        self.optional(name)?
            .iter()
            .map(|v| v.ok_or_else(|| CliError::Schema(format!("empty cell in `{name}`"))))
            .collect()
    }

    pub fn is_driven(&self) -> bool {
        self.header.iter().any(|h| h == "beta_R_t")
    }

    pub fn check_schema(&self) -> Result<(), CliError> {
        let expected: &[&str] = if self.is_driven() {
            &DRIVEN_COLUMNS
        } else {
            &UNDRIVEN_COLUMNS
        };
        if self
            .header
            .iter()
            .map(String::as_str)
            .ne(expected.iter().copied())
        {
            return Err(CliError::Schema(format!(
                "unexpected bounds header {:?}",
                self.header
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    /// `worst` is the smallest slack; holds when `worst >= -tolerance`.
    Inequality,
    /// `worst` is the largest absolute residual; holds when `worst <= tolerance`.
    Identity,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub statement: String,
    pub kind: VerdictKind,
    pub holds: bool,
    pub worst: f64,
    pub worst_t: f64,
    pub tolerance: f64,
    pub samples: usize,
}

impl Verdict {
    /// Builds a verdict from `(t, value)` pairs. Empty input holds trivially.
    pub fn from_values(
        name: &str,
        statement: &str,
        kind: VerdictKind,
        tolerance: f64,
        values: impl IntoIterator<Item = (f64, f64)>,
    ) -> Self {
        let mut worst: Option<(f64, f64)> = None;
        let mut samples = 0;
        for (t, v) in values {
            samples += 1;
            let key = match kind {
                VerdictKind::Inequality => v,
                VerdictKind::Identity => -v.abs(),
            };
            let better = match worst {
                None => true,
                Some((_, w)) => {
                    let wk = match kind {
                        VerdictKind::Inequality => w,
                        VerdictKind::Identity => -w.abs(),
                    };
                    key < wk || key.is_nan()
                }
            };
            if better {
                worst = Some((t, v));
            }
        }
        let (worst_t, worst) = worst.unwrap_or((0.0, 0.0));
        let worst = match kind {
            VerdictKind::Inequality => worst,
            VerdictKind::Identity => worst.abs(),
        };
        let holds = match kind {
            VerdictKind::Inequality => worst >= -tolerance,
            VerdictKind::Identity => worst <= tolerance,
        };
        Self {
            name: name.into(),
            statement: statement.into(),
            kind,
            holds,
            worst,
            worst_t,
            tolerance,
            samples,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Units {
    pub time: String,
    pub energy: String,
    pub note: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IntegrationMeta {
    pub method: String,
    pub dt_requested: f64,
    pub dt_used: f64,
    pub t_end: f64,
    pub n_samples: usize,
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiagnosticsMeta {
    pub max_trace_drift: f64,
    pub cumulative_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub stability_product: f64,
    pub energy_balance_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReferenceMeta {
    pub branch: String,
    /// Inverse reference temperature at t = 0.
    pub beta_r0: f64,
    pub temperature_r0: Option<f64>,
    pub residual_r0: f64,
    pub saturated_r0: bool,
    pub bound_direction: String,
    /// Driven runs: largest solver residual over non-saturated samples.
    pub max_residual: f64,
    pub saturated_samples: usize,
    pub dropped_samples: usize,
    /// Driven runs: whether `beta_R(t)` never decreased by more than 1e-6.
    pub beta_r_non_decreasing: Option<bool>,
    /// Driven runs: largest single drop between consecutive samples.
    pub beta_r_max_drop: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DegeneracyMeta {
    pub degenerate_hamiltonian: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Meta {
    pub scenario: String,
    pub model_kind: String,
    pub driven: bool,
    pub config: ScenarioConfig,
    pub units: Units,
    pub integration: IntegrationMeta,
    pub diagnostics: DiagnosticsMeta,
    pub reference: ReferenceMeta,
    pub degeneracy: DegeneracyMeta,
    pub bath_temperature: Option<f64>,
    pub final_fidelity: Option<f64>,
    pub verdicts: Vec<Verdict>,
    pub all_hold: bool,
}

impl Meta {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}
