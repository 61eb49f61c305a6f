//! Scenario execution: model → trajectory → bounds → files.

use std::path::{Path, PathBuf};

use landauer_core::models::{build_erasure, build_rydberg, initial_state, ErasureParams};
use landauer_core::qstate::{fidelity_pure, gibbs_state, has_degeneracy, von_neumann_entropy};
use landauer_core::refsolve::solve_beta_series;
use landauer_core::thermo::{driven_bounds, nlp_comparison, undriven_bounds};
use landauer_core::{
    eigh, propagate, solve_beta, BoundDirection, Branch, Complex64, ComplexMatrix, DensityMatrix,
    DrivenBounds, LindbladModel, NlpComparison, Trajectory, UndrivenBounds,
};
use log::{info, warn};

use crate::config::{ModelConfig, ScenarioConfig};
use crate::custom;
use crate::error::CliError;
use crate::output::{
    driven_record, num, undriven_record, write_table, DegeneracyMeta, DiagnosticsMeta,
    IntegrationMeta, Meta, ReferenceMeta, Units, Verdict, VerdictKind, DRIVEN_COLUMNS,
    UNDRIVEN_COLUMNS,
};
use crate::plot;

/// Slack tolerance for inequality verdicts and residual tolerance for identities.
pub const VERDICT_TOL: f64 = 1e-6;

/// Command-line overrides applied on top of the scenario file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub n_samples: Option<usize>,
    pub plots: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), CliError> {
        if self.dt.is_some() {
            cfg.integrator.dt = self.dt;
        }
        if self.t_end.is_some() {
            cfg.integrator.t_end = self.t_end;
        }
        if self.n_samples.is_some() {
            cfg.integrator.n_samples = self.n_samples;
        }
        if self.plots {
            cfg.outputs.plots = true;
        }
        cfg.validate()
    }
}

#[derive(Debug)]
pub struct JobResult {
    pub label: Option<String>,
    pub dir: PathBuf,
    pub meta: Meta,
}

#[derive(Debug)]
pub struct RunSummary {
    pub jobs: Vec<JobResult>,
}

impl RunSummary {
    pub fn all_hold(&self) -> bool {
        self.jobs.iter().all(|j| j.meta.all_hold)
    }

    /// 0 when every verdict holds, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_hold() {
            0
        } else {
            2
        }
    }
}

/// Runs every job of `cfg` (one per sweep entry, concurrently) under `out`.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<RunSummary, CliError> {
    let jobs = cfg.expand()?;
    std::fs::create_dir_all(out)?;
    let results: Vec<Result<JobResult, CliError>> = if jobs.len() == 1 {
        let (label, c) = &jobs[0];
        let dir = match label {
            Some(l) => out.join(l),
            None => out.to_path_buf(),
        };
        vec![run_job(c, &dir).map(|meta| JobResult {
            label: label.clone(),
            dir,
            meta,
        })]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|(label, c)| {
                    let dir = out.join(label.as_deref().unwrap_or("job"));
                    s.spawn(move || {
                        run_job(c, &dir).map(|meta| JobResult {
                            label: label.clone(),
                            dir,
                            meta,
                        })
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("scenario worker panicked"))
                .collect()
        })
    };
    let jobs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    if cfg.outputs.plots && jobs.len() > 1 {
        let parts: Vec<(String, PathBuf)> = jobs
            .iter()
            .map(|j| (j.label.clone().unwrap_or_default(), j.dir.clone()))
            .collect();
        let path = plot::emit_sweep_plot(out, &parts)?;
        info!("wrote {}", path.display());
    }
    Ok(RunSummary { jobs })
}

struct Built {
    model: LindbladModel,
    kind: &'static str,
    target: Option<Vec<Complex64>>,
    units: Units,
}

fn build(cfg: &ScenarioConfig) -> Result<Built, CliError> {
    let config_err = |e: landauer_core::Error| CliError::Config(e.to_string());
    Ok(match &cfg.model {
        ModelConfig::Rydberg(r) => {
            let (model, bell) = build_rydberg(&(*r).into()).map_err(config_err)?;
            Built {
                model,
                kind: "rydberg",
                target: Some(bell),
                units: Units {
                    time: "1/Omega".into(),
                    energy: "Omega".into(),
                    note: "rates and energies in units of Omega; beta_R in units of 1/Omega".into(),
                },
            }
        }
        ModelConfig::Erasure(e) => {
            let p: ErasureParams = (*e).into();
            Built {
                model: build_erasure(&p).map_err(config_err)?,
                kind: "erasure",
                target: None,
                units: Units {
                    time: "1/Omega".into(),
                    energy: "Omega".into(),
                    note: "k_B = hbar = 1; temperatures in units of Omega".into(),
                },
            }
        }
        ModelConfig::Custom { path } => {
            let m = custom::load(path)?;
            Built {
                model: m.model,
                kind: "custom",
                target: m.target_state,
                units: Units {
                    time: "as supplied".into(),
                    energy: "as supplied".into(),
                    note: "units follow the model file".into(),
                },
            }
        }
    })
}

fn entropies(traj: &Trajectory) -> Result<Vec<(f64, f64)>, CliError> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| Ok((t, von_neumann_entropy(s)?)))
        .collect()
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::NonNegative => "non_negative",
        Branch::Negative => "negative",
    }
}

fn direction_name(d: BoundDirection) -> &'static str {
    match d {
        BoundDirection::Upper => "upper",
        BoundDirection::Lower => "lower",
    }
}

const DEGENERACY_NOTE: &str = "the Hamiltonian has degenerate levels; diagonal entropy and \
coherence use block dephasing over each degenerate eigenspace, which is basis-independent";

/// Runs a single (non-sweep) configuration into `dir` and returns its metadata.
pub fn run_job(cfg: &ScenarioConfig, dir: &Path) -> Result<Meta, CliError> {
    std::fs::create_dir_all(dir)?;
    let built = build(cfg)?;
    let model = &built.model;
    let integ = cfg.integration();
    let h0 = model.hamiltonian(0.0)?.into_owned();
    let rho0 = initial_state(&cfg.initial_state_or_default().to_core(), &h0)
        .map_err(|e| CliError::Config(format!("initial state: {e}")))?;

    info!(
        "{}: propagating to t = {} with dt = {} ({} samples)",
        cfg.name, integ.t_end, integ.dt, integ.n_samples
    );
    let traj = propagate(model, &rho0, integ.t_end, integ.dt, integ.n_samples)?;
    let energy_balance = traj.energy_balance_error(model)?;
    let branch: Branch = cfg.beta_branch.into();
    let bath_t = cfg.bath_temperature;

    let final_fidelity = match &built.target {
        Some(psi) => Some(fidelity_pure(traj.states.last().expect("samples"), psi)?),
        None => None,
    };
    write_trajectory(
        &dir.join("trajectory.csv"),
        &traj,
        model,
        built.target.as_deref(),
    )?;

    let nlp = match bath_t {
        Some(t) => Some(nlp_comparison(&traj, model, Some(1.0 / t))?),
        None => None,
    };

    let (verdicts, reference, degenerate) = if model.is_driven() {
        let series = solve_beta_series(
            |t| Ok(model.hamiltonian(t)?.into_owned()),
            &entropies(&traj)?,
            branch,
        );
        let rows = driven_bounds(&traj, model, &series, bath_t)?;
        let header: Vec<String> = DRIVEN_COLUMNS.iter().map(|s| s.to_string()).collect();
        let records: Vec<_> = rows.iter().map(driven_record).collect();
        write_table(&dir.join("bounds.csv"), &header, &records)?;

        let ok: Vec<_> = series.iter().filter_map(|r| r.as_ref().ok()).collect();
        let dropped = series.len() - ok.len();
        let b0 = ok[0];
        let drops = rows
            .windows(2)
            .map(|w| w[0].beta_r - w[1].beta_r)
            .fold(0.0f64, f64::max);
        let mut degenerate = false;
        for &t in &traj.times {
            degenerate |= has_degeneracy(&eigh(&*model.hamiltonian(t)?)?);
        }
        let reference = ReferenceMeta {
            branch: branch_name(branch).into(),
            beta_r0: b0.beta,
            temperature_r0: (b0.beta != 0.0).then(|| 1.0 / b0.beta),
            residual_r0: b0.residual,
            saturated_r0: b0.saturated,
            bound_direction: direction_name(rows[0].direction).into(),
            max_residual: ok
                .iter()
                .filter(|r| !r.saturated)
                .map(|r| r.residual)
                .fold(0.0, f64::max),
            saturated_samples: ok.iter().filter(|r| r.saturated).count(),
            dropped_samples: dropped,
            beta_r_non_decreasing: Some(drops <= VERDICT_TOL),
            beta_r_max_drop: Some(drops),
        };
        (
            driven_verdicts(&rows, nlp.as_deref()),
            reference,
            degenerate,
        )
    } else {
        let s0 = von_neumann_entropy(&rho0)?;
        let solved = solve_beta(&h0, s0, branch)?;
        let reference_state = gibbs_state(&h0, solved.beta)?;
        let rows = undriven_bounds(&traj, model, &reference_state, bath_t)?;
        let header: Vec<String> = UNDRIVEN_COLUMNS.iter().map(|s| s.to_string()).collect();
        let records: Vec<_> = rows.iter().map(undriven_record).collect();
        write_table(&dir.join("bounds.csv"), &header, &records)?;
        let reference = ReferenceMeta {
            branch: branch_name(branch).into(),
            beta_r0: solved.beta,
            temperature_r0: reference_state.temperature(),
            residual_r0: solved.residual,
            saturated_r0: solved.saturated,
            bound_direction: direction_name(rows[0].direction).into(),
            max_residual: solved.residual,
            saturated_samples: usize::from(solved.saturated),
            dropped_samples: 0,
            beta_r_non_decreasing: None,
            beta_r_max_drop: None,
        };
        (
            undriven_verdicts(&rows, solved.saturated, nlp.as_deref()),
            reference,
            has_degeneracy(&eigh(&h0)?),
        )
    };

    if let Some(rows) = &nlp {
        write_nlp(&dir.join("nlp.csv"), rows)?;
    }

    let all_hold = verdicts.iter().all(|v| v.holds);
    for v in verdicts.iter().filter(|v| !v.holds) {
        warn!(
            "{}: {} violated (worst {:e} at t = {})",
            cfg.name, v.name, v.worst, v.worst_t
        );
    }
    let d = &traj.diagnostics;
    let meta = Meta {
        scenario: cfg.name.clone(),
        model_kind: built.kind.into(),
        driven: model.is_driven(),
        config: cfg.clone(),
        units: built.units,
        integration: IntegrationMeta {
            method: "rk4".into(),
            dt_requested: integ.dt,
            dt_used: d.dt,
            t_end: integ.t_end,
            n_samples: integ.n_samples,
            steps: d.steps,
        },
        diagnostics: DiagnosticsMeta {
            max_trace_drift: d.max_trace_drift,
            cumulative_trace_drift: d.cumulative_trace_drift,
            min_eigenvalue: d.min_eigenvalue,
            stability_product: d.stability_product,
            energy_balance_error: energy_balance,
        },
        reference,
        degeneracy: DegeneracyMeta {
            degenerate_hamiltonian: degenerate,
            note: degenerate.then(|| DEGENERACY_NOTE.to_string()),
        },
        bath_temperature: bath_t,
        final_fidelity,
        verdicts,
        all_hold,
    };
    meta.write(&dir.join("meta.json"))?;
    if cfg.outputs.plots {
        let path = plot::emit_plots(dir)?;
        info!("wrote {}", path.display());
    }
    Ok(meta)
}

fn bound_slack(direction: BoundDirection, q: f64, bound: f64) -> f64 {
    match direction {
        BoundDirection::Upper => bound - q,
        BoundDirection::Lower => q - bound,
    }
}

fn nlp_verdicts(nlp: Option<&[NlpComparison]>, out: &mut Vec<Verdict>) {
    let Some(rows) = nlp else { return };
    out.push(Verdict::from_values(
        "nlp_instantaneous",
        "F(t) - F_eq(t) >= 0 against the instantaneous bath Gibbs state",
        VerdictKind::Inequality,
        VERDICT_TOL,
        rows.iter().map(|r| (r.t, r.slack_instantaneous)),
    ));
    if rows.iter().any(|r| r.slack_anchored.is_some()) {
        out.push(Verdict::from_values(
            "nlp_anchored",
            "beta (E - E_eq(0)) - (S - S_eq(0)) + ln Z(t) - ln Z(0) >= 0",
            VerdictKind::Inequality,
            VERDICT_TOL,
            rows.iter()
                .filter_map(|r| r.slack_anchored.map(|s| (r.t, s))),
        ));
    }
    if rows.iter().any(|r| r.slack_static.is_some()) {
        out.push(Verdict::from_values(
            "nlp_static",
            "beta (E - E_eq) - (S - S_eq) >= 0",
            VerdictKind::Inequality,
            VERDICT_TOL,
            rows.iter().filter_map(|r| r.slack_static.map(|s| (r.t, s))),
        ));
    }
}

fn undriven_verdicts(
    rows: &[UndrivenBounds],
    saturated: bool,
    nlp: Option<&[NlpComparison]>,
) -> Vec<Verdict> {
    let mut v = Vec::new();
    if !saturated {
        v.push(Verdict::from_values(
            "gap_non_negative",
            "beta_R dE_R - dS >= 0",
            VerdictKind::Inequality,
            VERDICT_TOL,
            rows.iter().map(|r| (r.t, r.gap)),
        ));
    }
    v.push(Verdict::from_values(
        "gap_identity",
        "beta_R dE_R - dS = D(rho(t) || rho_th)",
        VerdictKind::Identity,
        VERDICT_TOL,
        rows.iter()
            .filter_map(|r| r.d_direct.map(|d| (r.t, r.gap - d))),
    ));
    if rows.iter().any(|r| r.q_u.is_some()) {
        let dir = rows[0].direction;
        v.push(Verdict::from_values(
            "heat_bound",
            match dir {
                BoundDirection::Upper => "Q <= Q_u",
                BoundDirection::Lower => "Q >= Q_u (negative beta_R)",
            },
            VerdictKind::Inequality,
            VERDICT_TOL,
            rows.iter()
                .filter_map(|r| r.q_u.map(|b| (r.t, bound_slack(dir, r.q, b)))),
        ));
    }
    lower_verdict(rows.iter().map(|r| (r.t, r.q, r.lp_lower)), &mut v);
    nlp_verdicts(nlp, &mut v);
    v
}

fn driven_verdicts(rows: &[DrivenBounds], nlp: Option<&[NlpComparison]>) -> Vec<Verdict> {
    let mut v = vec![
        Verdict::from_values(
            "gap_non_negative",
            "beta_R(0) dE_R~ - dS + C >= 0",
            VerdictKind::Inequality,
            VERDICT_TOL,
            rows.iter().filter_map(|r| r.gap.map(|g| (r.t, g))),
        ),
        Verdict::from_values(
            "gap_identity",
            "beta_R(0) dE_R~ - dS + C = D(rho(t) || rho_th(t))",
            VerdictKind::Identity,
            VERDICT_TOL,
            rows.iter().filter_map(|r| Some((r.t, r.gap? - r.d_inst?))),
        ),
    ];
    if rows.iter().any(|r| r.upper.is_some()) {
        let dir = rows[0].direction;
        v.push(Verdict::from_values(
            "heat_bound",
            match dir {
                BoundDirection::Upper => "Q <= Q_u~ + W",
                BoundDirection::Lower => "Q >= Q_u~ + W (negative beta_R)",
            },
            VerdictKind::Inequality,
            VERDICT_TOL,
            rows.iter()
                .filter_map(|r| r.upper.map(|b| (r.t, bound_slack(dir, r.q, b)))),
        ));
    }
    lower_verdict(rows.iter().map(|r| (r.t, r.q, r.lp_lower)), &mut v);
    nlp_verdicts(nlp, &mut v);
    v
}

fn lower_verdict(
    rows: impl Iterator<Item = (f64, f64, Option<f64>)> + Clone,
    out: &mut Vec<Verdict>,
) {
    if rows.clone().any(|(_, _, l)| l.is_some()) {
        out.push(Verdict::from_values(
            "landauer_lower",
            "Q >= -T dS",
            VerdictKind::Inequality,
            VERDICT_TOL,
            rows.filter_map(|(t, q, l)| l.map(|l| (t, q - l))),
        ));
    }
}

fn write_trajectory(
    path: &Path,
    traj: &Trajectory,
    model: &LindbladModel,
    target: Option<&[Complex64]>,
) -> Result<(), CliError> {
    let dim = model.dim();
    let mut header: Vec<String> = ["t", "E_S", "S", "Q", "W", "fidelity"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..dim).map(|k| format!("p_{k}")));
    let energies = traj.energies(model)?;
    let rows = traj
        .states
        .iter()
        .enumerate()
        .map(|(k, rho)| {
            let mut r = vec![
                num(traj.times[k]),
                num(energies[k]),
                num(von_neumann_entropy(rho)?),
                num(traj.heat[k]),
                num(traj.work[k]),
                match target {
                    Some(psi) => num(fidelity_pure(rho, psi)?),
                    None => String::new(),
                },
            ];
            r.extend(populations(rho).into_iter().map(num));
            Ok(r)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_table(path, &header, &rows)
}

/// Diagonal of `rho` in the computational basis.
fn populations(rho: &DensityMatrix) -> Vec<f64> {
    let m: &ComplexMatrix = rho.matrix();
    (0..rho.dim()).map(|k| m[(k, k)].re).collect()
}

fn write_nlp(path: &Path, rows: &[NlpComparison]) -> Result<(), CliError> {
    let header: Vec<String> = [
        "t",
        "F_neq",
        "F_eq",
        "slack_instantaneous",
        "slack_anchored",
        "slack_static",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.t),
                num(r.f_neq),
                num(r.f_eq),
                num(r.slack_instantaneous),
                opt(r.slack_anchored),
                opt(r.slack_static),
            ]
        })
        .collect();
    write_table(path, &header, &records)
}
