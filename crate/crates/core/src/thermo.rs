//! Bound bookkeeping over a trajectory.
//!
//! Undriven: with `beta_R` fixed by matching the initial entropy,
//! `beta_R dE^R - dS = D(rho(t) || rho_th) >= 0`, giving the upper bound
//! `Q <= Q_u = dE^in - T_R dS` next to the usual `Q >= -T dS`.
//!
//! Driven: `beta_R(t)` is matched at every instant and the correction
//! `C = (beta_R(t) - beta_R(0)) E_S + ln Z(t)/Z(0)` restores the identity
//! `beta_R(0) dE~^R - dS + C = D(rho(t) || rho_th(t))`, so
//! `Q <= Q~_u + W` with `Q~_u = dE~^in - T_R(0) dS + T_R(0) C`.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{eigh, EigenSystem};
use crate::lindblad::{LindbladModel, Trajectory};
use crate::qstate::{
    gibbs_from_basis, relative_entropy, thermo_sample, ReferenceState, ThermoSample,
};
use crate::refsolve::BetaSolveResult;

/// Which side of `Q` the reference bound sits on. A negative `beta_R` turns
/// the upper bound into a lower one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundDirection {
    Upper,
    Lower,
}

impl BoundDirection {
    fn of(beta: f64) -> Self {
        if beta < 0.0 {
            BoundDirection::Lower
        } else {
            BoundDirection::Upper
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFlag {
    /// `beta_R(t)` hit the solver cap.
    BetaSaturated,
    /// `rho_th(t)` is numerically rank-deficient; relative entropies skipped.
    ReferenceSaturated,
    /// Negative `beta_R`: the reported bound is a lower bound.
    LowerBound,
}

impl fmt::Display for SampleFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleFlag::BetaSaturated => "beta_saturated",
            SampleFlag::ReferenceSaturated => "reference_saturated",
            SampleFlag::LowerBound => "lower_bound",
        })
    }
}

/// `|`-joined flag names, empty when there are none.
pub fn format_flags(flags: &[SampleFlag]) -> String {
    flags
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("|")
}

#[derive(Clone, Debug, PartialEq)]
pub struct UndrivenBounds {
    pub t: f64,
    pub e_s: f64,
    pub s: f64,
    pub s_diag: f64,
    pub coh: f64,
    /// Dissipated heat; `-dE_S` for undriven dynamics.
    pub q: f64,
    /// `Tr[(rho(t) - rho_th) H]`
    pub de_r: f64,
    pub ds: f64,
    pub ds_diag: f64,
    pub dcoh: f64,
    /// `beta_R dE^R - dS`
    pub gap: f64,
    /// `D(rho(t) || rho_th)` evaluated directly.
    pub d_direct: Option<f64>,
    pub de_in: f64,
    /// `dE^in - T_R dS`; absent at `beta_R = 0`.
    pub q_u: Option<f64>,
    pub direction: BoundDirection,
    /// `-T dS` for a configured bath temperature.
    pub lp_lower: Option<f64>,
    pub flags: Vec<SampleFlag>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrivenBounds {
    pub t: f64,
    pub e_s: f64,
    pub s: f64,
    pub s_diag: f64,
    pub coh: f64,
    pub q: f64,
    pub w: f64,
    pub beta_r: f64,
    /// `(beta_R(t) - beta_R(0)) E_S(t) + ln Z(t)/Z(0)`
    pub c: f64,
    /// `E_S(t) - E_th(0)`
    pub de_r_tilde: f64,
    pub ds: f64,
    pub ds_diag: f64,
    pub dcoh: f64,
    /// `beta_R(0) dE~^R - dS + C`; absent at saturated samples.
    pub gap: Option<f64>,
    /// `D(rho(t) || rho_th(t))`; absent at saturated samples.
    pub d_inst: Option<f64>,
    pub de_in_tilde: f64,
    /// `dE~^in - T_R(0) dS + T_R(0) C`; absent at `beta_R(0) = 0`.
    pub qu_tilde: Option<f64>,
    /// `Q~_u + W`
    pub upper: Option<f64>,
    pub direction: BoundDirection,
    pub lp_lower: Option<f64>,
    pub flags: Vec<SampleFlag>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NlpComparison {
    pub t: f64,
    /// `E_S - T S`
    pub f_neq: f64,
    /// `-T ln Z_eq(t)`
    pub f_eq: f64,
    /// `beta (E - E_eq(t)) - (S - S_eq(t))`
    pub slack_instantaneous: f64,
    /// `beta (E - E_eq(0)) - (S - S_eq(0)) + ln Z_eq(t)/Z_eq(0)`; driven only.
    pub slack_anchored: Option<f64>,
    /// `beta (E - E_eq) - (S - S_eq)` with the fixed equilibrium; undriven only.
    pub slack_static: Option<f64>,
}

fn lp(bath_t: Option<f64>, ds: f64) -> Option<f64> {
    bath_t.map(|t| -t * ds)
}

fn check_bath(bath_t: Option<f64>) -> Result<()> {
    match bath_t {
        Some(t) if !(t > 0.0 && t.is_finite()) => {
            Err(Error::InvalidParameter(format!("bath temperature {t}")))
        }
        _ => Ok(()),
    }
}

/// State functionals for every sample, with the Hamiltonian basis used.
fn samples(
    traj: &Trajectory,
    model: &LindbladModel,
    reference: Option<&ReferenceState>,
) -> Result<Vec<(ThermoSample, EigenSystem)>> {
    let fixed = if model.is_driven() {
        None
    } else {
        Some(eigh(&*model.hamiltonian(0.0)?)?)
    };
    traj.times
        .par_iter()
        .zip(&traj.states)
        .map(|(&t, rho)| {
            let h = model.hamiltonian(t)?;
            let basis = match &fixed {
                Some(b) => b.clone(),
                None => eigh(&h)?,
            };
            Ok((thermo_sample(t, rho, &h, &basis, reference)?, basis))
        })
        .collect()
}

pub fn undriven_bounds(
    traj: &Trajectory,
    model: &LindbladModel,
    reference: &ReferenceState,
    bath_t: Option<f64>,
) -> Result<Vec<UndrivenBounds>> {
    if model.is_driven() {
        return Err(Error::DrivenModelSupplied);
    }
    check_bath(bath_t)?;
    if traj.is_empty() {
        return Ok(Vec::new());
    }
    let data = samples(traj, model, Some(reference))?;
    let e_th = reference.energy();
    let first = &data[0].0;
    let de_in = first.energy - e_th;
    let beta = reference.beta;
    let direction = BoundDirection::of(beta);

    Ok(data
        .iter()
        .zip(&traj.heat)
        .map(|((smp, _), &q)| {
            let ds = smp.entropy - first.entropy;
            let de_r = smp.energy - e_th;
            let mut flags = Vec::new();
            if reference.saturated {
                flags.push(SampleFlag::ReferenceSaturated);
            }
            if direction == BoundDirection::Lower {
                flags.push(SampleFlag::LowerBound);
            }
            UndrivenBounds {
                t: smp.t,
                e_s: smp.energy,
                s: smp.entropy,
                s_diag: smp.diagonal_entropy,
                coh: smp.coherence,
                q,
                de_r,
                ds,
                ds_diag: smp.diagonal_entropy - first.diagonal_entropy,
                dcoh: smp.coherence - first.coherence,
                gap: beta * de_r - ds,
                d_direct: smp.relative_entropy,
                de_in,
                q_u: reference.temperature().map(|tr| de_in - tr * ds),
                direction,
                lp_lower: lp(bath_t, ds),
                flags,
            }
        })
        .collect())
}

/// Driven bounds from a per-sample `beta_R(t)` series aligned with the
/// trajectory. Samples whose solve failed are dropped (with a warning).
///
/// For an undriven model, `beta_R` is held at its initial value, so `C`
/// vanishes identically and the numbers coincide with [`undriven_bounds`].
pub fn driven_bounds(
    traj: &Trajectory,
    model: &LindbladModel,
    beta_series: &[Result<BetaSolveResult>],
    bath_t: Option<f64>,
) -> Result<Vec<DrivenBounds>> {
    if beta_series.len() != traj.len() {
        return Err(Error::MisalignedSeries(format!(
            "{} beta values for {} samples",
            beta_series.len(),
            traj.len()
        )));
    }
    check_bath(bath_t)?;
    if traj.is_empty() {
        return Ok(Vec::new());
    }
    let b0 = match &beta_series[0] {
        Ok(r) if !r.saturated => *r,
        Ok(_) => {
            return Err(Error::InvalidParameter(
                "initial beta_R is saturated".into(),
            ))
        }
        Err(e) => return Err(e.clone()),
    };
    let beta0 = b0.beta;
    let direction = BoundDirection::of(beta0);
    let t0 = (beta0 != 0.0).then(|| 1.0 / beta0);

    let data = samples(traj, model, None)?;
    let ref0 = gibbs_from_basis(&data[0].1, beta0)?;
    let e_th0 = ref0.energy();
    let first = &data[0].0;
    let de_in_tilde = first.energy - e_th0;

    let rows: Vec<Option<Result<DrivenBounds>>> = data
        .par_iter()
        .enumerate()
        .map(|(k, (smp, basis))| {
            let solved = match &beta_series[k] {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("dropping sample t = {}: {e}", smp.t);
                    return None;
                }
            };
            let (beta_t, beta_saturated) = if model.is_driven() {
                (solved.beta, solved.saturated)
            } else {
                (beta0, false)
            };
            Some(driven_row(
                smp,
                basis,
                &traj.states[k],
                traj.heat[k],
                traj.work[k],
                beta_t,
                beta_saturated,
                &ref0,
                first,
                de_in_tilde,
                t0,
                direction,
                bath_t,
            ))
        })
        .collect();
    rows.into_iter().flatten().collect()
}

#[allow(clippy::too_many_arguments)]
fn driven_row(
    smp: &ThermoSample,
    basis: &EigenSystem,
    rho: &crate::qstate::DensityMatrix,
    q: f64,
    w: f64,
    beta_t: f64,
    beta_saturated: bool,
    ref0: &ReferenceState,
    first: &ThermoSample,
    de_in_tilde: f64,
    t0: Option<f64>,
    direction: BoundDirection,
    bath_t: Option<f64>,
) -> Result<DrivenBounds> {
    let beta0 = ref0.beta;
    let ref_t = gibbs_from_basis(basis, beta_t)?;
    let c = (beta_t - beta0) * smp.energy + ref_t.log_z - ref0.log_z;
    let de_r_tilde = smp.energy - ref0.energy();
    let ds = smp.entropy - first.entropy;

    let mut flags = Vec::new();
    if beta_saturated {
        flags.push(SampleFlag::BetaSaturated);
    }
    if ref_t.saturated {
        flags.push(SampleFlag::ReferenceSaturated);
    }
    if direction == BoundDirection::Lower {
        flags.push(SampleFlag::LowerBound);
    }
    let usable = !beta_saturated && !ref_t.saturated;
    let (gap, d_inst) = if usable {
        (
            Some(beta0 * de_r_tilde - ds + c),
            Some(relative_entropy(rho, &ref_t.gibbs)?),
        )
    } else {
        (None, None)
    };
    let qu_tilde = t0.map(|tr| de_in_tilde - tr * ds + tr * c);
    Ok(DrivenBounds {
        t: smp.t,
        e_s: smp.energy,
        s: smp.entropy,
        s_diag: smp.diagonal_entropy,
        coh: smp.coherence,
        q,
        w,
        beta_r: beta_t,
        c,
        de_r_tilde,
        ds,
        ds_diag: smp.diagonal_entropy - first.diagonal_entropy,
        dcoh: smp.coherence - first.coherence,
        gap,
        d_inst,
        de_in_tilde,
        qu_tilde,
        upper: qu_tilde.map(|x| x + w),
        direction,
        lp_lower: lp(bath_t, ds),
        flags,
    })
}

/// Slacks of the bounds that follow from `F(t) >= F_eq(t)` for a genuine
/// bath at inverse temperature `bath_beta`. Each equals
/// `D(rho(t) || rho_eq(t))`.
pub fn nlp_comparison(
    traj: &Trajectory,
    model: &LindbladModel,
    bath_beta: Option<f64>,
) -> Result<Vec<NlpComparison>> {
    let beta = bath_beta.ok_or(Error::NoBathTemperature)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("bath beta {beta}")));
    }
    if traj.is_empty() {
        return Ok(Vec::new());
    }
    let temp = 1.0 / beta;
    let data = samples(traj, model, None)?;
    let eq0 = gibbs_from_basis(&data[0].1, beta)?;
    let (e_eq0, s_eq0) = (eq0.energy(), eq0.entropy());
    data.par_iter()
        .map(|(smp, basis)| {
            let eq = gibbs_from_basis(basis, beta)?;
            let (e_eq, s_eq) = (eq.energy(), eq.entropy());
            let instantaneous = beta * (smp.energy - e_eq) - (smp.entropy - s_eq);
            let (anchored, fixed) = if model.is_driven() {
                let v = beta * (smp.energy - e_eq0) - (smp.entropy - s_eq0) + eq.log_z - eq0.log_z;
                (Some(v), None)
            } else {
                (
                    None,
                    Some(beta * (smp.energy - e_eq0) - (smp.entropy - s_eq0)),
                )
            };
            Ok(NlpComparison {
                t: smp.t,
                f_neq: smp.energy - temp * smp.entropy,
                f_eq: -temp * eq.log_z,
                slack_instantaneous: instantaneous,
                slack_anchored: anchored,
                slack_static: fixed,
            })
        })
        .collect()
}
