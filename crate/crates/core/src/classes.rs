//! BMO norms and A2 characteristics in their infimum and classic forms, and
//! the rearrangement check `W(φ*) ≤ W(φ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{big_w, big_w_grid, local_sup, OptimizerConfig, SupremumResult};
use crate::steps::{Interval, Mass, StepFunction};
use crate::transforms::{phi_from_weight, rearrange_decreasing};
use crate::weight::ConvexWeight;

/// Default threshold below which a negative slack counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub p: f64,
    pub norm_inf_variant: f64,
    pub norm_classic_variant: f64,
    pub witness_inf: Interval,
    pub witness_classic: Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct A2Report {
    /// `⟨⟨w⟩⟩`.
    pub char_inf_variant: f64,
    /// `[w]_{A2}`.
    pub char_classic: f64,
    pub witness_inf: Interval,
    pub witness_classic: Interval,
}

fn check_p(p: f64) -> Result<ConvexWeight> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Argument(format!("BMO exponent must be a finite p >= 1, got {p}")));
    }
    ConvexWeight::power(p)
}

fn mean(m: &[Mass]) -> f64 {
    let total: f64 = m.iter().map(|x| x.weight).sum();
    m.iter().map(|x| x.weight * x.value).sum::<f64>() / total
}

fn inf_sup(phi: &StepFunction, p: f64, cfg: &OptimizerConfig) -> Result<SupremumResult> {
    let q = check_p(p)?;
    big_w(phi, &phi.domain(), &q, cfg)
}

fn classic_sup(phi: &StepFunction, p: f64, seeds: &[Interval], cfg: &OptimizerConfig) -> Result<SupremumResult> {
    check_p(p)?;
    local_sup(
        phi,
        &phi.domain(),
        |m| {
            let mu = mean(m);
            let total: f64 = m.iter().map(|x| x.weight).sum();
            Ok(m.iter().map(|x| x.weight * (x.value - mu).abs().powf(p)).sum::<f64>() / total)
        },
        seeds,
        cfg,
    )
}

/// `⦀φ⦀_p = sup_J inf_c ⟨|φ - c|^p⟩_J^{1/p}`.
pub fn bmo_norm_inf(phi: &StepFunction, p: f64, cfg: &OptimizerConfig) -> Result<f64> {
    Ok(inf_sup(phi, p, cfg)?.value.powf(1.0 / p))
}

/// `‖φ‖_p = sup_J ⟨|φ - ⟨φ⟩_J|^p⟩_J^{1/p}`.
pub fn bmo_norm_classic(phi: &StepFunction, p: f64, cfg: &OptimizerConfig) -> Result<f64> {
    Ok(bmo_report(phi, p, cfg)?.norm_classic_variant)
}

/// Both norms. The classic search is also started from the witness of the
/// infimum form, so that `⦀φ⦀_p ≤ ‖φ‖_p` holds for the computed values.
pub fn bmo_report(phi: &StepFunction, p: f64, cfg: &OptimizerConfig) -> Result<NormReport> {
    let inf = inf_sup(phi, p, cfg)?;
    let classic = classic_sup(phi, p, &[inf.witness], cfg)?;
    Ok(NormReport {
        p,
        norm_inf_variant: inf.value.powf(1.0 / p),
        norm_classic_variant: classic.value.powf(1.0 / p),
        witness_inf: inf.witness,
        witness_classic: classic.witness,
    })
}

fn inf_a2(w: &StepFunction, cfg: &OptimizerConfig) -> Result<SupremumResult> {
    let log_w = phi_from_weight(w)?;
    big_w(&log_w, &log_w.domain(), &ConvexWeight::exp(), cfg)
}

/// `⟨⟨w⟩⟩ = sup_J inf_c ⟨e^{|log w - c|}⟩_J`.
pub fn a2_char_inf(w: &StepFunction, cfg: &OptimizerConfig) -> Result<f64> {
    Ok(inf_a2(w, cfg)?.value)
}

/// `[w]_{A2} = sup_J ⟨w⟩_J ⟨1/w⟩_J`.
pub fn a2_char_classic(w: &StepFunction, cfg: &OptimizerConfig) -> Result<f64> {
    Ok(a2_report(w, cfg)?.char_classic)
}

/// Both characteristics; the classic search is seeded with the witness of
/// the infimum form.
pub fn a2_report(w: &StepFunction, cfg: &OptimizerConfig) -> Result<A2Report> {
    let inf = inf_a2(w, cfg)?;
    let classic = local_sup(
        w,
        &w.domain(),
        |m| {
            let total: f64 = m.iter().map(|x| x.weight).sum();
            let avg: f64 = m.iter().map(|x| x.weight * x.value).sum::<f64>() / total;
            let inv: f64 = m.iter().map(|x| x.weight / x.value).sum::<f64>() / total;
            Ok(avg * inv)
        },
        &[inf.witness],
        cfg,
    )?;
    Ok(A2Report {
        char_inf_variant: inf.value,
        char_classic: classic.value,
        witness_inf: inf.witness,
        witness_classic: classic.witness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RearrangementCheck {
    /// `W(φ*, I)`.
    pub lhs: f64,
    /// `W(φ, I)`.
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub witness_star: Interval,
    pub witness_phi: Interval,
    /// Grid estimates `(W(φ*), W(φ))` at four times the configured
    /// resolution, computed only when the optimizer slack was below
    /// `-VIOLATION_TOL`.
    pub grid_recheck: Option<(f64, f64)>,
    pub violation: bool,
}

/// Compares `W(φ*, I)` with `W(φ, I)` under one optimizer configuration.
///
/// Every reported `W` is the value of `V` on an actual interval, so both
/// sides are lower bounds. A flagged violation is recomputed on a finer grid
/// and each side keeps the larger of its two lower bounds.
pub fn verify_rearrangement(phi: &StepFunction, q: &ConvexWeight, cfg: &OptimizerConfig) -> Result<RearrangementCheck> {
    let star = rearrange_decreasing(phi)?;
    let i = Interval::UNIT;
    let ws = big_w(&star, &i, q, cfg)?;
    let wp = big_w(phi, &i, q, cfg)?;
    let mut check = RearrangementCheck {
        lhs: ws.value,
        rhs: wp.value,
        slack: wp.value - ws.value,
        witness_star: ws.witness,
        witness_phi: wp.witness,
        grid_recheck: None,
        violation: false,
    };
    if check.slack < -VIOLATION_TOL {
        let res = 4 * cfg.grid_resolution;
        let gs = big_w_grid(&star, &i, q, res, cfg)?;
        let gp = big_w_grid(phi, &i, q, res, cfg)?;
        check.grid_recheck = Some((gs.value, gp.value));
        if gs.value > check.lhs {
            check.lhs = gs.value;
            check.witness_star = gs.witness;
        }
        if gp.value > check.rhs {
            check.rhs = gp.value;
            check.witness_phi = gp.witness;
        }
        check.slack = check.rhs - check.lhs;
        check.violation = check.slack < -VIOLATION_TOL;
    }
    Ok(check)
}
