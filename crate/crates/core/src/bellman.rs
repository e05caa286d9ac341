//! The Bellman function `G`, the splitting search, the concavity and
//! dichotomy checks, and the recursive splitting simulation.
//!
//! Throughout, `Ψ(t, α) = V_𝒞(φ_α, [0, 1])`, where `𝒞 = 𝒞(φ, J)` and `φ_α`
//! concatenates the restrictions of `φ` to `J_- = [a, (1-t)a + tb]` and
//! `J_+ = [(1-t)a + tb, b]`. It is affine in `α`, with `Ψ(t, 1) = V_𝒞(φ, J_-)`
//! and `Ψ(t, 0) = V_𝒞(φ, J_+)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{big_w, minimize_c, v_c, OptimizerConfig};
use crate::search::golden_min;
use crate::steps::{Interval, StepFunction, LENGTH_TOL};
use crate::transforms::concatenate;
use crate::weight::ConvexWeight;

/// The bisection for `Ψ(t, 1) = Q(ε)` stops once the `t`-bracket or the
/// residual is below this.
pub const BISECT_TOL: f64 = 1e-10;

/// Deepest supported splitting simulation.
pub const MAX_DEPTH: usize = 12;

/// Pieces shorter than this are not split further.
pub const MIN_PIECE: f64 = 1e-9;

/// Slack allowed on `𝒞` in the dichotomy checks; `𝒞` of a smooth weight is
/// only located to about the square root of machine precision.
pub const DICHOTOMY_C_TOL: f64 = 1e-7;

/// Relative slack allowed on values compared with `Q(ε)`.
pub const VALUE_TOL: f64 = 1e-9;

/// Size of the `α` grid used as a second check of the concavity hypothesis.
const HYPOTHESIS_GRID: usize = 21;

const GOLDEN_MAX_ITER: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BellmanParams {
    pub epsilon: f64,
    pub epsilon_tilde: f64,
    pub delta: f64,
}

impl BellmanParams {
    pub fn new(epsilon: f64, epsilon_tilde: f64, delta: f64, q: &ConvexWeight) -> Result<Self> {
        if !(epsilon_tilde > 0.0 && epsilon_tilde < epsilon && epsilon.is_finite()) {
            return Err(Error::Argument(format!("need 0 < epsilon_tilde < epsilon, got {epsilon_tilde}, {epsilon}")));
        }
        let bound = delta_bound(epsilon, epsilon_tilde, q)?;
        if !(delta > 0.0 && delta < bound) {
            return Err(Error::Argument(format!("delta must lie in (0, {bound}), got {delta}")));
        }
        Ok(BellmanParams { epsilon, epsilon_tilde, delta })
    }

    /// Parameters with `δ` at half its admissible bound.
    pub fn with_half_delta(epsilon: f64, epsilon_tilde: f64, q: &ConvexWeight) -> Result<Self> {
        if !(epsilon_tilde > 0.0 && epsilon_tilde < epsilon) {
            return Err(Error::Argument(format!("need 0 < epsilon_tilde < epsilon, got {epsilon_tilde}, {epsilon}")));
        }
        let bound = delta_bound(epsilon, epsilon_tilde, q)?;
        Self::new(epsilon, epsilon_tilde, 0.5 * bound, q)
    }
}

/// `min(1/2, 1 - Q(ε̃)/Q(ε))`, the supremum of admissible `δ`.
pub fn delta_bound(epsilon: f64, epsilon_tilde: f64, q: &ConvexWeight) -> Result<f64> {
    let qe = q.try_eval(epsilon)?;
    let qt = q.try_eval(epsilon_tilde)?;
    if !(qe > qt) {
        return Err(Error::Argument(format!(
            "Q must increase between epsilon_tilde = {epsilon_tilde} and epsilon = {epsilon}"
        )));
    }
    Ok(0.5f64.min(1.0 - qt / qe))
}

/// Smallest `ε̃ = ε(1 - 2^-k)`, `k ≥ 1`, with `W(φ, J) ≤ Q(ε̃)`.
pub fn epsilon_tilde(
    phi: &StepFunction,
    j: &Interval,
    epsilon: f64,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<Option<f64>> {
    let w = big_w(phi, j, q, cfg)?.value;
    for k in 1..=40 {
        let e = epsilon * (1.0 - 0.5f64.powi(k));
        if w <= q.try_eval(e)? {
            return Ok(Some(e));
        }
    }
    Ok(None)
}

fn require_strict(q: &ConvexWeight) -> Result<()> {
    if q.strictly_convex() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{q} is not strictly convex, so the optimal constant is not unique")))
    }
}

/// `G(φ|_J)`: zero when `V_ε ≤ Q(ε)` or `𝒞 ≥ ε`, else `Q(ε) - V_ε`.
pub fn g_value(
    phi: &StepFunction,
    j: &Interval,
    epsilon: f64,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<f64> {
    require_strict(q)?;
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let c_star = minimize_c(phi, j, q, cfg)?.c_star;
    let q_eps = q.try_eval(epsilon)?;
    let v_eps = v_c(phi, j, epsilon, q)?;
    if q_eps >= v_eps || c_star >= epsilon {
        Ok(0.0)
    } else {
        Ok(q_eps - v_eps)
    }
}

/// Limit of `G(φ|_{J_n})` as `J_n` shrinks to a point where `φ = value`.
pub fn g_limit(value: f64, epsilon: f64, q: &ConvexWeight) -> f64 {
    if value >= 0.0 {
        0.0
    } else {
        q.eval(epsilon) - q.eval(value - epsilon)
    }
}

/// Split point of `J` at ratio `t`.
fn split_at(j: &Interval, t: f64) -> Result<(Interval, Interval)> {
    let m = j.lerp(t);
    Ok((Interval::new(j.a(), m)?, Interval::new(m, j.b())?))
}

/// `Ψ(t, α)` built explicitly from the concatenation.
pub fn psi(phi: &StepFunction, j: &Interval, c: f64, t: f64, alpha: f64, q: &ConvexWeight) -> Result<f64> {
    let (jm, jp) = split_at(j, t)?;
    let minus = phi.restrict(&jm)?;
    let plus = phi.restrict(&jp)?;
    v_c(&concatenate(&minus, &plus, alpha)?, &Interval::UNIT, c, q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitResult {
    pub t: f64,
    /// `𝒞(φ, J)` of the parent interval.
    pub c_used: f64,
    /// `Ψ(t, 0)`, that is `V_𝒞` over `J_+`.
    pub psi_left: f64,
    /// `Ψ(t, 1)`, that is `V_𝒞` over `J_-`.
    pub psi_right: f64,
    pub j_minus: Interval,
    pub j_plus: Interval,
}

/// Finds `t ∈ [δ, 1-δ]` with `max(Ψ(t, 0), Ψ(t, 1)) ≤ Q(ε)`, after checking
/// `W(φ, J) ≤ Q(ε̃)`.
pub fn split_search(
    phi: &StepFunction,
    j: &Interval,
    params: &BellmanParams,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<SplitResult> {
    require_strict(q)?;
    let w = big_w(phi, j, q, cfg)?.value;
    let q_tilde = q.try_eval(params.epsilon_tilde)?;
    if w > q_tilde {
        return Err(Error::Contract(format!(
            "splitting needs W(phi, J) <= Q(epsilon_tilde), got W = {w} > {q_tilde} on {j}"
        )));
    }
    split_search_unchecked(phi, j, params, q, cfg)
}

/// [`split_search`] without the `W` precondition check, for subintervals of
/// an interval that already passed it.
pub fn split_search_unchecked(
    phi: &StepFunction,
    j: &Interval,
    params: &BellmanParams,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<SplitResult> {
    require_strict(q)?;
    let c = minimize_c(phi, j, q, cfg)?.c_star;
    let q_eps = q.try_eval(params.epsilon)?;
    let psi1 = |t: f64| -> Result<f64> { v_c(phi, &split_at(j, t)?.0, c, q) };

    let delta = params.delta;
    let t = if psi1(delta)? <= q_eps {
        delta
    } else {
        let (mut lo, mut hi) = (delta, 1.0 - delta);
        if psi1(hi)? > q_eps {
            return Err(Error::Contract(format!(
                "no sign change of Psi(t, 1) - Q(epsilon) on [{lo}, {hi}] for {j}"
            )));
        }
        while hi - lo >= BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            let v = psi1(mid)?;
            if v <= q_eps {
                hi = mid;
                if q_eps - v < BISECT_TOL {
                    break;
                }
            } else {
                lo = mid;
            }
        }
        hi
    };
    let (j_minus, j_plus) = split_at(j, t)?;
    Ok(SplitResult {
        t,
        c_used: c,
        psi_left: v_c(phi, &j_plus, c, q)?,
        psi_right: v_c(phi, &j_minus, c, q)?,
        j_minus,
        j_plus,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Violated,
    /// `V(φ_α) ≤ Q(ε)` fails for some `α`; the inequality is not claimed.
    HypothesisFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub verdict: Verdict,
    /// `max_α V(φ_α, I) = min_c max(V_c(φ_-), V_c(φ_+))`.
    pub hypothesis_bound: f64,
    /// `(α, G(φ_α), α G(φ_-) + (1-α) G(φ_+))` for each supplied `α`.
    pub points: Vec<(f64, f64, f64)>,
    /// Smallest `G(φ_α) - α G(φ_-) - (1-α) G(φ_+)`.
    pub min_slack: f64,
}

/// `min_c max(V_c(φ_-), V_c(φ_+))`. Since `V_c(φ_α)` is affine in `α` and
/// convex in `c`, this equals `max_α V(φ_α, I)`.
pub fn concatenation_sup(
    minus: &StepFunction,
    plus: &StepFunction,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<f64> {
    let (jm, jp) = (minus.domain(), plus.domain());
    let lo = minus.min_value().min(plus.min_value());
    let hi = minus.max_value().max(plus.max_value());
    let f = |c: f64| -> Result<f64> { Ok(v_c(minus, &jm, c, q)?.max(v_c(plus, &jp, c, q)?)) };
    if lo == hi {
        return f(lo);
    }
    Ok(golden_min(f, lo, hi, cfg.c_tol, GOLDEN_MAX_ITER)?.fx)
}

/// Checks `G(φ_α) ≥ α G(φ_-) + (1-α) G(φ_+) - tol` at each `α`.
pub fn concavity_check(
    minus: &StepFunction,
    plus: &StepFunction,
    epsilon: f64,
    q: &ConvexWeight,
    alphas: &[f64],
    tol: f64,
    cfg: &OptimizerConfig,
) -> Result<ConcavityReport> {
    require_strict(q)?;
    let q_eps = q.try_eval(epsilon)?;
    let bound = concatenation_sup(minus, plus, q, cfg)?;
    let mut hypothesis = bound <= q_eps;
    if hypothesis {
        for k in 0..HYPOTHESIS_GRID {
            let a = k as f64 / (HYPOTHESIS_GRID - 1) as f64;
            let v = minimize_c(&concatenate(minus, plus, a)?, &Interval::UNIT, q, cfg)?.value;
            if v > q_eps + 1e-12 * q_eps.max(1.0) {
                hypothesis = false;
                break;
            }
        }
    }
    if !hypothesis {
        return Ok(ConcavityReport {
            verdict: Verdict::HypothesisFailed,
            hypothesis_bound: bound,
            points: Vec::new(),
            min_slack: f64::NAN,
        });
    }
    let g_minus = g_value(minus, &minus.domain(), epsilon, q, cfg)?;
    let g_plus = g_value(plus, &plus.domain(), epsilon, q, cfg)?;
    let mut points = Vec::with_capacity(alphas.len());
    let mut min_slack = f64::INFINITY;
    for &alpha in alphas {
        let lhs = g_value(&concatenate(minus, plus, alpha)?, &Interval::UNIT, epsilon, q, cfg)?;
        let rhs = alpha * g_minus + (1.0 - alpha) * g_plus;
        min_slack = min_slack.min(lhs - rhs);
        points.push((alpha, lhs, rhs));
    }
    let verdict = if min_slack >= -tol { Verdict::Holds } else { Verdict::Violated };
    Ok(ConcavityReport { verdict, hypothesis_bound: bound, points, min_slack })
}

fn require_w_below(phi: &StepFunction, j: &Interval, q_eps: f64, q: &ConvexWeight, cfg: &OptimizerConfig) -> Result<()> {
    let w = big_w(phi, j, q, cfg)?.value;
    if w < q_eps {
        Ok(())
    } else {
        Err(Error::Contract(format!("needs W(phi, J) < Q(epsilon), got W = {w} >= {q_eps} on {j}")))
    }
}

/// For non-negative `φ` with `W(φ, J) < Q(ε)`: either `𝒞(φ, J) ≥ ε` or
/// `V_ε(φ, J) ≤ Q(ε)`.
pub fn dichotomy_check(
    phi: &StepFunction,
    j: &Interval,
    epsilon: f64,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<bool> {
    Ok(dichotomy_margin(phi, j, epsilon, q, cfg)? >= 0.0)
}

/// `max(𝒞 - ε + DICHOTOMY_C_TOL, Q(ε)(1 + VALUE_TOL) - V_ε)`: non-negative
/// exactly when [`dichotomy_check`] holds.
pub fn dichotomy_margin(
    phi: &StepFunction,
    j: &Interval,
    epsilon: f64,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<f64> {
    require_strict(q)?;
    let (lo, _) = phi.range_on(j)?;
    if lo < 0.0 {
        return Err(Error::Contract(format!("function must be non-negative on {j}, minimum is {lo}")));
    }
    let q_eps = q.try_eval(epsilon)?;
    require_w_below(phi, j, q_eps, q, cfg)?;
    let c = minimize_c(phi, j, q, cfg)?.c_star;
    branch_margin(phi, j, c - epsilon, epsilon, q_eps, q)
}

fn branch_margin(phi: &StepFunction, j: &Interval, c_margin: f64, at: f64, q_eps: f64, q: &ConvexWeight) -> Result<f64> {
    let v = v_c(phi, j, at, q)?;
    Ok((c_margin + DICHOTOMY_C_TOL).max(q_eps + VALUE_TOL * q_eps.max(1.0) - v))
}

/// Both dichotomies for `φ` with values in `[A, B]`: at `A + ε` from below
/// and at `B - ε` from above.
pub fn corollary_check(
    phi: &StepFunction,
    j: &Interval,
    lower: f64,
    upper: f64,
    epsilon: f64,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<bool> {
    let (below, above) = corollary_margins(phi, j, lower, upper, epsilon, q, cfg)?;
    Ok(below >= 0.0 && above >= 0.0)
}

/// Margins of the two dichotomies in [`corollary_check`], in the sense of
/// [`dichotomy_margin`].
pub fn corollary_margins(
    phi: &StepFunction,
    j: &Interval,
    lower: f64,
    upper: f64,
    epsilon: f64,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<(f64, f64)> {
    require_strict(q)?;
    if !(lower <= upper) {
        return Err(Error::Contract(format!("needs A <= B, got {lower} > {upper}")));
    }
    let (lo, hi) = phi.range_on(j)?;
    if lo < lower || hi > upper {
        return Err(Error::Contract(format!("values [{lo}, {hi}] leave [{lower}, {upper}] on {j}")));
    }
    let q_eps = q.try_eval(epsilon)?;
    require_w_below(phi, j, q_eps, q, cfg)?;
    let c = minimize_c(phi, j, q, cfg)?.c_star;
    let below = branch_margin(phi, j, c - (lower + epsilon), lower + epsilon, q_eps, q)?;
    let above = branch_margin(phi, j, (upper - epsilon) - c, upper - epsilon, q_eps, q)?;
    Ok((below, above))
}

/// On the shrinking intervals `[s - 2^-n, s + 2^-n]`, once inside the segment
/// holding `s`, checks `V_c = Q(φ(s) - c)` exactly and `𝒞 = φ(s)` to `c_tol`.
pub fn local_limit_check(phi: &StepFunction, s: f64, q: &ConvexWeight, cfg: &OptimizerConfig) -> Result<bool> {
    require_strict(q)?;
    let k = phi
        .segment_index(s)
        .ok_or_else(|| Error::Domain(format!("{s} lies outside {}", phi.domain())))?;
    let (x0, x1) = (phi.knots()[k], phi.knots()[k + 1]);
    if s - x0 <= LENGTH_TOL || x1 - s <= LENGTH_TOL {
        return Err(Error::Argument(format!("{s} is a breakpoint; the limit is only claimed inside segments")));
    }
    let value = phi.values()[k];
    let dom = phi.domain();
    let mut checked = 0;
    for n in 1..=60 {
        let h = 0.5f64.powi(n);
        if s - h <= x0 || s + h >= x1 {
            continue;
        }
        let jn = Interval::new((s - h).max(dom.a()), (s + h).min(dom.b()))?;
        for c in [value, 0.0, value - 1.0, value + 0.5] {
            if v_c(phi, &jn, c, q)? != q.eval(value - c) {
                return Ok(false);
            }
        }
        if (minimize_c(phi, &jn, q, cfg)?.c_star - value).abs() > cfg.c_tol {
            return Ok(false);
        }
        checked += 1;
        if checked == 8 {
            break;
        }
    }
    Ok(checked > 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub depth: usize,
    pub node_index: usize,
    pub a: f64,
    pub b: f64,
    /// Split ratio, absent for nodes that were not split.
    pub t: Option<f64>,
    pub g_value: f64,
    pub psi_left: Option<f64>,
    pub psi_right: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InductionReport {
    pub rows: Vec<TraceRow>,
    /// `S_d = Σ_k |J_k^d| G(φ|_{J_k^d})` for `d = 0..=depth`.
    pub level_sums: Vec<f64>,
    /// Smallest and largest `|J_k^d| / |J|` at each depth.
    pub ratio_range: Vec<(f64, f64)>,
    /// Some piece fell below the minimum length and was carried unsplit.
    pub truncated: bool,
}

/// Splits `J` recursively `depth` times with [`split_search`], recording
/// `G` at every node.
pub fn induct(
    phi: &StepFunction,
    j: &Interval,
    params: &BellmanParams,
    q: &ConvexWeight,
    depth: usize,
    cfg: &OptimizerConfig,
) -> Result<InductionReport> {
    if depth > MAX_DEPTH {
        return Err(Error::Argument(format!("depth {depth} exceeds the cap of {MAX_DEPTH}")));
    }
    let mut level = vec![*j];
    let mut report = InductionReport { rows: Vec::new(), level_sums: Vec::new(), ratio_range: Vec::new(), truncated: false };
    for d in 0..=depth {
        let mut next = Vec::with_capacity(2 * level.len());
        let mut sum = 0.0;
        let mut range = (f64::INFINITY, 0.0f64);
        for (idx, node) in level.iter().enumerate() {
            let g = g_value(phi, node, params.epsilon, q, cfg)?;
            sum += node.len() * g;
            let ratio = node.len() / j.len();
            range = (range.0.min(ratio), range.1.max(ratio));
            let mut row = TraceRow { depth: d, node_index: idx, a: node.a(), b: node.b(), t: None, g_value: g, psi_left: None, psi_right: None };
            if d < depth {
                if node.len() < MIN_PIECE {
                    report.truncated = true;
                    next.push(*node);
                } else {
                    let split = if d == 0 {
                        split_search(phi, node, params, q, cfg)?
                    } else {
                        split_search_unchecked(phi, node, params, q, cfg)?
                    };
                    row.t = Some(split.t);
                    row.psi_left = Some(split.psi_left);
                    row.psi_right = Some(split.psi_right);
                    next.push(split.j_minus);
                    next.push(split.j_plus);
                }
            }
            report.rows.push(row);
        }
        report.level_sums.push(sum);
        report.ratio_range.push(range);
        level = next;
    }
    Ok(report)
}
