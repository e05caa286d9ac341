//! Function-level operators: rearrangement, truncation, concatenation,
//! 1-Lipschitz composition, regularized weights and the `log`/`exp` bridge
//! between weights and their logarithms.

use crate::error::{Error, Result};
use crate::steps::{Interval, StepFunction};
use crate::weight::ConvexWeight;

/// Decreasing rearrangement `φ*` of a function on `[0, 1]`.
///
/// Segments are sorted by value, largest first; equal values keep their
/// original order, and equal neighbours are merged afterwards.
pub fn rearrange_decreasing(phi: &StepFunction) -> Result<StepFunction> {
    if phi.domain() != Interval::UNIT {
        return Err(Error::Domain(format!("rearrangement needs domain [0, 1], got {}", phi.domain())));
    }
    let mut pieces: Vec<(f64, f64)> = phi.segments().map(|s| (s.len, s.value)).collect();
    pieces.sort_by(|x, y| y.1.total_cmp(&x.1));
    let mut knots = Vec::with_capacity(pieces.len() + 1);
    let mut acc = 0.0;
    knots.push(acc);
    for &(len, _) in &pieces {
        acc += len;
        knots.push(acc);
    }
    let values = pieces.into_iter().map(|(_, v)| v).collect();
    Ok(StepFunction::from_knots(Interval::UNIT, knots, values)?.normalize())
}

/// Two-sided truncation `min(B, max(A, φ))`.
pub fn truncate(phi: &StepFunction, lower: f64, upper: f64) -> Result<StepFunction> {
    if !(lower <= upper) {
        return Err(Error::Argument(format!("truncation needs A <= B, got A = {lower}, B = {upper}")));
    }
    phi.map_values(|v| v.clamp(lower, upper))
}

/// α-concatenation: `φ_-` rescaled onto `[0, α)` followed by `φ_+` rescaled
/// onto `[α, 1]`.
pub fn concatenate(minus: &StepFunction, plus: &StepFunction, alpha: f64) -> Result<StepFunction> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Argument(format!("concatenation parameter must lie in [0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(minus.rescaled_to(Interval::UNIT));
    }
    if alpha == 0.0 {
        return Ok(plus.rescaled_to(Interval::UNIT));
    }
    let left = minus.rescaled_to(Interval::new(0.0, alpha)?);
    let right = plus.rescaled_to(Interval::new(alpha, 1.0)?);
    let mut knots = left.knots().to_vec();
    knots.extend_from_slice(&right.knots()[1..]);
    let mut values = left.values().to_vec();
    values.extend_from_slice(right.values());
    StepFunction::from_knots(Interval::UNIT, knots, values)
}

/// A continuous piecewise-linear map `ℝ → ℝ` with slopes in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzPL {
    breakpoints: Vec<f64>,
    /// `slopes[k]` applies left of `breakpoints[k]`; the last one applies to the right of all breakpoints.
    slopes: Vec<f64>,
    /// Value at the first breakpoint (or at 0 when there is none).
    anchor: f64,
    /// Values at the breakpoints, derived from the above.
    at_breaks: Vec<f64>,
}

impl LipschitzPL {
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, anchor: f64) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::Argument(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) || breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Argument("breakpoints must be finite and strictly increasing".into()));
        }
        if let Some(s) = slopes.iter().find(|s| !(s.abs() <= 1.0)) {
            return Err(Error::Argument(format!("slope {s} is not in [-1, 1]")));
        }
        if !anchor.is_finite() {
            return Err(Error::Argument("anchor value must be finite".into()));
        }
        let mut at_breaks = Vec::with_capacity(breakpoints.len());
        if !breakpoints.is_empty() {
            at_breaks.push(anchor);
            for k in 1..breakpoints.len() {
                let prev = at_breaks[k - 1];
                at_breaks.push(prev + slopes[k] * (breakpoints[k] - breakpoints[k - 1]));
            }
        }
        Ok(LipschitzPL { breakpoints, slopes, anchor, at_breaks })
    }

    pub fn identity() -> Self {
        Self::new(Vec::new(), vec![1.0], 0.0).expect("identity is valid")
    }

    /// `Tr_{A,B}(s) = min(B, max(A, s))`.
    pub fn truncation(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::Argument(format!("truncation needs A <= B, got A = {lower}, B = {upper}")));
        }
        if lower == upper {
            return Self::new(vec![lower], vec![0.0, 0.0], lower);
        }
        Self::new(vec![lower, upper], vec![0.0, 1.0, 0.0], lower)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn eval(&self, s: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return self.anchor + self.slopes[0] * s;
        }
        let k = self.breakpoints.partition_point(|&b| b <= s);
        if k == 0 {
            self.anchor + self.slopes[0] * (s - self.breakpoints[0])
        } else {
            self.at_breaks[k - 1] + self.slopes[k] * (s - self.breakpoints[k - 1])
        }
    }
}

/// `f ∘ φ`.
pub fn compose_lipschitz(f: &LipschitzPL, phi: &StepFunction) -> Result<StepFunction> {
    phi.map_values(|v| f.eval(v))
}

/// `Q_n(t) = Q(t) + t²/n`.
pub fn regularized_weight(q: &ConvexWeight, n: u32) -> Result<ConvexWeight> {
    q.regularized(n)
}

/// `w = e^φ`.
pub fn weight_from_phi(phi: &StepFunction) -> Result<StepFunction> {
    phi.map_values(f64::exp)
}

/// `φ = log w`; every value of `w` must be positive.
pub fn phi_from_weight(w: &StepFunction) -> Result<StepFunction> {
    if let Some(&bad) = w.values().iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Argument(format!("weight takes non-positive value {bad}")));
    }
    w.map_values(f64::ln)
}
