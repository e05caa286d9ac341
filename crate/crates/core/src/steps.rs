//! Piecewise-constant functions on subintervals of `[0, 1]`.
//!
//! A [`StepFunction`] stores the cumulative cut points ("knots") of its
//! segments once, at construction. Every cut against a query interval reuses
//! those knots, so the masses of a partition of `J` add up to the masses of
//! `J` bit-for-bit whenever the partition points are themselves knots.
//!
//! Pointwise evaluation is half-open: at an interior knot the function takes
//! the value of the segment to the right. Averages never see this choice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the sum of segment lengths of a constructed function.
pub const LENGTH_TOL: f64 = 1e-12;

/// Absolute tolerance on the sum of segment lengths accepted from JSON input.
pub const INGEST_TOL: f64 = 1e-9;

/// Slack used when testing interval containment.
const CONTAIN_TOL: f64 = 1e-12;

/// A closed subinterval `[a, b]` of `[0, 1]` with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { a: 0.0, b: 1.0 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Argument(format!("interval endpoints must be finite, got [{a}, {b}]")));
        }
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return Err(Error::Domain(format!("interval [{a}, {b}] is not inside [0, 1]")));
        }
        if a >= b {
            return Err(Error::Argument(format!("interval [{a}, {b}] has non-positive length")));
        }
        Ok(Interval { a, b })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    /// The point `(1 - t) a + t b`.
    #[inline]
    pub fn lerp(&self, t: f64) -> f64 {
        (1.0 - t) * self.a + t * self.b
    }

    pub fn contains(&self, other: &Interval) -> bool {
        other.a >= self.a - CONTAIN_TOL && other.b <= self.b + CONTAIN_TOL
    }

    pub fn contains_point(&self, s: f64) -> bool {
        s >= self.a && s <= self.b
    }

    /// Intersection with `other`, if it has positive length.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let a = self.a.max(other.a);
        let b = self.b.min(other.b);
        (a < b).then_some(Interval { a, b })
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(j: Interval) -> Self {
        [j.a, j.b]
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub len: f64,
    #[serde(rename = "val")]
    pub value: f64,
}

impl Segment {
    pub fn new(len: f64, value: f64) -> Result<Self> {
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::Argument(format!("segment length must be positive, got {len}")));
        }
        if !value.is_finite() {
            return Err(Error::Argument(format!("segment value must be finite, got {value}")));
        }
        Ok(Segment { len, value })
    }
}

/// A piece of mass `weight` sitting at `value`; the result of cutting a
/// step function against an interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Mass {
    pub weight: f64,
    pub value: f64,
}

/// Weighted average of `g(value)` over a list of masses.
pub(crate) fn mass_average(masses: &[Mass], mut g: impl FnMut(f64) -> f64) -> f64 {
    if let [single] = masses {
        return g(single.value);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for m in masses {
        num += m.weight * g(m.value);
        den += m.weight;
    }
    num / den
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    domain: Interval,
    /// `knots[0] = domain.a`, `knots[n] = domain.b`, strictly increasing.
    knots: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StepFunctionJson {
    domain: [f64; 2],
    segments: Vec<Segment>,
}

impl StepFunction {
    pub fn new(domain: Interval, segments: &[Segment]) -> Result<Self> {
        Self::with_tolerance(domain, segments, LENGTH_TOL)
    }

    /// Function on `[0, 1]` given as `(length, value)` pairs.
    pub fn on_unit(pairs: &[(f64, f64)]) -> Result<Self> {
        let segments = pairs
            .iter()
            .map(|&(len, value)| Segment::new(len, value))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Interval::UNIT, &segments)
    }

    pub fn constant(domain: Interval, value: f64) -> Result<Self> {
        Self::new(domain, &[Segment::new(domain.len(), value)?])
    }

    fn with_tolerance(domain: Interval, segments: &[Segment], tol: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Argument("a step function needs at least one segment".into()));
        }
        for s in segments {
            Segment::new(s.len, s.value)?;
        }
        let total: f64 = segments.iter().map(|s| s.len).sum();
        if (total - domain.len()).abs() > tol {
            return Err(Error::Argument(format!(
                "segment lengths sum to {total}, domain {domain} has length {}",
                domain.len()
            )));
        }
        // Rescale so the knots land on the domain end; the correction is at most `tol`.
        let scale = domain.len() / total;
        let mut knots = Vec::with_capacity(segments.len() + 1);
        let mut acc = domain.a();
        knots.push(acc);
        for s in &segments[..segments.len() - 1] {
            acc += s.len * scale;
            knots.push(acc);
        }
        knots.push(domain.b());
        Self::from_knots(domain, knots, segments.iter().map(|s| s.value).collect())
    }

    /// Builds a function from explicit cut points. Zero-width pieces produced by
    /// rounding are dropped.
    pub(crate) fn from_knots(domain: Interval, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(knots.len(), values.len() + 1);
        let mut k = Vec::with_capacity(knots.len());
        let mut v = Vec::with_capacity(values.len());
        k.push(domain.a());
        for (i, &value) in values.iter().enumerate() {
            let right = if i + 1 == values.len() { domain.b() } else { knots[i + 1].min(domain.b()) };
            if right > *k.last().unwrap() {
                k.push(right);
                v.push(value);
            } else if i + 1 == values.len() && !v.is_empty() {
                // Trailing sliver collapsed; the previous segment already ends at b.
                *k.last_mut().unwrap() = domain.b();
            }
        }
        if v.is_empty() {
            return Err(Error::Argument("step function has no segment of positive length".into()));
        }
        Ok(StepFunction { domain, knots: k, values: v })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: StepFunctionJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let domain = Interval::new(raw.domain[0], raw.domain[1])?;
        Self::with_tolerance(domain, &raw.segments, INGEST_TOL)
    }

    pub fn to_json(&self) -> String {
        let raw = StepFunctionJson {
            domain: self.domain.into(),
            segments: self.segments().collect(),
        };
        serde_json::to_string(&raw).expect("step function serializes")
    }

    #[inline]
    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_segments(&self) -> usize {
        self.values.len()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.values.iter().enumerate().map(move |(i, &value)| Segment {
            len: self.knots[i + 1] - self.knots[i],
            value,
        })
    }

    /// Index of the segment containing `s` under the half-open convention.
    pub fn segment_index(&self, s: f64) -> Option<usize> {
        if !self.domain.contains_point(s) {
            return None;
        }
        let idx = self.knots.partition_point(|&k| k <= s);
        Some(idx.saturating_sub(1).min(self.values.len() - 1))
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        self.segment_index(s)
            .map(|i| self.values[i])
            .ok_or_else(|| Error::Domain(format!("point {s} outside {}", self.domain)))
    }

    fn check_inside(&self, j: &Interval) -> Result<Interval> {
        if !self.domain.contains(j) {
            return Err(Error::Domain(format!("{j} is not contained in {}", self.domain)));
        }
        Ok(Interval {
            a: j.a.max(self.domain.a),
            b: j.b.min(self.domain.b),
        })
    }

    /// Pieces of the function over `[a, b]`; caller guarantees `a < b` inside the domain.
    pub(crate) fn masses_into(&self, a: f64, b: f64, out: &mut Vec<Mass>) {
        out.clear();
        let n = self.values.len();
        let mut i = self.knots[1..n].partition_point(|&k| k <= a);
        while i < n && self.knots[i] < b {
            let lo = self.knots[i].max(a);
            let hi = self.knots[i + 1].min(b);
            if hi > lo {
                out.push(Mass { weight: hi - lo, value: self.values[i] });
            }
            i += 1;
        }
    }

    pub(crate) fn masses(&self, j: &Interval) -> Result<Vec<Mass>> {
        let j = self.check_inside(j)?;
        let mut out = Vec::with_capacity(self.values.len());
        self.masses_into(j.a, j.b, &mut out);
        Ok(out)
    }

    pub fn restrict(&self, j: &Interval) -> Result<StepFunction> {
        let j = self.check_inside(j)?;
        let n = self.values.len();
        let mut knots = vec![j.a];
        let mut values = Vec::new();
        let first = self.knots[1..n].partition_point(|&k| k <= j.a);
        for i in first..n {
            if self.knots[i] >= j.b {
                break;
            }
            let hi = self.knots[i + 1].min(j.b);
            if hi > *knots.last().unwrap() {
                knots.push(hi);
                values.push(self.values[i]);
            }
        }
        *knots.last_mut().unwrap() = j.b;
        Ok(StepFunction { domain: j, knots, values })
    }

    /// `⟨g ∘ φ⟩_J`, computed exactly from the cut segments.
    pub fn average_of(&self, j: &Interval, g: impl Fn(f64) -> f64) -> Result<f64> {
        let masses = self.masses(j)?;
        let mut bad = None;
        let avg = mass_average(&masses, |v| {
            let y = g(v);
            if !y.is_finite() && bad.is_none() {
                bad = Some(v);
            }
            y
        });
        match bad {
            Some(value) => Err(Error::Evaluation { weight: "integrand".into(), value }),
            None => Ok(avg),
        }
    }

    pub fn average(&self, j: &Interval) -> Result<f64> {
        self.average_of(j, |v| v)
    }

    /// Smallest and largest value taken on a set of positive measure inside `J`.
    pub fn range_on(&self, j: &Interval) -> Result<(f64, f64)> {
        let masses = self.masses(j)?;
        Ok(masses
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m.value), hi.max(m.value))))
    }

    /// Applies `f` to every segment value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<StepFunction> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Evaluation { weight: "value map".into(), value: bad });
        }
        Ok(StepFunction {
            domain: self.domain,
            knots: self.knots.clone(),
            values,
        })
    }

    /// Merges neighbouring segments with equal values.
    pub fn normalize(&self) -> StepFunction {
        let mut knots = vec![self.knots[0]];
        let mut values: Vec<f64> = Vec::with_capacity(self.values.len());
        for (i, &v) in self.values.iter().enumerate() {
            if values.last() == Some(&v) {
                *knots.last_mut().unwrap() = self.knots[i + 1];
            } else {
                values.push(v);
                knots.push(self.knots[i + 1]);
            }
        }
        StepFunction { domain: self.domain, knots, values }
    }

    /// The same function transported affinely onto `target`.
    pub fn rescaled_to(&self, target: Interval) -> StepFunction {
        let src = self.domain;
        let scale = target.len() / src.len();
        let n = self.knots.len();
        let mut knots: Vec<f64> = self
            .knots
            .iter()
            .map(|&k| target.a + (k - src.a) * scale)
            .collect();
        knots[0] = target.a;
        knots[n - 1] = target.b;
        StepFunction::from_knots(target, knots, self.values.clone())
            .unwrap_or_else(|_| StepFunction {
                domain: target,
                knots: vec![target.a, target.b],
                values: vec![self.values[0]],
            })
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
