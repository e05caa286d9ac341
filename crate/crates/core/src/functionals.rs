//! The averaging functionals `V_c`, `V`, the optimal constant `𝒞`, and the
//! interval supremum `W`.
//!
//! # Computing `W` on a step function
//!
//! Fix the segment `i` holding the left end of `L = [a, b]` and the segment
//! `j > i` holding the right end. Inside this *cell*, `L` is described by the
//! two partial masses `u = x_{i+1} - a` and `v = b - x_j`, and for a fixed `c`
//! the map `(u, v) ↦ V_c(φ, L)` is a ratio of affine functions. Such a map is
//! quasi-linear, so its maximum over the cell is attained at one of the (at
//! most four) corner intervals whose ends are knots. `c ↦ V_c` is convex, and
//! the minimax theorem for quasi-concave/convex functions on a compact set
//! gives
//!
//! ```text
//! sup_{L in cell} V(φ, L) = min_c max_{corner K} V_c(φ, K).
//! ```
//!
//! The right-hand side is a one-dimensional convex minimization. A maximizing
//! interval is recovered from the corners that are active at the optimal `c`:
//! it lies on the segment joining two of them in `(a, b)` coordinates, along
//! which `V` is unimodal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::{brent_min, golden_max_closed, golden_min};
use crate::steps::{mass_average, Interval, Mass, StepFunction};
use crate::weight::{ConvexWeight, FastPath};

/// Maximum shrink steps of a golden-section search; the tolerances stop it first.
const GOLDEN_MAX_ITER: usize = 400;

/// Resolution of endpoint searches in `(a, b)` coordinates.
const ENDPOINT_TOL: f64 = 1e-12;

/// Distance within which the minimizer is compared against a nearby value of `φ`.
const SNAP_RADIUS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Width of the final bracket in the search for `𝒞`.
    pub c_tol: f64,
    /// Relative gap below which a cell supremum counts as attained.
    pub w_rel_tol: f64,
    /// Number of grid steps of the brute-force oracle.
    pub grid_resolution: usize,
    /// Number of best starting candidates refined by local ascent.
    pub multistart_top: usize,
    /// Maximum number of coordinate-ascent sweeps per start.
    pub refine_iters: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            c_tol: 1e-11,
            w_rel_tol: 1e-9,
            grid_resolution: 512,
            multistart_top: 8,
            refine_iters: 60,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c_tol > 0.0
            && self.w_rel_tol > 0.0
            && self.grid_resolution > 0
            && self.multistart_top > 0
            && self.refine_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("optimizer settings must be positive: {self:?}")))
        }
    }
}

/// `V(φ, J)` together with its minimizing constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalResult {
    pub value: f64,
    pub c_star: f64,
    /// False for weights that are not strictly convex, where `c_star` is the
    /// midpoint of the minimizing set.
    pub c_star_unique: bool,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SupMethod {
    /// The witness has both ends on knots.
    BreakpointEnum,
    /// The witness was found by a search strictly inside a cell.
    RefinedLocal,
    GridOracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupremumResult {
    pub value: f64,
    pub witness: Interval,
    pub method: SupMethod,
}

pub(crate) fn vc_masses(masses: &[Mass], c: f64, q: &ConvexWeight) -> Result<f64> {
    let v = mass_average(masses, |x| q.eval(x - c));
    if v.is_finite() {
        return Ok(v);
    }
    for m in masses {
        q.try_eval(m.value - c)?;
    }
    Err(Error::Evaluation { weight: q.descriptor(), value: f64::NAN })
}

fn value_range(masses: &[Mass]) -> (f64, f64) {
    masses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m.value), hi.max(m.value)))
}

/// Midpoint of the weighted median set.
pub(crate) fn weighted_median(masses: &[Mass]) -> f64 {
    let mut sorted: Vec<Mass> = masses.to_vec();
    sorted.sort_by(|x, y| x.value.total_cmp(&y.value));
    let total: f64 = sorted.iter().map(|m| m.weight).sum();
    let half = 0.5 * total;
    let tie = 1e-12 * total;
    let mut cum = 0.0;
    for (k, m) in sorted.iter().enumerate() {
        cum += m.weight;
        if cum >= half - tie {
            if cum <= half + tie {
                // Mass splits evenly: every point up to the next distinct value is a median.
                if let Some(next) = sorted[k + 1..].iter().find(|n| n.value > m.value) {
                    return 0.5 * (m.value + next.value);
                }
            }
            return m.value;
        }
    }
    sorted.last().map(|m| m.value).unwrap_or(f64::NAN)
}

pub(crate) fn minimize_masses(
    masses: &[Mass],
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<FunctionalResult> {
    let (lo, hi) = value_range(masses);
    let unique = q.strictly_convex();
    if lo == hi {
        return Ok(FunctionalResult { value: q.try_eval(0.0)?, c_star: lo, c_star_unique: unique, iterations: 0 });
    }
    let c_star = match q.fast_path() {
        FastPath::Mean => mass_average(masses, |v| v).clamp(lo, hi),
        FastPath::Median => weighted_median(masses),
        FastPath::None => {
            let r = brent_min(|c| vc_masses(masses, c, q), lo, hi, cfg.c_tol, GOLDEN_MAX_ITER)?;
            let (mut c_star, mut value) = (r.x, r.fx);
            // A non-smooth Q can put the minimum on a kink at a value of φ.
            if let Some(v) = masses
                .iter()
                .map(|m| m.value)
                .filter(|v| (v - r.x).abs() <= SNAP_RADIUS)
                .min_by(|a, b| (a - r.x).abs().total_cmp(&(b - r.x).abs()))
            {
                let at = vc_masses(masses, v, q)?;
                if at < value {
                    (c_star, value) = (v, at);
                }
            }
            return Ok(FunctionalResult { value, c_star, c_star_unique: unique, iterations: r.iterations });
        }
    };
    Ok(FunctionalResult {
        value: vc_masses(masses, c_star, q)?,
        c_star,
        c_star_unique: unique,
        iterations: 0,
    })
}

/// `V_c(φ, J) = ⟨Q(φ - c)⟩_J`.
pub fn v_c(phi: &StepFunction, j: &Interval, c: f64, q: &ConvexWeight) -> Result<f64> {
    if !c.is_finite() {
        return Err(Error::Argument(format!("constant c must be finite, got {c}")));
    }
    vc_masses(&phi.masses(j)?, c, q)
}

/// `V(φ, J) = inf_c V_c(φ, J)` and the minimizing constant `𝒞(φ, J)`.
///
/// The search runs over `[min φ, max φ]` on `J`: moving `c` into that range
/// decreases every term because `Q` is even and increasing on `[0, ∞)`.
pub fn minimize_c(
    phi: &StepFunction,
    j: &Interval,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<FunctionalResult> {
    minimize_masses(&phi.masses(j)?, q, cfg)
}

/// Search over intervals inside a fixed function, reusing one mass buffer.
pub(crate) struct IntervalObjective<'a, F> {
    phi: &'a StepFunction,
    objective: F,
    buf: Vec<Mass>,
}

impl<'a, F> IntervalObjective<'a, F>
where
    F: FnMut(&[Mass]) -> Result<f64>,
{
    pub(crate) fn new(phi: &'a StepFunction, objective: F) -> Self {
        IntervalObjective { phi, objective, buf: Vec::with_capacity(phi.num_segments()) }
    }

    pub(crate) fn eval(&mut self, a: f64, b: f64) -> Result<f64> {
        self.phi.masses_into(a, b, &mut self.buf);
        (self.objective)(&self.buf)
    }
}

/// One cell of the minimax computation.
struct Cell {
    /// `min_c max_corner V_c`.
    bound: f64,
    c: f64,
    corners: Vec<(f64, f64)>,
    corner_masses: Vec<Vec<Mass>>,
    /// Knot range `[x_i, x_{i+1}] × [x_j, x_{j+1}]`.
    a_range: (f64, f64),
    b_range: (f64, f64),
}

#[derive(Clone, Copy)]
struct Candidate {
    value: f64,
    a: f64,
    b: f64,
    method: SupMethod,
}

impl Candidate {
    /// Larger value wins; equal values prefer the lexicographically smaller `(a, b)`.
    fn beats(&self, other: &Candidate) -> bool {
        self.value > other.value
            || (self.value == other.value && (self.a, self.b) < (other.a, other.b))
    }
}

/// `W(φ, J) = sup { V(φ, L) : L ⊆ J }`.
///
/// The reported value is `V(φ, witness)`, so it never exceeds the true
/// supremum; it matches the cell minimax bound to within `w_rel_tol`.
pub fn big_w(
    phi: &StepFunction,
    j: &Interval,
    q: &ConvexWeight,
    cfg: &OptimizerConfig,
) -> Result<SupremumResult> {
    let f = phi.restrict(j)?.normalize();
    let knots = f.knots();
    let values = f.values();
    let n = values.len();

    let mut best = Candidate { value: q.try_eval(0.0)?, a: knots[0], b: knots[1], method: SupMethod::BreakpointEnum };
    if n == 1 {
        return Ok(to_result(best));
    }

    let mut cells = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for k in i + 1..n {
            cells.push(build_cell(&f, i, k, q, cfg)?);
        }
    }
    // Stable: equal bounds keep the (i, j) enumeration order.
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&x, &y| cells[y].bound.total_cmp(&cells[x].bound));

    for idx in order {
        let cell = &cells[idx];
        if cell.bound <= best.value {
            break;
        }
        let cand = recover_witness(&f, cell, q, cfg)?;
        if cand.beats(&best) {
            best = cand;
        }
    }
    Ok(to_result(best))
}

fn to_result(c: Candidate) -> SupremumResult {
    SupremumResult {
        value: c.value,
        witness: Interval::new(c.a, c.b).expect("witness inside [0, 1]"),
        method: c.method,
    }
}

fn build_cell(f: &StepFunction, i: usize, k: usize, q: &ConvexWeight, cfg: &OptimizerConfig) -> Result<Cell> {
    let x = f.knots();
    let mut corners = vec![(x[i], x[k + 1]), (x[i + 1], x[k + 1]), (x[i], x[k])];
    if x[i + 1] < x[k] {
        corners.push((x[i + 1], x[k]));
    }
    let corner_masses: Vec<Vec<Mass>> = corners
        .iter()
        .map(|&(a, b)| {
            let mut buf = Vec::new();
            f.masses_into(a, b, &mut buf);
            buf
        })
        .collect();
    let vals = &f.values()[i..=k];
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let upper = |c: f64| -> Result<f64> {
        let mut m = f64::NEG_INFINITY;
        for cm in &corner_masses {
            m = m.max(vc_masses(cm, c, q)?);
        }
        Ok(m)
    };
    let r = golden_min(upper, lo, hi, cfg.c_tol, GOLDEN_MAX_ITER)?;
    Ok(Cell {
        bound: r.fx,
        c: r.x,
        corners,
        corner_masses,
        a_range: (x[i], x[i + 1]),
        b_range: (x[k], x[k + 1]),
    })
}

fn recover_witness(f: &StepFunction, cell: &Cell, q: &ConvexWeight, cfg: &OptimizerConfig) -> Result<Candidate> {
    let at_c: Vec<f64> = cell
        .corner_masses
        .iter()
        .map(|cm| vc_masses(cm, cell.c, q))
        .collect::<Result<_>>()?;
    let top = at_c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let active_tol = 1e-7 * top.abs().max(1.0);
    let active: Vec<usize> = (0..at_c.len()).filter(|&k| at_c[k] >= top - active_tol).collect();

    let mut obj = IntervalObjective::new(f, |m: &[Mass]| minimize_masses(m, q, cfg).map(|r| r.value));
    let mut best: Option<Candidate> = None;
    let offer = |cand: Candidate, best: &mut Option<Candidate>| {
        if best.as_ref().map_or(true, |b| cand.beats(b)) {
            *best = Some(cand);
        }
    };
    for &k in &active {
        let (a, b) = cell.corners[k];
        let value = minimize_masses(&cell.corner_masses[k], q, cfg)?.value;
        offer(Candidate { value, a, b, method: SupMethod::BreakpointEnum }, &mut best);
    }
    for (p, &k1) in active.iter().enumerate() {
        for &k2 in &active[p + 1..] {
            let (a1, b1) = cell.corners[k1];
            let (a2, b2) = cell.corners[k2];
            let r = golden_max_closed(
                |s| obj.eval(a1 + s * (a2 - a1), b1 + s * (b2 - b1)),
                0.0,
                1.0,
                ENDPOINT_TOL,
                GOLDEN_MAX_ITER,
            )?;
            if r.x > 0.0 && r.x < 1.0 {
                let a = a1 + r.x * (a2 - a1);
                let b = b1 + r.x * (b2 - b1);
                offer(Candidate { value: r.fx, a, b, method: SupMethod::RefinedLocal }, &mut best);
            }
        }
    }
    let mut best = best.expect("at least one active corner");
    if best.value < cell.bound - cfg.w_rel_tol * cell.bound.abs().max(1.0) {
        let nested = nested_cell_search(&mut obj, cell)?;
        if nested.beats(&best) {
            best = nested;
        }
    }
    Ok(best)
}

/// Exact maximization of a quasi-concave objective over a cell by nested
/// golden-section searches. Used when several corners tie at the optimal `c`.
fn nested_cell_search<F>(obj: &mut IntervalObjective<'_, F>, cell: &Cell) -> Result<Candidate>
where
    F: FnMut(&[Mass]) -> Result<f64>,
{
    let (a_lo, a_hi) = cell.a_range;
    let (b_lo, b_hi) = cell.b_range;
    let inner_best = |obj: &mut IntervalObjective<'_, F>, a: f64| -> Result<(f64, f64)> {
        let lo = b_lo.max(a + ENDPOINT_TOL).min(b_hi);
        let r = golden_max_closed(|b| obj.eval(a, b), lo, b_hi, ENDPOINT_TOL, GOLDEN_MAX_ITER)?;
        Ok((r.x, r.fx))
    };
    let outer = golden_max_closed(|a| inner_best(obj, a).map(|(_, v)| v), a_lo, a_hi, ENDPOINT_TOL, GOLDEN_MAX_ITER)?;
    let (b, value) = inner_best(obj, outer.x)?;
    Ok(Candidate { value, a: outer.x, b, method: SupMethod::RefinedLocal })
}

/// Grid points `J.a + k |J| / resolution`, with the last point pinned to `J.b`.
pub(crate) fn grid_points(j: &Interval, resolution: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=resolution).map(|k| j.a() + j.len() * k as f64 / resolution as f64).collect();
    pts[resolution] = j.b();
    pts
}

/// Brute force: the best objective value over all pairs of grid points.
/// Ties keep the lexicographically first pair.
pub(crate) fn grid_sup(
    phi: &StepFunction,
    j: &Interval,
    resolution: usize,
    objective: impl FnMut(&[Mass]) -> Result<f64>,
) -> Result<SupremumResult> {
    if resolution == 0 {
        return Err(Error::Argument("grid resolution must be positive".into()));
    }
    if !phi.domain().contains(j) {
        return Err(Error::Domain(format!("{j} is not contained in {}", phi.domain())));
    }
    let pts = grid_points(j, resolution);
    let mut obj = IntervalObjective::new(phi, objective);
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for p in 0..resolution {
        for r in p + 1..=resolution {
            let v = obj.eval(pts[p], pts[r])?;
            if v > best.0 {
                best = (v, p, r);
            }
        }
    }
    Ok(SupremumResult {
        value: best.0,
        witness: Interval::new(pts[best.1], pts[best.2])?,
        method: SupMethod::GridOracle,
    })
}

/// `W(φ, J)` over all pairs of a uniform grid with `resolution + 1` points.
pub fn big_w_grid(
    phi: &StepFunction,
    j: &Interval,
    q: &ConvexWeight,
    resolution: usize,
    cfg: &OptimizerConfig,
) -> Result<SupremumResult> {
    grid_sup(phi, j, resolution, |m| minimize_masses(m, q, cfg).map(|r| r.value))
}

/// Multistart local maximization of an interval objective that is not of
/// minimax type (for instance, oscillation about the interval mean).
///
/// Starts are all knot pairs, the balanced straddle of every interior knot,
/// and `seeds`; the best `multistart_top` are refined by coordinate-wise
/// golden-section ascent, each coordinate searched separately on every
/// segment adjacent to its current position.
pub(crate) fn local_sup(
    phi: &StepFunction,
    j: &Interval,
    objective: impl FnMut(&[Mass]) -> Result<f64>,
    seeds: &[Interval],
    cfg: &OptimizerConfig,
) -> Result<SupremumResult> {
    let f = phi.restrict(j)?.normalize();
    let x = f.knots().to_vec();
    let n = f.num_segments();
    let mut obj = IntervalObjective::new(&f, objective);

    let mut starts: Vec<(f64, f64)> = Vec::new();
    for p in 0..n {
        for r in p + 1..=n {
            starts.push((x[p], x[r]));
        }
    }
    for k in 1..n {
        let s = (x[k] - x[k - 1]).min(x[k + 1] - x[k]);
        starts.push((x[k] - s, x[k] + s));
    }
    for s in seeds {
        if let Some(inside) = s.intersect(&f.domain()) {
            starts.push((inside.a(), inside.b()));
        }
    }
    let mut scored: Vec<Candidate> = starts
        .into_iter()
        .map(|(a, b)| {
            obj.eval(a, b).map(|value| Candidate { value, a, b, method: SupMethod::BreakpointEnum })
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|p, q| q.value.total_cmp(&p.value).then((p.a, p.b).partial_cmp(&(q.a, q.b)).unwrap()));
    scored.dedup_by(|p, q| p.a == q.a && p.b == q.b);

    let mut best = scored[0];
    for start in scored.iter().take(cfg.multistart_top) {
        let refined = coordinate_ascent(&mut obj, &x, *start, cfg)?;
        if refined.beats(&best) {
            best = refined;
        }
    }
    Ok(to_result(best))
}

fn adjacent_segments(x: &[f64], s: f64) -> impl Iterator<Item = usize> + '_ {
    let n = x.len() - 1;
    (0..n).filter(move |&k| x[k] <= s && s <= x[k + 1])
}

fn coordinate_ascent<F>(
    obj: &mut IntervalObjective<'_, F>,
    x: &[f64],
    start: Candidate,
    cfg: &OptimizerConfig,
) -> Result<Candidate>
where
    F: FnMut(&[Mass]) -> Result<f64>,
{
    let mut cur = start;
    let gap = ENDPOINT_TOL;
    for _ in 0..cfg.refine_iters {
        let before = cur.value;
        let segs: Vec<usize> = adjacent_segments(x, cur.a).collect();
        for k in segs {
            let hi = x[k + 1].min(cur.b - gap);
            if hi <= x[k] {
                continue;
            }
            let b = cur.b;
            let r = golden_max_closed(|a| obj.eval(a, b), x[k], hi, ENDPOINT_TOL, GOLDEN_MAX_ITER)?;
            if r.fx > cur.value {
                cur = Candidate { value: r.fx, a: r.x, b, method: SupMethod::RefinedLocal };
            }
        }
        let segs: Vec<usize> = adjacent_segments(x, cur.b).collect();
        for k in segs {
            let lo = x[k].max(cur.a + gap);
            if lo >= x[k + 1] {
                continue;
            }
            let a = cur.a;
            let r = golden_max_closed(|b| obj.eval(a, b), lo, x[k + 1], ENDPOINT_TOL, GOLDEN_MAX_ITER)?;
            if r.fx > cur.value {
                cur = Candidate { value: r.fx, a, b: r.x, method: SupMethod::RefinedLocal };
            }
        }
        if cur.value - before <= 1e-15 * cur.value.abs().max(1.0) {
            break;
        }
    }
    if x.contains(&cur.a) && x.contains(&cur.b) {
        cur.method = SupMethod::BreakpointEnum;
    }
    Ok(cur)
}
