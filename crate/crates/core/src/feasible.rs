//! Geometry of the decision set: validation, Euclidean projection onto the
//! convex hull, and unbiased randomized rounding back to binary decisions.
//!
//! The projection treats the constraints in two families. Every user row
//! (its `x` and `y` entries) is projected exactly: a sort-based simplex
//! projection, a breakpoint search for the box-with-sum-bounds set, and in
//! dynamic mode a golden-section search over the user's THO mass on top of
//! those two. The per-cell capacity half-spaces couple the rows and are
//! handled by Dykstra's alternating projection with correction terms.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Decision, Form, HoRole, NetworkConfig};

/// Default projection tolerance.
pub const PROJ_TOL: f64 = 1e-7;
/// Default cap on Dykstra sweeps.
pub const MAX_SWEEPS: usize = 10_000;
/// Tolerance used when validating continuous decisions.
pub const FEAS_TOL: f64 = 1e-6;

/// Solver settings for the feasible set of a [`NetworkConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSetSpec {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for FeasibleSetSpec {
    fn default() -> Self {
        Self { tol: PROJ_TOL, max_sweeps: MAX_SWEEPS }
    }
}

/// A violated constraint with the offending indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape,
    NotBinary,
    EntryRange { user: usize, cell: usize, value: f64 },
    /// A part of the row that the static partition pins to zero is nonzero.
    ModeMask { user: usize },
    RowSimplex { user: usize, sum: f64 },
    PreparationBounds { user: usize, sum: f64, max: usize },
    AssociationSum { user: usize, sum: f64 },
    ExclusiveAssignment { user: usize, cell: usize },
    Unassigned { user: usize },
    Capacity { cell: usize, load: f64, capacity: usize },
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::Shape => "shape",
            Violation::NotBinary => "not-binary",
            Violation::EntryRange { .. } => "entry-range",
            Violation::ModeMask { .. } => "mode-mask",
            Violation::RowSimplex { .. } => "row-simplex",
            Violation::PreparationBounds { .. } => "preparation-bounds",
            Violation::AssociationSum { .. } => "association-sum",
            Violation::ExclusiveAssignment { .. } => "exclusive-assignment",
            Violation::Unassigned { .. } => "unassigned-user",
            Violation::Capacity { .. } => "capacity",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape | Violation::NotBinary => write!(f, "{}", self.name()),
            Violation::EntryRange { user, cell, value } => {
                write!(f, "entry-range: user {user} cell {cell} value {value}")
            }
            Violation::ModeMask { user } => write!(f, "mode-mask: user {user}"),
            Violation::RowSimplex { user, sum } => write!(f, "row-simplex: user {user} sum {sum}"),
            Violation::PreparationBounds { user, sum, max } => {
                write!(f, "preparation-bounds: user {user} sum {sum} not in [1, {max}]")
            }
            Violation::AssociationSum { user, sum } => {
                write!(f, "association-sum: user {user} sum {sum} > 1")
            }
            Violation::ExclusiveAssignment { user, cell } => {
                write!(f, "exclusive-assignment: user {user} cell {cell} (y_ik <= 1 - sum_j x_ij)")
            }
            Violation::Unassigned { user } => write!(f, "unassigned-user: user {user}"),
            Violation::Capacity { cell, load, capacity } => {
                write!(f, "capacity: cell {cell} load {load} > {capacity}")
            }
        }
    }
}

/// Outcome of [`validate`]: empty means feasible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, name: &str) -> bool {
        self.violations.iter().any(|v| v.name() == name)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks `z` against the binary set (binary form) or its convex hull (continuous form).
pub fn validate(z: &Decision, config: &NetworkConfig) -> FeasibilityReport {
    let tol = match z.form {
        Form::Binary => 1e-9,
        Form::Continuous => FEAS_TOL,
    };
    validate_with_tol(z, config, tol)
}

pub fn validate_with_tol(z: &Decision, config: &NetworkConfig, tol: f64) -> FeasibilityReport {
    let mut violations = Vec::new();
    if z.check_config(config).is_err() {
        return FeasibilityReport { violations: vec![Violation::Shape] };
    }
    if z.form == Form::Binary && !z.entries_binary() {
        violations.push(Violation::NotBinary);
    }
    let cells = config.num_cells;
    for i in 0..config.num_users {
        for j in 0..cells {
            for value in [z.x_at(i, j), z.y_at(i, j)] {
                if !(value >= -tol && value <= 1.0 + tol) {
                    violations.push(Violation::EntryRange { user: i, cell: j, value });
                }
            }
        }
        let sx = z.x_row_sum(i);
        let sy = z.y_row_sum(i);
        let b = config.max_preparations[i];
        match config.role(i) {
            Some(HoRole::Tho) => {
                if z.y_row(i).iter().any(|v| v.abs() > tol) {
                    violations.push(Violation::ModeMask { user: i });
                }
                if (sx - 1.0).abs() > tol {
                    violations.push(Violation::RowSimplex { user: i, sum: sx });
                }
            }
            Some(HoRole::Cho) => {
                if z.x_row(i).iter().any(|v| v.abs() > tol) {
                    violations.push(Violation::ModeMask { user: i });
                }
                if sy < 1.0 - tol || sy > b as f64 + tol {
                    violations.push(Violation::PreparationBounds { user: i, sum: sy, max: b });
                }
            }
            None => {
                if sx > 1.0 + tol {
                    violations.push(Violation::AssociationSum { user: i, sum: sx });
                }
                for k in 0..cells {
                    if z.y_at(i, k) > 1.0 - sx + tol {
                        violations.push(Violation::ExclusiveAssignment { user: i, cell: k });
                    }
                }
                if sy > b as f64 + tol {
                    violations.push(Violation::PreparationBounds { user: i, sum: sy, max: b });
                }
                if sx + sy < 1.0 - tol {
                    violations.push(Violation::Unassigned { user: i });
                }
            }
        }
    }
    for (j, load) in crate::objective::cell_loads(z).into_iter().enumerate() {
        if load > config.capacity[j] as f64 + tol {
            violations.push(Violation::Capacity { cell: j, load, capacity: config.capacity[j] });
        }
    }
    FeasibilityReport { violations }
}

// ---------------------------------------------------------------------------
// Row projections

/// Shift `τ` with `Σ clip(v - τ, 0, ub) = target`, for `0 < target < n·ub`.
///
/// The sum is piecewise linear and nonincreasing in `τ`; Newton steps are
/// exact on the right piece and bisection keeps the bracket shrinking.
fn threshold(v: &[f64], ub: f64, target: f64) -> f64 {
    let lo_v = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_v = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut tl, mut th) = (if ub.is_finite() { lo_v - ub } else { lo_v - target }, hi_v);
    let mut tau = (v.iter().map(|x| x.clamp(0.0, ub)).sum::<f64>() - target) / v.len() as f64;
    if !(tau > tl && tau < th) {
        tau = 0.5 * (tl + th);
    }
    let tol = 1e-15 * target.max(1.0);
    for _ in 0..200 {
        let mut f = 0.0;
        let mut free = 0usize;
        for &x in v {
            let d = x - tau;
            if d >= ub {
                f += ub;
            } else if d > 0.0 {
                f += d;
                free += 1;
            }
        }
        let err = f - target;
        if err.abs() <= tol {
            break;
        }
        if err > 0.0 {
            tl = tau;
        } else {
            th = tau;
        }
        let next = if free > 0 { tau + err / free as f64 } else { f64::NAN };
        tau = if next > tl && next < th { next } else { 0.5 * (tl + th) };
        if th - tl <= 1e-15 * (tl.abs() + th.abs()).max(1.0) {
            break;
        }
    }
    tau
}

/// Euclidean projection of `v` onto `{x >= 0, Σ x = s}` (in place).
/// Returns the threshold `τ` with `x = (v - τ)_+`.
pub(crate) fn project_scaled_simplex(v: &mut [f64], s: f64) -> f64 {
    if s <= 0.0 {
        let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        v.iter_mut().for_each(|x| *x = 0.0);
        return top;
    }
    let tau = threshold(v, f64::INFINITY, s);
    v.iter_mut().for_each(|x| *x = (*x - tau).max(0.0));
    polish_sum(v, f64::INFINITY, s);
    tau
}

/// Removes the rounding error left in `Σ v` after a threshold projection of
/// large inputs by shifting the strictly interior entries.
fn polish_sum(v: &mut [f64], ub: f64, target: f64) {
    for _ in 0..4 {
        let err: f64 = v.iter().sum::<f64>() - target;
        if err.abs() <= 1e-14 * target.max(1.0) {
            return;
        }
        let free = v.iter().filter(|&&x| x > 0.0 && x < ub).count();
        if free == 0 {
            return;
        }
        let shift = err / free as f64;
        v.iter_mut().filter(|x| **x > 0.0 && **x < ub).for_each(|x| *x = (*x - shift).clamp(0.0, ub));
    }
}

/// Euclidean projection of `v` onto `{0 <= y <= ub, lo <= Σ y <= hi}` (in place).
/// Returns the shift `t` with `y = clip(v - t, 0, ub)`.
pub(crate) fn project_box_sum(v: &mut [f64], ub: f64, lo: f64, hi: f64) -> f64 {
    if ub <= 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return 0.0;
    }
    let clipped: f64 = v.iter().map(|x| x.clamp(0.0, ub)).sum();
    let cap = ub * v.len() as f64;
    let target = if clipped > hi {
        hi
    } else if clipped < lo {
        lo.min(cap)
    } else {
        v.iter_mut().for_each(|x| *x = x.clamp(0.0, ub));
        return 0.0;
    };
    if target >= cap {
        let tau = v.iter().map(|x| x - ub).fold(f64::INFINITY, f64::min);
        v.iter_mut().for_each(|x| *x = ub);
        return tau;
    }
    if target <= 0.0 {
        let tau = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        v.iter_mut().for_each(|x| *x = 0.0);
        return tau;
    }
    let tau = threshold(v, ub, target);
    v.iter_mut().for_each(|x| *x = (*x - tau).clamp(0.0, ub));
    polish_sum(v, ub, target);
    tau
}

#[cfg(test)]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Largest constraint violation of a single user row.
fn row_residual(x: &[f64], y: &[f64], role: Option<HoRole>, b: usize) -> f64 {
    let mut r: f64 = 0.0;
    for &v in x.iter().chain(y) {
        r = r.max(-v).max(v - 1.0);
    }
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    match role {
        Some(HoRole::Tho) => {
            r = r.max((sx - 1.0).abs());
            r = y.iter().fold(r, |r, v| r.max(v.abs()));
        }
        Some(HoRole::Cho) => {
            r = r.max(1.0 - sy).max(sy - b as f64);
            r = x.iter().fold(r, |r, v| r.max(v.abs()));
        }
        None => {
            r = r.max(sx - 1.0).max(sy - b as f64).max(1.0 - sx - sy);
            r = y.iter().fold(r, |r, v| r.max(v - (1.0 - sx)));
        }
    }
    r
}

/// Exact projection of one dynamic-mode row onto
/// `{x >= 0, Σx <= 1, 0 <= y_k <= 1 - Σx, Σy <= b, Σx + Σy >= 1}`.
///
/// For a fixed THO mass `s = Σx` the set splits into a scaled simplex and a
/// box-with-sum-bounds. The optimal distance `φ(s)` is convex and
/// continuously differentiable with a piecewise-linear derivative, so a
/// safeguarded secant search on `φ'` finds the minimiser in a few evaluations.
fn project_dynamic_row(x: &mut [f64], y: &mut [f64], b: usize) {
    let vx = x.to_vec();
    let vy = y.to_vec();
    let slope = |s: f64, bx: &mut [f64], by: &mut [f64]| -> f64 {
        bx.copy_from_slice(&vx);
        by.copy_from_slice(&vy);
        let tau = project_scaled_simplex(bx, s);
        let u = 1.0 - s;
        let t = project_box_sum(by, u, u, b as f64);
        let upper: f64 = by
            .iter()
            .zip(&vy)
            .filter(|(yj, _)| u > 0.0 && **yj >= u)
            .map(|(_, vj)| (vj - t - u).max(0.0))
            .sum();
        2.0 * (upper - (-t).max(0.0) - tau)
    };
    let (mut bx, mut by) = (vec![0.0; vx.len()], vec![0.0; vy.len()]);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut f_lo = slope(lo, &mut bx, &mut by);
    let mut f_hi = slope(hi - 1e-12, &mut bx, &mut by);
    let s = if f_lo >= 0.0 {
        0.0
    } else if f_hi <= 0.0 {
        1.0
    } else {
        let mut side = 0i8;
        let mut s = 0.5;
        for _ in 0..200 {
            s = if f_hi > f_lo { lo - f_lo * (hi - lo) / (f_hi - f_lo) } else { 0.5 * (lo + hi) };
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            let f = slope(s, &mut bx, &mut by);
            if f == 0.0 || hi - lo <= 1e-14 {
                break;
            }
            if f < 0.0 {
                lo = s;
                f_lo = f;
                if side == -1 {
                    f_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = s;
                f_hi = f;
                if side == 1 {
                    f_lo *= 0.5;
                }
                side = 1;
            }
            if hi - lo <= 1e-14 {
                s = 0.5 * (lo + hi);
                break;
            }
        }
        s
    };
    bx.copy_from_slice(&vx);
    by.copy_from_slice(&vy);
    project_scaled_simplex(&mut bx, s);
    project_box_sum(&mut by, 1.0 - s, 1.0 - s, b as f64);
    x.copy_from_slice(&bx);
    y.copy_from_slice(&by);
}

/// Projects every user row onto its own constraint set, leaving feasible rows untouched.
fn project_rows(z: &mut Decision, config: &NetworkConfig) {
    let cells = config.num_cells;
    for i in 0..config.num_users {
        let role = config.role(i);
        let b = config.max_preparations[i];
        let range = i * cells..(i + 1) * cells;
        if row_residual(&z.x[range.clone()], &z.y[range.clone()], role, b) <= 1e-13 {
            continue;
        }
        match role {
            Some(HoRole::Tho) => {
                project_scaled_simplex(&mut z.x[range.clone()], 1.0);
                z.y[range].iter_mut().for_each(|v| *v = 0.0);
            }
            Some(HoRole::Cho) => {
                z.x[range.clone()].iter_mut().for_each(|v| *v = 0.0);
                project_box_sum(&mut z.y[range], 1.0, 1.0, b as f64);
            }
            None => {
                let (xs, ys) = (&mut z.x[range.clone()], &mut z.y[range]);
                project_dynamic_row(xs, ys, b);
            }
        }
    }
}

fn rows_residual(z: &Decision, config: &NetworkConfig) -> f64 {
    (0..config.num_users)
        .map(|i| row_residual(z.x_row(i), z.y_row(i), config.role(i), config.max_preparations[i]))
        .fold(0.0, f64::max)
}

fn capacity_excess(z: &Decision, config: &NetworkConfig) -> f64 {
    crate::objective::cell_loads(z)
        .iter()
        .zip(&config.capacity)
        .map(|(l, c)| l - *c as f64)
        .fold(0.0, f64::max)
}

/// Projects onto the capacity half-spaces, moving only entries the mode allows.
fn project_capacity(z: &mut Decision, config: &NetworkConfig) {
    let cells = config.num_cells;
    for j in 0..cells {
        let mut load = 0.0;
        let mut active = 0usize;
        for i in 0..config.num_users {
            if config.x_enabled(i) {
                load += z.x[i * cells + j];
                active += 1;
            }
            if config.y_enabled(i) {
                load += z.y[i * cells + j];
                active += 1;
            }
        }
        let excess = load - config.capacity[j] as f64;
        if excess > 0.0 && active > 0 {
            let shift = excess / active as f64;
            for i in 0..config.num_users {
                if config.x_enabled(i) {
                    z.x[i * cells + j] -= shift;
                }
                if config.y_enabled(i) {
                    z.y[i * cells + j] -= shift;
                }
            }
        }
    }
}

/// Euclidean projection onto the convex hull of the feasible set.
pub fn project(point: &Decision, config: &NetworkConfig) -> Result<Decision> {
    project_with(point, config, &FeasibleSetSpec::default())
}

pub fn project_with(point: &Decision, config: &NetworkConfig, spec: &FeasibleSetSpec) -> Result<Decision> {
    point.check_config(config)?;
    if point.x.iter().chain(&point.y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("cannot project a point with non-finite entries".into()));
    }
    let mut z = point.clone();
    z.form = Form::Continuous;
    project_rows(&mut z, config);
    if capacity_excess(&z, config) <= 0.0 {
        return Ok(z);
    }
    // Dykstra between the product of row sets (A) and the capacity half-spaces (B).
    let n = z.x.len();
    let mut current = point.clone();
    current.form = Form::Continuous;
    let mut p = Decision::zeros(config.num_users, config.num_cells, Form::Continuous);
    let mut q = p.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..spec.max_sweeps {
        let mut a = current.clone();
        a.axpy(1.0, &p)?;
        let before_a = a.clone();
        project_rows(&mut a, config);
        for k in 0..n {
            p.x[k] = before_a.x[k] - a.x[k];
            p.y[k] = before_a.y[k] - a.y[k];
        }
        let mut b = a.clone();
        b.axpy(1.0, &q)?;
        let before_b = b.clone();
        project_capacity(&mut b, config);
        for k in 0..n {
            q.x[k] = before_b.x[k] - b.x[k];
            q.y[k] = before_b.y[k] - b.y[k];
        }
        let change = b.max_abs_diff(&current);
        let row_res = rows_residual(&b, config);
        residual = row_res.max(change);
        current = b;
        if row_res <= spec.tol && change <= spec.tol * 1e-2 {
            return Ok(current);
        }
    }
    Err(Error::Solver { iterations: spec.max_sweeps, residual })
}

/// The learner's starting point: the projection of the all-zero decision.
pub fn zero_anchor(config: &NetworkConfig) -> Result<Decision> {
    project(&Decision::zeros_for(config), config)
}

// ---------------------------------------------------------------------------
// Rounding

/// Counts of corrections applied after sampling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairCounts {
    /// CHO rows that sampled no preparation and were forced to one.
    pub forced: usize,
    /// CHO rows that sampled more than `b_i` preparations and were trimmed.
    pub trimmed: usize,
    /// Entries moved or evicted to restore cell capacity.
    pub capacity: usize,
    /// Normalized preparation probabilities above one that were clamped.
    pub clamped: usize,
}

impl RepairCounts {
    pub fn total(&self) -> usize {
        self.forced + self.trimmed + self.capacity + self.clamped
    }
}

impl std::ops::AddAssign for RepairCounts {
    fn add_assign(&mut self, o: Self) {
        self.forced += o.forced;
        self.trimmed += o.trimmed;
        self.capacity += o.capacity;
        self.clamped += o.clamped;
    }
}

/// A rounded decision together with the raw sample drawn before repair.
#[derive(Debug, Clone)]
pub struct Rounded {
    pub decision: Decision,
    pub raw: Decision,
    pub repairs: RepairCounts,
}

fn require_hull(z_m: &Decision, config: &NetworkConfig) -> Result<()> {
    let report = validate_with_tol(z_m, config, FEAS_TOL);
    if !report.is_ok() {
        return Err(Error::Feasibility(format!("rounding input outside the hull: {report}")));
    }
    Ok(())
}

/// Categorical draw by cumulative sum in index order.
fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    if total <= 0.0 {
        return 0;
    }
    let u = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (j, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cum += w;
        last = j;
        if u < cum {
            return j;
        }
    }
    last
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = j;
        }
    }
    best
}

/// Enforces `1 <= Σ y <= b` on a sampled CHO row, preferring high-marginal cells.
fn repair_row(y: &mut [f64], marginals: &[f64], fallback: &[f64], b: usize, counts: &mut RepairCounts) {
    let prepared = y.iter().filter(|&&v| v == 1.0).count();
    if prepared == 0 {
        let source = if marginals.iter().any(|&m| m > 0.0) { marginals } else { fallback };
        y[argmax(source)] = 1.0;
        counts.forced += 1;
    } else if prepared > b {
        let mut order: Vec<usize> = (0..y.len()).filter(|&j| y[j] == 1.0).collect();
        // stable sort keeps lower indices first among equal marginals
        order.sort_by(|&p, &q| marginals[q].total_cmp(&marginals[p]));
        for &j in &order[b..] {
            y[j] = 0.0;
        }
        counts.trimmed += 1;
    }
}

/// Restores cell capacity on a binary decision by evicting or moving the
/// lowest-marginal entries of overloaded cells into cells with spare room.
pub(crate) fn repair_capacity(
    z: &mut Decision,
    z_m: &Decision,
    config: &NetworkConfig,
    counts: &mut RepairCounts,
) -> Result<()> {
    let cells = config.num_cells;
    let users = config.num_users;
    let mut loads: Vec<usize> = crate::objective::cell_loads(z).iter().map(|l| l.round() as usize).collect();
    while let Some(j) = (0..cells).find(|&j| loads[j] > config.capacity[j]) {
        let preps = |z: &Decision, i: usize| z.y_row(i).iter().filter(|&&v| v == 1.0).count();
        let lowest = |cands: Vec<usize>, m: &dyn Fn(usize) -> f64| {
            cands.into_iter().min_by(|&p, &q| m(p).total_cmp(&m(q)).then(p.cmp(&q)))
        };
        // 1. a CHO preparation whose user keeps another prepared cell
        let multi: Vec<usize> = (0..users).filter(|&i| z.y_at(i, j) == 1.0 && preps(z, i) > 1).collect();
        if let Some(i) = lowest(multi, &|i| z_m.y_at(i, j)) {
            z.set_y(i, j, 0.0);
            loads[j] -= 1;
            counts.capacity += 1;
            continue;
        }
        let spare: Vec<usize> = (0..cells).filter(|&k| k != j && loads[k] < config.capacity[k]).collect();
        let pick = |m: &dyn Fn(usize) -> f64| -> Option<usize> {
            spare.iter().copied().max_by(|&p, &q| m(p).total_cmp(&m(q)).then(q.cmp(&p)))
        };
        // 2. a sole preparation, re-forced on the best spare cell
        let single: Vec<usize> = (0..users).filter(|&i| z.y_at(i, j) == 1.0).collect();
        if let Some(i) = lowest(single, &|i| z_m.y_at(i, j)) {
            let k = pick(&|k| z_m.y_at(i, k))
                .ok_or_else(|| Error::Feasibility("no spare capacity to repair preparations".into()))?;
            z.set_y(i, j, 0.0);
            z.set_y(i, k, 1.0);
            loads[j] -= 1;
            loads[k] += 1;
            counts.capacity += 1;
            continue;
        }
        // 3. a THO association, moved to the best spare cell
        let tho: Vec<usize> = (0..users).filter(|&i| z.x_at(i, j) == 1.0).collect();
        if let Some(i) = lowest(tho, &|i| z_m.x_at(i, j)) {
            let k = pick(&|k| z_m.x_at(i, k))
                .ok_or_else(|| Error::Feasibility("no spare capacity to repair associations".into()))?;
            z.set_x(i, j, 0.0);
            z.set_x(i, k, 1.0);
            loads[j] -= 1;
            loads[k] += 1;
            counts.capacity += 1;
            continue;
        }
        return Err(Error::Feasibility(format!("cell {j} overloaded with nothing to move")));
    }
    Ok(())
}

/// Unbiased rounding for a static partition: categorical association for THO
/// users and independent Bernoulli preparations for CHO users.
pub fn round_static<R: Rng + ?Sized>(z_m: &Decision, config: &NetworkConfig, rng: &mut R) -> Result<Rounded> {
    if config.is_dynamic() {
        return Err(Error::Config("round_static needs a static partition".into()));
    }
    require_hull(z_m, config)?;
    let mut z = Decision::zeros(config.num_users, config.num_cells, Form::Binary);
    for i in 0..config.num_users {
        match config.role(i) {
            Some(HoRole::Tho) => {
                let j = sample_categorical(z_m.x_row(i), rng);
                z.set_x(i, j, 1.0);
            }
            _ => {
                for j in 0..config.num_cells {
                    let p = z_m.y_at(i, j).clamp(0.0, 1.0);
                    if rng.gen::<f64>() < p {
                        z.set_y(i, j, 1.0);
                    }
                }
            }
        }
    }
    let raw = z.clone();
    let mut repairs = RepairCounts::default();
    for i in 0..config.num_users {
        if config.role(i) == Some(HoRole::Cho) {
            let b = config.max_preparations[i];
            let marg = z_m.y_row(i).to_vec();
            repair_row(z.y_row_mut(i), &marg, &marg, b, &mut repairs);
        }
    }
    repair_capacity(&mut z, z_m, config, &mut repairs)?;
    Ok(Rounded { decision: z, raw, repairs })
}

/// Unbiased rounding for dynamic mode: a Bernoulli draw of the handover type
/// with probability `π_i = Σ_j x_ij`, then normalized marginals within the type.
pub fn round_dynamic<R: Rng + ?Sized>(z_m: &Decision, config: &NetworkConfig, rng: &mut R) -> Result<Rounded> {
    if !config.is_dynamic() {
        return Err(Error::Config("round_dynamic needs dynamic mode".into()));
    }
    require_hull(z_m, config)?;
    let mut z = Decision::zeros(config.num_users, config.num_cells, Form::Binary);
    let mut repairs = RepairCounts::default();
    for i in 0..config.num_users {
        let pi = z_m.x_row_sum(i);
        if !(-PROJ_TOL..=1.0 + PROJ_TOL).contains(&pi) {
            return Err(Error::Feasibility(format!("user {i} has THO probability {pi}")));
        }
        let pi = pi.clamp(0.0, 1.0);
        if rng.gen::<f64>() < pi {
            let j = sample_categorical(z_m.x_row(i), rng);
            z.set_x(i, j, 1.0);
        } else {
            let rest = 1.0 - pi;
            for j in 0..config.num_cells {
                let mut p = if rest > 0.0 { z_m.y_at(i, j) / rest } else { 1.0 };
                if p > 1.0 {
                    p = 1.0;
                    repairs.clamped += 1;
                }
                if rng.gen::<f64>() < p.max(0.0) {
                    z.set_y(i, j, 1.0);
                }
            }
        }
    }
    let raw = z.clone();
    for i in 0..config.num_users {
        if z.associated_cell(i).is_none() {
            let b = config.max_preparations[i];
            let marg = z_m.y_row(i).to_vec();
            let fallback = z_m.x_row(i).to_vec();
            repair_row(z.y_row_mut(i), &marg, &fallback, b, &mut repairs);
        }
    }
    repair_capacity(&mut z, z_m, config, &mut repairs)?;
    Ok(Rounded { decision: z, raw, repairs })
}

/// Mode-appropriate unbiased rounding.
pub fn round<R: Rng + ?Sized>(z_m: &Decision, config: &NetworkConfig, rng: &mut R) -> Result<Rounded> {
    if config.is_dynamic() {
        round_dynamic(z_m, config, rng)
    } else {
        round_static(z_m, config, rng)
    }
}

/// Deterministic rounding: most likely type, most likely cell, preparations above one half.
pub fn round_greedy(z_m: &Decision, config: &NetworkConfig) -> Result<Decision> {
    let mut z = Decision::zeros(config.num_users, config.num_cells, Form::Binary);
    let mut counts = RepairCounts::default();
    for i in 0..config.num_users {
        let pi = z_m.x_row_sum(i);
        let tho = match config.role(i) {
            Some(HoRole::Tho) => true,
            Some(HoRole::Cho) => false,
            None => pi >= 0.5,
        };
        if tho {
            z.set_x(i, argmax(z_m.x_row(i)), 1.0);
        } else {
            let rest = if config.role(i).is_none() { (1.0 - pi).max(1e-12) } else { 1.0 };
            for j in 0..config.num_cells {
                if z_m.y_at(i, j) / rest >= 0.5 {
                    z.set_y(i, j, 1.0);
                }
            }
            let marg = z_m.y_row(i).to_vec();
            let fallback = z_m.x_row(i).to_vec();
            repair_row(z.y_row_mut(i), &marg, &fallback, config.max_preparations[i], &mut counts);
        }
    }
    repair_capacity(&mut z, z_m, config, &mut counts)?;
    Ok(z)
}

/// Every binary feasible decision, or a size error beyond `limit`.
pub fn enumerate_binary(config: &NetworkConfig, limit: usize) -> Result<Vec<Decision>> {
    let cells = config.num_cells;
    // per-user options as (x cell, y mask)
    let mut options: Vec<Vec<(Option<usize>, u64)>> = Vec::with_capacity(config.num_users);
    if cells > 20 {
        return Err(Error::Size(format!("{cells} cells is too many to enumerate")));
    }
    for i in 0..config.num_users {
        let mut opts = Vec::new();
        if config.x_enabled(i) {
            opts.extend((0..cells).map(|j| (Some(j), 0u64)));
        }
        if config.y_enabled(i) {
            for mask in 1u64..(1 << cells) {
                if (mask.count_ones() as usize) <= config.max_preparations[i] {
                    opts.push((None, mask));
                }
            }
        }
        options.push(opts);
    }
    let total: f64 = options.iter().map(|o| o.len() as f64).product();
    if total > (limit as f64) * 16.0 {
        return Err(Error::Size(format!("{total} candidate decisions exceed the enumeration limit {limit}")));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; config.num_users];
    loop {
        let mut z = Decision::zeros(config.num_users, cells, Form::Binary);
        for (i, &k) in idx.iter().enumerate() {
            let (xc, mask) = options[i][k];
            if let Some(j) = xc {
                z.set_x(i, j, 1.0);
            }
            for j in 0..cells {
                if mask >> j & 1 == 1 {
                    z.set_y(i, j, 1.0);
                }
            }
        }
        if capacity_excess(&z, config) <= 0.0 {
            out.push(z);
            if out.len() > limit {
                return Err(Error::Size(format!("more than {limit} feasible decisions")));
            }
        }
        let mut u = 0;
        loop {
            if u == idx.len() {
                return Ok(out);
            }
            idx[u] += 1;
            if idx[u] < options[u].len() {
                break;
            }
            idx[u] = 0;
            u += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HoMode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(users: usize, cells: usize, mode: HoMode, b: usize, cap: usize) -> NetworkConfig {
        NetworkConfig::uniform(users, cells, 1, mode, b, cap).unwrap()
    }

    fn dec(users: usize, cells: usize, x: Vec<f64>, y: Vec<f64>, form: Form) -> Decision {
        Decision::from_parts(users, cells, x, y, form).unwrap()
    }

    #[test]
    fn static_row_sum_two_is_row_simplex_violation() {
        let c = cfg(1, 2, HoMode::split(1, 1), 1, 2);
        let z = dec(1, 2, vec![1.0, 1.0], vec![0.0; 2], Form::Binary);
        assert!(validate(&z, &c).has("row-simplex"));
    }

    #[test]
    fn dynamic_exclusive_assignment_violation() {
        let c = cfg(1, 2, HoMode::Dynamic, 2, 2);
        let z = dec(1, 2, vec![1.0, 0.0], vec![0.0, 1.0], Form::Binary);
        assert!(validate(&z, &c).has("exclusive-assignment"));
    }

    #[test]
    fn dynamic_all_zero_is_unassigned() {
        let c = cfg(2, 2, HoMode::Dynamic, 2, 2);
        let r = validate(&Decision::zeros(2, 2, Form::Binary), &c);
        assert!(r.has("unassigned-user"));
        assert_eq!(r.violations.len(), 2);
    }

    #[test]
    fn capacity_violation_reported() {
        let c = cfg(2, 2, HoMode::split(2, 2), 1, 1);
        let z = dec(2, 2, vec![1.0, 0.0, 1.0, 0.0], vec![0.0; 4], Form::Binary);
        let r = validate(&z, &c);
        assert!(r.has("capacity"));
        assert!(r.to_string().contains("cell 0"));
    }

    #[test]
    fn simplex_projection_closed_form() {
        let c = cfg(1, 2, HoMode::split(1, 1), 1, 1);
        let p = project(&dec(1, 2, vec![2.0, 0.0], vec![0.0; 2], Form::Continuous), &c).unwrap();
        assert!((p.x[0] - 1.0).abs() < 1e-12 && p.x[1].abs() < 1e-12);
    }

    #[test]
    fn cho_row_uniform_shrink() {
        let c = cfg(1, 3, HoMode::split(1, 0), 2, 1);
        let p = project(&dec(1, 3, vec![0.0; 3], vec![1.0; 3], Form::Continuous), &c).unwrap();
        for v in &p.y {
            assert!((v - 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn feasible_points_are_fixed() {
        let c = cfg(2, 3, HoMode::Dynamic, 2, 2);
        let z = dec(
            2,
            3,
            vec![0.2, 0.1, 0.1, 0.0, 0.0, 0.0],
            vec![0.3, 0.2, 0.4, 0.5, 0.5, 0.1],
            Form::Continuous,
        );
        assert!(validate(&z, &c).is_ok());
        let p = project(&z, &c).unwrap();
        assert!(p.max_abs_diff(&z) < 1e-9);
    }

    #[test]
    fn box_sum_projection_hits_bounds() {
        let mut v = vec![5.0, -1.0, 0.2];
        project_box_sum(&mut v, 1.0, 1.0, 2.0);
        assert_eq!(v, vec![1.0, 0.0, 0.2]);
        let mut v = vec![0.1, 0.1, 0.1];
        project_box_sum(&mut v, 1.0, 1.0, 2.0);
        let s: f64 = v.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
        let mut v = vec![1e16, 0.3, 0.2];
        project_box_sum(&mut v, 1.0, 1.0, 1.0);
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
    }

    #[test]
    fn dynamic_row_projection_beats_feasible_candidates() {
        let c = cfg(1, 3, HoMode::Dynamic, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cands = enumerate_binary(&c, 1000).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let pt = dec(1, 3, x, y, Form::Continuous);
            let p = project(&pt, &c).unwrap();
            assert!(validate(&p, &c).is_ok(), "{}", validate(&p, &c));
            let dp = p.sub(&pt).unwrap().norm2();
            for z in &cands {
                assert!(dp <= z.sub(&pt).unwrap().norm2() + PROJ_TOL);
            }
        }
    }

    #[test]
    fn dynamic_row_projection_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for b in [1usize, 2, 3] {
            for _ in 0..200 {
                let scale = if rng.gen_bool(0.2) { 50.0 } else { 2.0 };
                let vx: Vec<f64> = (0..4).map(|_| rng.gen_range(-scale..scale)).collect();
                let vy: Vec<f64> = (0..4).map(|_| rng.gen_range(-scale..scale)).collect();
                let (mut x, mut y) = (vx.clone(), vy.clone());
                project_dynamic_row(&mut x, &mut y, b);
                assert!(row_residual(&x, &y, None, b) < 1e-9);
                let got = sq_dist(&x, &vx) + sq_dist(&y, &vy);
                let best = (0..=2000)
                    .map(|k| {
                        let s = k as f64 / 2000.0;
                        let (mut bx, mut by) = (vx.clone(), vy.clone());
                        project_scaled_simplex(&mut bx, s);
                        project_box_sum(&mut by, 1.0 - s, 1.0 - s, b as f64);
                        sq_dist(&bx, &vx) + sq_dist(&by, &vy)
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(got <= best + 1e-9 * best.max(1.0), "{got} > {best}");
            }
        }
    }

    #[test]
    fn capacity_coupled_projection_is_feasible() {
        let c = cfg(3, 2, HoMode::split(3, 1), 2, 2);
        let pt = dec(3, 2, vec![0.9, 0.1, 0.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.3, 1.0, 0.4], Form::Continuous);
        let p = project(&pt, &c).unwrap();
        assert!(validate_with_tol(&p, &c, PROJ_TOL * 10.0).is_ok(), "{}", validate(&p, &c));
        let loads = crate::objective::cell_loads(&p);
        assert!(loads[0] <= 2.0 + 1e-6);
    }

    #[test]
    fn binary_input_rounds_to_itself() {
        let c = cfg(2, 3, HoMode::split(2, 1), 2, 2);
        let z = dec(2, 3, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0, 0.0, 1.0], Form::Binary);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let r = round_static(&z, &c, &mut rng).unwrap();
            assert_eq!(r.decision, z);
            assert_eq!(r.repairs.total(), 0);
        }
    }

    #[test]
    fn categorical_half_half_frequency() {
        let c = cfg(1, 2, HoMode::split(1, 1), 1, 1);
        let z = dec(1, 2, vec![0.5, 0.5], vec![0.0; 2], Form::Continuous);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let hits = (0..n).filter(|_| round_static(&z, &c, &mut rng).unwrap().decision.x[0] == 1.0).count();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn overfull_preparation_row_keeps_top_marginals() {
        let c = cfg(1, 3, HoMode::split(1, 0), 2, 1);
        let z = dec(1, 3, vec![0.0; 3], vec![0.9, 0.8, 0.3], Form::Continuous);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = false;
        for _ in 0..2000 {
            let r = round_static(&z, &c, &mut rng).unwrap();
            if r.raw.y.iter().sum::<f64>() == 3.0 {
                seen = true;
                assert_eq!(r.decision.y, vec![1.0, 1.0, 0.0]);
                assert_eq!(r.repairs.trimmed, 1);
            }
            assert!(validate(&r.decision, &c).is_ok());
        }
        assert!(seen);
    }

    #[test]
    fn dynamic_degenerate_mode_probabilities() {
        let c = cfg(1, 2, HoMode::Dynamic, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tho = dec(1, 2, vec![0.3, 0.7], vec![0.0; 2], Form::Continuous);
        let cho = dec(1, 2, vec![0.0; 2], vec![1.0, 0.4], Form::Continuous);
        for _ in 0..500 {
            let r = round_dynamic(&tho, &c, &mut rng).unwrap().decision;
            assert!(r.associated_cell(0).is_some() && r.y_row_sum(0) == 0.0);
            let r = round_dynamic(&cho, &c, &mut rng).unwrap().decision;
            assert!(r.associated_cell(0).is_none() && r.y[0] == 1.0);
        }
    }

    #[test]
    fn rounding_rejects_points_outside_hull() {
        let c = cfg(1, 2, HoMode::Dynamic, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bad = dec(1, 2, vec![0.9, 0.9], vec![0.0; 2], Form::Continuous);
        assert!(matches!(round_dynamic(&bad, &c, &mut rng), Err(Error::Feasibility(_))));
        let s = cfg(1, 2, HoMode::split(1, 1), 1, 1);
        assert!(matches!(round_static(&bad, &s, &mut rng), Err(Error::Feasibility(_))));
    }

    #[test]
    fn capacity_repair_evicts_lowest_marginal() {
        let c = cfg(3, 2, HoMode::split(3, 0), 2, 2);
        let z_m = dec(3, 2, vec![0.0; 6], vec![1.0, 0.2, 1.0, 0.5, 0.1, 1.0], Form::Continuous);
        let mut z = dec(3, 2, vec![0.0; 6], vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0], Form::Binary);
        let mut counts = RepairCounts::default();
        repair_capacity(&mut z, &z_m, &c, &mut counts).unwrap();
        assert!(validate(&z, &c).is_ok());
        assert_eq!(z.y, vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        assert_eq!(counts.capacity, 2);
    }

    #[test]
    fn greedy_rounding_is_feasible() {
        let c = cfg(2, 3, HoMode::Dynamic, 2, 2);
        let z = dec(2, 3, vec![0.6, 0.1, 0.0, 0.0, 0.1, 0.0], vec![0.0, 0.0, 0.3, 0.5, 0.4, 0.2], Form::Continuous);
        let r = round_greedy(&z, &c).unwrap();
        assert!(validate(&r, &c).is_ok());
        assert_eq!(r.associated_cell(0), Some(0));
        assert_eq!(r.y_row(1), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn enumeration_counts() {
        // dynamic, J = 3, b = 2: 3 THO options + 6 preparation sets
        let c = cfg(1, 3, HoMode::Dynamic, 2, 1);
        assert_eq!(enumerate_binary(&c, 100).unwrap().len(), 9);
        let c = cfg(2, 3, HoMode::Dynamic, 2, 2);
        let all = enumerate_binary(&c, 1000).unwrap();
        assert_eq!(all.len(), 81);
        assert!(all.iter().all(|z| validate(z, &c).is_ok()));
        assert!(matches!(enumerate_binary(&c, 10), Err(Error::Size(_))));
    }
}
