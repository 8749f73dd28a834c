//! Benchmarks: time-to-trigger threshold policies, a per-slot convex oracle,
//! and an exact dynamic program over all binary decisions for tiny instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::{self, FeasibleSetSpec, RepairCounts};
use crate::model::{self, CostMatrices, Decision, Form, HoRole, NetworkConfig};
use crate::objective::{self, RateTensor};

/// Largest decision set the exact oracle enumerates.
pub const DP_MAX_DECISIONS: usize = 10_000;
/// Longest horizon the exact oracle accepts.
pub const DP_MAX_HORIZON: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdKind {
    /// Associate with the cell that has been the strict SINR leader for `ttt` slots.
    Tho { ttt: usize },
    /// Prepare the top-`cl` cells once each has ranked top-`cl` for `ttt` slots.
    Cho { cl: usize, ttt: usize },
}

impl ThresholdKind {
    pub fn label(&self) -> String {
        match self {
            ThresholdKind::Tho { ttt } => format!("tho-ttt{ttt}"),
            ThresholdKind::Cho { cl, ttt } => format!("cho-{cl}-{ttt}"),
        }
    }
}

/// Per-user handover rule actually applied by a [`ThresholdPolicy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    Tho { ttt: usize },
    Cho { cl: usize, ttt: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum UserState {
    Tho { cell: usize, candidate: Option<usize>, streak: usize },
    Cho { prepared: Vec<usize>, streaks: Vec<usize> },
}

/// A 3GPP-style threshold policy with per-user streak counters.
///
/// In a static partition the policy's kind drives the users of its own type;
/// users of the other type fall back to the matching single-cell rule with
/// the same TTT. In dynamic mode every user follows the policy's kind.
#[derive(Debug, Clone)]
pub struct ThresholdPolicy {
    pub kind: ThresholdKind,
    config: NetworkConfig,
    rules: Vec<Rule>,
    state: Vec<UserState>,
}

fn strict_argmax(row: &[f64]) -> Option<usize> {
    let mut best = 0;
    for j in 1..row.len() {
        if row[j] > row[best] {
            best = j;
        }
    }
    let unique = row.iter().enumerate().all(|(j, &v)| j == best || v < row[best]);
    unique.then_some(best)
}

fn argmax_low(row: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..row.len() {
        if row[j] > row[best] {
            best = j;
        }
    }
    best
}

/// Top-`cl` cells by SINR, ties to the lowest index, returned in index order.
fn top_set(row: &[f64], cl: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    let mut top = idx[..cl].to_vec();
    top.sort_unstable();
    top
}

impl ThresholdPolicy {
    pub fn new(kind: ThresholdKind, config: &NetworkConfig) -> Result<Self> {
        let rules = (0..config.num_users)
            .map(|i| {
                let rule = match (kind, config.role(i)) {
                    (ThresholdKind::Tho { ttt }, Some(HoRole::Cho)) => Rule::Cho { cl: 1, ttt },
                    (ThresholdKind::Tho { ttt }, _) => Rule::Tho { ttt },
                    (ThresholdKind::Cho { ttt, .. }, Some(HoRole::Tho)) => Rule::Tho { ttt },
                    (ThresholdKind::Cho { cl, ttt }, _) => Rule::Cho { cl, ttt },
                };
                match rule {
                    Rule::Tho { ttt } | Rule::Cho { ttt, .. } if ttt == 0 => {
                        Err(Error::Config("threshold policy needs ttt >= 1".into()))
                    }
                    Rule::Cho { cl, .. } if cl == 0 || cl > config.num_cells => {
                        Err(Error::Config(format!("threshold policy needs 1 <= cl <= {}", config.num_cells)))
                    }
                    Rule::Cho { cl, .. } if cl > config.max_preparations[i] => Err(Error::Config(format!(
                        "cl = {cl} exceeds user {i}'s preparation budget {}",
                        config.max_preparations[i]
                    ))),
                    r => Ok(r),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, config: config.clone(), rules, state: Vec::new() })
    }

    pub fn label(&self) -> String {
        self.kind.label()
    }

    /// Slot-one decision: the argmax cell or the top-`CL` set of each user.
    pub fn bootstrap(&mut self, sinr_slot: &[f64]) -> Result<Decision> {
        let cells = self.config.num_cells;
        self.check(sinr_slot)?;
        self.state = self
            .rules
            .iter()
            .enumerate()
            .map(|(i, rule)| {
                let row = &sinr_slot[i * cells..(i + 1) * cells];
                match *rule {
                    Rule::Tho { .. } => UserState::Tho { cell: argmax_low(row), candidate: None, streak: 0 },
                    Rule::Cho { cl, .. } => UserState::Cho { prepared: top_set(row, cl), streaks: vec![0; cells] },
                }
            })
            .collect();
        self.decision(sinr_slot)
    }

    /// Ingest one slot's SINR and return the decision for the next slot.
    ///
    /// A switch takes effect on the first decision after its streak completes.
    pub fn step(&mut self, sinr_slot: &[f64]) -> Result<Decision> {
        if self.state.is_empty() {
            return Err(Error::Config("threshold policy stepped before bootstrap".into()));
        }
        self.check(sinr_slot)?;
        let cells = self.config.num_cells;
        for (i, (rule, st)) in self.rules.iter().zip(self.state.iter_mut()).enumerate() {
            let row = &sinr_slot[i * cells..(i + 1) * cells];
            match (rule, st) {
                (Rule::Tho { ttt }, UserState::Tho { cell, candidate, streak }) => match strict_argmax(row) {
                    Some(j) if j != *cell => {
                        if *candidate == Some(j) {
                            *streak += 1;
                        } else {
                            *candidate = Some(j);
                            *streak = 1;
                        }
                        if *streak >= *ttt {
                            *cell = j;
                            *candidate = None;
                            *streak = 0;
                        }
                    }
                    _ => {
                        *candidate = None;
                        *streak = 0;
                    }
                },
                (Rule::Cho { cl, ttt }, UserState::Cho { prepared, streaks }) => {
                    let top = top_set(row, *cl);
                    for (j, s) in streaks.iter_mut().enumerate() {
                        *s = if top.contains(&j) { *s + 1 } else { 0 };
                    }
                    if top != *prepared && top.iter().all(|&j| streaks[j] >= *ttt) {
                        *prepared = top;
                    }
                }
                _ => unreachable!("rule and state kinds always match"),
            }
        }
        self.decision(sinr_slot)
    }

    fn check(&self, sinr_slot: &[f64]) -> Result<()> {
        if sinr_slot.len() != self.config.pairs() {
            return Err(Error::Config(format!(
                "SINR slot has {} entries, network has {}",
                sinr_slot.len(),
                self.config.pairs()
            )));
        }
        Ok(())
    }

    /// Current assignment, with cell capacity restored by the shared repair
    /// rule using the latest SINR as marginals.
    fn decision(&self, sinr_slot: &[f64]) -> Result<Decision> {
        let cfg = &self.config;
        let mut z = Decision::zeros(cfg.num_users, cfg.num_cells, Form::Binary);
        for (i, st) in self.state.iter().enumerate() {
            match st {
                UserState::Tho { cell, .. } => z.set_x(i, *cell, 1.0),
                UserState::Cho { prepared, .. } => prepared.iter().for_each(|&j| z.set_y(i, j, 1.0)),
            }
        }
        let mut marg = Decision::zeros(cfg.num_users, cfg.num_cells, Form::Continuous);
        for i in 0..cfg.num_users {
            for j in 0..cfg.num_cells {
                let s = sinr_slot[i * cfg.num_cells + j];
                marg.set_x(i, j, s);
                marg.set_y(i, j, s);
            }
        }
        let mut counts = RepairCounts::default();
        feasible::repair_capacity(&mut z, &marg, cfg, &mut counts)?;
        Ok(z)
    }
}

/// Settings of the per-slot projected-gradient oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub max_iterations: usize,
    /// Stop once the gradient-mapping norm falls below this.
    pub tol: f64,
    /// Smoothing of the switching norm: `sqrt(q + ε²) - ε`.
    pub smoothing: f64,
    /// Also stop after this many consecutive steps whose relative gain is below `stall`.
    pub stall: f64,
    pub projection: FeasibleSetSpec,
}

const STALL_WINDOW: usize = 5;
/// Near an unprepared best cell the LogSumExp gradient can reach `e^{α Δlog c}`,
/// so the first accepted step may be many orders of magnitude below one.
const MAX_HALVINGS: usize = 1_000;

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5_000,
            tol: 1e-7,
            smoothing: 1e-6,
            stall: 1e-12,
            projection: FeasibleSetSpec { tol: 1e-9, max_sweeps: feasible::MAX_SWEEPS },
        }
    }
}

/// Result of [`oracle_per_slot`].
#[derive(Debug, Clone)]
pub struct OracleStep {
    pub decision: Decision,
    /// `g̃_t(z) - ‖z - prev‖_{C_t}` with the exact norm.
    pub objective: f64,
    pub iterations: usize,
}

fn smoothed_objective(
    z: &Decision,
    prev: &Decision,
    rates: &RateTensor,
    costs: &CostMatrices,
    slot: usize,
    config: &NetworkConfig,
    eps: f64,
) -> Result<f64> {
    let g = objective::surrogate_utility(z, rates, slot, config, config.alpha)?;
    let d = model::switching_cost(z, prev, costs, slot)?;
    Ok(g - ((d * d + eps * eps).sqrt() - eps))
}

fn smoothed_gradient(
    z: &Decision,
    prev: &Decision,
    rates: &RateTensor,
    costs: &CostMatrices,
    slot: usize,
    config: &NetworkConfig,
    eps: f64,
) -> Result<Decision> {
    let mut g = objective::surrogate_gradient(z, rates, slot, config, config.alpha)?;
    let d = model::switching_cost(z, prev, costs, slot)?;
    let scale = 1.0 / (d * d + eps * eps).sqrt();
    let (a, b) = (costs.a(slot), costs.b(slot));
    for n in 0..g.x.len() {
        if config.x_enabled(n / config.num_cells) {
            g.x[n] -= scale * a[n] * (z.x[n] - prev.x[n]);
        }
        if config.y_enabled(n / config.num_cells) {
            g.y[n] -= scale * b[n] * (z.y[n] - prev.y[n]);
        }
    }
    Ok(g)
}

/// Maximizes `g̃_t(z) - ‖z - prev‖_{C_t}` over the convex hull by projected
/// gradient ascent with backtracking, starting from `start`.
pub fn oracle_per_slot(
    rates: &RateTensor,
    costs: &CostMatrices,
    slot: usize,
    prev: &Decision,
    start: &Decision,
    config: &NetworkConfig,
    options: &OracleOptions,
) -> Result<OracleStep> {
    let eps = options.smoothing;
    let mut z = feasible::project_with(start, config, &options.projection)?;
    let mut f = smoothed_objective(&z, prev, rates, costs, slot, config, eps)?;
    let mut step = 1.0;
    let mut residual = f64::INFINITY;
    let mut flat = 0usize;
    for it in 0..options.max_iterations {
        let g = smoothed_gradient(&z, prev, rates, costs, slot, config, eps)?;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let mut cand = z.clone();
            cand.axpy(step, &g)?;
            let cand = feasible::project_with(&cand, config, &options.projection)?;
            let diff = cand.sub(&z)?;
            let dist2 = diff.dot(&diff)?;
            if dist2 == 0.0 {
                residual = 0.0;
                accepted = true;
                break;
            }
            let fc = smoothed_objective(&cand, prev, rates, costs, slot, config, eps)?;
            if fc >= f + g.dot(&diff)? - dist2 / (2.0 * step) - 1e-15 * f.abs().max(1.0) {
                residual = dist2.sqrt() / step;
                let gain = fc - f;
                z = cand;
                f = fc;
                accepted = true;
                step = (step * 2.0).min(1e6);
                if gain.abs() <= 1e-14 * f.abs().max(1.0) && residual < options.tol * 1e3 {
                    residual = residual.min(options.tol);
                }
                flat = if gain <= options.stall * f.abs().max(1.0) { flat + 1 } else { 0 };
                if flat >= STALL_WINDOW {
                    residual = residual.min(options.tol);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no ascent at machine precision: a stationary point
            residual = 0.0;
        }
        if residual <= options.tol {
            let objective = objective::surrogate_utility(&z, rates, slot, config, config.alpha)?
                - model::switching_cost(&z, prev, costs, slot)?;
            return Ok(OracleStep { decision: z, objective, iterations: it + 1 });
        }
    }
    Err(Error::Solver { iterations: options.max_iterations, residual })
}

/// Per-slot oracle over the whole horizon, each slot anchored to the
/// previous oracle decision and warm-started from it.
pub fn oracle_trajectory(
    rates: &RateTensor,
    costs: &CostMatrices,
    config: &NetworkConfig,
    options: &OracleOptions,
) -> Result<Vec<OracleStep>> {
    let mut prev = feasible::zero_anchor(config)?;
    let mut out = Vec::with_capacity(rates.slots());
    for t in 0..rates.slots() {
        let step = oracle_per_slot(rates, costs, t, &prev, &prev, config, options)?;
        prev = step.decision.clone();
        out.push(step);
    }
    Ok(out)
}

/// Exact maximizer of `Σ_t g̃_t(z_t) - ‖z_t - z_{t-1}‖_{C_t}` over binary
/// sequences, with `z_0` the projected zero anchor.
pub fn dp_exact_oracle(
    rates: &RateTensor,
    costs: &CostMatrices,
    config: &NetworkConfig,
    horizon: usize,
) -> Result<(Vec<Decision>, f64)> {
    if horizon == 0 || horizon > DP_MAX_HORIZON {
        return Err(Error::Size(format!("exact oracle horizon {horizon} outside 1..={DP_MAX_HORIZON}")));
    }
    if horizon > rates.slots() || horizon > costs.slots() {
        return Err(Error::Horizon(horizon, rates.slots().min(costs.slots())));
    }
    let states = feasible::enumerate_binary(config, DP_MAX_DECISIONS)?;
    if states.len() > DP_MAX_DECISIONS {
        return Err(Error::Size(format!("{} decisions exceed {DP_MAX_DECISIONS}", states.len())));
    }
    let n = states.len();
    let anchor = feasible::zero_anchor(config)?;
    let utility = |t: usize| -> Result<Vec<f64>> {
        states
            .iter()
            .map(|z| objective::surrogate_utility(z, rates, t, config, config.alpha))
            .collect()
    };
    let mut value: Vec<f64> = utility(0)?
        .into_iter()
        .zip(&states)
        .map(|(u, z)| Ok(u - model::switching_cost(z, &anchor, costs, 0)?))
        .collect::<Result<_>>()?;
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(horizon);
    for t in 1..horizon {
        let u = utility(t)?;
        let mut next = vec![f64::NEG_INFINITY; n];
        let mut arg = vec![0usize; n];
        for (s, z) in states.iter().enumerate() {
            for (p, zp) in states.iter().enumerate() {
                let v = value[p] - model::switching_cost(z, zp, costs, t)?;
                if v > next[s] {
                    next[s] = v;
                    arg[s] = p;
                }
            }
            next[s] += u[s];
        }
        back.push(arg);
        value = next;
    }
    let (mut best, total) = value
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let mut path = vec![best];
    for arg in back.iter().rev() {
        best = arg[best];
        path.push(best);
    }
    path.reverse();
    Ok((path.into_iter().map(|k| states[k].clone()).collect(), total))
}
