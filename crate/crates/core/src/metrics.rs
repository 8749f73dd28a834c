//! Per-slot accounting, dynamic regret, path length and switch counts.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::RepairCounts;
use crate::model::{self, CostMatrices, Decision, NetworkConfig};
use crate::objective::{self, RateTensor};

/// One slot of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    /// Surrogate utility of the implemented binary decision.
    pub surrogate_utility: f64,
    pub exact_utility: f64,
    pub switching_cost: f64,
    /// `surrogate_utility - switching_cost`.
    pub objective: f64,
    pub cumulative_objective: f64,
    /// Surrogate utility of the continuous decision behind the implemented one.
    pub continuous_utility: f64,
    pub continuous_switching_cost: f64,
    pub association_changes: usize,
    pub preparation_changes: usize,
    pub repairs_forced: usize,
    pub repairs_trimmed: usize,
    pub repairs_capacity: usize,
    pub repairs_clamped: usize,
    /// Cumulative regret of the continuous decisions against the benchmark.
    pub regret_continuous: f64,
    /// Cumulative regret of the implemented decisions against the benchmark.
    pub regret_discrete: f64,
}

impl SlotRecord {
    pub fn repairs(&self) -> usize {
        self.repairs_forced + self.repairs_trimmed + self.repairs_capacity + self.repairs_clamped
    }

    pub fn set_repairs(&mut self, r: &RepairCounts) {
        self.repairs_forced = r.forced;
        self.repairs_trimmed = r.trimmed;
        self.repairs_capacity = r.capacity;
        self.repairs_clamped = r.clamped;
    }
}

/// Totals over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub objective: f64,
    pub surrogate_utility: f64,
    pub exact_utility: f64,
    pub switching_cost: f64,
    pub continuous_objective: f64,
    pub association_changes: usize,
    pub preparation_changes: usize,
    pub repairs: usize,
    /// `R_T / T` for the continuous and implemented decisions.
    pub final_avg_regret_continuous: f64,
    pub final_avg_regret_discrete: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub records: Vec<SlotRecord>,
}

impl RunLedger {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends a slot, filling the cumulative objective.
    pub fn push(&mut self, mut record: SlotRecord) {
        let prev = self.records.last().map_or(0.0, |r| r.cumulative_objective);
        record.objective = record.surrogate_utility - record.switching_cost;
        record.cumulative_objective = prev + record.objective;
        self.records.push(record);
    }

    pub fn totals(&self) -> Totals {
        let mut t = Totals::default();
        for r in &self.records {
            t.objective += r.objective;
            t.surrogate_utility += r.surrogate_utility;
            t.exact_utility += r.exact_utility;
            t.switching_cost += r.switching_cost;
            t.continuous_objective += r.continuous_utility - r.continuous_switching_cost;
            t.association_changes += r.association_changes;
            t.preparation_changes += r.preparation_changes;
            t.repairs += r.repairs();
        }
        if let Some(last) = self.records.last() {
            let n = self.records.len() as f64;
            t.final_avg_regret_continuous = last.regret_continuous / n;
            t.final_avg_regret_discrete = last.regret_discrete / n;
        }
        t
    }

    /// Fills the regret columns from per-slot benchmark objectives.
    pub fn fill_regret(&mut self, bench_objectives: &[f64]) -> Result<()> {
        if bench_objectives.len() != self.records.len() {
            return Err(Error::Horizon(bench_objectives.len(), self.records.len()));
        }
        let (mut rc, mut rd) = (0.0, 0.0);
        for (r, b) in self.records.iter_mut().zip(bench_objectives) {
            rc += b - (r.continuous_utility - r.continuous_switching_cost);
            rd += b - r.objective;
            r.regret_continuous = rc;
            r.regret_discrete = rd;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-slot `g̃_t(z_t) - ‖z_t - z_{t-1}‖_{C_t}` of a trajectory starting from `anchor`.
pub fn slot_objectives(
    traj: &[Decision],
    anchor: &Decision,
    rates: &RateTensor,
    costs: &CostMatrices,
    config: &NetworkConfig,
) -> Result<Vec<f64>> {
    let mut prev = anchor;
    let mut out = Vec::with_capacity(traj.len());
    for (t, z) in traj.iter().enumerate() {
        let g = objective::surrogate_utility(z, rates, t, config, config.alpha)?;
        out.push(g - model::switching_cost(z, prev, costs, t)?);
        prev = z;
    }
    Ok(out)
}

pub fn total_objective(
    traj: &[Decision],
    anchor: &Decision,
    rates: &RateTensor,
    costs: &CostMatrices,
    config: &NetworkConfig,
) -> Result<f64> {
    Ok(slot_objectives(traj, anchor, rates, costs, config)?.iter().sum())
}

/// Cumulative regret series `R_t` of `alg` against `bench`, both from `anchor`.
pub fn dynamic_regret(
    alg: &[Decision],
    bench: &[Decision],
    anchor: &Decision,
    rates: &RateTensor,
    costs: &CostMatrices,
    config: &NetworkConfig,
) -> Result<Vec<f64>> {
    if alg.len() != bench.len() {
        return Err(Error::Horizon(alg.len(), bench.len()));
    }
    let a = slot_objectives(alg, anchor, rates, costs, config)?;
    let b = slot_objectives(bench, anchor, rates, costs, config)?;
    let mut acc = 0.0;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| {
            acc += y - x;
            acc
        })
        .collect())
}

/// Mean of several cumulative-regret series and its standard error per slot.
pub fn mean_regret(series: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = series.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let len = series[0].len();
    if let Some(s) = series.iter().find(|s| s.len() != len) {
        return Err(Error::Horizon(s.len(), len));
    }
    let mut mean = vec![0.0; len];
    let mut se = vec![0.0; len];
    for t in 0..len {
        let m = series.iter().map(|s| s[t]).sum::<f64>() / n as f64;
        mean[t] = m;
        if n > 1 {
            let var = series.iter().map(|s| (s[t] - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            se[t] = (var / n as f64).sqrt();
        }
    }
    Ok((mean, se))
}

/// `P_T = Σ_t ‖z*_t - z*_{t-1}‖_{C_t}` with `z*_0 = anchor`.
pub fn path_length(bench: &[Decision], anchor: &Decision, costs: &CostMatrices) -> Result<f64> {
    let mut prev = anchor;
    let mut total = 0.0;
    for (t, z) in bench.iter().enumerate() {
        total += model::switching_cost(z, prev, costs, t)?;
        prev = z;
    }
    Ok(total)
}

/// Association changes (users whose selected cell differs) and preparation
/// toggles between two binary decisions.
pub fn switches_between(prev: &Decision, z: &Decision) -> (usize, usize) {
    let assoc = (0..z.users()).filter(|&i| prev.associated_cell(i) != z.associated_cell(i)).count();
    let prep = z.y.iter().zip(&prev.y).filter(|(a, b)| (*a - *b).abs() > 0.5).count();
    (assoc, prep)
}

/// Per-slot switch counts (slot 0 counts nothing) and their totals.
pub fn count_switches(traj: &[Decision]) -> (Vec<(usize, usize)>, (usize, usize)) {
    let mut per = Vec::with_capacity(traj.len());
    let mut tot = (0, 0);
    for t in 0..traj.len() {
        let s = if t == 0 { (0, 0) } else { switches_between(&traj[t - 1], &traj[t]) };
        tot.0 += s.0;
        tot.1 += s.1;
        per.push(s);
    }
    (per, tot)
}
