//! Throughput, load, exact utility and the concave LogSumExp surrogate.
//!
//! All logarithms are natural. A zero rate is lifted to `0 + 1` before taking
//! its logarithm, and `0 · log 0 = 0` in the load-entropy term.
//!
//! In dynamic mode a user's CHO contribution is the perspective
//! `u · f(y / u)` of the static LogSumExp term `f`, with `u = 1 - Σ_j x_ij`
//! the user's CHO probability. It coincides with the static term at every
//! binary decision and at every point of the static feasible sets, and stays
//! jointly concave in `(x, y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible;
use crate::model::{Decision, Form, HoRole, NetworkConfig};

pub const DEFAULT_ALPHA: f64 = 20.0;

/// Lift applied to a zero load before taking its logarithm in the gradient.
pub const LOAD_EPS: f64 = 1e-9;

/// Below this CHO probability a dynamic-mode user is treated as purely THO.
const CHO_MASS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Synthetic,
    Trace,
}

/// Linear-scale SINR values, `slots × users × cells`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTensor {
    slots: usize,
    users: usize,
    cells: usize,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl SinrTensor {
    pub fn new(slots: usize, users: usize, cells: usize, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() != slots * users * cells {
            return Err(Error::Config(format!(
                "SINR tensor needs {} values, got {}",
                slots * users * cells,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("SINR values must be finite and nonnegative, got {v}")));
        }
        Ok(Self { slots, users, cells, values, provenance })
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// All `users × cells` values of one slot.
    pub fn slot(&self, t: usize) -> &[f64] {
        let n = self.users * self.cells;
        &self.values[t * n..(t + 1) * n]
    }

    pub fn row(&self, t: usize, i: usize) -> &[f64] {
        let s = self.slot(t);
        &s[i * self.cells..(i + 1) * self.cells]
    }

    pub fn at(&self, t: usize, i: usize, j: usize) -> f64 {
        self.values[(t * self.users + i) * self.cells + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Maximum throughputs `c_ij(t) = W_j ln(1 + s_ij(t))`, with the SINR kept
/// alongside for the best-prepared-cell rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTensor {
    slots: usize,
    users: usize,
    cells: usize,
    rates: Vec<f64>,
    log_rates: Vec<f64>,
    sinr: Vec<f64>,
}

impl RateTensor {
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    fn offset(&self, t: usize) -> usize {
        t * self.users * self.cells
    }

    pub fn rate(&self, t: usize, i: usize, j: usize) -> f64 {
        self.rates[self.offset(t) + i * self.cells + j]
    }

    pub fn sinr(&self, t: usize, i: usize, j: usize) -> f64 {
        self.sinr[self.offset(t) + i * self.cells + j]
    }

    /// `ln c` with the zero-rate lift, one slot.
    pub fn log_rates(&self, t: usize) -> &[f64] {
        let o = self.offset(t);
        &self.log_rates[o..o + self.users * self.cells]
    }

    pub fn sinr_slot(&self, t: usize) -> &[f64] {
        let o = self.offset(t);
        &self.sinr[o..o + self.users * self.cells]
    }

    /// Largest rate over the given slots.
    pub fn c_max(&self, slots: std::ops::Range<usize>) -> f64 {
        let start = self.offset(slots.start.min(self.slots));
        let end = self.offset(slots.end.min(self.slots));
        self.rates[start..end].iter().copied().fold(0.0, f64::max)
    }

    /// Restrict to the first `slots` slots.
    pub fn truncated(&self, slots: usize) -> RateTensor {
        let n = slots.min(self.slots) * self.users * self.cells;
        RateTensor {
            slots: slots.min(self.slots),
            users: self.users,
            cells: self.cells,
            rates: self.rates[..n].to_vec(),
            log_rates: self.log_rates[..n].to_vec(),
            sinr: self.sinr[..n].to_vec(),
        }
    }
}

/// Natural log of a rate, lifting a zero rate to 1.
#[inline]
pub fn lifted_log(c: f64) -> f64 {
    if c > 0.0 {
        c.ln()
    } else {
        0.0
    }
}

pub fn compute_rates(sinr: &SinrTensor, config: &NetworkConfig) -> Result<RateTensor> {
    if sinr.users() != config.num_users || sinr.cells() != config.num_cells {
        return Err(Error::Config(format!(
            "SINR tensor is {}x{}, network is {}x{}",
            sinr.users(),
            sinr.cells(),
            config.num_users,
            config.num_cells
        )));
    }
    let cells = config.num_cells;
    let rates: Vec<f64> = sinr
        .values()
        .iter()
        .enumerate()
        .map(|(n, s)| config.bandwidth[n % cells] * s.ln_1p())
        .collect();
    let log_rates = rates.iter().map(|&c| lifted_log(c)).collect();
    Ok(RateTensor {
        slots: sinr.slots(),
        users: sinr.users(),
        cells,
        rates,
        log_rates,
        sinr: sinr.values().to_vec(),
    })
}

/// Cell loads `ℓ_j = Σ_i x_ij + Σ_i y_ij`.
pub fn cell_loads(z: &Decision) -> Vec<f64> {
    let (users, cells) = z.shape();
    let mut loads = vec![0.0; cells];
    for i in 0..users {
        for (j, l) in loads.iter_mut().enumerate() {
            *l += z.x_at(i, j) + z.y_at(i, j);
        }
    }
    loads
}

fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

fn check_rates(z: &Decision, rates: &RateTensor, slot: usize) -> Result<()> {
    if z.shape() != (rates.users(), rates.cells()) {
        return Err(Error::Config(format!(
            "decision {:?} does not match rate tensor {}x{}",
            z.shape(),
            rates.users(),
            rates.cells()
        )));
    }
    if slot >= rates.slots() {
        return Err(Error::Config(format!("slot {slot} beyond rate horizon {}", rates.slots())));
    }
    Ok(())
}

/// Exact utility of a feasible binary decision (log-fair throughput per cell).
///
/// A CHO user earns its rate on the best-SINR prepared cell only; each of its
/// other prepared cells contributes `log((0 + 1) / ℓ_j) = -log ℓ_j`.
pub fn exact_utility(z: &Decision, rates: &RateTensor, slot: usize, config: &NetworkConfig) -> Result<f64> {
    check_rates(z, rates, slot)?;
    if z.form != Form::Binary || !z.entries_binary() {
        return Err(Error::Feasibility("exact utility needs a binary decision".into()));
    }
    let report = feasible::validate(z, config);
    if !report.is_ok() {
        return Err(Error::Feasibility(report.to_string()));
    }
    let loads = cell_loads(z);
    let log_c = rates.log_rates(slot);
    let sinr = rates.sinr_slot(slot);
    let cells = z.cells();
    let mut total = 0.0;
    for i in 0..z.users() {
        let row = i * cells;
        if let Some(j) = z.associated_cell(i) {
            total += log_c[row + j] - loads[j].ln();
        }
        let best = best_prepared(z.y_row(i), &sinr[row..row + cells]);
        for j in 0..cells {
            if z.y_at(i, j) == 1.0 {
                let c_log = if Some(j) == best { log_c[row + j] } else { 0.0 };
                total += c_log - loads[j].ln();
            }
        }
    }
    Ok(total)
}

/// Index of the highest-SINR prepared cell; ties go to the lowest index.
pub fn best_prepared(y_row: &[f64], sinr_row: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, (&y, &s)) in y_row.iter().zip(sinr_row).enumerate() {
        if y >= 0.5 && best.is_none_or(|b| s > sinr_row[b]) {
            best = Some(j);
        }
    }
    best
}

/// `Σ_i max_{j prepared} log c_ij`: the CHO throughput that the surrogate approximates.
pub fn cho_max_term(z: &Decision, rates: &RateTensor, slot: usize) -> Result<f64> {
    check_rates(z, rates, slot)?;
    let log_c = rates.log_rates(slot);
    let cells = z.cells();
    let mut total = 0.0;
    for i in 0..z.users() {
        let best = z
            .y_row(i)
            .iter()
            .zip(&log_c[i * cells..(i + 1) * cells])
            .filter(|(y, _)| **y >= 0.5)
            .map(|(_, d)| *d)
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_finite() {
            total += best;
        }
    }
    Ok(total)
}

/// Per-user CHO surrogate pieces: the user's CHO mass `u` and the
/// normalized log-partition `L = ln Σ_j (y_j / u) e^{α d_j}`.
#[derive(Debug, Clone, Copy)]
struct ChoPiece {
    u: f64,
    log_partition: f64,
}

impl ChoPiece {
    fn value(&self, alpha: f64) -> f64 {
        if self.u <= CHO_MASS_EPS {
            0.0
        } else {
            self.u * self.log_partition / alpha
        }
    }
}

fn cho_piece(y_row: &[f64], log_c: &[f64], alpha: f64, u: f64) -> ChoPiece {
    let u = u.max(0.0);
    let mut m = f64::NEG_INFINITY;
    for (&y, &d) in y_row.iter().zip(log_c) {
        if y > 0.0 {
            m = m.max(y.ln() + alpha * d);
        }
    }
    if u <= CHO_MASS_EPS || !m.is_finite() {
        // Supergradient at the apex: as if the user prepared its best-rate cell.
        let d_max = log_c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return ChoPiece { u, log_partition: alpha * d_max };
    }
    let s: f64 = y_row
        .iter()
        .zip(log_c)
        .filter(|(y, _)| **y > 0.0)
        .map(|(&y, &d)| (y.ln() + alpha * d - m).exp())
        .sum();
    ChoPiece { u, log_partition: m + s.ln() - u.ln() }
}

/// CHO mass of user `i`: fixed by the role in static mode, `1 - Σ_j x_ij` in dynamic mode.
fn cho_mass(z: &Decision, config: &NetworkConfig, i: usize) -> Option<f64> {
    match config.role(i) {
        Some(HoRole::Tho) => None,
        Some(HoRole::Cho) => Some(1.0),
        None => Some(1.0 - z.x_row_sum(i)),
    }
}

/// The LogSumExp approximation of the CHO throughput alone.
pub fn surrogate_cho_term(
    z: &Decision,
    rates: &RateTensor,
    slot: usize,
    config: &NetworkConfig,
    alpha: f64,
) -> Result<f64> {
    check_rates(z, rates, slot)?;
    let log_c = rates.log_rates(slot);
    let cells = z.cells();
    let mut total = 0.0;
    for i in 0..z.users() {
        if let Some(u) = cho_mass(z, config, i) {
            total += cho_piece(z.y_row(i), &log_c[i * cells..(i + 1) * cells], alpha, u).value(alpha);
        }
    }
    Ok(total)
}

/// Concave surrogate `g̃ = g_THO + g̃_CHO - Σ_j ℓ_j log ℓ_j`.
pub fn surrogate_utility(
    z: &Decision,
    rates: &RateTensor,
    slot: usize,
    config: &NetworkConfig,
    alpha: f64,
) -> Result<f64> {
    check_rates(z, rates, slot)?;
    let log_c = rates.log_rates(slot);
    let tho: f64 = z.x.iter().zip(log_c).map(|(x, d)| x * d).sum();
    let cho = surrogate_cho_term(z, rates, slot, config, alpha)?;
    let load: f64 = cell_loads(z).into_iter().map(xlogx).sum();
    Ok(tho + cho - load)
}

/// Analytic gradient of [`surrogate_utility`] over all `(x, y)` entries.
///
/// Entries that the static partition pins to zero get a zero partial.
pub fn surrogate_gradient(
    z: &Decision,
    rates: &RateTensor,
    slot: usize,
    config: &NetworkConfig,
    alpha: f64,
) -> Result<Decision> {
    check_rates(z, rates, slot)?;
    let (users, cells) = z.shape();
    let log_c = rates.log_rates(slot);
    let log_load: Vec<f64> = cell_loads(z)
        .into_iter()
        .map(|l| if l > 0.0 { l.ln() } else { (l.max(0.0) + LOAD_EPS).ln() })
        .collect();
    let mut g = Decision::zeros(users, cells, Form::Continuous);
    for i in 0..users {
        let row = i * cells;
        let d = &log_c[row..row + cells];
        let piece = cho_mass(z, config, i).map(|u| cho_piece(z.y_row(i), d, alpha, u));
        if config.x_enabled(i) {
            // ∂/∂x_ij of the perspective through u = 1 - Σ x
            let shift = match (config.role(i), piece) {
                (None, Some(p)) => -(p.log_partition - 1.0) / alpha,
                _ => 0.0,
            };
            for j in 0..cells {
                g.x[row + j] = d[j] - log_load[j] - 1.0 + shift;
            }
        }
        if let (true, Some(p)) = (config.y_enabled(i), piece) {
            for j in 0..cells {
                let e = (alpha * d[j] - p.log_partition).min(700.0);
                g.y[row + j] = e.exp() / alpha - log_load[j] - 1.0;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HoMode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn rates_from(users: usize, cells: usize, c: &[f64], bw: f64) -> (RateTensor, NetworkConfig) {
        // invert c = W ln(1 + s)
        let s: Vec<f64> = c.iter().map(|c| (c / bw).exp_m1()).collect();
        let sinr = SinrTensor::new(1, users, cells, s, Provenance::Synthetic).unwrap();
        let cfg = NetworkConfig::uniform(users, cells, 1, HoMode::Dynamic, 1, users)
            .unwrap()
            .with_bandwidth(vec![bw; cells])
            .unwrap();
        (compute_rates(&sinr, &cfg).unwrap(), cfg)
    }

    #[test]
    fn rate_examples() {
        let cfg = NetworkConfig::uniform(1, 3, 1, HoMode::Dynamic, 1, 1)
            .unwrap()
            .with_bandwidth(vec![1.0, 1.0, 10.0])
            .unwrap();
        let sinr = SinrTensor::new(1, 1, 3, vec![0.0, E - 1.0, 3.0], Provenance::Synthetic).unwrap();
        let r = compute_rates(&sinr, &cfg).unwrap();
        assert_eq!(r.rate(0, 0, 0), 0.0);
        assert!((r.rate(0, 0, 1) - 1.0).abs() < 1e-15);
        // scalar reference: 10 * ln 4
        assert!((r.rate(0, 0, 2) - 13.862943611198906).abs() < 1e-12);
        assert_eq!(r.log_rates(0)[0], 0.0);
    }

    #[test]
    fn load_examples() {
        assert_eq!(cell_loads(&Decision::zeros(2, 2, Form::Binary)), vec![0.0, 0.0]);

        let mut z = Decision::zeros(5, 2, Form::Binary);
        for i in 0..3 {
            z.set_x(i, 0, 1.0);
        }
        z.set_y(3, 0, 1.0);
        z.set_y(4, 0, 1.0);
        assert_eq!(cell_loads(&z)[0], 5.0);

        let mut z = Decision::zeros(2, 2, Form::Continuous);
        z.set_x(0, 0, 0.5);
        z.set_y(1, 0, 0.25);
        assert_eq!(cell_loads(&z)[0], 0.75);
    }

    #[test]
    fn exact_utility_single_tho_user() {
        let (r, cfg) = rates_from(1, 1, &[E], 1.0);
        let mut z = Decision::zeros(1, 1, Form::Binary);
        z.set_x(0, 0, 1.0);
        assert!((exact_utility(&z, &r, 0, &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_utility_cho_user_best_cell_only() {
        // user 0: CHO with cells {0, 1} prepared, rates (e², e); user 1: THO on cell 0.
        let (r, _) = rates_from(2, 2, &[E * E, E, E, E], 1.0);
        let cfg = NetworkConfig::uniform(2, 2, 1, HoMode::Dynamic, 2, 2).unwrap();
        let mut z = Decision::zeros(2, 2, Form::Binary);
        z.set_y(0, 0, 1.0);
        z.set_y(0, 1, 1.0);
        z.set_x(1, 0, 1.0);
        let total = exact_utility(&z, &r, 0, &cfg).unwrap();
        let tho_part = 1.0 - 2f64.ln();
        let cho_part = total - tho_part;
        assert!((cho_part - (2.0 - 2f64.ln())).abs() < 1e-12);
        assert!((cho_part - 1.3069).abs() < 1e-4);
    }

    #[test]
    fn exact_utility_lifts_zero_rate() {
        let (r, _) = rates_from(2, 1, &[0.0, 1.0], 1.0);
        let cfg = NetworkConfig::uniform(2, 1, 1, HoMode::Dynamic, 1, 2).unwrap();
        let mut z = Decision::zeros(2, 1, Form::Binary);
        z.set_x(0, 0, 1.0);
        z.set_x(1, 0, 1.0);
        // user 0 term: log((0+1)/2); user 1 term: log(1/2)
        let u = exact_utility(&z, &r, 0, &cfg).unwrap();
        assert!((u - (-2.0 * 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn exact_utility_rejects_infeasible() {
        let (r, cfg) = rates_from(1, 2, &[1.0, 1.0], 1.0);
        let z = Decision::zeros(1, 2, Form::Binary);
        assert!(matches!(exact_utility(&z, &r, 0, &cfg), Err(Error::Feasibility(_))));
    }

    #[test]
    fn surrogate_single_prepared_cell_is_exact() {
        let cfg = NetworkConfig::uniform(1, 3, 1, HoMode::split(1, 0), 2, 1).unwrap();
        let (r, _) = rates_from(1, 3, &[3.0, 5.0, 7.0], 1.0);
        let mut z = Decision::zeros(1, 3, Form::Binary);
        z.set_y(0, 1, 1.0);
        for alpha in [0.5, 1.0, 20.0, 300.0] {
            let v = surrogate_cho_term(&z, &r, 0, &cfg, alpha).unwrap();
            assert!((v - 5f64.ln()).abs() < 1e-12, "alpha {alpha}");
        }
    }

    #[test]
    fn surrogate_equal_rates_gap_is_ln2_over_alpha() {
        let cfg = NetworkConfig::uniform(1, 2, 1, HoMode::split(1, 0), 2, 1).unwrap();
        let c = 4.0;
        let (r, _) = rates_from(1, 2, &[c, c], 1.0);
        let mut z = Decision::zeros(1, 2, Form::Binary);
        z.set_y(0, 0, 1.0);
        z.set_y(0, 1, 1.0);
        for alpha in [1.0, 10.0, 100.0] {
            let v = surrogate_cho_term(&z, &r, 0, &cfg, alpha).unwrap();
            assert!((v - (c.ln() + 2f64.ln() / alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn surrogate_without_cho_users() {
        let cfg = NetworkConfig::uniform(2, 2, 1, HoMode::split(2, 2), 1, 2).unwrap();
        let (r, _) = rates_from(2, 2, &[2.0, 3.0, 4.0, 5.0], 1.0);
        let z = Decision::from_parts(2, 2, vec![0.3, 0.7, 0.6, 0.4], vec![0.0; 4], Form::Continuous).unwrap();
        let g_tho = 0.3 * 2f64.ln() + 0.7 * 3f64.ln() + 0.6 * 4f64.ln() + 0.4 * 5f64.ln();
        let ent = 0.9 * 0.9f64.ln() + 1.1 * 1.1f64.ln();
        let v = surrogate_utility(&z, &r, 0, &cfg, 20.0).unwrap();
        assert!((v - (g_tho - ent)).abs() < 1e-12);
    }

    #[test]
    fn gradient_tho_entry_example() {
        let cfg = NetworkConfig::uniform(1, 1, 1, HoMode::split(1, 1), 1, 1).unwrap();
        let (r, _) = rates_from(1, 1, &[E], 1.0);
        let mut z = Decision::zeros(1, 1, Form::Continuous);
        z.set_x(0, 0, 1.0);
        let g = surrogate_gradient(&z, &r, 0, &cfg, 20.0).unwrap();
        assert!(g.x[0].abs() < 1e-12);
    }

    #[test]
    fn gradient_symmetric_under_cell_permutation() {
        let cfg = NetworkConfig::uniform(2, 2, 1, HoMode::Dynamic, 2, 2).unwrap();
        let (r, _) = rates_from(2, 2, &[3.0, 3.0, 3.0, 3.0], 1.0);
        let z = Decision::from_parts(2, 2, vec![0.25; 4], vec![0.5; 4], Form::Continuous).unwrap();
        let g = surrogate_gradient(&z, &r, 0, &cfg, 20.0).unwrap();
        assert!((g.x[0] - g.x[1]).abs() < 1e-12);
        assert!((g.y[0] - g.y[1]).abs() < 1e-12);
        assert!((g.x[0] - g.x[2]).abs() < 1e-12);
    }

    fn finite_difference(
        z: &Decision,
        r: &RateTensor,
        cfg: &NetworkConfig,
        alpha: f64,
        h: f64,
    ) -> Decision {
        let mut g = Decision::zeros(z.users(), z.cells(), Form::Continuous);
        for n in 0..z.x.len() {
            for part in 0..2 {
                let enabled = if part == 0 {
                    cfg.x_enabled(n / z.cells())
                } else {
                    cfg.y_enabled(n / z.cells())
                };
                if !enabled {
                    continue;
                }
                let mut plus = z.clone();
                let mut minus = z.clone();
                if part == 0 {
                    plus.x[n] += h;
                    minus.x[n] -= h;
                } else {
                    plus.y[n] += h;
                    minus.y[n] -= h;
                }
                let d = (surrogate_utility(&plus, r, 0, cfg, alpha).unwrap()
                    - surrogate_utility(&minus, r, 0, cfg, alpha).unwrap())
                    / (2.0 * h);
                if part == 0 {
                    g.x[n] = d;
                } else {
                    g.y[n] = d;
                }
            }
        }
        g
    }

    #[test]
    fn gradient_matches_finite_differences_static_and_dynamic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mode in [HoMode::split(2, 1), HoMode::Dynamic] {
            let cfg = NetworkConfig::uniform(2, 3, 1, mode, 3, 2).unwrap();
            for _ in 0..20 {
                let c: Vec<f64> = (0..6).map(|_| rng.gen_range(0.5..5.0)).collect();
                let (r, _) = rates_from(2, 3, &c, 1.0);
                let mut z = Decision::zeros(2, 3, Form::Continuous);
                for i in 0..2 {
                    for j in 0..3 {
                        if cfg.x_enabled(i) {
                            z.set_x(i, j, rng.gen_range(0.05..0.3));
                        }
                        if cfg.y_enabled(i) {
                            z.set_y(i, j, rng.gen_range(0.2..0.6));
                        }
                    }
                }
                let alpha = 3.0;
                let g = surrogate_gradient(&z, &r, 0, &cfg, alpha).unwrap();
                let fd = finite_difference(&z, &r, &cfg, alpha, 1e-6);
                for (a, b) in g.x.iter().chain(&g.y).zip(fd.x.iter().chain(&fd.y)) {
                    let rel = (a - b).abs() / a.abs().max(b.abs()).max(1.0);
                    assert!(rel < 1e-5, "analytic {a} vs fd {b}");
                }
            }
        }
    }

    #[test]
    fn dynamic_surrogate_matches_static_on_binary_points() {
        let (r, _) = rates_from(2, 3, &[1.5, 2.5, 0.7, 3.0, 1.1, 2.2], 1.0);
        let stat = NetworkConfig::uniform(2, 3, 1, HoMode::split(2, 1), 2, 2).unwrap();
        let dynm = NetworkConfig::uniform(2, 3, 1, HoMode::Dynamic, 2, 2).unwrap();
        let mut z = Decision::zeros(2, 3, Form::Binary);
        z.set_x(0, 1, 1.0);
        z.set_y(1, 0, 1.0);
        z.set_y(1, 2, 1.0);
        let a = surrogate_utility(&z, &r, 0, &stat, 20.0).unwrap();
        let b = surrogate_utility(&z, &r, 0, &dynm, 20.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
