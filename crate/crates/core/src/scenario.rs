//! SINR and switching-cost streams: block-redrawn synthetic regimes,
//! Gauss-Markov mobility over a measurement trace, and cost generators.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostMatrices, NetworkConfig};
use crate::objective::{Provenance, SinrTensor};

pub const DEFAULT_SLOT_SECONDS: f64 = 0.5;
/// Slots whose rates calibrate `c_max` for trace scenarios.
pub const CALIBRATION_SLOTS: usize = 100;
const GRID_THRESHOLD: usize = 10_000;

/// RNG stream ids, so each consumer of a seed draws independently.
pub const STREAM_SINR: u64 = 0;
pub const STREAM_COSTS: u64 = 1;
pub const STREAM_POLICY: u64 = 2;

/// A seeded ChaCha generator on a given stream.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `s_ij = q_j φ_ij / (W_j σ² + Σ_{k ∈ B_j} q_k φ_ik)` for every user and cell.
///
/// `gains` is `users × cells` row-major; `interferers[j]` lists the cells
/// sharing cell `j`'s frequency.
pub fn compute_sinr(
    power: &[f64],
    gains: &[f64],
    bandwidth: &[f64],
    noise_density: f64,
    interferers: &[Vec<usize>],
) -> Result<Vec<f64>> {
    let cells = power.len();
    if bandwidth.len() != cells || interferers.len() != cells || cells == 0 || !gains.len().is_multiple_of(cells) {
        return Err(Error::Config("SINR inputs have inconsistent cell counts".into()));
    }
    if !(noise_density > 0.0) {
        return Err(Error::Domain(format!("noise density must be positive, got {noise_density}")));
    }
    if gains.iter().chain(power).any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("powers and gains must be nonnegative".into()));
    }
    if interferers.iter().flatten().any(|&k| k >= cells) {
        return Err(Error::Config("interferer index out of range".into()));
    }
    let mut out = Vec::with_capacity(gains.len());
    for row in gains.chunks(cells) {
        for j in 0..cells {
            let interference: f64 = interferers[j].iter().map(|&k| power[k] * row[k]).sum();
            out.push(power[j] * row[j] / (bandwidth[j] * noise_density + interference));
        }
    }
    Ok(out)
}

fn default_range() -> [f64; 2] {
    [0.0, 30.0]
}

fn default_beta() -> f64 {
    0.9
}

fn default_slot_seconds() -> f64 {
    DEFAULT_SLOT_SECONDS
}

fn default_heading_std() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioKind {
    /// Per-pair dB values redrawn uniformly every `period` slots.
    Volatile {
        period: usize,
        #[serde(default = "default_range")]
        range_db: [f64; 2],
    },
    /// Same generator, intended for long periods.
    Stationary {
        period: usize,
        #[serde(default = "default_range")]
        range_db: [f64; 2],
    },
    GaussMarkovTrace {
        trace: PathBuf,
        v_min: f64,
        v_max: f64,
        /// Variance of the speed innovation, (m/s)².
        variance: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_heading_std")]
        heading_std: f64,
        #[serde(default = "default_slot_seconds")]
        slot_seconds: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CostKind {
    Uniform { a: f64, b: f64 },
    /// Per-pair `a ~ U(b_max, a_max]`, `b ~ U(0, b_max]`, constant in time.
    Heterogeneous { a_max: f64, b_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub costs: CostKind,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ScenarioKind::Volatile { period, range_db } | ScenarioKind::Stationary { period, range_db } => {
                if *period == 0 {
                    return Err(Error::Config("scenario.kind.period must be at least 1".into()));
                }
                if !(range_db[0].is_finite() && range_db[1].is_finite() && range_db[0] <= range_db[1]) {
                    return Err(Error::Config(format!("scenario.kind.range_db is not a valid interval: {range_db:?}")));
                }
            }
            ScenarioKind::GaussMarkovTrace { v_min, v_max, variance, beta, slot_seconds, heading_std, .. } => {
                if !(*v_min >= 0.0 && v_min <= v_max) {
                    return Err(Error::Config("scenario.kind needs 0 <= v_min <= v_max".into()));
                }
                if !(*variance >= 0.0 && *heading_std >= 0.0) {
                    return Err(Error::Config("scenario.kind noise parameters must be nonnegative".into()));
                }
                if !(0.0..=1.0).contains(beta) {
                    return Err(Error::Config("scenario.kind.beta must lie in [0, 1]".into()));
                }
                if !(*slot_seconds > 0.0) {
                    return Err(Error::Config("scenario.kind.slot_seconds must be positive".into()));
                }
            }
        }
        match self.costs {
            CostKind::Uniform { a, b } => {
                if !(a > b && b > 0.0 && a <= 1.0) {
                    return Err(Error::Config(format!("scenario.costs needs 1 >= a > b > 0 (got a={a}, b={b})")));
                }
            }
            CostKind::Heterogeneous { a_max, b_max } => {
                if !(a_max > b_max && b_max > 0.0 && a_max <= 1.0) {
                    return Err(Error::Config(format!(
                        "scenario.costs needs 1 >= a_max > b_max > 0 (got {a_max}, {b_max})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Trace paths are resolved against `base` when relative.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let ScenarioKind::GaussMarkovTrace { trace, .. } = &mut self.kind {
            if trace.is_relative() {
                *trace = base.join(&*trace);
            }
        }
    }
}

/// Block-constant uniform-dB SINR, redrawn every `period` slots.
pub fn gen_block_sinr<R: Rng + ?Sized>(
    period: usize,
    range_db: [f64; 2],
    users: usize,
    cells: usize,
    slots: usize,
    rng: &mut R,
) -> Result<SinrTensor> {
    if period == 0 {
        return Err(Error::Config("period must be at least 1".into()));
    }
    let n = users * cells;
    let mut values = Vec::with_capacity(slots * n);
    let mut block = vec![0.0; n];
    for t in 0..slots {
        if t % period == 0 {
            for v in block.iter_mut() {
                *v = db_to_linear(draw_uniform(range_db[0], range_db[1], rng));
            }
        }
        values.extend_from_slice(&block);
    }
    SinrTensor::new(slots, users, cells, values, Provenance::Synthetic)
}

fn draw_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub x: f64,
    pub y: f64,
    /// Per-cell SINR in dB; `None` is an unreachable cell.
    pub sinr_db: Vec<Option<f64>>,
}

impl TraceRecord {
    pub fn linear_row(&self) -> Vec<f64> {
        self.sinr_db.iter().map(|v| v.map_or(0.0, db_to_linear)).collect()
    }
}

/// Counters from [`load_trace`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    /// Rows kept with at least one cell padded to zero.
    pub padded_rows: usize,
    /// 1-based line numbers of rows dropped for lacking a location.
    pub dropped_lines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    pub cells: usize,
    pub records: Vec<TraceRecord>,
    pub report: ParseReport,
    rows: Vec<Vec<f64>>,
    grid: Option<Grid>,
}

impl MobilityTrace {
    pub fn new(cells: usize, records: Vec<TraceRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Config("trace has no records".into()));
        }
        if cells == 0 {
            return Err(Error::Config("trace needs at least one cell".into()));
        }
        if let Some(r) = records.iter().find(|r| r.sinr_db.len() != cells) {
            return Err(Error::Config(format!("record with {} cells in a {cells}-cell trace", r.sinr_db.len())));
        }
        if records.iter().any(|r| !(r.x.is_finite() && r.y.is_finite())) {
            return Err(Error::Domain("trace locations must be finite".into()));
        }
        let rows = records.iter().map(TraceRecord::linear_row).collect();
        let grid = (records.len() > GRID_THRESHOLD).then(|| Grid::build(&records));
        Ok(Self { cells, records, report: ParseReport::default(), rows, grid })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Linear SINR row of a record.
    pub fn row(&self, index: usize) -> &[f64] {
        &self.rows[index]
    }

    /// Index of the record nearest to `(x, y)`, ties to the lowest index.
    pub fn nearest(&self, x: f64, y: f64) -> usize {
        match &self.grid {
            Some(g) => g.nearest(&self.records, x, y),
            None => nearest_brute(&self.records, x, y),
        }
    }

    /// Bounding box `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.records.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), r| (a.min(r.x), b.min(r.y), c.max(r.x), d.max(r.y)),
        )
    }
}

fn dist2(r: &TraceRecord, x: f64, y: f64) -> f64 {
    (r.x - x).powi(2) + (r.y - y).powi(2)
}

fn nearest_brute(records: &[TraceRecord], x: f64, y: f64) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (k, r) in records.iter().enumerate() {
        let d = dist2(r, x, y);
        if d < bd {
            bd = d;
            best = k;
        }
    }
    best
}

/// Uniform bucket grid over the trace's bounding box.
#[derive(Debug, Clone, PartialEq)]
struct Grid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: i64,
    ny: i64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn build(records: &[TraceRecord]) -> Self {
        let (x0, y0, x1, y1) = records.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), r| (a.min(r.x), b.min(r.y), c.max(r.x), d.max(r.y)),
        );
        let area = ((x1 - x0) * (y1 - y0)).max(1e-12);
        // about four records per bucket
        let cell = (4.0 * area / records.len() as f64).sqrt().max(1e-9);
        let nx = ((x1 - x0) / cell).floor() as i64 + 1;
        let ny = ((y1 - y0) / cell).floor() as i64 + 1;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, r) in records.iter().enumerate() {
            let key = (((r.x - x0) / cell).floor() as i64, ((r.y - y0) / cell).floor() as i64);
            buckets.entry(key).or_default().push(k);
        }
        Self { x0, y0, cell, nx, ny, buckets }
    }

    fn nearest(&self, records: &[TraceRecord], x: f64, y: f64) -> usize {
        let cx = (((x - self.x0) / self.cell).floor() as i64).clamp(0, self.nx - 1);
        let cy = (((y - self.y0) / self.cell).floor() as i64).clamp(0, self.ny - 1);
        let mut best: Option<(f64, usize)> = None;
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            for gx in cx - ring..=cx + ring {
                for gy in cy - ring..=cy + ring {
                    if (gx - cx).abs() != ring && (gy - cy).abs() != ring {
                        continue;
                    }
                    if let Some(ids) = self.buckets.get(&(gx, gy)) {
                        for &k in ids {
                            let d = dist2(&records[k], x, y);
                            if best.is_none_or(|(bd, bk)| d < bd || (d == bd && k < bk)) {
                                best = Some((d, k));
                            }
                        }
                    }
                }
            }
            // unvisited buckets lie at least `ring * cell` from the clamped query,
            // and clamping onto the box never increases distances to it
            if let Some((bd, _)) = best {
                if bd.sqrt() <= ring as f64 * self.cell {
                    break;
                }
            }
        }
        best.map_or(0, |(_, k)| k)
    }
}

/// Reads a trace CSV: `lat_m,lon_m,sinr_db_cell_0,…`. Empty cell fields and
/// short rows are padded as unreachable cells.
pub fn load_trace(path: &Path) -> Result<MobilityTrace> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_trace(&text)
}

pub fn parse_trace(text: &str) -> Result<MobilityTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    if header.len() < 3 || &header[0] != "lat_m" || &header[1] != "lon_m" {
        return Err(Error::Parse { line: 1, message: "header must start with lat_m,lon_m,sinr_db_cell_0".into() });
    }
    for (k, name) in header.iter().skip(2).enumerate() {
        if name != format!("sinr_db_cell_{k}") {
            return Err(Error::Parse { line: 1, message: format!("expected column sinr_db_cell_{k}, found {name:?}") });
        }
    }
    let cells = header.len() - 2;
    let mut records = Vec::new();
    let mut report = ParseReport::default();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() > header.len() {
            return Err(Error::Parse { line, message: format!("{} fields, header has {}", row.len(), header.len()) });
        }
        let field = |k: usize| -> Result<Option<f64>> {
            match row.get(k) {
                None | Some("") => Ok(None),
                Some(s) => s
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Some)
                    .ok_or_else(|| Error::Parse { line, message: format!("non-numeric field {s:?} in column {}", &header[k]) }),
            }
        };
        let (x, y) = match (field(0)?, field(1)?) {
            (Some(x), Some(y)) => (x, y),
            _ => {
                report.dropped_lines.push(line);
                continue;
            }
        };
        let sinr_db: Vec<Option<f64>> = (0..cells).map(|j| field(j + 2)).collect::<Result<_>>()?;
        if sinr_db.iter().any(Option::is_none) {
            report.padded_rows += 1;
        }
        records.push(TraceRecord { x, y, sinr_db });
    }
    if records.is_empty() {
        return Err(Error::Parse { line: 1, message: "no records".into() });
    }
    let mut trace = MobilityTrace::new(cells, records)?;
    trace.report = report;
    Ok(trace)
}

pub fn write_trace<W: Write>(trace: &MobilityTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["lat_m".to_string(), "lon_m".to_string()];
    header.extend((0..trace.cells).map(|j| format!("sinr_db_cell_{j}")));
    w.write_record(&header).map_err(csv_io)?;
    for r in &trace.records {
        let mut row = vec![r.x.to_string(), r.y.to_string()];
        row.extend(r.sinr_db.iter().map(|v| v.map_or(String::new(), |d| d.to_string())));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace(trace: &MobilityTrace, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Parameters of the Gauss-Markov walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussMarkov {
    pub v_min: f64,
    pub v_max: f64,
    pub variance: f64,
    pub beta: f64,
    pub heading_std: f64,
    pub slot_seconds: f64,
}

impl GaussMarkov {
    pub fn mean_speed(&self) -> f64 {
        0.5 * (self.v_min + self.v_max)
    }
}

/// Kinematic state of one simulated user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserState {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub heading: f64,
    mean_heading: f64,
}

impl UserState {
    /// One Gauss-Markov step followed by position integration.
    pub fn step<R: Rng + ?Sized>(&mut self, p: &GaussMarkov, rng: &mut R) {
        let s = (1.0 - p.beta * p.beta).max(0.0).sqrt();
        let nv: f64 = rng.sample(StandardNormal);
        let nh: f64 = rng.sample(StandardNormal);
        self.speed = (p.beta * self.speed + (1.0 - p.beta) * p.mean_speed() + s * p.variance.sqrt() * nv)
            .clamp(p.v_min, p.v_max);
        self.heading = p.beta * self.heading + (1.0 - p.beta) * self.mean_heading + s * p.heading_std * nh;
        self.x += self.speed * p.slot_seconds * self.heading.cos();
        self.y += self.speed * p.slot_seconds * self.heading.sin();
    }
}

/// Users start at uniformly drawn records and walk; each slot reads the
/// nearest record's SINR row.
pub fn gen_gauss_markov<R: Rng + ?Sized>(
    trace: &MobilityTrace,
    users: usize,
    slots: usize,
    params: &GaussMarkov,
    rng: &mut R,
) -> Result<(SinrTensor, Vec<Vec<UserState>>)> {
    if trace.is_empty() {
        return Err(Error::Config("trace has no records".into()));
    }
    let mut states: Vec<UserState> = (0..users)
        .map(|_| {
            let r = &trace.records[rng.gen_range(0..trace.len())];
            let heading = rng.gen_range(0.0..std::f64::consts::TAU);
            let speed = draw_uniform(params.v_min, params.v_max, rng);
            UserState { x: r.x, y: r.y, speed, heading, mean_heading: heading }
        })
        .collect();
    let cells = trace.cells;
    let mut values = Vec::with_capacity(slots * users * cells);
    let mut history = Vec::with_capacity(slots);
    for t in 0..slots {
        if t > 0 {
            for s in states.iter_mut() {
                s.step(params, rng);
            }
        }
        for s in &states {
            values.extend_from_slice(trace.row(trace.nearest(s.x, s.y)));
        }
        history.push(states.clone());
    }
    Ok((SinrTensor::new(slots, users, cells, values, Provenance::Trace)?, history))
}

pub fn gen_costs<R: Rng + ?Sized>(
    kind: &CostKind,
    users: usize,
    cells: usize,
    slots: usize,
    rng: &mut R,
) -> Result<CostMatrices> {
    match *kind {
        CostKind::Uniform { a, b } => CostMatrices::uniform(users, cells, slots, a, b),
        CostKind::Heterogeneous { a_max, b_max } => {
            if !(a_max > b_max && b_max > 0.0) {
                return Err(Error::Domain(format!("need a_max > b_max > 0, got {a_max}, {b_max}")));
            }
            let n = users * cells;
            // (lo, hi] by reflecting the half-open [lo, hi) draw
            let a: Vec<f64> = (0..n).map(|_| a_max - rng.gen_range(0.0..a_max - b_max)).collect();
            let b: Vec<f64> = (0..n).map(|_| b_max - rng.gen_range(0.0..b_max)).collect();
            CostMatrices::constant(users, cells, slots, a, b)
        }
    }
}

/// A synthetic drive-test trace: cells on a ring, log-distance path loss,
/// all cells on one frequency, measurements on a square grid.
pub fn synthetic_trace<R: Rng + ?Sized>(cells: usize, side_m: f64, points_per_side: usize, rng: &mut R) -> Result<MobilityTrace> {
    if cells == 0 || points_per_side < 1 || !(side_m > 0.0) {
        return Err(Error::Config("synthetic trace needs cells, points and a positive side".into()));
    }
    let centre = side_m / 2.0;
    let sites: Vec<(f64, f64)> = (0..cells)
        .map(|j| {
            let ang = std::f64::consts::TAU * j as f64 / cells as f64 + rng.gen_range(-0.2..0.2);
            let r = side_m * rng.gen_range(0.2..0.4);
            (centre + r * ang.cos(), centre + r * ang.sin())
        })
        .collect();
    let power = vec![1.0; cells];
    let bandwidth = vec![1.0; cells];
    let interferers: Vec<Vec<usize>> = (0..cells).map(|j| (0..cells).filter(|&k| k != j).collect()).collect();
    let step = side_m / points_per_side as f64;
    let mut records = Vec::with_capacity(points_per_side * points_per_side);
    for gx in 0..points_per_side {
        for gy in 0..points_per_side {
            let (x, y) = ((gx as f64 + 0.5) * step, (gy as f64 + 0.5) * step);
            let gains: Vec<f64> = sites
                .iter()
                .map(|(sx, sy)| {
                    let d = (x - sx).hypot(y - sy).max(10.0);
                    let shadow_db: f64 = 4.0 * rng.sample::<f64, _>(StandardNormal);
                    (d / 10.0).powf(-3.5) * db_to_linear(shadow_db)
                })
                .collect();
            let sinr = compute_sinr(&power, &gains, &bandwidth, 1e-6, &interferers)?;
            let sinr_db = sinr
                .iter()
                .map(|&s| {
                    let db = 10.0 * s.log10();
                    // below -10 dB a cell is treated as unreachable
                    (db >= -10.0).then(|| (db * 100.0).round() / 100.0)
                })
                .collect();
            records.push(TraceRecord { x, y, sinr_db });
        }
    }
    MobilityTrace::new(cells, records)
}

/// SINR tensor, switching costs and the rate ceiling for one seeded scenario.
#[derive(Debug, Clone)]
pub struct Generated {
    pub sinr: SinrTensor,
    pub costs: CostMatrices,
    pub c_max: f64,
}

pub fn generate(scenario: &ScenarioConfig, network: &NetworkConfig, seed: u64) -> Result<Generated> {
    scenario.validate()?;
    let (users, cells, slots) = (network.num_users, network.num_cells, network.horizon);
    let mut rng = seeded_rng(seed, STREAM_SINR);
    let w_max = network.bandwidth.iter().copied().fold(0.0, f64::max);
    let (sinr, c_max) = match &scenario.kind {
        ScenarioKind::Volatile { period, range_db } | ScenarioKind::Stationary { period, range_db } => {
            let sinr = gen_block_sinr(*period, *range_db, users, cells, slots, &mut rng)?;
            (sinr, w_max * db_to_linear(range_db[1]).ln_1p())
        }
        ScenarioKind::GaussMarkovTrace { trace, v_min, v_max, variance, beta, heading_std, slot_seconds } => {
            let tr = load_trace(trace)?;
            if tr.cells != cells {
                return Err(Error::Config(format!("trace has {} cells, network has {cells}", tr.cells)));
            }
            let p = GaussMarkov {
                v_min: *v_min,
                v_max: *v_max,
                variance: *variance,
                beta: *beta,
                heading_std: *heading_std,
                slot_seconds: *slot_seconds,
            };
            let (sinr, _) = gen_gauss_markov(&tr, users, slots, &p, &mut rng)?;
            let calib = CALIBRATION_SLOTS.min(slots);
            let mut c_max: f64 = 0.0;
            for t in 0..calib {
                for (n, s) in sinr.slot(t).iter().enumerate() {
                    c_max = c_max.max(network.bandwidth[n % cells] * s.ln_1p());
                }
            }
            (sinr, c_max.max(f64::MIN_POSITIVE))
        }
    };
    let mut crng = seeded_rng(seed, STREAM_COSTS);
    let costs = gen_costs(&scenario.costs, users, cells, slots, &mut crng)?;
    Ok(Generated { sinr, costs, c_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinr_examples() {
        let s = compute_sinr(&[2.0], &[0.5], &[1.0], 1.0, &[vec![]]).unwrap();
        assert_eq!(s, vec![1.0]);
        let s = compute_sinr(&[2.0], &[0.0], &[1.0], 1.0, &[vec![]]).unwrap();
        assert_eq!(s, vec![0.0]);
        // q1 φ = 4, W σ² = 1, interferer q2 φ = 3
        let s = compute_sinr(&[4.0, 3.0], &[1.0, 1.0], &[1.0, 1.0], 1.0, &[vec![1], vec![]]).unwrap();
        assert_eq!(s[0], 1.0);
        assert!(compute_sinr(&[1.0], &[1.0], &[1.0], 0.0, &[vec![]]).is_err());
    }

    #[test]
    fn db_conversion_is_exact_on_round_values() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert_eq!(db_to_linear(30.0), 1000.0);
        assert_eq!(db_to_linear(10.0), 10.0);
    }

    #[test]
    fn block_boundaries() {
        let mut rng = seeded_rng(3, 0);
        let s = gen_block_sinr(10, [0.0, 30.0], 2, 2, 25, &mut rng).unwrap();
        let mut changes = vec![];
        for t in 1..25 {
            if s.slot(t) != s.slot(t - 1) {
                changes.push(t);
            }
        }
        assert_eq!(changes, vec![10, 20]);
        let s = gen_block_sinr(25, [0.0, 30.0], 2, 2, 25, &mut rng).unwrap();
        assert!((1..25).all(|t| s.slot(t) == s.slot(0)));
        let s = gen_block_sinr(1, [0.0, 30.0], 2, 2, 25, &mut rng).unwrap();
        assert!((1..25).all(|t| s.slot(t) != s.slot(t - 1)));
        assert!(s.values().iter().all(|v| (1.0..=1000.0).contains(v)));
    }

    #[test]
    fn cost_generators() {
        let mut rng = seeded_rng(1, STREAM_COSTS);
        let c = gen_costs(&CostKind::Uniform { a: 0.5, b: 0.1 }, 2, 3, 4, &mut rng).unwrap();
        assert!(c.a(3).iter().all(|&v| v == 0.5) && c.b(0).iter().all(|&v| v == 0.1));
        let c = gen_costs(&CostKind::Heterogeneous { a_max: 0.8, b_max: 0.2 }, 5, 4, 3, &mut rng).unwrap();
        let amin = c.a(0).iter().copied().fold(f64::INFINITY, f64::min);
        let bmax = c.b(0).iter().copied().fold(0.0, f64::max);
        assert!(amin > bmax);
        assert!(c.tho_dominates());
        assert!(c.a_max <= 0.8 && c.b_max <= 0.2);
        assert_eq!(c.a(0), c.a(2));
    }

    fn small_trace() -> MobilityTrace {
        let recs = vec![
            TraceRecord { x: 0.0, y: 0.0, sinr_db: vec![Some(10.0), None] },
            TraceRecord { x: 100.0, y: 0.0, sinr_db: vec![Some(0.0), Some(20.0)] },
        ];
        MobilityTrace::new(2, recs).unwrap()
    }

    #[test]
    fn nearest_ties_to_lowest_index() {
        let t = small_trace();
        assert_eq!(t.nearest(50.0, 0.0), 0);
        assert_eq!(t.nearest(51.0, 3.0), 1);
        assert_eq!(t.row(0), &[10.0, 0.0]);
    }

    #[test]
    fn grid_matches_brute_force() {
        let mut rng = seeded_rng(9, 0);
        let recs: Vec<TraceRecord> = (0..12_000)
            .map(|_| TraceRecord { x: rng.gen_range(0.0..1000.0), y: rng.gen_range(0.0..500.0), sinr_db: vec![Some(1.0)] })
            .collect();
        let t = MobilityTrace::new(1, recs).unwrap();
        assert!(t.grid.is_some());
        for _ in 0..500 {
            let (x, y) = (rng.gen_range(-200.0..1200.0), rng.gen_range(-200.0..700.0));
            let g = t.nearest(x, y);
            let b = nearest_brute(&t.records, x, y);
            assert_eq!(dist2(&t.records[g], x, y), dist2(&t.records[b], x, y));
        }
    }

    #[test]
    fn trace_parsing() {
        let text = "lat_m,lon_m,sinr_db_cell_0,sinr_db_cell_1\n0,0,10,\n5,5,3\n,1,2,2\n";
        let t = parse_trace(text).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.report.padded_rows, 2);
        assert_eq!(t.report.dropped_lines, vec![4]);
        assert_eq!(t.records[1].sinr_db, vec![Some(3.0), None]);
        let err = parse_trace("lat_m,lon_m,sinr_db_cell_0\n").unwrap_err();
        assert!(err.to_string().contains("no records"));
        let err = parse_trace("lat_m,lon_m,sinr_db_cell_0\n1,2,abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(parse_trace("x,y,z\n1,2,3\n").is_err());
    }

    #[test]
    fn trace_round_trip() {
        let mut rng = seeded_rng(5, 0);
        let t = synthetic_trace(4, 500.0, 6, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_trace(&t, &mut buf).unwrap();
        let back = parse_trace(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.records, t.records);
    }

    fn gm(beta: f64, variance: f64) -> GaussMarkov {
        GaussMarkov { v_min: 20.0, v_max: 28.0, variance, beta, heading_std: 0.3, slot_seconds: 0.5 }
    }

    #[test]
    fn gauss_markov_degenerate_cases() {
        let t = small_trace();
        let mut rng = seeded_rng(2, 0);
        let p = GaussMarkov { heading_std: 0.0, ..gm(1.0, 4.0) };
        let (_, hist) = gen_gauss_markov(&t, 3, 20, &p, &mut rng).unwrap();
        for u in 0..3 {
            assert!(hist.iter().all(|s| s[u].speed == hist[0][u].speed && s[u].heading == hist[0][u].heading));
        }
        let p = GaussMarkov { heading_std: 0.0, ..gm(0.0, 0.0) };
        let (_, hist) = gen_gauss_markov(&t, 3, 20, &p, &mut rng).unwrap();
        assert!(hist[1..].iter().flatten().all(|s| s.speed == 24.0));
        let one = MobilityTrace::new(2, vec![TraceRecord { x: 1.0, y: 1.0, sinr_db: vec![Some(3.0), None] }]).unwrap();
        let (s, _) = gen_gauss_markov(&one, 2, 30, &gm(0.9, 4.0), &mut rng).unwrap();
        let row = one.row(0).to_vec();
        assert!((0..30).all(|t| s.row(t, 0) == row.as_slice() && s.row(t, 1) == row.as_slice()));
    }

    #[test]
    fn gauss_markov_mean_speed() {
        let t = small_trace();
        let mut rng = seeded_rng(11, 0);
        let (_, hist) = gen_gauss_markov(&t, 20, 5000, &gm(0.9, 4.0), &mut rng).unwrap();
        let n = hist.len() * 20;
        let mean: f64 = hist.iter().flatten().map(|s| s.speed).sum::<f64>() / n as f64;
        assert!((mean - 24.0).abs() / 24.0 < 0.02, "{mean}");
        assert!(hist.iter().flatten().all(|s| (20.0..=28.0).contains(&s.speed)));
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let net = NetworkConfig::uniform(3, 2, 30, crate::model::HoMode::Dynamic, 2, 3).unwrap();
        let sc = ScenarioConfig {
            kind: ScenarioKind::Volatile { period: 10, range_db: [0.0, 30.0] },
            costs: CostKind::Heterogeneous { a_max: 0.6, b_max: 0.1 },
        };
        let a = generate(&sc, &net, 7).unwrap();
        let b = generate(&sc, &net, 7).unwrap();
        let c = generate(&sc, &net, 8).unwrap();
        assert_eq!(a.sinr, b.sinr);
        assert_eq!(a.costs, b.costs);
        assert_ne!(a.sinr, c.sinr);
        assert!((a.c_max - 1001f64.ln()).abs() < 1e-12);
    }
}
