//! Run configuration and the simulation loop that drives every policy over a
//! seeded scenario and fills its ledger.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{self, OracleOptions, ThresholdKind, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::feasible::{self, RepairCounts};
use crate::learner::{self, GradientClip, LearnerOptions, LearnerState, SwitchingLoss};
use crate::metrics::{self, RunLedger, SlotRecord, Totals};
use crate::model::{self, CostMatrices, Decision, HoMode, NetworkConfig};
use crate::objective::{self, RateTensor};
use crate::scenario::{self, Generated, ScenarioConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Handover-type assignment a CONTRA policy runs under.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    /// Whatever the network config says.
    #[default]
    Network,
    Dynamic,
    AllTho,
    AllCho,
    /// The first `tho_users` users in THO mode, the rest in CHO mode.
    Split { tho_users: usize },
}

impl ModeSpec {
    pub fn apply(&self, network: &NetworkConfig) -> Result<NetworkConfig> {
        let n = network.num_users;
        let mode = match self {
            ModeSpec::Network => return Ok(network.clone()),
            ModeSpec::Dynamic => HoMode::Dynamic,
            ModeSpec::AllTho => HoMode::split(n, n),
            ModeSpec::AllCho => HoMode::split(n, 0),
            ModeSpec::Split { tho_users } => {
                if *tho_users > n {
                    return Err(Error::Config(format!("mode.split.tho_users = {tho_users} exceeds {n} users")));
                }
                HoMode::split(n, *tho_users)
            }
        };
        network.clone().with_mode(mode)
    }

    fn tag(&self) -> String {
        match self {
            ModeSpec::Network => String::new(),
            ModeSpec::Dynamic => "-dynamic".into(),
            ModeSpec::AllTho => "-all-tho".into(),
            ModeSpec::AllCho => "-all-cho".into(),
            ModeSpec::Split { tho_users } => format!("-split{tho_users}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContraSpec {
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default)]
    pub ablate_switching_costs: bool,
    #[serde(default)]
    pub switching_loss: SwitchingLoss,
    #[serde(default)]
    pub gradient_clip: GradientClip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Contra(ContraSpec),
    Tho { ttt: usize },
    Cho { cl: usize, ttt: usize },
    /// Per-slot convex oracle, implemented with deterministic rounding.
    PerSlotOracle,
    /// Full-horizon dynamic program; tiny instances only.
    ExactOracle,
}

impl PolicySpec {
    pub fn label(&self) -> String {
        match self {
            PolicySpec::Contra(c) => {
                let mut s = format!("contra{}", c.mode.tag());
                if c.ablate_switching_costs {
                    s.push_str("-no-switching");
                }
                if c.switching_loss == SwitchingLoss::PerExpert {
                    s.push_str("-per-expert");
                }
                match c.gradient_clip {
                    GradientClip::Bound => {}
                    GradientClip::Off => s.push_str("-unclipped"),
                    GradientClip::Value(v) => s.push_str(&format!("-clip{v}")),
                }
                s
            }
            PolicySpec::Tho { ttt } => ThresholdKind::Tho { ttt: *ttt }.label(),
            PolicySpec::Cho { cl, ttt } => ThresholdKind::Cho { cl: *cl, ttt: *ttt }.label(),
            PolicySpec::PerSlotOracle => "per-slot-oracle".into(),
            PolicySpec::ExactOracle => "exact-oracle".into(),
        }
    }

    fn network(&self, base: &NetworkConfig) -> Result<NetworkConfig> {
        match self {
            PolicySpec::Contra(c) => c.mode.apply(base),
            _ => Ok(base.clone()),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub network: NetworkConfig,
    pub scenario: ScenarioConfig,
    pub policies: Vec<PolicySpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Parses and validates a config; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file, resolving relative trace paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.scenario.resolve_paths(dir);
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("policies: at least one policy is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds: at least one seed is required".into()));
        }
        self.scenario.validate()?;
        for (k, p) in self.policies.iter().enumerate() {
            let net = p
                .network(&self.network)
                .map_err(|e| Error::Config(format!("policies[{k}]: {e}")))?;
            match p {
                PolicySpec::Tho { ttt } => ThresholdPolicy::new(ThresholdKind::Tho { ttt: *ttt }, &net).map(|_| ()),
                PolicySpec::Cho { cl, ttt } => {
                    ThresholdPolicy::new(ThresholdKind::Cho { cl: *cl, ttt: *ttt }, &net).map(|_| ())
                }
                PolicySpec::Contra(c) => match c.gradient_clip {
                    GradientClip::Value(v) if !(v > 0.0) => Err(Error::Config("gradient_clip must be positive".into())),
                    _ => Ok(()),
                },
                _ => Ok(()),
            }
            .map_err(|e| Error::Config(format!("policies[{k}]: {e}")))?;
        }
        Ok(())
    }

    pub fn check_files(&self) -> Result<()> {
        if let scenario::ScenarioKind::GaussMarkovTrace { trace, .. } = &self.scenario.kind {
            if !trace.is_file() {
                return Err(Error::Config(format!("scenario.kind.trace: {} does not exist", trace.display())));
            }
        }
        Ok(())
    }
}

/// Hex SHA-256 of the canonical JSON of network, scenario and seed.
pub fn scenario_hash(network: &NetworkConfig, scenario: &ScenarioConfig, seed: u64) -> String {
    #[derive(Serialize)]
    struct Key<'a> {
        network: &'a NetworkConfig,
        scenario: &'a ScenarioConfig,
        seed: u64,
    }
    let json = serde_json::to_string(&Key { network, scenario, seed }).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// A generated scenario for one seed, with per-mode benchmark caches.
#[derive(Debug)]
pub struct Instance {
    pub network: NetworkConfig,
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub generated: Generated,
    pub rates: RateTensor,
    pub hash: String,
    pub oracle: OracleOptions,
    benchmarks: BTreeMap<String, Benchmark>,
}

/// Per-slot oracle trajectory used as the regret reference.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub decisions: Vec<Decision>,
    pub objectives: Vec<f64>,
    pub path_length: f64,
}

impl Instance {
    pub fn new(network: &NetworkConfig, scenario: &ScenarioConfig, seed: u64) -> Result<Self> {
        let generated = scenario::generate(scenario, network, seed)?;
        let rates = objective::compute_rates(&generated.sinr, network)?;
        Ok(Self {
            network: network.clone(),
            scenario: scenario.clone(),
            seed,
            generated,
            rates,
            hash: scenario_hash(network, scenario, seed),
            oracle: OracleOptions::default(),
            benchmarks: BTreeMap::new(),
        })
    }

    pub fn costs(&self) -> &CostMatrices {
        &self.generated.costs
    }

    /// The per-slot oracle trajectory for `network`'s feasible set, computed once.
    pub fn benchmark(&mut self, network: &NetworkConfig) -> Result<&Benchmark> {
        let key = serde_json::to_string(&network.ho_mode)?;
        if !self.benchmarks.contains_key(&key) {
            let steps = baselines::oracle_trajectory(&self.rates, &self.generated.costs, network, &self.oracle)?;
            let anchor = feasible::zero_anchor(network)?;
            let decisions: Vec<Decision> = steps.into_iter().map(|s| s.decision).collect();
            let objectives = metrics::slot_objectives(&decisions, &anchor, &self.rates, &self.generated.costs, network)?;
            let path_length = metrics::path_length(&decisions, &anchor, &self.generated.costs)?;
            self.benchmarks.insert(key.clone(), Benchmark { decisions, objectives, path_length });
        }
        Ok(&self.benchmarks[&key])
    }
}

/// Knobs of a single policy run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record per-slot learner internals.
    pub dump_learner: bool,
    /// Keep both trajectories in the result.
    pub keep_trajectories: bool,
    /// Skip the benchmark and leave the regret columns at zero.
    pub skip_regret: bool,
}

/// Learner internals for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerRow {
    pub slot: usize,
    pub weights: Vec<f64>,
    pub losses: Vec<f64>,
    pub expert_utilities: Vec<f64>,
    pub decision: Decision,
}

#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub label: String,
    pub seed: u64,
    pub hash: String,
    pub network: NetworkConfig,
    pub ledger: RunLedger,
    /// Cumulative surrogate utility of each expert's own decisions (CONTRA only).
    pub expert_utility: Vec<f64>,
    pub thetas: Vec<f64>,
    pub final_weights: Vec<f64>,
    pub learner_rows: Vec<LearnerRow>,
    pub continuous: Vec<Decision>,
    pub implemented: Vec<Decision>,
    pub path_length: f64,
    /// Wall-clock of each slot's decide-and-update work, milliseconds.
    pub slot_ms: Vec<f64>,
}

impl PolicyRun {
    pub fn summary(&self) -> Summary {
        let n = self.slot_ms.len().max(1) as f64;
        Summary {
            schema_version: SCHEMA_VERSION,
            policy: self.label.clone(),
            seed: self.seed,
            scenario_hash: self.hash.clone(),
            horizon: self.ledger.len(),
            totals: self.ledger.totals(),
            path_length: self.path_length,
            timing: Timing {
                mean_slot_ms: self.slot_ms.iter().sum::<f64>() / n,
                max_slot_ms: self.slot_ms.iter().copied().fold(0.0, f64::max),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean_slot_ms: f64,
    pub max_slot_ms: f64,
}

/// The per-run summary JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub policy: String,
    pub seed: u64,
    pub scenario_hash: String,
    pub horizon: usize,
    pub totals: Totals,
    pub path_length: f64,
    pub timing: Timing,
}

struct SlotInput<'a> {
    continuous: &'a Decision,
    implemented: &'a Decision,
    repairs: RepairCounts,
}

/// Shared per-slot accounting for every policy.
struct Recorder<'a> {
    network: &'a NetworkConfig,
    rates: &'a RateTensor,
    costs: &'a CostMatrices,
    ledger: RunLedger,
    prev_cont: Decision,
    prev_impl: Decision,
    first: bool,
    keep: bool,
    continuous: Vec<Decision>,
    implemented: Vec<Decision>,
}

impl<'a> Recorder<'a> {
    fn new(network: &'a NetworkConfig, rates: &'a RateTensor, costs: &'a CostMatrices, keep: bool) -> Result<Self> {
        let anchor = feasible::zero_anchor(network)?;
        Ok(Self {
            network,
            rates,
            costs,
            ledger: RunLedger::default(),
            prev_cont: anchor.clone(),
            prev_impl: anchor,
            first: true,
            keep,
            continuous: Vec::new(),
            implemented: Vec::new(),
        })
    }

    fn record(&mut self, t: usize, input: SlotInput<'_>) -> Result<()> {
        let (net, rates, costs) = (self.network, self.rates, self.costs);
        let z = input.implemented;
        let report = feasible::validate(z, net);
        if !report.is_ok() {
            return Err(Error::Feasibility(format!("slot {t}: implemented decision infeasible: {report}")));
        }
        let (assoc, prep) = if self.first { (0, 0) } else { metrics::switches_between(&self.prev_impl, z) };
        let mut r = SlotRecord {
            slot: t,
            surrogate_utility: objective::surrogate_utility(z, rates, t, net, net.alpha)?,
            exact_utility: objective::exact_utility(z, rates, t, net)?,
            switching_cost: model::switching_cost(z, &self.prev_impl, costs, t)?,
            continuous_utility: objective::surrogate_utility(input.continuous, rates, t, net, net.alpha)?,
            continuous_switching_cost: model::switching_cost(input.continuous, &self.prev_cont, costs, t)?,
            association_changes: assoc,
            preparation_changes: prep,
            ..Default::default()
        };
        r.set_repairs(&input.repairs);
        self.ledger.push(r);
        self.prev_cont = input.continuous.clone();
        self.prev_impl = z.clone();
        self.first = false;
        if self.keep {
            self.continuous.push(input.continuous.clone());
            self.implemented.push(z.clone());
        }
        Ok(())
    }
}

fn contra_bounds(instance: &Instance, network: &NetworkConfig) -> Result<learner::Bounds> {
    let costs = instance.costs();
    learner::compute_bounds(network, costs.a_max, costs.b_max, instance.generated.c_max)
}

/// Runs one policy over the instance's horizon.
pub fn run_policy(instance: &mut Instance, spec: &PolicySpec, options: RunOptions) -> Result<PolicyRun> {
    let network = spec.network(&instance.network)?;
    let horizon = network.horizon.min(instance.rates.slots());
    let mut run = PolicyRun {
        label: spec.label(),
        seed: instance.seed,
        hash: instance.hash.clone(),
        network: network.clone(),
        ledger: RunLedger::default(),
        expert_utility: Vec::new(),
        thetas: Vec::new(),
        final_weights: Vec::new(),
        learner_rows: Vec::new(),
        continuous: Vec::new(),
        implemented: Vec::new(),
        path_length: 0.0,
        slot_ms: Vec::with_capacity(horizon),
    };
    let slot_err = |t: usize, e: Error| match e {
        Error::Solver { .. } | Error::Feasibility(_) => Error::Feasibility(format!("slot {t}: {e}")),
        other => other,
    };
    let (rates, costs) = (&instance.rates, &instance.generated.costs);
    let mut rec = Recorder::new(&network, rates, costs, options.keep_trajectories)?;
    match spec {
        PolicySpec::Contra(c) => {
            let bounds = contra_bounds(instance, &network)?;
            let opts = LearnerOptions {
                switching_loss: c.switching_loss,
                ablate_switching: c.ablate_switching_costs,
                gradient_clip: c.gradient_clip,
                ..LearnerOptions::default()
            };
            let mut state = LearnerState::init(&network, bounds, network.horizon, opts)?;
            let mut rng = scenario::seeded_rng(instance.seed, scenario::STREAM_POLICY);
            let mut prev = feasible::zero_anchor(&network)?;
            run.thetas = state.thetas();
            run.expert_utility = vec![0.0; state.num_experts()];
            for t in 0..horizon {
                let start = Instant::now();
                let proposal = state.propose(&mut rng).map_err(|e| slot_err(t, e))?;
                let z = &proposal.rounded.decision;
                let grad = objective::surrogate_gradient(z, rates, t, &network, network.alpha)?;
                let mut expert_u = Vec::with_capacity(state.num_experts());
                for e in state.experts() {
                    expert_u.push(objective::surrogate_utility(&e.decision, rates, t, &network, network.alpha)?);
                }
                state.observe(&grad, z, &prev, costs, t).map_err(|e| slot_err(t, e))?;
                run.slot_ms.push(start.elapsed().as_secs_f64() * 1e3);
                for (acc, u) in run.expert_utility.iter_mut().zip(&expert_u) {
                    *acc += u;
                }
                if options.dump_learner {
                    run.learner_rows.push(LearnerRow {
                        slot: t,
                        weights: state.last_record().weights.clone(),
                        losses: state.last_record().losses.clone(),
                        expert_utilities: expert_u,
                        decision: z.clone(),
                    });
                }
                rec.record(t, SlotInput { continuous: &proposal.meta, implemented: z, repairs: proposal.rounded.repairs })?;
                prev = z.clone();
            }
            run.final_weights = state.weights().to_vec();
        }
        PolicySpec::Tho { .. } | PolicySpec::Cho { .. } => {
            let kind = match *spec {
                PolicySpec::Tho { ttt } => ThresholdKind::Tho { ttt },
                PolicySpec::Cho { cl, ttt } => ThresholdKind::Cho { cl, ttt },
                _ => unreachable!(),
            };
            let mut policy = ThresholdPolicy::new(kind, &network)?;
            let sinr = &instance.generated.sinr;
            for t in 0..horizon {
                let start = Instant::now();
                let z = if t == 0 { policy.bootstrap(sinr.slot(0))? } else { policy.step(sinr.slot(t - 1))? };
                run.slot_ms.push(start.elapsed().as_secs_f64() * 1e3);
                rec.record(t, SlotInput { continuous: &z, implemented: &z, repairs: RepairCounts::default() })?;
            }
        }
        PolicySpec::PerSlotOracle => {
            let mut prev = feasible::zero_anchor(&network)?;
            for t in 0..horizon {
                let start = Instant::now();
                let step = baselines::oracle_per_slot(rates, costs, t, &prev, &prev, &network, &instance.oracle)
                    .map_err(|e| slot_err(t, e))?;
                let z = feasible::round_greedy(&step.decision, &network).map_err(|e| slot_err(t, e))?;
                run.slot_ms.push(start.elapsed().as_secs_f64() * 1e3);
                rec.record(t, SlotInput { continuous: &step.decision, implemented: &z, repairs: RepairCounts::default() })?;
                prev = step.decision;
            }
        }
        PolicySpec::ExactOracle => {
            let start = Instant::now();
            let (path, _) = baselines::dp_exact_oracle(rates, costs, &network, horizon)?;
            let per = start.elapsed().as_secs_f64() * 1e3 / horizon as f64;
            for (t, z) in path.iter().enumerate() {
                run.slot_ms.push(per);
                rec.record(t, SlotInput { continuous: z, implemented: z, repairs: RepairCounts::default() })?;
            }
        }
    }
    run.ledger = rec.ledger;
    run.continuous = rec.continuous;
    run.implemented = rec.implemented;
    if !options.skip_regret {
        let bench = instance.benchmark(&network)?;
        run.ledger.fill_regret(&bench.objectives[..horizon])?;
        run.path_length = bench.path_length;
    }
    Ok(run)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// File stem shared by a run's artifacts.
pub fn artifact_stem(run: &PolicyRun) -> String {
    format!("{}_seed{}", run.label, run.seed)
}

/// Learner dump CSV: weights, losses and expert utilities per expert, then the implemented decision.
pub fn learner_csv(run: &PolicyRun) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let k = run.thetas.len();
    let (users, cells) = (run.network.num_users, run.network.num_cells);
    let mut header = vec!["slot".to_string()];
    header.extend((0..k).map(|e| format!("weight_{e}")));
    header.extend((0..k).map(|e| format!("loss_{e}")));
    header.extend((0..k).map(|e| format!("utility_{e}")));
    for p in ["x", "y"] {
        for i in 0..users {
            header.extend((0..cells).map(|j| format!("{p}_{i}_{j}")));
        }
    }
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(&header).map_err(io)?;
    for r in &run.learner_rows {
        let mut row = vec![r.slot.to_string()];
        row.extend(r.weights.iter().chain(&r.losses).chain(&r.expert_utilities).map(|v| v.to_string()));
        row.extend(r.decision.x.iter().chain(&r.decision.y).map(|v| v.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// Writes the ledger CSV, summary JSON and optional learner dump of a run.
pub fn write_artifacts(run: &PolicyRun, dir: &Path) -> Result<Vec<PathBuf>> {
    let stem = artifact_stem(run);
    let mut out = Vec::new();
    let mut csv_bytes = Vec::new();
    run.ledger.write_csv(&mut csv_bytes)?;
    let p = dir.join(format!("{stem}.csv"));
    write_atomic(&p, &csv_bytes)?;
    out.push(p);
    let mut json = serde_json::to_vec_pretty(&run.summary())?;
    json.push(b'\n');
    let p = dir.join(format!("{stem}.summary.json"));
    write_atomic(&p, &json)?;
    out.push(p);
    if !run.learner_rows.is_empty() {
        let p = dir.join(format!("{stem}.learner.csv"));
        write_atomic(&p, &learner_csv(run)?)?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{CostKind, ScenarioKind};

    fn tiny() -> RunConfig {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            network: NetworkConfig::uniform(3, 2, 12, HoMode::Dynamic, 2, 3).unwrap(),
            scenario: ScenarioConfig {
                kind: ScenarioKind::Volatile { period: 4, range_db: [0.0, 30.0] },
                costs: CostKind::Uniform { a: 0.5, b: 0.1 },
            },
            policies: vec![
                PolicySpec::Contra(ContraSpec::default()),
                PolicySpec::Cho { cl: 1, ttt: 2 },
                PolicySpec::Tho { ttt: 1 },
                PolicySpec::PerSlotOracle,
            ],
            seeds: vec![1],
            output: None,
        }
    }

    #[test]
    fn config_round_trip_and_unknown_keys() {
        let cfg = tiny();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["policies"][0] = serde_json::json!({"contrax": {}});
        let err = RunConfig::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("policies[0]") && err.contains("contrax"), "{err}");
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["network"]["extra"] = serde_json::json!(1);
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn every_policy_runs_feasibly() {
        let cfg = tiny();
        let mut inst = Instance::new(&cfg.network, &cfg.scenario, 1).unwrap();
        for p in &cfg.policies {
            let run = run_policy(&mut inst, p, RunOptions::default()).unwrap();
            assert_eq!(run.ledger.len(), 12);
        }
    }

    #[test]
    fn hash_depends_on_seed() {
        let cfg = tiny();
        let a = scenario_hash(&cfg.network, &cfg.scenario, 1);
        assert_eq!(a.len(), 64);
        assert_eq!(a, scenario_hash(&cfg.network, &cfg.scenario, 1));
        assert_ne!(a, scenario_hash(&cfg.network, &cfg.scenario, 2));
    }

    #[test]
    fn mode_overrides() {
        let net = NetworkConfig::uniform(4, 2, 5, HoMode::Dynamic, 2, 4).unwrap();
        assert_eq!(ModeSpec::AllTho.apply(&net).unwrap().num_tho(), 4);
        assert_eq!(ModeSpec::AllCho.apply(&net).unwrap().num_cho(), 4);
        assert_eq!(ModeSpec::Split { tho_users: 1 }.apply(&net).unwrap().num_tho(), 1);
        assert!(ModeSpec::Split { tho_users: 5 }.apply(&net).is_err());
    }
}
