//! The meta-learning controller: a pool of projected online-gradient-ascent
//! experts with doubling step sizes, mixed by a Hedge meta-learner.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::{self, FeasibleSetSpec, Rounded};
use crate::model::{self, CostMatrices, Decision, NetworkConfig};

/// Domain and gradient bounds of the relaxed problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub d: f64,
    pub d_c: f64,
    pub d_c_star: f64,
    pub g: f64,
    pub g_c: f64,
    pub m: f64,
    pub num_tho: usize,
    pub num_cho: usize,
    pub cells: usize,
    pub a_max: f64,
    pub b_max: f64,
    pub c_max: f64,
}

/// Bounds for `config`. In dynamic mode every user may take either type, so
/// both user counts are `I`.
pub fn compute_bounds(config: &NetworkConfig, a_max: f64, b_max: f64, c_max: f64) -> Result<Bounds> {
    if !(a_max > 0.0 && b_max > 0.0 && c_max > 0.0) {
        return Err(Error::Domain(format!(
            "bounds need positive a_max, b_max, c_max (got {a_max}, {b_max}, {c_max})"
        )));
    }
    let users = config.num_users as f64;
    let (n_tho, n_cho) = if config.is_dynamic() {
        (config.num_users, config.num_users)
    } else {
        (config.num_tho(), config.num_cho())
    };
    let (it, ic, j) = (n_tho as f64, n_cho as f64, config.num_cells as f64);
    let m = (c_max.ln() - 1.0).max(users.ln() + 1.0);
    Ok(Bounds {
        d: (2.0 * it).sqrt() + (ic * (j - 1.0)).sqrt(),
        d_c: (2.0 * it * a_max).sqrt() + (ic * (j - 1.0) * b_max).sqrt(),
        d_c_star: (2.0 * it / a_max).sqrt() + (ic * (j - 1.0) / b_max).sqrt(),
        g: m * (users * j).sqrt(),
        g_c: m * ((it * a_max + ic * b_max) * j).sqrt(),
        m,
        num_tho: n_tho,
        num_cho: n_cho,
        cells: config.num_cells,
        a_max,
        b_max,
        c_max,
    })
}

/// Number of experts for horizon `t`: `⌈log₂ √(1 + 2T)⌉ + 1`.
pub fn num_experts(horizon: usize) -> usize {
    let v = (1.0 + 2.0 * horizon as f64).sqrt().log2();
    // guard against log2 of an exact power landing a hair above the integer
    let r = v.round();
    let c = if (v - r).abs() < 1e-12 { r } else { v.ceil() };
    c as usize + 1
}

/// Step sizes, meta step and initial weights derived from [`Bounds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub thetas: Vec<f64>,
    pub eta: f64,
    pub nu: f64,
    pub initial_weights: Vec<f64>,
}

impl Parameters {
    pub fn new(bounds: &Bounds, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least one slot".into()));
        }
        let t = horizon as f64;
        let k = num_experts(horizon);
        let base = (bounds.d_c * bounds.d_c / (t * (bounds.g * bounds.g + 2.0 * bounds.g_c))).sqrt();
        let mut thetas = Vec::with_capacity(k);
        let mut theta = base;
        for _ in 0..k {
            thetas.push(theta);
            theta *= 2.0;
        }
        let nu = (bounds.d_c + 0.125) * (bounds.g * bounds.d + 2.0 * bounds.d_c).powi(2);
        let eta = 1.0 / (t * nu).sqrt();
        Ok(Self { thetas, eta, nu, initial_weights: initial_weights(k) })
    }
}

/// Prior `w_k = (1 + 1/K) / (k (k + 1))`, summing to one.
pub fn initial_weights(k: usize) -> Vec<f64> {
    let kf = k as f64;
    let mut w: Vec<f64> = (1..=k).map(|i| (1.0 + 1.0 / kf) / (i as f64 * (i as f64 + 1.0))).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Which switching distance enters the meta-learner's per-expert loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchingLoss {
    /// The implemented trajectory's switch `‖z_t - z_{t-1}‖`, shared by all experts.
    #[default]
    Implemented,
    /// Each expert's own movement `‖z^k_t - z^k_{t-1}‖`.
    PerExpert,
}

/// Componentwise clipping of the gradient fed to the learner.
///
/// At a binary decision the LogSumExp partial of an unprepared better cell is
/// `(c_j / c_p)^α / α`, far above the per-component bound `M` the step sizes
/// are derived from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientClip {
    /// Clip to `±M` from [`Bounds`].
    #[default]
    Bound,
    Off,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerOptions {
    #[serde(default)]
    pub switching_loss: SwitchingLoss,
    /// Drop the switching term from the loss entirely.
    #[serde(default)]
    pub ablate_switching: bool,
    #[serde(default)]
    pub gradient_clip: GradientClip,
    #[serde(default)]
    pub projection: FeasibleSetSpec,
}

impl Default for LearnerOptions {
    fn default() -> Self {
        Self {
            switching_loss: SwitchingLoss::default(),
            ablate_switching: false,
            gradient_clip: GradientClip::Bound,
            projection: FeasibleSetSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expert {
    pub theta: f64,
    pub decision: Decision,
    prev: Decision,
}

/// A proposal for one slot.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub meta: Decision,
    pub rounded: Rounded,
}

/// What the meta-learner saw during the last [`LearnerState::observe`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObserveRecord {
    pub slot: usize,
    pub losses: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LearnerState {
    config: NetworkConfig,
    experts: Vec<Expert>,
    weights: Vec<f64>,
    pub eta: f64,
    pub nu: f64,
    pub bounds: Bounds,
    pub options: LearnerOptions,
    slot: usize,
    last: ObserveRecord,
}

impl LearnerState {
    /// `K` experts at the projected zero anchor with doubling step sizes.
    pub fn init(config: &NetworkConfig, bounds: Bounds, horizon: usize, options: LearnerOptions) -> Result<Self> {
        let params = Parameters::new(&bounds, horizon)?;
        Self::with_parameters(config, bounds, params, options)
    }

    pub fn with_parameters(
        config: &NetworkConfig,
        bounds: Bounds,
        params: Parameters,
        options: LearnerOptions,
    ) -> Result<Self> {
        if params.thetas.is_empty() || params.thetas.len() != params.initial_weights.len() {
            return Err(Error::Config("need one weight per expert and at least one expert".into()));
        }
        if let GradientClip::Value(c) = options.gradient_clip {
            if !(c > 0.0) {
                return Err(Error::Config(format!("gradient clip must be positive, got {c}")));
            }
        }
        let anchor = feasible::zero_anchor(config)?;
        let experts = params
            .thetas
            .iter()
            .map(|&theta| Expert { theta, decision: anchor.clone(), prev: anchor.clone() })
            .collect();
        Ok(Self {
            config: config.clone(),
            experts,
            weights: params.initial_weights,
            eta: params.eta,
            nu: params.nu,
            bounds,
            options,
            slot: 0,
            last: ObserveRecord::default(),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn num_experts(&self) -> usize {
        self.experts.len()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.experts.iter().map(|e| e.theta).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn last_record(&self) -> &ObserveRecord {
        &self.last
    }

    /// Overwrite the expert decisions (used by tests and warm starts).
    pub fn set_expert_decisions(&mut self, decisions: Vec<Decision>) -> Result<()> {
        if decisions.len() != self.experts.len() {
            return Err(Error::Config(format!(
                "{} decisions for {} experts",
                decisions.len(),
                self.experts.len()
            )));
        }
        for (e, d) in self.experts.iter_mut().zip(decisions) {
            d.check_config(&self.config)?;
            e.prev = d.clone();
            e.decision = d;
        }
        Ok(())
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.experts.len() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("weights must be nonnegative, one per expert".into()));
        }
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Domain("weights must not all be zero".into()));
        }
        self.weights = weights.into_iter().map(|w| w / s).collect();
        Ok(())
    }

    /// Weight-convex combination of the expert decisions.
    pub fn meta_decision(&self) -> Result<Decision> {
        let ds: Vec<Decision> = self.experts.iter().map(|e| e.decision.clone()).collect();
        Decision::mix(&self.weights, &ds)
    }

    /// Mix the experts and round the mix to an implementable decision.
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Proposal> {
        let meta = self.meta_decision()?;
        let rounded = feasible::round(&meta, &self.config, rng)?;
        Ok(Proposal { meta, rounded })
    }

    /// Per-expert surrogate losses for one slot.
    pub fn losses(
        &self,
        grad: &Decision,
        z_impl: &Decision,
        z_prev: &Decision,
        costs: &CostMatrices,
        slot: usize,
    ) -> Result<Vec<f64>> {
        let shared = if self.options.ablate_switching {
            0.0
        } else {
            match self.options.switching_loss {
                SwitchingLoss::Implemented => model::switching_cost(z_impl, z_prev, costs, slot)?,
                SwitchingLoss::PerExpert => 0.0,
            }
        };
        let base = grad.dot(z_impl)?;
        self.experts
            .iter()
            .map(|e| {
                let lin = -(grad.dot(&e.decision)? - base);
                let own = if !self.options.ablate_switching && self.options.switching_loss == SwitchingLoss::PerExpert {
                    model::switching_cost(&e.decision, &e.prev, costs, slot)?
                } else {
                    0.0
                };
                Ok(lin + shared + own)
            })
            .collect()
    }

    /// Hedge update of the weights, then a projected gradient step for every expert.
    pub fn observe(
        &mut self,
        grad: &Decision,
        z_impl: &Decision,
        z_prev: &Decision,
        costs: &CostMatrices,
        slot: usize,
    ) -> Result<()> {
        grad.check_config(&self.config)?;
        let grad = match self.options.gradient_clip {
            GradientClip::Bound => clip(grad, self.bounds.m),
            GradientClip::Value(c) => clip(grad, c),
            GradientClip::Off => grad.clone(),
        };
        let losses = self.losses(&grad, z_impl, z_prev, costs, slot)?;
        self.weights = hedge_update(&self.weights, &losses, self.eta);
        for e in &mut self.experts {
            let mut step = e.decision.clone();
            step.axpy(e.theta, &grad)?;
            let next = feasible::project_with(&step, &self.config, &self.options.projection)?;
            e.prev = std::mem::replace(&mut e.decision, next);
        }
        self.slot += 1;
        self.last = ObserveRecord { slot, losses, weights: self.weights.clone() };
        Ok(())
    }
}

fn clip(grad: &Decision, c: f64) -> Decision {
    let mut g = grad.clone();
    for v in g.x.iter_mut().chain(g.y.iter_mut()) {
        *v = v.clamp(-c, c);
    }
    g
}

/// One multiplicative-weights step, shifting losses by their minimum first.
pub fn hedge_update(weights: &[f64], losses: &[f64], eta: f64) -> Vec<f64> {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = weights
        .iter()
        .zip(losses)
        .map(|(w, l)| w * (-eta * (l - min)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    if s > 0.0 && s.is_finite() {
        w.iter_mut().for_each(|v| *v /= s);
    } else {
        // every weight underflowed: fall back to the best experts
        let best: Vec<usize> = (0..losses.len()).filter(|&k| losses[k] == min).collect();
        w = vec![0.0; losses.len()];
        for &k in &best {
            w[k] = 1.0 / best.len() as f64;
        }
    }
    w
}
