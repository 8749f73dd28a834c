//! Static network description, decision vectors and the weighted
//! switching-cost geometry shared by the rest of the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible switching-cost weight.
pub const MIN_WEIGHT: f64 = 1e-9;

/// Handover type of a single user under a static partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoRole {
    Tho,
    Cho,
}

/// How users are mapped to handover types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum HoMode {
    /// Users are assigned a priori to THO or CHO; the two sets partition the users.
    Static { tho: Vec<usize>, cho: Vec<usize> },
    /// The controller picks the handover type of every user in every slot.
    Dynamic,
}

impl HoMode {
    pub fn is_dynamic(&self) -> bool {
        matches!(self, HoMode::Dynamic)
    }

    /// Static partition with the first `num_tho` users in THO mode and the rest in CHO mode.
    pub fn split(num_users: usize, num_tho: usize) -> Self {
        let num_tho = num_tho.min(num_users);
        HoMode::Static {
            tho: (0..num_tho).collect(),
            cho: (num_tho..num_users).collect(),
        }
    }
}

/// Per-user or per-cell parameter given either as one shared value or a full list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerItem<T> {
    Uniform(T),
    List(Vec<T>),
}

impl<T: Clone> PerItem<T> {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<T>> {
        match self {
            PerItem::Uniform(v) => Ok(vec![v.clone(); n]),
            PerItem::List(v) if v.len() == n => Ok(v.clone()),
            PerItem::List(v) => Err(Error::Config(format!(
                "{what}: expected {n} entries, got {}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetworkConfig {
    num_users: usize,
    num_cells: usize,
    horizon: usize,
    ho_mode: HoMode,
    max_preparations: PerItem<usize>,
    capacity: PerItem<usize>,
    #[serde(default = "default_bandwidth")]
    bandwidth: PerItem<f64>,
    #[serde(default = "default_alpha")]
    alpha: f64,
}

fn default_bandwidth() -> PerItem<f64> {
    PerItem::Uniform(1.0)
}

fn default_alpha() -> f64 {
    crate::objective::DEFAULT_ALPHA
}

/// The static world: users, cells, horizon and per-entity limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetworkConfig", into = "RawNetworkConfig")]
pub struct NetworkConfig {
    pub num_users: usize,
    pub num_cells: usize,
    pub horizon: usize,
    pub ho_mode: HoMode,
    /// Maximum number of prepared cells per user (`b_i`).
    pub max_preparations: Vec<usize>,
    /// Per-cell capacity (`C_j`).
    pub capacity: Vec<usize>,
    /// Per-cell bandwidth (`W_j`).
    pub bandwidth: Vec<f64>,
    /// LogSumExp sharpness of the surrogate.
    pub alpha: f64,
    roles: Vec<Option<HoRole>>,
}

impl TryFrom<RawNetworkConfig> for NetworkConfig {
    type Error = Error;

    fn try_from(raw: RawNetworkConfig) -> Result<Self> {
        let max_preparations = raw.max_preparations.expand(raw.num_users, "max_preparations")?;
        let capacity = raw.capacity.expand(raw.num_cells, "capacity")?;
        let bandwidth = raw.bandwidth.expand(raw.num_cells, "bandwidth")?;
        NetworkConfig::new(
            raw.num_users,
            raw.num_cells,
            raw.horizon,
            raw.ho_mode,
            max_preparations,
            capacity,
            bandwidth,
            raw.alpha,
        )
    }
}

impl From<NetworkConfig> for RawNetworkConfig {
    fn from(c: NetworkConfig) -> Self {
        RawNetworkConfig {
            num_users: c.num_users,
            num_cells: c.num_cells,
            horizon: c.horizon,
            ho_mode: c.ho_mode,
            max_preparations: PerItem::List(c.max_preparations),
            capacity: PerItem::List(c.capacity),
            bandwidth: PerItem::List(c.bandwidth),
            alpha: c.alpha,
        }
    }
}

impl NetworkConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_users: usize,
        num_cells: usize,
        horizon: usize,
        ho_mode: HoMode,
        max_preparations: Vec<usize>,
        capacity: Vec<usize>,
        bandwidth: Vec<f64>,
        alpha: f64,
    ) -> Result<Self> {
        if num_users == 0 || num_cells == 0 {
            return Err(Error::Config("need at least one user and one cell".into()));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        if max_preparations.len() != num_users {
            return Err(Error::Config("max_preparations length must equal num_users".into()));
        }
        if capacity.len() != num_cells || bandwidth.len() != num_cells {
            return Err(Error::Config("capacity and bandwidth need one entry per cell".into()));
        }
        if let Some(i) = max_preparations.iter().position(|&b| b == 0 || b > num_cells) {
            return Err(Error::Config(format!(
                "max_preparations[{i}] = {} outside [1, {num_cells}]",
                max_preparations[i]
            )));
        }
        if let Some(j) = capacity.iter().position(|&c| c == 0) {
            return Err(Error::Config(format!("capacity[{j}] must be at least 1")));
        }
        if let Some(j) = bandwidth.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("bandwidth[{j}] must be positive")));
        }
        if capacity.iter().sum::<usize>() < num_users {
            return Err(Error::Config(
                "total capacity is below the number of users; no feasible decision exists".into(),
            ));
        }
        let roles = match &ho_mode {
            HoMode::Dynamic => vec![None; num_users],
            HoMode::Static { tho, cho } => {
                let mut roles = vec![None; num_users];
                for (set, role) in [(tho, HoRole::Tho), (cho, HoRole::Cho)] {
                    for &i in set {
                        if i >= num_users {
                            return Err(Error::Config(format!("user index {i} out of range")));
                        }
                        if roles[i].is_some() {
                            return Err(Error::Config(format!(
                                "user {i} appears twice in the static partition"
                            )));
                        }
                        roles[i] = Some(role);
                    }
                }
                if let Some(i) = roles.iter().position(Option::is_none) {
                    return Err(Error::Config(format!(
                        "user {i} is in neither the THO nor the CHO set"
                    )));
                }
                roles
            }
        };
        Ok(Self {
            num_users,
            num_cells,
            horizon,
            ho_mode,
            max_preparations,
            capacity,
            bandwidth,
            alpha,
            roles,
        })
    }

    /// Configuration with shared per-user and per-cell limits.
    pub fn uniform(
        num_users: usize,
        num_cells: usize,
        horizon: usize,
        ho_mode: HoMode,
        max_preparations: usize,
        capacity: usize,
    ) -> Result<Self> {
        Self::new(
            num_users,
            num_cells,
            horizon,
            ho_mode,
            vec![max_preparations; num_users],
            vec![capacity; num_cells],
            vec![1.0; num_cells],
            crate::objective::DEFAULT_ALPHA,
        )
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn with_bandwidth(mut self, bandwidth: Vec<f64>) -> Result<Self> {
        if bandwidth.len() != self.num_cells || bandwidth.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("bandwidth needs one positive entry per cell".into()));
        }
        self.bandwidth = bandwidth;
        Ok(self)
    }

    pub fn with_mode(self, ho_mode: HoMode) -> Result<Self> {
        Self::new(
            self.num_users,
            self.num_cells,
            self.horizon,
            ho_mode,
            self.max_preparations,
            self.capacity,
            self.bandwidth,
            self.alpha,
        )
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    /// Role of user `i`; `None` in dynamic mode.
    pub fn role(&self, i: usize) -> Option<HoRole> {
        self.roles[i]
    }

    pub fn is_dynamic(&self) -> bool {
        self.ho_mode.is_dynamic()
    }

    /// Whether the x-entries of user `i` can be nonzero.
    pub fn x_enabled(&self, i: usize) -> bool {
        self.roles[i] != Some(HoRole::Cho)
    }

    /// Whether the y-entries of user `i` can be nonzero.
    pub fn y_enabled(&self, i: usize) -> bool {
        self.roles[i] != Some(HoRole::Tho)
    }

    /// Number of users that may use THO (all users in dynamic mode).
    pub fn num_tho(&self) -> usize {
        (0..self.num_users).filter(|&i| self.x_enabled(i)).count()
    }

    /// Number of users that may use CHO (all users in dynamic mode).
    pub fn num_cho(&self) -> usize {
        (0..self.num_users).filter(|&i| self.y_enabled(i)).count()
    }

    pub fn pairs(&self) -> usize {
        self.num_users * self.num_cells
    }
}

/// Whether a decision holds relaxed marginals or implementable indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    Continuous,
    Binary,
}

/// Association (`x`) and preparation (`y`) variables, both `users × cells`, row-major.
///
/// The same layout is used for differences of decisions and for gradients;
/// those always carry [`Form::Continuous`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    users: usize,
    cells: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub form: Form,
}

impl Decision {
    pub fn zeros(users: usize, cells: usize, form: Form) -> Self {
        Self {
            users,
            cells,
            x: vec![0.0; users * cells],
            y: vec![0.0; users * cells],
            form,
        }
    }

    pub fn zeros_for(config: &NetworkConfig) -> Self {
        Self::zeros(config.num_users, config.num_cells, Form::Continuous)
    }

    pub fn from_parts(users: usize, cells: usize, x: Vec<f64>, y: Vec<f64>, form: Form) -> Result<Self> {
        if x.len() != users * cells || y.len() != users * cells {
            return Err(Error::Config(format!(
                "decision parts must have {} entries, got x={} y={}",
                users * cells,
                x.len(),
                y.len()
            )));
        }
        let d = Self { users, cells, x, y, form };
        if form == Form::Binary && !d.entries_binary() {
            return Err(Error::Domain("binary decision with a non-{0,1} entry".into()));
        }
        Ok(d)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.users, self.cells)
    }

    #[inline]
    pub fn x_at(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.cells + j]
    }

    #[inline]
    pub fn y_at(&self, i: usize, j: usize) -> f64 {
        self.y[i * self.cells + j]
    }

    #[inline]
    pub fn set_x(&mut self, i: usize, j: usize, v: f64) {
        self.x[i * self.cells + j] = v;
    }

    #[inline]
    pub fn set_y(&mut self, i: usize, j: usize, v: f64) {
        self.y[i * self.cells + j] = v;
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.cells..(i + 1) * self.cells]
    }

    pub fn y_row(&self, i: usize) -> &[f64] {
        &self.y[i * self.cells..(i + 1) * self.cells]
    }

    pub fn x_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.x[i * self.cells..(i + 1) * self.cells]
    }

    pub fn y_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.y[i * self.cells..(i + 1) * self.cells]
    }

    pub fn x_row_sum(&self, i: usize) -> f64 {
        self.x_row(i).iter().sum()
    }

    pub fn y_row_sum(&self, i: usize) -> f64 {
        self.y_row(i).iter().sum()
    }

    pub fn entries_binary(&self) -> bool {
        self.x.iter().chain(&self.y).all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn check_shape(&self, other: &Decision) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Config(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn check_config(&self, config: &NetworkConfig) -> Result<()> {
        if self.shape() != (config.num_users, config.num_cells) {
            return Err(Error::Config(format!(
                "decision shape {:?} does not match network {}x{}",
                self.shape(),
                config.num_users,
                config.num_cells
            )));
        }
        Ok(())
    }

    /// `self - other` as a continuous difference.
    pub fn sub(&self, other: &Decision) -> Result<Decision> {
        self.check_shape(other)?;
        Ok(Decision {
            users: self.users,
            cells: self.cells,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a - b).collect(),
            form: Form::Continuous,
        })
    }

    /// `self += scale * other`.
    pub fn axpy(&mut self, scale: f64, other: &Decision) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += scale * b;
        }
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += scale * b;
        }
        self.form = Form::Continuous;
        Ok(())
    }

    pub fn scaled(&self, scale: f64) -> Decision {
        Decision {
            users: self.users,
            cells: self.cells,
            x: self.x.iter().map(|v| v * scale).collect(),
            y: self.y.iter().map(|v| v * scale).collect(),
            form: Form::Continuous,
        }
    }

    pub fn dot(&self, other: &Decision) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.x.iter().zip(&other.x).map(|(a, b)| a * b).sum::<f64>()
            + self.y.iter().zip(&other.y).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn norm2(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Decision) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.y.iter().zip(&other.y))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Convex combination `Σ_k w_k z_k`.
    pub fn mix(weights: &[f64], decisions: &[Decision]) -> Result<Decision> {
        let first = decisions
            .first()
            .ok_or_else(|| Error::Config("cannot mix an empty set of decisions".into()))?;
        if weights.len() != decisions.len() {
            return Err(Error::Config("one weight per decision required".into()));
        }
        let mut out = Decision::zeros(first.users, first.cells, Form::Continuous);
        for (w, d) in weights.iter().zip(decisions) {
            out.axpy(*w, d)?;
        }
        Ok(out)
    }

    /// Selected cell of a user in THO mode (the `1` in its x-row), if any.
    pub fn associated_cell(&self, i: usize) -> Option<usize> {
        self.x_row(i).iter().position(|&v| v >= 0.5)
    }
}

/// Per-slot diagonal switching-cost weights: `a` for associations, `b` for preparations.
///
/// Weights are indexed by user-cell pair (`i * cells + j`) for every user; in
/// static mode the unused half of each vector multiplies identically-zero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrices {
    users: usize,
    cells: usize,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    pub a_max: f64,
    pub b_max: f64,
}

impl CostMatrices {
    /// Builds per-slot weight vectors, clamping every weight to at least [`MIN_WEIGHT`].
    pub fn new(users: usize, cells: usize, a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::Config("cost matrices need the same nonzero number of slots".into()));
        }
        let n = users * cells;
        if a.iter().chain(&b).any(|v| v.len() != n) {
            return Err(Error::Config(format!("each slot needs {n} weights")));
        }
        if a.iter().chain(&b).flatten().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("switching-cost weights must be finite and nonnegative".into()));
        }
        let clamp = |m: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.into_iter()
                .map(|v| v.into_iter().map(|w| w.max(MIN_WEIGHT)).collect())
                .collect()
        };
        let a = clamp(a);
        let b = clamp(b);
        let a_max = a.iter().flatten().copied().fold(0.0, f64::max);
        let b_max = b.iter().flatten().copied().fold(0.0, f64::max);
        Ok(Self { users, cells, a, b, a_max, b_max })
    }

    /// Time-invariant weights `a`, `b` for every pair over `slots` slots.
    pub fn uniform(users: usize, cells: usize, slots: usize, a: f64, b: f64) -> Result<Self> {
        let n = users * cells;
        Self::new(users, cells, vec![vec![a; n]; slots], vec![vec![b; n]; slots])
    }

    /// Time-invariant per-pair weights.
    pub fn constant(users: usize, cells: usize, slots: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(users, cells, vec![a; slots], vec![b; slots])
    }

    pub fn slots(&self) -> usize {
        self.a.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.users, self.cells)
    }

    pub fn a(&self, slot: usize) -> &[f64] {
        &self.a[slot]
    }

    pub fn b(&self, slot: usize) -> &[f64] {
        &self.b[slot]
    }

    /// Whether every THO weight exceeds the CHO weight of the same pair in every slot.
    pub fn tho_dominates(&self) -> bool {
        self.a
            .iter()
            .zip(&self.b)
            .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x > y))
    }

    /// Copy with every weight set to the minimum (switching costs ignored).
    pub fn zeroed(&self) -> Self {
        let n = self.users * self.cells;
        Self {
            users: self.users,
            cells: self.cells,
            a: vec![vec![MIN_WEIGHT; n]; self.slots()],
            b: vec![vec![MIN_WEIGHT; n]; self.slots()],
            a_max: MIN_WEIGHT,
            b_max: MIN_WEIGHT,
        }
    }

    fn check(&self, v: &Decision, slot: usize) -> Result<()> {
        if v.shape() != (self.users, self.cells) {
            return Err(Error::Config(format!(
                "vector shape {:?} does not match costs {}x{}",
                v.shape(),
                self.users,
                self.cells
            )));
        }
        if slot >= self.slots() {
            return Err(Error::Config(format!("slot {slot} beyond cost horizon {}", self.slots())));
        }
        Ok(())
    }
}

/// `sqrt(Σ a_n Δx_n² + Σ b_n Δy_n²)`: the switching penalty of a decision change.
pub fn weighted_norm(delta: &Decision, costs: &CostMatrices, slot: usize) -> Result<f64> {
    costs.check(delta, slot)?;
    Ok(weighted_norm_unchecked(delta, costs, slot))
}

pub(crate) fn weighted_norm_unchecked(delta: &Decision, costs: &CostMatrices, slot: usize) -> f64 {
    let a = costs.a(slot);
    let b = costs.b(slot);
    let sx: f64 = delta.x.iter().zip(a).map(|(d, w)| w * d * d).sum();
    let sy: f64 = delta.y.iter().zip(b).map(|(d, w)| w * d * d).sum();
    (sx + sy).sqrt()
}

/// Weighted distance between two decisions without allocating the difference.
pub fn switching_cost(z: &Decision, prev: &Decision, costs: &CostMatrices, slot: usize) -> Result<f64> {
    z.check_shape(prev)?;
    costs.check(z, slot)?;
    let a = costs.a(slot);
    let b = costs.b(slot);
    let mut s = 0.0;
    for n in 0..z.x.len() {
        let dx = z.x[n] - prev.x[n];
        let dy = z.y[n] - prev.y[n];
        s += a[n] * dx * dx + b[n] * dy * dy;
    }
    Ok(s.sqrt())
}

/// Dual norm `sqrt(Σ v_n²/a_n + Σ v_n²/b_n)`.
pub fn dual_weighted_norm(v: &Decision, costs: &CostMatrices, slot: usize) -> Result<f64> {
    costs.check(v, slot)?;
    let a = costs.a(slot);
    let b = costs.b(slot);
    if a.iter().chain(b).any(|w| *w <= 0.0) {
        return Err(Error::Domain("dual norm needs strictly positive weights".into()));
    }
    let sx: f64 = v.x.iter().zip(a).map(|(g, w)| g * g / w).sum();
    let sy: f64 = v.y.iter().zip(b).map(|(g, w)| g * g / w).sum();
    Ok((sx + sy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unweighted(d: &Decision) -> f64 {
        d.norm2()
    }

    #[test]
    fn zero_delta_has_zero_norm() {
        let costs = CostMatrices::uniform(2, 3, 1, 0.5, 0.1).unwrap();
        let d = Decision::zeros(2, 3, Form::Continuous);
        assert_eq!(weighted_norm(&d, &costs, 0).unwrap(), 0.0);
        assert_eq!(dual_weighted_norm(&d, &costs, 0).unwrap(), 0.0);
    }

    #[test]
    fn single_tho_flip() {
        let costs = CostMatrices::uniform(1, 2, 1, 0.25, 0.1).unwrap();
        let before = Decision::from_parts(1, 2, vec![1.0, 0.0], vec![0.0; 2], Form::Binary).unwrap();
        let after = Decision::from_parts(1, 2, vec![0.0, 1.0], vec![0.0; 2], Form::Binary).unwrap();
        let delta = after.sub(&before).unwrap();
        let n = weighted_norm(&delta, &costs, 0).unwrap();
        assert!((n - (2.0f64 * 0.25).sqrt()).abs() < 1e-12);
        assert!((n - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        // uniform weights scale the Euclidean norm by sqrt(w)
        assert!((n - 0.25f64.sqrt() * unweighted(&delta)).abs() < 1e-15);
    }

    #[test]
    fn single_preparation_toggle() {
        let costs = CostMatrices::uniform(1, 3, 1, 0.5, 0.04).unwrap();
        let mut delta = Decision::zeros(1, 3, Form::Continuous);
        delta.set_y(0, 2, 1.0);
        assert!((weighted_norm(&delta, &costs, 0).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn dual_norm_examples() {
        let costs = CostMatrices::uniform(1, 2, 1, 0.25, 0.1).unwrap();
        let mut v = Decision::zeros(1, 2, Form::Continuous);
        v.set_x(0, 0, 1.0);
        assert!((dual_weighted_norm(&v, &costs, 0).unwrap() - 2.0).abs() < 1e-12);

        let costs = CostMatrices::uniform(1, 2, 1, 0.5, 0.125).unwrap();
        let mut v = Decision::zeros(1, 2, Form::Continuous);
        v.set_x(0, 0, 1.0);
        v.set_y(0, 1, 1.0);
        let n = dual_weighted_norm(&v, &costs, 0).unwrap();
        assert!((n - 10f64.sqrt()).abs() < 1e-12);
        assert!((n - 3.1623).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let costs = CostMatrices::uniform(2, 2, 1, 0.5, 0.1).unwrap();
        let d = Decision::zeros(1, 2, Form::Continuous);
        assert!(matches!(weighted_norm(&d, &costs, 0), Err(Error::Config(_))));
        let d = Decision::zeros(2, 2, Form::Continuous);
        assert!(matches!(weighted_norm(&d, &costs, 5), Err(Error::Config(_))));
    }

    #[test]
    fn weights_are_clamped_positive() {
        let costs = CostMatrices::uniform(1, 1, 1, 0.0, 0.0).unwrap();
        assert_eq!(costs.a(0)[0], MIN_WEIGHT);
        let mut v = Decision::zeros(1, 1, Form::Continuous);
        v.set_x(0, 0, 1.0);
        assert!(dual_weighted_norm(&v, &costs, 0).unwrap().is_finite());
    }

    #[test]
    fn static_partition_must_cover_users() {
        let missing = HoMode::Static { tho: vec![0], cho: vec![] };
        assert!(NetworkConfig::uniform(2, 2, 1, missing, 1, 2).is_err());
        let overlap = HoMode::Static { tho: vec![0, 1], cho: vec![1] };
        assert!(NetworkConfig::uniform(2, 2, 1, overlap, 1, 2).is_err());
        assert!(NetworkConfig::uniform(2, 2, 1, HoMode::split(2, 1), 1, 2).is_ok());
    }

    #[test]
    fn config_rejects_bad_limits() {
        assert!(NetworkConfig::uniform(2, 2, 1, HoMode::Dynamic, 3, 2).is_err());
        assert!(NetworkConfig::uniform(2, 2, 1, HoMode::Dynamic, 0, 2).is_err());
        assert!(NetworkConfig::uniform(2, 2, 0, HoMode::Dynamic, 1, 2).is_err());
        assert!(NetworkConfig::uniform(5, 2, 1, HoMode::Dynamic, 1, 2).is_err());
        let c = NetworkConfig::uniform(2, 2, 1, HoMode::Dynamic, 1, 2).unwrap();
        assert!(c.with_alpha(0.0).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let json = r#"{"num_users": 3, "num_cells": 2, "horizon": 10,
            "ho_mode": {"static": {"tho": [0], "cho": [1, 2]}},
            "max_preparations": 2, "capacity": [3, 3], "alpha": 10.0}"#;
        let c: NetworkConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.role(0), Some(HoRole::Tho));
        assert_eq!(c.role(2), Some(HoRole::Cho));
        assert_eq!(c.bandwidth, vec![1.0, 1.0]);
        let back: NetworkConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);

        let bad = r#"{"num_users": 1, "num_cells": 1, "horizon": 1, "ho_mode": "dynamic",
            "max_preparations": 1, "capacity": 1, "colour": 3}"#;
        assert!(serde_json::from_str::<NetworkConfig>(bad).is_err());
    }
}
