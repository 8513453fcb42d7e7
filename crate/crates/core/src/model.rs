//! Model parameters, state types and vector fields.
//!
//! Three formulations of the same human-wildlife system are provided:
//! the full three-compartment system, its two-dimensional quasi-steady-state
//! reduction (fast migration eliminated), and the sign-flipped competitive
//! form used for stability analysis. All rates are per year, populations in
//! individuals.

use thiserror::Error;

/// Components whose magnitude falls below this at a type-construction
/// boundary are treated as integrator dust and clamped to zero.
pub const DUST: f64 = 1e-30;

/// Raw model parameters. Construct, then call [`ModelParams::validate`];
/// every downstream operation takes the validated form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Constant human immigration into the domestic area (individuals/year).
    pub immigration: f64,
    /// Proportion of wild meat in the human diet, in (0, 1].
    pub diet_fraction: f64,
    /// Food production rate of the domestic population (1/year).
    pub food_production: f64,
    /// Human mortality rate (1/year). Must exceed `food_production`.
    pub mortality: f64,
    /// Migration rate, domestic area to wild area (1/year).
    pub mig_to_wild: f64,
    /// Migration rate, wild area to domestic area (1/year).
    pub mig_to_domestic: f64,
    /// Intrinsic growth rate of the wild fauna (1/year).
    pub fauna_growth: f64,
    /// Fauna carrying capacity fixed by the environment (individuals).
    pub carrying_capacity: f64,
    /// Anthropisation level in [0, 1); scales capacity and growth by (1-a).
    pub anthropisation: f64,
    /// Positive feedback of human presence on fauna growth (1/individual).
    pub human_boost: f64,
    /// Hunting rate (1/(individual*year)).
    pub hunting_rate: f64,
    /// Time-scale ratio between demographic and migration processes.
    /// Stored for the QSSA comparison path only; the canonical vector
    /// fields use `mig_to_wild` and `mig_to_domestic` directly.
    pub epsilon: f64,
}

impl ModelParams {
    /// Table-4 baseline used throughout the simulations. The four
    /// "varying" parameters (hunting rate, anthropisation, human boost,
    /// immigration) must be supplied by the caller.
    pub fn baseline(hunting_rate: f64, anthropisation: f64, human_boost: f64, immigration: f64) -> Self {
        ModelParams {
            immigration,
            diet_fraction: 0.4,
            food_production: 0.005,
            mortality: 0.02,
            mig_to_wild: 0.826,
            mig_to_domestic: 4.13,
            fauna_growth: 0.8,
            carrying_capacity: 7200.0,
            anthropisation,
            human_boost,
            hunting_rate,
            epsilon: 1.0 / 365.0,
        }
    }

    /// Check every parameter invariant; on success return the validated
    /// wrapper with the migration ratio and the human-boost bound attached.
    pub fn validate(self) -> Result<ValidParams, ParamError> {
        let positive = [
            (self.diet_fraction, "diet_fraction"),
            (self.mortality, "mortality"),
            (self.mig_to_wild, "mig_to_wild"),
            (self.mig_to_domestic, "mig_to_domestic"),
            (self.fauna_growth, "fauna_growth"),
            (self.carrying_capacity, "carrying_capacity"),
            (self.hunting_rate, "hunting_rate"),
        ];
        for (v, name) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ParamError::NonPositiveRate { name, value: v });
            }
        }
        if !(self.food_production >= 0.0) || !self.food_production.is_finite() {
            return Err(ParamError::NonPositiveRate { name: "food_production", value: self.food_production });
        }
        if !(self.immigration >= 0.0) || !self.immigration.is_finite() {
            return Err(ParamError::NonPositiveRate { name: "immigration", value: self.immigration });
        }
        if !(self.human_boost >= 0.0) || !self.human_boost.is_finite() {
            return Err(ParamError::NonPositiveRate { name: "human_boost", value: self.human_boost });
        }
        if self.mortality <= self.food_production {
            return Err(ParamError::MortalityBelowProduction {
                mortality: self.mortality,
                food_production: self.food_production,
            });
        }
        if !(0.0..1.0).contains(&self.anthropisation) {
            return Err(ParamError::AnthropisationOutOfRange(self.anthropisation));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(ParamError::EpsilonNonPositive(self.epsilon));
        }
        let migration_ratio = self.mig_to_wild / self.mig_to_domestic;
        let beta_star = beta_star_raw(&self);
        if self.human_boost >= beta_star {
            return Err(ParamError::HumanBoostTooLarge { beta: self.human_boost, beta_star });
        }
        Ok(ValidParams { raw: self, migration_ratio, beta_star })
    }
}

/// The upper bound on the human-boost coefficient below which the
/// invariant region is compact: 4(mu - f) / (m e r (1-a)^2 K).
fn beta_star_raw(p: &ModelParams) -> f64 {
    let m = p.mig_to_wild / p.mig_to_domestic;
    let one_a = 1.0 - p.anthropisation;
    4.0 * (p.mortality - p.food_production)
        / (m * p.diet_fraction * p.fauna_growth * one_a * one_a * p.carrying_capacity)
}

/// Validated parameters. Immutable; all operations on it are pure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidParams {
    raw: ModelParams,
    migration_ratio: f64,
    beta_star: f64,
}

impl ValidParams {
    pub fn raw(&self) -> &ModelParams {
        &self.raw
    }

    /// Ratio of domestic-to-wild over wild-to-domestic migration rates.
    pub fn migration_ratio(&self) -> f64 {
        self.migration_ratio
    }

    /// The human-boost bound attached at validation.
    pub fn beta_star(&self) -> f64 {
        self.beta_star
    }

    /// Convenience: mortality minus food production, always positive.
    pub fn net_mortality(&self) -> f64 {
        self.raw.mortality - self.raw.food_production
    }

    /// Effective fauna capacity (1-a) K.
    pub fn effective_capacity(&self) -> f64 {
        (1.0 - self.raw.anthropisation) * self.raw.carrying_capacity
    }

    /// Same parameters with migration rates scaled by `factor`
    /// (used by the time-scale comparison; re-validated).
    pub fn with_migration_scaled(&self, factor: f64) -> Result<ValidParams, ParamError> {
        let mut raw = self.raw;
        raw.mig_to_wild *= factor;
        raw.mig_to_domestic *= factor;
        raw.validate()
    }

    /// Same parameters with the varying quartet replaced; re-validated.
    pub fn with_varying(
        &self,
        hunting_rate: f64,
        anthropisation: f64,
        human_boost: f64,
        immigration: f64,
    ) -> Result<ValidParams, ParamError> {
        let mut raw = self.raw;
        raw.hunting_rate = hunting_rate;
        raw.anthropisation = anthropisation;
        raw.human_boost = human_boost;
        raw.immigration = immigration;
        raw.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("mortality ({mortality}) must exceed food production ({food_production})")]
    MortalityBelowProduction { mortality: f64, food_production: f64 },
    #[error("anthropisation must lie in [0, 1), got {0}")]
    AnthropisationOutOfRange(f64),
    #[error("human_boost {beta} must be below the bound beta_star = {beta_star}")]
    HumanBoostTooLarge { beta: f64, beta_star: f64 },
    #[error("epsilon must be positive, got {0}")]
    EpsilonNonPositive(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("component `{name}` violates its sign domain: {value}")]
    SignViolation { name: &'static str, value: f64 },
}

fn clamp_nonneg(v: f64, name: &'static str) -> Result<f64, StateError> {
    if v >= 0.0 {
        Ok(v)
    } else if v > -DUST {
        Ok(0.0)
    } else {
        Err(StateError::SignViolation { name, value: v })
    }
}

/// Phase point of the full three-compartment system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateFull {
    pub h_domestic: f64,
    pub fauna: f64,
    pub h_wild: f64,
}

impl StateFull {
    pub fn new(h_domestic: f64, fauna: f64, h_wild: f64) -> Result<Self, StateError> {
        Ok(StateFull {
            h_domestic: clamp_nonneg(h_domestic, "h_domestic")?,
            fauna: clamp_nonneg(fauna, "fauna")?,
            h_wild: clamp_nonneg(h_wild, "h_wild")?,
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.h_domestic, self.fauna, self.h_wild]
    }
}

/// Phase point of the reduced (fast-migration-eliminated) system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateReduced {
    pub h_domestic: f64,
    pub fauna: f64,
}

impl StateReduced {
    pub fn new(h_domestic: f64, fauna: f64) -> Result<Self, StateError> {
        Ok(StateReduced {
            h_domestic: clamp_nonneg(h_domestic, "h_domestic")?,
            fauna: clamp_nonneg(fauna, "fauna")?,
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.h_domestic, self.fauna, 0.0]
    }
}

/// Phase point of the equivalent competitive system: the fauna and
/// wild-human coordinates are sign-flipped (non-positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCompet {
    pub h_d: f64,
    pub f_w: f64,
    pub h_w: f64,
}

impl StateCompet {
    pub fn new(h_d: f64, f_w: f64, h_w: f64) -> Result<Self, StateError> {
        let flip = |v: f64, name| clamp_nonneg(-v, name).map(|x| -x);
        Ok(StateCompet {
            h_d: clamp_nonneg(h_d, "h_d")?,
            f_w: flip(f_w, "f_w")?,
            h_w: flip(h_w, "h_w")?,
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.h_d, self.f_w, self.h_w]
    }
}

/// Which vector field a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Full,
    Reduced,
    Compet,
}

impl Formulation {
    pub fn dim(&self) -> usize {
        match self {
            Formulation::Reduced => 2,
            _ => 3,
        }
    }

    /// Sign of each admissible component (+1 nonnegative, -1 nonpositive).
    pub fn signs(&self) -> [f64; 3] {
        match self {
            Formulation::Compet => [1.0, -1.0, -1.0],
            _ => [1.0, 1.0, 1.0],
        }
    }
}

/// Change of variable onto the competitive system: flip fauna and wild humans.
pub fn to_compet(s: StateFull) -> StateCompet {
    StateCompet { h_d: s.h_domestic, f_w: -s.fauna, h_w: -s.h_wild }
}

/// Inverse change of variable; exact involution with [`to_compet`].
pub fn from_compet(s: StateCompet) -> StateFull {
    StateFull { h_domestic: s.h_d, fauna: -s.f_w, h_wild: -s.h_w }
}

/// Right-hand side of the full system.
pub fn rhs_full(p: &ValidParams, s: &StateFull) -> [f64; 3] {
    rhs_full_raw(p, &s.as_array())
}

/// Right-hand side of the reduced system (two meaningful components).
pub fn rhs_reduced(p: &ValidParams, s: &StateReduced) -> [f64; 2] {
    let r = rhs_reduced_raw(p, &s.as_array());
    [r[0], r[1]]
}

/// Right-hand side of the competitive system.
pub fn rhs_compet(p: &ValidParams, s: &StateCompet) -> [f64; 3] {
    rhs_compet_raw(p, &s.as_array())
}

/// Dispatch on raw arrays; unused components must be zero for `Reduced`.
pub fn rhs_raw(p: &ValidParams, f: Formulation, y: &[f64; 3]) -> [f64; 3] {
    match f {
        Formulation::Full => rhs_full_raw(p, y),
        Formulation::Reduced => rhs_reduced_raw(p, y),
        Formulation::Compet => rhs_compet_raw(p, y),
    }
}

pub(crate) fn rhs_full_raw(p: &ValidParams, y: &[f64; 3]) -> [f64; 3] {
    let q = p.raw();
    let (h_d, f_w, h_w) = (y[0], y[1], y[2]);
    let one_a = 1.0 - q.anthropisation;
    let logistic = 1.0 - f_w / (q.carrying_capacity * one_a);
    [
        q.immigration + q.diet_fraction * q.hunting_rate * h_w * f_w
            + (q.food_production - q.mortality) * h_d
            - q.mig_to_wild * h_d
            + q.mig_to_domestic * h_w,
        q.fauna_growth * one_a * (1.0 + q.human_boost * h_w) * logistic * f_w
            - q.hunting_rate * f_w * h_w,
        q.mig_to_wild * h_d - q.mig_to_domestic * h_w,
    ]
}

pub(crate) fn rhs_reduced_raw(p: &ValidParams, y: &[f64; 3]) -> [f64; 3] {
    let q = p.raw();
    let m = p.migration_ratio();
    let (h_d, f_w) = (y[0], y[1]);
    let one_a = 1.0 - q.anthropisation;
    let denom = 1.0 + m;
    let logistic = 1.0 - f_w / (q.carrying_capacity * one_a);
    [
        q.immigration / denom
            + (q.food_production - q.mortality) / denom * h_d
            + q.diet_fraction / denom * m * q.hunting_rate * f_w * h_d,
        q.fauna_growth * one_a * (1.0 + q.human_boost * m * h_d) * logistic * f_w
            - m * q.hunting_rate * f_w * h_d,
        0.0,
    ]
}

pub(crate) fn rhs_compet_raw(p: &ValidParams, y: &[f64; 3]) -> [f64; 3] {
    let q = p.raw();
    let (h_d, f_w, h_w) = (y[0], y[1], y[2]);
    let one_a = 1.0 - q.anthropisation;
    let logistic = 1.0 + f_w / (q.carrying_capacity * one_a);
    [
        q.immigration + q.diet_fraction * q.hunting_rate * h_w * f_w
            + (q.food_production - q.mortality) * h_d
            - q.mig_to_wild * h_d
            - q.mig_to_domestic * h_w,
        q.fauna_growth * one_a * (1.0 - q.human_boost * h_w) * logistic * f_w
            + q.hunting_rate * f_w * h_w,
        -q.mig_to_wild * h_d - q.mig_to_domestic * h_w,
    ]
}

/// Bounds of the compact invariant region, plus the absorbing fauna bound
/// of the competitive system when the hunting rate is small enough for
/// the human-boost term to dominate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBounds {
    /// Bound on h_domestic + diet_fraction * fauna.
    pub s_max: f64,
    /// Bound on the fauna: (1-a) K.
    pub fauna_max: f64,
    /// Bound on humans in the wild area: m * s_max.
    pub h_wild_max: f64,
    /// Fauna level below which competitive trajectories cannot stay,
    /// present only when hunting_rate < (1-a) * human_boost * fauna_growth.
    pub absorbing_fauna_bound: Option<f64>,
}

/// Compute the invariant-region bounds. Validation guarantees the
/// denominator of `s_max` is positive.
pub fn region_bounds(p: &ValidParams) -> RegionBounds {
    let q = p.raw();
    let m = p.migration_ratio();
    let one_a = 1.0 - q.anthropisation;
    let net = p.net_mortality();
    let cap = one_a * q.carrying_capacity;
    let numer = q.immigration + (net + one_a * q.fauna_growth / 4.0) * q.diet_fraction * cap;
    let denom = net
        - q.diet_fraction * q.fauna_growth * one_a * one_a * q.carrying_capacity * m / 4.0
            * q.human_boost;
    let s_max = numer / denom;
    let absorbing = if q.hunting_rate < one_a * q.human_boost * q.fauna_growth {
        Some(q.carrying_capacity * (one_a - q.hunting_rate / (q.human_boost * q.fauna_growth)))
    } else {
        None
    };
    RegionBounds {
        s_max,
        fauna_max: cap,
        h_wild_max: m * s_max,
        absorbing_fauna_bound: absorbing,
    }
}

/// How a state relates to the invariant region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCheck {
    /// Largest relative excess over any bound; <= 0 means inside.
    pub max_relative_excess: f64,
    /// The joint constraint h_domestic + e * fauna <= s_max is only
    /// flagged, never used to reject an initial condition.
    pub joint_excess: f64,
}

impl RegionBounds {
    /// Relative excesses of a full-system state over the region bounds.
    pub fn check(&self, p: &ValidParams, s: &[f64; 3]) -> RegionCheck {
        let e = p.raw().diet_fraction;
        let joint = (s[0] + e * s[1] - self.s_max) / self.s_max.max(1.0);
        let fauna = (s[1] - self.fauna_max) / self.fauna_max.max(1.0);
        let wild = (s[2] - self.h_wild_max) / self.h_wild_max.max(1.0);
        let neg = -[s[0], s[1], s[2]].iter().fold(f64::INFINITY, |a, &b| a.min(b));
        RegionCheck {
            max_relative_excess: joint.max(fauna).max(wild).max(neg),
            joint_excess: joint,
        }
    }
}
