//! Closed-form equilibria, stability thresholds and local classification.
//!
//! All stability verdicts go through the Routh-Hurwitz criterion on the
//! characteristic polynomial written monic, `X^3 + a2 X^2 + a1 X + a0`
//! (so `a2 = -trace`, `a0 = -det`). The key derived quantity is
//! `delta_stab = a2*a1 - a0` at the coexistence equilibrium of the
//! competitive formulation: positive means the equilibrium attracts
//! globally, negative means a stable periodic orbit exists.

use crate::model::{
    rhs_full_raw, to_compet, Formulation, StateFull, ValidParams,
};
use thiserror::Error;

/// Relative tolerance below which a threshold comparison is reported as
/// boundary/indeterminate rather than silently binned to one side.
pub const BOUNDARY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriaError {
    #[error("coexistence equilibrium does not exist (threshold N = {n} <= 1)")]
    NoCoexistence { n: f64 },
    #[error("lambda_star is defined only for immigration = 0 and human_boost = 0")]
    LambdaStarDomain,
    #[error("quadratic discriminant unexpectedly non-positive: {0}")]
    DegenerateQuadratic(f64),
}

/// Which equilibrium a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    /// Everything extinct (exists only without immigration).
    Trivial,
    /// Fauna at effective capacity, no humans (no immigration).
    FaunaOnly,
    /// Humans sustained by immigration alone, fauna extinct.
    HumanOnly,
    /// Humans and fauna both positive.
    Coexistence,
}

impl EquilibriumKind {
    pub fn token(&self) -> &'static str {
        match self {
            EquilibriumKind::Trivial => "trivial",
            EquilibriumKind::FaunaOnly => "fauna_only",
            EquilibriumKind::HumanOnly => "human_only",
            EquilibriumKind::Coexistence => "coexistence",
        }
    }
}

/// Local stability verdict; `Indeterminate` flags a tested quantity within
/// [`BOUNDARY_REL_TOL`] of zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Las,
    Unstable,
    Indeterminate,
}

impl Stability {
    pub fn token(&self) -> &'static str {
        match self {
            Stability::Las => "las",
            Stability::Unstable => "unstable",
            Stability::Indeterminate => "indeterminate",
        }
    }
}

/// Characteristic-polynomial summary backing a stability verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenSummary {
    /// Monic cubic coefficients (a2, a1, a0) of the 3-D context.
    ThreeD { a2: f64, a1: f64, a0: f64 },
    /// Trace and determinant of the 2-D context.
    TwoD { trace: f64, det: f64 },
}

/// One equilibrium with its full-coordinates state and local verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub state: StateFull,
    pub local_stability: Stability,
    pub eigen_summary: EigenSummary,
}

/// A 2x2 or 3x3 Jacobian, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Jacobian {
    TwoD([[f64; 2]; 2]),
    ThreeD([[f64; 3]; 3]),
}

impl Jacobian {
    pub fn three(self) -> [[f64; 3]; 3] {
        match self {
            Jacobian::ThreeD(m) => m,
            Jacobian::TwoD(_) => panic!("expected 3x3 Jacobian"),
        }
    }

    pub fn two(self) -> [[f64; 2]; 2] {
        match self {
            Jacobian::TwoD(m) => m,
            Jacobian::ThreeD(_) => panic!("expected 2x2 Jacobian"),
        }
    }
}

/// Closed-form Jacobian of the requested formulation at a raw state.
pub fn jacobian(p: &ValidParams, f: Formulation, y: &[f64; 3]) -> Jacobian {
    let q = p.raw();
    let one_a = 1.0 - q.anthropisation;
    let cap = one_a * q.carrying_capacity;
    match f {
        Formulation::Full => {
            let (_, f_w, h_w) = (y[0], y[1], y[2]);
            Jacobian::ThreeD([
                [
                    q.food_production - q.mortality - q.mig_to_wild,
                    q.diet_fraction * q.hunting_rate * h_w,
                    q.diet_fraction * q.hunting_rate * f_w + q.mig_to_domestic,
                ],
                [
                    0.0,
                    q.fauna_growth * one_a * (1.0 + q.human_boost * h_w) * (1.0 - 2.0 * f_w / cap)
                        - q.hunting_rate * h_w,
                    q.fauna_growth * one_a * q.human_boost * (1.0 - f_w / cap) * f_w
                        - q.hunting_rate * f_w,
                ],
                [q.mig_to_wild, 0.0, -q.mig_to_domestic],
            ])
        }
        Formulation::Reduced => {
            let m = p.migration_ratio();
            let (h_d, f_w) = (y[0], y[1]);
            let denom = 1.0 + m;
            Jacobian::TwoD([
                [
                    (q.food_production - q.mortality) / denom
                        + q.diet_fraction * q.hunting_rate * m / denom * f_w,
                    q.diet_fraction * q.hunting_rate * m / denom * h_d,
                ],
                [
                    m * (q.human_boost * one_a * q.fauna_growth * (1.0 - f_w / cap)
                        - q.hunting_rate)
                        * f_w,
                    q.fauna_growth * (1.0 + q.human_boost * m * h_d)
                        * (one_a - 2.0 * f_w / q.carrying_capacity)
                        - q.hunting_rate * m * h_d,
                ],
            ])
        }
        Formulation::Compet => {
            let (_, f_w, h_w) = (y[0], y[1], y[2]);
            Jacobian::ThreeD([
                [
                    q.food_production - q.mortality - q.mig_to_wild,
                    q.diet_fraction * q.hunting_rate * h_w,
                    q.diet_fraction * q.hunting_rate * f_w - q.mig_to_domestic,
                ],
                [
                    0.0,
                    q.fauna_growth * one_a * (1.0 - q.human_boost * h_w) * (1.0 + 2.0 * f_w / cap)
                        + q.hunting_rate * h_w,
                    (q.hunting_rate - one_a * q.human_boost * q.fauna_growth
                        - q.human_boost * q.fauna_growth * f_w / q.carrying_capacity)
                        * f_w,
                ],
                [-q.mig_to_wild, 0.0, -q.mig_to_domestic],
            ])
        }
    }
}

/// Monic characteristic coefficients (a2, a1, a0) of a 3x3 matrix:
/// chi(X) = X^3 + a2 X^2 + a1 X + a0.
pub fn char_coeffs_3(m: &[[f64; 3]; 3]) -> (f64, f64, f64) {
    let trace = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    (-trace, minors, -det)
}

fn near_zero(value: f64, scale: f64) -> bool {
    value.abs() <= BOUNDARY_REL_TOL * scale.abs().max(1.0)
}

/// Routh-Hurwitz for a 2-D system given trace and determinant.
pub fn routh_hurwitz_2(trace: f64, det: f64) -> Stability {
    if near_zero(trace, trace) || near_zero(det, det) {
        return Stability::Indeterminate;
    }
    if trace < 0.0 && det > 0.0 {
        Stability::Las
    } else {
        Stability::Unstable
    }
}

/// Routh-Hurwitz for a 3-D system on monic coefficients (a2, a1, a0):
/// stable iff a2, a1, a0 > 0 and a2*a1 - a0 > 0.
pub fn routh_hurwitz_3(a2: f64, a1: f64, a0: f64) -> Stability {
    let hurwitz = a2 * a1 - a0;
    let scale = (a2 * a1).abs().max(a0.abs());
    if near_zero(a2, a2) || near_zero(a1, a1) || near_zero(a0, a0) || near_zero(hurwitz, scale) {
        return Stability::Indeterminate;
    }
    if a2 > 0.0 && a1 > 0.0 && a0 > 0.0 && hurwitz > 0.0 {
        Stability::Las
    } else {
        Stability::Unstable
    }
}

/// The coexistence-existence threshold: the formula switches on whether
/// immigration is present.
pub fn threshold_n(p: &ValidParams) -> f64 {
    let q = p.raw();
    let m = p.migration_ratio();
    let one_a = 1.0 - q.anthropisation;
    if q.immigration == 0.0 {
        m * q.diet_fraction * q.hunting_rate * one_a * q.carrying_capacity / p.net_mortality()
    } else {
        q.fauna_growth * one_a * (p.net_mortality() / (m * q.immigration) + q.human_boost)
            / q.hunting_rate
    }
}

/// Hunting-rate bound solving N = 1: a lower bound on the hunting rate
/// without immigration, an upper bound with immigration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaBound {
    /// Coexistence requires hunting_rate above this (no immigration).
    Min(f64),
    /// Coexistence requires hunting_rate below this (with immigration).
    Max(f64),
}

impl LambdaBound {
    pub fn value(&self) -> f64 {
        match self {
            LambdaBound::Min(v) | LambdaBound::Max(v) => *v,
        }
    }
}

pub fn lambda_bounds(p: &ValidParams) -> LambdaBound {
    let q = p.raw();
    let m = p.migration_ratio();
    let one_a = 1.0 - q.anthropisation;
    if q.immigration == 0.0 {
        LambdaBound::Min(p.net_mortality() / (one_a * q.diet_fraction * m * q.carrying_capacity))
    } else {
        LambdaBound::Max(
            one_a * q.fauna_growth * (p.net_mortality() / (m * q.immigration) + q.human_boost),
        )
    }
}

/// Roots of the fauna equilibrium quadratic with immigration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PFRoots {
    pub discriminant: f64,
    pub root_low: f64,
    pub root_high: f64,
}

/// Coefficients (a, b, c) of the quadratic `a X^2 + b X + c` whose roots
/// are the candidate fauna equilibrium levels.
pub fn pf_coeffs(p: &ValidParams) -> (f64, f64, f64) {
    let q = p.raw();
    let m = p.migration_ratio();
    let one_a = 1.0 - q.anthropisation;
    let a = q.diet_fraction * q.fauna_growth / q.carrying_capacity;
    let b = -(q.diet_fraction * one_a * q.fauna_growth
        + p.net_mortality() * q.fauna_growth / (q.hunting_rate * m * q.carrying_capacity)
        + q.immigration * q.human_boost * q.fauna_growth / (q.hunting_rate * q.carrying_capacity));
    let c = p.net_mortality() * one_a * q.fauna_growth / (q.hunting_rate * m)
        - q.immigration * (1.0 - one_a * q.human_boost * q.fauna_growth / q.hunting_rate);
    (a, b, c)
}

/// Evaluate the fauna quadratic at `x`.
pub fn pf_eval(p: &ValidParams, x: f64) -> f64 {
    let (a, b, c) = pf_coeffs(p);
    (a * x + b) * x + c
}

/// Both real roots of the fauna quadratic. Without immigration the exact
/// factorisation is returned instead of the quadratic formula so that the
/// transcritical merge at N = 1 is exact.
pub fn pf_roots(p: &ValidParams) -> Result<PFRoots, EquilibriaError> {
    let q = p.raw();
    let m = p.migration_ratio();
    if q.immigration == 0.0 {
        let r1 = p.effective_capacity();
        let r2 = p.net_mortality() / (q.diet_fraction * q.hunting_rate * m);
        let (a, b, _) = pf_coeffs(p);
        let disc = b * b - 4.0 * a * (a * r1 * r2); // c = a r1 r2 at I = 0
        return Ok(PFRoots {
            discriminant: disc,
            root_low: r1.min(r2),
            root_high: r1.max(r2),
        });
    }
    let (a, b, c) = pf_coeffs(p);
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        // proven positive; only reachable through a numerical degeneracy
        return Err(EquilibriaError::DegenerateQuadratic(disc));
    }
    let sq = disc.sqrt();
    let sign = if b >= 0.0 { 1.0 } else { -1.0 };
    let qq = -(b + sign * sq) / 2.0;
    let r1 = qq / a;
    let r2 = c / qq;
    Ok(PFRoots {
        discriminant: disc,
        root_low: r1.min(r2),
        root_high: r1.max(r2),
    })
}

/// Coexistence equilibrium in full coordinates, if it exists (N > 1).
pub fn coexistence(p: &ValidParams) -> Option<StateFull> {
    let q = p.raw();
    let m = p.migration_ratio();
    let n = threshold_n(p);
    if !(n > 1.0) {
        return None;
    }
    let one_a = 1.0 - q.anthropisation;
    if q.immigration == 0.0 {
        let fauna = p.net_mortality() / (q.hunting_rate * m * q.diet_fraction);
        let h_d = one_a * q.fauna_growth * (1.0 - fauna / p.effective_capacity())
            / (m * (q.hunting_rate - q.human_boost * one_a * q.fauna_growth
                + q.human_boost * q.fauna_growth * fauna / q.carrying_capacity));
        Some(StateFull { h_domestic: h_d, fauna, h_wild: m * h_d })
    } else {
        let roots = pf_roots(p).ok()?;
        let fauna = roots.root_low;
        let h_d = q.immigration
            / (p.net_mortality() - q.diet_fraction * q.hunting_rate * m * fauna);
        Some(StateFull { h_domestic: h_d, fauna, h_wild: m * h_d })
    }
}

/// Classify an equilibrium through the competitive Jacobian.
fn classify_full_state(p: &ValidParams, state: &StateFull) -> (Stability, EigenSummary) {
    let c = to_compet(*state);
    let jac = jacobian(p, Formulation::Compet, &c.as_array()).three();
    let (a2, a1, a0) = char_coeffs_3(&jac);
    (routh_hurwitz_3(a2, a1, a0), EigenSummary::ThreeD { a2, a1, a0 })
}

/// All equilibria of the full system for the given parameters, each with a
/// Routh-Hurwitz verdict from the competitive Jacobian. Existence conditions
/// are encoded by presence in the list.
pub fn equilibria_all(p: &ValidParams) -> Vec<EquilibriumReport> {
    let q = p.raw();
    let mut out = Vec::with_capacity(3);
    let mut push = |kind, state: StateFull| {
        let (stab, eig) = classify_full_state(p, &state);
        out.push(EquilibriumReport { kind, state, local_stability: stab, eigen_summary: eig });
    };
    if q.immigration == 0.0 {
        push(EquilibriumKind::Trivial, StateFull { h_domestic: 0.0, fauna: 0.0, h_wild: 0.0 });
        push(
            EquilibriumKind::FaunaOnly,
            StateFull { h_domestic: 0.0, fauna: p.effective_capacity(), h_wild: 0.0 },
        );
    } else {
        let h = q.immigration / p.net_mortality();
        push(
            EquilibriumKind::HumanOnly,
            StateFull { h_domestic: h, fauna: 0.0, h_wild: p.migration_ratio() * h },
        );
    }
    if let Some(state) = coexistence(p) {
        push(EquilibriumKind::Coexistence, state);
    }
    out
}

/// Both evaluation routes for the stability discriminant at the coexistence
/// equilibrium. The Jacobian route is authoritative; a discrepancy beyond
/// `10^-8 * max(1, |value|)` raises the diagnostic flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaStab {
    pub closed_form: f64,
    pub from_jacobian: f64,
    pub discrepancy: bool,
}

impl DeltaStab {
    /// The authoritative value (Jacobian route).
    pub fn value(&self) -> f64 {
        self.from_jacobian
    }
}

/// Stability discriminant a2*a1 - a0 at the coexistence equilibrium,
/// computed both from the closed forms and from the competitive Jacobian.
pub fn delta_stab(p: &ValidParams) -> Result<DeltaStab, EquilibriaError> {
    let state = coexistence(p).ok_or(EquilibriaError::NoCoexistence { n: threshold_n(p) })?;
    let compet = to_compet(state);
    let jac = jacobian(p, Formulation::Compet, &compet.as_array()).three();
    let (a2, a1, a0) = char_coeffs_3(&jac);
    let from_jacobian = a2 * a1 - a0;
    let closed_form = delta_stab_closed_at(p, compet.f_w, compet.h_w);
    let discrepancy =
        (closed_form - from_jacobian).abs() > 1e-8 * from_jacobian.abs().max(1.0);
    Ok(DeltaStab { closed_form, from_jacobian, discrepancy })
}

/// The paper-form expressions for delta_stab, taking the coexistence
/// coordinates in the competitive convention (fauna and wild humans
/// non-positive).
fn delta_stab_closed_at(p: &ValidParams, f_w: f64, h_w: f64) -> f64 {
    let q = p.raw();
    let net = p.net_mortality();
    let m_d = q.mig_to_wild;
    let m_w = q.mig_to_domestic;
    let one_a = 1.0 - q.anthropisation;
    let boost = 1.0 - q.human_boost * h_w;
    let a2 = net + m_d + m_w - q.fauna_growth * boost * f_w / q.carrying_capacity;
    if q.immigration == 0.0 {
        let a2a1 = a2
            * (net + m_d + m_w)
            * q.fauna_growth
            * boost
            * (-f_w)
            / q.carrying_capacity;
        let minus_a0 = m_d * q.diet_fraction * q.hunting_rate * one_a * q.fauna_growth
            * (1.0 + f_w / (one_a * q.carrying_capacity))
            * f_w;
        a2a1 + minus_a0
    } else {
        let m = p.migration_ratio();
        let fw_shift = net / (q.diet_fraction * q.hunting_rate * m) + f_w;
        let a1 = -(net + m_d + m_w) * q.fauna_growth * boost * f_w / q.carrying_capacity
            + fw_shift * q.diet_fraction * q.hunting_rate * m_d;
        let (_, _, _c) = pf_coeffs(p);
        let disc = pf_roots(p).map(|r| r.discriminant).unwrap_or(f64::NAN);
        let bracket = disc.sqrt() / (q.diet_fraction * q.fauna_growth)
            - q.immigration * q.human_boost
                / (q.hunting_rate * q.carrying_capacity * q.diet_fraction)
            - q.human_boost * h_w / q.carrying_capacity * fw_shift;
        a2 * a1 + m_d * q.hunting_rate * q.diet_fraction * q.fauna_growth * bracket * f_w
    }
}

/// Which published form of the critical hunting rate to evaluate; the two
/// differ in one factor inside the square root and only one of them is the
/// exact root of the stability polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaStarVariant {
    /// The derivation's final formula; exact root of `p_delta_stab`.
    Appendix,
    /// The summary-statement formula (carries a spurious 1/e).
    MainText,
}

/// The stability polynomial in the hunting rate, valid for zero immigration
/// and zero human boost: delta_stab > 0 iff this is negative.
pub fn p_delta_stab(p: &ValidParams, lambda: f64) -> f64 {
    let q = p.raw();
    let net = p.net_mortality();
    let t = net + q.mig_to_wild + q.mig_to_domestic;
    let one_a = 1.0 - q.anthropisation;
    let a = one_a * q.carrying_capacity * q.mig_to_wild * q.diet_fraction;
    let b = t * t + net * q.mig_to_domestic;
    let c = q.fauna_growth * net * q.mig_to_domestic * t
        / (q.carrying_capacity * q.mig_to_wild * q.diet_fraction);
    (a * lambda - b) * lambda - c
}

/// Evaluate one variant of the critical hunting rate formula.
pub fn lambda_star_variant(p: &ValidParams, variant: LambdaStarVariant) -> f64 {
    let q = p.raw();
    let net = p.net_mortality();
    let t = net + q.mig_to_wild + q.mig_to_domestic;
    let one_a = 1.0 - q.anthropisation;
    let prefactor = q.mig_to_domestic * net + t * t;
    let inner_denom = match variant {
        LambdaStarVariant::Appendix => q.mig_to_domestic * net + t * t,
        LambdaStarVariant::MainText => q.mig_to_domestic * net / q.diet_fraction + t * t,
    };
    let inner = 1.0
        + 4.0 * one_a * q.mig_to_domestic * q.fauna_growth * net * t / (inner_denom * inner_denom);
    prefactor * (1.0 + inner.sqrt())
        / (2.0 * q.diet_fraction * q.mig_to_wild * one_a * q.carrying_capacity)
}

/// The critical hunting rate separating global coexistence from the limit
/// cycle when immigration and human boost are both zero. Uses the variant
/// that is the exact root of [`p_delta_stab`] (selected by the sign oracle,
/// see the tests).
pub fn lambda_star(p: &ValidParams) -> Result<f64, EquilibriaError> {
    let q = p.raw();
    if q.immigration != 0.0 || q.human_boost != 0.0 {
        return Err(EquilibriaError::LambdaStarDomain);
    }
    Ok(lambda_star_variant(p, LambdaStarVariant::Appendix))
}

/// Every threshold the classification needs, bundled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    pub n_threshold: f64,
    pub lambda_bound: LambdaBound,
    pub beta_star: f64,
    /// Present when the coexistence equilibrium exists.
    pub delta_stab: Option<DeltaStab>,
    /// Present only for zero immigration and zero human boost.
    pub lambda_star: Option<f64>,
}

pub fn thresholds(p: &ValidParams) -> ThresholdReport {
    let q = p.raw();
    ThresholdReport {
        n_threshold: threshold_n(p),
        lambda_bound: lambda_bounds(p),
        beta_star: p.beta_star(),
        delta_stab: delta_stab(p).ok(),
        lambda_star: if q.immigration == 0.0 && q.human_boost == 0.0 {
            Some(lambda_star_variant(p, LambdaStarVariant::Appendix))
        } else {
            None
        },
    }
}

/// Relative residual of the full vector field at a state, normalised by
/// the state magnitude plus one.
pub fn relative_residual(p: &ValidParams, state: &StateFull) -> f64 {
    let r = rhs_full_raw(p, &state.as_array());
    let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let scale = (state.as_array().iter().map(|x| x * x).sum::<f64>()).sqrt() + 1.0;
    norm / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn baseline(lambda: f64, immigration: f64) -> ValidParams {
        ModelParams::baseline(lambda, 0.0, 0.0, immigration).validate().unwrap()
    }

    #[test]
    fn threshold_examples() {
        // zero hunting cannot sustain coexistence
        let p = baseline(1e-300, 0.0);
        assert!(threshold_n(&p) < 1e-200);
        // baseline with immigration, by hand: 0.8 * (0.015/0.2) / 0.01425
        let p = baseline(0.01425, 1.0);
        assert!((threshold_n(&p) - 4.2105263157894735).abs() < 1e-12);
    }

    #[test]
    fn threshold_fig3_value_differs_from_printed_one() {
        // the printed value for this parameter set is 287.17; direct
        // evaluation of the formula gives about 28.18 (both exceed 1)
        let p = ModelParams {
            immigration: 0.0,
            diet_fraction: 0.2,
            food_production: 0.0,
            mortality: 0.02,
            mig_to_wild: 0.0019,
            mig_to_domestic: 0.066,
            fauna_growth: 0.6,
            carrying_capacity: 7250.0,
            anthropisation: 0.1,
            human_boost: 0.0,
            hunting_rate: 0.015,
            epsilon: 1.0 / 365.0,
        }
        .validate()
        .unwrap();
        let n = threshold_n(&p);
        assert!((n - 28.176136363636363).abs() / n < 1e-12);
        assert!(n > 1.0);
    }

    #[test]
    fn lambda_bounds_invert_threshold() {
        for (lam, imm) in [(0.01425, 0.0), (0.01425, 1.0), (0.03, 0.25)] {
            let p = baseline(lam, imm);
            let bound = lambda_bounds(&p).value();
            let at_bound = baseline(bound, imm);
            assert!((threshold_n(&at_bound) - 1.0).abs() < 1e-12);
        }
        // with immigration 1 the upper bound is 0.8 * 0.075 = 0.06
        assert!((lambda_bounds(&baseline(0.01425, 1.0)).value() - 0.06).abs() < 1e-15);
        // halving the pristine habitat doubles the minimum viable hunting rate
        let at = |alpha: f64| {
            ModelParams::baseline(0.01425, alpha, 0.0, 0.0)
                .validate()
                .map(|p| lambda_bounds(&p).value())
                .unwrap()
        };
        assert!((at(0.5) - 2.0 * at(0.0)).abs() < 1e-15 * at(0.5));
    }

    #[test]
    fn coexistence_closed_form_without_immigration() {
        let p = baseline(0.01425, 0.0);
        let eq = coexistence(&p).unwrap();
        assert!((eq.fauna - 13.157894736842104).abs() < 1e-9);
        assert!((eq.h_domestic - 280.18929824561403).abs() < 1e-6);
        assert!((eq.h_wild - 0.2 * eq.h_domestic).abs() < 1e-12 * eq.h_domestic);
        assert!(relative_residual(&p, &eq) < 1e-9);
    }

    #[test]
    fn human_only_equilibrium_with_immigration() {
        let p = baseline(0.01425, 1.0);
        let reports = equilibria_all(&p);
        let human = reports.iter().find(|r| r.kind == EquilibriumKind::HumanOnly).unwrap();
        assert!((human.state.h_domestic - 66.66666666666667).abs() < 1e-9);
        assert!((human.state.h_wild - 13.333333333333334).abs() < 1e-9);
        assert_eq!(human.state.fauna, 0.0);
        // coexistence exists here (N > 1) and the human-only point is unstable
        assert_eq!(human.local_stability, Stability::Unstable);
        assert!(reports.iter().any(|r| r.kind == EquilibriumKind::Coexistence));
    }

    #[test]
    fn coexistence_absent_at_threshold_boundary() {
        let p = baseline(0.01425, 0.0);
        let min = lambda_bounds(&p).value();
        let at_min = baseline(min, 0.0);
        assert!(coexistence(&at_min).is_none());
        let reports = equilibria_all(&at_min);
        assert_eq!(reports.len(), 2);
    }

    #[test]
    fn pf_identity_at_effective_capacity() {
        let p = baseline(0.01425, 1.0);
        let val = pf_eval(&p, p.effective_capacity());
        assert!((val + 1.0).abs() < 1e-10, "P((1-a)K) = {val}, expected -I = -1");
        let r = pf_roots(&p).unwrap();
        assert!(r.discriminant > 0.0);
        assert!(r.root_low < p.effective_capacity() && p.effective_capacity() < r.root_high);
    }

    #[test]
    fn pf_zero_immigration_factorisation() {
        let p = baseline(0.01425, 0.0);
        let r = pf_roots(&p).unwrap();
        let expected_low = 0.015 / (0.4 * 0.01425 * 0.2);
        assert_eq!(r.root_low, expected_low.min(7200.0));
        assert_eq!(r.root_high, 7200.0f64.max(expected_low));
    }

    #[test]
    fn pf_second_identity_without_boost() {
        // with beta = 0 the quadratic takes the value -I at net/(lambda m e)
        let p = baseline(0.02, 0.5);
        let q = p.raw();
        let x = p.net_mortality() / (q.hunting_rate * p.migration_ratio() * q.diet_fraction);
        assert!((pf_eval(&p, x) + q.immigration).abs() < 1e-10 * q.immigration.max(1.0));
    }

    #[test]
    fn routh_hurwitz_direct_cases() {
        // eigenvalues {-1,-2,-3}: chi = X^3 + 6X^2 + 11X + 6
        assert_eq!(routh_hurwitz_3(6.0, 11.0, 6.0), Stability::Las);
        // eigenvalues {1,-2,-3}: chi = X^3 + 4X^2 + X - 6
        assert_eq!(routh_hurwitz_3(4.0, 1.0, -6.0), Stability::Unstable);
        // exact Hopf boundary: a2*a1 = a0
        assert_eq!(routh_hurwitz_3(2.0, 3.0, 6.0), Stability::Indeterminate);
        assert_eq!(routh_hurwitz_2(-1.0, 1.0), Stability::Las);
        assert_eq!(routh_hurwitz_2(1.0, 1.0), Stability::Unstable);
        assert_eq!(routh_hurwitz_2(0.0, 1.0), Stability::Indeterminate);
    }

    #[test]
    fn compet_jacobian_at_origin_is_block_diagonal() {
        let p = baseline(0.01425, 0.0);
        let j = jacobian(&p, Formulation::Compet, &[0.0, 0.0, 0.0]).three();
        let q = p.raw();
        assert_eq!(j[0][0], q.food_production - q.mortality - q.mig_to_wild);
        assert_eq!(j[1][1], q.fauna_growth);
        assert_eq!(j[2][2], -q.mig_to_domestic);
        assert_eq!(j[1][0], 0.0);
        assert_eq!(j[1][2], 0.0);
        assert_eq!(j[0][1], 0.0);
    }

    #[test]
    fn reduced_jacobian_at_fauna_only_is_lower_triangular() {
        let p = baseline(0.01425, 0.0);
        let cap = p.effective_capacity();
        let j = jacobian(&p, Formulation::Reduced, &[0.0, cap, 0.0]).two();
        let q = p.raw();
        let m = p.migration_ratio();
        assert_eq!(j[0][1], 0.0);
        let expected = (-(p.net_mortality()) + q.diet_fraction * q.hunting_rate * m * cap)
            / (1.0 + m);
        assert!((j[0][0] - expected).abs() < 1e-15 * expected.abs());
        assert!((j[1][1] + (1.0 - q.anthropisation) * q.fauna_growth).abs() < 1e-12);
    }

    #[test]
    fn delta_stab_signs_match_figures() {
        // frozen from the closed-form evaluation: the two no-immigration
        // cycle scenarios are unstable, the immigration one is stable
        let d = delta_stab(&baseline(0.0116, 0.0)).unwrap();
        assert!(!d.discrepancy);
        assert!((d.value() + 0.0050526).abs() < 1e-4);
        let d = delta_stab(&baseline(0.01425, 0.0)).unwrap();
        assert!(d.value() < 0.0 && !d.discrepancy);
        let d = delta_stab(&baseline(0.01425, 0.1)).unwrap();
        assert!(d.value() < 0.0 && !d.discrepancy);
        let d = delta_stab(&baseline(0.01425, 1.0)).unwrap();
        assert!((d.value() - 0.0630615).abs() < 1e-4 && !d.discrepancy);
    }

    #[test]
    fn delta_stab_requires_coexistence() {
        let p = baseline(0.1, 1.0); // N < 1 here
        assert!(threshold_n(&p) < 1.0);
        assert!(matches!(delta_stab(&p), Err(EquilibriaError::NoCoexistence { .. })));
    }

    #[test]
    fn delta_stab_positive_for_fast_migration() {
        // scaling both migration rates by 1/eps with eps = 1e-6 puts the
        // system deep in the fast-migration regime where a2*a1 dominates
        let p = baseline(0.01425, 0.0).with_migration_scaled(1e6).unwrap();
        let d = delta_stab(&p).unwrap();
        assert!(d.value() > 0.0);
        assert!(!d.discrepancy);
    }

    #[test]
    fn lambda_star_is_exact_root_of_stability_polynomial() {
        let p = baseline(0.01425, 0.0);
        let ls = lambda_star(&p).unwrap();
        assert!((ls - 0.010417815).abs() < 1e-6);
        let scale = (p.net_mortality() + p.raw().mig_to_wild + p.raw().mig_to_domestic).powi(2) * ls;
        assert!(p_delta_stab(&p, ls).abs() < 1e-8 * scale);
        // the main-text variant is close but not a root
        let main = lambda_star_variant(&p, LambdaStarVariant::MainText);
        assert!(p_delta_stab(&p, main).abs() > 1e-10 * scale);
    }

    #[test]
    fn lambda_star_domain_errors() {
        assert!(matches!(lambda_star(&baseline(0.01, 1.0)), Err(EquilibriaError::LambdaStarDomain)));
        let p = ModelParams::baseline(0.01, 0.0, 1e-5, 0.0).validate().unwrap();
        assert!(matches!(lambda_star(&p), Err(EquilibriaError::LambdaStarDomain)));
    }

    #[test]
    fn thresholds_bundle_fields() {
        let t = thresholds(&baseline(0.01425, 0.0));
        assert!(t.lambda_star.is_some());
        assert!(t.delta_stab.is_some());
        assert!(matches!(t.lambda_bound, LambdaBound::Min(_)));
        let t = thresholds(&baseline(0.01425, 1.0));
        assert!(t.lambda_star.is_none());
        assert!(matches!(t.lambda_bound, LambdaBound::Max(_)));
    }
}
