//! Adaptive embedded Runge-Kutta integration of the three formulations.
//!
//! A Dormand-Prince 5(4) pair with FSAL drives all simulations. The
//! controller enforces `|local error| <= rel_tol * |y| + abs_tol` per
//! component. States are kept inside the biological sign domain: a step
//! landing further than `abs_tol` on the wrong side of zero is rejected
//! and retried at half the step, while sub-`abs_tol` undershoot is
//! clamped to zero. Deep fauna troughs (the atto-fox regime) therefore
//! need a small `abs_tol` so that error control stays relative.

use crate::equilibria::{equilibria_all, EquilibriumKind};
use crate::model::{region_bounds, rhs_raw, Formulation, ValidParams};
use thiserror::Error;

/// Integration tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Final time (years).
    pub t_end: f64,
    pub max_steps: usize,
    pub min_step: f64,
    /// Keep every n-th accepted step (the last one is always kept).
    pub record_stride: usize,
    /// Relative distance to a known equilibrium that counts as captured.
    pub eq_capture_tol: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            t_end: 100.0,
            max_steps: 50_000_000,
            min_step: 1e-12,
            record_stride: 1,
            eq_capture_tol: 1e-9,
        }
    }
}

impl IntegrationConfig {
    pub fn with_t_end(t_end: f64) -> Self {
        IntegrationConfig { t_end, ..Default::default() }
    }

    /// Tolerances suited to trajectories whose fauna component passes
    /// through extremely small positive values: the absolute floor is
    /// lowered so error control stays relative through the trough.
    pub fn deep_trough(t_end: f64) -> Self {
        IntegrationConfig { rel_tol: 1e-9, abs_tol: 1e-30, t_end, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// The state left the invariant region by more than 1e-9 relative.
    RegionExit { relative_excess: f64 },
    /// The state has stayed within `eq_capture_tol` of a known equilibrium
    /// for at least [`CAPTURE_STEPS`] consecutive accepted steps.
    EquilibriumCapture { kind: EquilibriumKind },
    /// The controller wanted a step below `min_step`; integration
    /// continued at the floor.
    StepFloorHit,
}

/// Consecutive accepted steps near an equilibrium required for a capture event.
pub const CAPTURE_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Time-stamped solution with recorded events.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub formulation: Formulation,
    pub times: Vec<f64>,
    pub states: Vec<[f64; 3]>,
    pub events: Vec<Event>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.formulation.dim()
    }

    pub fn last_state(&self) -> [f64; 3] {
        *self.states.last().expect("trajectory is never empty")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// Cubic-Hermite interpolation at time `t` (derivatives recomputed
    /// from the vector field). Requires `record_stride == 1` output for
    /// full accuracy; clamps outside the recorded range.
    pub fn sample(&self, p: &ValidParams, t: f64) -> [f64; 3] {
        let times = &self.times;
        if t <= times[0] {
            return self.states[0];
        }
        if t >= *times.last().unwrap() {
            return *self.states.last().unwrap();
        }
        let idx = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.states[i],
            Err(i) => i - 1,
        };
        let (t0, t1) = (times[idx], times[idx + 1]);
        let h = t1 - t0;
        let y0 = self.states[idx];
        let y1 = self.states[idx + 1];
        let f0 = rhs_raw(p, self.formulation, &y0);
        let f1 = rhs_raw(p, self.formulation, &y1);
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("initial state violates the {0:?} sign domain at component {component}: {value}")]
    InvalidInitialState { 0: Formulation, component: usize, value: f64 },
    #[error("maximum step count {max_steps} exceeded at t = {t_reached}")]
    MaxStepsExceeded { max_steps: usize, t_reached: f64 },
    #[error("step size underflow at t = {t_reached} with no progress possible")]
    StepUnderflow { t_reached: f64 },
    #[error("non-finite state encountered at t = {t_reached}")]
    NonFinite { t_reached: f64 },
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Relative per-component distance to an equilibrium, normalised by
/// `max(1, |equilibrium component|)`; plain Euclidean norm of the
/// normalised differences. The normalisation uses the second argument.
pub fn distance_to(state: &[f64; 3], equilibrium: &[f64; 3], dim: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..dim {
        let d = (state[i] - equilibrium[i]) / equilibrium[i].abs().max(1.0);
        acc += d * d;
    }
    acc.sqrt()
}

/// Integrate `formulation` from `y0` (raw coordinates; third component
/// ignored for the reduced system) until `config.t_end`.
pub fn integrate(
    p: &ValidParams,
    formulation: Formulation,
    y0: [f64; 3],
    config: &IntegrationConfig,
) -> Result<Trajectory, IntegrateError> {
    let dim = formulation.dim();
    let signs = formulation.signs();
    for i in 0..dim {
        if signs[i] * y0[i] < 0.0 && signs[i] * y0[i] >= -crate::model::DUST {
            // dust is cleaned below
        } else if signs[i] * y0[i] < 0.0 {
            return Err(IntegrateError::InvalidInitialState {
                0: formulation,
                component: i,
                value: y0[i],
            });
        }
    }
    let mut y = y0;
    for i in 0..dim {
        if signs[i] * y[i] < 0.0 {
            y[i] = 0.0;
        }
    }
    for v in y.iter_mut().skip(dim) {
        *v = 0.0;
    }

    // equilibria in this formulation's coordinates, for capture events
    let known: Vec<(EquilibriumKind, [f64; 3])> = equilibria_all(p)
        .into_iter()
        .map(|r| {
            let s = r.state;
            let m = p.migration_ratio();
            let arr = match formulation {
                Formulation::Full => [s.h_domestic, s.fauna, s.h_wild],
                Formulation::Reduced => [s.h_domestic, s.fauna, 0.0],
                Formulation::Compet => [s.h_domestic, -s.fauna, -m * s.h_domestic],
            };
            (r.kind, arr)
        })
        .collect();
    let bounds = region_bounds(p);

    let mut traj = Trajectory {
        formulation,
        times: Vec::new(),
        states: Vec::new(),
        events: Vec::new(),
        steps_accepted: 0,
        steps_rejected: 0,
    };
    traj.times.push(0.0);
    traj.states.push(y);

    let mut t = 0.0;
    let mut f_now = rhs_raw(p, formulation, &y);
    let mut h = initial_step(p, formulation, &y, &f_now, config);
    let mut near_eq_streak = 0usize;
    let mut captured: Option<EquilibriumKind> = None;
    let mut floor_reported = false;
    let mut region_outside = false;
    let mut since_record = 0usize;
    let mut k = [[0.0f64; 3]; 7];

    while t < config.t_end {
        if traj.steps_accepted + traj.steps_rejected >= config.max_steps {
            return Err(IntegrateError::MaxStepsExceeded {
                max_steps: config.max_steps,
                t_reached: t,
            });
        }
        if h > config.t_end - t {
            h = config.t_end - t;
        }
        let at_floor = h <= config.min_step;
        if at_floor {
            h = config.min_step.min(config.t_end - t);
            if !floor_reported {
                traj.events.push(Event { time: t, kind: EventKind::StepFloorHit });
                floor_reported = true;
            }
        }

        // stages (k[0] is FSAL from the previous step)
        k[0] = f_now;
        for s in 1..7 {
            let mut ys = y;
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ys[i] = y[i] + h * acc;
            }
            let _ = C; // stage times unused: the field is autonomous
            k[s] = rhs_raw(p, formulation, &ys);
        }
        // 5th-order solution is stage 7's argument (A[6] row = b weights)
        let mut y_new = y;
        for i in 0..dim {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                acc += A[6][j] * kj[i];
            }
            y_new[i] = y[i] + h * acc;
        }
        let f_new = rhs_raw(p, formulation, &y_new);
        k[6] = f_new;

        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let scale = config.abs_tol + config.rel_tol * y[i].abs().max(y_new[i].abs());
            let r = e / scale;
            err_sq += r * r;
        }
        let err = (err_sq / dim as f64).sqrt();

        if !err.is_finite() || y_new.iter().take(dim).any(|v| !v.is_finite()) {
            if at_floor {
                return Err(IntegrateError::NonFinite { t_reached: t });
            }
            h = (h * 0.25).max(config.min_step);
            traj.steps_rejected += 1;
            continue;
        }

        // domain guard: overshoot beyond abs_tol rejects the step
        let mut domain_reject = false;
        for i in 0..dim {
            let v = signs[i] * y_new[i];
            if v < -config.abs_tol {
                domain_reject = true;
            }
        }
        if domain_reject && !at_floor {
            h = (h * 0.5).max(config.min_step);
            traj.steps_rejected += 1;
            continue;
        }

        if err <= 1.0 || at_floor {
            // accept; clamp sub-tolerance undershoot onto the boundary
            let mut clamped = false;
            for i in 0..dim {
                if signs[i] * y_new[i] < 0.0 {
                    y_new[i] = 0.0;
                    clamped = true;
                }
            }
            t += h;
            y = y_new;
            f_now = if clamped { rhs_raw(p, formulation, &y) } else { f_new };
            traj.steps_accepted += 1;

            since_record += 1;
            if since_record >= config.record_stride || t >= config.t_end {
                traj.times.push(t);
                traj.states.push(y);
                since_record = 0;
            }

            // region monitoring (full coordinates)
            let full_coords = match formulation {
                Formulation::Compet => [y[0], -y[1], -y[2]],
                _ => y,
            };
            let check = bounds.check(p, &full_coords);
            if check.max_relative_excess > 1e-9 {
                if !region_outside {
                    traj.events.push(Event {
                        time: t,
                        kind: EventKind::RegionExit { relative_excess: check.max_relative_excess },
                    });
                }
                region_outside = true;
            } else {
                region_outside = false;
            }

            // equilibrium capture
            let near = known
                .iter()
                .find(|(_, eq)| distance_to(&y, eq, dim) < config.eq_capture_tol)
                .map(|(kind, _)| *kind);
            match near {
                Some(kind) => {
                    near_eq_streak += 1;
                    if near_eq_streak >= CAPTURE_STEPS && captured != Some(kind) {
                        traj.events.push(Event { time: t, kind: EventKind::EquilibriumCapture { kind } });
                        captured = Some(kind);
                    }
                }
                None => {
                    near_eq_streak = 0;
                    captured = None;
                }
            }

            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(config.t_end.max(1.0));
        } else {
            traj.steps_rejected += 1;
            let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            let h_new = h * factor;
            if h_new < config.min_step && at_floor {
                // already at the floor and still failing accuracy: carry on
                // at the floor (handled next iteration via at_floor accept)
            }
            h = h_new.max(config.min_step);
        }
    }

    // ensure the final state is recorded
    if *traj.times.last().unwrap() < t {
        traj.times.push(t);
        traj.states.push(y);
    }
    Ok(traj)
}

/// Crude but robust initial step: a fraction of the fastest local scale.
fn initial_step(
    p: &ValidParams,
    f: Formulation,
    y: &[f64; 3],
    f0: &[f64; 3],
    config: &IntegrationConfig,
) -> f64 {
    let dim = f.dim();
    let mut rate: f64 = 0.0;
    for i in 0..dim {
        let scale = y[i].abs().max(1.0);
        rate = rate.max(f0[i].abs() / scale);
    }
    let q = p.raw();
    rate = rate.max(q.mig_to_domestic).max(q.mig_to_wild).max(q.mortality);
    (0.01 / rate).clamp(config.min_step, config.t_end / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn baseline(lambda: f64, immigration: f64) -> ValidParams {
        ModelParams::baseline(lambda, 0.0, 0.0, immigration).validate().unwrap()
    }

    #[test]
    fn equilibrium_start_stays_put() {
        let p = baseline(0.01425, 1.0);
        let eq = equilibria_all(&p)
            .into_iter()
            .find(|r| r.kind == EquilibriumKind::Coexistence)
            .unwrap()
            .state;
        let traj = integrate(
            &p,
            Formulation::Full,
            eq.as_array(),
            &IntegrationConfig::with_t_end(100.0),
        )
        .unwrap();
        let d = distance_to(&traj.last_state(), &eq.as_array(), 3);
        assert!(d < 1e-6, "drifted {d} from the equilibrium");
    }

    #[test]
    fn logistic_subproblem_matches_closed_form() {
        let p = baseline(0.01425, 0.0);
        let cap = p.effective_capacity();
        let growth = (1.0 - p.raw().anthropisation) * p.raw().fauna_growth;
        let f0 = cap / 2.0;
        let cfg = IntegrationConfig::with_t_end(30.0);
        let traj = integrate(&p, Formulation::Full, [0.0, f0, 0.0], &cfg).unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            let expected = cap / (1.0 + (cap / f0 - 1.0) * (-growth * t).exp());
            let got = traj.states[i][1];
            assert!(
                (got - expected).abs() < 1e-6 * expected,
                "t={t}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn tolerance_refinement_reduces_error() {
        let p = baseline(0.01425, 0.0);
        let cap = p.effective_capacity();
        let growth = (1.0 - p.raw().anthropisation) * p.raw().fauna_growth;
        let f0 = cap / 10.0;
        let t_end = 20.0;
        let exact = cap / (1.0 + (cap / f0 - 1.0) * (-growth * t_end).exp());
        let err_at = |rel: f64, abs: f64| {
            let cfg = IntegrationConfig {
                rel_tol: rel,
                abs_tol: abs,
                t_end,
                ..Default::default()
            };
            let traj = integrate(&p, Formulation::Full, [0.0, f0, 0.0], &cfg).unwrap();
            (traj.last_state()[1] - exact).abs() / exact
        };
        let coarse = err_at(1e-5, 1e-7);
        let mid = err_at(1e-8, 1e-10);
        let fine = err_at(1e-11, 1e-13);
        assert!(coarse > mid && mid > fine, "{coarse} {mid} {fine}");
        // three decades of tolerance should buy at least two of accuracy
        assert!(fine < mid * 1e-1);
        assert!(mid < 1e-7);
    }

    #[test]
    fn reduced_formulation_uses_two_components() {
        let p = baseline(0.01425, 0.0);
        let traj = integrate(
            &p,
            Formulation::Reduced,
            [200.0, 1000.0, 0.0],
            &IntegrationConfig::with_t_end(50.0),
        )
        .unwrap();
        assert_eq!(traj.dim(), 2);
        assert!(traj.states.iter().all(|s| s[2] == 0.0));
    }

    #[test]
    fn compet_sign_domain_enforced() {
        let p = baseline(0.01425, 0.0);
        let err = integrate(
            &p,
            Formulation::Compet,
            [10.0, 5.0, -1.0],
            &IntegrationConfig::with_t_end(1.0),
        );
        assert!(matches!(err, Err(IntegrateError::InvalidInitialState { component: 1, .. })));
    }

    #[test]
    fn capture_event_fires_at_equilibrium() {
        let p = baseline(0.01425, 1.0);
        let eq = equilibria_all(&p)
            .into_iter()
            .find(|r| r.kind == EquilibriumKind::Coexistence)
            .unwrap()
            .state;
        let traj = integrate(
            &p,
            Formulation::Full,
            eq.as_array(),
            &IntegrationConfig::with_t_end(50.0),
        )
        .unwrap();
        assert!(traj
            .events
            .iter()
            .any(|e| matches!(e.kind, EventKind::EquilibriumCapture { kind: EquilibriumKind::Coexistence })));
    }

    #[test]
    fn max_steps_is_enforced() {
        let p = baseline(0.01425, 0.0);
        let cfg = IntegrationConfig {
            max_steps: 10,
            t_end: 1000.0,
            ..Default::default()
        };
        assert!(matches!(
            integrate(&p, Formulation::Full, [100.0, 1000.0, 20.0], &cfg),
            Err(IntegrateError::MaxStepsExceeded { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_to(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 3), 0.0);
        assert_eq!(distance_to(&[2.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 3), 1.0);
        // normalisation follows the second argument
        let d = distance_to(&[4.0, 0.0, 0.0], &[2.0, 0.0, 0.0], 1);
        assert_eq!(d, 1.0);
        let d_swapped = distance_to(&[2.0, 0.0, 0.0], &[4.0, 0.0, 0.0], 1);
        assert_eq!(d_swapped, 0.5);
    }

    #[test]
    fn hermite_sampling_tracks_solution() {
        let p = baseline(0.01425, 0.0);
        let cap = p.effective_capacity();
        let growth = (1.0 - p.raw().anthropisation) * p.raw().fauna_growth;
        let f0 = cap / 2.0;
        let traj = integrate(
            &p,
            Formulation::Full,
            [0.0, f0, 0.0],
            &IntegrationConfig::with_t_end(30.0),
        )
        .unwrap();
        for k in 0..=300 {
            let t = 30.0 * k as f64 / 300.0;
            let expected = cap / (1.0 + (cap / f0 - 1.0) * (-growth * t).exp());
            let got = traj.sample(&p, t)[1];
            assert!((got - expected).abs() < 1e-5 * expected);
        }
    }
}
