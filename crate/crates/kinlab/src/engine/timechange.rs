//! Inelastic boundary behaviour built from the free path.
//!
//! The particle absorbed at the boundary and released by its own noise
//! is not simulated directly. Instead the free path `Y` is reflected on
//! its running infimum, `C = Y - min(0, inf Y)`, the time spent at zero
//! is cut out through the additive clock `A_t = Leb{s <= t : C_s > 0}`,
//! and the process is read along the right-continuous inverse of `A`.
//!
//! Zero detection uses a tolerance of `1e-12` times the path scale,
//! since float reflection rarely produces exact zeros.

use super::{BoundaryEvent, EngineError, EventKind, PathSample, RngStream, SimGrid};
use crate::model::ForceField;
use rand::Rng;
use rand_distr::StandardNormal;

/// Result of removing the time spent at zero from a reflected path.
#[derive(Debug, Clone)]
pub struct TimeChanged {
    /// The time-changed path on a fresh uniform grid with the input
    /// node spacing; its total span is the accumulated active time.
    pub path: PathSample,
    /// Active time divided by the input time span.
    pub active_fraction: f64,
}

/// Streaming readout of the inelastic process at one active-time target.
#[derive(Debug, Clone, Copy)]
pub struct InelasticReadout {
    /// Value of the time-changed position at the target.
    pub value: f64,
    /// Whether the active clock reached the target before the horizon.
    pub reached: bool,
    /// Target active time over the wall-clock time it took to reach it
    /// (or accumulated active time over the horizon when censored).
    pub active_fraction: f64,
}

/// Reflects a path on its running infimum: `x_i - min(0, min_{j<=i} x_j)`.
/// Velocities and events are carried over unchanged.
pub fn reflect_on_infimum(p: &PathSample) -> PathSample {
    let mut out = PathSample::with_capacity(p.len());
    let mut runmin = 0.0f64;
    for i in 0..p.len() {
        runmin = runmin.min(p.x[i]);
        out.push_node(p.times[i], p.x[i] - runmin, p.v[i]);
    }
    out.events = p.events.clone();
    out
}

fn zero_tolerance(xcal: &[f64]) -> f64 {
    let scale = xcal.iter().cloned().fold(0.0f64, f64::max);
    1e-12 * scale.max(1.0)
}

/// Builds the inelastic path from a free one: reflect on the running
/// infimum, accumulate the active clock, then sample along the inverse
/// clock on a fresh uniform grid. A grid interval counts as active when
/// the reflected path is off zero at its right node; with that rule a
/// path that starts at the boundary and escapes immediately loses no
/// time, so strictly positive motion is reproduced identically. Entries
/// into the zero set become `hit_zero` events in the new time, with
/// `v_in` the entry velocity and `v_out` the velocity at re-emergence.
pub fn inelastic_from_free(p: &PathSample) -> TimeChanged {
    assert!(p.len() >= 1, "empty path");
    let n = p.len();
    let mut runmin = 0.0f64;
    let mut xcal = Vec::with_capacity(n);
    for &x in &p.x {
        runmin = runmin.min(x);
        xcal.push(x - runmin);
    }
    let tol = zero_tolerance(&xcal);

    // Active clock at the nodes, right-endpoint rule.
    let mut clock = Vec::with_capacity(n);
    clock.push(0.0f64);
    for i in 0..n - 1 {
        let grow = if xcal[i + 1] > tol { p.times[i + 1] - p.times[i] } else { 0.0 };
        clock.push(clock[i] + grow);
    }
    let a_end = *clock.last().unwrap();
    let span = p.times[n - 1] - p.times[0];
    let active_fraction = if span > 0.0 { a_end / span } else { 0.0 };

    let dt_out = if n >= 2 { p.times[1] - p.times[0] } else { 0.0 };
    let mut path = PathSample::default();
    if a_end <= 0.0 || dt_out <= 0.0 {
        path.push_node(0.0, 0.0, p.v[0]);
        return TimeChanged {
            path,
            active_fraction,
        };
    }

    // Right-continuous inverse: T(tau) = first time the clock exceeds tau.
    let n_out = (a_end / dt_out).floor() as usize;
    for j in 0..=n_out {
        let tau = j as f64 * dt_out;
        let idx = clock.partition_point(|&a| a <= tau);
        let (val, vel) = if idx >= n {
            (xcal[n - 1], p.v[n - 1])
        } else {
            let i = idx - 1;
            let t_at = p.times[i] + (tau - clock[i]);
            let u = ((t_at - p.times[i]) / (p.times[i + 1] - p.times[i])).clamp(0.0, 1.0);
            (
                xcal[i] + u * (xcal[i + 1] - xcal[i]),
                p.v[i] + u * (p.v[i + 1] - p.v[i]),
            )
        };
        path.push_node(tau, val, vel);
    }

    // Entries into the zero set, reported in the new time coordinate.
    let mut events = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        if xcal[i] > tol && xcal[i + 1] <= tol {
            let mut j = i + 1;
            while j < n && xcal[j] <= tol {
                j += 1;
            }
            let v_out = if j < n { p.v[j] } else { p.v[n - 1] };
            events.push(BoundaryEvent {
                time: clock[i + 1],
                kind: EventKind::HitZero,
                v_in: p.v[i + 1],
                v_out,
            });
            i = j;
        } else {
            i += 1;
        }
    }
    path.events = events;
    TimeChanged {
        path,
        active_fraction,
    }
}

/// Streams one free path and reads the time-changed position at active
/// time `target`, stopping as soon as the clock gets there. Zero
/// tolerance tracks the running path scale, which can differ from the
/// whole-path tolerance of [`inelastic_from_free`] only for values
/// within a relative `1e-12` band of zero.
pub fn simulate_inelastic_marginal(
    ff: &ForceField,
    v0: f64,
    dt: f64,
    target: f64,
    max_horizon: f64,
    stream: &RngStream,
) -> Result<InelasticReadout, EngineError> {
    assert!(target > 0.0 && max_horizon > 0.0);
    let grid = SimGrid::new(dt, max_horizon);
    grid.validate_for(ff)?;
    let n = grid.n_steps();
    let mut rng = stream.brownian();
    let sqrt_dt = dt.sqrt();
    let mut x = 0.0f64;
    let mut v = v0;
    let mut runmin = 0.0f64;
    let mut scale = 1.0f64;
    let mut clock = 0.0f64;
    let mut prev_xcal = 0.0f64;
    for k in 0..n {
        let db = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let (x_next, v_next) = super::em_step(ff, x, v, dt, db);
        if !(x_next.is_finite() && v_next.is_finite()) {
            return Err(EngineError::NonFiniteState {
                step: k + 1,
                x: x_next,
                v: v_next,
            });
        }
        runmin = runmin.min(x_next);
        let xcal_next = x_next - runmin;
        scale = scale.max(xcal_next);
        let tol = 1e-12 * scale;
        if xcal_next > tol {
            let grown = clock + dt;
            if grown > target {
                let u = (target - clock) / dt;
                let t_star = k as f64 * dt + u * dt;
                return Ok(InelasticReadout {
                    value: prev_xcal + u * (xcal_next - prev_xcal),
                    reached: true,
                    active_fraction: (target / t_star.max(f64::MIN_POSITIVE)).min(1.0),
                });
            }
            clock = grown;
        }
        x = x_next;
        v = v_next;
        prev_xcal = xcal_next;
    }
    // The dt accumulation can drift a few ulps past the horizon; the
    // fraction is a time ratio and stays in [0, 1] by definition.
    Ok(InelasticReadout {
        value: prev_xcal,
        reached: false,
        active_fraction: (clock / max_horizon).min(1.0),
    })
}
