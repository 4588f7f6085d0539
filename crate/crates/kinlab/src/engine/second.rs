//! Excursion construction of the reflected process from one free path.
//!
//! Starting from level 0, the machine alternates two phases along the
//! free pair `(X, V)`:
//!
//! * excursion above the current level `l`: ends at `tau_n`, the first
//!   in-step downcrossing of `X` through `l` (linear interpolation),
//!   where a refresh level `M_n` is drawn from the restart law;
//! * stuck: ends at `sigma_n`, the first time `V` upcrosses `M_n`, and
//!   the new level is the interpolated position there.
//!
//! The constructed path is `X - l` during excursions and exactly zero
//! while stuck; the clock `A'` accumulates excursion time. Level
//! readouts clamp the interpolation to the bracketing node values, so
//! the constructed path never exceeds the free path reflected on its
//! running infimum, node for node in exact float arithmetic.

use super::{BoundaryEvent, BoundaryLaw, EngineError, EventKind, PathSample, RngStream, SimGrid};
use crate::model::ForceField;
use rand::Rng;
use rand_distr::StandardNormal;

/// Cap on phase flips resolved within a single step. Zero-length
/// excursions from exact float ties are parked until the next step.
const MAX_TRANSITIONS_PER_STEP: usize = 8;

/// Output of the excursion construction.
#[derive(Debug, Clone)]
pub struct SecondConstruction {
    /// Constructed path: times, values, free velocity, and the
    /// `tau_time` / `sigma_time` event log.
    pub frak: PathSample,
    /// Accumulated excursion time at each recorded node.
    pub aprime: Vec<f64>,
    /// Level downcrossing times, one per started cycle.
    pub taus: Vec<f64>,
    /// Refresh upcrossing times, one per completed cycle.
    pub sigmas: Vec<f64>,
    /// Set when fewer than two complete cycles fit in the horizon.
    pub warning_few_cycles: bool,
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Excursion { level: f64 },
    Stuck { m: f64 },
}

/// Runs the construction from `(0, v0)` over the grid's horizon.
pub fn second_construction(
    ff: &ForceField,
    mu: &BoundaryLaw,
    v0: f64,
    grid: &SimGrid,
    stream: &RngStream,
) -> Result<SecondConstruction, EngineError> {
    assert!(v0 > 0.0, "the construction starts with v0 > 0");
    grid.validate_for(ff)?;
    mu.validate()?;
    let dt = grid.dt;
    let sqrt_dt = dt.sqrt();
    let n = grid.n_steps();
    let stride = grid.record_stride as u64;
    let mut rng_b = stream.brownian();
    let mut rng_r = stream.restarts();

    let mut frak = PathSample::with_capacity((n / stride + 2) as usize);
    let mut aprime = Vec::with_capacity((n / stride + 2) as usize);
    let mut taus = Vec::new();
    let mut sigmas = Vec::new();
    let mut events = Vec::new();

    let mut x = 0.0f64;
    let mut v = v0;
    let mut phase = Phase::Excursion { level: 0.0 };
    let mut clock = 0.0f64;
    frak.push_node(0.0, 0.0, v0);
    aprime.push(0.0);

    for k in 0..n {
        let t = k as f64 * dt;
        let db = sqrt_dt * rng_b.sample::<f64, _>(StandardNormal);
        let (x_next, v_next) = super::em_step(ff, x, v, dt, db);
        if !(x_next.is_finite() && v_next.is_finite()) {
            return Err(EngineError::NonFiniteState {
                step: k + 1,
                x: x_next,
                v: v_next,
            });
        }

        // Resolve phase flips inside the step; th_c is the fraction of
        // the step consumed so far.
        let mut th_c = 0.0f64;
        let mut active = 0.0f64;
        for _ in 0..MAX_TRANSITIONS_PER_STEP {
            match phase {
                Phase::Excursion { level } => {
                    if x_next > level {
                        active += 1.0 - th_c;
                        break;
                    }
                    let th = if x_next < x {
                        ((level - x) / (x_next - x)).clamp(th_c, 1.0)
                    } else {
                        th_c
                    };
                    active += th - th_c;
                    let t_hit = t + th * dt;
                    let v_at = v + th * (v_next - v);
                    let m = mu.sample(&mut rng_r);
                    taus.push(t_hit);
                    events.push(BoundaryEvent {
                        time: t_hit,
                        kind: EventKind::TauTime,
                        v_in: v_at,
                        v_out: m,
                    });
                    phase = Phase::Stuck { m };
                    th_c = th;
                }
                Phase::Stuck { m } => {
                    let v_here = v + th_c * (v_next - v);
                    let th = if v_here >= m {
                        th_c
                    } else if v_next >= m {
                        ((m - v) / (v_next - v)).clamp(th_c, 1.0)
                    } else {
                        break;
                    };
                    let t_hit = t + th * dt;
                    // Clamp the level to the node bracket so it cannot
                    // round below the running infimum.
                    let raw = x + th * (x_next - x);
                    let level_new = raw.clamp(x.min(x_next), x.max(x_next));
                    sigmas.push(t_hit);
                    events.push(BoundaryEvent {
                        time: t_hit,
                        kind: EventKind::SigmaTime,
                        v_in: m,
                        v_out: m,
                    });
                    phase = Phase::Excursion { level: level_new };
                    th_c = th;
                }
            }
        }
        clock += active * dt;

        x = x_next;
        v = v_next;
        if (k + 1) % stride == 0 || k + 1 == n {
            let value = match phase {
                Phase::Excursion { level } => (x - level).max(0.0),
                Phase::Stuck { .. } => 0.0,
            };
            frak.push_node((k + 1) as f64 * dt, value, v);
            aprime.push(clock);
        }
    }

    frak.events = events;
    let warning_few_cycles = sigmas.len() < 2;
    Ok(SecondConstruction {
        frak,
        aprime,
        taus,
        sigmas,
        warning_few_cycles,
    })
}
