//! Free dynamics on the whole line: no boundary, no restarts.
//!
//! Besides plain path recording this module provides streaming readouts
//! (endpoint plus running extrema at checkpoints) and the velocity
//! hitting-time episodes used by the return-time tail experiments.

use super::{em_step, EngineError, PathSample, RngStream, SimGrid};
use crate::model::ForceField;
use rand::Rng;
use rand_distr::StandardNormal;

/// Endpoint and running extrema of the free position at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeFunctionals {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub running_min: f64,
    pub running_max: f64,
}

/// Outcome of one return episode. `None` means the clock ran out before
/// the corresponding time was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    /// First return time of the position to zero.
    pub tau: f64,
    /// First upcrossing time of the velocity over the refresh level,
    /// not earlier than `tau`.
    pub sigma: f64,
    pub tau_censored: bool,
    pub sigma_censored: bool,
}

/// Runs the free recursion, feeding every node (including the initial
/// one) to `observe(step_index, t, x, v)`.
fn run_free<N, O>(
    ff: &ForceField,
    x0: f64,
    v0: f64,
    dt: f64,
    n_steps: u64,
    noise: &mut N,
    observe: &mut O,
) -> Result<(), EngineError>
where
    N: FnMut() -> f64,
    O: FnMut(u64, f64, f64, f64),
{
    let mut x = x0;
    let mut v = v0;
    observe(0, 0.0, x, v);
    for k in 0..n_steps {
        let (x_next, v_next) = em_step(ff, x, v, dt, noise());
        if !(x_next.is_finite() && v_next.is_finite()) {
            return Err(EngineError::NonFiniteState {
                step: k + 1,
                x: x_next,
                v: v_next,
            });
        }
        x = x_next;
        v = v_next;
        observe(k + 1, (k + 1) as f64 * dt, x, v);
    }
    Ok(())
}

fn gaussian_noise<'a, R: Rng>(rng: &'a mut R, dt: f64) -> impl FnMut() -> f64 + 'a {
    let sqrt_dt = dt.sqrt();
    move || sqrt_dt * rng.sample::<f64, _>(StandardNormal)
}

/// Streams one free path through `observe(step, t, x, v)` without
/// recording anything. The building block for scenario code that wants
/// several readouts from a single pass over a long path.
pub fn simulate_free_observed(
    ff: &ForceField,
    x0: f64,
    v0: f64,
    grid: &SimGrid,
    stream: &RngStream,
    mut observe: impl FnMut(u64, f64, f64, f64),
) -> Result<(), EngineError> {
    grid.validate_for(ff)?;
    let mut rng = stream.brownian();
    let mut noise = gaussian_noise(&mut rng, grid.dt);
    run_free(ff, x0, v0, grid.dt, grid.n_steps(), &mut noise, &mut observe)
}

/// Simulates the free kinetic pair from `(x0, v0)` and records every
/// `record_stride`-th node plus the final one.
pub fn simulate_free(
    ff: &ForceField,
    x0: f64,
    v0: f64,
    grid: &SimGrid,
    stream: &RngStream,
) -> Result<PathSample, EngineError> {
    grid.validate_for(ff)?;
    let mut rng = stream.brownian();
    let mut noise = gaussian_noise(&mut rng, grid.dt);
    let n = grid.n_steps();
    let stride = grid.record_stride as u64;
    let mut path = PathSample::with_capacity((n / stride + 2) as usize);
    run_free(ff, x0, v0, grid.dt, n, &mut noise, &mut |k, t, x, v| {
        if k % stride == 0 || k == n {
            path.push_node(t, x, v);
        }
    })?;
    Ok(path)
}

/// Same recursion with caller-supplied Brownian increments. Exists so
/// tests can freeze the noise (for example to zero) and check the
/// deterministic skeleton in closed form.
pub fn simulate_free_with_noise(
    ff: &ForceField,
    x0: f64,
    v0: f64,
    grid: &SimGrid,
    mut noise: impl FnMut() -> f64,
) -> Result<PathSample, EngineError> {
    grid.validate_for(ff)?;
    let n = grid.n_steps();
    let stride = grid.record_stride as u64;
    let mut path = PathSample::with_capacity((n / stride + 2) as usize);
    run_free(ff, x0, v0, grid.dt, n, &mut noise, &mut |k, t, x, v| {
        if k % stride == 0 || k == n {
            path.push_node(t, x, v);
        }
    })?;
    Ok(path)
}

/// Streams one free path and reads off `(X_t, V_t, min, max)` at each
/// checkpoint without storing the path. Checkpoints must be ascending
/// and are snapped to the nearest node of the `dt`-grid.
pub fn simulate_free_functionals(
    ff: &ForceField,
    x0: f64,
    v0: f64,
    dt: f64,
    checkpoints: &[f64],
    stream: &RngStream,
) -> Result<Vec<FreeFunctionals>, EngineError> {
    let horizon = checkpoints.last().copied().unwrap_or(0.0);
    let grid = SimGrid::new(dt, horizon.max(dt));
    grid.validate_for(ff)?;
    let nodes: Vec<u64> = checkpoints.iter().map(|t| (t / dt).round() as u64).collect();
    debug_assert!(nodes.windows(2).all(|w| w[0] <= w[1]));
    let n = nodes.last().copied().unwrap_or(0);

    let mut rng = stream.brownian();
    let mut noise = gaussian_noise(&mut rng, dt);
    let mut out = Vec::with_capacity(nodes.len());
    let mut cursor = 0usize;
    let mut rmin = x0;
    let mut rmax = x0;
    run_free(ff, x0, v0, dt, n, &mut noise, &mut |k, t, x, v| {
        rmin = rmin.min(x);
        rmax = rmax.max(x);
        while cursor < nodes.len() && nodes[cursor] == k {
            out.push(FreeFunctionals {
                t,
                x,
                v,
                running_min: rmin,
                running_max: rmax,
            });
            cursor += 1;
        }
    })?;
    Ok(out)
}

/// First time the velocity started at `v0 > 0` becomes nonpositive,
/// located by linear interpolation within the crossing step. `None` if
/// it stays positive up to `t_max`.
pub fn velocity_hitting_time_down(
    ff: &ForceField,
    v0: f64,
    dt: f64,
    t_max: f64,
    rng: &mut impl Rng,
) -> Option<f64> {
    assert!(v0 > 0.0 && dt > 0.0);
    let sqrt_dt = dt.sqrt();
    let mut v = v0;
    let mut t = 0.0;
    while t < t_max {
        let db = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let v_next = v + ff.force(v) * dt + db;
        if v_next <= 0.0 {
            // v > 0 >= v_next, so the fraction is in (0, 1].
            let th = v / (v - v_next);
            return Some(t + th * dt);
        }
        v = v_next;
        t += dt;
    }
    None
}

/// First time the velocity started at `0` reaches `level > 0`.
pub fn velocity_hitting_time_up(
    ff: &ForceField,
    level: f64,
    dt: f64,
    t_max: f64,
    rng: &mut impl Rng,
) -> Option<f64> {
    assert!(level > 0.0 && dt > 0.0);
    let sqrt_dt = dt.sqrt();
    let mut v = 0.0;
    let mut t = 0.0;
    while t < t_max {
        let db = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let v_next = v + ff.force(v) * dt + db;
        if v_next >= level {
            let th = (level - v) / (v_next - v);
            return Some(t + th * dt);
        }
        v = v_next;
        t += dt;
    }
    None
}

/// One free return episode from `(0, v0)` with refresh level `m`:
/// `tau` is the first return of the position to zero, `sigma` the first
/// upcrossing of the velocity over `m` at or after `tau`. Both clocks are
/// censored at `t_max` (the flag is set and the cap returned).
///
/// The position leg uses the same parabola root as the reflected
/// simulator; after `tau` only the velocity is advanced since the
/// dynamics do not feed position back into velocity.
pub fn tau_sigma_episode(
    ff: &ForceField,
    v0: f64,
    m: f64,
    dt: f64,
    t_max: f64,
    rng: &mut impl Rng,
) -> EpisodeOutcome {
    assert!(v0 > 0.0 && m > 0.0 && dt > 0.0);
    let sqrt_dt = dt.sqrt();
    let mut x = 0.0;
    let mut v = v0;
    let mut t = 0.0;
    let mut tau = None;
    // Phase 1: track the position until it returns to zero.
    while t < t_max {
        let db = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let (x_next, v_next) = em_step(ff, x, v, dt, db);
        if x_next <= 0.0 {
            let (th, _) = super::locate_parabola_zero(x, v, v_next, dt);
            let tau_t = t + th * dt;
            tau = Some(tau_t);
            // The upcrossing may happen in the tail of this same step, or
            // the velocity may already sit above m at the return time.
            let v_at_tau = v + th * (v_next - v);
            if v_at_tau >= m {
                return EpisodeOutcome {
                    tau: tau_t,
                    sigma: tau_t,
                    tau_censored: false,
                    sigma_censored: false,
                };
            }
            if v_next >= m {
                let th_s = ((m - v) / (v_next - v)).max(th).min(1.0);
                return EpisodeOutcome {
                    tau: tau_t,
                    sigma: t + th_s * dt,
                    tau_censored: false,
                    sigma_censored: false,
                };
            }
            v = v_next;
            t += dt;
            break;
        }
        x = x_next;
        v = v_next;
        t += dt;
    }
    let Some(tau) = tau else {
        return EpisodeOutcome {
            tau: t_max,
            sigma: t_max,
            tau_censored: true,
            sigma_censored: true,
        };
    };
    // Phase 2: velocity only, waiting for the upcrossing of m.
    while t < t_max {
        let db = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let v_next = v + ff.force(v) * dt + db;
        if v_next >= m {
            let th = (m - v) / (v_next - v);
            return EpisodeOutcome {
                tau,
                sigma: t + th * dt,
                tau_censored: false,
                sigma_censored: false,
            };
        }
        v = v_next;
        t += dt;
    }
    EpisodeOutcome {
        tau,
        sigma: t_max,
        tau_censored: false,
        sigma_censored: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ff() -> ForceField {
        ForceField::builtin(2.0).unwrap()
    }

    #[test]
    fn zero_noise_zero_force_is_uniform_motion() {
        // F(0.0 scaled away): use v0 and a force field, but zero velocity
        // keeps the drift at zero for the odd builtin force only at v = 0;
        // instead freeze noise and check the exact two-step recursion.
        let ff = ff();
        let grid = SimGrid::new(0.01, 1.0);
        let path = simulate_free_with_noise(&ff, 0.0, 1.0, &grid, || 0.0).unwrap();
        // Deterministic skeleton: v decays under the restoring force,
        // x accumulates trapezoid increments; reproduce it directly.
        let mut x = 0.0;
        let mut v = 1.0;
        for _ in 0..100 {
            let v2 = v + ff.force(v) * 0.01;
            x += 0.005 * (v + v2);
            v = v2;
        }
        let last = path.len() - 1;
        assert_eq!(path.x[last], x);
        assert_eq!(path.v[last], v);
        // v decays monotonically, so the travelled distance sits strictly
        // between the endpoint speeds times the horizon.
        assert!(path.x[last] < 1.0 && path.x[last] > path.v[last]);
    }

    #[test]
    fn recording_stride_keeps_endpoints() {
        let ffield = ff();
        let grid = SimGrid::with_stride(0.01, 2.0, 7);
        let stream = RngStream::new(11, 0);
        let path = simulate_free(&ffield, 0.0, 1.0, &grid, &stream).unwrap();
        assert_eq!(path.times[0], 0.0);
        assert_abs_diff_eq!(*path.times.last().unwrap(), 2.0, epsilon = 1e-12);
        // Strided interior nodes are 7 dt apart.
        assert_abs_diff_eq!(path.times[1] - path.times[0], 0.07, epsilon = 1e-12);
    }

    #[test]
    fn functionals_match_recorded_path() {
        let ffield = ff();
        let stream = RngStream::new(5, 3);
        let grid = SimGrid::new(0.01, 3.0);
        let path = simulate_free(&ffield, 0.0, 1.0, &grid, &stream).unwrap();
        let outs =
            simulate_free_functionals(&ffield, 0.0, 1.0, 0.01, &[1.0, 3.0], &stream).unwrap();
        assert_eq!(outs.len(), 2);
        let node = |t: f64| (t / 0.01).round() as usize;
        for o in &outs {
            let k = node(o.t);
            assert_eq!(o.x, path.x[k]);
            assert_eq!(o.v, path.v[k]);
            let rmin = path.x[..=k].iter().cloned().fold(f64::INFINITY, f64::min);
            let rmax = path.x[..=k]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(o.running_min, rmin.min(0.0));
            assert_eq!(o.running_max, rmax);
        }
    }

    #[test]
    fn same_stream_reproduces_same_path() {
        let ffield = ff();
        let grid = SimGrid::new(0.01, 1.0);
        let a = simulate_free(&ffield, 0.0, 1.0, &grid, &RngStream::new(9, 4)).unwrap();
        let b = simulate_free(&ffield, 0.0, 1.0, &grid, &RngStream::new(9, 4)).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn hitting_down_median_is_one_step_from_tiny_start() {
        // From v0 = 1e-9 the first Gaussian increment crosses zero with
        // probability one half, so the sample median sits at about dt.
        // (The mean does not concentrate: discrete return times are
        // heavy-tailed until the confining force kicks in.)
        let ffield = ff();
        let mut rng = RngStream::new(3, 0).auxiliary(0);
        let mut times: Vec<f64> = (0..200)
            .map(|_| velocity_hitting_time_down(&ffield, 1e-9, 1e-3, 1e4, &mut rng).unwrap())
            .collect();
        times.sort_by(f64::total_cmp);
        assert!(times[100] < 0.01, "median down time {}", times[100]);
    }

    #[test]
    fn hitting_up_reaches_unit_level_quickly() {
        // The mean upcrossing time of level 1 from 0 is about 2.74 for
        // beta = 2, so a 50-unit cap leaves censoring negligible.
        let ffield = ff();
        let mut rng = RngStream::new(3, 1).auxiliary(0);
        let mut hits = 0;
        for _ in 0..50 {
            if let Some(t) = velocity_hitting_time_up(&ffield, 1.0, 1e-3, 50.0, &mut rng) {
                assert!(t > 0.0 && t <= 50.0);
                hits += 1;
            }
        }
        assert!(hits >= 45, "only {hits} of 50 episodes reached the level");
    }

    #[test]
    fn episode_orders_tau_before_sigma() {
        let ffield = ff();
        let mut rng = RngStream::new(17, 2).auxiliary(0);
        let mut seen = 0;
        for _ in 0..100 {
            let ep = tau_sigma_episode(&ffield, 1.0, 1.0, 1e-2, 500.0, &mut rng);
            if !ep.sigma_censored {
                assert!(ep.tau <= ep.sigma, "tau {} sigma {}", ep.tau, ep.sigma);
                seen += 1;
            }
            assert!(ep.tau > 0.0);
        }
        assert!(seen > 80, "only {seen} uncensored episodes");
    }

    #[test]
    fn censoring_reports_cap() {
        // Absurdly small cap forces censoring.
        let ffield = ff();
        let mut rng = RngStream::new(17, 3).auxiliary(0);
        let ep = tau_sigma_episode(&ffield, 1.0, 1.0, 1e-2, 0.05, &mut rng);
        assert!(ep.tau_censored || ep.tau <= 0.05 + 1e-2);
    }
}
