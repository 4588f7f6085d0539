//! Euler-Maruyama simulation of the kinetic particle with boundary rules.
//!
//! The velocity follows the explicit recursion
//!
//! ```text
//! V_{n+1} = V_n + F(V_n) dt + dB_n,      dB_n ~ Normal(0, dt)
//! X_{n+1} = X_n + dt (V_n + V_{n+1}) / 2
//! ```
//!
//! so the in-step position is the exact integral of the linearly
//! interpolated velocity, a parabola in the step fraction. Boundary hits
//! are located as the first root of that parabola, which guarantees the
//! incoming velocity at a hit is nonpositive. After a hit the step
//! remainder is integrated drift-only from the restart velocity; with
//! `dt <= 1 / Lip(F)` this keeps the post-event position nonnegative and
//! makes the coupled-path comparisons against the free process hold
//! exactly at every node, not just asymptotically.
//!
//! Randomness is organized as one deterministic stream per path, split
//! into lanes: lane 0 drives the Brownian increments, lane 1 the restart
//! draws. Free, reflected, and specular runs over the same stream consume
//! identical Brownian increments, which is what the pathwise comparison
//! tests rely on.

mod free;
mod reflected;
mod second;
mod timechange;

pub use free::{
    simulate_free, simulate_free_functionals, simulate_free_observed, simulate_free_with_noise,
    tau_sigma_episode, velocity_hitting_time_down, velocity_hitting_time_up, EpisodeOutcome,
    FreeFunctionals,
};
pub use reflected::{
    simulate_reflected, simulate_reflected_marginal, simulate_specular,
    simulate_specular_marginal,
};
pub use second::{second_construction, SecondConstruction};
pub use timechange::{
    inelastic_from_free, reflect_on_infimum, simulate_inelastic_marginal, InelasticReadout,
    TimeChanged,
};

use crate::model::ForceField;
use crate::numeric::splitmix64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("state became non-finite at step {step} (x = {x}, v = {v})")]
    NonFiniteState { step: u64, x: f64, v: f64 },
    #[error(
        "more than {max_events} boundary crossings inside one step near t = {time}; \
         step halving floor dt * 2^-20 reached"
    )]
    ExcessiveBoundaryCrossings { time: f64, max_events: u32 },
    #[error("boundary law rejected: {0}")]
    InvalidLaw(String),
}

/// Uniform simulation grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SimGrid {
    /// Time step.
    pub dt: f64,
    /// Total simulated time; interpreted as `n_steps * dt` with
    /// `n_steps = round(horizon / dt)`.
    pub horizon: f64,
    /// Store every k-th grid node (the final node is always kept).
    pub record_stride: usize,
}

impl SimGrid {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self { dt, horizon, record_stride: 1 }
    }

    pub fn with_stride(dt: f64, horizon: f64, record_stride: usize) -> Self {
        Self { dt, horizon, record_stride }
    }

    pub fn n_steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    /// Model-independent admissibility: positive step and horizon,
    /// stride at least 1, step count within range.
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(EngineError::InvalidGrid(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(EngineError::InvalidGrid(format!(
                "horizon = {} must be positive",
                self.horizon
            )));
        }
        if self.record_stride == 0 {
            return Err(EngineError::InvalidGrid("record_stride must be >= 1".into()));
        }
        let steps = self.horizon / self.dt;
        if !(steps < 4.0e18) {
            return Err(EngineError::InvalidGrid(format!("horizon/dt = {steps} overflows")));
        }
        Ok(())
    }

    /// Grid admissibility for a model: the basic checks plus the step
    /// bound `dt <= 1 / Lip(F)` that the discrete comparison properties
    /// require.
    pub fn validate_for(&self, ff: &ForceField) -> Result<(), EngineError> {
        self.validate()?;
        let lip = ff.lipschitz_bound();
        if lip > 0.0 && self.dt > 1.0 / lip {
            return Err(EngineError::InvalidGrid(format!(
                "dt = {} exceeds 1/Lip(F) = {}; the discrete comparison property needs \
                 dt <= 1/Lip",
                self.dt,
                1.0 / lip
            )));
        }
        Ok(())
    }
}

/// What happened at a boundary contact or a construction stopping time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// The position reached zero (used by the inelastic construction).
    HitZero,
    /// Diffusive restart: outgoing velocity drawn from the boundary law.
    RestartDiffusive,
    /// Specular restart: outgoing velocity is the flipped incoming one.
    RestartSpecular,
    /// The velocity reached the drawn level in the excursion construction.
    SigmaTime,
    /// The position returned to its excursion base level.
    TauTime,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::HitZero => "hit_zero",
            EventKind::RestartDiffusive => "restart_diffusive",
            EventKind::RestartSpecular => "restart_specular",
            EventKind::SigmaTime => "sigma_time",
            EventKind::TauTime => "tau_time",
        }
    }
}

/// One logged boundary event. `v_in` is the interpolated incoming velocity
/// (nonpositive for boundary hits by construction), `v_out` the velocity
/// the dynamics continue with.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryEvent {
    pub time: f64,
    pub kind: EventKind,
    pub v_in: f64,
    pub v_out: f64,
}

/// A recorded trajectory: node times, positions, velocities, and the event
/// log. Depending on the producing operation this houses the free pair,
/// a reflected path, or the excursion-construction path.
#[derive(Debug, Clone, Default)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub events: Vec<BoundaryEvent>,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            events: Vec::new(),
        }
    }

    pub(crate) fn push_node(&mut self, t: f64, x: f64, v: f64) {
        self.times.push(t);
        self.x.push(x);
        self.v.push(v);
    }
}

/// Restart-velocity distribution on the positive half line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryLaw {
    /// Point mass at `a > 0`.
    Dirac { a: f64 },
    /// |Normal(0, scale^2)|.
    HalfGaussian { scale: f64 },
    /// Exponential with the given rate.
    Exponential { rate: f64 },
    /// Pareto with survival `(x / xmin)^{-index}` for `x >= xmin`.
    Pareto { index: f64, xmin: f64 },
}

/// Moment diagnostics for a boundary law against the admissibility
/// thresholds of the diffusive limit: the law must have finite moments of
/// order `(beta+1)/2 + eta` and `(beta+1)(beta+2)/6 + eta` for some
/// `eta > 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentDiagnostic {
    /// Highest moment order that is finite (infinity for light tails).
    pub moment_report: f64,
    pub order_first: f64,
    pub first_finite: bool,
    pub order_second: f64,
    pub second_finite: bool,
}

/// Margin used when testing moment finiteness strictly above a threshold.
const MOMENT_ETA: f64 = 0.01;

impl BoundaryLaw {
    pub fn validate(&self) -> Result<(), EngineError> {
        let ok = match *self {
            BoundaryLaw::Dirac { a } => a > 0.0,
            BoundaryLaw::HalfGaussian { scale } => scale > 0.0,
            BoundaryLaw::Exponential { rate } => rate > 0.0,
            BoundaryLaw::Pareto { index, xmin } => index > 0.0 && xmin > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(EngineError::InvalidLaw(format!("{self:?} has a non-positive parameter")))
        }
    }

    /// Draw one restart velocity; strictly positive.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            BoundaryLaw::Dirac { a } => a,
            BoundaryLaw::HalfGaussian { scale } => {
                loop {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    let out = scale * z.abs();
                    if out > 0.0 {
                        return out;
                    }
                }
            }
            BoundaryLaw::Exponential { rate } => loop {
                let u: f64 = rng.random();
                let out = -u.ln() / rate;
                if out > 0.0 && out.is_finite() {
                    return out;
                }
            },
            BoundaryLaw::Pareto { index, xmin } => loop {
                let u: f64 = rng.random();
                let out = xmin * (1.0 - u).powf(-1.0 / index);
                if out > 0.0 && out.is_finite() {
                    return out;
                }
            },
        }
    }

    /// Supremum of the finite moment orders.
    pub fn moment_report(&self) -> f64 {
        match *self {
            BoundaryLaw::Pareto { index, .. } => index,
            _ => f64::INFINITY,
        }
    }

    /// Check the two moment thresholds for a model exponent `beta`.
    pub fn moment_diagnostic(&self, beta: f64) -> MomentDiagnostic {
        let order_first = (beta + 1.0) / 2.0 + MOMENT_ETA;
        let order_second = (beta + 1.0) * (beta + 2.0) / 6.0 + MOMENT_ETA;
        let sup = self.moment_report();
        MomentDiagnostic {
            moment_report: sup,
            order_first,
            first_finite: order_first < sup,
            order_second,
            second_finite: order_second < sup,
        }
    }

    /// Parse a CLI-style selector such as `dirac:1.0`,
    /// `half_gaussian:1.0`, `exponential:2.0`, or `pareto:1.5:0.5`.
    pub fn parse_selector(s: &str) -> Result<Self, EngineError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = |msg: String| EngineError::InvalidLaw(msg);
        let num = |p: &str| {
            p.parse::<f64>().map_err(|_| bad(format!("cannot parse number {p:?} in {s:?}")))
        };
        let law = match parts.as_slice() {
            ["dirac", a] => BoundaryLaw::Dirac { a: num(a)? },
            ["half_gaussian", sc] => BoundaryLaw::HalfGaussian { scale: num(sc)? },
            ["exponential", r] => BoundaryLaw::Exponential { rate: num(r)? },
            ["pareto", idx, xmin] => BoundaryLaw::Pareto { index: num(idx)?, xmin: num(xmin)? },
            _ => return Err(bad(format!("unknown boundary law selector {s:?}"))),
        };
        law.validate()?;
        Ok(law)
    }

    pub fn selector(&self) -> String {
        match *self {
            BoundaryLaw::Dirac { a } => format!("dirac:{a}"),
            BoundaryLaw::HalfGaussian { scale } => format!("half_gaussian:{scale}"),
            BoundaryLaw::Exponential { rate } => format!("exponential:{rate}"),
            BoundaryLaw::Pareto { index, xmin } => format!("pareto:{index}:{xmin}"),
        }
    }
}

/// Deterministic per-path randomness.
///
/// The 32-byte ChaCha8 key for lane `l` of stream `s` under master seed `m`
/// is built by the SplitMix64 chain
///
/// ```text
/// h1 = mix(m);  h2 = mix(h1 ^ s);  h3 = mix(h2 ^ l);
/// key words = mix(h3 ^ 1), mix(h3 ^ 2), mix(h3 ^ 3), mix(h3 ^ 4)
/// ```
///
/// where `mix` is the standard SplitMix64 finalizer. The scheme is stated
/// here so independent implementations can reproduce every draw from the
/// `(master_seed, stream_id)` pair echoed in reports. Identical inputs
/// reproduce identical draws bit for bit; results do not depend on how
/// paths are distributed over worker threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

/// One Euler-Maruyama step shared by every simulation core, so coupled
/// runs over the same increments agree bit for bit at the nodes.
#[inline]
pub(crate) fn em_step(ff: &ForceField, x: f64, v: f64, dt: f64, db: f64) -> (f64, f64) {
    let v_next = v + ff.force(v) * dt + db;
    let x_next = x + 0.5 * dt * (v + v_next);
    (x_next, v_next)
}

/// First root in [0, 1] of the in-step position parabola
/// `x(th) = x0 + dt (v0 th + (v1 - v0) th^2 / 2)`, together with the
/// interpolated velocity there, clamped to be nonpositive.
///
/// Preconditions: `x0 >= 0` and `x(1) <= 0`, so a root exists. At a first
/// downcrossing the parabola's slope is nonpositive, which is why the hit
/// velocity is nonpositive up to rounding.
pub(crate) fn locate_parabola_zero(x0: f64, v0: f64, v1: f64, dt: f64) -> (f64, f64) {
    let a = 0.5 * (v1 - v0) * dt;
    let b = v0 * dt;
    let c = x0;
    let x_end = a + b + c;
    let mut theta = if c == 0.0 {
        if b <= 0.0 {
            // Starts at the boundary moving down: immediate hit.
            0.0
        } else if a < 0.0 {
            // Leaves the boundary and bends back: first return at -b/a.
            (-b / a).min(1.0)
        } else {
            1.0
        }
    } else {
        let disc = (b * b - 4.0 * a * c).max(0.0);
        if a.abs() < 1e-300 {
            // Effectively linear in-step position.
            if b < 0.0 {
                -c / b
            } else {
                1.0
            }
        } else {
            let q = -0.5 * (b + disc.sqrt().copysign(b));
            let mut best = f64::INFINITY;
            for r in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
                if r > 0.0 && r <= 1.0 && r < best {
                    best = r;
                }
            }
            if best.is_finite() {
                best
            } else {
                // Rounding pushed both roots outside (0, 1]; fall back to
                // the secant between the node positions.
                if x_end < c {
                    c / (c - x_end)
                } else {
                    1.0
                }
            }
        }
    };
    theta = theta.clamp(0.0, 1.0);
    let v_in = (v0 + theta * (v1 - v0)).min(0.0);
    (theta, v_in)
}

/// Lane carrying the Brownian increments.
const LANE_BROWNIAN: u64 = 0;
/// Lane carrying boundary restart draws.
const LANE_RESTART: u64 = 1;

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    fn lane(&self, lane: u64) -> ChaCha8Rng {
        let h1 = splitmix64(self.master_seed);
        let h2 = splitmix64(h1 ^ self.stream_id);
        let h3 = splitmix64(h2 ^ lane);
        let mut seed = [0u8; 32];
        for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&splitmix64(h3 ^ (i as u64 + 1)).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    /// Brownian-increment generator (lane 0).
    pub fn brownian(&self) -> ChaCha8Rng {
        self.lane(LANE_BROWNIAN)
    }

    /// Restart-draw generator (lane 1), independent of the Brownian lane.
    pub fn restarts(&self) -> ChaCha8Rng {
        self.lane(LANE_RESTART)
    }

    /// Extra independent lane for auxiliary sampling needs.
    pub fn auxiliary(&self, lane_id: u64) -> ChaCha8Rng {
        self.lane(2 + lane_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ForceField;
    use rand::Rng;

    #[test]
    fn grid_enforces_step_bound() {
        let ff = ForceField::builtin(2.0).unwrap();
        // Lip = 1 at beta = 2, so dt can be at most 1.
        assert!(SimGrid::new(1.0, 10.0).validate_for(&ff).is_ok());
        assert!(SimGrid::new(1.5, 10.0).validate_for(&ff).is_err());
        assert!(SimGrid::new(-0.1, 10.0).validate_for(&ff).is_err());
        assert!(SimGrid::with_stride(0.1, 10.0, 0).validate_for(&ff).is_err());
    }

    #[test]
    fn grid_step_count_rounds() {
        assert_eq!(SimGrid::new(1e-3, 1.0).n_steps(), 1000);
        assert_eq!(SimGrid::new(0.1, 1.0000000001).n_steps(), 10);
    }

    #[test]
    fn streams_are_reproducible() {
        let s = RngStream::new(42, 7);
        let a: Vec<f64> = (0..16).map({ let mut r = s.brownian(); move |_| r.random() }).collect();
        let b: Vec<f64> = (0..16).map({ let mut r = s.brownian(); move |_| r.random() }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn lanes_and_streams_differ() {
        let s = RngStream::new(42, 7);
        let mut b = s.brownian();
        let mut r = s.restarts();
        let xb: f64 = b.random();
        let xr: f64 = r.random();
        assert_ne!(xb, xr);
        let s2 = RngStream::new(42, 8);
        let mut b2 = s2.brownian();
        let x2: f64 = b2.random();
        assert_ne!(xb, x2);
    }

    #[test]
    fn boundary_laws_sample_positive() {
        let stream = RngStream::new(1, 0);
        let mut rng = stream.restarts();
        let laws = [
            BoundaryLaw::Dirac { a: 1.0 },
            BoundaryLaw::HalfGaussian { scale: 1.0 },
            BoundaryLaw::Exponential { rate: 2.0 },
            BoundaryLaw::Pareto { index: 1.5, xmin: 0.5 },
        ];
        for law in laws {
            law.validate().unwrap();
            for _ in 0..1000 {
                assert!(law.sample(&mut rng) > 0.0, "nonpositive draw from {law:?}");
            }
        }
    }

    #[test]
    fn half_gaussian_sample_mean() {
        // E|N(0,1)| = sqrt(2/pi).
        let stream = RngStream::new(3, 0);
        let mut rng = stream.restarts();
        let law = BoundaryLaw::HalfGaussian { scale: 1.0 };
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| law.sample(&mut rng)).sum::<f64>() / n as f64;
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - expected).abs() < 0.01, "mean {mean} vs {expected}");
    }

    #[test]
    fn moment_diagnostics() {
        // beta = 2: thresholds 1.5+ and 2.0+.
        let d = BoundaryLaw::Dirac { a: 1.0 }.moment_diagnostic(2.0);
        assert!(d.first_finite && d.second_finite);
        let p = BoundaryLaw::Pareto { index: 1.2, xmin: 1.0 }.moment_diagnostic(2.0);
        assert!(!p.first_finite && !p.second_finite);
        let p2 = BoundaryLaw::Pareto { index: 1.8, xmin: 1.0 }.moment_diagnostic(2.0);
        assert!(p2.first_finite && !p2.second_finite);
    }

    #[test]
    fn selector_roundtrip() {
        for s in ["dirac:1", "half_gaussian:0.5", "exponential:2", "pareto:1.5:0.5"] {
            let law = BoundaryLaw::parse_selector(s).unwrap();
            let back = BoundaryLaw::parse_selector(&law.selector()).unwrap();
            assert_eq!(law, back);
        }
        assert!(BoundaryLaw::parse_selector("uniform:1").is_err());
        assert!(BoundaryLaw::parse_selector("dirac:-1").is_err());
    }
}
