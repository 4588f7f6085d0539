//! Numerical checks of the weak formulations attached to the half-line
//! limit: the fractional generator of the reflected stable process in two
//! integral forms, a finite-difference weak-form residual on Monte Carlo
//! samples, the kinetic transport identity with boundary measures, and the
//! limiting density asymptotics.
//!
//! The generator acting on a test function `phi` on the half line is
//!
//! ```text
//! L phi(x) = (sigma_alpha / 2) int [phi((x+z)_+) - phi(x)
//!                                   - z phi'(x) 1{|z| < x}] / |z|^{1+alpha} dz
//! ```
//!
//! with the positive part freezing excursions below the boundary at zero.
//! For test functions vanishing at the origin this coincides with the
//! symmetric fractional derivative of the extension by zero, which is what
//! the clamped-versus-unclamped comparison in the tests exercises.
//!
//! Nothing here solves the limiting equation forward in time. Every check
//! is a residual: sampled expectations on one side, quadrature of the
//! generator on the other.

use std::sync::Arc;

use thiserror::Error;

use crate::analysis::{ks_statistic, tail_exponent_fit, AnalysisError, TailFit};
use crate::engine::{EventKind, PathSample};
use crate::model::{ForceField, StableParams};
use crate::numeric::{integrate_segmented, NumericError, QuadratureSpec};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("generator evaluation point {x} lies outside the half line")]
    NegativePoint { x: f64 },
    #[error(
        "alpha = {alpha} >= 1 requires a test function with vanishing derivative at the origin"
    )]
    PrincipalValueRequired { alpha: f64 },
    #[error("too few samples for density asymptotics: {found} < {need}")]
    TooFewSamples { found: usize, need: usize },
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// A smooth test function on the half line together with its first two
/// derivatives and the interval outside which it vanishes.
///
/// `zero_derivative_at_origin` gates the compensated integral for
/// `alpha >= 1`: without a vanishing derivative at zero the defining
/// integral only exists as a principal value, which this module does not
/// attempt.
#[derive(Clone)]
pub struct TestFunction {
    pub phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub phi_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub phi_double_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Closed support `[a, b]` with `0 <= a < b`.
    pub support: (f64, f64),
    pub zero_derivative_at_origin: bool,
}

impl TestFunction {
    pub fn value(&self, x: f64) -> f64 {
        (self.phi)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.phi_prime)(x)
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        (self.phi_double_prime)(x)
    }

    /// The standard mollifier bump `exp(-1/(1-s^2))` mapped onto `[a, b]`.
    /// All derivatives vanish at the support edges, so the family is
    /// admissible for every `alpha` in `(0, 2)` as long as `a >= 0`.
    pub fn smooth_bump(a: f64, b: f64) -> Self {
        assert!(a >= 0.0 && b > a, "support [{a}, {b}] must sit in the half line");
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let phi = Arc::new(move |x: f64| bump_eval((x - c) / h).0);
        let phi_prime = Arc::new(move |x: f64| bump_eval((x - c) / h).1 / h);
        let phi_double_prime = Arc::new(move |x: f64| bump_eval((x - c) / h).2 / (h * h));
        Self {
            phi,
            phi_prime,
            phi_double_prime,
            support: (a, b),
            zero_derivative_at_origin: true,
        }
    }
}

/// Bump and its first two derivatives in the standardized variable
/// `s in (-1, 1)`. Returns zeros outside, and short-circuits the edge
/// region where the exponential underflows before the rational prefactors
/// overflow.
fn bump_eval(s: f64) -> (f64, f64, f64) {
    let w = 1.0 - s * s;
    if w <= 1e-3 {
        return (0.0, 0.0, 0.0);
    }
    let g = (-1.0 / w).exp();
    let w2 = w * w;
    let d1 = g * (-2.0 * s / w2);
    let d2 = g * (4.0 * s * s / (w2 * w2) - 2.0 / w2 - 8.0 * s * s / (w2 * w));
    (g, d1, d2)
}

/// Compensated-integral form of the fractional generator at `x >= 0`.
///
/// The integral is split into regions with analytic or smooth content:
/// `z <= -x` where the positive part pins the argument at the origin
/// (analytic), an inner window `|z| <= delta` evaluated by the symmetrized
/// second-order Taylor term (the odd orders cancel, the quartic remainder
/// is `O(delta^2)` relative), the symmetrized band `delta <= |z| < x`, and
/// the upper ray `z >= x` with an analytic tail beyond the support.
/// `delta` is `1e-4` of the support width, capped at `x/2` so the inner
/// window never reaches the clamp.
pub fn fractional_generator(
    params: &StableParams,
    f: &TestFunction,
    x: f64,
    quad: QuadratureSpec,
) -> Result<f64, GeneratorError> {
    let alpha = params.alpha;
    if x < 0.0 {
        return Err(GeneratorError::NegativePoint { x });
    }
    if alpha >= 1.0 && !f.zero_derivative_at_origin {
        return Err(GeneratorError::PrincipalValueRequired { alpha });
    }
    let (a, b) = f.support;
    let half_sigma = 0.5 * params.sigma_alpha;
    let phi_x = f.value(x);

    if x == 0.0 {
        // No compensator at the origin: negative z contributes nothing
        // beyond the constant difference, which integrates analytically.
        let body = integrate_segmented(
            |z: f64| {
                let diff = f.value(z) - phi_x;
                if diff == 0.0 {
                    0.0
                } else {
                    diff * z.powf(-1.0 - alpha)
                }
            },
            0.0,
            b,
            &[a],
            quad,
        )?;
        let tail = -phi_x * b.powf(-alpha) / alpha;
        return Ok(half_sigma * (body + tail));
    }

    let delta = (1e-4 * (b - a)).min(0.5 * x);

    // z <= -x: the path argument is frozen at the origin.
    let left_tail = (f.value(0.0) - phi_x) * x.powf(-alpha) / alpha;

    // |z| <= delta: second-order Taylor term of the symmetrized increment.
    let inner = f.second_deriv(x) * delta.powf(2.0 - alpha) / (2.0 - alpha);

    // delta <= |z| < x: symmetric pairing cancels the compensator.
    let middle = {
        let cuts = [(a - x).abs(), (b - x).abs(), x - a, x - b];
        integrate_segmented(
            |z: f64| {
                let sum = f.value(x + z) + f.value(x - z) - 2.0 * phi_x;
                if sum == 0.0 {
                    0.0
                } else {
                    sum * z.powf(-1.0 - alpha)
                }
            },
            delta,
            x,
            &cuts,
            quad,
        )?
    };

    // z >= x: quadrature until the support is exhausted, analytic beyond.
    let cut = (b - x).max(x);
    let upper = if cut > x {
        integrate_segmented(
            |z: f64| {
                let diff = f.value(x + z) - phi_x;
                if diff == 0.0 {
                    0.0
                } else {
                    diff * z.powf(-1.0 - alpha)
                }
            },
            x,
            cut,
            &[a - x],
            quad,
        )?
    } else {
        0.0
    };
    let upper_tail = -phi_x * cut.powf(-alpha) / alpha;

    Ok(half_sigma * (left_tail + inner + middle + upper + upper_tail))
}

/// Derivative form of the generator,
/// `(sigma_alpha / 2 alpha) int_0^inf phi'(y) (y - x) |y - x|^{-alpha-1} dy`,
/// obtained from the compensated form by integration by parts. Only valid
/// without principal values, so restricted to `alpha < 1`.
///
/// Inside the support the substitution `u = |y - x|^{1-alpha}` absorbs the
/// singularity; outside, the integrand is smooth and integrated directly.
pub fn fractional_generator_by_parts(
    params: &StableParams,
    f: &TestFunction,
    x: f64,
    quad: QuadratureSpec,
) -> Result<f64, GeneratorError> {
    let alpha = params.alpha;
    if x < 0.0 {
        return Err(GeneratorError::NegativePoint { x });
    }
    if alpha >= 1.0 {
        return Err(GeneratorError::PrincipalValueRequired { alpha });
    }
    let (a, b) = f.support;
    let scale = 0.5 * params.sigma_alpha / alpha;

    if x <= a || x >= b {
        let sign = if x <= a { 1.0 } else { -1.0 };
        let body = integrate_segmented(
            |y: f64| {
                let d = f.deriv(y);
                if d == 0.0 {
                    0.0
                } else {
                    d * (y - x).abs().powf(-alpha)
                }
            },
            a,
            b,
            &[],
            quad,
        )?;
        return Ok(scale * sign * body);
    }

    let inv = 1.0 / (1.0 - alpha);
    let right = integrate_segmented(
        |u: f64| f.deriv(x + u.powf(inv)),
        0.0,
        (b - x).powf(1.0 - alpha),
        &[],
        quad,
    )? * inv;
    let left = integrate_segmented(
        |u: f64| f.deriv(x - u.powf(inv)),
        0.0,
        (x - a).powf(1.0 - alpha),
        &[],
        quad,
    )? * inv;
    Ok(scale * (right - left))
}

/// Uniform table of generator values with linear interpolation, for
/// evaluating `L phi` over large Monte Carlo samples. Points beyond the
/// table fall back to direct quadrature; with heavy-tailed samples those
/// are rare and cheap because the test function no longer contributes
/// locally there.
pub struct GeneratorTable {
    params: StableParams,
    f: TestFunction,
    step: f64,
    x_max: f64,
    values: Vec<f64>,
}

impl GeneratorTable {
    pub fn build(
        params: &StableParams,
        f: &TestFunction,
        x_max: f64,
        step: f64,
        quad: QuadratureSpec,
    ) -> Result<Self, GeneratorError> {
        assert!(x_max > 0.0 && step > 0.0 && x_max > step);
        let n = (x_max / step).ceil() as usize;
        let mut values = Vec::with_capacity(n + 1);
        for i in 0..=n {
            values.push(fractional_generator(params, f, i as f64 * step, quad)?);
        }
        Ok(Self { params: *params, f: f.clone(), step, x_max: n as f64 * step, values })
    }

    pub fn eval(&self, x: f64, quad: QuadratureSpec) -> Result<f64, GeneratorError> {
        if x < 0.0 {
            return Err(GeneratorError::NegativePoint { x });
        }
        if x > self.x_max {
            return fractional_generator(&self.params, &self.f, x, quad);
        }
        let u = x / self.step;
        let i = (u.floor() as usize).min(self.values.len() - 2);
        let frac = u - i as f64;
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }
}

/// Finite-difference check of `d/dt E[phi(R_t)] = E[L phi(R_t)]` on two
/// sample sets a time `h` apart.
#[derive(Debug, Clone, Copy)]
pub struct WeakFormResidual {
    pub t: f64,
    pub h: f64,
    /// `(mean phi at t+h - mean phi at t) / h`.
    pub finite_difference: f64,
    /// Trapezoid of the generator means at the two times.
    pub generator_mean: f64,
    pub residual: f64,
    pub stderr: f64,
    pub n_lo: usize,
    pub n_hi: usize,
}

/// Central-in-time residual between the finite difference of `E[phi]` and
/// the generator expectation. When the two sets have equal length they are
/// treated as coupled pairs (same path observed at both times), which
/// cancels most of the `1/h` variance amplification; otherwise the
/// estimators are combined independently.
pub fn weak_form_residual(
    params: &StableParams,
    f: &TestFunction,
    t: f64,
    h: f64,
    samples_lo: &[f64],
    samples_hi: &[f64],
    quad: QuadratureSpec,
) -> Result<WeakFormResidual, GeneratorError> {
    assert!(h > 0.0 && !samples_lo.is_empty() && !samples_hi.is_empty());
    let max_sample = samples_lo
        .iter()
        .chain(samples_hi)
        .copied()
        .fold(0.0f64, f64::max);
    let step = 0.02;
    let table_top = max_sample.min(50.0).max(2.0 * step) + step;
    let table = GeneratorTable::build(params, f, table_top, step, quad)?;

    let gen = |x: f64| table.eval(x, quad);
    let (fd, gen_mean, residual, stderr) = if samples_lo.len() == samples_hi.len() {
        let n = samples_lo.len() as f64;
        let mut d = Vec::with_capacity(samples_lo.len());
        let mut fd_sum = 0.0;
        let mut gen_sum = 0.0;
        for (&lo, &hi) in samples_lo.iter().zip(samples_hi) {
            let fd_i = (f.value(hi) - f.value(lo)) / h;
            let gen_i = 0.5 * (gen(lo)? + gen(hi)?);
            fd_sum += fd_i;
            gen_sum += gen_i;
            d.push(fd_i - gen_i);
        }
        let mean = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        (fd_sum / n, gen_sum / n, mean.abs(), (var / n).sqrt())
    } else {
        let stats = |xs: &[f64], g: &dyn Fn(f64) -> f64| {
            let n = xs.len() as f64;
            let mean = xs.iter().map(|&x| g(x)).sum::<f64>() / n;
            let var = xs.iter().map(|&x| (g(x) - mean) * (g(x) - mean)).sum::<f64>()
                / (n - 1.0).max(1.0);
            (mean, var / n)
        };
        let (phi_lo, var_lo) = stats(samples_lo, &|x| f.value(x));
        let (phi_hi, var_hi) = stats(samples_hi, &|x| f.value(x));
        let mut gen_vals_lo = Vec::with_capacity(samples_lo.len());
        for &x in samples_lo {
            gen_vals_lo.push(gen(x)?);
        }
        let mut gen_vals_hi = Vec::with_capacity(samples_hi.len());
        for &x in samples_hi {
            gen_vals_hi.push(gen(x)?);
        }
        let moments = |vals: &[f64]| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var =
                vals.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
            (mean, var / n)
        };
        let (gl, vgl) = moments(&gen_vals_lo);
        let (gh, vgh) = moments(&gen_vals_hi);
        let fd = (phi_hi - phi_lo) / h;
        let gm = 0.5 * (gl + gh);
        let se = ((var_lo + var_hi) / (h * h) + 0.25 * (vgl + vgh)).sqrt();
        (fd, gm, (fd - gm).abs(), se)
    };

    Ok(WeakFormResidual {
        t,
        h,
        finite_difference: fd,
        generator_mean: gen_mean,
        residual,
        stderr,
        n_lo: samples_lo.len(),
        n_hi: samples_hi.len(),
    })
}

/// One smooth factor of a separable space-time-velocity test function,
/// evaluated together with its first two derivatives.
#[derive(Clone)]
pub struct FactorProfile {
    f: Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>,
}

impl FactorProfile {
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        (self.f)(u)
    }

    /// Mollifier bump on `[a, b]`.
    pub fn bump(a: f64, b: f64) -> Self {
        assert!(b > a);
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        Self {
            f: Arc::new(move |u: f64| {
                let (g, d1, d2) = bump_eval((u - c) / h);
                (g, d1 / h, d2 / (h * h))
            }),
        }
    }

    /// One on `(-inf, inner]`, C^2 descent to zero at `outer`, zero beyond.
    pub fn plateau(inner: f64, outer: f64) -> Self {
        assert!(outer > inner);
        let w = outer - inner;
        Self {
            f: Arc::new(move |u: f64| {
                let (g, d1, d2) = smoothstep_down((u - inner) / w);
                (g, d1 / w, d2 / (w * w))
            }),
        }
    }

    /// Even plateau in the variable: one for `|u| <= inner`, descending to
    /// zero at `|u| = outer`. C^2 everywhere including the origin.
    pub fn symmetric_plateau(inner: f64, outer: f64) -> Self {
        assert!(outer > inner && inner > 0.0);
        let w = outer - inner;
        Self {
            f: Arc::new(move |u: f64| {
                let (g, d1, d2) = smoothstep_down((u.abs() - inner) / w);
                (g, u.signum() * d1 / w, d2 / (w * w))
            }),
        }
    }

    /// Constant one; turns a factor off in products.
    pub fn one() -> Self {
        Self { f: Arc::new(|_| (1.0, 0.0, 0.0)) }
    }
}

/// Quintic step from 1 at `u <= 0` to 0 at `u >= 1` with vanishing first
/// and second derivatives at both ends.
fn smoothstep_down(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        (1.0, 0.0, 0.0)
    } else if u >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let omu = 1.0 - u;
        let v = 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        let d1 = -30.0 * u * u * omu * omu;
        let d2 = -60.0 * u * omu * (1.0 - 2.0 * u);
        (v, d1, d2)
    }
}

/// Separable test function `phi(t, x, v) = T(t) X(x) V(v)` with the
/// derivative combinations the kinetic transport identity needs.
#[derive(Clone)]
pub struct KineticTestFunction {
    pub time: FactorProfile,
    pub space: FactorProfile,
    pub velocity: FactorProfile,
}

impl KineticTestFunction {
    pub fn value(&self, t: f64, x: f64, v: f64) -> f64 {
        self.time.eval(t).0 * self.space.eval(x).0 * self.velocity.eval(v).0
    }

    /// `(value, d/dt, d/dx, d/dv, d^2/dv^2)` in one pass.
    pub fn gradients(&self, t: f64, x: f64, v: f64) -> (f64, f64, f64, f64, f64) {
        let (ft, ft1, _) = self.time.eval(t);
        let (fx, fx1, _) = self.space.eval(x);
        let (fv, fv1, fv2) = self.velocity.eval(v);
        (
            ft * fx * fv,
            ft1 * fx * fv,
            ft * fx1 * fv,
            ft * fx * fv1,
            ft * fx * fv2,
        )
    }
}

/// Kolmogorov-Smirnov comparison of outgoing velocities between early and
/// late boundary events (split at the median event time). Independence of
/// the outgoing draw from the hitting time makes this pass.
#[derive(Debug, Clone, Copy)]
pub struct FactorizationCheck {
    pub statistic: f64,
    /// 1% critical value for the two sample sizes.
    pub critical: f64,
    pub n_early: usize,
    pub n_late: usize,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct KineticCheckReport {
    /// Path average of the transported-derivative time integral.
    pub volume_term: f64,
    /// Path average of the boundary jumps `phi(t, 0, v_out) - phi(t, 0, v_in)`.
    pub boundary_term: f64,
    /// Path average of `phi` at the endpoint minus the start.
    pub through_term: f64,
    pub residual: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub n_events: usize,
    /// `None` when fewer than 100 diffusive events were seen.
    pub factorization: Option<FactorizationCheck>,
}

/// Monte Carlo residual of the transport identity along reflected runs:
/// per path, the time integral of `(d_t + v d_x + F d_v + d_vv/2) phi`
/// plus the boundary jumps must telescope to the through-variation of
/// `phi`. Expectation zero for any test function; the paths must carry
/// every node (record stride one) and their event logs.
pub fn kinetic_weak_form_check(
    ff: &ForceField,
    paths: &[PathSample],
    f: &KineticTestFunction,
) -> KineticCheckReport {
    assert!(!paths.is_empty());
    let mut totals = Vec::with_capacity(paths.len());
    let mut vol_mean = 0.0;
    let mut jump_mean = 0.0;
    let mut through_mean = 0.0;
    let mut events: Vec<(f64, f64)> = Vec::new();
    for p in paths {
        assert!(p.len() >= 2, "kinetic check needs recorded nodes");
        let transported = |t: f64, x: f64, v: f64| {
            let (_, dt, dx, dv, dvv) = f.gradients(t, x, v);
            dt + v * dx + ff.force(v) * dv + 0.5 * dvv
        };
        let mut vol = 0.0;
        for k in 0..p.len() - 1 {
            let h = p.times[k + 1] - p.times[k];
            vol += 0.5
                * h
                * (transported(p.times[k], p.x[k], p.v[k])
                    + transported(p.times[k + 1], p.x[k + 1], p.v[k + 1]));
        }
        let mut jump = 0.0;
        for ev in &p.events {
            jump += f.value(ev.time, 0.0, ev.v_out) - f.value(ev.time, 0.0, ev.v_in);
            if ev.kind == EventKind::RestartDiffusive {
                events.push((ev.time, ev.v_out));
            }
        }
        let last = p.len() - 1;
        let through = f.value(p.times[last], p.x[last], p.v[last])
            - f.value(p.times[0], p.x[0], p.v[0]);
        vol_mean += vol;
        jump_mean += jump;
        through_mean += through;
        totals.push(vol + jump - through);
    }
    let n = totals.len() as f64;
    vol_mean /= n;
    jump_mean /= n;
    through_mean /= n;
    let mean = totals.iter().sum::<f64>() / n;
    let var = totals.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);

    let factorization = if events.len() >= 100 {
        let mut times: Vec<f64> = events.iter().map(|e| e.0).collect();
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        let early: Vec<f64> =
            events.iter().filter(|e| e.0 <= median).map(|e| e.1).collect();
        let late: Vec<f64> = events.iter().filter(|e| e.0 > median).map(|e| e.1).collect();
        if early.len() < 10 || late.len() < 10 {
            None
        } else {
            let stat = ks_statistic(&early, &late);
            let (n1, n2) = (early.len() as f64, late.len() as f64);
            let critical = 1.628 * ((n1 + n2) / (n1 * n2)).sqrt();
            Some(FactorizationCheck {
                statistic: stat,
                critical,
                n_early: early.len(),
                n_late: late.len(),
                pass: stat < critical,
            })
        }
    } else {
        None
    };

    KineticCheckReport {
        volume_term: vol_mean,
        boundary_term: jump_mean,
        through_term: through_mean,
        residual: mean.abs(),
        stderr: (var / n).sqrt(),
        n_paths: paths.len(),
        n_events: events.len(),
        factorization,
    }
}

/// Log-log least-squares fit of the small-argument density exponent.
#[derive(Debug, Clone, Copy)]
pub struct SmallXFit {
    pub exponent: f64,
    pub stderr: f64,
    pub n_bins: usize,
    pub range: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct DensityAsymptotics {
    pub tail: TailFit,
    /// `-alpha`.
    pub tail_expected: f64,
    /// `None` when too little mass sits in the bottom decade.
    pub small_x: Option<SmallXFit>,
    /// `alpha/2 - 1`.
    pub small_x_expected: f64,
}

/// Fits the survival exponent on the top decade of the sample (expected
/// `-alpha`) and the density exponent on the bottom decade of a log-log
/// histogram (expected `alpha/2 - 1`).
pub fn density_asymptotics_check(
    samples: &[f64],
    alpha: f64,
) -> Result<DensityAsymptotics, GeneratorError> {
    const NEED: usize = 2_000;
    let mut pos: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite() && *x > 0.0).collect();
    if pos.len() < NEED {
        return Err(GeneratorError::TooFewSamples { found: pos.len(), need: NEED });
    }
    pos.sort_by(f64::total_cmp);
    let n = pos.len();
    // Anchor the decade so the sparsest abscissa still has 100 samples
    // above it; further out the order statistics are too noisy to fit.
    let t_max = pos[n - 100];
    let t_min = t_max / 10.0;
    let tail = tail_exponent_fit(&pos, t_min, t_max, 10)?;
    let x_hi = pos[n / 10];
    let small_x = small_x_exponent(&pos, x_hi / 10.0, x_hi);
    Ok(DensityAsymptotics {
        tail,
        tail_expected: -alpha,
        small_x,
        small_x_expected: 0.5 * alpha - 1.0,
    })
}

fn small_x_exponent(sorted: &[f64], x_lo: f64, x_hi: f64) -> Option<SmallXFit> {
    if !(x_lo > 0.0 && x_hi > x_lo) {
        return None;
    }
    let nb = 10usize;
    let ratio = (x_hi / x_lo).powf(1.0 / nb as f64);
    let n_total = sorted.len() as f64;
    let mut us = Vec::new();
    let mut ys = Vec::new();
    let mut lo = x_lo;
    for _ in 0..nb {
        let hi = lo * ratio;
        let c_lo = sorted.partition_point(|&v| v < lo);
        let c_hi = sorted.partition_point(|&v| v < hi);
        let count = c_hi - c_lo;
        if count >= 25 {
            us.push((lo * hi).sqrt().ln());
            ys.push((count as f64 / (n_total * (hi - lo))).ln());
        }
        lo = hi;
    }
    if us.len() < 5 {
        return None;
    }
    let m = us.len() as f64;
    let u_bar = us.iter().sum::<f64>() / m;
    let y_bar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = us.iter().map(|u| (u - u_bar) * (u - u_bar)).sum();
    let sxy: f64 = us.iter().zip(&ys).map(|(u, y)| (u - u_bar) * (y - y_bar)).sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * u_bar;
    let ss_res: f64 = us
        .iter()
        .zip(&ys)
        .map(|(u, y)| {
            let r = y - (intercept + slope * u);
            r * r
        })
        .sum();
    let stderr = (ss_res / (m - 2.0).max(1.0) / sxx).sqrt();
    Some(SmallXFit {
        exponent: slope,
        stderr,
        n_bins: us.len(),
        range: (x_lo, x_hi),
    })
}

/// Ratio of tail amplitudes `S(x) x^alpha` between two sample sets,
/// averaged over a short log grid inside `[x_lo, x_hi]`, with a
/// conservative binomial standard error. For marginals of the same
/// self-similar family at times `t2` and `t1` the expected value is
/// `t2/t1`.
pub fn tail_amplitude_ratio(
    first: &[f64],
    second: &[f64],
    alpha: f64,
    x_lo: f64,
    x_hi: f64,
) -> (f64, f64) {
    assert!(x_lo > 0.0 && x_hi > x_lo);
    let amp = |samples: &[f64]| -> Option<(f64, f64)> {
        let mut sorted: Vec<f64> = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut vals = Vec::new();
        let mut worst_rel = 0.0f64;
        for j in 0..4 {
            let x = x_lo * (x_hi / x_lo).powf(j as f64 / 3.0);
            let above = (sorted.len() - sorted.partition_point(|&v| v <= x)) as f64;
            if above < 20.0 {
                continue;
            }
            let surv = above / n;
            vals.push(surv * x.powf(alpha));
            worst_rel = worst_rel.max(((1.0 - surv) / (surv * n)).sqrt());
        }
        if vals.is_empty() {
            None
        } else {
            Some((vals.iter().sum::<f64>() / vals.len() as f64, worst_rel))
        }
    };
    match (amp(first), amp(second)) {
        (Some((a1, r1)), Some((a2, r2))) => {
            let ratio = a2 / a1;
            (ratio, ratio * (r1 * r1 + r2 * r2).sqrt())
        }
        _ => (f64::NAN, f64::INFINITY),
    }
}
