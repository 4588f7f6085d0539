//! The scenario implementations behind [`super::run_scenario`].
//!
//! Conventions shared by all scenarios:
//!
//! * Path `i` draws from `derive_stream(master_seed, i)` (or the block
//!   variant when a scenario runs several batches); its initial
//!   velocity comes from lane [`V0_LANE`] of the same stream, so the
//!   engines' Brownian and restart lanes stay untouched.
//! * Reference samples draw from `aux_stream` lanes, one lane per use.
//! * KS comparisons against an exact law use the plain 1% critical
//!   value; comparisons where both sides carry time-discretization or
//!   scaling-limit bias add [`KS_BIAS_ALLOWANCE`] on top.
//! * With a multi-rung epsilon ladder only the finest rung is binding;
//!   coarser rungs are reported with threshold 1 so the trend is on
//!   record without failing runs that are honest about being far from
//!   the limit.

use super::config::Resolved;
use super::export::ArtifactWriter;
use super::{
    aux_stream, block_stream, cache, derive_stream, map_indexed, metric, HarnessError,
    MetricReport,
};
use crate::analysis::{
    empirical_char_function, ks_statistic, ks_to_cdf, oscillation, tail_exponent_fit, CadlagPath,
};
use crate::engine::{
    inelastic_from_free, reflect_on_infimum, second_construction, simulate_free,
    simulate_free_functionals, simulate_inelastic_marginal, simulate_reflected,
    simulate_reflected_marginal, simulate_specular_marginal, tau_sigma_episode, SimGrid,
};
use crate::generator::{
    density_asymptotics_check, fractional_generator, fractional_generator_by_parts,
    kinetic_weak_form_check, weak_form_residual, FactorProfile, KineticTestFunction, TestFunction,
};
use crate::numeric::QuadratureSpec;
use crate::stable::{
    biane_yor_stable_sample, kappa_alpha, sample_reflected_marginal, sample_reflected_pair,
    sample_stable_increment, StableError,
};
use rand::Rng;
use std::path::{Path, PathBuf};

/// Auxiliary lane of a path stream reserved for the initial velocity.
const V0_LANE: u64 = 7;

/// Reference-sample count for simulated oracles.
const N_REF: usize = 12_000;

/// Step used when generating reflected stable reference marginals.
/// The discrete supremum of an n-step walk sits below the continuum
/// one and puts mass ~ 1/sqrt(pi n) exactly at zero, so the reference
/// grid must be fine enough for both effects to vanish inside the KS
/// allowance.
const REF_DT: f64 = 2.5e-4;

/// KS allowance for comparisons where at least one side carries
/// discretization or scaling-limit bias on top of sampling noise.
const KS_BIAS_ALLOWANCE: f64 = 0.06;

/// Velocity level whose upcrossing ends a return episode.
const REFRESH_LEVEL: f64 = 1.0;

/// Full count of exported sample paths (also capped by the writer).
const N_EXPORT_PATHS: u64 = 3;

/// 1% two-sample KS critical value.
fn ks_critical(n1: usize, n2: usize) -> f64 {
    1.628 * (((n1 + n2) as f64) / (n1 as f64 * n2 as f64)).sqrt()
}

fn ks_threshold(n1: usize, n2: usize) -> f64 {
    KS_BIAS_ALLOWANCE + ks_critical(n1, n2)
}

fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn cache_dir(rc: &Resolved) -> Option<PathBuf> {
    rc.cfg.out_dir.as_ref().map(|d| Path::new(d).join("cache"))
}

/// Index-ordered fallible map over path indices.
fn try_map<T: Send>(
    n: u64,
    f: impl Fn(u64) -> Result<T, HarnessError> + Sync + Send,
) -> Result<Vec<T>, HarnessError> {
    map_indexed(n, f).into_iter().collect()
}

fn require_paths(n: u64, least: u64) -> Result<(), HarnessError> {
    if n < least {
        return Err(HarnessError::Config(format!(
            "this scenario needs at least {least} paths, got {n}"
        )));
    }
    Ok(())
}

pub(super) fn dispatch(
    rc: &Resolved,
    art: &mut ArtifactWriter,
) -> Result<Vec<MetricReport>, HarnessError> {
    match rc.cfg.scenario.as_str() {
        "exp-stable-validate" => stable_validate(rc, art),
        "exp-free-limit" => free_limit(rc, art),
        "exp-reflected-limit" => reflected_limit(rc, art),
        "exp-inelastic-limit" => inelastic_limit(rc, art),
        "exp-specular-limit" => specular_limit(rc, art),
        "exp-tau-tail" => tau_tail(rc, art),
        "exp-timechange" => timechange(rc, art),
        "exp-comparisons" => comparisons(rc, art),
        "exp-generator" => generator_checks(rc, art),
        // Config validation rejects unknown names before we get here.
        other => Err(HarnessError::Config(format!(
            "scenario {other} missing from dispatch"
        ))),
    }
}

/// Draws one stable value through the Brownian local-time construction,
/// discarding attempts whose local-time clock misses the horizon.
fn local_time_draw(
    alpha: f64,
    grid: &SimGrid,
    eta: f64,
    rng: &mut impl Rng,
) -> Result<f64, HarnessError> {
    for _ in 0..64 {
        match biane_yor_stable_sample(alpha, grid, eta, rng) {
            Ok(v) => return Ok(v),
            Err(StableError::LocalTimeHorizon { .. }) => continue,
        }
    }
    Err(HarnessError::Config(
        "local-time construction missed its horizon 64 straight times".into(),
    ))
}

fn stable_validate(
    rc: &Resolved,
    art: &mut ArtifactWriter,
) -> Result<Vec<MetricReport>, HarnessError> {
    require_paths(rc.cfg.n_paths, 100)?;
    let n = rc.cfg.n_paths as usize;
    let p = rc.stable;
    let t = rc.grid.horizon;
    let master = rc.cfg.master_seed;
    let scale = (t * p.sigma_alpha).powf(1.0 / p.alpha);

    let mut rng = aux_stream(master, 0).auxiliary(0);
    let samples: Vec<f64> = (0..n).map(|_| sample_stable_increment(&p, t, &mut rng)).collect();
    art.write_samples("stable", &samples)?;
    let mut out = Vec::new();

    // Empirical characteristic function against exp(-t sigma |xi|^alpha),
    // probed at five frequencies spanning the distribution scale.
    let xis: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|c| c / scale).collect();
    let mut worst = 0.0f64;
    for pt in empirical_char_function(&samples, &xis) {
        let exact = (-t * p.sigma_alpha * pt.xi.abs().powf(p.alpha)).exp();
        worst = worst.max((pt.re - exact).abs().max(pt.im.abs()) / (3.0 * pt.stderr));
    }
    out.push(metric(
        "ecf_dev_over_3se",
        worst,
        1.0,
        "largest gap between the empirical and exact characteristic functions over five \
         frequencies, in units of three Monte Carlo standard errors",
    ));

    // Self-similarity: draws at horizon 2t shrunk by 2^(-1/alpha) share
    // the law of draws at t. Both sides are exact, so no allowance.
    let mut rng2 = aux_stream(master, 1).auxiliary(0);
    let shrink = 2.0f64.powf(-1.0 / p.alpha);
    let scaled: Vec<f64> =
        (0..n).map(|_| shrink * sample_stable_increment(&p, 2.0 * t, &mut rng2)).collect();
    out.push(metric(
        "selfsim_ks",
        ks_statistic(&samples, &scaled),
        ks_critical(n, n),
        "two-sample KS between rescaled double-horizon draws and plain draws; \
         1% critical value",
    ));

    // The alpha = 1 marginal is Cauchy with scale t * sigma.
    if (p.alpha - 1.0).abs() < 1e-12 {
        let c = t * p.sigma_alpha;
        let d = ks_to_cdf(&samples, |z| 0.5 + (z / c).atan() / std::f64::consts::PI);
        out.push(metric(
            "cauchy_cdf_ks",
            d,
            1.628 / (n as f64).sqrt(),
            "one-sample KS against the closed-form Cauchy distribution function; \
             1% critical value",
        ));
    }

    // Independent construction: Brownian motion subordinated by the
    // inverse local time, rescaled from its own normalization.
    let m = n.min(400);
    let by_grid = SimGrid::new(1e-3, 30.0);
    let by_scale = (t * p.sigma_alpha / kappa_alpha(p.alpha)).powf(1.0 / p.alpha);
    let mut rng3 = aux_stream(master, 2).auxiliary(0);
    let mut by = Vec::with_capacity(m);
    for _ in 0..m {
        by.push(by_scale * local_time_draw(p.alpha, &by_grid, 0.05, &mut rng3)?);
    }
    out.push(metric(
        "by_vs_cms_ks",
        ks_statistic(&by, &samples),
        ks_threshold(m, n),
        "KS between local-time-subordinated Brownian draws and direct stable draws; \
         1% critical value plus a discretization allowance",
    ));
    Ok(out)
}

fn free_limit(rc: &Resolved, art: &mut ArtifactWriter) -> Result<Vec<MetricReport>, HarnessError> {
    require_paths(rc.cfg.n_paths, 10)?;
    let n = rc.cfg.n_paths;
    let p = rc.stable;
    let master = rc.cfg.master_seed;
    let t = rc.grid.horizon;
    let dt = rc.grid.dt;
    let ladder = &rc.cfg.epsilon_ladder;
    // The ladder is strictly decreasing, so the checkpoints t / eps are
    // strictly increasing, as the functional runner requires.
    let checkpoints: Vec<f64> = ladder.iter().map(|eps| t / eps).collect();

    let rows = try_map(n, |i| {
        let stream = derive_stream(master, i);
        let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
        Ok(simulate_free_functionals(&rc.ff, 0.0, v0, dt, &checkpoints, &stream)?)
    })?;

    let mut r_end = aux_stream(master, 3).auxiliary(0);
    let ref_end: Vec<f64> =
        (0..N_REF).map(|_| sample_stable_increment(&p, t, &mut r_end)).collect();

    let mut out = Vec::new();
    for (k, &eps) in ladder.iter().enumerate() {
        let s = eps.powf(1.0 / p.alpha);
        let endpoint: Vec<f64> = rows.iter().map(|r| s * r[k].x).collect();
        let d = ks_statistic(&endpoint, &ref_end);
        let binding = k + 1 == ladder.len();
        out.push(metric(
            format!("free_endpoint_ks_eps{k}"),
            d,
            if binding { ks_threshold(endpoint.len(), N_REF) } else { 1.0 },
            if binding {
                "rescaled free endpoint against direct stable draws at the finest rung"
            } else {
                "coarser rescaling rung, recorded for the trend only"
            },
        ));
        if binding {
            art.write_samples("free_endpoint", &endpoint)?;
            // Supremum identity: the rescaled running maximum shares the
            // law of the process reflected on its running infimum.
            let sup: Vec<f64> = rows.iter().map(|r| s * r[k].running_max).collect();
            let ref_sup =
                cache::reflected_reference(&p, t, REF_DT, N_REF, cache_dir(rc).as_deref())?;
            out.push(metric(
                "free_sup_ks",
                ks_statistic(&sup, &ref_sup),
                ks_threshold(sup.len(), N_REF),
                "rescaled running supremum of the free path against the reflected stable \
                 marginal",
            ));
            art.write_samples("free_sup", &sup)?;
        }
    }
    Ok(out)
}

/// Shared body of the three restart-rule scaling scenarios: simulate one
/// batch per ladder rung, rescale by eps^(1/alpha), compare against the
/// reference law, and export the finest-rung samples plus a few paths.
fn scaling_ladder(
    rc: &Resolved,
    art: &mut ArtifactWriter,
    name: &str,
    reference: &[f64],
    endpoint: impl Fn(u64, u64, &SimGrid) -> Result<Option<f64>, HarnessError> + Sync,
    export_path: impl Fn(u64, &SimGrid) -> Result<Option<crate::engine::PathSample>, HarnessError>,
) -> Result<Vec<MetricReport>, HarnessError> {
    require_paths(rc.cfg.n_paths, 10)?;
    let n = rc.cfg.n_paths;
    let p = rc.stable;
    let t = rc.grid.horizon;
    let ladder = &rc.cfg.epsilon_ladder;
    let mut out = Vec::new();
    let mut censored_max = 0.0f64;
    let mut any_censored = false;

    for (k, &eps) in ladder.iter().enumerate() {
        let grid = SimGrid::new(rc.grid.dt, t / eps);
        let s = eps.powf(1.0 / p.alpha);
        let drawn = try_map(n, |i| endpoint(k as u64, i, &grid))?;
        let samples: Vec<f64> = drawn.iter().flatten().map(|x| s * x).collect();
        let censored = 1.0 - samples.len() as f64 / n as f64;
        if censored > 0.0 {
            any_censored = true;
        }
        censored_max = censored_max.max(censored);
        if samples.len() < 10 {
            return Err(HarnessError::Config(format!(
                "rung {k}: only {} of {n} paths produced a reading",
                samples.len()
            )));
        }
        let binding = k + 1 == ladder.len();
        out.push(metric(
            format!("{name}_ks_eps{k}"),
            ks_statistic(&samples, reference),
            if binding { ks_threshold(samples.len(), reference.len()) } else { 1.0 },
            if binding {
                "rescaled position at the finest rung against the limiting marginal"
            } else {
                "coarser rescaling rung, recorded for the trend only"
            },
        ));
        if binding {
            art.write_samples(name, &samples)?;
            if rc.cfg.out_dir.is_some() {
                for i in 0..n.min(N_EXPORT_PATHS) {
                    if let Some(path) = export_path(i, &grid)? {
                        art.write_path(i, &path)?;
                    }
                }
            }
        }
    }
    if any_censored {
        out.push(metric(
            format!("{name}_censored_fraction"),
            censored_max,
            0.05,
            "largest fraction of paths without a reading across the rungs",
        ));
    }
    Ok(out)
}

fn reflected_limit(
    rc: &Resolved,
    art: &mut ArtifactWriter,
) -> Result<Vec<MetricReport>, HarnessError> {
    let p = rc.stable;
    let master = rc.cfg.master_seed;
    let reference =
        cache::reflected_reference(&p, rc.grid.horizon, REF_DT, N_REF, cache_dir(rc).as_deref())?;
    let finest = rc.cfg.epsilon_ladder.len() as u64 - 1;
    scaling_ladder(
        rc,
        art,
        "reflected",
        &reference,
        |k, i, grid| {
            let stream = block_stream(master, k, i);
            let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
            Ok(Some(simulate_reflected_marginal(&rc.ff, &rc.mu, v0, grid, &stream)?))
        },
        |i, grid| {
            // Re-running the finest-rung stream reproduces the same path,
            // this time with nodes recorded.
            let stream = block_stream(master, finest, i);
            let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
            let stride = (grid.n_steps() as usize).div_ceil(4000).max(1);
            let rec = SimGrid::with_stride(grid.dt, grid.horizon, stride);
            Ok(Some(simulate_reflected(&rc.ff, &rc.mu, v0, &rec, &stream)?))
        },
    )
}

fn inelastic_limit(
    rc: &Resolved,
    art: &mut ArtifactWriter,
) -> Result<Vec<MetricReport>, HarnessError> {
    let p = rc.stable;
    let master = rc.cfg.master_seed;
    let reference =
        cache::reflected_reference(&p, rc.grid.horizon, REF_DT, N_REF, cache_dir(rc).as_deref())?;
    scaling_ladder(
        rc,
        art,
        "inelastic",
        &reference,
        |k, i, grid| {
            let stream = block_stream(master, k, i);
            let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
            let target = grid.horizon;
            // The active clock lags wall time, so the run may need more
            // room; restarting the same stream extends the same path.
            for mult in [3.0, 9.0] {
                let r = simulate_inelastic_marginal(
                    &rc.ff,
                    v0,
                    grid.dt,
                    target,
                    mult * target,
                    &stream,
                )?;
                if r.reached {
                    return Ok(Some(r.value));
                }
            }
            Ok(None)
        },
        |_, _| Ok(None),
    )
}

fn specular_limit(
    rc: &Resolved,
    art: &mut ArtifactWriter,
) -> Result<Vec<MetricReport>, HarnessError> {
    let p = rc.stable;
    let master = rc.cfg.master_seed;
    // The specular limit is the absolute value of the free stable
    // process, not the infimum reflection.
    let mut r_abs = aux_stream(master, 3).auxiliary(0);
    let reference: Vec<f64> = (0..N_REF)
        .map(|_| sample_stable_increment(&p, rc.grid.horizon, &mut r_abs).abs())
        .collect();
    scaling_ladder(
        rc,
        art,
        "specular",
        &reference,
        |k, i, grid| {
            let stream = block_stream(master, k, i);
            let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
            Ok(Some(simulate_specular_marginal(&rc.ff, v0, grid, &stream)?))
        },
        |_, _| Ok(None),
    )
}

fn tau_tail(rc: &Resolved, art: &mut ArtifactWriter) -> Result<Vec<MetricReport>, HarnessError> {
    require_paths(rc.cfg.n_paths, 1000)?;
    let n = rc.cfg.n_paths;
    let master = rc.cfg.master_seed;
    let dt = rc.grid.dt;
    let horizon = rc.grid.horizon;

    let rows = map_indexed(n, |i| {
        let stream = derive_stream(master, i);
        let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
        let mut rng = stream.brownian();
        tau_sigma_episode(&rc.ff, v0, REFRESH_LEVEL, dt, horizon, &mut rng)
    });
    let taus: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let sigmas: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
    art.write_samples("tau", &taus)?;
    art.write_samples("sigma", &sigmas)?;

    // Censored episodes park at the horizon, above the fit window, so
    // survival counts inside the window stay exact.
    let (t_lo, t_hi) = (horizon / 100.0, horizon / 3.0);
    let fit_tau = tail_exponent_fit(&taus, t_lo, t_hi, 10)?;
    let fit_sigma = tail_exponent_fit(&sigmas, t_lo, t_hi, 10)?;
    let gap = (fit_tau.slope - fit_sigma.slope).abs();
    let censored = rows.iter().filter(|r| r.sigma_censored).count() as f64 / n as f64;

    Ok(vec![
        metric(
            "tau_slope_dev",
            (fit_tau.slope + 0.5).abs(),
            0.07,
            "log-log survival slope of the return time over the fit window, against -1/2",
        ),
        metric(
            "sigma_slope_dev",
            (fit_sigma.slope + 0.5).abs(),
            0.07,
            "log-log survival slope of the refresh time over the fit window, against -1/2",
        ),
        metric(
            "tau_sigma_slope_gap",
            gap,
            0.07,
            "the two survival exponents coincide in the limit; at finite windows the \
             curves bend in opposite directions (the refresh climb shifts one of them), \
             so their slopes are compared at the same engineering tolerance as the \
             individual fits, not at regression-error level",
        ),
        metric(
            "episode_censored_fraction",
            censored,
            1.0,
            "episodes cut off at the horizon; informational",
        ),
    ])
}

fn timechange(rc: &Resolved, art: &mut ArtifactWriter) -> Result<Vec<MetricReport>, HarnessError> {
    require_paths(rc.cfg.n_paths, 8)?;
    let n = rc.cfg.n_paths;
    let master = rc.cfg.master_seed;
    let horizon = rc.grid.horizon;
    let checkpoints = [horizon / 100.0, horizon / 10.0, horizon];
    // Long runs record on a stride; the excursion clock itself still
    // accumulates every step.
    let stride = (rc.grid.n_steps() as usize).div_ceil(4000).max(rc.grid.record_stride);
    let grid = SimGrid::with_stride(rc.grid.dt, horizon, stride);

    let rows = try_map(n, |i| {
        let stream = derive_stream(master, i);
        let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
        Ok(second_construction(&rc.ff, &rc.mu, v0, &grid, &stream)?)
    })?;

    let mut ratios: [Vec<f64>; 3] = Default::default();
    for sc in &rows {
        for (j, &cp) in checkpoints.iter().enumerate() {
            let idx = sc.frak.times.partition_point(|&u| u <= cp).saturating_sub(1);
            if sc.frak.times[idx] > 0.0 {
                ratios[j].push(sc.aprime[idx] / sc.frak.times[idx]);
            }
        }
    }
    let meds: Vec<f64> = ratios.iter().map(|r| median(r)).collect();
    art.write_samples("active_ratio", &ratios[2])?;

    let mut out = vec![
        metric(
            "active_ratio_trend",
            (meds[0] - meds[1]).max(meds[1] - meds[2]),
            0.0,
            "largest decrease of the median excursion-time ratio A'_t / t across the probe \
             times t = horizon/100, horizon/10, horizon; the ratio must not fall",
        ),
        metric(
            "active_ratio_final_gap",
            1.0 - meds[2],
            0.1,
            "one minus the median ratio at the full horizon; excursion time dominates in \
             the long run",
        ),
        metric(
            "few_cycles_fraction",
            rows.iter().filter(|r| r.warning_few_cycles).count() as f64 / n as f64,
            1.0,
            "paths with fewer than two complete boundary cycles; informational",
        ),
    ];

    // The absorb-and-release particle tells the same story through its
    // active-time fraction.
    let m = n.min(32);
    let full = SimGrid::new(rc.grid.dt, horizon);
    let fracs = try_map(m, |i| {
        let stream = block_stream(master, 1, i);
        let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
        let free = simulate_free(&rc.ff, 0.0, v0, &full, &stream)?;
        Ok(inelastic_from_free(&free).active_fraction)
    })?;
    out.push(metric(
        "inelastic_active_gap",
        1.0 - median(&fracs),
        0.1,
        "one minus the median active-time fraction of the time-changed path over the \
         same horizon",
    ));
    Ok(out)
}

fn comparisons(rc: &Resolved, art: &mut ArtifactWriter) -> Result<Vec<MetricReport>, HarnessError> {
    require_paths(rc.cfg.n_paths, 2)?;
    let n = rc.cfg.n_paths;
    let master = rc.cfg.master_seed;
    let horizon = rc.grid.horizon;
    let deltas = [0.1 * horizon, 0.01 * horizon, 0.001 * horizon];

    struct Row {
        below_infimum: usize,
        above_reflected: usize,
        osc: [f64; 3],
    }
    let rows = try_map(n, |i| {
        let stream = derive_stream(master, i);
        let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
        // All three runs read the same Brownian lane, so they see the
        // same noise; only the boundary behavior differs.
        let refl = simulate_reflected(&rc.ff, &rc.mu, v0, &rc.grid, &stream)?;
        let free = simulate_free(&rc.ff, 0.0, v0, &rc.grid, &stream)?;
        let cycles = second_construction(&rc.ff, &rc.mu, v0, &rc.grid, &stream)?;
        let dom = reflect_on_infimum(&free);
        let below_infimum = (0..refl.len()).filter(|&j| refl.x[j] < dom.x[j]).count();
        let above_reflected =
            (0..dom.len()).filter(|&j| cycles.frak.x[j] > dom.x[j]).count();
        let cad = CadlagPath::piecewise_linear(refl.times.clone(), refl.x.clone())?;
        let osc = deltas.map(|d| oscillation(&cad, horizon, d));
        Ok(Row { below_infimum, above_reflected, osc })
    })?;

    let below: usize = rows.iter().map(|r| r.below_infimum).sum();
    let above: usize = rows.iter().map(|r| r.above_reflected).sum();
    let med: Vec<f64> = (0..3)
        .map(|j| median(&rows.iter().map(|r| r.osc[j]).collect::<Vec<_>>()))
        .collect();
    art.write_samples("oscillation", &rows.iter().map(|r| r.osc[2]).collect::<Vec<_>>())?;

    if rc.cfg.out_dir.is_some() {
        for i in 0..n.min(N_EXPORT_PATHS) {
            let stream = derive_stream(master, i);
            let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
            let path = simulate_reflected(&rc.ff, &rc.mu, v0, &rc.grid, &stream)?;
            art.write_path(i, &path)?;
        }
    }

    Ok(vec![
        metric(
            "restart_below_infimum_nodes",
            below as f64,
            0.5,
            "grid nodes where the restarted path sits below the shared-noise free path \
             reflected on its running infimum; the coupling forbids any",
        ),
        metric(
            "cycles_above_reflected_nodes",
            above as f64,
            0.5,
            "grid nodes where the cycle construction exceeds the reflected free path; \
             forbidden pathwise",
        ),
        metric(
            "oscillation_monotone_drop",
            (med[1] - med[0]).max(med[2] - med[1]),
            0.0,
            "largest increase of the median delta-oscillation as delta shrinks tenfold; \
             the oscillation of a fixed path cannot grow as the window shrinks",
        ),
    ])
}

fn generator_checks(
    rc: &Resolved,
    art: &mut ArtifactWriter,
) -> Result<Vec<MetricReport>, HarnessError> {
    require_paths(rc.cfg.n_paths, 100)?;
    let p = rc.stable;
    let master = rc.cfg.master_seed;
    let mut out = Vec::new();

    // Integral-form agreement away from the boundary. The
    // integrated-by-parts form is principal-value-free only below
    // alpha = 1, so the check runs only there.
    if p.alpha < 1.0 {
        let f = TestFunction::smooth_bump(1.0, 3.0);
        let quad = QuadratureSpec::with_rel_tol(1e-9);
        let mut worst = 0.0f64;
        for &x in &[0.5, 2.0, 10.0] {
            let a = fractional_generator(&p, &f, x, quad)?;
            let b = fractional_generator_by_parts(&p, &f, x, quad)?;
            worst = worst.max((a - b).abs());
        }
        out.push(metric(
            "generator_forms_gap",
            worst,
            1e-5,
            "largest gap between the jump-integral and integrated-by-parts forms of the \
             generator on a smooth bump, over three probe points",
        ));
    }

    // Weak form along the reflected stable process: finite difference
    // of E[phi] against the generator expectation, on coupled pairs
    // read off single paths. A path that jumps across the bump inside
    // the window contributes O(1/h) to its pair difference, so the
    // per-pair empirical variance can collapse in a draw that happens
    // to contain few such crossings. An independent rerun at half the
    // window calibrates the allowance: the spread between the two
    // windows prices the window bias and the part of the sampling
    // noise the per-pair variance missed, whichever dominates.
    let n_pairs = rc.cfg.n_paths as usize;
    let (t, h) = (rc.grid.horizon, 0.05 * rc.grid.horizon);
    let mut rng = aux_stream(master, 4).auxiliary(0);
    let mut draws = Vec::new();
    for span in [h, 0.5 * h] {
        let pair_grid = SimGrid::new(rc.grid.dt, t + span);
        let mut lo = Vec::with_capacity(n_pairs);
        let mut hi = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            let (a, b) = sample_reflected_pair(&p, t, t + span, &pair_grid, &mut rng);
            lo.push(a);
            hi.push(b);
        }
        draws.push((span, lo, hi));
    }
    let quad = QuadratureSpec::with_rel_tol(1e-7);
    let mut worst = 0.0f64;
    // Bump supports stay strictly inside the half line so the boundary
    // derivative condition holds for every alpha.
    for (a, b) in [(1.0, 3.0), (0.5, 2.5), (1.5, 4.0)] {
        let f = TestFunction::smooth_bump(a, b);
        let r_full = weak_form_residual(&p, &f, t, draws[0].0, &draws[0].1, &draws[0].2, quad)?;
        let r_half = weak_form_residual(&p, &f, t, draws[1].0, &draws[1].1, &draws[1].2, quad)?;
        let signed_full = r_full.finite_difference - r_full.generator_mean;
        let signed_half = r_half.finite_difference - r_half.generator_mean;
        let slope = (signed_full - signed_half).abs() / (0.5 * h);
        worst = worst.max(r_full.residual / (3.0 * (r_full.stderr + h * slope)));
    }
    out.push(metric(
        "weak_form_residual_over_band",
        worst,
        1.0,
        "largest weak-form residual over three bump test functions, relative to three \
         times the standard error plus a window-halving error estimate",
    ));

    // Kinetic transport identity with boundary terms, on reflected runs
    // of the particle system itself.
    let n_kin = rc.cfg.n_paths.min(64);
    let kin_grid = SimGrid::new(2e-3, 40.0);
    let paths = try_map(n_kin, |i| {
        let stream = block_stream(master, 2, i);
        let v0 = rc.mu.sample(&mut stream.auxiliary(V0_LANE));
        Ok(simulate_reflected(&rc.ff, &rc.mu, v0, &kin_grid, &stream)?)
    })?;
    let ktf = KineticTestFunction {
        time: FactorProfile::bump(1.0, 30.0),
        space: FactorProfile::plateau(1.0, 3.0),
        velocity: FactorProfile::symmetric_plateau(2.0, 4.0),
    };
    let rep = kinetic_weak_form_check(&rc.ff, &paths, &ktf);
    out.push(metric(
        "kinetic_weak_residual",
        rep.residual.abs(),
        3.0 * rep.stderr + 0.01,
        "transport-identity residual (volume + boundary - through terms) on reflected \
         runs; three standard errors plus a discretization floor",
    ));
    out.push(match rep.factorization {
        Some(fc) => metric(
            "boundary_factorization_ks",
            fc.statistic,
            fc.critical,
            "outgoing restart speeds split at the median event time share one law; \
             two-sample KS at the 1% critical value",
        ),
        None => metric(
            "boundary_factorization_ks",
            0.0,
            1.0,
            format!("skipped: only {} restart events, need 100", rep.n_events),
        ),
    });

    // Boundary asymptotics of the reflected stable density. The grid
    // must resolve displacements below a tenth of the first decile or
    // the discrete supremum flattens the near-boundary slope.
    let mut rng_d = aux_stream(master, 5).auxiliary(0);
    let d_grid = SimGrid::new(1.0 / 2048.0, 1.0);
    let samples: Vec<f64> =
        (0..30_000).map(|_| sample_reflected_marginal(&p, 1.0, &d_grid, &mut rng_d)).collect();
    art.write_samples("reflected_marginal", &samples)?;
    let da = density_asymptotics_check(&samples, p.alpha)?;
    out.push(metric(
        "density_tail_exponent_dev",
        (da.tail.slope - da.tail_expected).abs(),
        0.15,
        "survival exponent on the top decade of the reflected marginal, against -alpha",
    ));
    out.push(match da.small_x {
        Some(sx) => metric(
            "density_smallx_exponent_dev",
            (sx.exponent - da.small_x_expected).abs(),
            0.10,
            "log-log density slope near the boundary, against alpha/2 - 1",
        ),
        None => metric(
            "density_smallx_exponent_dev",
            1.0,
            0.0,
            "no usable mass in the bottom decade; the sampling step is too coarse",
        ),
    });
    Ok(out)
}
