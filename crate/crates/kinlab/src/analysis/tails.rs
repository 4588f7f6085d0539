//! Heavy-tail exponent estimation from positive samples.

use super::AnalysisError;

/// Least-squares fit of the log empirical survival function against
/// log time over log-spaced abscissae.
#[derive(Debug, Clone, Copy)]
pub struct TailFit {
    /// Slope of log-survival versus log-t (a power tail `t^{-r}` gives
    /// slope `-r`).
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the regression residuals.
    pub stderr: f64,
    /// First and last abscissae actually used.
    pub fit_range: (f64, f64),
    pub n_points: usize,
}

/// Minimum sample count behind a survival estimate admitted to the fit;
/// below this the relative Monte Carlo error is unusable.
const MIN_TAIL_COUNT: f64 = 50.0;

/// Minimum number of usable abscissae.
const MIN_FIT_POINTS: usize = 5;

/// Fits `log S(t) ~ intercept + slope log t` on `n_points` log-spaced
/// abscissae in `[t_min, t_max]`, where `S` is the empirical survival
/// function. Abscissae whose survival rests on fewer than 50 samples
/// are dropped; fewer than 5 surviving points is an error.
pub fn tail_exponent_fit(
    samples: &[f64],
    t_min: f64,
    t_max: f64,
    n_points: usize,
) -> Result<TailFit, AnalysisError> {
    assert!(t_min > 0.0 && t_max > t_min && n_points >= MIN_FIT_POINTS);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let log_step = (t_max / t_min).ln() / (n_points - 1) as f64;
    let mut us = Vec::with_capacity(n_points);
    let mut ys = Vec::with_capacity(n_points);
    let mut used_range = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..n_points {
        let t = t_min * (log_step * j as f64).exp();
        let above = (sorted.len() - sorted.partition_point(|&x| x <= t)) as f64;
        if above < MIN_TAIL_COUNT {
            continue;
        }
        us.push(t.ln());
        ys.push((above / n).ln());
        used_range.0 = used_range.0.min(t);
        used_range.1 = used_range.1.max(t);
    }
    let m = us.len();
    if m < MIN_FIT_POINTS {
        return Err(AnalysisError::TooFewFitPoints {
            found: m,
            need: MIN_FIT_POINTS,
        });
    }
    let u_bar = us.iter().sum::<f64>() / m as f64;
    let y_bar = ys.iter().sum::<f64>() / m as f64;
    let sxx: f64 = us.iter().map(|u| (u - u_bar).powi(2)).sum();
    let sxy: f64 = us
        .iter()
        .zip(&ys)
        .map(|(u, y)| (u - u_bar) * (y - y_bar))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * u_bar;
    let ss_res: f64 = us
        .iter()
        .zip(&ys)
        .map(|(u, y)| (y - intercept - slope * u).powi(2))
        .sum();
    let stderr = (ss_res / (m as f64 - 2.0) / sxx).sqrt();
    Ok(TailFit {
        slope,
        intercept,
        stderr,
        fit_range: used_range,
        n_points: m,
    })
}

/// Hill estimator of the tail index from the top `k` order statistics:
/// the reciprocal of the mean log-excess over the `(k+1)`-th largest
/// sample.
pub fn hill_estimator(samples: &[f64], k: usize) -> f64 {
    assert!(k >= 1 && k < samples.len());
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let thresh = sorted[n - k - 1];
    assert!(thresh > 0.0, "Hill needs positive order statistics");
    let mean_log: f64 = sorted[n - k..]
        .iter()
        .map(|&x| (x / thresh).ln())
        .sum::<f64>()
        / k as f64;
    1.0 / mean_log
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Exact Pareto quantile grid with survival `t^{-1/index_inv}`.
    fn pareto_grid(n: usize, exponent: f64) -> Vec<f64> {
        (1..=n).map(|i| (i as f64 / n as f64).powf(-exponent)).collect()
    }

    #[test]
    fn recovers_pareto_half_slope() {
        // x_i = (i/N)^{-2} has survival t^{-1/2} exactly.
        let xs = pareto_grid(10_000, 2.0);
        let fit = tail_exponent_fit(&xs, 2.0, 100.0, 12).unwrap();
        assert!((fit.slope + 0.5).abs() <= 0.02, "slope {}", fit.slope);
        assert!(fit.n_points >= 5);
        assert!(fit.fit_range.0 < fit.fit_range.1);
    }

    #[test]
    fn exponential_tail_reads_steeper_than_any_power() {
        let mut rng = crate::engine::RngStream::new(60, 0).auxiliary(0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln())
            .collect();
        let fit = tail_exponent_fit(&xs, 1.0, 6.0, 10).unwrap();
        assert!(fit.slope < -2.0, "slope {}", fit.slope);
    }

    #[test]
    fn rejects_fits_with_too_few_points() {
        // Samples capped at 3, abscissae mostly beyond the data.
        let xs = vec![1.0; 1000];
        assert!(matches!(
            tail_exponent_fit(&xs, 2.0, 50.0, 8),
            Err(AnalysisError::TooFewFitPoints { .. })
        ));
    }

    #[test]
    fn hill_recovers_unit_index() {
        let xs = pareto_grid(100_000, 1.0);
        let hill = hill_estimator(&xs, 5_000);
        assert!((hill - 1.0).abs() <= 0.05, "hill {hill}");
    }

    #[test]
    fn lighter_tails_push_hill_up() {
        let xs = pareto_grid(50_000, 0.5); // survival t^{-2}
        let hill = hill_estimator(&xs, 2_500);
        assert!((hill - 2.0).abs() <= 0.1, "hill {hill}");
    }

    #[test]
    fn normalized_sums_of_moderate_tails_shrink() {
        // For positive i.i.d. samples with sqrt(t) P(X > t) -> 0, the
        // sums S_n / n^2 collapse: medians decrease over decades of n.
        let mut rng = crate::engine::RngStream::new(61, 0).auxiliary(0);
        let mut lognormal = || {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            z.exp()
        };
        let reps = 200;
        let mut medians = Vec::new();
        for n in [100usize, 1_000, 10_000] {
            let mut vals: Vec<f64> = (0..reps)
                .map(|_| {
                    let s: f64 = (0..n).map(|_| lognormal()).sum();
                    s / (n as f64 * n as f64)
                })
                .collect();
            vals.sort_by(f64::total_cmp);
            medians.push(vals[reps / 2]);
        }
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "medians {medians:?}"
        );
    }

    #[test]
    fn lighter_summand_does_not_move_the_tail_fit() {
        // Pareto(1/2) plus an independent lognormal has the same tail
        // exponent as the Pareto part alone.
        let mut rng = crate::engine::RngStream::new(62, 0).auxiliary(0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| rng.random::<f64>().max(1e-12).powf(-2.0))
            .collect();
        let sums: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                x + z.exp()
            })
            .collect();
        let fx = tail_exponent_fit(&xs, 100.0, 5_000.0, 10).unwrap();
        let fs = tail_exponent_fit(&sums, 100.0, 5_000.0, 10).unwrap();
        assert!(
            (fx.slope - fs.slope).abs() <= fx.stderr + fs.stderr + 0.01,
            "slopes {} vs {}",
            fx.slope,
            fs.slope
        );
    }
}
