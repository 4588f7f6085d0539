//! Jump-topology diagnostics: the oscillation functional and an
//! approximate M1 distance between completed graphs.

use super::{AnalysisError, CadlagPath, Interpretation};

/// Distance from `v` to the closed interval spanned by `a` and `b`:
/// zero if `v` lies between them, otherwise the gap to the nearer end.
#[cfg(test)]
fn segment_distance(v: f64, a: f64, b: f64) -> f64 {
    let lo = a.min(b);
    let hi = a.max(b);
    if v < lo {
        lo - v
    } else if v > hi {
        v - hi
    } else {
        0.0
    }
}

/// Evaluation points for the triple search. Piecewise-constant paths
/// contribute the left limit ahead of each jump, so the supremum over
/// grid triples equals the supremum over continuous triples whenever
/// the jumps sit on the grid.
fn eval_points(p: &CadlagPath, t_end: f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(2 * p.len());
    match p.interpretation {
        Interpretation::PiecewiseLinear => {
            for i in 0..p.len() {
                if p.times[i] >= t_end {
                    pts.push((t_end, p.value_at(t_end)));
                    return pts;
                }
                pts.push((p.times[i], p.values[i]));
            }
        }
        Interpretation::PiecewiseConstant => {
            pts.push((p.times[0], p.values[0]));
            for i in 1..p.len() {
                if p.times[i] >= t_end {
                    break;
                }
                // Left limit, then the post-jump value at the same time.
                pts.push((p.times[i], p.values[i - 1]));
                pts.push((p.times[i], p.values[i]));
            }
            pts.push((t_end, p.value_at(t_end)));
        }
    }
    pts
}

/// Oscillation of the path over `[0, t_end]` at scale `delta`: the
/// largest distance from a middle value to the segment spanned by two
/// flanking values, over all time triples spanning at most `2 delta`.
///
/// The search runs over grid triples. This is exact for
/// piecewise-constant paths with on-grid jumps; for piecewise-linear
/// paths the truncation error is bounded by one grid cell's variation.
pub fn oscillation(p: &CadlagPath, t_end: f64, delta: f64) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    let last = *p.times.last().unwrap();
    assert!(
        t_end <= last + 1e-12 * last.abs().max(1.0),
        "t_end {t_end} beyond path span {last}"
    );
    let pts = eval_points(p, t_end);
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut best = 0.0f64;
    let mut sufmin = vec![0.0f64; n + 1];
    let mut sufmax = vec![0.0f64; n + 1];
    let mut c = 0usize;
    for a in 0..n {
        if c < a {
            c = a;
        }
        while c + 1 < n && pts[c + 1].0 <= pts[a].0 + 2.0 * delta {
            c += 1;
        }
        if c < a + 2 {
            continue;
        }
        // Suffix extrema of the values over (b, c].
        sufmin[c + 1] = f64::INFINITY;
        sufmax[c + 1] = f64::NEG_INFINITY;
        for j in (a + 1..=c).rev() {
            sufmin[j] = sufmin[j + 1].min(pts[j].1);
            sufmax[j] = sufmax[j + 1].max(pts[j].1);
        }
        let ya = pts[a].1;
        for b in a + 1..c {
            let yb = pts[b].1;
            let above = yb - ya.max(sufmin[b + 1]);
            let below = ya.min(sufmax[b + 1]) - yb;
            best = best.max(above).max(below);
        }
    }
    best.max(0.0)
}

/// Completed graph of the path on `[0, t_end]`: the polyline through
/// the nodes, with vertical segments inserted at jumps.
fn completed_graph(p: &CadlagPath, t_end: f64) -> Vec<(f64, f64)> {
    let mut g: Vec<(f64, f64)> = Vec::with_capacity(2 * p.len());
    let push = |pt: (f64, f64), g: &mut Vec<(f64, f64)>| {
        if g.last() != Some(&pt) {
            g.push(pt);
        }
    };
    match p.interpretation {
        Interpretation::PiecewiseLinear => {
            for i in 0..p.len() {
                if p.times[i] >= t_end {
                    push((t_end, p.value_at(t_end)), &mut g);
                    return g;
                }
                push((p.times[i], p.values[i]), &mut g);
            }
        }
        Interpretation::PiecewiseConstant => {
            push((p.times[0], p.values[0]), &mut g);
            for i in 1..p.len() {
                if p.times[i] >= t_end {
                    break;
                }
                push((p.times[i], p.values[i - 1]), &mut g);
                push((p.times[i], p.values[i]), &mut g);
            }
            push((t_end, p.value_at(t_end)), &mut g);
        }
    }
    g
}

/// Resamples a polyline at `n` points equally spaced in arc length.
fn resample(g: &[(f64, f64)], n: usize) -> Vec<(f64, f64)> {
    let seg_len: Vec<f64> = g
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .collect();
    let total: f64 = seg_len.iter().sum();
    if total == 0.0 {
        return vec![g[0]; n];
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    let mut done = 0.0f64;
    for k in 0..n {
        let target = total * k as f64 / (n - 1) as f64;
        while seg < seg_len.len() - 1 && done + seg_len[seg] < target {
            done += seg_len[seg];
            seg += 1;
        }
        let u = if seg_len[seg] > 0.0 {
            ((target - done) / seg_len[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (a, b) = (g[seg], g[seg + 1]);
        out.push((a.0 + u * (b.0 - a.0), a.1 + u * (b.1 - a.1)));
    }
    out
}

/// Approximate M1 distance between two paths on `[0, t_end]`: both
/// completed graphs are resampled to `grid_n` points in arc-length
/// order, and the maximal coordinate-wise gap is minimized over
/// monotone alignments of the two point sequences by dynamic
/// programming. Upper-biased; the bias shrinks as `grid_n` grows.
pub fn m1_distance_approx(
    p: &CadlagPath,
    q: &CadlagPath,
    t_end: f64,
    grid_n: usize,
) -> Result<f64, AnalysisError> {
    assert!(grid_n >= 2);
    for path in [p, q] {
        let covered = *path.times.last().unwrap();
        if covered < t_end {
            return Err(AnalysisError::Coverage {
                covered,
                required: t_end,
            });
        }
    }
    let r1 = resample(&completed_graph(p, t_end), grid_n);
    let r2 = resample(&completed_graph(q, t_end), grid_n);
    let cost = |i: usize, j: usize| -> f64 {
        (r1[i].0 - r2[j].0).abs().max((r1[i].1 - r2[j].1).abs())
    };
    // Frechet-style DP over the alignment lattice, rolling one row.
    let mut prev = vec![0.0f64; grid_n];
    prev[0] = cost(0, 0);
    for j in 1..grid_n {
        prev[j] = prev[j - 1].max(cost(0, j));
    }
    let mut row = vec![0.0f64; grid_n];
    for i in 1..grid_n {
        row[0] = prev[0].max(cost(i, 0));
        for j in 1..grid_n {
            let reach = prev[j].min(prev[j - 1]).min(row[j - 1]);
            row[j] = reach.max(cost(i, j));
        }
        std::mem::swap(&mut prev, &mut row);
    }
    Ok(prev[grid_n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn step_path() -> CadlagPath {
        CadlagPath::piecewise_constant(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0, 0.0])
            .unwrap()
    }

    #[test]
    fn oscillation_of_monotone_path_is_zero() {
        let p = CadlagPath::piecewise_linear(
            vec![0.0, 0.5, 1.0, 2.0],
            vec![0.0, 0.1, 0.4, 2.0],
        )
        .unwrap();
        assert_eq!(oscillation(&p, 2.0, 0.3), 0.0);
        assert_eq!(oscillation(&p, 2.0, 5.0), 0.0);
    }

    #[test]
    fn oscillation_of_plateau_at_wide_scale() {
        // Window of width 2 sees the full up-down excursion.
        assert_eq!(oscillation(&step_path(), 3.0, 1.0), 1.0);
    }

    #[test]
    fn oscillation_of_plateau_at_narrow_scale() {
        // Windows of width 0.8 never see both jumps.
        assert_eq!(oscillation(&step_path(), 3.0, 0.4), 0.0);
    }

    #[test]
    fn oscillation_monotone_in_delta() {
        let p = CadlagPath::piecewise_linear(
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            vec![0.0, 1.0, -0.5, 0.8, -0.2, 0.6],
        )
        .unwrap();
        let mut last = 0.0;
        for delta in [0.2, 0.5, 1.0, 2.0, 4.0] {
            let w = oscillation(&p, 5.0, delta);
            assert!(w >= last, "w({delta}) = {w} < {last}");
            last = w;
        }
    }

    #[test]
    fn oscillation_vanishes_with_delta_on_continuous_paths() {
        // A Brownian-like continuous path oscillates less at finer scale.
        let mut rng = RngStream::new(50, 0).auxiliary(0);
        let n = 10_000usize;
        let dt = 1.0 / n as f64;
        let mut times = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(n + 1);
        let mut w = 0.0f64;
        for k in 0..=n {
            times.push(k as f64 * dt);
            values.push(w);
            w += dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        let p = CadlagPath::piecewise_linear(times, values).unwrap();
        let coarse = oscillation(&p, 1.0, 1e-1);
        let fine = oscillation(&p, 1.0, 1e-3);
        assert!(
            fine < coarse,
            "oscillation did not shrink: {fine} vs {coarse}"
        );
    }

    #[test]
    fn suffix_scan_matches_brute_force_triples() {
        // The windowed suffix-extrema scan must agree with a direct
        // O(n^3) search over all admissible triples.
        let mut rng = RngStream::new(51, 0).auxiliary(0);
        for trial in 0..5 {
            let n = 40 + 10 * trial;
            let times: Vec<f64> = (0..n).map(|k| k as f64 * 0.1).collect();
            let values: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let t_end = times[n - 1];
            let p = CadlagPath::piecewise_linear(times, values).unwrap();
            for delta in [0.15, 0.35, 0.8] {
                let fast = oscillation(&p, t_end, delta);
                let pts = super::eval_points(&p, t_end);
                let mut brute = 0.0f64;
                for a in 0..pts.len() {
                    for b in a + 1..pts.len() {
                        for c in b + 1..pts.len() {
                            // Same float expression as the scan's window
                            // bound, so inclusion agrees bitwise.
                            if pts[c].0 <= pts[a].0 + 2.0 * delta {
                                brute = brute.max(super::segment_distance(
                                    pts[b].1, pts[a].1, pts[c].1,
                                ));
                            }
                        }
                    }
                }
                assert_eq!(fast, brute, "trial {trial} delta {delta}");
            }
        }
    }

    #[test]
    fn m1_distance_to_self_is_zero() {
        let p = step_path();
        assert_eq!(m1_distance_approx(&p, &p, 3.0, 64).unwrap(), 0.0);
    }

    #[test]
    fn m1_distance_between_constants() {
        let a = CadlagPath::piecewise_constant(vec![0.0, 2.0], vec![0.3, 0.3]).unwrap();
        let b = CadlagPath::piecewise_constant(vec![0.0, 2.0], vec![-0.9, -0.9]).unwrap();
        let d = m1_distance_approx(&a, &b, 2.0, 128).unwrap();
        assert!((d - 1.2).abs() < 1e-12, "distance {d}");
    }

    #[test]
    fn m1_step_versus_steep_ramp() {
        // The classic example: a jump against its linear smoothing stays
        // close in this topology.
        let delta = 0.1;
        let grid_n = 200usize;
        let step =
            CadlagPath::piecewise_constant(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).unwrap();
        let ramp = CadlagPath::piecewise_linear(
            vec![0.0, 1.0 - delta, 1.0, 2.0],
            vec![0.0, 0.0, 1.0, 1.0],
        )
        .unwrap();
        let d = m1_distance_approx(&step, &ramp, 2.0, grid_n).unwrap();
        assert!(d <= delta + 2.0 / grid_n as f64 + 1e-9, "distance {d}");
    }

    #[test]
    fn m1_symmetry_and_triangle_slack() {
        let a = step_path();
        let b = CadlagPath::piecewise_linear(
            vec![0.0, 0.9, 1.0, 2.0, 3.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        let c = CadlagPath::piecewise_constant(vec![0.0, 3.0], vec![0.2, 0.2]).unwrap();
        let n = 128usize;
        let dab = m1_distance_approx(&a, &b, 3.0, n).unwrap();
        let dba = m1_distance_approx(&b, &a, 3.0, n).unwrap();
        assert_eq!(dab, dba);
        let dac = m1_distance_approx(&a, &c, 3.0, n).unwrap();
        let dbc = m1_distance_approx(&b, &c, 3.0, n).unwrap();
        assert!(dac <= dab + dbc + 2.0 / n as f64, "{dac} vs {dab} + {dbc}");
    }

    #[test]
    fn m1_rejects_short_paths() {
        let a = CadlagPath::piecewise_constant(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let b = step_path();
        assert!(matches!(
            m1_distance_approx(&a, &b, 3.0, 64),
            Err(AnalysisError::Coverage { .. })
        ));
    }
}
