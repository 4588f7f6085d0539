//! Measurements on paths: running extrema, hitting times, convergence
//! diagnostics for jump topologies, distribution test statistics, and
//! heavy-tail exponent fits.

mod m1;
mod tails;

pub use m1::{m1_distance_approx, oscillation};
pub use tails::{hill_estimator, tail_exponent_fit, TailFit};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("path must have at least one node")]
    EmptyPath,
    #[error("times must be strictly increasing (violated at index {0})")]
    NonIncreasingTimes(usize),
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("path covers [0, {covered}] but [0, {required}] is required")]
    Coverage { covered: f64, required: f64 },
    #[error("only {found} usable fit points (need at least {need})")]
    TooFewFitPoints { found: usize, need: usize },
}

/// How values between nodes are meant: right-continuous steps with jumps
/// at the nodes, or linear interpolation (a continuous path).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpretation {
    PiecewiseConstant,
    PiecewiseLinear,
}

/// Crossing direction for hitting-time extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Down,
    Up,
}

/// A scalar path on a finite grid with an interpolation convention.
#[derive(Debug, Clone)]
pub struct CadlagPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub interpretation: Interpretation,
}

impl CadlagPath {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        interpretation: Interpretation,
    ) -> Result<Self, AnalysisError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(AnalysisError::EmptyPath);
        }
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) {
                return Err(AnalysisError::NonIncreasingTimes(i));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFiniteValue(i));
        }
        Ok(Self {
            times,
            values,
            interpretation,
        })
    }

    pub fn piecewise_linear(times: Vec<f64>, values: Vec<f64>) -> Result<Self, AnalysisError> {
        Self::new(times, values, Interpretation::PiecewiseLinear)
    }

    pub fn piecewise_constant(times: Vec<f64>, values: Vec<f64>) -> Result<Self, AnalysisError> {
        Self::new(times, values, Interpretation::PiecewiseConstant)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at an arbitrary time inside the span, per the convention.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        // First node strictly past t.
        let hi = self.times.partition_point(|&s| s <= t);
        let lo = hi - 1;
        match self.interpretation {
            Interpretation::PiecewiseConstant => self.values[lo],
            Interpretation::PiecewiseLinear => {
                let u = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
                self.values[lo] + u * (self.values[hi] - self.values[lo])
            }
        }
    }
}

/// Pointwise running minimum and maximum, single pass.
pub fn running_extrema(p: &CadlagPath) -> (CadlagPath, CadlagPath) {
    let mut lo = Vec::with_capacity(p.len());
    let mut hi = Vec::with_capacity(p.len());
    let mut cur_lo = f64::INFINITY;
    let mut cur_hi = f64::NEG_INFINITY;
    for &v in &p.values {
        cur_lo = cur_lo.min(v);
        cur_hi = cur_hi.max(v);
        lo.push(cur_lo);
        hi.push(cur_hi);
    }
    (
        CadlagPath {
            times: p.times.clone(),
            values: lo,
            interpretation: p.interpretation,
        },
        CadlagPath {
            times: p.times.clone(),
            values: hi,
            interpretation: p.interpretation,
        },
    )
}

/// All crossing times of `level` in the given direction, located by
/// linear interpolation on each segment. Requires the continuous
/// (piecewise-linear) reading of the path.
pub fn extract_hitting_times(p: &CadlagPath, level: f64, direction: Direction) -> Vec<f64> {
    assert_eq!(
        p.interpretation,
        Interpretation::PiecewiseLinear,
        "hitting times need the continuous path reading"
    );
    let mut out = Vec::new();
    for i in 1..p.len() {
        let (a, b) = (p.values[i - 1], p.values[i]);
        let crossed = match direction {
            Direction::Down => a > level && b <= level,
            Direction::Up => a < level && b >= level,
        };
        if crossed {
            let u = (level - a) / (b - a);
            out.push(p.times[i - 1] + u * (p.times[i] - p.times[i - 1]));
        }
    }
    out
}

/// Two-sample Kolmogorov-Smirnov statistic, `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < sa.len() && j < sb.len() {
        // Advance past ties together so both CDFs are read at the same
        // point.
        let t = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= t {
            i += 1;
        }
        while j < sb.len() && sb[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov statistic against an analytic CDF.
pub fn ks_to_cdf(a: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!a.is_empty());
    let mut s = a.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Empirical characteristic function at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharFunctionPoint {
    pub xi: f64,
    pub re: f64,
    pub im: f64,
    /// Monte Carlo standard error, `1/sqrt(N)`.
    pub stderr: f64,
}

/// `(1/N) sum exp(i xi x_j)` for each frequency.
pub fn empirical_char_function(samples: &[f64], xis: &[f64]) -> Vec<CharFunctionPoint> {
    assert!(!samples.is_empty());
    let n = samples.len() as f64;
    let stderr = 1.0 / n.sqrt();
    xis.iter()
        .map(|&xi| {
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for &x in samples {
                let (s, c) = (xi * x).sin_cos();
                re += c;
                im += s;
            }
            CharFunctionPoint {
                xi,
                re: re / n,
                im: im / n,
                stderr,
            }
        })
        .collect()
}
