//! Disk cache for reference reflected-stable samples.
//!
//! The reflected-stable marginal (equivalently, by the supremum
//! identity, the running supremum of the free stable path) is the
//! oracle several scenarios compare against. Generating it needs
//! `t / dt` stable increments per draw, so batches are cached on disk
//! keyed by every input that affects the draw: `(alpha, sigma_alpha, t,
//! dt, n, seed)`. The seed is a fixed constant independent of any
//! scenario's master seed, which lets different runs share one file.
//!
//! Files are one `value` column; floats are written in shortest
//! round-trip form, so a cache hit reproduces the generated samples
//! bit for bit.

use super::HarnessError;
use crate::engine::{RngStream, SimGrid};
use crate::model::StableParams;
use crate::stable::sample_reflected_marginal;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Seed of the reference stream; shared by every cache consumer.
pub const REFERENCE_SEED: u64 = 0x5EED_CAFE;

/// File-name-safe rendering of one float key component.
fn key(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}

fn file_name(params: &StableParams, t: f64, dt: f64, n: usize) -> String {
    format!(
        "refl_stable_a{}_s{}_t{}_dt{}_n{n}_seed{REFERENCE_SEED}.csv",
        key(params.alpha),
        key(params.sigma_alpha),
        key(t),
        key(dt),
    )
}

fn generate(params: &StableParams, t: f64, dt: f64, n: usize) -> Vec<f64> {
    let grid = SimGrid::new(dt, t);
    let mut rng = RngStream::new(REFERENCE_SEED, 0).auxiliary(0);
    (0..n)
        .map(|_| sample_reflected_marginal(params, t, &grid, &mut rng))
        .collect()
}

/// Reference samples of the reflected stable marginal at time `t`,
/// discretized with step `dt`. With a cache directory the batch is
/// read back if present and written after generation otherwise.
pub fn reflected_reference(
    params: &StableParams,
    t: f64,
    dt: f64,
    n: usize,
    cache_dir: Option<&Path>,
) -> Result<Vec<f64>, HarnessError> {
    let Some(dir) = cache_dir else {
        return Ok(generate(params, t, dt, n));
    };
    std::fs::create_dir_all(dir)?;
    let path = dir.join(file_name(params, t, dt, n));
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        let mut out = Vec::with_capacity(n);
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                continue;
            }
            out.push(line.parse::<f64>().map_err(|_| {
                HarnessError::Config(format!(
                    "corrupt cache line {i} in {}: {line:?}",
                    path.display()
                ))
            })?);
        }
        if out.len() != n {
            return Err(HarnessError::Config(format!(
                "cache {} holds {} samples, expected {n}",
                path.display(),
                out.len()
            )));
        }
        return Ok(out);
    }
    let samples = generate(params, t, dt, n);
    let mut w = BufWriter::new(std::fs::File::create(&path)?);
    writeln!(w, "value")?;
    for v in &samples {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(samples)
}
