//! CSV and JSON artifact emission.
//!
//! All files are written with plain `Display` formatting for floats
//! (shortest round-trip form), so identical runs produce byte-identical
//! artifacts. Writers flush eagerly enough that partial results survive
//! an abort mid-scenario.

use super::{ExperimentReport, HarnessError};
use crate::engine::PathSample;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

/// Cap on full paths exported to `paths.csv`; the CSVs document what a
/// run looked like, they are not the statistical output.
const MAX_EXPORTED_PATHS: u64 = 3;

/// Cap on nodes per exported path; longer paths are thinned by stride.
const MAX_NODES_PER_PATH: usize = 4000;

/// Writes scenario artifacts under one directory, or swallows
/// everything when no directory is configured.
pub struct ArtifactWriter {
    dir: Option<PathBuf>,
    paths: Option<BufWriter<File>>,
    events: Option<BufWriter<File>>,
    exported_paths: u64,
}

impl ArtifactWriter {
    pub fn new(out_dir: Option<&str>) -> Result<Self, HarnessError> {
        let dir = match out_dir {
            None => None,
            Some(d) => {
                let p = PathBuf::from(d);
                std::fs::create_dir_all(&p)?;
                Some(p)
            }
        };
        Ok(Self {
            dir,
            paths: None,
            events: None,
            exported_paths: 0,
        })
    }

    pub fn out_dir(&self) -> Option<&std::path::Path> {
        self.dir.as_deref()
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, HarnessError> {
        let dir = self.dir.as_ref().expect("checked by caller");
        Ok(BufWriter::new(File::create(dir.join(name))?))
    }

    /// One numeric column under `samples_<name>.csv`.
    pub fn write_samples(&mut self, name: &str, values: &[f64]) -> Result<(), HarnessError> {
        if self.dir.is_none() {
            return Ok(());
        }
        let mut w = self.create(&format!("samples_{name}.csv"))?;
        writeln!(w, "value")?;
        for v in values {
            writeln!(w, "{v}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Appends one simulated path to `paths.csv` and its boundary events
    /// to `events.csv`. Only the first few paths are kept, thinned to a
    /// bounded node count; events are never thinned.
    pub fn write_path(&mut self, path_id: u64, p: &PathSample) -> Result<(), HarnessError> {
        if self.dir.is_none() || self.exported_paths >= MAX_EXPORTED_PATHS {
            return Ok(());
        }
        if self.paths.is_none() {
            let mut pw = self.create("paths.csv")?;
            writeln!(pw, "path_id,t,x,v")?;
            self.paths = Some(pw);
            let mut ew = self.create("events.csv")?;
            writeln!(ew, "path_id,time,kind,v_in,v_out")?;
            self.events = Some(ew);
        }
        let stride = p.len().div_ceil(MAX_NODES_PER_PATH).max(1);
        let pw = self.paths.as_mut().unwrap();
        for i in (0..p.len()).step_by(stride) {
            writeln!(pw, "{},{},{},{}", path_id, p.times[i], p.x[i], p.v[i])?;
        }
        // Keep the final node even when the stride skips it.
        if p.len() > 0 && (p.len() - 1) % stride != 0 {
            let i = p.len() - 1;
            writeln!(pw, "{},{},{},{}", path_id, p.times[i], p.x[i], p.v[i])?;
        }
        pw.flush()?;
        let ew = self.events.as_mut().unwrap();
        for e in &p.events {
            writeln!(
                ew,
                "{},{},{},{},{}",
                path_id,
                e.time,
                e.kind.as_str(),
                e.v_in,
                e.v_out
            )?;
        }
        ew.flush()?;
        self.exported_paths += 1;
        Ok(())
    }

    pub fn write_report(&mut self, report: &ExperimentReport) -> Result<(), HarnessError> {
        if self.dir.is_none() {
            return Ok(());
        }
        let mut w = self.create("report.json")?;
        serde_json::to_writer_pretty(&mut w, report)
            .map_err(|e| HarnessError::Config(format!("report serialization: {e}")))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}
