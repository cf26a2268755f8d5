use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub const CSV_HEADER: &str = "snr_db,sigma2,v_det,v17a,v17b,v_mc_mean,v_mc_stderr,fading,samples,fp_iterations,wall_ms";

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub snr_db: f64,
    pub sigma2: f64,
    pub v_det: f64,
    pub v17a: f64,
    pub v17b: f64,
    pub mc: Option<(f64, f64)>,
    pub fading: String,
    pub samples: usize,
    pub fp_iterations: usize,
    pub wall_ms: u128,
}

impl SweepRow {
    /// Shortest round-trip float formatting keeps rows stable across runs.
    pub fn to_csv(&self) -> String {
        let (mean, se) = match self.mc {
            Some((m, s)) => (m.to_string(), s.to_string()),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.snr_db,
            self.sigma2,
            self.v_det,
            self.v17a,
            self.v17b,
            mean,
            se,
            self.fading,
            self.samples,
            self.fp_iterations,
            self.wall_ms
        )
    }
}
