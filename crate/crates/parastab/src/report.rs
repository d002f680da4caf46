//! Report emission: plain CSV for plot data, serde JSON for structured
//! results. Reports are deterministic byte-for-byte for a fixed config
//! and seed; wall-clock metadata goes to a separate meta.json so the
//! payload files can be compared directly.

use crate::error::Result;
use crate::grid::Field;
use serde::Serialize;
use std::fs;
use std::path::Path;

/// Convention line embedded in every field/spectrum CSV.
pub const NORMALIZATION_HEADER: &str = "# grid [0,2pi), x_j = 2pi j/n; forward transform = plain sum, inverse carries 1/n; norms use dx/2pi so |f|_L2^2 = (1/n) sum f_j^2 = sum |c(xi)|^2 with c(xi) = u_hat(xi)/n";

pub fn write_field_csv(path: &Path, f: &Field) -> Result<()> {
    let mut out = String::new();
    out.push_str(NORMALIZATION_HEADER);
    out.push('\n');
    out.push_str("index,x,value\n");
    for (j, v) in f.values().iter().enumerate() {
        out.push_str(&format!("{j},{},{v}\n", f.grid().point(j)));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_spectrum_csv(path: &Path, f: &Field) -> Result<()> {
    let mut out = String::new();
    out.push_str(NORMALIZATION_HEADER);
    out.push('\n');
    out.push_str("xi,re,im\n");
    let grid = f.grid();
    let n = grid.n_points() as i64;
    for xi in -n / 2..n / 2 {
        let c = f.coefficient(xi);
        out.push_str(&format!("{xi},{},{}\n", c.re, c.im));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes rows of already-formatted CSV under a header line.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).expect("report serializes");
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

/// Wall-clock block kept out of the comparable reports.
#[derive(Serialize)]
pub struct RunMeta {
    pub timestamp_unix_ms: u128,
    pub duration_ms: u128,
}

pub fn write_meta(dir: &Path, started: std::time::Instant) -> Result<()> {
    let meta = RunMeta {
        timestamp_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        duration_ms: started.elapsed().as_millis(),
    };
    write_json(&dir.join("meta.json"), &meta)
}
