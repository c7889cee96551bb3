//! CSV rendering of result rows.

use std::fmt::Write as _;
use std::path::Path;

use super::runner::ResultRow;
use crate::error::Result;

pub const HEADER: &str = "experiment,receiver,D,index,ber,sinr_db,runs,seed";

/// Renders `echo` as `# ` comment lines, then the header and one line per
/// row. Floats use the shortest round-trip representation.
pub fn render_csv(rows: &[ResultRow], echo: &[String]) -> String {
    let mut out = String::new();
    for line in echo {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{HEADER}");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.experiment.name(),
            r.receiver.name(),
            r.rank,
            r.index,
            r.ber,
            r.sinr_db,
            r.runs,
            r.seed
        );
    }
    out
}

pub fn write_csv(path: &Path, rows: &[ResultRow], echo: &[String]) -> Result<()> {
    std::fs::write(path, render_csv(rows, echo))?;
    Ok(())
}
