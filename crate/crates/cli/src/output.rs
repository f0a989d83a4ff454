//! Serialization of reports to JSON or CSV, and the human summary on stderr.

use crate::args::Format;
use dirac_ni::report::{fmt_f64, Report};
use std::io::Write;

pub fn render(report: &Report, format: Format) -> Result<Vec<u8>, String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => csv_bytes(report).map_err(|e| e.to_string()),
    }
}

/// The table when the command produced one, the check list otherwise.
fn csv_bytes(report: &Report) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new().delimiter(b',').from_writer(Vec::new());
    match &report.table {
        Some(t) => {
            w.write_record(&t.header)?;
            for row in &t.rows {
                w.write_record(row)?;
            }
        }
        None => {
            w.write_record(["name", "residual", "tol", "pass"])?;
            for c in &report.checks {
                w.write_record([c.name.clone(), fmt_f64(c.residual), fmt_f64(c.tol), c.pass.to_string()])?;
            }
        }
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub struct Style {
    pub color: bool,
}

impl Style {
    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }
}

pub fn summary(out: &mut impl Write, report: &Report, style: &Style) -> std::io::Result<()> {
    writeln!(out, "seed: {}", report.seed)?;
    for c in &report.checks {
        let tag = if c.pass { style.paint("32", "PASS") } else { style.paint("31", "FAIL") };
        writeln!(out, "{tag} {} residual={:.3e} tol={:.1e}", c.name, c.residual, c.tol)?;
    }
    for n in &report.notes {
        writeln!(out, "note: {n}")?;
    }
    for w in &report.warnings {
        writeln!(out, "{} {w}", style.paint("33", "warning:"))?;
    }
    Ok(())
}
