use std::io::Write;

use crate::mc_engine::VerificationReport;

use super::OutputFormat;

pub const TABLE_HEADER: [&str; 7] = ["experiment", "entry_i", "entry_j", "theory", "estimate", "stderr", "z"];

/// One row per compared entry (means, covariances and scalar checks).
pub fn write_table<W: Write>(report: &VerificationReport, w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TABLE_HEADER)?;
    for e in &report.entries {
        let (i, j) = e.labels();
        out.write_record([
            report.experiment.clone(),
            i,
            j,
            e.theory.to_string(),
            e.estimate.to_string(),
            e.stderr.to_string(),
            e.z.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_report<W: Write>(report: &VerificationReport, format: OutputFormat, mut w: W) -> std::io::Result<()> {
    match format {
        OutputFormat::Structured => {
            serde_json::to_writer_pretty(&mut w, report)?;
            writeln!(w)
        }
        OutputFormat::Table => write_table(report, w).map_err(std::io::Error::other),
    }
}

pub fn parse_report(text: &str) -> Result<VerificationReport, serde_json::Error> {
    serde_json::from_str(text)
}
