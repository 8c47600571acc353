use std::io::Write;
use std::path::Path;

use weierdim::grid::BoxCountTable;
use weierdim::theory::DimensionReport;
use weierdim::weierfn::OscillationSample;

use crate::error::CliResult;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn dimension_report_csv<W: Write>(rep: &DimensionReport<f64>, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "log_d", "ratio_H", "ratio_B"])?;
    for row in &rep.rows {
        w.write_record([
            row.n.to_string(),
            num(row.log_d),
            opt(row.ratio_h),
            opt(row.ratio_b),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn box_table_csv<W: Write>(table: &BoxCountTable<f64>, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "N", "log2_r", "log2_N", "octave_slope"])?;
    for (row, slope) in table.rows.iter().zip(table.octave_slopes()) {
        w.write_record([
            num(row.r),
            row.n.to_string(),
            num(row.r.log2()),
            num((row.n as f64).log2()),
            opt(slope),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn oscillation_csv<W: Write>(rows: &[OscillationSample<f64>], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "r", "V", "samples_used", "bias_bound"])?;
    for s in rows {
        w.write_record([
            num(s.t),
            num(s.r),
            num(s.v),
            s.samples_used.to_string(),
            num(s.bias_bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> CliResult<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
