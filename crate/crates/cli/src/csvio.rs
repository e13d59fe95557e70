//! CSV tables of floats. Values are written in shortest round-trip form, so
//! reading a file back yields bit-identical numbers; flagged cells are `nan`.

use std::path::Path;

use crate::error::CliError;

pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:e}"),
        _ => "nan".into(),
    }
}

pub fn write_table<P, I>(path: P, header: &[&str], rows: I) -> Result<(), CliError>
where
    P: AsRef<Path>,
    I: IntoIterator<Item = Vec<Option<f64>>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(format_value))?;
    }
    w.flush()?;
    Ok(())
}

/// Header and rows; `nan` cells come back as `None`.
pub fn read_table<P: AsRef<Path>>(path: P) -> Result<(Vec<String>, Vec<Vec<Option<f64>>>), CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .map(|v| v.is_finite().then_some(v))
                    .map_err(|_| CliError::config(format!("bad CSV cell `{c}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
