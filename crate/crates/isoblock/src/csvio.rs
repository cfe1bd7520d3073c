//! Dataset CSV: columns `x_1..x_d,y` with a mandatory header. Floats
//! are written with 17 significant digits so files round-trip exactly.

use std::io::{Read, Write};

use crate::design::Dataset;
use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_dataset<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=ds.dim).map(|k| format!("x_{k}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds.point(i).iter().map(|&v| fmt17(v)).collect();
        rec.push(fmt17(ds.responses[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() < 2 || headers.iter().next_back() != Some("y") {
        return Err(Error::InvalidDesign(
            "expected header x_1,..,x_d,y in the dataset CSV".into(),
        ));
    }
    let dim = headers.len() - 1;
    for (k, h) in headers.iter().take(dim).enumerate() {
        if h != format!("x_{}", k + 1) {
            return Err(Error::InvalidDesign(format!(
                "unexpected column `{h}`, wanted x_{}",
                k + 1
            )));
        }
    }
    let mut points = Vec::new();
    let mut responses = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != dim + 1 {
            return Err(Error::InvalidDesign("ragged CSV row".into()));
        }
        for v in rec.iter().take(dim) {
            points.push(parse_f64(v)?);
        }
        responses.push(parse_f64(&rec[dim])?);
    }
    Dataset::from_points(dim, points, responses)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidDesign(format!("bad float `{s}` in CSV")))
}

/// Fitted-surface CSV: `x_1..x_d,fitted`.
pub fn write_fitted<W: Write>(dim: usize, rows: &[(Vec<f64>, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=dim).map(|k| format!("x_{k}")).collect();
    header.push("fitted".into());
    w.write_record(&header)?;
    for (point, value) in rows {
        let mut rec: Vec<String> = point.iter().map(|&v| fmt17(v)).collect();
        rec.push(fmt17(*value));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
