use thiserror::Error;

use super::TrajectorySample;
use crate::numfmt::format_g;

pub const CSV_HEADER: &str = "t,x,y,heading,v,a_long,a_lat,steer,s,lane_dev";
/// Enough digits that parsing recovers every value exactly.
const DIGITS: usize = 17;

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("unexpected header '{0}'")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
}

pub fn export_csv(trajectory: &[TrajectorySample]) -> String {
    let mut out = String::with_capacity(16 + trajectory.len() * 120);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in trajectory {
        let fields = [p.t, p.x, p.y, p.heading, p.v, p.a_long, p.a_lat, p.steer, p.s, p.lane_dev];
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_g(*f, DIGITS));
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<TrajectorySample>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != CSV_HEADER {
        return Err(CsvError::Header(header.into()));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CsvError::Row { line: i + 2, message: e.to_string() })?;
        let [t, x, y, heading, v, a_long, a_lat, steer, s, lane_dev] = values[..] else {
            return Err(CsvError::Row { line: i + 2, message: format!("expected 10 fields, found {}", values.len()) });
        };
        out.push(TrajectorySample { t, x, y, heading, v, a_long, a_lat, steer, s, lane_dev });
    }
    Ok(out)
}
