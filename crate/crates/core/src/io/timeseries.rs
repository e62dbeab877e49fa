//! Run time series as RFC 4180 CSV with a fixed column order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row per recorded step. Columns appear in field order; absent values are empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub momentum_x: f64,
    pub momentum_y: f64,
    pub momentum_z: f64,
    /// `∫_{B₀} ρ|x − x_c|²`.
    pub second_moment: Option<f64>,
    /// `2∫_{B₀} (x − x_c)·ρu`.
    pub dm_dt: Option<f64>,
    pub mass_b0: Option<f64>,
    pub mass_a0: Option<f64>,
    /// `∫_{B₀} p`.
    pub pressure_b0: Option<f64>,
    pub max_u: f64,
    pub max_grad_u: f64,
    pub min_rho: f64,
    /// `max_{B₀} |I − B̄|` (whole grid without a geometry).
    pub rad_dev_b0: f64,
    pub w_clip: f64,
    pub status: String,
    /// Monitor triggers fired at this step, `|`-separated.
    pub events: String,
}

pub const COLUMNS: [&str; 19] = [
    "step",
    "t",
    "dt",
    "mass",
    "momentum_x",
    "momentum_y",
    "momentum_z",
    "second_moment",
    "dm_dt",
    "mass_b0",
    "mass_a0",
    "pressure_b0",
    "max_u",
    "max_grad_u",
    "min_rho",
    "rad_dev_b0",
    "w_clip",
    "status",
    "events",
];

pub fn write_timeseries(path: &Path, rows: &[TimeSeriesRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_timeseries(path: &Path) -> Result<Vec<TimeSeriesRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::InvalidInput(format!("unexpected time-series columns in {}", path.display())));
    }
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ts.csv");
        let rows = vec![
            TimeSeriesRow {
                step: 0,
                t: 0.0,
                dt: 0.1,
                mass: 1.0,
                second_moment: Some(0.25),
                status: "healthy".into(),
                ..Default::default()
            },
            TimeSeriesRow {
                step: 1,
                t: 0.1,
                events: "gradient|time-step".into(),
                status: "blown-up".into(),
                ..Default::default()
            },
        ];
        write_timeseries(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
        assert_eq!(read_timeseries(&p).unwrap(), rows);
    }
}
