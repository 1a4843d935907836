//! CSV series: a header row, an optional time column, one column per channel.
//!
//! A column named `valid` (0/1) is reserved for sample masks and is never read
//! as a measurement channel.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Trajectory, VelocitySeries, WeightSeries};

const VALID_COLUMN: &str = "valid";
const TIME_COLUMN: &str = "t";

/// Where the sample interval of a CSV series comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeSource {
    /// A named column of uniformly spaced timestamps.
    Column(String),
    /// A fixed interval; every column is a channel.
    Fixed(f64),
}

impl Default for TimeSource {
    fn default() -> Self {
        TimeSource::Column(TIME_COLUMN.into())
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // data rows are numbered from 1, after the header
        let row = i + 1;
        if record.len() != headers.len() {
            return Err(Error::RaggedRow {
                row,
                expected: headers.len(),
                found: record.len(),
            });
        }
        let mut values = Vec::with_capacity(headers.len());
        for (field, name) in record.iter().zip(&headers) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: name.clone(),
                value: field.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row,
                    column: name.clone(),
                });
            }
            values.push(v);
        }
        rows.push(values);
    }
    Ok(Table { headers, rows })
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    let n = times.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::NonUniformTime { row: 2 });
    }
    for (k, &t) in times.iter().enumerate() {
        let expected = times[0] + k as f64 * dt;
        let tol = 1e-9 * dt + 8.0 * f64::EPSILON * t.abs().max(times[0].abs());
        if (t - expected).abs() > tol {
            return Err(Error::NonUniformTime { row: k + 1 });
        }
    }
    Ok(dt)
}

struct Series {
    names: Vec<String>,
    channels: Vec<Vec<f64>>,
    dt: f64,
    valid: Option<Vec<bool>>,
}

fn read_series(path: &Path, time: &TimeSource) -> Result<Series> {
    let table = read_table(path)?;
    let (dt, time_idx) = match time {
        TimeSource::Fixed(dt) => {
            if !(dt.is_finite() && *dt > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "sample interval must be positive, got {dt}"
                )));
            }
            (*dt, None)
        }
        TimeSource::Column(name) => {
            let idx = table
                .column_index(name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))?;
            (uniform_step(&table.column(idx))?, Some(idx))
        }
    };
    let valid_idx = table.column_index(VALID_COLUMN);
    let mut names = Vec::new();
    let mut channels = Vec::new();
    for (i, h) in table.headers.iter().enumerate() {
        if Some(i) == time_idx || Some(i) == valid_idx {
            continue;
        }
        names.push(h.clone());
        channels.push(table.column(i));
    }
    let valid = valid_idx.map(|i| table.rows.iter().map(|r| r[i] != 0.0).collect());
    Ok(Series {
        names,
        channels,
        dt,
        valid,
    })
}

fn flatten(channels: &[Vec<f64>]) -> Vec<f64> {
    let len = channels.first().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(len * channels.len());
    for k in 0..len {
        data.extend(channels.iter().map(|c| c[k]));
    }
    data
}

pub fn read_csv_trajectory(path: impl AsRef<Path>, time: &TimeSource) -> Result<Trajectory> {
    let s = read_series(path.as_ref(), time)?;
    if s.channels.is_empty() {
        return Err(Error::InvalidTrajectory("no measurement columns".into()));
    }
    Trajectory::from_channels(&s.channels, s.dt, s.names)
}

pub fn read_csv_weights(path: impl AsRef<Path>) -> Result<WeightSeries> {
    let s = read_series(path.as_ref(), &TimeSource::default())?;
    let dim = s.channels.len();
    let len = s.channels.first().map_or(0, Vec::len);
    let valid = s.valid.unwrap_or_else(|| vec![true; len]);
    WeightSeries::new(flatten(&s.channels), dim, s.dt, valid)
}

pub fn read_csv_velocity(path: impl AsRef<Path>) -> Result<VelocitySeries> {
    let s = read_series(path.as_ref(), &TimeSource::default())?;
    let dim = s.channels.len();
    let len = s.channels.first().map_or(0, Vec::len);
    let valid = s.valid.unwrap_or_else(|| vec![true; len]);
    VelocitySeries::new(flatten(&s.channels), dim, s.dt, valid)
}

fn write_rows(
    path: &Path,
    names: &[String],
    dt: f64,
    rows: impl Iterator<Item = (Vec<f64>, Option<bool>)>,
    with_valid: bool,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![TIME_COLUMN.to_owned()];
    header.extend(names.iter().cloned());
    if with_valid {
        header.push(VALID_COLUMN.into());
    }
    writer.write_record(&header)?;
    for (k, (values, valid)) in rows.enumerate() {
        let mut record = Vec::with_capacity(header.len());
        record.push((k as f64 * dt).to_string());
        record.extend(values.iter().map(f64::to_string));
        if let Some(v) = valid {
            record.push(if v { "1" } else { "0" }.to_owned());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes `t` (= k·dt) followed by one column per channel. Values use the
/// shortest representation that parses back to the identical `f64`.
pub fn write_csv_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        traj.channel_names(),
        traj.dt(),
        traj.samples().map(|s| (s.to_vec(), None)),
        false,
    )
}

pub fn write_csv_weights(w: &WeightSeries, path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        w.channel_names(),
        w.dt(),
        (0..w.len()).map(|k| (w.value(k).to_vec(), Some(w.is_valid(k)))),
        true,
    )
}

pub fn write_csv_velocity(v: &VelocitySeries, path: impl AsRef<Path>) -> Result<()> {
    let names = crate::model::default_names("v", v.dim());
    write_rows(
        path.as_ref(),
        &names,
        v.dt(),
        (0..v.len()).map(|k| (v.value(k).to_vec(), Some(v.is_valid(k)))),
        true,
    )
}
