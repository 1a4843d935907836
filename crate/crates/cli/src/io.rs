//! Series files for the pipeline stages: CSV, 16-bit WAV or JSON, chosen by
//! `--format` on output and by extension on input.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use inner_series::ingest::{
    read_csv_trajectory, read_csv_velocity, read_csv_weights, read_wav_trajectory, write_csv_trajectory,
    write_csv_velocity, write_csv_weights, write_wav_trajectory, TimeSource,
};
use inner_series::model::{Trajectory, VelocitySeries, WeightSeries};
use serde_json::{json, Value};

pub const SERIES_SCHEMA: &str = "inner-series/series/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Wav,
    Json,
}

impl Format {
    /// The explicit format, else the output's extension, else CSV.
    pub fn resolve(explicit: Option<Format>, path: &Path) -> Format {
        explicit.unwrap_or_else(|| match extension(path).as_deref() {
            Some("wav") => Format::Wav,
            Some("json") => Format::Json,
            _ => Format::Csv,
        })
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase)
}

/// How CSV input gets its sample interval.
pub fn time_source(time_column: &str, dt: Option<f64>) -> TimeSource {
    match dt {
        Some(dt) => TimeSource::Fixed(dt),
        None => TimeSource::Column(time_column.to_owned()),
    }
}

struct JsonSeries {
    dt: f64,
    names: Vec<String>,
    data: Vec<f64>,
    dim: usize,
    valid: Option<Vec<bool>>,
}

fn series_json(dt: f64, names: &[String], rows: impl Iterator<Item = Vec<f64>>, valid: Option<&[bool]>) -> Value {
    let samples: Vec<Vec<f64>> = rows.collect();
    let mut v = json!({
        "schema": SERIES_SCHEMA,
        "dt": dt,
        "channels": names,
        "samples": samples,
    });
    if let Some(valid) = valid {
        v["valid"] = json!(valid);
    }
    v
}

fn write_value(value: &Value, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json_series(path: &Path) -> Result<JsonSeries> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if v["schema"] != SERIES_SCHEMA {
        bail!("{}: schema {}, expected {SERIES_SCHEMA}", path.display(), v["schema"]);
    }
    let dt = v["dt"].as_f64().context("series lacks a numeric 'dt'")?;
    let names: Vec<String> = serde_json::from_value(v["channels"].clone()).context("series 'channels'")?;
    let samples: Vec<Vec<f64>> = serde_json::from_value(v["samples"].clone()).context("series 'samples'")?;
    let valid: Option<Vec<bool>> = match &v["valid"] {
        Value::Null => None,
        other => Some(serde_json::from_value(other.clone()).context("series 'valid'")?),
    };
    let dim = names.len();
    if let Some(row) = samples.iter().position(|s| s.len() != dim) {
        bail!(
            "{}: sample {row} has {} values, expected {dim}",
            path.display(),
            samples[row].len()
        );
    }
    Ok(JsonSeries {
        dt,
        names,
        data: samples.concat(),
        dim,
        valid,
    })
}

pub fn read_trajectory(path: &Path, time: &TimeSource) -> Result<Trajectory> {
    let traj = match extension(path).as_deref() {
        Some("wav") => read_wav_trajectory(path)?,
        Some("json") => {
            let s = read_json_series(path)?;
            Trajectory::from_flat(s.data, s.dim, s.dt, s.names)?
        }
        _ => read_csv_trajectory(path, time)?,
    };
    Ok(traj)
}

pub fn write_trajectory(traj: &Trajectory, path: &Path, format: Format, normalize: bool) -> Result<()> {
    match format {
        Format::Csv => write_csv_trajectory(traj, path)?,
        Format::Wav => write_wav_trajectory(traj, path, normalize)?,
        Format::Json => write_value(
            &series_json(
                traj.dt(),
                traj.channel_names(),
                traj.samples().map(<[f64]>::to_vec),
                None,
            ),
            path,
        )?,
    }
    Ok(())
}

pub fn read_weights(path: &Path) -> Result<WeightSeries> {
    let w = match extension(path).as_deref() {
        Some("wav") => {
            let t = read_wav_trajectory(path)?;
            WeightSeries::new(t.as_flat().to_vec(), t.dim(), t.dt(), vec![true; t.len()])?
        }
        Some("json") => {
            let s = read_json_series(path)?;
            let len = s.data.len() / s.dim.max(1);
            WeightSeries::new(s.data, s.dim, s.dt, s.valid.unwrap_or_else(|| vec![true; len]))?
        }
        _ => read_csv_weights(path)?,
    };
    Ok(w)
}

/// WAV output drops the validity mask and scales to 90% of full scale.
pub fn write_weights(w: &WeightSeries, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv_weights(w, path)?,
        Format::Wav => {
            let t = Trajectory::from_flat(w.as_flat().to_vec(), w.dim(), w.dt(), w.channel_names().to_vec())?;
            write_wav_trajectory(&t, path, true)?;
        }
        Format::Json => {
            let rows = (0..w.len()).map(|k| w.value(k).to_vec());
            write_value(
                &series_json(w.dt(), w.channel_names(), rows, Some(w.valid_mask())),
                path,
            )?;
        }
    }
    Ok(())
}

pub fn read_velocity(path: &Path) -> Result<VelocitySeries> {
    let v = match extension(path).as_deref() {
        Some("json") => {
            let s = read_json_series(path)?;
            let len = s.data.len() / s.dim.max(1);
            VelocitySeries::new(s.data, s.dim, s.dt, s.valid.unwrap_or_else(|| vec![true; len]))?
        }
        _ => read_csv_velocity(path)?,
    };
    Ok(v)
}

pub fn write_velocity(v: &VelocitySeries, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv_velocity(v, path)?,
        Format::Wav => bail!("velocity series cannot be written as WAV"),
        Format::Json => {
            let names: Vec<String> = (1..=v.dim()).map(|i| format!("v{i}")).collect();
            let rows = (0..v.len()).map(|k| v.value(k).to_vec());
            write_value(&series_json(v.dt(), &names, rows, Some(v.valid_mask())), path)?;
        }
    }
    Ok(())
}

pub fn write_json_value(value: &Value, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_value(value, p),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_series_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        let w = WeightSeries::new(
            vec![0.1, -2.5, 1e-300, 3.0, 0.0, 7.25],
            2,
            0.125,
            vec![true, false, true],
        )
        .unwrap();
        write_weights(&w, &path, Format::Json).unwrap();
        let back = read_weights(&path).unwrap();
        assert_eq!(back.as_flat(), w.as_flat());
        assert_eq!(back.valid_mask(), w.valid_mask());
        assert_eq!(back.dt(), w.dt());
    }

    #[test]
    fn format_falls_back_to_extension() {
        assert_eq!(Format::resolve(None, Path::new("a.WAV")), Format::Wav);
        assert_eq!(Format::resolve(None, Path::new("a.json")), Format::Json);
        assert_eq!(Format::resolve(None, Path::new("a")), Format::Csv);
        assert_eq!(Format::resolve(Some(Format::Csv), Path::new("a.json")), Format::Csv);
    }
}
