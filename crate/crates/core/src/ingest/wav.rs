//! 16-bit PCM WAV input and output. Samples stay raw integers (as reals),
//! not normalized to [-1, 1].

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::model::{default_names, Trajectory};

pub fn read_wav_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let mut reader = WavReader::open(path.as_ref()).map_err(|e| match e {
        hound::Error::FormatError(msg) => Error::UnsupportedAudio(format!("corrupt header: {msg}")),
        other => Error::Wav(other),
    })?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedAudio(format!(
            "{:?} with {} bits per sample; only 16-bit PCM is supported",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let data = reader
        .samples::<i16>()
        .map(|s| s.map(f64::from))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let dim = usize::from(spec.channels);
    Trajectory::from_flat(data, dim, 1.0 / f64::from(spec.sample_rate), default_names("ch", dim))
}

/// Writes a trajectory as 16-bit PCM at `round(1/dt)` Hz. With `normalize`
/// the series is scaled so its peak magnitude maps to 90% of full scale;
/// otherwise values are rounded and must already fit in `i16`.
pub fn write_wav_trajectory(traj: &Trajectory, path: impl AsRef<Path>, normalize: bool) -> Result<()> {
    let rate = (1.0 / traj.dt()).round();
    if !(1.0..=f64::from(u32::MAX)).contains(&rate) {
        return Err(Error::InvalidArgument(format!("sample rate {rate} not representable")));
    }
    let channels = u16::try_from(traj.dim())
        .map_err(|_| Error::InvalidArgument(format!("{} channels is too many for WAV", traj.dim())))?;
    let spec = WavSpec {
        channels,
        sample_rate: rate as u32,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let peak = traj.as_flat().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if normalize && peak > 0.0 {
        0.9 * f64::from(i16::MAX) / peak
    } else {
        1.0
    };
    let mut writer = WavWriter::create(path.as_ref(), spec)?;
    for (i, &v) in traj.as_flat().iter().enumerate() {
        let s = (v * scale).round();
        if s < f64::from(i16::MIN) || s > f64::from(i16::MAX) {
            return Err(Error::OutsideDomain {
                index: i / traj.dim(),
                value: v,
                lo: f64::from(i16::MIN),
                hi: f64::from(i16::MAX),
            });
        }
        writer.write_sample(s as i16)?;
    }
    writer.finalize()?;
    Ok(())
}
