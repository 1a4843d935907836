//! Recovering a measurement trajectory from weights by integrating the
//! velocity they describe through the frame field.

use crate::error::{Error, Result};
use crate::model::{default_names, FrameField, Trajectory, WeightSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// `x0` followed by one state per completed step.
    pub trajectory: Trajectory,
    /// Set when integration stopped before `steps` because the state left the
    /// framed region or hit an invalid weight.
    pub truncated: bool,
}

/// Forward Euler: `x[k+1] = x[k] + dt · Σ_i w_i[k] · V_i(bin(x[k]))`.
pub fn integrate_weights(w: &WeightSeries, field: &FrameField, x0: &[f64], steps: usize) -> Result<Reconstruction> {
    let n = field.dim();
    if field.frames.is_empty() {
        return Err(Error::EmptyField);
    }
    if x0.len() != n || w.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if x0.len() != n { x0.len() } else { w.dim() },
        });
    }
    if steps > w.len() {
        return Err(Error::InvalidArgument(format!(
            "{steps} steps requested from {} weights",
            w.len()
        )));
    }
    if field.locate(x0).is_none() {
        return Err(Error::OutsideGrid);
    }
    let dt = w.dt();
    let mut states = Vec::with_capacity((steps + 1) * n);
    states.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut truncated = false;
    for k in 0..steps {
        let (Some(weights), Some((bin, _))) = (w.get(k), field.locate(&x)) else {
            truncated = true;
            break;
        };
        let v = &field.frames[&bin].v;
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += dt * (0..n).map(|i| weights[i] * v[(r, i)]).sum::<f64>();
        }
        states.extend_from_slice(&x);
    }
    let completed = states.len() / n - 1;
    if completed < 2 {
        return Err(Error::InvalidArgument(format!(
            "integration stopped after {completed} step(s): invalid weight or state outside the frame field"
        )));
    }
    let trajectory = Trajectory::from_flat(states, n, dt, default_names("x", n))?;
    Ok(Reconstruction { trajectory, truncated })
}
