//! JSON forms of grids, moments and frame fields.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::assign_to_grid;
use crate::model::{BinAlignment, BinGrid, FrameField, LocalFrame, LocalMoments, SignedPermutation, Trajectory};

pub const GRID_SCHEMA: &str = "inner-series/grid/1";
pub const MOMENTS_SCHEMA: &str = "inner-series/moments/1";
pub const FRAMES_SCHEMA: &str = "inner-series/frames/1";

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument(format!("expected a {n}×{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::InvalidArgument(format!(
            "schema '{found}', expected '{expected}'"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinCount {
    pub bin: usize,
    pub index: Vec<usize>,
    pub count: usize,
    pub occupied: bool,
}

/// Grid edges plus per-bin counts. Membership is recomputed from the edges
/// when the grid is applied to a trajectory, see [`GridFile::apply`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    pub schema: String,
    pub edges: Vec<Vec<f64>>,
    pub min_count: usize,
    pub bins: Vec<BinCount>,
}

impl GridFile {
    pub fn from_grid(grid: &BinGrid) -> Self {
        let bins = grid
            .members()
            .iter()
            .map(|(&bin, m)| BinCount {
                bin,
                index: grid.multi_index(bin),
                count: m.len(),
                occupied: grid.is_occupied(bin),
            })
            .collect();
        Self {
            schema: GRID_SCHEMA.into(),
            edges: grid.edges().to_vec(),
            min_count: grid.min_count(),
            bins,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(&self.schema, GRID_SCHEMA)
    }

    /// Bins `traj` with the stored edges. Fails if the resulting per-bin
    /// counts differ from the stored ones, i.e. the grid came from other data.
    pub fn apply(&self, traj: &Trajectory, valid: Option<&[bool]>) -> Result<BinGrid> {
        self.validate()?;
        let grid = assign_to_grid(traj, valid, self.edges.clone(), self.min_count)?;
        let stored: BTreeMap<usize, usize> = self.bins.iter().map(|b| (b.bin, b.count)).collect();
        let found: BTreeMap<usize, usize> = grid.members().iter().map(|(&b, m)| (b, m.len())).collect();
        if stored != found {
            return Err(Error::InvalidArgument(
                "grid counts do not match this trajectory".into(),
            ));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMoments {
    pub bin: usize,
    pub count: usize,
    pub mean_vel: Vec<f64>,
    pub c2: Vec<Vec<f64>>,
    /// Row-major `N^4` values.
    pub c4: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsFile {
    pub schema: String,
    pub dim: usize,
    pub bins: Vec<BinMoments>,
}

impl MomentsFile {
    pub fn from_moments(dim: usize, moments: &BTreeMap<usize, LocalMoments>) -> Self {
        let bins = moments
            .iter()
            .map(|(&bin, m)| BinMoments {
                bin,
                count: m.count,
                mean_vel: m.mean_vel.iter().copied().collect(),
                c2: rows(&m.c2),
                c4: m.c4.clone(),
            })
            .collect();
        Self {
            schema: MOMENTS_SCHEMA.into(),
            dim,
            bins,
        }
    }

    pub fn to_moments(&self) -> Result<BTreeMap<usize, LocalMoments>> {
        check_schema(&self.schema, MOMENTS_SCHEMA)?;
        let n = self.dim;
        self.bins
            .iter()
            .map(|b| {
                if b.mean_vel.len() != n || b.c4.len() != n.pow(4) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: b.mean_vel.len(),
                    });
                }
                let m = LocalMoments {
                    count: b.count,
                    mean_vel: DVector::from_vec(b.mean_vel.clone()),
                    c2: from_rows(&b.c2, n)?,
                    c4: b.c4.clone(),
                };
                Ok((b.bin, m))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinFrame {
    pub bin: usize,
    pub index: Vec<usize>,
    pub count: usize,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub degenerate: bool,
    pub correction: SignedPermutation,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFieldFile {
    pub schema: String,
    pub edges: Vec<Vec<f64>>,
    pub min_count: usize,
    pub components: usize,
    pub frames: Vec<BinFrame>,
}

impl FrameFieldFile {
    pub fn from_field(field: &FrameField) -> Self {
        let frames = field
            .frames
            .iter()
            .map(|(&bin, f)| {
                let a = &field.alignment[&bin];
                BinFrame {
                    bin,
                    index: field.grid.multi_index(bin),
                    count: field.grid.count(bin),
                    m: rows(&f.m),
                    v: rows(&f.v),
                    d: f.d.clone(),
                    degenerate: f.degenerate,
                    correction: a.correction.clone(),
                    component: a.component,
                }
            })
            .collect();
        Self {
            schema: FRAMES_SCHEMA.into(),
            edges: field.grid.edges().to_vec(),
            min_count: field.grid.min_count(),
            components: field.components,
            frames,
        }
    }

    /// Rebuilds the field. Sample membership is not stored, so the grid
    /// carries edges and frames only and per-bin counts read as zero.
    pub fn to_field(&self) -> Result<FrameField> {
        check_schema(&self.schema, FRAMES_SCHEMA)?;
        let n = self.edges.len();
        let grid = BinGrid {
            edges: self.edges.clone(),
            min_count: self.min_count,
            members: BTreeMap::new(),
            assignment: Vec::new(),
        };
        let mut frames = BTreeMap::new();
        let mut alignment = BTreeMap::new();
        for f in &self.frames {
            if f.d.len() != n || f.correction.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: f.d.len(),
                });
            }
            frames.insert(
                f.bin,
                LocalFrame {
                    m: from_rows(&f.m, n)?,
                    v: from_rows(&f.v, n)?,
                    d: f.d.clone(),
                    degenerate: f.degenerate,
                },
            );
            alignment.insert(
                f.bin,
                BinAlignment {
                    correction: f.correction.clone(),
                    component: f.component,
                },
            );
        }
        Ok(FrameField {
            grid,
            frames,
            alignment,
            components: self.components,
        })
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}
