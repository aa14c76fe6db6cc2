use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Fraction of each axis span added on both sides of default raster ranges.
pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_RESOLUTION: usize = 200;

/// Predicted labels at cell centers, row-major with `y` as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub labels: Vec<String>,
}

/// Data ranges widened by [`DEFAULT_MARGIN`] of their span.
pub fn default_ranges(mins: &[f64], maxs: &[f64]) -> Result<((f64, f64), (f64, f64))> {
    if mins.len() != 2 || maxs.len() != 2 {
        return Err(Error::Config(format!(
            "rasters are two-dimensional, data has {} features",
            mins.len()
        )));
    }
    let widen = |lo: f64, hi: f64| {
        let span = hi - lo;
        let pad = if span > 0.0 { span * DEFAULT_MARGIN } else { 0.5 };
        (lo - pad, hi + pad)
    };
    Ok((widen(mins[0], maxs[0]), widen(mins[1], maxs[1])))
}

/// Evaluate `predict` at the center of every cell of a `resolution x resolution`
/// grid over the given ranges.
pub fn boundary_raster<F>(
    dim: usize,
    predict: F,
    x_range: (f64, f64),
    y_range: (f64, f64),
    resolution: usize,
) -> Result<Raster>
where
    F: Fn(&[f64]) -> Result<String>,
{
    if dim != 2 {
        return Err(Error::Config(format!(
            "rasters are two-dimensional, model has {dim} features"
        )));
    }
    if resolution < 2 {
        return Err(Error::Config(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    for (lo, hi) in [x_range, y_range] {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("invalid raster range [{lo}, {hi}]")));
        }
    }
    let mut raster = Raster {
        x_range,
        y_range,
        nx: resolution,
        ny: resolution,
        labels: Vec::with_capacity(resolution * resolution),
    };
    for row in 0..resolution {
        for col in 0..resolution {
            let (x, y) = raster.center(col, row);
            raster.labels.push(predict(&[x, y])?);
        }
    }
    Ok(raster)
}

impl Raster {
    pub fn center(&self, col: usize, row: usize) -> (f64, f64) {
        let dx = (self.x_range.1 - self.x_range.0) / self.nx as f64;
        let dy = (self.y_range.1 - self.y_range.0) / self.ny as f64;
        (
            self.x_range.0 + (col as f64 + 0.5) * dx,
            self.y_range.0 + (row as f64 + 0.5) * dy,
        )
    }

    pub fn label(&self, col: usize, row: usize) -> &str {
        &self.labels[row * self.nx + col]
    }

    /// CSV with header `x,y,label`, one record per cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "label"])?;
        for row in 0..self.ny {
            for col in 0..self.nx {
                let (x, y) = self.center(col, row);
                w.write_record([x.to_string(), y.to_string(), self.label(col, row).to_owned()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<raster>", e))?;
        Ok(())
    }

    /// Sample pairs of same-label cells and report the share whose midpoint
    /// cell carries that label too. A convex label layout scores near 1.
    pub fn convexity_probe(&self, pairs: usize, seed: u64) -> f64 {
        let mut rng = rng::stream(seed, Purpose::Probe, 0);
        let cells = self.nx * self.ny;
        let mut checked = 0;
        let mut passed = 0;
        let mut attempts = 0;
        while checked < pairs && attempts < pairs * 1000 {
            attempts += 1;
            let a = rng.random_range(0..cells);
            let b = rng.random_range(0..cells);
            if self.labels[a] != self.labels[b] {
                continue;
            }
            let (ac, ar) = (a % self.nx, a / self.nx);
            let (bc, br) = (b % self.nx, b / self.nx);
            let mid = self.label((ac + bc) / 2, (ar + br) / 2);
            checked += 1;
            if mid == self.labels[a] {
                passed += 1;
            }
        }
        if checked == 0 {
            1.0
        } else {
            passed as f64 / checked as f64
        }
    }
}
