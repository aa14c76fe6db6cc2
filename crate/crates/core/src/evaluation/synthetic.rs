use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

use super::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Four Gaussian blobs at (±1, ±1); same-sign quadrants are class "0".
    Xor,
    /// Two interleaving half circles.
    Moons,
    /// A small circle inside a large one (radius ratio 0.5).
    Circles,
    /// Two Gaussians at (-2, -2) and (2, 2).
    Blobs,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xor" => Ok(SyntheticKind::Xor),
            "moons" => Ok(SyntheticKind::Moons),
            "circles" => Ok(SyntheticKind::Circles),
            "blobs" => Ok(SyntheticKind::Blobs),
            other => Err(Error::Config(format!("unknown synthetic kind `{other}`"))),
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::Xor => "xor",
            SyntheticKind::Moons => "moons",
            SyntheticKind::Circles => "circles",
            SyntheticKind::Blobs => "blobs",
        })
    }
}

/// Two-feature toy dataset with columns `x1, x2, y` and labels "0"/"1".
///
/// Rows cycle through the generating components, so classes are balanced to
/// within one row.
pub fn make_synthetic(kind: SyntheticKind, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 8 {
        return Err(Error::Config(format!("need at least 8 rows, got {n}")));
    }
    if !(noise >= 0.0) {
        return Err(Error::Config(format!(
            "noise must be a non-negative number, got {noise}"
        )));
    }
    let gauss = Normal::new(0.0, noise)
        .map_err(|_| Error::Config(format!("noise must be a non-negative number, got {noise}")))?;
    let mut rng = rng::stream(seed, Purpose::Synthetic, 0);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let half = n / 2;
    for i in 0..n {
        let (cx, cy, class) = match kind {
            SyntheticKind::Xor => {
                let (sx, sy) = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)][i % 4];
                (sx, sy, usize::from(sx * sy < 0.0))
            }
            SyntheticKind::Blobs => {
                let class = i % 2;
                let c = if class == 0 { -2.0 } else { 2.0 };
                (c, c, class)
            }
            SyntheticKind::Moons | SyntheticKind::Circles => {
                let class = i % 2;
                let count = if class == 0 { n - half } else { half };
                let k = i / 2;
                let t = if count > 1 { k as f64 / (count - 1) as f64 } else { 0.0 };
                if kind == SyntheticKind::Moons {
                    let a = std::f64::consts::PI * t;
                    if class == 0 {
                        (a.cos(), a.sin(), 0)
                    } else {
                        (1.0 - a.cos(), 0.5 - a.sin(), 1)
                    }
                } else {
                    let a = 2.0 * std::f64::consts::PI * t;
                    let radius = if class == 0 { 1.0 } else { 0.5 };
                    (radius * a.cos(), radius * a.sin(), class)
                }
            }
        };
        let x = cx + gauss.sample(&mut rng);
        let y = cy + gauss.sample(&mut rng);
        features.push(vec![x, y]);
        labels.push(class.to_string());
    }
    Dataset::new(features, labels, vec!["x1".into(), "x2".into()], "y".into())
}
