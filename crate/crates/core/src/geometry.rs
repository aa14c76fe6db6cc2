//! Axis-aligned hypercube algebra for Context agent activation zones.
//!
//! Zones live in the normalized feature space. Intervals are closed on both
//! ends, so a point lying on a face activates the zone.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};

/// Distance a face is moved past an excluded point, in normalized units.
pub const EXCLUSION_EPSILON: f64 = 1e-6;

// Removed-volume fractions closer than this are treated as ties.
const CUT_TIE_TOLERANCE: f64 = 1e-12;

/// Axis-aligned box with strictly positive width on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypercube {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Result of a retraction that may consume the whole zone.
#[derive(Debug, Clone, PartialEq)]
pub enum Retraction {
    Retracted(Hypercube),
    Destroyed,
}

impl Retraction {
    pub fn into_option(self) -> Option<Hypercube> {
        match self {
            Retraction::Retracted(h) => Some(h),
            Retraction::Destroyed => None,
        }
    }
}

impl Hypercube {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        ensure_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidHypercube("zero dimensions".into()));
        }
        ensure_finite(&lower)?;
        ensure_finite(&upper)?;
        if let Some(j) = (0..lower.len()).find(|&j| lower[j] >= upper[j]) {
            return Err(Error::InvalidHypercube(format!(
                "axis {j}: lower {} is not below upper {}",
                lower[j], upper[j]
            )));
        }
        Ok(Hypercube { lower, upper })
    }

    /// The box `[c - radius, c + radius]` on every axis.
    pub fn around(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidHypercube(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Hypercube::new(
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).product()
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        ensure_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .enumerate()
            .all(|(j, &v)| self.lower[j] <= v && v <= self.upper[j]))
    }

    /// Whether `other` lies inside `self` (closed containment).
    pub fn encloses(&self, other: &Hypercube) -> Result<bool> {
        ensure_dim(self.dim(), other.dim())?;
        Ok((0..self.dim()).all(|j| self.lower[j] <= other.lower[j] && other.upper[j] <= self.upper[j]))
    }

    pub fn intersection_volume(&self, other: &Hypercube) -> Result<f64> {
        ensure_dim(self.dim(), other.dim())?;
        Ok((0..self.dim())
            .map(|j| {
                let lo = self.lower[j].max(other.lower[j]);
                let hi = self.upper[j].min(other.upper[j]);
                (hi - lo).max(0.0)
            })
            .product())
    }

    /// Intersection volume over the smaller of the two volumes.
    pub fn overlap_index(&self, other: &Hypercube) -> Result<f64> {
        let inter = self.intersection_volume(other)?;
        let smaller = self.volume().min(other.volume());
        Ok((inter / smaller).clamp(0.0, 1.0))
    }

    /// Rescale about the center so the volume is multiplied by `factor`.
    ///
    /// Every side is stretched by `factor^(1/p)`.
    pub fn scale(&self, factor: f64) -> Result<Hypercube> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidScaleFactor(factor));
        }
        if factor == 1.0 {
            return Ok(self.clone());
        }
        let side = factor.powf(1.0 / self.dim() as f64);
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let c = 0.5 * (self.lower[j] + self.upper[j]);
            let half = 0.5 * self.width(j) * side;
            lower.push(c - half);
            upper.push(c + half);
        }
        Hypercube::new(lower, upper)
    }

    /// Retract `self` (the loser) out of `winner` by moving a single face.
    ///
    /// The cut removing the smallest share of the loser's volume is chosen;
    /// ties go to the lowest axis, then to moving the lower face.
    pub fn pushed_by(&self, winner: &Hypercube) -> Result<Retraction> {
        if self.intersection_volume(winner)? <= 0.0 {
            return Err(Error::Disjoint);
        }
        let mut best: Option<(f64, usize, Face, f64)> = None;
        for j in 0..self.dim() {
            let width = self.width(j);
            // keep [winner.upper, upper]
            if winner.upper[j] < self.upper[j] {
                let removed = (winner.upper[j] - self.lower[j]) / width;
                consider(&mut best, removed, j, Face::Lower, winner.upper[j]);
            }
            // keep [lower, winner.lower]
            if winner.lower[j] > self.lower[j] {
                let removed = (self.upper[j] - winner.lower[j]) / width;
                consider(&mut best, removed, j, Face::Upper, winner.lower[j]);
            }
        }
        Ok(self.apply_cut(best))
    }

    /// Retract so that `x` ends up outside, moving one face to
    /// `x[j] ± EXCLUSION_EPSILON`.
    pub fn exclude_point(&self, x: &[f64]) -> Result<Retraction> {
        if !self.contains(x)? {
            return Err(Error::PointOutside);
        }
        let mut best: Option<(f64, usize, Face, f64)> = None;
        for (j, &xj) in x.iter().enumerate() {
            let width = self.width(j);
            let above = xj + EXCLUSION_EPSILON;
            if above < self.upper[j] {
                let removed = (above - self.lower[j]) / width;
                consider(&mut best, removed, j, Face::Lower, above);
            }
            let below = xj - EXCLUSION_EPSILON;
            if below > self.lower[j] {
                let removed = (self.upper[j] - below) / width;
                consider(&mut best, removed, j, Face::Upper, below);
            }
        }
        Ok(self.apply_cut(best))
    }

    /// Smallest box containing both.
    pub fn bounding_union(&self, other: &Hypercube) -> Result<Hypercube> {
        ensure_dim(self.dim(), other.dim())?;
        Ok(Hypercube {
            lower: (0..self.dim()).map(|j| self.lower[j].min(other.lower[j])).collect(),
            upper: (0..self.dim()).map(|j| self.upper[j].max(other.upper[j])).collect(),
        })
    }

    /// Euclidean distance from `x` to the box; zero inside.
    pub fn distance_to_point(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let gap = (self.lower[j] - v).max(v - self.upper[j]).max(0.0);
                gap * gap
            })
            .sum::<f64>()
            .sqrt())
    }

    fn apply_cut(&self, best: Option<(f64, usize, Face, f64)>) -> Retraction {
        let Some((_, axis, face, at)) = best else {
            return Retraction::Destroyed;
        };
        let mut out = self.clone();
        match face {
            Face::Lower => out.lower[axis] = at,
            Face::Upper => out.upper[axis] = at,
        }
        if out.lower[axis] < out.upper[axis] {
            Retraction::Retracted(out)
        } else {
            Retraction::Destroyed
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Face {
    Lower,
    Upper,
}

// Candidates arrive in (axis, lower-then-upper) order, so keeping the first of
// tied candidates implements the tie-break.
fn consider(best: &mut Option<(f64, usize, Face, f64)>, removed: f64, axis: usize, face: Face, at: f64) {
    let better = match best {
        None => true,
        Some((current, ..)) => removed < *current - CUT_TIE_TOLERANCE,
    };
    if better {
        *best = Some((removed, axis, face, at));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(lower: &[f64], upper: &[f64]) -> Hypercube {
        Hypercube::new(lower.to_vec(), upper.to_vec()).unwrap()
    }

    #[test]
    fn rejects_degenerate_bounds() {
        assert!(Hypercube::new(vec![0.0], vec![0.0]).is_err());
        assert!(Hypercube::new(vec![1.0], vec![0.0]).is_err());
        assert!(Hypercube::new(vec![], vec![]).is_err());
        assert!(Hypercube::new(vec![0.0, f64::NAN], vec![1.0, 1.0]).is_err());
        assert!(Hypercube::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn volume_examples() {
        assert_eq!(cube(&[0.0, 0.0], &[1.0, 1.0]).volume(), 1.0);
        assert_eq!(cube(&[0.0, 0.0], &[0.5, 0.5]).volume(), 0.25);
    }

    #[test]
    fn contains_uses_closed_intervals() {
        let h = cube(&[0.0, 0.0], &[1.0, 2.0]);
        assert!(h.contains(&h.center()).unwrap());
        assert!(h.contains(&[1.0, 0.5]).unwrap());
        assert!(!h.contains(&[1.0 + 1e-9, 0.5]).unwrap());
        assert!(matches!(h.contains(&[0.5]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn intersection_and_overlap() {
        let a = cube(&[0.0, 0.0], &[2.0, 2.0]);
        let b = cube(&[1.0, 1.0], &[3.0, 3.0]);
        let far = cube(&[5.0, 5.0], &[6.0, 6.0]);
        assert_eq!(a.intersection_volume(&a).unwrap(), a.volume());
        assert_eq!(a.intersection_volume(&far).unwrap(), 0.0);
        assert_eq!(a.intersection_volume(&b).unwrap(), 1.0);
        assert_eq!(a.overlap_index(&a).unwrap(), 1.0);
        assert_eq!(a.overlap_index(&far).unwrap(), 0.0);
        assert_eq!(a.overlap_index(&b).unwrap(), 0.25);
        let inner = cube(&[0.5, 0.5], &[1.0, 1.0]);
        assert_eq!(a.overlap_index(&inner).unwrap(), 1.0);
    }

    #[test]
    fn scale_examples() {
        let unit = cube(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(unit.scale(1.0).unwrap(), unit);
        let grown = unit.scale(1.21).unwrap();
        assert!((grown.width(0) - 1.1).abs() < 1e-12);
        assert!((grown.width(1) - 1.1).abs() < 1e-12);
        assert!((grown.volume() - 1.21).abs() < 1e-12);
        let alpha = 0.2;
        let back = unit.scale(1.0 + alpha).unwrap().scale(1.0 / (1.0 + alpha)).unwrap();
        for j in 0..2 {
            assert!((back.lower()[j] - unit.lower()[j]).abs() < 1e-9);
            assert!((back.upper()[j] - unit.upper()[j]).abs() < 1e-9);
        }
        assert!(matches!(unit.scale(0.0), Err(Error::InvalidScaleFactor(_))));
        assert!(unit.scale(-1.0).is_err());
    }

    #[test]
    fn push_examples() {
        let pushed = cube(&[1.0], &[3.0]).pushed_by(&cube(&[0.0], &[2.0])).unwrap();
        assert_eq!(pushed, Retraction::Retracted(cube(&[2.0], &[3.0])));

        let winner = cube(&[0.0, 0.0], &[2.0, 2.0]);
        let loser = cube(&[1.0, 1.5], &[3.0, 3.0]);
        assert_eq!(
            loser.pushed_by(&winner).unwrap(),
            Retraction::Retracted(cube(&[1.0, 2.0], &[3.0, 3.0]))
        );

        let inside = cube(&[0.5, 0.5], &[1.0, 1.0]);
        assert_eq!(inside.pushed_by(&winner).unwrap(), Retraction::Destroyed);

        let far = cube(&[5.0, 5.0], &[6.0, 6.0]);
        assert!(matches!(far.pushed_by(&winner), Err(Error::Disjoint)));
    }

    #[test]
    fn push_moves_upper_face_when_cheaper() {
        let winner = cube(&[2.0], &[4.0]);
        let loser = cube(&[0.0], &[3.0]);
        assert_eq!(
            loser.pushed_by(&winner).unwrap(),
            Retraction::Retracted(cube(&[0.0], &[2.0]))
        );
    }

    #[test]
    fn exclusion_examples() {
        let h = cube(&[0.0], &[1.0]);
        assert_eq!(
            h.exclude_point(&[0.9]).unwrap(),
            Retraction::Retracted(cube(&[0.0], &[0.9 - EXCLUSION_EPSILON]))
        );

        let sq = cube(&[0.0, 0.0], &[1.0, 1.0]);
        match sq.exclude_point(&[0.5, 0.99]).unwrap() {
            Retraction::Retracted(r) => {
                assert_eq!(r.upper()[1], 0.99 - EXCLUSION_EPSILON);
                assert_eq!(r.lower(), sq.lower());
                assert_eq!(r.upper()[0], 1.0);
            }
            Retraction::Destroyed => panic!("unexpected destruction"),
        }

        // removed volumes tie at the center: the lower face moves
        match h.exclude_point(&[0.5]).unwrap() {
            Retraction::Retracted(r) => {
                assert_eq!(r.lower()[0], 0.5 + EXCLUSION_EPSILON);
                assert_eq!(r.upper()[0], 1.0);
            }
            Retraction::Destroyed => panic!("unexpected destruction"),
        }

        assert!(matches!(h.exclude_point(&[1.5]), Err(Error::PointOutside)));
    }

    #[test]
    fn exclusion_of_tiny_box_destroys() {
        let tiny = cube(&[0.0], &[1e-6]);
        assert_eq!(tiny.exclude_point(&[5e-7]).unwrap(), Retraction::Destroyed);
    }

    #[test]
    fn bounding_union_examples() {
        let a = cube(&[0.0, 0.0], &[4.0, 4.0]);
        let b = cube(&[1.0, 1.0], &[2.0, 2.0]);
        assert_eq!(a.bounding_union(&b).unwrap(), a);
        assert_eq!(
            cube(&[0.0], &[1.0]).bounding_union(&cube(&[2.0], &[3.0])).unwrap(),
            cube(&[0.0], &[3.0])
        );
    }

    #[test]
    fn distance_examples() {
        let h = cube(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(h.distance_to_point(&[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(h.distance_to_point(&[2.0, 1.0]).unwrap(), 1.0);
        assert!((h.distance_to_point(&[2.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }
}
