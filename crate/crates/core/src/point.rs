//! States of an orbit in the box `[-1, 1]^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values this close outside `[-1, 1]` are clamped onto the boundary.
pub const CLAMP_BAND: f64 = 1e-12;

/// A point of `[-1, 1]^d`, validated on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Builds a point, clamping coordinates within [`CLAMP_BAND`] of the box
    /// and rejecting anything farther out (or non-finite).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput(
                "a point needs at least one coordinate".into(),
            ));
        }
        let mut coords = coords;
        for (axis, c) in coords.iter_mut().enumerate() {
            *c = clamp_coordinate(*c).ok_or(Error::OutOfRange { axis, value: *c })?;
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Euclidean distance to another point of the same dimension.
    pub fn distance(&self, other: &Point) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(l2_distance(&self.coords, &other.coords))
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords
    }
}

/// Returns the clamped coordinate, or `None` when `c` is farther than the
/// clamp band from the box (or NaN).
pub(crate) fn clamp_coordinate(c: f64) -> Option<f64> {
    if (-1.0..=1.0).contains(&c) {
        Some(c)
    } else if c > 1.0 && c <= 1.0 + CLAMP_BAND {
        Some(1.0)
    } else if (-1.0 - CLAMP_BAND..-1.0).contains(&c) {
        Some(-1.0)
    } else {
        None
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The samples `y(0), ..., y(H)` of an orbit `y(t + 1) = Φ(y(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSeries {
    dim: usize,
    samples: Vec<Point>,
}

impl OrbitSeries {
    /// Wraps samples of a common dimension. An empty series is allowed.
    pub fn from_samples(dim: usize, samples: Vec<Point>) -> Result<Self> {
        for p in &samples {
            check_dim(dim, p.dim())?;
        }
        Ok(Self { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Last sample index `H`, or `None` for an empty series.
    pub fn horizon(&self) -> Option<usize> {
        self.samples.len().checked_sub(1)
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub(crate) fn push(&mut self, p: Point) {
        debug_assert_eq!(p.dim(), self.dim);
        self.samples.push(p);
    }
}
