//! The uniform grid `a_k = 2k/K - 1` and the quantizer that snaps orbit
//! samples onto it.
//!
//! Ties between two nodes are resolved toward the larger node. This is the
//! limit of minimizing `|x - (a - ε)|` as `ε → 0⁺`, and it is decided in
//! exact arithmetic on the binary value of `x`, so the result never depends
//! on rounding in `(x + 1) K / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{check_dim, l2_distance, Point};

/// Grid resolution `K` and ambient dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "K")]
    k: u32,
    d: usize,
}

impl GridSpec {
    pub fn new(k: u32, d: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput(
                "grid resolution K must be at least 1".into(),
            ));
        }
        if d == 0 {
            return Err(Error::InvalidInput("dimension d must be at least 1".into()));
        }
        Ok(Self { k, d })
    }

    pub fn resolution(&self) -> u32 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Distance between neighbouring nodes on one axis, `2/K`.
    pub fn spacing(&self) -> f64 {
        2.0 / f64::from(self.k)
    }

    /// Node value `a_k = 2k/K - 1`, correctly rounded.
    pub fn node(&self, index: u32) -> f64 {
        debug_assert!(index <= self.k);
        (2.0 * f64::from(index) - f64::from(self.k)) / f64::from(self.k)
    }

    /// The `K + 1` node values of one axis.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.k).map(|i| self.node(i)).collect()
    }

    /// Number of grid states `(K + 1)^d`, or `None` on `u64` overflow.
    pub fn state_count(&self) -> Option<u64> {
        let base = u64::from(self.k) + 1;
        let exp = u32::try_from(self.d).ok()?;
        base.checked_pow(exp)
    }

    /// Worst-case quantization distance `√d / K`.
    pub fn error_bound(&self) -> f64 {
        (self.d as f64).sqrt() / f64::from(self.k)
    }

    /// Snaps a point onto the grid.
    pub fn quantize(&self, p: &Point) -> Result<GridState> {
        check_dim(self.d, p.dim())?;
        let indices = p
            .coords()
            .iter()
            .enumerate()
            .map(|(axis, &x)| {
                if !(-1.0..=1.0).contains(&x) {
                    return Err(Error::OutOfRange { axis, value: x });
                }
                Ok(nearest_index(x, self.k))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridState { indices })
    }

    /// Maps a grid state back to its node coordinates.
    pub fn decode(&self, s: &GridState) -> Result<Point> {
        Ok(Point::new(self.decode_coords(s)?).expect("grid nodes lie in the box"))
    }

    pub(crate) fn decode_coords(&self, s: &GridState) -> Result<Vec<f64>> {
        check_dim(self.d, s.indices.len())?;
        s.indices
            .iter()
            .map(|&i| {
                if i > self.k {
                    Err(Error::InvalidInput(format!(
                        "grid index {i} exceeds K = {}",
                        self.k
                    )))
                } else {
                    Ok(self.node(i))
                }
            })
            .collect()
    }

    /// Euclidean distance between `p` and its quantized node.
    pub fn quantization_error(&self, p: &Point) -> Result<f64> {
        let s = self.quantize(p)?;
        Ok(l2_distance(p.coords(), &self.decode_coords(&s)?))
    }
}

/// A grid node, stored as one integer index per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridState {
    indices: Vec<u32>,
}

impl GridState {
    pub fn new(indices: Vec<u32>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

impl From<Vec<u32>> for GridState {
    fn from(indices: Vec<u32>) -> Self {
        Self { indices }
    }
}

/// `floor(((x + 1) K + 1) / 2)` evaluated exactly on the binary value of `x`,
/// clamped to `0..=K`.
fn nearest_index(x: f64, k: u32) -> u32 {
    let k_wide = i128::from(k);
    let (mantissa, exp) = decompose(x);
    let index = if exp >= 0 {
        // |x| <= 1 so this is one of -1, 0, 1.
        let xi = mantissa << exp;
        (xi * k_wide + k_wide + 1).div_euclid(2)
    } else if -exp <= 90 {
        let shift = (-exp) as u32;
        let numerator = mantissa * k_wide + ((k_wide + 1) << shift);
        numerator.div_euclid(1i128 << (shift + 1))
    } else {
        // |x K| < 2^-5 here, so only the sign of x can move the floor.
        let half = (k_wide + 1).div_euclid(2);
        if (k_wide + 1) % 2 == 0 && mantissa < 0 {
            half - 1
        } else {
            half
        }
    };
    index.clamp(0, k_wide) as u32
}

/// Splits a finite double into `(m, e)` with `x = m · 2^e` exactly.
fn decompose(x: f64) -> (i128, i32) {
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp_bits == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1u64 << 52), exp_bits - 1075)
    };
    let m = i128::from(m);
    (if negative { -m } else { m }, e)
}
