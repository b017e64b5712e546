//! Self-maps `Φ` of the box `[-1, 1]^d`: AR/companion maps, delay-coordinate
//! maps driven by a scalar expression, general expression maps and a few
//! built-in families.

mod expr;
mod lipschitz;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{check_dim, clamp_coordinate, Point, CLAMP_BAND};

pub use expr::{parse_expression, BinOp, Expr, Func, MIN_DENOMINATOR};
pub use lipschitz::{companion_matrix, estimate_lipschitz, GammaMethod, LipschitzEstimate};

/// Built-in one-parameter families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `w ↦ w` in any dimension.
    Identity,
    /// `x ↦ 1 - 2|x|` on `[-1, 1]`.
    Tent,
    /// `x ↦ 1 - r x²` on `[-1, 1]`, `0 ≤ r ≤ 2`.
    Quadratic { r: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// `z(t) = Σ p_ℓ z(t - ℓ)` in delay coordinates.
    Ar {
        coeffs: Vec<f64>,
    },
    /// New first coordinate from a scalar expression, the rest shifted.
    DelayScalar {
        update: Expr,
    },
    /// One expression per output coordinate.
    Expression {
        exprs: Vec<Expr>,
    },
    Builtin(Builtin),
}

/// A map `Φ : [-1, 1]^d → [-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDefinition {
    dim: usize,
    kind: MapKind,
    name: Option<String>,
}

impl MapDefinition {
    pub fn ar(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput(
                "an AR map needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("AR coefficients must be finite".into()));
        }
        Ok(Self {
            dim: coeffs.len(),
            kind: MapKind::Ar { coeffs },
            name: None,
        })
    }

    pub fn delay(dim: usize, update: Expr) -> Result<Self> {
        check_dim_positive(dim)?;
        check_vars(&update, dim)?;
        Ok(Self {
            dim,
            kind: MapKind::DelayScalar { update },
            name: None,
        })
    }

    pub fn delay_from_source(dim: usize, source: &str) -> Result<Self> {
        Self::delay(dim, parse_expression(source, dim)?)
    }

    pub fn expression(exprs: Vec<Expr>) -> Result<Self> {
        let dim = exprs.len();
        check_dim_positive(dim)?;
        for e in &exprs {
            check_vars(e, dim)?;
        }
        Ok(Self {
            dim,
            kind: MapKind::Expression { exprs },
            name: None,
        })
    }

    pub fn expression_from_sources<S: AsRef<str>>(sources: &[S]) -> Result<Self> {
        let dim = sources.len();
        let exprs = sources
            .iter()
            .map(|s| parse_expression(s.as_ref(), dim))
            .collect::<Result<Vec<_>>>()?;
        Self::expression(exprs)
    }

    pub fn builtin(builtin: Builtin, dim: usize) -> Result<Self> {
        check_dim_positive(dim)?;
        match builtin {
            Builtin::Identity => {}
            Builtin::Tent => check_dim(1, dim)?,
            Builtin::Quadratic { r } => {
                check_dim(1, dim)?;
                if !(0.0..=2.0).contains(&r) {
                    return Err(Error::InvalidInput(format!(
                        "quadratic parameter r = {r} must lie in [0, 2]"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            kind: MapKind::Builtin(builtin),
            name: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// AR coefficients, if this is an AR map.
    pub fn ar_coeffs(&self) -> Option<&[f64]> {
        match &self.kind {
            MapKind::Ar { coeffs } => Some(coeffs),
            _ => None,
        }
    }

    /// Whether the map has the delay-coordinate shift structure.
    pub fn is_delay_coordinate(&self) -> bool {
        matches!(self.kind, MapKind::Ar { .. } | MapKind::DelayScalar { .. })
            || (self.dim == 1 && matches!(self.kind, MapKind::Builtin(_)))
    }

    /// Evaluates `Φ(x)` without checking the codomain.
    pub fn evaluate_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        match &self.kind {
            MapKind::Ar { coeffs } => {
                let head = coeffs.iter().zip(x).map(|(p, z)| p * z).sum::<f64>();
                Ok(shifted(head, x))
            }
            MapKind::DelayScalar { update } => Ok(shifted(update.eval(x)?, x)),
            MapKind::Expression { exprs } => exprs.iter().map(|e| e.eval(x)).collect(),
            MapKind::Builtin(b) => Ok(match b {
                Builtin::Identity => x.to_vec(),
                Builtin::Tent => vec![1.0 - 2.0 * x[0].abs()],
                Builtin::Quadratic { r } => vec![1.0 - r * x[0] * x[0]],
            }),
        }
    }

    /// Evaluates `Φ(p)`, failing if the image leaves the box by more than the
    /// clamp band.
    pub fn evaluate(&self, p: &Point) -> Result<Point> {
        let out = self.evaluate_raw(p.coords())?;
        image_point(out, None)
    }
}

/// Validates a raw map image as a point, tagging violations with `t`.
pub(crate) fn image_point(coords: Vec<f64>, t: Option<usize>) -> Result<Point> {
    for (axis, &c) in coords.iter().enumerate() {
        if clamp_coordinate(c).is_none() {
            return Err(Error::RangeViolation { t, axis, value: c });
        }
    }
    Point::new(coords)
}

fn shifted(head: f64, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    out.push(head);
    out.extend_from_slice(&x[..x.len() - 1]);
    out
}

fn check_dim_positive(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidInput("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_vars(e: &Expr, dim: usize) -> Result<()> {
    let used = e.max_var();
    if used > dim {
        return Err(Error::UnknownIdentifier {
            name: format!("x{used}"),
            position: 0,
        });
    }
    Ok(())
}

/// Outcome of probing a map for codomain violations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeReport {
    pub evaluated: usize,
    pub corners_checked: bool,
    /// Largest `max(0, |Φ(w)_i| - 1)` seen.
    pub max_overshoot: f64,
    pub worst_input: Option<Vec<f64>>,
    /// First evaluation error encountered, if any.
    pub error: Option<String>,
    pub pass: bool,
}

/// Corners are enumerated only up to this dimension.
const MAX_CORNER_DIM: usize = 20;

/// Evaluates the map on `samples` shifted Halton points, every corner of the
/// box and its center, and reports the worst overshoot.
pub fn validate_range(map: &MapDefinition, samples: usize, seed: u64) -> RangeReport {
    let d = map.dim();
    let mut probes: Vec<Vec<f64>> = Vec::new();
    probes.push(vec![0.0; d]);
    let corners_checked = d <= MAX_CORNER_DIM;
    if corners_checked {
        for mask in 0u64..(1u64 << d) {
            probes.push(
                (0..d)
                    .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                    .collect(),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let primes = first_primes(d);
    for i in 1..=samples {
        probes.push(
            primes
                .iter()
                .zip(&shift)
                .map(|(&b, s)| {
                    let u = (radical_inverse(i as u64, b) + s).fract();
                    2.0 * u - 1.0
                })
                .collect(),
        );
    }

    let mut report = RangeReport {
        evaluated: 0,
        corners_checked,
        max_overshoot: 0.0,
        worst_input: None,
        error: None,
        pass: true,
    };
    for w in probes {
        report.evaluated += 1;
        match map.evaluate_raw(&w) {
            Ok(out) => {
                let over = out
                    .iter()
                    .map(|v| {
                        if v.is_nan() {
                            f64::INFINITY
                        } else {
                            (v.abs() - 1.0).max(0.0)
                        }
                    })
                    .fold(0.0, f64::max);
                if over > report.max_overshoot || (report.worst_input.is_none() && over > 0.0) {
                    report.max_overshoot = over;
                    report.worst_input = Some(w);
                }
            }
            Err(e) => {
                if report.error.is_none() {
                    report.error = Some(format!("at {w:?}: {e}"));
                }
            }
        }
    }
    report.pass = report.error.is_none() && report.max_overshoot <= CLAMP_BAND;
    report
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes
            .iter()
            .take_while(|&&p| p * p <= c)
            .all(|p| !c.is_multiple_of(*p))
        {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// On-disk map description.
///
/// ```json
/// {"d": 2, "kind": "ar", "p": [0.0, -1.0]}
/// {"d": 1, "kind": "expr", "exprs": ["0.9*cos(3*x1)"]}
/// {"d": 2, "kind": "delay", "exprs": ["0.5*x1 - 0.3*x2"]}
/// {"d": 1, "kind": "builtin", "builtin": {"quadratic": {"r": 1.8}}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub d: usize,
    pub kind: MapFileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exprs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<Builtin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapFileKind {
    Ar,
    Expr,
    Delay,
    Builtin,
}

impl MapFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("map file: {e}")))
    }

    pub fn to_definition(&self) -> Result<MapDefinition> {
        let missing = |field: &str| Error::InvalidInput(format!("map file: missing `{field}`"));
        let def = match self.kind {
            MapFileKind::Ar => {
                let p = self.p.clone().ok_or_else(|| missing("p"))?;
                check_dim(self.d, p.len())?;
                MapDefinition::ar(p)?
            }
            MapFileKind::Expr => {
                let exprs = self.exprs.as_ref().ok_or_else(|| missing("exprs"))?;
                check_dim(self.d, exprs.len())?;
                MapDefinition::expression_from_sources(exprs)?
            }
            MapFileKind::Delay => {
                let exprs = self.exprs.as_ref().ok_or_else(|| missing("exprs"))?;
                check_dim(1, exprs.len())?;
                MapDefinition::delay_from_source(self.d, &exprs[0])?
            }
            MapFileKind::Builtin => {
                let b = self.builtin.ok_or_else(|| missing("builtin"))?;
                MapDefinition::builtin(b, self.d)?
            }
        };
        Ok(match &self.name {
            Some(n) => def.with_name(n.clone()),
            None => def,
        })
    }
}
