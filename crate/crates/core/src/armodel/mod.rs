//! Autoregressive orbits `z(t) = Σ_{ℓ=1}^{d} p_ℓ z(t-ℓ)`: characteristic
//! roots, the closed form `z(t) = Σ a_j t^{k_j} μ_j^t`, and its split into a
//! trigonometric part on the unit circle and a decaying remainder.

mod roots;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use roots::{Root, RootSet, CLUSTER_RADIUS, DEFAULT_ROOT_TOL, MAX_ITERATIONS};

use crate::error::{Error, Result};
use roots::{monic_roots, ser_complex};

/// Default half-width of the band treated as the unit circle.
pub const CIRCLE_TOL: f64 = 1e-9;
/// Largest accepted `‖A‖₁ ‖A⁻¹‖₁` of the interpolation system.
pub const MAX_CONDITION: f64 = 1e12;

/// Coefficients and initial data `z(0), z(-1), ..., z(-d+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ARSpec {
    p: Vec<f64>,
    z0: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    p: Vec<f64>,
    z0: Vec<f64>,
}

impl TryFrom<RawSpec> for ARSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        Self::new(raw.p, raw.z0)
    }
}

impl ARSpec {
    pub fn new(p: Vec<f64>, z0: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidInput(
                "an AR model needs at least one coefficient".into(),
            ));
        }
        if z0.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: z0.len(),
            });
        }
        if let Some(c) = p.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coefficient {c} is not finite"
            )));
        }
        for (axis, &v) in z0.iter().enumerate() {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange { axis, value: v });
            }
        }
        Ok(Self { p, z0 })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("AR spec: {e}")))
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.p
    }

    pub fn initial(&self) -> &[f64] {
        &self.z0
    }

    /// `z(0), ..., z(horizon)` by direct recursion.
    pub fn recursion(&self, horizon: usize) -> Vec<f64> {
        let d = self.dim();
        // window[i] = z(t - i)
        let mut window = self.z0.clone();
        let mut out = Vec::with_capacity(horizon + 1);
        out.push(window[0]);
        for _ in 0..horizon {
            let next: f64 = self.p.iter().zip(&window).map(|(p, z)| p * z).sum();
            window.rotate_right(1);
            window[0] = next;
            out.push(next);
        }
        debug_assert_eq!(window.len(), d);
        out
    }

    /// `μ^d - Σ p_ℓ μ^{d-ℓ}`.
    pub fn char_poly(&self, mu: Complex64) -> Complex64 {
        self.p
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &p| acc * mu - p)
    }
}

/// Roots of the characteristic polynomial, with multiplicities. Trailing
/// zero coefficients contribute a root at zero.
pub fn characteristic_roots(spec: &ARSpec, tol: f64) -> Result<RootSet> {
    let d = spec.dim();
    let effective = spec.p.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
    let tail: Vec<f64> = spec.p[..effective].iter().map(|c| -c).collect();
    let mut roots = monic_roots(&tail, tol)?;
    if effective < d {
        roots.push(Root {
            value: Complex64::new(0.0, 0.0),
            multiplicity: d - effective,
            modulus: 0.0,
            circle_distance: 1.0,
        });
    }
    let residual = roots
        .iter()
        .map(|r| spec.char_poly(r.value).norm())
        .fold(0.0, f64::max);
    Ok(RootSet {
        roots,
        degree: d,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Bounded,
    Unbounded,
}

/// Bounded iff every root is inside the unit disk, or on the circle (within
/// `circle_tol`) and simple.
pub fn classify(roots: &RootSet, circle_tol: f64) -> Classification {
    let ok = roots.roots.iter().all(|r| {
        r.modulus < 1.0 - circle_tol || (r.circle_distance <= circle_tol && r.multiplicity == 1)
    });
    if ok {
        Classification::Bounded
    } else {
        Classification::Unbounded
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// `|μ| = 1`, `k = 0`.
    AlmostPeriodic,
    /// `|μ| < 1`.
    Decaying,
}

/// One summand `a t^k μ^t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    #[serde(serialize_with = "ser_complex")]
    pub mu: Complex64,
    pub power: u32,
    #[serde(serialize_with = "ser_complex")]
    pub coeff: Complex64,
    pub kind: TermKind,
}

/// `c δ_{t, lag}`, from a root at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransientTerm {
    pub lag: u64,
    pub coeff: f64,
}

/// `μ^t` by repeated squaring. Conjugate inputs give bitwise conjugate
/// outputs, which keeps paired sums exactly real.
fn cpow(mu: Complex64, mut t: u64) -> Complex64 {
    let mut base = mu;
    let mut acc = Complex64::new(1.0, 0.0);
    while t > 0 {
        if t & 1 == 1 {
            acc *= base;
        }
        base *= base;
        t >>= 1;
    }
    acc
}

impl Term {
    pub fn eval(&self, t: u64) -> Complex64 {
        let tk = if self.power == 0 {
            1.0
        } else {
            (t as f64).powi(self.power as i32)
        };
        self.coeff * tk * cpow(self.mu, t)
    }
}

fn sum_terms<'a>(terms: impl Iterator<Item = &'a Term>, t: u64) -> Complex64 {
    terms.map(|term| term.eval(t)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ARDecomposition {
    pub d: usize,
    pub classification: Classification,
    pub circle_tol: f64,
    pub roots: RootSet,
    /// `z(0), ..., z(d-1)` from the recursion, the right-hand side.
    pub interpolated: Vec<f64>,
    pub terms: Vec<Term>,
    pub transients: Vec<TransientTerm>,
    /// Max `|A a - z|` of the interpolation solve.
    pub solve_residual: f64,
    pub condition_estimate: f64,
}

impl ARDecomposition {
    pub fn ap_terms(&self) -> impl Iterator<Item = &Term> {
        self.terms
            .iter()
            .filter(|t| t.kind == TermKind::AlmostPeriodic)
    }

    pub fn decay_terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().filter(|t| t.kind == TermKind::Decaying)
    }

    pub fn transient(&self, t: u64) -> f64 {
        self.transients
            .iter()
            .filter(|x| x.lag == t)
            .map(|x| x.coeff)
            .sum()
    }

    /// `ap(t) + R(t) + transient(t)` as a complex number; the imaginary part
    /// measures how far the coefficients are from conjugate symmetry.
    pub fn eval_complex(&self, t: u64) -> Complex64 {
        sum_terms(self.ap_terms(), t) + sum_terms(self.decay_terms(), t) + self.transient(t)
    }

    /// Closed-form `z(t)`.
    pub fn eval(&self, t: u64) -> f64 {
        self.eval_complex(t).re
    }

    pub fn split(&self) -> (ApPart, DecayPart) {
        split(self)
    }
}

/// `ap(t) = Σ a_j μ_j^t` over the unit-circle terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApPart {
    pub terms: Vec<Term>,
}

/// A real sinusoid `c cos(λ t) + s sin(λ t)` with `λ ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frequency {
    pub lambda: f64,
    pub cos: f64,
    pub sin: f64,
}

impl ApPart {
    pub fn eval(&self, t: u64) -> f64 {
        sum_terms(self.terms.iter(), t).re
    }

    /// The real trigonometric form: one entry per real root or conjugate pair.
    pub fn frequencies(&self) -> Vec<Frequency> {
        self.terms
            .iter()
            .filter(|term| term.mu.im >= 0.0)
            .map(|term| {
                let a = term.coeff;
                let lambda = term.mu.im.atan2(term.mu.re);
                if term.mu.im == 0.0 {
                    Frequency {
                        lambda,
                        cos: a.re,
                        sin: 0.0,
                    }
                } else {
                    // a e^{iλt} + conj(a) e^{-iλt}
                    Frequency {
                        lambda,
                        cos: 2.0 * a.re,
                        sin: -2.0 * a.im,
                    }
                }
            })
            .collect()
    }
}

/// `R(t)` over the terms with `|μ| < 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayPart {
    pub terms: Vec<Term>,
}

impl DecayPart {
    pub fn eval(&self, t: u64) -> f64 {
        sum_terms(self.terms.iter(), t).re
    }

    /// Largest root modulus among the terms, 0 when there are none.
    pub fn rate(&self) -> f64 {
        self.terms.iter().map(|t| t.mu.norm()).fold(0.0, f64::max)
    }
}

pub fn split(dec: &ARDecomposition) -> (ApPart, DecayPart) {
    (
        ApPart {
            terms: dec.ap_terms().copied().collect(),
        },
        DecayPart {
            terms: dec.decay_terms().copied().collect(),
        },
    )
}

/// Solves `Σ_j a_j t^{k_j} μ_j^t = z(t)`, `t = 0..d-1`, for the coefficients.
pub fn solve_coefficients(spec: &ARSpec, roots: &RootSet) -> Result<ARDecomposition> {
    solve_coefficients_with(spec, roots, CIRCLE_TOL)
}

pub fn solve_coefficients_with(
    spec: &ARSpec,
    roots: &RootSet,
    circle_tol: f64,
) -> Result<ARDecomposition> {
    let d = spec.dim();
    if roots.degree != d || roots.roots.iter().map(|r| r.multiplicity).sum::<usize>() != d {
        return Err(Error::InvalidInput(
            "root set does not match the model degree".into(),
        ));
    }
    let classification = classify(roots, circle_tol);
    if classification == Classification::Unbounded {
        return Err(Error::RefusedUnbounded);
    }
    let z = spec.recursion(d - 1);

    enum Basis {
        Power(Complex64, u32),
        Kronecker(u64),
    }
    let mut basis = Vec::with_capacity(d);
    for r in &roots.roots {
        if r.is_zero() {
            basis.extend((0..r.multiplicity as u64).map(Basis::Kronecker));
        } else {
            basis.extend((0..r.multiplicity as u32).map(|k| Basis::Power(r.value, k)));
        }
    }
    let a = DMatrix::from_fn(d, d, |t, j| match basis[j] {
        Basis::Power(mu, k) => {
            let tk = if k == 0 {
                1.0
            } else {
                (t as f64).powi(k as i32)
            };
            cpow(mu, t as u64) * tk
        }
        Basis::Kronecker(lag) => Complex64::new(if t as u64 == lag { 1.0 } else { 0.0 }, 0.0),
    });
    let rhs = DVector::from_iterator(d, z.iter().map(|&v| Complex64::new(v, 0.0)));

    let lu = a.clone().full_piv_lu();
    let inverse = lu.try_inverse().ok_or(Error::IllConditioned {
        estimate: f64::INFINITY,
    })?;
    let condition = norm1(&a) * norm1(&inverse);
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned {
            estimate: condition,
        });
    }
    let mut x = lu.solve(&rhs).ok_or(Error::IllConditioned {
        estimate: f64::INFINITY,
    })?;
    // One step of iterative refinement.
    let r = &rhs - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }

    // Mirror coefficients across conjugate pairs and make real-root
    // coefficients real.
    let mut coeff: Vec<Complex64> = x.iter().copied().collect();
    for j in 0..d {
        match basis[j] {
            Basis::Power(mu, k) if mu.im > 0.0 => {
                let partner = (0..d)
                    .find(
                        |&i| matches!(basis[i], Basis::Power(nu, kk) if kk == k && nu == mu.conj()),
                    )
                    .expect("roots are paired");
                let avg = (coeff[j] + coeff[partner].conj()) / 2.0;
                coeff[j] = avg;
                coeff[partner] = avg.conj();
            }
            Basis::Power(mu, _) if mu.im == 0.0 => coeff[j].im = 0.0,
            Basis::Kronecker(_) => coeff[j].im = 0.0,
            _ => {}
        }
    }
    let solved = DVector::from_vec(coeff.clone());
    let solve_residual = (&a * &solved - &rhs)
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);

    let mut terms = Vec::new();
    let mut transients = Vec::new();
    for (b, c) in basis.iter().zip(coeff) {
        match *b {
            Basis::Power(mu, power) => {
                let kind = if (mu.norm() - 1.0).abs() <= circle_tol {
                    TermKind::AlmostPeriodic
                } else {
                    TermKind::Decaying
                };
                terms.push(Term {
                    mu,
                    power,
                    coeff: c,
                    kind,
                });
            }
            Basis::Kronecker(lag) => transients.push(TransientTerm { lag, coeff: c.re }),
        }
    }
    Ok(ARDecomposition {
        d,
        classification,
        circle_tol,
        roots: roots.clone(),
        interpolated: z,
        terms,
        transients,
        solve_residual,
        condition_estimate: condition,
    })
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Roots, classification and, when bounded, the decomposition.
pub fn decompose(spec: &ARSpec) -> Result<ARDecomposition> {
    let roots = characteristic_roots(spec, DEFAULT_ROOT_TOL)?;
    solve_coefficients(spec, &roots)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionCheck {
    pub horizon: usize,
    /// `max_t |z_recursion(t) - z_closed(t)|`.
    pub max_closed_form_error: f64,
    /// `max_t |Im z_closed(t)|`.
    pub max_imaginary: f64,
    /// Largest decay-root modulus.
    pub rho: f64,
    /// `Σ |a_j|` over decay terms.
    pub envelope_constant: f64,
    /// Highest power `k` among decay terms.
    pub envelope_power: u32,
    /// `max_t |z(t) - ap(t)|` over the last tenth of the horizon.
    pub tail_gap: f64,
    /// Times where `|z(t) - ap(t)|` exceeds `C (1+t)^k ρ^t` plus rounding.
    pub envelope_violations: Vec<usize>,
    /// Whether the recursion left `[-1, 1]`.
    pub left_box: bool,
    pub pass: bool,
}

/// Relative closed-form error accepted by [`verify_decomposition`].
pub const CLOSED_FORM_TOL: f64 = 1e-6;

/// Compares the recursion with the closed form and checks that
/// `|z(t) - ap(t)|` stays under `C (1 + t)^k ρ^t`.
pub fn verify_decomposition(
    spec: &ARSpec,
    dec: &ARDecomposition,
    horizon: usize,
) -> DecompositionCheck {
    let z = spec.recursion(horizon);
    let (ap, decay) = dec.split();
    let rho = decay.rate();
    let envelope_constant: f64 = decay.terms.iter().map(|t| t.coeff.norm()).sum();
    let envelope_power = decay.terms.iter().map(|t| t.power).max().unwrap_or(0);
    let transient_total: f64 = dec.transients.iter().map(|t| t.coeff.abs()).sum();
    let scale = z.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut max_err = 0.0f64;
    let mut max_imag = 0.0f64;
    let mut closed = Vec::with_capacity(horizon + 1);
    for (t, &zt) in z.iter().enumerate() {
        let c = dec.eval_complex(t as u64);
        max_err = max_err.max((zt - c.re).abs());
        max_imag = max_imag.max(c.im.abs());
        closed.push(c.re);
    }
    let slack = max_err + 1e-12 * scale;
    let mut violations = Vec::new();
    let mut tail_gap = 0.0f64;
    let tail_start = horizon - horizon / 10;
    for (t, &zt) in z.iter().enumerate() {
        let gap = (zt - ap.eval(t as u64)).abs();
        let mut envelope =
            envelope_constant * (1.0 + t as f64).powi(envelope_power as i32) * rho.powi(t as i32);
        if (t as u64) < dec.transients.len() as u64 {
            envelope += transient_total;
        }
        if gap > envelope + slack {
            violations.push(t);
        }
        if t >= tail_start {
            tail_gap = tail_gap.max(gap);
        }
    }
    DecompositionCheck {
        horizon,
        pass: max_err <= CLOSED_FORM_TOL * scale && violations.is_empty(),
        max_closed_form_error: max_err,
        max_imaginary: max_imag,
        rho,
        envelope_constant,
        envelope_power,
        tail_gap,
        envelope_violations: violations,
        left_box: z.iter().any(|v| v.abs() > 1.0),
    }
}

/// Real coefficients `p` with `μ^d - Σ p_ℓ μ^{d-ℓ} = ∏ (μ - μ_j)`. The roots
/// should be closed under conjugation; imaginary residue is dropped.
pub fn coefficients_from_roots(roots: &[Complex64]) -> Vec<f64> {
    // poly[i] is the coefficient of μ^{n-i}.
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = poly.clone();
        next.push(Complex64::new(0.0, 0.0));
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] -= c * r;
        }
        poly = next;
    }
    poly[1..].iter().map(|c| -c.re).collect()
}
