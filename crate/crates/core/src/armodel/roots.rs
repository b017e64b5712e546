//! Polynomial roots with multiplicities by Aberth–Ehrlich iteration.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 500;
const MAX_RESTARTS: usize = 8;
/// Roots closer than `CLUSTER_RADIUS * max(1, |μ|)` are one multiple root.
pub const CLUSTER_RADIUS: f64 = 1e-5;
/// Iterations after every residual is below tolerance before stopping, to
/// let multiple-root approximations settle.
const SETTLE_ITERATIONS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    pub multiplicity: usize,
    pub modulus: f64,
    /// `| |μ| - 1 |`.
    pub circle_distance: f64,
}

pub(crate) fn ser_complex<S: serde::Serializer>(
    z: &Complex64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}

impl Root {
    fn new(value: Complex64, multiplicity: usize) -> Self {
        let modulus = value.norm();
        Self {
            value,
            multiplicity,
            modulus,
            circle_distance: (modulus - 1.0).abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value == Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    /// Degree of the characteristic polynomial; the multiplicities sum to it.
    pub degree: usize,
    /// Largest `|P(μ)|` over the reported roots.
    pub residual: f64,
}

impl RootSet {
    pub fn zero_multiplicity(&self) -> usize {
        self.roots
            .iter()
            .filter(|r| r.is_zero())
            .map(|r| r.multiplicity)
            .sum()
    }
}

/// Value and derivative of a polynomial given highest degree first.
fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Scale of the rounding error of Horner's rule at `z`.
fn horner_scale(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    coeffs.iter().fold(0.0, |acc, c| acc * r + c.norm())
}

fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    coeffs[..n]
        .iter()
        .enumerate()
        .map(|(i, c)| c * (n - i) as f64)
        .collect()
}

fn residual_ok(coeffs: &[Complex64], z: Complex64, tol: f64) -> bool {
    horner(coeffs, z).0.norm() <= tol * horner_scale(coeffs, z)
}

/// Simultaneous Aberth–Ehrlich iteration on a monic polynomial. Returns the
/// approximations and whether every residual met `tol`.
fn aberth(coeffs: &[Complex64], mut z: Vec<Complex64>, tol: f64) -> (Vec<Complex64>, bool) {
    let n = z.len();
    let mut settled = 0;
    for _ in 0..MAX_ITERATIONS {
        let mut largest_step = 0.0f64;
        for k in 0..n {
            let (p, dp) = horner(coeffs, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[k] -= step;
            largest_step = largest_step.max(step.norm() / z[k].norm().max(1.0));
        }
        if z.iter().all(|&w| residual_ok(coeffs, w, tol)) {
            settled += 1;
            if largest_step <= 1e-15 || settled >= SETTLE_ITERATIONS {
                return (z, true);
            }
        } else {
            settled = 0;
        }
    }
    let ok = z.iter().all(|&w| residual_ok(coeffs, w, tol));
    (z, ok)
}

fn initial_guesses(coeffs: &[Complex64], rng: Option<&mut ChaCha8Rng>) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let radius = coeffs[n].norm().powf(1.0 / n as f64).max(1e-3);
    let (offset, jitter) = match rng {
        Some(rng) => (rng.gen_range(0.0..TAU), rng.gen_range(0.5..2.0)),
        None => (0.4, 1.0),
    };
    (0..n)
        .map(|k| Complex64::from_polar(radius * jitter, offset + TAU * k as f64 / n as f64))
        .collect()
}

/// Newton iteration on `coeffs`, keeping only steps that reduce the residual.
fn newton_polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let mut best = horner(coeffs, z).0.norm();
    for _ in 0..50 {
        let (p, dp) = horner(coeffs, z);
        if best == 0.0 || dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        let r = horner(coeffs, next).0.norm();
        if r.is_nan() || r >= best {
            break;
        }
        best = r;
        z = next;
    }
    z
}

fn cluster(approx: &[Complex64]) -> Vec<Vec<Complex64>> {
    let n = approx.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = approx[i].norm().max(approx[j].norm()).max(1.0);
            if (approx[i] - approx[j]).norm() <= CLUSTER_RADIUS * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (i, &z) in approx.iter().enumerate() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(z),
            None => groups.push((r, vec![z])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Roots of the monic polynomial `μ^n + c_1 μ^{n-1} + ... + c_n` with real
/// coefficients and `c_n ≠ 0`, clustered into multiple roots, with exact
/// conjugate symmetry.
pub(crate) fn monic_roots(tail: &[f64], tol: f64) -> Result<Vec<Root>> {
    if tail.is_empty() {
        return Ok(Vec::new());
    }
    let coeffs: Vec<Complex64> = std::iter::once(1.0)
        .chain(tail.iter().copied())
        .map(|c| Complex64::new(c, 0.0))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut found = None;
    for attempt in 0..=MAX_RESTARTS {
        let start = initial_guesses(&coeffs, (attempt > 0).then_some(&mut rng));
        let (z, ok) = aberth(&coeffs, start, tol);
        if ok {
            found = Some(z);
            break;
        }
    }
    let approx = found.ok_or_else(|| {
        Error::RootFindingFailed(format!(
            "residual tolerance {tol:e} not reached within {MAX_ITERATIONS} iterations after {MAX_RESTARTS} restarts"
        ))
    })?;

    let mut clusters: Vec<(Complex64, usize)> = cluster(&approx)
        .into_iter()
        .map(|g| {
            let m = g.len();
            let mut c = g.iter().sum::<Complex64>() / m as f64;
            let scale = c.norm().max(1.0);
            if c.im.abs() <= CLUSTER_RADIUS * scale {
                c.im = 0.0;
            }
            (c, m)
        })
        .collect();

    // A real polynomial has conjugate-symmetric roots: pair each upper
    // half-plane cluster with its nearest lower one and mirror it.
    let mut upper: Vec<usize> = (0..clusters.len())
        .filter(|&i| clusters[i].0.im > 0.0)
        .collect();
    let mut lower: Vec<usize> = (0..clusters.len())
        .filter(|&i| clusters[i].0.im < 0.0)
        .collect();
    if upper.len() != lower.len() {
        return Err(Error::RootFindingFailed(
            "roots are not conjugate-symmetric".into(),
        ));
    }
    upper.sort_by(|&a, &b| clusters[a].0.re.total_cmp(&clusters[b].0.re));
    let mut out = Vec::with_capacity(clusters.len());
    for &i in &upper {
        let (c, m) = clusters[i];
        let pos = lower
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                (clusters[a].0 - c.conj())
                    .norm()
                    .total_cmp(&(clusters[b].0 - c.conj()).norm())
            })
            .map(|(p, _)| p)
            .expect("counts match");
        let j = lower.swap_remove(pos);
        if clusters[j].1 != m {
            return Err(Error::RootFindingFailed(
                "conjugate roots differ in multiplicity".into(),
            ));
        }
        let refined = refine(&coeffs, c, m);
        out.push(Root::new(refined, m));
        out.push(Root::new(refined.conj(), m));
    }
    for (c, m) in clusters.iter_mut().filter(|(c, _)| c.im == 0.0) {
        let refined = refine(&coeffs, *c, *m);
        out.push(Root::new(Complex64::new(refined.re, 0.0), *m));
    }
    Ok(out)
}

/// A root of multiplicity `m` is a simple root of the `(m-1)`-th derivative.
fn refine(coeffs: &[Complex64], z: Complex64, m: usize) -> Complex64 {
    let mut d = coeffs.to_vec();
    for _ in 1..m {
        d = derivative(&d);
    }
    newton_polish(&d, z)
}
