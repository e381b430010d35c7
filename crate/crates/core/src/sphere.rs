//! Uniform sampling on the unit sphere and closed-form spherical statistics.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{adaptive_simpson, ln_ball_volume, ln_gamma};

const UNIT_NORM_TOL: f64 = 1e-12;

/// A point on S^{n-1}.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Normalizes `coords`; fails on the zero vector.
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        let norm = norm(&coords);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "cannot normalize zero vector".into(),
            ));
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Points P_1..P_m in R^n. The symmetric set ±P_i is indexed 0..2m with
/// index `i + m` standing for `-P_i`.
///
/// Clouds produced by [`sample_symmetric_cloud`] have unit-norm points and
/// carry their seed; [`PointCloud::from_points`] accepts arbitrary
/// coordinates for the general-vertex code paths.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    n: usize,
    m: usize,
    coords: Vec<f64>,
    seed: Option<u64>,
}

impl PointCloud {
    pub fn from_points<V: AsRef<[f64]>>(n: usize, points: &[V]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * n);
        for p in points {
            let p = p.as_ref();
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coordinate".into()));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self {
            n,
            m: points.len(),
            coords,
            seed: None,
        })
    }

    /// The cross-polytope cloud {e_1, .., e_n}.
    pub fn cross_polytope(n: usize) -> Self {
        let mut coords = vec![0.0; n * n];
        for i in 0..n {
            coords[i * n + i] = 1.0;
        }
        Self {
            n,
            m: n,
            coords,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.n)
    }

    /// Row-major coordinates of the 2m symmetrized points.
    pub fn symmetric_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.coords.len());
        out.extend_from_slice(&self.coords);
        out.extend(self.coords.iter().map(|c| -c));
        out
    }

    /// Applies the linear map `x -> t x` (row-major n x n) to every point.
    pub fn transformed(&self, t: &[f64]) -> Result<Self> {
        let n = self.n;
        if t.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: t.len(),
            });
        }
        let mut coords = Vec::with_capacity(self.coords.len());
        for p in self.points() {
            for row in t.chunks_exact(n) {
                coords.push(dot(row, p));
            }
        }
        Ok(Self {
            n,
            m: self.m,
            coords,
            seed: self.seed,
        })
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            coords: self.coords.iter().map(|c| c * t).collect(),
            ..self.clone()
        }
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        self.points().all(|p| (norm(p) - 1.0).abs() <= tol)
    }
}

/// Inner product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().min(b.len());
    let (a, b) = (&a[..len], &b[..len]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        sum += x * y;
    }
    sum
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Draws a uniform point on S^{n-1} by normalizing n Box–Muller Gaussians.
pub fn sample_unit_vector(n: usize, stream: &mut RngStream) -> Result<UnitVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut coords = vec![0.0; n];
    loop {
        coords.iter_mut().for_each(|c| *c = stream.normal());
        let r = norm(&coords);
        if r > 0.0 {
            coords.iter_mut().for_each(|c| *c /= r);
            debug_assert!((norm(&coords) - 1.0).abs() < UNIT_NORM_TOL);
            return Ok(UnitVector(coords));
        }
    }
}

/// m independent uniform sphere points from the stream seeded by `seed`.
pub fn sample_symmetric_cloud(n: usize, m: usize, seed: u64) -> Result<PointCloud> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("dimension {n} < 2")));
    }
    if m <= n {
        return Err(Error::InsufficientPoints { n, m });
    }
    let mut stream = RngStream::from_seed(seed);
    let mut coords = Vec::with_capacity(n * m);
    for _ in 0..m {
        coords.extend(sample_unit_vector(n, &mut stream)?.into_inner());
    }
    Ok(PointCloud {
        n,
        m,
        coords,
        seed: Some(seed),
    })
}

/// ∫_{S^{n-1}} |⟨u, θ⟩|^q dσ(u), evaluated in log space.
pub fn sphere_abs_moment(n: usize, q: f64) -> Result<f64> {
    ln_sphere_abs_moment(n, q).map(f64::exp)
}

/// Natural log of [`sphere_abs_moment`]; stays finite where the moment itself underflows.
pub fn ln_sphere_abs_moment(n: usize, q: f64) -> Result<f64> {
    if n < 2 || !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sphere_abs_moment needs n >= 2, q >= 1 (got n = {n}, q = {q})"
        )));
    }
    let nf = n as f64;
    let ln = 2f64.ln() + ln_gamma(0.5 * (1.0 + q)) + ln_gamma(1.0 + 0.5 * nf)
        - 0.5 * PI.ln()
        - nf.ln()
        - ln_gamma(0.5 * (nf + q));
    Ok(ln)
}

/// σ{P : |⟨P, θ⟩| > alpha}.
///
/// Integrates (1-x²)^{(n-3)/2} over [alpha, 1] after substituting x = sin t,
/// which leaves the smooth integrand cos^{n-2} t on [asin alpha, π/2].
pub fn cap_tail_prob(n: usize, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("dimension {n} < 2")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "cap level {alpha} outside [0, 1]"
        )));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let ratio =
        (2f64.ln() + (nf - 1.0).ln() + ln_ball_volume(nf - 1.0) - nf.ln() - ln_ball_volume(nf))
            .exp();
    let power = (n - 2) as i32;
    let integral = adaptive_simpson(|t| t.cos().powi(power), alpha.asin(), 0.5 * PI, 1e-12);
    Ok((ratio * integral).clamp(0.0, 1.0))
}

/// Empirical ψ₂ norm: the smallest λ > 0 with mean(exp(v²/λ²)) ≤ 2.
pub fn psi2_norm_estimate(values: &[f64]) -> f64 {
    let max_abs = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max_abs == 0.0 {
        return 0.0;
    }
    let mean_exp = |lambda: f64| {
        let inv = 1.0 / (lambda * lambda);
        values.iter().map(|v| (v * v * inv).exp()).sum::<f64>() / values.len() as f64
    };
    // every term is at most 2 here, so the bracket top is always feasible
    let mut hi = max_abs / 2f64.ln().sqrt();
    let mut lo = 0.5 * hi;
    while mean_exp(lo) <= 2.0 {
        hi = lo;
        lo *= 0.5;
    }
    while (hi - lo) > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if mean_exp(mid) <= 2.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Sub-Gaussian Bernstein tail bound 2·exp(-ε²N / (8A²)).
pub fn bernstein_bound(count: usize, eps: f64, a: f64) -> f64 {
    2.0 * (-eps * eps * count as f64 / (8.0 * a * a)).exp()
}

/// Σ_{i≠j} ⟨P_i, P_j⟩ over ordered pairs, as |Σ P_i|² - Σ |P_i|².
pub fn sum_cross_inner<V: AsRef<[f64]>>(points: &[V]) -> Result<f64> {
    let first = points.first().ok_or_else(|| {
        Error::InvalidArgument("sum_cross_inner needs at least one vector".into())
    })?;
    let n = first.as_ref().len();
    let mut sum = vec![0.0; n];
    let mut sq = 0.0;
    for p in points {
        let p = p.as_ref();
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.len(),
            });
        }
        sum.iter_mut().zip(p).for_each(|(s, x)| *s += x);
        sq += dot(p, p);
    }
    Ok(dot(&sum, &sum) - sq)
}
