//! Monte Carlo cross-checks for the exact moment formulas.
//!
//! Samples are drawn in fixed-size chunks, chunk `c` from the child stream
//! `c`, and the per-chunk accumulators are merged in chunk order. Estimates
//! therefore do not depend on how chunks are scheduled.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hull::FacetComplex;
use crate::linalg::Matrix;
use crate::moments::polytope_volume;
use crate::rng::RngStream;
use crate::special::ball_volume;
use crate::sphere::dot;

const CHUNK: usize = 4096;
const MAX_REJECTION_DIM: usize = 5;
const MEMBERSHIP_TOL: f64 = 1e-12;
const MAX_SAMPLER_DIM: usize = 64;

/// Uniform sampler over a polytope through its cone decomposition.
pub struct PolytopeSampler<'a> {
    fc: &'a FacetComplex,
    cumulative: Vec<f64>,
}

impl<'a> PolytopeSampler<'a> {
    pub fn new(fc: &'a FacetComplex) -> Result<Self> {
        if fc.dim() >= MAX_SAMPLER_DIM {
            return Err(Error::InvalidArgument(format!(
                "sampler supports dimensions below {MAX_SAMPLER_DIM}"
            )));
        }
        polytope_volume(fc)?;
        let mut total = 0.0;
        let cumulative = fc
            .facets()
            .iter()
            .map(|f| {
                total += f.dist * f.volume;
                total
            })
            .collect();
        Ok(Self { fc, cumulative })
    }

    /// Picks cone i with probability |C_i|/|K|, then a flat Dirichlet point
    /// of conv(0, Q_1..Q_n).
    pub fn sample_into(&self, stream: &mut RngStream, out: &mut [f64]) {
        let total = *self.cumulative.last().expect("non-empty complex");
        let u = stream.uniform() * total;
        let i = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1);
        let facet = &self.fc.facets()[i];
        let n = self.fc.dim();
        let mut weights = [0.0f64; MAX_SAMPLER_DIM];
        let weights = &mut weights[..=n];
        let mut sum = 0.0;
        for w in weights.iter_mut() {
            *w = stream.exponential();
            sum += *w;
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        // weights[n] belongs to the apex at the origin
        for (w, &v) in weights.iter().zip(&facet.vertex_ids) {
            let w = w / sum;
            out.iter_mut()
                .zip(self.fc.vertex(v))
                .for_each(|(x, c)| *x += w * c);
        }
    }

    pub fn sample(&self, stream: &mut RngStream) -> Vec<f64> {
        let mut out = vec![0.0; self.fc.dim()];
        self.sample_into(stream, &mut out);
        out
    }
}

/// One uniform point of the polytope.
pub fn sample_in_polytope(fc: &FacetComplex, stream: &mut RngStream) -> Result<Vec<f64>> {
    Ok(PolytopeSampler::new(fc)?.sample(stream))
}

/// Membership test against every facet hyperplane.
pub fn contains(fc: &FacetComplex, x: &[f64], tol: f64) -> bool {
    fc.facets()
        .iter()
        .all(|f| dot(&f.normal, x) <= f.dist + tol)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// |exact - value| in standard-error units.
    pub fn z_score(&self, exact: f64) -> f64 {
        (exact - self.value).abs() / self.se
    }
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub samples: usize,
    pub volume: Option<Estimate>,
    pub mean_square: Estimate,
    pub covariance: Matrix,
    pub covariance_se: Matrix,
}

/// Streaming mean/variance accumulator for a fixed set of features, with
/// pairwise (Chan et al.) merging.
#[derive(Clone, Debug)]
struct Welford {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(k: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; k],
            m2: vec![0.0; k],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / self.count;
            *s += d * (v - *m);
        }
    }

    fn merge(&mut self, other: &Welford) {
        if other.count == 0.0 {
            return;
        }
        let total = self.count + other.count;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * other.count / total;
            self.m2[i] += other.m2[i] + d * d * self.count * other.count / total;
        }
        self.count = total;
    }

    fn se(&self, i: usize) -> f64 {
        (self.m2[i] / (self.count - 1.0) / self.count).sqrt()
    }
}

/// Monte Carlo estimates of mean square and covariance (all dimensions) and,
/// when `with_volume`, of the volume by rejection from the circumscribed
/// ball (n ≤ 5 only).
pub fn mc_moment_oracle(
    fc: &FacetComplex,
    samples: usize,
    stream: &RngStream,
    with_volume: bool,
    exec: Execution,
) -> Result<OracleReport> {
    let n = fc.dim();
    if with_volume && n > MAX_REJECTION_DIM {
        return Err(Error::OracleDisabled(n));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "oracle needs at least 2 samples".into(),
        ));
    }
    let sampler = PolytopeSampler::new(fc)?;
    let chunks = samples.div_ceil(CHUNK);
    let features = 1 + n * (n + 1) / 2;
    let moment_stream = stream.child(0);

    let parts = exec.map_range(chunks, |c| {
        let mut s = moment_stream.child(c as u64);
        let mut acc = Welford::new(features);
        let mut x = vec![0.0; n];
        let mut row = vec![0.0; features];
        for _ in 0..chunk_len(samples, c) {
            sampler.sample_into(&mut s, &mut x);
            row[0] = dot(&x, &x);
            let mut k = 1;
            for i in 0..n {
                for j in i..n {
                    row[k] = x[i] * x[j];
                    k += 1;
                }
            }
            acc.push(&row);
        }
        acc
    });
    let mut acc = Welford::new(features);
    parts.iter().for_each(|p| acc.merge(p));

    let mut covariance = Matrix::zeros(n, n);
    let mut covariance_se = Matrix::zeros(n, n);
    let mut k = 1;
    for i in 0..n {
        for j in i..n {
            covariance[(i, j)] = acc.mean[k];
            covariance[(j, i)] = acc.mean[k];
            covariance_se[(i, j)] = acc.se(k);
            covariance_se[(j, i)] = acc.se(k);
            k += 1;
        }
    }
    let mean_square = Estimate {
        value: acc.mean[0],
        se: acc.se(0),
    };

    let volume = if with_volume {
        let radius = fc.radius();
        let ball = ball_volume(n) * radius.powi(n as i32);
        let tol = MEMBERSHIP_TOL * radius;
        let volume_stream = stream.child(1);
        let hits: usize = exec
            .map_range(chunks, |c| {
                let mut s = volume_stream.child(c as u64);
                let mut x = vec![0.0; n];
                let mut hits = 0usize;
                for _ in 0..chunk_len(samples, c) {
                    sample_in_ball(&mut s, radius, &mut x);
                    if contains(fc, &x, tol) {
                        hits += 1;
                    }
                }
                hits
            })
            .into_iter()
            .sum();
        let p = hits as f64 / samples as f64;
        Some(Estimate {
            value: p * ball,
            se: ball * (p * (1.0 - p) / samples as f64).sqrt(),
        })
    } else {
        None
    };

    Ok(OracleReport {
        samples,
        volume,
        mean_square,
        covariance,
        covariance_se,
    })
}

fn chunk_len(total: usize, chunk: usize) -> usize {
    CHUNK.min(total - chunk * CHUNK)
}

/// Uniform point of the ball of the given radius.
fn sample_in_ball(stream: &mut RngStream, radius: f64, out: &mut [f64]) {
    let n = out.len();
    loop {
        out.iter_mut().for_each(|x| *x = stream.normal());
        let r = dot(out, out).sqrt();
        if r > 0.0 {
            let scale = radius * stream.uniform().powf(1.0 / n as f64) / r;
            out.iter_mut().for_each(|x| *x *= scale);
            return;
        }
    }
}
