//! Exact volume and second moments over the cone decomposition
//! K = ∪ conv(0, F_i).

use crate::error::{Error, Result};
use crate::hull::{inradius, FacetComplex};
use crate::linalg::{cholesky, Matrix};
use crate::sphere::{norm, sum_cross_inner};

const UNIT_TOL: f64 = 1e-9;

/// Exact moment data of a symmetric polytope.
#[derive(Clone, Debug)]
pub struct MomentSummary {
    pub volume: f64,
    /// (1/|K|) ∫_K |x|² dx.
    pub mean_square: f64,
    /// (1/|K|) ∫_K x xᵀ dx.
    pub covariance: Matrix,
    pub inradius: f64,
}

/// Normalized moment (1/|Δ^{n-1}|) ∫ x_i x_j over the standard simplex with
/// `n` vertices: 2/(n(n+1)) on the diagonal, 1/(n(n+1)) off it.
pub fn simplex_pair_moment(n: usize, same: bool) -> f64 {
    let base = 1.0 / (n as f64 * (n as f64 + 1.0));
    if same {
        2.0 * base
    } else {
        base
    }
}

/// (1/|F|) ∫_F |x|² for F = conv{Q_1, .., Q_n} with unit vertices, from the
/// closed form 2/(n+1) + Σ_{i≠j}⟨Q_i, Q_j⟩ / (n(n+1)).
pub fn facet_mean_square<V: AsRef<[f64]>>(vertices: &[V]) -> Result<f64> {
    let n = vertices.len();
    for v in vertices {
        let r = norm(v.as_ref());
        if (r - 1.0).abs() > UNIT_TOL {
            return Err(Error::ContractViolation(format!(
                "facet vertex has norm {r}; use the covariance path for general vertices"
            )));
        }
    }
    let cross = sum_cross_inner(vertices)?;
    let nf = n as f64;
    Ok(2.0 / (nf + 1.0) + cross / (nf * (nf + 1.0)))
}

/// The same average computed by pulling the simplex moments back through
/// T = [Q_1 .. Q_n]: Σ_j Σ_{i₁,i₂} Q_{i₁}(j) Q_{i₂}(j) E[x_{i₁} x_{i₂}].
/// Valid for arbitrary vertices.
pub fn facet_mean_square_pullback<V: AsRef<[f64]>>(vertices: &[V]) -> f64 {
    let k = vertices.len();
    let dim = vertices.first().map_or(0, |v| v.as_ref().len());
    let mut total = 0.0;
    for j in 0..dim {
        for (i1, a) in vertices.iter().enumerate() {
            for (i2, b) in vertices.iter().enumerate() {
                total += a.as_ref()[j] * b.as_ref()[j] * simplex_pair_moment(k, i1 == i2);
            }
        }
    }
    total
}

/// |K| = (1/n) Σ d(0, F_i) |F_i|.
pub fn polytope_volume(fc: &FacetComplex) -> Result<f64> {
    let n = fc.dim() as f64;
    let volume = fc.facets().iter().map(|f| f.dist * f.volume).sum::<f64>() / n;
    if !(volume > 0.0) {
        return Err(Error::InvalidComplex(format!(
            "non-positive volume {volume}"
        )));
    }
    Ok(volume)
}

/// (1/|K|) Σ (d(0, F_i)/(n+2)) ∫_{F_i} |y|² dy, for unit-sphere vertices.
pub fn polytope_mean_square(fc: &FacetComplex) -> Result<f64> {
    let volume = polytope_volume(fc)?;
    let n = fc.dim() as f64;
    let mut total = 0.0;
    for f in fc.facets() {
        let fms = facet_mean_square(&fc.facet_vertices(f))?;
        total += f.dist / (n + 2.0) * f.volume * fms;
    }
    Ok(total / volume)
}

/// (1/|K|) ∫_K x xᵀ dx from the cone formula
/// ∫_{conv(0, v_1..v_n)} x xᵀ = |C| / ((n+1)(n+2)) · (Σ v_k v_kᵀ + s sᵀ), s = Σ v_k.
///
/// The Σ v_k v_kᵀ part is gathered per vertex before the outer products.
pub fn polytope_covariance(fc: &FacetComplex) -> Result<Matrix> {
    let n = fc.dim();
    let nf = n as f64;
    let volume = polytope_volume(fc)?;
    let denom = (nf + 1.0) * (nf + 2.0);
    let mut vertex_weight = vec![0.0; fc.vertex_count()];
    let mut acc = vec![0.0; n * n];
    let mut s = vec![0.0; n];
    for f in fc.facets() {
        let w = f.dist * f.volume / nf / denom;
        s.iter_mut().for_each(|x| *x = 0.0);
        for &v in &f.vertex_ids {
            vertex_weight[v] += w;
            s.iter_mut().zip(fc.vertex(v)).for_each(|(a, b)| *a += b);
        }
        add_outer(&mut acc, &s, w);
    }
    for (v, &w) in vertex_weight.iter().enumerate() {
        if w != 0.0 {
            add_outer(&mut acc, fc.vertex(v), w);
        }
    }
    let cov = Matrix::from_fn(n, n, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        acc[a * n + b] / volume
    });
    cholesky(&cov).map_err(|e| Error::InvalidComplex(format!("covariance not SPD: {e}")))?;
    Ok(cov)
}

/// Upper-triangle accumulation of w · x xᵀ.
#[inline]
fn add_outer(acc: &mut [f64], x: &[f64], w: f64) {
    let n = x.len();
    for i in 0..n {
        let wi = w * x[i];
        for j in i..n {
            acc[i * n + j] += wi * x[j];
        }
    }
}

/// Max over facets of Σ_{i≠j}⟨Q_i, Q_j⟩.
pub fn max_facet_cross(fc: &FacetComplex) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for f in fc.facets() {
        best = best.max(sum_cross_inner(&fc.facet_vertices(f))?);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InvalidComplex("empty facet list".into()))
    }
}

/// Volume, mean square, covariance and inradius. The mean square comes from
/// the facet closed form when every vertex is on the unit sphere and from
/// the covariance trace otherwise.
pub fn moment_summary(fc: &FacetComplex) -> Result<MomentSummary> {
    let volume = polytope_volume(fc)?;
    let covariance = polytope_covariance(fc)?;
    let mean_square = if fc.has_unit_vertices(UNIT_TOL) {
        polytope_mean_square(fc)?
    } else {
        covariance.trace()
    };
    Ok(MomentSummary {
        volume,
        mean_square,
        covariance,
        inradius: inradius(fc)?,
    })
}

#[doc(hidden)]
pub fn cone_volume_by_determinant(fc: &FacetComplex) -> f64 {
    let n = fc.dim();
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    fc.facets()
        .iter()
        .map(|f| {
            let m = Matrix::from_fn(n, n, |i, j| fc.vertex(f.vertex_ids[j])[i]);
            m.determinant().abs() / factorial
        })
        .sum()
}
