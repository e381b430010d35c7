//! Isotropy constant and isotropic position.
//!
//! For a centred body with covariance Σ = (1/|K|) ∫_K x xᵀ, the minimum over
//! T ∈ GL(n) of |TK|^{-1-2/n} ∫_{TK} |x|² is attained at T ∝ Σ^{-1/2}, which
//! gives n L_K² = n det(Σ)^{1/n} / |K|^{2/n}.

use crate::error::{Error, Result};
use crate::hull::{symmetric_hull, FacetComplex};
use crate::linalg::{spd_cholesky_det, spd_inverse_sqrt, Matrix};
use crate::moments::{polytope_covariance, polytope_volume};
use crate::special::ln_ball_volume;
use crate::sphere::PointCloud;

#[derive(Clone, Debug, PartialEq)]
pub struct IsotropyReport {
    pub l_k: f64,
    /// sqrt(mean_square / (n |K|^{2/n})), the value of the functional at T = I.
    pub identity_bound: f64,
    /// |K|^{1/n}.
    pub vol_root: f64,
    pub det_cov: f64,
}

pub fn isotropy_constant(volume: f64, covariance: &Matrix) -> Result<IsotropyReport> {
    if !(volume > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "volume {volume} must be positive"
        )));
    }
    let n = covariance.nrows() as f64;
    let det_cov = spd_cholesky_det(covariance)?;
    let vol_root = volume.powf(1.0 / n);
    let l_k = det_cov.powf(0.5 / n) / vol_root;
    let identity_bound = (covariance.trace() / n).sqrt() / vol_root;
    Ok(IsotropyReport {
        l_k,
        identity_bound,
        vol_root,
        det_cov,
    })
}

/// |TK|^{-1-2/n} ∫_{TK} |x|² dx, from |K| and the covariance of K.
pub fn gl_functional(volume: f64, covariance: &Matrix, t: &Matrix) -> f64 {
    let n = covariance.nrows() as f64;
    let t_volume = t.determinant().abs() * volume;
    let second = (t * covariance * t.transpose()).trace();
    second / t_volume.powf(2.0 / n)
}

/// The map T = c Σ^{-1/2} taking K to isotropic position (volume one,
/// covariance L_K² I), together with the transformed source cloud.
pub fn isotropic_transform(fc: &FacetComplex) -> Result<(Matrix, PointCloud)> {
    let n = fc.dim();
    let volume = polytope_volume(fc)?;
    let covariance = polytope_covariance(fc)?;
    let det = spd_cholesky_det(&covariance)?;
    let c = (det.sqrt() / volume).powf(1.0 / n as f64);
    let t = spd_inverse_sqrt(&covariance)? * c;
    let row_major: Vec<f64> = t.transpose().iter().copied().collect();
    let cloud = fc.source_cloud().transformed(&row_major)?;
    Ok((t, cloud))
}

/// Convenience: the complex of the isotropic image, rebuilt from the
/// transformed vertices.
pub fn isotropic_complex(fc: &FacetComplex) -> Result<(Matrix, FacetComplex)> {
    let (t, cloud) = isotropic_transform(fc)?;
    Ok((t, symmetric_hull(&cloud)?))
}

/// L_K bound sqrt(|r B₂ⁿ|^{-2/n} / n) implied by r B₂ⁿ ⊆ K ⊆ B₂ⁿ.
pub fn ball_fallback_bound(n: usize, inradius: f64) -> f64 {
    let nf = n as f64;
    let ln_ball = ln_ball_volume(nf) + nf * inradius.ln();
    (0.5 * (-2.0 / nf * ln_ball - nf.ln())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::moment_summary;
    use crate::special::ball_volume;

    fn cross(n: usize) -> FacetComplex {
        symmetric_hull(&PointCloud::cross_polytope(n)).unwrap()
    }

    #[test]
    fn square_constant() {
        let cov = Matrix::identity(2, 2) / 6.0;
        let r = isotropy_constant(2.0, &cov).unwrap();
        assert!((r.l_k - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!((r.l_k - r.identity_bound).abs() < 1e-15);
    }

    #[test]
    fn octahedron_constant() {
        let r = isotropy_constant(4.0 / 3.0, &(Matrix::identity(3, 3) * 0.1)).unwrap();
        let want = (0.1f64 / (4.0f64 / 3.0).powf(2.0 / 3.0)).sqrt();
        assert!((r.l_k - want).abs() < 1e-15);
        assert!((r.l_k - 0.28731).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(isotropy_constant(0.0, &Matrix::identity(2, 2)).is_err());
        let bad = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            isotropy_constant(1.0, &bad),
            Err(Error::NotSpd { .. })
        ));
    }

    #[test]
    fn cross_polytope_transform_is_scalar() {
        for n in 2..=5 {
            let (t, _) = isotropic_transform(&cross(n)).unwrap();
            let d = t[(0, 0)];
            assert!(d > 0.0);
            assert!((t - Matrix::identity(n, n) * d).amax() < 1e-10);
        }
    }

    #[test]
    fn transformed_body_is_isotropic() {
        let fc = symmetric_hull(&crate::sphere::sample_symmetric_cloud(3, 9, 21).unwrap()).unwrap();
        let before = moment_summary(&fc).unwrap();
        let l_k = isotropy_constant(before.volume, &before.covariance)
            .unwrap()
            .l_k;
        let (_, iso) = isotropic_complex(&fc).unwrap();
        let after = moment_summary(&iso).unwrap();
        assert!((after.volume - 1.0).abs() < 1e-10);
        let target = Matrix::identity(3, 3) * (l_k * l_k);
        assert!((&after.covariance - &target).amax() < 1e-8 * l_k * l_k);
    }

    #[test]
    fn fallback_bound_values() {
        for n in 2..=20 {
            let nf = n as f64;
            let want = 4.0 / (nf.sqrt() * ball_volume(n).powf(1.0 / nf));
            let got = ball_fallback_bound(n, 0.25);
            assert!((got - want).abs() < 1e-12 * want);
        }
        assert!(ball_fallback_bound(4, 0.3) > ball_fallback_bound(4, 0.4));
        let oct = ball_fallback_bound(3, 1.0 / 3f64.sqrt());
        assert!(0.28731 <= oct);
    }
}
