#![allow(dead_code)]

use isohull::linalg::Matrix;
use isohull::{PointCloud, RngStream};

/// Facets of conv{±P_i} by exhaustive search: every n-subset of the 2m
/// points whose hyperplane a·x = 1 has all points on the origin side.
pub fn brute_force_facets(cloud: &PointCloud) -> Vec<Vec<usize>> {
    let n = cloud.dim();
    let coords = cloud.symmetric_coords();
    let points: Vec<&[f64]> = coords.chunks_exact(n).collect();
    let mut facets = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let a = Matrix::from_fn(n, n, |r, c| points[subset[r]][c]);
        if let Some(inv) = a.clone().try_inverse() {
            if a.determinant().abs() > 1e-12 {
                let normal = inv * nalgebra::DVector::from_element(n, 1.0);
                let supporting = points.iter().all(|p| {
                    let h: f64 = p.iter().zip(normal.iter()).map(|(x, y)| x * y).sum();
                    h <= 1.0 + 1e-9
                });
                if supporting {
                    facets.push(subset.clone());
                }
            }
        }
        if !next_subset(&mut subset, points.len()) {
            break;
        }
    }
    facets.sort();
    facets
}

fn next_subset(s: &mut [usize], len: usize) -> bool {
    let k = s.len();
    for i in (0..k).rev() {
        if s[i] < len - k + i {
            s[i] += 1;
            for j in i + 1..k {
                s[j] = s[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Uniformly random rotation from the QR factorization of a Gaussian matrix.
pub fn random_rotation(n: usize, stream: &mut RngStream) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| stream.normal());
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = Matrix::from_diagonal(&r.diagonal().map(|d| d.signum()));
    q * signs
}

/// Random linear map with singular values spread over [1, cond].
pub fn random_linear_map(n: usize, cond: f64, stream: &mut RngStream) -> Matrix {
    let u = random_rotation(n, stream);
    let v = random_rotation(n, stream);
    let mut s: Vec<f64> = (0..n)
        .map(|_| 1.0 + (cond - 1.0) * stream.uniform())
        .collect();
    s[0] = 1.0;
    s[n - 1] = cond;
    u * Matrix::from_diagonal(&nalgebra::DVector::from_vec(s)) * v.transpose()
}

pub fn row_major(t: &Matrix) -> Vec<f64> {
    t.transpose().iter().copied().collect()
}

pub fn condition_number(t: &Matrix) -> f64 {
    let s = t.clone().svd(false, false).singular_values;
    s.max() / s.min()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}
