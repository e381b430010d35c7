//! Boundary complex of the symmetric hull conv{±P_1, .., ±P_m}.
//!
//! Construction is incremental beneath-beyond over all 2m symmetrized points
//! with outside sets: each pending point is parked on one facet it lies
//! beyond, the farthest pending point of a facet is inserted next, the
//! visible region is found by walking the facet adjacency graph, and the
//! horizon ridges are coned to the new apex. Central symmetry is not used
//! during construction; [`validate_complex`] checks it afterwards.

mod build;
mod off;
mod validate;

pub use build::symmetric_hull;
pub use off::write_off;
pub use validate::{validate_complex, Check, CheckKind, Offender, ValidationReport};

use crate::error::{Error, Result};
use crate::sphere::dot;

/// Coplanarity tolerance for coordinates of unit scale.
pub const PLANE_TOL: f64 = 1e-9;

/// A simplicial facet conv{Q_1, .., Q_n} of the hull.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    /// Sorted indices into the symmetrized point table; `i + m` means `-P_i`.
    pub vertex_ids: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
    /// Distance from the origin to the facet's hyperplane.
    pub dist: f64,
    /// (n-1)-dimensional volume.
    pub volume: f64,
}

/// The simplicial boundary of a symmetric hull together with its vertex table.
#[derive(Clone, Debug)]
pub struct FacetComplex {
    pub(crate) n: usize,
    pub(crate) m: usize,
    pub(crate) coords: Vec<f64>,
    pub(crate) facets: Vec<Facet>,
    pub(crate) seed: Option<u64>,
}

impl FacetComplex {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of source points P_i; the vertex table holds 2m rows.
    pub fn source_len(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    /// Row `i` of the symmetrized vertex table.
    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.m
    }

    pub fn facet_vertices(&self, facet: &Facet) -> Vec<&[f64]> {
        facet.vertex_ids.iter().map(|&i| self.vertex(i)).collect()
    }

    /// Largest vertex norm, the scale used for tolerances.
    pub fn radius(&self) -> f64 {
        self.coords
            .chunks_exact(self.n)
            .map(|p| dot(p, p).sqrt())
            .fold(0.0, f64::max)
    }

    /// Whether every vertex lies on the unit sphere within `tol`.
    pub fn has_unit_vertices(&self, tol: f64) -> bool {
        self.coords
            .chunks_exact(self.n)
            .all(|p| (dot(p, p).sqrt() - 1.0).abs() <= tol)
    }

    /// Index of the antipode of vertex `i`.
    pub fn antipode(&self, i: usize) -> usize {
        if i < self.m {
            i + self.m
        } else {
            i - self.m
        }
    }

    /// The source points P_1..P_m (rows 0..m of the vertex table).
    pub fn source_cloud(&self) -> crate::sphere::PointCloud {
        let rows: Vec<&[f64]> = (0..self.m).map(|i| self.vertex(i)).collect();
        let cloud = crate::sphere::PointCloud::from_points(self.n, &rows)
            .expect("vertex table rows have the complex dimension");
        match self.seed {
            Some(seed) => cloud.with_seed(seed),
            None => cloud,
        }
    }

    /// Copy without facet `index`; used to build invalid mutants in tests.
    pub fn without_facet(&self, index: usize) -> Self {
        let mut out = self.clone();
        out.facets.remove(index);
        out
    }

    /// Copy with the normal of facet `index` negated.
    pub fn with_flipped_normal(&self, index: usize) -> Self {
        let mut out = self.clone();
        out.facets[index].normal.iter_mut().for_each(|c| *c = -*c);
        out
    }
}

/// Radius of the largest origin-centred ball inside the hull.
pub fn inradius(fc: &FacetComplex) -> Result<f64> {
    fc.facets
        .iter()
        .map(|f| f.dist)
        .reduce(f64::min)
        .ok_or_else(|| Error::InvalidComplex("empty facet list".into()))
}
