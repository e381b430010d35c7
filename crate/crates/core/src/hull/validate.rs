use super::{FacetComplex, PLANE_TOL};
use crate::rng::avalanche;
use crate::sphere::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckKind {
    NonEmpty,
    UnitNormals,
    VerticesOnPlane,
    NoAntipodalPair,
    DistanceRange,
    RidgeSharing,
    CentralSymmetry,
    Containment,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Offender {
    Facet(usize),
    /// Facet index and the offending vertex id.
    FacetVertex(usize, usize),
    /// Ridge vertex ids and how many facets share the ridge.
    Ridge(Vec<usize>, usize),
    /// Point id lying beyond facet index.
    Point(usize, usize),
}

#[derive(Clone, Debug)]
pub struct Check {
    pub kind: CheckKind,
    pub offenders: Vec<Offender>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.offenders.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, kind: CheckKind) -> &Check {
        self.checks
            .iter()
            .find(|c| c.kind == kind)
            .expect("every check kind is reported")
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Checks every structural and geometric invariant of a facet complex.
pub fn validate_complex(fc: &FacetComplex) -> ValidationReport {
    let tol = PLANE_TOL * fc.radius().max(1.0);
    let n = fc.n;
    let mut checks = Vec::with_capacity(8);

    checks.push(Check {
        kind: CheckKind::NonEmpty,
        offenders: if fc.facets.is_empty() {
            vec![Offender::Facet(0)]
        } else {
            vec![]
        },
    });

    let mut unit = Vec::new();
    let mut on_plane = Vec::new();
    let mut antipodal = Vec::new();
    let mut range = Vec::new();
    let radius = fc.radius();
    for (fi, f) in fc.facets.iter().enumerate() {
        if (dot(&f.normal, &f.normal).sqrt() - 1.0).abs() > tol {
            unit.push(Offender::Facet(fi));
        }
        for &v in &f.vertex_ids {
            if (dot(&f.normal, fc.vertex(v)) - f.dist).abs() > tol {
                on_plane.push(Offender::FacetVertex(fi, v));
            }
            if f.vertex_ids.contains(&fc.antipode(v)) && v < fc.antipode(v) {
                antipodal.push(Offender::FacetVertex(fi, v));
            }
        }
        if !(f.dist > 0.0 && f.dist <= radius + tol) {
            range.push(Offender::Facet(fi));
        }
    }
    checks.push(Check {
        kind: CheckKind::UnitNormals,
        offenders: unit,
    });
    checks.push(Check {
        kind: CheckKind::VerticesOnPlane,
        offenders: on_plane,
    });
    checks.push(Check {
        kind: CheckKind::NoAntipodalPair,
        offenders: antipodal,
    });
    checks.push(Check {
        kind: CheckKind::DistanceRange,
        offenders: range,
    });

    let bad_ridges = ridge_multiplicity(fc);
    checks.push(Check {
        kind: CheckKind::RidgeSharing,
        offenders: bad_ridges,
    });

    let fingerprint = |ids: &mut dyn Iterator<Item = usize>| {
        ids.fold(0u64, |h, v| h.wrapping_add(avalanche(v as u64)))
    };
    let by_print = sort_by_key(
        fc.facets
            .iter()
            .enumerate()
            .map(|(i, f)| (fingerprint(&mut f.vertex_ids.iter().copied()), i as u32, 0))
            .collect(),
    );
    let mut asym = Vec::new();
    for (fi, f) in fc.facets.iter().enumerate() {
        let key = fingerprint(&mut f.vertex_ids.iter().map(|&v| fc.antipode(v)));
        let start = by_print.partition_point(|e| e.0 < key);
        let ok = by_print[start..]
            .iter()
            .take_while(|e| e.0 == key)
            .map(|e| &fc.facets[e.1 as usize])
            .find(|g| {
                g.vertex_ids.len() == f.vertex_ids.len()
                    && f.vertex_ids
                        .iter()
                        .all(|&v| g.vertex_ids.binary_search(&fc.antipode(v)).is_ok())
            })
            .is_some_and(|g| {
                (g.dist - f.dist).abs() <= tol
                    && g.normal
                        .iter()
                        .zip(&f.normal)
                        .all(|(a, b)| (a + b).abs() <= tol)
            });
        if !ok {
            asym.push(Offender::Facet(fi));
        }
    }
    checks.push(Check {
        kind: CheckKind::CentralSymmetry,
        offenders: asym,
    });

    // With an exactly antipodal vertex table one dot product serves both
    // members of each pair.
    let half = fc.m;
    let paired = (0..half).all(|p| {
        fc.vertex(p)
            .iter()
            .zip(fc.vertex(p + half))
            .all(|(a, b)| *a == -*b)
    });
    let mut outside = Vec::new();
    for (fi, f) in fc.facets.iter().enumerate() {
        if paired {
            for p in 0..half {
                let d = dot(&f.normal, fc.vertex(p));
                if d > f.dist + tol {
                    outside.push(Offender::Point(p, fi));
                }
                if -d > f.dist + tol {
                    outside.push(Offender::Point(p + half, fi));
                }
            }
        } else {
            for p in 0..fc.vertex_count() {
                if dot(&f.normal, fc.vertex(p)) > f.dist + tol {
                    outside.push(Offender::Point(p, fi));
                }
            }
        }
    }
    checks.push(Check {
        kind: CheckKind::Containment,
        offenders: outside,
    });

    debug_assert!(n >= 2);
    ValidationReport { checks }
}

/// Ridges not shared by exactly two facets. Ridges are bucketed by a
/// commutative fingerprint of their vertex ids, then compared exactly.
fn ridge_multiplicity(fc: &FacetComplex) -> Vec<Offender> {
    let mut keyed: Vec<(u64, u32, u32)> = Vec::with_capacity(fc.facets.len() * fc.n);
    for (fi, f) in fc.facets.iter().enumerate() {
        let total = f
            .vertex_ids
            .iter()
            .fold(0u64, |h, &v| h.wrapping_add(avalanche(v as u64)));
        for (skip, &v) in f.vertex_ids.iter().enumerate() {
            keyed.push((
                total.wrapping_sub(avalanche(v as u64)),
                fi as u32,
                skip as u32,
            ));
        }
    }
    let keyed = sort_by_key(keyed);
    let ridge = |&(_, fi, skip): &(u64, u32, u32)| {
        fc.facets[fi as usize]
            .vertex_ids
            .iter()
            .enumerate()
            .filter(move |&(q, _)| q != skip as usize)
            .map(|(_, &v)| v)
    };
    let mut bad = Vec::new();
    for group in keyed.chunk_by(|a, b| a.0 == b.0) {
        if group.len() == 2 && ridge(&group[0]).eq(ridge(&group[1])) {
            continue;
        }
        let mut ridges: Vec<Vec<usize>> = group.iter().map(|r| ridge(r).collect()).collect();
        ridges.sort();
        for same in ridges.chunk_by(|a, b| a == b) {
            if same.len() != 2 {
                bad.push(Offender::Ridge(same[0].clone(), same.len()));
            }
        }
    }
    bad.sort_by(|a, b| match (a, b) {
        (Offender::Ridge(x, _), Offender::Ridge(y, _)) => x.cmp(y),
        _ => std::cmp::Ordering::Equal,
    });
    bad
}

/// Sorts entries by their (uniformly spread) 64-bit key: one counting pass
/// on the leading bits, then a small comparison sort per bucket.
fn sort_by_key(entries: Vec<(u64, u32, u32)>) -> Vec<(u64, u32, u32)> {
    let len = entries.len();
    if len < 64 {
        let mut entries = entries;
        entries.sort_unstable_by_key(|e| e.0);
        return entries;
    }
    let bits = (usize::BITS - (len / 4).leading_zeros()).min(20);
    let shift = 64 - bits;
    let mut starts = vec![0usize; (1 << bits) + 1];
    for e in &entries {
        starts[(e.0 >> shift) as usize + 1] += 1;
    }
    for b in 1..starts.len() {
        starts[b] += starts[b - 1];
    }
    let mut fill = starts.clone();
    let mut out = vec![(0u64, 0u32, 0u32); len];
    for e in entries {
        let b = (e.0 >> shift) as usize;
        out[fill[b]] = e;
        fill[b] += 1;
    }
    for w in starts.windows(2) {
        if w[1] - w[0] > 1 {
            out[w[0]..w[1]].sort_unstable_by_key(|e| e.0);
        }
    }
    out
}
