use super::{Facet, FacetComplex, PLANE_TOL};
use crate::error::{Error, Result};
use crate::linalg::spd_det_in_place;
use crate::rng::avalanche;
use crate::sphere::{dot, PointCloud};

const NONE: u32 = u32::MAX;

/// Working facet table in struct-of-arrays layout; facet `f` owns the
/// slices `[f * n, (f + 1) * n)` of `verts`, `neighbors` and `normals`.
struct Builder<'a> {
    n: usize,
    pts: &'a [f64],
    center: Vec<f64>,
    tol: f64,
    /// Sorted vertex ids per facet.
    verts: Vec<u32>,
    /// `neighbors[f * n + k]` shares the ridge opposite `verts[f * n + k]`.
    neighbors: Vec<u32>,
    normals: Vec<f64>,
    offsets: Vec<f64>,
    /// Commutative fingerprint of each facet's vertex set.
    fingerprints: Vec<u64>,
    alive: Vec<bool>,
    seen: Vec<u32>,
    visible: Vec<u32>,
    outside: Vec<Vec<u32>>,
    round: u32,
    basis: Vec<f64>,
    residual: Vec<f64>,
    ridges: Vec<(u64, u32, u32)>,
}

/// Builds the simplicial boundary of conv{±P_i}.
///
/// Accepts arbitrary (non-unit) points; the coplanarity tolerance scales with
/// the largest point norm.
pub fn symmetric_hull(cloud: &PointCloud) -> Result<FacetComplex> {
    let n = cloud.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("dimension {n} < 2")));
    }
    let coords = cloud.symmetric_coords();
    if coords.len() / n >= NONE as usize {
        return Err(Error::InvalidArgument("too many points".into()));
    }
    let scale = coords
        .chunks_exact(n)
        .map(|p| dot(p, p).sqrt())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DoesNotSpan(n));
    }
    let mut builder = Builder {
        n,
        pts: &coords,
        center: vec![0.0; n],
        tol: PLANE_TOL * scale,
        verts: Vec::new(),
        neighbors: Vec::new(),
        normals: Vec::new(),
        offsets: Vec::new(),
        fingerprints: Vec::new(),
        alive: Vec::new(),
        seen: Vec::new(),
        visible: Vec::new(),
        outside: Vec::new(),
        round: 0,
        basis: vec![0.0; n * n],
        residual: vec![0.0; n],
        ridges: Vec::new(),
    };
    builder.initial_simplex()?;
    builder.expand()?;
    let facets = builder.finish()?;
    Ok(FacetComplex {
        n,
        m: cloud.len(),
        coords,
        facets,
        seed: cloud.seed(),
    })
}

impl Builder<'_> {
    #[inline]
    fn point(&self, i: u32) -> &[f64] {
        let i = i as usize;
        &self.pts[i * self.n..(i + 1) * self.n]
    }

    fn npoints(&self) -> u32 {
        (self.pts.len() / self.n) as u32
    }

    fn facet_count(&self) -> usize {
        self.offsets.len()
    }

    #[inline]
    fn facet_verts(&self, f: u32) -> &[u32] {
        let f = f as usize;
        &self.verts[f * self.n..(f + 1) * self.n]
    }

    #[inline]
    fn height(&self, f: u32, p: u32) -> f64 {
        let f = f as usize;
        dot(&self.normals[f * self.n..(f + 1) * self.n], self.point(p)) - self.offsets[f]
    }

    /// Appends a facet on `verts` (sorted). With c the interior reference
    /// point, the plane is {x : a·(x - c) = 1}; solving for a by Gaussian
    /// elimination gives the outward normal a/|a| directly.
    fn push_facet(&mut self, verts: &[u32]) -> Result<u32> {
        let n = self.n;
        let mut a = std::mem::take(&mut self.basis);
        let mut r = std::mem::take(&mut self.residual);
        for (row, &v) in verts.iter().enumerate() {
            for ((x, p), c) in a[row * n..(row + 1) * n]
                .iter_mut()
                .zip(self.point(v))
                .zip(&self.center)
            {
                *x = p - c;
            }
        }
        r.iter_mut().for_each(|x| *x = 1.0);
        let solved = solve_in_place(&mut a, &mut r, n, self.tol);
        self.basis = a;
        if !solved {
            self.residual = r;
            return Err(Error::PerturbationRequired(format!(
                "facet {verts:?} is affinely dependent or passes through the interior reference point"
            )));
        }
        let len = dot(&r, &r).sqrt();
        if 1.0 / len <= self.tol {
            self.residual = r;
            return Err(Error::PerturbationRequired(format!(
                "facet {verts:?} passes through the interior reference point"
            )));
        }
        r.iter_mut().for_each(|c| *c /= len);
        let offset = verts.iter().map(|&v| dot(&r, self.point(v))).sum::<f64>() / n as f64;

        self.verts.extend_from_slice(verts);
        self.neighbors.extend(std::iter::repeat_n(NONE, n));
        self.normals.extend_from_slice(&r);
        self.offsets.push(offset);
        self.fingerprints.push(
            verts
                .iter()
                .fold(0u64, |h, &v| h.wrapping_add(avalanche(v as u64))),
        );
        self.alive.push(true);
        self.seen.push(0);
        self.visible.push(0);
        self.outside.push(Vec::new());
        self.residual = r;
        Ok((self.facet_count() - 1) as u32)
    }

    /// Greedy simplex: each new vertex maximizes its distance to the affine
    /// hull of the ones already chosen.
    fn initial_simplex(&mut self) -> Result<()> {
        let n = self.n;
        let count = self.npoints();
        let first = (0..count)
            .max_by(|&a, &b| {
                let (pa, pb) = (self.point(a), self.point(b));
                dot(pa, pa).total_cmp(&dot(pb, pb))
            })
            .expect("non-empty point table");
        let mut chosen = vec![first];
        let mut basis = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let origin = self.point(first).to_vec();
        for row in 0..n {
            let mut best = (0.0, NONE);
            for i in 0..count {
                for ((x, a), b) in e.iter_mut().zip(self.point(i)).zip(&origin) {
                    *x = a - b;
                }
                let len = orthogonalize(&mut e, &basis[..row * n], n);
                if len > best.0 {
                    best = (len, i);
                }
            }
            let (len, idx) = best;
            if len <= self.tol {
                return Err(Error::DoesNotSpan(n));
            }
            for ((x, a), b) in e.iter_mut().zip(self.point(idx)).zip(&origin) {
                *x = a - b;
            }
            let (done, rest) = basis.split_at_mut(row * n);
            let len = orthogonalize(&mut e, done, n);
            for (dst, x) in rest[..n].iter_mut().zip(&e) {
                *dst = x / len;
            }
            chosen.push(idx);
        }

        let mut center = vec![0.0; n];
        for &c in &chosen {
            for (acc, x) in center.iter_mut().zip(self.point(c)) {
                *acc += x / (n + 1) as f64;
            }
        }
        self.center = center;

        // facet j omits chosen[j]; its neighbour across vertex chosen[t] omits chosen[t]
        for j in 0..=n {
            let mut verts: Vec<u32> = chosen
                .iter()
                .enumerate()
                .filter(|&(t, _)| t != j)
                .map(|(_, &v)| v)
                .collect();
            verts.sort_unstable();
            let id = self.push_facet(&verts)?;
            debug_assert_eq!(id as usize, j);
        }
        for j in 0..=n {
            for q in 0..n {
                let v = self.verts[j * n + q];
                let t = chosen.iter().position(|&c| c == v).expect("simplex vertex");
                self.neighbors[j * n + q] = t as u32;
            }
        }

        let pending: Vec<u32> = (0..count).filter(|i| !chosen.contains(i)).collect();
        let fresh: Vec<u32> = (0..=n as u32).collect();
        self.assign(&pending, &fresh);
        Ok(())
    }

    /// Parks every point on the first listed facet it lies strictly beyond;
    /// points beyond none of them are inside and dropped.
    fn assign(&mut self, points: &[u32], targets: &[u32]) {
        for &p in points {
            if let Some(&f) = targets.iter().find(|&&f| self.height(f, p) > self.tol) {
                self.outside[f as usize].push(p);
            }
        }
    }

    fn expand(&mut self) -> Result<()> {
        let mut stack: Vec<u32> = (0..self.facet_count() as u32)
            .filter(|&f| !self.outside[f as usize].is_empty())
            .collect();
        while let Some(start) = stack.pop() {
            let s = start as usize;
            if !self.alive[s] || self.outside[s].is_empty() {
                continue;
            }
            let apex = *self.outside[s]
                .iter()
                .max_by(|&&a, &&b| self.height(start, a).total_cmp(&self.height(start, b)))
                .expect("non-empty outside set");
            let new_ids = self.insert(start, apex)?;
            stack.extend(
                new_ids
                    .into_iter()
                    .filter(|&f| !self.outside[f as usize].is_empty()),
            );
        }
        Ok(())
    }

    /// Inserts `apex`, which lies beyond facet `start`. Returns the new facets.
    fn insert(&mut self, start: u32, apex: u32) -> Result<Vec<u32>> {
        let n = self.n;
        self.round += 1;
        let round = self.round;

        let mut visible = vec![start];
        self.seen[start as usize] = round;
        self.visible[start as usize] = round;
        let mut i = 0;
        while i < visible.len() {
            let f = visible[i] as usize;
            i += 1;
            for k in 0..n {
                let g = self.neighbors[f * n + k];
                if self.seen[g as usize] == round {
                    continue;
                }
                self.seen[g as usize] = round;
                if self.height(g, apex) > self.tol {
                    self.visible[g as usize] = round;
                    visible.push(g);
                }
            }
        }

        let mut horizon = Vec::new();
        for &f in &visible {
            for k in 0..n {
                let g = self.neighbors[f as usize * n + k];
                if self.visible[g as usize] != round {
                    horizon.push((f, k, g));
                }
            }
        }

        let apex_hash = avalanche(apex as u64);
        let mut new_ids = Vec::with_capacity(horizon.len());
        let mut ridges = std::mem::take(&mut self.ridges);
        ridges.clear();
        let mut verts = Vec::with_capacity(n);
        for (f, k, g) in horizon {
            verts.clear();
            let mut placed = false;
            for (q, &v) in self.facet_verts(f).iter().enumerate() {
                if q == k {
                    continue;
                }
                if !placed && apex < v {
                    verts.push(apex);
                    placed = true;
                }
                verts.push(v);
            }
            if !placed {
                verts.push(apex);
            }
            let h = self.push_facet(&verts)?;
            let hu = h as usize;
            let apex_pos = verts.iter().position(|&v| v == apex).unwrap();
            self.neighbors[hu * n + apex_pos] = g;
            let back = self.neighbors[g as usize * n..(g as usize + 1) * n]
                .iter()
                .position(|&x| x == f)
                .ok_or_else(|| Error::InvalidComplex("broken facet adjacency".into()))?;
            self.neighbors[g as usize * n + back] = h;

            let total = self.fingerprints[hu];
            for (q, &v) in verts.iter().enumerate() {
                if q != apex_pos {
                    let key = total.wrapping_sub(avalanche(v as u64));
                    debug_assert_ne!(key, total.wrapping_sub(apex_hash));
                    ridges.push((key, h, q as u32));
                }
            }
            new_ids.push(h);
        }

        // ridges through the apex pair up among the new facets
        ridges.sort_unstable_by_key(|r| r.0);
        let mut i = 0;
        while i < ridges.len() {
            let mut j = i;
            while j < ridges.len() && ridges[j].0 == ridges[i].0 {
                j += 1;
            }
            let group = &mut ridges[i..j];
            let mut matched = vec![false; group.len()];
            for a in 0..group.len() {
                if matched[a] {
                    continue;
                }
                let partner = (a + 1..group.len()).find(|&b| {
                    !matched[b] && self.same_ridge(group[a].1, group[a].2, group[b].1, group[b].2)
                });
                let Some(b) = partner else {
                    self.ridges = ridges;
                    return Err(Error::PerturbationRequired(format!(
                        "horizon around point {apex} is not a closed ridge cycle"
                    )));
                };
                matched[a] = true;
                matched[b] = true;
                let (ha, qa) = (group[a].1 as usize, group[a].2 as usize);
                let (hb, qb) = (group[b].1 as usize, group[b].2 as usize);
                self.neighbors[ha * n + qa] = hb as u32;
                self.neighbors[hb * n + qb] = ha as u32;
            }
            i = j;
        }
        self.ridges = ridges;

        let mut orphans = Vec::new();
        for &f in &visible {
            self.alive[f as usize] = false;
            orphans.extend(
                std::mem::take(&mut self.outside[f as usize])
                    .into_iter()
                    .filter(|&p| p != apex),
            );
        }
        self.assign(&orphans, &new_ids);
        Ok(new_ids)
    }

    fn same_ridge(&self, f: u32, qf: u32, g: u32, qg: u32) -> bool {
        let a = self
            .facet_verts(f)
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != qf as usize);
        let b = self
            .facet_verts(g)
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != qg as usize);
        a.map(|(_, v)| v).eq(b.map(|(_, v)| v))
    }

    fn finish(mut self) -> Result<Vec<Facet>> {
        let n = self.n;
        let half = self.npoints() / 2;
        let factorial: f64 = (1..n).map(|k| k as f64).product();
        let mut gram = vec![0.0; (n - 1) * (n - 1)];
        let mut edges = std::mem::take(&mut self.basis);
        let mut out = Vec::new();
        for f in (0..self.facet_count() as u32).filter(|&f| self.alive[f as usize]) {
            let fu = f as usize;
            let normal = &self.normals[fu * n..(fu + 1) * n];
            let offset = self.offsets[fu];
            let verts = self.facet_verts(f);
            // Point p + half is the exact negation of point p, so one dot
            // product gives the height of both.
            let mut on_plane = 0;
            for p in 0..half {
                let d = dot(normal, self.point(p));
                for (q, h) in [(p, d - offset), (p + half, -d - offset)] {
                    if h > self.tol {
                        return Err(Error::InvalidComplex(format!(
                            "point {q} lies beyond facet {verts:?} by {h:e}"
                        )));
                    }
                    if h.abs() <= self.tol {
                        on_plane += 1;
                    }
                }
            }
            if on_plane > n {
                return Err(Error::PerturbationRequired(format!(
                    "{on_plane} points on the supporting hyperplane of facet {verts:?}"
                )));
            }
            if offset <= 0.0 {
                return Err(Error::InvalidComplex(format!(
                    "origin not strictly inside facet {verts:?}"
                )));
            }

            // Gram determinant of the edge vectors Q_k - Q_1
            let v0 = self.point(verts[0]);
            for (row, &v) in verts[1..].iter().enumerate() {
                for ((x, a), b) in edges[row * n..(row + 1) * n]
                    .iter_mut()
                    .zip(self.point(v))
                    .zip(v0)
                {
                    *x = a - b;
                }
            }
            let k = n - 1;
            for i in 0..k {
                for j in 0..=i {
                    let g = dot(&edges[i * n..(i + 1) * n], &edges[j * n..(j + 1) * n]);
                    gram[i * k + j] = g;
                    gram[j * k + i] = g;
                }
            }
            let det = spd_det_in_place(&mut gram, k).map_err(|_| {
                Error::PerturbationRequired(format!("facet {verts:?} has zero volume"))
            })?;

            out.push(Facet {
                vertex_ids: verts.iter().map(|&v| v as usize).collect(),
                normal: normal.to_vec(),
                dist: offset,
                volume: det.sqrt() / factorial,
            });
        }
        Ok(out)
    }
}

/// Solves `a x = b` in place (row-major `n x n`, `b` becomes `x`) by
/// Gaussian elimination with partial pivoting. Returns false when a pivot
/// falls to `tol` or below.
fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize, tol: f64) -> bool {
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            return false;
        }
        if piv != col {
            for k in col..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        let (top, bottom) = a.split_at_mut((col + 1) * n);
        let pivot_row = &top[col * n + col + 1..col * n + n];
        for (i, row) in bottom.chunks_exact_mut(n).enumerate() {
            let f = row[col] / d;
            if f != 0.0 {
                for (x, p) in row[col + 1..].iter_mut().zip(pivot_row) {
                    *x -= f * p;
                }
                b[col + 1 + i] -= f * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let row = &a[col * n..(col + 1) * n];
        let tail: f64 = row[col + 1..]
            .iter()
            .zip(&b[col + 1..])
            .map(|(x, y)| x * y)
            .sum();
        b[col] = (b[col] - tail) / row[col];
    }
    true
}

/// Removes from `v` its components along the orthonormal rows of `basis`
/// by modified Gram–Schmidt and returns the residual norm. A second pass
/// runs when the first one cancels more than half of the norm.
fn orthogonalize(v: &mut [f64], basis: &[f64], n: usize) -> f64 {
    let mut before = dot(v, v).sqrt();
    for _ in 0..2 {
        for b in basis.chunks_exact(n) {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let after = dot(v, v).sqrt();
        if after >= 0.5 * before {
            return after;
        }
        before = after;
    }
    before
}
