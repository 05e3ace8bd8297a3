//! Fixed-radius neighbor search over a uniform grid of cells.
//!
//! Points are binned into cubic cells whose edge length is the query
//! radius, so a radius query only inspects the 3^d block of cells around
//! the query point. Candidate enumeration is deterministic: cells are
//! visited in lexicographic order of their grid index and points within a
//! cell in ascending point index, so repeated runs see identical orders.

use crate::{Error, Result};

/// Hard cap on the total number of grid cells; guards against degenerate
/// cell sizes blowing up memory.
const MAX_CELLS: usize = 1 << 26;

/// Uniform-grid spatial index over a fixed point set.
#[derive(Debug, Clone)]
pub struct CellList {
    dim: usize,
    cell_size: f64,
    origin: Vec<f64>,
    /// Cells per axis.
    shape: Vec<usize>,
    /// CSR offsets into `order`, one slot per cell plus a terminator.
    start: Vec<usize>,
    /// Point indices grouped by cell, ascending within each cell.
    order: Vec<usize>,
    /// Flat copy of the coordinates (stride `dim`).
    coords: Vec<f64>,
}

impl CellList {
    /// Builds the index. `coords` is flat with stride `dim`; `cell_size`
    /// should be the largest radius that will be queried.
    pub fn build(dim: usize, coords: &[f64], cell_size: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cell size must be positive and finite (got {cell_size})"
            )));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(
                "coordinate buffer length is not a multiple of the dimension".into(),
            ));
        }
        let n = coords.len() / dim;

        let mut origin = vec![0.0; dim];
        let mut upper = vec![0.0; dim];
        for a in 0..dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..n {
                let v = coords[i * dim + a];
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "point {i} has non-finite coordinate {v}"
                    )));
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if n == 0 {
                lo = 0.0;
                hi = 0.0;
            }
            origin[a] = lo;
            upper[a] = hi;
        }

        let mut shape = vec![1usize; dim];
        let mut total = 1usize;
        for a in 0..dim {
            let extent = upper[a] - origin[a];
            let cells = (extent / cell_size).floor() as usize + 1;
            shape[a] = cells.max(1);
            total = total.saturating_mul(shape[a]);
            if total > MAX_CELLS {
                return Err(Error::Resolution(format!(
                    "cell grid would need more than {MAX_CELLS} cells; \
                     cell size {cell_size} is too small for the point spread"
                )));
            }
        }

        // Counting sort into CSR; stable, so per-cell order is ascending.
        let mut counts = vec![0usize; total];
        let mut cell_of = vec![0usize; n];
        for i in 0..n {
            let c = Self::cell_index_of(&origin, &shape, cell_size, &coords[i * dim..(i + 1) * dim]);
            cell_of[i] = c;
            counts[c] += 1;
        }
        let mut start = vec![0usize; total + 1];
        for c in 0..total {
            start[c + 1] = start[c] + counts[c];
        }
        let mut cursor = start.clone();
        let mut order = vec![0usize; n];
        for (i, &c) in cell_of.iter().enumerate() {
            order[cursor[c]] = i;
            cursor[c] += 1;
        }

        Ok(CellList {
            dim,
            cell_size,
            origin,
            shape,
            start,
            order,
            coords: coords.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn cell_index_of(origin: &[f64], shape: &[usize], cell_size: f64, p: &[f64]) -> usize {
        let mut idx = 0usize;
        for a in 0..p.len() {
            let raw = ((p[a] - origin[a]) / cell_size).floor();
            let k = if raw < 0.0 {
                0
            } else {
                (raw as usize).min(shape[a] - 1)
            };
            idx = idx * shape[a] + k;
        }
        idx
    }

    /// Grid coordinate of the cell containing `p`. Not clamped: queries
    /// outside the bounding box keep their true offset so ring distance
    /// bounds stay valid.
    fn grid_coord(&self, p: &[f64], out: &mut [i64]) {
        for a in 0..self.dim {
            out[a] = ((p[a] - self.origin[a]) / self.cell_size).floor() as i64;
        }
    }

    /// Calls `f(index, distance)` for every stored point within `radius`
    /// of `q` (inclusive), in deterministic order. `radius` must not
    /// exceed the cell size.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, q: &[f64], radius: f64, mut f: F) {
        debug_assert_eq!(q.len(), self.dim);
        debug_assert!(
            radius <= self.cell_size * (1.0 + 1e-12),
            "query radius {radius} exceeds cell size {}",
            self.cell_size
        );
        if self.is_empty() {
            return;
        }
        let mut base = vec![0i64; self.dim];
        self.grid_coord(q, &mut base);
        let r2 = radius * radius;
        self.visit_block(&base, 1, |this, cell| {
            let lo = this.start[cell];
            let hi = this.start[cell + 1];
            for &i in &this.order[lo..hi] {
                let d2 = dist_sq(this.point(i), q);
                if d2 <= r2 {
                    f(i, d2.sqrt());
                }
            }
        });
    }

    /// Indices (with distances) of all stored points within `radius` of `q`.
    pub fn within(&self, q: &[f64], radius: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_within(q, radius, |i, d| out.push((i, d)));
        out
    }

    /// Nearest stored point to `q` and its distance; `None` when empty.
    /// Ties break toward the smaller point index.
    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        let mut base = vec![0i64; self.dim];
        self.grid_coord(q, &mut base);
        // Expanding rings always reach every cell by this many steps, even
        // for queries far outside the bounding box.
        let max_ring = (0..self.dim)
            .map(|a| {
                let lo = base[a].unsigned_abs() as usize;
                let hi = (self.shape[a] as i64 - 1 - base[a]).unsigned_abs() as usize;
                lo.max(hi)
            })
            .max()
            .unwrap_or(0) as i64;
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=max_ring {
            // Any cell at Chebyshev ring distance k is at least (k-1) cell
            // widths away from q, so once that bound beats the incumbent we
            // can stop.
            if let Some((_, d)) = best {
                if (ring - 1) as f64 * self.cell_size > d {
                    break;
                }
            }
            self.visit_ring(&base, ring, |this, cell| {
                let lo = this.start[cell];
                let hi = this.start[cell + 1];
                for &i in &this.order[lo..hi] {
                    let d = dist_sq(this.point(i), q).sqrt();
                    let better = match best {
                        None => true,
                        Some((bi, bd)) => d < bd || (d == bd && i < bi),
                    };
                    if better {
                        best = Some((i, d));
                    }
                }
            });
        }
        best
    }

    /// Visits every in-grid cell whose coordinate differs from `base` by at
    /// most `halo` on every axis, in lexicographic order.
    fn visit_block<F: FnMut(&Self, usize)>(&self, base: &[i64], halo: i64, mut f: F) {
        let mut lo = vec![0usize; self.dim];
        let mut hi = vec![0usize; self.dim];
        for a in 0..self.dim {
            let l = (base[a] - halo).max(0);
            let h = (base[a] + halo).min(self.shape[a] as i64 - 1);
            if h < l {
                return;
            }
            lo[a] = l as usize;
            hi[a] = h as usize;
        }
        let mut idx = lo.clone();
        loop {
            let cell = self
                .shape
                .iter()
                .zip(&idx)
                .fold(0usize, |acc, (&s, &i)| acc * s + i);
            f(self, cell);
            // Advance the odometer.
            let mut a = self.dim;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                if idx[a] < hi[a] {
                    idx[a] += 1;
                    idx[a + 1..].copy_from_slice(&lo[a + 1..]);
                    break;
                }
                if a == 0 {
                    return;
                }
            }
        }
    }

    /// Visits in-grid cells at exactly Chebyshev distance `ring` from
    /// `base`, in lexicographic order.
    fn visit_ring<F: FnMut(&Self, usize)>(&self, base: &[i64], ring: i64, mut f: F) {
        let mut lo = vec![0usize; self.dim];
        let mut hi = vec![0usize; self.dim];
        for a in 0..self.dim {
            let l = (base[a] - ring).max(0);
            let h = (base[a] + ring).min(self.shape[a] as i64 - 1);
            if h < l {
                return;
            }
            lo[a] = l as usize;
            hi[a] = h as usize;
        }
        let mut idx = lo.clone();
        loop {
            let on_ring = (0..self.dim)
                .any(|a| (idx[a] as i64 - base[a]).abs() == ring)
                || ring == 0;
            if on_ring {
                let cell = self
                    .shape
                    .iter()
                    .zip(&idx)
                    .fold(0usize, |acc, (&s, &i)| acc * s + i);
                f(self, cell);
            }
            let mut a = self.dim;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                if idx[a] < hi[a] {
                    idx[a] += 1;
                    idx[a + 1..].copy_from_slice(&lo[a + 1..]);
                    break;
                }
                if a == 0 {
                    return;
                }
            }
        }
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::quad::shard_rng;

    fn random_cloud(n: usize, dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = shard_rng(seed, 7);
        (0..n * dim).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    fn brute_within(coords: &[f64], dim: usize, q: &[f64], radius: f64) -> Vec<usize> {
        let n = coords.len() / dim;
        (0..n)
            .filter(|&i| dist_sq(&coords[i * dim..(i + 1) * dim], q) <= radius * radius)
            .collect()
    }

    #[test]
    fn within_matches_brute_force() {
        for dim in [1usize, 2, 3] {
            let coords = random_cloud(400, dim, 11);
            let radius = 0.13;
            let cl = CellList::build(dim, &coords, radius).unwrap();
            let mut rng = shard_rng(99, dim as u64);
            for _ in 0..50 {
                let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.1..1.1)).collect();
                let got: Vec<usize> = cl.within(&q, radius).into_iter().map(|(i, _)| i).collect();
                let want = brute_within(&coords, dim, &q, radius);
                let mut sorted = got.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, want, "dim={dim} q={q:?}");
            }
        }
    }

    #[test]
    fn enumeration_order_is_deterministic() {
        let coords = random_cloud(300, 2, 5);
        let cl1 = CellList::build(2, &coords, 0.2).unwrap();
        let cl2 = CellList::build(2, &coords, 0.2).unwrap();
        let q = [0.41, 0.63];
        assert_eq!(cl1.within(&q, 0.2), cl2.within(&q, 0.2));
    }

    #[test]
    fn nearest_matches_brute_force() {
        for dim in [1usize, 2, 3] {
            let coords = random_cloud(250, dim, 23);
            let cl = CellList::build(dim, &coords, 0.1).unwrap();
            let n = coords.len() / dim;
            let mut rng = shard_rng(77, dim as u64);
            for _ in 0..50 {
                let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.2..1.2)).collect();
                let (gi, gd) = cl.nearest(&q).unwrap();
                let (bi, bd) = (0..n)
                    .map(|i| (i, dist_sq(&coords[i * dim..(i + 1) * dim], &q).sqrt()))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
                    .unwrap();
                assert_eq!(gi, bi, "dim={dim} q={q:?}");
                assert!((gd - bd).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_set_behaves() {
        let cl = CellList::build(2, &[], 0.5).unwrap();
        assert!(cl.nearest(&[0.0, 0.0]).is_none());
        assert!(cl.within(&[0.0, 0.0], 0.5).is_empty());
    }

    #[test]
    fn rejects_bad_cell_size() {
        assert!(CellList::build(2, &[0.0, 0.0], 0.0).is_err());
        assert!(CellList::build(2, &[0.0, 0.0], f64::NAN).is_err());
    }

    #[test]
    fn coincident_points_are_all_reported() {
        let coords = vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
        let cl = CellList::build(2, &coords, 0.1).unwrap();
        let hits = cl.within(&[0.5, 0.5], 0.1);
        assert_eq!(hits.len(), 3);
        assert!(hits.iter().all(|&(_, d)| d == 0.0));
    }
}
