//! Uniform cell grid over a point set for range and radius queries.

/// Cells are stored densely in compressed rows over the bounding box of the
/// indexed points; the cell side grows if the box would need too many cells.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    dim: usize,
    cell: f64,
    lo: Vec<f64>,
    shape: Vec<usize>,
    starts: Vec<u32>,
    items: Vec<u32>,
}

const MAX_CELLS: usize = 1 << 24;

impl SpatialGrid {
    /// Indexes every point of the flat coordinate buffer `coords`.
    pub fn build(dim: usize, coords: &[f64], cell: f64) -> Self {
        let n = coords.len() / dim;
        Self::build_subset(dim, coords, (0..n).map(|i| i as u32), cell)
    }

    /// Indexes only the points `ids` of `coords`.
    pub fn build_subset(dim: usize, coords: &[f64], ids: impl Iterator<Item = u32> + Clone, cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell side must be positive");
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        let mut count = 0usize;
        for id in ids.clone() {
            let p = &coords[id as usize * dim..(id as usize + 1) * dim];
            for i in 0..dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
            count += 1;
        }
        if count == 0 {
            lo.fill(0.0);
            hi.fill(0.0);
        }
        let mut cell = cell;
        let shape = loop {
            let shape: Vec<usize> = (0..dim).map(|i| ((hi[i] - lo[i]) / cell) as usize + 1).collect();
            let total = shape.iter().try_fold(1usize, |a, &m| a.checked_mul(m));
            match total {
                Some(t) if t <= MAX_CELLS.max(4 * count) => break shape,
                _ => cell *= 2.0,
            }
        };
        let total: usize = shape.iter().product();
        let mut grid = Self {
            dim,
            cell,
            lo,
            shape,
            starts: vec![0; total + 1],
            items: vec![0; count],
        };
        let cells: Vec<usize> = ids
            .clone()
            .map(|id| grid.cell_of(&coords[id as usize * dim..(id as usize + 1) * dim]))
            .collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for c in 0..total {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (id, &c) in ids.zip(&cells) {
            grid.items[fill[c] as usize] = id;
            fill[c] += 1;
        }
        grid
    }

    pub fn cell_side(&self) -> f64 {
        self.cell
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn axis_cell(&self, i: usize, x: f64) -> usize {
        let c = ((x - self.lo[i]) / self.cell).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(self.shape[i] - 1)
        }
    }

    fn cell_of(&self, p: &[f64]) -> usize {
        let mut idx = 0;
        for i in (0..self.dim).rev() {
            idx = idx * self.shape[i] + self.axis_cell(i, p[i]);
        }
        idx
    }

    /// Calls `f` with every indexed point whose cell meets the box
    /// `[lo, hi]`. May include points outside the box.
    pub fn for_each_in_box(&self, lo: &[f64], hi: &[f64], mut f: impl FnMut(usize)) {
        if self.items.is_empty() {
            return;
        }
        let mut a = vec![0usize; self.dim];
        let mut b = vec![0usize; self.dim];
        for i in 0..self.dim {
            let top = self.lo[i] + self.shape[i] as f64 * self.cell;
            if hi[i] < self.lo[i] || lo[i] > top {
                return;
            }
            a[i] = self.axis_cell(i, lo[i]);
            b[i] = self.axis_cell(i, hi[i]);
        }
        let mut cur = a.clone();
        loop {
            let mut idx = 0;
            for i in (0..self.dim).rev() {
                idx = idx * self.shape[i] + cur[i];
            }
            for &id in &self.items[self.starts[idx] as usize..self.starts[idx + 1] as usize] {
                f(id as usize);
            }
            let mut i = 0;
            loop {
                if i == self.dim {
                    return;
                }
                if cur[i] < b[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = a[i];
                i += 1;
            }
        }
    }

    /// Calls `f` with every indexed point within distance `r` (closed) of
    /// `center`, in increasing index order within each cell.
    pub fn for_each_within(&self, coords: &[f64], center: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let d = self.dim;
        let lo: Vec<f64> = center.iter().map(|c| c - r).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + r).collect();
        let r2 = r * r;
        self.for_each_in_box(&lo, &hi, |id| {
            if dist2(&coords[id * d..(id + 1) * d], center) <= r2 {
                f(id);
            }
        });
    }

    /// Indices within distance `r` of `center`, sorted.
    pub fn within(&self, coords: &[f64], center: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(coords, center, r, |i| out.push(i));
        out.sort_unstable();
        out
    }
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared distance from `p` to the box `[lo, hi]`.
#[inline]
pub fn box_dist2(p: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        let e = if p[i] < lo[i] {
            lo[i] - p[i]
        } else if p[i] > hi[i] {
            p[i] - hi[i]
        } else {
            0.0
        };
        s += e * e;
    }
    s
}
