//! Boolean (Gilbert) model: points joined when within distance `r_c`.

use rayon::prelude::*;

use crate::geometry::{dist2, SpatialGrid};
use crate::rng::{Purpose, RngStreamKey, StreamFactory};
use crate::sampling::{sample_poisson_cloud, PointCloud};
use crate::stats::{proportion, Estimate};

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
        true
    }
}

/// Points with adjacency `|X_i - X_j| <= r_c` and its connected components.
#[derive(Debug, Clone)]
pub struct DiskGraph {
    pub points: PointCloud,
    pub radius: f64,
    components: UnionFind,
}

impl DiskGraph {
    pub fn new(points: PointCloud, radius: f64) -> Self {
        let n = points.len();
        let mut uf = UnionFind::new(n);
        if n > 0 {
            let d = points.dim();
            let coords = points.coords();
            let grid = SpatialGrid::build(d, coords, radius.max(1e-12));
            for i in 0..n {
                grid.for_each_within(coords, points.point(i), radius, |j| {
                    if j > i {
                        uf.union(i, j);
                    }
                });
            }
        }
        Self {
            points,
            radius,
            components: uf,
        }
    }

    pub fn connected(&mut self, i: usize, j: usize) -> bool {
        self.components.find(i) == self.components.find(j)
    }

    /// Members of the component of `i`, sorted.
    pub fn component_of(&mut self, i: usize) -> Vec<usize> {
        let root = self.components.find(i);
        (0..self.points.len()).filter(|&j| self.components.find(j) == root).collect()
    }
}

/// The component of index 0 in the disk graph of `points`.
pub fn origin_cluster(points: &PointCloud, r_c: f64) -> Vec<usize> {
    let sus: Vec<usize> = (1..points.len()).collect();
    let mut c = instant_closure(points, 0, &sus, r_c);
    c.insert(0, 0);
    c
}

/// Susceptibles reached from `source` through chains of points each within
/// `r_c` of the previous one, moving only through susceptibles. The source
/// itself is not included. Sorted.
pub fn instant_closure(points: &PointCloud, source: usize, susceptible: &[usize], r_c: f64) -> Vec<usize> {
    let d = points.dim();
    let coords = points.coords();
    let grid = SpatialGrid::build_subset(d, coords, susceptible.iter().map(|&i| i as u32), r_c.max(1e-12));
    let mut seen = vec![false; points.len()];
    seen[source] = true;
    let mut queue = vec![source];
    let mut out = Vec::new();
    while let Some(i) = queue.pop() {
        grid.for_each_within(coords, points.point(i), r_c, |j| {
            if !seen[j] {
                seen[j] = true;
                out.push(j);
                queue.push(j);
            }
        });
    }
    out.sort_unstable();
    out
}

/// Whether the origin's cluster comes within `r_c` of the boundary of
/// `[-L, L]^d`.
pub fn origin_cluster_touches_boundary(points: &PointCloud, r_c: f64, half_width: f64) -> bool {
    origin_cluster(points, r_c)
        .iter()
        .any(|&i| points.point(i).iter().any(|x| x.abs() >= half_width - r_c))
}

/// Monte Carlo frequency with which the origin's cluster reaches the
/// boundary band of `[-L, L]^d`. Replicate `k` uses the cloud stream
/// `(k, 0, PointProcess)`, so estimates at different `lambda` are coupled
/// through nested clouds.
pub fn crossing_probability(lambda: f64, d: usize, half_width: f64, r_c: f64, replicates: usize, seed: u64) -> Estimate {
    let f = StreamFactory::new(seed);
    let hits = (0..replicates as u64)
        .into_par_iter()
        .filter(|&rep| {
            let mut s = f.stream(RngStreamKey::new(rep, 0, Purpose::PointProcess));
            let cloud = sample_poisson_cloud(lambda, half_width, d, &mut s);
            origin_cluster_touches_boundary(&cloud, r_c, half_width)
        })
        .count();
    proportion(hits, replicates)
}

/// Bisection for the intensity at which the crossing probability equals
/// `target`. A finite-size reference value, not an estimate of the
/// critical intensity of the infinite model.
#[derive(Debug, Clone)]
pub struct CrossingBisection {
    pub dim: usize,
    pub half_width: f64,
    pub radius: f64,
    pub replicates: usize,
    pub seed: u64,
    pub target: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

impl CrossingBisection {
    pub fn new(dim: usize, half_width: f64) -> Self {
        Self {
            dim,
            half_width,
            radius: 1.0,
            replicates: 400,
            seed: 0,
            target: 0.5,
            bracket: (0.1, 6.0),
            iterations: 12,
        }
    }

    pub fn run(&self) -> f64 {
        let (mut lo, mut hi) = self.bracket;
        for _ in 0..self.iterations {
            let mid = 0.5 * (lo + hi);
            let p = crossing_probability(mid, self.dim, self.half_width, self.radius, self.replicates, self.seed);
            if p.mean < self.target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Component labels by breadth-first search over all pairs; test oracle.
pub fn brute_force_components(points: &PointCloud, r_c: f64) -> Vec<usize> {
    let n = points.len();
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for (j, l) in label.iter_mut().enumerate() {
                if *l == usize::MAX && dist2(points.point(i), points.point(j)) <= r_c * r_c {
                    *l = s;
                    stack.push(j);
                }
            }
        }
    }
    label
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud(pts: &[[f64; 2]]) -> PointCloud {
        PointCloud::from_points(2, pts)
    }

    #[test]
    fn isolated_origin() {
        let c = cloud(&[[0.0, 0.0], [1.5, 0.0], [0.0, -2.0]]);
        assert_eq!(origin_cluster(&c, 1.0), vec![0]);
    }

    #[test]
    fn chain_at_spacing_point_nine() {
        let c = cloud(&[[0.0, 0.0], [0.9, 0.0], [1.8, 0.0], [5.0, 5.0]]);
        assert_eq!(origin_cluster(&c, 1.0), vec![0, 1, 2]);
    }

    #[test]
    fn closed_connection_radius() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(origin_cluster(&c, 1.0), vec![0, 1]);
    }

    #[test]
    fn closure_moves_only_through_susceptibles() {
        let c = cloud(&[[0.0, 0.0], [0.9, 0.0], [1.8, 0.0], [-0.9, 0.0]]);
        assert_eq!(instant_closure(&c, 0, &[2, 3], 1.0), vec![3]);
        assert_eq!(instant_closure(&c, 0, &[1, 2, 3], 1.0), vec![1, 2, 3]);
        assert!(instant_closure(&c, 0, &[], 1.0).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn union_find_matches_brute_force(seed in 0u64..10_000, lambda in 0.2f64..3.0) {
            let f = StreamFactory::new(seed);
            let c = sample_poisson_cloud(lambda, 6.0, 2, &mut f.stream(RngStreamKey::new(0, 0, Purpose::PointProcess)));
            prop_assume!(c.len() <= 1000);
            let labels = brute_force_components(&c, 1.0);
            let mut g = DiskGraph::new(c.clone(), 1.0);
            for i in 0..c.len() {
                for j in (i + 1)..c.len().min(i + 40) {
                    prop_assert_eq!(g.connected(i, j), labels[i] == labels[j]);
                }
            }
            let want: Vec<usize> = (0..c.len()).filter(|&j| labels[j] == labels[0]).collect();
            prop_assert_eq!(origin_cluster(&c, 1.0), want);
        }

        #[test]
        fn closure_matches_restricted_origin_cluster(seed in 0u64..10_000, keep in 0.0f64..1.0) {
            let f = StreamFactory::new(seed);
            let c = sample_poisson_cloud(1.5, 5.0, 2, &mut f.stream(RngStreamKey::new(0, 0, Purpose::PointProcess)));
            let sus: Vec<usize> = (1..c.len()).filter(|&i| ((i as f64 * 0.618_034).fract()) < keep).collect();
            let mut sub = PointCloud::new(2);
            sub.push(c.point(0));
            sus.iter().for_each(|&i| sub.push(c.point(i)));
            let want: Vec<usize> = origin_cluster(&sub, 1.0).into_iter().skip(1).map(|k| sus[k - 1]).collect();
            prop_assert_eq!(instant_closure(&c, 0, &sus, 1.0), want);
        }
    }

    #[test]
    fn crossing_extremes_and_monotonicity() {
        assert_eq!(crossing_probability(1e-6, 2, 10.0, 1.0, 200, 1).mean, 0.0);
        assert!(crossing_probability(6.0, 2, 10.0, 1.0, 100, 1).mean > 0.97);
        // Nested clouds: every replicate that crosses at lambda crosses above it.
        let f = StreamFactory::new(9);
        for rep in 0..200 {
            let key = RngStreamKey::new(rep, 0, Purpose::PointProcess);
            let a = origin_cluster_touches_boundary(&sample_poisson_cloud(1.2, 8.0, 2, &mut f.stream(key)), 1.0, 8.0);
            let b = origin_cluster_touches_boundary(&sample_poisson_cloud(1.6, 8.0, 2, &mut f.stream(key)), 1.0, 8.0);
            assert!(!a || b);
        }
    }

    #[test]
    fn supercritical_cluster_reaches_the_boundary() {
        assert!(crossing_probability(2.0, 2, 30.0, 1.0, 100, 3).mean > 0.5);
    }
}
