//! Cluster-centroid targets: k-means centers lifted to the lowest altitude
//! whose antenna cone covers the cluster, matched one-to-one to MAPs.

use rand::Rng;

use super::kmeans::{kmeans, lloyd, KMeansResult};
use crate::channel::Location3D;

/// Lowest altitude at which a cone of full aperture `aperture_deg` centered
/// on `centroid` covers every member, clamped into `[z_min, z_max]`.
pub fn centroid_altitude(members: &[[f64; 2]], centroid: [f64; 2], aperture_deg: f64, z_min: f64, z_max: f64) -> f64 {
    let r_max = members
        .iter()
        .map(|m| (m[0] - centroid[0]).hypot(m[1] - centroid[1]))
        .fold(0.0, f64::max);
    let half = (aperture_deg / 2.0).to_radians();
    (r_max / half.tan()).clamp(z_min, z_max)
}

/// Optimal one-to-one matching of MAPs to centroids minimizing total
/// Euclidean distance. Returns the centroid index of every MAP.
///
/// Exact dynamic program over subsets of used centroids; among equal-cost
/// matchings the lexicographically smallest (MAP 0 first, lowest centroid
/// index) wins.
pub fn assign_centroids(map_locs: &[Location3D], centroids: &[Location3D]) -> Vec<usize> {
    let m = map_locs.len();
    let c = centroids.len();
    assert!(m <= c, "need at least as many centroids as MAPs");
    assert!(c < 24, "subset matching is exponential in the centroid count");
    let cost: Vec<Vec<f64>> = map_locs
        .iter()
        .map(|a| centroids.iter().map(|b| a.distance(b)).collect())
        .collect();

    // best[mask] = minimal cost of matching MAPs popcount(mask)..m given
    // that the centroids in `mask` are taken.
    let full = 1usize << c;
    let mut best = vec![f64::INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    let mut masks: Vec<usize> = (0..full).filter(|s| (s.count_ones() as usize) <= m).collect();
    masks.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    for mask in masks {
        let i = mask.count_ones() as usize;
        if i == m {
            best[mask] = 0.0;
            continue;
        }
        for j in 0..c {
            if mask & (1 << j) != 0 {
                continue;
            }
            let v = cost[i][j] + best[mask | (1 << j)];
            if v < best[mask] {
                best[mask] = v;
                choice[mask] = j;
            }
        }
    }
    let mut out = Vec::with_capacity(m);
    let mut mask = 0usize;
    for _ in 0..m {
        let j = choice[mask];
        out.push(j);
        mask |= 1 << j;
    }
    out
}

pub fn matching_cost(map_locs: &[Location3D], centroids: &[Location3D], assignment: &[usize]) -> f64 {
    map_locs.iter().zip(assignment).map(|(m, &j)| m.distance(&centroids[j])).sum()
}

/// Centroid targets together with which MAP goes where.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub centroids: Vec<Location3D>,
    /// `map_to_centroid[i]` is the centroid assigned to MAP `i`.
    pub map_to_centroid: Vec<usize>,
    pub degenerate: bool,
}

impl ClusterAssignment {
    pub fn target_of(&self, map: usize) -> Location3D {
        self.centroids[self.map_to_centroid[map]]
    }
}

/// Altitude rule parameters for lifting 2D centers into targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeRule {
    pub aperture_deg: f64,
    pub z_min: f64,
    pub z_max: f64,
}

fn lift(points: &[[f64; 2]], km: &KMeansResult, rule: AltitudeRule) -> Vec<Location3D> {
    km.centroids
        .iter()
        .enumerate()
        .map(|(c, center)| {
            let members: Vec<[f64; 2]> = points
                .iter()
                .zip(&km.memberships)
                .filter(|(_, &m)| m == c)
                .map(|(p, _)| *p)
                .collect();
            let z = centroid_altitude(&members, *center, rule.aperture_deg, rule.z_min, rule.z_max);
            Location3D::new(center[0], center[1], z)
        })
        .collect()
}

/// Keeps k-means state across slots so targets stay stable while UEs barely
/// move: the first call seeds with k-means++, later calls warm-start Lloyd
/// from the previous centers.
#[derive(Debug, Clone)]
pub struct CentroidTracker {
    pub clusters: usize,
    pub rule: AltitudeRule,
    previous: Option<Vec<[f64; 2]>>,
}

impl CentroidTracker {
    pub fn new(clusters: usize, rule: AltitudeRule) -> Self {
        Self { clusters, rule, previous: None }
    }

    /// Fresh clustering from k-means++ seeding.
    pub fn recluster<R: Rng + ?Sized>(&mut self, ue_locs: &[Location3D], map_locs: &[Location3D], rng: &mut R) -> ClusterAssignment {
        self.previous = None;
        self.update(ue_locs, map_locs, rng)
    }

    pub fn update<R: Rng + ?Sized>(&mut self, ue_locs: &[Location3D], map_locs: &[Location3D], rng: &mut R) -> ClusterAssignment {
        let points: Vec<[f64; 2]> = ue_locs.iter().map(|l| [l.x, l.y]).collect();
        let km = match self.previous.take() {
            Some(prev) => lloyd(&points, prev),
            None => kmeans(&points, self.clusters, rng),
        };
        let centroids = lift(&points, &km, self.rule);
        self.previous = Some(km.centroids.clone());
        let map_to_centroid = assign_centroids(map_locs, &centroids);
        ClusterAssignment { centroids, map_to_centroid, degenerate: km.degenerate }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn altitude_examples() {
        let ring = [[25.0, 0.0], [0.0, -10.0]];
        assert!((centroid_altitude(&ring, [0.0, 0.0], 90.0, 0.0, 500.0) - 25.0).abs() < 1e-9);
        assert!((centroid_altitude(&ring, [0.0, 0.0], 60.0, 0.0, 500.0) - 43.30127).abs() < 1e-5);
        assert_eq!(centroid_altitude(&[[5.0, 5.0]], [5.0, 5.0], 90.0, 10.0, 150.0), 10.0);
        assert_eq!(centroid_altitude(&[[500.0, 0.0]], [0.0, 0.0], 90.0, 10.0, 150.0), 150.0);
    }

    #[test]
    fn maps_on_centroids_match_identity() {
        let c = vec![Location3D::new(0.0, 0.0, 20.0), Location3D::new(100.0, 0.0, 20.0), Location3D::new(0.0, 100.0, 20.0)];
        let maps = vec![c[2], c[0], c[1]];
        let a = assign_centroids(&maps, &c);
        assert_eq!(a, vec![2, 0, 1]);
        assert_eq!(matching_cost(&maps, &c, &a), 0.0);
    }

    #[test]
    fn matching_beats_greedy_on_crossed_instance() {
        // Greedy nearest-first gives MAP 0 the centroid at x=1 and leaves
        // MAP 1 with the far one; the optimum swaps them.
        let maps = vec![Location3D::new(0.0, 0.0, 0.0), Location3D::new(2.0, 0.0, 0.0)];
        let c = vec![Location3D::new(1.0, 0.0, 0.0), Location3D::new(-10.0, 0.0, 0.0)];
        let a = assign_centroids(&maps, &c);
        let brute = [vec![0, 1], vec![1, 0]]
            .into_iter()
            .min_by(|x, y| matching_cost(&maps, &c, x).total_cmp(&matching_cost(&maps, &c, y)))
            .unwrap();
        assert_eq!(a, brute);
        assert_eq!(a, vec![1, 0]);
    }

    #[test]
    fn tracker_is_stable_on_static_ues() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ues: Vec<Location3D> = (0..30)
            .map(|i| {
                let base = [[30.0, 30.0], [160.0, 50.0], [80.0, 170.0]][i % 3];
                Location3D::new(base[0] + rng.random::<f64>() * 10.0, base[1] + rng.random::<f64>() * 10.0, 0.0)
            })
            .collect();
        let maps = vec![Location3D::new(100.0, 100.0, 50.0); 3];
        let rule = AltitudeRule { aperture_deg: 90.0, z_min: 10.0, z_max: 150.0 };
        let mut tracker = CentroidTracker::new(3, rule);
        let first = tracker.recluster(&ues, &maps, &mut rng);
        for _ in 0..5 {
            assert_eq!(tracker.update(&ues, &maps, &mut rng), first);
        }
        assert!(first.centroids.iter().all(|c| c.z >= 10.0 && c.z <= 150.0));
    }
}
