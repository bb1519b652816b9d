//! Lloyd's k-means on horizontal UE positions with k-means++ seeding.

use rand::Rng;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<[f64; 2]>,
    /// Cluster index of every input point.
    pub memberships: Vec<usize>,
    pub iterations: usize,
    /// Within-cluster sum of squares after each assignment step.
    pub objective_history: Vec<f64>,
    /// Set when there were fewer distinct inputs than clusters, so some
    /// centroids are duplicates.
    pub degenerate: bool,
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(p: &[f64; 2], centroids: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Within-cluster sum of squares.
pub fn wcss(points: &[[f64; 2]], centroids: &[[f64; 2]], memberships: &[usize]) -> f64 {
    points.iter().zip(memberships).map(|(p, &c)| sq_dist(p, &centroids[c])).sum()
}

/// k-means++ seeding: first center uniform over the points, then each next
/// center with probability proportional to squared distance to the closest
/// chosen one.
pub fn kmeans_plus_plus<R: Rng + ?Sized>(points: &[[f64; 2]], k: usize, rng: &mut R) -> Vec<[f64; 2]> {
    if points.is_empty() {
        return vec![[0.0, 0.0]; k];
    }
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            idx
        } else {
            // Every point coincides with a chosen center.
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Seeds with k-means++ and runs Lloyd iterations.
pub fn kmeans<R: Rng + ?Sized>(points: &[[f64; 2]], k: usize, rng: &mut R) -> KMeansResult {
    let init = kmeans_plus_plus(points, k, rng);
    lloyd(points, init)
}

/// Lloyd iterations from the given centroids until the assignment stops
/// changing or [`MAX_ITERATIONS`] is reached. An empty cluster is moved to
/// the point farthest from its current centroid.
pub fn lloyd(points: &[[f64; 2]], mut centroids: Vec<[f64; 2]>) -> KMeansResult {
    let k = centroids.len();
    let mut distinct: Vec<[f64; 2]> = points.to_vec();
    distinct.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    distinct.dedup();
    let degenerate = distinct.len() < k;

    let mut memberships: Vec<usize> = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    if points.is_empty() {
        return KMeansResult { centroids, memberships: vec![], iterations, objective_history: history, degenerate };
    }
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        let changed = next != memberships;
        memberships = next;
        history.push(wcss(points, &centroids, &memberships));
        if !changed {
            break;
        }

        let mut sums = vec![[0.0, 0.0]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&memberships) {
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        let mut taken = vec![false; points.len()];
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            } else if !degenerate {
                // Farthest point from its own centroid, not already reused.
                let far = points
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !taken[*i])
                    .max_by(|(i, p), (j, q)| {
                        let di = sq_dist(p, &centroids[memberships[*i]]);
                        let dj = sq_dist(q, &centroids[memberships[*j]]);
                        di.total_cmp(&dj).then(j.cmp(i))
                    })
                    .map(|(i, _)| i);
                if let Some(i) = far {
                    taken[i] = true;
                    centroids[c] = points[i];
                }
            }
        }
    }
    KMeansResult { centroids, memberships, iterations, objective_history: history, degenerate }
}
