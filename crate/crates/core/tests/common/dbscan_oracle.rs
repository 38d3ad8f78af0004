//! Brute-force O(n^2) density clustering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain haversine, written out independently of the library.
pub fn great_circle_m(a: (f64, f64), b: (f64, f64)) -> f64 {
    let r = 6_371_008.8_f64;
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dp = p2 - p1;
    let dl = (b.1 - a.1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * r * h.sqrt().asin()
}

pub struct Reference {
    pub core: Vec<bool>,
    /// Cluster per point; clusters numbered by their lowest core index.
    pub labels: Vec<Option<usize>>,
    pub n_clusters: usize,
}

/// Cores: at least `min_pts` points within `eps` (self included).
/// Clusters: connected components of cores under the eps relation.
/// Border points take the lowest-numbered adjacent cluster.
pub fn reference(points: &[(f64, f64)], eps: f64, min_pts: usize) -> Reference {
    let n = points.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| great_circle_m(points[i], points[j]) <= eps).collect())
        .collect();
    let core: Vec<bool> = adj.iter().map(|a| a.len() >= min_pts).collect();
    let mut labels = vec![None; n];
    let mut k = 0;
    for s in 0..n {
        if !core[s] || labels[s].is_some() {
            continue;
        }
        let mut stack = vec![s];
        labels[s] = Some(k);
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if core[v] && labels[v].is_none() {
                    labels[v] = Some(k);
                    stack.push(v);
                }
            }
        }
        k += 1;
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = adj[i].iter().filter(|&&j| core[j]).filter_map(|&j| labels[j]).min();
        }
    }
    Reference {
        core,
        labels,
        n_clusters: k,
    }
}

/// Blobs plus background noise around Berlin; returns (points, eps, min_pts).
pub fn random_set(seed: u64) -> (Vec<(f64, f64)>, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_blobs = rng.random_range(1..6);
    let mut pts = Vec::new();
    let m_per_deg = 111_195.0;
    for _ in 0..n_blobs {
        let c = (52.5 + rng.random_range(-0.05..0.05), 13.4 + rng.random_range(-0.08..0.08));
        let spread = rng.random_range(20.0..300.0);
        for _ in 0..rng.random_range(5..60) {
            let dn: f64 = rng.random_range(-spread..spread);
            let de: f64 = rng.random_range(-spread..spread);
            pts.push((c.0 + dn / m_per_deg, c.1 + de / (m_per_deg * c.0.to_radians().cos())));
        }
    }
    for _ in 0..rng.random_range(0..80) {
        pts.push((52.5 + rng.random_range(-0.06..0.06), 13.4 + rng.random_range(-0.1..0.1)));
    }
    (pts, rng.random_range(30.0..400.0), rng.random_range(2..12))
}
