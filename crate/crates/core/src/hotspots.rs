//! Density-based hotspot detection on pick-up locations.

use crate::geo::{LatLon, EARTH_RADIUS_M};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const DEFAULT_TARGET_CLUSTERS: usize = 60;
pub const DEFAULT_MIN_PTS: usize = 10;
pub const EPS_RANGE_M: (f64, f64) = (50.0, 5000.0);

/// Cluster label per input point (`None` = noise) plus core flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<Option<usize>>,
    pub core: Vec<bool>,
    pub n_clusters: usize,
}

/// Unit vectors make the haversine test a dot product: two points are
/// within `eps` metres iff their chord is at most `2 sin(eps / 2R)`.
/// Points are stored grouped by grid cell so neighbour scans stream memory.
struct Index {
    /// Unit vectors and original indices, sorted by cell.
    xyz: Vec<[f64; 3]>,
    ids: Vec<usize>,
    /// Cell key -> range into `xyz`/`ids`.
    cells: HashMap<(i64, i64), (usize, usize)>,
    cell_of: Vec<(i64, i64)>,
    unit: Vec<[f64; 3]>,
    min_dot: f64,
}

impl Index {
    fn new(points: &[LatLon], eps_m: f64) -> Self {
        let unit: Vec<[f64; 3]> = points
            .iter()
            .map(|p| {
                let (la, lo) = (p.lat.to_radians(), p.lon.to_radians());
                [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
            })
            .collect();
        // Equirectangular cells using the smallest cos(lat) in the set, which
        // never stretches east-west separations, with slack for curvature.
        let max_abs_lat = points.iter().map(|p| p.lat.abs()).fold(0.0, f64::max).min(89.0);
        let kx = max_abs_lat.to_radians().cos() * EARTH_RADIUS_M.to_radians();
        let ky = EARTH_RADIUS_M.to_radians();
        let cell = eps_m * 1.01;
        let cell_of: Vec<(i64, i64)> = points
            .iter()
            .map(|p| ((p.lon * kx / cell).floor() as i64, (p.lat * ky / cell).floor() as i64))
            .collect();
        let mut ids: Vec<usize> = (0..points.len()).collect();
        ids.sort_by_key(|&i| (cell_of[i], i));
        let xyz = ids.iter().map(|&i| unit[i]).collect();
        let mut cells = HashMap::new();
        let mut a = 0;
        while a < ids.len() {
            let key = cell_of[ids[a]];
            let mut b = a;
            while b < ids.len() && cell_of[ids[b]] == key {
                b += 1;
            }
            cells.insert(key, (a, b));
            a = b;
        }
        let half = eps_m / (2.0 * EARTH_RADIUS_M);
        let chord = 2.0 * half.sin();
        Self {
            xyz,
            ids,
            cells,
            cell_of,
            unit,
            min_dot: 1.0 - chord * chord / 2.0,
        }
    }

    /// Indices within eps of point `i`, itself included.
    fn neighbours(&self, i: usize, out: &mut Vec<usize>) {
        out.clear();
        let (cx, cy) = self.cell_of[i];
        let a = self.unit[i];
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(&(lo, hi)) = self.cells.get(&(cx + dx, cy + dy)) {
                    for (b, &j) in self.xyz[lo..hi].iter().zip(&self.ids[lo..hi]) {
                        if a[0] * b[0] + a[1] * b[1] + a[2] * b[2] >= self.min_dot {
                            out.push(j);
                        }
                    }
                }
            }
        }
    }
}

/// DBSCAN with the great-circle metric. A point is core when at least
/// `min_pts` points (itself included) lie within `eps_m`. Clusters are
/// numbered in the scan order of their first core point; a border point
/// joins the first cluster that reaches it.
pub fn dbscan(points: &[LatLon], eps_m: f64, min_pts: usize) -> Clustering {
    let n = points.len();
    let index = Index::new(points, eps_m);
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut queued = vec![false; n];
    let mut core = vec![false; n];
    let mut n_clusters = 0;
    let mut nb = Vec::new();
    let mut queue = Vec::new();
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        index.neighbours(i, &mut nb);
        if nb.len() < min_pts {
            continue;
        }
        let c = n_clusters;
        n_clusters += 1;
        core[i] = true;
        labels[i] = Some(c);
        queue.clear();
        for &j in &nb {
            if !queued[j] {
                queued[j] = true;
                queue.push(j);
            }
        }
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            if labels[q].is_none() {
                labels[q] = Some(c);
            }
            if visited[q] {
                continue;
            }
            visited[q] = true;
            index.neighbours(q, &mut nb);
            if nb.len() >= min_pts {
                core[q] = true;
                for &j in &nb {
                    if !queued[j] {
                        queued[j] = true;
                        queue.push(j);
                    }
                }
            }
        }
    }
    Clustering {
        labels,
        core,
        n_clusters,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub id: usize,
    pub location: LatLon,
    pub member_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HotspotSet {
    pub hotspots: Vec<Hotspot>,
    pub eps_m: f64,
    pub min_pts: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum HotspotError {
    #[error("no points to cluster")]
    NoPoints,
    #[error("min_pts must be positive")]
    BadMinPts,
    #[error("no clusters found for any eps in [{lo}, {hi}] m")]
    NoClusters { lo: f64, hi: f64 },
    #[error("hotspot file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("hotspot CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("hotspot metadata: {0}")]
    Meta(#[from] serde_json::Error),
}

/// Centroids (plain coordinate means) of each cluster, ordered by cluster id.
pub fn centroids(points: &[LatLon], clustering: &Clustering) -> Vec<Hotspot> {
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); clustering.n_clusters];
    for (p, l) in points.iter().zip(&clustering.labels) {
        if let Some(c) = *l {
            sums[c].0 += p.lat;
            sums[c].1 += p.lon;
            sums[c].2 += 1;
        }
    }
    sums.into_iter()
        .enumerate()
        .map(|(id, (la, lo, k))| Hotspot {
            id,
            location: LatLon::new(la / k as f64, lo / k as f64),
            member_count: k,
        })
        .collect()
}

/// Searches eps in [50 m, 5 km] for the clustering whose cluster count is
/// closest to `target` (smaller eps on ties). Cluster counts mostly fall as
/// eps grows, so the search bisects (on a log scale) towards the target.
pub fn derive_hotspots(points: &[LatLon], target: usize, min_pts: usize) -> Result<HotspotSet, HotspotError> {
    if points.is_empty() {
        return Err(HotspotError::NoPoints);
    }
    if min_pts == 0 {
        return Err(HotspotError::BadMinPts);
    }
    let (mut lo, mut hi) = EPS_RANGE_M;
    let mut best: Option<(usize, f64, Clustering)> = None;
    let consider = |eps: f64, best: &mut Option<(usize, f64, Clustering)>| {
        let c = dbscan(points, eps, min_pts);
        let n = c.n_clusters;
        let diff = n.abs_diff(target);
        let better = match best {
            None => true,
            Some((bd, be, _)) => diff < *bd || (diff == *bd && eps < *be),
        };
        if better {
            *best = Some((diff, eps, c));
        }
        n
    };
    consider(lo, &mut best);
    for _ in 0..24 {
        let mid = (lo * hi).sqrt();
        let n = consider(mid, &mut best);
        if n > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0005 {
            break;
        }
    }
    let (_, eps, clustering) = best.expect("at least one probe");
    if clustering.n_clusters == 0 {
        return Err(HotspotError::NoClusters {
            lo: EPS_RANGE_M.0,
            hi: EPS_RANGE_M.1,
        });
    }
    Ok(HotspotSet {
        hotspots: centroids(points, &clustering),
        eps_m: eps,
        min_pts,
    })
}

#[derive(Serialize, Deserialize)]
struct Meta {
    eps_m: f64,
    min_pts: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct Row {
    id: usize,
    lat: f64,
    lon: f64,
    member_count: usize,
}

impl HotspotSet {
    /// Hotspot nearest to `p` by great-circle distance, lowest id on ties.
    pub fn nearest(&self, p: LatLon) -> Option<&Hotspot> {
        self.hotspots.iter().min_by(|a, b| {
            a.location
                .distance_m(&p)
                .total_cmp(&b.location.distance_m(&p))
                .then(a.id.cmp(&b.id))
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HotspotError> {
        let mut w = csv::Writer::from_writer(w);
        for h in &self.hotspots {
            w.serialize(Row {
                id: h.id,
                lat: h.location.lat,
                lon: h.location.lon,
                member_count: h.member_count,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, eps_m: f64, min_pts: usize) -> Result<Self, HotspotError> {
        let mut hotspots = Vec::new();
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: Row = row?;
            hotspots.push(Hotspot {
                id: row.id,
                location: LatLon::new(row.lat, row.lon),
                member_count: row.member_count,
            });
        }
        Ok(Self { hotspots, eps_m, min_pts })
    }

    /// `hotspots.csv` → `hotspots.meta.json`
    pub fn meta_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("meta.json")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HotspotError> {
        let path = path.as_ref();
        self.write_csv(std::fs::File::create(path)?)?;
        let meta = Meta {
            eps_m: self.eps_m,
            min_pts: self.min_pts,
            count: self.hotspots.len(),
        };
        std::fs::write(Self::meta_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(())
    }

    /// Parses a CSV and its metadata sidecar from memory.
    pub fn from_strs(csv: &str, meta_json: &str) -> Result<Self, HotspotError> {
        let m: Meta = serde_json::from_str(meta_json)?;
        Self::read_csv(csv.as_bytes(), m.eps_m, m.min_pts)
    }

    /// Loads the CSV and, when present, its metadata sidecar.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HotspotError> {
        let path = path.as_ref();
        let (eps_m, min_pts) = match std::fs::read_to_string(Self::meta_path(path)) {
            Ok(s) => {
                let m: Meta = serde_json::from_str(&s)?;
                (m.eps_m, m.min_pts)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (f64::NAN, 0),
            Err(e) => return Err(e.into()),
        };
        Self::read_csv(std::fs::File::open(path)?, eps_m, min_pts)
    }
}
