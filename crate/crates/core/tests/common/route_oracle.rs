//! Random small networks and exhaustive path enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ridehail::geo::LatLon;
use ridehail::graph::{EdgeRecord, NetworkFile, NodeRecord, TurnPenaltyRecord};
use std::collections::HashMap;

/// Random directed network with integer traversal times and integer turn
/// penalties, so every path cost is an exact float.
pub fn random_network(seed: u64, max_nodes: usize) -> NetworkFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=max_nodes);
    let base = LatLon::new(52.5, 13.4);
    let nodes: Vec<NodeRecord> = (0..n)
        .map(|i| {
            let p = base.offset_m(rng.random_range(-2000.0..2000.0), rng.random_range(-2000.0..2000.0));
            NodeRecord { id: i as u64 * 3 + 1, lat: p.lat, lon: p.lon }
        })
        .collect();
    let target_edges = rng.random_range(n..=2 * n);
    let mut pairs = Vec::new();
    let mut tries = 0;
    while pairs.len() < target_edges && tries < 10_000 {
        tries += 1;
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }
    let speeds = [5.0, 8.0, 10.0, 16.0, 20.0];
    let edges: Vec<EdgeRecord> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let speed = speeds[rng.random_range(0..speeds.len())];
            let secs: u32 = rng.random_range(1..=60);
            EdgeRecord {
                id: 100 + i as u64,
                from: nodes[a].id,
                to: nodes[b].id,
                length_m: speed * f64::from(secs),
                speed_mps: speed,
            }
        })
        .collect();
    let mut turn_penalties = Vec::new();
    for a in &edges {
        for b in &edges {
            if a.to == b.from && rng.random_bool(0.7) {
                turn_penalties.push(TurnPenaltyRecord {
                    from_edge: a.id,
                    to_edge: b.id,
                    seconds: f64::from(rng.random_range(0u32..=30)),
                });
            }
        }
    }
    NetworkFile { nodes, edges, turn_penalties }
}

pub struct Enumerated {
    /// Cheapest walk that never repeats an edge (simple in the edge-expanded graph).
    pub best_trail: Option<f64>,
    /// Cheapest walk that never repeats a node.
    pub best_node_simple: Option<f64>,
    pub trails_seen: usize,
}

/// Exhaustive enumeration straight from the file records. Costs accumulate
/// as `cost + penalty + edge_time`, left to right.
pub fn enumerate_paths(file: &NetworkFile, origin_id: u64, dest_id: u64) -> Enumerated {
    let penalties: HashMap<(u64, u64), f64> =
        file.turn_penalties.iter().map(|t| ((t.from_edge, t.to_edge), t.seconds)).collect();
    let time = |e: &EdgeRecord| e.length_m / e.speed_mps;
    let mut out = Enumerated { best_trail: None, best_node_simple: None, trails_seen: 0 };
    if origin_id == dest_id {
        out.best_trail = Some(0.0);
        out.best_node_simple = Some(0.0);
        return out;
    }

    fn go(
        file: &NetworkFile,
        penalties: &HashMap<(u64, u64), f64>,
        time: &dyn Fn(&EdgeRecord) -> f64,
        path: &mut Vec<usize>,
        cost: f64,
        dest: u64,
        origin: u64,
        out: &mut Enumerated,
    ) {
        let last = &file.edges[*path.last().unwrap()];
        if last.to == dest {
            out.trails_seen += 1;
            out.best_trail = Some(out.best_trail.map_or(cost, |b: f64| b.min(cost)));
            let mut visited = vec![origin];
            visited.extend(path.iter().map(|&i| file.edges[i].to));
            let mut sorted = visited.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() == visited.len() {
                out.best_node_simple = Some(out.best_node_simple.map_or(cost, |b: f64| b.min(cost)));
            }
            return;
        }
        for (j, next) in file.edges.iter().enumerate() {
            if next.from != last.to || path.contains(&j) {
                continue;
            }
            let pen = penalties.get(&(last.id, next.id)).copied().unwrap_or(0.0);
            path.push(j);
            go(file, penalties, time, path, cost + pen + time(next), dest, origin, out);
            path.pop();
        }
    }

    for (i, e) in file.edges.iter().enumerate() {
        if e.from == origin_id {
            let mut path = vec![i];
            go(file, &penalties, &time, &mut path, time(e), dest_id, origin_id, &mut out);
        }
    }
    out
}
