//! Synthetic grid networks, including the bundled "mini-berlin" fixture.

use super::{EdgeRecord, NetworkFile, NodeRecord};
use crate::geo::LatLon;

/// Potsdamer Platz; the grid is centred here.
pub const MINI_BERLIN_CENTER: LatLon = LatLon::new(52.5096, 13.3761);

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub center: LatLon,
    /// Every `arterial_every`-th row/column (offset by `arterial_offset`) is
    /// an arterial road; 0 disables arterials.
    pub arterial_every: usize,
    pub arterial_offset: usize,
    pub arterial_speed_mps: f64,
    pub local_speed_mps: f64,
}

impl GridSpec {
    pub fn mini_berlin() -> Self {
        Self {
            rows: 20,
            cols: 20,
            spacing_m: 750.0,
            center: MINI_BERLIN_CENTER,
            arterial_every: 5,
            arterial_offset: 2,
            arterial_speed_mps: 50.0 / 3.6,
            local_speed_mps: 30.0 / 3.6,
        }
    }

    fn is_arterial(&self, line: usize) -> bool {
        self.arterial_every > 0 && line % self.arterial_every == self.arterial_offset
    }
}

/// Rectangular grid with a pair of opposing edges between 4-neighbours.
/// Node ids are `row * cols + col` with row 0 in the south; edge ids count up
/// in emission order.
pub fn grid_network(spec: &GridSpec) -> NetworkFile {
    let south_west = spec.center.offset_m(
        -spec.spacing_m * (spec.rows.saturating_sub(1)) as f64 / 2.0,
        -spec.spacing_m * (spec.cols.saturating_sub(1)) as f64 / 2.0,
    );
    let pos = |r: usize, c: usize| south_west.offset_m(r as f64 * spec.spacing_m, c as f64 * spec.spacing_m);
    let id = |r: usize, c: usize| (r * spec.cols + c) as u64;

    let mut nodes = Vec::with_capacity(spec.rows * spec.cols);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let p = pos(r, c);
            nodes.push(NodeRecord {
                id: id(r, c),
                lat: p.lat,
                lon: p.lon,
            });
        }
    }

    let mut edges = Vec::new();
    let mut push_pair = |a: (usize, usize), b: (usize, usize), speed: f64| {
        let len = (pos(a.0, a.1).distance_m(&pos(b.0, b.1)) * 1000.0).round() / 1000.0;
        for (from, to) in [(a, b), (b, a)] {
            edges.push(EdgeRecord {
                id: edges.len() as u64,
                from: id(from.0, from.1),
                to: id(to.0, to.1),
                length_m: len,
                speed_mps: speed,
            });
        }
    };
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            if c + 1 < spec.cols {
                let speed = if spec.is_arterial(r) { spec.arterial_speed_mps } else { spec.local_speed_mps };
                push_pair((r, c), (r, c + 1), speed);
            }
            if r + 1 < spec.rows {
                let speed = if spec.is_arterial(c) { spec.arterial_speed_mps } else { spec.local_speed_mps };
                push_pair((r, c), (r + 1, c), speed);
            }
        }
    }

    NetworkFile {
        nodes,
        edges,
        turn_penalties: Vec::new(),
    }
}

pub fn mini_berlin() -> NetworkFile {
    grid_network(&GridSpec::mini_berlin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{RoadGraph, TurnCostModel};

    #[test]
    fn mini_berlin_counts() {
        // 20x20 nodes; 2 * 20 * 19 undirected links, each in both directions
        let f = mini_berlin();
        assert_eq!(f.nodes.len(), 400);
        assert_eq!(f.edges.len(), 2 * (2 * 20 * 19));
        let g = RoadGraph::from_file(&f, TurnCostModel::default()).unwrap();
        assert_eq!(g.weak_components(), 1);
    }

    #[test]
    fn grid_spacing() {
        let f = mini_berlin();
        let a = LatLon::new(f.nodes[0].lat, f.nodes[0].lon);
        let b = LatLon::new(f.nodes[1].lat, f.nodes[1].lon);
        assert!((a.distance_m(&b) - 750.0).abs() < 1.0);
    }
}
