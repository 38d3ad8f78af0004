//! Fastest-path search on the edge-expanded graph.
//!
//! Search states are directed edges, so every turn penalty is charged exactly
//! when the route moves from one edge onto the next.

use super::{EdgeIx, NodeIx, RoadGraph, SpeedProfile};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Where a search starts: at a node (optionally arriving over `heading`, in
/// which case the first turn is charged), or part-way along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    AtNode { node: NodeIx, heading: Option<EdgeIx> },
    OnEdge { edge: EdgeIx, offset_mm: u64 },
}

impl Start {
    pub fn node(node: NodeIx) -> Self {
        Start::AtNode { node, heading: None }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    #[error("no route to node {dest}")]
    NoRoute { dest: NodeIx },
    #[error("node index {0} out of range")]
    UnknownNode(NodeIx),
    #[error("edge index {0} out of range")]
    UnknownEdge(EdgeIx),
    #[error("offset {offset_mm} mm beyond end of edge {edge}")]
    BadOffset { edge: EdgeIx, offset_mm: u64 },
}

/// A timed path through the network.
///
/// Normally a route runs from node to node, but a route that begins or ends
/// in the middle of an edge records the offsets on its first/last edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub start: Start,
    pub dest: NodeIx,
    pub edges: Vec<EdgeIx>,
    /// Position along `edges[0]` where the route begins.
    pub start_offset_mm: u64,
    /// Position along the last edge where the route ends.
    pub end_offset_mm: u64,
    /// Turn penalty paid before entering the first edge.
    pub initial_wait_s: f64,
    pub length_mm: u64,
    pub travel_time_s: f64,
    /// Speed-profile multiplier frozen at departure.
    pub speed_factor: f64,
}

/// Where a vehicle is along a route at some elapsed time.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutePosition {
    /// Covered part of the route, from its start to the position.
    pub covered: Route,
    /// Start state for a new search from the position.
    pub here: Start,
}

/// Part of a route on one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpan {
    pub edge: EdgeIx,
    pub covered_mm: u64,
    pub drive_s: f64,
}

pub(crate) fn edge_time(graph: &RoadGraph, e: EdgeIx, covered_mm: u64, factor: f64) -> f64 {
    let edge = graph.edge(e);
    (covered_mm as f64 / 1000.0) / (edge.speed_mps * factor)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    edge: EdgeIx,
    covered_mm: u64,
    /// absolute offset along the edge where coverage begins
    base_mm: u64,
    enter_s: f64,
    exit_s: f64,
}

impl Route {
    pub fn empty(start: Start, dest: NodeIx, speed_factor: f64) -> Self {
        let start_offset_mm = match start {
            Start::OnEdge { offset_mm, .. } => offset_mm,
            Start::AtNode { .. } => 0,
        };
        Route {
            start,
            dest,
            edges: Vec::new(),
            start_offset_mm,
            end_offset_mm: start_offset_mm,
            initial_wait_s: 0.0,
            length_mm: 0,
            travel_time_s: 0.0,
            speed_factor,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn length_m(&self) -> f64 {
        self.length_mm as f64 / 1000.0
    }

    fn covered_on(&self, graph: &RoadGraph, i: usize) -> (u64, u64) {
        let len = graph.edge(self.edges[i]).length_mm;
        let begin = if i == 0 { self.start_offset_mm } else { 0 };
        let end = if i + 1 == self.edges.len() { self.end_offset_mm } else { len };
        (begin, end - begin)
    }

    fn segments(&self, graph: &RoadGraph) -> Vec<Segment> {
        let mut t = self.initial_wait_s;
        let mut out = Vec::with_capacity(self.edges.len());
        for (i, &e) in self.edges.iter().enumerate() {
            if i > 0 {
                t += graph
                    .turn_penalty(self.edges[i - 1], e)
                    .expect("consecutive route edges are connected");
            }
            let (base_mm, covered_mm) = self.covered_on(graph, i);
            let enter_s = t;
            t += edge_time(graph, e, covered_mm, self.speed_factor);
            out.push(Segment {
                edge: e,
                covered_mm,
                base_mm,
                enter_s,
                exit_s: t,
            });
        }
        out
    }

    /// Per-edge covered length and driving time (turn waits excluded).
    pub fn edge_spans(&self, graph: &RoadGraph) -> Vec<EdgeSpan> {
        self.segments(graph)
            .into_iter()
            .map(|s| EdgeSpan {
                edge: s.edge,
                covered_mm: s.covered_mm,
                drive_s: edge_time(graph, s.edge, s.covered_mm, self.speed_factor),
            })
            .collect()
    }

    /// Checks head-to-tail connectivity and the length bookkeeping.
    pub fn is_consistent(&self, graph: &RoadGraph) -> bool {
        let connected = self
            .edges
            .windows(2)
            .all(|w| graph.edge(w[0]).to == graph.edge(w[1]).from);
        let reaches = self
            .edges
            .last()
            .is_none_or(|&e| graph.edge(e).to == self.dest || self.end_offset_mm < graph.edge(e).length_mm);
        let sum: u64 = (0..self.edges.len()).map(|i| self.covered_on(graph, i).1).sum();
        connected && reaches && sum == self.length_mm
    }

    /// Splits the route at `elapsed` seconds after departure.
    pub fn position_at(&self, graph: &RoadGraph, elapsed: f64) -> RoutePosition {
        let segs = self.segments(graph);
        if elapsed >= self.travel_time_s {
            let here = match self.edges.last() {
                Some(&e) if self.end_offset_mm == graph.edge(e).length_mm => Start::AtNode {
                    node: self.dest,
                    heading: Some(e),
                },
                Some(&e) => Start::OnEdge {
                    edge: e,
                    offset_mm: self.end_offset_mm,
                },
                None => self.start,
            };
            return RoutePosition {
                covered: self.clone(),
                here,
            };
        }

        let prefix = |n_edges: usize, end_offset_mm: u64, length_mm: u64, start: Start| Route {
            start,
            dest: match (n_edges, start) {
                (0, Start::AtNode { node, .. }) => node,
                (0, _) => self.dest,
                (n, _) if end_offset_mm == graph.edge(self.edges[n - 1]).length_mm => {
                    graph.edge(self.edges[n - 1]).to
                }
                _ => self.dest,
            },
            edges: self.edges[..n_edges].to_vec(),
            start_offset_mm: self.start_offset_mm,
            end_offset_mm,
            initial_wait_s: self.initial_wait_s.min(elapsed.max(0.0)),
            length_mm,
            travel_time_s: elapsed.max(0.0),
            speed_factor: self.speed_factor,
        };

        let mut done_mm = 0u64;
        for (i, s) in segs.iter().enumerate() {
            if elapsed < s.enter_s {
                // waiting at the junction before segment i
                if i == 0 {
                    return RoutePosition {
                        covered: prefix(0, self.start_offset_mm, 0, self.start),
                        here: self.start,
                    };
                }
                let prev = segs[i - 1];
                let node = graph.edge(prev.edge).to;
                return RoutePosition {
                    covered: prefix(i, prev.base_mm + prev.covered_mm, done_mm, self.start),
                    here: Start::AtNode {
                        node,
                        heading: Some(prev.edge),
                    },
                };
            }
            if elapsed < s.exit_s {
                let frac = (elapsed - s.enter_s) / (s.exit_s - s.enter_s);
                let part = ((s.covered_mm as f64) * frac).round() as u64;
                let offset_mm = s.base_mm + part;
                let len = graph.edge(s.edge).length_mm;
                let here = if offset_mm == len {
                    Start::AtNode {
                        node: graph.edge(s.edge).to,
                        heading: Some(s.edge),
                    }
                } else if part == 0 && i == 0 {
                    self.start
                } else if offset_mm == 0 {
                    Start::AtNode {
                        node: graph.edge(s.edge).from,
                        heading: Some(segs[i - 1].edge),
                    }
                } else {
                    Start::OnEdge {
                        edge: s.edge,
                        offset_mm,
                    }
                };
                let covered = if part == 0 {
                    if i == 0 {
                        prefix(0, self.start_offset_mm, done_mm, self.start)
                    } else {
                        let prev = segs[i - 1];
                        prefix(i, prev.base_mm + prev.covered_mm, done_mm, self.start)
                    }
                } else {
                    prefix(i + 1, offset_mm, done_mm + part, self.start)
                };
                return RoutePosition { covered, here };
            }
            done_mm += s.covered_mm;
        }
        unreachable!("elapsed below travel time lies inside some segment")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueEntry {
    cost: f64,
    edge: EdgeIx,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (cost, edge)
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.edge.cmp(&self.edge))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-travel-time route between two nodes.
///
/// Edge costs use free-flow speed scaled by the profile factor in effect at
/// `departure_s` (seconds after local midnight); turn penalties are added
/// unscaled.
pub fn fastest_path(
    graph: &RoadGraph,
    origin: NodeIx,
    dest: NodeIx,
    departure_s: f64,
    profile: &SpeedProfile,
) -> Result<Route, RouteError> {
    fastest_path_from(graph, Start::node(origin), dest, departure_s, profile)
}

pub fn fastest_path_from(
    graph: &RoadGraph,
    start: Start,
    dest: NodeIx,
    departure_s: f64,
    profile: &SpeedProfile,
) -> Result<Route, RouteError> {
    if dest >= graph.node_count() {
        return Err(RouteError::UnknownNode(dest));
    }
    let factor = profile.factor_at(departure_s);
    let start = normalize(graph, start)?;

    let n_edges = graph.edge_count();
    let mut dist = vec![f64::INFINITY; n_edges];
    let mut prev = vec![usize::MAX; n_edges];
    let mut heap = BinaryHeap::new();
    let mut initial_wait = Vec::new();
    let mut start_offset_mm = 0;

    match start {
        Start::AtNode { node, .. } if node == dest => {
            return Ok(Route::empty(start, dest, factor));
        }
        Start::AtNode { node, heading: None } => {
            for &e in graph.out_edges(node) {
                let c = edge_time(graph, e, graph.edge(e).length_mm, factor);
                if c < dist[e] {
                    dist[e] = c;
                    heap.push(QueueEntry { cost: c, edge: e });
                }
            }
        }
        Start::AtNode { heading: Some(h), .. } => {
            initial_wait = vec![f64::NAN; n_edges];
            for &(e, pen) in graph.successors(h) {
                let c = pen + edge_time(graph, e, graph.edge(e).length_mm, factor);
                if c < dist[e] {
                    dist[e] = c;
                    initial_wait[e] = pen;
                    heap.push(QueueEntry { cost: c, edge: e });
                }
            }
        }
        Start::OnEdge { edge, offset_mm } => {
            start_offset_mm = offset_mm;
            let c = edge_time(graph, edge, graph.edge(edge).length_mm - offset_mm, factor);
            dist[edge] = c;
            heap.push(QueueEntry { cost: c, edge });
        }
    }

    while let Some(QueueEntry { cost, edge }) = heap.pop() {
        if cost > dist[edge] {
            continue;
        }
        if graph.edge(edge).to == dest {
            let mut edges = vec![edge];
            let mut cur = edge;
            while prev[cur] != usize::MAX {
                cur = prev[cur];
                edges.push(cur);
            }
            edges.reverse();
            let first = edges[0];
            let first_len = graph.edge(first).length_mm;
            let seeded_partial = matches!(start, Start::OnEdge { edge: s, .. } if s == first);
            let start_offset_mm = if seeded_partial { start_offset_mm } else { 0 };
            let length_mm = edges.iter().map(|&e| graph.edge(e).length_mm).sum::<u64>() - start_offset_mm;
            debug_assert!(first_len >= start_offset_mm);
            let initial_wait_s = match start {
                Start::AtNode { heading: Some(_), .. } => initial_wait[first],
                _ => 0.0,
            };
            return Ok(Route {
                start,
                dest,
                end_offset_mm: graph.edge(edge).length_mm,
                edges,
                start_offset_mm,
                initial_wait_s,
                length_mm,
                travel_time_s: cost,
                speed_factor: factor,
            });
        }
        for &(next, pen) in graph.successors(edge) {
            let c = cost + pen + edge_time(graph, next, graph.edge(next).length_mm, factor);
            if c < dist[next] {
                dist[next] = c;
                prev[next] = edge;
                heap.push(QueueEntry { cost: c, edge: next });
            }
        }
    }
    Err(RouteError::NoRoute { dest })
}

fn normalize(graph: &RoadGraph, start: Start) -> Result<Start, RouteError> {
    match start {
        Start::AtNode { node, heading } => {
            if node >= graph.node_count() {
                return Err(RouteError::UnknownNode(node));
            }
            if let Some(h) = heading {
                if h >= graph.edge_count() {
                    return Err(RouteError::UnknownEdge(h));
                }
                if graph.edge(h).to != node {
                    return Ok(Start::node(node));
                }
            }
            Ok(start)
        }
        Start::OnEdge { edge, offset_mm } => {
            if edge >= graph.edge_count() {
                return Err(RouteError::UnknownEdge(edge));
            }
            let e = graph.edge(edge);
            match offset_mm {
                0 => Ok(Start::node(e.from)),
                o if o == e.length_mm => Ok(Start::AtNode {
                    node: e.to,
                    heading: Some(edge),
                }),
                o if o > e.length_mm => Err(RouteError::BadOffset { edge, offset_mm }),
                _ => Ok(start),
            }
        }
    }
}
