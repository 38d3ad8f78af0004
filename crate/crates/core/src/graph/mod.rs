//! Road network, map matching and turn-aware fastest-path routing.

mod grid;
mod profile;
mod routing;
mod turns;

pub use grid::{grid_network, mini_berlin, GridSpec, MINI_BERLIN_CENTER};
pub use profile::{ProfileError, SpeedProfile, SECONDS_PER_DAY};
pub use routing::{fastest_path, fastest_path_from, EdgeSpan, Route, RouteError, RoutePosition, Start};
pub use turns::{classify_turn, TurnCostModel, TurnKind};

use crate::geo::LatLon;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

/// Index of a node inside a [`RoadGraph`]. Not the external node id.
pub type NodeIx = usize;
/// Index of an edge inside a [`RoadGraph`]. Not the external edge id.
pub type EdgeIx = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: u64,
    pub pos: LatLon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: u64,
    pub from: NodeIx,
    pub to: NodeIx,
    /// Length in millimetres. Integer so route lengths sum exactly.
    pub length_mm: u64,
    pub speed_mps: f64,
}

impl Edge {
    pub fn length_m(&self) -> f64 {
        self.length_mm as f64 / 1000.0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("cannot read network file: {0}")]
    Io(#[from] std::io::Error),
    #[error("network parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate node id {0}")]
    DuplicateNode(u64),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(u64),
    #[error("edge {edge} references unknown node {node}")]
    UnknownNode { edge: u64, node: u64 },
    #[error("edge {0} has non-positive length")]
    ZeroLength(u64),
    #[error("edge {0} has non-positive or non-finite speed")]
    BadSpeed(u64),
    #[error("node {0} has non-finite coordinates")]
    BadCoordinate(u64),
    #[error("turn penalty references unknown edge {0}")]
    UnknownTurnEdge(u64),
    #[error("turn penalty {from_edge} -> {to_edge} does not join at a shared node")]
    DisjointTurn { from_edge: u64, to_edge: u64 },
    #[error("turn penalty {from_edge} -> {to_edge} must be a finite value >= 0")]
    BadPenalty { from_edge: u64, to_edge: u64 },
    #[error("invalid turn cost model")]
    BadTurnModel,
}

/// On-disk network schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub turn_penalties: Vec<TurnPenaltyRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: u64,
    pub from: u64,
    pub to: u64,
    pub length_m: f64,
    pub speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnPenaltyRecord {
    pub from_edge: u64,
    pub to_edge: u64,
    pub seconds: f64,
}

/// Directed road network. Immutable once built; share it with `Arc`.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    node_index: HashMap<u64, NodeIx>,
    edge_index: HashMap<u64, EdgeIx>,
    out_edges: Vec<Vec<EdgeIx>>,
    explicit_turns: HashMap<(EdgeIx, EdgeIx), f64>,
    turn_model: TurnCostModel,
    /// Edge-expanded adjacency: for each edge, the edges leaving its head and
    /// the penalty of making that move.
    successors: Vec<Vec<(EdgeIx, f64)>>,
    components: usize,
    max_speed_mps: f64,
    spatial: SpatialIndex,
}

impl RoadGraph {
    pub fn from_file(file: &NetworkFile, turn_model: TurnCostModel) -> Result<Self, NetworkError> {
        if !turn_model.is_valid() {
            return Err(NetworkError::BadTurnModel);
        }
        let mut nodes = Vec::with_capacity(file.nodes.len());
        let mut node_index = HashMap::with_capacity(file.nodes.len());
        for n in &file.nodes {
            let pos = LatLon::new(n.lat, n.lon);
            if !pos.is_finite() {
                return Err(NetworkError::BadCoordinate(n.id));
            }
            if node_index.insert(n.id, nodes.len()).is_some() {
                return Err(NetworkError::DuplicateNode(n.id));
            }
            nodes.push(Node { id: n.id, pos });
        }

        let mut edges = Vec::with_capacity(file.edges.len());
        let mut edge_index = HashMap::with_capacity(file.edges.len());
        let mut out_edges = vec![Vec::new(); nodes.len()];
        for e in &file.edges {
            let lookup = |node: u64| {
                node_index
                    .get(&node)
                    .copied()
                    .ok_or(NetworkError::UnknownNode { edge: e.id, node })
            };
            let (from, to) = (lookup(e.from)?, lookup(e.to)?);
            if !(e.length_m.is_finite() && e.length_m > 0.0) {
                return Err(NetworkError::ZeroLength(e.id));
            }
            let length_mm = (e.length_m * 1000.0).round() as u64;
            if length_mm == 0 {
                return Err(NetworkError::ZeroLength(e.id));
            }
            if !(e.speed_mps.is_finite() && e.speed_mps > 0.0) {
                return Err(NetworkError::BadSpeed(e.id));
            }
            if edge_index.insert(e.id, edges.len()).is_some() {
                return Err(NetworkError::DuplicateEdge(e.id));
            }
            out_edges[from].push(edges.len());
            edges.push(Edge {
                id: e.id,
                from,
                to,
                length_mm,
                speed_mps: e.speed_mps,
            });
        }

        let mut explicit_turns = HashMap::new();
        for t in &file.turn_penalties {
            let get = |id| edge_index.get(&id).copied().ok_or(NetworkError::UnknownTurnEdge(id));
            let (a, b) = (get(t.from_edge)?, get(t.to_edge)?);
            if edges[a].to != edges[b].from {
                return Err(NetworkError::DisjointTurn {
                    from_edge: t.from_edge,
                    to_edge: t.to_edge,
                });
            }
            if !(t.seconds.is_finite() && t.seconds >= 0.0) {
                return Err(NetworkError::BadPenalty {
                    from_edge: t.from_edge,
                    to_edge: t.to_edge,
                });
            }
            explicit_turns.insert((a, b), t.seconds);
        }

        let components = weak_components(nodes.len(), &edges);
        if components > 1 {
            log::warn!("road network has {components} weakly connected components");
        }
        let max_speed_mps = edges.iter().map(|e| e.speed_mps).fold(0.0, f64::max);
        let spatial = SpatialIndex::build(&nodes);
        let mut graph = Self {
            nodes,
            edges,
            node_index,
            edge_index,
            out_edges,
            explicit_turns,
            turn_model,
            successors: Vec::new(),
            components,
            max_speed_mps,
            spatial,
        };
        graph.rebuild_successors();
        Ok(graph)
    }

    pub fn from_json_str(s: &str, turn_model: TurnCostModel) -> Result<Self, NetworkError> {
        let file: NetworkFile = serde_json::from_str(s).map_err(|e| NetworkError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(&file, turn_model)
    }

    pub fn to_file(&self) -> NetworkFile {
        let mut turn_penalties: Vec<_> = self
            .explicit_turns
            .iter()
            .map(|(&(a, b), &seconds)| TurnPenaltyRecord {
                from_edge: self.edges[a].id,
                to_edge: self.edges[b].id,
                seconds,
            })
            .collect();
        turn_penalties.sort_by_key(|t| (t.from_edge, t.to_edge));
        NetworkFile {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    lat: n.pos.lat,
                    lon: n.pos.lon,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id,
                    from: self.nodes[e.from].id,
                    to: self.nodes[e.to].id,
                    length_m: e.length_m(),
                    speed_mps: e.speed_mps,
                })
                .collect(),
            turn_penalties,
        }
    }

    /// Same network with a different fallback turn-cost model.
    pub fn with_turn_model(mut self, model: TurnCostModel) -> Result<Self, NetworkError> {
        if !model.is_valid() {
            return Err(NetworkError::BadTurnModel);
        }
        self.turn_model = model;
        self.rebuild_successors();
        Ok(self)
    }

    fn rebuild_successors(&mut self) {
        let mut successors = Vec::with_capacity(self.edges.len());
        for (a, edge) in self.edges.iter().enumerate() {
            let next = self.out_edges[edge.to]
                .iter()
                .map(|&b| (b, self.compute_turn_penalty(a, b)))
                .collect();
            successors.push(next);
        }
        self.successors = successors;
    }

    fn compute_turn_penalty(&self, a: EdgeIx, b: EdgeIx) -> f64 {
        if let Some(&p) = self.explicit_turns.get(&(a, b)) {
            return p;
        }
        self.turn_model.cost(self.turn_kind(a, b))
    }

    pub fn turn_kind(&self, a: EdgeIx, b: EdgeIx) -> TurnKind {
        let (ea, eb) = (&self.edges[a], &self.edges[b]);
        classify_turn(self.edge_bearing(a), self.edge_bearing(b), eb.to == ea.from)
    }

    pub fn edge_bearing(&self, e: EdgeIx) -> f64 {
        let edge = &self.edges[e];
        self.nodes[edge.from].pos.bearing_deg(&self.nodes[edge.to].pos)
    }

    /// Penalty in seconds for moving from edge `a` directly onto edge `b`,
    /// or `None` when `b` does not leave the head of `a`.
    pub fn turn_penalty(&self, a: EdgeIx, b: EdgeIx) -> Option<f64> {
        self.successors[a].iter().find(|(e, _)| *e == b).map(|(_, p)| *p)
    }

    pub fn successors(&self, e: EdgeIx) -> &[(EdgeIx, f64)] {
        &self.successors[e]
    }

    pub fn out_edges(&self, n: NodeIx) -> &[EdgeIx] {
        &self.out_edges[n]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, n: NodeIx) -> &Node {
        &self.nodes[n]
    }

    pub fn edge(&self, e: EdgeIx) -> &Edge {
        &self.edges[e]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_by_id(&self, id: u64) -> Option<NodeIx> {
        self.node_index.get(&id).copied()
    }

    pub fn edge_by_id(&self, id: u64) -> Option<EdgeIx> {
        self.edge_index.get(&id).copied()
    }

    pub fn turn_model(&self) -> TurnCostModel {
        self.turn_model
    }

    /// Number of weakly connected components; 1 for a connected network.
    pub fn weak_components(&self) -> usize {
        self.components
    }

    pub fn max_speed_mps(&self) -> f64 {
        self.max_speed_mps
    }

    /// Node closest to `location` by great-circle distance; ties go to the
    /// lowest node id.
    pub fn nearest_node(&self, location: LatLon) -> Result<NodeIx, EmptyGraph> {
        if self.nodes.is_empty() {
            return Err(EmptyGraph);
        }
        Ok(self.spatial.nearest(&self.nodes, location))
    }

    /// Coordinates of a search start.
    pub fn start_location(&self, s: Start) -> LatLon {
        match s {
            Start::AtNode { node, .. } => self.nodes[node].pos,
            Start::OnEdge { edge, offset_mm } => self.point_on_edge(edge, offset_mm),
        }
    }

    /// Position `offset_mm` along edge `e`, interpolated between its end nodes.
    pub fn point_on_edge(&self, e: EdgeIx, offset_mm: u64) -> LatLon {
        let edge = &self.edges[e];
        let t = offset_mm as f64 / edge.length_mm as f64;
        self.nodes[edge.from].pos.lerp(&self.nodes[edge.to].pos, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("graph has no nodes")]
pub struct EmptyGraph;

/// Reads and validates a network JSON file using the default turn costs.
pub fn load_network(path: impl AsRef<Path>) -> Result<RoadGraph, NetworkError> {
    load_network_with(path, TurnCostModel::default())
}

pub fn load_network_with(path: impl AsRef<Path>, model: TurnCostModel) -> Result<RoadGraph, NetworkError> {
    let text = std::fs::read_to_string(path)?;
    RoadGraph::from_json_str(&text, model)
}

/// Writes `file` as JSON.
pub fn save_network(file: &NetworkFile, path: impl AsRef<Path>) -> Result<(), NetworkError> {
    let w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(w, file).map_err(std::io::Error::from)?;
    Ok(())
}

fn weak_components(n: usize, edges: &[Edge]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = n;
    for e in edges {
        let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

/// Uniform bucket grid over an equirectangular projection, used to answer
/// nearest-node queries without scanning every node.
#[derive(Debug, Clone, Default)]
struct SpatialIndex {
    origin: (f64, f64),
    /// meters per degree (lat, lon) at the projection origin
    scale: (f64, f64),
    cell_m: f64,
    cols: i64,
    rows: i64,
    cells: Vec<Vec<NodeIx>>,
}

impl SpatialIndex {
    fn build(nodes: &[Node]) -> Self {
        if nodes.is_empty() {
            return Self::default();
        }
        let (mut lat0, mut lat1, mut lon0, mut lon1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for n in nodes {
            lat0 = lat0.min(n.pos.lat);
            lat1 = lat1.max(n.pos.lat);
            lon0 = lon0.min(n.pos.lon);
            lon1 = lon1.max(n.pos.lon);
        }
        let m_per_deg = crate::geo::EARTH_RADIUS_M.to_radians();
        let scale = (m_per_deg, m_per_deg * ((lat0 + lat1) / 2.0).to_radians().cos());
        let height = ((lat1 - lat0) * scale.0).max(1.0);
        let width = ((lon1 - lon0) * scale.1).max(1.0);
        let cell_m = ((height * width) / nodes.len() as f64).sqrt().max(50.0) * 2.0;
        let rows = (height / cell_m).ceil() as i64 + 1;
        let cols = (width / cell_m).ceil() as i64 + 1;
        let mut index = Self {
            origin: (lat0, lon0),
            scale,
            cell_m,
            cols,
            rows,
            cells: vec![Vec::new(); (rows * cols) as usize],
        };
        for (i, n) in nodes.iter().enumerate() {
            let (r, c) = index.cell_of(n.pos);
            let slot = (r.clamp(0, rows - 1) * cols + c.clamp(0, cols - 1)) as usize;
            index.cells[slot].push(i);
        }
        index
    }

    fn cell_of(&self, p: LatLon) -> (i64, i64) {
        let y = (p.lat - self.origin.0) * self.scale.0;
        let x = (p.lon - self.origin.1) * self.scale.1;
        ((y / self.cell_m).floor() as i64, (x / self.cell_m).floor() as i64)
    }

    fn nearest(&self, nodes: &[Node], p: LatLon) -> NodeIx {
        let better = |cand: NodeIx, d: f64, best: Option<(NodeIx, f64)>| match best {
            None => true,
            Some((b, bd)) => d < bd || (d == bd && nodes[cand].id < nodes[b].id),
        };
        let (r0, c0) = self.cell_of(p);
        // Rings cover every cell within Chebyshev distance `ring`, clamped to
        // the grid. Once the nearest unexplored ring is provably farther than
        // the best candidate (with slack for projection error), stop.
        let max_ring = (r0.abs().max(c0.abs()) + self.rows.max(self.cols)) + 1;
        let mut best: Option<(NodeIx, f64)> = None;
        for ring in 0..=max_ring {
            if let Some((_, bd)) = best {
                let ring_min_m = (ring - 1).max(0) as f64 * self.cell_m;
                if ring_min_m * 0.95 > bd {
                    break;
                }
            }
            for r in (r0 - ring)..=(r0 + ring) {
                if r < 0 || r >= self.rows {
                    continue;
                }
                for c in (c0 - ring)..=(c0 + ring) {
                    if c < 0 || c >= self.cols {
                        continue;
                    }
                    if (r - r0).abs() != ring && (c - c0).abs() != ring {
                        continue;
                    }
                    for &i in &self.cells[(r * self.cols + c) as usize] {
                        let d = nodes[i].pos.distance_m(&p);
                        if better(i, d, best) {
                            best = Some((i, d));
                        }
                    }
                }
            }
        }
        best.expect("non-empty graph").0
    }
}
