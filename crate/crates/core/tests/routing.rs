mod common;

use common::route_oracle::{enumerate_paths, random_network};
use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use proptest::prelude::*;
use ridehail::geo::LatLon;
use ridehail::graph::{
    fastest_path, fastest_path_from, load_network, EdgeRecord, NetworkFile, NodeRecord, RoadGraph,
    RouteError, SpeedProfile, Start, TurnCostModel, TurnPenaltyRecord,
};

fn node_at(id: u64, north_m: f64, east_m: f64) -> NodeRecord {
    let p = LatLon::new(52.5, 13.4).offset_m(north_m, east_m);
    NodeRecord { id, lat: p.lat, lon: p.lon }
}

fn edge(id: u64, from: u64, to: u64, length_m: f64) -> EdgeRecord {
    EdgeRecord { id, from, to, length_m, speed_mps: 10.0 }
}

/// 2x2 block: 0 = SW, 1 = SE, 2 = NW, 3 = NE.
fn two_by_two() -> RoadGraph {
    let file = NetworkFile {
        nodes: vec![node_at(0, 0.0, 0.0), node_at(1, 0.0, 100.0), node_at(2, 100.0, 0.0), node_at(3, 100.0, 100.0)],
        edges: vec![edge(1, 0, 1, 100.0), edge(2, 1, 3, 100.0), edge(3, 0, 2, 100.0), edge(4, 2, 3, 100.0)],
        turn_penalties: vec![],
    };
    RoadGraph::from_file(&file, TurnCostModel::default()).unwrap()
}

#[test]
fn origin_equals_destination() {
    let g = two_by_two();
    let r = fastest_path(&g, 0, 0, 0.0, &SpeedProfile::uniform()).unwrap();
    assert!(r.is_empty());
    assert_eq!(r.length_mm, 0);
    assert_eq!(r.travel_time_s, 0.0);
}

#[test]
fn prefers_right_turn_over_left_turn() {
    let g = two_by_two();
    // Enumerate both two-edge paths by hand: east-then-north is a left turn.
    let east_north: f64 = 10.0 + 15.0 + 10.0;
    let north_east: f64 = 10.0 + 0.0 + 10.0;
    let r = fastest_path(&g, 0, 3, 0.0, &SpeedProfile::uniform()).unwrap();
    assert_eq!(r.travel_time_s, north_east.min(east_north));
    assert_eq!(r.travel_time_s, 20.0);
    let ids: Vec<u64> = r.edges.iter().map(|&e| g.edge(e).id).collect();
    assert_eq!(ids, vec![3, 4]);
    assert_eq!(r.length_mm, 200_000);
}

#[test]
fn longer_route_avoiding_left_turn_wins() {
    // Short: A -> B (east) -> F (north), 1000 m with a left turn at B.
    // Long: A -> D -> C (north) -> E -> F (east), 1100 m with a right turn at C.
    let file = NetworkFile {
        nodes: vec![
            node_at(1, 0.0, 0.0),     // A
            node_at(2, 0.0, 500.0),   // B
            node_at(3, 500.0, 0.0),   // C
            node_at(4, 250.0, 0.0),   // D
            node_at(5, 500.0, 250.0), // E
            node_at(6, 500.0, 500.0), // F
        ],
        edges: vec![
            edge(10, 1, 2, 500.0),
            edge(11, 2, 6, 500.0),
            edge(12, 1, 4, 275.0),
            edge(13, 4, 3, 275.0),
            edge(14, 3, 5, 275.0),
            edge(15, 5, 6, 275.0),
            edge(16, 6, 2, 500.0),
            edge(17, 5, 3, 275.0),
        ],
        turn_penalties: vec![],
    };
    let g = RoadGraph::from_file(&file, TurnCostModel::default()).unwrap();
    let (a, f) = (g.node_by_id(1).unwrap(), g.node_by_id(6).unwrap());
    let r = fastest_path(&g, a, f, 0.0, &SpeedProfile::uniform()).unwrap();

    // Oracle: the same enumeration as the random-graph tests, fed with the
    // penalties the default model assigns.
    let mut with_turns = file.clone();
    for x in &file.edges {
        for y in &file.edges {
            if x.to == y.from {
                let (ex, ey) = (g.edge_by_id(x.id).unwrap(), g.edge_by_id(y.id).unwrap());
                with_turns.turn_penalties.push(TurnPenaltyRecord {
                    from_edge: x.id,
                    to_edge: y.id,
                    seconds: g.turn_penalty(ex, ey).unwrap(),
                });
            }
        }
    }
    let best = enumerate_paths(&with_turns, 1, 6).best_trail.unwrap();
    assert_eq!(best, 110.0);
    assert_eq!(r.travel_time_s, best);
    assert_eq!(r.length_mm, 1_100_000);
}

#[test]
fn unreachable_is_explicit() {
    let g = two_by_two();
    assert_eq!(
        fastest_path(&g, 3, 0, 0.0, &SpeedProfile::uniform()),
        Err(RouteError::NoRoute { dest: 0 })
    );
    assert!(matches!(
        fastest_path(&g, 0, 99, 0.0, &SpeedProfile::uniform()),
        Err(RouteError::UnknownNode(99))
    ));
}

#[test]
fn profile_factor_scales_edges_not_penalties() {
    let g = two_by_two();
    let slow = SpeedProfile::new(vec![(0, 0.5)]).unwrap();
    let r = fastest_path(&g, 0, 3, 0.0, &slow).unwrap();
    assert_eq!(r.travel_time_s, 40.0);
    assert_eq!(r.speed_factor, 0.5);
}

#[test]
fn position_along_straight_route() {
    let file = NetworkFile {
        nodes: vec![node_at(0, 0.0, 0.0), node_at(1, 0.0, 100.0), node_at(2, 0.0, 200.0)],
        edges: vec![edge(1, 0, 1, 100.0), edge(2, 1, 2, 100.0)],
        turn_penalties: vec![],
    };
    let g = RoadGraph::from_file(&file, TurnCostModel::default()).unwrap();
    let r = fastest_path(&g, 0, 2, 0.0, &SpeedProfile::uniform()).unwrap();
    assert_eq!(r.travel_time_s, 20.0);

    let start = r.position_at(&g, 0.0);
    assert_eq!(start.covered.length_mm, 0);
    assert_eq!(start.here, Start::node(0));

    // halfway by time = the middle node, one full edge covered
    let half = r.position_at(&g, 10.0);
    assert_eq!(half.covered.length_mm, 100_000);
    assert_eq!(half.here, Start::AtNode { node: 1, heading: Some(0) });
    assert!(half.covered.is_consistent(&g));

    let quarter = r.position_at(&g, 5.0);
    assert_eq!(quarter.covered.length_mm, 50_000);
    assert_eq!(quarter.here, Start::OnEdge { edge: 0, offset_mm: 50_000 });
    assert!(quarter.covered.is_consistent(&g));

    let end = r.position_at(&g, 20.0);
    assert_eq!(end.covered, r);

    // Continuing from mid-edge reproduces the remainder exactly.
    let rest = fastest_path_from(&g, quarter.here, 2, 5.0, &SpeedProfile::uniform()).unwrap();
    assert_eq!(rest.length_mm, 150_000);
    assert_eq!(rest.travel_time_s, 15.0);
    assert_eq!(rest.start_offset_mm, 50_000);
    assert!(rest.is_consistent(&g));
}

#[test]
fn mid_edge_start_can_turn_back() {
    let g = two_by_two();
    // Halfway along SW->SE with destination SW: no edge leaves SE back to SW.
    let r = fastest_path_from(&g, Start::OnEdge { edge: 0, offset_mm: 50_000 }, 0, 0.0, &SpeedProfile::uniform());
    assert_eq!(r, Err(RouteError::NoRoute { dest: 0 }));
}

#[test]
fn heading_charges_the_first_turn() {
    let g = two_by_two();
    // Arriving at SE over the eastbound edge: continuing north is a left turn.
    let r = fastest_path_from(&g, Start::AtNode { node: 1, heading: Some(0) }, 3, 0.0, &SpeedProfile::uniform())
        .unwrap();
    assert_eq!(r.initial_wait_s, 15.0);
    assert_eq!(r.travel_time_s, 25.0);
    let half = r.position_at(&g, 7.0);
    assert_eq!(half.covered.length_mm, 0);
    assert_eq!(half.here, Start::AtNode { node: 1, heading: Some(0) });
}

#[test]
fn random_graphs_match_exhaustive_enumeration() {
    let mut compared = 0;
    for seed in 0..100u64 {
        let file = random_network(seed, 12);
        let g = RoadGraph::from_file(&file, TurnCostModel::zero()).unwrap();
        for (o, d) in [(0usize, file.nodes.len() - 1), (1, 0), (file.nodes.len() / 2, 1)] {
            let (oid, did) = (file.nodes[o].id, file.nodes[d].id);
            let oracle = enumerate_paths(&file, oid, did);
            let got = fastest_path(&g, o, d, 0.0, &SpeedProfile::uniform());
            match (oracle.best_trail, got) {
                (None, Err(RouteError::NoRoute { .. })) => {}
                (Some(best), Ok(route)) => {
                    assert_eq!(route.travel_time_s, best, "seed {seed} {oid}->{did}");
                    assert!(route.is_consistent(&g));
                    if let Some(simple) = oracle.best_node_simple {
                        assert!(route.travel_time_s <= simple);
                    }
                    compared += 1;
                }
                (o, g) => panic!("seed {seed}: oracle {o:?} vs {g:?}"),
            }
        }
    }
    assert!(compared > 100, "too few reachable pairs: {compared}");
}

#[test]
fn zero_penalties_match_node_based_dijkstra() {
    for seed in 200..260u64 {
        let mut file = random_network(seed, 12);
        file.turn_penalties.clear();
        // non-integer lengths as well
        for e in &mut file.edges {
            e.length_m = (e.length_m * 1.37 * 1000.0).round() / 1000.0;
        }
        let g = RoadGraph::from_file(&file, TurnCostModel::zero()).unwrap();
        let mut pg = DiGraph::<(), f64>::new();
        let ix: Vec<NodeIndex> = (0..g.node_count()).map(|_| pg.add_node(())).collect();
        for e in g.edges() {
            pg.add_edge(ix[e.from], ix[e.to], e.length_m() / e.speed_mps);
        }
        let reference = dijkstra(&pg, ix[0], None, |e| *e.weight());
        for d in 0..g.node_count() {
            let ours = fastest_path(&g, 0, d, 0.0, &SpeedProfile::uniform());
            match (reference.get(&ix[d]), ours) {
                (Some(&want), Ok(r)) => assert!((want - r.travel_time_s).abs() <= 1e-9 * want.max(1.0)),
                (None, Err(RouteError::NoRoute { .. })) => {}
                (w, o) => panic!("seed {seed} node {d}: {w:?} vs {o:?}"),
            }
        }
    }
}

#[test]
fn mini_berlin_fixture_loads() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/mini_berlin.json");
    let g = load_network(path).unwrap();
    assert_eq!(g.node_count(), 400);
    assert_eq!(g.edge_count(), 1520);
    assert_eq!(g.weak_components(), 1);
    // fixture is exactly what the generator emits
    assert_eq!(g.to_file(), RoadGraph::from_file(&ridehail::graph::mini_berlin(), TurnCostModel::default()).unwrap().to_file());
}

#[test]
fn nearest_node_matches_linear_scan() {
    use rand::{Rng, SeedableRng};
    let g = RoadGraph::from_file(&ridehail::graph::mini_berlin(), TurnCostModel::default()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let q = ridehail::graph::MINI_BERLIN_CENTER
            .offset_m(rng.random_range(-9000.0..9000.0), rng.random_range(-9000.0..9000.0));
        let mut best = (0usize, f64::INFINITY);
        for (i, n) in g.nodes().iter().enumerate() {
            let d = n.pos.distance_m(&q);
            if d < best.1 || (d == best.1 && n.id < g.node(best.0).id) {
                best = (i, d);
            }
        }
        assert_eq!(g.nearest_node(q).unwrap(), best.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extra_penalty_never_lowers_cost(seed in 0u64..10_000, pick in 0usize..1000, extra in 1u32..120) {
        let mut file = random_network(seed, 10);
        prop_assume!(!file.turn_penalties.is_empty());
        let g = RoadGraph::from_file(&file, TurnCostModel::zero()).unwrap();
        let d = file.nodes.len() - 1;
        let before = fastest_path(&g, 0, d, 0.0, &SpeedProfile::uniform());
        let k = pick % file.turn_penalties.len();
        file.turn_penalties[k].seconds += f64::from(extra);
        let g2 = RoadGraph::from_file(&file, TurnCostModel::zero()).unwrap();
        let after = fastest_path(&g2, 0, d, 0.0, &SpeedProfile::uniform());
        match (before, after) {
            (Ok(b), Ok(a)) => {
                prop_assert!(a.travel_time_s >= b.travel_time_s);
                prop_assert!(a.is_consistent(&g2));
                prop_assert!(a.travel_time_s >= a.length_m() / g2.max_speed_mps() * (1.0 - 1e-12));
            }
            (Err(_), Err(_)) => {}
            (b, a) => prop_assert!(false, "reachability changed: {:?} {:?}", b, a),
        }
    }

    #[test]
    fn routes_are_legal_on_mini_berlin(o in 0usize..400, d in 0usize..400, tod in 0.0f64..86_400.0) {
        let g = RoadGraph::from_file(&ridehail::graph::mini_berlin(), TurnCostModel::default()).unwrap();
        let r = fastest_path(&g, o, d, tod, &SpeedProfile::sample_urban()).unwrap();
        prop_assert!(r.is_consistent(&g));
        let sum: u64 = r.edges.iter().map(|&e| g.edge(e).length_mm).sum();
        prop_assert_eq!(sum, r.length_mm);
        // summed edge times may undercut the bound by rounding only
        prop_assert!(r.travel_time_s >= r.length_m() / g.max_speed_mps() * (1.0 - 1e-12));
        if let Some(&first) = r.edges.first() { prop_assert_eq!(g.edge(first).from, o); }
        if let Some(&last) = r.edges.last() { prop_assert_eq!(g.edge(last).to, d); }
    }
}
