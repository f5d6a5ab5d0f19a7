//! Cognitive-packet machinery: smart packets explore the graph under a drift
//! parameter and per-floor hop limits, acknowledgements backtrack the
//! loop-removed path, and every node on the way trains its network and
//! refreshes its routing table.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::building::{BuildingGraph, BuildingNode, NodeId, Path};
use crate::goals::GoalKind;
use crate::rnn::{RnnError, RnnState, ThresholdState};

#[derive(Debug, Error)]
pub enum CpnError {
    #[error("config error: {0}")]
    Config(String),
    #[error("ack rejected: {0}")]
    AckRejected(String),
    #[error(transparent)]
    Rnn(#[from] RnnError),
}

/// Tunables of the packet layer.
#[derive(Debug, Clone)]
pub struct CpnParams {
    /// Probability an SP follows the most excited neuron before the fire.
    pub drift_prefire: f64,
    /// Drift once the alarm has sounded.
    pub drift_fire: f64,
    /// Warm-up SPs emitted per node before ignition.
    pub sp_warmup: u32,
    /// Emission period per node during the evacuation, seconds.
    pub sp_period_s: f64,
    /// Routes kept per node.
    pub table_size: usize,
    /// Entries older than this are evicted, seconds.
    pub route_timeout_s: f64,
    /// Smart-packet hop budget by floor of the emitting node.
    pub hop_limit_by_floor: BTreeMap<u32, u32>,
}

impl Default for CpnParams {
    fn default() -> Self {
        CpnParams {
            drift_prefire: 0.8,
            drift_fire: 0.55,
            sp_warmup: 10,
            sp_period_s: 1.0,
            table_size: 5,
            route_timeout_s: 30.0,
            hop_limit_by_floor: BTreeMap::from([(1, 60), (2, 100), (3, 120)]),
        }
    }
}

impl CpnParams {
    pub fn validate_for(&self, graph: &BuildingGraph) -> Result<(), CpnError> {
        for drift in [self.drift_prefire, self.drift_fire] {
            if !(0.0..=1.0).contains(&drift) {
                return Err(CpnError::Config(format!(
                    "drift must lie in [0, 1] (got {drift})"
                )));
            }
        }
        if self.table_size == 0 {
            return Err(CpnError::Config("table size must be >= 1".into()));
        }
        if self.sp_period_s <= 0.0 || self.route_timeout_s <= 0.0 {
            return Err(CpnError::Config(
                "sp period and route timeout must be > 0".into(),
            ));
        }
        for node in graph.nodes() {
            hop_limit_for(node, self)?;
        }
        Ok(())
    }
}

/// Hop budget for packets emitted from `node`, by its floor.
pub fn hop_limit_for(node: &BuildingNode, params: &CpnParams) -> Result<u32, CpnError> {
    match params.hop_limit_by_floor.get(&node.floor) {
        Some(&limit) if limit > 0 => Ok(limit),
        Some(_) => Err(CpnError::Config(format!(
            "hop limit for floor {} must be > 0",
            node.floor
        ))),
        None => Err(CpnError::Config(format!(
            "no hop limit configured for floor {}",
            node.floor
        ))),
    }
}

/// Sensor readings an SP samples at each node it traverses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub t_s: f64,
    pub fire_intensity: f64,
    pub queue_len: u32,
    pub arrival_rate: f64,
    pub rho: f64,
}

/// Exploration packet walking the graph.
#[derive(Debug, Clone)]
pub struct SmartPacket {
    pub origin: NodeId,
    pub goal_kind: GoalKind,
    pub hop_limit: u32,
    pub visited: Vec<NodeId>,
    /// One sample per visit, aligned with `visited`.
    pub measurements: Vec<Measurement>,
}

impl SmartPacket {
    pub fn new(origin: NodeId, goal_kind: GoalKind, hop_limit: u32, sample: Measurement) -> Self {
        SmartPacket {
            origin,
            goal_kind,
            hop_limit,
            visited: vec![origin],
            measurements: vec![sample],
        }
    }

    pub fn current(&self) -> NodeId {
        *self.visited.last().unwrap()
    }

    pub fn hop_count(&self) -> u32 {
        (self.visited.len() - 1) as u32
    }

    pub fn visit(&mut self, node: NodeId, sample: Measurement) {
        self.visited.push(node);
        self.measurements.push(sample);
    }
}

/// Outcome of one smart-packet step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpStep {
    /// Move to this neighbor next.
    Advance(NodeId),
    /// The packet's current node is an exit.
    ReachedExit,
    /// Hop budget exhausted (or nowhere to go).
    Dropped,
}

/// Decide the packet's next move from `node`: with probability `drift` follow
/// the most excited neuron, otherwise pick a uniformly random neighbor.
pub fn step_smart_packet(
    sp: &SmartPacket,
    graph: &BuildingGraph,
    rnn: &RnnState,
    rng: &mut impl Rng,
    drift: f64,
) -> SpStep {
    let node = sp.current();
    if graph.is_exit(node) {
        return SpStep::ReachedExit;
    }
    let neighbors = graph.neighbors(node);
    if neighbors.is_empty() || sp.hop_count() >= sp.hop_limit {
        return SpStep::Dropped;
    }
    debug_assert_eq!(rnn.neuron_count(), neighbors.len());
    let next = if rng.gen::<f64>() < drift {
        neighbors[rnn.most_excited()].0
    } else {
        neighbors[rng.gen_range(0..neighbors.len())].0
    };
    SpStep::Advance(next)
}

/// Excise every loop: scanning left to right, re-visiting a node cuts the
/// walk back to its first occurrence. First and last nodes survive and the
/// result is simple.
pub fn remove_loops(walk: &[NodeId]) -> Path {
    let mut out: Vec<NodeId> = Vec::with_capacity(walk.len());
    for &node in walk {
        match out.iter().position(|&n| n == node) {
            Some(pos) => out.truncate(pos + 1),
            None => out.push(node),
        }
    }
    Path(out)
}

/// Acknowledgement travelling the reverse path: the loop-free route and the
/// measurements of exactly its nodes.
#[derive(Debug, Clone)]
pub struct Ack {
    pub route: Path,
    /// Aligned with `route` nodes.
    pub measurements: Vec<Measurement>,
    pub goal_kind: GoalKind,
}

impl Ack {
    /// Build from a finished smart packet. Keeps the latest sample per node.
    pub fn from_packet(sp: &SmartPacket) -> Ack {
        let route = remove_loops(&sp.visited);
        let measurements = route
            .nodes()
            .iter()
            .map(|&n| {
                let idx = sp
                    .visited
                    .iter()
                    .rposition(|&v| v == n)
                    .expect("route nodes come from the walk");
                sp.measurements[idx]
            })
            .collect();
        Ack {
            route,
            measurements,
            goal_kind: sp.goal_kind,
        }
    }

    /// The ack as seen by the node at `pos` on the route: the suffix from
    /// there to the exit. `None` when the suffix is a bare exit.
    pub fn suffix(&self, pos: usize) -> Option<Ack> {
        if pos + 2 > self.route.len() {
            return None;
        }
        Some(Ack {
            route: Path(self.route.nodes()[pos..].to_vec()),
            measurements: self.measurements[pos..].to_vec(),
            goal_kind: self.goal_kind,
        })
    }
}

/// One stored route with its goal value.
#[derive(Debug, Clone)]
pub struct RouteEntry {
    pub route: Path,
    pub g: f64,
    pub updated_at_s: f64,
}

/// Bounded, best-first route store of one node.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    entries: Vec<RouteEntry>,
    max_size: usize,
    timeout_s: f64,
}

impl RoutingTable {
    pub fn new(max_size: usize, timeout_s: f64) -> Self {
        RoutingTable {
            entries: Vec::new(),
            max_size,
            timeout_s,
        }
    }

    pub fn entries(&self) -> &[RouteEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Best stored route, if any.
    pub fn best(&self) -> Option<&RouteEntry> {
        self.entries.first()
    }

    /// Insert or refresh a route, keep ascending order by G (stable, so the
    /// earlier-inserted route wins ties), and evict beyond capacity.
    pub fn upsert(&mut self, route: Path, g: f64, now_s: f64) {
        match self.entries.iter_mut().find(|e| e.route == route) {
            Some(e) => {
                e.g = g;
                e.updated_at_s = now_s;
            }
            None => self.entries.push(RouteEntry {
                route,
                g,
                updated_at_s: now_s,
            }),
        }
        self.entries.sort_by(|a, b| a.g.total_cmp(&b.g));
        self.entries.truncate(self.max_size);
    }

    /// Drop entries not refreshed within the timeout, regardless of rank.
    pub fn evict_stale(&mut self, now_s: f64) {
        let timeout = self.timeout_s;
        self.entries.retain(|e| now_s - e.updated_at_s <= timeout);
    }
}

/// Apply one acknowledgement at a node: score the route, store it, reinforce
/// the neuron of the first hop against the previous threshold, then update
/// the threshold.
pub fn process_ack(
    node: NodeId,
    graph: &BuildingGraph,
    table: &mut RoutingTable,
    rnn: &mut RnnState,
    threshold: &mut ThresholdState,
    ack: &Ack,
    goal: impl FnOnce(&Ack) -> f64,
    now_s: f64,
) -> Result<(), CpnError> {
    let route = ack.route.nodes();
    if route.first() != Some(&node) {
        return Err(CpnError::AckRejected(format!(
            "route does not start at node {node}"
        )));
    }
    if route.len() < 2 {
        return Err(CpnError::AckRejected("route has no first hop".into()));
    }
    let first_hop = route[1];
    let neuron = graph
        .neighbors(node)
        .iter()
        .position(|&(nbr, _)| nbr == first_hop)
        .ok_or_else(|| {
            CpnError::AckRejected(format!("first hop {first_hop} is not a neighbor of {node}"))
        })?;

    let g = goal(ack);
    table.evict_stale(now_s);
    table.upsert(ack.route.clone(), g, now_s);

    let r = crate::goals::reward(g).map_err(|e| CpnError::AckRejected(e.to_string()))?;
    let t_prev = threshold.current();
    rnn.reinforce(neuron, r, t_prev)?;
    threshold.update(r);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::building::parse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn sample() -> Measurement {
        Measurement {
            t_s: 0.0,
            fire_intensity: 0.0,
            queue_len: 0,
            arrival_rate: 0.0,
            rho: 0.0,
        }
    }

    fn star_graph() -> BuildingGraph {
        // node 0 in the middle with 4 neighbors, one of them the exit.
        parse(
            "\
building star
node 0 0 0 0 1 1
node 1 100 0 0 1 1
node 2 0 100 0 1 1
node 3 -100 0 0 1 1
node 4 0 -100 0 1 1 exit
edge 0 1 100
edge 0 2 100
edge 0 3 100
edge 0 4 100
edge 1 2 141
edge 2 3 141
edge 3 4 141
edge 4 1 141
",
        )
        .unwrap()
    }

    #[test]
    fn remove_loops_cases() {
        assert_eq!(
            remove_loops(&ids(&[0, 1, 2, 1, 3])).nodes(),
            ids(&[0, 1, 3])
        );
        assert_eq!(remove_loops(&ids(&[0, 1, 2])).nodes(), ids(&[0, 1, 2]));
        assert_eq!(remove_loops(&ids(&[0, 1, 0, 1, 0])).nodes(), ids(&[0]));
    }

    #[test]
    fn remove_loops_idempotent_and_simple() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        use rand::Rng;
        for _ in 0..500 {
            let len = rng.gen_range(1..30);
            let walk: Vec<NodeId> = (0..len).map(|_| NodeId(rng.gen_range(0..8))).collect();
            let once = remove_loops(&walk);
            assert!(once.is_simple());
            assert_eq!(once.nodes().first(), walk.first());
            assert_eq!(once.nodes().last(), walk.last());
            let twice = remove_loops(once.nodes());
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn drift_one_always_follows_most_excited() {
        let g = star_graph();
        let mut rnn = RnnState::uniform(4);
        // Train neuron 2 (neighbor node 3) hard so argmax is unambiguous.
        for _ in 0..5 {
            rnn.reinforce(2, 1.0, 0.0).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let sp = SmartPacket::new(NodeId(0), GoalKind::Distance, 60, sample());
            match step_smart_packet(&sp, &g, &rnn, &mut rng, 1.0) {
                SpStep::Advance(n) => assert_eq!(n, NodeId(3)),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn drift_zero_is_uniform_over_neighbors() {
        let g = star_graph();
        let rnn = RnnState::uniform(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counts = [0u32; 4];
        let draws = 10_000;
        for _ in 0..draws {
            let sp = SmartPacket::new(NodeId(0), GoalKind::Distance, 60, sample());
            match step_smart_packet(&sp, &g, &rnn, &mut rng, 0.0) {
                SpStep::Advance(n) => counts[(n.0 - 1) as usize] += 1,
                other => panic!("{other:?}"),
            }
        }
        // Chi-squared against the uniform law, 3 degrees of freedom; the
        // 0.001 critical value is 16.27.
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn packet_dropped_at_hop_limit() {
        let g = star_graph();
        let rnn = RnnState::uniform(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut sp = SmartPacket::new(NodeId(0), GoalKind::Distance, 60, sample());
        // Bounce between 0 and 1 until the budget is gone.
        for hop in 0..60 {
            let to = if hop % 2 == 0 { NodeId(1) } else { NodeId(0) };
            sp.visit(to, sample());
        }
        assert_eq!(sp.hop_count(), 60);
        assert!(!g.is_exit(sp.current()));
        assert_eq!(
            step_smart_packet(&sp, &g, &rnn, &mut rng, 0.5),
            SpStep::Dropped
        );
    }

    #[test]
    fn packet_reports_exit() {
        let g = star_graph();
        let rnn = RnnState::uniform(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut sp = SmartPacket::new(NodeId(0), GoalKind::Distance, 60, sample());
        sp.visit(NodeId(4), sample());
        assert_eq!(
            step_smart_packet(&sp, &g, &rnn, &mut rng, 0.5),
            SpStep::ReachedExit
        );
    }

    #[test]
    fn hop_limits_by_floor() {
        let params = CpnParams::default();
        let mk = |floor: u32| BuildingNode {
            id: NodeId(0),
            position: [0.0, 0.0, (floor as f64 - 1.0) * 400.0],
            floor,
            capacity: 1,
            is_exit: false,
        };
        assert_eq!(hop_limit_for(&mk(1), &params).unwrap(), 60);
        assert_eq!(hop_limit_for(&mk(2), &params).unwrap(), 100);
        assert_eq!(hop_limit_for(&mk(3), &params).unwrap(), 120);
        assert!(hop_limit_for(&mk(4), &params).is_err());
    }

    #[test]
    fn table_orders_evicts_and_times_out() {
        let mut t = RoutingTable::new(2, 30.0);
        assert!(t.best().is_none());
        t.upsert(Path(ids(&[0, 1, 4])), 9.0, 0.0);
        t.upsert(Path(ids(&[0, 2, 4])), 5.0, 1.0);
        assert_eq!(t.best().unwrap().g, 5.0);
        // Full at 2 entries: a better one evicts the worst.
        t.upsert(Path(ids(&[0, 3, 4])), 7.0, 2.0);
        let gs: Vec<f64> = t.entries().iter().map(|e| e.g).collect();
        assert_eq!(gs, vec![5.0, 7.0]);
        // A worse one than everything bounces straight off.
        t.upsert(Path(ids(&[0, 1, 2, 4])), 100.0, 3.0);
        assert_eq!(t.entries().len(), 2);
        assert_eq!(t.best().unwrap().g, 5.0);
        // Timeout evicts even the best entry.
        t.evict_stale(40.0);
        assert!(t.entries().is_empty());
    }

    #[test]
    fn table_tie_keeps_insertion_order() {
        let mut t = RoutingTable::new(5, 30.0);
        t.upsert(Path(ids(&[0, 1, 4])), 5.0, 0.0);
        t.upsert(Path(ids(&[0, 2, 4])), 5.0, 1.0);
        assert_eq!(t.best().unwrap().route.nodes(), ids(&[0, 1, 4]));
    }

    #[test]
    fn table_refresh_updates_in_place() {
        let mut t = RoutingTable::new(5, 30.0);
        t.upsert(Path(ids(&[0, 1, 4])), 5.0, 0.0);
        t.upsert(Path(ids(&[0, 1, 4])), 3.0, 1.0);
        assert_eq!(t.entries().len(), 1);
        assert_eq!(t.best().unwrap().g, 3.0);
        assert_eq!(t.best().unwrap().updated_at_s, 1.0);
    }

    #[test]
    fn process_ack_first_time() {
        let g = star_graph();
        let mut table = RoutingTable::new(5, 30.0);
        let mut rnn = RnnState::uniform(4);
        let mut ts = ThresholdState::new(0.4).unwrap();
        let ack = Ack {
            route: Path(ids(&[0, 4])),
            measurements: vec![sample(), sample()],
            goal_kind: GoalKind::Distance,
        };
        assert!(!ts.is_initialized());
        process_ack(
            NodeId(0),
            &g,
            &mut table,
            &mut rnn,
            &mut ts,
            &ack,
            |_| 100.0,
            0.0,
        )
        .unwrap();
        assert_eq!(table.entries().len(), 1);
        assert!(ts.is_initialized());
        assert_eq!(ts.current(), 0.0); // first-time branch
    }

    #[test]
    fn process_ack_rejects_foreign_first_hop() {
        let g = parse(
            "\
building r
node 0 0 0 0 1 1
node 1 100 0 0 1 1
node 2 200 0 0 1 1 exit
edge 0 1 100
edge 1 2 100
",
        )
        .unwrap();
        let mut table = RoutingTable::new(5, 30.0);
        let mut rnn = RnnState::uniform(1);
        let mut ts = ThresholdState::new(0.4).unwrap();
        // Node 2 is not adjacent to node 0.
        let ack = Ack {
            route: Path(ids(&[0, 2])),
            measurements: vec![sample(), sample()],
            goal_kind: GoalKind::Distance,
        };
        let err = process_ack(
            NodeId(0),
            &g,
            &mut table,
            &mut rnn,
            &mut ts,
            &ack,
            |_| 1.0,
            0.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("not a neighbor"));
        assert!(table.is_empty());
    }

    #[test]
    fn trained_chain_is_reproduced_at_full_drift() {
        // Reward the chain 0 -> 3 -> 4 at both decision points, then a packet
        // with drift 1 must walk exactly that chain.
        let g = star_graph();
        let mut rnn0 = RnnState::uniform(4);
        let n3: Vec<NodeId> = g.neighbors(NodeId(3)).iter().map(|&(n, _)| n).collect();
        let mut rnn3 = RnnState::uniform(n3.len());
        let target3 = n3.iter().position(|&n| n == NodeId(4)).unwrap();
        for _ in 0..6 {
            rnn0.reinforce(2, 1.0, 0.0).unwrap(); // neighbor index 2 = node 3
            rnn3.reinforce(target3, 1.0, 0.0).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sp = SmartPacket::new(NodeId(0), GoalKind::Distance, 60, sample());
        loop {
            if g.is_exit(sp.current()) {
                break;
            }
            let rnn = match sp.current() {
                NodeId(0) => &rnn0,
                NodeId(3) => &rnn3,
                other => panic!("strayed to {other}"),
            };
            match step_smart_packet(&sp, &g, rnn, &mut rng, 1.0) {
                SpStep::Advance(n) => sp.visit(n, sample()),
                SpStep::ReachedExit => break,
                SpStep::Dropped => panic!("dropped"),
            }
        }
        assert_eq!(sp.visited, ids(&[0, 3, 4]));
    }
}
