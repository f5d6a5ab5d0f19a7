//! Discrete-event trial engine: evacuee agents move over the building graph
//! under one of three policies (autonomous, centralized shortest-path, CPN),
//! with node capacities, queueing, hazard damage and energy accounting.
//!
//! One trial is one single-threaded event loop; metrics are a pure function
//! of (config, seed). Distinct trials share only the immutable graph.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::building::{
    dijkstra_to_exit, exit_field, BuildingGraph, ExitField, ExitSearch, NodeId,
};
use crate::cpn::{
    hop_limit_for, process_ack, step_smart_packet, Ack, CpnError, CpnParams, Measurement,
    RoutingTable, SmartPacket, SpStep,
};
use crate::goals::{evaluate, turn_angle_deg, EnergyCosts, GoalContext, GoalKind};
use crate::hazard::{HazardError, HazardParams, HazardState};
use crate::queueing::NodeQueueStats;
use crate::rnn::{RnnState, ThresholdState};

/// Simultaneous arrivals are sequenced by the scheduler; this is the minimum
/// effective gap fed into the rolling arrival rate so it stays finite.
const MIN_ARRIVAL_GAP_S: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Cpn(#[from] CpnError),
    #[error(transparent)]
    Hazard(#[from] HazardError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Autonomous,
    Dijkstra,
    Cpn,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Autonomous => "autonomous",
            Policy::Dijkstra => "dijkstra",
            Policy::Cpn => "cpn",
        }
    }

    pub fn from_name(s: &str) -> Option<Policy> {
        match s {
            "autonomous" => Some(Policy::Autonomous),
            "dijkstra" => Some(Policy::Dijkstra),
            "cpn" => Some(Policy::Cpn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Category {
    Normal,
    Wheelchair,
    Sick,
    Child,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Normal,
        Category::Wheelchair,
        Category::Sick,
        Category::Child,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Normal => "normal",
            Category::Wheelchair => "wheelchair",
            Category::Sick => "sick",
            Category::Child => "child",
        }
    }

    pub fn from_name(s: &str) -> Option<Category> {
        match s {
            "normal" => Some(Category::Normal),
            "wheelchair" => Some(Category::Wheelchair),
            "sick" => Some(Category::Sick),
            "child" => Some(Category::Child),
            _ => None,
        }
    }

    /// Sick people and children take extra hazard damage.
    pub fn damage_multiplier(self) -> f64 {
        match self {
            Category::Sick | Category::Child => 1.5,
            _ => 1.0,
        }
    }

    /// Default QoS goal per category; a trial-level override replaces it.
    pub fn default_goal(self) -> GoalKind {
        match self {
            Category::Normal => GoalKind::Time,
            Category::Wheelchair => GoalKind::Energy,
            Category::Sick | Category::Child => GoalKind::Safety,
        }
    }
}

/// Walking speeds per category, cm/s.
#[derive(Debug, Clone, Copy)]
pub struct SpeedTable {
    pub normal: f64,
    pub wheelchair: f64,
    pub sick: f64,
    pub child: f64,
}

impl Default for SpeedTable {
    fn default() -> Self {
        SpeedTable {
            normal: 150.0,
            wheelchair: 90.0,
            sick: 100.0,
            child: 120.0,
        }
    }
}

impl SpeedTable {
    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::Normal => self.normal,
            Category::Wheelchair => self.wheelchair,
            Category::Sick => self.sick,
            Category::Child => self.child,
        }
    }
}

/// Full configuration of one trial.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub policy: Policy,
    pub evacuee_count: usize,
    /// Category weights; normalized internally.
    pub category_mix: Vec<(Category, f64)>,
    /// Force a single QoS goal for everyone; `None` uses per-category goals.
    pub goal_override: Option<GoalKind>,
    pub movement_depth: u32,
    pub ignition_node: NodeId,
    pub ignition_time_s: f64,
    pub hazard: HazardParams,
    pub cpn: CpnParams,
    pub time_cap_s: f64,
    /// Health lost per unit intensity per second of exposure.
    pub damage_rate: f64,
    pub hazard_tick_s: f64,
    pub speeds: SpeedTable,
    /// Node service rate mu (1/s); traversing a node takes 1/mu seconds.
    pub service_rate: f64,
    /// Rolling constant of the arrival-rate average.
    pub arrival_smoothing: f64,
    /// Rolling constant of the decision threshold.
    pub threshold_smoothing: f64,
    /// Seconds of waiting per predicted / standing queued person.
    pub coeff_a: f64,
    pub coeff_b: f64,
    pub energy: EnergyCosts,
    /// Fixed start nodes (cycled); `None` places uniformly at random over
    /// non-exit nodes.
    pub placements: Option<Vec<NodeId>>,
}

impl TrialConfig {
    /// Sensible defaults against a given graph; the ignition node defaults to
    /// node 4 (mid main corridor on the shipped fixture).
    pub fn new(graph: &BuildingGraph) -> Self {
        TrialConfig {
            policy: Policy::Cpn,
            evacuee_count: 30,
            category_mix: vec![(Category::Normal, 1.0)],
            goal_override: Some(GoalKind::Distance),
            movement_depth: 3,
            ignition_node: NodeId(4),
            ignition_time_s: 10.0,
            hazard: HazardParams::default_for(graph),
            cpn: CpnParams::default(),
            time_cap_s: 600.0,
            damage_rate: 5.0,
            hazard_tick_s: 1.0,
            speeds: SpeedTable::default(),
            service_rate: 1.0,
            arrival_smoothing: 0.4,
            threshold_smoothing: 0.4,
            coeff_a: 1.0,
            coeff_b: 1.0,
            energy: EnergyCosts::default(),
            placements: None,
        }
    }

    pub fn validate(&self, graph: &BuildingGraph) -> Result<(), SimError> {
        let cfg_err = |msg: String| Err(SimError::Config(msg));
        if self.ignition_node.index() >= graph.node_count() {
            return cfg_err(format!("ignition node {} not in graph", self.ignition_node));
        }
        if self.movement_depth < 1 {
            return cfg_err("movement depth must be >= 1".into());
        }
        if self.category_mix.is_empty()
            || self.category_mix.iter().any(|&(_, w)| w < 0.0)
            || self.category_mix.iter().map(|&(_, w)| w).sum::<f64>() <= 0.0
        {
            return cfg_err("category mix must have non-negative weights summing > 0".into());
        }
        if self.service_rate <= 0.0 {
            return cfg_err("service rate must be > 0".into());
        }
        for a in [self.arrival_smoothing, self.threshold_smoothing] {
            if !(a > 0.0 && a < 1.0) {
                return cfg_err(format!("smoothing constants must lie in (0,1), got {a}"));
            }
        }
        if self.time_cap_s <= 0.0 || self.hazard_tick_s <= 0.0 {
            return cfg_err("time cap and hazard tick must be > 0".into());
        }
        for c in Category::ALL {
            if self.speeds.get(c) <= 0.0 {
                return cfg_err(format!("{} speed must be > 0", c.name()));
            }
        }
        if let Some(p) = &self.placements {
            if let Some(bad) = p.iter().find(|n| n.index() >= graph.node_count()) {
                return cfg_err(format!("placement node {bad} not in graph"));
            }
        }
        self.hazard.validate_for(graph)?;
        self.cpn.validate_for(graph)?;
        Ok(())
    }

    pub fn goal_for(&self, c: Category) -> GoalKind {
        self.goal_override.unwrap_or_else(|| c.default_goal())
    }

    /// Canonical cell label; keys the dynamics random stream so distinct
    /// cells never share randomness.
    pub fn cell_label(&self) -> String {
        let goal = match self.goal_override {
            Some(g) => g.name().to_string(),
            None => "bycat".to_string(),
        };
        format!(
            "policy={};count={};depth={};goal={}",
            self.policy.name(),
            self.evacuee_count,
            self.movement_depth,
            goal
        )
    }
}

/// Health after `dt_s` seconds of exposure to `intensity` for a category
/// whose damage multiplier is `multiplier`. Clamped at zero.
pub fn apply_hazard_damage(
    health: f64,
    intensity: f64,
    dt_s: f64,
    damage_rate: f64,
    multiplier: f64,
) -> f64 {
    debug_assert!(dt_s >= 0.0);
    (health - damage_rate * multiplier * intensity * dt_s).max(0.0)
}

/// Outputs of one trial, one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub seed: u64,
    pub policy_label: String,
    pub evacuees: usize,
    pub survivor_fraction: f64,
    pub deaths: usize,
    pub congestion_events: u64,
    pub avg_evac_time_s: f64,
    pub avg_health: f64,
    pub total_energy: f64,
    /// The time cap cut the trial short with agents still inside.
    pub truncated: bool,
}

impl TrialMetrics {
    pub const CSV_HEADER: &'static str =
        "seed,policy,evacuees,survivor_fraction,deaths,congestion,avg_evac_time_s,avg_health,total_energy";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.policy_label,
            self.evacuees,
            self.survivor_fraction,
            self.deaths,
            self.congestion_events,
            self.avg_evac_time_s,
            self.avg_health,
            self.total_energy
        )
    }
}

/// Per-evacuee record kept for post-hoc checks.
#[derive(Debug, Clone)]
pub struct EvacueeTrace {
    pub category: Category,
    pub nodes: Vec<NodeId>,
    pub brakes: u32,
    pub distance_cm: f64,
    pub turn_degrees: f64,
    pub energy: f64,
    pub health: f64,
    pub evacuated: bool,
    pub dead: bool,
    pub route_switches: u32,
}

// ---------------------------------------------------------------------------
// random stream derivation

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Placement stream depends only on (seed, evacuee count) so matched seeds
/// see identical starting layouts across policies, depths and goals.
fn placement_rng(seed: u64, count: usize) -> ChaCha8Rng {
    let key = seed ^ fnv1a64(&format!("placement;count={count}"));
    ChaCha8Rng::seed_from_u64(splitmix64(key))
}

/// Dynamics stream is keyed by the full cell label: adding sweep axes never
/// perturbs other cells' randomness.
fn dynamics_rng(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ fnv1a64(label)))
}

// ---------------------------------------------------------------------------
// CPN per-class state

/// Per-node CPN state for one QoS class.
#[derive(Debug, Clone)]
pub struct CpnNodeState {
    pub rnn: RnnState,
    pub table: RoutingTable,
    pub threshold: ThresholdState,
}

/// Goal-evaluation knobs shared by warm-up and the live simulation.
#[derive(Debug, Clone, Copy)]
pub struct GoalTuning {
    pub coeff_a: f64,
    pub coeff_b: f64,
    pub energy: EnergyCosts,
    pub hazard_growth_per_s: f64,
    pub fire_multiplier: f64,
}

/// One QoS class's network-wide CPN state: an RNN, a routing table and a
/// threshold per non-exit node.
#[derive(Debug, Clone)]
pub struct CpnClassField {
    pub kind: GoalKind,
    /// Speed used when scoring routes for this class.
    pub speed_cm_s: f64,
    nodes: Vec<Option<CpnNodeState>>,
    hop_limits: Vec<u32>,
}

impl CpnClassField {
    pub fn new(
        graph: &BuildingGraph,
        params: &CpnParams,
        kind: GoalKind,
        speed_cm_s: f64,
        threshold_smoothing: f64,
    ) -> Result<Self, SimError> {
        let mut nodes = Vec::with_capacity(graph.node_count());
        let mut hop_limits = Vec::with_capacity(graph.node_count());
        for node in graph.nodes() {
            hop_limits.push(hop_limit_for(node, params)?);
            if node.is_exit {
                nodes.push(None);
            } else {
                nodes.push(Some(CpnNodeState {
                    rnn: RnnState::uniform(graph.degree(node.id)),
                    table: RoutingTable::new(params.table_size, params.route_timeout_s),
                    threshold: ThresholdState::new(threshold_smoothing)
                        .map_err(|e| SimError::Config(e.to_string()))?,
                }));
            }
        }
        Ok(CpnClassField {
            kind,
            speed_cm_s,
            nodes,
            hop_limits,
        })
    }

    pub fn node_state(&self, id: NodeId) -> Option<&CpnNodeState> {
        self.nodes[id.index()].as_ref()
    }

    /// Walk one smart packet from `origin` to an exit; `None` when dropped.
    fn walk(
        &self,
        graph: &BuildingGraph,
        origin: NodeId,
        drift: f64,
        rng: &mut ChaCha8Rng,
        sample: &mut impl FnMut(NodeId) -> Measurement,
    ) -> Option<Ack> {
        if graph.is_exit(origin) {
            return None;
        }
        let mut sp = SmartPacket::new(
            origin,
            self.kind,
            self.hop_limits[origin.index()],
            sample(origin),
        );
        loop {
            if graph.is_exit(sp.current()) {
                return Some(Ack::from_packet(&sp));
            }
            let state = self.nodes[sp.current().index()]
                .as_ref()
                .expect("non-exit nodes carry CPN state");
            match step_smart_packet(&sp, graph, &state.rnn, rng, drift) {
                SpStep::Advance(next) => {
                    let m = sample(next);
                    sp.visit(next, m);
                }
                SpStep::ReachedExit => unreachable!("exit handled above"),
                SpStep::Dropped => return None,
            }
        }
    }

    /// Deliver an acknowledgement: every node on the route learns from its
    /// own suffix towards the exit.
    fn deliver(
        &mut self,
        graph: &BuildingGraph,
        ack: &Ack,
        hazard_arrival_s: &[f64],
        tuning: &GoalTuning,
        now_s: f64,
    ) {
        let n = graph.node_count();
        let mut burning = vec![false; n];
        let mut rho = vec![0.0; n];
        let mut queue = vec![0u32; n];
        for (node, m) in ack.route.nodes().iter().zip(&ack.measurements) {
            let i = node.index();
            burning[i] = m.fire_intensity > 0.0;
            rho[i] = m.rho;
            queue[i] = m.queue_len;
        }
        for pos in 0..ack.route.len().saturating_sub(1) {
            let node = ack.route.nodes()[pos];
            let Some(suffix) = ack.suffix(pos) else {
                continue;
            };
            let ctx = GoalContext {
                graph,
                burning: &burning,
                fire_multiplier: tuning.fire_multiplier,
                rho: &rho,
                current_queue: &queue,
                hazard_arrival_s,
                hazard_growth_per_s: tuning.hazard_growth_per_s,
                t_current_s: now_s,
                speed_cm_s: self.speed_cm_s,
                coeff_a: tuning.coeff_a,
                coeff_b: tuning.coeff_b,
            };
            let Ok(g) = evaluate(self.kind, &suffix.route, &ctx, &tuning.energy) else {
                continue;
            };
            let Some(state) = self.nodes[node.index()].as_mut() else {
                continue;
            };
            let res = process_ack(
                node,
                graph,
                &mut state.table,
                &mut state.rnn,
                &mut state.threshold,
                &suffix,
                |_| g,
                now_s,
            );
            debug_assert!(res.is_ok(), "suffix ack must apply: {res:?}");
        }
    }

    /// Pre-ignition discovery: `rounds` packets per non-exit node, emitted
    /// round-robin at time zero with idle sensor readings.
    pub fn warm_up(
        &mut self,
        graph: &BuildingGraph,
        rounds: u32,
        drift: f64,
        tuning: &GoalTuning,
        rng: &mut ChaCha8Rng,
    ) {
        let no_hazard = vec![f64::INFINITY; graph.node_count()];
        let mut idle = |_: NodeId| Measurement {
            t_s: 0.0,
            fire_intensity: 0.0,
            queue_len: 0,
            arrival_rate: 0.0,
            rho: 0.0,
        };
        for _ in 0..rounds {
            for raw in 0..graph.node_count() {
                let origin = NodeId(raw as u32);
                if graph.is_exit(origin) {
                    continue;
                }
                if let Some(ack) = self.walk(graph, origin, drift, rng, &mut idle) {
                    self.deliver(graph, &ack, &no_hazard, tuning, 0.0);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// events

#[derive(Debug)]
enum EventKind {
    FireAlarm,
    HazardTick,
    AckDelivery { class: usize, ack: Ack },
    SpEmission { node: NodeId, class: usize, periodic: bool },
    EdgeDeparture { evacuee: usize },
    NodeArrival { evacuee: usize, node: NodeId },
}

impl EventKind {
    // Ties at one instant resolve: alarm, hazard, learning, exploration,
    // departures (freeing capacity), then arrivals (claiming it).
    fn priority(&self) -> u8 {
        match self {
            EventKind::FireAlarm => 0,
            EventKind::HazardTick => 1,
            EventKind::AckDelivery { .. } => 2,
            EventKind::SpEmission { .. } => 3,
            EventKind::EdgeDeparture { .. } => 4,
            EventKind::NodeArrival { .. } => 5,
        }
    }
}

#[derive(Debug)]
struct Event {
    t: f64,
    prio: u8,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Event {}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.prio.cmp(&other.prio))
            .then(self.seq.cmp(&other.seq))
    }
}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

// ---------------------------------------------------------------------------
// evacuees and node runtime

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Waiting,
    InService,
    Queued,
    OnEdge,
    Evacuated,
    Dead,
}

#[derive(Debug)]
struct Evacuee {
    category: Category,
    speed_cm_s: f64,
    health: f64,
    energy: f64,
    brakes: u32,
    distance_cm: f64,
    turn_degrees: f64,
    at: NodeId,
    prev: Option<NodeId>,
    edge_from: Option<NodeId>,
    route: Vec<NodeId>,
    hops_since_switch: u32,
    route_switches: u32,
    observed_burning: HashSet<(u32, u32)>,
    phase: Phase,
    exit_time_s: Option<f64>,
    trajectory: Vec<NodeId>,
}

#[derive(Debug)]
struct NodeRt {
    occupants: u32,
    waitq: VecDeque<usize>,
    stats: NodeQueueStats,
}

fn edge_key(a: NodeId, b: NodeId) -> (u32, u32) {
    if a.0 <= b.0 {
        (a.0, b.0)
    } else {
        (b.0, a.0)
    }
}

// ---------------------------------------------------------------------------
// the simulation proper

struct Sim<'a> {
    graph: &'a BuildingGraph,
    cfg: &'a TrialConfig,
    now: f64,
    seq: u64,
    heap: BinaryHeap<Reverse<Event>>,
    evacuees: Vec<Evacuee>,
    nodes: Vec<NodeRt>,
    hazard: HazardState,
    alarm_fired: bool,
    inside: usize,
    evacuated: usize,
    dead: usize,
    congestion_events: u64,
    cpn: Vec<CpnClassField>,
    /// Class index per category (only meaningful under the CPN policy).
    class_of: Vec<usize>,
    tuning: GoalTuning,
    assisted_cache: Option<(usize, ExitField)>,
    no_hazard: Vec<f64>,
    rng: ChaCha8Rng,
    truncated: bool,
}

impl<'a> Sim<'a> {
    fn new(graph: &'a BuildingGraph, cfg: &'a TrialConfig, seed: u64) -> Result<Self, SimError> {
        cfg.validate(graph)?;
        let n = graph.node_count();

        // category allocation by largest remainder, then placement
        let weight_sum: f64 = cfg.category_mix.iter().map(|&(_, w)| w).sum();
        let mut alloc: Vec<(Category, f64)> = cfg
            .category_mix
            .iter()
            .map(|&(c, w)| (c, w / weight_sum * cfg.evacuee_count as f64))
            .collect();
        let mut counts: Vec<(Category, usize)> =
            alloc.iter().map(|&(c, x)| (c, x.floor() as usize)).collect();
        let mut assigned: usize = counts.iter().map(|&(_, k)| k).sum();
        alloc.iter_mut().for_each(|e| e.1 -= e.1.floor());
        while assigned < cfg.evacuee_count {
            let (best, _) = alloc
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .unwrap();
            counts[best].1 += 1;
            alloc[best].1 = -1.0;
            assigned += 1;
        }

        let mut placer = placement_rng(seed, cfg.evacuee_count);
        let candidates: Vec<NodeId> = graph
            .nodes()
            .iter()
            .filter(|nd| !nd.is_exit)
            .map(|nd| nd.id)
            .collect();
        let mut evacuees = Vec::with_capacity(cfg.evacuee_count);
        let mut placement_cursor = 0usize;
        for &(category, how_many) in &counts {
            for _ in 0..how_many {
                let start = match &cfg.placements {
                    Some(list) => {
                        let node = list[placement_cursor % list.len()];
                        placement_cursor += 1;
                        node
                    }
                    None => candidates[placer.gen_range(0..candidates.len())],
                };
                evacuees.push(Evacuee {
                    category,
                    speed_cm_s: cfg.speeds.get(category),
                    health: 100.0,
                    energy: 0.0,
                    brakes: 0,
                    distance_cm: 0.0,
                    turn_degrees: 0.0,
                    at: start,
                    prev: None,
                    edge_from: None,
                    route: Vec::new(),
                    hops_since_switch: 0,
                    route_switches: 0,
                    observed_burning: HashSet::new(),
                    phase: Phase::Waiting,
                    exit_time_s: None,
                    trajectory: Vec::new(),
                });
            }
        }

        let nodes = (0..n)
            .map(|_| NodeRt {
                occupants: 0,
                waitq: VecDeque::new(),
                stats: NodeQueueStats::new(cfg.service_rate, cfg.arrival_smoothing),
            })
            .collect();

        let tuning = GoalTuning {
            coeff_a: cfg.coeff_a,
            coeff_b: cfg.coeff_b,
            energy: cfg.energy,
            hazard_growth_per_s: cfg.hazard.growth_rate_per_s,
            fire_multiplier: cfg.hazard.fire_multiplier,
        };

        // one CPN field per distinct active goal class
        let mut cpn = Vec::new();
        let mut class_of = vec![0usize; Category::ALL.len()];
        if cfg.policy == Policy::Cpn {
            let mut kinds: Vec<GoalKind> = counts
                .iter()
                .filter(|&&(_, k)| k > 0)
                .map(|&(c, _)| cfg.goal_for(c))
                .collect();
            kinds.sort();
            kinds.dedup();
            for kind in kinds {
                // score with the slowest speed among the categories served
                let speed = counts
                    .iter()
                    .filter(|&&(c, k)| k > 0 && cfg.goal_for(c) == kind)
                    .map(|&(c, _)| cfg.speeds.get(c))
                    .fold(f64::INFINITY, f64::min);
                cpn.push(CpnClassField::new(
                    graph,
                    &cfg.cpn,
                    kind,
                    speed,
                    cfg.threshold_smoothing,
                )?);
            }
            for (ci, c) in Category::ALL.iter().enumerate() {
                class_of[ci] = cpn
                    .iter()
                    .position(|f| f.kind == cfg.goal_for(*c))
                    .unwrap_or(0);
            }
        }

        let hazard = HazardState::new(graph, cfg.ignition_node, cfg.ignition_time_s, &cfg.hazard);

        Ok(Sim {
            graph,
            cfg,
            now: 0.0,
            seq: 0,
            heap: BinaryHeap::new(),
            evacuees,
            nodes,
            hazard,
            alarm_fired: false,
            inside: 0,
            evacuated: 0,
            dead: 0,
            congestion_events: 0,
            cpn,
            class_of,
            tuning,
            assisted_cache: None,
            no_hazard: vec![f64::INFINITY; n],
            rng: dynamics_rng(seed, &cfg.cell_label()),
            truncated: false,
        })
    }

    fn push(&mut self, t: f64, kind: EventKind) {
        let prio = kind.priority();
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(Event { t, prio, seq, kind }));
    }

    fn service_time(&self) -> f64 {
        1.0 / self.cfg.service_rate
    }

    fn class_index(&self, c: Category) -> usize {
        self.class_of[Category::ALL.iter().position(|&x| x == c).unwrap()]
    }

    fn run(&mut self) -> TrialMetrics {
        self.inside = self.evacuees.len();

        if self.cfg.policy == Policy::Cpn {
            // Warm-up burst: rounds interleave across nodes so later packets
            // ride on earlier learning.
            for round in 0..self.cfg.cpn.sp_warmup {
                let _ = round;
                for raw in 0..self.graph.node_count() {
                    let node = NodeId(raw as u32);
                    if !self.graph.is_exit(node) {
                        for class in 0..self.cpn.len() {
                            self.push(0.0, EventKind::SpEmission {
                                node,
                                class,
                                periodic: false,
                            });
                        }
                    }
                }
            }
        }
        self.push(self.cfg.ignition_time_s, EventKind::FireAlarm);

        while let Some(Reverse(ev)) = self.heap.pop() {
            if ev.t > self.cfg.time_cap_s {
                self.truncated = self.inside > 0;
                break;
            }
            self.now = ev.t;
            match ev.kind {
                EventKind::FireAlarm => self.handle_alarm(),
                EventKind::HazardTick => self.handle_tick(),
                EventKind::AckDelivery { class, ack } => {
                    let view: &[f64] = if self.alarm_fired {
                        &self.hazard.arrival_s
                    } else {
                        &self.no_hazard
                    };
                    self.cpn[class].deliver(self.graph, &ack, view, &self.tuning, self.now);
                }
                EventKind::SpEmission { node, class, periodic } => {
                    self.handle_emission(node, class, periodic)
                }
                EventKind::EdgeDeparture { evacuee } => self.handle_departure(evacuee),
                EventKind::NodeArrival { evacuee, node } => self.handle_arrival(evacuee, node),
            }
            debug_assert!(self.conservation_holds());
            if self.alarm_fired && self.inside == 0 {
                break;
            }
        }
        self.collect_metrics()
    }

    fn conservation_holds(&self) -> bool {
        self.evacuated + self.dead + self.inside == self.evacuees.len()
    }

    fn handle_alarm(&mut self) {
        self.alarm_fired = true;
        let t = self.now;
        self.push(t + self.cfg.hazard_tick_s, EventKind::HazardTick);
        for ei in 0..self.evacuees.len() {
            let node = self.evacuees[ei].at;
            self.push(t, EventKind::NodeArrival { evacuee: ei, node });
        }
        if self.cfg.policy == Policy::Cpn {
            for raw in 0..self.graph.node_count() {
                let node = NodeId(raw as u32);
                if !self.graph.is_exit(node) {
                    for class in 0..self.cpn.len() {
                        self.push(t + self.cfg.cpn.sp_period_s, EventKind::SpEmission {
                            node,
                            class,
                            periodic: true,
                        });
                    }
                }
            }
        }
    }

    fn handle_tick(&mut self) {
        let t = self.now;
        self.hazard.advance(t, &self.cfg.hazard);
        let dt = self.cfg.hazard_tick_s;
        for ei in 0..self.evacuees.len() {
            let (phase, at, category, health) = {
                let e = &self.evacuees[ei];
                (e.phase, e.at, e.category, e.health)
            };
            if !matches!(phase, Phase::InService | Phase::Queued) {
                continue;
            }
            let intensity = self.hazard.intensity[at.index()];
            if intensity <= 0.0 {
                continue;
            }
            let new_health = apply_hazard_damage(
                health,
                intensity,
                dt,
                self.cfg.damage_rate,
                category.damage_multiplier(),
            );
            self.evacuees[ei].health = new_health;
            if new_health <= 0.0 {
                self.kill(ei);
            }
        }
        if self.inside > 0 && t + dt <= self.cfg.time_cap_s {
            self.push(t + dt, EventKind::HazardTick);
        }
    }

    fn kill(&mut self, ei: usize) {
        let (phase, at) = (self.evacuees[ei].phase, self.evacuees[ei].at);
        match phase {
            Phase::InService => {
                self.nodes[at.index()].occupants -= 1;
                self.admit_from_queue(at);
            }
            Phase::Queued => {
                self.nodes[at.index()].waitq.retain(|&x| x != ei);
            }
            _ => {}
        }
        let e = &mut self.evacuees[ei];
        e.phase = Phase::Dead;
        e.health = 0.0;
        self.inside -= 1;
        self.dead += 1;
    }

    fn admit_from_queue(&mut self, node: NodeId) {
        let cap = self.graph.node(node).capacity;
        while self.nodes[node.index()].occupants < cap {
            let Some(next) = self.nodes[node.index()].waitq.pop_front() else {
                return;
            };
            if self.evacuees[next].phase != Phase::Queued {
                continue;
            }
            self.nodes[node.index()].occupants += 1;
            self.evacuees[next].phase = Phase::InService;
            let t = self.now + self.service_time();
            self.push(t, EventKind::EdgeDeparture { evacuee: next });
        }
    }

    fn note_arrival(&mut self, node: NodeId, t: f64) {
        let stats = &mut self.nodes[node.index()].stats;
        let effective = match stats.last_arrival_s() {
            Some(prev) => t.max(prev + MIN_ARRIVAL_GAP_S),
            None => t,
        };
        stats
            .record_arrival(effective)
            .expect("sequenced arrivals are strictly increasing");
    }

    fn handle_arrival(&mut self, ei: usize, node: NodeId) {
        if self.evacuees[ei].phase == Phase::Dead {
            return;
        }
        let t = self.now;
        // close out the edge traversal
        if let Some(from) = self.evacuees[ei].edge_from {
            let len = self
                .graph
                .edge_between(from, node)
                .expect("edges only to neighbors")
                .length_cm;
            let per_cm = self.cfg.energy.per_cm;
            let e = &mut self.evacuees[ei];
            e.distance_cm += len;
            e.energy += per_cm * len;
            e.prev = Some(from);
            e.edge_from = None;
            e.hops_since_switch = e.hops_since_switch.saturating_add(1);
        }
        self.evacuees[ei].at = node;
        self.evacuees[ei].trajectory.push(node);
        self.note_arrival(node, t);

        if self.graph.is_exit(node) {
            let e = &mut self.evacuees[ei];
            e.phase = Phase::Evacuated;
            e.exit_time_s = Some(t);
            self.inside -= 1;
            self.evacuated += 1;
            return;
        }
        let cap = self.graph.node(node).capacity;
        if self.nodes[node.index()].occupants < cap {
            self.nodes[node.index()].occupants += 1;
            self.evacuees[ei].phase = Phase::InService;
            let due = t + self.service_time();
            self.push(due, EventKind::EdgeDeparture { evacuee: ei });
        } else {
            self.nodes[node.index()].waitq.push_back(ei);
            let per_brake = self.cfg.energy.per_brake;
            let e = &mut self.evacuees[ei];
            e.phase = Phase::Queued;
            e.brakes += 1;
            e.energy += per_brake;
            self.congestion_events += 1;
        }
    }

    fn handle_departure(&mut self, ei: usize) {
        if self.evacuees[ei].phase != Phase::InService {
            return;
        }
        let at = self.evacuees[ei].at;
        let t = self.now;
        let next = match self.cfg.policy {
            Policy::Autonomous => self.autonomous_hop(ei, at),
            Policy::Dijkstra => self.assisted_hop(at),
            Policy::Cpn => self.cpn_hop(ei, at),
        };
        let Some(next) = next else {
            // nowhere to go: hold the spot and retry after another service
            self.push(t + self.service_time(), EventKind::EdgeDeparture { evacuee: ei });
            return;
        };
        debug_assert!(self.graph.edge_between(at, next).is_some());
        // turn geometry for the energy account
        let (per_deg, prev) = (self.cfg.energy.per_turn_degree, self.evacuees[ei].prev);
        if let Some(p) = prev {
            let angle = turn_angle_deg(self.graph, p, at, next);
            let e = &mut self.evacuees[ei];
            e.turn_degrees += angle;
            e.energy += per_deg * angle;
        }
        self.nodes[at.index()].occupants -= 1;
        self.admit_from_queue(at);
        let len = self.graph.edge_between(at, next).unwrap().length_cm;
        let e = &mut self.evacuees[ei];
        e.phase = Phase::OnEdge;
        e.edge_from = Some(at);
        let eta = t + len / e.speed_cm_s;
        self.push(eta, EventKind::NodeArrival { evacuee: ei, node: next });
    }

    /// Personal shortest path on the built-in map; re-routes only when the
    /// planned next hop is personally observed burning, excluding observed
    /// edges first and falling back to a fire-penalized search.
    fn autonomous_hop(&mut self, ei: usize, at: NodeId) -> Option<NodeId> {
        let t = self.now;
        let mut newly_observed: Vec<(u32, u32)> = Vec::new();
        for &(nbr, _) in self.graph.neighbors(at) {
            if self.hazard.is_burning(nbr, t) {
                newly_observed.push(edge_key(at, nbr));
            }
        }
        self.evacuees[ei].observed_burning.extend(newly_observed);

        let e = &self.evacuees[ei];
        let pos = e.route.iter().position(|&n| n == at);
        let planned = pos.and_then(|p| e.route.get(p + 1)).copied();
        let needs_reroute = match planned {
            Some(next) => e.observed_burning.contains(&edge_key(at, next)),
            None => true,
        };
        if !needs_reroute {
            return planned;
        }
        let observed = &self.evacuees[ei].observed_burning;
        let exclude = dijkstra_to_exit(self.graph, at, |edge| {
            if observed.contains(&edge_key(edge.a, edge.b)) {
                f64::INFINITY
            } else {
                edge.length_cm
            }
        });
        let chosen = match exclude {
            ExitSearch::Found { path, .. } => Some(path),
            ExitSearch::Trapped => {
                // no fire-free route known: least-bad path through the fire
                let m = self.cfg.hazard.fire_multiplier;
                match dijkstra_to_exit(self.graph, at, |edge| {
                    if observed.contains(&edge_key(edge.a, edge.b)) {
                        edge.length_cm * m
                    } else {
                        edge.length_cm
                    }
                }) {
                    ExitSearch::Found { path, .. } => Some(path),
                    ExitSearch::Trapped => None, // physically blocked: wait
                }
            }
        };
        let path = chosen?;
        let next = path.nodes().get(1).copied();
        let e = &mut self.evacuees[ei];
        e.route = path.0;
        e.route_switches += 1;
        next
    }

    /// Centralized advice: next hop of the effective-length shortest-path
    /// field, rebuilt whenever the burning set has changed.
    fn assisted_hop(&mut self, at: NodeId) -> Option<NodeId> {
        let t = self.now;
        let burned = self.hazard.burned_count(t);
        let stale = match &self.assisted_cache {
            Some((key, _)) => *key != burned,
            None => true,
        };
        if stale {
            let hazard = &self.hazard;
            let params = &self.cfg.hazard;
            let field = exit_field(self.graph, |edge| {
                edge.length_cm * hazard.edge_fire_factor(edge, t, params)
            });
            self.assisted_cache = Some((burned, field));
        }
        self.assisted_cache.as_ref().unwrap().1.next_hop[at.index()]
    }

    /// CPN advice: follow the assigned route until the movement depth allows
    /// a switch, then adopt the local table's best route. An empty table
    /// falls back to autonomous behavior.
    fn cpn_hop(&mut self, ei: usize, at: NodeId) -> Option<NodeId> {
        let e = &self.evacuees[ei];
        let pos = e.route.iter().position(|&n| n == at);
        let planned = pos.and_then(|p| e.route.get(p + 1)).copied();
        let switch_due = planned.is_none() || e.hops_since_switch >= self.cfg.movement_depth;
        if !switch_due {
            return planned;
        }
        let class = self.class_index(e.category);
        let best = self.cpn[class]
            .node_state(at)
            .and_then(|s| s.table.best())
            .map(|entry| entry.route.clone());
        match best {
            Some(route) => {
                debug_assert_eq!(route.nodes().first(), Some(&at));
                let next = route.nodes().get(1).copied();
                let e = &mut self.evacuees[ei];
                e.route = route.0;
                e.hops_since_switch = 0;
                e.route_switches += 1;
                next
            }
            None => self.autonomous_hop(ei, at),
        }
    }

    fn handle_emission(&mut self, node: NodeId, class: usize, periodic: bool) {
        let t = self.now;
        if periodic {
            if self.inside == 0 {
                return;
            }
            let next = t + self.cfg.cpn.sp_period_s;
            if next <= self.cfg.time_cap_s {
                self.push(next, EventKind::SpEmission { node, class, periodic });
            }
        }
        let drift = if self.alarm_fired {
            self.cfg.cpn.drift_fire
        } else {
            self.cfg.cpn.drift_prefire
        };
        let Sim {
            graph,
            cpn,
            nodes,
            hazard,
            rng,
            cfg,
            ..
        } = self;
        let field = &cpn[class];
        let mut sample = |v: NodeId| {
            let stats = &nodes[v.index()].stats;
            Measurement {
                t_s: t,
                fire_intensity: hazard.intensity_at(v, t, &cfg.hazard),
                queue_len: nodes[v.index()].waitq.len() as u32,
                arrival_rate: stats.arrival_rate(),
                rho: stats.utilization(),
            }
        };
        if let Some(ack) = field.walk(graph, node, drift, rng, &mut sample) {
            self.push(t, EventKind::AckDelivery { class, ack });
        }
    }

    fn collect_metrics(&self) -> TrialMetrics {
        let n = self.evacuees.len();
        let survivors: Vec<&Evacuee> = self
            .evacuees
            .iter()
            .filter(|e| e.phase == Phase::Evacuated)
            .collect();
        let deaths = self.evacuees.iter().filter(|e| e.phase == Phase::Dead).count();
        let survivor_fraction = if n == 0 {
            1.0
        } else {
            survivors.len() as f64 / n as f64
        };
        let avg_evac_time_s = if survivors.is_empty() {
            0.0
        } else {
            survivors
                .iter()
                .map(|e| e.exit_time_s.unwrap() - self.cfg.ignition_time_s)
                .sum::<f64>()
                / survivors.len() as f64
        };
        let avg_health = if n == 0 {
            100.0
        } else {
            self.evacuees.iter().map(|e| e.health).sum::<f64>() / n as f64
        };
        TrialMetrics {
            seed: 0, // filled by run_trial
            policy_label: self.cfg.policy.name().to_string(),
            evacuees: n,
            survivor_fraction,
            deaths,
            congestion_events: self.congestion_events,
            avg_evac_time_s,
            avg_health,
            total_energy: self.evacuees.iter().map(|e| e.energy).sum(),
            truncated: self.truncated,
        }
    }
}

/// Run one trial. Identical (graph, config, seed) yields identical metrics.
pub fn run_trial(
    graph: &BuildingGraph,
    cfg: &TrialConfig,
    seed: u64,
) -> Result<TrialMetrics, SimError> {
    let (metrics, _) = run_trial_traced(graph, cfg, seed)?;
    Ok(metrics)
}

/// Run one trial and keep per-evacuee traces for post-hoc verification.
pub fn run_trial_traced(
    graph: &BuildingGraph,
    cfg: &TrialConfig,
    seed: u64,
) -> Result<(TrialMetrics, Vec<EvacueeTrace>), SimError> {
    let mut sim = Sim::new(graph, cfg, seed)?;
    let mut metrics = sim.run();
    metrics.seed = seed;
    let traces = sim
        .evacuees
        .iter()
        .map(|e| EvacueeTrace {
            category: e.category,
            nodes: e.trajectory.clone(),
            brakes: e.brakes,
            distance_cm: e.distance_cm,
            turn_degrees: e.turn_degrees,
            energy: e.energy,
            health: e.health,
            evacuated: e.phase == Phase::Evacuated,
            dead: e.phase == Phase::Dead,
            route_switches: e.route_switches,
        })
        .collect();
    Ok((metrics, traces))
}

/// Run one trial and dump the final CPN state as CSV for inspection.
pub fn run_trial_with_rnn_dump(
    graph: &BuildingGraph,
    cfg: &TrialConfig,
    seed: u64,
) -> Result<(TrialMetrics, String), SimError> {
    let mut sim = Sim::new(graph, cfg, seed)?;
    let mut metrics = sim.run();
    metrics.seed = seed;
    let dump = dump_rnn_csv(&sim.cpn, graph);
    Ok((metrics, dump))
}

/// Dump the final CPN state of a trial as CSV (`node,i,j,w_plus,w_minus,q_i`)
/// for inspection. Only meaningful for the CPN policy.
pub fn dump_rnn_csv(fields: &[CpnClassField], graph: &BuildingGraph) -> String {
    let mut out = String::from("class,node,i,j,w_plus,w_minus,q_i\n");
    for field in fields {
        for raw in 0..graph.node_count() {
            let node = NodeId(raw as u32);
            let Some(state) = field.node_state(node) else {
                continue;
            };
            let n = state.rnn.neuron_count();
            for i in 0..n {
                for j in 0..n {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        field.kind,
                        node,
                        i,
                        j,
                        state.rnn.w_plus(i, j),
                        state.rnn.w_minus(i, j),
                        state.rnn.q()[i]
                    ));
                }
            }
        }
    }
    out
}

/// Warm up a fresh CPN field over the graph, outside any trial. Used by the
/// discovery benchmarks.
pub fn warm_up_field(
    graph: &BuildingGraph,
    params: &CpnParams,
    kind: GoalKind,
    speed_cm_s: f64,
    rounds: u32,
    seed: u64,
) -> Result<CpnClassField, SimError> {
    let mut field = CpnClassField::new(graph, params, kind, speed_cm_s, 0.4)?;
    let tuning = GoalTuning {
        coeff_a: 1.0,
        coeff_b: 1.0,
        energy: EnergyCosts::default(),
        hazard_growth_per_s: 0.0,
        fire_multiplier: 10.0 * graph.max_edge_length() * graph.node_count() as f64,
    };
    let mut rng = dynamics_rng(seed, "warmup");
    field.warm_up(graph, rounds, params.drift_prefire, &tuning, &mut rng);
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::building::parse;
    use crate::fixtures::default_building;

    fn quiet_hazard(graph: &BuildingGraph) -> HazardParams {
        HazardParams {
            spread_rate_cm_s: 1e-6,
            growth_rate_per_s: 0.0,
            initial_intensity: 0.0,
            fire_multiplier: 10.0 * graph.max_edge_length() * graph.node_count() as f64,
        }
    }

    fn line_graph() -> BuildingGraph {
        parse(
            "\
building l
node 0 0 0 0 1 1
node 1 150 0 0 1 3
node 2 300 0 0 1 3 exit
edge 0 1 150
edge 1 2 150
",
        )
        .unwrap()
    }

    #[test]
    fn zero_evacuees_is_vacuous_success() {
        let g = line_graph();
        let mut cfg = TrialConfig::new(&g);
        cfg.policy = Policy::Autonomous;
        cfg.evacuee_count = 0;
        cfg.ignition_node = NodeId(0);
        cfg.hazard = quiet_hazard(&g);
        let m = run_trial(&g, &cfg, 1).unwrap();
        assert_eq!(m.survivor_fraction, 1.0);
        assert_eq!(m.congestion_events, 0);
        assert_eq!(m.deaths, 0);
    }

    #[test]
    fn evacuee_starting_on_exit_leaves_instantly() {
        let g = line_graph();
        let mut cfg = TrialConfig::new(&g);
        cfg.policy = Policy::Autonomous;
        cfg.evacuee_count = 1;
        cfg.placements = Some(vec![NodeId(2)]);
        cfg.ignition_node = NodeId(0);
        cfg.hazard = quiet_hazard(&g);
        let m = run_trial(&g, &cfg, 1).unwrap();
        assert_eq!(m.survivor_fraction, 1.0);
        assert_eq!(m.avg_evac_time_s, 0.0);
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let g = default_building();
        let mut cfg = TrialConfig::new(&g);
        cfg.evacuee_count = 20;
        cfg.time_cap_s = 300.0;
        let a = run_trial(&g, &cfg, 42).unwrap();
        let b = run_trial(&g, &cfg, 42).unwrap();
        assert_eq!(a.csv_row(), b.csv_row());
        let c = run_trial(&g, &cfg, 43).unwrap();
        assert!(a.csv_row() != c.csv_row() || a == c);
    }

    #[test]
    fn congestion_counted_once_per_wait_episode() {
        // Capacity-1 start node, three evacuees: one admitted, two queued.
        let g = line_graph();
        let mut cfg = TrialConfig::new(&g);
        cfg.policy = Policy::Autonomous;
        cfg.evacuee_count = 3;
        cfg.placements = Some(vec![NodeId(0), NodeId(0), NodeId(0)]);
        cfg.ignition_node = NodeId(2);
        cfg.hazard = quiet_hazard(&g);
        let (m, traces) = run_trial_traced(&g, &cfg, 7).unwrap();
        assert_eq!(m.survivor_fraction, 1.0);
        assert_eq!(m.congestion_events, 2);
        let total_brakes: u32 = traces.iter().map(|t| t.brakes).sum();
        assert_eq!(total_brakes, 2);
    }

    #[test]
    fn hazard_damage_clamps_and_scales() {
        assert_eq!(apply_hazard_damage(100.0, 0.0, 1.0, 5.0, 1.0), 100.0);
        assert_eq!(apply_hazard_damage(10.0, 3.0, 1.0, 5.0, 1.0), 0.0);
        let normal = apply_hazard_damage(100.0, 2.0, 1.0, 5.0, Category::Normal.damage_multiplier());
        let sick = apply_hazard_damage(100.0, 2.0, 1.0, 5.0, Category::Sick.damage_multiplier());
        assert_eq!(100.0 - normal, 10.0);
        assert_eq!(100.0 - sick, 15.0);
    }

    #[test]
    fn autonomous_matches_assisted_without_fire() {
        // Ignition parked on a far room node with zero growth: no damage and
        // no edge on any sensible route is affected.
        let g = default_building();
        let mut base = TrialConfig::new(&g);
        base.evacuee_count = 1;
        base.ignition_node = NodeId(117); // a third-floor room
        base.hazard = quiet_hazard(&g);
        base.placements = Some(vec![NodeId(25)]); // first-floor room
        let mut auto_cfg = base.clone();
        auto_cfg.policy = Policy::Autonomous;
        let mut dij_cfg = base;
        dij_cfg.policy = Policy::Dijkstra;
        let (_, ta) = run_trial_traced(&g, &auto_cfg, 3).unwrap();
        let (_, td) = run_trial_traced(&g, &dij_cfg, 3).unwrap();
        assert_eq!(ta[0].nodes, td[0].nodes);
        assert!(ta[0].evacuated && td[0].evacuated);
    }

    #[test]
    fn autonomous_reroutes_around_observed_fire() {
        // Diamond: 0-1-4 is short, 0-2-3-4 is long. Fire sits on node 1 from
        // t=0; the evacuee at 0 must take the long way round.
        let g = parse(
            "\
building d
node 0 0 0 0 1 3
node 1 500 0 0 1 3
node 2 0 500 0 1 3
node 3 500 500 0 1 3
node 4 1000 0 0 1 3 exit
edge 0 1 500
edge 1 4 500
edge 0 2 500
edge 2 3 500
edge 3 4 710
",
        )
        .unwrap();
        let mut cfg = TrialConfig::new(&g);
        cfg.policy = Policy::Autonomous;
        cfg.evacuee_count = 1;
        cfg.placements = Some(vec![NodeId(0)]);
        cfg.ignition_node = NodeId(1);
        cfg.ignition_time_s = 0.0;
        cfg.hazard = HazardParams {
            spread_rate_cm_s: 1e-6, // fire stays at node 1
            growth_rate_per_s: 0.0,
            initial_intensity: 0.0,
            fire_multiplier: 1e5,
        };
        let (m, t) = run_trial_traced(&g, &cfg, 1).unwrap();
        assert_eq!(m.survivor_fraction, 1.0);
        assert_eq!(t[0].nodes, vec![NodeId(0), NodeId(2), NodeId(3), NodeId(4)]);
    }

    #[test]
    fn autonomous_walks_into_fire_and_dies_when_blocked() {
        // Single corridor to the exit, fully ablaze with fierce growth: the
        // evacuee keeps trying the least-bad route and perishes.
        let g = parse(
            "\
building b
node 0 0 0 0 1 3
node 1 500 0 0 1 3
node 2 1000 0 0 1 3 exit
edge 0 1 500
edge 1 2 500
",
        )
        .unwrap();
        let mut cfg = TrialConfig::new(&g);
        cfg.policy = Policy::Autonomous;
        cfg.evacuee_count = 1;
        cfg.placements = Some(vec![NodeId(0)]);
        cfg.ignition_node = NodeId(1);
        cfg.ignition_time_s = 0.0;
        cfg.hazard = HazardParams {
            spread_rate_cm_s: 2000.0,
            growth_rate_per_s: 50.0,
            initial_intensity: 10.0,
            fire_multiplier: 1e5,
        };
        cfg.damage_rate = 20.0;
        let m = run_trial(&g, &cfg, 1).unwrap();
        assert_eq!(m.deaths, 1);
        assert_eq!(m.survivor_fraction, 0.0);
    }

    #[test]
    fn assisted_advice_is_shared_and_static_without_changes() {
        let g = default_building();
        let mut cfg = TrialConfig::new(&g);
        cfg.policy = Policy::Dijkstra;
        cfg.evacuee_count = 2;
        cfg.placements = Some(vec![NodeId(25), NodeId(25)]);
        cfg.ignition_node = NodeId(117);
        cfg.hazard = quiet_hazard(&g);
        let (_, t) = run_trial_traced(&g, &cfg, 5).unwrap();
        // Centralized advice is a function of the node, so co-located
        // evacuees walk the same route.
        assert_eq!(t[0].nodes, t[1].nodes);
    }

    #[test]
    fn assisted_reroutes_when_fire_cuts_the_short_corridor() {
        // Two corridors; fire reaches the short one mid-run and the advice
        // flips to the long one. Matches a fresh effective-length field.
        let g = parse(
            "\
building two
node 0 0 0 0 1 3
node 1 800 0 0 1 3
node 2 1600 0 0 1 3 exit
node 3 0 900 0 1 3
node 4 800 900 0 1 3
edge 0 1 800
edge 1 2 800
edge 0 3 900
edge 3 4 800
edge 4 2 1200
",
        )
        .unwrap();
        let mut cfg = TrialConfig::new(&g);
        cfg.policy = Policy::Dijkstra;
        cfg.evacuee_count = 1;
        cfg.speeds.normal = 100.0;
        cfg.placements = Some(vec![NodeId(0)]);
        cfg.ignition_node = NodeId(2);
        cfg.ignition_time_s = 0.0;
        // Fire reaches node 1 at t = 800/200 = 4 s, while the evacuee is
        // still in service at node 0 or walking 0->1... make it reach node 1
        // before the evacuee commits to edge 1->2 but after departure from 0.
        cfg.hazard = HazardParams {
            spread_rate_cm_s: 90.0, // node 1 burns at ~8.9 s
            growth_rate_per_s: 0.0,
            initial_intensity: 0.0,
            fire_multiplier: 1e5,
        };
        let (m, t) = run_trial_traced(&g, &cfg, 1).unwrap();
        assert_eq!(m.survivor_fraction, 1.0);
        // Departure from node 0 happens at t = 1 s when nothing burns yet,
        // so the first hop is 0 -> 1 (short corridor). The evacuee reaches
        // node 1 at t = 9 s when it is already burning; the refreshed field
        // routes onward travel through whatever is now cheapest.
        let expect_first = NodeId(1);
        assert_eq!(t[0].nodes[1], expect_first);
        // Oracle: at the decision instant at node 1 (t = 10 s after one
        // service second), recompute the effective field and compare hops.
        let hz = HazardState::new(&g, NodeId(2), 0.0, &cfg.hazard);
        let t_decision = 10.0;
        let field = exit_field(&g, |e| {
            e.length_cm * hz.edge_fire_factor(e, t_decision, &cfg.hazard)
        });
        assert_eq!(t[0].nodes[2], field.next_hop[1].unwrap());
    }

    #[test]
    fn conservation_no_teleport_and_energy_identity() {
        let g = default_building();
        let mut cfg = TrialConfig::new(&g);
        cfg.evacuee_count = 30;
        cfg.time_cap_s = 400.0;
        for seed in [1u64, 2, 3] {
            let (m, traces) = run_trial_traced(&g, &cfg, seed).unwrap();
            let evacuated = traces.iter().filter(|t| t.evacuated).count();
            let dead = traces.iter().filter(|t| t.dead).count();
            if !m.truncated {
                assert_eq!(evacuated + dead, 30);
            }
            for tr in &traces {
                for w in tr.nodes.windows(2) {
                    assert!(
                        g.edge_between(w[0], w[1]).is_some(),
                        "teleport {:?}",
                        w
                    );
                }
                // energy identity on the realized trajectory
                let mut dist = 0.0;
                for w in tr.nodes.windows(2) {
                    dist += g.edge_between(w[0], w[1]).unwrap().length_cm;
                }
                let mut turns = 0.0;
                for w in tr.nodes.windows(3) {
                    turns += turn_angle_deg(&g, w[0], w[1], w[2]);
                }
                assert!((dist - tr.distance_cm).abs() < 1e-6);
                assert!((turns - tr.turn_degrees).abs() < 1e-6);
                let expect = tr.brakes as f64 * cfg.energy.per_brake
                    + dist * cfg.energy.per_cm
                    + turns * cfg.energy.per_turn_degree;
                assert!(
                    (expect - tr.energy).abs() < 1e-6,
                    "energy {} vs {}",
                    tr.energy,
                    expect
                );
            }
        }
    }

    #[test]
    fn movement_depth_gates_route_adoption() {
        let g = default_building();
        let mut counts = Vec::new();
        for depth in [1u32, 3, 1000] {
            let mut cfg = TrialConfig::new(&g);
            cfg.evacuee_count = 20;
            cfg.movement_depth = depth;
            cfg.time_cap_s = 400.0;
            let (_, traces) = run_trial_traced(&g, &cfg, 11).unwrap();
            let switches: u32 = traces.iter().map(|t| t.route_switches).sum();
            let hops: usize = traces.iter().map(|t| t.nodes.len().saturating_sub(1)).sum();
            counts.push((depth, switches, hops));
        }
        // More depth, fewer route adoptions.
        assert!(counts[0].1 > counts[1].1, "{counts:?}");
        assert!(counts[1].1 > counts[2].1, "{counts:?}");
    }

    #[test]
    fn cell_label_distinguishes_cells() {
        let g = line_graph();
        let mut a = TrialConfig::new(&g);
        let mut b = a.clone();
        a.movement_depth = 1;
        b.movement_depth = 3;
        assert_ne!(a.cell_label(), b.cell_label());
    }
}
