//! The four QoS goal evaluators mapping a candidate path plus a context
//! snapshot to a scalar cost G, and the reward R = 1/G that drives learning.
//!
//! Distance is the effective (fire-penalized) length. Time adds predicted
//! and standing queueing delays. Energy charges braking events, distance and
//! turn angles. Safety adds the forecast hazard exposure at every node the
//! fire beats the evacuee to.

use thiserror::Error;

use crate::building::{BuildingError, BuildingGraph, NodeId, Path};
use crate::queueing::{self, expected_queue_length, NodeLoadView};

/// Cap applied to rewards; covers G = 0 (already at an exit).
pub const REWARD_CAP: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GoalKind {
    Distance,
    Time,
    Energy,
    Safety,
}

impl GoalKind {
    pub const ALL: [GoalKind; 4] = [
        GoalKind::Distance,
        GoalKind::Time,
        GoalKind::Energy,
        GoalKind::Safety,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GoalKind::Distance => "distance",
            GoalKind::Time => "time",
            GoalKind::Energy => "energy",
            GoalKind::Safety => "safety",
        }
    }

    pub fn from_name(s: &str) -> Option<GoalKind> {
        match s {
            "distance" => Some(GoalKind::Distance),
            "time" => Some(GoalKind::Time),
            "energy" => Some(GoalKind::Energy),
            "safety" => Some(GoalKind::Safety),
            _ => None,
        }
    }
}

impl std::fmt::Display for GoalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum GoalError {
    #[error(transparent)]
    Path(#[from] BuildingError),
    #[error("goal value must be non-negative (got {0})")]
    NegativeGoal(f64),
}

/// Energy cost constants: per braking event, per centimetre travelled, per
/// degree of turn.
#[derive(Debug, Clone, Copy)]
pub struct EnergyCosts {
    pub per_brake: f64,
    pub per_cm: f64,
    pub per_turn_degree: f64,
}

impl Default for EnergyCosts {
    fn default() -> Self {
        EnergyCosts {
            per_brake: 50.0,
            per_cm: 1.0,
            per_turn_degree: 2.0,
        }
    }
}

/// Everything a goal evaluation reads, snapshotted at one instant. Slices
/// are dense over node ids; entries for nodes off the path are never read.
#[derive(Debug, Clone, Copy)]
pub struct GoalContext<'a> {
    pub graph: &'a BuildingGraph,
    /// Whether each node counts as fire-affected in this snapshot.
    pub burning: &'a [bool],
    pub fire_multiplier: f64,
    pub rho: &'a [f64],
    pub current_queue: &'a [u32],
    /// Forecast hazard arrival time per node, absolute seconds; infinity
    /// where the hazard never arrives.
    pub hazard_arrival_s: &'a [f64],
    pub hazard_growth_per_s: f64,
    pub t_current_s: f64,
    pub speed_cm_s: f64,
    /// Coefficients between queue lengths and waiting time, seconds/person.
    pub coeff_a: f64,
    pub coeff_b: f64,
}

impl<'a> GoalContext<'a> {
    fn effective_edge_length(&self, a: NodeId, b: NodeId) -> Result<f64, BuildingError> {
        let edge = self.graph.edge_between(a, b).ok_or_else(|| {
            BuildingError::InvalidPath(format!("nodes {} and {} are not adjacent", a, b))
        })?;
        let factor = if self.burning[a.index()] || self.burning[b.index()] {
            self.fire_multiplier
        } else {
            1.0
        };
        Ok(edge.length_cm * factor)
    }

    fn loads(&self) -> NodeLoadView<'a> {
        NodeLoadView {
            rho: self.rho,
            current_queue: self.current_queue,
        }
    }
}

/// Effective length of the path under the snapshot's fire state.
pub fn goal_distance(p: &Path, ctx: &GoalContext) -> Result<f64, GoalError> {
    if p.is_empty() {
        return Err(GoalError::Path(BuildingError::InvalidPath(
            "empty path".into(),
        )));
    }
    let mut total = 0.0;
    for w in p.nodes().windows(2) {
        total += ctx.effective_edge_length(w[0], w[1])?;
    }
    Ok(total)
}

/// Forecast time cost: per edge, effective length over speed, the expected
/// queueing delay at the edge's source, and any standing queue at the source
/// that outlasts the evacuee's arrival at the next node.
///
/// The arrival times feeding the standing-queue clamp are the congestion-free
/// ones (edge travel plus expected queueing delay). Folding the standing wait
/// into the arrival time first would cancel the clamp term identically.
pub fn goal_time(p: &Path, ctx: &GoalContext) -> Result<f64, GoalError> {
    if p.is_empty() {
        return Err(GoalError::Path(BuildingError::InvalidPath(
            "empty path".into(),
        )));
    }
    let mut total = 0.0;
    let mut eta = 0.0;
    for w in p.nodes().windows(2) {
        let source = w[0].index();
        let edge = ctx.graph.edge_between(w[0], w[1]).ok_or_else(|| {
            BuildingError::InvalidPath(format!("nodes {} and {} are not adjacent", w[0], w[1]))
        })?;
        let node_delay = ctx.coeff_a * expected_queue_length(ctx.rho[source]).value;
        eta += edge.length_cm / ctx.speed_cm_s + node_delay;
        total += ctx.effective_edge_length(w[0], w[1])? / ctx.speed_cm_s;
        total += node_delay;
        let standing = ctx.coeff_b * ctx.current_queue[source] as f64;
        total += (standing - eta).max(0.0);
    }
    Ok(total)
}

/// Energy cost: braking events from the congestion forecast, distance, and
/// turn angles at interior nodes.
pub fn goal_energy(p: &Path, ctx: &GoalContext, costs: &EnergyCosts) -> Result<f64, GoalError> {
    let forecast = queueing::predict_path_congestion(
        p,
        ctx.speed_cm_s,
        ctx.loads(),
        ctx.coeff_a,
        ctx.coeff_b,
        ctx.graph,
    )?;
    let mut total = costs.per_brake * forecast.c_total;
    for w in p.nodes().windows(2) {
        let edge = ctx.graph.edge_between(w[0], w[1]).ok_or_else(|| {
            BuildingError::InvalidPath(format!("nodes {} and {} are not adjacent", w[0], w[1]))
        })?;
        total += costs.per_cm * edge.length_cm;
    }
    for w in p.nodes().windows(3) {
        total += costs.per_turn_degree * turn_angle_deg(ctx.graph, w[0], w[1], w[2]);
    }
    Ok(total)
}

/// Forecast hazard exposure plus effective length. For each edge the hazard
/// term is active only when the evacuee arrives at the far node at or after
/// the hazard does; it is clamped at zero otherwise.
pub fn goal_safety(p: &Path, ctx: &GoalContext) -> Result<f64, GoalError> {
    let forecast = queueing::predict_path_congestion(
        p,
        ctx.speed_cm_s,
        ctx.loads(),
        ctx.coeff_a,
        ctx.coeff_b,
        ctx.graph,
    )?;
    let mut total = 0.0;
    for (i, w) in p.nodes().windows(2).enumerate() {
        let next = w[1].index();
        let t_hr = ctx.hazard_arrival_s[next];
        if t_hr.is_finite() {
            let arrival = forecast.node_etas_s[i + 1] + ctx.t_current_s;
            total += ctx.hazard_growth_per_s * (arrival - t_hr).max(0.0);
        }
        total += ctx.effective_edge_length(w[0], w[1])?;
    }
    Ok(total)
}

/// Turn angle in degrees at `b` between edges a-b and b-c, using the planar
/// projection within a floor. Stairwell edges (floor changes) contribute no
/// turn geometry.
pub fn turn_angle_deg(graph: &BuildingGraph, a: NodeId, b: NodeId, c: NodeId) -> f64 {
    let na = graph.node(a);
    let nb = graph.node(b);
    let nc = graph.node(c);
    if na.floor != nb.floor || nb.floor != nc.floor {
        return 0.0;
    }
    let v1 = [
        nb.position[0] - na.position[0],
        nb.position[1] - na.position[1],
    ];
    let v2 = [
        nc.position[0] - nb.position[0],
        nc.position[1] - nb.position[1],
    ];
    let n1 = (v1[0] * v1[0] + v1[1] * v1[1]).sqrt();
    let n2 = (v2[0] * v2[0] + v2[1] * v2[1]).sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return 0.0;
    }
    let cos = ((v1[0] * v2[0] + v1[1] * v2[1]) / (n1 * n2)).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// R = 1/G, capped. G must be non-negative; G = 0 maps to the cap.
pub fn reward(g: f64) -> Result<f64, GoalError> {
    if g < 0.0 {
        return Err(GoalError::NegativeGoal(g));
    }
    Ok((1.0 / g).min(REWARD_CAP))
}

/// Dispatch on the goal kind.
pub fn evaluate(
    kind: GoalKind,
    p: &Path,
    ctx: &GoalContext,
    costs: &EnergyCosts,
) -> Result<f64, GoalError> {
    match kind {
        GoalKind::Distance => goal_distance(p, ctx),
        GoalKind::Time => goal_time(p, ctx),
        GoalKind::Energy => goal_energy(p, ctx, costs),
        GoalKind::Safety => goal_safety(p, ctx),
    }
}
