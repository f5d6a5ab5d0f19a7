//! Fire model: ignition at one node, spread along graph shortest distance at
//! a constant rate, linear intensity growth after arrival, and the effective
//! path length that penalizes burning edges.

use thiserror::Error;

use crate::building::{distances_from, BuildingError, BuildingGraph, Edge, NodeId, Path};

#[derive(Debug, Clone, Copy)]
pub struct HazardParams {
    /// Spread rate along edges, cm/s.
    pub spread_rate_cm_s: f64,
    /// Intensity growth per second at a node after the fire arrives.
    pub growth_rate_per_s: f64,
    /// Intensity at the instant of arrival. The growth model alone starts at
    /// zero; experiments that want an immediately dangerous front raise this.
    pub initial_intensity: f64,
    /// Multiplier applied to the length of a fire-affected edge. Must be much
    /// larger than the average edge length.
    pub fire_multiplier: f64,
}

impl HazardParams {
    /// Defaults with the multiplier sized against a concrete graph:
    /// 10 x max edge length x node count.
    pub fn default_for(graph: &BuildingGraph) -> Self {
        HazardParams {
            spread_rate_cm_s: 35.0,
            growth_rate_per_s: 0.1,
            initial_intensity: 0.0,
            fire_multiplier: 10.0 * graph.max_edge_length() * graph.node_count() as f64,
        }
    }

    pub fn validate_for(&self, graph: &BuildingGraph) -> Result<(), HazardError> {
        if self.spread_rate_cm_s <= 0.0 {
            return Err(HazardError::BadParam("spread rate must be > 0".into()));
        }
        if self.growth_rate_per_s < 0.0 || self.initial_intensity < 0.0 {
            return Err(HazardError::BadParam(
                "growth rate and initial intensity must be >= 0".into(),
            ));
        }
        if self.fire_multiplier <= graph.avg_edge_length() {
            return Err(HazardError::BadParam(format!(
                "fire multiplier {} must exceed the average edge length {}",
                self.fire_multiplier,
                graph.avg_edge_length()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum HazardError {
    #[error("hazard parameter error: {0}")]
    BadParam(String),
}

/// Fire state: per-node arrival times are fixed at ignition, intensities are
/// a pure function of time. `advance` refreshes the cached intensity vector.
#[derive(Debug, Clone)]
pub struct HazardState {
    pub ignition_node: NodeId,
    pub ignition_time_s: f64,
    /// Arrival time t_hr per node, infinity where unreachable.
    pub arrival_s: Vec<f64>,
    /// Intensities as of the last `advance`.
    pub intensity: Vec<f64>,
    updated_at_s: f64,
}

/// t_hr per node: ignition time plus graph distance over spread rate.
pub fn hazard_arrival_times(
    graph: &BuildingGraph,
    ignition: NodeId,
    ignition_time_s: f64,
    params: &HazardParams,
) -> Vec<f64> {
    distances_from(graph, ignition, |e| e.length_cm)
        .into_iter()
        .map(|d| {
            if d.is_finite() {
                ignition_time_s + d / params.spread_rate_cm_s
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

impl HazardState {
    pub fn new(
        graph: &BuildingGraph,
        ignition: NodeId,
        ignition_time_s: f64,
        params: &HazardParams,
    ) -> Self {
        let arrival_s = hazard_arrival_times(graph, ignition, ignition_time_s, params);
        HazardState {
            ignition_node: ignition,
            ignition_time_s,
            intensity: vec![0.0; arrival_s.len()],
            arrival_s,
            updated_at_s: f64::NEG_INFINITY,
        }
    }

    /// A node counts as burning from the instant the fire arrives, inclusive,
    /// even though the grown intensity is still zero at that exact moment.
    pub fn is_burning(&self, node: NodeId, t_s: f64) -> bool {
        t_s >= self.arrival_s[node.index()]
    }

    /// Closed-form intensity at time `t_s`, independent of `advance` calls.
    pub fn intensity_at(&self, node: NodeId, t_s: f64, params: &HazardParams) -> f64 {
        let arrival = self.arrival_s[node.index()];
        if t_s >= arrival {
            params.initial_intensity + params.growth_rate_per_s * (t_s - arrival)
        } else {
            0.0
        }
    }

    /// Refresh the cached intensity vector to time `t_s`. Idempotent.
    pub fn advance(&mut self, t_s: f64, params: &HazardParams) {
        debug_assert!(t_s >= self.updated_at_s || self.updated_at_s == f64::NEG_INFINITY);
        for i in 0..self.intensity.len() {
            self.intensity[i] = self.intensity_at(NodeId(i as u32), t_s, params);
        }
        self.updated_at_s = t_s;
    }

    /// Length multiplier for an edge: the fire factor if either endpoint is
    /// burning at time `t_s`, 1 otherwise.
    pub fn edge_fire_factor(&self, e: &Edge, t_s: f64, params: &HazardParams) -> f64 {
        if self.is_burning(e.a, t_s) || self.is_burning(e.b, t_s) {
            params.fire_multiplier
        } else {
            1.0
        }
    }

    /// Effective length of a path: sum of edge length times its fire factor.
    pub fn effective_length(
        &self,
        graph: &BuildingGraph,
        p: &Path,
        t_s: f64,
        params: &HazardParams,
    ) -> Result<f64, BuildingError> {
        if p.is_empty() {
            return Err(BuildingError::InvalidPath("empty path".into()));
        }
        let mut total = 0.0;
        for w in p.nodes().windows(2) {
            let edge = graph.edge_between(w[0], w[1]).ok_or_else(|| {
                BuildingError::InvalidPath(format!("nodes {} and {} are not adjacent", w[0], w[1]))
            })?;
            total += edge.length_cm * self.edge_fire_factor(edge, t_s, params);
        }
        Ok(total)
    }

    /// Count of nodes the fire has reached by `t_s`. Changes exactly when the
    /// burning set changes, so it doubles as a cheap cache key.
    pub fn burned_count(&self, t_s: f64) -> usize {
        self.arrival_s.iter().filter(|&&a| t_s >= a).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::building::{dijkstra_to_exit, parse, ExitSearch};

    fn line_graph() -> BuildingGraph {
        parse(
            "\
building line
node 0 0 0 0 1 1 exit
node 1 500 0 0 1 1
node 2 1000 0 0 1 1
node 3 2000 0 0 1 1
edge 0 1 500
edge 1 2 500
edge 2 3 1000
",
        )
        .unwrap()
    }

    fn params() -> HazardParams {
        HazardParams {
            spread_rate_cm_s: 50.0,
            growth_rate_per_s: 2.0,
            initial_intensity: 0.0,
            fire_multiplier: 1e4,
        }
    }

    #[test]
    fn arrival_times_follow_distance_over_rate() {
        let g = line_graph();
        let p = params();
        let arr = hazard_arrival_times(&g, NodeId(1), 0.0, &p);
        assert_eq!(arr[1], 0.0); // ignition node
        assert_eq!(arr[2], 10.0); // 500 cm at 50 cm/s
        assert_eq!(arr[0], 10.0);
        assert_eq!(arr[3], 30.0);
    }

    #[test]
    fn arrival_time_infinite_when_disconnected() {
        // distances_from with infinite weights emulates a severed edge.
        let g = line_graph();
        let d = distances_from(&g, NodeId(0), |e| {
            if e.a == NodeId(2) || e.b == NodeId(2) {
                f64::INFINITY
            } else {
                e.length_cm
            }
        });
        assert!(d[3].is_infinite());
    }

    #[test]
    fn fire_factor_cases() {
        let g = line_graph();
        let p = params();
        let h = HazardState::new(&g, NodeId(3), 5.0, &p);
        let e01 = g.edge_between(NodeId(0), NodeId(1)).unwrap();
        let e23 = g.edge_between(NodeId(2), NodeId(3)).unwrap();
        // Fire starts at node 3 at t=5: edge 2-3 burns from then on.
        assert_eq!(h.edge_fire_factor(e01, 5.0, &p), 1.0);
        assert_eq!(h.edge_fire_factor(e23, 5.0, &p), 1e4);
        // Arrival at node 2 is t = 5 + 1000/50 = 25; boundary is inclusive.
        assert_eq!(h.edge_fire_factor(e01, 24.999, &p), 1.0);
        let e12 = g.edge_between(NodeId(1), NodeId(2)).unwrap();
        assert_eq!(h.edge_fire_factor(e12, 25.0, &p), 1e4);
    }

    #[test]
    fn effective_length_cases() {
        let g = parse(
            "\
building p
node 0 0 0 0 1 1
node 1 1000 0 0 1 1
node 2 3000 0 0 1 1 exit
edge 0 1 1000
edge 1 2 2000
",
        )
        .unwrap();
        let p = params();
        let path = Path(vec![NodeId(0), NodeId(1), NodeId(2)]);
        // Ignition far in the future: nothing burns yet.
        let h = HazardState::new(&g, NodeId(0), 1e9, &p);
        assert_eq!(h.effective_length(&g, &path, 0.0, &p).unwrap(), 3000.0);
        // Fire at node 0 from t=0: first edge burns.
        let h = HazardState::new(&g, NodeId(0), 0.0, &p);
        assert_eq!(
            h.effective_length(&g, &path, 0.0, &p).unwrap(),
            1000.0 * 1e4 + 2000.0
        );
        assert_eq!(
            h.effective_length(&g, &Path(vec![NodeId(1)]), 0.0, &p).unwrap(),
            0.0
        );
    }

    #[test]
    fn advance_intensity() {
        let g = line_graph();
        let p = params();
        let mut h = HazardState::new(&g, NodeId(2), 0.0, &p);
        h.advance(5.0, &p);
        // node 2 burning for 5 s at rate 2 -> 10; node 1 arrives at t=10.
        assert_eq!(h.intensity[2], 10.0);
        assert_eq!(h.intensity[1], 0.0);
        let snapshot = h.intensity.clone();
        h.advance(5.0, &p);
        assert_eq!(h.intensity, snapshot);
        // pre-arrival everywhere when t is before ignition
        let mut early = HazardState::new(&g, NodeId(2), 100.0, &p);
        early.advance(50.0, &p);
        assert!(early.intensity.iter().all(|&i| i == 0.0));
    }

    #[test]
    fn intensity_monotone_in_time() {
        let g = line_graph();
        let p = params();
        let h = HazardState::new(&g, NodeId(2), 0.0, &p);
        for n in 0..4u32 {
            let mut prev = 0.0;
            for step in 0..40 {
                let t = step as f64 * 1.7;
                let cur = h.intensity_at(NodeId(n), t, &p);
                assert!(cur >= prev);
                prev = cur;
            }
        }
    }

    #[test]
    fn effective_never_below_physical() {
        let g = line_graph();
        let p = params();
        let h = HazardState::new(&g, NodeId(0), 3.0, &p);
        let path = Path(vec![NodeId(3), NodeId(2), NodeId(1), NodeId(0)]);
        let phys = g.path_length(&path).unwrap();
        for step in 0..30 {
            let t = step as f64 * 2.0;
            let eff = h.effective_length(&g, &path, t, &p).unwrap();
            assert!(eff >= phys);
            let any_burning = path.nodes().windows(2).any(|w| {
                let e = g.edge_between(w[0], w[1]).unwrap();
                h.edge_fire_factor(e, t, &p) > 1.0
            });
            assert_eq!(eff > phys, any_burning);
        }
    }

    #[test]
    fn arrival_via_supersink_matches_per_node_dijkstra() {
        // The exit-field machinery and per-source distances must agree on
        // small graphs when the ignition node is treated as the lone exit.
        let text = "\
building m
node 0 0 0 0 1 1 exit
node 1 100 0 0 1 1
node 2 200 0 0 1 1
node 3 300 0 0 1 1
node 4 400 0 0 1 1
edge 0 1 120
edge 1 2 80
edge 2 3 50
edge 3 4 200
edge 0 4 90
edge 1 3 60
";
        let g = parse(text).unwrap();
        let d = distances_from(&g, NodeId(0), |e| e.length_cm);
        for s in 0..5u32 {
            match dijkstra_to_exit(&g, NodeId(s), |e| e.length_cm) {
                ExitSearch::Found { cost, .. } => assert!((cost - d[s as usize]).abs() < 1e-9),
                ExitSearch::Trapped => panic!(),
            }
        }
    }
}
