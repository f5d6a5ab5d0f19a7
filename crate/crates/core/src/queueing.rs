//! Per-node M/M/1 statistics and the path congestion forecast.
//!
//! Each node keeps a rolling-average arrival rate and its current queue; the
//! forecast walks a candidate path edge by edge, charging edge travel time,
//! the steady-state queueing delay of the edge's source node, and any
//! still-standing queue the evacuee would run into.

use thiserror::Error;

use crate::building::{BuildingError, BuildingGraph, Path};

/// Utilization at or above this is treated as saturated: the steady-state
/// queue formula is singular at 1, so the forecast uses the capped value and
/// flags it.
pub const RHO_CAP: f64 = 0.99;

#[derive(Debug, Error)]
pub enum QueueError {
    #[error("arrival at {t_c} s does not follow previous arrival at {t_h} s")]
    NonMonotonicArrival { t_c: f64, t_h: f64 },
}

/// Rolling arrival-rate and queue statistics for one node.
#[derive(Debug, Clone, Copy)]
pub struct NodeQueueStats {
    /// Smoothed arrival rate R_c, 1/s.
    arrival_rate: f64,
    /// Instant of the previous arrival, if any.
    last_arrival_s: Option<f64>,
    /// Service rate mu, 1/s.
    service_rate: f64,
    /// Persons waiting right now.
    pub current_queue: u32,
    /// Rolling constant in (0, 1).
    smoothing: f64,
}

impl NodeQueueStats {
    pub fn new(service_rate: f64, smoothing: f64) -> Self {
        assert!(service_rate > 0.0);
        assert!(smoothing > 0.0 && smoothing < 1.0);
        NodeQueueStats {
            arrival_rate: 0.0,
            last_arrival_s: None,
            service_rate,
            current_queue: 0,
            smoothing,
        }
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }

    pub fn last_arrival_s(&self) -> Option<f64> {
        self.last_arrival_s
    }

    /// Fold one arrival instant into the rolling rate. The first arrival only
    /// records the instant: a single observation defines no rate.
    pub fn record_arrival(&mut self, t_c: f64) -> Result<(), QueueError> {
        match self.last_arrival_s {
            None => {
                self.arrival_rate = 0.0;
                self.last_arrival_s = Some(t_c);
            }
            Some(t_h) => {
                if t_c <= t_h {
                    return Err(QueueError::NonMonotonicArrival { t_c, t_h });
                }
                let a = self.smoothing;
                self.arrival_rate = a * self.arrival_rate + (1.0 - a) / (t_c - t_h);
                self.last_arrival_s = Some(t_c);
            }
        }
        Ok(())
    }

    /// rho = lambda / mu. Values >= 1 mean congestion is expected as soon as
    /// anyone else arrives.
    pub fn utilization(&self) -> f64 {
        self.arrival_rate / self.service_rate
    }
}

/// Steady-state expected queue length with the saturation cap applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueLength {
    pub value: f64,
    pub saturated: bool,
}

/// rho / (1 - rho), capped at `RHO_CAP` where the formula blows up.
pub fn expected_queue_length(rho: f64) -> QueueLength {
    debug_assert!(rho >= 0.0);
    if rho >= RHO_CAP {
        QueueLength {
            value: RHO_CAP / (1.0 - RHO_CAP),
            saturated: true,
        }
    } else {
        QueueLength {
            value: rho / (1.0 - rho),
            saturated: false,
        }
    }
}

/// Outcome of the path congestion forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionForecast {
    /// Expected congestion encountered along the path (fractional).
    pub c_total: f64,
    /// Forecast traversal time of the whole path, seconds.
    pub t_total_s: f64,
    /// Arrival time at each path node relative to now; `[0]` is the start.
    pub node_etas_s: Vec<f64>,
    /// Some node on the path was saturated.
    pub saturated: bool,
}

/// Predicted utilization and current queue per node, the snapshot the
/// forecast reads. Slices are indexed by node id.
#[derive(Debug, Clone, Copy)]
pub struct NodeLoadView<'a> {
    pub rho: &'a [f64],
    pub current_queue: &'a [u32],
}

/// Forecast the congestion and travel time an evacuee moving at `speed_cm_s`
/// would encounter along `p`.
///
/// Per edge: travel time `length/speed`; the source node contributes its
/// utilization to the congestion count and its expected queueing delay
/// (`coeff_a` seconds per queued person) to the edge time; if the source node
/// has a standing queue that would outlast the evacuee's arrival
/// (`coeff_b * queue > elapsed`), one extra congestion is counted and the
/// remaining wait is added.
pub fn predict_path_congestion(
    p: &Path,
    speed_cm_s: f64,
    loads: NodeLoadView<'_>,
    coeff_a: f64,
    coeff_b: f64,
    graph: &BuildingGraph,
) -> Result<CongestionForecast, BuildingError> {
    assert!(speed_cm_s > 0.0);
    if p.is_empty() {
        return Err(BuildingError::InvalidPath("empty path".into()));
    }
    let mut c_total = 0.0;
    let mut t_total = 0.0;
    let mut etas = Vec::with_capacity(p.len());
    etas.push(0.0);
    let mut saturated = false;
    for w in p.nodes().windows(2) {
        let edge = graph.edge_between(w[0], w[1]).ok_or_else(|| {
            BuildingError::InvalidPath(format!("nodes {} and {} are not adjacent", w[0], w[1]))
        })?;
        let source = w[0].index();
        let mut t_edge = edge.length_cm / speed_cm_s;
        c_total += loads.rho[source];
        let queue_len = expected_queue_length(loads.rho[source]);
        saturated |= queue_len.saturated;
        t_edge += coeff_a * queue_len.value;
        let standing = loads.current_queue[source];
        if standing > 0 {
            let t_queue = coeff_b * standing as f64;
            if t_queue > t_total {
                c_total += 1.0;
                t_edge += t_queue - t_total;
            }
        }
        t_total += t_edge;
        etas.push(t_total);
    }
    Ok(CongestionForecast {
        c_total,
        t_total_s: t_total,
        node_etas_s: etas,
        saturated,
    })
}
