use evacsim_core::building::NodeId;
use evacsim_core::fixtures::default_building;
use evacsim_core::hazard::HazardParams;
use evacsim_core::sim::{run_trial_traced, Policy, TrialConfig};

fn main() {
    let g = default_building();
    let mut cfg = TrialConfig::new(&g);
    cfg.evacuee_count = 120;
    cfg.movement_depth = 1;
    cfg.ignition_node = NodeId(1);
    cfg.ignition_time_s = 10.0;
    cfg.hazard = HazardParams {
        spread_rate_cm_s: 70.0,
        growth_rate_per_s: 0.3,
        initial_intensity: 2.0,
        fire_multiplier: 10.0 * g.max_edge_length() * g.node_count() as f64,
    };
    for policy in [Policy::Autonomous, Policy::Dijkstra, Policy::Cpn] {
        cfg.policy = policy;
        let (m, traces) = run_trial_traced(&g, &cfg, 1).unwrap();
        // brakes by start-third of the building (x of first node)
        let mut west = 0u32;
        let mut mid = 0u32;
        let mut east = 0u32;
        let mut hops_w = 0usize;
        let mut hops_e = 0usize;
        for t in &traces {
            let start = t.nodes[0];
            let x = g.node(start).position[0];
            if x < 1500.0 {
                west += t.brakes;
                hops_w += t.nodes.len();
            } else if x < 3000.0 {
                mid += t.brakes;
            } else {
                east += t.brakes;
                hops_e += t.nodes.len();
            }
        }
        println!(
            "{:>11}: congestion {:>4} deaths {:>2} evac_t {:>5.1} | brakes west {:>3} mid {:>3} east {:>3} | hops w {} e {}",
            policy.name(), m.congestion_events, m.deaths, m.avg_evac_time_s, west, mid, east, hops_w, hops_e
        );
    }
}
