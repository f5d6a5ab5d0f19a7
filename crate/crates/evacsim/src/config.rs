//! Line-oriented `key = value` scenario files.
//!
//! Every key is optional except `building`; unset values fall back to the
//! defaults in [`TrialConfig::new`]. Sweep axes (`policies`,
//! `evacuee_counts`, `movement_depths`, `goals`) only matter to the sweep
//! command. `#` starts a comment.

use std::collections::BTreeMap;
use std::path::PathBuf;

use evacsim_core::building::{BuildingGraph, NodeId};
use evacsim_core::goals::GoalKind;
use evacsim_core::sim::{Category, Policy, TrialConfig};

use crate::HarnessError;

#[derive(Debug, Clone, Default)]
pub struct Scenario {
    pub building: Option<PathBuf>,
    values: BTreeMap<String, String>,
    pub policies: Option<Vec<Policy>>,
    pub evacuee_counts: Option<Vec<usize>>,
    pub movement_depths: Option<Vec<u32>>,
    pub goals: Option<Vec<Option<GoalKind>>>,
    pub seeds: Option<Vec<u64>>,
}

const SCALAR_KEYS: &[&str] = &[
    "policy",
    "evacuees",
    "category_mix",
    "goal",
    "movement_depth",
    "time_cap_s",
    "ignition_node",
    "ignition_time_s",
    "spread_rate_cm_s",
    "growth_rate_per_s",
    "initial_intensity",
    "fire_multiplier",
    "damage_rate",
    "hazard_tick_s",
    "speed_normal",
    "speed_wheelchair",
    "speed_sick",
    "speed_child",
    "service_rate",
    "arrival_smoothing",
    "threshold_smoothing",
    "congestion_coeff_a",
    "congestion_coeff_b",
    "energy_per_brake",
    "energy_per_cm",
    "energy_per_turn_degree",
    "drift_prefire",
    "drift_fire",
    "sp_warmup",
    "sp_period_s",
    "table_size",
    "route_timeout_s",
    "hop_limits",
    "placements",
];

pub fn parse_scenario(text: &str) -> Result<Scenario, HarnessError> {
    let mut sc = Scenario::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::Config(format!(
                "line {line_no}: expected key = value"
            )));
        };
        let key = key.trim();
        let value = value.trim().to_string();
        match key {
            "building" => sc.building = Some(PathBuf::from(value)),
            "seeds" => sc.seeds = Some(parse_seed_list(&value, line_no)?),
            "policies" => {
                sc.policies = Some(
                    split_list(&value)
                        .map(|s| {
                            Policy::from_name(s).ok_or_else(|| {
                                HarnessError::Config(format!("line {line_no}: unknown policy {s:?}"))
                            })
                        })
                        .collect::<Result<_, _>>()?,
                )
            }
            "evacuee_counts" => {
                sc.evacuee_counts = Some(parse_number_list(&value, line_no, "evacuee count")?)
            }
            "movement_depths" => {
                sc.movement_depths = Some(parse_number_list(&value, line_no, "movement depth")?)
            }
            "goals" => {
                sc.goals = Some(
                    split_list(&value)
                        .map(|s| parse_goal(s, line_no))
                        .collect::<Result<_, _>>()?,
                )
            }
            k if SCALAR_KEYS.contains(&k) => {
                sc.values.insert(k.to_string(), value);
            }
            other => {
                return Err(HarnessError::Config(format!(
                    "line {line_no}: unknown key {other:?}"
                )))
            }
        }
    }
    Ok(sc)
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_goal(s: &str, line_no: usize) -> Result<Option<GoalKind>, HarnessError> {
    if s == "bycat" {
        return Ok(None);
    }
    GoalKind::from_name(s)
        .map(Some)
        .ok_or_else(|| HarnessError::Config(format!("line {line_no}: unknown goal {s:?}")))
}

fn parse_number_list<T: std::str::FromStr>(
    value: &str,
    line_no: usize,
    what: &str,
) -> Result<Vec<T>, HarnessError> {
    split_list(value)
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| HarnessError::Config(format!("line {line_no}: bad {what} {s:?}")))
        })
        .collect()
}

/// `a..b` is an inclusive range; otherwise a comma list.
pub fn parse_seed_list(value: &str, line_no: usize) -> Result<Vec<u64>, HarnessError> {
    let bad = |msg: String| HarnessError::Config(format!("line {line_no}: {msg}"));
    if let Some((a, b)) = value.split_once("..") {
        let lo: u64 = a
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad seed {a:?}")))?;
        let hi: u64 = b
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad seed {b:?}")))?;
        if hi < lo {
            return Err(bad(format!("empty seed range {value:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    split_list(value)
        .map(|s| s.parse().map_err(|_| bad(format!("bad seed {s:?}"))))
        .collect()
}

impl Scenario {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Overlay another scenario's set fields onto this one (CLI overrides).
    pub fn merge(&mut self, other: Scenario) {
        if other.building.is_some() {
            self.building = other.building;
        }
        for (k, v) in other.values {
            self.values.insert(k, v);
        }
        macro_rules! take {
            ($field:ident) => {
                if other.$field.is_some() {
                    self.$field = other.$field;
                }
            };
        }
        take!(policies);
        take!(evacuee_counts);
        take!(movement_depths);
        take!(goals);
        take!(seeds);
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, HarnessError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                HarnessError::Config(format!("bad value for {key}: {raw:?}"))
            }),
        }
    }

    /// Materialize the base trial config against a loaded building.
    pub fn build_trial_config(&self, graph: &BuildingGraph) -> Result<TrialConfig, HarnessError> {
        let mut cfg = TrialConfig::new(graph);
        cfg.goal_override = None;

        if let Some(p) = self.get("policy") {
            cfg.policy = Policy::from_name(p)
                .ok_or_else(|| HarnessError::Config(format!("unknown policy {p:?}")))?;
        }
        if let Some(n) = self.parse_value("evacuees")? {
            cfg.evacuee_count = n;
        }
        if let Some(mix) = self.get("category_mix") {
            cfg.category_mix = parse_category_mix(mix)?;
        }
        if let Some(g) = self.get("goal") {
            cfg.goal_override = parse_goal(g, 0).map_err(|_| {
                HarnessError::Config(format!("unknown goal {g:?} (use distance|time|energy|safety|bycat)"))
            })?;
        }
        if let Some(d) = self.parse_value("movement_depth")? {
            cfg.movement_depth = d;
        }
        if let Some(v) = self.parse_value("time_cap_s")? {
            cfg.time_cap_s = v;
        }
        if let Some(v) = self.parse_value::<u32>("ignition_node")? {
            cfg.ignition_node = NodeId(v);
        }
        if let Some(v) = self.parse_value("ignition_time_s")? {
            cfg.ignition_time_s = v;
        }
        if let Some(v) = self.parse_value("spread_rate_cm_s")? {
            cfg.hazard.spread_rate_cm_s = v;
        }
        if let Some(v) = self.parse_value("growth_rate_per_s")? {
            cfg.hazard.growth_rate_per_s = v;
        }
        if let Some(v) = self.parse_value("initial_intensity")? {
            cfg.hazard.initial_intensity = v;
        }
        if let Some(v) = self.parse_value("fire_multiplier")? {
            cfg.hazard.fire_multiplier = v;
        }
        if let Some(v) = self.parse_value("damage_rate")? {
            cfg.damage_rate = v;
        }
        if let Some(v) = self.parse_value("hazard_tick_s")? {
            cfg.hazard_tick_s = v;
        }
        if let Some(v) = self.parse_value("speed_normal")? {
            cfg.speeds.normal = v;
        }
        if let Some(v) = self.parse_value("speed_wheelchair")? {
            cfg.speeds.wheelchair = v;
        }
        if let Some(v) = self.parse_value("speed_sick")? {
            cfg.speeds.sick = v;
        }
        if let Some(v) = self.parse_value("speed_child")? {
            cfg.speeds.child = v;
        }
        if let Some(v) = self.parse_value("service_rate")? {
            cfg.service_rate = v;
        }
        if let Some(v) = self.parse_value("arrival_smoothing")? {
            cfg.arrival_smoothing = v;
        }
        if let Some(v) = self.parse_value("threshold_smoothing")? {
            cfg.threshold_smoothing = v;
        }
        if let Some(v) = self.parse_value("congestion_coeff_a")? {
            cfg.coeff_a = v;
        }
        if let Some(v) = self.parse_value("congestion_coeff_b")? {
            cfg.coeff_b = v;
        }
        if let Some(v) = self.parse_value("energy_per_brake")? {
            cfg.energy.per_brake = v;
        }
        if let Some(v) = self.parse_value("energy_per_cm")? {
            cfg.energy.per_cm = v;
        }
        if let Some(v) = self.parse_value("energy_per_turn_degree")? {
            cfg.energy.per_turn_degree = v;
        }
        if let Some(v) = self.parse_value("drift_prefire")? {
            cfg.cpn.drift_prefire = v;
        }
        if let Some(v) = self.parse_value("drift_fire")? {
            cfg.cpn.drift_fire = v;
        }
        if let Some(v) = self.parse_value("sp_warmup")? {
            cfg.cpn.sp_warmup = v;
        }
        if let Some(v) = self.parse_value("sp_period_s")? {
            cfg.cpn.sp_period_s = v;
        }
        if let Some(v) = self.parse_value("table_size")? {
            cfg.cpn.table_size = v;
        }
        if let Some(v) = self.parse_value("route_timeout_s")? {
            cfg.cpn.route_timeout_s = v;
        }
        if let Some(raw) = self.get("hop_limits") {
            cfg.cpn.hop_limit_by_floor = parse_hop_limits(raw)?;
        }
        if let Some(raw) = self.get("placements") {
            let ids: Vec<u32> = parse_number_list(raw, 0, "placement")?;
            cfg.placements = Some(ids.into_iter().map(NodeId).collect());
        }
        cfg.validate(graph)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// `normal:0.7,wheelchair:0.1,sick:0.1,child:0.1`
fn parse_category_mix(raw: &str) -> Result<Vec<(Category, f64)>, HarnessError> {
    let mut mix = Vec::new();
    for part in split_list(raw) {
        let Some((name, weight)) = part.split_once(':') else {
            return Err(HarnessError::Config(format!(
                "bad category mix entry {part:?} (want name:weight)"
            )));
        };
        let cat = Category::from_name(name.trim()).ok_or_else(|| {
            HarnessError::Config(format!("unknown category {:?}", name.trim()))
        })?;
        let w: f64 = weight
            .trim()
            .parse()
            .map_err(|_| HarnessError::Config(format!("bad weight {weight:?}")))?;
        mix.push((cat, w));
    }
    if mix.is_empty() {
        return Err(HarnessError::Config("empty category mix".into()));
    }
    Ok(mix)
}

/// `1:60,2:100,3:120`
fn parse_hop_limits(raw: &str) -> Result<BTreeMap<u32, u32>, HarnessError> {
    let mut map = BTreeMap::new();
    for part in split_list(raw) {
        let Some((floor, limit)) = part.split_once(':') else {
            return Err(HarnessError::Config(format!(
                "bad hop limit entry {part:?} (want floor:limit)"
            )));
        };
        let f: u32 = floor
            .trim()
            .parse()
            .map_err(|_| HarnessError::Config(format!("bad floor {floor:?}")))?;
        let l: u32 = limit
            .trim()
            .parse()
            .map_err(|_| HarnessError::Config(format!("bad hop limit {limit:?}")))?;
        map.insert(f, l);
    }
    if map.is_empty() {
        return Err(HarnessError::Config("empty hop limits".into()));
    }
    Ok(map)
}
