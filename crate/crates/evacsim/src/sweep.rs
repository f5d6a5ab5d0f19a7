//! Parameter sweeps: enumerate (policy x count x depth x goal) cells, run
//! every seed in each cell, aggregate mean/min/max per metric, and emit
//! trial, aggregate and plot CSVs with canonical ordering and atomic writes.

use std::fs;
use std::path::Path;

use evacsim_core::building::BuildingGraph;
use evacsim_core::goals::GoalKind;
use evacsim_core::sim::{run_trial, Policy, TrialConfig, TrialMetrics};
use rayon::prelude::*;

use crate::HarnessError;

/// One sweep cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellId {
    pub policy: Policy,
    pub count: usize,
    pub depth: u32,
    pub goal: Option<GoalKind>,
}

impl CellId {
    /// Series label carried in the trial CSV's `policy` column. Baselines
    /// keep their bare names; CPN cells encode depth and goal so rows from
    /// different cells never collide.
    pub fn series(&self) -> String {
        match self.policy {
            Policy::Autonomous | Policy::Dijkstra => self.policy.name().to_string(),
            Policy::Cpn => format!(
                "cpn-d{}-{}",
                self.depth,
                self.goal.map_or("bycat", |g| g.name())
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub base: TrialConfig,
    pub policies: Vec<Policy>,
    pub counts: Vec<usize>,
    pub depths: Vec<u32>,
    pub goals: Vec<Option<GoalKind>>,
    pub seeds: Vec<u64>,
}

impl Sweep {
    /// A sweep that runs just the base config (one cell).
    pub fn single(base: TrialConfig, seeds: Vec<u64>) -> Self {
        Sweep {
            policies: vec![base.policy],
            counts: vec![base.evacuee_count],
            depths: vec![base.movement_depth],
            goals: vec![base.goal_override],
            base,
            seeds,
        }
    }

    pub fn cells(&self) -> Vec<CellId> {
        let mut out = Vec::new();
        for &policy in &self.policies {
            for &count in &self.counts {
                for &depth in &self.depths {
                    for &goal in &self.goals {
                        out.push(CellId {
                            policy,
                            count,
                            depth,
                            goal,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn config_for(&self, cell: &CellId) -> TrialConfig {
        let mut cfg = self.base.clone();
        cfg.policy = cell.policy;
        cfg.evacuee_count = cell.count;
        cfg.movement_depth = cell.depth;
        cfg.goal_override = cell.goal;
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub cell: CellId,
    pub metrics: TrialMetrics,
}

#[derive(Debug, Clone)]
pub struct TrialFailure {
    pub cell: CellId,
    pub seed: u64,
    pub error: String,
}

pub const METRIC_NAMES: [&str; 6] = [
    "survivor_fraction",
    "deaths",
    "congestion",
    "avg_evac_time_s",
    "avg_health",
    "total_energy",
];

fn metric_value(m: &TrialMetrics, name: &str) -> f64 {
    match name {
        "survivor_fraction" => m.survivor_fraction,
        "deaths" => m.deaths as f64,
        "congestion" => m.congestion_events as f64,
        "avg_evac_time_s" => m.avg_evac_time_s,
        "avg_health" => m.avg_health,
        "total_energy" => m.total_energy,
        other => unreachable!("unknown metric {other}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub series: String,
    pub count: usize,
    pub metric: &'static str,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug)]
pub struct SweepOutput {
    /// Canonical order: cells in axes order, seeds in listed order.
    pub rows: Vec<TrialRow>,
    pub failures: Vec<TrialFailure>,
    pub aggregates: Vec<AggregateRow>,
}

/// Run every (cell, seed) pair, in parallel across trials, and aggregate.
/// A failing trial aborts its cell (recorded, not fatal to the sweep).
pub fn run_sweep(graph: &BuildingGraph, sweep: &Sweep, workers: usize) -> SweepOutput {
    let cells = sweep.cells();
    let mut jobs = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for &seed in &sweep.seeds {
            jobs.push((ci, cell.clone(), seed));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<Result<TrialRow, TrialFailure>> = pool.install(|| {
        jobs.par_iter()
            .map(|(_, cell, seed)| {
                let cfg = sweep.config_for(cell);
                match run_trial(graph, &cfg, *seed) {
                    Ok(mut metrics) => {
                        metrics.policy_label = cell.series();
                        Ok(TrialRow {
                            cell: cell.clone(),
                            metrics,
                        })
                    }
                    Err(e) => Err(TrialFailure {
                        cell: cell.clone(),
                        seed: *seed,
                        error: e.to_string(),
                    }),
                }
            })
            .collect()
    });

    // canonical order is the job order; par_iter preserves indexing
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut failed_cells: Vec<CellId> = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(f) => {
                if !failed_cells.contains(&f.cell) {
                    failed_cells.push(f.cell.clone());
                }
                failures.push(f);
            }
        }
    }
    // a failure aborts the whole cell: drop its surviving rows
    rows.retain(|r| !failed_cells.contains(&r.cell));
    let aggregates = aggregate(&rows);
    SweepOutput {
        rows,
        failures,
        aggregates,
    }
}

/// Deterministic single-threaded reduce over trial rows.
pub fn aggregate(rows: &[TrialRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in rows {
        let key = (r.metrics.policy_label.clone(), r.metrics.evacuees);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = Vec::new();
    for (series, count) in keys {
        let group: Vec<&TrialRow> = rows
            .iter()
            .filter(|r| r.metrics.policy_label == series && r.metrics.evacuees == count)
            .collect();
        for metric in METRIC_NAMES {
            let values: Vec<f64> = group
                .iter()
                .map(|r| metric_value(&r.metrics, metric))
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            out.push(AggregateRow {
                series: series.clone(),
                count,
                metric,
                mean,
                min,
                max,
                n: values.len(),
            });
        }
    }
    out
}

fn write_atomic(path: &Path, content: &str) -> Result<(), HarnessError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn trials_csv(rows: &[TrialRow]) -> String {
    let mut out = String::from(TrialMetrics::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.metrics.csv_row());
        out.push('\n');
    }
    out
}

/// Parse a trial CSV back into metric rows (used to check that emitted
/// aggregates can be recomputed from the file exactly).
pub fn parse_trials_csv(text: &str) -> Result<Vec<TrialMetrics>, HarnessError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != TrialMetrics::CSV_HEADER {
                return Err(HarnessError::Config(format!("bad CSV header {line:?}")));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(HarnessError::Config(format!(
                "line {}: expected 9 fields",
                i + 1
            )));
        }
        let num = |s: &str| -> Result<f64, HarnessError> {
            s.parse()
                .map_err(|_| HarnessError::Config(format!("bad number {s:?}")))
        };
        rows.push(TrialMetrics {
            seed: f[0]
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad seed {:?}", f[0])))?,
            policy_label: f[1].to_string(),
            evacuees: f[2]
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad count {:?}", f[2])))?,
            survivor_fraction: num(f[3])?,
            deaths: f[4]
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad deaths {:?}", f[4])))?,
            congestion_events: f[5]
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad congestion {:?}", f[5])))?,
            avg_evac_time_s: num(f[6])?,
            avg_health: num(f[7])?,
            total_energy: num(f[8])?,
            truncated: false,
        });
    }
    Ok(rows)
}

pub fn aggregates_csv(aggs: &[AggregateRow]) -> String {
    let mut out = String::from("series,evacuees,metric,mean,min,max,count\n");
    for a in aggs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            a.series, a.count, a.metric, a.mean, a.min, a.max, a.n
        ));
    }
    out
}

/// One grouped-bar file per metric: `group,series,mean,min,max`, group is
/// the evacuee count.
pub fn plot_data(aggs: &[AggregateRow], metric: &str) -> String {
    let mut out = String::from("group,series,mean,min,max\n");
    for a in aggs.iter().filter(|a| a.metric == metric) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            a.count, a.series, a.mean, a.min, a.max
        ));
    }
    out
}

/// Parse a plot file back (round-trip fidelity check).
pub fn parse_plot_data(text: &str) -> Result<Vec<(usize, String, f64, f64, f64)>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(HarnessError::Config(format!(
                "plot line {}: expected 5 fields",
                i + 1
            )));
        }
        let num = |s: &str| -> Result<f64, HarnessError> {
            s.parse()
                .map_err(|_| HarnessError::Config(format!("bad number {s:?}")))
        };
        out.push((
            f[0].parse()
                .map_err(|_| HarnessError::Config(format!("bad group {:?}", f[0])))?,
            f[1].to_string(),
            num(f[2])?,
            num(f[3])?,
            num(f[4])?,
        ));
    }
    Ok(out)
}

/// Write trials, aggregates, plot files and the failure log into `dir`.
pub fn write_outputs(dir: &Path, out: &SweepOutput) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("trials.csv"), &trials_csv(&out.rows))?;
    write_atomic(&dir.join("aggregates.csv"), &aggregates_csv(&out.aggregates))?;
    for metric in METRIC_NAMES {
        write_atomic(
            &dir.join(format!("plot_{metric}.csv")),
            &plot_data(&out.aggregates, metric),
        )?;
    }
    if !out.failures.is_empty() {
        let mut log = String::from("series,seed,error\n");
        for f in &out.failures {
            log.push_str(&format!(
                "{},{},{}\n",
                f.cell.series(),
                f.seed,
                f.error.replace(',', ";")
            ));
        }
        write_atomic(&dir.join("errors.csv"), &log)?;
    }
    Ok(())
}
