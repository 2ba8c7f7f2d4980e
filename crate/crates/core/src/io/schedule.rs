use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::model::{Allocation, Instance, Metrics};
use crate::rational::{format_rational, parse_rational, to_f64};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

const HEADER: [&str; 3] = ["agent_id", "start", "end"];

/// CSV rows `agent_id,start,end`, one per maximal connection interval.
/// Times are exact decimals (or `p/q` when the expansion does not terminate).
pub fn write_schedule_csv(instance: &Instance, allocation: &Allocation) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Schedule(e.to_string());
    w.write_record(HEADER).map_err(csv_err)?;
    for (agent, set) in instance.agents().iter().zip(allocation.pieces()) {
        for iv in set.iter() {
            w.write_record([
                agent.id.to_string(),
                format_rational(iv.start()),
                format_rational(iv.end()),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Schedule(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ASCII output"))
}

pub fn read_schedule_csv(text: &str, instance: &Instance) -> Result<Allocation> {
    let position: HashMap<usize, usize> = instance
        .agents()
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id, i))
        .collect();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Schedule(e.to_string()))?
        .clone();
    if headers.iter().map(str::trim).ne(HEADER) {
        return Err(Error::Schedule(format!(
            "expected header {}, found {}",
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut pieces: Vec<Vec<Interval>> = vec![Vec::new(); instance.n()];
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::Schedule(format!("line {line}: {e}")))?;
        let id: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::Schedule(format!("line {line}: bad agent id {:?}", &record[0])))?;
        let i = *position
            .get(&id)
            .ok_or_else(|| Error::Schedule(format!("line {line}: unknown agent id {id}")))?;
        let start = parse_rational(&record[1])
            .map_err(|e| Error::Schedule(format!("line {line}: {e}")))?;
        let end = parse_rational(&record[2])
            .map_err(|e| Error::Schedule(format!("line {line}: {e}")))?;
        let iv = Interval::new(start, end)
            .ok_or_else(|| Error::Schedule(format!("line {line}: empty or reversed interval")))?;
        pieces[i].push(iv);
    }
    Ok(Allocation::new(
        pieces.into_iter().map(IntervalSet::from_intervals).collect(),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub id: usize,
    pub utility: String,
    pub utility_f64: f64,
    pub pieces: usize,
}

/// Exact values as strings, with float companions for quick reading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsBlock {
    pub egalitarian: String,
    pub egalitarian_f64: f64,
    pub utilitarian: String,
    pub utilitarian_f64: f64,
    pub max_difference: String,
    pub max_difference_f64: f64,
    pub switch_count: usize,
    pub per_agent: Vec<AgentMetrics>,
}

impl MetricsBlock {
    pub fn new(instance: &Instance, metrics: &Metrics) -> Self {
        Self {
            egalitarian: format_rational(&metrics.egalitarian),
            egalitarian_f64: metrics.egalitarian_f64(),
            utilitarian: format_rational(&metrics.utilitarian),
            utilitarian_f64: metrics.utilitarian_f64(),
            max_difference: format_rational(&metrics.max_difference),
            max_difference_f64: metrics.max_difference_f64(),
            switch_count: metrics.switch_count,
            per_agent: instance
                .agents()
                .iter()
                .zip(&metrics.per_agent_utility)
                .zip(&metrics.per_agent_pieces)
                .map(|((a, u), &pieces)| AgentMetrics {
                    id: a.id,
                    utility: format_rational(u),
                    utility_f64: to_f64(u),
                    pieces,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub solver: String,
    pub parameters: BTreeMap<String, String>,
    /// `false` when a heuristic fallback or an exhausted time budget was involved.
    pub optimal: bool,
    pub seed: Option<u64>,
    pub version: String,
}

impl Provenance {
    pub fn new(solver: impl Into<String>, optimal: bool) -> Self {
        Self {
            solver: solver.into(),
            parameters: BTreeMap::new(),
            optimal,
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn with_parameter(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }
}

/// Contents of the JSON sidecar written next to a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub metrics: MetricsBlock,
    pub provenance: Provenance,
    /// Solver-specific extras (set shares, packings, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

/// `schedule.csv` → `schedule.csv.metrics.json`.
pub fn sidecar_path(schedule: impl AsRef<Path>) -> PathBuf {
    let mut p = schedule.as_ref().as_os_str().to_owned();
    p.push(".metrics.json");
    PathBuf::from(p)
}

pub fn write_schedule(
    path: impl AsRef<Path>,
    instance: &Instance,
    allocation: &Allocation,
    report: &ScheduleReport,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_schedule_csv(instance, allocation)?)?;
    let json = serde_json::to_string_pretty(report).expect("serializable report");
    std::fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn read_schedule(path: impl AsRef<Path>, instance: &Instance) -> Result<Allocation> {
    read_schedule_csv(&std::fs::read_to_string(path)?, instance)
}
