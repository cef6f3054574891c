//! Huawei Cloud VM placement events: one row per creation or termination.
//!
//! VMs are paired by id. Since the trace carries no PM capacities, one
//! instance is emitted per assumed (cores, GB) capacity.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{column_indices, IngestError};
use crate::types::{Instance, Item, SizeVector, TimePoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HuaweiColumns {
    pub vm_id: String,
    pub time: String,
    pub cpu: String,
    pub memory: String,
    pub kind: String,
    /// Microseconds per unit of the time column.
    pub time_unit_us: f64,
}

impl Default for HuaweiColumns {
    fn default() -> Self {
        HuaweiColumns {
            vm_id: "vmid".into(),
            time: "time".into(),
            cpu: "cpu".into(),
            memory: "memory".into(),
            kind: "type".into(),
            time_unit_us: 1e6,
        }
    }
}

/// PM capacity in cores and GB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    pub cores: f64,
    pub memory_gb: f64,
}

impl Capacity {
    /// Cores {64, 100, 128} × GB {128, 200, 256}.
    pub fn default_grid() -> Vec<Capacity> {
        let mut out = Vec::with_capacity(9);
        for cores in [64.0, 100.0, 128.0] {
            for memory_gb in [128.0, 200.0, 256.0] {
                out.push(Capacity { cores, memory_gb });
            }
        }
        out
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.cores, self.memory_gb)
    }
}

impl FromStr for Capacity {
    type Err = String;

    /// `64x128` (cores x GB).
    fn from_str(s: &str) -> Result<Self, String> {
        let (c, m) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("capacity '{s}' should look like 64x128"))?;
        let cores: f64 = c.trim().parse().map_err(|_| format!("bad core count '{c}'"))?;
        let memory_gb: f64 = m.trim().parse().map_err(|_| format!("bad memory '{m}'"))?;
        if cores > 0.0 && memory_gb > 0.0 {
            Ok(Capacity { cores, memory_gb })
        } else {
            Err(format!("capacity '{s}' must be positive"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EventKind {
    Create,
    Terminate,
}

fn event_kind(field: &str) -> Option<EventKind> {
    match field.trim().to_ascii_lowercase().as_str() {
        "0" | "create" | "creation" | "start" => Some(EventKind::Create),
        "1" | "delete" | "deletion" | "terminate" | "termination" | "end" => Some(EventKind::Terminate),
        _ => None,
    }
}

/// A VM with both lifecycle events.
#[derive(Clone, Debug, PartialEq)]
pub struct HuaweiVm {
    pub cpu: f64,
    pub memory_gb: f64,
    pub created: TimePoint,
    pub terminated: TimePoint,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HuaweiBuild {
    pub events: u64,
    pub vms: usize,
    /// Creations without termination, or terminations without creation.
    pub unpaired_dropped: u64,
    /// Paired VMs whose lifetime is zero microseconds.
    pub zero_duration_dropped: u64,
    pub instances: Vec<String>,
}

#[derive(Default)]
struct Pending {
    cpu: f64,
    memory: f64,
    created: Option<TimePoint>,
    terminated: Option<TimePoint>,
    order: u64,
}

/// Reads the event table and pairs creation and termination events.
pub fn read_huawei_vms(
    input: impl Read,
    cols: &HuaweiColumns,
    file: &str,
) -> Result<(Vec<HuaweiVm>, HuaweiBuild), IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let csv_err = |source| IngestError::Csv {
        file: file.to_string(),
        source,
    };
    let headers = reader.headers().map_err(csv_err)?.clone();
    let idx = column_indices(file, &headers, &[&cols.vm_id, &cols.time, &cols.cpu, &cols.memory, &cols.kind])?;
    let mut vms: HashMap<String, Pending> = HashMap::new();
    let mut report = HuaweiBuild::default();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(csv_err)? {
        report.events += 1;
        let row = report.events;
        let get = |k: usize| record.get(idx[k]).unwrap_or("").trim();
        let row_err = |message: String| IngestError::Row {
            file: file.to_string(),
            row,
            message,
        };
        let num = |k: usize, what: &str| -> Result<f64, IngestError> {
            get(k).parse().map_err(|_| row_err(format!("{what} '{}' is not a number", get(k))))
        };
        let time = TimePoint((num(1, "time")? * cols.time_unit_us).round() as i64);
        let kind = event_kind(get(4)).ok_or_else(|| row_err(format!("unknown event type '{}'", get(4))))?;
        let next = vms.len() as u64;
        let vm = vms.entry(get(0).to_string()).or_insert_with(|| Pending {
            order: next,
            ..Pending::default()
        });
        match kind {
            EventKind::Create => {
                if vm.created.is_none() {
                    vm.created = Some(time);
                    vm.cpu = num(2, "cpu")?;
                    vm.memory = num(3, "memory")?;
                }
            }
            EventKind::Terminate => {
                if vm.terminated.is_none() {
                    vm.terminated = Some(time);
                }
            }
        }
    }
    let mut pending: Vec<Pending> = vms.into_values().collect();
    pending.sort_by_key(|p| p.order);
    let mut out = Vec::with_capacity(pending.len());
    for p in pending {
        match (p.created, p.terminated) {
            (Some(created), Some(terminated)) if terminated > created => out.push(HuaweiVm {
                cpu: p.cpu,
                memory_gb: p.memory,
                created,
                terminated,
            }),
            (Some(_), Some(_)) => report.zero_duration_dropped += 1,
            _ => report.unpaired_dropped += 1,
        }
    }
    report.vms = out.len();
    Ok((out, report))
}

/// One instance per capacity, sizes normalized by that capacity. Item ids
/// follow each VM's first appearance in the event table.
pub fn huawei_instances(vms: &[HuaweiVm], capacities: &[Capacity]) -> Result<Vec<Instance>, IngestError> {
    capacities
        .iter()
        .map(|cap| {
            let name = format!("huawei-{cap}");
            let items = vms
                .iter()
                .enumerate()
                .map(|(k, vm)| {
                    let size = SizeVector::new(&[vm.cpu / cap.cores, vm.memory_gb / cap.memory_gb]).map_err(|e| {
                        IngestError::Format {
                            file: name.clone(),
                            message: format!("VM {k} does not fit capacity {cap}: {e}"),
                        }
                    })?;
                    Ok(Item::new(k as u64, size, vm.created, vm.terminated))
                })
                .collect::<Result<Vec<_>, IngestError>>()?;
            Ok(Instance::new(name, 2, items)?)
        })
        .collect()
}

/// Reads events and emits one instance per capacity.
pub fn parse_huawei(
    input: impl Read,
    cols: &HuaweiColumns,
    capacities: &[Capacity],
    file: &str,
) -> Result<(Vec<Instance>, HuaweiBuild), IngestError> {
    let (vms, mut report) = read_huawei_vms(input, cols, file)?;
    let instances = huawei_instances(&vms, capacities)?;
    report.instances = instances.iter().map(|i| i.name().to_string()).collect();
    Ok((instances, report))
}
