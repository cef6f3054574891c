//! Azure packing trace: a VM-type table (one row per compatible VM type and
//! PM type pair, with fractional usage per resource) and a request table.
//!
//! One candidate instance is built per PM type. Empty candidates, exact
//! duplicates and the trivial candidate (every active VM always fits one
//! PM) are dropped.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{column_indices, is_null, multiset_digest, IngestError};
use crate::engine::bound::peak_aggregate;
use crate::types::{Instance, Item, SizeVector, TimePoint, CAPACITY_EPS};

/// Requests ending after this many days are extended-monitoring records.
pub const MAX_END_DAYS: f64 = 14.0;

/// Resource order in [`AzureVmType::usage`].
pub const RESOURCES: [&str; 5] = ["core", "memory", "hdd", "ssd", "nic"];
const HDD: usize = 2;

/// Header names in the exported tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AzureColumns {
    pub vm_type_id: String,
    pub machine_id: String,
    pub core: String,
    pub memory: String,
    pub hdd: String,
    pub ssd: String,
    pub nic: String,
    pub start_time: String,
    pub end_time: String,
}

impl Default for AzureColumns {
    fn default() -> Self {
        AzureColumns {
            vm_type_id: "vmTypeId".into(),
            machine_id: "machineId".into(),
            core: "core".into(),
            memory: "memory".into(),
            hdd: "hdd".into(),
            ssd: "ssd".into(),
            nic: "nic".into(),
            start_time: "starttime".into(),
            end_time: "endtime".into(),
        }
    }
}

/// Usage of one VM type on one PM type, as fractions of the PM's capacity.
#[derive(Clone, Debug, PartialEq)]
pub struct AzureVmType {
    pub vm_type: Arc<str>,
    pub pm_type: Arc<str>,
    /// core, memory, hdd, ssd, nic; nulls read as 0.
    pub usage: [f64; 5],
}

#[derive(Clone, Debug, PartialEq)]
pub struct AzureVmRequest {
    /// Data row number (1-based), used as the item id.
    pub row: u64,
    pub vm_type: Arc<str>,
    /// Fractional days since the trace start.
    pub start: f64,
    pub end: Option<f64>,
}

/// Shares one allocation per distinct id string.
#[derive(Default)]
struct Interner(HashMap<String, Arc<str>>);

impl Interner {
    fn get(&mut self, s: &str) -> Arc<str> {
        let s = s.trim();
        if let Some(a) = self.0.get(s) {
            return a.clone();
        }
        let a: Arc<str> = Arc::from(s);
        self.0.insert(s.to_string(), a.clone());
        a
    }
}

fn csv_error(file: &str) -> impl Fn(csv::Error) -> IngestError + '_ {
    move |source| IngestError::Csv {
        file: file.to_string(),
        source,
    }
}

pub fn read_vm_types(input: impl Read, cols: &AzureColumns, file: &str) -> Result<Vec<AzureVmType>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers().map_err(csv_error(file))?.clone();
    let idx = column_indices(
        file,
        &headers,
        &[&cols.vm_type_id, &cols.machine_id, &cols.core, &cols.memory, &cols.hdd, &cols.ssd, &cols.nic],
    )?;
    let mut interner = Interner::default();
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 0u64;
    while reader.read_record(&mut record).map_err(csv_error(file))? {
        row += 1;
        let get = |k: usize| record.get(idx[k]).unwrap_or("");
        let mut usage = [0.0; 5];
        for (r, slot) in usage.iter_mut().enumerate() {
            let field = get(2 + r);
            if !is_null(field) {
                let v: f64 = field.trim().parse().map_err(|_| IngestError::Row {
                    file: file.to_string(),
                    row,
                    message: format!("{} '{field}' is not a number", RESOURCES[r]),
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(IngestError::Row {
                        file: file.to_string(),
                        row,
                        message: format!("{} usage {v} outside [0, 1]", RESOURCES[r]),
                    });
                }
                *slot = v;
            }
        }
        out.push(AzureVmType {
            vm_type: interner.get(get(0)),
            pm_type: interner.get(get(1)),
            usage,
        });
    }
    Ok(out)
}

pub fn read_vm_requests(
    input: impl Read,
    cols: &AzureColumns,
    file: &str,
) -> Result<Vec<AzureVmRequest>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers().map_err(csv_error(file))?.clone();
    let idx = column_indices(file, &headers, &[&cols.vm_type_id, &cols.start_time, &cols.end_time])?;
    let mut interner = Interner::default();
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 0u64;
    while reader.read_record(&mut record).map_err(csv_error(file))? {
        row += 1;
        let get = |k: usize| record.get(idx[k]).unwrap_or("");
        let number = |k: usize, what: &str| -> Result<Option<f64>, IngestError> {
            let field = get(k);
            if is_null(field) {
                return Ok(None);
            }
            field.trim().parse().map(Some).map_err(|_| IngestError::Row {
                file: file.to_string(),
                row,
                message: format!("{what} '{field}' is not a number"),
            })
        };
        let start = number(1, "starttime")?.ok_or_else(|| IngestError::Row {
            file: file.to_string(),
            row,
            message: "starttime is null".into(),
        })?;
        let end = number(2, "endtime")?;
        out.push(AzureVmRequest {
            row,
            vm_type: interner.get(get(0)),
            start,
            end,
        });
    }
    Ok(out)
}

/// Keeps requests with a known end, a non-negative start and an end within
/// the 14-day window.
pub fn clean_azure(requests: Vec<AzureVmRequest>) -> Vec<AzureVmRequest> {
    requests
        .into_iter()
        .filter(|r| r.start >= 0.0 && r.end.is_some_and(|e| e <= MAX_END_DAYS))
        .collect()
}

/// What instance construction kept and dropped.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AzureBuild {
    pub candidates: usize,
    pub kept: Vec<String>,
    pub empty: Vec<String>,
    /// (dropped, identical to)
    pub duplicates: Vec<(String, String)>,
    pub trivial: Vec<String>,
    /// Requests whose duration rounds to zero microseconds.
    pub zero_duration_dropped: u64,
}

fn pm_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

/// Builds instances one PM type at a time and hands each kept instance to
/// `sink`, so only one candidate is in memory at once.
pub fn build_azure_instances_with(
    types: &[AzureVmType],
    requests: &[AzureVmRequest],
    mut sink: impl FnMut(Instance) -> Result<(), IngestError>,
) -> Result<AzureBuild, IngestError> {
    let mut by_pm: BTreeMap<&str, HashMap<&str, [f64; 5]>> = BTreeMap::new();
    for t in types {
        by_pm.entry(&t.pm_type).or_default().insert(&t.vm_type, t.usage);
    }
    let mut pms: Vec<&str> = by_pm.keys().copied().collect();
    pms.sort_by(|a, b| pm_order(a, b));

    let mut report = AzureBuild {
        candidates: pms.len(),
        ..AzureBuild::default()
    };
    let mut digests: HashMap<String, String> = HashMap::new();
    for pm in pms {
        let compat = &by_pm[pm];
        let name = format!("azure-pm{pm}");
        let keep_hdd = compat.values().any(|u| u[HDD] != 0.0);
        let dims: Vec<usize> = (0..5).filter(|&r| keep_hdd || r != HDD).collect();
        let mut items = Vec::new();
        let mut comps = [0.0; 5];
        for req in requests {
            let Some(usage) = compat.get(&*req.vm_type) else {
                continue;
            };
            let Some(end) = req.end else { continue };
            let arrival = TimePoint::from_days_f64(req.start);
            let departure = TimePoint::from_days_f64(end);
            if departure <= arrival {
                report.zero_duration_dropped += 1;
                continue;
            }
            for (k, &r) in dims.iter().enumerate() {
                comps[k] = usage[r];
            }
            let size = SizeVector::new(&comps[..dims.len()]).map_err(|e| IngestError::Row {
                file: name.clone(),
                row: req.row,
                message: e.to_string(),
            })?;
            items.push(Item::new(req.row, size, arrival, departure));
        }
        if items.is_empty() {
            report.empty.push(name);
            continue;
        }
        let instance = Instance::new(name.clone(), dims.len(), items)?;
        let digest = multiset_digest(&instance);
        if let Some(first) = digests.get(&digest) {
            report.duplicates.push((name, first.clone()));
            continue;
        }
        digests.insert(digest, name.clone());
        if peak_aggregate(&instance) <= 1.0 + CAPACITY_EPS {
            report.trivial.push(name);
            continue;
        }
        report.kept.push(name);
        sink(instance)?;
    }
    Ok(report)
}

/// Collects every kept instance; see [`build_azure_instances_with`].
pub fn build_azure_instances(
    types: &[AzureVmType],
    requests: &[AzureVmRequest],
) -> Result<(Vec<Instance>, AzureBuild), IngestError> {
    let mut out = Vec::new();
    let report = build_azure_instances_with(types, requests, |inst| {
        out.push(inst);
        Ok(())
    })?;
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::MICROS_PER_DAY;

    const TYPES: &str = "\
id,vmTypeId,machineId,core,memory,hdd,ssd,nic
0,1,10,0.5,0.25,,0.1,0.1
1,2,10,0.25,0.5,0,0.2,0.1
2,1,11,0.5,0.25,0.3,0.1,0.1
3,2,11,0.25,0.5,NULL,0.2,0.1
4,1,12,0.5,0.25,0,0.1,0.1
5,2,12,0.25,0.5,0,0.2,0.1
6,3,13,0.1,0.1,0,0.1,0.1
7,4,14,0.5,0.5,0,0.5,0.5
";

    const REQUESTS: &str = "\
vmId,tenantId,vmTypeId,priority,starttime,endtime
1,0,1,0,0.0,1.0
2,0,2,0,0.5,2.0
3,0,1,0,0.25,1.5
4,0,2,0,-0.1,2.0
5,0,1,0,1.0,20.0
6,0,2,0,1.0,
7,0,3,0,1.0,2.0
";

    fn load() -> (Vec<AzureVmType>, Vec<AzureVmRequest>) {
        let cols = AzureColumns::default();
        let types = read_vm_types(TYPES.as_bytes(), &cols, "types").unwrap();
        let reqs = read_vm_requests(REQUESTS.as_bytes(), &cols, "requests").unwrap();
        (types, reqs)
    }

    #[test]
    fn cleaning_rules() {
        let (_, reqs) = load();
        assert_eq!(reqs.len(), 7);
        let kept = clean_azure(reqs.clone());
        let rows: Vec<u64> = kept.iter().map(|r| r.row).collect();
        assert_eq!(rows, vec![1, 2, 3, 7]);
        assert_eq!(clean_azure(kept.clone()), kept);
    }

    #[test]
    fn builds_per_pm_type() {
        let (types, reqs) = load();
        let (instances, report) = build_azure_instances(&types, &clean_azure(reqs)).unwrap();
        assert_eq!(report.candidates, 5);
        // PM 12 repeats PM 10 exactly; PM 13 only hosts a tiny VM; PM 14
        // hosts no requested type.
        assert_eq!(report.kept, vec!["azure-pm10", "azure-pm11"]);
        assert_eq!(report.duplicates, vec![("azure-pm12".to_string(), "azure-pm10".to_string())]);
        assert_eq!(report.trivial, vec!["azure-pm13"]);
        assert_eq!(report.empty, vec!["azure-pm14"]);

        let pm10 = &instances[0];
        assert_eq!(pm10.d(), 4, "all-zero or null HDD drops the dimension");
        assert_eq!(instances[1].d(), 5);
        assert_eq!(pm10.len(), 3);
        let first = &pm10.items()[0];
        assert_eq!(first.size.as_slice(), &[0.5, 0.25, 0.1, 0.1]);
        assert_eq!(first.duration(), MICROS_PER_DAY);
        for inst in &instances {
            let min = inst.items().iter().map(Item::duration).min().unwrap();
            assert_eq!(min, inst.min_duration());
            assert!(inst.items().iter().all(|it| it.duration() > 0));
        }
    }

    #[test]
    fn missing_column_and_bad_rows() {
        let cols = AzureColumns::default();
        let err = read_vm_types("vmTypeId,core\n1,0.5\n".as_bytes(), &cols, "t").unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn { .. }));
        let bad = "vmTypeId,starttime,endtime\n1,0.5,1\n1,abc,2\n";
        match read_vm_requests(bad.as_bytes(), &cols, "r") {
            Err(IngestError::Row { row: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn custom_column_names() {
        let cols = AzureColumns {
            start_time: "start".into(),
            end_time: "stop".into(),
            ..AzureColumns::default()
        };
        let reqs = read_vm_requests("vmTypeId,start,stop\n1,0.5,1\n".as_bytes(), &cols, "r").unwrap();
        assert_eq!(reqs[0].end, Some(1.0));
    }
}
