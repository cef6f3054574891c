//! Trace parsing, cleaning and instance construction.

pub mod azure;
pub mod histogram;
pub mod huawei;
pub mod instance_file;

use std::io;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::types::{Instance, InstanceError};

pub use azure::{build_azure_instances, build_azure_instances_with, clean_azure, AzureBuild, AzureColumns, AzureVmRequest, AzureVmType};
pub use histogram::{lifetime_histogram, LifetimeHistogram};
pub use huawei::{parse_huawei, Capacity, HuaweiBuild, HuaweiColumns};
pub use instance_file::{read_instance, read_instance_file, write_instance, write_instance_file};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{file}: {source}")]
    Csv { file: String, source: csv::Error },
    #[error("{file}: missing column '{column}'")]
    MissingColumn { file: String, column: String },
    #[error("{file}, row {row}: {message}")]
    Row { file: String, row: u64, message: String },
    #[error("{file}: {message}")]
    Format { file: String, message: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Position of each requested column in a header row.
pub(crate) fn column_indices(
    file: &str,
    headers: &csv::StringRecord,
    names: &[&str],
) -> Result<Vec<usize>, IngestError> {
    names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
                .ok_or_else(|| IngestError::MissingColumn {
                    file: file.to_string(),
                    column: name.to_string(),
                })
        })
        .collect()
}

/// Null markers read as "no value".
pub(crate) fn is_null(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || ["null", "none", "nan", "na"].iter().any(|n| f.eq_ignore_ascii_case(n))
}

/// SHA-256 of the instance's item multiset: dimension count plus every
/// item's (size, arrival, departure), sorted. Ids and the name are ignored,
/// so two instances with the same items in any order or labeling match.
pub fn multiset_digest(instance: &Instance) -> String {
    let mut rows: Vec<Vec<u8>> = instance
        .items()
        .iter()
        .map(|it| {
            let mut row = Vec::with_capacity(8 * (it.size.dims() + 2));
            for x in it.size.as_slice() {
                row.extend_from_slice(&x.to_bits().to_le_bytes());
            }
            row.extend_from_slice(&it.arrival.0.to_le_bytes());
            row.extend_from_slice(&it.departure.0.to_le_bytes());
            row
        })
        .collect();
    rows.sort_unstable();
    let mut hasher = Sha256::new();
    hasher.update((instance.d() as u64).to_le_bytes());
    for row in rows {
        hasher.update(&row);
    }
    hex::encode(hasher.finalize())
}

/// SHA-256 of a byte slice, hex encoded.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
