//! Plain-text instance files.
//!
//! ```text
//! # dvbp-instance v1
//! # name=azure-pm3
//! # d=4
//! id,s1,s2,s3,s4,arrival_us,departure_us
//! 0,0.125,0.0625,0,0.03125,0,86400000000
//! ```
//!
//! Sizes are written in shortest round-trip form, so reading a written file
//! reproduces the instance bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::IngestError;
use crate::types::{Instance, Item, SizeVector, TimePoint, MAX_DIM};

const MAGIC: &str = "# dvbp-instance v1";

pub fn write_instance(out: impl Write, instance: &Instance) -> Result<(), IngestError> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "# name={}", instance.name())?;
    writeln!(out, "# d={}", instance.d())?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |source| IngestError::Csv {
        file: instance.name().to_string(),
        source,
    };
    let mut header = vec!["id".to_string()];
    header.extend((1..=instance.d()).map(|k| format!("s{k}")));
    header.extend(["arrival_us".to_string(), "departure_us".to_string()]);
    w.write_record(&header).map_err(csv_err)?;
    let mut row: Vec<String> = Vec::with_capacity(instance.d() + 3);
    for it in instance.items() {
        row.clear();
        row.push(it.id.0.to_string());
        row.extend(it.size.as_slice().iter().map(|x| x.to_string()));
        row.push(it.arrival.0.to_string());
        row.push(it.departure.0.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_instance_file(path: &Path, instance: &Instance) -> Result<(), IngestError> {
    write_instance(File::create(path)?, instance)
}

pub fn read_instance(input: impl Read, source: &str) -> Result<Instance, IngestError> {
    let mut input = BufReader::new(input);
    let fmt_err = |message: String| IngestError::Format {
        file: source.to_string(),
        message,
    };
    let mut name = None;
    let mut d = None;
    let mut first = String::new();
    input.read_line(&mut first)?;
    if first.trim_end() != MAGIC {
        return Err(fmt_err(format!("expected '{MAGIC}' on the first line")));
    }
    loop {
        let buf = input.fill_buf()?;
        if buf.first() != Some(&b'#') {
            break;
        }
        let mut line = String::new();
        input.read_line(&mut line)?;
        let body = line.trim_start_matches('#').trim();
        if let Some((key, value)) = body.split_once('=') {
            match key.trim() {
                "name" => name = Some(value.trim().to_string()),
                "d" => d = Some(value.trim().parse::<usize>().map_err(|_| fmt_err(format!("bad d '{value}'")))?),
                _ => {}
            }
        }
    }
    let d = d.ok_or_else(|| fmt_err("missing '# d=' line".into()))?;
    if d == 0 || d > MAX_DIM {
        return Err(fmt_err(format!("d={d} outside 1..={MAX_DIM}")));
    }
    let name = name.unwrap_or_else(|| source.to_string());

    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let mut items = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 0u64;
    let row_err = |row: u64, message: String| IngestError::Row {
        file: source.to_string(),
        row,
        message,
    };
    let mut sizes = [0.0; MAX_DIM];
    loop {
        let more = reader.read_record(&mut record).map_err(|source_err| IngestError::Csv {
            file: source.to_string(),
            source: source_err,
        })?;
        if !more {
            break;
        }
        row += 1;
        if record.len() != d + 3 {
            return Err(row_err(row, format!("expected {} fields, found {}", d + 3, record.len())));
        }
        let field = |k: usize| record[k].trim();
        let id: u64 = field(0).parse().map_err(|_| row_err(row, format!("bad id '{}'", field(0))))?;
        for k in 0..d {
            sizes[k] = field(k + 1)
                .parse()
                .map_err(|_| row_err(row, format!("bad size '{}'", field(k + 1))))?;
        }
        let size = SizeVector::new(&sizes[..d]).map_err(|e| row_err(row, e.to_string()))?;
        let arrival: i64 = field(d + 1)
            .parse()
            .map_err(|_| row_err(row, format!("bad arrival '{}'", field(d + 1))))?;
        let departure: i64 = field(d + 2)
            .parse()
            .map_err(|_| row_err(row, format!("bad departure '{}'", field(d + 2))))?;
        items.push(Item::new(id, size, TimePoint(arrival), TimePoint(departure)));
    }
    Ok(Instance::new(name, d, items)?)
}

pub fn read_instance_file(path: &Path) -> Result<Instance, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::Format {
        file: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_instance(file, &path.display().to_string())
}
