use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use randrec::json::format_f64;
use randrec::simulate::{BlockSample, StationaryDraw};
use serde::Deserialize;

use crate::error::CliError;

/// Opens `path` for writing, or stdout when `path` is `None`.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| {
            CliError::Io {
                path: p.to_path_buf(),
                source,
            }
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn out_err(e: impl std::fmt::Display) -> CliError {
    CliError::Output(e.to_string())
}

pub fn write_samples(
    w: impl Write,
    states: &[String],
    draws: &[StationaryDraw],
) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["state", "r_value", "shard", "index"])
        .map_err(out_err)?;
    for d in draws {
        csv.write_record([
            states[d.state].as_str(),
            &format_f64(d.r),
            &d.shard.to_string(),
            &d.index.to_string(),
        ])
        .map_err(out_err)?;
    }
    csv.flush().map_err(out_err)
}

pub fn write_blocks(
    w: impl Write,
    states: &[String],
    blocks: &[BlockSample],
) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["start_state", "length", "a", "b"])
        .map_err(out_err)?;
    for b in blocks {
        csv.write_record([
            states[b.start_state].as_str(),
            &b.length.to_string(),
            &format_f64(b.a),
            &format_f64(b.b),
        ])
        .map_err(out_err)?;
    }
    csv.flush().map_err(out_err)
}

#[derive(Debug, Deserialize)]
struct Row {
    state: String,
    r_value: f64,
    #[allow(dead_code)]
    shard: usize,
    #[allow(dead_code)]
    index: usize,
}

/// Samples read back from a `simulate` CSV, with states numbered by `names`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub names: Vec<String>,
    pub samples: Vec<(usize, f64)>,
}

/// Reads a sample CSV. State labels are numbered in the order of `names`
/// when given, otherwise in sorted order.
pub fn read_samples(path: &Path, names: Option<&[String]>) -> Result<SampleFile, CliError> {
    let csv_err = |message: String| CliError::Csv {
        path: PathBuf::from(path),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(e.to_string()))?;
    let mut rows = Vec::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| csv_err(e.to_string()))?;
        if !row.r_value.is_finite() {
            return Err(csv_err(format!(
                "record {}: r_value is not finite",
                line + 1
            )));
        }
        rows.push(row);
    }
    let names: Vec<String> = match names {
        Some(n) => n.to_vec(),
        None => {
            let mut n: Vec<String> = rows.iter().map(|r| r.state.clone()).collect();
            n.sort();
            n.dedup();
            n
        }
    };
    let samples = rows
        .into_iter()
        .enumerate()
        .map(|(line, r)| match names.iter().position(|s| *s == r.state) {
            Some(i) => Ok((i, r.r_value)),
            None => Err(csv_err(format!(
                "record {}: unknown state {:?}",
                line + 1,
                r.state
            ))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampleFile { names, samples })
}
