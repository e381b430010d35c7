use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::EmitFlags;
use super::trial::TrialRecord;

pub const CSV_HEADER: &str = "n,m,trial,seed,l_k,identity_bound,vol_root,inradius,mean_square,max_facet_cross,facet_count,resampled,wall_time_ms";

pub const CSV_FILE: &str = "records.csv";
pub const JSONL_FILE: &str = "records.jsonl";

/// 17 significant digits, which round-trips every f64 exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fields(r: &TrialRecord) -> Result<[(&'static str, String); 13]> {
    let floats = [
        r.l_k,
        r.identity_bound,
        r.vol_root,
        r.inradius,
        r.mean_square,
        r.max_facet_cross,
        r.wall_time_ms,
    ];
    if floats.iter().any(|x| !x.is_finite()) {
        return Err(Error::ContractViolation(format!(
            "non-finite value in record {r:?}"
        )));
    }
    Ok([
        ("n", r.n.to_string()),
        ("m", r.m.to_string()),
        ("trial", r.trial.to_string()),
        ("seed", r.seed.to_string()),
        ("l_k", format_float(r.l_k)),
        ("identity_bound", format_float(r.identity_bound)),
        ("vol_root", format_float(r.vol_root)),
        ("inradius", format_float(r.inradius)),
        ("mean_square", format_float(r.mean_square)),
        ("max_facet_cross", format_float(r.max_facet_cross)),
        ("facet_count", r.facet_count.to_string()),
        ("resampled", r.resampled.to_string()),
        ("wall_time_ms", format_float(r.wall_time_ms)),
    ])
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        let row = fields(r).map_err(std::io::Error::other)?;
        w.write_record(row.iter().map(|(_, v)| v.as_str()))?;
    }
    w.flush()
}

pub fn write_jsonl<W: Write>(records: &[TrialRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        let row = fields(r).map_err(std::io::Error::other)?;
        let body: Vec<String> = row.iter().map(|(k, v)| format!("\"{k}\":{v}")).collect();
        writeln!(out, "{{{}}}", body.join(","))?;
    }
    out.flush()
}

/// Writes the requested formats into `dir` and returns the paths written.
pub fn emit_records(records: &[TrialRecord], dir: &Path, flags: EmitFlags) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if flags.csv {
        let path = dir.join(CSV_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_csv(records, BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    if flags.jsonl {
        let path = dir.join(JSONL_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_jsonl(records, BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

pub fn parse_csv<R: std::io::Read>(input: R, path: &Path) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, e))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(parse_error(path, format!("unexpected header {header:?}")));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| parse_error(path, e)))
        .collect()
}

pub fn parse_jsonl<R: BufRead>(input: R, path: &Path) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| parse_error(path, format!("line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(BufReader::new(file), path)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file), path)
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}
