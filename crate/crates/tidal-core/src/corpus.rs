//! On-disk corpus formats.
//!
//! A corpus directory holds:
//!
//! - `requests.jsonl` — one provisioning request per line, snake_case fields
//! - `traces/disk_<id>.csv` — one CSV per disk with header `disk_id,sample_index,kbps`
//! - `ground_truth.csv` — header `disk_id,label,intensity_kbps`
//!
//! All three formats round-trip bit-exactly: floats are written in shortest
//! round-trip form and re-parsed to identical values.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::taxonomy::ApplicationClass;
use crate::workload::{DiskTrace, ProvisioningRequest};

pub const REQUESTS_FILE: &str = "requests.jsonl";
pub const TRACES_DIR: &str = "traces";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

/// Ground-truth row for one generated disk.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRecord {
    pub disk_id: u64,
    pub label: ApplicationClass,
    pub intensity_kbps: f64,
}

/// A full workload corpus held in memory.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    /// Requests sorted by arrival time.
    pub requests: Vec<ProvisioningRequest>,
    /// Traces keyed by disk id (= request id).
    pub traces: BTreeMap<u64, DiskTrace>,
    pub ground_truth: Vec<GroundTruthRecord>,
}

impl Corpus {
    pub fn trace(&self, disk_id: u64) -> Result<&DiskTrace> {
        self.traces
            .get(&disk_id)
            .ok_or_else(|| Error::missing(format!("trace for disk {disk_id}")))
    }

    pub fn ground_truth_map(&self) -> BTreeMap<u64, &GroundTruthRecord> {
        self.ground_truth.iter().map(|g| (g.disk_id, g)).collect()
    }

    /// Sum over disks of mean trace throughput, KB/s.
    pub fn total_mean_throughput(&self) -> f64 {
        self.traces.values().map(|t| t.mean()).sum()
    }
}

fn trace_file_name(disk_id: u64) -> String {
    format!("disk_{disk_id:06}.csv")
}

pub fn write_requests(path: &Path, requests: &[ProvisioningRequest]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in requests {
        serde_json::to_writer(&mut w, r)
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_requests(path: &Path) -> Result<Vec<ProvisioningRequest>> {
    let file = File::open(path)
        .map_err(|_| Error::missing(format!("requests file {}", path.display())))?;
    let mut requests = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ProvisioningRequest = serde_json::from_str(&line)
            .map_err(|e| Error::format(path.display().to_string(), format!("line {}: {e}", n + 1)))?;
        r.spec.validate()?;
        requests.push(r);
    }
    Ok(requests)
}

pub fn write_trace(dir: &Path, trace: &DiskTrace) -> Result<()> {
    let path = dir.join(trace_file_name(trace.disk_id));
    let mut w = BufWriter::new(File::create(&path)?);
    w.write_all(b"disk_id,sample_index,kbps\n")?;
    for (i, s) in trace.samples.iter().enumerate() {
        writeln!(w, "{},{},{}", trace.disk_id, i, s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<DiskTrace> {
    let file =
        File::open(path).map_err(|_| Error::missing(format!("trace file {}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "disk_id,sample_index,kbps" => {}
        _ => return Err(Error::format(path.display().to_string(), "bad trace header")),
    }
    let mut disk_id = None;
    let mut samples = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let err = |msg: &str| Error::format(path.display().to_string(), format!("row {}: {msg}", n + 2));
        let id: u64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err("bad disk_id"))?;
        let idx: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err("bad sample_index"))?;
        let kbps: f64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err("bad kbps"))?;
        if idx != samples.len() {
            return Err(err("sample_index out of order"));
        }
        match disk_id {
            None => disk_id = Some(id),
            Some(d) if d == id => {}
            Some(_) => return Err(err("mixed disk ids in one trace file")),
        }
        samples.push(kbps);
    }
    let disk_id = disk_id.ok_or_else(|| Error::format(path.display().to_string(), "empty trace"))?;
    DiskTrace::new(disk_id, samples)
}

pub fn write_ground_truth(path: &Path, records: &[GroundTruthRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"disk_id,label,intensity_kbps\n")?;
    for g in records {
        writeln!(w, "{},{},{}", g.disk_id, g.label.label(), g.intensity_kbps)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthRecord>> {
    let file = File::open(path)
        .map_err(|_| Error::missing(format!("ground truth file {}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "disk_id,label,intensity_kbps" => {}
        _ => return Err(Error::format(path.display().to_string(), "bad ground truth header")),
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err =
            |msg: String| Error::format(path.display().to_string(), format!("row {}: {msg}", n + 2));
        let mut parts = line.split(',');
        let disk_id: u64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err("bad disk_id".into()))?;
        let label = parts
            .next()
            .map(ApplicationClass::parse)
            .transpose()
            .map_err(|e| err(e.to_string()))?
            .ok_or_else(|| err("missing label".into()))?;
        let intensity_kbps: f64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err("bad intensity_kbps".into()))?;
        out.push(GroundTruthRecord { disk_id, label, intensity_kbps });
    }
    Ok(out)
}

/// Writes a whole corpus under `dir`, creating `dir` and `dir/traces`.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<()> {
    fs::create_dir_all(dir.join(TRACES_DIR))?;
    write_requests(&dir.join(REQUESTS_FILE), &corpus.requests)?;
    for trace in corpus.traces.values() {
        write_trace(&dir.join(TRACES_DIR), trace)?;
    }
    write_ground_truth(&dir.join(GROUND_TRUTH_FILE), &corpus.ground_truth)?;
    Ok(())
}

/// Loads a corpus directory written by [`write_corpus`].
pub fn read_corpus(dir: &Path) -> Result<Corpus> {
    let requests = read_requests(&dir.join(REQUESTS_FILE))?;
    let traces_dir = dir.join(TRACES_DIR);
    if !traces_dir.is_dir() {
        return Err(Error::missing(format!("traces directory {}", traces_dir.display())));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(&traces_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut traces = BTreeMap::new();
    for p in paths {
        let t = read_trace(&p)?;
        traces.insert(t.disk_id, t);
    }
    let ground_truth = read_ground_truth(&dir.join(GROUND_TRUTH_FILE))?;
    Ok(Corpus { requests, traces, ground_truth })
}
