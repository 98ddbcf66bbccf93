//! Canonical per-class temporal patterns and predicted-profile synthesis.
//!
//! For each application class the library stores the mean of the class
//! disks' mean-normalized K-slot day curves. At placement time a predicted
//! profile is the class pattern scaled by predicted intensity, so the
//! profile mean equals the intensity.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::load::LoadVector;
use crate::taxonomy::ApplicationClass;
use crate::workload::{aggregate_to_slots, validate_slot_count, DiskTrace};

/// Mean-normalized class-level daily shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalPattern {
    pub class: ApplicationClass,
    /// Mean-1 shape over K slots.
    pub shape: LoadVector,
    /// Number of disks the shape was averaged from.
    pub support: usize,
    /// True when the last refresh window carried no data for this class.
    pub stale: bool,
}

/// Lookup table from application class to canonical pattern.
///
/// Never contains an entry for `Unknown`.
#[derive(Debug, Clone, Default)]
pub struct ProfileLibrary {
    k: usize,
    patterns: BTreeMap<ApplicationClass, CanonicalPattern>,
}

/// Averages the admissible traces of one class into a canonical pattern.
///
/// Zero-mean traces carry no shape and are skipped; erroring only when no
/// trace is admissible.
pub fn build_pattern(class: ApplicationClass, traces: &[&DiskTrace], k: usize) -> Result<CanonicalPattern> {
    validate_slot_count(k)?;
    let mut acc = LoadVector::zeros(k);
    let mut support = 0usize;
    for trace in traces {
        let slots = aggregate_to_slots(trace, k)?;
        match slots.mean_normalize() {
            Ok(norm) => {
                acc.accumulate(&norm);
                support += 1;
            }
            Err(_) => continue, // zero-mean trace: excluded from construction
        }
    }
    if support == 0 {
        return Err(Error::data(format!(
            "no admissible trace to build a pattern for class {class}"
        )));
    }
    Ok(CanonicalPattern {
        class,
        shape: acc.scale(1.0 / support as f64),
        support,
        stale: false,
    })
}

/// Predicted load profile: intensity times the class pattern (mean = intensity).
pub fn synthesize_profile(intensity_kbps: f64, pattern: &CanonicalPattern) -> Result<LoadVector> {
    if !intensity_kbps.is_finite() || intensity_kbps < 0.0 {
        return Err(Error::data(format!("negative or non-finite intensity {intensity_kbps}")));
    }
    Ok(pattern.shape.scale(intensity_kbps))
}

impl ProfileLibrary {
    /// Assembles a library from prebuilt patterns of matching width.
    pub fn from_patterns(k: usize, patterns: impl IntoIterator<Item = CanonicalPattern>) -> Result<Self> {
        validate_slot_count(k)?;
        let mut map = BTreeMap::new();
        for p in patterns {
            if p.class == ApplicationClass::Unknown {
                return Err(Error::config("the profile library must not hold a pattern for unknown"));
            }
            if p.shape.len() != k {
                return Err(Error::config(format!(
                    "pattern for {} has {} slots, library expects {k}",
                    p.class,
                    p.shape.len()
                )));
            }
            map.insert(p.class, p);
        }
        Ok(ProfileLibrary { k, patterns: map })
    }

    /// Builds patterns for every class present in `traces_by_class`.
    pub fn build(traces_by_class: &BTreeMap<ApplicationClass, Vec<&DiskTrace>>, k: usize) -> Result<Self> {
        validate_slot_count(k)?;
        let mut patterns = BTreeMap::new();
        for (class, traces) in traces_by_class {
            if *class == ApplicationClass::Unknown || traces.is_empty() {
                continue;
            }
            match build_pattern(*class, traces, k) {
                Ok(p) => {
                    patterns.insert(*class, p);
                }
                Err(_) => continue, // class with only zero-mean traces: omitted
            }
        }
        Ok(ProfileLibrary { k, patterns })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, class: ApplicationClass) -> Option<&CanonicalPattern> {
        self.patterns.get(&class)
    }

    pub fn classes(&self) -> impl Iterator<Item = ApplicationClass> + '_ {
        self.patterns.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Rebuilds every pattern from a rolling window of recent traces.
    ///
    /// Classes absent from the window keep their previous pattern flagged
    /// stale; classes new in the window are added.
    pub fn refresh(&self, recent_by_class: &BTreeMap<ApplicationClass, Vec<&DiskTrace>>, k: usize) -> Result<ProfileLibrary> {
        validate_slot_count(k)?;
        let rebuilt = ProfileLibrary::build(recent_by_class, k)?;
        let mut patterns = rebuilt.patterns;
        for (class, old) in &self.patterns {
            patterns.entry(*class).or_insert_with(|| {
                let mut kept = old.clone();
                kept.stale = true;
                kept
            });
        }
        Ok(ProfileLibrary { k, patterns })
    }

    /// Writes `profiles.csv`: one row per class, `label,slot_0..slot_{K-1},support`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write!(w, "label")?;
        for i in 0..self.k {
            write!(w, ",slot_{i}")?;
        }
        writeln!(w, ",support")?;
        for (class, p) in &self.patterns {
            write!(w, "{}", class.label())?;
            for v in p.shape.iter() {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", p.support)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|_| Error::missing(format!("profile library {}", path.display())))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::format(path.display().to_string(), "empty file"))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 3 || cols[0] != "label" || *cols.last().unwrap() != "support" {
            return Err(Error::format(path.display().to_string(), "bad profile header"));
        }
        let k = cols.len() - 2;
        validate_slot_count(k)?;
        let mut patterns = BTreeMap::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| {
                Error::format(path.display().to_string(), format!("row {}: {msg}", n + 2))
            };
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != k + 2 {
                return Err(err(format!("expected {} columns, got {}", k + 2, parts.len())));
            }
            let class = ApplicationClass::parse(parts[0]).map_err(|e| err(e.to_string()))?;
            let mut values = Vec::with_capacity(k);
            for v in &parts[1..=k] {
                values.push(v.parse::<f64>().map_err(|e| err(e.to_string()))?);
            }
            let support: usize =
                parts[k + 1].parse().map_err(|_| err("bad support".into()))?;
            patterns.insert(
                class,
                CanonicalPattern { class, shape: LoadVector::new(values)?, support, stale: false },
            );
        }
        Ok(ProfileLibrary { k, patterns })
    }
}
