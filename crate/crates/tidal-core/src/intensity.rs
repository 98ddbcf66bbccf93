//! Scalar load-intensity prediction from resource specifications.
//!
//! Three interchangeable estimators: a bucketed-mean lookup regressor, a
//! coarse four-bucket classifier (midpoint quantization), and a noisy
//! oracle for sensitivity studies. Regression vs. bucketing is the point
//! of the comparison: the classifier pays a quantization penalty against
//! a fixed bandwidth budget even when its bucket labels are accurate.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::workload::{DiskRole, MediaType, ResourceSpec};

/// Non-negative predicted intensity, KB/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityEstimate(pub f64);

/// Coarse, deterministic bucketing of a resource spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureKey {
    pub vcpu_bucket: u8,
    pub memory_bucket: u8,
    pub capacity_bucket: u8,
    pub lease_bucket: u8,
    pub disk_role: DiskRole,
    pub media_type: MediaType,
}

const VCPU_LABELS: [&str; 4] = ["v1-2", "v3-4", "v5-8", "v9+"];
const MEMORY_LABELS: [&str; 4] = ["m4", "m16", "m64", "m64+"];
const CAPACITY_LABELS: [&str; 4] = ["c128", "c512", "c2048", "c2048+"];
const LEASE_LABELS: [&str; 3] = ["l30", "l365", "l365+"];

/// Buckets a spec into its feature key (inclusive upper boundaries).
pub fn featurize(spec: &ResourceSpec) -> FeatureKey {
    let vcpu_bucket = match spec.vcpu_count {
        0..=2 => 0,
        3..=4 => 1,
        5..=8 => 2,
        _ => 3,
    };
    let memory_bucket = match spec.memory_gb {
        0..=4 => 0,
        5..=16 => 1,
        17..=64 => 2,
        _ => 3,
    };
    let capacity_bucket = match spec.capacity_gb {
        0..=128 => 0,
        129..=512 => 1,
        513..=2048 => 2,
        _ => 3,
    };
    let lease_bucket = match spec.lease_days {
        0..=30 => 0,
        31..=365 => 1,
        _ => 2,
    };
    FeatureKey {
        vcpu_bucket,
        memory_bucket,
        capacity_bucket,
        lease_bucket,
        disk_role: spec.disk_role,
        media_type: spec.media_type,
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}_{}_{}_{}_{}_{}",
            VCPU_LABELS[self.vcpu_bucket as usize],
            MEMORY_LABELS[self.memory_bucket as usize],
            CAPACITY_LABELS[self.capacity_bucket as usize],
            LEASE_LABELS[self.lease_bucket as usize],
            self.disk_role.label(),
            self.media_type.label()
        )
    }
}

impl FeatureKey {
    pub fn parse(s: &str) -> Result<FeatureKey> {
        let parts: Vec<&str> = s.split('_').collect();
        if parts.len() != 6 {
            return Err(Error::data(format!("bad feature key '{s}'")));
        }
        let pos = |labels: &[&str], v: &str| -> Result<u8> {
            labels
                .iter()
                .position(|l| *l == v)
                .map(|p| p as u8)
                .ok_or_else(|| Error::data(format!("bad feature key part '{v}'")))
        };
        Ok(FeatureKey {
            vcpu_bucket: pos(&VCPU_LABELS, parts[0])?,
            memory_bucket: pos(&MEMORY_LABELS, parts[1])?,
            capacity_bucket: pos(&CAPACITY_LABELS, parts[2])?,
            lease_bucket: pos(&LEASE_LABELS, parts[3])?,
            disk_role: match parts[4] {
                "system" => DiskRole::System,
                "data" => DiskRole::Data,
                other => return Err(Error::data(format!("bad disk role '{other}'"))),
            },
            media_type: match parts[5] {
                "ssd" => MediaType::Ssd,
                "hdd" => MediaType::Hdd,
                other => return Err(Error::data(format!("bad media type '{other}'"))),
            },
        })
    }
}

/// Per-key mean regressor with a global-mean default for unseen keys.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupRegressor {
    table: BTreeMap<FeatureKey, (f64, u64)>,
    global_mean: f64,
}

impl LookupRegressor {
    pub fn fit(pairs: &[(ResourceSpec, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::data("empty training set for lookup regressor"));
        }
        let mut sums: BTreeMap<FeatureKey, (f64, u64)> = BTreeMap::new();
        let mut total = 0.0;
        for (spec, y) in pairs {
            let e = sums.entry(featurize(spec)).or_insert((0.0, 0));
            e.0 += y;
            e.1 += 1;
            total += y;
        }
        let table = sums
            .into_iter()
            .map(|(k, (s, c))| (k, (s / c as f64, c)))
            .collect();
        Ok(LookupRegressor { table, global_mean: total / pairs.len() as f64 })
    }

    pub fn predict(&self, spec: &ResourceSpec) -> f64 {
        self.table
            .get(&featurize(spec))
            .map(|(m, _)| *m)
            .unwrap_or(self.global_mean)
    }

    /// Persists as `feature_key,mean_kbps,count` plus a default row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_named(path, "mean_kbps")
    }

    /// Same format with a caller-chosen value column name (the burstiness
    /// lookup stores a ratio, not KB/s).
    pub fn write_csv_named(&self, path: &Path, value_column: &str) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "feature_key,{value_column},count")?;
        writeln!(w, "default,{},0", self.global_mean)?;
        for (k, (m, c)) in &self.table {
            writeln!(w, "{k},{m},{c}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::read_csv_named(path, "mean_kbps")
    }

    pub fn read_csv_named(path: &Path, value_column: &str) -> Result<Self> {
        let file = File::open(path)
            .map_err(|_| Error::missing(format!("intensity model {}", path.display())))?;
        let mut lines = BufReader::new(file).lines();
        let expected = format!("feature_key,{value_column},count");
        match lines.next() {
            Some(Ok(h)) if h.trim() == expected => {}
            _ => return Err(Error::format(path.display().to_string(), "bad model header")),
        }
        let mut table = BTreeMap::new();
        let mut global_mean = None;
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| {
                Error::format(path.display().to_string(), format!("row {}: {msg}", n + 2))
            };
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(err("expected 3 columns".into()));
            }
            let mean: f64 = parts[1].parse().map_err(|_| err("bad mean_kbps".into()))?;
            let count: u64 = parts[2].parse().map_err(|_| err("bad count".into()))?;
            if parts[0] == "default" {
                global_mean = Some(mean);
            } else {
                table.insert(FeatureKey::parse(parts[0]).map_err(|e| err(e.to_string()))?, (mean, count));
            }
        }
        let global_mean = global_mean
            .ok_or_else(|| Error::format(path.display().to_string(), "missing default row"))?;
        Ok(LookupRegressor { table, global_mean })
    }
}

/// Four-bucket classifier: quartile boundaries, per-key majority bucket,
/// per-bucket midpoint values.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketClassifier {
    /// Inclusive upper boundaries of buckets 0..=2; bucket 3 is unbounded.
    pub boundaries: [f64; 3],
    /// Representative value predicted for each bucket.
    pub midpoints: [f64; 4],
    table: BTreeMap<FeatureKey, u8>,
    default_bucket: u8,
}

impl BucketClassifier {
    pub fn bucket_of(boundaries: &[f64; 3], y: f64) -> u8 {
        if y <= boundaries[0] {
            0
        } else if y <= boundaries[1] {
            1
        } else if y <= boundaries[2] {
            2
        } else {
            3
        }
    }

    /// Fits with explicit boundaries and midpoints.
    pub fn fit_with(
        pairs: &[(ResourceSpec, f64)],
        boundaries: [f64; 3],
        midpoints: [f64; 4],
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::data("empty training set for bucket classifier"));
        }
        let mut counts: BTreeMap<FeatureKey, [u64; 4]> = BTreeMap::new();
        let mut global = [0u64; 4];
        for (spec, y) in pairs {
            let b = Self::bucket_of(&boundaries, *y) as usize;
            counts.entry(featurize(spec)).or_default()[b] += 1;
            global[b] += 1;
        }
        let majority = |c: &[u64; 4]| {
            let mut best = 0usize;
            for b in 1..4 {
                if c[b] > c[best] {
                    best = b;
                }
            }
            best as u8
        };
        let table = counts.iter().map(|(k, c)| (*k, majority(c))).collect();
        Ok(BucketClassifier { boundaries, midpoints, table, default_bucket: majority(&global) })
    }

    /// Fits with default boundaries (training quartiles) and per-bucket
    /// training means as midpoints.
    pub fn fit(pairs: &[(ResourceSpec, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::data("empty training set for bucket classifier"));
        }
        let mut ys: Vec<f64> = pairs.iter().map(|(_, y)| *y).collect();
        ys.sort_by(|a, b| a.total_cmp(b));
        let quantile = |q: f64| {
            // nearest-rank
            let rank = ((q * ys.len() as f64).ceil() as usize).clamp(1, ys.len());
            ys[rank - 1]
        };
        let boundaries = [quantile(0.25), quantile(0.5), quantile(0.75)];
        let mut sums = [0.0f64; 4];
        let mut counts = [0u64; 4];
        for y in &ys {
            let b = Self::bucket_of(&boundaries, *y) as usize;
            sums[b] += y;
            counts[b] += 1;
        }
        let global_mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let mut midpoints = [0.0f64; 4];
        for b in 0..4 {
            midpoints[b] = if counts[b] > 0 { sums[b] / counts[b] as f64 } else { global_mean };
        }
        Self::fit_with(pairs, boundaries, midpoints)
    }

    pub fn predict(&self, spec: &ResourceSpec) -> f64 {
        let bucket = self
            .table
            .get(&featurize(spec))
            .copied()
            .unwrap_or(self.default_bucket);
        self.midpoints[bucket as usize]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(b"feature_key,bucket\n")?;
        writeln!(
            w,
            "boundaries,{}|{}|{}",
            self.boundaries[0], self.boundaries[1], self.boundaries[2]
        )?;
        writeln!(
            w,
            "midpoints,{}|{}|{}|{}",
            self.midpoints[0], self.midpoints[1], self.midpoints[2], self.midpoints[3]
        )?;
        writeln!(w, "default,{}", self.default_bucket)?;
        for (k, b) in &self.table {
            writeln!(w, "{k},{b}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|_| Error::missing(format!("bucket model {}", path.display())))?;
        let mut lines = BufReader::new(file).lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "feature_key,bucket" => {}
            _ => return Err(Error::format(path.display().to_string(), "bad bucket model header")),
        }
        let mut boundaries = None;
        let mut midpoints = None;
        let mut default_bucket = None;
        let mut table = BTreeMap::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(',')
                .ok_or_else(|| Error::format(path.display().to_string(), "bad row"))?;
            let parse_floats = |v: &str| -> Result<Vec<f64>> {
                v.split('|')
                    .map(|x| {
                        x.parse::<f64>()
                            .map_err(|_| Error::format(path.display().to_string(), "bad float"))
                    })
                    .collect()
            };
            match key {
                "boundaries" => {
                    let v = parse_floats(value)?;
                    boundaries = Some([v[0], v[1], v[2]]);
                }
                "midpoints" => {
                    let v = parse_floats(value)?;
                    midpoints = Some([v[0], v[1], v[2], v[3]]);
                }
                "default" => {
                    default_bucket = value.parse::<u8>().ok();
                }
                _ => {
                    table.insert(
                        FeatureKey::parse(key)?,
                        value.parse::<u8>().map_err(|_| {
                            Error::format(path.display().to_string(), "bad bucket")
                        })?,
                    );
                }
            }
        }
        match (boundaries, midpoints, default_bucket) {
            (Some(boundaries), Some(midpoints), Some(default_bucket)) => {
                Ok(BucketClassifier { boundaries, midpoints, table, default_bucket })
            }
            _ => Err(Error::format(path.display().to_string(), "incomplete bucket model")),
        }
    }
}

/// Any of the three estimator variants behind one prediction surface.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorModel {
    LookupRegressor(LookupRegressor),
    BucketClassifier(BucketClassifier),
    /// `sigma = 0` returns the true intensity exactly.
    NoisyOracle { sigma: f64, seed: u64 },
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl EstimatorModel {
    /// Predicts intensity; the oracle variant requires the true intensity.
    pub fn predict(&self, spec: &ResourceSpec, true_intensity: Option<f64>) -> Result<IntensityEstimate> {
        let value = match self {
            EstimatorModel::LookupRegressor(m) => m.predict(spec),
            EstimatorModel::BucketClassifier(m) => m.predict(spec),
            EstimatorModel::NoisyOracle { sigma, seed } => {
                let truth = true_intensity
                    .ok_or_else(|| Error::config("noisy oracle requires the true intensity"))?;
                if *sigma == 0.0 {
                    truth
                } else {
                    let mut bytes = Vec::with_capacity(64);
                    bytes.extend_from_slice(&seed.to_le_bytes());
                    bytes.extend_from_slice(featurize(spec).to_string().as_bytes());
                    bytes.extend_from_slice(&truth.to_bits().to_le_bytes());
                    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&bytes));
                    let g: f64 = StandardNormal.sample(&mut rng);
                    truth * (g * sigma).exp()
                }
            }
        };
        Ok(IntensityEstimate(value.max(0.0)))
    }
}

/// R-squared and mean absolute error over a test set.
pub fn evaluate(model: &EstimatorModel, pairs: &[(ResourceSpec, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::data("need at least 2 test pairs to evaluate"));
    }
    let mean_y = pairs.iter().map(|(_, y)| y).sum::<f64>() / pairs.len() as f64;
    let sst: f64 = pairs.iter().map(|(_, y)| (y - mean_y) * (y - mean_y)).sum();
    if sst == 0.0 {
        return Err(Error::data("zero-variance truth: R^2 undefined"));
    }
    let mut sse = 0.0;
    let mut abs = 0.0;
    for (spec, y) in pairs {
        let p = model.predict(spec, Some(*y))?.0;
        sse += (y - p) * (y - p);
        abs += (y - p).abs();
    }
    Ok((1.0 - sse / sst, abs / pairs.len() as f64))
}
