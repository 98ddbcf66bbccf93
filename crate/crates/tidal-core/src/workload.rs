//! Core workload domain types and time/slot arithmetic.
//!
//! Throughput traces are 5-minute samples in KB/s covering whole days;
//! sample index 0 is defined to be midnight, so time-of-day phase is
//! preserved when replay wraps at full-trace length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load::LoadVector;

/// Trace sampling period in seconds.
pub const SAMPLE_PERIOD_S: u64 = 300;
/// Seconds per day.
pub const DAY_S: u64 = 86_400;
/// 5-minute samples per day.
pub const SAMPLES_PER_DAY: usize = (DAY_S / SAMPLE_PERIOD_S) as usize;

/// Disk role within its VM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiskRole {
    System,
    Data,
}

impl DiskRole {
    pub fn label(self) -> &'static str {
        match self {
            DiskRole::System => "system",
            DiskRole::Data => "data",
        }
    }
}

/// Backing media of the disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    Ssd,
    Hdd,
}

impl MediaType {
    pub fn label(self) -> &'static str {
        match self {
            MediaType::Ssd => "ssd",
            MediaType::Hdd => "hdd",
        }
    }
}

/// Resource specification attached to a provisioning request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceSpec {
    pub vcpu_count: u32,
    pub memory_gb: u32,
    /// Provisioned disk size in GB (the disk's spatial footprint).
    pub capacity_gb: u64,
    pub lease_days: u32,
    pub disk_role: DiskRole,
    pub media_type: MediaType,
}

impl ResourceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.vcpu_count == 0 || self.memory_gb == 0 || self.capacity_gb == 0 || self.lease_days == 0
        {
            return Err(Error::data("resource spec fields must be strictly positive"));
        }
        Ok(())
    }
}

/// A provisioning request: the metadata tuple (project, VM, disk name)
/// plus the resource spec. The unit of placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisioningRequest {
    pub request_id: u64,
    pub arrival_time_s: u64,
    pub project_name: String,
    pub vm_name: String,
    pub disk_name: String,
    pub spec: ResourceSpec,
}

/// One disk's throughput trace: 5-minute KB/s samples over whole days.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskTrace {
    pub disk_id: u64,
    pub samples: Vec<f64>,
}

impl DiskTrace {
    pub fn new(disk_id: u64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < SAMPLES_PER_DAY || !samples.len().is_multiple_of(SAMPLES_PER_DAY) {
            return Err(Error::data(format!(
                "trace for disk {disk_id} has {} samples; need a positive multiple of {SAMPLES_PER_DAY}",
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::data(format!(
                "trace for disk {disk_id} contains negative or non-finite samples"
            )));
        }
        Ok(DiskTrace { disk_id, samples })
    }

    pub fn days(&self) -> usize {
        self.samples.len() / SAMPLES_PER_DAY
    }

    /// Mean throughput over the whole trace, KB/s.
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Peak-to-mean ratio of the slot-aggregated trace; 0 for all-zero traces.
    pub fn burstiness(&self, k: usize) -> Result<f64> {
        let agg = aggregate_to_slots(self, k)?;
        let mean = agg.mean();
        if mean == 0.0 {
            return Ok(0.0);
        }
        Ok(agg.max() / mean)
    }
}

/// Validates a slot count: slot boundaries must align with 5-minute samples.
pub fn validate_slot_count(k: usize) -> Result<()> {
    if k == 0 || !SAMPLES_PER_DAY.is_multiple_of(k) {
        return Err(Error::config(format!(
            "slot count {k} must divide {SAMPLES_PER_DAY} samples per day"
        )));
    }
    Ok(())
}

/// Maps a timestamp to its intra-day slot index in `[0, k)`.
pub fn slot_of(time_s: u64, k: usize) -> Result<usize> {
    validate_slot_count(k)?;
    let slot_width = DAY_S / k as u64;
    Ok(((time_s % DAY_S) / slot_width) as usize)
}

/// Averages a trace into K intra-day slots across all of its whole days.
pub fn aggregate_to_slots(trace: &DiskTrace, k: usize) -> Result<LoadVector> {
    validate_slot_count(k)?;
    let per_slot = SAMPLES_PER_DAY / k;
    let mut sums = vec![0.0; k];
    let mut counts = vec![0u64; k];
    for (i, s) in trace.samples.iter().enumerate() {
        let slot = (i % SAMPLES_PER_DAY) / per_slot;
        sums[slot] += s;
        counts[slot] += 1;
    }
    LoadVector::new(
        sums.iter()
            .zip(counts.iter())
            .map(|(s, c)| s / *c as f64)
            .collect(),
    )
}

/// Reads the trace sample active at a simulated time.
///
/// Index 0 is midnight; the trace wraps at full-trace length, so whole-day
/// traces preserve time-of-day phase under the modulo.
pub fn replay_sample(trace: &DiskTrace, sim_time_s: u64) -> f64 {
    let idx = (sim_time_s / SAMPLE_PERIOD_S) as usize % trace.samples.len();
    trace.samples[idx]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn flat_trace(value: f64, days: usize) -> DiskTrace {
        DiskTrace::new(0, vec![value; SAMPLES_PER_DAY * days]).unwrap()
    }

    #[test]
    fn slot_of_epoch_is_zero() {
        assert_eq!(slot_of(0, 12).unwrap(), 0);
    }

    #[test]
    fn slot_of_one_slot_width() {
        // 7200 s = 2 h = one slot width with K=12
        assert_eq!(slot_of(7200, 12).unwrap(), 1);
    }

    #[test]
    fn slot_of_last_second_of_day() {
        assert_eq!(slot_of(86_399, 12).unwrap(), 11);
    }

    #[test]
    fn slot_of_rejects_non_divisors() {
        assert!(slot_of(0, 5).is_err());
        assert!(slot_of(0, 0).is_err());
        assert!(slot_of(0, 7).is_err());
    }

    #[test]
    fn aggregate_constant_trace() {
        let v = aggregate_to_slots(&flat_trace(5.0, 1), 12).unwrap();
        for x in v.iter() {
            assert_abs_diff_eq!(*x, 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn aggregate_half_day_split() {
        let mut samples = vec![2.0; 144];
        samples.extend(vec![4.0; 144]);
        let trace = DiskTrace::new(0, samples).unwrap();
        let v = aggregate_to_slots(&trace, 2).unwrap();
        assert_abs_diff_eq!(v.get(0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.get(1), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn aggregate_averages_across_days() {
        let mut samples = vec![1.0; SAMPLES_PER_DAY];
        samples.extend(vec![3.0; SAMPLES_PER_DAY]);
        let trace = DiskTrace::new(0, samples).unwrap();
        let v = aggregate_to_slots(&trace, 12).unwrap();
        for x in v.iter() {
            assert_abs_diff_eq!(*x, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn replay_fixtures() {
        let mut samples = vec![0.0; SAMPLES_PER_DAY];
        samples[0] = 7.0;
        samples[2] = 9.0;
        let trace = DiskTrace::new(0, samples).unwrap();
        assert_eq!(replay_sample(&trace, 0), 7.0);
        assert_eq!(replay_sample(&trace, 86_400), 7.0); // wraps at the day boundary
        assert_eq!(replay_sample(&trace, 600), 9.0); // two whole 5-min periods elapsed
    }

    #[test]
    fn trace_rejects_partial_days() {
        assert!(DiskTrace::new(0, vec![1.0; 100]).is_err());
        assert!(DiskTrace::new(0, vec![1.0; SAMPLES_PER_DAY + 1]).is_err());
        assert!(DiskTrace::new(0, vec![-1.0; SAMPLES_PER_DAY]).is_err());
    }

    proptest! {
        #[test]
        fn slot_of_is_day_periodic(t in 0u64..10 * DAY_S, k in prop::sample::select(vec![1usize, 2, 3, 4, 6, 12, 24, 48, 96, 144, 288])) {
            prop_assert_eq!(slot_of(t, k).unwrap(), slot_of(t + DAY_S, k).unwrap());
        }

        #[test]
        fn aggregate_preserves_global_mean(
            day in prop::collection::vec(0.0f64..100.0, SAMPLES_PER_DAY),
            k in prop::sample::select(vec![1usize, 2, 4, 6, 12, 24])
        ) {
            let trace = DiskTrace::new(0, day).unwrap();
            let global = trace.mean();
            let agg = aggregate_to_slots(&trace, k).unwrap();
            prop_assert!((agg.mean() - global).abs() < 1e-9);
        }

        #[test]
        fn replay_wraps_at_trace_length(
            t in 0u64..30 * DAY_S,
            days in 1usize..4
        ) {
            let samples: Vec<f64> = (0..SAMPLES_PER_DAY * days).map(|i| i as f64).collect();
            let trace = DiskTrace::new(0, samples).unwrap();
            let period = trace.samples.len() as u64 * SAMPLE_PERIOD_S;
            prop_assert_eq!(replay_sample(&trace, t), replay_sample(&trace, t + period));
        }
    }
}
