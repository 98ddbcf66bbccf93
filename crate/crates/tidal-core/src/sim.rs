//! Discrete-event replay of provisioning and I/O.
//!
//! The clock advances in 5-minute ticks. Arrivals are placed as the clock
//! passes them; every placed disk then contributes its trace sample to its
//! pod at each tick. Pod temporal state consulted at placement time comes
//! from the monitoring window, with predicted-profile sums standing in only
//! for slots that have no observation yet, so prediction errors never feed
//! back into observed state.

use std::collections::VecDeque;

use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::intensity::{BucketClassifier, EstimatorModel, LookupRegressor};
use crate::load::{coefficient_of_variation, LoadVector};
use crate::placement::{
    place_cbp, place_oracle, place_rr, place_scda, place_spatial_only, place_tela, place_tidal,
    PlacementDecision, PlacementPath, PodState, PolicyConfig, DEFAULT_BURSTINESS_THRESHOLD,
};
use crate::profile::ProfileLibrary;
use crate::semantics::{FilterRules, Lexicon, PipelineStats, SemanticPipeline};
use crate::taxonomy::ApplicationClass;
use crate::workload::{aggregate_to_slots, replay_sample, slot_of, DiskTrace, SAMPLE_PERIOD_S};

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub n_pods: usize,
    pub k: usize,
    /// Cluster bandwidth budget as a multiple of mean workload throughput.
    pub budget_factor: f64,
    pub monitoring_window_s: u64,
    pub horizon_s: u64,
    /// Placed-disk fractions at which cumulative OTF is recorded.
    pub progress_checkpoints: Vec<f64>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_pods: 16,
            k: 12,
            budget_factor: 1.2,
            monitoring_window_s: 86_400,
            horizon_s: 8 * 86_400,
            progress_checkpoints: (86..=100).step_by(2).map(|p| p as f64 / 100.0).collect(),
            seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pods == 0 {
            return Err(Error::config("need at least one pod"));
        }
        if self.budget_factor <= 0.0 {
            return Err(Error::config("budget factor must be positive"));
        }
        if self.horizon_s < SAMPLE_PERIOD_S {
            return Err(Error::config("horizon shorter than one sample period"));
        }
        crate::workload::validate_slot_count(self.k)
    }
}

/// Placement policies selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Rr,
    Cbp,
    Scda,
    Tela,
    Tidal,
    Oracle,
    /// Ablation: capacity-based placement only.
    TidalCap,
    /// Ablation: intensity-aware spatial fallback for every request.
    TidalInt,
}

impl PolicyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rr" => Ok(PolicyKind::Rr),
            "cbp" => Ok(PolicyKind::Cbp),
            "scda" => Ok(PolicyKind::Scda),
            "tela" => Ok(PolicyKind::Tela),
            "tidal" => Ok(PolicyKind::Tidal),
            "oracle" => Ok(PolicyKind::Oracle),
            "tidal-cap" => Ok(PolicyKind::TidalCap),
            "tidal-int" => Ok(PolicyKind::TidalInt),
            other => Err(Error::config(format!("unknown policy '{other}'"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Rr => "rr",
            PolicyKind::Cbp => "cbp",
            PolicyKind::Scda => "scda",
            PolicyKind::Tela => "tela",
            PolicyKind::Tidal => "tidal",
            PolicyKind::Oracle => "oracle",
            PolicyKind::TidalCap => "tidal-cap",
            PolicyKind::TidalInt => "tidal-int",
        }
    }

    pub const ALL: &'static [PolicyKind] = &[
        PolicyKind::Rr,
        PolicyKind::Cbp,
        PolicyKind::Scda,
        PolicyKind::Tela,
        PolicyKind::Tidal,
        PolicyKind::Oracle,
        PolicyKind::TidalCap,
        PolicyKind::TidalInt,
    ];
}

/// Offline artifacts a simulation run consumes.
#[derive(Debug, Clone)]
pub struct PolicyArtifacts {
    pub library: ProfileLibrary,
    pub intensity: LookupRegressor,
    pub buckets: BucketClassifier,
    /// Per-feature-key mean peak-to-mean ratio, for burst scattering.
    pub burstiness: LookupRegressor,
    pub lexicon: Lexicon,
}

/// Which estimator feeds TIDAL's intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", content = "sigma", rename_all = "snake_case")]
pub enum TidalEstimator {
    Lookup,
    Bucket,
    /// True intensity perturbed by a lognormal factor; 0 is exact.
    NoisyOracle(f64),
}

/// Per-run switches outside the two config structs.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct RunOptions {
    pub filter_enabled: bool,
    pub tidal_estimator: TidalEstimator,
    /// Extra deny/allow patterns layered over the built-in filter rules.
    pub filter_overrides: Option<std::path::PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            filter_enabled: true,
            tidal_estimator: TidalEstimator::Lookup,
            filter_overrides: None,
        }
    }
}

/// Uniform per-pod bandwidth: `budget_factor` times the workload's total
/// mean throughput, split evenly.
pub fn compute_pod_capacity<'a>(
    traces: impl IntoIterator<Item = &'a DiskTrace>,
    n_pods: usize,
    budget_factor: f64,
) -> Result<f64> {
    if n_pods == 0 {
        return Err(Error::config("need at least one pod"));
    }
    let mut total = 0.0;
    let mut any = false;
    for t in traces {
        total += t.mean();
        any = true;
    }
    if !any {
        return Err(Error::data("empty workload"));
    }
    Ok(budget_factor * total / n_pods as f64)
}

/// Trailing window of 5-minute pod aggregates.
///
/// Each sample also remembers the pod's predicted-ledger slot value at push
/// time, so a mid-bootstrap view can complete stale observations with the
/// predicted load of disks placed after the sample was taken. Once
/// placements stop, the correction is identically zero and the view is
/// pure monitoring.
pub struct MonitoringStore {
    window_samples: usize,
    per_pod: Vec<VecDeque<(u64, f64, f64)>>, // (time, aggregate, ledger at push)
}

impl MonitoringStore {
    pub fn new(n_pods: usize, monitoring_window_s: u64) -> Self {
        MonitoringStore {
            window_samples: (monitoring_window_s / SAMPLE_PERIOD_S).max(1) as usize,
            per_pod: vec![VecDeque::new(); n_pods],
        }
    }

    pub fn push(&mut self, pod: usize, time_s: u64, aggregate_kbps: f64, ledger_slot_kbps: f64) {
        let q = &mut self.per_pod[pod];
        q.push_back((time_s, aggregate_kbps, ledger_slot_kbps));
        while q.len() > self.window_samples {
            q.pop_front();
        }
    }

    /// Monitoring-grounded K-slot view of one pod. A slot with samples in
    /// the window averages `sample + (ledger now − ledger when sampled)`;
    /// a slot with no samples falls back to the ledger outright.
    pub fn load_vector(&self, pod: usize, k: usize, ledger: &LoadVector) -> Result<LoadVector> {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0u64; k];
        for (t, v, ledger_then) in &self.per_pod[pod] {
            let slot = slot_of(*t, k)?;
            sums[slot] += v + (ledger.get(slot) - ledger_then);
            counts[slot] += 1;
        }
        LoadVector::new(
            (0..k)
                .map(|s| {
                    if counts[s] > 0 {
                        (sums[s] / counts[s] as f64).max(0.0)
                    } else {
                        ledger.get(s)
                    }
                })
                .collect(),
        )
    }
}

/// One maximal run of consecutive overloaded intervals on one pod.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverloadEpisode {
    pub pod_id: usize,
    pub start_s: u64,
    pub duration_s: u64,
}

/// Pod spatial counters captured ahead of one placement decision.
#[derive(Debug, Clone, Serialize)]
pub struct PodSnapshot {
    pub pod_id: usize,
    pub used_capacity_gb: f64,
    pub avg_load_kbps: f64,
}

/// One placement, with enough context to recompute the spatial scores.
#[derive(Debug, Clone, Serialize)]
pub struct DecisionRecord {
    pub request_id: u64,
    pub pod_id: usize,
    pub path: PlacementPath,
    pub objective_value: Option<f64>,
    pub spatial_score: f64,
    pub candidates: Vec<usize>,
    pub size_gb: f64,
    pub intensity_used_kbps: f64,
    pub pods_before: Vec<PodSnapshot>,
}

/// Everything a run reports.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub policy: String,
    pub otf_final: f64,
    pub overloaded_pod_intervals: u64,
    pub total_pod_intervals: u64,
    /// Cumulative OTF at each placed-disk fraction checkpoint.
    pub otf_checkpoints: Vec<(f64, f64)>,
    pub episodes: Vec<OverloadEpisode>,
    pub p95_episode_s: u64,
    pub p99_episode_s: u64,
    pub spatial_imbalance: f64,
    pub temporal_imbalance_mean: f64,
    pub temporal_imbalance_per_pod: Vec<f64>,
    pub bandwidth_max_kbps: f64,
    pub capacity_max_gb: f64,
    pub placed: u64,
    pub pipeline_stats: Option<PipelineStats>,
    #[serde(skip)]
    pub decisions: Vec<DecisionRecord>,
    /// Full per-pod tick series, for in-memory analysis only.
    #[serde(skip)]
    pub pod_series: Vec<Vec<f64>>,
}

/// Overloaded pod-intervals over total pod-intervals.
pub fn otf(overloaded: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        overloaded as f64 / total as f64
    }
}

/// Nearest-rank percentile of episode durations; 0 when no episodes.
pub fn episode_percentile(episodes: &[OverloadEpisode], q: f64) -> u64 {
    if episodes.is_empty() {
        return 0;
    }
    let mut durations: Vec<u64> = episodes.iter().map(|e| e.duration_s).collect();
    durations.sort_unstable();
    let rank = ((q * durations.len() as f64).ceil() as usize).clamp(1, durations.len());
    durations[rank - 1]
}

/// Spatial imbalance (CoV of per-pod time means) and per-pod temporal
/// imbalance (each pod's over-time CoV).
pub fn imbalance_metrics(pod_series: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let means: Vec<f64> = pod_series
        .iter()
        .map(|s| if s.is_empty() { 0.0 } else { s.iter().sum::<f64>() / s.len() as f64 })
        .collect();
    let spatial = coefficient_of_variation(&means);
    let temporal: Vec<f64> = pod_series.iter().map(|s| coefficient_of_variation(s)).collect();
    (spatial, temporal)
}

struct EpisodeTracker {
    open: Vec<Option<(u64, u64)>>, // (start_s, intervals)
    episodes: Vec<OverloadEpisode>,
}

impl EpisodeTracker {
    fn new(n_pods: usize) -> Self {
        EpisodeTracker { open: vec![None; n_pods], episodes: Vec::new() }
    }

    fn observe(&mut self, pod: usize, time_s: u64, overloaded: bool) {
        match (&mut self.open[pod], overloaded) {
            (Some((_, n)), true) => *n += 1,
            (None, true) => self.open[pod] = Some((time_s, 1)),
            (slot @ Some(_), false) => {
                let (start, n) = slot.take().unwrap();
                self.episodes.push(OverloadEpisode {
                    pod_id: pod,
                    start_s: start,
                    duration_s: n * SAMPLE_PERIOD_S,
                });
            }
            (None, false) => {}
        }
    }

    fn finish(mut self) -> Vec<OverloadEpisode> {
        for (pod, slot) in self.open.iter_mut().enumerate() {
            if let Some((start, n)) = slot.take() {
                self.episodes.push(OverloadEpisode {
                    pod_id: pod,
                    start_s: start,
                    duration_s: n * SAMPLE_PERIOD_S,
                });
            }
        }
        self.episodes.sort_by_key(|e| (e.pod_id, e.start_s));
        self.episodes
    }
}

/// Chronological replay of one policy over one corpus.
pub fn run(
    policy: PolicyKind,
    corpus: &Corpus,
    artifacts: &PolicyArtifacts,
    policy_config: &PolicyConfig,
    sim_config: &SimConfig,
    options: &RunOptions,
) -> Result<MetricsReport> {
    sim_config.validate()?;
    if corpus.requests.is_empty() {
        return Err(Error::data("empty workload"));
    }
    let n_pods = sim_config.n_pods;
    let k = sim_config.k;
    let bandwidth_max = compute_pod_capacity(corpus.traces.values(), n_pods, sim_config.budget_factor)?;
    let total_gb: f64 = corpus.requests.iter().map(|r| r.spec.capacity_gb as f64).sum();
    let capacity_max = sim_config.budget_factor * total_gb / n_pods as f64;

    let truth = corpus.ground_truth_map();
    let filter_rules = match &options.filter_overrides {
        Some(path) => FilterRules::with_overrides(path)?,
        None => FilterRules::builtin(),
    };
    let mut pipeline = SemanticPipeline::with_lexicon(
        artifacts.lexicon.clone(),
        filter_rules,
        crate::semantics::DEFAULT_CACHE_CAPACITY,
        policy_config.lcp_threshold,
    );
    pipeline.set_filter_enabled(options.filter_enabled);

    let mut used_gb = vec![0.0f64; n_pods];
    let mut ledger: Vec<LoadVector> = vec![LoadVector::zeros(k); n_pods];
    let mut active: Vec<Vec<&DiskTrace>> = vec![Vec::new(); n_pods];
    let mut store = MonitoringStore::new(n_pods, sim_config.monitoring_window_s);
    let mut episodes = EpisodeTracker::new(n_pods);
    let mut pod_series: Vec<Vec<f64>> = vec![Vec::new(); n_pods];
    let mut decisions: Vec<DecisionRecord> = Vec::with_capacity(corpus.requests.len());

    let mut rr_cursor = 0usize;
    let mut bursty_counts = vec![0u64; n_pods];

    let mut overloaded: u64 = 0;
    let mut total_intervals: u64 = 0;
    let mut placed: u64 = 0;

    let n_requests = corpus.requests.len();
    let mut checkpoint_targets: Vec<(f64, usize)> = sim_config
        .progress_checkpoints
        .iter()
        .map(|f| (*f, ((f * n_requests as f64).ceil() as usize).clamp(1, n_requests)))
        .collect();
    checkpoint_targets.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut otf_checkpoints: Vec<(f64, f64)> = Vec::new();
    let mut next_checkpoint = 0usize;

    let ticks = sim_config.horizon_s / SAMPLE_PERIOD_S;
    let mut next_request = 0usize;

    for tick in 0..ticks {
        let now = tick * SAMPLE_PERIOD_S;

        while next_request < n_requests && corpus.requests[next_request].arrival_time_s <= now {
            let request = &corpus.requests[next_request];
            next_request += 1;
            let trace = corpus.trace(request.request_id)?;

            // monitoring-grounded pod view
            let mut pods = Vec::with_capacity(n_pods);
            for pod in 0..n_pods {
                let load_vector = store.load_vector(pod, k, &ledger[pod])?;
                pods.push(PodState {
                    pod_id: pod,
                    capacity_max_gb: capacity_max,
                    bandwidth_max_kbps: bandwidth_max,
                    used_capacity_gb: used_gb[pod],
                    avg_load_kbps: load_vector.mean(),
                    load_vector,
                });
            }
            let snapshot: Vec<PodSnapshot> = pods
                .iter()
                .map(|p| PodSnapshot {
                    pod_id: p.pod_id,
                    used_capacity_gb: p.used_capacity_gb,
                    avg_load_kbps: p.avg_load_kbps,
                })
                .collect();

            let size_gb = request.spec.capacity_gb as f64;
            let lookup_intensity = artifacts.intensity.predict(&request.spec);

            // decision + the predicted profile that joins the warm-up ledger
            let (decision, intensity_used, ledger_profile): (PlacementDecision, f64, LoadVector) =
                match policy {
                    PolicyKind::Rr => {
                        let d = place_rr(&mut rr_cursor, &pods, policy_config)?;
                        (d, lookup_intensity, flat_profile(lookup_intensity, k))
                    }
                    PolicyKind::Cbp | PolicyKind::TidalCap => {
                        let d = place_cbp(&pods, policy_config)?;
                        (d, lookup_intensity, flat_profile(lookup_intensity, k))
                    }
                    PolicyKind::Scda => {
                        let bucket_intensity = artifacts.buckets.predict(&request.spec);
                        let d = place_scda(bucket_intensity, size_gb, &pods, policy_config)?;
                        (d, bucket_intensity, flat_profile(bucket_intensity, k))
                    }
                    PolicyKind::Tela => {
                        let predicted_burstiness = artifacts.burstiness.predict(&request.spec);
                        let d = place_tela(
                            predicted_burstiness,
                            DEFAULT_BURSTINESS_THRESHOLD,
                            &mut bursty_counts,
                            lookup_intensity,
                            size_gb,
                            &pods,
                            policy_config,
                        )?;
                        (d, lookup_intensity, flat_profile(lookup_intensity, k))
                    }
                    PolicyKind::TidalInt => {
                        let d = place_spatial_only(lookup_intensity, size_gb, &pods, policy_config)?;
                        (d, lookup_intensity, flat_profile(lookup_intensity, k))
                    }
                    PolicyKind::Oracle => {
                        let true_profile = aggregate_to_slots(trace, k)?;
                        let d = place_oracle(&true_profile, size_gb, &pods, policy_config)?;
                        let intensity = true_profile.mean();
                        (d, intensity, true_profile)
                    }
                    PolicyKind::Tidal => {
                        let semantic =
                            pipeline.infer(&request.project_name, &request.vm_name, &request.disk_name)?;
                        let intensity = match options.tidal_estimator {
                            TidalEstimator::Lookup => lookup_intensity,
                            TidalEstimator::Bucket => artifacts.buckets.predict(&request.spec),
                            TidalEstimator::NoisyOracle(sigma) => {
                                let true_intensity = truth
                                    .get(&request.request_id)
                                    .map(|g| g.intensity_kbps)
                                    .ok_or_else(|| {
                                        Error::missing(format!(
                                            "ground truth for disk {}",
                                            request.request_id
                                        ))
                                    })?;
                                EstimatorModel::NoisyOracle { sigma, seed: sim_config.seed }
                                    .predict(&request.spec, Some(true_intensity))?
                                    .0
                            }
                        };
                        let d = place_tidal(
                            &semantic,
                            intensity,
                            size_gb,
                            &artifacts.library,
                            &pods,
                            policy_config,
                        )?;
                        let profile = if d.path == PlacementPath::PhaseAware {
                            artifacts
                                .library
                                .get(semantic.label)
                                .map(|p| p.shape.scale(intensity))
                                .unwrap_or_else(|| flat_profile(intensity, k))
                        } else {
                            flat_profile(intensity, k)
                        };
                        (d, intensity, profile)
                    }
                };

            used_gb[decision.pod_id] += size_gb;
            ledger[decision.pod_id].accumulate(&ledger_profile);
            active[decision.pod_id].push(trace);
            placed += 1;
            decisions.push(DecisionRecord {
                request_id: request.request_id,
                pod_id: decision.pod_id,
                path: decision.path,
                objective_value: decision.objective_value,
                spatial_score: decision.spatial_score_of_chosen,
                candidates: decision.candidates,
                size_gb,
                intensity_used_kbps: intensity_used,
                pods_before: snapshot,
            });
        }

        for pod in 0..n_pods {
            let aggregate: f64 = active[pod].iter().map(|t| replay_sample(t, now)).sum();
            let ledger_slot = ledger[pod].get(slot_of(now, k)?);
            store.push(pod, now, aggregate, ledger_slot);
            pod_series[pod].push(aggregate);
            let over = aggregate > bandwidth_max;
            if over {
                overloaded += 1;
            }
            total_intervals += 1;
            episodes.observe(pod, now, over);
        }

        while next_checkpoint < checkpoint_targets.len()
            && placed as usize >= checkpoint_targets[next_checkpoint].1
        {
            otf_checkpoints
                .push((checkpoint_targets[next_checkpoint].0, otf(overloaded, total_intervals)));
            next_checkpoint += 1;
        }
    }

    let episodes = episodes.finish();
    let (spatial, temporal_per_pod) = imbalance_metrics(&pod_series);
    let temporal_mean = temporal_per_pod.iter().sum::<f64>() / temporal_per_pod.len() as f64;

    Ok(MetricsReport {
        policy: policy.label().to_string(),
        otf_final: otf(overloaded, total_intervals),
        overloaded_pod_intervals: overloaded,
        total_pod_intervals: total_intervals,
        otf_checkpoints,
        p95_episode_s: episode_percentile(&episodes, 0.95),
        p99_episode_s: episode_percentile(&episodes, 0.99),
        episodes,
        spatial_imbalance: spatial,
        temporal_imbalance_mean: temporal_mean,
        temporal_imbalance_per_pod: temporal_per_pod,
        bandwidth_max_kbps: bandwidth_max,
        capacity_max_gb: capacity_max,
        placed,
        pipeline_stats: if policy == PolicyKind::Tidal { Some(pipeline.stats()) } else { None },
        decisions,
        pod_series,
    })
}

fn flat_profile(intensity_kbps: f64, k: usize) -> LoadVector {
    LoadVector::new(vec![intensity_kbps.max(0.0); k]).expect("non-negative flat profile")
}

/// Groups corpus traces by their ground-truth or inferred label.
pub fn traces_by_class<'a>(
    corpus: &'a Corpus,
    labels: &std::collections::BTreeMap<u64, ApplicationClass>,
) -> std::collections::BTreeMap<ApplicationClass, Vec<&'a DiskTrace>> {
    let mut map: std::collections::BTreeMap<ApplicationClass, Vec<&DiskTrace>> =
        std::collections::BTreeMap::new();
    for (disk_id, trace) in &corpus.traces {
        if let Some(label) = labels.get(disk_id) {
            if *label != ApplicationClass::Unknown {
                map.entry(*label).or_default().push(trace);
            }
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::GroundTruthRecord;
    use crate::generator::{default_templates, generate_corpus, GeneratorConfig};
    use crate::intensity::BucketClassifier;
    use crate::workload::{DiskRole, MediaType, ProvisioningRequest, ResourceSpec, SAMPLES_PER_DAY};
    use approx::assert_abs_diff_eq;

    #[test]
    fn capacity_fixture() {
        let t1 = DiskTrace::new(0, vec![100.0; SAMPLES_PER_DAY]).unwrap();
        let t2 = DiskTrace::new(1, vec![100.0; SAMPLES_PER_DAY]).unwrap();
        let c = compute_pod_capacity([&t1, &t2], 4, 1.2).unwrap();
        assert_abs_diff_eq!(c, 60.0, epsilon = 1e-12);

        let single = compute_pod_capacity([&t1], 1, 1.0).unwrap();
        assert_abs_diff_eq!(single, 100.0, epsilon = 1e-12);
        // doubling pods halves per-pod capacity
        let halved = compute_pod_capacity([&t1, &t2], 8, 1.2).unwrap();
        assert_abs_diff_eq!(halved, c / 2.0, epsilon = 1e-12);
        assert!(compute_pod_capacity([], 4, 1.2).is_err());
    }

    #[test]
    fn episode_percentile_fixtures() {
        let ep = |d: u64| OverloadEpisode { pod_id: 0, start_s: 0, duration_s: d };
        assert_eq!(episode_percentile(&[], 0.95), 0);
        assert_eq!(episode_percentile(&[ep(300)], 0.5), 300);
        assert_eq!(episode_percentile(&[ep(300)], 0.99), 300);
        let four = [ep(300), ep(600), ep(900), ep(1200)];
        assert_eq!(episode_percentile(&four, 0.5), 600);
        assert_eq!(episode_percentile(&four, 0.95), 1200);
    }

    #[test]
    fn imbalance_fixtures() {
        // all pods identical and constant
        let (s, t) = imbalance_metrics(&[vec![2.0, 2.0], vec![2.0, 2.0]]);
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[0], 0.0, epsilon = 1e-12);

        // pod means {1, 3}: spatial CoV 0.5
        let (s, _) = imbalance_metrics(&[vec![1.0, 1.0], vec![3.0, 3.0]]);
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-12);

        // one pod with series [1, 3]: temporal CoV 0.5
        let (_, t) = imbalance_metrics(&[vec![1.0, 3.0]]);
        assert_abs_diff_eq!(t[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn monitoring_store_prefers_observations_over_ledger() {
        let mut store = MonitoringStore::new(1, 86_400);
        let ledger = LoadVector::new(vec![1.0, 3.0]).unwrap();

        // empty store: pure ledger
        let v = store.load_vector(0, 2, &ledger).unwrap();
        assert_eq!(v.values(), &[1.0, 3.0]);

        // half a day observed: morning slots from samples, evening from ledger
        for i in 0..(SAMPLES_PER_DAY / 2) {
            store.push(0, i as u64 * SAMPLE_PERIOD_S, 7.0, 1.0);
        }
        let v = store.load_vector(0, 2, &ledger).unwrap();
        assert_eq!(v.values(), &[7.0, 3.0]);

        // a full day observed with an unchanged ledger: pure monitoring
        for i in (SAMPLES_PER_DAY / 2)..SAMPLES_PER_DAY {
            store.push(0, i as u64 * SAMPLE_PERIOD_S, 5.0, 3.0);
        }
        let v = store.load_vector(0, 2, &ledger).unwrap();
        assert_eq!(v.values(), &[7.0, 5.0]);
    }

    #[test]
    fn warmup_samples_absorb_later_placements() {
        // a sample taken before a placement is completed by the ledger delta
        let mut store = MonitoringStore::new(1, 86_400);
        let before = LoadVector::new(vec![2.0, 0.0]).unwrap();
        store.push(0, 0, 5.0, before.get(0));
        // a new disk with predicted profile [4, 1] lands on the pod
        let after = LoadVector::new(vec![6.0, 1.0]).unwrap();
        let v = store.load_vector(0, 2, &after).unwrap();
        // slot 0: observed 5 plus the newly placed prediction 4; slot 1: ledger
        assert_eq!(v.values(), &[9.0, 1.0]);
    }

    #[test]
    fn monitoring_window_is_trailing() {
        let mut store = MonitoringStore::new(1, 3600); // 12 samples
        for i in 0..24u64 {
            store.push(0, i * SAMPLE_PERIOD_S, i as f64, 0.0);
        }
        let ledger = LoadVector::zeros(1);
        let v = store.load_vector(0, 1, &ledger).unwrap();
        // only the last 12 samples (12..=23) remain
        assert_abs_diff_eq!(v.get(0), (12..24).sum::<u64>() as f64 / 12.0, epsilon = 1e-12);
    }

    /// Corpus with one disk whose trace overloads exactly 2 of 10 intervals
    /// on a single pod.
    fn overload_fixture() -> (Corpus, PolicyArtifacts) {
        let mut samples = vec![10.0; SAMPLES_PER_DAY];
        // trace mean stays 10 + spike mass; capacity computed below
        samples[3] = 1000.0;
        samples[4] = 1000.0;
        let trace = DiskTrace::new(0, samples).unwrap();
        let spec = ResourceSpec {
            vcpu_count: 2,
            memory_gb: 4,
            capacity_gb: 100,
            lease_days: 30,
            disk_role: DiskRole::Data,
            media_type: MediaType::Ssd,
        };
        let corpus = Corpus {
            requests: vec![ProvisioningRequest {
                request_id: 0,
                arrival_time_s: 0,
                project_name: "shop".into(),
                vm_name: "backend".into(),
                disk_name: "mysql-prod-01".into(),
                spec: spec.clone(),
            }],
            traces: [(0u64, trace)].into(),
            ground_truth: vec![GroundTruthRecord {
                disk_id: 0,
                label: ApplicationClass::Database,
                intensity_kbps: 10.0,
            }],
        };
        let pairs = vec![(spec, 10.0)];
        let artifacts = PolicyArtifacts {
            library: ProfileLibrary::from_patterns(1, []).unwrap(),
            intensity: LookupRegressor::fit(&pairs).unwrap(),
            buckets: BucketClassifier::fit_with(&pairs, [5.0, 10.0, 20.0], [5.0, 10.0, 15.0, 25.0])
                .unwrap(),
            burstiness: LookupRegressor::fit(&[(pairs[0].0.clone(), 1.0)]).unwrap(),
            lexicon: Lexicon::default_lexicon(),
        };
        (corpus, artifacts)
    }

    #[test]
    fn otf_counts_overloaded_intervals() {
        let (corpus, artifacts) = overload_fixture();
        let sim = SimConfig {
            n_pods: 1,
            k: 1,
            budget_factor: 1.0, // capacity = trace mean, far below the spikes
            monitoring_window_s: 86_400,
            horizon_s: 10 * SAMPLE_PERIOD_S,
            progress_checkpoints: vec![1.0],
            seed: 1,
        };
        let report = run(
            PolicyKind::Cbp,
            &corpus,
            &artifacts,
            &PolicyConfig { k: 1, ..PolicyConfig::default() },
            &sim,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(report.total_pod_intervals, 10);
        assert_eq!(report.overloaded_pod_intervals, 2);
        assert_abs_diff_eq!(report.otf_final, 0.2, epsilon = 1e-12);
        // the two overloaded intervals are adjacent: one maximal episode of 600 s
        assert_eq!(report.episodes.len(), 1);
        assert_eq!(report.episodes[0].duration_s, 600);
        assert_eq!(report.otf_checkpoints, vec![(1.0, 0.0)]); // placed before any overload
    }

    #[test]
    fn ample_capacity_means_zero_otf() {
        let (corpus, artifacts) = overload_fixture();
        let sim = SimConfig {
            n_pods: 1,
            k: 1,
            budget_factor: 100.0,
            monitoring_window_s: 86_400,
            horizon_s: 10 * SAMPLE_PERIOD_S,
            progress_checkpoints: vec![],
            seed: 1,
        };
        let report = run(
            PolicyKind::Cbp,
            &corpus,
            &artifacts,
            &PolicyConfig { k: 1, ..PolicyConfig::default() },
            &sim,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(report.overloaded_pod_intervals, 0);
        assert!(report.episodes.is_empty());
        assert_eq!(report.p95_episode_s, 0);
    }

    #[test]
    fn adjacent_overloads_merge_into_maximal_episodes() {
        let mut tracker = EpisodeTracker::new(1);
        for (i, over) in [true, true, false, true, false, true, true, true].iter().enumerate() {
            tracker.observe(0, i as u64 * SAMPLE_PERIOD_S, *over);
        }
        let eps = tracker.finish();
        assert_eq!(eps.len(), 3);
        assert_eq!(eps[0].duration_s, 600);
        assert_eq!(eps[1].duration_s, 300);
        assert_eq!(eps[2].duration_s, 900); // closed at horizon end
        // maximality: no two episodes on one pod are adjacent
        for w in eps.windows(2) {
            assert!(w[0].start_s + w[0].duration_s < w[1].start_s);
        }
    }

    fn small_sim_inputs(seed: u64) -> (Corpus, PolicyArtifacts) {
        let config = GeneratorConfig { n_disks: 120, days: 1, seed, ..GeneratorConfig::default() };
        let generated = generate_corpus(&config, &default_templates()).unwrap();
        let corpus = generated.corpus;
        let labels = corpus.ground_truth.iter().map(|g| (g.disk_id, g.label)).collect();
        let by_class = traces_by_class(&corpus, &labels);
        let library = ProfileLibrary::build(&by_class, 12).unwrap();
        let pairs: Vec<(ResourceSpec, f64)> = corpus
            .requests
            .iter()
            .map(|r| (r.spec.clone(), corpus.ground_truth[r.request_id as usize].intensity_kbps))
            .collect();
        let burst_pairs: Vec<(ResourceSpec, f64)> = corpus
            .requests
            .iter()
            .map(|r| {
                (r.spec.clone(), corpus.traces[&r.request_id].burstiness(12).unwrap())
            })
            .collect();
        let artifacts = PolicyArtifacts {
            library,
            intensity: LookupRegressor::fit(&pairs).unwrap(),
            buckets: BucketClassifier::fit(&pairs).unwrap(),
            burstiness: LookupRegressor::fit(&burst_pairs).unwrap(),
            lexicon: Lexicon::default_lexicon(),
        };
        (corpus, artifacts)
    }

    #[test]
    fn conservation_and_determinism_on_a_small_run() {
        let (corpus, artifacts) = small_sim_inputs(31);
        let sim = SimConfig { horizon_s: 2 * 86_400, ..SimConfig::default() };
        let run_once = || {
            run(
                PolicyKind::Tidal,
                &corpus,
                &artifacts,
                &PolicyConfig::default(),
                &sim,
                &RunOptions::default(),
            )
            .unwrap()
        };
        let a = run_once();
        let b = run_once();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.placed, 120);

        // conservation: at each tick the pod aggregates sum to the replay sum
        // over every placed disk
        let pod_of: std::collections::BTreeMap<u64, usize> =
            a.decisions.iter().map(|d| (d.request_id, d.pod_id)).collect();
        let arrival_of: std::collections::BTreeMap<u64, u64> =
            corpus.requests.iter().map(|r| (r.request_id, r.arrival_time_s)).collect();
        for tick in [0u64, 100, 287, 300, 500] {
            let now = tick * SAMPLE_PERIOD_S;
            let mut expected = 0.0;
            for (id, trace) in &corpus.traces {
                if pod_of.contains_key(id) && arrival_of[id] <= now {
                    expected += replay_sample(trace, now);
                }
            }
            let total: f64 = a.pod_series.iter().map(|s| s[tick as usize]).sum();
            assert_abs_diff_eq!(total, expected, epsilon = 1e-6);
        }

        // candidate containment on the phase-aware path
        for d in &a.decisions {
            if d.path == PlacementPath::PhaseAware {
                assert!(d.candidates.contains(&d.pod_id));
            }
        }
    }

    #[test]
    fn policies_all_run_and_report() {
        let (corpus, artifacts) = small_sim_inputs(37);
        let sim = SimConfig { horizon_s: 86_400, ..SimConfig::default() };
        for policy in PolicyKind::ALL {
            let report = run(
                *policy,
                &corpus,
                &artifacts,
                &PolicyConfig::default(),
                &sim,
                &RunOptions::default(),
            )
            .unwrap();
            assert_eq!(report.placed, 120, "policy {}", policy.label());
            assert!(report.otf_final >= 0.0 && report.otf_final <= 1.0);
            assert_eq!(report.policy, policy.label());
        }
    }

    #[test]
    fn corrupted_label_contaminates_only_the_ledger() {
        // identical placements, one run with a corrupted prediction in its
        // ledger: after a full window of observations the views coincide,
        // so prediction errors never re-enter observed state
        let honest = LoadVector::new(vec![1.0; 12]).unwrap();
        let corrupted = LoadVector::new(vec![999.0; 12]).unwrap();
        let mut honest_store = MonitoringStore::new(1, 86_400);
        let mut corrupted_store = MonitoringStore::new(1, 86_400);
        for i in 0..SAMPLES_PER_DAY {
            let t = i as u64 * SAMPLE_PERIOD_S;
            let slot = slot_of(t, 12).unwrap();
            honest_store.push(0, t, 4.0, honest.get(slot));
            corrupted_store.push(0, t, 4.0, corrupted.get(slot));
        }
        assert_eq!(
            honest_store.load_vector(0, 12, &honest).unwrap(),
            corrupted_store.load_vector(0, 12, &corrupted).unwrap()
        );
    }
}
