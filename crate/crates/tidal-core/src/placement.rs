//! Placement policies: phase-aware TIDAL placement with spatial screening
//! and temporal smoothing, the spatial fallback, objective variants, and
//! the baseline policies (round-robin, capacity, load-balancing, burst
//! scattering, oracle).
//!
//! All argmin ties break toward the lowest pod id.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load::{coefficient_of_variation, LoadVector};
use crate::profile::{synthesize_profile, ProfileLibrary};
use crate::semantics::{SemanticResult, SemanticSource};

/// Default candidate set size M.
pub const DEFAULT_CANDIDATES: usize = 4;
/// Default confidence threshold tau.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.6;
/// Default trade-off weight in the spatial score. The intra-pod term is
/// disabled by default: its per-decision range dwarfs the marginal
/// cluster-CoV differences, and any positive weight lets resource-shape
/// matching concentrate load onto a few pods under greedy placement.
pub const DEFAULT_SPATIAL_WEIGHT: f64 = 0.0;
/// Default LCP cache-match threshold.
pub const DEFAULT_LCP_THRESHOLD: f64 = 0.4;
/// Predicted peak-to-mean ratio at or above which a disk counts as bursty.
pub const DEFAULT_BURSTINESS_THRESHOLD: f64 = 2.0;

/// One pod's spatial counters and temporal load view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PodState {
    pub pod_id: usize,
    /// Storage capacity limit, GB.
    pub capacity_max_gb: f64,
    /// Bandwidth limit, KB/s.
    pub bandwidth_max_kbps: f64,
    /// Provisioned GB currently hosted.
    pub used_capacity_gb: f64,
    /// Scalar load view, KB/s; equals `load_vector.mean()` when both come
    /// from the same monitoring window.
    pub avg_load_kbps: f64,
    /// Temporal load view over K slots, KB/s.
    pub load_vector: LoadVector,
}

/// Greedy objective evaluated within the candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Incremental intra-day variance (default).
    DeltaVar,
    /// Absolute post-placement variance.
    AbsVar,
    /// Post-placement peak load.
    Peak,
}

impl Objective {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "delta_var" => Ok(Objective::DeltaVar),
            "abs_var" => Ok(Objective::AbsVar),
            "peak" => Ok(Objective::Peak),
            other => Err(Error::config(format!("unknown objective '{other}'"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Objective::DeltaVar => "delta_var",
            Objective::AbsVar => "abs_var",
            Objective::Peak => "peak",
        }
    }
}

/// Tunable placement parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Candidate set size M.
    pub candidate_size: usize,
    /// Confidence threshold tau below which placement degrades to spatial.
    pub confidence_threshold: f64,
    /// Weight on intra-pod balance vs. cluster-wide balance in the spatial score.
    pub spatial_weight: f64,
    /// Prefix-cache match threshold.
    pub lcp_threshold: f64,
    pub objective: Objective,
    /// Intra-day slot count K.
    pub k: usize,
    /// Whether the oracle policy also screens spatial candidates.
    pub oracle_screening: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            candidate_size: DEFAULT_CANDIDATES,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            spatial_weight: DEFAULT_SPATIAL_WEIGHT,
            lcp_threshold: DEFAULT_LCP_THRESHOLD,
            objective: Objective::DeltaVar,
            k: 12,
            oracle_screening: true,
        }
    }
}

/// How a placement decision was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementPath {
    PhaseAware,
    FallbackLowConfidence,
    FallbackFiltered,
    Baseline,
}

/// Outcome of one placement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementDecision {
    pub pod_id: usize,
    pub path: PlacementPath,
    /// Greedy objective value of the chosen pod; present on the
    /// phase-aware path only.
    pub objective_value: Option<f64>,
    pub spatial_score_of_chosen: f64,
    /// Spatial candidate set examined on the phase-aware path.
    pub candidates: Vec<usize>,
}

/// Intra-day variance of a load vector (population form).
pub fn variance(load: &LoadVector) -> f64 {
    load.variance()
}

/// Cost of adding a profile to a pod's load vector: the change in intra-day
/// variance, computed incrementally from sum/sum-of-squares updates.
/// Negative values mean the profile's peaks fall into existing valleys.
pub fn delta_var(pod_load: &LoadVector, profile: &LoadVector) -> Result<f64> {
    if pod_load.len() != profile.len() {
        return Err(Error::data(format!(
            "slot count mismatch: {} vs {}",
            pod_load.len(),
            profile.len()
        )));
    }
    let k = pod_load.len() as f64;
    let mut sum_l = 0.0;
    let mut sum_a = 0.0;
    let mut cross = 0.0;
    let mut sumsq_a = 0.0;
    for (l, a) in pod_load.iter().zip(profile.iter()) {
        sum_l += l;
        sum_a += a;
        cross += l * a;
        sumsq_a += a * a;
    }
    Ok((2.0 * cross + sumsq_a) / k - (2.0 * sum_l * sum_a + sum_a * sum_a) / (k * k))
}

/// Post-placement utilization ratios `(capacity, load)` of every pod when
/// the disk is tentatively placed on `target`. Only the target's ratios
/// include the disk's size and predicted intensity.
pub fn post_utilizations(
    pods: &[PodState],
    target: usize,
    size_gb: f64,
    intensity_kbps: f64,
) -> Result<Vec<(f64, f64)>> {
    pods.iter()
        .map(|p| {
            if p.capacity_max_gb <= 0.0 || p.bandwidth_max_kbps <= 0.0 {
                return Err(Error::config(format!(
                    "pod {} has a non-positive capacity or bandwidth limit",
                    p.pod_id
                )));
            }
            let (extra_cap, extra_load) =
                if p.pod_id == target { (size_gb, intensity_kbps) } else { (0.0, 0.0) };
            Ok((
                (p.used_capacity_gb + extra_cap) / p.capacity_max_gb,
                (p.avg_load_kbps + extra_load) / p.bandwidth_max_kbps,
            ))
        })
        .collect()
}

/// Post-placement spatial score of `target`: weighted sum of the target's
/// intra-pod capacity/load gap and the cluster-wide CoV of both ratio
/// families. Lower is better.
pub fn spatial_score(
    pods: &[PodState],
    target: usize,
    size_gb: f64,
    intensity_kbps: f64,
    spatial_weight: f64,
) -> Result<f64> {
    let ratios = post_utilizations(pods, target, size_gb, intensity_kbps)?;
    let target_idx = pods
        .iter()
        .position(|p| p.pod_id == target)
        .ok_or_else(|| Error::data(format!("target pod {target} not in pod list")))?;
    let (u_cap, u_load) = ratios[target_idx];
    let b_intra = (u_cap - u_load).abs();
    let caps: Vec<f64> = ratios.iter().map(|r| r.0).collect();
    let loads: Vec<f64> = ratios.iter().map(|r| r.1).collect();
    let b_inter = coefficient_of_variation(&caps) + coefficient_of_variation(&loads);
    Ok(spatial_weight * b_intra + (1.0 - spatial_weight) * b_inter)
}

/// The M pods with the lowest spatial scores, ties toward lower pod id.
/// Asking for more candidates than pods returns all pods.
pub fn select_spatial_candidates(
    pods: &[PodState],
    size_gb: f64,
    intensity_kbps: f64,
    m: usize,
    spatial_weight: f64,
) -> Result<Vec<usize>> {
    let mut scored: Vec<(f64, usize)> = pods
        .iter()
        .map(|p| Ok((spatial_score(pods, p.pod_id, size_gb, intensity_kbps, spatial_weight)?, p.pod_id)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(m).map(|(_, id)| id).collect())
}

/// The single pod with the best spatial score.
pub fn spatial_fallback(
    pods: &[PodState],
    size_gb: f64,
    intensity_kbps: f64,
    spatial_weight: f64,
) -> Result<usize> {
    if pods.is_empty() {
        return Err(Error::data("cannot place onto an empty pod list"));
    }
    Ok(select_spatial_candidates(pods, size_gb, intensity_kbps, 1, spatial_weight)?[0])
}

fn evaluate_objective(objective: Objective, pod_load: &LoadVector, profile: &LoadVector) -> Result<f64> {
    match objective {
        Objective::DeltaVar => delta_var(pod_load, profile),
        Objective::AbsVar => Ok(pod_load.add(profile)?.variance()),
        Objective::Peak => Ok(pod_load.add(profile)?.max()),
    }
}

fn pod_by_id(pods: &[PodState], id: usize) -> &PodState {
    pods.iter().find(|p| p.pod_id == id).expect("candidate id from the same pod list")
}

fn fallback_decision(
    pods: &[PodState],
    size_gb: f64,
    intensity_kbps: f64,
    config: &PolicyConfig,
    path: PlacementPath,
) -> Result<PlacementDecision> {
    let pod_id = spatial_fallback(pods, size_gb, intensity_kbps, config.spatial_weight)?;
    Ok(PlacementDecision {
        pod_id,
        path,
        objective_value: None,
        spatial_score_of_chosen: spatial_score(pods, pod_id, size_gb, intensity_kbps, config.spatial_weight)?,
        candidates: Vec::new(),
    })
}

/// Greedy phase-aware selection of the best pod for `profile` within the
/// top-M spatial candidates.
fn phase_aware_decision(
    pods: &[PodState],
    profile: &LoadVector,
    size_gb: f64,
    intensity_kbps: f64,
    config: &PolicyConfig,
    path: PlacementPath,
) -> Result<PlacementDecision> {
    let mut candidates = select_spatial_candidates(
        pods,
        size_gb,
        intensity_kbps,
        config.candidate_size,
        config.spatial_weight,
    )?;
    candidates.sort_unstable(); // scan in pod-id order so ties keep the lowest id
    let mut best: Option<(f64, usize)> = None;
    for id in &candidates {
        let value = evaluate_objective(config.objective, &pod_by_id(pods, *id).load_vector, profile)?;
        if best.is_none_or(|(b, _)| value < b) {
            best = Some((value, *id));
        }
    }
    let (value, pod_id) = best.ok_or_else(|| Error::data("empty candidate set"))?;
    Ok(PlacementDecision {
        pod_id,
        path,
        objective_value: Some(value),
        spatial_score_of_chosen: spatial_score(pods, pod_id, size_gb, intensity_kbps, config.spatial_weight)?,
        candidates,
    })
}

/// Full TIDAL placement. Filtered or low-confidence requests degrade to the
/// spatial fallback; otherwise the class pattern scaled by predicted
/// intensity is smoothed into the best spatial candidate. A semantic label
/// with no library pattern also degrades rather than erroring.
pub fn place_tidal(
    semantic: &SemanticResult,
    intensity_kbps: f64,
    size_gb: f64,
    library: &ProfileLibrary,
    pods: &[PodState],
    config: &PolicyConfig,
) -> Result<PlacementDecision> {
    if semantic.source == SemanticSource::Filtered {
        return fallback_decision(pods, size_gb, intensity_kbps, config, PlacementPath::FallbackFiltered);
    }
    if semantic.confidence < config.confidence_threshold {
        return fallback_decision(
            pods,
            size_gb,
            intensity_kbps,
            config,
            PlacementPath::FallbackLowConfidence,
        );
    }
    let Some(pattern) = library.get(semantic.label) else {
        return fallback_decision(
            pods,
            size_gb,
            intensity_kbps,
            config,
            PlacementPath::FallbackLowConfidence,
        );
    };
    let profile = synthesize_profile(intensity_kbps, pattern)?;
    phase_aware_decision(pods, &profile, size_gb, intensity_kbps, config, PlacementPath::PhaseAware)
}

/// Oracle placement: the disk's true per-slot profile replaces the
/// synthesized one and there is no fallback. Spatial screening stays on
/// unless disabled in the config.
pub fn place_oracle(
    true_profile: &LoadVector,
    size_gb: f64,
    pods: &[PodState],
    config: &PolicyConfig,
) -> Result<PlacementDecision> {
    let intensity = true_profile.mean();
    if config.oracle_screening {
        phase_aware_decision(pods, true_profile, size_gb, intensity, config, PlacementPath::PhaseAware)
    } else {
        let all: Vec<usize> = {
            let mut ids: Vec<usize> = pods.iter().map(|p| p.pod_id).collect();
            ids.sort_unstable();
            ids
        };
        let mut best: Option<(f64, usize)> = None;
        for id in &all {
            let value =
                evaluate_objective(config.objective, &pod_by_id(pods, *id).load_vector, true_profile)?;
            if best.is_none_or(|(b, _)| value < b) {
                best = Some((value, *id));
            }
        }
        let (value, pod_id) = best.ok_or_else(|| Error::data("empty pod list"))?;
        Ok(PlacementDecision {
            pod_id,
            path: PlacementPath::PhaseAware,
            objective_value: Some(value),
            spatial_score_of_chosen: spatial_score(pods, pod_id, size_gb, intensity, config.spatial_weight)?,
            candidates: all,
        })
    }
}

fn baseline_decision(pods: &[PodState], pod_id: usize, size_gb: f64, intensity: f64, weight: f64) -> Result<PlacementDecision> {
    Ok(PlacementDecision {
        pod_id,
        path: PlacementPath::Baseline,
        objective_value: None,
        spatial_score_of_chosen: spatial_score(pods, pod_id, size_gb, intensity, weight)?,
        candidates: Vec::new(),
    })
}

fn argmin_by<F: Fn(&PodState) -> f64>(pods: &[PodState], f: F) -> usize {
    let mut ids: Vec<&PodState> = pods.iter().collect();
    ids.sort_by_key(|p| p.pod_id);
    let mut best: Option<(f64, usize)> = None;
    for p in ids {
        let v = f(p);
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, p.pod_id));
        }
    }
    best.expect("non-empty pod list").1
}

/// Strict rotation over pods in arrival order.
pub fn place_rr(cursor: &mut usize, pods: &[PodState], config: &PolicyConfig) -> Result<PlacementDecision> {
    if pods.is_empty() {
        return Err(Error::data("cannot place onto an empty pod list"));
    }
    let mut ids: Vec<usize> = pods.iter().map(|p| p.pod_id).collect();
    ids.sort_unstable();
    let pod_id = ids[*cursor % ids.len()];
    *cursor += 1;
    baseline_decision(pods, pod_id, 0.0, 0.0, config.spatial_weight)
}

/// Lowest current storage-capacity utilization.
pub fn place_cbp(pods: &[PodState], config: &PolicyConfig) -> Result<PlacementDecision> {
    if pods.is_empty() {
        return Err(Error::data("cannot place onto an empty pod list"));
    }
    let pod_id = argmin_by(pods, |p| p.used_capacity_gb / p.capacity_max_gb);
    baseline_decision(pods, pod_id, 0.0, 0.0, config.spatial_weight)
}

/// Average-load balancing with a coarse bucketized intensity estimate.
pub fn place_scda(
    bucket_intensity_kbps: f64,
    size_gb: f64,
    pods: &[PodState],
    config: &PolicyConfig,
) -> Result<PlacementDecision> {
    if pods.is_empty() {
        return Err(Error::data("cannot place onto an empty pod list"));
    }
    let pod_id = argmin_by(pods, |p| (p.avg_load_kbps + bucket_intensity_kbps) / p.bandwidth_max_kbps);
    baseline_decision(pods, pod_id, size_gb, bucket_intensity_kbps, config.spatial_weight)
}

/// Burst scattering: bursty disks go to the pod hosting the fewest bursty
/// disks; the rest balance average load.
pub fn place_tela(
    predicted_burstiness: f64,
    burstiness_threshold: f64,
    bursty_counts: &mut [u64],
    intensity_kbps: f64,
    size_gb: f64,
    pods: &[PodState],
    config: &PolicyConfig,
) -> Result<PlacementDecision> {
    if pods.is_empty() {
        return Err(Error::data("cannot place onto an empty pod list"));
    }
    let pod_id = if predicted_burstiness >= burstiness_threshold {
        let chosen = argmin_by(pods, |p| bursty_counts[p.pod_id] as f64);
        bursty_counts[chosen] += 1;
        chosen
    } else {
        argmin_by(pods, |p| (p.avg_load_kbps + intensity_kbps) / p.bandwidth_max_kbps)
    };
    baseline_decision(pods, pod_id, size_gb, intensity_kbps, config.spatial_weight)
}

/// Intensity-aware spatial placement with no temporal smoothing (the
/// fallback path applied to every request).
pub fn place_spatial_only(
    intensity_kbps: f64,
    size_gb: f64,
    pods: &[PodState],
    config: &PolicyConfig,
) -> Result<PlacementDecision> {
    let pod_id = spatial_fallback(pods, size_gb, intensity_kbps, config.spatial_weight)?;
    baseline_decision(pods, pod_id, size_gb, intensity_kbps, config.spatial_weight)
}
