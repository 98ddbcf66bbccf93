//! Run orchestration: artifact building, manifests, and report files.
//!
//! Every run is described by a [`Manifest`] that captures the full resolved
//! configuration; executing the same manifest twice produces byte-identical
//! outputs. The CLI translates flags into manifests and calls [`execute`].

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{self, Corpus};
use crate::error::{Error, Result};
use crate::generator::{self, GeneratorConfig};
use crate::intensity::{BucketClassifier, LookupRegressor};
use crate::placement::PolicyConfig;
use crate::profile::ProfileLibrary;
use crate::semantics::{FilterRules, Lexicon, SemanticPipeline, DEFAULT_CACHE_CAPACITY};
use crate::sim::{self, MetricsReport, PolicyArtifacts, PolicyKind, RunOptions, SimConfig};
use crate::taxonomy::ApplicationClass;
use crate::workload::ResourceSpec;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROFILES_FILE: &str = "profiles.csv";
pub const INTENSITY_MODEL_FILE: &str = "intensity_model.csv";
pub const BUCKET_MODEL_FILE: &str = "bucket_model.csv";
pub const BURSTINESS_MODEL_FILE: &str = "burstiness_model.csv";
pub const LEXICON_FILE: &str = "lexicon.txt";
pub const METRICS_FILE: &str = "metrics.csv";

/// Where class labels for offline construction come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    GroundTruth,
    Inferred,
}

impl LabelSource {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ground-truth" => Ok(LabelSource::GroundTruth),
            "inferred" => Ok(LabelSource::Inferred),
            other => Err(Error::config(format!("unknown label source '{other}'"))),
        }
    }
}

/// One parameter sweep: rerun the comparison at each value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// "K" (slot count) or "M" (candidate set size).
    pub param: String,
    pub values: Vec<usize>,
}

impl SweepSpec {
    /// Parses `K=2,4,6` or `M=2..8`.
    pub fn parse(s: &str) -> Result<Self> {
        let (param, rest) = s
            .split_once('=')
            .ok_or_else(|| Error::config(format!("bad sweep '{s}', expected PARAM=values")))?;
        let param = param.trim().to_uppercase();
        if param != "K" && param != "M" {
            return Err(Error::config(format!("sweep parameter must be K or M, got '{param}'")));
        }
        let rest = rest.trim();
        let values: Vec<usize> = if let Some((lo, hi)) = rest.split_once("..") {
            let lo: usize = lo.parse().map_err(|_| Error::config(format!("bad sweep range '{rest}'")))?;
            let hi: usize = hi.parse().map_err(|_| Error::config(format!("bad sweep range '{rest}'")))?;
            if lo > hi {
                return Err(Error::config(format!("empty sweep range '{rest}'")));
            }
            (lo..=hi).collect()
        } else {
            rest.split(',')
                .map(|v| v.trim().parse().map_err(|_| Error::config(format!("bad sweep value '{v}'"))))
                .collect::<Result<_>>()?
        };
        if values.is_empty() {
            return Err(Error::config("sweep needs at least one value"));
        }
        Ok(SweepSpec { param, values })
    }
}

/// Fully resolved description of one run; the unit of reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Manifest {
    Generate {
        out_dir: PathBuf,
        config: GeneratorConfig,
        /// Post-generation metadata randomization, if any.
        noise_inject: Option<(f64, u64)>,
    },
    Build {
        corpus_dir: PathBuf,
        out_dir: PathBuf,
        k: usize,
        label_source: LabelSource,
        /// External lexicon file; the built-in one when absent.
        lexicon: Option<PathBuf>,
    },
    Simulate {
        corpus_dir: PathBuf,
        artifacts_dir: PathBuf,
        out_dir: PathBuf,
        policy: PolicyKind,
        policy_config: PolicyConfig,
        sim_config: SimConfig,
        options: RunOptions,
    },
    Compare {
        corpus_dir: PathBuf,
        artifacts_dir: PathBuf,
        out_dir: PathBuf,
        policies: Vec<PolicyKind>,
        policy_config: PolicyConfig,
        sim_config: SimConfig,
        options: RunOptions,
        sweep: Option<SweepSpec>,
    },
}

impl Manifest {
    pub fn out_dir(&self) -> &Path {
        match self {
            Manifest::Generate { out_dir, .. }
            | Manifest::Build { out_dir, .. }
            | Manifest::Simulate { out_dir, .. }
            | Manifest::Compare { out_dir, .. } => out_dir,
        }
    }

    pub fn with_out_dir(mut self, dir: PathBuf) -> Self {
        match &mut self {
            Manifest::Generate { out_dir, .. }
            | Manifest::Build { out_dir, .. }
            | Manifest::Simulate { out_dir, .. }
            | Manifest::Compare { out_dir, .. } => *out_dir = dir,
        }
        self
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|_| Error::missing(format!("manifest {}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
    }
}

fn write_manifest(manifest: &Manifest) -> Result<()> {
    let path = manifest.out_dir().join(MANIFEST_FILE);
    let mut w = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, manifest)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Labels per disk, from ground truth or from replaying the semantic
/// pipeline over the requests.
pub fn resolve_labels(
    corpus: &Corpus,
    source: LabelSource,
    lexicon: &Lexicon,
) -> Result<BTreeMap<u64, ApplicationClass>> {
    match source {
        LabelSource::GroundTruth => {
            Ok(corpus.ground_truth.iter().map(|g| (g.disk_id, g.label)).collect())
        }
        LabelSource::Inferred => {
            let mut pipeline = SemanticPipeline::with_lexicon(
                lexicon.clone(),
                FilterRules::builtin(),
                DEFAULT_CACHE_CAPACITY,
                crate::placement::DEFAULT_LCP_THRESHOLD,
            );
            let mut labels = BTreeMap::new();
            for r in &corpus.requests {
                let res = pipeline.infer(&r.project_name, &r.vm_name, &r.disk_name)?;
                labels.insert(r.request_id, res.label);
            }
            Ok(labels)
        }
    }
}

/// Builds every offline artifact a simulation consumes.
pub fn build_artifacts(
    corpus: &Corpus,
    k: usize,
    label_source: LabelSource,
    lexicon: Lexicon,
) -> Result<PolicyArtifacts> {
    let labels = resolve_labels(corpus, label_source, &lexicon)?;
    let by_class = sim::traces_by_class(corpus, &labels);
    if by_class.is_empty() {
        return Err(Error::data("no labeled traces to build a profile library from"));
    }
    let library = ProfileLibrary::build(&by_class, k)?;

    let truth = corpus.ground_truth_map();
    let mut intensity_pairs: Vec<(ResourceSpec, f64)> = Vec::with_capacity(corpus.requests.len());
    let mut burstiness_pairs: Vec<(ResourceSpec, f64)> = Vec::with_capacity(corpus.requests.len());
    for r in &corpus.requests {
        let trace = corpus.trace(r.request_id)?;
        let intensity = match label_source {
            // true intensities when ground truth drives the build,
            // observed trace means otherwise
            LabelSource::GroundTruth => truth
                .get(&r.request_id)
                .map(|g| g.intensity_kbps)
                .unwrap_or_else(|| trace.mean()),
            LabelSource::Inferred => trace.mean(),
        };
        intensity_pairs.push((r.spec.clone(), intensity));
        burstiness_pairs.push((r.spec.clone(), trace.burstiness(k)?));
    }
    Ok(PolicyArtifacts {
        library,
        intensity: LookupRegressor::fit(&intensity_pairs)?,
        buckets: BucketClassifier::fit(&intensity_pairs)?,
        burstiness: LookupRegressor::fit(&burstiness_pairs)?,
        lexicon,
    })
}

pub fn write_artifacts(dir: &Path, artifacts: &PolicyArtifacts) -> Result<()> {
    fs::create_dir_all(dir)?;
    artifacts.library.write_csv(&dir.join(PROFILES_FILE))?;
    artifacts.intensity.write_csv(&dir.join(INTENSITY_MODEL_FILE))?;
    artifacts.buckets.write_csv(&dir.join(BUCKET_MODEL_FILE))?;
    artifacts.burstiness.write_csv_named(&dir.join(BURSTINESS_MODEL_FILE), "burstiness")?;
    artifacts.lexicon.write_text(&dir.join(LEXICON_FILE))?;
    Ok(())
}

pub fn load_artifacts(dir: &Path) -> Result<PolicyArtifacts> {
    Ok(PolicyArtifacts {
        library: ProfileLibrary::read_csv(&dir.join(PROFILES_FILE))?,
        intensity: LookupRegressor::read_csv(&dir.join(INTENSITY_MODEL_FILE))?,
        buckets: BucketClassifier::read_csv(&dir.join(BUCKET_MODEL_FILE))?,
        burstiness: LookupRegressor::read_csv_named(&dir.join(BURSTINESS_MODEL_FILE), "burstiness")?,
        lexicon: Lexicon::read_text(&dir.join(LEXICON_FILE))?,
    })
}

/// Runs each policy on identical inputs with fresh per-policy state.
pub fn compare(
    corpus: &Corpus,
    artifacts: &PolicyArtifacts,
    policies: &[PolicyKind],
    policy_config: &PolicyConfig,
    sim_config: &SimConfig,
    options: &RunOptions,
) -> Result<Vec<MetricsReport>> {
    policies
        .iter()
        .map(|p| sim::run(*p, corpus, artifacts, policy_config, sim_config, options))
        .collect()
}

/// Flat `policy,metric,value` rows for one run set. A sweep label prefixes
/// an extra leading `setting` column.
pub fn metrics_csv(reports: &[MetricsReport], setting: Option<&str>) -> String {
    let mut out = String::new();
    if setting.is_some() {
        out.push_str("setting,policy,metric,value\n");
    } else {
        out.push_str("policy,metric,value\n");
    }
    let prefix = |out: &mut String| {
        if let Some(s) = setting {
            out.push_str(s);
            out.push(',');
        }
    };
    for r in reports {
        let mut row = |metric: &str, value: String| {
            prefix(&mut out);
            out.push_str(&r.policy);
            out.push(',');
            out.push_str(metric);
            out.push(',');
            out.push_str(&value);
            out.push('\n');
        };
        row("otf_final", format!("{}", r.otf_final));
        row("overloaded_pod_intervals", format!("{}", r.overloaded_pod_intervals));
        row("total_pod_intervals", format!("{}", r.total_pod_intervals));
        row("episode_count", format!("{}", r.episodes.len()));
        row("p95_episode_s", format!("{}", r.p95_episode_s));
        row("p99_episode_s", format!("{}", r.p99_episode_s));
        row("spatial_imbalance", format!("{}", r.spatial_imbalance));
        row("temporal_imbalance", format!("{}", r.temporal_imbalance_mean));
        row("placed", format!("{}", r.placed));
        for (fraction, value) in &r.otf_checkpoints {
            row(&format!("otf_at_{fraction}"), format!("{value}"));
        }
        if let Some(stats) = &r.pipeline_stats {
            row("pipeline_filtered", format!("{}", stats.filtered));
            row("pipeline_cache_hits", format!("{}", stats.cache_hits));
            row("pipeline_classified", format!("{}", stats.classified));
        }
    }
    out
}

/// Writes `report_<policy>.json` and `decisions_<policy>.jsonl` per policy.
pub fn write_reports(dir: &Path, reports: &[MetricsReport]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for r in reports {
        let path = dir.join(format!("report_{}.json", r.policy));
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, r)
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        w.write_all(b"\n")?;
        w.flush()?;

        let path = dir.join(format!("decisions_{}.jsonl", r.policy));
        let mut w = BufWriter::new(File::create(&path)?);
        for d in &r.decisions {
            serde_json::to_writer(&mut w, d)
                .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Executes a manifest, writing all outputs plus the manifest itself under
/// its out_dir. Returns the reports for simulate/compare commands.
pub fn execute(manifest: &Manifest) -> Result<Vec<MetricsReport>> {
    fs::create_dir_all(manifest.out_dir())?;
    match manifest {
        Manifest::Generate { out_dir, config, noise_inject } => {
            let templates = generator::default_templates();
            let mut generated = generator::generate_corpus(config, &templates)?;
            if let Some((ratio, seed)) = noise_inject {
                generator::inject_noise(&mut generated.corpus.requests, *ratio, *seed)?;
            }
            corpus::write_corpus(out_dir, &generated.corpus)?;
            write_manifest(manifest)?;
            Ok(Vec::new())
        }
        Manifest::Build { corpus_dir, out_dir, k, label_source, lexicon } => {
            let corpus = corpus::read_corpus(corpus_dir)?;
            let lexicon = match lexicon {
                Some(path) => Lexicon::read_text(path)?,
                None => Lexicon::default_lexicon(),
            };
            let artifacts = build_artifacts(&corpus, *k, *label_source, lexicon)?;
            let missing: Vec<&str> = ApplicationClass::semantic()
                .filter(|c| artifacts.library.get(*c).is_none())
                .map(|c| c.label())
                .collect();
            if !missing.is_empty() {
                eprintln!(
                    "warning: no labeled traces for {} classes; omitted from profiles.csv: {}",
                    missing.len(),
                    missing.join(", ")
                );
            }
            write_artifacts(out_dir, &artifacts)?;
            write_manifest(manifest)?;
            Ok(Vec::new())
        }
        Manifest::Simulate {
            corpus_dir,
            artifacts_dir,
            out_dir,
            policy,
            policy_config,
            sim_config,
            options,
        } => {
            let corpus = corpus::read_corpus(corpus_dir)?;
            let artifacts = load_artifacts(artifacts_dir)?;
            let report = sim::run(*policy, &corpus, &artifacts, policy_config, sim_config, options)?;
            let reports = vec![report];
            fs::write(out_dir.join(METRICS_FILE), metrics_csv(&reports, None))?;
            write_reports(out_dir, &reports)?;
            write_manifest(manifest)?;
            Ok(reports)
        }
        Manifest::Compare {
            corpus_dir,
            artifacts_dir,
            out_dir,
            policies,
            policy_config,
            sim_config,
            options,
            sweep,
        } => {
            let corpus = corpus::read_corpus(corpus_dir)?;
            match sweep {
                None => {
                    let artifacts = load_artifacts(artifacts_dir)?;
                    let reports =
                        compare(&corpus, &artifacts, policies, policy_config, sim_config, options)?;
                    fs::write(out_dir.join(METRICS_FILE), metrics_csv(&reports, None))?;
                    write_reports(out_dir, &reports)?;
                    write_manifest(manifest)?;
                    Ok(reports)
                }
                Some(spec) => {
                    let base_artifacts = load_artifacts(artifacts_dir)?;
                    let mut all = Vec::new();
                    let mut combined = String::from("setting,policy,metric,value\n");
                    for value in &spec.values {
                        let mut pc = policy_config.clone();
                        let mut sc = sim_config.clone();
                        let artifacts;
                        let current: &PolicyArtifacts = match spec.param.as_str() {
                            "K" => {
                                pc.k = *value;
                                sc.k = *value;
                                // patterns must match the new slot width
                                artifacts = rebuild_for_k(&corpus, &base_artifacts, *value)?;
                                &artifacts
                            }
                            _ => {
                                pc.candidate_size = *value;
                                &base_artifacts
                            }
                        };
                        let setting = format!("{}={}", spec.param, value);
                        let reports = compare(&corpus, current, policies, &pc, &sc, options)?;
                        let block = metrics_csv(&reports, Some(&setting));
                        combined.push_str(block.split_once('\n').map(|(_, b)| b).unwrap_or(""));
                        let sub = out_dir.join(format!("sweep_{}_{}", spec.param, value));
                        fs::create_dir_all(&sub)?;
                        fs::write(sub.join(METRICS_FILE), block)?;
                        write_reports(&sub, &reports)?;
                        all.extend(reports);
                    }
                    fs::write(out_dir.join(METRICS_FILE), combined)?;
                    write_manifest(manifest)?;
                    Ok(all)
                }
            }
        }
    }
}

/// Rebuilds the K-dependent artifacts (profile library, burstiness lookup)
/// from the corpus ground truth at a new slot count.
fn rebuild_for_k(corpus: &Corpus, base: &PolicyArtifacts, k: usize) -> Result<PolicyArtifacts> {
    let labels = corpus.ground_truth.iter().map(|g| (g.disk_id, g.label)).collect();
    let by_class = sim::traces_by_class(corpus, &labels);
    let library = ProfileLibrary::build(&by_class, k)?;
    let mut burstiness_pairs = Vec::with_capacity(corpus.requests.len());
    for r in &corpus.requests {
        burstiness_pairs.push((r.spec.clone(), corpus.trace(r.request_id)?.burstiness(k)?));
    }
    Ok(PolicyArtifacts {
        library,
        intensity: base.intensity.clone(),
        buckets: base.buckets.clone(),
        burstiness: LookupRegressor::fit(&burstiness_pairs)?,
        lexicon: base.lexicon.clone(),
    })
}
