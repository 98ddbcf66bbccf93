//! Seeded synthetic corpus generation.
//!
//! Every disk draws an application class, a true mean intensity from the
//! class lognormal, and a per-disk shape `clamp0(class shape + noise)`
//! renormalized to mean 1. Traces expand the shape to 5-minute samples
//! with optional within-slot jitter. Names render from per-class templates
//! so the default lexicon recovers the class; a configurable fraction of
//! disks instead get opaque hex identifiers, and a further noise-injection
//! pass can randomize metadata outright while leaving traces untouched.
//!
//! Generation is single-threaded and all randomness flows from one seeded
//! generator, so a (config, templates, seed) triple reproduces the corpus
//! byte for byte.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Uniform};

use crate::corpus::{Corpus, GroundTruthRecord};
use crate::error::{Error, Result};
use crate::load::LoadVector;
use crate::taxonomy::ApplicationClass;
use crate::workload::{DiskRole, DiskTrace, MediaType, ProvisioningRequest, ResourceSpec, SAMPLES_PER_DAY};

/// Native resolution of template shapes: hourly slots.
pub const SHAPE_SLOTS: usize = 24;

/// Fraction of disks created in name-sharing batches.
const BATCH_DISK_FRACTION: f64 = 0.30;
/// Batch sizes are uniform over 2..=8.
const BATCH_MIN: usize = 2;
const BATCH_MAX: usize = 8;

/// Name-rendering material for one class.
#[derive(Debug, Clone)]
pub struct NameStyle {
    pub words: Vec<String>,
    pub project_templates: Vec<String>,
    pub vm_templates: Vec<String>,
    /// Disk templates must end in `-{n}` so batches can share the stem.
    pub disk_templates: Vec<String>,
}

/// Statistical template for one application class.
#[derive(Debug, Clone)]
pub struct ClassTemplate {
    pub label: ApplicationClass,
    /// Mean-1 hourly day shape (the class's true pattern).
    pub base_shape: LoadVector,
    /// Six-hour window of the shape's peak, in `[0, 4)`.
    pub peak_window: usize,
    pub intensity_log_mean: f64,
    pub intensity_log_sigma: f64,
    /// Peak-to-mean ratio of the base shape.
    pub burstiness: f64,
    pub lease_base_days: u32,
    pub ssd_probability: f64,
    pub system_role_probability: f64,
    pub names: NameStyle,
}

/// Generation parameters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GeneratorConfig {
    pub n_disks: usize,
    /// Probability mass per semantic class; must sum to 1.
    pub class_mix: Vec<(ApplicationClass, f64)>,
    /// Fraction of disks whose metadata is replaced by hex identifiers.
    pub unknown_fraction: f64,
    /// Standard deviation of the per-slot shape perturbation.
    pub noise_sigma: f64,
    /// Relative amplitude of the uniform within-slot sample jitter; 0 disables.
    pub within_slot_jitter: f64,
    /// Arrivals are uniform over `[0, arrival_horizon_s)`.
    pub arrival_horizon_s: u64,
    /// Trace length in whole days.
    pub days: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_disks: 5000,
            class_mix: default_class_mix(),
            unknown_fraction: 0.20,
            noise_sigma: 0.12,
            within_slot_jitter: 0.08,
            arrival_horizon_s: 86_400,
            days: 3,
            seed: 42,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_disks == 0 {
            return Err(Error::config("n_disks must be at least 1"));
        }
        if self.days == 0 {
            return Err(Error::config("trace length must be at least one day"));
        }
        if !(0.0..=1.0).contains(&self.unknown_fraction) {
            return Err(Error::config("unknown_fraction must lie in [0,1]"));
        }
        if self.arrival_horizon_s == 0 {
            return Err(Error::config("arrival horizon must be positive"));
        }
        let total: f64 = self.class_mix.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("class mix sums to {total}, expected 1")));
        }
        if self.class_mix.iter().any(|(c, p)| *c == ApplicationClass::Unknown && *p > 0.0) {
            return Err(Error::config("class mix must not assign mass to unknown"));
        }
        Ok(())
    }
}

/// A generated corpus plus the expected per-slot profiles behind it.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub corpus: Corpus,
    /// Expected hourly profile (intensity times realized shape) per disk.
    pub true_profiles: BTreeMap<u64, LoadVector>,
}

fn bump(h: f64, center_h: f64, width_h: f64) -> f64 {
    let mut d = (h - center_h).abs();
    d = d.min(24.0 - d);
    if d <= width_h / 2.0 {
        let z = std::f64::consts::PI * d / width_h;
        z.cos() * z.cos()
    } else {
        0.0
    }
}

/// Hourly mean-1 shape with one smooth peak: `1 + amplitude * cos^2` over a
/// circular window of `width_h` hours centered at `center_h`.
pub fn diurnal_shape(center_h: f64, width_h: f64, amplitude: f64) -> LoadVector {
    let values = (0..SHAPE_SLOTS)
        .map(|i| 1.0 + amplitude * bump(i as f64 + 0.5, center_h, width_h))
        .collect();
    LoadVector::new(values).unwrap().mean_normalize().unwrap()
}

/// Hourly mean-1 shape with two peaks, for classes whose day mixes a
/// primary burst with a secondary one.
pub fn diurnal_shape_bimodal(
    c1: f64,
    w1: f64,
    a1: f64,
    c2: f64,
    w2: f64,
    a2: f64,
) -> LoadVector {
    let values = (0..SHAPE_SLOTS)
        .map(|i| {
            let h = i as f64 + 0.5;
            1.0 + a1 * bump(h, c1, w1) + a2 * bump(h, c2, w2)
        })
        .collect();
    LoadVector::new(values).unwrap().mean_normalize().unwrap()
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|w| w.to_string()).collect()
}

/// The built-in template set: eight classes spanning all four six-hour
/// peak windows with distinct burstiness levels.
pub fn default_templates() -> Vec<ClassTemplate> {
    use ApplicationClass::*;
    let t = |label: ApplicationClass,
             shape: LoadVector,
             peak_window: usize,
             mean_kbps: f64,
             sigma: f64,
             lease: u32,
             ssd: f64,
             system: f64,
             names: NameStyle| {
        let burstiness = shape.max();
        ClassTemplate {
            label,
            base_shape: shape,
            peak_window,
            intensity_log_mean: mean_kbps.ln(),
            intensity_log_sigma: sigma,
            burstiness,
            lease_base_days: lease,
            ssd_probability: ssd,
            system_role_probability: system,
            names,
        }
    };
    vec![
        t(
            Database,
            diurnal_shape(11.5, 10.0, 0.12),
            1,
            450.0,
            0.9,
            730,
            0.95,
            0.05,
            NameStyle {
                words: words(&["atlas", "orion", "aurora", "cobalt", "meadow"]),
                project_templates: words(&["{word}-platform", "{word}-data-group"]),
                vm_templates: words(&["db-host-{n}", "mysql-vm-{n}", "pg-node-{n}"]),
                disk_templates: words(&[
                    "mysql-prod-{n}",
                    "postgres-data-{n}",
                    "db-data-{n}",
                    "mariadb-vol-{n}",
                    "innodb-vol-{n}",
                ]),
            },
        ),
        t(
            Gaming,
            diurnal_shape(22.0, 8.0, 7.2),
            3,
            380.0,
            1.1,
            180,
            0.9,
            0.10,
            NameStyle {
                words: words(&["rune", "saga", "frost", "ember", "myth", "titan"]),
                project_templates: words(&["{word}-game-studio", "{word}-interactive", "gaming-{word}"]),
                vm_templates: words(&["game-srv-{n}", "realm-host-{n}", "lobby-vm-{n}"]),
                disk_templates: words(&[
                    "{word}-realm-node-{n}",
                    "mmo-{word}-{n}",
                    "game-data-{n}",
                    "arena-vol-{n}",
                ]),
            },
        ),
        t(
            OfficeSystem,
            diurnal_shape(10.0, 8.0, 8.0),
            1,
            380.0,
            0.9,
            365,
            0.9,
            0.15,
            NameStyle {
                words: words(&["acme", "summit", "harbor", "crescent", "beacon"]),
                project_templates: words(&["{word}-corp", "{word}-group"]),
                vm_templates: words(&["oa-host-{n}", "erp-app-{n}", "office-vm-{n}"]),
                disk_templates: words(&[
                    "office-oa-disk-{n}",
                    "erp-data-{n}",
                    "crm-vol-{n}",
                    "payroll-{word}-{n}",
                    "mail-archive-{n}",
                ]),
            },
        ),
        t(
            MediaStreaming,
            diurnal_shape(14.0, 8.0, 4.2),
            2,
            450.0,
            1.1,
            365,
            0.7,
            0.05,
            NameStyle {
                words: words(&["echo", "lumen", "prism", "vista", "cinema"]),
                project_templates: words(&["{word}-media-group", "{word}-tv"]),
                vm_templates: words(&["stream-node-{n}", "transcode-{n}", "vod-srv-{n}"]),
                disk_templates: words(&[
                    "vod-data-{n}",
                    "stream-buffer-{n}",
                    "video-{word}-{n}",
                    "hls-segment-{n}",
                ]),
            },
        ),
        t(
            InfraMessageQueue,
            diurnal_shape(13.0, 8.0, 0.28),
            2,
            380.0,
            0.9,
            365,
            0.9,
            0.10,
            NameStyle {
                words: words(&["relay", "comet", "signal", "pulse"]),
                project_templates: words(&["{word}-infra", "core-{word}"]),
                vm_templates: words(&["mq-broker-{n}", "kafka-node-{n}"]),
                disk_templates: words(&[
                    "kafka-{word}-{n}",
                    "mq-data-{n}",
                    "queue-vol-{n}",
                    "pulsar-data-{n}",
                ]),
            },
        ),
        t(
            InfraLogging,
            diurnal_shape_bimodal(2.0, 8.0, 5.2, 14.0, 8.0, 1.8),
            0,
            300.0,
            0.9,
            365,
            0.6,
            0.10,
            NameStyle {
                words: words(&["argus", "vigil", "sentry", "watch"]),
                project_templates: words(&["{word}-platform-ops", "{word}-sre"]),
                vm_templates: words(&["logging-host-{n}", "metrics-vm-{n}"]),
                disk_templates: words(&[
                    "logstash-data-{n}",
                    "kibana-index-{n}",
                    "prometheus-tsdb-{n}",
                    "audit-log-{n}",
                    "grafana-vol-{n}",
                ]),
            },
        ),
        t(
            ComputeSimulation,
            diurnal_shape(6.0, 8.0, 3.3),
            1,
            500.0,
            1.1,
            90,
            0.5,
            0.05,
            NameStyle {
                words: words(&["vectra", "turbo", "blaze", "zephyr", "flux"]),
                project_templates: words(&["{word}-labs", "{word}-research"]),
                vm_templates: words(&["hpc-node-{n}", "render-{n}"]),
                disk_templates: words(&[
                    "render-scratch-{n}",
                    "simulation-out-{n}",
                    "hpc-{word}-{n}",
                    "solver-work-{n}",
                    "batch-data-{n}",
                ]),
            },
        ),
        t(
            EcommerceRetail,
            diurnal_shape(18.0, 8.0, 8.0),
            3,
            350.0,
            1.1,
            365,
            0.9,
            0.10,
            NameStyle {
                words: words(&["bazaar", "plaza", "orchid", "velvet"]),
                project_templates: words(&["{word}-retail-group", "{word}-commerce"]),
                vm_templates: words(&["shop-app-{n}", "checkout-srv-{n}"]),
                disk_templates: words(&[
                    "shop-{word}-{n}",
                    "cart-data-{n}",
                    "checkout-vol-{n}",
                    "sku-catalog-{n}",
                ]),
            },
        ),
    ]
}

/// Default class mix over the built-in template classes.
pub fn default_class_mix() -> Vec<(ApplicationClass, f64)> {
    use ApplicationClass::*;
    vec![
        (Database, 0.16),
        (Gaming, 0.11),
        (OfficeSystem, 0.12),
        (MediaStreaming, 0.10),
        (InfraMessageQueue, 0.15),
        (InfraLogging, 0.13),
        (ComputeSimulation, 0.13),
        (EcommerceRetail, 0.10),
    ]
}

struct DiskDraft {
    arrival_time_s: u64,
    project: String,
    vm: String,
    disk_name: String,
    spec: ResourceSpec,
    label: ApplicationClass,
    intensity_kbps: f64,
    shape: LoadVector,
}

fn render(template: &str, word: &str, n: &str) -> String {
    template.replace("{word}", word).replace("{n}", n)
}

fn capacity_ladder(idx: usize) -> u64 {
    [32, 64, 128, 256, 512, 1024, 2048, 4096][idx.min(7)]
}

fn vcpu_ladder(idx: usize) -> u32 {
    [1, 2, 4, 8, 16][idx.min(4)]
}

/// Resource spec loosely monotone in intensity, with seeded slack.
fn draw_spec(rng: &mut ChaCha8Rng, template: &ClassTemplate, intensity: f64) -> ResourceSpec {
    let ln_i = intensity.max(1.0).ln();
    // capacity tracks intensity only loosely (archives vs hot data), so
    // capacity alone is a poor load proxy; vcpu/memory track it tightly
    let cap_wobble = match rng.gen_range(0..10) {
        0 => -2i64,
        1..=3 => -1,
        4..=6 => 0,
        7..=8 => 1,
        _ => 2,
    };
    let cap_idx =
        (((ln_i - 40f64.ln()) / 2.3f64.ln()).round() as i64 + cap_wobble).clamp(0, 7) as usize;
    let vcpu_wobble = match rng.gen_range(0..10) {
        0 => -1i64,
        1..=8 => 0,
        _ => 1,
    };
    let vcpu_idx =
        (((ln_i - 60f64.ln()) / 3.0f64.ln()).round() as i64 + vcpu_wobble).clamp(0, 4) as usize;
    let vcpu_count = vcpu_ladder(vcpu_idx);
    let memory_gb = vcpu_count * [2u32, 4, 8][rng.gen_range(0..3)];
    let lease_days =
        ((template.lease_base_days as f64 * rng.gen_range(0.5..1.5)).round() as u32).max(1);
    ResourceSpec {
        vcpu_count,
        memory_gb,
        capacity_gb: capacity_ladder(cap_idx),
        lease_days,
        disk_role: if rng.gen_bool(template.system_role_probability) {
            DiskRole::System
        } else {
            DiskRole::Data
        },
        media_type: if rng.gen_bool(template.ssd_probability) {
            MediaType::Ssd
        } else {
            MediaType::Hdd
        },
    }
}

/// Per-disk realized shape: class shape plus zero-mean noise, clamped to
/// non-negative and renormalized to mean 1.
fn draw_shape(rng: &mut ChaCha8Rng, base: &LoadVector, sigma: f64) -> LoadVector {
    if sigma == 0.0 {
        return base.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let perturbed: Vec<f64> = base
        .iter()
        .map(|v| (v + normal.sample(rng)).max(0.0))
        .collect();
    LoadVector::new(perturbed)
        .and_then(|v| v.mean_normalize())
        // all-zero after clamping is astronomically unlikely; fall back to the class shape
        .unwrap_or_else(|_| base.clone())
}

fn expand_trace(
    rng: &mut ChaCha8Rng,
    profile_hourly: &LoadVector,
    days: usize,
    jitter: f64,
) -> Vec<f64> {
    let per_slot = SAMPLES_PER_DAY / SHAPE_SLOTS;
    let mut samples = Vec::with_capacity(SAMPLES_PER_DAY * days);
    for _ in 0..days {
        for s in 0..SAMPLES_PER_DAY {
            let expected = profile_hourly.get(s / per_slot);
            let value = if jitter > 0.0 {
                expected * (1.0 + jitter * rng.gen_range(-1.0..1.0))
            } else {
                expected
            };
            samples.push(value.max(0.0));
        }
    }
    samples
}

fn hex_string(rng: &mut ChaCha8Rng, len: usize) -> String {
    const HEX: &[u8] = b"0123456789abcdef";
    (0..len).map(|_| HEX[rng.gen_range(0..16)] as char).collect()
}

fn uuid_string(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{}-{}-{}-{}-{}",
        hex_string(rng, 8),
        hex_string(rng, 4),
        hex_string(rng, 4),
        hex_string(rng, 4),
        hex_string(rng, 12)
    )
}

/// Generates a full corpus with ground truth.
pub fn generate_corpus(config: &GeneratorConfig, templates: &[ClassTemplate]) -> Result<GeneratedCorpus> {
    config.validate()?;
    let by_class: BTreeMap<ApplicationClass, &ClassTemplate> =
        templates.iter().map(|t| (t.label, t)).collect();
    for (class, p) in &config.class_mix {
        if *p > 0.0 && !by_class.contains_key(class) {
            return Err(Error::config(format!(
                "class {class} has probability {p} but no template"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let classes: Vec<ApplicationClass> = config.class_mix.iter().map(|(c, _)| *c).collect();
    let weights: Vec<f64> = config.class_mix.iter().map(|(_, p)| *p).collect();
    let batch_start_prob = {
        // solve q so that q*E[B] disks out of q*E[B] + (1-q) land in batches
        let mean_batch = (BATCH_MIN + BATCH_MAX) as f64 / 2.0;
        BATCH_DISK_FRACTION / (mean_batch - BATCH_DISK_FRACTION * (mean_batch - 1.0))
    };

    let draw_class = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.gen_range(0.0..1.0);
        let mut acc = 0.0;
        for (c, w) in classes.iter().zip(weights.iter()) {
            acc += w;
            if u < acc {
                return *c;
            }
        }
        *classes.last().expect("validated non-empty mix")
    };

    let mut drafts: Vec<DiskDraft> = Vec::with_capacity(config.n_disks);
    while drafts.len() < config.n_disks {
        let remaining = config.n_disks - drafts.len();
        let batch_size = if remaining >= BATCH_MIN && rng.gen_bool(batch_start_prob) {
            rng.gen_range(BATCH_MIN..=BATCH_MAX.min(remaining))
        } else {
            1
        };
        let class = draw_class(&mut rng);
        let template = by_class[&class];
        let style = &template.names;

        let word = style.words.choose(&mut rng).expect("non-empty word list").clone();
        let project = render(
            style.project_templates.choose(&mut rng).expect("non-empty templates"),
            &word,
            &format!("{:02}", rng.gen_range(1..=99)),
        );
        let vm = render(
            style.vm_templates.choose(&mut rng).expect("non-empty templates"),
            &word,
            &format!("{:02}", rng.gen_range(1..=99)),
        );
        let disk_template = style.disk_templates.choose(&mut rng).expect("non-empty templates");
        let stem_word = style.words.choose(&mut rng).expect("non-empty word list").clone();

        let lognormal = LogNormal::new(template.intensity_log_mean, template.intensity_log_sigma)
            .map_err(|e| Error::config(format!("bad lognormal for {class}: {e}")))?;

        for j in 0..batch_size {
            let n = if batch_size > 1 {
                format!("{:02}", j + 1)
            } else {
                format!("{:02}", rng.gen_range(1..=99))
            };
            let mut disk_name = render(disk_template, &stem_word, &n);
            let mut project = project.clone();
            let mut vm = vm.clone();
            if rng.gen_bool(config.unknown_fraction) {
                project = hex_string(&mut rng, 12);
                vm = hex_string(&mut rng, 12);
                disk_name = uuid_string(&mut rng);
            }
            let intensity = lognormal.sample(&mut rng);
            let shape = draw_shape(&mut rng, &template.base_shape, config.noise_sigma);
            let spec = draw_spec(&mut rng, template, intensity);
            let arrival_time_s = rng.gen_range(0..config.arrival_horizon_s);
            drafts.push(DiskDraft {
                arrival_time_s,
                project,
                vm,
                disk_name,
                spec,
                label: class,
                intensity_kbps: intensity,
                shape,
            });
        }
    }
    drafts.truncate(config.n_disks);
    drafts.sort_by_key(|d| d.arrival_time_s); // stable: preserves draw order on ties

    let mut corpus = Corpus::default();
    let mut true_profiles = BTreeMap::new();
    for (id, draft) in drafts.into_iter().enumerate() {
        let disk_id = id as u64;
        let profile = draft.shape.scale(draft.intensity_kbps);
        let samples = expand_trace(&mut rng, &profile, config.days, config.within_slot_jitter);
        corpus.requests.push(ProvisioningRequest {
            request_id: disk_id,
            arrival_time_s: draft.arrival_time_s,
            project_name: draft.project,
            vm_name: draft.vm,
            disk_name: draft.disk_name,
            spec: draft.spec,
        });
        corpus.traces.insert(disk_id, DiskTrace::new(disk_id, samples)?);
        corpus.ground_truth.push(GroundTruthRecord {
            disk_id,
            label: draft.label,
            intensity_kbps: draft.intensity_kbps,
        });
        true_profiles.insert(disk_id, profile);
    }
    Ok(GeneratedCorpus { corpus, true_profiles })
}

/// Replaces the metadata of an exact seeded sample of requests with random
/// alphanumeric strings (length 12..=32). Traces and ground truth stay
/// untouched: the disks still behave like their class.
pub fn inject_noise(requests: &mut [ProvisioningRequest], ratio: f64, seed: u64) -> Result<usize> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::config(format!("noise ratio {ratio} outside [0,1]")));
    }
    let count = (ratio * requests.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, requests.len(), count);
    let alphabet: Vec<char> = ('a'..='z').chain('0'..='9').collect();
    let dist = Uniform::new(0, alphabet.len());
    let random_name = |rng: &mut ChaCha8Rng| -> String {
        let len = rng.gen_range(12..=32);
        (0..len).map(|_| alphabet[dist.sample(rng)]).collect()
    };
    let mut indices: Vec<usize> = chosen.into_iter().collect();
    indices.sort_unstable(); // mutate in index order for determinism
    for idx in &indices {
        let r = &mut requests[*idx];
        r.project_name = random_name(&mut rng);
        r.vm_name = random_name(&mut rng);
        r.disk_name = random_name(&mut rng);
    }
    Ok(count)
}
