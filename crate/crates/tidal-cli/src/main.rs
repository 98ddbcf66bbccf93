//! Operator entry point: corpus generation, artifact building, single-policy
//! simulation, multi-policy comparison, sweeps, and manifest replay.
//!
//! Every run resolves its flags into a manifest, executes it, and writes the
//! manifest next to the outputs; `tidal replay` reruns any saved manifest.
//!
//! Exit codes: 0 success, 2 configuration error, 3 missing input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use tidal_core::driver::{LabelSource, Manifest, SweepSpec};
use tidal_core::error::Error;
use tidal_core::generator::GeneratorConfig;
use tidal_core::placement::{Objective, PolicyConfig};
use tidal_core::sim::{PolicyKind, RunOptions, SimConfig, TidalEstimator};
use tidal_core::taxonomy::ApplicationClass;

#[derive(Parser)]
#[command(
    name = "tidal",
    about = "Phase-aware cloud virtual disk placement simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic workload corpus with ground truth.
    Generate(GenerateArgs),
    /// Build the profile library and intensity models from a corpus.
    Build(BuildArgs),
    /// Replay one policy over a corpus and emit its reports.
    Simulate(SimulateArgs),
    /// Run a policy list on identical inputs, optionally sweeping K or M.
    Compare(CompareArgs),
    /// Re-execute a saved manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output corpus directory.
    #[arg(long)]
    out: PathBuf,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of disks.
    #[arg(long)]
    disks: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of disks given opaque hex identifiers.
    #[arg(long)]
    unknown_fraction: Option<f64>,
    /// Std-dev of the per-slot shape perturbation.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Relative within-slot sample jitter (0 disables).
    #[arg(long)]
    jitter: Option<f64>,
    /// Trace length in whole days.
    #[arg(long)]
    days: Option<usize>,
    /// Arrival spread in seconds.
    #[arg(long)]
    arrival_horizon: Option<u64>,
    /// Post-generation metadata randomization ratio.
    #[arg(long)]
    noise_inject: Option<f64>,
    /// Seed for the injection pass (defaults to the corpus seed).
    #[arg(long)]
    noise_seed: Option<u64>,
}

#[derive(Args)]
struct BuildArgs {
    /// Corpus directory (from `tidal generate`).
    #[arg(long)]
    corpus: PathBuf,
    /// Output artifacts directory.
    #[arg(long)]
    out: PathBuf,
    /// Intra-day slot count K.
    #[arg(long, default_value_t = 12)]
    slots: usize,
    /// Label source: ground-truth or inferred.
    #[arg(long, default_value = "ground-truth")]
    labels: String,
    /// External lexicon file overriding the built-in one.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Corpus directory.
    #[arg(long)]
    corpus: PathBuf,
    /// Artifacts directory (from `tidal build`).
    #[arg(long)]
    artifacts: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Intra-day slot count K.
    #[arg(long, default_value_t = 12)]
    slots: usize,
    /// Spatial candidate set size M.
    #[arg(long, default_value_t = 4)]
    candidates: usize,
    /// Confidence threshold for the fallback path.
    #[arg(long, default_value_t = 0.6)]
    tau: f64,
    /// Prefix-cache match threshold.
    #[arg(long, default_value_t = 0.4)]
    lcp_threshold: f64,
    /// Weight of the intra-pod term in the spatial score.
    #[arg(long, default_value_t = 0.0)]
    spatial_weight: f64,
    /// Greedy objective: delta_var, abs_var, or peak.
    #[arg(long, default_value = "delta_var")]
    objective: String,
    /// Number of storage pods.
    #[arg(long, default_value_t = 16)]
    pods: usize,
    /// Bandwidth budget as a multiple of mean workload throughput.
    #[arg(long, default_value_t = 1.2)]
    budget_factor: f64,
    /// Simulation horizon in days.
    #[arg(long, default_value_t = 8)]
    horizon_days: u64,
    /// Monitoring window in seconds.
    #[arg(long, default_value_t = 86_400)]
    monitoring_window: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Disable the regex noise filter.
    #[arg(long)]
    no_filter: bool,
    /// File of extra `deny <regex>` / `allow <regex>` filter rules.
    #[arg(long)]
    filter_overrides: Option<PathBuf>,
    /// Intensity estimator for tidal: lookup, bucket, or noisy-oracle:SIGMA.
    #[arg(long, default_value = "lookup")]
    estimator: String,
    /// Let the oracle skip spatial candidate screening.
    #[arg(long)]
    oracle_no_screening: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Policy: rr, cbp, scda, tela, tidal, oracle, tidal-cap, tidal-int.
    #[arg(long)]
    policy: String,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated policy list.
    #[arg(long, default_value = "rr,cbp,scda,tela,tidal,oracle")]
    policies: String,
    /// Parameter sweep, e.g. K=2,4,6,12,24 or M=2..8.
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Saved manifest.json to re-execute.
    #[arg(long)]
    manifest: PathBuf,
    /// Optional replacement output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Optional-field mirror of `GeneratorConfig` for the TOML config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorConfigFile {
    n_disks: Option<usize>,
    class_mix: Option<Vec<(ApplicationClass, f64)>>,
    unknown_fraction: Option<f64>,
    noise_sigma: Option<f64>,
    within_slot_jitter: Option<f64>,
    arrival_horizon_s: Option<u64>,
    days: Option<usize>,
    seed: Option<u64>,
}

fn generator_config(args: &GenerateArgs) -> Result<GeneratorConfig, Error> {
    let mut config = GeneratorConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|_| Error::missing(format!("config file {}", path.display())))?;
        let file: GeneratorConfigFile = toml::from_str(&text)
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        if let Some(v) = file.n_disks {
            config.n_disks = v;
        }
        if let Some(v) = file.class_mix {
            config.class_mix = v;
        }
        if let Some(v) = file.unknown_fraction {
            config.unknown_fraction = v;
        }
        if let Some(v) = file.noise_sigma {
            config.noise_sigma = v;
        }
        if let Some(v) = file.within_slot_jitter {
            config.within_slot_jitter = v;
        }
        if let Some(v) = file.arrival_horizon_s {
            config.arrival_horizon_s = v;
        }
        if let Some(v) = file.days {
            config.days = v;
        }
        if let Some(v) = file.seed {
            config.seed = v;
        }
    }
    if let Some(v) = args.disks {
        config.n_disks = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.unknown_fraction {
        config.unknown_fraction = v;
    }
    if let Some(v) = args.noise_sigma {
        config.noise_sigma = v;
    }
    if let Some(v) = args.jitter {
        config.within_slot_jitter = v;
    }
    if let Some(v) = args.days {
        config.days = v;
    }
    if let Some(v) = args.arrival_horizon {
        config.arrival_horizon_s = v;
    }
    config.validate()?;
    Ok(config)
}

fn parse_estimator(s: &str) -> Result<TidalEstimator, Error> {
    match s {
        "lookup" => Ok(TidalEstimator::Lookup),
        "bucket" => Ok(TidalEstimator::Bucket),
        other => {
            if let Some(sigma) = other.strip_prefix("noisy-oracle:") {
                let sigma: f64 = sigma
                    .parse()
                    .map_err(|_| Error::config(format!("bad estimator sigma in '{other}'")))?;
                if sigma < 0.0 {
                    return Err(Error::config("estimator sigma must be non-negative"));
                }
                Ok(TidalEstimator::NoisyOracle(sigma))
            } else {
                Err(Error::config(format!(
                    "unknown estimator '{other}' (expected lookup, bucket, or noisy-oracle:SIGMA)"
                )))
            }
        }
    }
}

fn run_configs(args: &RunArgs) -> Result<(PolicyConfig, SimConfig, RunOptions), Error> {
    let policy_config = PolicyConfig {
        candidate_size: args.candidates,
        confidence_threshold: args.tau,
        spatial_weight: args.spatial_weight,
        lcp_threshold: args.lcp_threshold,
        objective: Objective::parse(&args.objective)?,
        k: args.slots,
        oracle_screening: !args.oracle_no_screening,
    };
    if !(0.0..=1.0).contains(&args.tau)
        || !(0.0..=1.0).contains(&args.lcp_threshold)
        || !(0.0..=1.0).contains(&args.spatial_weight)
    {
        return Err(Error::config("tau, lcp-threshold and spatial-weight must lie in [0,1]"));
    }
    if args.candidates == 0 {
        return Err(Error::config("candidate set size must be at least 1"));
    }
    let sim_config = SimConfig {
        n_pods: args.pods,
        k: args.slots,
        budget_factor: args.budget_factor,
        monitoring_window_s: args.monitoring_window,
        horizon_s: args.horizon_days * 86_400,
        seed: args.seed,
        ..SimConfig::default()
    };
    sim_config.validate()?;
    let options = RunOptions {
        filter_enabled: !args.no_filter,
        tidal_estimator: parse_estimator(&args.estimator)?,
        filter_overrides: args.filter_overrides.clone(),
    };
    Ok((policy_config, sim_config, options))
}

fn build_manifest(cli: &Command) -> Result<Manifest, Error> {
    match cli {
        Command::Generate(args) => {
            let config = generator_config(args)?;
            let noise_inject = match args.noise_inject {
                None => None,
                Some(ratio) => {
                    if !(0.0..=1.0).contains(&ratio) {
                        return Err(Error::config("noise-inject ratio must lie in [0,1]"));
                    }
                    Some((ratio, args.noise_seed.unwrap_or(config.seed)))
                }
            };
            Ok(Manifest::Generate { out_dir: args.out.clone(), config, noise_inject })
        }
        Command::Build(args) => Ok(Manifest::Build {
            corpus_dir: args.corpus.clone(),
            out_dir: args.out.clone(),
            k: args.slots,
            label_source: LabelSource::parse(&args.labels)?,
            lexicon: args.lexicon.clone(),
        }),
        Command::Simulate(args) => {
            let (policy_config, sim_config, options) = run_configs(&args.run)?;
            Ok(Manifest::Simulate {
                corpus_dir: args.run.corpus.clone(),
                artifacts_dir: args.run.artifacts.clone(),
                out_dir: args.run.out.clone(),
                policy: PolicyKind::parse(&args.policy)?,
                policy_config,
                sim_config,
                options,
            })
        }
        Command::Compare(args) => {
            let (policy_config, sim_config, options) = run_configs(&args.run)?;
            let policies = args
                .policies
                .split(',')
                .map(|p| PolicyKind::parse(p.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            if policies.is_empty() {
                return Err(Error::config("policy list is empty"));
            }
            let sweep = args.sweep.as_deref().map(SweepSpec::parse).transpose()?;
            Ok(Manifest::Compare {
                corpus_dir: args.run.corpus.clone(),
                artifacts_dir: args.run.artifacts.clone(),
                out_dir: args.run.out.clone(),
                policies,
                policy_config,
                sim_config,
                options,
                sweep,
            })
        }
        Command::Replay(args) => {
            let manifest = Manifest::read(&args.manifest)?;
            Ok(match &args.out {
                Some(dir) => manifest.with_out_dir(dir.clone()),
                None => manifest,
            })
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Data(_) => 2,
        Error::MissingInput(_) | Error::Format { .. } | Error::Io(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let manifest = match build_manifest(&cli.command) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    match tidal_core::driver::execute(&manifest) {
        Ok(reports) => {
            for r in &reports {
                println!(
                    "{}: otf {:.5}, episodes {}, p95 {} s, spatial {:.4}, temporal {:.4}",
                    r.policy,
                    r.otf_final,
                    r.episodes.len(),
                    r.p95_episode_s,
                    r.spatial_imbalance,
                    r.temporal_imbalance_mean
                );
            }
            println!("outputs written to {}", manifest.out_dir().display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
