//! Online semantic inference over provisioning metadata.
//!
//! Request order through the pipeline is fixed: regex filter, then prefix
//! cache, then classifier (whose result is cached). Filtered requests never
//! touch the cache or classifier and always come back `(Unknown, 0)`.

mod cache;
mod filter;
mod lexicon;

pub use cache::{lcp_ratio, CacheEntry, PrefixCache, DEFAULT_CACHE_CAPACITY};
pub use filter::FilterRules;
pub use lexicon::{tokenize_metadata, Lexicon};

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use crate::error::{Error, Result};
use crate::taxonomy::ApplicationClass;

/// Where a semantic result came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticSource {
    CacheHit,
    Classifier,
    Filtered,
}

/// An application label with its confidence score.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SemanticResult {
    pub label: ApplicationClass,
    pub confidence: f64,
    pub source: SemanticSource,
}

impl SemanticResult {
    pub fn filtered() -> Self {
        SemanticResult {
            label: ApplicationClass::Unknown,
            confidence: 0.0,
            source: SemanticSource::Filtered,
        }
    }
}

/// Anything that maps a metadata tuple to `(label, confidence)`.
pub trait Classifier {
    fn classify(&mut self, project: &str, vm: &str, disk: &str) -> Result<SemanticResult>;
}

impl Classifier for Lexicon {
    fn classify(&mut self, project: &str, vm: &str, disk: &str) -> Result<SemanticResult> {
        Ok(Lexicon::classify(self, project, vm, disk))
    }
}

/// Process-boundary adapter for external classifiers.
///
/// The child reads one tab-separated `project\tvm\tdisk` line per request
/// on stdin and must answer with one `label confidence` line on stdout.
pub struct ExternalClassifier {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalClassifier {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::config(format!("cannot spawn classifier '{program}': {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalClassifier { child, stdin, stdout })
    }
}

impl Drop for ExternalClassifier {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Classifier for ExternalClassifier {
    fn classify(&mut self, project: &str, vm: &str, disk: &str) -> Result<SemanticResult> {
        let clean = |s: &str| s.replace(['\t', '\n'], " ");
        writeln!(self.stdin, "{}\t{}\t{}", clean(project), clean(vm), clean(disk))?;
        self.stdin.flush()?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(Error::data("external classifier closed its stdout"));
        }
        let mut parts = line.split_whitespace();
        let label = parts
            .next()
            .map(ApplicationClass::parse)
            .transpose()?
            .ok_or_else(|| Error::data("external classifier returned an empty line"))?;
        let confidence: f64 = parts
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Error::data("external classifier returned no confidence"))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::data(format!("confidence {confidence} outside [0,1]")));
        }
        Ok(SemanticResult { label, confidence, source: SemanticSource::Classifier })
    }
}

/// Running counters over a pipeline's lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct PipelineStats {
    pub filtered: u64,
    pub cache_hits: u64,
    pub classified: u64,
}

/// Filter -> prefix cache -> classifier, with LRU insertion of fresh results.
///
/// Single-writer: the simulator drives one request at a time.
pub struct SemanticPipeline<C: Classifier = Lexicon> {
    filter: FilterRules,
    filter_enabled: bool,
    cache: PrefixCache,
    classifier: C,
    lcp_threshold: f64,
    stats: PipelineStats,
}

impl SemanticPipeline<Lexicon> {
    /// Default pipeline: built-in filter rules and lexicon.
    pub fn with_default_lexicon() -> Self {
        SemanticPipeline::with_lexicon(
            Lexicon::default_lexicon(),
            FilterRules::builtin(),
            DEFAULT_CACHE_CAPACITY,
            0.4,
        )
    }

    /// Lexicon-backed pipeline; the lexicon's tokens join the filter's
    /// dictionary so rule (c) never fires on a classifiable word.
    pub fn with_lexicon(
        lexicon: Lexicon,
        mut filter: FilterRules,
        cache_capacity: usize,
        lcp_threshold: f64,
    ) -> Self {
        filter.absorb_lexicon(&lexicon);
        SemanticPipeline::new(lexicon, filter, cache_capacity, lcp_threshold)
    }
}

impl<C: Classifier> SemanticPipeline<C> {
    pub fn new(classifier: C, filter: FilterRules, cache_capacity: usize, lcp_threshold: f64) -> Self {
        SemanticPipeline {
            filter,
            filter_enabled: true,
            cache: PrefixCache::new(cache_capacity),
            classifier,
            lcp_threshold,
            stats: PipelineStats::default(),
        }
    }

    pub fn set_filter_enabled(&mut self, enabled: bool) {
        self.filter_enabled = enabled;
    }

    pub fn stats(&self) -> PipelineStats {
        self.stats
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// Runs the full pipeline for one metadata tuple.
    pub fn infer(&mut self, project: &str, vm: &str, disk: &str) -> Result<SemanticResult> {
        if self.filter_enabled && self.filter.is_low_information(project, vm, disk) {
            self.stats.filtered += 1;
            return Ok(SemanticResult::filtered());
        }
        if let Some(hit) = self.cache.lookup(project, vm, disk, self.lcp_threshold) {
            self.stats.cache_hits += 1;
            return Ok(hit);
        }
        let result = self.classifier.classify(project, vm, disk)?;
        self.cache.insert(project, vm, disk, result.clone());
        self.stats.classified += 1;
        Ok(result)
    }
}
