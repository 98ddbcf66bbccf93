//! Regex-based interception of low-information metadata.
//!
//! The filter rejects only clear noise: UUID/hex identifiers, long mixed
//! alphanumeric tokens with frequent digit/letter alternation, unnatural
//! consonant runs, and default or empty names. Preserved infrastructure
//! keywords (database, cache, messaging, orchestration, monitoring terms)
//! always pass through, as does anything containing dictionary words, so
//! names like `mysql-prod-01` or `kafka-cache-node` reach the classifier.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

use super::lexicon::{tokenize, Lexicon};

static UUID_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}$")
        .unwrap()
});

/// Database / cache / messaging / orchestration / monitoring keywords that
/// must never be filtered.
const PRESERVE: &[&str] = &[
    // database
    "mysql", "postgres", "postgresql", "mariadb", "mongo", "mongodb", "sql", "db", "database",
    "tidb", "clickhouse", "rds", "innodb",
    // cache
    "redis", "memcached", "memcache", "cache", "varnish", "caching",
    // messaging
    "kafka", "rabbitmq", "rabbit", "amqp", "pulsar", "nats", "mq", "queue", "broker",
    // orchestration
    "kube", "kubernetes", "k8s", "zookeeper", "etcd", "consul", "nomad", "mesos", "zk",
    // monitoring
    "prometheus", "grafana", "kibana", "logstash", "elk", "monitor", "monitoring", "nagios",
    "zabbix", "telemetry",
];

/// Generic filler that is neither semantic evidence nor noise evidence.
const BOILERPLATE: &[&str] = &[
    "node", "srv", "server", "host", "vm", "disk", "vol", "volume", "proj", "project",
    "instance", "main", "prod", "dev", "test", "stg", "stage", "new", "old", "my", "the",
    "svc", "service", "app", "data", "box", "env", "primary", "secondary", "replica",
];

/// Default or degenerate names rejected outright when nothing else remains.
const DEFAULT_NAMES: &[&str] = &[
    "unnamed", "default", "noname", "untitled", "null", "none", "tmp", "temp", "auto",
    "sysdisk", "sysvol", "osdisk",
];

/// Common words protecting consonant-heavy real names from the run rule.
/// Lexicon tokens are merged in by the pipeline.
const BUILTIN_WORDS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "omega", "sigma", "north", "south", "east", "west",
    "blue", "red", "green", "amber", "silver", "golden", "iron", "stone", "river", "lake",
    "cloud", "sky", "storm", "thunder", "lightning", "ember", "frost", "shadow", "light",
    "prime", "apex", "nova", "lunar", "solar", "echo", "orbit", "comet", "astro", "atlas",
    "falcon", "eagle", "tiger", "panda", "otter", "lynx", "raven", "wolf", "bear", "fox",
    "maple", "cedar", "willow", "aspen", "birch", "harbor", "summit", "valley", "meadow",
    "bright", "swift", "strong", "lengths", "strength", "nights", "knights", "depths",
];

/// Longest run of consonants, with `y` counted as a vowel.
fn max_consonant_run(token: &str) -> usize {
    let mut best = 0;
    let mut run = 0;
    for ch in token.chars() {
        if ch.is_ascii_alphabetic() && !matches!(ch, 'a' | 'e' | 'i' | 'o' | 'u' | 'y') {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Number of letter<->digit transitions within a token.
fn alternations(token: &str) -> usize {
    let mut count = 0;
    let mut prev_digit: Option<bool> = None;
    for ch in token.chars() {
        let is_digit = ch.is_ascii_digit();
        if let Some(p) = prev_digit {
            if p != is_digit {
                count += 1;
            }
        }
        prev_digit = Some(is_digit);
    }
    count
}

fn longest_hex_run(stripped: &str) -> usize {
    let mut best = 0;
    let mut run = 0;
    for ch in stripped.chars() {
        if ch.is_ascii_hexdigit() {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Compiled filter rule set.
pub struct FilterRules {
    preserve: HashSet<String>,
    dictionary: HashSet<String>,
    boilerplate: HashSet<String>,
    default_names: HashSet<String>,
    extra_deny: Vec<Regex>,
    extra_allow: Vec<Regex>,
}

impl FilterRules {
    /// The compiled-in rule set.
    pub fn builtin() -> Self {
        let set = |words: &[&str]| words.iter().map(|w| w.to_string()).collect();
        FilterRules {
            preserve: set(PRESERVE),
            dictionary: set(BUILTIN_WORDS),
            boilerplate: set(BOILERPLATE),
            default_names: set(DEFAULT_NAMES),
            extra_deny: Vec::new(),
            extra_allow: Vec::new(),
        }
    }

    /// Merges a lexicon's tokens into the dictionary so rule (c) never
    /// fires on a classifiable word.
    pub fn absorb_lexicon(&mut self, lexicon: &Lexicon) {
        for t in lexicon.tokens() {
            self.dictionary.insert(t.to_string());
        }
    }

    /// Loads `deny <regex>` / `allow <regex>` override lines on top of the
    /// built-in rules.
    pub fn with_overrides(path: &Path) -> Result<Self> {
        let mut rules = FilterRules::builtin();
        let file = File::open(path)
            .map_err(|_| Error::missing(format!("filter override file {}", path.display())))?;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| {
                Error::format(path.display().to_string(), format!("line {}: {msg}", n + 1))
            };
            let compile = |pat: &str| Regex::new(pat).map_err(|e| err(e.to_string()));
            if let Some(pat) = line.strip_prefix("deny ") {
                rules.extra_deny.push(compile(pat.trim())?);
            } else if let Some(pat) = line.strip_prefix("allow ") {
                rules.extra_allow.push(compile(pat.trim())?);
            } else {
                return Err(err("expected 'deny <regex>' or 'allow <regex>'".into()));
            }
        }
        Ok(rules)
    }

    fn is_preserved(&self, token: &str) -> bool {
        if self.preserve.contains(token) {
            return true;
        }
        // long keywords also match fused forms like "mysqldata"
        self.preserve
            .iter()
            .any(|k| k.len() >= 4 && token.contains(k.as_str()))
    }

    fn known_word(&self, token: &str) -> bool {
        self.dictionary.contains(token) || self.boilerplate.contains(token)
    }

    /// True when the metadata tuple carries no recoverable semantics and
    /// should bypass the classifier entirely.
    pub fn is_low_information(&self, project: &str, vm: &str, disk: &str) -> bool {
        let fields = [project, vm, disk];
        let lower: Vec<String> = fields.iter().map(|f| f.to_lowercase()).collect();

        for field in &lower {
            if self.extra_allow.iter().any(|re| re.is_match(field)) {
                return false;
            }
        }

        let field_tokens: Vec<Vec<String>> = lower.iter().map(|f| tokenize(f)).collect();

        // preservation dominates every noise rule
        for tokens in &field_tokens {
            for t in tokens {
                if self.is_preserved(t) {
                    return false;
                }
            }
        }

        for field in &lower {
            if self.extra_deny.iter().any(|re| re.is_match(field)) {
                return true;
            }
        }

        let mut evidence = false;
        let mut semantic = false;
        let mut substantive = false;

        for (field, tokens) in lower.iter().zip(&field_tokens) {
            if UUID_RE.is_match(field.trim()) {
                evidence = true;
            }
            let stripped: String =
                field.chars().filter(|c| !matches!(c, '-' | '_' | '.' | '/' | ' ')).collect();
            if longest_hex_run(&stripped) >= 16 {
                evidence = true;
            }
            for t in tokens {
                let numeric = t.chars().all(|c| c.is_ascii_digit());
                if numeric {
                    continue;
                }
                if self.dictionary.contains(t) {
                    semantic = true;
                    substantive = true;
                    continue;
                }
                if self.boilerplate.contains(t) || self.default_names.contains(t) || t.len() <= 2 {
                    continue;
                }
                substantive = true;
                let mixed = t.chars().any(|c| c.is_ascii_digit())
                    && t.chars().any(|c| c.is_ascii_alphabetic());
                if t.chars().count() >= 12 && mixed && alternations(t) >= 4 {
                    evidence = true;
                }
                if max_consonant_run(t) >= 5 && !self.known_word(t) {
                    evidence = true;
                }
            }
        }

        if !substantive {
            return true; // empty or default/boilerplate-only names
        }
        if semantic {
            return false; // recognizable words: let the classifier judge
        }
        evidence
    }
}
