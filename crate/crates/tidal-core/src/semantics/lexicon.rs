//! Weighted-keyword classifier over metadata tokens.
//!
//! Tokens come from splitting the project, VM, and disk names on
//! `-_./ ` and camelCase boundaries, lowercased. Each class scores the
//! sum of its matched token weights; the winner's confidence is
//! `top / (top + second + 1)`, so a single weak match stays low-confidence
//! and no match at all yields `(Unknown, 0)`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::taxonomy::ApplicationClass;

use super::{SemanticResult, SemanticSource};

/// Splits one identifier into lowercase tokens.
pub fn tokenize(name: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut prev_lower = false;
    for ch in name.chars() {
        if matches!(ch, '-' | '_' | '.' | '/' | ' ') {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            prev_lower = false;
            continue;
        }
        if ch.is_uppercase() && prev_lower && !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        prev_lower = ch.is_lowercase();
        current.extend(ch.to_lowercase());
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Tokenizes a whole metadata tuple.
pub fn tokenize_metadata(project: &str, vm: &str, disk: &str) -> Vec<String> {
    let mut t = tokenize(project);
    t.extend(tokenize(vm));
    t.extend(tokenize(disk));
    t
}

/// Per-class weighted token lists.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: BTreeMap<ApplicationClass, Vec<(String, f64)>>,
    index: HashMap<String, Vec<(ApplicationClass, f64)>>,
}

impl Lexicon {
    pub fn new(entries: BTreeMap<ApplicationClass, Vec<(String, f64)>>) -> Result<Self> {
        if entries.contains_key(&ApplicationClass::Unknown) {
            return Err(Error::config("the lexicon must not assign tokens to unknown"));
        }
        for class in ApplicationClass::semantic() {
            if entries.get(&class).is_none_or(|t| t.is_empty()) {
                return Err(Error::config(format!("lexicon has no tokens for class {class}")));
            }
        }
        let mut index: HashMap<String, Vec<(ApplicationClass, f64)>> = HashMap::new();
        for (class, tokens) in &entries {
            for (token, weight) in tokens {
                if token.is_empty() || *weight <= 0.0 {
                    return Err(Error::config(format!(
                        "bad lexicon entry '{token}:{weight}' for class {class}"
                    )));
                }
                index.entry(token.to_lowercase()).or_default().push((*class, *weight));
            }
        }
        Ok(Lexicon { entries, index })
    }

    /// All distinct tokens, for sharing with the noise filter's dictionary.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(|s| s.as_str())
    }

    fn match_token<'a>(&'a self, token: &str) -> Option<&'a [(ApplicationClass, f64)]> {
        if let Some(hits) = self.index.get(token) {
            return Some(hits);
        }
        // tolerate fused numeric suffixes: mysql01 matches mysql
        let stripped = token.trim_end_matches(|c: char| c.is_ascii_digit());
        if stripped.len() != token.len() && !stripped.is_empty() {
            return self.index.get(stripped).map(|v| v.as_slice());
        }
        None
    }

    /// Scores every class against the metadata tokens.
    pub fn classify(&self, project: &str, vm: &str, disk: &str) -> SemanticResult {
        let mut scores: BTreeMap<ApplicationClass, f64> = BTreeMap::new();
        for token in tokenize_metadata(project, vm, disk) {
            if let Some(hits) = self.match_token(&token) {
                for (class, weight) in hits {
                    *scores.entry(*class).or_insert(0.0) += weight;
                }
            }
        }
        let mut top: Option<(ApplicationClass, f64)> = None;
        let mut second = 0.0;
        for class in ApplicationClass::semantic() {
            let Some(&score) = scores.get(&class) else { continue };
            match top {
                None => top = Some((class, score)),
                Some((_, best)) if score > best => {
                    // taxonomy order already visited the previous leader first
                    second = best;
                    top = Some((class, score));
                }
                Some(_) => second = second.max(score),
            }
        }
        match top {
            None => SemanticResult {
                label: ApplicationClass::Unknown,
                confidence: 0.0,
                source: SemanticSource::Classifier,
            },
            Some((label, score)) => SemanticResult {
                label,
                confidence: score / (score + second + 1.0),
                source: SemanticSource::Classifier,
            },
        }
    }

    /// Writes the `label: token:weight ...` text format.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (class, tokens) in &self.entries {
            write!(w, "{}:", class.label())?;
            for (token, weight) in tokens {
                write!(w, " {token}:{weight}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_text(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|_| Error::missing(format!("lexicon file {}", path.display())))?;
        let mut entries: BTreeMap<ApplicationClass, Vec<(String, f64)>> = BTreeMap::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| {
                Error::format(path.display().to_string(), format!("line {}: {msg}", n + 1))
            };
            let (label, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected 'label: token:weight ...'".into()))?;
            let class = ApplicationClass::parse(label.trim()).map_err(|e| err(e.to_string()))?;
            let bucket = entries.entry(class).or_default();
            for pair in rest.split_whitespace() {
                let (token, weight) = pair
                    .split_once(':')
                    .ok_or_else(|| err(format!("bad token:weight pair '{pair}'")))?;
                let weight: f64 =
                    weight.parse().map_err(|_| err(format!("bad weight in '{pair}'")))?;
                bucket.push((token.to_lowercase(), weight));
            }
        }
        Lexicon::new(entries)
    }

    /// The built-in lexicon covering all 27 semantic classes.
    pub fn default_lexicon() -> Self {
        use ApplicationClass::*;
        let spec: &[(ApplicationClass, &[(&str, f64)])] = &[
            (InfraNode, &[
                ("kube", 3.0), ("kubernetes", 3.0), ("k8s", 3.0), ("nodepool", 3.0),
                ("minion", 3.0), ("worker", 2.0), ("cluster", 2.0), ("agent", 1.0),
            ]),
            (Database, &[
                ("mysql", 3.0), ("postgres", 3.0), ("postgresql", 3.0), ("mariadb", 3.0),
                ("mongo", 3.0), ("mongodb", 3.0), ("database", 3.0), ("innodb", 3.0),
                ("tidb", 3.0), ("clickhouse", 3.0), ("db", 2.0), ("sql", 2.0), ("rds", 2.0),
            ]),
            (Gaming, &[
                ("game", 3.0), ("gaming", 3.0), ("mmo", 3.0), ("moba", 3.0),
                ("matchmaking", 3.0), ("pvp", 3.0), ("dungeon", 3.0), ("arena", 2.0),
                ("realm", 2.0), ("guild", 2.0), ("lobby", 2.0), ("quest", 2.0),
                ("dragon", 1.0),
            ]),
            (InfraMessageQueue, &[
                ("kafka", 3.0), ("rabbitmq", 3.0), ("amqp", 3.0), ("pulsar", 3.0),
                ("nats", 3.0), ("mq", 3.0), ("rabbit", 2.0), ("queue", 2.0),
                ("broker", 2.0), ("celery", 2.0),
            ]),
            (DevTestEnv, &[
                ("devtest", 3.0), ("uat", 3.0), ("testbed", 3.0), ("sandbox", 2.0),
                ("staging", 2.0), ("qa", 2.0), ("jenkins", 2.0), ("demo", 1.0),
            ]),
            (MediaStreaming, &[
                ("stream", 3.0), ("streaming", 3.0), ("video", 3.0), ("vod", 3.0),
                ("transcode", 3.0), ("hls", 3.0), ("playback", 3.0), ("cdn", 2.0),
                ("media", 2.0), ("encoder", 2.0),
            ]),
            (ComputeSimulation, &[
                ("hpc", 3.0), ("render", 3.0), ("renderfarm", 3.0), ("simulation", 3.0),
                ("solver", 3.0), ("mpi", 3.0), ("fem", 3.0), ("sim", 2.0),
                ("batch", 2.0), ("compute", 2.0),
            ]),
            (InfraLogging, &[
                ("logging", 3.0), ("logstash", 3.0), ("elk", 3.0), ("kibana", 3.0),
                ("grafana", 3.0), ("prometheus", 3.0), ("monitoring", 3.0),
                ("telemetry", 3.0), ("log", 2.0), ("metrics", 2.0), ("monitor", 2.0),
                ("audit", 2.0),
            ]),
            (DataCollection, &[
                ("collector", 3.0), ("ingest", 3.0), ("ingestion", 3.0), ("etl", 3.0),
                ("crawler", 3.0), ("scraper", 3.0), ("flume", 3.0), ("sqoop", 3.0),
                ("spider", 2.0), ("harvest", 2.0),
            ]),
            (OfficeSystem, &[
                ("office", 3.0), ("oa", 3.0), ("erp", 3.0), ("crm", 3.0),
                ("payroll", 3.0), ("intranet", 3.0), ("sharepoint", 3.0),
                ("workflow", 2.0), ("hr", 2.0), ("mail", 2.0), ("email", 2.0),
                ("exchange", 2.0),
            ]),
            (GenericAutoscaling, &[
                ("autoscale", 3.0), ("autoscaling", 3.0), ("asg", 3.0),
                ("scaleset", 3.0), ("spot", 2.0), ("ondemand", 2.0),
            ]),
            (InfraCoordination, &[
                ("zookeeper", 3.0), ("etcd", 3.0), ("consul", 3.0), ("zk", 3.0),
                ("coordination", 3.0), ("raft", 2.0), ("quorum", 2.0),
            ]),
            (AiMl, &[
                ("ml", 3.0), ("inference", 3.0), ("pytorch", 3.0), ("tensorflow", 3.0),
                ("llm", 3.0), ("embedding", 3.0), ("bert", 3.0), ("ai", 2.0),
                ("training", 2.0), ("model", 2.0), ("gpu", 2.0),
            ]),
            (IotSaasPlatform, &[
                ("iot", 3.0), ("mqtt", 3.0), ("sensor", 2.0), ("saas", 2.0),
                ("device", 1.0), ("edge", 1.0), ("gateway", 1.0),
            ]),
            (CorpWebsite, &[
                ("website", 3.0), ("homepage", 3.0), ("wordpress", 3.0), ("web", 2.0),
                ("portal", 2.0), ("corporate", 2.0), ("site", 2.0), ("nginx", 1.0),
            ]),
            (Education, &[
                ("edu", 3.0), ("education", 3.0), ("mooc", 3.0), ("lms", 3.0),
                ("classroom", 3.0), ("school", 2.0), ("campus", 2.0), ("course", 2.0),
                ("exam", 2.0),
            ]),
            (FinancePayment, &[
                ("payment", 3.0), ("fintech", 3.0), ("banking", 3.0), ("billing", 3.0),
                ("wallet", 3.0), ("pay", 2.0), ("bank", 2.0), ("ledger", 2.0),
                ("invoice", 2.0), ("settlement", 2.0), ("trade", 2.0),
            ]),
            (InfraJumpbox, &[
                ("jumpbox", 3.0), ("bastion", 3.0), ("jump", 2.0), ("ssh", 2.0),
                ("fortress", 2.0), ("vpn", 2.0),
            ]),
            (MediaNews, &[
                ("news", 3.0), ("editorial", 3.0), ("journalism", 3.0), ("headline", 3.0),
                ("press", 2.0), ("article", 2.0), ("cms", 2.0),
            ]),
            (InfraCache, &[
                ("redis", 3.0), ("memcached", 3.0), ("memcache", 3.0), ("cache", 3.0),
                ("varnish", 3.0), ("caching", 3.0),
            ]),
            (EcommerceRetail, &[
                ("shop", 3.0), ("shopping", 3.0), ("ecommerce", 3.0), ("retail", 3.0),
                ("cart", 3.0), ("checkout", 3.0), ("store", 2.0), ("mall", 2.0),
                ("coupon", 2.0), ("sku", 2.0),
            ]),
            (Community, &[
                ("forum", 3.0), ("community", 3.0), ("bbs", 3.0), ("social", 2.0),
                ("chat", 2.0), ("comment", 2.0), ("feed", 1.0),
            ]),
            (Travel, &[
                ("travel", 3.0), ("hotel", 3.0), ("booking", 3.0), ("flight", 3.0),
                ("itinerary", 3.0), ("airline", 3.0), ("tour", 2.0),
            ]),
            (GovPublicService, &[
                ("gov", 3.0), ("government", 3.0), ("civic", 3.0), ("municipal", 3.0),
                ("citizen", 2.0), ("tax", 2.0), ("public", 1.0),
            ]),
            (LogisticsMobility, &[
                ("logistics", 3.0), ("fleet", 3.0), ("freight", 3.0), ("shipping", 2.0),
                ("warehouse", 2.0), ("transit", 2.0), ("dispatch", 2.0), ("ride", 2.0),
            ]),
            (Delivery, &[
                ("delivery", 3.0), ("courier", 3.0), ("takeout", 3.0), ("parcel", 3.0),
                ("deliver", 2.0), ("rider", 2.0),
            ]),
            (InfraCloudFunction, &[
                ("faas", 3.0), ("lambda", 3.0), ("serverless", 3.0), ("cloudfunction", 3.0),
                ("function", 2.0), ("func", 2.0),
            ]),
        ];
        let entries = spec
            .iter()
            .map(|(class, tokens)| {
                (*class, tokens.iter().map(|(t, w)| (t.to_string(), *w)).collect())
            })
            .collect();
        Lexicon::new(entries).expect("built-in lexicon is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn tokenizer_splits_separators_and_camel_case() {
        assert_eq!(tokenize("mysql-prod-01"), vec!["mysql", "prod", "01"]);
        assert_eq!(tokenize("dbData02"), vec!["db", "data02"]);
        assert_eq!(tokenize("a_b.c/d e"), vec!["a", "b", "c", "d", "e"]);
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn single_strong_token_scores_point75() {
        let lex = Lexicon::default_lexicon();
        let r = lex.classify("", "", "mysql-prod-01");
        assert_eq!(r.label, ApplicationClass::Database);
        // weight 3 alone: 3 / (3 + 0 + 1)
        assert_abs_diff_eq!(r.confidence, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn no_match_is_unknown_with_zero_confidence() {
        let lex = Lexicon::default_lexicon();
        let r = lex.classify("123", "456", "789");
        assert_eq!(r.label, ApplicationClass::Unknown);
        assert_eq!(r.confidence, 0.0);
    }

    #[test]
    fn ties_break_by_taxonomy_order() {
        use ApplicationClass::*;
        let mut entries: BTreeMap<ApplicationClass, Vec<(String, f64)>> = ApplicationClass::semantic()
            .map(|c| (c, vec![(format!("tok{}", c.taxonomy_rank()), 1.0)]))
            .collect();
        entries.get_mut(&Database).unwrap().push(("shared".into(), 2.0));
        entries.get_mut(&Gaming).unwrap().push(("shared".into(), 2.0));
        let lex = Lexicon::new(entries).unwrap();
        let r = lex.classify("", "", "shared");
        // Database precedes Gaming in the taxonomy
        assert_eq!(r.label, Database);
        assert_abs_diff_eq!(r.confidence, 2.0 / 5.0, epsilon = 1e-12);
    }

    #[test]
    fn numeric_suffix_tokens_still_match() {
        let lex = Lexicon::default_lexicon();
        let r = lex.classify("", "", "mysql01");
        assert_eq!(r.label, ApplicationClass::Database);
    }

    #[test]
    fn text_round_trip() {
        let lex = Lexicon::default_lexicon();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lexicon.txt");
        lex.write_text(&path).unwrap();
        let loaded = Lexicon::read_text(&path).unwrap();
        let r1 = lex.classify("shop", "backend", "mysql-prod-01");
        let r2 = loaded.classify("shop", "backend", "mysql-prod-01");
        assert_eq!(r1, r2);
    }

    #[test]
    fn lexicon_requires_full_class_coverage() {
        let entries: BTreeMap<ApplicationClass, Vec<(String, f64)>> =
            [(ApplicationClass::Database, vec![("mysql".to_string(), 3.0)])].into();
        assert!(Lexicon::new(entries).is_err());
    }

    proptest! {
        #[test]
        fn confidence_always_in_unit_interval(p in "[a-z0-9-]{0,20}", v in "[a-z0-9-]{0,20}", d in "[a-z0-9-]{0,20}") {
            let lex = Lexicon::default_lexicon();
            let r = lex.classify(&p, &v, &d);
            prop_assert!((0.0..=1.0).contains(&r.confidence));
        }
    }

    #[test]
    fn confidence_monotone_in_top_score() {
        // holding second fixed, a larger top score gives larger confidence
        let conf = |top: f64, second: f64| top / (top + second + 1.0);
        let mut prev = 0.0;
        for i in 1..20 {
            let c = conf(i as f64, 2.0);
            assert!(c > prev);
            prev = c;
        }
    }
}
