//! Pipeline configuration: a flat `key = value` file.
//!
//! ```text
//! # inputs, relative to this file
//! corpus.violations = violations.jsonl
//! corpus.projects = projects
//! corpus.categories = categories.txt
//! output = out
//!
//! embed.dim = 32
//! cnn.conv = 3x16,2x16
//! filter.max_tokens = 40
//! match.top_k = 10
//! ```
//!
//! Every key is optional except `corpus.violations` and `corpus.projects`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use viopat::features::{ConvSpec, Objective};
use viopat::patterns::{FilterConfig, MiningParams};
use viopat::tracker::TrackConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("`{key}`: invalid value `{value}`")]
    Value { key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub violations: PathBuf,
    pub projects: PathBuf,
    pub categories: Option<PathBuf>,
    pub output: PathBuf,
    pub mining: MiningParams,
    pub track: TrackConfig,
    pub filter: FilterConfig,
    pub top_k: usize,
    pub cross_type: bool,
    /// Effective value of every key, defaults included.
    entries: BTreeMap<String, String>,
}

const KEYS: &[&str] = &[
    "corpus.violations",
    "corpus.projects",
    "corpus.categories",
    "output",
    "embed.dim",
    "embed.window",
    "embed.min_freq",
    "embed.epochs",
    "embed.negatives",
    "embed.learning_rate",
    "embed.seed",
    "cnn.conv",
    "cnn.pool",
    "cnn.hidden_nodes",
    "cnn.learning_rate",
    "cnn.leaky_slope",
    "cnn.epochs",
    "cnn.seed",
    "cnn.objective",
    "cnn.full_batch",
    "xmeans.use_kd_tree",
    "xmeans.max_iterations",
    "xmeans.max_kmeans",
    "xmeans.max_kmeans_children",
    "xmeans.seed",
    "xmeans.max_clusters",
    "xmeans.min_clusters",
    "xmeans.per_type",
    "track.max_offset",
    "track.hash_window",
    "filter.max_tokens",
    "filter.locality",
    "match.top_k",
    "match.cross_type",
];

fn parse_lines(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line: i + 1,
                key: key.into(),
            });
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::Duplicate {
                line: i + 1,
                key: key.into(),
            });
        }
    }
    Ok(out)
}

struct Reader<'a> {
    raw: &'a BTreeMap<String, String>,
    entries: BTreeMap<String, String>,
}

impl Reader<'_> {
    fn get<T: FromStr + ToString>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        let value = match self.raw.get(key) {
            Some(v) => v.parse().map_err(|_| ConfigError::Value {
                key: key.into(),
                value: v.clone(),
            })?,
            None => default,
        };
        self.entries.insert(key.into(), value.to_string());
        Ok(value)
    }

    fn get_with<T>(
        &mut self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Option<T>,
        show: impl Fn(&T) -> String,
    ) -> Result<T, ConfigError> {
        let value = match self.raw.get(key) {
            Some(v) => parse(v).ok_or_else(|| ConfigError::Value {
                key: key.into(),
                value: v.clone(),
            })?,
            None => default,
        };
        self.entries.insert(key.into(), show(&value));
        Ok(value)
    }
}

fn parse_conv(text: &str) -> Option<Vec<ConvSpec>> {
    text.split(',')
        .map(|part| {
            let (h, f) = part.trim().split_once('x')?;
            Some(ConvSpec {
                height: h.trim().parse().ok()?,
                filters: f.trim().parse().ok()?,
            })
        })
        .collect()
}

fn show_conv(conv: &[ConvSpec]) -> String {
    conv.iter()
        .map(|c| format!("{}x{}", c.height, c.filters))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_objective(text: &str) -> Option<Objective> {
    match text {
        "pseudo-label" => Some(Objective::PseudoLabel),
        "autoencode" => Some(Objective::Autoencode),
        _ => None,
    }
}

fn show_objective(o: &Objective) -> String {
    match o {
        Objective::PseudoLabel => "pseudo-label",
        Objective::Autoencode => "autoencode",
    }
    .into()
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parse config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw = parse_lines(text)?;
        let mut r = Reader {
            raw: &raw,
            entries: BTreeMap::new(),
        };
        let path = |key: &'static str| -> Result<Option<PathBuf>, ConfigError> {
            Ok(raw.get(key).map(|p| base.join(p)))
        };
        let violations =
            path("corpus.violations")?.ok_or(ConfigError::Missing("corpus.violations"))?;
        let projects = path("corpus.projects")?.ok_or(ConfigError::Missing("corpus.projects"))?;
        let categories = path("corpus.categories")?;
        let output = path("output")?.unwrap_or_else(|| base.join("out"));
        for key in [
            "corpus.violations",
            "corpus.projects",
            "corpus.categories",
            "output",
        ] {
            if let Some(v) = raw.get(key) {
                r.entries.insert(key.into(), v.clone());
            }
        }

        let mut m = MiningParams::default();
        m.embed.dim = r.get("embed.dim", m.embed.dim)?;
        m.embed.window = r.get("embed.window", m.embed.window)?;
        m.embed.min_freq = r.get("embed.min_freq", m.embed.min_freq)?;
        m.embed.epochs = r.get("embed.epochs", m.embed.epochs)?;
        m.embed.negatives = r.get("embed.negatives", m.embed.negatives)?;
        m.embed.learning_rate = r.get("embed.learning_rate", m.embed.learning_rate)?;
        m.embed.seed = r.get("embed.seed", m.embed.seed)?;
        m.cnn.conv = r.get_with("cnn.conv", m.cnn.conv.clone(), parse_conv, |c| show_conv(c))?;
        m.cnn.pool = r.get("cnn.pool", m.cnn.pool)?;
        m.cnn.hidden_nodes = r.get("cnn.hidden_nodes", m.cnn.hidden_nodes)?;
        m.cnn.learning_rate = r.get("cnn.learning_rate", m.cnn.learning_rate)?;
        m.cnn.leaky_slope = r.get("cnn.leaky_slope", m.cnn.leaky_slope)?;
        m.cnn.epochs = r.get("cnn.epochs", m.cnn.epochs)?;
        m.cnn.seed = r.get("cnn.seed", m.cnn.seed)?;
        m.cnn.objective = r.get_with(
            "cnn.objective",
            m.cnn.objective,
            parse_objective,
            show_objective,
        )?;
        m.cnn.full_batch = r.get("cnn.full_batch", m.cnn.full_batch)?;
        m.xmeans.use_kd_tree = r.get("xmeans.use_kd_tree", m.xmeans.use_kd_tree)?;
        m.xmeans.max_iterations = r.get("xmeans.max_iterations", m.xmeans.max_iterations)?;
        m.xmeans.max_kmeans = r.get("xmeans.max_kmeans", m.xmeans.max_kmeans)?;
        m.xmeans.max_kmeans_children =
            r.get("xmeans.max_kmeans_children", m.xmeans.max_kmeans_children)?;
        m.xmeans.seed = r.get("xmeans.seed", m.xmeans.seed)?;
        m.xmeans.max_clusters = r.get("xmeans.max_clusters", m.xmeans.max_clusters)?;
        m.xmeans.min_clusters = r.get("xmeans.min_clusters", m.xmeans.min_clusters)?;
        m.per_type = r.get("xmeans.per_type", m.per_type)?;

        let d = TrackConfig::default();
        let track = TrackConfig {
            max_offset: r.get("track.max_offset", d.max_offset)?,
            hash_window: r.get("track.hash_window", d.hash_window)?,
        };
        let d = FilterConfig::default();
        let filter = FilterConfig {
            max_tokens: r.get("filter.max_tokens", d.max_tokens)?,
            locality: r.get("filter.locality", d.locality)?,
        };
        let top_k = r.get("match.top_k", 10usize)?;
        let cross_type = r.get("match.cross_type", false)?;

        if m.embed.dim == 0 || m.embed.epochs == 0 || m.cnn.epochs == 0 || m.cnn.hidden_nodes == 0 {
            return Err(ConfigError::Invalid(
                "embedding and network sizes must be positive".into(),
            ));
        }
        if m.cnn.conv.is_empty() || m.cnn.pool == 0 {
            return Err(ConfigError::Invalid(
                "cnn.conv needs at least one layer and cnn.pool must be positive".into(),
            ));
        }
        if m.xmeans.min_clusters == 0 || m.xmeans.min_clusters > m.xmeans.max_clusters {
            return Err(ConfigError::Invalid(
                "xmeans.min_clusters must be in 1..=xmeans.max_clusters".into(),
            ));
        }
        if top_k == 0 || track.hash_window == 0 {
            return Err(ConfigError::Invalid(
                "match.top_k and track.hash_window must be positive".into(),
            ));
        }
        let entries = r.entries;
        Ok(PipelineConfig {
            violations,
            projects,
            categories,
            output,
            mining: m,
            track,
            filter,
            top_k,
            cross_type,
            entries,
        })
    }

    /// `key=value` lines for the keys starting with any of `prefixes`, in
    /// key order.
    pub fn section(&self, prefixes: &[&str]) -> String {
        self.entries
            .iter()
            .filter(|(k, _)| prefixes.iter().any(|p| k.starts_with(p)))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "corpus.violations = v.jsonl\ncorpus.projects = p\n";

    #[test]
    fn defaults_fill_missing_keys() {
        let c = PipelineConfig::parse(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(c.violations, Path::new("/base/v.jsonl"));
        assert_eq!(c.output, Path::new("/base/out"));
        assert_eq!(c.filter, FilterConfig::default());
        assert_eq!(c.track, TrackConfig::default());
        assert_eq!(c.top_k, 10);
        assert_eq!(c.mining, MiningParams::default());
        assert!(c.section(&["cnn."]).contains("cnn.conv=3x32,2x64\n"));
    }

    #[test]
    fn values_are_checked() {
        let base = Path::new(".");
        let bad = [
            "corpus.violations = v\n",
            "corpus.violations = v\ncorpus.projects = p\nembed.dim = x\n",
            "corpus.violations = v\ncorpus.projects = p\nembed.dims = 3\n",
            "corpus.violations = v\ncorpus.projects = p\ncnn.conv = 3y2\n",
            "corpus.violations = v\ncorpus.projects = p\nmatch.top_k = 0\n",
            "corpus.violations = v\ncorpus.violations = w\n",
            "just words\n",
        ];
        for text in bad {
            assert!(PipelineConfig::parse(text, base).is_err(), "{text}");
        }
        let c = PipelineConfig::parse(
            &format!("{MINIMAL}cnn.conv = 2x4, 1x2\ncnn.objective = autoencode\n"),
            base,
        )
        .unwrap();
        assert_eq!(c.mining.cnn.conv.len(), 2);
        assert_eq!(c.mining.cnn.objective, Objective::Autoencode);
    }
}
