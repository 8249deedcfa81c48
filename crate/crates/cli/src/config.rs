//! Option resolution: command-line flags override `key = value` config
//! file entries, which override the environment and built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use triplewalk_core::weighting::BlendCoefficients;

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GraphKind {
    Kg,
    Homogeneous,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum WeightingKind {
    Relatedness,
    Centrality,
    Uniform,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalTask {
    Auto,
    Classify,
    Cluster,
    Both,
    None,
}

/// Options as they arrive from flags; every field optional so the config
/// file can fill gaps.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct RawOptions {
    /// Input graph file (TSV triples or whitespace edge list).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Input kind.
    #[arg(long, value_enum, global = true)]
    pub kind: Option<GraphKind>,
    /// Edge weighting scheme for the line graph.
    #[arg(long, value_enum, global = true)]
    pub weighting: Option<WeightingKind>,
    /// Blend coefficient for the first non-shared endpoint.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Blend coefficient for the shared endpoint.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Blend coefficient for the second non-shared endpoint.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Walks started per line-graph node.
    #[arg(long, global = true)]
    pub walks: Option<usize>,
    /// Maximum walk length in nodes.
    #[arg(long = "walk-length", global = true)]
    pub walk_length: Option<usize>,
    /// Skip-gram window size.
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Embedding dimension (default 128 for kg, 32 for homogeneous).
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Negative samples per positive pair.
    #[arg(long, global = true)]
    pub negatives: Option<usize>,
    /// Training epochs over the walk corpus.
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Master random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 keeps every stage deterministic.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed label file (`nodeToken\tlabel` lines).
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    /// Label propagation rule file (`predicate s->o|o->s` lines).
    #[arg(long, global = true)]
    pub rules: Option<PathBuf>,
    /// Training fraction for classification; omitting it sweeps
    /// 0.1, 0.3, 0.5, 0.7, 0.9.
    #[arg(long = "train-fraction", global = true)]
    pub train_fraction: Option<f64>,
    /// Cluster count for eval-cluster (default: number of classes).
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Evaluation task for the full pipeline run.
    #[arg(long = "eval", value_enum, global = true)]
    pub eval_task: Option<EvalTask>,
    /// Output directory for stage artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flag incidence sizes above this threshold as hub diagnostics.
    #[arg(long = "hub-threshold", global = true)]
    pub hub_threshold: Option<usize>,
}

/// Fully resolved pipeline options.
#[derive(Clone, Debug)]
pub struct Options {
    pub input: PathBuf,
    pub kind: GraphKind,
    pub weighting: WeightingKind,
    pub blend: BlendCoefficients,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub seed: u64,
    pub threads: usize,
    pub labels: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub train_fraction: Option<f64>,
    pub k: Option<usize>,
    pub eval_task: EvalTask,
    pub out: PathBuf,
    pub hub_threshold: Option<usize>,
}

fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), idx + 1);
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

macro_rules! fill {
    ($raw:expr, $field:ident, $key:expr, $value:expr, $parse:expr) => {
        if $key == stringify!($field).replace('_', "-") && $raw.$field.is_none() {
            $raw.$field = Some($parse($value)?);
            continue;
        }
    };
}

/// Applies config-file entries underneath already-set flags.
pub fn merge_config_file(raw: &mut RawOptions, path: &Path) -> Result<()> {
    let parse_usize = |v: &str| -> Result<usize> { Ok(v.parse()?) };
    let parse_u64 = |v: &str| -> Result<u64> { Ok(v.parse()?) };
    let parse_f64 = |v: &str| -> Result<f64> { Ok(v.parse()?) };
    let parse_path = |v: &str| -> Result<PathBuf> { Ok(PathBuf::from(v)) };
    let parse_kind = |v: &str| -> Result<GraphKind> {
        match v {
            "kg" => Ok(GraphKind::Kg),
            "homogeneous" => Ok(GraphKind::Homogeneous),
            other => bail!("unknown kind '{other}'"),
        }
    };
    let parse_weighting = |v: &str| -> Result<WeightingKind> {
        match v {
            "relatedness" => Ok(WeightingKind::Relatedness),
            "centrality" => Ok(WeightingKind::Centrality),
            "uniform" => Ok(WeightingKind::Uniform),
            other => bail!("unknown weighting '{other}'"),
        }
    };
    let parse_eval = |v: &str| -> Result<EvalTask> {
        match v {
            "auto" => Ok(EvalTask::Auto),
            "classify" => Ok(EvalTask::Classify),
            "cluster" => Ok(EvalTask::Cluster),
            "both" => Ok(EvalTask::Both),
            "none" => Ok(EvalTask::None),
            other => bail!("unknown eval task '{other}'"),
        }
    };

    for (key, value) in parse_config_file(path)? {
        let key = key.as_str();
        let value = value.as_str();
        if key == "eval" {
            if raw.eval_task.is_none() {
                raw.eval_task = Some(parse_eval(value)?);
            }
            continue;
        }
        fill!(raw, input, key, value, parse_path);
        fill!(raw, kind, key, value, parse_kind);
        fill!(raw, weighting, key, value, parse_weighting);
        fill!(raw, alpha, key, value, parse_f64);
        fill!(raw, beta, key, value, parse_f64);
        fill!(raw, gamma, key, value, parse_f64);
        fill!(raw, walks, key, value, parse_usize);
        fill!(raw, walk_length, key, value, parse_usize);
        fill!(raw, window, key, value, parse_usize);
        fill!(raw, dim, key, value, parse_usize);
        fill!(raw, negatives, key, value, parse_usize);
        fill!(raw, epochs, key, value, parse_usize);
        fill!(raw, seed, key, value, parse_u64);
        fill!(raw, threads, key, value, parse_usize);
        fill!(raw, labels, key, value, parse_path);
        fill!(raw, rules, key, value, parse_path);
        fill!(raw, train_fraction, key, value, parse_f64);
        fill!(raw, k, key, value, parse_usize);
        fill!(raw, out, key, value, parse_path);
        fill!(raw, hub_threshold, key, value, parse_usize);
        // Unknown keys are configuration mistakes, not silently ignored.
        match key {
            "input" | "kind" | "weighting" | "alpha" | "beta" | "gamma" | "walks"
            | "walk-length" | "window" | "dim" | "negatives" | "epochs" | "seed" | "threads"
            | "labels" | "rules" | "train-fraction" | "k" | "out" | "hub-threshold" => {}
            other => bail!("unknown config key '{other}'"),
        }
    }
    Ok(())
}

impl RawOptions {
    /// Resolves defaults and validates cross-field constraints.
    pub fn resolve(self) -> Result<Options> {
        let Some(input) = self.input else {
            bail!("--input is required");
        };
        let kind = match self.kind {
            Some(k) => k,
            None => bail!("--kind is required (kg or homogeneous)"),
        };
        let weighting = self.weighting.unwrap_or(match kind {
            GraphKind::Kg => WeightingKind::Relatedness,
            GraphKind::Homogeneous => WeightingKind::Centrality,
        });
        match (kind, weighting) {
            (GraphKind::Homogeneous, WeightingKind::Relatedness) => {
                bail!("relatedness weighting requires --kind kg")
            }
            (GraphKind::Kg, WeightingKind::Centrality) => {
                bail!("centrality weighting requires --kind homogeneous")
            }
            _ => {}
        }
        let defaults = BlendCoefficients::default();
        let blend = BlendCoefficients {
            alpha: self.alpha.unwrap_or(defaults.alpha),
            beta: self.beta.unwrap_or(defaults.beta),
            gamma: self.gamma.unwrap_or(defaults.gamma),
        };
        blend.validate()?;
        let threads = match self.threads {
            Some(t) => t,
            None => match std::env::var("TRIPLEWALK_THREADS") {
                Ok(v) => v
                    .parse()
                    .with_context(|| format!("TRIPLEWALK_THREADS='{v}'"))?,
                Err(_) => 1,
            },
        };
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        if let Some(f) = self.train_fraction {
            if !(f > 0.0 && f < 1.0) {
                bail!("--train-fraction must lie in (0,1), got {f}");
            }
        }
        for (name, value) in [
            ("--walks", self.walks),
            ("--walk-length", self.walk_length),
            ("--window", self.window),
            ("--dim", self.dim),
            ("--negatives", self.negatives),
            ("--epochs", self.epochs),
        ] {
            if value == Some(0) {
                bail!("{name} must be at least 1");
            }
        }
        Ok(Options {
            input,
            kind,
            weighting,
            blend,
            walks_per_node: self.walks.unwrap_or(10),
            walk_length: self.walk_length.unwrap_or(100),
            window: self.window.unwrap_or(10),
            dim: self.dim.unwrap_or(match kind {
                GraphKind::Kg => 128,
                GraphKind::Homogeneous => 32,
            }),
            negatives: self.negatives.unwrap_or(10),
            epochs: self.epochs.unwrap_or(5),
            seed: self.seed.unwrap_or(1),
            threads,
            labels: self.labels,
            rules: self.rules,
            train_fraction: self.train_fraction,
            k: self.k,
            eval_task: self.eval_task.unwrap_or(EvalTask::Auto),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            hub_threshold: self.hub_threshold,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn base_raw() -> RawOptions {
        RawOptions {
            input: Some(PathBuf::from("g.tsv")),
            kind: Some(GraphKind::Kg),
            ..RawOptions::default()
        }
    }

    #[test]
    fn defaults_mirror_experiment_setup() {
        let opts = base_raw().resolve().unwrap();
        assert_eq!(opts.walks_per_node, 10);
        assert_eq!(opts.walk_length, 100);
        assert_eq!(opts.window, 10);
        assert_eq!(opts.negatives, 10);
        assert_eq!(opts.dim, 128);
        assert_eq!(opts.epochs, 5);
        let opts = RawOptions {
            kind: Some(GraphKind::Homogeneous),
            ..base_raw()
        }
        .resolve()
        .unwrap();
        assert_eq!(opts.dim, 32);
    }

    #[test]
    fn incompatible_weighting_is_a_config_error() {
        let raw = RawOptions {
            kind: Some(GraphKind::Homogeneous),
            weighting: Some(WeightingKind::Relatedness),
            ..base_raw()
        };
        assert!(raw.resolve().is_err());
        let raw = RawOptions {
            weighting: Some(WeightingKind::Centrality),
            ..base_raw()
        };
        assert!(raw.resolve().is_err());
    }

    #[test]
    fn config_file_fills_only_unset_fields() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# comment\nwindow = 4\nseed = 99\ndim = 64").unwrap();
        let mut raw = base_raw();
        raw.seed = Some(7);
        merge_config_file(&mut raw, file.path()).unwrap();
        let opts = raw.resolve().unwrap();
        assert_eq!(opts.window, 4);
        assert_eq!(opts.seed, 7); // flag wins
        assert_eq!(opts.dim, 64);
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "wibble = 3").unwrap();
        let mut raw = base_raw();
        assert!(merge_config_file(&mut raw, file.path()).is_err());
    }

    #[test]
    fn blend_simplex_validated() {
        let raw = RawOptions {
            alpha: Some(0.9),
            beta: Some(0.9),
            gamma: Some(0.9),
            ..base_raw()
        };
        assert!(raw.resolve().is_err());
    }
}
