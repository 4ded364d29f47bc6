//! Experiment configuration: a single JSON document with dotted sections.
//!
//! ```json
//! {
//!   "experiment": "rank_sweep",
//!   "task": { "name": "2af" },
//!   "network": { "N": 300, "g": 1.5 },
//!   "init": [ { "kind": "svd_rank", "rank": [1, 10, 75, 150, 300] } ],
//!   "training": { "lr": 0.003, "iters": 10000 },
//!   "seeds": [0, 1, 2]
//! }
//! ```
//!
//! Parsing is strict: unknown keys are rejected with a suggestion, and every
//! semantic error names the dotted path of the offending key.

use std::path::{Path, PathBuf};

use rankregime_core::init::{InitKind, InitSpec, NormControl};
use rankregime_core::rnn::{leak_factor, StopRule, TrainConfig};
use rankregime_core::task::{COGNITIVE_STEPS, EVIDENCE_GAP, EVIDENCE_NOISE};
use serde_json::{Map, Value};

use crate::error::ConfigError;

type Result<T> = std::result::Result<T, ConfigError>;

pub const DEFAULT_N: usize = 300;
pub const DEFAULT_G: f64 = 1.5;
pub const DEFAULT_DT: f64 = 100.0;
pub const DEFAULT_TAU_M: f64 = 100.0;
pub const DEFAULT_LR: f64 = 3e-3;
pub const DEFAULT_ITERS: usize = 10_000;
pub const DEFAULT_BATCH: usize = 32;
pub const DEFAULT_BATCH_SMNIST: usize = 200;
pub const DEFAULT_M_PROBE: usize = 64;
pub const DEFAULT_PROBE_SEED: u64 = 20_240_101;
pub const DEFAULT_LOG_EVERY: usize = 100;
pub const DEFAULT_OUTPUT_DIR: &str = "results";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    RankSweep,
    BioInitCompare,
    TheoryCheck,
    AlignedInit,
    Spectrum,
}

impl ExperimentKind {
    const NAMES: [(&'static str, ExperimentKind); 5] = [
        ("rank_sweep", ExperimentKind::RankSweep),
        ("bio_init_compare", ExperimentKind::BioInitCompare),
        ("theory_check", ExperimentKind::TheoryCheck),
        ("aligned_init", ExperimentKind::AlignedInit),
        ("spectrum", ExperimentKind::Spectrum),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, k)| *k == self).map(|(n, _)| *n).unwrap_or("?")
    }

    /// Whether cells train recurrent networks (and so need a task).
    pub fn trains_rnn(self) -> bool {
        matches!(self, ExperimentKind::RankSweep | ExperimentKind::BioInitCompare)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TaskConfig {
    TwoAf { noise_std: f64, mean_gap: f64 },
    Dms { noise_std: f64, match_prob: f64 },
    Cxt,
    Pattern { steps: usize },
    Smnist { images: PathBuf, labels: PathBuf },
}

impl TaskConfig {
    pub fn name(&self) -> &'static str {
        match self {
            TaskConfig::TwoAf { .. } => "2af",
            TaskConfig::Dms { .. } => "dms",
            TaskConfig::Cxt => "cxt",
            TaskConfig::Pattern { .. } => "pattern",
            TaskConfig::Smnist { .. } => "smnist",
        }
    }

    /// `(N_in, N_out)` of the task's batches.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            TaskConfig::TwoAf { .. } | TaskConfig::Dms { .. } => (3, 3),
            TaskConfig::Cxt => (7, 3),
            TaskConfig::Pattern { .. } => (2, 1),
            TaskConfig::Smnist { .. } => (28, 10),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub n: usize,
    pub n_in: usize,
    pub n_out: usize,
    pub g: f64,
    pub dt: f64,
    pub tau_m: f64,
}

impl NetworkConfig {
    pub fn rho(&self) -> f64 {
        leak_factor(self.dt, self.tau_m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitEntry {
    pub kind: InitKind,
    pub norm_control: NormControl,
}

impl InitEntry {
    pub fn spec(&self, g: f64, n: usize) -> InitSpec {
        InitSpec::new(self.kind.clone(), g, n).with_norm_control(self.norm_control)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub m_probe: usize,
    pub seed: u64,
}

/// Settings for the two-layer linear checks.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryConfig {
    pub d: usize,
    pub sigma: f64,
    pub tasks: usize,
    pub n: usize,
    /// Samples per feature-modulated task.
    pub m: usize,
    pub kappas: Vec<f64>,
    /// Allowed `|empirical − formula|` for the expected alignment.
    pub tolerance: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            d: 2,
            sigma: 1e-3,
            tasks: 200,
            n: 100,
            m: 50,
            kappas: vec![1.0, 5.0, 25.0],
            tolerance: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub task: Option<TaskConfig>,
    pub network: NetworkConfig,
    pub init: Vec<InitEntry>,
    pub training: TrainConfig,
    pub probe: ProbeConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub theory: TheoryConfig,
}

impl ExperimentConfig {
    pub fn task_name(&self) -> &str {
        self.task.as_ref().map_or("linear", TaskConfig::name)
    }
}

const TOP_KEYS: &[&str] = &["experiment", "task", "network", "init", "training", "probe", "seeds", "output_dir", "theory"];
const NETWORK_KEYS: &[&str] = &["N", "N_in", "N_out", "g", "dt", "tau_m"];
const TRAINING_KEYS: &[&str] = &["lr", "iters", "batch_size", "stop_accuracy", "dale_constrained", "log_every"];
const PROBE_KEYS: &[&str] = &["m_probe", "seed"];
const THEORY_KEYS: &[&str] = &["d", "sigma", "tasks", "N", "m", "kappas", "tolerance"];

/// Common misspellings and flattened names mapped to their dotted path.
const ALIASES: &[(&str, &str)] = &[
    ("learningrate", "training.lr"),
    ("lr", "training.lr"),
    ("stepsize", "training.lr"),
    ("iterations", "training.iters"),
    ("iters", "training.iters"),
    ("niters", "training.iters"),
    ("numiters", "training.iters"),
    ("batch", "training.batch_size"),
    ("batchsize", "training.batch_size"),
    ("n", "network.N"),
    ("networksize", "network.N"),
    ("hiddensize", "network.N"),
    ("gain", "network.g"),
    ("tau", "network.tau_m"),
    ("taum", "network.tau_m"),
    ("seed", "seeds"),
    ("out", "output_dir"),
    ("outdir", "output_dir"),
    ("output", "output_dir"),
    ("mprobe", "probe.m_probe"),
    ("probesize", "probe.m_probe"),
    ("kind", "experiment"),
    ("inits", "init"),
    ("initialization", "init"),
];

fn all_paths() -> Vec<String> {
    let mut out: Vec<String> = TOP_KEYS.iter().map(|k| k.to_string()).collect();
    for (section, keys) in [("network", NETWORK_KEYS), ("training", TRAINING_KEYS), ("probe", PROBE_KEYS), ("theory", THEORY_KEYS)] {
        out.extend(keys.iter().map(|k| format!("{section}.{k}")));
    }
    out
}

fn join(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn normalize(key: &str) -> String {
    key.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

/// Best guess for an unknown key: the alias table first, then the closest
/// key in the same section, then the closest leaf anywhere.
pub fn suggest(key: &str, section: &str, allowed: &[&str]) -> Option<String> {
    let norm = normalize(key);
    if let Some((_, path)) = ALIASES.iter().find(|(alias, _)| *alias == norm) {
        return Some(path.to_string());
    }
    let score = |candidate: &str| {
        let c = normalize(candidate);
        // Truncated names ("frac" for "frac_exc") count as close matches.
        let prefix = norm.len() >= 3 && (c.starts_with(&norm) || norm.starts_with(&c));
        strsim::normalized_damerau_levenshtein(&norm, &c).max(if prefix { 0.8 } else { 0.0 })
    };
    let local = allowed
        .iter()
        .map(|k| (score(k), join(section, k)))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    if let Some((s, path)) = local {
        if s >= 0.6 {
            return Some(path);
        }
    }
    all_paths()
        .into_iter()
        .map(|p| (score(p.rsplit('.').next().unwrap_or(&p)), p))
        .filter(|(s, _)| *s >= 0.75)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
}

fn check_keys(map: &Map<String, Value>, section: &str, allowed: &[&str]) -> Result<()> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                key: join(section, key),
                suggestion: suggest(key, section, allowed),
            });
        }
    }
    Ok(())
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| ConfigError::invalid(path, "expected an object"))
}

fn get_f64(map: &Map<String, Value>, section: &str, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| ConfigError::invalid(join(section, key), format!("expected a number, got {v}"))),
    }
}

fn get_positive(map: &Map<String, Value>, section: &str, key: &str, default: f64) -> Result<f64> {
    let v = get_f64(map, section, key)?.unwrap_or(default);
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::invalid(join(section, key), format!("must be positive, got {v}")))
    }
}

fn as_count(v: &Value, path: &str) -> Result<usize> {
    match v.as_u64() {
        Some(x) if x > 0 => Ok(x as usize),
        _ => Err(ConfigError::invalid(path, format!("must be a positive integer, got {v}"))),
    }
}

fn get_count(map: &Map<String, Value>, section: &str, key: &str, default: usize) -> Result<usize> {
    map.get(key).map_or(Ok(default), |v| as_count(v, &join(section, key)))
}

fn get_bool(map: &Map<String, Value>, section: &str, key: &str) -> Result<bool> {
    match map.get(key) {
        None => Ok(false),
        Some(v) => v
            .as_bool()
            .ok_or_else(|| ConfigError::invalid(join(section, key), format!("expected true or false, got {v}"))),
    }
}

fn get_str<'a>(map: &'a Map<String, Value>, section: &str, key: &str) -> Result<Option<&'a str>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_str()
            .map(Some)
            .ok_or_else(|| ConfigError::invalid(join(section, key), format!("expected a string, got {v}"))),
    }
}

fn existing_path(raw: &str, key: &str, base: Option<&Path>) -> Result<PathBuf> {
    let p = PathBuf::from(raw);
    let p = match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    };
    if p.exists() {
        Ok(p)
    } else {
        Err(ConfigError::invalid(key, format!("file {} does not exist", p.display())))
    }
}

/// Parses and validates a configuration. Relative file paths are resolved
/// against the working directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with_base(text, None)
}

/// Like [`parse_config`], resolving relative paths (data files and the
/// output directory) against `base`.
pub fn parse_config_with_base(text: &str, base: Option<&Path>) -> Result<ExperimentConfig> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let top = object(&root, "<root>")?;
    check_keys(top, "", TOP_KEYS)?;

    let kind = match get_str(top, "", "experiment")? {
        None => ExperimentKind::RankSweep,
        Some(name) => ExperimentKind::NAMES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, k)| *k)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentKind::NAMES.iter().map(|(n, _)| *n).collect();
                ConfigError::invalid("experiment", format!("unknown experiment `{name}`; expected one of {}", names.join(", ")))
            })?,
    };

    let task = match top.get("task") {
        Some(v) => Some(parse_task(v, base)?),
        None if kind.trains_rnn() => return Err(ConfigError::Missing { key: "task".into() }),
        None => None,
    };

    let network = parse_network(top.get("network"), task.as_ref())?;
    let init = match top.get("init") {
        Some(v) => parse_init_list(v, network.n, network.g, base)?,
        None if matches!(kind, ExperimentKind::TheoryCheck | ExperimentKind::AlignedInit) => Vec::new(),
        None => return Err(ConfigError::Missing { key: "init".into() }),
    };
    if init.is_empty() && !matches!(kind, ExperimentKind::TheoryCheck | ExperimentKind::AlignedInit) {
        return Err(ConfigError::invalid("init", "needs at least one initialization"));
    }
    let is_smnist = matches!(task, Some(TaskConfig::Smnist { .. }));
    let training = parse_training(top.get("training"), is_smnist)?;
    let probe = parse_probe(top.get("probe"))?;
    let seeds = parse_seeds(top.get("seeds"))?;
    let output_dir = match get_str(top, "", "output_dir")? {
        Some(s) if s.is_empty() => return Err(ConfigError::invalid("output_dir", "must not be empty")),
        Some(s) => PathBuf::from(s),
        None => PathBuf::from(DEFAULT_OUTPUT_DIR),
    };
    let output_dir = match base {
        Some(b) if output_dir.is_relative() => b.join(output_dir),
        _ => output_dir,
    };
    let theory = parse_theory(top.get("theory"))?;
    Ok(ExperimentConfig {
        kind,
        task,
        network,
        init,
        training,
        probe,
        seeds,
        output_dir,
        theory,
    })
}

fn parse_task(v: &Value, base: Option<&Path>) -> Result<TaskConfig> {
    let map = object(v, "task")?;
    let name = get_str(map, "task", "name")?.ok_or_else(|| ConfigError::Missing { key: "task.name".into() })?;
    let (allowed, task): (&[&str], _) = match name {
        "2af" => (
            &["name", "noise_std", "mean_gap"],
            TaskConfig::TwoAf {
                noise_std: get_f64(map, "task", "noise_std")?.unwrap_or(EVIDENCE_NOISE),
                mean_gap: get_f64(map, "task", "mean_gap")?.unwrap_or(EVIDENCE_GAP),
            },
        ),
        "dms" => {
            let match_prob = get_f64(map, "task", "match_prob")?.unwrap_or(0.5);
            if !(0.0..=1.0).contains(&match_prob) {
                return Err(ConfigError::invalid("task.match_prob", format!("must lie in [0, 1], got {match_prob}")));
            }
            (
                &["name", "noise_std", "match_prob"],
                TaskConfig::Dms {
                    noise_std: get_f64(map, "task", "noise_std")?.unwrap_or(EVIDENCE_NOISE),
                    match_prob,
                },
            )
        }
        "cxt" => (&["name"], TaskConfig::Cxt),
        "pattern" => (
            &["name", "steps"],
            TaskConfig::Pattern {
                steps: get_count(map, "task", "steps", COGNITIVE_STEPS)?,
            },
        ),
        "smnist" => {
            let path = |key: &str| -> Result<PathBuf> {
                let raw = get_str(map, "task", key)?.ok_or_else(|| ConfigError::Missing { key: format!("task.{key}") })?;
                existing_path(raw, &format!("task.{key}"), base)
            };
            (
                &["name", "images", "labels"],
                TaskConfig::Smnist {
                    images: path("images")?,
                    labels: path("labels")?,
                },
            )
        }
        other => {
            return Err(ConfigError::invalid(
                "task.name",
                format!("unknown task `{other}`; expected one of 2af, dms, cxt, pattern, smnist"),
            ))
        }
    };
    check_keys(map, "task", allowed)?;
    if let TaskConfig::TwoAf { noise_std, .. } | TaskConfig::Dms { noise_std, .. } = &task {
        if *noise_std < 0.0 {
            return Err(ConfigError::invalid("task.noise_std", "must be ≥ 0"));
        }
    }
    Ok(task)
}

fn parse_network(v: Option<&Value>, task: Option<&TaskConfig>) -> Result<NetworkConfig> {
    let empty = Map::new();
    let map = match v {
        Some(v) => object(v, "network")?,
        None => &empty,
    };
    check_keys(map, "network", NETWORK_KEYS)?;
    let (task_in, task_out) = task.map_or((1, 1), TaskConfig::dims);
    let n = get_count(map, "network", "N", DEFAULT_N)?;
    let n_in = get_count(map, "network", "N_in", task_in)?;
    let n_out = get_count(map, "network", "N_out", task_out)?;
    if task.is_some() && n_in != task_in {
        return Err(ConfigError::invalid("network.N_in", format!("task needs N_in = {task_in}, got {n_in}")));
    }
    if task.is_some() && n_out != task_out {
        return Err(ConfigError::invalid("network.N_out", format!("task needs N_out = {task_out}, got {n_out}")));
    }
    let g = get_f64(map, "network", "g")?.unwrap_or(DEFAULT_G);
    if g < 0.0 {
        return Err(ConfigError::invalid("network.g", format!("must be ≥ 0, got {g}")));
    }
    Ok(NetworkConfig {
        n,
        n_in,
        n_out,
        g,
        dt: get_positive(map, "network", "dt", DEFAULT_DT)?,
        tau_m: get_positive(map, "network", "tau_m", DEFAULT_TAU_M)?,
    })
}

fn parse_norm_control(map: &Map<String, Value>, section: &str) -> Result<NormControl> {
    match get_str(map, section, "norm_control")? {
        None | Some("frobenius_fixed") => Ok(NormControl::FrobeniusFixed),
        Some("leading_eig_fixed") => Ok(NormControl::LeadingEigFixed),
        Some(other) => Err(ConfigError::invalid(
            join(section, "norm_control"),
            format!("expected frobenius_fixed or leading_eig_fixed, got `{other}`"),
        )),
    }
}

fn required_f64(map: &Map<String, Value>, section: &str, key: &str) -> Result<f64> {
    get_f64(map, section, key)?.ok_or_else(|| ConfigError::Missing { key: join(section, key) })
}

/// A scalar or an array of scalars (which expands into one entry each).
fn scalar_or_list(map: &Map<String, Value>, section: &str, key: &str) -> Result<Vec<Value>> {
    match map.get(key) {
        None => Err(ConfigError::Missing { key: join(section, key) }),
        Some(Value::Array(items)) if items.is_empty() => Err(ConfigError::invalid(join(section, key), "empty list")),
        Some(Value::Array(items)) => Ok(items.clone()),
        Some(v) => Ok(vec![v.clone()]),
    }
}

fn parse_kind(map: &Map<String, Value>, section: &str, base: Option<&Path>) -> Result<Vec<InitKind>> {
    let name = get_str(map, section, "kind")?.ok_or_else(|| ConfigError::Missing { key: join(section, "kind") })?;
    let (allowed, kinds): (&[&str], Vec<InitKind>) = match name {
        "gaussian" => (&["kind", "norm_control"], vec![InitKind::Gaussian]),
        "uniform" => (&["kind", "norm_control"], vec![InitKind::Uniform]),
        "svd_rank" => {
            let key = join(section, "rank");
            let ranks = scalar_or_list(map, section, "rank")?
                .iter()
                .map(|v| as_count(v, &key).map(|rank| InitKind::SvdRank { rank }))
                .collect::<Result<_>>()?;
            (&["kind", "rank", "norm_control"], ranks)
        }
        "soft_rank" => {
            let key = join(section, "k");
            let ks = scalar_or_list(map, section, "k")?
                .iter()
                .map(|v| {
                    v.as_f64()
                        .map(|k| InitKind::SoftRank { k })
                        .ok_or_else(|| ConfigError::invalid(key.as_str(), format!("expected a number, got {v}")))
                })
                .collect::<Result<_>>()?;
            (&["kind", "k", "norm_control"], ks)
        }
        "cell_type_block" => (
            &["kind", "alpha", "gamma", "epsilon", "norm_control"],
            vec![InitKind::CellTypeBlock {
                alpha: required_f64(map, section, "alpha")?,
                gamma: required_f64(map, section, "gamma")?,
                epsilon: required_f64(map, section, "epsilon")?,
            }],
        ),
        "dale" => (
            &["kind", "frac_exc", "norm_control"],
            vec![InitKind::Dale {
                frac_exc: get_f64(map, section, "frac_exc")?.unwrap_or(0.8),
            }],
        ),
        "chain_motif" => (
            &["kind", "tau", "norm_control"],
            vec![InitKind::ChainMotif {
                tau: required_f64(map, section, "tau")?,
            }],
        ),
        "connectome" => {
            let raw = get_str(map, section, "path")?.ok_or_else(|| ConfigError::Missing { key: join(section, "path") })?;
            (
                &["kind", "path", "norm_control"],
                vec![InitKind::Connectome {
                    path: existing_path(raw, &join(section, "path"), base)?,
                }],
            )
        }
        "shuffled" => {
            let base_path = join(section, "base");
            let inner = object(map.get("base").ok_or_else(|| ConfigError::Missing { key: base_path.clone() })?, &base_path)?;
            let kinds = parse_kind(inner, &base_path, base)?
                .into_iter()
                .map(|k| InitKind::Shuffled { base: Box::new(k) })
                .collect();
            (&["kind", "base", "norm_control"], kinds)
        }
        other => {
            return Err(ConfigError::invalid(
                join(section, "kind"),
                format!(
                    "unknown initialization `{other}`; expected one of gaussian, uniform, svd_rank, soft_rank, \
                     cell_type_block, dale, chain_motif, connectome, shuffled"
                ),
            ))
        }
    };
    check_keys(map, section, allowed)?;
    Ok(kinds)
}

fn parse_init_list(v: &Value, n: usize, g: f64, base: Option<&Path>) -> Result<Vec<InitEntry>> {
    let items = v.as_array().ok_or_else(|| ConfigError::invalid("init", "expected a list of initializations"))?;
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let section = format!("init[{i}]");
        let map = object(item, &section)?;
        let norm_control = parse_norm_control(map, &section)?;
        for kind in parse_kind(map, &section, base)? {
            let entry = InitEntry { kind, norm_control };
            entry
                .spec(g, n)
                .validate()
                .map_err(|e| ConfigError::invalid(section.as_str(), e.to_string()))?;
            out.push(entry);
        }
    }
    Ok(out)
}

fn parse_training(v: Option<&Value>, smnist: bool) -> Result<TrainConfig> {
    let empty = Map::new();
    let map = match v {
        Some(v) => object(v, "training")?,
        None => &empty,
    };
    check_keys(map, "training", TRAINING_KEYS)?;
    let stop = match get_f64(map, "training", "stop_accuracy")? {
        None => StopRule::FixedIters,
        Some(a) if (0.0..=1.0).contains(&a) => StopRule::AccuracyThreshold(a),
        Some(a) => return Err(ConfigError::invalid("training.stop_accuracy", format!("must lie in [0, 1], got {a}"))),
    };
    Ok(TrainConfig {
        lr: get_positive(map, "training", "lr", DEFAULT_LR)?,
        iters: get_count(map, "training", "iters", DEFAULT_ITERS)?,
        batch_size: get_count(map, "training", "batch_size", if smnist { DEFAULT_BATCH_SMNIST } else { DEFAULT_BATCH })?,
        stop,
        dale_constrained: get_bool(map, "training", "dale_constrained")?,
        log_every: get_count(map, "training", "log_every", DEFAULT_LOG_EVERY)?,
    })
}

fn parse_probe(v: Option<&Value>) -> Result<ProbeConfig> {
    let empty = Map::new();
    let map = match v {
        Some(v) => object(v, "probe")?,
        None => &empty,
    };
    check_keys(map, "probe", PROBE_KEYS)?;
    let seed = match map.get("seed") {
        None => DEFAULT_PROBE_SEED,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ConfigError::invalid("probe.seed", format!("must be a 64-bit unsigned integer, got {v}")))?,
    };
    Ok(ProbeConfig {
        m_probe: get_count(map, "probe", "m_probe", DEFAULT_M_PROBE)?,
        seed,
    })
}

fn parse_seeds(v: Option<&Value>) -> Result<Vec<u64>> {
    let v = v.ok_or_else(|| ConfigError::Missing { key: "seeds".into() })?;
    let items = v.as_array().ok_or_else(|| ConfigError::invalid("seeds", "expected a list of integers"))?;
    if items.is_empty() {
        return Err(ConfigError::invalid("seeds", "needs at least one seed"));
    }
    let seeds: Vec<u64> = items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.as_u64()
                .ok_or_else(|| ConfigError::invalid(format!("seeds[{i}]"), format!("must be a 64-bit unsigned integer, got {s}")))
        })
        .collect::<Result<_>>()?;
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(ConfigError::invalid("seeds", "seeds must be distinct"));
    }
    Ok(seeds)
}

fn parse_theory(v: Option<&Value>) -> Result<TheoryConfig> {
    let empty = Map::new();
    let map = match v {
        Some(v) => object(v, "theory")?,
        None => &empty,
    };
    check_keys(map, "theory", THEORY_KEYS)?;
    let def = TheoryConfig::default();
    let sigma = get_positive(map, "theory", "sigma", def.sigma)?;
    let kappas = match map.get("kappas") {
        None => def.kappas,
        Some(v) => {
            let items = v.as_array().ok_or_else(|| ConfigError::invalid("theory.kappas", "expected a list of numbers"))?;
            items
                .iter()
                .map(|k| match k.as_f64() {
                    Some(x) if x >= 1.0 => Ok(x),
                    _ => Err(ConfigError::invalid("theory.kappas", format!("each κ must be a number ≥ 1, got {k}"))),
                })
                .collect::<Result<_>>()?
        }
    };
    let cfg = TheoryConfig {
        d: get_count(map, "theory", "d", def.d)?,
        sigma,
        tasks: get_count(map, "theory", "tasks", def.tasks)?,
        n: get_count(map, "theory", "N", def.n)?,
        m: get_count(map, "theory", "m", def.m)?,
        kappas,
        tolerance: get_positive(map, "theory", "tolerance", def.tolerance)?,
    };
    if cfg.n < cfg.d {
        return Err(ConfigError::invalid("theory.N", format!("must be ≥ d = {}", cfg.d)));
    }
    Ok(cfg)
}

/// A standalone initialization for the `spectrum` command: the recipe's own
/// keys plus optional `N`, `g` and `seed`.
pub fn parse_init_json(text: &str) -> Result<(InitSpec, u64)> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let mut map = object(&root, "init")?.clone();
    let n = get_count(&map, "init", "N", DEFAULT_N)?;
    let g = get_f64(&map, "init", "g")?.unwrap_or(DEFAULT_G);
    let seed = match map.get("seed") {
        None => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ConfigError::invalid("init.seed", format!("must be a 64-bit unsigned integer, got {v}")))?,
    };
    for key in ["N", "g", "seed"] {
        map.remove(key);
    }
    let norm_control = parse_norm_control(&map, "init")?;
    let mut kinds = parse_kind(&map, "init", None)?;
    if kinds.len() != 1 {
        return Err(ConfigError::invalid("init", "expected a single initialization, not a list"));
    }
    let spec = InitSpec::new(kinds.remove(0), g, n).with_norm_control(norm_control);
    spec.validate().map_err(|e| ConfigError::invalid("init", e.to_string()))?;
    Ok((spec, seed))
}
