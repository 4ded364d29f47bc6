//! Sweep execution. Each `(init, seed)` cell owns its random streams, derived
//! from `mix_seed(seed, init_index)`, so results do not depend on scheduling
//! or on the worker count. Failed cells are recorded, never fatal.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rankregime_core::init::{generate, InitSpec};
use rankregime_core::metrics::{measure_run, LazinessReport, RunMetadata};
use rankregime_core::rnn::{train, NoHooks, RnnParams};
use rankregime_core::task::{gen_2af_with, gen_cxt, gen_dms_with, gen_pattern, load_smnist, DmsParams, MnistDataset, TaskBatch, TwoAfParams};
use rankregime_core::tensor::{eigenvalues, mix_seed, EigenSpectrum, Rng};
use rankregime_core::theory::{c_constant_mc, expected_ka, verify_aligned_init, verify_expected_ka, AlignMode, AlignedSetup, ExpectedKaCheck};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{ExperimentConfig, ExperimentKind, TaskConfig, TheoryConfig};
use crate::error::{io, CliError, Result};
use crate::report::{write_metadata, write_reports_csv};
use crate::stats::{median, spearman, welch_t_test, WelchTest};
use crate::svg::{emit_svg_scatter, spectrum_points, write_spectrum_svg, write_xy_svg, Series};

/// Seed of one sweep cell.
pub fn run_seed(seed: u64, init_index: usize) -> u64 {
    mix_seed(seed, init_index as u64)
}

const STREAM_INIT: u64 = 0;
const STREAM_IO: u64 = 1;
const STREAM_TRAIN: u64 = 2;

/// Where training and probe batches come from.
#[derive(Clone)]
pub enum TaskSource {
    Synthetic(TaskConfig),
    Mnist(Arc<MnistDataset>),
}

impl TaskSource {
    pub fn new(task: &TaskConfig) -> Result<Self> {
        Ok(match task {
            TaskConfig::Smnist { images, labels } => TaskSource::Mnist(Arc::new(load_smnist(images, labels)?)),
            other => TaskSource::Synthetic(other.clone()),
        })
    }

    pub fn batch(&self, rng: &mut Rng, m: usize) -> TaskBatch {
        match self {
            TaskSource::Synthetic(TaskConfig::TwoAf { noise_std, mean_gap }) => gen_2af_with(
                rng,
                m,
                &TwoAfParams {
                    noise_std: *noise_std,
                    mean_gap: *mean_gap,
                },
            ),
            TaskSource::Synthetic(TaskConfig::Dms { noise_std, match_prob }) => gen_dms_with(
                rng,
                m,
                &DmsParams {
                    noise_std: *noise_std,
                    match_prob: *match_prob,
                },
            ),
            TaskSource::Synthetic(TaskConfig::Cxt) => gen_cxt(rng, m),
            TaskSource::Synthetic(TaskConfig::Pattern { steps }) => gen_pattern(rng, m, *steps),
            TaskSource::Synthetic(TaskConfig::Smnist { .. }) => unreachable!("sMNIST is always loaded"),
            TaskSource::Mnist(ds) => ds.sample_batch(rng, m),
        }
    }
}

fn metadata(config: &ExperimentConfig, init_index: usize, seed: u64) -> RunMetadata {
    let entry = &config.init[init_index];
    RunMetadata {
        seed,
        task: config.task_name().to_string(),
        init_kind: entry.kind.name().to_string(),
        rank_param: entry.kind.rank_param(),
        g: config.network.g,
        norm_control: entry.norm_control.name().to_string(),
    }
}

fn init_spec(config: &ExperimentConfig, init_index: usize) -> InitSpec {
    config.init[init_index].spec(config.network.g, config.network.n)
}

/// Initial recurrent weights of a cell.
pub fn initial_weights(config: &ExperimentConfig, init_index: usize, seed: u64) -> rankregime_core::Result<rankregime_core::tensor::DenseMatrix> {
    let root = Rng::new(run_seed(seed, init_index));
    generate(&init_spec(config, init_index), &mut root.derive(STREAM_INIT))
}

fn run_cell_inner(config: &ExperimentConfig, source: &TaskSource, probe: &TaskBatch, init_index: usize, seed: u64) -> rankregime_core::Result<LazinessReport> {
    let root = Rng::new(run_seed(seed, init_index));
    let w_h = initial_weights(config, init_index, seed)?;
    let net = &config.network;
    let w0 = RnnParams::with_default_io(w_h, net.n_in, net.n_out, net.rho(), &mut root.derive(STREAM_IO))?;
    let mut train_rng = root.derive(STREAM_TRAIN);
    let m = config.training.batch_size;
    let outcome = train(w0.clone(), |_| Ok(source.batch(&mut train_rng, m)), &config.training, &mut NoHooks)?;
    let mut report = measure_run(&w0, &outcome.params, probe)?;
    report.meta = metadata(config, init_index, seed);
    Ok(report)
}

/// Trains and measures one cell; any error or panic becomes a failed report.
pub fn run_cell(config: &ExperimentConfig, source: &TaskSource, probe: &TaskBatch, init_index: usize, seed: u64) -> LazinessReport {
    let meta = metadata(config, init_index, seed);
    match catch_unwind(AssertUnwindSafe(|| run_cell_inner(config, source, probe, init_index, seed))) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => {
            log::warn!("run init={init_index} seed={seed} failed: {e}");
            LazinessReport::failed(meta, e.to_string())
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "run panicked".into());
            LazinessReport::failed(meta, format!("panic: {msg}"))
        }
    }
}

/// The held-out probe batch shared by every cell of a sweep.
pub fn probe_batch(config: &ExperimentConfig, source: &TaskSource) -> TaskBatch {
    source.batch(&mut Rng::new(config.probe.seed), config.probe.m_probe)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Other(format!("cannot start worker pool: {e}")))
}

/// All `(init, seed)` cells, sorted by `(init_index, seed)`.
pub fn run_sweep(config: &ExperimentConfig, workers: usize) -> Result<Vec<LazinessReport>> {
    let task = config.task.as_ref().ok_or_else(|| CliError::Other("sweep needs a task".into()))?;
    let source = TaskSource::new(task)?;
    let probe = probe_batch(config, &source);
    let mut cells: Vec<(usize, u64)> = (0..config.init.len()).flat_map(|i| config.seeds.iter().map(move |&s| (i, s))).collect();
    cells.sort_unstable();
    log::info!("running {} cells on {} workers", cells.len(), workers.max(1));
    let reports: Vec<LazinessReport> = pool(workers)?.install(|| cells.par_iter().map(|&(i, s)| run_cell(config, &source, &probe, i, s)).collect());
    Ok(reports)
}

/// Per-setting medians of a sweep (one setting = one init entry).
#[derive(Clone, Debug, PartialEq)]
pub struct SettingSummary {
    pub init_kind: String,
    pub rank_param: Option<f64>,
    pub runs: usize,
    pub failed: usize,
    pub median_ka: Option<f64>,
    pub median_ra: Option<f64>,
    pub median_delta_w: Option<f64>,
    pub median_accuracy: Option<f64>,
    pub median_eff_rank_eig: Option<f64>,
    pub min_accuracy: Option<f64>,
}

/// Groups consecutive reports of the same setting (reports are sorted by
/// init index, so each init entry forms one group).
pub fn summarize(reports: &[LazinessReport], seeds_per_setting: usize) -> Vec<SettingSummary> {
    reports
        .chunks(seeds_per_setting.max(1))
        .map(|group| {
            let ok: Vec<&LazinessReport> = group.iter().filter(|r| r.error.is_none()).collect();
            let col = |f: fn(&LazinessReport) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let acc: Vec<f64> = ok.iter().filter_map(|r| r.final_accuracy).collect();
            SettingSummary {
                init_kind: group[0].meta.init_kind.clone(),
                rank_param: group[0].meta.rank_param,
                runs: group.len(),
                failed: group.len() - ok.len(),
                median_ka: median(&col(|r| r.ka)),
                median_ra: median(&col(|r| r.ra)),
                median_delta_w: median(&col(|r| r.delta_w_norm)),
                median_accuracy: median(&acc),
                median_eff_rank_eig: median(&col(|r| r.eff_rank_eig_init)),
                min_accuracy: acc.iter().copied().reduce(f64::min),
            }
        })
        .collect()
}

/// Spearman correlations of the per-setting medians against the rank
/// parameter: `(KA, ΔW, RA)`.
pub fn rank_trends(summary: &[SettingSummary]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let rows: Vec<&SettingSummary> = summary.iter().filter(|s| s.rank_param.is_some()).collect();
    let x: Vec<f64> = rows.iter().filter_map(|s| s.rank_param).collect();
    let trend = |f: fn(&SettingSummary) -> Option<f64>| {
        let y: Option<Vec<f64>> = rows.iter().map(|s| f(s)).collect();
        y.and_then(|y| spearman(&x, &y))
    };
    (trend(|s| s.median_ka), trend(|s| s.median_delta_w), trend(|s| s.median_ra))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KaArm {
    pub check: ExpectedKaCheck,
    pub singular_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryCheckResult {
    pub config: TheoryConfig,
    pub isotropic: KaArm,
    pub rank1: KaArm,
    /// Monte-Carlo estimate of `c`, expected to be `1/d`.
    pub c_mc: f64,
    pub welch: Option<WelchTest>,
}

impl TheoryCheckResult {
    pub fn within_tolerance(&self) -> bool {
        let tol = self.config.tolerance;
        [&self.isotropic, &self.rank1]
            .iter()
            .all(|arm| (arm.check.empirical_mean - arm.check.formula).abs() <= tol)
    }

    /// Isotropic above rank-one at one-sided `p < 0.01`. A deterministic
    /// isotropic arm against a varying rank-one arm still yields a valid
    /// Welch statistic.
    pub fn ordering_significant(&self) -> bool {
        self.welch.is_some_and(|w| w.t > 0.0 && w.p_greater < 0.01)
    }

    pub fn passed(&self) -> bool {
        self.within_tolerance() && self.ordering_significant()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let arm = |a: &KaArm| {
            json!({
                "singular_values": a.singular_values,
                "empirical_mean": a.check.empirical_mean,
                "formula": a.check.formula,
                "standard_error": a.check.standard_error(),
                "samples": a.check.samples,
            })
        };
        json!({
            "d": self.config.d,
            "sigma": self.config.sigma,
            "tasks": self.config.tasks,
            "N": self.config.n,
            "tolerance": self.config.tolerance,
            "c_monte_carlo": self.c_mc,
            "c_exact": 1.0 / self.config.d as f64,
            "isotropic": arm(&self.isotropic),
            "rank1": arm(&self.rank1),
            "welch_t": self.welch.map(|w| w.t),
            "welch_p_isotropic_greater": self.welch.map(|w| w.p_greater),
            "passed": self.passed(),
        })
    }
}

/// Expected kernel alignment over random teachers for isotropic and random
/// rank-one initializations, each arm on its own stream.
pub fn run_theory_check(cfg: &TheoryConfig, seed: u64) -> Result<TheoryCheckResult> {
    let d = cfg.d;
    let iso = vec![cfg.sigma / (d as f64).sqrt(); d];
    let mut r1 = vec![0.0; d];
    r1[0] = cfg.sigma;
    let root = Rng::new(seed);
    let (a, b) = rayon::join(
        || verify_expected_ka(&mut root.derive(0), d, cfg.sigma, &iso, cfg.tasks, cfg.n),
        || verify_expected_ka(&mut root.derive(1), d, cfg.sigma, &r1, cfg.tasks, cfg.n),
    );
    let (a, b) = (a?, b?);
    let c_mc = c_constant_mc(&mut root.derive(2), d, 100_000)?;
    let welch = welch_t_test(&a.samples, &b.samples);
    // Formula sanity: both arms must agree with the core closed form.
    debug_assert_eq!(a.formula, expected_ka(&iso, cfg.sigma, d)?);
    Ok(TheoryCheckResult {
        config: cfg.clone(),
        isotropic: KaArm {
            check: a,
            singular_values: iso,
        },
        rank1: KaArm {
            check: b,
            singular_values: r1,
        },
        c_mc,
        welch,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedRecord {
    pub mode: AlignMode,
    pub kappa: f64,
    pub seed: u64,
    pub ka: std::result::Result<f64, String>,
}

pub fn mode_name(mode: AlignMode) -> &'static str {
    match mode {
        AlignMode::Full => "full",
        AlignMode::Partial => "partial",
        AlignMode::RandomRank1 => "random_rank1",
    }
}

/// KA under aligned, partially aligned and random rank-one initializations
/// for every `(mode, κ, seed)`. The three modes share each seed's stream.
pub fn run_aligned_init(cfg: &TheoryConfig, seeds: &[u64], workers: usize) -> Result<Vec<AlignedRecord>> {
    let mut cells = Vec::new();
    for mode in [AlignMode::Full, AlignMode::Partial, AlignMode::RandomRank1] {
        for &kappa in &cfg.kappas {
            for &seed in seeds {
                cells.push((mode, kappa, seed));
            }
        }
    }
    let setup = AlignedSetup { n: cfg.n, m: cfg.m };
    Ok(pool(workers)?.install(|| {
        cells
            .par_iter()
            .map(|&(mode, kappa, seed)| AlignedRecord {
                mode,
                kappa,
                seed,
                ka: verify_aligned_init(&mut Rng::new(seed), cfg.d, cfg.sigma, kappa, mode, setup).map_err(|e| e.to_string()),
            })
            .collect()
    }))
}

fn write_aligned_csv(records: &[AlignedRecord], path: &Path) -> Result<()> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["mode", "kappa", "seed", "ka", "error"]).map_err(csv_err)?;
    for r in records {
        let (ka, err) = match &r.ka {
            Ok(v) => (format!("{v:.16e}"), String::new()),
            Err(e) => (String::new(), e.clone()),
        };
        w.write_record([mode_name(r.mode).to_string(), format!("{:.16e}", r.kappa), r.seed.to_string(), ka, err])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// Eigenvalue spectrum of each init entry at the first seed.
pub fn run_spectra(config: &ExperimentConfig) -> Result<Vec<(String, EigenSpectrum)>> {
    let seed = config.seeds[0];
    (0..config.init.len())
        .map(|i| {
            let w = initial_weights(config, i, seed)?;
            let label = match config.init[i].kind.rank_param() {
                Some(p) => format!("{} ({p})", config.init[i].kind.name()),
                None => config.init[i].kind.name().to_string(),
            };
            Ok((label, eigenvalues(&w)?))
        })
        .collect()
}

/// What a finished experiment produced.
#[derive(Clone, Debug, Default)]
pub struct ExperimentOutcome {
    pub reports: Vec<LazinessReport>,
    pub artifacts: Vec<PathBuf>,
    /// Number of failed runs or failed checks.
    pub failures: usize,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.4}"))
}

/// Creates the output directory and confirms it accepts writes.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let probe = dir.join(".write-test");
    std::fs::write(&probe, b"").map_err(|e| io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| io(&probe, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| io(path, e))
}

/// Runs the configured experiment and persists every artifact under
/// `config.output_dir` before returning.
pub fn run_experiment(config: &ExperimentConfig, config_text: &str, workers: usize) -> Result<ExperimentOutcome> {
    let out = &config.output_dir;
    prepare_output_dir(out)?;
    let mut outcome = ExperimentOutcome::default();
    match config.kind {
        ExperimentKind::RankSweep | ExperimentKind::BioInitCompare => {
            let reports = run_sweep(config, workers)?;
            let csv_path = out.join("reports.csv");
            write_reports_csv(&reports, &csv_path)?;
            write_metadata(&out.join("metadata.json"), config_text, workers, &reports)?;
            outcome.artifacts.push(csv_path);
            let x_field = if config.kind == ExperimentKind::RankSweep { "rank_param" } else { "eff_rank_eig_init" };
            for y in ["ka", "ra", "delta_w_norm"] {
                let path = out.join(format!("{y}_vs_{x_field}.svg"));
                emit_svg_scatter(&reports, x_field, y, &path)?;
                outcome.artifacts.push(path);
            }
            let summary = summarize(&reports, config.seeds.len());
            for s in &summary {
                outcome.summary.push(format!(
                    "{:<16} param={:<8} runs={} failed={} median KA={} RA={} dW={} acc={} eff_rank_eig={}",
                    s.init_kind,
                    s.rank_param.map_or("-".into(), |p| p.to_string()),
                    s.runs,
                    s.failed,
                    fmt_opt(s.median_ka),
                    fmt_opt(s.median_ra),
                    fmt_opt(s.median_delta_w),
                    fmt_opt(s.median_accuracy),
                    fmt_opt(s.median_eff_rank_eig),
                ));
            }
            if config.kind == ExperimentKind::RankSweep {
                let (ka, dw, ra) = rank_trends(&summary);
                outcome.summary.push(format!(
                    "spearman vs rank: KA={} dW={} RA={}",
                    fmt_opt(ka),
                    fmt_opt(dw),
                    fmt_opt(ra)
                ));
            }
            outcome.failures = reports.iter().filter(|r| r.error.is_some()).count();
            outcome.reports = reports;
        }
        ExperimentKind::TheoryCheck => {
            let result = run_theory_check(&config.theory, config.seeds[0])?;
            let path = out.join("theory_check.json");
            write_json(&path, &result.to_json())?;
            outcome.artifacts.push(path);
            for (name, arm) in [("isotropic", &result.isotropic), ("rank-1", &result.rank1)] {
                outcome.summary.push(format!(
                    "{name}: empirical {:.4} ± {:.4} (SE), formula {:.4}",
                    arm.check.empirical_mean,
                    arm.check.standard_error(),
                    arm.check.formula
                ));
            }
            outcome.summary.push(format!(
                "c (Monte Carlo) = {:.4} vs 1/d = {:.4}; Welch p = {}",
                result.c_mc,
                1.0 / config.theory.d as f64,
                result.welch.map_or("-".into(), |w| format!("{:.3e}", w.p_greater))
            ));
            if !result.passed() {
                outcome.failures += 1;
                outcome.summary.push("theory check FAILED".into());
            }
        }
        ExperimentKind::AlignedInit => {
            let records = run_aligned_init(&config.theory, &config.seeds, workers)?;
            let path = out.join("aligned_init.csv");
            write_aligned_csv(&records, &path)?;
            outcome.artifacts.push(path);
            let mut series = Vec::new();
            for (k, mode) in [AlignMode::Full, AlignMode::Partial, AlignMode::RandomRank1].into_iter().enumerate() {
                let mut points = Vec::new();
                let mut medians = Vec::new();
                for &kappa in &config.theory.kappas {
                    let vals: Vec<f64> = records
                        .iter()
                        .filter(|r| r.mode == mode && r.kappa == kappa)
                        .filter_map(|r| r.ka.as_ref().ok().copied())
                        .collect();
                    points.extend(vals.iter().map(|&v| (kappa, v)));
                    if let Some(m) = median(&vals) {
                        medians.push((kappa, m));
                        outcome.summary.push(format!("{:<13} kappa={kappa:<5} median KA={m:.6}", mode_name(mode)));
                    }
                }
                series.push(Series::points(mode_name(mode), k, points));
                series.push(Series::medians(&format!("{} median", mode_name(mode)), k, medians));
            }
            let svg = out.join("aligned_init.svg");
            write_xy_svg("Alignment after training vs feature strength", "kappa", "KA", &series, &svg)?;
            outcome.artifacts.push(svg);
            outcome.failures = records.iter().filter(|r| r.ka.is_err()).count();
        }
        ExperimentKind::Spectrum => {
            let spectra = run_spectra(config)?;
            let n = config.network.n;
            let series: Vec<Series> = spectra
                .iter()
                .enumerate()
                .map(|(k, (label, s))| Series::points(label, k, spectrum_points(s, n)))
                .collect();
            let path = out.join("spectrum.svg");
            write_spectrum_svg(&series, &path)?;
            outcome.artifacts.push(path);
            for (label, s) in &spectra {
                outcome.summary.push(format!("{label}: |λ1| = {:.4}", s.leading_modulus()));
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn tiny(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"{{ "task": {{"name": "2af"}}, "network": {{"N": 12}},
                "init": [{{"kind": "svd_rank", "rank": [1, 12]}}, {{"kind": "gaussian"}}],
                "training": {{"iters": 30, "batch_size": 4, "lr": 0.01}}, "probe": {{"m_probe": 8}},
                "seeds": [3, 1, 2] {extra} }}"#
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn sweep_is_sorted_and_complete() {
        let cfg = tiny("");
        let reports = run_sweep(&cfg, 2).unwrap();
        assert_eq!(reports.len(), 9);
        let keys: Vec<(String, Option<f64>, u64)> = reports.iter().map(|r| (r.meta.init_kind.clone(), r.meta.rank_param, r.meta.seed)).collect();
        assert_eq!(keys[0], ("svd_rank".into(), Some(1.0), 1));
        assert_eq!(keys[2], ("svd_rank".into(), Some(1.0), 3));
        assert_eq!(keys[8], ("gaussian".into(), None, 3));
        assert!(reports.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn results_independent_of_workers_and_order() {
        let cfg = tiny("");
        let a = run_sweep(&cfg, 1).unwrap();
        let b = run_sweep(&cfg, 3).unwrap();
        assert_eq!(a, b);
        let source = TaskSource::new(cfg.task.as_ref().unwrap()).unwrap();
        let probe = probe_batch(&cfg, &source);
        let single = run_cell(&cfg, &source, &probe, 1, 2);
        assert_eq!(single, a[3 + 1]);
    }

    #[test]
    fn failing_cells_are_recorded_and_sweep_continues() {
        let mut cfg = tiny("");
        cfg.training.lr = 1e6;
        let reports = run_sweep(&cfg, 1).unwrap();
        assert_eq!(reports.len(), 9);
        assert!(reports.iter().any(|r| r.error.is_some()));
        let failed = reports.iter().find(|r| r.error.is_some()).unwrap();
        assert!(failed.ka.is_nan());
    }

    #[test]
    fn summary_groups_by_setting() {
        let cfg = tiny("");
        let reports = run_sweep(&cfg, 1).unwrap();
        let s = summarize(&reports, cfg.seeds.len());
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].rank_param, Some(12.0));
        assert!(s.iter().all(|x| x.runs == 3 && x.failed == 0 && x.median_ka.is_some()));
        let (ka, _, _) = rank_trends(&s);
        assert!(ka.is_some());
    }

    #[test]
    fn distinct_cells_get_distinct_streams() {
        assert_ne!(run_seed(1, 0), run_seed(1, 1));
        assert_ne!(run_seed(1, 0), run_seed(2, 0));
        assert_eq!(run_seed(5, 3), mix_seed(5, 3));
    }

    #[test]
    fn experiment_persists_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny("");
        cfg.output_dir = dir.path().join("out");
        let outcome = run_experiment(&cfg, "{}", 1).unwrap();
        assert_eq!(outcome.failures, 0);
        for a in &outcome.artifacts {
            assert!(a.exists(), "{}", a.display());
        }
        assert!(cfg.output_dir.join("metadata.json").exists());
        assert_eq!(outcome.reports.len(), 9);
    }

    #[test]
    fn small_theory_check_passes() {
        let cfg = TheoryConfig {
            tasks: 40,
            ..TheoryConfig::default()
        };
        let r = run_theory_check(&cfg, 0).unwrap();
        assert!(r.within_tolerance(), "{:?}", r.to_json());
        assert!((r.c_mc - 0.5).abs() < 0.02);
        assert!(r.to_json()["passed"].is_boolean());
    }
}
