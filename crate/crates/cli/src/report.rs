//! Report persistence. Floats are written with 17 significant digits so a
//! read-back is bit-exact; rows of failed runs keep only the metadata and
//! the error text. Anything run-dependent but not result-dependent (wall
//! clock, worker count) goes to a separate metadata file so the CSV stays
//! byte-identical across reruns.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rankregime_core::metrics::{LazinessReport, RunMetadata};
use serde_json::json;

use crate::error::{io, CliError, Result};

pub const CSV_COLUMNS: [&str; 14] = [
    "seed",
    "task",
    "init_kind",
    "rank_param",
    "g",
    "norm_control",
    "delta_w_norm",
    "ra",
    "ka",
    "final_loss",
    "final_accuracy",
    "eff_rank_sv_init",
    "eff_rank_eig_init",
    "error",
];

/// Numeric fields usable as plot axes.
pub const NUMERIC_FIELDS: [&str; 10] = [
    "seed",
    "rank_param",
    "g",
    "delta_w_norm",
    "ra",
    "ka",
    "final_loss",
    "final_accuracy",
    "eff_rank_sv_init",
    "eff_rank_eig_init",
];

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn row(r: &LazinessReport) -> Vec<String> {
    let failed = r.error.is_some();
    let num = |x: f64| if failed { String::new() } else { fmt_float(x) };
    vec![
        r.meta.seed.to_string(),
        r.meta.task.clone(),
        r.meta.init_kind.clone(),
        fmt_opt(r.meta.rank_param),
        fmt_float(r.meta.g),
        r.meta.norm_control.clone(),
        num(r.delta_w_norm),
        num(r.ra),
        num(r.ka),
        num(r.final_loss),
        if failed { String::new() } else { fmt_opt(r.final_accuracy) },
        num(r.eff_rank_sv_init),
        num(r.eff_rank_eig_init),
        r.error.clone().unwrap_or_default(),
    ]
}

pub fn write_reports_csv(reports: &[LazinessReport], path: &Path) -> Result<()> {
    if reports.is_empty() {
        return Err(CliError::Empty("no reports"));
    }
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in reports {
        w.write_record(row(r)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io(path, e))
}

fn parse_float(s: &str, row: usize, col: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| CliError::Report {
        row,
        msg: format!("column {col}: `{s}` is not a number"),
    })
}

pub fn read_reports_csv(path: &Path) -> Result<Vec<LazinessReport>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(CliError::Report {
            row: 0,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = i + 1;
        let f = |k: usize| parse_float(&rec[k], row, CSV_COLUMNS[k]);
        let nan = |k: usize| f(k).map(|v| v.unwrap_or(f64::NAN));
        let seed = rec[0].parse().map_err(|_| CliError::Report {
            row,
            msg: format!("seed `{}` is not an integer", &rec[0]),
        })?;
        out.push(LazinessReport {
            meta: RunMetadata {
                seed,
                task: rec[1].to_string(),
                init_kind: rec[2].to_string(),
                rank_param: f(3)?,
                g: nan(4)?,
                norm_control: rec[5].to_string(),
            },
            delta_w_norm: nan(6)?,
            ra: nan(7)?,
            ka: nan(8)?,
            final_loss: nan(9)?,
            final_accuracy: f(10)?,
            eff_rank_sv_init: nan(11)?,
            eff_rank_eig_init: nan(12)?,
            error: (!rec[13].is_empty()).then(|| rec[13].to_string()),
        });
    }
    Ok(out)
}

/// Value of a numeric column; `None` when the field is empty for this row.
pub fn field_value(r: &LazinessReport, field: &str) -> Result<Option<f64>> {
    let v = match field {
        "seed" => Some(r.meta.seed as f64),
        "rank_param" => r.meta.rank_param,
        "g" => Some(r.meta.g),
        "delta_w_norm" => Some(r.delta_w_norm),
        "ra" => Some(r.ra),
        "ka" => Some(r.ka),
        "final_loss" => Some(r.final_loss),
        "final_accuracy" => r.final_accuracy,
        "eff_rank_sv_init" => Some(r.eff_rank_sv_init),
        "eff_rank_eig_init" => Some(r.eff_rank_eig_init),
        other => return Err(CliError::UnknownField(other.to_string())),
    };
    Ok(v.filter(|x| x.is_finite()))
}

/// Wall-clock and environment details that must not enter the CSV.
pub fn write_metadata(path: &Path, config_text: &str, workers: usize, reports: &[LazinessReport]) -> Result<()> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let doc = json!({
        "finished_unix_seconds": now,
        "workers": workers,
        "runs": reports.len(),
        "failed_runs": reports.iter().filter(|r| r.error.is_some()).count(),
        "package_version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::from_str::<serde_json::Value>(config_text).unwrap_or(serde_json::Value::Null),
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Other(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(seed: u64) -> LazinessReport {
        LazinessReport {
            meta: RunMetadata {
                seed,
                task: "2af".into(),
                init_kind: "svd_rank".into(),
                rank_param: Some(10.0),
                g: 1.5,
                norm_control: "frobenius_fixed".into(),
            },
            delta_w_norm: 0.1 + 1e-17 * seed as f64,
            ra: std::f64::consts::PI / 4.0,
            ka: 0.123_456_789_012_345_67,
            final_loss: 1.0 / 3.0,
            final_accuracy: Some(0.96875),
            eff_rank_sv_init: 5e-300,
            eff_rank_eig_init: 0.2,
            error: None,
        }
    }

    #[test]
    fn one_report_gives_header_and_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_reports_csv(&[sample(1)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let reports = vec![sample(1), sample(2)];
        write_reports_csv(&reports, &path).unwrap();
        let back = read_reports_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in reports.iter().zip(&back) {
            assert_eq!(a.delta_w_norm.to_bits(), b.delta_w_norm.to_bits());
            assert_eq!(a.ra.to_bits(), b.ra.to_bits());
            assert_eq!(a.ka.to_bits(), b.ka.to_bits());
            assert_eq!(a.final_loss.to_bits(), b.final_loss.to_bits());
            assert_eq!(a.eff_rank_sv_init.to_bits(), b.eff_rank_sv_init.to_bits());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn failed_runs_have_empty_numeric_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut failed = LazinessReport::failed(sample(3).meta, "diverged at iteration 5, with \"quotes\"");
        failed.meta.rank_param = None;
        write_reports_csv(&[sample(1), failed.clone()], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let rec = rd.records().nth(1).unwrap().unwrap();
        for k in [3, 6, 7, 8, 9, 10, 11, 12] {
            assert!(rec[k].is_empty(), "column {} = {}", CSV_COLUMNS[k], &rec[k]);
        }
        assert_eq!(&rec[13], failed.error.as_deref().unwrap());
        let back = read_reports_csv(&path).unwrap();
        assert_eq!(back[1].error, failed.error);
        assert!(back[1].ka.is_nan());
    }

    #[test]
    fn empty_report_list_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(write_reports_csv(&[], &dir.path().join("r.csv")), Err(CliError::Empty(_))));
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = write_reports_csv(&[sample(1)], Path::new("/nonexistent-dir/r.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/r.csv"));
    }

    #[test]
    fn field_lookup() {
        let r = sample(4);
        assert_eq!(field_value(&r, "rank_param").unwrap(), Some(10.0));
        assert_eq!(field_value(&r, "seed").unwrap(), Some(4.0));
        assert!(matches!(field_value(&r, "nope"), Err(CliError::UnknownField(_))));
    }
}
