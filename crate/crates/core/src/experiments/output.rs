//! CSV and JSON output of a [`ComparisonReport`].
//!
//! Numbers are written as `%.10e`; absent values are empty fields.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::report::{ComparisonReport, MomentSeries};
use crate::format::sci;
use crate::{Error, Result};

pub const TRAJECTORIES_CSV: &str = "trajectories.csv";
pub const CHECKPOINTS_CSV: &str = "checkpoints.csv";
pub const MC_VALIDATION_CSV: &str = "mc_validation.csv";
pub const SUMMARY_JSON: &str = "summary.json";

pub const TRAJECTORY_HEADER: [&str; 29] = [
    "t",
    "x1_true",
    "x2_true",
    "x3_true",
    "x1_carleman",
    "x2_carleman",
    "x3_carleman",
    "P11_carleman",
    "P22_carleman",
    "P12_carleman",
    "P13_carleman",
    "P23_carleman",
    "P33_carleman",
    "x1_ekf",
    "x2_ekf",
    "x3_ekf",
    "P11_ekf",
    "P22_ekf",
    "P12_ekf",
    "P13_ekf",
    "P23_ekf",
    "P33_ekf",
    "e1_carleman",
    "e2_carleman",
    "e1_ekf",
    "e2_ekf",
    "x1_bilinear",
    "x2_bilinear",
    "x3_bilinear",
];

pub const CHECKPOINT_HEADER: [&str; 5] =
    ["t", "P11_carleman", "P11_ekf", "P22_carleman", "P22_ekf"];

pub const MC_HEADER: [&str; 9] = [
    "t",
    "state",
    "mc_mean",
    "mc_stderr",
    "mc_var",
    "carleman_mean",
    "carleman_var",
    "ekf_mean",
    "ekf_var",
];

// Column order of the covariance block: P11, P22, P12, P13, P23, P33.
const COV_COLUMNS: [usize; 6] = [0, 3, 1, 2, 4, 5];

fn num(x: f64) -> String {
    sci(x, 10)
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn push_moments(row: &mut Vec<String>, m: Option<&MomentSeries>, k: usize) {
    match m {
        Some(m) => {
            row.extend(m.mean[k].iter().map(|&x| num(x)));
            row.extend(COV_COLUMNS.iter().map(|&c| num(m.cov[k][c])));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 9)),
    }
}

fn push_errors(row: &mut Vec<String>, m: Option<&MomentSeries>, k: usize) {
    match m {
        Some(m) => row.extend(m.abs_error[k][..2].iter().map(|&x| num(x))),
        None => row.extend(std::iter::repeat_n(String::new(), 2)),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Every grid point of the reference path and the estimators.
pub fn write_trajectories<W: Write>(report: &ComparisonReport, w: W) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    let Some(truth) = &report.truth else {
        return out.flush().map_err(Into::into);
    };
    let carleman = report.carleman.as_ref();
    let ekf = report.ekf.as_ref();
    let bilinear = report.mc.as_ref().map(|m| &m.bilinear_path);
    let mut row = Vec::with_capacity(TRAJECTORY_HEADER.len());
    for (k, x) in truth.iter().enumerate() {
        row.clear();
        row.push(num(report.time(k)));
        row.extend(x.iter().map(|&v| num(v)));
        push_moments(&mut row, carleman, k);
        push_moments(&mut row, ekf, k);
        push_errors(&mut row, carleman, k);
        push_errors(&mut row, ekf, k);
        match bilinear {
            Some(b) => row.extend(b[k].iter().map(|&v| num(v))),
            None => row.extend(std::iter::repeat_n(String::new(), 3)),
        }
        out.write_record(&row)?;
    }
    out.flush().map_err(Into::into)
}

/// The concentration-variance table at the scenario checkpoints.
pub fn write_checkpoints<W: Write>(report: &ComparisonReport, w: W) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(CHECKPOINT_HEADER)?;
    for r in &report.checkpoints {
        out.write_record([
            num(r.t),
            opt(r.carleman_p11),
            opt(r.ekf_p11),
            opt(r.carleman_p22),
            opt(r.ekf_p22),
        ])?;
    }
    out.flush().map_err(Into::into)
}

/// Ensemble moments of the nonlinear SDE next to the estimators.
pub fn write_mc_validation<W: Write>(report: &ComparisonReport, w: W) -> csv::Result<()> {
    let mut out = writer(w);
    out.write_record(MC_HEADER)?;
    for r in report.mc.iter().flat_map(|m| &m.rows) {
        out.write_record([
            num(r.t),
            format!("x{}", r.state + 1),
            num(r.mc_mean),
            num(r.mc_stderr),
            num(r.mc_var),
            opt(r.carleman_mean),
            opt(r.carleman_var),
            opt(r.ekf_mean),
            opt(r.ekf_var),
        ])?;
    }
    out.flush().map_err(Into::into)
}

fn write_file(
    dir: &Path,
    name: &str,
    f: impl FnOnce(std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f(std::io::BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the three CSV files and `summary.json` into `dir` (created if needed).
pub fn emit_csv(report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(vec![
        write_file(dir, TRAJECTORIES_CSV, |w| {
            Ok(write_trajectories(report, w)?)
        })?,
        write_file(dir, CHECKPOINTS_CSV, |w| Ok(write_checkpoints(report, w)?))?,
        write_file(dir, MC_VALIDATION_CSV, |w| {
            Ok(write_mc_validation(report, w)?)
        })?,
        write_file(dir, SUMMARY_JSON, |mut w| {
            serde_json::to_writer_pretty(&mut w, report)?;
            w.write_all(b"\n")?;
            w.flush()
        })?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_scenario, Methods, Scenario};

    fn render(f: impl Fn(&mut Vec<u8>) -> csv::Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_report_writes_headers_only() {
        let r = run_scenario(&Scenario::set1(), Methods::NONE).unwrap();
        let t = render(|b| write_trajectories(&r, b));
        assert_eq!(t, TRAJECTORY_HEADER.join(",") + "\n");
        assert_eq!(
            render(|b| write_checkpoints(&r, b)),
            CHECKPOINT_HEADER.join(",") + "\n"
        );
        assert_eq!(
            render(|b| write_mc_validation(&r, b)),
            MC_HEADER.join(",") + "\n"
        );
    }

    #[test]
    fn header_starts_with_documented_columns() {
        assert_eq!(
            TRAJECTORY_HEADER[..13].join(","),
            "t,x1_true,x2_true,x3_true,x1_carleman,x2_carleman,x3_carleman,\
             P11_carleman,P22_carleman,P12_carleman,P13_carleman,P23_carleman,P33_carleman"
        );
    }

    #[test]
    fn rows_are_complete_and_formatted() {
        let s = Scenario {
            mc_paths: 50,
            ..Scenario::set1().truncated(1.0)
        };
        let r = run_scenario(
            &s,
            Methods {
                ekf: false,
                ..Methods::ALL
            },
        )
        .unwrap();
        let t = render(|b| write_trajectories(&r, b));
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 1 + 101);
        assert!(!t.contains('\r'));
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), TRAJECTORY_HEADER.len());
        assert_eq!(fields[0], "0.0000000000e+00");
        assert_eq!(fields[1], "3.0000000000e+00");
        assert_eq!(fields[7], "1.0000000000e+00");
        // EKF block is empty, bilinear block present.
        assert!(fields[13..22].iter().all(|f| f.is_empty()));
        assert_eq!(fields[26], "3.0000000000e+00");
        let c = render(|b| write_checkpoints(&r, b));
        assert_eq!(c.lines().count(), 2);
        assert!(c
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("5.0000000000e-01,1.07"));
    }

    #[test]
    fn emit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_scenario(
            &Scenario::set2().truncated(1.0),
            Methods {
                mc: false,
                ..Methods::ALL
            },
        )
        .unwrap();
        let files = emit_csv(&r, &dir.path().join("nested")).unwrap();
        assert_eq!(files.len(), 4);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&files[3]).unwrap()).unwrap();
        assert_eq!(json["seed"], 42);
        assert_eq!(json["scenario"]["name"], "set2");
    }
}
