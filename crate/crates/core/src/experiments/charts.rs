//! Self-contained SVG line charts.
//!
//! Line styles: solid for the reference realization, dashed for the Carleman
//! estimate (or the bilinear path), dotted for the EKF estimate.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::report::{ComparisonReport, MomentSeries};
use crate::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
/// Polylines are thinned to about this many vertices.
const MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStyle {
    Solid,
    Dashed,
    Dotted,
}

impl LineStyle {
    fn attrs(self) -> &'static str {
        match self {
            LineStyle::Solid => r##"stroke="#000000""##,
            LineStyle::Dashed => r##"stroke="#1f5fbf" stroke-dasharray="8,5""##,
            LineStyle::Dotted => r##"stroke="#c0392b" stroke-dasharray="2,4""##,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub style: LineStyle,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Round tick step covering `span` in roughly five intervals.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>, usize) {
    let step = tick_step(hi - lo);
    let start = (lo / step).floor();
    let end = (hi / step).ceil();
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let ticks = (0..=(end - start) as i64)
        .map(|i| (start + i as f64) * step)
        .collect();
    (start * step, end * step, ticks, decimals)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1e-3);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn label(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    // Avoid "-0".
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

impl Chart {
    pub fn render(&self) -> String {
        let (x0, x1) = range(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0)),
        );
        let (y0, y1) = range(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1)),
        );
        let (x0, x1, xt, xd) = ticks(x0, x1);
        let (y0, y1, yt, yd) = ticks(y0, y1);
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        for &t in &xt {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##,
                TOP + ph
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph + 18.0,
                label(t, xd)
            );
        }
        for &t in &yt {
            let y = sy(t);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
                LEFT + pw
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                label(t, yd)
            );
        }
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#000000"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 18.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for series in &self.series {
            let stride = series.points.len().div_ceil(MAX_POINTS).max(1);
            let mut pts = String::new();
            let last = series.points.len().saturating_sub(1);
            for (i, &(x, y)) in series.points.iter().enumerate() {
                if (i % stride == 0 || i == last) && y.is_finite() {
                    let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
                }
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke-width="1.6" {} points="{}"/>"#,
                series.style.attrs(),
                pts.trim_end()
            );
        }

        for (i, series) in self.series.iter().enumerate() {
            let y = TOP + 16.0 + 18.0 * i as f64;
            let x = LEFT + pw - 190.0;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke-width="1.6" {}/>"#,
                x + 30.0,
                series.style.attrs()
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                x + 38.0,
                y + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

const STATE_NAMES: [&str; 2] = ["C_A (x1)", "C_B (x2)"];

fn series(
    report: &ComparisonReport,
    label: &str,
    style: LineStyle,
    value: impl Fn(usize) -> f64,
    len: usize,
) -> Series {
    Series {
        label: label.into(),
        style,
        points: (0..len).map(|k| (report.time(k), value(k))).collect(),
    }
}

fn estimators(report: &ComparisonReport) -> Vec<(&'static str, LineStyle, &MomentSeries)> {
    [
        ("Carleman", LineStyle::Dashed, report.carleman.as_ref()),
        ("EKF", LineStyle::Dotted, report.ekf.as_ref()),
    ]
    .into_iter()
    .filter_map(|(l, s, m)| m.map(|m| (l, s, m)))
    .collect()
}

/// Builds every chart the report has data for, keyed by file stem. Charts
/// whose series are missing are skipped with a log notice.
pub fn build_charts(report: &ComparisonReport) -> Vec<(String, Chart)> {
    let name = &report.scenario.name;
    let mut out = Vec::new();
    let Some(truth) = &report.truth else {
        log::info!("no reference path in report; no charts written");
        return out;
    };
    let len = truth.len();
    let est = estimators(report);

    match &report.mc {
        Some(mc) => {
            for (i, state) in STATE_NAMES.iter().enumerate() {
                out.push((
                    format!("path_x{}", i + 1),
                    Chart {
                        title: format!(
                            "{name}: {} reference vs bilinear path (shared noise)",
                            state
                        ),
                        x_label: "t (s)".into(),
                        y_label: format!("x{} (mol/l)", i + 1),
                        series: vec![
                            series(report, "true", LineStyle::Solid, |k| truth[k][i], len),
                            series(
                                report,
                                "Carleman bilinear",
                                LineStyle::Dashed,
                                |k| mc.bilinear_path[k][i],
                                len,
                            ),
                        ],
                    },
                ));
            }
        }
        None => log::info!("no Monte-Carlo series; skipping bilinear path charts"),
    }

    if est.is_empty() {
        log::info!("no estimator series; skipping mean, error and variance charts");
        return out;
    }
    for (i, state) in STATE_NAMES.iter().enumerate() {
        let mut s = vec![series(
            report,
            "true",
            LineStyle::Solid,
            |k| truth[k][i],
            len,
        )];
        s.extend(
            est.iter()
                .map(|(l, st, m)| series(report, &format!("{l} mean"), *st, |k| m.mean[k][i], len)),
        );
        out.push((
            format!("mean_x{}", i + 1),
            Chart {
                title: format!("{name}: {} reference vs predicted mean", state),
                x_label: "t (s)".into(),
                y_label: format!("x{} (mol/l)", i + 1),
                series: s,
            },
        ));
    }
    for (i, state) in STATE_NAMES.iter().enumerate() {
        out.push((
            format!("error_x{}", i + 1),
            Chart {
                title: format!("{name}: {} absolute prediction error", state),
                x_label: "t (s)".into(),
                y_label: format!("e{} (mol/l)", i + 1),
                series: est
                    .iter()
                    .map(|(l, st, m)| series(report, l, *st, |k| m.abs_error[k][i], len))
                    .collect(),
            },
        ));
    }
    for (i, state) in STATE_NAMES.iter().enumerate() {
        let slot = [0, 3][i];
        out.push((
            format!("variance_x{}", i + 1),
            Chart {
                title: format!("{name}: {} conditional variance", state),
                x_label: "t (s)".into(),
                y_label: format!("P{}{}", i + 1, i + 1),
                series: est
                    .iter()
                    .map(|(l, st, m)| series(report, l, *st, |k| m.cov[k][slot], len))
                    .collect(),
            },
        ));
    }
    out
}

/// Writes one SVG per chart into `dir`.
pub fn emit_charts(report: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    build_charts(report)
        .into_iter()
        .map(|(stem, chart)| {
            let path = dir.join(format!("{stem}.svg"));
            std::fs::write(&path, chart.render()).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_scenario, Methods, Scenario};

    fn short() -> Scenario {
        Scenario {
            mc_paths: 20,
            ..Scenario::set1().truncated(5.0)
        }
    }

    #[test]
    fn nice_ticks() {
        assert_eq!(tick_step(200.0), 50.0);
        assert_eq!(tick_step(1.0), 0.2);
        let (lo, hi, t, d) = ticks(0.03, 2.19);
        assert_eq!((lo, hi, d), (0.0, 2.5, 1));
        assert_eq!(t.len(), 6);
        assert_eq!(range([2.0, 2.0].into_iter()), (1.0, 3.0));
        assert_eq!(label(-0.0, 1), "0.0");
    }

    #[test]
    fn chart_count_follows_available_series() {
        let s = short();
        let full = run_scenario(&s, Methods::ALL).unwrap();
        assert_eq!(build_charts(&full).len(), 8);
        let no_mc = run_scenario(
            &s,
            Methods {
                mc: false,
                ..Methods::ALL
            },
        )
        .unwrap();
        let stems: Vec<String> = build_charts(&no_mc).into_iter().map(|c| c.0).collect();
        assert_eq!(stems.len(), 6);
        assert!(stems.iter().all(|s| !s.starts_with("path")));
        let only_mc = run_scenario(
            &s,
            Methods {
                mc: true,
                ..Methods::NONE
            },
        )
        .unwrap();
        assert_eq!(build_charts(&only_mc).len(), 2);
        assert!(build_charts(&run_scenario(&s, Methods::NONE).unwrap()).is_empty());
    }

    #[test]
    fn rendering_is_deterministic_and_well_formed() {
        let r = run_scenario(&short(), Methods::ALL).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = emit_charts(&r, dir_a.path()).unwrap();
        let b = emit_charts(&r, dir_b.path()).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            let (sa, sb) = (std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
            assert_eq!(sa, sb);
            let text = String::from_utf8(sa).unwrap();
            assert!(text.starts_with("<svg") && text.ends_with("</svg>\n"));
            assert!(!text.contains("NaN") && !text.contains("inf"));
        }
        let mean = std::fs::read_to_string(dir_a.path().join("mean_x1.svg")).unwrap();
        assert_eq!(mean.matches("<polyline").count(), 3);
        assert!(mean.contains("stroke-dasharray=\"2,4\""));
    }
}
