//! Report emission: per-frame and summary CSV with fixed six-decimal
//! formatting, plus self-contained SVG plots. Output is a pure function of
//! the report, so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::SweepReport;
use crate::pipeline::{RunReport, Stage};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn write_file(path: &Path, content: &str) -> Result<(), ReportError> {
    fs::write(path, content)
        .map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_sen(sen: Option<f64>) -> String {
    sen.map(fmt6).unwrap_or_else(|| "na".to_string())
}

/// Per-frame rows plus one aggregate row.
pub fn format_frames_csv(report: &RunReport) -> String {
    let mut out = String::from("frame,stage,tp,fn,fp,model_time,model_energy\n");
    let mut tp = 0u64;
    let mut fn_ = 0u64;
    let mut fp = 0u64;
    let mut energy = 0.0f64;
    for rec in &report.frames {
        let r = &rec.result;
        tp += rec.matched.tp as u64;
        fn_ += rec.matched.fn_ as u64;
        fp += rec.matched.fp as u64;
        energy += r.model_energy;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.frame_index,
            r.stage,
            rec.matched.tp,
            rec.matched.fn_,
            rec.matched.fp,
            fmt6(r.model_time),
            fmt6(r.model_energy)
        )
        .expect("string write");
    }
    let mean_energy = energy / report.frames.len().max(1) as f64;
    writeln!(out, "total,-,{tp},{fn_},{fp},{},{}", fmt6(report.apt), fmt6(mean_energy))
        .expect("string write");
    out
}

/// Key-value summary: configuration echo and aggregate metrics.
pub fn format_summary_csv(report: &RunReport) -> String {
    let m = &report.meta;
    let (s1, s2, s3) = report.stage_histogram;
    let mut out = String::from("key,value\n");
    let mut kv = |k: &str, v: String| writeln!(out, "{k},{v}").expect("string write");
    kv("mode", m.mode.clone().unwrap_or_else(|| "library".into()));
    kv("stages", m.stages.to_string());
    kv("platform", m.platform.clone());
    kv("dims", format!("{}x{}", m.dims.width, m.dims.height));
    kv("frames", m.n_frames.to_string());
    kv("seed", m.seed.map(|s| s.to_string()).unwrap_or_else(|| "na".into()));
    kv("iou_threshold", fmt6(m.iou_threshold));
    kv("frame_period", fmt6(m.frame_period));
    kv("sen", fmt_sen(report.sen));
    kv("apt", fmt6(report.apt));
    kv("apc", fmt6(report.apc));
    kv("stage_s1", s1.to_string());
    kv("stage_s2", s2.to_string());
    kv("stage_s3", s3.to_string());
    kv("track_agreement", fmt_sen(report.mean_agreement));
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn svg_header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\" font-family=\"monospace\" font-size=\"11\">\n\
         <rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\n"
    )
}

fn stage_color(stage: Stage) -> &'static str {
    match stage {
        Stage::S1 => "#c0392b",
        Stage::S2 => "#e67e22",
        Stage::S3 => "#27ae60",
    }
}

/// Per-frame modeled time as stage-colored bars.
pub fn format_run_svg(report: &RunReport) -> String {
    let n = report.frames.len().max(1) as f64;
    let t_max = report
        .frames
        .iter()
        .map(|r| r.result.model_time)
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let plot_w = SVG_W - 2.0 * MARGIN;
    let plot_h = SVG_H - 2.0 * MARGIN;
    let mut out = svg_header();
    writeln!(
        out,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">model time per frame (s), config {}</text>",
        SVG_W / 2.0,
        report.meta.stages
    )
    .unwrap();
    // axes
    write!(
        out,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{m}\" y=\"{ylab}\" text-anchor=\"start\">{tmax}</text>\n",
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN,
        t = MARGIN,
        ylab = MARGIN - 6.0,
        tmax = fmt6(t_max),
    )
    .unwrap();
    let bar_w = (plot_w / n).max(0.5);
    for (i, rec) in report.frames.iter().enumerate() {
        let h = (rec.result.model_time / t_max) * plot_h;
        let x = MARGIN + i as f64 * plot_w / n;
        let y = SVG_H - MARGIN - h;
        writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            x,
            y,
            bar_w,
            h,
            stage_color(rec.result.stage)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Sweep scatter: x = APT (seconds), y = SEN, one labeled point per config.
pub fn format_sweep_svg(sweep: &SweepReport) -> String {
    let pts: Vec<(f64, f64, String)> = sweep
        .entries
        .iter()
        .map(|e| (e.report.apt, e.report.sen.unwrap_or(0.0), e.stages.to_string()))
        .collect();
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y, _) in &pts {
        x_lo = x_lo.min(*x);
        x_hi = x_hi.max(*x);
        y_lo = y_lo.min(*y);
        y_hi = y_hi.max(*y);
    }
    let pad = |lo: f64, hi: f64| {
        let span = (hi - lo).max(1e-6);
        (lo - 0.1 * span, hi + 0.1 * span)
    };
    let (x_lo, x_hi) = pad(x_lo, x_hi);
    let (y_lo, y_hi) = pad(y_lo.max(0.0), y_hi.min(1.05));
    let plot_w = SVG_W - 2.0 * MARGIN;
    let plot_h = SVG_H - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| SVG_H - MARGIN - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut out = svg_header();
    writeln!(
        out,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">sensitivity vs average processing time</text>",
        SVG_W / 2.0
    )
    .unwrap();
    write!(
        out,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{xl}\" text-anchor=\"middle\">APT (s)</text>\n\
         <text x=\"16\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {cy})\">SEN</text>\n",
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN,
        t = MARGIN,
        cx = SVG_W / 2.0,
        xl = SVG_H - MARGIN + 34.0,
        cy = SVG_H / 2.0,
    )
    .unwrap();
    for k in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        write!(
            out,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{:.4}</text>\n\
             <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{:.3}</text>\n",
            sx(fx),
            SVG_H - MARGIN + 16.0,
            fx,
            MARGIN - 6.0,
            sy(fy) + 4.0,
            fy,
        )
        .unwrap();
    }
    for (x, y, label) in &pts {
        write!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#2980b9\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            sx(*x),
            sy(*y),
            sx(*x) + 7.0,
            sy(*y) - 5.0,
            label
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// One row per sweep point.
pub fn format_sweep_csv(sweep: &SweepReport, partial_note: Option<&str>) -> String {
    let mut out = String::from("stages,sen,apt,apc,frames\n");
    for e in &sweep.entries {
        writeln!(
            out,
            "{},{},{},{},{}",
            e.stages,
            fmt_sen(e.report.sen),
            fmt6(e.report.apt),
            fmt6(e.report.apc),
            e.report.meta.n_frames
        )
        .expect("string write");
    }
    if let Some(note) = partial_note {
        writeln!(out, "# partial: {note}").expect("string write");
    }
    out
}

/// Write `frames.csv`, `summary.csv`, and optionally `run.svg` into the
/// directory (created if needed). Returns the written paths.
pub fn write_report(
    report: &RunReport,
    out_dir: &Path,
    plot: bool,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(out_dir)
        .map_err(|source| ReportError::Io { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    let frames = out_dir.join("frames.csv");
    write_file(&frames, &format_frames_csv(report))?;
    written.push(frames);
    let summary = out_dir.join("summary.csv");
    write_file(&summary, &format_summary_csv(report))?;
    written.push(summary);
    if plot {
        let svg = out_dir.join("run.svg");
        write_file(&svg, &format_run_svg(report))?;
        written.push(svg);
    }
    Ok(written)
}

/// Write the combined sweep outputs plus one subdirectory per config.
pub fn write_sweep(
    sweep: &SweepReport,
    out_dir: &Path,
    plot: bool,
    partial_note: Option<&str>,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(out_dir)
        .map_err(|source| ReportError::Io { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    let csv = out_dir.join("sweep.csv");
    write_file(&csv, &format_sweep_csv(sweep, partial_note))?;
    written.push(csv);
    if plot {
        let svg = out_dir.join("sweep.svg");
        write_file(&svg, &format_sweep_svg(sweep))?;
        written.push(svg);
    }
    for e in &sweep.entries {
        written.extend(write_report(&e.report, &out_dir.join(e.stages.to_string()), plot)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{execute_run, execute_sweep, parse_config, RunConfig};
    use crate::pipeline::StageConfig;
    use std::path::Path;

    fn demo_config() -> RunConfig {
        let text = "\
[run]
mode = simulate
stages = 1-3-5
seed = 4

[scene]
width = 512
height = 384
objects = 3
frames = 9
";
        RunConfig::from_raw(&parse_config(text, Path::new("demo.conf")).unwrap()).unwrap()
    }

    #[test]
    fn frames_csv_has_one_row_per_frame_plus_total() {
        let report = execute_run(&demo_config()).unwrap();
        let csv = format_frames_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 9 + 1);
        assert!(lines[0].starts_with("frame,stage,"));
        assert!(lines.last().unwrap().starts_with("total,-,"));
    }

    #[test]
    fn summary_reports_metrics_and_echo() {
        let report = execute_run(&demo_config()).unwrap();
        let csv = format_summary_csv(&report);
        assert!(csv.contains("stages,1-3-5"));
        assert!(csv.contains("mode,simulate"));
        assert!(csv.contains("seed,4"));
        assert!(csv.contains("apt,"));
    }

    #[test]
    fn rerun_is_byte_identical() {
        let cfg = demo_config();
        let a = execute_run(&cfg).unwrap();
        let b = execute_run(&cfg).unwrap();
        assert_eq!(format_frames_csv(&a), format_frames_csv(&b));
        assert_eq!(format_summary_csv(&a), format_summary_csv(&b));
        assert_eq!(format_run_svg(&a), format_run_svg(&b));
    }

    #[test]
    fn write_report_emits_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = execute_run(&demo_config()).unwrap();
        let files = write_report(&report, dir.path(), true).unwrap();
        assert_eq!(files.len(), 3);
        for f in files {
            assert!(f.exists(), "{f:?}");
        }
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("blocked");
        std::fs::write(&blocker, "file, not dir").unwrap();
        let report = execute_run(&demo_config()).unwrap();
        assert!(matches!(
            write_report(&report, &blocker, false),
            Err(ReportError::Io { .. })
        ));
    }

    #[test]
    fn sweep_outputs_one_point_per_config() {
        let configs: Vec<StageConfig> =
            ["1-1-1", "1-3-5", "1-10-5"].iter().map(|s| s.parse().unwrap()).collect();
        let sweep = execute_sweep(&configs, &demo_config()).unwrap();
        let csv = format_sweep_csv(&sweep, None);
        assert_eq!(csv.lines().count(), 4);
        let svg = format_sweep_svg(&sweep);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains(">1-10-5<"));
    }

    #[test]
    fn singleton_sweep_is_one_point() {
        let sweep = execute_sweep(&["1-1-1".parse().unwrap()], &demo_config()).unwrap();
        assert_eq!(format_sweep_csv(&sweep, None).lines().count(), 2);
    }

    #[test]
    fn partial_sweep_is_flagged() {
        let sweep = execute_sweep(&["1-1-1".parse().unwrap()], &demo_config()).unwrap();
        let csv = format_sweep_csv(&sweep, Some("aborted at 9-9-9"));
        assert!(csv.ends_with("# partial: aborted at 9-9-9\n"));
    }
}
