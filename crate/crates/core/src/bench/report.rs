use super::{summarize, BenchmarkRow, Category, CategorySummary, RunStats, Stats};
use crate::gusto::GustoStatus;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("report line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no benchmark rows")]
    Empty,
}

const RUN_FIELDS: [&str; 4] = ["status", "cost", "inner", "outer"];

fn status_name(s: GustoStatus) -> &'static str {
    match s {
        GustoStatus::Converged => "converged",
        GustoStatus::Failure => "failure",
        GustoStatus::MaxOuter => "max_outer",
    }
}

fn parse_status(s: &str) -> Option<GustoStatus> {
    [GustoStatus::Converged, GustoStatus::Failure, GustoStatus::MaxOuter]
        .into_iter()
        .find(|&g| status_name(g) == s)
}

fn header(timing: bool) -> String {
    let mut cols = vec!["id".to_string(), "category".into(), "problem_hash".into()];
    for side in ["cold", "warm"] {
        cols.extend(RUN_FIELDS.iter().map(|f| format!("{side}_{f}")));
        if timing {
            cols.push(format!("{side}_time_s"));
        }
    }
    cols.push("reduction".into());
    cols.join(",")
}

/// One line per row plus a header. Wall-time columns are written only when
/// `timing` is set; without them the output depends on nothing but the
/// inputs and seeds.
pub fn emit_csv(rows: &[BenchmarkRow], timing: bool) -> String {
    let mut out = header(timing);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{:016x}", r.id, r.category.name(), r.problem_hash);
        for run in [&r.cold, &r.warm] {
            let _ = write!(
                out,
                ",{},{:e},{},{}",
                status_name(run.status),
                run.cost,
                run.inner_iterations,
                run.outer_iterations
            );
            if timing {
                let _ = write!(out, ",{:.6}", run.wall_time);
            }
        }
        let _ = writeln!(out, ",{:.6}", r.reduction());
    }
    out
}

/// Reads CSV written by [`emit_csv`], with or without timing. Missing wall
/// times come back as NaN.
pub fn parse_csv(text: &str) -> Result<Vec<BenchmarkRow>, ReportError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(ReportError::Empty)?;
    let timing = if head == header(true) {
        true
    } else if head == header(false) {
        false
    } else {
        return Err(ReportError::Parse {
            line: 1,
            msg: "unrecognised header".into(),
        });
    };
    let width = 3 + 2 * (RUN_FIELDS.len() + timing as usize) + 1;
    let mut rows = Vec::new();
    for (i, line) in lines {
        let err = |msg: &str| ReportError::Parse {
            line: i + 1,
            msg: msg.into(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != width {
            return Err(err("wrong number of fields"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| err("expected a count"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| err("expected a number"));
        let run = |at: usize| -> Result<RunStats, ReportError> {
            Ok(RunStats {
                status: parse_status(f[at]).ok_or_else(|| err("unknown status"))?,
                cost: real(f[at + 1])?,
                inner_iterations: num(f[at + 2])?,
                outer_iterations: num(f[at + 3])?,
                wall_time: if timing { real(f[at + 4])? } else { f64::NAN },
            })
        };
        let stride = RUN_FIELDS.len() + timing as usize;
        rows.push(BenchmarkRow {
            id: num(f[0])?,
            category: Category::parse(f[1]).ok_or_else(|| err("unknown category"))?,
            problem_hash: u64::from_str_radix(f[2], 16).map_err(|_| err("bad problem hash"))?,
            cold: run(3)?,
            warm: run(3 + stride)?,
        });
    }
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(rows)
}

fn iterations_cell(iters: &Stats, time: &Stats) -> String {
    if time.mean.is_finite() {
        format!("{:.0} ({:.1} s)", iters.mean, time.mean)
    } else {
        format!("{:.0}", iters.mean)
    }
}

/// Plain-text table: mean cost and mean inner iterations (mean wall time)
/// per category, then the median and mean reduction with its 95 % interval.
pub fn summary_table(summaries: &[CategorySummary]) -> String {
    let head = [
        "category",
        "cold cost",
        "warm cost",
        "cold iters",
        "warm iters",
        "median red.",
        "mean red. ± 95%",
        "failed",
    ];
    let body: Vec<[String; 8]> = summaries
        .iter()
        .map(|s| {
            [
                s.category.label().to_string(),
                format!("{:.4}", s.cold_cost.mean),
                format!("{:.4}", s.warm_cost.mean),
                iterations_cell(&s.cold_iterations, &s.cold_time),
                iterations_cell(&s.warm_iterations, &s.warm_time),
                format!("{:.1}%", 100.0 * s.reduction.median),
                format!("{:.1}% ± {:.1}%", 100.0 * s.reduction.mean, 100.0 * s.reduction.ci95),
                format!("{}/{}", s.failures, s.instances),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..head.len())
        .map(|c| body.iter().map(|r| r[c].chars().count()).chain([head[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[&str]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&head);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-|-"));
    out.push('\n');
    for r in &body {
        out.push_str(&line(&r.iter().map(String::as_str).collect::<Vec<_>>()));
        out.push('\n');
    }
    out
}

const COLD_COLOR: &str = "#4C72B0";
const WARM_COLOR: &str = "#DD8452";

/// Paired-points plot of total inner iterations: per category a cold and a
/// warm column joined instance by instance, with the mean of each column and
/// its 95 % interval in black. Unconverged pairs are drawn dashed.
pub fn emit_svg(rows: &[BenchmarkRow]) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let summaries = summarize(rows);
    let (w, h, left, top, bottom) = (220.0 * summaries.len() as f64 + 80.0, 420.0, 70.0, 30.0, 60.0);
    let y_max = rows
        .iter()
        .flat_map(|r| [r.cold.inner_iterations, r.warm.inner_iterations])
        .max()
        .unwrap_or(1)
        .max(1) as f64
        * 1.05;
    let y = |v: f64| top + (h - top - bottom) * (1.0 - v / y_max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        h - bottom
    );
    for k in 0..=5 {
        let v = y_max * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.0}</text>"#,
            left - 6.0,
            y(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(18,{:.1}) rotate(-90)" text-anchor="middle">inner iterations</text>"#,
        h / 2.0
    );
    for (g, sum) in summaries.iter().enumerate() {
        let xc = left + 60.0 + 220.0 * g as f64;
        let xw = xc + 100.0;
        for r in rows.iter().filter(|r| r.category == sum.category) {
            let (yc, yw) = (y(r.cold.inner_iterations as f64), y(r.warm.inner_iterations as f64));
            let dash = if r.both_converged() { "" } else { r#" stroke-dasharray="3,3""# };
            let _ = writeln!(
                s,
                r##"<line x1="{xc}" y1="{yc:.1}" x2="{xw}" y2="{yw:.1}" stroke="#999" stroke-width="0.6"{dash}/>"##
            );
            let _ = writeln!(s, r#"<circle cx="{xc}" cy="{yc:.1}" r="2.5" fill="{COLD_COLOR}"/>"#);
            let _ = writeln!(s, r#"<circle cx="{xw}" cy="{yw:.1}" r="2.5" fill="{WARM_COLOR}"/>"#);
        }
        for (x, st) in [(xc - 18.0, &sum.cold_iterations), (xw + 18.0, &sum.warm_iterations)] {
            if st.count == 0 {
                continue;
            }
            let _ = writeln!(
                s,
                r#"<line x1="{x}" y1="{:.1}" x2="{x}" y2="{:.1}" stroke="black" stroke-width="1.5"/>"#,
                y(st.mean - st.ci95),
                y(st.mean + st.ci95)
            );
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{:.1}" width="8" height="8" fill="black"/>"#,
                x - 4.0,
                y(st.mean) - 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            xc + 50.0,
            h - bottom + 20.0,
            sum.category.label()
        );
        let _ = writeln!(
            s,
            r#"<text x="{xc}" y="{}" text-anchor="middle" fill="{COLD_COLOR}">cold</text><text x="{xw}" y="{}" text-anchor="middle" fill="{WARM_COLOR}">warm</text>"#,
            h - bottom + 36.0,
            h - bottom + 36.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
