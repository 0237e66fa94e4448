//! Experiment runners: sweep, write CSV and SVG, summarize.

use std::fs;
use std::path::Path;

use log::info;

use mmgauss::experiments::{figures_of_merit, sweep, SweepAxis, SweepResult, SweepRow};

use crate::config::{ConfigError, Experiment, Plan};
use crate::svg::{self, Series};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical error: {0}")]
    Numerical(#[from] mmgauss::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Write { .. } => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

fn axis_scale(axis: SweepAxis) -> (f64, &'static str) {
    match axis {
        SweepAxis::Delay => (1e12, "tau (ps)"),
        SweepAxis::Angle => (1.0, "theta (rad)"),
        SweepAxis::Squeezing => (1.0, "xi"),
        SweepAxis::Loss => (1.0, "epsilon"),
        SweepAxis::FilterWidth => (1.0, "filter half-width (rad/s)"),
    }
}

fn metric_points(r: &SweepResult, metric: &str) -> Vec<(f64, f64)> {
    let (scale, _) = axis_scale(r.axis);
    let col = r.column(metric).unwrap_or_default();
    r.rows
        .iter()
        .zip(col)
        .map(|(row, m)| (row.value * scale, m.unwrap_or(f64::NAN)))
        .collect()
}

fn fmt_point(r: &SweepResult, metric: &str, idx: usize) -> String {
    let (scale, _) = axis_scale(r.axis);
    let row = &r.rows[idx];
    let m = r.column(metric).and_then(|c| c[idx]);
    let m = m.map_or("n/a".to_string(), |m| format!("{m:.6}"));
    format!("{metric} = {m} at {} = {:.4}", r.axis.name(), row.value * scale)
}

/// Endpoints of the sweep, plus the extremum for delay scans.
fn describe(r: &SweepResult, metric: &str) -> String {
    if r.rows.is_empty() {
        return "no rows".to_string();
    }
    let last = r.rows.len() - 1;
    let mut s = if last == 0 {
        fmt_point(r, metric, 0)
    } else {
        format!("{} .. {}", fmt_point(r, metric, 0), fmt_point(r, metric, last))
    };
    if r.axis == SweepAxis::Delay {
        let col = r.column(metric).unwrap_or_default();
        if let Some((i, _)) = col
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|m| (i, m)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        {
            s.push_str(&format!("; minimum {}", fmt_point(r, metric, i)));
        }
    }
    s
}

/// Interior local minima of `p4` over an evenly spaced delay sweep, in ps,
/// refined by a parabola through the neighbouring points.
fn local_minima_ps(r: &SweepResult) -> Vec<f64> {
    let p: Vec<f64> = r.rows.iter().map(|row| row.p4.unwrap_or(f64::NAN)).collect();
    (1..p.len().saturating_sub(1))
        .filter(|&i| p[i] < p[i - 1] && p[i] < p[i + 1])
        .map(|i| {
            let (a, b, c) = (p[i - 1], p[i], p[i + 1]);
            let step = r.rows[i + 1].value - r.rows[i].value;
            let t = r.rows[i].value + 0.5 * (a - c) / (a - 2.0 * b + c) * step;
            (t * 1e15).round() / 1e3
        })
        .collect()
}

fn describe_probe(r: &SweepResult) -> String {
    ["p4", "p_bunch", "p_herald", "eta_herald", "v_hom", "v_mzi"]
        .iter()
        .map(|m| match r.column(m).and_then(|c| c[0]) {
            Some(v) => format!("{m} = {v:.6}"),
            None => format!("{m} = n/a"),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn probe(plan: &Plan) -> Result<SweepResult, RunError> {
    let t = &plan.template;
    // An empty sweep carries the metadata; the single row is filled in here.
    let mut r = sweep(t, SweepAxis::Squeezing, &[])?;
    let f = figures_of_merit(t)?;
    r.rows.push(SweepRow {
        value: t.source_a.squeezing,
        p4: Some(f.probabilities.four_fold),
        p_bunch: Some(f.probabilities.bunching),
        p_herald: Some(f.probabilities.herald),
        eta_herald: f.eta_herald.is_finite().then_some(f.eta_herald),
        v_hom: f.v_hom.is_finite().then_some(f.v_hom),
        v_mzi: f.v_mzi.is_finite().then_some(f.v_mzi),
        ratio_max_over_inf: (f.p4_inf > 0.0).then(|| f.p4_no_bs / f.p4_inf),
    });
    Ok(r)
}

fn filter_label(f: &Option<mmgauss::experiments::FilterSpec>) -> String {
    match f {
        None => "unfiltered".to_string(),
        Some(f) => format!("hw{:e}", f.half_width),
    }
}

/// Runs one plan, writing every artifact into `out_dir`.
/// Returns the one-line summary.
pub fn run(plan: &Plan, out_dir: &Path) -> Result<String, RunError> {
    info!("{} with {} values", plan.experiment.name(), plan.values.len());
    let mut series = Vec::new();
    let mut results = Vec::new();
    match plan.experiment {
        Experiment::Probe => results.push((None, probe(plan)?)),
        Experiment::FilterStudy => {
            let axis = plan.axis.expect("filter study sweeps an axis");
            for f in &plan.filters {
                let cfg = plan.template.clone().with_filter(f.clone());
                let r = sweep(&cfg, axis, &plan.values)?;
                results.push((Some(filter_label(f)), r));
            }
        }
        _ => {
            let axis = plan.axis.expect("sweeping experiment has an axis");
            results.push((None, sweep(&plan.template, axis, &plan.values)?));
        }
    }

    fs::create_dir_all(out_dir).map_err(|source| RunError::Write {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut files = Vec::new();
    let mut parts = Vec::new();
    for (label, r) in &results {
        let name = match label {
            None => format!("{}.csv", plan.output),
            Some(l) => format!("{}_{l}.csv", plan.output),
        };
        let path = out_dir.join(name);
        write(&path, &r.to_csv())?;
        files.push(path);
        let text = if plan.experiment == Experiment::Probe {
            format!("xi = {}: {}", r.rows[0].value, describe_probe(r))
        } else {
            describe(r, &plan.metric)
        };
        parts.push(match label {
            None => text,
            Some(l) => format!("[{l}] {text}"),
        });
        series.push(Series {
            label: label.clone().unwrap_or_else(|| plan.metric.clone()),
            points: metric_points(r, &plan.metric),
        });
    }
    if plan.experiment == Experiment::StructuredSources {
        let minima = local_minima_ps(&results[0].1);
        parts.push(format!("local p4 minima at {minima:?} ps"));
    }
    if plan.svg && plan.experiment != Experiment::Probe {
        let axis = results[0].1.axis;
        let path = out_dir.join(format!("{}.svg", plan.output));
        let plot = svg::plot(plan.experiment.name(), axis_scale(axis).1, &plan.metric, &series);
        write(&path, &plot)?;
        files.push(path);
    }
    let written: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    Ok(format!(
        "{}: {} ({} detector) -> {}",
        plan.experiment.name(),
        parts.join("; "),
        plan.template.detector.name(),
        written.join(", ")
    ))
}
