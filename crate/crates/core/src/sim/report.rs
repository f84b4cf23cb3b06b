//! Text and JSON-lines rendering of simulation reports.

use std::fmt::Write as _;

use serde_json::json;

use crate::method::Method;
use crate::sim::{Flavor, SimulationReport};

fn percent(q: f64) -> String {
    format!("{:.0}%", 100.0 * q)
}

fn corr_label(r: &SimulationReport) -> String {
    match (r.scenario.spearman_target, r.scenario.params.flavor) {
        (Some(t), _) => format!("R={t:.2}"),
        (None, Flavor::DiscreteInterval { .. }) => format!("rho={:.2}*", r.latent_rho),
        (None, Flavor::Continuous) => format!("{:.2}", r.latent_rho),
    }
}

/// Aligned table: one row per report, one rejection-rate column per method.
pub fn render_table(reports: &[SimulationReport]) -> String {
    let mut methods: Vec<Method> = Vec::new();
    for r in reports {
        for m in &r.scenario.methods {
            if !methods.contains(m) {
                methods.push(*m);
            }
        }
    }
    let mut header = vec![
        "scenario".to_string(),
        "corr".into(),
        "missing".into(),
        "n".into(),
    ];
    header.extend(methods.iter().map(Method::to_string));

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![
                r.scenario.name.clone(),
                corr_label(r),
                format!(
                    "({}, {})",
                    percent(r.scenario.missing.q1),
                    percent(r.scenario.missing.q2)
                ),
                r.scenario.n.to_string(),
            ];
            row.extend(methods.iter().map(|m| match r.rate(m) {
                None => "".to_string(),
                Some(rate) => match rate.rate {
                    None => "n/a".to_string(),
                    Some(v) if rate.failures > 0 => format!("{v:.3}({})", rate.failures),
                    Some(v) => format!("{v:.3}"),
                },
            }));
            row
        })
        .collect();

    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in std::iter::once(&header).chain(rows.iter()) {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    if reports
        .iter()
        .any(|r| r.methods.iter().any(|m| m.failures > 0))
    {
        out.push_str("(k) = replicates where the method could not be computed\n");
    }
    out
}

/// One JSON object per scenario and method.
pub fn render_records(reports: &[SimulationReport]) -> String {
    let mut out = String::new();
    for r in reports {
        for m in &r.methods {
            let rec = json!({
                "scenario": r.scenario.name,
                "n": r.scenario.n,
                "latent_rho": r.latent_rho,
                "spearman_target": r.scenario.spearman_target,
                "q1": r.scenario.missing.q1,
                "q2": r.scenario.missing.q2,
                "mu1": r.scenario.params.mu1,
                "mu2": r.scenario.params.mu2,
                "alpha": r.scenario.alpha,
                "seed": r.scenario.seed,
                "method": m.method,
                "rate": m.rate,
                "mc_se": m.mc_se,
                "rejections": m.rejections,
                "evaluated": m.evaluated,
                "failures": m.failures,
                "realized_rho": r.realized.rho,
                "realized_spearman": r.realized.spearman,
            });
            let _ = writeln!(out, "{rec}");
        }
    }
    out
}
