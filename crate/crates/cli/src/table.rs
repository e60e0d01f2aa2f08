use std::fmt::Write;

use multidx_core::metrics::MetricsReport;
use multidx_core::pipeline::ExperimentReport;

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{:.2}", 100.0 * x))
}

fn metric_cells(m: &MetricsReport) -> [String; 4] {
    [pct(m.accuracy), pct(m.precision), pct(m.recall), pct(m.f1)]
}

/// Held-out metrics in percent. One report gives one row per learner; a
/// resolution sweep gives one row per image side.
pub fn render_table(reports: &[ExperimentReport]) -> String {
    let mut out = String::new();
    let Some(first) = reports.first() else { return out };
    let header = ["Accuracy", "Precision", "Recall", "F1-score"];
    if reports.len() == 1 {
        let r = first;
        let _ = writeln!(
            out,
            "{} ({}): train {}, validation {}, test {}",
            r.experiment, r.mode, r.n_train, r.n_validation, r.n_test
        );
        let _ = writeln!(out, "{:<12}{:>10}{:>11}{:>9}{:>10}", "Model", header[0], header[1], header[2], header[3]);
        for row in &r.rows {
            let c = metric_cells(&row.metrics);
            let _ = writeln!(out, "{:<12}{:>10}{:>11}{:>9}{:>10}", row.learner, c[0], c[1], c[2], c[3]);
        }
    } else {
        let _ = writeln!(out, "{} ({}): resolution sweep", first.experiment, first.mode);
        let _ = writeln!(
            out,
            "{:<12}{:>7}{:>7}{:>10}{:>11}{:>9}{:>10}",
            "Resolution", "Train", "Test", header[0], header[1], header[2], header[3]
        );
        for r in reports {
            let side = r.resolution.map_or_else(|| "-".to_string(), |s| format!("{s}x{s}"));
            let c = metric_cells(r.model_metrics());
            let _ = writeln!(
                out,
                "{:<12}{:>7}{:>7}{:>10}{:>11}{:>9}{:>10}",
                side, r.n_train, r.n_test, c[0], c[1], c[2], c[3]
            );
        }
    }
    out
}
