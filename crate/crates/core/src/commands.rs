//! The `analyze`, `simulate` and `validate` workflows, writing reports to disk.

use std::path::Path;

use crate::analyze::{run_analysis, AnalyzeOptions, AnalyzeResult};
use crate::error::{Error, Result};
use crate::ingest::load_long_csv;
use crate::report::{
    analyze_rows, simulate_rows, write_reports, write_weight_matrices, SummaryReport, PER_REP_FILE,
    SUMMARY_FILE, TIDY_FILE,
};
use crate::sim::{run_scenario, RepRecord, ScenarioConfig};
use crate::validate::{run_validation, ValidateOptions, ValidationReport};

/// Refuses to write a report over the input file.
fn guard_input(input: &Path, out: &Path) -> Result<()> {
    let Ok(input) = input.canonicalize() else {
        return Ok(());
    };
    for name in [PER_REP_FILE, TIDY_FILE, SUMMARY_FILE, "weights_mem.csv", "weights_rbf.csv"] {
        if out.join(name).canonicalize().is_ok_and(|p| p == input) {
            return Err(Error::Config(format!(
                "output {} would overwrite the input file",
                out.join(name).display()
            )));
        }
    }
    Ok(())
}

pub fn simulate(
    config: &ScenarioConfig,
    width: usize,
    out: &Path,
) -> Result<(Vec<RepRecord>, SummaryReport)> {
    let records = run_scenario(config, width)?;
    let rows = simulate_rows(&records);
    let metrics: Vec<_> = rows.iter().map(|r| r.metrics.clone()).collect();
    let summary = SummaryReport::new("simulate", config.seed, config.reps, config, &metrics)?;
    write_reports(out, &rows, &summary)?;
    Ok((records, summary))
}

pub fn analyze(
    data: &Path,
    options: &AnalyzeOptions,
    width: usize,
    out: &Path,
) -> Result<(AnalyzeResult, SummaryReport)> {
    guard_input(data, out)?;
    let collection = load_long_csv(data)?;
    let result = run_analysis(&collection, options, width)?;
    let summary = SummaryReport::new(
        "analyze",
        options.seed,
        options.reps,
        options,
        &result.metrics(),
    )?
    .with_primaries(&result)?;
    write_reports(out, &analyze_rows(&result), &summary)?;
    write_weight_matrices(out, &result.weights)?;
    Ok((result, summary))
}

pub fn validate(options: &ValidateOptions) -> Result<ValidationReport> {
    run_validation(options)
}

/// A compact text table of a summary's medians.
pub fn render_summary(summary: &SummaryReport) -> String {
    let mut s = format!(
        "{:<6} {:>12} {:>12} {:>12} {:>10} {:>12} {:>9}\n",
        "method", "post_var", "|bias|", "sq_error", "rmse", "correct_w", "esss"
    );
    for (name, m) in &summary.overall.methods {
        let cmw = m
            .correct_model_weight
            .map_or("-".to_string(), |q| format!("{:.4e}", q.median));
        s.push_str(&format!(
            "{:<6} {:>12.5} {:>12.5} {:>12.5} {:>10.5} {:>12} {:>9.3}\n",
            name,
            m.posterior_variance.median,
            m.abs_bias.median,
            m.squared_error.median,
            m.rmse,
            cmw,
            m.esss.median
        ));
    }
    if let Some(c) = &summary.overall.rbf_vs_mem {
        let pct = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:+.1}%"));
        s.push_str(&format!(
            "rbf vs mem (medians): variance {}, |bias| {}, squared error {}, correct-model weight {}, esss {}\n",
            pct(c.posterior_variance),
            pct(c.bias),
            pct(c.squared_error),
            pct(c.correct_model_weight),
            pct(c.esss)
        ));
    }
    s
}

/// One line per check.
pub fn render_validation(report: &ValidationReport) -> String {
    report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {:<28} instances={:<4} failures={:<3} worst={:.3e} tolerance={:.0e}\n",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.instances,
                c.failures,
                c.worst,
                c.tolerance
            )
        })
        .collect()
}
