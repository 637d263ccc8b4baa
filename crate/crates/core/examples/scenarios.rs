//! Runs each simulation preset for a modest number of replications and
//! prints the RBF-versus-MEM changes in median metrics.
//!
//! ```text
//! cargo run --release --example scenarios -- 200
//! ```

use rbf_mem::sim::{aggregate, run_scenario, ScenarioConfig};

fn pct(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:+.1}%"))
}

fn main() -> rbf_mem::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(100);
    let width = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!(
        "{:<20} {:>10} {:>10} {:>10} {:>12}",
        "preset", "variance", "|bias|", "sq_error", "correct_w"
    );
    for name in ScenarioConfig::preset_names() {
        let config = ScenarioConfig {
            reps,
            ..ScenarioConfig::preset(&name)?
        };
        let records = run_scenario(&config, width)?;
        let metrics: Vec<_> = records.into_iter().flat_map(|r| r.metrics).collect();
        let summary = aggregate(&metrics)?;
        let Some(c) = summary.rbf_vs_mem else { continue };
        println!(
            "{name:<20} {:>10} {:>10} {:>10} {:>12}",
            pct(c.posterior_variance),
            pct(c.bias),
            pct(c.squared_error),
            pct(c.correct_model_weight)
        );
    }
    Ok(())
}
