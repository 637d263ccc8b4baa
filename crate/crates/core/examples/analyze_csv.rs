//! Subsample-and-repeat analysis of a long-format CSV, with the average
//! posterior inclusion weight of every supplement for each primary.
//!
//! ```text
//! cargo run --release --example analyze_csv -- data/app_fixture.csv 100
//! ```

use rbf_mem::analyze::{run_analysis, AnalyzeOptions, PrimarySelection};
use rbf_mem::ingest::load_long_csv;
use rbf_mem::report::SummaryReport;

fn main() -> rbf_mem::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/app_fixture.csv").into());
    let reps = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);

    let data = load_long_csv(&path)?;
    let names: Vec<&str> = data.characteristics.iter().map(|c| c.name.as_str()).collect();
    println!("{} sources, characteristics {names:?}", data.len());

    let options = AnalyzeOptions {
        reps,
        ..AnalyzeOptions::new(PrimarySelection::All)
    };
    let result = run_analysis(&data, &options, 1)?;

    for matrix in &result.weights {
        println!("\n{} inclusion weights (row: supplement, column: primary)", matrix.method);
        print!("     ");
        for p in &matrix.primaries {
            print!("{p:>5}");
        }
        println!();
        for (id, row) in matrix.ids.iter().zip(&matrix.values) {
            print!("{id:>5}");
            for v in row {
                print!("{v:>5.2}");
            }
            println!();
        }
    }

    let summary = SummaryReport::new("analyze", options.seed, reps, &options, &result.metrics())?;
    print!("\n{}", rbf_mem::commands::render_summary(&summary));
    Ok(())
}
