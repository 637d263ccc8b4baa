//! Selection bias: the primary is only observed above a threshold, which
//! inflates its sample mean. Compares naive, MEM and RBF estimates over a
//! few replications of the rho = 0.5 sub-scenario.

use rbf_mem::sim::metrics::{method_posterior, Method};
use rbf_mem::sim::truncated::acceptance_probability;
use rbf_mem::sim::{rep_rng, ScenarioConfig};
use rbf_mem::sim::generate::generate;

fn main() -> rbf_mem::Result<()> {
    let config = ScenarioConfig::preset("s3-gt0-rho05")?;
    let t = config.truncation;
    println!(
        "primary truncated {:?} {} (acceptance {:.3}), true mean {}",
        t.primary_side,
        t.primary_bound,
        acceptance_probability(config.mu0, 1.0, t.primary_bound, t.primary_side),
        config.mu0
    );
    println!("\nrep  primary_mean    naive      mem      rbf");
    let mut totals = [0.0; 3];
    let reps = 20;
    for rep in 0..reps {
        let g = generate(&config, &mut rep_rng(config.seed, rep))?;
        let mut row = Vec::new();
        for (i, method) in [Method::Naive, Method::Mem, Method::Rbf].into_iter().enumerate() {
            let (mean, _) = method_posterior(&g.dataset, method, &config.rbf)?.moments();
            totals[i] += (mean - g.truth_mean).abs();
            row.push(format!("{mean:+.4}"));
        }
        println!(
            "{rep:>3}  {:>+12.4}  {}",
            g.dataset.primary_summary().mean(),
            row.join("  ")
        );
    }
    let n = reps as f64;
    println!(
        "\nmean |bias|: naive {:.4}, mem {:.4}, rbf {:.4}",
        totals[0] / n,
        totals[1] / n,
        totals[2] / n
    );
    Ok(())
}
