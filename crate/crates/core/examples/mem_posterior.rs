//! Closed-form MEM posterior for a primary source and three supplements.
//!
//! Prints every model's weight and conditional moments, then the mixture
//! moments and effective supplemental sample size.

use rbf_mem::mem::{conditional_posterior, esss, posterior_mixture, PriorVector};
use rbf_mem::model::{ModelConfiguration, SourceSummary};

fn main() -> rbf_mem::Result<()> {
    // Two-source case that can be checked by hand: pooling n=10 at 0.3 with
    // n=5 at 1.0 (unit sd) gives mean 8/15 and variance 1/15.
    let primary = SourceSummary::new(10, 0.3, 1.0)?;
    let one = [SourceSummary::new(5, 1.0, 1.0)?];
    let pooled = ModelConfiguration::from_inclusion(&[true])?;
    let (mean, var) = conditional_posterior(&primary, &one, &pooled)?;
    println!("pooled model: mean {mean:.6} (8/15 = {:.6}), variance {var:.6}", 8.0 / 15.0);

    let supplements = [
        SourceSummary::new(12, 0.35, 1.1)?,
        SourceSummary::new(8, 0.9, 0.9)?,
        SourceSummary::new(15, 2.4, 1.0)?,
    ];
    let prior = PriorVector::flat(supplements.len())?;
    let mixture = posterior_mixture(&primary, &supplements, &prior)?;

    println!("\nmodel  weight     mean      variance");
    for (c, (model, _)) in mixture.components().iter().zip(prior.models()) {
        let label: String = model
            .inclusion()
            .iter()
            .map(|&i| if i { '1' } else { '0' })
            .collect();
        println!("{label}    {:.5}  {:+.5}  {:.6}", c.weight, c.mean, c.variance);
    }
    let (mean, variance) = mixture.moments();
    println!("\nposterior mean {mean:.5}, variance {variance:.6}");
    println!("ESSS {:.3}", esss(variance, &primary));
    Ok(())
}
