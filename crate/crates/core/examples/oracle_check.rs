//! Compares the closed-form marginal likelihood and mixture moments with
//! brute-force quadrature on one instance, then runs the quick oracle suite.

use rbf_mem::mem::{log_marginal_likelihood, posterior_mixture, PriorVector};
use rbf_mem::model::{enumerate_models, SourceSummary};
use rbf_mem::oracle::{marginal_likelihood_quadrature, marginal_spec, posterior_grid, posterior_spec};
use rbf_mem::validate::{run_validation, ValidateOptions};

fn main() -> rbf_mem::Result<()> {
    let primary = SourceSummary::new(10, 0.2, 1.0)?;
    let supplements = [SourceSummary::new(6, 0.5, 0.8)?, SourceSummary::new(14, 1.7, 1.3)?];

    println!("model  closed-form log m   quadrature log m   rel. diff");
    for model in enumerate_models(supplements.len())? {
        let closed = log_marginal_likelihood(&primary, &supplements, &model)?;
        let spec = marginal_spec(&primary, &supplements, &model)?;
        let quad = marginal_likelihood_quadrature(&primary, &supplements, &model, &spec)?;
        println!(
            "{:?}  {closed:>17.10}  {quad:>17.10}  {:.2e}",
            model.inclusion(),
            ((closed - quad).exp() - 1.0).abs()
        );
    }

    let prior = PriorVector::from_values(2, vec![0.1, 0.4, 0.2, 0.3])?;
    let (mean, var) = posterior_mixture(&primary, &supplements, &prior)?.moments();
    let spec = posterior_spec(&primary, &supplements)?;
    let (gm, gv) = posterior_grid(&primary, &supplements, &prior, &spec)?;
    println!("\nmixture mean {mean:.10} vs grid {gm:.10}");
    println!("mixture var  {var:.10} vs grid {gv:.10}");

    println!("\nquick oracle suite:");
    let report = run_validation(&ValidateOptions::quick())?;
    print!("{}", rbf_mem::commands::render_validation(&report));
    Ok(())
}
