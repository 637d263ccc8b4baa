//! Auxiliary parameters correlated with the target through a correlation
//! matrix, compared under the Jeffreys and collapsed distance modes.

use rbf_mem::prior::{build_rbf_prior_detailed, ParameterMode, RbfConfig};
use rbf_mem::sim::generate::generate;
use rbf_mem::sim::{rep_rng, ScenarioConfig};

fn main() -> rbf_mem::Result<()> {
    let config = ScenarioConfig::preset("s2-example")?;
    let corr = config.correlation_matrix()?;
    println!("correlation matrix (target first):");
    for row in corr.rows() {
        println!("  {row:?}");
    }

    let generated = generate(&config, &mut rep_rng(config.seed, 0))?;
    let truth = generated.truth;
    println!(
        "\n{} supplements, true model {:?}",
        generated.dataset.width(),
        truth.inclusion()
    );
    for mode in [ParameterMode::Jeffreys, ParameterMode::Collapse] {
        let rbf = RbfConfig {
            parameter_mode: mode,
            ..config.rbf
        };
        let detail = build_rbf_prior_detailed(&generated.dataset, &rbf)?;
        println!("\n{mode:?}");
        for (b, l) in detail.blocks.iter().zip(&detail.lambdas) {
            let r = b.r.map_or("undefined".into(), |r| format!("{r:+.3}"));
            println!("  {:<4} r = {r}, lambda = {l:.3}", b.name);
        }
        let flat = 1.0 / detail.prior.len() as f64;
        println!(
            "  prior on the true model {:.3e} ({:.2}x flat)",
            detail.prior.get(truth),
            detail.prior.get(truth) / flat
        );
    }
    Ok(())
}
