//! The oracle suite behind `rbf validate`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mem::{
    conditional_posterior, log_marginal_likelihood, mixture_moments, weights_from_log_marginals,
    MixtureComponent, PosteriorMixture, PriorVector,
};
use crate::model::{enumerate_models, ModelConfiguration, SourceSummary};
use crate::oracle::{
    marginal_likelihood_quadrature, marginal_spec, monte_carlo_kl, posterior_grid, posterior_spec,
};
use crate::prior::{distance_prior_from_distances, jeffreys_divergence, GaussianFit};
use crate::sim::{parallel_reps, rep_rng};

pub const MARGINAL_TOLERANCE: f64 = 1e-8;
pub const REFINEMENT_TOLERANCE: f64 = 1e-10;
pub const MOMENT_TOLERANCE: f64 = 1e-6;
pub const MC_STANDARD_ERRORS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    pub instances: usize,
    pub mc_draws: usize,
    pub seed: u64,
    pub width: usize,
    /// Relative error injected into the closed-form marginal likelihood of
    /// every nonnull model. Zero for a real run; nonzero is a negative control.
    pub perturbation: f64,
}

impl ValidateOptions {
    pub fn full() -> Self {
        Self {
            instances: 200,
            mc_draws: 20_000,
            seed: 7,
            width: 1,
            perturbation: 0.0,
        }
    }

    pub fn quick() -> Self {
        Self {
            instances: 40,
            mc_draws: 5_000,
            ..Self::full()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    /// Largest observed error, in the check's own units.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// A random summary in the validated range: n ≤ 20, unit-scale means and sds.
pub fn random_summary<R: Rng + ?Sized>(rng: &mut R) -> SourceSummary {
    let n = rng.random_range(2..=20);
    let mean: f64 = rng.sample(StandardNormal);
    let sd = Uniform::new(0.3, 2.0).expect("valid range").sample(rng);
    SourceSummary::new(n, mean, sd).expect("finite by construction")
}

/// A random primary with 1..=4 supplements.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> (SourceSummary, Vec<SourceSummary>) {
    let h = rng.random_range(1..=4);
    let primary = random_summary(rng);
    let supplements = (0..h).map(|_| random_summary(rng)).collect();
    (primary, supplements)
}

/// A random prior with every entry positive.
pub fn random_prior<R: Rng + ?Sized>(width: usize, rng: &mut R) -> Result<PriorVector> {
    let raw: Vec<f64> = (0..1usize << width)
        .map(|_| rng.sample::<f64, _>(Exp1) + 1e-3)
        .collect();
    let total: f64 = raw.iter().sum();
    PriorVector::from_values(width, raw.iter().map(|x| x / total).collect())
}

fn perturbed_log_marginal(
    p: &SourceSummary,
    s: &[SourceSummary],
    model: &ModelConfiguration,
    perturbation: f64,
) -> Result<f64> {
    let lm = log_marginal_likelihood(p, s, model)?;
    Ok(if model.is_null() {
        lm
    } else {
        lm + perturbation.ln_1p()
    })
}

struct Outcome {
    marginal: f64,
    refinement: f64,
    mean: f64,
    variance: f64,
    jeffreys: (bool, f64),
}

fn run_instance(opts: &ValidateOptions, index: usize) -> Result<Outcome> {
    let mut rng = rep_rng(opts.seed, index as u64);
    let (p, s) = random_instance(&mut rng);
    let width = s.len();

    let mut marginal: f64 = 0.0;
    let mut log_marginals = Vec::new();
    let mut components = Vec::new();
    for model in enumerate_models(width)? {
        let closed = perturbed_log_marginal(&p, &s, &model, opts.perturbation)?;
        let spec = marginal_spec(&p, &s, &model)?;
        let quad = marginal_likelihood_quadrature(&p, &s, &model, &spec)?;
        marginal = marginal.max((closed - quad).exp_m1().abs());
        log_marginals.push(closed);
        let (mean, variance) = conditional_posterior(&p, &s, &model)?;
        components.push((mean, variance));
    }

    let full = ModelConfiguration::new((1 << width) - 1, width)?;
    let spec = marginal_spec(&p, &s, &full)?;
    let refinement = (marginal_likelihood_quadrature(&p, &s, &full, &spec)?
        - marginal_likelihood_quadrature(&p, &s, &full, &spec.refined())?)
    .abs();

    let prior = random_prior(width, &mut rng)?;
    let weights = weights_from_log_marginals(&log_marginals, &prior)?;
    let mixture = PosteriorMixture::new(
        width,
        weights
            .values()
            .iter()
            .zip(&components)
            .map(|(&weight, &(mean, variance))| MixtureComponent {
                weight,
                mean,
                variance,
            })
            .collect(),
    )?;
    let (m_closed, v_closed) = mixture_moments(&mixture);
    let (m_grid, v_grid) = posterior_grid(&p, &s, &prior, &posterior_spec(&p, &s)?)?;

    let fit = |rng: &mut rand_chacha::ChaCha8Rng| GaussianFit {
        mean: rng.sample(StandardNormal),
        sd: Uniform::new(0.5, 2.0).expect("valid range").sample(rng),
    };
    let (a, b) = (fit(&mut rng), fit(&mut rng));
    let closed = jeffreys_divergence(a, b) * (1.0 + opts.perturbation);
    let est = monte_carlo_kl(a, b, opts.mc_draws, &mut rng)?;
    let z = (est.value - closed).abs() / est.std_error;

    Ok(Outcome {
        marginal,
        refinement,
        mean: (m_closed - m_grid).abs(),
        variance: (v_closed - v_grid).abs(),
        jeffreys: (est.agrees_with(closed, MC_STANDARD_ERRORS), z),
    })
}

fn check(name: &str, tolerance: f64, errors: impl Iterator<Item = f64>) -> CheckResult {
    let errors: Vec<f64> = errors.collect();
    CheckResult {
        name: name.into(),
        instances: errors.len(),
        failures: errors.iter().filter(|&&e| !(e <= tolerance)).count(),
        worst: errors.iter().copied().fold(0.0, f64::max),
        tolerance,
    }
}

/// Exact checks of the two-supplement worked priors.
fn worked_priors(perturbation: f64) -> Result<CheckResult> {
    let cases: [(&[f64], [f64; 4]); 2] = [
        (&[1.0, 1.0], [0.25, 3.0 / 16.0, 3.0 / 16.0, 0.375]),
        (&[1.0, 3.0], [0.25, 9.0 / 28.0, 3.0 / 28.0, 9.0 / 28.0]),
    ];
    let mut errors = Vec::new();
    for (distances, expected) in cases {
        let prior = distance_prior_from_distances(&[distances], &[1.0], 2)?;
        for (got, want) in prior.values().iter().zip(expected) {
            errors.push((got * (1.0 + perturbation) - want).abs());
        }
    }
    Ok(check("worked-priors", 1e-15, errors.into_iter()))
}

/// Runs every oracle comparison.
pub fn run_validation(opts: &ValidateOptions) -> Result<ValidationReport> {
    let outcomes = parallel_reps(opts.instances, opts.width, |i| run_instance(opts, i))?;
    let jeffreys = CheckResult {
        name: "jeffreys-vs-monte-carlo".into(),
        instances: outcomes.len(),
        failures: outcomes.iter().filter(|o| !o.jeffreys.0).count(),
        worst: outcomes.iter().map(|o| o.jeffreys.1).fold(0.0, f64::max),
        tolerance: MC_STANDARD_ERRORS,
    };
    Ok(ValidationReport {
        checks: vec![
            check(
                "log-marginal-vs-quadrature",
                MARGINAL_TOLERANCE,
                outcomes.iter().map(|o| o.marginal),
            ),
            check(
                "quadrature-refinement",
                REFINEMENT_TOLERANCE,
                outcomes.iter().map(|o| o.refinement),
            ),
            check(
                "mixture-mean-vs-grid",
                MOMENT_TOLERANCE,
                outcomes.iter().map(|o| o.mean),
            ),
            check(
                "mixture-variance-vs-grid",
                MOMENT_TOLERANCE,
                outcomes.iter().map(|o| o.variance),
            ),
            jeffreys,
            worked_priors(opts.perturbation)?,
        ],
    })
}
