//! Closed-form Gaussian multisource exchangeability model.
//!
//! Every source contributes its sample mean with known sampling precision
//! `tau = n / sd^2`. Under model `k` the primary and the supplements marked
//! exchangeable share one mean with a flat prior; excluded supplements keep
//! their own mean (also flat) and drop out of the marginal likelihood.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{model_count, ModelConfiguration, SourceSummary, DEFAULT_MAX_SUPPLEMENTS};

/// Tolerance on `sum(values) == 1` for externally supplied priors.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-12;

/// A probability vector over the `2^H` models in canonical order. Used both
/// for priors and for posterior model weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorVector {
    width: usize,
    values: Vec<f64>,
}

/// Posterior model weights share the prior's representation.
pub type ModelWeights = PriorVector;

impl PriorVector {
    /// Uniform prior `1 / 2^H`.
    pub fn flat(width: usize) -> Result<Self> {
        let count = model_count(width, DEFAULT_MAX_SUPPLEMENTS)?;
        Ok(Self {
            width,
            values: vec![1.0 / count as f64; count],
        })
    }

    /// Validates a caller-supplied vector.
    pub fn from_values(width: usize, values: Vec<f64>) -> Result<Self> {
        let count = model_count(width, DEFAULT_MAX_SUPPLEMENTS)?;
        if values.len() != count {
            return Err(Error::Validation(format!(
                "prior has {} entries, expected 2^{width} = {count}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(
                "prior entries must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(Error::Validation(format!("prior sums to {sum}, not 1")));
        }
        Ok(Self { width, values })
    }

    /// Normalizes nonnegative masses; used for internally constructed vectors.
    pub(crate) fn normalized(width: usize, mut values: Vec<f64>) -> Self {
        let sum: f64 = values.iter().sum();
        for v in &mut values {
            *v /= sum;
        }
        Self { width, values }
    }

    /// Wraps values already known to form a probability vector.
    pub(crate) fn from_parts(width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), 1usize << width);
        Self { width, values }
    }

    /// Point mass on one model.
    pub fn point_mass(model: ModelConfiguration) -> Result<Self> {
        let count = model_count(model.width(), DEFAULT_MAX_SUPPLEMENTS)?;
        let mut values = vec![0.0; count];
        values[model.index()] = 1.0;
        Ok(Self {
            width: model.width(),
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, model: ModelConfiguration) -> f64 {
        self.values[model.index()]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Marginal probability that each supplement is in the pooled group.
    pub fn inclusion_probabilities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        for (k, w) in self.values.iter().enumerate() {
            for (h, slot) in out.iter_mut().enumerate() {
                if (k >> h) & 1 == 1 {
                    *slot += w;
                }
            }
        }
        out
    }

    pub fn models(&self) -> impl Iterator<Item = (ModelConfiguration, f64)> + '_ {
        let width = self.width;
        self.values.iter().enumerate().map(move |(k, &v)| {
            (
                ModelConfiguration::new(k, width).expect("index below 2^width"),
                v,
            )
        })
    }
}

fn check_model(supplements: &[SourceSummary], model: &ModelConfiguration) -> Result<()> {
    if supplements.len() != model.width() {
        return Err(Error::Validation(format!(
            "model covers {} supplements but {} were given",
            model.width(),
            supplements.len()
        )));
    }
    Ok(())
}

/// Precision-weighted summary of the pooled group under one model.
struct PooledGroup {
    members: usize,
    total_precision: f64,
    weighted_mean: f64,
    log_precision_sum: f64,
    quadratic: f64,
}

fn pooled_group(
    primary: &SourceSummary,
    supplements: &[SourceSummary],
    model: &ModelConfiguration,
) -> PooledGroup {
    let members = || std::iter::once(primary).chain(model.included().map(|h| &supplements[h]));
    let mut count = 0usize;
    let mut total = 0.0;
    let mut weighted = 0.0;
    let mut log_sum = 0.0;
    for s in members() {
        let tau = s.precision();
        count += 1;
        total += tau;
        weighted += tau * s.mean();
        log_sum += tau.ln();
    }
    let mean = weighted / total;
    // sum tau_i (y_i - mean)^2 equals sum tau_i y_i^2 - (sum tau_i y_i)^2 / sum tau_i
    // without the cancellation.
    let quadratic = members()
        .map(|s| s.precision() * (s.mean() - mean) * (s.mean() - mean))
        .sum();
    PooledGroup {
        members: count,
        total_precision: total,
        weighted_mean: mean,
        log_precision_sum: log_sum,
        quadratic,
    }
}

/// `log m(model)` up to a constant shared by all models.
pub fn log_marginal_likelihood(
    primary: &SourceSummary,
    supplements: &[SourceSummary],
    model: &ModelConfiguration,
) -> Result<f64> {
    check_model(supplements, model)?;
    let g = pooled_group(primary, supplements, model);
    let m = g.members as f64;
    Ok(-0.5 * (m - 1.0) * (2.0 * PI).ln() + 0.5 * g.log_precision_sum
        - 0.5 * g.total_precision.ln()
        - 0.5 * g.quadratic)
}

/// Conditional posterior `(mean, variance)` of the primary mean under one model.
pub fn conditional_posterior(
    primary: &SourceSummary,
    supplements: &[SourceSummary],
    model: &ModelConfiguration,
) -> Result<(f64, f64)> {
    check_model(supplements, model)?;
    let g = pooled_group(primary, supplements, model);
    Ok((g.weighted_mean, 1.0 / g.total_precision))
}

/// `log(sum(exp(xs)))`, returning `-inf` when every term is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn check_prior(supplements: &[SourceSummary], prior: &PriorVector) -> Result<()> {
    if prior.width() != supplements.len() {
        return Err(Error::Validation(format!(
            "prior covers {} supplements but {} were given",
            prior.width(),
            supplements.len()
        )));
    }
    Ok(())
}

/// Posterior model weights `w_k ∝ m(k) * prior_k`.
pub fn posterior_weights(
    primary: &SourceSummary,
    supplements: &[SourceSummary],
    prior: &PriorVector,
) -> Result<ModelWeights> {
    check_prior(supplements, prior)?;
    let width = supplements.len();
    let mut log_marginals = Vec::with_capacity(prior.len());
    for (k, &p) in prior.values().iter().enumerate() {
        if p > 0.0 {
            let model = ModelConfiguration::new(k, width)?;
            log_marginals.push(log_marginal_likelihood(primary, supplements, &model)?);
        } else {
            log_marginals.push(f64::NEG_INFINITY);
        }
    }
    weights_from_log_marginals(&log_marginals, prior)
}

/// Combines per-model log marginal likelihoods with a prior, normalizing
/// with log-sum-exp.
pub fn weights_from_log_marginals(
    log_marginals: &[f64],
    prior: &PriorVector,
) -> Result<ModelWeights> {
    if log_marginals.len() != prior.len() {
        return Err(Error::Validation(format!(
            "{} log marginals for {} models",
            log_marginals.len(),
            prior.len()
        )));
    }
    let log_post: Vec<f64> = log_marginals
        .iter()
        .zip(prior.values())
        .map(|(&lm, &p)| if p > 0.0 { lm + p.ln() } else { f64::NEG_INFINITY })
        .collect();
    let norm = log_sum_exp(&log_post);
    if !norm.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    let values: Vec<f64> = log_post.iter().map(|l| (l - norm).exp()).collect();
    // The shifted exponentials sum to 1 only up to rounding.
    Ok(PriorVector::normalized(prior.width(), values))
}

/// One Gaussian component of the model-averaged posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// The full posterior of the primary mean: one component per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMixture {
    width: usize,
    components: Vec<MixtureComponent>,
}

impl PosteriorMixture {
    pub fn new(width: usize, components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Validation("mixture has no components".into()));
        }
        if components
            .iter()
            .any(|c| !(c.variance > 0.0) || !(0.0..=1.0).contains(&c.weight))
        {
            return Err(Error::Validation(
                "mixture components need weights in [0, 1] and positive variances".into(),
            ));
        }
        Ok(Self { width, components })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn weights(&self) -> ModelWeights {
        PriorVector {
            width: self.width,
            values: self.components.iter().map(|c| c.weight).collect(),
        }
    }

    pub fn weight_of(&self, model: &ModelConfiguration) -> f64 {
        self.components[model.index()].weight
    }

    pub fn moments(&self) -> (f64, f64) {
        mixture_moments(self)
    }
}

/// Composes [`posterior_weights`] and [`conditional_posterior`] over all models.
pub fn posterior_mixture(
    primary: &SourceSummary,
    supplements: &[SourceSummary],
    prior: &PriorVector,
) -> Result<PosteriorMixture> {
    let weights = posterior_weights(primary, supplements, prior)?;
    let mut components = Vec::with_capacity(weights.len());
    for (model, weight) in weights.models() {
        let (mean, variance) = conditional_posterior(primary, supplements, &model)?;
        components.push(MixtureComponent {
            weight,
            mean,
            variance,
        });
    }
    PosteriorMixture::new(supplements.len(), components)
}

/// Mean and variance of the mixture (law of total variance).
pub fn mixture_moments(mixture: &PosteriorMixture) -> (f64, f64) {
    let mean: f64 = mixture.components.iter().map(|c| c.weight * c.mean).sum();
    // sum w (s^2 + mu^2) - mean^2, evaluated in centered form.
    let variance: f64 = mixture
        .components
        .iter()
        .map(|c| c.weight * (c.variance + (c.mean - mean) * (c.mean - mean)))
        .sum();
    (mean, variance)
}

/// Effective supplemental sample size: extra primary-equivalent observations
/// implied by the posterior precision.
pub fn esss(posterior_variance: f64, primary: &SourceSummary) -> f64 {
    primary.variance() / posterior_variance - primary.n() as f64
}
