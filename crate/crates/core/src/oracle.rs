//! Brute-force numerical checks for the closed-form math: composite Simpson
//! quadrature over `θ`, a grid posterior, and Monte Carlo Jeffreys divergence.
//!
//! Nothing here calls into the closed forms it validates.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mem::{log_sum_exp, PriorVector};
use crate::model::{ModelConfiguration, SourceSummary};
use crate::prior::GaussianFit;

/// Minimum node count for a [`QuadratureSpec`].
pub const MIN_NODES: usize = 101;
/// Node count used by automatic specs unless the integrand needs more.
pub const DEFAULT_NODES: usize = 1001;
/// Grid points per posterior standard deviation in automatic specs.
pub const NODES_PER_SD: f64 = 8.0;
/// Coverage half-width in standard errors.
pub const COVERAGE_SE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub lower: f64,
    pub upper: f64,
    pub nodes: usize,
}

impl QuadratureSpec {
    pub fn new(lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Validation(format!(
                "quadrature needs finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        if nodes < MIN_NODES || nodes % 2 == 0 {
            return Err(Error::Validation(format!(
                "quadrature needs an odd node count >= {MIN_NODES}, got {nodes}"
            )));
        }
        Ok(Self {
            lower,
            upper,
            nodes,
        })
    }

    /// Bounds at the extreme means ± 10 of the largest standard error, with a
    /// step of at most `narrowest_sd / 8`.
    pub fn covering(sources: &[&SourceSummary], narrowest_sd: f64) -> Result<Self> {
        let max_se = sources
            .iter()
            .map(|s| s.mean_variance().sqrt())
            .fold(0.0, f64::max);
        let lo = sources.iter().map(|s| s.mean()).fold(f64::INFINITY, f64::min);
        let hi = sources
            .iter()
            .map(|s| s.mean())
            .fold(f64::NEG_INFINITY, f64::max);
        let lower = lo - COVERAGE_SE * max_se;
        let upper = hi + COVERAGE_SE * max_se;
        let needed = ((upper - lower) / (narrowest_sd / NODES_PER_SD)).ceil() as usize + 1;
        let nodes = needed.max(DEFAULT_NODES) | 1;
        Self::new(lower, upper, nodes)
    }

    /// The same bounds with twice the intervals.
    pub fn refined(&self) -> Self {
        Self {
            nodes: 2 * self.nodes - 1,
            ..*self
        }
    }

    pub fn step(&self) -> f64 {
        (self.upper - self.lower) / (self.nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.step()
    }

    fn simpson_weight(&self, i: usize) -> f64 {
        let w = if i == 0 || i == self.nodes - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w * self.step() / 3.0
    }

    /// Allows a few ulps of slack: the covering bounds use the largest
    /// member se, which equals the pooled se only up to rounding for a
    /// single-member group.
    fn check_covers(&self, need_lower: f64, need_upper: f64) -> Result<()> {
        let slack = 1e-12 * (self.upper - self.lower);
        if self.lower > need_lower + slack || self.upper < need_upper - slack {
            return Err(Error::Coverage {
                lower: self.lower,
                upper: self.upper,
                need_lower,
                need_upper,
            });
        }
        Ok(())
    }
}

/// `log ∫ exp(f(θ)) dθ` by composite Simpson on log-scale values.
fn log_simpson(spec: &QuadratureSpec, log_values: &[f64]) -> f64 {
    let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_values
        .iter()
        .enumerate()
        .map(|(i, lv)| spec.simpson_weight(i) * (lv - max).exp())
        .sum();
    max + sum.ln()
}

fn log_normal_density(x: f64, mean: f64, variance: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * variance).ln() - (x - mean) * (x - mean) / (2.0 * variance)
}

fn group<'a>(
    primary: &'a SourceSummary,
    supplements: &'a [SourceSummary],
    model: &ModelConfiguration,
) -> Result<Vec<&'a SourceSummary>> {
    if model.width() != supplements.len() {
        return Err(Error::Validation(format!(
            "model covers {} supplements but {} were given",
            model.width(),
            supplements.len()
        )));
    }
    Ok(std::iter::once(primary)
        .chain(model.included().map(|h| &supplements[h]))
        .collect())
}

fn log_likelihood_at(members: &[&SourceSummary], theta: f64) -> f64 {
    members
        .iter()
        .map(|s| log_normal_density(s.mean(), theta, s.mean_variance()))
        .sum()
}

fn pooled_se(members: &[&SourceSummary]) -> f64 {
    members
        .iter()
        .map(|s| 1.0 / s.mean_variance())
        .sum::<f64>()
        .recip()
        .sqrt()
}

/// An automatic spec for one model's group.
pub fn marginal_spec(
    primary: &SourceSummary,
    supplements: &[SourceSummary],
    model: &ModelConfiguration,
) -> Result<QuadratureSpec> {
    let members = group(primary, supplements, model)?;
    QuadratureSpec::covering(&members, pooled_se(&members))
}

/// `log ∫ Π_{i∈G} N(ȳ_i; θ, σ̂_i²/n_i) dθ` by quadrature.
pub fn marginal_likelihood_quadrature(
    primary: &SourceSummary,
    supplements: &[SourceSummary],
    model: &ModelConfiguration,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let members = group(primary, supplements, model)?;
    let se = pooled_se(&members);
    let lo = members.iter().map(|s| s.mean()).fold(f64::INFINITY, f64::min);
    let hi = members
        .iter()
        .map(|s| s.mean())
        .fold(f64::NEG_INFINITY, f64::max);
    spec.check_covers(lo - COVERAGE_SE * se, hi + COVERAGE_SE * se)?;
    let values: Vec<f64> = (0..spec.nodes)
        .map(|i| log_likelihood_at(&members, spec.node(i)))
        .collect();
    Ok(log_simpson(spec, &values))
}

/// An automatic spec for the full model-averaged posterior.
pub fn posterior_spec(
    primary: &SourceSummary,
    supplements: &[SourceSummary],
) -> Result<QuadratureSpec> {
    let all: Vec<&SourceSummary> = std::iter::once(primary).chain(supplements).collect();
    QuadratureSpec::covering(&all, pooled_se(&all))
}

/// Mean and variance of the model-averaged posterior of `θ`, from the
/// unnormalized density `Σ_k prior_k Π_{i∈G_k} N(ȳ_i; θ, v_i)` on a grid.
pub fn posterior_grid(
    primary: &SourceSummary,
    supplements: &[SourceSummary],
    prior: &PriorVector,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    if prior.width() != supplements.len() {
        return Err(Error::Validation(format!(
            "prior covers {} supplements but {} were given",
            prior.width(),
            supplements.len()
        )));
    }
    let all: Vec<&SourceSummary> = std::iter::once(primary).chain(supplements).collect();
    let lo = all.iter().map(|s| s.mean()).fold(f64::INFINITY, f64::min);
    let hi = all.iter().map(|s| s.mean()).fold(f64::NEG_INFINITY, f64::max);
    let widest = all
        .iter()
        .map(|s| s.mean_variance().sqrt())
        .fold(0.0, f64::max);
    spec.check_covers(lo - COVERAGE_SE * widest, hi + COVERAGE_SE * widest)?;

    let groups: Vec<(f64, Vec<&SourceSummary>)> = prior
        .models()
        .filter(|(_, p)| *p > 0.0)
        .map(|(m, p)| Ok((p.ln(), group(primary, supplements, &m)?)))
        .collect::<Result<_>>()?;
    let log_density: Vec<f64> = (0..spec.nodes)
        .map(|i| {
            let theta = spec.node(i);
            let terms: Vec<f64> = groups
                .iter()
                .map(|(lp, members)| lp + log_likelihood_at(members, theta))
                .collect();
            log_sum_exp(&terms)
        })
        .collect();
    let max = log_density
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let density: Vec<f64> = log_density.iter().map(|l| (l - max).exp()).collect();
    let integrate = |f: &dyn Fn(usize) -> f64| -> f64 {
        (0..spec.nodes).map(|i| spec.simpson_weight(i) * f(i)).sum()
    };
    let z = integrate(&|i| density[i]);
    let mean = integrate(&|i| spec.node(i) * density[i]) / z;
    let variance = integrate(&|i| {
        let d = spec.node(i) - mean;
        d * d * density[i]
    }) / z;
    Ok((mean, variance))
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

impl McEstimate {
    /// Whether `target` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Sampling estimate of `KL(p‖h) + KL(h‖p)` from `draws` samples of each fit.
pub fn monte_carlo_kl<R: Rng + ?Sized>(
    fit_p: GaussianFit,
    fit_h: GaussianFit,
    draws: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if draws < 2 {
        return Err(Error::Validation("need at least 2 draws".into()));
    }
    let log_ratio = |x: f64, a: GaussianFit, b: GaussianFit| {
        log_normal_density(x, a.mean, a.sd * a.sd) - log_normal_density(x, b.mean, b.sd * b.sd)
    };
    let sample = |fit: GaussianFit, other: GaussianFit, rng: &mut R| -> Result<Vec<f64>> {
        let dist = Normal::new(fit.mean, fit.sd)
            .map_err(|e| Error::Validation(format!("gaussian fit: {e}")))?;
        Ok((0..draws)
            .map(|_| log_ratio(dist.sample(rng), fit, other))
            .collect())
    };
    let (m1, v1) = mean_and_var(&sample(fit_p, fit_h, rng)?);
    let (m2, v2) = mean_and_var(&sample(fit_h, fit_p, rng)?);
    Ok(McEstimate {
        value: m1 + m2,
        std_error: ((v1 + v2) / draws as f64).sqrt(),
    })
}
