//! Distance-embedded priors over exchangeability models.
//!
//! Auxiliary data (per-source characteristics and per-source parameter
//! samples) are turned into primary-to-supplement distances. Each block `l`
//! gets a weight `lambda_l = b_l * |r_l|` when its correlation with the target
//! clears the threshold `rho`. A nonnull model `k` with `m_k` pooled sources
//! then receives prior mass proportional to
//!
//! ```text
//! sum_l lambda_l * m_k^2 / sum_{h in k} d_lh
//! ```
//!
//! scaled to `(2^H - 1) / 2^H`; the null model keeps `1 / 2^H`. The result is
//! blended with the flat prior using the mixing weight `a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mem::PriorVector;
use crate::model::{model_count, Dataset, DEFAULT_MAX_SUPPLEMENTS, VARIANCE_FLOOR};

/// Floor on a model's summed distance, so exact ties stay finite.
pub const DISTANCE_FLOOR: f64 = 1e-12;

/// How per-block weights `b_l` are formed from pooled standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    /// `b_l = sd_l / sum_k sd_k`.
    #[default]
    SdRatio,
    /// `b_l = 1 / sd_l^2`.
    InverseVariance,
}

/// How auxiliary parameter samples become distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterMode {
    /// Per-source Gaussian fits compared with Jeffreys divergence.
    Jeffreys,
    /// Per-source sample means, then treated as characteristics.
    #[default]
    Collapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfConfig {
    /// Mixing weight on the distance-embedded prior.
    pub a: f64,
    /// Correlation threshold. `rho = 1` disables every block.
    pub rho: f64,
    pub weight_scheme: WeightScheme,
    pub parameter_mode: ParameterMode,
}

impl Default for RbfConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            rho: 0.3,
            weight_scheme: WeightScheme::SdRatio,
            parameter_mode: ParameterMode::Collapse,
        }
    }
}

impl RbfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.a) {
            return Err(Error::Validation(format!(
                "prior mixing weight a = {} is outside [0, 1]",
                self.a
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Validation(format!(
                "correlation threshold rho = {} is outside [0, 1]",
                self.rho
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Characteristic,
    CollapsedParameter,
    DistributionParameter,
}

/// Gaussian fit of one source's parameter samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianFit {
    /// Sample mean and MLE sd, with the variance floored.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let s = crate::model::sufficient_stats(samples)?;
        Ok(Self {
            mean: s.mean(),
            sd: s.sd(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockValues {
    Scalars(Vec<f64>),
    Fits(Vec<GaussianFit>),
}

/// One auxiliary block after normalization and distance computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryBlock {
    pub name: String,
    pub kind: BlockKind,
    /// Normalized scalars, or Gaussian fits for distribution blocks.
    pub values: BlockValues,
    /// Pooled sd over all sources, on the normalized scale.
    pub pooled_sd: f64,
    pub b: f64,
    /// Correlation with the per-source target means; `None` when undefined.
    pub r: Option<f64>,
    /// Distances from the primary to each supplement.
    pub distances: Vec<f64>,
    /// Zero range or undefined correlation: the block is dropped.
    pub degenerate: bool,
}

impl AuxiliaryBlock {
    /// A scalar block (characteristic or collapsed parameter). Values are
    /// pooled min-max normalized and compared with squared Euclidean distance.
    pub fn scalar(
        name: impl Into<String>,
        kind: BlockKind,
        raw: &[f64],
        target_means: &[f64],
    ) -> Result<Self> {
        if raw.len() != target_means.len() {
            return Err(Error::Validation(format!(
                "block has {} values for {} sources",
                raw.len(),
                target_means.len()
            )));
        }
        let (normalized, zero_range) = pooled_minmax_normalize(raw)?;
        let distances = normalized[1..]
            .iter()
            .map(|&v| sed_distance(normalized[0], v))
            .collect();
        let r = if zero_range {
            None
        } else {
            pearson_correlation(&normalized, target_means).ok()
        };
        Ok(Self {
            name: name.into(),
            kind,
            pooled_sd: sample_sd(&normalized),
            values: BlockValues::Scalars(normalized),
            b: 0.0,
            degenerate: zero_range || r.is_none(),
            r,
            distances,
        })
    }

    /// A distribution block: Gaussian fit per source, Jeffreys divergence as
    /// distance. Its pooled sd is taken over the min-max normalized fitted means.
    pub fn distribution(
        name: impl Into<String>,
        samples: &[Vec<f64>],
        target_means: &[f64],
    ) -> Result<Self> {
        if samples.len() != target_means.len() {
            return Err(Error::Validation(format!(
                "block has samples for {} of {} sources",
                samples.len(),
                target_means.len()
            )));
        }
        let fits = samples
            .iter()
            .map(|s| GaussianFit::from_samples(s))
            .collect::<Result<Vec<_>>>()?;
        let distances = fits[1..]
            .iter()
            .map(|f| jeffreys_divergence(fits[0], *f))
            .collect();
        let means: Vec<f64> = fits.iter().map(|f| f.mean).collect();
        let (normalized, zero_range) = pooled_minmax_normalize(&means)?;
        let r = if zero_range {
            None
        } else {
            pearson_correlation(&means, target_means).ok()
        };
        Ok(Self {
            name: name.into(),
            kind: BlockKind::DistributionParameter,
            pooled_sd: sample_sd(&normalized),
            values: BlockValues::Fits(fits),
            b: 0.0,
            degenerate: zero_range || r.is_none(),
            r,
            distances,
        })
    }
}

fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Maps values onto `[0, 1]` with the pooled min and max over all sources.
/// Returns the normalized values and whether the range was zero (in which
/// case every value maps to 0).
pub fn pooled_minmax_normalize(values: &[f64]) -> Result<(Vec<f64>, bool)> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(
            "normalization needs at least two sources".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in block".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok((vec![0.0; values.len()], true));
    }
    let range = max - min;
    Ok((values.iter().map(|v| (v - min) / range).collect(), false))
}

/// Squared Euclidean distance between two scalar values.
pub fn sed_distance(eta_primary: f64, eta_supplement: f64) -> f64 {
    let d = eta_supplement - eta_primary;
    d * d
}

fn gaussian_kl(p: GaussianFit, q: GaussianFit) -> f64 {
    let (s1, s2) = (p.sd, q.sd);
    let dm = p.mean - q.mean;
    (s2 / s1).ln() + (s1 * s1 + dm * dm) / (2.0 * s2 * s2) - 0.5
}

/// `KL(p || h) + KL(h || p)` between two Gaussians.
pub fn jeffreys_divergence(fit_primary: GaussianFit, fit_supplement: GaussianFit) -> f64 {
    let floor = |f: GaussianFit| GaussianFit {
        mean: f.mean,
        sd: f.sd.max(VARIANCE_FLOOR.sqrt()),
    };
    let (p, h) = (floor(fit_primary), floor(fit_supplement));
    gaussian_kl(p, h) + gaussian_kl(h, p)
}

/// Collapses each source's samples to its mean.
pub fn collapse_parameter(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.len() < 2 {
                Err(Error::InsufficientData(format!(
                    "source {i} has {} parameter samples",
                    s.len()
                )))
            } else {
                Ok(s.iter().sum::<f64>() / s.len() as f64)
            }
        })
        .collect()
}

/// Pearson's correlation coefficient.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "correlation of vectors with lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateCorrelation(
            "one of the vectors is constant".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Per-block weights `b_l` from pooled standard deviations. Zero-sd blocks get 0.
pub fn characteristic_weights(pooled_sds: &[f64], scheme: WeightScheme) -> Vec<f64> {
    match scheme {
        WeightScheme::SdRatio => {
            let total: f64 = pooled_sds.iter().filter(|s| **s > 0.0).sum();
            pooled_sds
                .iter()
                .map(|&s| if s > 0.0 { s / total } else { 0.0 })
                .collect()
        }
        WeightScheme::InverseVariance => pooled_sds
            .iter()
            .map(|&s| if s > 0.0 { 1.0 / (s * s) } else { 0.0 })
            .collect(),
    }
}

/// `lambda_l = b_l * |r_l|` if `|r_l| > rho`, else 0.
pub fn lambda_weight(b: f64, r: f64, rho: f64) -> f64 {
    if r.abs() > rho {
        b * r.abs()
    } else {
        0.0
    }
}

/// [`lambda_weight`] over blocks; degenerate blocks get 0.
pub fn lambda_weights(blocks: &[AuxiliaryBlock], rho: f64) -> Vec<f64> {
    blocks
        .iter()
        .map(|blk| match (blk.degenerate, blk.r) {
            (false, Some(r)) => lambda_weight(blk.b, r, rho),
            _ => 0.0,
        })
        .collect()
}

/// The distance-embedded prior over all `2^H` models.
pub fn distance_embedded_prior(
    blocks: &[AuxiliaryBlock],
    lambdas: &[f64],
    width: usize,
) -> Result<PriorVector> {
    if blocks.len() != lambdas.len() {
        return Err(Error::Validation(format!(
            "{} lambdas for {} blocks",
            lambdas.len(),
            blocks.len()
        )));
    }
    let distances: Vec<&[f64]> = blocks.iter().map(|b| b.distances.as_slice()).collect();
    distance_prior_from_distances(&distances, lambdas, width)
}

/// Same as [`distance_embedded_prior`] on bare distance vectors.
pub fn distance_prior_from_distances(
    distances: &[&[f64]],
    lambdas: &[f64],
    width: usize,
) -> Result<PriorVector> {
    let count = model_count(width, DEFAULT_MAX_SUPPLEMENTS)?;
    if width == 0 {
        return Err(Error::Validation("no supplemental sources".into()));
    }
    for d in distances {
        if d.len() != width {
            return Err(Error::Validation(format!(
                "distance vector of length {} for {width} supplements",
                d.len()
            )));
        }
        if d.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Validation(
                "distances must be finite and nonnegative".into(),
            ));
        }
    }
    if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::Validation(
            "lambda weights must be finite and nonnegative".into(),
        ));
    }
    if lambdas.iter().sum::<f64>() <= 0.0 {
        return PriorVector::flat(width);
    }

    let mut numerators = vec![0.0; count];
    for (k, slot) in numerators.iter_mut().enumerate().skip(1) {
        let size = k.count_ones() as f64;
        let mut total = 0.0;
        for (d, &lambda) in distances.iter().zip(lambdas) {
            if lambda == 0.0 {
                continue;
            }
            let summed: f64 = (0..width).filter(|h| (k >> h) & 1 == 1).map(|h| d[h]).sum();
            total += lambda * size * size / summed.max(DISTANCE_FLOOR);
        }
        *slot = total;
    }
    let denominator: f64 = numerators.iter().sum();
    let null_mass = 1.0 / count as f64;
    let nonnull_mass = (count - 1) as f64 / count as f64;
    let values = numerators
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            if k == 0 {
                null_mass
            } else {
                nonnull_mass * n / denominator
            }
        })
        .collect();
    Ok(PriorVector::from_parts(width, values))
}

/// `(1 - a) / 2^H + a * pi_d`.
pub fn mixed_prior(distance_prior: &PriorVector, a: f64) -> Result<PriorVector> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Validation(format!(
            "prior mixing weight a = {a} is outside [0, 1]"
        )));
    }
    let width = distance_prior.width();
    if a == 0.0 {
        return PriorVector::flat(width);
    }
    if a == 1.0 {
        return Ok(distance_prior.clone());
    }
    let flat = 1.0 / distance_prior.len() as f64;
    let values = distance_prior
        .values()
        .iter()
        .map(|&p| (1.0 - a) * flat + a * p)
        .collect();
    Ok(PriorVector::from_parts(width, values))
}

/// Everything computed on the way to the RBF prior, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfPrior {
    pub blocks: Vec<AuxiliaryBlock>,
    pub lambdas: Vec<f64>,
    pub distance_prior: PriorVector,
    pub prior: PriorVector,
}

/// Builds the auxiliary blocks of a dataset (weights `b_l` filled in).
pub fn build_blocks(dataset: &Dataset, config: &RbfConfig) -> Result<Vec<AuxiliaryBlock>> {
    let targets = dataset.target_means();
    let mut blocks = Vec::new();
    for c in dataset.characteristics() {
        blocks.push(AuxiliaryBlock::scalar(
            &c.name,
            BlockKind::Characteristic,
            &c.values,
            &targets,
        )?);
    }
    for p in dataset.parameters() {
        let block = match config.parameter_mode {
            ParameterMode::Collapse => AuxiliaryBlock::scalar(
                &p.name,
                BlockKind::CollapsedParameter,
                &collapse_parameter(&p.samples)?,
                &targets,
            )?,
            ParameterMode::Jeffreys => AuxiliaryBlock::distribution(&p.name, &p.samples, &targets)?,
        };
        blocks.push(block);
    }
    let sds: Vec<f64> = blocks
        .iter()
        .map(|b| if b.degenerate { 0.0 } else { b.pooled_sd })
        .collect();
    for (block, b) in blocks
        .iter_mut()
        .zip(characteristic_weights(&sds, config.weight_scheme))
    {
        block.b = b;
    }
    Ok(blocks)
}

/// Full pipeline with intermediate results.
pub fn build_rbf_prior_detailed(dataset: &Dataset, config: &RbfConfig) -> Result<RbfPrior> {
    config.validate()?;
    let width = dataset.width();
    let blocks = build_blocks(dataset, config)?;
    let lambdas = lambda_weights(&blocks, config.rho);
    let distance_prior = distance_embedded_prior(&blocks, &lambdas, width)?;
    let prior = if lambdas.iter().all(|&l| l == 0.0) {
        PriorVector::flat(width)?
    } else {
        mixed_prior(&distance_prior, config.a)?
    };
    Ok(RbfPrior {
        blocks,
        lambdas,
        distance_prior,
        prior,
    })
}

/// The prior over exchangeability models for a dataset.
pub fn build_rbf_prior(dataset: &Dataset, config: &RbfConfig) -> Result<PriorVector> {
    config.validate()?;
    if config.a == 0.0 {
        return PriorVector::flat(dataset.width());
    }
    Ok(build_rbf_prior_detailed(dataset, config)?.prior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn minmax_examples() {
        let (v, deg) = pooled_minmax_normalize(&[0.0, 5.0, 10.0]).unwrap();
        assert_eq!(v, vec![0.0, 0.5, 1.0]);
        assert!(!deg);
        let (v, deg) = pooled_minmax_normalize(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(v, vec![0.0; 3]);
        assert!(deg);
    }

    #[test]
    fn sed_examples() {
        assert!((sed_distance(0.2, 0.5) - 0.09).abs() < 1e-15);
        assert_eq!(sed_distance(0.4, 0.4), 0.0);
    }

    #[test]
    fn jeffreys_examples() {
        let std = GaussianFit { mean: 0.0, sd: 1.0 };
        assert_eq!(jeffreys_divergence(std, std), 0.0);
        let shifted = GaussianFit { mean: 1.0, sd: 1.0 };
        assert!((jeffreys_divergence(std, shifted) - 1.0).abs() < 1e-15);
        // sd ratio 2: KL = ln 2 + 1/8 - 1/2 and ln(1/2) + 2 - 1/2
        let wide = GaussianFit { mean: 0.0, sd: 2.0 };
        let expected = 0.125 - 0.5 + 2.0 - 0.5;
        assert!((jeffreys_divergence(std, wide) - expected).abs() < 1e-14);
    }

    #[test]
    fn collapse_examples() {
        let v = collapse_parameter(&[vec![1.0, 2.0, 3.0], vec![4.5, 4.5]]).unwrap();
        assert_eq!(v, vec![2.0, 4.5]);
        assert!(collapse_parameter(&[vec![1.0]]).is_err());
    }

    #[test]
    fn collapse_matches_independent_means() {
        // 11 sources; means checked against numpy.mean.
        let samples: Vec<Vec<f64>> = (0..11)
            .map(|i| (0..(5 + i)).map(|j| ((i * 7 + j * 3) % 11) as f64 * 0.5).collect())
            .collect();
        let expected = [
            1.9, 2.6666666666666665, 2.857142857142857, 2.6875, 2.888888888888889, 2.25, 2.5,
            2.5, 2.3076923076923075, 2.357142857142857, 2.6,
        ];
        assert!(close(&collapse_parameter(&samples).unwrap(), &expected, 1e-12));
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_correlation(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_correlation(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        // scipy.stats.pearsonr([1,2,3],[1,2,4]) = 0.9819805060619657
        let r = pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.9819805060619657).abs() < 1e-14);
        assert!(matches!(
            pearson_correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateCorrelation(_))
        ));
        assert!(pearson_correlation(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn weight_scheme_examples() {
        assert_eq!(characteristic_weights(&[2.0, 2.0], WeightScheme::SdRatio), vec![0.5, 0.5]);
        assert_eq!(characteristic_weights(&[1.0, 3.0], WeightScheme::SdRatio), vec![0.25, 0.75]);
        assert_eq!(
            characteristic_weights(&[1.0, 2.0], WeightScheme::InverseVariance),
            vec![1.0, 0.25]
        );
        assert_eq!(characteristic_weights(&[0.0, 2.0], WeightScheme::SdRatio), vec![0.0, 1.0]);
        assert_eq!(
            characteristic_weights(&[0.0, 2.0], WeightScheme::InverseVariance),
            vec![0.0, 0.25]
        );
    }

    #[test]
    fn lambda_examples() {
        assert!((lambda_weight(0.5, 0.7, 0.3) - 0.35).abs() < 1e-15);
        assert_eq!(lambda_weight(0.5, 0.2, 0.3), 0.0);
        assert!((lambda_weight(0.5, -0.7, 0.3) - 0.35).abs() < 1e-15);
        assert_eq!(lambda_weight(0.5, 0.3, 0.3), 0.0);
    }

    #[test]
    fn worked_priors_for_two_supplements() {
        let p = distance_prior_from_distances(&[&[1.0, 1.0]], &[1.0], 2).unwrap();
        assert!(close(p.values(), &[0.25, 3.0 / 16.0, 3.0 / 16.0, 0.375], 1e-15));
        let p = distance_prior_from_distances(&[&[1.0, 3.0]], &[1.0], 2).unwrap();
        assert!(close(p.values(), &[0.25, 9.0 / 28.0, 3.0 / 28.0, 9.0 / 28.0], 1e-15));
        let flat = distance_prior_from_distances(&[&[1.0, 3.0]], &[0.0], 2).unwrap();
        assert_eq!(flat.values(), &[0.25; 4]);
    }

    #[test]
    fn zero_distances_favor_large_models() {
        let p = distance_prior_from_distances(&[&[0.0, 0.0, 0.0]], &[1.0], 3).unwrap();
        // numerators m^2 / eps, i.e. proportional to m^2: 1,1,4,1,4,4,9 over 24
        let scale = 7.0 / 8.0 / 24.0;
        let expected = [
            0.125,
            scale,
            scale,
            4.0 * scale,
            scale,
            4.0 * scale,
            4.0 * scale,
            9.0 * scale,
        ];
        assert!(close(p.values(), &expected, 1e-15));
    }

    #[test]
    fn mixing_examples() {
        let pd = PriorVector::from_values(2, vec![0.25, 3.0 / 16.0, 3.0 / 16.0, 0.375]).unwrap();
        assert_eq!(mixed_prior(&pd, 0.0).unwrap().values(), &[0.25; 4]);
        assert_eq!(mixed_prior(&pd, 1.0).unwrap(), pd);
        let half = mixed_prior(&pd, 0.5).unwrap();
        assert!(close(half.values(), &[0.25, 7.0 / 32.0, 7.0 / 32.0, 5.0 / 16.0], 1e-15));
        assert!(mixed_prior(&pd, 1.5).is_err());
        assert!(mixed_prior(&pd, -0.1).is_err());
    }

    fn dataset(chars: Vec<Vec<f64>>, means: &[f64]) -> Dataset {
        use crate::model::{Characteristic, Source};
        let src = |i: usize, m: f64| Source::new(format!("s{i}"), vec![m - 1.0, m + 1.0]).unwrap();
        Dataset::new(
            src(0, means[0]),
            means[1..].iter().enumerate().map(|(i, &m)| src(i + 1, m)).collect(),
            chars
                .into_iter()
                .enumerate()
                .map(|(i, values)| Characteristic {
                    name: format!("c{i}"),
                    values,
                })
                .collect(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn copies_of_the_primary_get_mass_by_model_size() {
        let d = dataset(vec![vec![1.0, 1.0, 1.0, 5.0]], &[0.0, 0.0, 0.0, 2.0]);
        // Supplements 0 and 1 sit exactly on the primary; any model made only of
        // them hits the distance floor and dominates.
        let p = build_rbf_prior(&d, &RbfConfig { rho: 0.0, ..Default::default() }).unwrap();
        let v = p.values();
        assert_eq!(v[0], 0.125);
        assert!((v[3] / v[1] - 4.0).abs() < 1e-12);
        assert_eq!(v[1], v[2]);
    }

    #[test]
    fn a_zero_and_high_rho_give_the_flat_prior() {
        let d = dataset(
            vec![vec![0.1, 0.3, 0.2, 0.9, 1.1]],
            &[0.0, 0.1, 0.0, 1.0, 1.2],
        );
        let flat = PriorVector::flat(4).unwrap();
        let zero_a = RbfConfig { a: 0.0, ..Default::default() };
        assert_eq!(build_rbf_prior(&d, &zero_a).unwrap(), flat);
        let high_rho = RbfConfig { rho: 1.0, a: 0.7, ..Default::default() };
        assert_eq!(build_rbf_prior(&d, &high_rho).unwrap(), flat);
    }

    #[test]
    fn constant_characteristic_is_dropped() {
        let d = dataset(vec![vec![2.0; 4]], &[0.0, 0.1, 1.0, 1.2]);
        let detail = build_rbf_prior_detailed(&d, &RbfConfig::default()).unwrap();
        assert!(detail.blocks[0].degenerate);
        assert_eq!(detail.lambdas, vec![0.0]);
        assert_eq!(detail.prior, PriorVector::flat(3).unwrap());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let d = dataset(vec![vec![0.0, 1.0, 2.0]], &[0.0, 1.0, 2.0]);
        let bad = RbfConfig { a: 2.0, ..Default::default() };
        assert!(build_rbf_prior(&d, &bad).is_err());
    }

    fn arb_distances(width: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..4.0, width)
    }

    proptest! {
        #[test]
        fn minmax_is_affine_invariant(
            xs in prop::collection::vec(-50.0f64..50.0, 2..12),
            alpha in 0.1f64..20.0,
            beta in -10.0f64..10.0,
        ) {
            let (a, _) = pooled_minmax_normalize(&xs).unwrap();
            let ys: Vec<f64> = xs.iter().map(|x| alpha * x + beta).collect();
            let (b, _) = pooled_minmax_normalize(&ys).unwrap();
            prop_assert!(close(&a, &b, 1e-9));
        }

        #[test]
        fn sed_is_symmetric(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            prop_assert_eq!(sed_distance(a, b), sed_distance(b, a));
        }

        #[test]
        fn priors_are_probability_vectors(
            width in 1usize..8,
            seed in prop::collection::vec(0.0f64..4.0, 24),
            lambdas in prop::collection::vec(0.0f64..2.0, 3),
            a in 0.0f64..=1.0,
        ) {
            let d: Vec<Vec<f64>> = (0..3).map(|l| seed[l * 8..l * 8 + width].to_vec()).collect();
            let refs: Vec<&[f64]> = d.iter().map(|v| v.as_slice()).collect();
            let pd = distance_prior_from_distances(&refs, &lambdas, width).unwrap();
            let p = mixed_prior(&pd, a).unwrap();
            for v in [&pd, &p] {
                prop_assert!((v.sum() - 1.0).abs() < 1e-12);
                prop_assert!(v.values().iter().all(|x| *x >= 0.0));
            }
            if lambdas.iter().sum::<f64>() > 0.0 {
                prop_assert_eq!(pd.values()[0], 1.0 / (1u64 << width) as f64);
            }
        }

        #[test]
        fn smaller_distance_gets_more_mass(d in arb_distances(3), i in 0usize..3, j in 0usize..3) {
            prop_assume!(i != j && d[i] != d[j]);
            let p = distance_prior_from_distances(&[&d], &[1.0], 3).unwrap();
            let (mi, mj) = (p.values()[1 << i], p.values()[1 << j]);
            if d[i].max(DISTANCE_FLOOR) < d[j].max(DISTANCE_FLOOR) {
                prop_assert!(mi > mj);
            }
        }

        #[test]
        fn prior_follows_supplement_permutation(d in arb_distances(4), rot in 1usize..4) {
            let permuted: Vec<f64> = (0..4).map(|h| d[(h + rot) % 4]).collect();
            let p = distance_prior_from_distances(&[&d], &[1.0], 4).unwrap();
            let q = distance_prior_from_distances(&[&permuted], &[1.0], 4).unwrap();
            // supplement h of the permuted set is supplement (h + rot) % 4 of the original
            for k in 0..16usize {
                let mut orig = 0usize;
                for h in 0..4 {
                    if (k >> h) & 1 == 1 {
                        orig |= 1 << ((h + rot) % 4);
                    }
                }
                let (a, b) = (q.values()[k], p.values()[orig]);
                prop_assert!((a - b).abs() <= 1e-12 * a.max(b).max(1e-300));
            }
        }

        #[test]
        fn rho_above_all_correlations_is_flat(
            c in prop::collection::vec(-3.0f64..3.0, 5),
            m in prop::collection::vec(-1.0f64..1.0, 5),
        ) {
            let d = dataset(vec![c], &m);
            let detail = build_rbf_prior_detailed(&d, &RbfConfig { rho: 0.0, ..Default::default() }).unwrap();
            let max_r = detail.blocks.iter().filter_map(|b| b.r).fold(0.0f64, |a, r| a.max(r.abs()));
            prop_assume!(max_r < 1.0);
            let p = build_rbf_prior(&d, &RbfConfig { rho: max_r, ..Default::default() }).unwrap();
            prop_assert_eq!(p, PriorVector::flat(4).unwrap());
        }

        #[test]
        fn affine_transform_of_a_characteristic_leaves_the_prior_unchanged(
            c in prop::collection::vec(-3.0f64..3.0, 5),
            m in prop::collection::vec(-1.0f64..1.0, 5),
            shift in -4i32..4,
            scale_exp in -3i32..3,
        ) {
            let alpha = 1.7f64.powi(scale_exp);
            let beta = shift as f64 * 0.37;
            let t: Vec<f64> = c.iter().map(|x| alpha * x + beta).collect();
            let cfg = RbfConfig { rho: 0.0, ..Default::default() };
            let a = build_rbf_prior(&dataset(vec![c.clone()], &m), &cfg).unwrap();
            let b = build_rbf_prior(&dataset(vec![t], &m), &cfg).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-9 * x.max(*y));
            }
        }
    }
}
