//! Source summaries, datasets and the exchangeability model space.
//!
//! A model is identified by a bit pattern over the `H` supplemental sources:
//! bit `h` of the model index is set when supplement `h` is assumed
//! exchangeable with the primary source. Index 0 is the null model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied to every estimated variance.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Default cap on the number of supplemental sources (the model space is `2^H`).
pub const DEFAULT_MAX_SUPPLEMENTS: usize = 20;

/// Sufficient statistics of one source's target samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    n: usize,
    mean: f64,
    sd: f64,
}

impl SourceSummary {
    /// Builds a summary from already-computed statistics. The variance is
    /// floored at [`VARIANCE_FLOOR`].
    pub fn new(n: usize, mean: f64, sd: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "a source needs at least 2 observations, got {n}"
            )));
        }
        if !mean.is_finite() || !sd.is_finite() || sd < 0.0 {
            return Err(Error::Validation(format!(
                "summary requires finite mean and nonnegative finite sd, got mean={mean}, sd={sd}"
            )));
        }
        Ok(Self {
            n,
            mean,
            sd: floor_sd(sd),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }

    /// `n / sd^2`, the precision of the sample mean.
    pub fn precision(&self) -> f64 {
        self.n as f64 / self.variance()
    }

    /// `sd^2 / n`, the sampling variance of the mean.
    pub fn mean_variance(&self) -> f64 {
        self.variance() / self.n as f64
    }
}

fn floor_sd(sd: f64) -> f64 {
    if sd * sd < VARIANCE_FLOOR {
        VARIANCE_FLOOR.sqrt()
    } else {
        sd
    }
}

/// Arithmetic mean and maximum-likelihood (n-denominator) standard deviation.
pub fn sufficient_stats(samples: &[f64]) -> Result<SourceSummary> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::Validation(format!("non-finite sample value {bad}")));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    SourceSummary::new(samples.len(), mean, (ss / n).sqrt())
}

/// One exchangeability model: which supplements are pooled with the primary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelConfiguration {
    index: usize,
    width: usize,
}

impl ModelConfiguration {
    pub fn new(index: usize, width: usize) -> Result<Self> {
        if width >= usize::BITS as usize || index >> width != 0 {
            return Err(Error::Validation(format!(
                "model index {index} is out of range for {width} supplements"
            )));
        }
        Ok(Self { index, width })
    }

    pub fn null(width: usize) -> Self {
        Self { index: 0, width }
    }

    pub fn from_inclusion(inclusion: &[bool]) -> Result<Self> {
        let index = inclusion
            .iter()
            .enumerate()
            .fold(0usize, |acc, (h, &s)| acc | (usize::from(s) << h));
        Self::new(index, inclusion.len())
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Number of supplemental sources `H`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn includes(&self, h: usize) -> bool {
        h < self.width && (self.index >> h) & 1 == 1
    }

    pub fn inclusion(&self) -> Vec<bool> {
        (0..self.width).map(|h| self.includes(h)).collect()
    }

    /// Number of supplements assumed exchangeable.
    pub fn size(&self) -> usize {
        self.index.count_ones() as usize
    }

    pub fn is_null(&self) -> bool {
        self.index == 0
    }

    pub fn included(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(move |&h| self.includes(h))
    }
}

/// Number of models for `h` supplements, checked against `limit`.
pub fn model_count(h: usize, limit: usize) -> Result<usize> {
    if h > limit {
        return Err(Error::Capacity {
            what: "supplemental source count",
            requested: h,
            limit,
        });
    }
    Ok(1usize << h)
}

/// All `2^h` models in canonical (index) order, capped at [`DEFAULT_MAX_SUPPLEMENTS`].
pub fn enumerate_models(h: usize) -> Result<Vec<ModelConfiguration>> {
    enumerate_models_with_limit(h, DEFAULT_MAX_SUPPLEMENTS)
}

pub fn enumerate_models_with_limit(h: usize, limit: usize) -> Result<Vec<ModelConfiguration>> {
    if h == 0 {
        return Err(Error::Validation(
            "at least one supplemental source is required".into(),
        ));
    }
    let count = model_count(h, limit)?;
    Ok((0..count)
        .map(|index| ModelConfiguration { index, width: h })
        .collect())
}

/// Target samples of one source together with their summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub id: String,
    samples: Vec<f64>,
    summary: SourceSummary,
}

impl Source {
    pub fn new(id: impl Into<String>, samples: Vec<f64>) -> Result<Self> {
        let id = id.into();
        let summary = sufficient_stats(&samples)
            .map_err(|e| Error::Validation(format!("source '{id}': {e}")))?;
        Ok(Self {
            id,
            samples,
            summary,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn summary(&self) -> &SourceSummary {
        &self.summary
    }
}

/// A per-source scalar block. `values[0]` belongs to the primary source,
/// `values[1 + h]` to supplement `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub name: String,
    pub values: Vec<f64>,
}

/// A per-source sample block, indexed like [`Characteristic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub samples: Vec<Vec<f64>>,
}

/// One primary source, its supplements and their auxiliary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    primary: Source,
    supplements: Vec<Source>,
    characteristics: Vec<Characteristic>,
    parameters: Vec<Parameter>,
}

impl Dataset {
    pub fn new(
        primary: Source,
        supplements: Vec<Source>,
        characteristics: Vec<Characteristic>,
        parameters: Vec<Parameter>,
    ) -> Result<Self> {
        if supplements.is_empty() {
            return Err(Error::Validation(
                "a dataset needs at least one supplemental source".into(),
            ));
        }
        let sources = supplements.len() + 1;
        for c in &characteristics {
            if c.values.len() != sources {
                return Err(Error::Validation(format!(
                    "characteristic '{}' has {} values for {sources} sources",
                    c.name,
                    c.values.len()
                )));
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "characteristic '{}' has a non-finite value",
                    c.name
                )));
            }
        }
        for p in &parameters {
            if p.samples.len() != sources {
                return Err(Error::Validation(format!(
                    "parameter '{}' has samples for {} of {sources} sources",
                    p.name,
                    p.samples.len()
                )));
            }
            for (i, s) in p.samples.iter().enumerate() {
                if s.len() < 2 {
                    return Err(Error::InsufficientData(format!(
                        "parameter '{}' has {} samples for source {i}",
                        p.name,
                        s.len()
                    )));
                }
                if s.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation(format!(
                        "parameter '{}' has a non-finite sample for source {i}",
                        p.name
                    )));
                }
            }
        }
        Ok(Self {
            primary,
            supplements,
            characteristics,
            parameters,
        })
    }

    pub fn primary(&self) -> &Source {
        &self.primary
    }

    pub fn supplements(&self) -> &[Source] {
        &self.supplements
    }

    pub fn characteristics(&self) -> &[Characteristic] {
        &self.characteristics
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.parameters
    }

    /// Number of supplemental sources `H`.
    pub fn width(&self) -> usize {
        self.supplements.len()
    }

    pub fn primary_summary(&self) -> &SourceSummary {
        self.primary.summary()
    }

    pub fn supplement_summaries(&self) -> Vec<SourceSummary> {
        self.supplements.iter().map(|s| *s.summary()).collect()
    }

    /// Target sample means of all `H + 1` sources, primary first.
    pub fn target_means(&self) -> Vec<f64> {
        std::iter::once(&self.primary)
            .chain(&self.supplements)
            .map(|s| s.summary().mean())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_samples_hit_the_floor() {
        let s = sufficient_stats(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.mean(), 1.0);
        assert_eq!(s.variance(), VARIANCE_FLOOR);
        assert!(s.precision().is_finite());
    }

    #[test]
    fn two_point_sd_is_half_range() {
        let s = sufficient_stats(&[0.0, 2.0]).unwrap();
        assert_eq!(s.mean(), 1.0);
        assert_eq!(s.sd(), 1.0);
    }

    #[test]
    fn fixture_summary_matches_hand_computation() {
        // Values and expected statistics computed independently with numpy
        // (np.mean, np.std with ddof=0).
        let xs = [
            2.31, -0.47, 1.08, 0.92, 3.15, -1.26, 0.04, 1.77, 0.58, 2.03,
        ];
        let s = sufficient_stats(&xs).unwrap();
        assert!((s.mean() - 1.015).abs() < 1e-12);
        assert!((s.sd() - 1.279431514384416).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_and_non_finite_input() {
        assert!(matches!(
            sufficient_stats(&[1.0]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            sufficient_stats(&[1.0, f64::NAN]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn small_model_spaces_in_canonical_order() {
        let bits = |h| -> Vec<Vec<bool>> {
            enumerate_models(h)
                .unwrap()
                .iter()
                .map(|m| m.inclusion())
                .collect()
        };
        assert_eq!(bits(1), vec![vec![false], vec![true]]);
        assert_eq!(
            bits(2),
            vec![
                vec![false, false],
                vec![true, false],
                vec![false, true],
                vec![true, true]
            ]
        );
        let ten = enumerate_models(10).unwrap();
        assert_eq!(ten.len(), 1024);
        let distinct: std::collections::HashSet<_> = ten.iter().map(|m| m.inclusion()).collect();
        assert_eq!(distinct.len(), 1024);
        assert_eq!(ten.iter().filter(|m| m.size() == 0).count(), 1);
    }

    #[test]
    fn capacity_error_names_the_limit() {
        let err = enumerate_models(21).unwrap_err();
        assert!(err.to_string().contains("20"));
        assert_eq!(err.exit_code(), 4);
        assert!(enumerate_models_with_limit(3, 2).is_err());
    }

    #[test]
    fn inclusion_round_trips_through_index() {
        let m = ModelConfiguration::from_inclusion(&[true, false, true]).unwrap();
        assert_eq!(m.index(), 5);
        assert_eq!(m.included().collect::<Vec<_>>(), vec![0, 2]);
        assert!(ModelConfiguration::new(8, 3).is_err());
    }

    #[test]
    fn dataset_checks_block_lengths() {
        let p = Source::new("p", vec![0.0, 1.0]).unwrap();
        let s = Source::new("s", vec![0.0, 1.0]).unwrap();
        let bad = Characteristic {
            name: "age".into(),
            values: vec![1.0],
        };
        assert!(Dataset::new(p.clone(), vec![s.clone()], vec![bad], vec![]).is_err());
        let short = Parameter {
            name: "x".into(),
            samples: vec![vec![1.0, 2.0], vec![1.0]],
        };
        assert!(Dataset::new(p.clone(), vec![s.clone()], vec![], vec![short]).is_err());
        assert!(Dataset::new(p, vec![], vec![], vec![]).is_err());
    }

    proptest! {
        #[test]
        fn stats_are_permutation_invariant(
            mut xs in prop::collection::vec(-100.0f64..100.0, 2..40),
            seed in any::<u64>(),
        ) {
            let a = sufficient_stats(&xs).unwrap();
            let k = (seed as usize) % xs.len();
            xs.rotate_left(k);
            xs.reverse();
            let b = sufficient_stats(&xs).unwrap();
            prop_assert!((a.mean() - b.mean()).abs() <= 1e-12 * (1.0 + a.mean().abs()));
            prop_assert!((a.sd() - b.sd()).abs() <= 1e-10 * (1.0 + a.sd()));
        }

        #[test]
        fn sd_is_root_of_mle_variance(xs in prop::collection::vec(-10.0f64..10.0, 2..40)) {
            let s = sufficient_stats(&xs).unwrap();
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
            if var >= VARIANCE_FLOOR {
                prop_assert!((s.sd() - var.sqrt()).abs() < 1e-12);
            } else {
                prop_assert_eq!(s.variance(), VARIANCE_FLOOR);
            }
        }
    }
}
