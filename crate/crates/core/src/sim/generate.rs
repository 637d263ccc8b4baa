//! Seeded data generators for the three simulation scenarios.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::truncated::{sample_truncated_normal, Side};
use super::{BaseDistribution, GeneratedDataset, Scenario, ScenarioConfig, ThresholdLaw};
use crate::error::{Error, Result};
use crate::model::{Characteristic, Dataset, Parameter, Source};

/// A validated correlation matrix (symmetric, unit diagonal, positive definite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CorrelationMatrix {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for CorrelationMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<CorrelationMatrix> for Vec<Vec<f64>> {
    fn from(m: CorrelationMatrix) -> Self {
        m.rows
    }
}

impl CorrelationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if d < 2 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Validation(
                "correlation matrix must be square with dimension >= 2".into(),
            ));
        }
        for i in 0..d {
            if (rows[i][i] - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "correlation matrix diagonal entry {i} is {}",
                    rows[i][i]
                )));
            }
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 || rows[i][j].abs() > 1.0 {
                    return Err(Error::Validation(format!(
                        "correlation matrix entry ({i}, {j}) is not a symmetric correlation"
                    )));
                }
            }
        }
        let m = Self { rows };
        m.upper_factor()?;
        Ok(m)
    }

    /// Target correlations `r` with auxiliary-auxiliary entries `r_i * r_j`,
    /// i.e. auxiliaries conditionally independent given the target. Always
    /// positive definite for `|r_i| < 1`.
    pub fn one_factor(correlations: &[f64]) -> Result<Self> {
        let d = correlations.len() + 1;
        let loading = |i: usize| if i == 0 { 1.0 } else { correlations[i - 1] };
        let rows = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { 1.0 } else { loading(i) * loading(j) })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    /// Parses whitespace-separated rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        row: line_no + 1,
                        msg: format!("'{t}' is not a number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Upper-triangular `C` with `R = C^T C`.
    pub fn upper_factor(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.rows[i][j]);
        let chol = m.cholesky().ok_or_else(|| {
            Error::Validation("correlation matrix is not positive definite".into())
        })?;
        Ok(chol.l().transpose())
    }
}

/// Paper example matrix for auxiliary parameters (target first).
pub const EXAMPLE_CORRELATION_MATRIX: &str = include_str!("../../data/sigma_r_example.txt");

fn sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// A characteristic whose sample correlation with `y` is exactly `r`.
///
/// Draws `x'` from a standard normal, removes its projection onto
/// `span{1, y}` to get `res`, and returns
/// `r * sd(res) * y + sqrt(1 - r^2) * sd(y) * res`.
pub fn gen_correlated_characteristic<R: Rng + ?Sized>(
    y: &[f64],
    r: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::Validation(format!("correlation {r} outside [-1, 1]")));
    }
    let n = y.len();
    if n < 3 {
        return Err(Error::DegenerateInput(
            "need at least 3 sources to generate a correlated characteristic".into(),
        ));
    }
    let my = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - my).collect();
    let yy: f64 = yc.iter().map(|v| v * v).sum();
    if yy <= 0.0 {
        return Err(Error::DegenerateInput("target vector is constant".into()));
    }
    let draws: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mx = draws.iter().sum::<f64>() / n as f64;
    let xc: Vec<f64> = draws.iter().map(|v| v - mx).collect();
    let beta = xc.iter().zip(&yc).map(|(a, b)| a * b).sum::<f64>() / yy;
    let residual: Vec<f64> = xc.iter().zip(&yc).map(|(a, b)| a - beta * b).collect();
    let (sd_res, sd_y) = (sd(&residual), sd(y));
    let noise = (1.0 - r * r).max(0.0).sqrt();
    Ok(y
        .iter()
        .zip(&residual)
        .map(|(yi, ri)| r * sd_res * yi + noise * sd_y * ri)
        .collect())
}

fn draw_base<R: Rng + ?Sized>(base: BaseDistribution, rng: &mut R) -> f64 {
    match base {
        BaseDistribution::Normal => rng.sample(StandardNormal),
        // Exp(1) has mean 1 and variance 1.
        BaseDistribution::Exponential => {
            let e: f64 = rng.sample(Exp1);
            e - 1.0
        }
    }
}

/// Auxiliary columns correlated with the observation vector `y` through `R`.
///
/// With `R = C^T C` (`C` upper triangular, `C[0][0] = 1`), standardized base
/// draws `X'` are mixed as `(Z, X) = (Z, X') C`, where `Z` is `y` centered and
/// scaled to unit sample variance. `y` itself is left untouched. Returns the
/// `dim - 1` auxiliary columns, each aligned with `y`.
pub fn gen_correlated_parameters<R: Rng + ?Sized>(
    correlation: &CorrelationMatrix,
    y: &[f64],
    base: BaseDistribution,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let c = correlation.upper_factor()?;
    let d = correlation.dim();
    let n = y.len();
    if n < 2 {
        return Err(Error::DegenerateInput("need at least 2 observations".into()));
    }
    let my = y.iter().sum::<f64>() / n as f64;
    let sy = sd(y);
    if !(sy > 0.0) {
        return Err(Error::DegenerateInput("observation vector is constant".into()));
    }
    let z: Vec<f64> = y.iter().map(|v| (v - my) / sy).collect();
    let raw: Vec<Vec<f64>> = (1..d)
        .map(|_| (0..n).map(|_| draw_base(base, rng)).collect())
        .collect();
    Ok((1..d)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let mut v = z[i] * c[(0, j)];
                    for m in 1..=j {
                        v += raw[m - 1][i] * c[(m, j)];
                    }
                    v
                })
                .collect()
        })
        .collect())
}

fn draw_sizes<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Vec<usize> {
    let (lo, hi) = config.supplement_size;
    let law = Uniform::new_inclusive(lo, hi).expect("validated size range");
    (0..config.supplement_count()).map(|_| law.sample(rng)).collect()
}

fn normal_samples<R: Rng + ?Sized>(n: usize, mean: f64, sd: f64, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            mean + sd * z
        })
        .collect()
}

/// Ground-truth source-level means: primary and exchangeable at `mu0`,
/// nonexchangeable at `mu1`.
pub fn ground_truth_means(config: &ScenarioConfig) -> Vec<f64> {
    std::iter::repeat_n(config.mu0, 1 + config.exchangeable)
        .chain(std::iter::repeat_n(config.mu1, config.nonexchangeable))
        .collect()
}

fn characteristics<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<Characteristic>> {
    let y = ground_truth_means(config);
    config
        .correlations
        .iter()
        .enumerate()
        .map(|(l, &r)| {
            Ok(Characteristic {
                name: format!("char{}", l + 1),
                values: gen_correlated_characteristic(&y, r, rng)?,
            })
        })
        .collect()
}

fn assemble(
    config: &ScenarioConfig,
    targets: Vec<Vec<f64>>,
    characteristics: Vec<Characteristic>,
    parameters: Vec<Parameter>,
) -> Result<GeneratedDataset> {
    let mut sources = targets
        .into_iter()
        .enumerate()
        .map(|(i, samples)| {
            let id = if i == 0 {
                "primary".to_string()
            } else {
                format!("supp{i}")
            };
            Source::new(id, samples)
        })
        .collect::<Result<Vec<_>>>()?;
    let primary = sources.remove(0);
    Ok(GeneratedDataset {
        dataset: Dataset::new(primary, sources, characteristics, parameters)?,
        truth: config.truth()?,
        truth_mean: config.mu0,
    })
}

/// Scenario I: Gaussian targets, characteristics correlated with the
/// ground-truth source means.
pub fn gen_scenario1<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<GeneratedDataset> {
    config.validate()?;
    let sizes = draw_sizes(config, rng);
    let means = ground_truth_means(config);
    let mut targets = vec![normal_samples(config.n_primary, means[0], 1.0, rng)];
    for (h, &n) in sizes.iter().enumerate() {
        targets.push(normal_samples(n, means[h + 1], 1.0, rng));
    }
    let chars = characteristics(config, rng)?;
    assemble(config, targets, chars, vec![])
}

/// Fraction of all target observations that come from exchangeable sources
/// (primary included).
pub fn exchangeable_fraction(n_primary: usize, sizes: &[usize], exchangeable: usize) -> f64 {
    let ex: usize = n_primary + sizes[..exchangeable].iter().sum::<usize>();
    let total: usize = n_primary + sizes.iter().sum::<usize>();
    ex as f64 / total as f64
}

/// Scenario II: targets with within-source sd `sqrt(p (1 - p))`, auxiliary
/// parameters generated observation-wise through a correlation matrix.
pub fn gen_scenario2<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<GeneratedDataset> {
    config.validate()?;
    let correlation = config.correlation_matrix()?;
    let sizes = draw_sizes(config, rng);
    let p = exchangeable_fraction(config.n_primary, &sizes, config.exchangeable);
    let within_sd = (p * (1.0 - p)).sqrt();
    let means = ground_truth_means(config);
    let mut targets = vec![normal_samples(config.n_primary, means[0], within_sd, rng)];
    for (h, &n) in sizes.iter().enumerate() {
        targets.push(normal_samples(n, means[h + 1], within_sd, rng));
    }
    let pooled: Vec<f64> = targets.iter().flatten().copied().collect();
    let columns = gen_correlated_parameters(&correlation, &pooled, config.base_dist, rng)?;
    let parameters = columns
        .into_iter()
        .enumerate()
        .map(|(l, col)| {
            let mut per_source = Vec::with_capacity(targets.len());
            let mut offset = 0;
            for t in &targets {
                per_source.push(col[offset..offset + t.len()].to_vec());
                offset += t.len();
            }
            Parameter {
                name: format!("param{}", l + 1),
                samples: per_source,
            }
        })
        .collect();
    assemble(config, targets, vec![], parameters)
}

fn draw_threshold<R: Rng + ?Sized>(law: ThresholdLaw, rng: &mut R) -> Option<f64> {
    match law {
        ThresholdLaw::None => None,
        ThresholdLaw::Uniform { low, high } => {
            Some(Uniform::new(low, high).expect("validated law").sample(rng))
        }
    }
}

fn maybe_truncated<R: Rng + ?Sized>(
    n: usize,
    mean: f64,
    threshold: Option<(f64, Side)>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match threshold {
        None => Ok(normal_samples(n, mean, 1.0, rng)),
        Some((bound, side)) => (0..n)
            .map(|_| sample_truncated_normal(mean, 1.0, bound, side, rng))
            .collect(),
    }
}

/// Scenario III: selection bias through truncated normals. Characteristics
/// follow the untruncated ground-truth means.
pub fn gen_scenario3<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<GeneratedDataset> {
    config.validate()?;
    let scheme = config.truncation;
    let sizes = draw_sizes(config, rng);
    let means = ground_truth_means(config);
    let mut targets = vec![maybe_truncated(
        config.n_primary,
        means[0],
        Some((scheme.primary_bound, scheme.primary_side)),
        rng,
    )?];
    for (h, &n) in sizes.iter().enumerate() {
        let law = if h < config.exchangeable {
            scheme.exchangeable
        } else {
            scheme.nonexchangeable
        };
        let threshold = draw_threshold(law, rng).map(|u| (u, Side::Above));
        targets.push(maybe_truncated(n, means[h + 1], threshold, rng)?);
    }
    let chars = characteristics(config, rng)?;
    assemble(config, targets, chars, vec![])
}

/// Dispatches on the configured scenario.
pub fn generate<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<GeneratedDataset> {
    match config.scenario {
        Scenario::One => gen_scenario1(config, rng),
        Scenario::Two => gen_scenario2(config, rng),
        Scenario::Three => gen_scenario3(config, rng),
    }
}
