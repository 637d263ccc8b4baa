//! Simulation harness: scenario configuration, presets, seeded generators
//! and parallel replication.
//!
//! Every replication draws from its own stream: `ChaCha8Rng` seeded with the
//! base seed, with the stream id set to the replication index. A replication's
//! data and metrics therefore depend only on `(seed, rep)`, never on thread
//! count or scheduling.

pub mod generate;
pub mod metrics;
pub mod truncated;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, ModelConfiguration, DEFAULT_MAX_SUPPLEMENTS};
use crate::prior::{ParameterMode, RbfConfig};

pub use generate::CorrelationMatrix;
pub use metrics::{aggregate, run_replication, Method, MetricsSummary, RepMetrics};
pub use truncated::{sample_truncated_normal, Side};

/// Scenario III sub-scenario table shipped with the crate.
pub const SCENARIO3_TABLE: &str = include_str!("../../data/scenario3_subscenarios.tsv");

/// The random stream for replication `rep` under base seed `seed`.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scenario {
    One,
    Two,
    Three,
}

impl TryFrom<u8> for Scenario {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Scenario::One),
            2 => Ok(Scenario::Two),
            3 => Ok(Scenario::Three),
            _ => Err(Error::Config(format!("scenario must be 1, 2 or 3, got {v}"))),
        }
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        match s {
            Scenario::One => 1,
            Scenario::Two => 2,
            Scenario::Three => 3,
        }
    }
}

/// Distribution of the independent columns mixed into Scenario II parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseDistribution {
    #[default]
    Normal,
    Exponential,
}

/// How a supplement's truncation threshold is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum ThresholdLaw {
    /// Untruncated normal.
    #[default]
    None,
    /// `TN_{x>u}` with `u ~ Unif(low, high)`, drawn per supplement.
    Uniform { low: f64, high: f64 },
}

/// Selection mechanism for Scenario III.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationScheme {
    pub primary_side: Side,
    pub primary_bound: f64,
    pub exchangeable: ThresholdLaw,
    pub nonexchangeable: ThresholdLaw,
}

impl Default for TruncationScheme {
    fn default() -> Self {
        Self {
            primary_side: Side::Above,
            primary_bound: 0.0,
            exchangeable: ThresholdLaw::None,
            nonexchangeable: ThresholdLaw::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(rename = "h_ex")]
    pub exchangeable: usize,
    #[serde(rename = "h_nex")]
    pub nonexchangeable: usize,
    pub n_primary: usize,
    #[serde(rename = "n_supp_range")]
    pub supplement_size: (usize, usize),
    pub mu0: f64,
    pub mu1: f64,
    /// Target correlations of the characteristics (Scenarios I and III) or of
    /// the auxiliary parameters (Scenario II, when no matrix is given).
    pub correlations: Vec<f64>,
    /// Full Scenario II correlation matrix, target first. Defaults to the
    /// one-factor matrix built from `correlations`.
    pub correlation_matrix: Option<CorrelationMatrix>,
    pub base_dist: BaseDistribution,
    pub truncation: TruncationScheme,
    pub rbf: RbfConfig,
    pub reps: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::One,
            exchangeable: 5,
            nonexchangeable: 5,
            n_primary: 10,
            supplement_size: (5, 15),
            mu0: 0.0,
            mu1: 1.0,
            correlations: vec![0.99, 0.7, 0.5],
            correlation_matrix: None,
            base_dist: BaseDistribution::Normal,
            truncation: TruncationScheme::default(),
            rbf: RbfConfig {
                rho: 0.0,
                ..RbfConfig::default()
            },
            reps: 1000,
            seed: 20240101,
        }
    }
}

fn check_law(law: ThresholdLaw) -> Result<()> {
    if let ThresholdLaw::Uniform { low, high } = law {
        if !(low < high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::Config(format!(
                "threshold law needs finite low < high, got ({low}, {high})"
            )));
        }
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn supplement_count(&self) -> usize {
        self.exchangeable + self.nonexchangeable
    }

    pub fn validate(&self) -> Result<()> {
        if self.exchangeable == 0 || self.nonexchangeable == 0 {
            return Err(Error::Config(
                "h_ex and h_nex must both be positive".into(),
            ));
        }
        if self.supplement_count() > DEFAULT_MAX_SUPPLEMENTS {
            return Err(Error::Capacity {
                what: "H",
                requested: self.supplement_count(),
                limit: DEFAULT_MAX_SUPPLEMENTS,
            });
        }
        let (lo, hi) = self.supplement_size;
        if self.n_primary < 2 || lo < 2 || lo > hi {
            return Err(Error::Config(format!(
                "need n_primary >= 2 and 2 <= n_supp_range low <= high, got {} and ({lo}, {hi})",
                self.n_primary
            )));
        }
        if !self.mu0.is_finite() || !self.mu1.is_finite() || self.mu0 == self.mu1 {
            return Err(Error::Config("mu0 and mu1 must be finite and distinct".into()));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if let Some(r) = self.correlations.iter().find(|r| !(r.abs() < 1.0)) {
            return Err(Error::Config(format!("correlation {r} outside (-1, 1)")));
        }
        match self.scenario {
            Scenario::One | Scenario::Three if self.correlations.is_empty() => {
                return Err(Error::Config("at least one correlation is required".into()));
            }
            Scenario::Two => {
                self.correlation_matrix()?;
            }
            _ => {}
        }
        check_law(self.truncation.exchangeable)?;
        check_law(self.truncation.nonexchangeable)?;
        self.rbf.validate()
    }

    /// The Scenario II correlation matrix in effect.
    pub fn correlation_matrix(&self) -> Result<CorrelationMatrix> {
        match &self.correlation_matrix {
            Some(m) => Ok(m.clone()),
            None if self.correlations.is_empty() => Err(Error::Config(
                "scenario 2 needs correlations or a correlation_matrix".into(),
            )),
            None => CorrelationMatrix::one_factor(&self.correlations),
        }
    }

    /// The ground-truth exchangeability model.
    pub fn truth(&self) -> Result<ModelConfiguration> {
        let inclusion: Vec<bool> = (0..self.supplement_count())
            .map(|h| h < self.exchangeable)
            .collect();
        ModelConfiguration::from_inclusion(&inclusion)
    }

    /// Names accepted by [`ScenarioConfig::preset`].
    pub fn preset_names() -> Vec<String> {
        let mut names: Vec<String> = [
            "s1-best",
            "s1-weak",
            "s1-three-07",
            "s1-five-07",
            "s1-mixed",
            "s2-best",
            "s2-best-exp",
            "s2-example",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        names.extend(
            scenario3_table()
                .expect("shipped table parses")
                .into_iter()
                .map(|row| row.name),
        );
        names
    }

    /// A named configuration reproducing one of the published settings.
    pub fn preset(name: &str) -> Result<Self> {
        let s1 = |correlations: Vec<f64>| Self {
            correlations,
            ..Self::default()
        };
        let s2 = |base_dist, correlation_matrix| Self {
            scenario: Scenario::Two,
            base_dist,
            correlation_matrix,
            rbf: RbfConfig {
                rho: 0.0,
                parameter_mode: ParameterMode::Jeffreys,
                ..RbfConfig::default()
            },
            ..Self::default()
        };
        let config = match name {
            "s1-best" => s1(vec![0.99, 0.7, 0.5]),
            "s1-weak" => s1(vec![0.3, 0.2, 0.1]),
            "s1-three-07" => s1(vec![0.7; 3]),
            "s1-five-07" => s1(vec![0.7; 5]),
            "s1-mixed" => s1(vec![0.7, 0.3, 0.1]),
            "s2-best" => s2(BaseDistribution::Normal, None),
            "s2-best-exp" => s2(BaseDistribution::Exponential, None),
            "s2-example" => {
                let m = CorrelationMatrix::parse(generate::EXAMPLE_CORRELATION_MATRIX)?;
                let mut c = s2(BaseDistribution::Normal, Some(m.clone()));
                c.correlations = m.rows()[0][1..].to_vec();
                c
            }
            other => {
                let row = scenario3_table()?
                    .into_iter()
                    .find(|row| row.name == other)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown preset '{other}'; known: {}",
                            Self::preset_names().join(", ")
                        ))
                    })?;
                row.config()
            }
        };
        config.validate()?;
        Ok(config)
    }
}

/// One row of the Scenario III table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Scenario3Row {
    pub name: String,
    pub primary_side: Side,
    pub primary_bound: f64,
    pub exchangeable_law: String,
    pub exchangeable_low: Option<f64>,
    pub exchangeable_high: Option<f64>,
    pub nonexchangeable_law: String,
    pub nonexchangeable_low: Option<f64>,
    pub nonexchangeable_high: Option<f64>,
    pub rho: f64,
}

fn parse_law(law: &str, low: Option<f64>, high: Option<f64>) -> Result<ThresholdLaw> {
    match (law, low, high) {
        ("none", None, None) => Ok(ThresholdLaw::None),
        ("uniform", Some(low), Some(high)) => Ok(ThresholdLaw::Uniform { low, high }),
        _ => Err(Error::Config(format!(
            "threshold law '{law}' with bounds {low:?}, {high:?} is not valid"
        ))),
    }
}

impl Scenario3Row {
    fn config(&self) -> ScenarioConfig {
        ScenarioConfig {
            scenario: Scenario::Three,
            truncation: TruncationScheme {
                primary_side: self.primary_side,
                primary_bound: self.primary_bound,
                exchangeable: parse_law(
                    &self.exchangeable_law,
                    self.exchangeable_low,
                    self.exchangeable_high,
                )
                .expect("validated when the table is read"),
                nonexchangeable: parse_law(
                    &self.nonexchangeable_law,
                    self.nonexchangeable_low,
                    self.nonexchangeable_high,
                )
                .expect("validated when the table is read"),
            },
            rbf: RbfConfig {
                rho: self.rho,
                ..RbfConfig::default()
            },
            ..ScenarioConfig::default()
        }
    }
}

/// Parses a Scenario III table (tab-separated, `#` comments).
pub fn parse_scenario3_table(text: &str) -> Result<Vec<Scenario3Row>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize::<Scenario3Row>().enumerate() {
        let row = record.map_err(|e| Error::Parse {
            row: i + 1,
            msg: e.to_string(),
        })?;
        parse_law(&row.exchangeable_law, row.exchangeable_low, row.exchangeable_high)?;
        parse_law(
            &row.nonexchangeable_law,
            row.nonexchangeable_low,
            row.nonexchangeable_high,
        )?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn scenario3_table() -> Result<Vec<Scenario3Row>> {
    parse_scenario3_table(SCENARIO3_TABLE)
}

/// A simulated dataset with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedDataset {
    pub dataset: Dataset,
    pub truth: ModelConfiguration,
    pub truth_mean: f64,
}

/// Metrics of all three methods on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub metrics: Vec<RepMetrics>,
}

/// Runs `f(rep)` for every replication on a pool of `width` threads and
/// returns results in replication order.
pub fn parallel_reps<T, F>(reps: usize, width: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(width.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..reps).into_par_iter().map(f).collect())
}

/// One replication of a scenario: generate, then evaluate every method.
pub fn simulate_rep(config: &ScenarioConfig, rep: usize) -> Result<RepRecord> {
    let mut rng = rep_rng(config.seed, rep as u64);
    let generated = generate::generate(config, &mut rng)?;
    let metrics = Method::ALL
        .iter()
        .map(|&m| {
            run_replication(
                &generated.dataset,
                m,
                &config.rbf,
                Some(&generated.truth),
                generated.truth_mean,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RepRecord { rep, metrics })
}

/// All replications of a scenario, in replication order.
pub fn run_scenario(config: &ScenarioConfig, width: usize) -> Result<Vec<RepRecord>> {
    config.validate()?;
    parallel_reps(config.reps, width, |rep| simulate_rep(config, rep))
}
