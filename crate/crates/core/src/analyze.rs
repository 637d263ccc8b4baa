//! Subsample-and-repeat analysis of a real multi-source dataset.
//!
//! For each chosen primary and each replication, `subsample_n` target values
//! are drawn without replacement from every source (or from the primary only),
//! MEM, RBF and the naive estimator are run, and bias is measured against the
//! primary's full-data mean. Parameter samples aligned one-to-one with a
//! source's target rows are subsampled at the same positions; otherwise they
//! are used whole. Characteristics are always used whole.
//!
//! Replication `rep` of the primary at file position `i` draws from stream
//! `(i << 32) | rep` of the base seed.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SourceCollection;
use crate::model::Parameter;
use crate::prior::RbfConfig;
use crate::sim::metrics::{method_posterior, metrics_of, Method, RepMetrics};
use crate::sim::{parallel_reps, rep_rng};

/// Which sources act as primary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum PrimarySelection {
    All,
    One(String),
}

impl From<String> for PrimarySelection {
    fn from(s: String) -> Self {
        if s == "*" {
            Self::All
        } else {
            Self::One(s)
        }
    }
}

impl From<PrimarySelection> for String {
    fn from(p: PrimarySelection) -> Self {
        match p {
            PrimarySelection::All => "*".into(),
            PrimarySelection::One(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub primary: PrimarySelection,
    pub subsample_n: usize,
    pub subsample_supplements: bool,
    pub reps: usize,
    pub seed: u64,
    pub rbf: RbfConfig,
}

impl AnalyzeOptions {
    pub fn new(primary: PrimarySelection) -> Self {
        Self {
            primary,
            subsample_n: 10,
            subsample_supplements: true,
            reps: 500,
            seed: 20240101,
            rbf: RbfConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsample_n < 2 {
            return Err(Error::Config("subsample_n must be at least 2".into()));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        self.rbf.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeRecord {
    pub primary: String,
    pub rep: usize,
    pub reference_mean: f64,
    pub metrics: Vec<RepMetrics>,
    /// Per method with model weights (MEM, RBF): posterior inclusion
    /// probability of each supplement, in file order with the primary skipped.
    pub inclusion: Vec<(Method, Vec<f64>)>,
}

/// Average posterior inclusion probabilities: `values[s][p]` is the mean
/// weight on source `s` when `p` is the primary. The diagonal is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub method: Method,
    pub ids: Vec<String>,
    pub primaries: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResult {
    pub records: Vec<AnalyzeRecord>,
    pub weights: Vec<WeightMatrix>,
}

impl AnalyzeResult {
    pub fn metrics(&self) -> Vec<RepMetrics> {
        self.records
            .iter()
            .flat_map(|r| r.metrics.iter().cloned())
            .collect()
    }
}

fn subsample_source<R: Rng + ?Sized>(
    targets: &[f64],
    params: &[&[f64]],
    n: usize,
    rng: &mut R,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut idx = sample(rng, targets.len(), n).into_vec();
    idx.sort_unstable();
    let t = idx.iter().map(|&i| targets[i]).collect();
    let p = params
        .iter()
        .map(|s| {
            if s.len() == targets.len() {
                idx.iter().map(|&i| s[i]).collect()
            } else {
                s.to_vec()
            }
        })
        .collect();
    (t, p)
}

fn one_rep(
    data: &SourceCollection,
    primary: usize,
    rep: usize,
    options: &AnalyzeOptions,
) -> Result<AnalyzeRecord> {
    let mut rng = rep_rng(options.seed, ((primary as u64) << 32) | rep as u64);
    let mut targets = Vec::with_capacity(data.len());
    let mut param_samples: Vec<Vec<Vec<f64>>> = vec![Vec::new(); data.parameters.len()];
    for s in 0..data.len() {
        let params: Vec<&[f64]> = data
            .parameters
            .iter()
            .map(|p| p.samples[s].as_slice())
            .collect();
        let (t, p) = if s == primary || options.subsample_supplements {
            subsample_source(&data.targets[s], &params, options.subsample_n, &mut rng)
        } else {
            (
                data.targets[s].clone(),
                params.iter().map(|p| p.to_vec()).collect(),
            )
        };
        targets.push(t);
        for (l, samples) in p.into_iter().enumerate() {
            param_samples[l].push(samples);
        }
    }
    let parameters: Vec<Parameter> = data
        .parameters
        .iter()
        .zip(param_samples)
        .map(|(p, samples)| Parameter {
            name: p.name.clone(),
            samples,
        })
        .collect();
    let dataset = data.dataset_with_targets(primary, &targets, &parameters)?;
    let full = &data.targets[primary];
    let reference = full.iter().sum::<f64>() / full.len() as f64;

    let mut metrics = Vec::new();
    let mut inclusion = Vec::new();
    for method in Method::ALL {
        let posterior = method_posterior(&dataset, method, &options.rbf)?;
        metrics.push(metrics_of(&dataset, method, &posterior, None, reference));
        if let Some(p) = posterior.inclusion_probabilities() {
            inclusion.push((method, p));
        }
    }
    Ok(AnalyzeRecord {
        primary: data.ids[primary].clone(),
        rep,
        reference_mean: reference,
        metrics,
        inclusion,
    })
}

fn weight_matrices(
    data: &SourceCollection,
    primaries: &[usize],
    records: &[AnalyzeRecord],
) -> Vec<WeightMatrix> {
    [Method::Mem, Method::Rbf]
        .into_iter()
        .map(|method| {
            let mut values = vec![vec![0.0; primaries.len()]; data.len()];
            for (col, &p) in primaries.iter().enumerate() {
                let rows: Vec<&Vec<f64>> = records
                    .iter()
                    .filter(|r| r.primary == data.ids[p])
                    .filter_map(|r| {
                        r.inclusion
                            .iter()
                            .find(|(m, _)| *m == method)
                            .map(|(_, v)| v)
                    })
                    .collect();
                let order = data.order_for(p);
                for (h, &s) in order[1..].iter().enumerate() {
                    let total: f64 = rows.iter().map(|v| v[h]).sum();
                    values[s][col] = total / rows.len() as f64;
                }
            }
            WeightMatrix {
                method,
                ids: data.ids.clone(),
                primaries: primaries.iter().map(|&p| data.ids[p].clone()).collect(),
                values,
            }
        })
        .collect()
}

/// Runs the full workflow on `width` threads. Output order is by primary
/// (file order) then replication.
pub fn run_analysis(
    data: &SourceCollection,
    options: &AnalyzeOptions,
    width: usize,
) -> Result<AnalyzeResult> {
    options.validate()?;
    let primaries: Vec<usize> = match &options.primary {
        PrimarySelection::All => (0..data.len()).collect(),
        PrimarySelection::One(id) => vec![data.position(id)?],
    };
    for (s, t) in data.targets.iter().enumerate() {
        let subsampled = options.subsample_supplements || primaries.contains(&s);
        if subsampled && t.len() < options.subsample_n {
            return Err(Error::InsufficientData(format!(
                "source '{}' has {} target samples, fewer than subsample_n = {}",
                data.ids[s],
                t.len(),
                options.subsample_n
            )));
        }
    }
    let jobs: Vec<(usize, usize)> = primaries
        .iter()
        .flat_map(|&p| (0..options.reps).map(move |r| (p, r)))
        .collect();
    let records = parallel_reps(jobs.len(), width, |j| {
        let (p, r) = jobs[j];
        one_rep(data, p, r, options)
    })?;
    let weights = weight_matrices(data, &primaries, &records);
    Ok(AnalyzeResult { records, weights })
}
