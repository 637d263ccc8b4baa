//! Per-replication metrics for each method and their aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mem::{esss, posterior_mixture, PosteriorMixture, PriorVector};
use crate::model::{Dataset, ModelConfiguration};
use crate::prior::{build_rbf_prior, RbfConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mem,
    Rbf,
    Naive,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mem, Method::Rbf, Method::Naive];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mem => "mem",
            Method::Rbf => "rbf",
            Method::Naive => "naive",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepMetrics {
    pub method: Method,
    pub posterior_mean: f64,
    pub posterior_variance: f64,
    /// Posterior mean minus the reference value.
    pub bias: f64,
    pub squared_error: f64,
    /// Weight of the ground-truth model; `None` for the naive method or when
    /// no ground truth is known.
    pub correct_model_weight: Option<f64>,
    pub esss: f64,
}

/// Posterior of one method on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodPosterior {
    Mixture(PosteriorMixture),
    Naive { mean: f64, variance: f64 },
}

impl MethodPosterior {
    pub fn moments(&self) -> (f64, f64) {
        match self {
            MethodPosterior::Mixture(m) => m.moments(),
            MethodPosterior::Naive { mean, variance } => (*mean, *variance),
        }
    }

    /// Posterior probability that each supplement is exchangeable.
    pub fn inclusion_probabilities(&self) -> Option<Vec<f64>> {
        match self {
            MethodPosterior::Mixture(m) => Some(m.weights().inclusion_probabilities()),
            MethodPosterior::Naive { .. } => None,
        }
    }
}

/// The posterior a method produces: flat-prior MEM, RBF-prior MEM, or the
/// primary-only sample mean.
pub fn method_posterior(
    dataset: &Dataset,
    method: Method,
    rbf: &RbfConfig,
) -> Result<MethodPosterior> {
    let primary = dataset.primary_summary();
    let supplements = dataset.supplement_summaries();
    match method {
        Method::Mem => Ok(MethodPosterior::Mixture(posterior_mixture(
            primary,
            &supplements,
            &PriorVector::flat(dataset.width())?,
        )?)),
        Method::Rbf => Ok(MethodPosterior::Mixture(posterior_mixture(
            primary,
            &supplements,
            &build_rbf_prior(dataset, rbf)?,
        )?)),
        Method::Naive => Ok(MethodPosterior::Naive {
            mean: primary.mean(),
            variance: primary.mean_variance(),
        }),
    }
}

/// Metrics of a posterior against a reference value and optional true model.
pub fn metrics_of(
    dataset: &Dataset,
    method: Method,
    posterior: &MethodPosterior,
    truth: Option<&ModelConfiguration>,
    reference: f64,
) -> RepMetrics {
    let (mean, variance) = posterior.moments();
    let bias = mean - reference;
    let (correct_model_weight, esss) = match posterior {
        MethodPosterior::Mixture(m) => (
            truth.map(|t| m.weight_of(t)),
            esss(variance, dataset.primary_summary()),
        ),
        MethodPosterior::Naive { .. } => (None, 0.0),
    };
    RepMetrics {
        method,
        posterior_mean: mean,
        posterior_variance: variance,
        bias,
        squared_error: bias * bias,
        correct_model_weight,
        esss,
    }
}

/// Evaluates one method on one dataset.
pub fn run_replication(
    dataset: &Dataset,
    method: Method,
    rbf: &RbfConfig,
    truth: Option<&ModelConfiguration>,
    reference: f64,
) -> Result<RepMetrics> {
    let posterior = method_posterior(dataset, method, rbf)?;
    Ok(metrics_of(dataset, method, &posterior, truth, reference))
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub mean: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("no values to summarize".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            q25: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q75: quantile_sorted(&sorted, 0.75),
            mean: values.iter().sum::<f64>() / values.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub reps: usize,
    pub posterior_variance: Quartiles,
    pub bias: Quartiles,
    pub abs_bias: Quartiles,
    pub squared_error: Quartiles,
    /// Mean squared error over replications.
    pub mse: f64,
    pub rmse: f64,
    pub correct_model_weight: Option<Quartiles>,
    pub esss: Quartiles,
}

/// Percentage change of RBF relative to MEM, `100 (rbf - mem) / |mem|`,
/// on medians unless noted. `None` when the MEM value is zero and RBF's is not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentChanges {
    pub posterior_variance: Option<f64>,
    /// On the median absolute bias.
    pub bias: Option<f64>,
    pub squared_error: Option<f64>,
    /// On the mean squared error.
    pub mse: Option<f64>,
    pub rmse: Option<f64>,
    pub correct_model_weight: Option<f64>,
    pub esss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub methods: Vec<MethodSummary>,
    pub rbf_vs_mem: Option<PercentChanges>,
}

impl MetricsSummary {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

pub fn percent_change(new: f64, old: f64) -> Option<f64> {
    if new == old {
        Some(0.0)
    } else if old == 0.0 {
        None
    } else {
        Some(100.0 * (new - old) / old.abs())
    }
}

fn summarize(method: Method, rows: &[&RepMetrics]) -> Result<MethodSummary> {
    let pick = |f: fn(&RepMetrics) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
    let squared = pick(|r| r.squared_error);
    let mse = squared.iter().sum::<f64>() / squared.len() as f64;
    let cmw: Option<Vec<f64>> = rows.iter().map(|r| r.correct_model_weight).collect();
    Ok(MethodSummary {
        method,
        reps: rows.len(),
        posterior_variance: Quartiles::of(&pick(|r| r.posterior_variance))?,
        bias: Quartiles::of(&pick(|r| r.bias))?,
        abs_bias: Quartiles::of(&pick(|r| r.bias.abs()))?,
        squared_error: Quartiles::of(&squared)?,
        mse,
        rmse: mse.sqrt(),
        correct_model_weight: cmw.map(|v| Quartiles::of(&v)).transpose()?,
        esss: Quartiles::of(&pick(|r| r.esss))?,
    })
}

/// Medians, quartiles and RBF-vs-MEM changes per method.
pub fn aggregate(metrics: &[RepMetrics]) -> Result<MetricsSummary> {
    if metrics.is_empty() {
        return Err(Error::Validation("cannot aggregate zero replications".into()));
    }
    let mut methods = Vec::new();
    for method in Method::ALL {
        let rows: Vec<&RepMetrics> = metrics.iter().filter(|m| m.method == method).collect();
        if !rows.is_empty() {
            methods.push(summarize(method, &rows)?);
        }
    }
    let find = |m: Method| methods.iter().find(|s| s.method == m);
    let rbf_vs_mem = match (find(Method::Rbf), find(Method::Mem)) {
        (Some(r), Some(m)) => Some(PercentChanges {
            posterior_variance: percent_change(
                r.posterior_variance.median,
                m.posterior_variance.median,
            ),
            bias: percent_change(r.abs_bias.median, m.abs_bias.median),
            squared_error: percent_change(r.squared_error.median, m.squared_error.median),
            mse: percent_change(r.mse, m.mse),
            rmse: percent_change(r.rmse, m.rmse),
            correct_model_weight: match (&r.correct_model_weight, &m.correct_model_weight) {
                (Some(a), Some(b)) => percent_change(a.median, b.median),
                _ => None,
            },
            esss: percent_change(r.esss.median, m.esss.median),
        }),
        _ => None,
    };
    Ok(MetricsSummary {
        methods,
        rbf_vs_mem,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{rep_rng, generate, ScenarioConfig};

    fn row(method: Method, v: f64) -> RepMetrics {
        RepMetrics {
            method,
            posterior_mean: v,
            posterior_variance: v,
            bias: v,
            squared_error: v * v,
            correct_model_weight: Some(0.5),
            esss: v,
        }
    }

    #[test]
    fn type7_quantiles() {
        // numpy.percentile([1, 2, 3, 4], [25, 50, 75]) = [1.75, 2.5, 3.25]
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((q.q25, q.median, q.q75), (1.75, 2.5, 3.25));
        let single = Quartiles::of(&[7.0]).unwrap();
        assert_eq!((single.q25, single.median, single.q75), (7.0, 7.0, 7.0));
        assert!(Quartiles::of(&[]).is_err());
    }

    #[test]
    fn identical_methods_have_zero_change() {
        let rows: Vec<RepMetrics> = [0.1, 0.4, 0.2]
            .iter()
            .flat_map(|&v| [row(Method::Mem, v), row(Method::Rbf, v)])
            .collect();
        let s = aggregate(&rows).unwrap();
        let c = s.rbf_vs_mem.unwrap();
        assert_eq!(c.posterior_variance, Some(0.0));
        assert_eq!(c.mse, Some(0.0));
        assert_eq!(percent_change(1.0, 0.0), None);
        assert_eq!(percent_change(1.5, -2.0), Some(175.0));
        assert_eq!(c.correct_model_weight, Some(0.0));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn mse_and_rmse() {
        let rows = vec![row(Method::Mem, 1.0), row(Method::Mem, -3.0)];
        let s = aggregate(&rows).unwrap();
        let m = s.method(Method::Mem).unwrap();
        assert_eq!(m.mse, 5.0);
        assert_eq!(m.rmse, 5f64.sqrt());
        assert_eq!(m.abs_bias.median, 2.0);
        assert!(s.rbf_vs_mem.is_none());
    }

    #[test]
    fn method_reductions_on_a_generated_dataset() {
        let cfg = ScenarioConfig::preset("s1-best").unwrap();
        let g = generate::generate(&cfg, &mut rep_rng(3, 0)).unwrap();
        let d = &g.dataset;
        let zero_a = RbfConfig { a: 0.0, ..cfg.rbf };
        let mem = run_replication(d, Method::Mem, &cfg.rbf, Some(&g.truth), 0.0).unwrap();
        let rbf0 = run_replication(d, Method::Rbf, &zero_a, Some(&g.truth), 0.0).unwrap();
        assert_eq!(mem.posterior_variance, rbf0.posterior_variance);
        assert_eq!(mem.correct_model_weight, rbf0.correct_model_weight);
        assert_eq!(mem.esss, rbf0.esss);

        let naive = run_replication(d, Method::Naive, &cfg.rbf, Some(&g.truth), 0.0).unwrap();
        let p = d.primary_summary();
        assert_eq!(naive.posterior_variance, p.variance() / p.n() as f64);
        assert_eq!(naive.correct_model_weight, None);

        let posterior = method_posterior(d, Method::Mem, &cfg.rbf).unwrap();
        let MethodPosterior::Mixture(m) = &posterior else {
            panic!("mixture expected")
        };
        assert_eq!(
            mem.correct_model_weight,
            Some(m.components()[g.truth.index()].weight)
        );
        assert_eq!(posterior.inclusion_probabilities().unwrap().len(), 10);
    }
}
