use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};

use crate::error::{Error, Result};

/// Smallest acceptance probability the rejection sampler will attempt.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

/// Which side of the bound draws must fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `x > bound`
    Above,
    /// `x < bound`
    Below,
}

impl Side {
    pub fn admits(self, x: f64, bound: f64) -> bool {
        match self {
            Side::Above => x > bound,
            Side::Below => x < bound,
        }
    }
}

/// Probability that `N(mu, sigma^2)` lands on the admitted side of `bound`.
pub fn acceptance_probability(mu: f64, sigma: f64, bound: f64, side: Side) -> f64 {
    let z = NormalCdf::new(mu, sigma).expect("sigma checked positive");
    match side {
        Side::Above => z.sf(bound),
        Side::Below => z.cdf(bound),
    }
}

/// One draw from `N(mu, sigma^2)` truncated to one side of `bound`, by
/// rejection. An infinite bound on the open side means no truncation.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    bound: f64,
    side: Side,
    rng: &mut R,
) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() || bound.is_nan() {
        return Err(Error::Validation(format!(
            "truncated normal needs finite mu and positive sigma, got mu={mu}, sigma={sigma}"
        )));
    }
    let accept = acceptance_probability(mu, sigma, bound, side);
    if accept < MIN_ACCEPTANCE {
        return Err(Error::InfeasibleTruncation(accept));
    }
    let normal = Normal::new(mu, sigma).expect("validated parameters");
    loop {
        let x = normal.sample(rng);
        if side.admits(x, bound) {
            return Ok(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unbounded_side_is_a_plain_normal() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.5, 2.0).unwrap();
        for _ in 0..100 {
            let x = sample_truncated_normal(0.5, 2.0, f64::NEG_INFINITY, Side::Above, &mut a).unwrap();
            assert_eq!(x, normal.sample(&mut b));
        }
    }

    #[test]
    fn half_normal_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_truncated_normal(0.0, 1.0, 0.0, Side::Above, &mut rng).unwrap();
        }
        let mean = sum / n as f64;
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - expected).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn draws_respect_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &u in &[-1.0, -0.3, 0.0, 0.8, 2.0] {
            for _ in 0..2000 {
                assert!(sample_truncated_normal(1.0, 1.0, u, Side::Above, &mut rng).unwrap() > u);
                assert!(sample_truncated_normal(0.0, 1.0, u, Side::Below, &mut rng).unwrap() < u);
            }
        }
    }

    #[test]
    fn extreme_bound_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = sample_truncated_normal(0.0, 1.0, 6.0, Side::Above, &mut rng).unwrap_err();
        assert!(matches!(err, Error::InfeasibleTruncation(_)));
        assert!(sample_truncated_normal(0.0, 0.0, 0.0, Side::Above, &mut rng).is_err());
    }

    #[test]
    fn paper_thresholds_accept_at_least_two_percent() {
        // Supplements: TN_{x>u} with mean 0 or 1 and u up to 2.
        assert!(acceptance_probability(0.0, 1.0, 2.0, Side::Above) > 0.02);
        assert!(acceptance_probability(1.0, 1.0, 2.0, Side::Above) > 0.02);
    }
}
