//! Random sums `S = X_1 + … + X_N` of i.i.d. exponentials with a geometric
//! count `N`.
//!
//! Two geometric conventions are provided. [`SupportConvention::FromZero`]
//! counts failures before the first success, so `P(N = 0) = p` and `S` has an
//! atom at zero. [`SupportConvention::FromOne`] counts trials up to and
//! including the first success; the sum is then exactly exponential with rate
//! `rate·p`, whatever `p` is.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportConvention {
    /// `N ∈ {0, 1, 2, …}`.
    FromZero,
    /// `N ∈ {1, 2, …}`.
    #[default]
    FromOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSumSpec {
    pub p: f64,
    pub rate: f64,
    pub support_convention: SupportConvention,
}

impl RandomSumSpec {
    pub fn new(p: f64, rate: f64, support_convention: SupportConvention) -> Result<Self> {
        let spec = RandomSumSpec {
            p,
            rate,
            support_convention,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::param("p", format!("must lie in (0, 1), got {}", self.p)));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::param("rate", format!("must be positive, got {}", self.rate)));
        }
        Ok(())
    }

    /// `(E N, Var N)` under the convention.
    pub fn count_moments(&self) -> (f64, f64) {
        let p = self.p;
        let var = (1.0 - p) / (p * p);
        match self.support_convention {
            SupportConvention::FromZero => ((1.0 - p) / p, var),
            SupportConvention::FromOne => (1.0 / p, var),
        }
    }

    /// Inverse-CDF geometric draw from `u ∈ (0, 1]`.
    fn count_from_uniform(&self, u: f64) -> u64 {
        let failures = (u.ln() / (1.0 - self.p).ln()).floor();
        let failures = if failures.is_finite() { failures as u64 } else { 0 };
        match self.support_convention {
            SupportConvention::FromZero => failures,
            SupportConvention::FromOne => failures + 1,
        }
    }
}

/// Mean and variance of a random sum from the moments of its summands and of
/// its count.
pub fn random_sum_moments(e_x: f64, var_x: f64, e_n: f64, var_n: f64) -> Result<(f64, f64)> {
    if var_x < 0.0 || var_n < 0.0 {
        return Err(Error::Argument(format!(
            "variances must be non-negative, got Var X = {var_x}, Var N = {var_n}"
        )));
    }
    Ok((e_x * e_n, e_n * var_x + var_n * e_x * e_x))
}

/// Closed-form `(E S, Var S)` for exponential summands.
pub fn geometric_exponential_moments(spec: &RandomSumSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let (p, rate) = (spec.p, spec.rate);
    Ok(match spec.support_convention {
        SupportConvention::FromZero => {
            let mean = (1.0 - p) / (rate * p);
            (mean, mean * (1.0 + p) / (rate * p))
        }
        SupportConvention::FromOne => {
            let mean = 1.0 / (rate * p);
            (mean, mean * mean)
        }
    })
}

/// Summary of a simulated batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub zero_fraction: f64,
    /// KS distance to the exponential whose mean is the closed-form `E S`.
    pub ks_stat: f64,
    pub mean_se: f64,
    /// Standard error of the sample variance from the fourth central moment.
    pub variance_se: f64,
}

/// Draws `n` replicates of `S` from a ChaCha8 stream seeded with `seed`.
pub fn simulate_random_sum(spec: &RandomSumSpec, n: usize, seed: u64) -> Result<(SimResult, Vec<f64>)> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Argument("need at least one replicate".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let count = spec.count_from_uniform(1.0 - rng.random::<f64>());
            (0..count)
                .map(|_| -(1.0 - rng.random::<f64>()).ln() / spec.rate)
                .sum()
        })
        .collect();
    let (expected_mean, _) = geometric_exponential_moments(spec)?;
    let summary = summarize(&samples, |x| exponential_cdf(x, 1.0 / expected_mean))?;
    Ok((summary, samples))
}

/// Moments, zero fraction and KS distance of a batch.
pub fn summarize<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<SimResult> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::Argument("empty sample batch".into()));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (m2, m4) = samples.iter().fold((0.0, 0.0), |(m2, m4), &x| {
        let d2 = (x - mean).powi(2);
        (m2 + d2, m4 + d2 * d2)
    });
    let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
    let central2 = m2 / nf;
    let central4 = m4 / nf;
    Ok(SimResult {
        n,
        mean,
        variance,
        zero_fraction: samples.iter().filter(|&&x| x == 0.0).count() as f64 / nf,
        ks_stat: ks_statistic(samples, cdf)?,
        mean_se: (variance / nf).sqrt(),
        variance_se: ((central4 - central2 * central2).max(0.0) / nf).sqrt(),
    })
}

pub fn exponential_cdf(x: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-rate * x).exp_m1()
    }
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical CDF of
/// `samples` and `cdf`. The batch need not be sorted.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("KS statistic of an empty batch".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max))
}

/// Asymptotic Kolmogorov critical value `sqrt(-ln(level/2)/2)/√n`.
pub fn ks_critical_value(level: f64, n: usize) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Both conventions side by side at one `(p, rate)`: which of them makes the
/// mean equal the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub p: f64,
    pub rate: f64,
    pub from_zero_mean: f64,
    pub from_zero_sd: f64,
    pub from_one_mean: f64,
    pub from_one_sd: f64,
}

impl DiscrepancyReport {
    pub fn new(p: f64, rate: f64) -> Result<Self> {
        let (zm, zv) =
            geometric_exponential_moments(&RandomSumSpec::new(p, rate, SupportConvention::FromZero)?)?;
        let (om, ov) =
            geometric_exponential_moments(&RandomSumSpec::new(p, rate, SupportConvention::FromOne)?)?;
        Ok(DiscrepancyReport {
            p,
            rate,
            from_zero_mean: zm,
            from_zero_sd: zv.sqrt(),
            from_one_mean: om,
            from_one_sd: ov.sqrt(),
        })
    }

    pub fn from_zero_mean_equals_sd(&self) -> bool {
        (self.from_zero_mean - self.from_zero_sd).abs() <= 1e-12 * self.from_zero_sd
    }

    pub fn from_one_mean_equals_sd(&self) -> bool {
        (self.from_one_mean - self.from_one_sd).abs() <= 1e-12 * self.from_one_sd
    }

    pub fn lines(&self) -> Vec<String> {
        vec![
            format!(
                "counting from zero (p={}, rate={}): E S = {}, sd S = {}, mean = sd: {}; P(S = 0) = p, so S is not exponential",
                self.p,
                self.rate,
                self.from_zero_mean,
                self.from_zero_sd,
                self.from_zero_mean_equals_sd()
            ),
            format!(
                "counting from one  (p={}, rate={}): E S = {}, sd S = {}, mean = sd: {}; S ~ Exponential(rate·p)",
                self.p,
                self.rate,
                self.from_one_mean,
                self.from_one_sd,
                self.from_one_mean_equals_sd()
            ),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn random_sum_examples() {
        assert_eq!(random_sum_moments(1.0, 0.0, 1.0, 0.0).unwrap(), (1.0, 0.0));
        assert_eq!(random_sum_moments(2.0, 4.0, 3.0, 3.0).unwrap(), (6.0, 24.0));
        assert!(random_sum_moments(1.0, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn geometric_examples() {
        let z = RandomSumSpec::new(0.5, 1.0, SupportConvention::FromZero).unwrap();
        assert_eq!(geometric_exponential_moments(&z).unwrap(), (1.0, 3.0));
        let o = RandomSumSpec::new(0.5, 1.0, SupportConvention::FromOne).unwrap();
        assert_eq!(geometric_exponential_moments(&o).unwrap(), (2.0, 4.0));
    }

    #[test]
    fn closed_forms_agree_with_general_identity() {
        for p in [0.1, 0.2, 0.5, 0.8, 0.95] {
            for rate in [0.5, 1.0, 3.0] {
                for conv in [SupportConvention::FromZero, SupportConvention::FromOne] {
                    let spec = RandomSumSpec::new(p, rate, conv).unwrap();
                    let (en, vn) = spec.count_moments();
                    let (a, b) = random_sum_moments(1.0 / rate, 1.0 / (rate * rate), en, vn).unwrap();
                    let (c, d) = geometric_exponential_moments(&spec).unwrap();
                    assert_relative_eq!(a, c, max_relative = 1e-14);
                    assert_relative_eq!(b, d, max_relative = 1e-14);
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(RandomSumSpec::new(0.0, 1.0, SupportConvention::FromOne).is_err());
        assert!(RandomSumSpec::new(1.0, 1.0, SupportConvention::FromOne).is_err());
        assert!(RandomSumSpec::new(0.5, 0.0, SupportConvention::FromOne).is_err());
    }

    #[test]
    fn ks_examples() {
        let n = 1000;
        let samples: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
        assert_relative_eq!(d, 0.5 / n as f64, max_relative = 1e-9);
        assert_eq!(ks_statistic(&[0.0; 10], |x| exponential_cdf(x, 1.0)).unwrap(), 1.0);
        assert!(ks_statistic(&[], |x| x).is_err());
    }

    #[test]
    fn uniform_draws_pass_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < 1.63 / (n as f64).sqrt());
    }

    #[test]
    fn critical_values() {
        assert_relative_eq!(ks_critical_value(0.01, 1), 1.6276, epsilon = 1e-4);
        assert_relative_eq!(ks_critical_value(0.05, 1), 1.3581, epsilon = 1e-4);
    }

    #[test]
    fn simulation_is_deterministic_and_has_atom() {
        let spec = RandomSumSpec::new(0.5, 1.0, SupportConvention::FromZero).unwrap();
        let (a, xs) = simulate_random_sum(&spec, 20_000, 9).unwrap();
        let (b, ys) = simulate_random_sum(&spec, 20_000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(xs, ys);
        assert!((a.zero_fraction - 0.5).abs() < 3.0 * (0.25f64 / 20_000.0).sqrt());
        assert!(a.ks_stat > 0.5 - 0.02);
        assert!(simulate_random_sum(&spec, 0, 1).is_err());
    }

    #[test]
    fn from_one_is_exponential() {
        let spec = RandomSumSpec::new(0.5, 1.0, SupportConvention::FromOne).unwrap();
        let n = 100_000;
        let (s, _) = simulate_random_sum(&spec, n, 5).unwrap();
        assert_eq!(s.zero_fraction, 0.0);
        assert!(s.ks_stat < ks_critical_value(0.01, n), "{}", s.ks_stat);
    }

    #[test]
    fn discrepancy_at_one_half() {
        let r = DiscrepancyReport::new(0.5, 1.0).unwrap();
        assert!(!r.from_zero_mean_equals_sd());
        assert!(r.from_one_mean_equals_sd());
        assert_relative_eq!(r.from_zero_sd, 3f64.sqrt());
        assert_eq!(r.lines().len(), 2);
    }
}
