//! Moment-matching estimation.
//!
//! [`fit_two_component`] fits `(λ, M1, σ2)` of the product model to an
//! observed `(mean, variance)` pair by least squares over four standardized
//! moment equations, with `σ1` eliminated through
//! `σ1² = (Var - mean² σ2²)/(1 + σ2²)`.
//!
//! [`fit_mode_mean`] identifies `(α, λ)` of a single RMM density from its
//! mode density and standardized mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{halton_points, levenberg_marquardt, nelder_mead, Bounds, LmOptions, NelderMeadOptions};
use crate::rmm::{RmmShape, NORMAL_L};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTarget {
    pub mean: f64,
    pub variance: f64,
}

impl MomentTarget {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::param("mean", format!("must be positive, got {mean}")));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::param("variance", format!("must be positive, got {variance}")));
        }
        Ok(MomentTarget { mean, variance })
    }
}

/// A point `(λ, M1, σ2)` of the search box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub lambda: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    pub sigma2: f64,
}

impl Candidate {
    fn from_slice(x: &[f64]) -> Self {
        Candidate {
            lambda: x[0],
            m1: x[1],
            sigma2: x[2],
        }
    }
}

/// `σ1` implied by a target and `σ2`, or `None` when `Var <= mean² σ2²`.
pub fn sigma1_from(target: &MomentTarget, sigma2: f64) -> Option<f64> {
    let s2 = sigma2 * sigma2;
    let num = target.variance - target.mean * target.mean * s2;
    if num > 0.0 {
        Some((num / (1.0 + s2)).sqrt())
    } else {
        None
    }
}

/// Outcome of evaluating the four moment equations at a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Residuals {
    /// `[E(Z1) - d, E(Z1²) - (1 + d²), E(Z2), E(Z2²) - 1]` with
    /// `d = (μ1 - M1)/σ1`.
    Feasible([f64; 4]),
    /// `σ1² <= 0`; `distance` is how far `σ2` lies beyond `sqrt(Var)/mean`.
    Infeasible { distance: f64 },
}

impl Residuals {
    pub fn sum_of_squares(&self, penalty: f64) -> f64 {
        match self {
            Residuals::Feasible(r) => r.iter().map(|v| v * v).sum(),
            Residuals::Infeasible { distance } => penalty + distance,
        }
    }
}

/// `(E(Z2), E(Z2²))` for `Z2 = ε/σ2`: a standard normal truncated at `-1/σ2`.
pub fn z2_moments(sigma2: f64) -> Result<(f64, f64)> {
    let shape = RmmShape::new(1.0, 2.0, 1.0 / sigma2)?;
    Ok((shape.raw_moment_closed_form(1)?, shape.raw_moment_closed_form(2)?))
}

/// The four moment-equation residuals on the dimensionless z-scale.
pub fn residual_vector(candidate: &Candidate, target: &MomentTarget) -> Result<Residuals> {
    let Some(sigma1) = sigma1_from(target, candidate.sigma2) else {
        let boundary = target.variance.sqrt() / target.mean;
        return Ok(Residuals::Infeasible {
            distance: (candidate.sigma2 - boundary).max(0.0),
        });
    };
    let d = (target.mean - candidate.m1) / sigma1;
    let z1 = RmmShape::new(2.0 - candidate.lambda, candidate.lambda, candidate.m1 / sigma1)?;
    let (e1, e2) = (z1.raw_moment_closed_form(1)?, z1.raw_moment_closed_form(2)?);
    let (f1, f2) = z2_moments(candidate.sigma2)?;
    Ok(Residuals::Feasible([e1 - d, e2 - (1.0 + d * d), f1, f2 - 1.0]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub starts: usize,
    pub max_iterations: usize,
    pub diameter_tol: f64,
    pub penalty: f64,
    pub sigma2_min: f64,
    pub sigma2_max: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            starts: 8,
            max_iterations: 2000,
            diameter_tol: 1e-9,
            penalty: 1e12,
            sigma2_min: 1e-6,
            sigma2_max: crate::bivariate::SIGMA2_MAX,
        }
    }
}

impl FitConfig {
    /// `λ ∈ [1, 2]`, `M1 ∈ [0, mean]`, `σ2 ∈ [σ2_min, σ2_max]`.
    pub fn search_box(&self, target: &MomentTarget) -> Result<Bounds> {
        Bounds::new(
            vec![1.0, 0.0, self.sigma2_min],
            vec![2.0, target.mean, self.sigma2_max],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    Converged,
    MaxIterations,
    BoundaryHit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub lambda: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    pub sigma2: f64,
    pub sigma1: f64,
    pub residual: f64,
    pub residuals: [f64; 4],
    pub status: FitStatus,
    pub iterations: usize,
}

impl FitResult {
    pub fn candidate(&self) -> Candidate {
        Candidate {
            lambda: self.lambda,
            m1: self.m1,
            sigma2: self.sigma2,
        }
    }
}

fn objective(x: &[f64], target: &MomentTarget, penalty: f64) -> f64 {
    match residual_vector(&Candidate::from_slice(x), target) {
        Ok(r) => r.sum_of_squares(penalty),
        Err(_) => f64::INFINITY,
    }
}

/// Multi-start Nelder–Mead over the search box, plus a separate search of the
/// `λ = 2` face. Starts are Halton points.
pub fn fit_two_component(target: &MomentTarget, config: &FitConfig) -> Result<FitResult> {
    let bounds = config.search_box(target)?;
    let opts = NelderMeadOptions {
        max_iterations: config.max_iterations,
        diameter_tol: config.diameter_tol,
        initial_step: 0.1,
    };
    let mut best: Option<crate::optimize::Minimum> = None;
    for u in halton_points(config.starts.max(1), 3) {
        let start = bounds.from_unit(&u);
        let m = nelder_mead(|x| objective(x, target, config.penalty), &start, &bounds, &opts);
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one start");
    // At λ = 2 the weight α1 = 2 - λ vanishes and Z1 switches to the uniform
    // convention, so the objective jumps there; search that face on its own.
    let face = Bounds::new(vec![bounds.lower[1], bounds.lower[2]], vec![bounds.upper[1], bounds.upper[2]])?;
    for u in halton_points(config.starts.max(1) / 2 + 1, 2) {
        let start = face.from_unit(&u);
        let m = nelder_mead(
            |x| objective(&[2.0, x[0], x[1]], target, config.penalty),
            &start,
            &face,
            &opts,
        );
        if m.value < best.value {
            best = crate::optimize::Minimum {
                x: vec![2.0, m.x[0], m.x[1]],
                ..m
            };
        }
    }
    if !best.value.is_finite() {
        return Err(Error::numerical("fit_two_component", "objective is not finite at any start"));
    }
    if best.value >= config.penalty {
        return Err(Error::Infeasible(format!(
            "every start violates σ1² > 0 (variance {} < mean² σ2² for all σ2 >= {})",
            target.variance, config.sigma2_min
        )));
    }
    let candidate = Candidate::from_slice(&best.x);
    let Residuals::Feasible(residuals) = residual_vector(&candidate, target)? else {
        return Err(Error::Infeasible("best point is infeasible".into()));
    };
    let sigma1 = sigma1_from(target, candidate.sigma2).expect("feasible point");
    let status = if !best.converged {
        FitStatus::MaxIterations
    } else if bounds.on_boundary(&best.x, 1e-9) {
        FitStatus::BoundaryHit
    } else {
        FitStatus::Converged
    };
    Ok(FitResult {
        lambda: candidate.lambda,
        m1: candidate.m1,
        sigma2: candidate.sigma2,
        sigma1,
        residual: best.value,
        residuals,
        status,
        iterations: best.iterations,
    })
}

/// Best point of a uniform `n × n × n` grid over the search box (endpoints
/// included).
pub fn grid_oracle(target: &MomentTarget, config: &FitConfig, n: usize) -> Result<(Candidate, f64)> {
    let bounds = config.search_box(target)?;
    let axis = |i: usize, j: usize| {
        if n == 1 {
            bounds.lower[i] + 0.5 * bounds.width(i)
        } else {
            bounds.lower[i] + bounds.width(i) * j as f64 / (n - 1) as f64
        }
    };
    let mut best = (Candidate::from_slice(&bounds.lower), f64::INFINITY);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let x = [axis(0, a), axis(1, b), axis(2, c)];
                let v = objective(&x, target, config.penalty);
                if v < best.1 {
                    best = (Candidate::from_slice(&x), v);
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMeanTarget {
    pub mode_density: f64,
    pub standardized_mean: f64,
}

impl ModeMeanTarget {
    pub fn new(mode_density: f64, standardized_mean: f64) -> Result<Self> {
        if !(mode_density > 0.0) || !mode_density.is_finite() {
            return Err(Error::param("mode_density", format!("must be positive, got {mode_density}")));
        }
        if !standardized_mean.is_finite() {
            return Err(Error::param("standardized_mean", "must be finite"));
        }
        Ok(ModeMeanTarget {
            mode_density,
            standardized_mean,
        })
    }

    /// The target an exact RMM shape produces.
    pub fn from_shape(shape: &RmmShape) -> Result<Self> {
        let kappa = shape.normalizer_closed_form()?;
        Self::new(kappa * (shape.alpha / shape.lambda).exp(), shape.raw_moment_closed_form(1)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMeanFit {
    pub alpha: f64,
    pub lambda: f64,
    pub kappa: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub residual: f64,
}

/// Residual norm below which `fit_mode_mean` reports success.
pub const MODE_MEAN_TOLERANCE: f64 = 1e-8;

fn mode_mean_residuals(x: &[f64], target: &ModeMeanTarget) -> Result<Vec<f64>> {
    let shape = RmmShape::new(x[0], x[1], x[2])?;
    let kappa = shape.normalizer_closed_form()?;
    let m1 = shape.raw_moment_closed_form(1)?;
    let m2 = shape.raw_moment_closed_form(2)?;
    Ok(vec![
        kappa * (x[0] / x[1]).exp() - target.mode_density,
        m1 - target.standardized_mean,
        m2 - m1 * m1 - 1.0,
    ])
}

/// Solves for `(α, λ)` matching the mode density and the standardized mean.
/// `L` is the third unknown, pinned by the unit variance that
/// mode-standardization by the standard deviation implies.
pub fn fit_mode_mean(target: &ModeMeanTarget) -> Result<ModeMeanFit> {
    let bounds = Bounds::new(vec![1e-3, 0.05, 0.0], vec![4.0, crate::rmm::DEFAULT_UPPER_LAMBDA, NORMAL_L])?;
    let starts = [
        [1.0, 1.0, 0.5],
        [1.0, 2.0, 8.0],
        [1.0, 1.5, 2.0],
        [0.5, 1.2, 1.0],
        [2.0, 1.5, 1.0],
        [1.5, 3.0, 4.0],
        [0.8, 0.7, 0.3],
    ];
    let opts = LmOptions::default();
    let mut best: Option<crate::optimize::LmSolution> = None;
    for start in starts {
        let Ok(sol) = levenberg_marquardt(|x| mode_mean_residuals(x, target), &start, &bounds, &opts) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| sol.cost < b.cost) {
            best = Some(sol);
        }
        if best.as_ref().is_some_and(|b| b.cost.sqrt() < MODE_MEAN_TOLERANCE * 1e-3) {
            break;
        }
    }
    let best = best.ok_or_else(|| Error::Infeasible("no start produced a valid evaluation".into()))?;
    let residual = best.cost.sqrt();
    if residual > MODE_MEAN_TOLERANCE {
        return Err(Error::Infeasible(format!(
            "no root in the box: best residual {residual:e} at α={}, λ={}, L={}",
            best.x[0], best.x[1], best.x[2]
        )));
    }
    let shape = RmmShape::new(best.x[0], best.x[1], best.x[2])?;
    Ok(ModeMeanFit {
        alpha: best.x[0],
        lambda: best.x[1],
        kappa: shape.normalizer_closed_form()?,
        l: best.x[2],
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigma1_substitution() {
        let t = MomentTarget::new(2.0, 1.0).unwrap();
        let s1 = sigma1_from(&t, 0.1).unwrap();
        assert_relative_eq!(s1 * s1, (1.0 - 4.0 * 0.01) / 1.01, max_relative = 1e-14);
        assert!(sigma1_from(&MomentTarget::new(10.0, 0.01).unwrap(), 0.15).is_none());
    }

    #[test]
    fn exponential_candidate_has_small_residuals() {
        let t = MomentTarget::new(1.0, 1.0).unwrap();
        let c = Candidate {
            lambda: 1.0,
            m1: 0.0,
            sigma2: 1e-4,
        };
        let Residuals::Feasible(r) = residual_vector(&c, &t).unwrap() else {
            panic!("feasible expected")
        };
        assert!(r.iter().all(|v| v.abs() < 1e-3), "{r:?}");
    }

    #[test]
    fn third_residual_is_tiny_for_wide_support() {
        let t = MomentTarget::new(1.0, 1.0).unwrap();
        let c = Candidate {
            lambda: 2.0,
            m1: 0.5,
            sigma2: 0.05,
        };
        let Residuals::Feasible(r) = residual_vector(&c, &t).unwrap() else {
            panic!("feasible expected")
        };
        assert!(r[2] > 0.0 && r[2] < 1e-80, "{}", r[2]);
    }

    #[test]
    fn infeasible_candidate_is_penalized() {
        let t = MomentTarget::new(10.0, 0.01).unwrap();
        let c = Candidate {
            lambda: 1.5,
            m1: 5.0,
            sigma2: 0.15,
        };
        let r = residual_vector(&c, &t).unwrap();
        assert!(matches!(r, Residuals::Infeasible { .. }));
        assert!(r.sum_of_squares(1e12) >= 1e12);
    }

    #[test]
    fn exponential_target_fit() {
        let t = MomentTarget::new(1.0, 1.0).unwrap();
        let fit = fit_two_component(&t, &FitConfig::default()).unwrap();
        assert!((fit.lambda - 1.0).abs() < 0.05, "{fit:?}");
        assert!(fit.residual < 1e-4, "{fit:?}");
        let s1 = sigma1_from(&t, fit.sigma2).unwrap();
        assert_eq!(s1, fit.sigma1);
    }

    #[test]
    fn all_infeasible_is_an_error() {
        let t = MomentTarget::new(1e6, 1e-6).unwrap();
        let cfg = FitConfig {
            sigma2_min: 1e-3,
            ..FitConfig::default()
        };
        assert!(matches!(fit_two_component(&t, &cfg), Err(Error::Infeasible(_))));
    }

    #[test]
    fn mode_mean_exponential() {
        let t = ModeMeanTarget::new(1.0, 1.0).unwrap();
        let f = fit_mode_mean(&t).unwrap();
        assert!((f.alpha - 1.0).abs() < 1e-4 && (f.lambda - 1.0).abs() < 1e-4, "{f:?}");
    }

    #[test]
    fn mode_mean_normal() {
        let t = ModeMeanTarget::new(1.0 / (2.0 * std::f64::consts::PI).sqrt(), 0.0).unwrap();
        let f = fit_mode_mean(&t).unwrap();
        assert!((f.alpha - 1.0).abs() < 1e-4 && (f.lambda - 2.0).abs() < 1e-4, "{f:?}");
    }

    #[test]
    fn mode_mean_interior_member() {
        let l = crate::rmm::unit_variance_l(1.0, 1.5).unwrap();
        let shape = RmmShape::new(1.0, 1.5, l).unwrap();
        let t = ModeMeanTarget::from_shape(&shape).unwrap();
        let f = fit_mode_mean(&t).unwrap();
        assert!((f.alpha - 1.0).abs() < 1e-4 && (f.lambda - 1.5).abs() < 1e-4, "{f:?}");
    }

    #[test]
    fn mode_mean_unreachable() {
        let t = ModeMeanTarget::new(1e3, 50.0).unwrap();
        assert!(matches!(fit_mode_mean(&t), Err(Error::Infeasible(_))));
    }
}
