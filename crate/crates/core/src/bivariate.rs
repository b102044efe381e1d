//! The product model `W = U·V`, `V = 1 + ε`.
//!
//! `U` is the "identity" component on the scale of `w`, mode-standardized as
//! `Z1 = (U - M1)/σ1` with `Z1 ~ RMM(α1 = 2 - λ, λ, L1 = M1/σ1)`. `V` carries a
//! zero-mean normal error `ε` with standard deviation `σ2`, truncated so that
//! `V >= 0`.
//!
//! [`joint_pdf`] is the closed-form joint density in `(z1, z2)` with weights
//! `α1 = 2 - λ`, `α2 = λ - 1`. The marginal density, the sampler and the model
//! moments work with the generative model above.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_pieces, QuadOptions};
use crate::rmm::{rmm_pdf, RmmParams, RmmShape};

/// Largest admissible `σ2`.
pub const SIGMA2_MAX: f64 = 1.0 / 6.0;
/// Half-width of the `v` integration window in units of `σ2`.
pub const V_WINDOW_SDS: f64 = 8.0;
/// Points in the cached inverse-CDF table of `Z1`.
pub const QUANTILE_TABLE_POINTS: usize = 4096;

/// Field names as they appear in parameter files.
#[derive(Debug, Clone, Deserialize)]
struct BivariateRecord {
    lambda: f64,
    #[serde(rename = "M1")]
    m1: f64,
    sigma1: f64,
    sigma2: f64,
    #[serde(default)]
    kappa1: Option<f64>,
    #[serde(default)]
    kappa2: Option<f64>,
}

/// `(λ, M1, σ1, σ2)` with the component normalizers `κ1`, `κ2` of the joint
/// density. `M2 = E(V) = 1` is implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BivariateRecord")]
pub struct BivariateParams {
    pub lambda: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl TryFrom<BivariateRecord> for BivariateParams {
    type Error = Error;

    fn try_from(r: BivariateRecord) -> Result<Self> {
        let p = BivariateParams::new(r.lambda, r.m1, r.sigma1, r.sigma2)?;
        for (name, given, computed) in [("kappa1", r.kappa1, p.kappa1), ("kappa2", r.kappa2, p.kappa2)] {
            if let Some(given) = given {
                if (given - computed).abs() > 1e-8 * computed.abs() {
                    return Err(Error::param(
                        name,
                        format!("{given} disagrees with the normalizer {computed} implied by the other fields"),
                    ));
                }
            }
        }
        Ok(p)
    }
}

impl BivariateParams {
    pub fn new(lambda: f64, m1: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&lambda) {
            return Err(Error::param("lambda", format!("must lie in [1, 2], got {lambda}")));
        }
        if !(m1 >= 0.0) || !m1.is_finite() {
            return Err(Error::param("M1", format!("must be finite and >= 0, got {m1}")));
        }
        if !(sigma1 > 0.0) || !sigma1.is_finite() {
            return Err(Error::param("sigma1", format!("must be positive, got {sigma1}")));
        }
        if !(sigma2 > 0.0 && sigma2 <= SIGMA2_MAX) {
            return Err(Error::param("sigma2", format!("must lie in (0, 1/6], got {sigma2}")));
        }
        let mut p = BivariateParams {
            lambda,
            m1,
            sigma1,
            sigma2,
            kappa1: 1.0,
            kappa2: 1.0,
        };
        p.kappa1 = p.z1_params()?.kappa;
        p.kappa2 = p.z2_joint_shape()?.params()?.kappa;
        Ok(p)
    }

    pub fn alpha1(&self) -> f64 {
        2.0 - self.lambda
    }

    pub fn alpha2(&self) -> f64 {
        self.lambda - 1.0
    }

    /// `L1 = M1/σ1`.
    pub fn l1(&self) -> f64 {
        self.m1 / self.sigma1
    }

    /// `L2 = 1/σ2`.
    pub fn l2(&self) -> f64 {
        1.0 / self.sigma2
    }

    pub fn z1_shape(&self) -> Result<RmmShape> {
        RmmShape::new(self.alpha1(), self.lambda, self.l1())
    }

    /// Normalized density of `Z1`.
    pub fn z1_params(&self) -> Result<RmmParams> {
        self.z1_shape()?.params()
    }

    /// The `z2` factor of the joint density: `RMM(λ - 1, 2, 1/σ2)`.
    pub fn z2_joint_shape(&self) -> Result<RmmShape> {
        RmmShape::new(self.alpha2(), 2.0, self.l2())
    }
}

/// Joint density of `(Z1, Z2)`:
///
/// ```text
/// κ1 κ2 exp{-(2-λ)(1/λ)[z1^λ - 1] - (λ-1)(1/2)[z2² - 1]}
/// ```
///
/// on `z1 >= -M1/σ1`, `z2 >= -1/σ2`, zero elsewhere. `z1^λ` is read on the
/// reflected branch. At the endpoints the vanishing weight leaves that factor
/// constant (`κ = 1`).
pub fn joint_pdf(z1: f64, z2: f64, p: &BivariateParams) -> Result<f64> {
    if z1 < -p.l1() || z2 < -p.l2() {
        return Ok(0.0);
    }
    let (a1, a2, lambda) = (p.alpha1(), p.alpha2(), p.lambda);
    let t1 = if a1 == 0.0 { 0.0 } else { a1 / lambda * (z1.abs().powf(lambda) - 1.0) };
    let t2 = a2 / 2.0 * (z2 * z2 - 1.0);
    Ok(p.kappa1 * p.kappa2 * (-t1 - t2).exp())
}

/// The truncated-normal law of `V = 1 + ε`, `ε ~ N(0, σ2²)`, `V >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplicativeError {
    pub sigma2: f64,
    mass: f64,
}

impl MultiplicativeError {
    pub fn new(sigma2: f64) -> Self {
        // P(ε >= -1) = Φ(1/σ2)
        let mass = 1.0 - 0.5 * erfc(1.0 / (sigma2 * std::f64::consts::SQRT_2));
        MultiplicativeError { sigma2, mass }
    }

    pub fn pdf(&self, v: f64) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        let t = (v - 1.0) / self.sigma2;
        (-0.5 * t * t).exp() / (self.sigma2 * (2.0 * std::f64::consts::PI).sqrt() * self.mass)
    }

    /// `E(V) - 1` of the truncated law; the model moments treat this as zero.
    pub fn mean_shift(&self) -> f64 {
        let t = 1.0 / self.sigma2;
        self.sigma2 * (-0.5 * t * t).exp() / ((2.0 * std::f64::consts::PI).sqrt() * self.mass)
    }

    /// `[max(0, 1 - 8σ2), 1 + 8σ2]`, outside which the mass is below `1e-15`.
    pub fn window(&self) -> (f64, f64) {
        ((1.0 - V_WINDOW_SDS * self.sigma2).max(0.0), 1.0 + V_WINDOW_SDS * self.sigma2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let e: f64 = rng.sample(StandardNormal);
            let v = 1.0 + self.sigma2 * e;
            if v >= 0.0 {
                return v;
            }
        }
    }
}

/// Breakpoints of the `v` integral: the window, the peak of `V`, and the
/// values of `v` mapping `w` onto the mode (and, in the uniform case, the upper
/// edge) of `U`.
fn v_breaks(w: f64, p: &BivariateParams, error: &MultiplicativeError) -> Vec<f64> {
    let (lo, hi) = error.window();
    let mut pts = vec![lo, hi, 1.0];
    let mut kinks = vec![p.m1];
    if p.alpha1() == 0.0 {
        kinks.push(p.m1 + p.sigma1);
    }
    for u in kinks {
        if u > 0.0 {
            pts.push(w / u);
        }
    }
    pts.retain(|v| *v >= lo && *v <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1.0));
    pts
}

/// Density of `U` at `u`.
fn u_pdf(u: f64, p: &BivariateParams, z1: &RmmParams) -> Result<f64> {
    Ok(rmm_pdf((u - p.m1) / p.sigma1, z1)? / p.sigma1)
}

/// `f_W(w) = ∫ f_U(w/v) f_V(v) / v dv` by adaptive quadrature over the `v`
/// window, with absolute error target `tol`.
pub fn marginal_pdf_w(w: f64, p: &BivariateParams, tol: f64) -> Result<f64> {
    let z1 = p.z1_params()?;
    marginal_pdf_with(w, p, &z1, &MultiplicativeError::new(p.sigma2), tol)
}

fn marginal_pdf_with(w: f64, p: &BivariateParams, z1: &RmmParams, error: &MultiplicativeError, tol: f64) -> Result<f64> {
    if w < 0.0 {
        return Ok(0.0);
    }
    let opts = QuadOptions {
        abs_tol: tol,
        rel_tol: 1e-10,
        max_subdivisions: 2000,
    };
    let breaks = v_breaks(w, p, error);
    let r = integrate_pieces(
        |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            u_pdf(w / v, p, z1).unwrap_or(f64::NAN) * error.pdf(v) / v
        },
        &breaks,
        &opts,
    )?;
    Ok(r.value.max(0.0))
}

/// `F_W(w) = ∫ F_U(w/v) f_V(v) dv`.
pub fn marginal_cdf_w(w: f64, p: &BivariateParams, tol: f64) -> Result<f64> {
    let z1 = p.z1_params()?;
    marginal_cdf_with(w, p, &z1, &MultiplicativeError::new(p.sigma2), tol)
}

fn marginal_cdf_with(w: f64, p: &BivariateParams, z1: &RmmParams, error: &MultiplicativeError, tol: f64) -> Result<f64> {
    if w <= 0.0 {
        return Ok(0.0);
    }
    let opts = QuadOptions {
        abs_tol: tol,
        rel_tol: 1e-10,
        max_subdivisions: 2000,
    };
    let breaks = v_breaks(w, p, error);
    let r = integrate_pieces(
        |v: f64| {
            if v <= 0.0 {
                return error.pdf(v);
            }
            z1.cdf((w / v - p.m1) / p.sigma1).unwrap_or(f64::NAN) * error.pdf(v)
        },
        &breaks,
        &opts,
    )?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// `F_W` tabulated on a uniform grid and read by linear interpolation.
#[derive(Debug, Clone)]
pub struct MarginalCdfTable {
    w: Vec<f64>,
    f: Vec<f64>,
}

impl MarginalCdfTable {
    pub fn new(p: &BivariateParams, points: usize, tol: f64) -> Result<Self> {
        if points < 2 {
            return Err(Error::Argument("a CDF table needs at least two points".into()));
        }
        let z1 = p.z1_params()?;
        let error = MultiplicativeError::new(p.sigma2);
        let u_hi = p.m1 + p.sigma1 * QuantileTable::upper_z(&z1)?;
        let w_hi = u_hi * error.window().1;
        let w: Vec<f64> = (0..points).map(|i| w_hi * i as f64 / (points - 1) as f64).collect();
        let f = w
            .iter()
            .map(|&x| marginal_cdf_with(x, p, &z1, &error, tol))
            .collect::<Result<Vec<f64>>>()?;
        Ok(MarginalCdfTable { w, f })
    }

    pub fn cdf(&self, w: f64) -> f64 {
        if w <= self.w[0] {
            return self.f[0];
        }
        let last = self.w.len() - 1;
        if w >= self.w[last] {
            return 1.0;
        }
        let h = self.w[1] - self.w[0];
        let i = (((w - self.w[0]) / h) as usize).min(last - 1);
        let t = (w - self.w[i]) / h;
        self.f[i] + t * (self.f[i + 1] - self.f[i])
    }
}

/// Inverse CDF of `Z1`: a uniform grid in `z` with cached CDF values,
/// bracketed by binary search, read by linear interpolation and polished with
/// one safeguarded Newton step on the exact CDF.
#[derive(Debug, Clone)]
pub struct QuantileTable {
    params: RmmParams,
    z: Vec<f64>,
    f: Vec<f64>,
}

impl QuantileTable {
    fn upper_z(params: &RmmParams) -> Result<f64> {
        let (_, hi) = params.support_bounds();
        if hi.is_finite() {
            return Ok(hi);
        }
        let mut z = 1.0;
        while 1.0 - params.cdf(z)? > 1e-15 {
            z *= 1.5;
            if z > 1e8 {
                return Err(Error::numerical("quantile table", "upper tail does not decay"));
            }
        }
        Ok(z)
    }

    fn lower_z(params: &RmmParams) -> Result<f64> {
        let (lo, _) = params.support_bounds();
        if params.cdf(-1.0)? <= 0.0 || lo >= -1.0 {
            return Ok(lo);
        }
        let mut z = -1.0;
        while z > lo && params.cdf(z)? > 1e-15 {
            z *= 1.5;
        }
        Ok(z.max(lo))
    }

    pub fn new(params: RmmParams, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Argument("a quantile table needs at least two points".into()));
        }
        let lo = Self::lower_z(&params)?;
        let hi = Self::upper_z(&params)?;
        let z: Vec<f64> = (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect();
        let f = z.iter().map(|&x| params.cdf(x)).collect::<Result<Vec<f64>>>()?;
        Ok(QuantileTable { params, z, f })
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let last = self.f.len() - 1;
        let i = self.f.partition_point(|&v| v <= u).clamp(1, last);
        let (z0, z1, f0, f1) = (self.z[i - 1], self.z[i], self.f[i - 1], self.f[i]);
        let mut z = if f1 > f0 { z0 + (u - f0) / (f1 - f0) * (z1 - z0) } else { z0 };
        if let (Ok(fz), Ok(dz)) = (self.params.cdf(z), rmm_pdf(z, &self.params)) {
            if dz > 0.0 {
                let step = z - (fz - u) / dz;
                if step >= z0 && step <= z1 {
                    z = step;
                }
            }
        }
        z
    }
}

/// Draws of `W = U·V` using an explicit caller-owned generator.
#[derive(Debug, Clone)]
pub struct ProductSampler {
    params: BivariateParams,
    table: QuantileTable,
    error: MultiplicativeError,
}

impl ProductSampler {
    pub fn new(params: &BivariateParams) -> Result<Self> {
        Ok(ProductSampler {
            params: *params,
            table: QuantileTable::new(params.z1_params()?, QUANTILE_TABLE_POINTS)?,
            error: MultiplicativeError::new(params.sigma2),
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z1 = self.table.quantile(rng.random::<f64>());
        let u = self.params.m1 + self.params.sigma1 * z1;
        u * self.error.sample(rng)
    }

    pub fn draw_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// `n` draws of `W` from a `ChaCha8` generator seeded with `seed`.
pub fn sample_w(params: &BivariateParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let sampler = ProductSampler::new(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.draw_n(&mut rng, n))
}

/// `(E(U), Var(U))` from the closed-form moments of `Z1`.
pub fn u_moments(p: &BivariateParams) -> Result<(f64, f64)> {
    let shape = p.z1_shape()?;
    let m1 = shape.raw_moment_closed_form(1)?;
    let m2 = shape.raw_moment_closed_form(2)?;
    Ok((p.m1 + p.sigma1 * m1, p.sigma1 * p.sigma1 * (m2 - m1 * m1)))
}

/// `E(W) = μ1 = M1 + σ1 E(Z1)`, using `E(V) = 1`.
pub fn model_mean(p: &BivariateParams) -> Result<f64> {
    Ok(u_moments(p)?.0)
}

/// `Var(W) = E(U²) E(V²) - μ1²` with `E(V²) = 1 + σ2²`.
pub fn model_var(p: &BivariateParams) -> Result<f64> {
    let (mean_u, var_u) = u_moments(p)?;
    Ok(product_variance(mean_u, var_u, p.sigma2))
}

/// `(Var(U) + μ²)(1 + σ2²) - μ²`.
pub fn product_variance(mean_u: f64, var_u: f64, sigma2: f64) -> f64 {
    (var_u + mean_u * mean_u) * (1.0 + sigma2 * sigma2) - mean_u * mean_u
}
