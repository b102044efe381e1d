//! The univariate RMM density family
//!
//! ```text
//! f(z) = κ · exp{-(α/λ)(z^λ - 1)},   -L <= z < ∞
//! ```
//!
//! on the mode-standardized scale `z = (x - M)/σ`, together with its mode
//! density `κ e^{α/λ}`, closed-form non-central moments and normalizer, and the
//! named special cases (exponential, normal, Pareto, power function, uniform).
//!
//! For `z < 0` and non-integer `λ` the power `z^λ` is not real. [`Branch`]
//! selects how it is read; see its documentation. The closed-form moment
//! expression is evaluated in complex arithmetic under the same branch, so the
//! formula and direct quadrature of the density always describe the same
//! function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::find_root;
use crate::quadrature::{integrate, integrate_pieces, integrate_to_infinity, QuadOptions};
use crate::specfun::{principal_power, regularized_lower_gamma, upper_incomplete_gamma};

/// Below this `λ` the term `(z^λ - 1)/λ` is replaced by its limit `ln z`.
pub const LOG_LIMIT_THRESHOLD: f64 = 1e-6;
/// Default upper limit on `λ`.
pub const DEFAULT_UPPER_LAMBDA: f64 = 4.0;
/// Finite stand-in for `L = ∞` (normal preset).
pub const NORMAL_L: f64 = 40.0;
/// Largest imaginary part tolerated in a quantity that must be real.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;
/// Relative disagreement between closed form and quadrature that is reported
/// as a consistency error.
pub const QUADRATURE_AGREEMENT: f64 = 1e-6;

/// How `z^λ` is read for `z < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `z^λ := |z|^λ`. Real for every `λ`, keeps the mode at `z = 0`, and makes
    /// `(-1)^λ = 1` in the moment formula.
    #[default]
    Reflected,
    /// `z^λ := exp(λ Log z)` with the principal logarithm. Complex for
    /// non-integer `λ` when `z < 0`; the real-valued density is then undefined
    /// and evaluating it is a domain error.
    Principal,
}

impl Branch {
    /// The `(-1)^λ` factor of the moment formula under this branch.
    pub fn minus_one_power(self, lambda: f64) -> Result<Complex64> {
        match self {
            Branch::Reflected => Ok(Complex64::new(1.0, 0.0)),
            Branch::Principal => principal_power(Complex64::new(-1.0, 0.0), lambda),
        }
    }
}

/// `(z^λ - 1)/λ`, or `ln z` below the log-limit threshold.
fn scaled_power(z: f64, lambda: f64, branch: Branch) -> Result<Complex64> {
    if lambda < LOG_LIMIT_THRESHOLD {
        if z > 0.0 {
            return Ok(Complex64::new(z.ln(), 0.0));
        }
        return Err(Error::Domain(format!(
            "log-limit form (λ={lambda}) is undefined at z={z}"
        )));
    }
    if z > 0.0 {
        return Ok(Complex64::new((lambda * z.ln()).exp_m1() / lambda, 0.0));
    }
    let p = if z == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        match branch {
            Branch::Reflected => Complex64::new((-z).powf(lambda), 0.0),
            Branch::Principal => principal_power(Complex64::new(z, 0.0), lambda)?,
        }
    };
    Ok((p - 1.0) / lambda)
}

/// Where a parameter record puts its mass on the z-scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// `[-L, ∞)`.
    HalfLine,
    /// `[0, 1]`: uniform (`α = 0`) and power-function presets.
    UnitInterval,
    /// `[1, ∞)`: Pareto preset.
    ParetoTail,
}

/// The `(α, λ, L)` shape of an RMM density together with the branch used for
/// negative `z`. All closed-form quantities hang off this type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmmShape {
    pub alpha: f64,
    pub lambda: f64,
    pub l: f64,
    pub branch: Branch,
}

impl RmmShape {
    /// Validated shape on the reflected branch with `λ <= DEFAULT_UPPER_LAMBDA`.
    pub fn new(alpha: f64, lambda: f64, l: f64) -> Result<Self> {
        Self::with_upper_lambda(alpha, lambda, l, DEFAULT_UPPER_LAMBDA)
    }

    pub fn with_upper_lambda(alpha: f64, lambda: f64, l: f64, upper_lambda: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be finite and >= 0, got {alpha}")));
        }
        if !(lambda >= 0.0 && lambda <= upper_lambda) {
            return Err(Error::param(
                "lambda",
                format!("must lie in [0, {upper_lambda}], got {lambda}"),
            ));
        }
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::param("L", format!("must be finite and >= 0, got {l}")));
        }
        Ok(RmmShape {
            alpha,
            lambda,
            l,
            branch: Branch::Reflected,
        })
    }

    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.branch = branch;
        self
    }

    fn is_uniform(&self) -> bool {
        self.alpha == 0.0
    }

    fn require_power_form(&self) -> Result<()> {
        if self.lambda < LOG_LIMIT_THRESHOLD {
            return Err(Error::Domain(format!(
                "λ={} uses the log-limit form, which is not integrable on [-L, ∞); use the Pareto or power-function preset",
                self.lambda
            )));
        }
        Ok(())
    }

    /// `exp{-(α/λ)(z^λ - 1)}` in complex arithmetic, without support checks.
    pub fn kernel_complex(&self, z: f64) -> Result<Complex64> {
        Ok((-self.alpha * scaled_power(z, self.lambda, self.branch)?).exp())
    }

    /// `∫_{-L}^{∞} z^k exp{-(α/λ)(z^λ - 1)} dz` from the incomplete-gamma
    /// closed form, in complex arithmetic:
    ///
    /// ```text
    /// (1/λ) e^{α/λ} c^{-s} [ (-1)^{k+1} Γ(s, c L^λ) + (b^s + (-1)^k) Γ(s) ]
    /// s = (k+1)/λ,  b = (-1)^λ,  c = α b / λ
    /// ```
    ///
    /// For `α = 0` the uniform convention applies and this returns `1/(k+1)`.
    pub fn moment_integral_closed_form(&self, k: u32) -> Result<Complex64> {
        if self.is_uniform() {
            return Ok(Complex64::new(1.0 / f64::from(k + 1), 0.0));
        }
        self.require_power_form()?;
        let (alpha, lambda) = (self.alpha, self.lambda);
        let s = Complex64::new(f64::from(k + 1) / lambda, 0.0);
        let b = self.branch.minus_one_power(lambda)?;
        let c = b * (alpha / lambda);
        let x_l = c * self.l.powf(lambda);
        let gamma_s = crate::specfun::gamma_complex(s)?;
        let upper = upper_incomplete_gamma(s, x_l)?;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let b_s = crate::specfun::complex_power(b, s)?;
        let bracket = -sign * upper + (b_s + sign) * gamma_s;
        let c_pow = crate::specfun::complex_power(c, -s)?;
        Ok((alpha / lambda).exp() / lambda * c_pow * bracket)
    }

    /// The same integral by adaptive quadrature of the (complex) density,
    /// split at the mode.
    pub fn moment_integral_quadrature(&self, k: u32) -> Result<Complex64> {
        self.weighted_quadrature(|z| z.powi(k as i32))
    }

    /// `∫ |z|^k · kernel`, the scale against which odd moments near zero are
    /// compared.
    pub fn absolute_moment_integral_quadrature(&self, k: u32) -> Result<Complex64> {
        self.weighted_quadrature(|z| z.abs().powi(k as i32))
    }

    fn weighted_quadrature(&self, weight: impl Fn(f64) -> f64) -> Result<Complex64> {
        let opts = QuadOptions::with_tolerances(1e-15, 1e-12);
        if self.is_uniform() {
            let r = integrate(|z: f64| Complex64::new(weight(z), 0.0), 0.0, 1.0, &opts)?;
            return Ok(r.value);
        }
        self.require_power_form()?;
        let integrand = |z: f64| -> Complex64 {
            let zk = weight(z);
            match self.kernel_complex(z) {
                Ok(v) => v * zk,
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            }
        };
        Ok(integrate_pieces(integrand, &self.quadrature_breaks(), &opts)?.value)
    }

    /// `|z|` beyond which the reflected kernel is below `e^{-800}`.
    pub fn tail_cutoff(&self) -> f64 {
        if self.is_uniform() {
            return 1.0;
        }
        (1.0 + 800.0 * self.lambda / self.alpha).powf(1.0 / self.lambda)
    }

    /// Breakpoints `-L', ..., -2, -1, 0, 1, 2, 4, ..., cutoff` doubling away
    /// from the mode, so that wide ranges cannot hide the mass near `z = 0`.
    /// On the principal branch the left kernel need not decay, so the left
    /// range is never truncated there.
    fn quadrature_breaks(&self) -> Vec<f64> {
        let cutoff = self.tail_cutoff();
        let left = match self.branch {
            Branch::Reflected => self.l.min(cutoff),
            Branch::Principal => self.l,
        };
        let mut breaks: Vec<f64> = geometric_breaks(left).into_iter().rev().map(|v| -v).collect();
        breaks.extend(geometric_breaks(cutoff).into_iter().skip(1));
        breaks
    }

    fn real_part(&self, value: Complex64, what: &str) -> Result<f64> {
        let residue = value.im.abs();
        if residue > IMAGINARY_TOLERANCE * (1.0 + value.re.abs()) {
            return Err(Error::Branch {
                residue,
                tolerance: IMAGINARY_TOLERANCE,
                context: format!(
                    "{what} at α={}, λ={}, L={} on the {:?} branch",
                    self.alpha, self.lambda, self.l, self.branch
                ),
            });
        }
        Ok(value.re)
    }

    /// κ from the closed form alone (no quadrature cross-check).
    pub fn normalizer_closed_form(&self) -> Result<f64> {
        let i0 = self.moment_integral_closed_form(0)?;
        let kappa = 1.0 / self.real_part(i0, "normalizer")?;
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::numerical(
                "normalizer",
                format!("closed form gave κ={kappa} for α={}, λ={}, L={}", self.alpha, self.lambda, self.l),
            ));
        }
        Ok(kappa)
    }

    /// κ such that the density integrates to one, from the closed form and
    /// cross-checked against quadrature.
    pub fn normalizer(&self) -> Result<f64> {
        let kappa = self.normalizer_closed_form()?;
        let by_quadrature = 1.0 / self.real_part(self.moment_integral_quadrature(0)?, "normalizer quadrature")?;
        check_agreement("normalizer", kappa, by_quadrature, by_quadrature.abs())?;
        Ok(kappa)
    }

    /// `E(Z^k)` from the closed form alone.
    pub fn raw_moment_closed_form(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let ik = self.moment_integral_closed_form(k)?;
        let i0 = self.moment_integral_closed_form(0)?;
        let ratio = ik / i0;
        self.real_part(ratio, "raw moment")
    }

    /// `E(Z^k)` from the closed form, cross-checked against quadrature.
    pub fn raw_moment(&self, k: u32) -> Result<f64> {
        let closed = self.raw_moment_closed_form(k)?;
        let quad = self.moment_integral_quadrature(k)? / self.moment_integral_quadrature(0)?;
        let quad = self.real_part(quad, "raw moment quadrature")?;
        let scale = if k % 2 == 1 {
            (self.absolute_moment_integral_quadrature(k)? / self.moment_integral_quadrature(0)?).norm()
        } else {
            quad.abs()
        };
        check_agreement("raw moment", closed, quad, scale)?;
        Ok(closed)
    }

    /// `(E(Z), E(Z²))`. For a consistent shape these equal
    /// `((μ - M)/σ, 1 + ((μ - M)/σ)²)`.
    pub fn standardized_mean_and_square(&self) -> Result<(f64, f64)> {
        Ok((self.raw_moment(1)?, self.raw_moment(2)?))
    }

    /// `Var(Z)` from the closed form.
    pub fn variance_closed_form(&self) -> Result<f64> {
        let m1 = self.raw_moment_closed_form(1)?;
        Ok(self.raw_moment_closed_form(2)? - m1 * m1)
    }

    /// Normalized parameter record (closed-form κ, cross-checked).
    pub fn params(&self) -> Result<RmmParams> {
        if self.is_uniform() {
            return Ok(RmmParams {
                alpha: 0.0,
                lambda: self.lambda,
                l: 0.0,
                kappa: 1.0,
                branch: self.branch,
                support: Support::UnitInterval,
            });
        }
        Ok(RmmParams {
            alpha: self.alpha,
            lambda: self.lambda,
            l: self.l,
            kappa: self.normalizer()?,
            branch: self.branch,
            support: Support::HalfLine,
        })
    }
}

/// Relative disagreement `|closed - quad| / scale`, where `scale` is `|quad|`
/// except for odd moments, which use `E|Z|^k`.
pub fn relative_disagreement(closed: f64, quad: f64, scale: f64) -> f64 {
    (closed - quad).abs() / scale.max(f64::MIN_POSITIVE)
}

/// `0, 1, 2, 4, ..., limit` (just `0, limit` when `limit <= 1`).
fn geometric_breaks(limit: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    if limit <= 0.0 {
        return out;
    }
    let mut next = 1.0;
    while next < limit {
        out.push(next);
        next *= 2.0;
    }
    out.push(limit);
    out
}

fn check_agreement(what: &'static str, closed: f64, quad: f64, scale: f64) -> Result<()> {
    let difference = relative_disagreement(closed, quad, scale);
    if difference > QUADRATURE_AGREEMENT {
        return Err(Error::Consistency {
            what,
            difference,
            tolerance: QUADRATURE_AGREEMENT,
        });
    }
    Ok(())
}

/// `L >= 0` for which `Var(Z) = 1`, i.e. the lower support bound consistent
/// with mode-standardization by the standard deviation. Searches `[0, 40]`.
pub fn unit_variance_l(alpha: f64, lambda: f64) -> Result<f64> {
    let var_at = |l: f64| -> Result<f64> { RmmShape::new(alpha, lambda, l)?.variance_closed_form() };
    let at_zero = var_at(0.0)? - 1.0;
    if at_zero.abs() < 1e-14 {
        return Ok(0.0);
    }
    let at_max = var_at(NORMAL_L)? - 1.0;
    if at_zero.signum() == at_max.signum() {
        return Err(Error::Domain(format!(
            "no L in [0, {NORMAL_L}] gives unit variance for α={alpha}, λ={lambda} (Var-1 = {at_zero:e} .. {at_max:e})"
        )));
    }
    find_root(|l| Ok(var_at(l)? - 1.0), 0.0, NORMAL_L, 1e-13)
}

/// A normalized RMM density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmmParams {
    pub alpha: f64,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub kappa: f64,
    #[serde(default)]
    pub branch: Branch,
    #[serde(default = "default_support")]
    pub support: Support,
}

fn default_support() -> Support {
    Support::HalfLine
}

impl RmmParams {
    /// Normalized density for `(α, λ, L)` on the reflected branch.
    pub fn new(alpha: f64, lambda: f64, l: f64) -> Result<Self> {
        RmmShape::new(alpha, lambda, l)?.params()
    }

    pub fn shape(&self) -> RmmShape {
        RmmShape {
            alpha: self.alpha,
            lambda: self.lambda,
            l: self.l,
            branch: self.branch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        RmmShape::new(self.alpha, self.lambda, self.l)?;
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::param("kappa", format!("must be positive and finite, got {}", self.kappa)));
        }
        Ok(())
    }

    /// `(lo, hi)` of the support on the z-scale.
    pub fn support_bounds(&self) -> (f64, f64) {
        match self.support {
            Support::HalfLine => (-self.l, f64::INFINITY),
            Support::UnitInterval => (0.0, 1.0),
            Support::ParetoTail => (1.0, f64::INFINITY),
        }
    }

    /// `E(Z^k)`. Pareto moments exist only for `k < α - 1`.
    pub fn raw_moment(&self, k: u32) -> Result<f64> {
        let kf = f64::from(k);
        match self.support {
            Support::HalfLine => self.shape().raw_moment(k),
            Support::UnitInterval if self.lambda < LOG_LIMIT_THRESHOLD => Ok(self.kappa / (kf + 1.0 - self.alpha)),
            Support::UnitInterval if self.alpha == 0.0 => Ok(1.0 / (kf + 1.0)),
            Support::UnitInterval => {
                let r = integrate(|z: f64| z.powi(k as i32) * rmm_pdf(z, self).unwrap_or(f64::NAN), 0.0, 1.0, &QuadOptions::default())?;
                Ok(r.value)
            }
            Support::ParetoTail => {
                if kf >= self.alpha - 1.0 {
                    return Err(Error::Domain(format!(
                        "Pareto moment of order {k} diverges for α={}",
                        self.alpha
                    )));
                }
                Ok(self.kappa / (self.alpha - 1.0 - kf))
            }
        }
    }
}

impl RmmParams {
    /// `P(Z <= z)`. Closed form on the reflected branch:
    ///
    /// ```text
    /// F(z) = (P(s, a L^λ) ± P(s, a |z|^λ)) / (1 + P(s, a L^λ)),   s = 1/λ, a = α/λ
    /// ```
    ///
    /// with `+` for `z >= 0`. The principal branch has no real CDF for
    /// non-integer `λ`.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        let (lo, hi) = self.support_bounds();
        if z <= lo {
            return Ok(0.0);
        }
        if z >= hi {
            return Ok(1.0);
        }
        match self.support {
            Support::UnitInterval if self.alpha == 0.0 => Ok(z),
            Support::UnitInterval if self.lambda < LOG_LIMIT_THRESHOLD => Ok(z.powf(1.0 - self.alpha)),
            Support::ParetoTail if self.lambda < LOG_LIMIT_THRESHOLD => Ok(1.0 - z.powf(1.0 - self.alpha)),
            Support::HalfLine if self.branch == Branch::Reflected && self.lambda >= LOG_LIMIT_THRESHOLD => {
                let s = 1.0 / self.lambda;
                let a = self.alpha / self.lambda;
                let left = regularized_lower_gamma(s, a * self.l.powf(self.lambda))?;
                let inner = regularized_lower_gamma(s, a * z.abs().powf(self.lambda))?;
                let signed = if z >= 0.0 { inner } else { -inner };
                Ok(((left + signed) / (1.0 + left)).clamp(0.0, 1.0))
            }
            _ => {
                let opts = QuadOptions::with_tolerances(1e-14, 1e-12);
                let r = integrate(|t: f64| rmm_pdf(t, self).unwrap_or(f64::NAN), lo, z, &opts)?;
                Ok(r.value.clamp(0.0, 1.0))
            }
        }
    }
}

/// Density at `z`; zero outside the support.
pub fn rmm_pdf(z: f64, params: &RmmParams) -> Result<f64> {
    let (lo, hi) = params.support_bounds();
    if z < lo || z > hi || z.is_nan() {
        return Ok(0.0);
    }
    if params.alpha == 0.0 {
        return Ok(params.kappa);
    }
    let exponent = -params.alpha * scaled_power(z, params.lambda, params.branch)?;
    if exponent.im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::Domain(format!(
            "z^λ is not real at (z={z}, λ={}) on the principal branch",
            params.lambda
        )));
    }
    Ok(params.kappa * exponent.re.exp())
}

/// `κ e^{α/λ}`, the density at the mode `z = 0`.
pub fn mode_density(params: &RmmParams) -> Result<f64> {
    if params.alpha == 0.0 {
        return Ok(params.kappa);
    }
    if params.lambda < LOG_LIMIT_THRESHOLD {
        return Err(Error::Domain(format!(
            "mode density is undefined in the log-limit form (λ={})",
            params.lambda
        )));
    }
    Ok(params.kappa * (params.alpha / params.lambda).exp())
}

/// Checked normalizer on the reflected branch.
pub fn normalizer(alpha: f64, lambda: f64, l: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(1.0);
    }
    RmmShape::new(alpha, lambda, l)?.normalizer()
}

/// Checked `E(Z^k)` on the reflected branch.
pub fn raw_moment(k: u32, alpha: f64, lambda: f64, l: f64) -> Result<f64> {
    RmmShape::new(alpha, lambda, l)?.raw_moment(k)
}

/// Checked `(E(Z), E(Z²))` on the reflected branch.
pub fn standardized_mean_and_square(alpha: f64, lambda: f64, l: f64) -> Result<(f64, f64)> {
    RmmShape::new(alpha, lambda, l)?.standardized_mean_and_square()
}

/// Mode-standardization `z = (x - M)/σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    #[serde(rename = "M")]
    pub mode: f64,
    pub sigma: f64,
}

impl Standardization {
    pub fn new(mode: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
        }
        if !mode.is_finite() {
            return Err(Error::param("M", format!("must be finite, got {mode}")));
        }
        Ok(Standardization { mode, sigma })
    }

    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mode) / self.sigma
    }

    pub fn destandardize(&self, z: f64) -> f64 {
        self.mode + self.sigma * z
    }
}

/// Named special cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Exponential,
    Normal,
    /// Log-limit form `κ z^{-α}` on `[1, ∞)`; needs `α > 1`.
    Pareto { alpha: f64 },
    /// Log-limit form `κ z^{-α}` on `(0, 1]`; needs `0 <= α < 1`.
    PowerFunction { alpha: f64 },
    Uniform,
}

impl Preset {
    pub fn params(self) -> Result<RmmParams> {
        match self {
            Preset::Exponential => RmmParams::new(1.0, 1.0, 0.0),
            Preset::Normal => RmmParams::new(1.0, 2.0, NORMAL_L),
            Preset::Pareto { alpha } => {
                if !(alpha > 1.0) || !alpha.is_finite() {
                    return Err(Error::param("alpha", format!("Pareto preset needs α > 1, got {alpha}")));
                }
                Ok(RmmParams {
                    alpha,
                    lambda: 0.0,
                    l: 0.0,
                    kappa: alpha - 1.0,
                    branch: Branch::Reflected,
                    support: Support::ParetoTail,
                })
            }
            Preset::PowerFunction { alpha } => {
                if !(0.0..1.0).contains(&alpha) {
                    return Err(Error::param(
                        "alpha",
                        format!("power-function preset needs 0 <= α < 1, got {alpha}"),
                    ));
                }
                Ok(RmmParams {
                    alpha,
                    lambda: 0.0,
                    l: 0.0,
                    kappa: 1.0 - alpha,
                    branch: Branch::Reflected,
                    support: Support::UnitInterval,
                })
            }
            Preset::Uniform => RmmShape::new(0.0, 1.0, 0.0)?.params(),
        }
    }

    /// Parses `exponential`, `normal`, `uniform`, `pareto`, `power` (the last
    /// two need `alpha`).
    pub fn from_name(name: &str, alpha: Option<f64>) -> Result<Self> {
        let need_alpha = || alpha.ok_or_else(|| Error::Argument(format!("preset `{name}` requires alpha")));
        match name.to_ascii_lowercase().as_str() {
            "exponential" => Ok(Preset::Exponential),
            "normal" => Ok(Preset::Normal),
            "uniform" => Ok(Preset::Uniform),
            "pareto" => Ok(Preset::Pareto { alpha: need_alpha()? }),
            "power" | "power_function" | "powerfunction" => Ok(Preset::PowerFunction { alpha: need_alpha()? }),
            other => Err(Error::Argument(format!("unknown preset `{other}`"))),
        }
    }
}

/// Normalization check by quadrature over the support.
pub fn total_mass(params: &RmmParams) -> Result<f64> {
    let (lo, hi) = params.support_bounds();
    let opts = QuadOptions::with_tolerances(1e-14, 1e-12);
    let f = |z: f64| rmm_pdf(z, params).unwrap_or(f64::NAN);
    let r = match params.support {
        Support::HalfLine if params.alpha > 0.0 => integrate_pieces(f, &params.shape().quadrature_breaks(), &opts)?,
        _ if hi.is_infinite() => integrate_to_infinity(f, lo, &opts)?,
        _ => integrate(f, lo, hi, &opts)?,
    };
    Ok(r.value)
}
