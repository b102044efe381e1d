//! The generalized two-term approximation family
//!
//! ```text
//! f(z) = κ · exp{-(α1/λ1)(z^λ1 - 1) - (α2/λ2)((β0 + β1 z)^λ2 - 1)}
//! ```
//!
//! where each `λ → 0` term is replaced by its limit `α ln(·)`. Several classical
//! densities are members once their argument is transformed; the `map_*`
//! constructors return the parameter vector together with that transform, and
//! [`verify_mapping`] checks shape identity against an independent reference
//! log-density up to an additive constant (the unknown `log κ`).

use serde::{Deserialize, Serialize};
use statrs::distribution::{
    Cauchy, ChiSquared, Continuous, Exp, FisherSnedecor, Gamma, LogNormal, StudentsT, Weibull,
};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_pieces, QuadOptions};
use crate::rmm::{DEFAULT_UPPER_LAMBDA, LOG_LIMIT_THRESHOLD};

/// Largest constant-offset deviation accepted by [`verify_mapping`] as an
/// equivalence.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;
/// Points in each gallery grid.
pub const GALLERY_GRID_POINTS: usize = 200;

/// Parameters of the two-term family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub kappa: f64,
}

impl ApproxParams {
    /// Shape parameters with `κ = 1`.
    pub fn new(
        lambda1: f64,
        lambda2: f64,
        alpha1: f64,
        alpha2: f64,
        beta0: f64,
        beta1: f64,
    ) -> Result<Self> {
        let p = ApproxParams {
            lambda1,
            lambda2,
            alpha1,
            alpha2,
            beta0,
            beta1,
            kappa: 1.0,
        };
        p.validate(DEFAULT_UPPER_LAMBDA)?;
        Ok(p)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::param("kappa", format!("must be positive, got {kappa}")));
        }
        self.kappa = kappa;
        Ok(self)
    }

    pub fn validate(&self, upper_lambda: f64) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(0.0..=upper_lambda).contains(&v) {
                return Err(Error::param(name, format!("must lie in [0, {upper_lambda}], got {v}")));
            }
        }
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta0", self.beta0),
            ("beta1", self.beta1),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::param("kappa", format!("must be positive, got {}", self.kappa)));
        }
        Ok(())
    }

    /// The shape vector `(λ1, λ2, α1, α2, β0, β1)`.
    pub fn shape_vector(&self) -> [f64; 6] {
        [
            self.lambda1,
            self.lambda2,
            self.alpha1,
            self.alpha2,
            self.beta0,
            self.beta1,
        ]
    }
}

/// `(y^λ - 1)/λ`, or `ln y` in the log limit. `term` names the offending term
/// in domain errors.
fn power_term(y: f64, lambda: f64, term: &str) -> Result<f64> {
    if lambda < LOG_LIMIT_THRESHOLD {
        return if y > 0.0 {
            Ok(y.ln())
        } else {
            Err(Error::Domain(format!(
                "{term}: log-limit term needs a positive argument, got {y}"
            )))
        };
    }
    if y > 0.0 {
        Ok((lambda * y.ln()).exp_m1() / lambda)
    } else if y == 0.0 {
        Ok(-1.0 / lambda)
    } else if lambda.fract() == 0.0 {
        Ok((y.powi(lambda as i32) - 1.0) / lambda)
    } else {
        Err(Error::Domain(format!(
            "{term}: non-integer power λ={lambda} of negative argument {y}"
        )))
    }
}

/// `ln f(z)`. Terms with zero weight are dropped, so their arguments need not
/// be in the domain.
pub fn approx_log_pdf(z: f64, params: &ApproxParams) -> Result<f64> {
    let mut exponent = 0.0;
    if params.alpha1 != 0.0 {
        exponent -= params.alpha1 * power_term(z, params.lambda1, "first term z")?;
    }
    if params.alpha2 != 0.0 {
        let y = params.beta0 + params.beta1 * z;
        exponent -= params.alpha2 * power_term(y, params.lambda2, "second term β0 + β1 z")?;
    }
    Ok(params.kappa.ln() + exponent)
}

pub fn approx_pdf(z: f64, params: &ApproxParams) -> Result<f64> {
    approx_log_pdf(z, params).map(f64::exp)
}

/// `α1 + α2`.
pub fn weight_sum(params: &ApproxParams) -> f64 {
    params.alpha1 + params.alpha2
}

/// `∫ z^k f(z) dz` over `[lower, upper]` by quadrature. The family has no
/// closed-form moments. `upper` may be infinite.
pub fn raw_moment_quadrature(
    k: u32,
    params: &ApproxParams,
    lower: f64,
    upper: f64,
) -> Result<f64> {
    if !(lower < upper) || !lower.is_finite() {
        return Err(Error::Argument(format!("bad interval [{lower}, {upper}]")));
    }
    let mut breaks = vec![lower];
    if upper.is_finite() {
        breaks.push(upper);
    } else {
        let mut edge = lower.max(0.0) + 1.0;
        while edge < lower.abs().max(1.0) * 64.0 {
            breaks.push(edge);
            edge *= 2.0;
        }
        breaks.push(f64::INFINITY);
    }
    let result = integrate_pieces(
        |z| {
            approx_pdf(z, params)
                .map(|f| z.powi(k as i32) * f)
                .unwrap_or(f64::NAN)
        },
        &breaks,
        &QuadOptions::default(),
    )?;
    Ok(result.value)
}

/// The argument substitution `x ↦ z` that places a classical density in the
/// family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArgTransform {
    Identity,
    /// `z = (x - center)/scale`.
    Affine { center: f64, scale: f64 },
    /// `z = ln x - mu`.
    LogShift { mu: f64 },
    /// `z = ((x - a)/b)²`, injective on `x ≥ a`.
    SquaredAffine { a: f64, b: f64 },
    /// `z = x/b`.
    ScaledPowerArg { b: f64 },
}

impl ArgTransform {
    pub fn validate(&self) -> Result<()> {
        let scale = match *self {
            ArgTransform::Affine { scale, .. } => scale,
            ArgTransform::SquaredAffine { b, .. } | ArgTransform::ScaledPowerArg { b } => b,
            ArgTransform::Identity | ArgTransform::LogShift { .. } => return Ok(()),
        };
        if scale > 0.0 && scale.is_finite() {
            Ok(())
        } else {
            Err(Error::param("scale", format!("must be positive, got {scale}")))
        }
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        match *self {
            ArgTransform::Identity => Ok(x),
            ArgTransform::Affine { center, scale } => Ok((x - center) / scale),
            ArgTransform::LogShift { mu } => {
                if x > 0.0 {
                    Ok(x.ln() - mu)
                } else {
                    Err(Error::Domain(format!("log transform needs x > 0, got {x}")))
                }
            }
            ArgTransform::SquaredAffine { a, b } => Ok(((x - a) / b).powi(2)),
            ArgTransform::ScaledPowerArg { b } => Ok(x / b),
        }
    }

    /// `ln |dz/dx|`.
    pub fn log_abs_jacobian(&self, x: f64) -> Result<f64> {
        match *self {
            ArgTransform::Identity => Ok(0.0),
            ArgTransform::Affine { scale, .. } => Ok(-scale.ln()),
            ArgTransform::LogShift { .. } => {
                if x > 0.0 {
                    Ok(-x.ln())
                } else {
                    Err(Error::Domain(format!("log transform needs x > 0, got {x}")))
                }
            }
            ArgTransform::SquaredAffine { a, b } => {
                let d = (x - a).abs();
                if d > 0.0 {
                    Ok((2.0 * d / (b * b)).ln())
                } else {
                    Err(Error::Domain(format!("squared transform is singular at x = {a}")))
                }
            }
            ArgTransform::ScaledPowerArg { b } => Ok(-b.ln()),
        }
    }
}

/// Whether the composed density needs the factor `|dz/dx|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Jacobian {
    /// Multiply by `|dz/dx|`.
    Applied,
    /// The factor is constant or already produced by one of the terms (the
    /// `-z` term of the log-normal mapping is `-ln w + μ`).
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// A classical distribution written as a member of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedDistribution {
    pub name: String,
    pub transform: ArgTransform,
    pub params: ApproxParams,
    pub jacobian: Jacobian,
    /// Support of the original variable `x`.
    pub support: Interval,
}

impl MappedDistribution {
    /// Log-density in `x` up to an additive constant.
    pub fn log_density(&self, x: f64) -> Result<f64> {
        if !self.support.contains(x) {
            return Err(Error::Domain(format!(
                "{}: x = {x} outside [{}, {}]",
                self.name, self.support.lower, self.support.upper
            )));
        }
        let z = self.transform.apply(x)?;
        let mut value = approx_log_pdf(z, &self.params)?;
        if self.jacobian == Jacobian::Applied {
            value += self.transform.log_abs_jacobian(x)?;
        }
        Ok(value)
    }

    pub fn weight_sum(&self) -> f64 {
        weight_sum(&self.params)
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {value}")))
    }
}

fn mapped(
    name: impl Into<String>,
    transform: ArgTransform,
    params: [f64; 6],
    jacobian: Jacobian,
    support: (f64, f64),
) -> Result<MappedDistribution> {
    transform.validate()?;
    let [l1, l2, a1, a2, b0, b1] = params;
    Ok(MappedDistribution {
        name: name.into(),
        transform,
        params: ApproxParams::new(l1, l2, a1, a2, b0, b1)?,
        jacobian,
        support: Interval {
            lower: support.0,
            upper: support.1,
        },
    })
}

/// Weibull with scale `b` and shape `c`.
pub fn map_weibull(b: f64, c: f64) -> Result<MappedDistribution> {
    positive("b", b)?;
    positive("c", c)?;
    mapped(
        format!("weibull(b={b}, c={c})"),
        ArgTransform::ScaledPowerArg { b },
        [0.0, c, 1.0 - c, c, 0.0, 1.0],
        Jacobian::Absorbed,
        (0.0, f64::INFINITY),
    )
}

/// Generalized gamma `f(x) ∝ y^{kc-1} exp(-y^k)`, `y = (x - a)/b`.
pub fn map_generalized_gamma(a: f64, b: f64, c: f64, k: f64) -> Result<MappedDistribution> {
    positive("b", b)?;
    positive("c", c)?;
    positive("k", k)?;
    mapped(
        format!("generalized_gamma(a={a}, b={b}, c={c}, k={k})"),
        ArgTransform::Affine {
            center: a,
            scale: b * c.powf(1.0 / k),
        },
        [0.0, k, 1.0 - k * c, k * c, 0.0, 1.0],
        Jacobian::Absorbed,
        (a, f64::INFINITY),
    )
}

/// Gamma with shape `c` and scale `b`.
pub fn map_gamma(c: f64, b: f64) -> Result<MappedDistribution> {
    map_generalized_gamma(0.0, b, c, 1.0)
}

/// Exponential with scale (mean) `b`.
pub fn map_exponential(b: f64) -> Result<MappedDistribution> {
    map_generalized_gamma(0.0, b, 1.0, 1.0)
}

/// Weibull with scale `b` and shape `k`, through the generalized gamma.
pub fn map_gg_weibull(b: f64, k: f64) -> Result<MappedDistribution> {
    map_generalized_gamma(0.0, b, 1.0, k)
}

/// Chi-squared with `n` degrees of freedom.
pub fn map_chi_squared(n: f64) -> Result<MappedDistribution> {
    positive("n", n)?;
    map_generalized_gamma(0.0, 2.0, n / 2.0, 1.0)
}

/// Fisher's F with `(m, n)` degrees of freedom.
pub fn map_f(m: f64, n: f64) -> Result<MappedDistribution> {
    positive("m", m)?;
    positive("n", n)?;
    mapped(
        format!("f(m={m}, n={n})"),
        ArgTransform::Identity,
        [0.0, 0.0, 1.0 - m / 2.0, (m + n) / 2.0, 1.0, m / n],
        Jacobian::Absorbed,
        (0.0, f64::INFINITY),
    )
}

/// Log-normal: `ln w ~ N(μ, σ²)`.
pub fn map_lognormal(mu: f64, sigma: f64) -> Result<MappedDistribution> {
    positive("sigma", sigma)?;
    mapped(
        format!("lognormal(mu={mu}, sigma={sigma})"),
        ArgTransform::LogShift { mu },
        [1.0, 2.0, 1.0, 1.0, 0.0, 1.0 / sigma],
        Jacobian::Absorbed,
        (0.0, f64::INFINITY),
    )
}

/// Student's t with `m` degrees of freedom. `λ1` is irrelevant because
/// `α1 = 0`; it is set to 1.
pub fn map_student_t(m: f64) -> Result<MappedDistribution> {
    positive("m", m)?;
    mapped(
        format!("student_t(m={m})"),
        ArgTransform::SquaredAffine { a: 0.0, b: 1.0 },
        [1.0, 0.0, 0.0, (m + 1.0) / 2.0, 1.0, 1.0 / m],
        Jacobian::Absorbed,
        (f64::NEG_INFINITY, f64::INFINITY),
    )
}

/// Cauchy with location `a` and scale `b`.
pub fn map_cauchy(a: f64, b: f64) -> Result<MappedDistribution> {
    positive("b", b)?;
    mapped(
        format!("cauchy(a={a}, b={b})"),
        ArgTransform::SquaredAffine { a, b },
        [1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        Jacobian::Absorbed,
        (f64::NEG_INFINITY, f64::INFINITY),
    )
}

/// Largest deviation of `log f(x) - reference(x)` from its grid mean.
pub fn verify_mapping<F>(mapped: &MappedDistribution, reference_logpdf: F, grid: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if grid.is_empty() {
        return Err(Error::Argument("empty verification grid".into()));
    }
    let diffs = grid
        .iter()
        .map(|&x| {
            let reference = reference_logpdf(x);
            if !reference.is_finite() {
                return Err(Error::Domain(format!(
                    "reference log-density undefined at x = {x}"
                )));
            }
            Ok(mapped.log_density(x)? - reference)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    Ok(diffs.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max))
}

/// `n` equally spaced points from `lower` to `upper` inclusive.
pub fn linear_grid(lower: f64, upper: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lower],
        _ => (0..n)
            .map(|i| lower + (upper - lower) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Generalized gamma log-density, written out for use as a reference.
pub fn generalized_gamma_ln_pdf(x: f64, a: f64, b: f64, c: f64, k: f64) -> f64 {
    let y = (x - a) / b;
    if y <= 0.0 {
        return f64::NEG_INFINITY;
    }
    k.ln() - b.ln() - ln_gamma(c) + (k * c - 1.0) * y.ln() - y.powf(k)
}

/// One gallery case: a mapping, an independent reference and a grid.
pub struct GalleryCase {
    /// The classical family this case belongs to.
    pub family: &'static str,
    pub mapped: MappedDistribution,
    pub reference: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryRow {
    pub family: String,
    pub name: String,
    pub parameters: [f64; 6],
    pub weight_sum: f64,
    pub deviation: f64,
    pub pass: bool,
}

fn reference<D: Continuous<f64, f64> + Send + Sync + 'static>(d: D) -> Box<dyn Fn(f64) -> f64 + Send + Sync> {
    Box::new(move |x| d.ln_pdf(x))
}

fn statrs_err(e: impl std::fmt::Display) -> Error {
    Error::Argument(format!("reference distribution: {e}"))
}

/// Every mapping with a reference log-density from an independent
/// implementation. Symmetric families are checked on the half-line right of
/// their centre.
pub fn gallery_cases() -> Result<Vec<GalleryCase>> {
    let n = GALLERY_GRID_POINTS;
    let (gg_a, gg_b, gg_c, gg_k) = (0.5, 1.5, 2.0, 1.5);
    Ok(vec![
        GalleryCase {
            family: "weibull",
            mapped: map_weibull(1.0, 2.0)?,
            reference: reference(Weibull::new(2.0, 1.0).map_err(statrs_err)?),
            grid: linear_grid(0.01, 5.0, n),
        },
        GalleryCase {
            family: "weibull",
            mapped: map_weibull(2.5, 0.7)?,
            reference: reference(Weibull::new(0.7, 2.5).map_err(statrs_err)?),
            grid: linear_grid(0.01, 10.0, n),
        },
        GalleryCase {
            family: "generalized_gamma",
            mapped: map_generalized_gamma(gg_a, gg_b, gg_c, gg_k)?,
            reference: Box::new(move |x| generalized_gamma_ln_pdf(x, gg_a, gg_b, gg_c, gg_k)),
            grid: linear_grid(gg_a + 0.01, gg_a + 6.0, n),
        },
        GalleryCase {
            family: "generalized_gamma",
            mapped: map_gamma(3.0, 2.0)?,
            reference: reference(Gamma::new(3.0, 0.5).map_err(statrs_err)?),
            grid: linear_grid(0.01, 20.0, n),
        },
        GalleryCase {
            family: "generalized_gamma",
            mapped: map_exponential(2.0)?,
            reference: reference(Exp::new(0.5).map_err(statrs_err)?),
            grid: linear_grid(0.01, 10.0, n),
        },
        GalleryCase {
            family: "generalized_gamma",
            mapped: map_gg_weibull(1.5, 2.0)?,
            reference: reference(Weibull::new(2.0, 1.5).map_err(statrs_err)?),
            grid: linear_grid(0.01, 5.0, n),
        },
        GalleryCase {
            family: "generalized_gamma",
            mapped: map_chi_squared(4.0)?,
            reference: reference(ChiSquared::new(4.0).map_err(statrs_err)?),
            grid: linear_grid(0.01, 20.0, n),
        },
        GalleryCase {
            family: "f",
            mapped: map_f(2.0, 2.0)?,
            reference: reference(FisherSnedecor::new(2.0, 2.0).map_err(statrs_err)?),
            grid: linear_grid(0.01, 10.0, n),
        },
        GalleryCase {
            family: "f",
            mapped: map_f(4.0, 6.0)?,
            reference: reference(FisherSnedecor::new(4.0, 6.0).map_err(statrs_err)?),
            grid: linear_grid(0.01, 10.0, n),
        },
        GalleryCase {
            family: "lognormal",
            mapped: map_lognormal(0.0, 1.0)?,
            reference: reference(LogNormal::new(0.0, 1.0).map_err(statrs_err)?),
            grid: linear_grid(0.01, 10.0, n),
        },
        GalleryCase {
            family: "lognormal",
            mapped: map_lognormal(0.5, 0.7)?,
            reference: reference(LogNormal::new(0.5, 0.7).map_err(statrs_err)?),
            grid: linear_grid(0.01, 10.0, n),
        },
        GalleryCase {
            family: "student_t",
            mapped: map_student_t(5.0)?,
            reference: reference(StudentsT::new(0.0, 1.0, 5.0).map_err(statrs_err)?),
            grid: linear_grid(0.0, 10.0, n),
        },
        GalleryCase {
            family: "student_t",
            mapped: map_student_t(1.0)?,
            reference: reference(StudentsT::new(0.0, 1.0, 1.0).map_err(statrs_err)?),
            grid: linear_grid(0.0, 10.0, n),
        },
        GalleryCase {
            family: "cauchy",
            mapped: map_cauchy(1.0, 2.0)?,
            reference: reference(Cauchy::new(1.0, 2.0).map_err(statrs_err)?),
            grid: linear_grid(1.0, 21.0, n),
        },
    ])
}

/// Runs [`verify_mapping`] on every gallery case.
pub fn run_gallery() -> Result<Vec<GalleryRow>> {
    gallery_cases()?
        .into_iter()
        .map(|case| {
            let deviation = verify_mapping(&case.mapped, &case.reference, &case.grid)?;
            Ok(GalleryRow {
                family: case.family.to_string(),
                name: case.mapped.name.clone(),
                parameters: case.mapped.params.shape_vector(),
                weight_sum: case.mapped.weight_sum(),
                deviation,
                pass: deviation <= EQUIVALENCE_TOLERANCE,
            })
        })
        .collect()
}

/// Looks up a mapping by family name with named arguments, as used by the
/// command line.
pub fn map_by_name(name: &str, arg: impl Fn(&str) -> Option<f64>) -> Result<MappedDistribution> {
    let need = |key: &'static str| {
        arg(key).ok_or_else(|| Error::Argument(format!("mapping `{name}` needs `{key}`")))
    };
    match name {
        "weibull" => map_weibull(need("b")?, need("c")?),
        "generalized_gamma" | "gengamma" => map_generalized_gamma(
            arg("a").unwrap_or(0.0),
            need("b")?,
            need("c")?,
            need("k")?,
        ),
        "gamma" => map_gamma(need("c")?, need("b")?),
        "exponential" => map_exponential(need("b")?),
        "chi_squared" | "chisquared" => map_chi_squared(need("n")?),
        "f" => map_f(need("m")?, need("n")?),
        "lognormal" => map_lognormal(arg("mu").unwrap_or(0.0), need("sigma")?),
        "student_t" | "t" => map_student_t(need("m")?),
        "cauchy" => map_cauchy(arg("a").unwrap_or(0.0), need("b")?),
        other => Err(Error::Argument(format!("unknown mapping `{other}`"))),
    }
}

/// Reference log-density for a mapping returned by [`map_by_name`].
pub fn reference_by_name(
    name: &str,
    arg: impl Fn(&str) -> Option<f64>,
) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    let need = |key: &'static str| {
        arg(key).ok_or_else(|| Error::Argument(format!("mapping `{name}` needs `{key}`")))
    };
    Ok(match name {
        "weibull" => reference(Weibull::new(need("c")?, need("b")?).map_err(statrs_err)?),
        "generalized_gamma" | "gengamma" => {
            let (a, b, c, k) = (arg("a").unwrap_or(0.0), need("b")?, need("c")?, need("k")?);
            Box::new(move |x| generalized_gamma_ln_pdf(x, a, b, c, k))
        }
        "gamma" => reference(Gamma::new(need("c")?, 1.0 / need("b")?).map_err(statrs_err)?),
        "exponential" => reference(Exp::new(1.0 / need("b")?).map_err(statrs_err)?),
        "chi_squared" | "chisquared" => reference(ChiSquared::new(need("n")?).map_err(statrs_err)?),
        "f" => reference(FisherSnedecor::new(need("m")?, need("n")?).map_err(statrs_err)?),
        "lognormal" => reference(
            LogNormal::new(arg("mu").unwrap_or(0.0), need("sigma")?).map_err(statrs_err)?,
        ),
        "student_t" | "t" => reference(StudentsT::new(0.0, 1.0, need("m")?).map_err(statrs_err)?),
        "cauchy" => reference(
            Cauchy::new(arg("a").unwrap_or(0.0), need("b")?).map_err(statrs_err)?,
        ),
        other => return Err(Error::Argument(format!("unknown mapping `{other}`"))),
    })
}

/// A support-interior grid for [`verify_mapping`] of a named mapping.
pub fn default_grid(mapped: &MappedDistribution) -> Vec<f64> {
    let n = GALLERY_GRID_POINTS;
    match mapped.transform {
        ArgTransform::SquaredAffine { a, b } => linear_grid(a, a + 10.0 * b, n),
        _ if mapped.support.lower.is_finite() => {
            linear_grid(mapped.support.lower + 0.01, mapped.support.lower + 10.0, n)
        }
        _ => linear_grid(-5.0, 5.0, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponent_three_halves_at_origin() {
        let p = ApproxParams::new(1.0, 2.0, 1.0, 1.0, 0.0, 1.0)
            .unwrap()
            .with_kappa(0.3)
            .unwrap();
        assert_relative_eq!(approx_pdf(0.0, &p).unwrap(), 0.3 * 1.5f64.exp(), max_relative = 1e-15);
    }

    #[test]
    fn cauchy_mapping_at_zero_is_kappa() {
        let m = map_cauchy(0.0, 1.0).unwrap();
        let p = m.params.with_kappa(0.25).unwrap();
        assert_eq!(approx_pdf(0.0, &p).unwrap(), 0.25);
    }

    #[test]
    fn parameter_vectors() {
        assert_eq!(
            map_weibull(1.0, 2.0).unwrap().params.shape_vector(),
            [0.0, 2.0, -1.0, 2.0, 0.0, 1.0]
        );
        let e = map_weibull(1.0, 1.0).unwrap().params;
        assert_eq!((e.alpha1, e.alpha2), (0.0, 1.0));
        assert_eq!(
            map_chi_squared(4.0).unwrap().params.shape_vector(),
            [0.0, 1.0, -1.0, 2.0, 0.0, 1.0]
        );
        assert_eq!(
            map_f(2.0, 2.0).unwrap().params.shape_vector(),
            [0.0, 0.0, 0.0, 2.0, 1.0, 1.0]
        );
        assert_eq!(
            map_lognormal(0.0, 1.0).unwrap().params.shape_vector(),
            [1.0, 2.0, 1.0, 1.0, 0.0, 1.0]
        );
        let t5 = map_student_t(5.0).unwrap().params;
        assert_eq!((t5.alpha1, t5.lambda2, t5.alpha2, t5.beta0, t5.beta1), (0.0, 0.0, 3.0, 1.0, 0.2));
        assert_eq!(map_student_t(1.0).unwrap().params.alpha2, 1.0);
        let c = map_cauchy(0.0, 1.0).unwrap().params;
        assert_eq!((c.alpha1, c.lambda2, c.alpha2, c.beta0, c.beta1), (0.0, 0.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn generalized_gamma_transform_scale() {
        let m = map_generalized_gamma(1.0, 2.0, 4.0, 2.0).unwrap();
        assert_eq!(
            m.transform,
            ArgTransform::Affine {
                center: 1.0,
                scale: 4.0
            }
        );
    }

    #[test]
    fn weight_sums() {
        for (c, k) in [(0.5, 0.5), (2.0, 1.0), (3.0, 1.7), (1.0, 2.0)] {
            assert_eq!(map_generalized_gamma(0.0, 1.0, c, k).unwrap().weight_sum(), 1.0);
        }
        assert_eq!(map_f(4.0, 6.0).unwrap().weight_sum(), 4.0);
        assert_eq!(map_f(2.0, 2.0).unwrap().weight_sum(), 2.0);
        assert_eq!(map_lognormal(0.3, 2.0).unwrap().weight_sum(), 2.0);
        assert_eq!(map_cauchy(0.0, 1.0).unwrap().weight_sum(), 1.0);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(map_weibull(0.0, 2.0), Err(Error::Parameter { name: "b", .. })));
        assert!(matches!(map_weibull(1.0, -1.0), Err(Error::Parameter { name: "c", .. })));
        assert!(map_generalized_gamma(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(map_f(0.0, 2.0).is_err());
        assert!(map_lognormal(0.0, 0.0).is_err());
        assert!(map_student_t(-2.0).is_err());
        assert!(map_cauchy(0.0, 0.0).is_err());
    }

    #[test]
    fn domain_errors_name_the_term() {
        let p = ApproxParams::new(0.0, 1.5, 1.0, 1.0, 0.0, 1.0).unwrap();
        match approx_pdf(-1.0, &p) {
            Err(Error::Domain(msg)) => assert!(msg.contains("first term")),
            other => panic!("{other:?}"),
        }
        let q = ApproxParams::new(1.0, 1.5, 1.0, 1.0, -2.0, 1.0).unwrap();
        match approx_pdf(1.0, &q) {
            Err(Error::Domain(msg)) => assert!(msg.contains("second term")),
            other => panic!("{other:?}"),
        }
        let r = ApproxParams::new(1.0, 2.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(approx_pdf(-1.0, &r).is_ok());
    }

    #[test]
    fn gallery_passes() {
        for row in run_gallery().unwrap() {
            assert!(row.pass, "{} deviation {:e}", row.name, row.deviation);
        }
    }

    #[test]
    fn weibull_and_f_examples() {
        let w = map_weibull(1.0, 2.0).unwrap();
        let r = Weibull::new(2.0, 1.0).unwrap();
        let d = verify_mapping(&w, |x| r.ln_pdf(x), &linear_grid(0.01, 5.0, 200)).unwrap();
        assert!(d < 1e-9, "{d:e}");
        let f = map_f(2.0, 2.0).unwrap();
        let r = FisherSnedecor::new(2.0, 2.0).unwrap();
        let d = verify_mapping(&f, |x| r.ln_pdf(x), &linear_grid(0.01, 10.0, 200)).unwrap();
        assert!(d < 1e-9, "{d:e}");
    }

    #[test]
    fn perturbed_mapping_is_detected() {
        let mut w = map_weibull(1.0, 2.0).unwrap();
        w.params.alpha2 += 1e-3;
        let r = Weibull::new(2.0, 1.0).unwrap();
        let d = verify_mapping(&w, |x| r.ln_pdf(x), &linear_grid(0.01, 5.0, 200)).unwrap();
        assert!(d > 1e-4, "{d:e}");
    }

    #[test]
    fn applied_jacobian_turns_normal_in_log_into_lognormal() {
        // A standard normal in z = ln w - μ, times |dz/dw| = 1/w.
        let m = MappedDistribution {
            name: "normal in log".into(),
            transform: ArgTransform::LogShift { mu: 0.4 },
            params: ApproxParams::new(2.0, 0.0, 1.0, 0.0, 0.0, 1.0).unwrap(),
            jacobian: Jacobian::Applied,
            support: Interval {
                lower: 0.0,
                upper: f64::INFINITY,
            },
        };
        let r = LogNormal::new(0.4, 1.0).unwrap();
        let d = verify_mapping(&m, |x| r.ln_pdf(x), &linear_grid(0.01, 10.0, 200)).unwrap();
        assert!(d < 1e-9, "{d:e}");
    }

    #[test]
    fn log_limit_is_continuous() {
        let near = ApproxParams::new(1e-6, 1.0, 0.8, 1.2, 0.0, 1.0).unwrap();
        let at = ApproxParams::new(0.0, 1.0, 0.8, 1.2, 0.0, 1.0).unwrap();
        for z in linear_grid(0.5, 2.0, 50) {
            let a = approx_pdf(z, &near).unwrap();
            let b = approx_pdf(z, &at).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
    }

    #[test]
    fn moments_by_quadrature() {
        // The exponential mapping with κ = 1/e integrates to one.
        let m = map_exponential(1.0).unwrap();
        let p = m.params.with_kappa((-1.0f64).exp()).unwrap();
        assert_relative_eq!(raw_moment_quadrature(0, &p, 0.0, f64::INFINITY).unwrap(), 1.0, max_relative = 1e-10);
        assert_relative_eq!(raw_moment_quadrature(2, &p, 0.0, f64::INFINITY).unwrap(), 2.0, max_relative = 1e-10);
    }

    #[test]
    fn lookup_by_name() {
        let args = |k: &str| match k {
            "b" => Some(1.0),
            "c" => Some(2.0),
            _ => None,
        };
        let m = map_by_name("weibull", args).unwrap();
        let r = reference_by_name("weibull", args).unwrap();
        assert!(verify_mapping(&m, &r, &default_grid(&m)).unwrap() < 1e-9);
        assert!(matches!(map_by_name("weibull", |_| None), Err(Error::Argument(_))));
        assert!(map_by_name("nope", args).is_err());
    }
}
