//! Parametric density families and their basic operations.
//!
//! A [`FamilySpec`] names a family; a [`Density`] is a family plus a
//! parameter vector that has been validated against the family's parameter
//! space. Every family provides pdf evaluation, and the one-dimensional ones
//! additionally provide cdf, quantile, and inverse-cdf sampling. Quantiles
//! use closed forms where they exist and a bracketed bisection-then-Newton
//! fallback (tolerance 1e-12 in probability units) everywhere else.
//!
//! Families:
//! - `NormalLocation { dim }` — N(theta, I) on R^dim.
//! - `UniformLocation1d` — unit-height uniform on [theta, theta+1].
//! - `GammaScale { shape }` — scale family theta^-1 f(x/theta) with
//!   f(x) = x^shape e^-x / Gamma(shape+1); shape > -1.
//! - `ExponentialFamily` — natural exponential families given by a
//!   log-partition descriptor; see [`ExpFamily`].
//! - `LocationScale1d { base }` — x = loc + scale * X_base.
//! - `TimeWarp1d { base }` — image of the base density under the power warp
//!   x -> x^a with a = theta[0] > 0; base must live on [0, 1].

use crate::error::{Error, Result};
use crate::rng;
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf;
use statrs::function::gamma;

/// Tolerance, in probability units, for quantile root-finding.
pub const QUANTILE_TOL_U: f64 = 1e-12;

/// Normal supports are truncated at +/- 10 standard deviations for
/// quadrature; the discarded mass is ~1.5e-23.
pub const NORMAL_TRUNCATION_SIGMAS: f64 = 10.0;

// ---------------------------------------------------------------------------
// Parameter space

/// Closed per-coordinate box; +/- infinity endpoints mean "unbounded".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamBox {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Membership in the closed box. Non-finite coordinates never belong.
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(t, (lo, hi))| t.is_finite() && *t >= *lo && *t <= *hi)
    }

    /// Strict interior at every finite bound. Tensor evaluation requires an
    /// interior point; boundary parameters are accepted for plain evaluation
    /// but rejected here.
    pub fn is_interior(&self, theta: &[f64]) -> bool {
        self.contains(theta)
            && theta
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(t, (lo, hi))| {
                    (lo.is_infinite() || *t > *lo) && (hi.is_infinite() || *t < *hi)
                })
    }
}

fn unbounded_box(dim: usize) -> ParamBox {
    ParamBox {
        lo: vec![f64::NEG_INFINITY; dim],
        hi: vec![f64::INFINITY; dim],
    }
}

// ---------------------------------------------------------------------------
// Family descriptors

/// Base densities for location-scale and time-warp constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseDensity {
    /// Standard normal on R.
    StdNormal,
    /// Uniform on [0, 1].
    Uniform01,
    /// Triweight (35/32)(1 - x^2)^3 on [-1, 1].
    Triweight,
}

impl BaseDensity {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            BaseDensity::StdNormal => normal_pdf(x),
            BaseDensity::Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            BaseDensity::Triweight => {
                if x.abs() <= 1.0 {
                    let u = 1.0 - x * x;
                    35.0 / 32.0 * u * u * u
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            BaseDensity::StdNormal => normal_cdf(x),
            BaseDensity::Uniform01 => x.clamp(0.0, 1.0),
            BaseDensity::Triweight => {
                if x <= -1.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    35.0 / 32.0 * (x - x.powi(3) + 0.6 * x.powi(5) - x.powi(7) / 7.0) + 0.5
                }
            }
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_unit_open(u)?;
        match self {
            BaseDensity::StdNormal => Ok(normal_quantile(u)),
            BaseDensity::Uniform01 => Ok(u),
            BaseDensity::Triweight => {
                quantile_by_cdf(|x| self.cdf(x), |x| self.pdf(x), -1.0, 1.0, u)
            }
        }
    }

    /// Support interval, already truncated for quadrature where unbounded.
    pub fn quad_range(&self) -> (f64, f64) {
        match self {
            BaseDensity::StdNormal => (-NORMAL_TRUNCATION_SIGMAS, NORMAL_TRUNCATION_SIGMAS),
            BaseDensity::Uniform01 => (0.0, 1.0),
            BaseDensity::Triweight => (-1.0, 1.0),
        }
    }

    /// (mean, second moment).
    pub fn moments(&self) -> (f64, f64) {
        match self {
            BaseDensity::StdNormal => (0.0, 1.0),
            BaseDensity::Uniform01 => (0.5, 1.0 / 3.0),
            BaseDensity::Triweight => (0.0, 1.0 / 9.0),
        }
    }
}

/// Natural exponential families f_theta(x) = exp(theta . T(x) - Lambda(theta)) h(x).
/// `T(x) = x` for both built-ins.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpFamily {
    /// h = N(0, I), Lambda(theta) = |theta|^2 / 2; coincides with N(theta, I).
    NormalNatural { dim: usize },
    /// h(x) = 1/x! on the nonnegative integers, Lambda(theta) = e^theta;
    /// coincides with Poisson(e^theta).
    PoissonNatural,
}

impl ExpFamily {
    pub fn param_dim(&self) -> usize {
        match self {
            ExpFamily::NormalNatural { dim } => *dim,
            ExpFamily::PoissonNatural => 1,
        }
    }

    /// Log-partition with gradient and Hessian, all exact.
    pub fn log_partition(&self, theta: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        if theta.len() != self.param_dim() {
            return Err(Error::invalid(format!(
                "log_partition: theta has length {}, family expects {}",
                theta.len(),
                self.param_dim()
            )));
        }
        match self {
            ExpFamily::NormalNatural { dim } => {
                let val = 0.5 * theta.iter().map(|t| t * t).sum::<f64>();
                Ok((val, theta.to_vec(), DMatrix::identity(*dim, *dim)))
            }
            ExpFamily::PoissonNatural => {
                let e = theta[0].exp();
                Ok((e, vec![e], DMatrix::from_element(1, 1, e)))
            }
        }
    }

    /// Strict convexity of Lambda: the Hessian must be positive definite at
    /// each probe point (checked via its eigenvalues).
    pub fn check_convex(&self, probes: &[Vec<f64>]) -> Result<()> {
        for theta in probes {
            let (_, _, hess) = self.log_partition(theta)?;
            let eigs = hess.symmetric_eigenvalues();
            if eigs.iter().any(|&l| l <= 0.0) {
                return Err(Error::domain(format!(
                    "log-partition Hessian is not positive definite at theta = {theta:?}"
                )));
            }
        }
        Ok(())
    }
}

/// A named density family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    NormalLocation { dim: usize },
    UniformLocation1d,
    GammaScale { shape: f64 },
    ExponentialFamily { family: ExpFamily },
    LocationScale1d { base: BaseDensity },
    TimeWarp1d { base: BaseDensity },
}

impl FamilySpec {
    /// Dimension of the observation space.
    pub fn data_dim(&self) -> usize {
        match self {
            FamilySpec::NormalLocation { dim } => *dim,
            FamilySpec::ExponentialFamily { family } => family.param_dim(),
            _ => 1,
        }
    }

    /// Dimension of the parameter vector.
    pub fn param_dim(&self) -> usize {
        match self {
            FamilySpec::NormalLocation { dim } => *dim,
            FamilySpec::UniformLocation1d => 1,
            FamilySpec::GammaScale { .. } => 1,
            FamilySpec::ExponentialFamily { family } => family.param_dim(),
            FamilySpec::LocationScale1d { .. } => 2,
            FamilySpec::TimeWarp1d { .. } => 1,
        }
    }

    /// Closed parameter box. Strictly positive coordinates (scales, warp
    /// exponents) get `f64::MIN_POSITIVE` as their lower endpoint, so the
    /// closed box excludes zero.
    pub fn parameter_space(&self) -> ParamBox {
        let pos = f64::MIN_POSITIVE;
        match self {
            FamilySpec::NormalLocation { dim } => unbounded_box(*dim),
            FamilySpec::UniformLocation1d => unbounded_box(1),
            FamilySpec::GammaScale { .. } => ParamBox {
                lo: vec![pos],
                hi: vec![f64::INFINITY],
            },
            FamilySpec::ExponentialFamily { family } => unbounded_box(family.param_dim()),
            FamilySpec::LocationScale1d { .. } => ParamBox {
                lo: vec![f64::NEG_INFINITY, pos],
                hi: vec![f64::INFINITY, f64::INFINITY],
            },
            FamilySpec::TimeWarp1d { .. } => ParamBox {
                lo: vec![pos],
                hi: vec![f64::INFINITY],
            },
        }
    }

    /// Family-level validity that a parameter box cannot express.
    pub fn validate(&self) -> Result<()> {
        match self {
            FamilySpec::NormalLocation { dim } => {
                if *dim == 0 {
                    return Err(Error::invalid("normal_location: dim must be >= 1"));
                }
            }
            FamilySpec::GammaScale { shape } => {
                if !(*shape > -1.0) {
                    return Err(Error::invalid(format!(
                        "gamma_scale: shape must exceed -1, got {shape}"
                    )));
                }
            }
            FamilySpec::ExponentialFamily { family } => {
                if family.param_dim() == 0 {
                    return Err(Error::invalid("exponential_family: dim must be >= 1"));
                }
            }
            FamilySpec::TimeWarp1d { base } if !matches!(base, BaseDensity::Uniform01) => {
                return Err(Error::invalid(
                    "time_warp_1d: base density must be supported on [0, 1] (uniform01)",
                ));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        self.validate()?;
        if theta.len() != self.param_dim() {
            return Err(Error::invalid(format!(
                "theta has length {}, family {} expects {}",
                theta.len(),
                self.name(),
                self.param_dim()
            )));
        }
        if !self.parameter_space().contains(theta) {
            return Err(Error::domain(format!(
                "theta {theta:?} is outside the parameter space of {}",
                self.name()
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::NormalLocation { .. } => "normal_location",
            FamilySpec::UniformLocation1d => "uniform_location_1d",
            FamilySpec::GammaScale { .. } => "gamma_scale",
            FamilySpec::ExponentialFamily {
                family: ExpFamily::NormalNatural { .. },
            } => "exponential_family(normal_natural)",
            FamilySpec::ExponentialFamily {
                family: ExpFamily::PoissonNatural,
            } => "exponential_family(poisson_natural)",
            FamilySpec::LocationScale1d { .. } => "location_scale_1d",
            FamilySpec::TimeWarp1d { .. } => "time_warp_1d",
        }
    }

    /// Discrete families take counting-measure sums where continuous ones
    /// take integrals.
    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            FamilySpec::ExponentialFamily {
                family: ExpFamily::PoissonNatural
            }
        )
    }
}

// ---------------------------------------------------------------------------
// Density

/// A family member: validated parameter inside the family's space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density {
    family: FamilySpec,
    theta: Vec<f64>,
}

impl Density {
    pub fn new(family: FamilySpec, theta: Vec<f64>) -> Result<Self> {
        family.check_theta(&theta)?;
        Ok(Density { family, theta })
    }

    pub fn family(&self) -> &FamilySpec {
        &self.family
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn data_dim(&self) -> usize {
        self.family.data_dim()
    }

    /// Density (or probability mass) at `x`. Zero outside the support; may
    /// be +inf at an integrable singularity (gamma shapes in (-1, 0) at the
    /// origin).
    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.data_dim() {
            return Err(Error::invalid(format!(
                "pdf: x has dimension {}, density expects {}",
                x.len(),
                self.data_dim()
            )));
        }
        Ok(match &self.family {
            FamilySpec::NormalLocation { .. } => {
                let q: f64 = x
                    .iter()
                    .zip(&self.theta)
                    .map(|(xi, ti)| (xi - ti) * (xi - ti))
                    .sum();
                (2.0 * std::f64::consts::PI).powf(-(x.len() as f64) / 2.0) * (-0.5 * q).exp()
            }
            FamilySpec::UniformLocation1d => {
                let t = self.theta[0];
                if x[0] >= t && x[0] <= t + 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FamilySpec::GammaScale { shape } => gamma_scale_pdf(*shape, self.theta[0], x[0]),
            FamilySpec::ExponentialFamily { family } => match family {
                ExpFamily::NormalNatural { .. } => {
                    let q: f64 = x
                        .iter()
                        .zip(&self.theta)
                        .map(|(xi, ti)| (xi - ti) * (xi - ti))
                        .sum();
                    (2.0 * std::f64::consts::PI).powf(-(x.len() as f64) / 2.0) * (-0.5 * q).exp()
                }
                ExpFamily::PoissonNatural => {
                    let k = x[0];
                    if k < 0.0 || k.fract() != 0.0 {
                        0.0
                    } else {
                        poisson_pmf(self.theta[0], k)
                    }
                }
            },
            FamilySpec::LocationScale1d { base } => {
                let (l, s) = (self.theta[0], self.theta[1]);
                base.pdf((x[0] - l) / s) / s
            }
            FamilySpec::TimeWarp1d { .. } => {
                // Base is uniform01 (enforced at construction): the warped
                // density of Y = X^a is (1/a) y^(1/a - 1) on (0, 1).
                let a = self.theta[0];
                let y = x[0];
                if y <= 0.0 {
                    if y == 0.0 && a < 1.0 {
                        0.0
                    } else if y == 0.0 && a == 1.0 {
                        1.0
                    } else if y == 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else if y > 1.0 {
                    0.0
                } else {
                    y.powf(1.0 / a - 1.0) / a
                }
            }
        })
    }

    /// Cumulative distribution function; one-dimensional families only.
    pub fn cdf1(&self, x: f64) -> Result<f64> {
        match &self.family {
            FamilySpec::NormalLocation { dim: 1 } => Ok(normal_cdf(x - self.theta[0])),
            FamilySpec::UniformLocation1d => Ok((x - self.theta[0]).clamp(0.0, 1.0)),
            FamilySpec::GammaScale { shape } => {
                if x <= 0.0 {
                    Ok(0.0)
                } else {
                    Ok(gamma::gamma_lr(shape + 1.0, x / self.theta[0]))
                }
            }
            FamilySpec::ExponentialFamily { family } => match family {
                ExpFamily::NormalNatural { dim: 1 } => Ok(normal_cdf(x - self.theta[0])),
                ExpFamily::PoissonNatural => {
                    let lambda = self.theta[0].exp();
                    if x < 0.0 {
                        Ok(0.0)
                    } else {
                        // P(X <= k) = Q(k+1, lambda), the upper regularized gamma.
                        Ok(gamma::gamma_ur(x.floor() + 1.0, lambda))
                    }
                }
                _ => Err(Error::unsupported(
                    "cdf1 requires a one-dimensional family",
                )),
            },
            FamilySpec::LocationScale1d { base } => {
                let (l, s) = (self.theta[0], self.theta[1]);
                Ok(base.cdf((x - l) / s))
            }
            FamilySpec::TimeWarp1d { .. } => {
                let a = self.theta[0];
                Ok(x.clamp(0.0, 1.0).powf(1.0 / a))
            }
            _ => Err(Error::unsupported("cdf1 requires a one-dimensional family")),
        }
    }

    /// Quantile (inverse cdf) at u in (0, 1); closed form where available,
    /// bracketed bisection-then-Newton otherwise.
    pub fn quantile1(&self, u: f64) -> Result<f64> {
        check_unit_open(u)?;
        match &self.family {
            FamilySpec::NormalLocation { dim: 1 } => Ok(self.theta[0] + normal_quantile(u)),
            FamilySpec::UniformLocation1d => Ok(self.theta[0] + u),
            FamilySpec::GammaScale { shape } => {
                let hi = self.theta[0] * gamma_quad_hi(*shape);
                quantile_by_cdf(
                    |x| self.cdf1(x).unwrap_or(f64::NAN),
                    |x| gamma_scale_pdf(*shape, self.theta[0], x),
                    0.0,
                    hi,
                    u,
                )
            }
            FamilySpec::ExponentialFamily { family } => match family {
                ExpFamily::NormalNatural { dim: 1 } => Ok(self.theta[0] + normal_quantile(u)),
                ExpFamily::PoissonNatural => {
                    // Smallest integer k with cdf(k) >= u.
                    let lambda = self.theta[0].exp();
                    let cap = (lambda + 12.0 * lambda.sqrt() + 60.0).ceil() as u64;
                    let mut k = 0u64;
                    loop {
                        if self.cdf1(k as f64)? >= u {
                            return Ok(k as f64);
                        }
                        k += 1;
                        if k > cap {
                            return Err(Error::numeric(format!(
                                "poisson quantile search exceeded {cap} terms at u={u}"
                            )));
                        }
                    }
                }
                _ => Err(Error::unsupported(
                    "quantile1 requires a one-dimensional family",
                )),
            },
            FamilySpec::LocationScale1d { base } => {
                let (l, s) = (self.theta[0], self.theta[1]);
                Ok(l + s * base.quantile(u)?)
            }
            FamilySpec::TimeWarp1d { .. } => Ok(u.powf(self.theta[0])),
            _ => Err(Error::unsupported(
                "quantile1 requires a one-dimensional family",
            )),
        }
    }

    /// Interval outside which the density's mass is negligible (<= ~1e-15),
    /// used to truncate quadrature. Discrete families are refused.
    pub fn quad_range(&self) -> Result<(f64, f64)> {
        match &self.family {
            FamilySpec::NormalLocation { .. } => {
                let t = self.theta[0];
                Ok((t - NORMAL_TRUNCATION_SIGMAS, t + NORMAL_TRUNCATION_SIGMAS))
            }
            FamilySpec::UniformLocation1d => Ok((self.theta[0], self.theta[0] + 1.0)),
            FamilySpec::GammaScale { shape } => Ok((0.0, self.theta[0] * gamma_quad_hi(*shape))),
            FamilySpec::ExponentialFamily { family } => match family {
                ExpFamily::NormalNatural { .. } => {
                    let t = self.theta[0];
                    Ok((t - NORMAL_TRUNCATION_SIGMAS, t + NORMAL_TRUNCATION_SIGMAS))
                }
                ExpFamily::PoissonNatural => Err(Error::unsupported(
                    "quad_range: poisson_natural is discrete; sum over the support instead",
                )),
            },
            FamilySpec::LocationScale1d { base } => {
                let (l, s) = (self.theta[0], self.theta[1]);
                let (a, b) = base.quad_range();
                Ok((l + s * a, l + s * b))
            }
            FamilySpec::TimeWarp1d { .. } => Ok((0.0, 1.0)),
        }
    }

    /// Points where the density is discontinuous (or otherwise non-smooth)
    /// in x. Quadrature panels must split here: an adaptive Gauss-Kronrod
    /// error estimate is blind to a jump that lands strategically inside a
    /// panel, so integrands built from uniform-support densities are only
    /// reliable when integrated piecewise between these points.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            FamilySpec::UniformLocation1d => vec![self.theta[0], self.theta[0] + 1.0],
            // Kink or integrable singularity at the origin when the
            // polynomial exponent drops below 1.
            FamilySpec::GammaScale { shape } if *shape < 1.0 => vec![0.0],
            FamilySpec::LocationScale1d { base } => match base {
                BaseDensity::Uniform01 => vec![self.theta[0], self.theta[0] + self.theta[1]],
                // StdNormal is smooth; Triweight vanishes to second order
                // at its support edges.
                BaseDensity::StdNormal | BaseDensity::Triweight => vec![],
            },
            // The warped pdf jumps (or blows up integrably) at the support
            // edges depending on the exponent.
            FamilySpec::TimeWarp1d { .. } => vec![0.0, 1.0],
            _ => vec![],
        }
    }

    /// The warp function of a time-warp member.
    pub fn warp(&self) -> Result<WarpFunction> {
        match &self.family {
            FamilySpec::TimeWarp1d { .. } => WarpFunction::power(self.theta[0]),
            _ => Err(Error::unsupported("warp(): not a time_warp_1d density")),
        }
    }

    /// One draw via inverse-cdf (coordinatewise for multivariate normals).
    pub fn sample_one(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match &self.family {
            FamilySpec::NormalLocation { dim }
            | FamilySpec::ExponentialFamily {
                family: ExpFamily::NormalNatural { dim },
            } => {
                let mut x = Vec::with_capacity(*dim);
                for c in 0..*dim {
                    let u = rng::open_unit(rng);
                    x.push(self.theta[c] + normal_quantile(u));
                }
                Ok(x)
            }
            _ => {
                let u = rng::open_unit(rng);
                Ok(vec![self.quantile1(u)?])
            }
        }
    }

    /// `m` draws from the named sub-stream of `root_seed`.
    pub fn sample_set(&self, m: usize, root_seed: u64, stream_name: &str) -> Result<SampleSet> {
        let mut rng = rng::stream(root_seed, stream_name);
        let dim = self.data_dim();
        let mut data = Vec::with_capacity(m * dim);
        for _ in 0..m {
            data.extend(self.sample_one(&mut rng)?);
        }
        Ok(SampleSet {
            source_id: stream_name.to_string(),
            dim,
            seed: root_seed,
            data,
        })
    }
}

/// Convenience constructor.
pub fn density(family: FamilySpec, theta: &[f64]) -> Result<Density> {
    Density::new(family, theta.to_vec())
}

// ---------------------------------------------------------------------------
// Samples

/// A finite sample tagged with its provenance (stream name and root seed).
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub source_id: String,
    pub dim: usize,
    pub seed: u64,
    /// Row-major, `len() * dim` values.
    pub data: Vec<f64>,
}

impl SampleSet {
    pub fn new(source_id: String, dim: usize, seed: u64, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("sample set: dim must be >= 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "sample set: {} values is not a multiple of dim {}",
                data.len(),
                dim
            )));
        }
        Ok(SampleSet {
            source_id,
            dim,
            seed,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// The flat coordinate slice of a one-dimensional sample.
    pub fn scalars(&self) -> Result<&[f64]> {
        if self.dim != 1 {
            return Err(Error::invalid(format!(
                "expected one-dimensional sample, got dim {}",
                self.dim
            )));
        }
        Ok(&self.data)
    }
}

// ---------------------------------------------------------------------------
// Warp functions

/// Monotone reparameterizations of [0, 1] with fixed endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarpFunction {
    /// x -> x^a with a > 0.
    Power { exponent: f64 },
    /// Piecewise-linear interpolation of strictly increasing knot values;
    /// knots[0] = 0, knots[last] = 1, values[0] = 0, values[last] = 1.
    MonotoneSpline { knots: Vec<f64>, values: Vec<f64> },
}

impl WarpFunction {
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::invalid(format!(
                "power warp: exponent must be a positive real, got {exponent}"
            )));
        }
        Ok(WarpFunction::Power { exponent })
    }

    pub fn monotone_spline(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::invalid(
                "monotone spline: need matching knot/value lists of length >= 2",
            ));
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
            return Err(Error::invalid("monotone spline: knots must span [0, 1]"));
        }
        if values[0] != 0.0 || *values.last().unwrap() != 1.0 {
            return Err(Error::invalid(
                "monotone spline: values must run from 0 to 1 (endpoint-fixed warp)",
            ));
        }
        for w in knots.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid("monotone spline: knots must strictly increase"));
            }
        }
        for w in values.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(
                    "monotone spline: values must strictly increase (warp must be monotone)",
                ));
            }
        }
        Ok(WarpFunction::MonotoneSpline { knots, values })
    }

    /// Evaluate the warp at x in [0, 1].
    pub fn apply(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("warp argument {x} outside [0, 1]")));
        }
        Ok(match self {
            WarpFunction::Power { exponent } => x.powf(*exponent),
            WarpFunction::MonotoneSpline { knots, values } => {
                let idx = match knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
                    Ok(i) => return Ok(values[i]),
                    Err(i) => i,
                };
                let (k0, k1) = (knots[idx - 1], knots[idx]);
                let (v0, v1) = (values[idx - 1], values[idx]);
                v0 + (v1 - v0) * (x - k0) / (k1 - k0)
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Scalar special-function helpers

pub fn normal_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.3989422804014327;
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(u: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf::erf_inv(2.0 * u - 1.0)
}

fn poisson_pmf(theta: f64, k: f64) -> f64 {
    // pmf(k) = exp(theta k - e^theta) / k!
    (theta * k - theta.exp() - gamma::ln_gamma(k + 1.0)).exp()
}

fn gamma_scale_pdf(shape: f64, theta: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match shape.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 0.0,
            Some(std::cmp::Ordering::Equal) => 1.0 / theta,
            _ => f64::INFINITY,
        };
    }
    let u = x / theta;
    (shape * u.ln() - u - gamma::ln_gamma(shape + 1.0)).exp() / theta
}

/// Upper quadrature endpoint for the unit-scale gamma with the given shape:
/// mean + 12 sd + 60 keeps the discarded tail far below 1e-15.
fn gamma_quad_hi(shape: f64) -> f64 {
    let a = shape + 1.0;
    a + 12.0 * a.sqrt() + 60.0
}

fn check_unit_open(u: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!(
            "quantile argument must lie in the open interval (0, 1), got {u}"
        )));
    }
    Ok(())
}

/// Bracketed bisection narrowed enough for safe Newton polishing; tolerance
/// is `QUANTILE_TOL_U` in probability units.
fn quantile_by_cdf(
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    u: f64,
) -> Result<f64> {
    if !(cdf(lo) <= u && cdf(hi) >= u) {
        return Err(Error::numeric(format!(
            "quantile bracket [{lo}, {hi}] does not enclose u = {u}"
        )));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..60 {
        x = 0.5 * (lo + hi);
        let c = cdf(x);
        if !c.is_finite() {
            return Err(Error::numeric("cdf returned a non-finite value".to_string()));
        }
        if (c - u).abs() <= QUANTILE_TOL_U {
            return Ok(x);
        }
        if c < u {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo < 1e-14 * (1.0 + x.abs()) {
            break;
        }
    }
    // Newton polish inside the final bracket.
    for _ in 0..20 {
        let c = cdf(x);
        if (c - u).abs() <= QUANTILE_TOL_U {
            return Ok(x);
        }
        let d = pdf(x);
        if !(d > 0.0) || !d.is_finite() {
            break;
        }
        let step = (c - u) / d;
        let next = (x - step).clamp(lo, hi);
        if next == x {
            break;
        }
        x = next;
    }
    let c = cdf(x);
    if (c - u).abs() <= 1e-10 {
        // Root pinched by floating-point bracket width; accept.
        return Ok(x);
    }
    Err(Error::numeric(format!(
        "quantile iteration stalled at |cdf - u| = {:.3e}",
        (c - u).abs()
    )))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn d(family: FamilySpec, theta: &[f64]) -> Density {
        density(family, theta).unwrap()
    }

    #[test]
    fn pdfs_integrate_to_one() {
        let cases = vec![
            d(FamilySpec::NormalLocation { dim: 1 }, &[0.7]),
            d(FamilySpec::UniformLocation1d, &[-0.3]),
            d(FamilySpec::GammaScale { shape: 0.0 }, &[1.0]),
            d(FamilySpec::GammaScale { shape: 2.5 }, &[0.4]),
            d(FamilySpec::GammaScale { shape: -0.5 }, &[2.0]),
            d(
                FamilySpec::LocationScale1d {
                    base: BaseDensity::StdNormal,
                },
                &[1.0, 2.0],
            ),
            d(
                FamilySpec::LocationScale1d {
                    base: BaseDensity::Triweight,
                },
                &[-1.0, 0.5],
            ),
            d(
                FamilySpec::TimeWarp1d {
                    base: BaseDensity::Uniform01,
                },
                &[0.5],
            ),
            d(
                FamilySpec::TimeWarp1d {
                    base: BaseDensity::Uniform01,
                },
                &[2.0],
            ),
        ];
        for dens in cases {
            let (a, b) = dens.quad_range().unwrap();
            let mass = quad::integrate_auto(|x| dens.pdf(&[x]).unwrap(), a, b).unwrap();
            assert!(
                (mass - 1.0).abs() < 1e-8,
                "{}: mass = {mass}",
                dens.family().name()
            );
        }
    }

    #[test]
    fn poisson_pmf_sums_to_one_and_matches_mean() {
        let dens = d(
            FamilySpec::ExponentialFamily {
                family: ExpFamily::PoissonNatural,
            },
            &[1.0],
        );
        let mass = quad::sum_series(|k| dens.pdf(&[k as f64]).unwrap(), 0, 1e-16, 5, 1000).unwrap();
        assert!((mass - 1.0).abs() < 1e-12, "mass = {mass}");
        let mean =
            quad::sum_series(|k| k as f64 * dens.pdf(&[k as f64]).unwrap(), 0, 1e-16, 5, 1000)
                .unwrap();
        // Mean of the natural Poisson at theta is gradient of the
        // log-partition: e^theta.
        assert!((mean - 1f64.exp()).abs() < 1e-10, "mean = {mean}");
    }

    #[test]
    fn gamma_cdf_example() {
        // Shape 0 is the exponential distribution: cdf(1; theta=1) = 1 - e^-1.
        let dens = d(FamilySpec::GammaScale { shape: 0.0 }, &[1.0]);
        let c = dens.cdf1(1.0).unwrap();
        assert!((c - (1.0 - (-1.0f64).exp())).abs() < 1e-12, "cdf = {c}");
    }

    #[test]
    fn quantile_roundtrip_continuous_families() {
        let cases = vec![
            d(FamilySpec::NormalLocation { dim: 1 }, &[0.3]),
            d(FamilySpec::UniformLocation1d, &[2.0]),
            d(FamilySpec::GammaScale { shape: 1.5 }, &[0.7]),
            d(FamilySpec::GammaScale { shape: -0.4 }, &[1.3]),
            d(
                FamilySpec::LocationScale1d {
                    base: BaseDensity::Triweight,
                },
                &[0.0, 1.0],
            ),
            d(
                FamilySpec::TimeWarp1d {
                    base: BaseDensity::Uniform01,
                },
                &[1.7],
            ),
        ];
        for dens in &cases {
            for i in 1..40 {
                let u = i as f64 / 40.0;
                let x = dens.quantile1(u).unwrap();
                let back = dens.cdf1(x).unwrap();
                assert!(
                    (back - u).abs() < 1e-10,
                    "{}: u={u}, cdf(quantile)={back}",
                    dens.family().name()
                );
            }
        }
    }

    #[test]
    fn log_partition_normal_and_poisson() {
        let fam = ExpFamily::NormalNatural { dim: 3 };
        let (v, g, h) = fam.log_partition(&[1.0, 2.0, 2.0]).unwrap();
        assert_eq!(v, 4.5);
        assert_eq!(g, vec![1.0, 2.0, 2.0]);
        assert_eq!(h, DMatrix::identity(3, 3));

        let fam = ExpFamily::PoissonNatural;
        let (v, g, h) = fam.log_partition(&[1.0]).unwrap();
        let e = 1f64.exp();
        assert!((v - e).abs() < 1e-15);
        assert!((g[0] - e).abs() < 1e-15);
        assert!((h[(0, 0)] - e).abs() < 1e-15);

        fam.check_convex(&[vec![-2.0], vec![0.0], vec![3.0]]).unwrap();
    }

    #[test]
    fn sampling_is_deterministic_and_centered() {
        let dens = d(FamilySpec::NormalLocation { dim: 2 }, &[1.0, -1.0]);
        let s1 = dens.sample_set(2000, 42, "unit/normal").unwrap();
        let s2 = dens.sample_set(2000, 42, "unit/normal").unwrap();
        assert_eq!(s1.data, s2.data);
        let mean0: f64 = (0..s1.len()).map(|i| s1.row(i)[0]).sum::<f64>() / s1.len() as f64;
        let mean1: f64 = (0..s1.len()).map(|i| s1.row(i)[1]).sum::<f64>() / s1.len() as f64;
        assert!((mean0 - 1.0).abs() < 0.1, "mean0 = {mean0}");
        assert!((mean1 + 1.0).abs() < 0.1, "mean1 = {mean1}");
    }

    #[test]
    fn gamma_sampling_moments() {
        // Gamma(shape k+1 = 3, scale 0.5): mean 1.5.
        let dens = d(FamilySpec::GammaScale { shape: 2.0 }, &[0.5]);
        let s = dens.sample_set(4000, 7, "unit/gamma").unwrap();
        let xs = s.scalars().unwrap();
        let mean: f64 = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 1.5).abs() < 0.05, "mean = {mean}");
    }

    #[test]
    fn parameter_validation() {
        assert!(density(FamilySpec::GammaScale { shape: -1.5 }, &[1.0]).is_err());
        assert!(density(FamilySpec::GammaScale { shape: 1.0 }, &[0.0]).is_err());
        assert!(density(FamilySpec::GammaScale { shape: 1.0 }, &[-1.0]).is_err());
        assert!(density(FamilySpec::NormalLocation { dim: 2 }, &[0.0]).is_err());
        assert!(density(
            FamilySpec::LocationScale1d {
                base: BaseDensity::StdNormal
            },
            &[0.0, 0.0]
        )
        .is_err());
        assert!(density(
            FamilySpec::TimeWarp1d {
                base: BaseDensity::StdNormal
            },
            &[1.0]
        )
        .is_err());
        assert!(density(FamilySpec::NormalLocation { dim: 1 }, &[f64::NAN]).is_err());
    }

    #[test]
    fn boundary_vs_interior() {
        let fam = FamilySpec::GammaScale { shape: 1.0 };
        let space = fam.parameter_space();
        assert!(space.contains(&[1.0]));
        assert!(space.is_interior(&[1.0]));
        assert!(!space.contains(&[0.0]));
        assert!(!space.contains(&[-1.0]));
    }

    #[test]
    fn warp_functions() {
        let w = WarpFunction::power(2.0).unwrap();
        assert_eq!(w.apply(0.5).unwrap(), 0.25);
        assert_eq!(w.apply(0.0).unwrap(), 0.0);
        assert_eq!(w.apply(1.0).unwrap(), 1.0);
        assert!(w.apply(1.5).is_err());
        assert!(WarpFunction::power(0.0).is_err());
        assert!(WarpFunction::power(-1.0).is_err());

        let s = WarpFunction::monotone_spline(vec![0.0, 0.4, 1.0], vec![0.0, 0.6, 1.0]).unwrap();
        assert_eq!(s.apply(0.4).unwrap(), 0.6);
        assert!((s.apply(0.2).unwrap() - 0.3).abs() < 1e-15);
        assert!(WarpFunction::monotone_spline(vec![0.0, 0.4, 1.0], vec![0.0, 0.7, 0.6]).is_err());
        assert!(WarpFunction::monotone_spline(vec![0.0, 1.0], vec![0.0, 0.5]).is_err());
    }

    #[test]
    fn family_spec_json_roundtrip() {
        let specs = vec![
            FamilySpec::NormalLocation { dim: 2 },
            FamilySpec::UniformLocation1d,
            FamilySpec::GammaScale { shape: 0.5 },
            FamilySpec::ExponentialFamily {
                family: ExpFamily::PoissonNatural,
            },
            FamilySpec::ExponentialFamily {
                family: ExpFamily::NormalNatural { dim: 1 },
            },
            FamilySpec::LocationScale1d {
                base: BaseDensity::StdNormal,
            },
            FamilySpec::TimeWarp1d {
                base: BaseDensity::Uniform01,
            },
        ];
        for spec in specs {
            let s = serde_json::to_string(&spec).unwrap();
            let back: FamilySpec = serde_json::from_str(&s).unwrap();
            assert_eq!(spec, back, "{s}");
        }
        // Spot-check the wire shape.
        let s = serde_json::to_string(&FamilySpec::NormalLocation { dim: 2 }).unwrap();
        assert_eq!(s, r#"{"kind":"normal_location","params":{"dim":2}}"#);
    }

    #[test]
    fn timewarp_pdf_cdf() {
        // a = 2: Y = X^2, pdf(y) = 1/(2 sqrt(y)), cdf(y) = sqrt(y).
        let dens = d(
            FamilySpec::TimeWarp1d {
                base: BaseDensity::Uniform01,
            },
            &[2.0],
        );
        assert!((dens.pdf(&[0.25]).unwrap() - 1.0).abs() < 1e-12);
        assert!((dens.cdf1(0.25).unwrap() - 0.5).abs() < 1e-12);
        assert!((dens.quantile1(0.5).unwrap() - 0.25).abs() < 1e-12);
    }
}
