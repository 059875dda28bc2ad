//! Dissimilarities between densities.
//!
//! Each dissimilarity offers up to two evaluation routes: a closed form for
//! the family pairs that admit one, and a quadrature (or counting-measure
//! series) route that works for any pair with compatible supports. The
//! [`EvalRoute`] in a [`DissimilaritySpec`] picks between them; `Auto`
//! prefers the closed form and falls back to quadrature.
//!
//! Matrix entries are *distances* for L2, RKHS, Hellinger, total variation
//! and Wasserstein-2, and raw divergence values for symmetrized KL and
//! chi-square. Divergences may be the distinguished value `f64::INFINITY`
//! (support mismatch); they are never encoded as sentinels.
//!
//! Closed-form proportionality constants are pinned here once and verified
//! against quadrature by the test suite:
//!
//! - L2, normal location, dim d:
//!   |f - g|^2 = 2 (4 pi)^(-d/2) (1 - exp(-|dt|^2 / 4)),
//!   from the Gaussian product integral
//!   int phi_d(x - t) phi_d(x - t0) dx = (4 pi)^(-d/2) exp(-|dt|^2/4).
//! - L2, unit-height uniforms: |f - g|^2 = 2 min(|dt|, 1) (two symmetric
//!   difference intervals of height one).
//! - L2, gamma scale with shape k > -1/2:
//!   |f - g|^2 = C_k [ 1/t + 1/t0 - 4^(k+1) t^k t0^k (t + t0)^-(2k+1) ],
//!   C_k = Gamma(2k+1) / (2^(2k+1) Gamma(k+1)^2),
//!   from int f_t f_t0 = Gamma(2k+1)/Gamma(k+1)^2 (t t0)^k (t+t0)^-(2k+1).
//!   Note the last factor carries a *negative* exponent; the test suite
//!   verifies it against direct quadrature.
//! - Squared Hellinger, exponential family:
//!   2 - 2 exp[ Lambda((t+t0)/2) - (Lambda(t) + Lambda(t0))/2 ];
//!   normal location: 2 - 2 exp(-|dt|^2 / 8).
//! - Symmetrized KL, exponential family: (t - t0) . (grad Lambda(t) - grad Lambda(t0)).
//! - Wasserstein-2, location-scale: with base moments m1 = E[Z], m2 = E[Z^2],
//!   W2^2 = dl^2 + 2 dl ds m1 + ds^2 m2 (the familiar dl^2 + ds^2 Var(Z)
//!   form when the base is centered).

use crate::error::{Error, Result};
use crate::models::{
    normal_cdf, normal_pdf, BaseDensity, Density, ExpFamily, FamilySpec, NORMAL_TRUNCATION_SIGMAS,
};
use crate::quad::{self, QuadOptions};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

// ---------------------------------------------------------------------------
// Specs

/// Positive-definite kernels for RKHS distances, KDE smoothing, and MMD.
/// The descriptor names the *smoother* kappa with its bandwidth; the RKHS
/// kernel is the convolution square K = kappa * kappa, so that the RKHS
/// distance equals the L2 distance between kappa-smoothed densities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// kappa = Gaussian density with standard deviation `bandwidth`;
    /// K = Gaussian density with standard deviation bandwidth * sqrt(2).
    Gaussian { bandwidth: f64 },
    /// kappa = triweight density rescaled to [-bandwidth, bandwidth];
    /// K is its convolution square (support width 4 * bandwidth).
    TriweightConvolution { bandwidth: f64 },
}

impl KernelSpec {
    pub fn bandwidth(&self) -> f64 {
        match self {
            KernelSpec::Gaussian { bandwidth } => *bandwidth,
            KernelSpec::TriweightConvolution { bandwidth } => *bandwidth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.bandwidth();
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::invalid(format!(
                "kernel bandwidth must be a positive real, got {b}"
            )));
        }
        Ok(())
    }

    /// The smoother kappa evaluated at x.
    pub fn smoother(&self, x: f64) -> f64 {
        match self {
            KernelSpec::Gaussian { bandwidth } => normal_pdf(x / bandwidth) / bandwidth,
            KernelSpec::TriweightConvolution { bandwidth } => {
                BaseDensity::Triweight.pdf(x / bandwidth) / bandwidth
            }
        }
    }

    /// Half-width outside which the smoother is negligible (or zero).
    pub fn smoother_halfwidth(&self) -> f64 {
        match self {
            KernelSpec::Gaussian { bandwidth } => NORMAL_TRUNCATION_SIGMAS * bandwidth,
            KernelSpec::TriweightConvolution { bandwidth } => *bandwidth,
        }
    }

    /// The RKHS kernel K(x, y) = (kappa * kappa)(x - y).
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let d = x - y;
        match self {
            KernelSpec::Gaussian { bandwidth } => {
                let s = bandwidth * std::f64::consts::SQRT_2;
                Ok(normal_pdf(d / s) / s)
            }
            KernelSpec::TriweightConvolution { bandwidth } => {
                let b = *bandwidth;
                if d.abs() >= 2.0 * b {
                    return Ok(0.0);
                }
                let lo = (d - b).max(-b);
                let hi = (d + b).min(b);
                quad::integrate_auto(
                    |t| self.smoother(t) * self.smoother(d - t),
                    lo.min(hi),
                    hi.max(lo),
                )
            }
        }
    }
}

/// The convex generator of an f-divergence
/// delta_psi(f, g) = int f psi(g/f) + g psi(f/g), with psi(1) = 0.
#[derive(Clone)]
pub struct Psi {
    kind: PsiKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    /// psi(t) = (sqrt(t) - 1)^2 / 2; delta_psi is the squared Hellinger distance.
    Hellinger,
    /// psi(t) = -ln t; delta_psi is the symmetrized Kullback-Leibler divergence.
    NegLog,
    /// psi(t) = (t - 1)^2; delta_psi = int (f - g)^2 (1/f + 1/g).
    ChiSq,
    /// psi(t) = |t - 1| / 2; delta_psi = int |f - g|.
    TotalVariation,
}

impl Psi {
    pub fn new(kind: PsiKind) -> Self {
        Psi { kind }
    }

    pub fn kind(&self) -> PsiKind {
        self.kind
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            PsiKind::Hellinger => {
                let s = t.sqrt() - 1.0;
                0.5 * s * s
            }
            PsiKind::NegLog => -t.ln(),
            PsiKind::ChiSq => (t - 1.0) * (t - 1.0),
            PsiKind::TotalVariation => 0.5 * (t - 1.0).abs(),
        }
    }

    /// psi(0+), the weight a point carries where the *other* density vanishes.
    pub fn at_zero(&self) -> f64 {
        match self.kind {
            PsiKind::Hellinger => 0.5,
            PsiKind::NegLog => f64::INFINITY,
            PsiKind::ChiSq => 1.0,
            PsiKind::TotalVariation => 0.5,
        }
    }

    /// lim_{t->inf} psi(t)/t, the companion weight from the f psi(g/f) term.
    pub fn slope_at_infinity(&self) -> f64 {
        match self.kind {
            PsiKind::Hellinger => 0.5,
            PsiKind::NegLog => 0.0,
            PsiKind::ChiSq => f64::INFINITY,
            PsiKind::TotalVariation => 0.5,
        }
    }

    /// psi''(1), the curvature driving the small-separation expansion
    /// delta_psi ~ psi''(1) (t - t0)' I(t0) (t - t0). None when psi is not
    /// twice differentiable at 1.
    pub fn second_derivative_at_one(&self) -> Option<f64> {
        match self.kind {
            PsiKind::Hellinger => Some(0.25),
            PsiKind::NegLog => Some(1.0),
            PsiKind::ChiSq => Some(2.0),
            PsiKind::TotalVariation => None,
        }
    }

    /// Midpoint-convexity check of psi on a log-spaced grid, plus psi(1) = 0.
    /// The built-ins pass by construction; this guards future custom psis.
    pub fn check_convex(&self) -> Result<()> {
        if self.eval(1.0).abs() > 1e-12 {
            return Err(Error::invalid("psi(1) must be 0"));
        }
        let grid: Vec<f64> = (-40..=40).map(|i| (i as f64 * 0.1).exp()).collect();
        for w in grid.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            // b is not the exact midpoint of (a, c); use the chord test.
            let lam = (c - b) / (c - a);
            let chord = lam * self.eval(a) + (1.0 - lam) * self.eval(c);
            if self.eval(b) > chord + 1e-9 * (1.0 + chord.abs()) {
                return Err(Error::invalid(format!(
                    "psi fails convexity near t = {b}"
                )));
            }
        }
        Ok(())
    }

    /// The integrand f psi(g/f) + g psi(f/g) at one point, in the
    /// numerically stable algebraic form of each built-in.
    fn pointwise(&self, f: f64, g: f64) -> f64 {
        if f == 0.0 && g == 0.0 {
            return 0.0;
        }
        if f == 0.0 || g == 0.0 {
            let present = f.max(g);
            return present * (self.at_zero() + self.slope_at_infinity());
        }
        match self.kind {
            PsiKind::Hellinger => {
                let s = f.sqrt() - g.sqrt();
                s * s
            }
            PsiKind::NegLog => (f - g) * (f.ln() - g.ln()),
            PsiKind::ChiSq => {
                let d = f - g;
                d * d * (1.0 / f + 1.0 / g)
            }
            PsiKind::TotalVariation => (f - g).abs(),
        }
    }
}

/// Which evaluation route to take.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalRoute {
    /// Closed form when the family pair has one, quadrature otherwise.
    #[default]
    Auto,
    /// Closed form or an `Unsupported` error.
    ClosedForm,
    /// Always integrate.
    Quadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum DissimilarityKind {
    L2,
    Rkhs { kernel: KernelSpec },
    Hellinger,
    SymKl,
    ChiSq,
    TotalVariation,
    Wasserstein2,
}

impl DissimilarityKind {
    /// Divergence-valued kinds store delta ~ squared-distance scale; their
    /// triangle scan applies to sqrt(delta).
    pub fn is_divergence(&self) -> bool {
        matches!(self, DissimilarityKind::SymKl | DissimilarityKind::ChiSq)
    }

    pub fn name(&self) -> &'static str {
        match self {
            DissimilarityKind::L2 => "l2",
            DissimilarityKind::Rkhs { .. } => "rkhs",
            DissimilarityKind::Hellinger => "hellinger",
            DissimilarityKind::SymKl => "sym_kl",
            DissimilarityKind::ChiSq => "chi_sq",
            DissimilarityKind::TotalVariation => "total_variation",
            DissimilarityKind::Wasserstein2 => "wasserstein2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissimilaritySpec {
    #[serde(flatten)]
    pub kind: DissimilarityKind,
    #[serde(default)]
    pub route: EvalRoute,
}

impl DissimilaritySpec {
    pub fn new(kind: DissimilarityKind) -> Self {
        DissimilaritySpec {
            kind,
            route: EvalRoute::Auto,
        }
    }

    pub fn with_route(kind: DissimilarityKind, route: EvalRoute) -> Self {
        DissimilaritySpec { kind, route }
    }
}

// ---------------------------------------------------------------------------
// Support bookkeeping

#[derive(Clone, Copy, Debug, PartialEq)]
enum SupportSet {
    Reals { dim: usize },
    Interval { lo: f64, hi: f64 },
    PositiveHalfLine,
    Naturals,
}

fn support_set(d: &Density) -> SupportSet {
    match d.family() {
        FamilySpec::NormalLocation { dim } => SupportSet::Reals { dim: *dim },
        FamilySpec::UniformLocation1d => SupportSet::Interval {
            lo: d.theta()[0],
            hi: d.theta()[0] + 1.0,
        },
        FamilySpec::GammaScale { .. } => SupportSet::PositiveHalfLine,
        FamilySpec::ExponentialFamily { family } => match family {
            ExpFamily::NormalNatural { dim } => SupportSet::Reals { dim: *dim },
            ExpFamily::PoissonNatural => SupportSet::Naturals,
        },
        FamilySpec::LocationScale1d { base } => {
            let (l, s) = (d.theta()[0], d.theta()[1]);
            match base {
                BaseDensity::StdNormal => SupportSet::Reals { dim: 1 },
                BaseDensity::Uniform01 => SupportSet::Interval { lo: l, hi: l + s },
                BaseDensity::Triweight => SupportSet::Interval {
                    lo: l - s,
                    hi: l + s,
                },
            }
        }
        FamilySpec::TimeWarp1d { .. } => SupportSet::Interval { lo: 0.0, hi: 1.0 },
    }
}

fn same_support(a: &Density, b: &Density) -> bool {
    support_set(a) == support_set(b)
}

fn is_discrete_pair(a: &Density, b: &Density) -> Result<bool> {
    match (a.family().is_discrete(), b.family().is_discrete()) {
        (true, true) => Ok(true),
        (false, false) => Ok(false),
        _ => Err(Error::unsupported(
            "cannot mix a discrete and a continuous density in one dissimilarity",
        )),
    }
}

fn check_same_data_dim(a: &Density, b: &Density) -> Result<()> {
    if a.data_dim() != b.data_dim() {
        return Err(Error::invalid(format!(
            "densities live on spaces of dimension {} and {}",
            a.data_dim(),
            b.data_dim()
        )));
    }
    Ok(())
}

fn require_dim1(a: &Density, b: &Density, what: &str) -> Result<()> {
    if a.data_dim() != 1 || b.data_dim() != 1 {
        return Err(Error::unsupported(format!(
            "{what}: quadrature route requires one-dimensional densities"
        )));
    }
    Ok(())
}

/// Union of the two quadrature ranges.
fn union_range(a: &Density, b: &Density) -> Result<(f64, f64)> {
    let (la, ha) = a.quad_range()?;
    let (lb, hb) = b.quad_range()?;
    Ok((la.min(lb), ha.max(hb)))
}

/// Integrate over the union support of the pair, splitting panels at every
/// density breakpoint inside it. Gauss-Kronrod error estimates cannot see a
/// jump discontinuity that lands inside a panel, so the piecewise route is
/// the only reliable one for uniform-support families.
fn integrate_union(a: &Density, b: &Density, f: impl Fn(f64) -> f64) -> Result<f64> {
    let (lo, hi) = union_range(a, b)?;
    let mut cuts: Vec<f64> = a
        .breakpoints()
        .into_iter()
        .chain(b.breakpoints())
        .filter(|&c| lo < c && c < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut left = lo;
    for right in cuts.into_iter().chain(std::iter::once(hi)) {
        if right > left {
            total += quad::integrate_auto(&f, left, right)?;
            left = right;
        }
    }
    Ok(total)
}

fn unsupported_closed(what: &str, a: &Density, b: &Density) -> Error {
    Error::unsupported(format!(
        "{what}: no closed form for the pair ({}, {})",
        a.family().name(),
        b.family().name()
    ))
}

// ---------------------------------------------------------------------------
// L2

/// 2 (4 pi)^(-d/2): the constant in front of the normal-location closed form.
pub fn l2_normal_constant(dim: usize) -> f64 {
    2.0 * (4.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0)
}

/// Unit-height uniforms: |f - g|^2 = 2 min(|dt|, 1).
pub const L2_UNIFORM_CONSTANT: f64 = 2.0;

/// C_k = Gamma(2k+1) / (2^(2k+1) Gamma(k+1)^2) for the gamma-scale closed form.
pub fn l2_gamma_scale_constant(shape: f64) -> f64 {
    (ln_gamma(2.0 * shape + 1.0)
        - (2.0 * shape + 1.0) * std::f64::consts::LN_2
        - 2.0 * ln_gamma(shape + 1.0))
    .exp()
}

pub fn l2_gamma_check_shape(shape: f64) -> Result<()> {
    if shape <= -0.5 {
        return Err(Error::domain(format!(
            "gamma_scale L2 requires shape > -1/2 for square-integrability, got {shape}"
        )));
    }
    Ok(())
}

fn l2_sq_closed(a: &Density, b: &Density) -> Result<Option<f64>> {
    match (a.family(), b.family()) {
        (FamilySpec::NormalLocation { dim: d1 }, FamilySpec::NormalLocation { dim: d2 })
            if d1 == d2 =>
        {
            let q: f64 = a
                .theta()
                .iter()
                .zip(b.theta())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            Ok(Some(l2_normal_constant(*d1) * (1.0 - (-q / 4.0).exp())))
        }
        (FamilySpec::UniformLocation1d, FamilySpec::UniformLocation1d) => {
            let dt = (a.theta()[0] - b.theta()[0]).abs();
            Ok(Some(L2_UNIFORM_CONSTANT * dt.min(1.0)))
        }
        (FamilySpec::GammaScale { shape: k1 }, FamilySpec::GammaScale { shape: k2 })
            if k1 == k2 =>
        {
            let k = *k1;
            l2_gamma_check_shape(k)?;
            let (t, t0) = (a.theta()[0], b.theta()[0]);
            let cross = 4.0f64.powf(k + 1.0) * t.powf(k) * t0.powf(k) * (t + t0).powf(-(2.0 * k + 1.0));
            Ok(Some(l2_gamma_scale_constant(k) * (1.0 / t + 1.0 / t0 - cross)))
        }
        _ => Ok(None),
    }
}

fn l2_sq_quadrature(a: &Density, b: &Density) -> Result<f64> {
    if let (FamilySpec::GammaScale { shape }, _) | (_, FamilySpec::GammaScale { shape }) =
        (a.family(), b.family())
    {
        l2_gamma_check_shape(*shape)?;
    }
    if is_discrete_pair(a, b)? {
        return quad::sum_series(
            |k| {
                let x = [k as f64];
                let d = a.pdf(&x).unwrap() - b.pdf(&x).unwrap();
                d * d
            },
            0,
            1e-18,
            8,
            100_000,
        );
    }
    require_dim1(a, b, "l2")?;
    integrate_union(a, b, |x| {
        let d = a.pdf(&[x]).unwrap() - b.pdf(&[x]).unwrap();
        d * d
    })
}

/// Squared L2 distance between the density functions.
pub fn l2_squared(a: &Density, b: &Density, route: EvalRoute) -> Result<f64> {
    check_same_data_dim(a, b)?;
    match route {
        EvalRoute::ClosedForm => l2_sq_closed(a, b)?.ok_or_else(|| unsupported_closed("l2", a, b)),
        EvalRoute::Quadrature => l2_sq_quadrature(a, b),
        EvalRoute::Auto => match l2_sq_closed(a, b)? {
            Some(v) => Ok(v),
            None => l2_sq_quadrature(a, b),
        },
    }
}

/// L2 distance |f - g|.
pub fn l2_distance(a: &Density, b: &Density, route: EvalRoute) -> Result<f64> {
    Ok(l2_squared(a, b, route)?.max(0.0).sqrt())
}

/// L2 inner product <f, g>; closed form for same-dimension normal pairs.
pub fn l2_inner_product(a: &Density, b: &Density, route: EvalRoute) -> Result<f64> {
    check_same_data_dim(a, b)?;
    let closed = match (a.family(), b.family()) {
        (FamilySpec::NormalLocation { dim: d1 }, FamilySpec::NormalLocation { dim: d2 })
            if d1 == d2 =>
        {
            let q: f64 = a
                .theta()
                .iter()
                .zip(b.theta())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            Some((4.0 * std::f64::consts::PI).powf(-(*d1 as f64) / 2.0) * (-q / 4.0).exp())
        }
        _ => None,
    };
    match route {
        EvalRoute::ClosedForm => closed.ok_or_else(|| unsupported_closed("inner product", a, b)),
        EvalRoute::Quadrature => l2_inner_quadrature(a, b),
        EvalRoute::Auto => match closed {
            Some(v) => Ok(v),
            None => l2_inner_quadrature(a, b),
        },
    }
}

fn l2_inner_quadrature(a: &Density, b: &Density) -> Result<f64> {
    if is_discrete_pair(a, b)? {
        return quad::sum_series(
            |k| {
                let x = [k as f64];
                a.pdf(&x).unwrap() * b.pdf(&x).unwrap()
            },
            0,
            1e-18,
            8,
            100_000,
        );
    }
    require_dim1(a, b, "inner product")?;
    integrate_union(a, b, |x| a.pdf(&[x]).unwrap() * b.pdf(&[x]).unwrap())
}

// ---------------------------------------------------------------------------
// f-divergences

/// delta_psi(f, g) = int f psi(g/f) + g psi(f/g) over the union support.
/// Returns `f64::INFINITY` when psi carries infinite weight where exactly
/// one of the densities vanishes (e.g. KL or chi-square on mismatched
/// supports).
pub fn f_divergence(a: &Density, b: &Density, psi: &Psi) -> Result<f64> {
    check_same_data_dim(a, b)?;
    psi.check_convex()?;
    if !same_support(a, b)
        && (psi.at_zero().is_infinite() || psi.slope_at_infinity().is_infinite())
    {
        return Ok(f64::INFINITY);
    }
    if is_discrete_pair(a, b)? {
        return quad::sum_series(
            |k| {
                let x = [k as f64];
                psi.pointwise(a.pdf(&x).unwrap(), b.pdf(&x).unwrap())
            },
            0,
            1e-18,
            8,
            100_000,
        );
    }
    require_dim1(a, b, "f-divergence")?;
    integrate_union(a, b, |x| {
        psi.pointwise(a.pdf(&[x]).unwrap(), b.pdf(&[x]).unwrap())
    })
}

/// Squared Hellinger distance in an exponential family:
/// 2 - 2 exp[Lambda(mid) - (Lambda(t) + Lambda(t0)) / 2].
pub fn hellinger_sq_expfam(family: &ExpFamily, theta: &[f64], theta0: &[f64]) -> Result<f64> {
    let (l1, _, _) = family.log_partition(theta)?;
    let (l0, _, _) = family.log_partition(theta0)?;
    let mid: Vec<f64> = theta
        .iter()
        .zip(theta0)
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    let (lm, _, _) = family.log_partition(&mid)?;
    Ok(2.0 - 2.0 * (lm - 0.5 * (l1 + l0)).exp())
}

/// Squared Hellinger distance between normal locations: 2 - 2 exp(-|dt|^2/8).
pub fn hellinger_sq_normal(theta: &[f64], theta0: &[f64]) -> f64 {
    let q: f64 = theta
        .iter()
        .zip(theta0)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    2.0 - 2.0 * (-q / 8.0).exp()
}

fn hellinger_sq_closed(a: &Density, b: &Density) -> Result<Option<f64>> {
    match (a.family(), b.family()) {
        (FamilySpec::NormalLocation { dim: d1 }, FamilySpec::NormalLocation { dim: d2 })
            if d1 == d2 =>
        {
            Ok(Some(hellinger_sq_normal(a.theta(), b.theta())))
        }
        (
            FamilySpec::ExponentialFamily { family: f1 },
            FamilySpec::ExponentialFamily { family: f2 },
        ) if f1 == f2 => Ok(Some(hellinger_sq_expfam(f1, a.theta(), b.theta())?)),
        _ => Ok(None),
    }
}

/// Squared Hellinger distance, routed.
pub fn hellinger_squared(a: &Density, b: &Density, route: EvalRoute) -> Result<f64> {
    check_same_data_dim(a, b)?;
    match route {
        EvalRoute::ClosedForm => {
            hellinger_sq_closed(a, b)?.ok_or_else(|| unsupported_closed("hellinger", a, b))
        }
        EvalRoute::Quadrature => f_divergence(a, b, &Psi::new(PsiKind::Hellinger)),
        EvalRoute::Auto => match hellinger_sq_closed(a, b)? {
            Some(v) => Ok(v),
            None => f_divergence(a, b, &Psi::new(PsiKind::Hellinger)),
        },
    }
}

/// Hellinger *distance* (the metric): sqrt of the squared form.
pub fn hellinger_distance(a: &Density, b: &Density, route: EvalRoute) -> Result<f64> {
    Ok(hellinger_squared(a, b, route)?.max(0.0).sqrt())
}

/// Symmetrized KL in an exponential family:
/// (theta - theta0) . (grad Lambda(theta) - grad Lambda(theta0)).
pub fn symkl_expfam(family: &ExpFamily, theta: &[f64], theta0: &[f64]) -> Result<f64> {
    let (_, g1, _) = family.log_partition(theta)?;
    let (_, g0, _) = family.log_partition(theta0)?;
    Ok(theta
        .iter()
        .zip(theta0)
        .zip(g1.iter().zip(&g0))
        .map(|((t, t0), (a, b))| (t - t0) * (a - b))
        .sum())
}

/// Symmetrized Kullback-Leibler divergence, routed.
pub fn symkl(a: &Density, b: &Density, route: EvalRoute) -> Result<f64> {
    check_same_data_dim(a, b)?;
    let closed = match (a.family(), b.family()) {
        (
            FamilySpec::ExponentialFamily { family: f1 },
            FamilySpec::ExponentialFamily { family: f2 },
        ) if f1 == f2 => Some(symkl_expfam(f1, a.theta(), b.theta())?),
        _ => None,
    };
    match route {
        EvalRoute::ClosedForm => closed.ok_or_else(|| unsupported_closed("sym_kl", a, b)),
        EvalRoute::Quadrature => f_divergence(a, b, &Psi::new(PsiKind::NegLog)),
        EvalRoute::Auto => match closed {
            Some(v) => Ok(v),
            None => f_divergence(a, b, &Psi::new(PsiKind::NegLog)),
        },
    }
}

// ---------------------------------------------------------------------------
// RKHS

fn rkhs_sq_closed(a: &Density, b: &Density, kernel: &KernelSpec) -> Option<f64> {
    let normal_dim = |d: &Density| match d.family() {
        FamilySpec::NormalLocation { dim } => Some(*dim),
        FamilySpec::ExponentialFamily {
            family: ExpFamily::NormalNatural { dim },
        } => Some(*dim),
        _ => None,
    };
    let (d1, d2) = (normal_dim(a)?, normal_dim(b)?);
    if d1 != d2 {
        return None;
    }
    let KernelSpec::Gaussian { bandwidth } = kernel else {
        return None;
    };
    // Smoothing N(theta, I) by a Gaussian of sd b gives N(theta, (1+b^2) I);
    // then apply the normal L2 closed form with variance sigma^2 = 1 + b^2:
    // |f - g|^2 = 2 (4 pi s^2)^(-d/2) (1 - exp(-|dt|^2 / (4 s^2))).
    let s2 = 1.0 + bandwidth * bandwidth;
    let q: f64 = a
        .theta()
        .iter()
        .zip(b.theta())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Some(
        2.0 * (4.0 * std::f64::consts::PI * s2).powf(-(d1 as f64) / 2.0)
            * (1.0 - (-q / (4.0 * s2)).exp()),
    )
}

fn rkhs_sq_quadrature(a: &Density, b: &Density, kernel: &KernelSpec) -> Result<f64> {
    if is_discrete_pair(a, b)? {
        return Err(Error::unsupported(
            "rkhs quadrature route requires continuous densities",
        ));
    }
    require_dim1(a, b, "rkhs")?;
    let (lo, hi) = union_range(a, b)?;
    let w = kernel.smoother_halfwidth();
    // Smoothed difference h(x) = int kappa(x - y) (f - g)(y) dy, then |h|_2^2.
    // The inner integral runs over the intersection of the kernel window and
    // the union support; a slightly looser inner tolerance keeps the nested
    // cost sane while staying far below the outer one.
    let inner_opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_segments: 2000,
    };
    let smoothed_diff = |x: f64| -> f64 {
        let ia = (x - w).max(lo);
        let ib = (x + w).min(hi);
        if ia >= ib {
            return 0.0;
        }
        quad::integrate(
            |y| kernel.smoother(x - y) * (a.pdf(&[y]).unwrap() - b.pdf(&[y]).unwrap()),
            ia,
            ib,
            inner_opts,
        )
        .map(|r| r.value)
        .unwrap_or(f64::NAN)
    };
    let outer = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-8,
        max_segments: 2000,
    };
    quad::integrate(
        |x| {
            let h = smoothed_diff(x);
            h * h
        },
        lo - w,
        hi + w,
        outer,
    )
    .map(|r| r.value)
}

/// RKHS distance |kappa * f - kappa * g| for K = kappa * kappa.
pub fn rkhs_distance(a: &Density, b: &Density, kernel: &KernelSpec, route: EvalRoute) -> Result<f64> {
    check_same_data_dim(a, b)?;
    kernel.validate()?;
    let sq = match route {
        EvalRoute::ClosedForm => {
            rkhs_sq_closed(a, b, kernel).ok_or_else(|| unsupported_closed("rkhs", a, b))?
        }
        EvalRoute::Quadrature => rkhs_sq_quadrature(a, b, kernel)?,
        EvalRoute::Auto => match rkhs_sq_closed(a, b, kernel) {
            Some(v) => v,
            None => rkhs_sq_quadrature(a, b, kernel)?,
        },
    };
    Ok(sq.max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// Wasserstein-2

fn w2_closed(a: &Density, b: &Density) -> Result<Option<f64>> {
    let sq = match (a.family(), b.family()) {
        (FamilySpec::NormalLocation { dim: d1 }, FamilySpec::NormalLocation { dim: d2 })
            if d1 == d2 =>
        {
            Some(
                a.theta()
                    .iter()
                    .zip(b.theta())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum(),
            )
        }
        (
            FamilySpec::ExponentialFamily {
                family: ExpFamily::NormalNatural { dim: d1 },
            },
            FamilySpec::ExponentialFamily {
                family: ExpFamily::NormalNatural { dim: d2 },
            },
        ) if d1 == d2 => Some(
            a.theta()
                .iter()
                .zip(b.theta())
                .map(|(x, y)| (x - y) * (x - y))
                .sum(),
        ),
        (FamilySpec::UniformLocation1d, FamilySpec::UniformLocation1d) => {
            let dt = a.theta()[0] - b.theta()[0];
            Some(dt * dt)
        }
        (FamilySpec::GammaScale { shape: k1 }, FamilySpec::GammaScale { shape: k2 })
            if k1 == k2 =>
        {
            // Scale family: monotone transport is x -> (t0/t) x, so
            // W2^2 = (dt)^2 E[Z^2] with Z ~ unit-scale base,
            // E[Z^2] = (k+1)(k+2).
            let dt = a.theta()[0] - b.theta()[0];
            Some(dt * dt * (k1 + 1.0) * (k1 + 2.0))
        }
        (FamilySpec::LocationScale1d { base: b1 }, FamilySpec::LocationScale1d { base: b2 })
            if b1 == b2 =>
        {
            let (m1, m2) = b1.moments();
            let dl = a.theta()[0] - b.theta()[0];
            let ds = a.theta()[1] - b.theta()[1];
            Some(dl * dl + 2.0 * dl * ds * m1 + ds * ds * m2)
        }
        (FamilySpec::TimeWarp1d { base: b1 }, FamilySpec::TimeWarp1d { base: b2 })
            if b1 == b2 =>
        {
            // Uniform base, power warps: int_0^1 (x^p - x^q)^2 dx.
            let (p, q) = (a.theta()[0], b.theta()[0]);
            Some(1.0 / (2.0 * p + 1.0) + 1.0 / (2.0 * q + 1.0) - 2.0 / (p + q + 1.0))
        }
        _ => None,
    };
    Ok(sq)
}

/// Quantile-domain quadrature of int_0^1 (F^-(u) - G^-(u))^2 du via the
/// substitution u = Phi(t): the integrand is damped by phi(t), so unbounded
/// quantile growth at the endpoints is handled by the tail decay itself.
/// |t| is capped at 8 - the largest value for which Phi(t) is still strictly
/// inside (0, 1) in double precision - leaving a truncated-tail residual
/// below ~1e-11 for every family with sub-exponential quantile growth.
fn w2_sq_quantile_quadrature(a: &Density, b: &Density) -> Result<f64> {
    require_dim1(a, b, "wasserstein2")?;
    let tmax = 8.0;
    quad::integrate(
        |t| {
            let u = normal_cdf(t);
            let d = match (a.quantile1(u), b.quantile1(u)) {
                (Ok(x), Ok(y)) => x - y,
                _ => f64::NAN,
            };
            d * d * normal_pdf(t)
        },
        -tmax,
        tmax,
        QuadOptions {
            abs_tol: 1e-11,
            rel_tol: 1e-9,
            max_segments: 8000,
        },
    )
    .map(|r| r.value)
}

/// Exact breakpoint sum of int (F^- - G^-)^2 du for a pair of discrete
/// distributions on the nonnegative integers.
fn w2_sq_discrete(a: &Density, b: &Density) -> Result<f64> {
    let tail = 1e-14;
    // March both quantile step functions across their merged jump levels.
    let mut total = 0.0;
    let mut u_prev = 0.0;
    let (mut ka, mut kb) = (0u64, 0u64);
    let (mut ca, mut cb) = (a.cdf1(0.0)?, b.cdf1(0.0)?);
    let cap = 1_000_000;
    for _ in 0..cap {
        let next = ca.min(cb).min(1.0 - tail);
        let d = ka as f64 - kb as f64;
        total += d * d * (next - u_prev).max(0.0);
        if ca >= 1.0 - tail && cb >= 1.0 - tail {
            return Ok(total);
        }
        u_prev = next;
        if ca <= cb {
            ka += 1;
            ca = a.cdf1(ka as f64)?;
        } else {
            kb += 1;
            cb = b.cdf1(kb as f64)?;
        }
    }
    Err(Error::numeric(
        "discrete Wasserstein-2 did not exhaust the support",
    ))
}

/// Wasserstein-2 distance. Closed forms cover common location-scale-type
/// families and uniform-base power warps; the quadrature route covers any
/// one-dimensional pair with finite second moments.
pub fn w2_distance(a: &Density, b: &Density, route: EvalRoute) -> Result<f64> {
    check_same_data_dim(a, b)?;
    let sq = match route {
        EvalRoute::ClosedForm => {
            w2_closed(a, b)?.ok_or_else(|| unsupported_closed("wasserstein2", a, b))?
        }
        EvalRoute::Quadrature => {
            if is_discrete_pair(a, b)? {
                w2_sq_discrete(a, b)?
            } else {
                w2_sq_quantile_quadrature(a, b)?
            }
        }
        EvalRoute::Auto => match w2_closed(a, b)? {
            Some(v) => v,
            None if is_discrete_pair(a, b)? => w2_sq_discrete(a, b)?,
            None => w2_sq_quantile_quadrature(a, b)?,
        },
    };
    Ok(sq.max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// Dispatch and pairwise matrices

/// One dissimilarity value under the given spec. Distances for metric kinds,
/// divergence values for sym_kl / chi_sq.
pub fn dissimilarity(a: &Density, b: &Density, spec: &DissimilaritySpec) -> Result<f64> {
    match &spec.kind {
        DissimilarityKind::L2 => l2_distance(a, b, spec.route),
        DissimilarityKind::Rkhs { kernel } => rkhs_distance(a, b, kernel, spec.route),
        DissimilarityKind::Hellinger => hellinger_distance(a, b, spec.route),
        DissimilarityKind::SymKl => symkl(a, b, spec.route),
        DissimilarityKind::ChiSq => match spec.route {
            EvalRoute::ClosedForm => Err(Error::unsupported("chi_sq has no closed form")),
            _ => f_divergence(a, b, &Psi::new(PsiKind::ChiSq)),
        },
        DissimilarityKind::TotalVariation => match spec.route {
            EvalRoute::ClosedForm => {
                Err(Error::unsupported("total_variation has no closed form"))
            }
            _ => f_divergence(a, b, &Psi::new(PsiKind::TotalVariation)),
        },
        DissimilarityKind::Wasserstein2 => w2_distance(a, b, spec.route),
    }
}

/// Result of a triangle-inequality scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MetricCheck {
    /// Scan not run (large matrix; opt in via [`DissimilarityMatrix::scan_triangle`]).
    Unchecked,
    Satisfied,
    Violated {
        count: usize,
        /// Largest excess d(i,k) - d(i,j) - d(j,k) observed.
        worst: f64,
    },
}

/// Symmetric nonnegative dissimilarity matrix with zero diagonal; entries
/// may be `inf` (divergences across mismatched supports).
#[derive(Clone, Debug, PartialEq)]
pub struct DissimilarityMatrix {
    pub labels: Vec<String>,
    pub values: DMatrix<f64>,
    pub metric_check: MetricCheck,
}

impl DissimilarityMatrix {
    pub fn new(labels: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::invalid(format!(
                "matrix is {}x{} but there are {} labels",
                values.nrows(),
                values.ncols(),
                n
            )));
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::invalid(format!(
                    "diagonal entry ({i}, {i}) is {}, expected 0",
                    values[(i, i)]
                )));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if v.is_nan() {
                    return Err(Error::invalid(format!("entry ({i}, {j}) is NaN")));
                }
                if v < 0.0 {
                    return Err(Error::invalid(format!(
                        "entry ({i}, {j}) is negative: {v}"
                    )));
                }
                if v != values[(j, i)] {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DissimilarityMatrix {
            labels,
            values,
            metric_check: MetricCheck::Unchecked,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn has_infinite(&self) -> Option<(usize, usize)> {
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                if !self.values[(i, j)].is_finite() {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Covering radius of the design in itself: the largest distance from
    /// any member to its nearest other member. Measures how densely the
    /// collection covers its own spread.
    pub fn covering_radius(&self) -> Result<f64> {
        if self.n() < 2 {
            return Err(Error::invalid(
                "covering radius needs at least two members",
            ));
        }
        let mut worst = 0.0f64;
        for i in 0..self.n() {
            let mut nearest = f64::INFINITY;
            for j in 0..self.n() {
                if j != i {
                    nearest = nearest.min(self.values[(i, j)]);
                }
            }
            worst = worst.max(nearest);
        }
        Ok(worst)
    }

    /// O(n^3) triangle-inequality scan. For divergence-valued matrices pass
    /// `sqrt_first = true` to scan sqrt(delta) instead. Triples containing a
    /// non-finite entry are skipped. Tolerance is 1e-10 times the largest
    /// finite entry.
    pub fn scan_triangle(&mut self, sqrt_first: bool) -> MetricCheck {
        let n = self.n();
        let d = |i: usize, j: usize| {
            let v = self.values[(i, j)];
            if sqrt_first {
                v.sqrt()
            } else {
                v
            }
        };
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = d(i, j);
                if v.is_finite() {
                    scale = scale.max(v);
                }
            }
        }
        let tol = 1e-10 * scale.max(1.0);
        let mut count = 0usize;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let (dik, dij, djk) = (d(i, k), d(i, j), d(j, k));
                    if !dik.is_finite() || !dij.is_finite() || !djk.is_finite() {
                        continue;
                    }
                    let excess = dik - dij - djk;
                    if excess > tol {
                        count += 1;
                        worst = worst.max(excess);
                    }
                }
            }
        }
        let check = if count == 0 {
            MetricCheck::Satisfied
        } else {
            MetricCheck::Violated { count, worst }
        };
        self.metric_check = check;
        check
    }
}

/// Triangle scans above this size are opt-in (the scan is O(n^3)).
pub const TRIANGLE_SCAN_AUTO_LIMIT: usize = 200;

/// Pairwise dissimilarity matrix over a density collection. Pairs evaluate
/// concurrently; assembly order is fixed, so results are identical for any
/// thread count. Labels default to the item index as a string.
pub fn pairwise_matrix(
    densities: &[Density],
    spec: &DissimilaritySpec,
) -> Result<DissimilarityMatrix> {
    let labels: Vec<String> = (0..densities.len()).map(|i| i.to_string()).collect();
    pairwise_matrix_labeled(densities, spec, labels)
}

pub fn pairwise_matrix_labeled(
    densities: &[Density],
    spec: &DissimilaritySpec,
    labels: Vec<String>,
) -> Result<DissimilarityMatrix> {
    let n = densities.len();
    if n == 0 {
        return Err(Error::invalid("pairwise matrix over an empty collection"));
    }
    if labels.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {} densities",
            labels.len(),
            n
        )));
    }
    let dim = densities[0].data_dim();
    for (i, d) in densities.iter().enumerate() {
        if d.data_dim() != dim {
            return Err(Error::invalid(format!(
                "density {i} has data dimension {}, expected {dim}",
                d.data_dim()
            )));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| dissimilarity(&densities[i], &densities[j], spec))
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(&vals) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    let mut out = DissimilarityMatrix::new(labels, m)?;
    if n <= TRIANGLE_SCAN_AUTO_LIMIT {
        out.scan_triangle(spec.kind.is_divergence());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{density, FamilySpec};

    fn normal1(theta: f64) -> Density {
        density(FamilySpec::NormalLocation { dim: 1 }, &[theta]).unwrap()
    }
    fn uniform(theta: f64) -> Density {
        density(FamilySpec::UniformLocation1d, &[theta]).unwrap()
    }
    fn gamma(shape: f64, theta: f64) -> Density {
        density(FamilySpec::GammaScale { shape }, &[theta]).unwrap()
    }
    fn poisson(theta: f64) -> Density {
        density(
            FamilySpec::ExponentialFamily {
                family: ExpFamily::PoissonNatural,
            },
            &[theta],
        )
        .unwrap()
    }

    #[test]
    fn l2_normal_example() {
        // theta = 0 vs 2 in one dimension:
        // |f-g|^2 = (1/sqrt(pi)) (1 - e^-1) = 0.356622...
        let sq = l2_squared(&normal1(0.0), &normal1(2.0), EvalRoute::ClosedForm).unwrap();
        let expected = std::f64::consts::PI.sqrt().recip() * (1.0 - (-1.0f64).exp());
        assert!((sq - expected).abs() < 1e-15);
        assert!((sq - 0.3566358).abs() < 5e-7, "sq = {sq}");
        let q = l2_squared(&normal1(0.0), &normal1(2.0), EvalRoute::Quadrature).unwrap();
        assert!((q - expected).abs() < 1e-10, "quadrature = {q}");
    }

    #[test]
    fn l2_uniform_example() {
        let sq = l2_squared(&uniform(0.0), &uniform(0.3), EvalRoute::ClosedForm).unwrap();
        assert!((sq - 0.6).abs() < 1e-15);
        let q = l2_squared(&uniform(0.0), &uniform(0.3), EvalRoute::Quadrature).unwrap();
        assert!((q - 0.6).abs() < 1e-9, "quadrature = {q}");
        // Saturation beyond disjoint supports.
        let sq = l2_squared(&uniform(0.0), &uniform(2.5), EvalRoute::ClosedForm).unwrap();
        assert!((sq - 2.0).abs() < 1e-15);
    }

    #[test]
    fn l2_gamma_matches_quadrature() {
        for (k, t, t0) in [(0.0, 1.0, 2.0), (1.5, 0.5, 0.8), (2.0, 1.0, 3.0), (-0.25, 1.0, 1.7)] {
            let c = l2_squared(&gamma(k, t), &gamma(k, t0), EvalRoute::ClosedForm).unwrap();
            let q = l2_squared(&gamma(k, t), &gamma(k, t0), EvalRoute::Quadrature).unwrap();
            assert!(
                (c - q).abs() <= 1e-8 * q.abs().max(1e-12),
                "k={k}: closed {c} vs quadrature {q}"
            );
        }
    }

    #[test]
    fn l2_gamma_shape_precondition() {
        // Square-integrability fails at shape <= -1/2 on both routes.
        assert!(l2_squared(&gamma(-0.5, 1.0), &gamma(-0.5, 2.0), EvalRoute::ClosedForm).is_err());
        assert!(l2_squared(&gamma(-0.6, 1.0), &gamma(-0.6, 2.0), EvalRoute::Quadrature).is_err());
    }

    #[test]
    fn hellinger_normal_example() {
        // theta = 0 vs 2: 2 - 2 e^(-1/2) = 0.786939...
        let sq = hellinger_squared(&normal1(0.0), &normal1(2.0), EvalRoute::ClosedForm).unwrap();
        assert!((sq - (2.0 - 2.0 * (-0.5f64).exp())).abs() < 1e-15);
        assert!((sq - 0.786939).abs() < 5e-7);
        let q = hellinger_squared(&normal1(0.0), &normal1(2.0), EvalRoute::Quadrature).unwrap();
        assert!((sq - q).abs() < 1e-9, "quadrature = {q}");
    }

    #[test]
    fn hellinger_poisson_example() {
        // Natural Poisson, theta = 0 vs 1: 2 - 2 exp(e^(1/2) - (1 + e)/2).
        let sq = hellinger_squared(&poisson(0.0), &poisson(1.0), EvalRoute::ClosedForm).unwrap();
        let expected = 2.0 - 2.0 * (0.5f64.exp() - 0.5 * (1.0 + 1.0f64.exp())).exp();
        assert!((sq - expected).abs() < 1e-14);
        let q = hellinger_squared(&poisson(0.0), &poisson(1.0), EvalRoute::Quadrature).unwrap();
        assert!((sq - q).abs() < 1e-11, "series = {q} vs {sq}");
    }

    #[test]
    fn symkl_examples() {
        // Natural normal: delta = |dt|^2; theta = 0 vs 2 gives 4.
        let a = density(
            FamilySpec::ExponentialFamily {
                family: ExpFamily::NormalNatural { dim: 1 },
            },
            &[0.0],
        )
        .unwrap();
        let b = density(
            FamilySpec::ExponentialFamily {
                family: ExpFamily::NormalNatural { dim: 1 },
            },
            &[2.0],
        )
        .unwrap();
        let v = symkl(&a, &b, EvalRoute::ClosedForm).unwrap();
        assert!((v - 4.0).abs() < 1e-15);
        let q = symkl(&a, &b, EvalRoute::Quadrature).unwrap();
        assert!((q - 4.0).abs() < 1e-9, "quadrature = {q}");

        // Poisson: (t - t0)(e^t - e^t0).
        let v = symkl(&poisson(0.0), &poisson(1.0), EvalRoute::ClosedForm).unwrap();
        let expected = 1.0f64.exp() - 1.0;
        assert!((v - expected).abs() < 1e-14);
        let q = symkl(&poisson(0.0), &poisson(1.0), EvalRoute::Quadrature).unwrap();
        assert!((q - expected).abs() < 1e-11, "series = {q}");
    }

    #[test]
    fn symkl_support_mismatch_is_infinite() {
        let v = symkl(&uniform(0.0), &uniform(0.5), EvalRoute::Auto).unwrap();
        assert!(v.is_infinite());
        let v = f_divergence(&uniform(0.0), &uniform(0.5), &Psi::new(PsiKind::ChiSq)).unwrap();
        assert!(v.is_infinite());
        // Hellinger stays finite on mismatched supports.
        let v = hellinger_squared(&uniform(0.0), &uniform(0.5), EvalRoute::Quadrature).unwrap();
        assert!(v.is_finite());
        assert!((v - 1.0).abs() < 1e-8, "hellinger^2 = {v}");
    }

    #[test]
    fn total_variation_uniforms() {
        // int |f - g| = 2 * 0.3 for unit uniforms offset by 0.3.
        let v = f_divergence(&uniform(0.0), &uniform(0.3), &Psi::new(PsiKind::TotalVariation))
            .unwrap();
        assert!((v - 0.6).abs() < 1e-9, "tv = {v}");
    }

    #[test]
    fn rkhs_equals_smoothed_l2() {
        let (a, b) = (normal1(0.0), normal1(1.0));
        let kernel = KernelSpec::Gaussian { bandwidth: 0.7 };
        let closed = rkhs_distance(&a, &b, &kernel, EvalRoute::ClosedForm).unwrap();
        let quad = rkhs_distance(&a, &b, &kernel, EvalRoute::Quadrature).unwrap();
        assert!(
            (closed - quad).abs() < 1e-7 * closed,
            "closed {closed} vs quadrature {quad}"
        );
        // Strictly smaller than the unsmoothed L2 distance.
        let plain = l2_distance(&a, &b, EvalRoute::Auto).unwrap();
        assert!(closed < plain);
    }

    #[test]
    fn rkhs_triweight_kernel_runs() {
        let (a, b) = (uniform(0.0), uniform(0.4));
        let kernel = KernelSpec::TriweightConvolution { bandwidth: 0.3 };
        let v = rkhs_distance(&a, &b, &kernel, EvalRoute::Auto).unwrap();
        assert!(v > 0.0 && v.is_finite());
        // Kernel evaluation integrates the smoother product.
        let k0 = kernel.eval(0.0, 0.0).unwrap();
        assert!(k0 > 0.0);
        assert_eq!(kernel.eval(0.0, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn w2_closed_forms_match_quadrature() {
        // Normal location pair.
        let (a, b) = (normal1(0.25), normal1(1.5));
        let c = w2_distance(&a, &b, EvalRoute::ClosedForm).unwrap();
        assert!((c - 1.25).abs() < 1e-12);
        let q = w2_distance(&a, &b, EvalRoute::Quadrature).unwrap();
        assert!((c - q).abs() < 1e-8, "quadrature = {q}");

        // Gamma scale pair: |dt| sqrt((k+1)(k+2)).
        let (a, b) = (gamma(2.0, 1.0), gamma(2.0, 1.5));
        let c = w2_distance(&a, &b, EvalRoute::ClosedForm).unwrap();
        assert!((c - 0.5 * 12.0f64.sqrt()).abs() < 1e-12);
        let q = w2_distance(&a, &b, EvalRoute::Quadrature).unwrap();
        assert!((c - q).abs() < 1e-7 * c, "closed {c} vs quadrature {q}");

        // Location-scale with a non-centered base (uniform01): the cross
        // term 2 dl ds m1 matters.
        let f = |l: f64, s: f64| {
            density(
                FamilySpec::LocationScale1d {
                    base: BaseDensity::Uniform01,
                },
                &[l, s],
            )
            .unwrap()
        };
        let (a, b) = (f(0.0, 1.0), f(0.5, 2.0));
        let c = w2_distance(&a, &b, EvalRoute::ClosedForm).unwrap();
        let q = w2_distance(&a, &b, EvalRoute::Quadrature).unwrap();
        assert!((c - q).abs() < 1e-8, "closed {c} vs quadrature {q}");
    }

    #[test]
    fn w2_timewarp_example() {
        // Identity vs square warp over the uniform base: 1/30.
        let tw = |a: f64| {
            density(
                FamilySpec::TimeWarp1d {
                    base: BaseDensity::Uniform01,
                },
                &[a],
            )
            .unwrap()
        };
        let c = w2_distance(&tw(1.0), &tw(2.0), EvalRoute::ClosedForm).unwrap();
        assert!((c * c - 1.0 / 30.0).abs() < 1e-14, "W2^2 = {}", c * c);
        let q = w2_distance(&tw(1.0), &tw(2.0), EvalRoute::Quadrature).unwrap();
        assert!((c - q).abs() < 1e-9);
    }

    #[test]
    fn w2_discrete_poisson() {
        let v = w2_distance(&poisson(0.0), &poisson(0.0), EvalRoute::Quadrature).unwrap();
        assert_eq!(v, 0.0);
        let v = w2_distance(&poisson(0.0), &poisson(1.0), EvalRoute::Quadrature).unwrap();
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn pairwise_matrix_normal_grid() {
        let ds: Vec<Density> = [0.0, 1.0, 2.0].iter().map(|&t| normal1(t)).collect();
        let spec = DissimilaritySpec::new(DissimilarityKind::Hellinger);
        let m = pairwise_matrix(&ds, &spec).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.metric_check, MetricCheck::Satisfied);
        let d13_sq = m.get(0, 2) * m.get(0, 2);
        assert!((d13_sq - (2.0 - 2.0 * (-0.5f64).exp())).abs() < 1e-12);
        // Symmetric with zero diagonal by construction.
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn pairwise_symkl_poisson_scan_uses_sqrt() {
        // sqrt(symKL) is not a metric: this Poisson triple has
        // sqrt(d(0,2)) > sqrt(d(0,1)) + sqrt(d(1,2)) by ~0.046, and the
        // automatic scan must say so rather than silently pass.
        let ds: Vec<Density> = [-0.5, 0.4, 1.2].iter().map(|&t| poisson(t)).collect();
        let spec = DissimilaritySpec::new(DissimilarityKind::SymKl);
        let m = pairwise_matrix(&ds, &spec).unwrap();
        match m.metric_check {
            MetricCheck::Violated { count, worst } => {
                assert_eq!(count, 2); // the ordered triple and its reverse
                assert!((worst - 0.0458).abs() < 1e-3, "worst = {worst}");
            }
            other => panic!("expected a reported violation, got {other:?}"),
        }
        // Natural normal family: symKL = |dt|^2 exactly, so sqrt(symKL) is a
        // genuine metric and the scan passes.
        let nn = |t: f64| {
            density(
                FamilySpec::ExponentialFamily {
                    family: ExpFamily::NormalNatural { dim: 1 },
                },
                &[t],
            )
            .unwrap()
        };
        let ds: Vec<Density> = [0.0, 0.7, 1.9].iter().map(|&t| nn(t)).collect();
        let m = pairwise_matrix(&ds, &spec).unwrap();
        assert!(matches!(m.metric_check, MetricCheck::Satisfied));
    }

    #[test]
    fn matrix_validation_rejects_bad_input() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(DissimilarityMatrix::new(vec!["a".into(), "b".into()], bad).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(DissimilarityMatrix::new(vec!["a".into(), "b".into()], neg).is_err());
        let diag = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.0]);
        assert!(DissimilarityMatrix::new(vec!["a".into(), "b".into()], diag).is_err());
    }

    #[test]
    fn closed_route_errors_when_absent() {
        let a = gamma(1.0, 1.0);
        let b = normal1(0.0);
        assert!(matches!(
            l2_squared(&a, &b, EvalRoute::ClosedForm),
            Err(Error::Unsupported(_))
        ));
        // Cross-family quadrature still works.
        let v = l2_squared(&a, &b, EvalRoute::Quadrature).unwrap();
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn psi_constants() {
        assert_eq!(Psi::new(PsiKind::Hellinger).second_derivative_at_one(), Some(0.25));
        assert_eq!(Psi::new(PsiKind::NegLog).second_derivative_at_one(), Some(1.0));
        assert_eq!(Psi::new(PsiKind::ChiSq).second_derivative_at_one(), Some(2.0));
        assert_eq!(Psi::new(PsiKind::TotalVariation).second_derivative_at_one(), None);
        for kind in [
            PsiKind::Hellinger,
            PsiKind::NegLog,
            PsiKind::ChiSq,
            PsiKind::TotalVariation,
        ] {
            Psi::new(kind).check_convex().unwrap();
        }
    }
}
