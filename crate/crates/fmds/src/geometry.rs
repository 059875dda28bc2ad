//! Local quadratic structure and intrinsic metrics.
//!
//! Every smooth dissimilarity on a parametric family behaves like a
//! quadratic form for nearby parameters:
//!
//!   delta(theta0 + dv, theta0)^2  ~  d^2 v^T T(theta0) v      (metrics)
//!   delta(theta0 + dv, theta0)    ~  d^2 v^T T(theta0) v      (divergences)
//!
//! This module computes the tensor T three ways - closed form where one is
//! known, score/derivative integrals by quadrature, and finite-difference
//! probes of the dissimilarity itself - so each route can certify the
//! others. It also integrates tensors into intrinsic (path-length) metrics:
//! exactly in one parameter by quadrature, and in two parameters by
//! Dijkstra on a lattice whose move star is rich enough to keep the
//! direction-dependent overshoot near one percent.
//!
//! Reference points for the built-in families (b = smoother bandwidth,
//! s^2 = 1 + b^2, alpha = gamma shape + 1, m1/m2 = base raw moments):
//!
//! | family            | Fisher        | L2 tensor          | W2 tensor        |
//! |-------------------|---------------|--------------------|------------------|
//! | normal location   | I_d           | 2^-(d+1) pi^-d/2 I | 1 (d = 1)        |
//! | uniform location  | undefined     | undefined          | 1                |
//! | gamma scale       | alpha/th^2    | quadrature         | alpha(alpha+1)   |
//! | poisson natural   | e^th          | series             | refused          |
//! | location-scale    | quadrature    | quadrature         | [[1,m1],[m1,m2]] |
//! | time warp u^th    | 1/th^2        | quadrature (th<2)  | 2/(2 th + 1)^3   |
//!
//! The Hellinger tensor is Fisher/4; symmetrized KL gives Fisher itself;
//! the symmetrized chi-square gives 2 Fisher (the psi''(1) factors).

use crate::error::{Error, Result};
use crate::metrics::{
    dissimilarity, l2_gamma_check_shape, DissimilaritySpec, EvalRoute, KernelSpec,
};
use crate::models::{density, Density, ExpFamily, FamilySpec};
use crate::quad::{self, QuadOptions};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Central-difference step factor for first derivatives in theta.
const FD_STEP: f64 = 1e-5;

/// Default probe step for finite-difference Hessians of dissimilarities.
const PROBE_STEP: f64 = 1e-2;

fn fd_step(theta: &[f64], a: usize) -> f64 {
    FD_STEP * theta[a].abs().max(1.0)
}

/// Densities at theta +/- h e_a, for central differences.
fn perturbed_pair(family: &FamilySpec, theta: &[f64], a: usize, h: f64) -> Result<(Density, Density)> {
    let mut tp = theta.to_vec();
    let mut tm = theta.to_vec();
    tp[a] += h;
    tm[a] -= h;
    Ok((density(family.clone(), &tp)?, density(family.clone(), &tm)?))
}

fn union_range(densities: &[&Density]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for d in densities {
        let (a, b) = d.quad_range()?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok((lo, hi))
}

fn check_interior(family: &FamilySpec, theta: &[f64]) -> Result<()> {
    family.check_theta(theta)?;
    if !family.parameter_space().is_interior(theta) {
        return Err(Error::domain(
            "derivative probes need an interior parameter point",
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Fisher information

/// Fisher information matrix I(theta). Closed form for the built-in
/// families where one exists (see the module table); `EvalRoute::Quadrature`
/// forces the score-integral route int (d_a f)(d_b f)/f. Undefined for the
/// uniform location family, whose support moves with the parameter.
pub fn fisher_information(family: &FamilySpec, theta: &[f64], route: EvalRoute) -> Result<DMatrix<f64>> {
    check_interior(family, theta)?;
    match route {
        EvalRoute::Quadrature => return fisher_numeric(family, theta),
        EvalRoute::Auto | EvalRoute::ClosedForm => {}
    }
    match family {
        FamilySpec::NormalLocation { dim } => Ok(DMatrix::identity(*dim, *dim)),
        FamilySpec::UniformLocation1d => Err(Error::domain(
            "fisher information is undefined for uniform_location_1d: the support moves with the parameter",
        )),
        FamilySpec::GammaScale { shape } => {
            let t = theta[0];
            Ok(DMatrix::from_element(1, 1, (shape + 1.0) / (t * t)))
        }
        FamilySpec::ExponentialFamily { family: ef } => {
            // I(theta) = Hessian of the log-partition.
            Ok(ef.log_partition(theta)?.2)
        }
        FamilySpec::TimeWarp1d { .. } => {
            let a = theta[0];
            Ok(DMatrix::from_element(1, 1, 1.0 / (a * a)))
        }
        FamilySpec::LocationScale1d { .. } => match route {
            EvalRoute::ClosedForm => Err(Error::unsupported(
                "no closed-form fisher information for location_scale_1d; use the quadrature route",
            )),
            _ => fisher_numeric(family, theta),
        },
    }
}

fn fisher_numeric(family: &FamilySpec, theta: &[f64]) -> Result<DMatrix<f64>> {
    if matches!(family, FamilySpec::UniformLocation1d) {
        return Err(Error::domain(
            "fisher information is undefined for uniform_location_1d: the support moves with the parameter",
        ));
    }
    if family.data_dim() != 1 {
        return Err(Error::unsupported(
            "numeric fisher information requires one-dimensional data",
        ));
    }
    let p = family.param_dim();
    let center = density(family.clone(), theta)?;
    let mut pairs = Vec::with_capacity(p);
    let mut steps = Vec::with_capacity(p);
    for a in 0..p {
        let h = fd_step(theta, a);
        pairs.push(perturbed_pair(family, theta, a, h)?);
        steps.push(h);
    }
    let mut out = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let term = |x: f64| -> f64 {
                let f = center.pdf(&[x]).unwrap_or(f64::NAN);
                if !(f > 1e-300) || !f.is_finite() {
                    return 0.0;
                }
                let da = (pairs[a].0.pdf(&[x]).unwrap_or(f64::NAN)
                    - pairs[a].1.pdf(&[x]).unwrap_or(f64::NAN))
                    / (2.0 * steps[a]);
                let db = (pairs[b].0.pdf(&[x]).unwrap_or(f64::NAN)
                    - pairs[b].1.pdf(&[x]).unwrap_or(f64::NAN))
                    / (2.0 * steps[b]);
                da * db / f
            };
            let v = if family.is_discrete() {
                quad::sum_series(|k| term(k as f64), 0, 1e-16, 10, 100_000)?
            } else {
                let mut refs: Vec<&Density> = vec![&center];
                for (dp, dm) in &pairs {
                    refs.push(dp);
                    refs.push(dm);
                }
                let (lo, hi) = union_range(&refs)?;
                quad::integrate(
                    term,
                    lo,
                    hi,
                    QuadOptions {
                        abs_tol: 1e-10,
                        rel_tol: 1e-8,
                        max_segments: 4000,
                    },
                )?
                .value
            };
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// L2 information

/// The L2 metric tensor G_ab = int (d_a f)(d_b f) dx, so that
/// ||f_theta - f_theta0||^2 ~ (theta - theta0)^T G (theta - theta0).
/// Undefined for uniform location (the derivative of a moving indicator is
/// not square-integrable) and for time warps with exponent >= 2 (the
/// derivative's singularity at 0 leaves L2).
pub fn l2_information(family: &FamilySpec, theta: &[f64], route: EvalRoute) -> Result<DMatrix<f64>> {
    check_interior(family, theta)?;
    match family {
        FamilySpec::UniformLocation1d => {
            return Err(Error::domain(
            "l2 information is undefined for uniform_location_1d: the density derivative is not square-integrable",
            ))
        }
        FamilySpec::GammaScale { shape } => l2_gamma_check_shape(*shape)?,
        FamilySpec::TimeWarp1d { .. } if theta[0] >= 2.0 => {
            return Err(Error::domain(format!(
                "l2 information is undefined for time warps with exponent >= 2 (got {})",
                theta[0]
            )));
        }
        _ => {}
    }
    let closed = |dim: usize| -> DMatrix<f64> {
        let c = 2.0f64.powi(-(dim as i32) - 1) * std::f64::consts::PI.powf(-(dim as f64) / 2.0);
        DMatrix::identity(dim, dim) * c
    };
    match (family, route) {
        (FamilySpec::NormalLocation { dim }, EvalRoute::Auto | EvalRoute::ClosedForm) => {
            Ok(closed(*dim))
        }
        (
            FamilySpec::ExponentialFamily {
                family: ExpFamily::NormalNatural { dim },
            },
            EvalRoute::Auto | EvalRoute::ClosedForm,
        ) => Ok(closed(*dim)),
        (_, EvalRoute::ClosedForm) => Err(Error::unsupported(format!(
            "no closed-form l2 information for {}",
            family.name()
        ))),
        _ => l2_numeric(family, theta),
    }
}

fn l2_numeric(family: &FamilySpec, theta: &[f64]) -> Result<DMatrix<f64>> {
    if family.data_dim() != 1 {
        return Err(Error::unsupported(
            "numeric l2 information requires one-dimensional data",
        ));
    }
    let p = family.param_dim();
    let mut pairs = Vec::with_capacity(p);
    let mut steps = Vec::with_capacity(p);
    for a in 0..p {
        let h = fd_step(theta, a);
        pairs.push(perturbed_pair(family, theta, a, h)?);
        steps.push(h);
    }
    let mut out = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let term = |x: f64| -> f64 {
                let da = (pairs[a].0.pdf(&[x]).unwrap_or(f64::NAN)
                    - pairs[a].1.pdf(&[x]).unwrap_or(f64::NAN))
                    / (2.0 * steps[a]);
                let db = (pairs[b].0.pdf(&[x]).unwrap_or(f64::NAN)
                    - pairs[b].1.pdf(&[x]).unwrap_or(f64::NAN))
                    / (2.0 * steps[b]);
                da * db
            };
            let v = if family.is_discrete() {
                quad::sum_series(|k| term(k as f64), 0, 1e-16, 10, 100_000)?
            } else {
                let mut refs: Vec<&Density> = Vec::new();
                for (dp, dm) in &pairs {
                    refs.push(dp);
                    refs.push(dm);
                }
                let (lo, hi) = union_range(&refs)?;
                quad::integrate(
                    term,
                    lo,
                    hi,
                    QuadOptions {
                        abs_tol: 1e-10,
                        rel_tol: 1e-8,
                        max_segments: 4000,
                    },
                )?
                .value
            };
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// RKHS information

/// Tensor of the RKHS (kernel-smoothed L2) distance: G_ab =
/// int (kappa * d_a f)(kappa * d_b f) dx. Closed forms: normal location
/// with a Gaussian smoother (variance inflation, 1/(4 sqrt(pi) s^3) in one
/// dimension) and uniform location (2[K(0) - K(1)], finite even though the
/// raw L2 tensor does not exist). Other families go through nested
/// quadrature.
pub fn rkhs_information(
    family: &FamilySpec,
    theta: &[f64],
    kernel: &KernelSpec,
    route: EvalRoute,
) -> Result<DMatrix<f64>> {
    check_interior(family, theta)?;
    kernel.validate()?;
    if family.data_dim() != 1 {
        return Err(Error::unsupported(
            "rkhs information requires one-dimensional data",
        ));
    }
    if family.is_discrete() {
        return Err(Error::unsupported(
            "rkhs information is not offered for discrete families",
        ));
    }
    match (family, kernel, route) {
        (
            FamilySpec::NormalLocation { dim: 1 },
            KernelSpec::Gaussian { bandwidth },
            EvalRoute::Auto | EvalRoute::ClosedForm,
        )
        | (
            FamilySpec::ExponentialFamily {
                family: ExpFamily::NormalNatural { dim: 1 },
            },
            KernelSpec::Gaussian { bandwidth },
            EvalRoute::Auto | EvalRoute::ClosedForm,
        ) => {
            let s = (1.0 + bandwidth * bandwidth).sqrt();
            let v = 0.25 / (std::f64::consts::PI.sqrt() * s * s * s);
            Ok(DMatrix::from_element(1, 1, v))
        }
        (FamilySpec::UniformLocation1d, _, EvalRoute::Auto | EvalRoute::ClosedForm) => {
            // d_theta (kappa * f_theta)(x) = kappa(x - theta - 1) - kappa(x - theta),
            // so G = 2[(kappa*kappa)(0) - (kappa*kappa)(1)].
            let v = 2.0 * (kernel.eval(0.0, 0.0)? - kernel.eval(1.0, 0.0)?);
            Ok(DMatrix::from_element(1, 1, v))
        }
        (_, _, EvalRoute::ClosedForm) => Err(Error::unsupported(format!(
            "no closed-form rkhs information for {} with this kernel",
            family.name()
        ))),
        _ => rkhs_numeric(family, theta, kernel),
    }
}

fn rkhs_numeric(family: &FamilySpec, theta: &[f64], kernel: &KernelSpec) -> Result<DMatrix<f64>> {
    let p = family.param_dim();
    let w = kernel.smoother_halfwidth();
    let mut pairs = Vec::with_capacity(p);
    let mut steps = Vec::with_capacity(p);
    for a in 0..p {
        let h = fd_step(theta, a);
        pairs.push(perturbed_pair(family, theta, a, h)?);
        steps.push(h);
    }
    let mut refs: Vec<&Density> = Vec::new();
    for (dp, dm) in &pairs {
        refs.push(dp);
        refs.push(dm);
    }
    let (lo, hi) = union_range(&refs)?;
    let inner_opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_segments: 2000,
    };
    // kappa * (d_a f), the smoothed central difference at x.
    let smoothed = |a: usize, x: f64| -> f64 {
        let r = quad::integrate(
            |t| {
                let fp = pairs[a].0.pdf(&[x - t]).unwrap_or(f64::NAN);
                let fm = pairs[a].1.pdf(&[x - t]).unwrap_or(f64::NAN);
                kernel.smoother(t) * (fp - fm)
            },
            -w,
            w,
            inner_opts,
        );
        match r {
            Ok(v) => v.value / (2.0 * steps[a]),
            Err(_) => f64::NAN,
        }
    };
    let mut out = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let v = quad::integrate(
                |x| smoothed(a, x) * smoothed(b, x),
                lo - w,
                hi + w,
                QuadOptions {
                    abs_tol: 1e-9,
                    rel_tol: 1e-7,
                    max_segments: 2000,
                },
            )?
            .value;
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Wasserstein information

/// Tensor of the Wasserstein-2 distance, W2(theta, theta0)^2 ~
/// (theta - theta0)^T T (theta - theta0). Closed forms for all continuous
/// built-ins (see the module table); the quadrature route probes W2 itself
/// with finite differences. Refused for discrete families, whose quantile
/// steps make W2 non-smooth in the parameter.
pub fn wasserstein_information_1d(
    family: &FamilySpec,
    theta: &[f64],
    route: EvalRoute,
) -> Result<DMatrix<f64>> {
    check_interior(family, theta)?;
    if family.is_discrete() {
        return Err(Error::domain(
            "wasserstein information is undefined for discrete families: quantile steps make W2 non-smooth in the parameter",
        ));
    }
    if family.data_dim() != 1 {
        return Err(Error::unsupported(
            "wasserstein information requires one-dimensional data",
        ));
    }
    let closed: Option<DMatrix<f64>> = match family {
        FamilySpec::NormalLocation { .. }
        | FamilySpec::ExponentialFamily {
            family: ExpFamily::NormalNatural { .. },
        }
        | FamilySpec::UniformLocation1d => Some(DMatrix::from_element(1, 1, 1.0)),
        FamilySpec::GammaScale { shape } => {
            let alpha = shape + 1.0;
            Some(DMatrix::from_element(1, 1, alpha * (alpha + 1.0)))
        }
        FamilySpec::LocationScale1d { base } => {
            let (m1, m2) = base.moments();
            Some(DMatrix::from_row_slice(2, 2, &[1.0, m1, m1, m2]))
        }
        FamilySpec::TimeWarp1d { .. } => {
            let a = theta[0];
            Some(DMatrix::from_element(1, 1, 2.0 / (2.0 * a + 1.0).powi(3)))
        }
        // Discrete members were already refused above.
        FamilySpec::ExponentialFamily { .. } => None,
    };
    match route {
        EvalRoute::ClosedForm | EvalRoute::Auto => closed.ok_or_else(|| {
            Error::unsupported(format!(
                "no closed-form wasserstein information for {}",
                family.name()
            ))
        }),
        EvalRoute::Quadrature => {
            let probe = |ta: &[f64], tb: &[f64]| -> Result<f64> {
                let da = density(family.clone(), ta)?;
                let db = density(family.clone(), tb)?;
                let w = crate::metrics::w2_distance(&da, &db, EvalRoute::Auto)?;
                Ok(w * w)
            };
            let h = PROBE_STEP * theta.iter().fold(1.0f64, |m, t| m.max(t.abs()));
            tensor_from_probes(&probe, theta, h)
        }
    }
}

// ---------------------------------------------------------------------------
// Finite-difference tensor probes

/// Two-point probe handed to [`tensor_from_probes`]: evaluated at parameter
/// pairs straddling the expansion point.
pub type PairProbe<'a> = dyn Fn(&[f64], &[f64]) -> Result<f64> + 'a;

/// Recover the quadratic tensor of a dissimilarity from symmetric
/// finite-difference probes. `probe(ta, tb)` must return the quantity with
/// the quadratic expansion: the *squared* distance for metrics, the raw
/// value for divergences. Two-sided probes at steps h and h/2 are combined
/// by Richardson extrapolation (the h^2 error term cancels), and
/// off-diagonal entries come from polarization along e_a + e_b.
pub fn tensor_from_probes(probe: &PairProbe, theta0: &[f64], h: f64) -> Result<DMatrix<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!("probe step must be positive, got {h}")));
    }
    let p = theta0.len();
    let quad_form = |v: &[f64]| -> Result<f64> {
        let eval = |s: f64| -> Result<f64> {
            let tp: Vec<f64> = theta0.iter().zip(v).map(|(t, vi)| t + s * vi).collect();
            let tm: Vec<f64> = theta0.iter().zip(v).map(|(t, vi)| t - s * vi).collect();
            Ok(probe(&tp, &tm)? / (4.0 * s * s))
        };
        let qh = eval(h)?;
        let qh2 = eval(0.5 * h)?;
        Ok((4.0 * qh2 - qh) / 3.0)
    };
    let mut diag = Vec::with_capacity(p);
    for a in 0..p {
        let mut v = vec![0.0; p];
        v[a] = 1.0;
        diag.push(quad_form(&v)?);
    }
    let mut out = DMatrix::zeros(p, p);
    for a in 0..p {
        out[(a, a)] = diag[a];
        for b in (a + 1)..p {
            let mut v = vec![0.0; p];
            v[a] = 1.0;
            v[b] = 1.0;
            let q = quad_form(&v)?;
            let t = 0.5 * (q - diag[a] - diag[b]);
            out[(a, b)] = t;
            out[(b, a)] = t;
        }
    }
    Ok(out)
}

/// Default step schedule for [`intrinsic_ratio_probe`].
pub const PROBE_SCHEDULE: [f64; 3] = [0.02, 0.01, 0.005];

/// Result of probing the local quadratic behavior of a dissimilarity.
#[derive(Debug, Clone)]
pub struct RatioProbe {
    /// Estimated tensor A with delta(theta0 + h v, theta0)^2 ~ h^2 v^T A v.
    pub tensor: DMatrix<f64>,
    /// Largest relative remainder |delta^2 / (h^2 v^T A v) - 1| at the
    /// smallest step, over all probed directions.
    pub omega_residual: f64,
    /// The fitted growth exponent p in delta^2 ~ h^p farthest from 2
    /// across directions (exactly quadratic behavior gives 2).
    pub exponent: f64,
}

/// Estimate the local quadratic tensor of a dissimilarity at `theta0` by
/// fitting delta(theta0 + h v, theta0)^2 / h^2 over a decreasing step
/// schedule and extrapolating to h -> 0 (Neville on the ratio values, which
/// removes the leading remainder terms). Directions are the parameter axes,
/// plus pairwise axis sums to polarize the off-diagonal entries. The probed
/// quantity is the squared distance for metric kinds and the raw value for
/// divergences, which are already quadratic to leading order.
///
/// The growth exponent is fitted before the tensor: behavior that is not
/// locally quadratic - such as L2 on UniformLocation1d, where the squared
/// distance grows like h, not h^2 - is reported as an exponent mismatch
/// instead of being silently fit.
pub fn intrinsic_ratio_probe(
    spec: &DissimilaritySpec,
    family: &FamilySpec,
    theta0: &[f64],
    schedule: &[f64],
) -> Result<RatioProbe> {
    check_interior(family, theta0)?;
    let schedule: Vec<f64> = if schedule.is_empty() {
        PROBE_SCHEDULE.to_vec()
    } else {
        schedule.to_vec()
    };
    if schedule.iter().any(|h| !h.is_finite() || *h < 1e-4) {
        return Err(Error::invalid("probe steps must be finite and at least 1e-4"));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("the probe step schedule must be strictly decreasing"));
    }
    let d0 = density(family.clone(), theta0)?;
    let probe = |t: &[f64]| -> Result<f64> {
        let dt = density(family.clone(), t)?;
        let v = dissimilarity(&dt, &d0, spec)?;
        Ok(if spec.kind.is_divergence() { v } else { v * v })
    };
    let p = theta0.len();
    // Axis directions first, then polarization pairs (a, b).
    let mut dirs: Vec<(usize, usize)> = (0..p).map(|a| (a, a)).collect();
    for a in 0..p {
        for b in (a + 1)..p {
            dirs.push((a, b));
        }
    }
    let m = schedule.len();
    let h_min = schedule[m - 1];
    let mut quads = Vec::with_capacity(dirs.len());
    let mut omega_residual = 0.0f64;
    let mut exponent = 2.0f64;
    for &(a, b) in &dirs {
        let mut d2 = Vec::with_capacity(m);
        for &h in &schedule {
            let mut t = theta0.to_vec();
            t[a] += h;
            if b != a {
                t[b] += h;
            }
            let val = probe(&t)?;
            if !(val > 0.0) || !val.is_finite() {
                return Err(Error::numeric(format!(
                    "probe at step {h} returned {val}; cannot fit a growth exponent"
                )));
            }
            d2.push(val);
        }
        if m >= 2 {
            let p_fit = (d2[0] / d2[m - 1]).ln() / (schedule[0] / schedule[m - 1]).ln();
            if (p_fit - 2.0).abs() > 0.35 {
                return Err(Error::domain(format!(
                    "exponent mismatch: squared dissimilarity grows like h^{p_fit:.2} \
                     along parameter direction ({a}, {b}), not h^2; there is no \
                     quadratic tensor at this point"
                )));
            }
            if (p_fit - 2.0).abs() > (exponent - 2.0).abs() {
                exponent = p_fit;
            }
        }
        // Neville extrapolation of q(h) = delta^2 / h^2 to h = 0.
        let mut q: Vec<f64> = d2.iter().zip(&schedule).map(|(v, h)| v / (h * h)).collect();
        for level in 1..m {
            for i in 0..(m - level) {
                let (hi, hj) = (schedule[i], schedule[i + level]);
                q[i] = (hi * q[i + 1] - hj * q[i]) / (hi - hj);
            }
        }
        if q[0] > 0.0 {
            let omega = (d2[m - 1] / (h_min * h_min * q[0]) - 1.0).abs();
            omega_residual = omega_residual.max(omega);
        }
        quads.push(q[0]);
    }
    let mut tensor = DMatrix::zeros(p, p);
    for (k, &(a, b)) in dirs.iter().enumerate() {
        if a == b {
            tensor[(a, a)] = quads[k];
        } else {
            let t = 0.5 * (quads[k] - tensor[(a, a)] - tensor[(b, b)]);
            tensor[(a, b)] = t;
            tensor[(b, a)] = t;
        }
    }
    Ok(RatioProbe {
        tensor,
        omega_residual,
        exponent,
    })
}

// ---------------------------------------------------------------------------
// Parameter curves and path length

/// A curve in parameter space, given by its discretization: an ordered list
/// of parameter points visited in sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterCurve {
    pub points: Vec<Vec<f64>>,
}

impl ParameterCurve {
    /// A curve through the given points: at least two, all of one
    /// dimension, with consecutive points distinct.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a curve needs at least two points"));
        }
        let dim = points[0].len();
        for (i, w) in points.windows(2).enumerate() {
            if w[1].len() != dim {
                return Err(Error::invalid(format!(
                    "curve point {} has {} coordinates, expected {dim}",
                    i + 1,
                    w[1].len()
                )));
            }
            if w[0] == w[1] {
                return Err(Error::invalid(format!(
                    "consecutive curve points {i} and {} coincide",
                    i + 1
                )));
            }
        }
        Ok(Self { points })
    }

    /// The straight segment from `from` to `to`, discretized into `k`
    /// subintervals (k + 1 points).
    pub fn straight(from: &[f64], to: &[f64], k: usize) -> Result<Self> {
        if from.len() != to.len() {
            return Err(Error::invalid("segment endpoints have different dimensions"));
        }
        if k == 0 {
            return Err(Error::invalid("a segment needs at least one subinterval"));
        }
        let points = (0..=k)
            .map(|i| {
                let s = i as f64 / k as f64;
                from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect()
            })
            .collect();
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Chordal length of a discrete path of densities under a *metric*
/// dissimilarity: the sum of consecutive distances. Divergences are
/// refused - without the triangle inequality a path sum has no length
/// interpretation. For metrics, refining a path never decreases its length.
pub fn chord_length(path: &[Density], spec: &DissimilaritySpec) -> Result<f64> {
    if spec.kind.is_divergence() {
        return Err(Error::unsupported(format!(
            "path length under {} is meaningless: it is a divergence, not a metric",
            spec.kind.name()
        )));
    }
    if path.len() < 2 {
        return Err(Error::invalid("a path needs at least two densities"));
    }
    let mut total = 0.0;
    for w in path.windows(2) {
        total += dissimilarity(&w[0], &w[1], spec)?;
    }
    Ok(total)
}

/// Length of a parameter curve inside a family: the chordal sum of
/// delta(f_{t_{i-1}}, f_{t_i}) over consecutive discretization points.
/// Divergences are refused. Refining the discretization never decreases
/// the value.
pub fn path_length(
    curve: &ParameterCurve,
    spec: &DissimilaritySpec,
    family: &FamilySpec,
) -> Result<f64> {
    let path: Vec<Density> = curve
        .points
        .iter()
        .map(|p| density(family.clone(), p))
        .collect::<Result<_>>()?;
    chord_length(&path, spec)
}

// ---------------------------------------------------------------------------
// Intrinsic distances

/// Intrinsic distance in one parameter: int_a^b sqrt(A(t)) dt for a scalar
/// tensor field A >= 0 (exact up to quadrature tolerance; no lattice
/// needed in one dimension).
pub fn intrinsic_distance_1d(
    tensor: &dyn Fn(f64) -> Result<f64>,
    from: f64,
    to: f64,
) -> Result<f64> {
    if from == to {
        return Ok(0.0);
    }
    let (lo, hi) = (from.min(to), from.max(to));
    let failed = std::cell::Cell::new(false);
    let value = quad::integrate(
        |t| match tensor(t) {
            Ok(a) if a >= 0.0 => a.sqrt(),
            _ => {
                failed.set(true);
                f64::NAN
            }
        },
        lo,
        hi,
        QuadOptions::default(),
    );
    if failed.get() {
        return Err(Error::domain(
            "intrinsic_distance_1d: tensor field errored or went negative",
        ));
    }
    Ok(value?.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Grid cells per axis (nodes per axis = cells + 1).
    pub cells_per_axis: usize,
    /// Move-star radius: connects each node to every offset (a, b) with
    /// gcd(|a|, |b|) = 1 and max(|a|, |b|) <= radius. Radius 3 (32 moves)
    /// keeps the worst-direction overshoot on a flat metric near 1.3%;
    /// radius 1 (8 moves) would allow 8.2%.
    pub star_radius: i64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            cells_per_axis: 400,
            star_radius: 3,
        }
    }
}

/// The lattice move star: all nonzero integer offsets with coprime
/// magnitudes inside the max-norm ball of the given radius.
pub fn move_star(radius: i64) -> Vec<(i64, i64)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut star = Vec::new();
    for a in -radius..=radius {
        for b in -radius..=radius {
            if (a, b) != (0, 0) && gcd(a.abs(), b.abs()) == 1 {
                star.push((a, b));
            }
        }
    }
    star
}

#[derive(Copy, Clone, PartialEq)]
struct HeapKey(f64);

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Intrinsic distance in two parameters: Dijkstra over a regular lattice on
/// the bounding box. Each move (a, b) from node x costs
/// sqrt(v^T A(x + v/2) v) with v = (a h0, b h1), the tensor evaluated at
/// the segment midpoint. Endpoints snap to the nearest node, adding O(h)
/// error on top of the O(h^2) midpoint rule and the star's angular
/// resolution.
pub fn intrinsic_distance_2d(
    tensor: &dyn Fn(&[f64]) -> Result<DMatrix<f64>>,
    bounds: &[(f64, f64)],
    from: &[f64],
    to: &[f64],
    config: &LatticeConfig,
) -> Result<f64> {
    if bounds.len() != 2 || from.len() != 2 || to.len() != 2 {
        return Err(Error::invalid(
            "intrinsic_distance_2d expects two-dimensional bounds and endpoints",
        ));
    }
    let c = config.cells_per_axis;
    if c < 2 {
        return Err(Error::invalid("lattice needs at least 2 cells per axis"));
    }
    if config.star_radius < 1 || config.star_radius as usize > c {
        return Err(Error::invalid("star radius must be in 1..=cells_per_axis"));
    }
    for (k, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("bounds for axis {k} must be a finite interval")));
        }
        for (what, v) in [("from", from[k]), ("to", to[k])] {
            if !(lo <= v && v <= hi) {
                return Err(Error::invalid(format!(
                    "{what}[{k}] = {v} is outside the bounds [{lo}, {hi}]"
                )));
            }
        }
    }
    let h0 = (bounds[0].1 - bounds[0].0) / c as f64;
    let h1 = (bounds[1].1 - bounds[1].0) / c as f64;
    let snap = |x: f64, k: usize| -> usize {
        let h = if k == 0 { h0 } else { h1 };
        (((x - bounds[k].0) / h).round() as usize).min(c)
    };
    let node = |i0: usize, i1: usize| i0 * (c + 1) + i1;
    let pos = |i0: usize, i1: usize| {
        (
            bounds[0].0 + i0 as f64 * h0,
            bounds[1].0 + i1 as f64 * h1,
        )
    };
    let source = node(snap(from[0], 0), snap(from[1], 1));
    let target = node(snap(to[0], 0), snap(to[1], 1));
    if source == target {
        return Ok(0.0);
    }
    let star = move_star(config.star_radius);
    let n_nodes = (c + 1) * (c + 1);
    let mut dist = vec![f64::INFINITY; n_nodes];
    let mut done = vec![false; n_nodes];
    let mut heap: BinaryHeap<Reverse<(HeapKey, usize)>> = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((HeapKey(0.0), source)));
    while let Some(Reverse((HeapKey(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        if u == target {
            return Ok(d);
        }
        done[u] = true;
        let (i0, i1) = (u / (c + 1), u % (c + 1));
        let (x0, x1) = pos(i0, i1);
        for &(a, b) in &star {
            let j0 = i0 as i64 + a;
            let j1 = i1 as i64 + b;
            if j0 < 0 || j1 < 0 || j0 > c as i64 || j1 > c as i64 {
                continue;
            }
            let v0 = a as f64 * h0;
            let v1 = b as f64 * h1;
            let mid = [x0 + 0.5 * v0, x1 + 0.5 * v1];
            let t = tensor(&mid)?;
            if t.nrows() != 2 || t.ncols() != 2 {
                return Err(Error::invalid("tensor field must return a 2x2 matrix"));
            }
            let q = t[(0, 0)] * v0 * v0 + 2.0 * t[(0, 1)] * v0 * v1 + t[(1, 1)] * v1 * v1;
            if !(q >= 0.0) || !q.is_finite() {
                return Err(Error::domain(format!(
                    "tensor field is not positive semidefinite near ({}, {})",
                    mid[0], mid[1]
                )));
            }
            let w = node(j0 as usize, j1 as usize);
            let nd = d + q.sqrt();
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((HeapKey(nd), w)));
            }
        }
    }
    Err(Error::numeric(
        "intrinsic_distance_2d: target unreachable (degenerate lattice)",
    ))
}

/// Intrinsic (Riemannian) distance between two parameter points under a
/// tensor field, dispatching on dimension: exact quadrature along the
/// segment in one parameter, lattice Dijkstra inside `bounds` in two.
/// Higher dimensions are unsupported.
pub fn intrinsic_distance(
    tensor: &dyn Fn(&[f64]) -> Result<DMatrix<f64>>,
    bounds: &[(f64, f64)],
    from: &[f64],
    to: &[f64],
    config: &LatticeConfig,
) -> Result<f64> {
    match from.len() {
        1 => {
            if to.len() != 1 || bounds.len() != 1 {
                return Err(Error::invalid(
                    "endpoints and bounds must both be one-dimensional",
                ));
            }
            let (lo, hi) = bounds[0];
            for (what, v) in [("from", from[0]), ("to", to[0])] {
                if !(lo <= v && v <= hi) {
                    return Err(Error::invalid(format!(
                        "{what} = {v} is outside the bounds [{lo}, {hi}]"
                    )));
                }
            }
            intrinsic_distance_1d(
                &|t| {
                    let m = tensor(&[t])?;
                    if m.nrows() != 1 || m.ncols() != 1 {
                        return Err(Error::invalid("tensor field must return a 1x1 matrix"));
                    }
                    Ok(m[(0, 0)])
                },
                from[0],
                to[0],
            )
        }
        2 => intrinsic_distance_2d(tensor, bounds, from, to, config),
        d => Err(Error::unsupported(format!(
            "intrinsic distance is implemented for 1 or 2 parameters, not {d}"
        ))),
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{hellinger_squared, symkl, DissimilarityKind};
    use crate::models::BaseDensity;

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let scale = b.iter().map(|x| x.abs()).fold(0.0f64, f64::max).max(1e-300);
        (a - b).iter().map(|x| x.abs()).fold(0.0f64, f64::max) / scale
    }

    #[test]
    fn fisher_exact_vs_numeric() {
        // Poisson natural: I = e^theta.
        let fam = FamilySpec::ExponentialFamily {
            family: ExpFamily::PoissonNatural,
        };
        let exact = fisher_information(&fam, &[0.3], EvalRoute::Auto).unwrap();
        assert!((exact[(0, 0)] - 0.3f64.exp()).abs() < 1e-14);
        let numeric = fisher_information(&fam, &[0.3], EvalRoute::Quadrature).unwrap();
        assert!(rel_err(&numeric, &exact) < 1e-6, "poisson: {numeric}");

        // Gamma scale: I = alpha / theta^2.
        let fam = FamilySpec::GammaScale { shape: 1.5 };
        let exact = fisher_information(&fam, &[2.0], EvalRoute::Auto).unwrap();
        assert!((exact[(0, 0)] - 2.5 / 4.0).abs() < 1e-14);
        let numeric = fisher_information(&fam, &[2.0], EvalRoute::Quadrature).unwrap();
        assert!(rel_err(&numeric, &exact) < 1e-6, "gamma: {numeric}");

        // Time warp u^a: I = 1/a^2.
        let fam = FamilySpec::TimeWarp1d {
            base: BaseDensity::Uniform01,
        };
        let exact = fisher_information(&fam, &[1.5], EvalRoute::Auto).unwrap();
        assert!((exact[(0, 0)] - 1.0 / 2.25).abs() < 1e-14);
        let numeric = fisher_information(&fam, &[1.5], EvalRoute::Quadrature).unwrap();
        assert!(rel_err(&numeric, &exact) < 1e-5, "warp: {numeric}");

        // Location-scale with normal base: I = diag(1, 2) / s^2.
        let fam = FamilySpec::LocationScale1d {
            base: BaseDensity::StdNormal,
        };
        let numeric = fisher_information(&fam, &[0.4, 1.3], EvalRoute::Auto).unwrap();
        let s2 = 1.3f64 * 1.3;
        let expect = DMatrix::from_row_slice(2, 2, &[1.0 / s2, 0.0, 0.0, 2.0 / s2]);
        assert!(rel_err(&numeric, &expect) < 1e-5, "locscale: {numeric}");

        // Moving support: refused.
        assert!(matches!(
            fisher_information(&FamilySpec::UniformLocation1d, &[0.2], EvalRoute::Auto),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn l2_information_routes_and_pins() {
        let fam = FamilySpec::NormalLocation { dim: 1 };
        let closed = l2_information(&fam, &[0.1], EvalRoute::ClosedForm).unwrap();
        // 1/(4 sqrt(pi)) = 0.14104739588693907.
        assert!((closed[(0, 0)] - 0.14104739588693907).abs() < 1e-15);
        let numeric = l2_information(&fam, &[0.1], EvalRoute::Quadrature).unwrap();
        assert!(rel_err(&numeric, &closed) < 1e-6);

        // Gamma scale: independent oracle theta^-3 int f1(u)^2 (1 + k - u)^2 du.
        let k = 1.5;
        let theta = 2.0;
        let fam = FamilySpec::GammaScale { shape: k };
        let numeric = l2_information(&fam, &[theta], EvalRoute::Auto).unwrap();
        let f1 = density(FamilySpec::GammaScale { shape: k }, &[1.0]).unwrap();
        let oracle = quad::integrate_auto(
            |u| {
                let f = f1.pdf(&[u]).unwrap();
                let g = f * (1.0 + k - u);
                g * g
            },
            0.0,
            40.0,
        )
        .unwrap()
            / theta.powi(3);
        assert!(
            (numeric[(0, 0)] - oracle).abs() / oracle < 1e-6,
            "gamma l2 info {} vs oracle {oracle}",
            numeric[(0, 0)]
        );

        assert!(l2_information(&FamilySpec::UniformLocation1d, &[0.0], EvalRoute::Auto).is_err());
        let warp = FamilySpec::TimeWarp1d {
            base: BaseDensity::Uniform01,
        };
        assert!(l2_information(&warp, &[2.5], EvalRoute::Auto).is_err());
    }

    #[test]
    fn rkhs_information_closed_vs_numeric() {
        let fam = FamilySpec::NormalLocation { dim: 1 };
        let kernel = KernelSpec::Gaussian { bandwidth: 0.5 };
        let closed = rkhs_information(&fam, &[0.3], &kernel, EvalRoute::ClosedForm).unwrap();
        let s = (1.0f64 + 0.25).sqrt();
        let pin = 0.25 / (std::f64::consts::PI.sqrt() * s.powi(3));
        assert!((closed[(0, 0)] - pin).abs() < 1e-15);
        let numeric = rkhs_information(&fam, &[0.3], &kernel, EvalRoute::Quadrature).unwrap();
        assert!(
            rel_err(&numeric, &closed) < 1e-5,
            "closed {closed} vs numeric {numeric}"
        );
        // Uniform location has a finite smoothed tensor even though its raw
        // L2 tensor does not exist.
        let u = rkhs_information(&FamilySpec::UniformLocation1d, &[0.0], &kernel, EvalRoute::Auto)
            .unwrap();
        let k0 = kernel.eval(0.0, 0.0).unwrap();
        let k1 = kernel.eval(1.0, 0.0).unwrap();
        assert!((u[(0, 0)] - 2.0 * (k0 - k1)).abs() < 1e-15);
        assert!(u[(0, 0)] > 0.0);
    }

    #[test]
    fn wasserstein_information_closed_vs_probed() {
        // Location-scale on a non-centered base has a location/scale cross
        // term: T = [[1, m1], [m1, m2]].
        let fam = FamilySpec::LocationScale1d {
            base: BaseDensity::Uniform01,
        };
        let closed = wasserstein_information_1d(&fam, &[0.2, 0.8], EvalRoute::ClosedForm).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0 / 3.0]);
        assert!(rel_err(&closed, &expect) < 1e-14);
        let probed = wasserstein_information_1d(&fam, &[0.2, 0.8], EvalRoute::Quadrature).unwrap();
        assert!(rel_err(&probed, &expect) < 1e-4, "probed {probed}");

        // Time warp: T = 2/(2a+1)^3 (= 2/27 at a = 1).
        let fam = FamilySpec::TimeWarp1d {
            base: BaseDensity::Uniform01,
        };
        let closed = wasserstein_information_1d(&fam, &[1.0], EvalRoute::Auto).unwrap();
        assert!((closed[(0, 0)] - 2.0 / 27.0).abs() < 1e-15);
        let probed = wasserstein_information_1d(&fam, &[1.0], EvalRoute::Quadrature).unwrap();
        assert!(rel_err(&probed, &closed) < 1e-4, "warp probed {probed}");

        let poisson = FamilySpec::ExponentialFamily {
            family: ExpFamily::PoissonNatural,
        };
        assert!(wasserstein_information_1d(&poisson, &[0.1], EvalRoute::Auto).is_err());
    }

    #[test]
    fn divergence_probes_recover_fisher_multiples() {
        // Hellinger^2 ~ 1/4 Fisher, symmetrized KL ~ Fisher (psi''(1) = 1).
        let fam = FamilySpec::ExponentialFamily {
            family: ExpFamily::PoissonNatural,
        };
        let theta = [0.2];
        let fisher = fisher_information(&fam, &theta, EvalRoute::Auto).unwrap();

        let hell = |ta: &[f64], tb: &[f64]| -> Result<f64> {
            let da = density(fam.clone(), ta)?;
            let db = density(fam.clone(), tb)?;
            hellinger_squared(&da, &db, EvalRoute::Auto)
        };
        let t = tensor_from_probes(&hell, &theta, 0.01).unwrap();
        let quarter: DMatrix<f64> = &fisher * 0.25;
        assert!(rel_err(&t, &quarter) < 1e-4, "hellinger probe {t}");

        let skl = |ta: &[f64], tb: &[f64]| -> Result<f64> {
            let da = density(fam.clone(), ta)?;
            let db = density(fam.clone(), tb)?;
            symkl(&da, &db, EvalRoute::Auto)
        };
        let t = tensor_from_probes(&skl, &theta, 0.01).unwrap();
        assert!(rel_err(&t, &fisher) < 1e-4, "symkl probe {t}");
    }

    #[test]
    fn path_length_refinement_is_monotone() {
        let fam = FamilySpec::NormalLocation { dim: 1 };
        let coarse: Vec<Density> = [0.0, 1.0, 2.5]
            .iter()
            .map(|&t| density(fam.clone(), &[t]).unwrap())
            .collect();
        let fine: Vec<Density> = [0.0, 0.5, 1.0, 1.75, 2.5]
            .iter()
            .map(|&t| density(fam.clone(), &[t]).unwrap())
            .collect();
        let spec = DissimilaritySpec::new(DissimilarityKind::Hellinger);
        let lc = chord_length(&coarse, &spec).unwrap();
        let lf = chord_length(&fine, &spec).unwrap();
        assert!(
            lf >= lc - 1e-12,
            "refinement shortened the path: {lf} < {lc}"
        );
        // Straight-line Hellinger path length converges to the intrinsic
        // length |b - a|/2 from below; even the coarse one is close here.
        assert!(lc <= 2.5 / 2.0 + 1e-12);

        let div = DissimilaritySpec::new(DissimilarityKind::SymKl);
        assert!(chord_length(&coarse, &div).is_err());

        // Same quantity through the ParameterCurve interface.
        let curve = ParameterCurve::new(vec![vec![0.0], vec![1.0], vec![2.5]]).unwrap();
        let lp = path_length(&curve, &spec, &fam).unwrap();
        assert!((lp - lc).abs() < 1e-15);

        // Dense straight paths converge (Cauchy): the Hellinger length of
        // theta in [0, 1] tends to 1/2, and successive refinements at
        // k = 5e3 and k = 1e4 agree to well under 1e-6.
        let l5k = path_length(
            &ParameterCurve::straight(&[0.0], &[1.0], 5_000).unwrap(),
            &spec,
            &fam,
        )
        .unwrap();
        let l10k = path_length(
            &ParameterCurve::straight(&[0.0], &[1.0], 10_000).unwrap(),
            &spec,
            &fam,
        )
        .unwrap();
        assert!((l10k - l5k).abs() < 1e-6, "not Cauchy: {l5k} vs {l10k}");
        assert!((l10k - 0.5).abs() < 1e-6, "limit should be 1/2, got {l10k}");

        assert!(ParameterCurve::new(vec![vec![0.0], vec![0.0]]).is_err());
        assert!(ParameterCurve::new(vec![vec![0.0]]).is_err());
    }

    #[test]
    fn ratio_probe_recovers_tensors_and_flags_exponent_mismatch() {
        // Hellinger on the natural normal family: tensor = Fisher/4 = 1/4.
        let fam = FamilySpec::ExponentialFamily {
            family: ExpFamily::NormalNatural { dim: 1 },
        };
        let spec = DissimilaritySpec::new(DissimilarityKind::Hellinger);
        let probe = intrinsic_ratio_probe(&spec, &fam, &[0.3], &[]).unwrap();
        assert!(
            (probe.tensor[(0, 0)] - 0.25).abs() < 1e-6,
            "hellinger probe {}",
            probe.tensor[(0, 0)]
        );
        assert!((probe.exponent - 2.0).abs() < 0.05);
        assert!(probe.omega_residual < 1e-4);

        // W2 on a location family is exactly Euclidean: tensor = 1 and the
        // remainder vanishes.
        let loc = FamilySpec::NormalLocation { dim: 1 };
        let w2 = DissimilaritySpec::new(DissimilarityKind::Wasserstein2);
        let probe = intrinsic_ratio_probe(&w2, &loc, &[0.0], &[]).unwrap();
        assert!((probe.tensor[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(probe.omega_residual < 1e-12);

        // L2 on UniformLocation1d: squared distance grows like h, not h^2.
        let unif = FamilySpec::UniformLocation1d;
        let l2 = DissimilaritySpec::new(DissimilarityKind::L2);
        let err = intrinsic_ratio_probe(&l2, &unif, &[0.0], &[]).unwrap_err();
        assert!(
            err.to_string().contains("exponent mismatch"),
            "unexpected error: {err}"
        );

        // Bad schedules are refused.
        assert!(intrinsic_ratio_probe(&w2, &loc, &[0.0], &[1e-5]).is_err());
        assert!(intrinsic_ratio_probe(&w2, &loc, &[0.0], &[0.01, 0.02]).is_err());
    }

    #[test]
    fn intrinsic_distance_dispatcher_matches_routes() {
        // 1-D: constant tensor 4 -> distance 2 |b - a|.
        let tensor = |t: &[f64]| -> Result<DMatrix<f64>> {
            assert_eq!(t.len(), 1);
            Ok(DMatrix::from_element(1, 1, 4.0))
        };
        let d = intrinsic_distance(
            &tensor,
            &[(0.0, 1.0)],
            &[0.25],
            &[0.75],
            &LatticeConfig::default(),
        )
        .unwrap();
        assert!((d - 1.0).abs() < 1e-10);
        // Out-of-bounds endpoints are refused.
        assert!(intrinsic_distance(
            &tensor,
            &[(0.0, 1.0)],
            &[-0.5],
            &[0.75],
            &LatticeConfig::default()
        )
        .is_err());
        // Dimensions above two are unsupported.
        let t3 = |_: &[f64]| -> Result<DMatrix<f64>> { Ok(DMatrix::identity(3, 3)) };
        assert!(intrinsic_distance(
            &t3,
            &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
            &[0.0, 0.0, 0.0],
            &[1.0, 1.0, 1.0],
            &LatticeConfig::default()
        )
        .is_err());
    }

    #[test]
    fn intrinsic_1d_exponential_tensor() {
        // A(t) = e^t / 4 (the Poisson quarter-Fisher in natural
        // coordinates): distance = e^{b/2} - e^{a/2}.
        let d = intrinsic_distance_1d(&|t| Ok(0.25 * t.exp()), 0.0, 1.0).unwrap();
        let exact = 0.5f64.exp() - 1.0;
        assert!((d - exact).abs() < 1e-10, "{d} vs {exact}");
        // Orientation-free.
        let rev = intrinsic_distance_1d(&|t| Ok(0.25 * t.exp()), 1.0, 0.0).unwrap();
        assert!((rev - exact).abs() < 1e-10);
        // Negative tensor is an error.
        assert!(intrinsic_distance_1d(&|_| Ok(-1.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn move_star_counts() {
        assert_eq!(move_star(1).len(), 8);
        assert_eq!(move_star(2).len(), 16);
        assert_eq!(move_star(3).len(), 32);
    }

    #[test]
    fn lattice_flat_metric_anisotropy() {
        // Identity tensor: lattice distance vs Euclidean in assorted
        // directions. Radius-3 star keeps the overshoot under ~1.4%.
        let tensor = |_: &[f64]| Ok(DMatrix::identity(2, 2));
        let bounds = [(0.0, 1.0), (0.0, 1.0)];
        let cfg = LatticeConfig {
            cells_per_axis: 120,
            star_radius: 3,
        };
        let cases = [
            ([0.0, 0.0], [1.0, 1.0]),
            ([0.0, 0.0], [1.0, 0.0]),
            ([0.0, 0.0], [1.0, 0.35]),
            ([0.0, 0.2], [1.0, 0.75]),
        ];
        for (from, to) in cases {
            let d = intrinsic_distance_2d(&tensor, &bounds, &from, &to, &cfg).unwrap();
            let exact =
                ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt();
            let ratio = d / exact;
            assert!(
                (1.0 - 1e-9..1.014).contains(&ratio),
                "direction {from:?}->{to:?}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn lattice_product_metric_axis_path() {
        // A = diag(1, e^{2 x1}): moving straight up the x1 axis costs
        // int_0^1 e^t dt = e - 1; the midpoint rule is O(h^2).
        let tensor = |x: &[f64]| {
            Ok(DMatrix::from_row_slice(
                2,
                2,
                &[1.0, 0.0, 0.0, (2.0 * x[1]).exp()],
            ))
        };
        let bounds = [(0.0, 1.0), (0.0, 1.0)];
        let cfg = LatticeConfig {
            cells_per_axis: 100,
            star_radius: 3,
        };
        let d =
            intrinsic_distance_2d(&tensor, &bounds, &[0.5, 0.0], &[0.5, 1.0], &cfg).unwrap();
        let exact = std::f64::consts::E - 1.0;
        assert!(
            (d - exact).abs() / exact < 1e-3,
            "axis path: {d} vs {exact}"
        );
    }
}
