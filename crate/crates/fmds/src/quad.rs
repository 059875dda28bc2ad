//! Adaptive numerical integration.
//!
//! One-dimensional integrals use a 15-point Kronrod rule with the embedded
//! 7-point Gauss rule for the local error estimate, refined by worst-first
//! bisection until the summed error estimate meets the tolerance. Defaults
//! are absolute 1e-10 / relative 1e-9; callers that need a different budget
//! pass their own [`QuadOptions`]. Non-convergence within the segment budget
//! is an error, never a silent partial answer.
//!
//! Discrete (counting-measure) summation lives here too, so metric code can
//! treat "integrate over the support" uniformly.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Positive abscissae of the 15-point Kronrod rule on [-1, 1].
/// Index 7 is the midpoint; odd indices are the embedded Gauss-7 nodes.
/// The tables keep the full published 33-digit values verbatim; the
/// compiler rounds them to the nearest f64.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss-7 weights matching XGK indices 1, 3, 5, 7.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_segments: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Summed local error estimates; an upper-bound flavored estimate, not a
    /// guaranteed bound.
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// One Gauss-Kronrod pass over [a, b].
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Segment {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);

    let fc = f(center);
    let mut resg = WG[3] * fc;
    let mut resk = WGK[7] * fc;
    let mut fv = [0.0f64; 15]; // evaluations, mirrored pairs then center
    fv[14] = fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[2 * j] - reskh).abs() + (fv[2 * j + 1] - reskh).abs());
    }
    resasc *= half.abs();

    let value = resk * half;
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }

    Segment { a, b, value, error }
}

/// Adaptive integral of `f` over the finite interval [a, b].
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(format!(
            "integration endpoints must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    if a > b {
        return Err(Error::invalid(format!(
            "integration interval is reversed: [{a}, {b}]"
        )));
    }

    let first = gk15(&mut f, a, b);
    if !first.value.is_finite() {
        return Err(Error::numeric(format!(
            "integrand produced a non-finite value on [{a}, {b}]"
        )));
    }

    let mut heap = BinaryHeap::new();
    let mut total_value = first.value;
    let mut total_error = first.error;
    heap.push(first);

    while total_error > opts.abs_tol.max(opts.rel_tol * total_value.abs()) {
        if heap.len() >= opts.max_segments {
            return Err(Error::numeric(format!(
                "quadrature did not converge on [{a}, {b}]: {} segments, residual error {:.3e}, value {:.6e}",
                heap.len(),
                total_error,
                total_value
            )));
        }
        let worst = heap.pop().expect("heap nonempty while error positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; accept its estimate and
            // retire it so it never surfaces again.
            total_error -= worst.error;
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        if !left.value.is_finite() || !right.value.is_finite() {
            return Err(Error::numeric(format!(
                "integrand produced a non-finite value inside [{}, {}]",
                worst.a, worst.b
            )));
        }
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    Ok(QuadResult {
        value: total_value,
        error: total_error,
    })
}

/// Integral with the default tolerances.
pub fn integrate_auto(f: impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    integrate(f, a, b, QuadOptions::default()).map(|r| r.value)
}

/// Sum of `f(k)` for k = start, start+1, ... until `run` consecutive terms
/// fall below `tail_tol` in absolute value. Serves as counting-measure
/// "quadrature" for discrete families.
pub fn sum_series(
    f: impl Fn(u64) -> f64,
    start: u64,
    tail_tol: f64,
    run: usize,
    max_terms: u64,
) -> Result<f64> {
    let mut total = 0.0;
    let mut quiet = 0usize;
    let mut k = start;
    while k < start.saturating_add(max_terms) {
        let t = f(k);
        if !t.is_finite() {
            return Err(Error::numeric(format!("series term at k={k} is not finite")));
        }
        total += t;
        if t.abs() < tail_tol {
            quiet += 1;
            if quiet >= run {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        k += 1;
    }
    Err(Error::numeric(format!(
        "series did not settle within {max_terms} terms (last index {k})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // Gauss-7/Kronrod-15 integrates low-degree polynomials essentially exactly.
        let v = integrate_auto(|x| 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((v - 8.0).abs() < 1e-12, "got {v}");
        let v = integrate_auto(|x| x.powi(7) - x, -1.0, 3.0).unwrap();
        assert!((v - (3.0f64.powi(8) - 1.0) / 8.0 + 4.0).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn gaussian_mass_on_truncated_support() {
        let inv_sqrt_2pi = 0.3989422804014327;
        let v = integrate_auto(|x| inv_sqrt_2pi * (-0.5 * x * x).exp(), -10.0, 10.0).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn endpoint_singularity_converges() {
        let opts = QuadOptions {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_segments: 4000,
        };
        let v = integrate(|x| x.sqrt().recip(), 0.0, 1.0, opts).unwrap();
        assert!((v.value - 2.0).abs() < 1e-7, "got {}", v.value);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = integrate_auto(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI).unwrap();
        let exact = (1.0 - (10.0 * std::f64::consts::PI).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-10, "got {v}, want {exact}");
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(integrate_auto(|x| x, 1.0, 0.0).is_err());
    }

    #[test]
    fn geometric_series_sums() {
        let v = sum_series(|k| 0.5f64.powi(k as i32), 0, 1e-14, 5, 1000).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }
}
