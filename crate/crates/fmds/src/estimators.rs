//! Sample-based estimators of the density dissimilarities.
//!
//! Three estimation strategies, matched to what each dissimilarity can
//! tolerate:
//!
//! - plug-in: fit a kernel density estimate to each sample and evaluate the
//!   population metric on the fitted curves (L2 and Hellinger only; KL-type
//!   divergences are refused because smoothed density ratios are unbounded);
//! - MMD: unbiased U-statistic estimate of the *squared* RKHS distance
//!   (can be slightly negative near zero - that is the price of
//!   unbiasedness and is preserved, not clamped, in [`mmd_ustat`]);
//! - empirical quantiles: one-dimensional Wasserstein-2 from order
//!   statistics, exact for the empirical measures.
//!
//! Everything is deterministic given the input samples; parallel reductions
//! use fixed block boundaries so the thread count never changes a result.

use crate::error::{Error, Result};
use crate::metrics::{
    DissimilarityKind, DissimilarityMatrix, DissimilaritySpec, KernelSpec, TRIANGLE_SCAN_AUTO_LIMIT,
};
use crate::models::SampleSet;
use crate::quad::{self, QuadOptions};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// KDE

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Explicit bandwidth.
    Fixed(f64),
    /// Silverman's rule of thumb: 1.06 * sd * m^(-1/5), with the sample
    /// standard deviation taken with the m-1 denominator.
    #[default]
    Silverman,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeConfig {
    pub kernel: KernelSpec,
    #[serde(default)]
    pub bandwidth: Bandwidth,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig {
            kernel: KernelSpec::Gaussian { bandwidth: 1.0 },
            bandwidth: Bandwidth::Silverman,
        }
    }
}

/// A fitted kernel density estimate: the equal-weight mixture of the
/// smoother centered at each observation.
#[derive(Clone, Debug)]
pub struct KernelDensity {
    xs: Vec<f64>,
    kernel: KernelSpec,
}

pub fn silverman_bandwidth(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::invalid(
            "silverman bandwidth requires at least two observations",
        ));
    }
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(Error::domain(
            "silverman bandwidth is zero: sample has no spread",
        ));
    }
    Ok(1.06 * sd * m.powf(-0.2))
}

pub fn kde_fit(sample: &SampleSet, config: &KdeConfig) -> Result<KernelDensity> {
    let xs = sample.scalars()?;
    if xs.is_empty() {
        return Err(Error::invalid("cannot fit a KDE to an empty sample"));
    }
    let b = match config.bandwidth {
        Bandwidth::Fixed(b) => b,
        Bandwidth::Silverman => silverman_bandwidth(xs)?,
    };
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("bandwidth must be positive, got {b}")));
    }
    let kernel = match config.kernel {
        KernelSpec::Gaussian { .. } => KernelSpec::Gaussian { bandwidth: b },
        KernelSpec::TriweightConvolution { .. } => KernelSpec::TriweightConvolution { bandwidth: b },
    };
    // Sorted observations let eval() restrict the sum to the smoother's
    // window around the query point.
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(KernelDensity { xs, kernel })
}

impl KernelDensity {
    pub fn bandwidth(&self) -> f64 {
        self.kernel.bandwidth()
    }

    pub fn eval(&self, x: f64) -> f64 {
        // Only observations within the smoother halfwidth contribute:
        // exactly so for compact smoothers, and beyond 10 bandwidths a
        // Gaussian term is below double precision.
        let w = self.kernel.smoother_halfwidth();
        let lo = self.xs.partition_point(|&xi| xi < x - w);
        let hi = self.xs.partition_point(|&xi| xi <= x + w);
        let inv_m = 1.0 / self.xs.len() as f64;
        inv_m
            * self.xs[lo..hi]
                .iter()
                .map(|xi| self.kernel.smoother(x - xi))
                .sum::<f64>()
    }

    /// Interval containing all the estimate's mass up to smoother tails.
    pub fn quad_range(&self) -> (f64, f64) {
        let lo = self.xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w = self.kernel.smoother_halfwidth();
        (lo - w, hi + w)
    }
}

// ---------------------------------------------------------------------------
// Plug-in distances

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PluginKind {
    L2,
    Hellinger,
}

/// Plug-in distance between the KDE curves of two samples. Only L2 and
/// Hellinger are offered: both are well defined under smoothing, whereas
/// ratio-based divergences (KL, chi-square) blow up in the KDE tails and
/// their plug-ins are refused.
pub fn plugin_distance(
    a: &SampleSet,
    b: &SampleSet,
    kind: PluginKind,
    config: &KdeConfig,
) -> Result<f64> {
    let ka = kde_fit(a, config)?;
    let kb = kde_fit(b, config)?;
    let (la, ha) = ka.quad_range();
    let (lb, hb) = kb.quad_range();
    let (lo, hi) = (la.min(lb), ha.max(hb));
    let opts = QuadOptions {
        abs_tol: 1e-9,
        rel_tol: 1e-7,
        max_segments: 4000,
    };
    let sq = match kind {
        PluginKind::L2 => quad::integrate(
            |x| {
                let d = ka.eval(x) - kb.eval(x);
                d * d
            },
            lo,
            hi,
            opts,
        )?,
        PluginKind::Hellinger => quad::integrate(
            |x| {
                let d = ka.eval(x).sqrt() - kb.eval(x).sqrt();
                d * d
            },
            lo,
            hi,
            opts,
        )?,
    };
    Ok(sq.value.max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// MMD

/// Unbiased U-statistic estimate of the squared RKHS (MMD) distance:
///
///   1/(m(m-1)) sum_{i != j} K(a_i, a_j)
/// + 1/(n(n-1)) sum_{i != j} K(b_i, b_j)
/// - 2/(mn)     sum_{i, j}   K(a_i, b_j).
///
/// May be negative when the true distance is near zero. Double sums are
/// blocked into fixed 256-row chunks; chunk partial sums are accumulated in
/// index order, so the result is bit-identical for any thread count.
pub fn mmd_ustat(a: &SampleSet, b: &SampleSet, kernel: &KernelSpec) -> Result<f64> {
    kernel.validate()?;
    let xs = a.scalars()?;
    let ys = b.scalars()?;
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::invalid(
            "mmd_ustat needs at least two observations per sample",
        ));
    }
    let k: Box<dyn Fn(f64, f64) -> f64 + Sync> = match kernel {
        KernelSpec::Gaussian { bandwidth } => {
            let s = bandwidth * std::f64::consts::SQRT_2;
            let norm = (s * (2.0 * std::f64::consts::PI).sqrt()).recip();
            Box::new(move |x: f64, y: f64| {
                let z = (x - y) / s;
                norm * (-0.5 * z * z).exp()
            })
        }
        _ => Box::new(move |x: f64, y: f64| kernel.eval(x, y).unwrap_or(f64::NAN)),
    };

    const BLOCK: usize = 256;
    let block_sums = |rows: &[f64], cols: &[f64], skip_diag: bool| -> f64 {
        let blocks: Vec<usize> = (0..rows.len()).step_by(BLOCK).collect();
        let partials: Vec<f64> = blocks
            .par_iter()
            .map(|&start| {
                let end = (start + BLOCK).min(rows.len());
                let mut s = 0.0;
                for (i, x) in rows.iter().enumerate().take(end).skip(start) {
                    for (j, y) in cols.iter().enumerate() {
                        if skip_diag && i == j {
                            continue;
                        }
                        s += k(*x, *y);
                    }
                }
                s
            })
            .collect();
        partials.iter().sum()
    };

    let m = xs.len() as f64;
    let n = ys.len() as f64;
    let within_a = block_sums(xs, xs, true) / (m * (m - 1.0));
    let within_b = block_sums(ys, ys, true) / (n * (n - 1.0));
    let cross = block_sums(xs, ys, false) / (m * n);
    let v = within_a + within_b - 2.0 * cross;
    if v.is_nan() {
        return Err(Error::numeric("mmd_ustat: kernel evaluation failed"));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Empirical Wasserstein-2

/// Wasserstein-2 distance between the empirical measures of two
/// one-dimensional samples: the exact integral of the squared difference of
/// empirical quantile functions (left-continuous steps). For equal sizes
/// this reduces to root-mean-square pairing of order statistics.
pub fn empirical_w2_1d(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    let mut xs = a.scalars()?.to_vec();
    let mut ys = b.scalars()?.to_vec();
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("empirical_w2_1d: empty sample"));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("empirical_w2_1d: non-finite observation"));
    }
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (m, n) = (xs.len(), ys.len());

    // Walk the merged breakpoints {i/m} U {j/n}. On each segment both
    // quantile functions are constant at the current order statistics.
    let mut total = 0.0;
    let mut u = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < m && j < n {
        let ui = (i + 1) as f64 / m as f64;
        let uj = (j + 1) as f64 / n as f64;
        let next = ui.min(uj);
        let d = xs[i] - ys[j];
        total += d * d * (next - u);
        u = next;
        if ui <= uj {
            i += 1;
        }
        if uj <= ui {
            j += 1;
        }
    }
    Ok(total.max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// Pairwise matrices from samples

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub kde: KdeConfig,
}

/// Pairwise dissimilarity matrix over samples, one estimator per kind:
/// plug-in KDE for L2 / Hellinger, empirical quantiles for Wasserstein-2,
/// and the MMD U-statistic for RKHS (clamped at zero before the square
/// root: the unbiased estimate may dip below zero within noise of a true
/// zero, and a dissimilarity matrix must stay nonnegative). KL-type
/// divergences have no accepted estimator and are refused.
pub fn pairwise_matrix_samples(
    samples: &[SampleSet],
    spec: &DissimilaritySpec,
    config: &EstimatorConfig,
) -> Result<DissimilarityMatrix> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::invalid("pairwise matrix over an empty collection"));
    }
    let dim = samples[0].dim;
    for (i, s) in samples.iter().enumerate() {
        if s.dim != dim {
            return Err(Error::invalid(format!(
                "sample {i} has dimension {}, expected {dim}",
                s.dim
            )));
        }
    }
    let estimate = |i: usize, j: usize| -> Result<f64> {
        let (a, b) = (&samples[i], &samples[j]);
        match &spec.kind {
            DissimilarityKind::L2 => plugin_distance(a, b, PluginKind::L2, &config.kde),
            DissimilarityKind::Hellinger => {
                plugin_distance(a, b, PluginKind::Hellinger, &config.kde)
            }
            DissimilarityKind::Wasserstein2 => empirical_w2_1d(a, b),
            DissimilarityKind::Rkhs { kernel } => {
                Ok(mmd_ustat(a, b, kernel)?.max(0.0).sqrt())
            }
            other => Err(Error::unsupported(format!(
                "{}: no sample-based estimator (density-ratio divergences are refused)",
                other.name()
            ))),
        }
    };
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| estimate(i, j))
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(&vals) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    let labels = samples.iter().map(|s| s.source_id.clone()).collect();
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
    use crate::metrics::{l2_distance, rkhs_distance, w2_distance, EvalRoute};
    use crate::models::{density, FamilySpec, SampleSet};

    fn sample_of(xs: &[f64]) -> SampleSet {
        SampleSet::new("test".into(), 1, 0, xs.to_vec()).unwrap()
    }

    #[test]
    fn kde_single_point_height() {
        // One observation at 0, Gaussian bandwidth 1: value at 0 is
        // 1/sqrt(2 pi).
        let s = sample_of(&[0.0]);
        let cfg = KdeConfig {
            kernel: KernelSpec::Gaussian { bandwidth: 1.0 },
            bandwidth: Bandwidth::Fixed(1.0),
        };
        let kde = kde_fit(&s, &cfg).unwrap();
        assert!((kde.eval(0.0) - 0.3989422804014327).abs() < 1e-15);
    }

    #[test]
    fn silverman_rule_value() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let b = silverman_bandwidth(&xs).unwrap();
        let expected = 1.06 * 2.5f64.sqrt() * 5f64.powf(-0.2);
        assert!((b - expected).abs() < 1e-14, "b = {b}");
    }

    #[test]
    fn kde_mass_is_one() {
        let d = density(FamilySpec::NormalLocation { dim: 1 }, &[0.0]).unwrap();
        let s = d.sample_set(200, 3, "kde/mass").unwrap();
        let kde = kde_fit(&s, &KdeConfig::default()).unwrap();
        let (lo, hi) = kde.quad_range();
        let mass = quad::integrate_auto(|x| kde.eval(x), lo, hi).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "mass = {mass}");
    }

    #[test]
    fn plugin_l2_tracks_population_value() {
        let f = density(FamilySpec::NormalLocation { dim: 1 }, &[0.0]).unwrap();
        let g = density(FamilySpec::NormalLocation { dim: 1 }, &[2.0]).unwrap();
        let a = f.sample_set(4000, 11, "plugin/a").unwrap();
        let b = g.sample_set(4000, 11, "plugin/b").unwrap();
        let est = plugin_distance(&a, &b, PluginKind::L2, &KdeConfig::default()).unwrap();
        let truth = l2_distance(&f, &g, EvalRoute::ClosedForm).unwrap();
        assert!(
            (est - truth).abs() / truth < 0.1,
            "est {est} vs truth {truth}"
        );
    }

    #[test]
    fn mmd_matches_rkhs_distance() {
        let f = density(FamilySpec::NormalLocation { dim: 1 }, &[0.0]).unwrap();
        let g = density(FamilySpec::NormalLocation { dim: 1 }, &[2.0]).unwrap();
        let kernel = KernelSpec::Gaussian { bandwidth: 1.0 };
        let a = f.sample_set(3000, 5, "mmd/a").unwrap();
        let b = g.sample_set(3000, 5, "mmd/b").unwrap();
        let est = mmd_ustat(&a, &b, &kernel).unwrap();
        let truth = rkhs_distance(&f, &g, &kernel, EvalRoute::ClosedForm).unwrap();
        assert!(
            (est - truth * truth).abs() / (truth * truth) < 0.1,
            "est {est} vs truth^2 {}",
            truth * truth
        );
        // Same distribution: the unbiased estimate sits near zero and is
        // allowed to be negative.
        let a2 = f.sample_set(3000, 6, "mmd/a2").unwrap();
        let near_zero = mmd_ustat(&a, &a2, &kernel).unwrap();
        assert!(near_zero.abs() < 0.01, "near_zero = {near_zero}");
    }

    #[test]
    fn empirical_w2_equal_sizes_is_sorted_pairing() {
        let a = sample_of(&[2.0, 0.0]);
        let b = sample_of(&[3.0, 1.0]);
        // Sorted pairing: (0,1), (2,3) -> rms of (1,1) = 1.
        let v = empirical_w2_1d(&a, &b).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_w2_unequal_sizes() {
        // F^- steps at {0, 1} with mass 1/2 each; G^- constant 0.5:
        // integral = 0.5 * 0.25 + 0.5 * 0.25 = 0.25, distance 0.5.
        let a = sample_of(&[0.0, 1.0]);
        let b = sample_of(&[0.5]);
        let v = empirical_w2_1d(&a, &b).unwrap();
        assert!((v - 0.5).abs() < 1e-15, "v = {v}");
    }

    #[test]
    fn empirical_w2_brute_force_oracle() {
        // For equal sizes the optimal assignment is the sorted pairing;
        // check against explicit minimization over all permutations.
        fn brute(xs: &[f64], ys: &[f64]) -> f64 {
            fn perms(k: usize, idx: &mut Vec<usize>, best: &mut f64, xs: &[f64], ys: &[f64]) {
                if k == idx.len() {
                    let c: f64 = idx
                        .iter()
                        .enumerate()
                        .map(|(i, &j)| (xs[i] - ys[j]) * (xs[i] - ys[j]))
                        .sum();
                    *best = best.min(c);
                    return;
                }
                for i in k..idx.len() {
                    idx.swap(k, i);
                    perms(k + 1, idx, best, xs, ys);
                    idx.swap(k, i);
                }
            }
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            let mut best = f64::INFINITY;
            perms(0, &mut idx, &mut best, xs, ys);
            (best / xs.len() as f64).sqrt()
        }
        let cases = [
            (vec![0.3, -1.2, 2.0], vec![0.0, 0.5, -0.7]),
            (vec![1.0, 1.0, 2.0, -3.0, 0.25], vec![0.0, 0.1, -0.2, 4.0, 2.5]),
        ];
        for (xs, ys) in cases {
            let fast = empirical_w2_1d(&sample_of(&xs), &sample_of(&ys)).unwrap();
            let slow = brute(&xs, &ys);
            assert!(
                (fast - slow).abs() < 1e-12,
                "fast {fast} vs brute {slow}"
            );
        }
    }

    #[test]
    fn empirical_w2_tracks_population() {
        let f = density(FamilySpec::NormalLocation { dim: 1 }, &[0.0]).unwrap();
        let g = density(FamilySpec::NormalLocation { dim: 1 }, &[2.0]).unwrap();
        let a = f.sample_set(4000, 9, "w2/a").unwrap();
        let b = g.sample_set(4001, 9, "w2/b").unwrap(); // unequal on purpose
        let est = empirical_w2_1d(&a, &b).unwrap();
        let truth = w2_distance(&f, &g, EvalRoute::ClosedForm).unwrap();
        assert!((est - truth).abs() / truth < 0.1, "est {est} vs {truth}");
    }

    #[test]
    fn sample_matrix_and_refusals() {
        let f = density(FamilySpec::NormalLocation { dim: 1 }, &[0.0]).unwrap();
        let samples: Vec<SampleSet> = (0..3)
            .map(|i| f.sample_set(300, 17, &format!("mat/{i}")).unwrap())
            .collect();
        let cfg = EstimatorConfig::default();
        let m = pairwise_matrix_samples(
            &samples,
            &DissimilaritySpec::new(DissimilarityKind::Wasserstein2),
            &cfg,
        )
        .unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.labels[1], "mat/1");

        let err = pairwise_matrix_samples(
            &samples,
            &DissimilaritySpec::new(DissimilarityKind::SymKl),
            &cfg,
        );
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }
}
