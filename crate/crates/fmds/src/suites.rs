//! Named verification suites.
//!
//! Each suite runs one empirical claim about the library end to end -
//! closed forms against quadrature, embeddings against known geometry,
//! estimators against population truth, fast algorithms against brute-force
//! oracles - and reports a machine-checkable verdict per sub-check. The
//! `acceptance` integration test runs every suite; `fmds suite <name>`
//! runs one from the command line.
//!
//! Suites are deterministic given a seed: every random draw goes through a
//! named [`rng`] stream, and reports carry no clocks or machine state.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{empirical_w2_1d, mmd_ustat, plugin_distance, KdeConfig, PluginKind};
use crate::geometry::{fisher_information, intrinsic_ratio_probe, l2_information};
use crate::isomap::{
    all_pairs_shortest_paths, dijkstra, floyd_warshall, isomap, radius_graph, DisconnectedPolicy,
    IsomapConfig, NeighborRule,
};
use crate::mds::{
    classical_scaling, l2_gram_matrix, pca_from_gram, procrustes_distance, schoenberg_check,
    strain, stress,
};
use crate::metrics::{
    hellinger_distance, l2_distance, pairwise_matrix, rkhs_distance, symkl, w2_distance,
    DissimilarityKind, DissimilarityMatrix, DissimilaritySpec, EvalRoute, KernelSpec,
};
use crate::models::{density, BaseDensity, Density, ExpFamily, FamilySpec, SampleSet};
use crate::rng;

// ---------------------------------------------------------------------------
// Report types

/// One verified claim: `observed` must relate to `threshold` as `direction`
/// says ("<=" or ">=") for the check to pass.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub threshold: f64,
    pub direction: String,
    pub detail: String,
}

impl CheckResult {
    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: observed {:.6e} (need {} {:.3e}) - {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.direction,
            self.threshold,
            self.detail
        )
    }
}

/// The outcome of one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.checks.iter().map(CheckResult::summary_line).collect()
    }
}

fn check_le(name: &str, observed: f64, threshold: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        // NaN compares false, so a poisoned statistic can never pass.
        passed: observed <= threshold,
        observed,
        threshold,
        direction: "<=".to_string(),
        detail,
    }
}

fn check_ge(name: &str, observed: f64, threshold: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: observed >= threshold,
        observed,
        threshold,
        direction: ">=".to_string(),
        detail,
    }
}

// ---------------------------------------------------------------------------
// Registry

pub const SUITE_NAMES: [&str; 10] = [
    "closed-forms",
    "pca-cs-equivalence",
    "cs-exactness",
    "isomap-consistency",
    "uniform-blowup",
    "timewarp-convergence",
    "sample-consistency",
    "tensor-probes",
    "oracle-equivalence",
    "schoenberg",
];

/// Run one suite by name with the given seed.
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "closed-forms" => closed_forms(seed),
        "pca-cs-equivalence" => pca_cs_equivalence(seed),
        "cs-exactness" => cs_exactness(seed),
        "isomap-consistency" => isomap_consistency(seed),
        "uniform-blowup" => uniform_blowup(seed),
        "timewarp-convergence" => timewarp_convergence(seed),
        "sample-consistency" => sample_consistency(seed),
        "tensor-probes" => tensor_probes(seed),
        "oracle-equivalence" => oracle_equivalence(seed),
        "schoenberg" => schoenberg(seed),
        other => Err(Error::invalid(format!(
            "unknown suite '{other}'; available: {}",
            SUITE_NAMES.join(", ")
        ))),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers

/// Two parameter vectors in [lo, hi]^dim, redrawn until they differ by at
/// least `min_sep` in some coordinate, so closed-vs-quadrature relative
/// errors are measured away from the quadrature noise floor at delta = 0.
fn separated_pair(
    r: &mut ChaCha8Rng,
    dim: usize,
    lo: f64,
    hi: f64,
    min_sep: f64,
) -> (Vec<f64>, Vec<f64>) {
    loop {
        let a: Vec<f64> = (0..dim).map(|_| r.gen_range(lo..hi)).collect();
        let b: Vec<f64> = (0..dim).map(|_| r.gen_range(lo..hi)).collect();
        let sep = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if sep >= min_sep {
            return (a, b);
        }
    }
}

fn rel_err(reference: f64, other: f64) -> f64 {
    (reference - other).abs() / reference.abs().max(f64::MIN_POSITIVE)
}

fn matrix_rel_err(reference: &DMatrix<f64>, other: &DMatrix<f64>) -> f64 {
    (reference - other).norm() / reference.norm().max(f64::MIN_POSITIVE)
}

/// Grid of n one-parameter densities theta_i = lo + i (hi - lo)/(n - 1).
fn grid_densities(family: &FamilySpec, lo: f64, hi: f64, n: usize) -> Result<(Vec<Density>, Vec<f64>)> {
    let thetas: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let densities = thetas
        .iter()
        .map(|&t| density(family.clone(), &[t]))
        .collect::<Result<Vec<_>>>()?;
    Ok((densities, thetas))
}

// ---------------------------------------------------------------------------
// 1. closed-forms

/// Every closed-form distance in the catalog against its quadrature route
/// on freshly drawn parameter pairs.
fn closed_forms(seed: u64) -> Result<SuiteReport> {
    const PAIRS: usize = 1000;
    const TOL: f64 = 1e-6;
    let mut checks = Vec::new();

    let mut case = |name: &str,
                    f: &mut dyn FnMut(&mut ChaCha8Rng) -> Result<(f64, f64)>|
     -> Result<()> {
        let mut r = rng::stream(seed, &format!("closed-forms/{name}"));
        let mut worst = 0.0f64;
        for _ in 0..PAIRS {
            let (closed, quad) = f(&mut r)?;
            worst = worst.max(rel_err(closed, quad));
        }
        checks.push(check_le(
            name,
            worst,
            TOL,
            format!("{PAIRS} random parameter pairs, closed form vs quadrature"),
        ));
        Ok(())
    };

    case("l2-normal", &mut |r| {
        let fam = FamilySpec::NormalLocation { dim: 1 };
        let (ta, tb) = separated_pair(r, 1, -3.0, 3.0, 0.05);
        let (da, db) = (density(fam.clone(), &ta)?, density(fam, &tb)?);
        Ok((
            l2_distance(&da, &db, EvalRoute::ClosedForm)?,
            l2_distance(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    case("l2-uniform", &mut |r| {
        let fam = FamilySpec::UniformLocation1d;
        let (ta, tb) = separated_pair(r, 1, -1.0, 1.5, 0.05);
        let (da, db) = (density(fam.clone(), &ta)?, density(fam, &tb)?);
        Ok((
            l2_distance(&da, &db, EvalRoute::ClosedForm)?,
            l2_distance(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    case("l2-gamma-scale", &mut |r| {
        // Shape exponent k > -1/2 keeps f^2 integrable at the origin.
        let shape = r.gen_range(-0.4..3.0);
        let fam = FamilySpec::GammaScale { shape };
        let (ta, tb) = separated_pair(r, 1, 0.5, 2.5, 0.05);
        let (da, db) = (density(fam.clone(), &ta)?, density(fam, &tb)?);
        Ok((
            l2_distance(&da, &db, EvalRoute::ClosedForm)?,
            l2_distance(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    case("hellinger-normal", &mut |r| {
        let fam = FamilySpec::NormalLocation { dim: 1 };
        let (ta, tb) = separated_pair(r, 1, -3.0, 3.0, 0.05);
        let (da, db) = (density(fam.clone(), &ta)?, density(fam, &tb)?);
        Ok((
            hellinger_distance(&da, &db, EvalRoute::ClosedForm)?,
            hellinger_distance(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    case("hellinger-expfam-normal", &mut |r| {
        let fam = FamilySpec::ExponentialFamily {
            family: ExpFamily::NormalNatural { dim: 1 },
        };
        let (ta, tb) = separated_pair(r, 1, -2.0, 2.0, 0.05);
        let (da, db) = (density(fam.clone(), &ta)?, density(fam, &tb)?);
        Ok((
            hellinger_distance(&da, &db, EvalRoute::ClosedForm)?,
            hellinger_distance(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    case("hellinger-expfam-poisson", &mut |r| {
        let fam = FamilySpec::ExponentialFamily {
            family: ExpFamily::PoissonNatural,
        };
        let (ta, tb) = separated_pair(r, 1, -1.0, 1.5, 0.05);
        let (da, db) = (density(fam.clone(), &ta)?, density(fam, &tb)?);
        Ok((
            hellinger_distance(&da, &db, EvalRoute::ClosedForm)?,
            hellinger_distance(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    case("symkl-expfam-normal", &mut |r| {
        let fam = FamilySpec::ExponentialFamily {
            family: ExpFamily::NormalNatural { dim: 1 },
        };
        let (ta, tb) = separated_pair(r, 1, -2.0, 2.0, 0.05);
        let (da, db) = (density(fam.clone(), &ta)?, density(fam, &tb)?);
        Ok((
            symkl(&da, &db, EvalRoute::ClosedForm)?,
            symkl(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    case("symkl-expfam-poisson", &mut |r| {
        let fam = FamilySpec::ExponentialFamily {
            family: ExpFamily::PoissonNatural,
        };
        let (ta, tb) = separated_pair(r, 1, -1.0, 1.5, 0.05);
        let (da, db) = (density(fam.clone(), &ta)?, density(fam, &tb)?);
        Ok((
            symkl(&da, &db, EvalRoute::ClosedForm)?,
            symkl(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    case("w2-location-scale", &mut |r| {
        let base = if r.gen::<bool>() {
            BaseDensity::StdNormal
        } else {
            BaseDensity::Uniform01
        };
        let fam = FamilySpec::LocationScale1d { base };
        // theta = (location, scale); keep the scale positive.
        let (la, lb) = separated_pair(r, 1, -1.0, 1.0, 0.05);
        let sa = r.gen_range(0.5..2.0);
        let sb = r.gen_range(0.5..2.0);
        let (da, db) = (
            density(fam.clone(), &[la[0], sa])?,
            density(fam, &[lb[0], sb])?,
        );
        Ok((
            w2_distance(&da, &db, EvalRoute::ClosedForm)?,
            w2_distance(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    case("w2-time-warp", &mut |r| {
        let fam = FamilySpec::TimeWarp1d {
            base: BaseDensity::Uniform01,
        };
        let (ta, tb) = separated_pair(r, 1, 0.5, 2.0, 0.05);
        let (da, db) = (density(fam.clone(), &ta)?, density(fam, &tb)?);
        Ok((
            w2_distance(&da, &db, EvalRoute::ClosedForm)?,
            w2_distance(&da, &db, EvalRoute::Quadrature)?,
        ))
    })?;

    Ok(SuiteReport {
        suite: "closed-forms".to_string(),
        seed,
        checks,
    })
}

// ---------------------------------------------------------------------------
// 2. pca-cs-equivalence

/// Classical scaling on L2 distances and PCA on the L2 Gram matrix are the
/// same algorithm: their embeddings agree up to a rigid motion.
fn pca_cs_equivalence(seed: u64) -> Result<SuiteReport> {
    const TRIALS: usize = 50;
    const SET: usize = 8;
    const DIM: usize = 2;
    let mut r = rng::stream(seed, "pca-cs-equivalence");
    let mut worst = 0.0f64;
    for _ in 0..TRIALS {
        let fam = FamilySpec::NormalLocation { dim: 2 };
        let densities: Vec<Density> = (0..SET)
            .map(|_| {
                let theta: Vec<f64> = (0..2).map(|_| r.gen_range(-2.0..2.0)).collect();
                density(fam.clone(), &theta)
            })
            .collect::<Result<_>>()?;
        let spec = DissimilaritySpec::new(DissimilarityKind::L2);
        let delta = pairwise_matrix(&densities, &spec)?;
        let cs = classical_scaling(&delta, DIM)?;
        let gram = l2_gram_matrix(&densities, EvalRoute::Auto)?;
        let pca = pca_from_gram(delta.labels.clone(), &gram, DIM)?;
        worst = worst.max(procrustes_distance(&cs.coords, &pca.coords)?);
    }
    Ok(SuiteReport {
        suite: "pca-cs-equivalence".to_string(),
        seed,
        checks: vec![check_le(
            "procrustes-residual",
            worst,
            1e-8,
            format!(
                "{TRIALS} random sets of {SET} normal-location densities; \
                 distance-route CS vs Gram-route PCA in dimension {DIM}"
            ),
        )],
    })
}

// ---------------------------------------------------------------------------
// 3. cs-exactness

/// W2 over a normal location grid is exactly Euclidean in one dimension, so
/// classical scaling at d_e = 1 must reproduce the parameters themselves.
fn cs_exactness(seed: u64) -> Result<SuiteReport> {
    const N: usize = 100;
    let fam = FamilySpec::NormalLocation { dim: 1 };
    let (densities, thetas) = grid_densities(&fam, 0.0, 1.0, N)?;
    let spec = DissimilaritySpec::with_route(DissimilarityKind::Wasserstein2, EvalRoute::ClosedForm);
    let delta = pairwise_matrix(&densities, &spec)?;
    let emb = classical_scaling(&delta, 1)?;
    let s = stress(&emb.coords, &delta)?;
    let truth = DMatrix::from_iterator(N, 1, thetas.iter().cloned());
    let p = procrustes_distance(&emb.coords, &truth)?;
    Ok(SuiteReport {
        suite: "cs-exactness".to_string(),
        seed,
        checks: vec![
            check_le(
                "stress",
                s,
                1e-10,
                format!("W2 on a normal-location grid of {N}, classical scaling at d_e = 1; deterministic (seed unused)"),
            ),
            check_le(
                "procrustes-vs-true-parameters",
                p,
                1e-8,
                "embedding against the generating parameters, rigid alignment".to_string(),
            ),
        ],
    })
}

// ---------------------------------------------------------------------------
// 4. isomap-consistency

/// Isomap geodesics under Hellinger approach the intrinsic metric
/// (arc length |theta - theta0| / 2) as the grid refines and the
/// neighborhood radius shrinks.
fn isomap_consistency(seed: u64) -> Result<SuiteReport> {
    let schedule: [(usize, f64); 3] = [(100, 0.12), (300, 0.07), (1000, 0.04)];
    let fam = FamilySpec::NormalLocation { dim: 1 };
    let spec = DissimilaritySpec::with_route(DissimilarityKind::Hellinger, EvalRoute::ClosedForm);
    let mut errors = Vec::new();
    for &(n, radius) in &schedule {
        let (densities, thetas) = grid_densities(&fam, 0.0, 1.0, n)?;
        let delta = pairwise_matrix(&densities, &spec)?;
        let out = isomap(
            &delta,
            &IsomapConfig {
                rule: NeighborRule::Radius(radius),
                dim: 1,
                policy: DisconnectedPolicy::Fail,
            },
        )?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let intrinsic = 0.5 * (thetas[i] - thetas[j]).abs();
                let geo = out.geodesics.values[(i, j)];
                worst = worst.max((geo - intrinsic).abs() / intrinsic);
            }
        }
        errors.push(worst);
    }
    let worst_increase = errors
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let detail = format!(
        "Hellinger on normal-location grids over [0, 1]; max relative geodesic error vs \
         arc length |dtheta|/2 at (n, r) = (100, 0.12), (300, 0.07), (1000, 0.04): \
         {:.4e}, {:.4e}, {:.4e}",
        errors[0], errors[1], errors[2]
    );
    Ok(SuiteReport {
        suite: "isomap-consistency".to_string(),
        seed,
        checks: vec![
            check_le("error-monotone-decreasing", worst_increase, 0.0, detail.clone()),
            check_le("final-error", errors[2], 0.03, detail),
        ],
    })
}

// ---------------------------------------------------------------------------
// 5. uniform-blowup

/// L2 on uniform locations has no intrinsic metric: squared distance grows
/// linearly, not quadratically, so graph geodesics blow up as the radius
/// shrinks instead of stabilizing.
fn uniform_blowup(seed: u64) -> Result<SuiteReport> {
    const N: usize = 2000;
    let fam = FamilySpec::UniformLocation1d;
    let (densities, _) = grid_densities(&fam, 0.0, 1.0, N)?;
    let spec = DissimilaritySpec::with_route(DissimilarityKind::L2, EvalRoute::ClosedForm);
    let delta = pairwise_matrix(&densities, &spec)?;
    let radii = [0.08, 0.04, 0.02];
    let mut endpoint = Vec::new();
    for &r in &radii {
        let graph = radius_graph(&delta, r)?;
        let (dist, _) = dijkstra(&graph, 0);
        endpoint.push(dist[N - 1]);
    }
    let detail = format!(
        "graph distance between theta = 0 and theta = 1 on a {N}-point grid at \
         r = 0.08, 0.04, 0.02: {:.4}, {:.4}, {}; edges need |dtheta| <= r^2/2, and at \
         r = 0.02 that threshold (2.0e-4) is below the grid spacing (5.0e-4), so the graph \
         has no edges and the endpoint distance is infinite - the blow-up limit itself",
        endpoint[0], endpoint[1], endpoint[2]
    );
    Ok(SuiteReport {
        suite: "uniform-blowup".to_string(),
        seed,
        checks: vec![
            check_ge(
                "growth-halving-to-0.04",
                endpoint[1] / endpoint[0],
                1.2,
                detail.clone(),
            ),
            check_ge(
                "growth-halving-to-0.02",
                endpoint[2] / endpoint[1],
                1.2,
                detail,
            ),
        ],
    })
}

// ---------------------------------------------------------------------------
// 6. timewarp-convergence

/// Classical scaling of W2 distances between time warps converges to the
/// true W2 geometry from below as the embedding dimension grows.
fn timewarp_convergence(seed: u64) -> Result<SuiteReport> {
    const N: usize = 200;
    let mut r = rng::stream(seed, "timewarp-convergence");
    let fam = FamilySpec::TimeWarp1d {
        base: BaseDensity::Uniform01,
    };
    let densities: Vec<Density> = (0..N)
        .map(|_| density(fam.clone(), &[r.gen_range(0.5..2.0)]))
        .collect::<Result<_>>()?;
    let spec = DissimilaritySpec::with_route(DissimilarityKind::Wasserstein2, EvalRoute::ClosedForm);
    let delta = pairwise_matrix(&densities, &spec)?;
    let dims = [1usize, 2, 5, 10, 20];
    let mut max_dev = Vec::new();
    let mut min_gap = f64::INFINITY;
    for &de in &dims {
        let emb = classical_scaling(&delta, de)?;
        let d_cs = emb.pairwise_distances();
        let mut dev = 0.0f64;
        for i in 0..N {
            for j in (i + 1)..N {
                let dw = delta.values[(i, j)];
                let dc = d_cs[(i, j)];
                dev = dev.max((dc - dw).abs());
                min_gap = min_gap.min(dw * dw - dc * dc);
            }
        }
        max_dev.push(dev);
    }
    let worst_increase = max_dev
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let detail = format!(
        "{N} random time warps, W2 closed form; max |d_CS - d_W2| at d_e = 1, 2, 5, 10, 20: \
         {:.3e}, {:.3e}, {:.3e}, {:.3e}, {:.3e}",
        max_dev[0], max_dev[1], max_dev[2], max_dev[3], max_dev[4]
    );
    Ok(SuiteReport {
        suite: "timewarp-convergence".to_string(),
        seed,
        checks: vec![
            // Tiny slack: per-pair deviations are exactly nonincreasing in
            // d_e up to eigensolver roundoff.
            check_le("deviation-nonincreasing", worst_increase, 1e-12, detail.clone()),
            check_ge(
                "no-overshoot",
                min_gap,
                -1e-10,
                format!(
                    "min over pairs and dimensions of d_W2^2 - d_CS^2 (projections \
                     can only shrink distances); {detail}"
                ),
            ),
        ],
    })
}

// ---------------------------------------------------------------------------
// 7. sample-consistency

/// Sample-based estimators converge to their population values: empirical
/// W2, plug-in L2 / Hellinger on kernel density estimates, and the MMD
/// U-statistic against the quadrature RKHS distance.
fn sample_consistency(seed: u64) -> Result<SuiteReport> {
    const M: usize = 10_000;
    const SEEDS: u64 = 20;
    let fam = FamilySpec::NormalLocation { dim: 1 };
    let da = density(fam.clone(), &[0.0])?;
    let db = density(fam.clone(), &[2.0])?;

    let l2_truth = l2_distance(&da, &db, EvalRoute::ClosedForm)?;
    let hell_truth = hellinger_distance(&da, &db, EvalRoute::ClosedForm)?;
    let w2_truth = 2.0;

    let mut w2_hits = 0u64;
    let mut l2_hits = 0u64;
    let mut hell_hits = 0u64;
    let kde = KdeConfig::default();
    for s in 0..SEEDS {
        let xa = da.sample_set(M, seed, &format!("sample-consistency/a/{s}"))?;
        let xb = db.sample_set(M, seed, &format!("sample-consistency/b/{s}"))?;
        if rel_err(w2_truth, empirical_w2_1d(&xa, &xb)?) <= 0.05 {
            w2_hits += 1;
        }
        if rel_err(l2_truth, plugin_distance(&xa, &xb, PluginKind::L2, &kde)?) <= 0.10 {
            l2_hits += 1;
        }
        if rel_err(
            hell_truth,
            plugin_distance(&xa, &xb, PluginKind::Hellinger, &kde)?,
        ) <= 0.10
        {
            hell_hits += 1;
        }
    }

    let kernel = KernelSpec::Gaussian { bandwidth: 0.5 };
    let rkhs_sq = rkhs_distance(&da, &db, &kernel, EvalRoute::Quadrature)?.powi(2);
    let xa = da.sample_set(M, seed, "sample-consistency/mmd/a")?;
    let xb = db.sample_set(M, seed, "sample-consistency/mmd/b")?;
    let mmd = mmd_ustat(&xa, &xb, &kernel)?;
    let mmd_err = rel_err(rkhs_sq, mmd);

    let protocol = format!("N(0,1) vs N(2,1), m = {M}, {SEEDS} independent sample streams");
    Ok(SuiteReport {
        suite: "sample-consistency".to_string(),
        seed,
        checks: vec![
            check_ge(
                "empirical-w2-hits",
                w2_hits as f64,
                18.0,
                format!("{protocol}; hits = seeds within 5% of the true W2 = 2"),
            ),
            check_ge(
                "plugin-l2-hits",
                l2_hits as f64,
                18.0,
                format!("{protocol}; hits = seeds within 10% of the closed form {l2_truth:.6}"),
            ),
            check_ge(
                "plugin-hellinger-hits",
                hell_hits as f64,
                18.0,
                format!("{protocol}; hits = seeds within 10% of the closed form {hell_truth:.6}"),
            ),
            check_le(
                "mmd-vs-quadrature-rkhs",
                mmd_err,
                0.05,
                format!(
                    "single run at m = {M}, Gaussian kernel bandwidth 0.5; U-statistic vs \
                     squared quadrature RKHS distance {rkhs_sq:.6}"
                ),
            ),
        ],
    })
}

// ---------------------------------------------------------------------------
// 8. tensor-probes

/// Finite-difference ratio probes recover the analytic metric tensors:
/// Hellinger carries a quarter of the Fisher information, L2 its own
/// information matrix, and W2 is Euclidean on location families.
fn tensor_probes(seed: u64) -> Result<SuiteReport> {
    let hellinger = DissimilaritySpec::new(DissimilarityKind::Hellinger);
    let l2 = DissimilaritySpec::new(DissimilarityKind::L2);
    let w2 = DissimilaritySpec::new(DissimilarityKind::Wasserstein2);

    // Hellinger vs Fisher/4 on normal and Poisson natural families.
    let mut hell_worst = 0.0f64;
    let normal_nat = FamilySpec::ExponentialFamily {
        family: ExpFamily::NormalNatural { dim: 1 },
    };
    let poisson = FamilySpec::ExponentialFamily {
        family: ExpFamily::PoissonNatural,
    };
    for (fam, thetas) in [
        (&normal_nat, [[-0.8], [0.3], [1.1]]),
        (&poisson, [[-0.5], [0.2], [0.9]]),
    ] {
        for theta in &thetas {
            let probe = intrinsic_ratio_probe(&hellinger, fam, theta, &[])?;
            let quarter_fisher = fisher_information(fam, theta, EvalRoute::ClosedForm)? * 0.25;
            hell_worst = hell_worst.max(matrix_rel_err(&quarter_fisher, &probe.tensor));
        }
    }

    // L2 vs the L2 information matrix on normal locations (dim 2 exercises
    // the polarization path for off-diagonal entries).
    let mut l2_worst = 0.0f64;
    let norm1 = FamilySpec::NormalLocation { dim: 1 };
    let probe = intrinsic_ratio_probe(&l2, &norm1, &[0.4], &[])?;
    let info = l2_information(&norm1, &[0.4], EvalRoute::ClosedForm)?;
    l2_worst = l2_worst.max(matrix_rel_err(&info, &probe.tensor));
    let norm2 = FamilySpec::NormalLocation { dim: 2 };
    let probe = intrinsic_ratio_probe(&l2, &norm2, &[0.2, -0.3], &[])?;
    let info = l2_information(&norm2, &[0.2, -0.3], EvalRoute::ClosedForm)?;
    l2_worst = l2_worst.max(matrix_rel_err(&info, &probe.tensor));

    // W2 on pure location families is exactly Euclidean: tensor = 1.
    let mut w2_worst = 0.0f64;
    for (fam, theta) in [
        (FamilySpec::NormalLocation { dim: 1 }, [0.1]),
        (FamilySpec::UniformLocation1d, [0.3]),
    ] {
        let probe = intrinsic_ratio_probe(&w2, &fam, &theta, &[])?;
        w2_worst = w2_worst.max((probe.tensor[(0, 0)] - 1.0).abs());
    }

    Ok(SuiteReport {
        suite: "tensor-probes".to_string(),
        seed,
        checks: vec![
            check_le(
                "hellinger-vs-quarter-fisher",
                hell_worst,
                1e-3,
                "ratio probe vs Fisher/4 at three interior points each of the natural \
                 normal and Poisson families; deterministic (seed unused)"
                    .to_string(),
            ),
            check_le(
                "l2-vs-l2-information",
                l2_worst,
                1e-3,
                "ratio probe vs the closed-form L2 information on normal locations in \
                 dimensions 1 and 2"
                    .to_string(),
            ),
            check_le(
                "w2-location-tensor-is-identity",
                w2_worst,
                1e-6,
                "ratio probe on normal and uniform location families".to_string(),
            ),
        ],
    })
}

// ---------------------------------------------------------------------------
// 9. oracle-equivalence

/// Fast production algorithms against independent brute-force oracles.
fn oracle_equivalence(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();

    // (a) Per-source Dijkstra vs Floyd-Warshall, exactly. Dissimilarities
    // are dyadic rationals (multiples of 1/64), so every path sum is exact
    // in floating point and both algorithms must agree bit for bit,
    // including the infinity pattern across disconnected components.
    {
        const GRAPHS: usize = 20;
        const N: usize = 50;
        let mut r = rng::stream(seed, "oracle-equivalence/shortest-paths");
        let mut mismatches = 0.0f64;
        for g in 0..GRAPHS {
            let mut values = DMatrix::zeros(N, N);
            for i in 0..N {
                for j in (i + 1)..N {
                    let v = r.gen_range(1..=128) as f64 / 64.0;
                    values[(i, j)] = v;
                    values[(j, i)] = v;
                }
            }
            let labels = (0..N).map(|i| format!("v{i}")).collect();
            let delta = DissimilarityMatrix::new(labels, values)?;
            // A radius around the lower quartile keeps some pairs
            // unreachable in most draws.
            let graph = radius_graph(&delta, 0.75)?;
            let (fast, _) = all_pairs_shortest_paths(&graph);
            let slow = floyd_warshall(&graph);
            for i in 0..N {
                for j in 0..N {
                    if fast[(i, j)].to_bits() != slow[(i, j)].to_bits() {
                        mismatches += 1.0;
                    }
                }
            }
            let _ = g;
        }
        checks.push(check_le(
            "dijkstra-vs-floyd-warshall",
            mismatches,
            0.0,
            format!(
                "{GRAPHS} random graphs on {N} vertices with dyadic edge weights; \
                 bit-exact agreement required, disconnected pairs included"
            ),
        ));
    }

    // (b) Merged-quantile empirical W2 vs brute-force optimal assignment
    // over all m! pairings, for every sample size the oracle can afford.
    {
        let mut r = rng::stream(seed, "oracle-equivalence/empirical-w2");
        let mut worst = 0.0f64;
        for m in 2..=5usize {
            for t in 0..30 {
                let xa: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
                let xb: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
                let sa = SampleSet::new(format!("a{m}x{t}"), 1, 0, xa.clone())?;
                let sb = SampleSet::new(format!("b{m}x{t}"), 1, 0, xb.clone())?;
                let fast = empirical_w2_1d(&sa, &sb)?;
                let slow = brute_force_w2(&xa, &xb);
                worst = worst.max((fast - slow).abs());
            }
        }
        checks.push(check_le(
            "empirical-w2-vs-assignment",
            worst,
            1e-12,
            "30 random pairs at each size m = 2..5; merged-quantile value vs the \
             minimum over all m! assignments"
                .to_string(),
        ));
    }

    // (c) Classical scaling minimizes strain: no random configuration of
    // the same rank may beat it.
    {
        let mut r = rng::stream(seed, "oracle-equivalence/strain");
        let mut worst_gap = f64::NEG_INFINITY;
        let fam = FamilySpec::NormalLocation { dim: 1 };
        let (hell_densities, _) = grid_densities(&fam, 0.0, 2.0, 20)?;
        let hell = pairwise_matrix(
            &hell_densities,
            &DissimilaritySpec::new(DissimilarityKind::Hellinger),
        )?;
        let euclid = {
            let mut pts = DMatrix::zeros(20, 3);
            for i in 0..20 {
                for k in 0..3 {
                    pts[(i, k)] = r.gen_range(-1.0..1.0);
                }
            }
            let mut values = DMatrix::zeros(20, 20);
            for i in 0..20 {
                for j in (i + 1)..20 {
                    let d = (pts.row(i) - pts.row(j)).norm();
                    values[(i, j)] = d;
                    values[(j, i)] = d;
                }
            }
            DissimilarityMatrix::new((0..20).map(|i| format!("p{i}")).collect(), values)?
        };
        for (delta, dim) in [(&hell, 2usize), (&euclid, 3usize)] {
            let emb = classical_scaling(delta, dim)?;
            let cs_strain = strain(&emb.coords, delta)?;
            let scale = (emb.coords.iter().map(|c| c * c).sum::<f64>()
                / (emb.coords.nrows() * emb.coords.ncols()) as f64)
                .sqrt()
                .max(1e-6);
            for k in 0..100 {
                // Half fresh random configurations, half perturbations of
                // the optimum (a sharper local test).
                let mut cand = DMatrix::zeros(delta.n(), dim);
                for i in 0..delta.n() {
                    for c in 0..dim {
                        cand[(i, c)] = if k < 50 {
                            r.gen_range(-2.0 * scale..2.0 * scale)
                        } else {
                            emb.coords[(i, c)] + r.gen_range(-0.1 * scale..0.1 * scale)
                        };
                    }
                }
                let cand_strain = strain(&cand, delta)?;
                worst_gap = worst_gap.max(cs_strain - cand_strain);
            }
        }
        checks.push(check_le(
            "cs-strain-is-minimal",
            worst_gap,
            0.0,
            "max over 2 instances x 100 candidate configurations of \
             strain(CS) - strain(candidate); positive would mean a candidate beat \
             classical scaling"
                .to_string(),
        ));
    }

    Ok(SuiteReport {
        suite: "oracle-equivalence".to_string(),
        seed,
        checks,
    })
}

/// Minimum over all assignments of root-mean-square paired distance;
/// factorial cost, usable only for tiny m.
fn brute_force_w2(xa: &[f64], xb: &[f64]) -> f64 {
    fn permute(perm: &mut Vec<usize>, used: &mut Vec<bool>, xa: &[f64], xb: &[f64], best: &mut f64) {
        if perm.len() == xa.len() {
            let ss: f64 = perm
                .iter()
                .enumerate()
                .map(|(i, &j)| (xa[i] - xb[j]).powi(2))
                .sum();
            *best = best.min((ss / xa.len() as f64).sqrt());
            return;
        }
        for j in 0..xb.len() {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                permute(perm, used, xa, xb, best);
                perm.pop();
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    permute(
        &mut Vec::new(),
        &mut vec![false; xb.len()],
        xa,
        xb,
        &mut best,
    );
    best
}

// ---------------------------------------------------------------------------
// 10. schoenberg

/// The Schoenberg criterion: Euclidean configurations pass with the right
/// rank; a non-embeddable dissimilarity is flagged.
fn schoenberg(seed: u64) -> Result<SuiteReport> {
    const CONFIGS: usize = 10;
    const N: usize = 20;
    const DIM: usize = 3;
    let mut r = rng::stream(seed, "schoenberg");
    let mut min_scaled_eig = f64::INFINITY;
    let mut max_rank = 0usize;
    for _ in 0..CONFIGS {
        let mut pts = DMatrix::zeros(N, DIM);
        for i in 0..N {
            for k in 0..DIM {
                pts[(i, k)] = r.gen_range(-1.0..1.0);
            }
        }
        let mut values = DMatrix::zeros(N, N);
        for i in 0..N {
            for j in (i + 1)..N {
                let d = (pts.row(i) - pts.row(j)).norm();
                values[(i, j)] = d;
                values[(j, i)] = d;
            }
        }
        let delta =
            DissimilarityMatrix::new((0..N).map(|i| format!("p{i}")).collect(), values)?;
        let report = schoenberg_check(&delta)?;
        min_scaled_eig = min_scaled_eig.min(report.min_eigenvalue / report.scale);
        max_rank = max_rank.max(report.positive_rank);
    }

    // Four points with square sides 1 and both "diagonals" stretched to
    // 1.9 > sqrt(2): satisfies the triangle inequality but embeds in no
    // Euclidean space.
    let stretched = DissimilarityMatrix::new(
        vec!["a".into(), "b".into(), "c".into(), "d".into()],
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 1.9, 1.0, //
                1.0, 0.0, 1.0, 1.9, //
                1.9, 1.0, 0.0, 1.0, //
                1.0, 1.9, 1.0, 0.0,
            ],
        ),
    )?;
    let counter = schoenberg_check(&stretched)?;

    Ok(SuiteReport {
        suite: "schoenberg".to_string(),
        seed,
        checks: vec![
            check_ge(
                "euclidean-configs-psd",
                min_scaled_eig,
                -1e-8,
                format!(
                    "{CONFIGS} random configurations of {N} points in R^{DIM}; smallest \
                     double-centered eigenvalue relative to the spectral radius"
                ),
            ),
            check_le(
                "euclidean-configs-rank",
                max_rank as f64,
                DIM as f64,
                "numerical rank of the double-centered matrix never exceeds the ambient dimension"
                    .to_string(),
            ),
            check_le(
                "counterexample-flagged",
                counter.min_eigenvalue / counter.scale,
                -1e-8,
                format!(
                    "stretched-diagonal four-point metric is declared non-embeddable \
                     (embeddable = {})",
                    counter.embeddable
                ),
            ),
        ],
    })
}

// ---------------------------------------------------------------------------
