//! Randomized invariant checks: properties that must hold for *every*
//! admissible input, probed over generated parameters rather than fixtures.

use fmds::estimators::empirical_w2_1d;
use fmds::mds::{classical_scaling, procrustes_distance, schoenberg_check, stress};
use fmds::metrics::{
    pairwise_matrix, DissimilarityKind, DissimilarityMatrix, DissimilaritySpec, EvalRoute,
    MetricCheck,
};
use fmds::models::{BaseDensity, Density, FamilySpec, SampleSet};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn density(family: FamilySpec, theta: Vec<f64>) -> Density {
    Density::new(family, theta).expect("generated parameters are admissible")
}

/// One-dimensional continuous families with a generated parameter vector.
/// Ranges stay well inside each family's parameter space so the properties
/// test the invariants, not boundary behavior.
fn continuous_1d() -> impl Strategy<Value = Density> {
    prop_oneof![
        (-3.0..3.0f64).prop_map(|t| density(FamilySpec::NormalLocation { dim: 1 }, vec![t])),
        (-3.0..3.0f64).prop_map(|t| density(FamilySpec::UniformLocation1d, vec![t])),
        ((0.5..4.0f64), (0.2..3.0f64))
            .prop_map(|(shape, scale)| density(FamilySpec::GammaScale { shape }, vec![scale])),
        ((-2.0..2.0f64), (0.3..2.5f64)).prop_map(|(l, s)| {
            density(
                FamilySpec::LocationScale1d {
                    base: BaseDensity::StdNormal,
                },
                vec![l, s],
            )
        }),
        ((-2.0..2.0f64), (0.3..2.5f64)).prop_map(|(l, s)| {
            density(
                FamilySpec::LocationScale1d {
                    base: BaseDensity::Triweight,
                },
                vec![l, s],
            )
        }),
        (0.4..2.5f64).prop_map(|a| {
            density(
                FamilySpec::TimeWarp1d {
                    base: BaseDensity::Uniform01,
                },
                vec![a],
            )
        }),
    ]
}

proptest! {
    /// The quantile is the inverse of the cdf across every continuous
    /// one-dimensional family. Closed-form branches are exact; the
    /// gamma-scale quantile is a numeric inversion, hence the tolerance.
    #[test]
    fn quantile_inverts_cdf(d in continuous_1d(), u in 0.001..0.999f64) {
        let x = d.quantile1(u).unwrap();
        let back = d.cdf1(x).unwrap();
        prop_assert!(
            (back - u).abs() < 1e-8,
            "{:?}: cdf(quantile({u})) = {back}",
            d.family()
        );
    }

    /// Poisson quantiles satisfy the discrete definition: the smallest
    /// integer whose cdf reaches u.
    #[test]
    fn poisson_quantile_is_smallest_adequate_integer(
        theta in -1.0..2.0f64,
        u in 0.001..0.999f64,
    ) {
        let d = density(
            FamilySpec::ExponentialFamily {
                family: fmds::models::ExpFamily::PoissonNatural,
            },
            vec![theta],
        );
        let q = d.quantile1(u).unwrap();
        prop_assert!(q >= 0.0 && q.fract() == 0.0);
        prop_assert!(d.cdf1(q).unwrap() >= u);
        if q > 0.0 {
            prop_assert!(d.cdf1(q - 1.0).unwrap() < u);
        }
    }
}

fn metric_specs() -> Vec<DissimilaritySpec> {
    [
        DissimilarityKind::L2,
        DissimilarityKind::Hellinger,
        DissimilarityKind::Wasserstein2,
    ]
    .map(DissimilaritySpec::new)
    .to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every metric produces a symmetric, nonnegative, zero-diagonal matrix
    /// satisfying the triangle inequality on normal-location collections.
    #[test]
    fn metric_matrices_satisfy_the_axioms(
        thetas in proptest::collection::vec(-3.0..3.0f64, 3..7),
    ) {
        let densities: Vec<Density> = thetas
            .iter()
            .map(|&t| density(FamilySpec::NormalLocation { dim: 1 }, vec![t]))
            .collect();
        for spec in metric_specs() {
            let mut m = pairwise_matrix(&densities, &spec).unwrap();
            let n = m.n();
            for i in 0..n {
                prop_assert_eq!(m.values[(i, i)], 0.0);
                for j in 0..n {
                    prop_assert_eq!(m.values[(i, j)], m.values[(j, i)]);
                    prop_assert!(m.values[(i, j)] >= 0.0);
                }
            }
            prop_assert_eq!(m.scan_triangle(false), MetricCheck::Satisfied);
        }
    }

    /// The quadrature route must agree with the closed form; this is the
    /// randomized counterpart of the fixed oracle values in the unit tests.
    #[test]
    fn hellinger_quadrature_matches_closed_form(a in -2.0..2.0f64, gap in 0.05..3.0f64) {
        let x = density(FamilySpec::NormalLocation { dim: 1 }, vec![a]);
        let y = density(FamilySpec::NormalLocation { dim: 1 }, vec![a + gap]);
        let closed = fmds::metrics::dissimilarity(
            &x,
            &y,
            &DissimilaritySpec::with_route(DissimilarityKind::Hellinger, EvalRoute::ClosedForm),
        )
        .unwrap();
        let quad = fmds::metrics::dissimilarity(
            &x,
            &y,
            &DissimilaritySpec::with_route(DissimilarityKind::Hellinger, EvalRoute::Quadrature),
        )
        .unwrap();
        prop_assert!((closed - quad).abs() < 1e-8, "closed {closed} vs quadrature {quad}");
    }

    /// Distance matrices of genuinely Euclidean configurations pass the
    /// Schoenberg test and are reproduced exactly by classical scaling.
    #[test]
    fn euclidean_configurations_embed_exactly(
        flat in proptest::collection::vec(-5.0..5.0f64, 8..24),
        dim in 1..4usize,
    ) {
        let n = flat.len() / dim;
        prop_assume!(n >= dim + 2);
        let coords = DMatrix::from_row_slice(n, dim, &flat[..n * dim]);
        let mut values = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                values[(i, j)] = (coords.row(i) - coords.row(j)).norm();
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        let delta = DissimilarityMatrix::new(labels, values).unwrap();

        let report = schoenberg_check(&delta).unwrap();
        prop_assert!(report.embeddable, "min eigenvalue {}", report.min_eigenvalue);

        let embedding = classical_scaling(&delta, dim).unwrap();
        prop_assert!(stress(&embedding.coords, &delta).unwrap() < 1e-7);
        prop_assert!(procrustes_distance(&embedding.coords, &coords).unwrap() < 1e-6);
    }

    /// Empirical 1-d W2: zero on identical samples, symmetric, translation
    /// invariant when both samples shift, and never below the mean gap.
    #[test]
    fn empirical_w2_basic_laws(
        xs in proptest::collection::vec(-10.0..10.0f64, 2..40),
        ys in proptest::collection::vec(-10.0..10.0f64, 2..40),
        shift in -5.0..5.0f64,
    ) {
        let set = |id: &str, data: &[f64]| {
            SampleSet::new(id.to_string(), 1, 0, data.to_vec()).unwrap()
        };
        let (a, b) = (set("a", &xs), set("b", &ys));
        prop_assert!(empirical_w2_1d(&a, &a).unwrap() < 1e-12);

        let d_ab = empirical_w2_1d(&a, &b).unwrap();
        let d_ba = empirical_w2_1d(&b, &a).unwrap();
        prop_assert!((d_ab - d_ba).abs() < 1e-12);

        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        prop_assert!(d_ab >= (mean(&xs) - mean(&ys)).abs() - 1e-9);

        let xs_s: Vec<f64> = xs.iter().map(|v| v + shift).collect();
        let ys_s: Vec<f64> = ys.iter().map(|v| v + shift).collect();
        let d_shifted = empirical_w2_1d(&set("a", &xs_s), &set("b", &ys_s)).unwrap();
        prop_assert!((d_ab - d_shifted).abs() < 1e-9);
    }
}

proptest! {
    /// Named streams decouple draws: the same (seed, name) replays exactly,
    /// different names give independent-looking sequences.
    #[test]
    fn rng_streams_replay_and_separate(seed in any::<u64>()) {
        use rand::Rng;
        let draw = |name: &str| -> Vec<u64> {
            let mut rng = fmds::rng::stream(seed, name);
            (0..8).map(|_| rng.gen()).collect()
        };
        prop_assert_eq!(draw("alpha"), draw("alpha"));
        prop_assert_ne!(draw("alpha"), draw("beta"));
    }
}
