//! Minimal end-to-end run: configure a density collection, compute the
//! pairwise matrix, embed it, and print a summary.
//!
//! ```sh
//! cargo run -p fmds --example embed_grid
//! ```

use fmds::experiment::{run_distances, run_embed, ExperimentConfig};
use fmds::metrics::{dissimilarity, DissimilarityKind, DissimilaritySpec};
use fmds::models::{Density, FamilySpec};

fn main() -> fmds::Result<()> {
    // Single pairwise value: W2 between unit normals is the location gap.
    let a = Density::new(FamilySpec::NormalLocation { dim: 1 }, vec![0.0])?;
    let b = Density::new(FamilySpec::NormalLocation { dim: 1 }, vec![2.0])?;
    let spec = DissimilaritySpec::new(DissimilarityKind::Wasserstein2);
    assert_eq!(dissimilarity(&a, &b, &spec)?, 2.0);

    // Whole experiment from one config document.
    let config = ExperimentConfig::from_json(
        r#"{
            "seed": 7,
            "model": {
                "family": {"kind": "normal_location", "params": {"dim": 1}},
                "thetas": {"kind": "grid", "lo": [0.0], "hi": [1.0], "counts": [40]}
            },
            "dissimilarity": {"metric": "hellinger", "route": "auto"},
            "mode": {"mode": "population"},
            "method": {"method": "isomap", "rule": {"radius": 0.1}, "dim": 1}
        }"#,
    )?;
    let delta = run_distances(&config)?;
    let embed = config.method.expect("config has a method section");
    let outcome = run_embed(&delta, &embed)?;
    println!(
        "{} densities -> {} points in R^{}",
        delta.n(),
        outcome.embedding.n(),
        outcome.embedding.dim()
    );
    Ok(())
}
