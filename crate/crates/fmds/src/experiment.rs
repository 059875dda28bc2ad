//! JSON-described experiments: a parameter design over a family, a
//! dissimilarity, and a data mode (exact densities or seeded samples)
//! turn into a pairwise matrix; an embedding config turns a matrix into
//! coordinates. The CLI is a thin shell over this module.
//!
//! Everything is reproducible from the config alone: parameter draws and
//! samples use named ChaCha streams derived from the config seed, so the
//! same JSON always yields byte-identical matrices regardless of thread
//! count.

use crate::error::{Error, Result};
use crate::estimators::{pairwise_matrix_samples, EstimatorConfig};
use crate::geometry::intrinsic_ratio_probe;
use crate::isomap::{isomap, DisconnectedPolicy, GraphDiagnostics, IsomapConfig, NeighborRule};
use crate::mds::{classical_scaling, Embedding};
use crate::metrics::{pairwise_matrix_labeled, DissimilarityMatrix, DissimilaritySpec};
use crate::models::{density, Density, FamilySpec, SampleSet};
use crate::rng;
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Parameter designs

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSpec {
    /// Product grid: `counts[k]` evenly spaced values on [lo[k], hi[k]]
    /// per axis (endpoints included; a count of 1 pins the axis at lo).
    Grid {
        lo: Vec<f64>,
        hi: Vec<f64>,
        counts: Vec<usize>,
    },
    /// `count` draws uniform in the box, from the "thetas" stream of the
    /// experiment seed.
    Random {
        count: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Explicit { values: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: FamilySpec,
    pub thetas: ThetaSpec,
}

/// Deterministic label for a family member: family name plus the
/// parameter vector, semicolon-separated (commas are reserved by CSV).
pub fn theta_label(family: &FamilySpec, theta: &[f64]) -> String {
    let parts: Vec<String> = theta.iter().map(|t| format!("{t}")).collect();
    format!("{}[{}]", family.name(), parts.join(";"))
}

pub fn expand_thetas(model: &ModelConfig, seed: u64) -> Result<Vec<Vec<f64>>> {
    let p = model.family.param_dim();
    let check_box = |lo: &[f64], hi: &[f64]| -> Result<()> {
        if lo.len() != p || hi.len() != p {
            return Err(Error::invalid(format!(
                "parameter box has {} / {} axes, family {} has {p} parameters",
                lo.len(),
                hi.len(),
                model.family.name()
            )));
        }
        for k in 0..p {
            if !(lo[k] <= hi[k]) || !lo[k].is_finite() || !hi[k].is_finite() {
                return Err(Error::invalid(format!(
                    "axis {k}: [{}, {}] is not a finite interval",
                    lo[k], hi[k]
                )));
            }
        }
        Ok(())
    };
    let thetas = match &model.thetas {
        ThetaSpec::Grid { lo, hi, counts } => {
            check_box(lo, hi)?;
            if counts.len() != p {
                return Err(Error::invalid(format!(
                    "grid has {} count entries, family has {p} parameters",
                    counts.len()
                )));
            }
            if counts.contains(&0) {
                return Err(Error::invalid("grid counts must be at least 1"));
            }
            let axes: Vec<Vec<f64>> = (0..p)
                .map(|k| {
                    let c = counts[k];
                    (0..c)
                        .map(|i| {
                            if c == 1 {
                                lo[k]
                            } else {
                                lo[k] + (hi[k] - lo[k]) * i as f64 / (c - 1) as f64
                            }
                        })
                        .collect()
                })
                .collect();
            let total: usize = counts.iter().product();
            let mut out = Vec::with_capacity(total);
            for flat in 0..total {
                let mut rem = flat;
                let mut theta = vec![0.0; p];
                // Last axis varies fastest.
                for k in (0..p).rev() {
                    theta[k] = axes[k][rem % counts[k]];
                    rem /= counts[k];
                }
                out.push(theta);
            }
            out
        }
        ThetaSpec::Random { count, lo, hi } => {
            check_box(lo, hi)?;
            if *count == 0 {
                return Err(Error::invalid("random design needs count >= 1"));
            }
            let mut r = rng::stream(seed, "thetas");
            (0..*count)
                .map(|_| {
                    (0..p)
                        .map(|k| {
                            if lo[k] == hi[k] {
                                lo[k]
                            } else {
                                r.gen_range(lo[k]..hi[k])
                            }
                        })
                        .collect()
                })
                .collect()
        }
        ThetaSpec::Explicit { values } => {
            if values.is_empty() {
                return Err(Error::invalid("explicit design lists no parameter points"));
            }
            values.clone()
        }
    };
    for (i, t) in thetas.iter().enumerate() {
        model.family.check_theta(t).map_err(|e| {
            Error::invalid(format!("design point {i} ({t:?}) is invalid: {e}"))
        })?;
    }
    Ok(thetas)
}

/// Materialize the design into densities plus CSV-safe labels.
pub fn densities_from(model: &ModelConfig, seed: u64) -> Result<(Vec<Density>, Vec<String>)> {
    let thetas = expand_thetas(model, seed)?;
    let mut labels = Vec::with_capacity(thetas.len());
    let mut densities = Vec::with_capacity(thetas.len());
    for t in &thetas {
        labels.push(theta_label(&model.family, t));
        densities.push(density(model.family.clone(), t)?);
    }
    Ok((densities, labels))
}

// ---------------------------------------------------------------------------
// Experiments

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DataMode {
    /// Exact densities: dissimilarities by closed form or quadrature.
    #[default]
    Population,
    /// `m` observations per density, seeded from the experiment seed and
    /// the member's label; dissimilarities by the matching estimator.
    Sample { m: usize },
}

/// External oracles an experiment can be checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleSpec {
    /// The intrinsic metric induced by the dissimilarity: the local
    /// quadratic tensor is probed at each design point and integrated
    /// along the parameter axis (one-parameter designs only).
    Intrinsic,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub dissimilarity: DissimilaritySpec,
    #[serde(default)]
    pub mode: DataMode,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Embedding stage, when the experiment goes past the distance matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<EmbedConfig>,
    /// Directory for artifacts; frontends may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<String>,
    /// Report the covering radius of the design (largest distance from a
    /// member to its nearest other member).
    #[serde(default, skip_serializing_if = "is_false")]
    pub covering_radius_report: bool,
    /// Emit a per-pair error table against this oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::parse(format!("experiment config: {inner}"))
            } else {
                Error::parse(format!("experiment config field `{path}`: {inner}"))
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

/// Draw the per-member samples of a sample-mode experiment.
pub fn draw_samples(config: &ExperimentConfig, m: usize) -> Result<Vec<SampleSet>> {
    let (densities, labels) = densities_from(&config.model, config.seed)?;
    densities
        .iter()
        .zip(&labels)
        .map(|(d, label)| d.sample_set(m, config.seed, label))
        .collect()
}

/// The full experiment: design -> (densities | samples) -> pairwise matrix.
pub fn run_distances(config: &ExperimentConfig) -> Result<DissimilarityMatrix> {
    match config.mode {
        DataMode::Population => {
            let (densities, labels) = densities_from(&config.model, config.seed)?;
            pairwise_matrix_labeled(&densities, &config.dissimilarity, labels)
        }
        DataMode::Sample { m } => {
            if m < 2 {
                return Err(Error::invalid("sample mode needs m >= 2 observations"));
            }
            let samples = draw_samples(config, m)?;
            pairwise_matrix_samples(&samples, &config.dissimilarity, &config.estimator)
        }
    }
}

// ---------------------------------------------------------------------------
// Embeddings

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EmbedMethod {
    ClassicalScaling,
    Isomap {
        rule: NeighborRule,
        #[serde(default)]
        policy: DisconnectedPolicy,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    #[serde(flatten)]
    pub method: EmbedMethod,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct EmbedOutcome {
    pub embedding: Embedding,
    /// Isomap only: the geodesic matrix actually embedded.
    pub geodesics: Option<DissimilarityMatrix>,
    pub diagnostics: Option<GraphDiagnostics>,
    /// Original indices kept (Isomap may drop small components on request).
    pub retained: Vec<usize>,
}

pub fn run_embed(delta: &DissimilarityMatrix, config: &EmbedConfig) -> Result<EmbedOutcome> {
    match config.method {
        EmbedMethod::ClassicalScaling => Ok(EmbedOutcome {
            embedding: classical_scaling(delta, config.dim)?,
            geodesics: None,
            diagnostics: None,
            retained: (0..delta.n()).collect(),
        }),
        EmbedMethod::Isomap { rule, policy } => {
            let out = isomap(
                delta,
                &IsomapConfig {
                    rule,
                    dim: config.dim,
                    policy,
                },
            )?;
            Ok(EmbedOutcome {
                embedding: out.embedding,
                geodesics: Some(out.geodesics),
                diagnostics: Some(out.diagnostics),
                retained: out.retained,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Oracles

/// Per-pair intrinsic-distance oracle for one-parameter designs: the local
/// quadratic tensor of the dissimilarity is probed at each design point and
/// sqrt(a) integrated by the trapezoid rule along the parameter axis, so
/// the oracle's own accuracy tracks the design spacing. Multi-parameter
/// designs are refused.
pub fn intrinsic_oracle_matrix(config: &ExperimentConfig) -> Result<DMatrix<f64>> {
    let family = &config.model.family;
    if family.param_dim() != 1 {
        return Err(Error::unsupported(
            "the intrinsic oracle is implemented for one-parameter designs only",
        ));
    }
    let thetas = expand_thetas(&config.model, config.seed)?;
    let n = thetas.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| thetas[i][0].total_cmp(&thetas[j][0]));
    let mut speed = vec![0.0; n];
    for i in 0..n {
        let probe = intrinsic_ratio_probe(&config.dissimilarity, family, &thetas[i], &[])?;
        speed[i] = probe.tensor[(0, 0)].max(0.0).sqrt();
    }
    // Arc-length positions at the sorted design points.
    let mut pos = vec![0.0; n];
    let mut cum = 0.0;
    pos[order[0]] = 0.0;
    for w in 1..n {
        let (i, j) = (order[w - 1], order[w]);
        cum += 0.5 * (speed[i] + speed[j]) * (thetas[j][0] - thetas[i][0]);
        pos[j] = cum;
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (pos[i] - pos[j]).abs();
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
