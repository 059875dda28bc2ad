//! Command-line harness: reproducible experiments over density collections.
//!
//! `fmds distances` turns a JSON experiment config into a pairwise
//! dissimilarity matrix, `fmds embed` turns a config or a saved matrix into
//! coordinates plus a machine-readable report, `fmds suite` runs the named
//! verification suites, and `fmds families` lists the built-in density
//! families. Every artifact is reproducible from (config, seed): reports
//! are byte-identical across runs except for their wall-clock field.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fmds::experiment::{
    draw_samples, intrinsic_oracle_matrix, run_distances, run_embed, DataMode, EmbedConfig,
    EmbedMethod, ExperimentConfig, OracleSpec,
};
use fmds::io::{self, EmbeddingReport};
use fmds::isomap::{DisconnectedPolicy, GraphDiagnostics, NeighborRule};
use fmds::metrics::{DissimilarityMatrix, MetricCheck};
use fmds::suites::{run_suite, SUITE_NAMES};
use fmds::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fmds",
    version,
    about = "Embed collections of probability densities: distance matrices, \
             classical scaling, Isomap, and verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the pairwise dissimilarity matrix of a configured experiment
    Distances {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `outputs`; default ".")
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed a configured experiment, or a saved matrix, into coordinates
    Embed {
        /// Experiment config (JSON) with a `method` section
        #[arg(long, conflicts_with_all = ["matrix", "method", "dim", "radius", "knn"])]
        config: Option<PathBuf>,
        /// Saved dissimilarity matrix (CSV) to embed directly
        #[arg(long, requires = "method", requires = "dim")]
        matrix: Option<PathBuf>,
        /// Embedding method for --matrix
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Embedding dimension for --matrix
        #[arg(long)]
        dim: Option<usize>,
        /// Neighborhood radius (isomap)
        #[arg(long, conflicts_with = "knn")]
        radius: Option<f64>,
        /// Neighbor count for a k-nearest graph (isomap)
        #[arg(long)]
        knn: Option<usize>,
        /// What to do when the neighborhood graph is disconnected
        #[arg(long, value_enum, default_value_t = PolicyArg::Fail)]
        policy: PolicyArg,
        /// Output directory (default ".")
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named verification suite ("all" runs the whole catalog)
    Suite {
        /// Suite name, or "all"
        name: String,
        /// Root seed for the suite's random draws
        #[arg(long, default_value_t = 20260826)]
        seed: u64,
        /// Directory for per-suite report.json files
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in density families and their parameter schemas
    Families,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Classical scaling of the matrix as-is
    Cs,
    /// Neighborhood graph + geodesics, then classical scaling
    Isomap,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    /// Refuse to embed a disconnected graph
    Fail,
    /// Embed the largest component, reporting what was dropped
    LargestComponent,
}

impl From<PolicyArg> for DisconnectedPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Fail => DisconnectedPolicy::Fail,
            PolicyArg::LargestComponent => DisconnectedPolicy::LargestComponent,
        }
    }
}

fn main() -> ExitCode {
    reset_sigpipe();
    init_threads();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Distances { config, out } => cmd_distances(&config, out),
        Command::Embed {
            config,
            matrix,
            method,
            dim,
            radius,
            knn,
            policy,
            out,
        } => cmd_embed(config, matrix, method, dim, radius, knn, policy, out),
        Command::Suite { name, seed, out } => cmd_suite(&name, seed, out),
        Command::Families => {
            print_families();
            Ok(ExitCode::SUCCESS)
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Die quietly when the reader of our stdout goes away (`fmds ... | head`),
/// like any other line-oriented unix tool.
fn reset_sigpipe() {
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

/// FMDS_THREADS caps the rayon pool; results never depend on it.
fn init_threads() {
    if let Ok(v) = std::env::var("FMDS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("warning: FMDS_THREADS must be a positive integer; ignoring {v:?}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Reports

/// Constants pinned by the verification suites, echoed into every report so
/// an artifact records the conventions it was produced under.
fn pinned_constants() -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("hellinger_sq_fisher_ratio", 0.25),
        ("sym_kl_fisher_ratio", 1.0),
        ("chi_sq_sym_fisher_ratio", 2.0),
        ("l2_information_normal_1d", 0.25 / std::f64::consts::PI.sqrt()),
        ("eig_rel_tol", fmds::mds::EIG_REL_TOL),
        ("eig_synth_rel_tol", fmds::mds::EIG_SYNTH_REL_TOL),
    ])
}

#[derive(Serialize)]
struct DistancesReport {
    seed: u64,
    n: usize,
    labels_first: String,
    labels_last: String,
    metric_check: MetricCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    covering_radius: Option<f64>,
    files: Vec<String>,
    version: &'static str,
    constants: BTreeMap<&'static str, f64>,
    wall_clock_secs: f64,
}

#[derive(Serialize)]
struct OracleSummary {
    pairs: usize,
    max_abs_error: f64,
    mean_abs_error: f64,
}

#[derive(Serialize)]
struct EmbedReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    method: serde_json::Value,
    embedding: EmbeddingReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<GraphDiagnostics>,
    retained_count: usize,
    dropped: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleSummary>,
    files: Vec<String>,
    version: &'static str,
    constants: BTreeMap<&'static str, f64>,
    wall_clock_secs: f64,
}

// ---------------------------------------------------------------------------
// distances

fn cmd_distances(config_path: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let config = load_config(config_path)?;
    let dir = resolve_out(out, &config)?;
    let started = Instant::now();
    let delta = run_distances(&config)?;
    let mut files = Vec::new();

    if let DataMode::Sample { m } = config.mode {
        // Materialize the sample sets the estimators consumed; the draws
        // are stream-seeded, so these files are exactly what was used.
        for s in draw_samples(&config, m)? {
            let name = format!("samples_{}.csv", s.source_id);
            io::save_samples_csv(dir.join(&name), &s)?;
            files.push(name);
        }
    }
    io::save_matrix_csv(dir.join("distances.csv"), &delta)?;
    files.push("distances.csv".to_string());

    let report = DistancesReport {
        seed: config.seed,
        n: delta.n(),
        labels_first: delta.labels.first().cloned().unwrap_or_default(),
        labels_last: delta.labels.last().cloned().unwrap_or_default(),
        metric_check: delta.metric_check,
        covering_radius: if config.covering_radius_report {
            Some(delta.covering_radius()?)
        } else {
            None
        },
        files,
        version: env!("CARGO_PKG_VERSION"),
        constants: pinned_constants(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    io::save_json(dir.join("distances_report.json"), &report)?;
    println!(
        "distances: {} members -> {}",
        delta.n(),
        dir.join("distances.csv").display()
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// embed

#[allow(clippy::too_many_arguments)]
fn cmd_embed(
    config: Option<PathBuf>,
    matrix: Option<PathBuf>,
    method: Option<MethodArg>,
    dim: Option<usize>,
    radius: Option<f64>,
    knn: Option<usize>,
    policy: PolicyArg,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let started = Instant::now();
    let (delta, embed_config, seed, oracle_matrix, dir) = match (&config, &matrix) {
        (Some(path), None) => {
            let cfg = load_config(path)?;
            let embed = cfg.method.ok_or_else(|| {
                Error::invalid("this config has no `method` section; add one or use --matrix")
            })?;
            let oracle = match cfg.oracle {
                Some(OracleSpec::Intrinsic) => Some(intrinsic_oracle_matrix(&cfg)?),
                None => None,
            };
            let dir = resolve_out(out, &cfg)?;
            (run_distances(&cfg)?, embed, Some(cfg.seed), oracle, dir)
        }
        (None, Some(path)) => {
            let delta = io::load_matrix_csv(path)?;
            let method = method.expect("clap enforces --method with --matrix");
            let dim = dim.expect("clap enforces --dim with --matrix");
            let embed = EmbedConfig {
                method: match method {
                    MethodArg::Cs => EmbedMethod::ClassicalScaling,
                    MethodArg::Isomap => EmbedMethod::Isomap {
                        rule: match (radius, knn) {
                            (Some(r), None) => NeighborRule::Radius(r),
                            (None, Some(k)) => NeighborRule::KNearest(k),
                            _ => {
                                return Err(Error::invalid(
                                    "isomap needs exactly one of --radius or --knn",
                                ))
                            }
                        },
                        policy: policy.into(),
                    },
                },
                dim,
            };
            let dir = ensure_dir(out.unwrap_or_else(|| PathBuf::from(".")))?;
            (delta, embed, None, None, dir)
        }
        _ => {
            return Err(Error::invalid(
                "embed needs exactly one of --config or --matrix",
            ))
        }
    };

    let outcome = run_embed(&delta, &embed_config)?;
    let mut files = Vec::new();

    io::save_embedding_csv(dir.join("embedding.csv"), &outcome.embedding)?;
    files.push("embedding.csv".to_string());

    // Report stress/strain against the matrix that was actually embedded:
    // the geodesics for Isomap, the input matrix for classical scaling.
    let embedded_matrix = outcome.geodesics.as_ref().unwrap_or(&delta);
    let embedding_report = io::embedding_report(&outcome.embedding, embedded_matrix)?;
    if let Some(geo) = &outcome.geodesics {
        io::save_matrix_csv(dir.join("geodesics.csv"), geo)?;
        files.push("geodesics.csv".to_string());
    }

    let oracle = match oracle_matrix {
        Some(oracle) => Some(write_oracle_table(
            &dir,
            &mut files,
            embedded_matrix,
            &oracle,
            &outcome.retained,
        )?),
        None => None,
    };

    let dropped: Vec<usize> = {
        let kept: std::collections::HashSet<usize> = outcome.retained.iter().copied().collect();
        (0..delta.n()).filter(|i| !kept.contains(i)).collect()
    };
    let report = EmbedReport {
        seed,
        method: serde_json::to_value(embed_config)
            .map_err(|e| Error::parse(format!("method serialization: {e}")))?,
        embedding: embedding_report,
        diagnostics: outcome.diagnostics,
        retained_count: outcome.retained.len(),
        dropped,
        oracle,
        files,
        version: env!("CARGO_PKG_VERSION"),
        constants: pinned_constants(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    io::save_json(dir.join("embed_report.json"), &report)?;
    println!(
        "embedding: {} points in dimension {} -> {} (stress {:.3e})",
        outcome.embedding.n(),
        outcome.embedding.dim(),
        dir.join("embedding.csv").display(),
        report.embedding.stress
    );
    Ok(ExitCode::SUCCESS)
}

/// Per-pair error table: observed (geodesic or embedded-input) distance vs
/// the configured oracle, for the retained points.
fn write_oracle_table(
    dir: &Path,
    files: &mut Vec<String>,
    observed: &DissimilarityMatrix,
    oracle: &nalgebra::DMatrix<f64>,
    retained: &[usize],
) -> Result<OracleSummary> {
    let path = dir.join("oracle_errors.csv");
    let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "id_i,id_j,observed,oracle,abs_error")?;
    let n = observed.n();
    let mut max_err = 0.0f64;
    let mut sum_err = 0.0f64;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let obs = observed.values[(i, j)];
            let ora = oracle[(retained[i], retained[j])];
            let err = (obs - ora).abs();
            writeln!(
                w,
                "{},{},{},{},{}",
                observed.labels[i], observed.labels[j], obs, ora, err
            )?;
            max_err = max_err.max(err);
            sum_err += err;
            pairs += 1;
        }
    }
    w.flush()?;
    files.push("oracle_errors.csv".to_string());
    Ok(OracleSummary {
        pairs,
        max_abs_error: max_err,
        mean_abs_error: if pairs > 0 { sum_err / pairs as f64 } else { 0.0 },
    })
}

// ---------------------------------------------------------------------------
// suite

fn cmd_suite(name: &str, seed: u64, out: Option<PathBuf>) -> Result<ExitCode> {
    let names: Vec<&str> = if name == "all" {
        SUITE_NAMES.to_vec()
    } else {
        vec![name]
    };
    let mut all_passed = true;
    for suite_name in names {
        let report = run_suite(suite_name, seed)?;
        for line in report.summary_lines() {
            println!("  {line}");
        }
        println!(
            "[{}] {}",
            if report.passed() { "PASS" } else { "FAIL" },
            report.suite
        );
        if let Some(base) = &out {
            let dir = base.join(&report.suite);
            fs::create_dir_all(&dir)?;
            io::save_json(dir.join("report.json"), &report)?;
        }
        all_passed &= report.passed();
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

// ---------------------------------------------------------------------------
// families

fn print_families() {
    println!("built-in density families (JSON shape: {{\"kind\": ..., \"params\": ...}})\n");
    let rows: [(&str, &str, &str, &str); 7] = [
        (
            "normal_location",
            r#"{"kind": "normal_location", "params": {"dim": 2}}"#,
            "theta in R^dim",
            "N(theta, I) on R^dim",
        ),
        (
            "uniform_location_1d",
            r#"{"kind": "uniform_location_1d"}"#,
            "theta in R",
            "uniform on [theta, theta + 1]",
        ),
        (
            "gamma_scale",
            r#"{"kind": "gamma_scale", "params": {"shape": 2.0}}"#,
            "theta > 0 (scale); fixed polynomial exponent `shape` > -1/2",
            "x^shape e^{-x/theta} on (0, inf), normalized",
        ),
        (
            "exponential_family / normal_natural",
            r#"{"kind": "exponential_family", "params": {"family": {"kind": "normal_natural", "params": {"dim": 1}}}}"#,
            "natural theta in R^dim",
            "exp(theta.x - |theta|^2/2) against N(0, I): equals N(theta, I)",
        ),
        (
            "exponential_family / poisson_natural",
            r#"{"kind": "exponential_family", "params": {"family": {"kind": "poisson_natural"}}}"#,
            "natural theta in R",
            "Poisson(e^theta) on the nonnegative integers (discrete)",
        ),
        (
            "location_scale_1d",
            r#"{"kind": "location_scale_1d", "params": {"base": "std_normal"}}"#,
            "theta = (location, scale), scale > 0; base: std_normal | uniform01 | triweight",
            "(1/s) f((x - l)/s) for the chosen base density f",
        ),
        (
            "time_warp_1d",
            r#"{"kind": "time_warp_1d", "params": {"base": "uniform01"}}"#,
            "theta = warp exponent a > 0",
            "pushforward of the base by the power warp t -> t^a on [0, 1]",
        ),
    ];
    for (name, json, params, law) in rows {
        println!("{name}");
        println!("  config:     {json}");
        println!("  parameters: {params}");
        println!("  law:        {law}");
        println!();
    }
    println!("suites: {}", SUITE_NAMES.join(", "));
}

// ---------------------------------------------------------------------------
// shared plumbing

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn resolve_out(flag: Option<PathBuf>, config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| config.outputs.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(dir)
}

fn ensure_dir(dir: PathBuf) -> Result<PathBuf> {
    fs::create_dir_all(&dir)?;
    Ok(dir)
}
