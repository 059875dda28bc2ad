//! Classical scaling (classical multidimensional scaling).
//!
//! Given an n x n dissimilarity matrix delta, form A = -1/2 delta^2
//! entrywise, double-center it to B = H A H with H = I - 11^T/n, take the
//! top eigenpairs of B, and set the k-th embedding coordinate to
//! sqrt(max(nu_k, 0)) times the k-th eigenvector. When delta is the
//! Euclidean distance matrix of a point set, B is the centered Gram matrix
//! of those points and the embedding reproduces them exactly up to rigid
//! motion; Schoenberg's criterion (B positive semidefinite) decides whether
//! such a configuration exists at all.
//!
//! The production eigensolver is nalgebra's tridiagonalization-based
//! `SymmetricEigen`; [`jacobi_symmetric_eigen`] is an independent cyclic
//! Jacobi implementation retained as a cross-checking oracle.

use crate::error::{Error, Result};
use crate::metrics::{DissimilarityMatrix, EvalRoute};
use crate::models::Density;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Relative eigenvalue tolerance: eigenvalues within this fraction of the
/// spectral radius of zero are treated as zero by rank counts and the
/// Schoenberg check.
pub const EIG_REL_TOL: f64 = 1e-8;

/// Coordinate-synthesis threshold: eigenvalues below this fraction of the
/// spectral radius are treated as exact zeros when building coordinates, so
/// zero-padding past the true rank is deterministic. Set well below any
/// meaningful spectral structure but above eigensolver noise (~1e-15).
pub const EIG_SYNTH_REL_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Double centering

/// B = H M H with H = I - 11^T/n, computed from row/column/grand means.
/// Refuses matrices with non-finite entries: centering smears any infinity
/// or NaN across the whole matrix.
pub fn double_center(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n || n == 0 {
        return Err(Error::invalid("double_center requires a nonempty square matrix"));
    }
    for i in 0..n {
        for j in 0..n {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFiniteEntry { i, j });
            }
        }
    }
    let nf = n as f64;
    let row_mean: Vec<f64> = (0..n).map(|i| m.row(i).sum() / nf).collect();
    let col_mean: Vec<f64> = (0..n).map(|j| m.column(j).sum() / nf).collect();
    let grand = row_mean.iter().sum::<f64>() / nf;
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = m[(i, j)] - row_mean[i] - col_mean[j] + grand;
        }
    }
    Ok(b)
}

/// The classical-scaling inner-product matrix B = -1/2 H delta^2 H.
pub fn b_from_dissimilarities(delta: &DissimilarityMatrix) -> Result<DMatrix<f64>> {
    let n = delta.n();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = delta.get(i, j);
            if !d.is_finite() {
                return Err(Error::NonFiniteEntry { i, j });
            }
            a[(i, j)] = -0.5 * d * d;
        }
    }
    double_center(&a)
}

// ---------------------------------------------------------------------------
// Eigendecomposition with a fixed ordering and sign convention

/// Eigenpairs of a symmetric matrix, eigenvalues descending, each
/// eigenvector scaled so its largest-magnitude entry (lowest index on ties)
/// is positive. The convention makes embeddings reproducible across
/// eigensolvers up to their numerical agreement.
pub fn sorted_symmetric_eigen(b: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(b.clone());
    order_eigenpairs(eig.eigenvalues.as_slice(), &eig.eigenvectors)
}

fn order_eigenpairs(values: &[f64], vectors: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = DMatrix::zeros(vectors.nrows(), n);
    for (k, &i) in idx.iter().enumerate() {
        vals.push(values[i]);
        let mut col = vectors.column(i).clone_owned();
        let mut pivot = 0usize;
        for r in 1..col.len() {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vecs.set_column(k, &col);
    }
    (vals, vecs)
}

/// Cyclic Jacobi eigensolver for symmetric matrices. Quadratically
/// convergent and independent of nalgebra's algorithm; used as a test
/// oracle, not in production paths (it is O(n^3) per sweep).
pub fn jacobi_symmetric_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::invalid("jacobi eigensolver requires a nonempty square matrix"));
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut m = a.clone();
    let mut v = DMatrix::identity(n, n);
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += m[(p, q)] * m[(p, q)];
                }
            }
        }
        if off.sqrt() <= 1e-14 * scale + f64::MIN_POSITIVE {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    Ok(order_eigenpairs(&diag, &v))
}

// ---------------------------------------------------------------------------
// Embedding

/// A Euclidean configuration produced by classical scaling or Isomap.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Embedding {
    pub labels: Vec<String>,
    /// n x requested_dim coordinates, one point per row. Columns beyond
    /// the positive rank of B are zero.
    pub coords: DMatrix<f64>,
    /// All n eigenvalues of B, descending.
    pub eigenvalues: Vec<f64>,
    pub requested_dim: usize,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.requested_dim
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coords.row(i).iter().cloned().collect()
    }

    /// Number of eigenvalues exceeding EIG_REL_TOL times the spectral radius.
    pub fn positive_rank(&self) -> usize {
        let scale = self
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        self.eigenvalues
            .iter()
            .filter(|&&v| v > EIG_REL_TOL * scale)
            .count()
    }

    pub fn pairwise_distances(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (self.coords.row(i) - self.coords.row(j)).norm();
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        d
    }
}

/// Classical scaling of a dissimilarity matrix into `dim` coordinates.
/// Negative eigenvalues are clamped to zero, so requesting more dimensions
/// than B has positive rank pads with zero columns.
pub fn classical_scaling(delta: &DissimilarityMatrix, dim: usize) -> Result<Embedding> {
    let n = delta.n();
    if dim == 0 {
        return Err(Error::invalid("embedding dimension must be at least 1"));
    }
    if dim > n {
        return Err(Error::invalid(format!(
            "embedding dimension {dim} exceeds the number of points {n}"
        )));
    }
    let b = b_from_dissimilarities(delta)?;
    let (vals, vecs) = sorted_symmetric_eigen(&b);
    Ok(embedding_from_eigen(delta.labels.clone(), &vals, &vecs, dim))
}

fn embedding_from_eigen(
    labels: Vec<String>,
    vals: &[f64],
    vecs: &DMatrix<f64>,
    dim: usize,
) -> Embedding {
    let n = vals.len();
    let radius = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut coords = DMatrix::zeros(n, dim);
    for k in 0..dim {
        if vals[k] <= EIG_SYNTH_REL_TOL * radius {
            continue;
        }
        let scale = vals[k].sqrt();
        for i in 0..n {
            coords[(i, k)] = scale * vecs[(i, k)];
        }
    }
    Embedding {
        labels,
        coords,
        eigenvalues: vals.to_vec(),
        requested_dim: dim,
    }
}

/// Principal component scores from a raw inner-product (Gram) matrix:
/// double-center, then the same spectral synthesis as classical scaling.
/// With G_ij = <f_i, f_j> in L2 this is functional PCA, and it coincides
/// with classical scaling of the L2 distance matrix.
pub fn pca_from_gram(labels: Vec<String>, gram: &DMatrix<f64>, dim: usize) -> Result<Embedding> {
    let n = gram.nrows();
    if dim == 0 || dim > n {
        return Err(Error::invalid(format!(
            "pca dimension {dim} out of range for {n} points"
        )));
    }
    if labels.len() != n {
        return Err(Error::invalid("pca_from_gram: labels/matrix size mismatch"));
    }
    let centered = double_center(gram)?;
    let sym = (&centered + centered.transpose()) * 0.5;
    let (vals, vecs) = sorted_symmetric_eigen(&sym);
    Ok(embedding_from_eigen(labels, &vals, &vecs, dim))
}

/// Raw L2 Gram matrix G_ij = <f_i, f_j> over a collection of densities.
pub fn l2_gram_matrix(densities: &[Density], route: EvalRoute) -> Result<DMatrix<f64>> {
    use crate::metrics::l2_inner_product;
    let n = densities.len();
    if n == 0 {
        return Err(Error::invalid("gram matrix over an empty collection"));
    }
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = l2_inner_product(&densities[i], &densities[j], route)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// Fit diagnostics

/// Raw stress: sum over ordered pairs (i, j), i != j, of
/// | ||p_i - p_j||^2 - delta_ij^2 |. Zero iff the configuration reproduces
/// the dissimilarities exactly.
pub fn stress(coords: &DMatrix<f64>, delta: &DissimilarityMatrix) -> Result<f64> {
    let n = delta.n();
    if coords.nrows() != n {
        return Err(Error::invalid("stress: coordinate/matrix size mismatch"));
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dsq = (coords.row(i) - coords.row(j)).norm_squared();
            let del = delta.get(i, j);
            s += (dsq - del * del).abs();
        }
    }
    Ok(s)
}

/// Strain: || P P^T - B ||_F^2, the squared Frobenius error of the
/// inner-product matrix reconstruction.
pub fn strain(coords: &DMatrix<f64>, delta: &DissimilarityMatrix) -> Result<f64> {
    let n = delta.n();
    if coords.nrows() != n {
        return Err(Error::invalid("strain: coordinate/matrix size mismatch"));
    }
    let b = b_from_dissimilarities(delta)?;
    let resid = coords * coords.transpose() - b;
    Ok(resid.iter().map(|x| x * x).sum())
}

// ---------------------------------------------------------------------------
// Schoenberg criterion

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchoenbergReport {
    /// Smallest eigenvalue of B.
    pub min_eigenvalue: f64,
    /// Spectral radius of B (the scale the tolerance is relative to).
    pub scale: f64,
    /// True iff min_eigenvalue >= -EIG_REL_TOL * scale.
    pub embeddable: bool,
    /// Number of eigenvalues above EIG_REL_TOL * scale: the dimension
    /// needed for an exact embedding when one exists.
    pub positive_rank: usize,
}

/// Schoenberg's criterion: delta embeds isometrically in some Euclidean
/// space iff B = -1/2 H delta^2 H is positive semidefinite.
pub fn schoenberg_check(delta: &DissimilarityMatrix) -> Result<SchoenbergReport> {
    let b = b_from_dissimilarities(delta)?;
    let (vals, _) = sorted_symmetric_eigen(&b);
    let scale = vals.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let min_eigenvalue = *vals.last().unwrap();
    Ok(SchoenbergReport {
        min_eigenvalue,
        scale,
        embeddable: min_eigenvalue >= -EIG_REL_TOL * scale,
        positive_rank: vals.iter().filter(|&&v| v > EIG_REL_TOL * scale).count(),
    })
}

// ---------------------------------------------------------------------------
// Procrustes alignment

/// Rigid alignment of configuration `x` onto `y` (rows are points):
/// optimal translation plus orthogonal map (rotation or reflection, no
/// scaling) minimizing the sum of squared row distances. Returns the
/// transformed copy of `x`.
pub fn procrustes_align(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.shape() != y.shape() {
        return Err(Error::invalid(format!(
            "procrustes: shapes differ, {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let n = x.nrows();
    if n == 0 {
        return Err(Error::invalid("procrustes: empty configuration"));
    }
    let xm = x.row_mean();
    let ym = y.row_mean();
    let mut xc = x.clone();
    let mut yc = y.clone();
    for i in 0..n {
        for k in 0..x.ncols() {
            xc[(i, k)] -= xm[k];
            yc[(i, k)] -= ym[k];
        }
    }
    let m = xc.transpose() * &yc;
    let svd = m.svd(true, true);
    let u = svd.u.as_ref().ok_or_else(|| Error::numeric("procrustes: svd failed"))?;
    let vt = svd.v_t.as_ref().ok_or_else(|| Error::numeric("procrustes: svd failed"))?;
    let r = u * vt;
    let mut aligned = xc * r;
    for i in 0..n {
        for k in 0..y.ncols() {
            aligned[(i, k)] += ym[k];
        }
    }
    Ok(aligned)
}

/// Root-mean-square point distance between x and y after optimal rigid
/// alignment of x onto y.
pub fn procrustes_distance(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    let aligned = procrustes_align(x, y)?;
    let n = x.nrows() as f64;
    let ss: f64 = (&aligned - y).row_iter().map(|r| r.norm_squared()).sum();
    Ok((ss / n).sqrt())
}

// ---------------------------------------------------------------------------
