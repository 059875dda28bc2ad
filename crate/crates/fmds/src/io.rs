//! On-disk formats: CSV for matrices, samples, embeddings, and graph edge
//! lists; JSON for reports and tensor dumps.
//!
//! The CSV dialect is deliberately minimal: comma-separated, no quoting
//! (labels may not contain commas, quotes, or newlines - writers refuse
//! them), floats printed with Rust's shortest round-trip formatting, and
//! `inf` for infinite dissimilarities. Readers are strict: they validate
//! shapes, labels, and numeric fields, and report the offending row and
//! column on failure.

use crate::error::{Error, Result};
use crate::isomap::Graph;
use crate::mds::{schoenberg_check, strain, stress, Embedding, SchoenbergReport};
use crate::metrics::DissimilarityMatrix;
use crate::models::SampleSet;
use nalgebra::DMatrix;
use serde::Serialize;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() {
        return Err(Error::invalid("empty label"));
    }
    if label.contains(',') || label.contains('"') || label.contains('\n') || label.contains('\r') {
        return Err(Error::invalid(format!(
            "label {label:?} contains a comma, quote, or newline; these cannot be written to CSV"
        )));
    }
    Ok(())
}

fn parse_value(cell: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| {
        Error::parse(format!("row {row}, column {col}: {cell:?} is not a number"))
    })?;
    if v.is_nan() {
        return Err(Error::parse(format!("row {row}, column {col}: NaN is not allowed")));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Dissimilarity matrices

/// Layout: header `id,<label_1>,...,<label_n>`, then one row per point,
/// `<label_i>,v_i1,...,v_in`.
pub fn write_matrix_csv(w: &mut impl Write, m: &DissimilarityMatrix) -> Result<()> {
    for l in &m.labels {
        check_label(l)?;
    }
    write!(w, "id")?;
    for l in &m.labels {
        write!(w, ",{l}")?;
    }
    writeln!(w)?;
    for i in 0..m.n() {
        write!(w, "{}", m.labels[i])?;
        for j in 0..m.n() {
            write!(w, ",{}", m.get(i, j))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_matrix_csv(r: impl BufRead) -> Result<DissimilarityMatrix> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty file, expected a matrix header"))??;
    let mut cols = header.split(',');
    let first = cols.next().unwrap_or("");
    if first != "id" {
        return Err(Error::parse(format!(
            "matrix header must start with 'id', got {first:?}"
        )));
    }
    let labels: Vec<String> = cols.map(str::to_string).collect();
    let n = labels.len();
    if n == 0 {
        return Err(Error::parse("matrix header lists no labels"));
    }
    let mut values = DMatrix::zeros(n, n);
    let mut row = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if row >= n {
            return Err(Error::parse(format!(
                "too many rows: header promises {n}"
            )));
        }
        let mut cells = line.split(',');
        let label = cells.next().unwrap_or("");
        if label != labels[row] {
            return Err(Error::parse(format!(
                "row {row} is labeled {label:?}, expected {:?} (rows must match header order)",
                labels[row]
            )));
        }
        let mut col = 0usize;
        for cell in cells {
            if col >= n {
                return Err(Error::parse(format!(
                    "row {row}: too many columns, expected {n}"
                )));
            }
            values[(row, col)] = parse_value(cell, row, col)?;
            col += 1;
        }
        if col != n {
            return Err(Error::parse(format!(
                "row {row}: {col} columns, expected {n}"
            )));
        }
        row += 1;
    }
    if row != n {
        return Err(Error::parse(format!("{row} rows, header promises {n}")));
    }
    DissimilarityMatrix::new(labels, values)
}

pub fn save_matrix_csv(path: impl AsRef<Path>, m: &DissimilarityMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_csv(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<DissimilarityMatrix> {
    read_matrix_csv(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// Sample sets

/// Layout: a comment line `# source_id=<id> dim=<d> seed=<s>`, then one
/// observation per line, `dim` comma-separated coordinates.
pub fn write_samples_csv(w: &mut impl Write, s: &SampleSet) -> Result<()> {
    check_label(&s.source_id)?;
    if s.source_id.contains(char::is_whitespace) {
        return Err(Error::invalid(format!(
            "source_id {:?} contains whitespace; it would not survive the header",
            s.source_id
        )));
    }
    writeln!(w, "# source_id={} dim={} seed={}", s.source_id, s.dim, s.seed)?;
    for i in 0..s.len() {
        let row = s.row(i);
        let mut first = true;
        for v in row {
            if first {
                write!(w, "{v}")?;
                first = false;
            } else {
                write!(w, ",{v}")?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_samples_csv(r: impl BufRead) -> Result<SampleSet> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty file, expected a sample header"))??;
    let rest = header
        .strip_prefix("# ")
        .ok_or_else(|| Error::parse("first line must be '# source_id=... dim=... seed=...'"))?;
    let mut source_id: Option<String> = None;
    let mut dim: Option<usize> = None;
    let mut seed: Option<u64> = None;
    for part in rest.split_whitespace() {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("malformed header field {part:?}")))?;
        match key {
            "source_id" => source_id = Some(value.to_string()),
            "dim" => {
                dim = Some(value.parse().map_err(|_| {
                    Error::parse(format!("dim must be a positive integer, got {value:?}"))
                })?)
            }
            "seed" => {
                seed = Some(value.parse().map_err(|_| {
                    Error::parse(format!("seed must be a u64, got {value:?}"))
                })?)
            }
            other => return Err(Error::parse(format!("unknown header field {other:?}"))),
        }
    }
    let source_id = source_id.ok_or_else(|| Error::parse("header is missing source_id"))?;
    let dim = dim.ok_or_else(|| Error::parse("header is missing dim"))?;
    let seed = seed.ok_or_else(|| Error::parse("header is missing seed"))?;
    let mut data = Vec::new();
    let mut row = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut col = 0usize;
        for cell in line.split(',') {
            if col >= dim {
                return Err(Error::parse(format!(
                    "observation {row}: more than {dim} coordinates"
                )));
            }
            let v = parse_value(cell, row, col)?;
            data.push(v);
            col += 1;
        }
        if col != dim {
            return Err(Error::parse(format!(
                "observation {row}: {col} coordinates, expected {dim}"
            )));
        }
        row += 1;
    }
    SampleSet::new(source_id, dim, seed, data)
}

pub fn save_samples_csv(path: impl AsRef<Path>, s: &SampleSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_samples_csv(&mut w, s)?;
    w.flush()?;
    Ok(())
}

pub fn load_samples_csv(path: impl AsRef<Path>) -> Result<SampleSet> {
    read_samples_csv(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// Embeddings

/// Layout: header `id,coord_1,...,coord_d`, then one row per point.
pub fn write_embedding_csv(w: &mut impl Write, e: &Embedding) -> Result<()> {
    for l in &e.labels {
        check_label(l)?;
    }
    write!(w, "id")?;
    for k in 0..e.dim() {
        write!(w, ",coord_{}", k + 1)?;
    }
    writeln!(w)?;
    for i in 0..e.n() {
        write!(w, "{}", e.labels[i])?;
        for k in 0..e.dim() {
            write!(w, ",{}", e.coords[(i, k)])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_embedding_csv(path: impl AsRef<Path>, e: &Embedding) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_embedding_csv(&mut w, e)?;
    w.flush()?;
    Ok(())
}

/// JSON sidecar summarizing an embedding's fit against the dissimilarity
/// matrix it came from.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub n: usize,
    pub requested_dim: usize,
    pub positive_rank: usize,
    pub eigenvalues: Vec<f64>,
    pub stress: f64,
    pub strain: f64,
    pub schoenberg: SchoenbergReport,
}

pub fn embedding_report(e: &Embedding, delta: &DissimilarityMatrix) -> Result<EmbeddingReport> {
    Ok(EmbeddingReport {
        n: e.n(),
        requested_dim: e.requested_dim,
        positive_rank: e.positive_rank(),
        eigenvalues: e.eigenvalues.clone(),
        stress: stress(&e.coords, delta)?,
        strain: strain(&e.coords, delta)?,
        schoenberg: schoenberg_check(delta)?,
    })
}

// ---------------------------------------------------------------------------
// Graphs and generic JSON

/// Layout: header `i,j,weight`, then one undirected edge per line (i < j).
pub fn write_edges_csv(w: &mut impl Write, g: &Graph) -> Result<()> {
    writeln!(w, "i,j,weight")?;
    for i in 0..g.n {
        for &(j, weight) in &g.adj[i] {
            if i < j {
                writeln!(w, "{i},{j},{weight}")?;
            }
        }
    }
    Ok(())
}

pub fn save_edges_csv(path: impl AsRef<Path>, g: &Graph) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_edges_csv(&mut w, g)?;
    w.flush()?;
    Ok(())
}

/// A metric tensor evaluated at a parameter point, for JSON dumps.
#[derive(Clone, Debug, Serialize)]
pub struct TensorDump {
    pub family: String,
    pub theta: Vec<f64>,
    pub quantity: String,
    pub matrix: Vec<Vec<f64>>,
}

impl TensorDump {
    pub fn new(family: &str, theta: &[f64], quantity: &str, m: &DMatrix<f64>) -> Self {
        TensorDump {
            family: family.to_string(),
            theta: theta.to_vec(),
            quantity: quantity.to_string(),
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        }
    }
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::parse(format!("json serialization failed: {e}")))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isomap::radius_graph;
    use crate::mds::classical_scaling;

    fn example_matrix() -> DissimilarityMatrix {
        let mut m = DMatrix::zeros(3, 3);
        let vals = [(0usize, 1usize, 0.1234567890123), (0, 2, f64::INFINITY), (1, 2, 2.0)];
        for (i, j, v) in vals {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        DissimilarityMatrix::new(vec!["a".into(), "b".into(), "c".into()], m).unwrap()
    }

    #[test]
    fn matrix_roundtrip_preserves_bits_and_inf() {
        let m = example_matrix();
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,a,b,c\n"), "{text}");
        assert!(text.contains("inf"));
        let back = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(back.labels, m.labels);
        for i in 0..3 {
            for j in 0..3 {
                let (x, y) = (m.get(i, j), back.get(i, j));
                assert!(x == y || (x.is_infinite() && y.is_infinite()), "({i},{j})");
            }
        }
    }

    #[test]
    fn matrix_reader_rejects_malformed_input() {
        let cases: &[(&str, &str)] = &[
            ("", "empty"),
            ("x,a,b\na,0,1\nb,1,0\n", "must start with 'id'"),
            ("id,a,b\nb,0,1\na,1,0\n", "labeled"),
            ("id,a,b\na,0,1\nb,1\n", "columns"),
            ("id,a,b\na,0,zzz\nb,1,0\n", "not a number"),
            ("id,a,b\na,0,NaN\nb,NaN,0\n", "NaN"),
            ("id,a,b\na,0,1\nb,2,0\n", "symmetric"),
            ("id,a,b\na,0,1\n", "rows"),
        ];
        for (text, want) in cases {
            let err = read_matrix_csv(text.as_bytes()).unwrap_err().to_string();
            assert!(err.contains(want), "input {text:?}: error {err:?} lacks {want:?}");
        }
    }

    #[test]
    fn samples_roundtrip() {
        let s = SampleSet::new("gamma/7".into(), 2, 99, vec![0.5, -1.25, 3.0, 0.0625]).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# source_id=gamma/7 dim=2 seed=99\n"), "{text}");
        let back = read_samples_csv(buf.as_slice()).unwrap();
        assert_eq!(back.source_id, s.source_id);
        assert_eq!(back.dim, 2);
        assert_eq!(back.seed, 99);
        assert_eq!(back.data, s.data);

        assert!(read_samples_csv("0.5,1.0\n".as_bytes()).is_err());
        assert!(read_samples_csv("# source_id=a dim=2 seed=1\n0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn embedding_csv_and_report() {
        let mut m = DMatrix::zeros(3, 3);
        for (i, j, v) in [(0usize, 1usize, 1.0), (0, 2, 2.0), (1, 2, 1.0)] {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        let delta =
            DissimilarityMatrix::new(vec!["p".into(), "q".into(), "r".into()], m).unwrap();
        let emb = classical_scaling(&delta, 2).unwrap();
        let mut buf = Vec::new();
        write_embedding_csv(&mut buf, &emb).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("id,coord_1,coord_2\np,"), "{text}");

        let report = embedding_report(&emb, &delta).unwrap();
        assert_eq!(report.n, 3);
        assert!(report.stress < 1e-12, "collinear points embed exactly");
        assert!(report.schoenberg.embeddable);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"eigenvalues\""));
    }

    #[test]
    fn edges_csv_layout() {
        let delta = example_matrix();
        let g = radius_graph(&delta, 3.0).unwrap();
        let mut buf = Vec::new();
        write_edges_csv(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,j,weight");
        assert_eq!(lines.len(), 3); // header + 2 finite edges
        assert!(lines[1].starts_with("0,1,"));
        assert_eq!(lines[2], "1,2,2");
    }

    #[test]
    fn labels_with_commas_are_refused() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        let bad = DissimilarityMatrix::new(vec!["a,b".into(), "c".into()], m).unwrap();
        let mut buf = Vec::new();
        assert!(write_matrix_csv(&mut buf, &bad).is_err());
    }
}
