//! Dataset ingestion (LIBSVM text format) and binary model persistence.
//!
//! # LIBSVM grammar
//!
//! One example per line: `label idx:val idx:val ...`. Leading and trailing
//! whitespace is ignored, fields are separated by a single space, feature
//! indices are 1-based and may not repeat within a line. Blank lines are
//! skipped. Labels are arbitrary finite numbers; they are mapped to class
//! indices `0..m` in ascending order of value.
//!
//! # Model file
//!
//! All integers and floats little-endian:
//!
//! | field    | type          |
//! |----------|---------------|
//! | magic    | `b"TOPKSVM"`  |
//! | version  | u32 (= 1)     |
//! | m        | u64           |
//! | d        | u64           |
//! | k        | u64           |
//! | lambda   | f64           |
//! | variant  | u8 (0 = alpha, 1 = beta) |
//! | labels   | m × f64, original label of each class |
//! | payload  | d·m × f64, `W` row-major (`W[feature][class]`) |
//! | checksum | u64, FNV-1a over the payload bytes |

use std::fs::File;
use std::hash::Hasher;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use fnv::FnvHasher;

use crate::error::{Error, Result};
use crate::losses::{LossSpec, LossVariant};
use crate::numkit::DenseMatrix;
use crate::solver::Model;

pub const MODEL_MAGIC: &[u8; 7] = b"TOPKSVM";
pub const MODEL_VERSION: u32 = 1;

/// Training or test examples: one column of `x` per example.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DenseMatrix,
    labels: Vec<usize>,
    classes: Vec<f64>,
}

impl Dataset {
    /// `labels[i]` indexes into `classes`, which holds the original label
    /// values.
    pub fn new(x: DenseMatrix, labels: Vec<usize>, classes: Vec<f64>) -> Result<Self> {
        if labels.len() != x.cols() {
            return Err(Error::invalid(format!(
                "{} labels for {} examples",
                labels.len(),
                x.cols()
            )));
        }
        if classes.is_empty() {
            return Err(Error::invalid("dataset needs at least one class"));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes.len()) {
            return Err(Error::invalid(format!(
                "label index {bad} out of range for {} classes",
                classes.len()
            )));
        }
        Ok(Dataset { x, labels, classes })
    }

    /// Features, `d × n`.
    pub fn features(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn example(&self, i: usize) -> &[f64] {
        self.x.col(i)
    }

    /// Class indices in `0..m`.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[f64] {
        &self.classes
    }

    pub fn num_examples(&self) -> usize {
        self.x.cols()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }
}

/// Overrides for [`read_libsvm_with`].
#[derive(Debug, Clone, Default)]
pub struct LibsvmOptions {
    /// Fix the feature dimension (e.g. to match a model). Indices beyond it
    /// are an error.
    pub feature_dim: Option<usize>,
    /// Use this label table instead of deriving one; unknown labels are an
    /// error.
    pub classes: Option<Vec<f64>>,
}

pub fn read_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    read_libsvm_with(path, &LibsvmOptions::default())
}

pub fn read_libsvm_with(path: impl AsRef<Path>, opts: &LibsvmOptions) -> Result<Dataset> {
    let file = File::open(path)?;
    parse_libsvm(BufReader::new(file), opts)
}

type SparseRow = Vec<(usize, f64)>;

pub fn parse_libsvm<R: BufRead>(reader: R, opts: &LibsvmOptions) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut rows: Vec<SparseRow> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.trim();
        if body.is_empty() {
            continue;
        }
        let (label, row) = parse_line(body, lineno)?;
        if let Some(&(idx, _)) = row.iter().max_by_key(|(i, _)| *i) {
            max_index = max_index.max(idx);
            if let Some(d) = opts.feature_dim {
                if idx > d {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("feature index {idx} exceeds the dimension {d}"),
                    });
                }
            }
        }
        raw_labels.push((label, lineno));
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::invalid("dataset has no examples"));
    }

    let classes = match &opts.classes {
        Some(c) => c.clone(),
        None => {
            let mut c: Vec<f64> = raw_labels.iter().map(|&(l, _)| l).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        }
    };
    let labels = raw_labels
        .iter()
        .map(|&(l, lineno)| {
            classes
                .iter()
                .position(|&c| c == l)
                .ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: format!("label {l} is not a known class"),
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let d = opts.feature_dim.unwrap_or(max_index);
    let mut x = DenseMatrix::zeros(d, rows.len());
    for (i, row) in rows.iter().enumerate() {
        let col = x.col_mut(i);
        for &(idx, v) in row {
            col[idx - 1] = v;
        }
    }
    Dataset::new(x, labels, classes)
}

fn parse_line(body: &str, line: usize) -> Result<(f64, SparseRow)> {
    let err = |msg: String| Error::Parse { line, msg };
    let mut fields = body.split(' ');
    let label_tok = fields.next().unwrap_or_default();
    let label: f64 = label_tok
        .parse()
        .map_err(|_| err(format!("invalid label {label_tok:?}")))?;
    if !label.is_finite() {
        return Err(err(format!("label {label_tok:?} is not finite")));
    }
    let mut row: SparseRow = Vec::new();
    for tok in fields {
        if tok.is_empty() {
            return Err(err("empty field (separators must be a single space)".into()));
        }
        let (idx_tok, val_tok) = tok
            .split_once(':')
            .ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
        let idx: i64 = idx_tok
            .parse()
            .map_err(|_| err(format!("invalid feature index {idx_tok:?}")))?;
        if idx <= 0 {
            return Err(err(format!("feature index {idx} must be positive")));
        }
        let val: f64 = val_tok
            .parse()
            .map_err(|_| err(format!("invalid feature value {val_tok:?}")))?;
        if !val.is_finite() {
            return Err(err(format!("feature value {val_tok:?} is not finite")));
        }
        let idx = idx as usize;
        if row.iter().any(|&(j, _)| j == idx) {
            return Err(err(format!("duplicate feature index {idx}")));
        }
        row.push((idx, val));
    }
    Ok((label, row))
}

/// Writes nonzero features only, in index order, with the original labels.
pub fn write_libsvm<W: Write>(mut out: W, data: &Dataset) -> Result<()> {
    for i in 0..data.num_examples() {
        write!(out, "{}", data.classes()[data.labels()[i]])?;
        for (j, &v) in data.example(i).iter().enumerate() {
            if v != 0.0 {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

fn checksum(payload: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(payload);
    h.finish()
}

pub fn encode_model(model: &Model) -> Vec<u8> {
    let w = model.weights();
    let (d, m) = (w.rows(), w.cols());
    let mut buf = Vec::with_capacity(64 + 8 * (m + d * m));
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    buf.extend_from_slice(&(m as u64).to_le_bytes());
    buf.extend_from_slice(&(d as u64).to_le_bytes());
    buf.extend_from_slice(&(model.loss().k as u64).to_le_bytes());
    buf.extend_from_slice(&model.lambda().to_le_bytes());
    buf.push(model.loss().variant.tag());
    for &c in model.classes() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    let start = buf.len();
    for row in 0..d {
        for col in 0..m {
            buf.extend_from_slice(&w.get(row, col).to_le_bytes());
        }
    }
    let sum = checksum(&buf[start..]);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated file while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_model(buf: &[u8]) -> Result<Model> {
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(7, "magic")? != MODEL_MAGIC {
        return Err(Error::Format("bad magic, not a model file".into()));
    }
    let version = u32::from_le_bytes(cur.take(4, "version")?.try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {version}, expected {MODEL_VERSION}"
        )));
    }
    let m = cur.u64("m")? as usize;
    let d = cur.u64("d")? as usize;
    let k = cur.u64("k")? as usize;
    let lambda = cur.f64("lambda")?;
    let tag = cur.take(1, "variant")?[0];
    let variant = LossVariant::from_tag(tag)
        .ok_or_else(|| Error::Format(format!("unknown loss variant tag {tag}")))?;
    let expected = m
        .checked_mul(d)
        .and_then(|md| md.checked_add(m))
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(8));
    if expected != Some(buf.len() - cur.pos) {
        return Err(Error::Format(format!(
            "payload size mismatch for m = {m}, d = {d}"
        )));
    }
    let classes = (0..m)
        .map(|_| cur.f64("labels"))
        .collect::<Result<Vec<_>>>()?;
    let payload = cur.take(8 * m * d, "weights")?;
    let stored = cur.u64("checksum")?;
    if checksum(payload) != stored {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let mut w = DenseMatrix::zeros(d, m);
    for (idx, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        w.set(idx / m, idx % m, v);
    }
    let loss = LossSpec::new(variant, k).map_err(|e| Error::Format(e.to_string()))?;
    Model::new(w, loss, lambda, classes).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&encode_model(model))?;
    out.flush()?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Model> {
    let mut buf = Vec::new();
    File::open(path)?.read_to_end(&mut buf)?;
    decode_model(&buf)
}
