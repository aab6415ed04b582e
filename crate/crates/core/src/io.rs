//! On-disk formats.
//!
//! Binary matrices share one little-endian layout:
//!
//! ```text
//! magic   [u8; 4]   "CAJF" for features, "CAJD" for distances
//! version u32       currently 1
//! rows    u32
//! cols    u32
//! payload rows*cols f32, row-major
//! ```
//!
//! Label files are CSV with header `index,camera[,identity]` and one row per
//! sample in index order.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::{DistanceKind, DistanceMatrix, Error, FeatureMatrix, Result, SampleMeta, Scalar};

pub const FEATURE_MAGIC: [u8; 4] = *b"CAJF";
pub const DISTANCE_MAGIC: [u8; 4] = *b"CAJD";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixFormat {
    #[default]
    Binary,
    Csv,
}

impl std::str::FromStr for MatrixFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "binary" => Ok(Self::Binary),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format `{other}` (expected binary or csv)")),
        }
    }
}

fn write_binary<T: Scalar>(
    path: &Path,
    magic: [u8; 4],
    rows: usize,
    cols: usize,
    values: impl Iterator<Item = T>,
) -> Result<()> {
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidParams(format!("dimension {v} exceeds u32")))
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&magic)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&dim(rows)?.to_le_bytes())?;
    w.write_all(&dim(cols)?.to_le_bytes())?;
    for v in values {
        w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_binary(path: &Path, magic: [u8; 4]) -> Result<(usize, usize, Vec<f32>)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let found = bytes.len() as u64;
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN,
            found,
        });
    }
    let head: [u8; 4] = bytes[..4].try_into().expect("four bytes");
    if head != magic {
        return Err(Error::BadMagic {
            path: path.into(),
            expected: magic,
            found: head,
        });
    }
    if found < HEADER_LEN {
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN,
            found,
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("four bytes"));
    let version = word(4);
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.into(),
            version,
        });
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    let expected = HEADER_LEN + 4 * rows as u64 * cols as u64;
    if found < expected {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            found,
        });
    }
    if found > expected {
        return Err(Error::TrailingBytes {
            path: path.into(),
            expected,
            found,
        });
    }
    let values = bytes[HEADER_LEN as usize..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")))
        .collect();
    Ok((rows, cols, values))
}

pub fn write_features<T: Scalar>(features: &FeatureMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    write_binary(
        path.as_ref(),
        FEATURE_MAGIC,
        features.n_samples(),
        features.dim(),
        features.view().iter().copied(),
    )
}

pub fn read_features<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureMatrix<T>> {
    let (rows, cols, values) = read_binary(path.as_ref(), FEATURE_MAGIC)?;
    FeatureMatrix::from_shape_vec(
        rows,
        cols,
        values.into_iter().map(|v| T::of(f64::from(v))).collect(),
    )
}

/// Write a distance matrix. Binary stores f32; CSV stores each value in the
/// shortest decimal form that parses back to the same f64, one matrix row per
/// line, no header.
pub fn write_matrix<T: Scalar>(
    dist: &DistanceMatrix<T>,
    path: impl AsRef<Path>,
    format: MatrixFormat,
) -> Result<()> {
    let path = path.as_ref();
    match format {
        MatrixFormat::Binary => write_binary(
            path,
            DISTANCE_MAGIC,
            dist.nrows(),
            dist.ncols(),
            dist.view().iter().copied(),
        ),
        MatrixFormat::Csv => {
            let mut w = BufWriter::new(File::create(path)?);
            for row in dist.view().rows() {
                let line: Vec<String> = row.iter().map(|v| v.as_f64().to_string()).collect();
                writeln!(w, "{}", line.join(","))?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn read_matrix<T: Scalar>(
    path: impl AsRef<Path>,
    format: MatrixFormat,
    kind: DistanceKind,
) -> Result<DistanceMatrix<T>> {
    let path = path.as_ref();
    let data = match format {
        MatrixFormat::Binary => {
            let (rows, cols, values) = read_binary(path, DISTANCE_MAGIC)?;
            Array2::from_shape_vec(
                (rows, cols),
                values.into_iter().map(|v| T::of(f64::from(v))).collect(),
            )
            .expect("payload length checked")
        }
        MatrixFormat::Csv => read_csv_matrix(path)?,
    };
    DistanceMatrix::new(data, kind)
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        line,
        message: message.into(),
    }
}

fn read_csv_matrix<T: Scalar>(path: &Path) -> Result<Array2<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| parse_error(path, 0, e.to_string()))?;
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = 0;
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(path, rows as u64 + 1, e.to_string()))?;
        if rows == 0 {
            cols = record.len();
        } else if record.len() != cols {
            return Err(parse_error(
                path,
                rows as u64 + 1,
                format!("expected {cols} fields, found {}", record.len()),
            ));
        }
        for field in &record {
            let v: f64 = field.trim().parse().map_err(|_| {
                parse_error(path, rows as u64 + 1, format!("bad number `{field}`"))
            })?;
            values.push(T::of(v));
        }
        rows += 1;
    }
    Ok(Array2::from_shape_vec((rows, cols), values).expect("row lengths checked"))
}

pub fn write_labels(meta: &SampleMeta, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    match meta.identities() {
        Some(ids) => {
            writeln!(w, "index,camera,identity")?;
            for (i, (c, id)) in meta.cameras().iter().zip(ids).enumerate() {
                writeln!(w, "{i},{c},{id}")?;
            }
        }
        None => {
            writeln!(w, "index,camera")?;
            for (i, c) in meta.cameras().iter().enumerate() {
                writeln!(w, "{i},{c}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<SampleMeta> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_error(path, 0, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let with_identity = match headers.iter().collect::<Vec<_>>().as_slice() {
        ["index", "camera"] => false,
        ["index", "camera", "identity"] => true,
        other => {
            return Err(parse_error(
                path,
                1,
                format!("expected header `index,camera[,identity]`, found `{}`", other.join(",")),
            ))
        }
    };
    let mut cameras = Vec::new();
    let mut identities = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row as u64 + 2;
        let record = record.map_err(|e| parse_error(path, line, e.to_string()))?;
        let index: usize = record[0]
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad index `{}`", &record[0])))?;
        if index != row {
            return Err(parse_error(
                path,
                line,
                format!("expected index {row}, found {index}"),
            ));
        }
        let camera: u32 = record[1].parse().map_err(|_| {
            parse_error(
                path,
                line,
                format!("camera `{}` is not a nonnegative integer", &record[1]),
            )
        })?;
        cameras.push(camera);
        if with_identity {
            let id: i64 = record[2]
                .parse()
                .map_err(|_| parse_error(path, line, format!("bad identity `{}`", &record[2])))?;
            identities.push(id);
        }
    }
    SampleMeta::new(cameras, with_identity.then_some(identities))
}
