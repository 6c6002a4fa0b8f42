//! Dense ingestion of Matrix Market files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::GalleryError;
use crate::dense::SymMatrix;

/// Largest order accepted by [`load_matrix_market`].
pub const DEFAULT_CAP: usize = 10_000;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SymMatrix, GalleryError> {
    load_matrix_market_with_cap(path, DEFAULT_CAP)
}

pub fn load_matrix_market_with_cap(path: impl AsRef<Path>, cap: usize) -> Result<SymMatrix, GalleryError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| GalleryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix_market(BufReader::new(file), cap).map_err(|e| match e {
        GalleryError::Io { source, .. } => GalleryError::Io {
            path: path.to_path_buf(),
            source,
        },
        e => e,
    })
}

fn parse_err(line: usize, msg: impl Into<String>) -> GalleryError {
    GalleryError::Parse { line, msg: msg.into() }
}

fn parse_header(line: &str) -> Result<(Layout, Symmetry), GalleryError> {
    let words: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" {
        return Err(parse_err(1, "expected `%%MatrixMarket matrix <layout> <field> <symmetry>`"));
    }
    if words[1] != "matrix" {
        return Err(GalleryError::Unsupported(format!("object `{}`", words[1])));
    }
    let layout = match words[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(GalleryError::Unsupported(format!("layout `{other}`"))),
    };
    match words[3].as_str() {
        "real" | "integer" | "double" => {}
        "pattern" => return Err(GalleryError::PatternOnly),
        other => return Err(GalleryError::Unsupported(format!("field `{other}`"))),
    }
    let sym = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(GalleryError::Unsupported(format!("symmetry `{other}`"))),
    };
    Ok((layout, sym))
}

/// Reads a real symmetric (or numerically symmetric general) matrix into
/// dense storage. Symmetric files may store either triangle.
pub fn parse_matrix_market(reader: impl BufRead, cap: usize) -> Result<SymMatrix, GalleryError> {
    let mut lines = reader.lines().enumerate();
    let io = |source| GalleryError::Io {
        path: Default::default(),
        source,
    };
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (layout, sym) = parse_header(&header.map_err(io)?)?;

    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('%')).then(|| Ok((no + 1, t.to_string())))
        }
        Err(e) => Some(Err(e)),
    });
    let (size_no, size) = data.next().ok_or_else(|| parse_err(2, "missing size line"))?.map_err(io)?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|w| w.parse::<usize>().map_err(|_| parse_err(size_no, format!("bad size entry `{w}`"))))
        .collect::<Result<_, _>>()?;
    let expected = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(parse_err(size_no, format!("expected {expected} size fields, found {}", dims.len())));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows != cols {
        return Err(GalleryError::NotSquare { rows, cols });
    }
    let n = rows;
    if n == 0 {
        return Err(parse_err(size_no, "matrix order must be positive"));
    }
    if n > cap {
        return Err(GalleryError::TooLarge { n, cap });
    }
    let mut a = vec![0.0; n * n];
    let parse_val = |no: usize, w: &str| -> Result<f64, GalleryError> {
        let v: f64 = w.parse().map_err(|_| parse_err(no, format!("bad value `{w}`")))?;
        if !v.is_finite() {
            return Err(parse_err(no, "non-finite value"));
        }
        Ok(v)
    };
    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for item in data {
                let (no, l) = item.map_err(io)?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() == 2 {
                    return Err(GalleryError::PatternOnly);
                }
                if f.len() != 3 {
                    return Err(parse_err(no, "expected `row col value`"));
                }
                let idx = |w: &str| -> Result<usize, GalleryError> {
                    let i: usize = w.parse().map_err(|_| parse_err(no, format!("bad index `{w}`")))?;
                    if i == 0 || i > n {
                        return Err(parse_err(no, format!("index {i} outside 1..={n}")));
                    }
                    Ok(i - 1)
                };
                let (i, j, v) = (idx(f[0])?, idx(f[1])?, parse_val(no, f[2])?);
                a[i * n + j] = v;
                if sym == Symmetry::Symmetric {
                    a[j * n + i] = v;
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_no, format!("header promises {nnz} entries, found {seen}")));
            }
        }
        Layout::Array => {
            // Column-major; symmetric files list the lower triangle only.
            let mut slots = (0..n).flat_map(|j| {
                let from = if sym == Symmetry::Symmetric { j } else { 0 };
                (from..n).map(move |i| (i, j))
            });
            for item in data {
                let (no, l) = item.map_err(io)?;
                for w in l.split_whitespace() {
                    let (i, j) = slots.next().ok_or_else(|| parse_err(no, "more values than the header allows"))?;
                    let v = parse_val(no, w)?;
                    a[i * n + j] = v;
                    if sym == Symmetry::Symmetric {
                        a[j * n + i] = v;
                    }
                }
            }
            if slots.next().is_some() {
                return Err(parse_err(size_no, "fewer values than the header requires"));
            }
        }
    }
    SymMatrix::from_row_major(n, a).map_err(|e| match e {
        crate::dense::SymmetryError::NotSymmetric { i, j, .. } => GalleryError::NotSymmetric { i, j },
        other => GalleryError::InvalidDimensions(other.to_string()),
    })
}

/// Writes the lower triangle in coordinate form; values use the shortest
/// representation that parses back to the same bits.
pub fn write_matrix_market(a: &SymMatrix, path: impl AsRef<Path>) -> Result<(), GalleryError> {
    let path = path.as_ref();
    let wrap = |source| GalleryError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut w = BufWriter::new(file);
    let n = a.n();
    let nnz = (0..n).map(|i| a.row(i)[..=i].iter().filter(|v| **v != 0.0).count()).sum::<usize>();
    (|| -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{n} {n} {nnz}")?;
        for j in 0..n {
            for i in j..n {
                let v = a.get(i, j);
                if v != 0.0 {
                    writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
                }
            }
        }
        w.flush()
    })()
    .map_err(wrap)
}
