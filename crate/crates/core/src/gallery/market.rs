//! Matrix Market reader and writer for dense real matrices.
//!
//! Reads `array` and `coordinate` files with `real` or `integer` fields and
//! `general`, `symmetric` or `skew-symmetric` storage. Writes `array real
//! general` with 17 significant digits, which round-trips every finite
//! double.

use std::fmt::Write as _;
use std::path::Path;

use crate::dense::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrix_market(&text, &path.display().to_string())
}

/// Parses Matrix Market text; `origin` names the source in error messages.
pub fn parse_matrix_market(text: &str, origin: &str) -> Result<Matrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (hl, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let h: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(err(hl, format!("expected a '%%MatrixMarket matrix' header, got '{header}'")));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(hl, format!("unsupported format '{other}'"))),
    };
    if h[3] != "real" && h[3] != "integer" {
        return Err(err(hl, format!("unsupported field '{}'", h[3])));
    }
    let sym = match h[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(err(hl, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (sl, size) = body
        .next()
        .ok_or_else(|| err(hl + 1, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(sl, format!("bad size line '{size}': {e}")))?;
    let want = if coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(err(sl, format!("size line needs {want} integers, got '{size}'")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if sym != Symmetry::General && rows != cols {
        return Err(err(sl, "symmetric storage needs a square matrix".into()));
    }
    let mut a = Matrix::zeros(rows, cols);
    let parse_val = |line: usize, t: &str| {
        t.parse::<f64>()
            .map_err(|e| err(line, format!("bad value '{t}': {e}")))
    };

    let mut last = sl;
    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (ln, l) in body {
            last = ln;
            if seen == nnz {
                return Err(err(ln, format!("more than the declared {nnz} entries")));
            }
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(err(ln, format!("expected 'row col value', got '{l}'")));
            }
            let idx = |s: &str, max: usize| -> Result<usize> {
                let v: usize = s.parse().map_err(|e| err(ln, format!("bad index '{s}': {e}")))?;
                if v == 0 || v > max {
                    return Err(err(ln, format!("index {v} outside 1..={max}")));
                }
                Ok(v - 1)
            };
            let (i, j) = (idx(t[0], rows)?, idx(t[1], cols)?);
            let v = parse_val(ln, t[2])?;
            if sym != Symmetry::General && j > i {
                return Err(err(ln, "symmetric storage lists the lower triangle only".into()));
            }
            a.set(i, j, a.get(i, j) + v);
            if i != j {
                match sym {
                    Symmetry::Symmetric => a.set(j, i, a.get(j, i) + v),
                    Symmetry::Skew => a.set(j, i, a.get(j, i) - v),
                    Symmetry::General => {}
                }
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(err(last, format!("declared {nnz} entries, found {seen}")));
        }
    } else {
        // column-major; symmetric kinds store the lower triangle
        let slots: Vec<(usize, usize)> = match sym {
            Symmetry::General => (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).collect(),
            Symmetry::Symmetric => (0..cols).flat_map(|j| (j..rows).map(move |i| (i, j))).collect(),
            Symmetry::Skew => (0..cols)
                .flat_map(|j| (j + 1..rows).map(move |i| (i, j)))
                .collect(),
        };
        let mut it = slots.iter();
        for (ln, l) in body {
            last = ln;
            for t in l.split_whitespace() {
                let &(i, j) = it
                    .next()
                    .ok_or_else(|| err(ln, format!("more than the expected {} values", slots.len())))?;
                let v = parse_val(ln, t)?;
                a.set(i, j, v);
                match sym {
                    Symmetry::Symmetric => a.set(j, i, v),
                    Symmetry::Skew => a.set(j, i, -v),
                    Symmetry::General => {}
                }
            }
        }
        let missing = it.count();
        if missing > 0 {
            return Err(err(
                last,
                format!("expected {} values, found {}", slots.len(), slots.len() - missing),
            ));
        }
    }
    Ok(a)
}

/// Writes `a` as `array real general`.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", a.rows(), a.cols());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            let _ = writeln!(s, "{:.16e}", a.get(i, j));
        }
    }
    std::fs::write(path, s).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{generate, MatrixSpec};

    #[test]
    fn identity_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i3.mtx");
        write_matrix_market(&p, &Matrix::identity(3)).unwrap();
        assert_eq!(read_matrix_market(&p).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn zielke_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.mtx");
        let z = generate(&MatrixSpec::Zielke { n: 6 }).unwrap();
        write_matrix_market(&p, &z).unwrap();
        assert_eq!(read_matrix_market(&p).unwrap(), z);

        let r = generate(&MatrixSpec::RandomCond { n: 5, cond: 30.0, seed: 9 }).unwrap();
        write_matrix_market(&p, &r).unwrap();
        let back = read_matrix_market(&p).unwrap();
        assert!(r.data().iter().zip(back.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn coordinate_placement() {
        let text = "%%MatrixMarket matrix coordinate real general\n% note\n2 2 2\n1 2 5.0\n2 1 -5.0\n";
        let a = parse_matrix_market(text, "mem").unwrap();
        assert_eq!(a, Matrix::from_rows(&[[0.0, 5.0], [-5.0, 0.0]]).unwrap());
    }

    #[test]
    fn symmetric_storage_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n1 1 4\n3 1 2\n";
        let a = parse_matrix_market(text, "mem").unwrap();
        assert_eq!(a.get(0, 2), 2.0);
        assert_eq!(a.get(2, 0), 2.0);
        let arr = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n";
        let b = parse_matrix_market(arr, "mem").unwrap();
        assert_eq!(b, Matrix::from_rows(&[[1.0, 2.0], [2.0, 3.0]]).unwrap());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("%%MatrixMarket vector array real general\n1 1\n1\n", 1),
            ("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n2 2 1\n", 4),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n", 3),
            ("%%MatrixMarket matrix array real general\n2 2\n1\n2\nx\n4\n", 5),
            ("%%MatrixMarket matrix array real general\n2\n", 2),
        ];
        for (text, line) in cases {
            match parse_matrix_market(text, "f.mtx") {
                Err(Error::Parse { line: l, path, .. }) => {
                    assert_eq!(l, line, "{text}");
                    assert_eq!(path, "f.mtx");
                }
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
        match read_matrix_market("/nonexistent/dir/m.mtx") {
            Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("/nonexistent/dir/m.mtx")),
            other => panic!("{other:?}"),
        }
    }
}
