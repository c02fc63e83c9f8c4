use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::SparseSymmetricMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
}

/// Reads a Matrix Market coordinate file (real, integer or pattern; general
/// or symmetric) into symmetric storage.
///
/// Pattern entries get value 1.0 and duplicate coordinates are summed. A
/// symmetric header mirrors every off-diagonal entry; a general header must
/// already describe a symmetric matrix.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseSymmetricMatrix> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = match lines.next() {
        Some((no, l)) => (no, l?),
        None => return Err(parse_err(1, "empty file".into())),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(lineno, format!("bad header {header:?}")));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(lineno, format!("unsupported format {:?}", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(lineno, format!("unsupported field {other:?}"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(lineno, format!("unsupported symmetry {other:?}"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut expected_nnz = 0usize;
    let mut entries = Vec::new();
    let mut first_line: HashMap<(usize, usize), usize> = HashMap::new();

    for (lineno, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((rows, _)) = size else {
            if fields.len() != 3 {
                return Err(parse_err(lineno, "size line must be `rows cols nnz`".into()));
            }
            let nums = fields
                .iter()
                .map(|f| f.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(lineno, format!("bad size line: {e}")))?;
            if nums[0] != nums[1] {
                return Err(parse_err(lineno, format!("matrix is {}x{}, not square", nums[0], nums[1])));
            }
            size = Some((nums[0], nums[1]));
            expected_nnz = nums[2];
            continue;
        };

        let want = if field == Field::Pattern { 2 } else { 3 };
        if fields.len() != want {
            return Err(parse_err(lineno, format!("expected {want} fields, found {}", fields.len())));
        }
        let index = |s: &str| -> Result<usize> {
            let i: usize = s.parse().map_err(|e| parse_err(lineno, format!("bad index {s:?}: {e}")))?;
            if i == 0 || i > rows {
                return Err(parse_err(lineno, format!("index {i} outside 1..={rows}")));
            }
            Ok(i - 1)
        };
        let i = index(fields[0])?;
        let j = index(fields[1])?;
        let v = match field {
            Field::Pattern => 1.0,
            Field::Real => fields[2]
                .parse::<f64>()
                .map_err(|e| parse_err(lineno, format!("bad value {:?}: {e}", fields[2])))?,
        };
        first_line.entry((i, j)).or_insert(lineno);
        entries.push((i, j, v));
    }

    let Some((n, _)) = size else {
        return Err(parse_err(1, "missing size line".into()));
    };
    if entries.len() != expected_nnz {
        return Err(parse_err(
            first_line.values().copied().max().unwrap_or(1),
            format!("size line announces {expected_nnz} entries, found {}", entries.len()),
        ));
    }

    match symmetry {
        Symmetry::Symmetric => SparseSymmetricMatrix::from_triangle(n, entries),
        Symmetry::General => SparseSymmetricMatrix::from_full_entries(n, entries).map_err(|(i, j)| {
            let line = first_line.get(&(i, j)).copied().unwrap_or(1);
            parse_err(
                line,
                format!("general matrix is not symmetric at ({}, {})", i + 1, j + 1),
            )
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::LinearOperator;
    use nalgebra::DMatrix;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn triangle_pattern_file() {
        let f = write("%%MatrixMarket matrix coordinate pattern symmetric\n% K3\n3 3 3\n2 1\n3 1\n3 2\n");
        let a = read_matrix_market(f.path()).unwrap();
        assert_eq!(a.dim(), 3);
        assert_eq!(a.nnz(), 6);
        assert_eq!(a.get(0, 1), Some(1.0));
    }

    #[test]
    fn duplicates_are_summed() {
        let f = write("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n1 2 0.5\n1 2 0.5\n");
        let a = read_matrix_market(f.path()).unwrap();
        assert_eq!(a.get(0, 1), Some(1.0));
        assert_eq!(a.get(1, 0), Some(1.0));
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn header_only_is_zero_map() {
        let f = write("%%MatrixMarket matrix coordinate real general\n4 4 0\n");
        let a = read_matrix_market(f.path()).unwrap();
        assert_eq!(a.nnz(), 0);
        let y = a.apply(&DMatrix::from_element(4, 2, 3.0)).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn general_symmetric_file_accepted() {
        let f = write("%%MatrixMarket matrix coordinate integer general\n2 2 3\n1 2 4\n2 1 4\n2 2 -1\n");
        let a = read_matrix_market(f.path()).unwrap();
        assert_eq!(a.to_dense(), nalgebra::dmatrix![0.0, 4.0; 4.0, -1.0]);
    }

    fn parse_line(contents: &str) -> usize {
        match read_matrix_market(write(contents).path()) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_line("%%MatrixMarket matrix array real general\n2 2\n"), 1);
        assert_eq!(parse_line("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"), 3);
        assert_eq!(
            parse_line("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 2 1.0\n2 1 2.0\n"),
            4
        );
        assert_eq!(parse_line("%%MatrixMarket matrix coordinate real general\n2 3 0\n"), 2);
        assert_eq!(parse_line("%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 x\n"), 3);
    }
}
