//! Dense edge-probability matrices and their text format.

use std::fs;
use std::path::Path;

use logicforge_core::io::write_atomic;

use crate::RepairError;

/// An `N x N` matrix of edge probabilities; entry `(i, j)` is the probability
/// of an edge from node `i` to node `j`. All entries lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn zeros(n: usize) -> Self {
        ProbabilityMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Build from row-major data, validating length and entry range.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self, RepairError> {
        if data.len() != n * n {
            return Err(RepairError::BadLength {
                n,
                expected: n * n,
                got: data.len(),
            });
        }
        for (idx, &value) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(RepairError::OutOfRange {
                    row: idx / n,
                    col: idx % n,
                    value,
                });
            }
        }
        Ok(ProbabilityMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, src: usize, dst: usize) -> f64 {
        self.data[src * self.n + dst]
    }

    #[inline]
    pub fn set(&mut self, src: usize, dst: usize, value: f64) {
        assert!(
            (0.0..=1.0).contains(&value) && value.is_finite(),
            "probability {value} outside [0, 1]"
        );
        self.data[src * self.n + dst] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Render the text format: a `pmatrix <N>` header, then `N` rows of `N`
/// space-separated probabilities.
pub fn pmatrix_to_string(m: &ProbabilityMatrix) -> String {
    let mut out = format!("pmatrix {}\n", m.n());
    for i in 0..m.n() {
        let row: Vec<String> = (0..m.n()).map(|j| format!("{}", m.get(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_pmatrix_str(text: &str) -> Result<ProbabilityMatrix, RepairError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (header_idx, header) = lines.next().ok_or(RepairError::Parse {
        line: 1,
        message: "empty matrix file".to_string(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 || fields[0] != "pmatrix" {
        return Err(RepairError::Parse {
            line: header_idx + 1,
            message: format!("expected `pmatrix <N>`, got `{header}`"),
        });
    }
    let n: usize = fields[1].parse().map_err(|_| RepairError::Parse {
        line: header_idx + 1,
        message: format!("invalid size `{}`", fields[1]),
    })?;
    let mut data = Vec::with_capacity(n * n);
    let mut rows = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != n {
            return Err(RepairError::Parse {
                line: line_no,
                message: format!("expected {n} entries, got {}", entries.len()),
            });
        }
        for raw in entries {
            let value: f64 = raw.parse().map_err(|_| RepairError::Parse {
                line: line_no,
                message: format!("invalid probability `{raw}`"),
            })?;
            data.push(value);
        }
        rows += 1;
    }
    if rows != n {
        return Err(RepairError::Parse {
            line: header_idx + 1,
            message: format!("expected {n} rows, got {rows}"),
        });
    }
    ProbabilityMatrix::from_vec(n, data)
}

pub fn read_pmatrix(path: impl AsRef<Path>) -> Result<ProbabilityMatrix, RepairError> {
    let text = fs::read_to_string(path)?;
    parse_pmatrix_str(&text)
}

pub fn write_pmatrix(path: impl AsRef<Path>, m: &ProbabilityMatrix) -> Result<(), RepairError> {
    write_atomic(path, &pmatrix_to_string(m))?;
    Ok(())
}
