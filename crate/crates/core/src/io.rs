//! Plain-text circuit and truth-table file formats.
//!
//! Circuit files:
//!
//! ```text
//! circuit <N> <num_pi> <num_po>
//! node <id> <PI|PO|NAND>
//! ...
//! edge <src> <dst>
//! ...
//! ```
//!
//! Node ids must be dense in `0..N`; node and edge lines may appear in any
//! order after the header. Truth-table files hold one line per output, each a
//! `{0,1}` string of length `2^num_inputs` whose character `r` is the output
//! on row `r`.

use std::fs;
use std::path::Path;

use crate::circuit::{Circuit, NodeKind};
use crate::error::CircuitError;
use crate::truth::TruthTable;
use crate::MAX_TRUTH_INPUTS;

/// Render a circuit in the text format (nodes ascending, edges sorted).
pub fn circuit_to_string(circuit: &Circuit) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "circuit {} {} {}\n",
        circuit.node_count(),
        circuit.num_pi(),
        circuit.num_po()
    ));
    for id in 0..circuit.node_count() {
        out.push_str(&format!("node {} {}\n", id, circuit.kind(id)));
    }
    for (src, dst) in circuit.adjacency().edges() {
        out.push_str(&format!("edge {src} {dst}\n"));
    }
    out
}

/// Parse the text format. Line numbers in errors are 1-based.
pub fn parse_circuit_str(text: &str) -> Result<Circuit, CircuitError> {
    let mut lines = text.lines().enumerate();
    let (header_line, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| CircuitError::parse(1, "empty circuit file"))?;
    let header_no = header_line + 1;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "circuit" {
        return Err(CircuitError::parse(
            header_no,
            format!("expected `circuit <N> <num_pi> <num_po>`, got `{header}`"),
        ));
    }
    let n: usize = parse_field(fields[1], header_no, "node count")?;
    let num_pi: usize = parse_field(fields[2], header_no, "PI count")?;
    let num_po: usize = parse_field(fields[3], header_no, "PO count")?;

    let mut kinds: Vec<Option<NodeKind>> = vec![None; n];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "node" => {
                if fields.len() != 3 {
                    return Err(CircuitError::parse(line_no, "expected `node <id> <kind>`"));
                }
                let id: usize = parse_field(fields[1], line_no, "node id")?;
                if id >= n {
                    return Err(CircuitError::parse(
                        line_no,
                        format!("node id {id} out of range for {n} nodes"),
                    ));
                }
                let kind = NodeKind::parse(fields[2]).ok_or_else(|| {
                    CircuitError::parse(line_no, format!("unknown node kind `{}`", fields[2]))
                })?;
                if kinds[id].is_some() {
                    return Err(CircuitError::parse(line_no, format!("duplicate node id {id}")));
                }
                kinds[id] = Some(kind);
            }
            "edge" => {
                if fields.len() != 3 {
                    return Err(CircuitError::parse(line_no, "expected `edge <src> <dst>`"));
                }
                let src: usize = parse_field(fields[1], line_no, "edge source")?;
                let dst: usize = parse_field(fields[2], line_no, "edge target")?;
                if src >= n || dst >= n {
                    return Err(CircuitError::parse(
                        line_no,
                        format!("edge ({src}, {dst}) out of range for {n} nodes"),
                    ));
                }
                edges.push((src, dst));
            }
            other => {
                return Err(CircuitError::parse(
                    line_no,
                    format!("unknown directive `{other}`"),
                ));
            }
        }
    }

    let kinds: Vec<NodeKind> = kinds
        .into_iter()
        .enumerate()
        .map(|(id, k)| k.ok_or_else(|| CircuitError::parse(header_no, format!("missing node {id}"))))
        .collect::<Result<_, _>>()?;
    let circuit = Circuit::new(kinds, &edges);
    if circuit.num_pi() != num_pi {
        return Err(CircuitError::parse(
            header_no,
            format!("header claims {num_pi} PIs, found {}", circuit.num_pi()),
        ));
    }
    if circuit.num_po() != num_po {
        return Err(CircuitError::parse(
            header_no,
            format!("header claims {num_po} POs, found {}", circuit.num_po()),
        ));
    }
    Ok(circuit)
}

pub fn read_circuit(path: impl AsRef<Path>) -> Result<Circuit, CircuitError> {
    let text = fs::read_to_string(path)?;
    parse_circuit_str(&text)
}

pub fn write_circuit(path: impl AsRef<Path>, circuit: &Circuit) -> Result<(), CircuitError> {
    write_atomic(path, &circuit_to_string(circuit))?;
    Ok(())
}

/// Render a truth table in the one-line-per-output format.
pub fn truth_to_string(table: &TruthTable) -> String {
    let mut out = String::new();
    for output in 0..table.num_outputs() {
        out.push_str(&table.column_string(output));
        out.push('\n');
    }
    out
}

/// Parse a truth-table file body.
pub fn parse_truth_str(text: &str) -> Result<TruthTable, CircuitError> {
    let mut columns: Vec<(usize, &str)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        columns.push((idx + 1, line));
    }
    if columns.is_empty() {
        return Err(CircuitError::parse(1, "truth table has no output lines"));
    }
    let rows = columns[0].1.len();
    if !rows.is_power_of_two() {
        return Err(CircuitError::parse(
            columns[0].0,
            format!("line length {rows} is not a power of two"),
        ));
    }
    let num_inputs = rows.trailing_zeros() as usize;
    if num_inputs > MAX_TRUTH_INPUTS {
        return Err(CircuitError::TooManyInputs {
            num_inputs,
            max: MAX_TRUTH_INPUTS,
        });
    }
    let mut table = TruthTable::new_zeroed(num_inputs, columns.len())?;
    for (output, &(line_no, line)) in columns.iter().enumerate() {
        if line.len() != rows {
            return Err(CircuitError::parse(
                line_no,
                format!("line length {} differs from first line ({rows})", line.len()),
            ));
        }
        for (row, ch) in line.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => table.set_bit(output, row, true),
                other => {
                    return Err(CircuitError::parse(
                        line_no,
                        format!("unexpected character `{other}` (want 0 or 1)"),
                    ));
                }
            }
        }
    }
    Ok(table)
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<TruthTable, CircuitError> {
    let text = fs::read_to_string(path)?;
    parse_truth_str(&text)
}

pub fn write_truth(path: impl AsRef<Path>, table: &TruthTable) -> Result<(), CircuitError> {
    write_atomic(path, &truth_to_string(table))?;
    Ok(())
}

/// Write a file via a temporary sibling plus rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: impl AsRef<Path>, contents: &str) -> std::io::Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn parse_field<T: std::str::FromStr>(
    raw: &str,
    line: usize,
    what: &str,
) -> Result<T, CircuitError> {
    raw.parse()
        .map_err(|_| CircuitError::parse(line, format!("invalid {what} `{raw}`")))
}
