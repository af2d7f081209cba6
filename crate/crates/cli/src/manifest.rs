//! Benchmark manifests: a CSV listing named truth-table files.

use anyhow::{bail, Context, Result};
use logicforge_core::io::read_truth;
use logicforge_core::TruthTable;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const MANIFEST_HEADER: &str = "name,category,num_pi,num_po,truth_path";

/// Where a benchmark function comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Random,
    Basic,
    Espresso,
    Arithmetic,
    Logicnet,
}

impl FromStr for Category {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Category> {
        Ok(match s {
            "random" => Category::Random,
            "basic" => Category::Basic,
            "espresso" => Category::Espresso,
            "arithmetic" => Category::Arithmetic,
            "logicnet" => Category::Logicnet,
            other => bail!("unknown category `{other}`"),
        })
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Random => "random",
            Category::Basic => "basic",
            Category::Espresso => "espresso",
            Category::Arithmetic => "arithmetic",
            Category::Logicnet => "logicnet",
        })
    }
}

/// One benchmark: a named truth-table file with declared dimensions.
#[derive(Clone, Debug)]
pub struct BenchmarkEntry {
    pub name: String,
    pub category: Category,
    pub num_pi: usize,
    pub num_po: usize,
    pub truth_path: PathBuf,
}

impl BenchmarkEntry {
    /// Load the truth table and check it against the declared counts.
    pub fn load_table(&self) -> Result<TruthTable> {
        let table = read_truth(&self.truth_path)
            .with_context(|| format!("benchmark {}: {}", self.name, self.truth_path.display()))?;
        if table.num_inputs() != self.num_pi || table.num_outputs() != self.num_po {
            bail!(
                "benchmark {}: manifest declares {} inputs / {} outputs but {} holds {} / {}",
                self.name,
                self.num_pi,
                self.num_po,
                self.truth_path.display(),
                table.num_inputs(),
                table.num_outputs()
            );
        }
        Ok(table)
    }
}

/// Parse manifest text; relative truth paths resolve against `base`.
pub fn parse_manifest_str(text: &str, base: &Path) -> Result<Vec<BenchmarkEntry>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().context("empty manifest")?;
    if header.trim() != MANIFEST_HEADER {
        bail!("manifest header must be `{MANIFEST_HEADER}`, got `{}`", header.trim());
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            bail!("manifest line {line_no}: expected 5 fields, got {}", fields.len());
        }
        let category: Category =
            fields[1].parse().with_context(|| format!("manifest line {line_no}"))?;
        let num_pi: usize = fields[2]
            .parse()
            .with_context(|| format!("manifest line {line_no}: bad input count"))?;
        let num_po: usize = fields[3]
            .parse()
            .with_context(|| format!("manifest line {line_no}: bad output count"))?;
        entries.push(BenchmarkEntry {
            name: fields[0].to_string(),
            category,
            num_pi,
            num_po,
            truth_path: base.join(fields[4]),
        });
    }
    Ok(entries)
}

/// Read a manifest file and verify every entry against its truth file.
pub fn read_manifest(path: &Path) -> Result<Vec<BenchmarkEntry>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let entries = parse_manifest_str(&text, base)?;
    for entry in &entries {
        entry.load_table()?;
    }
    Ok(entries)
}
