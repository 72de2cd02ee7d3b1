//! The JSON module format and the machine-readable emitters.
//!
//! A module file looks like
//!
//! ```json
//! {
//!   "comment": "diag(1, z) with u = -1",
//!   "q": {"re": 2.0, "im": 0.0},
//!   "blocks": [
//!     {"slope": 0, "matrix": [[{"re": 1.0, "im": 0.0}]]},
//!     {"slope": 1, "matrix": [[{"re": 1.0, "im": 0.0}]]}
//!   ],
//!   "u": {"1,2": [{"exp": 0, "re": -1.0, "im": 0.0}]}
//! }
//! ```
//!
//! Keys of `u` are 1-based block indices `"i,j"` with `i < j`. An entry
//! between two rank-1 blocks is a list of `{exp, re, im}` terms; between
//! larger blocks it is a 2D array of such lists. Entries are Laurent
//! polynomials; exactly-zero terms and all-zero entries are dropped.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::module_rep::{BlockModule, PureBlock};
use crate::series::{CMatrix, Complex, Laurent, SeriesMatrix};

/// A complex number as `{re, im}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex> for ComplexJson {
    fn from(c: Complex) -> Self {
        ComplexJson { re: c.re, im: c.im }
    }
}

impl From<ComplexJson> for Complex {
    fn from(c: ComplexJson) -> Self {
        Complex::new(c.re, c.im)
    }
}

/// One Laurent term `(re + i·im) z^exp`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub exp: i64,
    pub re: f64,
    pub im: f64,
}

/// An off-diagonal block: a term list (rank-1 blocks, or an empty list for
/// zero) or a 2D array of term lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryJson {
    Scalar(Vec<TermJson>),
    Matrix(Vec<Vec<Vec<TermJson>>>),
}

/// A pure block `z^slope · matrix`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockJson {
    pub slope: i64,
    pub matrix: Vec<Vec<ComplexJson>>,
}

/// Serialized form of a [`BlockModule`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDescription {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub q: ComplexJson,
    pub blocks: Vec<BlockJson>,
    #[serde(default)]
    pub u: BTreeMap<String, EntryJson>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

/// Nonzero terms of an exact series.
pub fn terms_of(l: &Laurent) -> Vec<TermJson> {
    l.iter()
        .filter(|(_, c)| *c != Complex::default())
        .map(|(exp, c)| TermJson {
            exp,
            re: c.re,
            im: c.im,
        })
        .collect()
}

/// The polynomial `Σ terms`; repeated exponents are rejected.
pub fn laurent_of(terms: &[TermJson], field: &str) -> Result<Laurent> {
    let Some(lo) = terms.iter().map(|t| t.exp).min() else {
        return Ok(Laurent::zero());
    };
    let hi = terms.iter().map(|t| t.exp).max().unwrap_or(lo);
    let mut coeffs = vec![Complex::default(); (hi - lo + 1) as usize];
    let mut seen = vec![false; coeffs.len()];
    for t in terms {
        let k = (t.exp - lo) as usize;
        if seen[k] {
            return Err(schema(field, format!("exponent {} appears twice", t.exp)));
        }
        seen[k] = true;
        coeffs[k] = Complex::new(t.re, t.im);
    }
    Ok(Laurent::polynomial(lo, coeffs).trim())
}

/// Serialized form of a series matrix block (exact coefficients only).
pub fn entry_of(m: &SeriesMatrix) -> EntryJson {
    if m.nrows() == 1 && m.ncols() == 1 {
        EntryJson::Scalar(terms_of(m.get(0, 0)))
    } else {
        EntryJson::Matrix(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| terms_of(m.get(i, j))).collect())
                .collect(),
        )
    }
}

fn series_matrix_of(e: &EntryJson, rows: usize, cols: usize, field: &str) -> Result<SeriesMatrix> {
    match e {
        EntryJson::Scalar(terms) if terms.is_empty() => Ok(SeriesMatrix::zeros(rows, cols)),
        EntryJson::Scalar(terms) => {
            if (rows, cols) != (1, 1) {
                return Err(schema(
                    field,
                    format!("a term list needs 1x1 blocks, this entry is {rows}x{cols}"),
                ));
            }
            let l = laurent_of(terms, field)?;
            Ok(SeriesMatrix::from_fn(1, 1, |_, _| l.clone()))
        }
        EntryJson::Matrix(rows_json) => {
            if rows_json.len() != rows || rows_json.iter().any(|r| r.len() != cols) {
                return Err(schema(
                    field,
                    format!("expected a {rows}x{cols} array of term lists"),
                ));
            }
            let mut m = SeriesMatrix::zeros(rows, cols);
            for (i, row) in rows_json.iter().enumerate() {
                for (j, terms) in row.iter().enumerate() {
                    m.set(
                        i,
                        j,
                        laurent_of(terms, &format!("{field}[{}][{}]", i + 1, j + 1))?,
                    );
                }
            }
            Ok(m)
        }
    }
}

/// Parse a 1-based `"i,j"` key into 0-based indices.
pub fn parse_pair(key: &str) -> Option<(usize, usize)> {
    let (a, b) = key.split_once(',')?;
    let i: usize = a.trim().parse().ok()?;
    let j: usize = b.trim().parse().ok()?;
    (i >= 1 && j >= 1).then(|| (i - 1, j - 1))
}

/// 1-based `"i,j"` key for 0-based indices.
pub fn pair_key(i: usize, j: usize) -> String {
    format!("{},{}", i + 1, j + 1)
}

impl ModuleDescription {
    /// Validate and build the module.
    pub fn to_module(&self) -> Result<BlockModule> {
        let q: Complex = self.q.into();
        if self.blocks.is_empty() {
            return Err(schema("blocks", "at least one block is required"));
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (k, b) in self.blocks.iter().enumerate() {
            let field = format!("blocks[{k}]");
            if k > 0 && b.slope <= self.blocks[k - 1].slope {
                return Err(schema(
                    format!("{field}.slope"),
                    format!(
                        "slopes must be strictly increasing, got {} after {}",
                        b.slope,
                        self.blocks[k - 1].slope
                    ),
                ));
            }
            let n = b.matrix.len();
            if n == 0 || b.matrix.iter().any(|r| r.len() != n) {
                return Err(schema(
                    format!("{field}.matrix"),
                    "matrix must be square and nonempty",
                ));
            }
            let a = CMatrix::from_fn(n, n, |i, j| b.matrix[i][j].into());
            blocks.push(PureBlock::new(b.slope, a).map_err(|e| schema(&field, e.to_string()))?);
        }
        let mut u = BTreeMap::new();
        for (key, entry) in &self.u {
            let field = format!("u.\"{key}\"");
            let (i, j) = parse_pair(key)
                .ok_or_else(|| schema(&field, "key must be \"i,j\" with 1-based indices"))?;
            if i >= j || j >= blocks.len() {
                return Err(schema(
                    &field,
                    format!("({}, {}) is not a strictly upper block pair", i + 1, j + 1),
                ));
            }
            let m = series_matrix_of(entry, blocks[i].rank(), blocks[j].rank(), &field)?;
            if m.max_abs() > 0.0 {
                u.insert((i, j), m);
            }
        }
        BlockModule::new(q, blocks, u).map_err(|e| schema("module", e.to_string()))
    }

    /// Describe a module (its `U` entries must be exact polynomials).
    pub fn from_module(m: &BlockModule, comment: Option<String>) -> Self {
        let blocks = m
            .blocks
            .iter()
            .map(|b| BlockJson {
                slope: b.mu,
                matrix: (0..b.rank())
                    .map(|i| (0..b.rank()).map(|j| b.a[(i, j)].into()).collect())
                    .collect(),
            })
            .collect();
        let u =
            m.u.iter()
                .filter(|(_, v)| v.max_abs() > 0.0)
                .map(|(&(i, j), v)| (pair_key(i, j), entry_of(v)))
                .collect();
        ModuleDescription {
            comment,
            q: m.q.into(),
            blocks,
            u,
        }
    }
}

fn json_error(e: serde_json::Error) -> Error {
    let text = e.to_string();
    // serde_json appends the position, which is already in the field.
    let message = text
        .rsplit_once(" at line ")
        .map_or(text.as_str(), |(m, _)| m);
    schema(format!("line {}, column {}", e.line(), e.column()), message)
}

/// Parse a module description from JSON text.
pub fn parse_module_str(text: &str) -> Result<BlockModule> {
    parse_description(text)?.to_module()
}

/// Parse JSON text into a description without building the module.
pub fn parse_description(text: &str) -> Result<ModuleDescription> {
    serde_json::from_str(text).map_err(json_error)
}

/// Read and parse a module file.
pub fn parse_module(path: &Path) -> Result<BlockModule> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| schema(path.display().to_string(), e.to_string()))?;
    parse_module_str(&text)
}

/// Deterministic pretty JSON for a module.
pub fn emit_module(m: &BlockModule, comment: Option<String>) -> String {
    emit_json(&ModuleDescription::from_module(m, comment))
}

/// Pretty JSON with a trailing newline. Map keys come out sorted, so equal
/// values always give identical bytes.
pub fn emit_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// A numeric table for CSV output.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Output formats of [`emit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A command result: a JSON document and, for commands that produce plot
/// data, a table.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub json: serde_json::Value,
    pub table: Option<CsvTable>,
    /// Whether every numeric check of the command passed.
    pub pass: bool,
}

/// Render a report.
pub fn emit(report: &Report, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => Ok(emit_json(&report.json).into_bytes()),
        Format::Csv => report
            .table
            .as_ref()
            .map(|t| t.to_csv().into_bytes())
            .ok_or_else(|| Error::InvalidArgument("this command has no CSV output".into())),
    }
}
