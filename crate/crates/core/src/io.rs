//! Message-set files (JSON) and tabular output (CSV).
//!
//! Reals are written with 17 significant digits, enough to round-trip every
//! `f64` exactly.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::feasibility::orthogonality_cost;
use crate::qmat::{ComplexMatrix, Message, MessageSet, SchmidtSpectrum, C64};

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative agreement required between a stored cost and the recomputed one.
pub const COST_AGREEMENT: f64 = 1e-12;

/// A matrix as rows of `[re, im]` pairs.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageEntry {
    pub kraus: Vec<MatrixRows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: Option<u64>,
    pub cost: f64,
    pub tool_version: String,
    /// Seconds since the Unix epoch; omitted unless requested so that equal
    /// inputs give byte-identical files.
    pub timestamp: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageSetFile {
    pub format_version: u32,
    pub dim: usize,
    pub schmidt: Vec<f64>,
    pub messages: Vec<MessageEntry>,
    pub metadata: Metadata,
}

pub fn matrix_rows(m: &ComplexMatrix) -> MatrixRows {
    (0..m.rows()).map(|r| (0..m.cols()).map(|c| [m.get(r, c).re, m.get(r, c).im]).collect()).collect()
}

fn matrix_of(rows: &MatrixRows, d: usize) -> Result<ComplexMatrix> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Format(format!("Kraus operator is not {d}x{d}")));
    }
    let entries = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
    ComplexMatrix::new(d, d, entries)
}

impl MessageSetFile {
    /// Wrap `set`, recording its orthogonality cost.
    pub fn from_set(set: &MessageSet, seed: Option<u64>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            dim: set.dim(),
            schmidt: set.spectrum().lambdas().to_vec(),
            messages: set.messages().iter().map(|m| MessageEntry { kraus: m.kraus().iter().map(matrix_rows).collect() }).collect(),
            metadata: Metadata { seed, cost: orthogonality_cost(set), tool_version: TOOL_VERSION.into(), timestamp: None },
        }
    }

    pub fn with_timestamp(mut self, seconds: u64) -> Self {
        self.metadata.timestamp = Some(seconds);
        self
    }

    pub fn to_set(&self) -> Result<MessageSet> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "format version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.schmidt.len() != self.dim {
            return Err(Error::Format(format!("{} Schmidt coefficients for dim {}", self.schmidt.len(), self.dim)));
        }
        let spectrum = SchmidtSpectrum::new(self.schmidt.clone())?;
        let messages = self
            .messages
            .iter()
            .map(|m| {
                let kraus = m.kraus.iter().map(|k| matrix_of(k, self.dim)).collect::<Result<Vec<_>>>()?;
                Message::new(kraus)
            })
            .collect::<Result<Vec<_>>>()?;
        MessageSet::new(spectrum, messages)
    }

    /// Whether the recomputed cost of the stored set matches the recorded one.
    pub fn cost_agrees(&self, set: &MessageSet) -> bool {
        let c = orthogonality_cost(set);
        (c - self.metadata.cost).abs() <= COST_AGREEMENT * self.metadata.cost.abs().max(1.0)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Pretty-printed JSON with every float in 17-significant-digit form.
struct RealFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for RealFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(format_real(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `value` with 17 significant digits, e.g. `4.0000000000000002e-1`.
pub fn format_real(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serialize any value as JSON with 17-digit reals and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, RealFormatter(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// A CSV table held in memory and written once.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Cell text for an optional real.
pub fn real_cell(value: Option<f64>) -> String {
    value.map(format_real).unwrap_or_default()
}
