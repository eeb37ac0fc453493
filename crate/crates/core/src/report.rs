//! Report files: one manifest plus a flat list of cells, as JSON or CSV.
//!
//! Every real is a decimal string in scientific notation with enough digits
//! to reproduce the binary value exactly. CSV files carry the manifest as a
//! single `# manifest {...}` comment line ahead of the header row.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feval::{EvalResult, KernelWeight, Sign};
use crate::precision::format_real;

pub const TOOL_VERSION: &str = concat!("fnlab ", env!("CARGO_PKG_VERSION"));
pub const CSV_HEADER: [&str; 6] = ["n", "x", "value", "error_bound", "sign", "method"];
const MANIFEST_PREFIX: &str = "# manifest ";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeldheimWeight {
    AsPrinted,
    GaussianCorrected,
    NotYetDetermined,
}

impl From<Option<KernelWeight>> for FeldheimWeight {
    fn from(w: Option<KernelWeight>) -> Self {
        match w {
            Some(KernelWeight::AsPrinted) => FeldheimWeight::AsPrinted,
            Some(KernelWeight::GaussianCorrected) => FeldheimWeight::GaussianCorrected,
            None => FeldheimWeight::NotYetDetermined,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Numeric values are decimal strings.
    pub parameters: BTreeMap<String, String>,
    pub precision_bits: u32,
    pub truncation: BTreeMap<String, String>,
    pub validated_feldheim_weight: FeldheimWeight,
    pub tool_version: String,
    /// Only recorded on request, so that default output stays byte-identical
    /// between runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, precision_bits: u32) -> Self {
        Self {
            command: command.into(),
            parameters: BTreeMap::new(),
            precision_bits,
            truncation: BTreeMap::new(),
            validated_feldheim_weight: FeldheimWeight::NotYetDetermined,
            tool_version: TOOL_VERSION.into(),
            wall_clock_seconds: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    pub fn truncation(mut self, key: &str, value: impl ToString) -> Self {
        self.truncation.insert(key.into(), value.to_string());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub n: u32,
    pub x: String,
    pub value: String,
    pub error_bound: String,
    pub sign: Sign,
    pub method: String,
}

impl Cell {
    pub fn from_eval(r: &EvalResult) -> Self {
        Self {
            n: r.n,
            x: format_real(&r.x),
            value: format_real(&r.value),
            error_bound: format_real(&r.error_bound),
            sign: r.sign,
            method: r.method.name().into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub manifest: RunManifest,
    pub cells: Vec<Cell>,
}

impl Report {
    pub fn new(manifest: RunManifest) -> Self {
        Self {
            manifest,
            cells: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        writeln!(out, "{MANIFEST_PREFIX}{}", serde_json::to_string(&self.manifest)?).expect("string write");
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for c in &self.cells {
            w.write_record([
                c.n.to_string().as_str(),
                &c.x,
                &c.value,
                &c.error_bound,
                c.sign.name(),
                &c.method,
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(bytes).expect("inputs are UTF-8"));
        Ok(out)
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let (first, rest) = s.split_once('\n').unwrap_or((s, ""));
        let json = first
            .strip_prefix(MANIFEST_PREFIX)
            .ok_or_else(|| Error::Parse("CSV report must start with a manifest line".into()))?;
        let manifest: RunManifest = serde_json::from_str(json)?;
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        if header != CSV_HEADER {
            return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
        }
        let mut cells = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let n = rec[0]
                .parse()
                .map_err(|e| Error::Parse(format!("bad n {:?}: {e}", &rec[0])))?;
            let sign = Sign::from_name(&rec[4]).ok_or_else(|| Error::Parse(format!("bad sign {:?}", &rec[4])))?;
            cells.push(Cell {
                n,
                x: rec[1].into(),
                value: rec[2].into(),
                error_bound: rec[3].into(),
                sign,
                method: rec[5].into(),
            });
        }
        Ok(Self { manifest, cells })
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn parse(s: &str, format: Format) -> Result<Self> {
        match format {
            Format::Json => Self::from_json(s),
            Format::Csv => Self::from_csv(s),
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        std::fs::write(path, self.render(format)?)?;
        Ok(())
    }

    pub fn read(path: &Path, format: Format) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, format)
    }
}
