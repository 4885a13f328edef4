//! CSV signal files.
//!
//! Layout: optional `# key: value` comment lines, an optional header row
//! `t,ch1,...,chN`, then one row per sample with the time in the first
//! column. Fixed-point data is written as raw Q16.8 integers together with a
//! `# scale: 256` comment, so replay is bit exact.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{MemdError, Result};
use crate::fixed_point::{FixedQ16_8, FRAC_BITS};
use crate::signal::{MultivariateSignal, Sample};

pub const FIXED_SCALE: u32 = 1 << FRAC_BITS;

/// Scalars with a lossless text form.
pub trait CsvScalar: Sample {
    /// Integer scale of the serialized values, if any.
    const SCALE: Option<u32>;
    fn to_field(self) -> String;
}

impl CsvScalar for f64 {
    const SCALE: Option<u32> = None;

    fn to_field(self) -> String {
        format!("{self:.16e}")
    }
}

impl CsvScalar for FixedQ16_8 {
    const SCALE: Option<u32> = Some(FIXED_SCALE);

    fn to_field(self) -> String {
        self.raw().to_string()
    }
}

/// A parsed signal file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    /// Values in real units; raw fixed-point integers are divided by the scale.
    pub signal: MultivariateSignal<f64>,
    pub scale: Option<u32>,
    /// `# key: value` comments in file order.
    pub comments: Vec<(String, String)>,
}

impl CsvTable {
    pub fn comment(&self, key: &str) -> Option<&str> {
        self.comments
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Q16.8 view; exact when the file was written from fixed-point data.
    pub fn to_fixed(&self) -> MultivariateSignal<FixedQ16_8> {
        self.signal.map(|v| FixedQ16_8::quantize(v).0)
    }
}

pub fn write_signal<S: CsvScalar, W: Write>(
    mut out: W,
    signal: &MultivariateSignal<S>,
    comments: &[(&str, String)],
) -> Result<()> {
    for (k, v) in comments {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "# sample_rate: {}", signal.sample_rate())?;
    if let Some(scale) = S::SCALE {
        writeln!(out, "# scale: {scale}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=signal.n_channels()).map(|c| format!("ch{c}")));
    w.write_record(&header).map_err(csv_err)?;
    let mut row = Vec::with_capacity(signal.n_channels() + 1);
    for t in 0..signal.len() {
        row.clear();
        row.push(t.to_string());
        row.extend(signal.channels().iter().map(|c| c[t].to_field()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<S: CsvScalar>(
    path: impl AsRef<Path>,
    signal: &MultivariateSignal<S>,
    comments: &[(&str, String)],
) -> Result<()> {
    let file = File::create(path)?;
    write_signal(BufWriter::new(file), signal, comments)
}

fn csv_err(e: csv::Error) -> MemdError {
    MemdError::Io(e.to_string())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<CsvTable> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut comments = Vec::new();
    let mut body = String::with_capacity(text.len());
    let mut body_lines = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(c) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = c.split_once(':') {
                comments.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else if !trimmed.is_empty() {
            body.push_str(line);
            body.push('\n');
            body_lines.push(line_no + 1);
        }
    }
    let parse_err = |row: usize, column: usize, message: String| MemdError::Parse {
        row,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let line = body_lines[i];
        let record = record.map_err(|e| parse_err(line, 0, e.to_string()))?;
        if i == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(MemdError::RaggedRows {
                row: line,
                expected,
                got: record.len(),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, f)| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(parse_err(line, c + 1, format!("non-finite value {f:?}"))),
                Err(e) => Err(parse_err(line, c + 1, format!("{f:?}: {e}"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let width = width.unwrap_or(0);
    if rows.is_empty() {
        return Err(parse_err(0, 0, "no data rows".into()));
    }
    if width < 2 {
        return Err(parse_err(
            body_lines[0],
            0,
            "need a time column and at least one channel".into(),
        ));
    }
    let scale = match comments.iter().find(|(k, _)| k == "scale") {
        Some((_, v)) => Some(
            v.parse::<u32>()
                .ok()
                .filter(|&s| s > 0)
                .ok_or_else(|| parse_err(0, 0, format!("bad scale {v:?}")))?,
        ),
        None => None,
    };
    let sample_rate = match comments.iter().find(|(k, _)| k == "sample_rate") {
        Some((_, v)) => v
            .parse::<f64>()
            .map_err(|e| parse_err(0, 0, format!("bad sample_rate {v:?}: {e}")))?,
        None if rows.len() >= 2 && rows[1][0] > rows[0][0] => 1.0 / (rows[1][0] - rows[0][0]),
        None => 1.0,
    };
    let divisor = scale.map_or(1.0, f64::from);
    let channels = (1..width)
        .map(|c| rows.iter().map(|r| r[c] / divisor).collect())
        .collect();
    Ok(CsvTable {
        signal: MultivariateSignal::new(channels, sample_rate)?,
        scale,
        comments,
    })
}
