//! Discrete-time signals, labeled datasets and their CSV representation.
//!
//! A dataset file has the header `signal_id,time,x1,...,xn,label` with one row
//! per (signal, time) pair. Labels are written as `1` (positive) and `-1`
//! (negative). Every signal must cover the same integer times `0..=T`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1` for the positive class, `-1` for the negative class.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    fn from_field(field: &str) -> Result<Label> {
        match field.trim() {
            "1" | "+1" => Ok(Label::Positive),
            "-1" => Ok(Label::Negative),
            other => Err(Error::NonBinaryLabel(other.to_string())),
        }
    }

    fn as_field(self) -> &'static str {
        match self {
            Label::Positive => "1",
            Label::Negative => "-1",
        }
    }
}

/// An `n`-dimensional trace sampled at integer times `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    id: String,
    dim: usize,
    // row-major, (T+1) x dim
    values: Vec<f64>,
}

impl Signal {
    /// Builds a signal from rows, one row per time step.
    pub fn from_rows(id: impl Into<String>, rows: &[Vec<f64>]) -> Result<Signal> {
        let id = id.into();
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { id, time: t });
            }
            values.extend_from_slice(row);
        }
        Ok(Signal { id, dim, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Last time index `T`.
    pub fn horizon(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample of component `j` (0-based) at time `t`.
    #[inline]
    pub fn value(&self, t: usize, j: usize) -> f64 {
        self.values[t * self.dim + j]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn view(&self) -> SignalView<'_> {
        SignalView {
            signal: self,
            last: self.horizon(),
        }
    }

    /// The prefix `s[0:t]`, i.e. the first `t + 1` samples.
    pub fn prefix(&self, t: usize) -> Result<SignalView<'_>> {
        if t > self.horizon() {
            return Err(Error::TimeOutOfRange {
                t,
                max: self.horizon(),
            });
        }
        Ok(SignalView {
            signal: self,
            last: t,
        })
    }
}

/// Borrowed prefix of a signal. Samples after `last` are not visible.
#[derive(Debug, Clone, Copy)]
pub struct SignalView<'a> {
    signal: &'a Signal,
    last: usize,
}

impl<'a> SignalView<'a> {
    /// Index of the last visible sample.
    pub fn last(&self) -> usize {
        self.last
    }

    pub fn dim(&self) -> usize {
        self.signal.dim
    }

    pub fn signal(&self) -> &'a Signal {
        self.signal
    }

    #[inline]
    pub fn value(&self, t: usize, j: usize) -> f64 {
        debug_assert!(t <= self.last, "read past the end of a prefix");
        self.signal.value(t, j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    signals: Vec<Signal>,
    labels: Vec<Label>,
}

impl LabeledDataset {
    /// Validates that all signals share the same horizon and dimension.
    pub fn new(signals: Vec<Signal>, labels: Vec<Label>) -> Result<LabeledDataset> {
        if signals.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: signals.len(),
                found: labels.len(),
            });
        }
        let first = signals.first().ok_or(Error::EmptyDataset)?;
        let (len, dim) = (first.len(), first.dim());
        for s in &signals {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            if s.len() != len {
                return Err(Error::RaggedHorizon {
                    id: s.id().to_string(),
                    expected: len,
                    found: s.len(),
                });
            }
        }
        Ok(LabeledDataset { signals, labels })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.signals[0].horizon()
    }

    pub fn dim(&self) -> usize {
        self.signals[0].dim()
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Signal, Label)> {
        self.signals.iter().zip(self.labels.iter().copied())
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Errors unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        if self.count(Label::Positive) == 0 || self.count(Label::Negative) == 0 {
            return Err(Error::SingleClass);
        }
        Ok(())
    }

    /// New dataset holding copies of the selected entries, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let signals = indices.iter().map(|&i| self.signals[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        LabeledDataset::new(signals, labels)
    }

    pub fn prefix(&self, t: usize) -> Result<PrefixDataset<'_>> {
        if t > self.horizon() {
            return Err(Error::TimeOutOfRange {
                t,
                max: self.horizon(),
            });
        }
        Ok(PrefixDataset {
            base: self,
            cutoff: t,
        })
    }

    /// Observed `(min, max)` of component `j` over all signals and all times.
    pub fn component_range(&self, j: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.signals {
            for t in 0..s.len() {
                let v = s.value(t, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }
}

/// The dataset `S[0:t]`: every signal truncated to its first `cutoff + 1`
/// samples, labels unchanged. Borrows the base dataset.
#[derive(Debug, Clone, Copy)]
pub struct PrefixDataset<'a> {
    base: &'a LabeledDataset,
    cutoff: usize,
}

impl<'a> PrefixDataset<'a> {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn base(&self) -> &'a LabeledDataset {
        self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn view(&self, i: usize) -> SignalView<'a> {
        SignalView {
            signal: &self.base.signals[i],
            last: self.cutoff,
        }
    }

    pub fn label(&self, i: usize) -> Label {
        self.base.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (SignalView<'a>, Label)> + '_ {
        (0..self.len()).map(move |i| (self.view(i), self.label(i)))
    }
}

/// Formats a value rounded to 9 significant digits using the shortest text
/// that parses back to the rounded value.
pub fn format_sig9(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    format!("{rounded}")
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file)
}

/// Reads signals of any length, with or without a `label` column.
pub fn read_signals<R: Read>(reader: R) -> Result<Vec<(Signal, Option<Label>)>> {
    let (_, raw) = parse_rows(reader, false)?;
    raw.into_iter()
        .map(|(id, label, rows)| Ok((assemble_signal(id, rows)?, label)))
        .collect()
}

pub fn load_signals(path: impl AsRef<Path>) -> Result<Vec<(Signal, Option<Label>)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_signals(file)
}

pub fn save_dataset(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_dataset(dataset, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset<W: Write>(dataset: &LabeledDataset, out: &mut W) -> std::io::Result<()> {
    write!(out, "signal_id,time")?;
    for j in 1..=dataset.dim() {
        write!(out, ",x{j}")?;
    }
    writeln!(out, ",label")?;
    for (signal, label) in dataset.iter() {
        for t in 0..signal.len() {
            write!(out, "{},{t}", signal.id())?;
            for &v in signal.row(t) {
                write!(out, ",{}", format_sig9(v))?;
            }
            writeln!(out, ",{}", label.as_field())?;
        }
    }
    Ok(())
}

/// Signal id, optional label and `(time, values)` rows.
pub(crate) type ParsedSignal = (String, Option<Label>, Vec<(usize, Vec<f64>)>);

/// Parses header and rows, grouping rows by signal id in order of first
/// appearance. The trailing `label` column is optional unless `require_label`.
pub(crate) fn parse_rows<R: Read>(
    reader: R,
    require_label: bool,
) -> Result<(usize, Vec<ParsedSignal>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Malformed {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 3 || cols[0] != "signal_id" || cols[1] != "time" {
        return Err(Error::Malformed {
            line: 1,
            message: "header must start with `signal_id,time`".into(),
        });
    }
    let has_label = cols.last() == Some(&"label");
    if require_label && !has_label {
        return Err(Error::Malformed {
            line: 1,
            message: "header must end with `label`".into(),
        });
    }
    let value_cols = &cols[2..cols.len() - usize::from(has_label)];
    if value_cols.is_empty() {
        return Err(Error::Malformed {
            line: 1,
            message: "no signal components".into(),
        });
    }
    for (j, name) in value_cols.iter().enumerate() {
        if *name != format!("x{}", j + 1) {
            return Err(Error::Malformed {
                line: 1,
                message: format!("expected column `x{}`, found `{name}`", j + 1),
            });
        }
    }
    let dim = value_cols.len();

    let mut order: Vec<RawSignal> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (row_no, record) in rdr.records().enumerate() {
        let line = row_no + 2;
        let record = record.map_err(|e| Error::Malformed {
            line,
            message: e.to_string(),
        })?;
        if record.len() != cols.len() {
            return Err(Error::Malformed {
                line,
                message: format!("expected {} fields, found {}", cols.len(), record.len()),
            });
        }
        let id = record[0].to_string();
        let time: usize = record[1].parse().map_err(|_| Error::Malformed {
            line,
            message: format!("bad time `{}`", &record[1]),
        })?;
        let mut values = Vec::with_capacity(dim);
        for field in record.iter().skip(2).take(dim) {
            let v: f64 = field.parse().map_err(|_| Error::Malformed {
                line,
                message: format!("bad number `{field}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { id, time });
            }
            values.push(v);
        }
        let label = if has_label {
            Some(Label::from_field(&record[cols.len() - 1])?)
        } else {
            None
        };
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            order.push(RawSignal {
                id: id.clone(),
                label,
                rows: Vec::new(),
            });
            order.len() - 1
        });
        let raw = &mut order[slot];
        if raw.label != label {
            return Err(Error::InconsistentLabel { id });
        }
        raw.rows.push((time, values));
    }
    Ok((
        dim,
        order.into_iter().map(|r| (r.id, r.label, r.rows)).collect(),
    ))
}

struct RawSignal {
    id: String,
    label: Option<Label>,
    rows: Vec<(usize, Vec<f64>)>,
}

/// Sorts rows by time and checks they cover `0..len` exactly once.
pub(crate) fn assemble_signal(id: String, mut rows: Vec<(usize, Vec<f64>)>) -> Result<Signal> {
    rows.sort_by_key(|(t, _)| *t);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateSample { id, time: w[0].0 });
        }
    }
    for (expected, (t, _)) in rows.iter().enumerate() {
        if *t != expected {
            return Err(Error::MissingSample { id, time: expected });
        }
    }
    let rows: Vec<Vec<f64>> = rows.into_iter().map(|(_, r)| r).collect();
    Signal::from_rows(id, &rows)
}

pub fn read_dataset<R: Read>(reader: R) -> Result<LabeledDataset> {
    let (_, raw) = parse_rows(reader, true)?;
    let mut signals = Vec::with_capacity(raw.len());
    let mut labels = Vec::with_capacity(raw.len());
    let mut expected_len = None;
    for (id, label, rows) in raw {
        let signal = assemble_signal(id, rows)?;
        match expected_len {
            None => expected_len = Some(signal.len()),
            Some(len) if len != signal.len() => {
                return Err(Error::RaggedHorizon {
                    id: signal.id().to_string(),
                    expected: len,
                    found: signal.len(),
                })
            }
            _ => {}
        }
        signals.push(signal);
        labels.push(label.expect("label column is required"));
    }
    LabeledDataset::new(signals, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_signal_csv(len_a: usize, len_b: usize) -> String {
        let mut s = String::from("signal_id,time,x1,x2,label\n");
        for t in 0..len_a {
            s.push_str(&format!("a,{t},{},{},1\n", t as f64 * 0.5, 1.0));
        }
        for t in 0..len_b {
            s.push_str(&format!("b,{t},{},{},-1\n", -(t as f64), 2.25));
        }
        s
    }

    #[test]
    fn loads_two_signals() {
        let d = read_dataset(two_signal_csv(61, 61).as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.horizon(), 60);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.labels(), &[Label::Positive, Label::Negative]);
        assert_eq!(d.signals()[1].value(3, 0), -3.0);
    }

    #[test]
    fn rejects_ragged_horizon() {
        let err = read_dataset(two_signal_csv(61, 60).as_bytes()).unwrap_err();
        assert!(matches!(err, Error::RaggedHorizon { .. }), "{err}");
        assert!(err.to_string().contains("ragged horizon"));
    }

    #[test]
    fn rows_may_arrive_out_of_order() {
        let csv = "signal_id,time,x1,label\ns,1,2.0,1\ns,0,1.0,1\n";
        let d = read_dataset(csv.as_bytes()).unwrap();
        assert_eq!(d.signals()[0].value(0, 0), 1.0);
        assert_eq!(d.signals()[0].value(1, 0), 2.0);
    }

    #[test]
    fn rejects_bad_rows() {
        let dup = "signal_id,time,x1,label\ns,0,1,1\ns,0,2,1\n";
        assert!(matches!(
            read_dataset(dup.as_bytes()),
            Err(Error::DuplicateSample { time: 0, .. })
        ));
        let gap = "signal_id,time,x1,label\ns,0,1,1\ns,2,2,1\n";
        assert!(matches!(
            read_dataset(gap.as_bytes()),
            Err(Error::MissingSample { time: 1, .. })
        ));
        let label = "signal_id,time,x1,label\ns,0,1,0\n";
        assert!(matches!(
            read_dataset(label.as_bytes()),
            Err(Error::NonBinaryLabel(_))
        ));
        let nan = "signal_id,time,x1,label\ns,0,NaN,1\n";
        assert!(matches!(
            read_dataset(nan.as_bytes()),
            Err(Error::NonFinite { .. })
        ));
        let flip = "signal_id,time,x1,label\ns,0,1,1\ns,1,1,-1\n";
        assert!(matches!(
            read_dataset(flip.as_bytes()),
            Err(Error::InconsistentLabel { .. })
        ));
    }

    #[test]
    fn prefix_bounds() {
        let d = read_dataset(two_signal_csv(61, 61).as_bytes()).unwrap();
        let full = d.prefix(60).unwrap();
        assert_eq!(full.len(), d.len());
        assert_eq!(full.view(0).last(), d.horizon());
        assert_eq!(d.prefix(0).unwrap().view(1).last() + 1, 1);
        assert_eq!(d.prefix(20).unwrap().view(0).last() + 1, 21);
        assert!(matches!(
            d.prefix(61),
            Err(Error::TimeOutOfRange { t: 61, max: 60 })
        ));
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.1 + 0.2), "0.3");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(-2.5e-7), "-0.00000025");
    }
}
