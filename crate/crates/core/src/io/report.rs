use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::excess::Window;
use crate::monotone::StratumPoint;

pub const REPORT_HEADER: [&str; 7] = [
    "quantity",
    "window_center_x",
    "window_center_y",
    "window_s",
    "window_R",
    "params",
    "value",
];

pub const CLASSIFICATION_HEADER: [&str; 7] = [
    "y_x",
    "y_y",
    "s",
    "theta_star",
    "static_score",
    "label",
    "D",
];

/// A report cell: a number, or a marker for a value that does not exist.
#[derive(Debug, Clone, PartialEq)]
pub enum ReportValue {
    Number(f64),
    /// Written verbatim, e.g. `not_integrable` or `NA`.
    Marker(String),
}

impl ReportValue {
    pub fn number(&self) -> Option<f64> {
        match self {
            ReportValue::Number(v) => Some(*v),
            ReportValue::Marker(_) => None,
        }
    }
}

impl fmt::Display for ReportValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportValue::Number(v) => write!(f, "{v}"),
            ReportValue::Marker(m) => f.write_str(m),
        }
    }
}

impl From<f64> for ReportValue {
    fn from(v: f64) -> Self {
        ReportValue::Number(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub quantity: String,
    pub window: Option<Window>,
    pub params: String,
    pub value: ReportValue,
}

/// Named scalar results, each with the window it was computed on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub rows: Vec<ReportRow>,
}

impl DiagnosticsReport {
    pub fn push(
        &mut self,
        quantity: &str,
        window: Option<&Window>,
        params: impl Into<String>,
        value: impl Into<ReportValue>,
    ) {
        self.rows.push(ReportRow {
            quantity: quantity.to_string(),
            window: window.copied(),
            params: params.into(),
            value: value.into(),
        });
    }

    /// First row with the given quantity and params.
    pub fn get(&self, quantity: &str, params: &str) -> Option<&ReportValue> {
        self.rows
            .iter()
            .find(|r| r.quantity == quantity && r.params == params)
            .map(|r| &r.value)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(REPORT_HEADER).map_err(csv_error)?;
        for row in &self.rows {
            let win = match &row.window {
                Some(w) => [w.center.x, w.center.y, w.s, w.r].map(|v| v.to_string()),
                None => Default::default(),
            };
            out.write_record([
                row.quantity.as_str(),
                &win[0],
                &win[1],
                &win[2],
                &win[3],
                &row.params,
                &row.value.to_string(),
            ])
            .map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

/// One row per stratum point.
pub fn write_classification_csv<W: Write>(w: W, points: &[StratumPoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CLASSIFICATION_HEADER).map_err(csv_error)?;
    for p in points {
        out.write_record([
            p.y.x.to_string(),
            p.y.y.to_string(),
            p.s.to_string(),
            p.label.theta_star.to_string(),
            p.label.static_score.to_string(),
            p.label.kind.to_string(),
            p.d.to_string(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}
