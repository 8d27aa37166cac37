//! CSV and JSON outputs, and the plain-text observation format.
//!
//! Every file starts with `# config: key=value` lines echoing the resolved
//! configuration. Numbers are written in Rust's shortest round-trip form, so
//! reading a file back yields bit-identical values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mixdens_core::LegendreBasis;
use serde::Serialize;

use crate::error::{AppError, AppResult};
use crate::experiment::{AuditRow, ExperimentReport, RateRow};

/// Resolved configuration as ordered `(key, value)` pairs.
pub type ConfigEcho = Vec<(String, String)>;

pub fn write_config_comments<W: Write + ?Sized>(
    w: &mut W,
    echo: &ConfigEcho,
) -> std::io::Result<()> {
    for (k, v) in echo {
        writeln!(w, "# config: {k}={v}")?;
    }
    Ok(())
}

fn csv_table<W: Write + ?Sized>(
    w: &mut W,
    echo: &ConfigEcho,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> AppResult<()> {
    let io = AppError::write;
    write_config_comments(w, echo).map_err(io)?;
    let mut out = csv::Writer::from_writer(w);
    let csv_err = AppError::csv_write;
    out.write_record(header).map_err(csv_err)?;
    for row in rows {
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush().map_err(io)?;
    Ok(())
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Long format: one row per `(n, replication)`.
pub fn write_ise_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &ConfigEcho,
    report: &ExperimentReport,
) -> AppResult<()> {
    csv_table(
        w,
        echo,
        &strings(&["n", "replication", "seed", "m", "ise", "ise_grid"]),
        report.runs.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                r.m.to_string(),
                r.ise.to_string(),
                r.ise_grid.to_string(),
            ]
        }),
    )
}

/// Long format: one row per `(n, replication, k)`.
pub fn write_coefficients_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &ConfigEcho,
    report: &ExperimentReport,
) -> AppResult<()> {
    csv_table(
        w,
        echo,
        &strings(&["n", "replication", "k", "c_hat"]),
        report.runs.iter().flat_map(|r| {
            r.coefficients.iter().enumerate().map(move |(k, c)| {
                vec![
                    r.n.to_string(),
                    r.replication.to_string(),
                    (k + 1).to_string(),
                    c.to_string(),
                ]
            })
        }),
    )
}

pub fn write_basis_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &ConfigEcho,
    basis: &LegendreBasis,
) -> AppResult<()> {
    let m = basis.order();
    let mut header = vec!["k".to_string()];
    header.extend((1..=m).map(|l| format!("q_{l}")));
    csv_table(
        w,
        echo,
        &header,
        (1..=m).map(|k| {
            let mut row = vec![k.to_string()];
            row.extend((1..=m).map(|l| basis.q(k, l).to_string()));
            row
        }),
    )
}

pub fn write_curve_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &ConfigEcho,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> AppResult<()> {
    csv_table(
        w,
        echo,
        &strings(columns),
        rows.iter().map(|r| r.iter().map(f64::to_string).collect()),
    )
}

pub fn write_audit_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &ConfigEcho,
    rows: &[AuditRow],
) -> AppResult<()> {
    csv_table(
        w,
        echo,
        &strings(&[
            "k",
            "variance",
            "variance_se",
            "bound",
            "log_bound",
            "violated",
        ]),
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                r.variance.to_string(),
                r.variance_se.to_string(),
                r.bound.to_string(),
                r.log_bound.to_string(),
                r.violated.to_string(),
            ]
        }),
    )
}

pub fn write_rates_csv<W: Write + ?Sized>(
    w: &mut W,
    echo: &ConfigEcho,
    rows: &[RateRow],
) -> AppResult<()> {
    csv_table(
        w,
        echo,
        &strings(&["n", "m", "mise", "mise_se", "envelope"]),
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.m.to_string(),
                r.mise.to_string(),
                r.mise_se.to_string(),
                r.envelope.to_string(),
            ]
        }),
    )
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: serde_json::Map<String, serde_json::Value>,
    #[serde(flatten)]
    body: &'a T,
}

/// A JSON document `{"config": {...}, ...body}` with sorted config keys and
/// the body's fields in declaration order.
pub fn write_json<W: Write + ?Sized, T: Serialize>(
    w: &mut W,
    echo: &ConfigEcho,
    body: &T,
) -> AppResult<()> {
    let config = echo
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let doc = Document { config, body };
    serde_json::to_writer_pretty(&mut *w, &doc).map_err(|e| {
        if e.is_io() {
            AppError::write(e.into())
        } else {
            AppError::Runtime(format!("json encoding failed: {e}"))
        }
    })?;
    writeln!(w).map_err(AppError::write)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct EstimateDocument {
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub coefficients: Vec<f64>,
    pub postprocess: String,
    pub scale: f64,
}

/// Observations, one per line, after the config comments.
pub fn write_data<W: Write + ?Sized>(
    w: &mut W,
    echo: &ConfigEcho,
    data: &[f64],
) -> std::io::Result<()> {
    write_config_comments(w, echo)?;
    for x in data {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

/// Parses one observation per line. Lines starting with `#` are comments;
/// anything else that is not a finite decimal number is an error carrying
/// its 1-based line number.
pub fn parse_data<R: BufRead>(reader: R, path: &Path) -> AppResult<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| AppError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        let fail = |message: String| AppError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        if trimmed.is_empty() {
            return Err(fail("empty line".into()));
        }
        let x: f64 = trimmed
            .parse()
            .map_err(|_| fail(format!("not a number: {trimmed:?}")))?;
        if !x.is_finite() {
            return Err(fail(format!("not a finite number: {trimmed:?}")));
        }
        out.push(x);
    }
    Ok(out)
}

pub fn read_data(path: &Path) -> AppResult<Vec<f64>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    parse_data(BufReader::new(file), path)
}

/// Creates `path` (and its parent directories) and runs `body` on a buffered
/// writer.
pub fn with_output_file<F>(path: &Path, body: F) -> AppResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> AppResult<()>,
{
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        }
    }
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| AppError::io(path, e))
}
