//! File formats: time-series CSV, response CSV, manifests and evaluation
//! reports. Numeric formatting is fixed (time with 6 decimal places, values
//! in scientific notation with 9 significant digits, LF line endings) so
//! identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::EvaluationReport;
use crate::modal::{ImpulseResponse, ResponseKind};
use crate::recovery::RecoveredResponse;
use crate::series::TimeSeries;

fn fmt_value(v: f64) -> String {
    format!("{v:.8e}")
}

/// Render a time series as CSV (`time,<channel>`).
pub fn time_series_csv(ts: &TimeSeries) -> String {
    let mut out = String::with_capacity(ts.samples.len() * 24 + 32);
    let _ = writeln!(out, "time,{}", ts.channel);
    for (i, v) in ts.samples.iter().enumerate() {
        let _ = writeln!(out, "{:.6},{}", ts.time(i), fmt_value(*v));
    }
    out
}

pub fn write_time_series(path: &Path, ts: &TimeSeries) -> Result<()> {
    std::fs::write(path, time_series_csv(ts))?;
    Ok(())
}

/// Parse a time-series CSV; the sample period is inferred from the time
/// column (which must be uniform to 1e-9 s).
pub fn read_time_series(path: &Path) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty file".into() })?;
    let channel = header
        .strip_prefix("time,")
        .ok_or_else(|| Error::Parse { line: 1, msg: format!("bad header `{header}`") })?
        .to_string();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (t, v) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected `time,value`, got `{line}`"),
        })?;
        times.push(t.trim().parse::<f64>().map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("bad time `{t}`: {e}"),
        })?);
        values.push(v.trim().parse::<f64>().map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("bad value `{v}`: {e}"),
        })?);
    }
    if times.len() < 2 {
        return Err(Error::validation("time series needs at least 2 samples"));
    }
    let step = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 {
            return Err(Error::validation("time column is not uniform"));
        }
    }
    TimeSeries::new(channel, step, times[0], values)
}

/// Render a response as CSV (`lag,value[,physical]`).
pub fn response_csv(step: f64, samples: &[f64], physical: Option<&[f64]>) -> String {
    let mut out = String::with_capacity(samples.len() * 24 + 32);
    match physical {
        Some(_) => out.push_str("lag,value,physical\n"),
        None => out.push_str("lag,value\n"),
    }
    for (i, v) in samples.iter().enumerate() {
        let lag = i as f64 * step;
        match physical {
            Some(p) => {
                let _ = writeln!(out, "{lag:.6},{},{}", fmt_value(*v), fmt_value(p[i]));
            }
            None => {
                let _ = writeln!(out, "{lag:.6},{}", fmt_value(*v));
            }
        }
    }
    out
}

pub fn write_recovered_response(path: &Path, resp: &RecoveredResponse) -> Result<()> {
    let physical = resp.physical_samples();
    std::fs::write(path, response_csv(resp.sample_period, &resp.samples, physical.as_deref()))?;
    Ok(())
}

pub fn write_impulse_response(path: &Path, resp: &ImpulseResponse) -> Result<()> {
    std::fs::write(path, response_csv(resp.step, &resp.samples, None))?;
    Ok(())
}

/// A response file read back: lag grid step and sample columns.
#[derive(Debug, Clone)]
pub struct ResponseFile {
    pub step: f64,
    pub values: Vec<f64>,
    pub physical: Option<Vec<f64>>,
}

pub fn read_response(path: &Path) -> Result<ResponseFile> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) =
        lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty file".into() })?;
    let has_physical = match header {
        "lag,value" => false,
        "lag,value,physical" => true,
        other => {
            return Err(Error::Parse { line: 1, msg: format!("bad header `{other}`") })
        }
    };
    let mut lags = Vec::new();
    let mut values = Vec::new();
    let mut physical = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |what: &str| -> Result<f64> {
            fields
                .next()
                .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("missing {what}") })?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: i + 1, msg: format!("bad {what}: {e}") })
        };
        lags.push(next("lag")?);
        values.push(next("value")?);
        if has_physical {
            physical.push(next("physical")?);
        }
    }
    if lags.len() < 2 {
        return Err(Error::validation("response file needs at least 2 rows"));
    }
    let step = lags[1] - lags[0];
    for w in lags.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 {
            return Err(Error::validation("lag column is not uniform"));
        }
    }
    Ok(ResponseFile { step, values, physical: has_physical.then_some(physical) })
}

fn sanitize(label: &str) -> String {
    label.replace(':', "-")
}

/// Canonical response file name for a `(kind, source, target)` triple;
/// `compare` pairs reference and estimate directories by these names.
pub fn response_filename(kind: ResponseKind, source: &str, target: &str) -> String {
    format!("{}__{}__{}.csv", kind.slug(), sanitize(source), sanitize(target))
}

/// Kind slug extracted back from a response file name.
pub fn kind_of_filename(name: &str) -> Option<ResponseKind> {
    let slug = name.split("__").next()?;
    ResponseKind::parse(slug).ok()
}

/// Key-value manifest (one `key = value` per line, sorted input order kept).
pub fn manifest_text(entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// FNV-1a hash of a canonical config rendering, for manifests.
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Evaluation report as CSV: NMSE rows then lag rows.
pub fn report_csv(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str("section,kind,source,target,value\n");
    for row in &report.nmse {
        let _ = writeln!(
            out,
            "nmse,{},{},{},{}",
            row.kind.slug(),
            sanitize(&row.source),
            sanitize(&row.target),
            fmt_value(row.nmse)
        );
    }
    for (kind, mean) in report.kind_means() {
        let _ = writeln!(out, "nmse-mean,{},,,{}", kind.slug(), fmt_value(mean));
    }
    out.push_str("section,target,nadir_time,nadir_value,lag,distance,speed\n");
    for row in &report.lags {
        let _ = writeln!(
            out,
            "lag,{},{:.6},{},{:.6},{},{}",
            sanitize(&row.target),
            row.nadir_time,
            fmt_value(row.nadir_value),
            row.lag,
            row.distance.map(|d| format!("{d:.3}")).unwrap_or_default(),
            row.speed.map(|s| format!("{s:.3}")).unwrap_or_default(),
        );
    }
    out
}

/// Human-readable report rendering.
pub fn report_text(report: &EvaluationReport) -> String {
    let mut out = String::new();
    if !report.config_echo.is_empty() {
        let _ = writeln!(out, "# config\n{}", report.config_echo.trim_end());
    }
    if !report.nmse.is_empty() {
        let _ = writeln!(out, "\n# normalized MSE");
        for row in &report.nmse {
            let _ = writeln!(
                out,
                "  {:<12} {} -> {}: {:.4}",
                row.kind.slug(),
                row.source,
                row.target,
                row.nmse
            );
        }
        for (kind, mean) in report.kind_means() {
            let _ = writeln!(out, "  mean {:<12} {:.4}", kind.slug(), mean);
        }
    }
    if !report.lags.is_empty() {
        let _ = writeln!(out, "\n# nadir lags");
        let _ = writeln!(out, "  {:<24} {:>9} {:>9} {:>9} {:>9}", "target", "nadir/s", "lag/s", "dist/mi", "mi/s");
        for row in &report.lags {
            let _ = writeln!(
                out,
                "  {:<24} {:>9.3} {:>9.3} {:>9} {:>9}",
                row.target,
                row.nadir_time,
                row.lag,
                row.distance.map(|d| format!("{d:.0}")).unwrap_or_else(|| "-".into()),
                row.speed.map(|s| format!("{s:.0}")).unwrap_or_else(|| "-".into()),
            );
        }
    }
    for note in &report.notes {
        let _ = writeln!(out, "\nnote: {note}");
    }
    out
}
