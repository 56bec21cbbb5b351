//! CSV tables with JSON sidecars, and trace files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pnin_core::TraceSet;
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const TRACE_HEADER: [&str; 3] = ["time_us", "ch1", "ch2"];

/// Shortest representation that parses back to the same value; absent
/// values are written as empty fields.
fn field(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:?}"),
        _ => String::new(),
    }
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<Option<f64>>>,
{
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
    let io_err = |e: csv::Error| CliError::data(format!("cannot write {}: {e}", path.display()));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row.into_iter().map(field)).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::data(format!("cannot serialise {}: {e}", path.display())))?;
    fs::write(path, text + "\n")
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

/// `dir/stem.csv` and its sidecar `dir/stem.json`.
pub fn table_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{stem}.csv")),
        dir.join(format!("{stem}.json")),
    )
}

pub fn sidecar_of(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes a trace as `time_us,ch1,ch2` with a sidecar holding the sampling
/// interval, the detuning label and `extra`.
pub fn write_trace(csv_path: &Path, trace: &TraceSet, extra: Value) -> CliResult<PathBuf> {
    let dt = trace.time_step;
    write_csv(
        csv_path,
        &TRACE_HEADER,
        (0..trace.len()).map(|i| {
            vec![
                Some(i as f64 * dt),
                Some(trace.channel1[i]),
                Some(trace.channel2[i]),
            ]
        }),
    )?;
    let side = sidecar_of(csv_path);
    let mut meta = serde_json::json!({
        "kind": "trace",
        "delta_rad_per_us": trace.delta_label,
        "sampling_interval_us": dt,
        "sampling_rate_mhz": 1.0 / dt,
        "samples": trace.len(),
        "metadata": trace.metadata,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
        m.extend(e);
    }
    write_json(&side, &meta)?;
    Ok(side)
}

fn data_error(path: &Path, line: Option<u64>, msg: impl Into<String>) -> CliError {
    let msg = msg.into();
    let text = match line {
        Some(l) => format!("{}:{l}: {msg}", path.display()),
        None => format!("{}: {msg}", path.display()),
    };
    CliError::data(text).at(path, line)
}

/// Reads a `time_us,ch1,ch2` file. The detuning comes from `delta_override`
/// or else from the sidecar; the sampling interval from the sidecar or else
/// from the time column.
pub fn read_trace(path: &Path, delta_override: Option<f64>) -> CliResult<TraceSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| data_error(path, None, format!("cannot open: {e}")))?;
    let header = reader
        .headers()
        .map_err(|e| data_error(path, Some(1), e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != TRACE_HEADER {
        return Err(data_error(
            path,
            Some(1),
            format!(
                "expected header `{}`, found `{}`",
                TRACE_HEADER.join(","),
                names.join(",")
            ),
        ));
    }

    let mut time = Vec::new();
    let mut ch1 = Vec::new();
    let mut ch2 = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            data_error(path, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line());
        if record.len() != 3 {
            return Err(data_error(
                path,
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let mut vals = [0.0; 3];
        for (k, f) in record.iter().enumerate() {
            vals[k] = f
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| data_error(path, line, format!("`{f}` is not a finite number")))?;
        }
        time.push(vals[0]);
        ch1.push(vals[1]);
        ch2.push(vals[2]);
    }

    let side = sidecar_of(path);
    let meta: Option<Value> = if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| data_error(&side, None, e.to_string()))?;
        Some(
            serde_json::from_str(&text).map_err(|e| {
                data_error(&side, Some(e.line() as u64), format!("invalid JSON: {e}"))
            })?,
        )
    } else {
        None
    };
    let from_meta = |key: &str| {
        meta.as_ref()
            .and_then(|m| m.get(key))
            .and_then(Value::as_f64)
    };

    let delta = delta_override
        .or_else(|| from_meta("delta_rad_per_us"))
        .ok_or_else(|| {
            data_error(
                path,
                None,
                "no detuning label: add a sidecar with `delta_rad_per_us` or pass --label",
            )
        })?;
    let dt = match from_meta("sampling_interval_us") {
        Some(dt) => dt,
        None if time.len() >= 2 => time[1] - time[0],
        None => return Err(data_error(path, None, "cannot infer the sampling interval")),
    };

    let mut trace = TraceSet {
        time_step: dt,
        channel1: ch1,
        channel2: ch2,
        delta_label: delta,
        metadata: BTreeMap::new(),
    };
    trace
        .metadata
        .insert("source".into(), path.display().to_string());
    trace
        .validate()
        .map_err(|e| data_error(path, None, e.to_string()))?;
    Ok(trace)
}
