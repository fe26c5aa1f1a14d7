//! File formats: binary and CSV traces, autocorrelation and coefficient
//! tables, sweep CSVs and JSON documents.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::autocorr::AutocorrEstimate;
use crate::cost::SweepRow;
use crate::numeric::fmt_g;
use crate::planner::LinearCostFit;
use crate::synth::PhaseNoiseTrace;
use crate::wiener::WienerCoefficients;
use crate::{Error, Result};

pub const TRACE_MAGIC: &[u8; 4] = b"PNTR";
pub const TRACE_VERSION: u32 = 1;

fn parse_err(what: &str, detail: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{what}: {detail}"))
}

pub fn write_trace_bin<W: Write>(mut w: W, trace: &PhaseNoiseTrace) -> Result<()> {
    w.write_all(TRACE_MAGIC)?;
    w.write_all(&TRACE_VERSION.to_le_bytes())?;
    w.write_all(&trace.fs_hz.to_le_bytes())?;
    w.write_all(&(trace.phases.len() as u64).to_le_bytes())?;
    for p in &trace.phases {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_trace_bin<R: Read>(mut r: R) -> Result<PhaseNoiseTrace> {
    if &read_array::<4, _>(&mut r)? != TRACE_MAGIC {
        return Err(parse_err("trace", "bad magic, expected PNTR"));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != TRACE_VERSION {
        return Err(parse_err("trace", format!("unsupported version {version}")));
    }
    let fs = f64::from_le_bytes(read_array(&mut r)?);
    let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let mut phases = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        phases.push(f64::from_le_bytes(read_array(&mut r)?));
    }
    PhaseNoiseTrace::new(fs, phases)
}

/// Reads every trace concatenated in one binary file.
pub fn read_traces_bin(path: &Path) -> Result<Vec<PhaseNoiseTrace>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let mut cursor = &bytes[..];
    let mut out = Vec::new();
    while !cursor.is_empty() {
        out.push(read_trace_bin(&mut cursor)?);
    }
    if out.is_empty() {
        return Err(parse_err("trace", "file holds no traces"));
    }
    Ok(out)
}

pub fn write_trace_csv<W: Write>(w: W, trace: &PhaseNoiseTrace) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["index", "phase"]).map_err(csv_err)?;
    for (i, p) in trace.phases.iter().enumerate() {
        wr.write_record([i.to_string(), format!("{p:e}")])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// CSV traces carry no sampling rate; the caller supplies it.
pub fn read_trace_csv<R: Read>(r: R, fs_hz: f64) -> Result<PhaseNoiseTrace> {
    let rows = read_numeric_csv(r, &["index", "phase"])?;
    PhaseNoiseTrace::new(fs_hz, rows.into_iter().map(|r| r[1]).collect())
}

pub fn write_autocorr_csv<W: Write>(w: W, est: &AutocorrEstimate) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["lag", "gamma"]).map_err(csv_err)?;
    for (j, g) in est.values.iter().enumerate() {
        wr.write_record([j.to_string(), g.to_string()])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Realization count and imaginary-part diagnostic are not stored in the CSV.
pub fn read_autocorr_csv<R: Read>(r: R) -> Result<AutocorrEstimate> {
    let rows = read_numeric_csv(r, &["lag", "gamma"])?;
    for (i, row) in rows.iter().enumerate() {
        if row[0] != i as f64 {
            return Err(parse_err(
                "autocorrelation",
                format!("expected lag {i}, got {}", row[0]),
            ));
        }
    }
    if rows.is_empty() {
        return Err(parse_err("autocorrelation", "no rows"));
    }
    Ok(AutocorrEstimate {
        max_lag: rows.len() - 1,
        values: rows.into_iter().map(|r| r[1]).collect(),
        n_realizations: 0,
        max_imag: 0.0,
    })
}

/// Sparse `n,j,w` triplets, 1-based indices.
pub fn write_coeffs_csv<W: Write>(w: W, coeffs: &WienerCoefficients) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n", "j", "w"]).map_err(csv_err)?;
    for (n, row) in coeffs.weights.row_iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            if *w != 0.0 {
                wr.write_record([(n + 1).to_string(), (j + 1).to_string(), w.to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn read_coeffs_csv<R: Read>(r: R, n_total: usize, n_pilots: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(n_total, n_pilots);
    for row in read_numeric_csv(r, &["n", "j", "w"])? {
        let (n, j) = (row[0] as usize, row[1] as usize);
        if n < 1 || n > n_total || j < 1 || j > n_pilots {
            return Err(parse_err(
                "coefficients",
                format!("index ({n}, {j}) out of range"),
            ));
        }
        m[(n - 1, j - 1)] = row[2];
    }
    Ok(m)
}

/// Header `{N: u64, N_P: u64}` then the matrix row by row as f64, all little-endian.
pub fn write_coeffs_bin<W: Write>(mut w: W, coeffs: &WienerCoefficients) -> Result<()> {
    let (n, np) = coeffs.weights.shape();
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(np as u64).to_le_bytes())?;
    for row in coeffs.weights.row_iter() {
        for v in row.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_coeffs_bin<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
    let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let np = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let mut values = Vec::with_capacity(n.saturating_mul(np).min(1 << 26));
    for _ in 0..n * np {
        values.push(f64::from_le_bytes(read_array(&mut r)?));
    }
    Ok(DMatrix::from_row_slice(n, np, &values))
}

fn method_label(row: &SweepRow) -> String {
    match (&row.error, row.fallback) {
        (Some(_), _) => "error".into(),
        (None, true) => format!("{}-fallback", row.method),
        (None, false) => row.method.to_string(),
    }
}

/// Header `delta,n_pilots,j_pct,method`, floats as `%.9g`.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["delta", "n_pilots", "j_pct", "method"])
        .map_err(csv_err)?;
    for r in rows {
        wr.write_record([
            r.delta.to_string(),
            r.n_pilots.to_string(),
            fmt_g(r.j_pct, 9),
            method_label(r),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// `(delta, j_pct)` pairs from a sweep CSV, skipping rows that failed.
pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    Ok(read_columns(r, &["delta", "j_pct"])?
        .into_iter()
        .filter(|row| row[1].is_finite())
        .map(|row| (row[0], row[1]))
        .collect())
}

/// Carrier sweep: the spacing sweep with a leading `fc_hz` column.
pub fn write_fc_sweep_csv<W: Write>(w: W, series: &[(f64, Vec<SweepRow>)]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["fc_hz", "delta", "n_pilots", "j_pct", "method"])
        .map_err(csv_err)?;
    for (fc, rows) in series {
        for r in rows {
            wr.write_record([
                fmt_g(*fc, 9),
                r.delta.to_string(),
                r.n_pilots.to_string(),
                fmt_g(r.j_pct, 9),
                method_label(r),
            ])
            .map_err(csv_err)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// `(fc_hz, delta, j_pct)` triples, skipping rows that failed.
pub fn read_fc_sweep_csv<R: Read>(r: R) -> Result<Vec<(f64, f64, f64)>> {
    Ok(read_columns(r, &["fc_hz", "delta", "j_pct"])?
        .into_iter()
        .filter(|row| row[2].is_finite())
        .map(|row| (row[0], row[1], row[2]))
        .collect())
}

/// `a,b,j_pct` grid. Model parameters keep full precision, costs use `%.9g`.
pub fn write_ab_grid_csv<W: Write>(w: W, grid: &[(f64, f64, f64)]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["a", "b", "j_pct"]).map_err(csv_err)?;
    for (a, b, j) in grid {
        wr.write_record([a.to_string(), b.to_string(), fmt_g(*j, 9)])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_ab_grid_csv<R: Read>(r: R) -> Result<Vec<(f64, f64, f64)>> {
    Ok(read_columns(r, &["a", "b", "j_pct"])?
        .into_iter()
        .map(|row| (row[0], row[1], row[2]))
        .collect())
}

/// Per-carrier affine fits: `fc_hz,omega,eta,r2`.
pub fn write_affine_csv<W: Write>(w: W, fits: &[(f64, LinearCostFit)]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["fc_hz", "omega", "eta", "r2"])
        .map_err(csv_err)?;
    for (fc, f) in fits {
        wr.write_record([
            fmt_g(*fc, 9),
            fmt_g(f.omega, 9),
            fmt_g(f.eta, 9),
            fmt_g(f.r2, 9),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// `(fc_hz, omega, eta)` rows of an affine-fit table.
pub fn read_affine_csv<R: Read>(r: R) -> Result<Vec<(f64, f64, f64)>> {
    Ok(read_columns(r, &["fc_hz", "omega", "eta"])?
        .into_iter()
        .map(|row| (row[0], row[1], row[2]))
        .collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn parse_field(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| parse_err("csv", format!("not a number: '{s}'")))
}

/// Named numeric columns, in the order asked for; other columns are ignored.
/// Non-numeric fields (a failed sweep row) read as NaN.
fn read_columns<R: Read>(r: R, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    let idx = names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| parse_err("csv", format!("missing column '{name}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            idx.iter()
                .map(|&i| match rec.get(i) {
                    Some("nan") => Ok(f64::NAN),
                    Some(s) => parse_field(s),
                    None => Err(parse_err("csv", "short row")),
                })
                .collect()
        })
        .collect()
}

fn read_numeric_csv<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_reader(r);
    let got: Vec<String> = rd
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    if got != header {
        return Err(parse_err(
            "csv",
            format!("expected header {header:?}, got {got:?}"),
        ));
    }
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            rec.iter().map(parse_field).collect()
        })
        .collect()
}
