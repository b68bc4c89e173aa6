//! CSV and JSON persistence for results tables and profile curves.
//!
//! Table CSV columns: `solver,problem,dim,x0,status,iters,fevals,time_s,fnorm`.
//! Curve CSV columns: `solver,tau,rho`. The JSON forms carry the same fields.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::profile::{Metric, ProfileCurve, ProfileCurves};
use super::suite::{ResultRow, ResultsTable};
use super::BenchError;

pub const TABLE_HEADER: [&str; 9] = ["solver", "problem", "dim", "x0", "status", "iters", "fevals", "time_s", "fnorm"];
pub const CURVE_HEADER: [&str; 3] = ["solver", "tau", "rho"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub solver: String,
    pub tau: f64,
    pub rho: f64,
}

fn io_err(path: &Path, source: std::io::Error) -> BenchError {
    BenchError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path, source: csv::Error) -> BenchError {
    BenchError::Csv { path: path.to_path_buf(), source }
}

fn json_err(path: &Path, source: serde_json::Error) -> BenchError {
    BenchError::Json { path: path.to_path_buf(), source }
}

fn write_rows<W: Write, T: Serialize>(out: W, header: &[&str], rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    // Written explicitly so that an empty table still gets its header.
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a results table as CSV to any writer.
pub fn write_table_csv<W: Write>(table: &ResultsTable, out: W) -> Result<(), csv::Error> {
    write_rows(out, &TABLE_HEADER, &table.rows)
}

pub fn read_table_csv<R: Read>(input: R) -> Result<ResultsTable, csv::Error> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize::<ResultRow>().collect::<Result<_, _>>()?;
    Ok(ResultsTable { rows })
}

pub fn curves_to_points(curves: &ProfileCurves) -> Vec<CurvePoint> {
    curves
        .curves
        .iter()
        .flat_map(|c| c.points.iter().map(|&(tau, rho)| CurvePoint { solver: c.solver.clone(), tau, rho }))
        .collect()
}

pub fn write_curves_csv<W: Write>(curves: &ProfileCurves, out: W) -> Result<(), csv::Error> {
    write_rows(out, &CURVE_HEADER, &curves_to_points(curves))
}

/// Reads curve points back, grouping by solver in order of appearance.
pub fn read_curves_csv<R: Read>(input: R) -> Result<Vec<ProfileCurve>, csv::Error> {
    let mut r = csv::Reader::from_reader(input);
    let mut curves: Vec<ProfileCurve> = Vec::new();
    for p in r.deserialize::<CurvePoint>() {
        let p = p?;
        match curves.iter_mut().find(|c| c.solver == p.solver) {
            Some(c) => c.points.push((p.tau, p.rho)),
            None => curves.push(ProfileCurve { solver: p.solver, points: vec![(p.tau, p.rho)] }),
        }
    }
    Ok(curves)
}

pub fn emit_table_csv(table: &ResultsTable, path: &Path) -> Result<(), BenchError> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    write_table_csv(table, BufWriter::new(f)).map_err(|e| csv_err(path, e))
}

pub fn load_table_csv(path: &Path) -> Result<ResultsTable, BenchError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    read_table_csv(f).map_err(|e| csv_err(path, e))
}

pub fn emit_curves_csv(curves: &ProfileCurves, path: &Path) -> Result<(), BenchError> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    write_curves_csv(curves, BufWriter::new(f)).map_err(|e| csv_err(path, e))
}

/// JSON form of a profile: metric plus the flat point list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvesDocument {
    pub metric: Metric,
    pub n_instances: usize,
    pub points: Vec<CurvePoint>,
}

pub fn emit_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<(), BenchError> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| json_err(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

pub fn emit_table_json(table: &ResultsTable, path: &Path) -> Result<(), BenchError> {
    emit_json(&table.rows, path)
}

pub fn load_table_json(path: &Path) -> Result<ResultsTable, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let rows = serde_json::from_str(&text).map_err(|e| json_err(path, e))?;
    Ok(ResultsTable { rows })
}

pub fn emit_curves_json(curves: &ProfileCurves, path: &Path) -> Result<(), BenchError> {
    emit_json(
        &CurvesDocument { metric: curves.metric, n_instances: curves.n_instances, points: curves_to_points(curves) },
        path,
    )
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Writes CSV or JSON depending on the file extension.
pub fn emit_table(table: &ResultsTable, path: &Path) -> Result<(), BenchError> {
    if is_json(path) {
        emit_table_json(table, path)
    } else {
        emit_table_csv(table, path)
    }
}

pub fn load_table(path: &Path) -> Result<ResultsTable, BenchError> {
    if is_json(path) {
        load_table_json(path)
    } else {
        load_table_csv(path)
    }
}

pub fn emit_curves(curves: &ProfileCurves, path: &Path) -> Result<(), BenchError> {
    if is_json(path) {
        emit_curves_json(curves, path)
    } else {
        emit_curves_csv(curves, path)
    }
}
