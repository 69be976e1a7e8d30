//! Array export as flat little-endian `f64` binaries with JSON sidecars, and
//! CSV tables.
//!
//! An array stored at stem `out/psi` occupies `out/psi.bin` (the values,
//! row-major, 8 bytes each) and `out/psi.json` (a [`Sidecar`] carrying the
//! remaining fields of the exported record).

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{domain, Result};
use crate::evolution::SolutionState;
use crate::grid::GridFunction;
use crate::lattice::BoxSpec;
use crate::potential::PotentialField;
use crate::spectral::EigenResult;

/// Sidecar `dtype` tag.
pub const DTYPE: &str = "f64-le";
/// Sidecar `order` tag.
pub const ORDER: &str = "row-major";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    PotentialField,
    GridFunction,
    Eigenvector,
    Solution,
}

/// JSON description of a flat binary array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub kind: ArrayKind,
    pub dtype: String,
    pub order: String,
    pub len: usize,
    /// The record without its value array.
    pub meta: Value,
}

/// Eigenpair together with the box its vector lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorRecord {
    #[serde(rename = "box")]
    pub box_spec: BoxSpec,
    pub eigen: EigenResult<f64>,
}

pub fn bin_path(stem: &Path) -> PathBuf {
    stem.with_extension("bin")
}

pub fn sidecar_path(stem: &Path) -> PathBuf {
    stem.with_extension("json")
}

pub fn encode_f64_le(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_f64_le(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return domain(format!("binary length {} is not a multiple of 8", bytes.len()));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

/// Writes `values` and the sidecar; returns the two paths written.
pub fn write_flat(stem: &Path, kind: ArrayKind, values: &[f64], meta: Value) -> Result<(PathBuf, PathBuf)> {
    let sidecar =
        Sidecar { kind, dtype: DTYPE.into(), order: ORDER.into(), len: values.len(), meta };
    let (bin, json) = (bin_path(stem), sidecar_path(stem));
    fs::write(&bin, encode_f64_le(values))?;
    fs::write(&json, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok((bin, json))
}

/// Reads an array, checking the sidecar tags and the value count.
pub fn read_flat(stem: &Path, kind: ArrayKind) -> Result<(Vec<f64>, Sidecar)> {
    let sidecar: Sidecar = serde_json::from_slice(&fs::read(sidecar_path(stem))?)?;
    if sidecar.kind != kind {
        return domain(format!("sidecar describes {:?}, expected {kind:?}", sidecar.kind));
    }
    if sidecar.dtype != DTYPE || sidecar.order != ORDER {
        return domain(format!("unsupported layout {} / {}", sidecar.dtype, sidecar.order));
    }
    let values = decode_f64_le(&fs::read(bin_path(stem))?)?;
    if values.len() != sidecar.len {
        return domain(format!("binary holds {} values, sidecar declares {}", values.len(), sidecar.len));
    }
    Ok((values, sidecar))
}

/// Splits the array stored under `key` (possibly a dotted path) out of a record.
fn split_record<S: Serialize>(record: &S, key: &[&str]) -> Result<(Vec<f64>, Value)> {
    let mut meta = serde_json::to_value(record)?;
    let (last, parents) = key.split_last().expect("non-empty key path");
    let mut node = &mut meta;
    for k in parents {
        node = node.get_mut(*k).expect("record has the key path");
    }
    let values = node.as_object_mut().and_then(|o| o.remove(*last)).expect("record has the value array");
    Ok((serde_json::from_value(values)?, meta))
}

fn join_record<S: DeserializeOwned>(mut meta: Value, key: &[&str], values: Vec<f64>) -> Result<S> {
    let (last, parents) = key.split_last().expect("non-empty key path");
    let mut node = &mut meta;
    for k in parents {
        node = match node.get_mut(*k) {
            Some(n) => n,
            None => return domain(format!("sidecar meta lacks `{k}`")),
        };
    }
    match node.as_object_mut() {
        Some(o) => o.insert((*last).to_string(), serde_json::to_value(values)?),
        None => return domain("sidecar meta is not an object"),
    };
    let record: S = serde_json::from_value(meta)?;
    Ok(record)
}

fn export<S: Serialize>(record: &S, key: &[&str], kind: ArrayKind, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let (values, meta) = split_record(record, key)?;
    write_flat(stem, kind, &values, meta)
}

fn import<S: DeserializeOwned>(stem: &Path, key: &[&str], kind: ArrayKind) -> Result<S> {
    let (values, sidecar) = read_flat(stem, kind)?;
    join_record(sidecar.meta, key, values)
}

pub fn export_field(field: &PotentialField, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    export(field, &["values"], ArrayKind::PotentialField, stem)
}

pub fn import_field(stem: &Path) -> Result<PotentialField> {
    let field: PotentialField = import(stem, &["values"], ArrayKind::PotentialField)?;
    PotentialField::from_values(field.box_spec, field.values, field.dist, field.seed)
}

pub fn export_grid(g: &GridFunction<f64>, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    export(g, &["values"], ArrayKind::GridFunction, stem)
}

pub fn import_grid(stem: &Path) -> Result<GridFunction<f64>> {
    let g: GridFunction<f64> = import(stem, &["values"], ArrayKind::GridFunction)?;
    Ok(GridFunction::new(g.grid, g.values)?.with_boundary(g.boundary))
}

pub fn export_eigenvector(record: &EigenvectorRecord, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    export(record, &["eigen", "vector"], ArrayKind::Eigenvector, stem)
}

pub fn import_eigenvector(stem: &Path) -> Result<EigenvectorRecord> {
    let record: EigenvectorRecord = import(stem, &["eigen", "vector"], ArrayKind::Eigenvector)?;
    if record.box_spec.region()?.len() != record.eigen.vector.len() {
        return domain("eigenvector length differs from the box size");
    }
    Ok(record)
}

pub fn export_solution(state: &SolutionState, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    export(state, &["values"], ArrayKind::Solution, stem)
}

pub fn import_solution(stem: &Path) -> Result<SolutionState> {
    let state: SolutionState = import(stem, &["values"], ArrayKind::Solution)?;
    if state.box_spec.region()?.len() != state.values.len() {
        return domain("solution length differs from the box size");
    }
    Ok(state)
}

/// RFC-4180 CSV with a header row from the field names and LF line endings.
pub fn csv_bytes<S: Serialize>(rows: &[S]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
}

pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    fs::write(path, csv_bytes(rows)?)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => crate::Error::Io(e),
        other => crate::Error::Domain(format!("csv: {other:?}")),
    }
}
