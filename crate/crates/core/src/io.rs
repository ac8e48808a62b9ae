//! Container files, model serialization and CSV export.
//!
//! A container is the 8-byte magic `LROMSNP1`, a little-endian `u64` header
//! length, a UTF-8 JSON header and a little-endian `f64` payload in row-major
//! order of the header's `shape`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Array4};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analysis::{CoherenceSeries, ErrorTable, NWidthCurve};
use crate::dmd::ReducedOperator;
use crate::error::{Error, Result};
use crate::pdmd::{Compressor, CompressorKind, FieldLayout, PdmdModel};
use crate::snapshot::{Frame, Grid, Normalization, ParamSet, SnapshotSet, TimeAxis};

pub const MAGIC: &[u8; 8] = b"LROMSNP1";
pub const VERSION: u32 = 1;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TimeHeader {
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridHeader {
    pub dim: usize,
    pub bounds: Vec<(f64, f64)>,
    pub points: Vec<usize>,
    pub periodic: Vec<bool>,
}

impl GridHeader {
    pub fn of(g: &Grid) -> Self {
        GridHeader { dim: g.dim(), bounds: g.bounds().to_vec(), points: g.points().to_vec(), periodic: g.periodic().to_vec() }
    }

    pub fn to_grid(&self) -> Result<Grid> {
        if self.dim != self.points.len() {
            return Err(format_err("grid dim disagrees with its point counts"));
        }
        Grid::new(self.bounds.clone(), self.points.clone(), self.periodic.clone())
    }
}

impl From<&TimeAxis> for TimeHeader {
    fn from(t: &TimeAxis) -> Self {
        TimeHeader { t0: t.t0, dt: t.dt, count: t.count }
    }
}

impl TimeHeader {
    fn to_axis(&self) -> Result<TimeAxis> {
        TimeAxis::new(self.t0, self.dt, self.count)
    }
}

/// Header of a snapshot container; unrecognized keys land in `extra`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SnapshotHeader {
    version: u32,
    frame: Frame,
    shape: Vec<usize>,
    channel_names: Vec<String>,
    param_names: Vec<String>,
    param_values: Vec<Vec<f64>>,
    time: TimeHeader,
    grid: Option<GridHeader>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalization: Option<Normalization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    created_at: Option<String>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

/// Header object and payload of any container.
#[derive(Debug, Clone, PartialEq)]
pub struct RawContainer {
    pub header: Map<String, Value>,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn write_raw(path: &Path, header: &Map<String, Value>, data: &[f64]) -> Result<()> {
    let bytes = serde_json::to_vec(header)?;
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::from(e).context(path.display().to_string()))?);
    w.write_all(MAGIC)?;
    w.write_all(&(bytes.len() as u64).to_le_bytes())?;
    w.write_all(&bytes)?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read any container; non-finite payload values are rejected unless `allow_nan`.
pub fn read_raw(path: &Path, allow_nan: bool) -> Result<RawContainer> {
    let file = File::open(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| format_err("file shorter than the magic"))?;
    if &magic != MAGIC {
        return Err(format_err(format!("bad magic {:?}", String::from_utf8_lossy(&magic))));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| format_err("missing header length"))?;
    let len = u64::from_le_bytes(len) as usize;
    let mut hbytes = Vec::new();
    (&mut r).take(len as u64).read_to_end(&mut hbytes)?;
    if hbytes.len() != len {
        return Err(format_err(format!("header declares {len} bytes, file holds {}", hbytes.len())));
    }
    let header: Map<String, Value> = serde_json::from_slice(&hbytes).map_err(|e| format_err(format!("header: {e}")))?;
    let shape: Vec<usize> = header
        .get("shape")
        .cloned()
        .map(serde_json::from_value)
        .transpose()
        .map_err(|e| format_err(format!("shape: {e}")))?
        .ok_or_else(|| format_err("header has no shape"))?;
    let count: usize = shape.iter().product();
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != 8 * count {
        return Err(format_err(format!("payload holds {} bytes, shape {shape:?} needs {}", payload.len(), 8 * count)));
    }
    let data: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    if !allow_nan {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(format_err(format!("non-finite payload value at flat index {i}")));
        }
    }
    Ok(RawContainer { header, shape, data })
}

pub fn write_container(s: &SnapshotSet, path: &Path) -> Result<()> {
    write_container_stamped(s, path, None)
}

/// As [`write_container`], recording `created_at` in the header.
pub fn write_container_stamped(s: &SnapshotSet, path: &Path, created_at: Option<&str>) -> Result<()> {
    let header = SnapshotHeader {
        version: VERSION,
        frame: s.frame(),
        shape: s.shape(),
        channel_names: s.channels().to_vec(),
        param_names: s.params().names().to_vec(),
        param_values: s.params().values().rows().into_iter().map(|r| r.to_vec()).collect(),
        time: s.times().into(),
        grid: s.grid().map(GridHeader::of),
        normalization: s.normalization().cloned(),
        created_at: created_at.map(str::to_string),
        extra: s.extra().clone(),
    };
    let map = match serde_json::to_value(&header)? {
        Value::Object(m) => m,
        _ => unreachable!("header serializes to an object"),
    };
    let data: Vec<f64> = s.data().iter().copied().collect();
    write_raw(path, &map, &data)
}

pub fn read_container(path: &Path) -> Result<SnapshotSet> {
    let raw = read_raw(path, false)?;
    snapshot_from_raw(raw).map_err(|e| e.context(path.display().to_string()))
}

fn snapshot_from_raw(raw: RawContainer) -> Result<SnapshotSet> {
    let h: SnapshotHeader = serde_json::from_value(Value::Object(raw.header)).map_err(|e| format_err(format!("header: {e}")))?;
    if h.version != VERSION {
        return Err(format_err(format!("unsupported version {}", h.version)));
    }
    let grid = h.grid.as_ref().map(GridHeader::to_grid).transpose()?;
    let np = h.param_values.len();
    let d = h.param_names.len();
    let mut pv = Array2::zeros((np, d));
    for (i, row) in h.param_values.iter().enumerate() {
        if row.len() != d {
            return Err(format_err("parameter row length differs from param_names"));
        }
        pv.row_mut(i).assign(&Array1::from(row.clone()));
    }
    let params = ParamSet::new(h.param_names.clone(), pv)?;
    let times = h.time.to_axis()?;
    let space = grid.as_ref().map_or(1, Grid::len);
    let mut expected = vec![np, times.count, h.channel_names.len()];
    if let Some(g) = &grid {
        expected.extend_from_slice(g.points());
    }
    if h.shape != expected {
        return Err(format_err(format!("shape {:?} disagrees with metadata {expected:?}", h.shape)));
    }
    let data = Array4::from_shape_vec((np, times.count, h.channel_names.len(), space), raw.data)
        .map_err(|e| format_err(e.to_string()))?;
    SnapshotSet::new(grid, params, times, h.frame, h.channel_names, data)?
        .with_normalization(h.normalization)
        .map(|s| s.with_extra(h.extra))
}

struct Blocks {
    specs: Vec<Value>,
    data: Vec<f64>,
}

impl Blocks {
    fn new() -> Self {
        Blocks { specs: Vec::new(), data: Vec::new() }
    }

    fn push(&mut self, name: &str, shape: &[usize], values: impl IntoIterator<Item = f64>) {
        let before = self.data.len();
        self.data.extend(values);
        debug_assert_eq!(self.data.len() - before, shape.iter().product::<usize>());
        self.specs.push(json!({ "name": name, "shape": shape }));
    }

    fn write(self, path: &Path, frame: &str, mut meta: Map<String, Value>) -> Result<()> {
        meta.insert("version".into(), VERSION.into());
        meta.insert("frame".into(), frame.into());
        meta.insert("shape".into(), json!([self.data.len()]));
        meta.insert("blocks".into(), Value::Array(self.specs));
        write_raw(path, &meta, &self.data)
    }
}

/// Named blocks of a block-structured container.
fn read_blocks(path: &Path, frame: &str) -> Result<(Map<String, Value>, Vec<(String, Vec<usize>, Vec<f64>)>)> {
    let raw = read_raw(path, false)?;
    if raw.header.get("frame").and_then(Value::as_str) != Some(frame) {
        return Err(format_err(format!("{} is not a '{frame}' container", path.display())));
    }
    let specs = raw.header.get("blocks").and_then(Value::as_array).ok_or_else(|| format_err("missing block table"))?;
    let mut out = Vec::new();
    let mut offset = 0;
    for spec in specs {
        let name = spec.get("name").and_then(Value::as_str).ok_or_else(|| format_err("unnamed block"))?;
        let shape: Vec<usize> = serde_json::from_value(spec.get("shape").cloned().unwrap_or(Value::Null))
            .map_err(|e| format_err(format!("block {name}: {e}")))?;
        let n: usize = shape.iter().product();
        if offset + n > raw.data.len() {
            return Err(format_err(format!("block {name} runs past the payload")));
        }
        out.push((name.to_string(), shape, raw.data[offset..offset + n].to_vec()));
        offset += n;
    }
    if offset != raw.data.len() {
        return Err(format_err("payload longer than its blocks"));
    }
    Ok((raw.header, out))
}

fn take_block(blocks: &mut Vec<(String, Vec<usize>, Vec<f64>)>, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let i = blocks.iter().position(|b| b.0 == name).ok_or_else(|| format_err(format!("missing block {name}")))?;
    let (_, shape, data) = blocks.remove(i);
    Ok((shape, data))
}

fn matrix(shape: Vec<usize>, data: Vec<f64>) -> Result<Array2<f64>> {
    if shape.len() != 2 {
        return Err(format_err("expected a matrix block"));
    }
    Array2::from_shape_vec((shape[0], shape[1]), data).map_err(|e| format_err(e.to_string()))
}

fn field<T: serde::de::DeserializeOwned>(meta: &Map<String, Value>, key: &str) -> Result<T> {
    serde_json::from_value(meta.get(key).cloned().unwrap_or(Value::Null)).map_err(|e| format_err(format!("{key}: {e}")))
}

/// Serialize a pDMD model as a block container with frame `model`.
pub fn write_model(m: &PdmdModel, path: &Path) -> Result<()> {
    let r = m.rank();
    let np = m.params.len();
    let mut blocks = Blocks::new();
    let compressor = match &m.compressor.kind {
        CompressorKind::Pod { basis, sigma } => {
            blocks.push("basis", &[basis.nrows(), r], basis.iter().copied());
            blocks.push("sigma", &[sigma.len()], sigma.iter().copied());
            json!({ "kind": "pod" })
        }
        CompressorKind::External { source } => json!({ "kind": "external", "source": source }),
    };
    blocks.push("operators", &[np, r, r], m.operators.iter().flat_map(|a| a.iter().copied()));
    blocks.push("anchors", &[np, r], m.anchors.iter().flat_map(|a| a.iter().copied()));
    let mut meta = Map::new();
    meta.insert("rank".into(), r.into());
    meta.insert("kernel".into(), m.kernel.clone().into());
    meta.insert("compressor".into(), compressor);
    meta.insert("normalization".into(), serde_json::to_value(&m.compressor.normalization)?);
    meta.insert("source_frame".into(), serde_json::to_value(m.layout.frame)?);
    meta.insert("channel_names".into(), serde_json::to_value(&m.layout.channels)?);
    meta.insert("grid".into(), serde_json::to_value(GridHeader::of(&m.layout.grid))?);
    meta.insert("param_names".into(), serde_json::to_value(m.params.names())?);
    meta.insert(
        "param_values".into(),
        serde_json::to_value(m.params.values().rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>())?,
    );
    meta.insert("time".into(), serde_json::to_value(TimeHeader::from(&m.times))?);
    meta.insert("residuals".into(), serde_json::to_value(&m.residuals)?);
    blocks.write(path, "model", meta)
}

pub fn read_model(path: &Path) -> Result<PdmdModel> {
    let (meta, mut blocks) = read_blocks(path, "model")?;
    let r: usize = field(&meta, "rank")?;
    let comp: Value = field(&meta, "compressor")?;
    let normalization: Option<Normalization> = field(&meta, "normalization")?;
    let kind = match comp.get("kind").and_then(Value::as_str) {
        Some("pod") => {
            let (bs, bd) = take_block(&mut blocks, "basis")?;
            let (_, sd) = take_block(&mut blocks, "sigma")?;
            CompressorKind::Pod { basis: matrix(bs, bd)?, sigma: Array1::from(sd) }
        }
        Some("external") => CompressorKind::External {
            source: comp.get("source").and_then(Value::as_str).unwrap_or_default().to_string(),
        },
        other => return Err(format_err(format!("unknown compressor kind {other:?}"))),
    };
    let names: Vec<String> = field(&meta, "param_names")?;
    let rows: Vec<Vec<f64>> = field(&meta, "param_values")?;
    let mut pv = Array2::zeros((rows.len(), names.len()));
    for (i, row) in rows.iter().enumerate() {
        pv.row_mut(i).assign(&Array1::from(row.clone()));
    }
    let params = ParamSet::new(names, pv)?;
    let np = params.len();
    let (os, od) = take_block(&mut blocks, "operators")?;
    let (as_, ad) = take_block(&mut blocks, "anchors")?;
    if os != [np, r, r] || as_ != [np, r] {
        return Err(format_err("operator or anchor blocks disagree with rank and parameter count"));
    }
    let operators = od.chunks(r * r).map(|c| Array2::from_shape_vec((r, r), c.to_vec()).expect("r*r")).collect();
    let anchors = ad.chunks(r).map(|c| Array1::from(c.to_vec())).collect();
    let grid: GridHeader = field(&meta, "grid")?;
    let time: TimeHeader = field(&meta, "time")?;
    Ok(PdmdModel {
        compressor: Compressor { kind, rank: r, normalization },
        layout: FieldLayout { frame: field(&meta, "source_frame")?, grid: grid.to_grid()?, channels: field(&meta, "channel_names")? },
        params,
        times: time.to_axis()?,
        operators,
        anchors,
        residuals: field(&meta, "residuals")?,
        kernel: field(&meta, "kernel")?,
    })
}

/// Serialize a single DMD operator (basis, `Ã`, σ) with its provenance.
pub fn write_operator(op: &ReducedOperator, path: &Path) -> Result<()> {
    let mut blocks = Blocks::new();
    let b = op.basis();
    blocks.push("basis", &[b.nrows(), b.ncols()], b.iter().copied());
    let a = op.operator();
    blocks.push("operator", &[a.nrows(), a.ncols()], a.iter().copied());
    blocks.push("sigma", &[op.singular_values().len()], op.singular_values().iter().copied());
    let mut meta = Map::new();
    meta.insert("source_frame".into(), serde_json::to_value(op.frame)?);
    meta.insert("param".into(), serde_json::to_value(&op.param)?);
    meta.insert("degenerate".into(), op.is_degenerate().into());
    blocks.write(path, "operator", meta)
}

pub fn read_operator(path: &Path) -> Result<ReducedOperator> {
    let (meta, mut blocks) = read_blocks(path, "operator")?;
    let (bs, bd) = take_block(&mut blocks, "basis")?;
    let (as_, ad) = take_block(&mut blocks, "operator")?;
    let (_, sd) = take_block(&mut blocks, "sigma")?;
    let mut op = ReducedOperator::from_parts(matrix(bs, bd)?, matrix(as_, ad)?, Array1::from(sd))?;
    op.frame = field(&meta, "source_frame")?;
    op.param = field(&meta, "param")?;
    Ok(op)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header row plus one formatted row per entry.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: parameter names, `t`, `error`; param-major then time.
pub fn write_error_table(t: &ErrorTable, path: &Path) -> Result<()> {
    let mut header: Vec<&str> = t.params.names().iter().map(String::as_str).collect();
    header.extend(["t", "error"]);
    let mut rows = Vec::new();
    for p in 0..t.params.len() {
        for k in 0..t.times.count {
            let mut row: Vec<String> = t.params.row(p).iter().map(|&v| fmt_f64(v)).collect();
            row.push(fmt_f64(t.times.time(k)));
            row.push(fmt_f64(t.errors[[p, k]]));
            rows.push(row);
        }
    }
    write_csv(path, &header, &rows)
}

pub fn write_coherence(c: &CoherenceSeries, path: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = c.times.iter().zip(&c.gamma).map(|(t, g)| vec![fmt_f64(*t), fmt_f64(*g)]).collect();
    write_csv(path, &["t", "gamma"], &rows)
}

pub fn write_nwidth(c: &NWidthCurve, path: &Path) -> Result<()> {
    let norm = c.normalized();
    let rows: Vec<Vec<String>> = c
        .n
        .iter()
        .zip(&c.d_hat)
        .zip(&norm)
        .map(|((n, d), dn)| vec![n.to_string(), fmt_f64(*d), fmt_f64(*dn)])
        .collect();
    write_csv(path, &["n", "d_hat", "d_hat_normalized"], &rows)
}

/// Columns `n, sigma_normalized` with `n` starting at 1.
pub fn write_spectrum(s: &Array1<f64>, path: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = s.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), fmt_f64(*v)]).collect();
    write_csv(path, &["n", "sigma_normalized"], &rows)
}

/// Parameter file: header row of names, one parameter per row.
pub fn read_params_csv(path: &Path) -> Result<ParamSet> {
    let file = File::open(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| format_err(format!("{}: {e}", path.display())))?);
    }
    let mut values = Array2::zeros((rows.len(), names.len()));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != names.len() {
            return Err(format_err(format!("{}: row {} has {} values", path.display(), i + 1, row.len())));
        }
        values.row_mut(i).assign(&Array1::from(row.clone()));
    }
    ParamSet::new(names, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdmd::fit_pdmd_pod;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn random_set(seed: u64, frame: Frame) -> SnapshotSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (grid, space) = match frame {
            Frame::Latent => (None, 1),
            _ => (Some(Grid::new_2d(-1.0, 1.0, 4, true).unwrap()), 16),
        };
        let data = Array4::from_shape_fn((3, 5, 2, space), |_| rng.random::<f64>() * 1e3 - 500.0);
        SnapshotSet::new(
            grid,
            ParamSet::new(vec!["a".into(), "b".into()], Array2::from_shape_fn((3, 2), |(i, j)| (i * 2 + j) as f64 * 0.1)).unwrap(),
            TimeAxis::new(0.25, 0.01, 5).unwrap(),
            frame,
            vec!["chi".into(), "u".into()],
            data,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact_and_keeps_unknown_keys() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("s.lrom");
        let mut extra = Map::new();
        extra.insert("producer".into(), json!({"tool": "x", "n": 3}));
        let s = random_set(1, Frame::Lagrangian)
            .with_normalization(Some(Normalization {
                channels: vec![
                    crate::snapshot::ChannelAffine { name: "chi".into(), shift: 0.5, scale: 2.0 },
                    crate::snapshot::ChannelAffine { name: "u".into(), shift: -1.0, scale: 0.1 },
                ],
            }))
            .unwrap()
            .with_extra(extra);
        write_container(&s, &p).unwrap();
        let back = read_container(&p).unwrap();
        assert_eq!(back, s);
        let p2 = dir.path().join("s2.lrom");
        write_container(&back, &p2).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn created_at_is_not_part_of_equality() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("s.lrom");
        let s = random_set(2, Frame::Eulerian);
        write_container_stamped(&s, &p, Some("2026-01-01T00:00:00Z")).unwrap();
        assert_eq!(read_container(&p).unwrap(), s);
    }

    #[test]
    fn latent_container_shape() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("h.lrom");
        let s = random_set(3, Frame::Latent);
        write_container(&s, &p).unwrap();
        let raw = read_raw(&p, false).unwrap();
        assert_eq!(raw.shape, vec![3, 5, 2]);
        assert_eq!(raw.header["grid"], Value::Null);
        assert_eq!(read_container(&p).unwrap(), s);
    }

    #[test]
    fn corrupt_files_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("s.lrom");
        write_container(&random_set(4, Frame::Eulerian), &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let q = dir.path().join("t.lrom");
        std::fs::write(&q, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_container(&q), Err(Error::Context { .. }) | Err(Error::Format(_))));
        assert!(matches!(read_raw(&q, false), Err(Error::Format(m)) if m.contains("payload")));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&q, &bad).unwrap();
        assert!(matches!(read_raw(&q, false), Err(Error::Format(m)) if m.contains("magic")));
        let mut nan = bytes.clone();
        let n = nan.len();
        nan[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        std::fs::write(&q, &nan).unwrap();
        assert!(read_raw(&q, false).is_err());
        assert!(read_raw(&q, true).unwrap().data.last().unwrap().is_nan());
        assert!(read_container(&dir.path().join("missing.lrom")).unwrap_err().is_io());
    }

    #[test]
    fn model_round_trip() {
        let dir = tempdir().unwrap();
        let s = random_set(5, Frame::Lagrangian);
        let m = fit_pdmd_pod(&s, 3, true).unwrap();
        let p = dir.path().join("m.lrom");
        write_model(&m, &p).unwrap();
        assert_eq!(read_model(&p).unwrap(), m);
        assert!(read_container(&p).is_err());
    }

    #[test]
    fn operator_round_trip() {
        let dir = tempdir().unwrap();
        let s = random_set(6, Frame::Eulerian);
        let op = crate::dmd::fit_dmd(s.flatten_snapshots(0).unwrap().view(), 3)
            .unwrap()
            .with_provenance(Frame::Eulerian, vec![0.0, 0.1]);
        let p = dir.path().join("op.lrom");
        write_operator(&op, &p).unwrap();
        let back = read_operator(&p).unwrap();
        assert_eq!(back.basis(), op.basis());
        assert_eq!(back.operator(), op.operator());
        assert_eq!(back.param, op.param);
    }

    #[test]
    fn csv_schemas() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let c = CoherenceSeries { times: vec![], gamma: vec![], frame: Frame::Eulerian };
        write_coherence(&c, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "t,gamma\n");
        let curve = NWidthCurve { n: vec![0, 1], d_hat: vec![2.0, 0.5] };
        write_nwidth(&curve, &p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "n,d_hat,d_hat_normalized\n0,2.0000000000000000e0,1.0000000000000000e0\n1,5.0000000000000000e-1,2.5000000000000000e-1\n"
        );
        let t = ErrorTable {
            params: ParamSet::scalar("Re", &[277.0, 315.0]).unwrap(),
            times: TimeAxis::new(3.24, 0.04, 2).unwrap(),
            errors: Array2::from_shape_vec((2, 2), vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        };
        write_error_table(&t, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Re,t,error");
        assert!(lines[1].starts_with("2.7700000000000000e2,3.2400000000000002e0,"));
        assert!(lines[3].starts_with("3.1500000000000000e2,"));
    }

    #[test]
    fn params_csv() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("p.csv");
        std::fs::write(&p, "theta, d\n0.5, 1\n1.5, 2\n").unwrap();
        let ps = read_params_csv(&p).unwrap();
        assert_eq!(ps.names(), ["theta", "d"]);
        assert_eq!(ps.row(1).to_vec(), vec![1.5, 2.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_round_trip(seed in 0u64..10_000, latent in proptest::bool::ANY) {
            let dir = tempdir().unwrap();
            let p = dir.path().join("r.lrom");
            let s = random_set(seed, if latent { Frame::Latent } else { Frame::Eulerian });
            write_container(&s, &p).unwrap();
            let back = read_container(&p).unwrap();
            prop_assert!(back.data().iter().zip(s.data().iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(back, s);
        }
    }
}
