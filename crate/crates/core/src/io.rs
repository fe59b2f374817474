//! On-disk formats: binary field files, statistics CSV and JSON sidecars.
//!
//! A field file is a fixed little-endian header
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `SKF1` |
//! | 4 | version (`u32`) |
//! | 8 | `N` (`u64`) |
//! | 8 | `dx` |
//! | 1 | model tag |
//! | 5 x 8 | `H`, `gamma`, `Htilde`, `L`, `epsilon` |
//! | 8 | seed (`u64`) |
//! | 8 | replicate stream id (`u64`) |
//!
//! followed by `N` samples as `f64` and a SHA-256 digest of everything
//! before it.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ModelParams, Variant};
use crate::stats::{Ensemble, Histogram};
use crate::synth::FieldRealization;

pub const MAGIC: &[u8; 4] = b"SKF1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 1 + 5 * 8 + 8 + 8;
const DIGEST_LEN: usize = 32;

fn header_bytes(field: &FieldRealization) -> Vec<u8> {
    let p = &field.params;
    let mut h = Vec::with_capacity(HEADER_LEN);
    h.extend_from_slice(MAGIC);
    h.extend_from_slice(&VERSION.to_le_bytes());
    h.extend_from_slice(&(field.samples.len() as u64).to_le_bytes());
    h.extend_from_slice(&p.dx().to_le_bytes());
    h.push(field.model.tag());
    for v in [p.h, p.gamma, p.h_tilde, p.length, p.epsilon] {
        h.extend_from_slice(&v.to_le_bytes());
    }
    h.extend_from_slice(&p.seed.to_le_bytes());
    h.extend_from_slice(&field.rng_stream_id.to_le_bytes());
    h
}

/// Serializes a realization to the field-file layout.
pub fn encode_field(field: &FieldRealization) -> Vec<u8> {
    let mut out = header_bytes(field);
    out.reserve(8 * field.samples.len() + DIGEST_LEN);
    for v in &field.samples {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take<const K: usize>(&mut self) -> [u8; K] {
        let out = self.bytes[self.at..self.at + K].try_into().expect("length checked");
        self.at += K;
        out
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

/// Parses and verifies a field file image.
pub fn decode_field(bytes: &[u8]) -> Result<FieldRealization> {
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(Error::Format(format!("field file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, not a SKF1 field file".into()));
    }
    let mut c = Cursor { bytes, at: 4 };
    let version = u32::from_le_bytes(c.take());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported field file version {version}")));
    }
    let n = c.u64() as usize;
    let expected = HEADER_LEN
        .checked_add(n.checked_mul(8).ok_or_else(|| Error::Format("sample count overflows".into()))?)
        .and_then(|v| v.checked_add(DIGEST_LEN))
        .ok_or_else(|| Error::Format("sample count overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload length mismatch: header says {n} samples, file has {} bytes",
            bytes.len()
        )));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Format("checksum mismatch, field file is corrupted".into()));
    }
    let dx = c.f64();
    let [tag] = c.take::<1>();
    let model = Variant::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown model tag {tag}")))?;
    let params = ModelParams {
        h: c.f64(),
        gamma: c.f64(),
        h_tilde: c.f64(),
        length: c.f64(),
        epsilon: c.f64(),
        n,
        seed: c.u64(),
        variant: model,
    };
    let rng_stream_id = c.u64();
    params.validate()?;
    if dx != params.dx() {
        return Err(Error::Format(format!("dx {dx} disagrees with N = {n}")));
    }
    let samples = body[HEADER_LEN..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    Ok(FieldRealization {
        samples,
        params,
        rng_stream_id,
        model,
    })
}

pub fn write_field(path: &Path, field: &FieldRealization) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_field(field))?;
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<FieldRealization> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_field(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Decimal with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Shortest spelling of an order `q` for column names.
pub fn q_label(q: f64) -> String {
    format!("{q}")
}

/// Column names of the statistics CSV.
pub fn stats_columns(q_list: &[f64]) -> Vec<String> {
    let mut cols: Vec<String> = ["scale", "m1", "m2", "m3", "m4", "skewness", "flatness"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(q_list.iter().map(|q| format!("a_{}", q_label(*q))));
    let values = cols[1..].to_vec();
    cols.extend(values.iter().map(|c| format!("se_{c}")));
    cols
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

pub fn write_stats_csv(path: &Path, ensemble: &Ensemble) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(stats_columns(&ensemble.mean.q_list)).map_err(csv_error)?;
    for (row, err) in ensemble.mean.rows.iter().zip(&ensemble.errors) {
        let mut rec = vec![row.scale, row.m1, row.m2, row.m3, row.m4, row.skewness(), row.flatness()];
        rec.extend(&row.abs_moments);
        rec.extend([err.m1, err.m2, err.m3, err.m4, err.skewness, err.flatness]);
        rec.extend(&err.abs_moments);
        w.write_record(rec.into_iter().map(fmt17)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram_csv(path: &Path, hist: &Histogram) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["bin_lo", "bin_hi", "center", "count", "density"]).map_err(csv_error)?;
    let density = hist.density();
    for (i, (c, d)) in hist.counts.iter().zip(density).enumerate() {
        let (lo, hi) = (hist.edges[i], hist.edges[i + 1]);
        w.write_record([fmt17(lo), fmt17(hi), fmt17(0.5 * (lo + hi)), c.to_string(), fmt17(d)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Generic numeric table with a header row.
pub fn write_table_csv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(columns).map_err(csv_error)?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt17(*v))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// SHA-256 of a file, as lowercase hex.
pub fn file_digest(path: &Path) -> Result<String> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
