//! CIR and IMU trace files.
//!
//! Binary layout (little endian): an 8-byte magic naming the record kind,
//! then back-to-back records.
//!
//! * CIR: `f64 timestamp, u32 n_taps, u8 has_pose, [f64 x, f64 y], n_taps × (f64 re, f64 im)`
//! * IMU: `f64 timestamp, 3 × f64 gyro, 3 × f64 accel`
//!
//! JSONL holds one record per line: CIRs as `{"taps":[[re,im],..],"timestamp":t,"pose":[x,y]}`,
//! IMU samples as `{"t":..,"wx":..,"wy":..,"wz":..,"ax":..,"ay":..,"az":..}`.
//! An empty file is an empty trace in either encoding.

use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Cir;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::heading::{read_imu_csv, read_imu_jsonl, write_imu_csv, write_imu_jsonl, ImuSample};

pub const CIR_MAGIC: &[u8; 8] = b"TRCIR\0\0\x01";
pub const IMU_MAGIC: &[u8; 8] = b"TRIMU\0\0\x01";

#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    Cir(Vec<Cir>),
    Imu(Vec<ImuSample>),
}

impl Trace {
    pub fn len(&self) -> usize {
        match self {
            Trace::Cir(v) => v.len(),
            Trace::Imu(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Binary,
    Jsonl,
    /// IMU only.
    Csv,
}

impl std::str::FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" => Ok(TraceFormat::Binary),
            "jsonl" => Ok(TraceFormat::Jsonl),
            "csv" => Ok(TraceFormat::Csv),
            other => Err(Error::config(format!("unknown trace format `{other}`"))),
        }
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    record: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.buf.len() {
            return Err(Error::Record { index: self.record, reason: "truncated record".into() });
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(out)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn decode_cirs(body: &[u8]) -> Result<Vec<Cir>> {
    let mut c = Cursor { buf: body, pos: 0, record: 0 };
    let mut out = Vec::new();
    while !c.done() {
        let timestamp = c.f64()?;
        let n = u32::from_le_bytes(c.take()?) as usize;
        let pose = match c.take::<1>()?[0] {
            0 => None,
            1 => Some(Point::new(c.f64()?, c.f64()?)),
            flag => return Err(Error::Record { index: c.record, reason: format!("bad pose flag {flag}") }),
        };
        if body.len() - c.pos < n * 16 {
            return Err(Error::Record { index: c.record, reason: "truncated record".into() });
        }
        let mut taps = Vec::with_capacity(n);
        for _ in 0..n {
            taps.push(Complex64::new(c.f64()?, c.f64()?));
        }
        out.push(Cir { taps, timestamp, pose });
        c.record += 1;
    }
    Ok(out)
}

fn decode_imu(body: &[u8]) -> Result<Vec<ImuSample>> {
    let mut c = Cursor { buf: body, pos: 0, record: 0 };
    let mut out = Vec::new();
    while !c.done() {
        let t = c.f64()?;
        let g = [c.f64()?, c.f64()?, c.f64()?];
        let a = [c.f64()?, c.f64()?, c.f64()?];
        out.push(ImuSample::new(t, g, a));
        c.record += 1;
    }
    Ok(out)
}

pub fn encode_binary(trace: &Trace) -> Vec<u8> {
    let mut out = Vec::new();
    if trace.is_empty() {
        return out;
    }
    match trace {
        Trace::Cir(cirs) => {
            out.extend_from_slice(CIR_MAGIC);
            for cir in cirs {
                out.extend_from_slice(&cir.timestamp.to_le_bytes());
                out.extend_from_slice(&(cir.taps.len() as u32).to_le_bytes());
                match cir.pose {
                    Some(p) => {
                        out.push(1);
                        out.extend_from_slice(&p.x.to_le_bytes());
                        out.extend_from_slice(&p.y.to_le_bytes());
                    }
                    None => out.push(0),
                }
                for h in &cir.taps {
                    out.extend_from_slice(&h.re.to_le_bytes());
                    out.extend_from_slice(&h.im.to_le_bytes());
                }
            }
        }
        Trace::Imu(samples) => {
            out.extend_from_slice(IMU_MAGIC);
            for s in samples {
                out.extend_from_slice(&s.timestamp.to_le_bytes());
                for v in s.gyro.iter().chain(s.accel.iter()) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<Trace> {
    if bytes.is_empty() {
        return Ok(Trace::Cir(Vec::new()));
    }
    if bytes.len() < 8 {
        return Err(Error::Record { index: 0, reason: "truncated header".into() });
    }
    let (magic, body) = bytes.split_at(8);
    if magic == CIR_MAGIC {
        Ok(Trace::Cir(decode_cirs(body)?))
    } else if magic == IMU_MAGIC {
        Ok(Trace::Imu(decode_imu(body)?))
    } else {
        Err(Error::Record { index: 0, reason: "unrecognised header".into() })
    }
}

fn read_cir_jsonl<R: BufRead>(input: R) -> Result<Vec<Cir>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cir: Cir = serde_json::from_str(&line).map_err(|e| Error::Record { index: out.len(), reason: format!("line {}: {e}", i + 1) })?;
        out.push(cir);
    }
    Ok(out)
}

fn write_cir_jsonl<W: Write>(cirs: &[Cir], mut out: W) -> Result<()> {
    for c in cirs {
        serde_json::to_writer(&mut out, c)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses JSONL, choosing the record kind from the first non-empty line.
pub fn decode_jsonl(bytes: &[u8]) -> Result<Trace> {
    let first = bytes
        .split(|b| *b == b'\n')
        .find(|l| !l.iter().all(u8::is_ascii_whitespace));
    let Some(first) = first else {
        return Ok(Trace::Cir(Vec::new()));
    };
    let probe: serde_json::Value =
        serde_json::from_slice(first).map_err(|e| Error::Record { index: 0, reason: e.to_string() })?;
    if probe.get("taps").is_some() {
        Ok(Trace::Cir(read_cir_jsonl(bytes)?))
    } else {
        Ok(Trace::Imu(read_imu_jsonl(bytes)?))
    }
}

/// Binary when the input starts with a known magic, JSONL otherwise.
pub fn decode_any(bytes: &[u8]) -> Result<Trace> {
    if bytes.starts_with(CIR_MAGIC) || bytes.starts_with(IMU_MAGIC) {
        decode_binary(bytes)
    } else if bytes.starts_with(b"t,") {
        Ok(Trace::Imu(read_imu_csv(bytes)?))
    } else {
        decode_jsonl(bytes)
    }
}

pub fn encode(trace: &Trace, format: TraceFormat) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match (format, trace) {
        (TraceFormat::Binary, _) => out = encode_binary(trace),
        (TraceFormat::Jsonl, Trace::Cir(c)) => write_cir_jsonl(c, &mut out)?,
        (TraceFormat::Jsonl, Trace::Imu(s)) => write_imu_jsonl(s, &mut out)?,
        (TraceFormat::Csv, Trace::Imu(s)) => write_imu_csv(s, &mut out)?,
        (TraceFormat::Csv, Trace::Cir(c)) if c.is_empty() => {}
        (TraceFormat::Csv, Trace::Cir(_)) => return Err(Error::config("CSV holds IMU traces only")),
    }
    Ok(out)
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    decode_any(&std::fs::read(path)?)
}

pub fn write_trace(trace: &Trace, format: TraceFormat, path: &Path) -> Result<()> {
    std::fs::write(path, encode(trace, format)?)?;
    Ok(())
}

/// Re-encodes `input` into `output`; returns the record count.
pub fn convert_traces(input: &Path, output: &Path, format: TraceFormat) -> Result<usize> {
    let trace = read_trace(input)?;
    write_trace(&trace, format, output)?;
    Ok(trace.len())
}
