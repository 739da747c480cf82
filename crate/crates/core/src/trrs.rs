//! Time-reversal resonating strength (TRRS).
//!
//! `η(h1, h2) = |Σ_l h1(l)·h2*(l)|² / (Σ|h1|² · Σ|h2|²)`: the normalised
//! energy received at the focal instant when the time-reversed waveform of one
//! channel is sent through the other.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel;
use crate::channel::Cir;
use crate::error::{Error, Result};

/// Values this far above 1 are reported before clamping.
const CLAMP_REPORT_TOL: f64 = 1e-12;

/// A resonating strength in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrrsValue(f64);

impl TrrsValue {
    /// Clamps rounding spill above 1 (and below 0).
    pub fn new(value: f64) -> Self {
        if value > 1.0 + CLAMP_REPORT_TOL {
            log::debug!("TRRS {value} exceeds 1 by more than {CLAMP_REPORT_TOL:e}; clamped");
        }
        TrrsValue(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<TrrsValue> for f64 {
    fn from(v: TrrsValue) -> f64 {
        v.0
    }
}

// a · conj(b), spelled out so that swapping the operands yields the exact
// conjugate.
#[inline]
fn mul_conj(a: Complex64, b: Complex64) -> Complex64 {
    Complex64::new(a.re * b.re + a.im * b.im, a.im * b.re - a.re * b.im)
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + mul_conj(*x, *y))
}

fn check_pair(h1: &Cir, h2: &Cir) -> Result<(f64, f64)> {
    if h1.len() != h2.len() {
        return Err(Error::param(format!(
            "tap count mismatch: {} vs {}",
            h1.len(),
            h2.len()
        )));
    }
    let (e1, e2) = (h1.energy(), h2.energy());
    if !(e1 > 0.0 && e2 > 0.0) || !e1.is_finite() || !e2.is_finite() {
        return Err(Error::Degenerate(format!("CIR energy must be positive (got {e1}, {e2})")));
    }
    Ok((e1, e2))
}

/// TRRS between two CIRs; symmetric in its arguments.
pub fn trrs(h1: &Cir, h2: &Cir) -> Result<TrrsValue> {
    let (e1, e2) = check_pair(h1, h2)?;
    let num = inner(&h1.taps, &h2.taps).norm_sqr();
    Ok(TrrsValue::new(num / (e1 * e2)))
}

/// `J0²(2πd/λ)`, the isotropic-scattering approximation of TRRS at distance `d`.
pub fn bessel_reference(distance: f64, wavelength: f64) -> Result<TrrsValue> {
    if !(distance >= 0.0) {
        return Err(Error::param("distance must be non-negative"));
    }
    if !(wavelength > 0.0) {
        return Err(Error::param("wavelength must be positive"));
    }
    Ok(TrrsValue::new(bessel::focal_spot_model(distance, wavelength)))
}

/// Normalised received energy `|s(k)|² / (E0·E)` for every lag
/// `k ∈ [−(L−1), L−1]` when the TR waveform of `reference` is sent and
/// `probe` is the channel; at `k = 0` this is the TRRS.
pub fn focusing_profile(reference: &Cir, probe: &Cir) -> Result<Vec<(i64, f64)>> {
    let (e0, e1) = check_pair(reference, probe)?;
    let n = reference.len() as i64;
    let mut out = Vec::with_capacity((2 * n - 1).max(0) as usize);
    for k in -(n - 1)..n {
        let mut s = Complex64::new(0.0, 0.0);
        for l in 0..n {
            let m = l - k;
            if (0..n).contains(&m) {
                s += mul_conj(probe.taps[l as usize], reference.taps[m as usize]);
            }
        }
        out.push((k, s.norm_sqr() / (e0 * e1)));
    }
    Ok(out)
}

/// TRRS of a stream of CIRs against one fixed reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrrsSeries {
    pub reference_timestamp: f64,
    pub entries: Vec<(f64, TrrsValue)>,
}

pub fn trrs_series(reference: &Cir, stream: &[Cir]) -> Result<TrrsSeries> {
    if let Some(w) = stream.windows(2).find(|w| !(w[1].timestamp > w[0].timestamp)) {
        return Err(Error::param(format!(
            "stream timestamps must increase ({} then {})",
            w[0].timestamp, w[1].timestamp
        )));
    }
    if let Some(first) = stream.first() {
        if first.timestamp < reference.timestamp {
            return Err(Error::param("stream starts before the reference"));
        }
    }
    let entries = stream
        .iter()
        .map(|c| Ok((c.timestamp, trrs(reference, c)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrrsSeries { reference_timestamp: reference.timestamp, entries })
}

/// Unit-energy copy of a CIR's taps, so TRRS reduces to `|⟨a, b⟩|²`.
#[derive(Debug, Clone)]
pub struct NormalizedCir {
    pub timestamp: f64,
    taps: Vec<Complex64>,
}

impl NormalizedCir {
    pub fn new(cir: &Cir) -> Option<Self> {
        let e = cir.energy();
        if !(e > 0.0) || !e.is_finite() {
            return None;
        }
        let s = 1.0 / e.sqrt();
        Some(NormalizedCir { timestamp: cir.timestamp, taps: cir.taps.iter().map(|h| h * s).collect() })
    }

    pub fn trrs(&self, other: &NormalizedCir) -> TrrsValue {
        TrrsValue::new(inner(&self.taps, &other.taps).norm_sqr())
    }
}

/// One column of the sliding matrix: TRRS between the CIR at `timestamp` and
/// the CIRs `j·T` earlier. `None` marks a lag whose earlier CIR is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct TrrsColumn {
    pub timestamp: f64,
    pub entries: Vec<Option<TrrsValue>>,
}

impl TrrsColumn {
    /// Present `(lag, value)` pairs, lags ascending.
    pub fn profile(&self, lags: &[f64]) -> Vec<(f64, f64)> {
        lags.iter()
            .zip(&self.entries)
            .filter_map(|(&lag, v)| v.map(|v| (lag, v.value())))
            .collect()
    }
}

/// TRRS over `(t, Δt)` for `Δt ∈ {T, 2T, …} ≤ max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrrsMatrix {
    pub sample_period: f64,
    /// `lags[j] = (j + 1)·T`.
    pub lags: Vec<f64>,
    pub columns: Vec<TrrsColumn>,
}

/// Smallest positive spacing between consecutive timestamps.
pub fn nominal_sample_period(stream: &[Cir]) -> Option<f64> {
    stream
        .windows(2)
        .map(|w| w[1].timestamp - w[0].timestamp)
        .filter(|d| *d > 0.0)
        .min_by(|a, b| a.total_cmp(b))
}

/// Builds the sliding TRRS matrix. Sample slots are `round((t − t0)/T)`; a
/// lag whose earlier slot holds no CIR (lost packet) or a zero-energy CIR
/// stays absent.
pub fn trrs_sliding_matrix(stream: &[Cir], max_lag: f64, sample_period: f64) -> Result<TrrsMatrix> {
    if !(max_lag > 0.0) {
        return Err(Error::param("max lag must be positive"));
    }
    if !(sample_period > 0.0) {
        return Err(Error::param("sample period must be positive"));
    }
    if stream.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::param("stream must be sorted by timestamp"));
    }
    let n_lags = (max_lag / sample_period + 1e-9).floor() as usize;
    let lags: Vec<f64> = (1..=n_lags).map(|j| j as f64 * sample_period).collect();
    let Some(first) = stream.first() else {
        return Ok(TrrsMatrix { sample_period, lags, columns: Vec::new() });
    };
    let t0 = first.timestamp;
    let slot_of = |t: f64| ((t - t0) / sample_period).round() as usize;
    let last_slot = slot_of(stream[stream.len() - 1].timestamp);
    let mut slots: Vec<Option<NormalizedCir>> = vec![None; last_slot + 1];
    let mut zero_energy = 0;
    for c in stream {
        match NormalizedCir::new(c) {
            Some(n) => slots[slot_of(c.timestamp)] = Some(n),
            None => zero_energy += 1,
        }
    }
    if zero_energy > 0 {
        log::warn!("{zero_energy} zero-energy CIRs treated as missing");
    }
    let columns = stream
        .iter()
        .map(|c| {
            let s = slot_of(c.timestamp);
            let entries = (1..=n_lags)
                .map(|j| match (&slots[s], s.checked_sub(j).and_then(|p| slots[p].as_ref())) {
                    (Some(now), Some(earlier)) => Some(earlier.trrs(now)),
                    _ => None,
                })
                .collect();
            TrrsColumn { timestamp: c.timestamp, entries }
        })
        .collect();
    Ok(TrrsMatrix { sample_period, lags, columns })
}

/// `timestamp,trrs` rows.
pub fn write_series_csv<W: Write>(series: &TrrsSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "trrs"])?;
    for (t, v) in &series.entries {
        w.write_record([t.to_string(), v.value().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format `timestamp,lag,trrs`, one column of the matrix after another;
/// absent entries are omitted.
pub fn write_matrix_csv<W: Write>(matrix: &TrrsMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "lag", "trrs"])?;
    for col in &matrix.columns {
        for (lag, v) in matrix.lags.iter().zip(&col.entries) {
            if let Some(v) = v {
                w.write_record([col.timestamp.to_string(), lag.to_string(), v.value().to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
