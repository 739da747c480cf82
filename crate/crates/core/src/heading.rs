//! Heading change from gyroscope and gravity.
//!
//! The device may be tilted, so its z-axis gyro reading is not the turn rate
//! in the horizontal plane. Projecting the angular-velocity vector onto the
//! gravity direction (from a low-passed accelerometer) gives the horizontal
//! turn rate regardless of tilt.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;

/// Mean accelerations below this norm (m/s²) cannot define "up".
const MIN_GRAVITY_NORM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub timestamp: f64,
    /// rad/s, device frame.
    pub gyro: Vector3<f64>,
    /// m/s², device frame (specific force: +g along "up" at rest).
    pub accel: Vector3<f64>,
}

impl ImuSample {
    pub fn new(timestamp: f64, gyro: [f64; 3], accel: [f64; 3]) -> Self {
        ImuSample { timestamp, gyro: Vector3::from(gyro), accel: Vector3::from(accel) }
    }

    fn is_finite(&self) -> bool {
        self.timestamp.is_finite()
            && self.gyro.iter().all(|v| v.is_finite())
            && self.accel.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadingDelta {
    /// End of the producing interval.
    pub timestamp: f64,
    /// Counter-clockwise turn about "up", radians.
    pub delta_theta: f64,
}

/// Normalised mean of the accelerometer vectors in `window`.
pub fn gravity_estimate(window: &[ImuSample]) -> Result<Unit<Vector3<f64>>> {
    if window.is_empty() {
        return Err(Error::param("gravity window is empty"));
    }
    let sum: Vector3<f64> = window.iter().map(|s| s.accel).sum();
    gravity_from_sum(&sum, window.len())
}

fn gravity_from_sum(sum: &Vector3<f64>, n: usize) -> Result<Unit<Vector3<f64>>> {
    let mean = sum / n as f64;
    let norm = mean.norm();
    if !(norm >= MIN_GRAVITY_NORM) {
        return Err(Error::DegenerateGravity(norm));
    }
    Ok(Unit::new_unchecked(mean / norm))
}

/// `Δθ = (ω · ĝ) · dt`.
pub fn heading_delta(sample: &ImuSample, gravity: &Vector3<f64>, dt: f64) -> Result<HeadingDelta> {
    if !(dt > 0.0) {
        return Err(Error::param(format!("heading interval must be positive, got {dt}")));
    }
    if !((gravity.norm() - 1.0).abs() < 1e-9) {
        return Err(Error::param("gravity direction must be a unit vector"));
    }
    Ok(HeadingDelta { timestamp: sample.timestamp + dt, delta_theta: sample.gyro.dot(gravity) * dt })
}

/// Heading deltas over an IMU stream. Interval `[t_{i−1}, t_i]` uses the
/// angular velocity at `t_{i−1}` and the gravity direction averaged over the
/// `gravity_window` seconds ending at `t_{i−1}`.
pub fn heading_deltas(imu: &[ImuSample], gravity_window: f64) -> Result<Vec<HeadingDelta>> {
    if let Some(i) = imu.iter().position(|s| !s.is_finite()) {
        return Err(Error::Record { index: i, reason: "non-finite IMU sample".into() });
    }
    if imu.windows(2).any(|w| !(w[1].timestamp > w[0].timestamp)) {
        return Err(Error::param("IMU timestamps must increase"));
    }
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut sum = Vector3::zeros();
    let mut out = Vec::with_capacity(imu.len().saturating_sub(1));
    for i in 1..imu.len() {
        let prev = &imu[i - 1];
        window.push_back(i - 1);
        sum += prev.accel;
        while let Some(&j) = window.front() {
            if imu[j].timestamp < prev.timestamp - gravity_window && window.len() > 1 {
                sum -= imu[j].accel;
                window.pop_front();
            } else {
                break;
            }
        }
        let g = gravity_from_sum(&sum, window.len())?;
        out.push(heading_delta(prev, &g, imu[i].timestamp - prev.timestamp)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadingPoint {
    pub timestamp: f64,
    /// Wrapped to `[−π, π)`.
    pub theta: f64,
    /// Running sum without wrapping.
    pub unwrapped: f64,
}

/// Running heading from an initial `(timestamp, theta)`; the first point is
/// the initial heading itself.
pub fn accumulate_heading(initial: (f64, f64), deltas: &[HeadingDelta]) -> Result<Vec<HeadingPoint>> {
    if deltas.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::param("heading deltas must be time-ordered"));
    }
    let mut unwrapped = initial.1;
    let mut out = Vec::with_capacity(deltas.len() + 1);
    out.push(HeadingPoint { timestamp: initial.0, theta: wrap_angle(unwrapped), unwrapped });
    for d in deltas {
        unwrapped += d.delta_theta;
        out.push(HeadingPoint { timestamp: d.timestamp, theta: wrap_angle(unwrapped), unwrapped });
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct ImuRow {
    t: f64,
    wx: f64,
    wy: f64,
    wz: f64,
    ax: f64,
    ay: f64,
    az: f64,
}

impl From<&ImuSample> for ImuRow {
    fn from(s: &ImuSample) -> Self {
        ImuRow {
            t: s.timestamp,
            wx: s.gyro.x,
            wy: s.gyro.y,
            wz: s.gyro.z,
            ax: s.accel.x,
            ay: s.accel.y,
            az: s.accel.z,
        }
    }
}

impl From<ImuRow> for ImuSample {
    fn from(r: ImuRow) -> Self {
        ImuSample::new(r.t, [r.wx, r.wy, r.wz], [r.ax, r.ay, r.az])
    }
}

/// CSV with header `t,wx,wy,wz,ax,ay,az`, SI units.
pub fn read_imu_csv<R: std::io::Read>(input: R) -> Result<Vec<ImuSample>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize::<ImuRow>()
        .enumerate()
        .map(|(i, r)| {
            r.map(ImuSample::from)
                .map_err(|e| Error::Record { index: i, reason: e.to_string() })
        })
        .collect()
}

pub fn write_imu_csv<W: Write>(samples: &[ImuSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(ImuRow::from(s))?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line with the same fields as the CSV form.
pub fn read_imu_jsonl<R: BufRead>(input: R) -> Result<Vec<ImuSample>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ImuRow =
            serde_json::from_str(&line).map_err(|e| Error::Record { index: i, reason: e.to_string() })?;
        out.push(row.into());
    }
    Ok(out)
}

pub fn write_imu_jsonl<W: Write>(samples: &[ImuSample], mut out: W) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, &ImuRow::from(s))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
