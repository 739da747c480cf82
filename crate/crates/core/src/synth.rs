//! Ground-truth motion and sensor synthesis for experiments.

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::Waypoint;
use crate::error::{Error, Result};
use crate::floorplan::{FloorPlan, Landmark, LandmarkKind};
use crate::geometry::{unit, Point, Rect, Segment, Vec2};
use crate::heading::ImuSample;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    Line { a: Point, dir: Vec2, len: f64 },
    /// `start` is the polar angle of the first point about `center`; `sweep`
    /// is signed (positive = counter-clockwise).
    Arc { center: Point, radius: f64, start: f64, sweep: f64 },
}

impl Piece {
    fn len(&self) -> f64 {
        match *self {
            Piece::Line { len, .. } => len,
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    fn point(&self, u: f64) -> Point {
        match *self {
            Piece::Line { a, dir, .. } => a + dir * u,
            Piece::Arc { center, radius, start, sweep } => center + unit(start + sweep.signum() * u / radius) * radius,
        }
    }

    fn heading(&self, u: f64) -> f64 {
        match *self {
            Piece::Line { dir, .. } => dir.y.atan2(dir.x),
            Piece::Arc { radius, start, sweep, .. } => {
                let s = sweep.signum();
                start + s * u / radius + s * std::f64::consts::FRAC_PI_2
            }
        }
    }

    fn curvature(&self) -> f64 {
        match *self {
            Piece::Line { .. } => 0.0,
            Piece::Arc { radius, sweep, .. } => sweep.signum() / radius,
        }
    }
}

/// Arc-length parametrised planar path of straight pieces and circular
/// fillets. Closed paths wrap `s` modulo the length; open ones clamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pieces: Vec<Piece>,
    starts: Vec<f64>,
    length: f64,
    closed: bool,
}

impl Path {
    fn from_pieces(pieces: Vec<Piece>, closed: bool) -> Self {
        let pieces: Vec<Piece> = pieces.into_iter().filter(|p| p.len() > 1e-12).collect();
        let mut starts = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            starts.push(acc);
            acc += p.len();
        }
        Path { pieces, starts, length: acc, closed }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    fn locate(&self, s: f64) -> (&Piece, f64) {
        let s = if self.closed { s.rem_euclid(self.length) } else { s.clamp(0.0, self.length) };
        let i = self.starts.partition_point(|&x| x <= s).saturating_sub(1);
        let p = &self.pieces[i];
        (p, (s - self.starts[i]).min(p.len()))
    }

    pub fn point_at(&self, s: f64) -> Point {
        let (p, u) = self.locate(s);
        p.point(u)
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let (p, u) = self.locate(s);
        p.heading(u)
    }

    /// Signed curvature (1/m); zero past the end of an open path.
    pub fn curvature_at(&self, s: f64) -> f64 {
        if !self.closed && (s < 0.0 || s > self.length) {
            return 0.0;
        }
        self.locate(s).0.curvature()
    }
}

/// Polyline with each interior corner replaced by a circular arc of
/// `radius` tangent to both legs.
pub fn filleted_polyline(points: &[Point], radius: f64) -> Result<Path> {
    Ok(Path::from_pieces(fillet_pieces(points, radius)?, false))
}

/// Closed polygon with filleted corners, starting at the midpoint of the
/// first edge and running through the vertices in order.
pub fn filleted_loop(vertices: &[Point], radius: f64) -> Result<Path> {
    if vertices.len() < 3 {
        return Err(Error::param("a loop needs at least three vertices"));
    }
    let mid = nalgebra::center(&vertices[0], &vertices[1]);
    let mut pts = vec![mid];
    pts.extend_from_slice(&vertices[1..]);
    pts.push(vertices[0]);
    pts.push(mid);
    Ok(Path::from_pieces(fillet_pieces(&pts, radius)?, true))
}

fn fillet_pieces(points: &[Point], radius: f64) -> Result<Vec<Piece>> {
    if points.len() < 2 {
        return Err(Error::param("a path needs at least two points"));
    }
    if !(radius >= 0.0) {
        return Err(Error::param("fillet radius must be non-negative"));
    }
    let mut pieces = Vec::new();
    let mut cursor = points[0];
    for i in 1..points.len() {
        let v = points[i];
        let din = (v - points[i - 1]).normalize();
        if i + 1 == points.len() {
            pieces.push(Piece::Line { a: cursor, dir: din, len: (v - cursor).norm() });
            break;
        }
        let dout = (points[i + 1] - v).normalize();
        let turn = din.x * dout.y - din.y * dout.x;
        let angle = turn.atan2(din.dot(&dout));
        let offset = radius * (angle.abs() / 2.0).tan();
        let t1 = v - din * offset;
        let t2 = v + dout * offset;
        if (t1 - cursor).dot(&din) < -1e-9 || offset > (points[i + 1] - v).norm() + 1e-9 {
            return Err(Error::param(format!("fillet radius too large at vertex {i}")));
        }
        pieces.push(Piece::Line { a: cursor, dir: din, len: (t1 - cursor).norm() });
        if angle.abs() > 1e-12 && radius > 0.0 {
            let left = Vec2::new(-din.y, din.x) * angle.signum();
            let center = t1 + left * radius;
            let r0 = t1 - center;
            pieces.push(Piece::Arc { center, radius, start: r0.y.atan2(r0.x), sweep: angle });
        }
        cursor = t2;
    }
    Ok(pieces)
}

/// Arc length sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Motion {
    pub dt: f64,
    pub t0: f64,
    pub s: Vec<f64>,
}

impl Motion {
    /// Integrates `ds/dt = speed(t, s)` (midpoint rule) from `s0` until `s`
    /// reaches `s_end`, then holds still for `dwell` seconds.
    pub fn simulate(speed: impl Fn(f64, f64) -> f64, s0: f64, s_end: f64, dt: f64, dwell: f64) -> Result<Motion> {
        if !(dt > 0.0) {
            return Err(Error::param("motion step must be positive"));
        }
        let mut s = vec![s0];
        let mut t = 0.0;
        let mut cur = s0;
        while cur < s_end {
            let k1 = speed(t, cur);
            let k2 = speed(t + 0.5 * dt, cur + 0.5 * dt * k1);
            if !(k2 > 0.0) && !(k1 > 0.0) {
                return Err(Error::param("speed profile stalls before the end of the path"));
            }
            cur = (cur + dt * k2).min(s_end);
            t += dt;
            s.push(cur);
        }
        let hold = (dwell / dt).round() as usize;
        s.extend(std::iter::repeat_n(s_end, hold));
        Ok(Motion { dt, t0: 0.0, s })
    }

    /// Prepends `secs` of standing still.
    pub fn with_lead_in(mut self, secs: f64) -> Motion {
        let n = (secs / self.dt).round() as usize;
        let first = self.s[0];
        let mut s = vec![first; n];
        s.append(&mut self.s);
        self.s = s;
        self
    }

    pub fn duration(&self) -> f64 {
        (self.s.len() - 1) as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.t0 + self.duration()
    }

    pub fn s_at(&self, t: f64) -> f64 {
        let x = ((t - self.t0) / self.dt).clamp(0.0, (self.s.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.s.len() - 2);
        let u = x - i as f64;
        self.s[i] * (1.0 - u) + self.s[i + 1] * u
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        let x = ((t - self.t0) / self.dt).clamp(0.0, (self.s.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.s.len() - 2);
        (self.s[i + 1] - self.s[i]) / self.dt
    }

    /// First time at which the arc length reaches `s`.
    pub fn time_at(&self, s: f64) -> Option<f64> {
        let i = self.s.iter().position(|&x| x >= s)?;
        if i == 0 {
            return Some(self.t0);
        }
        let (a, b) = (self.s[i - 1], self.s[i]);
        let u = if b > a { (s - a) / (b - a) } else { 1.0 };
        Some(self.t0 + (i as f64 - 1.0 + u) * self.dt)
    }
}

/// Receiver waypoints along `path` at `period` spacing.
pub fn waypoints(path: &Path, motion: &Motion, period: f64) -> Vec<Waypoint> {
    crate::channel::sample_times(motion.t0, motion.end_time(), period)
        .into_iter()
        .map(|t| Waypoint::new(path.point_at(motion.s_at(t)), t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImuSpec {
    pub rate_hz: f64,
    /// Device roll and pitch relative to level, radians.
    pub roll: f64,
    pub pitch: f64,
    /// Gyro bias about the vertical, rad/s.
    pub yaw_bias: f64,
    pub gyro_noise: f64,
    pub accel_noise: f64,
    /// Add the horizontal centripetal acceleration of curved walking.
    pub centripetal: bool,
}

impl Default for ImuSpec {
    fn default() -> Self {
        ImuSpec {
            rate_hz: 100.0,
            roll: 0.0,
            pitch: 0.0,
            yaw_bias: 0.0,
            gyro_noise: 0.0,
            accel_noise: 0.0,
            centripetal: true,
        }
    }
}

/// IMU stream of a device carried along `path` with a fixed tilt and the
/// walking direction as yaw.
pub fn synthesize_imu<R: Rng>(path: &Path, motion: &Motion, spec: &ImuSpec, rng: &mut R) -> Result<Vec<ImuSample>> {
    if !(spec.rate_hz > 0.0) {
        return Err(Error::param("IMU rate must be positive"));
    }
    let gyro_n = Normal::new(0.0, spec.gyro_noise).map_err(|e| Error::param(e.to_string()))?;
    let accel_n = Normal::new(0.0, spec.accel_noise).map_err(|e| Error::param(e.to_string()))?;
    let tilt = Rotation3::from_euler_angles(spec.roll, spec.pitch, 0.0);
    let to_device = tilt.inverse();
    let up = Vector3::z();
    let period = 1.0 / spec.rate_hz;
    let times = crate::channel::sample_times(motion.t0, motion.end_time(), period);
    let mut out = Vec::with_capacity(times.len());
    for t in times {
        let s = motion.s_at(t);
        let v = motion.speed_at(t);
        let kappa = path.curvature_at(s);
        let yaw_rate = kappa * v;
        let psi = path.heading_at(s);
        let mut accel_world = up * GRAVITY;
        if spec.centripetal {
            let n = unit(psi + std::f64::consts::FRAC_PI_2) * (v * v * kappa);
            accel_world += Vector3::new(n.x, n.y, 0.0);
        }
        // the level frame is yawed by psi; tilt is applied on top of it
        let yaw = Rotation3::from_axis_angle(&Vector3::z_axis(), psi);
        let gyro = to_device * (up * (yaw_rate + spec.yaw_bias));
        let accel = to_device * (yaw.inverse() * accel_world);
        let noise = |d: &Normal<f64>, rng: &mut R| Vector3::new(d.sample(rng), d.sample(rng), d.sample(rng));
        out.push(ImuSample {
            timestamp: t,
            gyro: gyro + noise(&gyro_n, rng),
            accel: accel + noise(&accel_n, rng),
        });
    }
    Ok(out)
}

/// Synthetic office: a rectangular corridor loop 2 m wide with a cross
/// corridor, inside a 36 m × 19 m footprint.
pub fn office_plan() -> FloorPlan {
    let w = |x1: f64, y1: f64, x2: f64, y2: f64| Segment::new(Point::new(x1, y1), Point::new(x2, y2));
    let walls = vec![
        w(-1.0, -1.0, 33.0, -1.0),
        w(-1.0, -1.0, -1.0, 1.0),
        w(-1.0, 1.0, 12.0, 1.0),
        w(14.0, 1.0, 31.0, 1.0),
        w(12.0, 1.0, 12.0, 16.0),
        w(14.0, 1.0, 14.0, 14.0),
        w(12.0, 16.0, 33.0, 16.0),
        w(14.0, 14.0, 31.0, 14.0),
        w(33.0, -1.0, 33.0, 16.0),
        w(31.0, 1.0, 31.0, 14.0),
    ];
    let lm = |x: f64, y: f64, kind| Landmark { position: Point::new(x, y), kind };
    let landmarks = vec![
        lm(13.0, 0.0, LandmarkKind::Corner),
        lm(13.0, 15.0, LandmarkKind::Corner),
        lm(32.0, 15.0, LandmarkKind::Corner),
        lm(32.0, 0.0, LandmarkKind::Corner),
        lm(-0.5, 0.0, LandmarkKind::CorridorEnd),
        lm(6.0, 1.0, LandmarkKind::Door),
        lm(22.0, 1.0, LandmarkKind::Door),
        lm(22.0, 14.0, LandmarkKind::Door),
        lm(12.0, 7.5, LandmarkKind::Door),
        lm(31.0, 7.5, LandmarkKind::Door),
    ];
    FloorPlan::new(walls, landmarks, Rect::new(-2.0, -2.0, 34.0, 17.0)).expect("office plan is valid")
}

/// Corridor-centre route through the office starting at the west end.
pub fn office_route() -> Vec<Point> {
    vec![
        Point::new(0.0, 0.0),
        Point::new(13.0, 0.0),
        Point::new(13.0, 15.0),
        Point::new(32.0, 15.0),
        Point::new(32.0, 0.0),
        Point::new(20.0, 0.0),
    ]
}
