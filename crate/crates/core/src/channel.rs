//! Ray-traced multipath channel synthesis.
//!
//! Every scatterer contributes one single-bounce multipath component (MPC)
//! TX → scatterer → RX, optionally a second bounce between scatterer pairs,
//! plus the direct TX → RX path. Components are binned into taps by their
//! propagation delay `r / c` with sampling period `T = 1 / B`; tap `l` collects
//! delays in `[lT − T/2, lT + T/2)` and sums the complex contributions.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Guard taps appended after the latest expected arrival.
const TAP_GUARD: usize = 4;

/// One multipath component seen at a receiver position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mpc {
    /// Total travelled distance in metres.
    pub travel_distance: f64,
    /// Direction of arrival at the receiver (towards the last emitter), in `[0, 2π)`.
    pub arrival_angle: f64,
    /// Amplitude gain, non-negative.
    pub gain: f64,
    /// Phase change from reflections, in `[0, 2π)`.
    pub reflection_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShaper {
    /// `q(t) = 1` on `[−T/2, T/2)`.
    #[default]
    Rectangular,
}

impl PulseShaper {
    fn eval(self, dt: f64, period: f64) -> f64 {
        match self {
            PulseShaper::Rectangular => {
                if dt >= -period / 2.0 && dt < period / 2.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Scatterer field, link geometry and radio parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scatterers: Vec<Point>,
    pub reflection_coeffs: Vec<f64>,
    /// Per-scatterer reflection phase, radians; empty means all zero.
    #[serde(default)]
    pub reflection_phases: Vec<f64>,
    pub tx_pos: Point,
    pub rx_focal_pos: Point,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub pulse_shaper: PulseShaper,
    pub tap_count: usize,
    /// Delay bin held by `taps[0]`; earlier arrivals are dropped.
    #[serde(default)]
    pub first_tap: usize,
    /// Include the TX → RX line-of-sight component.
    #[serde(default = "default_true")]
    pub direct_path: bool,
    /// Reflection depth: 1 (single bounce) or 2 (adds scatterer-pair paths).
    #[serde(default = "default_depth")]
    pub bounce_depth: u8,
}

fn default_true() -> bool {
    true
}

fn default_depth() -> u8 {
    1
}

/// How scatterers fill [`SceneParams::region`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionShape {
    #[default]
    Rectangle,
    /// The ellipse inscribed in the rectangle.
    Ellipse,
}

/// Inputs to [`generate_scene`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub seed: u64,
    pub n_scatterers: usize,
    /// Region holding the scatterers (and every receiver position of interest).
    pub region: Rect,
    /// Focal (reference) receiver position.
    pub rx_focal_pos: Point,
    pub tx_pos: Point,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub direct_path: bool,
    #[serde(default)]
    pub shape: RegionShape,
}

impl SceneParams {
    /// Square region of side `region_side` centred on the focal spot at the
    /// origin, TX `tx_rx_separation` away along +x.
    pub fn centered_square(
        seed: u64,
        n_scatterers: usize,
        region_side: f64,
        tx_rx_separation: f64,
        carrier_hz: f64,
        bandwidth_hz: f64,
    ) -> Self {
        let half = region_side / 2.0;
        SceneParams {
            seed,
            n_scatterers,
            region: Rect::new(-half, -half, half, half),
            rx_focal_pos: Point::origin(),
            tx_pos: Point::new(tx_rx_separation, 0.0),
            carrier_hz,
            bandwidth_hz,
            direct_path: true,
            shape: RegionShape::Rectangle,
        }
    }
}

/// Scatterers i.i.d. uniform over a square centred on the focal spot,
/// reflection coefficients i.i.d. uniform on (0, 1).
pub fn generate_scene(
    seed: u64,
    n_scatterers: usize,
    region_side: f64,
    tx_rx_separation: f64,
    carrier_hz: f64,
    bandwidth_hz: f64,
) -> Result<Scene> {
    if !(region_side > 0.0) {
        return Err(Error::param(format!("region side must be positive, got {region_side}")));
    }
    if !(tx_rx_separation > 0.0) {
        return Err(Error::param(format!(
            "tx/rx separation must be positive, got {tx_rx_separation}"
        )));
    }
    generate_scene_with(&SceneParams::centered_square(
        seed,
        n_scatterers,
        region_side,
        tx_rx_separation,
        carrier_hz,
        bandwidth_hz,
    ))
}

/// General form of [`generate_scene`] over an arbitrary rectangle.
pub fn generate_scene_with(params: &SceneParams) -> Result<Scene> {
    if params.n_scatterers == 0 {
        return Err(Error::param("scene needs at least one scatterer"));
    }
    let r = &params.region;
    if !(r.width() > 0.0 && r.height() > 0.0) {
        return Err(Error::param("scatterer region must have positive area"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut scatterers = Vec::with_capacity(params.n_scatterers);
    let mut coeffs = Vec::with_capacity(params.n_scatterers);
    let mut phases = Vec::with_capacity(params.n_scatterers);
    for _ in 0..params.n_scatterers {
        let (c, hx, hy) = (r.center(), r.width() / 2.0, r.height() / 2.0);
        let p = loop {
            let x = rng.gen_range(r.min.x..r.max.x);
            let y = rng.gen_range(r.min.y..r.max.y);
            let inside = match params.shape {
                RegionShape::Rectangle => true,
                RegionShape::Ellipse => ((x - c.x) / hx).powi(2) + ((y - c.y) / hy).powi(2) < 1.0,
            };
            if inside {
                break Point::new(x, y);
            }
        };
        scatterers.push(p);
        // open interval (0, 1)
        let mut c: f64 = rng.gen();
        while c == 0.0 {
            c = rng.gen();
        }
        coeffs.push(c);
        phases.push(rng.gen_range(0.0..TAU));
    }
    let mut scene = Scene {
        scatterers,
        reflection_coeffs: coeffs,
        reflection_phases: phases,
        tx_pos: params.tx_pos,
        rx_focal_pos: params.rx_focal_pos,
        carrier_hz: params.carrier_hz,
        bandwidth_hz: params.bandwidth_hz,
        pulse_shaper: PulseShaper::Rectangular,
        tap_count: 1,
        first_tap: 0,
        direct_path: params.direct_path,
        bounce_depth: 1,
    };
    let area = params.region.union_point(params.rx_focal_pos);
    scene.first_tap = scene.default_first_tap(&area);
    scene.tap_count = scene.default_tap_count(&area) - scene.first_tap;
    scene.validate()?;
    Ok(scene)
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::param("bandwidth must be positive"));
        }
        if !(self.carrier_hz > self.bandwidth_hz) {
            return Err(Error::param("carrier frequency must exceed the bandwidth"));
        }
        if self.scatterers.is_empty() {
            return Err(Error::param("scene has no scatterers"));
        }
        if self.scatterers.len() != self.reflection_coeffs.len() {
            return Err(Error::param("one reflection coefficient per scatterer required"));
        }
        if !self.reflection_phases.is_empty() && self.reflection_phases.len() != self.scatterers.len() {
            return Err(Error::param("reflection phases must be empty or one per scatterer"));
        }
        if let Some(c) = self.reflection_coeffs.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
            return Err(Error::param(format!("reflection coefficient {c} outside (0, 1)")));
        }
        if self.tap_count == 0 {
            return Err(Error::param("tap count must be positive"));
        }
        if !(1..=2).contains(&self.bounce_depth) {
            return Err(Error::param("bounce depth must be 1 or 2"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Wavenumber `2π f0 / c`.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength()
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    /// `⌈max delay · B⌉ + guard` for a receiver anywhere inside `area`.
    pub fn default_tap_count(&self, area: &Rect) -> usize {
        let corners = area.corners();
        let farthest = |p: &Point| {
            corners
                .iter()
                .map(|c| (c - p).norm())
                .fold(0.0_f64, f64::max)
        };
        let mut max_r = farthest(&self.tx_pos);
        let mut max_leg = 0.0_f64;
        for s in &self.scatterers {
            let first = (s - self.tx_pos).norm();
            max_r = max_r.max(first + farthest(s));
            max_leg = max_leg.max(first);
        }
        if self.bounce_depth >= 2 {
            // crude bound: longest first leg + region diagonal + farthest reach
            let diag = (area.max - area.min).norm();
            max_r = max_r.max(max_leg + 2.0 * diag);
        }
        (max_r / SPEED_OF_LIGHT * self.bandwidth_hz).ceil() as usize + TAP_GUARD
    }
}

impl Scene {
    /// Earliest delay bin any path can reach for a receiver inside `area`,
    /// less the guard.
    pub fn default_first_tap(&self, area: &Rect) -> usize {
        let to_area = |p: &Point| {
            let q = Point::new(p.x.clamp(area.min.x, area.max.x), p.y.clamp(area.min.y, area.max.y));
            (p - q).norm()
        };
        let mut min_r = f64::INFINITY;
        if self.direct_path {
            min_r = to_area(&self.tx_pos);
        }
        for s in &self.scatterers {
            min_r = min_r.min((s - self.tx_pos).norm() + to_area(s));
        }
        ((min_r / SPEED_OF_LIGHT * self.bandwidth_hz).floor() as usize).saturating_sub(TAP_GUARD)
    }
}

fn direction(from: &Point, to: &Point) -> f64 {
    let d = to - from;
    d.y.atan2(d.x).rem_euclid(TAU)
}

/// All MPCs reaching `rx`: one per scatterer (plus pairs at depth 2) and the
/// direct path when enabled.
pub fn enumerate_mpcs(scene: &Scene, rx: Point) -> Vec<Mpc> {
    let n = scene.scatterers.len();
    let mut out = Vec::with_capacity(n + 1);
    if scene.direct_path {
        let r = (rx - scene.tx_pos).norm();
        out.push(Mpc {
            travel_distance: r,
            arrival_angle: direction(&rx, &scene.tx_pos),
            gain: 1.0 / r,
            reflection_phase: 0.0,
        });
    }
    let phase = |i: usize| scene.reflection_phases.get(i).copied().unwrap_or(0.0);
    for (i, (s, &rho)) in scene.scatterers.iter().zip(&scene.reflection_coeffs).enumerate() {
        let r = (s - scene.tx_pos).norm() + (rx - s).norm();
        out.push(Mpc {
            travel_distance: r,
            arrival_angle: direction(&rx, s),
            gain: rho / r,
            reflection_phase: phase(i),
        });
    }
    if scene.bounce_depth >= 2 {
        for (i, (s1, &rho1)) in scene.scatterers.iter().zip(&scene.reflection_coeffs).enumerate() {
            let first = (s1 - scene.tx_pos).norm();
            for (j, (s2, &rho2)) in scene.scatterers.iter().zip(&scene.reflection_coeffs).enumerate() {
                if i == j {
                    continue;
                }
                let r = first + (s2 - s1).norm() + (rx - s2).norm();
                out.push(Mpc {
                    travel_distance: r,
                    arrival_angle: direction(&rx, s2),
                    gain: rho1 * rho2 / r,
                    reflection_phase: (phase(i) + phase(j)).rem_euclid(TAU),
                });
            }
        }
    }
    out
}

/// One sampled complex channel impulse response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cir {
    pub taps: Vec<Complex64>,
    pub timestamp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Point>,
}

impl Cir {
    pub fn new(taps: Vec<Complex64>, timestamp: f64) -> Self {
        Cir { taps, timestamp, pose: None }
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|h| h.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Bins `mpcs` into `scene.tap_count` taps starting at bin `scene.first_tap`.
/// Returns the CIR and the number of components dropped for arriving outside
/// that window.
pub fn bin_mpcs(scene: &Scene, mpcs: &[Mpc], timestamp: f64) -> (Cir, usize) {
    let period = scene.sample_period();
    let f0 = scene.carrier_hz;
    let mut taps = vec![Complex64::new(0.0, 0.0); scene.tap_count];
    let mut dropped = 0;
    for m in mpcs {
        let tau = m.travel_distance / SPEED_OF_LIGHT;
        let l = (tau / period + 0.5).floor();
        let k = l - scene.first_tap as f64;
        if k < 0.0 || k as usize >= taps.len() {
            dropped += 1;
            continue;
        }
        let dtau = l * period - tau;
        let amp = m.gain * scene.pulse_shaper.eval(dtau, period);
        taps[k as usize] += Complex64::from_polar(amp, TAU * f0 * dtau - m.reflection_phase);
    }
    (Cir::new(taps, timestamp), dropped)
}

fn bin_at(scene: &Scene, rx: Point, timestamp: f64) -> (Cir, usize) {
    if scene.bounce_depth == 1 {
        bin_single_bounce(scene, rx, timestamp)
    } else {
        bin_mpcs(scene, &enumerate_mpcs(scene, rx), timestamp)
    }
}

/// Same arithmetic as `bin_mpcs(scene, &enumerate_mpcs(scene, rx), _)`
/// without materialising the MPC list.
fn bin_single_bounce(scene: &Scene, rx: Point, timestamp: f64) -> (Cir, usize) {
    let period = scene.sample_period();
    let f0 = scene.carrier_hz;
    let mut taps = vec![Complex64::new(0.0, 0.0); scene.tap_count];
    let mut dropped = 0;
    let mut add = |r: f64, gain: f64, phase: f64| {
        let tau = r / SPEED_OF_LIGHT;
        let l = (tau / period + 0.5).floor();
        let k = l - scene.first_tap as f64;
        if k < 0.0 || k as usize >= taps.len() {
            dropped += 1;
            return;
        }
        let dtau = l * period - tau;
        let amp = gain * scene.pulse_shaper.eval(dtau, period);
        let (sin, cos) = (TAU * f0 * dtau - phase).sin_cos();
        taps[k as usize] += Complex64::new(amp * cos, amp * sin);
    };
    if scene.direct_path {
        let r = (rx - scene.tx_pos).norm();
        add(r, 1.0 / r, 0.0);
    }
    for (i, (s, &rho)) in scene.scatterers.iter().zip(&scene.reflection_coeffs).enumerate() {
        let r = (s - scene.tx_pos).norm() + (rx - s).norm();
        add(r, rho / r, scene.reflection_phases.get(i).copied().unwrap_or(0.0));
    }
    (Cir::new(taps, timestamp), dropped)
}

/// CIR at `rx` per the tap-binned plane-wave model.
pub fn synthesize_cir(scene: &Scene, rx: Point, timestamp: f64) -> Cir {
    let (cir, dropped) = bin_at(scene, rx, timestamp);
    if dropped > 0 {
        log::warn!("{dropped} MPCs fell outside taps {}..{} and were dropped", scene.first_tap, scene.first_tap + scene.tap_count);
    }
    cir
}

/// A receiver waypoint: position and the time it is reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: Point,
    pub time: f64,
}

impl Waypoint {
    pub fn new(position: Point, time: f64) -> Self {
        Waypoint { position, time }
    }
}

/// Position at `t` on the piecewise-linear path through `waypoints`
/// (clamped to the ends).
pub fn interpolate(waypoints: &[Waypoint], t: f64) -> Point {
    let i = waypoints.partition_point(|w| w.time <= t);
    if i == 0 {
        return waypoints[0].position;
    }
    if i == waypoints.len() {
        return waypoints[i - 1].position;
    }
    let (a, b) = (&waypoints[i - 1], &waypoints[i]);
    let span = b.time - a.time;
    if span <= 0.0 {
        return b.position;
    }
    let u = (t - a.time) / span;
    a.position + (b.position - a.position) * u
}

/// Sample instants `t0, t0 + T, …` up to the last waypoint time.
pub fn sample_times(start: f64, end: f64, sample_period: f64) -> Vec<f64> {
    let n = ((end - start) / sample_period + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * sample_period).collect()
}

/// One CIR per sample instant along linearly interpolated waypoints, each
/// labelled with its true position.
pub fn synthesize_trajectory(
    scene: &Scene,
    waypoints: &[Waypoint],
    sample_period: f64,
) -> Result<Vec<Cir>> {
    if !(sample_period > 0.0) {
        return Err(Error::param("sample period must be positive"));
    }
    if waypoints.is_empty() {
        return Ok(Vec::new());
    }
    if waypoints.windows(2).any(|w| !(w[1].time >= w[0].time)) {
        return Err(Error::param("waypoint timestamps must be time-ordered"));
    }
    let start = waypoints[0].time;
    let end = waypoints[waypoints.len() - 1].time;
    let mut dropped = 0;
    let cirs = sample_times(start, end, sample_period)
        .into_iter()
        .map(|t| {
            let p = interpolate(waypoints, t);
            let (mut cir, d) = bin_at(scene, p, t);
            dropped += d;
            cir.pose = Some(p);
            cir
        })
        .collect();
    if dropped > 0 {
        log::warn!("{dropped} MPCs dropped past the last tap over the trajectory");
    }
    Ok(cirs)
}
