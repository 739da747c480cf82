//! Multi-hypothesis dead reckoning with floorplan pruning and landmark snaps.
//!
//! Each hypothesis carries a distance scale and a heading bias. All of them
//! share the measured increments; hypotheses whose path walks through a wall
//! are dropped, and sharp turns near a corner or door re-anchor the path and
//! re-estimate scale and bias from the finished leg.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::Cir;
use crate::distance::{estimate_distance, DistanceConfig, DistanceTrack};
use crate::error::{Error, Result};
use crate::floorplan::FloorPlan;
use crate::geometry::{unit, wrap_angle, Point};
use crate::heading::{heading_deltas, HeadingDelta, ImuSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub timestamp: f64,
    pub position: Point,
    /// Wrapped to `[−π, π)`.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathHypothesis {
    pub scale: f64,
    pub heading_bias: f64,
    pub pose_trace: Vec<Pose>,
    /// Scale in force when each pose was produced.
    pub scale_trace: Vec<f64>,
    pub weight: f64,
}

impl PathHypothesis {
    pub fn is_alive(&self) -> bool {
        self.weight > 0.0
    }

    pub fn tip(&self) -> &Pose {
        self.pose_trace.last().expect("hypothesis traces start with the initial pose")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub distance: DistanceConfig,
    /// Fusion cadence, seconds.
    pub step_period: f64,
    pub gravity_window: f64,
    pub scale_grid: [f64; 3],
    /// Radians.
    pub bias_grid: [f64; 3],
    pub scale_min: f64,
    pub scale_max: f64,
    /// Radians of heading change that count as a turn ...
    pub turn_threshold: f64,
    /// ... within this many seconds.
    pub turn_window: f64,
    /// Heading change below which a turn is considered finished, over half the turn window.
    pub settle_threshold: f64,
    pub capture_radius: f64,
    /// Legs shorter than this do not update scale or bias.
    pub min_leg: f64,
    /// Spread multiplier for hypotheses regenerated after total loss.
    pub recovery_spread: f64,
    /// Scale and bias (radians) spacing of the leg replay tried after total
    /// loss.
    pub replay_scale_step: f64,
    pub replay_bias_step: f64,
    /// Snap scoring: weight factor `exp(−r²/2σ²)` for snap distance `r`.
    pub snap_sigma: f64,
    pub gap_threshold: f64,
    pub corrector: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        TrackerConfig {
            distance: DistanceConfig::default(),
            step_period: 0.16,
            gravity_window: 2.0,
            scale_grid: [1.0, 0.8, 1.2],
            bias_grid: [0.0, -5.0 * deg, 5.0 * deg],
            scale_min: 0.7,
            scale_max: 1.3,
            turn_threshold: 60.0 * deg,
            turn_window: 1.0,
            settle_threshold: 15.0 * deg,
            capture_radius: 2.0,
            min_leg: 3.0,
            recovery_spread: 1.5,
            replay_scale_step: 0.025,
            replay_bias_step: 1.0 * deg,
            snap_sigma: 1.0,
            gap_threshold: 1.0,
            corrector: true,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step_period", self.step_period),
            ("gravity_window", self.gravity_window),
            ("turn_threshold", self.turn_threshold),
            ("turn_window", self.turn_window),
            ("capture_radius", self.capture_radius),
            ("snap_sigma", self.snap_sigma),
            ("replay_scale_step", self.replay_scale_step),
            ("replay_bias_step", self.replay_bias_step),
            ("gap_threshold", self.gap_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("tracker {name} must be positive")));
            }
        }
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max) {
            return Err(Error::config("tracker scale range must satisfy 0 < min ≤ max"));
        }
        if self.scale_grid.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::config("tracker scale grid must be positive"));
        }
        Ok(())
    }

    fn clamp_scale(&self, s: f64) -> f64 {
        s.clamp(self.scale_min, self.scale_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub current_pose: Pose,
    pub hypotheses: Vec<PathHypothesis>,
    pub cumulative_distance: f64,
    /// Heading without any bias, unwrapped, one entry per step.
    raw_heading: Vec<f64>,
    /// Measured increment per step, zero for the initial pose.
    raw_distance: Vec<f64>,
    /// Step index of the last snap (or the start).
    anchor: usize,
    /// Step index where a detected turn began, while waiting for it to settle.
    pending_turn: Option<usize>,
    pub snaps: usize,
    pub recoveries: usize,
}

impl TrackState {
    /// Hypothesis grid `scales × biases`, uniform weights, listed in the
    /// order given so the first pair is preferred on ties.
    pub fn new(start: Pose, scales: &[f64], biases: &[f64]) -> Result<Self> {
        if scales.is_empty() || biases.is_empty() {
            return Err(Error::param("hypothesis grid must be non-empty"));
        }
        let n = (scales.len() * biases.len()) as f64;
        let mut hypotheses = Vec::new();
        for &scale in scales {
            for &bias in biases {
                let first = Pose { heading: wrap_angle(start.heading + bias), ..start };
                hypotheses.push(PathHypothesis {
                    scale,
                    heading_bias: bias,
                    pose_trace: vec![first],
                    scale_trace: vec![scale],
                    weight: 1.0 / n,
                });
            }
        }
        let mut state = TrackState {
            current_pose: start,
            hypotheses,
            cumulative_distance: 0.0,
            raw_heading: vec![start.heading],
            raw_distance: vec![0.0],
            anchor: 0,
            pending_turn: None,
            snaps: 0,
            recoveries: 0,
        };
        state.current_pose = *state.dominant().tip();
        Ok(state)
    }

    pub fn from_config(start: Pose, cfg: &TrackerConfig) -> Result<Self> {
        TrackState::new(start, &cfg.scale_grid, &cfg.bias_grid)
    }

    /// Highest weight, earliest index on ties.
    pub fn dominant_index(&self) -> usize {
        let mut best = 0;
        for (i, h) in self.hypotheses.iter().enumerate() {
            if h.weight > self.hypotheses[best].weight {
                best = i;
            }
        }
        best
    }

    pub fn dominant(&self) -> &PathHypothesis {
        &self.hypotheses[self.dominant_index()]
    }

    pub fn steps(&self) -> usize {
        self.raw_heading.len() - 1
    }

    fn timestamp(&self) -> f64 {
        self.current_pose.timestamp
    }
}

/// Rotate by `delta_theta`, then move `scale·d_increment` along the new
/// heading, for every live hypothesis.
pub fn dead_reckon_step(state: &mut TrackState, timestamp: f64, d_increment: f64, delta_theta: f64) -> Result<()> {
    if !(d_increment >= 0.0) {
        return Err(Error::param(format!("distance increment must be non-negative, got {d_increment}")));
    }
    let raw = state.raw_heading.last().copied().unwrap_or(0.0) + delta_theta;
    state.raw_heading.push(raw);
    state.raw_distance.push(d_increment);
    state.cumulative_distance += d_increment;
    for h in state.hypotheses.iter_mut().filter(|h| h.is_alive()) {
        let heading = raw + h.heading_bias;
        let position = h.tip().position + unit(heading) * (h.scale * d_increment);
        h.pose_trace.push(Pose { timestamp, position, heading: wrap_angle(heading) });
        h.scale_trace.push(h.scale);
    }
    state.current_pose = *state.dominant().tip();
    Ok(())
}

/// Zeroes hypotheses whose latest segment touches a wall and renormalises.
/// Returns true when every hypothesis died and the set was regenerated,
/// either by replaying the current leg or, failing that, around the last
/// wall-free pose.
pub fn prune_and_reweight(state: &mut TrackState, plan: &FloorPlan, cfg: &TrackerConfig) -> bool {
    let before = state.hypotheses.clone();
    let last_dominant = state.dominant_index();
    for h in state.hypotheses.iter_mut().filter(|h| h.is_alive()) {
        let n = h.pose_trace.len();
        if n >= 2 && plan.crosses_wall(&h.pose_trace[n - 2].position, &h.pose_trace[n - 1].position) {
            h.weight = 0.0;
        }
    }
    let total: f64 = state.hypotheses.iter().map(|h| h.weight).sum();
    if total > 0.0 {
        for h in &mut state.hypotheses {
            h.weight /= total;
        }
        state.current_pose = *state.dominant().tip();
        return false;
    }
    let seed = &before[last_dominant];
    if !replay_leg(state, seed, plan, cfg) {
        recover(state, seed, cfg);
    }
    true
}

/// Re-runs the steps since the last anchor over a scale sweep of
/// `[scale_min, scale_max]` and a bias sweep as wide as the recovery grid,
/// keeping the wall-free legs nearest to `seed` in units of the hypothesis
/// grid spacing. Returns false when no replay fits the plan.
fn replay_leg(state: &mut TrackState, seed: &PathHypothesis, plan: &FloorPlan, cfg: &TrackerConfig) -> bool {
    let anchor = state.anchor;
    let now = state.raw_heading.len() - 1;
    if anchor >= now {
        return false;
    }
    let origin = seed.pose_trace[anchor].position;
    let centre = (cfg.scale_grid[0], cfg.bias_grid[0]);
    let scale_unit = cfg.scale_grid.iter().map(|s| (s / centre.0).ln().abs()).fold(0.0, f64::max).max(1e-3);
    let bias_unit = cfg.bias_grid.iter().map(|b| (b - centre.1).abs()).fold(0.0, f64::max).max(1e-3);
    let spread = cfg.recovery_spread * bias_unit;
    let n_scales = ((cfg.scale_max - cfg.scale_min) / cfg.replay_scale_step + 1e-9).floor() as usize + 1;
    let n_biases = (spread / cfg.replay_bias_step + 1e-9).floor() as i64;
    let mut fits: Vec<(f64, f64, f64, Vec<Pose>)> = Vec::new();
    for i in 0..n_scales {
        let scale = cfg.scale_min + i as f64 * cfg.replay_scale_step;
        for j in -n_biases..=n_biases {
            let bias = seed.heading_bias + j as f64 * cfg.replay_bias_step;
            let mut pos = origin;
            let mut poses = Vec::with_capacity(now - anchor);
            let mut clear = true;
            for k in anchor + 1..=now {
                let heading = state.raw_heading[k] + bias;
                let next = pos + unit(heading) * (scale * state.raw_distance[k]);
                if plan.crosses_wall(&pos, &next) {
                    clear = false;
                    break;
                }
                pos = next;
                poses.push(Pose { timestamp: seed.pose_trace[k].timestamp, position: pos, heading: wrap_angle(heading) });
            }
            if clear {
                let cost = ((scale / seed.scale).ln() / scale_unit).powi(2) + ((bias - seed.heading_bias) / bias_unit).powi(2);
                fits.push((cost, scale, bias, poses));
            }
        }
    }
    if fits.is_empty() {
        return false;
    }
    fits.sort_by(|a, b| a.0.total_cmp(&b.0));
    fits.truncate(cfg.scale_grid.len() * cfg.bias_grid.len());
    let w = 1.0 / fits.len() as f64;
    state.hypotheses = fits
        .into_iter()
        .map(|(_, scale, heading_bias, poses)| {
            let mut pose_trace = seed.pose_trace[..=anchor].to_vec();
            let mut scale_trace = seed.scale_trace[..=anchor].to_vec();
            scale_trace.extend(std::iter::repeat_n(scale, poses.len()));
            pose_trace.extend(poses);
            PathHypothesis { scale, heading_bias, pose_trace, scale_trace, weight: w }
        })
        .collect();
    state.recoveries += 1;
    state.current_pose = *state.dominant().tip();
    true
}

/// Regenerates the grid around `seed`'s last wall-free pose, holding it in
/// place for the current step.
fn recover(state: &mut TrackState, seed: &PathHypothesis, cfg: &TrackerConfig) {
    let n = seed.pose_trace.len();
    let mut trace = seed.pose_trace[..n - 1].to_vec();
    let mut scales = seed.scale_trace[..n - 1].to_vec();
    let last_valid = *trace.last().expect("trace holds the initial pose");
    let timestamp = seed.pose_trace[n - 1].timestamp;
    trace.push(Pose { timestamp, ..last_valid });
    scales.push(seed.scale);

    let widen = cfg.recovery_spread;
    let centre_scale = cfg.scale_grid[0];
    let centre_bias = cfg.bias_grid[0];
    let mut hypotheses = Vec::new();
    for &s in &cfg.scale_grid {
        for &b in &cfg.bias_grid {
            let scale = cfg.clamp_scale(seed.scale * (1.0 + widen * (s / centre_scale - 1.0)));
            let heading_bias = seed.heading_bias + widen * (b - centre_bias);
            let mut h = PathHypothesis {
                scale,
                heading_bias,
                pose_trace: trace.clone(),
                scale_trace: scales.clone(),
                weight: 0.0,
            };
            if let Some(p) = h.pose_trace.last_mut() {
                let raw = state.raw_heading.last().copied().unwrap_or(0.0);
                p.heading = wrap_angle(raw + heading_bias);
            }
            hypotheses.push(h);
        }
    }
    let w = 1.0 / hypotheses.len() as f64;
    for h in &mut hypotheses {
        h.weight = w;
    }
    state.hypotheses = hypotheses;
    state.recoveries += 1;
    state.current_pose = *state.dominant().tip();
}

/// Index of the pose where the raw heading first crosses the midpoint
/// between its values at `start` and `end`.
fn turn_midpoint(raw: &[f64], start: usize, end: usize) -> usize {
    let half = 0.5 * (raw[start] + raw[end]);
    let rising = raw[end] > raw[start];
    (start..=end)
        .find(|&i| if rising { raw[i] >= half } else { raw[i] <= half })
        .unwrap_or(end)
}

/// Earliest step index at or after `from` whose timestamp is within
/// `window` seconds of `t`.
fn window_start(trace: &[Pose], from: usize, t: f64, window: f64) -> usize {
    (from..trace.len()).find(|&i| trace[i].timestamp >= t - window - 1e-9).unwrap_or(trace.len() - 1)
}

/// Detects a finished sharp turn on the dominant trace and, when a corner or
/// door lies within the capture radius of the turn point, snaps every live
/// hypothesis to it. Returns true when a snap happened.
pub fn landmark_correct(state: &mut TrackState, plan: &FloorPlan, cfg: &TrackerConfig) -> bool {
    let n = state.raw_heading.len();
    if n < 2 {
        return false;
    }
    let now = n - 1;
    let t = state.timestamp();
    let dom = state.dominant_index();
    let trace = &state.hypotheses[dom].pose_trace;
    let raw = &state.raw_heading;

    if state.pending_turn.is_none() {
        let from = window_start(trace, state.anchor, t, cfg.turn_window);
        if (from..now).any(|i| (raw[now] - raw[i]).abs() > cfg.turn_threshold) {
            state.pending_turn = Some(from);
        }
        return false;
    }
    let start = state.pending_turn.expect("checked above");
    let settle_from = window_start(trace, start, t, 0.5 * cfg.turn_window);
    if (settle_from..now).any(|i| (raw[now] - raw[i]).abs() > cfg.settle_threshold) {
        return false;
    }
    state.pending_turn = None;
    let turn_idx = turn_midpoint(raw, start, now);
    // the anchor moves past this turn whether or not a landmark is found
    let anchor = state.anchor;
    state.anchor = turn_idx;

    let dom_turn = state.hypotheses[dom].pose_trace[turn_idx].position;
    if plan.nearest_turn_landmark(&dom_turn, cfg.capture_radius).is_none() {
        return false;
    }

    let mut snapped_any = false;
    for h in state.hypotheses.iter_mut().filter(|h| h.is_alive()) {
        let turn_pt = h.pose_trace[turn_idx].position;
        let miss = (-0.5 * (cfg.capture_radius / cfg.snap_sigma).powi(2)).exp();
        let Some(lm) = plan.nearest_turn_landmark(&turn_pt, cfg.capture_radius) else {
            h.weight *= miss;
            continue;
        };
        let shift = lm.position - turn_pt;
        let moved: Vec<Point> = h.pose_trace[turn_idx..].iter().map(|p| p.position + shift).collect();
        let prev = h.pose_trace[turn_idx.saturating_sub(1)].position;
        let blocked = std::iter::once(&prev)
            .chain(moved.iter())
            .zip(moved.iter())
            .any(|(a, b)| plan.crosses_wall(a, b));
        if blocked {
            h.weight *= miss;
            continue;
        }

        let anchor_pos = h.pose_trace[anchor].position;
        let est_len: f64 = h.pose_trace[anchor..=turn_idx].windows(2).map(|w| (w[1].position - w[0].position).norm()).sum();
        let map_leg = lm.position - anchor_pos;
        let est_leg = turn_pt - anchor_pos;
        if map_leg.norm() >= cfg.min_leg && est_len > 0.0 {
            h.scale = cfg.clamp_scale(h.scale * map_leg.norm() / est_len);
            h.heading_bias += wrap_angle(map_leg.y.atan2(map_leg.x) - est_leg.y.atan2(est_leg.x));
        }
        for (p, m) in h.pose_trace[turn_idx..].iter_mut().zip(moved) {
            p.position = m;
        }
        h.weight *= (-0.5 * (shift.norm() / cfg.snap_sigma).powi(2)).exp();
        snapped_any = true;
    }

    let total: f64 = state.hypotheses.iter().map(|h| h.weight).sum();
    if total > 0.0 {
        for h in &mut state.hypotheses {
            h.weight /= total;
        }
    }
    if snapped_any {
        state.snaps += 1;
    }
    state.current_pose = *state.dominant().tip();
    snapped_any
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub timestamp: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub cum_distance: f64,
    pub dominant_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamGap {
    pub stream: GapStream,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapStream {
    Cir,
    Imu,
}

#[derive(Debug, Clone)]
pub struct TrackOutput {
    pub trace: Vec<TracePoint>,
    pub gaps: Vec<StreamGap>,
    pub distance: DistanceTrack,
    pub state: TrackState,
}

impl TrackOutput {
    pub fn final_position(&self) -> Option<Point> {
        self.trace.last().map(|p| Point::new(p.x, p.y))
    }
}

fn find_gaps(times: impl Iterator<Item = f64>, threshold: f64, stream: GapStream) -> Vec<StreamGap> {
    let times: Vec<f64> = times.collect();
    times
        .windows(2)
        .filter(|w| w[1] - w[0] > threshold)
        .map(|w| StreamGap { stream, start: w[0], end: w[1] })
        .collect()
}

/// Heading change accumulated over `(a, b]` from deltas stamped at interval ends.
fn heading_change(deltas: &[HeadingDelta], cursor: &mut usize, b: f64) -> f64 {
    let mut sum = 0.0;
    while *cursor < deltas.len() && deltas[*cursor].timestamp <= b + 1e-12 {
        sum += deltas[*cursor].delta_theta;
        *cursor += 1;
    }
    sum
}

/// Runs one fusion step and the map stages for an already-measured
/// increment.
pub fn advance(state: &mut TrackState, plan: &FloorPlan, cfg: &TrackerConfig, timestamp: f64, d: f64, dtheta: f64) -> Result<()> {
    dead_reckon_step(state, timestamp, d, dtheta)?;
    if cfg.corrector {
        prune_and_reweight(state, plan, cfg);
        landmark_correct(state, plan, cfg);
    }
    Ok(())
}

/// Full pipeline from raw streams. With `cfg.corrector` off the plan is
/// ignored and the first hypothesis is pure dead reckoning.
pub fn track(cirs: &[Cir], imu: &[ImuSample], plan: &FloorPlan, start: Pose, cfg: &TrackerConfig) -> Result<TrackOutput> {
    cfg.validate()?;
    let (Some(c0), Some(c1)) = (cirs.first(), cirs.last()) else {
        return Err(Error::param("tracking needs a non-empty CIR stream"));
    };
    let dist = estimate_distance(cirs, &cfg.distance)?;
    let mut out = track_with_distance(&dist.track, (c0.timestamp, c1.timestamp), imu, plan, start, cfg)?;
    let mut gaps = find_gaps(cirs.iter().map(|c| c.timestamp), cfg.gap_threshold, GapStream::Cir);
    gaps.append(&mut out.gaps);
    out.gaps = gaps;
    Ok(out)
}

/// Fusion stage of [`track`] for a distance track measured over `cir_span`.
pub fn track_with_distance(
    distance: &DistanceTrack,
    cir_span: (f64, f64),
    imu: &[ImuSample],
    plan: &FloorPlan,
    start: Pose,
    cfg: &TrackerConfig,
) -> Result<TrackOutput> {
    cfg.validate()?;
    plan.validate()?;
    let deltas = heading_deltas(imu, cfg.gravity_window)?;
    let gaps = find_gaps(imu.iter().map(|s| s.timestamp), cfg.gap_threshold, GapStream::Imu);

    let (Some(i0), Some(i1)) = (imu.first(), imu.last()) else {
        return Err(Error::param("tracking needs a non-empty IMU stream"));
    };
    let t0 = cir_span.0.max(i0.timestamp);
    let t1 = cir_span.1.min(i1.timestamp);
    if !(t1 >= t0) {
        return Err(Error::param("CIR and IMU streams do not overlap in time"));
    }
    let start = Pose { timestamp: t0, ..start };
    let mut state = if cfg.corrector {
        TrackState::from_config(start, cfg)?
    } else {
        TrackState::new(start, &[cfg.scale_grid[0]], &[cfg.bias_grid[0]])?
    };
    let mut cursor = deltas.iter().position(|d| d.timestamp > t0 + 1e-12).unwrap_or(deltas.len());

    let n_steps = ((t1 - t0) / cfg.step_period + 1e-9).floor() as usize;
    let mut cum = vec![0.0];
    for k in 1..=n_steps {
        let a = t0 + (k - 1) as f64 * cfg.step_period;
        let b = t0 + k as f64 * cfg.step_period;
        let d = distance.distance_between(a, b);
        let dtheta = heading_change(&deltas, &mut cursor, b);
        advance(&mut state, plan, cfg, b, d, dtheta)?;
        cum.push(state.cumulative_distance);
    }

    let dom = state.dominant();
    let trace = dom
        .pose_trace
        .iter()
        .zip(&dom.scale_trace)
        .zip(&cum)
        .map(|((p, &s), &c)| TracePoint {
            timestamp: p.timestamp,
            x: p.position.x,
            y: p.position.y,
            heading: p.heading,
            cum_distance: c,
            dominant_scale: s,
        })
        .collect();
    Ok(TrackOutput { trace, gaps, distance: distance.clone(), state })
}

/// CSV `timestamp,x,y,heading,cum_distance,dominant_scale`.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in trace {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floorplan::{Landmark, LandmarkKind};
    use crate::geometry::{Rect, Segment};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn origin() -> Pose {
        Pose { timestamp: 0.0, position: Point::origin(), heading: 0.0 }
    }

    fn single() -> TrackState {
        TrackState::new(origin(), &[1.0], &[0.0]).unwrap()
    }

    fn wall(x1: f64, y1: f64, x2: f64, y2: f64) -> Segment {
        Segment::new(Point::new(x1, y1), Point::new(x2, y2))
    }

    #[test]
    fn step_examples() {
        let mut s = single();
        dead_reckon_step(&mut s, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(s.current_pose.position, Point::new(1.0, 0.0));

        let mut s = single();
        dead_reckon_step(&mut s, 1.0, 1.0, FRAC_PI_2).unwrap();
        assert!((s.current_pose.position - Point::new(0.0, 1.0)).norm() < 1e-15);

        let mut s = TrackState::new(origin(), &[1.2], &[0.0]).unwrap();
        dead_reckon_step(&mut s, 1.0, 1.0, 0.0).unwrap();
        assert!((s.current_pose.position.x - 1.2).abs() < 1e-15);

        assert!(dead_reckon_step(&mut single(), 1.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn dominant_ties_go_to_first() {
        let cfg = TrackerConfig::default();
        let s = TrackState::from_config(origin(), &cfg).unwrap();
        assert_eq!(s.hypotheses.len(), 9);
        assert_eq!(s.dominant_index(), 0);
        assert_eq!(s.dominant().scale, 1.0);
        assert_eq!(s.dominant().heading_bias, 0.0);
        assert!((s.hypotheses.iter().map(|h| h.weight).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pruning_and_recovery() {
        let cfg = TrackerConfig::default();
        let corridor = FloorPlan::new(vec![wall(-1.0, -1.0, 20.0, -1.0), wall(-1.0, 1.0, 20.0, 1.0)], vec![], Rect::new(-1.0, -1.0, 20.0, 1.0)).unwrap();
        let mut s = TrackState::new(origin(), &[1.0, 1.1], &[0.0]).unwrap();
        dead_reckon_step(&mut s, 1.0, 1.0, 0.0).unwrap();
        let before = s.clone();
        assert!(!prune_and_reweight(&mut s, &corridor, &cfg));
        assert_eq!(s, before);

        // second hypothesis veers through the upper wall
        let mut s = TrackState::new(origin(), &[1.0], &[0.0, 0.5]).unwrap();
        dead_reckon_step(&mut s, 1.0, 3.0, 0.0).unwrap();
        assert!(!prune_and_reweight(&mut s, &corridor, &cfg));
        assert_eq!(s.hypotheses[1].weight, 0.0);
        assert_eq!(s.hypotheses[0].weight, 1.0);

        // everything hits the end wall: regenerate at the last valid pose
        let end = FloorPlan::new(vec![wall(2.0, -1.0, 2.0, 1.0)], vec![], Rect::new(-1.0, -1.0, 3.0, 1.0)).unwrap();
        let mut s = TrackState::new(origin(), &[1.0], &[0.0]).unwrap();
        dead_reckon_step(&mut s, 1.0, 1.5, 0.0).unwrap();
        dead_reckon_step(&mut s, 2.0, 1.5, 0.0).unwrap();
        assert!(prune_and_reweight(&mut s, &end, &cfg));
        assert_eq!(s.hypotheses.len(), 9);
        assert!((s.hypotheses.iter().map(|h| h.weight).sum::<f64>() - 1.0).abs() < 1e-12);
        let tip = s.dominant().tip();
        assert_eq!(tip.position, Point::new(1.5, 0.0));
        assert_eq!(tip.timestamp, 2.0);
        assert!(s.hypotheses.iter().all(|h| h.scale >= cfg.scale_min && h.scale <= cfg.scale_max));
    }

    /// Corridor along x to a corner at (10, 0), then a 1 m wide corridor north.
    fn t_plan() -> FloorPlan {
        FloorPlan::new(
            vec![
                wall(-1.0, -1.0, 10.5, -1.0),
                wall(-1.0, 1.0, 9.5, 1.0),
                wall(9.5, 1.0, 9.5, 10.0),
                wall(10.5, -1.0, 10.5, 10.0),
                wall(-1.0, -1.0, -1.0, 1.0),
            ],
            vec![Landmark { position: Point::new(10.0, 0.0), kind: LandmarkKind::Corner }],
            Rect::new(-1.0, -1.0, 10.5, 10.0),
        )
        .unwrap()
    }

    /// Walks `leg1` east, turns left over four steps, walks `leg2` north, in
    /// 0.1 s steps of 0.1 m measured with distance gain `gain`.
    fn l_walk(state: &mut TrackState, plan: &FloorPlan, cfg: &TrackerConfig, leg1: f64, leg2: f64, gain: f64) {
        let step = 0.1;
        let mut t = 0.0;
        let n1 = (leg1 / step).round() as usize;
        let n2 = (leg2 / step).round() as usize;
        for _ in 0..n1 {
            t += 0.1;
            advance(state, plan, cfg, t, step * gain, 0.0).unwrap();
        }
        for k in 0..n2 + 20 {
            t += 0.1;
            let (d, dth) = if k < 4 { (0.0, FRAC_PI_2 / 4.0) } else if k < n2 + 4 { (step * gain, 0.0) } else { (0.0, 0.0) };
            advance(state, plan, cfg, t, d, dth).unwrap();
        }
    }

    #[test]
    fn t_junction_keeps_the_right_scale() {
        // only the hypothesis that turns inside the junction survives the walk
        let cfg = TrackerConfig { corrector: true, ..TrackerConfig::default() };
        let no_snap = FloorPlan { landmarks: vec![], ..t_plan() };
        let mut s = TrackState::new(origin(), &[0.9, 1.0, 1.1], &[0.0]).unwrap();
        l_walk(&mut s, &no_snap, &cfg, 10.0, 5.0, 1.0);
        let alive: Vec<f64> = s.hypotheses.iter().filter(|h| h.is_alive()).map(|h| h.scale).collect();
        assert_eq!(alive, vec![1.0]);

        // exhaustive check of the three hypotheses in isolation
        for (scale, survives) in [(0.9, false), (1.0, true), (1.1, false)] {
            let mut s = TrackState::new(origin(), &[scale], &[0.0]).unwrap();
            let mut died = false;
            let mut t = 0.0;
            for k in 0..200 {
                t += 0.1;
                let (d, dth) = if k < 100 { (0.1, 0.0) } else if k < 104 { (0.0, FRAC_PI_2 / 4.0) } else if k < 154 { (0.1, 0.0) } else { (0.0, 0.0) };
                dead_reckon_step(&mut s, t, d, dth).unwrap();
                let n = s.dominant().pose_trace.len();
                died |= no_snap.crosses_wall(&s.dominant().pose_trace[n - 2].position, &s.dominant().pose_trace[n - 1].position);
            }
            assert_eq!(!died, survives, "scale {scale}");
        }
    }

    #[test]
    fn l_path_snap_recovers_overestimate() {
        let cfg = TrackerConfig::default();
        let plan = FloorPlan::new(
            vec![],
            vec![Landmark { position: Point::new(4.0, 0.0), kind: LandmarkKind::Corner }],
            Rect::new(-1.0, -1.0, 10.0, 10.0),
        )
        .unwrap();
        let mut s = TrackState::new(origin(), &[1.0], &[0.0]).unwrap();
        l_walk(&mut s, &plan, &cfg, 4.0, 6.0, 1.1);
        assert_eq!(s.snaps, 1);
        let end = s.current_pose.position;
        assert!((end - Point::new(4.0, 6.0)).norm() < 0.1, "endpoint {end}");
        assert!((s.dominant().scale - 1.0 / 1.1).abs() < 0.02);
    }

    #[test]
    fn no_turn_or_far_landmark_means_no_snap() {
        let cfg = TrackerConfig::default();
        let far = FloorPlan::new(
            vec![],
            vec![Landmark { position: Point::new(4.0, 3.0), kind: LandmarkKind::Corner }],
            Rect::new(-1.0, -1.0, 10.0, 10.0),
        )
        .unwrap();
        let mut straight = single();
        let mut reference = single();
        for k in 1..=60 {
            advance(&mut straight, &far, &cfg, k as f64 * 0.1, 0.1, 0.0).unwrap();
            dead_reckon_step(&mut reference, k as f64 * 0.1, 0.1, 0.0).unwrap();
        }
        assert_eq!(straight.snaps, 0);
        assert_eq!(straight.current_pose, reference.current_pose);

        let mut turned = single();
        l_walk(&mut turned, &far, &cfg, 4.0, 3.0, 1.0);
        assert_eq!(turned.snaps, 0);
    }

    #[test]
    fn trace_csv_header() {
        let p = TracePoint { timestamp: 0.0, x: 1.0, y: 2.0, heading: 0.5, cum_distance: 3.0, dominant_scale: 1.0 };
        let mut buf = Vec::new();
        write_trace_csv(&[p], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("timestamp,x,y,heading,cum_distance,dominant_scale\n"));
    }

    proptest! {
        #[test]
        fn fold_matches_vector_sum(steps in proptest::collection::vec((0.0f64..2.0, -PI..PI), 0..60), h0 in -PI..PI) {
            let start = Pose { heading: h0, ..origin() };
            let mut s = TrackState::new(start, &[1.0], &[0.0]).unwrap();
            let mut theta = h0;
            let mut expect = Point::origin();
            for (k, &(d, dth)) in steps.iter().enumerate() {
                dead_reckon_step(&mut s, k as f64, d, dth).unwrap();
                theta += dth;
                expect += unit(theta) * d;
            }
            prop_assert!((s.current_pose.position - expect).norm() < 1e-9);
        }

        #[test]
        fn weights_stay_normalised(offsets in proptest::collection::vec(-1.5f64..1.5, 1..30)) {
            let cfg = TrackerConfig::default();
            let plan = t_plan();
            let mut s = TrackState::from_config(origin(), &cfg).unwrap();
            for (k, dth) in offsets.iter().enumerate() {
                dead_reckon_step(&mut s, k as f64, 0.7, *dth).unwrap();
                prune_and_reweight(&mut s, &plan, &cfg);
                let total: f64 = s.hypotheses.iter().map(|h| h.weight).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                let trace = &s.dominant().pose_trace;
                prop_assert!(trace.windows(2).all(|w| !plan.crosses_wall(&w[0].position, &w[1].position)));
            }
        }
    }
}
