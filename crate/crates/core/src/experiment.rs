//! Seeded simulation experiments and their reports.
//!
//! Every scenario is deterministic per seed: the same configuration gives
//! byte-identical output files.

use std::f64::consts::{PI, TAU};
use std::path::{Path as FsPath, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{focal_spot_model, FIRST_NULL_WAVELENGTHS, FIRST_PEAK_WAVELENGTHS};
use crate::channel::{generate_scene_with, RegionShape, synthesize_cir, synthesize_trajectory, Cir, Scene, SceneParams, Waypoint};
use crate::distance::{estimate_distance, mean_std, packet_loss_sweep, speed_from_profile, DistanceConfig, LossSweepRow};
use crate::error::{Error, Result};
use crate::floorplan::FloorPlan;
use crate::geometry::{unit, Point, Rect};
use crate::heading::ImuSample;
use crate::synth::{filleted_loop, filleted_polyline, office_plan, office_route, synthesize_imu, waypoints, ImuSpec, Motion, Path};
use crate::tracker::{track_with_distance, write_trace_csv, Pose, TrackerConfig};
use crate::trrs::trrs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    BesselConvergence,
    TrrsVsDistance,
    TrainLoop,
    WalkDistance,
    OfficeTrack,
    ErrorCdf,
    PacketLossSweep,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::BesselConvergence,
        Scenario::TrrsVsDistance,
        Scenario::TrainLoop,
        Scenario::WalkDistance,
        Scenario::OfficeTrack,
        Scenario::ErrorCdf,
        Scenario::PacketLossSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::BesselConvergence => "bessel_convergence",
            Scenario::TrrsVsDistance => "trrs_vs_distance",
            Scenario::TrainLoop => "train_loop",
            Scenario::WalkDistance => "walk_distance",
            Scenario::OfficeTrack => "office_track",
            Scenario::ErrorCdf => "error_cdf",
            Scenario::PacketLossSweep => "packet_loss_sweep",
        }
    }

    fn default_seed_count(self) -> u64 {
        match self {
            Scenario::BesselConvergence => 50,
            Scenario::TrrsVsDistance => 10,
            Scenario::TrainLoop => 100,
            Scenario::WalkDistance => 6,
            Scenario::OfficeTrack => 3,
            Scenario::ErrorCdf => 25,
            Scenario::PacketLossSweep => 1,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == norm)
            .ok_or_else(|| Error::config(format!("unknown scenario `{s}`")))
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Scatterer field shared by the focal-spot scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub n_scatterers: usize,
    pub region_side: f64,
    pub tx_rx_separation: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub direct_path: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            n_scatterers: 200,
            region_side: 7.5,
            tx_rx_separation: 30.0,
            carrier_hz: 5.8e9,
            bandwidth_hz: 500e6,
            direct_path: false,
        }
    }
}

impl SceneConfig {
    fn params(&self, seed: u64, centre: Point, side: f64) -> SceneParams {
        let half = side / 2.0;
        SceneParams {
            seed,
            n_scatterers: self.n_scatterers,
            region: Rect::new(centre.x - half, centre.y - half, centre.x + half, centre.y + half),
            rx_focal_pos: centre,
            tx_pos: centre + crate::geometry::Vec2::new(self.tx_rx_separation, 0.0),
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            direct_path: self.direct_path,
            shape: RegionShape::Rectangle,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_scatterers == 0 {
            return Err(Error::config("scene.n_scatterers must be at least 1"));
        }
        if !(self.region_side > 0.0) || !(self.tx_rx_separation > 0.0) {
            return Err(Error::config("scene dimensions must be positive"));
        }
        if !(self.bandwidth_hz > 0.0 && self.carrier_hz > self.bandwidth_hz) {
            return Err(Error::config("scene needs 0 < bandwidth < carrier"));
        }
        Ok(())
    }

    fn wavelength(&self) -> f64 {
        crate::channel::SPEED_OF_LIGHT / self.carrier_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocalConfig {
    pub bandwidths_hz: Vec<f64>,
    /// Probe distances span `[0, max_distance]` in wavelengths.
    pub max_distance_wavelengths: f64,
    pub points: usize,
    pub directions: usize,
    /// Grid half-width (wavelengths) and resolution of the 2-D map written
    /// for the first seed.
    pub map_half_width_wavelengths: f64,
    pub map_points: usize,
}

impl Default for FocalConfig {
    fn default() -> Self {
        FocalConfig {
            bandwidths_hz: vec![40e6, 125e6, 500e6],
            max_distance_wavelengths: 2.0,
            points: 101,
            directions: 16,
            map_half_width_wavelengths: 2.0,
            map_points: 41,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSceneConfig {
    pub n_scatterers: usize,
    /// Margin (m) by which the scatterer field extends past the route.
    pub margin: f64,
    pub sample_period: f64,
    /// TX distance (m) from the centre of the walking area and its bearing
    /// (degrees from +x).
    pub tx_distance: f64,
    pub tx_bearing_deg: f64,
    pub shape: RegionShape,
}

impl Default for WalkSceneConfig {
    fn default() -> Self {
        WalkSceneConfig { n_scatterers: 1500, margin: 10.0, sample_period: 0.005, tx_distance: 30.0, tx_bearing_deg: 45.0, shape: RegionShape::Ellipse }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loop_length: f64,
    pub turn_radius: f64,
    pub mean_speed: f64,
    /// Speed swing; slowest at the turns.
    pub speed_swing: f64,
    pub scene: WalkSceneConfig,
    pub tolerance_mean: f64,
    pub tolerance_std: f64,
    pub histogram_bin: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loop_length: 8.0,
            turn_radius: 0.6,
            mean_speed: 0.45,
            speed_swing: 0.1,
            scene: WalkSceneConfig { margin: 30.0, tx_distance: 1000.0, ..WalkSceneConfig::default() },
            tolerance_mean: 0.1,
            tolerance_std: 0.2,
            histogram_bin: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub speeds: Vec<f64>,
    /// Seconds of straight walking per trajectory.
    pub duration: f64,
    /// Seconds trimmed from each end before measuring.
    pub trim: f64,
    /// Walking directions in degrees, cycled by seed.
    pub headings_deg: Vec<f64>,
    pub scene: WalkSceneConfig,
    pub tolerance: f64,
    pub oracle_tolerance: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            speeds: vec![0.5, 1.0, 2.0],
            duration: 4.0,
            trim: 0.5,
            headings_deg: vec![0.0, 90.0],
            scene: WalkSceneConfig { n_scatterers: 4000, margin: 20.0, ..WalkSceneConfig::default() },
            tolerance: 0.05,
            oracle_tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfficeConfig {
    pub path_lengths: Vec<f64>,
    /// Relative error injected into the distance scale.
    pub distance_scale_error: f64,
    pub gyro_drift_deg_per_min: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Relative gait modulation at `gait_hz`.
    pub gait_swing: f64,
    pub gait_hz: f64,
    pub corner_radius: f64,
    pub max_tilt_deg: f64,
    pub imu: ImuSpec,
    pub scene: WalkSceneConfig,
    pub median_tolerance: f64,
}

impl Default for OfficeConfig {
    fn default() -> Self {
        OfficeConfig {
            path_lengths: vec![5.0, 21.0, 25.0, 30.0, 40.0, 64.0, 69.0],
            distance_scale_error: 0.10,
            gyro_drift_deg_per_min: 2.0,
            speed_min: 1.0,
            speed_max: 1.4,
            gait_swing: 0.05,
            gait_hz: 2.0,
            corner_radius: 0.5,
            max_tilt_deg: 25.0,
            imu: ImuSpec { gyro_noise: 0.003, accel_noise: 0.05, ..ImuSpec::default() },
            scene: WalkSceneConfig { n_scatterers: 3000, margin: 60.0, tx_distance: 1000.0, ..WalkSceneConfig::default() },
            median_tolerance: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub loss_rates: Vec<f64>,
    pub trials: usize,
    pub path_length: f64,
    pub speed: f64,
    pub scene: WalkSceneConfig,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            loss_rates: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            trials: 100,
            path_length: 10.0,
            speed: 1.0,
            scene: WalkSceneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<Scenario>,
    /// Defaults per scenario when absent.
    pub seeds: Option<Vec<u64>>,
    pub output_dir: PathBuf,
    pub scene: SceneConfig,
    pub focal: FocalConfig,
    pub train_loop: TrainConfig,
    pub walk: WalkConfig,
    pub office: OfficeConfig,
    pub packet_loss: LossConfig,
    pub tracker: TrackerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: None,
            seeds: None,
            output_dir: PathBuf::from("out"),
            scene: SceneConfig::default(),
            focal: FocalConfig::default(),
            train_loop: TrainConfig::default(),
            walk: WalkConfig::default(),
            office: OfficeConfig::default(),
            packet_loss: LossConfig::default(),
            tracker: TrackerConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        ExperimentConfig { scenario: Some(scenario), ..ExperimentConfig::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario.ok_or_else(|| Error::config("no scenario selected"))
    }

    pub fn seed_list(&self) -> Result<Vec<u64>> {
        match &self.seeds {
            Some(s) if s.is_empty() => Err(Error::config("seeds must be non-empty")),
            Some(s) => Ok(s.clone()),
            None => Ok((1..=self.scenario()?.default_seed_count()).collect()),
        }
    }

    /// Shifts the seed list to start at `base`, keeping its length.
    pub fn with_base_seed(mut self, base: u64) -> Result<Self> {
        let n = self.seed_list()?.len() as u64;
        self.seeds = Some((base..base + n).collect());
        Ok(self)
    }

    /// Checks the fields the selected scenario needs, before any work.
    pub fn validate(&self) -> Result<()> {
        let scenario = self.scenario()?;
        self.seed_list()?;
        let walk_scene = |w: &WalkSceneConfig, name: &str| -> Result<()> {
            if w.n_scatterers == 0 || !(w.margin >= 0.0) || !(w.sample_period > 0.0) {
                return Err(Error::config(format!("{name}.scene needs scatterers, margin ≥ 0 and a positive sample period")));
            }
            if !(w.tx_distance > 0.0) || !w.tx_bearing_deg.is_finite() {
                return Err(Error::config(format!("{name}.scene needs a positive tx_distance and a finite bearing")));
            }
            Ok(())
        };
        match scenario {
            Scenario::BesselConvergence | Scenario::TrrsVsDistance => {
                self.scene.validate()?;
                let f = &self.focal;
                if f.points < 5 || f.directions == 0 || !(f.max_distance_wavelengths > 0.0) {
                    return Err(Error::config("focal needs ≥ 5 points, ≥ 1 direction and a positive range"));
                }
                if scenario == Scenario::BesselConvergence
                    && (f.bandwidths_hz.is_empty() || f.bandwidths_hz.iter().any(|b| !(*b > 0.0 && *b < self.scene.carrier_hz)))
                {
                    return Err(Error::config("focal.bandwidths_hz must be non-empty and below the carrier"));
                }
                if scenario == Scenario::TrrsVsDistance && (f.map_points < 2 || !(f.map_half_width_wavelengths > 0.0)) {
                    return Err(Error::config("focal map needs ≥ 2 points and a positive half width"));
                }
            }
            Scenario::TrainLoop => {
                let t = &self.train_loop;
                walk_scene(&t.scene, "train_loop")?;
                if !(t.turn_radius > 0.0) || !(t.loop_length > 2.0 * PI * t.turn_radius) {
                    return Err(Error::config("train_loop.loop_length must exceed one full turn of turn_radius"));
                }
                if !(t.mean_speed > t.speed_swing.abs()) || !(t.histogram_bin > 0.0) {
                    return Err(Error::config("train_loop speed must stay positive and histogram_bin > 0"));
                }
            }
            Scenario::WalkDistance => {
                let w = &self.walk;
                walk_scene(&w.scene, "walk")?;
                if w.headings_deg.is_empty() || w.speeds.is_empty() || w.speeds.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::config("walk.speeds must be positive and walk.headings_deg non-empty"));
                }
                if !(w.duration > 2.0 * w.trim) || !(w.trim >= 0.0) {
                    return Err(Error::config("walk.duration must exceed twice the trim"));
                }
            }
            Scenario::OfficeTrack | Scenario::ErrorCdf => {
                let o = &self.office;
                walk_scene(&o.scene, "office")?;
                self.tracker.validate()?;
                if o.path_lengths.is_empty() || o.path_lengths.iter().any(|l| !(*l > 0.0)) {
                    return Err(Error::config("office.path_lengths must be non-empty and positive"));
                }
                if !(o.speed_min > 0.0 && o.speed_min <= o.speed_max) || !(o.gait_swing.abs() < 1.0) {
                    return Err(Error::config("office walking speed range is invalid"));
                }
                let route = filleted_polyline(&office_route(), o.corner_radius)?;
                let longest = o.path_lengths.iter().cloned().fold(0.0, f64::max);
                if longest > route.length() {
                    return Err(Error::config(format!("office path length {longest} exceeds the {:.2} m route", route.length())));
                }
            }
            Scenario::PacketLossSweep => {
                let l = &self.packet_loss;
                walk_scene(&l.scene, "packet_loss")?;
                if l.loss_rates.is_empty() || l.loss_rates.iter().any(|r| !(*r >= 0.0 && *r < 1.0)) {
                    return Err(Error::config("packet_loss.loss_rates must lie in [0, 1)"));
                }
                if l.trials == 0 || !(l.path_length > 0.0) || !(l.speed > 0.0) {
                    return Err(Error::config("packet_loss needs trials, a path length and a speed"));
                }
            }
        }
        Ok(())
    }
}

/// One pass/fail comparison in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn below(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.into(), value, threshold, pass: value < threshold }
    }

    fn holds(name: &str, pass: bool) -> Check {
        Check { name: name.into(), value: if pass { 1.0 } else { 0.0 }, threshold: 1.0, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    /// Named summary statistics.
    pub stats: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn stat(&self, name: &str) -> Option<f64> {
        self.stats.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Scenario result: the report plus named CSV tables.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<(String, String)>,
}

impl Outcome {
    /// Writes `report.json` and the tables into `dir`.
    pub fn write(&self, dir: &FsPath) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.tables {
            std::fs::write(dir.join(name), body)?;
        }
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&self.report)? + "\n")?;
        Ok(())
    }
}

fn csv_table<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = pos.ceil() as usize;
    sorted[i] + (sorted[j] - sorted[i]) * (pos - i as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    percentile(&v, 0.5)
}

/// Runs `config`'s scenario.
pub fn run_scenario(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    let seeds = config.seed_list()?;
    match config.scenario()? {
        Scenario::BesselConvergence => bessel_convergence(config, &seeds),
        Scenario::TrrsVsDistance => trrs_vs_distance(config, &seeds),
        Scenario::TrainLoop => train_loop(config, &seeds),
        Scenario::WalkDistance => walk_distance(config, &seeds),
        Scenario::OfficeTrack => office_track(config, &seeds),
        Scenario::ErrorCdf => error_cdf(config, &seeds),
        Scenario::PacketLossSweep => loss_sweep(config, &seeds),
    }
}

// ---- focal spot --------------------------------------------------------

/// Mean TRRS between the focal CIR and probes at each distance, averaged over
/// directions (offset per seed) and seeds.
pub fn radial_trrs(scene_cfg: &SceneConfig, seeds: &[u64], distances: &[f64], directions: usize) -> Result<Vec<(f64, f64)>> {
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let scene = generate_scene_with(&scene_cfg.params(seed, Point::origin(), scene_cfg.region_side))?;
            let reference = synthesize_cir(&scene, scene.rx_focal_pos, 0.0);
            let offset = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d1ec).gen_range(0.0..TAU);
            distances
                .iter()
                .map(|&d| {
                    let mut acc = 0.0;
                    for k in 0..directions {
                        let a = offset + TAU * k as f64 / directions as f64;
                        let probe = synthesize_cir(&scene, scene.rx_focal_pos + unit(a) * d, 0.0);
                        acc += trrs(&reference, &probe)?.value();
                    }
                    Ok(acc / directions as f64)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(distances.len());
    for (i, &d) in distances.iter().enumerate() {
        let (m, s) = mean_std(&per_seed.iter().map(|v| v[i]).collect::<Vec<_>>());
        out.push((d, m));
        let _ = s;
    }
    Ok(out)
}

/// First local minimum and the local maximum after it on a sampled curve,
/// each refined by a three-point parabola.
pub fn first_null_and_peak(curve: &[(f64, f64)]) -> Option<(f64, f64)> {
    let refine = |i: usize| {
        let (x0, y0) = curve[i - 1];
        let (x1, y1) = curve[i];
        let (_, y2) = curve[i + 1];
        let h = x1 - x0;
        let denom = y0 - 2.0 * y1 + y2;
        if denom == 0.0 {
            x1
        } else {
            x1 + 0.5 * h * (y0 - y2) / denom
        }
    };
    let n = curve.len();
    let null = (1..n - 1).find(|&i| curve[i].1 < curve[i - 1].1 && curve[i].1 <= curve[i + 1].1)?;
    let peak = (null + 1..n - 1).find(|&i| curve[i].1 > curve[i - 1].1 && curve[i].1 >= curve[i + 1].1)?;
    Some((refine(null), refine(peak)))
}

#[derive(Serialize)]
struct CurveRow {
    bandwidth_hz: f64,
    distance_wavelengths: f64,
    trrs_mean: f64,
    model: f64,
}

#[derive(Serialize)]
struct RmseRow {
    bandwidth_hz: f64,
    rmse: f64,
    first_null_wavelengths: Option<f64>,
    first_peak_wavelengths: Option<f64>,
}

fn distance_grid(cfg: &FocalConfig, lambda: f64) -> Vec<f64> {
    (0..cfg.points).map(|i| cfg.max_distance_wavelengths * lambda * i as f64 / (cfg.points - 1) as f64).collect()
}

fn bessel_convergence(config: &ExperimentConfig, seeds: &[u64]) -> Result<Outcome> {
    let lambda = config.scene.wavelength();
    let grid = distance_grid(&config.focal, lambda);
    let mut curves = Vec::new();
    let mut rmse_rows = Vec::new();
    let mut stats = Vec::new();
    for &b in &config.focal.bandwidths_hz {
        let scene = SceneConfig { bandwidth_hz: b, ..config.scene };
        let curve = radial_trrs(&scene, seeds, &grid, config.focal.directions)?;
        let mut se = 0.0;
        for &(d, m) in &curve {
            let model = focal_spot_model(d, lambda);
            se += (m - model).powi(2);
            curves.push(CurveRow { bandwidth_hz: b, distance_wavelengths: d / lambda, trrs_mean: m, model });
        }
        let rmse = (se / curve.len() as f64).sqrt();
        let extrema = first_null_and_peak(&curve);
        rmse_rows.push(RmseRow {
            bandwidth_hz: b,
            rmse,
            first_null_wavelengths: extrema.map(|e| e.0 / lambda),
            first_peak_wavelengths: extrema.map(|e| e.1 / lambda),
        });
        stats.push((format!("rmse_{:.0}mhz", b / 1e6), rmse));
    }
    let mut checks = Vec::new();
    let decreasing = rmse_rows.windows(2).all(|w| w[1].rmse < w[0].rmse);
    checks.push(Check::holds("rmse_strictly_decreasing_with_bandwidth", decreasing));
    let widest = rmse_rows
        .iter()
        .max_by(|a, b| a.bandwidth_hz.total_cmp(&b.bandwidth_hz))
        .expect("validated non-empty");
    let rel = |got: Option<f64>, want: f64| got.map_or(f64::INFINITY, |g| (g - want).abs() / want);
    let null_err = rel(widest.first_null_wavelengths, FIRST_NULL_WAVELENGTHS);
    let peak_err = rel(widest.first_peak_wavelengths, FIRST_PEAK_WAVELENGTHS);
    stats.push(("first_null_wavelengths".into(), widest.first_null_wavelengths.unwrap_or(f64::NAN)));
    stats.push(("first_peak_wavelengths".into(), widest.first_peak_wavelengths.unwrap_or(f64::NAN)));
    checks.push(Check::below("first_null_relative_error", null_err, 0.15));
    checks.push(Check::below("first_peak_relative_error", peak_err, 0.15));
    let tables = vec![
        ("bessel_curves.csv".to_string(), csv_table(&curves)?),
        ("bessel_rmse.csv".to_string(), csv_table(&rmse_rows)?),
    ];
    Ok(finish(Scenario::BesselConvergence, seeds, stats, checks, tables))
}

#[derive(Serialize)]
struct MapRow {
    x_wavelengths: f64,
    y_wavelengths: f64,
    trrs: f64,
}

fn trrs_vs_distance(config: &ExperimentConfig, seeds: &[u64]) -> Result<Outcome> {
    let lambda = config.scene.wavelength();
    let grid = distance_grid(&config.focal, lambda);
    let curve = radial_trrs(&config.scene, seeds, &grid, config.focal.directions)?;
    let rows: Vec<CurveRow> = curve
        .iter()
        .map(|&(d, m)| CurveRow {
            bandwidth_hz: config.scene.bandwidth_hz,
            distance_wavelengths: d / lambda,
            trrs_mean: m,
            model: focal_spot_model(d, lambda),
        })
        .collect();

    let scene = generate_scene_with(&config.scene.params(seeds[0], Point::origin(), config.scene.region_side))?;
    let reference = synthesize_cir(&scene, scene.rx_focal_pos, 0.0);
    let (hw, n) = (config.focal.map_half_width_wavelengths, config.focal.map_points);
    let mut map = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let x = -hw + 2.0 * hw * ix as f64 / (n - 1) as f64;
            let y = -hw + 2.0 * hw * iy as f64 / (n - 1) as f64;
            let probe = synthesize_cir(&scene, Point::new(x * lambda, y * lambda), 0.0);
            map.push(MapRow { x_wavelengths: x, y_wavelengths: y, trrs: trrs(&reference, &probe)?.value() });
        }
    }
    let mut stats = Vec::new();
    if let Some((null, peak)) = first_null_and_peak(&curve) {
        stats.push(("first_null_wavelengths".into(), null / lambda));
        stats.push(("first_peak_wavelengths".into(), peak / lambda));
    }
    let rmse = (curve.iter().map(|&(d, m)| (m - focal_spot_model(d, lambda)).powi(2)).sum::<f64>() / curve.len() as f64).sqrt();
    stats.push(("rmse".into(), rmse));
    let tables = vec![
        ("trrs_vs_distance.csv".to_string(), csv_table(&rows)?),
        ("trrs_map.csv".to_string(), csv_table(&map)?),
    ];
    Ok(finish(Scenario::TrrsVsDistance, seeds, stats, Vec::new(), tables))
}

fn finish(scenario: Scenario, seeds: &[u64], stats: Vec<(String, f64)>, checks: Vec<Check>, tables: Vec<(String, String)>) -> Outcome {
    let files = tables.iter().map(|(n, _)| n.clone()).chain(std::iter::once("report.json".to_string())).collect();
    Outcome { report: Report { scenario, seeds: seeds.to_vec(), stats, checks, files }, tables }
}

// ---- walking channels --------------------------------------------------

/// Scene whose scatterers cover `area` grown by `margin`, TX at `tx`.
fn walk_scene(seed: u64, area: Rect, cfg: &WalkSceneConfig, radio: &SceneConfig) -> Result<Scene> {
    // elliptic fields become a disc through the area's corners
    let c = area.center();
    let (hx, hy) = if cfg.shape == RegionShape::Ellipse {
        let r = 0.5 * area.width().hypot(area.height()) + cfg.margin;
        (r, r)
    } else {
        (area.width() / 2.0 + cfg.margin, area.height() / 2.0 + cfg.margin)
    };
    let region = Rect::new(c.x - hx, c.y - hy, c.x + hx, c.y + hy);
    let tx = area.center() + unit(cfg.tx_bearing_deg.to_radians()) * cfg.tx_distance;
    generate_scene_with(&SceneParams {
        seed,
        n_scatterers: cfg.n_scatterers,
        region,
        rx_focal_pos: region.center(),
        tx_pos: tx,
        carrier_hz: radio.carrier_hz,
        bandwidth_hz: radio.bandwidth_hz,
        direct_path: radio.direct_path,
        shape: cfg.shape,
    })
}

fn simulate_cirs(scene: &Scene, path: &Path, motion: &Motion, period: f64) -> Result<Vec<Cir>> {
    synthesize_trajectory(scene, &waypoints(path, motion, period), period)
}

/// Rounded-rectangle loop of the requested length, starting mid-straight.
pub fn train_path(cfg: &TrainConfig) -> Result<Path> {
    let r = cfg.turn_radius;
    let w = (cfg.loop_length + 4.0 * r - TAU * r) / 2.0;
    if !(w >= 2.0 * r) {
        return Err(Error::config("train loop too short for its turn radius"));
    }
    let rect = [Point::new(0.0, 0.0), Point::new(w, 0.0), Point::new(w, 2.0 * r), Point::new(0.0, 2.0 * r)];
    filleted_loop(&rect, r)
}

#[derive(Serialize)]
struct LapRow {
    seed: u64,
    estimated_length: f64,
    error: f64,
}

#[derive(Serialize)]
struct BinRow {
    bin_start: f64,
    bin_end: f64,
    count: usize,
}

/// Estimated length of one lap for `seed`.
pub fn train_lap(config: &ExperimentConfig, seed: u64) -> Result<f64> {
    let t = &config.train_loop;
    let path = train_path(t)?;
    let len = path.length();
    let (mean, swing) = (t.mean_speed, t.speed_swing);
    // turns sit at a quarter and three quarters of the loop
    let speed = move |_: f64, s: f64| mean + swing * (2.0 * TAU * s / len).cos();
    let lead = 1.0;
    let motion = Motion::simulate(speed, -lead, len + lead, 0.001, 0.0)?;
    let bounds = Rect::new(-t.turn_radius, -t.turn_radius, len / 2.0, 3.0 * t.turn_radius);
    let scene = walk_scene(seed, bounds, &t.scene, &config.scene)?;
    let cirs = simulate_cirs(&scene, &path, &motion, t.scene.sample_period)?;
    let dcfg = DistanceConfig { wavelength: scene.wavelength(), sample_period: Some(t.scene.sample_period), ..config.tracker.distance };
    let est = estimate_distance(&cirs, &dcfg)?;
    let t0 = motion.time_at(0.0).expect("motion passes the lap start");
    let t1 = motion.time_at(len).expect("motion passes the lap end");
    Ok(est.track.distance_between(t0, t1))
}

fn train_loop(config: &ExperimentConfig, seeds: &[u64]) -> Result<Outcome> {
    let t = &config.train_loop;
    let truth = train_path(t)?.length();
    let laps = seeds.par_iter().map(|&s| train_lap(config, s)).collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = laps.iter().map(|l| l - truth).collect();
    let (mean_err, std_err) = mean_std(&errors);
    let rows: Vec<LapRow> = seeds.iter().zip(&laps).map(|(&seed, &l)| LapRow { seed, estimated_length: l, error: l - truth }).collect();

    let lo = (laps.iter().cloned().fold(f64::INFINITY, f64::min) / t.histogram_bin).floor() * t.histogram_bin;
    let hi = laps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n_bins = (((hi - lo) / t.histogram_bin).floor() as usize + 1).min(10_000);
    let mut hist: Vec<BinRow> = (0..n_bins)
        .map(|i| BinRow { bin_start: lo + i as f64 * t.histogram_bin, bin_end: lo + (i + 1) as f64 * t.histogram_bin, count: 0 })
        .collect();
    for l in &laps {
        let i = (((l - lo) / t.histogram_bin).floor() as usize).min(n_bins - 1);
        hist[i].count += 1;
    }
    let stats = vec![
        ("true_length".into(), truth),
        ("mean_estimate".into(), truth + mean_err),
        ("mean_error".into(), mean_err),
        ("std_error".into(), std_err),
    ];
    let checks = vec![
        Check::below("abs_mean_error", mean_err.abs(), t.tolerance_mean),
        Check::below("std_error", std_err, t.tolerance_std),
    ];
    let tables = vec![("train_laps.csv".to_string(), csv_table(&rows)?), ("train_histogram.csv".to_string(), csv_table(&hist)?)];
    Ok(finish(Scenario::TrainLoop, seeds, stats, checks, tables))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WalkRow {
    pub seed: u64,
    pub true_speed: f64,
    pub estimated_speed: f64,
    pub relative_error: f64,
}

/// Straight constant-speed walk through a fresh scene; returns the mean speed
/// estimated over the trimmed interior.
pub fn constant_speed_walk(config: &ExperimentConfig, seed: u64, speed: f64) -> Result<f64> {
    let w = &config.walk;
    let dir = unit(w.headings_deg[seed as usize % w.headings_deg.len()].to_radians());
    let half = 0.5 * speed * w.duration;
    let a = Point::origin() - dir * half;
    let b = Point::origin() + dir * half;
    let path = filleted_polyline(&[a, b], 0.0)?;
    let motion = Motion::simulate(|_, _| speed, 0.0, path.length(), 0.001, 0.0)?;
    let area = Rect::new(-half, -half, half, half);
    let scene = walk_scene(seed, area, &w.scene, &config.scene)?;
    let cirs = simulate_cirs(&scene, &path, &motion, w.scene.sample_period)?;
    let dcfg = DistanceConfig { wavelength: scene.wavelength(), sample_period: Some(w.scene.sample_period), ..config.tracker.distance };
    let est = estimate_distance(&cirs, &dcfg)?;
    let (t0, t1) = (w.trim, motion.duration() - w.trim);
    Ok(est.track.distance_between(t0, t1) / (t1 - t0))
}

/// Speed recovered from exact `J0²(k·v·τ)` samples at `period` spacing.
pub fn oracle_speed(speed: f64, wavelength: f64, period: f64, cfg: &DistanceConfig) -> Result<f64> {
    let n = (cfg.max_lag / period + 1e-9).floor() as usize;
    let profile: Vec<(f64, f64)> = (1..=n).map(|j| {
        let lag = j as f64 * period;
        (lag, focal_spot_model(speed * lag, wavelength))
    }).collect();
    Ok(speed_from_profile(0.0, &profile, wavelength, &cfg.peak)?.speed)
}

fn walk_distance(config: &ExperimentConfig, seeds: &[u64]) -> Result<Outcome> {
    let w = &config.walk;
    let jobs: Vec<(u64, f64)> = w.speeds.iter().flat_map(|&v| seeds.iter().map(move |&s| (s, v))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(seed, v)| {
            let est = constant_speed_walk(config, seed, v)?;
            Ok(WalkRow { seed, true_speed: v, estimated_speed: est, relative_error: (est - v) / v })
        })
        .collect::<Result<Vec<_>>>()?;
    let lambda = config.scene.wavelength();
    let oracle: Vec<WalkRow> = w
        .speeds
        .iter()
        .map(|&v| {
            let est = oracle_speed(v, lambda, w.scene.sample_period, &config.tracker.distance)?;
            Ok(WalkRow { seed: 0, true_speed: v, estimated_speed: est, relative_error: (est - v) / v })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.relative_error.abs()).fold(0.0, f64::max);
    let worst_oracle = oracle.iter().map(|r| r.relative_error.abs()).fold(0.0, f64::max);
    let mut stats = vec![("worst_relative_error".into(), worst), ("worst_oracle_relative_error".into(), worst_oracle)];
    for &v in &w.speeds {
        let errs: Vec<f64> = rows.iter().filter(|r| r.true_speed == v).map(|r| r.relative_error).collect();
        stats.push((format!("mean_relative_error_{v}"), mean_std(&errs).0));
    }
    let checks = vec![
        Check::below("worst_relative_error", worst, w.tolerance),
        Check::below("worst_oracle_relative_error", worst_oracle, w.oracle_tolerance),
    ];
    let tables = vec![("walk_speeds.csv".to_string(), csv_table(&rows)?), ("walk_oracle.csv".to_string(), csv_table(&oracle)?)];
    Ok(finish(Scenario::WalkDistance, seeds, stats, checks, tables))
}

// ---- office ------------------------------------------------------------

/// One simulated office walk along the full route.
pub struct OfficeWalk {
    pub path: Path,
    pub motion: Motion,
    pub cirs: Vec<Cir>,
    pub imu: Vec<ImuSample>,
    pub wavelength: f64,
}

pub fn office_walk(config: &ExperimentConfig, seed: u64, route_length: f64) -> Result<OfficeWalk> {
    let o = &config.office;
    let path = filleted_polyline(&office_route(), o.corner_radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x0ff1ce));
    let v0 = rng.gen_range(o.speed_min..=o.speed_max);
    let phase = rng.gen_range(0.0..TAU);
    let (swing, hz) = (o.gait_swing, o.gait_hz);
    let speed = move |t: f64, _: f64| v0 * (1.0 + swing * (TAU * hz * t + phase).sin());
    let motion = Motion::simulate(speed, 0.0, route_length.min(path.length()), 0.001, 0.5)?.with_lead_in(1.0);
    let tilt = o.max_tilt_deg.to_radians();
    let spec = ImuSpec {
        roll: rng.gen_range(-tilt..=tilt),
        pitch: rng.gen_range(-tilt..=tilt),
        yaw_bias: o.gyro_drift_deg_per_min.to_radians() / 60.0,
        ..o.imu
    };
    let imu = synthesize_imu(&path, &motion, &spec, &mut rng)?;
    let plan = office_plan();
    let scene = walk_scene(seed, plan.bounds, &o.scene, &config.scene)?;
    let cirs = simulate_cirs(&scene, &path, &motion, o.scene.sample_period)?;
    Ok(OfficeWalk { path, motion, cirs, imu, wavelength: scene.wavelength() })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EndpointRow {
    pub seed: u64,
    pub path_length: f64,
    pub error_corrected: f64,
    pub error_uncorrected: f64,
}

fn office_start(path: &Path) -> Pose {
    Pose { timestamp: 0.0, position: path.point_at(0.0), heading: path.heading_at(0.0) }
}

/// Endpoint errors with and without the map corrector for a walk cut at
/// each requested path length.
pub fn office_endpoints(config: &ExperimentConfig, seed: u64, walk: &OfficeWalk) -> Result<Vec<EndpointRow>> {
    let o = &config.office;
    let plan = office_plan();
    let open = FloorPlan::open(plan.bounds);
    let dcfg = DistanceConfig {
        wavelength: walk.wavelength * (1.0 + o.distance_scale_error),
        sample_period: Some(o.scene.sample_period),
        ..config.tracker.distance
    };
    let start = office_start(&walk.path);
    let mut rows = Vec::new();
    for &len in &o.path_lengths {
        let t_end = walk.motion.time_at(len).ok_or_else(|| Error::config("path length beyond the simulated walk"))?;
        let truth = walk.path.point_at(len);
        let cirs: Vec<Cir> = walk.cirs.iter().filter(|c| c.timestamp <= t_end + 1e-9).cloned().collect();
        let imu: Vec<ImuSample> = walk.imu.iter().filter(|s| s.timestamp <= t_end + 1e-9).cloned().collect();
        let dist = estimate_distance(&cirs, &dcfg)?;
        let span = (cirs[0].timestamp, cirs[cirs.len() - 1].timestamp);
        let err = |corrector: bool, plan: &FloorPlan| -> Result<f64> {
            let cfg = TrackerConfig { corrector, distance: dcfg, ..config.tracker };
            let out = track_with_distance(&dist.track, span, &imu, plan, start, &cfg)?;
            let end = out.final_position().expect("trace holds the start pose");
            Ok((end - truth).norm())
        };
        rows.push(EndpointRow {
            seed,
            path_length: len,
            error_corrected: err(true, &plan)?,
            error_uncorrected: err(false, &open)?,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct CdfRow {
    error: f64,
    cdf_corrected: f64,
    cdf_uncorrected: f64,
}

fn endpoint_summary(rows: &[EndpointRow], tolerance: f64) -> (Vec<(String, f64)>, Vec<Check>) {
    let mut with: Vec<f64> = rows.iter().map(|r| r.error_corrected).collect();
    let mut without: Vec<f64> = rows.iter().map(|r| r.error_uncorrected).collect();
    with.sort_by(f64::total_cmp);
    without.sort_by(f64::total_cmp);
    let (mw, mo) = (percentile(&with, 0.5), percentile(&without, 0.5));
    let stats = vec![
        ("median_error_corrected".into(), mw),
        ("p80_error_corrected".into(), percentile(&with, 0.8)),
        ("median_error_uncorrected".into(), mo),
        ("p80_error_uncorrected".into(), percentile(&without, 0.8)),
    ];
    let checks = vec![
        Check::below("median_error_corrected", mw, tolerance),
        Check { name: "corrector_beats_dead_reckoning".into(), value: mw, threshold: mo, pass: mw < mo },
    ];
    (stats, checks)
}

fn error_cdf(config: &ExperimentConfig, seeds: &[u64]) -> Result<Outcome> {
    let longest = config.office.path_lengths.iter().cloned().fold(0.0, f64::max);
    let rows: Vec<EndpointRow> = seeds
        .par_iter()
        .map(|&seed| {
            let walk = office_walk(config, seed, longest + 0.5)?;
            office_endpoints(config, seed, &walk)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let (stats, checks) = endpoint_summary(&rows, config.office.median_tolerance);
    let n = rows.len() as f64;
    let mut levels: Vec<f64> = rows.iter().flat_map(|r| [r.error_corrected, r.error_uncorrected]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let cdf: Vec<CdfRow> = levels
        .iter()
        .map(|&e| CdfRow {
            error: e,
            cdf_corrected: rows.iter().filter(|r| r.error_corrected <= e).count() as f64 / n,
            cdf_uncorrected: rows.iter().filter(|r| r.error_uncorrected <= e).count() as f64 / n,
        })
        .collect();
    let tables = vec![("endpoint_errors.csv".to_string(), csv_table(&rows)?), ("error_cdf.csv".to_string(), csv_table(&cdf)?)];
    Ok(finish(Scenario::ErrorCdf, seeds, stats, checks, tables))
}

#[derive(Serialize)]
struct TruthRow {
    timestamp: f64,
    x: f64,
    y: f64,
}

fn office_track(config: &ExperimentConfig, seeds: &[u64]) -> Result<Outcome> {
    let longest = config.office.path_lengths.iter().cloned().fold(0.0, f64::max);
    let plan = office_plan();
    let mut tables = vec![("office_plan.json".to_string(), plan.to_json()? + "\n")];
    let mut rows = Vec::new();
    for &seed in seeds {
        let walk = office_walk(config, seed, longest + 0.5)?;
        let t_end = walk.motion.time_at(longest).expect("walk reaches its length");
        let cirs: Vec<Cir> = walk.cirs.iter().filter(|c| c.timestamp <= t_end + 1e-9).cloned().collect();
        let imu: Vec<ImuSample> = walk.imu.iter().filter(|s| s.timestamp <= t_end + 1e-9).cloned().collect();
        let dcfg = DistanceConfig {
            wavelength: walk.wavelength * (1.0 + config.office.distance_scale_error),
            sample_period: Some(config.office.scene.sample_period),
            ..config.tracker.distance
        };
        let dist = estimate_distance(&cirs, &dcfg)?;
        let span = (cirs[0].timestamp, cirs[cirs.len() - 1].timestamp);
        let start = office_start(&walk.path);
        let truth = walk.path.point_at(longest);
        let mut errs = [0.0; 2];
        for (k, corrector) in [true, false].into_iter().enumerate() {
            let cfg = TrackerConfig { corrector, distance: dcfg, ..config.tracker };
            let p = if corrector { plan.clone() } else { FloorPlan::open(plan.bounds) };
            let out = track_with_distance(&dist.track, span, &imu, &p, start, &cfg)?;
            errs[k] = (out.final_position().expect("non-empty trace") - truth).norm();
            let mut buf = Vec::new();
            write_trace_csv(&out.trace, &mut buf)?;
            let tag = if corrector { "corrected" } else { "dead_reckoning" };
            tables.push((format!("trace_seed{seed}_{tag}.csv"), String::from_utf8(buf).expect("csv is UTF-8")));
        }
        let truth_rows: Vec<TruthRow> = crate::channel::sample_times(0.0, t_end, config.tracker.step_period)
            .into_iter()
            .map(|t| {
                let p = walk.path.point_at(walk.motion.s_at(t));
                TruthRow { timestamp: t, x: p.x, y: p.y }
            })
            .collect();
        tables.push((format!("truth_seed{seed}.csv"), csv_table(&truth_rows)?));
        rows.push(EndpointRow { seed, path_length: longest, error_corrected: errs[0], error_uncorrected: errs[1] });
    }
    let stats = vec![
        ("median_error_corrected".into(), median(&rows.iter().map(|r| r.error_corrected).collect::<Vec<_>>())),
        ("median_error_uncorrected".into(), median(&rows.iter().map(|r| r.error_uncorrected).collect::<Vec<_>>())),
    ];
    tables.push(("office_endpoints.csv".to_string(), csv_table(&rows)?));
    Ok(finish(Scenario::OfficeTrack, seeds, stats, Vec::new(), tables))
}

// ---- packet loss ---------------------------------------------------------

/// Straight walk of `path_length` with a second of standing at each end.
pub fn loss_trajectory(config: &ExperimentConfig, seed: u64) -> Result<Vec<Cir>> {
    let l = &config.packet_loss;
    let half = l.path_length / 2.0;
    let path = filleted_polyline(&[Point::new(-half, 0.0), Point::new(half, 0.0)], 0.0)?;
    let speed = l.speed;
    let motion = Motion::simulate(|_, _| speed, 0.0, path.length(), 0.001, 1.0)?.with_lead_in(1.0);
    let scene = walk_scene(seed, Rect::new(-half, -1.0, half, 1.0), &l.scene, &config.scene)?;
    simulate_cirs(&scene, &path, &motion, l.scene.sample_period)
}

fn loss_sweep(config: &ExperimentConfig, seeds: &[u64]) -> Result<Outcome> {
    let l = &config.packet_loss;
    let mut all: Vec<LossSweepRow> = Vec::new();
    let mut per_seed = Vec::new();
    for &seed in seeds {
        let traj = loss_trajectory(config, seed)?;
        let wavelength = crate::channel::SPEED_OF_LIGHT / config.scene.carrier_hz;
        let dcfg = DistanceConfig { wavelength, sample_period: Some(l.scene.sample_period), ..config.tracker.distance };
        let rows = packet_loss_sweep(&traj, &l.loss_rates, l.trials, seed, &dcfg)?;
        per_seed.push(rows.clone());
        all.extend(rows);
    }
    #[derive(Serialize)]
    struct Row {
        seed: u64,
        loss_rate: f64,
        mean_distance: f64,
        std_distance: f64,
        trials: usize,
    }
    let table: Vec<Row> = seeds
        .iter()
        .zip(&per_seed)
        .flat_map(|(&seed, rows)| {
            rows.iter().map(move |r| Row { seed, loss_rate: r.loss_rate, mean_distance: r.mean_distance, std_distance: r.std_distance, trials: r.trials })
        })
        .collect();
    let mean_ok = per_seed.iter().all(|rows| rows.windows(2).all(|w| w[1].mean_distance <= w[0].mean_distance));
    let std_ok = per_seed.iter().all(|rows| rows.windows(2).all(|w| w[1].std_distance >= w[0].std_distance));
    let mut stats = Vec::new();
    for r in &per_seed[0] {
        stats.push((format!("mean_distance_{}", r.loss_rate), r.mean_distance));
        stats.push((format!("std_distance_{}", r.loss_rate), r.std_distance));
    }
    let checks = vec![
        Check::holds("mean_non_increasing_in_loss", mean_ok),
        Check::holds("std_non_decreasing_in_loss", std_ok),
    ];
    Ok(finish(Scenario::PacketLossSweep, seeds, stats, checks, vec![("packet_loss.csv".to_string(), csv_table(&table)?)]))
}

/// Ground-truth receiver waypoints are exposed for the CLI `simulate` verb.
pub fn straight_waypoints(from: Point, to: Point, speed: f64, period: f64) -> Result<Vec<Waypoint>> {
    if !(speed > 0.0) {
        return Err(Error::param("speed must be positive"));
    }
    let path = filleted_polyline(&[from, to], 0.0)?;
    let motion = Motion::simulate(|_, _| speed, 0.0, path.length(), 0.001, 0.0)?;
    Ok(waypoints(&path, &motion, period))
}

pub fn output_dir(config: &ExperimentConfig) -> &FsPath {
    &config.output_dir
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert_eq!("error-cdf".parse::<Scenario>().unwrap(), Scenario::ErrorCdf);
        assert!("nope".parse::<Scenario>().unwrap_err().is_config());
    }

    #[test]
    fn config_validation() {
        let cfg = ExperimentConfig::from_toml("scenario = \"train_loop\"\nseeds = []\n").unwrap();
        assert!(cfg.validate().unwrap_err().is_config());
        let cfg = ExperimentConfig::from_toml("scenario = \"packet_loss_sweep\"\n[packet_loss]\nloss_rates = [0.0, 1.0]\n").unwrap();
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml("scenario = \"train_loop\"\nbogus = 1\n").is_err());
        let cfg = ExperimentConfig::from_toml("scenario = \"error_cdf\"\n[office]\npath_lengths = [500.0]\n").unwrap();
        assert!(cfg.validate().is_err());
        let ok = ExperimentConfig::for_scenario(Scenario::TrainLoop);
        ok.validate().unwrap();
        assert_eq!(ok.seed_list().unwrap().len(), 100);
        assert_eq!(ok.with_base_seed(7).unwrap().seed_list().unwrap()[..2], [7, 8]);
    }

    #[test]
    fn train_path_length() {
        let p = train_path(&TrainConfig::default()).unwrap();
        assert!((p.length() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn extrema_of_model_curve() {
        let lambda = 0.0517;
        let curve: Vec<(f64, f64)> = (0..201).map(|i| {
            let d = 2.0 * lambda * i as f64 / 200.0;
            (d, focal_spot_model(d, lambda))
        }).collect();
        let (null, peak) = first_null_and_peak(&curve).unwrap();
        assert!((null / lambda - FIRST_NULL_WAVELENGTHS).abs() < 0.01);
        assert!((peak / lambda - FIRST_PEAK_WAVELENGTHS).abs() < 0.01);
    }
}
