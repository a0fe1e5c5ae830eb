//! Road scenarios, vehicle kinematics, antenna mounts and coverage geometry.
//!
//! A side-looking reader antenna with beamwidth `alpha` mounted at angle
//! `theta` (0 = boresight perpendicular to the vehicle's longitudinal axis,
//! positive = tilted toward the direction of travel) covers a road-parallel
//! window at lateral standoff `l`:
//!
//! - boresight mount: `c = 2 * l * tan(alpha/2)`
//! - tilted mount:    `c = l * tan(theta + alpha/2) - l * tan(theta - alpha/2)`
//!
//! Tilting trades coverage length against an extra round-trip path loss of
//! `-40 * log10(cos(theta))` dB at the closest point, independent of `l`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Miles-per-hour to meters-per-second.
pub fn mph_to_mps(mph: f64) -> f64 {
    mph * 0.44704
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// A tangent argument reached or passed pi/2, where the beam edge no
    /// longer intersects the roadside line.
    #[error("beam edge angle {0} rad reaches or exceeds pi/2; no roadside intersection")]
    TangentDomain(f64),
    /// An angle parameter is outside its documented domain.
    #[error("angle {0} rad outside its valid domain")]
    AngleDomain(f64),
    #[error("distance must be strictly positive, got {0}")]
    NonPositiveDistance(f64),
    /// The tag never enters the beam within the scenario horizon.
    #[error("tag never enters the antenna beam within the scenario horizon")]
    NeverInBeam,
}

/// Normalizes an angle to `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

// ---------------------------------------------------------------------------
// Poses and motion
// ---------------------------------------------------------------------------

/// Planar vehicle pose; heading is normalized to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose2D {
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
}

impl Pose2D {
    pub fn new(x_m: f64, y_m: f64, heading_rad: f64) -> Self {
        Self { x_m, y_m, heading_rad: normalize_angle(heading_rad) }
    }
}

/// One piecewise-constant speed segment, active from `t_start_s` until the
/// next segment starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedSegment {
    pub t_start_s: f64,
    pub speed_mps: f64,
}

/// Piecewise-constant speed profile. Segments are sorted by start time and
/// the first segment must start at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpeedProfile {
    pub segments: Vec<SpeedSegment>,
}

impl SpeedProfile {
    pub fn constant(speed_mps: f64) -> Self {
        Self { segments: vec![SpeedSegment { t_start_s: 0.0, speed_mps }] }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.segments.is_empty() {
            return Err("speed profile must contain at least one segment".into());
        }
        if self.segments[0].t_start_s != 0.0 {
            return Err("first speed segment must start at t = 0".into());
        }
        for w in self.segments.windows(2) {
            if w[1].t_start_s <= w[0].t_start_s {
                return Err("speed segments must have strictly increasing start times".into());
            }
        }
        if self.segments.iter().any(|s| s.speed_mps < 0.0 || !s.speed_mps.is_finite()) {
            return Err("speeds must be finite and non-negative".into());
        }
        Ok(())
    }

    pub fn speed_at(&self, t_s: f64) -> f64 {
        let mut v = self.segments[0].speed_mps;
        for s in &self.segments {
            if s.t_start_s <= t_s {
                v = s.speed_mps;
            } else {
                break;
            }
        }
        v
    }

    /// Distance travelled from t = 0 to `t_s`.
    pub fn distance_at(&self, t_s: f64) -> f64 {
        let mut dist = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.t_start_s >= t_s {
                break;
            }
            let seg_end = self
                .segments
                .get(i + 1)
                .map(|n| n.t_start_s.min(t_s))
                .unwrap_or(t_s);
            dist += seg.speed_mps * (seg_end - seg.t_start_s);
        }
        dist
    }

    pub fn max_speed(&self) -> f64 {
        self.segments.iter().map(|s| s.speed_mps).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Antenna mount
// ---------------------------------------------------------------------------

/// Which way the antenna body faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facing {
    /// Horizontal boresight out the vehicle's side (traffic-sign reading).
    /// The side is the sign of `lateral_offset_m`: non-negative offsets face
    /// the vehicle's left (+y in the vehicle frame), negative face right.
    SideHorizontal,
    /// Boresight points at the road surface (lane-marker reading), tilted
    /// forward by the mount angle.
    Downward,
}

/// Gain shape inside the beam cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamPattern {
    /// Full boresight gain anywhere inside the cone, nothing outside.
    FlatTop,
    /// Gain rolls off as `cos(psi)^exponent` inside the cone.
    CosinePower { exponent: f64 },
}

/// Reader antenna rigidly mounted on the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaMount {
    /// Tilt from perpendicular toward the direction of travel (radians).
    pub mount_angle_rad: f64,
    /// Full cone beamwidth (radians).
    pub beamwidth_rad: f64,
    /// Height above the road plane (meters).
    pub height_m: f64,
    /// Lateral offset from the vehicle centerline (meters, +y = left).
    pub lateral_offset_m: f64,
    /// Antenna gain on boresight (dBi).
    pub boresight_gain_dbi: f64,
    pub facing: Facing,
    pub pattern: BeamPattern,
}

impl Default for AntennaMount {
    fn default() -> Self {
        Self {
            mount_angle_rad: 45f64.to_radians(),
            beamwidth_rad: 60f64.to_radians(),
            height_m: 0.9,
            lateral_offset_m: -0.9,
            boresight_gain_dbi: 6.0,
            facing: Facing::SideHorizontal,
            pattern: BeamPattern::FlatTop,
        }
    }
}

impl AntennaMount {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.beamwidth_rad > 0.0 && self.beamwidth_rad < PI) {
            return Err(format!("beamwidth_rad {} outside (0, pi)", self.beamwidth_rad));
        }
        if !(0.0..FRAC_PI_2).contains(&self.mount_angle_rad) {
            return Err(format!("mount_angle_rad {} outside [0, pi/2)", self.mount_angle_rad));
        }
        if self.mount_angle_rad + self.beamwidth_rad / 2.0 >= FRAC_PI_2 {
            return Err(format!(
                "mount_angle_rad + beamwidth_rad/2 = {} must stay below pi/2 so the beam's \
                 leading edge still meets the roadside",
                self.mount_angle_rad + self.beamwidth_rad / 2.0
            ));
        }
        if self.height_m < 0.0 {
            return Err(format!("height_m {} must be non-negative", self.height_m));
        }
        if matches!(self.pattern, BeamPattern::CosinePower { exponent } if exponent < 0.0) {
            return Err("cosine pattern exponent must be non-negative".into());
        }
        Ok(())
    }

    /// Antenna phase-center position in world coordinates for a vehicle pose.
    pub fn world_position(&self, pose: &Pose2D) -> [f64; 3] {
        let (sh, ch) = pose.heading_rad.sin_cos();
        // Vehicle frame: x forward, y left, z up.
        [
            pose.x_m - sh * self.lateral_offset_m,
            pose.y_m + ch * self.lateral_offset_m,
            self.height_m,
        ]
    }

    /// Boresight unit vector in world coordinates for a vehicle pose.
    pub fn world_boresight(&self, pose: &Pose2D) -> [f64; 3] {
        let theta = self.mount_angle_rad;
        let local = match self.facing {
            Facing::SideHorizontal => {
                let side = if self.lateral_offset_m < 0.0 { -1.0 } else { 1.0 };
                [theta.sin(), side * theta.cos(), 0.0]
            }
            Facing::Downward => [theta.sin(), 0.0, -theta.cos()],
        };
        let (sh, ch) = pose.heading_rad.sin_cos();
        [ch * local[0] - sh * local[1], sh * local[0] + ch * local[1], local[2]]
    }
}

// ---------------------------------------------------------------------------
// Tags and scenarios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagRole {
    LaneMarker,
    TrafficSign,
    SensorTag,
}

/// A passive tag fixed to the road infrastructure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagPlacement {
    /// World position `[x, y, z]` in meters.
    pub position_m: [f64; 3],
    pub role: TagRole,
    /// EPC payload length in bits (before protocol-control and CRC fields).
    #[serde(default = "default_epc_bits")]
    pub epc_bits: u32,
    /// Words of user memory available for READ access.
    #[serde(default)]
    pub user_memory_words: u32,
    /// Outward normal of the tag face. `None` = isotropic. When set, the tag
    /// only presents its antenna gain to readers in the front hemisphere;
    /// behind the face it is attenuated by the configured back-lobe level
    /// (traffic signs face oncoming traffic).
    #[serde(default)]
    pub facing: Option<[f64; 3]>,
}

fn default_epc_bits() -> u32 {
    96
}

impl TagPlacement {
    pub fn sign(x_m: f64, y_m: f64, z_m: f64, facing: [f64; 3]) -> Self {
        Self {
            position_m: [x_m, y_m, z_m],
            role: TagRole::TrafficSign,
            epc_bits: 96,
            user_memory_words: 0,
            facing: Some(facing),
        }
    }

    pub fn lane_marker(x_m: f64, y_m: f64) -> Self {
        Self {
            position_m: [x_m, y_m, 0.0],
            role: TagRole::LaneMarker,
            epc_bits: 96,
            user_memory_words: 0,
            facing: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.position_m[2] < 0.0 {
            return Err("tag z position must be non-negative".into());
        }
        if self.role == TagRole::LaneMarker && self.position_m[2] > 0.05 {
            return Err("lane markers sit on the road surface (z <= 0.05 m)".into());
        }
        if self.epc_bits == 0 || self.epc_bits % 8 != 0 {
            return Err("epc_bits must be a positive multiple of 8".into());
        }
        if let Some(f) = self.facing {
            let norm = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
            if norm < 1e-9 {
                return Err("tag facing vector must be non-zero".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    LaneStraight,
    LaneCustom,
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ScenarioId::S1 => "s1",
            ScenarioId::S2 => "s2",
            ScenarioId::S3 => "s3",
            ScenarioId::S4 => "s4",
            ScenarioId::S5 => "s5",
            ScenarioId::S6 => "s6",
            ScenarioId::LaneStraight => "lane_straight",
            ScenarioId::LaneCustom => "lane_custom",
        };
        f.write_str(s)
    }
}

/// Gentle in-lane lateral drift around the lane center, expressed as a
/// sinusoid in distance travelled. This provides the ground-truth lateral
/// motion that lane-position estimates are correlated against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LateralDrift {
    pub amplitude_m: f64,
    pub wavelength_m: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

/// A road scenario: lane geometry, tag placements and the vehicle's motion.
///
/// The vehicle starts at `start` and follows either a straight line
/// (`curvature_per_m` = 0) or a circular arc of radius `1/curvature_per_m`
/// turning left (counter-clockwise). Tag positions are world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadScenario {
    pub id: ScenarioId,
    /// Lane width (meters).
    pub lane_width_m: f64,
    /// Reader-to-roadside lateral standoff used by the preset layout (meters).
    pub lateral_standoff_m: f64,
    /// Path curvature (1/meters, 0 for straight; positive turns left).
    pub curvature_per_m: f64,
    pub tag_placements: Vec<TagPlacement>,
    pub speed_profile: SpeedProfile,
    /// Largest heading deviation from the lane direction the scenario allows
    /// (radians); bounds the lateral speed used by the windowing constraint.
    pub max_turn_angle_rad: f64,
    pub start: Pose2D,
    /// Time span over which the scenario is defined (seconds).
    pub horizon_s: f64,
    #[serde(default)]
    pub lateral_drift: Option<LateralDrift>,
}

impl RoadScenario {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lane_width_m > 0.0) {
            return Err("lane_width_m must be positive".into());
        }
        if !(self.lateral_standoff_m > 0.0) {
            return Err("lateral_standoff_m must be positive".into());
        }
        if self.curvature_per_m < 0.0 {
            return Err("curvature_per_m must be non-negative".into());
        }
        if !(0.0..FRAC_PI_2).contains(&self.max_turn_angle_rad) {
            return Err("max_turn_angle_rad must be in [0, pi/2)".into());
        }
        if !(self.horizon_s > 0.0) {
            return Err("horizon_s must be positive".into());
        }
        self.speed_profile.validate()?;
        for (i, t) in self.tag_placements.iter().enumerate() {
            t.validate().map_err(|e| format!("tag_placements[{i}]: {e}"))?;
        }
        if let Some(d) = &self.lateral_drift {
            if self.curvature_per_m != 0.0 {
                return Err("lateral_drift is only supported on straight roads".into());
            }
            if d.amplitude_m < 0.0 || !(d.wavelength_m > 0.0) {
                return Err("lateral_drift requires amplitude >= 0 and wavelength > 0".into());
            }
            let max_slope = (d.amplitude_m * 2.0 * PI / d.wavelength_m).atan();
            if max_slope > self.max_turn_angle_rad {
                return Err(format!(
                    "lateral drift heading slope {max_slope} rad exceeds max_turn_angle_rad"
                ));
            }
        }
        Ok(())
    }

    /// Vehicle pose at time `t_s`, interpolated on the scenario's path.
    pub fn pose_at(&self, t_s: f64) -> Pose2D {
        let s = self.speed_profile.distance_at(t_s);
        let h0 = self.start.heading_rad;
        if self.curvature_per_m == 0.0 {
            let (sh, ch) = h0.sin_cos();
            let mut x = self.start.x_m + ch * s;
            let mut y = self.start.y_m + sh * s;
            let mut heading = h0;
            if let Some(d) = &self.lateral_drift {
                let k = 2.0 * PI / d.wavelength_m;
                let off = d.amplitude_m * (k * s + d.phase_rad).sin();
                let slope = d.amplitude_m * k * (k * s + d.phase_rad).cos();
                // Offset along the left-perpendicular of the base direction.
                x -= sh * off;
                y += ch * off;
                heading = normalize_angle(h0 + slope.atan());
            }
            Pose2D { x_m: x, y_m: y, heading_rad: heading }
        } else {
            let k = self.curvature_per_m;
            let h = h0 + k * s;
            Pose2D {
                x_m: self.start.x_m + (h.sin() - h0.sin()) / k,
                y_m: self.start.y_m - (h.cos() - h0.cos()) / k,
                heading_rad: normalize_angle(h),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Coverage-length relations
// ---------------------------------------------------------------------------

/// Road-parallel coverage length of a perpendicular (boresight) mount:
/// `2 * l * tan(alpha/2)`.
pub fn coverage_length_boresight(
    standoff_m: f64,
    beamwidth_rad: f64,
) -> Result<f64, GeometryError> {
    if !(standoff_m > 0.0) {
        return Err(GeometryError::NonPositiveDistance(standoff_m));
    }
    if !(beamwidth_rad > 0.0) || beamwidth_rad / 2.0 >= FRAC_PI_2 {
        return Err(GeometryError::AngleDomain(beamwidth_rad));
    }
    Ok(2.0 * standoff_m * (beamwidth_rad / 2.0).tan())
}

/// Road-parallel coverage length of a mount tilted by `theta` toward the
/// direction of travel: `l * tan(theta + alpha/2) - l * tan(theta - alpha/2)`.
///
/// Reduces to the boresight form at `theta = 0` and grows monotonically with
/// `theta` while `theta + alpha/2 < pi/2`.
pub fn coverage_length_tilted(
    standoff_m: f64,
    beamwidth_rad: f64,
    mount_angle_rad: f64,
) -> Result<f64, GeometryError> {
    if !(standoff_m > 0.0) {
        return Err(GeometryError::NonPositiveDistance(standoff_m));
    }
    if !(beamwidth_rad > 0.0) || beamwidth_rad >= PI {
        return Err(GeometryError::AngleDomain(beamwidth_rad));
    }
    if !(0.0..FRAC_PI_2).contains(&mount_angle_rad) {
        return Err(GeometryError::AngleDomain(mount_angle_rad));
    }
    let lead = mount_angle_rad + beamwidth_rad / 2.0;
    if lead >= FRAC_PI_2 {
        return Err(GeometryError::TangentDomain(lead));
    }
    let trail = mount_angle_rad - beamwidth_rad / 2.0;
    Ok(standoff_m * (lead.tan() - trail.tan()))
}

/// Extra round-trip path loss of a tilted mount relative to boresight at the
/// closest point: `-40 * log10(cos(theta))` dB. Positive = more loss.
/// Independent of the standoff distance (which must still be positive).
pub fn path_loss_delta_db(standoff_m: f64, mount_angle_rad: f64) -> Result<f64, GeometryError> {
    if !(standoff_m > 0.0) {
        return Err(GeometryError::NonPositiveDistance(standoff_m));
    }
    if !(0.0..FRAC_PI_2).contains(&mount_angle_rad) {
        return Err(GeometryError::AngleDomain(mount_angle_rad));
    }
    Ok(-40.0 * mount_angle_rad.cos().log10())
}

// ---------------------------------------------------------------------------
// Antenna-tag relative geometry
// ---------------------------------------------------------------------------

/// Instantaneous antenna-to-tag relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaTagGeometry {
    /// Euclidean antenna-to-tag distance (meters).
    pub range_m: f64,
    /// Angle between boresight and the tag direction (radians, `[0, pi]`).
    pub off_boresight_rad: f64,
    /// Whether the tag sits inside the beam cone.
    pub in_beam: bool,
}

/// Computes range, off-boresight angle and beam membership for one pose.
/// A tag behind the antenna plane is never in beam.
pub fn antenna_tag_geometry(
    pose: &Pose2D,
    mount: &AntennaMount,
    tag: &TagPlacement,
) -> AntennaTagGeometry {
    let apos = mount.world_position(pose);
    let bore = mount.world_boresight(pose);
    let d = [
        tag.position_m[0] - apos[0],
        tag.position_m[1] - apos[1],
        tag.position_m[2] - apos[2],
    ];
    let range = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if range < 1e-9 {
        return AntennaTagGeometry { range_m: range, off_boresight_rad: 0.0, in_beam: true };
    }
    let dot = (d[0] * bore[0] + d[1] * bore[1] + d[2] * bore[2]) / range;
    let off = dot.clamp(-1.0, 1.0).acos();
    AntennaTagGeometry {
        range_m: range,
        off_boresight_rad: off,
        in_beam: off <= mount.beamwidth_rad / 2.0,
    }
}

// ---------------------------------------------------------------------------
// Dwell windows
// ---------------------------------------------------------------------------

/// Sampling/refinement controls for beam entry/exit detection.
#[derive(Debug, Clone, Copy)]
pub struct DwellOptions {
    /// Coarse scan step (seconds of travel time).
    pub step_s: f64,
    /// Bisection refinement tolerance on crossing times (seconds).
    pub refine_tol_s: f64,
}

impl Default for DwellOptions {
    fn default() -> Self {
        Self { step_s: 1e-3, refine_tol_s: 1e-10 }
    }
}

/// First contiguous in-beam interval `(t_enter, t_exit)` of a tag within the
/// scenario horizon, found by coarse scanning and bisection refinement.
pub fn dwell_window(
    scenario: &RoadScenario,
    mount: &AntennaMount,
    tag: &TagPlacement,
) -> Result<(f64, f64), GeometryError> {
    dwell_window_with(scenario, mount, tag, DwellOptions::default())
}

pub fn dwell_window_with(
    scenario: &RoadScenario,
    mount: &AntennaMount,
    tag: &TagPlacement,
    opts: DwellOptions,
) -> Result<(f64, f64), GeometryError> {
    let in_beam = |t: f64| antenna_tag_geometry(&scenario.pose_at(t), mount, tag).in_beam;
    let horizon = scenario.horizon_s;
    let step = opts.step_s.max(1e-9);

    let mut t_prev = 0.0;
    let mut prev = in_beam(0.0);
    let mut enter = if prev { Some(0.0) } else { None };
    let mut t = step;
    while enter.is_none() && t_prev < horizon {
        let now = in_beam(t.min(horizon));
        if now && !prev {
            enter = Some(bisect_crossing(&in_beam, t_prev, t.min(horizon), opts.refine_tol_s));
        }
        prev = now;
        t_prev = t.min(horizon);
        t += step;
    }
    let t_enter = enter.ok_or(GeometryError::NeverInBeam)?;

    // Scan forward from the entry for the exit.
    let mut t_prev = t_enter;
    let mut t = (t_enter / step).floor() * step + step;
    while t_prev < horizon {
        let t_clip = t.min(horizon);
        if !in_beam(t_clip) {
            let t_exit = bisect_crossing(&in_beam, t_prev, t_clip, opts.refine_tol_s);
            return Ok((t_enter, t_exit));
        }
        t_prev = t_clip;
        t += step;
    }
    // Still in beam at the horizon.
    Ok((t_enter, horizon))
}

/// Bisection on a boolean predicate that changes value between `lo` and `hi`.
fn bisect_crossing(f: &dyn Fn(f64) -> bool, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let at_lo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Scenario presets
// ---------------------------------------------------------------------------

/// Default sign standoffs for the four straight-road presets (meters).
pub const SIGN_STANDOFFS_M: [f64; 4] = [3.0, 5.0, 7.0, 9.0];
/// Curve radius of the curved-road preset (meters). The vehicle turns toward
/// the sign side, which stretches the time a roadside tag stays in beam.
pub const CURVE_RADIUS_M: f64 = 12.0;
/// Reference sign height for the tag-height preset (meters).
pub const HEIGHT_REFERENCE_M: f64 = 0.9;

impl RoadScenario {
    /// Named scenario layouts.
    ///
    /// - `S1`..`S4`: straight road, one traffic sign at 3/5/7/9 m standoff on
    ///   the vehicle's right, facing oncoming traffic, at reader height.
    /// - `S5`: circular arc (radius [`CURVE_RADIUS_M`]) turning toward the
    ///   sign side; sign standoff equals `S2` (5 m).
    /// - `S6`: straight road, sign at 3 m standoff at a configurable height
    ///   (see [`RoadScenario::preset_s6_with_height`]); default reference
    ///   height [`HEIGHT_REFERENCE_M`].
    /// - `LaneStraight`: lane markers along both lane edges, gentle lateral
    ///   weave, downward-looking geometry.
    ///
    /// Sign presets default to 15 mph and lane presets to 20 mph; override
    /// `speed_profile` for other speeds.
    pub fn preset(id: ScenarioId) -> Self {
        let v = mph_to_mps(15.0);
        match id {
            ScenarioId::S1 => Self::straight_sign(ScenarioId::S1, SIGN_STANDOFFS_M[0], v),
            ScenarioId::S2 => Self::straight_sign(ScenarioId::S2, SIGN_STANDOFFS_M[1], v),
            ScenarioId::S3 => Self::straight_sign(ScenarioId::S3, SIGN_STANDOFFS_M[2], v),
            ScenarioId::S4 => Self::straight_sign(ScenarioId::S4, SIGN_STANDOFFS_M[3], v),
            ScenarioId::S5 => Self::curved_sign(SIGN_STANDOFFS_M[1], v),
            ScenarioId::S6 => Self::preset_s6_with_height(HEIGHT_REFERENCE_M),
            ScenarioId::LaneStraight => Self::lane_straight(mph_to_mps(20.0)),
            ScenarioId::LaneCustom => {
                let mut s = Self::lane_straight(mph_to_mps(20.0));
                s.id = ScenarioId::LaneCustom;
                s
            }
        }
    }

    /// Straight road with one right-side sign at `standoff_m` from the
    /// antenna line, at antenna height, facing oncoming traffic.
    fn straight_sign(id: ScenarioId, standoff_m: f64, speed_mps: f64) -> Self {
        let mount = AntennaMount::default();
        // Antenna line sits at y = lateral_offset; the sign is `standoff_m`
        // further out on that side.
        let sign_y = mount.lateral_offset_m - standoff_m;
        let horizon_s = 60.0 / speed_mps;
        let sign_x = 0.55 * 60.0; // sign placed past mid-run
        Self {
            id,
            lane_width_m: 3.6,
            lateral_standoff_m: standoff_m,
            curvature_per_m: 0.0,
            tag_placements: vec![TagPlacement::sign(
                sign_x,
                sign_y,
                mount.height_m,
                [-1.0, 0.0, 0.0],
            )],
            speed_profile: SpeedProfile::constant(speed_mps),
            max_turn_angle_rad: 0.0,
            start: Pose2D::new(0.0, 0.0, 0.0),
            horizon_s,
            lateral_drift: None,
        }
    }

    /// Curved road turning toward the sign side. The sign keeps the `S2`
    /// standoff but stays in the beam longer because the vehicle's heading
    /// rotates toward it while passing.
    fn curved_sign(standoff_m: f64, speed_mps: f64) -> Self {
        let mount_left = AntennaMount { lateral_offset_m: 0.9, ..AntennaMount::default() };
        let radius = CURVE_RADIUS_M;
        let curvature = 1.0 / radius;
        // Arc center for a left turn starting at the origin heading +x is at
        // (0, radius). The sign sits on the inside of the turn at
        // `standoff_m` from the antenna line (antenna offset +0.9 left).
        // Because the inner tag's bearing sweeps slowly for a vehicle
        // circling it, the in-beam contact spans a wide arc; the sign is
        // placed far enough around the curve that the whole window fits
        // after t = 0, and the horizon covers its exit.
        let h_sign = 140f64.to_radians();
        let r_tag = radius - mount_left.lateral_offset_m - standoff_m;
        let center = (0.0, radius);
        let sign_pos = (center.0 + r_tag * h_sign.sin(), center.1 - r_tag * h_sign.cos());
        // Sign faces back along the road tangent toward the approaching car.
        let facing = [h_sign.cos() * -1.0, h_sign.sin() * -1.0, 0.0];
        let horizon_s = (150f64.to_radians() * radius) / speed_mps;
        Self {
            id: ScenarioId::S5,
            lane_width_m: 3.6,
            lateral_standoff_m: standoff_m,
            curvature_per_m: curvature,
            tag_placements: vec![TagPlacement::sign(
                sign_pos.0,
                sign_pos.1,
                mount_left.height_m,
                facing,
            )],
            speed_profile: SpeedProfile::constant(speed_mps),
            max_turn_angle_rad: 0.0,
            start: Pose2D::new(0.0, 0.0, 0.0),
            horizon_s,
            lateral_drift: None,
        }
    }

    /// Straight road with one sign at 3 m standoff and the given mounting
    /// height; used for ground-reflection experiments with height variants
    /// 30 cm above/below the reference.
    pub fn preset_s6_with_height(tag_height_m: f64) -> Self {
        let v = mph_to_mps(15.0);
        let mut s = Self::straight_sign(ScenarioId::S6, SIGN_STANDOFFS_M[0], v);
        s.id = ScenarioId::S6;
        s.tag_placements[0].position_m[2] = tag_height_m;
        s
    }

    /// Straight lane with markers along both edges and a gentle lateral
    /// weave providing ground-truth lateral motion.
    fn lane_straight(speed_mps: f64) -> Self {
        let lane_width = 3.6;
        let drift = LateralDrift { amplitude_m: 0.4, wavelength_m: 6.0, phase_rad: 0.0 };
        let max_slope = (drift.amplitude_m * 2.0 * PI / drift.wavelength_m).atan();
        let run_length = 300.0;
        let spacing = 1.0;
        let n = (run_length / spacing) as usize;
        let mut tags = Vec::with_capacity(2 * n);
        for i in 0..n {
            let x = i as f64 * spacing;
            tags.push(TagPlacement::lane_marker(x, lane_width / 2.0));
            tags.push(TagPlacement::lane_marker(x, -lane_width / 2.0));
        }
        Self {
            id: ScenarioId::LaneStraight,
            lane_width_m: lane_width,
            lateral_standoff_m: lane_width / 2.0,
            curvature_per_m: 0.0,
            tag_placements: tags,
            speed_profile: SpeedProfile::constant(speed_mps),
            max_turn_angle_rad: max_slope * 1.2 + 0.02,
            start: Pose2D::new(0.0, 0.0, 0.0),
            horizon_s: run_length / speed_mps,
            lateral_drift: Some(drift),
        }
    }
}

// ---------------------------------------------------------------------------
