//! Discrete-event simulation engine: drives the inventory protocol clock
//! along a road scenario, sampling the radio link for each candidate tag at
//! the exact protocol event times.
//!
//! The protocol clock is the time authority — vehicle pose is evaluated
//! (closed form) at whatever instants the protocol needs, never the other
//! way around. Randomness is split into named per-component streams (slot
//! draws, reply decoding, shadowing) so that toggling one model never
//! perturbs the draws of another.

use crate::gen2::{
    Gen2Error, Gen2Params, InventoryMachine, InventoryOutcome, OutcomeKind, RoundRead,
};
use crate::geometry::{dwell_window, AntennaMount, Pose2D, RoadScenario, ScenarioId};
use crate::rflink::{sample_link, MultipathModel, RadioConfig, ShadowingField};
use crate::rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gen2(#[from] Gen2Error),
    #[error("unknown sweep parameter path '{0}'")]
    UnknownParameter(String),
    #[error("invalid sweep value for '{path}': {message}")]
    InvalidValue { path: String, message: String },
}

/// How much protocol detail a run keeps in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceDetail {
    /// Read events plus compact per-slot interrogation records.
    #[default]
    EventsOnly,
    /// Additionally keeps every slot's full command/gap breakdown.
    FullProtocol,
}

/// Complete, self-contained description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub scenario: RoadScenario,
    pub mount: AntennaMount,
    pub radio: RadioConfig,
    pub multipath: MultipathModel,
    pub gen2: Gen2Params,
    /// Simulated span (seconds); defaults to the scenario horizon.
    pub duration_s: Option<f64>,
    pub seed: u64,
    pub trace_detail: TraceDetail,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scenario: RoadScenario::preset(ScenarioId::S1),
            mount: AntennaMount::default(),
            radio: RadioConfig::default(),
            multipath: MultipathModel::default(),
            gen2: Gen2Params::default(),
            duration_s: None,
            seed: 0,
            trace_detail: TraceDetail::EventsOnly,
        }
    }
}

impl SimConfig {
    pub fn effective_duration_s(&self) -> f64 {
        self.duration_s.unwrap_or(self.scenario.horizon_s)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        self.scenario.validate().map_err(EngineError::InvalidConfig)?;
        self.mount.validate().map_err(EngineError::InvalidConfig)?;
        self.radio.validate().map_err(EngineError::InvalidConfig)?;
        self.multipath.validate().map_err(EngineError::InvalidConfig)?;
        self.gen2.validate()?;
        if let Some(d) = self.duration_s {
            if !(d > 0.0) || !d.is_finite() {
                return Err(EngineError::InvalidConfig(format!(
                    "duration_s must be positive and finite, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// One successful EPC delivery, with the vehicle state at that instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadEvent {
    pub t_s: f64,
    pub tag_id: usize,
    pub epc_hex: String,
    pub round_index: u64,
    pub vehicle_pose_at_read: Pose2D,
    pub snr_at_read_db: f64,
}

/// Compact per-slot protocol record (kept for every run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterrogationRecord {
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub round_index: u64,
    pub slot_index: u64,
    pub outcome: OutcomeKind,
    pub tag: Option<usize>,
}

/// Aggregates of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunSummary {
    pub duration_s: f64,
    pub total_reads: u64,
    pub reads_per_second: f64,
    /// Successful reads per tag id (only tags read at least once).
    pub total_reads_per_tag: BTreeMap<usize, u64>,
    /// Geometric in-beam window length per tag id, for tags read at least
    /// once (seconds).
    pub dwell_per_tag_s: BTreeMap<usize, f64>,
    /// Slot outcomes by kind over the whole run.
    pub outcome_histogram: BTreeMap<String, u64>,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub summary: RunSummary,
    pub trace: Vec<ReadEvent>,
    pub interrogations: Vec<InterrogationRecord>,
    /// Full slot breakdowns, kept only under `TraceDetail::FullProtocol`.
    pub protocol_outcomes: Option<Vec<InventoryOutcome>>,
}

/// Stable 96-bit EPC for a tag index, independent of run seed and config so
/// traces from different runs identify the same physical tag identically.
pub fn epc_hex(tag_id: usize) -> String {
    const EPC_SEED: u64 = 0x4550_4331;
    let hi = rng::stream(EPC_SEED, "epc", &[tag_id as u64, 0]);
    let lo = rng::stream(EPC_SEED, "epc", &[tag_id as u64, 1]);
    format!("{:016x}{:08x}", hi, (lo >> 32) as u32)
}

/// Conservative range (m) beyond which a tag cannot possibly power up:
/// free-space budget at boresight gain plus margins for constructive
/// two-ray interference (+6 dB) and +6 sigma of shadowing. Used only to
/// prune the per-round candidate set.
fn power_feasible_radius_m(cfg: &SimConfig) -> f64 {
    let margin_db = 6.03 + 6.0 * cfg.multipath.excess_noise_sigma_db;
    let budget_db = cfg.radio.tx_power_dbm + cfg.mount.boresight_gain_dbi + cfg.radio.tag_gain_dbi
        - cfg.radio.tag_chip_sensitivity_dbm
        + margin_db;
    (cfg.radio.wavelength_m() / (4.0 * std::f64::consts::PI)) * 10f64.powf(budget_db / 20.0)
}

/// Runs one simulation. Deterministic: identical configs produce identical
/// results.
pub fn run(cfg: &SimConfig) -> Result<RunResult, EngineError> {
    cfg.validate()?;
    let scenario = &cfg.scenario;
    let tags = &scenario.tag_placements;
    let duration = cfg.effective_duration_s();

    let shadow = ShadowingField::new(rng::stream(cfg.seed, "shadowing-field", &[]), &cfg.multipath);
    let machine_seed = rng::stream(cfg.seed, "protocol", &[]);
    let mut machine = InventoryMachine::new(cfg.gen2, tags.len(), machine_seed)?;

    let link = |i: usize, t: f64| {
        sample_link(t, scenario, &cfg.mount, &tags[i], i as u64, &cfg.radio, &cfg.multipath, &shadow)
    };

    // Candidate pruning: tags sorted by x, window = feasible radius plus a
    // margin for the antenna's own offset from the vehicle reference point.
    let r_max = power_feasible_radius_m(cfg);
    let mount_reach =
        cfg.mount.lateral_offset_m.abs() + cfg.mount.height_m.abs() + scenario.lane_width_m;
    let mut by_x: Vec<(f64, usize)> =
        tags.iter().enumerate().map(|(i, t)| (t.position_m[0], i)).collect();
    by_x.sort_by(|a, b| a.0.total_cmp(&b.0));
    let xs: Vec<f64> = by_x.iter().map(|p| p.0).collect();

    let active_at = |t: f64| -> Vec<usize> {
        let apos = cfg.mount.world_position(&scenario.pose_at(t));
        let lo = xs.partition_point(|&x| x < apos[0] - r_max - mount_reach);
        let hi = xs.partition_point(|&x| x <= apos[0] + r_max + mount_reach);
        let mut out: Vec<usize> = by_x[lo..hi]
            .iter()
            .filter(|(_, i)| {
                let p = tags[*i].position_m;
                let d2 = (p[0] - apos[0]).powi(2)
                    + (p[1] - apos[1]).powi(2)
                    + (p[2] - apos[2]).powi(2);
                d2 <= r_max * r_max
            })
            .map(|&(_, i)| i)
            .collect();
        out.sort_unstable();
        out
    };

    let mut reads: Vec<RoundRead> = Vec::new();
    let mut interrogations: Vec<InterrogationRecord> = Vec::new();
    let mut protocol_outcomes: Vec<InventoryOutcome> = Vec::new();
    let keep_full = cfg.trace_detail == TraceDetail::FullProtocol;
    let mut histogram: BTreeMap<String, u64> = BTreeMap::new();

    let mut t = 0.0;
    while t < duration {
        let active = active_at(t);
        let out = machine.run_round(t, duration, &active, &link);
        for o in &out.outcomes {
            *histogram.entry(o.result.as_str().to_string()).or_insert(0) += 1;
            interrogations.push(InterrogationRecord {
                t_start_s: o.t_start,
                t_end_s: o.t_end,
                round_index: o.round_index,
                slot_index: o.slot_index,
                outcome: o.result,
                tag: o.tag,
            });
        }
        if keep_full {
            protocol_outcomes.extend(out.outcomes);
        }
        reads.extend(out.reads);
        t = out.t_end;
        if out.reached_limit {
            break;
        }
    }

    let trace: Vec<ReadEvent> = reads
        .iter()
        .map(|r| ReadEvent {
            t_s: r.t_s,
            tag_id: r.tag,
            epc_hex: epc_hex(r.tag),
            round_index: r.round_index,
            vehicle_pose_at_read: scenario.pose_at(r.t_s),
            snr_at_read_db: r.snr_db,
        })
        .collect();

    let mut per_tag: BTreeMap<usize, u64> = BTreeMap::new();
    for r in &reads {
        *per_tag.entry(r.tag).or_insert(0) += 1;
    }
    let mut dwell: BTreeMap<usize, f64> = BTreeMap::new();
    for &tag in per_tag.keys() {
        if let Ok((t_in, t_out)) = dwell_window(scenario, &cfg.mount, &tags[tag]) {
            dwell.insert(tag, t_out - t_in);
        }
    }

    let summary = RunSummary {
        duration_s: duration,
        total_reads: reads.len() as u64,
        reads_per_second: reads.len() as f64 / duration,
        total_reads_per_tag: per_tag,
        dwell_per_tag_s: dwell,
        outcome_histogram: histogram,
    };

    Ok(RunResult {
        summary,
        trace,
        interrogations,
        protocol_outcomes: keep_full.then_some(protocol_outcomes),
    })
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: serde_json::Value,
    pub summary: RunSummary,
}

/// Runs the base config once per value of the dotted parameter path (e.g.
/// `"gen2.encoding"`, `"radio.tx_power_dbm"`). Each point gets its own seed
/// derived from the base seed so points are independent but reproducible.
pub fn sweep(
    base: &SimConfig,
    param_path: &str,
    values: &[serde_json::Value],
) -> Result<Vec<SweepPoint>, EngineError> {
    let mut points = Vec::with_capacity(values.len());
    for (k, v) in values.iter().enumerate() {
        let mut cfg = apply_parameter(base, param_path, v)?;
        cfg.seed = rng::stream(base.seed, "sweep-value", &[k as u64]);
        let result = run(&cfg)?;
        points.push(SweepPoint { value: v.clone(), summary: result.summary });
    }
    Ok(points)
}

/// Returns a copy of `base` with the dotted-path field replaced by `value`.
pub fn apply_parameter(
    base: &SimConfig,
    param_path: &str,
    value: &serde_json::Value,
) -> Result<SimConfig, EngineError> {
    let mut tree = serde_json::to_value(base).map_err(|e| EngineError::InvalidValue {
        path: param_path.to_string(),
        message: e.to_string(),
    })?;
    if param_path.is_empty() || param_path.split('.').any(|s| s.is_empty()) {
        return Err(EngineError::UnknownParameter(param_path.to_string()));
    }
    // Dotted path -> JSON pointer, with the standard ~/slash escapes.
    let pointer: String = param_path
        .split('.')
        .map(|s| format!("/{}", s.replace('~', "~0").replace('/', "~1")))
        .collect();
    let node = tree
        .pointer_mut(&pointer)
        .ok_or_else(|| EngineError::UnknownParameter(param_path.to_string()))?;
    *node = value.clone();
    let cfg: SimConfig = serde_json::from_value(tree).map_err(|e| EngineError::InvalidValue {
        path: param_path.to_string(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
