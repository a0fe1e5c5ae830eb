//! Timing of sensor-bearing tag reads: how long a reader takes to energize
//! a sensor tag, inventory it, and pull sensor words from user memory.
//!
//! The total splits into three fixed accounting terms — activation
//! (chip/sensor boot), query processing, and data propagation — plus the
//! air-protocol exchange itself. Near the edge of the forward power budget
//! the exchange must wait for a favorable shadowing interval before the tag
//! powers at all, which is what stretches sub-second reads into seconds.

use crate::gen2::{
    command_duration, query_duration, read_command_duration, read_reply_bits,
    tag_reply_duration, Gen2Params, ReaderCommand, HANDLE_BITS,
};
use crate::rflink::{
    backscatter_power, forward_power, snr_to_bit_error_rate_with, MultipathModel,
    PropagationPath, RadioConfig, ShadowingField,
};
use crate::rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SensingError {
    #[error("unknown activation variant '{0}'")]
    UnknownVariant(String),
    #[error("invalid sensor fixture: {0}")]
    InvalidFixture(String),
}

/// How the sensor tag is powered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// Fully passive: the activation phase runs at full length.
    #[default]
    Passive,
    /// Battery-assisted: the chip and sensor are already biased, shrinking
    /// activation a hundredfold.
    Assisted,
}

/// Fixed timing terms of a sensor read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorTimingModel {
    /// Reader-side fixed overhead charged once per attempt, on top of the
    /// simulated air time (seconds).
    pub query_processing_s: f64,
    /// Activation (boot) time per tag variant (seconds). The defaults
    /// order a bare tag IC below an IC with a sensor front-end below an IC
    /// with sensor and microcontroller; the values are placeholders chosen
    /// to preserve that ordering, not measurements.
    pub activation_s: BTreeMap<String, f64>,
    /// Sensor-data propagation/handling delay charged once on success
    /// (seconds).
    pub propagation_s: f64,
    pub power_mode: PowerMode,
}

impl Default for SensorTimingModel {
    fn default() -> Self {
        let activation_s = BTreeMap::from([
            ("tag_ic".to_string(), 1e-3),
            ("tag_ic_plus_sensor".to_string(), 5e-3),
            ("tag_ic_sensor_mcu".to_string(), 20e-3),
        ]);
        Self { query_processing_s: 0.0, activation_s, propagation_s: 0.5e-3, power_mode: PowerMode::Passive }
    }
}

impl SensorTimingModel {
    pub fn validate(&self) -> Result<(), SensingError> {
        for (name, v) in [
            ("query_processing_s", self.query_processing_s),
            ("propagation_s", self.propagation_s),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(SensingError::InvalidFixture(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (k, v) in &self.activation_s {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(SensingError::InvalidFixture(format!(
                    "activation_s[{k}] must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Activation time for a variant under the configured power mode.
    pub fn effective_activation_s(&self, variant: &str) -> Result<f64, SensingError> {
        let base = self
            .activation_s
            .get(variant)
            .copied()
            .ok_or_else(|| SensingError::UnknownVariant(variant.to_string()))?;
        Ok(match self.power_mode {
            PowerMode::Passive => base,
            PowerMode::Assisted => base * 0.01,
        })
    }
}

/// Closed-form fixed-cost total for one sensor read: activation plus query
/// processing plus propagation. Air-protocol time comes on top of this; a
/// simulated read can never be faster.
pub fn t_total(model: &SensorTimingModel, variant: &str) -> Result<f64, SensingError> {
    Ok(model.effective_activation_s(variant)? + model.query_processing_s + model.propagation_s)
}

/// Static sensor-read setup: a reader a fixed distance from one sensor tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorFixture {
    pub distance_m: f64,
    /// Reader antenna gain toward the tag (dB).
    pub geometry_gain_db: f64,
    /// Sensor words pulled from user memory per read.
    pub word_count: u32,
    pub variant: String,
    pub radio: RadioConfig,
    pub multipath: MultipathModel,
    pub gen2: Gen2Params,
    pub timing: SensorTimingModel,
    /// Powered exchange attempts before giving up.
    pub max_attempts: u32,
    /// Wall-clock guard: a tag that never powers up terminates the
    /// simulation here (seconds).
    pub max_duration_s: f64,
}

impl Default for SensorFixture {
    fn default() -> Self {
        Self {
            distance_m: 0.65,
            geometry_gain_db: 6.0,
            word_count: 4,
            variant: "tag_ic_plus_sensor".to_string(),
            radio: RadioConfig::default(),
            multipath: MultipathModel::default(),
            gen2: Gen2Params::default(),
            timing: SensorTimingModel::default(),
            max_attempts: 50,
            max_duration_s: 30.0,
        }
    }
}

impl SensorFixture {
    pub fn validate(&self) -> Result<(), SensingError> {
        if !(self.distance_m > 0.0) || !self.distance_m.is_finite() {
            return Err(SensingError::InvalidFixture(format!(
                "distance_m must be positive, got {}",
                self.distance_m
            )));
        }
        if self.word_count == 0 || self.word_count > 255 {
            return Err(SensingError::InvalidFixture(format!(
                "word_count must be in 1..=255, got {}",
                self.word_count
            )));
        }
        if self.max_attempts == 0 {
            return Err(SensingError::InvalidFixture("max_attempts must be >= 1".into()));
        }
        if !(self.max_duration_s > 0.0) {
            return Err(SensingError::InvalidFixture("max_duration_s must be positive".into()));
        }
        self.timing.validate()?;
        self.radio.validate().map_err(SensingError::InvalidFixture)?;
        self.multipath.validate().map_err(SensingError::InvalidFixture)?;
        self.gen2.validate().map_err(|e| SensingError::InvalidFixture(e.to_string()))?;
        self.timing.effective_activation_s(&self.variant).map(|_| ())
    }

    /// Mean forward power at the tag for a given distance (dBm).
    pub fn mean_forward_dbm(&self, distance_m: f64) -> f64 {
        let path = PropagationPath::line_of_sight(distance_m);
        forward_power(&path, self.geometry_gain_db, &self.radio, &self.multipath)
    }

    /// Fixture tuned to the critical range: transmit power is solved so
    /// the mean forward power at `far_distance_m` sits exactly
    /// `deficit_db` below the tag sensitivity, with mild shadowing
    /// supplying the occasional favorable interval. Reads at that distance
    /// succeed only by waiting for such an interval.
    pub fn critical_range(far_distance_m: f64, deficit_db: f64, sigma_db: f64) -> Self {
        let mut f = Self::default();
        f.multipath.excess_noise_sigma_db = sigma_db;
        f.distance_m = far_distance_m;
        // forward = tx + geometry + tag_gain + fs(d); solve for tx.
        let fs = {
            let path = PropagationPath::line_of_sight(far_distance_m);
            20.0 * (f.radio.wavelength_m() / (4.0 * std::f64::consts::PI * path.direct_m())).log10()
        };
        f.radio.tx_power_dbm = f.radio.tag_chip_sensitivity_dbm - deficit_db
            - f.geometry_gain_db
            - f.radio.tag_gain_dbi
            - fs;
        f
    }
}

/// Result of one simulated sensor read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensorReadResult {
    pub succeeded: bool,
    /// Powered exchange attempts (dark waiting does not count).
    pub attempts: u32,
    pub t_total_s: f64,
    /// Time spent waiting unpowered for a favorable shadowing interval.
    pub dark_wait_s: f64,
}

enum Piece {
    Fixed(f64),
    Reply { bits: u32, ordinal: u64 },
}

/// Simulates one sensor read at the fixture's distance. Power and SNR are
/// drawn per shadowing coherence interval; the tag must stay powered
/// through every reply and each reply must decode. Any failure restarts
/// the whole inventory (time stays charged). Dark intervals accrue waiting
/// time without counting as attempts.
pub fn simulate_sensor_read(
    fixture: &SensorFixture,
    seed: u64,
    trial: u64,
) -> Result<SensorReadResult, SensingError> {
    fixture.validate()?;
    let p = &fixture.gen2;
    let path = PropagationPath::line_of_sight(fixture.distance_m);
    let mean_fwd = forward_power(&path, fixture.geometry_gain_db, &fixture.radio, &fixture.multipath);
    let mean_back =
        backscatter_power(&path, fixture.geometry_gain_db, &fixture.radio, &fixture.multipath);
    let shadow =
        ShadowingField::new(rng::stream(seed, "sensor-shadow", &[trial]), &fixture.multipath);
    let coherence = fixture.multipath.shadowing_coherence_s;

    let fwd_at = |t: f64| mean_fwd + shadow.sample_db(0, t);
    let snr_at = |t: f64| {
        mean_back + 2.0 * shadow.sample_db(0, t) - fixture.multipath.noise_floor_dbm
    };
    let powered_at = |t: f64| fwd_at(t) >= fixture.radio.tag_chip_sensitivity_dbm;

    let activation = fixture.timing.effective_activation_s(&fixture.variant)?;
    let exchange: Vec<Piece> = vec![
        Piece::Fixed(query_duration(p, p.q_init)),
        Piece::Fixed(p.t1()),
        Piece::Reply { bits: p.rn16_bits, ordinal: 0 },
        Piece::Fixed(p.t2()),
        Piece::Fixed(command_duration(ReaderCommand::Ack, p)),
        Piece::Fixed(p.t1()),
        Piece::Reply { bits: p.epc_bits, ordinal: 1 },
        Piece::Fixed(p.t2()),
        Piece::Fixed(command_duration(ReaderCommand::ReqRn, p)),
        Piece::Fixed(p.t1()),
        Piece::Reply { bits: HANDLE_BITS, ordinal: 2 },
        Piece::Fixed(p.t2()),
        Piece::Fixed(read_command_duration(p, fixture.word_count)),
        Piece::Fixed(p.t1()),
        Piece::Reply { bits: read_reply_bits(fixture.word_count), ordinal: 3 },
        Piece::Fixed(p.t2()),
    ];

    let mut t = 0.0f64;
    let mut dark_wait = 0.0f64;
    let mut attempts = 0u32;
    loop {
        if t >= fixture.max_duration_s {
            return Ok(SensorReadResult { succeeded: false, attempts, t_total_s: t, dark_wait_s: dark_wait });
        }
        if !powered_at(t) {
            // Wait out the rest of this coherence interval in the dark. When
            // t sits so close to a boundary that the recomputed boundary
            // rounds back onto t, step a whole interval instead — the draw
            // at the new t is the next interval's either way.
            let boundary = ((t / coherence).floor() + 1.0) * coherence;
            let next = if boundary > t { boundary } else { t + coherence };
            dark_wait += next - t;
            t = next;
            continue;
        }
        if attempts >= fixture.max_attempts {
            return Ok(SensorReadResult { succeeded: false, attempts, t_total_s: t, dark_wait_s: dark_wait });
        }
        attempts += 1;
        t += activation + fixture.timing.query_processing_s;

        let mut failed = false;
        for piece in &exchange {
            match piece {
                Piece::Fixed(d) => t += d,
                Piece::Reply { bits, ordinal } => {
                    let dur = tag_reply_duration(*bits, p);
                    let mid = t + 0.5 * dur;
                    t += dur;
                    if !powered_at(mid) {
                        // Tag browned out: reader times out and restarts.
                        t += p.t2();
                        failed = true;
                        break;
                    }
                    let ber = snr_to_bit_error_rate_with(snr_at(mid), p.encoding, p.ber_model);
                    let p_ok = (1.0 - ber).powi(*bits as i32);
                    let u = rng::uniform(
                        seed,
                        "sensor-reply",
                        &[trial, attempts as u64, *ordinal],
                    );
                    if u >= p_ok {
                        t += p.t2();
                        failed = true;
                        break;
                    }
                }
            }
        }
        if !failed {
            t += fixture.timing.propagation_s;
            return Ok(SensorReadResult { succeeded: true, attempts, t_total_s: t, dark_wait_s: dark_wait });
        }
    }
}

/// Closed-form duration of one clean attempt (every reply decodes, power
/// holds): fixed terms plus the full exchange.
pub fn clean_attempt_oracle(fixture: &SensorFixture) -> Result<f64, SensingError> {
    let p = &fixture.gen2;
    Ok(t_total(&fixture.timing, &fixture.variant)?
        + crate::gen2::single_tag_round_oracle(p)
        + crate::gen2::user_read_oracle(p, fixture.word_count))
}

/// One row of a distance sweep: timing quantiles over repeated trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensorSweepRow {
    pub distance_m: f64,
    pub median_s: f64,
    pub p10_s: f64,
    pub p90_s: f64,
    pub attempts_mean: f64,
    pub success_rate: f64,
}

/// Runs `trials` independent reads at each distance.
pub fn sweep_distances(
    fixture: &SensorFixture,
    distances_m: &[f64],
    trials: u32,
    seed: u64,
) -> Result<Vec<SensorSweepRow>, SensingError> {
    if trials == 0 {
        return Err(SensingError::InvalidFixture("trials must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(distances_m.len());
    for (di, &d) in distances_m.iter().enumerate() {
        let mut f = fixture.clone();
        f.distance_m = d;
        let mut totals = Vec::with_capacity(trials as usize);
        let mut attempts_sum = 0u64;
        let mut successes = 0u32;
        for k in 0..trials {
            let r = simulate_sensor_read(&f, rng::stream(seed, "sweep-distance", &[di as u64]), k as u64)?;
            totals.push(r.t_total_s);
            attempts_sum += r.attempts as u64;
            successes += r.succeeded as u32;
        }
        totals.sort_by(f64::total_cmp);
        let q = |frac: f64| totals[(frac * (totals.len() - 1) as f64).round() as usize];
        rows.push(SensorSweepRow {
            distance_m: d,
            median_s: q(0.5),
            p10_s: q(0.1),
            p90_s: q(0.9),
            attempts_mean: attempts_sum as f64 / trials as f64,
            success_rate: successes as f64 / trials as f64,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
