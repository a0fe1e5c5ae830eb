//! Lane-position estimation from lane-marker read counts.
//!
//! Two downward-looking antennas (left and right edge of the vehicle) read
//! passive markers along both lane edges. Read counts per time window are
//! binomial: each interrogation slot is a Bernoulli trial whose success
//! probability depends on the lateral gap between antenna and marker row.
//! A calibrated read-rate curve `p(pos)` maps the signed vehicle offset to
//! the right antenna's per-slot success probability; by mirror symmetry the
//! left antenna sees `p(−pos)`. The lateral position estimate is the
//! maximizer of
//!
//! `L(pos) = Binomial(z_left; n_left, p(−pos)) · Binomial(z_right; n_right, p(pos))`
//!
//! over the curve's symmetric domain. Positive `pos` means the vehicle is
//! displaced toward the left lane edge.

use crate::engine::{self, InterrogationRecord, SimConfig};
use crate::gen2::{Gen2Params, OutcomeKind};
use crate::geometry::{AntennaMount, BeamPattern, Facing, RoadScenario, ScenarioId};
use crate::rflink::{MultipathModel, RadioConfig};
use crate::rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LaneError {
    #[error("invalid read-rate curve: {0}")]
    CurveInvalid(String),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("cross-correlation undefined: a series has zero variance")]
    DegenerateSeries,
    #[error("no count windows to process")]
    EmptyWindows,
    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
}

/// Which side of the vehicle an antenna (or marker row) belongs to.
/// `Left` is positive y in the vehicle frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneSide {
    Left,
    Right,
}

// ---------------------------------------------------------------------------
// Read-rate curve
// ---------------------------------------------------------------------------

/// Piecewise-linear per-slot read probability for the right antenna as a
/// function of signed vehicle lateral offset (m, positive = leftward).
/// Knot offsets are strictly increasing; probabilities lie in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadRateCurve {
    pub offsets_m: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ReadRateCurve {
    pub fn new(offsets_m: Vec<f64>, probabilities: Vec<f64>) -> Result<Self, LaneError> {
        let c = Self { offsets_m, probabilities };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), LaneError> {
        if self.offsets_m.len() != self.probabilities.len() {
            return Err(LaneError::CurveInvalid(format!(
                "{} offsets but {} probabilities",
                self.offsets_m.len(),
                self.probabilities.len()
            )));
        }
        if self.offsets_m.len() < 2 {
            return Err(LaneError::CurveInvalid("need at least two knots".into()));
        }
        for w in self.offsets_m.windows(2) {
            if !(w[1] > w[0]) {
                return Err(LaneError::CurveInvalid(format!(
                    "offsets must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &p in &self.probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(LaneError::CurveInvalid(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Flat plateau at `p_max` until `flat_until_m`, then a linear ramp down
    /// to zero at `zero_at_m`, zero beyond. Domain `[domain_min, domain_max]`.
    pub fn plateau_linear(
        p_max: f64,
        flat_until_m: f64,
        zero_at_m: f64,
        domain_min_m: f64,
        domain_max_m: f64,
    ) -> Result<Self, LaneError> {
        if !(domain_min_m < flat_until_m && flat_until_m < zero_at_m) {
            return Err(LaneError::CurveInvalid(
                "need domain_min < flat_until < zero_at".into(),
            ));
        }
        let mut offs = vec![domain_min_m, flat_until_m, zero_at_m];
        let mut probs = vec![p_max, p_max, 0.0];
        if zero_at_m < domain_max_m {
            offs.push(domain_max_m);
            probs.push(0.0);
        }
        Self::new(offs, probs)
    }

    /// Linear interpolation, clamped to the end values outside the domain.
    pub fn eval(&self, offset_m: f64) -> f64 {
        let offs = &self.offsets_m;
        let probs = &self.probabilities;
        if offset_m <= offs[0] {
            return probs[0];
        }
        if offset_m >= *offs.last().unwrap() {
            return *probs.last().unwrap();
        }
        let hi = offs.partition_point(|&x| x < offset_m).max(1);
        let (x0, x1) = (offs[hi - 1], offs[hi]);
        let (y0, y1) = (probs[hi - 1], probs[hi]);
        y0 + (y1 - y0) * (offset_m - x0) / (x1 - x0)
    }

    /// Enforces a non-increasing shape by a running minimum over increasing
    /// offsets. Calibration noise can produce tiny upticks; physically the
    /// read rate cannot grow as the antenna moves away from its marker row.
    pub fn monotonized(&self) -> Self {
        let mut probs = self.probabilities.clone();
        for i in 1..probs.len() {
            probs[i] = probs[i].min(probs[i - 1]);
        }
        Self { offsets_m: self.offsets_m.clone(), probabilities: probs }
    }

    /// Largest symmetric domain `[-d, d]` on which both `pos` and `-pos`
    /// are inside the knot range.
    pub fn symmetric_domain_m(&self) -> Result<f64, LaneError> {
        let lo = self.offsets_m[0];
        let hi = *self.offsets_m.last().unwrap();
        let d = (-lo).min(hi);
        if !(d > 0.0) {
            return Err(LaneError::CurveInvalid(
                "curve domain must straddle zero for position estimation".into(),
            ));
        }
        Ok(d)
    }

    /// Two-column CSV (`offset_m,p_read`) with a header row.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("offset_m,p_read\n");
        for (o, p) in self.offsets_m.iter().zip(&self.probabilities) {
            out.push_str(&format!("{o},{p}\n"));
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self, LaneError> {
        let mut offs = Vec::new();
        let mut probs = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (k == 0 && line.starts_with("offset_m")) {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>, line: usize| -> Result<f64, LaneError> {
                s.ok_or(LaneError::CsvParse { line, message: "missing column".into() })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| LaneError::CsvParse { line, message: e.to_string() })
            };
            offs.push(parse(parts.next(), k + 1)?);
            probs.push(parse(parts.next(), k + 1)?);
        }
        Self::new(offs, probs)
    }
}

// ---------------------------------------------------------------------------
// Count windows
// ---------------------------------------------------------------------------

/// Slot and success counts for one time window, split by antenna side.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CountWindow {
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub n_left: u64,
    pub n_right: u64,
    pub z_left: u64,
    pub z_right: u64,
}

/// Bins one antenna's interrogation log into consecutive windows of width
/// `tau_s`, filling the counts for `side`: `n` counts every slot (a slot
/// belongs to the window containing its start), `z` counts successful reads
/// of markers on that side of the road.
pub fn window_counts(
    interrogations: &[InterrogationRecord],
    scenario: &RoadScenario,
    tau_s: f64,
    side: LaneSide,
) -> Result<Vec<CountWindow>, LaneError> {
    if !(tau_s > 0.0) || !tau_s.is_finite() {
        return Err(LaneError::Domain(format!("tau_s must be positive, got {tau_s}")));
    }
    if interrogations.is_empty() {
        return Err(LaneError::EmptyWindows);
    }
    let t_max = interrogations.iter().map(|r| r.t_end_s).fold(0.0, f64::max);
    let n_windows = (t_max / tau_s).ceil().max(1.0) as usize;
    let mut windows: Vec<CountWindow> = (0..n_windows)
        .map(|k| CountWindow {
            t_start_s: k as f64 * tau_s,
            t_end_s: (k + 1) as f64 * tau_s,
            ..CountWindow::default()
        })
        .collect();
    for rec in interrogations {
        let k = (rec.t_start_s / tau_s).floor() as usize;
        let k = k.min(n_windows - 1);
        let w = &mut windows[k];
        let success = rec.outcome == OutcomeKind::Success
            && rec.tag.map_or(false, |tag| {
                let y = scenario.tag_placements[tag].position_m[1];
                match side {
                    LaneSide::Left => y >= 0.0,
                    LaneSide::Right => y < 0.0,
                }
            });
        match side {
            LaneSide::Left => {
                w.n_left += 1;
                if success {
                    w.z_left += 1;
                }
            }
            LaneSide::Right => {
                w.n_right += 1;
                if success {
                    w.z_right += 1;
                }
            }
        }
    }
    Ok(windows)
}

/// Zips per-side window counts from the two antenna runs onto one grid.
/// Both inputs must come from the same `tau`; the result is truncated to
/// the shorter series.
pub fn merge_window_counts(
    left: &[CountWindow],
    right: &[CountWindow],
) -> Result<Vec<CountWindow>, LaneError> {
    if left.is_empty() || right.is_empty() {
        return Err(LaneError::EmptyWindows);
    }
    let n = left.len().min(right.len());
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (l, r) = (&left[k], &right[k]);
        if (l.t_start_s - r.t_start_s).abs() > 1e-9 || (l.t_end_s - r.t_end_s).abs() > 1e-9 {
            return Err(LaneError::Domain(format!(
                "window grids disagree at index {k}: [{}, {}] vs [{}, {}]",
                l.t_start_s, l.t_end_s, r.t_start_s, r.t_end_s
            )));
        }
        out.push(CountWindow {
            t_start_s: l.t_start_s,
            t_end_s: l.t_end_s,
            n_left: l.n_left,
            z_left: l.z_left,
            n_right: r.n_right,
            z_right: r.z_right,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Maximum-likelihood position estimate
// ---------------------------------------------------------------------------

/// Estimate for one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaneWindowEstimate {
    pub t_s: f64,
    pub pos_m: f64,
    /// Binomial log-likelihood at the maximizer, up to the count-dependent
    /// additive constant.
    pub loglik: f64,
    /// False when the likelihood was flat (nothing identifies the position)
    /// and `pos_m` is carried over from the previous window.
    pub converged: bool,
}

/// `z·ln(p) + (n−z)·ln(1−p)` with the usual conventions at p ∈ {0, 1}.
fn binomial_loglik_term(z: u64, n: u64, p: f64) -> f64 {
    let mut ll = 0.0;
    if z > 0 {
        ll += if p > 0.0 { z as f64 * p.ln() } else { f64::NEG_INFINITY };
    }
    if n > z {
        ll += if p < 1.0 { (n - z) as f64 * (1.0 - p).ln() } else { f64::NEG_INFINITY };
    }
    ll
}

fn window_loglik(w: &CountWindow, curve: &ReadRateCurve, pos: f64) -> f64 {
    binomial_loglik_term(w.z_left, w.n_left, curve.eval(-pos))
        + binomial_loglik_term(w.z_right, w.n_right, curve.eval(pos))
}

/// Maximum-likelihood lateral position for one count window.
///
/// Within each interval on which both `p(pos)` and `p(−pos)` are linear,
/// the log-likelihood is concave (a sum of logs of affine functions), so a
/// golden-section search per interval finds that interval's maximum; the
/// global maximizer is the best across intervals. Ties (including a flat
/// likelihood) break toward the smallest |pos|; a completely flat
/// likelihood returns `pos_prev` with `converged = false`.
pub fn estimate_position(
    window: &CountWindow,
    curve: &ReadRateCurve,
    pos_prev: f64,
) -> Result<LaneWindowEstimate, LaneError> {
    curve.validate()?;
    let d = curve.symmetric_domain_m()?;
    let t_s = window.t_end_s;

    // Piece boundaries: knots and mirrored knots inside [-d, d].
    let mut cuts: Vec<f64> = vec![-d, d];
    for &o in &curve.offsets_m {
        for c in [o, -o] {
            if c > -d && c < d {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let f = |pos: f64| window_loglik(window, curve, pos);

    let mut best_pos = 0.0;
    let mut best_ll = f64::NEG_INFINITY;
    let consider = |pos: f64, ll: f64, best_pos: &mut f64, best_ll: &mut f64| {
        let better = ll > *best_ll + 1e-12
            || ((ll - *best_ll).abs() <= 1e-12 && pos.abs() < best_pos.abs() - 1e-15);
        if better {
            *best_pos = pos;
            *best_ll = ll;
        }
    };

    const PHI: f64 = 0.618_033_988_749_894_9;
    for pair in cuts.windows(2) {
        let (mut a, mut b) = (pair[0], pair[1]);
        consider(a, f(a), &mut best_pos, &mut best_ll);
        consider(b, f(b), &mut best_pos, &mut best_ll);
        // Golden-section search on a concave piece.
        let mut x1 = b - PHI * (b - a);
        let mut x2 = a + PHI * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..80 {
            if b - a < 1e-7 {
                break;
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + PHI * (b - a);
                f2 = f(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - PHI * (b - a);
                f1 = f(x1);
            }
        }
        let mid = 0.5 * (a + b);
        consider(mid, f(mid), &mut best_pos, &mut best_ll);
    }

    // Flat likelihood: nothing identifies the position.
    let probe = [-d, -0.5 * d, 0.0, 0.5 * d, d];
    let lls: Vec<f64> = probe.iter().map(|&p| f(p)).collect();
    let flat = lls.iter().all(|&ll| (ll - lls[0]).abs() < 1e-12);
    if flat {
        return Ok(LaneWindowEstimate {
            t_s,
            pos_m: pos_prev.clamp(-d, d),
            loglik: lls[0],
            converged: false,
        });
    }

    Ok(LaneWindowEstimate { t_s, pos_m: best_pos, loglik: best_ll, converged: true })
}

/// Runs the per-window estimator over a whole series, carrying each
/// estimate forward as the fallback for non-identifiable windows.
pub fn estimate_positions_over_windows(
    windows: &[CountWindow],
    curve: &ReadRateCurve,
    pos_init: f64,
) -> Result<Vec<LaneWindowEstimate>, LaneError> {
    if windows.is_empty() {
        return Err(LaneError::EmptyWindows);
    }
    let mut out = Vec::with_capacity(windows.len());
    let mut prev = pos_init;
    for w in windows {
        let est = estimate_position(w, curve, prev)?;
        prev = est.pos_m;
        out.push(est);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Window sizing and correlation
// ---------------------------------------------------------------------------

/// Longest admissible counting window: the time in which a vehicle crossing
/// the lane at the worst-case heading angle traverses half the lane width,
/// `tau_max = W / (2 · v · cos(alpha_max))`. Estimation windows must be
/// strictly shorter, otherwise the position moves materially within one
/// window and the binomial model breaks.
pub fn tau_max(lane_width_m: f64, speed_mps: f64, max_turn_angle_rad: f64) -> Result<f64, LaneError> {
    if !(lane_width_m > 0.0) {
        return Err(LaneError::Domain(format!("lane width must be positive, got {lane_width_m}")));
    }
    if !(speed_mps > 0.0) {
        return Err(LaneError::Domain(format!("speed must be positive, got {speed_mps}")));
    }
    let c = max_turn_angle_rad.cos();
    if !(max_turn_angle_rad >= 0.0) || c <= 1e-9 {
        return Err(LaneError::Domain(format!(
            "max turn angle {max_turn_angle_rad} rad leaves no forward motion"
        )));
    }
    Ok(lane_width_m / (2.0 * speed_mps * c))
}

/// Pearson correlation of two equal-length series at zero lag.
pub fn cross_correlation(a: &[f64], b: &[f64]) -> Result<f64, LaneError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(LaneError::Domain(format!(
            "series lengths {} and {} must match and be nonzero",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(LaneError::DegenerateSeries);
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Pearson correlation with `b` shifted by each lag in
/// `-max_lag ..= max_lag` (positive lag: `b` delayed relative to `a`).
/// Returns `(lag, correlation)` pairs for lags with at least two
/// overlapping points and non-degenerate overlap.
pub fn cross_correlation_at_lags(
    a: &[f64],
    b: &[f64],
    max_lag: usize,
) -> Result<Vec<(i64, f64)>, LaneError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(LaneError::Domain("series must be equal-length and nonempty".into()));
    }
    let mut out = Vec::new();
    let n = a.len();
    for lag in -(max_lag as i64)..=(max_lag as i64) {
        // Positive lag: b trails a, so align a[j] against b[j + lag].
        let (a_lo, b_lo) = if lag >= 0 { (0, lag as usize) } else { ((-lag) as usize, 0) };
        let overlap = n - a_lo.max(b_lo);
        if overlap < 2 {
            continue;
        }
        let a_win = &a[a_lo..a_lo + overlap];
        let b_win = &b[b_lo..b_lo + overlap];
        if let Ok(r) = cross_correlation(a_win, b_win) {
            out.push((lag, r));
        }
    }
    if out.is_empty() {
        return Err(LaneError::DegenerateSeries);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Lane experiment configuration and calibration
// ---------------------------------------------------------------------------

/// Simulation config for one lane-marker antenna: downward-looking wide
/// flat-top beam above one lane edge, short-range power budget, and a
/// raised effective noise floor representing ground clutter at near-normal
/// incidence.
pub fn lane_sim_config(side: LaneSide) -> SimConfig {
    let scenario = RoadScenario::preset(ScenarioId::LaneStraight);
    let mount = AntennaMount {
        mount_angle_rad: 0.0,
        beamwidth_rad: 120f64.to_radians(),
        height_m: 1.0,
        lateral_offset_m: match side {
            LaneSide::Left => 0.9,
            LaneSide::Right => -0.9,
        },
        boresight_gain_dbi: 6.0,
        facing: Facing::Downward,
        pattern: BeamPattern::FlatTop,
    };
    SimConfig {
        scenario,
        mount,
        radio: RadioConfig { tx_power_dbm: 15.0, ..RadioConfig::default() },
        multipath: MultipathModel {
            noise_floor_dbm: -50.0,
            excess_noise_sigma_db: 0.0,
            ..MultipathModel::default()
        },
        gen2: Gen2Params { q_init: 2, ..Gen2Params::default() },
        duration_s: None,
        seed: 0,
        trace_detail: engine::TraceDetail::EventsOnly,
    }
}

/// Measures the read-rate curve from the simulator: for each offset the
/// vehicle drives straight (no weave) at that fixed lateral displacement
/// and the right antenna's per-slot success rate is counted. The result is
/// monotonized (running minimum).
pub fn calibrate_read_rate_curve(
    base: &SimConfig,
    offsets_m: &[f64],
    seconds_per_point: f64,
) -> Result<ReadRateCurve, LaneError> {
    if offsets_m.len() < 2 {
        return Err(LaneError::CurveInvalid("need at least two calibration offsets".into()));
    }
    let mut probs = Vec::with_capacity(offsets_m.len());
    for (k, &u) in offsets_m.iter().enumerate() {
        let mut cfg = base.clone();
        cfg.scenario.lateral_drift = None;
        cfg.scenario.start.y_m = u;
        cfg.duration_s = Some(seconds_per_point);
        cfg.seed = rng::stream(base.seed, "lane-calibration", &[k as u64]);
        let result = engine::run(&cfg).map_err(|e| LaneError::Domain(e.to_string()))?;
        let windows =
            window_counts(&result.interrogations, &cfg.scenario, seconds_per_point, LaneSide::Right)?;
        let (n, z) = windows.iter().fold((0u64, 0u64), |(n, z), w| (n + w.n_right, z + w.z_right));
        probs.push(if n == 0 { 0.0 } else { z as f64 / n as f64 });
    }
    ReadRateCurve::new(offsets_m.to_vec(), probs).map(|c| c.monotonized())
}

// ---------------------------------------------------------------------------
