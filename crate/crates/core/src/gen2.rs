//! EPC Gen 2 inventory protocol: command/reply link timing, the
//! slotted-Aloha Q state machine, Session-0 dual-target re-reading, and
//! user-memory READ access.
//!
//! # Timing conventions
//!
//! Reader commands use PIE: data-0 lasts one tari, data-1 lasts
//! `data1_ratio` tari (1.5–2.0). Command durations therefore depend on the
//! transmitted bit values. Known fields are priced with their actual bits
//! (command codes, DR/M/TRext/Sel/Session/Q, memory bank, word pointer and
//! count); unknowable payloads are priced with a fixed documented mix —
//! RN16 and CRC-16 as half ones/half zeros, CRC-5 as two ones/three zeros,
//! the Query target bit and QueryAdjust up/down field as fixed patterns —
//! so that durations are deterministic and reproducible by a hand oracle.
//!
//! Tag replies last `(preamble_symbols + bits + 1) · M / BLF` seconds: the
//! encoding preamble, the payload, and one terminating dummy bit, at M
//! subcarrier cycles per symbol and the backscatter link frequency
//! `BLF = DR / TRcal`.

use crate::rflink::{snr_to_bit_error_rate_with, BerModel, LinkSample};
use crate::rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fixed PIE delimiter duration (seconds).
pub const DELIMITER_S: f64 = 12.5e-6;

#[derive(Debug, Error, PartialEq)]
pub enum Gen2Error {
    #[error("invalid Gen 2 parameters: {0}")]
    InvalidParams(String),
    #[error("READ requires a word count in 1..=255, got {0}")]
    BadWordCount(u32),
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Tag reply encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EncodingScheme {
    #[default]
    Fm0,
    Miller2,
    Miller4,
    Miller8,
}

impl EncodingScheme {
    pub const ALL: [EncodingScheme; 4] =
        [EncodingScheme::Fm0, EncodingScheme::Miller2, EncodingScheme::Miller4, EncodingScheme::Miller8];

    /// Subcarrier cycles per symbol; tag bit rate = BLF / M.
    pub fn miller_m(self) -> u32 {
        match self {
            EncodingScheme::Fm0 => 1,
            EncodingScheme::Miller2 => 2,
            EncodingScheme::Miller4 => 4,
            EncodingScheme::Miller8 => 8,
        }
    }

    /// Query M-field bit values (2 bits).
    fn m_field_ones(self) -> u32 {
        match self {
            EncodingScheme::Fm0 => 0,     // 00
            EncodingScheme::Miller2 => 1, // 01
            EncodingScheme::Miller4 => 1, // 10
            EncodingScheme::Miller8 => 2, // 11
        }
    }

    /// Reply preamble length in symbols, without/with the TRext pilot tone.
    pub fn preamble_symbols(self, trext: bool) -> u32 {
        match (self, trext) {
            (EncodingScheme::Fm0, false) => 6,
            (EncodingScheme::Fm0, true) => 18,
            (_, false) => 16,
            (_, true) => 22,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EncodingScheme::Fm0 => "fm0",
            EncodingScheme::Miller2 => "miller2",
            EncodingScheme::Miller4 => "miller4",
            EncodingScheme::Miller8 => "miller8",
        }
    }
}

/// TRcal divide ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DivideRatio {
    Dr8,
    #[default]
    Dr64Over3,
}

impl DivideRatio {
    pub fn value(self) -> f64 {
        match self {
            DivideRatio::Dr8 => 8.0,
            DivideRatio::Dr64Over3 => 64.0 / 3.0,
        }
    }

    fn query_bit(self) -> u32 {
        match self {
            DivideRatio::Dr8 => 0,
            DivideRatio::Dr64Over3 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Session {
    #[default]
    S0,
    S1,
    S2,
    S3,
}

impl Session {
    fn field_ones(self) -> u32 {
        match self {
            Session::S0 => 0, // 00
            Session::S1 => 1, // 01
            Session::S2 => 1, // 10
            Session::S3 => 2, // 11
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    SingleTarget,
    #[default]
    DualTarget,
}

/// Inventoried flag: which Query target a tag currently answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InvFlag {
    #[default]
    A,
    B,
}

impl InvFlag {
    pub fn flip(self) -> Self {
        match self {
            InvFlag::A => InvFlag::B,
            InvFlag::B => InvFlag::A,
        }
    }
}

/// Protocol timing and mode parameters. Optional fields derive their
/// defaults from the mandatory ones; accessors return the effective values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gen2Params {
    /// Reader data-0 duration (seconds).
    pub tari_s: f64,
    /// data-1 duration as a multiple of tari, in [1.5, 2.0].
    pub data1_ratio: f64,
    /// Reader→tag calibration symbol; default `tari · (1 + data1_ratio)`.
    pub rtcal_s: Option<f64>,
    /// Tag→reader calibration symbol; BLF = DR / TRcal. Default gives
    /// 320 kHz under DR = 64/3 (160 kHz under DR = 8).
    pub trcal_s: Option<f64>,
    pub dr: DivideRatio,
    pub encoding: EncodingScheme,
    /// Pilot-tone preamble extension; default on for Miller, off for FM0.
    pub trext: Option<bool>,
    /// Initial Q (frame size exponent), 0..=15.
    pub q_init: u32,
    pub session: Session,
    pub target_mode: TargetMode,
    /// Reader-response gap; default max(RTcal, 10/BLF).
    pub t1_s: Option<f64>,
    /// Tag-reply-to-reader-command gap; default 3/BLF.
    pub t2_s: Option<f64>,
    /// Extra no-reply wait after T1 on an idle slot; default 10/BLF.
    pub t3_s: Option<f64>,
    /// Full EPC reply payload: 16 PC + 96 EPC + 16 CRC-16 bits.
    pub epc_bits: u32,
    /// RN16 reply payload bits.
    pub rn16_bits: u32,
    /// Q-adaptation step applied per idle (−) or collision (+) slot.
    pub q_adapt_c: f64,
    /// SNR → bit-error-rate model used to grade tag replies.
    pub ber_model: BerModel,
}

impl Default for Gen2Params {
    fn default() -> Self {
        Self {
            tari_s: 12.5e-6,
            data1_ratio: 2.0,
            rtcal_s: None,
            trcal_s: None,
            dr: DivideRatio::Dr64Over3,
            encoding: EncodingScheme::Fm0,
            trext: None,
            q_init: 0,
            session: Session::S0,
            target_mode: TargetMode::DualTarget,
            t1_s: None,
            t2_s: None,
            t3_s: None,
            epc_bits: 128,
            rn16_bits: 16,
            q_adapt_c: 0.3,
            ber_model: BerModel::QProcessingGain,
        }
    }
}

impl Gen2Params {
    pub fn data1_s(&self) -> f64 {
        self.tari_s * self.data1_ratio
    }

    pub fn rtcal(&self) -> f64 {
        self.rtcal_s.unwrap_or(self.tari_s * (1.0 + self.data1_ratio))
    }

    pub fn trcal(&self) -> f64 {
        self.trcal_s.unwrap_or(match self.dr {
            DivideRatio::Dr64Over3 => (64.0 / 3.0) / 320e3,
            DivideRatio::Dr8 => 8.0 / 160e3,
        })
    }

    /// Backscatter link frequency (Hz): DR / TRcal.
    pub fn blf_hz(&self) -> f64 {
        self.dr.value() / self.trcal()
    }

    pub fn trext_on(&self) -> bool {
        self.trext.unwrap_or(self.encoding != EncodingScheme::Fm0)
    }

    pub fn t1(&self) -> f64 {
        self.t1_s.unwrap_or_else(|| self.rtcal().max(10.0 / self.blf_hz()))
    }

    pub fn t2(&self) -> f64 {
        self.t2_s.unwrap_or(3.0 / self.blf_hz())
    }

    pub fn t3(&self) -> f64 {
        self.t3_s.unwrap_or(10.0 / self.blf_hz())
    }

    pub fn validate(&self) -> Result<(), Gen2Error> {
        let err = |m: String| Err(Gen2Error::InvalidParams(m));
        if !(self.tari_s > 0.0) {
            return err(format!("tari_s must be positive, got {}", self.tari_s));
        }
        if !(1.5..=2.0).contains(&self.data1_ratio) {
            return err(format!("data1_ratio {} outside [1.5, 2.0]", self.data1_ratio));
        }
        let rtcal = self.rtcal();
        if !(2.5 * self.tari_s - 1e-12..=3.0 * self.tari_s + 1e-12).contains(&rtcal) {
            return err(format!("rtcal_s {rtcal} outside [2.5, 3.0]·tari"));
        }
        let trcal = self.trcal();
        if !(1.1 * rtcal - 1e-12..=3.0 * rtcal + 1e-12).contains(&trcal) {
            return err(format!("trcal_s {trcal} outside [1.1, 3.0]·rtcal"));
        }
        if self.q_init > 15 {
            return err(format!("q_init {} outside 0..=15", self.q_init));
        }
        if self.epc_bits < 32 || self.epc_bits % 8 != 0 {
            return err(format!("epc_bits {} must be a multiple of 8, at least 32", self.epc_bits));
        }
        if self.rn16_bits != 16 {
            return err(format!("rn16_bits must be 16, got {}", self.rn16_bits));
        }
        if !(0.0..=2.0).contains(&self.q_adapt_c) {
            return err(format!("q_adapt_c {} outside [0, 2]", self.q_adapt_c));
        }
        let nominal_t1 = self.rtcal().max(10.0 / self.blf_hz());
        if let Some(t1) = self.t1_s {
            let tol = 0.1 * nominal_t1 + 2e-6;
            if (t1 - nominal_t1).abs() > tol {
                return err(format!(
                    "t1_s {t1} outside protocol tolerance of nominal {nominal_t1}"
                ));
            }
        }
        for (name, v) in [("t2_s", self.t2()), ("t3_s", self.t3())] {
            if !(v > 0.0) {
                return err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Command and reply durations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReaderCommand {
    Query,
    QueryRep,
    QueryAdjust,
    Ack,
    ReqRn,
    Read,
    Nak,
}

/// Reader transmission framing: Query carries the full preamble (with
/// TRcal); every other command carries the shorter frame-sync.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReaderFrame {
    Preamble,
    FrameSync,
}

/// Duration of a reader transmission: framing plus a PIE-encoded payload of
/// the given zero/one bit counts. Zero bits of payload price the framing
/// alone.
pub fn reader_transmission_duration(p: &Gen2Params, frame: ReaderFrame, zeros: u32, ones: u32) -> f64 {
    let framing = match frame {
        ReaderFrame::Preamble => DELIMITER_S + p.tari_s + p.rtcal() + p.trcal(),
        ReaderFrame::FrameSync => DELIMITER_S + p.tari_s + p.rtcal(),
    };
    framing + zeros as f64 * p.tari_s + ones as f64 * p.data1_s()
}

fn balanced(bits: u32) -> (u32, u32) {
    (bits / 2, bits / 2)
}

/// (zeros, ones) of a Query payload at frame exponent `q`: command code
/// 1000, DR, M, TRext, Sel = 00, Session, Target (priced as 0), the Q
/// nibble, and CRC-5 priced as two ones.
fn query_bit_mix(p: &Gen2Params, q: u32) -> (u32, u32) {
    let ones = 1
        + p.dr.query_bit()
        + p.encoding.m_field_ones()
        + p.trext_on() as u32
        + p.session.field_ones()
        + q.count_ones()
        + 2;
    (22 - ones, ones)
}

/// Duration of a Query opening a frame of exponent `q`.
pub fn query_duration(p: &Gen2Params, q: u32) -> f64 {
    let (zeros, ones) = query_bit_mix(p, q);
    reader_transmission_duration(p, ReaderFrame::Preamble, zeros, ones)
}

/// Duration of a READ command for the user bank at word pointer 0 with the
/// given word count (58 bits with a one-byte pointer).
pub fn read_command_duration(p: &Gen2Params, word_count: u32) -> f64 {
    let ones = 3 + 2 + word_count.count_ones() + 8 + 8;
    reader_transmission_duration(p, ReaderFrame::FrameSync, 58 - ones, ones)
}

/// Duration of a reader command under the documented bit-mix pricing.
/// Query is priced at `p.q_init`; Read at word count 1.
pub fn command_duration(command: ReaderCommand, p: &Gen2Params) -> f64 {
    match command {
        ReaderCommand::Query => query_duration(p, p.q_init),
        ReaderCommand::QueryRep => {
            let ones = p.session.field_ones();
            reader_transmission_duration(p, ReaderFrame::FrameSync, 4 - ones, ones)
        }
        ReaderCommand::QueryAdjust => {
            // 1001 + session + up/down priced as "increment" (110).
            let ones = 2 + p.session.field_ones() + 2;
            reader_transmission_duration(p, ReaderFrame::FrameSync, 9 - ones, ones)
        }
        ReaderCommand::Ack => {
            let (z, o) = balanced(16);
            reader_transmission_duration(p, ReaderFrame::FrameSync, z + 1, o + 1)
        }
        ReaderCommand::ReqRn => {
            // 11000001 + RN16 + CRC16.
            let (z, o) = balanced(32);
            reader_transmission_duration(p, ReaderFrame::FrameSync, z + 5, o + 3)
        }
        ReaderCommand::Read => read_command_duration(p, 1),
        ReaderCommand::Nak => {
            // 11000000.
            reader_transmission_duration(p, ReaderFrame::FrameSync, 6, 2)
        }
    }
}

/// Duration of a tag reply carrying `bits` payload bits:
/// `(preamble + bits + 1 dummy) · M / BLF`.
pub fn tag_reply_duration(bits: u32, p: &Gen2Params) -> f64 {
    assert!(bits > 0, "tag replies carry at least one bit");
    let preamble = p.encoding.preamble_symbols(p.trext_on());
    (preamble + bits + 1) as f64 * p.encoding.miller_m() as f64 / p.blf_hz()
}

/// Handle reply to ReqRN: new RN16 plus CRC-16.
pub const HANDLE_BITS: u32 = 32;

/// READ reply payload: header bit, data words, RN16, CRC-16.
pub fn read_reply_bits(word_count: u32) -> u32 {
    1 + 16 * word_count + 16 + 16
}

/// Closed-form duration of one complete noiseless single-tag inventory
/// round: Query, T1, RN16, T2, ACK, T1, EPC reply, T2. This is the oracle
/// the event-driven machine must reproduce exactly.
pub fn single_tag_round_oracle(p: &Gen2Params) -> f64 {
    query_duration(p, p.q_init)
        + p.t1()
        + tag_reply_duration(p.rn16_bits, p)
        + p.t2()
        + command_duration(ReaderCommand::Ack, p)
        + p.t1()
        + tag_reply_duration(p.epc_bits, p)
        + p.t2()
}

// ---------------------------------------------------------------------------
// Tag state and outcomes
// ---------------------------------------------------------------------------

/// Per-tag protocol state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TagSessionState {
    pub inventoried_flag: InvFlag,
    pub powered: bool,
    pub in_round: bool,
    pub slot_counter: u32,
}

impl TagSessionState {
    /// Records a power observation; on a Session-0 power loss the
    /// inventoried flag decays immediately back to A.
    fn observe_power(&mut self, powered: bool, session: Session) {
        if self.powered && !powered && session == Session::S0 {
            self.inventoried_flag = InvFlag::A;
        }
        self.powered = powered;
        if !powered {
            self.in_round = false;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Success,
    Collision,
    IdleSlot,
    LinkMarginFailure,
    TruncatedByExit,
    AckTimeout,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Success => "success",
            OutcomeKind::Collision => "collision",
            OutcomeKind::IdleSlot => "idle_slot",
            OutcomeKind::LinkMarginFailure => "link_margin_failure",
            OutcomeKind::TruncatedByExit => "truncated_by_exit",
            OutcomeKind::AckTimeout => "ack_timeout",
        }
    }
}

impl std::str::FromStr for OutcomeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "success" => OutcomeKind::Success,
            "collision" => OutcomeKind::Collision,
            "idle_slot" => OutcomeKind::IdleSlot,
            "link_margin_failure" => OutcomeKind::LinkMarginFailure,
            "truncated_by_exit" => OutcomeKind::TruncatedByExit,
            "ack_timeout" => OutcomeKind::AckTimeout,
            other => return Err(format!("unknown outcome kind '{other}'")),
        })
    }
}

/// One slot-level protocol exchange: its outcome, time span, and every
/// command, reply, and inter-command gap that filled it. The listed
/// durations sum exactly to `t_end − t_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryOutcome {
    pub result: OutcomeKind,
    pub t_start: f64,
    pub t_end: f64,
    pub round_index: u64,
    pub slot_index: u64,
    /// Tag involved in a resolved slot (success or failed singulation).
    pub tag: Option<usize>,
    pub commands_exchanged: Vec<(&'static str, f64)>,
}

/// A successful EPC delivery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRead {
    /// Completion time of the EPC reply.
    pub t_s: f64,
    pub tag: usize,
    pub snr_db: f64,
    pub round_index: u64,
    pub slot_index: u64,
}

/// Output of one inventory round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutput {
    pub t_end: f64,
    pub reads: Vec<RoundRead>,
    pub outcomes: Vec<InventoryOutcome>,
    /// True when the round was cut short by the time limit.
    pub reached_limit: bool,
}

// ---------------------------------------------------------------------------
// Inventory machine
// ---------------------------------------------------------------------------

/// Reader-side inventory state machine over a fixed tag population.
///
/// The machine owns protocol state (Q, target, per-tag session flags) and
/// consumes a link oracle `link(tag_index, t) -> LinkSample` supplied by the
/// caller, so the same machine drives both geometric simulations and
/// fixed-SNR benches.
#[derive(Debug, Clone)]
pub struct InventoryMachine {
    pub params: Gen2Params,
    pub qfp: f64,
    pub target: InvFlag,
    pub round_index: u64,
    pub states: Vec<TagSessionState>,
    seed: u64,
}

impl InventoryMachine {
    pub fn new(params: Gen2Params, n_tags: usize, seed: u64) -> Result<Self, Gen2Error> {
        params.validate()?;
        Ok(Self {
            qfp: params.q_init as f64,
            target: InvFlag::A,
            round_index: 0,
            states: vec![TagSessionState::default(); n_tags],
            params,
            seed,
        })
    }

    /// Current frame exponent.
    pub fn q(&self) -> u32 {
        (self.qfp.round() as i64).clamp(0, 15) as u32
    }

    /// Runs one full inventory round (Query + 2^Q slots) starting at
    /// `t_start`, stopping early at `t_limit`. Only tags listed in `active`
    /// can participate; the caller prunes tags that are plainly out of
    /// range.
    pub fn run_round(
        &mut self,
        t_start: f64,
        t_limit: f64,
        active: &[usize],
        link: &dyn Fn(usize, f64) -> LinkSample,
    ) -> RoundOutput {
        let p = self.params;
        let round = self.round_index;
        let q = self.q();
        let slots: u64 = 1 << q;
        let mut reads = Vec::new();
        let mut outcomes = Vec::new();

        let mut t = t_start;
        let mut slot_open = t_start;
        let mut cmds: Vec<(&'static str, f64)> = Vec::new();

        // Helper result signaling that the limit interrupted the round.
        macro_rules! advance {
            ($name:expr, $dur:expr) => {{
                let dur = $dur;
                if t + dur > t_limit {
                    let partial = t_limit - t;
                    if partial > 0.0 {
                        cmds.push(($name, partial));
                    }
                    outcomes.push(InventoryOutcome {
                        result: OutcomeKind::TruncatedByExit,
                        t_start: slot_open,
                        t_end: t_limit,
                        round_index: round,
                        slot_index: outcomes.len() as u64,
                        tag: None,
                        commands_exchanged: std::mem::take(&mut cmds),
                    });
                    self.round_index += 1;
                    return RoundOutput { t_end: t_limit, reads, outcomes, reached_limit: true };
                }
                cmds.push(($name, dur));
                t += dur;
            }};
        }

        advance!("query", query_duration(&p, q));

        // Round roster: powered, target-matching tags draw a slot.
        let mut slot_of: Vec<Option<u64>> = vec![None; self.states.len()];
        for &i in active {
            let ls = link(i, t);
            self.states[i].observe_power(ls.tag_powered, p.session);
            if ls.tag_powered && self.states[i].inventoried_flag == self.target {
                let s = rng::uniform_index(self.seed, "slot", &[i as u64, round], slots);
                slot_of[i] = Some(s);
                self.states[i].in_round = true;
                self.states[i].slot_counter = s as u32;
            }
        }

        for s in 0..slots {
            if s > 0 {
                advance!("query_rep", command_duration(ReaderCommand::QueryRep, &p));
                slot_open = t - command_duration(ReaderCommand::QueryRep, &p);
            }

            // Peek at responders at the moment their RN16 would be on air.
            let t_rn16_mid = t + p.t1() + 0.5 * tag_reply_duration(p.rn16_bits, &p);
            let mut responders: Vec<(usize, LinkSample)> = Vec::new();
            for &i in active {
                if slot_of[i] == Some(s) {
                    let ls = link(i, t_rn16_mid);
                    self.states[i].observe_power(ls.tag_powered, p.session);
                    if ls.in_beam && ls.tag_powered {
                        responders.push((i, ls));
                    }
                }
            }

            let (result, tag) = match responders.len() {
                0 => {
                    advance!("t1", p.t1());
                    advance!("t3", p.t3());
                    self.qfp = (self.qfp - p.q_adapt_c).max(0.0);
                    (OutcomeKind::IdleSlot, None)
                }
                1 => {
                    let (i, rn16_link) = responders[0];
                    let (kind, read) = self.singulate(
                        &mut t,
                        t_limit,
                        &mut cmds,
                        i,
                        rn16_link,
                        round,
                        s,
                        link,
                    );
                    match kind {
                        None => {
                            // Time limit hit mid-exchange.
                            outcomes.push(InventoryOutcome {
                                result: OutcomeKind::TruncatedByExit,
                                t_start: slot_open,
                                t_end: t_limit,
                                round_index: round,
                                slot_index: s,
                                tag: Some(i),
                                commands_exchanged: std::mem::take(&mut cmds),
                            });
                            self.round_index += 1;
                            return RoundOutput {
                                t_end: t_limit,
                                reads,
                                outcomes,
                                reached_limit: true,
                            };
                        }
                        Some(kind) => {
                            if let Some(r) = read {
                                reads.push(r);
                            }
                            (kind, Some(i))
                        }
                    }
                }
                _ => {
                    advance!("t1", p.t1());
                    advance!("rn16", tag_reply_duration(p.rn16_bits, &p));
                    advance!("t2", p.t2());
                    self.qfp = (self.qfp + p.q_adapt_c).min(15.0);
                    (OutcomeKind::Collision, None)
                }
            };

            outcomes.push(InventoryOutcome {
                result,
                t_start: slot_open,
                t_end: t,
                round_index: round,
                slot_index: s,
                tag,
                commands_exchanged: std::mem::take(&mut cmds),
            });
            slot_open = t;
        }

        for &i in active {
            self.states[i].in_round = false;
        }
        self.round_index += 1;
        // Dual-target alternation: flip after a round that read something
        // (continuous re-reading of Session-0 tags) or that was entirely
        // idle (current-target population exhausted or absent). Hold the
        // target while collisions or failed exchanges are being resolved,
        // otherwise two contending tags would starve: alternating
        // collision (+C) and empty-frame (−C) rounds cancel and Q never
        // grows.
        let had_responder = outcomes.iter().any(|o| o.result != OutcomeKind::IdleSlot);
        if p.target_mode == TargetMode::DualTarget && (!reads.is_empty() || !had_responder) {
            self.target = self.target.flip();
        }
        RoundOutput { t_end: t, reads, outcomes, reached_limit: false }
    }

    /// Single-responder RN16/ACK/EPC exchange. Returns `None` as the kind
    /// when the time limit interrupted (commands already charged up to the
    /// limit).
    #[allow(clippy::too_many_arguments)]
    fn singulate(
        &mut self,
        t: &mut f64,
        t_limit: f64,
        cmds: &mut Vec<(&'static str, f64)>,
        tag: usize,
        rn16_link: LinkSample,
        round: u64,
        slot: u64,
        link: &dyn Fn(usize, f64) -> LinkSample,
    ) -> (Option<OutcomeKind>, Option<RoundRead>) {
        let p = self.params;
        macro_rules! advance {
            ($name:expr, $dur:expr) => {{
                let dur = $dur;
                if *t + dur > t_limit {
                    let partial = t_limit - *t;
                    if partial > 0.0 {
                        cmds.push(($name, partial));
                    }
                    *t = t_limit;
                    return (None, None);
                }
                cmds.push(($name, dur));
                *t += dur;
            }};
        }

        advance!("t1", p.t1());
        // RN16 reply. The responder was sampled at the reply midpoint; it is
        // in beam and powered (checked by the caller).
        advance!("rn16", tag_reply_duration(p.rn16_bits, &p));
        if !self.reply_decodes(rn16_link.snr_db, p.rn16_bits, tag, round, slot, 0) {
            advance!("t2", p.t2());
            return (Some(OutcomeKind::AckTimeout), None);
        }
        advance!("t2", p.t2());
        advance!("ack", command_duration(ReaderCommand::Ack, &p));
        advance!("t1", p.t1());

        // EPC reply: re-sample the link at its midpoint.
        let epc_dur = tag_reply_duration(p.epc_bits, &p);
        let ls = link(tag, *t + 0.5 * epc_dur);
        self.states[tag].observe_power(ls.tag_powered, p.session);
        if !ls.in_beam {
            advance!("epc", epc_dur);
            return (Some(OutcomeKind::TruncatedByExit), None);
        }
        if !ls.tag_powered {
            advance!("epc", epc_dur);
            return (Some(OutcomeKind::LinkMarginFailure), None);
        }
        advance!("epc", epc_dur);
        if !self.reply_decodes(ls.snr_db, p.epc_bits, tag, round, slot, 1) {
            advance!("t2", p.t2());
            advance!("nak", command_duration(ReaderCommand::Nak, &p));
            return (Some(OutcomeKind::AckTimeout), None);
        }
        let read = RoundRead {
            t_s: *t,
            tag,
            snr_db: ls.snr_db,
            round_index: round,
            slot_index: slot,
        };
        advance!("t2", p.t2());
        self.states[tag].inventoried_flag = self.states[tag].inventoried_flag.flip();
        (Some(OutcomeKind::Success), Some(read))
    }

    /// Per-reply success: probability `(1 − BER)^bits` at the reply's
    /// midpoint SNR, drawn from a named stream so other draws stay aligned.
    fn reply_decodes(
        &self,
        snr_db: f64,
        bits: u32,
        tag: usize,
        round: u64,
        slot: u64,
        ordinal: u64,
    ) -> bool {
        let ber = snr_to_bit_error_rate_with(snr_db, self.params.encoding, self.params.ber_model);
        let p_ok = (1.0 - ber).powi(bits as i32);
        rng::uniform(self.seed, "reply_ok", &[tag as u64, round, slot, ordinal]) < p_ok
    }
}

// ---------------------------------------------------------------------------
// Convenience drivers
// ---------------------------------------------------------------------------

/// Runs inventory rounds over `[t_start, t_limit)` with every tag active in
/// every round. Returns reads and slot-level outcomes.
pub fn run_inventory(
    params: Gen2Params,
    n_tags: usize,
    t_start: f64,
    t_limit: f64,
    seed: u64,
    link: &dyn Fn(usize, f64) -> LinkSample,
) -> Result<(Vec<RoundRead>, Vec<InventoryOutcome>), Gen2Error> {
    let mut machine = InventoryMachine::new(params, n_tags, seed)?;
    let active: Vec<usize> = (0..n_tags).collect();
    let mut t = t_start;
    let mut reads = Vec::new();
    let mut outcomes = Vec::new();
    while t < t_limit {
        let out = machine.run_round(t, t_limit, &active, link);
        reads.extend(out.reads);
        outcomes.extend(out.outcomes);
        t = out.t_end;
        if out.reached_limit {
            break;
        }
    }
    Ok((reads, outcomes))
}

/// One single-tag inventory round (Query through EPC) against a single-tag
/// link oracle: the spec'd singulation primitive. `attempt` salts the
/// random draws so repeated attempts are independent.
pub fn singulation_attempt(
    state: &mut TagSessionState,
    params: Gen2Params,
    link: &dyn Fn(f64) -> LinkSample,
    t_now: f64,
    t_limit: f64,
    seed: u64,
    attempt: u64,
) -> Result<(InventoryOutcome, Option<RoundRead>), Gen2Error> {
    let mut machine = InventoryMachine::new(Gen2Params { q_init: 0, ..params }, 1, seed)?;
    machine.round_index = attempt;
    machine.states[0] = *state;
    machine.target = state.inventoried_flag;
    let out = machine.run_round(t_now, t_limit, &[0], &|_, t| link(t));
    *state = machine.states[0];
    let outcome = out
        .outcomes
        .into_iter()
        .next()
        .expect("a round always produces at least one outcome");
    Ok((outcome, out.reads.into_iter().next()))
}

/// Result of one user-memory READ continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct UserReadOutcome {
    pub duration_s: f64,
    pub success: bool,
    pub commands_exchanged: Vec<(&'static str, f64)>,
}

/// Continues a singulated exchange with ReqRN → handle → READ → data reply.
/// Returns the time consumed (ending at the trailing T2 on success, or at
/// the failure point) and whether the data arrived. On failure the whole
/// inventory must be restarted by the caller; the time is still charged.
#[allow(clippy::too_many_arguments)]
pub fn read_user_memory(
    params: &Gen2Params,
    word_count: u32,
    tag: usize,
    link: &dyn Fn(f64) -> LinkSample,
    t_now: f64,
    seed: u64,
    attempt: u64,
    state: &mut TagSessionState,
) -> Result<UserReadOutcome, Gen2Error> {
    if word_count == 0 || word_count > 255 {
        return Err(Gen2Error::BadWordCount(word_count));
    }
    params.validate()?;
    let p = params;
    let mut cmds: Vec<(&'static str, f64)> = Vec::new();
    let mut t = t_now;
    let push = |cmds: &mut Vec<(&'static str, f64)>, t: &mut f64, name, dur: f64| {
        cmds.push((name, dur));
        *t += dur;
    };

    let ber_ok = |snr_db: f64, bits: u32, ordinal: u64| {
        let ber = snr_to_bit_error_rate_with(snr_db, p.encoding, p.ber_model);
        rng::uniform(seed, "reply_ok", &[tag as u64, attempt, 0, ordinal])
            < (1.0 - ber).powi(bits as i32)
    };

    // ReqRN → handle reply.
    push(&mut cmds, &mut t, "req_rn", command_duration(ReaderCommand::ReqRn, p));
    push(&mut cmds, &mut t, "t1", p.t1());
    let handle_dur = tag_reply_duration(HANDLE_BITS, p);
    let ls = link(t + 0.5 * handle_dur);
    state.observe_power(ls.tag_powered, p.session);
    push(&mut cmds, &mut t, "handle", handle_dur);
    if !ls.tag_powered || !ber_ok(ls.snr_db, HANDLE_BITS, 2) {
        return Ok(UserReadOutcome { duration_s: t - t_now, success: false, commands_exchanged: cmds });
    }
    push(&mut cmds, &mut t, "t2", p.t2());

    // READ → data reply.
    push(&mut cmds, &mut t, "read", read_command_duration(p, word_count));
    push(&mut cmds, &mut t, "t1", p.t1());
    let data_bits = read_reply_bits(word_count);
    let data_dur = tag_reply_duration(data_bits, p);
    let ls = link(t + 0.5 * data_dur);
    state.observe_power(ls.tag_powered, p.session);
    push(&mut cmds, &mut t, "read_reply", data_dur);
    if !ls.tag_powered || !ber_ok(ls.snr_db, data_bits, 3) {
        return Ok(UserReadOutcome { duration_s: t - t_now, success: false, commands_exchanged: cmds });
    }
    push(&mut cmds, &mut t, "t2", p.t2());
    Ok(UserReadOutcome { duration_s: t - t_now, success: true, commands_exchanged: cmds })
}

/// Closed-form duration of the noiseless ReqRN/handle/READ/data continuation.
pub fn user_read_oracle(p: &Gen2Params, word_count: u32) -> f64 {
    command_duration(ReaderCommand::ReqRn, p)
        + p.t1()
        + tag_reply_duration(HANDLE_BITS, p)
        + p.t2()
        + read_command_duration(p, word_count)
        + p.t1()
        + tag_reply_duration(read_reply_bits(word_count), p)
        + p.t2()
}

// ---------------------------------------------------------------------------
