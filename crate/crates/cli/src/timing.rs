//! Audit table of every air-interface duration a parameter set implies:
//! reader commands, tag replies, inter-frame gaps, and the closed-form
//! aggregates the simulator's oracles use.

use reisim_core::gen2::{
    command_duration, query_duration, read_command_duration, read_reply_bits,
    single_tag_round_oracle, tag_reply_duration, user_read_oracle, Gen2Params, ReaderCommand,
    HANDLE_BITS,
};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub item: String,
    /// "command", "reply", "gap", or "aggregate".
    pub kind: String,
    /// Air bits for commands and replies; absent for gaps and aggregates.
    pub bits: Option<u32>,
    pub duration_s: f64,
}

impl TimingRow {
    fn new(item: &str, kind: &str, bits: Option<u32>, duration_s: f64) -> Self {
        Self { item: item.to_string(), kind: kind.to_string(), bits, duration_s }
    }
}

pub const TIMING_HEADER: [&str; 4] = ["item", "kind", "bits", "duration_s"];

pub fn timing_row_fields(r: &TimingRow) -> Vec<String> {
    vec![
        r.item.clone(),
        r.kind.clone(),
        r.bits.map(|b| b.to_string()).unwrap_or_default(),
        r.duration_s.to_string(),
    ]
}

/// Every command and reply duration for a parameter set, plus gaps and the
/// closed-form aggregates. `word_count` prices the user-memory read pair.
pub fn timing_table(p: &Gen2Params, word_count: u32) -> Vec<TimingRow> {
    let mut rows = vec![
        TimingRow::new(
            &format!("query(q={})", p.q_init),
            "command",
            Some(22),
            query_duration(p, p.q_init),
        ),
        TimingRow::new("query_rep", "command", Some(4), command_duration(ReaderCommand::QueryRep, p)),
        TimingRow::new(
            "query_adjust",
            "command",
            Some(9),
            command_duration(ReaderCommand::QueryAdjust, p),
        ),
        TimingRow::new("ack", "command", Some(18), command_duration(ReaderCommand::Ack, p)),
        TimingRow::new("req_rn", "command", Some(40), command_duration(ReaderCommand::ReqRn, p)),
        TimingRow::new("nak", "command", Some(8), command_duration(ReaderCommand::Nak, p)),
        TimingRow::new(
            &format!("read({word_count} words)"),
            "command",
            Some(58),
            read_command_duration(p, word_count),
        ),
        TimingRow::new("rn16_reply", "reply", Some(p.rn16_bits), tag_reply_duration(p.rn16_bits, p)),
        TimingRow::new("epc_reply", "reply", Some(p.epc_bits), tag_reply_duration(p.epc_bits, p)),
        TimingRow::new("handle_reply", "reply", Some(HANDLE_BITS), tag_reply_duration(HANDLE_BITS, p)),
    ];
    let rr_bits = read_reply_bits(word_count);
    rows.push(TimingRow::new(
        &format!("read_reply({word_count} words)"),
        "reply",
        Some(rr_bits),
        tag_reply_duration(rr_bits, p),
    ));
    rows.push(TimingRow::new("t1", "gap", None, p.t1()));
    rows.push(TimingRow::new("t2", "gap", None, p.t2()));
    rows.push(TimingRow::new("t3", "gap", None, p.t3()));
    rows.push(TimingRow::new(
        "single_tag_round",
        "aggregate",
        None,
        single_tag_round_oracle(p),
    ));
    rows.push(TimingRow::new(
        &format!("user_memory_read({word_count} words)"),
        "aggregate",
        None,
        user_read_oracle(p, word_count),
    ));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn test_table_is_complete_and_positive() {
        let rows = timing_table(&Gen2Params::default(), 4);
        assert_eq!(rows.len(), 16);
        assert!(rows.iter().all(|r| r.duration_s > 0.0));
        let kinds: Vec<&str> = rows.iter().map(|r| r.kind.as_str()).collect();
        assert_eq!(kinds.iter().filter(|k| **k == "command").count(), 7);
        assert_eq!(kinds.iter().filter(|k| **k == "reply").count(), 4);
        assert_eq!(kinds.iter().filter(|k| **k == "gap").count(), 3);
        assert_eq!(kinds.iter().filter(|k| **k == "aggregate").count(), 2);
    }

    #[test]
    fn test_round_aggregate_matches_component_sum() {
        let p = Gen2Params::default();
        let rows = timing_table(&p, 1);
        let get = |item: &str| rows.iter().find(|r| r.item == item).unwrap().duration_s;
        let assembled = get("query(q=0)")
            + get("t1")
            + get("rn16_reply")
            + get("t2")
            + get("ack")
            + get("t1")
            + get("epc_reply")
            + get("t2");
        assert_relative_eq!(assembled, get("single_tag_round"), epsilon = 1e-15);
    }
}
