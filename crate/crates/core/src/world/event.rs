use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Army, CombatStat, UnitId};
use crate::geometry::Pos;
use crate::strategy::Action;

/// Something that happened during one turn. Serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    /// An order was assigned. `state` is the unit's state index when the
    /// order was issued.
    Order {
        unit_id: UnitId,
        army: Army,
        action: Action,
        state: usize,
    },
    OrderRejected {
        unit_id: UnitId,
        action: Action,
        reason: RejectReason,
    },
    /// `damage` is the energy paid for entering the destination cell.
    Move {
        unit_id: UnitId,
        from: Pos,
        to: Pos,
        damage: i32,
    },
    /// `unit_id` lost the round against `opponent`.
    Combat {
        unit_id: UnitId,
        opponent: UnitId,
        damage: i32,
        stat: CombatStat,
    },
    Death {
        unit_id: UnitId,
        army: Army,
        at: Pos,
    },
    FlagDiscovered {
        army: Army,
        at: Pos,
    },
    Capture {
        unit_id: UnitId,
        army: Army,
        at: Pos,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    UnknownUnit,
    Dead,
    Foreign,
}

/// Events of one `step_turn` call. `turn` is the turn counter before the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnReport {
    pub turn: u32,
    pub events: Vec<Event>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("malformed replay at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A replay log: one JSON object per turn, one turn per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Replay {
    pub turns: Vec<TurnReport>,
}

impl Replay {
    pub fn push(&mut self, report: TurnReport) {
        self.turns.push(report);
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.turns {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Replay, ReplayError> {
        let mut turns = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let t: TurnReport =
                serde_json::from_str(&line).map_err(|e| ReplayError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            turns.push(t);
        }
        Ok(Replay { turns })
    }

    pub fn from_jsonl(text: &str) -> Result<Replay, ReplayError> {
        Replay::read_jsonl(text.as_bytes())
    }

    /// SHA-256 of the JSONL bytes, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.turns.iter().flat_map(|t| t.events.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_wire_shape() {
        let e = Event::Move {
            unit_id: 3,
            from: Pos::new(1, 2),
            to: Pos::new(2, 2),
            damage: 0,
        };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"kind":"move","unit_id":3,"from":[1,2],"to":[2,2],"damage":0}"#
        );
    }

    #[test]
    fn truncated_replay_reports_line() {
        let mut r = Replay::default();
        r.push(TurnReport {
            turn: 0,
            events: vec![],
        });
        r.push(TurnReport {
            turn: 1,
            events: vec![Event::FlagDiscovered {
                army: Army::Hp,
                at: Pos::new(0, 0),
            }],
        });
        let text = r.to_jsonl();
        assert_eq!(Replay::from_jsonl(&text).unwrap(), r);
        let cut = &text[..text.len() - 10];
        match Replay::from_jsonl(cut) {
            Err(ReplayError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }
}
