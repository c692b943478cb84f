//! Player modeling: count the orders a player gives in each unit state and
//! collapse the counts into a deterministic answer matrix.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategy::{
    state_index, Action, AnswerMatrix, Perception, StateIndex, NUM_ACTIONS, NUM_STATES,
};
use crate::world::{Army, Event, Replay};

pub const MODEL_FORMAT: &str = "extended-answer-matrix-v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unexpected format {found:?}, expected {expected:?}")]
    FormatMismatch { expected: String, found: String },
    #[error("malformed model: {0}")]
    Malformed(String),
}

/// Per-state action counts of an observed player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ExtendedAnswerMatrix {
    counts: [[u64; NUM_ACTIONS]; NUM_STATES],
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    counts: Vec<Vec<u64>>,
}

/// Result of [`ExtendedAnswerMatrix::probabilities`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowDistribution {
    Observed([f64; NUM_ACTIONS]),
    Unobserved,
}

impl ExtendedAnswerMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [[u64; NUM_ACTIONS]; NUM_STATES]) -> Self {
        let total = counts.iter().flatten().sum();
        ExtendedAnswerMatrix { counts, total }
    }

    pub fn counts(&self) -> &[[u64; NUM_ACTIONS]; NUM_STATES] {
        &self.counts
    }

    pub fn total_observations(&self) -> u64 {
        self.total
    }

    pub fn row_total(&self, index: StateIndex) -> u64 {
        self.counts[index.value()].iter().sum()
    }

    pub fn is_observed(&self, index: StateIndex) -> bool {
        self.row_total(index) > 0
    }

    pub fn observed_states(&self) -> impl Iterator<Item = StateIndex> + '_ {
        StateIndex::all().filter(|&i| self.is_observed(i))
    }

    /// Count one order given to a unit in the perceived state.
    pub fn record(&mut self, perception: &Perception, action: Action) {
        self.record_index(state_index(perception), action);
    }

    pub fn record_index(&mut self, index: StateIndex, action: Action) {
        self.counts[index.value()][action.slot()] += 1;
        self.total += 1;
    }

    pub fn probabilities(&self, index: StateIndex) -> RowDistribution {
        let row = &self.counts[index.value()];
        let sum: u64 = row.iter().sum();
        if sum == 0 {
            return RowDistribution::Unobserved;
        }
        let mut p = [0.0; NUM_ACTIONS];
        for (out, &c) in p.iter_mut().zip(row) {
            *out = c as f64 / sum as f64;
        }
        RowDistribution::Observed(p)
    }

    /// Most frequent action per observed state (lowest action number on
    /// ties); unobserved states take the fallback's action.
    pub fn extract_policy(&self, fallback: &AnswerMatrix) -> AnswerMatrix {
        let mut out = *fallback;
        for i in StateIndex::all() {
            let row = &self.counts[i.value()];
            if row.iter().all(|&c| c == 0) {
                continue;
            }
            let mut best = 0;
            for a in 1..NUM_ACTIONS {
                if row[a] > row[best] {
                    best = a;
                }
            }
            out.set(i, Action::ALL[best]);
        }
        out
    }

    pub fn merge(&self, other: &ExtendedAnswerMatrix) -> ExtendedAnswerMatrix {
        let mut counts = self.counts;
        for (row, orow) in counts.iter_mut().zip(other.counts.iter()) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
        ExtendedAnswerMatrix {
            counts,
            total: self.total + other.total,
        }
    }

    /// Rebuild a model from the human army's order events of a replay.
    pub fn from_replay(replay: &Replay) -> ExtendedAnswerMatrix {
        let mut m = ExtendedAnswerMatrix::new();
        for e in replay.events() {
            if let Event::Order {
                army: Army::Hp,
                action,
                state,
                ..
            } = e
            {
                if let Ok(i) = StateIndex::new(*state) {
                    m.record_index(i, *action);
                }
            }
        }
        m
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            counts: self.counts.iter().map(|r| r.to_vec()).collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<ExtendedAnswerMatrix, ModelError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        let found = value.get("format").and_then(|f| f.as_str()).unwrap_or_default();
        if found != MODEL_FORMAT {
            return Err(ModelError::FormatMismatch {
                expected: MODEL_FORMAT.to_string(),
                found: found.to_string(),
            });
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| ModelError::Malformed(e.to_string()))?;
        if file.counts.len() != NUM_STATES {
            return Err(ModelError::Malformed(format!(
                "expected {NUM_STATES} rows, got {}",
                file.counts.len()
            )));
        }
        let mut counts = [[0u64; NUM_ACTIONS]; NUM_STATES];
        for (i, row) in file.counts.iter().enumerate() {
            if row.len() != NUM_ACTIONS {
                return Err(ModelError::Malformed(format!(
                    "row {i} has {} entries, expected {NUM_ACTIONS}",
                    row.len()
                )));
            }
            counts[i].copy_from_slice(row);
        }
        Ok(ExtendedAnswerMatrix::from_counts(counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{decode_state, rbp_default};
    use proptest::prelude::*;

    fn with_row(i: usize, row: [u64; 6]) -> ExtendedAnswerMatrix {
        let mut c = [[0; 6]; 24];
        c[i] = row;
        ExtendedAnswerMatrix::from_counts(c)
    }

    #[test]
    fn record_examples() {
        let mut m = ExtendedAnswerMatrix::new();
        m.record(&decode_state(13).unwrap(), Action::MoveForwardObjective);
        assert_eq!(m.counts()[13][2], 1);
        assert_eq!(m.total_observations(), 1);
        assert_eq!(m.counts().iter().flatten().sum::<u64>(), 1);

        let mut g = ExtendedAnswerMatrix::new();
        let p = decode_state(5).unwrap();
        for _ in 0..5 {
            g.record(&p, Action::GroupRunAway);
        }
        assert_eq!(g.counts()[5][1], 5);
    }

    #[test]
    fn probability_examples() {
        let i = StateIndex::new(7).unwrap();
        let m = with_row(7, [2, 3, 5, 0, 0, 0]);
        match m.probabilities(i) {
            RowDistribution::Observed(p) => {
                let expected = [0.2, 0.3, 0.5, 0.0, 0.0, 0.0];
                for (a, b) in p.iter().zip(expected) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            RowDistribution::Unobserved => panic!("row is observed"),
        }
        assert_eq!(
            m.probabilities(StateIndex::new(0).unwrap()),
            RowDistribution::Unobserved
        );
        assert_eq!(
            with_row(7, [0, 0, 0, 7, 0, 0]).probabilities(i),
            RowDistribution::Observed([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        );
    }

    #[test]
    fn extract_examples() {
        let rbp = rbp_default();
        // probabilities [0.1,0.5,0.2,0.1,0.05,0.05] as counts out of 20
        let m = with_row(3, [2, 10, 4, 2, 1, 1]);
        let p = m.extract_policy(&rbp);
        assert_eq!(p.cells()[3], Action::GroupRunAway);
        // unobserved row 0 keeps the fallback (Explore)
        assert_eq!(p.cells()[0], Action::Explore);
        let tie = with_row(3, [4, 4, 0, 0, 0, 0]).extract_policy(&rbp);
        assert_eq!(tie.cells()[3], Action::MoveForwardEnemy);
    }

    #[test]
    fn merge_examples() {
        let mut a = ExtendedAnswerMatrix::new();
        a.record(&decode_state(1).unwrap(), Action::Explore);
        let mut b = ExtendedAnswerMatrix::new();
        b.record(&decode_state(2).unwrap(), Action::ProtectFlag);
        assert_eq!(a.merge(&ExtendedAnswerMatrix::new()), a);
        assert_eq!(a.merge(&b), b.merge(&a));
        assert_eq!(a.merge(&b).total_observations(), 2);
    }

    #[test]
    fn json_round_trip_is_byte_exact() {
        let m = with_row(11, [1, 0, 3, 0, 9, 2]);
        let text = m.to_json();
        let back = ExtendedAnswerMatrix::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
        assert!(matches!(
            ExtendedAnswerMatrix::from_json(&text.replace("-v1", "-v2")),
            Err(ModelError::FormatMismatch { .. })
        ));
    }

    fn arb_counts() -> impl Strategy<Value = [[u64; 6]; 24]> {
        proptest::array::uniform24(proptest::array::uniform6(0u64..50))
    }

    proptest! {
        #[test]
        fn scaling_a_row_keeps_its_argmax(counts in arb_counts(), k in 1u64..20) {
            let m = ExtendedAnswerMatrix::from_counts(counts);
            let mut scaled = counts;
            for row in scaled.iter_mut() {
                for c in row.iter_mut() {
                    *c *= k;
                }
            }
            let s = ExtendedAnswerMatrix::from_counts(scaled);
            prop_assert_eq!(m.extract_policy(&rbp_default()), s.extract_policy(&rbp_default()));
        }

        #[test]
        fn observed_rows_are_distributions(counts in arb_counts()) {
            let m = ExtendedAnswerMatrix::from_counts(counts);
            for i in StateIndex::all() {
                if let RowDistribution::Observed(p) = m.probabilities(i) {
                    prop_assert!(p.iter().all(|&v| v >= 0.0));
                    prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn merge_is_associative(a in arb_counts(), b in arb_counts(), c in arb_counts()) {
            let (a, b, c) = (
                ExtendedAnswerMatrix::from_counts(a),
                ExtendedAnswerMatrix::from_counts(b),
                ExtendedAnswerMatrix::from_counts(c),
            );
            prop_assert_eq!(a.merge(&b).merge(&c), a.merge(&b.merge(&c)));
        }
    }
}
