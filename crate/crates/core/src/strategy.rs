//! Answer-matrix controllers: the 24-state perception encoding, the six
//! unit actions and the default rule-based expert policy.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of distinct unit states (3 health levels × 2 × 2 × 2).
pub const NUM_STATES: usize = 24;
/// Number of unit actions.
pub const NUM_ACTIONS: usize = 6;

pub const ANSWER_MATRIX_FORMAT: &str = "answer-matrix-v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("state index {0} out of range 0..24")]
    OutOfRange(usize),
    #[error("answer matrix must have 24 entries, got {0}")]
    BadLength(usize),
    #[error("invalid action {value} at position {position}")]
    BadAction { position: usize, value: i64 },
    #[error("invalid action value {0}")]
    InvalidAction(i64),
    #[error("unexpected format {found:?}, expected {expected:?}")]
    FormatMismatch { expected: String, found: String },
    #[error("malformed answer matrix: {0}")]
    Malformed(String),
}

/// One of the six orders a unit can carry. Serialized as the integers 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub enum Action {
    MoveForwardEnemy = 1,
    GroupRunAway = 2,
    MoveForwardObjective = 3,
    NoOperation = 4,
    Explore = 5,
    ProtectFlag = 6,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::MoveForwardEnemy,
        Action::GroupRunAway,
        Action::MoveForwardObjective,
        Action::NoOperation,
        Action::Explore,
        Action::ProtectFlag,
    ];

    /// The 1-based action number.
    pub fn number(self) -> u8 {
        self as u8
    }

    /// Zero-based position, handy for indexing count rows.
    pub fn slot(self) -> usize {
        self as usize - 1
    }

    pub fn from_number(n: i64) -> Result<Action, StrategyError> {
        match n {
            1..=6 => Ok(Action::ALL[(n - 1) as usize]),
            _ => Err(StrategyError::InvalidAction(n)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::MoveForwardEnemy => "MoveForwardEnemy",
            Action::GroupRunAway => "GroupRunAway",
            Action::MoveForwardObjective => "MoveForwardObjective",
            Action::NoOperation => "NoOperation",
            Action::Explore => "Explore",
            Action::ProtectFlag => "ProtectFlag",
        }
    }
}

impl TryFrom<i64> for Action {
    type Error = StrategyError;
    fn try_from(n: i64) -> Result<Self, Self::Error> {
        Action::from_number(n)
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a.number()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HealthLevel {
    Low = 0,
    Medium = 1,
    High = 2,
}

impl HealthLevel {
    pub const ALL: [HealthLevel; 3] = [HealthLevel::Low, HealthLevel::Medium, HealthLevel::High];

    /// Low = [0, ⌈max/3⌉), Medium = [⌈max/3⌉, ⌈2·max/3⌉), High = the rest.
    pub fn classify(health: i32, max_health: i32) -> HealthLevel {
        let max = max_health.max(1);
        let low_cut = (max + 2) / 3;
        let high_cut = (2 * max + 2) / 3;
        if health < low_cut {
            HealthLevel::Low
        } else if health < high_cut {
            HealthLevel::Medium
        } else {
            HealthLevel::High
        }
    }
}

/// What a unit senses about its own situation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Perception {
    pub health: HealthLevel,
    /// More living mates than rivals inside the visual range.
    pub advantage: bool,
    /// A living rival stands on one of the 8 neighbor cells.
    pub under_attack: bool,
    /// The rival flag position is known.
    pub objective_visible: bool,
}

impl Perception {
    pub fn new(
        health: HealthLevel,
        advantage: bool,
        under_attack: bool,
        objective_visible: bool,
    ) -> Self {
        Perception {
            health,
            advantage,
            under_attack,
            objective_visible,
        }
    }

    pub fn index(&self) -> StateIndex {
        state_index(self)
    }
}

/// Position of a perception inside an answer matrix, in `0..24`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct StateIndex(u8);

impl StateIndex {
    pub fn new(value: usize) -> Result<StateIndex, StrategyError> {
        if value < NUM_STATES {
            Ok(StateIndex(value as u8))
        } else {
            Err(StrategyError::OutOfRange(value))
        }
    }

    pub fn value(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = StateIndex> {
        (0..NUM_STATES as u8).map(StateIndex)
    }
}

impl TryFrom<usize> for StateIndex {
    type Error = StrategyError;
    fn try_from(v: usize) -> Result<Self, Self::Error> {
        StateIndex::new(v)
    }
}

impl From<StateIndex> for usize {
    fn from(s: StateIndex) -> usize {
        s.value()
    }
}

/// Mixed-radix encoding with digit order (health, advantage, under attack,
/// objective visible); the last digit varies fastest. This ordering is part of
/// the on-disk genome format.
pub fn state_index(p: &Perception) -> StateIndex {
    let v = 8 * p.health as usize
        + 4 * p.advantage as usize
        + 2 * p.under_attack as usize
        + p.objective_visible as usize;
    StateIndex(v as u8)
}

pub fn decode_state(index: usize) -> Result<Perception, StrategyError> {
    let i = StateIndex::new(index)?.value();
    Ok(Perception {
        health: HealthLevel::ALL[i / 8],
        advantage: (i / 4) % 2 == 1,
        under_attack: (i / 2) % 2 == 1,
        objective_visible: i % 2 == 1,
    })
}

/// A complete team controller: one action per unit state. Serialized as a
/// bare array of 24 action numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<u8>")]
pub struct AnswerMatrix {
    cells: [Action; NUM_STATES],
}

#[derive(Serialize, Deserialize)]
struct AnswerMatrixFile {
    format: String,
    actions: Vec<i64>,
}

impl AnswerMatrix {
    pub fn new(cells: [Action; NUM_STATES]) -> Self {
        AnswerMatrix { cells }
    }

    pub fn constant(action: Action) -> Self {
        AnswerMatrix {
            cells: [action; NUM_STATES],
        }
    }

    pub fn from_fn(mut f: impl FnMut(&Perception) -> Action) -> Self {
        let mut cells = [Action::NoOperation; NUM_STATES];
        for (i, cell) in cells.iter_mut().enumerate() {
            *cell = f(&decode_state(i).expect("index in range"));
        }
        AnswerMatrix { cells }
    }

    pub fn cells(&self) -> &[Action; NUM_STATES] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [Action; NUM_STATES] {
        &mut self.cells
    }

    pub fn get(&self, index: StateIndex) -> Action {
        self.cells[index.value()]
    }

    pub fn set(&mut self, index: StateIndex, action: Action) {
        self.cells[index.value()] = action;
    }

    pub fn action(&self, perception: &Perception) -> Action {
        matrix_action(self, perception)
    }

    pub fn to_numbers(&self) -> Vec<u8> {
        self.cells.iter().map(|a| a.number()).collect()
    }

    pub fn to_json(&self) -> String {
        let file = AnswerMatrixFile {
            format: ANSWER_MATRIX_FORMAT.to_string(),
            actions: self.cells.iter().map(|a| a.number() as i64).collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<AnswerMatrix, StrategyError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| StrategyError::Malformed(e.to_string()))?;
        let found = value.get("format").and_then(|f| f.as_str()).unwrap_or_default();
        if found != ANSWER_MATRIX_FORMAT {
            return Err(StrategyError::FormatMismatch {
                expected: ANSWER_MATRIX_FORMAT.to_string(),
                found: found.to_string(),
            });
        }
        let file: AnswerMatrixFile =
            serde_json::from_value(value).map_err(|e| StrategyError::Malformed(e.to_string()))?;
        validate_matrix(&file.actions)
    }
}

impl TryFrom<Vec<i64>> for AnswerMatrix {
    type Error = StrategyError;
    fn try_from(raw: Vec<i64>) -> Result<Self, StrategyError> {
        validate_matrix(&raw)
    }
}

impl From<AnswerMatrix> for Vec<u8> {
    fn from(m: AnswerMatrix) -> Vec<u8> {
        m.to_numbers()
    }
}

impl fmt::Display for AnswerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.cells.iter().map(|a| a.number().to_string()).collect();
        write!(f, "[{}]", s.join(","))
    }
}

pub fn matrix_action(matrix: &AnswerMatrix, perception: &Perception) -> Action {
    matrix.cells[state_index(perception).value()]
}

pub fn validate_matrix(raw: &[i64]) -> Result<AnswerMatrix, StrategyError> {
    if raw.len() != NUM_STATES {
        return Err(StrategyError::BadLength(raw.len()));
    }
    let mut cells = [Action::NoOperation; NUM_STATES];
    for (position, (&value, cell)) in raw.iter().zip(cells.iter_mut()).enumerate() {
        *cell =
            Action::from_number(value).map_err(|_| StrategyError::BadAction { position, value })?;
    }
    Ok(AnswerMatrix { cells })
}

/// The rule-based expert policy used as the first virtual player. Rules are
/// applied top-down, first match wins:
///
/// 1. objective known and not under attack → `MoveForwardObjective`
/// 2. under attack with low health → `GroupRunAway`
/// 3. under attack with advantage → `MoveForwardEnemy`
/// 4. under attack without advantage → `GroupRunAway`
/// 5. not under attack with advantage → `MoveForwardEnemy`
/// 6. otherwise → `Explore`
pub fn rbp_rule(p: &Perception) -> Action {
    if p.objective_visible && !p.under_attack {
        Action::MoveForwardObjective
    } else if p.under_attack && p.health == HealthLevel::Low {
        Action::GroupRunAway
    } else if p.under_attack && p.advantage {
        Action::MoveForwardEnemy
    } else if p.under_attack {
        Action::GroupRunAway
    } else if p.advantage {
        Action::MoveForwardEnemy
    } else {
        Action::Explore
    }
}

pub fn rbp_default() -> AnswerMatrix {
    AnswerMatrix::from_fn(rbp_rule)
}

/// Render a matrix as the markdown table used in the docs, one row per state
/// keyed by (health, S_a, U_a, O_v).
pub fn markdown_table(matrix: &AnswerMatrix) -> String {
    let mut out = String::from(
        "| index | health | S_a | U_a | O_v | action |\n|---|---|---|---|---|---|\n",
    );
    for i in 0..NUM_STATES {
        let p = decode_state(i).expect("in range");
        let b = |v: bool| if v { "yes" } else { "no" };
        let a = matrix.cells[i];
        out.push_str(&format!(
            "| {} | {:?} | {} | {} | {} | {} ({}) |\n",
            i,
            p.health,
            b(p.advantage),
            b(p.under_attack),
            b(p.objective_visible),
            a.number(),
            a.name()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digits() -> impl Iterator<Item = (usize, usize, usize, usize)> {
        (0..3).flat_map(|h| {
            (0..2).flat_map(move |s| (0..2).flat_map(move |u| (0..2).map(move |o| (h, s, u, o))))
        })
    }

    #[test]
    fn encoding_matches_mixed_radix_formula() {
        // v[e3 + e2*k3 + e1*(k3*k2) + e0*(k3*k2*k1)] with k = (3, 2, 2, 2)
        let k = [3usize, 2, 2, 2];
        for (h, s, u, o) in digits() {
            let e = [h, s, u, o];
            let expected = e[3] + e[2] * k[3] + e[1] * k[3] * k[2] + e[0] * k[3] * k[2] * k[1];
            let p = Perception::new(HealthLevel::ALL[h], s == 1, u == 1, o == 1);
            assert_eq!(state_index(&p).value(), expected);
        }
    }

    #[test]
    fn encode_decode_bijection() {
        let mut seen = [false; NUM_STATES];
        for i in 0..NUM_STATES {
            let p = decode_state(i).unwrap();
            assert_eq!(state_index(&p).value(), i);
            seen[i] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn index_examples() {
        let low = Perception::new(HealthLevel::Low, false, false, false);
        assert_eq!(state_index(&low).value(), 0);
        let top = Perception::new(HealthLevel::High, true, true, true);
        assert_eq!(state_index(&top).value(), 23);
        let mid = Perception::new(HealthLevel::Medium, true, false, true);
        assert_eq!(state_index(&mid).value(), 13);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(
            decode_state(0).unwrap(),
            Perception::new(HealthLevel::Low, false, false, false)
        );
        // brute-force search over every perception for the one encoding to 10
        let found: Vec<Perception> = digits()
            .map(|(h, s, u, o)| Perception::new(HealthLevel::ALL[h], s == 1, u == 1, o == 1))
            .filter(|p| state_index(p).value() == 10)
            .collect();
        assert_eq!(found.len(), 1);
        assert_eq!(decode_state(10).unwrap(), found[0]);
        assert_eq!(found[0], Perception::new(HealthLevel::Medium, false, true, false));
        assert_eq!(decode_state(24), Err(StrategyError::OutOfRange(24)));
    }

    #[test]
    fn health_thresholds() {
        assert_eq!(HealthLevel::classify(100, 100), HealthLevel::High);
        assert_eq!(HealthLevel::classify(67, 100), HealthLevel::High);
        assert_eq!(HealthLevel::classify(66, 100), HealthLevel::Medium);
        assert_eq!(HealthLevel::classify(50, 100), HealthLevel::Medium);
        assert_eq!(HealthLevel::classify(34, 100), HealthLevel::Medium);
        assert_eq!(HealthLevel::classify(33, 100), HealthLevel::Low);
        assert_eq!(HealthLevel::classify(0, 100), HealthLevel::Low);
    }

    #[test]
    fn lookup_is_a_function_of_the_index() {
        let mut m = AnswerMatrix::constant(Action::Explore);
        m.set(StateIndex::new(13).unwrap(), Action::MoveForwardObjective);
        let p = decode_state(13).unwrap();
        assert_eq!(matrix_action(&m, &p), Action::MoveForwardObjective);
        assert_eq!(matrix_action(&m, &p.clone()), matrix_action(&m, &p));

        let noop = AnswerMatrix::constant(Action::NoOperation);
        for i in 0..NUM_STATES {
            assert_eq!(noop.action(&decode_state(i).unwrap()), Action::NoOperation);
        }
    }

    #[test]
    fn rbp_examples() {
        let rbp = rbp_default();
        // state 23 = (High, advantage, under attack, objective known): the
        // first rule needs "not under attack", so rule 3 fires.
        assert_eq!(rbp.cells()[23], Action::MoveForwardEnemy);
        assert_eq!(rbp.cells()[0], Action::Explore);
        assert_eq!(rbp.cells()[13], Action::MoveForwardObjective);
        assert_eq!(rbp_default(), rbp);
    }

    #[test]
    fn rbp_matches_committed_table() {
        let doc = include_str!("../../../docs/rbp-policy.md");
        assert!(
            doc.contains(&markdown_table(&rbp_default())),
            "docs/rbp-policy.md is out of date"
        );
    }

    #[test]
    fn validate_examples() {
        let ok: Vec<i64> = (0..24).map(|i| (i % 6) as i64 + 1).collect();
        assert!(validate_matrix(&ok).is_ok());
        assert_eq!(validate_matrix(&ok[..23]), Err(StrategyError::BadLength(23)));
        let mut bad = ok.clone();
        bad[5] = 7;
        assert_eq!(
            validate_matrix(&bad),
            Err(StrategyError::BadAction {
                position: 5,
                value: 7
            })
        );
    }

    #[test]
    fn json_round_trip_and_format_check() {
        let m = rbp_default();
        let text = m.to_json();
        assert!(text.starts_with("{\"format\":\"answer-matrix-v1\""));
        assert_eq!(AnswerMatrix::from_json(&text).unwrap(), m);
        let wrong = text.replace("answer-matrix-v1", "answer-matrix-v0");
        assert!(matches!(
            AnswerMatrix::from_json(&wrong),
            Err(StrategyError::FormatMismatch { .. })
        ));
    }

    #[test]
    fn action_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&Action::ProtectFlag).unwrap(), "6");
        assert!(serde_json::from_str::<Action>("7").is_err());
        assert_eq!(
            serde_json::from_str::<Action>("2").unwrap(),
            Action::GroupRunAway
        );
    }
}
