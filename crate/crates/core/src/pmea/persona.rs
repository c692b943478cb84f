//! Scripted stand-ins for the human player.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::strategy::{rbp_default, Action, AnswerMatrix, HealthLevel, Perception, NUM_STATES};
use crate::world::{Army, GameState, Order};

#[derive(Debug, Clone, PartialEq)]
pub enum Persona {
    RbpMirror,
    Aggressor,
    Turtle,
    /// Rule-based play with probability `1 − ρ`, a uniform action otherwise.
    Random(f64),
    /// Aggressor for games 1..=g, turtle for the next g, and so on.
    Drifter(u32),
    /// A fixed matrix, for model-recovery experiments.
    Fixed(AnswerMatrix),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown persona {0:?} (expected rbp-mirror, aggressor, turtle, random(p), drifter(g))")]
pub struct UnknownPersona(pub String);

impl FromStr for Persona {
    type Err = UnknownPersona;

    fn from_str(s: &str) -> Result<Persona, UnknownPersona> {
        let bad = || UnknownPersona(s.to_string());
        let s = s.trim();
        let arg = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(str::trim)
        };
        match s {
            "rbp-mirror" => return Ok(Persona::RbpMirror),
            "aggressor" => return Ok(Persona::Aggressor),
            "turtle" => return Ok(Persona::Turtle),
            _ => {}
        }
        if let Some(a) = arg("random") {
            let rho: f64 = a.parse().map_err(|_| bad())?;
            if !(0.0..=1.0).contains(&rho) {
                return Err(bad());
            }
            return Ok(Persona::Random(rho));
        }
        if let Some(a) = arg("drifter") {
            let g: u32 = a.parse().map_err(|_| bad())?;
            if g == 0 {
                return Err(bad());
            }
            return Ok(Persona::Drifter(g));
        }
        if let Some(a) = arg("matrix") {
            let raw: Vec<i64> = a
                .split(',')
                .map(|v| v.trim().parse())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            return crate::strategy::validate_matrix(&raw)
                .map(Persona::Fixed)
                .map_err(|_| bad());
        }
        Err(bad())
    }
}

impl fmt::Display for Persona {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Persona::RbpMirror => f.write_str("rbp-mirror"),
            Persona::Aggressor => f.write_str("aggressor"),
            Persona::Turtle => f.write_str("turtle"),
            Persona::Random(rho) => write!(f, "random({rho})"),
            Persona::Drifter(g) => write!(f, "drifter({g})"),
            Persona::Fixed(m) => {
                let nums: Vec<String> = m.to_numbers().iter().map(u8::to_string).collect();
                write!(f, "matrix({})", nums.join(","))
            }
        }
    }
}

pub fn aggressor_matrix() -> AnswerMatrix {
    AnswerMatrix::from_fn(|p| {
        if p.health == HealthLevel::Low {
            Action::GroupRunAway
        } else {
            Action::MoveForwardEnemy
        }
    })
}

pub fn turtle_matrix() -> AnswerMatrix {
    AnswerMatrix::from_fn(|p| {
        if p.objective_visible {
            Action::MoveForwardObjective
        } else {
            Action::ProtectFlag
        }
    })
}

/// The decision function a persona uses in one particular game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersonaPolicy {
    pub matrix: AnswerMatrix,
    pub noise: f64,
}

impl PersonaPolicy {
    pub fn decide<R: Rng + ?Sized>(&self, p: &Perception, rng: &mut R) -> Action {
        if self.noise > 0.0 && rng.gen::<f64>() < self.noise {
            Action::ALL[rng.gen_range(0..Action::ALL.len())]
        } else {
            self.matrix.action(p)
        }
    }
}

impl Persona {
    /// Policy in force for game number `game` (1-based).
    pub fn policy_for_game(&self, game: u32) -> PersonaPolicy {
        let (matrix, noise) = match self {
            Persona::RbpMirror => (rbp_default(), 0.0),
            Persona::Aggressor => (aggressor_matrix(), 0.0),
            Persona::Turtle => (turtle_matrix(), 0.0),
            Persona::Random(rho) => (rbp_default(), *rho),
            Persona::Drifter(g) => {
                let phase = (game.max(1) - 1) / g;
                if phase % 2 == 0 {
                    (aggressor_matrix(), 0.0)
                } else {
                    (turtle_matrix(), 0.0)
                }
            }
            Persona::Fixed(m) => (*m, 0.0),
        };
        PersonaPolicy { matrix, noise }
    }
}

/// Drives the human army during a game. A unit is (re)ordered whenever its
/// perceived state differs from the state it was last ordered in, which is
/// how a player reacts to a changing situation.
pub struct PersonaPlayer {
    policy: PersonaPolicy,
    rng: ChaCha8Rng,
    last_state: Vec<Option<usize>>,
}

impl PersonaPlayer {
    pub fn new(policy: PersonaPolicy, seed: u64) -> PersonaPlayer {
        PersonaPlayer {
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last_state: Vec::new(),
        }
    }

    /// Orders for the coming turn, grouped by action.
    pub fn orders(&mut self, state: &GameState) -> Vec<Order> {
        if self.last_state.len() < state.units().len() {
            self.last_state.resize(state.units().len(), None);
        }
        let mut groups: [Vec<u32>; 6] = Default::default();
        for u in state.living(Army::Hp) {
            let p = state.perceive(u.id);
            let idx = p.index().value();
            debug_assert!(idx < NUM_STATES);
            if self.last_state[u.id as usize] == Some(idx) {
                continue;
            }
            self.last_state[u.id as usize] = Some(idx);
            let a = self.policy.decide(&p, &mut self.rng);
            groups[a.slot()].push(u.id);
        }
        groups
            .into_iter()
            .enumerate()
            .filter(|(_, g)| !g.is_empty())
            .map(|(i, g)| Order::new(g, Action::ALL[i]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::decode_state;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["rbp-mirror", "aggressor", "turtle", "random(0.25)", "drifter(5)"] {
            let p: Persona = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("drifter(0)".parse::<Persona>().is_err());
        assert!("random(2)".parse::<Persona>().is_err());
        assert!("bogus".parse::<Persona>().is_err());
        let m: Persona = format!("matrix({})", vec!["4"; 24].join(",")).parse().unwrap();
        assert_eq!(m, Persona::Fixed(AnswerMatrix::constant(Action::NoOperation)));
    }

    #[test]
    fn persona_examples() {
        let agg = Persona::Aggressor.policy_for_game(1).matrix;
        for i in 0..8 {
            assert_eq!(agg.cells()[i], Action::GroupRunAway);
        }
        let zero = Persona::Random(0.0).policy_for_game(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..24 {
            let p = decode_state(i).unwrap();
            assert_eq!(zero.decide(&p, &mut rng), rbp_default().cells()[i]);
        }
        let d = Persona::Drifter(5);
        assert_eq!(d.policy_for_game(5).matrix, aggressor_matrix());
        assert_eq!(d.policy_for_game(6).matrix, turtle_matrix());
        assert_eq!(d.policy_for_game(11).matrix, aggressor_matrix());
    }

    #[test]
    fn noisy_persona_frequency() {
        let pol = Persona::Random(0.5).policy_for_game(1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = decode_state(0).unwrap(); // rbp: Explore
        let n = 20_000;
        let other = (0..n)
            .filter(|_| pol.decide(&p, &mut rng) != Action::Explore)
            .count() as f64
            / n as f64;
        // 0.5 noise, 5/6 of noisy draws differ
        assert!((other - 0.5 * 5.0 / 6.0).abs() < 0.02, "{other}");
    }
}
