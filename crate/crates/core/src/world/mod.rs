//! The game world: terrain, units, fog of war, combat and victory.

mod config;
mod event;
mod map;
mod state;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use config::{CombatStat, ConfigError, ObjectiveSense, WorldConfig};
pub use event::{Event, RejectReason, Replay, ReplayError, TurnReport};
pub use map::{load_map, GameMap, MapError, Terrain, Tile};
pub use state::{
    spawn_game, visual_range, ArmyKnowledge, Controller, EngineError, FnController, GameState,
    Geometry, Order, SpawnError, Unit, UnitId,
};

/// VP is the machine-controlled army, HP the human (or human proxy) army.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Army {
    #[serde(rename = "VP")]
    Vp,
    #[serde(rename = "HP")]
    Hp,
}

impl Army {
    pub const BOTH: [Army; 2] = [Army::Vp, Army::Hp];

    pub fn index(self) -> usize {
        match self {
            Army::Vp => 0,
            Army::Hp => 1,
        }
    }

    pub fn rival(self) -> Army {
        match self {
            Army::Vp => Army::Hp,
            Army::Hp => Army::Vp,
        }
    }
}

impl fmt::Display for Army {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Army::Vp => "VP",
            Army::Hp => "HP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Winner {
    #[serde(rename = "VP")]
    Vp,
    #[serde(rename = "HP")]
    Hp,
    Draw,
}

impl From<Army> for Winner {
    fn from(a: Army) -> Winner {
        match a {
            Army::Vp => Winner::Vp,
            Army::Hp => Winner::Hp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeReason {
    FlagCaptured,
    DamageTiebreak,
    Draw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub winner: Winner,
    pub reason: OutcomeReason,
    pub deaths_hp: u32,
    pub deaths_vp: u32,
    /// Executed unit moves, both armies.
    pub movements: u64,
    pub turns: u32,
}
