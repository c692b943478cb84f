//! Deterministic war-RTS simulation engine together with the tooling that
//! models a player during a game and evolves an adaptive virtual player
//! between games.

pub mod evolution;
pub mod fixtures;
pub mod geometry;
pub mod kv;
pub mod modeling;
pub mod navigation;
pub mod pmea;
pub mod session;
pub mod strategy;
pub mod world;

pub use evolution::{EaConfig, EvaluatedIndividual, SimStats};
pub use geometry::Pos;
pub use modeling::ExtendedAnswerMatrix;
pub use navigation::NavConfig;
pub use strategy::{Action, AnswerMatrix, HealthLevel, Perception, StateIndex};
pub use world::{
    Army, GameMap, GameState, Outcome, Terrain, Tile, TurnReport, Unit, UnitId, WorldConfig,
};
