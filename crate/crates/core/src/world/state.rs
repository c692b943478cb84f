use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::event::{Event, RejectReason, TurnReport};
use super::{Army, CombatStat, GameMap, ObjectiveSense, Outcome, OutcomeReason, Terrain, Tile};
use super::{Winner, WorldConfig};
use crate::geometry::{Dir, Pos};
use crate::navigation::{self, MoveDecision, NavContext, NavView, Target};
use crate::strategy::{Action, AnswerMatrix, HealthLevel, Perception};

pub type UnitId = u32;

const EMPTY: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpawnError {
    #[error("army {0} has no spawn cells")]
    NoUnits(Army),
    #[error("spawn cell {0:?} used more than once")]
    OverlappingSpawn(Pos),
    #[error("{what} cell {at:?} is out of bounds or not passable")]
    BadCell { what: &'static str, at: Pos },
    #[error("invalid config: {0}")]
    Config(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("the game is already decided")]
    GameOver,
    #[error("unit {0} does not exist")]
    UnknownUnit(UnitId),
    #[error("unit {0} is dead")]
    DeadUnit(UnitId),
    #[error("cell {0:?} is not free")]
    CellNotFree(Pos),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unit {
    pub id: UnitId,
    pub army: Army,
    pub pos: Pos,
    pub health: i32,
    pub energy: i32,
    pub current_order: Action,
    pub alive: bool,
}

/// What one army has learnt about the world so far.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmyKnowledge {
    explored: Vec<bool>,
    explored_count: usize,
    enemy_flag_known: Option<Pos>,
    sightings: VecDeque<(Pos, u32)>,
    hotspot: Option<Pos>,
}

impl ArmyKnowledge {
    fn new(cells: usize) -> Self {
        ArmyKnowledge {
            explored: vec![false; cells],
            explored_count: 0,
            enemy_flag_known: None,
            sightings: VecDeque::new(),
            hotspot: None,
        }
    }

    pub fn explored(&self) -> &[bool] {
        &self.explored
    }

    pub fn is_explored(&self, index: usize) -> bool {
        self.explored[index]
    }

    pub fn explored_count(&self) -> usize {
        self.explored_count
    }

    pub fn enemy_flag_known(&self) -> Option<Pos> {
        self.enemy_flag_known
    }

    /// Rival sightings `(cell, turn)` still inside the sighting window.
    pub fn sightings(&self) -> impl Iterator<Item = &(Pos, u32)> {
        self.sightings.iter()
    }

    /// The explored cell with the most recent rival sightings.
    pub fn hotspot(&self) -> Option<Pos> {
        self.hotspot
    }

    fn mark(&mut self, index: usize) {
        if !self.explored[index] {
            self.explored[index] = true;
            self.explored_count += 1;
        }
    }
}

/// Offsets shared by every game on the same grid size.
#[derive(Debug, Clone)]
pub struct Geometry {
    /// Offsets inside the visual range, including (0, 0).
    pub vr: Vec<(i32, i32)>,
    /// Every offset that can connect two cells of the grid, ordered by
    /// Euclidean distance, ties in row-major order.
    pub near: Vec<(i32, i32)>,
    pub phi2: f64,
}

impl Geometry {
    pub fn new(width: i32, height: i32, phi: f64) -> Geometry {
        let phi2 = phi * phi;
        let mut near = Vec::with_capacity(((2 * width - 1) * (2 * height - 1)) as usize);
        for dy in -(height - 1)..height {
            for dx in -(width - 1)..width {
                near.push((dx, dy));
            }
        }
        near.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
        let vr = near
            .iter()
            .copied()
            .take_while(|&(dx, dy)| within(dx * dx + dy * dy, phi2))
            .collect();
        Geometry { vr, near, phi2 }
    }

    pub fn in_range(&self, a: Pos, b: Pos) -> bool {
        within_i64(a.dist2(b), self.phi2)
    }
}

fn within(d2: i32, phi2: f64) -> bool {
    (d2 as f64) <= phi2 + 1e-9
}

fn within_i64(d2: i64, phi2: f64) -> bool {
    (d2 as f64) <= phi2 + 1e-9
}

/// All in-bounds cells at Euclidean distance ≤ `phi` from `pos`. Obstacles
/// do not block sight.
pub fn visual_range(pos: Pos, phi: f64, terrain: &Terrain) -> Vec<Pos> {
    let r = phi.floor() as i32;
    let phi2 = phi * phi;
    let mut out = Vec::new();
    for y in (pos.y - r)..=(pos.y + r) {
        for x in (pos.x - r)..=(pos.x + r) {
            let p = Pos::new(x, y);
            if terrain.in_bounds(p) && within_i64(p.dist2(pos), phi2) {
                out.push(p);
            }
        }
    }
    out
}

/// Source of actions for the machine-controlled army.
pub trait Controller {
    fn decide(&mut self, unit: &Unit, perception: &Perception) -> Action;
}

impl Controller for AnswerMatrix {
    fn decide(&mut self, _unit: &Unit, perception: &Perception) -> Action {
        self.action(perception)
    }
}

/// Adapts a closure into a [`Controller`].
pub struct FnController<F>(pub F);

impl<F: FnMut(&Unit, &Perception) -> Action> Controller for FnController<F> {
    fn decide(&mut self, unit: &Unit, perception: &Perception) -> Action {
        (self.0)(unit, perception)
    }
}

/// A group order: every listed unit takes `action`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Order {
    pub units: Vec<UnitId>,
    pub action: Action,
}

impl Order {
    pub fn new(units: Vec<UnitId>, action: Action) -> Order {
        Order { units, action }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GameState {
    map: Arc<GameMap>,
    units: Vec<Unit>,
    #[serde(skip)]
    occupancy: Vec<u32>,
    knowledge: [ArmyKnowledge; 2],
    pheromone: [Vec<f64>; 2],
    nav: Vec<NavContext>,
    turn: u32,
    rng: ChaCha8Rng,
    config: WorldConfig,
    initial_units: [u32; 2],
    deaths: [u32; 2],
    movements: [u64; 2],
    outcome: Option<Outcome>,
    #[serde(skip)]
    geometry: Arc<Geometry>,
    #[serde(skip)]
    record_events: bool,
}

/// Build the initial state. Unit ids alternate between the armies (VP spawn
/// 0, HP spawn 0, VP spawn 1, ...), each army taking its spawns in row-major
/// order, so neither army systematically acts first within a turn.
pub fn spawn_game(
    map: Arc<GameMap>,
    config: WorldConfig,
    seed: u64,
) -> Result<GameState, SpawnError> {
    config
        .validate()
        .map_err(|e| SpawnError::Config(e.to_string()))?;
    let terrain = &map.terrain;
    for army in Army::BOTH {
        if map.spawns(army).is_empty() {
            return Err(SpawnError::NoUnits(army));
        }
        let f = map.flag(army);
        if !terrain.in_bounds(f) || terrain.tile(f) != Tile::Passable {
            return Err(SpawnError::BadCell { what: "flag", at: f });
        }
    }
    let mut occupancy = vec![EMPTY; terrain.len()];
    let mut units = Vec::new();
    let longest = map.spawns(Army::Vp).len().max(map.spawns(Army::Hp).len());
    for k in 0..longest {
        for army in Army::BOTH {
            if let Some(&p) = map.spawns(army).get(k) {
                if !terrain.in_bounds(p) || terrain.tile(p) != Tile::Passable {
                    return Err(SpawnError::BadCell {
                        what: "spawn",
                        at: p,
                    });
                }
                let idx = terrain.index(p);
                if occupancy[idx] != EMPTY {
                    return Err(SpawnError::OverlappingSpawn(p));
                }
                let id = units.len() as UnitId;
                occupancy[idx] = id;
                units.push(Unit {
                    id,
                    army,
                    pos: p,
                    health: config.max_health,
                    energy: config.max_energy,
                    current_order: Action::Explore,
                    alive: true,
                });
            }
        }
    }
    let geometry = Arc::new(Geometry::new(
        terrain.width(),
        terrain.height(),
        config.visual_range_phi,
    ));
    let cells = terrain.len();
    let initial_units = [
        map.spawns(Army::Vp).len() as u32,
        map.spawns(Army::Hp).len() as u32,
    ];
    let mut state = GameState {
        nav: vec![NavContext::default(); units.len()],
        units,
        occupancy,
        knowledge: [ArmyKnowledge::new(cells), ArmyKnowledge::new(cells)],
        pheromone: [vec![0.0; cells], vec![0.0; cells]],
        turn: 0,
        rng: ChaCha8Rng::seed_from_u64(seed),
        config,
        initial_units,
        deaths: [0, 0],
        movements: [0, 0],
        outcome: None,
        geometry,
        record_events: true,
        map,
    };
    let all: Vec<UnitId> = state.units.iter().map(|u| u.id).collect();
    let mut scratch = Vec::new();
    state.update_fog(&all, &mut scratch);
    Ok(state)
}

impl GameState {
    pub fn map(&self) -> &Arc<GameMap> {
        &self.map
    }

    pub fn terrain(&self) -> &Terrain {
        &self.map.terrain
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, id: UnitId) -> Option<&Unit> {
        self.units.get(id as usize)
    }

    pub fn living(&self, army: Army) -> impl Iterator<Item = &Unit> {
        self.units.iter().filter(move |u| u.alive && u.army == army)
    }

    pub fn living_count(&self, army: Army) -> usize {
        self.living(army).count()
    }

    pub fn initial_units(&self, army: Army) -> u32 {
        self.initial_units[army.index()]
    }

    pub fn deaths(&self, army: Army) -> u32 {
        self.deaths[army.index()]
    }

    pub fn movements(&self, army: Army) -> u64 {
        self.movements[army.index()]
    }

    pub fn knowledge(&self, army: Army) -> &ArmyKnowledge {
        &self.knowledge[army.index()]
    }

    pub fn pheromone(&self, army: Army) -> &[f64] {
        &self.pheromone[army.index()]
    }

    pub fn nav_context(&self, id: UnitId) -> &NavContext {
        &self.nav[id as usize]
    }

    pub fn turn(&self) -> u32 {
        self.turn
    }

    pub fn flag(&self, army: Army) -> Pos {
        self.map.flag(army)
    }

    /// Id of the living unit standing on `p`, if any.
    pub fn occupant(&self, p: Pos) -> Option<UnitId> {
        if !self.terrain().in_bounds(p) {
            return None;
        }
        match self.occupancy[self.terrain().index(p)] {
            EMPTY => None,
            id => Some(id),
        }
    }

    pub fn is_finished(&self) -> bool {
        self.outcome.is_some()
    }

    /// Turn off event collection; `step_turn` then returns empty reports.
    /// Used by headless fitness evaluations.
    pub fn set_event_recording(&mut self, on: bool) {
        self.record_events = on;
    }

    pub fn nav_view(&self) -> NavView<'_> {
        NavView {
            terrain: &self.map.terrain,
            flags: self.map.flags,
            units: &self.units,
            occupancy: &self.occupancy,
            knowledge: &self.knowledge,
            pheromone: &self.pheromone,
            config: &self.config,
            geometry: &self.geometry,
        }
    }

    /// Serialized snapshot, used to compare states for equality.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state is serializable")
    }

    pub fn perceive(&self, id: UnitId) -> Perception {
        let unit = &self.units[id as usize];
        assert!(unit.alive, "perceive called on dead unit {id}");
        perceive_unit(
            unit,
            &self.map.terrain,
            &self.units,
            &self.occupancy,
            &self.geometry,
            &self.config,
            &self.knowledge[unit.army.index()],
            self.map.flag(unit.army.rival()),
        )
    }

    /// Advance the game by one turn. Phases, in order: HP orders, VP
    /// decisions, movement (ascending unit id), combat, deaths, fog update,
    /// flag capture check, turn counter.
    pub fn step_turn(
        &mut self,
        hp_orders: &[Order],
        vp_controller: &mut dyn Controller,
    ) -> Result<TurnReport, EngineError> {
        if self.outcome.is_some() {
            return Err(EngineError::GameOver);
        }
        let mut events = Vec::new();
        let rec = self.record_events;

        // 1. human orders overwrite the current order of each listed unit
        for order in hp_orders {
            for &id in &order.units {
                let reject = match self.units.get(id as usize) {
                    None => Some(RejectReason::UnknownUnit),
                    Some(u) if u.army != Army::Hp => Some(RejectReason::Foreign),
                    Some(u) if !u.alive => Some(RejectReason::Dead),
                    Some(_) => None,
                };
                match reject {
                    Some(reason) => {
                        if rec {
                            events.push(Event::OrderRejected {
                                unit_id: id,
                                action: order.action,
                                reason,
                            })
                        }
                    }
                    None => {
                        if rec {
                            let state = self.perceive(id).index().value();
                            events.push(Event::Order {
                                unit_id: id,
                                army: Army::Hp,
                                action: order.action,
                                state,
                            });
                        }
                        self.units[id as usize].current_order = order.action;
                    }
                }
            }
        }

        // 2. virtual player decisions from fresh perceptions
        for i in 0..self.units.len() {
            if !(self.units[i].alive && self.units[i].army == Army::Vp) {
                continue;
            }
            let p = self.perceive(i as UnitId);
            let action = vp_controller.decide(&self.units[i], &p);
            if action != self.units[i].current_order {
                if rec {
                    events.push(Event::Order {
                        unit_id: i as UnitId,
                        army: Army::Vp,
                        action,
                        state: p.index().value(),
                    });
                }
                self.units[i].current_order = action;
            }
        }

        // 3. movement
        let mut moved = Vec::new();
        let mut deposits: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for i in 0..self.units.len() {
            let unit = &self.units[i];
            if !unit.alive || unit.current_order == Action::NoOperation {
                continue;
            }
            let id = i as UnitId;
            let from = unit.pos;
            let army = unit.army;
            let (decision, target) = self.decide_move(id);
            if let Some(dir) = decision.step {
                let to = from.step(dir);
                let cost = self.apply_move(id, to);
                moved.push(id);
                if rec {
                    events.push(Event::Move {
                        unit_id: id,
                        from,
                        to,
                        damage: cost,
                    });
                }
                if let Target::Cell(t) = target {
                    if to.dist2(t) < from.dist2(t) {
                        deposits[army.index()].push(self.map.terrain.index(from));
                    }
                }
            }
        }
        for army in Army::BOTH {
            navigation::pheromone_update(
                &mut self.pheromone[army.index()],
                &deposits[army.index()],
                &self.config.nav,
            );
        }

        // 4. combat: one round per adjacent enemy pair, ascending (min, max) id
        let mut pairs = Vec::new();
        for a in &self.units {
            if !a.alive {
                continue;
            }
            for dir in Dir::ALL {
                if let Some(b) = self.occupant(a.pos.step(dir)) {
                    let b = &self.units[b as usize];
                    if b.army != a.army && a.id < b.id {
                        pairs.push((a.id, b.id));
                    }
                }
            }
        }
        pairs.sort_unstable();
        for (a, b) in pairs {
            let (ra, rb) = loop {
                let ra: f64 = self.rng.gen();
                let rb: f64 = self.rng.gen();
                if ra != rb {
                    break (ra, rb);
                }
            };
            let (loser, winner) = if ra < rb { (a, b) } else { (b, a) };
            let damage = self.config.combat_damage;
            let stat = self.config.combat_damage_stat;
            let u = &mut self.units[loser as usize];
            match stat {
                CombatStat::Health => u.health = (u.health - damage).max(0),
                CombatStat::Energy => u.energy = (u.energy - damage).max(0),
            }
            if rec {
                events.push(Event::Combat {
                    unit_id: loser,
                    opponent: winner,
                    damage,
                    stat,
                });
            }
        }

        // 5. deaths
        for i in 0..self.units.len() {
            let u = &self.units[i];
            if u.alive && (u.health <= 0 || u.energy <= 0) {
                let (army, at) = (u.army, u.pos);
                self.units[i].alive = false;
                let idx = self.map.terrain.index(at);
                self.occupancy[idx] = EMPTY;
                self.deaths[army.index()] += 1;
                if rec {
                    events.push(Event::Death {
                        unit_id: i as UnitId,
                        army,
                        at,
                    });
                }
            }
        }

        // 6. fog of war
        let moved_alive: Vec<UnitId> = moved
            .into_iter()
            .filter(|&id| self.units[id as usize].alive)
            .collect();
        self.update_fog(&moved_alive, &mut events);
        if !rec {
            events.clear();
        }

        // 7. capture
        let mut capturers = [None, None];
        for army in Army::BOTH {
            let target = self.map.flag(army.rival());
            if let Some(id) = self.occupant(target) {
                if self.units[id as usize].army == army {
                    capturers[army.index()] = Some(id);
                    if rec {
                        events.push(Event::Capture {
                            unit_id: id,
                            army,
                            at: target,
                        });
                    }
                }
            }
        }

        // 8. clock
        let report = TurnReport {
            turn: self.turn,
            events,
        };
        self.turn += 1;
        let captured = match capturers {
            [Some(_), Some(_)] => Some(Winner::Draw),
            [Some(_), None] => Some(Winner::Vp),
            [None, Some(_)] => Some(Winner::Hp),
            [None, None] => None,
        };
        if let Some(winner) = captured {
            let reason = if winner == Winner::Draw {
                OutcomeReason::Draw
            } else {
                OutcomeReason::FlagCaptured
            };
            self.outcome = Some(self.make_outcome(winner, reason));
        } else if self.turn >= self.config.max_turns {
            let (dead_hp, dead_vp) = (self.deaths(Army::Hp), self.deaths(Army::Vp));
            self.outcome = Some(if dead_hp > dead_vp {
                self.make_outcome(Winner::Vp, OutcomeReason::DamageTiebreak)
            } else if dead_vp > dead_hp {
                self.make_outcome(Winner::Hp, OutcomeReason::DamageTiebreak)
            } else {
                self.make_outcome(Winner::Draw, OutcomeReason::Draw)
            });
        }
        Ok(report)
    }

    pub fn game_outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    fn make_outcome(&self, winner: Winner, reason: OutcomeReason) -> Outcome {
        Outcome {
            winner,
            reason,
            deaths_hp: self.deaths(Army::Hp),
            deaths_vp: self.deaths(Army::Vp),
            movements: self.movements[0] + self.movements[1],
            turns: self.turn,
        }
    }

    fn decide_move(&mut self, id: UnitId) -> (MoveDecision, Target) {
        let view = NavView {
            terrain: &self.map.terrain,
            flags: self.map.flags,
            units: &self.units,
            occupancy: &self.occupancy,
            knowledge: &self.knowledge,
            pheromone: &self.pheromone,
            config: &self.config,
            geometry: &self.geometry,
        };
        let target = navigation::action_target(&view, id);
        let decision = match target {
            Target::Cell(t) => navigation::plan_step(&mut self.nav[id as usize], &view, id, t),
            Target::RandomWalk => navigation::random_step(&view, id, &mut self.rng),
            Target::Stay => MoveDecision::stay(navigation::MoveReason::Greedy),
        };
        (decision, target)
    }

    /// Move a living unit onto a free neighbor cell, charging terrain cost.
    /// Returns the energy paid.
    fn apply_move(&mut self, id: UnitId, to: Pos) -> i32 {
        let terrain = &self.map.terrain;
        let from = self.units[id as usize].pos;
        debug_assert!(terrain.walkable(to) && self.occupancy[terrain.index(to)] == EMPTY);
        let (fi, ti) = (terrain.index(from), terrain.index(to));
        let cost = if terrain.tile(to) == Tile::SemiImpassable {
            self.config.semi_impassable_energy_cost
        } else {
            0
        };
        self.occupancy[fi] = EMPTY;
        self.occupancy[ti] = id;
        let u = &mut self.units[id as usize];
        u.pos = to;
        u.energy = (u.energy - cost).max(0);
        self.movements[u.army.index()] += 1;
        cost
    }

    /// Plan and execute one navigation step of `id` towards `target`, outside
    /// the turn loop (other units stay put). Scenario and testing tool.
    pub fn steer_unit(&mut self, id: UnitId, target: Pos) -> Result<MoveDecision, EngineError> {
        Ok(self.steer_units(&[(id, target)])?[0])
    }

    /// Steer several units one step each, in the given order, then apply a
    /// single pheromone update per army: cells vacated by units that got
    /// closer to their target receive a deposit and every grid decays once.
    pub fn steer_units(
        &mut self,
        moves: &[(UnitId, Pos)],
    ) -> Result<Vec<MoveDecision>, EngineError> {
        for &(id, _) in moves {
            let unit = self.unit(id).ok_or(EngineError::UnknownUnit(id))?;
            if !unit.alive {
                return Err(EngineError::DeadUnit(id));
            }
        }
        let mut deposits: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut out = Vec::with_capacity(moves.len());
        let mut scratch = Vec::new();
        for &(id, target) in moves {
            let (from, army) = {
                let u = &self.units[id as usize];
                (u.pos, u.army)
            };
            let view = self.nav_view();
            let mut ctx = self.nav[id as usize].clone();
            let decision = navigation::plan_step(&mut ctx, &view, id, target);
            self.nav[id as usize] = ctx;
            if let Some(dir) = decision.step {
                let to = from.step(dir);
                self.apply_move(id, to);
                if to.dist2(target) < from.dist2(target) {
                    deposits[army.index()].push(self.map.terrain.index(from));
                }
                self.update_fog(&[id], &mut scratch);
            }
            out.push(decision);
        }
        for army in Army::BOTH {
            navigation::pheromone_update(
                &mut self.pheromone[army.index()],
                &deposits[army.index()],
                &self.config.nav,
            );
        }
        Ok(out)
    }

    /// Put a living unit on an arbitrary free walkable cell. Scenario tool.
    pub fn place_unit(&mut self, id: UnitId, to: Pos) -> Result<(), EngineError> {
        let unit = self.unit(id).ok_or(EngineError::UnknownUnit(id))?;
        if !unit.alive {
            return Err(EngineError::DeadUnit(id));
        }
        if !self.terrain().walkable(to) || self.occupant(to).is_some_and(|o| o != id) {
            return Err(EngineError::CellNotFree(to));
        }
        let from = unit.pos;
        let (fi, ti) = (self.terrain().index(from), self.terrain().index(to));
        self.occupancy[fi] = EMPTY;
        self.occupancy[ti] = id;
        self.units[id as usize].pos = to;
        let mut scratch = Vec::new();
        self.update_fog(&[id], &mut scratch);
        Ok(())
    }

    /// Set a unit's health and energy directly. Scenario tool; a unit brought
    /// to zero is removed at the next death phase.
    pub fn set_vitals(&mut self, id: UnitId, health: i32, energy: i32) -> Result<(), EngineError> {
        let max_h = self.config.max_health;
        let max_e = self.config.max_energy;
        let u = self
            .units
            .get_mut(id as usize)
            .ok_or(EngineError::UnknownUnit(id))?;
        u.health = health.clamp(0, max_h);
        u.energy = energy.clamp(0, max_e);
        Ok(())
    }

    /// Set a unit's current order directly (either army).
    pub fn set_order(&mut self, id: UnitId, action: Action) -> Result<(), EngineError> {
        let u = self
            .units
            .get_mut(id as usize)
            .ok_or(EngineError::UnknownUnit(id))?;
        u.current_order = action;
        Ok(())
    }

    fn update_fog(&mut self, moved: &[UnitId], events: &mut Vec<Event>) {
        let terrain = &self.map.terrain;
        for &id in moved {
            let u = &self.units[id as usize];
            let k = &mut self.knowledge[u.army.index()];
            for &(dx, dy) in &self.geometry.vr {
                let p = u.pos.offset(dx, dy);
                if terrain.in_bounds(p) {
                    k.mark(terrain.index(p));
                }
            }
            let rival_flag = self.map.flag(u.army.rival());
            if k.enemy_flag_known.is_none() && self.geometry.in_range(u.pos, rival_flag) {
                k.enemy_flag_known = Some(rival_flag);
                if self.record_events {
                    events.push(Event::FlagDiscovered {
                        army: u.army,
                        at: rival_flag,
                    });
                }
            }
        }

        // rival sightings feed the "most enemies" estimate
        let window = self.config.nav.sighting_window;
        for army in Army::BOTH {
            let k = &mut self.knowledge[army.index()];
            for rival in self.units.iter().filter(|u| u.alive && u.army != army) {
                let seen = self
                    .units
                    .iter()
                    .any(|o| o.alive && o.army == army && self.geometry.in_range(o.pos, rival.pos));
                if seen {
                    k.sightings.push_back((rival.pos, self.turn));
                }
            }
            while let Some(&(_, t)) = k.sightings.front() {
                if t + window <= self.turn {
                    k.sightings.pop_front();
                } else {
                    break;
                }
            }
            k.hotspot = if k.sightings.is_empty() {
                None
            } else {
                let mut counts: HashMap<Pos, u32> = HashMap::new();
                for &(p, _) in &k.sightings {
                    *counts.entry(p).or_default() += 1;
                }
                counts
                    .into_iter()
                    .max_by(|a, b| a.1.cmp(&b.1).then(b.0.row_major().cmp(&a.0.row_major())))
                    .map(|(p, _)| p)
            };
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn perceive_unit(
    unit: &Unit,
    terrain: &Terrain,
    units: &[Unit],
    occupancy: &[u32],
    geometry: &Geometry,
    config: &WorldConfig,
    knowledge: &ArmyKnowledge,
    rival_flag: Pos,
) -> Perception {
    let mut mates = 0u32;
    let mut rivals = 0u32;
    for &(dx, dy) in &geometry.vr[1..] {
        let p = unit.pos.offset(dx, dy);
        if !terrain.in_bounds(p) {
            continue;
        }
        let occ = occupancy[terrain.index(p)];
        if occ != EMPTY {
            if units[occ as usize].army == unit.army {
                mates += 1;
            } else {
                rivals += 1;
            }
        }
    }
    let under_attack = Dir::ALL.iter().any(|&d| {
        let p = unit.pos.step(d);
        terrain.in_bounds(p) && {
            let occ = occupancy[terrain.index(p)];
            occ != EMPTY && units[occ as usize].army != unit.army
        }
    });
    let objective_visible = match config.objective_sense {
        ObjectiveSense::ArmyKnowledge => knowledge.enemy_flag_known.is_some(),
        ObjectiveSense::UnitVisibility => geometry.in_range(unit.pos, rival_flag),
    };
    Perception {
        health: HealthLevel::classify(unit.health, config.max_health),
        advantage: mates > rivals,
        under_attack,
        objective_visible,
    }
}
