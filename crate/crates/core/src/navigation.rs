//! Turning orders into movement under partial knowledge.
//!
//! Each action is mapped to a target cell, then a layered local planner picks
//! one step per turn: a greedy step (biased by the army's pheromone trail),
//! an angle sweep around concave obstacles, and contour following once the
//! unit has stalled. No global path search is done; units only ever look at
//! their neighbor cells.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Dir, Pos};
use crate::kv::{KvDoc, KvError};
use crate::strategy::Action;
use crate::world::{Army, ArmyKnowledge, ConfigError, Geometry, Terrain, Unit, UnitId, WorldConfig};

const EPS: f64 = 1e-9;
const EMPTY: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavConfig {
    /// Turns without progress before contour following starts.
    pub stall_threshold: u32,
    pub pheromone_weight: f64,
    pub deposit: f64,
    pub evaporation: f64,
    pub pheromone_cap: f64,
    /// Turns a rival sighting counts towards the "most enemies" estimate.
    pub sighting_window: u32,
    /// Chebyshev radius of the patrol ring around the own flag.
    pub guard_radius: i32,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig {
            stall_threshold: 3,
            pheromone_weight: 0.1,
            deposit: 1.0,
            evaporation: 0.01,
            pheromone_cap: 100.0,
            sighting_window: 50,
            guard_radius: 3,
        }
    }
}

impl NavConfig {
    pub(crate) fn take_from(&mut self, doc: &mut KvDoc) -> Result<(), KvError> {
        doc.take_into("nav.stall_threshold", &mut self.stall_threshold)?;
        doc.take_into("nav.pheromone_weight", &mut self.pheromone_weight)?;
        doc.take_into("nav.deposit", &mut self.deposit)?;
        doc.take_into("nav.evaporation", &mut self.evaporation)?;
        doc.take_into("nav.pheromone_cap", &mut self.pheromone_cap)?;
        doc.take_into("nav.sighting_window", &mut self.sighting_window)?;
        doc.take_into("nav.guard_radius", &mut self.guard_radius)?;
        Ok(())
    }

    pub(crate) fn to_kv_text(&self) -> String {
        format!(
            "nav.stall_threshold = {}\nnav.pheromone_weight = {}\nnav.deposit = {}\n\
             nav.evaporation = {}\nnav.pheromone_cap = {}\nnav.sighting_window = {}\n\
             nav.guard_radius = {}\n",
            self.stall_threshold,
            self.pheromone_weight,
            self.deposit,
            self.evaporation,
            self.pheromone_cap,
            self.sighting_window,
            self.guard_radius
        )
    }

    pub(crate) fn validate(&self) -> Result<(), ConfigError> {
        if self.stall_threshold == 0 {
            return Err(ConfigError::NotPositive("nav.stall_threshold"));
        }
        if self.sighting_window == 0 {
            return Err(ConfigError::NotPositive("nav.sighting_window"));
        }
        if self.guard_radius <= 0 {
            return Err(ConfigError::NotPositive("nav.guard_radius"));
        }
        if !(self.pheromone_cap > 0.0) || !(self.deposit > 0.0) || !(self.pheromone_weight > 0.0)
        {
            return Err(ConfigError::NotPositive("nav.pheromone_*"));
        }
        if !(self.evaporation > 0.0 && self.evaporation < 1.0) {
            return Err(ConfigError::OutOfRange("nav.evaporation"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    fn flip(self) -> Hand {
        match self {
            Hand::Left => Hand::Right,
            Hand::Right => Hand::Left,
        }
    }

    /// Rotation of the first probe relative to the heading: the side the
    /// obstacle is kept on.
    fn side(self) -> i32 {
        match self {
            Hand::Left => -2,
            Hand::Right => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NavMode {
    Direct,
    WallFollow {
        hand: Hand,
        entry_cell: Pos,
        /// Best distance to the target before following started.
        entry_dist: f64,
        target_at_entry: Pos,
        heading: Dir,
        steps: u32,
    },
}

/// Per-unit navigation memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavContext {
    pub mode: NavMode,
    pub stall_counter: u32,
    target: Option<Pos>,
    best_dist: f64,
}

impl Default for NavContext {
    fn default() -> Self {
        NavContext {
            mode: NavMode::Direct,
            stall_counter: 0,
            target: None,
            best_dist: f64::INFINITY,
        }
    }
}

impl NavContext {
    pub fn target(&self) -> Option<Pos> {
        self.target
    }

    fn reset(&mut self, target: Pos, dist: f64) {
        self.mode = NavMode::Direct;
        self.stall_counter = 0;
        self.target = Some(target);
        self.best_dist = dist;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveReason {
    Greedy,
    AngleSweep,
    WallFollow,
    Pheromone,
    Random,
    Blocked,
}

/// One step (or none) for this turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveDecision {
    /// `None` means stay in place.
    pub step: Option<Dir>,
    pub reason: MoveReason,
}

impl MoveDecision {
    pub fn stay(reason: MoveReason) -> MoveDecision {
        MoveDecision { step: None, reason }
    }

    fn go(dir: Dir, reason: MoveReason) -> MoveDecision {
        MoveDecision {
            step: Some(dir),
            reason,
        }
    }
}

/// Where an action wants a unit to go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Cell(Pos),
    RandomWalk,
    Stay,
}

/// Read-only slice of the game state that navigation works on.
#[derive(Clone, Copy)]
pub struct NavView<'a> {
    pub terrain: &'a Terrain,
    pub flags: [Pos; 2],
    pub units: &'a [Unit],
    pub occupancy: &'a [u32],
    pub knowledge: &'a [ArmyKnowledge; 2],
    pub pheromone: &'a [Vec<f64>; 2],
    pub config: &'a WorldConfig,
    pub geometry: &'a Geometry,
}

impl NavView<'_> {
    /// In bounds, not impassable and not occupied by a living unit.
    pub fn legal(&self, p: Pos) -> bool {
        self.terrain.walkable(p) && self.occupancy[self.terrain.index(p)] == EMPTY
    }

    fn occupant(&self, p: Pos) -> Option<&Unit> {
        if !self.terrain.in_bounds(p) {
            return None;
        }
        match self.occupancy[self.terrain.index(p)] {
            EMPTY => None,
            id => Some(&self.units[id as usize]),
        }
    }

    fn pheromone_at(&self, army: Army, p: Pos) -> f64 {
        self.pheromone[army.index()][self.terrain.index(p)]
    }

    /// Nearest walkable cell to `p` (which may lie off the grid), ties in
    /// row-major order.
    fn nearest_walkable(&self, p: Pos) -> Option<Pos> {
        let clamped = Pos::new(
            p.x.clamp(0, self.terrain.width() - 1),
            p.y.clamp(0, self.terrain.height() - 1),
        );
        self.geometry
            .near
            .iter()
            .map(|&(dx, dy)| clamped.offset(dx, dy))
            .find(|&c| self.terrain.walkable(c))
    }
}

/// Map a unit's current order to a movement target.
pub fn action_target(view: &NavView, id: UnitId) -> Target {
    let unit = &view.units[id as usize];
    let army = unit.army;
    let knowledge = &view.knowledge[army.index()];
    let own_flag = view.flags[army.index()];
    match unit.current_order {
        Action::MoveForwardEnemy => {
            let nearest = view
                .geometry
                .vr
                .iter()
                .filter_map(|&(dx, dy)| view.occupant(unit.pos.offset(dx, dy)))
                .filter(|o| o.army != army)
                .min_by_key(|o| (o.pos.dist2(unit.pos), o.id));
            match (nearest, knowledge.hotspot()) {
                (Some(rival), _) => Target::Cell(rival.pos),
                (None, Some(spot)) => Target::Cell(spot),
                (None, None) => Target::RandomWalk,
            }
        }
        Action::GroupRunAway => {
            let (mut sx, mut sy, mut n) = (0i64, 0i64, 0i64);
            for &(dx, dy) in &view.geometry.vr[1..] {
                if let Some(o) = view.occupant(unit.pos.offset(dx, dy)) {
                    if o.army == army {
                        sx += o.pos.x as i64;
                        sy += o.pos.y as i64;
                        n += 1;
                    }
                }
            }
            if n == 0 {
                return Target::Cell(own_flag);
            }
            let cx = (sx as f64 / n as f64).round() as i32;
            let cy = (sy as f64 / n as f64).round() as i32;
            view.nearest_walkable(Pos::new(cx, cy))
                .map(Target::Cell)
                .unwrap_or(Target::Stay)
        }
        Action::MoveForwardObjective => match knowledge.enemy_flag_known() {
            Some(flag) => Target::Cell(flag),
            None => Target::RandomWalk,
        },
        Action::NoOperation => Target::Stay,
        Action::Explore => {
            if knowledge.explored_count() == view.terrain.len() {
                return Target::Stay;
            }
            view.geometry
                .near
                .iter()
                .map(|&(dx, dy)| unit.pos.offset(dx, dy))
                .find(|&c| view.terrain.in_bounds(c) && !knowledge.is_explored(view.terrain.index(c)))
                .map(Target::Cell)
                .unwrap_or(Target::Stay)
        }
        Action::ProtectFlag => {
            let r = view.config.nav.guard_radius;
            if unit.pos.chebyshev(own_flag) > r {
                Target::Cell(own_flag)
            } else {
                Target::Cell(patrol_waypoint(unit.pos, own_flag, r, view.terrain))
            }
        }
    }
}

/// Next corner, clockwise (screen coordinates), of the square ring of radius
/// `r` around `flag`, clamped to the grid.
pub fn patrol_waypoint(pos: Pos, flag: Pos, r: i32, terrain: &Terrain) -> Pos {
    // corners by angle: top-left -135°, top-right -45°, bottom-right 45°, bottom-left 135°
    const CORNERS: [(f64, i32, i32); 4] = [(-135.0, -1, -1), (-45.0, 1, -1), (45.0, 1, 1), (135.0, -1, 1)];
    let angle = ((pos.y - flag.y) as f64)
        .atan2((pos.x - flag.x) as f64)
        .to_degrees();
    let (_, sx, sy) = CORNERS
        .iter()
        .copied()
        .find(|&(a, _, _)| a > angle + 1e-6)
        .unwrap_or(CORNERS[0]);
    Pos::new(
        (flag.x + sx * r).clamp(0, terrain.width() - 1),
        (flag.y + sy * r).clamp(0, terrain.height() - 1),
    )
}

/// Uniform choice among the legal neighbor steps.
pub fn random_step<R: Rng + ?Sized>(view: &NavView, id: UnitId, rng: &mut R) -> MoveDecision {
    let pos = view.units[id as usize].pos;
    let options: Vec<Dir> = Dir::ALL
        .iter()
        .copied()
        .filter(|&d| view.legal(pos.step(d)))
        .collect();
    match options.choose(rng) {
        Some(&d) => MoveDecision::go(d, MoveReason::Random),
        None => MoveDecision::stay(MoveReason::Blocked),
    }
}

/// Best legal neighbor that strictly reduces the distance to `target`,
/// scored by distance reduction plus the weighted pheromone level.
fn greedy_step(view: &NavView, unit: &Unit, target: Pos) -> Option<MoveDecision> {
    let here = unit.pos.dist(target);
    let weight = view.config.nav.pheromone_weight;
    let mut best: Option<(f64, Dir)> = None;
    let mut plain: Option<(f64, Dir)> = None;
    for d in Dir::ALL {
        let next = unit.pos.step(d);
        if !view.legal(next) {
            continue;
        }
        let reduction = here - next.dist(target);
        if reduction <= EPS {
            continue;
        }
        let score = reduction + weight * view.pheromone_at(unit.army, next);
        if best.is_none_or(|(s, _)| score > s + EPS) {
            best = Some((score, d));
        }
        if plain.is_none_or(|(s, _)| reduction > s + EPS) {
            plain = Some((reduction, d));
        }
    }
    let (_, dir) = best?;
    let reason = if plain.map(|(_, d)| d) == Some(dir) {
        MoveReason::Greedy
    } else {
        MoveReason::Pheromone
    };
    Some(MoveDecision::go(dir, reason))
}

fn angle_sweep(view: &NavView, pos: Pos, target: Pos) -> Option<MoveDecision> {
    let bearing = Dir::toward(pos, target)?;
    [1, -1, 2, -2]
        .iter()
        .map(|&r| bearing.rotate(r))
        .find(|&d| view.legal(pos.step(d)))
        .map(|d| MoveDecision::go(d, MoveReason::AngleSweep))
}

/// Contour step keeping the obstacle on `hand`: probe from the hand side
/// towards the other side and take the first legal direction.
fn contour_step(view: &NavView, pos: Pos, hand: Hand, heading: Dir) -> Option<Dir> {
    let side = hand.side();
    let sweep = if side < 0 { 1 } else { -1 };
    (0..8)
        .map(|k| heading.rotate(side + sweep * k))
        .find(|&d| view.legal(pos.step(d)))
}

/// Plan one step of `id` towards `target`, updating the unit's context.
pub fn plan_step(ctx: &mut NavContext, view: &NavView, id: UnitId, target: Pos) -> MoveDecision {
    let unit = &view.units[id as usize];
    let pos = unit.pos;
    let here = pos.dist(target);

    match ctx.target {
        Some(t) if t == target => {}
        // small target drift (a moving rival) keeps the stall memory
        Some(t) if t.chebyshev(target) <= 2 => {
            ctx.target = Some(target);
            ctx.best_dist = here;
        }
        _ => ctx.reset(target, here),
    }
    if pos == target {
        ctx.reset(target, 0.0);
        return MoveDecision::stay(MoveReason::Greedy);
    }

    let limit = 2 * (view.terrain.width() + view.terrain.height()) as u32;
    if let NavMode::WallFollow {
        entry_dist,
        hand,
        steps,
        target_at_entry,
        ..
    } = &mut ctx.mode
    {
        if target_at_entry.chebyshev(target) > 2 {
            ctx.reset(target, here);
        } else if greedy_step(view, unit, target).is_some() && here < *entry_dist - EPS {
            ctx.mode = NavMode::Direct;
            ctx.stall_counter = 0;
            ctx.best_dist = here;
        } else if *steps >= limit {
            *hand = hand.flip();
            *steps = 0;
        }
    }

    if matches!(ctx.mode, NavMode::Direct) && ctx.stall_counter >= view.config.nav.stall_threshold
    {
        if let Some(bearing) = Dir::toward(pos, target) {
            let probe = |hand: Hand| {
                let heading = bearing.rotate(-hand.side());
                contour_step(view, pos, hand, heading).map(|d| (d, pos.step(d).dist2(target)))
            };
            let hand = match (probe(Hand::Left), probe(Hand::Right)) {
                (Some((_, l)), Some((_, r))) if r < l => Hand::Right,
                (None, Some(_)) => Hand::Right,
                _ => Hand::Left,
            };
            ctx.mode = NavMode::WallFollow {
                hand,
                entry_cell: pos,
                entry_dist: ctx.best_dist.min(here),
                target_at_entry: target,
                heading: bearing.rotate(-hand.side()),
                steps: 0,
            };
        }
    }

    let decision = match &mut ctx.mode {
        NavMode::WallFollow {
            hand,
            heading,
            steps,
            ..
        } => match contour_step(view, pos, *hand, *heading) {
            Some(d) => {
                *heading = d;
                *steps += 1;
                MoveDecision::go(d, MoveReason::WallFollow)
            }
            None => MoveDecision::stay(MoveReason::Blocked),
        },
        NavMode::Direct => greedy_step(view, unit, target)
            .or_else(|| angle_sweep(view, pos, target))
            .unwrap_or(MoveDecision::stay(MoveReason::Blocked)),
    };

    let next = decision.step.map_or(pos, |d| pos.step(d));
    let nd = next.dist(target);
    if nd < ctx.best_dist - EPS {
        ctx.best_dist = nd;
        ctx.stall_counter = 0;
    } else {
        ctx.stall_counter += 1;
    }
    decision
}

/// Deposit on the cells vacated by progressing units, then evaporate the
/// whole grid and clamp to `[0, pheromone_cap]`.
pub fn pheromone_update(grid: &mut [f64], vacated: &[usize], cfg: &NavConfig) {
    for &i in vacated {
        grid[i] += cfg.deposit;
    }
    let keep = 1.0 - cfg.evaporation;
    for v in grid.iter_mut() {
        *v = (*v * keep).clamp(0.0, cfg.pheromone_cap);
    }
}
