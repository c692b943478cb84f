//! Live game sessions: a human drives the HP army through group orders while
//! the virtual player's matrix drives the VP army. Orders are recorded into a
//! player model as they are submitted.
//!
//! This module is transport-free. [`handle_request`] maps one JSON request
//! to one JSON response; servers add the wire and the per-turn pushes.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::fixtures;
use crate::geometry::Pos;
use crate::modeling::ExtendedAnswerMatrix;
use crate::pmea::{OnlineContext, OnlineGame, OnlineOpponent, PmeaError};
use crate::strategy::{rbp_default, validate_matrix, Action, AnswerMatrix};
use crate::world::{
    load_map, spawn_game, Army, Event, GameMap, GameState, Order, Outcome, RejectReason, Replay,
    TurnReport, UnitId, WorldConfig,
};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TICK_RATE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Lobby,
    Playing,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "code", content = "message", rename_all = "snake_case")]
pub enum SessionError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session is finished")]
    SessionClosed,
    #[error("session is not playing")]
    NotPlaying,
    #[error("bad genome: {0}")]
    BadGenome(String),
    #[error("bad map: {0}")]
    BadMap(String),
    #[error("bad action {0}, expected 1..6")]
    BadAction(i64),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u64),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownSession(_) => "unknown_session",
            SessionError::SessionClosed => "session_closed",
            SessionError::NotPlaying => "not_playing",
            SessionError::BadGenome(_) => "bad_genome",
            SessionError::BadMap(_) => "bad_map",
            SessionError::BadAction(_) => "bad_action",
            SessionError::BadRequest(_) => "bad_request",
            SessionError::UnsupportedVersion(_) => "unsupported_version",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitView {
    pub id: UnitId,
    pub army: Army,
    pub pos: Pos,
    pub health: i32,
    pub energy: i32,
    /// Known for own units only.
    pub current_order: Option<Action>,
}

/// What one army knows at a turn boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub army: Army,
    pub turn: u32,
    pub width: i32,
    pub height: i32,
    /// One string per row: terrain glyphs for explored cells, `?` elsewhere.
    pub terrain: Vec<String>,
    pub own_flag: Pos,
    pub enemy_flag: Option<Pos>,
    pub units: Vec<UnitView>,
}

pub const UNEXPLORED: char = '?';

pub fn state_view(state: &GameState, army: Army) -> StateView {
    let terrain = state.terrain();
    let knowledge = state.knowledge(army);
    let rows = (0..terrain.height())
        .map(|y| {
            (0..terrain.width())
                .map(|x| {
                    let p = Pos::new(x, y);
                    if knowledge.is_explored(terrain.index(p)) {
                        terrain.tile(p).glyph()
                    } else {
                        UNEXPLORED
                    }
                })
                .collect()
        })
        .collect();
    let own: Vec<_> = state.living(army).collect();
    let geometry = state.geometry();
    let mut units: Vec<UnitView> = own
        .iter()
        .map(|u| UnitView {
            id: u.id,
            army,
            pos: u.pos,
            health: u.health,
            energy: u.energy,
            current_order: Some(u.current_order),
        })
        .collect();
    units.extend(
        state
            .living(army.rival())
            .filter(|e| own.iter().any(|u| geometry.in_range(u.pos, e.pos)))
            .map(|e| UnitView {
                id: e.id,
                army: e.army,
                pos: e.pos,
                health: e.health,
                energy: e.energy,
                current_order: None,
            }),
    );
    units.sort_by_key(|u| u.id);
    StateView {
        army,
        turn: state.turn(),
        width: terrain.width(),
        height: terrain.height(),
        terrain: rows,
        own_flag: state.flag(army),
        enemy_flag: knowledge.enemy_flag_known(),
        units,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub unit_id: UnitId,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderAck {
    /// Turn whose step applies the order.
    pub effective_turn: u32,
    pub accepted: Vec<UnitId>,
    pub rejected: Vec<Rejection>,
}

/// One recorded (unit, order) submission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedOrder {
    pub turn: u32,
    pub unit_id: UnitId,
    pub state: usize,
    pub action: Action,
}

/// Per-turn push to subscribers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnPush {
    pub turn: u32,
    pub events: Vec<Event>,
    pub view: StateView,
    pub outcome: Option<Outcome>,
}

pub type Listener = Box<dyn FnMut(&TurnPush) + Send>;

pub struct Session {
    id: String,
    game: GameState,
    vp: AnswerMatrix,
    recorder: ExtendedAnswerMatrix,
    phase: Phase,
    tick_rate: f64,
    queued: Vec<Order>,
    order_log: Vec<LoggedOrder>,
    replay: Replay,
    aborted: bool,
    listeners: Vec<Listener>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("phase", &self.phase)
            .field("turn", &self.game.turn())
            .finish()
    }
}

impl Session {
    pub fn new(
        map: Arc<GameMap>,
        world: WorldConfig,
        vp: AnswerMatrix,
        seed: u64,
        tick_rate: f64,
    ) -> Result<Session, SessionError> {
        if !(tick_rate >= 0.0 && tick_rate.is_finite()) {
            return Err(SessionError::BadRequest("tick_rate must be >= 0".into()));
        }
        let game =
            spawn_game(map, world, seed).map_err(|e| SessionError::BadMap(e.to_string()))?;
        Ok(Session {
            id: uuid::Uuid::new_v4().simple().to_string(),
            game,
            vp,
            recorder: ExtendedAnswerMatrix::new(),
            phase: Phase::Lobby,
            tick_rate,
            queued: Vec::new(),
            order_log: Vec::new(),
            replay: Replay::default(),
            aborted: false,
            listeners: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn tick_rate(&self) -> f64 {
        self.tick_rate
    }

    pub fn game(&self) -> &GameState {
        &self.game
    }

    pub fn vp(&self) -> &AnswerMatrix {
        &self.vp
    }

    pub fn recorder(&self) -> &ExtendedAnswerMatrix {
        &self.recorder
    }

    pub fn order_log(&self) -> &[LoggedOrder] {
        &self.order_log
    }

    pub fn replay(&self) -> &Replay {
        &self.replay
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.game.game_outcome()
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted
    }

    pub fn subscribe(&mut self, listener: Listener) {
        self.listeners.push(listener);
    }

    pub fn start(&mut self) -> Result<(), SessionError> {
        match self.phase {
            Phase::Lobby => {
                self.phase = Phase::Playing;
                Ok(())
            }
            Phase::Playing => Ok(()),
            Phase::Finished => Err(SessionError::SessionClosed),
        }
    }

    /// Queue a group order for the next turn boundary and record one
    /// observation per accepted unit.
    pub fn submit_order(
        &mut self,
        units: &[UnitId],
        action: Action,
    ) -> Result<OrderAck, SessionError> {
        match self.phase {
            Phase::Playing => {}
            Phase::Finished => return Err(SessionError::SessionClosed),
            Phase::Lobby => return Err(SessionError::NotPlaying),
        }
        let turn = self.game.turn();
        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        let unique: BTreeSet<UnitId> = units.iter().copied().collect();
        for id in unique {
            let reason = match self.game.unit(id) {
                None => Some(RejectReason::UnknownUnit),
                Some(u) if u.army != Army::Hp => Some(RejectReason::Foreign),
                Some(u) if !u.alive => Some(RejectReason::Dead),
                Some(_) => None,
            };
            match reason {
                Some(reason) => rejected.push(Rejection {
                    unit_id: id,
                    reason,
                }),
                None => {
                    let p = self.game.perceive(id);
                    self.recorder.record(&p, action);
                    self.order_log.push(LoggedOrder {
                        turn,
                        unit_id: id,
                        state: p.index().value(),
                        action,
                    });
                    accepted.push(id);
                }
            }
        }
        if !accepted.is_empty() {
            self.queued.push(Order::new(accepted.clone(), action));
        }
        Ok(OrderAck {
            effective_turn: turn,
            accepted,
            rejected,
        })
    }

    pub fn view(&self, army: Army) -> StateView {
        state_view(&self.game, army)
    }

    /// Step exactly one turn with the queued orders; units without a new
    /// order keep their last one.
    pub fn advance(&mut self) -> Result<TurnPush, SessionError> {
        match self.phase {
            Phase::Playing => {}
            Phase::Finished => return Err(SessionError::SessionClosed),
            Phase::Lobby => return Err(SessionError::NotPlaying),
        }
        let orders = std::mem::take(&mut self.queued);
        let mut vp = self.vp;
        let report = self
            .game
            .step_turn(&orders, &mut vp)
            .map_err(|_| SessionError::SessionClosed)?;
        let outcome = self.game.game_outcome();
        if outcome.is_some() {
            self.phase = Phase::Finished;
        }
        let push = TurnPush {
            turn: self.game.turn(),
            events: report.events.clone(),
            view: self.view(Army::Hp),
            outcome,
        };
        self.replay.push(report);
        for l in &mut self.listeners {
            l(&push);
        }
        Ok(push)
    }

    /// End the session without an outcome, e.g. when the player leaves.
    pub fn abort(&mut self) {
        if self.phase != Phase::Finished {
            self.phase = Phase::Finished;
            self.aborted = true;
        }
    }

    /// The turn reports so far as one replay, with rejected orders included.
    pub fn turn_reports(&self) -> &[TurnReport] {
        &self.replay.turns
    }
}

/// A session plus a condition variable signalled on every turn.
pub struct SessionHandle {
    session: Mutex<Session>,
    changed: Condvar,
}

impl SessionHandle {
    pub fn lock(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn advance(&self) -> Result<TurnPush, SessionError> {
        let r = self.lock().advance();
        self.changed.notify_all();
        r
    }

    pub fn abort(&self) {
        self.lock().abort();
        self.changed.notify_all();
    }

    /// Block until the session is finished or `timeout` elapses. Returns
    /// whether it finished.
    pub fn wait_finished(&self, timeout: Option<Duration>) -> bool {
        let deadline = timeout.map(|t| Instant::now() + t);
        let mut guard = self.lock();
        while guard.phase != Phase::Finished {
            let wait = match deadline {
                Some(d) => match d.checked_duration_since(Instant::now()) {
                    Some(left) => left,
                    None => return false,
                },
                None => Duration::from_secs(3600),
            };
            guard = self
                .changed
                .wait_timeout(guard, wait)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
        true
    }

    /// Step at the session's tick rate until it finishes.
    pub fn run_loop(&self) {
        loop {
            let rate = {
                let s = self.lock();
                if s.phase != Phase::Playing {
                    break;
                }
                s.tick_rate
            };
            if self.advance().is_err() {
                break;
            }
            if rate > 0.0 {
                thread::sleep(Duration::from_secs_f64(1.0 / rate));
            }
        }
    }
}

/// All live sessions of a server.
#[derive(Default)]
pub struct SessionHub {
    sessions: Mutex<HashMap<String, Arc<SessionHandle>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateParams {
    /// Builtin map name, with or without the `builtin:` prefix.
    #[serde(default)]
    pub map: Option<String>,
    /// Inline map text; takes precedence over `map`.
    #[serde(default)]
    pub map_text: Option<String>,
    /// World configuration in `key = value` form.
    #[serde(default)]
    pub world: Option<String>,
    #[serde(default)]
    pub vp_genome: Option<Vec<i64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tick_rate: Option<f64>,
}

impl SessionHub {
    pub fn new() -> SessionHub {
        SessionHub::default()
    }

    pub fn insert(&self, session: Session) -> Arc<SessionHandle> {
        let id = session.id().to_string();
        let handle = Arc::new(SessionHandle {
            session: Mutex::new(session),
            changed: Condvar::new(),
        });
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, Arc::clone(&handle));
        handle
    }

    pub fn create(&self, params: &CreateParams) -> Result<Arc<SessionHandle>, SessionError> {
        let map = match (&params.map_text, &params.map) {
            (Some(text), _) => load_map(text).map_err(|e| SessionError::BadMap(e.to_string()))?,
            (None, Some(name)) => fixtures::try_builtin(name)
                .ok_or_else(|| SessionError::BadMap(format!("no builtin map {name:?}")))?
                .map_err(|e| SessionError::BadMap(e.to_string()))?,
            (None, None) => return Err(SessionError::BadRequest("map or map_text required".into())),
        };
        let world = match &params.world {
            Some(text) => WorldConfig::from_kv_text(text)
                .map_err(|e| SessionError::BadRequest(e.to_string()))?,
            None => WorldConfig::default(),
        };
        let vp = match &params.vp_genome {
            Some(raw) => validate_matrix(raw).map_err(|e| SessionError::BadGenome(e.to_string()))?,
            None => rbp_default(),
        };
        let session = Session::new(
            Arc::new(map),
            world,
            vp,
            params.seed,
            params.tick_rate.unwrap_or(DEFAULT_TICK_RATE),
        )?;
        Ok(self.insert(session))
    }

    pub fn get(&self, id: &str) -> Result<Arc<SessionHandle>, SessionError> {
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }

    pub fn remove(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .remove(id)
    }

    pub fn ids(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect();
        v.sort();
        v
    }

    /// Move a session to Playing; with a positive tick rate a background
    /// thread then advances it until the game ends.
    pub fn start(&self, id: &str) -> Result<u32, SessionError> {
        let handle = self.get(id)?;
        let (turn, rate, was_lobby) = {
            let mut s = handle.lock();
            let was_lobby = s.phase() == Phase::Lobby;
            s.start()?;
            (s.game().turn(), s.tick_rate(), was_lobby)
        };
        handle.changed.notify_all();
        if was_lobby && rate > 0.0 {
            thread::spawn(move || handle.run_loop());
        }
        Ok(turn)
    }
}

/// Requests of the wire protocol, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Request {
    Create(CreateParams),
    Start {
        session: String,
    },
    Order {
        session: String,
        units: Vec<UnitId>,
        action: i64,
    },
    View {
        session: String,
        #[serde(default)]
        army: Option<Army>,
    },
    Advance {
        session: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Response {
    Created {
        session: String,
        phase: Phase,
        view: StateView,
    },
    Started {
        session: String,
        turn: u32,
    },
    Ack {
        session: String,
        #[serde(flatten)]
        ack: OrderAck,
    },
    View {
        session: String,
        phase: Phase,
        view: StateView,
    },
    Advanced {
        session: String,
        phase: Phase,
        turn: u32,
        events: Vec<Event>,
        outcome: Option<Outcome>,
    },
    Error {
        code: String,
        message: String,
    },
}

impl From<SessionError> for Response {
    fn from(e: SessionError) -> Response {
        Response::Error {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

/// A message with the protocol version field.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T> {
    pub v: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(body: T) -> Envelope<T> {
        Envelope {
            v: PROTOCOL_VERSION,
            body,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Server push after each turn: `{"v":1,"type":"turn",...}`.
pub fn push_message(push: &TurnPush) -> String {
    #[derive(Serialize)]
    #[serde(tag = "type", rename_all = "lowercase")]
    enum Push<'a> {
        Turn(&'a TurnPush),
    }
    Envelope::new(Push::Turn(push)).to_json()
}

pub fn parse_request(value: Value) -> Result<Request, SessionError> {
    match value.get("v") {
        Some(Value::Number(n)) if n.as_u64() == Some(PROTOCOL_VERSION as u64) => {}
        Some(Value::Number(n)) => {
            return Err(SessionError::UnsupportedVersion(n.as_u64().unwrap_or(0)))
        }
        _ => return Err(SessionError::BadRequest("missing protocol version \"v\"".into())),
    }
    let mut value = value;
    if let Value::Object(map) = &mut value {
        map.remove("v");
    }
    serde_json::from_value(value).map_err(|e| SessionError::BadRequest(e.to_string()))
}

pub fn dispatch(hub: &SessionHub, request: Request) -> Result<Response, SessionError> {
    Ok(match request {
        Request::Create(params) => {
            let handle = hub.create(&params)?;
            let s = handle.lock();
            Response::Created {
                session: s.id().to_string(),
                phase: s.phase(),
                view: s.view(Army::Hp),
            }
        }
        Request::Start { session } => {
            let turn = hub.start(&session)?;
            Response::Started { session, turn }
        }
        Request::Order {
            session,
            units,
            action,
        } => {
            let action = Action::from_number(action).map_err(|_| SessionError::BadAction(action))?;
            let handle = hub.get(&session)?;
            let ack = handle.lock().submit_order(&units, action)?;
            Response::Ack { session, ack }
        }
        Request::View { session, army } => {
            let handle = hub.get(&session)?;
            let s = handle.lock();
            Response::View {
                session,
                phase: s.phase(),
                view: s.view(army.unwrap_or(Army::Hp)),
            }
        }
        Request::Advance { session } => {
            let handle = hub.get(&session)?;
            let push = handle.advance()?;
            let phase = handle.lock().phase();
            Response::Advanced {
                session,
                phase,
                turn: push.turn,
                events: push.events,
                outcome: push.outcome,
            }
        }
    })
}

/// One JSON request in, one JSON response out; errors become error
/// responses.
pub fn handle_request(hub: &SessionHub, text: &str) -> String {
    let response = serde_json::from_str::<Value>(text)
        .map_err(|e| SessionError::BadRequest(e.to_string()))
        .and_then(parse_request)
        .and_then(|r| dispatch(hub, r))
        .unwrap_or_else(Response::from);
    Envelope::new(response).to_json()
}

/// On-line opponent backed by a live session: each round creates a session
/// for the current virtual player, announces its id and waits for a human
/// to play it to the end.
pub struct LiveOpponent {
    pub hub: Arc<SessionHub>,
    pub tick_rate: f64,
    pub timeout: Option<Duration>,
    pub announce: Box<dyn FnMut(u32, &str) + Send>,
}

impl OnlineOpponent for LiveOpponent {
    fn describe(&self) -> String {
        "live".to_string()
    }

    fn play(&mut self, ctx: &OnlineContext<'_>) -> Result<OnlineGame, PmeaError> {
        let started = Instant::now();
        let session = Session::new(
            Arc::clone(ctx.map),
            ctx.world.clone(),
            *ctx.vp,
            ctx.seed,
            self.tick_rate,
        )
        .map_err(|e| PmeaError::Aborted(e.to_string()))?;
        let id = session.id().to_string();
        let handle = self.hub.insert(session);
        (self.announce)(ctx.round, &id);
        let finished = handle.wait_finished(self.timeout);
        let s = handle.lock();
        let result = match (finished, s.outcome()) {
            (true, Some(outcome)) if !s.is_aborted() => Ok(OnlineGame {
                outcome,
                replay: s.replay().clone(),
                model: s.recorder().clone(),
                wall_time_s: started.elapsed().as_secs_f64(),
            }),
            _ => Err(PmeaError::Aborted(format!("session {id} did not finish"))),
        };
        drop(s);
        if result.is_err() {
            handle.abort();
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::builtin;

    fn session(seed: u64) -> Session {
        Session::new(
            Arc::new(builtin("arena20")),
            WorldConfig::default(),
            rbp_default(),
            seed,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn ids_are_32_hex() {
        let s = session(1);
        assert_eq!(s.id().len(), 32);
        assert!(s.id().chars().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(s.id(), session(1).id());
    }

    #[test]
    fn twin_sessions_share_views_and_events() {
        let (mut a, mut b) = (session(7), session(7));
        assert_eq!(a.view(Army::Hp), b.view(Army::Hp));
        a.start().unwrap();
        b.start().unwrap();
        let hp: Vec<u32> = a.game().living(Army::Hp).map(|u| u.id).collect();
        for s in [&mut a, &mut b] {
            s.submit_order(&hp[..3], Action::MoveForwardObjective).unwrap();
        }
        for _ in 0..5 {
            assert_eq!(a.advance().unwrap(), b.advance().unwrap());
        }
    }

    #[test]
    fn order_acceptance() {
        let mut s = session(2);
        assert_eq!(
            s.submit_order(&[1], Action::Explore),
            Err(SessionError::NotPlaying)
        );
        s.start().unwrap();
        let hp: Vec<u32> = s.game().living(Army::Hp).map(|u| u.id).take(5).collect();
        let ack = s.submit_order(&hp, Action::MoveForwardObjective).unwrap();
        assert_eq!(ack.accepted.len(), 5);
        assert_eq!(ack.effective_turn, 0);
        assert_eq!(s.recorder().total_observations(), 5);

        let vp = s.game().living(Army::Vp).next().unwrap().id;
        let ack = s.submit_order(&[hp[0], vp, 999], Action::Explore).unwrap();
        assert_eq!(ack.accepted, vec![hp[0]]);
        assert_eq!(ack.rejected.len(), 2);
        assert_eq!(s.recorder().total_observations(), 6);
    }

    #[test]
    fn advance_without_orders_keeps_last_orders() {
        let mut s = session(3);
        s.start().unwrap();
        let id = s.game().living(Army::Hp).next().unwrap().id;
        s.submit_order(&[id], Action::NoOperation).unwrap();
        s.advance().unwrap();
        let pos = s.game().unit(id).unwrap().pos;
        for _ in 0..3 {
            s.advance().unwrap();
        }
        assert_eq!(s.game().unit(id).unwrap().current_order, Action::NoOperation);
        assert_eq!(s.game().unit(id).unwrap().pos, pos);
    }

    #[test]
    fn protocol_round_trip() {
        let hub = SessionHub::new();
        let created: Value = serde_json::from_str(&handle_request(
            &hub,
            r#"{"v":1,"type":"create","map":"builtin:arena20","seed":4,"tick_rate":0}"#,
        ))
        .unwrap();
        assert_eq!(created["v"], 1);
        assert_eq!(created["type"], "created");
        let id = created["session"].as_str().unwrap().to_string();

        let bad: Value = serde_json::from_str(&handle_request(
            &hub,
            &format!(r#"{{"v":1,"type":"order","session":"{id}","units":[1],"action":7}}"#),
        ))
        .unwrap();
        assert_eq!(bad["code"], "bad_action");

        let r: Value = serde_json::from_str(&handle_request(
            &hub,
            &format!(r#"{{"v":1,"type":"start","session":"{id}"}}"#),
        ))
        .unwrap();
        assert_eq!(r["type"], "started");
        let r: Value = serde_json::from_str(&handle_request(
            &hub,
            &format!(r#"{{"v":1,"type":"advance","session":"{id}"}}"#),
        ))
        .unwrap();
        assert_eq!(r["turn"], 1);

        let genome: Value = serde_json::from_str(&handle_request(
            &hub,
            r#"{"v":1,"type":"create","map":"arena20","vp_genome":[1,2,3]}"#,
        ))
        .unwrap();
        assert_eq!(genome["code"], "bad_genome");
        let version: Value =
            serde_json::from_str(&handle_request(&hub, r#"{"v":2,"type":"view","session":"x"}"#))
                .unwrap();
        assert_eq!(version["code"], "unsupported_version");
    }
}
