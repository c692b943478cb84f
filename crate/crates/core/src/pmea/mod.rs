//! The play → model → evolve loop, its opponents and its artifacts.
//!
//! Each round plays one on-line game of the current virtual player against
//! an opponent (a scripted persona or a live session), extracts a player
//! model from the opponent's recorded orders, and evolves the virtual player
//! against that model. Round artifacts are written to an output directory as
//! they complete; rerunning with the same configuration resumes after the
//! last completed round.

pub mod artifact;
pub mod experiment;
pub mod persona;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evolution::{derive_seed, evolve_with, Arena, EaConfig, EvolveHooks, GenerationRecord};
use crate::modeling::ExtendedAnswerMatrix;
use crate::strategy::{rbp_default, AnswerMatrix};
use crate::world::{spawn_game, GameMap, Outcome, Replay, SpawnError, WorldConfig};

pub use artifact::ArtifactError;
pub use experiment::{
    run_experiment, Algorithm, ExperimentConfig, ExperimentReport, GameRecord, ReportRow,
};
pub use persona::{Persona, PersonaPlayer, PersonaPolicy};

#[derive(Debug, Error)]
pub enum PmeaError {
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Spawn(#[from] SpawnError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("output directory holds a different run: {0}")]
    RunMismatch(String),
    #[error("on-line game aborted: {0}")]
    Aborted(String),
    #[error("interrupted after {completed} completed rounds")]
    Interrupted { completed: u32 },
}

/// How the player model of a round is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelMode {
    /// From the last on-line game only.
    PerGame,
    /// From all on-line games so far.
    Cumulative,
}

impl std::str::FromStr for ModelMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "per-game" => Ok(ModelMode::PerGame),
            "cumulative" => Ok(ModelMode::Cumulative),
            other => Err(format!("unknown model mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PmeaConfig {
    pub rounds: u32,
    pub map_name: String,
    pub map: Arc<GameMap>,
    pub world: WorldConfig,
    pub ea: EaConfig,
    pub model_mode: ModelMode,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl PmeaConfig {
    pub fn new(map_name: impl Into<String>, map: Arc<GameMap>) -> PmeaConfig {
        PmeaConfig {
            rounds: 20,
            map_name: map_name.into(),
            map,
            world: WorldConfig::default(),
            ea: EaConfig::default(),
            model_mode: ModelMode::PerGame,
            seed: 0,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), PmeaError> {
        if self.rounds == 0 {
            return Err(PmeaError::Config("rounds must be at least 1".into()));
        }
        self.world
            .validate()
            .map_err(|e| PmeaError::Config(e.to_string()))?;
        self.ea
            .validate()
            .map_err(|e| PmeaError::Config(e.to_string()))
    }
}

/// Everything an opponent needs to play round `round`.
pub struct OnlineContext<'a> {
    pub round: u32,
    pub vp: &'a AnswerMatrix,
    pub map: &'a Arc<GameMap>,
    pub world: &'a WorldConfig,
    pub seed: u64,
}

/// Result of one on-line game.
#[derive(Debug, Clone)]
pub struct OnlineGame {
    pub outcome: Outcome,
    pub replay: Replay,
    /// The opponent's orders, counted per state.
    pub model: ExtendedAnswerMatrix,
    pub wall_time_s: f64,
}

/// Plays the human side of the on-line games.
pub trait OnlineOpponent {
    /// Stable description, part of the run fingerprint.
    fn describe(&self) -> String;
    fn play(&mut self, ctx: &OnlineContext<'_>) -> Result<OnlineGame, PmeaError>;
}

pub struct PersonaOpponent {
    pub persona: Persona,
}

impl PersonaOpponent {
    pub fn new(persona: Persona) -> PersonaOpponent {
        PersonaOpponent { persona }
    }
}

impl OnlineOpponent for PersonaOpponent {
    fn describe(&self) -> String {
        format!("persona:{}", self.persona)
    }

    fn play(&mut self, ctx: &OnlineContext<'_>) -> Result<OnlineGame, PmeaError> {
        let policy = self.persona.policy_for_game(ctx.round);
        Ok(play_persona_game(
            ctx.vp,
            policy,
            ctx.map,
            ctx.world,
            ctx.seed,
            derive_seed(ctx.seed, 0x9e25, 0),
        )?)
    }
}

/// One recorded game of `vp` against a persona policy.
pub fn play_persona_game(
    vp: &AnswerMatrix,
    policy: PersonaPolicy,
    map: &Arc<GameMap>,
    world: &WorldConfig,
    seed: u64,
    persona_seed: u64,
) -> Result<OnlineGame, SpawnError> {
    let start = Instant::now();
    let mut state = spawn_game(Arc::clone(map), world.clone(), seed)?;
    let mut player = PersonaPlayer::new(policy, persona_seed);
    let mut controller = *vp;
    let mut replay = Replay::default();
    let mut model = ExtendedAnswerMatrix::new();
    let outcome = loop {
        if let Some(o) = state.game_outcome() {
            break o;
        }
        let orders = player.orders(&state);
        for order in &orders {
            for &id in &order.units {
                model.record(&state.perceive(id), order.action);
            }
        }
        let report = state
            .step_turn(&orders, &mut controller)
            .expect("game is running");
        replay.push(report);
    };
    Ok(OnlineGame {
        outcome,
        replay,
        model,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Per-round summary, persisted as `outcome_NNN.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub online_seed: u64,
    pub ea_seed: u64,
    pub outcome: Outcome,
    pub online_wall_time_s: f64,
    pub evolve_wall_time_s: f64,
    pub best_fitness: f64,
    pub evaluations: u64,
    pub observations: u64,
    pub replay_hash: String,
}

#[derive(Debug, Clone)]
pub struct PmeaResult {
    pub final_vp: AnswerMatrix,
    pub rounds: Vec<RoundRecord>,
    /// Rounds restored from the output directory instead of being played.
    pub resumed_rounds: u32,
}

#[derive(Default)]
pub struct PmeaHooks<'a> {
    pub on_round: Option<&'a mut dyn FnMut(&RoundRecord)>,
    pub on_generation: Option<&'a mut dyn FnMut(u32, &GenerationRecord)>,
    pub cancel: Option<&'a AtomicBool>,
}

const RUN_FORMAT: &str = "pmea-run-v1";
const ROUND_FORMAT: &str = "pmea-round-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunManifest {
    format: String,
    map_name: String,
    map_sha256: String,
    world: String,
    ea: EaConfig,
    model_mode: ModelMode,
    seed: u64,
    opponent: String,
}

#[derive(Serialize, Deserialize)]
struct RoundFile {
    format: String,
    #[serde(flatten)]
    record: RoundRecord,
}

pub fn genome_path(dir: &Path, round: u32) -> PathBuf {
    dir.join(format!("genome_{round:03}.json"))
}

pub fn model_path(dir: &Path, round: u32) -> PathBuf {
    dir.join(format!("model_{round:03}.json"))
}

pub fn replay_path(dir: &Path, round: u32) -> PathBuf {
    dir.join(format!("replay_{round:03}.jsonl"))
}

pub fn outcome_path(dir: &Path, round: u32) -> PathBuf {
    dir.join(format!("outcome_{round:03}.json"))
}

pub fn ea_log_path(dir: &Path, round: u32) -> PathBuf {
    dir.join(format!("ea_{round:03}.jsonl"))
}

pub fn load_round_record(path: &Path) -> Result<RoundRecord, ArtifactError> {
    let f: RoundFile = artifact::load_tagged(path, ROUND_FORMAT)?;
    Ok(f.record)
}

fn manifest(cfg: &PmeaConfig, opponent: &str) -> RunManifest {
    RunManifest {
        format: RUN_FORMAT.into(),
        map_name: cfg.map_name.clone(),
        map_sha256: hex::encode(Sha256::digest(cfg.map.to_text().as_bytes())),
        world: cfg.world.to_kv_text(),
        ea: cfg.ea.clone(),
        model_mode: cfg.model_mode,
        seed: cfg.seed,
        opponent: opponent.to_string(),
    }
}

/// Restore completed rounds from `dir`: rounds 1..=k whose genome exists.
fn restore(
    dir: &Path,
    cfg: &PmeaConfig,
    mut cumulative: Option<&mut ExtendedAnswerMatrix>,
) -> Result<(AnswerMatrix, Vec<RoundRecord>), PmeaError> {
    let mut vp = rbp_default();
    let g0 = genome_path(dir, 0);
    if g0.exists() {
        vp = artifact::load_genome(&g0)?;
    }
    let mut records = Vec::new();
    for round in 1..=cfg.rounds {
        let g = genome_path(dir, round);
        if !g.exists() {
            break;
        }
        let record = load_round_record(&outcome_path(dir, round))?;
        if let Some(acc) = cumulative.as_deref_mut() {
            *acc = acc.merge(&artifact::load_model(&model_path(dir, round))?);
        }
        vp = artifact::load_genome(&g)?;
        records.push(record);
    }
    Ok((vp, records))
}

pub fn run_pmea(
    cfg: &PmeaConfig,
    opponent: &mut dyn OnlineOpponent,
) -> Result<PmeaResult, PmeaError> {
    run_pmea_with(cfg, opponent, PmeaHooks::default())
}

pub fn run_pmea_with(
    cfg: &PmeaConfig,
    opponent: &mut dyn OnlineOpponent,
    mut hooks: PmeaHooks<'_>,
) -> Result<PmeaResult, PmeaError> {
    cfg.validate()?;
    let arena = Arena {
        map: Arc::clone(&cfg.map),
        world: cfg.world.clone(),
    };
    let mut cumulative = ExtendedAnswerMatrix::new();
    let mut vp = rbp_default();
    let mut records = Vec::new();

    if let Some(dir) = &cfg.output_dir {
        let wanted = manifest(cfg, &opponent.describe());
        let run_file = dir.join("run.json");
        if run_file.exists() {
            let found: RunManifest = artifact::load_tagged(&run_file, RUN_FORMAT)?;
            if found != wanted {
                return Err(PmeaError::RunMismatch(run_file.display().to_string()));
            }
            let acc = (cfg.model_mode == ModelMode::Cumulative).then_some(&mut cumulative);
            (vp, records) = restore(dir, cfg, acc)?;
        } else {
            let text = serde_json::to_string_pretty(&wanted).expect("serializable");
            artifact::write_atomic(&run_file, text.as_bytes())?;
        }
        if !genome_path(dir, 0).exists() {
            artifact::save_genome(&genome_path(dir, 0), &vp)?;
        }
    }
    let resumed_rounds = records.len() as u32;

    for round in resumed_rounds + 1..=cfg.rounds {
        if hooks.cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            return Err(PmeaError::Interrupted {
                completed: round - 1,
            });
        }
        let online_seed = derive_seed(cfg.seed, round as u64, 1);
        let game = opponent.play(&OnlineContext {
            round,
            vp: &vp,
            map: &cfg.map,
            world: &cfg.world,
            seed: online_seed,
        })?;

        let counts = match cfg.model_mode {
            ModelMode::PerGame => game.model.clone(),
            ModelMode::Cumulative => {
                cumulative = cumulative.merge(&game.model);
                cumulative.clone()
            }
        };
        let player_model = counts.extract_policy(&rbp_default());

        let ea = EaConfig {
            seed: derive_seed(cfg.ea.seed, round as u64, 2),
            ..cfg.ea.clone()
        };
        let started = Instant::now();
        let mut log = Vec::new();
        let mut gen_cb = |r: &GenerationRecord| {
            if let Some(cb) = hooks.on_generation.as_mut() {
                cb(round, r);
            }
            log.push(r.clone());
        };
        let result = evolve_with(
            &player_model,
            &vp,
            &ea,
            &arena,
            EvolveHooks {
                on_generation: Some(&mut gen_cb),
                cancel: hooks.cancel,
            },
        )?;
        if result.interrupted {
            return Err(PmeaError::Interrupted {
                completed: round - 1,
            });
        }
        vp = result.best.genome;

        let record = RoundRecord {
            round,
            online_seed,
            ea_seed: ea.seed,
            outcome: game.outcome,
            online_wall_time_s: game.wall_time_s,
            evolve_wall_time_s: started.elapsed().as_secs_f64(),
            best_fitness: result.best.fitness,
            evaluations: result.evaluations,
            observations: game.model.total_observations(),
            replay_hash: game.replay.hash(),
        };
        if let Some(dir) = &cfg.output_dir {
            artifact::save_replay(&replay_path(dir, round), &game.replay)?;
            artifact::save_model(&model_path(dir, round), &game.model)?;
            let mut ea_log = String::new();
            for r in &log {
                ea_log.push_str(&serde_json::to_string(r).expect("serializable"));
                ea_log.push('\n');
            }
            artifact::write_atomic(&ea_log_path(dir, round), ea_log.as_bytes())?;
            let file = RoundFile {
                format: ROUND_FORMAT.into(),
                record: record.clone(),
            };
            let text = serde_json::to_string_pretty(&file).expect("serializable");
            artifact::write_atomic(&outcome_path(dir, round), text.as_bytes())?;
            // the genome marks the round as complete
            artifact::save_genome(&genome_path(dir, round), &vp)?;
        }
        if let Some(cb) = hooks.on_round.as_mut() {
            cb(&record);
        }
        records.push(record);
    }

    Ok(PmeaResult {
        final_vp: vp,
        rounds: records,
        resumed_rounds,
    })
}
