use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde_json::json;

use wrts_core::evolution::{derive_seed, evolve_with, Arena, EvolveHooks, GenerationRecord};
use wrts_core::fixtures::try_builtin;
use wrts_core::pmea::artifact::{self, ArtifactError};
use wrts_core::pmea::experiment::{adaptation_check, records_from_jsonl, records_to_jsonl};
use wrts_core::pmea::{
    play_persona_game, run_experiment, run_pmea_with, Algorithm, ExperimentConfig,
    ExperimentReport, ModelMode, OnlineOpponent, Persona, PersonaOpponent, PersonaPolicy,
    PmeaConfig, PmeaError, PmeaHooks, RoundRecord,
};
use wrts_core::session::{LiveOpponent, SessionHub};
use wrts_core::strategy::rbp_default;
use wrts_core::world::load_map;
use wrts_core::{AnswerMatrix, EaConfig, GameMap, WorldConfig};

use crate::args::{
    EaArgs, EvolveArgs, ExperimentArgs, PmeaArgs, ServeArgs, SimulateArgs, StatsArgs, WorldArgs,
};
use crate::server;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or option values: exit code 1.
    Usage(String),
    /// Unreadable, malformed or conflicting files, or a failed run: exit code 2.
    Artifact(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Artifact(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Artifact(m) => m,
        }
    }
}

impl From<ArtifactError> for CliError {
    fn from(e: ArtifactError) -> CliError {
        CliError::Artifact(e.to_string())
    }
}

impl From<PmeaError> for CliError {
    fn from(e: PmeaError) -> CliError {
        match e {
            PmeaError::Config(m) => CliError::Usage(m),
            other => CliError::Artifact(other.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn artifact_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Artifact(format!("{}: {e}", path.display()))
}

/// `builtin:<name>` or a map file path.
pub fn load_map_arg(map_arg: &str) -> CliResult<Arc<GameMap>> {
    if let Some(name) = map_arg.strip_prefix("builtin:") {
        return match try_builtin(name) {
            Some(Ok(map)) => Ok(Arc::new(map)),
            Some(Err(e)) => Err(CliError::Artifact(format!("builtin map {name}: {e}"))),
            None => Err(usage(format!("unknown builtin map {name:?}"))),
        };
    }
    let path = Path::new(map_arg);
    let text = artifact::read_text(path)?;
    load_map(&text)
        .map(Arc::new)
        .map_err(|e| artifact_err(path, e))
}

/// Short map label for reports: the builtin name or the file stem.
fn map_label(map_arg: &str) -> String {
    match map_arg.strip_prefix("builtin:") {
        Some(name) => name.to_string(),
        None => Path::new(map_arg)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| map_arg.to_string()),
    }
}

fn world_from(args: &WorldArgs) -> CliResult<WorldConfig> {
    let mut world = match &args.world_config {
        Some(path) => {
            WorldConfig::from_kv_text(&artifact::read_text(path)?).map_err(|e| artifact_err(path, e))?
        }
        None => WorldConfig::default(),
    };
    if let Some(t) = args.max_turns {
        world.max_turns = t;
    }
    world.validate().map_err(usage)?;
    Ok(world)
}

fn ea_from(args: &EaArgs) -> CliResult<EaConfig> {
    let mut ea = match &args.ea_config {
        Some(path) => {
            EaConfig::from_kv_text(&artifact::read_text(path)?).map_err(|e| artifact_err(path, e))?
        }
        None => EaConfig::default(),
    };
    if let Some(p) = args.popsize {
        ea.popsize = p;
    }
    if let Some(g) = args.generations {
        ea.max_generations = g;
    }
    if let Some(s) = args.ea_seed {
        ea.seed = s;
    }
    ea.validate().map_err(usage)?;
    Ok(ea)
}

fn persona_from(text: &str) -> CliResult<Persona> {
    text.parse().map_err(usage)
}

fn model_mode(cumulative: bool) -> ModelMode {
    if cumulative {
        ModelMode::Cumulative
    } else {
        ModelMode::PerGame
    }
}

fn write_file(path: &Path, text: &str) -> CliResult {
    artifact::write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

pub fn simulate(a: &SimulateArgs) -> CliResult {
    let map = load_map_arg(&a.map)?;
    let world = world_from(&a.world)?;
    let vp = match &a.vp_genome {
        Some(p) => artifact::load_genome(p)?,
        None => rbp_default(),
    };
    let policy = match &a.hp_genome {
        Some(p) => PersonaPolicy {
            matrix: artifact::load_genome(p)?,
            noise: 0.0,
        },
        None => persona_from(&a.persona)?.policy_for_game(a.game),
    };
    let game = play_persona_game(&vp, policy, &map, &world, a.seed, derive_seed(a.seed, 0x9e25, 0))
        .map_err(|e| CliError::Artifact(format!("{}: {e}", a.map)))?;
    if let Some(p) = &a.replay_out {
        artifact::save_replay(p, &game.replay)?;
    }
    if let Some(p) = &a.model_out {
        artifact::save_model(p, &game.model)?;
    }
    print_json(&json!({
        "outcome": game.outcome,
        "turns": game.replay.turns.len(),
        "observations": game.model.total_observations(),
        "replay_hash": game.replay.hash(),
    }));
    Ok(())
}

/// A player model file holds either counts or a plain genome.
fn load_player_model(path: &Path) -> CliResult<AnswerMatrix> {
    match artifact::load_model(path) {
        Ok(model) => Ok(model.extract_policy(&rbp_default())),
        Err(ArtifactError::VersionMismatch { .. }) => Ok(artifact::load_genome(path)?),
        Err(e) => Err(e.into()),
    }
}

pub fn evolve(a: &EvolveArgs) -> CliResult {
    let model = load_player_model(&a.model)?;
    let seed_vp = match &a.seed_genome {
        Some(p) => artifact::load_genome(p)?,
        None => rbp_default(),
    };
    let arena = Arena {
        map: load_map_arg(&a.map)?,
        world: world_from(&a.world)?,
    };
    let ea = ea_from(&a.ea)?;
    let mut log = String::new();
    let mut on_gen = |r: &GenerationRecord| {
        log.push_str(&serde_json::to_string(r).expect("serializable"));
        log.push('\n');
    };
    let result = evolve_with(
        &model,
        &seed_vp,
        &ea,
        &arena,
        EvolveHooks {
            on_generation: Some(&mut on_gen),
            cancel: None,
        },
    )
    .map_err(|e| CliError::Artifact(format!("{}: {e}", a.map)))?;
    if let Some(p) = &a.log {
        write_file(p, &log)?;
    }
    match &a.out {
        Some(p) => artifact::save_genome(p, &result.best.genome)?,
        None => println!("{}", result.best.genome.to_json()),
    }
    eprintln!(
        "best fitness {} after {} evaluations",
        result.best.fitness, result.evaluations
    );
    Ok(())
}

fn round_line(r: &RoundRecord) -> String {
    format!(
        "round {:>3}: {:?} ({:?}) in {} turns, best fitness {:.3}, {} evaluations",
        r.round,
        r.outcome.winner,
        r.outcome.reason,
        r.outcome.turns,
        r.best_fitness,
        r.evaluations
    )
}

pub fn pmea(a: &PmeaArgs) -> CliResult {
    let mut cfg = PmeaConfig::new(a.map.clone(), load_map_arg(&a.map)?);
    cfg.rounds = a.rounds;
    cfg.world = world_from(&a.world)?;
    cfg.ea = ea_from(&a.ea)?;
    cfg.model_mode = model_mode(a.cumulative);
    cfg.seed = a.seed;
    cfg.output_dir = Some(a.output_dir.clone());

    let mut opponent: Box<dyn OnlineOpponent> = if a.live {
        let hub = Arc::new(SessionHub::new());
        let (addr, _thread) = server::spawn(Arc::clone(&hub), a.bind)
            .map_err(|e| usage(format!("cannot bind {}: {e}", a.bind)))?;
        eprintln!("session server on http://{addr}");
        Box::new(LiveOpponent {
            hub,
            tick_rate: a.tick_rate,
            timeout: None::<Duration>,
            announce: Box::new(move |round, id| {
                eprintln!("round {round}: join session {id} at ws://{addr}/ws");
            }),
        })
    } else {
        let persona = persona_from(a.persona.as_deref().unwrap_or("rbp-mirror"))?;
        Box::new(PersonaOpponent::new(persona))
    };

    let mut on_round = |r: &RoundRecord| eprintln!("{}", round_line(r));
    let result = run_pmea_with(
        &cfg,
        opponent.as_mut(),
        PmeaHooks {
            on_round: Some(&mut on_round),
            ..PmeaHooks::default()
        },
    )?;
    if result.resumed_rounds > 0 {
        eprintln!("resumed after {} completed rounds", result.resumed_rounds);
    }
    println!("{}", result.final_vp.to_json());
    Ok(())
}

fn records_path(a: &ExperimentArgs) -> PathBuf {
    a.records_out.clone().unwrap_or_else(|| {
        let mut p = a.report_out.clone().into_os_string();
        p.push(".records.jsonl");
        PathBuf::from(p)
    })
}

pub fn experiment(a: &ExperimentArgs) -> CliResult {
    let mut maps = Vec::new();
    for map_arg in &a.maps {
        maps.push((map_label(map_arg), load_map_arg(map_arg)?));
    }
    let algorithms = a
        .algorithms
        .iter()
        .map(|s| s.parse::<Algorithm>().map_err(usage))
        .collect::<CliResult<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        maps,
        algorithms,
        games_per_cell: a.games,
        persona: persona_from(&a.persona)?,
        seed: a.seed,
        world: world_from(&a.world)?,
        ea: ea_from(&a.ea)?,
        model_mode: model_mode(a.cumulative),
        output_dir: a.output_dir.clone(),
    };
    let (report, records) = run_experiment(&cfg)?;
    write_file(&a.report_out, &report.to_csv())?;
    write_file(&records_path(a), &records_to_jsonl(&records))?;
    eprint!("{}", report.to_csv());

    if let Some(n) = a.adaptation_seeds {
        let seeds: Vec<u64> = (0..n).collect();
        let (summary, _) = adaptation_check(&cfg, &seeds)?;
        let value = json!({
            "persona": a.persona,
            "rounds": a.games,
            "passing_fraction": summary.passing_fraction(),
            "seeds": summary.seeds,
        });
        match &a.adaptation_out {
            Some(p) => write_file(p, &serde_json::to_string_pretty(&value).expect("serializable"))?,
            None => print_json(&value),
        }
    }
    Ok(())
}

pub fn stats(a: &StatsArgs) -> CliResult {
    let text = artifact::read_text(&a.records)?;
    let records = records_from_jsonl(&text).map_err(|(line, message)| {
        CliError::Artifact(format!("{}: line {line}: {message}", a.records.display()))
    })?;
    let report = ExperimentReport::from_records(&records);
    let out = if a.json { report.to_json() } else { report.to_csv() };
    match &a.report_out {
        Some(p) => write_file(p, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

pub fn serve(a: &ServeArgs) -> CliResult {
    server::serve_blocking(Arc::new(SessionHub::new()), a.bind)
        .map_err(|e| usage(format!("cannot serve on {}: {e}", a.bind)))
}
