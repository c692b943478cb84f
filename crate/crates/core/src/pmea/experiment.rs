//! Experiment grid: maps × {rule-based, PMEA} against a persona, with a
//! per-cell summary report recomputable from raw per-game records.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifact::ReportFormatError;
use super::persona::Persona;
use super::{play_persona_game, run_pmea, ModelMode, PersonaOpponent, PmeaConfig, PmeaError};
use crate::evolution::{derive_seed, EaConfig};
use crate::strategy::rbp_default;
use crate::world::{GameMap, OutcomeReason, Winner, WorldConfig};

pub const REPORT_FORMAT: &str = "experiment-report-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "RBP")]
    Rbp,
    #[serde(rename = "PMEA")]
    Pmea,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rbp => "RBP",
            Algorithm::Pmea => "PMEA",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Algorithm, String> {
        match s.to_ascii_uppercase().as_str() {
            "RBP" => Ok(Algorithm::Rbp),
            "PMEA" => Ok(Algorithm::Pmea),
            _ => Err(format!("unknown algorithm {s:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// `(name, map)` pairs, reported in this order.
    pub maps: Vec<(String, Arc<GameMap>)>,
    pub algorithms: Vec<Algorithm>,
    pub games_per_cell: u32,
    pub persona: Persona,
    pub seed: u64,
    pub world: WorldConfig,
    pub ea: EaConfig,
    pub model_mode: ModelMode,
    /// PMEA cells persist their rounds under `<dir>/<map>`.
    pub output_dir: Option<PathBuf>,
}

/// One on-line game of an experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub map: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub game: u32,
    pub winner: Winner,
    pub reason: OutcomeReason,
    pub deaths_hp: u32,
    pub deaths_vp: u32,
    pub movements: u64,
    pub turns: u32,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub map: String,
    pub algorithm: Algorithm,
    pub games: u32,
    pub vp_wins: u32,
    pub hp_wins: u32,
    pub draws: u32,
    pub mean_hp_deaths: f64,
    pub mean_vp_deaths: f64,
    pub mean_movements: f64,
    pub mean_wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    format: String,
    rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "map,algorithm,VP_win,HP_win,draws,HP_death,VP_death,mov,time";

impl ExperimentReport {
    /// Group records by (map, algorithm) in order of first appearance.
    pub fn from_records(records: &[GameRecord]) -> ExperimentReport {
        let mut rows: Vec<ReportRow> = Vec::new();
        let mut sums: Vec<[f64; 4]> = Vec::new();
        for r in records {
            let i = match rows
                .iter()
                .position(|row| row.map == r.map && row.algorithm == r.algorithm)
            {
                Some(i) => i,
                None => {
                    rows.push(ReportRow {
                        map: r.map.clone(),
                        algorithm: r.algorithm,
                        games: 0,
                        vp_wins: 0,
                        hp_wins: 0,
                        draws: 0,
                        mean_hp_deaths: 0.0,
                        mean_vp_deaths: 0.0,
                        mean_movements: 0.0,
                        mean_wall_time_s: 0.0,
                    });
                    sums.push([0.0; 4]);
                    rows.len() - 1
                }
            };
            let row = &mut rows[i];
            row.games += 1;
            match r.winner {
                Winner::Vp => row.vp_wins += 1,
                Winner::Hp => row.hp_wins += 1,
                Winner::Draw => row.draws += 1,
            }
            let s = &mut sums[i];
            s[0] += r.deaths_hp as f64;
            s[1] += r.deaths_vp as f64;
            s[2] += r.movements as f64;
            s[3] += r.wall_time_s;
        }
        for (row, s) in rows.iter_mut().zip(sums) {
            let n = row.games as f64;
            row.mean_hp_deaths = s[0] / n;
            row.mean_vp_deaths = s[1] / n;
            row.mean_movements = s[2] / n;
            row.mean_wall_time_s = s[3] / n;
        }
        ExperimentReport { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.map,
                r.algorithm.name(),
                r.vp_wins,
                r.hp_wins,
                r.draws,
                r.mean_hp_deaths,
                r.mean_vp_deaths,
                r.mean_movements,
                r.mean_wall_time_s
            )
            .expect("writing to a string");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ReportFile {
            format: REPORT_FORMAT.into(),
            rows: self.rows.clone(),
        })
        .expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<ExperimentReport, ReportFormatError> {
        let f: ReportFile =
            serde_json::from_str(text).map_err(|e| ReportFormatError::Malformed(e.to_string()))?;
        if f.format != REPORT_FORMAT {
            return Err(ReportFormatError::Version(f.format));
        }
        Ok(ExperimentReport { rows: f.rows })
    }
}

pub fn records_to_jsonl(records: &[GameRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Parse raw records; errors carry the 1-based line number.
pub fn records_from_jsonl(text: &str) -> Result<Vec<GameRecord>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e.to_string())))
        .collect()
}

enum Cell {
    Rbp { map: usize, game: u32 },
    Pmea { map: usize },
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
) -> Result<(ExperimentReport, Vec<GameRecord>), PmeaError> {
    if cfg.games_per_cell == 0 {
        return Err(PmeaError::Config("games_per_cell must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for (mi, _) in cfg.maps.iter().enumerate() {
        for alg in &cfg.algorithms {
            match alg {
                Algorithm::Rbp => {
                    cells.extend((1..=cfg.games_per_cell).map(|game| Cell::Rbp { map: mi, game }))
                }
                Algorithm::Pmea => cells.push(Cell::Pmea { map: mi }),
            }
        }
    }
    let per_cell: Vec<Vec<GameRecord>> = cells
        .par_iter()
        .map(|cell| run_cell(cfg, cell))
        .collect::<Result<_, _>>()?;
    let records: Vec<GameRecord> = per_cell.into_iter().flatten().collect();
    Ok((ExperimentReport::from_records(&records), records))
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<Vec<GameRecord>, PmeaError> {
    match *cell {
        Cell::Rbp { map, game } => {
            let (name, m) = &cfg.maps[map];
            let seed = derive_seed(cfg.seed, game as u64, 1);
            let g = play_persona_game(
                &rbp_default(),
                cfg.persona.policy_for_game(game),
                m,
                &cfg.world,
                seed,
                derive_seed(seed, 0x9e25, 0),
            )?;
            let o = g.outcome;
            Ok(vec![GameRecord {
                map: name.clone(),
                algorithm: Algorithm::Rbp,
                seed: cfg.seed,
                game,
                winner: o.winner,
                reason: o.reason,
                deaths_hp: o.deaths_hp,
                deaths_vp: o.deaths_vp,
                movements: o.movements,
                turns: o.turns,
                wall_time_s: g.wall_time_s,
            }])
        }
        Cell::Pmea { map } => {
            let (name, m) = &cfg.maps[map];
            let mut pcfg = PmeaConfig::new(name.clone(), Arc::clone(m));
            pcfg.rounds = cfg.games_per_cell;
            pcfg.world = cfg.world.clone();
            pcfg.ea = cfg.ea.clone();
            pcfg.model_mode = cfg.model_mode;
            pcfg.seed = cfg.seed;
            pcfg.output_dir = cfg.output_dir.as_ref().map(|d| d.join(name));
            let result = run_pmea(&pcfg, &mut PersonaOpponent::new(cfg.persona.clone()))?;
            Ok(result
                .rounds
                .iter()
                .map(|r| GameRecord {
                    map: name.clone(),
                    algorithm: Algorithm::Pmea,
                    seed: cfg.seed,
                    game: r.round,
                    winner: r.outcome.winner,
                    reason: r.outcome.reason,
                    deaths_hp: r.outcome.deaths_hp,
                    deaths_vp: r.outcome.deaths_vp,
                    movements: r.outcome.movements,
                    turns: r.outcome.turns,
                    wall_time_s: r.online_wall_time_s,
                })
                .collect())
        }
    }
}

/// Per master seed: virtual-player wins in the first and second half of the
/// PMEA rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationSeed {
    pub seed: u64,
    pub first_half_wins: u32,
    pub second_half_wins: u32,
}

impl AdaptationSeed {
    pub fn holds(&self) -> bool {
        self.second_half_wins >= self.first_half_wins
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationSummary {
    pub seeds: Vec<AdaptationSeed>,
}

impl AdaptationSummary {
    pub fn passing_fraction(&self) -> f64 {
        if self.seeds.is_empty() {
            return 0.0;
        }
        self.seeds.iter().filter(|s| s.holds()).count() as f64 / self.seeds.len() as f64
    }
}

/// Split each seed's PMEA records (any map) into halves by game number and
/// count virtual-player wins in each.
pub fn adaptation_from_records(records: &[GameRecord], rounds: u32) -> AdaptationSummary {
    let mut seeds: Vec<AdaptationSeed> = Vec::new();
    for r in records.iter().filter(|r| r.algorithm == Algorithm::Pmea) {
        let entry = match seeds.iter().position(|s| s.seed == r.seed) {
            Some(i) => &mut seeds[i],
            None => {
                seeds.push(AdaptationSeed {
                    seed: r.seed,
                    first_half_wins: 0,
                    second_half_wins: 0,
                });
                seeds.last_mut().expect("just pushed")
            }
        };
        if r.winner == Winner::Vp {
            if r.game <= rounds / 2 {
                entry.first_half_wins += 1;
            } else {
                entry.second_half_wins += 1;
            }
        }
    }
    AdaptationSummary { seeds }
}

/// Run the PMEA cell of every map for each master seed and summarise the
/// first-half / second-half win split.
pub fn adaptation_check(
    base: &ExperimentConfig,
    master_seeds: &[u64],
) -> Result<(AdaptationSummary, Vec<GameRecord>), PmeaError> {
    let runs: Vec<Vec<GameRecord>> = master_seeds
        .par_iter()
        .map(|&seed| {
            let cfg = ExperimentConfig {
                algorithms: vec![Algorithm::Pmea],
                seed,
                output_dir: None,
                ..base.clone()
            };
            run_experiment(&cfg).map(|(_, records)| records)
        })
        .collect::<Result<_, _>>()?;
    let records: Vec<GameRecord> = runs.into_iter().flatten().collect();
    Ok((
        adaptation_from_records(&records, base.games_per_cell),
        records,
    ))
}
