//! Off-line evolution of a virtual player against a player model.
//!
//! A steady-state EA over answer matrices: roulette-wheel parent selection,
//! one-point crossover, per-gene mutation, and (popsize + 2) truncation
//! replacement. Fitness comes from a headless game between the candidate
//! (virtual army) and the player model (human-proxy army).

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kv::KvDoc;
use crate::strategy::{Action, AnswerMatrix, NUM_STATES};
use crate::world::{
    spawn_game, Army, ConfigError, GameMap, GameState, Order, SpawnError, Winner, WorldConfig,
};

/// Which armies' moves make up the movement count of the fitness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MovementCount {
    Both,
    VpOnly,
}

impl std::str::FromStr for MovementCount {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "both" => Ok(MovementCount::Both),
            "vp" | "vp_only" => Ok(MovementCount::VpOnly),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EaConfig {
    pub popsize: usize,
    pub p_x: f64,
    pub p_m: f64,
    pub max_generations: u32,
    pub evaluations_per_individual: u32,
    pub seed: u64,
    pub movement_count: MovementCount,
}

impl Default for EaConfig {
    fn default() -> Self {
        EaConfig {
            popsize: 50,
            p_x: 0.7,
            p_m: 0.01,
            max_generations: 125,
            evaluations_per_individual: 1,
            seed: 0,
            movement_count: MovementCount::Both,
        }
    }
}

impl EaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.popsize < 2 {
            return Err(ConfigError::OutOfRange("popsize"));
        }
        if !(0.0..=1.0).contains(&self.p_x) {
            return Err(ConfigError::OutOfRange("p_x"));
        }
        if !(0.0..=1.0).contains(&self.p_m) {
            return Err(ConfigError::OutOfRange("p_m"));
        }
        if self.evaluations_per_individual == 0 {
            return Err(ConfigError::NotPositive("evaluations_per_individual"));
        }
        Ok(())
    }

    pub fn from_kv_text(text: &str) -> Result<EaConfig, ConfigError> {
        let mut doc = KvDoc::parse(text)?;
        let mut c = EaConfig::default();
        doc.take_into("popsize", &mut c.popsize)?;
        doc.take_into("p_x", &mut c.p_x)?;
        doc.take_into("p_m", &mut c.p_m)?;
        doc.take_into("max_generations", &mut c.max_generations)?;
        doc.take_into("evaluations_per_individual", &mut c.evaluations_per_individual)?;
        doc.take_into("seed", &mut c.seed)?;
        doc.take_into("movement_count", &mut c.movement_count)?;
        doc.finish()?;
        c.validate()?;
        Ok(c)
    }

    /// Game simulations one `evolve` call performs.
    pub fn evaluation_budget(&self) -> u64 {
        (self.popsize as u64 + 2 * self.max_generations as u64)
            * self.evaluations_per_individual as u64
    }
}

/// Telemetry of one off-line game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimStats {
    /// Deaths in the player-model army.
    pub a_deaths_model_army: u32,
    /// Deaths in the virtual army.
    pub b_deaths_vp_army: u32,
    pub c_movements: u64,
    /// 1 if the virtual army won, 2 otherwise.
    pub d_victory_degree: u8,
}

/// `10000·(A − B) / (C·D)`, with C clamped to at least 1.
pub fn fitness(stats: &SimStats) -> f64 {
    let a = stats.a_deaths_model_army as f64;
    let b = stats.b_deaths_vp_army as f64;
    let c = stats.c_movements.max(1) as f64;
    let d = stats.d_victory_degree as f64;
    10000.0 * (a - b) / (c * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedIndividual {
    pub genome: AnswerMatrix,
    pub fitness: f64,
    pub eval_seed: u64,
}

/// Mix three values into a seed (SplitMix64 finalizer over a running hash).
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(base) ^ a) ^ b)
}

/// Build the human-army orders for this turn from a matrix: one group order
/// per action, each unit deciding from its own perception.
pub fn matrix_orders(state: &GameState, army: Army, matrix: &AnswerMatrix) -> Vec<Order> {
    let mut groups: [Vec<u32>; 6] = Default::default();
    for u in state.living(army) {
        let a = matrix.action(&state.perceive(u.id));
        groups[a.slot()].push(u.id);
    }
    groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(i, g)| Order::new(g, Action::ALL[i]))
        .collect()
}

/// Run one headless game: `model` drives the human-proxy army, `candidate`
/// the virtual army.
pub fn play_game_off(
    model: &AnswerMatrix,
    candidate: &AnswerMatrix,
    map: &Arc<GameMap>,
    world: &WorldConfig,
    seed: u64,
    movement_count: MovementCount,
) -> Result<SimStats, SpawnError> {
    let mut state = spawn_game(Arc::clone(map), world.clone(), seed)?;
    state.set_event_recording(false);
    let mut vp = *candidate;
    let outcome = loop {
        if let Some(o) = state.game_outcome() {
            break o;
        }
        let orders = matrix_orders(&state, Army::Hp, model);
        state
            .step_turn(&orders, &mut vp)
            .expect("game is not finished");
    };
    let movements = match movement_count {
        MovementCount::Both => outcome.movements,
        MovementCount::VpOnly => state.movements(Army::Vp),
    };
    Ok(SimStats {
        a_deaths_model_army: outcome.deaths_hp,
        b_deaths_vp_army: outcome.deaths_vp,
        c_movements: movements,
        d_victory_degree: if outcome.winner == Winner::Vp { 1 } else { 2 },
    })
}

/// Roulette wheel over min-shifted fitness: `w_i = (f_i − f_min) + ε` with
/// `ε = 0.001·(f_max − f_min + 1)`. Returns an index into `population`.
pub fn select_roulette<R: Rng + ?Sized>(population: &[EvaluatedIndividual], rng: &mut R) -> usize {
    assert!(!population.is_empty(), "cannot select from an empty population");
    let weights = roulette_weights(population.iter().map(|i| i.fitness));
    WeightedIndex::new(&weights)
        .expect("weights are positive")
        .sample(rng)
}

pub fn roulette_weights(fitness: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let min = fitness.clone().fold(f64::INFINITY, f64::min);
    let max = fitness.clone().fold(f64::NEG_INFINITY, f64::max);
    let eps = 0.001 * (max - min + 1.0);
    fitness.map(|f| (f - min) + eps).collect()
}

/// One-point crossover at a uniform cut in `1..=23`.
pub fn recombine<R: Rng + ?Sized>(
    p1: &AnswerMatrix,
    p2: &AnswerMatrix,
    rng: &mut R,
) -> (AnswerMatrix, AnswerMatrix) {
    let cut = rng.gen_range(1..NUM_STATES);
    crossover_at(p1, p2, cut)
}

/// `child1 = p1[..cut] + p2[cut..]`, `child2` the complement.
pub fn crossover_at(p1: &AnswerMatrix, p2: &AnswerMatrix, cut: usize) -> (AnswerMatrix, AnswerMatrix) {
    let mut c1 = *p1;
    let mut c2 = *p2;
    c1.cells_mut()[cut..].copy_from_slice(&p2.cells()[cut..]);
    c2.cells_mut()[cut..].copy_from_slice(&p1.cells()[cut..]);
    (c1, c2)
}

/// Each gene independently, with probability `p_m`, becomes one of the
/// other five actions.
pub fn mutate<R: Rng + ?Sized>(genome: &AnswerMatrix, p_m: f64, rng: &mut R) -> AnswerMatrix {
    let mut out = *genome;
    for cell in out.cells_mut().iter_mut() {
        if rng.gen::<f64>() < p_m {
            let k = rng.gen_range(0..5);
            let others = Action::ALL.iter().filter(|a| **a != *cell);
            *cell = *others.clone().nth(k).expect("five alternatives");
        }
    }
    out
}

pub fn random_genome<R: Rng + ?Sized>(rng: &mut R) -> AnswerMatrix {
    let mut cells = [Action::NoOperation; NUM_STATES];
    for c in cells.iter_mut() {
        *c = Action::ALL[rng.gen_range(0..Action::ALL.len())];
    }
    AnswerMatrix::new(cells)
}

/// Summary of one generation, written as a JSONL run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub gen: u32,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_genome: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub best: EvaluatedIndividual,
    pub population: Vec<EvaluatedIndividual>,
    /// Generation 0 is the evaluated initial population.
    pub history: Vec<GenerationRecord>,
    pub evaluations: u64,
    pub interrupted: bool,
}

/// Everything an `evolve` call needs besides the two matrices.
#[derive(Clone)]
pub struct Arena {
    pub map: Arc<GameMap>,
    pub world: WorldConfig,
}

#[derive(Default)]
pub struct EvolveHooks<'a> {
    pub on_generation: Option<&'a mut dyn FnMut(&GenerationRecord)>,
    /// Checked once per generation; when set, the best individual so far is
    /// returned.
    pub cancel: Option<&'a AtomicBool>,
}

pub fn evolve(
    player_model: &AnswerMatrix,
    vp: &AnswerMatrix,
    cfg: &EaConfig,
    arena: &Arena,
) -> Result<EvolveResult, SpawnError> {
    evolve_with(player_model, vp, cfg, arena, EvolveHooks::default())
}

pub fn evolve_with(
    player_model: &AnswerMatrix,
    vp: &AnswerMatrix,
    cfg: &EaConfig,
    arena: &Arena,
    mut hooks: EvolveHooks<'_>,
) -> Result<EvolveResult, SpawnError> {
    cfg.validate()
        .map_err(|e| SpawnError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::MAX, 0));
    let evaluations = AtomicU64::new(0);
    let evaluate = |genome: AnswerMatrix, seed: u64| -> Result<EvaluatedIndividual, SpawnError> {
        let n = cfg.evaluations_per_individual;
        let mut total = 0.0;
        for k in 0..n {
            let game_seed = if n == 1 { seed } else { derive_seed(seed, k as u64, 7) };
            let stats = play_game_off(
                player_model,
                &genome,
                &arena.map,
                &arena.world,
                game_seed,
                cfg.movement_count,
            )?;
            evaluations.fetch_add(1, Ordering::Relaxed);
            total += fitness(&stats);
        }
        Ok(EvaluatedIndividual {
            genome,
            fitness: total / n as f64,
            eval_seed: seed,
        })
    };

    let mut genomes: Vec<AnswerMatrix> = (0..cfg.popsize - 1)
        .map(|_| random_genome(&mut rng))
        .collect();
    genomes.push(*vp);
    let mut population = {
        use rayon::prelude::*;
        genomes
            .into_par_iter()
            .enumerate()
            .map(|(i, g)| evaluate(g, derive_seed(cfg.seed, 0, i as u64)))
            .collect::<Result<Vec<_>, _>>()?
    };

    let mut history = Vec::with_capacity(cfg.max_generations as usize + 1);
    let mut record = |gen: u32, pop: &[EvaluatedIndividual], hooks: &mut EvolveHooks<'_>| {
        let best = pop
            .iter()
            .max_by(|a, b| a.fitness.total_cmp(&b.fitness))
            .expect("non-empty");
        let r = GenerationRecord {
            gen,
            best_fitness: best.fitness,
            mean_fitness: pop.iter().map(|i| i.fitness).sum::<f64>() / pop.len() as f64,
            best_genome: best.genome.to_numbers(),
        };
        if let Some(cb) = hooks.on_generation.as_mut() {
            cb(&r);
        }
        history.push(r);
    };
    record(0, &population, &mut hooks);

    let mut interrupted = false;
    for gen in 1..=cfg.max_generations {
        if hooks.cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            interrupted = true;
            break;
        }
        rank(&mut population);
        let p1 = population[select_roulette(&population, &mut rng)].genome;
        let p2 = population[select_roulette(&population, &mut rng)].genome;
        let (c1, c2) = if rng.gen::<f64>() < cfg.p_x {
            recombine(&p1, &p2, &mut rng)
        } else {
            (p1, p2)
        };
        let c1 = mutate(&c1, cfg.p_m, &mut rng);
        let c2 = mutate(&c2, cfg.p_m, &mut rng);
        let (e1, e2) = rayon::join(
            || evaluate(c1, derive_seed(cfg.seed, gen as u64, 0)),
            || evaluate(c2, derive_seed(cfg.seed, gen as u64, 1)),
        );
        population.push(e1?);
        population.push(e2?);
        rank(&mut population);
        population.truncate(cfg.popsize);
        record(gen, &population, &mut hooks);
    }

    let top = population
        .iter()
        .map(|i| i.fitness)
        .fold(f64::NEG_INFINITY, f64::max);
    let best_ones: Vec<&EvaluatedIndividual> =
        population.iter().filter(|i| i.fitness == top).collect();
    let best = *best_ones[rng.gen_range(0..best_ones.len())];
    Ok(EvolveResult {
        best,
        population,
        history,
        evaluations: evaluations.load(Ordering::Relaxed),
        interrupted,
    })
}

/// Stable sort by descending fitness.
fn rank(pop: &mut [EvaluatedIndividual]) {
    pop.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::rbp_default;
    use crate::world::load_map;
    use proptest::prelude::*;

    fn individual(f: f64) -> EvaluatedIndividual {
        EvaluatedIndividual {
            genome: rbp_default(),
            fitness: f,
            eval_seed: 0,
        }
    }

    #[test]
    fn fitness_examples() {
        let s = |a, b, c, d| SimStats {
            a_deaths_model_army: a,
            b_deaths_vp_army: b,
            c_movements: c,
            d_victory_degree: d,
        };
        assert_eq!(fitness(&s(10, 2, 4000, 1)), 20.0);
        assert_eq!(fitness(&s(5, 5, 123, 2)), 0.0);
        assert_eq!(fitness(&s(2, 10, 1000, 2)), -40.0);
        assert_eq!(fitness(&s(1, 0, 0, 1)), 10000.0);
    }

    #[test]
    fn roulette_uniform_when_equal() {
        let pop = vec![individual(0.0); 3];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hits = [0u32; 3];
        for _ in 0..10_000 {
            hits[select_roulette(&pop, &mut rng)] += 1;
        }
        for h in hits {
            let f = h as f64 / 10_000.0;
            assert!((f - 1.0 / 3.0).abs() < 0.02, "{f}");
        }
    }

    #[test]
    fn roulette_shifted_weights() {
        // weights by the rule: eps = 0.001 * 61 = 0.061 → [0.061, 60.061]
        let w = roulette_weights([-40.0, 20.0].into_iter());
        assert!((w[0] - 0.061).abs() < 1e-12);
        assert!((w[1] - 60.061).abs() < 1e-12);
        let expected = w[1] / (w[0] + w[1]);
        let pop = vec![individual(-40.0), individual(20.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let second = (0..10_000)
            .filter(|_| select_roulette(&pop, &mut rng) == 1)
            .count() as f64
            / 10_000.0;
        assert!((second - expected).abs() < 0.005, "{second} vs {expected}");
        assert!(second > 0.99);

        let neg = vec![individual(-10.0), individual(-5.0)];
        let picks = (0..1000)
            .filter(|_| select_roulette(&neg, &mut rng) == 1)
            .count();
        assert!(picks > 900);
    }

    #[test]
    fn crossover_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = rbp_default();
        assert_eq!(recombine(&p, &p, &mut rng), (p, p));

        let a = AnswerMatrix::constant(Action::Explore);
        let b = AnswerMatrix::constant(Action::ProtectFlag);
        let (c1, c2) = crossover_at(&a, &b, 1);
        let diff = c1
            .cells()
            .iter()
            .zip(b.cells())
            .filter(|(x, y)| x != y)
            .count();
        assert!(diff <= 1);
        assert_eq!(c1.cells()[0], Action::Explore);
        assert_eq!(c2.cells()[0], Action::ProtectFlag);
    }

    #[test]
    fn mutation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = rbp_default();
        assert_eq!(mutate(&g, 0.0, &mut rng), g);
        let all = mutate(&g, 1.0, &mut rng);
        assert!(all.cells().iter().zip(g.cells()).all(|(a, b)| a != b));

        // Monte-Carlo against the binomial mean 24 * 0.01
        let n = 10_000;
        let changed: usize = (0..n)
            .map(|_| {
                let m = mutate(&g, 0.01, &mut rng);
                m.cells().iter().zip(g.cells()).filter(|(a, b)| a != b).count()
            })
            .sum();
        let mean = changed as f64 / n as f64;
        assert!((mean - 0.24).abs() < 0.02, "{mean}");
    }

    proptest! {
        #[test]
        fn crossover_conserves_genes(seed in any::<u64>(), cut in 1usize..24) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_genome(&mut rng);
            let b = random_genome(&mut rng);
            let (c1, c2) = crossover_at(&a, &b, cut);
            for i in 0..24 {
                let mut parents = [a.cells()[i], b.cells()[i]];
                let mut kids = [c1.cells()[i], c2.cells()[i]];
                parents.sort();
                kids.sort();
                prop_assert_eq!(parents, kids);
            }
        }

        #[test]
        fn operators_stay_in_genome_space(seed in any::<u64>(), pm in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_genome(&mut rng);
            let b = random_genome(&mut rng);
            let (c1, c2) = recombine(&a, &b, &mut rng);
            for g in [c1, c2, mutate(&a, pm, &mut rng)] {
                let raw: Vec<i64> = g.to_numbers().iter().map(|&v| v as i64).collect();
                prop_assert!(crate::strategy::validate_matrix(&raw).is_ok());
            }
        }
    }

    fn arena() -> Arena {
        Arena {
            map: Arc::new(load_map(include_str!("../maps/arena20.map")).unwrap()),
            world: WorldConfig {
                max_turns: 600,
                ..WorldConfig::default()
            },
        }
    }

    #[test]
    fn offline_game_is_deterministic() {
        let a = arena();
        let s1 = play_game_off(&rbp_default(), &rbp_default(), &a.map, &a.world, 5, MovementCount::Both)
            .unwrap();
        let s2 = play_game_off(&rbp_default(), &rbp_default(), &a.map, &a.world, 5, MovementCount::Both)
            .unwrap();
        assert_eq!(s1, s2);
        assert!(s1.c_movements > 0);
    }

    #[test]
    fn small_evolve_is_elitist_and_counts_evaluations() {
        let a = arena();
        let cfg = EaConfig {
            popsize: 6,
            max_generations: 8,
            seed: 11,
            ..EaConfig::default()
        };
        let r = evolve(&rbp_default(), &rbp_default(), &cfg, &a).unwrap();
        assert_eq!(r.evaluations, 6 + 2 * 8);
        assert_eq!(r.history.len(), 9);
        for w in r.history.windows(2) {
            assert!(w[1].best_fitness >= w[0].best_fitness);
        }
        assert_eq!(r.population.len(), 6);
        let again = evolve(&rbp_default(), &rbp_default(), &cfg, &a).unwrap();
        assert_eq!(again.best.genome, r.best.genome);
    }

    #[test]
    fn cancel_returns_best_so_far() {
        let a = arena();
        let cfg = EaConfig {
            popsize: 4,
            max_generations: 50,
            ..EaConfig::default()
        };
        let stop = AtomicBool::new(false);
        let mut seen = 0;
        let mut cb = |r: &GenerationRecord| {
            seen += 1;
            if r.gen == 2 {
                stop.store(true, Ordering::Relaxed);
            }
        };
        let r = evolve_with(
            &rbp_default(),
            &rbp_default(),
            &cfg,
            &a,
            EvolveHooks {
                on_generation: Some(&mut cb),
                cancel: Some(&stop),
            },
        )
        .unwrap();
        assert!(r.interrupted);
        assert_eq!(r.evaluations, 4 + 2 * 2);
        assert_eq!(seen, 3);
    }
}
