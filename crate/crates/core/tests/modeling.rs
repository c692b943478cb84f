use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wrts_core::fixtures::builtin;
use wrts_core::pmea::{play_persona_game, Persona, PersonaPlayer};
use wrts_core::strategy::{decode_state, rbp_default, state_index};
use wrts_core::world::{spawn_game, Event, ObjectiveSense, Replay};
use wrts_core::{Action, AnswerMatrix, Army, ExtendedAnswerMatrix, Pos, StateIndex, WorldConfig};

/// Independent count oracle: tally (state, action) pairs of human orders.
fn tally(replay: &Replay) -> [[u64; 6]; 24] {
    let mut c = [[0u64; 6]; 24];
    for t in &replay.turns {
        for e in &t.events {
            if let Event::Order {
                army: Army::Hp,
                state,
                action,
                ..
            } = e
            {
                c[*state][action.number() as usize - 1] += 1;
            }
        }
    }
    c
}

#[test]
fn encoding_is_a_bijection() {
    let mut seen = BTreeSet::new();
    for h in 0..3 {
        for s in 0..2 {
            for u in 0..2 {
                for o in 0..2 {
                    let expected = h * 8 + s * 4 + u * 2 + o;
                    let p = decode_state(expected).unwrap();
                    assert_eq!(state_index(&p).value(), expected);
                    assert_eq!(p.health as usize, h);
                    assert_eq!(
                        (p.advantage as usize, p.under_attack as usize, p.objective_visible as usize),
                        (s, u, o)
                    );
                    seen.insert(expected);
                }
            }
        }
    }
    assert_eq!(seen.len(), 24);
    assert!(decode_state(24).is_err());
}

#[test]
fn replay_counts_match_recorder() {
    let map = Arc::new(builtin("small25b"));
    for seed in 0..4 {
        let g = play_persona_game(
            &rbp_default(),
            Persona::Random(0.4).policy_for_game(1),
            &map,
            &WorldConfig::default(),
            seed,
            seed + 100,
        )
        .unwrap();
        assert_eq!(g.model.counts(), &tally(&g.replay));
        assert_eq!(ExtendedAnswerMatrix::from_replay(&g.replay), g.model);
    }
}

/// A fixed-matrix persona plays one game while health levels are shuffled
/// every few turns to force many distinct states; the extracted policy must
/// equal the persona's matrix on every visited state.
#[test]
fn fixed_persona_is_recovered_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cells = [Action::Explore; 24];
    for c in cells.iter_mut() {
        *c = Action::ALL[rng.gen_range(0..6)];
    }
    let target = AnswerMatrix::new(cells);
    let persona = Persona::Fixed(target);

    // per-unit flag sight lets O_v switch off again after discovery
    let cfg = WorldConfig {
        max_turns: 1000,
        objective_sense: ObjectiveSense::UnitVisibility,
        ..WorldConfig::default()
    };
    let mut state = spawn_game(Arc::new(builtin("arena20")), cfg, 12).unwrap();
    let mut player = PersonaPlayer::new(persona.policy_for_game(1), 0);
    let mut vp = AnswerMatrix::constant(Action::NoOperation);
    let mut replay = Replay::default();
    let mut visited = BTreeSet::new();
    while state.game_outcome().is_none() {
        if state.turn() % 5 == 0 {
            let ids: Vec<u32> = state.living(Army::Hp).map(|u| u.id).collect();
            let rivals: Vec<Pos> = state.living(Army::Vp).map(|u| u.pos).collect();
            for id in ids {
                let h = [10, 50, 90][rng.gen_range(0..3)];
                state.set_vitals(id, h, 1000).unwrap();
                // drop some units next to a rival, others anywhere
                let anchor = if rng.gen_bool(0.5) && !rivals.is_empty() {
                    rivals[rng.gen_range(0..rivals.len())]
                } else {
                    Pos::new(rng.gen_range(0..20), rng.gen_range(0..20))
                };
                let spot = Pos::new(anchor.x + rng.gen_range(-1..=1), anchor.y + rng.gen_range(-1..=1));
                if state.terrain().in_bounds(spot)
                    && state.terrain().walkable(spot)
                    && state.occupant(spot).is_none()
                    && spot.chebyshev(state.flag(Army::Vp)) > 2
                {
                    state.place_unit(id, spot).unwrap();
                }
            }
        }
        // keep the game going: nobody may capture the passive army's flag
        let near_flag: Vec<u32> = state
            .living(Army::Hp)
            .filter(|u| u.pos.chebyshev(state.flag(Army::Vp)) <= 2)
            .map(|u| u.id)
            .collect();
        for id in near_flag {
            loop {
                let spot = Pos::new(rng.gen_range(10..20), rng.gen_range(10..20));
                if state.terrain().walkable(spot) && state.occupant(spot).is_none() {
                    state.place_unit(id, spot).unwrap();
                    break;
                }
            }
        }
        for u in state.living(Army::Hp) {
            visited.insert(state.perceive(u.id).index().value());
        }
        let orders = player.orders(&state);
        replay.push(state.step_turn(&orders, &mut vp).unwrap());
    }
    let model = ExtendedAnswerMatrix::from_replay(&replay);
    let extracted = model.extract_policy(&rbp_default());
    let observed: BTreeSet<usize> = model.observed_states().map(StateIndex::value).collect();
    assert_eq!(observed, visited);
    eprintln!("visited {} states in {} turns", observed.len(), state.turn());
    assert!(observed.len() >= 16, "only {} states visited", observed.len());
    for i in &observed {
        assert_eq!(extracted.cells()[*i], target.cells()[*i], "state {i}");
    }
}
