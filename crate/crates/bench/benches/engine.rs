use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use wrts_core::evolution::{evolve, matrix_orders, play_game_off, Arena, MovementCount};
use wrts_core::fixtures::builtin;
use wrts_core::pmea::persona::aggressor_matrix;
use wrts_core::strategy::rbp_default;
use wrts_core::world::spawn_game;
use wrts_core::{Army, EaConfig, WorldConfig};

fn world() -> WorldConfig {
    WorldConfig {
        max_turns: 1500,
        ..WorldConfig::default()
    }
}

fn step_turn(c: &mut Criterion) {
    let map = Arc::new(builtin("field50x50"));
    let rbp = rbp_default();
    let mut fresh = spawn_game(Arc::clone(&map), world(), 1).unwrap();
    // a mid-game position
    let mut vp = rbp;
    for _ in 0..40 {
        let orders = matrix_orders(&fresh, Army::Hp, &rbp);
        fresh.step_turn(&orders, &mut vp).unwrap();
    }
    c.bench_function("step_turn/field50x50", |b| {
        b.iter_batched(
            || fresh.clone(),
            |mut s| {
                let orders = matrix_orders(&s, Army::Hp, &rbp);
                let mut vp = rbp;
                black_box(s.step_turn(&orders, &mut vp).unwrap());
            },
            BatchSize::SmallInput,
        )
    });
}

fn steer(c: &mut Criterion) {
    let map = Arc::new(builtin("wall21"));
    let state = spawn_game(Arc::clone(&map), world(), 0).unwrap();
    let target = map.flag(Army::Hp);
    let moves: Vec<_> = state.living(Army::Vp).map(|u| (u.id, target)).collect();
    c.bench_function("steer_units/wall21", |b| {
        b.iter_batched(
            || state.clone(),
            |mut s| black_box(s.steer_units(&moves).unwrap()),
            BatchSize::SmallInput,
        )
    });
}

fn game_off(c: &mut Criterion) {
    let mut group = c.benchmark_group("play_game_off");
    group.sample_size(20);
    for name in ["arena20", "small25a", "field50x50"] {
        let map = Arc::new(builtin(name));
        let w = world();
        group.bench_function(name, |b| {
            let mut seed = 0;
            b.iter(|| {
                seed += 1;
                black_box(
                    play_game_off(&aggressor_matrix(), &rbp_default(), &map, &w, seed, MovementCount::Both)
                        .unwrap(),
                )
            })
        });
    }
    group.finish();
}

fn small_evolve(c: &mut Criterion) {
    let arena = Arena {
        map: Arc::new(builtin("arena20")),
        world: world(),
    };
    let cfg = EaConfig {
        popsize: 10,
        max_generations: 10,
        ..EaConfig::default()
    };
    let mut group = c.benchmark_group("evolve");
    group.sample_size(10);
    group.bench_function("arena20/pop10x10", |b| {
        b.iter(|| black_box(evolve(&aggressor_matrix(), &rbp_default(), &cfg, &arena).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, step_turn, steer, game_off, small_evolve);
criterion_main!(benches);
