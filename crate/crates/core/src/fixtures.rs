//! Maps shipped with the crate, addressable by name.

use crate::world::{load_map, GameMap, MapError};

macro_rules! maps {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../maps/", $name, ".map")))),*]
    };
}

/// `(name, text)` of every shipped map.
pub const BUILTIN_MAPS: &[(&str, &str)] = maps![
    "field50x50",
    "field54x46",
    "field50x28",
    "arena20",
    "small25a",
    "small25b",
    "small25c",
    "mirror16",
    "capture7",
    "concave9",
    "concave15",
    "convex15",
    "wall21",
    "bridges",
    "sealed9",
];

/// The three full-size experiment maps.
pub const EXPERIMENT_MAPS: [&str; 3] = ["field50x50", "field54x46", "field50x28"];
/// Reduced 25x25 counterparts of [`EXPERIMENT_MAPS`].
pub const SMALL_EXPERIMENT_MAPS: [&str; 3] = ["small25a", "small25b", "small25c"];
/// Navigation fixtures: the single VP unit must reach the HP flag.
pub const NAVIGATION_MAPS: [&str; 6] =
    ["concave9", "concave15", "convex15", "wall21", "bridges", "sealed9"];

pub fn builtin_text(name: &str) -> Option<&'static str> {
    let name = name.strip_prefix("builtin:").unwrap_or(name);
    BUILTIN_MAPS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Parse a shipped map. Panics on unknown names; shipped maps always parse.
pub fn builtin(name: &str) -> GameMap {
    let text = builtin_text(name).unwrap_or_else(|| panic!("no builtin map named {name:?}"));
    load_map(text).expect("shipped maps are valid")
}

pub fn try_builtin(name: &str) -> Option<Result<GameMap, MapError>> {
    builtin_text(name).map(load_map)
}
