use serde::{Deserialize, Serialize};

/// A grid cell. `x` is the column, `y` the row (row 0 is the first line of a
/// map file). Serialized as an `[x, y]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Pos { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Pos {
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn step(self, dir: Dir) -> Pos {
        let (dx, dy) = dir.delta();
        self.offset(dx, dy)
    }

    pub fn dist2(self, other: Pos) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Pos) -> f64 {
        (self.dist2(other) as f64).sqrt()
    }

    pub fn chebyshev(self, other: Pos) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    /// True for the 8 cells around `self` (not `self` itself).
    pub fn is_adjacent(self, other: Pos) -> bool {
        self.chebyshev(other) == 1
    }

    /// Row-major ordering key.
    pub fn row_major(self) -> (i32, i32) {
        (self.y, self.x)
    }
}

impl From<[i32; 2]> for Pos {
    fn from(v: [i32; 2]) -> Self {
        Pos::new(v[0], v[1])
    }
}

impl From<Pos> for [i32; 2] {
    fn from(p: Pos) -> Self {
        [p.x, p.y]
    }
}

/// The 8 compass directions, indexed clockwise (screen coordinates, y grows
/// downward) starting at east. Adding one to the index rotates by 45°.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dir(u8);

impl Dir {
    pub const E: Dir = Dir(0);
    pub const SE: Dir = Dir(1);
    pub const S: Dir = Dir(2);
    pub const SW: Dir = Dir(3);
    pub const W: Dir = Dir(4);
    pub const NW: Dir = Dir(5);
    pub const N: Dir = Dir(6);
    pub const NE: Dir = Dir(7);

    pub const ALL: [Dir; 8] = [
        Dir::E,
        Dir::SE,
        Dir::S,
        Dir::SW,
        Dir::W,
        Dir::NW,
        Dir::N,
        Dir::NE,
    ];

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn delta(self) -> (i32, i32) {
        const D: [(i32, i32); 8] = [
            (1, 0),
            (1, 1),
            (0, 1),
            (-1, 1),
            (-1, 0),
            (-1, -1),
            (0, -1),
            (1, -1),
        ];
        D[self.0 as usize]
    }

    /// Rotate clockwise by `steps` × 45° (negative rotates counter-clockwise).
    pub fn rotate(self, steps: i32) -> Dir {
        Dir((self.0 as i32 + steps).rem_euclid(8) as u8)
    }

    /// Direction closest to the bearing from `from` towards `to`.
    /// Returns `None` when the two cells coincide.
    pub fn toward(from: Pos, to: Pos) -> Option<Dir> {
        if from == to {
            return None;
        }
        let angle = ((to.y - from.y) as f64).atan2((to.x - from.x) as f64);
        let idx = (angle / std::f64::consts::FRAC_PI_4).round() as i32;
        Some(Dir(idx.rem_euclid(8) as u8))
    }
}
