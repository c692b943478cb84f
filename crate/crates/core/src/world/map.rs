use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Army;
use crate::geometry::Pos;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("map is empty")]
    Empty,
    #[error("map must be at least 3x3, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("row {row} has {found} cells, expected {expected}")]
    NonRectangular {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown glyph {glyph:?} at row {row}, column {column}")]
    UnknownGlyph {
        glyph: char,
        row: usize,
        column: usize,
    },
    #[error("missing flag for {0}")]
    MissingFlag(Army),
    #[error("duplicate flag for {army} at row {row}, column {column}")]
    DuplicateFlag {
        army: Army,
        row: usize,
        column: usize,
    },
    #[error("{0} cell {1:?} is not passable")]
    NotPassable(&'static str, Pos),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tile {
    Passable,
    Impassable,
    SemiImpassable,
}

impl Tile {
    pub fn glyph(self) -> char {
        match self {
            Tile::Passable => '.',
            Tile::Impassable => '#',
            Tile::SemiImpassable => '~',
        }
    }
}

/// Rectangular, non-toroidal terrain grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Terrain {
    width: i32,
    height: i32,
    cells: Vec<Tile>,
}

impl Terrain {
    pub fn new(width: usize, height: usize, cells: Vec<Tile>) -> Result<Terrain, MapError> {
        if width < 3 || height < 3 {
            return Err(MapError::TooSmall { width, height });
        }
        assert_eq!(cells.len(), width * height, "cell count must match dimensions");
        Ok(Terrain {
            width: width as i32,
            height: height as i32,
            cells,
        })
    }

    pub fn filled(width: usize, height: usize, tile: Tile) -> Result<Terrain, MapError> {
        Terrain::new(width, height, vec![tile; width * height])
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    /// Row-major cell index. Caller guarantees `p` is in bounds.
    pub fn index(&self, p: Pos) -> usize {
        debug_assert!(self.in_bounds(p));
        (p.y * self.width + p.x) as usize
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(index as i32 % self.width, index as i32 / self.width)
    }

    pub fn tile(&self, p: Pos) -> Tile {
        self.cells[self.index(p)]
    }

    pub fn set(&mut self, p: Pos, tile: Tile) {
        let i = self.index(p);
        self.cells[i] = tile;
    }

    /// In bounds and not impassable.
    pub fn walkable(&self, p: Pos) -> bool {
        self.in_bounds(p) && self.tile(p) != Tile::Impassable
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.cells.len()).map(|i| self.pos_of(i))
    }
}

/// A loaded map: terrain plus the flag and spawn cells of each army.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameMap {
    pub terrain: Terrain,
    /// Indexed by [`Army::index`].
    pub flags: [Pos; 2],
    /// Spawn cells in row-major order, indexed by [`Army::index`].
    pub spawns: [Vec<Pos>; 2],
}

impl GameMap {
    pub fn flag(&self, army: Army) -> Pos {
        self.flags[army.index()]
    }

    pub fn spawns(&self, army: Army) -> &[Pos] {
        &self.spawns[army.index()]
    }

    /// Render back to the text map format.
    pub fn to_text(&self) -> String {
        let t = &self.terrain;
        let mut rows: Vec<Vec<char>> = (0..t.height())
            .map(|y| (0..t.width()).map(|x| t.tile(Pos::new(x, y)).glyph()).collect())
            .collect();
        for p in self.spawns(Army::Vp) {
            rows[p.y as usize][p.x as usize] = 'a';
        }
        for p in self.spawns(Army::Hp) {
            rows[p.y as usize][p.x as usize] = 'b';
        }
        let f = self.flag(Army::Hp);
        rows[f.y as usize][f.x as usize] = 'f';
        let f = self.flag(Army::Vp);
        rows[f.y as usize][f.x as usize] = 'F';
        let mut out = String::new();
        for r in rows {
            out.extend(r);
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for GameMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parse the text map format.
///
/// `.` passable, `#` impassable, `~` semi-impassable, `f`/`F` flag of the
/// human / virtual army, `b`/`a` spawn of the human / virtual army. Flag and
/// spawn cells are passable ground.
pub fn load_map(text: &str) -> Result<GameMap, MapError> {
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let rows: Vec<&str> = {
        // tolerate trailing blank lines only
        let mut end = rows.len();
        while end > 0 && rows[end - 1].is_empty() {
            end -= 1;
        }
        rows[..end].to_vec()
    };
    if rows.is_empty() {
        return Err(MapError::Empty);
    }
    let width = rows[0].chars().count();
    let height = rows.len();
    let mut cells = Vec::with_capacity(width * height);
    let mut flags: [Option<Pos>; 2] = [None, None];
    let mut spawns: [Vec<Pos>; 2] = [Vec::new(), Vec::new()];

    for (y, row) in rows.iter().enumerate() {
        let found = row.chars().count();
        if found != width {
            return Err(MapError::NonRectangular {
                row: y,
                expected: width,
                found,
            });
        }
        for (x, glyph) in row.chars().enumerate() {
            let p = Pos::new(x as i32, y as i32);
            let tile = match glyph {
                '.' => Tile::Passable,
                '#' => Tile::Impassable,
                '~' => Tile::SemiImpassable,
                'f' | 'F' => {
                    let army = if glyph == 'f' { Army::Hp } else { Army::Vp };
                    if flags[army.index()].replace(p).is_some() {
                        return Err(MapError::DuplicateFlag {
                            army,
                            row: y,
                            column: x,
                        });
                    }
                    Tile::Passable
                }
                'a' => {
                    spawns[Army::Vp.index()].push(p);
                    Tile::Passable
                }
                'b' => {
                    spawns[Army::Hp.index()].push(p);
                    Tile::Passable
                }
                other => {
                    return Err(MapError::UnknownGlyph {
                        glyph: other,
                        row: y,
                        column: x,
                    })
                }
            };
            cells.push(tile);
        }
    }
    let terrain = Terrain::new(width, height, cells)?;
    let vp_flag = flags[Army::Vp.index()].ok_or(MapError::MissingFlag(Army::Vp))?;
    let hp_flag = flags[Army::Hp.index()].ok_or(MapError::MissingFlag(Army::Hp))?;
    Ok(GameMap {
        terrain,
        flags: [vp_flag, hp_flag],
        spawns,
    })
}
