//! ASCII map documents.
//!
//! Header lines (they contain '=') set scenario options and declare random
//! resource sets; the first line without '=' starts the grid and fixes the
//! width. Legend: '#' wall, '.' floor, '*' spawn spot, digits fixed resource
//! of that type, letters 'a'..'j' random resource cells whose type-set comes
//! from a `random a = {0,1}` header.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::game::payoff::PayoffMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Floor,
    Wall,
    Spawn,
    /// Fixed resource of the given type.
    Resource(u8),
    /// Random resource; the payload indexes into `ScenarioMap::random_sets`.
    Random(u8),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomSet {
    pub letter: char,
    pub types: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioMap {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<CellKind>,
    pub spawns: Vec<(usize, usize)>,
    pub random_sets: Vec<RandomSet>,
    pub observation_radius: usize,
    pub episode_length: u32,
    pub respawn_delay: u32,
    pub regen_delay: u32,
    pub beam_range: u32,
    pub beam_cooldown: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapError {
    /// 1-based line/column of an unrecognized grid character.
    UnknownChar { line: usize, col: usize, ch: char },
    RaggedRow { line: usize, expected: usize, found: usize },
    Header { line: usize, message: String },
    EmptyGrid,
    TooFewSpawns { found: usize },
    ResourceOutOfRange { resource_type: u8, k: usize },
    UndeclaredRandom { line: usize, col: usize, ch: char },
    EmptyRandomSet { letter: char },
    BadOption { message: String },
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::UnknownChar { line, col, ch } => {
                write!(f, "line {line}, column {col}: unknown map character {ch:?}")
            }
            MapError::RaggedRow { line, expected, found } => {
                write!(f, "line {line}: row has {found} cells, expected {expected}")
            }
            MapError::Header { line, message } => write!(f, "line {line}: {message}"),
            MapError::EmptyGrid => write!(f, "map has no grid lines"),
            MapError::TooFewSpawns { found } => {
                write!(f, "map needs at least 2 spawn spots, found {found}")
            }
            MapError::ResourceOutOfRange { resource_type, k } => {
                write!(f, "resource type {resource_type} out of range for a {k}-type game")
            }
            MapError::UndeclaredRandom { line, col, ch } => {
                write!(f, "line {line}, column {col}: random cell {ch:?} has no declared set")
            }
            MapError::EmptyRandomSet { letter } => {
                write!(f, "random set {letter:?} is empty")
            }
            MapError::BadOption { message } => write!(f, "{message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MapError {}

fn parse_u32(line_no: usize, key: &str, value: &str) -> Result<u32, MapError> {
    value.trim().parse::<u32>().map_err(|_| MapError::Header {
        line: line_no,
        message: alloc::format!("option {key} needs an unsigned integer, got {value:?}"),
    })
}

fn parse_type_set(line_no: usize, letter: char, value: &str) -> Result<RandomSet, MapError> {
    let inner = value
        .trim()
        .strip_prefix('{')
        .and_then(|v| v.strip_suffix('}'))
        .ok_or_else(|| MapError::Header {
            line: line_no,
            message: alloc::format!("random set for {letter:?} must look like {{0,1}}"),
        })?;
    let mut types = Vec::new();
    for part in inner.split(',') {
        let t = part.trim().parse::<u8>().map_err(|_| MapError::Header {
            line: line_no,
            message: alloc::format!("bad resource type {part:?} in random set {letter:?}"),
        })?;
        types.push(t);
    }
    if types.is_empty() {
        return Err(MapError::EmptyRandomSet { letter });
    }
    Ok(RandomSet { letter, types })
}

impl ScenarioMap {
    /// Parses and validates a map document against the payoff matrix whose
    /// resource-type count bounds the legal resource codes.
    pub fn load(text: &str, payoff: &PayoffMatrix) -> Result<ScenarioMap, MapError> {
        let mut name = String::from("unnamed");
        let mut observation_radius: usize = 2;
        let mut episode_length: u32 = 2000;
        let mut respawn_delay: u32 = 5;
        let mut regen_delay: u32 = 10;
        let mut beam_range: u32 = 3;
        let mut beam_cooldown: u32 = 5;
        let mut random_sets: Vec<RandomSet> = Vec::new();

        let mut width = 0usize;
        let mut cells: Vec<CellKind> = Vec::new();
        let mut spawns: Vec<(usize, usize)> = Vec::new();
        let mut grid_rows = 0usize;
        let mut in_grid = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if !in_grid && line.contains('=') {
                let (key, value) = line.split_once('=').expect("checked above");
                let key = key.trim();
                let value = value.trim();
                if let Some(letter_part) = key.strip_prefix("random ") {
                    let letter_part = letter_part.trim();
                    let mut chars = letter_part.chars();
                    let letter = chars.next().ok_or_else(|| MapError::Header {
                        line: line_no,
                        message: "random declaration needs a letter".to_string(),
                    })?;
                    if chars.next().is_some() || !letter.is_ascii_lowercase() {
                        return Err(MapError::Header {
                            line: line_no,
                            message: alloc::format!(
                                "random declaration needs one letter a..j, got {letter_part:?}"
                            ),
                        });
                    }
                    random_sets.push(parse_type_set(line_no, letter, value)?);
                } else {
                    match key {
                        "name" => name = value.to_string(),
                        "observation_radius" => {
                            observation_radius = parse_u32(line_no, key, value)? as usize
                        }
                        "episode_length" => episode_length = parse_u32(line_no, key, value)?,
                        "respawn_delay" => respawn_delay = parse_u32(line_no, key, value)?,
                        "regen_delay" => regen_delay = parse_u32(line_no, key, value)?,
                        "beam_range" => beam_range = parse_u32(line_no, key, value)?,
                        "beam_cooldown" => beam_cooldown = parse_u32(line_no, key, value)?,
                        _ => {
                            return Err(MapError::Header {
                                line: line_no,
                                message: alloc::format!("unknown option {key:?}"),
                            })
                        }
                    }
                }
                continue;
            }

            // Grid line.
            if !in_grid {
                in_grid = true;
                width = line.chars().count();
            }
            let row = grid_rows;
            let found = line.chars().count();
            if found != width {
                return Err(MapError::RaggedRow {
                    line: line_no,
                    expected: width,
                    found,
                });
            }
            for (c, ch) in line.chars().enumerate() {
                let cell = match ch {
                    '#' => CellKind::Wall,
                    '.' => CellKind::Floor,
                    '*' => {
                        spawns.push((row, c));
                        CellKind::Spawn
                    }
                    '0'..='9' => CellKind::Resource(ch as u8 - b'0'),
                    'a'..='j' => {
                        let set_idx = random_sets
                            .iter()
                            .position(|s| s.letter == ch)
                            .ok_or(MapError::UndeclaredRandom {
                                line: line_no,
                                col: c + 1,
                                ch,
                            })?;
                        CellKind::Random(set_idx as u8)
                    }
                    _ => {
                        return Err(MapError::UnknownChar {
                            line: line_no,
                            col: c + 1,
                            ch,
                        })
                    }
                };
                cells.push(cell);
            }
            grid_rows += 1;
        }

        if grid_rows == 0 {
            return Err(MapError::EmptyGrid);
        }
        if spawns.len() < 2 {
            return Err(MapError::TooFewSpawns { found: spawns.len() });
        }
        let k = payoff.k;
        for cell in &cells {
            if let CellKind::Resource(t) = cell {
                if usize::from(*t) >= k {
                    return Err(MapError::ResourceOutOfRange {
                        resource_type: *t,
                        k,
                    });
                }
            }
        }
        for set in &random_sets {
            for t in &set.types {
                if usize::from(*t) >= k {
                    return Err(MapError::ResourceOutOfRange {
                        resource_type: *t,
                        k,
                    });
                }
            }
        }
        for (key, value, min) in [
            ("episode_length", episode_length, 1),
            ("respawn_delay", respawn_delay, 1),
            ("regen_delay", regen_delay, 1),
            ("beam_range", beam_range, 1),
            ("observation_radius", observation_radius as u32, 1),
        ] {
            if value < min {
                return Err(MapError::BadOption {
                    message: alloc::format!("option {key} must be at least {min}"),
                });
            }
        }

        Ok(ScenarioMap {
            name,
            width,
            height: grid_rows,
            cells,
            spawns,
            random_sets,
            observation_radius,
            episode_length,
            respawn_delay,
            regen_delay,
            beam_range,
            beam_cooldown,
        })
    }

    pub fn cell(&self, row: usize, col: usize) -> CellKind {
        self.cells[row * self.width + col]
    }

    pub fn in_bounds(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }

    pub fn is_wall(&self, row: i64, col: i64) -> bool {
        // Out-of-bounds behaves like wall: the map is bounded.
        !self.in_bounds(row, col) || self.cell(row as usize, col as usize) == CellKind::Wall
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn payoff() -> PayoffMatrix {
        PayoffMatrix::new("chicken", vec![vec![3.0, 2.0], vec![5.0, 0.0]]).unwrap()
    }

    const SMALL: &str = "\
name = tiny
episode_length = 40
random a = {0,1}
######
#*01*#
#.aa.#
#.00.#
#*10*#
######
";

    #[test]
    fn parses_dimensions_and_cells() {
        let map = ScenarioMap::load(SMALL, &payoff()).unwrap();
        assert_eq!(map.name, "tiny");
        assert_eq!((map.width, map.height), (6, 6));
        assert_eq!(map.episode_length, 40);
        assert_eq!(map.spawns.len(), 4);
        assert_eq!(map.cell(0, 0), CellKind::Wall);
        assert_eq!(map.cell(1, 1), CellKind::Spawn);
        assert_eq!(map.cell(1, 2), CellKind::Resource(0));
        assert_eq!(map.cell(2, 2), CellKind::Random(0));
        assert_eq!(map.random_sets[0].types, vec![0, 1]);
    }

    #[test]
    fn unknown_character_reports_position() {
        let bad = "####\n#?*#\n#*.#\n####\n";
        match ScenarioMap::load(bad, &payoff()) {
            Err(MapError::UnknownChar { line, col, ch }) => {
                assert_eq!((line, col, ch), (2, 2, '?'));
            }
            other => panic!("expected unknown-char error, got {other:?}"),
        }
    }

    #[test]
    fn too_few_spawns_rejected() {
        let bad = "####\n#*.#\n#..#\n####\n";
        assert_eq!(
            ScenarioMap::load(bad, &payoff()),
            Err(MapError::TooFewSpawns { found: 1 })
        );
    }

    #[test]
    fn resource_code_must_fit_the_game() {
        let bad = "####\n#*5#\n#*.#\n####\n";
        assert_eq!(
            ScenarioMap::load(bad, &payoff()),
            Err(MapError::ResourceOutOfRange {
                resource_type: 5,
                k: 2
            })
        );
    }

    #[test]
    fn undeclared_random_letter_rejected() {
        let bad = "####\n#*b#\n#*.#\n####\n";
        match ScenarioMap::load(bad, &payoff()) {
            Err(MapError::UndeclaredRandom { line, col, ch }) => {
                assert_eq!((line, col, ch), (2, 3, 'b'));
            }
            other => panic!("expected undeclared-random error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let bad = "####\n#*.#\n#*#\n####\n";
        assert!(matches!(
            ScenarioMap::load(bad, &payoff()),
            Err(MapError::RaggedRow { line: 3, .. })
        ));
    }

    #[test]
    fn header_after_grid_is_a_grid_error() {
        // Once the grid starts, '=' is just an unknown map character. The
        // line is width-matched so the character check is what fires.
        let bad = "########\n#**....#\nname = x\n########\n";
        assert!(matches!(
            ScenarioMap::load(bad, &payoff()),
            Err(MapError::UnknownChar { line: 3, .. })
        ));
        // and a width mismatch reports the ragged row instead
        let ragged = "####\n#**#\nname = x\n####\n";
        assert!(matches!(
            ScenarioMap::load(ragged, &payoff()),
            Err(MapError::RaggedRow { line: 3, .. })
        ));
    }
}
