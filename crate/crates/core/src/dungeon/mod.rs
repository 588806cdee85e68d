//! The editable dungeon level: rooms, corridors and the entities they hold.
//!
//! A [`Dungeon`] is a plain value. Tools never mutate a level in place; they
//! build a new one and the caller swaps it in.

mod diff;
mod validate;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::text::{name_key, same_name};

pub use diff::{diff, AreaPath, Container, DiffEntry, EditDiff, EntityKind, EntityValue};
pub use validate::{validate_domain, validate_with, ValidationReport, Violation, ViolationCode};

/// Structural caps of the game. All of them are tunable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainLimits {
    pub max_enemies_per_room: usize,
    pub max_treasures_per_room: usize,
    pub max_corridors_per_room: usize,
    pub default_corridor_length: u32,
}

impl Default for DomainLimits {
    fn default() -> Self {
        Self {
            max_enemies_per_room: 4,
            max_treasures_per_room: 1,
            max_corridors_per_room: 4,
            default_corridor_length: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dungeon {
    pub name: String,
    #[serde(default)]
    pub rooms: Vec<Room>,
    #[serde(default)]
    pub corridors: Vec<Corridor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub enemies: Vec<Enemy>,
    #[serde(default)]
    pub treasures: Vec<Treasure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub from: String,
    pub to: String,
    pub length: u32,
    pub cells: Vec<Option<Encounter>>,
}

/// Whatever occupies a single corridor cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Encounter {
    Enemy(Enemy),
    Trap(Trap),
    Treasure(Treasure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enemy {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub species: String,
    /// Hit points.
    pub health: u32,
    #[serde(default)]
    pub attacks: Vec<Attack>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attack {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub damage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trap {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub effect: String,
    pub damage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Treasure {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub loot: String,
}

impl Encounter {
    pub fn name(&self) -> &str {
        match self {
            Encounter::Enemy(e) => &e.name,
            Encounter::Trap(t) => &t.name,
            Encounter::Treasure(t) => &t.name,
        }
    }

    pub fn kind(&self) -> EntityKind {
        match self {
            Encounter::Enemy(_) => EntityKind::Enemy,
            Encounter::Trap(_) => EntityKind::Trap,
            Encounter::Treasure(_) => EntityKind::Treasure,
        }
    }
}

impl Corridor {
    /// An empty corridor of `length` cells.
    pub fn new(from: impl Into<String>, to: impl Into<String>, length: u32) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            length,
            cells: (0..length).map(|_| None).collect(),
        }
    }

    pub fn connects(&self, a: &str, b: &str) -> bool {
        (same_name(&self.from, a) && same_name(&self.to, b))
            || (same_name(&self.from, b) && same_name(&self.to, a))
    }

    pub fn touches(&self, room: &str) -> bool {
        same_name(&self.from, room) || same_name(&self.to, room)
    }

    /// Order-independent identity of the corridor.
    pub fn key(&self) -> (String, String) {
        corridor_key(&self.from, &self.to)
    }

    pub fn label(&self) -> String {
        format!("{} <-> {}", self.from, self.to)
    }
}

pub(crate) fn corridor_key(a: &str, b: &str) -> (String, String) {
    let (a, b) = (name_key(a), name_key(b));
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Room {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            enemies: Vec::new(),
            treasures: Vec::new(),
        }
    }
}

/// Error returned by [`Dungeon::from_json`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("PARSE_ERROR at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            line: e.line(),
            column: e.column(),
            message: format!("{e}"),
        }
    }
}

impl Dungeon {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    /// Pretty JSON in the documented level layout. Field order is fixed by
    /// the struct definitions, so output is stable for golden files.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("level serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, ParseError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn room(&self, name: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| same_name(&r.name, name))
    }

    pub fn room_mut(&mut self, name: &str) -> Option<&mut Room> {
        self.rooms.iter_mut().find(|r| same_name(&r.name, name))
    }

    pub fn room_index(&self, name: &str) -> Option<usize> {
        self.rooms.iter().position(|r| same_name(&r.name, name))
    }

    pub fn corridor(&self, a: &str, b: &str) -> Option<&Corridor> {
        self.corridors.iter().find(|c| c.connects(a, b))
    }

    pub fn corridor_mut(&mut self, a: &str, b: &str) -> Option<&mut Corridor> {
        self.corridors.iter_mut().find(|c| c.connects(a, b))
    }

    pub fn corridor_count(&self, room: &str) -> usize {
        self.corridors.iter().filter(|c| c.touches(room)).count()
    }

    /// True when every room can reach every other room.
    pub fn is_connected(&self) -> bool {
        if self.rooms.len() <= 1 {
            return true;
        }
        let keys: Vec<String> = self.rooms.iter().map(|r| name_key(&r.name)).collect();
        let mut seen = alloc::vec![false; keys.len()];
        let mut stack = alloc::vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for c in &self.corridors {
                let other = if name_key(&c.from) == keys[i] {
                    name_key(&c.to)
                } else if name_key(&c.to) == keys[i] {
                    name_key(&c.from)
                } else {
                    continue;
                };
                if let Some(j) = keys.iter().position(|k| *k == other) {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Copy with rooms, corridors and entities sorted by name key. Two levels
    /// with equal canonical forms hold the same content at name granularity.
    pub fn canonical(&self) -> Dungeon {
        let mut d = self.clone();
        for r in &mut d.rooms {
            r.enemies.sort_by_key(|e| name_key(&e.name));
            r.treasures.sort_by_key(|t| name_key(&t.name));
            for e in &mut r.enemies {
                e.attacks.sort_by_key(|a| name_key(&a.name));
            }
        }
        for c in &mut d.corridors {
            for e in c.cells.iter_mut().flatten() {
                if let Encounter::Enemy(e) = e {
                    e.attacks.sort_by_key(|a| name_key(&a.name));
                }
            }
        }
        d.rooms.sort_by_key(|r| name_key(&r.name));
        d.corridors.sort_by_key(|c| c.key());
        d
    }

    /// Short text rendering for prompts: names and placement, no prose.
    pub fn compact(&self) -> String {
        let mut out = String::new();
        if self.rooms.is_empty() {
            out.push_str("The level is empty (no rooms).\n");
            return out;
        }
        let _ = writeln!(
            out,
            "Level \"{}\": {} room(s), {} corridor(s).",
            self.name,
            self.rooms.len(),
            self.corridors.len()
        );
        out.push_str("Rooms:\n");
        for r in &self.rooms {
            let _ = write!(out, "- {}", r.name);
            if !r.enemies.is_empty() {
                out.push_str(" | enemies: ");
                for (i, e) in r.enemies.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{} ({} HP)", e.name, e.health);
                }
            }
            if !r.treasures.is_empty() {
                out.push_str(" | treasures: ");
                for (i, t) in r.treasures.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&t.name);
                }
            }
            out.push('\n');
        }
        if !self.corridors.is_empty() {
            out.push_str("Corridors:\n");
            for c in &self.corridors {
                let _ = write!(out, "- {} ({} cells)", c.label(), c.length);
                let filled: Vec<String> = c
                    .cells
                    .iter()
                    .enumerate()
                    .filter_map(|(i, cell)| {
                        cell.as_ref()
                            .map(|e| format!("cell {}: {} {}", i + 1, e.kind().as_str(), e.name()))
                    })
                    .collect();
                if !filled.is_empty() {
                    let _ = write!(out, " | {}", filled.join(", "));
                }
                out.push('\n');
            }
        }
        out
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn empty_round_trip() {
        let d = Dungeon::default();
        assert_eq!(Dungeon::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn truncated_json_is_parse_error() {
        let text = three_cities().to_json();
        let err = Dungeon::from_json(&text[..text.len() / 2]).unwrap_err();
        assert!(err.line > 0);
        assert!(err.to_string().starts_with("PARSE_ERROR"));
    }

    #[test]
    fn layout_field_order() {
        let mut d = three_cities();
        d.corridors[0].cells[1] = Some(Encounter::Trap(Trap {
            name: "Spikes".into(),
            description: "".into(),
            effect: "bleed".into(),
            damage: 3.0,
        }));
        let text = d.to_json();
        let name = text.find("\"name\"").unwrap();
        let rooms = text.find("\"rooms\"").unwrap();
        let corridors = text.find("\"corridors\"").unwrap();
        assert!(name < rooms && rooms < corridors);
        assert!(text.contains("\"kind\": \"trap\""));
        assert!(text.contains("null"));
    }

    #[test]
    fn connectivity() {
        let mut d = three_cities();
        assert!(d.is_connected());
        d.corridors.pop();
        assert!(!d.is_connected());
        assert!(Dungeon::default().is_connected());
    }

    #[test]
    fn compact_mentions_names() {
        let mut d = three_cities();
        d.rooms[0].enemies.push(enemy("Goblin Archer", 10));
        let text = d.compact();
        assert!(text.contains("Rome"));
        assert!(text.contains("Goblin Archer (10 HP)"));
        assert!(text.contains("Rome <-> Paris"));
    }
}
