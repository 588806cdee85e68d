use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{DomainLimits, Dungeon, Encounter, Enemy};
use crate::text::name_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    EmptyName,
    DuplicateRoomName,
    DanglingCorridor,
    SelfCorridor,
    DuplicateCorridor,
    RoomCorridorCap,
    Disconnected,
    RoomEnemyCap,
    RoomTreasureCap,
    DuplicateEntityName,
    CorridorLength,
    CorridorCellsMismatch,
    NonpositiveHealth,
    NegativeDamage,
    DuplicateAttackName,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptyName => "EMPTY_NAME",
            ViolationCode::DuplicateRoomName => "DUPLICATE_ROOM_NAME",
            ViolationCode::DanglingCorridor => "DANGLING_CORRIDOR",
            ViolationCode::SelfCorridor => "SELF_CORRIDOR",
            ViolationCode::DuplicateCorridor => "DUPLICATE_CORRIDOR",
            ViolationCode::RoomCorridorCap => "ROOM_CORRIDOR_CAP",
            ViolationCode::Disconnected => "DISCONNECTED",
            ViolationCode::RoomEnemyCap => "ROOM_ENEMY_CAP",
            ViolationCode::RoomTreasureCap => "ROOM_TREASURE_CAP",
            ViolationCode::DuplicateEntityName => "DUPLICATE_ENTITY_NAME",
            ViolationCode::CorridorLength => "CORRIDOR_LENGTH",
            ViolationCode::CorridorCellsMismatch => "CORRIDOR_CELLS_MISMATCH",
            ViolationCode::NonpositiveHealth => "NONPOSITIVE_HEALTH",
            ViolationCode::NegativeDamage => "NEGATIVE_DAMAGE",
            ViolationCode::DuplicateAttackName => "DUPLICATE_ATTACK_NAME",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

/// Every broken invariant of a level. Empty means the level is valid.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> BTreeSet<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    pub fn contains(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, message: String) {
        self.violations.push(Violation { code, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.code, v.message)?;
        }
        Ok(())
    }
}

pub fn validate_domain(d: &Dungeon) -> ValidationReport {
    validate_with(d, &DomainLimits::default())
}

pub fn validate_with(d: &Dungeon, limits: &DomainLimits) -> ValidationReport {
    use ViolationCode::*;
    let mut report = ValidationReport::default();

    let mut room_names = BTreeSet::new();
    for room in &d.rooms {
        if room.name.trim().is_empty() {
            report.push(EmptyName, "a room has an empty name".into());
        }
        if !room_names.insert(name_key(&room.name)) {
            report.push(
                DuplicateRoomName,
                format!("room name '{}' is used more than once", room.name),
            );
        }
        if room.enemies.len() > limits.max_enemies_per_room {
            report.push(
                RoomEnemyCap,
                format!(
                    "room '{}' holds {} enemies (max {})",
                    room.name,
                    room.enemies.len(),
                    limits.max_enemies_per_room
                ),
            );
        }
        if room.treasures.len() > limits.max_treasures_per_room {
            report.push(
                RoomTreasureCap,
                format!(
                    "room '{}' holds {} treasures (max {})",
                    room.name,
                    room.treasures.len(),
                    limits.max_treasures_per_room
                ),
            );
        }
        let names = room
            .enemies
            .iter()
            .map(|e| e.name.as_str())
            .chain(room.treasures.iter().map(|t| t.name.as_str()));
        check_entity_names(&mut report, &format!("room '{}'", room.name), names);
        for e in &room.enemies {
            check_enemy(&mut report, e);
        }
        for t in &room.treasures {
            if t.name.trim().is_empty() {
                report.push(
                    EmptyName,
                    format!("a treasure in room '{}' has an empty name", room.name),
                );
            }
        }
    }

    let mut pairs = BTreeSet::new();
    for c in &d.corridors {
        let label = c.label();
        let from_ok = room_names.contains(&name_key(&c.from));
        let to_ok = room_names.contains(&name_key(&c.to));
        if !from_ok || !to_ok {
            let missing = if !from_ok { &c.from } else { &c.to };
            report.push(
                DanglingCorridor,
                format!("corridor {label} references missing room '{missing}'"),
            );
        }
        if name_key(&c.from) == name_key(&c.to) {
            report.push(
                SelfCorridor,
                format!("corridor {label} connects a room to itself"),
            );
        }
        if !pairs.insert(c.key()) {
            report.push(
                DuplicateCorridor,
                format!("more than one corridor connects {label}"),
            );
        }
        if c.length == 0 {
            report.push(CorridorLength, format!("corridor {label} has zero length"));
        }
        if c.cells.len() != c.length as usize {
            report.push(
                CorridorCellsMismatch,
                format!(
                    "corridor {label} has length {} but {} cells",
                    c.length,
                    c.cells.len()
                ),
            );
        }
        let names = c.cells.iter().flatten().map(Encounter::name);
        check_entity_names(&mut report, &format!("corridor {label}"), names);
        for cell in c.cells.iter().flatten() {
            match cell {
                Encounter::Enemy(e) => check_enemy(&mut report, e),
                Encounter::Trap(t) => {
                    if t.name.trim().is_empty() {
                        report.push(
                            EmptyName,
                            format!("a trap in corridor {label} has an empty name"),
                        );
                    }
                    if !(t.damage.is_finite() && t.damage >= 0.0) {
                        report.push(
                            NegativeDamage,
                            format!("trap '{}' has invalid damage {}", t.name, t.damage),
                        );
                    }
                }
                Encounter::Treasure(t) => {
                    if t.name.trim().is_empty() {
                        report.push(
                            EmptyName,
                            format!("a treasure in corridor {label} has an empty name"),
                        );
                    }
                }
            }
        }
    }

    for room in &d.rooms {
        let n = d.corridor_count(&room.name);
        if n > limits.max_corridors_per_room {
            report.push(
                RoomCorridorCap,
                format!(
                    "room '{}' has {} corridors (max {})",
                    room.name, n, limits.max_corridors_per_room
                ),
            );
        }
    }

    if !d.is_connected() {
        report.push(
            Disconnected,
            "not every room is reachable from every other room".into(),
        );
    }

    report
}

fn check_entity_names<'a>(
    report: &mut ValidationReport,
    area: &str,
    names: impl Iterator<Item = &'a str>,
) {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(name_key(n)) {
            report.push(
                ViolationCode::DuplicateEntityName,
                format!("name '{n}' is used more than once in {area}"),
            );
        }
    }
}

fn check_enemy(report: &mut ValidationReport, e: &Enemy) {
    use ViolationCode::*;
    if e.name.trim().is_empty() {
        report.push(EmptyName, "an enemy has an empty name".into());
    }
    if e.health == 0 {
        report.push(
            NonpositiveHealth,
            format!("enemy '{}' has health 0", e.name),
        );
    }
    let mut seen = BTreeSet::new();
    for a in &e.attacks {
        if a.name.trim().is_empty() {
            report.push(
                EmptyName,
                format!("an attack of enemy '{}' has an empty name", e.name),
            );
        }
        if !seen.insert(name_key(&a.name)) {
            report.push(
                DuplicateAttackName,
                format!("enemy '{}' has two attacks named '{}'", e.name, a.name),
            );
        }
        if !(a.damage.is_finite() && a.damage >= 0.0) {
            report.push(
                NegativeDamage,
                format!(
                    "attack '{}' of enemy '{}' has invalid damage {}",
                    a.name, e.name, a.damage
                ),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::*;
    use super::*;

    #[test]
    fn empty_dungeon_is_valid() {
        assert!(validate_domain(&Dungeon::default()).is_empty());
    }

    #[test]
    fn three_cities_valid() {
        assert!(validate_domain(&three_cities()).is_empty());
    }

    #[test]
    fn dangling_corridor() {
        let mut d = three_cities();
        d.corridors.push(Corridor::new("Barcelona", "Hell", 4));
        let r = validate_domain(&d);
        assert!(r.contains(ViolationCode::DanglingCorridor), "{r}");
    }

    #[test]
    fn enemy_cap_matches_direct_count() {
        let mut d = three_cities();
        for i in 0..5 {
            d.rooms[0].enemies.push(enemy(&format!("Goblin {i}"), 5));
        }
        let direct = d.rooms.iter().any(|r| r.enemies.len() > 4);
        assert!(direct);
        assert!(validate_domain(&d).contains(ViolationCode::RoomEnemyCap));
        d.rooms[0].enemies.pop();
        assert!(validate_domain(&d).is_empty());
    }

    #[test]
    fn self_and_duplicate_corridors() {
        let mut d = three_cities();
        d.corridors.push(Corridor::new("Paris", "Rome", 4));
        d.corridors.push(Corridor::new("Rome", "rome", 4));
        let codes = validate_domain(&d).codes();
        assert!(codes.contains(&ViolationCode::DuplicateCorridor));
        assert!(codes.contains(&ViolationCode::SelfCorridor));
    }

    #[test]
    fn corridor_cap_and_cells() {
        let mut d = Dungeon::new("hub");
        d.rooms.push(Room::new("Hub", ""));
        for i in 0..5 {
            let name = format!("Spoke {i}");
            d.rooms.push(Room::new(name.clone(), ""));
            d.corridors.push(Corridor::new("Hub", name, 4));
        }
        assert!(validate_domain(&d).contains(ViolationCode::RoomCorridorCap));
        d.corridors[0].cells.pop();
        assert!(validate_domain(&d).contains(ViolationCode::CorridorCellsMismatch));
    }

    #[test]
    fn disconnected_and_duplicates() {
        let mut d = three_cities();
        d.corridors.remove(1);
        d.rooms[0].enemies.push(enemy("Orc", 3));
        d.rooms[0].treasures.push(Treasure {
            name: "orc".into(),
            description: "".into(),
            loot: "".into(),
        });
        let codes = validate_domain(&d).codes();
        assert!(codes.contains(&ViolationCode::Disconnected));
        assert!(codes.contains(&ViolationCode::DuplicateEntityName));
    }

    #[test]
    fn health_and_damage() {
        let mut d = three_cities();
        let mut e = enemy("Ghost", 0);
        e.attacks.push(Attack {
            name: "Wail".into(),
            description: "".into(),
            damage: -1.0,
        });
        e.attacks.push(Attack {
            name: "wail".into(),
            description: "".into(),
            damage: 1.0,
        });
        d.rooms[1].enemies.push(e);
        let codes = validate_domain(&d).codes();
        assert!(codes.contains(&ViolationCode::NonpositiveHealth));
        assert!(codes.contains(&ViolationCode::NegativeDamage));
        assert!(codes.contains(&ViolationCode::DuplicateAttackName));
    }
}
