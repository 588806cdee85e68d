//! Definitions and semantics of the sixteen standard tools.
//!
//! Every executor works on a clone of the input level and returns either the
//! edited clone with a one-line success message, or a functional-error
//! message naming the offending parameter or constraint.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{ParamKind, ParamSet, ParamSpec, ToolSpec};
use crate::dungeon::{
    Attack, Corridor, DomainLimits, Dungeon, Encounter, Enemy, EntityKind, Room, Trap, Treasure,
};
use crate::text::{name_key, same_name};

const ROOM: ParamSpec = ParamSpec {
    name: "room",
    kind: ParamKind::RoomRef,
    required: false,
    description:
        "Name of an existing room that holds the entity. Give either `room` or `corridor`.",
};
const CORRIDOR: ParamSpec = ParamSpec {
    name: "corridor",
    kind: ParamKind::CorridorRef,
    required: false,
    description: "Existing corridor that holds the entity, written as its two room names separated by `<->` (for example `Rome <-> Paris`). Give either `room` or `corridor`.",
};
const CELL: ParamSpec = ParamSpec {
    name: "cell",
    kind: ParamKind::Integer,
    required: false,
    description:
        "1-based position inside the corridor. Defaults to the first free cell. Ignored for rooms.",
};
const ENTITY_REF: ParamSpec = ParamSpec {
    name: "ref",
    kind: ParamKind::EntityRef,
    required: true,
    description: "Current name of the entity to change, exactly as it appears in the level.",
};
const ROOM_FILTER: ParamSpec = ParamSpec {
    name: "room",
    kind: ParamKind::RoomRef,
    required: false,
    description:
        "Room that holds the entity. Only needed when the name appears in more than one place.",
};
const CORRIDOR_FILTER: ParamSpec = ParamSpec {
    name: "corridor",
    kind: ParamKind::CorridorRef,
    required: false,
    description: "Corridor that holds the entity, as `Room A <-> Room B`. Only needed when the name appears in more than one place.",
};

const fn p(
    name: &'static str,
    kind: ParamKind,
    required: bool,
    description: &'static str,
) -> ParamSpec {
    ParamSpec {
        name,
        kind,
        required,
        description,
    }
}

pub(super) fn standard_tools() -> Vec<ToolSpec> {
    use ParamKind::*;
    vec![
        ToolSpec {
            name: "add_room",
            summary: "create a new room, connected to an existing room",
            description: "Create a new room in the dungeon. Every room after the first must be connected to an existing room through `connect_to`, which also creates the corridor between them. A room can have at most four corridors.",
            params: vec![
                p("name", Text, true, "Unique name of the new room, usually evoking its setting."),
                p("description", Text, true, "Short description of the look and atmosphere of the room."),
                p("connect_to", RoomRef, false, "Name of an existing room to connect the new room to. Required unless the dungeon has no rooms yet."),
            ],
            exec: add_room,
        },
        ToolSpec {
            name: "update_room",
            summary: "rename a room or change its description",
            description: "Change the name and/or the description of an existing room. Corridors that reach the room follow the rename. Only the given fields change.",
            params: vec![
                p("room", RoomRef, true, "Current name of the room to change."),
                p("name", Text, false, "New unique name for the room."),
                p("description", Text, false, "New description for the room."),
            ],
            exec: update_room,
        },
        ToolSpec {
            name: "remove_room",
            summary: "delete a room with its contents and corridors",
            description: "Delete an existing room together with everything it contains and every corridor that reaches it. Fails if the remaining rooms would no longer be connected.",
            params: vec![p("room", RoomRef, true, "Name of the room to delete.")],
            exec: remove_room,
        },
        ToolSpec {
            name: "add_corridor",
            summary: "connect two existing rooms with a corridor",
            description: "Create a corridor between two existing rooms that are not already connected. A room can have at most four corridors. Corridors are made of cells that can hold one enemy, trap or treasure each.",
            params: vec![
                p("from", RoomRef, true, "Name of the first room."),
                p("to", RoomRef, true, "Name of the second room."),
                p("length", Integer, false, "Number of cells in the corridor. Defaults to 4."),
            ],
            exec: add_corridor,
        },
        ToolSpec {
            name: "update_corridor",
            summary: "change the length of a corridor",
            description: "Change the number of cells of an existing corridor. Shortening fails if it would drop an occupied cell.",
            params: vec![
                p("corridor", CorridorRef, true, "Corridor to change, written as its two room names separated by `<->` (for example `Rome <-> Paris`)."),
                p("length", Integer, true, "New number of cells, at least 1."),
            ],
            exec: update_corridor,
        },
        ToolSpec {
            name: "remove_corridor",
            summary: "delete a corridor between two rooms",
            description: "Delete an existing corridor and everything in its cells. Fails if the rooms would no longer be connected.",
            params: vec![p("corridor", CorridorRef, true, "Corridor to delete, written as its two room names separated by `<->`.")],
            exec: remove_corridor,
        },
        ToolSpec {
            name: "add_enemy",
            summary: "place a new enemy in a room or corridor",
            description: "Place a new enemy in a room or in a corridor cell. A room holds at most four enemies and every entity name must be unique within its room or corridor. Attacks are added separately with add_attack.",
            params: vec![
                p("name", Text, true, "Unique name of the enemy, e.g. `Goblin Archer` or `Zombie 2`."),
                p("description", Text, true, "Short description of the enemy's look and behaviour."),
                p("species", Text, true, "Kind of creature, e.g. goblin, zombie, mermaid."),
                p("health", Integer, true, "Hit points, a positive integer."),
                ROOM,
                CORRIDOR,
                CELL,
            ],
            exec: add_enemy,
        },
        ToolSpec {
            name: "update_enemy",
            summary: "change an enemy's name, description, species or health",
            description: "Change properties of an existing enemy. Only the given fields change; everything else, including its attacks, is kept.",
            params: vec![
                ENTITY_REF,
                p("name", Text, false, "New unique name for the enemy."),
                p("description", Text, false, "New description."),
                p("species", Text, false, "New species."),
                p("health", Integer, false, "New hit points, a positive integer."),
                ROOM_FILTER,
                CORRIDOR_FILTER,
            ],
            exec: update_enemy,
        },
        ToolSpec {
            name: "remove_enemy",
            summary: "delete an enemy",
            description: "Delete an existing enemy from its room or corridor cell.",
            params: vec![ENTITY_REF, ROOM_FILTER, CORRIDOR_FILTER],
            exec: remove_enemy,
        },
        ToolSpec {
            name: "add_trap",
            summary: "place a new trap in a corridor cell",
            description: "Place a new trap in a free cell of a corridor. Traps can only be placed in corridors, one per cell.",
            params: vec![
                p("name", Text, true, "Unique name of the trap within its corridor."),
                p("description", Text, true, "Short description of the trap."),
                p("effect", Text, true, "What the trap does to heroes that trigger it."),
                p("damage", Number, true, "Damage dealt when triggered, zero or more."),
                p("corridor", CorridorRef, true, "Corridor to place the trap in, written as its two room names separated by `<->`."),
                CELL,
            ],
            exec: add_trap,
        },
        ToolSpec {
            name: "update_trap",
            summary: "change a trap's name, description, effect or damage",
            description: "Change properties of an existing trap. Only the given fields change.",
            params: vec![
                ENTITY_REF,
                p("name", Text, false, "New unique name for the trap."),
                p("description", Text, false, "New description."),
                p("effect", Text, false, "New effect."),
                p("damage", Number, false, "New damage, zero or more."),
                CORRIDOR_FILTER,
            ],
            exec: update_trap,
        },
        ToolSpec {
            name: "remove_trap",
            summary: "delete a trap",
            description: "Delete an existing trap from its corridor cell.",
            params: vec![ENTITY_REF, CORRIDOR_FILTER],
            exec: remove_trap,
        },
        ToolSpec {
            name: "add_treasure",
            summary: "place a new treasure in a room or corridor",
            description: "Place a new treasure in a room or in a corridor cell. A room holds at most one treasure.",
            params: vec![
                p("name", Text, true, "Unique name of the treasure, e.g. `Golden Chest`."),
                p("description", Text, true, "Short description of the treasure."),
                p("loot", Text, true, "What the treasure contains."),
                ROOM,
                CORRIDOR,
                CELL,
            ],
            exec: add_treasure,
        },
        ToolSpec {
            name: "update_treasure",
            summary: "change a treasure's name, description or loot",
            description: "Change properties of an existing treasure. Only the given fields change.",
            params: vec![
                ENTITY_REF,
                p("name", Text, false, "New unique name for the treasure."),
                p("description", Text, false, "New description."),
                p("loot", Text, false, "New contents."),
                ROOM_FILTER,
                CORRIDOR_FILTER,
            ],
            exec: update_treasure,
        },
        ToolSpec {
            name: "remove_treasure",
            summary: "delete a treasure",
            description: "Delete an existing treasure from its room or corridor cell.",
            params: vec![ENTITY_REF, ROOM_FILTER, CORRIDOR_FILTER],
            exec: remove_treasure,
        },
        ToolSpec {
            name: "add_attack",
            summary: "give an existing enemy a new attack",
            description: "Add a new attack (an action the enemy can take in combat) to an existing enemy. Attack names must be unique per enemy.",
            params: vec![
                p("enemy", EntityRef, true, "Name of the enemy that gets the attack."),
                p("name", Text, true, "Name of the attack, e.g. `Flaming Sword`."),
                p("description", Text, true, "Short description of the attack."),
                p("damage", Number, true, "Damage dealt, zero or more."),
                ROOM_FILTER,
                CORRIDOR_FILTER,
            ],
            exec: add_attack,
        },
    ]
}

// ---------------------------------------------------------------------------
// Shared helpers

type Exec = Result<(Dungeon, String), String>;

fn required<'a>(p: &'a ParamSet, name: &str) -> Result<&'a str, String> {
    p.text(name)
        .ok_or_else(|| format!("parameter '{name}' is required"))
}

fn room_list(d: &Dungeon) -> String {
    if d.rooms.is_empty() {
        return "the level has no rooms".into();
    }
    let names: Vec<&str> = d.rooms.iter().map(|r| r.name.as_str()).collect();
    format!("existing rooms: {}", names.join(", "))
}

fn resolve_room(d: &Dungeon, param: &str, name: &str) -> Result<String, String> {
    d.room(name).map(|r| r.name.clone()).ok_or_else(|| {
        format!(
            "parameter '{param}': room '{name}' does not exist ({})",
            room_list(d)
        )
    })
}

/// Splits a corridor reference into two existing room names. Tries `<->`
/// first, then other common separators at every position.
fn split_pair(d: &Dungeon, text: &str) -> Option<(String, String)> {
    for sep in [
        "<->", "<>", "->", "<-", " to ", " and ", " - ", "–", ",", "/", "-",
    ] {
        let mut start = 0;
        while let Some(i) = text[start..].find(sep) {
            let at = start + i;
            let (a, b) = (text[..at].trim(), text[at + sep.len()..].trim());
            if let (Some(ra), Some(rb)) = (d.room(a), d.room(b)) {
                return Some((ra.name.clone(), rb.name.clone()));
            }
            start = at + sep.len();
        }
    }
    None
}

fn resolve_corridor(d: &Dungeon, param: &str, text: &str) -> Result<(String, String), String> {
    let (a, b) = split_pair(d, text).ok_or_else(|| {
        format!(
            "parameter '{param}': '{text}' does not name two existing rooms; write it as `Room A <-> Room B` ({})",
            room_list(d)
        )
    })?;
    if d.corridor(&a, &b).is_none() {
        return Err(format!(
            "parameter '{param}': there is no corridor between '{a}' and '{b}'"
        ));
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Area {
    Room(String),
    Corridor(String, String),
}

impl Area {
    fn describe(&self) -> String {
        match self {
            Area::Room(r) => format!("room '{r}'"),
            Area::Corridor(a, b) => format!("corridor {a} <-> {b}"),
        }
    }
}

/// Resolves the optional `room` / `corridor` pair; at most one may be given.
fn area_filter(p: &ParamSet, d: &Dungeon) -> Result<Option<Area>, String> {
    match (p.text("room"), p.text("corridor")) {
        (Some(_), Some(_)) => Err("give either 'room' or 'corridor', not both".into()),
        (Some(r), None) => Ok(Some(Area::Room(resolve_room(d, "room", r)?))),
        (None, Some(c)) => {
            let (a, b) = resolve_corridor(d, "corridor", c)?;
            Ok(Some(Area::Corridor(a, b)))
        }
        (None, None) => Ok(None),
    }
}

fn placement_area(p: &ParamSet, d: &Dungeon) -> Result<Area, String> {
    area_filter(p, d)?
        .ok_or_else(|| "missing location: give a 'room' or a 'corridor' parameter".into())
}

fn entity_names_in(d: &Dungeon, area: &Area) -> Vec<String> {
    match area {
        Area::Room(r) => d
            .room(r)
            .map(|r| {
                r.enemies
                    .iter()
                    .map(|e| e.name.clone())
                    .chain(r.treasures.iter().map(|t| t.name.clone()))
                    .collect()
            })
            .unwrap_or_default(),
        Area::Corridor(a, b) => d
            .corridor(a, b)
            .map(|c| {
                c.cells
                    .iter()
                    .flatten()
                    .map(|e| e.name().to_string())
                    .collect()
            })
            .unwrap_or_default(),
    }
}

fn ensure_unique_name(
    d: &Dungeon,
    area: &Area,
    name: &str,
    except: Option<&str>,
) -> Result<(), String> {
    if name.trim().is_empty() {
        return Err("parameter 'name' must not be empty".into());
    }
    let clash = entity_names_in(d, area)
        .iter()
        .any(|n| same_name(n, name) && !except.is_some_and(|e| same_name(e, n)));
    if clash {
        return Err(format!(
            "parameter 'name': {} already has an entity named '{name}'",
            area.describe()
        ));
    }
    Ok(())
}

fn free_cell(c: &Corridor, requested: Option<i64>) -> Result<usize, String> {
    match requested {
        Some(cell) => {
            if cell < 1 || cell as u64 > c.length as u64 {
                return Err(format!(
                    "parameter 'cell': {cell} is outside corridor {} (cells 1 to {})",
                    c.label(),
                    c.length
                ));
            }
            let i = (cell - 1) as usize;
            if c.cells.get(i).is_some_and(Option::is_some) {
                return Err(format!(
                    "parameter 'cell': cell {cell} of corridor {} is occupied",
                    c.label()
                ));
            }
            Ok(i)
        }
        None => c.cells.iter().position(Option::is_none).ok_or_else(|| {
            format!(
                "corridor {} is full: all {} cells are occupied",
                c.label(),
                c.length
            )
        }),
    }
}

/// Finds the unique area holding an entity of `kind` called `name`.
fn locate(
    d: &Dungeon,
    kind: EntityKind,
    name: &str,
    filter: Option<&Area>,
) -> Result<Area, String> {
    let mut hits = Vec::new();
    for r in &d.rooms {
        let found = match kind {
            EntityKind::Enemy => r.enemies.iter().any(|e| same_name(&e.name, name)),
            EntityKind::Treasure => r.treasures.iter().any(|t| same_name(&t.name, name)),
            _ => false,
        };
        if found {
            hits.push(Area::Room(r.name.clone()));
        }
    }
    for c in &d.corridors {
        if c.cells
            .iter()
            .flatten()
            .any(|e| e.kind() == kind && same_name(e.name(), name))
        {
            hits.push(Area::Corridor(c.from.clone(), c.to.clone()));
        }
    }
    if let Some(f) = filter {
        hits.retain(|h| match (h, f) {
            (Area::Room(a), Area::Room(b)) => same_name(a, b),
            (Area::Corridor(a1, b1), Area::Corridor(a2, b2)) => {
                name_key(a1) == name_key(a2) && name_key(b1) == name_key(b2)
                    || name_key(a1) == name_key(b2) && name_key(b1) == name_key(a2)
            }
            _ => false,
        });
    }
    match hits.len() {
        0 => Err(match filter {
            Some(f) => format!(
                "parameter 'ref': no {kind} named '{name}' in {}",
                f.describe()
            ),
            None => format!("parameter 'ref': no {kind} named '{name}' exists in the level"),
        }),
        1 => Ok(hits.remove(0)),
        _ => {
            let places: Vec<String> = hits.iter().map(Area::describe).collect();
            Err(format!(
                "parameter 'ref': {kind} name '{name}' is ambiguous (found in {}); add a 'room' or 'corridor' parameter",
                places.join(", ")
            ))
        }
    }
}

fn positive_health(p: &ParamSet) -> Result<Option<u32>, String> {
    match p.integer("health") {
        None => Ok(None),
        Some(h) if h >= 1 && h <= u32::MAX as i64 => Ok(Some(h as u32)),
        Some(h) => Err(format!(
            "parameter 'health' must be a positive integer (got {h})"
        )),
    }
}

fn damage(p: &ParamSet) -> Result<Option<f64>, String> {
    match p.number("damage") {
        None => Ok(None),
        Some(x) if x >= 0.0 => Ok(Some(x)),
        Some(x) => Err(format!("parameter 'damage' must be zero or more (got {x})")),
    }
}

fn nothing_to_update(fields: &[&str]) -> String {
    format!(
        "nothing to update: give at least one of {}",
        fields.join(", ")
    )
}

fn check_corridor_cap(
    d: &Dungeon,
    limits: &DomainLimits,
    room: &str,
    param: &str,
) -> Result<(), String> {
    if d.corridor_count(room) >= limits.max_corridors_per_room {
        return Err(format!(
            "parameter '{param}': room '{room}' already has {} corridors (max {})",
            limits.max_corridors_per_room, limits.max_corridors_per_room
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Rooms

fn add_room(p: &ParamSet, level: &Dungeon, limits: &DomainLimits) -> Exec {
    let name = required(p, "name")?.trim();
    let description = required(p, "description")?;
    if name.is_empty() {
        return Err("parameter 'name' must not be empty".into());
    }
    if level.room(name).is_some() {
        return Err(format!(
            "parameter 'name': a room named '{name}' already exists"
        ));
    }
    let mut d = level.clone();
    let anchor = match p.text("connect_to") {
        Some(target) => {
            let target = resolve_room(level, "connect_to", target)?;
            check_corridor_cap(level, limits, &target, "connect_to")?;
            Some(target)
        }
        None if level.rooms.is_empty() => None,
        None => {
            return Err(format!(
                "parameter 'connect_to' is required when the level already has rooms ({})",
                room_list(level)
            ))
        }
    };
    d.rooms.push(Room::new(name, description));
    let msg = match anchor {
        Some(target) => {
            d.corridors.push(Corridor::new(
                target.clone(),
                name,
                limits.default_corridor_length,
            ));
            format!("Added room '{name}' connected to '{target}'.")
        }
        None => format!("Added room '{name}'."),
    };
    Ok((d, msg))
}

fn update_room(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    let current = resolve_room(level, "room", required(p, "room")?)?;
    let new_name = p.text("name").map(str::trim);
    let description = p.text("description");
    if new_name.is_none() && description.is_none() {
        return Err(nothing_to_update(&["name", "description"]));
    }
    if let Some(n) = new_name {
        if n.is_empty() {
            return Err("parameter 'name' must not be empty".into());
        }
        if !same_name(n, &current) && level.room(n).is_some() {
            return Err(format!(
                "parameter 'name': a room named '{n}' already exists"
            ));
        }
    }
    let mut d = level.clone();
    if let Some(n) = new_name {
        for c in &mut d.corridors {
            if same_name(&c.from, &current) {
                c.from = n.to_string();
            }
            if same_name(&c.to, &current) {
                c.to = n.to_string();
            }
        }
    }
    let room = d.room_mut(&current).expect("resolved above");
    if let Some(n) = new_name {
        room.name = n.to_string();
    }
    if let Some(desc) = description {
        room.description = desc.to_string();
    }
    Ok((d, format!("Updated room '{current}'.")))
}

fn remove_room(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    let name = resolve_room(level, "room", required(p, "room")?)?;
    let mut d = level.clone();
    d.rooms.retain(|r| !same_name(&r.name, &name));
    d.corridors.retain(|c| !c.touches(&name));
    if !d.is_connected() {
        return Err(format!(
            "removing room '{name}' would disconnect the remaining rooms from each other"
        ));
    }
    Ok((d, format!("Removed room '{name}' and its corridors.")))
}

// ---------------------------------------------------------------------------
// Corridors

fn add_corridor(p: &ParamSet, level: &Dungeon, limits: &DomainLimits) -> Exec {
    let from = resolve_room(level, "from", required(p, "from")?)?;
    let to = resolve_room(level, "to", required(p, "to")?)?;
    if same_name(&from, &to) {
        return Err(
            "parameters 'from' and 'to' name the same room; a corridor needs two rooms".into(),
        );
    }
    if level.corridor(&from, &to).is_some() {
        return Err(format!("rooms '{from}' and '{to}' are already connected"));
    }
    check_corridor_cap(level, limits, &from, "from")?;
    check_corridor_cap(level, limits, &to, "to")?;
    let length = match p.integer("length") {
        None => limits.default_corridor_length,
        Some(n) if (1..=64).contains(&n) => n as u32,
        Some(n) => {
            return Err(format!(
                "parameter 'length' must be between 1 and 64 (got {n})"
            ))
        }
    };
    let mut d = level.clone();
    d.corridors
        .push(Corridor::new(from.clone(), to.clone(), length));
    Ok((
        d,
        format!("Added corridor {from} <-> {to} with {length} cells."),
    ))
}

fn update_corridor(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    let (a, b) = resolve_corridor(level, "corridor", required(p, "corridor")?)?;
    let length = match p.integer("length") {
        Some(n) if (1..=64).contains(&n) => n as u32,
        Some(n) => {
            return Err(format!(
                "parameter 'length' must be between 1 and 64 (got {n})"
            ))
        }
        None => return Err(nothing_to_update(&["length"])),
    };
    let mut d = level.clone();
    let c = d.corridor_mut(&a, &b).expect("resolved above");
    if c.cells.iter().skip(length as usize).any(Option::is_some) {
        return Err(format!(
            "parameter 'length': shortening corridor {} to {length} cells would drop occupied cells",
            c.label()
        ));
    }
    c.length = length;
    c.cells.resize(length as usize, None);
    Ok((d, format!("Corridor {a} <-> {b} now has {length} cells.")))
}

fn remove_corridor(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    let (a, b) = resolve_corridor(level, "corridor", required(p, "corridor")?)?;
    let mut d = level.clone();
    d.corridors.retain(|c| !c.connects(&a, &b));
    if !d.is_connected() {
        return Err(format!(
            "removing corridor {a} <-> {b} would disconnect the level"
        ));
    }
    Ok((d, format!("Removed corridor {a} <-> {b}.")))
}

// ---------------------------------------------------------------------------
// Entities

fn place(
    d: &mut Dungeon,
    area: &Area,
    cell: Option<i64>,
    limits: &DomainLimits,
    enc: Encounter,
) -> Result<String, String> {
    ensure_unique_name(d, area, enc.name(), None)?;
    match area {
        Area::Room(r) => {
            let room = d.room_mut(r).expect("resolved");
            match enc {
                Encounter::Enemy(e) => {
                    if room.enemies.len() >= limits.max_enemies_per_room {
                        return Err(format!(
                            "room '{}' is full: it already holds {} enemies (max {})",
                            room.name,
                            room.enemies.len(),
                            limits.max_enemies_per_room
                        ));
                    }
                    room.enemies.push(e);
                }
                Encounter::Treasure(t) => {
                    if room.treasures.len() >= limits.max_treasures_per_room {
                        return Err(format!(
                            "room '{}' is full: it already holds {} treasure(s) (max {})",
                            room.name,
                            room.treasures.len(),
                            limits.max_treasures_per_room
                        ));
                    }
                    room.treasures.push(t);
                }
                Encounter::Trap(_) => {
                    return Err(
                        "traps can only be placed in corridors; give a 'corridor' parameter".into(),
                    )
                }
            }
            Ok(area.describe())
        }
        Area::Corridor(a, b) => {
            let c = d.corridor_mut(a, b).expect("resolved");
            let i = free_cell(c, cell)?;
            c.cells[i] = Some(enc);
            Ok(format!("cell {} of {}", i + 1, area.describe()))
        }
    }
}

fn add_enemy(p: &ParamSet, level: &Dungeon, limits: &DomainLimits) -> Exec {
    let enemy = Enemy {
        name: required(p, "name")?.trim().to_string(),
        description: required(p, "description")?.to_string(),
        species: required(p, "species")?.to_string(),
        health: positive_health(p)?.ok_or("parameter 'health' is required")?,
        attacks: Vec::new(),
    };
    let area = placement_area(p, level)?;
    let name = enemy.name.clone();
    let mut d = level.clone();
    let at = place(
        &mut d,
        &area,
        p.integer("cell"),
        limits,
        Encounter::Enemy(enemy),
    )?;
    Ok((d, format!("Added enemy '{name}' to {at}.")))
}

fn add_trap(p: &ParamSet, level: &Dungeon, limits: &DomainLimits) -> Exec {
    let trap = Trap {
        name: required(p, "name")?.trim().to_string(),
        description: required(p, "description")?.to_string(),
        effect: required(p, "effect")?.to_string(),
        damage: damage(p)?.ok_or("parameter 'damage' is required")?,
    };
    let (a, b) = resolve_corridor(level, "corridor", required(p, "corridor")?)?;
    let area = Area::Corridor(a, b);
    let name = trap.name.clone();
    let mut d = level.clone();
    let at = place(
        &mut d,
        &area,
        p.integer("cell"),
        limits,
        Encounter::Trap(trap),
    )?;
    Ok((d, format!("Added trap '{name}' to {at}.")))
}

fn add_treasure(p: &ParamSet, level: &Dungeon, limits: &DomainLimits) -> Exec {
    let treasure = Treasure {
        name: required(p, "name")?.trim().to_string(),
        description: required(p, "description")?.to_string(),
        loot: required(p, "loot")?.to_string(),
    };
    let area = placement_area(p, level)?;
    let name = treasure.name.clone();
    let mut d = level.clone();
    let at = place(
        &mut d,
        &area,
        p.integer("cell"),
        limits,
        Encounter::Treasure(treasure),
    )?;
    Ok((d, format!("Added treasure '{name}' to {at}.")))
}

/// Applies `f` to the located entity in a cloned level.
fn with_entity(
    level: &Dungeon,
    area: &Area,
    kind: EntityKind,
    name: &str,
    f: impl FnOnce(&mut Encounter),
) -> Dungeon {
    let mut d = level.clone();
    match area {
        Area::Room(r) => {
            let room = d.room_mut(r).expect("located");
            match kind {
                EntityKind::Enemy => {
                    let i = room
                        .enemies
                        .iter()
                        .position(|e| same_name(&e.name, name))
                        .expect("located");
                    let mut enc = Encounter::Enemy(room.enemies[i].clone());
                    f(&mut enc);
                    if let Encounter::Enemy(e) = enc {
                        room.enemies[i] = e;
                    }
                }
                EntityKind::Treasure => {
                    let i = room
                        .treasures
                        .iter()
                        .position(|t| same_name(&t.name, name))
                        .expect("located");
                    let mut enc = Encounter::Treasure(room.treasures[i].clone());
                    f(&mut enc);
                    if let Encounter::Treasure(t) = enc {
                        room.treasures[i] = t;
                    }
                }
                _ => {}
            }
        }
        Area::Corridor(a, b) => {
            let c = d.corridor_mut(a, b).expect("located");
            if let Some(enc) = c
                .cells
                .iter_mut()
                .flatten()
                .find(|e| e.kind() == kind && same_name(e.name(), name))
            {
                f(enc);
            }
        }
    }
    d
}

fn update_entity(
    p: &ParamSet,
    level: &Dungeon,
    kind: EntityKind,
    fields: &[&str],
    apply: impl FnOnce(&mut Encounter, &ParamSet) -> Result<(), String>,
) -> Exec {
    let name = required(p, "ref")?;
    let filter = area_filter(p, level)?;
    let area = locate(level, kind, name, filter.as_ref())?;
    if !fields.iter().any(|f| p.contains(f)) {
        return Err(nothing_to_update(fields));
    }
    if let Some(new_name) = p.text("name") {
        ensure_unique_name(level, &area, new_name.trim(), Some(name))?;
    }
    let mut result = Ok(());
    let d = with_entity(level, &area, kind, name, |enc| result = apply(enc, p));
    result?;
    Ok((
        d,
        format!("Updated {kind} '{name}' in {}.", area.describe()),
    ))
}

fn set_text(target: &mut String, p: &ParamSet, name: &str) {
    if let Some(v) = p.text(name) {
        *target = v.trim().to_string();
    }
}

fn update_enemy(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    let health = positive_health(p)?;
    update_entity(
        p,
        level,
        EntityKind::Enemy,
        &["name", "description", "species", "health"],
        |enc, p| {
            if let Encounter::Enemy(e) = enc {
                set_text(&mut e.name, p, "name");
                set_text(&mut e.description, p, "description");
                set_text(&mut e.species, p, "species");
                if let Some(h) = health {
                    e.health = h;
                }
            }
            Ok(())
        },
    )
}

fn update_trap(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    let dmg = damage(p)?;
    update_entity(
        p,
        level,
        EntityKind::Trap,
        &["name", "description", "effect", "damage"],
        |enc, p| {
            if let Encounter::Trap(t) = enc {
                set_text(&mut t.name, p, "name");
                set_text(&mut t.description, p, "description");
                set_text(&mut t.effect, p, "effect");
                if let Some(x) = dmg {
                    t.damage = x;
                }
            }
            Ok(())
        },
    )
}

fn update_treasure(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    update_entity(
        p,
        level,
        EntityKind::Treasure,
        &["name", "description", "loot"],
        |enc, p| {
            if let Encounter::Treasure(t) = enc {
                set_text(&mut t.name, p, "name");
                set_text(&mut t.description, p, "description");
                set_text(&mut t.loot, p, "loot");
            }
            Ok(())
        },
    )
}

fn remove_entity(p: &ParamSet, level: &Dungeon, kind: EntityKind) -> Exec {
    let name = required(p, "ref")?;
    let filter = area_filter(p, level)?;
    let area = locate(level, kind, name, filter.as_ref())?;
    let mut d = level.clone();
    match &area {
        Area::Room(r) => {
            let room = d.room_mut(r).expect("located");
            match kind {
                EntityKind::Enemy => room.enemies.retain(|e| !same_name(&e.name, name)),
                EntityKind::Treasure => room.treasures.retain(|t| !same_name(&t.name, name)),
                _ => {}
            }
        }
        Area::Corridor(a, b) => {
            let c = d.corridor_mut(a, b).expect("located");
            for cell in &mut c.cells {
                if cell
                    .as_ref()
                    .is_some_and(|e| e.kind() == kind && same_name(e.name(), name))
                {
                    *cell = None;
                }
            }
        }
    }
    Ok((
        d,
        format!("Removed {kind} '{name}' from {}.", area.describe()),
    ))
}

fn remove_enemy(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    remove_entity(p, level, EntityKind::Enemy)
}

fn remove_trap(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    remove_entity(p, level, EntityKind::Trap)
}

fn remove_treasure(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    remove_entity(p, level, EntityKind::Treasure)
}

fn add_attack(p: &ParamSet, level: &Dungeon, _: &DomainLimits) -> Exec {
    let enemy = required(p, "enemy")?;
    let attack = Attack {
        name: required(p, "name")?.trim().to_string(),
        description: required(p, "description")?.to_string(),
        damage: damage(p)?.ok_or("parameter 'damage' is required")?,
    };
    if attack.name.is_empty() {
        return Err("parameter 'name' must not be empty".into());
    }
    let filter = area_filter(p, level)?;
    let area = locate(level, EntityKind::Enemy, enemy, filter.as_ref())
        .map_err(|e| e.replace("parameter 'ref'", "parameter 'enemy'"))?;
    let attack_name = attack.name.clone();
    let mut clash = false;
    let d = with_entity(level, &area, EntityKind::Enemy, enemy, |enc| {
        if let Encounter::Enemy(e) = enc {
            if e.attacks.iter().any(|a| same_name(&a.name, &attack.name)) {
                clash = true;
            } else {
                e.attacks.push(attack);
            }
        }
    });
    if clash {
        return Err(format!(
            "parameter 'name': enemy '{enemy}' already has an attack named '{attack_name}'"
        ));
    }
    Ok((
        d,
        format!("Added attack '{attack_name}' to enemy '{enemy}'."),
    ))
}
