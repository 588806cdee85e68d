//! Structural diff between two levels at entity-name granularity.
//!
//! Added and removed rooms, corridors and enemies are reported as single
//! entries carrying their whole subtree. Entities present on both sides
//! produce a `modified` entry listing only their own changed scalar fields,
//! and their children are diffed recursively. A rename is a removal plus an
//! addition.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{corridor_key, Attack, Corridor, Dungeon, Encounter, Enemy, Room, Trap, Treasure};
use crate::text::{name_key, same_name};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Level,
    Room,
    Corridor,
    Enemy,
    Trap,
    Treasure,
    Attack,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Level => "level",
            EntityKind::Room => "room",
            EntityKind::Corridor => "corridor",
            EntityKind::Enemy => "enemy",
            EntityKind::Trap => "trap",
            EntityKind::Treasure => "treasure",
            EntityKind::Attack => "attack",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The room or corridor an entity lives in. Corridor endpoints are stored in
/// canonical (name-key) order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Container {
    Level,
    Room { name: String },
    Corridor { a: String, b: String },
}

impl Container {
    pub fn corridor(x: &str, y: &str) -> Self {
        if name_key(x) <= name_key(y) {
            Container::Corridor {
                a: x.into(),
                b: y.into(),
            }
        } else {
            Container::Corridor {
                a: y.into(),
                b: x.into(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaPath {
    pub container: Container,
    /// Set for attacks: the enemy that owns them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enemy: Option<String>,
}

impl AreaPath {
    pub const LEVEL: AreaPath = AreaPath {
        container: Container::Level,
        enemy: None,
    };

    fn of(container: Container) -> Self {
        Self {
            container,
            enemy: None,
        }
    }

    fn with_enemy(&self, enemy: &str) -> Self {
        Self {
            container: self.container.clone(),
            enemy: Some(enemy.into()),
        }
    }
}

impl fmt::Display for AreaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.container {
            Container::Level => f.write_str("level")?,
            Container::Room { name } => write!(f, "room:{name}")?,
            Container::Corridor { a, b } => write!(f, "corridor:{a}<->{b}")?,
        }
        if let Some(e) = &self.enemy {
            write!(f, "/enemy:{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum EntityValue {
    Level(String),
    Room(Room),
    Corridor(Corridor),
    Enemy(Enemy),
    Trap(Trap),
    Treasure(Treasure),
    Attack(Attack),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub area: AreaPath,
    pub kind: EntityKind,
    pub name: String,
    /// Changed scalar fields; only populated for `modified` entries.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub fields: BTreeSet<String>,
    /// Corridor cell index (after the edit for added/modified, before for removed).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<usize>,
    /// Entity value: after-state for added/modified, before-state for removed.
    pub value: EntityValue,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EditDiff {
    pub added: Vec<DiffEntry>,
    pub removed: Vec<DiffEntry>,
    pub modified: Vec<DiffEntry>,
}

impl EditDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.modified.is_empty()
    }

    pub fn len(&self) -> usize {
        self.added.len() + self.removed.len() + self.modified.len()
    }
}

pub fn diff(before: &Dungeon, after: &Dungeon) -> EditDiff {
    let mut out = EditDiff::default();
    if before.name != after.name {
        out.modified.push(DiffEntry {
            area: AreaPath::LEVEL,
            kind: EntityKind::Level,
            name: after.name.clone(),
            fields: field_set(&["name"]),
            cell: None,
            value: EntityValue::Level(after.name.clone()),
        });
    }

    let before_rooms = keyed(before.rooms.iter(), |r| name_key(&r.name));
    let after_rooms = keyed(after.rooms.iter(), |r| name_key(&r.name));
    for (key, b) in &before_rooms {
        match after_rooms.get(key) {
            None => out.removed.push(room_entry(b)),
            Some(a) => {
                let mut fields = BTreeSet::new();
                if b.name != a.name {
                    fields.insert("name".to_string());
                }
                if b.description != a.description {
                    fields.insert("description".to_string());
                }
                if !fields.is_empty() {
                    let mut e = room_entry(a);
                    e.fields = fields;
                    out.modified.push(e);
                }
                let area = AreaPath::of(Container::Room {
                    name: a.name.clone(),
                });
                diff_items(&mut out, &area, &room_items(b), &room_items(a));
            }
        }
    }
    for (key, a) in &after_rooms {
        if !before_rooms.contains_key(key) {
            out.added.push(room_entry(a));
        }
    }

    let before_cor = keyed(before.corridors.iter(), |c| c.key());
    let after_cor = keyed(after.corridors.iter(), |c| c.key());
    for (key, b) in &before_cor {
        match after_cor.get(key) {
            None => out.removed.push(corridor_entry(b)),
            Some(a) => {
                let mut fields = BTreeSet::new();
                if b.from != a.from {
                    fields.insert("from".to_string());
                }
                if b.to != a.to {
                    fields.insert("to".to_string());
                }
                if b.length != a.length {
                    fields.insert("length".to_string());
                }
                if !fields.is_empty() {
                    let mut e = corridor_entry(a);
                    e.fields = fields;
                    out.modified.push(e);
                }
                let area = AreaPath::of(Container::corridor(&a.from, &a.to));
                diff_items(&mut out, &area, &corridor_items(b), &corridor_items(a));
            }
        }
    }
    for (key, a) in &after_cor {
        if !before_cor.contains_key(key) {
            out.added.push(corridor_entry(a));
        }
    }
    out
}

/// Key each item by `(key, occurrence)` so duplicated names in an invalid
/// level still pair up deterministically.
fn keyed<'a, T, K: Ord + Clone>(
    items: impl Iterator<Item = &'a T>,
    key: impl Fn(&T) -> K,
) -> BTreeMap<(K, usize), &'a T>
where
    T: 'a,
{
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for item in items {
        let k = key(item);
        let n = counts.entry(k.clone()).or_insert(0);
        out.insert((k, *n), item);
        *n += 1;
    }
    out
}

fn field_set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn room_entry(r: &Room) -> DiffEntry {
    DiffEntry {
        area: AreaPath::LEVEL,
        kind: EntityKind::Room,
        name: r.name.clone(),
        fields: BTreeSet::new(),
        cell: None,
        value: EntityValue::Room(r.clone()),
    }
}

fn corridor_entry(c: &Corridor) -> DiffEntry {
    let Container::Corridor { a, b } = Container::corridor(&c.from, &c.to) else {
        unreachable!()
    };
    DiffEntry {
        area: AreaPath::LEVEL,
        kind: EntityKind::Corridor,
        name: format!("{a}<->{b}"),
        fields: BTreeSet::new(),
        cell: None,
        value: EntityValue::Corridor(c.clone()),
    }
}

#[derive(Clone, Copy)]
enum ItemRef<'a> {
    Enemy(&'a Enemy),
    Trap(&'a Trap),
    Treasure(&'a Treasure),
}

#[derive(Clone, Copy)]
struct Item<'a> {
    item: ItemRef<'a>,
    cell: Option<usize>,
}

impl<'a> Item<'a> {
    fn name(&self) -> &'a str {
        match self.item {
            ItemRef::Enemy(e) => &e.name,
            ItemRef::Trap(t) => &t.name,
            ItemRef::Treasure(t) => &t.name,
        }
    }

    fn kind(&self) -> EntityKind {
        match self.item {
            ItemRef::Enemy(_) => EntityKind::Enemy,
            ItemRef::Trap(_) => EntityKind::Trap,
            ItemRef::Treasure(_) => EntityKind::Treasure,
        }
    }

    fn value(&self) -> EntityValue {
        match self.item {
            ItemRef::Enemy(e) => EntityValue::Enemy(e.clone()),
            ItemRef::Trap(t) => EntityValue::Trap(t.clone()),
            ItemRef::Treasure(t) => EntityValue::Treasure(t.clone()),
        }
    }

    fn entry(&self, area: &AreaPath) -> DiffEntry {
        DiffEntry {
            area: area.clone(),
            kind: self.kind(),
            name: self.name().into(),
            fields: BTreeSet::new(),
            cell: self.cell,
            value: self.value(),
        }
    }
}

fn room_items(r: &Room) -> Vec<Item<'_>> {
    r.enemies
        .iter()
        .map(|e| Item {
            item: ItemRef::Enemy(e),
            cell: None,
        })
        .chain(r.treasures.iter().map(|t| Item {
            item: ItemRef::Treasure(t),
            cell: None,
        }))
        .collect()
}

fn corridor_items(c: &Corridor) -> Vec<Item<'_>> {
    c.cells
        .iter()
        .enumerate()
        .filter_map(|(i, cell)| {
            cell.as_ref().map(|enc| Item {
                item: match enc {
                    Encounter::Enemy(e) => ItemRef::Enemy(e),
                    Encounter::Trap(t) => ItemRef::Trap(t),
                    Encounter::Treasure(t) => ItemRef::Treasure(t),
                },
                cell: Some(i),
            })
        })
        .collect()
}

fn diff_items(out: &mut EditDiff, area: &AreaPath, before: &[Item<'_>], after: &[Item<'_>]) {
    let key = |i: &Item<'_>| (name_key(i.name()), i.kind());
    let b = keyed(before.iter(), key);
    let a = keyed(after.iter(), key);
    for (k, bi) in &b {
        match a.get(k) {
            None => out.removed.push(bi.entry(area)),
            Some(ai) => {
                let mut fields = BTreeSet::new();
                if bi.cell != ai.cell {
                    fields.insert("cell".to_string());
                }
                if bi.name() != ai.name() {
                    fields.insert("name".to_string());
                }
                match (bi.item, ai.item) {
                    (ItemRef::Enemy(x), ItemRef::Enemy(y)) => {
                        if x.description != y.description {
                            fields.insert("description".to_string());
                        }
                        if x.species != y.species {
                            fields.insert("species".to_string());
                        }
                        if x.health != y.health {
                            fields.insert("health".to_string());
                        }
                        diff_attacks(out, &area.with_enemy(&y.name), x, y);
                    }
                    (ItemRef::Trap(x), ItemRef::Trap(y)) => {
                        if x.description != y.description {
                            fields.insert("description".to_string());
                        }
                        if x.effect != y.effect {
                            fields.insert("effect".to_string());
                        }
                        if x.damage.to_bits() != y.damage.to_bits() {
                            fields.insert("damage".to_string());
                        }
                    }
                    (ItemRef::Treasure(x), ItemRef::Treasure(y)) => {
                        if x.description != y.description {
                            fields.insert("description".to_string());
                        }
                        if x.loot != y.loot {
                            fields.insert("loot".to_string());
                        }
                    }
                    _ => unreachable!("keys include the kind"),
                }
                if !fields.is_empty() {
                    let mut e = ai.entry(area);
                    e.fields = fields;
                    out.modified.push(e);
                }
            }
        }
    }
    for (k, ai) in &a {
        if !b.contains_key(k) {
            out.added.push(ai.entry(area));
        }
    }
}

fn diff_attacks(out: &mut EditDiff, area: &AreaPath, before: &Enemy, after: &Enemy) {
    let entry = |a: &Attack| DiffEntry {
        area: area.clone(),
        kind: EntityKind::Attack,
        name: a.name.clone(),
        fields: BTreeSet::new(),
        cell: None,
        value: EntityValue::Attack(a.clone()),
    };
    let b = keyed(before.attacks.iter(), |a| name_key(&a.name));
    let a = keyed(after.attacks.iter(), |a| name_key(&a.name));
    for (k, x) in &b {
        match a.get(k) {
            None => out.removed.push(entry(x)),
            Some(y) => {
                let mut fields = BTreeSet::new();
                if x.name != y.name {
                    fields.insert("name".to_string());
                }
                if x.description != y.description {
                    fields.insert("description".to_string());
                }
                if x.damage.to_bits() != y.damage.to_bits() {
                    fields.insert("damage".to_string());
                }
                if !fields.is_empty() {
                    let mut e = entry(y);
                    e.fields = fields;
                    out.modified.push(e);
                }
            }
        }
    }
    for (k, y) in &a {
        if !b.contains_key(k) {
            out.added.push(entry(y));
        }
    }
}

// ---------------------------------------------------------------------------
// Replay

enum Slot<'a> {
    Room(&'a mut Room),
    Corridor(&'a mut Corridor),
}

fn container_mut<'a>(d: &'a mut Dungeon, c: &Container) -> Option<Slot<'a>> {
    match c {
        Container::Level => None,
        Container::Room { name } => d.room_mut(name).map(Slot::Room),
        Container::Corridor { a, b } => d.corridor_mut(a, b).map(Slot::Corridor),
    }
}

fn enemy_mut<'a>(d: &'a mut Dungeon, area: &AreaPath) -> Option<&'a mut Enemy> {
    let name = area.enemy.as_deref()?;
    match container_mut(d, &area.container)? {
        Slot::Room(r) => r.enemies.iter_mut().find(|e| same_name(&e.name, name)),
        Slot::Corridor(c) => c.cells.iter_mut().flatten().find_map(|enc| match enc {
            Encounter::Enemy(e) if same_name(&e.name, name) => Some(e),
            _ => None,
        }),
    }
}

fn take_item(d: &mut Dungeon, area: &AreaPath, kind: EntityKind, name: &str) -> Option<Encounter> {
    match container_mut(d, &area.container)? {
        Slot::Room(r) => match kind {
            EntityKind::Enemy => {
                let i = r.enemies.iter().position(|e| same_name(&e.name, name))?;
                Some(Encounter::Enemy(r.enemies.remove(i)))
            }
            EntityKind::Treasure => {
                let i = r.treasures.iter().position(|t| same_name(&t.name, name))?;
                Some(Encounter::Treasure(r.treasures.remove(i)))
            }
            _ => None,
        },
        Slot::Corridor(c) => c
            .cells
            .iter_mut()
            .find(|cell| {
                cell.as_ref()
                    .is_some_and(|e| e.kind() == kind && same_name(e.name(), name))
            })
            .and_then(Option::take),
    }
}

fn put_item(d: &mut Dungeon, area: &AreaPath, cell: Option<usize>, enc: Encounter) {
    match container_mut(d, &area.container) {
        Some(Slot::Room(r)) => match enc {
            Encounter::Enemy(e) => r.enemies.push(e),
            Encounter::Treasure(t) => r.treasures.push(t),
            Encounter::Trap(_) => {}
        },
        Some(Slot::Corridor(c)) => {
            if let Some(slot) = cell.and_then(|i| c.cells.get_mut(i)) {
                *slot = Some(enc);
            }
        }
        None => {}
    }
}

fn to_encounter(v: &EntityValue) -> Option<Encounter> {
    match v {
        EntityValue::Enemy(e) => Some(Encounter::Enemy(e.clone())),
        EntityValue::Trap(t) => Some(Encounter::Trap(t.clone())),
        EntityValue::Treasure(t) => Some(Encounter::Treasure(t.clone())),
        _ => None,
    }
}

impl EditDiff {
    /// Replays the diff on `level`. For `diff(a, b).apply(a)` the result has
    /// the same canonical form as `b` whenever `a` and `b` are domain-valid.
    pub fn apply(&self, level: &Dungeon) -> Dungeon {
        let mut d = level.clone();

        for e in &self.removed {
            match e.kind {
                EntityKind::Level => {}
                EntityKind::Room => {
                    if let Some(i) = d.room_index(&e.name) {
                        d.rooms.remove(i);
                    }
                }
                EntityKind::Corridor => {
                    if let EntityValue::Corridor(c) = &e.value {
                        let key = corridor_key(&c.from, &c.to);
                        if let Some(i) = d.corridors.iter().position(|x| x.key() == key) {
                            d.corridors.remove(i);
                        }
                    }
                }
                EntityKind::Attack => {
                    if let Some(en) = enemy_mut(&mut d, &e.area) {
                        en.attacks.retain(|a| !same_name(&a.name, &e.name));
                    }
                }
                kind => {
                    take_item(&mut d, &e.area, kind, &e.name);
                }
            }
        }

        // Containers first so later lookups and cell indices see the new shape.
        for e in &self.modified {
            match (&e.kind, &e.value) {
                (EntityKind::Level, EntityValue::Level(name)) => d.name = name.clone(),
                (EntityKind::Room, EntityValue::Room(after)) => {
                    if let Some(r) = d.room_mut(&after.name) {
                        if e.fields.contains("name") {
                            r.name = after.name.clone();
                        }
                        if e.fields.contains("description") {
                            r.description = after.description.clone();
                        }
                    }
                }
                (EntityKind::Corridor, EntityValue::Corridor(after)) => {
                    if let Some(c) = d.corridor_mut(&after.from, &after.to) {
                        c.from = after.from.clone();
                        c.to = after.to.clone();
                        if c.length != after.length {
                            c.length = after.length;
                            c.cells.resize(after.length as usize, None);
                        }
                    }
                }
                _ => {}
            }
        }

        let mut moved = Vec::new();
        for e in &self.modified {
            match (&e.kind, &e.value) {
                (EntityKind::Enemy | EntityKind::Trap | EntityKind::Treasure, value) => {
                    let Some(after) = to_encounter(value) else {
                        continue;
                    };
                    if e.fields.contains("cell") {
                        if let Some(mut cur) = take_item(&mut d, &e.area, e.kind, &e.name) {
                            merge_fields(&mut cur, &after, &e.fields);
                            moved.push((e.area.clone(), e.cell, cur));
                        }
                    } else {
                        modify_in_place(&mut d, &e.area, e.kind, &e.name, &after, &e.fields);
                    }
                }
                (EntityKind::Attack, EntityValue::Attack(after)) => {
                    if let Some(en) = enemy_mut(&mut d, &e.area) {
                        if let Some(a) = en
                            .attacks
                            .iter_mut()
                            .find(|a| same_name(&a.name, &after.name))
                        {
                            if e.fields.contains("name") {
                                a.name = after.name.clone();
                            }
                            if e.fields.contains("description") {
                                a.description = after.description.clone();
                            }
                            if e.fields.contains("damage") {
                                a.damage = after.damage;
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        for (area, cell, enc) in moved {
            put_item(&mut d, &area, cell, enc);
        }

        for e in &self.added {
            match (&e.kind, &e.value) {
                (EntityKind::Room, EntityValue::Room(r)) => d.rooms.push(r.clone()),
                (EntityKind::Corridor, EntityValue::Corridor(c)) => d.corridors.push(c.clone()),
                (EntityKind::Attack, EntityValue::Attack(a)) => {
                    if let Some(en) = enemy_mut(&mut d, &e.area) {
                        en.attacks.push(a.clone());
                    }
                }
                (_, value) => {
                    if let Some(enc) = to_encounter(value) {
                        put_item(&mut d, &e.area, e.cell, enc);
                    }
                }
            }
        }
        d
    }
}

fn modify_in_place(
    d: &mut Dungeon,
    area: &AreaPath,
    kind: EntityKind,
    name: &str,
    after: &Encounter,
    fields: &BTreeSet<String>,
) {
    match container_mut(d, &area.container) {
        Some(Slot::Room(r)) => match (kind, after) {
            (EntityKind::Enemy, Encounter::Enemy(a)) => {
                if let Some(e) = r.enemies.iter_mut().find(|e| same_name(&e.name, name)) {
                    merge_enemy(e, a, fields);
                }
            }
            (EntityKind::Treasure, Encounter::Treasure(a)) => {
                if let Some(t) = r.treasures.iter_mut().find(|t| same_name(&t.name, name)) {
                    merge_treasure(t, a, fields);
                }
            }
            _ => {}
        },
        Some(Slot::Corridor(c)) => {
            if let Some(cur) = c
                .cells
                .iter_mut()
                .flatten()
                .find(|e| e.kind() == kind && same_name(e.name(), name))
            {
                merge_fields(cur, after, fields);
            }
        }
        None => {}
    }
}

fn merge_fields(cur: &mut Encounter, after: &Encounter, fields: &BTreeSet<String>) {
    match (cur, after) {
        (Encounter::Enemy(e), Encounter::Enemy(a)) => merge_enemy(e, a, fields),
        (Encounter::Trap(t), Encounter::Trap(a)) => {
            if fields.contains("name") {
                t.name = a.name.clone();
            }
            if fields.contains("description") {
                t.description = a.description.clone();
            }
            if fields.contains("effect") {
                t.effect = a.effect.clone();
            }
            if fields.contains("damage") {
                t.damage = a.damage;
            }
        }
        (Encounter::Treasure(t), Encounter::Treasure(a)) => merge_treasure(t, a, fields),
        _ => {}
    }
}

fn merge_enemy(e: &mut Enemy, a: &Enemy, fields: &BTreeSet<String>) {
    if fields.contains("name") {
        e.name = a.name.clone();
    }
    if fields.contains("description") {
        e.description = a.description.clone();
    }
    if fields.contains("species") {
        e.species = a.species.clone();
    }
    if fields.contains("health") {
        e.health = a.health;
    }
}

fn merge_treasure(t: &mut Treasure, a: &Treasure, fields: &BTreeSet<String>) {
    if fields.contains("name") {
        t.name = a.name.clone();
    }
    if fields.contains("description") {
        t.description = a.description.clone();
    }
    if fields.contains("loot") {
        t.loot = a.loot.clone();
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn identity_is_empty() {
        let d = three_cities();
        assert!(diff(&d, &d).is_empty());
    }

    #[test]
    fn goblin_in_rome() {
        let before = three_cities();
        let mut after = before.clone();
        after.rooms[0].enemies.push(enemy("Goblin Archer", 10));
        let d = diff(&before, &after);
        assert_eq!(d.len(), 1);
        let e = &d.added[0];
        assert_eq!(e.kind, EntityKind::Enemy);
        assert_eq!(e.name, "Goblin Archer");
        assert_eq!(e.area.to_string(), "room:Rome");
    }

    #[test]
    fn health_change_only_touches_health() {
        let mut before = three_cities();
        before.rooms[2].enemies.push(enemy("Capybara", 100));
        let mut after = before.clone();
        after.rooms[2].enemies[0].health = 1000;
        let d = diff(&before, &after);
        assert!(d.added.is_empty() && d.removed.is_empty());
        assert_eq!(d.modified.len(), 1);
        // Field-by-field oracle.
        let (x, y) = (&before.rooms[2].enemies[0], &after.rooms[2].enemies[0]);
        let mut expected = BTreeSet::new();
        if x.description != y.description {
            expected.insert("description".to_string());
        }
        if x.species != y.species {
            expected.insert("species".to_string());
        }
        if x.health != y.health {
            expected.insert("health".to_string());
        }
        assert_eq!(d.modified[0].fields, expected);
    }

    #[test]
    fn inverse_swaps_added_and_removed() {
        let before = three_cities();
        let mut after = before.clone();
        after.rooms.remove(2);
        after.corridors.remove(1);
        after.rooms[0].treasures.push(Treasure {
            name: "Chest".into(),
            description: "".into(),
            loot: "map".into(),
        });
        let fwd = diff(&before, &after);
        let back = diff(&after, &before);
        let names = |v: &Vec<DiffEntry>| -> Vec<(EntityKind, String)> {
            let mut x: Vec<_> = v.iter().map(|e| (e.kind, e.name.clone())).collect();
            x.sort();
            x
        };
        assert_eq!(names(&fwd.added), names(&back.removed));
        assert_eq!(names(&fwd.removed), names(&back.added));
        assert_eq!(fwd.apply(&before).canonical(), after.canonical());
        assert_eq!(back.apply(&after).canonical(), before.canonical());
    }

    #[test]
    fn corridor_cell_moves_replay() {
        let mut before = three_cities();
        let trap = Trap {
            name: "Net".into(),
            description: "".into(),
            effect: "stuck".into(),
            damage: 0.0,
        };
        before.corridors[0].cells[0] = Some(Encounter::Trap(trap.clone()));
        let mut after = before.clone();
        after.corridors[0].cells[0] = None;
        after.corridors[0].cells[3] = Some(Encounter::Trap(Trap {
            damage: 2.0,
            ..trap
        }));
        after.corridors[0].length = 6;
        after.corridors[0].cells.resize(6, None);
        let d = diff(&before, &after);
        assert_eq!(d.modified.len(), 2);
        assert_eq!(d.apply(&before).canonical(), after.canonical());
    }
}
