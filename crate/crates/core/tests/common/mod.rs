//! Test-side level generator and a tiny scripted backend. Independent of the
//! crate's own construction helpers.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::Mutex;

use freyr_core::backend::count_prompt_tokens;
use freyr_core::dungeon::{Attack, Corridor, Encounter, Enemy, Room, Trap, Treasure};
use freyr_core::{
    BackendError, ChatBackend, Completion, Dungeon, Message, Role, RoleConfig, ToolReply,
    UsageRecord,
};

/// splitmix64
pub struct Rng(pub u64);

impl Rng {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            (self.next() % n as u64) as usize
        }
    }

    pub fn chance(&mut self, pct: u64) -> bool {
        self.next() % 100 < pct
    }
}

const CITIES: [&str; 10] = [
    "Rome",
    "Paris",
    "Barcelona",
    "Atlantis",
    "Hell",
    "Oslo",
    "Vienna",
    "Lisbon",
    "Prague",
    "Dublin",
];

pub fn enemy(rng: &mut Rng, name: String) -> Enemy {
    let attacks = (0..rng.below(3))
        .map(|i| Attack {
            name: format!("Strike {i}"),
            description: "hits".into(),
            damage: rng.below(20) as f64 / 2.0,
        })
        .collect();
    Enemy {
        name,
        description: "a foe".into(),
        species: "goblin".into(),
        health: 1 + rng.below(200) as u32,
        attacks,
    }
}

pub fn encounter(rng: &mut Rng, name: String) -> Encounter {
    match rng.below(3) {
        0 => Encounter::Enemy(enemy(rng, name)),
        1 => Encounter::Trap(Trap {
            name,
            description: "snaps".into(),
            effect: "bleed".into(),
            damage: rng.below(9) as f64,
        }),
        _ => Encounter::Treasure(Treasure {
            name,
            description: "box".into(),
            loot: "gold".into(),
        }),
    }
}

/// A domain-valid level with up to 8 rooms.
pub fn valid_dungeon(rng: &mut Rng) -> Dungeon {
    let n = rng.below(9);
    let mut pool: Vec<&str> = CITIES.to_vec();
    let mut d = Dungeon::new(format!("level {}", rng.below(100)));
    for _ in 0..n {
        let name = pool.remove(rng.below(pool.len()));
        let mut room = Room::new(name, format!("{name} by night"));
        for i in 0..rng.below(5) {
            room.enemies.push(enemy(rng, format!("{name} Guard {i}")));
        }
        if rng.chance(40) {
            room.treasures.push(Treasure {
                name: format!("{name} Chest"),
                description: "oak".into(),
                loot: "map".into(),
            });
        }
        d.rooms.push(room);
    }
    let degree = |d: &Dungeon, r: &str| d.corridors.iter().filter(|c| c.touches(r)).count();
    for i in 1..n {
        let choices: Vec<usize> = (0..i)
            .filter(|j| degree(&d, &d.rooms[*j].name) < 4)
            .collect();
        let j = choices[rng.below(choices.len())];
        let (a, b) = (d.rooms[j].name.clone(), d.rooms[i].name.clone());
        d.corridors.push(corridor(rng, &a, &b));
    }
    for _ in 0..rng.below(3) {
        if n < 2 {
            break;
        }
        let (i, j) = (rng.below(n), rng.below(n));
        let (a, b) = (d.rooms[i].name.clone(), d.rooms[j].name.clone());
        if i != j && d.corridor(&a, &b).is_none() && degree(&d, &a) < 4 && degree(&d, &b) < 4 {
            d.corridors.push(corridor(rng, &a, &b));
        }
    }
    d
}

pub fn corridor(rng: &mut Rng, a: &str, b: &str) -> Corridor {
    let mut c = Corridor::new(a, b, 1 + rng.below(6) as u32);
    for (k, cell) in c.cells.iter_mut().enumerate() {
        if rng.chance(30) {
            *cell = Some(encounter(rng, format!("{a}-{b} thing {k}")));
        }
    }
    c
}

/// Small random edit of a level; the result may or may not be valid.
pub fn mutate(rng: &mut Rng, d: &Dungeon) -> Dungeon {
    let mut out = d.clone();
    for _ in 0..1 + rng.below(3) {
        match rng.below(8) {
            0 if !out.rooms.is_empty() => {
                let i = rng.below(out.rooms.len());
                out.rooms[i].description.push_str(" (redone)");
            }
            1 if !out.rooms.is_empty() => {
                let i = rng.below(out.rooms.len());
                let name = format!("Enemy {}", rng.below(1000));
                let e = enemy(rng, name);
                out.rooms[i].enemies.push(e);
            }
            2 => {
                if let Some(r) = out.rooms.iter_mut().find(|r| !r.enemies.is_empty()) {
                    r.enemies[0].health += 1 + rng.below(50) as u32;
                }
            }
            3 => {
                if let Some(r) = out.rooms.iter_mut().find(|r| !r.enemies.is_empty()) {
                    r.enemies.remove(0);
                }
            }
            4 if !out.corridors.is_empty() => {
                let i = rng.below(out.corridors.len());
                let c = &mut out.corridors[i];
                let k = rng.below(c.cells.len());
                let name = format!("Thing {}", rng.below(1000));
                c.cells[k] = if c.cells[k].is_some() {
                    None
                } else {
                    Some(encounter(rng, name))
                };
            }
            5 if !out.rooms.is_empty() => {
                let i = rng.below(out.rooms.len());
                let old = out.rooms[i].name.clone();
                let new = format!("{old} Nova");
                out.rooms[i].name = new.clone();
                for c in &mut out.corridors {
                    if c.from == old {
                        c.from = new.clone();
                    }
                    if c.to == old {
                        c.to = new.clone();
                    }
                }
            }
            6 => {
                if let Some(r) = out.rooms.iter_mut().find(|r| !r.enemies.is_empty()) {
                    r.enemies[0].attacks.push(Attack {
                        name: "Bite".into(),
                        description: "ow".into(),
                        damage: 3.0,
                    });
                }
            }
            _ => {
                if let Some(c) = out.corridors.last_mut() {
                    c.length += 1;
                    c.cells.push(None);
                }
            }
        }
    }
    out
}

/// FIFO replies; records every prompt it was shown. Usage counts come from
/// the fallback tokenizer, time is a fixed 0.05 s per call.
#[derive(Default)]
pub struct Script {
    pub replies: Mutex<VecDeque<Reply>>,
    pub seen: Mutex<Vec<(Role, Vec<Message>, bool)>>,
}

pub enum Reply {
    Text(&'static str),
    Calls(&'static str),
    Malformed,
    Down,
}

impl Script {
    pub fn new(replies: Vec<Reply>) -> Self {
        Self {
            replies: Mutex::new(replies.into()),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn texts(replies: &[&'static str]) -> Self {
        Self::new(replies.iter().map(|r| Reply::Text(r)).collect())
    }

    pub fn prompts(&self) -> Vec<(Role, Vec<Message>, bool)> {
        self.seen.lock().unwrap().clone()
    }

    fn pop(
        &self,
        cfg: &RoleConfig,
        messages: &[Message],
        tools: bool,
    ) -> Result<Reply, BackendError> {
        self.seen
            .lock()
            .unwrap()
            .push((cfg.role, messages.to_vec(), tools));
        self.replies
            .lock()
            .unwrap()
            .pop_front()
            .ok_or(BackendError::ScriptExhausted(cfg.role))
    }
}

fn usage(messages: &[Message], schema: Option<&str>, out: &str) -> UsageRecord {
    UsageRecord::new(
        count_prompt_tokens(messages, schema),
        freyr_core::count_tokens(out),
        0.05,
    )
}

impl ChatBackend for Script {
    fn complete(&self, cfg: &RoleConfig, messages: &[Message]) -> Result<Completion, BackendError> {
        match self.pop(cfg, messages, false)? {
            Reply::Text(t) => Ok(Completion {
                text: t.into(),
                usage: usage(messages, None, t),
            }),
            Reply::Down => Err(BackendError::Unreachable("connection refused".into())),
            _ => panic!("tool reply scripted for a plain call"),
        }
    }

    fn complete_with_tools(
        &self,
        cfg: &RoleConfig,
        messages: &[Message],
        schema: &str,
    ) -> Result<(ToolReply, UsageRecord), BackendError> {
        match self.pop(cfg, messages, true)? {
            Reply::Text(t) => Ok((ToolReply::Text(t.into()), usage(messages, Some(schema), t))),
            Reply::Calls(json) => Ok((
                ToolReply::Calls(serde_json::from_str(json).unwrap()),
                usage(messages, Some(schema), json),
            )),
            Reply::Malformed => Err(BackendError::MalformedToolCall {
                detail: "arguments for add_enemy are a string, not an object".into(),
                usage: usage(messages, Some(schema), "\"oops\""),
            }),
            Reply::Down => Err(BackendError::Unreachable("connection refused".into())),
        }
    }
}

pub fn three_cities() -> Dungeon {
    let mut d = Dungeon::new("European tour");
    for c in ["Rome", "Paris", "Barcelona"] {
        d.rooms.push(Room::new(c, format!("A room set in {c}.")));
    }
    d.corridors.push(Corridor::new("Rome", "Paris", 4));
    d.corridors.push(Corridor::new("Paris", "Barcelona", 4));
    d
}
