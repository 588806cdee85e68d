//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use freyr::suite::bundled;
use freyr::ScriptBook;
use freyr_core::bench::TestSuite;
use freyr_core::Dungeon;

pub const GOBLIN_REQUEST: &str = "Add a goblin archer in the first room";
pub const GOBLIN: &str =
    "- room: Rome\n- name: Goblin Archer\n- description: A small, agile humanoid with a bow.\n- species: goblin\n- health: 10";
pub const GOBLIN_NO_NAME: &str =
    "- room: Rome\n- description: A small, agile humanoid.\n- species: goblin\n- health: 10";
pub const MISSING_NAME: &str = "MISSING_PARAM: missing required parameter(s): name";

pub fn t5() -> (TestSuite, ScriptBook) {
    bundled("T5").expect("T5 is bundled")
}

/// Rome, Paris and Barcelona in a row, empty.
pub fn three_cities() -> Dungeon {
    t5().0.steps[1].start_level.clone()
}
