mod common;

use common::{three_cities, Reply, Script};
use freyr_core::baseline::run_step_tools;
use freyr_core::dungeon::diff;
use freyr_core::pipeline::{run_step, Mode};
use freyr_core::tools::render_json_schema;
use freyr_core::{PipelineConfig, Role, StepOutput, ToolRegistry};

const GOBLIN_CALL: &str = r#"[{"name":"add_enemy","arguments":{"room":"Rome","name":"Goblin Archer","description":"A wiry goblin with a short bow.","species":"goblin","health":10}}]"#;
const GOBLIN_PARAMS: &str = "- room: Rome\n- name: Goblin Archer\n- description: A wiry goblin with a short bow.\n- species: goblin\n- health: 10";

fn tools(script: &Script) -> StepOutput {
    run_step_tools(
        &PipelineConfig::default(),
        &ToolRegistry::standard(),
        script,
        &[],
        "Add a goblin archer in the first room",
        &three_cities(),
        &mut |_| {},
    )
    .unwrap()
}

#[test]
fn same_diff_as_freyr_happy_path() {
    let script = Script::new(vec![
        Reply::Calls(GOBLIN_CALL),
        Reply::Text("Added a goblin archer to Rome."),
    ]);
    let out = tools(&script);
    assert_eq!(out.trace.mode, Mode::Tools);
    assert_eq!(out.trace.calls.len(), 2);
    assert_eq!(out.response, "Added a goblin archer to Rome.");

    let freyr = run_step(
        &PipelineConfig::default(),
        &ToolRegistry::standard(),
        &Script::texts(&["add_enemy", GOBLIN_PARAMS, "Done."]),
        &[],
        "Add a goblin archer in the first room",
        &three_cities(),
        &mut |_| {},
    )
    .unwrap();
    assert_eq!(
        diff(&three_cities(), &out.level),
        diff(&three_cities(), &freyr.level)
    );
    // Both traces have the same shape.
    let a = serde_json::to_value(&out.trace).unwrap();
    let b = serde_json::to_value(&freyr.trace).unwrap();
    let keys = |v: &serde_json::Value| v.as_object().unwrap().keys().cloned().collect::<Vec<_>>();
    assert_eq!(keys(&a), keys(&b));
}

#[test]
fn schema_is_sent_verbatim_on_every_query() {
    let schema = render_json_schema(&ToolRegistry::standard());
    let script = Script::new(vec![
        Reply::Malformed,
        Reply::Calls(GOBLIN_CALL),
        Reply::Text("ok"),
    ]);
    let out = tools(&script);
    assert_eq!(out.trace.retries(), 1);
    let prompts = script.prompts();
    assert!(prompts.iter().all(|p| p.2 && p.0 == Role::Parameters));
    // Scripted usage counts the schema: every query is at least its size.
    let schema_tokens = freyr_core::count_tokens(&schema);
    assert!(out
        .trace
        .calls
        .iter()
        .all(|c| c.usage.tokens_in >= schema_tokens));
}

#[test]
fn plain_text_leaves_level_alone() {
    let script = Script::new(vec![Reply::Text("Rome is a lovely room.")]);
    let out = tools(&script);
    assert_eq!(out.level, three_cities());
    assert_eq!(out.response, "Rome is a lovely room.");
    assert_eq!(out.trace.calls.len(), 1);
}

#[test]
fn repeated_malformed_calls_fail_but_are_accounted() {
    let script = Script::new(vec![
        Reply::Malformed,
        Reply::Malformed,
        Reply::Malformed,
        Reply::Text("Sorry."),
    ]);
    let out = tools(&script);
    assert_eq!(out.level, three_cities());
    assert_eq!(out.trace.retries(), 3);
    assert_eq!(out.trace.calls.len(), 4);
    assert!(!script.prompts()[3].2, "the final call carries no schema");
    assert_eq!(out.trace.total, out.trace.summed_usage());
    assert!(out.trace.total.wall_time > 0.0);
    assert!(out.trace.total.tokens_in > 0);
    assert!(out.trace.outputs[0].starts_with("MALFORMED_TOOL_CALL"));
}

#[test]
fn functional_errors_are_fed_back() {
    let bad = r#"[{"name":"add_enemy","arguments":{"room":"Atlantis","name":"X","description":"d","species":"s","health":3}}]"#;
    let script = Script::new(vec![
        Reply::Calls(bad),
        Reply::Calls(GOBLIN_CALL),
        Reply::Text("done"),
    ]);
    let out = tools(&script);
    assert_eq!(out.trace.retries(), 1);
    assert_eq!(out.level.rooms[0].enemies.len(), 1);
    let second = &script.prompts()[1].1;
    assert!(second
        .last()
        .unwrap()
        .content
        .contains("room 'Atlantis' does not exist"));
}

#[test]
fn freyr_reads_fewer_tokens_than_tools() {
    let tools_out = tools(&Script::new(vec![
        Reply::Calls(GOBLIN_CALL),
        Reply::Text("Added a goblin archer."),
    ]));
    let freyr_out = run_step(
        &PipelineConfig::default(),
        &ToolRegistry::standard(),
        &Script::texts(&["add_enemy", GOBLIN_PARAMS, "Added a goblin archer."]),
        &[],
        "Add a goblin archer in the first room",
        &three_cities(),
        &mut |_| {},
    )
    .unwrap();
    assert!(
        freyr_out.trace.total.tokens_in < tools_out.trace.total.tokens_in,
        "{} vs {}",
        freyr_out.trace.total.tokens_in,
        tools_out.trace.total.tokens_in
    );
}
