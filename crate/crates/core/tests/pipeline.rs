mod common;

use common::{three_cities, Reply, Script};
use freyr_core::dungeon::{diff, validate_domain};
use freyr_core::pipeline::{run_step, PipelineEvent};
use freyr_core::{BackendError, Message, PipelineConfig, Role, StepOutput, ToolRegistry};

const GOBLIN: &str = "- room: Rome\n- name: Goblin Archer\n- description: A wiry goblin with a short bow.\n- species: goblin\n- health: 10";
const GOBLIN_NO_NAME: &str =
    "- room: Rome\n- description: A wiry goblin.\n- species: goblin\n- health: 10";

fn run(script: &Script, message: &str) -> StepOutput {
    run_step(
        &PipelineConfig::default(),
        &ToolRegistry::standard(),
        script,
        &[],
        message,
        &three_cities(),
        &mut |_| {},
    )
    .unwrap()
}

fn roles(out: &StepOutput) -> Vec<Role> {
    out.trace.calls.iter().map(|c| c.role).collect()
}

#[test]
fn goblin_archer_happy_path() {
    let script = Script::texts(&["add_enemy", GOBLIN, "Done."]);
    let out = run(&script, "Add a goblin archer in the first room");
    assert_eq!(roles(&out), [Role::Intent, Role::Parameters, Role::Summary]);
    assert_eq!(out.response, "Done.");
    assert_eq!(out.trace.retries(), 0);
    let d = diff(&three_cities(), &out.level);
    assert_eq!(d.len(), 1);
    assert_eq!(d.added[0].area.to_string(), "room:Rome");
    assert_eq!(d.added[0].name, "Goblin Archer");
    // Transcript: the script saw exactly the three role calls, in order.
    let seen: Vec<Role> = script.prompts().iter().map(|p| p.0).collect();
    assert_eq!(seen, [Role::Intent, Role::Parameters, Role::Summary]);
    assert!(script.prompts().iter().all(|p| !p.2));
}

#[test]
fn conversation_makes_two_calls() {
    let script = Script::texts(&["conversation", "It is an empty hall in Rome."]);
    let out = run(&script, "What does the first room look like?");
    assert_eq!(roles(&out), [Role::Intent, Role::Chat]);
    assert!(out.trace.conversation);
    assert!(!out.trace.intent_fallback);
    assert_eq!(out.level, three_cities());
    assert!(out.trace.tools.is_empty());
    assert!(!out
        .trace
        .events
        .iter()
        .any(|e| matches!(e, PipelineEvent::ToolStarted { .. })));
}

#[test]
fn k_intents_make_k_plus_two_calls() {
    let zombie = |n| {
        Box::leak(format!("- room: Rome\n- name: Zombie {n}\n- description: rotten\n- species: zombie\n- health: 8").into_boxed_str())
            as &'static str
    };
    for k in 1..=4usize {
        let intents = vec!["add_enemy"; k].join(", ");
        let mut replies = vec![Reply::Text(Box::leak(intents.into_boxed_str()))];
        replies.extend((0..k).map(|i| Reply::Text(zombie(i))));
        replies.push(Reply::Text("ok"));
        let script = Script::new(replies);
        let out = run(&script, "Add some zombies");
        assert_eq!(out.trace.calls.len(), k + 2, "k={k}");
        assert_eq!(out.level.rooms[0].enemies.len(), k);
        assert!(script.replies.lock().unwrap().is_empty());
    }
}

#[test]
fn retries_carry_feedback_verbatim() {
    for failures in 0..=3usize {
        let mut replies = vec![Reply::Text("add_enemy")];
        replies.extend((0..failures).map(|_| Reply::Text(GOBLIN_NO_NAME)));
        if failures < 3 {
            replies.push(Reply::Text(GOBLIN));
        }
        replies.push(Reply::Text("summary"));
        let script = Script::new(replies);
        let out = run(&script, "Add a goblin archer in the first room");
        let rec = &out.trace.tools[0];
        assert_eq!(rec.retries as usize, failures);
        assert_eq!(rec.ok, failures < 3);
        assert_eq!(
            out.trace.calls.len(),
            2 + failures.min(3) + usize::from(failures < 3)
        );
        for fb in &rec.feedback {
            assert_eq!(fb, "MISSING_PARAM: missing required parameter(s): name");
        }
        // Each retry's parameters prompt carries the previous error verbatim.
        let prompts = script.prompts();
        let params: Vec<_> = prompts.iter().filter(|p| p.0 == Role::Parameters).collect();
        for (i, p) in params.iter().enumerate() {
            let has = p.1[0]
                .content
                .contains("MISSING_PARAM: missing required parameter(s): name");
            assert_eq!(has, i > 0, "attempt {}", i + 1);
        }
        if failures == 3 {
            assert_eq!(out.level, three_cities());
            assert_eq!(out.trace.outputs, vec![rec.feedback[2].clone()]);
            let summary = &prompts.last().unwrap().1;
            assert!(summary[1].content.contains("MISSING_PARAM"));
        }
        assert_eq!(out.trace.total, out.trace.summed_usage());
        assert!(out.trace.total.wall_time > 0.0);
    }
}

#[test]
fn functional_error_feedback_from_tool() {
    let mut level = three_cities();
    let script = Script::texts(&[
        "add_enemy",
        "- room: Atlantis\n- name: Mermaid\n- description: d\n- species: mermaid\n- health: 5",
        "- room: Rome\n- name: Mermaid\n- description: d\n- species: mermaid\n- health: 5",
        "fine",
    ]);
    level.name = "x".into();
    let out = run_step(
        &PipelineConfig::default(),
        &ToolRegistry::standard(),
        &script,
        &[],
        "m",
        &level,
        &mut |_| {},
    )
    .unwrap();
    let rec = &out.trace.tools[0];
    assert_eq!(rec.retries, 1);
    assert!(rec.feedback[0]
        .starts_with("add_enemy failed: parameter 'room': room 'Atlantis' does not exist"));
    let second = &script.prompts()[2].1[0].content;
    assert!(second.contains(&rec.feedback[0]));
}

#[test]
fn events_follow_the_trace() {
    let script = Script::texts(&[
        "add_enemy, add_room",
        GOBLIN_NO_NAME,
        GOBLIN,
        "- name: Hell\n- description: hot\n- connect_to: Rome",
        "ok",
    ]);
    let mut live = Vec::new();
    let out = run_step(
        &PipelineConfig::default(),
        &ToolRegistry::standard(),
        &script,
        &[],
        "m",
        &three_cities(),
        &mut |e| live.push(e.name()),
    )
    .unwrap();
    assert_eq!(
        live,
        [
            "intent_detected",
            "tool_started",
            "tool_failed",
            "retry",
            "tool_started",
            "tool_succeeded",
            "tool_started",
            "tool_succeeded",
            "summary_ready"
        ]
    );
    let recorded: Vec<_> = out.trace.events.iter().map(|e| e.name()).collect();
    assert_eq!(recorded, live);
    // The second intent ran on the level edited by the first.
    assert_eq!(out.level.rooms.len(), 4);
    assert_eq!(out.level.rooms[0].enemies.len(), 1);
    assert!(validate_domain(&out.level).is_empty());
}

#[test]
fn malformed_intents_fall_back_to_chat() {
    let script = Script::texts(&[
        "destroy_world",
        "nuke",
        "add_everything",
        "Sorry, could you rephrase?",
    ]);
    let out = run(&script, "do the thing");
    assert_eq!(
        roles(&out),
        [Role::Intent, Role::Intent, Role::Intent, Role::Chat]
    );
    assert!(out.trace.intent_fallback);
    assert_eq!(out.trace.intent_feedback.len(), 3);
    assert!(out.trace.intent_feedback[0].starts_with("UNKNOWN_INTENT"));
    assert!(script.prompts()[1].1[0]
        .content
        .contains("UNKNOWN_INTENT: 'destroy_world'"));
    assert_eq!(out.level, three_cities());

    let script = Script::texts(&[
        "add_room, add_room",
        "- name: A\n- description: a\n- connect_to: Rome",
        "- name: B\n- description: b\n- connect_to: Rome",
        "ok",
    ]);
    let cfg = PipelineConfig {
        max_intents: 1,
        ..PipelineConfig::default()
    };
    let out = run_step(
        &cfg,
        &ToolRegistry::standard(),
        &script,
        &[],
        "m",
        &three_cities(),
        &mut |_| {},
    )
    .unwrap();
    assert!(out.trace.intent_feedback[0].starts_with("TOO_MANY_INTENTS"));
}

#[test]
fn transport_failure_aborts_with_partial_trace() {
    let script = Script::new(vec![Reply::Text("add_enemy"), Reply::Down]);
    let err = run_step(
        &PipelineConfig::default(),
        &ToolRegistry::standard(),
        &script,
        &[],
        "m",
        &three_cities(),
        &mut |_| {},
    )
    .unwrap_err();
    assert!(matches!(err.error, BackendError::Unreachable(_)));
    assert!(err.to_string().starts_with("PIPELINE_ABORT"));
    assert_eq!(err.trace.calls.len(), 1);
    assert_eq!(err.trace.total, err.trace.summed_usage());

    let empty = Script::texts(&[]);
    let err = run_step(
        &PipelineConfig::default(),
        &ToolRegistry::standard(),
        &empty,
        &[],
        "m",
        &three_cities(),
        &mut |_| {},
    )
    .unwrap_err();
    assert_eq!(err.error, BackendError::ScriptExhausted(Role::Intent));
}

#[test]
fn deterministic_under_script() {
    let a = run(
        &Script::texts(&["add_enemy", GOBLIN_NO_NAME, GOBLIN, "Done."]),
        "Add a goblin",
    );
    let b = run(
        &Script::texts(&["add_enemy", GOBLIN_NO_NAME, GOBLIN, "Done."]),
        "Add a goblin",
    );
    assert_eq!(a, b);
}

#[test]
fn history_reaches_the_prompts() {
    let script = Script::texts(&["conversation", "hi"]);
    let history = vec![
        Message::user("Create 3 rooms"),
        Message::assistant("Created Rome, Paris and Barcelona."),
    ];
    run_step(
        &PipelineConfig::default(),
        &ToolRegistry::standard(),
        &script,
        &history,
        "thanks",
        &three_cities(),
        &mut |_| {},
    )
    .unwrap();
    let intent = &script.prompts()[0].1;
    assert_eq!(intent.len(), 4);
    assert_eq!(intent[1].content, "Create 3 rooms");
    assert_eq!(intent[3].content, "thanks");
}
