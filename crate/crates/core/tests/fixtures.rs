mod common;

use std::collections::BTreeSet;

use dgg::{classify, fixture, parse_game, Game, Outcome, Situation};

fn load(name: &str) -> Game {
    let path = format!("{}/games/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_game(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn arcs(game: &Game) -> BTreeSet<(String, String)> {
    game.moves()
        .map(|(f, t)| (game.name(f).to_string(), game.name(t).to_string()))
        .collect()
}

fn prefs(game: &Game) -> Vec<String> {
    game.player_ids()
        .map(|p| {
            game.preference(p)
                .iter()
                .map(|&o| game.outcome_name(o).to_string())
                .collect::<Vec<_>>()
                .join(">")
        })
        .collect()
}

fn controllers(game: &Game) -> Vec<(String, u32)> {
    game.internals()
        .map(|p| (game.name(p).to_string(), game.controller(p).unwrap().get()))
        .collect()
}

#[test]
fn shipped_files_equal_fixtures() {
    for name in ["fig1", "fig2", "fig2-terminal"] {
        assert_eq!(
            load(&format!("{name}.dgg")),
            fixture(name).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn fig1_model() {
    let g = fixture("fig1").unwrap();
    let expected: BTreeSet<(String, String)> = [
        ("p1", "p2"),
        ("p1", "p4"),
        ("p2", "a"),
        ("p2", "p3"),
        ("p3", "b"),
        ("p3", "p4"),
        ("p4", "p3"),
        ("p4", "c"),
    ]
    .iter()
    .map(|(f, t)| (f.to_string(), t.to_string()))
    .collect();
    assert_eq!(arcs(&g), expected);
    assert_eq!(
        controllers(&g),
        vec![
            ("p1".into(), 1),
            ("p2".into(), 2),
            ("p3".into(), 2),
            ("p4".into(), 3)
        ]
    );
    assert_eq!(prefs(&g), vec!["b>inf>a>c", "c>a>b>inf", "a>inf>c>b"]);
    assert_eq!(g.name(g.init()), "p1");
    let class = classify(&g);
    assert!(!class.is_terminal_game && !class.is_play_once);
    assert!(common::all_ne(&g).is_empty());
}

#[test]
fn fig2_model() {
    let g = fixture("fig2").unwrap();
    let expected: BTreeSet<(String, String)> = [
        ("q1", "q2"),
        ("q1", "a"),
        ("q2", "q3"),
        ("q2", "b"),
        ("q3", "q1"),
        ("q3", "c"),
    ]
    .iter()
    .map(|(f, t)| (f.to_string(), t.to_string()))
    .collect();
    assert_eq!(arcs(&g), expected);
    assert_eq!(
        controllers(&g),
        vec![("q1".into(), 1), ("q2".into(), 2), ("q3".into(), 3)]
    );
    assert_eq!(prefs(&g), vec!["b>c>inf>a", "c>a>inf>b", "a>b>inf>c"]);
    let class = classify(&g);
    assert!(class.is_play_once && !class.is_terminal_game);
    let ne = common::all_ne(&g);
    assert!(ne.iter().all(|(_, o)| *o == Outcome::Infinite));
    let cycle = Situation::from_named(&g, [("q1", "q2"), ("q2", "q3"), ("q3", "q1")]).unwrap();
    assert!(ne.iter().any(|(p, _)| *p == common::profile(&g, &cycle)));
}

#[test]
fn fig2_terminal_model() {
    let g = fixture("fig2-terminal").unwrap();
    assert_eq!(arcs(&g), arcs(&fixture("fig2").unwrap()));
    assert_eq!(prefs(&g), vec!["b>c>a>inf", "c>a>b>inf", "a>b>c>inf"]);
    assert!(classify(&g).is_terminal_game);
    assert!(common::all_ne(&g).iter().any(|(_, o)| o.is_terminal()));
}
