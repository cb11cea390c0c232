//! Replays the checked-in fuzz seeds through the fuzz targets' properties.

use std::fs;
use std::path::PathBuf;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            let text = fs::read_to_string(&path).unwrap();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                text,
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn game_seeds_round_trip() {
    let mut parsed = 0;
    for (name, text) in seeds("parse_game")
        .into_iter()
        .chain(seeds("game_round_trip"))
    {
        if let Ok(game) = dgg::parse_game(&text) {
            parsed += 1;
            let printed = dgg::print_game(&game);
            assert_eq!(dgg::parse_game(&printed).unwrap(), game, "{name}");
        }
    }
    assert!(parsed >= 4);
}

#[test]
fn situation_seeds() {
    let game = dgg::fixture("fig1").unwrap();
    let mut parsed = 0;
    for (name, text) in seeds("parse_situation") {
        if let Ok(s) = dgg::parse_situation(&game, &text) {
            parsed += 1;
            let printed = dgg::print_situation(&game, &s);
            assert_eq!(dgg::parse_situation(&game, &printed).unwrap(), s, "{name}");
            assert!(!dgg::check_ne(&game, &s).unwrap().is_ne());
        }
    }
    assert_eq!(parsed, 2);
}
