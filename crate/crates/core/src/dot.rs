//! Graphviz export.

use std::fmt::Write as _;

use crate::game::{Game, Situation};

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT digraph of `game`: terminals are boxes, internal positions are labelled
/// `name/controller`, the initial position has a double border and arcs
/// chosen by `situation` are bold. Output order follows position names.
pub fn export_dot(game: &Game, situation: Option<&Situation>) -> String {
    let mut out = String::from("digraph game {\n  rankdir=LR;\n");
    for p in game.positions() {
        let name = game.name(p);
        match game.controller(p) {
            None => writeln!(out, "  {} [shape=box];", quoted(name)).unwrap(),
            Some(c) => {
                let periphery = if p == game.init() {
                    ", peripheries=2"
                } else {
                    ""
                };
                writeln!(
                    out,
                    "  {} [shape=ellipse, label={}{periphery}];",
                    quoted(name),
                    quoted(&format!("{name}/{c}"))
                )
                .unwrap()
            }
        }
    }
    for (f, t) in game.moves() {
        let bold = situation.is_some_and(|s| s.choice(f) == Some(t));
        let style = if bold { " [style=bold]" } else { "" };
        writeln!(
            out,
            "  {} -> {}{style};",
            quoted(game.name(f)),
            quoted(game.name(t))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fixture;

    #[test]
    fn bold_arcs_follow_situation() {
        let g = fixture("fig2").unwrap();
        let s = Situation::from_named(&g, [("q1", "q2"), ("q2", "q3"), ("q3", "q1")]).unwrap();
        let dot = export_dot(&g, Some(&s));
        assert_eq!(dot.matches(" -> ").count(), 6);
        assert_eq!(dot.matches("style=bold").count(), 3);
        assert!(dot.contains("\"q1\" [shape=ellipse, label=\"q1/1\", peripheries=2];"));
        assert!(dot.contains("\"a\" [shape=box];"));
        assert_eq!(export_dot(&g, None).matches("bold").count(), 0);
        assert_eq!(export_dot(&g, Some(&s)), dot);
    }
}
