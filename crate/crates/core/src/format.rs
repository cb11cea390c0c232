//! Line-oriented text formats for games and situations.
//!
//! Game file:
//!
//! ```text
//! # comment
//! players 2
//! terminal a b
//! position u controller=1
//! position w controller=2
//! init u
//! move u w
//! move u a
//! move w b
//! move w u
//! pref 1: b > a > inf
//! pref 2: a > inf > b
//! ```
//!
//! Situation file: one `FROM -> TO` line per internal position.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::game::{
    is_identifier, Game, GameBuilder, GameError, OutcomeName, Situation, SituationError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {source}")]
    Game { line: usize, source: GameError },
    #[error("{0}")]
    GameNoLine(GameError),
    #[error("line {line}: {source}")]
    Situation { line: usize, source: SituationError },
    #[error("{0}")]
    SituationNoLine(SituationError),
}

impl FormatError {
    pub fn line(&self) -> Option<usize> {
        match self {
            FormatError::Syntax { line, .. }
            | FormatError::Game { line, .. }
            | FormatError::Situation { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Word(&'a str),
    Colon,
    Gt,
    Eq,
    Arrow,
}

struct Token<'a> {
    tok: Tok<'a>,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(line_no: usize, line: &str) -> Result<Vec<Token<'_>>, FormatError> {
    let code = line.split('#').next().unwrap_or("");
    let bytes = code.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let column = code[..i].chars().count() + 1;
        let single = |tok| Token { tok, column };
        match c {
            b' ' | b'\t' | b'\r' => i += 1,
            b':' => {
                out.push(single(Tok::Colon));
                i += 1;
            }
            b'>' => {
                out.push(single(Tok::Gt));
                i += 1;
            }
            b'=' => {
                out.push(single(Tok::Eq));
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push(single(Tok::Arrow));
                i += 2;
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Word(&code[start..i]),
                    column,
                });
            }
            _ => {
                let ch = code[i..].chars().next().expect("in bounds");
                return Err(syntax(
                    line_no,
                    column,
                    format!("unexpected character {ch:?}"),
                ));
            }
        }
    }
    Ok(out)
}

struct Cursor<'a, 't> {
    line: usize,
    end_column: usize,
    tokens: &'t [Token<'a>],
    at: usize,
}

impl<'a, 't> Cursor<'a, 't> {
    fn new(line: usize, text: &str, tokens: &'t [Token<'a>]) -> Self {
        let code = text.split('#').next().unwrap_or("");
        Cursor {
            line,
            end_column: code.trim_end().chars().count() + 1,
            tokens,
            at: 0,
        }
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.at)
            .map_or(self.end_column, |t| t.column)
    }

    fn error(&self, message: impl Into<String>) -> FormatError {
        syntax(self.line, self.column(), message)
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.tokens.get(self.at).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<&Tok<'a>> {
        let t = self.tokens.get(self.at).map(|t| &t.tok);
        self.at += 1;
        t
    }

    fn ident(&mut self, what: &str) -> Result<&'a str, FormatError> {
        match self.peek() {
            Some(Tok::Word(w)) if is_identifier(w) => {
                let w = *w;
                self.at += 1;
                Ok(w)
            }
            Some(Tok::Word(w)) if *w == "inf" => {
                Err(self.error(format!("`inf` is reserved and cannot name {what}")))
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, FormatError> {
        match self.peek() {
            Some(Tok::Word(w)) if w.bytes().all(|b| b.is_ascii_digit()) => {
                let n = w
                    .parse()
                    .map_err(|_| self.error(format!("{what} out of range")))?;
                self.at += 1;
                Ok(n)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn expect(&mut self, tok: Tok<'_>, what: &str) -> Result<(), FormatError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn done(&self) -> Result<(), FormatError> {
        if self.at < self.tokens.len() {
            Err(self.error("unexpected trailing input"))
        } else {
            Ok(())
        }
    }
}

#[derive(Default)]
struct Lines {
    players: Option<usize>,
    decls: HashMap<String, Vec<usize>>,
    moves: Vec<(String, String, usize)>,
    init: Option<usize>,
    prefs: HashMap<u32, Vec<usize>>,
}

impl Lines {
    fn locate(&self, err: &GameError) -> Option<usize> {
        let decl = |n: &str, which: usize| {
            self.decls
                .get(n)
                .and_then(|v| v.get(which).or(v.last()))
                .copied()
        };
        let pref = |p: &u32| self.prefs.get(p).and_then(|v| v.last()).copied();
        match err {
            GameError::NoPlayers => self.players,
            GameError::DuplicatePosition(n) => decl(n, 1),
            GameError::UnknownController { position, .. } | GameError::ZeroOutDegree(position) => {
                decl(position, 0)
            }
            GameError::MoveFromTerminal(n) => {
                self.moves.iter().find(|(f, _, _)| f == n).map(|m| m.2)
            }
            GameError::DuplicateMove(f, t) => self
                .moves
                .iter()
                .filter(|(a, b, _)| a == f && b == t)
                .nth(1)
                .map(|m| m.2),
            GameError::UnknownPosition(n) => self
                .moves
                .iter()
                .find(|(f, t, _)| f == n || t == n)
                .map(|m| m.2)
                .or(self.init),
            GameError::InitNotInternal(_) => self.init,
            GameError::UnknownPlayer(p) | GameError::DuplicatePref(p) => pref(p),
            GameError::PrefMissingOutcome { player, .. }
            | GameError::PrefDuplicateOutcome { player, .. }
            | GameError::PrefUnknownOutcome { player, .. } => pref(player),
            GameError::InvalidName(_)
            | GameError::MissingInit
            | GameError::MissingPref(_)
            | GameError::NoInternalPositions => None,
        }
    }
}

type Item = Box<dyn FnOnce(&mut GameBuilder)>;

/// Parses a game file.
pub fn parse_game(text: &str) -> Result<Game, FormatError> {
    let mut builder: Option<GameBuilder> = None;
    let mut lines = Lines::default();
    // items seen before `players` are replayed once the builder exists
    let mut pending: Vec<Item> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens = lex(line, raw)?;
        if tokens.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(line, raw, &tokens);
        let keyword = match cur.next() {
            Some(Tok::Word(w)) => *w,
            _ => return Err(syntax(line, tokens[0].column, "expected a keyword")),
        };
        let item: Item = match keyword {
            "players" => {
                if lines.players.is_some() {
                    return Err(syntax(line, 1, "duplicate players line"));
                }
                let n = cur.number("number of players")?;
                cur.done()?;
                lines.players = Some(line);
                builder = Some(GameBuilder::new(n));
                continue;
            }
            "terminal" => {
                let mut names = vec![cur.ident("terminal name")?.to_string()];
                while cur.peek().is_some() {
                    names.push(cur.ident("terminal name")?.to_string());
                }
                for n in &names {
                    lines.decls.entry(n.clone()).or_default().push(line);
                }
                Box::new(move |b| {
                    for n in names {
                        b.terminal(n);
                    }
                })
            }
            "position" => {
                let name = cur.ident("position name")?.to_string();
                match cur.next() {
                    Some(Tok::Word("controller")) => {}
                    _ => {
                        cur.at -= 1;
                        return Err(cur.error("expected controller=K"));
                    }
                }
                cur.expect(Tok::Eq, "`=` after controller")?;
                let k = cur.number("controller index")?;
                cur.done()?;
                lines.decls.entry(name.clone()).or_default().push(line);
                Box::new(move |b| {
                    b.position(name, k);
                })
            }
            "init" => {
                if lines.init.is_some() {
                    return Err(syntax(line, 1, "duplicate init line"));
                }
                let name = cur.ident("initial position")?.to_string();
                cur.done()?;
                lines.init = Some(line);
                Box::new(move |b| {
                    b.init(name);
                })
            }
            "move" => {
                let from = cur.ident("source position")?.to_string();
                let to = cur.ident("target position")?.to_string();
                cur.done()?;
                lines.moves.push((from.clone(), to.clone(), line));
                Box::new(move |b| {
                    b.add_move(from, to);
                })
            }
            "pref" => {
                let player = cur.number("player index")?;
                cur.expect(Tok::Colon, "`:` after the player index")?;
                let mut ranked = Vec::new();
                loop {
                    ranked.push(match cur.peek() {
                        Some(Tok::Word("inf")) => {
                            cur.at += 1;
                            OutcomeName::Infinite
                        }
                        _ => OutcomeName::Terminal(cur.ident("outcome")?.to_string()),
                    });
                    match cur.peek() {
                        None => break,
                        Some(Tok::Gt) => cur.at += 1,
                        Some(Tok::Eq) => {
                            return Err(cur.error("preference tie: preferences must be strict"))
                        }
                        Some(_) => return Err(cur.error("expected `>` between outcomes")),
                    }
                }
                lines.prefs.entry(player).or_default().push(line);
                Box::new(move |b| {
                    b.pref(player, ranked);
                })
            }
            other => {
                return Err(syntax(
                    line,
                    tokens[0].column,
                    format!("unknown keyword {other:?}"),
                ));
            }
        };
        match builder.as_mut() {
            Some(b) => item(b),
            None => pending.push(item),
        }
    }
    let mut builder =
        builder.ok_or_else(|| syntax(text.lines().count().max(1), 1, "missing players line"))?;
    for item in pending {
        item(&mut builder);
    }
    builder.build().map_err(|e| match lines.locate(&e) {
        Some(line) => FormatError::Game { line, source: e },
        None => FormatError::GameNoLine(e),
    })
}

/// Prints a game so that [`parse_game`] reproduces it exactly.
pub fn print_game(game: &Game) -> String {
    let mut out = String::new();
    writeln!(out, "players {}", game.players()).unwrap();
    let terminals: Vec<&str> = game.terminals().map(|t| game.name(t)).collect();
    if !terminals.is_empty() {
        writeln!(out, "terminal {}", terminals.join(" ")).unwrap();
    }
    for p in game.internals() {
        writeln!(
            out,
            "position {} controller={}",
            game.name(p),
            game.controller(p).expect("internal").get()
        )
        .unwrap();
    }
    writeln!(out, "init {}", game.name(game.init())).unwrap();
    for (f, t) in game.moves() {
        writeln!(out, "move {} {}", game.name(f), game.name(t)).unwrap();
    }
    for player in game.player_ids() {
        let ranked: Vec<String> = game
            .preference(player)
            .iter()
            .map(|&o| game.outcome_name(o).to_string())
            .collect();
        writeln!(out, "pref {}: {}", player.get(), ranked.join(" > ")).unwrap();
    }
    out
}

/// Parses a situation file against `game`.
pub fn parse_situation(game: &Game, text: &str) -> Result<Situation, FormatError> {
    let mut choice = vec![None; game.len()];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens = lex(line, raw)?;
        if tokens.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(line, raw, &tokens);
        let from = cur.ident("source position")?;
        cur.expect(Tok::Arrow, "`->`")?;
        let to = cur.ident("target position")?;
        cur.done()?;
        let err = |source| FormatError::Situation { line, source };
        let f = game
            .find(from)
            .ok_or_else(|| err(SituationError::UnknownPosition(from.into())))?;
        let t = game
            .find(to)
            .ok_or_else(|| err(SituationError::UnknownPosition(to.into())))?;
        if game.is_terminal(f) {
            return Err(err(SituationError::ChoiceAtTerminal(from.into())));
        }
        if !game.has_move(f, t) {
            return Err(err(SituationError::NotAMove(from.into(), to.into())));
        }
        if choice[f.index()].is_some() {
            return Err(err(SituationError::DuplicateChoice(from.into())));
        }
        choice[f.index()] = Some(t);
    }
    Situation::new(game, choice).map_err(FormatError::SituationNoLine)
}

pub fn print_situation(game: &Game, situation: &Situation) -> String {
    situation
        .named(game)
        .into_iter()
        .map(|(f, t)| format!("{f} -> {t}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fixture;

    const FIG2: &str = "players 3
terminal a b c
position q1 controller=1
position q2 controller=2
position q3 controller=3
init q1
move q1 q2
move q1 a
move q2 q3
move q2 b
move q3 q1
move q3 c
pref 1: b > c > inf > a
pref 2: c > a > inf > b
pref 3: a > b > inf > c
";

    fn err(text: &str) -> String {
        parse_game(text).unwrap_err().to_string()
    }

    #[test]
    fn parses_fixture_text() {
        assert_eq!(parse_game(FIG2).unwrap(), fixture("fig2").unwrap());
    }

    #[test]
    fn round_trip() {
        for name in crate::harness::FIXTURES {
            let g = fixture(name).unwrap();
            assert_eq!(parse_game(&print_game(&g)).unwrap(), g);
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!(
            "# header\n\n{}",
            FIG2.replace("init q1", "init q1   # start here")
        );
        assert_eq!(parse_game(&text).unwrap(), fixture("fig2").unwrap());
    }

    #[test]
    fn semantic_errors_carry_lines() {
        let e =
            parse_game(&FIG2.replace("pref 2: c > a > inf > b", "pref 2: c > a > b")).unwrap_err();
        assert_eq!(e.line(), Some(14));
        assert!(
            e.to_string()
                .contains("pref for player 2 missing outcome inf"),
            "{e}"
        );
        let e = parse_game(&format!("{FIG2}move a q1\n")).unwrap_err();
        assert!(e.to_string().contains("move from terminal a"), "{e}");
        assert_eq!(e.line(), Some(16));
        assert!(err(&format!("{FIG2}move q1 a\n")).contains("duplicate move q1 -> a"));
        assert!(err(&format!("{FIG2}position q2 controller=1\n"))
            .contains("line 16: duplicate position q2"));
        assert!(err(&FIG2.replace("controller=3", "controller=4"))
            .contains("unknown controller index 4"));
        assert!(err(&FIG2.replace("init q1\n", "")).contains("missing init"));
        assert!(err(&FIG2.replace("move q3 q1\nmove q3 c\n", "")).contains("q3 has no moves"));
        assert!(err(&format!("{FIG2}pref 3: a > b > c > inf\n"))
            .contains("duplicate pref for player 3"));
    }

    #[test]
    fn syntax_errors() {
        let e = parse_game(&FIG2.replace("pref 1: b > c", "pref 1: b = c")).unwrap_err();
        assert_eq!(
            e,
            FormatError::Syntax {
                line: 13,
                column: 11,
                message: "preference tie: preferences must be strict".into()
            }
        );
        assert!(err("players 1\nposition inf controller=1\n").contains("reserved"));
        assert!(err("players 1\nposition 1x controller=1\n").contains("line 2, column 10"));
        assert!(err("players 1\nfoo bar\n").contains("unknown keyword"));
        assert!(err("terminal a\n").contains("missing players line"));
        assert!(err("players 1\nposition u controller 1\n").contains("expected `=`"));
        assert!(err("players 1\nmove u w x\n").contains("trailing"));
        assert!(err("players 1\nmove u $\n").contains("unexpected character"));
    }

    #[test]
    fn situation_round_trip_and_errors() {
        let g = fixture("fig2").unwrap();
        let s = parse_situation(&g, "q1 -> q2\nq2 -> q3\n# cycle\nq3 -> q1\n").unwrap();
        assert_eq!(parse_situation(&g, &print_situation(&g, &s)).unwrap(), s);
        let e = parse_situation(&g, "q1 -> q3\n").unwrap_err();
        assert_eq!(
            e.to_string(),
            "line 1: chosen move q1 -> q3 is not a move of the game"
        );
        assert!(parse_situation(&g, "q1 -> q2\nq1 -> a\n")
            .unwrap_err()
            .to_string()
            .contains("chosen twice"));
        assert!(parse_situation(&g, "q1 -> q2\n")
            .unwrap_err()
            .to_string()
            .contains("no move chosen at position q2"));
        assert!(parse_situation(&g, "a -> q1\n")
            .unwrap_err()
            .to_string()
            .contains("terminal a"));
        assert!(parse_situation(&g, "q1 q2\n")
            .unwrap_err()
            .to_string()
            .contains("expected `->`"));
    }
}
