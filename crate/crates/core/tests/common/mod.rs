//! A deliberately naive reference implementation of outcomes and equilibria,
//! written against the public accessors only, for cross-checking the library.
#![allow(dead_code)]

use dgg::{Game, Outcome, PlayerId, Pos};

/// Choice vector indexed by position index; `None` at terminals.
pub type Profile = Vec<Option<Pos>>;

pub fn profile(game: &Game, s: &dgg::Situation) -> Profile {
    game.positions().map(|p| s.choice(p)).collect()
}

/// Follows the profile from `init`; infinite as soon as a position repeats.
pub fn play_outcome(game: &Game, choice: &Profile) -> Outcome {
    play_from(game, choice, game.init())
}

pub fn play_from(game: &Game, choice: &Profile, start: Pos) -> Outcome {
    let mut visited = vec![false; game.len()];
    let mut at = start;
    loop {
        if game.is_terminal(at) {
            return Outcome::Terminal(at);
        }
        if visited[at.index()] {
            return Outcome::Infinite;
        }
        visited[at.index()] = true;
        at = choice[at.index()].expect("internal positions choose");
    }
}

/// Calls `f` on every assignment of moves to `positions`, the others fixed.
fn assignments(game: &Game, base: &Profile, positions: &[Pos], f: &mut dyn FnMut(&Profile)) {
    fn go(game: &Game, cur: &mut Profile, positions: &[Pos], f: &mut dyn FnMut(&Profile)) {
        match positions.split_first() {
            None => f(cur),
            Some((&p, rest)) => {
                for &t in game.successors(p) {
                    cur[p.index()] = Some(t);
                    go(game, cur, rest, f);
                }
            }
        }
    }
    let mut cur = base.clone();
    go(game, &mut cur, positions, f);
}

fn owned_by(game: &Game, player: PlayerId) -> Vec<Pos> {
    game.internals()
        .filter(|&p| game.controller(p) == Some(player))
        .collect()
}

pub fn is_ne(game: &Game, choice: &Profile) -> bool {
    let now = play_outcome(game, choice);
    game.player_ids().all(|player| {
        let mine = owned_by(game, player);
        let mut improves = false;
        assignments(game, choice, &mine, &mut |dev| {
            if !improves && game.rank(player, play_outcome(game, dev)) < game.rank(player, now) {
                improves = true;
            }
        });
        !improves
    })
}

/// Every NE of the game with its outcome.
pub fn all_ne(game: &Game) -> Vec<(Profile, Outcome)> {
    let internals: Vec<Pos> = game.internals().collect();
    let base: Profile = vec![None; game.len()];
    let mut found = Vec::new();
    assignments(game, &base, &internals, &mut |s| {
        if is_ne(game, s) {
            found.push((s.clone(), play_outcome(game, s)));
        }
    });
    found
}

pub fn situation_count(game: &Game) -> u64 {
    game.internals()
        .map(|p| game.successors(p).len() as u64)
        .product()
}

/// Positions reachable from the initial position by any moves.
pub fn reachable_from_init(game: &Game) -> Vec<bool> {
    let mut seen = vec![false; game.len()];
    let mut stack = vec![game.init()];
    seen[game.init().index()] = true;
    while let Some(v) = stack.pop() {
        for &w in game.successors(v) {
            if !seen[w.index()] {
                seen[w.index()] = true;
                stack.push(w);
            }
        }
    }
    seen
}

pub fn terminal_reachable(game: &Game) -> bool {
    let seen = reachable_from_init(game);
    game.terminals().any(|t| seen[t.index()])
}
