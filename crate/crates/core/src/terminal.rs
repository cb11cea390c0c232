//! Equilibria of terminal games (every player ranks the infinite outcome
//! last) with at most three terminals.
//!
//! The solver shrinks the game one reduction at a time until a base case is
//! reached, solves the base case directly and lifts the equilibrium back
//! through every reduction, re-checking the NE property on each parent game.
//! Reductions are tried in a fixed order, restarting from the top after each:
//! dead positions, dummy positions, positions with only terminal moves,
//! best-terminal (#1) moves, worst-terminal moves. When none applies every
//! terminal move is a #2-move; the main step then cuts the non-terminal moves
//! of one such position and repairs the sub-equilibrium if it ends there.

use std::collections::{BTreeSet, VecDeque};

use log::warn;

use crate::error::SolveError;
use crate::game::{
    check_ne_unchecked, classify, outcome_unchecked, reachable_unchecked, Game, GameBuilder,
    Outcome, Pos, PosSet, Situation,
};
use crate::oracle::{certify, Certificate};
use crate::playonce::normalize_unchecked;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReductionKind {
    NoDeadEnd,
    DummyContract,
    ForcedTermination,
    Sharp1,
    Sharp3,
    MainStep,
}

/// One shrinking step, with the data needed to replay it and to lift an
/// equilibrium of the smaller game back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionStep {
    /// Positions that cannot reach any terminal were removed.
    NoDeadEnd { removed: Vec<String> },
    /// `position` had the single move to internal `absorbed`; `absorbed` was
    /// removed and `position` took over its moves and its controller.
    DummyContract { position: String, absorbed: String },
    /// `position` had the single move to `terminal`; it was removed and moves
    /// into it now enter `terminal` directly.
    DummyIntoTerminal { position: String, terminal: String },
    /// `position` only had terminal moves; all but the best were deleted.
    ForcedTermination {
        position: String,
        kept: String,
        deleted: Vec<String>,
    },
    /// `position` has a move to its owner's favourite terminal; all other moves were deleted.
    Sharp1 {
        position: String,
        kept: String,
        deleted: Vec<String>,
    },
    /// The move from `position` to its owner's least liked terminal was deleted.
    Sharp3 { position: String, deleted: String },
    /// `position` has the #2-move into `terminal`; its non-terminal moves were deleted.
    MainStep {
        position: String,
        terminal: String,
        deleted: Vec<String>,
    },
}

impl ReductionStep {
    pub fn kind(&self) -> ReductionKind {
        match self {
            ReductionStep::NoDeadEnd { .. } => ReductionKind::NoDeadEnd,
            ReductionStep::DummyContract { .. } | ReductionStep::DummyIntoTerminal { .. } => {
                ReductionKind::DummyContract
            }
            ReductionStep::ForcedTermination { .. } => ReductionKind::ForcedTermination,
            ReductionStep::Sharp1 { .. } => ReductionKind::Sharp1,
            ReductionStep::Sharp3 { .. } => ReductionKind::Sharp3,
            ReductionStep::MainStep { .. } => ReductionKind::MainStep,
        }
    }

    /// Applies the recorded step to `game`.
    pub fn apply(&self, game: &Game) -> Result<Game, SolveError> {
        let mut parts = Parts::of(game);
        match self {
            ReductionStep::NoDeadEnd { removed } => {
                let removed: BTreeSet<&str> = removed.iter().map(String::as_str).collect();
                parts
                    .positions
                    .retain(|(n, _)| !removed.contains(n.as_str()));
                parts.moves.retain(|(f, t)| {
                    !removed.contains(f.as_str()) && !removed.contains(t.as_str())
                });
            }
            ReductionStep::DummyContract {
                position: v,
                absorbed: w,
            } => {
                let owner = parts.controller(w);
                parts.positions.retain(|(n, _)| n != w);
                for (n, c) in parts.positions.iter_mut() {
                    if n == v {
                        *c = owner;
                    }
                }
                let old = std::mem::take(&mut parts.moves);
                for (f, t) in old {
                    let moved = if f == *v {
                        continue;
                    } else if f == *w {
                        let t = if t == *w || t == *v { v.clone() } else { t };
                        (v.clone(), t)
                    } else if t == *w {
                        (f, v.clone())
                    } else {
                        (f, t)
                    };
                    parts.moves.insert(moved);
                }
                if parts.init == *w {
                    parts.init = v.clone();
                }
            }
            ReductionStep::DummyIntoTerminal {
                position: v,
                terminal,
            } => {
                parts.positions.retain(|(n, _)| n != v);
                let old = std::mem::take(&mut parts.moves);
                for (f, t) in old {
                    if f == *v {
                        continue;
                    }
                    parts.moves.insert(if t == *v {
                        (f, terminal.clone())
                    } else {
                        (f, t)
                    });
                }
            }
            ReductionStep::ForcedTermination {
                position, deleted, ..
            }
            | ReductionStep::Sharp1 {
                position, deleted, ..
            }
            | ReductionStep::MainStep {
                position, deleted, ..
            } => {
                for t in deleted {
                    parts.moves.remove(&(position.clone(), t.clone()));
                }
            }
            ReductionStep::Sharp3 { position, deleted } => {
                parts.moves.remove(&(position.clone(), deleted.clone()));
            }
        }
        parts.build(game)
    }

    /// Maps an equilibrium of `reduced` (this step applied to `parent`) to a
    /// situation of `parent`.
    pub fn lift(
        &self,
        parent: &Game,
        reduced: &Game,
        sigma: &Situation,
    ) -> Result<Situation, SolveError> {
        sigma.validate(reduced)?;
        let mut sigma = sigma.clone();
        if let ReductionStep::MainStep { terminal, .. } = self {
            let b = reduced.find(terminal).expect("terminal survives");
            if outcome_unchecked(sigma.raw(), reduced.init()) == Outcome::Terminal(b) {
                sigma = switching_transform(reduced, &sigma)?;
            }
        }
        let mut lifted = Situation::first(parent);
        for p in parent.internals() {
            let name = parent.name(p);
            let target: String = match self {
                ReductionStep::DummyContract {
                    position: v,
                    absorbed: w,
                } if name == v => w.clone(),
                ReductionStep::DummyContract {
                    position: v,
                    absorbed: w,
                } if name == w => {
                    let at_v = reduced.name(
                        sigma
                            .choice(reduced.find(v).expect("kept"))
                            .expect("internal"),
                    );
                    if at_v == v {
                        if parent.has_move(p, parent.find(v).expect("kept")) {
                            v.clone()
                        } else {
                            w.clone()
                        }
                    } else {
                        at_v.to_string()
                    }
                }
                ReductionStep::DummyIntoTerminal { position, terminal } if name == position => {
                    terminal.clone()
                }
                _ => match reduced.find(name) {
                    None => continue,
                    Some(q) => {
                        let t = reduced.name(sigma.choice(q).expect("internal"));
                        let direct = parent.find(t).is_some_and(|tp| parent.has_move(p, tp));
                        match self {
                            _ if direct => t.to_string(),
                            ReductionStep::DummyContract {
                                position: v,
                                absorbed: w,
                            } if t == v => w.clone(),
                            ReductionStep::DummyIntoTerminal { position, terminal }
                                if t == terminal =>
                            {
                                position.clone()
                            }
                            _ => {
                                return Err(SolveError::Internal(format!(
                                    "cannot lift move {name} -> {t} through {:?}",
                                    self.kind()
                                )))
                            }
                        }
                    }
                },
            };
            lifted.set(p, parent.find(&target).expect("lifted target exists"));
        }
        lifted.validate(parent)?;
        Ok(lifted)
    }
}

/// Editable copy of a game's structure; preferences and terminals never change.
struct Parts {
    positions: Vec<(String, Option<u32>)>,
    moves: BTreeSet<(String, String)>,
    init: String,
}

impl Parts {
    fn of(game: &Game) -> Self {
        Parts {
            positions: game
                .positions()
                .map(|p| {
                    (
                        game.name(p).to_string(),
                        game.controller(p).map(|c| c.get()),
                    )
                })
                .collect(),
            moves: game
                .moves()
                .map(|(f, t)| (game.name(f).to_string(), game.name(t).to_string()))
                .collect(),
            init: game.name(game.init()).to_string(),
        }
    }

    fn controller(&self, name: &str) -> Option<u32> {
        self.positions
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, c)| *c)
    }

    fn build(self, like: &Game) -> Result<Game, SolveError> {
        let mut b = GameBuilder::new(like.players());
        for (n, c) in &self.positions {
            match c {
                None => b.terminal(n.clone()),
                Some(c) => b.position(n.clone(), *c),
            };
        }
        for (f, t) in self.moves {
            b.add_move(f, t);
        }
        b.init(self.init);
        for player in like.player_ids() {
            b.pref(
                player.get(),
                like.preference(player)
                    .iter()
                    .map(|&o| like.outcome_name(o))
                    .collect(),
            );
        }
        b.build()
            .map_err(|e| SolveError::Internal(format!("reduction produced an invalid game: {e}")))
    }
}

fn names(game: &Game, ps: impl IntoIterator<Item = Pos>) -> Vec<String> {
    ps.into_iter().map(|p| game.name(p).to_string()).collect()
}

fn can_reach_terminal(game: &Game) -> PosSet {
    let targets: Vec<bool> = game.positions().map(|p| game.is_terminal(p)).collect();
    PosSet::from_mask(game.digraph().reaching(&targets))
}

fn find_no_dead_end(game: &Game) -> Option<ReductionStep> {
    let ok = can_reach_terminal(game);
    let dead: Vec<Pos> = game.internals().filter(|&p| !ok.contains(p)).collect();
    (!dead.is_empty() && ok.contains(game.init())).then(|| ReductionStep::NoDeadEnd {
        removed: names(game, dead),
    })
}

fn find_dummy(game: &Game) -> Option<ReductionStep> {
    for v in game.internals().filter(|&v| game.out_degree(v) == 1) {
        let w = game.successors(v)[0];
        if w == v {
            continue;
        }
        if !game.is_terminal(w) {
            return Some(ReductionStep::DummyContract {
                position: game.name(v).into(),
                absorbed: game.name(w).into(),
            });
        }
        if v != game.init() {
            return Some(ReductionStep::DummyIntoTerminal {
                position: game.name(v).into(),
                terminal: game.name(w).into(),
            });
        }
    }
    None
}

fn find_forced_termination(game: &Game) -> Option<ReductionStep> {
    game.internals()
        .find(|&v| {
            game.out_degree(v) >= 2 && game.successors(v).iter().all(|&t| game.is_terminal(t))
        })
        .map(|v| {
            let player = game.controller(v).expect("internal");
            let best = *game
                .successors(v)
                .iter()
                .min_by_key(|&&t| game.rank(player, Outcome::Terminal(t)))
                .expect("d+ >= 2");
            ReductionStep::ForcedTermination {
                position: game.name(v).into(),
                kept: game.name(best).into(),
                deleted: names(
                    game,
                    game.successors(v).iter().copied().filter(|&t| t != best),
                ),
            }
        })
}

fn sharp_moves(game: &Game, k: usize) -> impl Iterator<Item = (Pos, Pos)> + '_ {
    game.moves().filter(move |&(u, t)| {
        game.is_terminal(t) && game.terminal_rank(game.controller(u).expect("internal"), t) == k
    })
}

fn find_sharp1(game: &Game) -> Option<ReductionStep> {
    sharp_moves(game, 1)
        .find(|&(u, _)| game.out_degree(u) >= 2)
        .map(|(u, a)| ReductionStep::Sharp1 {
            position: game.name(u).into(),
            kept: game.name(a).into(),
            deleted: names(game, game.successors(u).iter().copied().filter(|&x| x != a)),
        })
}

fn find_sharp3(game: &Game) -> Option<ReductionStep> {
    let worst = game.terminal_count();
    sharp_moves(game, worst)
        .filter(|&(u, _)| game.out_degree(u) >= 2)
        .find_map(|(u, c)| {
            let step = ReductionStep::Sharp3 {
                position: game.name(u).into(),
                deleted: game.name(c).into(),
            };
            // never cut the initial position off from the terminals
            let reduced = step.apply(game).ok()?;
            classify(&reduced)
                .terminal_reachable_from_init
                .then_some(step)
        })
}

fn find_main_step(game: &Game) -> Result<ReductionStep, SolveError> {
    if let Some((u, t)) = game.moves().find(|&(u, t)| {
        game.is_terminal(t) && game.terminal_rank(game.controller(u).expect("internal"), t) != 2
    }) {
        return Err(SolveError::Internal(format!(
            "fixpoint has terminal move {} -> {} that is not a #2-move",
            game.name(u),
            game.name(t)
        )));
    }
    let (u, b) = sharp_moves(game, 2)
        .next()
        .ok_or_else(|| SolveError::Internal("fixpoint has no terminal moves".into()))?;
    Ok(ReductionStep::MainStep {
        position: game.name(u).into(),
        terminal: game.name(b).into(),
        deleted: names(
            game,
            game.successors(u)
                .iter()
                .copied()
                .filter(|&x| !game.is_terminal(x)),
        ),
    })
}

fn applied(
    game: &Game,
    step: Option<ReductionStep>,
) -> Result<Option<(ReductionStep, Game)>, SolveError> {
    match step {
        None => Ok(None),
        Some(step) => {
            let reduced = step.apply(game)?;
            Ok(Some((step, reduced)))
        }
    }
}

fn not_applicable(what: &str) -> SolveError {
    SolveError::Precondition(format!("{what} does not apply"))
}

/// Removes every position that cannot reach a terminal.
pub fn reduce_no_dead_end(game: &Game) -> Result<(Game, ReductionStep), SolveError> {
    if !classify(game).terminal_reachable_from_init {
        return Err(SolveError::Precondition(
            "terminals are unreachable from the initial position".into(),
        ));
    }
    let (step, g) =
        applied(game, find_no_dead_end(game))?.ok_or_else(|| not_applicable("dead-end removal"))?;
    Ok((g, step))
}

/// Contracts the first dummy position (one move) whose move enters an internal position.
pub fn contract_dummy(game: &Game) -> Result<(Game, ReductionStep), SolveError> {
    let step = find_dummy(game).filter(|s| matches!(s, ReductionStep::DummyContract { .. }));
    let (step, g) = applied(game, step)?.ok_or_else(|| not_applicable("dummy contraction"))?;
    Ok((g, step))
}

pub fn reduce_forced_termination(game: &Game) -> Result<(Game, ReductionStep), SolveError> {
    let (step, g) = applied(game, find_forced_termination(game))?
        .ok_or_else(|| not_applicable("forced termination"))?;
    Ok((g, step))
}

pub fn reduce_sharp1(game: &Game) -> Result<(Game, ReductionStep), SolveError> {
    let (step, g) =
        applied(game, find_sharp1(game))?.ok_or_else(|| not_applicable("#1-move reduction"))?;
    Ok((g, step))
}

pub fn reduce_sharp3(game: &Game) -> Result<(Game, ReductionStep), SolveError> {
    let (step, g) = applied(game, find_sharp3(game))?
        .ok_or_else(|| not_applicable("worst-terminal reduction"))?;
    Ok((g, step))
}

fn next_reduction(game: &Game) -> Result<Option<(ReductionStep, Game)>, SolveError> {
    let finders: [fn(&Game) -> Option<ReductionStep>; 5] = [
        find_no_dead_end,
        find_dummy,
        find_forced_termination,
        find_sharp1,
        find_sharp3,
    ];
    for find in finders {
        if let Some(found) = applied(game, find(game))? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// In a terminal NE ending at `a`, sends every choice that enters another
/// terminal to the lowest-named non-terminal successor instead.
pub fn switching_transform(game: &Game, sigma: &Situation) -> Result<Situation, SolveError> {
    sigma.validate(game)?;
    let Outcome::Terminal(a) = outcome_unchecked(sigma.raw(), game.init()) else {
        return Err(SolveError::Precondition(
            "situation does not end at a terminal".into(),
        ));
    };
    if let Some((u, t)) = sharp_moves(game, 1).next() {
        return Err(SolveError::Precondition(format!(
            "#1-move {} -> {}",
            game.name(u),
            game.name(t)
        )));
    }
    let mut out = sigma.clone();
    for u in game.internals() {
        let chosen = sigma.choice(u).expect("internal");
        if game.is_terminal(chosen) && chosen != a {
            let alt = game
                .successors(u)
                .iter()
                .copied()
                .find(|&w| !game.is_terminal(w))
                .ok_or_else(|| {
                    SolveError::Precondition(format!(
                        "position {} has no non-terminal move",
                        game.name(u)
                    ))
                })?;
            out.set(u, alt);
        }
    }
    Ok(out)
}

/// Non-terminal NE for games whose terminals cannot be reached from the
/// initial position: everything reachable keeps moving inside the reachable set.
pub fn solve_unreachable(game: &Game) -> Result<Situation, SolveError> {
    let all = PosSet::from_mask(vec![true; game.len()]);
    let reach = reachable_unchecked(game, game.init(), &all);
    if game.terminals().any(|t| reach.contains(t)) {
        return Err(SolveError::Precondition(
            "a terminal is reachable from the initial position".into(),
        ));
    }
    // every successor of a reachable position is reachable and internal
    Ok(Situation::first(game))
}

/// Shortest path (fewest moves) from the initial position to a terminal, by
/// breadth-first search over successors in name order. Returns the positions
/// on the path, terminal last.
fn shortest_terminal_path(game: &Game) -> Option<Vec<Pos>> {
    let mut parent: Vec<Option<Pos>> = vec![None; game.len()];
    let mut seen = PosSet::empty(game.len());
    seen.insert(game.init());
    let mut queue = VecDeque::from([game.init()]);
    while let Some(x) = queue.pop_front() {
        for &y in game.successors(x) {
            if !seen.insert(y) {
                continue;
            }
            parent[y.index()] = Some(x);
            if game.is_terminal(y) {
                let mut path = vec![y];
                let mut cur = y;
                while let Some(p) = parent[cur.index()] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(y);
        }
    }
    None
}

/// Terminal NE of a terminal play-once game along a shortest path to the terminals.
pub fn solve_terminal_play_once(game: &Game) -> Result<Situation, SolveError> {
    let class = classify(game);
    if !class.is_terminal_game || !class.is_play_once {
        return Err(SolveError::Unsupported(
            "game is not both terminal and play-once".into(),
        ));
    }
    if !class.terminal_reachable_from_init {
        return Err(SolveError::Precondition(
            "terminals are unreachable from the initial position".into(),
        ));
    }
    let normalization = normalize_unchecked(game);
    let reduced_situation = match &normalization.game {
        None => None,
        Some(reduced) => {
            let path =
                shortest_terminal_path(reduced).expect("normalization keeps terminals reachable");
            let last = path.len() - 2;
            for &p in &path[..last] {
                if reduced
                    .successors(p)
                    .iter()
                    .any(|&t| reduced.is_terminal(t))
                {
                    return Err(SolveError::Internal(format!(
                        "{} on the shortest path has a terminal move",
                        reduced.name(p)
                    )));
                }
            }
            let mut s = Situation::first(reduced);
            for v in reduced.internals() {
                if let Some(&w) = reduced
                    .successors(v)
                    .iter()
                    .find(|&&w| !reduced.is_terminal(w))
                {
                    s.set(v, w);
                }
            }
            for pair in path.windows(2) {
                s.set(pair[0], pair[1]);
            }
            Some(s)
        }
    };
    let situation = normalization.lift(game, reduced_situation.as_ref());
    verify(game, &situation, "terminal play-once construction")?;
    Ok(situation)
}

fn verify(game: &Game, situation: &Situation, what: &str) -> Result<(), SolveError> {
    let verdict = check_ne_unchecked(game, situation);
    match verdict.witness {
        None => Ok(()),
        Some(w) => Err(SolveError::Internal(format!(
            "{what}: player {} improves {} -> {}",
            w.player,
            game.outcome_name(verdict.outcome),
            game.outcome_name(w.outcome)
        ))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseCase {
    /// No terminal is reachable from the initial position.
    Unreachable,
    /// Exactly one terminal is reachable; any play ending there is a NE.
    SingleTerminal,
}

#[derive(Clone, Debug)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
    pub base: BaseCase,
    pub final_game: Game,
}

impl ReductionTrace {
    /// Re-applies every step to `original`.
    pub fn replay(&self, original: &Game) -> Result<Game, SolveError> {
        self.steps
            .iter()
            .try_fold(original.clone(), |g, step| step.apply(&g))
    }
}

#[derive(Clone, Debug)]
pub struct Terminal3Solution {
    pub situation: Situation,
    pub outcome: Outcome,
    /// `None` when the engine failed and the oracle supplied the answer.
    pub trace: Option<ReductionTrace>,
    /// Number of lifts re-checked with the exhaustive NE test.
    pub lifts_verified: usize,
    pub fallback: Option<String>,
}

fn base_situation(game: &Game) -> Option<(BaseCase, Situation)> {
    let class = classify(game);
    if !class.terminal_reachable_from_init {
        return Some((
            BaseCase::Unreachable,
            solve_unreachable(game).expect("checked"),
        ));
    }
    let all = PosSet::from_mask(vec![true; game.len()]);
    let reach = reachable_unchecked(game, game.init(), &all);
    if game.terminals().filter(|&t| reach.contains(t)).count() != 1 {
        return None;
    }
    let path = shortest_terminal_path(game).expect("a terminal is reachable");
    let mut s = Situation::first(game);
    for pair in path.windows(2) {
        s.set(pair[0], pair[1]);
    }
    Some((BaseCase::SingleTerminal, s))
}

/// Runs the reduction engine without the oracle fallback.
pub fn solve_terminal3_engine(game: &Game) -> Result<Terminal3Solution, SolveError> {
    check_terminal3_input(game)?;
    let reachable = classify(game).terminal_reachable_from_init;
    let mut chain: Vec<(Game, ReductionStep)> = Vec::new();
    let mut current = game.clone();
    let budget = game.len() + game.move_count();
    let (base, mut situation) = loop {
        if let Some(found) = base_situation(&current) {
            break found;
        }
        if chain.len() > budget {
            return Err(SolveError::Internal(
                "reduction did not shrink the game".into(),
            ));
        }
        let (step, reduced) = match next_reduction(&current)? {
            Some(found) => found,
            None => {
                let step = find_main_step(&current)?;
                let reduced = step.apply(&current)?;
                (step, reduced)
            }
        };
        if reduced.len() + reduced.move_count() >= current.len() + current.move_count() {
            return Err(SolveError::Internal(format!(
                "{:?} did not shrink the game",
                step.kind()
            )));
        }
        chain.push((std::mem::replace(&mut current, reduced), step));
    };
    verify(&current, &situation, "base case")?;
    let final_game = current.clone();
    let mut lifts_verified = 0;
    let mut steps = Vec::with_capacity(chain.len());
    while let Some((parent, step)) = chain.pop() {
        situation = step.lift(&parent, &current, &situation)?;
        verify(
            &parent,
            &situation,
            &format!("lift through {:?}", step.kind()),
        )?;
        if classify(&parent).terminal_reachable_from_init
            && !outcome_unchecked(situation.raw(), parent.init()).is_terminal()
        {
            return Err(SolveError::Internal(format!(
                "lift through {:?} lost the terminal outcome",
                step.kind()
            )));
        }
        lifts_verified += 1;
        steps.push(step);
        current = parent;
    }
    steps.reverse();
    let outcome = outcome_unchecked(situation.raw(), game.init());
    if reachable && !outcome.is_terminal() {
        return Err(SolveError::Internal(
            "terminal reachable but equilibrium is infinite".into(),
        ));
    }
    Ok(Terminal3Solution {
        situation,
        outcome,
        trace: Some(ReductionTrace {
            steps,
            base,
            final_game,
        }),
        lifts_verified,
        fallback: None,
    })
}

fn check_terminal3_input(game: &Game) -> Result<(), SolveError> {
    if !classify(game).is_terminal_game {
        return Err(SolveError::Unsupported(
            "not a terminal game: some player ranks inf above a terminal".into(),
        ));
    }
    if game.terminal_count() > 3 {
        return Err(SolveError::Unsupported(format!(
            "{} terminals; at most 3 are supported",
            game.terminal_count()
        )));
    }
    Ok(())
}

/// NE of a terminal game with at most three terminals; terminal whenever a
/// terminal is reachable. If the engine ever fails to verify a lift, the
/// exhaustive oracle answers instead and the diagnostic is kept.
pub fn solve_terminal3(game: &Game) -> Result<Terminal3Solution, SolveError> {
    check_terminal3_input(game)?;
    match solve_terminal3_engine(game) {
        Ok(solution) => Ok(solution),
        Err(err) => {
            let diagnostic = err.to_string();
            warn!("terminal solver failed, falling back to the oracle: {diagnostic}");
            let certificate = certify(game, false)?;
            let eq = match &certificate {
                Certificate::NeFree { .. } => {
                    return Err(SolveError::Internal(format!(
                        "{diagnostic}; oracle finds no NE"
                    )));
                }
                Certificate::HasNe { equilibria, .. }
                | Certificate::NoTerminalNe { equilibria, .. } => &equilibria[0],
            };
            Ok(Terminal3Solution {
                situation: eq.situation.clone(),
                outcome: eq.outcome,
                trace: None,
                lifts_verified: 0,
                fallback: Some(diagnostic),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::check_ne;

    fn build(players: u32, f: impl FnOnce(&mut GameBuilder)) -> Game {
        let mut b = GameBuilder::new(players);
        f(&mut b);
        b.build().unwrap()
    }

    #[test]
    fn self_loop_init_cycles() {
        let g = build(1, |b| {
            b.terminal("t")
                .position("v0", 1)
                .position("u", 1)
                .add_move("v0", "v0");
            b.add_move("u", "t")
                .add_move("u", "v0")
                .init("v0")
                .pref_names(1, &["t", "inf"]);
        });
        let s = solve_unreachable(&g).unwrap();
        assert_eq!(s.choice(g.init()), Some(g.init()));
        assert!(check_ne(&g, &s).unwrap().is_ne());
    }

    #[test]
    fn reachable_terminal_rejected_by_unreachable_solver() {
        let g = build(1, |b| {
            b.terminal("t")
                .position("v0", 1)
                .add_move("v0", "t")
                .init("v0")
                .pref_names(1, &["t", "inf"]);
        });
        assert!(matches!(
            solve_unreachable(&g),
            Err(SolveError::Precondition(_))
        ));
    }

    #[test]
    fn single_position_three_terminals() {
        let g = build(1, |b| {
            b.terminal("x").terminal("y").terminal("z").position("v", 1);
            b.add_move("v", "x")
                .add_move("v", "y")
                .add_move("v", "z")
                .init("v");
            b.pref_names(1, &["y", "z", "x", "inf"]);
        });
        let (reduced, step) = reduce_forced_termination(&g).unwrap();
        assert_eq!(
            step,
            ReductionStep::ForcedTermination {
                position: "v".into(),
                kept: "y".into(),
                deleted: vec!["x".into(), "z".into()]
            }
        );
        assert_eq!(reduced.out_degree(reduced.init()), 1);
        let sol = solve_terminal3(&g).unwrap();
        assert_eq!(sol.situation.named(&g), vec![("v", "y")]);
        assert!(sol.fallback.is_none());
    }

    #[test]
    fn dummy_contraction_inherits_moves_and_owner() {
        let g = build(2, |b| {
            b.terminal("t1")
                .terminal("t2")
                .position("v", 1)
                .position("w", 2);
            b.add_move("v", "w")
                .add_move("w", "t1")
                .add_move("w", "t2")
                .add_move("w", "v")
                .init("w");
            b.pref_names(1, &["t1", "t2", "inf"])
                .pref_names(2, &["t2", "t1", "inf"]);
        });
        let (reduced, step) = contract_dummy(&g).unwrap();
        assert_eq!(
            step,
            ReductionStep::DummyContract {
                position: "v".into(),
                absorbed: "w".into()
            }
        );
        let v = reduced.find("v").unwrap();
        assert_eq!(reduced.init(), v);
        assert_eq!(reduced.controller(v).unwrap().get(), 2);
        assert_eq!(
            names(&reduced, reduced.successors(v).iter().copied()),
            vec!["t1", "t2", "v"]
        );
        let looping = Situation::from_named(&reduced, [("v", "v")]).unwrap();
        assert_eq!(outcome_unchecked(looping.raw(), v), Outcome::Infinite);
        let lifted = step.lift(&g, &reduced, &looping).unwrap();
        assert_eq!(lifted.named(&g), vec![("v", "w"), ("w", "v")]);
        let best = Situation::from_named(&reduced, [("v", "t2")]).unwrap();
        let lifted = step.lift(&g, &reduced, &best).unwrap();
        assert!(check_ne(&g, &lifted).unwrap().is_ne());
    }

    #[test]
    fn sharp1_keeps_only_the_favourite() {
        let g = build(2, |b| {
            b.terminal("a")
                .terminal("b")
                .terminal("c")
                .position("u", 1)
                .position("x", 2)
                .position("y", 2);
            b.add_move("u", "a").add_move("u", "x").add_move("u", "y");
            b.add_move("x", "b")
                .add_move("x", "u")
                .add_move("y", "c")
                .add_move("y", "x")
                .init("u");
            b.pref_names(1, &["a", "b", "c", "inf"])
                .pref_names(2, &["a", "b", "c", "inf"]);
        });
        let (reduced, step) = reduce_sharp1(&g).unwrap();
        assert_eq!(step.kind(), ReductionKind::Sharp1);
        assert_eq!(reduced.successors(reduced.find("u").unwrap()).len(), 1);
        assert!(can_reach_terminal(&reduced).iter().count() == reduced.len());
    }

    #[test]
    fn sharp3_deletes_worst_terminal_move() {
        let g = build(2, |b| {
            b.terminal("a")
                .terminal("b")
                .terminal("c")
                .position("u", 1)
                .position("x", 2);
            b.add_move("u", "c")
                .add_move("u", "x")
                .add_move("x", "a")
                .add_move("x", "u")
                .init("u");
            b.pref_names(1, &["a", "b", "c", "inf"])
                .pref_names(2, &["b", "c", "a", "inf"]);
        });
        let (reduced, step) = reduce_sharp3(&g).unwrap();
        assert_eq!(
            step,
            ReductionStep::Sharp3 {
                position: "u".into(),
                deleted: "c".into()
            }
        );
        assert!(!reduced.has_move(reduced.find("u").unwrap(), reduced.find("c").unwrap()));
    }

    #[test]
    fn sharp3_never_cuts_the_only_exit() {
        // the only way out is u -> c, c being worst for player 1
        let g = build(3, |b| {
            b.terminal("a")
                .terminal("b")
                .terminal("c")
                .position("u", 1)
                .position("w", 2)
                .position("x", 3);
            b.add_move("u", "c")
                .add_move("u", "w")
                .add_move("w", "u")
                .add_move("w", "x");
            b.add_move("x", "u").add_move("x", "w").init("u");
            b.pref_names(1, &["a", "b", "c", "inf"])
                .pref_names(2, &["a", "b", "c", "inf"])
                .pref_names(3, &["c", "b", "a", "inf"]);
        });
        assert!(reduce_sharp3(&g).is_err());
        let sol = solve_terminal3(&g).unwrap();
        assert!(sol.fallback.is_none());
        assert_eq!(sol.outcome, Outcome::Terminal(g.find("c").unwrap()));
        assert!(check_ne(&g, &sol.situation).unwrap().is_ne());
    }

    #[test]
    fn dead_ends_removed_and_lifted() {
        let g = build(2, |b| {
            b.terminal("t")
                .position("p", 1)
                .position("q", 2)
                .position("r", 1)
                .position("s", 2);
            b.add_move("p", "t")
                .add_move("p", "q")
                .add_move("q", "r")
                .add_move("q", "p");
            b.add_move("r", "s").add_move("s", "r").init("p");
            b.pref_names(1, &["t", "inf"]).pref_names(2, &["t", "inf"]);
        });
        let (reduced, step) = reduce_no_dead_end(&g).unwrap();
        assert_eq!(
            step,
            ReductionStep::NoDeadEnd {
                removed: vec!["r".into(), "s".into()]
            }
        );
        assert_eq!(reduced.internal_count(), 2);
        let sol = solve_terminal3(&g).unwrap();
        assert!(check_ne(&g, &sol.situation).unwrap().is_ne());
        assert!(sol.outcome.is_terminal());
    }

    #[test]
    fn switching_redirects_off_play_terminal_choices() {
        let g = build(2, |b| {
            b.terminal("a")
                .terminal("b")
                .terminal("c")
                .position("u", 1)
                .position("x", 2);
            b.add_move("u", "a")
                .add_move("u", "x")
                .add_move("x", "b")
                .add_move("x", "u")
                .init("u");
            b.pref_names(1, &["b", "a", "c", "inf"])
                .pref_names(2, &["c", "b", "a", "inf"]);
        });
        let s = Situation::from_named(&g, [("u", "a"), ("x", "b")]).unwrap();
        let out = switching_transform(&g, &s).unwrap();
        assert_eq!(out.named(&g), vec![("u", "a"), ("x", "u")]);
        let unchanged = Situation::from_named(&g, [("u", "a"), ("x", "u")]).unwrap();
        assert_eq!(switching_transform(&g, &unchanged).unwrap(), unchanged);
    }

    #[test]
    fn unsupported_inputs() {
        let g = build(1, |b| {
            b.terminal("a")
                .position("u", 1)
                .add_move("u", "a")
                .init("u")
                .pref_names(1, &["inf", "a"]);
        });
        assert!(matches!(
            solve_terminal3(&g),
            Err(SolveError::Unsupported(_))
        ));
    }
}
