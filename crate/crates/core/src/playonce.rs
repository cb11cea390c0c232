//! Equilibria of play-once games, where every player controls exactly one
//! position.
//!
//! After normalization every position has at most one terminal move and at
//! least one non-terminal move. Positions are then split four ways:
//!
//! * `S`: positions whose terminal move beats the infinite outcome for their owner;
//! * `W`: positions reachable from the initial position while avoiding `S`;
//! * `Q`: the remaining positions that can reach a cycle among themselves;
//! * `R`: the rest, which induces an acyclic graph.
//!
//! A cycle inside `W` yields an infinite equilibrium play. Otherwise cutting a
//! minimal set of arcs out of `S` makes the graph outside `Q` acyclic,
//! backward induction there fixes a terminal play, and an in-tree towards its
//! terminal keeps every deviation from paying off.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::SolveError;
use crate::game::{
    check_ne_unchecked, classify, outcome_unchecked, Game, Outcome, Pos, PosSet, Situation,
};
use crate::graph::Digraph;
use crate::induction::induce;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormalizeNote {
    /// Every move of `position` entered a terminal; it was fixed to its owner's
    /// best one (`terminal`, reached by the original move to `via`) and merged into it.
    Merged {
        position: String,
        terminal: String,
        via: String,
    },
    /// `position` had several terminal moves; only the best for its owner was kept.
    DroppedTerminalMoves {
        position: String,
        kept: String,
        dropped: Vec<String>,
    },
}

/// A normalized play-once game together with what it took to get there.
#[derive(Clone, Debug)]
pub struct Normalization {
    /// `None` when the initial position itself was merged into a terminal.
    pub game: Option<Game>,
    pub notes: Vec<NormalizeNote>,
    // original target of every surviving move, keyed by (source, current target)
    origin: BTreeMap<(String, String), String>,
}

impl Normalization {
    pub fn is_identity(&self) -> bool {
        self.notes.is_empty()
    }

    /// Maps a situation of the normalized game back to `original`.
    ///
    /// Merged positions take their fixed move. With no normalized game every
    /// other position takes its lowest-named move.
    pub fn lift(&self, original: &Game, reduced: Option<&Situation>) -> Situation {
        let mut fixed: BTreeMap<&str, &str> = BTreeMap::new();
        for note in &self.notes {
            if let NormalizeNote::Merged { position, via, .. } = note {
                fixed.insert(position, via);
            }
        }
        let mut lifted = Situation::first(original);
        for p in original.internals() {
            let name = original.name(p);
            let target = if let Some(via) = fixed.get(name) {
                via.to_string()
            } else if let (Some(game), Some(s)) = (&self.game, reduced) {
                let q = game.find(name).expect("unmerged position survives");
                let t = game.name(s.choice(q).expect("internal has a choice"));
                self.origin[&(name.to_string(), t.to_string())].clone()
            } else {
                continue;
            };
            lifted.set(
                p,
                original
                    .find(&target)
                    .expect("origin names an original position"),
            );
        }
        lifted
    }
}

fn best_terminal(game: &Game, p: Pos, among: impl Iterator<Item = Pos>) -> Option<Pos> {
    let player = game.controller(p)?;
    among
        .filter(|&t| game.is_terminal(t))
        .min_by_key(|&t| game.rank(player, Outcome::Terminal(t)))
}

/// Brings a play-once game into the form where no position has only terminal
/// moves and none has more than one terminal move.
pub fn normalize_play_once(game: &Game) -> Result<Normalization, SolveError> {
    if !classify(game).is_play_once {
        return Err(SolveError::Unsupported("game is not play-once".into()));
    }
    Ok(normalize_unchecked(game))
}

pub(crate) fn normalize_unchecked(game: &Game) -> Normalization {
    let mut succ: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut origin: BTreeMap<(String, String), String> = BTreeMap::new();
    for (f, t) in game.moves() {
        let (f, t) = (game.name(f).to_string(), game.name(t).to_string());
        succ.entry(f.clone()).or_default().insert(t.clone());
        origin.insert((f, t.clone()), t);
    }
    let is_terminal = |name: &str| game.find(name).is_some_and(|p| game.is_terminal(p));
    let mut notes = Vec::new();
    let mut init_merged = false;

    while let Some((v, targets)) = succ
        .iter()
        .find(|(_, out)| out.iter().all(|t| is_terminal(t)))
    {
        let (v, targets) = (v.clone(), targets.clone());
        let vp = game.find(&v).expect("known position");
        let best = best_terminal(
            game,
            vp,
            targets.iter().map(|t| game.find(t).expect("known")),
        )
        .expect("internal positions keep a terminal move here");
        let terminal = game.name(best).to_string();
        let via = origin[&(v.clone(), terminal.clone())].clone();
        succ.remove(&v);
        origin.retain(|(f, _), _| *f != v);
        for (u, out) in succ.iter_mut() {
            if out.remove(&v) {
                let via_v = origin
                    .remove(&(u.clone(), v.clone()))
                    .expect("arc has an origin");
                if out.insert(terminal.clone()) {
                    origin.insert((u.clone(), terminal.clone()), via_v);
                }
            }
        }
        notes.push(NormalizeNote::Merged {
            position: v.clone(),
            terminal,
            via,
        });
        if game.find(&v) == Some(game.init()) {
            init_merged = true;
            break;
        }
    }

    if !init_merged {
        for (v, out) in succ.iter_mut() {
            let vp = game.find(v).expect("known position");
            let terminals: Vec<Pos> = out
                .iter()
                .map(|t| game.find(t).expect("known"))
                .filter(|&t| game.is_terminal(t))
                .collect();
            if terminals.len() < 2 {
                continue;
            }
            let keep = best_terminal(game, vp, terminals.iter().copied()).expect("non-empty");
            let mut dropped = Vec::new();
            for t in terminals.into_iter().filter(|&t| t != keep) {
                let name = game.name(t).to_string();
                out.remove(&name);
                origin.remove(&(v.clone(), name.clone()));
                dropped.push(name);
            }
            notes.push(NormalizeNote::DroppedTerminalMoves {
                position: v.clone(),
                kept: game.name(keep).into(),
                dropped,
            });
        }
    }

    let reduced = if init_merged {
        None
    } else if notes.is_empty() {
        Some(game.clone())
    } else {
        let mut b = crate::game::GameBuilder::new(game.players());
        for p in game.positions() {
            let name = game.name(p);
            match game.controller(p) {
                None => {
                    b.terminal(name);
                }
                Some(c) if succ.contains_key(name) => {
                    b.position(name, c.get());
                }
                Some(_) => {}
            }
        }
        for (v, out) in &succ {
            for t in out {
                b.add_move(v.clone(), t.clone());
            }
        }
        b.init(game.name(game.init()));
        for player in game.player_ids() {
            b.pref(
                player.get(),
                game.preference(player)
                    .iter()
                    .map(|&o| game.outcome_name(o))
                    .collect(),
            );
        }
        Some(b.build().expect("normalization keeps the game valid"))
    };
    Normalization {
        game: reduced,
        notes,
        origin,
    }
}

/// The four-way split of internal positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub s: PosSet,
    pub w: PosSet,
    pub q: PosSet,
    pub r: PosSet,
}

/// `a(v)`: the owner's favourite terminal among the moves of `v`.
pub fn terminal_escape(game: &Game, v: Pos) -> Option<Pos> {
    best_terminal(game, v, game.successors(v).iter().copied())
}

pub fn partition(game: &Game) -> Partition {
    let n = game.len();
    let mut s = PosSet::empty(n);
    for v in game.internals() {
        if let Some(a) = terminal_escape(game, v) {
            let player = game.controller(v).expect("internal");
            if game.prefers(player, Outcome::Terminal(a), Outcome::Infinite) {
                s.insert(v);
            }
        }
    }
    let w = if s.contains(game.init()) {
        PosSet::empty(n)
    } else {
        let allowed = PosSet::from_positions(n, game.internals().filter(|&v| !s.contains(v)));
        crate::game::reachable_unchecked(game, game.init(), &allowed)
    };
    let rest: Vec<bool> = game
        .positions()
        .map(|v| !game.is_terminal(v) && !s.contains(v) && !w.contains(v))
        .collect();
    let q = PosSet::from_mask(game.digraph().induced(&rest).cycle_reaching());
    let r = PosSet::from_positions(
        n,
        game.positions()
            .filter(|&v| rest[v.index()] && !q.contains(v)),
    );
    Partition { s, w, q, r }
}

impl Partition {
    /// Checks the defining laws of the partition against `game`.
    pub fn check(&self, game: &Game) -> Result<(), String> {
        let sets = [
            ("S", &self.s),
            ("W", &self.w),
            ("Q", &self.q),
            ("R", &self.r),
        ];
        for v in game.positions() {
            let count = sets.iter().filter(|(_, set)| set.contains(v)).count();
            let expected = usize::from(!game.is_terminal(v));
            if count != expected {
                return Err(format!("position {} lies in {count} parts", game.name(v)));
            }
        }
        let fresh = partition(game);
        if fresh != *self {
            return Err("partition differs from its definition".into());
        }
        let dg = game.digraph();
        if !dg.induced(self.r.mask()).is_acyclic() {
            return Err("R is not acyclic".into());
        }
        let q_graph = dg.induced(self.q.mask());
        let reaches = q_graph.cycle_reaching();
        if let Some(v) = self.q.iter().find(|v| !reaches[v.index()]) {
            return Err(format!("{} in Q reaches no cycle inside Q", game.name(v)));
        }
        Ok(())
    }

    pub fn w_has_cycle(&self, game: &Game) -> bool {
        !game.digraph().induced(self.w.mask()).is_acyclic()
    }
}

/// Lowest-named successor of `v` that is not a terminal, if any.
fn non_terminating(game: &Game, v: Pos) -> Option<Pos> {
    game.successors(v)
        .iter()
        .copied()
        .find(|&w| !game.is_terminal(w))
}

/// Infinite equilibrium: a lasso from the initial position into a cycle of
/// `W`, everybody else moving to a non-terminal successor.
pub fn non_terminal_ne_from_w_cycle(
    game: &Game,
    part: &Partition,
) -> Result<Situation, SolveError> {
    let w_graph = game.digraph().induced(part.w.mask());
    let alive = w_graph.cycle_reaching();
    if !alive[game.init().index()] {
        return Err(SolveError::Precondition("W acyclic".into()));
    }
    let mut situation = Situation::first(game);
    for v in game.internals() {
        if let Some(w) = non_terminating(game, v) {
            situation.set(v, w);
        }
    }
    let (stem, cycle) = w_graph.lasso_from(game.init().index(), &alive);
    let lasso: Vec<usize> = stem.iter().chain(&cycle).copied().collect();
    for pair in lasso.windows(2) {
        situation.set(Pos::from_index(pair[0]), Pos::from_index(pair[1]));
    }
    let last = *lasso.last().expect("cycle is non-empty");
    situation.set(Pos::from_index(last), Pos::from_index(cycle[0]));
    Ok(situation)
}

/// An inclusion-minimal set of non-terminal arcs leaving `S` whose removal
/// makes the graph outside `Q` acyclic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeedbackSet {
    /// Sorted by (source name, target name).
    pub arcs: Vec<(Pos, Pos)>,
}

impl FeedbackSet {
    pub fn contains(&self, from: Pos, to: Pos) -> bool {
        self.arcs.binary_search(&(from, to)).is_ok()
    }
}

fn outside_q(game: &Game, part: &Partition) -> Digraph {
    let keep: Vec<bool> = game.positions().map(|v| !part.q.contains(v)).collect();
    game.digraph().induced(&keep)
}

/// Starts with every candidate arc removed and puts them back one at a time,
/// in (source, target) name order, whenever that keeps the graph acyclic.
pub fn minimal_feedback_arcs(game: &Game, part: &Partition) -> Result<FeedbackSet, SolveError> {
    if part.w_has_cycle(game) {
        return Err(SolveError::Precondition("G[W] has a cycle".into()));
    }
    let base = outside_q(game, part);
    let candidates: Vec<(usize, usize)> = (0..base.len())
        .filter(|&u| part.s.contains(Pos::from_index(u)))
        .flat_map(|u| base.successors(u).iter().map(move |&v| (u, v)))
        .filter(|&(_, v)| !game.is_terminal(Pos::from_index(v)))
        .collect();
    let is_candidate: BTreeSet<(usize, usize)> = candidates.iter().copied().collect();
    let mut graph = base.without_arcs(|u, v| is_candidate.contains(&(u, v)));
    if let Some(cycle) = graph.find_cycle() {
        let names: Vec<&str> = cycle
            .iter()
            .map(|&v| game.name(Pos::from_index(v)))
            .collect();
        return Err(SolveError::Internal(format!(
            "cycle avoiding S outside Q: {}",
            names.join(" -> ")
        )));
    }
    let mut removed = Vec::new();
    for (u, v) in candidates {
        graph.add_arc(u, v);
        if !graph.is_acyclic() {
            graph.remove_arc(u, v);
            removed.push((Pos::from_index(u), Pos::from_index(v)));
        }
    }
    Ok(FeedbackSet { arcs: removed })
}

/// Checks that `feedback` is a valid feedback set for `part` and that putting
/// back any single arc recreates a cycle.
pub fn check_feedback_minimal(
    game: &Game,
    part: &Partition,
    feedback: &FeedbackSet,
) -> Result<(), String> {
    let base = outside_q(game, part);
    for &(u, v) in &feedback.arcs {
        if !part.s.contains(u) {
            return Err(format!(
                "arc {} -> {} does not leave S",
                game.name(u),
                game.name(v)
            ));
        }
        if game.is_terminal(v) {
            return Err(format!(
                "arc {} -> {} enters a terminal",
                game.name(u),
                game.name(v)
            ));
        }
        if part.q.contains(v) || !game.has_move(u, v) {
            return Err(format!(
                "arc {} -> {} is not an arc outside Q",
                game.name(u),
                game.name(v)
            ));
        }
    }
    let cut = base.without_arcs(|u, v| feedback.contains(Pos::from_index(u), Pos::from_index(v)));
    if !cut.is_acyclic() {
        return Err("graph outside Q is still cyclic".into());
    }
    for &(u, v) in &feedback.arcs {
        let mut g = cut.clone();
        g.add_arc(u.index(), v.index());
        if g.is_acyclic() {
            return Err(format!(
                "arc {} -> {} can be restored",
                game.name(u),
                game.name(v)
            ));
        }
    }
    Ok(())
}

/// Pieces of the terminal-equilibrium construction, kept for inspection.
#[derive(Clone, Debug)]
pub struct TerminalConstruction {
    pub situation: Situation,
    /// Backward-induction choices outside `Q` (inside `Q` identical to `situation`).
    pub induction: Situation,
    /// Positions of the in-tree rooted at the terminal outcome.
    pub tree: PosSet,
    pub outcome: Outcome,
}

pub fn terminal_ne_construct(
    game: &Game,
    part: &Partition,
    feedback: &FeedbackSet,
) -> Result<Situation, SolveError> {
    terminal_construction(game, part, feedback).map(|c| c.situation)
}

pub fn terminal_construction(
    game: &Game,
    part: &Partition,
    feedback: &FeedbackSet,
) -> Result<TerminalConstruction, SolveError> {
    let cut = outside_q(game, part)
        .without_arcs(|u, v| feedback.contains(Pos::from_index(u), Pos::from_index(v)));
    if let Some(v) = game
        .internals()
        .find(|v| !part.q.contains(*v) && cut.successors(v.index()).is_empty())
    {
        return Err(SolveError::Internal(format!(
            "position {} has no move left after cutting",
            game.name(v)
        )));
    }
    let (bi_choice, _) = induce(game, &cut)?;

    let mut choice = bi_choice.clone();
    for v in part.q.iter() {
        let inside = game
            .successors(v)
            .iter()
            .copied()
            .find(|w| part.q.contains(*w));
        choice[v.index()] = Some(inside.ok_or_else(|| {
            SolveError::Internal(format!("{} in Q has no successor in Q", game.name(v)))
        })?);
    }
    let induction = Situation::new_unchecked(choice.clone());
    let play = crate::game::play_unchecked(game, &choice, game.init());
    let Outcome::Terminal(root) = play.outcome else {
        return Err(SolveError::Internal(
            "backward induction play is not terminal".into(),
        ));
    };

    let mut tree = PosSet::from_positions(game.len(), play.walk.iter().copied());
    let pred = cut.predecessors();
    let mut queue: VecDeque<Pos> = play.walk.iter().rev().copied().collect();
    while let Some(x) = queue.pop_front() {
        let mut from: Vec<usize> = pred[x.index()].clone();
        from.sort_unstable();
        for p in from.into_iter().map(Pos::from_index) {
            if tree.insert(p) {
                choice[p.index()] = Some(x);
                queue.push_back(p);
            }
        }
    }
    Ok(TerminalConstruction {
        situation: Situation::new_unchecked(choice),
        induction,
        tree,
        outcome: Outcome::Terminal(root),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlayOnceRoute {
    /// The initial position only had terminal moves.
    InitFixed,
    /// `W` has a cycle: infinite equilibrium.
    NonTerminal,
    /// `W` is acyclic: terminal equilibrium.
    Terminal,
}

#[derive(Clone, Debug)]
pub struct PlayOnceReport {
    pub situation: Situation,
    pub route: PlayOnceRoute,
    pub normalization: Normalization,
    pub partition: Option<Partition>,
    pub feedback: Option<FeedbackSet>,
    pub construction: Option<TerminalConstruction>,
}

pub fn solve_play_once(game: &Game) -> Result<Situation, SolveError> {
    solve_play_once_report(game).map(|r| r.situation)
}

/// Normalizes, partitions, builds the equilibrium and lifts it back, checking
/// every intermediate invariant and the final NE property.
pub fn solve_play_once_report(game: &Game) -> Result<PlayOnceReport, SolveError> {
    let normalization = normalize_play_once(game)?;
    let Some(reduced) = normalization.game.clone() else {
        let situation = normalization.lift(game, None);
        return finish(
            game,
            situation,
            PlayOnceRoute::InitFixed,
            normalization,
            None,
            None,
            None,
        );
    };
    let part = partition(&reduced);
    part.check(&reduced).map_err(SolveError::Internal)?;
    if part.w_has_cycle(&reduced) {
        let s = non_terminal_ne_from_w_cycle(&reduced, &part)?;
        if outcome_unchecked(s.raw(), reduced.init()) != Outcome::Infinite {
            return Err(SolveError::Internal(
                "cycle situation does not cycle".into(),
            ));
        }
        let situation = normalization.lift(game, Some(&s));
        return finish(
            game,
            situation,
            PlayOnceRoute::NonTerminal,
            normalization,
            Some(part),
            None,
            None,
        );
    }
    let feedback = minimal_feedback_arcs(&reduced, &part)?;
    check_feedback_minimal(&reduced, &part, &feedback).map_err(SolveError::Internal)?;
    let construction = terminal_construction(&reduced, &part, &feedback)?;
    check_tree_outcomes(&reduced, &part, &construction)?;
    let situation = normalization.lift(game, Some(&construction.situation));
    finish(
        game,
        situation,
        PlayOnceRoute::Terminal,
        normalization,
        Some(part),
        Some(feedback),
        Some(construction),
    )
}

/// Outside `Q` every position either ends where the equilibrium play ends or
/// where backward induction alone would have taken it.
pub fn check_tree_outcomes(
    game: &Game,
    part: &Partition,
    c: &TerminalConstruction,
) -> Result<(), SolveError> {
    for w in game.internals().filter(|w| !part.q.contains(*w)) {
        let got = outcome_unchecked(c.situation.raw(), w);
        let bi = outcome_unchecked(c.induction.raw(), w);
        if got != c.outcome && got != bi {
            return Err(SolveError::Internal(format!(
                "position {} ends outside both allowed outcomes",
                game.name(w)
            )));
        }
    }
    let play = crate::game::play_unchecked(game, c.situation.raw(), game.init());
    let bi_play = crate::game::play_unchecked(game, c.induction.raw(), game.init());
    if play != bi_play {
        return Err(SolveError::Internal(
            "tree changed the equilibrium play".into(),
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    game: &Game,
    situation: Situation,
    route: PlayOnceRoute,
    normalization: Normalization,
    partition: Option<Partition>,
    feedback: Option<FeedbackSet>,
    construction: Option<TerminalConstruction>,
) -> Result<PlayOnceReport, SolveError> {
    situation.validate(game)?;
    let verdict = check_ne_unchecked(game, &situation);
    if let Some(w) = verdict.witness {
        return Err(SolveError::Internal(format!(
            "lifted situation is not a NE: player {} improves to {}",
            w.player,
            game.outcome_name(w.outcome)
        )));
    }
    Ok(PlayOnceReport {
        situation,
        route,
        normalization,
        partition,
        feedback,
        construction,
    })
}
