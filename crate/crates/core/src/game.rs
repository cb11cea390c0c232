//! The game model: positions, moves, controllers, preferences, situations and
//! the plays they induce, plus the definitional Nash-equilibrium check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::Digraph;

/// A player, numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(u32);

impl PlayerId {
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(PlayerId(index))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub(crate) fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a position inside its [`Game`].
///
/// Positions are stored sorted by name, so comparing two `Pos` values of the
/// same game compares their names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos(pub(crate) u32);

impl Pos {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        Pos(index as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Terminal(Pos),
    Infinite,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        matches!(self, Outcome::Terminal(_))
    }
}

/// An outcome spelled by name, used when building games and in text I/O.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutcomeName {
    Terminal(String),
    Infinite,
}

impl fmt::Display for OutcomeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeName::Terminal(t) => f.write_str(t),
            OutcomeName::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("game must have at least one player")]
    NoPlayers,
    #[error("invalid identifier {0:?}")]
    InvalidName(String),
    #[error("duplicate position {0}")]
    DuplicatePosition(String),
    #[error("unknown position {0}")]
    UnknownPosition(String),
    #[error("unknown controller index {controller} for position {position}")]
    UnknownController { position: String, controller: u32 },
    #[error("move from terminal {0}")]
    MoveFromTerminal(String),
    #[error("duplicate move {0} -> {1}")]
    DuplicateMove(String, String),
    #[error("internal position {0} has no moves")]
    ZeroOutDegree(String),
    #[error("missing init")]
    MissingInit,
    #[error("init {0} is not an internal position")]
    InitNotInternal(String),
    #[error("game has no internal positions")]
    NoInternalPositions,
    #[error("unknown player {0} in preferences")]
    UnknownPlayer(u32),
    #[error("missing pref for player {0}")]
    MissingPref(u32),
    #[error("duplicate pref for player {0}")]
    DuplicatePref(u32),
    #[error("pref for player {player} missing outcome {outcome}")]
    PrefMissingOutcome { player: u32, outcome: String },
    #[error("pref for player {player} lists outcome {outcome} twice")]
    PrefDuplicateOutcome { player: u32, outcome: String },
    #[error("pref for player {player} names unknown outcome {outcome}")]
    PrefUnknownOutcome { player: u32, outcome: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SituationError {
    #[error("situation has {found} entries, game has {expected} positions")]
    WrongSize { expected: usize, found: usize },
    #[error("no move chosen at position {0}")]
    MissingChoice(String),
    #[error("terminal {0} cannot choose a move")]
    ChoiceAtTerminal(String),
    #[error("chosen move {0} -> {1} is not a move of the game")]
    NotAMove(String, String),
    #[error("unknown position {0}")]
    UnknownPosition(String),
    #[error("position {0} chosen twice")]
    DuplicateChoice(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PositionData {
    name: String,
    controller: Option<PlayerId>,
}

/// A finite n-person deterministic graphical game.
///
/// Immutable once built; construct one with [`GameBuilder`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    players: u32,
    positions: Vec<PositionData>,
    succ: Vec<Vec<Pos>>,
    init: Pos,
    prefs: Vec<Vec<Outcome>>,
    // rank[player][slot]: 0 = best; slot = position index, or positions.len() for inf
    rank: Vec<Vec<u32>>,
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    name != "inf" && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Accumulates positions, moves and preferences and validates them into a [`Game`].
#[derive(Debug, Clone, Default)]
pub struct GameBuilder {
    players: u32,
    terminals: Vec<String>,
    internals: Vec<(String, u32)>,
    moves: Vec<(String, String)>,
    init: Option<String>,
    prefs: Vec<(u32, Vec<OutcomeName>)>,
}

impl GameBuilder {
    pub fn new(players: u32) -> Self {
        GameBuilder {
            players,
            ..Default::default()
        }
    }

    pub fn terminal(&mut self, name: impl Into<String>) -> &mut Self {
        self.terminals.push(name.into());
        self
    }

    pub fn position(&mut self, name: impl Into<String>, controller: u32) -> &mut Self {
        self.internals.push((name.into(), controller));
        self
    }

    pub fn add_move(&mut self, from: impl Into<String>, to: impl Into<String>) -> &mut Self {
        self.moves.push((from.into(), to.into()));
        self
    }

    pub fn init(&mut self, name: impl Into<String>) -> &mut Self {
        self.init = Some(name.into());
        self
    }

    /// Ranked outcomes for `player`, best first.
    pub fn pref(&mut self, player: u32, ranked: Vec<OutcomeName>) -> &mut Self {
        self.prefs.push((player, ranked));
        self
    }

    /// Convenience form of [`GameBuilder::pref`]: names, with `"inf"` for the infinite outcome.
    pub fn pref_names(&mut self, player: u32, ranked: &[&str]) -> &mut Self {
        let ranked = ranked
            .iter()
            .map(|s| match *s {
                "inf" => OutcomeName::Infinite,
                t => OutcomeName::Terminal(t.to_string()),
            })
            .collect();
        self.pref(player, ranked)
    }

    pub fn build(&self) -> Result<Game, GameError> {
        if self.players == 0 {
            return Err(GameError::NoPlayers);
        }
        let mut entries: BTreeMap<&str, Option<PlayerId>> = BTreeMap::new();
        for t in &self.terminals {
            if !is_identifier(t) {
                return Err(GameError::InvalidName(t.clone()));
            }
            if entries.insert(t, None).is_some() {
                return Err(GameError::DuplicatePosition(t.clone()));
            }
        }
        for (name, controller) in &self.internals {
            if !is_identifier(name) {
                return Err(GameError::InvalidName(name.clone()));
            }
            if *controller == 0 || *controller > self.players {
                return Err(GameError::UnknownController {
                    position: name.clone(),
                    controller: *controller,
                });
            }
            if entries.insert(name, PlayerId::new(*controller)).is_some() {
                return Err(GameError::DuplicatePosition(name.clone()));
            }
        }
        if self.internals.is_empty() {
            return Err(GameError::NoInternalPositions);
        }
        let positions: Vec<PositionData> = entries
            .iter()
            .map(|(name, controller)| PositionData {
                name: name.to_string(),
                controller: *controller,
            })
            .collect();
        let index: BTreeMap<&str, Pos> = entries
            .keys()
            .enumerate()
            .map(|(i, name)| (*name, Pos::from_index(i)))
            .collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| GameError::UnknownPosition(name.to_string()))
        };

        let mut succ = vec![Vec::new(); positions.len()];
        let mut seen = BTreeSet::new();
        for (from, to) in &self.moves {
            let f = lookup(from)?;
            let t = lookup(to)?;
            if positions[f.index()].controller.is_none() {
                return Err(GameError::MoveFromTerminal(from.clone()));
            }
            if !seen.insert((f, t)) {
                return Err(GameError::DuplicateMove(from.clone(), to.clone()));
            }
            succ[f.index()].push(t);
        }
        for (p, out) in positions.iter().zip(succ.iter_mut()) {
            if p.controller.is_some() && out.is_empty() {
                return Err(GameError::ZeroOutDegree(p.name.clone()));
            }
            out.sort();
        }

        let init_name = self.init.as_ref().ok_or(GameError::MissingInit)?;
        let init = lookup(init_name)?;
        if positions[init.index()].controller.is_none() {
            return Err(GameError::InitNotInternal(init_name.clone()));
        }

        let mut by_player: BTreeMap<u32, &Vec<OutcomeName>> = BTreeMap::new();
        for (player, ranked) in &self.prefs {
            if *player == 0 || *player > self.players {
                return Err(GameError::UnknownPlayer(*player));
            }
            if by_player.insert(*player, ranked).is_some() {
                return Err(GameError::DuplicatePref(*player));
            }
        }
        let terminal_count = positions.iter().filter(|p| p.controller.is_none()).count();
        let inf_slot = positions.len();
        let mut prefs = Vec::with_capacity(self.players as usize);
        let mut rank = Vec::with_capacity(self.players as usize);
        for player in 1..=self.players {
            let ranked = by_player
                .get(&player)
                .ok_or(GameError::MissingPref(player))?;
            let mut order = Vec::with_capacity(terminal_count + 1);
            let mut ranks = vec![u32::MAX; positions.len() + 1];
            for outcome in ranked.iter() {
                let (slot, resolved) = match outcome {
                    OutcomeName::Infinite => (inf_slot, Outcome::Infinite),
                    OutcomeName::Terminal(t) => match index.get(t.as_str()) {
                        Some(&p) if positions[p.index()].controller.is_none() => {
                            (p.index(), Outcome::Terminal(p))
                        }
                        _ => {
                            return Err(GameError::PrefUnknownOutcome {
                                player,
                                outcome: t.clone(),
                            });
                        }
                    },
                };
                if ranks[slot] != u32::MAX {
                    return Err(GameError::PrefDuplicateOutcome {
                        player,
                        outcome: outcome.to_string(),
                    });
                }
                ranks[slot] = order.len() as u32;
                order.push(resolved);
            }
            for (i, p) in positions.iter().enumerate() {
                if p.controller.is_none() && ranks[i] == u32::MAX {
                    return Err(GameError::PrefMissingOutcome {
                        player,
                        outcome: p.name.clone(),
                    });
                }
            }
            if ranks[inf_slot] == u32::MAX {
                return Err(GameError::PrefMissingOutcome {
                    player,
                    outcome: "inf".into(),
                });
            }
            prefs.push(order);
            rank.push(ranks);
        }

        Ok(Game {
            players: self.players,
            positions,
            succ,
            init,
            prefs,
            rank,
        })
    }
}

impl Game {
    pub fn players(&self) -> u32 {
        self.players
    }

    pub fn player_ids(&self) -> impl Iterator<Item = PlayerId> {
        (1..=self.players).map(PlayerId)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// All positions in name order.
    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.positions.len()).map(Pos::from_index)
    }

    pub fn internals(&self) -> impl Iterator<Item = Pos> + '_ {
        self.positions().filter(|&p| !self.is_terminal(p))
    }

    pub fn terminals(&self) -> impl Iterator<Item = Pos> + '_ {
        self.positions().filter(|&p| self.is_terminal(p))
    }

    pub fn internal_count(&self) -> usize {
        self.internals().count()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals().count()
    }

    pub fn name(&self, p: Pos) -> &str {
        &self.positions[p.index()].name
    }

    pub fn find(&self, name: &str) -> Option<Pos> {
        self.positions
            .binary_search_by(|d| d.name.as_str().cmp(name))
            .ok()
            .map(Pos::from_index)
    }

    pub fn is_terminal(&self, p: Pos) -> bool {
        self.positions[p.index()].controller.is_none()
    }

    /// The controller of an internal position; `None` for terminals.
    pub fn controller(&self, p: Pos) -> Option<PlayerId> {
        self.positions[p.index()].controller
    }

    /// Out-neighbours of `p`, sorted by name.
    pub fn successors(&self, p: Pos) -> &[Pos] {
        &self.succ[p.index()]
    }

    pub fn out_degree(&self, p: Pos) -> usize {
        self.succ[p.index()].len()
    }

    pub fn has_move(&self, from: Pos, to: Pos) -> bool {
        self.succ[from.index()].binary_search(&to).is_ok()
    }

    pub fn move_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// All moves, ordered by (source name, target name).
    pub fn moves(&self) -> impl Iterator<Item = (Pos, Pos)> + '_ {
        self.positions()
            .flat_map(move |p| self.successors(p).iter().map(move |&q| (p, q)))
    }

    pub fn init(&self) -> Pos {
        self.init
    }

    /// Positions controlled by `player`, in name order.
    pub fn positions_of(&self, player: PlayerId) -> Vec<Pos> {
        self.internals()
            .filter(|&p| self.controller(p) == Some(player))
            .collect()
    }

    /// `player`'s ranked outcomes, best first.
    pub fn preference(&self, player: PlayerId) -> &[Outcome] {
        &self.prefs[player.slot()]
    }

    fn slot(&self, outcome: Outcome) -> usize {
        match outcome {
            Outcome::Terminal(t) => t.index(),
            Outcome::Infinite => self.positions.len(),
        }
    }

    /// Rank of `outcome` for `player`; 0 is the best.
    pub fn rank(&self, player: PlayerId, outcome: Outcome) -> u32 {
        self.rank[player.slot()][self.slot(outcome)]
    }

    /// Whether `player` strictly prefers `a` to `b`.
    pub fn prefers(&self, player: PlayerId, a: Outcome, b: Outcome) -> bool {
        self.rank(player, a) < self.rank(player, b)
    }

    /// Rank of terminal `t` among terminals only (1 = best), i.e. the `k` of a #k-move into `t`.
    pub fn terminal_rank(&self, player: PlayerId, t: Pos) -> usize {
        1 + self
            .preference(player)
            .iter()
            .take_while(|&&o| o != Outcome::Terminal(t))
            .filter(|o| o.is_terminal())
            .count()
    }

    pub fn outcome_name(&self, outcome: Outcome) -> OutcomeName {
        match outcome {
            Outcome::Terminal(t) => OutcomeName::Terminal(self.name(t).to_string()),
            Outcome::Infinite => OutcomeName::Infinite,
        }
    }

    pub fn resolve_outcome(&self, name: &OutcomeName) -> Option<Outcome> {
        match name {
            OutcomeName::Infinite => Some(Outcome::Infinite),
            OutcomeName::Terminal(t) => self
                .find(t)
                .filter(|&p| self.is_terminal(p))
                .map(Outcome::Terminal),
        }
    }

    /// A builder pre-filled with this game, for deriving modified games.
    pub fn to_builder(&self) -> GameBuilder {
        let mut b = GameBuilder::new(self.players);
        for p in self.positions() {
            match self.controller(p) {
                None => b.terminal(self.name(p)),
                Some(c) => b.position(self.name(p), c.get()),
            };
        }
        for (f, t) in self.moves() {
            b.add_move(self.name(f), self.name(t));
        }
        b.init(self.name(self.init));
        for player in self.player_ids() {
            let ranked = self
                .preference(player)
                .iter()
                .map(|&o| self.outcome_name(o))
                .collect();
            b.pref(player.get(), ranked);
        }
        b
    }

    pub(crate) fn digraph(&self) -> Digraph {
        Digraph::new(
            self.succ
                .iter()
                .map(|s| s.iter().map(|p| p.index()).collect())
                .collect(),
        )
    }
}

/// A set of positions of one game.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PosSet(Vec<bool>);

impl PosSet {
    pub fn empty(len: usize) -> Self {
        PosSet(vec![false; len])
    }

    pub fn from_positions(len: usize, items: impl IntoIterator<Item = Pos>) -> Self {
        let mut s = PosSet::empty(len);
        for p in items {
            s.insert(p);
        }
        s
    }

    pub(crate) fn from_mask(mask: Vec<bool>) -> Self {
        PosSet(mask)
    }

    pub(crate) fn mask(&self) -> &[bool] {
        &self.0
    }

    pub fn contains(&self, p: Pos) -> bool {
        self.0.get(p.index()).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, p: Pos) -> bool {
        !std::mem::replace(&mut self.0[p.index()], true)
    }

    pub fn remove(&mut self, p: Pos) -> bool {
        std::mem::replace(&mut self.0[p.index()], false)
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = Pos> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| Pos::from_index(i))
    }

    pub fn is_disjoint(&self, other: &PosSet) -> bool {
        self.0.iter().zip(&other.0).all(|(&a, &b)| !(a && b))
    }

    pub fn names<'g>(&self, game: &'g Game) -> Vec<&'g str> {
        self.iter().map(|p| game.name(p)).collect()
    }
}

impl fmt::Debug for PosSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|p| p.0)).finish()
    }
}

/// One chosen move per internal position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Situation {
    choice: Vec<Option<Pos>>,
}

impl Situation {
    /// Wraps raw choices after checking them against `game`.
    pub fn new(game: &Game, choice: Vec<Option<Pos>>) -> Result<Self, SituationError> {
        let s = Situation { choice };
        s.validate(game)?;
        Ok(s)
    }

    pub(crate) fn new_unchecked(choice: Vec<Option<Pos>>) -> Self {
        Situation { choice }
    }

    /// Every internal position takes its first (lowest-named) move.
    pub fn first(game: &Game) -> Self {
        Situation {
            choice: game
                .positions()
                .map(|p| game.successors(p).first().copied())
                .collect(),
        }
    }

    /// Builds a situation from `(from, to)` name pairs covering every internal position.
    pub fn from_named<'a>(
        game: &Game,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, SituationError> {
        let mut choice = vec![None; game.len()];
        for (from, to) in pairs {
            let f = game
                .find(from)
                .ok_or_else(|| SituationError::UnknownPosition(from.to_string()))?;
            let t = game
                .find(to)
                .ok_or_else(|| SituationError::UnknownPosition(to.to_string()))?;
            if game.is_terminal(f) {
                return Err(SituationError::ChoiceAtTerminal(from.to_string()));
            }
            if choice[f.index()].replace(t).is_some() {
                return Err(SituationError::DuplicateChoice(from.to_string()));
            }
        }
        Situation::new(game, choice)
    }

    pub fn validate(&self, game: &Game) -> Result<(), SituationError> {
        if self.choice.len() != game.len() {
            return Err(SituationError::WrongSize {
                expected: game.len(),
                found: self.choice.len(),
            });
        }
        for p in game.positions() {
            match (game.is_terminal(p), self.choice[p.index()]) {
                (true, None) => {}
                (true, Some(_)) => {
                    return Err(SituationError::ChoiceAtTerminal(game.name(p).into()))
                }
                (false, None) => return Err(SituationError::MissingChoice(game.name(p).into())),
                (false, Some(q)) => {
                    if q.index() >= game.len() || !game.has_move(p, q) {
                        let target = if q.index() < game.len() {
                            game.name(q).to_string()
                        } else {
                            format!("#{}", q.0)
                        };
                        return Err(SituationError::NotAMove(game.name(p).into(), target));
                    }
                }
            }
        }
        Ok(())
    }

    /// The move chosen at `p`; `None` for terminals.
    pub fn choice(&self, p: Pos) -> Option<Pos> {
        self.choice[p.index()]
    }

    pub fn set(&mut self, p: Pos, to: Pos) {
        self.choice[p.index()] = Some(to);
    }

    pub(crate) fn raw(&self) -> &[Option<Pos>] {
        &self.choice
    }

    /// `(from, to)` name pairs in position order.
    pub fn named<'g>(&self, game: &'g Game) -> Vec<(&'g str, &'g str)> {
        game.positions()
            .filter_map(|p| self.choice[p.index()].map(|q| (game.name(p), game.name(q))))
            .collect()
    }

    /// Positions whose choices differ between `self` and `other`.
    pub fn diff(&self, other: &Situation) -> Vec<Pos> {
        self.choice
            .iter()
            .zip(&other.choice)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| Pos::from_index(i))
            .collect()
    }
}

/// The walk a situation induces from a start position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Play {
    /// Visited positions. For an infinite play the first repeated position is
    /// included once more at the end.
    pub walk: Vec<Pos>,
    pub outcome: Outcome,
    /// Index into `walk` where the cycle begins, for infinite plays.
    pub cycle_start: Option<usize>,
}

/// Follows `situation` from `start`.
pub fn evaluate(game: &Game, situation: &Situation, start: Pos) -> Result<Play, SituationError> {
    situation.validate(game)?;
    Ok(play_unchecked(game, situation.raw(), start))
}

pub(crate) fn play_unchecked(game: &Game, choice: &[Option<Pos>], start: Pos) -> Play {
    let mut seen = vec![usize::MAX; game.len()];
    let mut walk = Vec::new();
    let mut v = start;
    loop {
        if seen[v.index()] != usize::MAX {
            let cycle_start = seen[v.index()];
            walk.push(v);
            return Play {
                walk,
                outcome: Outcome::Infinite,
                cycle_start: Some(cycle_start),
            };
        }
        seen[v.index()] = walk.len();
        walk.push(v);
        match choice[v.index()] {
            None => {
                return Play {
                    walk,
                    outcome: Outcome::Terminal(v),
                    cycle_start: None,
                }
            }
            Some(next) => v = next,
        }
    }
}

/// Outcome of the walk from `start`. A walk that takes more steps than there
/// are positions without reaching a terminal must have revisited one.
pub(crate) fn outcome_unchecked(choice: &[Option<Pos>], start: Pos) -> Outcome {
    let mut v = start;
    for _ in 0..=choice.len() {
        match choice[v.index()] {
            None => return Outcome::Terminal(v),
            Some(next) => v = next,
        }
    }
    Outcome::Infinite
}

/// The outcome of the play from the initial position.
pub fn outcome(game: &Game, situation: &Situation) -> Result<Outcome, SituationError> {
    situation.validate(game)?;
    Ok(outcome_unchecked(situation.raw(), game.init()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deviation {
    pub player: PlayerId,
    pub situation: Situation,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeVerdict {
    pub outcome: Outcome,
    /// An improving deviation; `None` exactly when the situation is a NE.
    pub witness: Option<Deviation>,
}

impl NeVerdict {
    pub fn is_ne(&self) -> bool {
        self.witness.is_none()
    }
}

/// Visits every strategy of a player in mixed-radix order (first position most
/// significant, successors in name order), writing each into `choice`.
/// Stops early when `visit` returns `false`. `choice` is restored afterwards.
pub(crate) fn for_each_strategy(
    game: &Game,
    owned: &[Pos],
    choice: &mut [Option<Pos>],
    mut visit: impl FnMut(&[Option<Pos>]) -> bool,
) {
    let saved: Vec<Option<Pos>> = owned.iter().map(|p| choice[p.index()]).collect();
    let mut digits = vec![0usize; owned.len()];
    for &p in owned {
        choice[p.index()] = Some(game.successors(p)[0]);
    }
    'outer: loop {
        if !visit(choice) {
            break;
        }
        for k in (0..owned.len()).rev() {
            let p = owned[k];
            let succ = game.successors(p);
            digits[k] += 1;
            if digits[k] < succ.len() {
                choice[p.index()] = Some(succ[digits[k]]);
                continue 'outer;
            }
            digits[k] = 0;
            choice[p.index()] = Some(succ[0]);
        }
        break;
    }
    for (&p, s) in owned.iter().zip(saved) {
        choice[p.index()] = s;
    }
}

/// Exhaustive Nash-equilibrium check.
///
/// Players are tried in ascending order and each player's strategies in
/// mixed-radix order; the first strictly improving deviation is the witness.
pub fn check_ne(game: &Game, situation: &Situation) -> Result<NeVerdict, SituationError> {
    situation.validate(game)?;
    Ok(check_ne_unchecked(game, situation))
}

pub(crate) fn check_ne_unchecked(game: &Game, situation: &Situation) -> NeVerdict {
    let current = outcome_unchecked(situation.raw(), game.init());
    let mut choice = situation.raw().to_vec();
    for player in game.player_ids() {
        let owned = game.positions_of(player);
        let current_rank = game.rank(player, current);
        let mut found = None;
        for_each_strategy(game, &owned, &mut choice, |c| {
            let o = outcome_unchecked(c, game.init());
            if game.rank(player, o) < current_rank {
                found = Some((c.to_vec(), o));
                false
            } else {
                true
            }
        });
        if let Some((c, o)) = found {
            return NeVerdict {
                outcome: current,
                witness: Some(Deviation {
                    player,
                    situation: Situation::new_unchecked(c),
                    outcome: o,
                }),
            };
        }
    }
    NeVerdict {
        outcome: current,
        witness: None,
    }
}

/// The best outcome `player` can reach by changing only their own choices.
///
/// The current situation is kept when nothing strictly better exists;
/// otherwise the first best strategy in enumeration order is returned.
pub fn best_response(
    game: &Game,
    situation: &Situation,
    player: PlayerId,
) -> Result<(Outcome, Situation), SituationError> {
    situation.validate(game)?;
    Ok(best_response_unchecked(game, situation, player))
}

pub(crate) fn best_response_unchecked(
    game: &Game,
    situation: &Situation,
    player: PlayerId,
) -> (Outcome, Situation) {
    let mut best = outcome_unchecked(situation.raw(), game.init());
    let mut best_choice = None;
    if player.get() <= game.players() {
        let owned = game.positions_of(player);
        let mut choice = situation.raw().to_vec();
        for_each_strategy(game, &owned, &mut choice, |c| {
            let o = outcome_unchecked(c, game.init());
            if game.prefers(player, o, best) {
                best = o;
                best_choice = Some(c.to_vec());
            }
            true
        });
    }
    let s = best_choice
        .map(Situation::new_unchecked)
        .unwrap_or_else(|| situation.clone());
    (best, s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    /// Every player ranks the infinite outcome last.
    pub is_terminal_game: bool,
    /// Every player controls exactly one position.
    pub is_play_once: bool,
    pub terminal_reachable_from_init: bool,
}

pub fn classify(game: &Game) -> Classification {
    let is_terminal_game = game
        .player_ids()
        .all(|p| game.preference(p).last() == Some(&Outcome::Infinite));
    let mut owned = vec![0usize; game.players() as usize];
    for p in game.internals() {
        owned[game.controller(p).expect("internal").slot()] += 1;
    }
    let is_play_once =
        owned.iter().all(|&c| c == 1) && game.internal_count() == game.players() as usize;
    let all = PosSet::from_mask(vec![true; game.len()]);
    let reach = reachable_unchecked(game, game.init(), &all);
    Classification {
        is_terminal_game,
        is_play_once,
        terminal_reachable_from_init: game.terminals().any(|t| reach.contains(t)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("start position {0} is not in the allowed set")]
pub struct NotAllowed(pub String);

/// Positions reachable from `from` along paths that stay inside `allowed`.
/// `from` itself is always included.
pub fn reachable(game: &Game, from: Pos, allowed: &PosSet) -> Result<PosSet, NotAllowed> {
    if !allowed.contains(from) {
        return Err(NotAllowed(game.name(from).to_string()));
    }
    Ok(reachable_unchecked(game, from, allowed))
}

pub(crate) fn reachable_unchecked(game: &Game, from: Pos, allowed: &PosSet) -> PosSet {
    let mut seen = PosSet::empty(game.len());
    seen.insert(from);
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        for &w in game.successors(v) {
            if allowed.contains(w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_choice() -> Game {
        let mut b = GameBuilder::new(1);
        b.terminal("x")
            .terminal("y")
            .position("v", 1)
            .add_move("v", "x")
            .add_move("v", "y")
            .init("v");
        b.pref_names(1, &["x", "y", "inf"]);
        b.build().unwrap()
    }

    #[test]
    fn forced_move_walk() {
        let mut b = GameBuilder::new(1);
        b.terminal("t")
            .position("v0", 1)
            .add_move("v0", "t")
            .init("v0")
            .pref_names(1, &["t", "inf"]);
        let g = b.build().unwrap();
        let s = Situation::from_named(&g, [("v0", "t")]).unwrap();
        let play = evaluate(&g, &s, g.init()).unwrap();
        assert_eq!(play.walk, vec![g.find("v0").unwrap(), g.find("t").unwrap()]);
        assert_eq!(play.outcome, Outcome::Terminal(g.find("t").unwrap()));
        let from_terminal = evaluate(&g, &s, g.find("t").unwrap()).unwrap();
        assert_eq!(from_terminal.walk.len(), 1);
    }

    #[test]
    fn dominated_choice_has_witness() {
        let g = single_choice();
        let y = g.find("y").unwrap();
        let x = g.find("x").unwrap();
        let s = Situation::from_named(&g, [("v", "y")]).unwrap();
        let verdict = check_ne(&g, &s).unwrap();
        assert_eq!(verdict.outcome, Outcome::Terminal(y));
        let w = verdict.witness.unwrap();
        assert_eq!(w.player.get(), 1);
        assert_eq!(w.outcome, Outcome::Terminal(x));
        assert_eq!(w.situation.choice(g.find("v").unwrap()), Some(x));
    }

    #[test]
    fn self_loop_is_infinite() {
        let mut b = GameBuilder::new(1);
        b.terminal("t")
            .position("v", 1)
            .add_move("v", "v")
            .add_move("v", "t")
            .init("v");
        b.pref_names(1, &["inf", "t"]);
        let g = b.build().unwrap();
        let s = Situation::from_named(&g, [("v", "v")]).unwrap();
        let play = evaluate(&g, &s, g.init()).unwrap();
        assert_eq!(play.outcome, Outcome::Infinite);
        assert_eq!(play.walk.len(), 2);
        assert_eq!(play.cycle_start, Some(0));
        assert!(check_ne(&g, &s).unwrap().is_ne());
    }

    #[test]
    fn invalid_situations_name_the_position() {
        let g = single_choice();
        let err = Situation::new(&g, vec![None; g.len()]).unwrap_err();
        assert_eq!(err, SituationError::MissingChoice("v".into()));
        let v = g.find("v").unwrap();
        let mut raw = vec![None; g.len()];
        raw[v.index()] = Some(v);
        assert_eq!(
            Situation::new(&g, raw).unwrap_err(),
            SituationError::NotAMove("v".into(), "v".into())
        );
        let err = Situation::from_named(&g, [("x", "y")]).unwrap_err();
        assert_eq!(err, SituationError::ChoiceAtTerminal("x".into()));
    }

    #[test]
    fn builder_rejects_bad_games() {
        let mut b = GameBuilder::new(2);
        b.terminal("a")
            .position("q", 1)
            .add_move("q", "a")
            .init("q");
        b.pref_names(1, &["a", "inf"]).pref_names(2, &["a"]);
        assert_eq!(
            b.build().unwrap_err().to_string(),
            "pref for player 2 missing outcome inf"
        );

        let mut b = GameBuilder::new(1);
        b.terminal("a")
            .position("q", 1)
            .add_move("q", "a")
            .add_move("a", "q")
            .init("q");
        b.pref_names(1, &["a", "inf"]);
        assert_eq!(b.build().unwrap_err().to_string(), "move from terminal a");

        let mut b = GameBuilder::new(1);
        b.terminal("a")
            .position("q", 1)
            .position("r", 1)
            .add_move("q", "a")
            .init("q");
        b.pref_names(1, &["a", "inf"]);
        assert_eq!(b.build().unwrap_err(), GameError::ZeroOutDegree("r".into()));

        let mut b = GameBuilder::new(1);
        b.terminal("a")
            .position("q", 3)
            .add_move("q", "a")
            .init("q");
        b.pref_names(1, &["a", "inf"]);
        assert!(matches!(
            b.build().unwrap_err(),
            GameError::UnknownController { controller: 3, .. }
        ));

        let mut b = GameBuilder::new(1);
        b.terminal("a").position("q", 1).add_move("q", "a");
        b.pref_names(1, &["a", "inf"]);
        assert_eq!(b.build().unwrap_err(), GameError::MissingInit);

        let mut b = GameBuilder::new(1);
        b.terminal("a")
            .position("q", 1)
            .add_move("q", "a")
            .add_move("q", "a")
            .init("q");
        b.pref_names(1, &["a", "inf"]);
        assert!(matches!(
            b.build().unwrap_err(),
            GameError::DuplicateMove(..)
        ));
    }

    #[test]
    fn best_response_without_positions_keeps_situation() {
        let mut b = GameBuilder::new(2);
        b.terminal("a")
            .position("q", 1)
            .add_move("q", "a")
            .init("q");
        b.pref_names(1, &["a", "inf"]).pref_names(2, &["inf", "a"]);
        let g = b.build().unwrap();
        let s = Situation::first(&g);
        let (o, s2) = best_response(&g, &s, PlayerId::new(2).unwrap()).unwrap();
        assert_eq!(o, Outcome::Terminal(g.find("a").unwrap()));
        assert_eq!(s2, s);
    }

    #[test]
    fn reachable_requires_start_in_allowed() {
        let g = single_choice();
        let v = g.find("v").unwrap();
        let only = PosSet::from_positions(g.len(), [v]);
        assert_eq!(reachable(&g, v, &only).unwrap(), only);
        let none = PosSet::empty(g.len());
        assert!(reachable(&g, v, &none).is_err());
    }

    #[test]
    fn terminal_rank_counts_terminals_only() {
        let mut b = GameBuilder::new(1);
        b.terminal("a").terminal("b").terminal("c").position("q", 1);
        b.add_move("q", "a")
            .add_move("q", "b")
            .add_move("q", "c")
            .init("q");
        b.pref_names(1, &["b", "inf", "c", "a"]);
        let g = b.build().unwrap();
        let p = PlayerId::new(1).unwrap();
        assert_eq!(g.terminal_rank(p, g.find("b").unwrap()), 1);
        assert_eq!(g.terminal_rank(p, g.find("c").unwrap()), 2);
        assert_eq!(g.terminal_rank(p, g.find("a").unwrap()), 3);
    }
}
