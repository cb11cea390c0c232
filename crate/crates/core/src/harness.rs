//! Fixed example games, a seeded random game generator and the search loop
//! for terminal games without any NE.

use log::info;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::{classify, Game, GameBuilder, OutcomeName};
use crate::oracle::{certify, Certificate, OracleError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("unknown fixture {0}; expected fig1, fig2 or fig2-terminal")]
    UnknownFixture(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no game satisfying the requested flags after {0} attempts")]
    Exhausted(usize),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

pub const FIXTURES: [&str; 3] = ["fig1", "fig2", "fig2-terminal"];

pub fn fixture(name: &str) -> Result<Game, HarnessError> {
    let mut b = GameBuilder::new(3);
    match name {
        "fig1" => {
            b.terminal("a").terminal("b").terminal("c");
            b.position("p1", 1)
                .position("p2", 2)
                .position("p3", 2)
                .position("p4", 3);
            for (f, t) in [
                ("p1", "p2"),
                ("p1", "p4"),
                ("p2", "a"),
                ("p2", "p3"),
                ("p3", "b"),
                ("p3", "p4"),
                ("p4", "p3"),
                ("p4", "c"),
            ] {
                b.add_move(f, t);
            }
            b.init("p1");
            b.pref_names(1, &["b", "inf", "a", "c"]);
            b.pref_names(2, &["c", "a", "b", "inf"]);
            b.pref_names(3, &["a", "inf", "c", "b"]);
        }
        "fig2" | "fig2-terminal" => {
            b.terminal("a").terminal("b").terminal("c");
            b.position("q1", 1).position("q2", 2).position("q3", 3);
            for (f, t) in [
                ("q1", "q2"),
                ("q1", "a"),
                ("q2", "q3"),
                ("q2", "b"),
                ("q3", "q1"),
                ("q3", "c"),
            ] {
                b.add_move(f, t);
            }
            b.init("q1");
            if name == "fig2" {
                b.pref_names(1, &["b", "c", "inf", "a"]);
                b.pref_names(2, &["c", "a", "inf", "b"]);
                b.pref_names(3, &["a", "b", "inf", "c"]);
            } else {
                b.pref_names(1, &["b", "c", "a", "inf"]);
                b.pref_names(2, &["c", "a", "b", "inf"]);
                b.pref_names(3, &["a", "b", "c", "inf"]);
            }
        }
        other => return Err(HarnessError::UnknownFixture(other.to_string())),
    }
    Ok(b.build().expect("fixtures are valid"))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenFlags {
    /// One internal position per player.
    pub play_once: bool,
    /// Every player ranks `inf` last.
    pub terminal_game: bool,
    /// Some terminal is reachable from the initial position.
    pub terminal_reachable: bool,
    /// No terminal is reachable from the initial position.
    pub terminal_unreachable: bool,
    /// The move graph has no directed cycle.
    pub acyclic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    /// Number of internal positions.
    pub positions: usize,
    pub terminals: usize,
    pub players: u32,
    pub max_out_degree: usize,
    pub flags: GenFlags,
    pub seed: u64,
}

impl GenParams {
    pub fn new(positions: usize, terminals: usize, players: u32, seed: u64) -> Self {
        GenParams {
            positions,
            terminals,
            players,
            max_out_degree: 3,
            flags: GenFlags::default(),
            seed,
        }
    }

    /// Play-once parameters: one player per position.
    pub fn play_once(positions: usize, terminals: usize, seed: u64) -> Self {
        let mut p = GenParams::new(positions, terminals, positions as u32, seed);
        p.flags.play_once = true;
        p
    }

    pub fn with_seed(self, seed: u64) -> Self {
        GenParams { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidParams(m.to_string()));
        let f = self.flags;
        if self.positions == 0 || self.players == 0 || self.max_out_degree == 0 {
            return bad("positions, players and max out-degree must be at least 1");
        }
        if f.play_once && self.players as usize != self.positions {
            return bad("play-once games need exactly one player per position");
        }
        if f.terminal_reachable && f.terminal_unreachable {
            return bad("terminals cannot be both reachable and unreachable");
        }
        if f.terminal_reachable && self.terminals == 0 {
            return bad("a reachable terminal needs at least one terminal");
        }
        if self.positions + self.terminals < 2 {
            return bad("an internal position needs a successor other than itself");
        }
        if f.terminal_unreachable && self.positions < 2 {
            return bad("an unreachable terminal set needs at least two internal positions");
        }
        if f.acyclic && self.terminals == 0 {
            return bad("an acyclic game needs at least one terminal");
        }
        if f.acyclic && f.terminal_unreachable {
            return bad("every play of an acyclic game terminates");
        }
        Ok(())
    }
}

const MAX_ATTEMPTS: usize = 10_000;

fn padded(prefix: &str, i: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len();
    format!("{prefix}{i:0width$}")
}

/// Seeded random game. Internal positions are `v0, v1, ...` (initial `v0`),
/// terminals `t0, t1, ...`. Out-neighbourhoods are drawn without replacement
/// from the other positions; draws violating a requested flag are rejected.
pub fn random_game(params: &GenParams) -> Result<Game, HarnessError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..MAX_ATTEMPTS {
        let game = draw(params, &mut rng);
        let class = classify(&game);
        let f = params.flags;
        if (f.terminal_reachable && !class.terminal_reachable_from_init)
            || (f.terminal_unreachable && class.terminal_reachable_from_init)
        {
            continue;
        }
        return Ok(game);
    }
    Err(HarnessError::Exhausted(MAX_ATTEMPTS))
}

fn draw(params: &GenParams, rng: &mut ChaCha8Rng) -> Game {
    let n = params.positions;
    let internal: Vec<String> = (0..n).map(|i| padded("v", i, n)).collect();
    let terminal: Vec<String> = (0..params.terminals)
        .map(|i| padded("t", i, params.terminals))
        .collect();
    let mut b = GameBuilder::new(params.players);
    for t in &terminal {
        b.terminal(t.clone());
    }
    let mut owners: Vec<u32> = if params.flags.play_once {
        (1..=params.players).collect()
    } else {
        (0..n).map(|_| rng.gen_range(1..=params.players)).collect()
    };
    if params.flags.play_once {
        owners.shuffle(rng);
    }
    for (v, &owner) in internal.iter().zip(&owners) {
        b.position(v.clone(), owner);
    }
    // positions outside `closed` may not be entered from inside it
    let closed = if params.flags.terminal_unreachable {
        rng.gen_range(2..=n)
    } else {
        n
    };
    // with `acyclic`, moves only go to higher-numbered internals or terminals
    let order: Vec<usize> = {
        let mut o: Vec<usize> = (0..n).collect();
        o.shuffle(rng);
        o
    };
    let mut rank_of = vec![0; n];
    for (r, &v) in order.iter().enumerate() {
        rank_of[v] = r;
    }
    for v in 0..n {
        let mut options: Vec<&String> = (0..n)
            .filter(|&w| w != v)
            .filter(|&w| !params.flags.acyclic || rank_of[w] > rank_of[v])
            .filter(|&w| v >= closed || w < closed)
            .map(|w| &internal[w])
            .collect();
        if v >= closed || !params.flags.terminal_unreachable {
            options.extend(terminal.iter());
        }
        let d = rng.gen_range(1..=params.max_out_degree.min(options.len()));
        for w in options.choose_multiple(rng, d) {
            b.add_move(internal[v].clone(), (*w).clone());
        }
    }
    b.init(internal[0].clone());
    for player in 1..=params.players {
        let mut outcomes: Vec<OutcomeName> = terminal
            .iter()
            .cloned()
            .map(OutcomeName::Terminal)
            .collect();
        if !params.flags.terminal_game {
            outcomes.push(OutcomeName::Infinite);
        }
        outcomes.shuffle(rng);
        if params.flags.terminal_game {
            outcomes.push(OutcomeName::Infinite);
        }
        b.pref(player, outcomes);
    }
    b.build().expect("generator produces valid games")
}

#[derive(Clone, Debug)]
pub struct SearchHit {
    pub seed: u64,
    pub game: Game,
    pub certificate: Certificate,
}

/// Certifies `trials` games generated with seeds `params.seed, params.seed + 1, ...`
/// and returns those without any NE.
pub fn search_ne_free(params: &GenParams, trials: u64) -> Result<Vec<SearchHit>, HarnessError> {
    params.validate()?;
    let games = (0..trials).map(|i| {
        let seed = params.seed.wrapping_add(i);
        random_game(&params.with_seed(seed)).map(|g| (seed, g))
    });
    search_stream(games)
}

/// Certifies every game of a stream of `(seed, game)` pairs and keeps the NE-free ones.
pub fn search_stream<I>(games: I) -> Result<Vec<SearchHit>, HarnessError>
where
    I: IntoIterator<Item = Result<(u64, Game), HarnessError>>,
{
    let mut hits = Vec::new();
    let mut examined = 0u64;
    for item in games {
        let (seed, game) = item?;
        let certificate = certify(&game, false)?;
        examined += 1;
        if certificate.is_ne_free() {
            info!("seed {seed}: no NE");
            hits.push(SearchHit {
                seed,
                game,
                certificate,
            });
        }
        if examined.is_multiple_of(1000) {
            info!("{examined} games certified, {} NE-free", hits.len());
        }
    }
    info!("{examined} games certified, {} NE-free", hits.len());
    Ok(hits)
}
