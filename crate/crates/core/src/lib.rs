//! Nash equilibria of n-person deterministic graphical games: an exhaustive
//! oracle, constructive solvers for play-once games and for terminal games
//! with at most three terminals, a random game generator and a text format.

pub mod cli;
pub mod dot;
pub mod error;
pub mod format;
pub mod game;
mod graph;
pub mod harness;
pub mod induction;
pub mod oracle;
pub mod playonce;
pub mod terminal;

pub use error::SolveError;
pub use format::{parse_game, parse_situation, print_game, print_situation, FormatError};
pub use game::{
    best_response, check_ne, classify, evaluate, outcome, reachable, Classification, Deviation,
    Game, GameBuilder, GameError, NeVerdict, Outcome, OutcomeName, Play, PlayerId, Pos, PosSet,
    Situation, SituationError,
};
pub use harness::{fixture, random_game, search_ne_free, GenFlags, GenParams};
pub use induction::{backward_induction, Induction, NotAcyclic};
pub use oracle::{
    certify, enumerate_situations, improvement_dynamics, Certificate, SituationIndex,
};
pub use playonce::solve_play_once;
pub use terminal::{solve_terminal3, solve_unreachable, switching_transform};
