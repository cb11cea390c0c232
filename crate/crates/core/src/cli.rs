//! Command-line front end. [`run`] is the whole program minus process setup,
//! so it can be driven from tests.
//!
//! Exit codes: 0 = NE found or verification passed, 1 = NE-free or
//! verification failed, 2 = input error, 3 = instance too large or unsupported.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dot::export_dot;
use crate::error::SolveError;
use crate::format::{parse_game, parse_situation, print_game, print_situation};
use crate::game::{check_ne, classify, evaluate, Game, Outcome, Situation};
use crate::harness::{random_game, search_ne_free, GenFlags, GenParams, HarnessError};
use crate::oracle::{
    certify_with_limit, enumerate_situations, improvement_dynamics, Certificate, OracleError,
    Termination,
};
use crate::playonce::solve_play_once;
use crate::terminal::{solve_terminal3, solve_terminal_play_once};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;

const DEFAULT_LIMIT: u64 = 50_000_000;

#[derive(Parser, Debug)]
#[command(
    name = "dgg",
    version,
    about = "Nash equilibria of deterministic graphical games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find a NE with a constructive solver or the oracle.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Only accept an equilibrium that ends at a terminal.
        #[arg(long)]
        require_terminal: bool,
        /// Largest number of situations the oracle may examine.
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: u64,
    },
    /// Check whether a situation is a NE.
    Check {
        file: PathBuf,
        #[arg(long)]
        situation: PathBuf,
    },
    /// Exhaustively decide whether the game has a NE.
    Certify {
        file: PathBuf,
        /// List every NE instead of stopping at the first terminal one.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: u64,
    },
    /// List every situation with its outcome.
    Enumerate {
        file: PathBuf,
        #[arg(long)]
        count_only: bool,
    },
    /// Run best-response dynamics.
    Dynamics {
        file: PathBuf,
        #[arg(long)]
        start: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
    },
    /// Print a random game.
    Gen(GenArgs),
    /// Certify random games and report the ones without any NE.
    Search {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
    /// Print the game as a Graphviz digraph.
    ExportDot {
        file: PathBuf,
        #[arg(long)]
        situation: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Number of internal positions.
    #[arg(long, default_value_t = 5)]
    positions: usize,
    #[arg(long, default_value_t = 3)]
    terminals: usize,
    /// Defaults to one player per position with --play-once, otherwise 2.
    #[arg(long)]
    players: Option<u32>,
    #[arg(long, default_value_t = 3)]
    max_out_degree: usize,
    #[arg(long)]
    play_once: bool,
    #[arg(long)]
    terminal_game: bool,
    #[arg(long)]
    terminal_reachable: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GenArgs {
    fn params(&self) -> GenParams {
        let default_players = if self.play_once {
            self.positions as u32
        } else {
            2
        };
        GenParams {
            positions: self.positions,
            terminals: self.terminals,
            players: self.players.unwrap_or(default_players),
            max_out_degree: self.max_out_degree,
            flags: GenFlags {
                play_once: self.play_once,
                terminal_game: self.terminal_game,
                terminal_reachable: self.terminal_reachable,
                ..GenFlags::default()
            },
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Playonce,
    Terminal3,
    TerminalPlayonce,
    Oracle,
}

impl Method {
    fn label(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Playonce => "playonce",
            Method::Terminal3 => "terminal3",
            Method::TerminalPlayonce => "terminal-playonce",
            Method::Oracle => "oracle",
        }
    }
}

/// A failure that ends the command with a given exit code.
struct Fail {
    code: i32,
    message: String,
}

impl Fail {
    fn input(message: impl Into<String>) -> Self {
        Fail {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<OracleError> for Fail {
    fn from(e: OracleError) -> Self {
        Fail {
            code: EXIT_UNSUPPORTED,
            message: e.to_string(),
        }
    }
}

impl From<HarnessError> for Fail {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Oracle(e) => e.into(),
            other => Fail::input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail {
            code: EXIT_INPUT,
            message: format!("write failed: {e}"),
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn load_game(path: &Path) -> Result<Game, Fail> {
    parse_game(&read(path)?).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn load_situation(game: &Game, path: &Path) -> Result<Situation, Fail> {
    parse_situation(game, &read(path)?).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn play_text(game: &Game, situation: &Situation) -> String {
    let play = evaluate(game, situation, game.init()).expect("validated situation");
    play.walk
        .iter()
        .map(|&p| game.name(p))
        .collect::<Vec<_>>()
        .join(" -> ")
}

fn inline(game: &Game, situation: &Situation) -> String {
    situation
        .named(game)
        .iter()
        .map(|(f, t)| format!("{f} -> {t}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Runs the program on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(Fail { code, message }) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Fail> {
    match command {
        Command::Solve {
            file,
            method,
            require_terminal,
            limit,
        } => solve(
            &load_game(&file)?,
            method,
            require_terminal,
            limit,
            out,
            err,
        ),
        Command::Check { file, situation } => {
            let game = load_game(&file)?;
            let s = load_situation(&game, &situation)?;
            let verdict = check_ne(&game, &s).expect("validated situation");
            match &verdict.witness {
                None => {
                    writeln!(out, "NE")?;
                    writeln!(out, "outcome: {}", game.outcome_name(verdict.outcome))?;
                    Ok(EXIT_OK)
                }
                Some(w) => {
                    writeln!(out, "NOT-NE")?;
                    writeln!(out, "outcome: {}", game.outcome_name(verdict.outcome))?;
                    writeln!(
                        out,
                        "witness: player {} deviates to reach {}",
                        w.player.get(),
                        game.outcome_name(w.outcome)
                    )?;
                    write!(out, "{}", print_situation(&game, &w.situation))?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Certify { file, all, limit } => {
            let game = load_game(&file)?;
            let cert = certify_with_limit(&game, all, Some(limit))?;
            let examined = cert.examined();
            match &cert {
                Certificate::NeFree { .. } => {
                    writeln!(out, "NE-free ({examined} situations examined)")?;
                    return Ok(EXIT_NEGATIVE);
                }
                Certificate::HasNe { .. } => {
                    writeln!(out, "terminal NE found ({examined} situations examined)")?
                }
                Certificate::NoTerminalNe { .. } => writeln!(
                    out,
                    "no terminal NE; non-terminal NE found ({examined} situations examined)"
                )?,
            }
            for eq in cert.equilibria() {
                writeln!(
                    out,
                    "NE #{} outcome {}: {}",
                    eq.index.0,
                    game.outcome_name(eq.outcome),
                    inline(&game, &eq.situation)
                )?;
            }
            Ok(EXIT_OK)
        }
        Command::Enumerate { file, count_only } => {
            let game = load_game(&file)?;
            let situations = enumerate_situations(&game)?;
            if count_only {
                writeln!(out, "{}", situations.count())?;
                return Ok(EXIT_OK);
            }
            for (i, s) in situations.enumerate() {
                let play = evaluate(&game, &s, game.init()).expect("enumerated situation");
                writeln!(
                    out,
                    "{i} outcome {}: {}",
                    game.outcome_name(play.outcome),
                    inline(&game, &s)
                )?;
            }
            Ok(EXIT_OK)
        }
        Command::Dynamics {
            file,
            start,
            max_steps,
        } => {
            let game = load_game(&file)?;
            let start = match start {
                Some(path) => load_situation(&game, &path)?,
                None => Situation::first(&game),
            };
            let run = improvement_dynamics(&game, &start, max_steps).expect("validated situation");
            let o = evaluate(&game, &start, game.init())
                .expect("validated")
                .outcome;
            writeln!(
                out,
                "start outcome {}: {}",
                game.outcome_name(o),
                inline(&game, &start)
            )?;
            for (k, step) in run.steps.iter().enumerate() {
                writeln!(
                    out,
                    "step {}: player {} -> outcome {}: {}",
                    k + 1,
                    step.mover.get(),
                    game.outcome_name(step.outcome),
                    inline(&game, &step.situation)
                )?;
            }
            match run.termination {
                Termination::ReachedNe => {
                    writeln!(out, "reached NE after {} steps", run.steps.len())?;
                    Ok(EXIT_OK)
                }
                Termination::ImprovementCycle { cycle_start } => {
                    writeln!(
                        out,
                        "improvement cycle: step {} revisits situation {cycle_start}",
                        run.steps.len()
                    )?;
                    Ok(EXIT_NEGATIVE)
                }
                Termination::StepLimit => {
                    writeln!(out, "step limit {max_steps} reached")?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Gen(args) => {
            let game = random_game(&args.params())?;
            write!(out, "{}", print_game(&game))?;
            Ok(EXIT_OK)
        }
        Command::Search { gen, trials } => {
            let params = gen.params();
            let hits = search_ne_free(&params, trials)?;
            for hit in &hits {
                writeln!(
                    out,
                    "seed {}: NE-free ({} situations examined)",
                    hit.seed,
                    hit.certificate.examined()
                )?;
            }
            writeln!(out, "{} of {trials} games NE-free", hits.len())?;
            if let Some(first) = hits.first() {
                writeln!(
                    err,
                    "first NE-free game (seed {}):\n{}",
                    first.seed,
                    print_game(&first.game)
                )?;
                return Ok(EXIT_NEGATIVE);
            }
            Ok(EXIT_OK)
        }
        Command::ExportDot { file, situation } => {
            let game = load_game(&file)?;
            let s = situation.map(|p| load_situation(&game, &p)).transpose()?;
            write!(out, "{}", export_dot(&game, s.as_ref()))?;
            Ok(EXIT_OK)
        }
    }
}

fn route(game: &Game) -> Method {
    let class = classify(game);
    match (class.is_terminal_game, class.is_play_once) {
        (true, true) => Method::TerminalPlayonce,
        (_, true) => Method::Playonce,
        (true, false) if game.terminal_count() <= 3 => Method::Terminal3,
        _ => Method::Oracle,
    }
}

enum Found {
    Ne(Situation),
    NeFree,
}

fn oracle_solve(game: &Game, require_terminal: bool, limit: u64) -> Result<Found, Fail> {
    let cert = certify_with_limit(game, false, Some(limit))?;
    let pick = if require_terminal {
        cert.terminal().next()
    } else {
        cert.equilibria().first()
    };
    Ok(pick.map_or(Found::NeFree, |eq| Found::Ne(eq.situation.clone())))
}

fn solve(
    game: &Game,
    method: Method,
    require_terminal: bool,
    limit: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Fail> {
    let mut method = if method == Method::Auto {
        route(game)
    } else {
        method
    };
    let result: Result<Situation, SolveError> = match method {
        Method::Playonce => solve_play_once(game),
        Method::TerminalPlayonce => solve_terminal_play_once(game),
        Method::Terminal3 => solve_terminal3(game).map(|sol| {
            if let Some(diagnostic) = &sol.fallback {
                let _ = writeln!(err, "warning: solver fell back to the oracle: {diagnostic}");
            }
            sol.situation
        }),
        Method::Oracle | Method::Auto => match oracle_solve(game, require_terminal, limit)? {
            Found::Ne(s) => Ok(s),
            Found::NeFree => {
                let what = if require_terminal {
                    "terminal NE"
                } else {
                    "NE"
                };
                writeln!(out, "status: NO-NE")?;
                writeln!(out, "method: oracle")?;
                writeln!(err, "certified: no {what} exists")?;
                return Ok(EXIT_NEGATIVE);
            }
        },
    };
    let mut situation = match result {
        Ok(s) => s,
        Err(e @ (SolveError::Unsupported(_) | SolveError::Precondition(_))) => {
            writeln!(out, "status: UNSUPPORTED")?;
            writeln!(out, "method: {}", method.label())?;
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_UNSUPPORTED);
        }
        Err(e) => {
            return Err(Fail {
                code: EXIT_NEGATIVE,
                message: e.to_string(),
            })
        }
    };
    let mut outcome = evaluate(game, &situation, game.init())
        .expect("solver output is valid")
        .outcome;
    if require_terminal && outcome == Outcome::Infinite && method != Method::Oracle {
        writeln!(
            err,
            "{} found a non-terminal NE; asking the oracle for a terminal one",
            method.label()
        )?;
        method = Method::Oracle;
        match oracle_solve(game, true, limit)? {
            Found::Ne(s) => {
                situation = s;
                outcome = evaluate(game, &situation, game.init())
                    .expect("valid")
                    .outcome;
            }
            Found::NeFree => {
                writeln!(out, "status: NO-NE")?;
                writeln!(out, "method: oracle")?;
                writeln!(err, "certified: no terminal NE exists")?;
                return Ok(EXIT_NEGATIVE);
            }
        }
    }
    writeln!(out, "status: NE")?;
    writeln!(out, "method: {}", method.label())?;
    writeln!(out, "outcome: {}", game.outcome_name(outcome))?;
    writeln!(out, "play: {}", play_text(game, &situation))?;
    writeln!(out, "situation:")?;
    write!(out, "{}", print_situation(game, &situation))?;
    Ok(EXIT_OK)
}
