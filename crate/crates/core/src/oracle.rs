//! Brute force over the whole situation space: enumeration, equilibrium
//! certification and best-response improvement dynamics.
//!
//! Situations are numbered mixed-radix: one digit per internal position in
//! name order (the first position is the most significant digit), each digit
//! indexing that position's moves sorted by target name.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::game::{
    best_response_unchecked, check_ne_unchecked, outcome_unchecked, Game, Outcome, PlayerId, Pos,
    Situation, SituationError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance too large: situation count overflows 64 bits")]
    Overflow,
    #[error("instance too large: {count} situations exceed the limit of {limit}")]
    OverLimit { count: u64, limit: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SituationIndex(pub u64);

impl fmt::Display for SituationIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The mixed-radix numbering of a game's situations.
#[derive(Clone, Debug)]
pub struct SituationSpace {
    digits: Vec<Pos>,
    count: u64,
}

impl SituationSpace {
    pub fn new(game: &Game) -> Result<Self, OracleError> {
        let digits: Vec<Pos> = game.internals().collect();
        let count = digits
            .iter()
            .try_fold(1u64, |acc, &p| acc.checked_mul(game.out_degree(p) as u64))
            .ok_or(OracleError::Overflow)?;
        Ok(SituationSpace { digits, count })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn decode(&self, game: &Game, index: SituationIndex) -> Situation {
        assert!(
            index.0 < self.count,
            "situation index {} out of range",
            index.0
        );
        let mut rest = index.0;
        let mut choice = vec![None; game.len()];
        for &p in self.digits.iter().rev() {
            let radix = game.out_degree(p) as u64;
            choice[p.index()] = Some(game.successors(p)[(rest % radix) as usize]);
            rest /= radix;
        }
        Situation::new_unchecked(choice)
    }

    pub fn encode(
        &self,
        game: &Game,
        situation: &Situation,
    ) -> Result<SituationIndex, SituationError> {
        situation.validate(game)?;
        let mut index = 0u64;
        for &p in &self.digits {
            let chosen = situation.choice(p).expect("validated");
            let digit = game
                .successors(p)
                .binary_search(&chosen)
                .expect("validated");
            index = index * game.out_degree(p) as u64 + digit as u64;
        }
        Ok(SituationIndex(index))
    }
}

/// Iterator over all situations in index order.
pub struct Situations<'g> {
    game: &'g Game,
    digits: Vec<Pos>,
    state: Vec<usize>,
    current: Option<Vec<Option<Pos>>>,
}

impl Iterator for Situations<'_> {
    type Item = Situation;

    fn next(&mut self) -> Option<Situation> {
        let out = self.current.clone()?;
        // advance the odometer, last digit fastest
        let mut advanced = false;
        let choice = self.current.as_mut().expect("checked above");
        for k in (0..self.digits.len()).rev() {
            let p = self.digits[k];
            let succ = self.game.successors(p);
            self.state[k] += 1;
            if self.state[k] < succ.len() {
                choice[p.index()] = Some(succ[self.state[k]]);
                advanced = true;
                break;
            }
            self.state[k] = 0;
            choice[p.index()] = Some(succ[0]);
        }
        if !advanced {
            self.current = None;
        }
        Some(Situation::new_unchecked(out))
    }
}

/// Every situation of `game` exactly once, in [`SituationIndex`] order.
pub fn enumerate_situations(game: &Game) -> Result<Situations<'_>, OracleError> {
    SituationSpace::new(game)?;
    let digits: Vec<Pos> = game.internals().collect();
    Ok(Situations {
        game,
        state: vec![0; digits.len()],
        digits,
        current: Some(Situation::first(game).raw().to_vec()),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equilibrium {
    pub index: SituationIndex,
    pub situation: Situation,
    pub outcome: Outcome,
}

/// Result of an exhaustive equilibrium search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// No situation is a NE.
    NeFree { examined: u64 },
    /// At least one terminal NE exists. Holds the first terminal NE, or every
    /// NE in index order when all were requested.
    HasNe {
        equilibria: Vec<Equilibrium>,
        examined: u64,
    },
    /// Equilibria exist but none is terminal. Holds the first NE, or all of them.
    NoTerminalNe {
        equilibria: Vec<Equilibrium>,
        examined: u64,
    },
}

impl Certificate {
    pub fn examined(&self) -> u64 {
        match self {
            Certificate::NeFree { examined }
            | Certificate::HasNe { examined, .. }
            | Certificate::NoTerminalNe { examined, .. } => *examined,
        }
    }

    pub fn is_ne_free(&self) -> bool {
        matches!(self, Certificate::NeFree { .. })
    }

    pub fn equilibria(&self) -> &[Equilibrium] {
        match self {
            Certificate::NeFree { .. } => &[],
            Certificate::HasNe { equilibria, .. }
            | Certificate::NoTerminalNe { equilibria, .. } => equilibria,
        }
    }

    pub fn terminal(&self) -> impl Iterator<Item = &Equilibrium> {
        self.equilibria().iter().filter(|e| e.outcome.is_terminal())
    }

    pub fn non_terminal(&self) -> impl Iterator<Item = &Equilibrium> {
        self.equilibria()
            .iter()
            .filter(|e| !e.outcome.is_terminal())
    }
}

/// Applies the exhaustive NE check to every situation.
///
/// Without `want_all` the scan stops at the first terminal NE.
pub fn certify(game: &Game, want_all: bool) -> Result<Certificate, OracleError> {
    certify_with_limit(game, want_all, None)
}

pub fn certify_with_limit(
    game: &Game,
    want_all: bool,
    limit: Option<u64>,
) -> Result<Certificate, OracleError> {
    let space = SituationSpace::new(game)?;
    if let Some(limit) = limit {
        if space.count() > limit {
            return Err(OracleError::OverLimit {
                count: space.count(),
                limit,
            });
        }
    }
    let mut found: Vec<Equilibrium> = Vec::new();
    let mut first_non_terminal: Option<Equilibrium> = None;
    let mut examined = 0u64;
    for (i, s) in enumerate_situations(game)?.enumerate() {
        examined += 1;
        let verdict = check_ne_unchecked(game, &s);
        if !verdict.is_ne() {
            continue;
        }
        let eq = Equilibrium {
            index: SituationIndex(i as u64),
            situation: s,
            outcome: verdict.outcome,
        };
        if want_all {
            found.push(eq);
        } else if eq.outcome.is_terminal() {
            return Ok(Certificate::HasNe {
                equilibria: vec![eq],
                examined,
            });
        } else if first_non_terminal.is_none() {
            first_non_terminal = Some(eq);
        }
    }
    if !want_all {
        found.extend(first_non_terminal);
    }
    Ok(if found.is_empty() {
        Certificate::NeFree { examined }
    } else if found.iter().any(|e| e.outcome.is_terminal()) {
        Certificate::HasNe {
            equilibria: found,
            examined,
        }
    } else {
        Certificate::NoTerminalNe {
            equilibria: found,
            examined,
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicsStep {
    pub mover: PlayerId,
    /// The situation after the move.
    pub situation: Situation,
    pub outcome: Outcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    ReachedNe,
    /// The last step revisited the situation at this position of the run's
    /// sequence (0 = the start situation).
    ImprovementCycle {
        cycle_start: usize,
    },
    StepLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicsRun {
    pub start: Situation,
    pub steps: Vec<DynamicsStep>,
    pub termination: Termination,
}

impl DynamicsRun {
    /// The start situation followed by every situation moved to.
    pub fn situations(&self) -> impl Iterator<Item = &Situation> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|s| &s.situation))
    }
}

/// Best-response dynamics: at each step the lowest-numbered player who can
/// strictly improve switches to a best response.
pub fn improvement_dynamics(
    game: &Game,
    start: &Situation,
    max_steps: usize,
) -> Result<DynamicsRun, SituationError> {
    start.validate(game)?;
    let mut seen: HashMap<Situation, usize> = HashMap::new();
    seen.insert(start.clone(), 0);
    let mut current = start.clone();
    let mut steps = Vec::new();
    let termination = loop {
        let now = outcome_unchecked(current.raw(), game.init());
        let step = game.player_ids().find_map(|player| {
            let (o, s) = best_response_unchecked(game, &current, player);
            game.prefers(player, o, now).then_some(DynamicsStep {
                mover: player,
                situation: s,
                outcome: o,
            })
        });
        let Some(step) = step else {
            break Termination::ReachedNe;
        };
        current = step.situation.clone();
        steps.push(step);
        if let Some(&first) = seen.get(&current) {
            break Termination::ImprovementCycle { cycle_start: first };
        }
        seen.insert(current.clone(), steps.len());
        if steps.len() >= max_steps {
            break Termination::StepLimit;
        }
    };
    Ok(DynamicsRun {
        start: start.clone(),
        steps,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameBuilder;

    fn two_by_three() -> Game {
        let mut b = GameBuilder::new(2);
        b.terminal("x")
            .terminal("y")
            .terminal("z")
            .position("u", 1)
            .position("w", 2);
        b.add_move("u", "w").add_move("u", "x");
        b.add_move("w", "x")
            .add_move("w", "y")
            .add_move("w", "z")
            .init("u");
        b.pref_names(1, &["x", "y", "z", "inf"])
            .pref_names(2, &["z", "y", "x", "inf"]);
        b.build().unwrap()
    }

    #[test]
    fn index_order_matches_decode() {
        let g = two_by_three();
        let space = SituationSpace::new(&g).unwrap();
        assert_eq!(space.count(), 6);
        let all: Vec<Situation> = enumerate_situations(&g).unwrap().collect();
        assert_eq!(all.len(), 6);
        for (i, s) in all.iter().enumerate() {
            assert_eq!(space.decode(&g, SituationIndex(i as u64)), *s);
            assert_eq!(space.encode(&g, s).unwrap(), SituationIndex(i as u64));
        }
        // first position (u) is the most significant digit
        assert_eq!(all[0].named(&g), vec![("u", "w"), ("w", "x")]);
        assert_eq!(all[1].named(&g), vec![("u", "w"), ("w", "y")]);
        assert_eq!(all[3].named(&g), vec![("u", "x"), ("w", "x")]);
    }

    #[test]
    fn single_forced_move_has_one_situation() {
        let mut b = GameBuilder::new(1);
        b.terminal("t")
            .position("v0", 1)
            .add_move("v0", "t")
            .init("v0")
            .pref_names(1, &["t", "inf"]);
        let g = b.build().unwrap();
        assert_eq!(enumerate_situations(&g).unwrap().count(), 1);
        match certify(&g, false).unwrap() {
            Certificate::HasNe {
                equilibria,
                examined,
            } => {
                assert_eq!(examined, 1);
                assert_eq!(equilibria[0].situation.named(&g), vec![("v0", "t")]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn limit_and_overflow() {
        let g = two_by_three();
        assert_eq!(
            certify_with_limit(&g, false, Some(5)).unwrap_err(),
            OracleError::OverLimit { count: 6, limit: 5 }
        );
        let mut b = GameBuilder::new(1);
        let names: Vec<String> = (0..70).map(|i| format!("p{i:02}")).collect();
        b.terminal("t");
        for n in &names {
            b.position(n.clone(), 1);
            b.add_move(n.clone(), "t");
        }
        for w in names.windows(2) {
            b.add_move(w[0].clone(), w[1].clone());
        }
        b.add_move(names[69].clone(), names[0].clone());
        b.init("p00").pref_names(1, &["t", "inf"]);
        let big = b.build().unwrap();
        assert_eq!(
            SituationSpace::new(&big).unwrap_err(),
            OracleError::Overflow
        );
    }

    #[test]
    fn dynamics_from_ne_takes_no_steps() {
        let g = two_by_three();
        let s = Situation::from_named(&g, [("u", "x"), ("w", "z")]).unwrap();
        let run = improvement_dynamics(&g, &s, 10).unwrap();
        assert_eq!(run.termination, Termination::ReachedNe);
        assert!(run.steps.is_empty());
    }

    #[test]
    fn dynamics_steps_improve_mover() {
        let g = two_by_three();
        let s = Situation::from_named(&g, [("u", "w"), ("w", "x")]).unwrap();
        let run = improvement_dynamics(&g, &s, 10).unwrap();
        assert_eq!(run.termination, Termination::ReachedNe);
        let seq: Vec<&Situation> = run.situations().collect();
        for (k, step) in run.steps.iter().enumerate() {
            let before = outcome_unchecked(seq[k].raw(), g.init());
            assert!(g.prefers(step.mover, step.outcome, before));
        }
    }
}
