//! Backward induction on acyclic games.

use thiserror::Error;

use crate::game::{Game, Outcome, Pos, Situation};
use crate::graph::Digraph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("graph not acyclic: cycle {}", cycle.join(" -> "))]
pub struct NotAcyclic {
    pub cycle: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Induction {
    pub situation: Situation,
    /// Value of every position, indexed by [`Pos::index`]; a terminal's value is itself.
    pub values: Vec<Outcome>,
}

impl Induction {
    pub fn value(&self, p: Pos) -> Outcome {
        self.values[p.index()]
    }
}

/// Each position takes the successor whose value its controller likes best,
/// processing positions in reverse topological order. Equal values are
/// resolved toward the lowest-named successor.
pub fn backward_induction(game: &Game) -> Result<Induction, NotAcyclic> {
    let (choice, values) = induce(game, &game.digraph())?;
    let values = values
        .into_iter()
        .map(|v| v.expect("every position is active"))
        .collect();
    Ok(Induction {
        situation: Situation::new_unchecked(choice),
        values,
    })
}

type Induced = (Vec<Option<Pos>>, Vec<Option<Outcome>>);

/// Backward induction restricted to the active part of `graph`, whose arcs
/// must be a subset of the game's. Inactive positions get no choice and no value.
pub(crate) fn induce(game: &Game, graph: &Digraph) -> Result<Induced, NotAcyclic> {
    let order = graph.topological_order().map_err(|cycle| NotAcyclic {
        cycle: cycle
            .into_iter()
            .map(|v| game.name(Pos::from_index(v)).to_string())
            .collect(),
    })?;
    let mut choice = vec![None; game.len()];
    let mut values: Vec<Option<Outcome>> = vec![None; game.len()];
    for &v in order.iter().rev() {
        let p = Pos::from_index(v);
        let Some(player) = game.controller(p) else {
            values[v] = Some(Outcome::Terminal(p));
            continue;
        };
        let mut succ: Vec<usize> = graph.successors(v).to_vec();
        succ.sort_unstable();
        let best = succ
            .into_iter()
            .map(|w| (w, values[w].expect("successor processed first")))
            .min_by_key(|&(w, o)| (game.rank(player, o), w));
        // An internal position left without arcs has no value; that only happens
        // when the caller's graph is malformed.
        let (w, o) = best.expect("active internal position keeps at least one move");
        choice[v] = Some(Pos::from_index(w));
        values[v] = Some(o);
    }
    Ok((choice, values))
}
