mod common;

use proptest::prelude::*;

use common::{all_ne, is_ne, play_outcome, profile, situation_count};
use dgg::oracle::{
    certify, enumerate_situations, improvement_dynamics, SituationSpace, Termination,
};
use dgg::terminal::{solve_terminal3, solve_terminal_play_once};
use dgg::{
    check_ne, parse_game, parse_situation, print_game, print_situation, random_game,
    solve_play_once, Certificate, Game, GenParams,
};

fn small_game() -> impl Strategy<Value = Game> {
    (
        1usize..=5,
        1usize..=3,
        1u32..=3,
        1usize..=3,
        any::<bool>(),
        any::<u64>(),
    )
        .prop_map(
            |(positions, terminals, players, degree, terminal_game, seed)| {
                let mut p = GenParams::new(positions, terminals, players, seed);
                p.max_out_degree = degree;
                p.flags.terminal_game = terminal_game;
                random_game(&p).unwrap()
            },
        )
}

fn play_once_game() -> impl Strategy<Value = Game> {
    (1usize..=7, 1usize..=3, any::<bool>(), any::<u64>()).prop_map(
        |(positions, terminals, terminal_game, seed)| {
            let mut p = GenParams::play_once(positions, terminals, seed);
            p.flags.terminal_game = terminal_game;
            random_game(&p).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(g in small_game()) {
        prop_assert_eq!(parse_game(&print_game(&g)).unwrap(), g);
    }

    #[test]
    fn situation_text_round_trip(g in small_game(), k in any::<u64>()) {
        let space = SituationSpace::new(&g).unwrap();
        let s = space.decode(&g, dgg::SituationIndex(k % space.count()));
        prop_assert_eq!(parse_situation(&g, &print_situation(&g, &s)).unwrap(), s);
    }

    #[test]
    fn index_is_a_bijection(g in small_game()) {
        let space = SituationSpace::new(&g).unwrap();
        prop_assert_eq!(space.count(), situation_count(&g));
        for (i, s) in enumerate_situations(&g).unwrap().enumerate() {
            prop_assert_eq!(space.encode(&g, &s).unwrap().0, i as u64);
        }
    }

    #[test]
    fn ne_check_matches_reference(g in small_game(), k in any::<u64>()) {
        let space = SituationSpace::new(&g).unwrap();
        let s = space.decode(&g, dgg::SituationIndex(k % space.count()));
        let verdict = check_ne(&g, &s).unwrap();
        prop_assert_eq!(verdict.is_ne(), is_ne(&g, &profile(&g, &s)));
        prop_assert_eq!(verdict.outcome, play_outcome(&g, &profile(&g, &s)));
        if let Some(w) = verdict.witness {
            prop_assert!(g.prefers(w.player, w.outcome, verdict.outcome));
            prop_assert_eq!(play_outcome(&g, &profile(&g, &w.situation)), w.outcome);
            for p in s.diff(&w.situation) {
                prop_assert_eq!(g.controller(p), Some(w.player));
            }
        }
    }

    #[test]
    fn certificate_matches_reference(g in small_game()) {
        let reference = all_ne(&g);
        let cert = certify(&g, true).unwrap();
        prop_assert_eq!(cert.examined(), situation_count(&g));
        prop_assert_eq!(cert.equilibria().len(), reference.len());
        for (eq, (p, o)) in cert.equilibria().iter().zip(&reference) {
            prop_assert_eq!(&profile(&g, &eq.situation), p);
            prop_assert_eq!(eq.outcome, *o);
        }
        let first = certify(&g, false).unwrap();
        match first {
            Certificate::NeFree { .. } => prop_assert!(reference.is_empty()),
            Certificate::HasNe { equilibria, .. } => {
                prop_assert!(equilibria[0].outcome.is_terminal());
                prop_assert_eq!(Some(&equilibria[0]), cert.terminal().next());
            }
            Certificate::NoTerminalNe { equilibria, .. } => {
                prop_assert!(reference.iter().all(|(_, o)| !o.is_terminal()));
                prop_assert!(!equilibria[0].outcome.is_terminal());
            }
        }
    }

    #[test]
    fn dynamics_steps_improve(g in small_game(), k in any::<u64>()) {
        let space = SituationSpace::new(&g).unwrap();
        let start = space.decode(&g, dgg::SituationIndex(k % space.count()));
        let run = improvement_dynamics(&g, &start, 200).unwrap();
        let mut before = play_outcome(&g, &profile(&g, &start));
        for step in &run.steps {
            prop_assert!(g.prefers(step.mover, step.outcome, before));
            before = step.outcome;
        }
        let last = run.situations().last().unwrap();
        match run.termination {
            Termination::ReachedNe => prop_assert!(is_ne(&g, &profile(&g, last))),
            Termination::ImprovementCycle { cycle_start } => {
                prop_assert_eq!(run.situations().nth(cycle_start).unwrap(), last);
            }
            Termination::StepLimit => prop_assert_eq!(run.steps.len(), 200),
        }
    }

    #[test]
    fn play_once_solutions_are_ne(g in play_once_game()) {
        let s = solve_play_once(&g).unwrap();
        prop_assert!(is_ne(&g, &profile(&g, &s)));
    }

    #[test]
    fn terminal_play_once_is_terminal(g in play_once_game()) {
        prop_assume!(dgg::classify(&g).is_terminal_game && common::terminal_reachable(&g));
        let s = solve_terminal_play_once(&g).unwrap();
        let choice = profile(&g, &s);
        prop_assert!(is_ne(&g, &choice));
        prop_assert!(play_outcome(&g, &choice).is_terminal());
    }

    #[test]
    fn terminal3_trace_replays(g in small_game()) {
        prop_assume!(dgg::classify(&g).is_terminal_game);
        let sol = solve_terminal3(&g).unwrap();
        prop_assert!(sol.fallback.is_none());
        prop_assert!(is_ne(&g, &profile(&g, &sol.situation)));
        let trace = sol.trace.unwrap();
        prop_assert_eq!(trace.replay(&g).unwrap(), trace.final_game);
        prop_assert_eq!(trace.steps.len(), sol.lifts_verified);
    }
}
