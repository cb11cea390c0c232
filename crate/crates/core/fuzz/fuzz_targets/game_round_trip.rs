#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(game) = dgg::parse_game(text) else { return };
    let printed = dgg::print_game(&game);
    assert_eq!(dgg::parse_game(&printed).unwrap(), game);
    if game.internals().map(|p| game.out_degree(p) as u64).try_fold(1u64, |a, d| a.checked_mul(d)).is_some_and(|n| n <= 4096) {
        let _ = dgg::oracle::certify(&game, false).unwrap();
    }
});
