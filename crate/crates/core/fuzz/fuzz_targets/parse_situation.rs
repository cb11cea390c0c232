#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let game = dgg::fixture("fig1").unwrap();
    if let Ok(s) = dgg::parse_situation(&game, text) {
        let printed = dgg::print_situation(&game, &s);
        assert_eq!(dgg::parse_situation(&game, &printed).unwrap(), s);
        let _ = dgg::check_ne(&game, &s).unwrap();
    }
});
