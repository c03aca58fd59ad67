#![no_main]

use clap::Parser;
use libfuzzer_sys::fuzz_target;

use dynfg_cli::input::{parse_gravity, parse_known, parse_vector};

// Lines: a value vector, a gravity vector, then known-flag tokens. The whole
// input is also tried as an argv split on whitespace.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let mut lines = text.lines();
    if let Some(v) = lines.next() {
        let _ = parse_vector(v);
    }
    if let Some(g) = lines.next() {
        let _ = parse_gravity(g);
    }
    let tokens: Vec<&str> = lines.flat_map(str::split_whitespace).collect();
    for n in 1..=4 {
        if let Ok(flags) = parse_known(&tokens, n) {
            assert_eq!(flags.len(), n);
        }
    }
    let argv = std::iter::once("dynfg").chain(text.split_whitespace());
    let _ = dynfg_cli::Cli::try_parse_from(argv);
});
