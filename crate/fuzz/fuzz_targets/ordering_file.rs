#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = dynfg::elim::parse_ordering_text(text);
    let _ = dynfg_cli::input::parse_ordering_file(text);
    if !text.starts_with("custom:") {
        let _ = dynfg_cli::input::parse_ordering(text);
    }
});
