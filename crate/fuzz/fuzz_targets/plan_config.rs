#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = dynfg::PlanConfig::from_json(text) else {
        return;
    };
    if config.validate().is_ok() {
        let _ = config.validate_for(2);
    }
});
