#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = dynfg::robot::load_urdf(text) {
        assert!(model.dof() > 0);
    }
    let _ = dynfg::robot::parse_urdf(text);
});
