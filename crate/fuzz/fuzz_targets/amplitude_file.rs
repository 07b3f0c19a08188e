#![no_main]

use libfuzzer_sys::fuzz_target;
use lfreadout::io::{parse_amplitude_file, write_amplitude_file};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(state) = parse_amplitude_file(text) {
        assert!((state.norm() - 1.0).abs() < 1e-9);
        let back = parse_amplitude_file(&write_amplitude_file(&state)).expect("written file parses");
        assert_eq!(back.dim(), state.dim());
    }
});
