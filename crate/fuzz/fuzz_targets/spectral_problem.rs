#![no_main]

use libfuzzer_sys::fuzz_target;
use lfreadout::io::parse_spectral_problem;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_spectral_problem(text) {
        assert!(p.n() + p.n_system() <= lfreadout::MAX_QUBITS);
        let total: f64 = p.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
});
