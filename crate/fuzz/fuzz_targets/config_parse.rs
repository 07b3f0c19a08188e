#![no_main]

use libfuzzer_sys::fuzz_target;
use lfreadout_cli::{parse_config, LoadedConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = parse_config(text) else { return };
    // File targets would touch the filesystem.
    if matches!(
        config.target,
        lfreadout_cli::config::TargetSpec::PsiIdeal { .. } | lfreadout_cli::config::TargetSpec::SquaredLf { .. }
    ) {
        if let Ok(loaded) = LoadedConfig::from_config(config, Default::default()) {
            let again = parse_config(&loaded.resolved_toml()).expect("resolved config parses");
            assert_eq!(again, loaded.config);
        }
    }
});
