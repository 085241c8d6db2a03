#![no_main]

use libfuzzer_sys::fuzz_target;
use nlreg::config::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            let emitted = cfg.emit();
            let again = parse_config(&emitted).expect("emitted configuration must parse");
            assert_eq!(again, cfg);
            assert_eq!(again.emit(), emitted, "emit is not a fixed point");
        }
    }
});
