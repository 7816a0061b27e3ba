#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsense_cli::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = Config::from_toml(text) {
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }
});
