#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsense::modes::RadialProfile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = RadialProfile::from_json(text) {
        assert_eq!(RadialProfile::from_json(&p.to_json()).unwrap(), p);
    }
});
