#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsense::sensing::SensingEstimate;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = SensingEstimate::from_json(text) {
        assert_eq!(SensingEstimate::from_json(&r.to_json()).unwrap(), r);
    }
});
