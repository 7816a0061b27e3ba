#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsense::measurement::MeasurementReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = MeasurementReport::from_json(text) {
        assert_eq!(MeasurementReport::from_json(&r.to_json()).unwrap(), r);
    }
});
