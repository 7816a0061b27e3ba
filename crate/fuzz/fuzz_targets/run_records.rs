#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsense_cli::manifest::RunManifest;
use ringsense_cli::sweep::PointRecord;

// Manifests and sweep point files are read back when a run resumes.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = serde_json::from_str::<RunManifest>(text);
    if let Ok(p) = serde_json::from_str::<PointRecord>(text) {
        let again = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<PointRecord>(&again).unwrap(), p);
    }
});
