#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsense_cli::commands::parse_node_angles;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((t, a)) = parse_node_angles(text) {
        assert_eq!(t.len(), a.len());
        assert!(a.iter().all(|x| x.is_finite()));
    }
});
