#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsense::gpe2d::{read_snapshot, write_density, write_field, Snapshot, SnapshotMeta};

fuzz_target!(|data: &[u8]| {
    let Ok(snap) = read_snapshot(data) else { return };
    let h = *snap.header();
    let meta = SnapshotMeta { g2d: h.g2d, ring_radius: h.ring_radius, omega_ext: h.omega_ext };
    let mut buf = Vec::new();
    match &snap {
        Snapshot::Field { field, .. } => write_field(&mut buf, field, &meta).unwrap(),
        Snapshot::Density { image, .. } => write_density(&mut buf, image, &meta).unwrap(),
    }
    assert_eq!(read_snapshot(&buf).unwrap(), snap);
});
