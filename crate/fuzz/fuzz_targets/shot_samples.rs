#![no_main]

use libfuzzer_sys::fuzz_target;
use rydquench::lattice::build_ring;
use rydquench::observables::{Observable, ShotSamples};

fuzz_target!(|data: &[u8]| {
    // first byte picks the site count
    let Some((&n, rest)) = data.split_first() else { return };
    let n = 3 + (n as usize % 30);
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(shots) = ShotSamples::parse(text, n) {
        let lat = build_ring(n, 5.0).unwrap();
        let obs = Observable::parse("O_L1", &lat).unwrap();
        let e = shots.estimate(&obs).unwrap();
        assert_eq!(e.n, shots.shots.len());
    }
});
