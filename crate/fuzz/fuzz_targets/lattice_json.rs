#![no_main]

use libfuzzer_sys::fuzz_target;
use rydquench::LatticeSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(lat) = LatticeSpec::from_json(text) {
        // anything accepted must survive a round trip
        let again = LatticeSpec::from_json(&lat.to_json().unwrap()).unwrap();
        assert_eq!(again.n_sites(), lat.n_sites());
    }
});
