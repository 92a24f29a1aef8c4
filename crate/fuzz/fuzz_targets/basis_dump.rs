#![no_main]

use libfuzzer_sys::fuzz_target;
use rydquench::hilbert::BasisIndex;

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let n = 1 + (n as usize % 64);
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(b) = BasisIndex::from_hex_dump(text, n) {
        for (i, &x) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(x), Some(i));
        }
        let again = BasisIndex::from_hex_dump(&b.to_hex_dump(), n).unwrap();
        assert_eq!(again.states(), b.states());
    }
});
