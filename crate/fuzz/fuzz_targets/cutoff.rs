#![no_main]

use doblab_core::dob::Cutoff;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = s.parse::<Cutoff>() {
            let again: Cutoff = c.to_string().parse().expect("display output must parse");
            assert_eq!(again, c);
        }
    }
});
