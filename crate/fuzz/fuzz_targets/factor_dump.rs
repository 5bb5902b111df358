#![no_main]
use libfuzzer_sys::fuzz_target;
use transmission::wiener_hopf::{parse_factor_dump, write_factor_dump};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_factor_dump(text) {
        let out = write_factor_dump(&f);
        let back = parse_factor_dump(&out).expect("own output parses");
        assert_eq!(write_factor_dump(&back), out);
    }
});
