#![no_main]
use libfuzzer_sys::fuzz_target;
use transmission::symbols::parse_symbol;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for n in [2, 3] {
        if let Ok(p) = parse_symbol(text, n) {
            let _ = p.eval(&vec![0.6; p.dimension]);
        }
    }
});
