#![no_main]
use libfuzzer_sys::fuzz_target;
use transmission::symbols::TabulatedSymbol;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = TabulatedSymbol::parse(text) {
        let again = TabulatedSymbol::parse(&t.to_text()).expect("own output parses");
        assert_eq!(again.nodes.len(), t.nodes.len());
        let _ = t.to_symbol();
    }
});
