#![no_main]
use libfuzzer_sys::fuzz_target;
use transmission::halfspace_ops::GridFunction;

fuzz_target!(|data: &[u8]| {
    if let Ok(g) = GridFunction::from_bytes(data) {
        let bytes = g.to_bytes();
        let back = GridFunction::from_bytes(&bytes).expect("own output decodes");
        assert_eq!(back.to_bytes(), bytes);
    }
});
