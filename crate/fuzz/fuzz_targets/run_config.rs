#![no_main]
use libfuzzer_sys::fuzz_target;
use transmission::cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = RunConfig::from_toml(text) {
        let _ = c.validate();
        let text = c.to_toml();
        let back = RunConfig::from_toml(&text).expect("own output parses");
        assert_eq!(back.to_toml(), text);
    }
});
