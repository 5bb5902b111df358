//! Replays the checked-in fuzz seeds through the same round-trip checks as
//! the fuzz targets, so the decoders are exercised on stable toolchains.
use std::path::PathBuf;
use transmission::cli::RunConfig;
use transmission::halfspace_ops::GridFunction;
use transmission::symbols::{parse_symbol, TabulatedSymbol};
use transmission::wiener_hopf::{parse_factor_dump, write_factor_dump};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(b: &[u8]) -> &str {
    std::str::from_utf8(b).unwrap()
}

#[test]
fn symbol_name_seeds() {
    let mut ok = 0;
    for (_, b) in seeds("symbol_name") {
        for n in [2, 3] {
            if let Ok(p) = parse_symbol(text(&b), n) {
                assert!(p.eval(&vec![0.6; p.dimension]).is_finite());
                ok += 1;
            }
        }
    }
    assert!(ok > 0);
}

#[test]
fn tabulated_symbol_seeds() {
    for (name, b) in seeds("tabulated_symbol") {
        match TabulatedSymbol::parse(text(&b)) {
            Ok(t) => {
                let again = TabulatedSymbol::parse(&t.to_text()).unwrap();
                assert_eq!(again.to_text(), t.to_text(), "{name}");
            }
            Err(_) => assert!(name.starts_with("bad"), "{name} should parse"),
        }
    }
}

#[test]
fn run_config_seeds() {
    for (name, b) in seeds("run_config") {
        match RunConfig::from_toml(text(&b)) {
            Ok(c) => {
                let back = RunConfig::from_toml(&c.to_toml()).unwrap();
                assert_eq!(back, c, "{name}");
                assert_eq!(c.validate().is_ok(), name != "empty_suite.toml", "{name}");
            }
            Err(_) => assert_eq!(name, "unknown_key.toml"),
        }
    }
}

#[test]
fn grid_function_seeds() {
    for (name, b) in seeds("grid_function") {
        match GridFunction::from_bytes(&b) {
            Ok(g) => assert_eq!(g.to_bytes(), b, "{name}"),
            Err(_) => assert_eq!(name, "truncated"),
        }
    }
}

#[test]
fn factor_dump_seeds() {
    for (name, b) in seeds("factor_dump") {
        match parse_factor_dump(text(&b)) {
            Ok(f) => assert_eq!(write_factor_dump(&f), text(&b), "{name}"),
            Err(_) => assert_eq!(name, "truncated"),
        }
    }
}
