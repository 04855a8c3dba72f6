//! The generated header must compile as C and as C++.

use std::path::Path;
use std::process::Command;

fn compiles(compiler: &str, lang: &str) -> Option<bool> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let src = tempfile::Builder::new().suffix(".c").tempfile().unwrap();
    std::fs::write(
        src.path(),
        "#include \"dense_coding.h\"\nint main(void) { DcSearchOptions o = dc_search_options_default(); (void)o; return DC_STATUS_OK; }\n",
    )
    .unwrap();
    let status = Command::new(compiler)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"])
        .arg(dir.join("include"))
        .arg(src.path())
        .status()
        .ok()?;
    Some(status.success())
}

#[test]
fn header_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dense_coding.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["dc_search", "dc_verify", "dc_simulate", "dc_message_set_free", "dc_last_error", "DC_STATUS_INFEASIBLE"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    match (compiles("cc", "c"), compiles("c++", "c++")) {
        (Some(c), Some(cpp)) => assert!(c && cpp, "header does not compile"),
        _ => eprintln!("no C compiler found; syntax check skipped"),
    }
}
