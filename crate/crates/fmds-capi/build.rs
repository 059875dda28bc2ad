use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let header = crate_dir.join("include/fmds.h");
    // The header is a build product kept in-tree so C consumers can use the
    // crate without running cargo; regenerate it whenever the surface moves.
    cbindgen::generate(&crate_dir)
        .expect("cbindgen failed to generate include/fmds.h")
        .write_to_file(&header);
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
