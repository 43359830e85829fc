use std::env;
use std::path::Path;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    let header = Path::new(&crate_dir).join("include").join("optorouter.h");
    cbindgen::generate(&crate_dir)
        .expect("failed to generate the C header")
        .write_to_file(header);
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
