use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    let out_dir = PathBuf::from(env::var("OUT_DIR").unwrap());
    let include_dir = PathBuf::from(&crate_dir).join("include");

    let config =
        cbindgen::Config::from_file(PathBuf::from(&crate_dir).join("cbindgen.toml"))
            .expect("cbindgen.toml parses");

    let bindings = cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation succeeds");

    bindings.write_to_file(out_dir.join("rumorsim.h"));

    // Also keep a copy under include/ for direct consumption by C projects.
    std::fs::create_dir_all(&include_dir).expect("include dir");
    bindings.write_to_file(include_dir.join("rumorsim.h"));

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
