//! Reference scenarios live in `tests/acceptance.rs`; run with `cargo test -p dnp-validation`.
