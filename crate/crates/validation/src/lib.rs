//! Acceptance criteria for spinforge. The harness is `tests/acceptance.rs`;
//! run it with `cargo test -p spinforge-validation`.
