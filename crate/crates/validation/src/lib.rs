//! Acceptance suite for the solver library and the experiment harness.
//!
//! The criteria live in `tests/acceptance.rs`, a custom-harness target that
//! prints one PASS/FAIL line per criterion. The package sorts after the
//! crates it checks, so their suites always run first.
